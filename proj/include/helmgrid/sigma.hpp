#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "helmgrid/hem.hpp"
#include "helmgrid/netmodel.hpp"
#include "helmgrid/series.hpp"

namespace helmgrid {

/// Literal two-bus system: slack at v0 feeding one PQ bus through z.
struct TwoBusEquivalent {
    Complex z;
    Complex s;     // injection at the PQ bus (load negative)
    Complex v0;

    Complex sigma() const { return z * std::conj(s) / std::norm(v0); }
};

struct SigmaIndex {
    int bus = 0;                 // external id
    Complex sigma;
    double sigma_r = 0.0;
    double sigma_i = 0.0;
    double condition = 0.0;      // 0.25 + sigma_r - sigma_i^2
    Complex u;                   // normalized voltage at the evaluated point
};

struct TwoBusRoots {
    Complex u_high;
    Complex u_low;
    bool real_radicand = true;   // false past the two-bus SNBP
};

struct SnbpScanSpec {
    double lambda_lo = 1.0;
    double lambda_ceiling = 5.0;
    int n_terms = 50;
    double resolution = 0.005;        // relative bisection width
    int trace_points = 25;            // coarse grid emitted for plotting
    // Condition below this counts as negative. The Pade evaluation of the
    // sigma series carries a noise floor of roughly 1e-4..1e-3 just below the
    // nose on ~100-bus systems at 50 terms; a hair-trigger threshold would
    // detect "negativity" slightly before the true SNBP and break the
    // upper-bound property of the estimate.
    double negative_tol = -3e-3;
    double singularity_imag_tol = 1e-3;
};

enum class SnbpMethod { SigmaNegative, VoltagePoleZero };

struct SnbpEstimate {
    std::optional<double> lambda_star;            // negative-sigma-condition estimate
    int detecting_bus = -1;
    SnbpMethod method = SnbpMethod::SigmaNegative;
    std::optional<double> lambda_pole_zero;       // voltage pole/zero upper bound
    std::vector<std::pair<double, double>> scan_trace;  // (lambda, min condition)
};

/// Both roots of the two-bus quadratic for a given sigma.
TwoBusRoots two_bus_roots(Complex sigma);

double sigma_condition(Complex sigma);

/// sigma from a solved normalized voltage: u*conj(u) - conj(u).
Complex sigma_from_voltage(Complex u);

/// sigma(alpha) such that alpha*sigma(alpha) = (u(alpha) - 1) * u_reflected(alpha),
/// with u_reflected the coefficient-conjugated series of u.
PowerSeries sigma_series(const PowerSeries& u_series, const PowerSeries& u_reflected);

/// Per non-slack bus sigma indices at loading lambda, via the series route.
std::vector<SigmaIndex> sigma_indices(const NetworkModel& model, double lambda,
                                      int n_terms = 50);

/// Min-over-buses sigma condition at loading lambda (series + Pade route).
double min_sigma_condition(const NetworkModel& model, double lambda, int n_terms,
                           int* argmin_bus = nullptr);

SnbpEstimate estimate_snbp(const NetworkModel& model, const SnbpScanSpec& scan,
                           int threads = 1);

}  // namespace helmgrid

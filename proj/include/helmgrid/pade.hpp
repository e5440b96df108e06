#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "helmgrid/series.hpp"

namespace helmgrid {

struct PadeDefectError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleProximityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rational [L/M] approximant; den_coeffs[0] == 1.
struct PadeApproximant {
    std::vector<std::complex<double>> num_coeffs;
    std::vector<std::complex<double>> den_coeffs;
    int L = 0;
    int M = 0;
};

struct SingularityReport {
    std::vector<double> poles;   // near-real positive roots of the denominator
    std::vector<double> zeros;   // near-real positive roots of the numerator
    std::optional<double> nearest_positive_real;
};

/// Solve the linear Pade system for the given order. Throws PadeDefectError
/// when the Toeplitz system is singular; callers may retry with (L-1, M-1).
PadeApproximant build_pade(const PowerSeries& series, int L, int M);

/// Near-diagonal default: M = floor(N/2), L = N-1-M with N = terms available.
PadeApproximant build_pade(const PowerSeries& series);

/// Like build_pade but steps the order down on defects until it succeeds.
PadeApproximant build_pade_robust(const PowerSeries& series);

std::complex<double> eval_pade(const PadeApproximant& pa, double alpha);

/// Evaluate a series at alpha through a near-diagonal Pade approximant,
/// falling back to direct summation for (near-)constant series.
std::complex<double> pade_eval_series(const PowerSeries& series, double alpha);

/// Roots of a complex-coefficient polynomial via the companion matrix.
std::vector<std::complex<double>> poly_roots(const std::vector<std::complex<double>>& coeffs);

/// Near-real positive poles/zeros of the near-diagonal Pade approximant.
SingularityReport nearest_real_singularity(const PowerSeries& series,
                                           double imag_tol = 1e-6);

}  // namespace helmgrid

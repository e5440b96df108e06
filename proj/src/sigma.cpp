#include "helmgrid/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "helmgrid/pade.hpp"
#include "parallel.hpp"

namespace helmgrid {

using Cx = std::complex<double>;

TwoBusRoots two_bus_roots(Cx sigma) {
    double radicand = 0.25 + sigma.real() - sigma.imag() * sigma.imag();
    TwoBusRoots roots;
    roots.real_radicand = radicand >= 0.0;
    Cx root = std::sqrt(Cx{radicand, 0.0});
    Cx offset{0.0, sigma.imag()};
    roots.u_high = 0.5 + root + offset;
    roots.u_low = 0.5 - root + offset;
    return roots;
}

double sigma_condition(Cx sigma) {
    return 0.25 + sigma.real() - sigma.imag() * sigma.imag();
}

Cx sigma_from_voltage(Cx u) {
    return u * std::conj(u) - std::conj(u);
}

PowerSeries sigma_series(const PowerSeries& u_series, const PowerSeries& u_reflected) {
    if (u_series.n_terms() != u_reflected.n_terms()) {
        throw EmbeddingError("sigma series inputs have mismatched lengths");
    }
    PowerSeries shifted = u_series;
    shifted.coeffs[0] -= 1.0;
    PowerSeries prod = mul(shifted, u_reflected);
    // alpha * sigma(alpha) = prod, so sigma[k] = prod[k+1]
    PowerSeries sigma;
    sigma.coeffs.assign(prod.coeffs.begin() + 1, prod.coeffs.end());
    return sigma;
}

std::vector<SigmaIndex> sigma_indices(const NetworkModel& model, double lambda, int n_terms) {
    EmbeddedSystem sys = embed(model, EmbeddingMode::all_scaling(lambda));
    HemSolution sol = compute_series(sys, n_terms);

    std::vector<SigmaIndex> out;
    for (int i : model.nonslack_indices()) {
        const PowerSeries& u = sol.u[static_cast<size_t>(i)];
        PowerSeries sig = sigma_series(u, conj_reflect(u));
        SigmaIndex idx;
        idx.bus = model.buses[static_cast<size_t>(i)].id;
        idx.sigma = pade_eval_series(sig, 1.0);
        idx.sigma_r = idx.sigma.real();
        idx.sigma_i = idx.sigma.imag();
        idx.condition = sigma_condition(idx.sigma);
        idx.u = pade_eval_series(u, 1.0);
        out.push_back(idx);
    }
    return out;
}

double min_sigma_condition(const NetworkModel& model, double lambda, int n_terms,
                           int* argmin_bus) {
    auto indices = sigma_indices(model, lambda, n_terms);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& idx : indices) {
        if (idx.condition < best) {
            best = idx.condition;
            if (argmin_bus) *argmin_bus = idx.bus;
        }
    }
    return best;
}

SnbpEstimate estimate_snbp(const NetworkModel& model, const SnbpScanSpec& scan, int threads) {
    SnbpEstimate est;
    est.method = SnbpMethod::SigmaNegative;

    auto negative_at = [&](double lambda, int* bus) {
        try {
            return min_sigma_condition(model, lambda, scan.n_terms, bus) < scan.negative_tol;
        } catch (const PadeDefectError&) {
            // a fully defective table deep past the SNBP also flags non-existence
            return true;
        }
    };

    // coarse trace for plotting, parallel over grid points
    est.scan_trace.resize(static_cast<size_t>(scan.trace_points));
    detail::parallel_for(scan.trace_points, threads, [&](int k) {
        double lambda = scan.lambda_lo +
                        (scan.lambda_ceiling - scan.lambda_lo) * k / (scan.trace_points - 1.0);
        double cond;
        try {
            cond = min_sigma_condition(model, lambda, scan.n_terms, nullptr);
        } catch (const PadeDefectError&) {
            cond = std::numeric_limits<double>::quiet_NaN();
        }
        est.scan_trace[static_cast<size_t>(k)] = {lambda, cond};
    });

    // Bracket on the first trace interval that dips below the threshold. Past
    // the SNBP the approximant output oscillates, so bisecting the whole
    // [lo, ceiling] range can lock onto a spurious later crossing; the trace
    // grid is the resolution at which the earliest crossing is located.
    auto below = [&](double cond) {
        return std::isnan(cond) || cond < scan.negative_tol;
    };
    int first_neg = -1;
    for (int k = 0; k < scan.trace_points; ++k) {
        if (below(est.scan_trace[static_cast<size_t>(k)].second)) {
            first_neg = k;
            break;
        }
    }
    if (first_neg == 0) {
        est.lambda_star = scan.lambda_lo;
        int bus = -1;
        negative_at(scan.lambda_lo, &bus);
        est.detecting_bus = bus;
    } else if (first_neg > 0) {
        double lo = est.scan_trace[static_cast<size_t>(first_neg - 1)].first;
        double hi = est.scan_trace[static_cast<size_t>(first_neg)].first;
        int bus = -1;
        negative_at(hi, &bus);
        while ((hi - lo) / hi > scan.resolution) {
            double mid = 0.5 * (lo + hi);
            int mid_bus = -1;
            if (negative_at(mid, &mid_bus)) {
                hi = mid;
                bus = mid_bus;
            } else {
                lo = mid;
            }
        }
        est.lambda_star = hi;
        est.detecting_bus = bus;
    }

    // voltage pole/zero upper bound: one embedding at the ceiling, survey all buses
    {
        EmbeddedSystem sys = embed(model, EmbeddingMode::all_scaling(scan.lambda_ceiling));
        HemSolution sol = compute_series(sys, scan.n_terms);
        std::optional<double> best_alpha;
        for (int i : model.nonslack_indices()) {
            try {
                auto rep = nearest_real_singularity(sol.v[static_cast<size_t>(i)],
                                                    scan.singularity_imag_tol);
                if (rep.nearest_positive_real &&
                    (!best_alpha || *rep.nearest_positive_real < *best_alpha)) {
                    best_alpha = rep.nearest_positive_real;
                }
            } catch (const PadeDefectError&) {
                continue;
            }
        }
        if (best_alpha) est.lambda_pole_zero = *best_alpha * scan.lambda_ceiling;
    }
    return est;
}

}  // namespace helmgrid

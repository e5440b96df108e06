#include "helmgrid/pade.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace helmgrid {

using Cx = std::complex<double>;

namespace {

// strict: reject rank-deficient Toeplitz systems (the documented defect
// contract of the exact-order API). Non-strict: the system is often badly
// conditioned yet the resulting approximant still evaluates to full accuracy
// (spurious pole/zero pairs cancel), so solve through the conditioning and
// reject only solutions whose linear residual shows no valid solution exists.
PadeApproximant build_pade_impl(const PowerSeries& series, int L, int M, bool strict) {
    int need = L + M + 1;
    if (L < 0 || M < 0 || series.n_terms() < need) {
        throw PadeDefectError("series too short for [" + std::to_string(L) + "/" +
                              std::to_string(M) + "] approximant");
    }
    const auto& c = series.coeffs;
    auto coeff = [&](int k) -> Cx { return k < 0 ? Cx{0.0, 0.0} : c[static_cast<size_t>(k)]; };

    PadeApproximant pa;
    pa.L = L;
    pa.M = M;
    pa.den_coeffs.assign(static_cast<size_t>(M) + 1, Cx{0.0, 0.0});
    pa.den_coeffs[0] = Cx{1.0, 0.0};

    if (M > 0) {
        Eigen::MatrixXcd A(M, M);
        Eigen::VectorXcd rhs(M);
        for (int k = 1; k <= M; ++k) {
            for (int m = 1; m <= M; ++m) A(k - 1, m - 1) = coeff(L + k - m);
            rhs(k - 1) = -coeff(L + k);
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
        if (strict && lu.rank() < M) {
            throw PadeDefectError("singular Pade system at order [" + std::to_string(L) + "/" +
                                  std::to_string(M) + "]");
        }
        Eigen::VectorXcd b = lu.solve(rhs);
        if (!b.allFinite()) {
            throw PadeDefectError("non-finite Pade denominator at order [" + std::to_string(L) +
                                  "/" + std::to_string(M) + "]");
        }
        if (!strict) {
            double scale = A.cwiseAbs().maxCoeff() * std::max(1.0, b.cwiseAbs().maxCoeff()) +
                           rhs.cwiseAbs().maxCoeff();
            if ((A * b - rhs).cwiseAbs().maxCoeff() > 1e-7 * scale) {
                throw PadeDefectError("inconsistent Pade system at order [" + std::to_string(L) +
                                      "/" + std::to_string(M) + "]");
            }
        }
        for (int m = 1; m <= M; ++m) pa.den_coeffs[static_cast<size_t>(m)] = b(m - 1);
    }

    pa.num_coeffs.assign(static_cast<size_t>(L) + 1, Cx{0.0, 0.0});
    for (int k = 0; k <= L; ++k) {
        Cx acc{0.0, 0.0};
        for (int j = 0; j <= std::min(k, M); ++j) {
            acc += pa.den_coeffs[static_cast<size_t>(j)] * coeff(k - j);
        }
        pa.num_coeffs[static_cast<size_t>(k)] = acc;
    }
    return pa;
}

}  // namespace

PadeApproximant build_pade(const PowerSeries& series, int L, int M) {
    return build_pade_impl(series, L, M, true);
}

PadeApproximant build_pade(const PowerSeries& series) {
    int n = series.n_terms();
    int m = n / 2;
    int l = n - 1 - m;
    return build_pade(series, l, m);
}

PadeApproximant build_pade_robust(const PowerSeries& series) {
    int n = series.n_terms();
    int m = n / 2;
    int l = n - 1 - m;
    while (true) {
        try {
            return build_pade_impl(series, l, m, false);
        } catch (const PadeDefectError&) {
            if (m == 0) throw;
            --l;
            --m;
            if (l < 0) l = 0;
        }
    }
}

namespace {

Cx horner(const std::vector<Cx>& coeffs, double x) {
    Cx acc{0.0, 0.0};
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Series evaluation path: the Toeplitz system conditioning near a branch
// point costs 8-10 digits in double, which caps evaluated-voltage accuracy
// around 1e-6 close to the convergence boundary. Building and evaluating the
// approximant in extended precision (from double coefficients) recovers it.
using Cl = std::complex<long double>;

Cx eval_order_extended(const PowerSeries& series, int L, int M, double alpha) {
    const auto& c = series.coeffs;
    auto coeff = [&](int k) -> Cl {
        return k < 0 ? Cl{0.0L, 0.0L} : Cl(c[static_cast<size_t>(k)]);
    };

    std::vector<Cl> den(static_cast<size_t>(M) + 1, Cl{0.0L, 0.0L});
    den[0] = Cl{1.0L, 0.0L};
    if (M > 0) {
        using MatL = Eigen::Matrix<Cl, Eigen::Dynamic, Eigen::Dynamic>;
        using VecL = Eigen::Matrix<Cl, Eigen::Dynamic, 1>;
        MatL A(M, M);
        VecL rhs(M);
        for (int k = 1; k <= M; ++k) {
            for (int m = 1; m <= M; ++m) A(k - 1, m - 1) = coeff(L + k - m);
            rhs(k - 1) = -coeff(L + k);
        }
        VecL b = Eigen::FullPivLU<MatL>(A).solve(rhs);
        if (!b.allFinite()) {
            throw PadeDefectError("non-finite Pade denominator at order [" + std::to_string(L) +
                                  "/" + std::to_string(M) + "]");
        }
        long double scale = A.cwiseAbs().maxCoeff() *
                                std::max<long double>(1.0L, b.cwiseAbs().maxCoeff()) +
                            rhs.cwiseAbs().maxCoeff();
        if ((A * b - rhs).cwiseAbs().maxCoeff() > 1e-7L * scale) {
            throw PadeDefectError("inconsistent Pade system at order [" + std::to_string(L) +
                                  "/" + std::to_string(M) + "]");
        }
        for (int m = 1; m <= M; ++m) den[static_cast<size_t>(m)] = b(m - 1);
    }

    std::vector<Cl> num(static_cast<size_t>(L) + 1, Cl{0.0L, 0.0L});
    for (int k = 0; k <= L; ++k) {
        Cl acc{0.0L, 0.0L};
        for (int j = 0; j <= std::min(k, M); ++j) acc += den[static_cast<size_t>(j)] * coeff(k - j);
        num[static_cast<size_t>(k)] = acc;
    }

    auto horner_ld = [&](const std::vector<Cl>& p) {
        Cl acc{0.0L, 0.0L};
        for (auto it = p.rbegin(); it != p.rend(); ++it) acc = *it + acc * (long double)alpha;
        return acc;
    };
    Cl d = horner_ld(den);
    if (std::abs(d) < 1e-14L) {
        throw PoleProximityError("Pade denominator vanishes near alpha = " +
                                 std::to_string(alpha));
    }
    Cl r = horner_ld(num) / d;
    return Cx(static_cast<double>(r.real()), static_cast<double>(r.imag()));
}

}  // namespace

Cx eval_pade(const PadeApproximant& pa, double alpha) {
    Cx den = horner(pa.den_coeffs, alpha);
    if (std::abs(den) < 1e-14) {
        throw PoleProximityError("Pade denominator vanishes near alpha = " +
                                 std::to_string(alpha));
    }
    return horner(pa.num_coeffs, alpha) / den;
}

Cx pade_eval_series(const PowerSeries& series, double alpha) {
    // constant or effectively constant series need no rational continuation
    double tail = 0.0;
    for (int k = 1; k < series.n_terms(); ++k) tail += std::abs(series[k]);
    if (series.n_terms() < 3 || tail < 1e-13 * (1.0 + std::abs(series[0]))) {
        return series.eval(alpha);
    }
    int n = series.n_terms();
    int m = n / 2;
    int l = n - 1 - m;
    while (true) {
        try {
            return eval_order_extended(series, l, m, alpha);
        } catch (const PadeDefectError&) {
            if (m == 0) throw;
            --l;
            --m;
            if (l < 0) l = 0;
        }
    }
}

std::vector<Cx> poly_roots(const std::vector<Cx>& coeffs) {
    // trim negligible leading (highest-order) coefficients
    int deg = static_cast<int>(coeffs.size()) - 1;
    double scale = 0.0;
    for (const auto& c : coeffs) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) return {};
    while (deg > 0 && std::abs(coeffs[static_cast<size_t>(deg)]) < 1e-14 * scale) --deg;
    if (deg < 1) return {};

    Cx lead = coeffs[static_cast<size_t>(deg)];
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[static_cast<size_t>(i)] / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    std::vector<Cx> roots(static_cast<size_t>(deg));
    for (int i = 0; i < deg; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

SingularityReport nearest_real_singularity(const PowerSeries& series, double imag_tol) {
    SingularityReport rep;
    PadeApproximant pa = build_pade_robust(series);

    auto collect = [&](const std::vector<Cx>& coeffs, std::vector<double>& out) {
        for (const auto& r : poly_roots(coeffs)) {
            double mag = std::max(1.0, std::abs(r));
            if (std::abs(r.imag()) <= imag_tol * mag && r.real() > 0.0) {
                out.push_back(r.real());
            }
        }
        std::sort(out.begin(), out.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        });
    };
    collect(pa.den_coeffs, rep.poles);
    collect(pa.num_coeffs, rep.zeros);

    for (double p : rep.poles) {
        if (!rep.nearest_positive_real || p < *rep.nearest_positive_real) {
            rep.nearest_positive_real = p;
        }
    }
    for (double z : rep.zeros) {
        if (!rep.nearest_positive_real || z < *rep.nearest_positive_real) {
            rep.nearest_positive_real = z;
        }
    }
    return rep;
}

}  // namespace helmgrid

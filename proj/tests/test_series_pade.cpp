#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "helmgrid/pade.hpp"
#include "helmgrid/series.hpp"

using namespace helmgrid;
using Cx = std::complex<double>;

namespace {

PowerSeries random_series(std::mt19937& rng, int n, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    std::vector<Cx> c(static_cast<size_t>(n));
    for (auto& v : c) v = Cx{d(rng), d(rng)};
    if (std::abs(c[0]) < 0.1) c[0] += 1.0;  // keep invertible
    return PowerSeries(std::move(c));
}

// independent re-expansion of a rational function into a power series
PowerSeries expand_rational(const PadeApproximant& pa, int n) {
    PowerSeries num(pa.num_coeffs), den(pa.den_coeffs);
    num.coeffs.resize(static_cast<size_t>(n), Cx{0, 0});
    den.coeffs.resize(static_cast<size_t>(n), Cx{0, 0});
    return mul(num, reciprocal(den));
}

}  // namespace

TEST_CASE("series arithmetic basics") {
    PowerSeries a({{1, 0}, {2, 0}, {3, 0}});
    PowerSeries b({{0, 1}, {1, -1}, {0, 0}});
    PowerSeries s = add(a, b);
    CHECK(s[0] == Cx{1, 1});
    CHECK(s[1] == Cx{3, -1});
    PowerSeries d = sub(s, b);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(d[k] - a[k]) < 1e-15);
    // Cauchy product of (1+x)^2
    PowerSeries one_x({{1, 0}, {1, 0}, {0, 0}});
    PowerSeries sq = mul(one_x, one_x);
    CHECK(sq[0] == Cx{1, 0});
    CHECK(sq[1] == Cx{2, 0});
    CHECK(sq[2] == Cx{1, 0});
}

TEST_CASE("series reciprocal is a convolution inverse") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        PowerSeries a = random_series(rng, 12);
        PowerSeries prod = mul(a, reciprocal(a));
        CHECK(std::abs(prod[0] - 1.0) < 1e-12);
        for (int k = 1; k < prod.n_terms(); ++k) CHECK(std::abs(prod[k]) < 1e-10);
    }
}

TEST_CASE("conjugate reflection evaluates to the conjugate on the real axis") {
    std::mt19937 rng(13);
    PowerSeries a = random_series(rng, 9);
    for (double x : {0.0, 0.3, 0.9, -0.4}) {
        CHECK(std::abs(conj_reflect(a).eval(x) - std::conj(a.eval(x))) < 1e-13);
    }
}

TEST_CASE("geometric series is reproduced exactly by a [1/1] approximant") {
    // 1/(1-x): coefficients all ones
    PowerSeries geo(std::vector<Cx>(8, Cx{1, 0}));
    PadeApproximant pa = build_pade(geo, 1, 1);
    CHECK(std::abs(eval_pade(pa, 0.5) - 2.0) < 1e-12);
    CHECK(std::abs(eval_pade(pa, 0.999) - 1000.0) < 1e-7 * 1000.0);
    CHECK(std::abs(eval_pade(pa, -9.0) - 0.1) < 1e-12);
}

TEST_CASE("exponential series: Pade beats the truncated sum at the boundary") {
    std::vector<Cx> c(8);
    double fact = 1.0;
    for (int k = 0; k < 8; ++k) {
        c[static_cast<size_t>(k)] = 1.0 / fact;
        fact *= k + 1.0;
    }
    PowerSeries exp_series(c);
    PadeApproximant pa = build_pade(exp_series, 3, 4);
    CHECK(std::abs(eval_pade(pa, 2.0) - std::exp(2.0)) < 5e-3);
    double direct_err = std::abs(exp_series.eval(2.0) - std::exp(2.0));
    double pade_err = std::abs(eval_pade(pa, 2.0) - std::exp(2.0));
    CHECK(pade_err < direct_err);
}

TEST_CASE("approximant re-expands to the original series through order L+M") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 8; ++trial) {
        PowerSeries a = random_series(rng, 11, 0.5);
        PadeApproximant pa = build_pade_robust(a);
        PowerSeries back = expand_rational(pa, a.n_terms());
        for (int k = 0; k <= pa.L + pa.M; ++k) {
            CHECK(std::abs(back[k] - a[k]) < 1e-7);
        }
    }
}

TEST_CASE("defective table steps down and still matches") {
    // geometric series makes every Toeplitz block beyond [1/1] singular
    PowerSeries geo(std::vector<Cx>(9, Cx{1, 0}));
    CHECK_THROWS_AS(build_pade(geo, 2, 2), PadeDefectError);
    PadeApproximant pa = build_pade_robust(geo);
    CHECK(std::abs(eval_pade(pa, 0.5) - 2.0) < 1e-10);
}

TEST_CASE("evaluation near a denominator root raises PoleProximityError") {
    PowerSeries geo(std::vector<Cx>(6, Cx{1, 0}));
    PadeApproximant pa = build_pade(geo, 1, 1);
    CHECK_THROWS_AS(eval_pade(pa, 1.0), PoleProximityError);
}

TEST_CASE("near-diagonal default order splits the available terms") {
    std::mt19937 rng(19);
    PowerSeries a = random_series(rng, 10);
    PadeApproximant pa = build_pade(a);
    CHECK(pa.M == 5);
    CHECK(pa.L == 4);
    CHECK(pa.L + pa.M + 1 == a.n_terms());
}

TEST_CASE("polynomial roots via the companion matrix") {
    // (x-1)(x-2)(x+3) = x^3 - 7x + 6, coefficients low to high
    std::vector<Cx> coeffs = {{6, 0}, {-7, 0}, {0, 0}, {1, 0}};
    auto roots = poly_roots(coeffs);
    REQUIRE(roots.size() == 3);
    for (Cx target : {Cx{1, 0}, Cx{2, 0}, Cx{-3, 0}}) {
        double best = 1e9;
        for (Cx r : roots) best = std::min(best, std::abs(r - target));
        CHECK(best < 1e-10);
    }
    // leading zeros are trimmed
    coeffs.push_back(Cx{0, 0});
    CHECK(poly_roots(coeffs).size() == 3);
}

TEST_CASE("nearest real singularity of the geometric series is 1") {
    PowerSeries geo(std::vector<Cx>(20, Cx{1, 0}));
    SingularityReport rep = nearest_real_singularity(geo);
    REQUIRE(rep.nearest_positive_real.has_value());
    CHECK(*rep.nearest_positive_real == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("branch-point singularity of 1/sqrt(1-x) is located") {
    // central binomial coefficients / 4^k
    std::vector<Cx> c(40);
    double v = 1.0;
    for (int k = 0; k < 40; ++k) {
        c[static_cast<size_t>(k)] = v;
        v *= (k + 0.5) / (k + 1.0);
    }
    SingularityReport rep = nearest_real_singularity(PowerSeries(c), 1e-3);
    REQUIRE(rep.nearest_positive_real.has_value());
    CHECK(*rep.nearest_positive_real == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pade_eval_series falls back to direct summation for constants") {
    PowerSeries c = PowerSeries::constant(Cx{2.5, -1.0}, 12);
    CHECK(std::abs(pade_eval_series(c, 0.7) - Cx{2.5, -1.0}) < 1e-14);
    PowerSeries tiny({{1.0, 0.0}, {0.0, 0.0}});
    CHECK(std::abs(pade_eval_series(tiny, 1.0) - 1.0) < 1e-14);
}

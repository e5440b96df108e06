#include <doctest.h>

#include <cmath>
#include <complex>

#include "helmgrid/hem.hpp"
#include "helmgrid/modal.hpp"
#include "helmgrid/netmodel.hpp"
#include "helmgrid/pade.hpp"
#include "helmgrid/series.hpp"

using namespace helmgrid;
using Cx = std::complex<double>;

namespace {

std::string fixture(const std::string& name) {
    return std::string(HELMGRID_FIXTURE_DIR) + "/" + name;
}

// Maclaurin coefficients of the closed-form two-bus voltage for a purely
// reactive branch: u(a) = 0.5 + sqrt(0.25 - si^2 a^2) + j si a, derived by
// binomial expansion of the square root.
std::vector<Cx> two_bus_reference(double sigma_i, int n) {
    std::vector<Cx> c(static_cast<size_t>(n), Cx{0, 0});
    double x = -4.0 * sigma_i * sigma_i;  // sqrt(0.25(1 + x a^2)) with x = -4 si^2
    double binom = 1.0;                   // C(1/2, k)
    for (int k = 0; 2 * k < n; ++k) {
        c[static_cast<size_t>(2 * k)] += 0.5 * binom * std::pow(x, k);
        binom *= (0.5 - k) / (k + 1.0);
    }
    c[0] += 0.5;
    if (n > 1) c[1] += Cx{0.0, sigma_i};
    return c;
}

}  // namespace

TEST_CASE("two-bus series coefficients match the closed form") {
    NetworkModel m = load_case(fixture("twobus.json"));
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.0));
    HemSolution sol = compute_series(sys, 16);
    // z = j0.25, S = -1, V0 = 1 -> sigma = -0.25j
    auto ref = two_bus_reference(-0.25, 16);
    const PowerSeries& u = sol.u[1];
    for (int k = 0; k < 16; ++k) {
        CHECK(std::abs(u[k] - ref[static_cast<size_t>(k)]) < 1e-12);
    }
    // evaluated voltage agrees with the quadratic's high root at alpha = 1
    Cx expect = 0.5 + std::sqrt(0.25 - 0.0625) + Cx{0.0, -0.25};
    CHECK(std::abs(pade_eval_series(u, 1.0) - expect) < 1e-8);
}

TEST_CASE("germ is the flat slack profile and series start there") {
    NetworkModel m = load_case(fixture("case118.m"));
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.0));
    Cx v0 = m.slack_voltage();
    for (int i = 0; i < m.size(); ++i) CHECK(std::abs(sys.germ()(i) - v0) < 1e-14);
    CHECK(sys.germ_residual() < 1e-12);
    HemSolution sol = compute_series(sys, 5);
    Eigen::VectorXcd at0 = evaluate_solution(sol, 0.0, EvalMethod::DirectSum);
    CHECK((at0 - sys.germ()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("recursion satisfies the embedded equations order by order") {
    NetworkModel m = load_case(fixture("case14.m"));
    int n_terms = 12;
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.3));
    HemSolution sol = compute_series(sys, n_terms);

    Eigen::VectorXcd row_sums = Eigen::VectorXcd::Zero(m.size());
    for (int col = 0; col < m.ybus.outerSize(); ++col) {
        for (SparseComplex::InnerIterator it(m.ybus, col); it; ++it) {
            row_sums(it.row()) += it.value();
        }
    }
    Eigen::MatrixXcd Y(m.ybus);
    for (int i : m.pq_indices()) {
        // reflected reciprocal series, rebuilt independently of the recursion
        PowerSeries w = reciprocal(conj_reflect(sol.v[static_cast<size_t>(i)]));
        for (int n = 1; n < n_terms; ++n) {
            Cx lhs{0, 0};
            for (int j = 0; j < m.size(); ++j) lhs += Y(i, j) * sol.v[static_cast<size_t>(j)][n];
            Cx rhs = 1.3 * std::conj(m.injection(i)) * w[n - 1] +
                     row_sums(i) * (sol.v[static_cast<size_t>(i)][n] -
                                    sol.v[static_cast<size_t>(i)][n - 1]);
            CHECK(std::abs(lhs - rhs) < 1e-10);
        }
    }
    // PV magnitude ramp: |V|^2 coefficients are linear in alpha
    for (int i : m.pv_indices()) {
        const PowerSeries& v = sol.v[static_cast<size_t>(i)];
        double vset = m.buses[static_cast<size_t>(i)].v_setpoint;
        for (int n = 1; n < n_terms; ++n) {
            Cx acc{0, 0};
            for (int j = 0; j <= n; ++j) acc += v[j] * std::conj(v[n - j]);
            double expect = (n == 1) ? vset * vset - std::norm(v[0]) : 0.0;
            CHECK(std::abs(acc - expect) < 1e-10);
        }
    }
}

TEST_CASE("case14 full-scaling solution matches Newton-Raphson") {
    NetworkModel m = load_case(fixture("case14.m"));
    SolvedState nr = newton_solve(m);
    REQUIRE(nr.converged);
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.0));
    HemSolution sol = compute_series(sys, 40);
    Eigen::VectorXcd pade = evaluate_solution(sol, 1.0, EvalMethod::Pade);
    CHECK((pade - nr.voltages).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(power_balance_residual(m, pade, 1.0) < 1e-10);
    Eigen::VectorXcd direct = evaluate_solution(sol, 1.0, EvalMethod::DirectSum);
    CHECK((direct - nr.voltages).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lambda target scales the solved operating point") {
    NetworkModel m = load_case(fixture("case14.m"));
    double lam = 1.8;
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(lam));
    HemSolution sol = compute_series(sys, 40);
    Eigen::VectorXcd v = evaluate_solution(sol, 1.0, EvalMethod::Pade);
    CHECK(power_balance_residual(m, v, lam) < 1e-9);
    // cross-check against Newton on the scaled injections
    SolvedState nr = newton_solve(scale_injections(m, lam));
    REQUIRE(nr.converged);
    CHECK((v - nr.voltages).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("series truncation is consistent") {
    NetworkModel m = load_case(fixture("case14.m"));
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.0));
    HemSolution longer = compute_series(sys, 25);
    HemSolution shorter = compute_series(sys, 10);
    for (int i = 0; i < m.size(); ++i) {
        for (int k = 0; k < 10; ++k) {
            CHECK(std::abs(longer.v[static_cast<size_t>(i)][k] -
                           shorter.v[static_cast<size_t>(i)][k]) < 1e-14);
        }
    }
}

TEST_CASE("direction-of-change germ is the solved base case") {
    NetworkModel m = load_case(fixture("case14.m"));
    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(m.size());
    delta(m.index_of(14)) = Cx{0.0, 0.05};
    EmbeddedSystem sys = embed(m, EmbeddingMode::direction_of_change(delta));
    SolvedState nr = newton_solve(m);
    CHECK((sys.germ() - nr.voltages).cwiseAbs().maxCoeff() < 1e-10);

    // zero direction keeps every series constant
    EmbeddedSystem flat = embed(m, EmbeddingMode::direction_of_change(
                                       Eigen::VectorXcd::Zero(m.size())));
    HemSolution sol = compute_series(flat, 8);
    for (int i = 0; i < m.size(); ++i) {
        for (int k = 1; k < 8; ++k) CHECK(std::abs(sol.v[static_cast<size_t>(i)][k]) < 1e-10);
    }
}

TEST_CASE("direction-of-change series tracks the perturbed power flow") {
    NetworkModel m = load_case(fixture("case14.m"));
    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(m.size());
    delta(m.index_of(9)) = Cx{-0.10, -0.04};
    delta(m.index_of(14)) = Cx{0.0, -0.06};
    EmbeddedSystem sys = embed(m, EmbeddingMode::direction_of_change(delta));
    HemSolution sol = compute_series(sys, 30);
    for (double alpha : {0.25, 0.6, 1.0}) {
        Eigen::VectorXcd v = evaluate_solution(sol, alpha, EvalMethod::Pade);
        CHECK(power_balance_residual(m, v, sys.mode().direction, alpha) < 1e-9);
    }
}

TEST_CASE("embedding rejects invalid setups") {
    NetworkModel m = load_case(fixture("case14.m"));
    Eigen::VectorXcd wrong = Eigen::VectorXcd::Zero(3);
    CHECK_THROWS_AS(embed(m, EmbeddingMode::direction_of_change(wrong)), EmbeddingError);
    Eigen::VectorXcd slack_bump = Eigen::VectorXcd::Zero(m.size());
    slack_bump(m.slack_index()) = Cx{0.1, 0.0};
    CHECK_THROWS_AS(embed(m, EmbeddingMode::direction_of_change(slack_bump)), EmbeddingError);
    EmbeddedSystem sys = embed(m, EmbeddingMode::all_scaling(1.0));
    CHECK_THROWS_AS(compute_series(sys, 1), EmbeddingError);
}

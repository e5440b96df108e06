#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "helmgrid/netmodel.hpp"

namespace helmgrid {

struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolvedState {
    Eigen::VectorXcd voltages;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
};

struct ModalResult {
    std::vector<double> eigenvalues;              // ascending
    std::vector<std::vector<double>> participation;  // [mode][pq position], k smallest modes
    std::vector<int> weakest_buses;               // external ids, by smallest-mode participation
    std::vector<int> pq_bus_ids;                  // row/column labels of the reduced Jacobian
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iterations = 30;
};

SolvedState newton_solve(const NetworkModel& model, const NewtonOptions& opts = {});

/// Newton from a given initial voltage vector (continuation warm starts).
SolvedState newton_solve_from(const NetworkModel& model, const Eigen::VectorXcd& start,
                              const NewtonOptions& opts = {});

/// Largest lambda at which Newton still converges, bisected to tol.
double bisect_collapse(const NetworkModel& model, double lo, double hi, double tol = 1e-3);

/// Q-V Schur complement J_R = J_QV - J_Qtheta * J_Ptheta^-1 * J_PV over PQ buses.
Eigen::MatrixXd reduced_jacobian(const NetworkModel& model, const SolvedState& state);

ModalResult participation_factors(const Eigen::MatrixXd& jr, int k,
                                  const std::vector<int>& pq_bus_ids);

struct RankingComparison {
    bool exact_match = false;
    double kendall_tau = 0.0;
    std::vector<std::pair<int, int>> per_position;  // (hem id, modal id) pairs
};

RankingComparison compare_rankings(const std::vector<int>& hem_order,
                                   const std::vector<int>& modal_order, int top_k);

/// Convert every PV bus to PQ using its solved base-case injections.
NetworkModel make_all_pq(const NetworkModel& model);

/// Multiply the reactive injection at every non-slack bus, leaving P untouched.
NetworkModel scale_reactive(const NetworkModel& model, double factor);

}  // namespace helmgrid

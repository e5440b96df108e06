#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "helmgrid/netmodel.hpp"
#include "helmgrid/series.hpp"

namespace helmgrid {

struct EmbeddingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-bus complex injection increment; alpha scales this on top of the base
/// case in direction-of-change mode. Slack entry must be zero.
struct ScalingDirection {
    Eigen::VectorXcd delta_s;
};

struct EmbeddingMode {
    enum class Kind { AllScaling, DirectionOfChange };
    Kind kind = Kind::AllScaling;
    double lambda_target = 1.0;   // AllScaling only
    ScalingDirection direction;   // DirectionOfChange only

    static EmbeddingMode all_scaling(double lambda) {
        EmbeddingMode m;
        m.kind = Kind::AllScaling;
        m.lambda_target = lambda;
        return m;
    }
    static EmbeddingMode direction_of_change(Eigen::VectorXcd delta_s) {
        EmbeddingMode m;
        m.kind = Kind::DirectionOfChange;
        m.direction.delta_s = std::move(delta_s);
        return m;
    }
};

/// Embedded algebraic system with its germ and the order-independent real
/// linear operator factorized once for all series orders.
class EmbeddedSystem {
public:
    /// base_voltages: optional precomputed base-case solution for
    /// direction-of-change germs (skips the internal Newton solve).
    EmbeddedSystem(const NetworkModel& model, EmbeddingMode mode,
                   const Eigen::VectorXcd* base_voltages = nullptr);

    const NetworkModel& model() const { return *model_; }
    const EmbeddingMode& mode() const { return mode_; }
    const Eigen::VectorXcd& germ() const { return germ_; }
    double germ_residual() const { return germ_residual_; }

private:
    friend struct HemRecursion;
    const NetworkModel* model_;
    EmbeddingMode mode_;
    Eigen::VectorXcd germ_;             // alpha = 0 voltages, full dimension
    Eigen::VectorXcd base_injection_;   // DoC: base complex injections (PV: solved Q)
    Eigen::VectorXcd shunt_corr_;       // AllScaling: Ybus row sums, alpha-scaled
                                        // so the no-load germ is exactly flat
    double germ_residual_ = 0.0;
    std::vector<int> nonslack_;         // internal bus indices
    std::vector<int> pv_;               // internal bus indices of PV buses
    std::vector<int> unknown_col_;      // bus index -> x-column (-1 for slack)
    std::vector<int> q_col_;            // bus index -> q-column (-1 if not PV)
    Eigen::SparseMatrix<double> op_;    // order-independent operator
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

struct HemSolution {
    std::vector<PowerSeries> v;   // per-bus voltage series, full dimension
    std::vector<PowerSeries> u;   // v normalized by the slack voltage
    EmbeddingMode mode;
    Complex v0;                   // slack voltage used for normalization
    double germ_residual = 0.0;
};

EmbeddedSystem embed(const NetworkModel& model, const EmbeddingMode& mode,
                     const Eigen::VectorXcd* base_voltages = nullptr);

/// Order-by-order recursion; one back-substitution per order on the germ LU.
HemSolution compute_series(const EmbeddedSystem& system, int n_terms);

enum class EvalMethod { DirectSum, Pade };

Eigen::VectorXcd evaluate_solution(const HemSolution& sol, double alpha, EvalMethod method);

/// Max power-balance mismatch (pu) of a voltage vector against the model with
/// all injections scaled by lambda. PV rows check held P and |V|; slack is
/// unconstrained.
double power_balance_residual(const NetworkModel& model, const Eigen::VectorXcd& voltages,
                              double lambda);

/// Residual for a direction-of-change operating point: base injections plus
/// alpha times the increment.
double power_balance_residual(const NetworkModel& model, const Eigen::VectorXcd& voltages,
                              const ScalingDirection& direction, double alpha);

}  // namespace helmgrid

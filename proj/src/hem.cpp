#include "helmgrid/hem.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "helmgrid/modal.hpp"
#include "helmgrid/pade.hpp"

namespace helmgrid {

using Cx = std::complex<double>;

namespace {

// Row sums of the admittance matrix. Subtracting them from the diagonal and
// scaling them with alpha instead makes the flat slack-voltage profile the
// exact zero-injection germ even with shunts, charging, and off-nominal taps.
Eigen::VectorXcd ybus_row_sums(const NetworkModel& model) {
    Eigen::VectorXcd sums = Eigen::VectorXcd::Zero(model.size());
    for (int col = 0; col < model.ybus.outerSize(); ++col) {
        for (Eigen::SparseMatrix<Cx>::InnerIterator it(model.ybus, col); it; ++it) {
            sums(it.row()) += it.value();
        }
    }
    return sums;
}

}  // namespace

EmbeddedSystem::EmbeddedSystem(const NetworkModel& model, EmbeddingMode mode,
                               const Eigen::VectorXcd* base_voltages)
    : model_(&model), mode_(std::move(mode)) {
    int n = model.size();
    int slack = model.slack_index();
    nonslack_ = model.nonslack_indices();
    pv_ = model.pv_indices();
    unknown_col_.assign(static_cast<size_t>(n), -1);
    q_col_.assign(static_cast<size_t>(n), -1);
    int ns = static_cast<int>(nonslack_.size());
    for (int p = 0; p < ns; ++p) unknown_col_[static_cast<size_t>(nonslack_[static_cast<size_t>(p)])] = 2 * p;
    for (size_t t = 0; t < pv_.size(); ++t) q_col_[static_cast<size_t>(pv_[t])] = 2 * ns + static_cast<int>(t);

    for (int i : pv_) {
        if (model.buses[static_cast<size_t>(i)].v_setpoint <= 0.0) {
            throw EmbeddingError("PV bus " + std::to_string(model.buses[static_cast<size_t>(i)].id) +
                                 " has no voltage setpoint");
        }
    }

    base_injection_ = Eigen::VectorXcd::Zero(n);
    shunt_corr_ = Eigen::VectorXcd::Zero(n);
    if (mode_.kind == EmbeddingMode::Kind::AllScaling) {
        shunt_corr_ = ybus_row_sums(model);
        germ_ = Eigen::VectorXcd::Constant(n, model.slack_voltage());
        Eigen::VectorXcd inj = model.ybus * germ_;
        germ_residual_ = 0.0;
        for (int i : nonslack_) {
            // residual of the embedded equations at alpha = 0: the corrected
            // operator annihilates the flat profile by construction
            Cx r = inj(i) - shunt_corr_(i) * germ_(i);
            germ_residual_ = std::max(germ_residual_, std::abs(germ_(i) * std::conj(r)));
        }
    } else {
        const auto& d = mode_.direction.delta_s;
        if (d.size() != n) throw EmbeddingError("direction dimension does not match bus count");
        if (std::abs(d(slack)) != 0.0) throw EmbeddingError("direction has nonzero slack increment");
        if (base_voltages) {
            germ_ = *base_voltages;
            germ_residual_ = power_balance_residual(model, germ_, 1.0);
        } else {
            SolvedState base = newton_solve(model);
            if (!base.converged) {
                throw EmbeddingError("base case does not converge; no germ for direction-of-change");
            }
            germ_ = base.voltages;
            germ_residual_ = base.max_mismatch;
        }
        Eigen::VectorXcd I = model.ybus * germ_;
        for (int i = 0; i < n; ++i) {
            const Bus& b = model.buses[static_cast<size_t>(i)];
            if (b.kind == BusKind::PQ) {
                base_injection_(i) = model.injection(i);
            } else {
                // slack and PV: take the solved injection (PV reactive output)
                base_injection_(i) = germ_(i) * std::conj(I(i));
                if (b.kind == BusKind::PV) {
                    base_injection_(i) = Cx{b.p_inject, base_injection_(i).imag()};
                }
            }
        }
    }

    // order-independent real operator over [Re V, Im V, q_pv]
    int dim = 2 * ns + static_cast<int>(pv_.size());
    std::vector<Eigen::Triplet<double>> trip;
    bool doc = mode_.kind == EmbeddingMode::Kind::DirectionOfChange;
    Eigen::SparseMatrix<Cx, Eigen::RowMajor> yrow = model.ybus;
    for (int p = 0; p < ns; ++p) {
        int i = nonslack_[static_cast<size_t>(p)];
        int row = 2 * p;
        for (Eigen::SparseMatrix<Cx, Eigen::RowMajor>::InnerIterator it(yrow, i); it; ++it) {
            int j = static_cast<int>(it.col());
            int cj = unknown_col_[static_cast<size_t>(j)];
            if (cj < 0) continue;  // slack column
            Cx a = it.value();
            if (!doc && j == i) a -= shunt_corr_(i);
            trip.emplace_back(row, cj, a.real());
            trip.emplace_back(row, cj + 1, -a.imag());
            trip.emplace_back(row + 1, cj, a.imag());
            trip.emplace_back(row + 1, cj + 1, a.real());
        }
        Cx w0 = 1.0 / std::conj(germ_(i));
        if (doc) {
            // conj(S_base) * W0^2 * conj(V_i[n]) kept on the left-hand side
            Cx b = std::conj(base_injection_(i)) * w0 * w0;
            int ci = unknown_col_[static_cast<size_t>(i)];
            trip.emplace_back(row, ci, b.real());
            trip.emplace_back(row, ci + 1, b.imag());
            trip.emplace_back(row + 1, ci, b.imag());
            trip.emplace_back(row + 1, ci + 1, -b.real());
        }
        int qc = q_col_[static_cast<size_t>(i)];
        if (qc >= 0) {
            Cx cq = Cx{0.0, 1.0} * w0;  // + j q[n] W0 on the left
            trip.emplace_back(row, qc, cq.real());
            trip.emplace_back(row + 1, qc, cq.imag());
        }
    }
    for (size_t t = 0; t < pv_.size(); ++t) {
        int i = pv_[t];
        int row = 2 * ns + static_cast<int>(t);
        int ci = unknown_col_[static_cast<size_t>(i)];
        trip.emplace_back(row, ci, 2.0 * germ_(i).real());
        trip.emplace_back(row, ci + 1, 2.0 * germ_(i).imag());
    }
    op_.resize(dim, dim);
    op_.setFromTriplets(trip.begin(), trip.end());
    lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(op_);
    if (lu_->info() != Eigen::Success) {
        throw EmbeddingError("singular germ operator");
    }
}

EmbeddedSystem embed(const NetworkModel& model, const EmbeddingMode& mode,
                     const Eigen::VectorXcd* base_voltages) {
    return EmbeddedSystem(model, mode, base_voltages);
}

struct HemRecursion {
    static HemSolution run(const EmbeddedSystem& sys, int n_terms) {
        const NetworkModel& model = *sys.model_;
        int n = model.size();
        int ns = static_cast<int>(sys.nonslack_.size());
        int npv = static_cast<int>(sys.pv_.size());
        bool doc = sys.mode_.kind == EmbeddingMode::Kind::DirectionOfChange;
        double lam = sys.mode_.lambda_target;

        std::vector<std::vector<Cx>> V(static_cast<size_t>(n)), W(static_cast<size_t>(n));
        std::vector<std::vector<double>> q(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            V[static_cast<size_t>(i)].assign(static_cast<size_t>(n_terms), Cx{0.0, 0.0});
            W[static_cast<size_t>(i)].assign(static_cast<size_t>(n_terms), Cx{0.0, 0.0});
            V[static_cast<size_t>(i)][0] = sys.germ_(i);
            W[static_cast<size_t>(i)][0] = 1.0 / std::conj(sys.germ_(i));
            if (sys.q_col_[static_cast<size_t>(i)] >= 0) {
                q[static_cast<size_t>(i)].assign(static_cast<size_t>(n_terms), 0.0);
            }
        }

        // magnitude-squared ramp for PV buses (AllScaling reaches the setpoint
        // at alpha = 1; direction-of-change holds the base magnitude)
        std::vector<double> mag_ramp(static_cast<size_t>(n), 0.0);
        if (!doc) {
            for (int i : sys.pv_) {
                double vset = model.buses[static_cast<size_t>(i)].v_setpoint;
                mag_ramp[static_cast<size_t>(i)] = vset * vset - std::norm(sys.germ_(i));
            }
        }

        Eigen::VectorXd rhs(2 * ns + npv);
        for (int order = 1; order < n_terms; ++order) {
            rhs.setZero();
            for (int p = 0; p < ns; ++p) {
                int i = sys.nonslack_[static_cast<size_t>(p)];
                const auto& Wi = W[static_cast<size_t>(i)];
                const auto& Vi = V[static_cast<size_t>(i)];
                Cx r{0.0, 0.0};
                if (doc) {
                    Cx t{0.0, 0.0};  // sum_{j=1..order-1} conj(V[j]) W[order-j]
                    for (int j = 1; j < order; ++j) t += std::conj(Vi[static_cast<size_t>(j)]) * Wi[static_cast<size_t>(order - j)];
                    r += std::conj(sys.base_injection_(i)) * (-Wi[0] * t);
                    r += std::conj(sys.mode_.direction.delta_s(i)) * Wi[static_cast<size_t>(order - 1)];
                } else {
                    Cx s = model.injection(i);
                    if (sys.q_col_[static_cast<size_t>(i)] >= 0) s = Cx{s.real(), 0.0};  // PV: P only
                    r += lam * std::conj(s) * Wi[static_cast<size_t>(order - 1)];
                    r -= sys.shunt_corr_(i) * Vi[static_cast<size_t>(order - 1)];
                }
                if (sys.q_col_[static_cast<size_t>(i)] >= 0) {
                    const auto& qi = q[static_cast<size_t>(i)];
                    Cx acc{0.0, 0.0};
                    for (int j = 1; j < order; ++j) acc += qi[static_cast<size_t>(j)] * Wi[static_cast<size_t>(order - j)];
                    r += Cx{0.0, -1.0} * acc;
                }
                rhs(2 * p) = r.real();
                rhs(2 * p + 1) = r.imag();
            }
            for (int t = 0; t < npv; ++t) {
                int i = sys.pv_[static_cast<size_t>(t)];
                const auto& Vi = V[static_cast<size_t>(i)];
                double m = (order == 1) ? mag_ramp[static_cast<size_t>(i)] : 0.0;
                Cx acc{0.0, 0.0};
                for (int j = 1; j < order; ++j) acc += Vi[static_cast<size_t>(j)] * std::conj(Vi[static_cast<size_t>(order - j)]);
                rhs(2 * ns + t) = m - acc.real();
            }

            Eigen::VectorXd x = sys.lu_->solve(rhs);
            for (int p = 0; p < ns; ++p) {
                int i = sys.nonslack_[static_cast<size_t>(p)];
                V[static_cast<size_t>(i)][static_cast<size_t>(order)] = Cx{x(2 * p), x(2 * p + 1)};
            }
            for (int t = 0; t < npv; ++t) {
                int i = sys.pv_[static_cast<size_t>(t)];
                q[static_cast<size_t>(i)][static_cast<size_t>(order)] = x(2 * ns + t);
            }
            for (int i = 0; i < n; ++i) {
                auto& Wi = W[static_cast<size_t>(i)];
                const auto& Vi = V[static_cast<size_t>(i)];
                Cx acc{0.0, 0.0};
                for (int j = 1; j <= order; ++j) acc += std::conj(Vi[static_cast<size_t>(j)]) * Wi[static_cast<size_t>(order - j)];
                Wi[static_cast<size_t>(order)] = -Wi[0] * acc;
            }
        }

        HemSolution sol;
        sol.mode = sys.mode_;
        sol.v0 = model.slack_voltage();
        sol.germ_residual = sys.germ_residual_;
        sol.v.reserve(static_cast<size_t>(n));
        sol.u.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            PowerSeries vs(std::move(V[static_cast<size_t>(i)]));
            PowerSeries us = vs;
            for (auto& c : us.coeffs) c /= sol.v0;
            sol.v.push_back(std::move(vs));
            sol.u.push_back(std::move(us));
        }
        return sol;
    }
};

HemSolution compute_series(const EmbeddedSystem& system, int n_terms) {
    if (n_terms < 2) throw EmbeddingError("n_terms must be at least 2");
    return HemRecursion::run(system, n_terms);
}

Eigen::VectorXcd evaluate_solution(const HemSolution& sol, double alpha, EvalMethod method) {
    int n = static_cast<int>(sol.v.size());
    Eigen::VectorXcd out(n);
    for (int i = 0; i < n; ++i) {
        const PowerSeries& s = sol.v[static_cast<size_t>(i)];
        out(i) = (method == EvalMethod::DirectSum || alpha == 0.0) ? s.eval(alpha)
                                                                   : pade_eval_series(s, alpha);
    }
    return out;
}

double power_balance_residual(const NetworkModel& model, const Eigen::VectorXcd& voltages,
                              double lambda) {
    Eigen::VectorXcd I = model.ybus * voltages;
    double worst = 0.0;
    for (int i = 0; i < model.size(); ++i) {
        const Bus& b = model.buses[static_cast<size_t>(i)];
        Cx s = voltages(i) * std::conj(I(i));
        switch (b.kind) {
            case BusKind::Slack:
                break;
            case BusKind::PQ:
                worst = std::max(worst, std::abs(lambda * model.injection(i) - s));
                break;
            case BusKind::PV:
                worst = std::max(worst, std::abs(lambda * b.p_inject - s.real()));
                worst = std::max(worst, std::abs(std::abs(voltages(i)) - b.v_setpoint));
                break;
        }
    }
    return worst;
}

double power_balance_residual(const NetworkModel& model, const Eigen::VectorXcd& voltages,
                              const ScalingDirection& direction, double alpha) {
    Eigen::VectorXcd I = model.ybus * voltages;
    double worst = 0.0;
    for (int i = 0; i < model.size(); ++i) {
        const Bus& b = model.buses[static_cast<size_t>(i)];
        Cx s = voltages(i) * std::conj(I(i));
        Cx target = model.injection(i) + alpha * direction.delta_s(i);
        switch (b.kind) {
            case BusKind::Slack:
                break;
            case BusKind::PQ:
                worst = std::max(worst, std::abs(target - s));
                break;
            case BusKind::PV:
                worst = std::max(worst, std::abs(target.real() - s.real()));
                worst = std::max(worst, std::abs(std::abs(voltages(i)) - b.v_setpoint));
                break;
        }
    }
    return worst;
}

}  // namespace helmgrid

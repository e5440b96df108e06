#include "helmgrid/modal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

namespace helmgrid {

using Cx = std::complex<double>;

namespace {

// dS/dtheta and dS/d|V| of the complex injection S = diag(V) conj(Y V)
void injection_jacobians(const NetworkModel& model, const Eigen::VectorXcd& V,
                         Eigen::MatrixXcd& dS_dVa, Eigen::MatrixXcd& dS_dVm) {
    int n = model.size();
    Eigen::VectorXcd I = model.ybus * V;
    Eigen::MatrixXcd Y = Eigen::MatrixXcd(model.ybus);
    Eigen::VectorXcd Vnorm = V.array() / V.array().abs();

    dS_dVa = Cx{0.0, 1.0} *
             (V.asDiagonal() * (Eigen::MatrixXcd(I.conjugate().asDiagonal()) -
                                Y.conjugate() * Eigen::MatrixXcd(V.conjugate().asDiagonal())));
    dS_dVm = Eigen::MatrixXcd(Vnorm.asDiagonal()) * Eigen::MatrixXcd(I.conjugate().asDiagonal()) +
             V.asDiagonal() * (Y.conjugate() * Eigen::MatrixXcd(Vnorm.conjugate().asDiagonal()));
}

}  // namespace

SolvedState newton_solve_from(const NetworkModel& model, const Eigen::VectorXcd& start,
                              const NewtonOptions& opts) {
    int n = model.size();
    auto pv = model.pv_indices();
    auto pq = model.pq_indices();
    std::vector<int> nonslack = model.nonslack_indices();
    int na = static_cast<int>(nonslack.size());
    int npq = static_cast<int>(pq.size());

    Eigen::VectorXcd V = start;
    SolvedState st;
    for (int it = 0; it <= opts.max_iterations; ++it) {
        Eigen::VectorXcd I = model.ybus * V;
        Eigen::VectorXd f(na + npq);
        for (int p = 0; p < na; ++p) {
            int i = nonslack[static_cast<size_t>(p)];
            Cx mis = V(i) * std::conj(I(i)) - model.injection(i);
            f(p) = mis.real();
        }
        for (int p = 0; p < npq; ++p) {
            int i = pq[static_cast<size_t>(p)];
            Cx mis = V(i) * std::conj(I(i)) - model.injection(i);
            f(na + p) = mis.imag();
        }
        st.max_mismatch = f.cwiseAbs().maxCoeff();
        st.iterations = it;
        if (st.max_mismatch < opts.tol) {
            st.converged = true;
            st.voltages = V;
            return st;
        }
        if (it == opts.max_iterations) break;

        Eigen::MatrixXcd dS_dVa, dS_dVm;
        injection_jacobians(model, V, dS_dVa, dS_dVm);
        Eigen::MatrixXd J(na + npq, na + npq);
        for (int r = 0; r < na; ++r) {
            int i = nonslack[static_cast<size_t>(r)];
            for (int c = 0; c < na; ++c) J(r, c) = dS_dVa(i, nonslack[static_cast<size_t>(c)]).real();
            for (int c = 0; c < npq; ++c) J(r, na + c) = dS_dVm(i, pq[static_cast<size_t>(c)]).real();
        }
        for (int r = 0; r < npq; ++r) {
            int i = pq[static_cast<size_t>(r)];
            for (int c = 0; c < na; ++c) J(na + r, c) = dS_dVa(i, nonslack[static_cast<size_t>(c)]).imag();
            for (int c = 0; c < npq; ++c) J(na + r, na + c) = dS_dVm(i, pq[static_cast<size_t>(c)]).imag();
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            st.voltages = V;
            st.converged = false;
            throw SolveError("singular power-flow Jacobian at iteration " + std::to_string(it));
        }
        Eigen::VectorXd dx = lu.solve(f);
        if (!dx.allFinite()) {
            st.voltages = V;
            return st;
        }
        for (int p = 0; p < na; ++p) {
            int i = nonslack[static_cast<size_t>(p)];
            double va = std::arg(V(i)) - dx(p);
            double vm = std::abs(V(i));
            V(i) = std::polar(vm, va);
        }
        for (int p = 0; p < npq; ++p) {
            int i = pq[static_cast<size_t>(p)];
            double vm = std::abs(V(i)) - dx(na + p);
            V(i) = std::polar(vm, std::arg(V(i)));
        }
    }
    st.voltages = V;
    st.converged = false;
    return st;
}

SolvedState newton_solve(const NetworkModel& model, const NewtonOptions& opts) {
    int n = model.size();
    Cx v0 = model.slack_voltage();
    Eigen::VectorXcd V(n);
    for (int i = 0; i < n; ++i) {
        const Bus& b = model.buses[static_cast<size_t>(i)];
        double mag = (b.kind == BusKind::PQ) ? 1.0 : b.v_setpoint;
        V(i) = std::polar(mag, std::arg(v0));  // flat start at the slack angle
    }
    return newton_solve_from(model, V, opts);
}

double bisect_collapse(const NetworkModel& model, double lo, double hi, double tol) {
    auto attempt = [&](double lam, const Eigen::VectorXcd* warm) -> SolvedState {
        NetworkModel scaled = scale_injections(model, lam);
        try {
            return warm ? newton_solve_from(scaled, *warm) : newton_solve(scaled);
        } catch (const SolveError&) {
            SolvedState st;
            st.converged = false;
            return st;
        }
    };
    SolvedState base = attempt(lo, nullptr);
    if (!base.converged) throw SolveError("lower bracket does not converge");
    if (attempt(hi, &base.voltages).converged) {
        throw SolveError("upper bracket converges; raise it");
    }
    Eigen::VectorXcd warm = base.voltages;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        SolvedState st = attempt(mid, &warm);
        if (st.converged) {
            lo = mid;
            warm = st.voltages;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Eigen::MatrixXd reduced_jacobian(const NetworkModel& model, const SolvedState& state) {
    if (!state.converged) throw SolveError("reduced Jacobian needs a converged state");
    auto pq = model.pq_indices();
    auto nonslack = model.nonslack_indices();
    int na = static_cast<int>(nonslack.size());
    int npq = static_cast<int>(pq.size());

    Eigen::MatrixXcd dS_dVa, dS_dVm;
    injection_jacobians(model, state.voltages, dS_dVa, dS_dVm);

    Eigen::MatrixXd J_Ptheta(na, na), J_PV(na, npq), J_Qtheta(npq, na), J_QV(npq, npq);
    for (int r = 0; r < na; ++r) {
        int i = nonslack[static_cast<size_t>(r)];
        for (int c = 0; c < na; ++c) J_Ptheta(r, c) = dS_dVa(i, nonslack[static_cast<size_t>(c)]).real();
        for (int c = 0; c < npq; ++c) J_PV(r, c) = dS_dVm(i, pq[static_cast<size_t>(c)]).real();
    }
    for (int r = 0; r < npq; ++r) {
        int i = pq[static_cast<size_t>(r)];
        for (int c = 0; c < na; ++c) J_Qtheta(r, c) = dS_dVa(i, nonslack[static_cast<size_t>(c)]).imag();
        for (int c = 0; c < npq; ++c) J_QV(r, c) = dS_dVm(i, pq[static_cast<size_t>(c)]).imag();
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(J_Ptheta);
    if (!lu.isInvertible()) throw SolveError("singular J_Ptheta (at or past collapse)");
    return J_QV - J_Qtheta * lu.solve(J_PV);
}

ModalResult participation_factors(const Eigen::MatrixXd& jr, int k,
                                  const std::vector<int>& pq_bus_ids) {
    int n = static_cast<int>(jr.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> es(jr);
    if (es.info() != Eigen::Success) throw SolveError("eigen-decomposition failed");

    double scale = jr.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
        if (std::abs(es.eigenvalues()(i).imag()) > 1e-9 * std::max(1.0, scale)) {
            throw SolveError("reduced Jacobian has a significantly complex eigenvalue");
        }
    }

    Eigen::MatrixXcd right = es.eigenvectors();
    Eigen::MatrixXcd left = right.inverse();  // rows are left eigenvectors

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return es.eigenvalues()(a).real() < es.eigenvalues()(b).real();
    });

    ModalResult res;
    res.pq_bus_ids = pq_bus_ids;
    k = std::min(k, n);
    for (int mi = 0; mi < n; ++mi) {
        res.eigenvalues.push_back(es.eigenvalues()(order[static_cast<size_t>(mi)]).real());
    }
    for (int mi = 0; mi < k; ++mi) {
        int m = order[static_cast<size_t>(mi)];
        std::vector<double> part(static_cast<size_t>(n));
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            part[static_cast<size_t>(i)] = (right(i, m) * left(m, i)).real();
            total += part[static_cast<size_t>(i)];
        }
        for (auto& p : part) p /= total;  // per-mode normalization to sum 1
        res.participation.push_back(std::move(part));
    }

    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        double pa = res.participation[0][static_cast<size_t>(a)];
        double pb = res.participation[0][static_cast<size_t>(b)];
        if (pa != pb) return pa > pb;
        return pq_bus_ids[static_cast<size_t>(a)] < pq_bus_ids[static_cast<size_t>(b)];
    });
    for (int i : idx) res.weakest_buses.push_back(pq_bus_ids[static_cast<size_t>(i)]);
    return res;
}

RankingComparison compare_rankings(const std::vector<int>& hem_order,
                                   const std::vector<int>& modal_order, int top_k) {
    RankingComparison cmp;
    int k = std::min<int>({top_k, static_cast<int>(hem_order.size()),
                           static_cast<int>(modal_order.size())});
    cmp.exact_match = true;
    for (int i = 0; i < k; ++i) {
        cmp.per_position.emplace_back(hem_order[static_cast<size_t>(i)],
                                      modal_order[static_cast<size_t>(i)]);
        if (hem_order[static_cast<size_t>(i)] != modal_order[static_cast<size_t>(i)]) {
            cmp.exact_match = false;
        }
    }
    // Kendall tau over the ids present in both top-k lists, by rank position
    int concordant = 0, discordant = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            auto rank_in = [&](const std::vector<int>& v, int id) {
                auto it = std::find(v.begin(), v.end(), id);
                return it == v.end() ? -1 : static_cast<int>(it - v.begin());
            };
            int a = rank_in(modal_order, hem_order[static_cast<size_t>(i)]);
            int b = rank_in(modal_order, hem_order[static_cast<size_t>(j)]);
            if (a < 0 || b < 0) continue;
            if (a < b) ++concordant;
            else if (a > b) ++discordant;
        }
    }
    int pairs = concordant + discordant;
    cmp.kendall_tau = pairs == 0 ? 1.0 : static_cast<double>(concordant - discordant) / pairs;
    return cmp;
}

NetworkModel make_all_pq(const NetworkModel& model) {
    SolvedState st = newton_solve(model);
    if (!st.converged) throw SolveError("base case does not converge; cannot build all-PQ case");
    Eigen::VectorXcd I = model.ybus * st.voltages;
    std::vector<Bus> buses = model.buses;
    for (int i = 0; i < model.size(); ++i) {
        Bus& b = buses[static_cast<size_t>(i)];
        if (b.kind != BusKind::PV) continue;
        Cx s = st.voltages(i) * std::conj(I(i));
        b.kind = BusKind::PQ;
        b.p_inject = s.real();
        b.q_inject = s.imag();
    }
    return finalize_model(std::move(buses), model.branches, model.base_mva);
}

NetworkModel scale_reactive(const NetworkModel& model, double factor) {
    std::vector<Bus> buses = model.buses;
    for (auto& b : buses) {
        if (b.kind == BusKind::Slack) continue;
        b.q_inject *= factor;
    }
    return finalize_model(std::move(buses), model.branches, model.base_mva);
}

}  // namespace helmgrid

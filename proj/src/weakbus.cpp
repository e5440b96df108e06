#include "helmgrid/weakbus.hpp"

#include <algorithm>
#include <cmath>

#include "helmgrid/hem.hpp"
#include "helmgrid/modal.hpp"
#include "parallel.hpp"

namespace helmgrid {

using Cx = std::complex<double>;

namespace {

double sensitivity_impl(const NetworkModel& model, int idx, double dq, int n_terms,
                        const Eigen::VectorXcd* base = nullptr) {
    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(model.size());
    delta(idx) = Cx{0.0, dq};
    EmbeddedSystem sys = embed(model, EmbeddingMode::direction_of_change(delta), base);
    HemSolution sol = compute_series(sys, n_terms);
    const PowerSeries& v = sol.v[static_cast<size_t>(idx)];
    // d|V|/dalpha at 0 = Re(conj(c0) c1)/|c0|; dQ/dalpha = dq
    return (std::conj(v[0]) * v[1]).real() / std::abs(v[0]) / dq;
}

}  // namespace

double vq_sensitivity(const NetworkModel& model, int bus_id, double dq) {
    int idx = model.index_of(bus_id);
    if (model.buses[static_cast<size_t>(idx)].kind != BusKind::PQ) {
        throw ValidationError("V-Q sensitivity is defined for PQ buses only");
    }
    if (dq <= 0.0) throw ValidationError("reactive increment must be positive");
    return sensitivity_impl(model, idx, dq, 2);
}

WeakBusRanking rank_weak_buses(const NetworkModel& model, int top_k, double dq,
                               int threads, int n_terms) {
    if (dq <= 0.0) dq = 1.0 / model.base_mva;  // 1 MVar on the system base
    if (n_terms < 2) n_terms = 2;

    SolvedState base = newton_solve(model);
    if (!base.converged) throw ValidationError("base case does not converge");

    auto pq = model.pq_indices();
    std::vector<SensitivityRecord> records(pq.size());
    detail::parallel_for(static_cast<int>(pq.size()), threads, [&](int k) {
        int idx = pq[static_cast<size_t>(k)];
        const Bus& b = model.buses[static_cast<size_t>(idx)];
        SensitivityRecord rec;
        rec.bus = b.id;
        if (b.q_inject > 0.0) {
            rec.excluded = true;
            rec.exclusion_reason = "positive net reactive injection";
        } else {
            double raw = sensitivity_impl(model, idx, dq, n_terms, &base.voltages);
            rec.dv_dq = std::abs(raw);
            rec.sign = raw >= 0.0 ? 1 : -1;
        }
        records[static_cast<size_t>(k)] = rec;
    });

    WeakBusRanking ranking;
    for (auto& rec : records) {
        (rec.excluded ? ranking.excluded : ranking.ranked).push_back(rec);
    }
    std::sort(ranking.ranked.begin(), ranking.ranked.end(),
              [](const SensitivityRecord& a, const SensitivityRecord& b) {
                  if (a.dv_dq != b.dv_dq) return a.dv_dq > b.dv_dq;
                  return a.bus < b.bus;
              });
    if (top_k > 0 && static_cast<int>(ranking.ranked.size()) > top_k) {
        ranking.ranked.resize(static_cast<size_t>(top_k));
    }
    return ranking;
}

}  // namespace helmgrid

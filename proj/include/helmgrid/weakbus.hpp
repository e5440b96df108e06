#pragma once

#include <string>
#include <vector>

#include "helmgrid/netmodel.hpp"

namespace helmgrid {

struct SensitivityRecord {
    int bus = 0;              // external id
    double dv_dq = 0.0;       // |d|V|/dQ_injection| at the base case, pu/pu
    int sign = 1;             // sign of d|V|/dQ_injection
    bool excluded = false;
    std::string exclusion_reason;
};

struct WeakBusRanking {
    std::vector<SensitivityRecord> ranked;     // descending dv_dq, eligible only
    std::vector<SensitivityRecord> excluded;
    std::string operating_point;
};

/// Two-term direction-of-change V-Q sensitivity of one PQ bus: the alpha=0
/// derivative of |V| w.r.t. a reactive injection increment dq, pu.
double vq_sensitivity(const NetworkModel& model, int bus_id, double dq);

/// All eligible PQ buses (nonpositive net reactive injection), descending
/// sensitivity, ties by ascending id. dq defaults to 1 MVar on the system base.
WeakBusRanking rank_weak_buses(const NetworkModel& model, int top_k,
                               double dq = -1.0, int threads = 1, int n_terms = 2);

}  // namespace helmgrid

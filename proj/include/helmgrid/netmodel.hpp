#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace helmgrid {

using Complex = std::complex<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BusKind { Slack, PV, PQ };

struct Bus {
    int id = 0;                 // external bus number
    BusKind kind = BusKind::PQ;
    double p_inject = 0.0;      // net P injection, pu (generation minus load)
    double q_inject = 0.0;      // net Q injection, pu
    double v_setpoint = 1.0;    // |V| setpoint, pu (slack/PV)
    double v0_angle = 0.0;      // slack angle, rad
    double shunt_g = 0.0;       // bus shunt, pu
    double shunt_b = 0.0;
};

struct Branch {
    int from = 0;
    int to = 0;
    Complex series_z;
    double charging_b = 0.0;    // total line charging, pu
    Complex tap{1.0, 0.0};      // off-nominal complex tap ratio
    bool in_service = true;
};

/// Canonical indexed network data; immutable after construction.
struct NetworkModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    SparseComplex ybus;
    double base_mva = 100.0;

    int size() const { return static_cast<int>(buses.size()); }

    int index_of(int bus_id) const;
    int slack_index() const;
    Complex slack_voltage() const;
    std::vector<int> pq_indices() const;
    std::vector<int> pv_indices() const;
    std::vector<int> nonslack_indices() const;

    /// Complex net injection at internal index i (pu).
    Complex injection(int i) const {
        return {buses[i].p_inject, buses[i].q_inject};
    }

    void rebuild_index();

private:
    std::unordered_map<int, int> id_to_index_;
};

Eigen::SparseMatrix<Complex> build_ybus(const std::vector<Bus>& buses,
                                        const std::vector<Branch>& branches);

/// Parse a MATPOWER version-2 case struct (.m text).
NetworkModel parse_matpower(const std::string& text);

/// Parse / emit the internal JSON case schema (see docs/case_schema.md).
NetworkModel parse_case_json(const std::string& text);
std::string to_case_json(const NetworkModel& model);

/// Load a case file, dispatching on extension (.m vs .json).
NetworkModel load_case(const std::string& path);

/// Multiply every complex injection (PQ and PV buses) by lambda.
NetworkModel scale_injections(const NetworkModel& model, double lambda);

/// Validate invariants (one slack, connectivity, nonzero impedances) and
/// build the admittance matrix. Used by all parsers.
NetworkModel finalize_model(std::vector<Bus> buses, std::vector<Branch> branches,
                            double base_mva);

}  // namespace helmgrid

#include "helmgrid/netmodel.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace helmgrid {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string strip_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('%');
        if (pos != std::string::npos) line.erase(pos);
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<std::vector<double>> parse_matrix(const std::string& text, const std::string& name) {
    std::regex re("mpc\\." + name + "\\s*=\\s*\\[([^\\]]*)\\]");
    std::smatch m;
    if (!std::regex_search(text, m, re)) {
        throw ParseError("missing mpc." + name + " matrix");
    }
    std::vector<std::vector<double>> rows;
    std::istringstream body(m[1].str());
    std::string row_text;
    // rows are terminated by ';' or newline
    std::string chunk;
    std::string pending;
    while (std::getline(body, chunk)) {
        std::istringstream cs(chunk);
        std::string part;
        while (std::getline(cs, part, ';')) {
            std::istringstream ps(part);
            std::vector<double> row;
            std::string tok;
            while (ps >> tok) {
                try {
                    size_t used = 0;
                    double v = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw ParseError("malformed row in mpc." + name + ": '" + part + "'");
                }
            }
            if (!row.empty()) rows.push_back(std::move(row));
        }
    }
    return rows;
}

void require_columns(const std::vector<std::vector<double>>& rows, size_t n,
                     const std::string& name) {
    for (const auto& r : rows) {
        if (r.size() < n) {
            throw ParseError("mpc." + name + " row has " + std::to_string(r.size()) +
                             " columns, expected at least " + std::to_string(n));
        }
    }
}

}  // namespace

int NetworkModel::index_of(int bus_id) const {
    auto it = id_to_index_.find(bus_id);
    if (it == id_to_index_.end()) {
        throw ValidationError("unknown bus id " + std::to_string(bus_id));
    }
    return it->second;
}

int NetworkModel::slack_index() const {
    for (int i = 0; i < size(); ++i) {
        if (buses[static_cast<size_t>(i)].kind == BusKind::Slack) return i;
    }
    throw ValidationError("model has no slack bus");
}

Complex NetworkModel::slack_voltage() const {
    const Bus& s = buses[static_cast<size_t>(slack_index())];
    return std::polar(s.v_setpoint, s.v0_angle);
}

std::vector<int> NetworkModel::pq_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (buses[static_cast<size_t>(i)].kind == BusKind::PQ) out.push_back(i);
    }
    return out;
}

std::vector<int> NetworkModel::pv_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (buses[static_cast<size_t>(i)].kind == BusKind::PV) out.push_back(i);
    }
    return out;
}

std::vector<int> NetworkModel::nonslack_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (buses[static_cast<size_t>(i)].kind != BusKind::Slack) out.push_back(i);
    }
    return out;
}

void NetworkModel::rebuild_index() {
    id_to_index_.clear();
    for (int i = 0; i < size(); ++i) {
        int id = buses[static_cast<size_t>(i)].id;
        if (!id_to_index_.emplace(id, i).second) {
            throw ValidationError("duplicate bus id " + std::to_string(id));
        }
    }
}

Eigen::SparseMatrix<Complex> build_ybus(const std::vector<Bus>& buses,
                                        const std::vector<Branch>& branches) {
    int n = static_cast<int>(buses.size());
    std::unordered_map<int, int> index;
    for (int i = 0; i < n; ++i) index[buses[static_cast<size_t>(i)].id] = i;

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(branches.size() * 4 + static_cast<size_t>(n));
    for (const auto& br : branches) {
        if (!br.in_service) continue;
        if (std::abs(br.series_z) == 0.0) {
            throw ValidationError("zero series impedance on in-service branch " +
                                  std::to_string(br.from) + "-" + std::to_string(br.to));
        }
        int f = index.at(br.from);
        int t = index.at(br.to);
        Complex y = 1.0 / br.series_z;
        Complex bc{0.0, br.charging_b / 2.0};
        Complex tap = (std::abs(br.tap) == 0.0) ? Complex{1.0, 0.0} : br.tap;
        trip.emplace_back(f, f, (y + bc) / (tap * std::conj(tap)));
        trip.emplace_back(f, t, -y / std::conj(tap));
        trip.emplace_back(t, f, -y / tap);
        trip.emplace_back(t, t, y + bc);
    }
    for (int i = 0; i < n; ++i) {
        const Bus& b = buses[static_cast<size_t>(i)];
        if (b.shunt_g != 0.0 || b.shunt_b != 0.0) {
            trip.emplace_back(i, i, Complex{b.shunt_g, b.shunt_b});
        }
    }
    Eigen::SparseMatrix<Complex> Y(n, n);
    Y.setFromTriplets(trip.begin(), trip.end());
    return Y;
}

NetworkModel finalize_model(std::vector<Bus> buses, std::vector<Branch> branches,
                            double base_mva) {
    NetworkModel model;
    model.buses = std::move(buses);
    model.branches = std::move(branches);
    model.base_mva = base_mva;
    model.rebuild_index();

    int n_slack = 0;
    for (const auto& b : model.buses) {
        if (b.kind == BusKind::Slack) ++n_slack;
    }
    if (n_slack == 0) throw ValidationError("case has no slack bus");
    if (n_slack > 1) throw ValidationError("case has more than one slack bus");

    // connectivity over in-service branches
    int n = model.size();
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (const auto& br : model.branches) {
        if (!br.in_service) continue;
        int f = model.index_of(br.from);
        int t = model.index_of(br.to);
        adj[static_cast<size_t>(f)].push_back(t);
        adj[static_cast<size_t>(t)].push_back(f);
    }
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::queue<int> work;
    work.push(model.slack_index());
    seen[static_cast<size_t>(model.slack_index())] = 1;
    while (!work.empty()) {
        int i = work.front();
        work.pop();
        for (int j : adj[static_cast<size_t>(i)]) {
            if (!seen[static_cast<size_t>(j)]) {
                seen[static_cast<size_t>(j)] = 1;
                work.push(j);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[static_cast<size_t>(i)]) {
            throw ValidationError("bus " + std::to_string(model.buses[static_cast<size_t>(i)].id) +
                                  " is disconnected from the slack bus");
        }
    }

    model.ybus = build_ybus(model.buses, model.branches);
    return model;
}

NetworkModel parse_matpower(const std::string& raw) {
    std::string text = strip_comments(raw);

    std::smatch m;
    if (!std::regex_search(text, m, std::regex(R"(mpc\.baseMVA\s*=\s*([0-9.eE+-]+))"))) {
        throw ParseError("missing mpc.baseMVA");
    }
    double base = std::stod(m[1].str());

    auto bus_rows = parse_matrix(text, "bus");
    auto gen_rows = parse_matrix(text, "gen");
    auto branch_rows = parse_matrix(text, "branch");
    require_columns(bus_rows, 13, "bus");
    require_columns(gen_rows, 10, "gen");
    require_columns(branch_rows, 11, "branch");

    std::vector<Bus> buses;
    buses.reserve(bus_rows.size());
    for (const auto& r : bus_rows) {
        Bus b;
        b.id = static_cast<int>(r[0]);
        int type = static_cast<int>(r[1]);
        switch (type) {
            case 1: b.kind = BusKind::PQ; break;
            case 2: b.kind = BusKind::PV; break;
            case 3: b.kind = BusKind::Slack; break;
            default:
                throw ParseError("bus " + std::to_string(b.id) + " has unsupported type " +
                                 std::to_string(type));
        }
        b.p_inject = -r[2] / base;  // loads stored as negative injections
        b.q_inject = -r[3] / base;
        b.shunt_g = r[4] / base;
        b.shunt_b = r[5] / base;
        b.v_setpoint = r[7];
        b.v0_angle = r[8] * kDegToRad;
        buses.push_back(b);
    }

    std::unordered_map<int, size_t> at;
    for (size_t i = 0; i < buses.size(); ++i) at[buses[i].id] = i;

    std::map<int, double> setpoint;  // from in-service gens
    std::unordered_map<int, bool> has_live_gen;
    for (const auto& r : gen_rows) {
        int id = static_cast<int>(r[0]);
        auto it = at.find(id);
        if (it == at.end()) throw ParseError("generator at unknown bus " + std::to_string(id));
        if (r[7] <= 0) continue;  // out of service
        Bus& b = buses[it->second];
        b.p_inject += r[1] / base;
        b.q_inject += r[2] / base;
        has_live_gen[id] = true;
        double vg = r[5];
        auto sp = setpoint.find(id);
        if (sp == setpoint.end()) {
            setpoint[id] = vg;
        } else if (std::abs(sp->second - vg) > 1e-9) {
            throw ValidationError("conflicting voltage setpoints at bus " + std::to_string(id));
        }
    }
    for (auto& b : buses) {
        if (b.kind == BusKind::PV && !has_live_gen[b.id]) b.kind = BusKind::PQ;
        auto sp = setpoint.find(b.id);
        if (sp != setpoint.end() && b.kind != BusKind::PQ) b.v_setpoint = sp->second;
    }

    std::vector<Branch> branches;
    branches.reserve(branch_rows.size());
    for (const auto& r : branch_rows) {
        Branch br;
        br.from = static_cast<int>(r[0]);
        br.to = static_cast<int>(r[1]);
        if (!at.count(br.from) || !at.count(br.to)) {
            throw ParseError("branch references unknown bus");
        }
        br.series_z = Complex{r[2], r[3]};
        br.charging_b = r[4];
        double ratio = (r[8] == 0.0) ? 1.0 : r[8];
        br.tap = std::polar(ratio, r[9] * kDegToRad);
        br.in_service = r[10] > 0;
        branches.push_back(br);
    }

    return finalize_model(std::move(buses), std::move(branches), base);
}

NetworkModel parse_case_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON case: ") + e.what());
    }
    try {
        double base = j.at("base_mva").get<double>();
        std::vector<Bus> buses;
        for (const auto& bj : j.at("buses")) {
            Bus b;
            b.id = bj.at("id").get<int>();
            std::string kind = bj.at("kind").get<std::string>();
            if (kind == "slack") b.kind = BusKind::Slack;
            else if (kind == "pv") b.kind = BusKind::PV;
            else if (kind == "pq") b.kind = BusKind::PQ;
            else throw ParseError("unknown bus kind '" + kind + "'");
            b.p_inject = bj.value("p", 0.0);
            b.q_inject = bj.value("q", 0.0);
            b.v_setpoint = bj.value("v_setpoint", 1.0);
            b.v0_angle = bj.value("angle_deg", 0.0) * kDegToRad;
            b.shunt_g = bj.value("gs", 0.0);
            b.shunt_b = bj.value("bs", 0.0);
            buses.push_back(b);
        }
        std::vector<Branch> branches;
        for (const auto& rj : j.at("branches")) {
            Branch br;
            br.from = rj.at("from").get<int>();
            br.to = rj.at("to").get<int>();
            br.series_z = Complex{rj.value("r", 0.0), rj.value("x", 0.0)};
            br.charging_b = rj.value("b", 0.0);
            double ratio = rj.value("tap", 0.0);
            if (ratio == 0.0) ratio = 1.0;
            br.tap = std::polar(ratio, rj.value("shift_deg", 0.0) * kDegToRad);
            br.in_service = rj.value("status", 1) > 0;
            branches.push_back(br);
        }
        return finalize_model(std::move(buses), std::move(branches), base);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON case: ") + e.what());
    }
}

std::string to_case_json(const NetworkModel& model) {
    nlohmann::ordered_json j;
    j["base_mva"] = model.base_mva;
    j["buses"] = nlohmann::ordered_json::array();
    for (const auto& b : model.buses) {
        nlohmann::ordered_json bj;
        bj["id"] = b.id;
        bj["kind"] = b.kind == BusKind::Slack ? "slack" : (b.kind == BusKind::PV ? "pv" : "pq");
        bj["p"] = b.p_inject;
        bj["q"] = b.q_inject;
        bj["v_setpoint"] = b.v_setpoint;
        bj["angle_deg"] = b.v0_angle / kDegToRad;
        bj["gs"] = b.shunt_g;
        bj["bs"] = b.shunt_b;
        j["buses"].push_back(bj);
    }
    j["branches"] = nlohmann::ordered_json::array();
    for (const auto& br : model.branches) {
        nlohmann::ordered_json rj;
        rj["from"] = br.from;
        rj["to"] = br.to;
        rj["r"] = br.series_z.real();
        rj["x"] = br.series_z.imag();
        rj["b"] = br.charging_b;
        rj["tap"] = std::abs(br.tap);
        rj["shift_deg"] = std::arg(br.tap) / kDegToRad;
        rj["status"] = br.in_service ? 1 : 0;
        j["branches"].push_back(rj);
    }
    return j.dump(2);
}

NetworkModel load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        return parse_case_json(buf.str());
    }
    return parse_matpower(buf.str());
}

NetworkModel scale_injections(const NetworkModel& model, double lambda) {
    if (lambda <= 0.0) throw ValidationError("scaling factor must be positive");
    std::vector<Bus> buses = model.buses;
    for (auto& b : buses) {
        if (b.kind == BusKind::Slack) continue;
        b.p_inject *= lambda;
        b.q_inject *= lambda;
    }
    return finalize_model(std::move(buses), model.branches, model.base_mva);
}

}  // namespace helmgrid

// helmgrid: HEM power flow, sigma indices, SNBP scans and weak-bus ranking.
//
// Exit codes: 0 ok, 1 input error, 2 solver failure, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "helmgrid/hem.hpp"
#include "helmgrid/modal.hpp"
#include "helmgrid/netmodel.hpp"
#include "helmgrid/pade.hpp"
#include "helmgrid/sigma.hpp"
#include "helmgrid/version.hpp"
#include "helmgrid/weakbus.hpp"

namespace {

using namespace helmgrid;

// fixed 12-significant-digit float formatting for byte-stable reports
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

uint64_t fnv1a(const std::string& data) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunConfig {
    std::string case_path;
    double lambda = 1.0;
    int n_terms = 50;
    std::vector<int> pade_order;  // empty = near-diagonal default
    double dq_mvar = 1.0;
    int top_k = 5;
    std::string method = "both";
    int threads = 1;
    double ceiling = 5.0;
    std::string out_path;
    std::string format = "json";
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string config_json(const RunConfig& cfg, const std::string& command,
                        const std::string& case_text) {
    std::ostringstream os;
    char checksum[32];
    std::snprintf(checksum, sizeof(checksum), "%016llx",
                  static_cast<unsigned long long>(fnv1a(case_text)));
    os << "\"version\": \"" << kVersion << "\",\n"
       << "\"command\": \"" << command << "\",\n"
       << "\"case\": \"" << json_escape(cfg.case_path) << "\",\n"
       << "\"case_checksum\": \"" << checksum << "\",\n"
       << "\"config\": {\"lambda\": " << fmt(cfg.lambda) << ", \"n_terms\": " << cfg.n_terms
       << ", \"dq_mvar\": " << fmt(cfg.dq_mvar) << ", \"top\": " << cfg.top_k
       << ", \"method\": \"" << cfg.method << "\", \"threads\": " << cfg.threads
       << ", \"ceiling\": " << fmt(cfg.ceiling) << ", \"format\": \"" << cfg.format << "\"}";
    return os.str();
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(cfg.out_path);
        if (!out) throw ParseError("cannot write output file '" + cfg.out_path + "'");
        out << text;
    }
}

void write_side_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

int cmd_solve(const RunConfig& cfg) {
    std::string text = read_file(cfg.case_path);
    NetworkModel model = load_case(cfg.case_path);

    SolvedState nr = newton_solve(scale_injections(model, cfg.lambda));
    EmbeddedSystem sys = embed(model, EmbeddingMode::all_scaling(cfg.lambda));
    HemSolution sol = compute_series(sys, cfg.n_terms);
    Eigen::VectorXcd vh = evaluate_solution(sol, 1.0, EvalMethod::Pade);

    double max_dev = 0.0;
    if (nr.converged) {
        for (int i = 0; i < model.size(); ++i) {
            max_dev = std::max(max_dev, std::abs(vh(i) - nr.voltages(i)));
        }
    }
    double residual = power_balance_residual(scale_injections(model, cfg.lambda), vh, 1.0);

    std::ostringstream os;
    os << "{\n" << config_json(cfg, "solve", text) << ",\n";
    os << "\"nr_converged\": " << (nr.converged ? "true" : "false")
       << ",\n\"nr_iterations\": " << nr.iterations
       << ",\n\"max_hem_nr_deviation\": " << fmt(max_dev)
       << ",\n\"hem_power_balance_residual\": " << fmt(residual) << ",\n\"buses\": [\n";
    for (int i = 0; i < model.size(); ++i) {
        os << "  {\"id\": " << model.buses[static_cast<size_t>(i)].id
           << ", \"hem_re\": " << fmt(vh(i).real()) << ", \"hem_im\": " << fmt(vh(i).imag());
        if (nr.converged) {
            os << ", \"nr_re\": " << fmt(nr.voltages(i).real())
               << ", \"nr_im\": " << fmt(nr.voltages(i).imag());
        }
        os << "}" << (i + 1 < model.size() ? "," : "") << "\n";
    }
    os << "]\n}\n";
    emit(cfg, os.str());
    return nr.converged ? 0 : 2;
}

int cmd_snbp(const RunConfig& cfg) {
    std::string text = read_file(cfg.case_path);
    NetworkModel model = load_case(cfg.case_path);

    SnbpScanSpec spec;
    spec.lambda_lo = 1.0;
    spec.lambda_ceiling = cfg.ceiling;
    spec.n_terms = cfg.n_terms;
    SnbpEstimate est = estimate_snbp(model, spec, cfg.threads);

    double oracle = bisect_collapse(model, 1.0, cfg.ceiling);

    std::ostringstream trace;
    trace << "lambda,min_sigma_condition\n";
    for (const auto& [lam, cond] : est.scan_trace) {
        trace << fmt(lam) << "," << fmt(cond) << "\n";
    }

    std::ostringstream os;
    os << "{\n" << config_json(cfg, "snbp", text) << ",\n";
    os << "\"sigma_negative_lambda\": "
       << (est.lambda_star ? fmt(*est.lambda_star) : "null")
       << ",\n\"detecting_bus\": " << est.detecting_bus
       << ",\n\"pole_zero_lambda\": "
       << (est.lambda_pole_zero ? fmt(*est.lambda_pole_zero) : "null")
       << ",\n\"nr_bisection_lambda\": " << fmt(oracle)
       << ",\n\"reactive_limits_modeled\": false,\n\"scan_trace\": [\n";
    for (size_t k = 0; k < est.scan_trace.size(); ++k) {
        os << "  [" << fmt(est.scan_trace[k].first) << ", " << fmt(est.scan_trace[k].second)
           << "]" << (k + 1 < est.scan_trace.size() ? "," : "") << "\n";
    }
    os << "]\n}\n";

    if (cfg.format == "csv") {
        emit(cfg, trace.str());
    } else {
        emit(cfg, os.str());
        if (!cfg.out_path.empty()) write_side_file(cfg.out_path + ".trace.csv", trace.str());
    }
    return 0;
}

int cmd_sigma(const RunConfig& cfg) {
    std::string text = read_file(cfg.case_path);
    NetworkModel model = load_case(cfg.case_path);
    auto indices = sigma_indices(model, cfg.lambda, cfg.n_terms);

    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "bus,sigma_r,sigma_i,condition\n";
        for (const auto& s : indices) {
            os << s.bus << "," << fmt(s.sigma_r) << "," << fmt(s.sigma_i) << ","
               << fmt(s.condition) << "\n";
        }
        emit(cfg, os.str());
        return 0;
    }

    std::ostringstream os;
    os << "{\n" << config_json(cfg, "sigma", text) << ",\n\"buses\": [\n";
    for (size_t k = 0; k < indices.size(); ++k) {
        const auto& s = indices[k];
        os << "  {\"id\": " << s.bus << ", \"sigma_r\": " << fmt(s.sigma_r)
           << ", \"sigma_i\": " << fmt(s.sigma_i) << ", \"condition\": " << fmt(s.condition)
           << "}" << (k + 1 < indices.size() ? "," : "") << "\n";
    }
    os << "],\n\"parabola\": [\n";
    // boundary sigma_i^2 = 0.25 + sigma_r sampled for plotting
    const int samples = 41;
    for (int k = 0; k < samples; ++k) {
        double si = -1.0 + 2.0 * k / (samples - 1.0);
        double sr = si * si - 0.25;
        os << "  [" << fmt(sr) << ", " << fmt(si) << "]" << (k + 1 < samples ? "," : "") << "\n";
    }
    os << "]\n}\n";
    emit(cfg, os.str());
    return 0;
}

int cmd_weakbus(const RunConfig& cfg) {
    std::string text = read_file(cfg.case_path);
    NetworkModel model = load_case(cfg.case_path);

    double dq = cfg.dq_mvar / model.base_mva;
    WeakBusRanking hem = rank_weak_buses(model, cfg.top_k, dq, cfg.threads);

    SolvedState st = newton_solve(model);
    if (!st.converged) return 2;
    Eigen::MatrixXd jr = reduced_jacobian(model, st);
    std::vector<int> pq_ids;
    for (int i : model.pq_indices()) pq_ids.push_back(model.buses[static_cast<size_t>(i)].id);
    ModalResult modal = participation_factors(jr, 1, pq_ids);

    std::vector<int> hem_ids, modal_ids;
    for (const auto& r : hem.ranked) hem_ids.push_back(r.bus);
    for (int id : modal.weakest_buses) {
        // keep the comparison on the same eligible set as the HEM ranking
        bool eligible = true;
        for (const auto& ex : hem.excluded) {
            if (ex.bus == id) eligible = false;
        }
        if (eligible) modal_ids.push_back(id);
    }
    if (static_cast<int>(modal_ids.size()) > cfg.top_k) modal_ids.resize(static_cast<size_t>(cfg.top_k));
    RankingComparison cmp = compare_rankings(hem_ids, modal_ids, cfg.top_k);

    std::ostringstream os;
    os << "{\n" << config_json(cfg, "weakbus", text) << ",\n";
    os << "\"hem_ranking\": [\n";
    for (size_t k = 0; k < hem.ranked.size(); ++k) {
        const auto& r = hem.ranked[k];
        os << "  {\"id\": " << r.bus << ", \"dv_dq\": " << fmt(r.dv_dq)
           << ", \"sign\": " << r.sign << "}" << (k + 1 < hem.ranked.size() ? "," : "") << "\n";
    }
    os << "],\n\"modal_ranking\": [";
    for (size_t k = 0; k < modal_ids.size(); ++k) {
        os << modal_ids[k] << (k + 1 < modal_ids.size() ? ", " : "");
    }
    os << "],\n\"smallest_eigenvalue\": " << fmt(modal.eigenvalues.front())
       << ",\n\"exact_order_match\": " << (cmp.exact_match ? "true" : "false")
       << ",\n\"kendall_tau\": " << fmt(cmp.kendall_tau) << "\n}\n";

    if (cfg.format == "csv") {
        std::ostringstream cs;
        cs << "rank,bus,dv_dq,sign\n";
        for (size_t k = 0; k < hem.ranked.size(); ++k) {
            cs << (k + 1) << "," << hem.ranked[k].bus << "," << fmt(hem.ranked[k].dv_dq) << ","
               << hem.ranked[k].sign << "\n";
        }
        emit(cfg, cs.str());
    } else {
        emit(cfg, os.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holomorphic-embedding power-flow and voltage-stability toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("case", cfg.case_path, "MATPOWER .m or JSON case file")->required();
        sub->add_option("--lambda", cfg.lambda, "injection scaling factor");
        sub->add_option("--n-terms", cfg.n_terms, "series terms");
        sub->add_option("--pade", cfg.pade_order, "Pade order L M")->expected(2);
        sub->add_option("--dq-mvar", cfg.dq_mvar, "reactive increment in MVar");
        sub->add_option("--top", cfg.top_k, "ranking length");
        sub->add_option("--method", cfg.method, "sigma|polezero|both");
        sub->add_option("--threads", cfg.threads, "worker pool size");
        sub->add_option("--ceiling", cfg.ceiling, "lambda scan ceiling");
        sub->add_option("--out", cfg.out_path, "output path (default stdout)");
        sub->add_option("--format", cfg.format, "json|csv");
    };
    CLI::App* solve = app.add_subcommand("solve", "HEM and Newton-Raphson voltages side by side");
    CLI::App* snbp = app.add_subcommand("snbp", "saddle-node bifurcation point estimates");
    CLI::App* sigma = app.add_subcommand("sigma", "per-bus sigma indices at a loading");
    CLI::App* weakbus = app.add_subcommand("weakbus", "V-Q sensitivity weak-bus ranking");
    add_common(solve);
    add_common(snbp);
    add_common(sigma);
    add_common(weakbus);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(cfg);
        if (snbp->parsed()) return cmd_snbp(cfg);
        if (sigma->parsed()) return cmd_sigma(cfg);
        if (weakbus->parsed()) return cmd_weakbus(cfg);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const EmbeddingError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}

#include "knnball/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace knnball {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json stats_to_json(const std::vector<StatRow>& rows) {
    ordered_json obj = ordered_json::object();
    for (const StatRow& row : rows) obj[row.key] = row.value;
    return obj;
}

// Only inputs that influence the numbers are echoed; thread count and grid
// bucket size change timings, not results, and live in the meta file.
ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json c = ordered_json::object();
    c["dim"] = cfg.dim;
    c["k"] = cfg.k;
    c["s0"] = cfg.s0;
    c["n_ladder"] = cfg.n_ladder;
    c["a_rule"] = a_rule_name(cfg.a_rule);
    if (cfg.a_rule == ARule::Explicit)
        c["a_list"] = cfg.a_explicit;
    else
        c["a_param"] = cfg.a_param;
    c["w_rule"] = w_rule_name(cfg.w_rule);
    if (cfg.w_rule == WRule::Const) c["w_param"] = cfg.w_param;
    c["input"] = input_model_name(cfg.input);
    c["reps"] = cfg.reps;
    c["seed"] = cfg.seed;
    if (!cfg.eps_list.empty()) c["eps_list"] = cfg.eps_list;
    return c;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string report_to_json(const EstimateReport& rep, const ExperimentConfig& cfg) {
    ordered_json j = ordered_json::object();
    j["tool"] = "knnball-lab";
    j["estimator"] = rep.estimator;
    j["config"] = config_to_json(cfg);
    ordered_json pts = ordered_json::array();
    for (const PointReport& p : rep.points) {
        ordered_json pj = ordered_json::object();
        pj["n"] = p.n;
        pj["a_n"] = p.a_n;
        pj["b_n"] = p.b_n;
        pj["pass"] = p.pass;
        pj["censored"] = p.censored;
        if (!p.warnings.empty()) pj["warnings"] = p.warnings;
        pj["stats"] = stats_to_json(p.stats);
        pts.push_back(std::move(pj));
    }
    j["points"] = std::move(pts);
    if (!rep.summary.empty()) j["summary"] = stats_to_json(rep.summary);
    j["pass"] = rep.pass;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const EstimateReport& rep) {
    std::string out = "estimator,n,a_n,b_n,key,value\n";
    for (const PointReport& p : rep.points) {
        const std::string head = rep.estimator + "," + format_number(p.n) + "," +
                                 format_number(p.a_n) + "," + format_number(p.b_n) + ",";
        for (const StatRow& s : p.stats)
            out += head + s.key + "," + format_number(s.value) + "\n";
    }
    for (const StatRow& s : rep.summary)
        out += rep.estimator + ",,,," + s.key + "," + format_number(s.value) + "\n";
    return out;
}

std::string meta_to_json(const std::string& command_line, int threads) {
    ordered_json j = ordered_json::object();
    j["tool"] = "knnball-lab";
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[64];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["timestamp"] = stamp;
    j["threads"] = threads;
    j["command"] = command_line;
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed while writing " + path);
}

}  // namespace knnball

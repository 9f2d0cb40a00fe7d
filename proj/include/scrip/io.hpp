#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scrip/harness.hpp"

namespace scrip::io {

using nlohmann::json;

// Deterministic float formatting (shortest round-trip form) so identical runs
// produce byte-identical files.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    double back = std::strtod(buf, nullptr);
    if (back == x) {
        for (int prec = 1; prec <= 16; ++prec) {
            std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
            if (std::strtod(buf, nullptr) == x) break;
        }
    }
    return buf;
}

// One row per sample: round, level_0..level_cap, anomalies, bad_fraction,
// monitor_prob.
inline std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "round";
    int buckets = traj.params.cap_token_buckets();
    for (int l = 0; l < buckets; ++l) out << ",level_" << l;
    out << ",anomalies,bad_fraction,monitor_prob\n";
    for (const auto& s : traj.snapshots) {
        out << s.round;
        for (int l = 0; l < buckets; ++l) out << ',' << fmt(s.histogram[static_cast<size_t>(l)]);
        out << ',' << s.anomaly_total() << ',' << fmt(s.cumulative_bad_fraction) << ','
            << fmt(traj.params.strategic() ? s.monitor_prob : 1.0) << '\n';
    }
    return out.str();
}

inline std::string distribution_csv(const DistributionVector& d) {
    std::ostringstream out;
    out << "level,fraction\n";
    for (size_t l = 0; l < d.levels(); ++l) out << l << ',' << fmt(d.p[l]) << '\n';
    return out.str();
}

inline json params_json(const GameParams& p) {
    json j;
    j["n"] = p.n();
    j["setting"] = to_string(p.setting());
    if (p.strategic()) {
        j["beta_star"] = p.violation_prob().str();
        j["kappa"] = p.kappa();
    } else {
        j["b"] = p.violation_prob().str();
    }
    j["alpha"] = p.alpha();
    j["delta"] = p.delta();
    j["k"] = p.k();
    j["total_tokens"] = p.total_tokens();
    j["variant"] = to_string(p.variant());
    j["unit"] = p.unit();
    j["reward_units"] = p.reward_units();
    j["cap_units"] = p.cap_units();
    return j;
}

inline json trajectory_sidecar(const Trajectory& traj) {
    json j;
    j["params"] = params_json(traj.params);
    j["policy_k"] = traj.policy_k;
    j["init"] = to_string(traj.init);
    j["seed"] = traj.seed;
    j["sample_every"] = traj.sample_every;
    j["rounds"] = traj.snapshots.empty() ? 0 : traj.snapshots.back().round;
    return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << contents;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline DistributionVector read_distribution_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);  // header
    DistributionVector d;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("malformed distribution row: " + line);
        d.p.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
    }
    return d;
}

// Scenario file:
// {
//   "rescale": {"enabled": true, "target_avg_tokens": 2.0, "drift_fraction": 0.25},
//   "churn":   {"join_rate": 0.001, "leave_rate": 0.001},
//   "events":  [{"round": 100, "kind": "join"}, {"round": 200, "kind": "leave", "agent": 3}]
// }
inline Scenario parse_scenario(const json& j) {
    Scenario sc;
    if (j.contains("rescale")) {
        const auto& r = j.at("rescale");
        sc.rescale.enabled = r.value("enabled", true);
        sc.rescale.target_avg_tokens = r.value("target_avg_tokens", 0.0);
        sc.rescale.drift_fraction = r.value("drift_fraction", 0.25);
    }
    if (j.contains("churn")) {
        const auto& c = j.at("churn");
        sc.churn.join_rate = c.value("join_rate", 0.0);
        sc.churn.leave_rate = c.value("leave_rate", 0.0);
    }
    if (j.contains("events")) {
        for (const auto& e : j.at("events")) {
            PopulationEvent ev;
            ev.round = e.at("round").get<int64_t>();
            std::string kind = e.at("kind").get<std::string>();
            if (kind == "join")
                ev.kind = PopulationEventKind::Join;
            else if (kind == "leave")
                ev.kind = PopulationEventKind::Leave;
            else
                throw Error("scenario events may only schedule join/leave, got: " + kind);
            ev.agent = e.value("agent", 0ULL);
            sc.events.push_back(ev);
        }
        std::sort(sc.events.begin(), sc.events.end(),
                  [](const PopulationEvent& a, const PopulationEvent& b) { return a.round < b.round; });
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(json::parse(read_file(path)));
}

}  // namespace scrip::io

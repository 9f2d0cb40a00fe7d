// scripsim - command-line driver for the scrip-based monitoring simulator.
//
// Subcommands: run, steady-state, converge, equilibrium, welfare, chain-verify.
// `run --preset <name>` expands a named experiment; every invocation echoes
// its fully expanded configuration to <out>/config.json, and --config replays
// such a file without any preset table (explicit flags still override).

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "scrip/best_response.hpp"
#include "scrip/harness.hpp"
#include "scrip/io.hpp"
#include "scrip/markov.hpp"
#include "scrip/welfare.hpp"

namespace fs = std::filesystem;
using scrip::io::json;

namespace {

struct Config {
    std::string command;     // run | steady-state | converge | equilibrium | welfare | chain-verify
    std::string experiment;  // trajectory | fig-* | strategic-demo | <command>
    int n = 1000;
    std::string b;          // exact rational text; empty in the strategic setting
    std::string beta_star;  // exact rational text; empty in the inadvertent setting
    double kappa = 0.0;
    double alpha = 0.05;
    double delta = 0.99;
    int k = 5;
    long long total_tokens = -1;  // derived from tokens_per_agent when negative
    double tokens_per_agent = 2.0;
    std::string variant = "single";
    std::string init = "maxent";
    long long rounds = 1000000;
    long long sample_every = 200000;
    std::vector<uint64_t> seeds{1};
    int ensemble = 100;                       // convergence ensembles
    std::vector<int> n_list{100, 300, 1000};  // fig-number sweep
    std::vector<double> tol_multipliers{1.5, 2.0, 3.0};
    double violation_cost = 0.0;  // welfare C
    std::string out;
    std::string scenario_path;
    std::string reference_path;  // distribution CSV used as the reference
};

// Command-line values held apart from the config so presets and config files
// can be applied first and explicit flags last.
struct Flags {
    std::optional<int> n;
    std::optional<std::string> b, beta_star;
    std::optional<double> kappa, alpha, delta, tokens_per_agent, violation_cost;
    std::optional<int> k, ensemble;
    std::optional<long long> total_tokens, rounds, sample_every;
    std::optional<std::string> variant, init, out, scenario, reference;
    std::optional<std::string> seed_list;

    void apply(Config& c) const {
        if (n) c.n = *n;
        if (b) {
            c.b = *b;
            c.beta_star.clear();
        }
        if (beta_star) {
            c.beta_star = *beta_star;
            c.b.clear();
        }
        if (kappa) {
            c.kappa = *kappa;
            c.b.clear();
        }
        if (alpha) c.alpha = *alpha;
        if (delta) c.delta = *delta;
        if (k) c.k = *k;
        if (tokens_per_agent) {
            c.tokens_per_agent = *tokens_per_agent;
            c.total_tokens = -1;
        }
        if (total_tokens) c.total_tokens = *total_tokens;
        if (rounds) c.rounds = *rounds;
        if (sample_every) c.sample_every = *sample_every;
        if (variant) c.variant = *variant;
        if (init) c.init = *init;
        if (ensemble) c.ensemble = *ensemble;
        if (out) c.out = *out;
        if (scenario) c.scenario_path = *scenario;
        if (reference) c.reference_path = *reference;
        if (violation_cost) c.violation_cost = *violation_cost;
        if (seed_list) {
            c.seeds.clear();
            std::stringstream ss(*seed_list);
            std::string item;
            while (std::getline(ss, item, ',')) c.seeds.push_back(std::stoull(item));
        }
    }
};

json config_json(const Config& c) {
    json j;
    j["command"] = c.command;
    j["experiment"] = c.experiment;
    j["n"] = c.n;
    if (!c.b.empty()) j["b"] = c.b;
    if (!c.beta_star.empty()) j["beta_star"] = c.beta_star;
    if (c.kappa > 0) j["kappa"] = c.kappa;
    j["alpha"] = c.alpha;
    j["delta"] = c.delta;
    j["k"] = c.k;
    j["total_tokens"] = c.total_tokens;
    j["tokens_per_agent"] = c.tokens_per_agent;
    j["variant"] = c.variant;
    j["init"] = c.init;
    j["rounds"] = c.rounds;
    j["sample_every"] = c.sample_every;
    j["seeds"] = c.seeds;
    j["ensemble"] = c.ensemble;
    j["n_list"] = c.n_list;
    j["tol_multipliers"] = c.tol_multipliers;
    if (c.violation_cost != 0) j["violation_cost"] = c.violation_cost;
    if (!c.scenario_path.empty()) j["scenario"] = c.scenario_path;
    if (!c.reference_path.empty()) j["reference"] = c.reference_path;
    return j;
}

void config_from_json(const json& j, Config& c) {
    c.command = j.value("command", c.command);
    c.experiment = j.value("experiment", c.experiment);
    c.n = j.value("n", c.n);
    c.b = j.value("b", std::string());
    c.beta_star = j.value("beta_star", std::string());
    c.kappa = j.value("kappa", 0.0);
    c.alpha = j.value("alpha", c.alpha);
    c.delta = j.value("delta", c.delta);
    c.k = j.value("k", c.k);
    c.total_tokens = j.value("total_tokens", c.total_tokens);
    c.tokens_per_agent = j.value("tokens_per_agent", c.tokens_per_agent);
    c.variant = j.value("variant", c.variant);
    c.init = j.value("init", c.init);
    c.rounds = j.value("rounds", c.rounds);
    c.sample_every = j.value("sample_every", c.sample_every);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    c.ensemble = j.value("ensemble", c.ensemble);
    if (j.contains("n_list")) c.n_list = j.at("n_list").get<std::vector<int>>();
    if (j.contains("tol_multipliers"))
        c.tol_multipliers = j.at("tol_multipliers").get<std::vector<double>>();
    c.violation_cost = j.value("violation_cost", c.violation_cost);
    c.scenario_path = j.value("scenario", std::string());
    c.reference_path = j.value("reference", std::string());
}

scrip::GameParams make_params(const Config& c, int n_override = 0,
                              std::optional<scrip::PaymentVariant> variant_override = std::nullopt) {
    scrip::GameParamsInput in;
    in.n = n_override > 0 ? n_override : c.n;
    in.alpha = c.alpha;
    in.delta = c.delta;
    in.k = c.k;
    if (!c.beta_star.empty() || c.kappa > 0) {
        in.setting = scrip::Setting::Strategic;
        if (c.beta_star.empty()) throw scrip::RangeError("strategic runs need --beta-star");
        in.beta_star = scrip::Rational::parse(c.beta_star);
        in.kappa = c.kappa;
    } else {
        if (c.b.empty()) throw scrip::RangeError("the inadvertent setting needs --b");
        in.bad_prob = scrip::Rational::parse(c.b);
    }
    in.total_tokens = c.total_tokens >= 0
                          ? c.total_tokens
                          : static_cast<long long>(std::llround(c.tokens_per_agent * in.n));
    if (c.total_tokens < 0 &&
        std::abs(c.tokens_per_agent * in.n - static_cast<double>(in.total_tokens)) > 1e-9)
        throw scrip::RangeError("tokens-per-agent times n must be a whole number of tokens");
    in.variant = variant_override.value_or(c.variant == "split" ? scrip::PaymentVariant::SplitPayers
                                                                : scrip::PaymentVariant::SinglePayer);
    return scrip::validate_params(in);
}

scrip::InitKind parse_init(const std::string& name) {
    if (name == "maxent") return scrip::InitKind::MaxEntropy;
    if (name == "extreme") return scrip::InitKind::Extreme;
    if (name == "equal") return scrip::InitKind::Equal;
    if (name == "reference") return scrip::InitKind::Reference;
    throw scrip::RangeError("unknown init: " + name);
}

fs::path out_dir(const Config& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("SCRIPSIM_OUT")) return env;
    return "results";
}

void echo_config(const Config& c) {
    scrip::io::write_file(out_dir(c) / "config.json", config_json(c).dump(2) + "\n");
}

// Runs fn(i) for i in [0, count) across a small worker pool.
void parallel_for(int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    unsigned workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                          static_cast<unsigned>(count));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Executors

int exec_trajectory(const Config& c) {
    scrip::GameParams params = make_params(c);
    scrip::ThresholdPolicy policy(c.k);
    scrip::DistributionVector reference = c.reference_path.empty()
                                              ? scrip::maxent_reference(params)
                                              : scrip::io::read_distribution_csv(c.reference_path);

    std::optional<scrip::Scenario> scenario;
    if (!c.scenario_path.empty()) scenario = scrip::io::load_scenario(c.scenario_path);

    fs::path dir = out_dir(c);
    std::vector<scrip::Trajectory> trajs(c.seeds.size());
    parallel_for(static_cast<int>(c.seeds.size()), [&](int i) {
        scrip::RunOptions opts;
        opts.init = parse_init(c.init);
        if (opts.init == scrip::InitKind::Reference) opts.init_target = reference;
        opts.rounds = c.rounds;
        opts.sample_every = c.sample_every;
        opts.seed = c.seeds[static_cast<size_t>(i)];
        opts.scenario = scenario;
        opts.reference = reference;
        trajs[static_cast<size_t>(i)] = scrip::run(params, policy, opts);
    });
    json per_seed = json::array();
    double worst = 0.0;
    for (size_t i = 0; i < trajs.size(); ++i) {
        const auto& traj = trajs[i];
        std::string tag = "seed" + std::to_string(c.seeds[i]);
        scrip::io::write_file(dir / ("trajectory_" + tag + ".csv"), scrip::io::trajectory_csv(traj));
        scrip::io::write_file(dir / ("trajectory_" + tag + ".json"),
                              scrip::io::trajectory_sidecar(traj).dump(2) + "\n");
        double exc = scrip::max_excursion(traj, reference);
        worst = std::max(worst, exc);
        json row = {{"seed", c.seeds[i]},
                    {"max_excursion", exc},
                    {"anomalies", traj.last().anomaly_total()}};
        if (params.strategic()) {
            auto rep = scrip::strategic_convergence_report(traj);
            row["tail_bad_fraction"] = rep.tail_bad_fraction;
            row["tail_monitor_prob"] = rep.tail_monitor_prob;
        }
        per_seed.push_back(row);
    }
    json summary;
    summary["experiment"] = c.experiment;
    summary["max_excursion"] = worst;
    summary["per_seed"] = per_seed;
    if (params.strategic() && !trajs.empty()) {
        auto rep = scrip::strategic_convergence_report(trajs.front());
        summary["tail_bad_fraction"] = rep.tail_bad_fraction;
        summary["tail_monitor_prob"] = rep.tail_monitor_prob;
    }
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "max excursion " << worst << " over " << c.seeds.size() << " seed(s); results in "
              << dir.string() << "\n";
    return 0;
}

struct EnsembleConvergence {
    double tol = 0.0;
    double long_run_max = 0.0;
    scrip::Trajectory extreme;  // ensemble mean
    scrip::DistributionVector reference;
    scrip::ConvergenceReport report;
    std::map<std::string, double> sensitivity;  // tol multiplier -> rounds/agent
};

// Convergence experiment at one n: ensemble-mean trajectories from the
// extreme start, tolerance = 2x the long-run max excursion of an identically
// sampled max-entropy-initialized ensemble.
EnsembleConvergence converge_at(const Config& c, int n) {
    Config local = c;
    local.n = n;
    local.total_tokens = -1;
    scrip::GameParams params = make_params(local, n);
    scrip::ThresholdPolicy policy(c.k);
    EnsembleConvergence out;
    out.reference = c.reference_path.empty() ? scrip::maxent_reference(params)
                                             : scrip::io::read_distribution_csv(c.reference_path);

    const int64_t cadence = std::max<int64_t>(1, n / 10);
    const int members = c.ensemble;
    uint64_t base_seed = c.seeds.empty() ? 1 : c.seeds.front();

    auto run_ensemble = [&](scrip::InitKind kind, int64_t rounds, uint64_t seed_base) {
        std::vector<scrip::Trajectory> group(static_cast<size_t>(members));
        parallel_for(members, [&](int i) {
            scrip::RunOptions opts;
            opts.init = kind;
            opts.rounds = rounds;
            opts.sample_every = cadence;
            opts.seed = seed_base + static_cast<uint64_t>(i);
            group[static_cast<size_t>(i)] = scrip::run(params, policy, opts);
        });
        return scrip::ensemble_mean(group);
    };

    scrip::Trajectory steady = run_ensemble(scrip::InitKind::MaxEntropy, 40LL * n, base_seed * 1000 + 1);
    // The band describes long-run fluctuation: skip the first quarter so any
    // relaxation from the start shape (visible when the reference is an
    // estimated steady state rather than max entropy) stays out of it.
    for (const auto& snap : steady.snapshots)
        if (snap.round > 10LL * n)
            out.long_run_max =
                std::max(out.long_run_max, euclidean_distance(snap.histogram, out.reference));
    out.tol = 2.0 * out.long_run_max;

    out.extreme = run_ensemble(parse_init(c.init), 25LL * n, base_seed * 1000 + 500001);
    out.report = scrip::convergence_time(out.extreme, out.reference, out.tol);
    for (double mult : c.tol_multipliers) {
        try {
            auto rep = scrip::convergence_time(out.extreme, out.reference, mult * out.long_run_max);
            out.sensitivity[scrip::io::fmt(mult)] = rep.rounds_per_agent;
        } catch (const scrip::NeverConverged&) {
            out.sensitivity[scrip::io::fmt(mult)] = -1.0;
        }
    }
    return out;
}

int exec_converge(const Config& c, bool sweep) {
    fs::path dir = out_dir(c);
    std::vector<int> ns = sweep ? c.n_list : std::vector<int>{c.n};
    std::ostringstream csv;
    csv << "n,seed,tol,rounds,rounds_per_agent\n";
    json per_n = json::array();
    for (int n : ns) {
        auto r = converge_at(c, n);
        csv << n << ',' << (c.seeds.empty() ? 1 : c.seeds.front()) << ',' << scrip::io::fmt(r.tol)
            << ',' << r.report.round << ',' << scrip::io::fmt(r.report.rounds_per_agent) << '\n';
        json jn;
        jn["n"] = n;
        jn["tol"] = r.tol;
        jn["long_run_max"] = r.long_run_max;
        jn["rounds"] = r.report.round;
        jn["rounds_per_agent"] = r.report.rounds_per_agent;
        jn["sensitivity"] = r.sensitivity;
        per_n.push_back(jn);
        std::cout << "n=" << n << ": converged at " << r.report.rounds_per_agent
                  << " rounds/agent (tol " << r.tol << ")\n";
    }
    scrip::io::write_file(dir / "convergence.csv", csv.str());
    json summary;
    summary["experiment"] = c.experiment;
    summary["per_n"] = per_n;
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    return 0;
}

// Convergence time as a function of the tolerance at fixed n.
int exec_distance(const Config& c) {
    fs::path dir = out_dir(c);
    auto base = converge_at(c, c.n);
    std::ostringstream csv;
    csv << "n,seed,tol,rounds,rounds_per_agent\n";
    json points = json::array();
    for (double mult : {8.0, 6.0, 4.0, 3.0, 2.0, 1.5, 1.2}) {
        double tol = mult * base.long_run_max;
        json pt;
        pt["tol"] = tol;
        try {
            auto rep = scrip::convergence_time(base.extreme, base.reference, tol);
            pt["rounds"] = rep.round;
            pt["rounds_per_agent"] = rep.rounds_per_agent;
            csv << c.n << ',' << (c.seeds.empty() ? 1 : c.seeds.front()) << ','
                << scrip::io::fmt(tol) << ',' << rep.round << ','
                << scrip::io::fmt(rep.rounds_per_agent) << '\n';
        } catch (const scrip::NeverConverged&) {
            pt["rounds"] = -1;
        }
        points.push_back(pt);
    }
    scrip::io::write_file(dir / "distance.csv", csv.str());
    json summary;
    summary["experiment"] = c.experiment;
    summary["n"] = c.n;
    summary["points"] = points;
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "distance sweep written to " << dir.string() << "\n";
    return 0;
}

int exec_steady(const Config& c) {
    scrip::GameParams params = make_params(c);
    scrip::ThresholdPolicy policy(c.k);
    auto est = scrip::estimate_steady_state(params, policy, c.rounds, c.sample_every,
                                            c.seeds.empty() ? 1 : c.seeds.front());
    fs::path dir = out_dir(c);
    scrip::io::write_file(dir / "steady_state.csv", scrip::io::distribution_csv(est));
    json summary;
    summary["experiment"] = c.experiment;
    summary["maxent_distance"] = euclidean_distance(est, scrip::maxent_reference(params));
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "steady state written; distance to max-entropy reference "
              << summary["maxent_distance"].get<double>() << "\n";
    return 0;
}

int exec_distributions(const Config& c) {
    scrip::ThresholdPolicy policy(c.k);
    scrip::GameParams single = make_params(c, 0, scrip::PaymentVariant::SinglePayer);
    scrip::GameParams split = make_params(c, 0, scrip::PaymentVariant::SplitPayers);
    uint64_t seed = c.seeds.empty() ? 1 : c.seeds.front();
    scrip::DistributionVector est_single, est_split;
    parallel_for(2, [&](int i) {
        if (i == 0)
            est_single = scrip::estimate_steady_state(single, policy, c.rounds, c.sample_every, seed);
        else
            est_split = scrip::estimate_steady_state(split, policy, c.rounds, c.sample_every, seed + 1);
    });
    fs::path dir = out_dir(c);
    scrip::io::write_file(dir / "steady_single.csv", scrip::io::distribution_csv(est_single));
    scrip::io::write_file(dir / "steady_split.csv", scrip::io::distribution_csv(est_split));
    json summary;
    summary["experiment"] = c.experiment;
    summary["distance"] = euclidean_distance(est_single, est_split);
    summary["single_csv"] = "steady_single.csv";
    summary["split_csv"] = "steady_split.csv";
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "split-vs-single steady-state distance " << summary["distance"].get<double>()
              << "\n";
    return 0;
}

int exec_equilibrium(const Config& c) {
    scrip::GameParamsInput in;
    in.n = c.n;
    in.alpha = c.alpha;
    in.delta = c.delta;
    in.total_tokens = c.total_tokens >= 0
                          ? c.total_tokens
                          : static_cast<long long>(std::llround(c.tokens_per_agent * c.n));
    if (!c.beta_star.empty() || c.kappa > 0) {
        in.setting = scrip::Setting::Strategic;
        if (c.beta_star.empty()) throw scrip::RangeError("strategic equilibrium needs --beta-star");
        in.beta_star = scrip::Rational::parse(c.beta_star);
        in.kappa = c.kappa;
    } else {
        in.bad_prob = scrip::Rational::parse(c.b.empty() ? "1/5" : c.b);
    }
    auto eq = scrip::find_equilibrium_threshold(in);
    json summary;
    summary["experiment"] = "equilibrium";
    summary["k_star"] = eq.k_star;
    json trace = json::array();
    for (auto [k, br] : eq.trace) trace.push_back({{"k", k}, {"br", br}});
    summary["trace"] = trace;
    if (eq.k_star > 0) summary["gamma"] = eq.steady.mass_below(static_cast<size_t>(eq.k_star));
    scrip::io::write_file(out_dir(c) / "summary.json", summary.dump(2) + "\n");
    std::cout << "equilibrium threshold k* = " << eq.k_star << "\n";
    return 0;
}

int exec_welfare(const Config& c) {
    scrip::WelfareReport rep;
    if (c.kappa > 0)
        rep = scrip::welfare_strategic(c.kappa, c.alpha, c.violation_cost);
    else
        rep = scrip::welfare_inadvertent(scrip::Rational::parse(c.b).to_double(), c.alpha,
                                         c.violation_cost);
    std::cout << "C* = " << rep.c_threshold << "\n"
              << "monitoring welfare/round    = " << rep.monitoring_welfare << "\n"
              << "no-monitoring welfare/round = " << rep.no_monitoring_welfare << "\n"
              << "monitoring preferred: " << (rep.monitoring_preferred ? "yes" : "no") << "\n";
    return 0;
}

int exec_chain_verify(const Config& c) {
    scrip::GameParamsInput in;
    in.n = c.n;
    in.bad_prob = scrip::Rational::parse(c.b.empty() ? "1/2" : c.b);
    in.alpha = c.alpha;
    in.delta = c.delta;
    in.k = c.k;
    in.total_tokens = c.total_tokens >= 0 ? c.total_tokens : 3;
    scrip::GameParams params = scrip::validate_params(in);
    auto chain = scrip::enumerate_chain(c.n, in.total_tokens, params);
    auto rev = scrip::check_reversibility(chain);
    auto st = scrip::stationary_distribution(chain);

    bool uniform = st.max_uniform_deviation < 1e-10;
    std::cout << "states: " << chain.state_count() << "\n"
              << "reversible: " << (rev.exact() ? "exact" : "asymmetry " + rev.max_asymmetry.str())
              << "\n"
              << "stationary: " << (uniform ? "uniform" : "NOT uniform") << " (max deviation "
              << st.max_uniform_deviation << ")\n";

    json summary;
    summary["experiment"] = "chain-verify";
    summary["states"] = chain.state_count();
    summary["reversible"] = rev.exact();
    summary["max_asymmetry"] = rev.max_asymmetry.str();
    summary["max_uniform_deviation"] = st.max_uniform_deviation;
    summary["holdings"] = st.holdings.p;
    fs::path dir = out_dir(c);
    scrip::io::write_file(dir / "summary.json", summary.dump(2) + "\n");
    scrip::io::write_file(dir / "chain_holdings.csv", scrip::io::distribution_csv(st.holdings));
    return rev.exact() && uniform ? 0 : 1;
}

void apply_preset(Config& c, const std::string& preset) {
    c.experiment = preset;
    auto base_figure = [&] {
        c.n = 1000;
        c.b = "1/5";
        c.beta_star.clear();
        c.kappa = 0;
        c.alpha = 0.05;
        c.delta = 0.99;
        c.k = 5;
        c.tokens_per_agent = 2.0;
        c.total_tokens = -1;
        c.variant = "single";
    };
    if (preset == "fig-close") {
        base_figure();
        c.init = "maxent";
        c.rounds = 1000000;
        c.sample_every = 200000;
    } else if (preset == "fig-number" || preset == "fig-number2") {
        base_figure();
        c.init = "extreme";
        c.n_list = {100, 300, 1000};
        if (preset == "fig-number2") c.variant = "split";
    } else if (preset == "fig-distance" || preset == "fig-distance2") {
        base_figure();
        c.init = "extreme";
        if (preset == "fig-distance2") c.variant = "split";
    } else if (preset == "fig-close2") {
        base_figure();
        c.init = "reference";  // start near the estimated split steady state
        c.rounds = 1000000;
        c.sample_every = 200000;
        c.variant = "split";
    } else if (preset == "fig-distributions") {
        base_figure();
        c.rounds = 10000000;
        c.sample_every = 20000;
    } else if (preset == "strategic-demo") {
        base_figure();
        c.b.clear();
        c.beta_star = "1/20";
        c.kappa = 2.0;
        c.init = "maxent";
        c.rounds = 1000000;
        c.sample_every = 20000;
    } else {
        throw scrip::RangeError("unknown preset: " + preset);
    }
}

// The *2 presets measure against the estimated split-variant steady state.
void ensure_split_reference(Config& c) {
    if (!c.reference_path.empty()) return;
    Config est = c;
    est.variant = "split";
    scrip::GameParams params = make_params(est);
    scrip::ThresholdPolicy policy(c.k);
    std::cout << "estimating split-variant steady state (10^7 rounds)...\n";
    auto ref = scrip::estimate_steady_state(params, policy, 10000000, 20000,
                                            (c.seeds.empty() ? 1 : c.seeds.front()) + 90001);
    fs::path path = out_dir(c) / "reference_split.csv";
    scrip::io::write_file(path, scrip::io::distribution_csv(ref));
    c.reference_path = path.string();
}

int execute(Config& c) {
    echo_config(c);
    if (c.command == "welfare") return exec_welfare(c);
    if (c.command == "chain-verify") return exec_chain_verify(c);
    if (c.command == "equilibrium") return exec_equilibrium(c);
    if (c.command == "steady-state") return exec_steady(c);
    if (c.command == "converge") return exec_converge(c, false);

    if (c.experiment == "fig-number") return exec_converge(c, true);
    if (c.experiment == "fig-distance") return exec_distance(c);
    if (c.experiment == "fig-distributions") return exec_distributions(c);
    if (c.experiment == "fig-close2" || c.experiment == "fig-number2" ||
        c.experiment == "fig-distance2") {
        ensure_split_reference(c);
        echo_config(c);  // echo again with the resolved reference path
        if (c.experiment == "fig-close2") return exec_trajectory(c);
        if (c.experiment == "fig-number2") return exec_converge(c, true);
        return exec_distance(c);
    }
    return exec_trajectory(c);  // trajectory, fig-close, strategic-demo
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scrip-token monitoring simulator and equilibrium analyzer"};
    app.require_subcommand(1);

    Flags f;
    std::string preset, config_path;

    auto add_common = [&](CLI::App* cmd, bool with_run_shape) {
        cmd->add_option("--out", [&f](const CLI::results_t& r) { f.out = r[0]; return true; },
                        "output directory (default: $SCRIPSIM_OUT or ./results)");
        cmd->add_option("--n", [&f](const CLI::results_t& r) { f.n = std::stoi(r[0]); return true; },
                        "number of agents");
        auto* ob = cmd->add_option("--b", [&f](const CLI::results_t& r) { f.b = r[0]; return true; },
                                   "bad-post probability (exact: 0.2 or 1/5)");
        auto* obs = cmd->add_option(
            "--beta-star", [&f](const CLI::results_t& r) { f.beta_star = r[0]; return true; },
            "target violation probability (strategic)");
        auto* ok = cmd->add_option(
            "--kappa", [&f](const CLI::results_t& r) { f.kappa = std::stod(r[0]); return true; },
            "bad-post utility (> 1, strategic)");
        ob->excludes(obs);
        ob->excludes(ok);
        cmd->add_option("--alpha",
                        [&f](const CLI::results_t& r) { f.alpha = std::stod(r[0]); return true; },
                        "monitoring disutility in (0,1)");
        cmd->add_option("--delta",
                        [&f](const CLI::results_t& r) { f.delta = std::stod(r[0]); return true; },
                        "discount factor in (0,1)");
        cmd->add_option("--k", [&f](const CLI::results_t& r) { f.k = std::stoi(r[0]); return true; },
                        "volunteering threshold (whole tokens)");
        cmd->add_option("--tokens-per-agent",
                        [&f](const CLI::results_t& r) { f.tokens_per_agent = std::stod(r[0]); return true; },
                        "average tokens per agent");
        cmd->add_option("--total",
                        [&f](const CLI::results_t& r) { f.total_tokens = std::stoll(r[0]); return true; },
                        "total tokens (overrides --tokens-per-agent)");
        cmd->add_option("--config", config_path, "replay an echoed config.json (flags override)");
        if (with_run_shape) {
            cmd->add_option("--rounds",
                            [&f](const CLI::results_t& r) { f.rounds = std::stoll(r[0]); return true; },
                            "rounds to simulate");
            cmd->add_option("--sample-every",
                            [&f](const CLI::results_t& r) { f.sample_every = std::stoll(r[0]); return true; },
                            "rounds between samples (histograms are window means)");
            cmd->add_option("--seed",
                            [&f](const CLI::results_t& r) { f.seed_list = r[0]; return true; },
                            "single seed");
            cmd->add_option("--seeds",
                            [&f](const CLI::results_t& r) { f.seed_list = r[0]; return true; },
                            "comma-separated seed list");
            cmd->add_option("--variant",
                            [&f](const CLI::results_t& r) { f.variant = r[0]; return true; },
                            "payment variant: single | split")
                ->check(CLI::IsMember({"single", "split"}));
            cmd->add_option("--init", [&f](const CLI::results_t& r) { f.init = r[0]; return true; },
                            "initial distribution: maxent | extreme | equal")
                ->check(CLI::IsMember({"maxent", "extreme", "equal", "reference"}));
            cmd->add_option("--ensemble",
                            [&f](const CLI::results_t& r) { f.ensemble = std::stoi(r[0]); return true; },
                            "ensemble size for convergence experiments");
            cmd->add_option("--scenario",
                            [&f](const CLI::results_t& r) { f.scenario = r[0]; return true; },
                            "population-event scenario file (JSON)");
            cmd->add_option("--reference",
                            [&f](const CLI::results_t& r) { f.reference = r[0]; return true; },
                            "reference distribution CSV");
        }
    };

    CLI::App* cmd_run = app.add_subcommand("run", "simulate trajectories / figure experiments");
    cmd_run->add_option("--preset", preset,
                        "fig-close | fig-number | fig-distance | fig-distributions | fig-close2 | "
                        "fig-number2 | fig-distance2 | strategic-demo");
    add_common(cmd_run, true);

    CLI::App* cmd_steady = app.add_subcommand("steady-state", "estimate the steady-state distribution");
    add_common(cmd_steady, true);

    CLI::App* cmd_conv = app.add_subcommand("converge", "convergence time from the extreme start");
    add_common(cmd_conv, true);

    CLI::App* cmd_eq = app.add_subcommand("equilibrium", "best-response fixed-point search");
    add_common(cmd_eq, false);

    CLI::App* cmd_wel = app.add_subcommand("welfare", "social-welfare thresholds");
    cmd_wel->add_option("--C",
                        [&f](const CLI::results_t& r) { f.violation_cost = std::stod(r[0]); return true; },
                        "per-violation cost to the system");
    add_common(cmd_wel, false);

    CLI::App* cmd_chain = app.add_subcommand("chain-verify", "exact chain checks on a small instance");
    add_common(cmd_chain, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Config c;
        if (!config_path.empty()) {
            config_from_json(json::parse(scrip::io::read_file(config_path)), c);
        } else if (cmd_run->parsed()) {
            c.command = "run";
            c.experiment = "trajectory";
            if (!preset.empty()) apply_preset(c, preset);
        }
        if (config_path.empty()) {
            if (cmd_steady->parsed()) {
                c.command = c.experiment = "steady-state";
                c.rounds = 10000000;
                c.sample_every = 20000;
            } else if (cmd_conv->parsed()) {
                c.command = c.experiment = "converge";
                c.init = "extreme";
            } else if (cmd_eq->parsed()) {
                c.command = c.experiment = "equilibrium";
            } else if (cmd_wel->parsed()) {
                c.command = c.experiment = "welfare";
            } else if (cmd_chain->parsed()) {
                c.command = c.experiment = "chain-verify";
                c.n = 3;
                c.k = 2;
                c.b = "1/2";
                c.total_tokens = 3;
            }
        }
        f.apply(c);
        if (c.command == "welfare" && c.b.empty() && c.kappa <= 0)
            throw scrip::RangeError("welfare needs --b or --kappa");
        return execute(c);
    } catch (const scrip::RangeError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const scrip::IrrationalReward& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

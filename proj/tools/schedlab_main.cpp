// schedlab: scheduling of sensor transmissions over lossy channels.
// Subcommands: generate, feasibility, solve, index, simulate, bench, run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "schedlab/feasibility.hpp"
#include "schedlab/model_io.hpp"
#include "schedlab/simulate.hpp"
#include "schedlab/version.hpp"

namespace {

using nlohmann::json;
using namespace schedlab;

struct OutputGuard {
    bool force = false;

    std::ofstream open(const std::string& path) const {
        if (!force && std::filesystem::exists(path))
            throw Error("output file exists (use --force to overwrite): " + path);
        std::ofstream out(path);
        if (!out) throw Error("cannot open output file: " + path);
        return out;
    }
};

// Every artifact embeds the tool version, a hash of the effective
// configuration, and the seed that produced it.
json stamp(const json& config, std::uint64_t seed) {
    return {{"tool_version", std::string(kVersion)},
            {"manifest_hash", hex64(fnv1a(config.dump()))},
            {"seed", seed}};
}

std::string csv_stamp(const json& config, std::uint64_t seed) {
    std::ostringstream line;
    line << "# schedlab " << kVersion << " manifest=" << hex64(fnv1a(config.dump()))
         << " seed=" << seed << "\n";
    return line.str();
}

std::vector<SteadyState> steady_states(const std::vector<ProcessModel>& models) {
    std::vector<SteadyState> sensors;
    sensors.reserve(models.size());
    for (const auto& model : models) sensors.push_back(steady_state_covariance(model));
    return sensors;
}

json report_to_json(const SimReport& report) {
    return {{"policy", report.policy},
            {"horizon", report.horizon},
            {"replications", report.replications},
            {"seed", report.seed},
            {"avg_error", report.avg_error},
            {"avg_comm_cost", report.avg_comm_cost},
            {"avg_total", report.avg_total},
            {"active_ratio", report.active_ratio},
            {"std_total", report.std_total}};
}

// ---------------------------------------------------------------- generate

int cmd_generate(int count, std::uint64_t seed, const std::string& out_path,
                 const OutputGuard& guard) {
    GeneratorConfig config;
    int resamples = 0;
    std::vector<ProcessModel> models;
    models.reserve(count);
    for (int i = 0; i < count; ++i)
        models.push_back(sample_scalar_model(config, seed, i, &resamples));

    const json config_json = {{"command", "generate"}, {"count", count}, {"seed", seed}};
    json meta = stamp(config_json, seed);
    meta["count"] = count;
    meta["resamples"] = resamples;
    meta["sampling"] = {{"a", "normal(0,1)"},
                        {"c", "uniform(1,10)"},
                        {"q", "uniform(0,100)"},
                        {"r", "uniform(0,100), floored at 1e-6"},
                        {"comm_cost", "uniform(5,15)"},
                        {"lambda", "uniform(0.7,0.99)"},
                        {"filter", "rho^2(A)(1-lambda) < 1 and model invariants"}};
    auto out = guard.open(out_path);
    out << models_to_json(models, meta.dump()) << '\n';
    std::printf("wrote %d models to %s (%d resamples)\n", count, out_path.c_str(),
                resamples);
    return 0;
}

// -------------------------------------------------------------- feasibility

int cmd_feasibility(const std::string& models_path, int m,
                    const std::string& out_path, const OutputGuard& guard) {
    const auto models = load_models(models_path);
    const auto report = run_algorithm1(models, m);
    const json config_json = {{"command", "feasibility"}, {"models", models_path}, {"m", m}};
    json doc = {{"assumption1_ok", report.assumption1_ok},
                {"groups", report.groups},
                {"group_count", report.group_count},
                {"m", report.m},
                {"feasible_for_m", report.feasible_for_m},
                {"metadata", stamp(config_json, 0)}};
    const std::string text = doc.dump(2);
    std::cout << text << '\n';
    if (!out_path.empty()) {
        auto out = guard.open(out_path);
        out << text << '\n';
    }
    return 0;
}

// -------------------------------------------------------------------- solve

int cmd_solve(const std::string& models_path, int m, int tau_cap, double tol,
              long max_iter, bool accelerated, const std::string& policy_path,
              const std::string& summary_path, const OutputGuard& guard) {
    const auto models = load_models(models_path);
    auto sensors = steady_states(models);
    const auto problem = build_mdp(std::move(sensors), m, tau_cap);
    const PolicyTable table = accelerated ? monotone_rvi(problem, tol, max_iter)
                                          : relative_value_iteration(problem, tol, max_iter);
    const auto violations = verify_monotone(table);

    const json config_json = {{"command", "solve"},   {"models", models_path},
                              {"m", m},               {"tau_cap", tau_cap},
                              {"tol", tol},           {"max_iter", max_iter},
                              {"accelerated", accelerated}};
    if (!policy_path.empty()) {
        auto out = guard.open(policy_path);
        out << csv_stamp(config_json, 0);
        for (int i = 0; i < table.n; ++i) out << "tau" << i << ",";
        for (int i = 0; i < table.n; ++i) out << "a" << i << ",";
        out << "V\n";
        std::vector<int> tau(table.n);
        for (long s = 0; s < table.state_count(); ++s) {
            table.state_of(s, tau);
            const std::uint32_t bits = table.action_bits(s);
            for (int i = 0; i < table.n; ++i) out << tau[i] << ",";
            for (int i = 0; i < table.n; ++i) out << ((bits >> i) & 1u) << ",";
            out << format_double(table.values[s]) << "\n";
        }
    }
    json summary = {{"avg_cost", table.avg_cost},
                    {"iterations", table.iterations},
                    {"converged", table.converged},
                    {"monotone_violations", violations.size()},
                    {"metadata", stamp(config_json, 0)}};
    const std::string text = summary.dump(2);
    std::cout << text << '\n';
    if (!summary_path.empty()) {
        auto out = guard.open(summary_path);
        out << text << '\n';
    }
    return table.converged ? 0 : 1;
}

// -------------------------------------------------------------------- index

int cmd_index(const std::string& models_path, int tau_cap, const std::string& out_path,
              const OutputGuard& guard) {
    const auto models = load_models(models_path);
    const auto sensors = steady_states(models);
    const auto tables = build_index_tables(sensors, tau_cap);
    const json config_json = {{"command", "index"}, {"models", models_path},
                              {"tau_cap", tau_cap}};
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = guard.open(out_path);
        out = &file;
    }
    *out << csv_stamp(config_json, 0);
    *out << "sensor_id,tau,w\n";
    for (const auto& table : tables)
        for (size_t tau = 0; tau < table.values.size(); ++tau)
            *out << table.sensor_id << "," << tau << ","
                 << format_double(table.values[tau]) << "\n";
    return 0;
}

// ----------------------------------------------------------------- simulate

std::optional<PolicyVariant> variant_by_name(const std::string& name) {
    static const std::map<std::string, PolicyVariant> names = {
        {"optimal", PolicyVariant::Optimal},
        {"whittle", PolicyVariant::WhittleOriginal},
        {"whittle-revised", PolicyVariant::WhittleRevised},
        {"max-error", PolicyVariant::MaxErrorFirst},
        {"max-delay", PolicyVariant::MaxDelayFirst},
        {"round-robin", PolicyVariant::RoundRobin}};
    const auto it = names.find(name);
    if (it == names.end()) return std::nullopt;
    return it->second;
}

int cmd_simulate(const std::string& models_path, const std::string& policy_name_arg,
                 int m, long horizon, int replications, std::uint64_t seed, int tau_cap,
                 bool full_system, const std::string& out_path,
                 const OutputGuard& guard) {
    const auto variant = variant_by_name(policy_name_arg);
    if (!variant) throw Error("unknown policy: " + policy_name_arg);
    const auto models = load_models(models_path);
    const auto sensors = steady_states(models);

    PolicyKind policy = heuristic_policy(*variant);
    PolicyTable table;
    std::vector<IndexTable> tables;
    if (*variant == PolicyVariant::Optimal) {
        table = relative_value_iteration(
            build_mdp(std::vector<SteadyState>(sensors), m, tau_cap));
        policy = optimal_policy(table);
    } else if (*variant == PolicyVariant::WhittleOriginal ||
               *variant == PolicyVariant::WhittleRevised) {
        tables = build_index_tables(sensors, tau_cap);
        policy = whittle_policy(tables, *variant == PolicyVariant::WhittleRevised);
    }

    const SimReport report =
        full_system ? simulate_full_system(sensors, policy, m, horizon, seed)
                    : simulate_tau_chain(sensors, policy, m, horizon, replications, seed);

    const json config_json = {{"command", "simulate"},
                              {"models", models_path},
                              {"policy", policy_name_arg},
                              {"m", m},
                              {"horizon", horizon},
                              {"replications", replications},
                              {"seed", seed},
                              {"tau_cap", tau_cap},
                              {"full_system", full_system}};
    json doc = report_to_json(report);
    doc["metadata"] = stamp(config_json, seed);
    const std::string text = doc.dump(2);
    std::cout << text << '\n';
    if (!out_path.empty()) {
        auto out = guard.open(out_path);
        out << text << '\n';
    }
    return 0;
}

// -------------------------------------------------------------------- bench

std::vector<BenchScenario> parse_scenarios(const std::string& arg) {
    if (arg.empty()) return default_bench_scenarios();
    std::vector<BenchScenario> scenarios;
    std::istringstream in(arg);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw Error("bad scenario (want n:m): " + item);
        scenarios.push_back(
            {std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
    }
    return scenarios;
}

int cmd_bench(const std::string& scenarios_arg, long horizon, int replications,
              std::uint64_t seed, int tau_cap, const std::string& out_dir,
              bool emit_plot_data, const OutputGuard& guard) {
    const auto scenarios = parse_scenarios(scenarios_arg);
    GeneratorConfig config;
    const auto results =
        benchmark_random(config, scenarios, horizon, replications, seed, tau_cap);

    const json config_json = {{"command", "bench"},
                              {"scenarios", scenarios_arg},
                              {"horizon", horizon},
                              {"replications", replications},
                              {"seed", seed},
                              {"tau_cap", tau_cap}};
    std::filesystem::create_directories(out_dir);
    auto out = guard.open(out_dir + "/bench.csv");
    out << csv_stamp(config_json, seed);
    out << "scenario_n,scenario_m,policy,seed,avg_error,avg_comm_cost,avg_total,"
           "std_total,active_ratio,lower_bound\n";
    for (const auto& result : results)
        for (const auto& report : result.reports)
            out << result.n << "," << result.m << "," << report.policy << "," << seed
                << "," << format_double(report.avg_error) << ","
                << format_double(report.avg_comm_cost) << ","
                << format_double(report.avg_total) << ","
                << format_double(report.std_total) << ","
                << format_double(report.active_ratio) << ","
                << format_double(result.lower_bound) << "\n";
    out.close();

    if (emit_plot_data) {
        auto totals = guard.open(out_dir + "/plot_total_cost.csv");
        auto ratios = guard.open(out_dir + "/plot_active_ratio.csv");
        totals << csv_stamp(config_json, seed) << "scenario";
        ratios << csv_stamp(config_json, seed) << "scenario";
        if (!results.empty()) {
            for (const auto& report : results.front().reports) {
                totals << "," << report.policy;
                ratios << "," << report.policy;
            }
            totals << ",lower_bound";
        }
        totals << "\n";
        ratios << "\n";
        for (const auto& result : results) {
            totals << result.n << "x" << result.m;
            ratios << result.n << "x" << result.m;
            for (const auto& report : result.reports) {
                totals << "," << format_double(report.avg_total);
                ratios << "," << format_double(report.active_ratio);
            }
            totals << "," << format_double(result.lower_bound) << "\n";
            ratios << "\n";
        }
    }
    std::printf("wrote %s/bench.csv (%zu scenarios)\n", out_dir.c_str(), results.size());
    return 0;
}

// ---------------------------------------------------------------------- run

int run_manifest(const std::string& manifest_path, bool force_flag) {
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open manifest: " + manifest_path);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("manifest: parse failure: ") + e.what());
    }

    const auto require_string = [&](const char* key) {
        if (!manifest.contains(key) || !manifest[key].is_string())
            throw Error(std::string("manifest.") + key + ": expected a string");
        return manifest[key].get<std::string>();
    };
    const auto params = manifest.value("params", json::object());
    if (!params.is_object()) throw Error("manifest.params: expected an object");
    const auto param_int = [&](const char* key, long fallback) {
        if (!params.contains(key)) return fallback;
        if (!params[key].is_number_integer())
            throw Error(std::string("manifest.params.") + key + ": expected an integer");
        return params[key].get<long>();
    };
    const auto param_double = [&](const char* key, double fallback) {
        if (!params.contains(key)) return fallback;
        if (!params[key].is_number())
            throw Error(std::string("manifest.params.") + key + ": expected a number");
        return params[key].get<double>();
    };

    const std::string command = require_string("command");
    const std::string out_dir = manifest.value("output_dir", std::string("."));
    std::filesystem::create_directories(out_dir);
    OutputGuard guard{force_flag || manifest.value("force", false)};

    const auto seed = static_cast<std::uint64_t>(param_int("seed", 0));
    const int m = static_cast<int>(param_int("m", 1));
    const int tau_cap = static_cast<int>(param_int("tau_cap", 30));
    const long horizon = param_int("horizon", 1000);
    const int replications = static_cast<int>(param_int("replications", 100));
    const double tol = param_double("tol", 1e-8);

    if (command == "generate")
        return cmd_generate(static_cast<int>(param_int("count", 40)), seed,
                            out_dir + "/models.json", guard);
    const std::string models = command == "bench" ? "" : require_string("models");
    if (command == "feasibility")
        return cmd_feasibility(models, m, out_dir + "/feasibility.json", guard);
    if (command == "solve")
        return cmd_solve(models, m, tau_cap, tol, param_int("max_iter", 100000),
                         params.value("accelerated", false), out_dir + "/policy.csv",
                         out_dir + "/summary.json", guard);
    if (command == "index")
        return cmd_index(models, tau_cap, out_dir + "/index.csv", guard);
    if (command == "simulate") {
        int status = 0;
        const auto policies = manifest.value("policies", json::array({"whittle"}));
        for (const auto& policy : policies) {
            if (!policy.is_string())
                throw Error("manifest.policies: expected an array of strings");
            const std::string name = policy.get<std::string>();
            status |= cmd_simulate(models, name, m, horizon, replications, seed, tau_cap,
                                   params.value("full_system", false),
                                   out_dir + "/simulate_" + name + ".json", guard);
        }
        return status;
    }
    if (command == "bench")
        return cmd_bench(manifest.value("scenarios", std::string()), horizon,
                         replications, seed, tau_cap, out_dir,
                         params.value("emit_plot_data", true), guard);
    throw Error("manifest.command: unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor scheduling over lossy channels: solvers, index policies, "
                 "and Monte Carlo evaluation"};
    app.require_subcommand(1);
    argv = app.ensure_utf8(argv);

    bool force = false;
    app.add_flag("--force", force, "overwrite existing output files");
    // Lets the global --force appear after a subcommand name as well.
    app.fallthrough();

    std::string models_path, out_path, out_dir = "bench_out", policy_arg = "whittle";
    std::string summary_path, scenarios_arg, manifest_path;
    int count = 40, m = 1, tau_cap = 30, replications = 100;
    long horizon = 1000, max_iter = 100000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    bool accelerated = false, full_system = false, emit_plot_data = false;

    auto* generate = app.add_subcommand("generate", "sample random scalar models");
    generate->add_option("--count", count, "number of models")->capture_default_str();
    generate->add_option("--seed", seed, "RNG seed")->capture_default_str();
    generate->add_option("--out", out_path, "output JSON path")->required();

    auto* feasibility =
        app.add_subcommand("feasibility", "stabilizable-grouping existence check");
    feasibility->add_option("--models", models_path, "model JSON path")->required();
    feasibility->add_option("--m", m, "channel budget")->capture_default_str();
    feasibility->add_option("--out", out_path, "also write the report here");

    auto* solve = app.add_subcommand("solve", "relative value iteration on the joint chain");
    solve->add_option("--models", models_path, "model JSON path")->required();
    solve->add_option("--m", m, "channel budget")->capture_default_str();
    solve->add_option("--tau-cap", tau_cap, "per-sensor truncation")->capture_default_str();
    solve->add_option("--tol", tol, "span-seminorm tolerance")->capture_default_str();
    solve->add_option("--max-iter", max_iter, "iteration cap")->capture_default_str();
    solve->add_flag("--accelerated", accelerated, "use the monotone-structure sweep");
    solve->add_option("--out-policy", out_path, "policy CSV path");
    solve->add_option("--out-summary", summary_path, "summary JSON path");

    auto* index = app.add_subcommand("index", "per-sensor index tables as CSV");
    index->add_option("--models", models_path, "model JSON path")->required();
    index->add_option("--tau-cap", tau_cap, "table length")->capture_default_str();
    index->add_option("--out", out_path, "output CSV path");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo policy evaluation");
    simulate->add_option("--models", models_path, "model JSON path")->required();
    simulate->add_option("--policy", policy_arg,
                         "optimal|whittle|whittle-revised|max-error|max-delay|round-robin")
        ->capture_default_str();
    simulate->add_option("--m", m, "channel budget")->capture_default_str();
    simulate->add_option("--horizon", horizon, "steps per replication")->capture_default_str();
    simulate->add_option("--replications", replications, "replication count")
        ->capture_default_str();
    simulate->add_option("--seed", seed, "RNG seed")->capture_default_str();
    simulate->add_option("--tau-cap", tau_cap, "table length / optimal-policy truncation")
        ->capture_default_str();
    simulate->add_flag("--full-system", full_system,
                       "sample the linear systems instead of the holding-time chain");
    simulate->add_option("--out", out_path, "report JSON path");

    auto* bench = app.add_subcommand("bench", "random-instance policy comparison");
    bench->add_option("--scenarios", scenarios_arg, "comma list of n:m pairs");
    bench->add_option("--horizon", horizon, "steps per replication")->capture_default_str();
    bench->add_option("--replications", replications, "replication count")
        ->capture_default_str();
    bench->add_option("--seed", seed, "RNG seed")->capture_default_str();
    bench->add_option("--tau-cap", tau_cap, "index table length")->capture_default_str();
    bench->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    bench->add_flag("--emit-plot-data", emit_plot_data,
                    "write per-scenario aggregation CSVs");

    auto* run = app.add_subcommand("run", "execute an experiment manifest");
    run->add_option("--manifest", manifest_path, "manifest JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const OutputGuard guard{force};
    try {
        if (generate->parsed()) return cmd_generate(count, seed, out_path, guard);
        if (feasibility->parsed())
            return cmd_feasibility(models_path, m, out_path, guard);
        if (solve->parsed())
            return cmd_solve(models_path, m, tau_cap, tol, max_iter, accelerated,
                             out_path, summary_path, guard);
        if (index->parsed()) return cmd_index(models_path, tau_cap, out_path, guard);
        if (simulate->parsed())
            return cmd_simulate(models_path, policy_arg, m, horizon, replications, seed,
                                tau_cap, full_system, out_path, guard);
        if (bench->parsed())
            return cmd_bench(scenarios_arg, horizon, replications, seed, tau_cap,
                             out_dir, emit_plot_data, guard);
        if (run->parsed()) return run_manifest(manifest_path, force);
    } catch (const Error& e) {
        std::fprintf(stderr, "schedlab: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "schedlab: %s\n", e.what());
        return 1;
    }
    return 2;
}

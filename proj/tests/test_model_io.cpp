#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "schedlab/model_io.hpp"
#include "schedlab/version.hpp"

using namespace schedlab;
using namespace schedlab::testing;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "schedlab_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// Runs the CLI binary, capturing stdout+stderr; returns the exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
    const auto out_path = temp_dir() / "cli_output.txt";
    const std::string command =
        std::string(SCHEDLAB_CLI_PATH) + " " + args + " > " + out_path.string() + " 2>&1";
    const int status = std::system(command.c_str());
    if (output) *output = slurp(out_path);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("model JSON round-trip is byte identical") {
    const auto models = two_sensor_models();
    const std::string once = models_to_json(models);
    const auto reparsed = parse_models(once);
    REQUIRE(reparsed.size() == models.size());
    CHECK(models_to_json(reparsed) == once);

    // Awkward doubles survive the 17-significant-digit encoding.
    auto awkward = scalar_model(0.1 + 0.2, 1.0 / 3.0, 0.7, 1e-6, 0.123456789012345678, 7.25);
    const std::string text = models_to_json(std::vector<ProcessModel>{awkward});
    const auto back = parse_models(text);
    CHECK(back[0].A(0, 0) == awkward.A(0, 0));
    CHECK(back[0].lambda == awkward.lambda);
    CHECK(models_to_json(back) == text);
}

TEST_CASE("model JSON accepts both array and object forms") {
    const std::string array_form =
        R"([{"id":0,"A":[[0.5]],"C":[[1]],"Q":[[1]],"R":[[1]],"lambda":0.9,"comm_cost":2}])";
    CHECK(parse_models(array_form).size() == 1);
    const std::string object_form = R"({"models":)" + array_form + "}";
    CHECK(parse_models(object_form).size() == 1);

    CHECK_THROWS_AS((void)parse_models("{"), Error);
    CHECK_THROWS_AS((void)parse_models(R"({"nope":[]})"), Error);
    const std::string missing_field =
        R"([{"id":0,"A":[[0.5]],"C":[[1]],"Q":[[1]],"R":[[1]],"lambda":0.9}])";
    CHECK_THROWS_AS((void)parse_models(missing_field), Error);
    const std::string bad_model =
        R"([{"id":3,"A":[[2.0]],"C":[[0.0]],"Q":[[1]],"R":[[1]],"lambda":0.9,"comm_cost":0}])";
    CHECK_THROWS_AS((void)parse_models(bad_model), ModelInvariant);
}

TEST_CASE("cli: feasibility report on the demo pair") {
    std::string output;
    const int status =
        run_cli("feasibility --models " + std::string(SCHEDLAB_DATA_DIR) +
                    "/two_sensor_demo.json --m 1",
                &output);
    CHECK(status == 0);
    const auto doc = nlohmann::json::parse(output);
    CHECK(doc["group_count"] == 1);
    CHECK(doc["feasible_for_m"] == true);
    CHECK(doc["metadata"]["tool_version"] == std::string(kVersion));
}

TEST_CASE("cli: unknown subcommand exits with a usage error") {
    std::string output;
    CHECK(run_cli("definitely-not-a-command", &output) == 2);
}

TEST_CASE("cli: solve writes stamped artifacts and refuses to overwrite") {
    const auto dir = temp_dir();
    const auto policy_csv = dir / "policy.csv";
    const auto summary_json = dir / "summary.json";
    std::filesystem::remove(policy_csv);
    std::filesystem::remove(summary_json);

    const std::string base = "solve --models " + std::string(SCHEDLAB_DATA_DIR) +
                             "/two_sensor_demo.json --m 1 --tau-cap 8 --out-policy " +
                             policy_csv.string() + " --out-summary " +
                             summary_json.string();
    std::string output;
    CHECK(run_cli(base, &output) == 0);
    const auto summary = nlohmann::json::parse(slurp(summary_json));
    CHECK(summary["converged"] == true);
    CHECK(summary["monotone_violations"] == 0);
    CHECK(summary["metadata"].contains("manifest_hash"));
    CHECK(summary["metadata"].contains("seed"));

    const std::string csv = slurp(policy_csv);
    CHECK(csv.rfind("# schedlab", 0) == 0);
    CHECK(csv.find("tau0,tau1,a0,a1,V") != std::string::npos);

    CHECK(run_cli(base, &output) == 1);  // refuses without --force
    CHECK(output.find(" --force") != std::string::npos);
    CHECK(run_cli(base + " --force", &output) == 0);
}

TEST_CASE("cli: generate is deterministic and index tables export") {
    const auto dir = temp_dir();
    const auto first = dir / "models_a.json";
    const auto second = dir / "models_b.json";
    std::filesystem::remove(first);
    std::filesystem::remove(second);
    CHECK(run_cli("generate --count 6 --seed 9 --out " + first.string()) == 0);
    CHECK(run_cli("generate --count 6 --seed 9 --out " + second.string()) == 0);
    CHECK(slurp(first) == slurp(second));

    const auto loaded = load_models(first.string());
    CHECK(loaded.size() == 6);

    const auto index_csv = dir / "index.csv";
    std::filesystem::remove(index_csv);
    std::string output;
    CHECK(run_cli("index --models " + first.string() + " --tau-cap 6 --out " +
                      index_csv.string(),
                  &output) == 0);
    const std::string csv = slurp(index_csv);
    CHECK(csv.find("sensor_id,tau,w") != std::string::npos);
}

TEST_CASE("cli: manifest run with m = 0 matches the idle chain") {
    const auto dir = temp_dir();
    const auto models_path = dir / "idle_models.json";
    const auto manifest_path = dir / "manifest.json";
    const auto out_dir = dir / "idle_out";
    std::filesystem::remove_all(out_dir);

    const auto model = scalar_model(0.5, 1.0, 1.0, 1.0, 0.9, 3.0);
    save_models(models_path.string(), std::vector<ProcessModel>{model});

    nlohmann::json manifest = {
        {"command", "simulate"},
        {"models", models_path.string()},
        {"output_dir", out_dir.string()},
        {"policies", {"max-delay"}},
        {"params",
         {{"m", 0}, {"horizon", 500}, {"replications", 2}, {"seed", 4}}}};
    std::ofstream(manifest_path) << manifest.dump(2);

    std::string output;
    CHECK(run_cli("run --manifest " + manifest_path.string(), &output) == 0);
    const auto report =
        nlohmann::json::parse(slurp(out_dir / "simulate_max-delay.json"));
    CHECK(report["avg_comm_cost"] == 0.0);
    CHECK(report["active_ratio"] == 0.0);

    // Idle chain cost: (1/T) sum_{k<T} c_e(k), computed independently.
    const auto ss = steady_state_covariance(model);
    double expected = 0.0;
    for (int k = 0; k < 500; ++k) expected += ss.error_cost(k);
    expected /= 500.0;
    CHECK(report["avg_error"].get<double>() == doctest::Approx(expected).epsilon(1e-9));

    nlohmann::json broken = {{"command", "simulate"}, {"output_dir", out_dir.string()},
                             {"params", {{"m", "one"}}}};
    std::ofstream(manifest_path) << broken.dump(2);
    CHECK(run_cli("run --manifest " + manifest_path.string() + " --force", &output) == 1);
    CHECK(output.find("manifest.params.m") != std::string::npos);
}

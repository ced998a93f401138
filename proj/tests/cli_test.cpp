#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string &name) {
    auto p = fs::temp_directory_path() / ("slice-sentinel-cli-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string &args, const std::string &env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + SENTINEL_CLI + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path &p) { return json::parse(slurp(p)); }

void write(const fs::path &p, const std::string &text) { std::ofstream(p) << text; }

} // namespace

TEST(Cli, RunWritesReportAndManifest) {
    auto dir = scratch("run");
    EXPECT_EQ(run("run attack1 --seed 7 --out " + dir.string()), 0);
    auto rep = read_json(dir / "attack1_report.json");
    EXPECT_EQ(rep["verdict"], "pass");
    EXPECT_EQ(rep["seed"], 7);
    auto csv = slurp(dir / "attack1_report.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "device,injected,delivered,dropped_at_entry,dropped_in_slice");
    auto m = read_json(dir / "manifest.json");
    for (const auto *k : {"command", "argv", "config_paths", "seed", "output_directory", "timestamp"}) {
        EXPECT_TRUE(m.contains(k)) << k;
    }
    EXPECT_EQ(m["command"], "run");
}

TEST(Cli, ReplayReproducesReport) {
    auto dir = scratch("replay");
    ASSERT_EQ(run("run attack2 --seed 3 --out " + dir.string()), 0);
    const auto first = slurp(dir / "attack2_report.json");
    fs::copy_file(dir / "manifest.json", dir / "saved_manifest.json");
    fs::remove(dir / "attack2_report.json");
    EXPECT_EQ(run("replay " + (dir / "saved_manifest.json").string()), 0);
    EXPECT_EQ(slurp(dir / "attack2_report.json"), first);
}

TEST(Cli, OutputEnvOverride) {
    auto flag_dir = scratch("flag");
    auto env_dir = scratch("env");
    EXPECT_EQ(run("run attack4 --out " + flag_dir.string(), "SLICE_SENTINEL_OUT=" + env_dir.string()), 0);
    EXPECT_TRUE(fs::exists(env_dir / "attack4_report.json"));
    EXPECT_FALSE(fs::exists(flag_dir / "attack4_report.json"));
}

TEST(Cli, ExitCodes) {
    auto dir = scratch("codes");
    EXPECT_EQ(run("run attack1 --topology " + (dir / "missing.json").string() + " --out " + dir.string()), 2);
    EXPECT_EQ(run("run attack7 --out " + dir.string()), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    write(dir / "nofeedback.json", R"({"sma": {"blacklist_feedback": false}})");
    EXPECT_EQ(run("run attack2 --config " + (dir / "nofeedback.json").string() + " --out " + dir.string()), 1);
    write(dir / "bad.json", "{not json");
    EXPECT_EQ(run("run attack2 --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
    EXPECT_EQ(run("ml --synthetic --classifier unknownX --out " + dir.string()), 2);
    EXPECT_EQ(run("ml --synthetic --select chi:99 --out " + dir.string()), 2);
}

TEST(Cli, MlMetricsConsistent) {
    auto dir = scratch("ml");
    ASSERT_EQ(run("ml --synthetic --classifier nb --select chi:5 --seed 4 --out " + dir.string()), 0);
    auto m = read_json(dir / "metrics.json");
    EXPECT_NEAR(m["tpr"].get<double>() + m["fnr"].get<double>(), 100.0, 1e-9);
    EXPECT_NEAR(m["tnr"].get<double>() + m["fpr"].get<double>(), 100.0, 1e-9);
    EXPECT_EQ(m["features"].size(), 5u);
    EXPECT_TRUE(fs::exists(dir / "roc.csv"));

    auto dt_dir = scratch("ml-dt");
    ASSERT_EQ(run("ml --synthetic --classifier dt --select ensemble:3 --out " + dt_dir.string()), 0);
    EXPECT_EQ(read_json(dt_dir / "metrics.json")["features"].size(), 3u);
}

TEST(Cli, AuditCleanAndTampered) {
    auto dir = scratch("audit");
    EXPECT_EQ(run("audit --node 3346 --out " + dir.string()), 0);
    EXPECT_EQ(read_json(dir / "audit_3346.json")["status"], "clean");
    write(dir / "rule.json",
          R"({"rule_id": "evil", "match": {"dst_ip": "10.0.0.8"}, "action": {"type": "drop"}, "priority": 900})");
    EXPECT_EQ(run("audit --node 3346 --inject " + (dir / "rule.json").string() + " --out " + dir.string()), 1);
    auto a = read_json(dir / "audit_3346.json");
    EXPECT_EQ(a["status"], "tampered");
    ASSERT_EQ(a["extra_rules"].size(), 1u);
    EXPECT_EQ(a["extra_rules"][0]["rule_id"], "evil");
    EXPECT_EQ(run("audit --node nowhere --out " + dir.string()), 2);
}

TEST(Cli, BenchOutputs) {
    auto dir = scratch("bench");
    ASSERT_EQ(run("bench flow-setup --sizes 5 10 --runs 2 --out " + dir.string()), 0);
    auto csv = slurp(dir / "bench_flow-setup.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,mean_ms,stdev_ms,security");
    EXPECT_EQ(read_json(dir / "bench_flow-setup.json")["rows"].size(), 4u);
    ASSERT_EQ(run("bench signatures --counts 0 10 --runs 1 --out " + dir.string()), 0);
    EXPECT_EQ(read_json(dir / "bench_signatures.json")["rows"].size(), 2u);
}

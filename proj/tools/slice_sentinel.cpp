// slice-sentinel: command-line driver for scenarios, benchmarks, classifier
// evaluation and switch audits.
//
// Exit codes: 0 success, 1 oracle failure or dirty audit, 2 usage/config error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sentinel/anomaly.hpp"
#include "sentinel/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sentinel;

#ifndef SENTINEL_DATA_DIR
#define SENTINEL_DATA_DIR "data"
#endif

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json(const std::string &path) {
    if (!fs::exists(path)) throw UsageError("file not found: " + path);
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw UsageError(path + ": " + e.what());
    }
}

void write_file(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw UsageError("cannot write " + p.string());
    out << text;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Common {
    std::string out{"out"};
    std::uint64_t seed{1};
    bool verbose{false};
    std::vector<std::string> argv; // subcommand and its arguments, for the manifest

    fs::path out_dir() const {
        const char *env = std::getenv("SLICE_SENTINEL_OUT");
        fs::path p = env && *env ? fs::path(env) : fs::path(out);
        fs::create_directories(p);
        return p;
    }
};

void write_manifest(const fs::path &dir, const Common &c, const std::string &command, const json &config_paths) {
    json m{{"command", command},
           {"argv", c.argv},
           {"config_paths", config_paths},
           {"seed", c.seed},
           {"output_directory", dir.string()},
           {"timestamp", utc_now()}};
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string scenario;
    std::string data_dir{SENTINEL_DATA_DIR};
    std::string topology, policies, signatures, config;
};

int cmd_run(const RunArgs &a, const Common &c) {
    auto cfg = scenarios::ScenarioConfig::bundled(a.data_dir);
    json paths{{"data_dir", a.data_dir}};
    if (!a.topology.empty()) {
        cfg.topology = read_json(a.topology);
        paths["topology"] = a.topology;
    }
    if (!a.policies.empty()) {
        cfg.policies = read_json(a.policies);
        paths["policies"] = a.policies;
    }
    if (!a.signatures.empty()) {
        cfg.signatures = secfn::load_signatures(read_json(a.signatures));
        paths["signatures"] = a.signatures;
    }
    if (!a.config.empty()) {
        cfg.apply(read_json(a.config));
        paths["config"] = a.config;
    }
    if (c.verbose) cfg.events = &std::cout;
    auto report = scenarios::run_scenario(a.scenario, cfg, c.seed);
    const auto dir = c.out_dir();
    write_file(dir / (a.scenario + "_report.json"), report.to_json().dump(2) + "\n");
    write_file(dir / (a.scenario + "_report.csv"), report.to_csv());
    write_manifest(dir, c, "run", paths);
    for (const auto &chk : report.checks) {
        if (c.verbose) {
            std::cout << json{{"type", "Check"}, {"name", chk.name}, {"pass", chk.pass}, {"detail", chk.detail}}.dump()
                      << "\n";
        } else if (!chk.pass) {
            std::cerr << "check failed: " << chk.name << " (" << chk.detail << ")\n";
        }
    }
    std::cerr << a.scenario << " seed=" << c.seed << ": " << (report.pass ? "pass" : "FAIL") << "\n";
    return report.pass ? 0 : 1;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string kind;
    std::vector<int> sizes{100, 200, 300, 400, 500};
    std::vector<std::size_t> counts{0, 10, 100, 500, 1000};
    int runs{10};
    SimTime window_ms{1000};
    std::string costs;
    bool serial{false};
};

int cmd_bench(const BenchArgs &a, const Common &c) {
    scenarios::BenchReport rep;
    json paths = json::object();
    if (a.kind == "flow-setup") {
        scenarios::FlowSetupConfig fc;
        fc.sizes = a.sizes;
        fc.runs = a.runs;
        fc.arrival_window_ms = a.window_ms;
        fc.seed = c.seed;
        if (!a.costs.empty()) {
            fc.costs = sma::CostModel::from_json(read_json(a.costs), fc.costs);
            paths["costs"] = a.costs;
        }
        rep = scenarios::bench_flow_setup(fc, a.serial ? kernels::Execution::serial : kernels::Execution::parallel);
    } else {
        scenarios::SignatureBenchConfig sc;
        sc.counts = a.counts;
        sc.runs = a.runs;
        sc.seed = c.seed;
        rep = scenarios::bench_signature_latency(sc);
    }
    const auto dir = c.out_dir();
    write_file(dir / ("bench_" + a.kind + ".json"), rep.to_json().dump(2) + "\n");
    write_file(dir / ("bench_" + a.kind + ".csv"), rep.to_csv());
    write_manifest(dir, c, "bench", paths);
    if (c.verbose) std::cout << json{{"type", "BenchReport"}, {"report", rep.to_json()}}.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------- ml

struct MlArgs {
    std::string dataset;
    bool synthetic{false};
    std::size_t rows{2000};
    std::string classifier{"nb"};
    std::string select{"none"};
    int bins{10};
    double train_fraction{0.7};
    int max_depth{-1};
};

int cmd_ml(const MlArgs &a, const Common &c) {
    if (a.classifier != "nb" && a.classifier != "dt") throw UsageError("unknown classifier: " + a.classifier);
    std::optional<anomaly::SelectMethod> method;
    std::size_t k = 0;
    if (a.select != "none") {
        const auto colon = a.select.find(':');
        const auto name = a.select.substr(0, colon);
        if (name == "chi") {
            method = anomaly::SelectMethod::chi_square;
        } else if (name == "ensemble") {
            method = anomaly::SelectMethod::ensemble;
        } else {
            throw UsageError("unknown selector: " + a.select);
        }
        if (colon == std::string::npos) throw UsageError("selector needs a feature count, e.g. chi:5");
        try {
            k = std::stoul(a.select.substr(colon + 1));
        } catch (const std::exception &) {
            throw UsageError("bad feature count in " + a.select);
        }
    }
    if (a.synthetic == !a.dataset.empty()) throw UsageError("give exactly one of --dataset or --synthetic");

    anomaly::Dataset data;
    json paths = json::object();
    if (a.synthetic) {
        data = anomaly::synthetic_dataset(c.seed, a.rows);
    } else {
        if (!fs::exists(a.dataset)) throw UsageError("file not found: " + a.dataset);
        std::ifstream in(a.dataset);
        data = anomaly::read_csv(in);
        paths["dataset"] = a.dataset;
    }
    auto [train, test] = anomaly::split(data, a.train_fraction, c.seed);
    auto binner = anomaly::Binner::fit(train, a.bins);
    auto btrain = binner.transform(train);
    auto btest = binner.transform(test);
    std::vector<std::size_t> features(btrain.arity());
    for (std::size_t i = 0; i < features.size(); ++i) features[i] = i;
    if (method) {
        try {
            features = anomaly::select_features(btrain, *method, k);
        } catch (const Error &e) {
            throw UsageError(e.what());
        }
        btrain = btrain.project(features);
        btest = btest.project(features);
    }

    anomaly::EvalMetrics m;
    json model;
    if (a.classifier == "nb") {
        auto nb = anomaly::train_nb(btrain);
        m = anomaly::evaluate(
            [&](std::span<const int> row) {
                auto [label, p] = nb.predict(row);
                return anomaly::Prediction{label, p};
            },
            btest);
    } else {
        auto dt = anomaly::train_dt(btrain, a.max_depth < 0 ? std::nullopt : std::optional<int>(a.max_depth));
        m = anomaly::evaluate([&](std::span<const int> row) { return anomaly::Prediction{dt.predict(row), dt.score(row)}; },
                              btest);
        model = {{"nodes", dt.node_count()}, {"depth", dt.depth()}};
    }
    json out = m.to_json();
    out["classifier"] = a.classifier;
    out["select"] = a.select;
    json names = json::array();
    for (auto f : features) names.push_back(data.feature_names[f]);
    out["features"] = names;
    out["train_rows"] = train.rows.size();
    out["test_rows"] = test.rows.size();
    if (!model.is_null()) out["model"] = model;

    const auto dir = c.out_dir();
    write_file(dir / "metrics.json", out.dump(2) + "\n");
    write_file(dir / "roc.csv", m.roc_csv());
    write_manifest(dir, c, "ml", paths);
    if (c.verbose) std::cout << json{{"type", "Metrics"}, {"metrics", out}}.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------- audit

struct AuditArgs {
    std::string node;
    std::string data_dir{SENTINEL_DATA_DIR};
    std::string topology, policies, inject;
};

int cmd_audit(const AuditArgs &a, const Common &c) {
    auto cfg = scenarios::ScenarioConfig::bundled(a.data_dir);
    json paths{{"data_dir", a.data_dir}};
    if (!a.topology.empty()) {
        cfg.topology = read_json(a.topology);
        paths["topology"] = a.topology;
    }
    if (!a.policies.empty()) {
        cfg.policies = read_json(a.policies);
        paths["policies"] = a.policies;
    }
    auto f = fabric::Fabric::build(cfg.topology);
    if (!f.has_node(a.node)) throw UsageError("unknown node: " + a.node);
    auto sc = cfg.sma;
    sc.seed = c.seed;
    sma::Sma s(f, policy::PolicyRepository::load(cfg.policies, f.slice_ids()), cfg.signatures, sc);
    if (c.verbose) s.set_event_stream(&std::cout);
    if (!a.inject.empty()) {
        auto doc = read_json(a.inject);
        std::vector<json> rules = doc.is_array() ? std::vector<json>(doc.begin(), doc.end()) : std::vector<json>{doc};
        for (const auto &r : rules) {
            f.apply_flow_mod(a.node, {fabric::FlowMod::Op::add, fabric::rule_from_json(r)}, fabric::Provenance::external);
        }
        paths["inject"] = a.inject;
    }
    const auto rec = s.audit_now(a.node);
    json out = rec.result.to_json();
    out["status"] = rec.result.clean ? "clean" : "tampered";
    out["restored"] = rec.restored;
    if (!rec.diff.empty()) out["diff"] = rec.diff;
    const auto dir = c.out_dir();
    write_file(dir / ("audit_" + a.node + ".json"), out.dump(2) + "\n");
    write_manifest(dir, c, "audit", paths);
    std::cerr << "audit " << a.node << ": " << (rec.result.clean ? "clean" : "tampered") << "\n";
    return rec.result.clean ? 0 : 1;
}

int dispatch(int argc, const char *const *argv);

int cmd_replay(const std::string &manifest) {
    auto m = read_json(manifest);
    if (!m.contains("argv") || !m["argv"].is_array()) throw UsageError("manifest has no argv");
    std::vector<std::string> args{"slice-sentinel"};
    for (const auto &s : m["argv"]) args.push_back(s.get<std::string>());
    std::vector<const char *> ptrs;
    for (const auto &s : args) ptrs.push_back(s.c_str());
    return dispatch(static_cast<int>(ptrs.size()), ptrs.data());
}

int dispatch(int argc, const char *const *argv) {
    CLI::App app{"slice-sentinel: slice security simulator"};
    app.require_subcommand(1);
    Common c;
    for (int i = 1; i < argc; ++i) c.argv.emplace_back(argv[i]);

    auto add_common = [&c](CLI::App *sub) {
        sub->add_option("--seed", c.seed, "seed for every random choice");
        sub->add_option("--out", c.out, "output directory (SLICE_SENTINEL_OUT overrides)");
        sub->add_flag("--verbose", c.verbose, "JSON-lines event stream on stdout");
    };

    RunArgs ra;
    auto *run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", ra.scenario, "scenario id")->required()->check(CLI::IsMember(scenarios::scenario_ids()));
    run->add_option("--topology", ra.topology, "topology JSON");
    run->add_option("--policies", ra.policies, "policy repository JSON");
    run->add_option("--signatures", ra.signatures, "signature list JSON");
    run->add_option("--config", ra.config, "scenario config JSON {sma, scenario}");
    run->add_option("--data-dir", ra.data_dir, "directory with the bundled configs");
    add_common(run);

    BenchArgs ba;
    auto *bench = app.add_subcommand("bench", "run a benchmark sweep");
    bench->add_option("kind", ba.kind, "flow-setup | signatures")->required()->check(CLI::IsMember({"flow-setup", "signatures"}));
    bench->add_option("--sizes", ba.sizes, "gNodeB counts");
    bench->add_option("--counts", ba.counts, "signature counts");
    bench->add_option("--runs", ba.runs, "runs per size")->check(CLI::PositiveNumber);
    bench->add_option("--window", ba.window_ms, "flow arrival window in ms")->check(CLI::PositiveNumber);
    bench->add_option("--costs", ba.costs, "cost model JSON (microseconds)");
    bench->add_flag("--serial", ba.serial, "use the serial reference instead of the OpenMP path");
    add_common(bench);

    MlArgs ma;
    auto *ml = app.add_subcommand("ml", "train and evaluate a flow classifier");
    ml->add_option("--dataset", ma.dataset, "CSV with a label column");
    ml->add_flag("--synthetic", ma.synthetic, "use the seeded synthetic dataset");
    ml->add_option("--rows", ma.rows, "synthetic row count");
    ml->add_option("--classifier", ma.classifier, "nb | dt");
    ml->add_option("--select", ma.select, "none | chi:K | ensemble:K");
    ml->add_option("--bins", ma.bins, "equal-frequency bins per feature")->check(CLI::PositiveNumber);
    ml->add_option("--train-fraction", ma.train_fraction, "train share of the split")->check(CLI::Range(0.0, 1.0));
    ml->add_option("--max-depth", ma.max_depth, "tree depth cap, -1 for none");
    add_common(ml);

    AuditArgs aa;
    auto *audit = app.add_subcommand("audit", "audit one switch against the activity log");
    audit->add_option("--node", aa.node, "switch id")->required();
    audit->add_option("--topology", aa.topology, "topology JSON");
    audit->add_option("--policies", aa.policies, "policy repository JSON");
    audit->add_option("--inject", aa.inject, "rule JSON installed behind the controller before the audit");
    audit->add_option("--data-dir", aa.data_dir, "directory with the bundled configs");
    add_common(audit);

    std::string manifest;
    auto *replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("manifest", manifest, "manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*run) return cmd_run(ra, c);
    if (*bench) return cmd_bench(ba, c);
    if (*ml) return cmd_ml(ma, c);
    if (*audit) return cmd_audit(aa, c);
    return cmd_replay(manifest);
}

} // namespace

int main(int argc, char **argv) {
    try {
        return dispatch(argc, argv);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

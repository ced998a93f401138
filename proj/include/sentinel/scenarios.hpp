// scenarios.hpp
//
// Reproducible experiment harness: the four attack scenarios, Shellshock
// prevention, the flow_mod audit, the encrypted flow path, and the
// flow-setup and signature-latency benchmarks. Every report is a pure
// function of (scenario id, configuration, seed).

#ifndef SENTINEL_SCENARIOS_HPP
#define SENTINEL_SCENARIOS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentinel/kernels.hpp"
#include "sentinel/secfn.hpp"
#include "sentinel/sma.hpp"

namespace sentinel::scenarios {

struct PacketCounts {
    std::uint64_t injected{0};
    std::uint64_t delivered{0};
    std::uint64_t dropped_at_entry{0};
    std::uint64_t dropped_in_slice{0};

    bool conserved() const { return injected == delivered + dropped_at_entry + dropped_in_slice; }
    nlohmann::json to_json() const;
};

struct Check {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct ScenarioReport {
    std::string scenario_id;
    std::uint64_t seed{0};
    PacketCounts packets;
    std::map<std::string, PacketCounts> per_device; // keyed by UE id
    std::map<std::string, std::map<std::string, std::uint64_t>> drop_reasons; // UE id -> reason -> count
    std::vector<secfn::Alert> alerts;
    std::vector<secfn::Alert> admin_alerts;
    std::vector<secfn::AuditResult> audits; // on-demand and non-clean periodic audits
    std::size_t periodic_audits{0};
    std::vector<double> setup_times_ms;
    std::vector<Check> checks;
    nlohmann::json details = nlohmann::json::object();
    bool pass{false};

    nlohmann::json to_json() const;
    /// flat per-device table: device, injected, delivered, dropped_at_entry, dropped_in_slice
    std::string to_csv() const;
};

/// Inputs shared by every scenario.
struct ScenarioConfig {
    nlohmann::json topology;
    nlohmann::json policies;
    std::vector<secfn::Signature> signatures;
    sma::SmaConfig sma;
    nlohmann::json params = nlohmann::json::object(); // scenario knobs
    std::ostream *events{nullptr};                      // JSON-lines stream handed to the SMA

    /// topology, policies and signatures shipped in the data directory
    static ScenarioConfig bundled(const std::string &data_dir);
    /// applies a config document {"sma": {...}, "scenario": {...}}
    void apply(const nlohmann::json &doc);
};

const std::vector<std::string> &scenario_ids();

/// throws Error(Errc::not_found) for an unknown id
ScenarioReport run_scenario(const std::string &id, const ScenarioConfig &cfg, std::uint64_t seed);

// ---------------------------------------------------------------- traffic

/// Constant-rate generator from one UE towards one destination address.
struct TrafficSpec {
    std::string ue;
    Ipv4 dst;
    double pps{10};
    SimTime start_ms{0};
    SimTime end_ms{1000};                 // exclusive
    std::optional<std::uint64_t> max_packets;
    std::size_t payload_min{64};
    std::size_t payload_max{512};
    std::optional<Bytes> payload;         // fixed payload instead of random bytes
};

struct TimedPacket {
    fabric::Packet packet;
    std::string ue;
    std::size_t generator{0};
};

/// merged schedule ordered by time, then generator index
std::vector<TimedPacket> make_schedule(const fabric::Fabric &fabric, const std::vector<TrafficSpec> &specs,
                                       std::uint64_t seed);

// ---------------------------------------------------------------- topologies for property tests

/// Random topology: `edges` edge switches, a core chain and `hosts` service
/// hosts, each in its own slice, with tamper flags drawn per host.
nlohmann::json random_topology(std::uint64_t seed, int edges, int hosts, double tamper_probability);

/// n gNodeBs around one core with a single service host; one UE per gNodeB
nlohmann::json star_topology(int n_gnodebs, SimTime link_latency_ms = 1);
nlohmann::json star_policies(int n_gnodebs);

// ---------------------------------------------------------------- benchmarks

struct FlowSetupConfig {
    std::vector<int> sizes{100, 200, 300, 400, 500};
    int runs{10};
    SimTime arrival_window_ms{1000};
    sma::CostModel costs;
    SimTime link_latency_ms{1};
    std::uint64_t seed{1};
};

struct FlowSetupRow {
    int n{0};
    bool security{false};
    double mean_ms{0};
    double stdev_ms{0};
    std::vector<double> run_means;
};

struct BenchReport {
    std::string kind;
    std::uint64_t seed{0};
    std::vector<FlowSetupRow> flow_setup;
    struct SigRow {
        std::size_t n_signatures{0};
        double mean_us{0};
        double stdev_us{0};
    };
    std::vector<SigRow> signatures;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// mean flow setup time of one run: every UE starts one flow at a seeded
/// arrival time inside the window; arrivals for UE i do not depend on n
double flow_setup_run(int n, bool security, int run, const FlowSetupConfig &cfg);

/// rows for security off and on at every size
BenchReport bench_flow_setup(const FlowSetupConfig &cfg, kernels::Execution exec = kernels::Execution::parallel);

struct SignatureBenchConfig {
    std::vector<std::size_t> counts{0, 10, 100, 500, 1000};
    int runs{10};
    int packets_per_run{200};
    double base_us{20};          // forwarding without any signature
    double per_signature_us{0.5};
    std::uint64_t seed{1};
};

/// modeled validation latency of one packet against a signature list
double signature_latency_us(std::span<const secfn::Signature> sigs, const fabric::Packet &packet,
                            const SignatureBenchConfig &cfg);

BenchReport bench_signature_latency(const SignatureBenchConfig &cfg);

} // namespace sentinel::scenarios

#endif // SENTINEL_SCENARIOS_HPP

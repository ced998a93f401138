// bench_harness.cpp
//
// Flow-setup and signature-latency benchmarks in simulated time.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#ifdef SENTINEL_HAVE_OPENMP
#include <omp.h>
#endif

#include "sentinel/scenarios.hpp"

namespace sentinel::scenarios {

using nlohmann::json;

namespace {

double mean_of(const std::vector<double> &v) {
    if (v.empty()) return 0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// sample standard deviation, 0 for fewer than two values
double stdev_of(const std::vector<double> &v) {
    if (v.size() < 2) return 0;
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

json BenchReport::to_json() const {
    json j{{"kind", kind}, {"seed", seed}};
    json rows = json::array();
    for (const auto &r : flow_setup) {
        rows.push_back({{"n", r.n},
                        {"security", r.security ? "on" : "off"},
                        {"mean_ms", r.mean_ms},
                        {"stdev_ms", r.stdev_ms},
                        {"run_means_ms", r.run_means}});
    }
    for (const auto &r : signatures) {
        rows.push_back({{"n_signatures", r.n_signatures}, {"mean_us", r.mean_us}, {"stdev_us", r.stdev_us}});
    }
    j["rows"] = std::move(rows);
    return j;
}

std::string BenchReport::to_csv() const {
    std::ostringstream os;
    if (kind == "signatures") {
        os << "n_signatures,mean_us,stdev_us\n";
        for (const auto &r : signatures) os << r.n_signatures << ',' << fmt(r.mean_us) << ',' << fmt(r.stdev_us) << '\n';
    } else {
        os << "n,mean_ms,stdev_ms,security\n";
        for (const auto &r : flow_setup) {
            os << r.n << ',' << fmt(r.mean_ms) << ',' << fmt(r.stdev_ms) << ',' << (r.security ? "on" : "off") << '\n';
        }
    }
    return os.str();
}

double flow_setup_run(int n, bool security, int run, const FlowSetupConfig &cfg) {
    if (n < 1) throw Error(Errc::invalid_argument, "n must be at least 1");
    if (cfg.arrival_window_ms < 1) throw Error(Errc::invalid_argument, "arrival window must be positive");
    auto fab = fabric::Fabric::build(star_topology(n, cfg.link_latency_ms));
    sma::SmaConfig sc;
    sc.security = security;
    sc.costs = cfg.costs;
    sc.audit_period_ms = 0;
    sc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run));
    sma::Sma sma(fab, policy::PolicyRepository::load(star_policies(n)), {}, sc);

    // arrival of UE i depends on (seed, run, i) only, so larger sweeps extend smaller ones
    const auto run_seed = derive_seed(cfg.seed, 0xF100 + static_cast<std::uint64_t>(run));
    std::vector<std::pair<SimTime, int>> arrivals;
    arrivals.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        Rng r(derive_seed(run_seed, static_cast<std::uint64_t>(i)));
        arrivals.emplace_back(r.uniform_int(0, cfg.arrival_window_ms - 1), i);
    }
    std::sort(arrivals.begin(), arrivals.end());

    const Ipv4 dst = Ipv4::parse("10.1.0.1");
    double total = 0;
    std::size_t flows = 0;
    for (const auto &[t, i] : arrivals) {
        const auto ue_id = "ue" + std::to_string(i);
        const auto *ue = fab.ue(ue_id);
        fabric::Packet p;
        p.src_ip = ue->ip;
        p.src_mac = ue->mac;
        p.dst_ip = dst;
        p.dst_mac = Mac::parse("02:00:00:01:00:01");
        p.flow_id = ue_id;
        p.virtual_timestamp = t;
        p.payload = Bytes(64, 0x5A);
        auto r = sma.send_from_ue(std::move(p), ue_id);
        if (!r.decision) throw Error(Errc::routing, "flow of " + ue_id + " was not punted");
        total += r.decision->setup_ms;
        ++flows;
    }
    return total / static_cast<double>(flows);
}

BenchReport bench_flow_setup(const FlowSetupConfig &cfg, kernels::Execution exec) {
    if (cfg.runs < 1) throw Error(Errc::invalid_argument, "runs must be at least 1");
    for (int n : cfg.sizes) {
        if (n < 1) throw Error(Errc::invalid_argument, "n must be at least 1");
    }
    const int sizes = static_cast<int>(cfg.sizes.size());
    const int tasks = sizes * 2 * cfg.runs;
    std::vector<double> means(static_cast<std::size_t>(tasks), 0.0);
    auto task = [&](int k) {
        const int s = k / (2 * cfg.runs);
        const bool security = (k / cfg.runs) % 2 == 1;
        const int run = k % cfg.runs;
        means[static_cast<std::size_t>(k)] = flow_setup_run(cfg.sizes[static_cast<std::size_t>(s)], security, run, cfg);
    };

    if (exec == kernels::Execution::serial) {
        for (int k = 0; k < tasks; ++k) task(k);
    } else {
        std::string error;
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < tasks; ++k) {
            try {
                task(k);
            } catch (const std::exception &e) {
#pragma omp critical
                if (error.empty()) error = e.what();
            }
        }
        if (!error.empty()) throw Error(Errc::invalid_argument, error);
    }

    BenchReport rep;
    rep.kind = "flow-setup";
    rep.seed = cfg.seed;
    for (int s = 0; s < sizes; ++s) {
        for (int sec = 0; sec < 2; ++sec) {
            FlowSetupRow row;
            row.n = cfg.sizes[static_cast<std::size_t>(s)];
            row.security = sec == 1;
            const auto first = means.begin() + (s * 2 + sec) * cfg.runs;
            row.run_means.assign(first, first + cfg.runs);
            row.mean_ms = mean_of(row.run_means);
            row.stdev_ms = stdev_of(row.run_means);
            rep.flow_setup.push_back(std::move(row));
        }
    }
    return rep;
}

double signature_latency_us(std::span<const secfn::Signature> sigs, const fabric::Packet &packet,
                            const SignatureBenchConfig &cfg) {
    std::size_t scanned = 0;
    secfn::scan_signatures(sigs, packet, &scanned);
    return cfg.base_us + static_cast<double>(scanned) * cfg.per_signature_us;
}

BenchReport bench_signature_latency(const SignatureBenchConfig &cfg) {
    if (cfg.runs < 1 || cfg.packets_per_run < 1) throw Error(Errc::invalid_argument, "runs and packets must be positive");
    BenchReport rep;
    rep.kind = "signatures";
    rep.seed = cfg.seed;
    for (std::size_t count : cfg.counts) {
        std::vector<double> samples;
        for (int run = 0; run < cfg.runs; ++run) {
            Rng rng(derive_seed(cfg.seed, count * 1000 + static_cast<std::uint64_t>(run)));
            std::vector<secfn::Signature> sigs;
            sigs.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                char id[32];
                std::snprintf(id, sizeof id, "sig-%05zu", i);
                Bytes pattern{0xFF, 0x00};
                auto tail = rng.bytes(8);
                pattern.insert(pattern.end(), tail.begin(), tail.end());
                sigs.push_back({id, std::move(pattern), secfn::SignatureScope::payload, {}});
            }
            for (int k = 0; k < cfg.packets_per_run; ++k) {
                fabric::Packet p;
                p.payload = rng.bytes(static_cast<std::size_t>(rng.uniform_int(64, 512)));
                samples.push_back(signature_latency_us(sigs, p, cfg));
            }
        }
        rep.signatures.push_back({count, mean_of(samples), stdev_of(samples)});
    }
    return rep;
}

} // namespace sentinel::scenarios

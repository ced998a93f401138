// scenarios.cpp
//
// Scenario drivers. Each run builds its own fabric and SMA, replays a
// seeded traffic schedule and evaluates the scenario oracle.

#include "sentinel/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace sentinel::scenarios {

using nlohmann::json;

json PacketCounts::to_json() const {
    return {{"injected", injected},
            {"delivered", delivered},
            {"dropped_at_entry", dropped_at_entry},
            {"dropped_in_slice", dropped_in_slice}};
}

json ScenarioReport::to_json() const {
    json j;
    j["scenario_id"] = scenario_id;
    j["seed"] = seed;
    j["verdict"] = pass ? "pass" : "fail";
    j["packets"] = packets.to_json();
    json dev = json::object();
    for (const auto &[id, c] : per_device) {
        auto d = c.to_json();
        auto r = drop_reasons.find(id);
        d["drop_reasons"] = r == drop_reasons.end() ? json::object() : json(r->second);
        dev[id] = std::move(d);
    }
    j["per_device"] = std::move(dev);
    j["alerts"] = json::array();
    for (const auto &a : alerts) j["alerts"].push_back(a.to_json());
    j["admin_alerts"] = json::array();
    for (const auto &a : admin_alerts) j["admin_alerts"].push_back(a.to_json());
    j["audits"] = json::array();
    for (const auto &a : audits) j["audits"].push_back(a.to_json());
    j["periodic_audits"] = periodic_audits;
    double mean = 0;
    for (double t : setup_times_ms) mean += t;
    if (!setup_times_ms.empty()) mean /= static_cast<double>(setup_times_ms.size());
    j["timings"] = {{"setup_ms", setup_times_ms}, {"mean_setup_ms", mean}};
    j["checks"] = json::array();
    for (const auto &c : checks) j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["details"] = details;
    return j;
}

std::string ScenarioReport::to_csv() const {
    std::ostringstream os;
    os << "device,injected,delivered,dropped_at_entry,dropped_in_slice\n";
    for (const auto &[id, c] : per_device) {
        os << id << ',' << c.injected << ',' << c.delivered << ',' << c.dropped_at_entry << ','
           << c.dropped_in_slice << '\n';
    }
    os << "total," << packets.injected << ',' << packets.delivered << ',' << packets.dropped_at_entry << ','
       << packets.dropped_in_slice << '\n';
    return os.str();
}

namespace {

json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::config, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw Error(Errc::config, path + ": " + e.what());
    }
}

} // namespace

ScenarioConfig ScenarioConfig::bundled(const std::string &data_dir) {
    ScenarioConfig c;
    c.topology = read_json_file(data_dir + "/topology.json");
    c.policies = read_json_file(data_dir + "/policies.json");
    c.signatures = secfn::load_signatures(read_json_file(data_dir + "/signatures.json"));
    std::ifstream probe(data_dir + "/scenario_defaults.json");
    if (probe) c.apply(read_json_file(data_dir + "/scenario_defaults.json"));
    return c;
}

void ScenarioConfig::apply(const json &doc) {
    if (!doc.is_object()) throw Error(Errc::config, "scenario config must be an object");
    for (const auto &[k, v] : doc.items()) {
        if (k == "sma") {
            sma = sma::SmaConfig::from_json(v, sma);
        } else if (k == "scenario") {
            if (!v.is_object()) throw Error(Errc::config, "scenario section must be an object");
            for (const auto &[pk, pv] : v.items()) params[pk] = pv;
        } else {
            throw Error(Errc::config, "unknown config section: " + k);
        }
    }
}

// ---------------------------------------------------------------- traffic

std::vector<TimedPacket> make_schedule(const fabric::Fabric &fabric, const std::vector<TrafficSpec> &specs,
                                       std::uint64_t seed) {
    std::vector<TimedPacket> out;
    for (std::size_t g = 0; g < specs.size(); ++g) {
        const auto &s = specs[g];
        const auto *ue = fabric.ue(s.ue);
        if (!ue) throw Error(Errc::not_found, "unknown UE " + s.ue);
        if (!(s.pps > 0)) throw Error(Errc::invalid_argument, "pps must be positive");
        if (s.payload_min > s.payload_max) throw Error(Errc::invalid_argument, "payload_min > payload_max");
        Mac dst_mac;
        if (auto h = fabric.host_by_ip(s.dst)) {
            if (const auto &m = fabric.node(*h).mac) dst_mac = *m;
        }
        Rng rng(derive_seed(seed, g + 1));
        const double interval = 1000.0 / s.pps;
        const std::string flow_id = s.ue + ">" + s.dst.str();
        for (std::uint64_t k = 0;; ++k) {
            if (s.max_packets && k >= *s.max_packets) break;
            const SimTime t = s.start_ms + static_cast<SimTime>(std::floor(static_cast<double>(k) * interval));
            if (t >= s.end_ms) break;
            fabric::Packet p;
            p.src_ip = ue->ip;
            p.src_mac = ue->mac;
            p.dst_ip = s.dst;
            p.dst_mac = dst_mac;
            p.flow_id = flow_id;
            p.virtual_timestamp = t;
            if (s.payload) {
                p.payload = *s.payload;
            } else {
                auto len = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(s.payload_min),
                                                                    static_cast<std::int64_t>(s.payload_max)));
                p.payload = rng.bytes(len);
            }
            out.push_back({std::move(p), s.ue, g});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const TimedPacket &a, const TimedPacket &b) {
        return a.packet.virtual_timestamp < b.packet.virtual_timestamp;
    });
    return out;
}

namespace {

constexpr SimTime kForever = std::numeric_limits<SimTime>::max();

template <class T>
T param(const ScenarioConfig &cfg, const char *key, T def) {
    auto it = cfg.params.find(key);
    if (it == cfg.params.end()) return def;
    try {
        return it->template get<T>();
    } catch (const json::exception &) {
        throw Error(Errc::config, std::string{"bad scenario parameter "} + key);
    }
}

Ipv4 host_ip(const fabric::Fabric &f, const NodeId &host) {
    const auto &n = f.node(host);
    if (!n.ip) throw Error(Errc::config, "host " + host + " has no address");
    return *n.ip;
}

NodeId host_for_service(const fabric::Fabric &f, const std::string &service) {
    for (const auto &[id, n] : f.nodes()) {
        if (n.kind == fabric::NodeKind::host && n.service == service) return id;
    }
    throw Error(Errc::config, "topology has no host offering " + service);
}

const fabric::UserEquipment &ue_of(const fabric::Fabric &f, const std::string &id) {
    const auto *ue = f.ue(id);
    if (!ue) throw Error(Errc::config, "topology has no UE " + id);
    return *ue;
}

Check check(std::string name, bool pass, std::string detail = {}) { return {std::move(name), pass, std::move(detail)}; }

bool ends_with(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// One fabric + SMA instance with packet accounting into a report.
class Run {
public:
    Run(const ScenarioConfig &cfg, std::uint64_t seed, ScenarioReport &report,
        std::optional<std::vector<secfn::Signature>> signatures = std::nullopt,
        std::optional<sma::SmaConfig> sma_cfg = std::nullopt)
        : fabric_(fabric::Fabric::build(cfg.topology)), report_(report) {
        auto sc = sma_cfg ? *sma_cfg : cfg.sma;
        sc.seed = seed;
        sma_ = std::make_unique<sma::Sma>(fabric_, policy::PolicyRepository::load(cfg.policies, fabric_.slice_ids()),
                                          signatures ? *signatures : cfg.signatures, sc);
        sma_->set_event_stream(cfg.events);
    }

    fabric::Fabric &fabric() { return fabric_; }
    sma::Sma &sma() { return *sma_; }

    sma::PacketResult send(const TimedPacket &tp) {
        auto r = sma_->send_from_ue(tp.packet, tp.ue);
        account(tp.ue, tp.packet, r);
        return r;
    }

    void send_all(const std::vector<TimedPacket> &schedule) {
        for (const auto &tp : schedule) send(tp);
    }

    /// advances the clock and copies the SMA's records into the report
    void finish(SimTime end) {
        sma_->advance_to(std::max(end, sma_->now()));
        report_.alerts = sma_->alerts();
        report_.admin_alerts = sma_->admin_alerts();
        report_.audits.clear();
        report_.periodic_audits = 0;
        for (const auto &a : sma_->audits()) {
            if (a.periodic) ++report_.periodic_audits;
            if (!a.periodic || !a.result.clean) report_.audits.push_back(a.result);
        }
        report_.setup_times_ms.clear();
        for (const auto &d : sma_->decisions()) {
            if (d.kind == sma::FlowDecision::Kind::installed || d.kind == sma::FlowDecision::Kind::generic) {
                report_.setup_times_ms.push_back(d.setup_ms);
            }
        }
    }

    std::size_t unauthorized_deliveries() const { return unauthorized_; }

private:
    void account(const std::string &ue, const fabric::Packet &p, const sma::PacketResult &r) {
        auto &dev = report_.per_device[ue];
        ++dev.injected;
        ++report_.packets.injected;
        if (r.delivered()) {
            ++dev.delivered;
            ++report_.packets.delivered;
            if (!authorized_delivery(p, r)) ++unauthorized_;
            return;
        }
        if (r.dropped_at_entry()) {
            ++dev.dropped_at_entry;
            ++report_.packets.dropped_at_entry;
        } else {
            ++dev.dropped_in_slice;
            ++report_.packets.dropped_in_slice;
        }
        ++report_.drop_reasons[ue][r.trace.outcome.reason];
    }

    // NSAF completeness: the delivery slice must be in the sender's allowed set
    bool authorized_delivery(const fabric::Packet &p, const sma::PacketResult &r) const {
        if (!sma_->config().security) return true;
        const auto slice = r.trace.outcome.slice;
        if (!slice) return false;
        const auto &repo = sma_->repository();
        auto device = repo.device_for(p.src_mac, p.src_ip);
        if (!device) return *slice == sma_->config().generic_slice;
        if (sma_->blacklisted_at(*device) && *sma_->blacklisted_at(*device) <= p.virtual_timestamp) return false;
        for (const auto *rule : repo.rules_for_device(*device)) {
            for (const auto &a : rule->actions) {
                if (a.slice_id == *slice) return true;
            }
        }
        return false;
    }

    fabric::Fabric fabric_;
    std::unique_ptr<sma::Sma> sma_;
    ScenarioReport &report_;
    std::size_t unauthorized_{0};
};

SimTime schedule_end(const std::vector<TimedPacket> &s) {
    return s.empty() ? 0 : s.back().packet.virtual_timestamp + 1;
}

void completeness_checks(ScenarioReport &rep, const Run &run) {
    rep.checks.push_back(check("conservation", rep.packets.conserved()));
    rep.checks.push_back(check("nsaf-completeness", run.unauthorized_deliveries() == 0,
                               std::to_string(run.unauthorized_deliveries()) + " deliveries outside allowed slices"));
}

bool same_delivery(const ScenarioReport &a, const ScenarioReport &b, const std::vector<std::string> &ues,
                   std::string &detail) {
    bool ok = true;
    for (const auto &ue : ues) {
        auto ia = a.per_device.find(ue);
        auto ib = b.per_device.find(ue);
        const std::uint64_t da = ia == a.per_device.end() ? 0 : ia->second.delivered;
        const std::uint64_t db = ib == b.per_device.end() ? 0 : ib->second.delivered;
        detail += ue + ":" + std::to_string(da) + "/" + std::to_string(db) + " ";
        ok = ok && da == db;
    }
    return ok;
}

// ---------------------------------------------------------------- attack 1

ScenarioReport attack1(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto started = std::chrono::steady_clock::now();
    const auto attacker = param<std::string>(cfg, "attacker", "printer");
    const auto attack_packets = param<std::uint64_t>(cfg, "attack_packets", 10000);
    const auto benign_ms = param<SimTime>(cfg, "benign_duration_ms", 10000);
    const double pps = 10.0 * cfg.sma.fvf_threshold * 1000.0 / static_cast<double>(cfg.sma.fvf_window_ms);

    auto probe = fabric::Fabric::build(cfg.topology);
    const Ipv4 health = host_ip(probe, host_for_service(probe, "Service1"));
    const Ipv4 banking = host_ip(probe, host_for_service(probe, "Banking"));
    ue_of(probe, attacker);

    Rng jitter(derive_seed(seed, 0xA1));
    std::vector<TrafficSpec> benign = {
        {"UE1", health, 20, jitter.uniform_int(0, 49), benign_ms, std::nullopt, 64, 512, std::nullopt},
        {"monitor", health, 50, jitter.uniform_int(0, 49), benign_ms, std::nullopt, 64, 512, std::nullopt},
        {"UE2", banking, 10, jitter.uniform_int(0, 49), benign_ms, std::nullopt, 64, 512, std::nullopt},
    };
    auto specs = benign;
    specs.push_back({attacker, health, pps, 0, kForever, attack_packets, 64, 512, std::nullopt});

    Run run(cfg, seed, rep);
    auto schedule = make_schedule(run.fabric(), specs, seed);
    run.send_all(schedule);
    run.finish(schedule_end(schedule));

    ScenarioReport control;
    {
        Run ctl(cfg, seed, control);
        auto cs = make_schedule(ctl.fabric(), benign, seed);
        ctl.send_all(cs);
        ctl.finish(schedule_end(cs));
    }

    const auto &a = rep.per_device[attacker];
    std::uint64_t deny = 0;
    for (const auto &[reason, n] : rep.drop_reasons[attacker]) {
        if (ends_with(reason, "nsaf:DenyUnauthorized")) deny += n;
    }
    rep.checks.push_back(check("attacker-zero-delivered", a.delivered == 0, std::to_string(a.delivered)));
    rep.checks.push_back(check("attacker-dropped-at-entry", a.injected > 0 && a.dropped_at_entry == a.injected,
                               std::to_string(a.dropped_at_entry) + "/" + std::to_string(a.injected)));
    rep.checks.push_back(check("attacker-deny-unauthorized", a.injected > 0 && deny == a.injected,
                               std::to_string(deny) + "/" + std::to_string(a.injected)));
    std::string detail;
    rep.checks.push_back(check("benign-equals-control", same_delivery(rep, control, {"UE1", "monitor", "UE2"}, detail),
                               detail));
    completeness_checks(rep, run);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    // wall time is kept out of the report so that it stays byte-identical
    rep.checks.push_back(check("runtime-under-5s", secs < 5.0));
    rep.details = {{"attacker", attacker}, {"attack_pps", pps}, {"control", control.to_json()["per_device"]}};
    return rep;
}

// ---------------------------------------------------------------- attack 2

ScenarioReport attack2(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto attacker = param<std::string>(cfg, "attacker", "wearable");
    const auto flood_start = param<SimTime>(cfg, "flood_start_ms", 2000);
    const auto flood_ms = param<SimTime>(cfg, "flood_duration_ms", 3000);
    const auto total_ms = param<SimTime>(cfg, "duration_ms", flood_start + flood_ms + 1000);
    const double pps = 10.0 * cfg.sma.fvf_threshold * 1000.0 / static_cast<double>(cfg.sma.fvf_window_ms);

    auto probe = fabric::Fabric::build(cfg.topology);
    const Ipv4 health = host_ip(probe, host_for_service(probe, "Service1"));
    const Mac attacker_mac = ue_of(probe, attacker).mac;

    Rng jitter(derive_seed(seed, 0xA2));
    std::vector<TrafficSpec> benign = {
        {"UE1", health, 20, jitter.uniform_int(0, 49), total_ms, std::nullopt, 64, 512, std::nullopt},
        {"monitor", health, 50, jitter.uniform_int(0, 49), total_ms, std::nullopt, 64, 512, std::nullopt},
    };
    auto specs = benign;
    specs.push_back({attacker, health, 5, 0, flood_start, std::nullopt, 64, 512, std::nullopt});
    specs.push_back({attacker, health, pps, flood_start, flood_start + flood_ms, std::nullopt, 64, 512, std::nullopt});

    Run run(cfg, seed, rep);
    auto schedule = make_schedule(run.fabric(), specs, seed);
    std::vector<std::pair<SimTime, sma::PacketResult>> attacker_results;
    for (const auto &tp : schedule) {
        auto r = run.send(tp);
        if (tp.ue == attacker) attacker_results.emplace_back(tp.packet.virtual_timestamp, std::move(r));
    }
    run.finish(schedule_end(schedule));
    auto &sma = run.sma();

    ScenarioReport control;
    {
        Run ctl(cfg, seed, control);
        auto cs = make_schedule(ctl.fabric(), benign, seed);
        ctl.send_all(cs);
        ctl.finish(schedule_end(cs));
    }

    std::vector<secfn::Alert> fvf_alerts;
    for (const auto &al : rep.alerts) {
        if (al.source == "FVF" && al.device_id == attacker_mac.str()) fvf_alerts.push_back(al);
    }
    rep.checks.push_back(check("one-fvf-alert", fvf_alerts.size() == 1, std::to_string(fvf_alerts.size())));
    const bool in_window = !fvf_alerts.empty() && fvf_alerts.front().time >= flood_start &&
                           fvf_alerts.front().time - flood_start <= cfg.sma.fvf_window_ms;
    rep.checks.push_back(check("alert-within-window", in_window,
                               fvf_alerts.empty() ? "no alert" : "t=" + std::to_string(fvf_alerts.front().time)));

    std::uint64_t pre_delivered = 0;
    for (const auto &[t, r] : attacker_results) {
        if (t < flood_start && r.delivered()) ++pre_delivered;
    }
    rep.checks.push_back(check("first-packets-delivered", pre_delivered > 0, std::to_string(pre_delivered)));

    const auto active = sma.blacklisted_at(attacker_mac.str());
    rep.checks.push_back(check("blacklist-activated", active.has_value(),
                               active ? "t=" + std::to_string(*active) : "never"));
    std::uint64_t post = 0, post_entry = 0, post_delivered = 0, post_blacklisted = 0;
    if (active) {
        for (const auto &[t, r] : attacker_results) {
            if (t < *active) continue;
            ++post;
            if (r.delivered()) ++post_delivered;
            if (r.dropped_at_entry()) ++post_entry;
            if (ends_with(r.trace.outcome.reason, "nsaf:DenyBlacklisted")) ++post_blacklisted;
        }
    }
    const bool entry_ok = post > 0 && static_cast<double>(post_entry) >= 0.99 * static_cast<double>(post);
    rep.checks.push_back(check("post-blacklist-dropped-at-entry", entry_ok,
                               std::to_string(post_entry) + "/" + std::to_string(post)));
    rep.checks.push_back(check("post-blacklist-zero-delivered", active && post_delivered == 0,
                               std::to_string(post_delivered)));
    rep.checks.push_back(check("deny-blacklisted-observed", post_blacklisted > 0, std::to_string(post_blacklisted)));

    bool benign_full = true;
    std::string full_detail;
    for (const auto &ue : {"UE1", "monitor"}) {
        const auto &c = rep.per_device[ue];
        benign_full = benign_full && c.injected > 0 && c.delivered == c.injected;
        full_detail += std::string{ue} + ":" + std::to_string(c.delivered) + "/" + std::to_string(c.injected) + " ";
    }
    rep.checks.push_back(check("benign-fully-delivered", benign_full, full_detail));
    std::string detail;
    rep.checks.push_back(check("benign-equals-control", same_delivery(rep, control, {"UE1", "monitor"}, detail),
                               detail));
    completeness_checks(rep, run);
    rep.details = {{"attacker", attacker},
                   {"flood_start_ms", flood_start},
                   {"attack_pps", pps},
                   {"blacklisted_at", active ? json(*active) : json(nullptr)},
                   {"post_blacklist_packets", post},
                   {"post_blacklist_dropped_at_entry", post_entry},
                   {"post_blacklist_delivered", post_delivered}};
    return rep;
}

// ---------------------------------------------------------------- attack 3

struct GateTally {
    std::size_t tampered{0}, refused{0}, clean{0}, granted{0};
};

void gate_all_hosts(sma::Sma &sma, const fabric::Fabric &f, GateTally &t, json &log) {
    for (const auto &[id, n] : f.nodes()) {
        if (n.kind != fabric::NodeKind::host || n.service.empty()) continue;
        auto r = sma.deploy_service_gated(id, n.service);
        if (n.tampered) {
            ++t.tampered;
            if (!r.deployed && r.verdict == secfn::TrustVerdict::compromised) ++t.refused;
        } else {
            ++t.clean;
            if (r.deployed) ++t.granted;
        }
        log.push_back({{"host", id}, {"tampered", n.tampered}, {"verdict", secfn::to_string(r.verdict)},
                       {"deployed", r.deployed}});
    }
}

ScenarioReport attack3(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    auto tampered_hosts = param<std::vector<std::string>>(cfg, "tampered_hosts", {"H-web"});
    const auto cases = param<int>(cfg, "random_cases", 20);

    Run run(cfg, seed, rep);
    for (const auto &h : tampered_hosts) {
        if (!run.fabric().has_node(h)) throw Error(Errc::config, "unknown tampered host " + h);
        run.fabric().set_tampered(h, true);
    }
    GateTally base;
    json base_log = json::array();
    gate_all_hosts(run.sma(), run.fabric(), base, base_log);

    // replay: the first report for a node is captured and returned for every later challenge
    std::map<NodeId, fabric::AttestationReport> captured;
    run.sma().set_attestation_interceptor([&captured](const fabric::AttestationReport &r) {
        auto [it, fresh] = captured.emplace(r.node_id, r);
        return it->second;
    });
    std::size_t replays = 0, stale = 0;
    for (const auto &[id, n] : run.fabric().nodes()) {
        if (n.kind != fabric::NodeKind::host || n.service.empty() || n.tampered) continue;
        run.sma().deploy_service_gated(id, n.service); // captured
        auto r = run.sma().deploy_service_gated(id, n.service);
        ++replays;
        if (!r.deployed && r.verdict == secfn::TrustVerdict::stale_nonce) ++stale;
    }
    run.sma().set_attestation_interceptor(nullptr);
    run.finish(run.sma().now());

    GateTally random;
    for (int c = 0; c < cases; ++c) {
        ScenarioReport scratch;
        ScenarioConfig rc = cfg;
        const auto case_seed = derive_seed(seed, 0x3000 + static_cast<std::uint64_t>(c));
        rc.topology = random_topology(case_seed, 3, 6, 0.3);
        rc.policies = json::array();
        rc.events = nullptr;
        Run r(rc, case_seed, scratch);
        json ignored = json::array();
        gate_all_hosts(r.sma(), r.fabric(), random, ignored);
    }

    bool no_service_on_tampered = true;
    for (const auto &[node, service] : run.sma().deployed_services()) {
        if (run.fabric().node(node).tampered) no_service_on_tampered = false;
    }
    auto frac = [](std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); };
    rep.checks.push_back(check("tampered-refused", base.tampered > 0 && base.refused == base.tampered,
                               frac(base.refused, base.tampered)));
    rep.checks.push_back(check("clean-granted", base.granted == base.clean, frac(base.granted, base.clean)));
    rep.checks.push_back(check("admin-alert-per-refusal", rep.admin_alerts.size() >= base.refused,
                               std::to_string(rep.admin_alerts.size())));
    rep.checks.push_back(check("no-service-on-tampered-host", no_service_on_tampered));
    rep.checks.push_back(check("replay-refused-stale-nonce", replays > 0 && stale == replays, frac(stale, replays)));
    rep.checks.push_back(check("random-topologies",
                               random.refused == random.tampered && random.granted == random.clean,
                               "refused " + frac(random.refused, random.tampered) + ", granted " +
                                   frac(random.granted, random.clean)));
    completeness_checks(rep, run);
    rep.details = {{"deployments", base_log}, {"random_cases", cases}};
    return rep;
}

// ---------------------------------------------------------------- attack 4

ScenarioReport attack4(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto mover = param<std::string>(cfg, "device", "UE1");
    const auto blocked = param<std::string>(cfg, "blacklisted_device", "wearable");
    const auto handover_at = param<SimTime>(cfg, "handover_ms", 1000);
    const auto total_ms = param<SimTime>(cfg, "duration_ms", 2000);
    const double pps = 10.0 * cfg.sma.fvf_threshold * 1000.0 / static_cast<double>(cfg.sma.fvf_window_ms);

    Run run(cfg, seed, rep);
    auto &f = run.fabric();
    auto &sma = run.sma();
    const Ipv4 health = host_ip(f, host_for_service(f, "Service1"));
    const auto from = ue_of(f, mover).edge;
    NodeId to = param<std::string>(cfg, "target_edge", "");
    if (to.empty()) {
        for (const auto &[id, n] : f.nodes()) {
            if (n.kind == fabric::NodeKind::edge && id != from) {
                to = id;
                break;
            }
        }
    }
    const std::string mover_mac = ue_of(f, mover).mac.str();
    const std::string blocked_mac = ue_of(f, blocked).mac.str();
    const auto blocked_from = ue_of(f, blocked).edge;

    std::vector<TrafficSpec> specs = {
        {mover, health, 20, 0, total_ms, std::nullopt, 64, 512, std::nullopt},
        {blocked, health, pps, 0, handover_at / 2, std::nullopt, 64, 512, std::nullopt},
        {blocked, health, 20, handover_at / 2, total_ms, std::nullopt, 64, 512, std::nullopt},
    };
    auto schedule = make_schedule(f, specs, seed);

    bool handed = false;
    std::set<policy::SlicePair> before, after;
    sma::HandoverResult moved, moved_blocked;
    std::uint64_t mover_post = 0, mover_post_delivered = 0, blocked_post = 0, blocked_post_delivered = 0;
    std::size_t extractions_during = 0;
    for (const auto &tp : schedule) {
        if (!handed && tp.packet.virtual_timestamp >= handover_at) {
            sma.advance_to(handover_at);
            if (const auto *d = sma.deployment(from)) {
                if (auto it = d->nsaf.allowed.find(mover_mac); it != d->nsaf.allowed.end()) before = it->second;
            }
            const auto extracted = sma.log().count("ProfileExtracted");
            moved = sma.handover(mover_mac, from, to);
            moved_blocked = sma.handover(blocked_mac, blocked_from, to);
            extractions_during = sma.log().count("ProfileExtracted") - extracted;
            if (const auto *d = sma.deployment(to)) {
                if (auto it = d->nsaf.allowed.find(mover_mac); it != d->nsaf.allowed.end()) after = it->second;
            }
            handed = true;
        }
        auto r = run.send(tp);
        if (!handed) continue;
        if (tp.ue == mover) {
            ++mover_post;
            if (r.delivered()) ++mover_post_delivered;
        } else if (tp.ue == blocked) {
            ++blocked_post;
            if (r.delivered()) ++blocked_post_delivered;
        }
    }
    run.finish(schedule_end(schedule));

    bool unknown_refused = false;
    try {
        sma.handover("FF:FF:FF:FF", from, to);
    } catch (const Error &e) {
        unknown_refused = e.code() == Errc::not_found;
    }

    rep.checks.push_back(check("handover-performed", handed));
    rep.checks.push_back(check("authorization-set-equal", !before.empty() && before == after,
                               std::to_string(before.size()) + " pairs"));
    rep.checks.push_back(check("zero-profile-extractions", handed && extractions_during == 0,
                               std::to_string(extractions_during)));
    rep.checks.push_back(check("flow-continues", mover_post > 0 && mover_post_delivered == mover_post,
                               std::to_string(mover_post_delivered) + "/" + std::to_string(mover_post)));
    rep.checks.push_back(check("blacklisted-stays-blocked",
                               moved_blocked.blacklisted && blocked_post > 0 && blocked_post_delivered == 0,
                               std::to_string(blocked_post_delivered) + "/" + std::to_string(blocked_post)));
    rep.checks.push_back(check("unknown-device-refused", unknown_refused));
    completeness_checks(rep, run);
    rep.details = {{"device", mover},
                   {"from", from},
                   {"to", to},
                   {"flows_reanchored", moved.flows_reanchored},
                   {"handover_ms", handover_at}};
    return rep;
}

// ---------------------------------------------------------------- shellshock

const std::string kExploit = "GET /cgi-bin/status HTTP/1.1\r\nHost: portal\r\nUser-Agent: () { :;}; /bin/eject\r\n\r\n";
const std::string kBenignGet = "GET /index.html HTTP/1.1\r\nHost: portal\r\nUser-Agent: curl/7.58\r\n\r\n";

ScenarioReport shellshock(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto attacker = param<std::string>(cfg, "attacker", "UE1");
    const auto exploit_at = param<SimTime>(cfg, "exploit_ms", 500);
    const auto total_ms = param<SimTime>(cfg, "duration_ms", 1500);

    std::optional<std::string> sig_id;
    const auto reference = secfn::shellshock_signature();
    for (const auto &s : cfg.signatures) {
        if (s.scope == secfn::SignatureScope::payload && s.pattern == reference.pattern) sig_id = s.id;
    }

    auto build_specs = [&](const fabric::Fabric &f) {
        const Ipv4 web = host_ip(f, host_for_service(f, "WebPortal"));
        return std::vector<TrafficSpec>{
            {attacker, web, 10, 0, total_ms, std::nullopt, 0, 0, to_bytes(kBenignGet)},
            {attacker, web, 1, exploit_at, kForever, 1, 0, 0, to_bytes(kExploit)},
        };
    };

    Run run(cfg, seed, rep);
    auto schedule = make_schedule(run.fabric(), build_specs(run.fabric()), seed);
    std::optional<sma::PacketResult> exploit;
    std::uint64_t after = 0, after_delivered = 0;
    for (const auto &tp : schedule) {
        auto r = run.send(tp);
        if (tp.generator == 1) {
            exploit = r;
        } else if (exploit) {
            ++after;
            if (r.delivered()) ++after_delivered;
        }
    }
    run.finish(schedule_end(schedule));

    ScenarioReport control;
    std::optional<sma::PacketResult> control_exploit;
    {
        Run ctl(cfg, seed, control, std::vector<secfn::Signature>{});
        auto cs = make_schedule(ctl.fabric(), build_specs(ctl.fabric()), seed);
        for (const auto &tp : cs) {
            auto r = ctl.send(tp);
            if (tp.generator == 1) control_exploit = r;
        }
        ctl.finish(schedule_end(cs));
    }

    const std::string expected = sig_id ? "fvf:DropSignature:" + *sig_id : "";
    const bool dropped = exploit && !exploit->delivered() && sig_id && ends_with(exploit->trace.outcome.reason, expected);
    rep.checks.push_back(check("signature-configured", sig_id.has_value(), sig_id.value_or("none")));
    rep.checks.push_back(check("exploit-dropped-with-signature", dropped,
                               exploit ? exploit->trace.outcome.reason : "not sent"));
    const bool alerted = std::any_of(rep.alerts.begin(), rep.alerts.end(), [&](const secfn::Alert &a) {
        return a.source == "FVF" && sig_id && a.reason.find(*sig_id) != std::string::npos;
    });
    rep.checks.push_back(check("alert-raised", alerted));
    rep.checks.push_back(check("attacker-isolated", cfg.sma.blacklist_feedback ? after_delivered < after || after == 0
                                                                              : true,
                               std::to_string(after_delivered) + "/" + std::to_string(after) + " after exploit"));
    const bool control_delivered = control_exploit && control_exploit->delivered() &&
                                   control_exploit->trace.delivered_payload == to_bytes(kExploit);
    rep.checks.push_back(check("control-delivers-payload", control_delivered,
                               control_exploit ? control_exploit->trace.outcome.reason : "not sent"));
    completeness_checks(rep, run);
    rep.details = {{"signature_id", sig_id ? json(*sig_id) : json(nullptr)},
                   {"exploit_outcome", exploit ? fabric::to_json(exploit->trace.outcome) : json(nullptr)},
                   {"control_outcome", control_exploit ? fabric::to_json(control_exploit->trace.outcome) : json(nullptr)}};
    return rep;
}

// ---------------------------------------------------------------- flow_mod audit

ScenarioReport flowmod_audit(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto device = param<std::string>(cfg, "device", "UE1");
    const auto injected_id = param<std::string>(cfg, "injected_rule_id", "attacker-redirect");

    Run run(cfg, seed, rep);
    auto &f = run.fabric();
    auto &sma = run.sma();
    const auto &ue = ue_of(f, device);
    const NodeId edge = ue.edge;
    const Ipv4 health = host_ip(f, host_for_service(f, "Service1"));

    std::vector<TrafficSpec> before = {{device, health, 10, 0, 500, std::nullopt, 64, 512, std::nullopt}};
    auto s1 = make_schedule(f, before, seed);
    run.send_all(s1);
    sma.advance_to(500);

    // flow_mod sent to the switch behind the controller's back
    fabric::FlowRule rogue;
    rogue.rule_id = injected_id;
    rogue.match.src_ip = ue.ip;
    rogue.match.dst_ip = health;
    const auto &ports = f.node(edge).ports;
    PortId out = 0;
    for (const auto &p : ports) {
        if (p.kind == fabric::PortKind::link) {
            out = p.port;
            break;
        }
    }
    rogue.action = fabric::Forward{out, param<int>(cfg, "injected_slice", 300)};
    rogue.priority = cfg.sma.flow_priority + 100;
    f.apply_flow_mod(edge, {fabric::FlowMod::Op::add, rogue}, fabric::Provenance::external);

    bool in_log = false;
    for (const auto &e : sma.log().entries()) {
        if (e.event.find(injected_id) != std::string::npos) in_log = true;
    }

    const auto first = sma.audit_now(edge);
    const auto second = sma.audit_now(edge);
    auto all = sma.audit_all(false);
    std::size_t false_positives = 0;
    for (const auto &a : all) {
        if (!a.result.clean) ++false_positives;
    }

    std::vector<TrafficSpec> later = {{device, health, 10, 600, 1100, std::nullopt, 64, 512, std::nullopt}};
    auto s2 = make_schedule(f, later, seed + 1);
    std::uint64_t post = 0, post_ok = 0;
    for (const auto &tp : s2) {
        auto r = run.send(tp);
        ++post;
        if (r.delivered() && r.trace.outcome.slice && r.trace.outcome.slice != 300) ++post_ok;
    }
    run.finish(1100);

    const auto &ex = first.result.extra_rules;
    rep.checks.push_back(check("injected-rule-not-in-log", !in_log));
    rep.checks.push_back(check("exactly-one-extra-rule", ex.size() == 1, std::to_string(ex.size())));
    rep.checks.push_back(check("extra-rule-id-matches", ex.size() == 1 && ex.front().rule_id == injected_id,
                               ex.empty() ? "" : ex.front().rule_id));
    rep.checks.push_back(check("no-missing-or-modified",
                               first.result.missing_rules.empty() && first.result.modified_rules.empty()));
    rep.checks.push_back(check("switch-restored", first.restored && second.result.clean));
    rep.checks.push_back(check("other-switches-clean", false_positives == 0, std::to_string(false_positives)));
    rep.checks.push_back(check("traffic-after-restore", post > 0 && post_ok == post,
                               std::to_string(post_ok) + "/" + std::to_string(post)));
    completeness_checks(rep, run);
    rep.details = {{"node", edge}, {"injected_rule_id", injected_id}, {"diff", first.diff}};
    return rep;
}

// ---------------------------------------------------------------- FSF path

bool contains(const Bytes &hay, const Bytes &needle) {
    if (needle.empty()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

ScenarioReport fsf_path(const ScenarioConfig &cfg, std::uint64_t seed) {
    ScenarioReport rep;
    const auto device = param<std::string>(cfg, "device", "scada-rtu");
    const auto service = param<std::string>(cfg, "service", "SCADA");
    const auto egress = param<std::string>(cfg, "egress", "OVS3");
    const auto packets = param<std::uint64_t>(cfg, "packets", 200);

    Run run(cfg, seed, rep);
    auto &f = run.fabric();
    auto &sma = run.sma();
    const auto &ue = ue_of(f, device);
    const Ipv4 dst = host_ip(f, host_for_service(f, service));
    const sma::FlowRef flow{ue.ip, dst};

    std::vector<TrafficSpec> setup = {{device, dst, 1, 0, 1, std::nullopt, 64, 64, std::nullopt}};
    auto s0 = make_schedule(f, setup, seed);
    run.send_all(s0);

    std::string key_id;
    std::string provision_error;
    try {
        key_id = sma.provision_flow_security(flow, {ue.edge, egress});
    } catch (const Error &e) {
        provision_error = e.what();
    }

    std::vector<TrafficSpec> traffic = {{device, dst, 50, 100, kForever, packets, 0, 4096, std::nullopt}};
    auto s1 = make_schedule(f, traffic, seed);
    std::uint64_t intact = 0, leaks = 0, mid_links = 0, sent = 0;
    for (const auto &tp : s1) {
        auto r = run.send(tp);
        ++sent;
        if (r.delivered() && r.trace.delivered_payload == tp.packet.payload) ++intact;
        bool inside = false;
        for (const auto &ev : r.trace.events) {
            if (ev.kind == fabric::TraceEvent::Kind::function) {
                if (ev.detail.rfind("FSF:encrypt", 0) == 0) inside = true;
                if (ev.detail.rfind("FSF:decrypt", 0) == 0) inside = false;
            } else if (inside && ev.kind == fabric::TraceEvent::Kind::link) {
                ++mid_links;
                if (contains(ev.payload, tp.packet.payload) ||
                    (!tp.packet.payload.empty() && ev.payload == tp.packet.payload)) {
                    ++leaks;
                }
            }
        }
    }
    const SimTime end = schedule_end(s1);
    sma.advance_to(end);

    // a flow without a confidentiality requirement is refused
    bool non_conf_refused = false;
    std::string other = param<std::string>(cfg, "non_confidential_device", "UE1");
    if (const auto *o = f.ue(other)) {
        const Ipv4 health = host_ip(f, host_for_service(f, "Service1"));
        std::vector<TrafficSpec> os = {{other, health, 1, end, end + 1, std::nullopt, 64, 64, std::nullopt}};
        run.send_all(make_schedule(f, os, seed));
        try {
            sma.provision_flow_security({o->ip, health}, {o->edge, egress});
        } catch (const Error &e) {
            non_conf_refused = e.code() == Errc::precondition;
        }
    }
    // a compromised endpoint is refused
    bool tampered_refused = false;
    f.set_tampered(egress, true);
    try {
        sma.provision_flow_security(flow, {ue.edge, egress});
    } catch (const Error &e) {
        tampered_refused = e.code() == Errc::precondition;
    }
    f.set_tampered(egress, false);
    run.finish(sma.now());

    rep.checks.push_back(check("key-provisioned", !key_id.empty(), key_id.empty() ? provision_error : key_id));
    rep.checks.push_back(check("payload-intact", sent > 0 && intact == sent,
                               std::to_string(intact) + "/" + std::to_string(sent)));
    rep.checks.push_back(check("ciphertext-only-mid-path", mid_links > 0 && leaks == 0,
                               std::to_string(leaks) + " leaks over " + std::to_string(mid_links) + " link events"));
    rep.checks.push_back(check("non-confidential-flow-refused", non_conf_refused));
    rep.checks.push_back(check("compromised-endpoint-refused", tampered_refused));
    completeness_checks(rep, run);
    rep.details = {{"flow", flow.str()}, {"key_id", key_id}, {"ingress", ue.edge}, {"egress", egress}};
    return rep;
}

using Driver = ScenarioReport (*)(const ScenarioConfig &, std::uint64_t);

const std::map<std::string, Driver> &drivers() {
    static const std::map<std::string, Driver> d = {
        {"attack1", attack1},   {"attack2", attack2},       {"attack3", attack3}, {"attack4", attack4},
        {"shellshock", shellshock}, {"flowmod_audit", flowmod_audit}, {"fsf_path", fsf_path},
    };
    return d;
}

} // namespace

const std::vector<std::string> &scenario_ids() {
    static const std::vector<std::string> ids = {"attack1",    "attack2",       "attack3", "attack4",
                                                 "shellshock", "flowmod_audit", "fsf_path"};
    return ids;
}

ScenarioReport run_scenario(const std::string &id, const ScenarioConfig &cfg, std::uint64_t seed) {
    auto it = drivers().find(id);
    if (it == drivers().end()) throw Error(Errc::not_found, "unknown scenario " + id);
    auto rep = it->second(cfg, seed);
    rep.scenario_id = id;
    rep.seed = seed;
    rep.pass = !rep.checks.empty() &&
               std::all_of(rep.checks.begin(), rep.checks.end(), [](const Check &c) { return c.pass; });
    return rep;
}

// ---------------------------------------------------------------- topologies

json random_topology(std::uint64_t seed, int edges, int hosts, double tamper_probability) {
    if (edges < 1 || hosts < 1) throw Error(Errc::invalid_argument, "need at least one edge and one host");
    Rng rng(derive_seed(seed, 0x7090));
    const int cores = 1 + static_cast<int>(rng.uniform_int(0, 2));
    json nodes = json::array(), links = json::array(), slices = json::array();
    for (int c = 0; c < cores; ++c) {
        nodes.push_back({{"id", "c" + std::to_string(c)}, {"kind", "core"}});
        if (c > 0) {
            links.push_back({{"a", "c" + std::to_string(c - 1)}, {"b", "c" + std::to_string(c)},
                             {"latency_ms", rng.uniform_int(1, 3)}});
        }
    }
    auto any_core = [&] { return "c" + std::to_string(rng.uniform_int(0, cores - 1)); };
    for (int e = 0; e < edges; ++e) {
        const auto id = "e" + std::to_string(e);
        nodes.push_back({{"id", id}, {"kind", "edge"}});
        links.push_back({{"a", id}, {"b", any_core()}, {"latency_ms", rng.uniform_int(1, 3)}});
    }
    for (int h = 0; h < hosts; ++h) {
        const auto id = "h" + std::to_string(h);
        char mac[32];
        std::snprintf(mac, sizeof mac, "02:00:00:00:01:%02X", h & 0xFF);
        nodes.push_back({{"id", id},
                         {"kind", "host"},
                         {"ip", "10.9." + std::to_string(h / 250) + "." + std::to_string(h % 250 + 1)},
                         {"mac", mac},
                         {"service", "svc" + std::to_string(h)},
                         {"tampered", rng.uniform01() < tamper_probability}});
        links.push_back({{"a", id}, {"b", any_core()}, {"latency_ms", 1}});
        slices.push_back({{"vlan", 100 + h}, {"name", "slice" + std::to_string(h)}, {"hosts", {id}}});
    }
    return {{"nodes", nodes}, {"links", links}, {"slices", slices}, {"ues", json::array()}};
}

namespace {

std::string star_ue_ip(int i) { return "10.2." + std::to_string(i / 250) + "." + std::to_string(i % 250 + 1); }

std::string star_ue_mac(int i) {
    char mac[32];
    std::snprintf(mac, sizeof mac, "02:00:00:00:%02X:%02X", (i >> 8) & 0xFF, i & 0xFF);
    return mac;
}

} // namespace

json star_topology(int n, SimTime link_latency_ms) {
    if (n < 1) throw Error(Errc::invalid_argument, "need at least one gNodeB");
    json nodes = json::array(), links = json::array(), ues = json::array();
    nodes.push_back({{"id", "C0"}, {"kind", "core"}});
    nodes.push_back({{"id", "H-svc"},
                     {"kind", "host"},
                     {"ip", "10.1.0.1"},
                     {"mac", "02:00:00:01:00:01"},
                     {"service", "Service1"}});
    links.push_back({{"a", "C0"}, {"b", "H-svc"}, {"latency_ms", link_latency_ms}});
    for (int i = 1; i <= n; ++i) {
        const auto id = "g" + std::to_string(i);
        nodes.push_back({{"id", id}, {"kind", "edge"}});
        links.push_back({{"a", id}, {"b", "C0"}, {"latency_ms", link_latency_ms}});
        ues.push_back({{"id", "ue" + std::to_string(i)}, {"ip", star_ue_ip(i)}, {"mac", star_ue_mac(i)}, {"edge", id}});
    }
    json slices = json::array({{{"vlan", 200}, {"name", "service"}, {"hosts", {"H-svc"}}}});
    return {{"nodes", nodes}, {"links", links}, {"slices", slices}, {"ues", ues}};
}

json star_policies(int n) {
    json out = json::array();
    for (int i = 1; i <= n; ++i) {
        out.push_back({{"id", "p" + std::to_string(i)},
                       {"hostip", star_ue_ip(i)},
                       {"hostmac", star_ue_mac(i)},
                       {"destip", "10.1.0.1"},
                       {"user", {{"id", "u" + std::to_string(i)}}},
                       {"actions", {{{"Service", "Service1"}, {"Slice-id", "VLAN200"}}}}});
    }
    return out;
}

} // namespace sentinel::scenarios

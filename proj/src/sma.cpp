#include "sentinel/sma.hpp"

#include <algorithm>
#include <ostream>

namespace sentinel::sma {

using fabric::FlowMod;
using fabric::FlowRule;
using fabric::Outcome;
using fabric::Provenance;
using fabric::TraceEvent;
using nlohmann::json;

// ---------------------------------------------------------------- configuration

json CostModel::to_json() const {
    return {{"controller_rtt_us", controller_rtt_us}, {"flow_processing_us", flow_processing_us},
            {"dispatch_us", dispatch_us},             {"attestation_us", attestation_us},
            {"profile_extract_us", profile_extract_us}, {"compose_us", compose_us},
            {"deploy_us", deploy_us},                 {"decision_us", decision_us}};
}

CostModel CostModel::from_json(const json &j, CostModel c) {
    if (!j.is_object()) throw Error{Errc::config, "costs must be an object"};
    const std::map<std::string, std::int64_t *> fields{
        {"controller_rtt_us", &c.controller_rtt_us}, {"flow_processing_us", &c.flow_processing_us},
        {"dispatch_us", &c.dispatch_us},             {"attestation_us", &c.attestation_us},
        {"profile_extract_us", &c.profile_extract_us}, {"compose_us", &c.compose_us},
        {"deploy_us", &c.deploy_us},                 {"decision_us", &c.decision_us}};
    for (const auto &[k, v] : j.items()) {
        auto it = fields.find(k);
        if (it == fields.end()) throw Error{Errc::config, "unknown cost parameter '" + k + "'"};
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw Error{Errc::config, "cost parameter '" + k + "' must be a non-negative integer"};
        }
        *it->second = v.get<std::int64_t>();
    }
    return c;
}

SmaConfig SmaConfig::from_json(const json &j, SmaConfig c) {
    if (!j.is_object()) throw Error{Errc::config, "SMA configuration must be an object"};
    try {
        for (const auto &[k, v] : j.items()) {
            if (k == "security") {
                c.security = v.get<bool>();
            } else if (k == "generic_slice") {
                c.generic_slice = v.get<SliceId>();
                if (!valid_vlan(c.generic_slice)) throw Error{Errc::config, "generic_slice outside VLAN range"};
            } else if (k == "generic_rate_cap") {
                c.generic_rate_cap = v.get<std::uint32_t>();
            } else if (k == "fvf_window_ms") {
                c.fvf_window_ms = v.get<SimTime>();
            } else if (k == "fvf_threshold") {
                c.fvf_threshold = v.get<std::uint32_t>();
            } else if (k == "fvf_placement") {
                auto p = v.get<std::string>();
                if (p == "edge") {
                    c.fvf_placement = FvfPlacement::edge;
                } else if (p == "egress") {
                    c.fvf_placement = FvfPlacement::egress;
                } else {
                    throw Error{Errc::config, "fvf_placement must be 'edge' or 'egress'"};
                }
            } else if (k == "blacklist_feedback") {
                c.blacklist_feedback = v.get<bool>();
            } else if (k == "alert_latency_ms") {
                if (v.is_null()) {
                    c.alert_latency_ms.reset();
                } else {
                    c.alert_latency_ms = v.get<SimTime>();
                }
            } else if (k == "audit_period_ms") {
                c.audit_period_ms = v.get<SimTime>();
            } else if (k == "flow_priority") {
                c.flow_priority = v.get<int>();
            } else if (k == "costs") {
                c.costs = CostModel::from_json(v, c.costs);
            } else {
                throw Error{Errc::config, "unknown SMA configuration key '" + k + "'"};
            }
        }
    } catch (const json::exception &e) {
        throw Error{Errc::config, std::string{"SMA configuration: "} + e.what()};
    }
    if (c.fvf_threshold == 0 || c.fvf_window_ms <= 0) throw Error{Errc::config, "FVF window and threshold must be positive"};
    if (c.audit_period_ms < 0) throw Error{Errc::config, "audit_period_ms must be non-negative"};
    return c;
}

json SmaConfig::to_json() const {
    return {{"security", security},
            {"generic_slice", generic_slice},
            {"generic_rate_cap", generic_rate_cap},
            {"fvf_window_ms", fvf_window_ms},
            {"fvf_threshold", fvf_threshold},
            {"fvf_placement", fvf_placement == FvfPlacement::edge ? "edge" : "egress"},
            {"blacklist_feedback", blacklist_feedback},
            {"alert_latency_ms", alert_latency_ms ? json(*alert_latency_ms) : json(nullptr)},
            {"audit_period_ms", audit_period_ms},
            {"flow_priority", flow_priority},
            {"costs", costs.to_json()}};
}

json NsfDeployment::to_json() const {
    json allowed = json::object();
    for (const auto &[dev, pairs] : nsaf.allowed) {
        json a = json::array();
        for (const auto &p : pairs) a.push_back({p.slice, p.service});
        allowed[dev] = a;
    }
    return {{"node", node},
            {"covered_users", covered_users},
            {"allowed", allowed},
            {"blacklist", nsaf.blacklist},
            {"generic_slice", nsaf.generic_slice},
            {"signatures", fvf.signatures.size()},
            {"fsf_slot", fsf.has_value()},
            {"deployed_at", deployed_at}};
}

NsfDeployment compose_nsf(const std::optional<policy::SecurityProfile> &profile, const NodeId &node,
                          const std::vector<secfn::Signature> &signatures, const SmaConfig &cfg, SimTime now) {
    NsfDeployment d;
    d.node = node;
    d.nsaf.node = node;
    d.nsaf.generic_slice = cfg.generic_slice;
    d.fvf = secfn::make_fvf(signatures, cfg.fvf_window_ms, cfg.fvf_threshold);
    d.deployed_at = now;
    if (profile) merge_profile(d, *profile);
    return d;
}

void merge_profile(NsfDeployment &dep, const policy::SecurityProfile &profile) {
    for (const auto &dev : profile.devices()) {
        auto pairs = profile.allowed_pairs(dev);
        dep.nsaf.allowed[dev].insert(pairs.begin(), pairs.end());
    }
    dep.covered_users.insert(profile.user_id);
    if (profile.requires_confidentiality() && !dep.fsf) dep.fsf.emplace();
}

const char *to_string(FlowDecision::Kind k) {
    switch (k) {
    case FlowDecision::Kind::installed: return "Installed";
    case FlowDecision::Kind::generic: return "Generic";
    case FlowDecision::Kind::denied: return "Denied";
    case FlowDecision::Kind::routing_error: return "RoutingError";
    }
    return "?";
}

json to_json(const FlowDecision &d) {
    return {{"kind", to_string(d.kind)},
            {"reason", d.reason},
            {"flow", d.flow.str()},
            {"device_id", d.device_id},
            {"edge", d.edge},
            {"slice", d.slice},
            {"profile_extracted", d.profile_extracted},
            {"nsf_deployed", d.nsf_deployed},
            {"punt_time", d.punt_time},
            {"active_at", d.active_at},
            {"setup_ms", d.setup_ms},
            {"rules_installed", d.rules_installed}};
}

const char *to_string(ReconfigAction::Kind k) {
    switch (k) {
    case ReconfigAction::Kind::blacklisted: return "Blacklisted";
    case ReconfigAction::Kind::noop: return "NoOp";
    case ReconfigAction::Kind::admin_only: return "AdminOnly";
    }
    return "?";
}

// ---------------------------------------------------------------- construction

Sma::Sma(fabric::Fabric &fabric, policy::PolicyRepository repo, std::vector<secfn::Signature> signatures,
         SmaConfig cfg)
    : fabric_{fabric},
      repo_{std::move(repo)},
      signatures_{std::move(signatures)},
      cfg_{std::move(cfg)},
      nonce_drbg_{derive_seed(cfg_.seed, 0x7F)},
      kgf_{derive_seed(cfg_.seed, 0x6B)} {
    // reject a bad signature set before any traffic
    (void)secfn::make_fvf(signatures_, cfg_.fvf_window_ms, cfg_.fvf_threshold);
    for (const auto &[id, node] : fabric_.nodes()) {
        for (const auto &rule : node.table.rules()) log_.append(alc::events::rule_installed(id, rule));
    }
    next_audit_ms_ = cfg_.audit_period_ms;
    if (cfg_.security) fabric_.set_hook(this);
}

Sma::~Sma() { fabric_.set_hook(nullptr); }

const NsfDeployment *Sma::deployment(const NodeId &node) const {
    auto it = deployments_.find(node);
    return it == deployments_.end() ? nullptr : &it->second;
}

std::optional<SimTime> Sma::blacklisted_at(const std::string &device_id) const {
    auto it = blacklisted_at_.find(device_id);
    if (it == blacklisted_at_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> Sma::key_for(const FlowRef &flow) const {
    auto it = secured_.find(flow);
    if (it == secured_.end()) return std::nullopt;
    return it->second.cipher.key().key_id;
}

void Sma::emit(const json &event) {
    if (events_) *events_ << event.dump() << '\n';
}

void Sma::record_alert(const secfn::Alert &alert) {
    alerts_.push_back(alert);
    auto j = alert.to_json();
    j["audience"] = "sma";
    log_.append(alc::events::make("AlertRaised", j));
    emit(alc::events::make("Alert", alert.to_json()));
}

void Sma::admin_alert(secfn::Alert alert) {
    auto j = alert.to_json();
    j["audience"] = "administrator";
    log_.append(alc::events::make("AlertRaised", j));
    emit(alc::events::make("AdminAlert", alert.to_json()));
    admin_alerts_.push_back(std::move(alert));
}

void Sma::trace_fn(fabric::ForwardingTrace &trace, const NodeId &node, const fabric::Packet &p, std::string detail) {
    trace.events.push_back({TraceEvent::Kind::function, node, p.virtual_timestamp, std::move(detail), {}, {}, p.slice, {}});
}

NsfDeployment &Sma::ensure_deployment(const NodeId &node) {
    auto it = deployments_.find(node);
    if (it != deployments_.end()) return it->second;
    auto dep = compose_nsf(std::nullopt, node, signatures_, cfg_, now_);
    dep.fvf.model = model_;
    log_.append(alc::events::nsf_deployed(node, {}, false));
    return deployments_.emplace(node, std::move(dep)).first->second;
}

policy::SlicePair Sma::requested_pair(const NsfDeployment &dep, const std::string &device, const Ipv4 &dst) const {
    auto host = fabric_.host_by_ip(dst);
    if (!host) return {0, {}};
    const auto &service = fabric_.node(*host).service;
    auto slices = fabric_.slices_of_host(*host);
    auto it = dep.nsaf.allowed.find(device);
    if (it != dep.nsaf.allowed.end()) {
        for (auto s : slices) {
            if (it->second.count({s, service})) return {s, service};
        }
    }
    return {slices.empty() ? 0 : slices.front(), service};
}

secfn::TrustVerdict Sma::attest(const NodeId &node) {
    Nonce nonce{};
    nonce_drbg_.fill(nonce);
    auto report = fabric_.measure_attestation(node, nonce);
    if (interceptor_) report = interceptor_(report);
    auto v = secfn::tvf_validate(fabric_.expected_hash(node), report, nonce);
    log_.append(alc::events::make("Attestation", {{"node", node}, {"nonce", to_hex(nonce)}, {"verdict", secfn::to_string(v)}}));
    return v;
}

// ---------------------------------------------------------------- rule plumbing

void Sma::install_rule(const NodeId &node, FlowRule rule) {
    rule.provenance = Provenance::controller;
    fabric_.apply_flow_mod(node, FlowMod{FlowMod::Op::add, rule}, Provenance::controller);
    log_.append(alc::events::rule_installed(node, rule));
}

void Sma::remove_rules(std::vector<std::pair<NodeId, std::string>> &rules) {
    for (const auto &[node, id] : rules) {
        FlowRule r;
        r.rule_id = id;
        fabric_.apply_flow_mod(node, FlowMod{FlowMod::Op::remove, r}, Provenance::controller);
        log_.append(alc::events::rule_deleted(node, id));
    }
    rules.clear();
}

bool Sma::install_path(InstalledFlow &f, bool drop_forward) {
    auto fwd = fabric_.shortest_path(f.edge, f.host);
    if (fwd.empty()) return false;
    const auto *ue = fabric_.ue(f.ue);
    std::vector<fabric::PathHop> rev;
    if (ue) {
        for (const auto &hop : fabric_.shortest_path(f.host, f.edge)) {
            if (fabric_.node(hop.node).kind != fabric::NodeKind::host) rev.push_back(hop);
        }
        rev.push_back({f.edge, ue->port});
    }
    const FlowRef back{f.flow.dst_ip, f.flow.src_ip};
    for (const auto &hop : fwd) {
        FlowRule r;
        r.rule_id = f.flow.str() + "@" + hop.node;
        r.match.src_ip = f.flow.src_ip;
        r.match.dst_ip = f.flow.dst_ip;
        r.priority = cfg_.flow_priority;
        if (drop_forward) {
            r.action = fabric::Drop{};
        } else {
            r.action = fabric::Forward{hop.out_port, f.slice};
        }
        install_rule(hop.node, r);
        f.forward.emplace_back(hop.node, r.rule_id);
    }
    for (const auto &hop : rev) {
        FlowRule r;
        r.rule_id = back.str() + "@" + hop.node;
        r.match.src_ip = back.src_ip;
        r.match.dst_ip = back.dst_ip;
        r.priority = cfg_.flow_priority;
        r.action = fabric::Forward{hop.out_port, f.slice};
        install_rule(hop.node, r);
        f.reverse.emplace_back(hop.node, r.rule_id);
    }
    return true;
}

// ---------------------------------------------------------------- packets

PacketResult Sma::send_from_ue(fabric::Packet packet, const std::string &ue_id) {
    const auto *ue = fabric_.ue(ue_id);
    if (!ue) throw Error{Errc::not_found, "unknown UE '" + ue_id + "'"};
    return deliver(std::move(packet), ue->edge, ue->port, false);
}

PacketResult Sma::send_from_host(fabric::Packet packet, const NodeId &host) {
    if (fabric_.node(host).kind != fabric::NodeKind::host) {
        throw Error{Errc::invalid_argument, "'" + host + "' is not a host"};
    }
    return deliver(std::move(packet), host, 0, true);
}

PacketResult Sma::deliver(fabric::Packet packet, const NodeId &node, PortId port, bool from_host) {
    advance_to(packet.virtual_timestamp);
    PacketResult r;
    r.entry = node;
    if (from_host) {
        for (const auto &b : fabric_.node(node).ports) {
            if (b.kind == fabric::PortKind::link) {
                r.entry = b.peer;
                break;
            }
        }
    }
    ingress_evaluated_ = false;
    auto first = fabric_.inject_packet(packet, node, port);
    const bool evaluated = ingress_evaluated_;
    if (first.outcome.kind != Outcome::Kind::punted || !first.punt) {
        r.trace = std::move(first);
        return r;
    }

    r.punted = true;
    const auto punt = *first.punt;
    auto d = handle_new_flow(punt);
    r.decision = d;
    r.trace = std::move(first);
    if (d.kind == FlowDecision::Kind::installed || d.kind == FlowDecision::Kind::generic) {
        packet.virtual_timestamp = d.active_at;
        auto out = fabric_.packet_out(packet, punt.node, punt.in_port, !evaluated);
        r.trace.events.insert(r.trace.events.end(), out.events.begin(), out.events.end());
        r.trace.outcome = out.outcome;
        r.trace.ingress_checked = r.trace.ingress_checked || out.ingress_checked;
        r.trace.delivered_payload = std::move(out.delivered_payload);
        if (out.outcome.kind == Outcome::Kind::punted) {
            r.trace.outcome.kind = Outcome::Kind::dropped;
            r.trace.outcome.reason = "repeat-punt";
            r.trace.events.push_back({TraceEvent::Kind::drop, out.outcome.node, out.outcome.time, "repeat-punt", {}, {}, {}, {}});
        }
    } else {
        r.trace.outcome = Outcome{Outcome::Kind::dropped, punt.node, {}, "sma:" + d.reason, packet.slice, punt.time};
        r.trace.events.push_back({TraceEvent::Kind::drop, punt.node, punt.time, r.trace.outcome.reason, {}, {}, {}, {}});
    }
    return r;
}

FlowDecision Sma::handle_new_flow(const fabric::PuntEvent &punt) {
    now_ = std::max(now_, punt.time);
    const auto &h = punt.header;
    const auto &c = cfg_.costs;
    FlowDecision d;
    d.flow = {h.src_ip, h.dst_ip};
    d.edge = punt.node;
    d.punt_time = punt.time;

    const std::int64_t t_us = punt.time * 1000;
    const std::int64_t start = std::max(t_us + c.controller_rtt_us / 2, controller_free_us_);
    std::int64_t cost = c.flow_processing_us;

    const auto device = repo_.device_for(h.src_mac, h.src_ip);
    d.device_id = device.value_or(h.src_mac.str());
    const auto host = fabric_.host_by_ip(h.dst_ip);
    std::optional<SliceId> slice;
    std::string deny;
    bool generic = false;

    if (!host) {
        deny = "no-service-host";
    } else if (!cfg_.security) {
        auto s = fabric_.slices_of_host(*host);
        if (s.empty()) {
            deny = "host-without-slice";
        } else {
            slice = s.front();
        }
    } else {
        cost += c.dispatch_us;
        auto trust = edge_trust_.find(punt.node);
        if (trust == edge_trust_.end()) {
            cost += c.attestation_us;
            trust = edge_trust_.emplace(punt.node, attest(punt.node)).first;
            if (trust->second != secfn::TrustVerdict::trusted) {
                admin_alert({"TVF", {}, h.flow_id, std::string{"edge attestation failed: "} + secfn::to_string(trust->second),
                             "critical", punt.time});
            }
        }
        if (trust->second != secfn::TrustVerdict::trusted) {
            deny = std::string{"tvf:"} + secfn::to_string(trust->second);
        } else {
            const bool created = !deployments_.count(punt.node);
            std::optional<std::string> user;
            if (device) user = repo_.user_of_device(*device);
            std::optional<policy::SecurityProfile> profile;
            if (user && (created || !deployments_.at(punt.node).covered_users.count(*user))) {
                cost += c.profile_extract_us;
                profile = repo_.extract_profile(*user);
                log_.append(alc::events::profile_extracted(*user, punt.node));
                d.profile_extracted = true;
            }
            if (created) {
                auto dep = compose_nsf(profile, punt.node, signatures_, cfg_, punt.time);
                dep.fvf.model = model_;
                deployments_.emplace(punt.node, std::move(dep));
            } else if (profile) {
                merge_profile(deployments_.at(punt.node), *profile);
            }
            auto &dep = deployments_.at(punt.node);
            if (created || profile) {
                cost += c.compose_us + c.deploy_us;
                if (profile) {
                    for (const auto &dev : profile->devices()) {
                        secfn::DevicePolicy dp;
                        bool lists = false;
                        for (const auto *rule : repo_.rules_for_device(dev)) {
                            dp.device_id = dev;
                            dp.fingerprint_mac = rule->host_mac;
                            dp.fingerprint_ip = rule->host_ip;
                            for (const auto &a : rule->actions) {
                                dp.whitelist.insert(a.whitelist.begin(), a.whitelist.end());
                                dp.blacklist.insert(a.blacklist.begin(), a.blacklist.end());
                                lists = lists || !a.whitelist.empty() || !a.blacklist.empty();
                            }
                        }
                        if (lists) dep.device_policies[dev] = dp;
                    }
                }
                std::vector<std::string> users(dep.covered_users.begin(), dep.covered_users.end());
                log_.append(alc::events::nsf_deployed(punt.node, users, dep.fsf.has_value()));
                d.nsf_deployed = true;
            }

            cost += c.decision_us;
            fabric::Packet probe;
            probe.src_ip = h.src_ip;
            probe.dst_ip = h.dst_ip;
            probe.src_mac = h.src_mac;
            probe.dst_mac = h.dst_mac;
            probe.flow_id = h.flow_id;
            probe.virtual_timestamp = punt.time;
            auto req = requested_pair(dep, probe.src_mac.str(), h.dst_ip);
            auto v = secfn::nsaf_check(dep.nsaf, probe, req);
            switch (v.kind) {
            case secfn::NsafVerdict::Kind::permit: slice = req.slice; break;
            case secfn::NsafVerdict::Kind::deny_unauthorized:
            case secfn::NsafVerdict::Kind::deny_blacklisted: deny = std::string{"nsaf:"} + secfn::to_string(v.kind); break;
            case secfn::NsafVerdict::Kind::route_generic: {
                auto s = fabric_.slices_of_host(*host);
                if (device) {
                    deny = "nsaf:DenyUnauthorized";
                } else if (std::find(s.begin(), s.end(), v.generic_slice) != s.end()) {
                    slice = v.generic_slice;
                    generic = true;
                } else {
                    deny = "nsaf:RouteGeneric:destination-outside-generic-slice";
                }
                break;
            }
            }
            if (deny.empty()) {
                std::vector<secfn::Signature> header_sigs;
                for (const auto &s : dep.fvf.signatures) {
                    if (s.scope == secfn::SignatureScope::header) header_sigs.push_back(s);
                }
                if (auto hit = secfn::scan_signatures(header_sigs, probe)) {
                    deny = "fvf:DropSignature:" + header_sigs[*hit].id;
                    if (dep.fvf.alerted.insert(probe.src_mac.str()).second) {
                        raise_alert({"FVF", probe.src_mac.str(), h.flow_id, "signature:" + header_sigs[*hit].id, "high",
                                     punt.time});
                    }
                }
            }
        }
    }

    const std::int64_t finish = start + cost;
    controller_free_us_ = finish;
    const std::int64_t install_us = finish + (c.controller_rtt_us - c.controller_rtt_us / 2);
    d.setup_ms = static_cast<double>(install_us - t_us) / 1000.0;
    d.active_at = (install_us + 999) / 1000;

    if (deny.empty() && slice) {
        InstalledFlow f;
        f.flow = d.flow;
        f.device_id = d.device_id;
        f.edge = punt.node;
        f.host = *host;
        f.slice = *slice;
        if (const auto *ue = fabric_.ue_by_mac(h.src_mac)) f.ue = ue->id;
        if (auto old = flows_.find(d.flow); old != flows_.end()) {
            remove_rules(old->second.forward);
            remove_rules(old->second.reverse);
        }
        if (install_path(f, false)) {
            d.kind = generic ? FlowDecision::Kind::generic : FlowDecision::Kind::installed;
            d.slice = *slice;
            d.rules_installed = f.forward.size() + f.reverse.size();
            flows_.insert_or_assign(d.flow, std::move(f));
        } else {
            d.kind = FlowDecision::Kind::routing_error;
            d.reason = "no-path";
        }
    } else {
        d.kind = deny == "no-service-host" ? FlowDecision::Kind::routing_error : FlowDecision::Kind::denied;
        d.reason = deny;
    }
    log_.append(alc::events::make("FlowDecision", to_json(d)));
    decisions_.push_back(d);
    return d;
}

fabric::HookResult Sma::on_access_ingress(const NodeId &node, fabric::Packet &packet, fabric::ForwardingTrace &trace) {
    auto it = deployments_.find(node);
    if (it == deployments_.end()) {
        trace_fn(trace, node, packet, "NSF:absent");
        return {};
    }
    ingress_evaluated_ = true;
    auto &dep = it->second;
    const auto device = packet.src_mac.str();

    auto v = secfn::nsaf_check(dep.nsaf, packet, requested_pair(dep, device, packet.dst_ip));
    trace_fn(trace, node, packet, std::string{"NSAF:"} + secfn::to_string(v.kind));
    if (v.kind == secfn::NsafVerdict::Kind::deny_unauthorized || v.kind == secfn::NsafVerdict::Kind::deny_blacklisted) {
        return {false, std::string{"nsaf:"} + secfn::to_string(v.kind), 0};
    }
    if (v.kind == secfn::NsafVerdict::Kind::route_generic && !repo_.device_for(packet.src_mac, packet.src_ip)) {
        auto &c = dep.generic_counters[device];
        const SimTime t = packet.virtual_timestamp;
        c.window.emplace_back(t, packet.payload.size());
        while (!c.window.empty() && c.window.front().first <= t - cfg_.fvf_window_ms) c.window.pop_front();
        if (c.window.size() > cfg_.generic_rate_cap) {
            trace_fn(trace, node, packet, "GENERIC:rate-cap");
            return {false, "generic:rate-cap", 0};
        }
    }

    if (auto dp = dep.device_policies.find(device); dp != dep.device_policies.end()) {
        auto dv = secfn::device_specific_check(dp->second, packet);
        trace_fn(trace, node, packet, std::string{"DEVICE:"} + secfn::to_string(dv.kind));
        if (dv.kind != secfn::DeviceVerdict::Kind::permit) return {false, std::string{"device:"} + secfn::to_string(dv.kind), 0};
    }

    if (cfg_.fvf_placement == FvfPlacement::edge) {
        auto fv = secfn::fvf_validate(dep.fvf, packet);
        trace_fn(trace, node, packet, std::string{"FVF:"} + secfn::to_string(fv.kind));
        if (fv.alert) raise_alert(*fv.alert);
        if (fv.kind == secfn::FvfVerdict::Kind::drop_signature) return {false, "fvf:DropSignature:" + fv.signature_id, 0};
        if (fv.kind == secfn::FvfVerdict::Kind::drop_anomaly) return {false, "fvf:DropAnomaly", 0};
    }

    if (auto s = secured_.find({packet.src_ip, packet.dst_ip}); s != secured_.end() && s->second.ingress == node) {
        auto env = s->second.cipher.encrypt(packet.payload);
        packet.payload = env.serialize();
        trace_fn(trace, node, packet, "FSF:encrypt:" + env.key_id);
    }
    return {};
}

fabric::HookResult Sma::on_access_egress(const NodeId &node, fabric::Packet &packet, fabric::ForwardingTrace &trace) {
    if (auto s = secured_.find({packet.src_ip, packet.dst_ip}); s != secured_.end() && s->second.egress == node) {
        try {
            auto env = secfn::CipherEnvelope::parse(packet.payload);
            packet.payload = s->second.cipher.decrypt(env);
            trace_fn(trace, node, packet, "FSF:decrypt:" + env.key_id);
        } catch (const Error &) {
            trace_fn(trace, node, packet, "FSF:authentication-failure");
            return {false, "fsf:authentication", 0};
        }
    }
    if (cfg_.fvf_placement == FvfPlacement::egress) {
        auto it = relocated_fvf_.find(node);
        if (it == relocated_fvf_.end()) {
            auto f = secfn::make_fvf(signatures_, cfg_.fvf_window_ms, cfg_.fvf_threshold);
            f.model = model_;
            it = relocated_fvf_.emplace(node, std::move(f)).first;
        }
        auto fv = secfn::fvf_validate(it->second, packet);
        trace_fn(trace, node, packet, std::string{"FVF:"} + secfn::to_string(fv.kind));
        if (fv.alert) raise_alert(*fv.alert);
        if (fv.kind == secfn::FvfVerdict::Kind::drop_signature) return {false, "fvf:DropSignature:" + fv.signature_id, 0};
        if (fv.kind == secfn::FvfVerdict::Kind::drop_anomaly) return {false, "fvf:DropAnomaly", 0};
    }
    return {};
}

// ---------------------------------------------------------------- alerts and time

void Sma::raise_alert(secfn::Alert alert) {
    record_alert(alert);
    if (!cfg_.blacklist_feedback) return;
    const SimTime latency = cfg_.alert_latency_ms.value_or((cfg_.costs.controller_rtt_us + 999) / 1000);
    pending_.push_back({alert.time + latency, std::move(alert)});
}

ReconfigAction Sma::handle_alert(const secfn::Alert &alert) {
    ReconfigAction act;
    act.device_id = alert.device_id;
    const fabric::UserEquipment *ue = nullptr;
    try {
        ue = fabric_.ue_by_mac(Mac::parse(alert.device_id));
    } catch (const Error &) {
        ue = nullptr;
    }
    std::optional<NodeId> entry;
    if (ue) {
        entry = ue->edge;
    } else {
        for (const auto &[node, dep] : deployments_) {
            if (dep.nsaf.allowed.count(alert.device_id)) {
                entry = node;
                break;
            }
        }
    }
    if (!entry) {
        act.kind = ReconfigAction::Kind::admin_only;
        admin_alert({"SMA", alert.device_id, alert.flow_id, "alert for unknown device: " + alert.reason, "medium", now_});
        return act;
    }
    act.node = *entry;
    auto &dep = ensure_deployment(*entry);
    if (!dep.nsaf.blacklist.insert(alert.device_id).second) {
        act.kind = ReconfigAction::Kind::noop;
        return act;
    }
    act.kind = ReconfigAction::Kind::blacklisted;
    blacklisted_at_[alert.device_id] = now_;
    log_.append(alc::events::make("DeviceBlacklisted", {{"node", *entry},
                                                         {"device_id", alert.device_id},
                                                         {"reason", alert.reason},
                                                         {"time", now_}}));
    for (auto &[ref, f] : flows_) {
        if (f.device_id != alert.device_id) continue;
        for (const auto &[node, id] : f.forward) {
            const auto *r = fabric_.node(node).table.find(id);
            if (!r) continue;
            FlowRule drop = *r;
            drop.action = fabric::Drop{};
            install_rule(node, drop);
            ++act.rules_replaced;
        }
    }
    return act;
}

void Sma::advance_to(SimTime t) {
    const bool audits = cfg_.security && cfg_.audit_period_ms > 0;
    for (;;) {
        auto next_alert = std::min_element(pending_.begin(), pending_.end(),
                                           [](const PendingAlert &a, const PendingAlert &b) { return a.due < b.due; });
        const bool alert_due = next_alert != pending_.end() && next_alert->due <= t;
        const bool audit_due = audits && next_audit_ms_ <= t;
        if (!alert_due && !audit_due) break;
        if (alert_due && (!audit_due || next_alert->due <= next_audit_ms_)) {
            auto a = *next_alert;
            pending_.erase(next_alert);
            now_ = std::max(now_, a.due);
            handle_alert(a.alert);
        } else {
            now_ = std::max(now_, next_audit_ms_);
            audit_all(true);
            next_audit_ms_ += cfg_.audit_period_ms;
        }
    }
    now_ = std::max(now_, t);
}

// ---------------------------------------------------------------- audits

const AuditRecord &Sma::audit(const NodeId &node, bool periodic) {
    auto trusted = log_.expected_switch_state(node, now_);
    auto observed = fabric_.report_flow_rules(node, now_);
    AuditRecord rec;
    rec.result = secfn::imf_audit(trusted, observed);
    rec.time = now_;
    rec.periodic = periodic;
    log_.append(alc::events::make("AuditCompleted", {{"node", node},
                                                      {"clean", rec.result.clean},
                                                      {"extra", rec.result.extra_rules.size()},
                                                      {"missing", rec.result.missing_rules.size()},
                                                      {"modified", rec.result.modified_rules.size()},
                                                      {"periodic", periodic}}));
    if (!rec.result.clean) {
        rec.diff = secfn::render_side_by_side(trusted, observed);
        admin_alert({"IMF", {}, {},
                     "switch " + node + " diverges from trusted report: extra=" +
                         std::to_string(rec.result.extra_rules.size()) + " missing=" +
                         std::to_string(rec.result.missing_rules.size()) + " modified=" +
                         std::to_string(rec.result.modified_rules.size()),
                     "critical", now_});
        emit(alc::events::make("AuditDiff", {{"node", node}, {"audit", rec.result.to_json()}, {"diff", rec.diff}}));
        for (const auto &r : rec.result.extra_rules) {
            fabric_.apply_flow_mod(node, FlowMod{FlowMod::Op::remove, r}, Provenance::controller);
        }
        for (const auto &r : rec.result.missing_rules) {
            fabric_.apply_flow_mod(node, FlowMod{FlowMod::Op::add, r}, Provenance::controller);
        }
        for (const auto &p : rec.result.modified_rules) {
            fabric_.apply_flow_mod(node, FlowMod{FlowMod::Op::add, p.trusted}, Provenance::controller);
        }
        rec.restored = true;
        log_.append(alc::events::make("SwitchRestored", {{"node", node},
                                                          {"removed", rec.result.extra_rules.size()},
                                                          {"reinstalled", rec.result.missing_rules.size() +
                                                                              rec.result.modified_rules.size()}}));
    }
    audits_.push_back(std::move(rec));
    return audits_.back();
}

const AuditRecord &Sma::audit_now(const NodeId &node) {
    if (fabric_.node(node).kind == fabric::NodeKind::host) {
        throw Error{Errc::invalid_argument, "'" + node + "' is a host, not a switch"};
    }
    return audit(node, false);
}

std::vector<AuditRecord> Sma::audit_all(bool periodic) {
    std::vector<AuditRecord> out;
    for (const auto &[id, n] : fabric_.nodes()) {
        if (n.kind != fabric::NodeKind::host) out.push_back(audit(id, periodic));
    }
    return out;
}

// ---------------------------------------------------------------- gated deployment, keys, handover

DeployResult Sma::deploy_service_gated(const NodeId &host, const std::string &service) {
    (void)fabric_.node(host);
    DeployResult r;
    r.host = host;
    r.service = service;
    r.verdict = attest(host);
    r.deployed = r.verdict == secfn::TrustVerdict::trusted;
    if (r.deployed) {
        services_.insert({host, service});
        log_.append(alc::events::make("ServiceDeployed", {{"node", host}, {"service", service}}));
    } else {
        log_.append(alc::events::make("DeploymentRefused",
                                      {{"node", host}, {"service", service}, {"verdict", secfn::to_string(r.verdict)}}));
        admin_alert({"TVF", {}, {}, "deployment of " + service + " on " + host + " refused: " + secfn::to_string(r.verdict),
                     "critical", now_});
    }
    return r;
}

std::string Sma::provision_flow_security(const FlowRef &flow, const std::pair<NodeId, NodeId> &endpoints) {
    auto it = flows_.find(flow);
    if (it == flows_.end()) throw Error{Errc::not_found, "flow " + flow.str() + " is not installed"};
    if (cfg_.fvf_placement != FvfPlacement::edge) {
        throw Error{Errc::precondition, "flow encryption needs the FVF at the edge so validation precedes encryption"};
    }
    std::optional<Mac> mac;
    try {
        mac = Mac::parse(it->second.device_id);
    } catch (const Error &) {
        mac.reset();
    }
    auto m = repo_.match({flow.src_ip, mac, flow.dst_ip});
    if (m.kind != policy::MatchResult::Kind::authorized || !m.security_reqs.count(policy::SecurityReq::confidentiality)) {
        throw Error{Errc::precondition, "service of flow " + flow.str() + " does not require confidentiality"};
    }
    for (const auto &e : {endpoints.first, endpoints.second}) {
        auto v = attest(e);
        if (v != secfn::TrustVerdict::trusted) {
            admin_alert({"TVF", {}, {}, "key provisioning refused: endpoint " + e + " is " + secfn::to_string(v),
                         "critical", now_});
            throw Error{Errc::precondition, "endpoint '" + e + "' is not trusted (" + secfn::to_string(v) + ")"};
        }
    }
    auto key = kgf_.generate(endpoints, now_);
    log_.append(alc::events::make("KeyDistributed", {{"key_id", key.key_id},
                                                      {"flow", flow.str()},
                                                      {"endpoints", {endpoints.first, endpoints.second}}}));
    auto &dep = ensure_deployment(endpoints.first);
    if (!dep.fsf) dep.fsf.emplace();
    (*dep.fsf)[flow.str()] = key.key_id;
    const auto id = key.key_id;
    secured_.insert_or_assign(flow, SecuredFlow{secfn::FlowCipher{std::move(key)}, endpoints.first, endpoints.second});
    return id;
}

HandoverResult Sma::handover(const std::string &device_id, const NodeId &from_edge, const NodeId &to_edge) {
    auto from = deployments_.find(from_edge);
    if (from == deployments_.end() ||
        (!from->second.nsaf.allowed.count(device_id) && !from->second.nsaf.blacklist.count(device_id))) {
        throw Error{Errc::not_found, "device '" + device_id + "' is unknown at " + from_edge};
    }
    if (fabric_.node(to_edge).kind != fabric::NodeKind::edge) {
        throw Error{Errc::invalid_argument, "handover target '" + to_edge + "' is not an edge"};
    }
    const auto *ue = fabric_.ue_by_mac(Mac::parse(device_id));
    if (!ue || ue->edge != from_edge) {
        throw Error{Errc::precondition, "device '" + device_id + "' is not attached at " + from_edge};
    }
    const auto extractions_before = log_.count("ProfileExtracted");

    HandoverResult r;
    r.device_id = device_id;
    r.from = from_edge;
    r.to = to_edge;
    auto &src = from->second;
    auto &dst = ensure_deployment(to_edge);
    if (auto a = src.nsaf.allowed.find(device_id); a != src.nsaf.allowed.end()) {
        dst.nsaf.allowed[device_id].insert(a->second.begin(), a->second.end());
        r.authorizations = a->second;
    }
    if (src.nsaf.blacklist.count(device_id)) {
        dst.nsaf.blacklist.insert(device_id);
        r.blacklisted = true;
    }
    if (auto c = src.fvf.counters.find(device_id); c != src.fvf.counters.end()) dst.fvf.counters[device_id] = c->second;
    if (src.fvf.alerted.count(device_id)) dst.fvf.alerted.insert(device_id);
    if (auto p = src.device_policies.find(device_id); p != src.device_policies.end()) {
        dst.device_policies[device_id] = p->second;
    }
    log_.append(alc::events::make("Handover", {{"device_id", device_id},
                                                {"from", from_edge},
                                                {"to", to_edge},
                                                {"blacklisted", r.blacklisted},
                                                {"time", now_}}));

    auto moved = *ue;
    fabric_.detach_ue(moved.id);
    moved.edge = to_edge;
    fabric_.attach_ue(moved);

    for (auto &[ref, f] : flows_) {
        if (f.device_id != device_id) continue;
        remove_rules(f.forward);
        remove_rules(f.reverse);
        f.edge = to_edge;
        f.ue = moved.id;
        install_path(f, r.blacklisted);
        ++r.flows_reanchored;
        if (auto s = secured_.find(ref); s != secured_.end() && s->second.ingress == from_edge) {
            s->second.ingress = to_edge;
            log_.append(alc::events::make("KeyDistributed", {{"key_id", s->second.cipher.key().key_id},
                                                              {"flow", ref.str()},
                                                              {"endpoints", {to_edge, s->second.egress}}}));
        }
    }
    r.profile_extractions = log_.count("ProfileExtracted") - extractions_before;
    return r;
}

void Sma::register_device(policy::PolicyRule rule) {
    const auto user = rule.user.user_id;
    const auto device = rule.device_id;
    repo_.add_rule(std::move(rule));
    log_.append(alc::events::make("DeviceRegistered", {{"device_id", device}, {"user_id", user}}));
    // covered deployments pick the new device up on the user's next flow
    for (auto &[node, dep] : deployments_) dep.covered_users.erase(user);
}

} // namespace sentinel::sma

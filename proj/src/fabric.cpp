#include "sentinel/fabric.hpp"

#include <algorithm>
#include <queue>

#include "sentinel/crypto.hpp"

namespace sentinel::fabric {

using nlohmann::json;

const char *to_string(NodeKind k) {
    switch (k) {
    case NodeKind::edge: return "edge";
    case NodeKind::core: return "core";
    case NodeKind::host: return "host";
    }
    return "?";
}

const char *to_string(Provenance p) { return p == Provenance::controller ? "controller" : "external"; }

const char *to_string(TraceEvent::Kind k) {
    switch (k) {
    case TraceEvent::Kind::ingress: return "ingress";
    case TraceEvent::Kind::function: return "function";
    case TraceEvent::Kind::lookup: return "lookup";
    case TraceEvent::Kind::link: return "link";
    case TraceEvent::Kind::punt: return "punt";
    case TraceEvent::Kind::deliver: return "deliver";
    case TraceEvent::Kind::drop: return "drop";
    }
    return "?";
}

bool FlowKey::matches(const PacketHeader &h) const {
    if (src_ip && *src_ip != h.src_ip) return false;
    if (dst_ip && *dst_ip != h.dst_ip) return false;
    if (src_mac && *src_mac != h.src_mac) return false;
    if (dst_mac && *dst_mac != h.dst_mac) return false;
    if (slice && slice != h.slice) return false;
    return true;
}

bool canonical_before(const FlowRule &a, const FlowRule &b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.rule_id < b.rule_id;
}

TableDelta FlowTable::apply(const FlowMod &mod, Provenance provenance) {
    TableDelta delta;
    if (mod.op == FlowMod::Op::remove) {
        auto it = std::find_if(rules_.begin(), rules_.end(),
                               [&](const FlowRule &r) { return r.rule_id == mod.rule.rule_id; });
        if (it == rules_.end()) {
            delta.warning = true;
            return delta;
        }
        delta.removed.push_back(*it);
        rules_.erase(it);
        return delta;
    }

    FlowRule rule = mod.rule;
    rule.provenance = provenance;
    // an add replaces any rule with the same id or the same (match, priority)
    auto replaced = [&](const FlowRule &r) {
        return r.rule_id == rule.rule_id || (r.match == rule.match && r.priority == rule.priority);
    };
    for (const auto &r : rules_) {
        if (replaced(r)) delta.removed.push_back(r);
    }
    std::erase_if(rules_, replaced);
    auto pos = std::lower_bound(rules_.begin(), rules_.end(), rule, canonical_before);
    rules_.insert(pos, rule);
    delta.added.push_back(std::move(rule));
    return delta;
}

const FlowRule *FlowTable::lookup(const PacketHeader &h) const {
    for (const auto &r : rules_) {
        if (r.match.matches(h)) return &r;
    }
    return nullptr;
}

const FlowRule *FlowTable::find(const std::string &rule_id) const {
    for (const auto &r : rules_) {
        if (r.rule_id == rule_id) return &r;
    }
    return nullptr;
}

json to_json(const FlowKey &k) {
    json j = json::object();
    if (k.src_ip) j["src_ip"] = k.src_ip->str();
    if (k.dst_ip) j["dst_ip"] = k.dst_ip->str();
    if (k.src_mac) j["src_mac"] = k.src_mac->str();
    if (k.dst_mac) j["dst_mac"] = k.dst_mac->str();
    if (k.slice) j["slice"] = *k.slice;
    return j;
}

json to_json(const Action &a) {
    return std::visit(
        [](const auto &act) -> json {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, Forward>) {
                return json{{"type", "forward"}, {"port", act.port}, {"slice", act.slice}};
            } else if constexpr (std::is_same_v<T, Drop>) {
                return json{{"type", "drop"}};
            } else {
                return json{{"type", "punt"}};
            }
        },
        a);
}

json to_json(const FlowRule &r, bool with_provenance) {
    json j{{"rule_id", r.rule_id}, {"priority", r.priority}, {"match", to_json(r.match)},
           {"action", to_json(r.action)}};
    if (with_provenance) j["provenance"] = to_string(r.provenance);
    return j;
}

FlowRule rule_from_json(const json &j) {
    FlowRule r;
    r.rule_id = j.at("rule_id").get<std::string>();
    r.priority = j.at("priority").get<int>();
    const auto &m = j.at("match");
    if (m.contains("src_ip")) r.match.src_ip = Ipv4::parse(m["src_ip"].get<std::string>());
    if (m.contains("dst_ip")) r.match.dst_ip = Ipv4::parse(m["dst_ip"].get<std::string>());
    if (m.contains("src_mac")) r.match.src_mac = Mac::parse(m["src_mac"].get<std::string>());
    if (m.contains("dst_mac")) r.match.dst_mac = Mac::parse(m["dst_mac"].get<std::string>());
    if (m.contains("slice")) r.match.slice = m["slice"].get<int>();
    const auto &a = j.at("action");
    auto type = a.at("type").get<std::string>();
    if (type == "forward") {
        r.action = Forward{a.at("port").get<int>(), a.at("slice").get<int>()};
    } else if (type == "drop") {
        r.action = Drop{};
    } else if (type == "punt") {
        r.action = PuntToController{};
    } else {
        throw Error{Errc::schema, "unknown action type '" + type + "'"};
    }
    if (j.contains("provenance")) {
        r.provenance = j["provenance"] == "external" ? Provenance::external : Provenance::controller;
    }
    return r;
}

json to_json(const Outcome &o) {
    static constexpr const char *kinds[] = {"delivered", "dropped", "punted"};
    json j{{"kind", kinds[static_cast<int>(o.kind)]}, {"node", o.node}, {"time", o.time}};
    if (!o.endpoint.empty()) j["endpoint"] = o.endpoint;
    if (!o.reason.empty()) j["reason"] = o.reason;
    if (o.slice) j["slice"] = *o.slice;
    return j;
}

json RuleReport::to_json() const {
    json rs = json::array();
    for (const auto &r : rules) rs.push_back(fabric::to_json(r, false));
    return json{{"node_id", node_id}, {"report_time", report_time}, {"rules", rs}};
}

std::string RuleReport::canonical_bytes() const {
    json rs = json::array();
    for (const auto &r : rules) rs.push_back(fabric::to_json(r, false));
    return json{{"node_id", node_id}, {"rules", rs}}.dump();
}

const PortBinding *Node::port(PortId p) const {
    for (const auto &b : ports) {
        if (b.port == p) return &b;
    }
    return nullptr;
}

std::string software_descriptor(const Node &n) {
    return json{{"id", n.id}, {"kind", to_string(n.kind)}, {"software", n.software}}.dump();
}

namespace {

NodeKind parse_kind(const std::string &s) {
    if (s == "edge") return NodeKind::edge;
    if (s == "core") return NodeKind::core;
    if (s == "host") return NodeKind::host;
    throw Error{Errc::schema, "unknown node kind '" + s + "'"};
}

Digest measure(const Node &n, bool tampered) {
    crypto::Sha256 h;
    h.update(software_descriptor(n));
    if (tampered) h.update("|tampered");
    return h.finish();
}

} // namespace

Fabric Fabric::build(const json &doc) {
    if (!doc.is_object()) throw Error{Errc::schema, "topology document must be an object"};
    Fabric f;
    try {
        for (const auto &jn : doc.value("nodes", json::array())) {
            Node n;
            n.id = jn.at("id").get<std::string>();
            n.kind = parse_kind(jn.at("kind").get<std::string>());
            n.name = jn.value("name", n.id);
            if (jn.contains("ip")) n.ip = Ipv4::parse(jn["ip"].get<std::string>());
            if (jn.contains("mac")) n.mac = Mac::parse(jn["mac"].get<std::string>());
            n.service = jn.value("service", "");
            n.software = jn.value("software", std::string{to_string(n.kind)} + "-image-v1");
            n.tampered = jn.value("tampered", false);
            if (f.nodes_.count(n.id)) throw Error{Errc::duplicate_node, "node '" + n.id + "' declared twice"};
            n.expected_hash = measure(n, false);
            if (n.kind == NodeKind::edge) {
                FlowRule punt;
                punt.rule_id = kDefaultPuntRule;
                punt.priority = 0;
                punt.action = PuntToController{};
                n.table.apply(FlowMod{FlowMod::Op::add, punt}, Provenance::controller);
            }
            f.nodes_.emplace(n.id, std::move(n));
        }

        for (const auto &jl : doc.value("links", json::array())) {
            auto a = jl.at("a").get<std::string>();
            auto b = jl.at("b").get<std::string>();
            SimTime lat = jl.value("latency_ms", SimTime{1});
            if (!f.nodes_.count(a) || !f.nodes_.count(b)) {
                throw Error{Errc::undefined_node, "link " + a + "-" + b + " references an undefined node"};
            }
            if (a == b) throw Error{Errc::config, "self link on '" + a + "'"};
            if (lat < 0) throw Error{Errc::config, "negative link latency"};
            auto &na = f.nodes_.at(a);
            auto &nb = f.nodes_.at(b);
            na.ports.push_back({f.next_port(na), PortKind::link, b, lat});
            nb.ports.push_back({f.next_port(nb), PortKind::link, a, lat});
        }

        std::set<SliceId> seen;
        for (const auto &js : doc.value("slices", json::array())) {
            Slice s;
            auto vlan = js.at("vlan").get<long>();
            if (!valid_vlan(vlan)) {
                throw Error{Errc::vlan_range, "slice VLAN " + std::to_string(vlan) + " outside 1-4094"};
            }
            s.vlan = static_cast<SliceId>(vlan);
            if (!seen.insert(s.vlan).second) {
                throw Error{Errc::config, "slice VLAN " + std::to_string(vlan) + " declared twice"};
            }
            s.name = js.value("name", "vlan" + std::to_string(vlan));
            for (const auto &h : js.value("hosts", json::array())) {
                auto id = h.get<std::string>();
                if (!f.nodes_.count(id)) throw Error{Errc::undefined_node, "slice host '" + id + "' undefined"};
                s.hosts.push_back(id);
            }
            f.slices_.push_back(std::move(s));
        }

        for (const auto &ju : doc.value("ues", json::array())) {
            UserEquipment ue;
            ue.id = ju.at("id").get<std::string>();
            ue.ip = Ipv4::parse(ju.at("ip").get<std::string>());
            ue.mac = Mac::parse(ju.at("mac").get<std::string>());
            ue.edge = ju.at("edge").get<std::string>();
            f.attach_ue(ue);
        }
    } catch (const json::exception &e) {
        throw Error{Errc::schema, std::string{"topology: "} + e.what()};
    }
    return f;
}

PortId Fabric::next_port(const Node &n) const {
    PortId p = 0;
    for (const auto &b : n.ports) p = std::max(p, b.port);
    return p + 1;
}

Node &Fabric::require(const NodeId &id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error{Errc::unknown_node, "unknown node '" + id + "'"};
    return it->second;
}

const Node &Fabric::require(const NodeId &id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error{Errc::unknown_node, "unknown node '" + id + "'"};
    return it->second;
}

const Slice *Fabric::slice(SliceId vlan) const {
    for (const auto &s : slices_) {
        if (s.vlan == vlan) return &s;
    }
    return nullptr;
}

std::set<SliceId> Fabric::slice_ids() const {
    std::set<SliceId> out;
    for (const auto &s : slices_) out.insert(s.vlan);
    return out;
}

std::vector<SliceId> Fabric::slices_of_host(const NodeId &host) const {
    std::vector<SliceId> out;
    for (const auto &s : slices_) {
        if (std::find(s.hosts.begin(), s.hosts.end(), host) != s.hosts.end()) out.push_back(s.vlan);
    }
    return out;
}

std::optional<NodeId> Fabric::host_by_ip(const Ipv4 &ip) const {
    for (const auto &[id, n] : nodes_) {
        if (n.kind == NodeKind::host && n.ip == ip) return id;
    }
    return std::nullopt;
}

PortId Fabric::attach_ue(const UserEquipment &ue_in) {
    auto &edge = require(ue_in.edge);
    if (edge.kind != NodeKind::edge) throw Error{Errc::config, "UE '" + ue_in.id + "' must attach to an edge"};
    if (ues_.count(ue_in.id)) throw Error{Errc::config, "UE '" + ue_in.id + "' already attached"};
    UserEquipment ue = ue_in;
    ue.port = next_port(edge);
    edge.ports.push_back({ue.port, PortKind::access, ue.id, 0});
    ues_.emplace(ue.id, ue);
    return ue.port;
}

void Fabric::detach_ue(const std::string &ue_id) {
    auto it = ues_.find(ue_id);
    if (it == ues_.end()) throw Error{Errc::not_found, "unknown UE '" + ue_id + "'"};
    auto &edge = require(it->second.edge);
    std::erase_if(edge.ports, [&](const PortBinding &b) { return b.kind == PortKind::access && b.peer == ue_id; });
    ues_.erase(it);
}

const UserEquipment *Fabric::ue(const std::string &ue_id) const {
    auto it = ues_.find(ue_id);
    return it == ues_.end() ? nullptr : &it->second;
}

const UserEquipment *Fabric::ue_by_mac(const Mac &mac) const {
    for (const auto &[id, u] : ues_) {
        if (u.mac == mac) return &u;
    }
    return nullptr;
}

std::optional<PortId> Fabric::port_towards(const NodeId &from, const std::string &peer) const {
    for (const auto &b : require(from).ports) {
        if (b.peer == peer) return b.port;
    }
    return std::nullopt;
}

std::vector<PathHop> Fabric::shortest_path(const NodeId &from, const NodeId &to) const {
    require(from);
    require(to);
    if (from == to) return {};
    std::map<NodeId, SimTime> dist;
    std::map<NodeId, std::pair<NodeId, PortId>> prev;
    using Item = std::pair<SimTime, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0;
    pq.push({0, from});
    while (!pq.empty()) {
        auto [d, id] = pq.top();
        pq.pop();
        if (d != dist[id]) continue;
        if (id == to) break;
        const auto &n = nodes_.at(id);
        if (n.kind == NodeKind::host && id != from) continue; // hosts do not transit
        for (const auto &b : n.ports) {
            if (b.kind != PortKind::link) continue;
            SimTime nd = d + b.latency_ms;
            auto it = dist.find(b.peer);
            if (it == dist.end() || nd < it->second) {
                dist[b.peer] = nd;
                prev[b.peer] = {id, b.port};
                pq.push({nd, b.peer});
            }
        }
    }
    if (!prev.count(to)) return {};
    std::vector<PathHop> hops;
    NodeId cur = to;
    while (cur != from) {
        auto [p, port] = prev.at(cur);
        hops.push_back({p, port});
        cur = p;
    }
    std::reverse(hops.begin(), hops.end());
    return hops;
}

void Fabric::set_tampered(const NodeId &node, bool tampered) { require(node).tampered = tampered; }

TableDelta Fabric::apply_flow_mod(const NodeId &node, const FlowMod &mod, Provenance provenance) {
    return require(node).table.apply(mod, provenance);
}

SwitchStateReport Fabric::report_flow_rules(const NodeId &node, SimTime now) const {
    const auto &n = require(node);
    SwitchStateReport r;
    r.node_id = node;
    r.report_time = now;
    r.rules = n.table.rules();
    for (auto &rule : r.rules) rule.provenance = Provenance::controller; // a switch cannot know provenance
    return r;
}

AttestationReport Fabric::measure_attestation(const NodeId &node, const Nonce &nonce) const {
    const auto &n = require(node);
    return AttestationReport{node, measure(n, n.tampered), nonce};
}

ForwardingTrace Fabric::inject_packet(Packet packet, const NodeId &node, PortId ingress_port) {
    const auto &n = require(node);
    return walk(std::move(packet), node, ingress_port, true, n.kind == NodeKind::host);
}

ForwardingTrace Fabric::packet_out(Packet packet, const NodeId &node, PortId in_port, bool run_ingress_hooks) {
    return walk(std::move(packet), node, in_port, run_ingress_hooks, false);
}

ForwardingTrace Fabric::walk(Packet packet, const NodeId &start, PortId in_port, bool run_ingress_hooks,
                             bool from_host) {
    ForwardingTrace trace;
    SimTime t = packet.virtual_timestamp;
    auto finish = [&](Outcome::Kind kind, const NodeId &node, std::string endpoint, std::string reason) {
        trace.outcome = Outcome{kind, node, std::move(endpoint), std::move(reason), packet.slice, t};
        if (kind == Outcome::Kind::delivered) {
            trace.events.push_back({TraceEvent::Kind::deliver, node, t, trace.outcome.endpoint, {}, {}, packet.slice, {}});
            trace.delivered_payload = packet.payload;
        } else if (kind == Outcome::Kind::dropped) {
            trace.events.push_back({TraceEvent::Kind::drop, node, t, trace.outcome.reason, {}, {}, packet.slice, {}});
        }
        return trace;
    };

    NodeId cur = start;
    PortId inp = in_port;
    trace.events.push_back({TraceEvent::Kind::ingress, cur, t, {}, {}, {}, packet.slice, {}});

    auto traverse = [&](const Node &from, const PortBinding &b) {
        trace.events.push_back({TraceEvent::Kind::link, from.id, t, {}, {}, b.peer, packet.slice, packet.payload});
        t += b.latency_ms;
        auto back = port_towards(b.peer, from.id);
        inp = back.value_or(0);
        cur = b.peer;
    };

    if (from_host) {
        const auto &h = require(cur);
        auto up = std::find_if(h.ports.begin(), h.ports.end(),
                               [](const PortBinding &b) { return b.kind == PortKind::link; });
        if (up == h.ports.end()) return finish(Outcome::Kind::dropped, cur, {}, "isolated-host");
        traverse(h, *up);
    } else {
        const auto &n = require(cur);
        const auto *b = n.port(inp);
        if (run_ingress_hooks && hook_ && b && b->kind == PortKind::access) {
            auto r = hook_->on_access_ingress(cur, packet, trace);
            trace.ingress_checked = true;
            t += r.cost_ms;
            if (!r.pass) return finish(Outcome::Kind::dropped, cur, {}, r.reason);
        }
    }

    for (int hops = 0; hops < kMaxHops; ++hops) {
        const auto &n = require(cur);
        if (n.kind == NodeKind::host) {
            if (packet.slice) {
                auto s = slices_of_host(n.id);
                if (std::find(s.begin(), s.end(), *packet.slice) == s.end()) {
                    return finish(Outcome::Kind::dropped, cur, {}, "slice-confinement");
                }
            }
            if (n.ip && *n.ip != packet.dst_ip) return finish(Outcome::Kind::dropped, cur, {}, "address-mismatch");
            return finish(Outcome::Kind::delivered, cur, n.id, {});
        }

        const auto header = packet.header();
        const FlowRule *rule = n.table.lookup(header);
        if (!rule) return finish(Outcome::Kind::dropped, cur, {}, "table-miss");
        trace.events.push_back({TraceEvent::Kind::lookup, cur, t, {}, rule->rule_id, {}, packet.slice, {}});

        if (std::holds_alternative<Drop>(rule->action)) {
            return finish(Outcome::Kind::dropped, cur, {}, "rule:" + rule->rule_id);
        }
        if (std::holds_alternative<PuntToController>(rule->action)) {
            trace.punt = PuntEvent{cur, inp, header, t};
            trace.events.push_back({TraceEvent::Kind::punt, cur, t, {}, rule->rule_id, {}, packet.slice, {}});
            trace.outcome = Outcome{Outcome::Kind::punted, cur, {}, {}, packet.slice, t};
            return trace;
        }

        const auto fwd = std::get<Forward>(rule->action);
        packet.slice = fwd.slice;
        const auto *b = n.port(fwd.port);
        if (!b) return finish(Outcome::Kind::dropped, cur, {}, "no-such-port");

        bool towards_endpoint = b->kind == PortKind::access || require(b->peer).kind == NodeKind::host;
        if (towards_endpoint && hook_) {
            auto r = hook_->on_access_egress(cur, packet, trace);
            t += r.cost_ms;
            if (!r.pass) return finish(Outcome::Kind::dropped, cur, {}, r.reason);
        }
        if (b->kind == PortKind::access) {
            return finish(Outcome::Kind::delivered, cur, b->peer, {});
        }
        traverse(n, *b);
    }
    return finish(Outcome::Kind::dropped, cur, {}, "hop-limit");
}

} // namespace sentinel::fabric

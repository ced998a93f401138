// fabric.hpp
//
// Simulated switching substrate: edge switches standing in for gNodeBs,
// core switches, service hosts, VLAN slices and per-switch flow tables.
// Packets are walked hop by hop in integer virtual milliseconds.

#ifndef SENTINEL_FABRIC_HPP
#define SENTINEL_FABRIC_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sentinel/common.hpp"

namespace sentinel::fabric {

enum class NodeKind { edge, core, host };

const char *to_string(NodeKind k);

struct PacketHeader {
    Ipv4 src_ip;
    Ipv4 dst_ip;
    Mac src_mac;
    Mac dst_mac;
    std::optional<SliceId> slice;
    std::string flow_id;
};

struct Packet {
    Ipv4 src_ip;
    Ipv4 dst_ip;
    Mac src_mac;
    Mac dst_mac;
    std::optional<SliceId> slice;
    Bytes payload;
    std::string flow_id;
    SimTime virtual_timestamp{0};

    PacketHeader header() const { return {src_ip, dst_ip, src_mac, dst_mac, slice, flow_id}; }
};

/// Match fields; an empty optional is a wildcard.
struct FlowKey {
    std::optional<Ipv4> src_ip;
    std::optional<Ipv4> dst_ip;
    std::optional<Mac> src_mac;
    std::optional<Mac> dst_mac;
    std::optional<SliceId> slice;

    bool matches(const PacketHeader &h) const;
    auto operator<=>(const FlowKey &) const = default;
};

struct Forward {
    PortId port;
    SliceId slice;
    auto operator<=>(const Forward &) const = default;
};
struct Drop {
    auto operator<=>(const Drop &) const = default;
};
struct PuntToController {
    auto operator<=>(const PuntToController &) const = default;
};
using Action = std::variant<Forward, Drop, PuntToController>;

enum class Provenance { controller, external };

struct FlowRule {
    std::string rule_id;
    FlowKey match;
    Action action{PuntToController{}};
    int priority{0};
    Provenance provenance{Provenance::controller};

    /// match, action and priority equal; provenance is not part of content
    bool same_content(const FlowRule &o) const {
        return match == o.match && action == o.action && priority == o.priority;
    }
};

/// Canonical table order: priority descending, then rule_id ascending.
bool canonical_before(const FlowRule &a, const FlowRule &b);

struct FlowMod {
    enum class Op { add, remove } op{Op::add};
    FlowRule rule;
};

struct TableDelta {
    std::vector<FlowRule> added;
    std::vector<FlowRule> removed;
    bool warning{false};
};

class FlowTable {
public:
    TableDelta apply(const FlowMod &mod, Provenance provenance);

    /// highest priority match, ties broken by lowest rule_id
    const FlowRule *lookup(const PacketHeader &h) const;

    const std::vector<FlowRule> &rules() const { return rules_; }
    const FlowRule *find(const std::string &rule_id) const;

private:
    std::vector<FlowRule> rules_; // canonical order
};

/// Rule-set view of one switch. Used both for what the switch reports and
/// for the expected state rebuilt from the activity log.
struct RuleReport {
    NodeId node_id;
    std::vector<FlowRule> rules;
    SimTime report_time{0};

    nlohmann::json to_json() const;
    /// canonical serialization; provenance is never included
    std::string canonical_bytes() const;
};
using SwitchStateReport = RuleReport;
using TrustedReport = RuleReport;

struct AttestationReport {
    NodeId node_id;
    Digest measured_hash{};
    Nonce nonce{};
};

enum class PortKind { link, access };

struct PortBinding {
    PortId port;
    PortKind kind;
    std::string peer; // neighbor NodeId for links, UE id for access ports
    SimTime latency_ms{1};
};

struct Node {
    NodeId id;
    std::string name;
    NodeKind kind{NodeKind::core};
    std::optional<Ipv4> ip;
    std::optional<Mac> mac;
    std::string service; // service offered by a host node
    std::string software;
    bool tampered{false};
    Digest expected_hash{};
    std::vector<PortBinding> ports;
    FlowTable table;

    const PortBinding *port(PortId p) const;
};

struct Slice {
    SliceId vlan;
    std::string name;
    std::vector<NodeId> hosts;
};

struct UserEquipment {
    std::string id;
    Ipv4 ip;
    Mac mac;
    NodeId edge;
    PortId port{0};
};

/// Header-only notification sent to the controller on a table miss.
struct PuntEvent {
    NodeId node;
    PortId in_port{0};
    PacketHeader header;
    SimTime time{0};
};

struct TraceEvent {
    enum class Kind { ingress, function, lookup, link, punt, deliver, drop };
    Kind kind;
    NodeId node;
    SimTime time{0};
    std::string detail;  // function name, drop reason, delivery endpoint
    std::string rule_id; // rule chosen at a lookup
    std::string peer;    // link peer
    std::optional<SliceId> slice;
    Bytes payload;       // bytes carried on a link
};

const char *to_string(TraceEvent::Kind k);

struct Outcome {
    enum class Kind { delivered, dropped, punted } kind{Kind::dropped};
    NodeId node;           // node where the outcome happened
    std::string endpoint;  // delivered-to host or UE
    std::string reason;
    std::optional<SliceId> slice;
    SimTime time{0};
};

struct ForwardingTrace {
    std::vector<TraceEvent> events;
    Outcome outcome;
    std::optional<PuntEvent> punt;
    bool ingress_checked{false};
    Bytes delivered_payload;
};

struct HookResult {
    bool pass{true};
    std::string reason;
    SimTime cost_ms{0};
};

/// Inline security functions attached to the datapath. Called for packets
/// entering through an access port and for packets leaving towards a host
/// or UE.
class DatapathHook {
public:
    virtual ~DatapathHook() = default;
    virtual HookResult on_access_ingress(const NodeId &node, Packet &packet, ForwardingTrace &trace) = 0;
    virtual HookResult on_access_egress(const NodeId &node, Packet &packet, ForwardingTrace &trace) = 0;
};

struct PathHop {
    NodeId node;
    PortId out_port;
};

class Fabric {
public:
    /// Builds a fabric from a topology document:
    /// nodes[] {id, kind, ip?, mac?, name?, service?, software?, tampered?},
    /// links[] {a, b, latency_ms?}, slices[] {vlan, name, hosts[]},
    /// ues[] {id, ip, mac, edge} (optional).
    static Fabric build(const nlohmann::json &doc);

    ForwardingTrace inject_packet(Packet packet, const NodeId &node, PortId ingress_port);

    /// Controller packet-out of a buffered packet at the node that punted it.
    ForwardingTrace packet_out(Packet packet, const NodeId &node, PortId in_port, bool run_ingress_hooks);

    TableDelta apply_flow_mod(const NodeId &node, const FlowMod &mod, Provenance provenance);
    SwitchStateReport report_flow_rules(const NodeId &node, SimTime now = 0) const;
    AttestationReport measure_attestation(const NodeId &node, const Nonce &nonce) const;

    const Digest &expected_hash(const NodeId &node) const { return require(node).expected_hash; }
    void set_tampered(const NodeId &node, bool tampered);

    bool has_node(const NodeId &id) const { return nodes_.count(id) != 0; }
    const Node &node(const NodeId &id) const { return require(id); }
    const std::map<NodeId, Node> &nodes() const { return nodes_; }
    const std::vector<Slice> &slices() const { return slices_; }
    const Slice *slice(SliceId vlan) const;
    std::set<SliceId> slice_ids() const;
    std::vector<SliceId> slices_of_host(const NodeId &host) const;
    std::optional<NodeId> host_by_ip(const Ipv4 &ip) const;

    PortId attach_ue(const UserEquipment &ue);
    void detach_ue(const std::string &ue_id);
    const UserEquipment *ue(const std::string &ue_id) const;
    const UserEquipment *ue_by_mac(const Mac &mac) const;
    const std::map<std::string, UserEquipment> &ues() const { return ues_; }

    /// Lowest-latency path from `from` to `to`, ties broken by node id.
    /// Each hop names the port leaving that node; the last hop is the node
    /// adjacent to `to`. Empty when unreachable.
    std::vector<PathHop> shortest_path(const NodeId &from, const NodeId &to) const;
    std::optional<PortId> port_towards(const NodeId &from, const std::string &peer) const;

    void set_hook(DatapathHook *hook) { hook_ = hook; }

    static inline const std::string kDefaultPuntRule = "default-punt";
    static constexpr int kMaxHops = 64;

private:
    Node &require(const NodeId &id);
    const Node &require(const NodeId &id) const;
    ForwardingTrace walk(Packet packet, const NodeId &start, PortId in_port, bool run_ingress_hooks,
                         bool from_host);
    PortId next_port(const Node &n) const;

    std::map<NodeId, Node> nodes_;
    std::vector<Slice> slices_;
    std::map<std::string, UserEquipment> ues_;
    DatapathHook *hook_{nullptr};
};

/// canonical descriptor hashed for attestation
std::string software_descriptor(const Node &n);

nlohmann::json to_json(const FlowKey &k);
nlohmann::json to_json(const Action &a);
nlohmann::json to_json(const FlowRule &r, bool with_provenance);
FlowRule rule_from_json(const nlohmann::json &j);
nlohmann::json to_json(const Outcome &o);
const char *to_string(Provenance p);

} // namespace sentinel::fabric

#endif // SENTINEL_FABRIC_HPP

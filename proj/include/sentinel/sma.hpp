// sma.hpp
//
// Security management application: profile lookup through the policy
// engine, NSF composition and deployment at edge nodes, the inline
// datapath pipeline (NSAF, device-specific, FVF, FSF), alert-driven
// reconfiguration, attestation-gated deployment, key provisioning,
// intra-operator handover and switch audits. Every action is recorded in
// the activity log.

#ifndef SENTINEL_SMA_HPP
#define SENTINEL_SMA_HPP

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sentinel/alc.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/fabric.hpp"
#include "sentinel/policy.hpp"
#include "sentinel/secfn.hpp"

namespace sentinel::sma {

/// Controller-side costs in virtual microseconds. The datapath itself runs
/// in milliseconds; a rule becomes active at the first millisecond after
/// its flow-mod arrives.
struct CostModel {
    std::int64_t controller_rtt_us{10'000}; // edge <-> controller round trip
    std::int64_t flow_processing_us{16'000}; // reactive path computation + flow-mods
    std::int64_t dispatch_us{50};            // collapsed NSSF/AMF hop
    std::int64_t attestation_us{100};        // TVF challenge at an edge, once per edge
    std::int64_t profile_extract_us{100};
    std::int64_t compose_us{60};
    std::int64_t deploy_us{50};
    std::int64_t decision_us{20}; // NSAF + FVF header checks per flow

    static CostModel zero() { return {0, 0, 0, 0, 0, 0, 0, 0}; }
    nlohmann::json to_json() const;
    static CostModel from_json(const nlohmann::json &j, CostModel base);
};

enum class FvfPlacement { edge, egress };

struct SmaConfig {
    bool security{true};
    SliceId generic_slice{kMaxVlan};
    std::uint32_t generic_rate_cap{20}; // packets per FVF window for unregistered devices
    SimTime fvf_window_ms{1000};
    std::uint32_t fvf_threshold{100};
    FvfPlacement fvf_placement{FvfPlacement::edge};
    bool blacklist_feedback{true};
    /// delay between an alert being raised and the SMA reconfiguring;
    /// nullopt = one controller round trip
    std::optional<SimTime> alert_latency_ms;
    SimTime audit_period_ms{1000}; // 0 disables periodic audits
    int flow_priority{100};
    std::uint64_t seed{1};
    CostModel costs;

    /// keys: security, generic_slice, generic_rate_cap, fvf_window_ms,
    /// fvf_threshold, fvf_placement, blacklist_feedback, alert_latency_ms,
    /// audit_period_ms, costs{...}
    static SmaConfig from_json(const nlohmann::json &j, SmaConfig base);
    static SmaConfig from_json(const nlohmann::json &j) { return from_json(j, SmaConfig{}); }
    nlohmann::json to_json() const;
};

struct NsfDeployment {
    NodeId node;
    secfn::NsafState nsaf;
    secfn::FvfState fvf;
    std::optional<std::map<std::string, std::string>> fsf; // flow -> key_id; present iff confidentiality needed
    std::map<std::string, secfn::DevicePolicy> device_policies;
    std::map<std::string, secfn::FlowCounters> generic_counters;
    SimTime deployed_at{0};
    std::set<std::string> covered_users;

    nlohmann::json to_json() const;
};

/// NSF for `node` from a profile; NoProfile yields an empty allowed map
NsfDeployment compose_nsf(const std::optional<policy::SecurityProfile> &profile, const NodeId &node,
                          const std::vector<secfn::Signature> &signatures, const SmaConfig &cfg, SimTime now);

/// folds a further profile into an existing deployment
void merge_profile(NsfDeployment &dep, const policy::SecurityProfile &profile);

struct FlowRef {
    Ipv4 src_ip;
    Ipv4 dst_ip;
    auto operator<=>(const FlowRef &) const = default;
    std::string str() const { return src_ip.str() + ">" + dst_ip.str(); }
};

struct FlowDecision {
    enum class Kind { installed, generic, denied, routing_error } kind{Kind::denied};
    std::string reason;
    FlowRef flow;
    std::string device_id;
    NodeId edge;
    SliceId slice{0};
    bool profile_extracted{false};
    bool nsf_deployed{false};
    SimTime punt_time{0};       // ms
    SimTime active_at{0};       // ms at which rules are usable
    double setup_ms{0};         // punt to last rule installed
    std::size_t rules_installed{0};
};

const char *to_string(FlowDecision::Kind k);
nlohmann::json to_json(const FlowDecision &d);

struct PacketResult {
    fabric::ForwardingTrace trace; // final trace (after packet-out when punted)
    std::optional<FlowDecision> decision;
    NodeId entry;
    bool punted{false};

    bool delivered() const { return trace.outcome.kind == fabric::Outcome::Kind::delivered; }
    bool dropped_at_entry() const {
        return trace.outcome.kind != fabric::Outcome::Kind::delivered && trace.outcome.node == entry;
    }
};

struct ReconfigAction {
    enum class Kind { blacklisted, noop, admin_only } kind{Kind::noop};
    NodeId node;
    std::string device_id;
    std::size_t rules_replaced{0};
};

const char *to_string(ReconfigAction::Kind k);

struct DeployResult {
    NodeId host;
    std::string service;
    secfn::TrustVerdict verdict{secfn::TrustVerdict::compromised};
    bool deployed{false};
};

struct HandoverResult {
    std::string device_id;
    NodeId from;
    NodeId to;
    std::set<policy::SlicePair> authorizations;
    bool blacklisted{false};
    std::size_t flows_reanchored{0};
    std::size_t profile_extractions{0};
};

struct AuditRecord {
    secfn::AuditResult result;
    SimTime time{0};
    bool periodic{false};
    bool restored{false};
    std::string diff; // side-by-side rendering when not clean
};

using AttestationInterceptor = std::function<fabric::AttestationReport(const fabric::AttestationReport &)>;

class Sma : public fabric::DatapathHook {
public:
    Sma(fabric::Fabric &fabric, policy::PolicyRepository repo, std::vector<secfn::Signature> signatures,
        SmaConfig cfg = {});
    ~Sma() override;
    Sma(const Sma &) = delete;
    Sma &operator=(const Sma &) = delete;

    /// Sends a packet from a UE into its edge. Punts are handled inline:
    /// the flow is decided, rules installed, and the buffered packet is
    /// released at the edge once the rules are active.
    PacketResult send_from_ue(fabric::Packet packet, const std::string &ue_id);
    /// same for a packet leaving a service host
    PacketResult send_from_host(fabric::Packet packet, const NodeId &host);

    FlowDecision handle_new_flow(const fabric::PuntEvent &punt);

    /// queued alerts take effect once the clock passes their activation time
    void raise_alert(secfn::Alert alert);
    ReconfigAction handle_alert(const secfn::Alert &alert);

    /// applies due alerts and periodic audits up to `t`
    void advance_to(SimTime t);

    DeployResult deploy_service_gated(const NodeId &host, const std::string &service);
    HandoverResult handover(const std::string &device_id, const NodeId &from_edge, const NodeId &to_edge);
    /// returns the key id; throws Error(Errc::precondition) when the flow does
    /// not need confidentiality or an endpoint is not trusted
    std::string provision_flow_security(const FlowRef &flow, const std::pair<NodeId, NodeId> &endpoints);
    /// Audits one switch against the log; restores it when not clean.
    const AuditRecord &audit_now(const NodeId &node);
    /// audits every switch once
    std::vector<AuditRecord> audit_all(bool periodic = false);

    /// out-of-band registration of a device
    void register_device(policy::PolicyRule rule);

    // datapath hooks
    fabric::HookResult on_access_ingress(const NodeId &node, fabric::Packet &packet,
                                         fabric::ForwardingTrace &trace) override;
    fabric::HookResult on_access_egress(const NodeId &node, fabric::Packet &packet,
                                        fabric::ForwardingTrace &trace) override;

    void set_attestation_interceptor(AttestationInterceptor f) { interceptor_ = std::move(f); }
    /// JSON-lines stream for administrator alerts and audit diffs
    void set_event_stream(std::ostream *os) { events_ = os; }
    void set_flow_model(std::shared_ptr<const secfn::FlowScorer> model) { model_ = std::move(model); }

    SimTime now() const { return now_; }
    const SmaConfig &config() const { return cfg_; }
    const alc::ActivityLog &log() const { return log_; }
    alc::ActivityLog &mutable_log() { return log_; }
    const std::map<NodeId, NsfDeployment> &deployments() const { return deployments_; }
    const NsfDeployment *deployment(const NodeId &node) const;
    const std::vector<secfn::Alert> &alerts() const { return alerts_; }
    const std::vector<secfn::Alert> &admin_alerts() const { return admin_alerts_; }
    const std::vector<AuditRecord> &audits() const { return audits_; }
    const std::set<std::pair<NodeId, std::string>> &deployed_services() const { return services_; }
    const std::vector<FlowDecision> &decisions() const { return decisions_; }
    const fabric::Fabric &fabric() const { return fabric_; }
    const policy::PolicyRepository &repository() const { return repo_; }
    std::optional<SimTime> blacklisted_at(const std::string &device_id) const;
    std::optional<std::string> key_for(const FlowRef &flow) const;

private:
    struct InstalledFlow {
        FlowRef flow;
        std::string device_id;
        NodeId edge;
        NodeId host;
        std::string ue;
        SliceId slice{0};
        std::vector<std::pair<NodeId, std::string>> forward;
        std::vector<std::pair<NodeId, std::string>> reverse;
    };
    struct SecuredFlow {
        secfn::FlowCipher cipher;
        NodeId ingress;
        NodeId egress;
    };
    struct PendingAlert {
        SimTime due;
        secfn::Alert alert;
    };

    PacketResult deliver(fabric::Packet packet, const NodeId &node, PortId port, bool from_host);
    secfn::TrustVerdict attest(const NodeId &node);
    policy::SlicePair requested_pair(const NsfDeployment &dep, const std::string &device, const Ipv4 &dst) const;
    NsfDeployment &ensure_deployment(const NodeId &node);
    bool install_path(InstalledFlow &f, bool drop_forward);
    void remove_rules(std::vector<std::pair<NodeId, std::string>> &rules);
    void install_rule(const NodeId &node, fabric::FlowRule rule);
    void record_alert(const secfn::Alert &alert);
    void admin_alert(secfn::Alert alert);
    void emit(const nlohmann::json &event);
    const AuditRecord &audit(const NodeId &node, bool periodic);
    void trace_fn(fabric::ForwardingTrace &trace, const NodeId &node, const fabric::Packet &p, std::string detail);

    fabric::Fabric &fabric_;
    policy::PolicyRepository repo_;
    std::vector<secfn::Signature> signatures_;
    SmaConfig cfg_;
    alc::ActivityLog log_;
    crypto::HashDrbg nonce_drbg_;
    secfn::KeyGenerator kgf_;
    std::shared_ptr<const secfn::FlowScorer> model_;
    AttestationInterceptor interceptor_;
    std::ostream *events_{nullptr};

    std::map<NodeId, NsfDeployment> deployments_;
    std::map<NodeId, secfn::FvfState> relocated_fvf_;
    std::map<NodeId, secfn::TrustVerdict> edge_trust_;
    std::map<FlowRef, InstalledFlow> flows_;
    std::map<FlowRef, SecuredFlow> secured_;
    std::map<std::string, SimTime> blacklisted_at_;
    std::vector<PendingAlert> pending_;
    std::vector<secfn::Alert> alerts_;
    std::vector<secfn::Alert> admin_alerts_;
    std::vector<AuditRecord> audits_;
    std::vector<FlowDecision> decisions_;
    std::set<std::pair<NodeId, std::string>> services_;

    SimTime now_{0};
    std::int64_t controller_free_us_{0};
    SimTime next_audit_ms_{0};
    bool ingress_evaluated_{false};
};

} // namespace sentinel::sma

#endif // SENTINEL_SMA_HPP

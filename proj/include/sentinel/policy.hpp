// policy.hpp
//
// Policy repository and engine: per-device slice/service authorizations
// loaded from the JSON policy repository, per-user profile extraction and
// flow-to-policy matching.

#ifndef SENTINEL_POLICY_HPP
#define SENTINEL_POLICY_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentinel/common.hpp"

namespace sentinel::policy {

enum class SecurityReq { confidentiality, integrity, authentication, accountability };

const char *to_string(SecurityReq r);
SecurityReq parse_security_req(const std::string &s);

using SecurityReqs = std::set<SecurityReq>;

struct UserInfo {
    std::string user_id;
    std::string name;
    std::string role;
    std::string organization;
};

struct PolicyAction {
    SliceId slice_id{0};
    std::string service;
    SecurityReqs security_reqs;
    std::vector<Ipv4> whitelist;
    std::vector<Ipv4> blacklist;
};

/// One policy rule: <RequestID; DeviceID; User; {Services}; {Actions}>
struct PolicyRule {
    std::string policy_id;
    std::optional<std::string> request_id;
    std::optional<std::string> flow_id;
    std::string device_id; // normalized MAC, authoritative device identity
    Ipv4 host_ip;
    Mac host_mac;
    Ipv4 dest_ip;
    std::optional<Mac> dst_mac;
    std::string device_type;
    std::string contract_id;
    UserInfo user;
    std::vector<PolicyAction> actions;

    std::set<std::string> services() const;
};

struct SlicePair {
    SliceId slice{0};
    std::string service;
    auto operator<=>(const SlicePair &) const = default;
};

struct ContractDevice {
    std::string device_id;
    std::string device_type;
    Ipv4 ip;
    std::set<SlicePair> allowed;
};

struct Contract {
    std::string contract_id;
    std::string role;
    std::vector<ContractDevice> devices;
    std::map<std::string, SecurityReqs> service_reqs;
};

struct SecurityProfile {
    std::string user_id;
    std::vector<Contract> contracts;

    /// union of a device's allowed pairs over all contracts
    std::set<SlicePair> allowed_pairs(const std::string &device_id) const;
    std::set<std::string> devices() const;
    SecurityReqs reqs_for(const std::string &service) const;
    bool requires_confidentiality() const;
};

struct FlowQuery {
    Ipv4 src_ip;
    std::optional<Mac> src_mac;
    Ipv4 dst_ip;
};

struct MatchResult {
    enum class Kind { authorized, unauthorized, unknown } kind{Kind::unknown};
    SliceId slice{0};
    std::string service;
    SecurityReqs security_reqs;
    std::string device_id;
    std::string user_id;
    std::string policy_id;
};

const char *to_string(MatchResult::Kind k);

class PolicyRepository {
public:
    /// Loads the policy array. When `known_slices` is given every slice
    /// reference must name one of them.
    static PolicyRepository load(const nlohmann::json &doc,
                                 const std::optional<std::set<SliceId>> &known_slices = std::nullopt);

    std::optional<SecurityProfile> extract_profile(const std::string &user_id) const;
    MatchResult match(const FlowQuery &q) const;

    /// device lookup by MAC first, falling back to IP
    std::optional<std::string> device_for(const std::optional<Mac> &mac, const Ipv4 &ip) const;
    std::optional<std::string> user_of_device(const std::string &device_id) const;
    std::vector<const PolicyRule *> rules_for_device(const std::string &device_id) const;

    /// out-of-band registration; throws on duplicate policy id
    void add_rule(PolicyRule rule);

    const std::vector<PolicyRule> &rules() const { return rules_; }
    bool empty() const { return rules_.empty(); }

private:
    void index(std::size_t i);

    std::vector<PolicyRule> rules_;
    std::map<std::string, std::vector<std::size_t>> by_device_;
    std::map<Ipv4, std::string> device_by_ip_;
    std::map<std::string, std::vector<std::size_t>> by_user_;
};

PolicyRule rule_from_json(const nlohmann::json &j, const std::optional<std::set<SliceId>> &known_slices);
nlohmann::json to_json(const SecurityProfile &p);

/// "VLAN200", "200" or 200
SliceId parse_slice_ref(const nlohmann::json &j);

} // namespace sentinel::policy

#endif // SENTINEL_POLICY_HPP

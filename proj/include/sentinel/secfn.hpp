// secfn.hpp
//
// Security functions held in the function repository: slice access (NSAF),
// flow validation (FVF), trust validation (TVF), infrastructure monitoring
// (IMF), key generation (KGF), flow security (FSF) and the device-specific
// function. Each is a plain state value plus free functions over it.

#ifndef SENTINEL_SECFN_HPP
#define SENTINEL_SECFN_HPP

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sentinel/common.hpp"
#include "sentinel/crypto.hpp"
#include "sentinel/fabric.hpp"
#include "sentinel/policy.hpp"

namespace sentinel::secfn {

struct Alert {
    std::string source; // function that raised it
    std::string device_id;
    std::string flow_id;
    std::string reason;
    std::string severity{"high"};
    SimTime time{0};

    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------- NSAF

struct NsafState {
    NodeId node;
    std::map<std::string, std::set<policy::SlicePair>> allowed;
    std::set<std::string> blacklist;
    SliceId generic_slice{kMaxVlan};
};

struct NsafVerdict {
    enum class Kind { permit, deny_unauthorized, deny_blacklisted, route_generic } kind;
    SliceId generic_slice{0};
};

const char *to_string(NsafVerdict::Kind k);

/// blacklist first, then the allowed map; devices absent from the map are
/// routed to the generic slice
NsafVerdict nsaf_check(const NsafState &state, const fabric::Packet &packet,
                       const policy::SlicePair &requested);

// ---------------------------------------------------------------- FVF

enum class SignatureScope { payload, header };

struct Signature {
    std::string id;
    Bytes pattern;
    SignatureScope scope{SignatureScope::payload};
    std::string field; // optional header field anchor: src_ip, dst_ip, src_mac, dst_mac, flow_id
};

/// signature file: [{id, pattern_hex, scope, field?}]
std::vector<Signature> load_signatures(const nlohmann::json &doc);
nlohmann::json to_json(const std::vector<Signature> &sigs);

/// `() { :;};` -- the function-definition prefix abused by Shellshock
Signature shellshock_signature(std::string id = "sig-shellshock");

bool signature_matches(const Signature &sig, const fabric::Packet &packet);

/// Linear first-match scan in the given order. `scanned` receives the
/// number of signatures examined.
std::optional<std::size_t> scan_signatures(std::span<const Signature> sigs, const fabric::Packet &packet,
                                           std::size_t *scanned = nullptr);

struct FlowFeatures {
    double packet_rate{0};    // packets per second over the window
    double byte_rate{0};      // payload bytes per second over the window
    double payload_entropy{0};
    double duration_s{0};
    double mean_payload{0};
};

/// Trained classifier consulted by the FVF anomaly stage.
class FlowScorer {
public:
    virtual ~FlowScorer() = default;
    virtual double attack_probability(const FlowFeatures &f) const = 0;
};

struct FlowCounters {
    std::deque<std::pair<SimTime, std::size_t>> window; // (time, payload bytes)
    std::size_t window_bytes{0};
    SimTime first_seen{0};
    std::uint64_t total_packets{0};
};

struct FvfState {
    std::vector<Signature> signatures; // kept sorted by id
    SimTime window_ms{1000};
    std::uint32_t threshold{100};
    std::shared_ptr<const FlowScorer> model;
    double model_threshold{0.5};
    std::map<std::string, FlowCounters> counters;
    std::set<std::string> alerted;
};

/// validates ids are unique and the threshold positive, sorts by id
FvfState make_fvf(std::vector<Signature> signatures, SimTime window_ms = 1000, std::uint32_t threshold = 100);

struct FvfVerdict {
    enum class Kind { forward, drop_signature, drop_anomaly } kind{Kind::forward};
    std::string signature_id;
    double score{0};
    std::size_t signatures_scanned{0};
    std::optional<Alert> alert;
};

const char *to_string(FvfVerdict::Kind k);

/// Signature scan first, then the per-device sliding-window rate check and
/// the optional model. One alert per device; later drops stay silent.
FvfVerdict fvf_validate(FvfState &state, const fabric::Packet &packet);

double shannon_entropy(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------- TVF

enum class TrustVerdict { trusted, compromised, stale_nonce };

const char *to_string(TrustVerdict v);

/// nonce freshness is checked before the measurement
TrustVerdict tvf_validate(const Digest &expected_hash, const fabric::AttestationReport &report, const Nonce &nonce);

// ---------------------------------------------------------------- IMF

struct RulePair {
    fabric::FlowRule trusted;
    fabric::FlowRule observed;
};

struct AuditResult {
    NodeId node;
    std::vector<fabric::FlowRule> extra_rules;   // observed only
    std::vector<fabric::FlowRule> missing_rules; // trusted only
    std::vector<RulePair> modified_rules;        // same id, different content
    bool clean{true};

    nlohmann::json to_json() const;
    static AuditResult from_json(const nlohmann::json &j);
};

AuditResult imf_audit(const fabric::TrustedReport &trusted, const fabric::SwitchStateReport &observed);

/// two-column rendering: switch report on the left, trusted report on the right
std::string render_side_by_side(const fabric::TrustedReport &trusted, const fabric::SwitchStateReport &observed);

// ---------------------------------------------------------------- KGF

struct SymmetricKey {
    std::string key_id;
    crypto::AesKey bytes{};
    SimTime created_at{0};
    std::pair<NodeId, NodeId> endpoints;
};

class KeyGenerator {
public:
    explicit KeyGenerator(std::uint64_t seed) : drbg_{seed} {}
    SymmetricKey generate(const std::pair<NodeId, NodeId> &endpoints, SimTime now);

private:
    crypto::HashDrbg drbg_;
    std::uint64_t issued_{0};
};

inline SymmetricKey kgf_generate(KeyGenerator &kgf, const std::pair<NodeId, NodeId> &endpoints, SimTime now = 0) {
    return kgf.generate(endpoints, now);
}

// ---------------------------------------------------------------- FSF

struct CipherEnvelope {
    std::string key_id;
    crypto::GcmNonce nonce{};
    Bytes ciphertext;
    crypto::GcmTag tag{};

    /// "FSF1" | key_id length (1 byte) | key_id | nonce | tag | ciphertext
    Bytes serialize() const;
    /// throws Error(Errc::authentication) on malformed input
    static CipherEnvelope parse(std::span<const std::uint8_t> bytes);
};

/// Per-key encryption context; issues a distinct 96-bit nonce per packet.
class FlowCipher {
public:
    explicit FlowCipher(SymmetricKey key);
    CipherEnvelope encrypt(std::span<const std::uint8_t> payload);
    Bytes decrypt(const CipherEnvelope &env) const;
    const SymmetricKey &key() const { return key_; }

private:
    SymmetricKey key_;
    std::array<std::uint8_t, 4> salt_{};
    std::uint64_t counter_{0};
};

inline CipherEnvelope fsf_encrypt(FlowCipher &cipher, std::span<const std::uint8_t> payload) {
    return cipher.encrypt(payload);
}

/// throws Error(Errc::authentication) for a wrong key or a corrupted envelope
Bytes fsf_decrypt(const SymmetricKey &key, const CipherEnvelope &env);

// ---------------------------------------------------------------- device specific

struct DevicePolicy {
    std::string device_id;
    Mac fingerprint_mac;
    std::optional<Ipv4> fingerprint_ip;
    std::set<Ipv4> whitelist;
    std::set<Ipv4> blacklist;
};

struct DeviceVerdict {
    enum class Kind { permit, deny_blacklisted, deny_spoof } kind{Kind::permit};
};

const char *to_string(DeviceVerdict::Kind k);

/// blacklist > whitelist > fingerprint mismatch > permit
DeviceVerdict device_specific_check(const DevicePolicy &policy, const fabric::Packet &packet);

} // namespace sentinel::secfn

#endif // SENTINEL_SECFN_HPP

// alc.hpp
//
// Activity log: a SHA-256 hash chain over every action the security
// management application takes. The expected state of any switch is
// rebuilt by folding the rule events recorded for it.

#ifndef SENTINEL_ALC_HPP
#define SENTINEL_ALC_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sentinel/common.hpp"
#include "sentinel/fabric.hpp"

namespace sentinel::alc {

struct Entry {
    std::uint64_t seq{0};
    std::string event; // canonical JSON text of the event record
    Digest prev_hash{};
    Digest entry_hash{};

    nlohmann::json event_json() const { return nlohmann::json::parse(event); }
    std::string type() const;
};

/// entry_hash = SHA-256(seq as 8 big-endian bytes || event || prev_hash)
Digest entry_digest(std::uint64_t seq, std::string_view event, const Digest &prev);

class ActivityLog {
public:
    const Entry &append(const nlohmann::json &event);

    /// recomputes every link of the chain
    bool verify() const;

    /// Expected rule table of `node`; throws Error(Errc::integrity) when the
    /// chain does not verify.
    fabric::TrustedReport expected_switch_state(const NodeId &node, SimTime now = 0) const;

    const std::vector<Entry> &entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t count(std::string_view type) const;
    std::size_t count_since(std::string_view type, std::size_t first_index) const;

    /// direct storage access, used to model tampering with the log at rest
    std::vector<Entry> &raw_entries() { return entries_; }

    void write_jsonl(std::ostream &os) const;
    static ActivityLog read_jsonl(std::istream &is);

private:
    std::vector<Entry> entries_;
};

namespace events {
nlohmann::json rule_installed(const NodeId &node, const fabric::FlowRule &rule);
nlohmann::json rule_deleted(const NodeId &node, const std::string &rule_id);
nlohmann::json profile_extracted(const std::string &user_id, const NodeId &node);
nlohmann::json nsf_deployed(const NodeId &node, const std::vector<std::string> &users, bool fsf_slot);
nlohmann::json make(std::string_view type, nlohmann::json fields);
} // namespace events

} // namespace sentinel::alc

#endif // SENTINEL_ALC_HPP

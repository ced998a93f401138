#include "sentinel/alc.hpp"

#include <istream>
#include <ostream>

#include "sentinel/crypto.hpp"

namespace sentinel::alc {

using nlohmann::json;

std::string Entry::type() const { return event_json().value("type", ""); }

Digest entry_digest(std::uint64_t seq, std::string_view event, const Digest &prev) {
    std::array<std::uint8_t, 8> s{};
    for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(seq >> (8 * (7 - i)));
    return crypto::Sha256{}.update(s).update(event).update(prev).finish();
}

const Entry &ActivityLog::append(const json &event) {
    Entry e;
    e.seq = entries_.empty() ? 1 : entries_.back().seq + 1;
    e.event = event.dump();
    e.prev_hash = entries_.empty() ? Digest{} : entries_.back().entry_hash;
    e.entry_hash = entry_digest(e.seq, e.event, e.prev_hash);
    entries_.push_back(std::move(e));
    return entries_.back();
}

bool ActivityLog::verify() const {
    Digest prev{};
    std::uint64_t seq = 0;
    for (const auto &e : entries_) {
        if (e.seq != seq + 1) return false;
        if (e.prev_hash != prev) return false;
        if (entry_digest(e.seq, e.event, e.prev_hash) != e.entry_hash) return false;
        prev = e.entry_hash;
        seq = e.seq;
    }
    return true;
}

fabric::TrustedReport ActivityLog::expected_switch_state(const NodeId &node, SimTime now) const {
    if (!verify()) throw Error{Errc::integrity, "activity log hash chain is broken"};
    fabric::FlowTable table;
    for (const auto &e : entries_) {
        auto ev = e.event_json();
        if (ev.value("node", "") != node) continue;
        auto type = ev.value("type", "");
        if (type == "RuleInstalled") {
            table.apply({fabric::FlowMod::Op::add, fabric::rule_from_json(ev.at("rule"))},
                        fabric::Provenance::controller);
        } else if (type == "RuleDeleted") {
            fabric::FlowRule r;
            r.rule_id = ev.at("rule_id").get<std::string>();
            table.apply({fabric::FlowMod::Op::remove, r}, fabric::Provenance::controller);
        }
    }
    return fabric::TrustedReport{node, table.rules(), now};
}

std::size_t ActivityLog::count(std::string_view type) const { return count_since(type, 0); }

std::size_t ActivityLog::count_since(std::string_view type, std::size_t first_index) const {
    std::size_t n = 0;
    for (std::size_t i = first_index; i < entries_.size(); ++i) {
        if (entries_[i].type() == type) ++n;
    }
    return n;
}

void ActivityLog::write_jsonl(std::ostream &os) const {
    for (const auto &e : entries_) {
        json line{{"seq", e.seq}, {"event", json::parse(e.event)}, {"prev_hash", to_hex(e.prev_hash)},
                  {"entry_hash", to_hex(e.entry_hash)}};
        os << line.dump() << '\n';
    }
}

ActivityLog ActivityLog::read_jsonl(std::istream &is) {
    ActivityLog log;
    std::string line;
    auto digest = [](const std::string &hex) {
        auto b = from_hex(hex);
        if (b.size() != 32) throw Error{Errc::schema, "digest must be 32 bytes"};
        Digest d{};
        std::copy(b.begin(), b.end(), d.begin());
        return d;
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            Entry e;
            e.seq = j.at("seq").get<std::uint64_t>();
            e.event = j.at("event").dump();
            e.prev_hash = digest(j.at("prev_hash").get<std::string>());
            e.entry_hash = digest(j.at("entry_hash").get<std::string>());
            log.entries_.push_back(std::move(e));
        } catch (const json::exception &ex) {
            throw Error{Errc::schema, std::string{"activity log line: "} + ex.what()};
        }
    }
    return log;
}

namespace events {

json make(std::string_view type, json fields) {
    fields["type"] = std::string{type};
    return fields;
}

json rule_installed(const NodeId &node, const fabric::FlowRule &rule) {
    return make("RuleInstalled", {{"node", node}, {"rule", fabric::to_json(rule, false)}});
}

json rule_deleted(const NodeId &node, const std::string &rule_id) {
    return make("RuleDeleted", {{"node", node}, {"rule_id", rule_id}});
}

json profile_extracted(const std::string &user_id, const NodeId &node) {
    return make("ProfileExtracted", {{"user_id", user_id}, {"node", node}});
}

json nsf_deployed(const NodeId &node, const std::vector<std::string> &users, bool fsf_slot) {
    return make("NsfDeployed", {{"node", node}, {"users", users}, {"fsf_slot", fsf_slot}});
}

} // namespace events
} // namespace sentinel::alc

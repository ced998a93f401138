#include <algorithm>
#include <iomanip>
#include <sstream>

#include "sentinel/secfn.hpp"

namespace sentinel::secfn {

using nlohmann::json;

const char *to_string(TrustVerdict v) {
    switch (v) {
    case TrustVerdict::trusted: return "Trusted";
    case TrustVerdict::compromised: return "Compromised";
    case TrustVerdict::stale_nonce: return "StaleNonce";
    }
    return "?";
}

TrustVerdict tvf_validate(const Digest &expected_hash, const fabric::AttestationReport &report, const Nonce &nonce) {
    if (report.nonce != nonce) return TrustVerdict::stale_nonce;
    if (report.measured_hash != expected_hash) return TrustVerdict::compromised;
    return TrustVerdict::trusted;
}

AuditResult imf_audit(const fabric::TrustedReport &trusted, const fabric::SwitchStateReport &observed) {
    if (trusted.node_id != observed.node_id) {
        throw Error{Errc::node_mismatch, "trusted report for '" + trusted.node_id + "' compared with report from '" +
                                             observed.node_id + "'"};
    }
    AuditResult r;
    r.node = trusted.node_id;
    std::map<std::string, const fabric::FlowRule *> expected;
    for (const auto &rule : trusted.rules) expected[rule.rule_id] = &rule;
    std::set<std::string> seen;
    for (const auto &rule : observed.rules) {
        seen.insert(rule.rule_id);
        auto it = expected.find(rule.rule_id);
        if (it == expected.end()) {
            r.extra_rules.push_back(rule);
        } else if (!it->second->same_content(rule)) {
            r.modified_rules.push_back({*it->second, rule});
        }
    }
    for (const auto &rule : trusted.rules) {
        if (!seen.count(rule.rule_id)) r.missing_rules.push_back(rule);
    }
    r.clean = r.extra_rules.empty() && r.missing_rules.empty() && r.modified_rules.empty();
    return r;
}

json AuditResult::to_json() const {
    json extra = json::array(), missing = json::array(), modified = json::array();
    for (const auto &x : extra_rules) extra.push_back(fabric::to_json(x, false));
    for (const auto &x : missing_rules) missing.push_back(fabric::to_json(x, false));
    for (const auto &p : modified_rules) {
        modified.push_back({{"trusted", fabric::to_json(p.trusted, false)}, {"observed", fabric::to_json(p.observed, false)}});
    }
    return {{"node", node}, {"clean", clean}, {"extra_rules", extra}, {"missing_rules", missing}, {"modified_rules", modified}};
}

AuditResult AuditResult::from_json(const json &j) {
    AuditResult r;
    r.node = j.at("node").get<std::string>();
    r.clean = j.at("clean").get<bool>();
    for (const auto &x : j.at("extra_rules")) r.extra_rules.push_back(fabric::rule_from_json(x));
    for (const auto &x : j.at("missing_rules")) r.missing_rules.push_back(fabric::rule_from_json(x));
    for (const auto &x : j.at("modified_rules")) {
        r.modified_rules.push_back({fabric::rule_from_json(x.at("trusted")), fabric::rule_from_json(x.at("observed"))});
    }
    return r;
}

namespace {

std::string describe(const fabric::FlowRule &r) {
    std::ostringstream os;
    os << r.rule_id << " p=" << r.priority << ' ' << fabric::to_json(r.match).dump() << " -> "
       << fabric::to_json(r.action).dump();
    return os.str();
}

} // namespace

std::string render_side_by_side(const fabric::TrustedReport &trusted, const fabric::SwitchStateReport &observed) {
    constexpr int width = 72;
    std::map<std::string, const fabric::FlowRule *> left, right;
    for (const auto &r : observed.rules) left[r.rule_id] = &r;
    for (const auto &r : trusted.rules) right[r.rule_id] = &r;

    std::vector<const fabric::FlowRule *> order;
    for (const auto &r : observed.rules) order.push_back(&r);
    for (const auto &r : trusted.rules) {
        if (!left.count(r.rule_id)) order.push_back(&r);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const fabric::FlowRule *a, const fabric::FlowRule *b) { return fabric::canonical_before(*a, *b); });

    std::ostringstream os;
    os << std::left << std::setw(width) << ("A) switch report " + observed.node_id) << " | "
       << "B) trusted report " << trusted.node_id << '\n';
    os << std::string(width, '-') << "-+-" << std::string(width, '-') << '\n';
    for (const auto *r : order) {
        auto l = left.find(r->rule_id);
        auto rt = right.find(r->rule_id);
        char mark = ' ';
        if (rt == right.end()) {
            mark = '+';
        } else if (l == left.end()) {
            mark = '-';
        } else if (!l->second->same_content(*rt->second)) {
            mark = '~';
        }
        std::string ltext = l == left.end() ? "" : describe(*l->second);
        std::string rtext = rt == right.end() ? "" : describe(*rt->second);
        if (static_cast<int>(ltext.size()) > width) ltext = ltext.substr(0, width - 3) + "...";
        os << std::left << std::setw(width) << ltext << ' ' << mark << ' ' << rtext << '\n';
    }
    return os.str();
}

} // namespace sentinel::secfn

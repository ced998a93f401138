#include "sentinel/policy.hpp"

#include <algorithm>
#include <cctype>

namespace sentinel::policy {

using nlohmann::json;

const char *to_string(SecurityReq r) {
    switch (r) {
    case SecurityReq::confidentiality: return "confidentiality";
    case SecurityReq::integrity: return "integrity";
    case SecurityReq::authentication: return "authentication";
    case SecurityReq::accountability: return "accountability";
    }
    return "?";
}

SecurityReq parse_security_req(const std::string &s) {
    std::string l;
    for (char c : s) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (l == "confidentiality") return SecurityReq::confidentiality;
    if (l == "integrity") return SecurityReq::integrity;
    if (l == "authentication") return SecurityReq::authentication;
    if (l == "accountability") return SecurityReq::accountability;
    throw Error{Errc::schema, "unknown security requirement '" + s + "'"};
}

const char *to_string(MatchResult::Kind k) {
    switch (k) {
    case MatchResult::Kind::authorized: return "authorized";
    case MatchResult::Kind::unauthorized: return "unauthorized";
    case MatchResult::Kind::unknown: return "unknown";
    }
    return "?";
}

std::set<std::string> PolicyRule::services() const {
    std::set<std::string> out;
    for (const auto &a : actions) out.insert(a.service);
    return out;
}

SliceId parse_slice_ref(const json &j) {
    long v = 0;
    if (j.is_number_integer()) {
        v = j.get<long>();
    } else if (j.is_string()) {
        std::string s = j.get<std::string>();
        std::string digits = s;
        if (s.size() > 4 && (s.rfind("VLAN", 0) == 0 || s.rfind("vlan", 0) == 0)) digits = s.substr(4);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
            digits.size() > 6) {
            throw Error{Errc::schema, "bad slice reference '" + s + "'"};
        }
        v = std::stol(digits);
    } else {
        throw Error{Errc::schema, "slice reference must be a string or integer"};
    }
    if (!valid_vlan(v)) throw Error{Errc::vlan_range, "slice " + std::to_string(v) + " outside 1-4094"};
    return static_cast<SliceId>(v);
}

PolicyRule rule_from_json(const json &j, const std::optional<std::set<SliceId>> &known_slices) {
    if (!j.is_object()) throw Error{Errc::schema, "policy entry must be an object"};
    try {
        PolicyRule r;
        r.policy_id = j.at("id").get<std::string>();
        if (j.contains("request_id")) r.request_id = j["request_id"].get<std::string>();
        if (j.contains("flowid")) r.flow_id = j["flowid"].get<std::string>();
        r.host_ip = Ipv4::parse(j.at("hostip").get<std::string>());
        r.host_mac = Mac::parse(j.at("hostmac").get<std::string>());
        r.device_id = r.host_mac.str();
        r.dest_ip = Ipv4::parse(j.at("destip").get<std::string>());
        if (j.contains("dstmac")) r.dst_mac = Mac::parse(j["dstmac"].get<std::string>());
        r.device_type = j.value("device_type", "");
        r.contract_id = j.value("contract_id", "default");
        if (j.contains("user")) {
            const auto &u = j["user"];
            r.user.user_id = u.at("id").get<std::string>();
            r.user.name = u.value("name", "");
            r.user.role = u.value("role", "Personal-Role");
            r.user.organization = u.value("organization", "");
        } else {
            r.user.user_id = "device:" + r.device_id;
            r.user.role = "Personal-Role";
        }
        const auto &acts = j.at("actions");
        if (!acts.is_array()) throw Error{Errc::schema, "policy '" + r.policy_id + "': actions must be an array"};
        for (const auto &a : acts) {
            PolicyAction pa;
            pa.service = a.at("Service").get<std::string>();
            pa.slice_id = parse_slice_ref(a.at("Slice-id"));
            if (known_slices && !known_slices->count(pa.slice_id)) {
                throw Error{Errc::unknown_slice,
                            "policy '" + r.policy_id + "' references undeclared slice " + std::to_string(pa.slice_id)};
            }
            for (const auto &s : a.value("security", json::array())) pa.security_reqs.insert(parse_security_req(s));
            for (const auto &w : a.value("whitelist", json::array())) pa.whitelist.push_back(Ipv4::parse(w.get<std::string>()));
            for (const auto &b : a.value("blacklist", json::array())) pa.blacklist.push_back(Ipv4::parse(b.get<std::string>()));
            r.actions.push_back(std::move(pa));
        }
        if (r.actions.empty()) throw Error{Errc::schema, "policy '" + r.policy_id + "' grants no services"};
        return r;
    } catch (const json::exception &e) {
        throw Error{Errc::schema, std::string{"policy entry: "} + e.what()};
    } catch (const Error &e) {
        if (e.code() == Errc::invalid_argument) throw Error{Errc::schema, e.what()};
        throw;
    }
}

PolicyRepository PolicyRepository::load(const json &doc, const std::optional<std::set<SliceId>> &known_slices) {
    if (!doc.is_array()) throw Error{Errc::schema, "policy document must be a JSON array"};
    PolicyRepository repo;
    for (const auto &j : doc) repo.add_rule(rule_from_json(j, known_slices));
    return repo;
}

void PolicyRepository::add_rule(PolicyRule rule) {
    for (const auto &r : rules_) {
        if (r.policy_id == rule.policy_id) {
            throw Error{Errc::duplicate_policy, "policy id '" + rule.policy_id + "' declared twice"};
        }
    }
    rules_.push_back(std::move(rule));
    index(rules_.size() - 1);
}

void PolicyRepository::index(std::size_t i) {
    const auto &r = rules_[i];
    by_device_[r.device_id].push_back(i);
    device_by_ip_[r.host_ip] = r.device_id;
    by_user_[r.user.user_id].push_back(i);
}

std::optional<std::string> PolicyRepository::device_for(const std::optional<Mac> &mac, const Ipv4 &ip) const {
    if (mac && !mac->empty()) {
        if (by_device_.count(mac->str())) return mac->str();
        return std::nullopt;
    }
    auto it = device_by_ip_.find(ip);
    if (it == device_by_ip_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> PolicyRepository::user_of_device(const std::string &device_id) const {
    auto it = by_device_.find(device_id);
    if (it == by_device_.end() || it->second.empty()) return std::nullopt;
    return rules_[it->second.front()].user.user_id;
}

std::vector<const PolicyRule *> PolicyRepository::rules_for_device(const std::string &device_id) const {
    std::vector<const PolicyRule *> out;
    auto it = by_device_.find(device_id);
    if (it == by_device_.end()) return out;
    for (auto i : it->second) out.push_back(&rules_[i]);
    return out;
}

std::optional<SecurityProfile> PolicyRepository::extract_profile(const std::string &user_id) const {
    auto it = by_user_.find(user_id);
    if (it == by_user_.end() || it->second.empty()) return std::nullopt;

    SecurityProfile p;
    p.user_id = user_id;
    std::map<std::string, Contract> contracts;
    for (auto i : it->second) {
        const auto &r = rules_[i];
        auto &c = contracts[r.contract_id];
        if (c.contract_id.empty()) {
            c.contract_id = r.contract_id;
            c.role = r.user.role;
        }
        auto dev = std::find_if(c.devices.begin(), c.devices.end(),
                                [&](const ContractDevice &d) { return d.device_id == r.device_id; });
        if (dev == c.devices.end()) {
            c.devices.push_back({r.device_id, r.device_type, r.host_ip, {}});
            dev = std::prev(c.devices.end());
        }
        for (const auto &a : r.actions) {
            dev->allowed.insert({a.slice_id, a.service});
            c.service_reqs[a.service].insert(a.security_reqs.begin(), a.security_reqs.end());
        }
    }
    for (auto &[id, c] : contracts) p.contracts.push_back(std::move(c));
    return p;
}

std::set<SlicePair> SecurityProfile::allowed_pairs(const std::string &device_id) const {
    std::set<SlicePair> out;
    for (const auto &c : contracts) {
        for (const auto &d : c.devices) {
            if (d.device_id == device_id) out.insert(d.allowed.begin(), d.allowed.end());
        }
    }
    return out;
}

std::set<std::string> SecurityProfile::devices() const {
    std::set<std::string> out;
    for (const auto &c : contracts) {
        for (const auto &d : c.devices) out.insert(d.device_id);
    }
    return out;
}

SecurityReqs SecurityProfile::reqs_for(const std::string &service) const {
    SecurityReqs out;
    for (const auto &c : contracts) {
        auto it = c.service_reqs.find(service);
        if (it != c.service_reqs.end()) out.insert(it->second.begin(), it->second.end());
    }
    return out;
}

bool SecurityProfile::requires_confidentiality() const {
    for (const auto &c : contracts) {
        for (const auto &[svc, reqs] : c.service_reqs) {
            if (reqs.count(SecurityReq::confidentiality)) return true;
        }
    }
    return false;
}

MatchResult PolicyRepository::match(const FlowQuery &q) const {
    MatchResult m;
    auto device = device_for(q.src_mac, q.src_ip);
    if (!device) return m;
    m.device_id = *device;
    m.user_id = user_of_device(*device).value_or("");
    for (const auto *r : rules_for_device(*device)) {
        if (r->dest_ip == q.dst_ip && !r->actions.empty()) {
            const auto &a = r->actions.front();
            m.kind = MatchResult::Kind::authorized;
            m.slice = a.slice_id;
            m.service = a.service;
            m.security_reqs = a.security_reqs;
            m.policy_id = r->policy_id;
            return m;
        }
    }
    m.kind = MatchResult::Kind::unauthorized;
    return m;
}

json to_json(const SecurityProfile &p) {
    json cs = json::array();
    for (const auto &c : p.contracts) {
        json devs = json::array();
        for (const auto &d : c.devices) {
            json allowed = json::array();
            for (const auto &a : d.allowed) allowed.push_back({{"slice", a.slice}, {"service", a.service}});
            devs.push_back({{"device_id", d.device_id}, {"device_type", d.device_type}, {"ip", d.ip.str()},
                            {"allowed", allowed}});
        }
        json reqs = json::object();
        for (const auto &[svc, rs] : c.service_reqs) {
            json arr = json::array();
            for (auto r : rs) arr.push_back(to_string(r));
            reqs[svc] = arr;
        }
        cs.push_back({{"contract_id", c.contract_id}, {"role", c.role}, {"devices", devs}, {"service_reqs", reqs}});
    }
    return json{{"user_id", p.user_id}, {"contracts", cs}};
}

} // namespace sentinel::policy

#include <algorithm>
#include <cmath>

#include "sentinel/secfn.hpp"

namespace sentinel::secfn {

using nlohmann::json;

const char *to_string(FvfVerdict::Kind k) {
    switch (k) {
    case FvfVerdict::Kind::forward: return "Forward";
    case FvfVerdict::Kind::drop_signature: return "DropSignature";
    case FvfVerdict::Kind::drop_anomaly: return "DropAnomaly";
    }
    return "?";
}

namespace {

const std::set<std::string> kHeaderFields{"src_ip", "dst_ip", "src_mac", "dst_mac", "flow_id"};

std::string header_field(const fabric::Packet &p, const std::string &field) {
    if (field == "src_ip") return p.src_ip.str();
    if (field == "dst_ip") return p.dst_ip.str();
    if (field == "src_mac") return p.src_mac.str();
    if (field == "dst_mac") return p.dst_mac.str();
    return p.flow_id;
}

std::string header_text(const fabric::Packet &p) {
    std::string out;
    for (const auto *f : {"src_ip", "dst_ip", "src_mac", "dst_mac", "flow_id"}) {
        out += f;
        out += '=';
        out += header_field(p, f);
        out += ';';
    }
    return out;
}

template <typename Haystack>
bool contains(const Haystack &hay, const Bytes &needle) {
    if (needle.empty()) return true;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

} // namespace

std::vector<Signature> load_signatures(const json &doc) {
    if (!doc.is_array()) throw Error{Errc::schema, "signature file must be a JSON array"};
    std::vector<Signature> out;
    try {
        for (const auto &j : doc) {
            Signature s;
            s.id = j.at("id").get<std::string>();
            s.pattern = from_hex(j.at("pattern_hex").get<std::string>());
            auto scope = j.value("scope", "payload");
            if (scope == "payload") {
                s.scope = SignatureScope::payload;
            } else if (scope == "header") {
                s.scope = SignatureScope::header;
            } else {
                throw Error{Errc::schema, "signature '" + s.id + "': unknown scope '" + scope + "'"};
            }
            s.field = j.value("field", "");
            if (!s.field.empty() && !kHeaderFields.count(s.field)) {
                throw Error{Errc::schema, "signature '" + s.id + "': unknown header field '" + s.field + "'"};
            }
            if (s.pattern.empty()) throw Error{Errc::schema, "signature '" + s.id + "' has an empty pattern"};
            out.push_back(std::move(s));
        }
    } catch (const json::exception &e) {
        throw Error{Errc::schema, std::string{"signature file: "} + e.what()};
    } catch (const Error &e) {
        if (e.code() == Errc::invalid_argument) throw Error{Errc::schema, e.what()};
        throw;
    }
    return out;
}

json to_json(const std::vector<Signature> &sigs) {
    json out = json::array();
    for (const auto &s : sigs) {
        json j{{"id", s.id}, {"pattern_hex", to_hex(s.pattern)},
               {"scope", s.scope == SignatureScope::payload ? "payload" : "header"}};
        if (!s.field.empty()) j["field"] = s.field;
        out.push_back(j);
    }
    return out;
}

Signature shellshock_signature(std::string id) {
    return Signature{std::move(id), to_bytes("() { :;};"), SignatureScope::payload, {}};
}

bool signature_matches(const Signature &sig, const fabric::Packet &packet) {
    if (sig.scope == SignatureScope::payload) return contains(packet.payload, sig.pattern);
    if (!sig.field.empty()) return contains(header_field(packet, sig.field), sig.pattern);
    return contains(header_text(packet), sig.pattern);
}

std::optional<std::size_t> scan_signatures(std::span<const Signature> sigs, const fabric::Packet &packet,
                                           std::size_t *scanned) {
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        if (signature_matches(sigs[i], packet)) {
            if (scanned) *scanned = i + 1;
            return i;
        }
    }
    if (scanned) *scanned = sigs.size();
    return std::nullopt;
}

FvfState make_fvf(std::vector<Signature> signatures, SimTime window_ms, std::uint32_t threshold) {
    if (threshold == 0) throw Error{Errc::invalid_argument, "anomaly threshold must be positive"};
    if (window_ms <= 0) throw Error{Errc::invalid_argument, "anomaly window must be positive"};
    std::sort(signatures.begin(), signatures.end(), [](const Signature &a, const Signature &b) { return a.id < b.id; });
    for (std::size_t i = 1; i < signatures.size(); ++i) {
        if (signatures[i].id == signatures[i - 1].id) {
            throw Error{Errc::invalid_argument, "duplicate signature id '" + signatures[i].id + "'"};
        }
    }
    FvfState s;
    s.signatures = std::move(signatures);
    s.window_ms = window_ms;
    s.threshold = threshold;
    return s;
}

double shannon_entropy(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return 0.0;
    std::array<std::size_t, 256> hist{};
    for (auto b : bytes) ++hist[b];
    double h = 0.0;
    const double n = static_cast<double>(bytes.size());
    for (auto c : hist) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

FvfVerdict fvf_validate(FvfState &state, const fabric::Packet &packet) {
    FvfVerdict v;
    const auto device = packet.src_mac.str();
    auto raise = [&](std::string reason) {
        if (state.alerted.insert(device).second) {
            v.alert = Alert{"FVF", device, packet.flow_id, std::move(reason), "high", packet.virtual_timestamp};
        }
    };

    auto hit = scan_signatures(state.signatures, packet, &v.signatures_scanned);
    if (hit) {
        v.kind = FvfVerdict::Kind::drop_signature;
        v.signature_id = state.signatures[*hit].id;
        raise("signature:" + v.signature_id);
        return v;
    }

    auto &c = state.counters[device];
    const SimTime t = packet.virtual_timestamp;
    if (c.total_packets == 0) c.first_seen = t;
    ++c.total_packets;
    c.window.emplace_back(t, packet.payload.size());
    c.window_bytes += packet.payload.size();
    while (!c.window.empty() && c.window.front().first <= t - state.window_ms) {
        c.window_bytes -= c.window.front().second;
        c.window.pop_front();
    }

    const auto count = c.window.size();
    if (count > state.threshold) {
        v.kind = FvfVerdict::Kind::drop_anomaly;
        v.score = static_cast<double>(count) / static_cast<double>(state.threshold);
        raise("anomaly:rate");
        return v;
    }

    if (state.model) {
        const double window_s = static_cast<double>(state.window_ms) / 1000.0;
        FlowFeatures f;
        f.packet_rate = static_cast<double>(count) / window_s;
        f.byte_rate = static_cast<double>(c.window_bytes) / window_s;
        f.payload_entropy = shannon_entropy(packet.payload);
        f.duration_s = static_cast<double>(t - c.first_seen) / 1000.0;
        f.mean_payload = static_cast<double>(c.window_bytes) / static_cast<double>(count);
        double p = state.model->attack_probability(f);
        if (p > state.model_threshold) {
            v.kind = FvfVerdict::Kind::drop_anomaly;
            v.score = p;
            raise("anomaly:model");
            return v;
        }
    }
    return v;
}

} // namespace sentinel::secfn

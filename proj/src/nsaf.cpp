#include "sentinel/secfn.hpp"

namespace sentinel::secfn {

nlohmann::json Alert::to_json() const {
    return {{"source", source}, {"device_id", device_id}, {"flow_id", flow_id},
            {"reason", reason}, {"severity", severity},   {"time", time}};
}

const char *to_string(NsafVerdict::Kind k) {
    switch (k) {
    case NsafVerdict::Kind::permit: return "Permit";
    case NsafVerdict::Kind::deny_unauthorized: return "DenyUnauthorized";
    case NsafVerdict::Kind::deny_blacklisted: return "DenyBlacklisted";
    case NsafVerdict::Kind::route_generic: return "RouteGeneric";
    }
    return "?";
}

NsafVerdict nsaf_check(const NsafState &state, const fabric::Packet &packet, const policy::SlicePair &requested) {
    const auto &device = packet.src_mac.str();
    if (state.blacklist.count(device)) return {NsafVerdict::Kind::deny_blacklisted};
    auto it = state.allowed.find(device);
    if (it == state.allowed.end()) return {NsafVerdict::Kind::route_generic, state.generic_slice};
    if (it->second.count(requested)) return {NsafVerdict::Kind::permit};
    return {NsafVerdict::Kind::deny_unauthorized};
}

} // namespace sentinel::secfn

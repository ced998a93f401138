#include "sentinel/secfn.hpp"

namespace sentinel::secfn {

const char *to_string(DeviceVerdict::Kind k) {
    switch (k) {
    case DeviceVerdict::Kind::permit: return "Permit";
    case DeviceVerdict::Kind::deny_blacklisted: return "DenyBlacklisted";
    case DeviceVerdict::Kind::deny_spoof: return "DenySpoof";
    }
    return "?";
}

DeviceVerdict device_specific_check(const DevicePolicy &policy, const fabric::Packet &packet) {
    if (policy.blacklist.count(packet.dst_ip)) return {DeviceVerdict::Kind::deny_blacklisted};
    if (policy.whitelist.count(packet.dst_ip)) return {DeviceVerdict::Kind::permit};
    if (packet.src_mac != policy.fingerprint_mac) return {DeviceVerdict::Kind::deny_spoof};
    if (policy.fingerprint_ip && *policy.fingerprint_ip != packet.src_ip) return {DeviceVerdict::Kind::deny_spoof};
    return {DeviceVerdict::Kind::permit};
}

} // namespace sentinel::secfn

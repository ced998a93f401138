// common.hpp
//
// Shared vocabulary types for the slice sentinel: byte buffers, digests,
// simulated time, addresses, the error type and the seeded random source.

#ifndef SENTINEL_COMMON_HPP
#define SENTINEL_COMMON_HPP

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 16>;

/// simulated time in integer virtual milliseconds
using SimTime = std::int64_t;

using NodeId = std::string;
using PortId = int;
using SliceId = int;

constexpr SliceId kMinVlan = 1;
constexpr SliceId kMaxVlan = 4094;

inline bool valid_vlan(long v) { return v >= kMinVlan && v <= kMaxVlan; }

enum class Errc {
    config,
    duplicate_node,
    undefined_node,
    vlan_range,
    unknown_node,
    schema,
    duplicate_policy,
    unknown_slice,
    integrity,
    node_mismatch,
    invalid_argument,
    authentication,
    precondition,
    routing,
    unknown_device,
    not_found,
};

const char *errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what)
        : std::runtime_error{std::string{errc_name(code)} + ": " + what}, code_{code} {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// IPv4 address held in host byte order
class Ipv4 {
public:
    Ipv4() = default;
    explicit Ipv4(std::uint32_t v) : value_{v} {}

    static Ipv4 parse(std::string_view text);
    std::string str() const;
    std::uint32_t value() const { return value_; }

    auto operator<=>(const Ipv4 &) const = default;

private:
    std::uint32_t value_{0};
};

/// MAC address kept in normalized upper-case colon form. Listing-style
/// policies use short forms such as "00:09:00:AA", so the octet count is
/// not fixed.
class Mac {
public:
    Mac() = default;
    static Mac parse(std::string_view text);
    const std::string &str() const { return text_; }
    bool empty() const { return text_.empty(); }

    auto operator<=>(const Mac &) const = default;

private:
    std::string text_;
};

/// Seeded random source used by every generator in the project. Built on
/// std::mt19937_64 whose output sequence is fixed by the standard; the
/// helpers below avoid std distributions so results do not depend on the
/// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_{seed} {}

    std::uint64_t next() { return engine_(); }

    /// uniform integer in [lo, hi]
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// uniform double in [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    Bytes bytes(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a tag
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

} // namespace sentinel

#endif // SENTINEL_COMMON_HPP

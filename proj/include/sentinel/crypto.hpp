// crypto.hpp
//
// Thin wrappers over OpenSSL for the primitives the security functions
// need: SHA-256, AES-128-GCM and a deterministic hash-based generator.

#ifndef SENTINEL_CRYPTO_HPP
#define SENTINEL_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <span>

#include "sentinel/common.hpp"

namespace sentinel::crypto {

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view text);

/// incremental hashing for multi-part inputs
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256 &) = delete;
    Sha256 &operator=(const Sha256 &) = delete;

    Sha256 &update(std::span<const std::uint8_t> data);
    Sha256 &update(std::string_view text);
    Digest finish();

private:
    void *ctx_;
};

using AesKey = std::array<std::uint8_t, 16>;
using GcmNonce = std::array<std::uint8_t, 12>;
using GcmTag = std::array<std::uint8_t, 16>;

struct Sealed {
    Bytes ciphertext;
    GcmTag tag{};
};

Sealed aes128_gcm_seal(const AesKey &key, const GcmNonce &nonce,
                       std::span<const std::uint8_t> plaintext,
                       std::span<const std::uint8_t> aad);

/// throws Error(Errc::authentication) when the tag does not verify
Bytes aes128_gcm_open(const AesKey &key, const GcmNonce &nonce,
                      std::span<const std::uint8_t> ciphertext, const GcmTag &tag,
                      std::span<const std::uint8_t> aad);

/// Deterministic generator: block_i = SHA-256(seed-state || i). Same seed,
/// same stream.
class HashDrbg {
public:
    explicit HashDrbg(std::uint64_t seed);
    void fill(std::span<std::uint8_t> out);

private:
    Digest state_;
    std::uint64_t counter_{0};
};

} // namespace sentinel::crypto

#endif // SENTINEL_CRYPTO_HPP

#include "sentinel/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>
#include <sstream>

namespace sentinel {

const char *errc_name(Errc c) {
    switch (c) {
    case Errc::config: return "config";
    case Errc::duplicate_node: return "duplicate-node";
    case Errc::undefined_node: return "undefined-node";
    case Errc::vlan_range: return "vlan-range";
    case Errc::unknown_node: return "unknown-node";
    case Errc::schema: return "schema";
    case Errc::duplicate_policy: return "duplicate-policy";
    case Errc::unknown_slice: return "unknown-slice";
    case Errc::integrity: return "integrity";
    case Errc::node_mismatch: return "node-mismatch";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::authentication: return "authentication";
    case Errc::precondition: return "precondition";
    case Errc::routing: return "routing";
    case Errc::unknown_device: return "unknown-device";
    case Errc::not_found: return "not-found";
    }
    return "unknown";
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

namespace {
int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
} // namespace

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw Error{Errc::invalid_argument, "odd-length hex string"};
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error{Errc::invalid_argument, "bad hex digit in '" + std::string{hex} + "'"};
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

Ipv4 Ipv4::parse(std::string_view text) {
    std::uint32_t value = 0;
    int octets = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t dot = text.find('.', pos);
        if (dot == std::string_view::npos) dot = text.size();
        auto part = text.substr(pos, dot - pos);
        if (part.empty() || part.size() > 3 ||
            !std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            throw Error{Errc::invalid_argument, "bad IPv4 address '" + std::string{text} + "'"};
        }
        int octet = std::stoi(std::string{part});
        if (octet > 255) {
            throw Error{Errc::invalid_argument, "bad IPv4 address '" + std::string{text} + "'"};
        }
        value = value << 8 | static_cast<std::uint32_t>(octet);
        ++octets;
        pos = dot + 1;
    }
    if (octets != 4) {
        throw Error{Errc::invalid_argument, "bad IPv4 address '" + std::string{text} + "'"};
    }
    return Ipv4{value};
}

std::string Ipv4::str() const {
    std::ostringstream os;
    os << (value_ >> 24) << '.' << (value_ >> 16 & 0xff) << '.' << (value_ >> 8 & 0xff) << '.'
       << (value_ & 0xff);
    return os.str();
}

Mac Mac::parse(std::string_view text) {
    Mac m;
    int group = 0;
    for (char c : text) {
        if (c == ':' || c == '-') {
            if (group == 0) throw Error{Errc::invalid_argument, "bad MAC '" + std::string{text} + "'"};
            m.text_.push_back(':');
            group = 0;
            continue;
        }
        if (hex_value(c) < 0 || ++group > 2) {
            throw Error{Errc::invalid_argument, "bad MAC '" + std::string{text} + "'"};
        }
        m.text_.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (group == 0) throw Error{Errc::invalid_argument, "bad MAC '" + std::string{text} + "'"};
    return m;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error{Errc::invalid_argument, "empty range"};
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
}

Bytes Rng::bytes(std::size_t n) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; i += 8) {
        auto word = next();
        for (std::size_t j = 0; j < 8 && i + j < n; ++j) {
            out[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
        }
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    // splitmix64 finalizer over the combined words
    std::uint64_t z = base ^ (tag + 0x9e3779b97f4a7c15ULL + (base << 6) + (base >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace crypto {

namespace {
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX *c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

void check(int rc, const char *what) {
    if (rc != 1) throw std::runtime_error{std::string{"openssl: "} + what};
}
} // namespace

Sha256::Sha256() : ctx_{EVP_MD_CTX_new()} {
    check(EVP_DigestInit_ex(static_cast<EVP_MD_CTX *>(ctx_), EVP_sha256(), nullptr), "digest init");
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX *>(ctx_)); }

Sha256 &Sha256::update(std::span<const std::uint8_t> data) {
    check(EVP_DigestUpdate(static_cast<EVP_MD_CTX *>(ctx_), data.data(), data.size()), "digest update");
    return *this;
}

Sha256 &Sha256::update(std::string_view text) {
    check(EVP_DigestUpdate(static_cast<EVP_MD_CTX *>(ctx_), text.data(), text.size()), "digest update");
    return *this;
}

Digest Sha256::finish() {
    Digest d{};
    unsigned int len = 0;
    check(EVP_DigestFinal_ex(static_cast<EVP_MD_CTX *>(ctx_), d.data(), &len), "digest final");
    return d;
}

Digest sha256(std::span<const std::uint8_t> data) { return Sha256{}.update(data).finish(); }

Digest sha256(std::string_view text) { return Sha256{}.update(text).finish(); }

Sealed aes128_gcm_seal(const AesKey &key, const GcmNonce &nonce,
                       std::span<const std::uint8_t> plaintext,
                       std::span<const std::uint8_t> aad) {
    CipherCtx ctx{EVP_CIPHER_CTX_new()};
    check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr), "gcm init");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
          "gcm ivlen");
    check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()), "gcm key");
    int len = 0;
    if (!aad.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())), "gcm aad");
    }
    Sealed out;
    out.ciphertext.resize(plaintext.size());
    if (!plaintext.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), out.ciphertext.data(), &len, plaintext.data(),
                                static_cast<int>(plaintext.size())),
              "gcm update");
    }
    check(EVP_EncryptFinal_ex(ctx.get(), out.ciphertext.data() + len, &len), "gcm final");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(out.tag.size()), out.tag.data()),
          "gcm tag");
    return out;
}

Bytes aes128_gcm_open(const AesKey &key, const GcmNonce &nonce,
                      std::span<const std::uint8_t> ciphertext, const GcmTag &tag,
                      std::span<const std::uint8_t> aad) {
    CipherCtx ctx{EVP_CIPHER_CTX_new()};
    check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, nullptr, nullptr), "gcm init");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(nonce.size()), nullptr),
          "gcm ivlen");
    check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()), "gcm key");
    int len = 0;
    if (!aad.empty()) {
        check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())), "gcm aad");
    }
    Bytes plain(ciphertext.size());
    if (!ciphertext.empty()) {
        check(EVP_DecryptUpdate(ctx.get(), plain.data(), &len, ciphertext.data(),
                                static_cast<int>(ciphertext.size())),
              "gcm update");
    }
    GcmTag expected = tag;
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(expected.size()),
                              expected.data()),
          "gcm set tag");
    if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1) {
        throw Error{Errc::authentication, "envelope failed authentication"};
    }
    return plain;
}

HashDrbg::HashDrbg(std::uint64_t seed) {
    std::array<std::uint8_t, 8> s{};
    for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    state_ = Sha256{}.update("sentinel-drbg").update(s).finish();
}

void HashDrbg::fill(std::span<std::uint8_t> out) {
    std::size_t pos = 0;
    while (pos < out.size()) {
        std::array<std::uint8_t, 8> c{};
        for (int i = 0; i < 8; ++i) c[i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
        ++counter_;
        Digest block = Sha256{}.update(state_).update(c).finish();
        std::size_t n = std::min(block.size(), out.size() - pos);
        std::copy_n(block.begin(), n, out.begin() + static_cast<std::ptrdiff_t>(pos));
        pos += n;
    }
}

} // namespace crypto
} // namespace sentinel

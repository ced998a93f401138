#include <cstdio>

#include "sentinel/secfn.hpp"

namespace sentinel::secfn {

SymmetricKey KeyGenerator::generate(const std::pair<NodeId, NodeId> &endpoints, SimTime now) {
    if (endpoints.first == endpoints.second) {
        throw Error{Errc::invalid_argument, "key endpoints must be distinct (both '" + endpoints.first + "')"};
    }
    SymmetricKey k;
    drbg_.fill(k.bytes);
    char id[32];
    std::snprintf(id, sizeof id, "kgf-%06llu", static_cast<unsigned long long>(++issued_));
    k.key_id = id;
    k.created_at = now;
    k.endpoints = endpoints;
    return k;
}

Bytes CipherEnvelope::serialize() const {
    Bytes out{'F', 'S', 'F', '1'};
    out.push_back(static_cast<std::uint8_t>(key_id.size()));
    out.insert(out.end(), key_id.begin(), key_id.end());
    out.insert(out.end(), nonce.begin(), nonce.end());
    out.insert(out.end(), tag.begin(), tag.end());
    out.insert(out.end(), ciphertext.begin(), ciphertext.end());
    return out;
}

CipherEnvelope CipherEnvelope::parse(std::span<const std::uint8_t> bytes) {
    auto bad = [] { return Error{Errc::authentication, "malformed cipher envelope"}; };
    if (bytes.size() < 5 || bytes[0] != 'F' || bytes[1] != 'S' || bytes[2] != 'F' || bytes[3] != '1') throw bad();
    std::size_t id_len = bytes[4];
    std::size_t pos = 5;
    if (bytes.size() < pos + id_len + 12 + 16) throw bad();
    CipherEnvelope env;
    env.key_id.assign(bytes.begin() + 5, bytes.begin() + 5 + static_cast<std::ptrdiff_t>(id_len));
    pos += id_len;
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), 12, env.nonce.begin());
    pos += 12;
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), 16, env.tag.begin());
    pos += 16;
    env.ciphertext.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return env;
}

FlowCipher::FlowCipher(SymmetricKey key) : key_{std::move(key)} {
    auto d = crypto::sha256(key_.key_id);
    std::copy_n(d.begin(), salt_.size(), salt_.begin());
}

CipherEnvelope FlowCipher::encrypt(std::span<const std::uint8_t> payload) {
    CipherEnvelope env;
    env.key_id = key_.key_id;
    std::copy(salt_.begin(), salt_.end(), env.nonce.begin());
    std::uint64_t c = counter_++;
    for (int i = 0; i < 8; ++i) env.nonce[4 + i] = static_cast<std::uint8_t>(c >> (8 * (7 - i)));
    auto aad = to_bytes(env.key_id);
    auto sealed = crypto::aes128_gcm_seal(key_.bytes, env.nonce, payload, aad);
    env.ciphertext = std::move(sealed.ciphertext);
    env.tag = sealed.tag;
    return env;
}

Bytes FlowCipher::decrypt(const CipherEnvelope &env) const { return fsf_decrypt(key_, env); }

Bytes fsf_decrypt(const SymmetricKey &key, const CipherEnvelope &env) {
    if (env.key_id != key.key_id) {
        throw Error{Errc::authentication, "envelope key '" + env.key_id + "' does not match '" + key.key_id + "'"};
    }
    return crypto::aes128_gcm_open(key.bytes, env.nonce, env.ciphertext, env.tag, to_bytes(env.key_id));
}

} // namespace sentinel::secfn

#include <gtest/gtest.h>

#include <set>

#include "sentinel/secfn.hpp"
#include "test_support.hpp"

using namespace sentinel;
using namespace sentinel::secfn;
using sentinel::testing::packet;

// ---------------------------------------------------------------- NSAF

TEST(Nsaf, PrecedenceAndGeneric) {
    NsafState s;
    s.allowed["00:09:00:A4"] = {{400, "HomeAutomation"}};
    s.allowed["00:09:00:A3"] = {{200, "Service1"}};
    s.blacklist.insert("00:09:00:A3");
    auto printer = packet("10.0.0.4", "10.0.0.8", "00:09:00:A4");
    EXPECT_EQ(nsaf_check(s, printer, {200, "Service1"}).kind, NsafVerdict::Kind::deny_unauthorized);
    EXPECT_EQ(nsaf_check(s, printer, {400, "HomeAutomation"}).kind, NsafVerdict::Kind::permit);
    auto wearable = packet("10.0.0.3", "10.0.0.8", "00:09:00:A3");
    EXPECT_EQ(nsaf_check(s, wearable, {200, "Service1"}).kind, NsafVerdict::Kind::deny_blacklisted);

    NsafState empty;
    auto v = nsaf_check(empty, packet("10.0.0.7", "10.0.0.8", "00:09:00:A7"), {200, "Service1"});
    EXPECT_EQ(v.kind, NsafVerdict::Kind::route_generic);
    EXPECT_EQ(v.generic_slice, kMaxVlan);
}

// ---------------------------------------------------------------- FVF

TEST(Fvf, ShellshockDroppedWithId) {
    auto st = make_fvf({shellshock_signature(), {"sig-other", to_bytes("zzz"), SignatureScope::payload, {}}});
    auto p = packet("10.0.0.1", "10.0.0.12", "00:09:00:AA", 0, "User-Agent: () { :;}; /bin/eject");
    auto v = fvf_validate(st, p);
    EXPECT_EQ(v.kind, FvfVerdict::Kind::drop_signature);
    EXPECT_EQ(v.signature_id, "sig-shellshock");
    ASSERT_TRUE(v.alert.has_value());
    EXPECT_EQ(v.alert->device_id, "00:09:00:AA");
    // second hit: dropped, no second alert
    auto v2 = fvf_validate(st, p);
    EXPECT_EQ(v2.kind, FvfVerdict::Kind::drop_signature);
    EXPECT_FALSE(v2.alert.has_value());
}

TEST(Fvf, BenignForwarded) {
    auto st = make_fvf({});
    EXPECT_EQ(fvf_validate(st, packet("10.0.0.1", "10.0.0.8", "00:09:00:AA")).kind, FvfVerdict::Kind::forward);
}

TEST(Fvf, FirstMatchByIdOrder) {
    auto st = make_fvf({{"b", to_bytes("x"), SignatureScope::payload, {}}, {"a", to_bytes("x"), SignatureScope::payload, {}}});
    EXPECT_EQ(fvf_validate(st, packet("1.1.1.1", "2.2.2.2", "AA", 0, "x")).signature_id, "a");
    EXPECT_THROW(make_fvf({{"a", to_bytes("x")}, {"a", to_bytes("y")}}), Error);
    EXPECT_THROW(make_fvf({}, 1000, 0), Error);
}

TEST(Fvf, HeaderScopedSignature) {
    Signature s{"hdr", to_bytes("10.0.0.66"), SignatureScope::header, "src_ip"};
    auto st = make_fvf({s});
    EXPECT_EQ(fvf_validate(st, packet("10.0.0.66", "10.0.0.8", "AA")).kind, FvfVerdict::Kind::drop_signature);
    EXPECT_EQ(fvf_validate(st, packet("10.0.0.8", "10.0.0.66", "AB")).kind, FvfVerdict::Kind::forward);
}

// brute-force counter oracle over a random schedule
TEST(Property, AnomalyMatchesCounterOracle) {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const SimTime window = rng.uniform_int(50, 1000);
        const auto threshold = static_cast<std::uint32_t>(rng.uniform_int(1, 40));
        auto st = make_fvf({}, window, threshold);
        std::vector<SimTime> times;
        SimTime t = 0;
        std::optional<std::size_t> first_drop;
        for (int i = 0; i < 400; ++i) {
            t += rng.uniform_int(0, 20);
            times.push_back(t);
            std::size_t in_window = 0;
            for (auto u : times) in_window += (u > t - window) ? 1 : 0;
            const bool expect_drop = in_window > threshold;
            auto v = fvf_validate(st, packet("10.0.0.3", "10.0.0.8", "00:09:00:A3", t));
            ASSERT_EQ(v.kind == FvfVerdict::Kind::drop_anomaly, expect_drop) << trial << " " << i;
            if (expect_drop && !first_drop) {
                first_drop = static_cast<std::size_t>(i);
                EXPECT_TRUE(v.alert.has_value());
            } else {
                EXPECT_FALSE(v.alert.has_value());
            }
        }
    }
}

TEST(Fvf, FloodAtFiveTimesThreshold) {
    auto st = make_fvf({}, 1000, 100);
    int first = -1;
    for (int i = 0; i < 500; ++i) {
        auto v = fvf_validate(st, packet("10.0.0.3", "10.0.0.8", "00:09:00:A3", i * 2));
        if (v.kind == FvfVerdict::Kind::drop_anomaly && first < 0) first = i;
    }
    EXPECT_EQ(first, 100); // the 101st packet crosses the threshold
}

// ---------------------------------------------------------------- TVF

TEST(Tvf, Verdicts) {
    Digest good{};
    good[0] = 1;
    Digest bad{};
    Nonce n{}, old{};
    n[0] = 7;
    EXPECT_EQ(tvf_validate(good, {"H", good, n}, n), TrustVerdict::trusted);
    EXPECT_EQ(tvf_validate(good, {"H", bad, n}, n), TrustVerdict::compromised);
    EXPECT_EQ(tvf_validate(good, {"H", good, old}, n), TrustVerdict::stale_nonce);
    EXPECT_EQ(tvf_validate(good, {"H", bad, old}, n), TrustVerdict::stale_nonce);
}

// ---------------------------------------------------------------- IMF

namespace {

fabric::FlowRule random_rule(Rng &rng, const std::string &id) {
    fabric::FlowRule r;
    r.rule_id = id;
    r.priority = static_cast<int>(rng.uniform_int(0, 300));
    r.match.dst_ip = Ipv4(static_cast<std::uint32_t>(rng.next()));
    if (rng.uniform01() < 0.5) r.match.src_ip = Ipv4(static_cast<std::uint32_t>(rng.next()));
    switch (rng.uniform_int(0, 2)) {
    case 0: r.action = fabric::Forward{static_cast<PortId>(rng.uniform_int(1, 8)), static_cast<SliceId>(rng.uniform_int(1, 4094))}; break;
    case 1: r.action = fabric::Drop{}; break;
    default: r.action = fabric::PuntToController{}; break;
    }
    return r;
}

std::set<std::string> ids(const std::vector<fabric::FlowRule> &rs) {
    std::set<std::string> out;
    for (const auto &r : rs) out.insert(r.rule_id);
    return out;
}

} // namespace

TEST(Imf, CleanAndInjected) {
    Rng rng(1);
    fabric::TrustedReport t{"3346", {random_rule(rng, "r1"), random_rule(rng, "r2")}, 0};
    std::sort(t.rules.begin(), t.rules.end(), fabric::canonical_before);
    auto same = imf_audit(t, t);
    EXPECT_TRUE(same.clean);
    auto obs = t;
    obs.rules.push_back(random_rule(rng, "attacker"));
    auto r = imf_audit(t, obs);
    EXPECT_FALSE(r.clean);
    ASSERT_EQ(r.extra_rules.size(), 1u);
    EXPECT_EQ(r.extra_rules[0].rule_id, "attacker");
    EXPECT_TRUE(r.missing_rules.empty());
    EXPECT_TRUE(r.modified_rules.empty());

    auto mod = t;
    mod.rules[0].priority += 1;
    auto m = imf_audit(t, mod);
    ASSERT_EQ(m.modified_rules.size(), 1u);

    fabric::SwitchStateReport other{"OVS2", {}, 0};
    try {
        imf_audit(t, other);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::node_mismatch);
    }
    auto side = render_side_by_side(t, obs);
    EXPECT_NE(side.find("attacker"), std::string::npos);
    auto back = AuditResult::from_json(r.to_json());
    EXPECT_EQ(back.extra_rules.size(), 1u);
    EXPECT_EQ(back.clean, r.clean);
}

TEST(Property, AuditExactnessAndSymmetry) {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        fabric::TrustedReport t{"S", {}, 0};
        const auto nt = rng.uniform_int(0, 100);
        for (int i = 0; i < nt; ++i) t.rules.push_back(random_rule(rng, "t" + std::to_string(i)));
        auto o = t;
        std::vector<fabric::FlowRule> injected;
        const auto nx = rng.uniform_int(0, 10);
        for (int i = 0; i < nx; ++i) injected.push_back(random_rule(rng, "x" + std::to_string(i)));
        o.rules.insert(o.rules.end(), injected.begin(), injected.end());
        std::sort(t.rules.begin(), t.rules.end(), fabric::canonical_before);
        std::sort(o.rules.begin(), o.rules.end(), fabric::canonical_before);
        auto a = imf_audit(t, o);
        ASSERT_EQ(ids(a.extra_rules), ids(injected));
        ASSERT_TRUE(a.missing_rules.empty());
        ASSERT_TRUE(a.modified_rules.empty());
        ASSERT_EQ(a.clean, injected.empty());
        ASSERT_TRUE(imf_audit(t, t).clean);
        auto b = imf_audit(o, t);
        ASSERT_EQ(ids(a.extra_rules), ids(b.missing_rules));
    }
}

// ---------------------------------------------------------------- KGF / FSF

TEST(Kgf, DeterministicDistinctAndValidated) {
    KeyGenerator a(7), b(7);
    auto k1 = a.generate({"3346", "OVS3"}, 0);
    auto k2 = b.generate({"3346", "OVS3"}, 0);
    EXPECT_EQ(k1.bytes, k2.bytes);
    EXPECT_EQ(k1.key_id, k2.key_id);
    EXPECT_EQ(k1.bytes.size(), 16u);
    std::set<std::string> key_ids;
    std::set<crypto::AesKey> keys;
    for (int i = 0; i < 10000; ++i) {
        auto k = a.generate({"3346", "OVS3"}, i);
        EXPECT_TRUE(key_ids.insert(k.key_id).second);
        EXPECT_TRUE(keys.insert(k.bytes).second);
    }
    EXPECT_THROW(a.generate({"n", "n"}, 0), Error);
}

TEST(Fsf, RoundTripEveryLength) {
    KeyGenerator g(3);
    auto key = g.generate({"3346", "OVS3"}, 0);
    FlowCipher c(key);
    Rng rng(4);
    std::set<crypto::GcmNonce> nonces;
    for (std::size_t len = 0; len <= 4096; ++len) {
        auto p = rng.bytes(len);
        auto env = c.encrypt(p);
        ASSERT_TRUE(nonces.insert(env.nonce).second);
        ASSERT_EQ(fsf_decrypt(key, env), p);
        if (len > 0) ASSERT_NE(env.ciphertext, p);
        auto wire = env.serialize();
        ASSERT_EQ(fsf_decrypt(key, CipherEnvelope::parse(wire)), p);
    }
}

TEST(Fsf, AnySingleByteCorruptionDetected) {
    KeyGenerator g(5);
    auto key = g.generate({"a", "b"}, 0);
    FlowCipher c(key);
    auto env = c.encrypt(to_bytes("SCADA setpoint=42"));
    auto wire = env.serialize();
    for (std::size_t i = 0; i < wire.size(); ++i) {
        auto bad = wire;
        bad[i] ^= 0x5A;
        EXPECT_THROW(fsf_decrypt(key, CipherEnvelope::parse(bad)), Error) << i;
    }
    auto other = g.generate({"a", "b"}, 0);
    EXPECT_THROW(fsf_decrypt(other, env), Error);
}

// ---------------------------------------------------------------- device specific

TEST(DeviceSpecific, ListsAndFingerprint) {
    DevicePolicy dp;
    dp.device_id = "00:09:00:A4";
    dp.fingerprint_mac = Mac::parse("00:09:00:A4");
    dp.whitelist = {Ipv4::parse("10.0.0.10")};
    dp.blacklist = {Ipv4::parse("10.0.0.66")};
    EXPECT_EQ(device_specific_check(dp, packet("10.0.0.4", "10.0.0.10", "00:09:00:A4")).kind, DeviceVerdict::Kind::permit);
    EXPECT_EQ(device_specific_check(dp, packet("10.0.0.4", "10.0.0.66", "00:09:00:A4")).kind,
              DeviceVerdict::Kind::deny_blacklisted);
    // oracle: the stored fingerprint differs from the header tuple
    auto spoof = packet("10.0.0.4", "10.0.0.8", "00:09:00:FF");
    const bool mismatch = spoof.src_mac != dp.fingerprint_mac;
    EXPECT_TRUE(mismatch);
    EXPECT_EQ(device_specific_check(dp, spoof).kind, DeviceVerdict::Kind::deny_spoof);
}

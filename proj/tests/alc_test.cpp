#include <gtest/gtest.h>

#include <sstream>

#include "sentinel/alc.hpp"

using namespace sentinel;
using namespace sentinel::alc;
using fabric::FlowRule;

namespace {

FlowRule rule(const std::string &id, int prio, std::uint32_t dst) {
    FlowRule r;
    r.rule_id = id;
    r.priority = prio;
    r.match.dst_ip = Ipv4(dst);
    r.action = fabric::Forward{1, 200};
    return r;
}

// naive replay: same id or same (match, priority) is replaced
std::vector<FlowRule> replay(const std::vector<std::pair<bool, FlowRule>> &events) {
    std::vector<FlowRule> table;
    for (const auto &[install, r] : events) {
        std::vector<FlowRule> kept;
        for (const auto &x : table) {
            const bool same = x.rule_id == r.rule_id || (install && x.match == r.match && x.priority == r.priority);
            if (!same) kept.push_back(x);
        }
        table = std::move(kept);
        if (install) table.push_back(r);
    }
    std::sort(table.begin(), table.end(), fabric::canonical_before);
    return table;
}

} // namespace

TEST(Chain, GenesisAndLinks) {
    ActivityLog log;
    const auto &e1 = log.append(events::make("A", {{"x", 1}}));
    EXPECT_EQ(e1.seq, 1u);
    EXPECT_EQ(e1.prev_hash, Digest{});
    EXPECT_EQ(e1.entry_hash, entry_digest(1, e1.event, Digest{}));
    const auto &e2 = log.append(events::make("B", {}));
    EXPECT_EQ(e2.prev_hash, log.entries()[0].entry_hash);
    EXPECT_TRUE(log.verify());
    EXPECT_EQ(log.count("A"), 1u);
}

TEST(Chain, ByteFlipBreaksVerify) {
    ActivityLog log;
    for (int i = 0; i < 20; ++i) log.append(events::rule_installed("S", rule("r" + std::to_string(i), 1, i)));
    for (std::size_t i = 0; i < log.size(); ++i) {
        ActivityLog copy = log;
        auto &ev = copy.raw_entries()[i].event;
        ev[ev.size() / 2] ^= 0x01;
        EXPECT_FALSE(copy.verify()) << i;
        EXPECT_THROW(copy.expected_switch_state("S"), Error);
    }
}

TEST(Chain, PrefixProperty) {
    ActivityLog log;
    for (int i = 0; i < 50; ++i) log.append(events::make("E", {{"i", i}}));
    for (std::size_t n = 0; n <= log.size(); ++n) {
        ActivityLog prefix;
        prefix.raw_entries().assign(log.entries().begin(), log.entries().begin() + static_cast<long>(n));
        EXPECT_TRUE(prefix.verify());
    }
}

TEST(ExpectedState, InstallInstallDelete) {
    ActivityLog log;
    EXPECT_TRUE(log.expected_switch_state("S").rules.empty());
    log.append(events::rule_installed("S", rule("r1", 10, 1)));
    log.append(events::rule_installed("S", rule("r2", 10, 2)));
    log.append(events::rule_deleted("S", "r1"));
    log.append(events::rule_installed("T", rule("r9", 10, 9)));
    auto t = log.expected_switch_state("S");
    ASSERT_EQ(t.rules.size(), 1u);
    EXPECT_EQ(t.rules[0].rule_id, "r2");
}

TEST(ExpectedState, ReplayEquivalence) {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        ActivityLog log;
        std::vector<std::pair<bool, FlowRule>> evs;
        const int n = trial == 0 ? 10000 : 2000;
        for (int i = 0; i < n; ++i) {
            auto r = rule("r" + std::to_string(rng.uniform_int(0, 60)), static_cast<int>(rng.uniform_int(0, 3)),
                          static_cast<std::uint32_t>(rng.uniform_int(0, 20)));
            const bool install = rng.uniform01() < 0.7;
            if (install) {
                log.append(events::rule_installed("S", r));
            } else {
                log.append(events::rule_deleted("S", r.rule_id));
            }
            evs.emplace_back(install, r);
        }
        auto got = log.expected_switch_state("S").rules;
        auto want = replay(evs);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].rule_id, want[i].rule_id);
            EXPECT_TRUE(got[i].same_content(want[i]));
        }
    }
}

TEST(Persist, JsonLinesRoundTrip) {
    ActivityLog log;
    log.append(events::rule_installed("S", rule("r1", 10, 1)));
    log.append(events::profile_extracted("alice", "S"));
    std::stringstream ss;
    log.write_jsonl(ss);
    auto back = ActivityLog::read_jsonl(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_TRUE(back.verify());
    EXPECT_EQ(back.entries()[1].entry_hash, log.entries()[1].entry_hash);
    EXPECT_EQ(back.entries()[1].type(), "ProfileExtracted");
}

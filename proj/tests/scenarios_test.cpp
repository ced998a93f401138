#include <gtest/gtest.h>

#include "sentinel/scenarios.hpp"

using namespace sentinel;
using namespace sentinel::scenarios;

namespace {

ScenarioConfig bundled() { return ScenarioConfig::bundled(SENTINEL_DATA_DIR); }

std::string failed_checks(const ScenarioReport &r) {
    std::string out;
    for (const auto &c : r.checks) {
        if (!c.pass) out += c.name + " (" + c.detail + ") ";
    }
    return out;
}

} // namespace

class EveryScenario : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryScenario, PassesAndConserves) {
    auto r = run_scenario(GetParam(), bundled(), 7);
    EXPECT_TRUE(r.pass) << failed_checks(r);
    EXPECT_TRUE(r.packets.conserved());
    for (const auto &[ue, c] : r.per_device) EXPECT_TRUE(c.conserved()) << ue;
}

TEST_P(EveryScenario, Deterministic) {
    auto a = run_scenario(GetParam(), bundled(), 11);
    auto b = run_scenario(GetParam(), bundled(), 11);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    EXPECT_EQ(a.to_csv(), b.to_csv());
}

INSTANTIATE_TEST_SUITE_P(All, EveryScenario, ::testing::ValuesIn(scenario_ids()),
                         [](const auto &info) { return info.param; });

TEST(Scenarios, UnknownIdAndBadConfig) {
    try {
        run_scenario("attack9", bundled(), 1);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::not_found);
    }
    auto cfg = bundled();
    EXPECT_THROW(cfg.apply(nlohmann::json{{"weird", {}}}), Error);
}

TEST(Scenarios, Attack2NeedsBlacklistFeedback) {
    auto cfg = bundled();
    cfg.apply(nlohmann::json{{"sma", {{"blacklist_feedback", false}}}});
    auto r = run_scenario("attack2", cfg, 7);
    EXPECT_FALSE(r.pass);
}

TEST(Scenarios, Attack1Counts) {
    auto r = run_scenario("attack1", bundled(), 3);
    const auto &p = r.per_device.at("printer");
    EXPECT_GT(p.injected, 0u);
    EXPECT_EQ(p.delivered, 0u);
    EXPECT_EQ(p.dropped_at_entry, p.injected);
}

TEST(Scenarios, ScheduleOrderedAndSeeded) {
    auto fab = fabric::Fabric::build(bundled().topology);
    std::vector<TrafficSpec> specs(2);
    specs[0].ue = "UE1";
    specs[0].dst = Ipv4::parse("10.0.0.8");
    specs[0].pps = 100;
    specs[1].ue = "UE2";
    specs[1].dst = Ipv4::parse("10.0.0.9");
    specs[1].pps = 30;
    auto a = make_schedule(fab, specs, 5);
    auto b = make_schedule(fab, specs, 5);
    auto c = make_schedule(fab, specs, 6);
    ASSERT_EQ(a.size(), 130u);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LE(a[i - 1].packet.virtual_timestamp, a[i].packet.virtual_timestamp);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same = same && a[i].packet.payload == b[i].packet.payload;
        differs = differs || a[i].packet.payload != c[i].packet.payload;
    }
    EXPECT_TRUE(same);
    EXPECT_TRUE(differs);
}

TEST(Bench, SingleUeZeroCostIsOneRoundTrip) {
    FlowSetupConfig cfg;
    cfg.sizes = {1};
    cfg.runs = 1;
    cfg.link_latency_ms = 0;
    cfg.costs = sma::CostModel::zero();
    cfg.costs.controller_rtt_us = 10'000;
    auto r = bench_flow_setup(cfg, kernels::Execution::serial);
    ASSERT_EQ(r.flow_setup.size(), 2u);
    EXPECT_NEAR(r.flow_setup[0].mean_ms, 10.0, 1e-9);
    EXPECT_NEAR(r.flow_setup[1].mean_ms, 10.0, 1e-9);
}

TEST(Bench, GrowsWithLoadAndSecurityCostsMore) {
    FlowSetupConfig cfg;
    cfg.sizes = {10, 40, 80};
    cfg.runs = 2;
    auto r = bench_flow_setup(cfg, kernels::Execution::serial);
    ASSERT_EQ(r.flow_setup.size(), 6u);
    for (std::size_t i = 0; i + 2 < r.flow_setup.size(); i += 2) {
        EXPECT_LT(r.flow_setup[i].mean_ms, r.flow_setup[i + 2].mean_ms);
        EXPECT_LT(r.flow_setup[i + 1].mean_ms, r.flow_setup[i + 3].mean_ms);
    }
    for (std::size_t i = 0; i < r.flow_setup.size(); i += 2) {
        EXPECT_FALSE(r.flow_setup[i].security);
        EXPECT_TRUE(r.flow_setup[i + 1].security);
        EXPECT_LT(r.flow_setup[i].mean_ms, r.flow_setup[i + 1].mean_ms);
    }
    auto csv = r.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,mean_ms,stdev_ms,security");
    FlowSetupConfig bad;
    bad.sizes = {0};
    EXPECT_THROW(bench_flow_setup(bad), Error);
}

TEST(Bench, SignatureLatencyMatchesScanCount) {
    SignatureBenchConfig cfg;
    cfg.counts = {0, 10, 100, 400};
    cfg.runs = 2;
    cfg.packets_per_run = 50;
    auto r = bench_signature_latency(cfg);
    ASSERT_EQ(r.signatures.size(), 4u);
    EXPECT_DOUBLE_EQ(r.signatures[0].mean_us, cfg.base_us);
    for (std::size_t i = 1; i < r.signatures.size(); ++i) {
        EXPECT_GT(r.signatures[i].mean_us, r.signatures[i - 1].mean_us);
        // random payloads virtually never contain the 0xFF 0x00 prefixed patterns: full scans
        const double full = cfg.base_us + cfg.per_signature_us * static_cast<double>(r.signatures[i].n_signatures);
        EXPECT_NEAR(r.signatures[i].mean_us, full, 1e-6 * full);
    }
}

// Acceptance suite: one line per criterion. Tolerances are fixed here.
//
// Exit status is non-zero when any criterion fails, except criteria listed
// as known-unattainable, which are still printed as FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "sentinel/anomaly.hpp"
#include "sentinel/scenarios.hpp"
#include "sentinel/secfn.hpp"

using namespace sentinel;
using nlohmann::json;

namespace {

constexpr double kIdentityTol = 1e-6;     // 8a
constexpr double kTableTol = 0.01;        // 8c
constexpr double kTableSlack = 1e-9;      // float rounding of decimal table entries
constexpr double kNbMinAccuracy = 95.0;   // 8b
constexpr double kOverheadLo = 2.0;       // 7, percent
constexpr double kOverheadHi = 15.0;
constexpr double kDropAfterBlacklist = 0.99; // 2
constexpr int kAttack2Seeds = 20;
constexpr int kAttestationCases = 100;
constexpr int kAuditCases = 1000;
constexpr int kRepetitions = 5;

enum class Status { pass, fail, skip };

struct Outcome {
    Status status{Status::fail};
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    std::function<Outcome()> check;
    bool known_unattainable{false};
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

scenarios::ScenarioConfig bundled() { return scenarios::ScenarioConfig::bundled(SENTINEL_DATA_DIR); }

std::string failed(const scenarios::ScenarioReport &r) {
    std::string out;
    for (const auto &c : r.checks) {
        if (!c.pass) out += " " + c.name + "(" + c.detail + ")";
    }
    return out;
}

const scenarios::Check *find_check(const scenarios::ScenarioReport &r, const std::string &name) {
    for (const auto &c : r.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

bool check_ok(const scenarios::ScenarioReport &r, const std::string &name) {
    const auto *c = find_check(r, name);
    return c && c->pass;
}

// ---------------------------------------------------------------- 1

Outcome c1() {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = scenarios::run_scenario("attack1", bundled(), 7);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto &p = r.per_device.at("printer");
    std::uint64_t deny = 0;
    for (const auto &[reason, n] : r.drop_reasons["printer"]) {
        if (reason.find("DenyUnauthorized") != std::string::npos) deny += n;
    }
    const bool ok = r.pass && p.injected >= 10000 && p.delivered == 0 && deny == p.injected &&
                    p.dropped_at_entry == p.injected && check_ok(r, "benign-equals-control") && secs < 5.0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "attacker injected=%llu delivered=%llu deny_unauthorized=%llu; runtime %.3fs",
                  static_cast<unsigned long long>(p.injected), static_cast<unsigned long long>(p.delivered),
                  static_cast<unsigned long long>(deny), secs);
    return verdict(ok, buf + failed(r));
}

// ---------------------------------------------------------------- 2

Outcome c2() {
    int good = 0;
    std::string bad;
    double worst = 1.0;
    for (int s = 1; s <= kAttack2Seeds; ++s) {
        auto r = scenarios::run_scenario("attack2", bundled(), static_cast<std::uint64_t>(s));
        const auto &d = r.details;
        std::size_t fvf_alerts = 0;
        for (const auto &a : r.alerts) fvf_alerts += a.source == "FVF";
        const auto after = d.value("post_blacklist_packets", std::uint64_t{0});
        const auto at_entry = d.value("post_blacklist_dropped_at_entry", std::uint64_t{0});
        const auto reached = d.value("post_blacklist_delivered", std::uint64_t{0});
        const double frac = after ? static_cast<double>(at_entry) / static_cast<double>(after) : 0.0;
        worst = std::min(worst, frac);
        const bool ok = r.pass && fvf_alerts == 1 && check_ok(r, "alert-within-window") && after > 0 &&
                        frac >= kDropAfterBlacklist && reached == 0;
        if (ok) {
            ++good;
        } else {
            bad += " seed" + std::to_string(s) + ":" + failed(r);
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d/%d seeds; min post-blacklist entry-drop fraction %.4f", good, kAttack2Seeds, worst);
    return verdict(good == kAttack2Seeds, buf + bad);
}

// ---------------------------------------------------------------- 3

Outcome c3() {
    auto cfg = bundled();
    cfg.params["random_cases"] = kAttestationCases;
    auto r = scenarios::run_scenario("attack3", cfg, 7);
    const auto &d = r.details;
    const bool ok = r.pass && check_ok(r, "random-topologies") && check_ok(r, "replay-refused-stale-nonce") &&
                    d.value("random_cases", 0) == kAttestationCases;
    const auto *rnd = find_check(r, "random-topologies");
    const auto *rep = find_check(r, "replay-refused-stale-nonce");
    return verdict(ok, std::to_string(d.value("random_cases", 0)) + " random topologies: " +
                           (rnd ? rnd->detail : std::string{"?"}) + "; replays stale " +
                           (rep ? rep->detail : std::string{"?"}) + failed(r));
}

// ---------------------------------------------------------------- 4

Outcome c4() {
    auto r = scenarios::run_scenario("attack4", bundled(), 7);
    const bool ok = r.pass && check_ok(r, "authorization-set-equal") && check_ok(r, "zero-profile-extractions") &&
                    check_ok(r, "blacklisted-stays-blocked");
    return verdict(ok, ok ? "set equality, 0 ProfileExtracted, blacklisted device blocked" : failed(r));
}

// ---------------------------------------------------------------- 5

fabric::FlowRule random_rule(Rng &rng, const std::string &id) {
    fabric::FlowRule r;
    r.rule_id = id;
    r.priority = static_cast<int>(rng.uniform_int(0, 1000));
    r.match.dst_ip = Ipv4(static_cast<std::uint32_t>(rng.next()));
    if (rng.uniform01() < 0.5) r.match.src_ip = Ipv4(static_cast<std::uint32_t>(rng.next()));
    if (rng.uniform01() < 0.3) r.match.slice = static_cast<SliceId>(rng.uniform_int(1, kMaxVlan));
    switch (rng.uniform_int(0, 2)) {
    case 0: r.action = fabric::Forward{static_cast<PortId>(rng.uniform_int(1, 16)), static_cast<SliceId>(rng.uniform_int(1, kMaxVlan))}; break;
    case 1: r.action = fabric::Drop{}; break;
    default: r.action = fabric::PuntToController{}; break;
    }
    return r;
}

Outcome c5() {
    Rng rng(derive_seed(5, 0x1AF));
    int exact = 0, false_pos = 0;
    for (int c = 0; c < kAuditCases; ++c) {
        fabric::TrustedReport trusted{"s" + std::to_string(c), {}, 0};
        const auto nt = rng.uniform_int(0, 100);
        for (int i = 0; i < nt; ++i) trusted.rules.push_back(random_rule(rng, "t" + std::to_string(i)));
        std::sort(trusted.rules.begin(), trusted.rules.end(), fabric::canonical_before);
        auto observed = trusted;
        std::set<std::string> injected;
        const auto nx = rng.uniform_int(0, 10);
        for (int i = 0; i < nx; ++i) {
            auto r = random_rule(rng, "x" + std::to_string(i));
            injected.insert(r.rule_id);
            observed.rules.push_back(r);
        }
        std::sort(observed.rules.begin(), observed.rules.end(), fabric::canonical_before);
        auto a = secfn::imf_audit(trusted, observed);
        std::set<std::string> extra;
        for (const auto &r : a.extra_rules) extra.insert(r.rule_id);
        exact += extra == injected && a.missing_rules.empty() && a.modified_rules.empty();
        false_pos += !secfn::imf_audit(trusted, trusted).clean;
    }
    return verdict(exact == kAuditCases && false_pos == 0, std::to_string(exact) + "/" + std::to_string(kAuditCases) +
                                                               " exact, " + std::to_string(false_pos) +
                                                               " false positives on clean tables");
}

// ---------------------------------------------------------------- 6

Outcome c6() {
    auto r = scenarios::run_scenario("shellshock", bundled(), 7);
    const bool ok = r.pass && check_ok(r, "exploit-dropped-with-signature") && check_ok(r, "control-delivers-payload");
    const auto *c = find_check(r, "exploit-dropped-with-signature");
    return verdict(ok, (c ? c->detail : std::string{"missing check"}) + failed(r));
}

// ---------------------------------------------------------------- 7

Outcome c7() {
    std::string detail;
    bool ok = true;
    double overhead100 = 0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        scenarios::FlowSetupConfig cfg;
        cfg.seed = seed;
        cfg.runs = seed == 1 ? 10 : 2;
        auto rep = scenarios::bench_flow_setup(cfg);
        const auto &rows = rep.flow_setup;
        for (std::size_t i = 0; i < rows.size(); i += 2) {
            if (rows[i + 1].mean_ms < rows[i].mean_ms) {
                ok = false;
                detail += " seed" + std::to_string(seed) + " n=" + std::to_string(rows[i].n) + " on<off";
            }
            if (i >= 2) {
                for (int s = 0; s < 2; ++s) {
                    if (rows[i + static_cast<std::size_t>(s)].mean_ms < rows[i - 2 + static_cast<std::size_t>(s)].mean_ms) {
                        ok = false;
                        detail += " seed" + std::to_string(seed) + " decreasing at n=" + std::to_string(rows[i].n);
                    }
                }
            }
        }
        if (seed == 1) {
            overhead100 = 100.0 * (rows[1].mean_ms - rows[0].mean_ms) / rows[0].mean_ms;
            char buf[200];
            std::snprintf(buf, sizeof buf, "n=100 off %.2f on %.2f ms, n=500 off %.2f on %.2f ms, overhead@100 %.2f%%",
                          rows[0].mean_ms, rows[1].mean_ms, rows[8].mean_ms, rows[9].mean_ms, overhead100);
            detail = buf + detail;
        }
    }
    ok = ok && overhead100 >= kOverheadLo && overhead100 <= kOverheadHi;
    return verdict(ok, detail);
}

// ---------------------------------------------------------------- 8

struct MetricRow {
    const char *name;
    double tpr, tnr, fnr, fpr;
};

// reference rows: accuracy omitted, rates in percent
constexpr MetricRow kReferenceRows[] = {
    {"NB chi-square", 51.100, 81.544, 48.89, 18.455},  {"DT chi-square", 88.54, 97.7914, 11.458, 4.208},
    {"RF chi-square", 97.052, 97.085, 2.947, 2.914},   {"NB RFE+chi-square", 51.112, 81.460, 48.887, 18.539},
    {"DT RFE+chi-square", 89.800, 98.17, 10.199, 1.8266}, {"RF RFE+chi-square", 99.182, 98.482, 0.8176, 1.517},
};

anomaly::EvalMetrics fit_and_eval(const anomaly::Dataset &d, const std::string &classifier,
                                  std::optional<std::pair<anomaly::SelectMethod, std::size_t>> sel, std::uint64_t seed,
                                  bool on_train = false) {
    auto [train, test] = anomaly::split(d, 0.7, seed);
    auto binner = anomaly::Binner::fit(train, 10);
    auto btr = binner.transform(train), bte = binner.transform(test);
    if (sel) {
        auto f = anomaly::select_features(btr, sel->first, sel->second);
        btr = btr.project(f);
        bte = bte.project(f);
    }
    const auto &target = on_train ? btr : bte;
    if (classifier == "nb") {
        auto nb = anomaly::train_nb(btr);
        return anomaly::evaluate([&](std::span<const int> row) {
            auto [l, p] = nb.predict(row);
            return anomaly::Prediction{l, p};
        }, target);
    }
    auto dt = anomaly::train_dt(btr);
    return anomaly::evaluate([&](std::span<const int> row) { return anomaly::Prediction{dt.predict(row), dt.score(row)}; },
                             target);
}

Outcome c8a() {
    int evals = 0, ok = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto d = anomaly::synthetic_dataset(seed, 1500);
        for (const char *cls : {"nb", "dt"}) {
            std::vector<std::optional<std::pair<anomaly::SelectMethod, std::size_t>>> sels{
                std::nullopt, std::pair{anomaly::SelectMethod::chi_square, std::size_t{3}},
                std::pair{anomaly::SelectMethod::ensemble, std::size_t{3}}};
            for (const auto &sel : sels) {
                auto m = fit_and_eval(d, cls, sel, seed);
                ++evals;
                ok += m.tpr && m.tnr && m.fnr && m.fpr &&
                      anomaly::check_rate_identities(*m.tpr, *m.tnr, *m.fnr, *m.fpr, kIdentityTol).ok;
            }
        }
    }
    return verdict(ok == evals, std::to_string(ok) + "/" + std::to_string(evals) + " evaluations satisfy both identities");
}

Outcome c8b() {
    auto d = anomaly::synthetic_dataset(42, 3000);
    auto nb = fit_and_eval(d, "nb", std::nullopt, 42);
    auto dt_train = fit_and_eval(d, "dt", std::nullopt, 42, true);
    char buf[160];
    std::snprintf(buf, sizeof buf, "NB test accuracy %.3f%%, DT training accuracy %.3f%%", nb.accuracy, dt_train.accuracy);
    return verdict(nb.accuracy >= kNbMinAccuracy && dt_train.accuracy == 100.0, buf);
}

Outcome c8c() {
    std::string bad;
    for (const auto &r : kReferenceRows) {
        auto c = anomaly::check_rate_identities(r.tpr, r.tnr, r.fnr, r.fpr, kTableTol + kTableSlack);
        if (!c.ok) {
            char buf[160];
            std::snprintf(buf, sizeof buf, " %s: tpr+fnr=%.4f tnr+fpr=%.4f;", r.name, c.tpr_plus_fnr, c.tnr_plus_fpr);
            bad += buf;
        }
    }
    const auto total = std::size(kReferenceRows);
    if (bad.empty()) return {Status::pass, std::to_string(total) + "/" + std::to_string(total) + " reference rows consistent"};
    return {Status::fail, "inconsistent reference rows:" + bad + " the TNR entry reads like a transcription slip (95.7914 would close it)"};
}

Outcome c8d() {
    const char *path = std::getenv("SENTINEL_ITOC_CSV");
    if (!path || !*path) return {Status::skip, "SENTINEL_ITOC_CSV not set"};
    std::ifstream in(path);
    if (!in) return {Status::fail, std::string{"cannot open "} + path};
    auto d = anomaly::read_csv(in);
    const auto k = std::min<std::size_t>(10, d.arity());
    auto nb = fit_and_eval(d, "nb", std::pair{anomaly::SelectMethod::chi_square, k}, 1);
    auto dt = fit_and_eval(d, "dt", std::pair{anomaly::SelectMethod::chi_square, k}, 1);
    char buf[160];
    std::snprintf(buf, sizeof buf, "NB %.3f%% vs DT %.3f%%", nb.accuracy, dt.accuracy);
    return verdict(nb.accuracy < dt.accuracy, buf);
}

// ---------------------------------------------------------------- 9

Outcome c9() {
    secfn::KeyGenerator kgf(9);
    auto key = kgf.generate({"3346", "OVS3"}, 0);
    secfn::FlowCipher cipher(key);
    Rng rng(derive_seed(9, 0xF5F));
    std::size_t roundtrip_fail = 0, undetected = 0, corruptions = 0;
    for (std::size_t len = 0; len <= 4096; ++len) {
        auto p = rng.bytes(len);
        auto env = cipher.encrypt(p);
        Bytes back;
        try {
            back = secfn::fsf_decrypt(key, secfn::CipherEnvelope::parse(env.serialize()));
        } catch (const Error &) {
            ++roundtrip_fail;
            continue;
        }
        roundtrip_fail += back != p;
        // one corrupted position per length, covering every ciphertext offset class
        auto wire = env.serialize();
        const auto pos = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(wire.size()) - 1));
        wire[pos] ^= static_cast<std::uint8_t>(rng.uniform_int(1, 255));
        ++corruptions;
        try {
            secfn::fsf_decrypt(key, secfn::CipherEnvelope::parse(wire));
            ++undetected;
        } catch (const Error &) {
        }
    }
    // every position of one short envelope
    auto env = cipher.encrypt(to_bytes("setpoint=42"));
    auto wire = env.serialize();
    for (std::size_t i = 0; i < wire.size(); ++i) {
        auto w = wire;
        w[i] ^= 0x01;
        ++corruptions;
        try {
            secfn::fsf_decrypt(key, secfn::CipherEnvelope::parse(w));
            ++undetected;
        } catch (const Error &) {
        }
    }
    auto r = scenarios::run_scenario("fsf_path", bundled(), 7);
    const auto *leak = find_check(r, "ciphertext-only-mid-path");
    const bool ok = roundtrip_fail == 0 && undetected == 0 && r.pass && leak && leak->pass;
    return verdict(ok, "round-trip failures " + std::to_string(roundtrip_fail) + "/4097, undetected corruptions " +
                           std::to_string(undetected) + "/" + std::to_string(corruptions) + "; " +
                           (leak ? leak->detail : std::string{"missing leak check"}) + failed(r));
}

// ---------------------------------------------------------------- 10

Outcome c10() {
    std::string bad;
    std::size_t compared = 0;
    for (const auto &id : scenarios::scenario_ids()) {
        const auto first = scenarios::run_scenario(id, bundled(), 7).to_json().dump();
        for (int i = 1; i < kRepetitions; ++i) {
            ++compared;
            if (scenarios::run_scenario(id, bundled(), 7).to_json().dump() != first) bad += " " + id;
        }
    }
    scenarios::FlowSetupConfig fs;
    fs.sizes = {20, 40};
    fs.runs = 2;
    scenarios::SignatureBenchConfig sg;
    sg.counts = {0, 10, 100};
    sg.runs = 2;
    const auto fs_first = scenarios::bench_flow_setup(fs).to_json().dump();
    const auto sg_first = scenarios::bench_signature_latency(sg).to_json().dump();
    for (int i = 1; i < kRepetitions; ++i) {
        compared += 2;
        // alternate execution paths so the OpenMP sweep is held to the serial result too
        const auto exec = i % 2 ? kernels::Execution::serial : kernels::Execution::parallel;
        if (scenarios::bench_flow_setup(fs, exec).to_json().dump() != fs_first) bad += " flow-setup";
        if (scenarios::bench_signature_latency(sg).to_json().dump() != sg_first) bad += " signatures";
    }
    return verdict(bad.empty(), std::to_string(compared) + " repeated reports compared" +
                                    (bad.empty() ? std::string{", all byte-identical"} : ", differing:" + bad));
}

const char *label(Status s) {
    switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::skip: return "SKIP";
    }
    return "?";
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"1", "unauthorized flood blocked at entry", c1},
        {"2", "anomaly alert and blacklist over 20 seeds", c2},
        {"3", "attestation-gated deployment and replay refusal", c3},
        {"4", "handover preserves authorization without re-extraction", c4},
        {"5", "audit extra-set exactness", c5},
        {"6", "shellshock signature causally blocks exploit", c6},
        {"7", "flow setup trend and security overhead", c7},
        {"8a", "rate identities on every evaluation", c8a},
        {"8b", "NB synthetic accuracy and DT training fit", c8b},
        {"8c", "reference classifier rows satisfy rate identities", c8c, true},
        {"8d", "NB below DT on the ITOC dataset", c8d},
        {"9", "flow encryption round trip, tamper detection, no mid-path plaintext", c9},
        {"10", "byte-identical reports across repetitions", c10},
    };
    int hard_failures = 0, known = 0;
    for (const auto &c : criteria) {
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o = {Status::fail, std::string{"exception: "} + e.what()};
        }
        std::string suffix;
        if (o.status == Status::fail) {
            if (c.known_unattainable) {
                ++known;
                suffix = " [known-unattainable, not counted]";
            } else {
                ++hard_failures;
            }
        }
        std::printf("criterion %-3s %s  %s: %s%s\n", c.id.c_str(), label(o.status), c.title.c_str(), o.detail.c_str(),
                    suffix.c_str());
        std::fflush(stdout);
    }
    std::printf("summary: %d failing, %d known-unattainable\n", hard_failures, known);
    return hard_failures == 0 ? 0 : 1;
}

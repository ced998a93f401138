#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sentinel/anomaly.hpp"

using namespace sentinel;
using namespace sentinel::anomaly;

namespace {

// textbook chi-square over the full contingency table
double chi_oracle(const std::vector<int> &col, const std::vector<int> &labels) {
    std::map<int, std::array<double, 2>> obs;
    std::array<double, 2> cls{};
    for (std::size_t i = 0; i < col.size(); ++i) {
        obs[col[i]][static_cast<std::size_t>(labels[i])] += 1;
        cls[static_cast<std::size_t>(labels[i])] += 1;
    }
    const double n = static_cast<double>(col.size());
    double chi = 0;
    for (const auto &[v, row] : obs) {
        const double rt = row[0] + row[1];
        for (int c = 0; c < 2; ++c) {
            const double e = rt * cls[static_cast<std::size_t>(c)] / n;
            if (e > 0) chi += (row[static_cast<std::size_t>(c)] - e) * (row[static_cast<std::size_t>(c)] - e) / e;
        }
    }
    return chi;
}

BinnedDataset binned(std::vector<std::vector<int>> rows, std::vector<int> labels) {
    BinnedDataset d;
    for (std::size_t j = 0; j < rows.front().size(); ++j) d.feature_names.push_back("f" + std::to_string(j));
    d.rows = std::move(rows);
    d.labels = std::move(labels);
    return d;
}

} // namespace

TEST(Chi, PerfectAssociation) {
    std::vector<int> col, lab;
    for (int i = 0; i < 10; ++i) col.push_back(0), lab.push_back(0);
    for (int i = 0; i < 10; ++i) col.push_back(1), lab.push_back(1);
    EXPECT_NEAR(chi_square_score(col, lab), 20.0, 1e-9);
}

TEST(Chi, IndependentAndConstant) {
    std::vector<int> col{0, 1, 0, 1, 0, 1, 0, 1}, lab{0, 0, 1, 1, 0, 0, 1, 1};
    EXPECT_NEAR(chi_square_score(col, lab), 0.0, 1e-12);
    std::vector<int> constant(8, 3);
    EXPECT_NEAR(chi_square_score(constant, lab), 0.0, 1e-12);
}

TEST(Property, ChiMatchesOracle) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 300));
        const auto arity = rng.uniform_int(1, 12);
        std::vector<int> col(n), lab(n);
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = static_cast<int>(rng.uniform_int(0, arity - 1));
            lab[i] = static_cast<int>(rng.uniform_int(0, 1));
        }
        ASSERT_NEAR(chi_square_score(col, lab), chi_oracle(col, lab), 1e-9 * (1 + chi_oracle(col, lab)));
    }
}

TEST(Select, Bounds) {
    auto d = binned({{0, 1, 2}, {1, 1, 0}, {0, 0, 1}, {1, 0, 2}}, {0, 1, 0, 1});
    EXPECT_EQ(select_features(d, SelectMethod::chi_square, 3), (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(select_features(d, SelectMethod::chi_square, 1), (std::vector<std::size_t>{0}));
    EXPECT_THROW(select_features(d, SelectMethod::chi_square, 0), Error);
    EXPECT_THROW(select_features(d, SelectMethod::chi_square, 4), Error);
    auto e = select_features(d, SelectMethod::ensemble, 2);
    EXPECT_EQ(e.size(), 2u);
    EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
}

TEST(Select, RankTiesByIndex) {
    std::vector<double> s{1.0, 3.0, 3.0, 0.5};
    EXPECT_EQ(rank_by_score(s), (std::vector<std::size_t>{1, 2, 0, 3}));
}

TEST(Nb, PosteriorAndUnseen) {
    auto d = binned({{0, 0}, {0, 1}, {1, 1}, {1, 1}, {1, 0}}, {0, 0, 1, 1, 1});
    auto nb = train_nb(d);
    for (const auto &row : d.rows) {
        auto p = nb.posterior(row);
        EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    }
    // nothing seen: only the prior speaks, 3 attack vs 2 benign
    std::vector<int> unseen{9, 9};
    auto [label, pa] = nb.predict(unseen);
    EXPECT_EQ(label, 1);
    EXPECT_NEAR(pa, 0.6, 1e-12);
    std::vector<int> short_row{0};
    EXPECT_THROW(nb.predict(short_row), Error);
}

TEST(Nb, DuplicationInvariantPredictions) {
    auto d = synthetic_dataset(4, 400);
    auto b = Binner::fit(d, 10).transform(d);
    auto twice = b;
    twice.rows.insert(twice.rows.end(), b.rows.begin(), b.rows.end());
    twice.labels.insert(twice.labels.end(), b.labels.begin(), b.labels.end());
    auto m1 = train_nb(b), m2 = train_nb(twice);
    int differ = 0;
    for (const auto &row : b.rows) differ += m1.predict(row).first != m2.predict(row).first;
    // Laplace smoothing shifts probabilities slightly; labels should almost never flip
    EXPECT_LE(differ, 4);
}

TEST(Dt, SeparableAndPure) {
    auto sep = binned({{0, 5}, {0, 6}, {1, 5}, {1, 6}}, {0, 0, 1, 1});
    auto t = train_dt(sep);
    EXPECT_EQ(t.depth(), 1);
    for (std::size_t i = 0; i < sep.rows.size(); ++i) EXPECT_EQ(t.predict(sep.rows[i]), sep.labels[i]);
    auto pure = binned({{0}, {1}, {2}}, {1, 1, 1});
    auto p = train_dt(pure);
    EXPECT_EQ(p.node_count(), 1u);
    EXPECT_EQ(p.predict(std::vector<int>{7}), 1);
}

TEST(Dt, XorAtDepthTwo) {
    std::vector<std::vector<int>> rows;
    std::vector<int> labels;
    for (int rep = 0; rep < 5; ++rep) {
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                rows.push_back({a, b});
                labels.push_back(a ^ b);
            }
        }
    }
    auto d = binned(rows, labels);
    auto t = train_dt(d, 2);
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(t.predict(rows[i]), labels[i]);
    EXPECT_LE(t.depth(), 2);
}

TEST(Eval, PerfectInvertedAndOneClass) {
    auto d = binned({{0}, {1}, {0}, {1}}, {0, 1, 0, 1});
    auto perfect = evaluate([](std::span<const int> r) { return Prediction{r[0], double(r[0])}; }, d);
    EXPECT_DOUBLE_EQ(perfect.accuracy, 100);
    EXPECT_DOUBLE_EQ(*perfect.tpr, 100);
    EXPECT_DOUBLE_EQ(*perfect.fpr, 0);
    EXPECT_DOUBLE_EQ(*perfect.auc, 1.0);
    auto inverted = evaluate([](std::span<const int> r) { return Prediction{1 - r[0], double(1 - r[0])}; }, d);
    EXPECT_DOUBLE_EQ(inverted.accuracy, 0);
    EXPECT_DOUBLE_EQ(*inverted.auc, 0.0);
    EXPECT_TRUE(check_rate_identities(*inverted.tpr, *inverted.tnr, *inverted.fnr, *inverted.fpr, 1e-9).ok);

    auto benign_only = binned({{0}, {0}}, {0, 0});
    auto m = evaluate([](std::span<const int>) { return Prediction{0, 0.0}; }, benign_only);
    EXPECT_FALSE(m.tpr.has_value());
    EXPECT_FALSE(m.fnr.has_value());
    EXPECT_FALSE(m.auc.has_value());
    EXPECT_DOUBLE_EQ(*m.tnr, 100);
    EXPECT_TRUE(m.to_json()["tpr"].is_null());
}

TEST(Eval, IdentityCheck) {
    EXPECT_TRUE(check_rate_identities(90, 95, 10, 5, 0.01).ok);
    auto bad = check_rate_identities(90, 97.7914, 10, 4.208, 0.01);
    EXPECT_FALSE(bad.ok);
    EXPECT_NEAR(bad.tnr_plus_fpr, 101.9994, 1e-9);
}

TEST(Pipeline, SyntheticClassifiers) {
    auto d = synthetic_dataset(7, 3000);
    auto [train, test] = split(d, 0.7, 7);
    EXPECT_EQ(train.rows.size() + test.rows.size(), d.rows.size());
    auto binner = Binner::fit(train, 10);
    auto btr = binner.transform(train), bte = binner.transform(test);
    auto nb = train_nb(btr);
    auto nbm = evaluate([&](std::span<const int> r) {
        auto [l, s] = nb.predict(r);
        return Prediction{l, s};
    }, bte);
    EXPECT_GE(nbm.accuracy, 95.0);
    EXPECT_TRUE(check_rate_identities(*nbm.tpr, *nbm.tnr, *nbm.fnr, *nbm.fpr, 1e-9).ok);

    auto dt = train_dt(btr);
    auto dt_train = evaluate([&](std::span<const int> r) { return Prediction{dt.predict(r), dt.score(r)}; }, btr);
    auto nb_train = evaluate([&](std::span<const int> r) { return Prediction{nb.predict(r).first, {}}; }, btr);
    EXPECT_GE(dt_train.accuracy, nb_train.accuracy);
}

TEST(Csv, RoundTrip) {
    auto d = synthetic_dataset(2, 50);
    std::stringstream ss;
    write_csv(ss, d);
    auto back = read_csv(ss);
    EXPECT_EQ(back.feature_names, d.feature_names);
    EXPECT_EQ(back.labels, d.labels);
    ASSERT_EQ(back.rows.size(), d.rows.size());
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        for (std::size_t j = 0; j < d.arity(); ++j) EXPECT_DOUBLE_EQ(back.rows[i][j], d.rows[i][j]);
    }
    std::stringstream bad("a,b\n1,2\n");
    EXPECT_THROW(read_csv(bad), Error);
}

TEST(Binner, EqualFrequency) {
    Dataset d;
    d.feature_names = {"x"};
    for (int i = 0; i < 100; ++i) {
        d.rows.push_back({double(i)});
        d.labels.push_back(i % 2);
    }
    auto b = Binner::fit(d, 4).transform(d);
    std::map<int, int> counts;
    for (const auto &r : b.rows) counts[r[0]]++;
    EXPECT_EQ(counts.size(), 4u);
    for (const auto &[bin, c] : counts) EXPECT_EQ(c, 25) << bin;
}

TEST(Scorer, FlagsFloods) {
    auto d = synthetic_dataset(9, 2000);
    auto scorer = NbFlowScorer::train(d);
    secfn::FlowFeatures flood{5000, 5000 * 300, 7.9, 2, 300};
    secfn::FlowFeatures calm{5, 5 * 200, 4, 60, 200};
    EXPECT_GT(scorer->attack_probability(flood), 0.5);
    EXPECT_LT(scorer->attack_probability(calm), 0.5);
}

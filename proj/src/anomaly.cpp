#include "sentinel/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sentinel/kernels.hpp"

namespace sentinel::anomaly {

using nlohmann::json;

void Dataset::validate() const {
    if (rows.size() != labels.size()) throw Error{Errc::invalid_argument, "row and label counts differ"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != arity()) {
            throw Error{Errc::invalid_argument, "row " + std::to_string(i) + " has arity " +
                                                    std::to_string(rows[i].size()) + ", expected " +
                                                    std::to_string(arity())};
        }
        if (labels[i] != 0 && labels[i] != 1) {
            throw Error{Errc::invalid_argument, "row " + std::to_string(i) + " has label outside {0,1}"};
        }
    }
}

std::vector<int> BinnedDataset::column(std::size_t j) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto &r : rows) out.push_back(r.at(j));
    return out;
}

BinnedDataset BinnedDataset::project(std::span<const std::size_t> features) const {
    BinnedDataset out;
    out.labels = labels;
    for (auto f : features) out.feature_names.push_back(feature_names.at(f));
    out.rows.reserve(rows.size());
    for (const auto &r : rows) {
        std::vector<int> row;
        row.reserve(features.size());
        for (auto f : features) row.push_back(r[f]);
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss{line};
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

Dataset read_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line)) throw Error{Errc::schema, "dataset CSV is empty"};
    auto header = split_line(trim(line));
    std::optional<std::size_t> label_col;
    Dataset d;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "label") {
            label_col = i;
        } else {
            d.feature_names.push_back(header[i]);
        }
    }
    if (!label_col) throw Error{Errc::schema, "dataset CSV has no 'label' column"};
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw Error{Errc::schema, "dataset CSV line " + std::to_string(lineno) + ": expected " +
                                          std::to_string(header.size()) + " cells, got " +
                                          std::to_string(cells.size())};
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        try {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i == *label_col) {
                    double l = std::stod(cells[i]);
                    if (l != 0.0 && l != 1.0) throw Error{Errc::schema, "label must be 0 or 1"};
                    d.labels.push_back(static_cast<int>(l));
                } else {
                    row.push_back(std::stod(cells[i]));
                }
            }
        } catch (const std::logic_error &) {
            throw Error{Errc::schema, "dataset CSV line " + std::to_string(lineno) + ": non-numeric cell"};
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

void write_csv(std::ostream &os, const Dataset &d) {
    for (const auto &n : d.feature_names) os << n << ',';
    os << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        for (double v : d.rows[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << buf << ',';
        }
        os << d.labels[i] << '\n';
    }
}

// ---------------------------------------------------------------- synthetic data

Dataset synthetic_dataset(std::uint64_t seed, std::size_t rows, double attack_fraction) {
    if (attack_fraction < 0.0 || attack_fraction > 1.0) {
        throw Error{Errc::invalid_argument, "attack fraction must lie in [0, 1]"};
    }
    Rng rng{derive_seed(seed, 0xA11)};
    Dataset d;
    d.feature_names = {"packet_rate", "byte_rate", "payload_entropy", "duration", "mean_payload", "noise"};
    const auto attacks = static_cast<std::size_t>(std::llround(static_cast<double>(rows) * attack_fraction));
    std::vector<int> labels(rows, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(attacks), 1);
    for (std::size_t i = rows; i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(labels[i - 1], labels[j]);
    }
    for (int label : labels) {
        double rate, payload, entropy, duration;
        if (label == 1) {
            rate = rng.uniform(150, 2000);
            payload = rng.uniform(40, 600);
            entropy = rng.uniform(0.5, 5);
            duration = rng.uniform(0.1, 30);
        } else {
            rate = rng.uniform(5, 80);
            payload = rng.uniform(200, 1200);
            entropy = rng.uniform(3.5, 7.5);
            duration = rng.uniform(1, 120);
        }
        double bytes = rate * payload * rng.uniform(0.9, 1.1);
        d.rows.push_back({rate, bytes, entropy, duration, payload, rng.uniform01()});
        d.labels.push_back(label);
    }
    return d;
}

std::pair<Dataset, Dataset> split(const Dataset &d, double train_fraction, std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw Error{Errc::invalid_argument, "train fraction must lie in (0, 1)"};
    }
    d.validate();
    std::vector<std::size_t> idx(d.rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng{derive_seed(seed, 0x5B1)};
    for (std::size_t i = idx.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * train_fraction));
    Dataset train, test;
    train.feature_names = test.feature_names = d.feature_names;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto &side = i < n_train ? train : test;
        side.rows.push_back(d.rows[idx[i]]);
        side.labels.push_back(d.labels[idx[i]]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------- binning

Binner Binner::fit(const Dataset &d, int bins) {
    if (bins < 1) throw Error{Errc::invalid_argument, "bin count must be positive"};
    if (d.rows.empty()) throw Error{Errc::invalid_argument, "cannot fit bins on an empty dataset"};
    d.validate();
    Binner b;
    b.names_ = d.feature_names;
    const std::size_t n = d.rows.size();
    for (std::size_t j = 0; j < d.arity(); ++j) {
        std::vector<double> col;
        col.reserve(n);
        for (const auto &r : d.rows) col.push_back(r[j]);
        std::sort(col.begin(), col.end());
        std::vector<double> cuts;
        for (int q = 1; q < bins; ++q) {
            double c = col[static_cast<std::size_t>(q) * n / static_cast<std::size_t>(bins)];
            if (c != col.front() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
        }
        b.cuts_.push_back(std::move(cuts));
    }
    return b;
}

int Binner::bin(std::size_t feature, double value) const {
    const auto &c = cuts_.at(feature);
    return static_cast<int>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

std::vector<int> Binner::transform_row(std::span<const double> row) const {
    if (row.size() != cuts_.size()) {
        throw Error{Errc::invalid_argument, "row arity " + std::to_string(row.size()) + " does not match binner arity " +
                                                std::to_string(cuts_.size())};
    }
    std::vector<int> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = bin(j, row[j]);
    return out;
}

BinnedDataset Binner::transform(const Dataset &d) const {
    d.validate();
    BinnedDataset out;
    out.feature_names = d.feature_names;
    out.labels = d.labels;
    out.rows.reserve(d.rows.size());
    for (const auto &r : d.rows) out.rows.push_back(transform_row(r));
    return out;
}

// ---------------------------------------------------------------- chi-square and selection

double chi_square_score(std::span<const int> column, std::span<const int> labels) {
    if (column.empty()) throw Error{Errc::invalid_argument, "chi-square of an empty column"};
    if (column.size() != labels.size()) throw Error{Errc::invalid_argument, "column and labels differ in length"};
    std::map<int, std::array<double, 2>> table;
    std::array<double, 2> label_total{};
    for (std::size_t i = 0; i < column.size(); ++i) {
        int l = labels[i];
        if (l != 0 && l != 1) throw Error{Errc::invalid_argument, "labels must be 0 or 1"};
        table[column[i]][static_cast<std::size_t>(l)] += 1.0;
        label_total[static_cast<std::size_t>(l)] += 1.0;
    }
    const double n = static_cast<double>(column.size());
    double chi = 0.0;
    for (const auto &[value, counts] : table) {
        const double row_total = counts[0] + counts[1];
        for (std::size_t c = 0; c < 2; ++c) {
            double expected = row_total * label_total[c] / n;
            if (expected == 0.0) continue;
            double diff = counts[c] - expected;
            chi += diff * diff / expected;
        }
    }
    return chi;
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

namespace {

double nb_accuracy(const BinnedDataset &train, const BinnedDataset &test) {
    auto model = train_nb(train);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
        if (model.predict(test.rows[i]).first == test.labels[i]) ++ok;
    }
    return test.rows.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(test.rows.size());
}

} // namespace

std::vector<std::size_t> elimination_ranking(const BinnedDataset &d, std::vector<std::size_t> candidates) {
    // deterministic held-out partition: every third row validates
    BinnedDataset train, held;
    train.feature_names = held.feature_names = d.feature_names;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        auto &side = i % 3 == 2 ? held : train;
        side.rows.push_back(d.rows[i]);
        side.labels.push_back(d.labels[i]);
    }
    const bool both = std::count(train.labels.begin(), train.labels.end(), 1) > 0 &&
                      std::count(train.labels.begin(), train.labels.end(), 0) > 0;
    if (!both || held.rows.empty()) return candidates;

    std::vector<std::size_t> eliminated;
    while (candidates.size() > 1) {
        std::size_t drop_pos = 0;
        double best = -1.0;
        for (std::size_t p = 0; p < candidates.size(); ++p) {
            std::vector<std::size_t> rest;
            for (std::size_t q = 0; q < candidates.size(); ++q) {
                if (q != p) rest.push_back(candidates[q]);
            }
            double acc = nb_accuracy(train.project(rest), held.project(rest));
            // ties remove the higher feature index so lower indices survive
            if (acc > best || (acc == best && candidates[p] > candidates[drop_pos])) {
                best = acc;
                drop_pos = p;
            }
        }
        eliminated.push_back(candidates[drop_pos]);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(drop_pos));
    }
    std::vector<std::size_t> ranking{candidates.front()};
    ranking.insert(ranking.end(), eliminated.rbegin(), eliminated.rend());
    return ranking;
}

std::vector<std::size_t> select_features(const BinnedDataset &d, SelectMethod method, std::size_t k) {
    if (k < 1 || k > d.arity()) {
        throw Error{Errc::invalid_argument, "k=" + std::to_string(k) + " outside [1, " + std::to_string(d.arity()) + "]"};
    }
    auto scores = kernels::chi_square_scores(d, kernels::Execution::parallel);
    auto chi_rank = rank_by_score(scores);
    std::vector<std::size_t> chosen;
    if (method == SelectMethod::chi_square) {
        chosen.assign(chi_rank.begin(), chi_rank.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
        const std::size_t m = std::min(2 * k, d.arity());
        std::vector<std::size_t> candidates(chi_rank.begin(), chi_rank.begin() + static_cast<std::ptrdiff_t>(m));
        auto elim = elimination_ranking(d, candidates);
        std::map<std::size_t, std::size_t> rank_sum;
        for (std::size_t p = 0; p < candidates.size(); ++p) rank_sum[candidates[p]] += p;
        for (std::size_t p = 0; p < elim.size(); ++p) rank_sum[elim[p]] += p;
        std::vector<std::pair<std::size_t, std::size_t>> order; // (sum, index)
        for (const auto &[f, s] : rank_sum) order.emplace_back(s, f);
        std::sort(order.begin(), order.end());
        for (std::size_t i = 0; i < k; ++i) chosen.push_back(order[i].second);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

// ---------------------------------------------------------------- Naive Bayes

NbModel train_nb(const BinnedDataset &d) {
    if (d.rows.empty()) throw Error{Errc::invalid_argument, "cannot train on an empty dataset"};
    NbModel m;
    m.values_.resize(d.arity());
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        const auto &row = d.rows[i];
        if (row.size() != d.arity()) throw Error{Errc::invalid_argument, "training row arity mismatch"};
        auto c = static_cast<std::size_t>(d.labels[i]);
        if (c > 1) throw Error{Errc::invalid_argument, "labels must be 0 or 1"};
        ++m.class_count_[c];
        for (std::size_t j = 0; j < row.size(); ++j) ++m.values_[j][row[j]][c];
    }
    if (m.class_count_[0] == 0 || m.class_count_[1] == 0) {
        throw Error{Errc::invalid_argument, "training set must contain both classes"};
    }
    const double n = static_cast<double>(d.rows.size());
    for (std::size_t c = 0; c < 2; ++c) m.log_prior_[c] = std::log(static_cast<double>(m.class_count_[c]) / n);
    return m;
}

std::array<double, 2> NbModel::posterior(std::span<const int> row) const {
    if (row.size() != values_.size()) {
        throw Error{Errc::invalid_argument, "row arity " + std::to_string(row.size()) + " does not match model arity " +
                                                std::to_string(values_.size())};
    }
    std::array<double, 2> lp = log_prior_;
    for (std::size_t j = 0; j < row.size(); ++j) {
        const auto &vals = values_[j];
        auto it = vals.find(row[j]);
        if (it == vals.end()) continue;
        const double k = static_cast<double>(vals.size());
        for (std::size_t c = 0; c < 2; ++c) {
            lp[c] += std::log((static_cast<double>(it->second[c]) + 1.0) / (static_cast<double>(class_count_[c]) + k));
        }
    }
    const double mx = std::max(lp[0], lp[1]);
    double e0 = std::exp(lp[0] - mx), e1 = std::exp(lp[1] - mx);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

std::pair<int, double> NbModel::predict(std::span<const int> row) const {
    auto p = posterior(row);
    int label;
    if (p[1] > p[0]) {
        label = 1;
    } else if (p[0] > p[1]) {
        label = 0;
    } else {
        label = class_count_[1] > class_count_[0] ? 1 : 0;
    }
    return {label, p[1]};
}

// ---------------------------------------------------------------- decision tree

namespace {

double entropy2(std::size_t a, std::size_t b) {
    const double n = static_cast<double>(a + b);
    double h = 0.0;
    for (auto c : {a, b}) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

} // namespace

DtModel train_dt(const BinnedDataset &d, std::optional<int> max_depth) {
    if (d.rows.empty()) throw Error{Errc::invalid_argument, "cannot train on an empty dataset"};
    if (max_depth && *max_depth < 0) throw Error{Errc::invalid_argument, "max_depth must be non-negative"};
    for (const auto &r : d.rows) {
        if (r.size() != d.arity()) throw Error{Errc::invalid_argument, "training row arity mismatch"};
    }
    DtModel m;
    m.arity_ = d.arity();

    struct Work {
        int node;
        std::vector<std::size_t> rows;
    };
    std::vector<Work> stack;
    m.nodes_.push_back({});
    std::vector<std::size_t> all(d.rows.size());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({0, std::move(all)});

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        std::array<std::size_t, 2> counts{};
        for (auto i : w.rows) ++counts[static_cast<std::size_t>(d.labels[i])];
        {
            auto &node = m.nodes_[static_cast<std::size_t>(w.node)];
            node.counts = counts;
            node.label = counts[1] > counts[0] ? 1 : 0;
        }
        const int depth = m.nodes_[static_cast<std::size_t>(w.node)].depth;
        if (counts[0] == 0 || counts[1] == 0) continue;
        if (max_depth && depth >= *max_depth) continue;

        const double parent_h = entropy2(counts[0], counts[1]);
        const double n = static_cast<double>(w.rows.size());
        int best_feature = -1;
        double best_ratio = -1.0;
        for (std::size_t j = 0; j < d.arity(); ++j) {
            std::map<int, std::array<std::size_t, 2>> parts;
            for (auto i : w.rows) ++parts[d.rows[i][j]][static_cast<std::size_t>(d.labels[i])];
            if (parts.size() < 2) continue;
            double child_h = 0.0, split_info = 0.0;
            for (const auto &[v, c] : parts) {
                double p = static_cast<double>(c[0] + c[1]) / n;
                child_h += p * entropy2(c[0], c[1]);
                split_info -= p * std::log2(p);
            }
            double ratio = std::max(0.0, parent_h - child_h) / split_info;
            if (ratio > best_ratio + 1e-12) {
                best_ratio = ratio;
                best_feature = static_cast<int>(j);
            }
        }
        if (best_feature < 0) continue;

        std::map<int, std::vector<std::size_t>> parts;
        for (auto i : w.rows) parts[d.rows[i][static_cast<std::size_t>(best_feature)]].push_back(i);
        m.nodes_[static_cast<std::size_t>(w.node)].feature = best_feature;
        for (auto &[v, rows] : parts) {
            DtModel::Node child;
            child.depth = depth + 1;
            m.nodes_.push_back(child);
            const int id = static_cast<int>(m.nodes_.size() - 1);
            m.nodes_[static_cast<std::size_t>(w.node)].children[v] = id;
            stack.push_back({id, std::move(rows)});
        }
    }
    return m;
}

const DtModel::Node &DtModel::leaf_for(std::span<const int> row) const {
    if (row.size() != arity_) {
        throw Error{Errc::invalid_argument, "row arity " + std::to_string(row.size()) + " does not match model arity " +
                                                std::to_string(arity_)};
    }
    const Node *n = &nodes_.at(0);
    while (n->feature >= 0) {
        auto it = n->children.find(row[static_cast<std::size_t>(n->feature)]);
        if (it == n->children.end()) break;
        n = &nodes_[static_cast<std::size_t>(it->second)];
    }
    return *n;
}

int DtModel::predict(std::span<const int> row) const { return leaf_for(row).label; }

double DtModel::score(std::span<const int> row) const {
    const auto &n = leaf_for(row);
    return static_cast<double>(n.counts[1]) / static_cast<double>(n.counts[0] + n.counts[1]);
}

int DtModel::depth() const {
    int d = 0;
    for (const auto &n : nodes_) d = std::max(d, n.depth);
    return d;
}

// ---------------------------------------------------------------- metrics

EvalMetrics evaluate(const PredictFn &predict, const BinnedDataset &test) {
    if (test.rows.empty()) throw Error{Errc::invalid_argument, "cannot evaluate on an empty test set"};
    EvalMetrics m;
    std::vector<std::pair<double, int>> scored;
    bool all_scored = true;
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
        auto p = predict(test.rows[i]);
        const int truth = test.labels[i];
        if (truth == 1) {
            (p.label == 1 ? m.tp : m.fn)++;
        } else {
            (p.label == 1 ? m.fp : m.tn)++;
        }
        if (p.score) {
            scored.emplace_back(*p.score, truth);
        } else {
            all_scored = false;
        }
    }
    const double n = static_cast<double>(test.rows.size());
    m.accuracy = 100.0 * static_cast<double>(m.tp + m.tn) / n;
    const std::size_t pos = m.tp + m.fn, neg = m.tn + m.fp;
    if (pos > 0) {
        m.tpr = 100.0 * static_cast<double>(m.tp) / static_cast<double>(pos);
        m.fnr = 100.0 * static_cast<double>(m.fn) / static_cast<double>(pos);
    }
    if (neg > 0) {
        m.tnr = 100.0 * static_cast<double>(m.tn) / static_cast<double>(neg);
        m.fpr = 100.0 * static_cast<double>(m.fp) / static_cast<double>(neg);
    }
    if (all_scored && pos > 0 && neg > 0) {
        std::stable_sort(scored.begin(), scored.end(), [](const auto &a, const auto &b) { return a.first > b.first; });
        m.roc.emplace_back(0.0, 0.0);
        std::size_t tp = 0, fp = 0;
        double auc = 0.0;
        for (std::size_t i = 0; i < scored.size();) {
            std::size_t j = i;
            while (j < scored.size() && scored[j].first == scored[i].first) {
                (scored[j].second == 1 ? tp : fp)++;
                ++j;
            }
            double x = static_cast<double>(fp) / static_cast<double>(neg);
            double y = static_cast<double>(tp) / static_cast<double>(pos);
            const auto &[px, py] = m.roc.back();
            auc += (x - px) * (y + py) / 2.0;
            m.roc.emplace_back(x, y);
            i = j;
        }
        m.auc = auc;
    }
    return m;
}

json EvalMetrics::to_json() const {
    auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
    json roc_points = json::array();
    for (const auto &[x, y] : roc) roc_points.push_back({x, y});
    return {{"accuracy", accuracy},
            {"tpr", opt(tpr)},
            {"tnr", opt(tnr)},
            {"fnr", opt(fnr)},
            {"fpr", opt(fpr)},
            {"auc", opt(auc)},
            {"confusion", {{"tp", tp}, {"tn", tn}, {"fp", fp}, {"fn", fn}}},
            {"roc", roc_points}};
}

std::string EvalMetrics::roc_csv() const {
    std::string out = "fpr,tpr\n";
    char buf[64];
    for (const auto &[x, y] : roc) {
        std::snprintf(buf, sizeof buf, "%.9f,%.9f\n", x, y);
        out += buf;
    }
    return out;
}

IdentityCheck check_rate_identities(double tpr, double tnr, double fnr, double fpr, double tol) {
    IdentityCheck c;
    c.tpr_plus_fnr = tpr + fnr;
    c.tnr_plus_fpr = tnr + fpr;
    c.ok = std::abs(c.tpr_plus_fnr - 100.0) <= tol && std::abs(c.tnr_plus_fpr - 100.0) <= tol;
    return c;
}

// ---------------------------------------------------------------- FVF adapter

namespace {

const std::array<const char *, 5> kFlowColumns{"packet_rate", "byte_rate", "payload_entropy", "duration",
                                               "mean_payload"};

} // namespace

std::shared_ptr<NbFlowScorer> NbFlowScorer::train(const Dataset &d) {
    d.validate();
    std::vector<std::size_t> cols;
    for (const auto *name : kFlowColumns) {
        auto it = std::find(d.feature_names.begin(), d.feature_names.end(), name);
        if (it == d.feature_names.end()) {
            throw Error{Errc::schema, std::string{"flow scorer needs column '"} + name + "'"};
        }
        cols.push_back(static_cast<std::size_t>(it - d.feature_names.begin()));
    }
    Dataset sub;
    sub.labels = d.labels;
    for (const auto *name : kFlowColumns) sub.feature_names.emplace_back(name);
    for (const auto &r : d.rows) {
        std::vector<double> row;
        for (auto c : cols) row.push_back(r[c]);
        sub.rows.push_back(std::move(row));
    }
    auto s = std::make_shared<NbFlowScorer>();
    s->binner_ = Binner::fit(sub);
    s->model_ = train_nb(s->binner_.transform(sub));
    return s;
}

double NbFlowScorer::attack_probability(const secfn::FlowFeatures &f) const {
    const std::array<double, 5> row{f.packet_rate, f.byte_rate, f.payload_entropy, f.duration_s, f.mean_payload};
    return model_.posterior(binner_.transform_row(row))[1];
}

} // namespace sentinel::anomaly

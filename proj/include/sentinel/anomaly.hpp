// anomaly.hpp
//
// Classifier subsystem behind the FVF anomaly stage: equal-frequency
// binning, chi-square feature scoring and selection, categorical Naive
// Bayes, a C4.5-style decision tree, and confusion-matrix / ROC metrics.

#ifndef SENTINEL_ANOMALY_HPP
#define SENTINEL_ANOMALY_HPP

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sentinel/common.hpp"
#include "sentinel/secfn.hpp"

namespace sentinel::anomaly {

/// raw numeric dataset; label 1 = attack, 0 = benign
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t arity() const { return feature_names.size(); }
    void validate() const;
};

/// categorical dataset produced by a Binner
struct BinnedDataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<int>> rows;
    std::vector<int> labels;

    std::size_t arity() const { return feature_names.size(); }
    std::vector<int> column(std::size_t j) const;
    BinnedDataset project(std::span<const std::size_t> features) const;
};

/// CSV with a header row of feature names plus a `label` column (0/1)
Dataset read_csv(std::istream &is);
void write_csv(std::ostream &os, const Dataset &d);

/// Seeded flow-feature generator. Columns: packet_rate, byte_rate,
/// payload_entropy, duration, mean_payload, noise. Attack rows come from a
/// shifted flooding distribution; packet_rate has a gap between classes.
Dataset synthetic_dataset(std::uint64_t seed, std::size_t rows = 2000, double attack_fraction = 0.3);

/// Seeded train/test split; every row lands in exactly one side.
std::pair<Dataset, Dataset> split(const Dataset &d, double train_fraction, std::uint64_t seed);

class Binner {
public:
    /// equal-frequency cut points per feature
    static Binner fit(const Dataset &d, int bins = 10);
    BinnedDataset transform(const Dataset &d) const;
    std::vector<int> transform_row(std::span<const double> row) const;
    int bin(std::size_t feature, double value) const;
    const std::vector<std::vector<double>> &cuts() const { return cuts_; }

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cuts_;
};

/// Pearson chi-square over the category x label contingency table.
double chi_square_score(std::span<const int> column, std::span<const int> labels);

enum class SelectMethod { chi_square, ensemble };

/// Selected feature indices in ascending order.
std::vector<std::size_t> select_features(const BinnedDataset &d, SelectMethod method, std::size_t k);

/// Ranking used by selection: indices ordered by descending score, ties by
/// lower index.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

/// Backward elimination ranking of `candidates` by NB held-out accuracy;
/// element 0 is the feature that survived longest.
std::vector<std::size_t> elimination_ranking(const BinnedDataset &d, std::vector<std::size_t> candidates);

// ---------------------------------------------------------------- Naive Bayes

struct Prediction {
    int label{0};
    std::optional<double> score; // P(attack) when the model exposes it
};

class NbModel {
public:
    std::size_t arity() const { return values_.size(); }
    /// (label, P(attack)); throws Error(Errc::invalid_argument) on arity mismatch
    std::pair<int, double> predict(std::span<const int> row) const;
    std::array<double, 2> posterior(std::span<const int> row) const;

private:
    friend NbModel train_nb(const BinnedDataset &d);
    std::array<double, 2> log_prior_{};
    std::array<std::size_t, 2> class_count_{};
    // per feature: value -> counts per class
    std::vector<std::map<int, std::array<std::size_t, 2>>> values_;
};

/// categorical NB with Laplace smoothing alpha = 1; values never seen in
/// training carry no evidence
NbModel train_nb(const BinnedDataset &d);

// ---------------------------------------------------------------- decision tree

class DtModel {
public:
    int predict(std::span<const int> row) const;
    /// fraction of attack rows in the reached node
    double score(std::span<const int> row) const;
    std::size_t node_count() const { return nodes_.size(); }
    int depth() const;
    std::size_t arity() const { return arity_; }

private:
    friend DtModel train_dt(const BinnedDataset &d, std::optional<int> max_depth);
    struct Node {
        int feature{-1};
        std::map<int, int> children;
        int label{0};
        std::array<std::size_t, 2> counts{};
        int depth{0};
    };
    const Node &leaf_for(std::span<const int> row) const;
    std::vector<Node> nodes_;
    std::size_t arity_{0};
};

/// gain-ratio multiway splits on categorical features; nullopt = unlimited depth
DtModel train_dt(const BinnedDataset &d, std::optional<int> max_depth = std::nullopt);

// ---------------------------------------------------------------- metrics

struct EvalMetrics {
    double accuracy{0};
    std::optional<double> tpr, tnr, fnr, fpr; // percentages; null when undefined
    std::vector<std::pair<double, double>> roc; // (fpr, tpr) fractions
    std::optional<double> auc;
    std::size_t tp{0}, tn{0}, fp{0}, fn{0};

    nlohmann::json to_json() const;
    std::string roc_csv() const;
};

using PredictFn = std::function<Prediction(std::span<const int>)>;

EvalMetrics evaluate(const PredictFn &predict, const BinnedDataset &test);

struct IdentityCheck {
    bool ok{false};
    double tpr_plus_fnr{0};
    double tnr_plus_fpr{0};
};

/// tpr + fnr = 100 and tnr + fpr = 100 within `tol` (percentage points)
IdentityCheck check_rate_identities(double tpr, double tnr, double fnr, double fpr, double tol);

// ---------------------------------------------------------------- FVF adapter

/// Naive Bayes over the five live flow features, usable as the FVF model.
class NbFlowScorer : public secfn::FlowScorer {
public:
    /// `d` must contain the columns packet_rate, byte_rate, payload_entropy,
    /// duration and mean_payload
    static std::shared_ptr<NbFlowScorer> train(const Dataset &d);
    double attack_probability(const secfn::FlowFeatures &f) const override;

private:
    Binner binner_;
    NbModel model_;
};

} // namespace sentinel::anomaly

#endif // SENTINEL_ANOMALY_HPP

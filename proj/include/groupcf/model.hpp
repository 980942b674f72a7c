#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groupcf/tabular.hpp"

namespace groupcf {

struct TrainConfig {
    int n_trees = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

// One node of a regression tree, stored flat. Leaves carry `value`; internal
// nodes route x[feature] <= threshold to `left`, else `right`.
struct TreeNode {
    bool leaf = true;
    double value = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(const Instance& x) const;
};

// The black-box binary classifier b(.). Either a gradient-boosted tree
// ensemble trained here, or an explicit probability table for tests whose
// decision boundary must be known exactly. Immutable once built; predict
// calls are safe from concurrent threads.
class Model {
public:
    enum class Kind { BoostedTrees, LookupTable };

    static Model boosted(std::size_t n_features, double initial_score, double learning_rate,
                         std::vector<RegressionTree> trees, TrainConfig config);
    static Model lookup_table(std::size_t n_features,
                              std::map<std::vector<double>, std::array<double, 2>> table);

    Kind kind() const { return kind_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t tree_count() const { return trees_.size(); }
    double initial_score() const { return initial_score_; }
    const TrainConfig& train_config() const { return config_; }
    const std::map<std::vector<double>, std::array<double, 2>>& table() const { return table_; }

    // Rows of the source data file the model was trained on; empty when the
    // whole file is the training data. Carried through save/load so later
    // commands can rebuild the exact training subset.
    const std::vector<std::size_t>& train_rows() const { return train_rows_; }
    void set_train_rows(std::vector<std::size_t> rows) { train_rows_ = std::move(rows); }

    std::array<double, 2> predict_proba(const Instance& x) const;
    int predict(const Instance& x) const;

    // Boosted margin using only the first `max_trees` rounds; used by the
    // staged-loss checks. max_trees beyond the ensemble size means all trees.
    double margin(const Instance& x, std::size_t max_trees) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);
    std::string to_json_text() const;
    static Model from_json_text(const std::string& text);

private:
    Model() = default;

    Kind kind_ = Kind::BoostedTrees;
    std::size_t n_features_ = 0;
    // boosted
    double initial_score_ = 0.0;
    double learning_rate_ = 0.0;
    std::vector<RegressionTree> trees_;
    TrainConfig config_;
    // lookup
    std::map<std::vector<double>, std::array<double, 2>> table_;

    std::vector<std::size_t> train_rows_;
};

Model train_boosted(const Dataset& train, const TrainConfig& config);

// Fraction of rows whose predicted class matches the dataset label.
double accuracy(const Model& model, const Dataset& data);

double sigmoid(double z);

}  // namespace groupcf

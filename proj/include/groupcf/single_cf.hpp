#pragma once

#include <cstdint>
#include <optional>

#include "groupcf/metrics.hpp"
#include "groupcf/model.hpp"
#include "groupcf/tabular.hpp"

namespace groupcf {

struct Counterfactual {
    Instance query;
    std::optional<std::size_t> query_row;
    ChangeMap changes;
    int target_class = 0;
    bool valid = false;
    double proximity = 0.0;
    std::size_t sparsity = 0;
};

struct CfSearchConfig {
    std::size_t n_samples = 1000;
    double sparsity_param = 0.1;       // quantile below which continuous changes may be reverted
    double stopping_threshold = 0.5;   // minimum target-class probability for validity
    std::uint64_t seed = 0;
    std::size_t max_features_changed = 0;  // 0 means all actionable features
    // Fixed-sparsity search: every candidate changes exactly this many
    // features and the revert pass is skipped, so valid results keep this
    // sparsity. 0 disables. Used by the matched study materials.
    std::size_t exact_features_changed = 0;

    void validate() const;
};

Instance apply_changes(const Instance& query, const ChangeMap& changes);

// Random-sampling search: each candidate redraws a random subset of actionable
// features from the training ranges; the lowest-proximity candidate reaching
// the stopping threshold wins and is then sparsified. Returns valid=false with
// the highest-probability attempt when nothing reaches the threshold.
Counterfactual generate_single_cf(const Model& model, const Instance& query, int target,
                                  const FeatureSchema& schema, const FeatureStats& stats,
                                  const CfSearchConfig& config);

// Greedily reverts changed features back to the query value, smallest
// MAD-scaled change first, keeping a revert only while the target probability
// stays at or above the stopping threshold. Continuous changes above the
// sparsity_param quantile of the candidate's scaled changes are exempt.
Counterfactual posthoc_sparsify(const Model& model, const Instance& query,
                                const Counterfactual& candidate, const FeatureSchema& schema,
                                const FeatureStats& stats, const CfSearchConfig& config);

}  // namespace groupcf

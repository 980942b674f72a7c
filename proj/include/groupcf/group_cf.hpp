#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groupcf/neighbors.hpp"
#include "groupcf/single_cf.hpp"

namespace groupcf {

enum class Direction { Increase, Decrease, None };

// The features most frequently changed by the pool's individual
// counterfactuals, with the majority change direction per continuous feature.
struct KeyFeatureSet {
    std::vector<std::size_t> features;  // ordered by votes desc, then feature index
    std::map<std::size_t, Direction> directions;
    std::map<std::size_t, std::size_t> vote_table;
    std::size_t singles_total = 0;
    std::size_t singles_ok = 0;
};

// Contrast-class training rows from which substitution values are sampled.
struct Region {
    int target_class = 0;
    std::vector<std::size_t> rows;  // indices into the training dataset
    std::string filter_desc;
    bool fallback_unfiltered = false;
};

struct CandidateSubstitution {
    std::map<std::size_t, double> values;  // key feature -> encoded value
    std::string origin;                    // "row:<n>" or "medoid:<i>"
};

struct CandidateScore {
    CandidateSubstitution candidate;
    double coverage = 0.0;
    double mean_proximity = 0.0;  // over covered instances
    std::size_t draw_index = 0;
};

struct GroupCounterfactual {
    ExplanationPool pool;
    KeyFeatureSet key_features;
    CandidateSubstitution substitution;
    std::vector<bool> per_instance_valid;  // slot 0 is the query
    double coverage = 0.0;
    int target_class = 0;
    std::vector<double> proximity_per_instance;
    std::vector<ChangeMap> changes_per_instance;  // effective edits per slot
    Region region;
    std::vector<CandidateScore> trace;  // filled only when tracing
};

enum class SamplingMode { Rows, Medoids };

struct GroupConfig {
    std::size_t pool_size = 5;  // counting the query
    std::size_t k = 2;          // key features
    CfSearchConfig cf;          // individual-counterfactual search settings
    std::size_t candidate_budget = 100;  // rows mode
    std::size_t k_medoids = 5;           // medoids mode
    SamplingMode mode = SamplingMode::Rows;
    std::uint64_t seed = 0;
    bool trace = false;

    void validate() const;
};

// One individual counterfactual per pool slot (query first), each with a
// substream seed derived from `base_seed`.
std::vector<Counterfactual> pool_singles(const Model& model, const ExplanationPool& pool,
                                         int target, const FeatureSchema& schema,
                                         const FeatureStats& stats, const CfSearchConfig& config,
                                         std::uint64_t base_seed);

KeyFeatureSet identify_key_features(const std::vector<Counterfactual>& singles,
                                    const FeatureSchema& schema, std::size_t k);

// Convenience form running the singles itself.
KeyFeatureSet identify_key_features(const Model& model, const ExplanationPool& pool,
                                    const FeatureSchema& schema, const FeatureStats& stats,
                                    const CfSearchConfig& config, std::size_t k,
                                    std::uint64_t base_seed);

Region build_region(const Dataset& train, const Model& model, int target,
                    const KeyFeatureSet& keys, const ExplanationPool& pool,
                    const FeatureSchema& schema);

struct MedoidDim {
    bool categorical = false;
    double scale = 1.0;  // MAD for continuous dims
};

// PAM: greedy build then swap phase; returns medoid indices into `points`.
// Deterministic; ties resolve to the lowest index.
std::vector<std::size_t> kmedoids(const std::vector<std::vector<double>>& points,
                                  const std::vector<MedoidDim>& dims, std::size_t k,
                                  std::uint64_t seed);

std::vector<CandidateSubstitution> sample_candidates(const Dataset& train, const Region& region,
                                                     const KeyFeatureSet& keys,
                                                     const GroupConfig& config,
                                                     const FeatureStats& stats,
                                                     const FeatureSchema& schema);

Instance substitute(const Instance& instance, const CandidateSubstitution& candidate);

// Effective edits: key features whose substituted value differs from the
// instance's current value.
ChangeMap effective_changes(const Instance& instance, const CandidateSubstitution& candidate);

std::pair<std::vector<bool>, double> evaluate_candidate(const Model& model,
                                                        const ExplanationPool& pool,
                                                        const CandidateSubstitution& candidate,
                                                        int target);

// Full pipeline for a query instance: pool, singles, key features, region,
// candidates, max-coverage selection.
GroupCounterfactual group_explain(const Model& model, const Dataset& train,
                                  const FeatureStats& stats, const FeatureSchema& schema,
                                  const Instance& query, const GroupConfig& config);

// Same, starting from an existing pool and its individual counterfactuals.
GroupCounterfactual group_explain_pool(const Model& model, const Dataset& train,
                                       const FeatureStats& stats, const FeatureSchema& schema,
                                       const ExplanationPool& pool,
                                       const std::vector<Counterfactual>& singles,
                                       const GroupConfig& config);

}  // namespace groupcf

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "groupcf/model.hpp"
#include "groupcf/tabular.hpp"

namespace groupcf {

// Query plus its nearest like neighbors, everything model-predicted into the
// same class. Total pool size counts the query, so `members.size() + 1`.
struct ExplanationPool {
    Instance query;
    std::size_t query_row = 0;  // row in the originating dataset, when known
    std::vector<Instance> members;
    std::vector<std::size_t> member_rows;
    int cls = 0;

    std::size_t total_size() const { return members.size() + 1; }
    // Pool slot i: 0 is the query, 1.. are the members.
    const Instance& at(std::size_t i) const { return i == 0 ? query : members[i - 1]; }
};

// Count of per-feature mismatches; continuous features mismatch iff their
// quantile-bin indices differ.
std::size_t hamming_distance(const Instance& a, const Instance& b, const FeatureStats& stats);

ExplanationPool nearest_like_neighbors(const Instance& query, const Dataset& train,
                                       const Model& model, const FeatureStats& stats,
                                       std::size_t n_neighbors);

struct Seed {
    std::size_t row = 0;
    Instance instance;
    int cls = 0;
};

// Rows that are correctly classified with |p0 - p1| <= margin, shuffled per
// class with the given seed. The study draws seeds from these streams.
std::array<std::vector<std::size_t>, 2> shuffled_eligible_by_class(const Dataset& dataset,
                                                                   const Model& model,
                                                                   double margin,
                                                                   std::uint64_t seed);

std::vector<Seed> select_seeds(const Dataset& dataset, const Model& model,
                               std::size_t count_per_class, double margin, std::uint64_t seed);

}  // namespace groupcf

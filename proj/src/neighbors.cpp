#include "groupcf/neighbors.hpp"

#include <algorithm>
#include <cmath>

#include "groupcf/rng.hpp"

namespace groupcf {

std::size_t hamming_distance(const Instance& a, const Instance& b, const FeatureStats& stats) {
    if (a.values.size() != b.values.size() || a.values.size() != stats.features.size()) {
        throw SchemaMismatchError("hamming distance over mismatched instance widths");
    }
    std::size_t d = 0;
    for (std::size_t f = 0; f < a.values.size(); ++f) {
        if (stats.features[f].kind == FeatureKind::Categorical) {
            if (a.values[f] != b.values[f]) ++d;
        } else {
            if (stats.bin_index(f, a.values[f]) != stats.bin_index(f, b.values[f])) ++d;
        }
    }
    return d;
}

ExplanationPool nearest_like_neighbors(const Instance& query, const Dataset& train,
                                       const Model& model, const FeatureStats& stats,
                                       std::size_t n_neighbors) {
    const int cls = model.predict(query);

    // (distance, row) in dataset order; stable sort keeps the row-order tie-break.
    std::vector<std::pair<std::size_t, std::size_t>> like;
    for (std::size_t r = 0; r < train.size(); ++r) {
        const Instance& x = train.instances[r];
        if (x == query) continue;  // exclude the query by identity
        if (model.predict(x) != cls) continue;
        like.emplace_back(hamming_distance(query, x, stats), r);
    }
    if (like.size() < n_neighbors) {
        throw InsufficientNeighborsError(like.size(), n_neighbors);
    }
    std::stable_sort(like.begin(), like.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    ExplanationPool pool;
    pool.query = query;
    pool.cls = cls;
    for (std::size_t i = 0; i < n_neighbors; ++i) {
        pool.members.push_back(train.instances[like[i].second]);
        pool.member_rows.push_back(like[i].second);
    }
    return pool;
}

std::array<std::vector<std::size_t>, 2> shuffled_eligible_by_class(const Dataset& dataset,
                                                                   const Model& model,
                                                                   double margin,
                                                                   std::uint64_t seed) {
    if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin must lie in (0,1)");
    std::array<std::vector<std::size_t>, 2> eligible;
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        const auto proba = model.predict_proba(dataset.instances[r]);
        const int pred = proba[1] > proba[0] ? 1 : 0;
        if (pred != dataset.labels[r]) continue;  // correctly classified only
        if (std::abs(proba[0] - proba[1]) > margin) continue;
        eligible[pred].push_back(r);
    }
    Rng rng(seed);
    rng.shuffle(eligible[0]);
    rng.shuffle(eligible[1]);
    return eligible;
}

std::vector<Seed> select_seeds(const Dataset& dataset, const Model& model,
                               std::size_t count_per_class, double margin, std::uint64_t seed) {
    const auto eligible = shuffled_eligible_by_class(dataset, model, margin, seed);
    for (int cls = 0; cls < 2; ++cls) {
        if (eligible[cls].size() < count_per_class) {
            throw InsufficientEligibleError(cls, eligible[cls].size(), count_per_class);
        }
    }
    std::vector<Seed> out;
    for (std::size_t i = 0; i < count_per_class; ++i) {
        for (int cls = 0; cls < 2; ++cls) {
            const std::size_t row = eligible[cls][i];
            out.push_back({row, dataset.instances[row], cls});
        }
    }
    return out;
}

}  // namespace groupcf

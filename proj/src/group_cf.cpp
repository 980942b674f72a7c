#include "groupcf/group_cf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "groupcf/errors.hpp"
#include "groupcf/metrics.hpp"
#include "groupcf/rng.hpp"

namespace groupcf {

void GroupConfig::validate() const {
    if (pool_size < 2) {
        throw ConfigError("pool_size must be at least 2 (query plus one neighbour)");
    }
    if (k < 1) {
        throw ConfigError("k must be at least 1");
    }
    if (candidate_budget < 1) {
        throw ConfigError("candidate_budget must be at least 1");
    }
    if (k_medoids < 1) {
        throw ConfigError("k_medoids must be at least 1");
    }
    cf.validate();
}

std::vector<Counterfactual> pool_singles(const Model& model, const ExplanationPool& pool,
                                         int target, const FeatureSchema& schema,
                                         const FeatureStats& stats, const CfSearchConfig& config,
                                         std::uint64_t base_seed) {
    std::vector<Counterfactual> singles;
    singles.reserve(pool.total_size());
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        CfSearchConfig slot_config = config;
        slot_config.seed = Rng::substream(base_seed, static_cast<std::uint64_t>(slot));
        singles.push_back(
            generate_single_cf(model, pool.at(slot), target, schema, stats, slot_config));
    }
    return singles;
}

KeyFeatureSet identify_key_features(const std::vector<Counterfactual>& singles,
                                    const FeatureSchema& schema, std::size_t k) {
    const auto actionable = schema.actionable_features();
    if (k < 1 || k > actionable.size()) {
        throw ConfigError("k must be between 1 and the number of actionable features");
    }
    const std::set<std::size_t> actionable_set(actionable.begin(), actionable.end());

    KeyFeatureSet keys;
    keys.singles_total = singles.size();
    std::map<std::size_t, long> sign_balance;  // continuous: +1 per increase, -1 per decrease
    for (const auto& cf : singles) {
        if (!cf.valid) {
            continue;
        }
        ++keys.singles_ok;
        for (const auto& [feature, change] : cf.changes) {
            if (actionable_set.count(feature) == 0) {
                continue;
            }
            ++keys.vote_table[feature];
            if (schema.feature(feature).kind == FeatureKind::Continuous) {
                sign_balance[feature] += change.new_value > change.old_value ? 1 : -1;
            }
        }
    }
    if (keys.singles_ok == 0) {
        throw AllSinglesFailedError("no valid individual counterfactual among " +
                                    std::to_string(keys.singles_total) + " pool instances");
    }

    std::vector<std::pair<std::size_t, std::size_t>> ranked(keys.vote_table.begin(),
                                                            keys.vote_table.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    const std::size_t take = std::min(k, ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t feature = ranked[i].first;
        keys.features.push_back(feature);
        if (schema.feature(feature).kind == FeatureKind::Continuous) {
            const long balance = sign_balance[feature];
            keys.directions[feature] = balance > 0   ? Direction::Increase
                                       : balance < 0 ? Direction::Decrease
                                                     : Direction::None;
        }
    }
    return keys;
}

KeyFeatureSet identify_key_features(const Model& model, const ExplanationPool& pool,
                                    const FeatureSchema& schema, const FeatureStats& stats,
                                    const CfSearchConfig& config, std::size_t k,
                                    std::uint64_t base_seed) {
    return identify_key_features(pool_singles(model, pool, pool.cls == 0 ? 1 : 0, schema, stats,
                                              config, base_seed),
                                 schema, k);
}

namespace {

double pool_median(const ExplanationPool& pool, std::size_t feature) {
    std::vector<double> values;
    values.reserve(pool.total_size());
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        values.push_back(pool.at(slot).values[feature]);
    }
    return median_of(values);
}

std::string format_value(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

}  // namespace

Region build_region(const Dataset& train, const Model& model, int target,
                    const KeyFeatureSet& keys, const ExplanationPool& pool,
                    const FeatureSchema& schema) {
    Region region;
    region.target_class = target;

    std::vector<std::size_t> contrast;
    for (std::size_t row = 0; row < train.size(); ++row) {
        if (model.predict(train.instances[row]) == target) {
            contrast.push_back(row);
        }
    }
    if (contrast.empty()) {
        throw EmptyContrastClassError("no training instance is predicted as " +
                                      schema.class_name(target));
    }

    // Directional filter on continuous key features, thresholded at the
    // pool median so substitutions move past the group rather than within it.
    struct Filter {
        std::size_t feature;
        Direction direction;
        double threshold;
    };
    std::vector<Filter> filters;
    std::ostringstream desc;
    for (const std::size_t feature : keys.features) {
        const auto it = keys.directions.find(feature);
        if (it == keys.directions.end() || it->second == Direction::None) {
            continue;
        }
        const double threshold = pool_median(pool, feature);
        filters.push_back({feature, it->second, threshold});
        if (desc.tellp() > 0) {
            desc << "; ";
        }
        desc << schema.feature(feature).name
             << (it->second == Direction::Increase ? " > " : " < ") << format_value(threshold);
    }
    region.filter_desc = filters.empty() ? "unfiltered" : desc.str();

    if (filters.empty()) {
        region.rows = std::move(contrast);
        return region;
    }
    for (const std::size_t row : contrast) {
        bool keep = true;
        for (const auto& f : filters) {
            const double v = train.instances[row].values[f.feature];
            if (f.direction == Direction::Increase ? v <= f.threshold : v >= f.threshold) {
                keep = false;
                break;
            }
        }
        if (keep) {
            region.rows.push_back(row);
        }
    }
    if (region.rows.empty()) {
        region.rows = std::move(contrast);
        region.fallback_unfiltered = true;
        region.filter_desc += " (empty; fell back to unfiltered)";
    }
    return region;
}

namespace {

double dissimilarity(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<MedoidDim>& dims) {
    double total = 0.0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (dims[d].categorical) {
            total += a[d] == b[d] ? 0.0 : 1.0;
        } else {
            total += std::abs(a[d] - b[d]) / dims[d].scale;
        }
    }
    return total;
}

}  // namespace

std::vector<std::size_t> kmedoids(const std::vector<std::vector<double>>& points,
                                  const std::vector<MedoidDim>& dims, std::size_t k,
                                  std::uint64_t /*seed*/) {
    const std::size_t n = points.size();
    if (k < 1 || k > n) {
        throw TooFewPointsError("k-medoids needs 1 <= k <= n, got k=" + std::to_string(k) +
                                " with n=" + std::to_string(n));
    }
    for (const auto& p : points) {
        if (p.size() != dims.size()) {
            throw LengthMismatchError("point width " + std::to_string(p.size()) +
                                      " does not match " + std::to_string(dims.size()) +
                                      " dimensions");
        }
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> medoids;
    std::vector<double> nearest(n, inf);   // distance to the closest medoid
    std::vector<double> second(n, inf);    // distance to the second closest
    std::vector<std::size_t> owner(n, 0);  // index into `medoids`

    auto refresh = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = inf;
            second[i] = inf;
            for (std::size_t m = 0; m < medoids.size(); ++m) {
                const double d = dissimilarity(points[i], points[medoids[m]], dims);
                if (d < nearest[i]) {
                    second[i] = nearest[i];
                    nearest[i] = d;
                    owner[i] = m;
                } else if (d < second[i]) {
                    second[i] = d;
                }
            }
        }
    };

    // Build phase: start from the 1-medoid optimum, then greedily add the
    // point with the largest cost reduction (ties to the lowest index).
    {
        std::size_t best = 0;
        double best_cost = inf;
        for (std::size_t c = 0; c < n; ++c) {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cost += dissimilarity(points[i], points[c], dims);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best = c;
            }
        }
        medoids.push_back(best);
        refresh();
    }
    while (medoids.size() < k) {
        std::size_t best = n;
        double best_gain = -inf;
        for (std::size_t c = 0; c < n; ++c) {
            if (std::find(medoids.begin(), medoids.end(), c) != medoids.end()) {
                continue;
            }
            double gain = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = dissimilarity(points[i], points[c], dims);
                if (d < nearest[i]) {
                    gain += nearest[i] - d;
                }
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        medoids.push_back(best);
        refresh();
    }

    // Swap phase: take the best strictly improving (medoid, candidate) swap
    // until none remains.
    bool improved = true;
    while (improved) {
        improved = false;
        std::size_t best_m = 0;
        std::size_t best_c = 0;
        double best_delta = -1e-12;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            for (std::size_t c = 0; c < n; ++c) {
                if (std::find(medoids.begin(), medoids.end(), c) != medoids.end()) {
                    continue;
                }
                double delta = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dc = dissimilarity(points[i], points[c], dims);
                    if (owner[i] == m) {
                        delta += std::min(dc, second[i]) - nearest[i];
                    } else if (dc < nearest[i]) {
                        delta += dc - nearest[i];
                    }
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    best_m = m;
                    best_c = c;
                    improved = true;
                }
            }
        }
        if (improved) {
            medoids[best_m] = best_c;
            refresh();
        }
    }
    std::sort(medoids.begin(), medoids.end());
    return medoids;
}

namespace {

std::vector<double> project(const Instance& x, const std::vector<std::size_t>& features) {
    std::vector<double> point;
    point.reserve(features.size());
    for (const std::size_t f : features) {
        point.push_back(x.values[f]);
    }
    return point;
}

CandidateSubstitution make_candidate(const std::vector<double>& point,
                                     const std::vector<std::size_t>& features,
                                     std::string origin) {
    CandidateSubstitution candidate;
    for (std::size_t i = 0; i < features.size(); ++i) {
        candidate.values[features[i]] = point[i];
    }
    candidate.origin = std::move(origin);
    return candidate;
}

}  // namespace

std::vector<CandidateSubstitution> sample_candidates(const Dataset& train, const Region& region,
                                                     const KeyFeatureSet& keys,
                                                     const GroupConfig& config,
                                                     const FeatureStats& stats,
                                                     const FeatureSchema& schema) {
    if (region.rows.empty()) {
        throw TooFewPointsError("cannot sample candidates from an empty region");
    }
    std::vector<CandidateSubstitution> candidates;
    std::set<std::vector<double>> seen;

    if (config.mode == SamplingMode::Rows) {
        std::vector<std::size_t> order = region.rows;
        Rng rng(Rng::substream(config.seed, 0));
        rng.shuffle(order);
        const std::size_t take = std::min<std::size_t>(config.candidate_budget, order.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t row = order[i];
            auto point = project(train.instances[row], keys.features);
            if (!seen.insert(point).second) {
                continue;  // identical projection already drawn
            }
            candidates.push_back(
                make_candidate(point, keys.features, "row:" + std::to_string(row)));
        }
        return candidates;
    }

    std::vector<std::vector<double>> points;
    points.reserve(region.rows.size());
    for (const std::size_t row : region.rows) {
        points.push_back(project(train.instances[row], keys.features));
    }
    std::vector<MedoidDim> dims;
    dims.reserve(keys.features.size());
    for (const std::size_t f : keys.features) {
        MedoidDim dim;
        dim.categorical = schema.feature(f).kind == FeatureKind::Categorical;
        dim.scale = dim.categorical ? 1.0 : stats.scale(f);
        dims.push_back(dim);
    }
    const std::size_t k = std::min<std::size_t>(config.k_medoids, points.size());
    for (const std::size_t idx : kmedoids(points, dims, k, Rng::substream(config.seed, 0))) {
        if (!seen.insert(points[idx]).second) {
            continue;
        }
        candidates.push_back(make_candidate(points[idx], keys.features,
                                            "medoid:row:" + std::to_string(region.rows[idx])));
    }
    return candidates;
}

Instance substitute(const Instance& instance, const CandidateSubstitution& candidate) {
    Instance out = instance;
    for (const auto& [feature, value] : candidate.values) {
        out.values[feature] = value;
    }
    return out;
}

ChangeMap effective_changes(const Instance& instance, const CandidateSubstitution& candidate) {
    ChangeMap changes;
    for (const auto& [feature, value] : candidate.values) {
        if (instance.values[feature] != value) {
            changes[feature] = FeatureChange{instance.values[feature], value};
        }
    }
    return changes;
}

std::pair<std::vector<bool>, double> evaluate_candidate(const Model& model,
                                                        const ExplanationPool& pool,
                                                        const CandidateSubstitution& candidate,
                                                        int target) {
    std::vector<bool> valid(pool.total_size(), false);
    std::size_t covered = 0;
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        if (model.predict(substitute(pool.at(slot), candidate)) == target) {
            valid[slot] = true;
            ++covered;
        }
    }
    return {valid, static_cast<double>(covered) / static_cast<double>(pool.total_size())};
}

GroupCounterfactual group_explain_pool(const Model& model, const Dataset& train,
                                       const FeatureStats& stats, const FeatureSchema& schema,
                                       const ExplanationPool& pool,
                                       const std::vector<Counterfactual>& singles,
                                       const GroupConfig& config) {
    config.validate();
    const int target = pool.cls == 0 ? 1 : 0;

    GroupCounterfactual result;
    result.pool = pool;
    result.target_class = target;
    result.key_features = identify_key_features(singles, schema, config.k);
    result.region = build_region(train, model, target, result.key_features, pool, schema);

    const auto candidates =
        sample_candidates(train, result.region, result.key_features, config, stats, schema);

    std::vector<CandidateScore> scores;
    scores.reserve(candidates.size());
    std::size_t best = candidates.size();
    std::vector<bool> best_valid;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        auto [valid, coverage] = evaluate_candidate(model, pool, candidates[j], target);
        double total_proximity = 0.0;
        std::size_t covered = 0;
        for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
            if (!valid[slot]) {
                continue;
            }
            ++covered;
            total_proximity +=
                proximity(effective_changes(pool.at(slot), candidates[j]), stats, schema).total;
        }
        CandidateScore score;
        score.candidate = candidates[j];
        score.coverage = coverage;
        score.mean_proximity = covered == 0 ? 0.0 : total_proximity / covered;
        score.draw_index = j;
        const bool wins =
            best == candidates.size() || score.coverage > scores[best].coverage ||
            (score.coverage == scores[best].coverage &&
             score.mean_proximity < scores[best].mean_proximity);
        scores.push_back(score);
        if (wins) {
            best = j;
            best_valid = std::move(valid);
        }
    }
    if (best == candidates.size() || scores[best].coverage == 0.0) {
        std::ostringstream what;
        what << "none of " << candidates.size()
             << " candidate substitutions flips any pool instance (region size "
             << result.region.rows.size() << "; votes:";
        for (const auto& [feature, count] : result.key_features.vote_table) {
            what << ' ' << schema.feature(feature).name << '=' << count;
        }
        what << ')';
        throw NoValidCandidateError(what.str());
    }

    result.substitution = candidates[best];
    result.per_instance_valid = best_valid;
    result.coverage = scores[best].coverage;
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        auto changes = effective_changes(pool.at(slot), result.substitution);
        result.proximity_per_instance.push_back(proximity(changes, stats, schema).total);
        result.changes_per_instance.push_back(std::move(changes));
    }
    if (config.trace) {
        std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            return a.coverage > b.coverage;
        });
        result.trace = std::move(scores);
    }
    return result;
}

GroupCounterfactual group_explain(const Model& model, const Dataset& train,
                                  const FeatureStats& stats, const FeatureSchema& schema,
                                  const Instance& query, const GroupConfig& config) {
    config.validate();
    const auto pool =
        nearest_like_neighbors(query, train, model, stats, config.pool_size - 1);
    const auto singles = pool_singles(model, pool, pool.cls == 0 ? 1 : 0, schema, stats,
                                      config.cf, Rng::substream(config.seed, 1));
    return group_explain_pool(model, train, stats, schema, pool, singles, config);
}

}  // namespace groupcf

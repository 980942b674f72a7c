#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groupcf/group_cf.hpp"

namespace groupcf {

struct StudyConfig {
    std::size_t n_sets = 8;
    std::size_t pool_size = 5;  // items per set, counting the seed
    std::size_t k = 2;
    double margin = 0.15;
    std::uint64_t seed = 0;
    std::size_t target_sparsity = 2;  // enforced on singles and group edits alike
    std::size_t redraw_factor = 10;   // seed-draw bound = redraw_factor * n_sets
    std::size_t single_retries = 8;   // reseeds per item to hit the target sparsity
    CfSearchConfig cf;
    std::size_t candidate_budget = 100;
    std::size_t k_medoids = 5;
    SamplingMode mode = SamplingMode::Rows;

    void validate() const;
};

struct ItemSet {
    std::size_t set_id = 0;
    std::size_t seed_row = 0;
    ExplanationPool pool;  // slot 0 is the seed instance
    std::vector<Counterfactual> singles;
    GroupCounterfactual group;
    std::vector<std::string> item_ids;  // "s<set>i<slot>"
    std::vector<std::string> names;
    std::vector<std::string> single_texts;
    std::vector<std::string> group_texts;
    std::vector<std::string> hint_texts;
};

struct MatchReport {
    std::vector<double> single_proximity;  // one entry per item, set-major order
    std::vector<double> group_proximity;
    std::vector<std::size_t> single_sparsity;
    std::vector<std::size_t> group_sparsity;
    TTestResult ttest;  // paired, single vs group proximity
    bool p_above_05 = false;
    bool sparsity_all_equal = false;
    std::size_t n_items = 0;
    std::size_t attempts = 0;  // seeds drawn, including discarded ones
};

struct StudyResult {
    std::vector<ItemSet> sets;
    MatchReport report;
};

StudyResult build_item_sets(const Dataset& train, const Model& model, const FeatureStats& stats,
                            const StudyConfig& config);

// Fixed bundled name list, keyed by global item index.
struct PersonRef {
    std::string name;
    std::string pronoun;
};
PersonRef study_person(std::size_t item_index);

// Number rendering without trailing zeros ("45", "37.5").
std::string format_number(double value);

// "t(39)=1.30, p=.197"
std::string ttest_summary(const TTestResult& result);

// "If {name}'s {Feature} had been {value} and {Feature} had been {value},
// {pronoun} would have earned {class}." Features follow schema order.
std::string render_explanation(const Counterfactual& cf, const FeatureSchema& schema,
                               const PersonRef& person);
// Group styles render the slot's effective edits; hint=true prepends the
// similar-group sentence.
std::string render_explanation(const GroupCounterfactual& group, std::size_t slot,
                               const FeatureSchema& schema, const PersonRef& person, bool hint);

// Serialized item-set document body (no format_version/config envelope).
std::string item_sets_to_json_text(const StudyResult& result, const FeatureSchema& schema);

// The slice of an item-set file that verification and gap scoring need.
struct LoadedStudy {
    std::vector<std::size_t> set_ids;
    std::vector<std::vector<std::string>> set_item_ids;
    std::vector<double> set_coverage;
    std::vector<double> single_proximity;  // flattened, set-major
    std::vector<double> group_proximity;
    std::vector<std::size_t> single_sparsity;
    std::vector<std::size_t> group_sparsity;
    TTestResult stored_ttest;
    bool stored_p_above_05 = false;
};
LoadedStudy load_item_sets(const std::string& path);

}  // namespace groupcf

#include "groupcf/study.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "groupcf/errors.hpp"
#include "groupcf/neighbors.hpp"
#include "groupcf/rng.hpp"

namespace groupcf {

void StudyConfig::validate() const {
    if (n_sets < 1) throw ConfigError("n_sets must be at least 1");
    if (pool_size < 2) throw ConfigError("pool_size must be at least 2");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (margin <= 0.0 || margin >= 1.0) throw ConfigError("margin must be in (0, 1)");
    if (target_sparsity < 1) throw ConfigError("target_sparsity must be at least 1");
    if (redraw_factor < 1) throw ConfigError("redraw_factor must be at least 1");
    if (single_retries < 1) throw ConfigError("single_retries must be at least 1");
    if (candidate_budget < 1) throw ConfigError("candidate_budget must be at least 1");
    if (k_medoids < 1) throw ConfigError("k_medoids must be at least 1");
    cf.validate();
}

PersonRef study_person(std::size_t item_index) {
    static const std::vector<PersonRef> people = {
        {"Tom", "he"},    {"Mary", "she"},  {"Joe", "he"},    {"John", "he"},
        {"Sarah", "she"}, {"Tim", "he"},    {"Anna", "she"},  {"Mark", "he"},
        {"Lucy", "she"},  {"Paul", "he"},   {"Emma", "she"},  {"David", "he"},
        {"Claire", "she"},{"James", "he"},  {"Rosa", "she"},  {"Peter", "he"},
        {"Nina", "she"},  {"Alex", "he"},   {"Grace", "she"}, {"Sam", "he"},
        {"Julia", "she"}, {"Henry", "he"},  {"Ivy", "she"},   {"Oscar", "he"},
        {"Ruth", "she"},  {"Leo", "he"},    {"Carmen", "she"},{"Frank", "he"},
        {"Alice", "she"}, {"Victor", "he"}, {"Maya", "she"},  {"Simon", "he"},
        {"Dora", "she"},  {"Ralph", "he"},  {"Elena", "she"}, {"Bruno", "he"},
        {"Iris", "she"},  {"Kevin", "he"},  {"Paula", "she"}, {"Martin", "he"},
    };
    return people[item_index % people.size()];
}

std::string format_number(double value) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::string ttest_summary(const TTestResult& result) {
    char t_buf[32];
    std::snprintf(t_buf, sizeof(t_buf), "%.2f", result.t);
    std::string p;
    if (result.p_two_tailed < 0.0005) {
        p = "p<.001";
    } else {
        char p_buf[16];
        std::snprintf(p_buf, sizeof(p_buf), "%.3f", result.p_two_tailed);
        p = p_buf;
        if (p[0] == '0') p.erase(0, 1);  // ".197" convention
        p = "p=" + p;
    }
    return "t(" + std::to_string(result.df) + ")=" + t_buf + ", " + p;
}

namespace {

std::string render_value(const FeatureSchema& schema, std::size_t feature, double value) {
    if (schema.feature(feature).kind == FeatureKind::Categorical) {
        return schema.category_name(feature, static_cast<std::size_t>(value));
    }
    return format_number(value);
}

std::string lowercase_head(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

std::string render_sentence(const ChangeMap& changes, int target, const FeatureSchema& schema,
                            const PersonRef& person) {
    std::vector<std::string> clauses;
    for (const auto& [feature, change] : changes) {  // ChangeMap keeps schema order
        clauses.push_back(schema.feature(feature).name + " had been " +
                          render_value(schema, feature, change.new_value));
    }
    std::string joined;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        if (i > 0) joined += i + 1 == clauses.size() ? " and " : ", ";
        joined += clauses[i];
    }
    return "If " + person.name + "'s " + joined + ", " + person.pronoun +
           " would have earned " + lowercase_head(schema.class_name(target)) + ".";
}

}  // namespace

std::string render_explanation(const Counterfactual& cf, const FeatureSchema& schema,
                               const PersonRef& person) {
    if (!cf.valid || cf.changes.empty()) {
        throw InvalidCounterfactualError("cannot render an invalid counterfactual");
    }
    return render_sentence(cf.changes, cf.target_class, schema, person);
}

std::string render_explanation(const GroupCounterfactual& group, std::size_t slot,
                               const FeatureSchema& schema, const PersonRef& person, bool hint) {
    if (slot >= group.per_instance_valid.size() || !group.per_instance_valid[slot] ||
        group.changes_per_instance[slot].empty()) {
        throw InvalidCounterfactualError("group counterfactual does not cover this instance");
    }
    std::string text =
        render_sentence(group.changes_per_instance[slot], group.target_class, schema, person);
    if (hint) {
        text = person.name + " is part of a group of people with similar characteristics. " +
               text;
    }
    return text;
}

namespace {

// One attempt at a full item set from the given seed row; empty when the
// draw fails any of the study's keep conditions. Neighbors come from the
// correctly-classified rows only — every item shown to a participant must
// carry a correct classification — while the substitution region still uses
// the full training data.
std::optional<ItemSet> try_build_set(const Dataset& train, const Dataset& correct,
                                     const std::vector<std::size_t>& correct_rows,
                                     const Model& model, const FeatureStats& stats,
                                     const StudyConfig& config, std::size_t seed_row,
                                     std::size_t seed_row_in_correct,
                                     std::uint64_t attempt_seed) {
    const FeatureSchema& schema = train.schema;
    auto pool = nearest_like_neighbors(correct.instances[seed_row_in_correct], correct, model,
                                       stats, config.pool_size - 1);
    pool.query_row = seed_row;
    for (auto& row : pool.member_rows) row = correct_rows[row];  // back to train rows
    const int target = pool.cls == 0 ? 1 : 0;

    // Individual counterfactuals, reseeded until each hits the target
    // sparsity; the sparsity constraint is part of the study design.
    std::vector<Counterfactual> singles;
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        CfSearchConfig cf_config = config.cf;
        cf_config.exact_features_changed = config.target_sparsity;
        std::optional<Counterfactual> kept;
        for (std::size_t retry = 0; retry < config.single_retries; ++retry) {
            cf_config.seed = Rng::substream(attempt_seed, slot * 64 + retry);
            auto cf = generate_single_cf(model, pool.at(slot), target, schema, stats, cf_config);
            if (cf.valid && cf.sparsity == config.target_sparsity) {
                kept = std::move(cf);
                break;
            }
        }
        if (!kept) return std::nullopt;
        singles.push_back(std::move(*kept));
    }

    GroupConfig group_config;
    group_config.pool_size = config.pool_size;
    group_config.k = config.k;
    group_config.cf = config.cf;
    group_config.candidate_budget = config.candidate_budget;
    group_config.k_medoids = config.k_medoids;
    group_config.mode = config.mode;
    group_config.seed = Rng::substream(attempt_seed, 4099);

    ItemSet set;
    try {
        set.group = group_explain_pool(model, train, stats, schema, pool, singles, group_config);
    } catch (const NoSolutionError&) {
        return std::nullopt;
    }
    if (set.group.coverage < 1.0) return std::nullopt;
    for (std::size_t slot = 0; slot < pool.total_size(); ++slot) {
        if (set.group.changes_per_instance[slot].size() != config.target_sparsity) {
            return std::nullopt;
        }
    }
    set.seed_row = seed_row;
    set.pool = pool;
    set.singles = std::move(singles);
    return set;
}

}  // namespace

StudyResult build_item_sets(const Dataset& train, const Model& model, const FeatureStats& stats,
                            const StudyConfig& config) {
    config.validate();
    const auto streams =
        shuffled_eligible_by_class(train, model, config.margin, Rng::substream(config.seed, 0));

    // Restrict the neighbor search to correctly-classified rows.
    std::vector<std::size_t> correct_rows;
    std::vector<std::size_t> train_to_correct(train.size(), SIZE_MAX);
    Dataset correct{train.schema, {}, {}, train.source, train.split_tag};
    for (std::size_t row = 0; row < train.size(); ++row) {
        if (model.predict(train.instances[row]) == train.labels[row]) {
            train_to_correct[row] = correct_rows.size();
            correct_rows.push_back(row);
            correct.instances.push_back(train.instances[row]);
            correct.labels.push_back(train.labels[row]);
        }
    }

    StudyResult result;
    std::size_t cursor[2] = {0, 0};
    const std::size_t attempt_limit = config.redraw_factor * config.n_sets;
    std::size_t attempts = 0;
    while (result.sets.size() < config.n_sets && attempts < attempt_limit) {
        const int cls = static_cast<int>(result.sets.size() % 2);  // balanced, seed class first
        if (cursor[cls] >= streams[cls].size()) break;
        const std::size_t seed_row = streams[cls][cursor[cls]++];
        const std::uint64_t attempt_seed = Rng::substream(config.seed, 1 + attempts);
        ++attempts;
        auto set = try_build_set(train, correct, correct_rows, model, stats, config, seed_row,
                                 train_to_correct[seed_row], attempt_seed);
        if (!set) continue;
        set->set_id = result.sets.size();
        for (std::size_t slot = 0; slot < set->pool.total_size(); ++slot) {
            const std::size_t item_index = set->set_id * config.pool_size + slot;
            const PersonRef person = study_person(item_index);
            set->item_ids.push_back("s" + std::to_string(set->set_id) + "i" +
                                    std::to_string(slot));
            set->names.push_back(person.name);
            set->single_texts.push_back(
                render_explanation(set->singles[slot], train.schema, person));
            set->group_texts.push_back(
                render_explanation(set->group, slot, train.schema, person, false));
            set->hint_texts.push_back(
                render_explanation(set->group, slot, train.schema, person, true));
        }
        result.sets.push_back(std::move(*set));
    }
    if (result.sets.size() < config.n_sets) {
        throw ExhaustedSeedsError(result.sets.size(), config.n_sets);
    }

    MatchReport& report = result.report;
    report.attempts = attempts;
    for (const auto& set : result.sets) {
        for (std::size_t slot = 0; slot < set.pool.total_size(); ++slot) {
            report.single_proximity.push_back(set.singles[slot].proximity);
            report.group_proximity.push_back(set.group.proximity_per_instance[slot]);
            report.single_sparsity.push_back(set.singles[slot].sparsity);
            report.group_sparsity.push_back(set.group.changes_per_instance[slot].size());
        }
    }
    report.n_items = report.single_proximity.size();
    report.ttest = paired_t_test(report.single_proximity, report.group_proximity);
    report.p_above_05 = report.ttest.p_two_tailed > 0.05;
    report.sparsity_all_equal =
        std::equal(report.single_sparsity.begin(), report.single_sparsity.end(),
                   report.group_sparsity.begin(), report.group_sparsity.end());
    return result;
}

namespace {

nlohmann::ordered_json instance_to_json(const Instance& instance, const FeatureSchema& schema) {
    nlohmann::ordered_json values;
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        const auto& spec = schema.feature(f);
        if (spec.kind == FeatureKind::Categorical) {
            values[spec.name] = schema.category_name(f, static_cast<std::size_t>(
                                                            instance.values[f]));
        } else {
            values[spec.name] = instance.values[f];
        }
    }
    return values;
}

nlohmann::ordered_json changes_to_json(const ChangeMap& changes, const FeatureSchema& schema) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& [feature, change] : changes) {
        nlohmann::ordered_json entry;
        entry["feature"] = schema.feature(feature).name;
        if (schema.feature(feature).kind == FeatureKind::Categorical) {
            entry["from"] =
                schema.category_name(feature, static_cast<std::size_t>(change.old_value));
            entry["to"] =
                schema.category_name(feature, static_cast<std::size_t>(change.new_value));
        } else {
            entry["from"] = change.old_value;
            entry["to"] = change.new_value;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace

std::string item_sets_to_json_text(const StudyResult& result, const FeatureSchema& schema) {
    nlohmann::ordered_json doc;
    doc["sets"] = nlohmann::ordered_json::array();
    for (const auto& set : result.sets) {
        nlohmann::ordered_json s;
        s["set_id"] = set.set_id;
        s["seed_row"] = set.seed_row;
        s["class"] = schema.class_name(set.pool.cls);
        s["target_class"] = schema.class_name(set.group.target_class);
        nlohmann::ordered_json group;
        nlohmann::ordered_json key_features = nlohmann::ordered_json::array();
        for (const std::size_t f : set.group.key_features.features) {
            key_features.push_back(schema.feature(f).name);
        }
        group["key_features"] = std::move(key_features);
        nlohmann::ordered_json votes;
        for (const auto& [f, count] : set.group.key_features.vote_table) {
            votes[schema.feature(f).name] = count;
        }
        group["votes"] = std::move(votes);
        nlohmann::ordered_json substitution;
        for (const auto& [f, value] : set.group.substitution.values) {
            if (schema.feature(f).kind == FeatureKind::Categorical) {
                substitution[schema.feature(f).name] =
                    schema.category_name(f, static_cast<std::size_t>(value));
            } else {
                substitution[schema.feature(f).name] = value;
            }
        }
        group["substitution"] = std::move(substitution);
        group["substitution_origin"] = set.group.substitution.origin;
        group["coverage"] = set.group.coverage;
        group["region_size"] = set.group.region.rows.size();
        group["region_filter"] = set.group.region.filter_desc;
        s["group"] = std::move(group);
        s["items"] = nlohmann::ordered_json::array();
        for (std::size_t slot = 0; slot < set.pool.total_size(); ++slot) {
            nlohmann::ordered_json item;
            item["id"] = set.item_ids[slot];
            item["name"] = set.names[slot];
            item["row"] = slot == 0 ? set.pool.query_row : set.pool.member_rows[slot - 1];
            item["values"] = instance_to_json(set.pool.at(slot), schema);
            nlohmann::ordered_json single;
            single["changes"] = changes_to_json(set.singles[slot].changes, schema);
            single["proximity"] = set.singles[slot].proximity;
            single["sparsity"] = set.singles[slot].sparsity;
            single["text"] = set.single_texts[slot];
            item["single"] = std::move(single);
            nlohmann::ordered_json group_item;
            group_item["changes"] =
                changes_to_json(set.group.changes_per_instance[slot], schema);
            group_item["proximity"] = set.group.proximity_per_instance[slot];
            group_item["sparsity"] = set.group.changes_per_instance[slot].size();
            group_item["text"] = set.group_texts[slot];
            group_item["hint_text"] = set.hint_texts[slot];
            item["group"] = std::move(group_item);
            s["items"].push_back(std::move(item));
        }
        doc["sets"].push_back(std::move(s));
    }
    nlohmann::ordered_json report;
    report["n_items"] = result.report.n_items;
    report["df"] = result.report.ttest.df;
    report["t"] = result.report.ttest.t;
    report["p_two_tailed"] = result.report.ttest.p_two_tailed;
    report["p_above_05"] = result.report.p_above_05;
    report["sparsity_all_equal"] = result.report.sparsity_all_equal;
    report["summary"] = ttest_summary(result.report.ttest);
    report["attempts"] = result.report.attempts;
    doc["report"] = std::move(report);
    return doc.dump(2) + "\n";
}

LoadedStudy load_item_sets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open item-set file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("item-set file parse error: ") + e.what());
    }
    try {
        LoadedStudy study;
        for (const auto& set : doc.at("sets")) {
            study.set_ids.push_back(set.at("set_id").get<std::size_t>());
            study.set_coverage.push_back(set.at("group").at("coverage").get<double>());
            std::vector<std::string> ids;
            for (const auto& item : set.at("items")) {
                ids.push_back(item.at("id").get<std::string>());
                study.single_proximity.push_back(item.at("single").at("proximity").get<double>());
                study.group_proximity.push_back(item.at("group").at("proximity").get<double>());
                study.single_sparsity.push_back(
                    item.at("single").at("sparsity").get<std::size_t>());
                study.group_sparsity.push_back(item.at("group").at("sparsity").get<std::size_t>());
            }
            study.set_item_ids.push_back(std::move(ids));
        }
        const auto& report = doc.at("report");
        study.stored_ttest.t = report.at("t").get<double>();
        study.stored_ttest.df = report.at("df").get<std::size_t>();
        study.stored_ttest.p_two_tailed = report.at("p_two_tailed").get<double>();
        study.stored_p_above_05 = report.at("p_above_05").get<bool>();
        return study;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("item-set file is missing fields: ") + e.what());
    }
}

}  // namespace groupcf

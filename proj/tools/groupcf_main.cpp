#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "groupcf/errors.hpp"
#include "groupcf/group_cf.hpp"
#include "groupcf/metrics.hpp"
#include "groupcf/model.hpp"
#include "groupcf/neighbors.hpp"
#include "groupcf/rng.hpp"
#include "groupcf/single_cf.hpp"
#include "groupcf/study.hpp"
#include "groupcf/tabular.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kOutputFormatVersion = 1;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw groupcf::IoError("cannot open output file: " + path);
    out << text;
}

// JSON document to --out when given, stdout otherwise.
void emit(const ordered_json& doc, const std::string& out_path) {
    const std::string text = doc.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
    }
}

ordered_json value_json(const groupcf::FeatureSchema& schema, std::size_t feature, double value) {
    if (schema.feature(feature).kind == groupcf::FeatureKind::Categorical) {
        return schema.category_name(feature, static_cast<std::size_t>(value));
    }
    return value;
}

ordered_json instance_json(const groupcf::Instance& x, const groupcf::FeatureSchema& schema) {
    ordered_json out;
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        out[schema.feature(f).name] = value_json(schema, f, x.values[f]);
    }
    return out;
}

ordered_json changes_json(const groupcf::ChangeMap& changes,
                          const groupcf::FeatureSchema& schema) {
    ordered_json out = ordered_json::array();
    for (const auto& [feature, change] : changes) {
        out.push_back({{"feature", schema.feature(feature).name},
                       {"from", value_json(schema, feature, change.old_value)},
                       {"to", value_json(schema, feature, change.new_value)}});
    }
    return out;
}

// Everything the explanation commands share.
struct LoadedWorld {
    groupcf::FeatureSchema schema;
    groupcf::Model model;
    groupcf::Dataset train;  // the model's training subset of the data file
    groupcf::FeatureStats stats;
};

LoadedWorld load_world(const std::string& schema_path, const std::string& data_path,
                       const std::string& model_path, std::size_t bins) {
    auto schema = groupcf::FeatureSchema::from_json_file(schema_path);
    auto full = groupcf::load_dataset(data_path, schema);
    auto model = groupcf::Model::load(model_path);
    auto train = groupcf::subset(full, model.train_rows(), "train");
    auto stats = groupcf::compute_stats(train, bins);
    return LoadedWorld{std::move(schema), std::move(model), std::move(train), std::move(stats)};
}

const groupcf::Instance& select_row(const groupcf::Dataset& train, long long row) {
    if (row < 0 || static_cast<std::size_t>(row) >= train.size()) {
        throw groupcf::SelectorNotFoundError(
            "row " + std::to_string(row) + " not in the training split (0.." +
            std::to_string(train.size() - 1) + ")");
    }
    return train.instances[static_cast<std::size_t>(row)];
}

ordered_json read_id_array(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw groupcf::IoError("cannot open ordering file: " + path);
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw groupcf::InputError(std::string("ordering file parse error: ") + e.what());
    }
    if (!doc.is_array()) throw groupcf::InputError("ordering file must hold a JSON array of ids");
    return doc;
}

// --- command options ---

struct TrainArgs {
    std::string schema, data, out, report;
    std::uint64_t seed = 0;
    double split = 0.2;
    int trees = 100;
    int depth = 3;
    double lr = 0.1;
};

struct PredictArgs {
    std::string schema, data, model, out;
    long long row = -1;  // -1 = all training rows
};

struct ExplainArgs {
    std::string schema, data, model, out;
    long long row = 0;
    std::uint64_t seed = 0;
    std::size_t samples = 1000;
    double sparsity_param = 0.1;
    double threshold = 0.5;
    std::size_t max_changed = 0;
    std::size_t bins = 10;
};

struct GroupArgs {
    std::string schema, data, model, out, mode = "rows";
    long long row = 0;
    std::uint64_t seed = 0;
    std::size_t pool_size = 5;
    std::size_t k = 2;
    std::size_t samples = 1000;
    std::size_t candidates = 100;
    std::size_t kmedoids = 5;
    std::size_t bins = 10;
    bool trace = false;
};

struct StudyArgs {
    std::string schema, data, model, out, mode = "rows";
    std::uint64_t seed = 0;
    std::size_t sets = 8;
    std::size_t pool_size = 5;
    std::size_t k = 2;
    double margin = 0.15;
    std::size_t samples = 1000;
    std::size_t candidates = 100;
    std::size_t kmedoids = 5;
    std::size_t bins = 10;
    std::size_t retries = 8;
    std::size_t redraw_factor = 10;
};

struct FileArgs {
    std::string items, ordering, out;
};

groupcf::SamplingMode parse_mode(const std::string& mode) {
    if (mode == "rows") return groupcf::SamplingMode::Rows;
    if (mode == "medoids") return groupcf::SamplingMode::Medoids;
    throw groupcf::ConfigError("unknown sampling mode: " + mode + " (rows|medoids)");
}

// --- commands ---

int run_train(const TrainArgs& args) {
    auto schema = groupcf::FeatureSchema::from_json_file(args.schema);
    auto full = groupcf::load_dataset(args.data, schema);
    auto [train_rows, test_rows] = groupcf::split_indices(full, args.split, args.seed);
    auto train = groupcf::subset(full, train_rows, "train");
    auto test = groupcf::subset(full, test_rows, "test");

    groupcf::TrainConfig config;
    config.n_trees = args.trees;
    config.learning_rate = args.lr;
    config.max_depth = args.depth;
    config.seed = args.seed;
    auto model = groupcf::train_boosted(train, config);
    model.set_train_rows(std::move(train_rows));
    model.save(args.out);

    const double acc = groupcf::accuracy(model, test);
    std::printf("held-out accuracy: %.4f\n", acc);

    ordered_json report;
    report["format_version"] = kOutputFormatVersion;
    report["config"] = {{"command", "train"},   {"schema", args.schema}, {"data", args.data},
                        {"out", args.out},      {"seed", args.seed},     {"split", args.split},
                        {"trees", args.trees},  {"depth", args.depth},   {"lr", args.lr}};
    report["accuracy"] = acc;
    report["train_rows"] = train.size();
    report["test_rows"] = test.size();
    emit(report, args.report);
    return 0;
}

int run_predict(const PredictArgs& args) {
    auto world = load_world(args.schema, args.data, args.model, 10);
    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "predict"},
                     {"schema", args.schema},
                     {"data", args.data},
                     {"model", args.model},
                     {"row", args.row}};
    doc["predictions"] = ordered_json::array();
    std::size_t first = 0;
    std::size_t last = world.train.size();
    if (args.row >= 0) {
        select_row(world.train, args.row);  // range check
        first = static_cast<std::size_t>(args.row);
        last = first + 1;
    }
    for (std::size_t r = first; r < last; ++r) {
        const auto proba = world.model.predict_proba(world.train.instances[r]);
        const int cls = world.model.predict(world.train.instances[r]);
        doc["predictions"].push_back({{"row", r},
                                      {"proba", {proba[0], proba[1]}},
                                      {"class", world.schema.class_name(cls)},
                                      {"label", world.schema.class_name(world.train.labels[r])}});
    }
    emit(doc, args.out);
    return 0;
}

int run_explain(const ExplainArgs& args) {
    auto world = load_world(args.schema, args.data, args.model, args.bins);
    const auto& query = select_row(world.train, args.row);
    const int target = world.model.predict(query) == 0 ? 1 : 0;

    groupcf::CfSearchConfig config;
    config.n_samples = args.samples;
    config.sparsity_param = args.sparsity_param;
    config.stopping_threshold = args.threshold;
    config.max_features_changed = args.max_changed;
    config.seed = args.seed;
    auto cf = groupcf::generate_single_cf(world.model, query, target, world.schema, world.stats,
                                          config);
    cf.query_row = static_cast<std::size_t>(args.row);

    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "explain"},
                     {"schema", args.schema},
                     {"data", args.data},
                     {"model", args.model},
                     {"row", args.row},
                     {"seed", args.seed},
                     {"samples", args.samples},
                     {"sparsity_param", args.sparsity_param},
                     {"threshold", args.threshold},
                     {"max_changed", args.max_changed},
                     {"bins", args.bins}};
    doc["row"] = args.row;
    doc["query"] = instance_json(query, world.schema);
    doc["predicted_class"] = world.schema.class_name(target == 0 ? 1 : 0);
    doc["target_class"] = world.schema.class_name(target);
    doc["changes"] = changes_json(cf.changes, world.schema);
    doc["valid"] = cf.valid;
    doc["proximity"] = cf.proximity;
    doc["sparsity"] = cf.sparsity;
    if (cf.valid) {
        doc["text"] = groupcf::render_explanation(
            cf, world.schema, groupcf::study_person(static_cast<std::size_t>(args.row) % 40));
    }
    emit(doc, args.out);
    return 0;
}

int run_group_explain(const GroupArgs& args) {
    auto world = load_world(args.schema, args.data, args.model, args.bins);
    const auto& query = select_row(world.train, args.row);

    groupcf::GroupConfig config;
    config.pool_size = args.pool_size;
    config.k = args.k;
    config.cf.n_samples = args.samples;
    config.candidate_budget = args.candidates;
    config.k_medoids = args.kmedoids;
    config.mode = parse_mode(args.mode);
    config.seed = args.seed;
    config.trace = args.trace;
    auto group = groupcf::group_explain(world.model, world.train, world.stats, world.schema,
                                        query, config);

    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "group-explain"},
                     {"schema", args.schema},
                     {"data", args.data},
                     {"model", args.model},
                     {"row", args.row},
                     {"seed", args.seed},
                     {"pool_size", args.pool_size},
                     {"k", args.k},
                     {"samples", args.samples},
                     {"candidates", args.candidates},
                     {"kmedoids", args.kmedoids},
                     {"mode", args.mode},
                     {"bins", args.bins},
                     {"trace", args.trace}};
    doc["row"] = args.row;
    ordered_json pool_rows = ordered_json::array();
    pool_rows.push_back(args.row);
    for (const std::size_t r : group.pool.member_rows) pool_rows.push_back(r);
    doc["pool_rows"] = std::move(pool_rows);
    doc["pool_class"] = world.schema.class_name(group.pool.cls);
    doc["target_class"] = world.schema.class_name(group.target_class);

    ordered_json keys = ordered_json::array();
    for (const std::size_t f : group.key_features.features) {
        ordered_json key;
        key["feature"] = world.schema.feature(f).name;
        key["votes"] = group.key_features.vote_table.at(f);
        const auto dir = group.key_features.directions.find(f);
        if (dir != group.key_features.directions.end()) {
            key["direction"] = dir->second == groupcf::Direction::Increase   ? "increase"
                               : dir->second == groupcf::Direction::Decrease ? "decrease"
                                                                             : "none";
        }
        keys.push_back(std::move(key));
    }
    doc["key_features"] = std::move(keys);
    ordered_json votes;
    for (const auto& [f, count] : group.key_features.vote_table) {
        votes[world.schema.feature(f).name] = count;
    }
    doc["votes"] = std::move(votes);

    ordered_json substitution;
    for (const auto& [f, value] : group.substitution.values) {
        substitution[world.schema.feature(f).name] = value_json(world.schema, f, value);
    }
    doc["substitution"] = std::move(substitution);
    doc["substitution_origin"] = group.substitution.origin;
    doc["sparsity"] = group.substitution.values.size();
    doc["coverage"] = group.coverage;
    doc["region"] = {{"size", group.region.rows.size()},
                     {"filter", group.region.filter_desc},
                     {"fallback_unfiltered", group.region.fallback_unfiltered}};

    doc["per_instance"] = ordered_json::array();
    for (std::size_t slot = 0; slot < group.pool.total_size(); ++slot) {
        ordered_json item;
        item["row"] = slot == 0 ? static_cast<std::size_t>(args.row)
                                : group.pool.member_rows[slot - 1];
        item["valid"] = static_cast<bool>(group.per_instance_valid[slot]);
        item["changes"] = changes_json(group.changes_per_instance[slot], world.schema);
        item["proximity"] = group.proximity_per_instance[slot];
        item["sparsity"] = group.changes_per_instance[slot].size();
        if (group.per_instance_valid[slot]) {
            const auto person = groupcf::study_person(slot);
            item["text"] =
                groupcf::render_explanation(group, slot, world.schema, person, false);
            item["hint_text"] =
                groupcf::render_explanation(group, slot, world.schema, person, true);
        }
        doc["per_instance"].push_back(std::move(item));
    }

    if (args.trace) {
        ordered_json trace = ordered_json::array();
        for (const auto& score : group.trace) {
            ordered_json entry;
            ordered_json values;
            for (const auto& [f, value] : score.candidate.values) {
                values[world.schema.feature(f).name] = value_json(world.schema, f, value);
            }
            entry["values"] = std::move(values);
            entry["origin"] = score.candidate.origin;
            entry["coverage"] = score.coverage;
            entry["mean_proximity"] = score.mean_proximity;
            entry["draw_index"] = score.draw_index;
            trace.push_back(std::move(entry));
        }
        doc["trace"] = std::move(trace);
    }
    emit(doc, args.out);
    return 0;
}

int run_study_items(const StudyArgs& args) {
    auto world = load_world(args.schema, args.data, args.model, args.bins);

    groupcf::StudyConfig config;
    config.n_sets = args.sets;
    config.pool_size = args.pool_size;
    config.k = args.k;
    config.margin = args.margin;
    config.seed = args.seed;
    config.cf.n_samples = args.samples;
    config.candidate_budget = args.candidates;
    config.k_medoids = args.kmedoids;
    config.mode = parse_mode(args.mode);
    config.single_retries = args.retries;
    config.redraw_factor = args.redraw_factor;
    const auto result = groupcf::build_item_sets(world.train, world.model, world.stats, config);

    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "study-items"},
                     {"schema", args.schema},
                     {"data", args.data},
                     {"model", args.model},
                     {"seed", args.seed},
                     {"sets", args.sets},
                     {"pool_size", args.pool_size},
                     {"k", args.k},
                     {"margin", args.margin},
                     {"samples", args.samples},
                     {"candidates", args.candidates},
                     {"kmedoids", args.kmedoids},
                     {"mode", args.mode},
                     {"bins", args.bins},
                     {"retries", args.retries},
                     {"redraw_factor", args.redraw_factor}};
    const ordered_json body = ordered_json::parse(item_sets_to_json_text(result, world.schema));
    doc["sets"] = body.at("sets");
    doc["report"] = body.at("report");
    write_text(args.out, doc.dump(2) + "\n");
    std::cout << groupcf::ttest_summary(result.report.ttest) << "\n";
    return 0;
}

int run_gap_score(const FileArgs& args) {
    const auto study = groupcf::load_item_sets(args.items);
    const auto ordering_doc = read_id_array(args.ordering);
    std::vector<std::string> ordering;
    for (const auto& id : ordering_doc) ordering.push_back(id.get<std::string>());

    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "gap-score"}, {"items", args.items}, {"ordering", args.ordering}};
    doc["sets"] = ordered_json::array();
    double total = 0.0;
    for (std::size_t i = 0; i < study.set_item_ids.size(); ++i) {
        const std::size_t score = groupcf::gap_score(ordering, study.set_item_ids[i]);
        doc["sets"].push_back({{"set_id", study.set_ids[i]}, {"gap_score", score}});
        total += static_cast<double>(score);
    }
    doc["mean_gap_score"] = total / static_cast<double>(study.set_item_ids.size());
    emit(doc, args.out);
    if (!args.out.empty()) {
        std::printf("mean gap score: %s\n",
                    groupcf::format_number(doc["mean_gap_score"].get<double>()).c_str());
    }
    return 0;
}

int run_match_check(const FileArgs& args) {
    const auto study = groupcf::load_item_sets(args.items);
    const auto recomputed =
        groupcf::paired_t_test(study.single_proximity, study.group_proximity);

    std::vector<std::pair<std::string, bool>> checks;
    checks.emplace_back("df_matches_items",
                        study.stored_ttest.df + 1 == study.single_proximity.size());
    checks.emplace_back("t_statistic_reproduced",
                        std::abs(recomputed.t - study.stored_ttest.t) < 1e-9 &&
                            recomputed.df == study.stored_ttest.df);
    checks.emplace_back("p_value_reproduced",
                        std::abs(recomputed.p_two_tailed - study.stored_ttest.p_two_tailed) <
                            1e-9);
    checks.emplace_back("p_above_05_consistent",
                        study.stored_p_above_05 == (recomputed.p_two_tailed > 0.05));
    bool sparsity_equal = true;
    for (std::size_t i = 0; i < study.single_sparsity.size(); ++i) {
        sparsity_equal = sparsity_equal && study.single_sparsity[i] == study.group_sparsity[i];
    }
    checks.emplace_back("sparsity_pairs_equal", sparsity_equal);
    bool full_coverage = true;
    for (const double c : study.set_coverage) full_coverage = full_coverage && c == 1.0;
    checks.emplace_back("full_coverage", full_coverage);

    ordered_json doc;
    doc["format_version"] = kOutputFormatVersion;
    doc["config"] = {{"command", "match-check"}, {"items", args.items}};
    doc["checks"] = ordered_json::array();
    bool all_pass = true;
    std::string first_failure;
    for (const auto& [name, pass] : checks) {
        doc["checks"].push_back({{"name", name}, {"pass", pass}});
        if (!pass && all_pass) first_failure = name;
        all_pass = all_pass && pass;
    }
    doc["all_pass"] = all_pass;
    doc["summary"] = groupcf::ttest_summary(recomputed);
    emit(doc, args.out);
    if (!args.out.empty()) {
        std::printf("match-check: %s (%s)\n", all_pass ? "pass" : "FAIL",
                    groupcf::ttest_summary(recomputed).c_str());
    }
    if (!all_pass) {
        throw groupcf::InputError("item-set file failed the " + first_failure + " check");
    }
    return 0;
}

void add_seed_option(CLI::App* cmd, std::uint64_t& seed) {
    cmd->add_option("--seed", seed, "random seed")->envname("GROUPCF_SEED");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"group counterfactual explanations for tabular binary classifiers"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "fit a boosted-tree classifier");
    train->add_option("--schema", train_args.schema, "schema JSON")->required();
    train->add_option("--data", train_args.data, "dataset CSV")->required();
    train->add_option("--out", train_args.out, "model output path")->required();
    train->add_option("--report", train_args.report, "training report path (default stdout)");
    train->add_option("--split", train_args.split, "held-out test fraction");
    train->add_option("--trees", train_args.trees, "boosting rounds");
    train->add_option("--depth", train_args.depth, "tree depth");
    train->add_option("--lr", train_args.lr, "learning rate");
    add_seed_option(train, train_args.seed);

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "classify training rows");
    predict->add_option("--schema", predict_args.schema)->required();
    predict->add_option("--data", predict_args.data)->required();
    predict->add_option("--model", predict_args.model)->required();
    predict->add_option("--row", predict_args.row, "training row (default: all)");
    predict->add_option("--out", predict_args.out);

    ExplainArgs explain_args;
    auto* explain = app.add_subcommand("explain", "individual counterfactual for one row");
    explain->add_option("--schema", explain_args.schema)->required();
    explain->add_option("--data", explain_args.data)->required();
    explain->add_option("--model", explain_args.model)->required();
    explain->add_option("--row", explain_args.row, "training row")->required();
    explain->add_option("--samples", explain_args.samples, "search sample count");
    explain->add_option("--sparsity-param", explain_args.sparsity_param);
    explain->add_option("--threshold", explain_args.threshold, "stopping threshold");
    explain->add_option("--max-changed", explain_args.max_changed,
                        "max features changed (0 = all actionable)");
    explain->add_option("--bins", explain_args.bins, "quantile bins for distances");
    explain->add_option("--out", explain_args.out);
    add_seed_option(explain, explain_args.seed);

    GroupArgs group_args;
    auto* group = app.add_subcommand("group-explain", "group counterfactual for one row");
    group->add_option("--schema", group_args.schema)->required();
    group->add_option("--data", group_args.data)->required();
    group->add_option("--model", group_args.model)->required();
    group->add_option("--row", group_args.row, "training row")->required();
    group->add_option("--pool-size", group_args.pool_size, "pool size counting the query");
    group->add_option("--k", group_args.k, "key feature count");
    group->add_option("--samples", group_args.samples, "single-CF sample count");
    group->add_option("--candidates", group_args.candidates, "candidate budget (rows mode)");
    group->add_option("--kmedoids", group_args.kmedoids, "medoid count (medoids mode)");
    group->add_option("--mode", group_args.mode, "candidate sampling: rows|medoids");
    group->add_option("--bins", group_args.bins);
    group->add_flag("--trace", group_args.trace, "include all candidate scores");
    group->add_option("--out", group_args.out);
    add_seed_option(group, group_args.seed);

    StudyArgs study_args;
    auto* study = app.add_subcommand("study-items", "build matched study item sets");
    study->add_option("--schema", study_args.schema)->required();
    study->add_option("--data", study_args.data)->required();
    study->add_option("--model", study_args.model)->required();
    study->add_option("--out", study_args.out, "item-set output file")->required();
    study->add_option("--sets", study_args.sets, "item sets to build");
    study->add_option("--pool-size", study_args.pool_size);
    study->add_option("--k", study_args.k);
    study->add_option("--margin", study_args.margin, "seed probability margin");
    study->add_option("--samples", study_args.samples);
    study->add_option("--candidates", study_args.candidates);
    study->add_option("--kmedoids", study_args.kmedoids);
    study->add_option("--mode", study_args.mode, "rows|medoids");
    study->add_option("--bins", study_args.bins);
    study->add_option("--retries", study_args.retries, "single-CF reseeds per item");
    study->add_option("--redraw-factor", study_args.redraw_factor, "seed draw bound multiplier");
    add_seed_option(study, study_args.seed);

    FileArgs gap_args;
    auto* gap = app.add_subcommand("gap-score", "score an ordering against item sets");
    gap->add_option("--items", gap_args.items, "item-set file")->required();
    gap->add_option("--ordering", gap_args.ordering, "JSON array of item ids")->required();
    gap->add_option("--out", gap_args.out);

    FileArgs match_args;
    auto* match = app.add_subcommand("match-check", "verify an item-set file's match report");
    match->add_option("--items", match_args.items, "item-set file")->required();
    match->add_option("--out", match_args.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(train)) return run_train(train_args);
        if (app.got_subcommand(predict)) return run_predict(predict_args);
        if (app.got_subcommand(explain)) return run_explain(explain_args);
        if (app.got_subcommand(group)) return run_group_explain(group_args);
        if (app.got_subcommand(study)) return run_study_items(study_args);
        if (app.got_subcommand(gap)) return run_gap_score(gap_args);
        if (app.got_subcommand(match)) return run_match_check(match_args);
    } catch (const groupcf::NoSolutionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const groupcf::ExhaustionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const groupcf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

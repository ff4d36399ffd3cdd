// Copyright 2026 The qsbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qsb/bench.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <set>

namespace qsb {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(","));
    std::vector<std::string> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (!p.empty()) out.push_back(p);
    }
    return out;
}

double parse_number(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
}

std::size_t parse_count(const std::string& key, const std::string& s) {
    const double v = parse_number(key, s);
    if (v < 0 || v != std::floor(v)) throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

bool parse_flag(const std::string& key, const std::string& s) {
    const auto v = boost::to_lower_copy(s);
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ConfigError("'" + key + "' expects true/false, got '" + s + "'");
}

std::vector<double> number_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    for (const auto& p : split_list(s)) out.push_back(parse_number(key, p));
    if (out.empty()) throw ConfigError("'" + key + "' is empty");
    return out;
}

std::vector<std::size_t> count_list(const std::string& key, const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& p : split_list(s)) out.push_back(parse_count(key, p));
    if (out.empty()) throw ConfigError("'" + key + "' is empty");
    return out;
}

std::vector<bool> flag_list(const std::string& key, const std::string& s) {
    std::vector<bool> out;
    for (const auto& p : split_list(s)) out.push_back(parse_flag(key, p));
    if (out.empty()) throw ConfigError("'" + key + "' is empty");
    return out;
}

std::string target_title(Target t) {
    switch (t) {
        case Target::Weight: return "muscle weight (mg)";
        case Target::Force: return "specific force (mN)";
        case Target::Quality: return "muscle quality index (mN per mg)";
    }
    return "?";
}

}  // namespace

void RunConfig::validate() const {
    if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (cv_folds < 2) throw ConfigError("folds must be at least 2");
    if (targets.empty()) throw ConfigError("no targets selected");
    if (!(screening.kappa > 0)) throw ConfigError("screening kappa must be positive");
    if (budgets.compact.size() != 3) throw ConfigError("compact budget must name exactly three biomarkers");
    const auto& order = family_order();
    for (const auto& f : families)
        if (std::find(order.begin(), order.end(), f) == order.end()) throw ConfigError("unknown family '" + f + "'");
}

RunConfig load_run_config(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("cannot read run configuration: ") + e.what());
    }
    RunConfig cfg;
    const auto base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty()) return p;
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? p : (base / fp).string();
    };
    auto& g = cfg.grids;
    auto& b = cfg.budgets;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, std::map<std::string, Setter>> keys = {
        {"cohort",
         {{"path", [&](auto&, auto& v) { cfg.cohort_path = resolve(v); }},
          {"schema", [&](auto&, auto& v) { cfg.schema_path = resolve(v); }},
          {"n", [&](auto& k, auto& v) { cfg.synthetic_n = parse_count(k, v); }},
          {"seed", [&](auto& k, auto& v) { cfg.synthetic_seed = parse_count(k, v); }}}},
        {"protocol",
         {{"targets",
           [&](auto&, auto& v) {
               cfg.targets.clear();
               for (const auto& t : split_list(v)) cfg.targets.push_back(parse_target(t));
           }},
          {"test_fraction", [&](auto& k, auto& v) { cfg.test_fraction = parse_number(k, v); }},
          {"folds", [&](auto& k, auto& v) { cfg.cv_folds = parse_count(k, v); }},
          {"seed", [&](auto& k, auto& v) { cfg.seed = parse_count(k, v); }},
          {"jobs", [&](auto& k, auto& v) { cfg.jobs = static_cast<unsigned>(parse_count(k, v)); }}}},
        {"screening",
         {{"kappa", [&](auto& k, auto& v) { cfg.screening.kappa = parse_number(k, v); }},
          {"statistic",
           [&](auto& k, auto& v) {
               if (v == "mean") cfg.screening.statistic = ScreeningStatistic::Mean;
               else if (v == "median") cfg.screening.statistic = ScreeningStatistic::Median;
               else throw ConfigError("'" + k + "' expects mean or median");
           }},
          {"positive",
           [&](auto& k, auto& v) {
               if (v == "low") cfg.screening.positive = PositiveClass::Low;
               else if (v == "high") cfg.screening.positive = PositiveClass::High;
               else throw ConfigError("'" + k + "' expects low or high");
           }}}},
        {"budget",
         {{"raw", [&](auto&, auto& v) { b.raw = parse_budget(v); }},
          {"engineered", [&](auto&, auto& v) { b.engineered = parse_budget(v); }},
          {"spd", [&](auto&, auto& v) { b.spd = parse_budget(v); }},
          {"quantum", [&](auto&, auto& v) { b.quantum = parse_budget(v); }},
          {"compact", [&](auto&, auto& v) { b.compact = split_list(v); }}}},
        {"families",
         {{"enabled", [&](auto&, auto& v) { cfg.families = v == "all" ? std::vector<std::string>{} : split_list(v); }}}},
        {"linear",
         {{"alphas", [&](auto& k, auto& v) { g.ridge_alphas = number_list(k, v); }},
          {"lda_shrinkage", [&](auto& k, auto& v) { g.lda_shrinkage = number_list(k, v); }}}},
        {"trees",
         {{"depths", [&](auto& k, auto& v) { g.tree_depths = count_list(k, v); }},
          {"min_leaf", [&](auto& k, auto& v) { g.tree_min_leaf = count_list(k, v); }},
          {"forest_trees", [&](auto& k, auto& v) { g.forest_trees = parse_count(k, v); }},
          {"forest_min_leaf", [&](auto& k, auto& v) { g.forest_min_leaf = count_list(k, v); }}}},
        {"spd",
         {{"medoids", [&](auto& k, auto& v) { g.spd_medoids = count_list(k, v); }},
          {"normalize", [&](auto& k, auto& v) { g.spd_normalize = flag_list(k, v); }},
          {"synthetic_factor", [&](auto& k, auto& v) { g.spd_synthetic_factor = number_list(k, v); }},
          {"knn", [&](auto& k, auto& v) { g.spd_knn = parse_count(k, v); }},
          {"shrinkage", [&](auto& k, auto& v) { g.spd_shrinkage = parse_number(k, v); }},
          {"eps", [&](auto& k, auto& v) { g.spd_eps = parse_number(k, v); }}}},
        {"quantum",
         {{"qubits", [&](auto& k, auto& v) { g.q_qubits = count_list(k, v); }},
          {"layers", [&](auto& k, auto& v) { g.q_layers = count_list(k, v); }},
          {"scales", [&](auto& k, auto& v) { g.q_scales = number_list(k, v); }},
          {"powers", [&](auto& k, auto& v) { g.q_powers = number_list(k, v); }},
          {"lambdas", [&](auto& k, auto& v) { g.q_lambdas = number_list(k, v); }},
          {"qkr_center", [&](auto& k, auto& v) { g.qkr_center = parse_flag(k, v); }},
          {"qkf_centers", [&](auto& k, auto& v) { g.qkf_centers = count_list(k, v); }},
          {"qkf_whiten", [&](auto& k, auto& v) { g.qkf_whiten = parse_flag(k, v); }},
          {"vqr_qubits", [&](auto& k, auto& v) { g.vqr_qubits = count_list(k, v); }},
          {"vqr_layers", [&](auto& k, auto& v) { g.vqr_layers = count_list(k, v); }},
          {"vqr_var_layers", [&](auto& k, auto& v) { g.vqr_var_layers = parse_count(k, v); }},
          {"vqr_learning_rate", [&](auto& k, auto& v) { g.vqr_learning_rate = parse_number(k, v); }},
          {"vqr_epochs", [&](auto& k, auto& v) { g.vqr_epochs = parse_count(k, v); }}}},
        {"output",
         {{"dir", [&](auto&, auto& v) { cfg.out_dir = resolve(v); }},
          {"svg", [&](auto& k, auto& v) { cfg.write_svg = parse_flag(k, v); }}}},
    };

    for (const auto& [section, body] : tree) {
        auto sit = keys.find(section);
        if (sit == keys.end()) throw ConfigError("unknown section [" + section + "] in " + path);
        for (const auto& [key, value] : body) {
            auto kit = sit->second.find(key);
            if (kit == sit->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
            kit->second(section + "." + key, boost::trim_copy(value.data()));
        }
    }
    cfg.validate();
    return cfg;
}

Cohort load_or_generate_cohort(const RunConfig& config) {
    if (config.cohort_path.empty()) return generate_synthetic_cohort(config.synthetic_n, config.synthetic_seed);
    const ColumnSpec schema = config.schema_path.empty() ? ColumnSpec{} : load_schema(config.schema_path);
    return load_cohort(config.cohort_path, schema);
}

EvalReport evaluate_families(const RunConfig& config, const Cohort& cohort, Target target,
                             const std::vector<FamilySpec>& families, LeakageAudit* audit) {
    config.validate();
    if (!cohort.has_target(target)) throw ConfigError("cohort has no " + target_name(target) + " target");

    const SplitPlan plan = make_split_plan(cohort, config.test_fraction, config.cv_folds, config.split_seed(),
                                           config.cv_seed());
    const std::set<Index> test(plan.test_idx.begin(), plan.test_idx.end());
    for (const auto& f : plan.folds) {
        for (auto* part : {&f.train, &f.validation})
            for (Index i : *part)
                if (test.count(i)) throw ProtocolError("test row " + std::to_string(i) + " appears in a CV fold");
    }

    EvalReport rep;
    rep.title = "Performance comparison for predicting " + target_title(target);
    rep.target = target;
    rep.cohort_fingerprint = cohort.fingerprint();
    rep.split_hash = derive_seed(plan.train_hash(), plan.test_hash());
    rep.n_train = plan.train_idx.size();
    rep.n_test = plan.test_idx.size();
    rep.screening = fit_screening_threshold(cohort.target(target, plan.train_idx), cohort.conditions(plan.train_idx),
                                            config.screening);
    const auto y_test = cohort.target(target, plan.test_idx);
    rep.y_test_mean = std::accumulate(y_test.begin(), y_test.end(), 0.0) / static_cast<double>(y_test.size());

    LeakageAudit local;
    LeakageAudit& log = audit ? *audit : local;
    const std::size_t checks_before = log.checks();
    const std::size_t violations_before = log.violations().size();

    for (const auto& fam : families) {
        ReportRow row;
        row.key = fam.key;
        row.group = fam.group;
        row.model = fam.display;
        row.budget = fam.uses_features ? to_string(fam.budget) : "none";
        auto access = std::make_shared<AccessLog>();
        cohort.attach_access_log(access);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            GridSearchOptions opts;
            opts.seed = derive_seed(config.model_seed(), string_hash(fam.key), static_cast<std::uint64_t>(target));
            opts.jobs = config.jobs;
            opts.audit = &log;
            opts.label = target_name(target) + "/" + fam.key;
            auto gs = grid_search_cv(cohort, target, plan.train_idx, plan.folds, fam.grid, fam.fit, opts);
            const auto yhat = gs.model->predict(cohort, plan.test_idx);
            row.regression = regression_metrics(y_test, yhat);
            row.screening = screening_metrics(y_test, yhat, rep.screening);
            row.params = gs.best_row().params.fingerprint();
            row.cv_rmse = gs.best_row().mean_rmse;
            row.seed = gs.refit_seed;
            row.notes = gs.model->notes();
            row.model_dump = gs.model->dump();
            row.cv_table = std::move(gs.table);
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cohort.attach_access_log(nullptr);

        const auto read = access->columns();
        row.columns_read = boost::join(std::vector<std::string>(read.begin(), read.end()), ";");
        std::set<std::string> allowed;
        if (fam.uses_features) {
            if (fam.budget == FeatureBudget::Compact3 || fam.budget == FeatureBudget::Compact3Condition)
                allowed.insert(config.budgets.compact.begin(), config.budgets.compact.end());
            else
                allowed.insert(cohort.feature_names().begin(), cohort.feature_names().end());
        }
        for (const auto& c : read)
            if (!allowed.count(c)) rep.budget_violations.push_back(fam.key + " read excluded column " + c);
        rep.rows.push_back(std::move(row));
    }

    rep.leakage_checks = log.checks() - checks_before;
    const auto v = log.violations();
    rep.leakage_violations.assign(v.begin() + static_cast<std::ptrdiff_t>(violations_before), v.end());
    return rep;
}

EvalReport run_benchmark(const RunConfig& config, const Cohort& cohort, Target target, LeakageAudit* audit) {
    auto all = make_families(config.grids, config.budgets, config.model_seed());
    std::vector<FamilySpec> chosen;
    for (auto& f : all) {
        if (config.families.empty() ||
            std::find(config.families.begin(), config.families.end(), f.key) != config.families.end())
            chosen.push_back(std::move(f));
    }
    return evaluate_families(config, cohort, target, chosen, audit);
}

EvalReport run_ablation(const RunConfig& config, const Cohort& cohort, Target target,
                        const std::vector<SpdVariant>& variants, LeakageAudit* audit) {
    if (variants.empty()) throw ConfigError("ablation grid is empty");
    std::vector<FamilySpec> families;
    for (const auto& v : variants) families.push_back(make_spd_family(v, config.grids, config.budgets, config.model_seed()));
    auto rep = evaluate_families(config, cohort, target, families, audit);
    rep.title = "SPD ablations for " + target_title(target);
    return rep;
}

}  // namespace qsb

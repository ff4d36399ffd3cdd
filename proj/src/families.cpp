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

#include "qsb/families.hpp"

#include "qsb/linmodels.hpp"
#include "qsb/qkernel.hpp"
#include "qsb/trees.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <mutex>

namespace qsb {

std::string to_string(FeatureBudget b) {
    switch (b) {
        case FeatureBudget::Full: return "full";
        case FeatureBudget::Engineered: return "engineered";
        case FeatureBudget::Compact3Condition: return "compact-3+condition";
        case FeatureBudget::Compact3: return "compact-3";
    }
    return "?";
}

FeatureBudget parse_budget(const std::string& s) {
    if (s == "full") return FeatureBudget::Full;
    if (s == "engineered") return FeatureBudget::Engineered;
    if (s == "compact-3+condition") return FeatureBudget::Compact3Condition;
    if (s == "compact-3") return FeatureBudget::Compact3;
    throw ConfigError("unknown feature budget '" + s + "'");
}

PipelineSpec budget_pipeline(FeatureBudget budget, const std::vector<std::string>& compact) {
    PipelineSpec spec;
    switch (budget) {
        case FeatureBudget::Full: break;
        case FeatureBudget::Engineered: spec.engineered = true; break;
        case FeatureBudget::Compact3Condition:
        case FeatureBudget::Compact3:
            if (compact.size() != 3) throw ConfigError("compact budgets need exactly three biomarkers");
            spec.biomarkers = compact;
            spec.include_condition = budget == FeatureBudget::Compact3Condition;
            break;
    }
    return spec;
}

const std::vector<std::string>& family_order() {
    static const std::vector<std::string> order = {
        "global_mean", "condition_means",                                  //
        "raw_lda_ridge", "raw_ridge", "raw_forest", "raw_tree",            //
        "eng_lda_ridge", "eng_ridge", "eng_forest", "eng_tree",            //
        "spd_k0", "spd_best",                                              //
        "angle_ridge", "qkr_full", "qkf_cluster", "vqr"};
    return order;
}

namespace {

template <class T>
std::vector<std::string> texts(const std::vector<T>& values) {
    std::vector<std::string> out;
    for (const auto& v : values) {
        if constexpr (std::is_same_v<T, bool>) out.emplace_back(v ? "true" : "false");
        else if constexpr (std::is_floating_point_v<T>) out.push_back(format_param(v));
        else out.push_back(std::to_string(v));
    }
    return out;
}

std::vector<std::string> texts(const std::vector<bool>& values) {
    std::vector<std::string> out;
    for (bool v : values) out.emplace_back(v ? "true" : "false");
    return out;
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Prepared {
    FittedPipeline pipe;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;  // forward-transformed
};

Prepared prepare(const Cohort& cohort, Target target, std::span<const Index> rows, const PipelineSpec& spec) {
    Prepared p{fit_pipeline(cohort, rows, spec, target), {}, {}};
    p.X = p.pipe.transform(cohort, rows);
    p.y = as_vector(p.pipe.forward_targets(cohort.target(target, rows)));
    return p;
}

/// Model behind a fitted pipeline; subclasses predict in transformed target
/// space and this class maps back to original units.
class PipelineModel : public FittedModel {
public:
    explicit PipelineModel(FittedPipeline pipe) : pipe_(std::move(pipe)) {}

    std::vector<double> predict(const Cohort& cohort, std::span<const Index> rows) const override {
        const Eigen::VectorXd z = predict_transformed(pipe_.transform(cohort, rows));
        return pipe_.inverse_targets(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    }
    std::uint64_t fit_hash() const override { return pipe_.fit_hash(); }

protected:
    virtual Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const = 0;
    FittedPipeline pipe_;
};

// ---------------------------------------------------------------------------

class GlobalMeanFitted : public FittedModel {
public:
    GlobalMeanFitted(GlobalMeanModel m, std::uint64_t hash) : m_(m), hash_(hash) {}
    std::vector<double> predict(const Cohort&, std::span<const Index> rows) const override {
        return predict_global_mean(m_, rows.size());
    }
    std::uint64_t fit_hash() const override { return hash_; }

private:
    GlobalMeanModel m_;
    std::uint64_t hash_;
};

class ConditionMeansFitted : public FittedModel {
public:
    ConditionMeansFitted(ConditionMeansModel m, std::uint64_t hash) : m_(m), hash_(hash) {}
    std::vector<double> predict(const Cohort& cohort, std::span<const Index> rows) const override {
        return predict_condition_means(m_, cohort.conditions(rows));
    }
    std::uint64_t fit_hash() const override { return hash_; }

private:
    ConditionMeansModel m_;
    std::uint64_t hash_;
};

class RidgeFitted : public PipelineModel {
public:
    RidgeFitted(FittedPipeline pipe, RidgeModel r) : PipelineModel(std::move(pipe)), r_(std::move(r)) {}
    std::string notes() const override { return r_.jittered ? "rank-deficient design, jitter added" : ""; }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return predict_ridge(r_, X); }

private:
    RidgeModel r_;
};

class LdaRidgeFitted : public PipelineModel {
public:
    LdaRidgeFitted(FittedPipeline pipe, LdaRidgeModel m) : PipelineModel(std::move(pipe)), m_(std::move(m)) {}
    std::string notes() const override {
        if (m_.axis.zero_direction) return "class means coincide, intercept-only fallback";
        if (m_.axis.shrinkage_raised) return "singular covariance, shrinkage raised";
        return {};
    }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return predict_lda_ridge(m_, X); }

private:
    LdaRidgeModel m_;
};

class TreeFitted : public PipelineModel {
public:
    TreeFitted(FittedPipeline pipe, RegressionTree t) : PipelineModel(std::move(pipe)), t_(std::move(t)) {}
    std::string notes() const override { return fmt::format("depth {}, {} nodes", t_.depth(), t_.nodes.size()); }
    std::string dump() const override { return dump_tree(t_, pipe_.output_names()); }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return predict_tree(t_, X); }

private:
    RegressionTree t_;
};

class ForestFitted : public PipelineModel {
public:
    ForestFitted(FittedPipeline pipe, ForestModel f) : PipelineModel(std::move(pipe)), f_(std::move(f)) {}
    std::string notes() const override { return fmt::format("{} trees, mtry {}", f_.n_trees, f_.mtry); }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return predict_forest(f_, X); }

private:
    ForestModel f_;
};

class SpdFitted : public PipelineModel {
public:
    SpdFitted(FittedPipeline pipe, SpdRidgeModel m) : PipelineModel(std::move(pipe)), m_(std::move(m)) {}
    std::string notes() const override {
        return fmt::format("pool {} train + {} synthetic", m_.medoids.pool_train, m_.medoids.pool_synthetic);
    }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return spd_ridge_predict(m_, X); }

private:
    SpdRidgeModel m_;
};

class QkrFitted : public PipelineModel {
public:
    QkrFitted(FittedPipeline pipe, QKRPipelineModel m) : PipelineModel(std::move(pipe)), m_(std::move(m)) {}
    std::string notes() const override { return m_.gram.psd_repaired ? "powered kernel PSD-repaired" : ""; }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return qkr_pipeline_predict(m_, X); }

private:
    QKRPipelineModel m_;
};

class QkfFitted : public PipelineModel {
public:
    QkfFitted(FittedPipeline pipe, QKFModel m) : PipelineModel(std::move(pipe)), m_(std::move(m)) {}

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return qkf_predict(m_, X); }

private:
    QKFModel m_;
};

class VqrFitted : public PipelineModel {
public:
    VqrFitted(FittedPipeline pipe, VQRModel m) : PipelineModel(std::move(pipe)), m_(std::move(m)) {}
    std::string notes() const override {
        return fmt::format("train mse {:.6g} -> {:.6g}", m_.initial_loss, m_.final_loss);
    }

protected:
    Eigen::VectorXd predict_transformed(const Eigen::MatrixXd& X) const override { return vqr_predict(m_, X); }

private:
    VQRModel m_;
};

// ---------------------------------------------------------------------------

PipelineSpec angle_pipeline(const FamilyBudgets& budgets, std::size_t q) {
    PipelineSpec spec = budget_pipeline(budgets.quantum, budgets.compact);
    spec.pca_components = q;
    spec.angle_map = true;
    return spec;
}

FeatureMapConfig feature_map(const ParamSet& p) {
    FeatureMapConfig m;
    m.qubits = p.get_size("qubits");
    m.layers = p.get_size("layers");
    m.angle_scale = p.get_double("scale");
    return m;
}

/// Medoid sets shared by every grid point and alpha that sees the same fold
/// and pool settings.
class MedoidCache {
public:
    using Value = std::shared_ptr<const std::vector<MedoidSet>>;

    Value get(const std::string& key, const std::function<std::vector<MedoidSet>()>& build) {
        std::shared_future<Value> fut;
        std::promise<Value> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = entries_.find(key);
            if (it == entries_.end()) {
                fut = promise.get_future().share();
                entries_.emplace(key, fut);
                owner = true;
            } else {
                fut = it->second;
            }
        }
        if (owner) {
            try {
                promise.set_value(std::make_shared<const std::vector<MedoidSet>>(build()));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_future<Value>> entries_;
};


}  // namespace

FamilySpec make_spd_family(const SpdVariant& variant, const FamilyGrids& grids, const FamilyBudgets& budgets,
                           std::uint64_t seed) {
    if (variant.medoids.empty()) throw ConfigError("SPD variant '" + variant.key + "' has no medoid counts");
    FamilySpec f;
    f.key = variant.key;
    f.group = "SPD distance features";
    f.display = variant.display;
    f.budget = budgets.spd;
    f.grid = param_grid({{"descriptor", {to_string(variant.kind)}},
                         {"medoids", texts(variant.medoids)},
                         {"normalize", texts(variant.normalize)},
                         {"synthetic_factor", texts(variant.synthetic_factor)},
                         {"knn", {std::to_string(variant.knn)}},
                         {"alpha", texts(grids.ridge_alphas)}});
    const PipelineSpec spec = budget_pipeline(budgets.spd, budgets.compact);
    auto cache = std::make_shared<MedoidCache>();
    const std::uint64_t family_seed = derive_seed(seed, string_hash(variant.key));
    const auto ks = variant.medoids;
    const double shrinkage = grids.spd_shrinkage, eps = grids.spd_eps;

    f.fit = [=](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p, std::uint64_t,
                unsigned jobs) -> std::unique_ptr<FittedModel> {
        auto prep = prepare(cohort, target, rows, spec);
        SPDConfig cfg;
        cfg.kind = parse_descriptor(p.get("descriptor"));
        cfg.normalize = p.get_bool("normalize");
        cfg.eps = eps;
        cfg.k_nn = p.get_size("knn");
        cfg.shrinkage = shrinkage;
        cfg.n_medoids = p.get_size("medoids");
        cfg.n_synthetic = static_cast<std::size_t>(std::llround(p.get_double("synthetic_factor") * static_cast<double>(rows.size())));
        cfg.seed = derive_seed(family_seed, prep.pipe.fit_hash());
        cfg.jobs = jobs;
        const std::string key = fmt::format("{}|{}|{}|{}|{}", hex64(prep.pipe.fit_hash()), to_string(cfg.kind),
                                            cfg.normalize, cfg.n_synthetic, cfg.k_nn);
        const auto sets = cache->get(key, [&] { return build_medoid_sets(prep.X, cfg, ks); });
        const auto pos = static_cast<std::size_t>(std::find(ks.begin(), ks.end(), cfg.n_medoids) - ks.begin());
        if (pos >= ks.size()) throw ConfigError("medoid count not in the family grid");
        auto model = spd_ridge_fit_with_medoids(prep.X, prep.y, cfg, (*sets)[pos], p.get_double("alpha"));
        return std::make_unique<SpdFitted>(std::move(prep.pipe), std::move(model));
    };
    return f;
}

std::vector<SpdVariant> default_spd_ablation(const FamilyGrids& grids) {
    std::vector<SpdVariant> v(4);
    v[0].key = "spd_k0";
    v[0].display = "Ridge baseline (biomarkers only)";
    v[0].medoids = {0};
    v[1].key = "spd_outer_k3_nosyn";
    v[1].display = "Ridge + SPD distances (outer-product, K=3, no synthetic)";
    v[1].medoids = {3};
    v[2].key = "spd_outer_best_nosyn";
    v[2].display = "Ridge + SPD distances (outer-product; best, no synthetic)";
    v[2].medoids = grids.spd_medoids;
    v[2].normalize = grids.spd_normalize;
    v[3].key = "spd_localcov_k6_knn8_nosyn";
    v[3].display = "Ridge + SPD distances (local covariance, K=6, k=8, no synthetic)";
    v[3].kind = DescriptorKind::LocalCov;
    v[3].medoids = {6};
    v[3].knn = 8;
    return v;
}

std::vector<FamilySpec> make_families(const FamilyGrids& grids, const FamilyBudgets& budgets, std::uint64_t seed) {
    std::vector<FamilySpec> out;
    const auto alphas = texts(grids.ridge_alphas);

    {
        FamilySpec f{"global_mean", "Baselines", "Global mean baseline", budgets.raw, false, {ParamSet{}}, {}};
        f.fit = [](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet&, std::uint64_t,
                   unsigned) -> std::unique_ptr<FittedModel> {
            return std::make_unique<GlobalMeanFitted>(baseline_global_mean(cohort.target(target, rows)),
                                                      index_set_hash(rows));
        };
        out.push_back(std::move(f));
    }
    {
        FamilySpec f{"condition_means", "Baselines", "Condition means baseline", budgets.raw, false, {ParamSet{}}, {}};
        f.fit = [](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet&, std::uint64_t,
                   unsigned) -> std::unique_ptr<FittedModel> {
            return std::make_unique<ConditionMeansFitted>(
                baseline_condition_means(cohort.target(target, rows), cohort.conditions(rows)), index_set_hash(rows));
        };
        out.push_back(std::move(f));
    }

    auto classical = [&](const std::string& prefix, const std::string& group, FeatureBudget budget) {
        const PipelineSpec base = budget_pipeline(budget, budgets.compact);
        const bool engineered = budget == FeatureBudget::Engineered;

        FamilySpec lda{prefix + "_lda_ridge", group, "LDA condition axis then Ridge", budget, true,
                       param_grid({{"shrinkage", texts(grids.lda_shrinkage)}, {"alpha", alphas}}), {}};
        PipelineSpec lda_spec = base;
        lda_spec.include_condition = false;
        lda.fit = [lda_spec](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                             std::uint64_t, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, lda_spec);
            auto m = fit_lda_ridge(prep.X, cohort.conditions(rows), prep.y, p.get_double("alpha"),
                                   p.get_double("shrinkage"));
            return std::make_unique<LdaRidgeFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(lda));

        FamilySpec ridge{prefix + "_ridge", group, "Ridge", budget, true, param_grid({{"alpha", alphas}}), {}};
        PipelineSpec ridge_spec = base;
        ridge_spec.interactions = engineered;
        ridge.fit = [ridge_spec](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                                 std::uint64_t, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, ridge_spec);
            auto m = fit_ridge(prep.X, prep.y, p.get_double("alpha"));
            return std::make_unique<RidgeFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(ridge));

        FamilySpec forest{prefix + "_forest", group, "Random forest", budget, true,
                          param_grid({{"n_trees", {std::to_string(grids.forest_trees)}},
                                      {"min_leaf", texts(grids.forest_min_leaf)}}),
                          {}};
        forest.fit = [base](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                            std::uint64_t task, unsigned jobs) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, base);
            ForestParams fp;
            fp.n_trees = p.get_size("n_trees");
            fp.min_leaf = p.get_size("min_leaf");
            fp.seed = task;
            fp.jobs = jobs;
            auto m = fit_random_forest(prep.X, prep.y, fp);
            return std::make_unique<ForestFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(forest));

        FamilySpec tree{prefix + "_tree", group, "Shallow decision tree", budget, true,
                        param_grid({{"max_depth", texts(grids.tree_depths)}, {"min_leaf", texts(grids.tree_min_leaf)}}),
                        {}};
        tree.fit = [base](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                          std::uint64_t, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, base);
            auto m = fit_cart(prep.X, prep.y, static_cast<int>(p.get_size("max_depth")), p.get_size("min_leaf"));
            return std::make_unique<TreeFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(tree));
    };
    classical("raw", "Classical models (raw features)", budgets.raw);
    classical("eng", "Classical models (engineered features)", budgets.engineered);

    {
        SpdVariant k0;
        k0.key = "spd_k0";
        k0.display = "SPD Ridge baseline (biomarkers only, K=0)";
        k0.medoids = {0};
        out.push_back(make_spd_family(k0, grids, budgets, seed));
        SpdVariant best;
        best.key = "spd_best";
        best.display = "Ridge + SPD distances (outer-product; best)";
        best.medoids = grids.spd_medoids;
        best.normalize = grids.spd_normalize;
        best.synthetic_factor = grids.spd_synthetic_factor;
        best.knn = grids.spd_knn;
        out.push_back(make_spd_family(best, grids, budgets, seed));
    }

    const std::string qgroup = "Quantum kernels";
    {
        FamilySpec f{"angle_ridge", qgroup, "Angle-space Ridge", budgets.quantum, true,
                     param_grid({{"qubits", texts(grids.q_qubits)}, {"alpha", alphas}}), {}};
        f.fit = [budgets](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                          std::uint64_t, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, angle_pipeline(budgets, p.get_size("qubits")));
            auto m = fit_ridge(prep.X, prep.y, p.get_double("alpha"));
            return std::make_unique<RidgeFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(f));
    }
    {
        FamilySpec f{"qkr_full", qgroup, "QKR-full", budgets.quantum, true,
                     param_grid({{"qubits", texts(grids.q_qubits)},
                                 {"layers", texts(grids.q_layers)},
                                 {"scale", texts(grids.q_scales)},
                                 {"power", texts(grids.q_powers)},
                                 {"center", {grids.qkr_center ? "true" : "false"}},
                                 {"lambda", texts(grids.q_lambdas)}}),
                     {}};
        f.fit = [budgets](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                          std::uint64_t, unsigned jobs) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, angle_pipeline(budgets, p.get_size("qubits")));
            QKRConfig cfg;
            cfg.map = feature_map(p);
            cfg.power = p.get_double("power");
            cfg.center = p.get_bool("center");
            cfg.lambda = p.get_double("lambda");
            cfg.jobs = jobs;
            auto m = qkr_pipeline_fit(prep.X, prep.y, cfg);
            return std::make_unique<QkrFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(f));
    }
    {
        FamilySpec f{"qkf_cluster", qgroup, "QKF-cluster (Nystrom)", budgets.quantum, true,
                     param_grid({{"qubits", texts(grids.q_qubits)},
                                 {"layers", texts(grids.q_layers)},
                                 {"scale", texts(grids.q_scales)},
                                 {"centers", texts(grids.qkf_centers)},
                                 {"whiten", {grids.qkf_whiten ? "true" : "false"}},
                                 {"lambda", texts(grids.q_lambdas)}}),
                     {}};
        f.fit = [budgets](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                          std::uint64_t task, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, angle_pipeline(budgets, p.get_size("qubits")));
            QKFConfig cfg;
            cfg.map = feature_map(p);
            cfg.centers = p.get_size("centers");
            cfg.whiten = p.get_bool("whiten");
            cfg.lambda = p.get_double("lambda");
            cfg.seed = task;
            auto m = qkf_fit(prep.X, prep.y, cfg);
            return std::make_unique<QkfFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(f));
    }
    {
        FamilySpec f{"vqr", qgroup, "VQR", budgets.quantum, true,
                     param_grid({{"qubits", texts(grids.vqr_qubits)},
                                 {"layers", texts(grids.vqr_layers)},
                                 {"scale", {"1"}},
                                 {"var_layers", {std::to_string(grids.vqr_var_layers)}},
                                 {"learning_rate", {format_param(grids.vqr_learning_rate)}},
                                 {"epochs", {std::to_string(grids.vqr_epochs)}}}),
                     {}};
        f.fit = [budgets](const Cohort& cohort, Target target, std::span<const Index> rows, const ParamSet& p,
                          std::uint64_t task, unsigned) -> std::unique_ptr<FittedModel> {
            auto prep = prepare(cohort, target, rows, angle_pipeline(budgets, p.get_size("qubits")));
            VQRConfig cfg;
            cfg.map = feature_map(p);
            cfg.var_layers = p.get_size("var_layers");
            cfg.learning_rate = p.get_double("learning_rate");
            cfg.epochs = p.get_size("epochs");
            cfg.seed = task;
            auto m = vqr_fit(prep.X, prep.y, cfg);
            return std::make_unique<VqrFitted>(std::move(prep.pipe), std::move(m));
        };
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace qsb

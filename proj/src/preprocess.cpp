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

#include "qsb/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qsb {

// ---------------------------------------------------------------------------
// Yeo-Johnson

double yj_transform(double x, double lambda) {
    if (x >= 0) {
        const double l = std::log1p(x);
        if (lambda == 0.0) return l;
        return std::expm1(lambda * l) / lambda;
    }
    const double l = std::log1p(-x);
    const double a = 2.0 - lambda;
    if (a == 0.0) return -l;
    return -std::expm1(a * l) / a;
}

double yj_log_likelihood(std::span<const double> values, double lambda) {
    const auto n = static_cast<double>(values.size());
    double mean = 0.0, jac = 0.0;
    std::vector<double> t(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        t[i] = yj_transform(values[i], lambda);
        mean += t[i];
        jac += std::copysign(std::log1p(std::abs(values[i])), values[i]);
    }
    mean /= n;
    double var = 0.0;
    for (double v : t) var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return -0.5 * n * std::log(var) + (lambda - 1.0) * jac;
}

YJParams estimate_yj_lambda(std::span<const double> values) {
    YJParams out;
    if (values.size() < 3) {
        out.degenerate = true;
        return out;
    }
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (*mn == *mx) {
        out.degenerate = true;
        return out;
    }

    constexpr double step = 0.05;
    const int n_grid = static_cast<int>(std::lround((YJParams::kSearchMax - YJParams::kSearchMin) / step));
    double best_l = 1.0, best_ll = -std::numeric_limits<double>::infinity();
    for (int g = 0; g <= n_grid; ++g) {
        const double l = YJParams::kSearchMin + step * g;
        const double ll = yj_log_likelihood(values, l);
        if (ll > best_ll) {
            best_ll = ll;
            best_l = l;
        }
    }
    if (!std::isfinite(best_ll)) {
        out.degenerate = true;
        return out;
    }

    double a = std::max(YJParams::kSearchMin, best_l - step);
    double b = std::min(YJParams::kSearchMax, best_l + step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = yj_log_likelihood(values, c), fd = yj_log_likelihood(values, d);
    for (int it = 0; it < 80 && (b - a) > 1e-10; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = yj_log_likelihood(values, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = yj_log_likelihood(values, d);
        }
    }
    const double refined = 0.5 * (a + b);
    out.lambda = yj_log_likelihood(values, refined) >= best_ll ? refined : best_l;
    return out;
}

// ---------------------------------------------------------------------------
// Scaling

std::string to_string(ScalerKind k) {
    switch (k) {
        case ScalerKind::None: return "none";
        case ScalerKind::Standard: return "standard";
        case ScalerKind::Robust: return "robust";
    }
    return "?";
}

ScalerKind parse_scaler(const std::string& s) {
    if (s == "none") return ScalerKind::None;
    if (s == "standard") return ScalerKind::Standard;
    if (s == "robust") return ScalerKind::Robust;
    throw ConfigError("unknown scaler '" + s + "'");
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw FitError("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ScalerParams fit_scaler(std::span<const double> values, ScalerKind kind) {
    ScalerParams p;
    p.kind = kind;
    if (kind == ScalerKind::None) return p;
    if (values.size() < 2) throw FitError("scaler needs at least 2 values");
    if (kind == ScalerKind::Standard) {
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        p.center = mean;
        p.scale = std::sqrt(ss / n);
    } else {
        std::vector<double> sorted(values.begin(), values.end());
        std::sort(sorted.begin(), sorted.end());
        p.center = sorted_quantile(sorted, 0.5);
        p.scale = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    }
    p.scale = std::max(p.scale, ScalerParams::kScaleFloor);
    return p;
}

double apply_scaler(double x, const ScalerParams& params) {
    if (params.kind == ScalerKind::None) return x;
    return (x - params.center) / params.scale;
}

// ---------------------------------------------------------------------------
// Target transform

double target_forward(double y) {
    if (!(y > -1.0)) throw NumericError("log1p target transform needs y > -1");
    return std::log1p(y);
}

double target_inverse(double yhat) { return std::expm1(yhat); }

// ---------------------------------------------------------------------------
// PCA

PCAModel fit_pca(const Eigen::MatrixXd& X, std::size_t q) {
    const auto p = static_cast<std::size_t>(X.cols());
    if (q == 0 || q > p) throw ConfigError("PCA needs 1 <= q <= number of features");
    if (static_cast<std::size_t>(X.rows()) < q + 1) throw FitError("PCA needs at least q + 1 rows");

    PCAModel m;
    m.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - m.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(X.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");

    m.total_variance = cov.trace();
    m.components.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    m.explained_variance.resize(static_cast<Eigen::Index>(q));
    // Eigen returns ascending eigenvalues.
    for (std::size_t k = 0; k < q; ++k) {
        const auto src = static_cast<Eigen::Index>(p - 1 - k);
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        m.components.col(static_cast<Eigen::Index>(k)) = v;
        m.explained_variance(static_cast<Eigen::Index>(k)) = std::max(0.0, eig.eigenvalues()(src));
    }
    return m;
}

Eigen::VectorXd pca_project(const Eigen::VectorXd& x, const PCAModel& model) {
    if (x.size() != model.mean.size()) throw ShapeError("PCA input dimension mismatch");
    return model.components.transpose() * (x - model.mean);
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& X, const PCAModel& model) {
    if (X.cols() != model.mean.size()) throw ShapeError("PCA input dimension mismatch");
    return (X.rowwise() - model.mean.transpose()) * model.components;
}

// ---------------------------------------------------------------------------
// Angle embedding

AngleMap fit_angle_map(const Eigen::MatrixXd& U, double theta_min, double theta_max) {
    if (!(theta_min < theta_max)) throw ConfigError("angle interval needs theta_min < theta_max");
    if (U.rows() == 0) throw FitError("angle map needs at least one row");
    AngleMap m;
    m.theta_min = theta_min;
    m.theta_max = theta_max;
    m.lo = U.colwise().minCoeff().transpose();
    m.hi = U.colwise().maxCoeff().transpose();
    m.degenerate.resize(static_cast<std::size_t>(U.cols()));
    for (Eigen::Index j = 0; j < U.cols(); ++j) m.degenerate[static_cast<std::size_t>(j)] = !(m.hi(j) > m.lo(j));
    return m;
}

double apply_angle_map(double u, const AngleMap& map, std::size_t component) {
    const auto j = static_cast<Eigen::Index>(component);
    if (map.degenerate.at(component)) return 0.5 * (map.theta_min + map.theta_max);
    const double t = std::clamp((u - map.lo(j)) / (map.hi(j) - map.lo(j)), 0.0, 1.0);
    return map.theta_min + t * (map.theta_max - map.theta_min);
}

Eigen::MatrixXd apply_angle_map(const Eigen::MatrixXd& U, const AngleMap& map) {
    if (static_cast<std::size_t>(U.cols()) != map.degenerate.size()) throw ShapeError("angle map dimension mismatch");
    Eigen::MatrixXd out(U.rows(), U.cols());
    for (Eigen::Index i = 0; i < U.rows(); ++i)
        for (Eigen::Index j = 0; j < U.cols(); ++j) out(i, j) = apply_angle_map(U(i, j), map, static_cast<std::size_t>(j));
    return out;
}

// ---------------------------------------------------------------------------
// Engineered composites

namespace {

struct Composite {
    const char* name;
    const char* a;
    const char* b;
    bool ratio;
};

constexpr Composite kComposites[] = {
    {"NLR", "balf_neutrophils", "balf_lymphocytes", true},
    {"CRPperCell", "crp", "balf_total", true},
    {"OxStressOverVO2", "ox_stress", "vo2", true},
    {"CRPVO2", "crp", "vo2", false},
    {"CRPOxStress", "crp", "ox_stress", false},
    {"TNFaNeutrophils", "tnfa_mrna", "balf_neutrophils", false},
};

std::optional<std::size_t> find_name(const std::vector<std::string>& names, const char* n) {
    auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::vector<std::string> engineered_feature_names(const std::vector<std::string>& available) {
    std::vector<std::string> out;
    for (const auto& c : kComposites) {
        if (find_name(available, c.a) && find_name(available, c.b)) out.emplace_back(c.name);
    }
    return out;
}

std::vector<double> engineered_features(std::span<const double> x, const std::vector<std::string>& names) {
    if (x.size() != names.size()) throw ShapeError("engineered_features: value/name length mismatch");
    std::vector<double> out(x.begin(), x.end());
    for (const auto& c : kComposites) {
        auto ia = find_name(names, c.a), ib = find_name(names, c.b);
        if (!ia || !ib) continue;
        const double a = x[*ia], b = x[*ib];
        out.push_back(c.ratio ? a / (b + kEngineeredEps) : a * b);
    }
    return out;
}

std::vector<double> condition_interactions(std::span<const double> phi, int c) {
    std::vector<double> out(phi.begin(), phi.end());
    out.push_back(static_cast<double>(c));
    for (double v : phi) out.push_back(c * v);
    return out;
}

// ---------------------------------------------------------------------------
// Median imputation

MedianImputer fit_median_imputer(const std::vector<std::string>& names,
                                 const std::vector<std::vector<std::optional<double>>>& columns) {
    if (names.size() != columns.size()) throw ShapeError("imputer: name/column count mismatch");
    MedianImputer imp;
    imp.columns = names;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        std::vector<double> present;
        for (const auto& v : columns[j])
            if (v) present.push_back(*v);
        if (present.empty()) throw FitError("column '" + names[j] + "' has no observed training values");
        std::sort(present.begin(), present.end());
        imp.medians.push_back(sorted_quantile(present, 0.5));
    }
    return imp;
}

std::vector<double> apply_median_imputer(const MedianImputer& imp, std::size_t column,
                                         const std::vector<std::optional<double>>& values) {
    const double med = imp.medians.at(column);
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(v ? *v : med);
    return out;
}

// ---------------------------------------------------------------------------
// Fitted pipeline

std::vector<double> FittedPipeline::forward_targets(std::span<const double> y) const {
    std::vector<double> out;
    out.reserve(y.size());
    for (double v : y) out.push_back(forward_target(v));
    return out;
}

std::vector<double> FittedPipeline::inverse_targets(std::span<const double> y) const {
    std::vector<double> out;
    out.reserve(y.size());
    for (double v : y) out.push_back(inverse_target(v));
    return out;
}

Eigen::MatrixXd FittedPipeline::continuous_block(const Cohort& cohort, std::span<const Index> rows) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const std::size_t d = biomarkers_.size();
    Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
        auto col = apply_median_imputer(imputer_, j, cohort.column(biomarkers_[j], rows));
        for (Eigen::Index i = 0; i < n; ++i) raw(i, static_cast<Eigen::Index>(j)) = col[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(continuous_names_.size()));
    std::vector<double> rec(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) rec[j] = raw(i, static_cast<Eigen::Index>(j));
        std::vector<double> full = spec_.engineered ? engineered_features(rec, biomarkers_) : rec;
        for (std::size_t j = 0; j < full.size(); ++j) z(i, static_cast<Eigen::Index>(j)) = full[j];
    }
    if (!yj_.empty()) {
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            for (Eigen::Index i = 0; i < n; ++i) z(i, j) = yj_transform(z(i, j), yj_[static_cast<std::size_t>(j)].lambda);
    }
    if (!scalers_.empty()) {
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            for (Eigen::Index i = 0; i < n; ++i) z(i, j) = apply_scaler(z(i, j), scalers_[static_cast<std::size_t>(j)]);
    }
    return z;
}

Eigen::MatrixXd FittedPipeline::assemble(const Eigen::MatrixXd& z, const std::vector<int>& cond) const {
    if (!spec_.include_condition) return z;
    const Eigen::Index d = z.cols();
    const Eigen::Index width = spec_.interactions ? 2 * d + 1 : d + 1;
    Eigen::MatrixXd out(z.rows(), width);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double c = cond[static_cast<std::size_t>(i)];
        out.row(i).head(d) = z.row(i);
        out(i, d) = c;
        if (spec_.interactions) out.row(i).tail(d) = c * z.row(i);
    }
    return out;
}

Eigen::MatrixXd FittedPipeline::transform(const Cohort& cohort, std::span<const Index> rows) const {
    Eigen::MatrixXd x = assemble(continuous_block(cohort, rows),
                                 spec_.include_condition ? cohort.conditions(rows) : std::vector<int>{});
    if (pca_) x = pca_project(x, *pca_);
    if (angles_) x = apply_angle_map(x, *angles_);
    return x;
}

std::vector<std::string> FittedPipeline::output_names() const {
    std::vector<std::string> names;
    if (pca_) {
        for (Eigen::Index k = 0; k < pca_->components.cols(); ++k)
            names.push_back((angles_ ? "theta" : "pc") + std::to_string(k + 1));
        return names;
    }
    names = continuous_names_;
    if (spec_.include_condition) {
        names.emplace_back("condition");
        if (spec_.interactions)
            for (const auto& n : continuous_names_) names.push_back("condition_x_" + n);
    }
    return names;
}

std::size_t FittedPipeline::output_dim() const { return output_names().size(); }

FittedPipeline fit_pipeline(const Cohort& cohort, std::span<const Index> rows, const PipelineSpec& spec,
                            std::optional<Target> target) {
    if (rows.size() < 2) throw FitError("pipeline needs at least 2 fit rows");
    FittedPipeline fp;
    fp.spec_ = spec;
    fp.fit_hash_ = index_set_hash(rows);
    fp.fit_rows_ = rows.size();

    std::vector<std::string> candidates = spec.biomarkers.empty() ? cohort.feature_names() : spec.biomarkers;
    for (const auto& b : candidates) {
        if (!cohort.has_feature(b)) throw ConfigError("biomarker '" + b + "' is not in the cohort");
    }

    std::vector<std::vector<std::optional<double>>> columns;
    for (const auto& b : candidates) columns.push_back(cohort.column(b, rows));

    if (spec.auto_select > 0) {
        if (!target) throw ConfigError("automatic biomarker selection needs a target");
        if (spec.auto_select > candidates.size()) throw ConfigError("auto_select exceeds the candidate count");
        const auto y = cohort.target(*target, rows);
        auto pre = fit_median_imputer(candidates, columns);
        std::vector<std::pair<double, std::size_t>> score;
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            auto x = apply_median_imputer(pre, j, columns[j]);
            const double n = static_cast<double>(x.size());
            const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
            const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
            double sxy = 0, sxx = 0, syy = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                sxy += (x[i] - mx) * (y[i] - my);
                sxx += (x[i] - mx) * (x[i] - mx);
                syy += (y[i] - my) * (y[i] - my);
            }
            const double r = (sxx > 0 && syy > 0) ? std::abs(sxy) / std::sqrt(sxx * syy) : 0.0;
            score.emplace_back(-r, j);
        }
        std::sort(score.begin(), score.end());
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < spec.auto_select; ++k) keep.push_back(score[k].second);
        std::sort(keep.begin(), keep.end());
        std::vector<std::string> chosen;
        std::vector<std::vector<std::optional<double>>> chosen_cols;
        for (auto j : keep) {
            chosen.push_back(candidates[j]);
            chosen_cols.push_back(std::move(columns[j]));
        }
        candidates = std::move(chosen);
        columns = std::move(chosen_cols);
    }

    fp.biomarkers_ = candidates;
    fp.imputer_ = fit_median_imputer(candidates, columns);
    fp.continuous_names_ = candidates;
    if (spec.engineered) {
        for (auto& n : engineered_feature_names(candidates)) fp.continuous_names_.push_back(n);
    }

    // Fit YJ and scaler column by column on the imputed (and composited) block.
    Eigen::MatrixXd z = fp.continuous_block(cohort, rows);
    if (spec.power_transform) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            std::vector<double> col(z.col(j).data(), z.col(j).data() + z.rows());
            fp.yj_.push_back(estimate_yj_lambda(col));
            for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = yj_transform(z(i, j), fp.yj_.back().lambda);
        }
    }
    if (spec.scaler != ScalerKind::None) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            std::vector<double> col(z.col(j).data(), z.col(j).data() + z.rows());
            fp.scalers_.push_back(fit_scaler(col, spec.scaler));
        }
    }

    if (spec.pca_components > 0 || spec.angle_map) {
        Eigen::MatrixXd x = fp.transform(cohort, rows);
        if (spec.pca_components > 0) {
            fp.pca_ = fit_pca(x, spec.pca_components);
            x = pca_project(x, *fp.pca_);
        }
        if (spec.angle_map) fp.angles_ = fit_angle_map(x, spec.theta_min, spec.theta_max);
    }
    return fp;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json FittedPipeline::to_json() const {
    nlohmann::json j;
    j["fit_hash"] = hex64(fit_hash_);
    j["fit_rows"] = fit_rows_;
    j["spec"] = {{"engineered", spec_.engineered},
                 {"include_condition", spec_.include_condition},
                 {"interactions", spec_.interactions},
                 {"power_transform", spec_.power_transform},
                 {"scaler", to_string(spec_.scaler)},
                 {"pca_components", spec_.pca_components},
                 {"angle_map", spec_.angle_map},
                 {"theta_min", spec_.theta_min},
                 {"theta_max", spec_.theta_max},
                 {"log1p_target", spec_.log1p_target},
                 {"auto_select", spec_.auto_select},
                 {"biomarkers", spec_.biomarkers}};
    j["biomarkers"] = biomarkers_;
    j["continuous"] = continuous_names_;
    j["imputer_medians"] = imputer_.medians;
    auto& yj = j["yeo_johnson"] = nlohmann::json::array();
    for (const auto& p : yj_) yj.push_back({{"lambda", p.lambda}, {"degenerate", p.degenerate}});
    auto& sc = j["scalers"] = nlohmann::json::array();
    for (const auto& s : scalers_) sc.push_back({{"kind", to_string(s.kind)}, {"center", s.center}, {"scale", s.scale}});
    if (pca_) {
        std::vector<std::vector<double>> comps;
        for (Eigen::Index k = 0; k < pca_->components.cols(); ++k) comps.push_back(std::vector<double>(
            pca_->components.col(k).data(), pca_->components.col(k).data() + pca_->components.rows()));
        j["pca"] = {{"mean", vec_json(pca_->mean)},
                    {"components", comps},
                    {"explained_variance", vec_json(pca_->explained_variance)},
                    {"total_variance", pca_->total_variance}};
    }
    if (angles_) {
        j["angle_map"] = {{"lo", vec_json(angles_->lo)},
                          {"hi", vec_json(angles_->hi)},
                          {"degenerate", angles_->degenerate},
                          {"theta_min", angles_->theta_min},
                          {"theta_max", angles_->theta_max}};
    }
    return j;
}

FittedPipeline FittedPipeline::from_json(const nlohmann::json& j) {
    FittedPipeline fp;
    fp.fit_hash_ = std::stoull(j.at("fit_hash").get<std::string>(), nullptr, 16);
    fp.fit_rows_ = j.at("fit_rows").get<std::size_t>();
    const auto& s = j.at("spec");
    fp.spec_.engineered = s.at("engineered");
    fp.spec_.include_condition = s.at("include_condition");
    fp.spec_.interactions = s.at("interactions");
    fp.spec_.power_transform = s.at("power_transform");
    fp.spec_.scaler = parse_scaler(s.at("scaler"));
    fp.spec_.pca_components = s.at("pca_components");
    fp.spec_.angle_map = s.at("angle_map");
    fp.spec_.theta_min = s.at("theta_min");
    fp.spec_.theta_max = s.at("theta_max");
    fp.spec_.log1p_target = s.at("log1p_target");
    fp.spec_.auto_select = s.at("auto_select");
    fp.spec_.biomarkers = s.at("biomarkers").get<std::vector<std::string>>();
    fp.biomarkers_ = j.at("biomarkers").get<std::vector<std::string>>();
    fp.continuous_names_ = j.at("continuous").get<std::vector<std::string>>();
    fp.imputer_.columns = fp.biomarkers_;
    fp.imputer_.medians = j.at("imputer_medians").get<std::vector<double>>();
    for (const auto& p : j.at("yeo_johnson")) fp.yj_.push_back({p.at("lambda"), p.at("degenerate")});
    for (const auto& sc : j.at("scalers")) fp.scalers_.push_back({parse_scaler(sc.at("kind")), sc.at("center"), sc.at("scale")});
    if (j.contains("pca")) {
        PCAModel m;
        const auto& pj = j.at("pca");
        m.mean = json_vec(pj.at("mean"));
        m.explained_variance = json_vec(pj.at("explained_variance"));
        m.total_variance = pj.at("total_variance");
        auto comps = pj.at("components").get<std::vector<std::vector<double>>>();
        m.components.resize(m.mean.size(), static_cast<Eigen::Index>(comps.size()));
        for (std::size_t k = 0; k < comps.size(); ++k)
            m.components.col(static_cast<Eigen::Index>(k)) =
                Eigen::Map<Eigen::VectorXd>(comps[k].data(), static_cast<Eigen::Index>(comps[k].size()));
        fp.pca_ = std::move(m);
    }
    if (j.contains("angle_map")) {
        AngleMap a;
        const auto& aj = j.at("angle_map");
        a.lo = json_vec(aj.at("lo"));
        a.hi = json_vec(aj.at("hi"));
        a.degenerate = aj.at("degenerate").get<std::vector<bool>>();
        a.theta_min = aj.at("theta_min");
        a.theta_max = aj.at("theta_max");
        fp.angles_ = std::move(a);
    }
    return fp;
}

}  // namespace qsb

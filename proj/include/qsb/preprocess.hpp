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

#pragma once

#include "qsb/common.hpp"
#include "qsb/data.hpp"

#include <Eigen/Dense>
#include <json.hpp>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qsb {

// ---------------------------------------------------------------------------
// Yeo-Johnson

/// Four-branch Yeo-Johnson transform. Total and strictly increasing in x.
double yj_transform(double x, double lambda);

/// Gaussian profile log-likelihood of the transformed column, Jacobian
/// term included.
double yj_log_likelihood(std::span<const double> values, double lambda);

struct YJParams {
    double lambda = 1.0;
    bool degenerate = false;  // constant column, lambda forced to 1
    static constexpr double kSearchMin = -5.0;
    static constexpr double kSearchMax = 5.0;
};

/// Maximum-likelihood lambda on [-5, 5]: coarse grid (step 0.05) followed by
/// golden-section refinement around the best grid point.
YJParams estimate_yj_lambda(std::span<const double> values);

// ---------------------------------------------------------------------------
// Scaling

enum class ScalerKind { None, Standard, Robust };

std::string to_string(ScalerKind k);
ScalerKind parse_scaler(const std::string& s);

struct ScalerParams {
    ScalerKind kind = ScalerKind::Standard;
    double center = 0.0;
    double scale = 1.0;
    static constexpr double kScaleFloor = 1e-12;
};

/// Linear-interpolation quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

ScalerParams fit_scaler(std::span<const double> values, ScalerKind kind);
double apply_scaler(double x, const ScalerParams& params);

// ---------------------------------------------------------------------------
// Target transform (log1p pair)

double target_forward(double y);
double target_inverse(double yhat);

// ---------------------------------------------------------------------------
// PCA

struct PCAModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;          // p x q, orthonormal columns
    Eigen::VectorXd explained_variance;  // q, nonincreasing
    double total_variance = 0.0;
};

/// Top-q eigenvectors of the (n-1)-normalized covariance of X's rows. Each
/// component's largest-magnitude entry is made positive.
PCAModel fit_pca(const Eigen::MatrixXd& X, std::size_t q);
Eigen::VectorXd pca_project(const Eigen::VectorXd& x, const PCAModel& model);
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& X, const PCAModel& model);

// ---------------------------------------------------------------------------
// Angle embedding

struct AngleMap {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    std::vector<bool> degenerate;
    double theta_min = -std::numbers::pi / 2;
    double theta_max = std::numbers::pi / 2;
};

AngleMap fit_angle_map(const Eigen::MatrixXd& U, double theta_min = -std::numbers::pi / 2,
                       double theta_max = std::numbers::pi / 2);
double apply_angle_map(double u, const AngleMap& map, std::size_t component);
Eigen::MatrixXd apply_angle_map(const Eigen::MatrixXd& U, const AngleMap& map);

// ---------------------------------------------------------------------------
// Engineered composites and condition interactions

inline constexpr double kEngineeredEps = 1e-9;

/// Names of the composites that can be built from `available` columns, in
/// fixed order: NLR, CRPperCell, OxStressOverVO2, CRPVO2, CRPOxStress,
/// TNFaNeutrophils.
std::vector<std::string> engineered_feature_names(const std::vector<std::string>& available);

/// Returns x followed by every composite whose sources appear in `names`.
std::vector<double> engineered_features(std::span<const double> x, const std::vector<std::string>& names);

/// [phi, c, c * phi]
std::vector<double> condition_interactions(std::span<const double> phi, int c);

// ---------------------------------------------------------------------------
// Median imputation

struct MedianImputer {
    std::vector<std::string> columns;
    std::vector<double> medians;
};

MedianImputer fit_median_imputer(const std::vector<std::string>& names,
                                 const std::vector<std::vector<std::optional<double>>>& columns);
std::vector<double> apply_median_imputer(const MedianImputer& imp, std::size_t column,
                                         const std::vector<std::optional<double>>& values);

// ---------------------------------------------------------------------------
// Fitted pipeline

struct PipelineSpec {
    /// Explicit biomarker list; empty means every cohort feature column.
    std::vector<std::string> biomarkers;
    /// Pick the `auto_select` biomarkers most correlated (absolute Pearson)
    /// with the target on the fit rows. 0 disables.
    std::size_t auto_select = 0;
    bool engineered = false;
    bool include_condition = true;
    bool interactions = false;
    bool power_transform = true;
    ScalerKind scaler = ScalerKind::Standard;
    std::size_t pca_components = 0;
    bool angle_map = false;
    double theta_min = -std::numbers::pi / 2;
    double theta_max = std::numbers::pi / 2;
    bool log1p_target = true;
};

class FittedPipeline {
public:
    Eigen::MatrixXd transform(const Cohort& cohort, std::span<const Index> rows) const;

    double forward_target(double y) const { return spec_.log1p_target ? target_forward(y) : y; }
    double inverse_target(double y) const { return spec_.log1p_target ? target_inverse(y) : y; }
    std::vector<double> forward_targets(std::span<const double> y) const;
    std::vector<double> inverse_targets(std::span<const double> y) const;

    const PipelineSpec& spec() const { return spec_; }
    const std::vector<std::string>& biomarkers() const { return biomarkers_; }
    std::vector<std::string> output_names() const;
    std::size_t output_dim() const;
    std::uint64_t fit_hash() const { return fit_hash_; }
    std::size_t fit_rows() const { return fit_rows_; }
    const std::vector<YJParams>& yj() const { return yj_; }
    const std::vector<ScalerParams>& scalers() const { return scalers_; }
    const std::optional<PCAModel>& pca() const { return pca_; }
    const std::optional<AngleMap>& angles() const { return angles_; }
    const MedianImputer& imputer() const { return imputer_; }

    nlohmann::json to_json() const;
    static FittedPipeline from_json(const nlohmann::json& j);

private:
    friend FittedPipeline fit_pipeline(const Cohort&, std::span<const Index>, const PipelineSpec&,
                                       std::optional<Target>);

    Eigen::MatrixXd continuous_block(const Cohort& cohort, std::span<const Index> rows) const;
    Eigen::MatrixXd assemble(const Eigen::MatrixXd& z, const std::vector<int>& cond) const;

    PipelineSpec spec_;
    std::vector<std::string> biomarkers_;
    std::vector<std::string> continuous_names_;  // biomarkers + composites
    MedianImputer imputer_;
    std::vector<YJParams> yj_;
    std::vector<ScalerParams> scalers_;
    std::optional<PCAModel> pca_;
    std::optional<AngleMap> angles_;
    std::uint64_t fit_hash_ = 0;
    std::size_t fit_rows_ = 0;
};

/// Fits every transform on `rows` only and records their set hash. `target`
/// is read only when automatic biomarker selection is requested.
FittedPipeline fit_pipeline(const Cohort& cohort, std::span<const Index> rows, const PipelineSpec& spec,
                            std::optional<Target> target = std::nullopt);

}  // namespace qsb

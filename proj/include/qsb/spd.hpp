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
#include "qsb/linmodels.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace qsb {

enum class SpdSource { Outer, LocalCov, Synthetic };
enum class DescriptorKind { Outer, LocalCov };

std::string to_string(DescriptorKind k);
DescriptorKind parse_descriptor(const std::string& s);

struct SPDDescriptor {
    Eigen::MatrixXd matrix;
    double jitter = 0.0;
    SpdSource source = SpdSource::Outer;
};

inline constexpr double kDefaultSpdJitter = 1e-6;
inline constexpr double kNormalizeDelta = 1e-12;
inline constexpr double kEigenFloor = 1e-14;

/// Throws NumericError unless the matrix is symmetric to 1e-10 and its
/// smallest eigenvalue is at least jitter / 2.
void check_spd(const SPDDescriptor& d);

/// x x^T + eps I, with x optionally scaled to unit norm first.
SPDDescriptor outer_descriptor(const Eigen::VectorXd& x, bool normalize, double eps = kDefaultSpdJitter);

struct SPDConfig {
    DescriptorKind kind = DescriptorKind::Outer;
    bool normalize = true;
    double eps = kDefaultSpdJitter;
    std::size_t k_nn = 8;
    double shrinkage = 0.1;
    std::size_t n_medoids = 3;
    std::size_t n_synthetic = 0;
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    void validate() const;
};

/// Shrunk covariance of the k_nn training rows nearest to x (Euclidean, ties
/// to the lower row index). Neighbourhoods come from `train_X` only.
SPDDescriptor local_cov_descriptor(const Eigen::VectorXd& x, const Eigen::MatrixXd& train_X, const SPDConfig& cfg);

SPDDescriptor make_descriptor(const Eigen::VectorXd& x, const Eigen::MatrixXd& train_X, const SPDConfig& cfg);

/// Sum of log eigenvalues; NumericError names `what` when an eigenvalue sits
/// at or below the floor.
double logdet_spd(const Eigen::MatrixXd& S, const char* what = "matrix");

/// Jensen-Bregman LogDet (Stein) divergence.
double stein_divergence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Divergence given precomputed logdets of A and B.
double stein_divergence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double logdet_a, double logdet_b);

Eigen::MatrixXd matrix_log(const Eigen::MatrixXd& S);
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& M);

/// exp((1 - t) log Sa + t log Sb)
SPDDescriptor loge_interpolate(const SPDDescriptor& a, const SPDDescriptor& b, double t);

/// n_syn Log-Euclidean blends of random distinct training pairs.
std::vector<SPDDescriptor> synth_augment(const std::vector<SPDDescriptor>& train, std::size_t n_syn, std::uint64_t seed);

/// Clustering pool. Only training and synthetic descriptors can enter.
class SpdPool {
public:
    void add_train(std::vector<SPDDescriptor> train);
    void add_synthetic(std::vector<SPDDescriptor> synthetic);

    const std::vector<SPDDescriptor>& members() const { return members_; }
    std::size_t train_count() const { return n_train_; }
    std::size_t synthetic_count() const { return n_syn_; }

private:
    std::vector<SPDDescriptor> members_;
    std::size_t n_train_ = 0;
    std::size_t n_syn_ = 0;
};

Eigen::MatrixXd divergence_matrix(const std::vector<SPDDescriptor>& pool, unsigned jobs = 1);

struct PamResult {
    IndexList medoids;       // sorted
    IndexList assignment;    // nearest medoid position for each point
    double objective = 0.0;  // sum of divergences to nearest medoid
    std::size_t swaps = 0;
};

inline constexpr std::size_t kPamMaxIterations = 100;

/// PAM: greedy BUILD then best-improvement SWAP until no swap lowers the
/// objective (or the iteration cap). Ties resolve to the lowest index.
PamResult pam_medoids(const Eigen::MatrixXd& divergences, std::size_t k, std::uint64_t seed = 0);

/// Sum over points of the divergence to the nearest listed medoid.
double medoid_objective(const Eigen::MatrixXd& divergences, const IndexList& medoids);

struct MedoidSet {
    std::vector<SPDDescriptor> prototypes;
    std::vector<double> logdets;
    IndexList pool_indices;
    std::size_t pool_train = 0;
    std::size_t pool_synthetic = 0;
    std::uint64_t seed = 0;
};

Eigen::VectorXd spd_distance_features(const SPDDescriptor& s, const MedoidSet& medoids);

void write_divergence_csv(const std::string& path, const Eigen::MatrixXd& divergences, const IndexList& medoids);

/// Ridge on [x, d] where d holds Stein divergences to pool medoids.
struct SpdRidgeModel {
    SPDConfig config;
    Eigen::MatrixXd train_X;  // reference rows for local-covariance neighbourhoods
    MedoidSet medoids;
    RidgeModel ridge;

    Eigen::MatrixXd features(const Eigen::MatrixXd& X) const;
};

/// Builds the clustering pool once (train descriptors plus synthetic blends)
/// and runs PAM for every K in `ks`. K = 0 yields an empty set.
std::vector<MedoidSet> build_medoid_sets(const Eigen::MatrixXd& train_X, const SPDConfig& cfg,
                                         const std::vector<std::size_t>& ks);

SpdRidgeModel spd_ridge_fit_with_medoids(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg,
                                         MedoidSet medoids, double alpha);
SpdRidgeModel spd_ridge_fit(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg, double alpha);
Eigen::VectorXd spd_ridge_predict(const SpdRidgeModel& model, const Eigen::MatrixXd& X);

/// Selects alpha by K-fold CV on the training rows (every fold rebuilds
/// descriptors and medoids from its own training part) and refits.
struct SpdFitResult {
    SpdRidgeModel model;
    double alpha = 0.0;
    std::vector<double> cv_rmse;
};
SpdFitResult spd_pipeline_fit(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg,
                              const std::vector<double>& alpha_grid, std::size_t n_folds = 5);

}  // namespace qsb

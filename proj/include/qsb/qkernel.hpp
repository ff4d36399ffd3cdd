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
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace qsb {

enum class Entangler { Ring, None };

std::string to_string(Entangler e);
Entangler parse_entangler(const std::string& s);

/// Data re-uploading feature map: every layer applies RY(s * theta_j) to
/// qubit j and then a CNOT ring j -> j+1 (mod q), j ascending.
struct FeatureMapConfig {
    std::size_t qubits = 4;
    std::size_t layers = 2;
    double angle_scale = 1.0;
    Entangler entangler = Entangler::Ring;

    void validate() const;
    std::string fingerprint() const;
};

/// 2^q amplitudes. Qubit 0 is the most significant bit of the basis index.
class StateVector {
public:
    explicit StateVector(std::size_t qubits);

    std::size_t qubits() const { return qubits_; }
    std::size_t dim() const { return amps_.size(); }
    const std::vector<std::complex<double>>& amplitudes() const { return amps_; }
    std::complex<double> operator[](std::size_t i) const { return amps_[i]; }

    void apply_ry(std::size_t qubit, double angle);
    void apply_cnot(std::size_t control, std::size_t target);
    /// CNOT ring in ascending control order; no-op for one qubit.
    void apply_ring();

    double norm_squared() const;
    /// <Z_j>
    double expect_z(std::size_t qubit) const;
    std::complex<double> inner(const StateVector& other) const;

private:
    std::size_t mask(std::size_t qubit) const { return std::size_t{1} << (qubits_ - 1 - qubit); }

    std::size_t qubits_;
    std::vector<std::complex<double>> amps_;
};

StateVector build_feature_state(const Eigen::VectorXd& theta, const FeatureMapConfig& cfg);

double fidelity_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const FeatureMapConfig& cfg);
double fidelity(const StateVector& a, const StateVector& b);

std::vector<StateVector> build_states(const Eigen::MatrixXd& thetas, const FeatureMapConfig& cfg);

struct GramBundle {
    Eigen::MatrixXd K;
    double power = 1.0;
    bool centered = false;
    bool psd_repaired = false;
    Eigen::VectorXd column_means;  // of the uncentered (powered) training Gram
    double grand_mean = 0.0;
};

/// Raw fidelity Gram of the rows of `thetas`; each unordered pair is
/// evaluated once.
GramBundle gram_matrix(const Eigen::MatrixXd& thetas, const FeatureMapConfig& cfg, unsigned jobs = 1);

/// Cross kernel: rows of `a` against rows of `b`.
Eigen::MatrixXd cross_kernel(const std::vector<StateVector>& a, const std::vector<StateVector>& b, unsigned jobs = 1);
Eigen::MatrixXd gram_from_states(const std::vector<StateVector>& states, unsigned jobs = 1);

/// Entrywise K^p, then clamps negative eigenvalues to zero. p = 1 is a no-op.
GramBundle kernel_power(const GramBundle& raw, double p);
/// Entrywise power for rectangular (test x train) kernels.
Eigen::MatrixXd kernel_power_entries(const Eigen::MatrixXd& K, double p);

/// K_c = H K H, storing column means and grand mean for test rows.
GramBundle center_gram(const GramBundle& g);
/// Centers test rows (test x train) with stored training statistics.
Eigen::MatrixXd center_test_rows(const Eigen::MatrixXd& k_rows, const GramBundle& train_stats);

void write_gram_csv(const std::string& path, const Eigen::MatrixXd& K, const std::string& fingerprint);

// ---------------------------------------------------------------------------
// Kernel ridge

struct QKRModel {
    Eigen::VectorXd alpha;
    double lambda = 0.0;
};

/// Solves (K + lambda I) alpha = y by Cholesky; NumericError when the
/// shifted Gram is not positive definite.
QKRModel qkr_fit(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda);
Eigen::VectorXd qkr_predict(const QKRModel& model, const Eigen::MatrixXd& k_rows);

/// Full QKR on angle inputs: feature map, optional power, optional centering.
/// Targets are centered internally and the training mean is added back.
struct QKRConfig {
    FeatureMapConfig map;
    double power = 1.0;
    bool center = true;
    double lambda = 1e-2;
    unsigned jobs = 1;
};

struct QKRPipelineModel {
    QKRConfig config;
    std::vector<StateVector> train_states;
    GramBundle gram;
    QKRModel solver;
    double y_mean = 0.0;
};

QKRPipelineModel qkr_pipeline_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const QKRConfig& cfg);
Eigen::VectorXd qkr_pipeline_predict(const QKRPipelineModel& m, const Eigen::MatrixXd& thetas);

// ---------------------------------------------------------------------------
// K-means in angle space and clustered (Nystrom) features

struct KMeansResult {
    Eigen::MatrixXd centers;  // K x q
    IndexList labels;
    double inertia = 0.0;
    std::size_t iterations = 0;
};

/// k-means++ seeding, Lloyd iterations until the largest center shift drops
/// below 1e-10 or 300 iterations. Empty clusters take the point farthest
/// from its current center.
KMeansResult kmeans_angles(const Eigen::MatrixXd& thetas, std::size_t k, std::uint64_t seed);

inline constexpr double kWhiteningFloor = 1e-10;

struct QKFConfig {
    FeatureMapConfig map;
    std::size_t centers = 3;
    bool whiten = true;
    double lambda = 1e-2;
    bool head_intercept = true;
    std::uint64_t seed = 0;
};

struct QKFModel {
    QKFConfig config;
    Eigen::MatrixXd centers;
    std::vector<StateVector> center_states;
    Eigen::MatrixXd whitening;  // K_mm^{-1/2}, or identity
    RidgeModel head;
};

/// Symmetric pseudo-inverse square root; eigenvalues below `floor` are
/// treated as zero.
Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& K, double floor = kWhiteningFloor);

/// Features against explicit centers (row-major K x q), no fitting.
Eigen::MatrixXd qkf_features(const Eigen::MatrixXd& thetas, const QKFModel& model);

QKFModel qkf_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const QKFConfig& cfg);
/// Same as qkf_fit with caller-supplied centers (skips k-means).
QKFModel qkf_fit_with_centers(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const Eigen::MatrixXd& centers,
                              const QKFConfig& cfg);
Eigen::VectorXd qkf_predict(const QKFModel& model, const Eigen::MatrixXd& thetas);

// ---------------------------------------------------------------------------
// Variational regressor

struct VQRConfig {
    FeatureMapConfig map;
    std::size_t var_layers = 2;
    double learning_rate = 0.1;
    std::size_t epochs = 300;
    std::uint64_t seed = 0;
};

struct VQRModel {
    VQRConfig config;
    Eigen::MatrixXd weights;  // var_layers x q
    Eigen::VectorXd head_w;
    double head_b = 0.0;
    std::vector<double> loss_log;  // training MSE after each epoch's head refit
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Per-qubit <Z> after the input feature map followed by the trainable
/// RY + ring layers.
Eigen::VectorXd vqr_measure(const Eigen::VectorXd& theta, const Eigen::MatrixXd& weights, const VQRConfig& cfg);

/// d<Z_j>/dW by the parameter-shift rule; result is (var_layers*q) x q with
/// row index l*q + k for weight (l, k).
Eigen::MatrixXd vqr_measure_jacobian(const Eigen::VectorXd& theta, const Eigen::MatrixXd& weights, const VQRConfig& cfg);

/// Training MSE with a given head.
double vqr_loss(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const Eigen::MatrixXd& weights,
                const Eigen::VectorXd& head_w, double head_b, const VQRConfig& cfg);

/// Gradient of vqr_loss with respect to the circuit weights (parameter shift).
Eigen::MatrixXd vqr_loss_gradient(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& weights, const Eigen::VectorXd& head_w, double head_b,
                                  const VQRConfig& cfg);

/// Seeded initial weights in [-pi, pi).
Eigen::MatrixXd vqr_initial_weights(const VQRConfig& cfg);

VQRModel vqr_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const VQRConfig& cfg);
Eigen::VectorXd vqr_predict(const VQRModel& model, const Eigen::MatrixXd& thetas);

}  // namespace qsb

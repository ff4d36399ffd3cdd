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

#include "qsb/qkernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace qsb {

std::string to_string(Entangler e) { return e == Entangler::Ring ? "ring" : "none"; }

Entangler parse_entangler(const std::string& s) {
    if (s == "ring") return Entangler::Ring;
    if (s == "none") return Entangler::None;
    throw ConfigError("unknown entangler '" + s + "'");
}

void FeatureMapConfig::validate() const {
    if (qubits < 1) throw ConfigError("feature map needs at least one qubit");
    if (qubits > 20) throw ConfigError("feature map limited to 20 qubits");
    if (layers < 1) throw ConfigError("feature map needs at least one layer");
    if (!(angle_scale > 0)) throw ConfigError("angle scale must be positive");
}

std::string FeatureMapConfig::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << "q=" << qubits << ";L=" << layers << ";s=" << angle_scale << ";ent=" << to_string(entangler) << ";axis=Y";
    return os.str();
}

// ---------------------------------------------------------------------------
// Statevector

StateVector::StateVector(std::size_t qubits) : qubits_(qubits), amps_(std::size_t{1} << qubits) { amps_[0] = 1.0; }

void StateVector::apply_ry(std::size_t qubit, double angle) {
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    const std::size_t m = mask(qubit);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if (i & m) continue;
        const auto a0 = amps_[i], a1 = amps_[i | m];
        amps_[i] = c * a0 - s * a1;
        amps_[i | m] = s * a0 + c * a1;
    }
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
    const std::size_t mc = mask(control), mt = mask(target);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & mc) && !(i & mt)) std::swap(amps_[i], amps_[i | mt]);
    }
}

void StateVector::apply_ring() {
    if (qubits_ < 2) return;
    for (std::size_t j = 0; j < qubits_; ++j) apply_cnot(j, (j + 1) % qubits_);
}

double StateVector::norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
}

double StateVector::expect_z(std::size_t qubit) const {
    const std::size_t m = mask(qubit);
    double z = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) z += (i & m) ? -std::norm(amps_[i]) : std::norm(amps_[i]);
    return z;
}

std::complex<double> StateVector::inner(const StateVector& other) const {
    if (other.dim() != dim()) throw ShapeError("state dimension mismatch");
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) acc += std::conj(amps_[i]) * other.amps_[i];
    return acc;
}

StateVector build_feature_state(const Eigen::VectorXd& theta, const FeatureMapConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(theta.size()) != cfg.qubits)
        throw ShapeError("angle vector length " + std::to_string(theta.size()) + " does not match " +
                         std::to_string(cfg.qubits) + " qubits");
    StateVector psi(cfg.qubits);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        for (std::size_t j = 0; j < cfg.qubits; ++j) psi.apply_ry(j, cfg.angle_scale * theta(static_cast<Eigen::Index>(j)));
        if (cfg.entangler == Entangler::Ring) psi.apply_ring();
    }
    return psi;
}

double fidelity(const StateVector& a, const StateVector& b) { return std::norm(a.inner(b)); }

double fidelity_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const FeatureMapConfig& cfg) {
    if (a.size() != b.size()) throw ShapeError("fidelity kernel: dimension mismatch");
    return fidelity(build_feature_state(a, cfg), build_feature_state(b, cfg));
}

std::vector<StateVector> build_states(const Eigen::MatrixXd& thetas, const FeatureMapConfig& cfg) {
    std::vector<StateVector> out;
    out.reserve(static_cast<std::size_t>(thetas.rows()));
    for (Eigen::Index i = 0; i < thetas.rows(); ++i) out.push_back(build_feature_state(thetas.row(i).transpose(), cfg));
    return out;
}

Eigen::MatrixXd gram_from_states(const std::vector<StateVector>& states, unsigned jobs) {
    const auto n = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd K(n, n);
    parallel_for(states.size(), jobs, [&](std::size_t i) {
        const auto ii = static_cast<Eigen::Index>(i);
        K(ii, ii) = fidelity(states[i], states[i]);
        for (std::size_t j = i + 1; j < states.size(); ++j) K(ii, static_cast<Eigen::Index>(j)) = fidelity(states[i], states[j]);
    });
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) K(j, i) = K(i, j);
    return K;
}

Eigen::MatrixXd cross_kernel(const std::vector<StateVector>& a, const std::vector<StateVector>& b, unsigned jobs) {
    Eigen::MatrixXd K(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    parallel_for(a.size(), jobs, [&](std::size_t i) {
        for (std::size_t j = 0; j < b.size(); ++j) K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fidelity(a[i], b[j]);
    });
    return K;
}

GramBundle gram_matrix(const Eigen::MatrixXd& thetas, const FeatureMapConfig& cfg, unsigned jobs) {
    if (thetas.rows() < 1) throw ConfigError("Gram matrix needs at least one sample");
    GramBundle g;
    g.K = gram_from_states(build_states(thetas, cfg), jobs);
    return g;
}

Eigen::MatrixXd kernel_power_entries(const Eigen::MatrixXd& K, double p) {
    if (!(p > 0 && p <= 1)) throw ConfigError("kernel power must lie in (0, 1]");
    if (p == 1.0) return K;
    return K.unaryExpr([p](double v) { return std::pow(std::clamp(v, 0.0, 1.0), p); });
}

GramBundle kernel_power(const GramBundle& raw, double p) {
    GramBundle out = raw;
    out.power = p;
    if (p == 1.0) return out;
    out.K = kernel_power_entries(raw.K, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.K);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed during PSD repair");
    if (eig.eigenvalues().minCoeff() < 0.0) {
        const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
        out.K = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        out.K = 0.5 * (out.K + out.K.transpose());
        out.psd_repaired = true;
    }
    return out;
}

GramBundle center_gram(const GramBundle& g) {
    GramBundle out = g;
    const auto n = static_cast<double>(g.K.rows());
    out.column_means = g.K.colwise().sum().transpose() / n;
    out.grand_mean = out.column_means.sum() / n;
    Eigen::MatrixXd Kc = g.K;
    Kc.rowwise() -= out.column_means.transpose();
    Kc.colwise() -= out.column_means;
    Kc.array() += out.grand_mean;
    out.K = 0.5 * (Kc + Kc.transpose());
    out.centered = true;
    return out;
}

Eigen::MatrixXd center_test_rows(const Eigen::MatrixXd& k_rows, const GramBundle& train_stats) {
    if (!train_stats.centered) throw ProtocolError("centering statistics missing");
    if (k_rows.cols() != train_stats.column_means.size()) throw ShapeError("test kernel rows have the wrong width");
    Eigen::MatrixXd out = k_rows;
    const Eigen::VectorXd row_means = k_rows.rowwise().mean();
    out.rowwise() -= train_stats.column_means.transpose();
    out.colwise() -= row_means;
    out.array() += train_stats.grand_mean;
    return out;
}

void write_gram_csv(const std::string& path, const Eigen::MatrixXd& K, const std::string& fingerprint) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    out << "# " << fingerprint << '\n';
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        for (Eigen::Index j = 0; j < K.cols(); ++j) out << (j ? "," : "") << K(i, j);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Kernel ridge

QKRModel qkr_fit(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double lambda) {
    if (K.rows() != K.cols() || K.rows() != y.size()) throw ShapeError("kernel ridge: size mismatch");
    if (!(lambda >= 0)) throw ConfigError("kernel ridge lambda must be nonnegative");
    Eigen::MatrixXd A = K;
    A.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericError("kernel ridge factorization failed; try a larger lambda");
    QKRModel m;
    m.lambda = lambda;
    m.alpha = llt.solve(y);
    if (!m.alpha.allFinite()) throw NumericError("kernel ridge produced non-finite coefficients; try a larger lambda");
    return m;
}

Eigen::VectorXd qkr_predict(const QKRModel& model, const Eigen::MatrixXd& k_rows) {
    if (k_rows.cols() != model.alpha.size()) throw ShapeError("kernel ridge: kernel row width mismatch");
    return k_rows * model.alpha;
}

QKRPipelineModel qkr_pipeline_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const QKRConfig& cfg) {
    QKRPipelineModel m;
    m.config = cfg;
    m.train_states = build_states(thetas, cfg.map);
    GramBundle raw;
    raw.K = gram_from_states(m.train_states, cfg.jobs);
    m.gram = kernel_power(raw, cfg.power);
    if (cfg.center) m.gram = center_gram(m.gram);
    m.y_mean = y.mean();
    m.solver = qkr_fit(m.gram.K, (y.array() - m.y_mean).matrix(), cfg.lambda);
    return m;
}

Eigen::VectorXd qkr_pipeline_predict(const QKRPipelineModel& m, const Eigen::MatrixXd& thetas) {
    const auto states = build_states(thetas, m.config.map);
    Eigen::MatrixXd rows = kernel_power_entries(cross_kernel(states, m.train_states, m.config.jobs), m.config.power);
    if (m.config.center) rows = center_test_rows(rows, m.gram);
    Eigen::VectorXd out = qkr_predict(m.solver, rows);
    out.array() += m.y_mean;
    return out;
}

// ---------------------------------------------------------------------------
// K-means

KMeansResult kmeans_angles(const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ConfigError("k-means needs K >= 1");
    const auto n = static_cast<std::size_t>(X.rows());
    if (k > n) throw ConfigError("k-means K exceeds the number of points");
    const Eigen::Index q = X.cols();
    std::mt19937_64 rng(seed);
    auto row = [&](std::size_t i) { return X.row(static_cast<Eigen::Index>(i)); };

    KMeansResult res;
    res.centers.resize(static_cast<Eigen::Index>(k), q);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    res.centers.row(0) = row(pick(rng));
    std::vector<double> d2(n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < c; ++j) best = std::min(best, (row(i) - res.centers.row(static_cast<Eigen::Index>(j))).squaredNorm());
            d2[i] = best;
            total += best;
        }
        std::size_t chosen = 0;
        if (total > 0) {
            double u = unit(rng) * total, acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0 && u < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        res.centers.row(static_cast<Eigen::Index>(c)) = row(chosen);
    }

    res.labels.assign(n, 0);
    auto assign = [&] {
        res.inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double v = (row(i) - res.centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (v < best) {
                    best = v;
                    res.labels[i] = c;
                }
            }
            d2[i] = best;
            res.inertia += best;
        }
    };

    for (res.iterations = 0; res.iterations < 300; ++res.iterations) {
        assign();
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), q);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            next.row(static_cast<Eigen::Index>(res.labels[i])) += row(i);
            ++count[res.labels[i]];
        }
        std::vector<bool> claimed(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                next.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(count[c]);
                continue;
            }
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!claimed[i] && d2[i] > far_d) {
                    far_d = d2[i];
                    far = i;
                }
            }
            claimed[far] = true;
            next.row(static_cast<Eigen::Index>(c)) = row(far);
        }
        const double shift = (next - res.centers).rowwise().norm().maxCoeff();
        res.centers = next;
        if (shift < 1e-10) {
            ++res.iterations;
            break;
        }
    }
    assign();
    return res;
}

// ---------------------------------------------------------------------------
// Clustered quantum kernel features

Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& K, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (K + K.transpose()));
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed for whitening");
    const Eigen::VectorXd inv = eig.eigenvalues().unaryExpr([floor](double v) { return v > floor ? 1.0 / std::sqrt(v) : 0.0; });
    Eigen::MatrixXd W = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (W + W.transpose());
}

Eigen::MatrixXd qkf_features(const Eigen::MatrixXd& thetas, const QKFModel& model) {
    Eigen::MatrixXd phi = cross_kernel(build_states(thetas, model.config.map), model.center_states);
    if (model.config.whiten) phi = phi * model.whitening;
    return phi;
}

QKFModel qkf_fit_with_centers(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const Eigen::MatrixXd& centers,
                              const QKFConfig& cfg) {
    QKFModel m;
    m.config = cfg;
    m.centers = centers;
    m.center_states = build_states(centers, cfg.map);
    const auto K = static_cast<Eigen::Index>(m.center_states.size());
    m.whitening = cfg.whiten ? inverse_sqrt_psd(gram_from_states(m.center_states)) : Eigen::MatrixXd::Identity(K, K);
    m.head = fit_ridge(qkf_features(thetas, m), y, cfg.lambda, cfg.head_intercept);
    return m;
}

QKFModel qkf_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const QKFConfig& cfg) {
    const auto km = kmeans_angles(thetas, cfg.centers, cfg.seed);
    return qkf_fit_with_centers(thetas, y, km.centers, cfg);
}

Eigen::VectorXd qkf_predict(const QKFModel& model, const Eigen::MatrixXd& thetas) {
    return predict_ridge(model.head, qkf_features(thetas, model));
}

// ---------------------------------------------------------------------------
// Variational regressor

namespace {

void apply_var_layers(StateVector& psi, const Eigen::MatrixXd& W, const VQRConfig& cfg) {
    for (Eigen::Index l = 0; l < W.rows(); ++l) {
        for (Eigen::Index k = 0; k < W.cols(); ++k) psi.apply_ry(static_cast<std::size_t>(k), W(l, k));
        if (cfg.map.entangler == Entangler::Ring) psi.apply_ring();
    }
}

Eigen::VectorXd measure_from(const StateVector& input, const Eigen::MatrixXd& W, const VQRConfig& cfg) {
    StateVector psi = input;
    apply_var_layers(psi, W, cfg);
    Eigen::VectorXd m(static_cast<Eigen::Index>(psi.qubits()));
    for (std::size_t j = 0; j < psi.qubits(); ++j) m(static_cast<Eigen::Index>(j)) = psi.expect_z(j);
    return m;
}

Eigen::MatrixXd jacobian_from(const StateVector& input, const Eigen::MatrixXd& W, const VQRConfig& cfg) {
    const Eigen::Index q = W.cols();
    Eigen::MatrixXd J(W.rows() * q, q);
    Eigen::MatrixXd shifted = W;
    constexpr double shift = std::numbers::pi / 2;
    for (Eigen::Index l = 0; l < W.rows(); ++l) {
        for (Eigen::Index k = 0; k < q; ++k) {
            shifted(l, k) = W(l, k) + shift;
            const Eigen::VectorXd plus = measure_from(input, shifted, cfg);
            shifted(l, k) = W(l, k) - shift;
            const Eigen::VectorXd minus = measure_from(input, shifted, cfg);
            shifted(l, k) = W(l, k);
            J.row(l * q + k) = 0.5 * (plus - minus).transpose();
        }
    }
    return J;
}

void check_vqr(const VQRConfig& cfg, const Eigen::MatrixXd& W) {
    cfg.map.validate();
    if (static_cast<std::size_t>(W.cols()) != cfg.map.qubits || static_cast<std::size_t>(W.rows()) != cfg.var_layers)
        throw ShapeError("variational weights have the wrong shape");
}

struct Head {
    Eigen::VectorXd w;
    double b = 0.0;
};

Head fit_head(const Eigen::MatrixXd& M, const Eigen::VectorXd& y) {
    const auto r = fit_ridge(M, y, 1e-8);
    return {r.weights, r.intercept};
}

double mse(const Eigen::MatrixXd& M, const Eigen::VectorXd& y, const Head& h) {
    Eigen::VectorXd r = M * h.w - y;
    r.array() += h.b;
    return r.squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

Eigen::VectorXd vqr_measure(const Eigen::VectorXd& theta, const Eigen::MatrixXd& weights, const VQRConfig& cfg) {
    check_vqr(cfg, weights);
    return measure_from(build_feature_state(theta, cfg.map), weights, cfg);
}

Eigen::MatrixXd vqr_measure_jacobian(const Eigen::VectorXd& theta, const Eigen::MatrixXd& weights, const VQRConfig& cfg) {
    check_vqr(cfg, weights);
    return jacobian_from(build_feature_state(theta, cfg.map), weights, cfg);
}

double vqr_loss(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const Eigen::MatrixXd& weights,
                const Eigen::VectorXd& head_w, double head_b, const VQRConfig& cfg) {
    check_vqr(cfg, weights);
    double s = 0.0;
    for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
        const double r = head_w.dot(vqr_measure(thetas.row(i).transpose(), weights, cfg)) + head_b - y(i);
        s += r * r;
    }
    return s / static_cast<double>(thetas.rows());
}

Eigen::MatrixXd vqr_loss_gradient(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& weights, const Eigen::VectorXd& head_w, double head_b,
                                  const VQRConfig& cfg) {
    check_vqr(cfg, weights);
    const Eigen::Index q = weights.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(weights.size());
    for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
        const auto input = build_feature_state(thetas.row(i).transpose(), cfg.map);
        const double r = head_w.dot(measure_from(input, weights, cfg)) + head_b - y(i);
        g += 2.0 * r * (jacobian_from(input, weights, cfg) * head_w);
    }
    g /= static_cast<double>(thetas.rows());
    Eigen::MatrixXd G(weights.rows(), q);
    for (Eigen::Index l = 0; l < weights.rows(); ++l)
        for (Eigen::Index k = 0; k < q; ++k) G(l, k) = g(l * q + k);
    return G;
}

Eigen::MatrixXd vqr_initial_weights(const VQRConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    Eigen::MatrixXd W(static_cast<Eigen::Index>(cfg.var_layers), static_cast<Eigen::Index>(cfg.map.qubits));
    for (Eigen::Index l = 0; l < W.rows(); ++l)
        for (Eigen::Index k = 0; k < W.cols(); ++k) W(l, k) = angle(rng);
    return W;
}

VQRModel vqr_fit(const Eigen::MatrixXd& thetas, const Eigen::VectorXd& y, const VQRConfig& cfg) {
    if (cfg.var_layers < 1) throw ConfigError("VQR needs at least one variational layer");
    if (!(cfg.learning_rate > 0)) throw ConfigError("VQR learning rate must be positive");
    if (thetas.rows() != y.size() || thetas.rows() < 2) throw ShapeError("VQR: need matching angles and targets");
    const auto n = thetas.rows();
    const auto q = static_cast<Eigen::Index>(cfg.map.qubits);

    std::vector<StateVector> inputs = build_states(thetas, cfg.map);
    auto measure_all = [&](const Eigen::MatrixXd& W) {
        Eigen::MatrixXd M(n, q);
        for (Eigen::Index i = 0; i < n; ++i) M.row(i) = measure_from(inputs[static_cast<std::size_t>(i)], W, cfg).transpose();
        return M;
    };

    VQRModel model;
    model.config = cfg;
    Eigen::MatrixXd W = vqr_initial_weights(cfg);
    Eigen::MatrixXd M = measure_all(W);
    Head head = fit_head(M, y);
    double loss = mse(M, y, head);
    model.initial_loss = loss;

    Eigen::MatrixXd best_W = W;
    Head best_head = head;
    double best_loss = loss;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(W.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = M.row(i).dot(head.w) + head.b - y(i);
            g += 2.0 * r * (jacobian_from(inputs[static_cast<std::size_t>(i)], W, cfg) * head.w);
        }
        g /= static_cast<double>(n);
        for (Eigen::Index l = 0; l < W.rows(); ++l)
            for (Eigen::Index k = 0; k < q; ++k) W(l, k) -= cfg.learning_rate * g(l * q + k);
        M = measure_all(W);
        head = fit_head(M, y);
        loss = mse(M, y, head);
        model.loss_log.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best_W = W;
            best_head = head;
        }
    }
    model.weights = best_W;
    model.head_w = best_head.w;
    model.head_b = best_head.b;
    model.final_loss = best_loss;
    return model;
}

Eigen::VectorXd vqr_predict(const VQRModel& model, const Eigen::MatrixXd& thetas) {
    Eigen::VectorXd out(thetas.rows());
    for (Eigen::Index i = 0; i < thetas.rows(); ++i)
        out(i) = model.head_w.dot(vqr_measure(thetas.row(i).transpose(), model.weights, model.config)) + model.head_b;
    return out;
}

}  // namespace qsb

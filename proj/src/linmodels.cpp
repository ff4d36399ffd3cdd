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

#include "qsb/linmodels.hpp"

#include <numeric>

namespace qsb {

RidgeModel fit_ridge(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, double alpha, bool fit_intercept) {
    if (H.rows() != y.size()) throw ShapeError("ridge: design rows and target length differ");
    if (H.rows() < 2) throw FitError("ridge needs at least 2 rows");
    if (!(alpha >= 0)) throw ConfigError("ridge alpha must be nonnegative");

    RidgeModel m;
    m.alpha = alpha;
    m.fit_intercept = fit_intercept;
    const Eigen::Index p = H.cols();

    Eigen::VectorXd h_mean = Eigen::VectorXd::Zero(p);
    double y_mean = 0.0;
    if (fit_intercept) {
        h_mean = H.colwise().mean().transpose();
        y_mean = y.mean();
    }
    if (p == 0) {
        m.weights.resize(0);
        m.intercept = y_mean;
        return m;
    }
    const Eigen::MatrixXd Hc = H.rowwise() - h_mean.transpose();
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = Hc.transpose() * Hc;
    gram.diagonal().array() += alpha;
    const Eigen::VectorXd rhs = Hc.transpose() * yc;

    if (alpha == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Hc);
        if (qr.rank() < p) {
            gram.diagonal().array() += kRidgeJitter;
            m.jittered = true;
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericError("ridge normal equations could not be factorized");
    m.weights = ldlt.solve(rhs);
    if (!m.weights.allFinite()) throw NumericError("ridge produced non-finite weights");
    m.intercept = y_mean - h_mean.dot(m.weights);
    return m;
}

Eigen::VectorXd predict_ridge(const RidgeModel& model, const Eigen::MatrixXd& H) {
    if (H.rows() == 0) return Eigen::VectorXd(0);
    if (H.cols() != model.weights.size()) throw ShapeError("ridge: feature dimension mismatch");
    Eigen::VectorXd out = H * model.weights;
    out.array() += model.intercept;
    return out;
}

double ridge_objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                       double alpha) {
    Eigen::VectorXd r = y - H * w;
    r.array() -= b;
    return r.squaredNorm() + alpha * w.squaredNorm();
}

GlobalMeanModel baseline_global_mean(std::span<const double> y) {
    if (y.empty()) throw FitError("global mean needs a nonempty training target");
    return {std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size())};
}

std::vector<double> predict_global_mean(const GlobalMeanModel& m, std::size_t n) { return std::vector<double>(n, m.mean); }

ConditionMeansModel baseline_condition_means(std::span<const double> y, std::span<const int> c) {
    if (y.size() != c.size()) throw ShapeError("condition means: length mismatch");
    double sum[2] = {0, 0};
    std::size_t cnt[2] = {0, 0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (c[i] != 0 && c[i] != 1) throw FitError("condition must be 0 or 1");
        sum[c[i]] += y[i];
        ++cnt[c[i]];
    }
    if (cnt[0] == 0 || cnt[1] == 0) throw FitError("condition means need both conditions in training");
    return {sum[0] / static_cast<double>(cnt[0]), sum[1] / static_cast<double>(cnt[1])};
}

std::vector<double> predict_condition_means(const ConditionMeansModel& m, std::span<const int> c) {
    std::vector<double> out;
    out.reserve(c.size());
    for (int v : c) {
        if (v == 0) out.push_back(m.sham_mean);
        else if (v == 1) out.push_back(m.cs_mean);
        else throw ProtocolError("condition level " + std::to_string(v) + " was not seen in training");
    }
    return out;
}

LDAAxis fit_lda_axis(const Eigen::MatrixXd& X, std::span<const int> c, double shrinkage) {
    if (static_cast<std::size_t>(X.rows()) != c.size()) throw ShapeError("LDA: length mismatch");
    if (!(shrinkage >= 0 && shrinkage <= 1)) throw ConfigError("LDA shrinkage must lie in [0, 1]");
    const Eigen::Index p = X.cols();
    LDAAxis axis;
    axis.shrinkage = shrinkage;
    axis.mean_sham = Eigen::VectorXd::Zero(p);
    axis.mean_cs = Eigen::VectorXd::Zero(p);
    std::size_t n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (c[static_cast<std::size_t>(i)] == 1) {
            axis.mean_cs += X.row(i).transpose();
            ++n1;
        } else {
            axis.mean_sham += X.row(i).transpose();
            ++n0;
        }
    }
    if (n0 < 2 || n1 < 2) throw FitError("LDA needs at least 2 members per class");
    axis.mean_sham /= static_cast<double>(n0);
    axis.mean_cs /= static_cast<double>(n1);

    const Eigen::VectorXd delta = axis.mean_cs - axis.mean_sham;
    if (delta.norm() < 1e-12) {
        axis.direction = Eigen::VectorXd::Zero(p);
        axis.zero_direction = true;
        return axis;
    }

    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd d =
            X.row(i).transpose() - (c[static_cast<std::size_t>(i)] == 1 ? axis.mean_cs : axis.mean_sham);
        pooled.noalias() += d * d.transpose();
    }
    pooled /= static_cast<double>(n0 + n1 - 2);

    auto shrunk = [&](double s) {
        Eigen::MatrixXd m = (1.0 - s) * pooled;
        m.diagonal().array() += s * pooled.trace() / static_cast<double>(p);
        return m;
    };
    auto solve = [&](double s, Eigen::VectorXd& out) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(shrunk(s));
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
        // Reject numerically singular systems.
        const auto& d = ldlt.vectorD();
        if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff())) return false;
        out = ldlt.solve(delta);
        return out.allFinite();
    };

    Eigen::VectorXd dir;
    if (!solve(shrinkage, dir)) {
        axis.shrinkage = std::max(shrinkage, 0.1);
        axis.shrinkage_raised = true;
        if (!solve(axis.shrinkage, dir)) {
            axis.direction = Eigen::VectorXd::Zero(p);
            axis.zero_direction = true;
            return axis;
        }
    }
    if (dir.norm() < 1e-300) {
        axis.direction = Eigen::VectorXd::Zero(p);
        axis.zero_direction = true;
        return axis;
    }
    axis.direction = dir / dir.norm();
    if (axis.direction.dot(delta) < 0) axis.direction = -axis.direction;
    return axis;
}

Eigen::VectorXd project_lda(const LDAAxis& axis, const Eigen::MatrixXd& X) {
    if (X.cols() != axis.direction.size()) throw ShapeError("LDA: feature dimension mismatch");
    return X * axis.direction;
}

LdaRidgeModel fit_lda_ridge(const Eigen::MatrixXd& X, std::span<const int> c, const Eigen::VectorXd& y, double alpha,
                            double shrinkage) {
    LdaRidgeModel m;
    m.axis = fit_lda_axis(X, c, shrinkage);
    if (m.axis.zero_direction) {
        m.ridge = fit_ridge(Eigen::MatrixXd(X.rows(), 0), y, alpha);
    } else {
        m.ridge = fit_ridge(project_lda(m.axis, X), y, alpha);
    }
    return m;
}

Eigen::VectorXd predict_lda_ridge(const LdaRidgeModel& m, const Eigen::MatrixXd& X) {
    if (m.axis.zero_direction) {
        if (X.cols() != m.axis.direction.size()) throw ShapeError("LDA: feature dimension mismatch");
        return predict_ridge(m.ridge, Eigen::MatrixXd(X.rows(), 0));
    }
    return predict_ridge(m.ridge, project_lda(m.axis, X));
}

}  // namespace qsb

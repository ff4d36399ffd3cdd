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

#include "qsb/spd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace qsb {

std::string to_string(DescriptorKind k) { return k == DescriptorKind::Outer ? "outer" : "local_cov"; }

DescriptorKind parse_descriptor(const std::string& s) {
    if (s == "outer") return DescriptorKind::Outer;
    if (s == "local_cov" || s == "localcov") return DescriptorKind::LocalCov;
    throw ConfigError("unknown SPD descriptor kind '" + s + "'");
}

void check_spd(const SPDDescriptor& d) {
    const auto& S = d.matrix;
    if (S.rows() != S.cols() || S.rows() == 0) throw NumericError("SPD descriptor must be a nonempty square matrix");
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw NumericError("SPD descriptor is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError("SPD eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() < 0.5 * d.jitter || !(eig.eigenvalues().minCoeff() > 0))
        throw NumericError("SPD descriptor has an eigenvalue below jitter / 2");
}

SPDDescriptor outer_descriptor(const Eigen::VectorXd& x, bool normalize, double eps) {
    if (!(eps > 0)) throw ConfigError("SPD jitter must be positive");
    Eigen::VectorXd v = x;
    if (normalize) v /= (x.norm() + kNormalizeDelta);
    SPDDescriptor d;
    d.matrix = v * v.transpose();
    d.matrix.diagonal().array() += eps;
    d.jitter = eps;
    d.source = SpdSource::Outer;
    return d;
}

void SPDConfig::validate() const {
    if (!(eps > 0)) throw ConfigError("SPD jitter must be positive");
    if (kind == DescriptorKind::LocalCov && k_nn < 2) throw ConfigError("local covariance needs k_nn >= 2");
    if (!(shrinkage >= 0 && shrinkage <= 1)) throw ConfigError("SPD shrinkage must lie in [0, 1]");
}

SPDDescriptor local_cov_descriptor(const Eigen::VectorXd& x, const Eigen::MatrixXd& train_X, const SPDConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(train_X.rows());
    if (cfg.k_nn > n) throw ConfigError("k_nn exceeds the number of training rows");
    if (x.size() != train_X.cols()) throw ShapeError("local covariance: dimension mismatch");

    std::vector<std::pair<double, Index>> dist(n);
    for (std::size_t i = 0; i < n; ++i)
        dist[i] = {(train_X.row(static_cast<Eigen::Index>(i)).transpose() - x).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(cfg.k_nn), dist.end());

    const Eigen::Index p = train_X.cols();
    Eigen::MatrixXd nb(static_cast<Eigen::Index>(cfg.k_nn), p);
    for (std::size_t k = 0; k < cfg.k_nn; ++k) nb.row(static_cast<Eigen::Index>(k)) = train_X.row(static_cast<Eigen::Index>(dist[k].second));
    const Eigen::MatrixXd centered = nb.rowwise() - nb.colwise().mean();
    const Eigen::MatrixXd sigma = centered.transpose() * centered / static_cast<double>(cfg.k_nn - 1);

    SPDDescriptor d;
    d.matrix = (1.0 - cfg.shrinkage) * sigma;
    d.matrix.diagonal().array() += cfg.shrinkage * sigma.trace() / static_cast<double>(p) + cfg.eps;
    d.matrix = 0.5 * (d.matrix + d.matrix.transpose());
    d.jitter = cfg.eps;
    d.source = SpdSource::LocalCov;
    return d;
}

SPDDescriptor make_descriptor(const Eigen::VectorXd& x, const Eigen::MatrixXd& train_X, const SPDConfig& cfg) {
    if (cfg.kind == DescriptorKind::Outer) return outer_descriptor(x, cfg.normalize, cfg.eps);
    return local_cov_descriptor(x, train_X, cfg);
}

double logdet_spd(const Eigen::MatrixXd& S, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError(std::string("eigendecomposition failed for ") + what);
    const auto& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > kEigenFloor))
        throw NumericError(std::string("non-finite logdet: ") + what + " has an eigenvalue <= 1e-14");
    return ev.array().log().sum();
}

double stein_divergence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double logdet_a, double logdet_b) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("Stein divergence: size mismatch");
    const Eigen::MatrixXd mid = 0.5 * (A + B);
    return logdet_spd(mid, "(A+B)/2") - 0.5 * (logdet_a + logdet_b);
}

double stein_divergence(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return stein_divergence(A, B, logdet_spd(A, "A"), logdet_spd(B, "B"));
}

namespace {

template <typename F>
Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& S, F f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    if (eig.info() != Eigen::Success) throw NumericError("symmetric eigendecomposition failed");
    const Eigen::VectorXd mapped = eig.eigenvalues().unaryExpr(f);
    Eigen::MatrixXd out = eig.eigenvectors() * mapped.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace

Eigen::MatrixXd matrix_log(const Eigen::MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0))
        throw NumericError("matrix log of a matrix with a nonpositive eigenvalue");
    return spectral_apply(S, [](double v) { return std::log(v); });
}

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& M) {
    return spectral_apply(0.5 * (M + M.transpose()), [](double v) { return std::exp(v); });
}

SPDDescriptor loge_interpolate(const SPDDescriptor& a, const SPDDescriptor& b, double t) {
    if (!(t >= 0 && t <= 1)) throw ConfigError("interpolation parameter must lie in [0, 1]");
    SPDDescriptor out;
    out.matrix = matrix_exp((1.0 - t) * matrix_log(a.matrix) + t * matrix_log(b.matrix));
    out.jitter = std::min(a.jitter, b.jitter);
    out.source = SpdSource::Synthetic;
    return out;
}

std::vector<SPDDescriptor> synth_augment(const std::vector<SPDDescriptor>& train, std::size_t n_syn, std::uint64_t seed) {
    std::vector<SPDDescriptor> out;
    if (n_syn == 0) return out;
    if (train.size() < 2) throw ConfigError("synthetic augmentation needs at least 2 training descriptors");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> first(0, train.size() - 1);
    std::uniform_int_distribution<std::size_t> second(0, train.size() - 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::MatrixXd> logs;
    logs.reserve(train.size());
    for (const auto& d : train) logs.push_back(matrix_log(d.matrix));
    out.reserve(n_syn);
    for (std::size_t s = 0; s < n_syn; ++s) {
        const std::size_t a = first(rng);
        std::size_t b = second(rng);
        if (b >= a) ++b;
        const double t = unit(rng);
        SPDDescriptor d;
        d.matrix = matrix_exp((1.0 - t) * logs[a] + t * logs[b]);
        d.jitter = std::min(train[a].jitter, train[b].jitter);
        d.source = SpdSource::Synthetic;
        out.push_back(std::move(d));
    }
    return out;
}

void SpdPool::add_train(std::vector<SPDDescriptor> train) {
    for (auto& d : train) {
        if (d.source == SpdSource::Synthetic) throw ProtocolError("synthetic descriptor offered as a training member");
        members_.push_back(std::move(d));
        ++n_train_;
    }
}

void SpdPool::add_synthetic(std::vector<SPDDescriptor> synthetic) {
    for (auto& d : synthetic) {
        if (d.source != SpdSource::Synthetic) throw ProtocolError("non-synthetic descriptor offered as synthetic");
        members_.push_back(std::move(d));
        ++n_syn_;
    }
}

Eigen::MatrixXd divergence_matrix(const std::vector<SPDDescriptor>& pool, unsigned jobs) {
    const std::size_t m = pool.size();
    std::vector<double> logdets(m);
    for (std::size_t i = 0; i < m; ++i) logdets[i] = logdet_spd(pool[i].matrix, "pool member");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    parallel_for(m, jobs, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = std::max(0.0, stein_divergence(pool[i].matrix, pool[j].matrix, logdets[i], logdets[j]));
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    });
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return D;
}

double medoid_objective(const Eigen::MatrixXd& D, const IndexList& medoids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index m : medoids) best = std::min(best, D(i, static_cast<Eigen::Index>(m)));
        total += best;
    }
    return total;
}

PamResult pam_medoids(const Eigen::MatrixXd& D, std::size_t k, std::uint64_t /*seed*/) {
    if (k == 0) throw ConfigError("PAM needs K >= 1");
    const auto m = static_cast<std::size_t>(D.rows());
    if (D.cols() != D.rows()) throw ShapeError("PAM needs a square divergence matrix");
    if (k > m) throw ConfigError("PAM K exceeds the pool size");
    auto d = [&](std::size_t i, std::size_t j) { return D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

    PamResult res;
    std::vector<bool> is_medoid(m, false);
    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());

    // BUILD
    {
        std::size_t best = 0;
        double best_sum = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += d(i, j);
            if (s < best_sum) {
                best_sum = s;
                best = j;
            }
        }
        res.medoids.push_back(best);
        is_medoid[best] = true;
        for (std::size_t i = 0; i < m; ++i) nearest[i] = d(i, best);
    }
    while (res.medoids.size() < k) {
        std::size_t best = m;
        double best_gain = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (is_medoid[j]) continue;
            double gain = 0.0;
            for (std::size_t i = 0; i < m; ++i) gain += std::max(0.0, nearest[i] - d(i, j));
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        res.medoids.push_back(best);
        is_medoid[best] = true;
        for (std::size_t i = 0; i < m; ++i) nearest[i] = std::min(nearest[i], d(i, best));
    }

    // SWAP
    std::vector<double> first(m), second(m);
    std::vector<std::size_t> owner(m);
    auto refresh = [&] {
        for (std::size_t i = 0; i < m; ++i) {
            first[i] = second[i] = std::numeric_limits<double>::infinity();
            owner[i] = 0;
            for (std::size_t slot = 0; slot < res.medoids.size(); ++slot) {
                const double v = d(i, res.medoids[slot]);
                if (v < first[i]) {
                    second[i] = first[i];
                    first[i] = v;
                    owner[i] = slot;
                } else if (v < second[i]) {
                    second[i] = v;
                }
            }
        }
    };
    for (std::size_t iter = 0; iter < kPamMaxIterations; ++iter) {
        refresh();
        const double current = std::accumulate(first.begin(), first.end(), 0.0);
        double best_delta = 0.0;
        std::size_t best_slot = k, best_h = m;
        for (std::size_t slot = 0; slot < k; ++slot) {
            for (std::size_t h = 0; h < m; ++h) {
                if (is_medoid[h]) continue;
                double delta = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double dh = d(i, h);
                    if (owner[i] == slot) delta += std::min(dh, second[i]) - first[i];
                    else if (dh < first[i]) delta += dh - first[i];
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    best_slot = slot;
                    best_h = h;
                }
            }
        }
        // Stop once the best swap no longer beats round-off.
        if (best_h == m || best_delta >= -1e-12 * std::max(1.0, current)) break;
        is_medoid[res.medoids[best_slot]] = false;
        is_medoid[best_h] = true;
        res.medoids[best_slot] = best_h;
        ++res.swaps;
    }

    std::sort(res.medoids.begin(), res.medoids.end());
    res.assignment.resize(m);
    res.objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t arg = 0;
        for (std::size_t s = 1; s < k; ++s)
            if (d(i, res.medoids[s]) < d(i, res.medoids[arg])) arg = s;
        res.assignment[i] = arg;
        res.objective += d(i, res.medoids[arg]);
    }
    return res;
}

Eigen::VectorXd spd_distance_features(const SPDDescriptor& s, const MedoidSet& medoids) {
    const double ld = logdet_spd(s.matrix, "sample descriptor");
    Eigen::VectorXd out(static_cast<Eigen::Index>(medoids.prototypes.size()));
    for (std::size_t k = 0; k < medoids.prototypes.size(); ++k)
        out(static_cast<Eigen::Index>(k)) =
            std::max(0.0, stein_divergence(s.matrix, medoids.prototypes[k].matrix, ld, medoids.logdets[k]));
    return out;
}

void write_divergence_csv(const std::string& path, const Eigen::MatrixXd& D, const IndexList& medoids) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    out << "# medoids:";
    for (Index m : medoids) out << ' ' << m;
    out << '\n';
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        for (Eigen::Index j = 0; j < D.cols(); ++j) out << (j ? "," : "") << D(i, j);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Ridge on SPD distance features

Eigen::MatrixXd SpdRidgeModel::features(const Eigen::MatrixXd& X) const {
    const auto K = static_cast<Eigen::Index>(medoids.prototypes.size());
    if (K == 0) return X;
    Eigen::MatrixXd H(X.rows(), X.cols() + K);
    H.leftCols(X.cols()) = X;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto desc = make_descriptor(X.row(i).transpose(), train_X, config);
        H.row(i).tail(K) = spd_distance_features(desc, medoids).transpose();
    }
    return H;
}

std::vector<MedoidSet> build_medoid_sets(const Eigen::MatrixXd& train_X, const SPDConfig& cfg,
                                         const std::vector<std::size_t>& ks) {
    cfg.validate();
    std::vector<MedoidSet> out(ks.size());
    for (auto& m : out) m.seed = cfg.seed;
    if (std::all_of(ks.begin(), ks.end(), [](std::size_t k) { return k == 0; })) return out;

    std::vector<SPDDescriptor> train;
    train.reserve(static_cast<std::size_t>(train_X.rows()));
    for (Eigen::Index i = 0; i < train_X.rows(); ++i) train.push_back(make_descriptor(train_X.row(i).transpose(), train_X, cfg));
    auto synthetic = synth_augment(train, cfg.n_synthetic, cfg.seed);
    SpdPool pool;
    pool.add_train(std::move(train));
    pool.add_synthetic(std::move(synthetic));
    const auto D = divergence_matrix(pool.members(), cfg.jobs);
    for (std::size_t j = 0; j < ks.size(); ++j) {
        auto& set = out[j];
        set.pool_train = pool.train_count();
        set.pool_synthetic = pool.synthetic_count();
        if (ks[j] == 0) continue;
        const auto pam = pam_medoids(D, ks[j], cfg.seed);
        set.pool_indices = pam.medoids;
        for (Index m : pam.medoids) {
            set.prototypes.push_back(pool.members()[m]);
            set.logdets.push_back(logdet_spd(pool.members()[m].matrix, "medoid"));
        }
    }
    return out;
}

SpdRidgeModel spd_ridge_fit_with_medoids(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg,
                                         MedoidSet medoids, double alpha) {
    if (medoids.prototypes.size() != cfg.n_medoids) throw ConfigError("medoid set does not match the configured K");
    SpdRidgeModel model;
    model.config = cfg;
    model.train_X = train_X;
    model.medoids = std::move(medoids);
    model.ridge = fit_ridge(model.features(train_X), y, alpha);
    return model;
}

SpdRidgeModel spd_ridge_fit(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg, double alpha) {
    auto sets = build_medoid_sets(train_X, cfg, {cfg.n_medoids});
    return spd_ridge_fit_with_medoids(train_X, y, cfg, std::move(sets.front()), alpha);
}

Eigen::VectorXd spd_ridge_predict(const SpdRidgeModel& model, const Eigen::MatrixXd& X) {
    return predict_ridge(model.ridge, model.features(X));
}

SpdFitResult spd_pipeline_fit(const Eigen::MatrixXd& train_X, const Eigen::VectorXd& y, const SPDConfig& cfg,
                              const std::vector<double>& alpha_grid, std::size_t n_folds) {
    if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
    const auto n = static_cast<std::size_t>(train_X.rows());
    if (n_folds < 2 || n_folds > n) throw ConfigError("invalid fold count for SPD alpha selection");
    IndexList order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x5bd1e995));
    std::shuffle(order.begin(), order.end(), rng);

    SpdFitResult res;
    res.cv_rmse.assign(alpha_grid.size(), 0.0);
    for (std::size_t f = 0; f < n_folds; ++f) {
        IndexList tr, va;
        for (std::size_t i = 0; i < n; ++i) (i % n_folds == f ? va : tr).push_back(order[i]);
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(tr.size()), train_X.cols()), Xva(static_cast<Eigen::Index>(va.size()), train_X.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size())), yva(static_cast<Eigen::Index>(va.size()));
        for (std::size_t i = 0; i < tr.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = train_X.row(static_cast<Eigen::Index>(tr[i]));
            ytr(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(tr[i]));
        }
        for (std::size_t i = 0; i < va.size(); ++i) {
            Xva.row(static_cast<Eigen::Index>(i)) = train_X.row(static_cast<Eigen::Index>(va[i]));
            yva(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(va[i]));
        }
        // Medoids depend only on the fold's training part, not on alpha.
        SpdRidgeModel base = spd_ridge_fit(Xtr, ytr, cfg, alpha_grid.front());
        const Eigen::MatrixXd Htr = base.features(Xtr), Hva = base.features(Xva);
        for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
            const auto r = fit_ridge(Htr, ytr, alpha_grid[a]);
            res.cv_rmse[a] += std::sqrt((predict_ridge(r, Hva) - yva).squaredNorm() / static_cast<double>(va.size()));
        }
    }
    std::size_t best = 0;
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
        res.cv_rmse[a] /= static_cast<double>(n_folds);
        if (res.cv_rmse[a] < res.cv_rmse[best]) best = a;
    }
    res.alpha = alpha_grid[best];
    res.model = spd_ridge_fit(train_X, y, cfg, res.alpha);
    return res;
}

}  // namespace qsb

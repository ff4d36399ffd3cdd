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
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qsb;

namespace {

SPDDescriptor wrap(const Eigen::MatrixXd& m) {
    SPDDescriptor d;
    d.matrix = m;
    return d;
}

}  // namespace

TEST_CASE("outer-product descriptors") {
    // Normalization divides by |x| + 1e-12.
    const auto e1 = outer_descriptor(Eigen::Vector2d(1, 0), true, 1e-6);
    CHECK((e1.matrix - Eigen::Vector2d(1 + 1e-6, 1e-6).asDiagonal().toDenseMatrix()).norm() < 1e-11);

    const auto zero = outer_descriptor(Eigen::Vector2d(0, 0), true, 1e-6);
    CHECK((zero.matrix - 1e-6 * Eigen::Matrix2d::Identity()).norm() < 1e-18);

    const auto n = outer_descriptor(Eigen::Vector2d(3, 4), true, 1e-6);
    CHECK(std::abs(n.matrix.trace() - (1 + 2e-6)) < 1e-12);
    CHECK_NOTHROW(check_spd(n));
}

TEST_CASE("local covariance descriptors") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    Eigen::MatrixXd T(10, 3);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 3; ++j) T(i, j) = g(rng);

    SPDConfig cfg;
    cfg.kind = DescriptorKind::LocalCov;
    cfg.k_nn = 10;
    cfg.shrinkage = 1.0;
    const auto full = local_cov_descriptor(T.row(0).transpose(), T, cfg);
    const Eigen::RowVectorXd mu = T.colwise().mean();
    const Eigen::MatrixXd C = T.rowwise() - mu;
    const Eigen::MatrixXd sigma = C.transpose() * C / 9.0;
    CHECK((full.matrix - (sigma.trace() / 3 + cfg.eps) * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

    cfg.shrinkage = 0.0;
    const auto raw = local_cov_descriptor(T.row(0).transpose(), T, cfg);
    CHECK((raw.matrix - sigma - cfg.eps * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

    Eigen::MatrixXd dup = Eigen::MatrixXd::Ones(5, 2);
    cfg.k_nn = 3;
    cfg.shrinkage = 0.4;
    const auto z = local_cov_descriptor(Eigen::Vector2d(1, 1), dup, cfg);
    CHECK((z.matrix - cfg.eps * Eigen::Matrix2d::Identity()).norm() < 1e-18);

    cfg.k_nn = 6;
    CHECK_THROWS_AS(local_cov_descriptor(Eigen::Vector2d(1, 1), dup, cfg), ConfigError);
}

TEST_CASE("Stein divergence") {
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    CHECK(std::abs(stein_divergence(I, 3 * I) - std::log(4.0 / 3.0)) < 1e-12);
    CHECK(std::abs(stein_divergence(I, 3 * I) - 0.287682072451781) < 1e-12);

    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        const auto A = oracle::random_spd(4, rng), B = oracle::random_spd(4, rng);
        CHECK(std::abs(stein_divergence(A, A)) < 1e-10);
        CHECK(std::abs(stein_divergence(A, B) - stein_divergence(B, A)) < 1e-10);
        CHECK(stein_divergence(A, B) == doctest::Approx(oracle::stein(A, B)).epsilon(1e-9));
    }
    Eigen::Matrix2d bad;
    bad << 1, 0, 0, -1;
    CHECK_THROWS_AS(logdet_spd(bad, "probe"), NumericError);
}

TEST_CASE("matrix log and exp") {
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    CHECK(matrix_log(I).norm() < 1e-15);
    CHECK((matrix_exp(Eigen::Matrix2d::Zero()) - I).norm() < 1e-15);
    const auto L = matrix_log(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix());
    CHECK(std::abs(L(0, 0)) < 1e-15);
    CHECK(std::abs(L(1, 1) - std::log(4.0)) < 1e-14);
    CHECK_THROWS_AS(matrix_log(-I), NumericError);
}

TEST_CASE("Log-Euclidean interpolation") {
    std::mt19937_64 rng(4);
    const auto A = wrap(oracle::random_spd(3, rng)), B = wrap(oracle::random_spd(3, rng));
    CHECK((loge_interpolate(A, B, 0.0).matrix - A.matrix).norm() < 1e-8);
    CHECK((loge_interpolate(A, A, 0.37).matrix - A.matrix).norm() < 1e-8);
    const auto mid = loge_interpolate(wrap(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix()),
                                      wrap(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix()), 0.5);
    CHECK((mid.matrix - 2.0 * Eigen::Matrix2d::Identity()).norm() < 1e-12);
}

TEST_CASE("synthetic augmentation") {
    std::mt19937_64 rng(6);
    std::vector<SPDDescriptor> train;
    for (int i = 0; i < 8; ++i) train.push_back(wrap(oracle::random_spd(3, rng)));
    CHECK(synth_augment(train, 0, 1).empty());
    const auto a = synth_augment(train, 200, 5), b = synth_augment(train, 200, 5);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].matrix == b[i].matrix);
        CHECK(a[i].source == SpdSource::Synthetic);
        CHECK_NOTHROW(check_spd(a[i]));
    }
}

TEST_CASE("PAM medoids") {
    SUBCASE("{I, 2I, 8I} with one medoid picks 2I") {
        const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
        std::vector<SPDDescriptor> pool = {wrap(I), wrap(2 * I), wrap(8 * I)};
        const auto D = divergence_matrix(pool);
        const auto r = pam_medoids(D, 1);
        CHECK(r.medoids == IndexList{1});
        CHECK(r.objective == doctest::Approx(oracle::best_medoid_objective(D, 1)));
    }
    SUBCASE("K = m makes every point a medoid") {
        std::mt19937_64 rng(3);
        std::vector<SPDDescriptor> pool;
        for (int i = 0; i < 5; ++i) pool.push_back(wrap(oracle::random_spd(2, rng)));
        const auto r = pam_medoids(divergence_matrix(pool), 5);
        CHECK(r.medoids.size() == 5);
        CHECK(r.objective == 0.0);
    }
    SUBCASE("duplicated entries leave the objective unchanged") {
        std::mt19937_64 rng(9);
        std::vector<SPDDescriptor> pool;
        for (int i = 0; i < 5; ++i) pool.push_back(wrap(oracle::random_spd(2, rng)));
        const double base = pam_medoids(divergence_matrix(pool), 2).objective;
        auto doubled = pool;
        for (const auto& d : pool) doubled.push_back(d);
        const double twice = pam_medoids(divergence_matrix(doubled), 2).objective;
        CHECK(twice == doctest::Approx(2.0 * base));
    }
    SUBCASE("swap-local optimum bounded below by exhaustive search") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<SPDDescriptor> pool;
            for (int i = 0; i < 7; ++i) pool.push_back(wrap(oracle::random_spd(3, rng)));
            const auto D = divergence_matrix(pool);
            for (std::size_t k = 1; k <= 3; ++k) {
                const auto r = pam_medoids(D, k);
                CHECK(r.objective == doctest::Approx(medoid_objective(D, r.medoids)));
                CHECK(r.objective >= oracle::best_medoid_objective(D, k) - 1e-12);
                for (std::size_t slot = 0; slot < k; ++slot)
                    for (Index h = 0; h < 7; ++h) {
                        if (std::find(r.medoids.begin(), r.medoids.end(), h) != r.medoids.end()) continue;
                        auto alt = r.medoids;
                        alt[slot] = h;
                        CHECK(medoid_objective(D, alt) >= r.objective - 1e-12);
                    }
            }
        }
    }
    SUBCASE("K = 0 is rejected") {
        CHECK_THROWS_AS(pam_medoids(Eigen::MatrixXd::Zero(3, 3), 0), ConfigError);
    }
}

TEST_CASE("distance features") {
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    MedoidSet m;
    m.prototypes = {wrap(I), wrap(3 * I)};
    m.logdets = {0.0, 2 * std::log(3.0)};
    const auto d = spd_distance_features(wrap(I), m);
    CHECK(std::abs(d(0)) < 1e-15);
    CHECK(std::abs(d(1) - std::log(4.0 / 3.0)) < 1e-12);
}

TEST_CASE("pool accepts training and synthetic sources only") {
    SpdPool pool;
    auto d = wrap(Eigen::Matrix2d::Identity());
    pool.add_train({d, d});
    d.source = SpdSource::Synthetic;
    pool.add_synthetic({d});
    CHECK(pool.train_count() == 2);
    CHECK(pool.synthetic_count() == 1);
    CHECK(pool.members().size() == 3);
}

TEST_CASE("SPD ridge with zero medoids is the biomarker ridge") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(40, 3);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
        y(i) = X(i, 0) - X(i, 2) + 0.1 * g(rng);
    }
    SPDConfig cfg;
    cfg.n_medoids = 0;
    const auto m = spd_ridge_fit(X, y, cfg, 1.0);
    const auto r = fit_ridge(X, y, 1.0);
    CHECK((spd_ridge_predict(m, X) - predict_ridge(r, X)).norm() == 0.0);

    cfg.n_medoids = 3;
    cfg.n_synthetic = 20;
    cfg.seed = 2;
    const auto m3 = spd_ridge_fit(X, y, cfg, 1.0);
    CHECK(m3.medoids.prototypes.size() == 3);
    CHECK(m3.features(X).cols() == 6);
    const auto again = spd_ridge_fit(X, y, cfg, 1.0);
    CHECK((spd_ridge_predict(m3, X) - spd_ridge_predict(again, X)).norm() == 0.0);
}

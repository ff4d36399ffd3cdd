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
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace qsb;
using std::numbers::pi;

namespace {

FeatureMapConfig map_cfg(std::size_t q, std::size_t layers, double scale = 1.0) {
    FeatureMapConfig c;
    c.qubits = q;
    c.layers = layers;
    c.angle_scale = scale;
    return c;
}

Eigen::MatrixXd random_angles(std::size_t n, std::size_t q, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-pi / 2, pi / 2);
    Eigen::MatrixXd T(n, q);
    for (Eigen::Index i = 0; i < T.rows(); ++i)
        for (Eigen::Index j = 0; j < T.cols(); ++j) T(i, j) = u(rng);
    return T;
}

}  // namespace

TEST_CASE("single-qubit states") {
    Eigen::VectorXd t(1);
    t << 0.0;
    auto s = build_feature_state(t, map_cfg(1, 1));
    CHECK(std::abs(s[0] - 1.0) < 1e-15);
    CHECK(std::abs(s[1]) < 1e-15);
    t << pi;
    s = build_feature_state(t, map_cfg(1, 1));
    CHECK(std::abs(s[0]) < 1e-15);
    CHECK(std::abs(s[1] - 1.0) < 1e-15);
}

TEST_CASE("feature map matches dense gate algebra") {
    Eigen::VectorXd t(2);
    t << pi / 2, 0.0;
    const auto s = build_feature_state(t, map_cfg(2, 1));
    const auto ref = oracle::dense_state(t, 1, 1.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s[i] - ref(i)) < 1e-14);

    std::mt19937_64 rng(31);
    for (std::size_t q : {2u, 3u, 4u}) {
        for (std::size_t L : {1u, 2u, 3u}) {
            const Eigen::MatrixXd T = random_angles(3, q, rng);
            for (Eigen::Index r = 0; r < T.rows(); ++r) {
                const Eigen::VectorXd th = T.row(r).transpose();
                const auto st = build_feature_state(th, map_cfg(q, L, 1.3));
                const auto dn = oracle::dense_state(th, L, 1.3);
                CHECK(std::abs(st.norm_squared() - 1.0) < 1e-12);
                for (std::size_t i = 0; i < st.dim(); ++i) CHECK(std::abs(st[i] - dn(i)) < 1e-12);
            }
        }
    }
}

TEST_CASE("fidelity kernel") {
    Eigen::VectorXd a(1), b(1);
    a << pi / 2;
    b << 0.0;
    CHECK(std::abs(fidelity_kernel(a, b, map_cfg(1, 1)) - 0.5) < 1e-12);
    for (double x = -pi; x <= pi; x += 0.5)
        for (double y = -pi; y <= pi; y += 0.5) {
            a << x;
            b << y;
            const double c = std::cos((x - y) / 2);
            CHECK(std::abs(fidelity_kernel(a, b, map_cfg(1, 1)) - c * c) < 1e-12);
        }

    std::mt19937_64 rng(2);
    const Eigen::MatrixXd T = random_angles(6, 4, rng);
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
        const Eigen::VectorXd ti = T.row(i).transpose(), tj = T.row((i + 1) % 6).transpose();
        CHECK(std::abs(fidelity_kernel(ti, ti, map_cfg(4, 2)) - 1.0) < 1e-12);
        CHECK(fidelity_kernel(ti, tj, map_cfg(4, 2, 1e-9)) == doctest::Approx(1.0));
    }
}

TEST_CASE("Gram matrices") {
    Eigen::MatrixXd T(2, 1);
    T << pi / 2, 0.0;
    const auto g = gram_matrix(T, map_cfg(1, 1));
    CHECK(g.K(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(g.K(0, 1) - 0.5) < 1e-12);
    CHECK(g.K(0, 1) == g.K(1, 0));

    std::mt19937_64 rng(5);
    const auto big = gram_matrix(random_angles(30, 4, rng), map_cfg(4, 3), 2);
    CHECK((big.K - big.K.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(big.K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("kernel power") {
    std::mt19937_64 rng(6);
    const auto raw = gram_matrix(random_angles(5, 3, rng), map_cfg(3, 2));
    const auto same = kernel_power(raw, 1.0);
    CHECK(same.K == raw.K);
    CHECK_FALSE(same.psd_repaired);

    Eigen::MatrixXd q(1, 1);
    q << 0.25;
    CHECK(kernel_power_entries(q, 0.5)(0, 0) == doctest::Approx(0.5));

    const auto half = kernel_power(raw, 0.5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(half.K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("kernel centering") {
    GramBundle g;
    g.K.resize(2, 2);
    g.K << 1, 0.5, 0.5, 1;
    const auto c = center_gram(g);
    Eigen::Matrix2d expect;
    expect << 0.25, -0.25, -0.25, 0.25;
    CHECK((c.K - expect).norm() < 1e-15);

    std::mt19937_64 rng(8);
    const auto raw = gram_matrix(random_angles(9, 3, rng), map_cfg(3, 2));
    const auto once = center_gram(raw);
    CHECK(once.K.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
    GramBundle again_in;
    again_in.K = once.K;
    CHECK((center_gram(again_in).K - once.K).norm() < 1e-12);
    // Training rows passed as test rows reproduce the centered Gram.
    CHECK((center_test_rows(raw.K, once) - once.K).norm() < 1e-12);
}

TEST_CASE("kernel ridge solve") {
    const Eigen::VectorXd y = Eigen::Vector3d(1.0, -2.0, 0.5);
    const auto m = qkr_fit(Eigen::MatrixXd::Identity(3, 3), y, 1.0);
    CHECK((m.alpha - y / 2).norm() < 1e-15);

    Eigen::MatrixXd T(3, 1);
    T << 0.0, 0.7, -1.1;
    const auto g = gram_matrix(T, map_cfg(1, 1));
    const auto r = qkr_fit(g.K, y, 0.1);
    const Eigen::VectorXd ref = (g.K + 0.1 * Eigen::MatrixXd::Identity(3, 3)).fullPivLu().solve(y);
    CHECK((qkr_predict(r, g.K) - g.K * ref).cwiseAbs().maxCoeff() < 1e-10);

    CHECK(qkr_fit(g.K, y, 1e12).alpha.norm() < 1e-10);
    CHECK_THROWS_AS(qkr_fit(-Eigen::MatrixXd::Identity(3, 3), y, 0.5), NumericError);

    QKRConfig cfg;
    cfg.map = map_cfg(1, 1);
    cfg.lambda = 1e12;
    const auto pm = qkr_pipeline_fit(T, y, cfg);
    CHECK((qkr_pipeline_predict(pm, T).array() - y.mean()).abs().maxCoeff() < 1e-9);
}

TEST_CASE("k-means in angle space") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd T = random_angles(7, 2, rng);
    const auto one = kmeans_angles(T, 1, 3);
    CHECK((one.centers.row(0) - T.colwise().mean()).norm() < 1e-12);

    const auto all = kmeans_angles(T, 7, 3);
    CHECK(all.inertia < 1e-20);

    Eigen::MatrixXd blobs(8, 2);
    blobs << -1.0, -1.0, -1.1, -0.9, -0.9, -1.05, -1.02, -1.0, 1.0, 1.0, 1.1, 0.9, 0.95, 1.05, 1.0, 1.02;
    const auto km = kmeans_angles(blobs, 2, 7);
    std::vector<std::size_t> best;
    const double opt = oracle::best_kmeans_inertia(blobs, 2, best);
    CHECK(km.inertia == doctest::Approx(opt));
    for (std::size_t i = 0; i < 8; ++i)
        CHECK((km.labels[i] == km.labels[0]) == (best[i] == best[0]));

    CHECK_THROWS_AS(kmeans_angles(T, 0, 1), ConfigError);
}

TEST_CASE("clustered kernel features") {
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd T = random_angles(6, 3, rng);
    QKFConfig cfg;
    cfg.map = map_cfg(3, 2);
    cfg.whiten = false;
    const Eigen::MatrixXd c = T.row(2);
    const auto m = qkf_fit_with_centers(T, Eigen::VectorXd::Random(6), c, cfg);
    CHECK(std::abs(qkf_features(c, m)(0, 0) - 1.0) < 1e-12);
    cfg.whiten = true;
    const auto w = qkf_fit_with_centers(T, Eigen::VectorXd::Random(6), c, cfg);
    CHECK((qkf_features(T, w) - qkf_features(T, m)).norm() < 1e-12);
}

TEST_CASE("Nystrom with every training point as a center equals full kernel ridge") {
    std::mt19937_64 rng(20);
    const Eigen::MatrixXd T = random_angles(20, 4, rng), Tt = random_angles(7, 4, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Random(20);
    for (double lambda : {1e-3, 1e-1}) {
        QKFConfig cfg;
        cfg.map = map_cfg(4, 2);
        cfg.whiten = true;
        cfg.lambda = lambda;
        cfg.head_intercept = false;
        const auto qkf = qkf_fit_with_centers(T, y, T, cfg);

        const auto states = build_states(T, cfg.map);
        const Eigen::MatrixXd K = gram_from_states(states);
        const Eigen::MatrixXd Kt = cross_kernel(build_states(Tt, cfg.map), states);
        const Eigen::VectorXd a = (K + lambda * Eigen::MatrixXd::Identity(20, 20)).fullPivLu().solve(y);
        CHECK((qkf_predict(qkf, Tt) - Kt * a).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("variational regressor gradients") {
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 5; ++trial) {
        VQRConfig cfg;
        cfg.map = map_cfg(3, 2);
        cfg.seed = static_cast<std::uint64_t>(trial);
        const Eigen::MatrixXd T = random_angles(6, 3, rng);
        const Eigen::VectorXd y = Eigen::VectorXd::Random(6);
        const Eigen::MatrixXd W = vqr_initial_weights(cfg);
        const Eigen::VectorXd hw = Eigen::VectorXd::Random(3);
        const double hb = 0.3;
        const Eigen::MatrixXd G = vqr_loss_gradient(T, y, W, hw, hb, cfg);
        Eigen::MatrixXd F(W.rows(), W.cols());
        const double h = 1e-5;
        for (Eigen::Index l = 0; l < W.rows(); ++l)
            for (Eigen::Index k = 0; k < W.cols(); ++k) {
                Eigen::MatrixXd Wp = W, Wm = W;
                Wp(l, k) += h;
                Wm(l, k) -= h;
                F(l, k) = (vqr_loss(T, y, Wp, hw, hb, cfg) - vqr_loss(T, y, Wm, hw, hb, cfg)) / (2 * h);
            }
        CHECK((G - F).norm() <= 1e-4 * std::max(1.0, F.norm()));
    }
}

TEST_CASE("variational regressor training") {
    std::mt19937_64 rng(41);
    const Eigen::MatrixXd T = random_angles(12, 3, rng);
    VQRConfig cfg;
    cfg.map = map_cfg(3, 1);
    cfg.epochs = 0;
    cfg.seed = 5;
    const Eigen::VectorXd y = Eigen::VectorXd::Random(12);
    const auto a = vqr_fit(T, y, cfg), b = vqr_fit(T, y, cfg);
    CHECK(a.weights == vqr_initial_weights(cfg));
    CHECK((vqr_predict(a, T) - vqr_predict(b, T)).norm() == 0.0);

    cfg.epochs = 20;
    const auto c = vqr_fit(T, Eigen::VectorXd::Constant(12, 3.7), cfg);
    CHECK(c.final_loss <= 1e-6);

    const auto d = vqr_fit(T, y, cfg);
    CHECK(d.final_loss <= d.initial_loss + 1e-12);
}

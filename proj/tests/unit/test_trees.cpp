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

#include "qsb/trees.hpp"

#include <doctest.h>

#include <random>

using namespace qsb;

namespace {

// Best single split by exhaustive scoring of every midpoint.
double best_threshold(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double best_sse = std::numeric_limits<double>::infinity(), best_t = 0;
    for (Eigen::Index k = 0; k + 1 < x.size(); ++k) {
        const double t = 0.5 * (x(k) + x(k + 1));
        double sl = 0, sr = 0, nl = 0, nr = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) (x(i) <= t ? (sl += y(i), nl += 1) : (sr += y(i), nr += 1));
        double sse = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double m = x(i) <= t ? sl / nl : sr / nr;
            sse += (y(i) - m) * (y(i) - m);
        }
        if (sse < best_sse) {
            best_sse = sse;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace

TEST_CASE("CART step function") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    Eigen::VectorXd y(4);
    y << 0, 0, 10, 10;
    const auto t = fit_cart(X, y, 1, 1);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].threshold == best_threshold(X.col(0), y));
    CHECK(t.nodes[0].threshold == 1.5);
    Eigen::RowVectorXd probe(1);
    probe << 0.5;
    CHECK(t.predict_row(probe) == 0.0);
    probe << 2.7;
    CHECK(t.predict_row(probe) == 10.0);
}

TEST_CASE("CART degenerate cases") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Random(10);
    const auto stump = fit_cart(X, y, 0, 1);
    CHECK(stump.nodes.size() == 1);
    CHECK(predict_tree(stump, X).isConstant(y.mean(), 1e-12));

    const auto flat = fit_cart(X, Eigen::VectorXd::Constant(10, 3.0), 5, 1);
    CHECK(flat.nodes.size() == 1);
    CHECK(flat.depth() == 0);
}

TEST_CASE("CART respects depth and leaf size") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(80, 3);
    Eigen::VectorXd y(80);
    for (int i = 0; i < 80; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
        y(i) = X(i, 0) * X(i, 1) + g(rng);
    }
    const auto t = fit_cart(X, y, 3, 5);
    CHECK(t.depth() <= 3);
    for (const auto& n : t.nodes)
        if (n.is_leaf()) CHECK(n.count >= 5);
    CHECK_FALSE(dump_tree(t, {"a", "b", "c"}).empty());
}

TEST_CASE("random forest") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(60, 3);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = g(rng);
        y(i) = 4.0 * X(i, 0) + 0.3 * g(rng);
    }

    SUBCASE("one tree without bootstrap equals CART") {
        ForestParams p;
        p.n_trees = 1;
        p.bootstrap = false;
        p.mtry = 3;
        p.max_depth = 4;
        p.min_leaf = 2;
        const auto f = fit_random_forest(X, y, p);
        CHECK((predict_forest(f, X) - predict_tree(fit_cart(X, y, 4, 2), X)).norm() == 0.0);
    }
    SUBCASE("same seed, same predictions; threads do not matter") {
        ForestParams p;
        p.n_trees = 25;
        p.seed = 9;
        const auto a = predict_forest(fit_random_forest(X, y, p), X);
        p.jobs = 3;
        const auto b = predict_forest(fit_random_forest(X, y, p), X);
        CHECK((a - b).norm() == 0.0);
    }
    SUBCASE("forest train RMSE does not exceed a depth-limited tree's") {
        ForestParams p;
        p.n_trees = 50;
        p.seed = 4;
        p.min_leaf = 1;
        const auto f = predict_forest(fit_random_forest(X, y, p), X);
        const auto t = predict_tree(fit_cart(X, y, 2, 1), X);
        const double rf = std::sqrt((f - y).squaredNorm() / 60), rt = std::sqrt((t - y).squaredNorm() / 60);
        CHECK(rf <= rt + 1e-9);
    }
}

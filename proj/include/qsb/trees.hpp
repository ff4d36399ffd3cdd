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

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qsb {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the rows reaching this node
    std::size_t count = 0;
    double sse = 0.0;  // within-node sum of squared deviations
    int depth = 0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth = 0;
    std::size_t min_leaf = 1;
    std::size_t n_features = 0;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    /// Index of the leaf reached by x.
    int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    int depth() const;
};

inline constexpr double kMinSplitGain = 1e-12;

/// Greedy CART with variance-reduction splits at midpoints between adjacent
/// distinct values. Ties go to the lowest feature index, then the lowest
/// threshold.
RegressionTree fit_cart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth, std::size_t min_leaf);

/// Same as fit_cart but each split only examines `mtry` features drawn
/// from `rng`. Used by the forest.
RegressionTree fit_cart_random(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth, std::size_t min_leaf,
                               std::size_t mtry, std::mt19937_64& rng);

Eigen::VectorXd predict_tree(const RegressionTree& tree, const Eigen::MatrixXd& X);

/// Indented text dump: one line per node with feature name, threshold, leaf
/// mean and count.
std::string dump_tree(const RegressionTree& tree, const std::vector<std::string>& feature_names);

struct ForestModel {
    std::vector<RegressionTree> trees;
    std::size_t n_trees = 0;
    std::size_t mtry = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestParams {
    std::size_t n_trees = 300;
    std::size_t mtry = 0;  // 0 means ceil(p / 3)
    int max_depth = 64;
    std::size_t min_leaf = 2;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

/// Each tree uses its own stream derived from (seed, tree index) so serial
/// and threaded fits agree exactly.
ForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params);
Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& X);

}  // namespace qsb

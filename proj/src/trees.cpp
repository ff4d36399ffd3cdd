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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qsb {

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return nodes[static_cast<std::size_t>(leaf_of(x))].value;
}

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        k = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return k;
}

int RegressionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth, std::size_t min_leaf,
                std::size_t mtry, std::mt19937_64* rng)
        : X_(X), y_(y), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(1, min_leaf)), mtry_(mtry), rng_(rng) {}

    RegressionTree build(IndexList rows) {
        tree_.max_depth = max_depth_;
        tree_.min_leaf = min_leaf_;
        tree_.n_features = static_cast<std::size_t>(X_.cols());
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    int grow(IndexList rows, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        TreeNode node;
        node.depth = depth;
        node.count = rows.size();
        double sum = 0.0;
        for (Index r : rows) sum += y_(static_cast<Eigen::Index>(r));
        node.value = sum / static_cast<double>(rows.size());
        for (Index r : rows) {
            const double d = y_(static_cast<Eigen::Index>(r)) - node.value;
            node.sse += d * d;
        }
        tree_.nodes.push_back(node);

        if (depth >= max_depth_ || rows.size() < 2 * min_leaf_ || node.sse <= kMinSplitGain) return id;
        const Split best = find_split(rows, node.value, node.sse);
        if (best.feature < 0) return id;

        IndexList left, right;
        for (Index r : rows) {
            if (X_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold) left.push_back(r);
            else right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        tree_.nodes[static_cast<std::size_t>(id)].feature = best.feature;
        tree_.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
        const int l = grow(std::move(left), depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = l;
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::vector<int> candidate_features() {
        std::vector<int> feats(static_cast<std::size_t>(X_.cols()));
        std::iota(feats.begin(), feats.end(), 0);
        if (rng_ && mtry_ > 0 && mtry_ < feats.size()) {
            // Partial Fisher-Yates, then evaluate in ascending index order.
            for (std::size_t i = 0; i < mtry_; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, feats.size() - 1);
                std::swap(feats[i], feats[pick(*rng_)]);
            }
            feats.resize(mtry_);
            std::sort(feats.begin(), feats.end());
        }
        return feats;
    }

    Split find_split(const IndexList& rows, double mean, double parent_sse) {
        Split best;
        const std::size_t n = rows.size();
        std::vector<std::pair<double, double>> xy(n);
        for (int f : candidate_features()) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = static_cast<Eigen::Index>(rows[i]);
                xy[i] = {X_(r, f), y_(r) - mean};
            }
            std::sort(xy.begin(), xy.end());
            double total = 0.0, total_sq = 0.0;
            for (const auto& [x, v] : xy) {
                total += v;
                total_sq += v * v;
            }
            double left = 0.0, left_sq = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                left += xy[k - 1].second;
                left_sq += xy[k - 1].second * xy[k - 1].second;
                if (k < min_leaf_ || n - k < min_leaf_) continue;
                if (!(xy[k - 1].first < xy[k].first)) continue;
                const double nl = static_cast<double>(k), nr = static_cast<double>(n - k);
                const double right = total - left, right_sq = total_sq - left_sq;
                const double sse = (left_sq - left * left / nl) + (right_sq - right * right / nr);
                const double gain = parent_sse - sse;
                if (gain > kMinSplitGain && gain > best.gain) {
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = 0.5 * (xy[k - 1].first + xy[k].first);
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    int max_depth_;
    std::size_t min_leaf_;
    std::size_t mtry_;
    std::mt19937_64* rng_;
    RegressionTree tree_;
};

// Fewer than 2 * min_leaf rows is allowed; the root simply stays a leaf.
void check_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw ShapeError("tree: design rows and target length differ");
    if (X.rows() == 0) throw FitError("tree needs at least one row");
}

}  // namespace

RegressionTree fit_cart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth, std::size_t min_leaf) {
    check_xy(X, y);
    IndexList rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    return TreeBuilder(X, y, max_depth, min_leaf, 0, nullptr).build(std::move(rows));
}

RegressionTree fit_cart_random(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_depth, std::size_t min_leaf,
                               std::size_t mtry, std::mt19937_64& rng) {
    check_xy(X, y);
    IndexList rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), Index{0});
    return TreeBuilder(X, y, max_depth, min_leaf, mtry, &rng).build(std::move(rows));
}

Eigen::VectorXd predict_tree(const RegressionTree& tree, const Eigen::MatrixXd& X) {
    if (static_cast<std::size_t>(X.cols()) != tree.n_features) throw ShapeError("tree: feature dimension mismatch");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = tree.predict_row(X.row(i));
    return out;
}

std::string dump_tree(const RegressionTree& tree, const std::vector<std::string>& feature_names) {
    std::ostringstream os;
    os.precision(6);
    auto name = [&](int f) {
        return static_cast<std::size_t>(f) < feature_names.size() ? feature_names[static_cast<std::size_t>(f)]
                                                                   : "x" + std::to_string(f);
    };
    auto rec = [&](auto&& self, int k) -> void {
        const auto& nd = tree.nodes[static_cast<std::size_t>(k)];
        const std::string pad(static_cast<std::size_t>(2 * nd.depth), ' ');
        if (nd.is_leaf()) {
            os << pad << "leaf mean=" << nd.value << " n=" << nd.count << '\n';
            return;
        }
        os << pad << name(nd.feature) << " <= " << nd.threshold << " (n=" << nd.count << ")\n";
        self(self, nd.left);
        os << pad << name(nd.feature) << " > " << nd.threshold << '\n';
        self(self, nd.right);
    };
    rec(rec, 0);
    return os.str();
}

ForestModel fit_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params) {
    if (params.n_trees < 1) throw ConfigError("forest needs at least one tree");
    const auto p = static_cast<std::size_t>(X.cols());
    std::size_t mtry = params.mtry == 0 ? (p + 2) / 3 : params.mtry;
    if (mtry < 1 || mtry > p) throw ConfigError("forest mtry must lie in [1, p]");
    if (X.rows() != y.size()) throw ShapeError("forest: design rows and target length differ");

    ForestModel model;
    model.n_trees = params.n_trees;
    model.mtry = mtry;
    model.bootstrap = params.bootstrap;
    model.seed = params.seed;
    model.trees.resize(params.n_trees);

    const auto n = static_cast<std::size_t>(X.rows());
    parallel_for(params.n_trees, params.jobs, [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(params.seed, t));
        if (!params.bootstrap) {
            model.trees[t] = fit_cart_random(X, y, params.max_depth, params.min_leaf, mtry, rng);
            return;
        }
        std::uniform_int_distribution<std::size_t> draw(0, n - 1);
        Eigen::MatrixXd Xb(X.rows(), X.cols());
        Eigen::VectorXd yb(y.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(draw(rng));
            Xb.row(static_cast<Eigen::Index>(i)) = X.row(r);
            yb(static_cast<Eigen::Index>(i)) = y(r);
        }
        model.trees[t] = fit_cart_random(Xb, yb, params.max_depth, params.min_leaf, mtry, rng);
    });
    return model;
}

Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& t : model.trees) out += predict_tree(t, X);
    return out / static_cast<double>(model.trees.size());
}

}  // namespace qsb

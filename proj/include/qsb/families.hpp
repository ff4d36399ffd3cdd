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

#include "qsb/eval.hpp"
#include "qsb/preprocess.hpp"
#include "qsb/spd.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qsb {

enum class FeatureBudget { Full, Engineered, Compact3Condition, Compact3 };

std::string to_string(FeatureBudget b);
FeatureBudget parse_budget(const std::string& s);

/// Which biomarkers a budget reads and how they are combined. Compact
/// budgets use `compact` (exactly three names).
PipelineSpec budget_pipeline(FeatureBudget budget, const std::vector<std::string>& compact);

struct FamilyGrids {
    std::vector<double> ridge_alphas = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
    std::vector<double> lda_shrinkage = {0.05};

    std::vector<std::size_t> tree_depths = {2, 3};
    std::vector<std::size_t> tree_min_leaf = {3, 5};
    std::size_t forest_trees = 300;
    std::vector<std::size_t> forest_min_leaf = {2, 5};

    std::vector<std::size_t> spd_medoids = {2, 3, 4, 6};
    std::vector<bool> spd_normalize = {true, false};
    std::vector<double> spd_synthetic_factor = {0.0, 2.0};  // n_syn = factor * training rows
    std::size_t spd_knn = 8;
    double spd_shrinkage = 0.1;
    double spd_eps = kDefaultSpdJitter;

    std::vector<std::size_t> q_qubits = {3, 4};
    std::vector<std::size_t> q_layers = {1, 2, 3};
    std::vector<double> q_scales = {0.5, 1.0, 2.0};
    std::vector<double> q_powers = {0.5, 1.0};
    std::vector<double> q_lambdas = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
    bool qkr_center = true;
    std::vector<std::size_t> qkf_centers = {3, 5, 8};
    bool qkf_whiten = true;

    std::vector<std::size_t> vqr_qubits = {4};
    std::vector<std::size_t> vqr_layers = {2};
    std::size_t vqr_var_layers = 2;
    double vqr_learning_rate = 0.1;
    std::size_t vqr_epochs = 300;
};

struct FamilyBudgets {
    FeatureBudget raw = FeatureBudget::Full;
    FeatureBudget engineered = FeatureBudget::Engineered;
    FeatureBudget spd = FeatureBudget::Compact3;
    FeatureBudget quantum = FeatureBudget::Compact3Condition;
    std::vector<std::string> compact = {"crp", "balf_neutrophils", "balf_total"};
};

struct FamilySpec {
    std::string key;      // stable identifier, e.g. "raw_ridge"
    std::string group;    // report section
    std::string display;  // report row label
    FeatureBudget budget = FeatureBudget::Full;
    bool uses_features = true;
    std::vector<ParamSet> grid;
    FitFunction fit;
};

/// Report order of every family key.
const std::vector<std::string>& family_order();

/// Builds every family in report order. `seed` keys caches that must not
/// depend on the grid position (SPD pools).
std::vector<FamilySpec> make_families(const FamilyGrids& grids, const FamilyBudgets& budgets, std::uint64_t seed);

/// One SPD family with an explicit grid (used by ablations).
struct SpdVariant {
    std::string key;
    std::string display;
    DescriptorKind kind = DescriptorKind::Outer;
    std::vector<std::size_t> medoids;
    std::vector<bool> normalize = {true};
    std::vector<double> synthetic_factor = {0.0};
    std::size_t knn = 8;
};

FamilySpec make_spd_family(const SpdVariant& variant, const FamilyGrids& grids, const FamilyBudgets& budgets,
                           std::uint64_t seed);

/// The four SPD ablation rows: K=0 baseline, outer K=3, outer best-by-CV and
/// local covariance K=6 with k=8, none with synthetic augmentation.
std::vector<SpdVariant> default_spd_ablation(const FamilyGrids& grids);

}  // namespace qsb

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
#include "qsb/data.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qsb {

// ---------------------------------------------------------------------------
// Regression metrics (original units)

struct RegressionMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    double pct_rmse = 0.0;
    double pct_mae = 0.0;
    bool r2_undefined = false;   // zero variance in y; r2 is NaN
    bool pct_undefined = false;  // mean(y) = 0; pct metrics are NaN
};

RegressionMetrics regression_metrics(std::span<const double> y, std::span<const double> yhat);

// ---------------------------------------------------------------------------
// Screening

enum class ScreeningStatistic { Mean, Median };
enum class PositiveClass { Low, High };

struct ScreeningSpec {
    double kappa = 0.8;
    ScreeningStatistic statistic = ScreeningStatistic::Mean;
    PositiveClass positive = PositiveClass::Low;
    double tau = 0.0;
    bool fitted = false;
};

/// tau = kappa * statistic(y | Sham) over the training rows given.
ScreeningSpec fit_screening_threshold(std::span<const double> y, std::span<const int> c, ScreeningSpec spec);

/// Low: 1 iff value <= tau. High: 1 iff value >= tau.
std::vector<int> screening_labels(std::span<const double> values, const ScreeningSpec& spec);
inline std::vector<int> prediction_labels(std::span<const double> yhat, const ScreeningSpec& spec) {
    return screening_labels(yhat, spec);
}

/// Ranking score where larger means stronger evidence of the positive class.
std::vector<double> screening_scores(std::span<const double> yhat, const ScreeningSpec& spec);

/// Midrank ROC-AUC. NaN when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ScreeningMetrics {
    double roc_auc = 0.0;
    double f1_macro = 0.0;
    double f1_weighted = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double balanced_accuracy = 0.0;
    std::string auc_note;  // set when roc_auc is NaN
};

/// Per-class precision, recall and F1 with 0/0 taken as 0. roc_auc is left 0.
ScreeningMetrics classification_report(std::span<const int> pred, std::span<const int> truth);

ScreeningMetrics screening_metrics(std::span<const double> y, std::span<const double> yhat, const ScreeningSpec& spec);

// ---------------------------------------------------------------------------
// Hyperparameters

/// Ordered name = value pairs. Values are kept as text so the fingerprint is
/// exactly what gets reported.
class ParamSet {
public:
    ParamSet& set(const std::string& name, const std::string& value);
    ParamSet& set(const std::string& name, double value);
    ParamSet& set(const std::string& name, std::size_t value);

    bool has(const std::string& name) const;
    const std::string& get(const std::string& name) const;
    double get_double(const std::string& name) const;
    std::size_t get_size(const std::string& name) const;
    bool get_bool(const std::string& name) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    /// "a=1;b=x"
    std::string fingerprint() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_param(double v);

using GridAxis = std::pair<std::string, std::vector<std::string>>;

/// Cartesian product; the first axis varies slowest.
std::vector<ParamSet> param_grid(const std::vector<GridAxis>& axes);

// ---------------------------------------------------------------------------
// Grid search

/// A model fitted on a set of cohort rows. Predictions come back in original
/// target units.
class FittedModel {
public:
    virtual ~FittedModel() = default;
    virtual std::vector<double> predict(const Cohort& cohort, std::span<const Index> rows) const = 0;
    /// Set hash of the rows every data-dependent parameter was fitted on.
    virtual std::uint64_t fit_hash() const = 0;
    /// Free-form fit diagnostics (flags, chosen structure).
    virtual std::string notes() const { return {}; }
    /// Human-readable model structure (tree dumps); empty when not applicable.
    virtual std::string dump() const { return {}; }
};

using FitFunction = std::function<std::unique_ptr<FittedModel>(const Cohort& cohort, Target target,
                                                               std::span<const Index> rows, const ParamSet& params,
                                                               std::uint64_t seed, unsigned jobs)>;

/// Thread-safe record of (expected, recorded) fit-index hashes.
class LeakageAudit {
public:
    void record(const std::string& context, std::uint64_t expected, std::uint64_t recorded);
    std::size_t checks() const;
    std::vector<std::string> violations() const;

private:
    mutable std::mutex mutex_;
    std::size_t checks_ = 0;
    std::vector<std::string> violations_;
};

struct CvRow {
    ParamSet params;
    std::vector<double> fold_rmse;  // NaN where the fit threw, +inf where the score was not finite
    double mean_rmse = 0.0;
    std::size_t rank = 0;  // 1 = selected; 0 = excluded
    std::string error;     // reason for exclusion
};

struct GridSearchOptions {
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    LeakageAudit* audit = nullptr;
    std::string label;
};

struct GridSearchResult {
    std::vector<CvRow> table;
    std::size_t best = 0;
    std::uint64_t refit_seed = 0;
    std::unique_ptr<FittedModel> model;

    const CvRow& best_row() const { return table.at(best); }
};

/// Every config is fitted inside each fold's training part and scored by
/// RMSE on the fold's validation part in original units. The config with the
/// lowest mean RMSE wins (ties go to grid order) and is refitted on `train`.
/// A config that fails on any fold, or scores a non-finite RMSE there, is
/// excluded; if all are excluded the search throws FitError.
GridSearchResult grid_search_cv(const Cohort& cohort, Target target, std::span<const Index> train,
                                const std::vector<Fold>& folds, const std::vector<ParamSet>& grid,
                                const FitFunction& fit, const GridSearchOptions& options);

/// Seed used for (config, fold); fold == number of folds denotes the refit.
std::uint64_t task_seed(std::uint64_t base, std::size_t config, std::size_t fold);

/// CSV: config, fold_1..fold_K, mean_rmse, rank, error.
void write_cv_table(const std::string& path, const GridSearchResult& result);

}  // namespace qsb

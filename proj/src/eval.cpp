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

#include "qsb/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace qsb {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

RegressionMetrics regression_metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw ShapeError("metrics: prediction and target lengths differ");
    if (y.size() < 2) throw ShapeError("metrics need at least two samples");
    const auto n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sse = 0.0, sae = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        sse += e * e;
        sae += std::abs(e);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    RegressionMetrics m;
    m.rmse = std::sqrt(sse / n);
    m.mae = sae / n;
    if (sst > 0) {
        m.r2 = 1.0 - sse / sst;
    } else {
        m.r2 = kNaN;
        m.r2_undefined = true;
    }
    if (mean != 0) {
        m.pct_rmse = 100.0 * m.rmse / mean;
        m.pct_mae = 100.0 * m.mae / mean;
    } else {
        m.pct_rmse = m.pct_mae = kNaN;
        m.pct_undefined = true;
    }
    return m;
}

ScreeningSpec fit_screening_threshold(std::span<const double> y, std::span<const int> c, ScreeningSpec spec) {
    if (y.size() != c.size()) throw ShapeError("screening: target and condition lengths differ");
    std::vector<double> sham;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (c[i] == 0) sham.push_back(y[i]);
    if (sham.empty()) throw ProtocolError("screening threshold needs at least one Sham training subject");
    double stat = 0.0;
    if (spec.statistic == ScreeningStatistic::Mean) {
        stat = std::accumulate(sham.begin(), sham.end(), 0.0) / static_cast<double>(sham.size());
    } else {
        std::sort(sham.begin(), sham.end());
        const std::size_t m = sham.size() / 2;
        stat = sham.size() % 2 ? sham[m] : 0.5 * (sham[m - 1] + sham[m]);
    }
    spec.tau = spec.kappa * stat;
    spec.fitted = true;
    return spec;
}

std::vector<int> screening_labels(std::span<const double> values, const ScreeningSpec& spec) {
    if (!spec.fitted) throw ProtocolError("screening threshold has not been fitted");
    std::vector<int> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = spec.positive == PositiveClass::Low ? values[i] <= spec.tau : values[i] >= spec.tau;
    return out;
}

std::vector<double> screening_scores(std::span<const double> yhat, const ScreeningSpec& spec) {
    std::vector<double> s(yhat.begin(), yhat.end());
    if (spec.positive == PositiveClass::Low)
        for (auto& v : s) v = -v;
    return s;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("roc_auc: score and label lengths differ");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return kNaN;
    const double pp = static_cast<double>(n_pos);
    return (rank_sum - pp * (pp + 1.0) / 2.0) / (pp * static_cast<double>(n_neg));
}

ScreeningMetrics classification_report(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) throw ShapeError("classification report: length mismatch");
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i]) (pred[i] ? tp : fn) += 1;
        else (pred[i] ? fp : tn) += 1;
    }
    auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
    auto f1 = [&](double p, double r) { return ratio(2 * p * r, p + r); };
    const double prec_pos = ratio(tp, tp + fp), rec_pos = ratio(tp, tp + fn);
    const double prec_neg = ratio(tn, tn + fn), rec_neg = ratio(tn, tn + fp);
    const double f1_pos = f1(prec_pos, rec_pos), f1_neg = f1(prec_neg, rec_neg);
    const double support_pos = tp + fn, support_neg = tn + fp;

    ScreeningMetrics m;
    m.precision_macro = 0.5 * (prec_pos + prec_neg);
    m.recall_macro = 0.5 * (rec_pos + rec_neg);
    m.f1_macro = 0.5 * (f1_pos + f1_neg);
    m.f1_weighted = ratio(f1_pos * support_pos + f1_neg * support_neg, support_pos + support_neg);
    m.balanced_accuracy = m.recall_macro;
    return m;
}

ScreeningMetrics screening_metrics(std::span<const double> y, std::span<const double> yhat, const ScreeningSpec& spec) {
    const auto truth = screening_labels(y, spec);
    ScreeningMetrics m = classification_report(prediction_labels(yhat, spec), truth);
    m.roc_auc = roc_auc(screening_scores(yhat, spec), truth);
    if (std::isnan(m.roc_auc)) m.auc_note = "only one screening class present in the evaluation set";
    return m;
}

// ---------------------------------------------------------------------------

std::string format_param(double v) { return fmt::format("{}", v); }

ParamSet& ParamSet::set(const std::string& name, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == name) {
            v = value;
            return *this;
        }
    }
    entries_.emplace_back(name, value);
    return *this;
}

ParamSet& ParamSet::set(const std::string& name, double value) { return set(name, format_param(value)); }
ParamSet& ParamSet::set(const std::string& name, std::size_t value) { return set(name, std::to_string(value)); }

bool ParamSet::has(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const std::string& ParamSet::get(const std::string& name) const {
    for (const auto& [k, v] : entries_)
        if (k == name) return v;
    throw ConfigError("missing hyperparameter '" + name + "'");
}

double ParamSet::get_double(const std::string& name) const {
    const auto& s = get(name);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("hyperparameter '" + name + "' is not a number: " + s);
}

std::size_t ParamSet::get_size(const std::string& name) const {
    const double v = get_double(name);
    if (v < 0 || v != std::floor(v)) throw ConfigError("hyperparameter '" + name + "' is not a count");
    return static_cast<std::size_t>(v);
}

bool ParamSet::get_bool(const std::string& name) const {
    const auto& s = get(name);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw ConfigError("hyperparameter '" + name + "' is not a flag: " + s);
}

std::string ParamSet::fingerprint() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        if (!out.empty()) out += ';';
        out += k + '=' + v;
    }
    return out;
}

std::vector<ParamSet> param_grid(const std::vector<GridAxis>& axes) {
    std::vector<ParamSet> out(1);
    for (const auto& [name, values] : axes) {
        if (values.empty()) throw ConfigError("grid axis '" + name + "' is empty");
        std::vector<ParamSet> next;
        next.reserve(out.size() * values.size());
        for (const auto& base : out) {
            for (const auto& v : values) {
                ParamSet p = base;
                p.set(name, v);
                next.push_back(std::move(p));
            }
        }
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------

void LeakageAudit::record(const std::string& context, std::uint64_t expected, std::uint64_t recorded) {
    std::lock_guard lock(mutex_);
    ++checks_;
    if (expected != recorded)
        violations_.push_back(context + ": expected " + hex64(expected) + ", recorded " + hex64(recorded));
}

std::size_t LeakageAudit::checks() const {
    std::lock_guard lock(mutex_);
    return checks_;
}

std::vector<std::string> LeakageAudit::violations() const {
    std::lock_guard lock(mutex_);
    return violations_;
}

std::uint64_t task_seed(std::uint64_t base, std::size_t config, std::size_t fold) {
    return derive_seed(base, config, fold);
}

namespace {

double validation_rmse(const Cohort& cohort, Target target, const FittedModel& model, const IndexList& rows) {
    const auto y = cohort.target(target, rows);
    const auto yhat = model.predict(cohort, rows);
    if (yhat.size() != y.size()) throw ShapeError("model returned the wrong number of predictions");
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(yhat[i])) return std::numeric_limits<double>::infinity();
        sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    }
    return std::sqrt(sse / static_cast<double>(y.size()));
}

}  // namespace

GridSearchResult grid_search_cv(const Cohort& cohort, Target target, std::span<const Index> train,
                                const std::vector<Fold>& folds, const std::vector<ParamSet>& grid,
                                const FitFunction& fit, const GridSearchOptions& options) {
    if (grid.empty()) throw ConfigError("grid search needs at least one configuration");
    if (folds.empty()) throw ConfigError("grid search needs at least one fold");
    const std::size_t n_folds = folds.size();

    GridSearchResult res;
    res.table.resize(grid.size());
    std::vector<std::string> errors(grid.size() * n_folds);
    for (std::size_t c = 0; c < grid.size(); ++c) {
        res.table[c].params = grid[c];
        res.table[c].fold_rmse.assign(n_folds, std::numeric_limits<double>::quiet_NaN());
    }

    parallel_for(grid.size() * n_folds, options.jobs, [&](std::size_t task) {
        const std::size_t c = task / n_folds, f = task % n_folds;
        try {
            auto model = fit(cohort, target, folds[f].train, grid[c], task_seed(options.seed, c, f), 1);
            if (options.audit)
                options.audit->record(fmt::format("{} config {} fold {}", options.label, c, f + 1),
                                      index_set_hash(folds[f].train), model->fit_hash());
            const double rmse = validation_rmse(cohort, target, *model, folds[f].validation);
            res.table[c].fold_rmse[f] = std::isfinite(rmse) ? rmse : std::numeric_limits<double>::infinity();
            if (!std::isfinite(rmse)) errors[task] = fmt::format("fold {}: non-finite validation RMSE", f + 1);
        } catch (const Error& e) {
            errors[task] = fmt::format("fold {}: {}", f + 1, e.what());
        }
    });

    std::vector<std::size_t> usable;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        auto& row = res.table[c];
        for (std::size_t f = 0; f < n_folds && row.error.empty(); ++f) row.error = errors[c * n_folds + f];
        if (!row.error.empty()) {
            row.mean_rmse = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        row.mean_rmse = std::accumulate(row.fold_rmse.begin(), row.fold_rmse.end(), 0.0) / static_cast<double>(n_folds);
        usable.push_back(c);
    }
    if (usable.empty()) throw FitError("every configuration failed: " + res.table.front().error);
    std::stable_sort(usable.begin(), usable.end(),
                     [&](std::size_t a, std::size_t b) { return res.table[a].mean_rmse < res.table[b].mean_rmse; });
    for (std::size_t r = 0; r < usable.size(); ++r) res.table[usable[r]].rank = r + 1;
    res.best = usable.front();

    res.refit_seed = task_seed(options.seed, res.best, n_folds);
    res.model = fit(cohort, target, train, grid[res.best], res.refit_seed, options.jobs);
    if (options.audit)
        options.audit->record(options.label + " refit", index_set_hash(train), res.model->fit_hash());
    return res;
}

void write_cv_table(const std::string& path, const GridSearchResult& result) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    const std::size_t k = result.table.empty() ? 0 : result.table.front().fold_rmse.size();
    out << "config";
    for (std::size_t f = 0; f < k; ++f) out << ",fold_" << f + 1;
    out << ",mean_rmse,rank,error\n";
    for (const auto& row : result.table) {
        out << '"' << row.params.fingerprint() << '"';
        for (double v : row.fold_rmse) out << ',' << fmt::format("{}", v);
        out << ',' << fmt::format("{}", row.mean_rmse) << ',' << row.rank << ",\"";
        for (char ch : row.error) out << (ch == '"' ? '\'' : ch);
        out << "\"\n";
    }
}

}  // namespace qsb

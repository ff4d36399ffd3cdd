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
#include "qsb/linmodels.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qsb;

TEST_CASE("regression metrics") {
    const std::vector<double> y = {1, 2, 3, 4};
    const auto perfect = regression_metrics(y, y);
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.r2 == 1.0);

    const std::vector<double> flat(4, 2.5);
    CHECK(std::abs(regression_metrics(y, flat).r2) < 1e-15);

    const std::vector<double> a = {0, 2}, b = {0, 0};
    const auto m = regression_metrics(a, b);
    CHECK(m.rmse == doctest::Approx(std::sqrt(2.0)));
    CHECK(m.mae == doctest::Approx(1.0));
    CHECK(m.pct_rmse == doctest::Approx(100.0 * std::sqrt(2.0)));

    const std::vector<double> c = {3, 3};
    CHECK(regression_metrics(c, b).r2_undefined);
    CHECK(std::isnan(regression_metrics(c, b).r2));
    const std::vector<double> z = {-1, 1};
    CHECK(regression_metrics(z, b).pct_undefined);
}

TEST_CASE("screening threshold and labels") {
    ScreeningSpec spec;
    const std::vector<double> y = {10, 10, 10, 3};
    const std::vector<int> c = {0, 0, 0, 1};
    CHECK(fit_screening_threshold(y, c, spec).tau == doctest::Approx(8.0));

    ScreeningSpec med;
    med.statistic = ScreeningStatistic::Median;
    const std::vector<double> y2 = {8, 12, 10};
    const std::vector<int> c2 = {0, 0, 0};
    CHECK(fit_screening_threshold(y2, c2, med).tau == doctest::Approx(8.0));

    ScreeningSpec unit;
    unit.kappa = 1.0;
    CHECK(fit_screening_threshold(y2, c2, unit).tau == doctest::Approx(10.0));

    const std::vector<int> all_cs = {1, 1, 1};
    CHECK_THROWS_AS(fit_screening_threshold(y2, all_cs, spec), ProtocolError);

    ScreeningSpec t;
    t.tau = 8.0;
    t.fitted = true;
    const std::vector<double> v = {7, 8, 9};
    CHECK(screening_labels(v, t) == std::vector<int>{1, 1, 0});
    t.positive = PositiveClass::High;
    CHECK(screening_labels(v, t) == std::vector<int>{0, 1, 1});
}

TEST_CASE("ROC-AUC") {
    const std::vector<int> lab = {0, 0, 1, 1};
    const std::vector<double> up = {1, 2, 3, 4}, down = {4, 3, 2, 1}, same = {1, 1, 1, 1};
    CHECK(roc_auc(up, lab) == 1.0);
    CHECK(roc_auc(down, lab) == 0.0);
    CHECK(roc_auc(same, lab) == 0.5);
    const std::vector<int> one = {1, 1, 1, 1};
    CHECK(std::isnan(roc_auc(up, one)));

    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> nd(2, 40), sd(0, 5), bd(0, 1);
    for (int t = 0; t < 200; ++t) {
        const int n = nd(rng);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = sd(rng);
            y[i] = bd(rng);
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(roc_auc(s, y) == oracle::auc_pairs(s, y));
    }
}

TEST_CASE("classification report") {
    const std::vector<int> truth = {1, 1, 0, 0};
    CHECK(classification_report(truth, truth).f1_macro == 1.0);
    CHECK(classification_report(truth, truth).balanced_accuracy == 1.0);

    const std::vector<int> pred = {1, 0, 0, 0};  // TP 1, FN 1, TN 2, FP 0
    const auto r = classification_report(pred, truth);
    CHECK(r.recall_macro == doctest::Approx(0.75));
    CHECK(r.balanced_accuracy == doctest::Approx(0.75));

    const std::vector<int> neg = {0, 0, 0, 0};
    const auto z = classification_report(neg, truth);
    CHECK(z.balanced_accuracy == doctest::Approx(0.5));
    CHECK(z.precision_macro == doctest::Approx(0.25));  // 0/0 counts as 0
}

TEST_CASE("parameter grids") {
    const auto g = param_grid({{"a", {"1", "2"}}, {"b", {"x", "y", "z"}}});
    REQUIRE(g.size() == 6);
    CHECK(g[0].fingerprint() == "a=1;b=x");
    CHECK(g[1].fingerprint() == "a=1;b=y");
    CHECK(g[3].fingerprint() == "a=2;b=x");
    CHECK(format_param(0.001) == "0.001");
    CHECK(format_param(100.0) == "100");
    ParamSet p;
    p.set("alpha", 0.5).set("k", std::size_t{3}).set("on", "true");
    CHECK(p.get_double("alpha") == 0.5);
    CHECK(p.get_size("k") == 3);
    CHECK(p.get_bool("on"));
    CHECK_THROWS_AS(p.get("missing"), ConfigError);
}

namespace {

// Ridge on the first feature column.
class ToyRidge : public FittedModel {
public:
    ToyRidge(const Cohort& c, Target t, std::span<const Index> rows, double alpha, bool leak)
        : hash_(index_set_hash(rows)) {
        if (leak) {
            IndexList all(c.n());
            std::iota(all.begin(), all.end(), 0);
            hash_ = index_set_hash(all);
        }
        model_ = fit_ridge(design(c, rows), Eigen::Map<const Eigen::VectorXd>(c.target(t, rows).data(),
                                                                                static_cast<Eigen::Index>(rows.size())),
                           alpha);
    }
    std::vector<double> predict(const Cohort& c, std::span<const Index> rows) const override {
        const Eigen::VectorXd p = predict_ridge(model_, design(c, rows));
        return {p.data(), p.data() + p.size()};
    }
    std::uint64_t fit_hash() const override { return hash_; }

private:
    static Eigen::MatrixXd design(const Cohort& c, std::span<const Index> rows) {
        const auto col = c.column(c.feature_names()[0], rows);
        Eigen::MatrixXd H(rows.size(), 1);
        for (std::size_t i = 0; i < rows.size(); ++i) H(static_cast<Eigen::Index>(i), 0) = *col[i];
        return H;
    }
    std::uint64_t hash_;
    RidgeModel model_;
};

Cohort linear_cohort(std::size_t n) {
    std::vector<SubjectRecord> subjects(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i % 17) - 8.0;
        subjects[i].condition = i % 2 ? Condition::CS : Condition::Sham;
        subjects[i].features = {x};
        subjects[i].weight_mg = 40.0 + 3.0 * x;
    }
    return Cohort({"crp"}, subjects);
}

FitFunction toy_fit(bool leak = false) {
    return [leak](const Cohort& c, Target t, std::span<const Index> rows, const ParamSet& p, std::uint64_t,
                  unsigned) -> std::unique_ptr<FittedModel> {
        return std::make_unique<ToyRidge>(c, t, rows, p.get_double("alpha"), leak);
    };
}

}  // namespace

TEST_CASE("grid search") {
    const auto c = linear_cohort(50);
    const auto plan = make_split_plan(c, 0.2, 5, 1, 2);

    SUBCASE("small alpha beats large alpha on noise-free linear data") {
        const auto grid = param_grid({{"alpha", {"1000", "1e-06"}}});
        LeakageAudit audit;
        GridSearchOptions opt;
        opt.audit = &audit;
        const auto r = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, toy_fit(), opt);
        CHECK(r.best_row().params.get("alpha") == "1e-06");
        CHECK(r.table[0].mean_rmse > r.table[1].mean_rmse);
        CHECK(r.table[1].rank == 1);
        CHECK(audit.checks() == 2 * 5 + 1);
        CHECK(audit.violations().empty());
        CHECK(r.model->fit_hash() == plan.train_hash());
    }
    SUBCASE("a single config is selected") {
        const auto grid = param_grid({{"alpha", {"5"}}});
        const auto r = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, toy_fit(), {});
        CHECK(r.best == 0);
    }
    SUBCASE("ties go to grid order") {
        ParamSet a, b;
        a.set("alpha", "1").set("tag", "first");
        b.set("alpha", "1").set("tag", "second");
        const auto r = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, {a, b}, toy_fit(), {});
        CHECK(r.best_row().params.get("tag") == "first");
    }
    SUBCASE("fits on all rows are reported as leakage") {
        const auto grid = param_grid({{"alpha", {"1"}}});
        LeakageAudit audit;
        GridSearchOptions opt;
        opt.audit = &audit;
        grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, toy_fit(true), opt);
        CHECK(audit.violations().size() == 6);
    }
    SUBCASE("serial and threaded searches agree") {
        const auto grid = param_grid({{"alpha", {"0.1", "1", "10"}}});
        GridSearchOptions serial, threaded;
        threaded.jobs = 3;
        const auto a = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, toy_fit(), serial);
        const auto b = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, toy_fit(), threaded);
        for (std::size_t i = 0; i < 3; ++i) CHECK(a.table[i].fold_rmse == b.table[i].fold_rmse);
    }
    SUBCASE("configs that throw are excluded") {
        FitFunction flaky = [](const Cohort& c, Target t, std::span<const Index> rows, const ParamSet& p,
                               std::uint64_t s, unsigned j) -> std::unique_ptr<FittedModel> {
            if (p.get("alpha") == "bad") throw FitError("refused");
            return toy_fit()(c, t, rows, p, s, j);
        };
        const auto grid = param_grid({{"alpha", {"bad", "1"}}});
        const auto r = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, flaky, {});
        CHECK(r.best == 1);
        CHECK(r.table[0].rank == 0);
        CHECK_FALSE(r.table[0].error.empty());
        const auto only_bad = param_grid({{"alpha", {"bad"}}});
        CHECK_THROWS_AS(grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, only_bad, flaky, {}), FitError);
    }
    SUBCASE("non-finite scores are excluded") {
        struct NanModel : FittedModel {
            std::uint64_t hash;
            std::vector<double> predict(const Cohort&, std::span<const Index> rows) const override {
                return std::vector<double>(rows.size(), std::nan(""));
            }
            std::uint64_t fit_hash() const override { return hash; }
        };
        FitFunction nan_fit = [](const Cohort& c, Target t, std::span<const Index> rows, const ParamSet& p,
                                 std::uint64_t s, unsigned j) -> std::unique_ptr<FittedModel> {
            if (p.get("alpha") != "nan") return toy_fit()(c, t, rows, p, s, j);
            auto m = std::make_unique<NanModel>();
            m->hash = index_set_hash(rows);
            return m;
        };
        const auto grid = param_grid({{"alpha", {"nan", "1"}}});
        const auto r = grid_search_cv(c, Target::Weight, plan.train_idx, plan.folds, grid, nan_fit, {});
        CHECK(r.best == 1);
        CHECK(r.table[0].rank == 0);
        CHECK(std::isinf(r.table[0].fold_rmse[0]));
    }
}

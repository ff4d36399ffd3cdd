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

#include "qsb/data.hpp"
#include "qsb/eval.hpp"
#include "qsb/families.hpp"

#include <json.hpp>
#include <string>
#include <vector>

namespace qsb {

struct RunConfig {
    // Cohort source: a CSV file when cohort_path is set, otherwise synthetic.
    std::string cohort_path;
    std::string schema_path;
    std::size_t synthetic_n = 213;
    std::uint64_t synthetic_seed = 7;

    std::vector<Target> targets = {Target::Weight, Target::Force, Target::Quality};
    std::vector<std::string> families;  // empty means every family

    double test_fraction = 0.2;
    std::size_t cv_folds = 5;
    std::uint64_t seed = 42;  // split, CV and model streams derive from this

    ScreeningSpec screening;
    FamilyBudgets budgets;
    FamilyGrids grids;

    std::string out_dir = "qsbench_out";
    bool write_svg = true;
    unsigned jobs = 1;

    std::uint64_t split_seed() const { return derive_seed(seed, 1); }
    std::uint64_t cv_seed() const { return derive_seed(seed, 2); }
    std::uint64_t model_seed() const { return derive_seed(seed, 3); }

    void validate() const;
};

/// Reads an INI-style run configuration. Sections: [cohort], [protocol],
/// [screening], [budget], [families], [linear], [trees], [spd], [quantum],
/// [output]. Unknown keys are rejected.
RunConfig load_run_config(const std::string& path);

Cohort load_or_generate_cohort(const RunConfig& config);

struct ReportRow {
    std::string key;
    std::string group;
    std::string model;
    std::string budget;
    bool ok = true;
    std::string error;
    RegressionMetrics regression;
    ScreeningMetrics screening;
    std::string params;
    double cv_rmse = 0.0;
    std::uint64_t seed = 0;
    std::string notes;
    std::string columns_read;
    double wall_seconds = 0.0;  // reported separately; never part of report.csv
    std::vector<CvRow> cv_table;
    std::string model_dump;
};

struct EvalReport {
    std::string title;
    Target target = Target::Weight;
    std::uint64_t cohort_fingerprint = 0;
    std::uint64_t split_hash = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double y_test_mean = 0.0;
    ScreeningSpec screening;
    std::vector<ReportRow> rows;
    std::size_t leakage_checks = 0;
    std::vector<std::string> leakage_violations;
    std::vector<std::string> budget_violations;
};

/// Evaluates `families` on one stratified split: screening threshold from
/// Sham training targets, grid-search CV on train, a single refit and one
/// test evaluation per family. A family that fails entirely yields a failed
/// row and the run continues.
EvalReport evaluate_families(const RunConfig& config, const Cohort& cohort, Target target,
                             const std::vector<FamilySpec>& families, LeakageAudit* audit = nullptr);

/// Every enabled family, rows in report order.
EvalReport run_benchmark(const RunConfig& config, const Cohort& cohort, Target target, LeakageAudit* audit = nullptr);

/// One row per SPD variant, same split and threshold as run_benchmark.
EvalReport run_ablation(const RunConfig& config, const Cohort& cohort, Target target,
                        const std::vector<SpdVariant>& variants, LeakageAudit* audit = nullptr);

// Report emission ----------------------------------------------------------

std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);
std::string chart_csv(const EvalReport& report);
std::string chart_svg(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Writes report.csv, report.txt, chart.csv, chart.svg (optional),
/// report.json, timings.csv, cv/<family>.csv and models/<family>.txt into
/// `dir`, creating it when needed.
void emit_report(const EvalReport& report, const std::string& dir, bool svg = true);

/// Re-renders the text, CSV and chart files from a saved report.json.
void rerender_report(const std::string& dir, bool svg = true);

}  // namespace qsb

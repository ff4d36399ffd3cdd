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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qsb {

/// Condition indicator. Sham = 0, CS = 1 everywhere.
enum class Condition : int { Sham = 0, CS = 1 };

enum class Target { Weight, Force, Quality };

std::string target_name(Target t);
Target parse_target(const std::string& s);

/// Canonical biomarker columns, in schema order.
const std::vector<std::string>& default_biomarkers();

struct SubjectRecord {
    /// Aligned with Cohort::feature_names; nullopt marks a missing cell.
    std::vector<std::optional<double>> features;
    Condition condition = Condition::Sham;
    std::optional<double> weight_mg;
    std::optional<double> force_mN;
    std::optional<double> quality_mN_per_mg;
};

/// Records which feature columns were read. Attach one to a cohort to
/// audit feature budgets.
class AccessLog {
public:
    void touch(const std::string& column);
    std::set<std::string> columns() const;

private:
    mutable std::mutex mutex_;
    std::set<std::string> columns_;
};

class Cohort {
public:
    Cohort() = default;
    Cohort(std::vector<std::string> feature_names, std::vector<SubjectRecord> subjects);

    std::size_t n() const { return subjects_.size(); }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    const SubjectRecord& operator[](Index i) const { return subjects_.at(i); }

    bool has_feature(const std::string& name) const;
    std::size_t feature_index(const std::string& name) const;

    /// Feature values of `rows`; reading goes through the access log.
    std::vector<std::optional<double>> column(const std::string& name, std::span<const Index> rows) const;
    std::vector<int> conditions(std::span<const Index> rows) const;
    std::vector<int> conditions() const;

    bool has_target(Target t) const;
    /// Throws ConfigError when any requested row lacks the target.
    std::vector<double> target(Target t, std::span<const Index> rows) const;

    void attach_access_log(std::shared_ptr<AccessLog> log) const { access_ = std::move(log); }

    /// Stable digest of the cohort contents.
    std::uint64_t fingerprint() const;

private:
    void validate() const;

    std::vector<std::string> feature_names_;
    std::vector<SubjectRecord> subjects_;
    mutable std::shared_ptr<AccessLog> access_;
};

/// Column layout of an input CSV.
struct ColumnSpec {
    std::string condition_column = "condition";
    std::map<std::string, int> condition_labels = {{"Sham", 0}, {"CS", 1}, {"0", 0}, {"1", 1}};
    std::vector<std::string> feature_columns = default_biomarkers();
    std::string weight_column = "weight_mg";
    std::string force_column = "force_mN";
    std::vector<std::string> target_columns = {"weight_mg", "force_mN"};
    std::map<std::string, std::string> units;
};

/// Parses a `key = value` schema descriptor. Recognized keys live under
/// `[schema]` (condition, features, targets, weight, force) and `[units]`.
ColumnSpec load_schema(const std::string& path);

Cohort load_cohort(const std::string& path, const ColumnSpec& schema = {});
void save_cohort(const Cohort& cohort, const std::string& path);

/// Generator settings for the synthetic stand-in cohort. Biomarker levels are
/// lognormal around per-condition medians; a shared latent inflammation
/// factor correlates them.
struct GenProfile {
    struct Marker {
        std::string name;
        double sham_median;
        double cs_median;
        double log_sd;       // lognormal spread
        double latent_load;  // correlation with the shared inflammation factor
    };
    std::vector<Marker> markers;

    double sham_weight_mean = 47.0;
    double cs_weight_suppression = 6.0;  // CS mean = sham mean - suppression
    double weight_sd = 4.0;
    double weight_latent_effect = 1.2;   // mg per latent SD, negative direction
    double crp_neutrophil_interaction = 1.0;  // mg per unit z_crp * z_neut
    double sham_force_mean = 12500.0;
    double cs_force_mean = 10500.0;
    double force_sd = 2200.0;
    double force_weight_coupling = 120.0;  // mN per mg of weight deviation
    double missing_rate = 0.0;
    double cs_fraction = 0.5;

    static GenProfile defaults();
    GenProfile with_zero_noise() const;
    void validate() const;
};

Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed, const GenProfile& profile = GenProfile::defaults());

struct Fold {
    IndexList train;
    IndexList validation;
};

struct SplitPlan {
    IndexList train_idx;
    IndexList test_idx;
    std::vector<Fold> folds;
    std::uint64_t seed = 0;

    std::uint64_t train_hash() const { return index_set_hash(train_idx); }
    std::uint64_t test_hash() const { return index_set_hash(test_idx); }
};

/// Per-stratum test counts by largest remainder so the total equals
/// round(n * fraction). Index lists come back sorted.
SplitPlan stratified_split(const Cohort& cohort, double test_fraction, std::uint64_t seed);

/// Stratified K-fold over `train_idx`. `conditions` is indexed by cohort row.
std::vector<Fold> kfold_indices(std::span<const Index> train_idx, std::size_t k, std::uint64_t seed,
                                std::span<const int> conditions);

SplitPlan make_split_plan(const Cohort& cohort, double test_fraction, std::size_t k, std::uint64_t split_seed,
                          std::uint64_t cv_seed);

}  // namespace qsb

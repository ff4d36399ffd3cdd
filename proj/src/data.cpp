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

#include "qsb/data.hpp"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace qsb {

std::string target_name(Target t) {
    switch (t) {
        case Target::Weight: return "weight_mg";
        case Target::Force: return "force_mN";
        case Target::Quality: return "quality";
    }
    return "?";
}

Target parse_target(const std::string& s) {
    if (s == "weight_mg" || s == "weight") return Target::Weight;
    if (s == "force_mN" || s == "force") return Target::Force;
    if (s == "quality") return Target::Quality;
    throw ConfigError("unknown target '" + s + "' (expected weight_mg, force_mN or quality)");
}

const std::vector<std::string>& default_biomarkers() {
    static const std::vector<std::string> names = {
        "balf_total", "balf_macrophages", "balf_neutrophils", "balf_lymphocytes", "crp",
        "ox_stress",  "tnfa_mrna",        "vo2",              "activity"};
    return names;
}

void AccessLog::touch(const std::string& column) {
    std::lock_guard lock(mutex_);
    columns_.insert(column);
}

std::set<std::string> AccessLog::columns() const {
    std::lock_guard lock(mutex_);
    return columns_;
}

Cohort::Cohort(std::vector<std::string> feature_names, std::vector<SubjectRecord> subjects)
    : feature_names_(std::move(feature_names)), subjects_(std::move(subjects)) {
    validate();
}

void Cohort::validate() const {
    std::set<std::string> seen;
    for (const auto& f : feature_names_) {
        if (!seen.insert(f).second) throw SchemaError("duplicate feature column '" + f + "'");
    }
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        const auto& s = subjects_[i];
        if (s.features.size() != feature_names_.size())
            throw SchemaError("subject " + std::to_string(i) + " has a different feature set");
        auto c = static_cast<int>(s.condition);
        if (c != 0 && c != 1) throw SchemaError("subject " + std::to_string(i) + " has an invalid condition");
        for (const auto& v : {s.weight_mg, s.force_mN, s.quality_mN_per_mg}) {
            if (v && !std::isfinite(*v)) throw SchemaError("subject " + std::to_string(i) + " has a non-finite target");
        }
        if (s.quality_mN_per_mg && s.weight_mg && s.force_mN) {
            double expect = *s.force_mN / *s.weight_mg;
            if (std::abs(*s.quality_mN_per_mg - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
                throw SchemaError("subject " + std::to_string(i) + " quality disagrees with force / weight");
        }
    }
}

bool Cohort::has_feature(const std::string& name) const {
    return std::find(feature_names_.begin(), feature_names_.end(), name) != feature_names_.end();
}

std::size_t Cohort::feature_index(const std::string& name) const {
    auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
    if (it == feature_names_.end()) throw SchemaError("unknown feature column '" + name + "'");
    return static_cast<std::size_t>(it - feature_names_.begin());
}

std::vector<std::optional<double>> Cohort::column(const std::string& name, std::span<const Index> rows) const {
    const std::size_t j = feature_index(name);
    if (access_) access_->touch(name);
    std::vector<std::optional<double>> out;
    out.reserve(rows.size());
    for (Index r : rows) out.push_back(subjects_.at(r).features[j]);
    return out;
}

std::vector<int> Cohort::conditions(std::span<const Index> rows) const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (Index r : rows) out.push_back(static_cast<int>(subjects_.at(r).condition));
    return out;
}

std::vector<int> Cohort::conditions() const {
    std::vector<int> out;
    out.reserve(subjects_.size());
    for (const auto& s : subjects_) out.push_back(static_cast<int>(s.condition));
    return out;
}

bool Cohort::has_target(Target t) const {
    if (subjects_.empty()) return false;
    return std::all_of(subjects_.begin(), subjects_.end(), [t](const SubjectRecord& s) {
        switch (t) {
            case Target::Weight: return s.weight_mg.has_value();
            case Target::Force: return s.force_mN.has_value();
            case Target::Quality: return s.quality_mN_per_mg.has_value();
        }
        return false;
    });
}

std::vector<double> Cohort::target(Target t, std::span<const Index> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (Index r : rows) {
        const auto& s = subjects_.at(r);
        std::optional<double> v;
        switch (t) {
            case Target::Weight: v = s.weight_mg; break;
            case Target::Force: v = s.force_mN; break;
            case Target::Quality:
                if (!s.weight_mg || !s.force_mN || *s.weight_mg <= 0 || *s.force_mN <= 0)
                    throw ConfigError("quality target needs positive weight and force (row " + std::to_string(r) + ")");
                v = s.quality_mN_per_mg;
                break;
        }
        if (!v) throw ConfigError("target " + target_name(t) + " missing for row " + std::to_string(r));
        out.push_back(*v);
    }
    return out;
}

std::uint64_t Cohort::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& f : feature_names_) os << f << ',';
    os << '\n';
    auto put = [&os](const std::optional<double>& v) {
        if (v) os << *v;
        os << ',';
    };
    for (const auto& s : subjects_) {
        for (const auto& v : s.features) put(v);
        os << static_cast<int>(s.condition) << ',';
        put(s.weight_mg);
        put(s.force_mN);
        os << '\n';
    }
    return string_hash(os.str());
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    boost::split(cells, line, boost::is_any_of(","));
    for (auto& c : cells) boost::trim(c);
    return cells;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    boost::split(out, s, boost::is_any_of(",;"));
    for (auto& c : out) boost::trim(c);
    out.erase(std::remove(out.begin(), out.end(), std::string{}), out.end());
    return out;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line, const std::string& column) {
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        if (!std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("column '" + column + "': cannot parse '" + cell + "' as a number", line);
    }
}

}  // namespace

ColumnSpec load_schema(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(e.message(), e.line());
    }
    ColumnSpec spec;
    spec.condition_column = tree.get("schema.condition", spec.condition_column);
    if (auto f = tree.get_optional<std::string>("schema.features")) spec.feature_columns = split_list(*f);
    if (auto t = tree.get_optional<std::string>("schema.targets")) spec.target_columns = split_list(*t);
    spec.weight_column = tree.get("schema.weight", spec.weight_column);
    spec.force_column = tree.get("schema.force", spec.force_column);
    if (auto labels = tree.get_child_optional("labels")) {
        spec.condition_labels.clear();
        for (const auto& [label, value] : *labels) {
            int code = value.get_value<int>();
            if (code != 0 && code != 1) throw SchemaError("label '" + label + "' must map to 0 or 1");
            spec.condition_labels[label] = code;
        }
    }
    if (auto units = tree.get_child_optional("units")) {
        for (const auto& [col, value] : *units) spec.units[col] = value.get_value<std::string>();
    }
    return spec;
}

Cohort load_cohort(const std::string& path, const ColumnSpec& schema) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cohort file '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        boost::trim(line);
        if (line.empty()) continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw ParseError("missing header row", line_no);

    std::map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!pos.emplace(header[j], j).second) throw SchemaError("duplicate column '" + header[j] + "'");
    }
    if (!pos.count(schema.condition_column))
        throw SchemaError("header lacks condition column '" + schema.condition_column + "'");
    bool any_target = std::any_of(schema.target_columns.begin(), schema.target_columns.end(),
                                  [&](const std::string& t) { return pos.count(t) > 0; });
    if (!any_target) throw SchemaError("header contains no target column");

    std::vector<std::string> features;
    for (const auto& f : schema.feature_columns) {
        if (pos.count(f)) features.push_back(f);
    }
    const bool has_weight = pos.count(schema.weight_column) > 0;
    const bool has_force = pos.count(schema.force_column) > 0;

    std::vector<SubjectRecord> subjects;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (boost::trim_copy(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        SubjectRecord rec;
        const auto& label = cells[pos.at(schema.condition_column)];
        auto it = schema.condition_labels.find(label);
        if (it == schema.condition_labels.end())
            throw SchemaError("line " + std::to_string(line_no) + ": unknown condition label '" + label + "'");
        rec.condition = static_cast<Condition>(it->second);
        for (const auto& f : features) rec.features.push_back(parse_cell(cells[pos.at(f)], line_no, f));
        if (has_weight) rec.weight_mg = parse_cell(cells[pos.at(schema.weight_column)], line_no, schema.weight_column);
        if (has_force) rec.force_mN = parse_cell(cells[pos.at(schema.force_column)], line_no, schema.force_column);
        if (rec.weight_mg && rec.force_mN && *rec.weight_mg > 0) rec.quality_mN_per_mg = *rec.force_mN / *rec.weight_mg;
        subjects.push_back(std::move(rec));
    }
    return Cohort(std::move(features), std::move(subjects));
}

void save_cohort(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write cohort file '" + path + "'");
    out << "condition";
    for (const auto& f : cohort.feature_names()) out << ',' << f;
    out << ",weight_mg,force_mN\n";
    char buf[64];
    auto put = [&](const std::optional<double>& v) {
        out << ',';
        if (v) {
            std::snprintf(buf, sizeof buf, "%.17g", *v);
            out << buf;
        }
    };
    for (const auto& s : cohort.subjects()) {
        out << (s.condition == Condition::Sham ? "Sham" : "CS");
        for (const auto& v : s.features) put(v);
        put(s.weight_mg);
        put(s.force_mN);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic cohort

GenProfile GenProfile::defaults() {
    GenProfile p;
    p.markers = {
        {"balf_total", 3.0e5, 6.0e5, 0.35, 0.7},
        {"balf_macrophages", 2.8e5, 4.5e5, 0.35, 0.5},
        {"balf_neutrophils", 3.0e3, 9.0e3, 0.50, 0.8},
        {"balf_lymphocytes", 2.0e3, 4.0e3, 0.45, 0.5},
        {"crp", 10.0, 20.0, 0.35, 0.7},
        {"ox_stress", 1.0, 1.6, 0.30, 0.4},
        {"tnfa_mrna", 1.0, 2.5, 0.40, 0.6},
        {"vo2", 50.0, 46.0, 0.12, -0.3},
        {"activity", 1000.0, 800.0, 0.30, -0.3},
    };
    return p;
}

GenProfile GenProfile::with_zero_noise() const {
    GenProfile p = *this;
    for (auto& m : p.markers) m.log_sd = 0.0;
    p.weight_sd = 0.0;
    p.weight_latent_effect = 0.0;
    p.force_sd = 0.0;
    return p;
}

void GenProfile::validate() const {
    if (markers.empty()) throw ConfigError("profile has no markers");
    for (const auto& m : markers) {
        if (!(m.sham_median > 0) || !(m.cs_median > 0))
            throw ConfigError("marker '" + m.name + "' needs positive medians");
        if (m.log_sd < 0) throw ConfigError("marker '" + m.name + "' has a negative noise scale");
        if (std::abs(m.latent_load) > 1) throw ConfigError("marker '" + m.name + "' latent load outside [-1, 1]");
    }
    if (!(sham_weight_mean > 0) || !(sham_force_mean > 0) || !(cs_force_mean > 0))
        throw ConfigError("profile target means must be positive");
    if (weight_sd < 0 || force_sd < 0) throw ConfigError("profile target noise scales must be nonnegative");
    if (missing_rate < 0 || missing_rate >= 1) throw ConfigError("missing_rate must lie in [0, 1)");
    if (!(cs_fraction > 0 && cs_fraction < 1)) throw ConfigError("cs_fraction must lie in (0, 1)");
}

Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed, const GenProfile& profile) {
    if (n < 10) throw ConfigError("synthetic cohort needs n >= 10");
    profile.validate();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto n_cs = static_cast<std::size_t>(std::llround(static_cast<double>(n) * profile.cs_fraction));
    std::vector<int> cond(n, 0);
    std::fill(cond.begin() + static_cast<std::ptrdiff_t>(n - n_cs), cond.end(), 1);
    std::shuffle(cond.begin(), cond.end(), rng);

    std::vector<std::string> names;
    std::size_t crp = profile.markers.size(), neut = profile.markers.size();
    for (std::size_t m = 0; m < profile.markers.size(); ++m) {
        names.push_back(profile.markers[m].name);
        if (profile.markers[m].name == "crp") crp = m;
        if (profile.markers[m].name == "balf_neutrophils") neut = m;
    }

    std::vector<SubjectRecord> subjects;
    subjects.reserve(n);
    std::vector<double> log_dev(profile.markers.size());
    for (std::size_t i = 0; i < n; ++i) {
        SubjectRecord rec;
        const int c = cond[i];
        rec.condition = static_cast<Condition>(c);
        const double latent = normal(rng);
        for (std::size_t m = 0; m < profile.markers.size(); ++m) {
            const auto& mk = profile.markers[m];
            const double eps = normal(rng);
            const double z = mk.latent_load * latent + std::sqrt(1.0 - mk.latent_load * mk.latent_load) * eps;
            log_dev[m] = mk.log_sd * z;
            const double median = c == 1 ? mk.cs_median : mk.sham_median;
            rec.features.emplace_back(median * std::exp(log_dev[m]));
        }
        const double e_w = normal(rng);
        const double e_f = normal(rng);

        double interaction = 0.0;
        if (crp < log_dev.size() && neut < log_dev.size()) {
            const double s_crp = profile.markers[crp].log_sd, s_neut = profile.markers[neut].log_sd;
            if (s_crp > 0 && s_neut > 0) interaction = (log_dev[crp] / s_crp) * (log_dev[neut] / s_neut);
        }
        const double weight_mean = profile.sham_weight_mean - profile.cs_weight_suppression * c;
        double weight = weight_mean + profile.weight_sd * e_w - profile.weight_latent_effect * latent -
                        profile.crp_neutrophil_interaction * interaction;
        weight = std::max(weight, 1.0);
        const double force_mean = c == 1 ? profile.cs_force_mean : profile.sham_force_mean;
        double force = force_mean + profile.force_sd * e_f + profile.force_weight_coupling * (weight - weight_mean);
        force = std::max(force, 1.0);
        rec.weight_mg = weight;
        rec.force_mN = force;
        rec.quality_mN_per_mg = force / weight;

        for (auto& f : rec.features) {
            if (unit(rng) < profile.missing_rate) f.reset();
        }
        subjects.push_back(std::move(rec));
    }
    return Cohort(std::move(names), std::move(subjects));
}

// ---------------------------------------------------------------------------
// Splitting

SplitPlan stratified_split(const Cohort& cohort, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0 && test_fraction < 1)) throw SplitError("test fraction must lie in (0, 1)");
    std::array<IndexList, 2> strata;
    for (Index i = 0; i < cohort.n(); ++i) strata[static_cast<int>(cohort[i].condition)].push_back(i);
    for (int s = 0; s < 2; ++s) {
        if (strata[s].size() < 2)
            throw SplitError(std::string("stratum ") + (s == 0 ? "Sham" : "CS") + " has fewer than 2 subjects");
    }

    const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(cohort.n()) * test_fraction));
    std::array<std::size_t, 2> counts{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int s = 0; s < 2; ++s) {
        const double quota = static_cast<double>(strata[s].size()) * test_fraction;
        counts[s] = static_cast<std::size_t>(std::floor(quota));
        remainder[s] = quota - std::floor(quota);
        assigned += counts[s];
    }
    // Largest remainder; ties go to the lower stratum code.
    while (assigned < total) {
        int best = remainder[1] > remainder[0] ? 1 : 0;
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    for (int s = 0; s < 2; ++s) {
        if (counts[s] == 0 || counts[s] >= strata[s].size())
            throw SplitError("test fraction leaves an empty train or test stratum");
    }

    std::mt19937_64 rng(seed);
    SplitPlan plan;
    plan.seed = seed;
    for (int s = 0; s < 2; ++s) {
        IndexList shuffled = strata[s];
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        plan.test_idx.insert(plan.test_idx.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(counts[s]));
        plan.train_idx.insert(plan.train_idx.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(counts[s]), shuffled.end());
    }
    std::sort(plan.test_idx.begin(), plan.test_idx.end());
    std::sort(plan.train_idx.begin(), plan.train_idx.end());
    return plan;
}

std::vector<Fold> kfold_indices(std::span<const Index> train_idx, std::size_t k, std::uint64_t seed,
                                std::span<const int> conditions) {
    if (k < 2) throw SplitError("K-fold needs K >= 2");
    if (k > train_idx.size()) throw SplitError("K exceeds the number of training subjects");

    std::array<IndexList, 2> strata;
    for (Index i : train_idx) {
        if (i >= conditions.size()) throw SplitError("training index outside the condition vector");
        int c = conditions[i];
        if (c != 0 && c != 1) throw SplitError("condition must be 0 or 1");
        strata[c].push_back(i);
    }

    std::mt19937_64 rng(seed);
    std::vector<IndexList> validation(k);
    // Deal shuffled strata round-robin; the second stratum continues where the
    // first stopped so total fold sizes differ by at most one.
    std::size_t offset = 0;
    for (auto& stratum : strata) {
        std::sort(stratum.begin(), stratum.end());
        std::shuffle(stratum.begin(), stratum.end(), rng);
        for (std::size_t j = 0; j < stratum.size(); ++j) validation[(offset + j) % k].push_back(stratum[j]);
        offset = (offset + stratum.size()) % k;
    }

    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(validation[f].begin(), validation[f].end());
        folds[f].validation = validation[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) folds[f].train.insert(folds[f].train.end(), validation[g].begin(), validation[g].end());
        }
        std::sort(folds[f].train.begin(), folds[f].train.end());
    }
    return folds;
}

SplitPlan make_split_plan(const Cohort& cohort, double test_fraction, std::size_t k, std::uint64_t split_seed,
                          std::uint64_t cv_seed) {
    SplitPlan plan = stratified_split(cohort, test_fraction, split_seed);
    auto cond = cohort.conditions();
    plan.folds = kfold_indices(plan.train_idx, k, cv_seed, cond);
    return plan;
}

}  // namespace qsb

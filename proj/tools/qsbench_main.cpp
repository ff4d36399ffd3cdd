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

#include "qsb/bench.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <boost/algorithm/string.hpp>

#include <filesystem>
#include <iostream>

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> targets;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string families;
    std::optional<unsigned> jobs;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "Run configuration (INI)")->check(CLI::ExistingFile);
    app->add_option("--target", f.targets, "weight_mg, force_mN, quality or all")->delimiter(',');
    app->add_option("--seed", f.seed, "Protocol seed (split, folds, models)");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--families", f.families, "Comma-separated family keys");
    app->add_option("--jobs", f.jobs, "Worker threads");
}

qsb::RunConfig resolve(const CommonFlags& f) {
    qsb::RunConfig cfg = f.config.empty() ? qsb::RunConfig{} : qsb::load_run_config(f.config);
    if (!f.targets.empty() && !(f.targets.size() == 1 && f.targets.front() == "all")) {
        cfg.targets.clear();
        for (const auto& t : f.targets) cfg.targets.push_back(qsb::parse_target(t));
    }
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (!f.families.empty()) {
        cfg.families.clear();
        boost::split(cfg.families, f.families, boost::is_any_of(","));
        for (auto& s : cfg.families) boost::trim(s);
    }
    if (f.jobs) cfg.jobs = std::max(1u, *f.jobs);
    cfg.validate();
    return cfg;
}

int summarize(const qsb::EvalReport& rep, const std::string& dir) {
    std::cout << qsb::report_text(rep) << "written to " << dir << "\n\n";
    int status = 0;
    for (const auto& v : rep.leakage_violations) {
        std::cerr << "leakage violation: " << v << '\n';
        status = 3;
    }
    for (const auto& v : rep.budget_violations) {
        std::cerr << "budget violation: " << v << '\n';
        status = 3;
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leakage-safe small-sample regression benchmark"};
    app.require_subcommand(1);

    CommonFlags run_flags, ablate_flags;
    auto* run = app.add_subcommand("run", "Run every enabled model family for the selected targets");
    add_common(run, run_flags);

    auto* ablate = app.add_subcommand("ablate", "Run the SPD ablation grid");
    add_common(ablate, ablate_flags);

    std::size_t synth_n = 213;
    std::uint64_t synth_seed = 7;
    double missing_rate = 0.0;
    std::string synth_out = "cohort.csv";
    auto* synth = app.add_subcommand("synth", "Generate and save a synthetic cohort");
    synth->add_option("--n", synth_n, "Number of subjects");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--missing-rate", missing_rate, "Fraction of biomarker cells left empty");
    synth->add_option("--out", synth_out, "Output CSV path");

    std::string report_dir;
    bool report_svg = true;
    auto* report = app.add_subcommand("report", "Re-render tables and charts from saved results");
    report->add_option("--out", report_dir, "Directory holding report.json (or per-target subdirectories)")->required();
    report->add_flag("!--no-svg", report_svg, "Skip the SVG chart");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = resolve(run_flags);
            const auto cohort = qsb::load_or_generate_cohort(cfg);
            int status = 0;
            for (auto t : cfg.targets) {
                const auto rep = qsb::run_benchmark(cfg, cohort, t);
                const auto dir = (std::filesystem::path(cfg.out_dir) / qsb::target_name(t)).string();
                qsb::emit_report(rep, dir, cfg.write_svg);
                status = std::max(status, summarize(rep, dir));
            }
            return status;
        }
        if (ablate->parsed()) {
            auto flags = ablate_flags;
            if (flags.targets.empty()) flags.targets = {"weight_mg"};
            const auto cfg = resolve(flags);
            const auto cohort = qsb::load_or_generate_cohort(cfg);
            int status = 0;
            for (auto t : cfg.targets) {
                const auto rep = qsb::run_ablation(cfg, cohort, t, qsb::default_spd_ablation(cfg.grids));
                const auto dir = (std::filesystem::path(cfg.out_dir) / ("ablation_" + qsb::target_name(t))).string();
                qsb::emit_report(rep, dir, cfg.write_svg);
                status = std::max(status, summarize(rep, dir));
            }
            return status;
        }
        if (synth->parsed()) {
            auto profile = qsb::GenProfile::defaults();
            profile.missing_rate = missing_rate;
            const auto cohort = qsb::generate_synthetic_cohort(synth_n, synth_seed, profile);
            qsb::save_cohort(cohort, synth_out);
            std::cout << fmt::format("wrote {} subjects to {}\n", cohort.n(), synth_out);
            return 0;
        }
        if (report->parsed()) {
            namespace fs = std::filesystem;
            std::vector<fs::path> dirs;
            if (fs::exists(fs::path(report_dir) / "report.json")) {
                dirs.emplace_back(report_dir);
            } else if (fs::is_directory(report_dir)) {
                for (const auto& e : fs::directory_iterator(report_dir))
                    if (e.is_directory() && fs::exists(e.path() / "report.json")) dirs.push_back(e.path());
                std::sort(dirs.begin(), dirs.end());
            }
            if (dirs.empty()) throw qsb::ConfigError("no saved reports under '" + report_dir + "'");
            for (const auto& d : dirs) {
                qsb::rerender_report(d.string(), report_svg);
                std::cout << "re-rendered " << d.string() << '\n';
            }
            return 0;
        }
    } catch (const qsb::Error& e) {
        std::cerr << "qsbench: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "qsbench: internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

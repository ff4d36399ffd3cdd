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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "qsb/bench.hpp"
#include "qsb/linmodels.hpp"
#include "qsb/preprocess.hpp"
#include "qsb/qkernel.hpp"
#include "qsb/spd.hpp"
#include "oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

using namespace qsb;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs >= budget_s) {
        out.pass = false;
        out.detail += fmt::format("; over the {}s budget", budget_s);
    }
    if (!out.pass) ++failures;
    std::cout << fmt::format("{} criterion {}: {} ({}; {:.2f}s)", out.pass ? "PASS" : "FAIL", id, name, out.detail,
                             secs)
              << std::endl;
}

Eigen::MatrixXd random_angles(std::size_t n, std::size_t q, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-pi / 2, pi / 2);
    Eigen::MatrixXd T(n, q);
    for (Eigen::Index i = 0; i < T.rows(); ++i)
        for (Eigen::Index j = 0; j < T.cols(); ++j) T(i, j) = u(rng);
    return T;
}

FeatureMapConfig map_cfg(std::size_t q, std::size_t layers, double scale = 1.0) {
    FeatureMapConfig c;
    c.qubits = q;
    c.layers = layers;
    c.angle_scale = scale;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Relative paths of every report file under `root` except timings.
std::set<std::string> report_files(const fs::path& root) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "timings.csv") continue;
        out.insert(fs::relative(e.path(), root).generic_string());
    }
    return out;
}

struct FullRun {
    double seconds = 0.0;
    std::vector<EvalReport> reports;
    std::size_t audit_checks = 0;
    std::vector<std::string> audit_violations;
};

FullRun full_default_run(unsigned jobs, const fs::path& out) {
    RunConfig cfg;
    cfg.jobs = jobs;
    fs::remove_all(out);
    FullRun run;
    LeakageAudit audit;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cohort = load_or_generate_cohort(cfg);
    for (auto t : cfg.targets) {
        run.reports.push_back(run_benchmark(cfg, cohort, t, &audit));
        emit_report(run.reports.back(), (out / target_name(t)).string(), cfg.write_svg);
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.audit_checks = audit.checks();
    run.audit_violations = audit.violations();
    return run;
}

}  // namespace

int main() {
    criterion(1, "Stein divergence oracle", 1.0, [] {
        const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
        const double err0 = std::abs(stein_divergence(I, 3 * I) - std::log(4.0 / 3.0));
        std::mt19937_64 rng(101);
        std::uniform_int_distribution<std::size_t> pd(1, 6);
        double sym = 0.0, self = 0.0;
        for (int t = 0; t < 200; ++t) {
            const auto p = pd(rng);
            const auto A = oracle::random_spd(p, rng), B = oracle::random_spd(p, rng);
            sym = std::max(sym, std::abs(stein_divergence(A, B) - stein_divergence(B, A)));
            self = std::max(self, std::abs(stein_divergence(A, A)));
        }
        return Outcome{err0 <= 1e-12 && sym <= 1e-10 && self <= 1e-10,
                       fmt::format("|D(I,3I)-ln(4/3)|={:.2e}, max asymmetry {:.2e}, max |D(A,A)| {:.2e}", err0, sym,
                                   self)};
    });

    criterion(2, "single-qubit kernel closed form", 1.0, [] {
        double worst = 0.0;
        Eigen::VectorXd a(1), b(1);
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 50; ++j) {
                a << -pi + 2 * pi * i / 49.0;
                b << -pi + 2 * pi * j / 49.0;
                const double c = std::cos((a(0) - b(0)) / 2);
                worst = std::max(worst, std::abs(fidelity_kernel(a, b, map_cfg(1, 1)) - c * c));
            }
        return Outcome{worst <= 1e-12, fmt::format("max deviation {:.2e} over 2500 pairs", worst)};
    });

    criterion(3, "fidelity Gram matrices are PSD", 10.0, [] {
        std::mt19937_64 rng(103);
        double worst = std::numeric_limits<double>::infinity();
        for (int t = 0; t < 20; ++t) {
            const std::size_t L = 1 + static_cast<std::size_t>(t % 3);
            const auto g = gram_matrix(random_angles(40, 4, rng), map_cfg(4, L));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.K);
            worst = std::min(worst, es.eigenvalues().minCoeff());
        }
        return Outcome{worst >= -1e-8, fmt::format("smallest eigenvalue {:.3e} over 20 Grams", worst)};
    });

    criterion(4, "Nystrom identity at m = n", 5.0, [] {
        std::mt19937_64 rng(104);
        const Eigen::MatrixXd T = random_angles(20, 4, rng), Tt = random_angles(10, 4, rng);
        std::normal_distribution<double> g;
        Eigen::VectorXd y(20);
        for (auto& v : y) v = g(rng);
        double worst = 0.0;
        for (double lambda : {1e-3, 1e-1}) {
            QKFConfig cfg;
            cfg.map = map_cfg(4, 2);
            cfg.whiten = true;
            cfg.lambda = lambda;
            cfg.head_intercept = false;
            const auto qkf = qkf_fit_with_centers(T, y, T, cfg);
            const auto states = build_states(T, cfg.map);
            const auto qkr = qkr_fit(gram_from_states(states), y, lambda);
            const Eigen::VectorXd full = qkr_predict(qkr, cross_kernel(build_states(Tt, cfg.map), states));
            worst = std::max(worst, (qkf_predict(qkf, Tt) - full).cwiseAbs().maxCoeff());
        }
        return Outcome{worst <= 1e-6, fmt::format("max |QKF - QKR| {:.2e}", worst)};
    });

    criterion(5, "PAM reaches the exhaustive optimum on small pools", 30.0, [] {
        std::mt19937_64 rng(105);
        std::uniform_int_distribution<std::size_t> md(2, 8), pd(2, 4);
        std::size_t misses = 0;
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const std::size_t m = md(rng), p = pd(rng);
            std::vector<SPDDescriptor> pool(m);
            for (auto& d : pool) d.matrix = oracle::random_spd(p, rng);
            const auto D = divergence_matrix(pool);
            for (std::size_t k = 1; k <= m; ++k) {
                const double got = pam_medoids(D, k).objective, best = oracle::best_medoid_objective(D, k);
                const double gap = got - best;
                worst = std::max(worst, gap);
                if (gap > 1e-12 * std::max(1.0, best)) ++misses;
            }
        }
        return Outcome{misses == 0, fmt::format("{} (pool, K) cases above the optimum, largest gap {:.3e}", misses,
                                                worst)};
    });

    criterion(6, "midrank ROC-AUC equals pair counting", 5.0, [] {
        std::mt19937_64 rng(106);
        std::uniform_int_distribution<int> nd(2, 60), sd(0, 7), bd(0, 1);
        std::size_t mismatches = 0;
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
            if (roc_auc(s, y) != oracle::auc_pairs(s, y)) ++mismatches;
        }
        return Outcome{mismatches == 0, fmt::format("{} mismatches in 200 tied score sets", mismatches)};
    });

    criterion(7, "ridge closed form", 0.0, [] {
        std::mt19937_64 rng(107);
        std::uniform_int_distribution<int> nd(4, 40), pd(1, 10);
        std::uniform_real_distribution<double> ad(-4, 4);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const int n = nd(rng), p = pd(rng);
            Eigen::MatrixXd H(n, p);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < p; ++j) H(i, j) = g(rng);
                y(i) = g(rng);
            }
            const double alpha = std::pow(10.0, ad(rng));
            const auto m = fit_ridge(H, y, alpha);
            Eigen::VectorXd w;
            double b;
            oracle::dense_ridge(H, y, alpha, w, b);
            Eigen::VectorXd mine(p + 1), ref(p + 1);
            mine << m.weights, m.intercept;
            ref << w, b;
            worst = std::max(worst, (mine - ref).norm() / std::max(ref.norm(), 1e-300));
        }
        Eigen::MatrixXd H(3, 1);
        H << 0, 1, 2;
        const auto hand = fit_ridge(H, Eigen::Vector3d(0, 1, 2), 2.0);
        const double herr = std::max(std::abs(hand.weights(0) - 0.5), std::abs(hand.intercept - 0.5));
        return Outcome{worst <= 1e-8 && herr <= 1e-12,
                       fmt::format("max relative error {:.2e}; hand example error {:.2e}", worst, herr)};
    });

    criterion(8, "Yeo-Johnson branches and lambda MLE", 0.0, [] {
        double ident = 0.0;
        for (double x = -3.0; x <= 3.0; x += 0.125) ident = std::max(ident, std::abs(yj_transform(x, 1.0) - x));
        double logb = 0.0;
        for (double x = 0.0; x <= 5.0; x += 0.125)
            logb = std::max(logb, std::abs(yj_transform(x, 0.0) - std::log1p(x)));
        std::mt19937_64 rng(500);
        std::normal_distribution<double> g;
        std::vector<double> normal(500), lognormal(500);
        for (auto& v : normal) v = g(rng);
        for (auto& v : lognormal) v = std::exp(g(rng)) - 1.0;
        const double l1 = estimate_yj_lambda(normal).lambda, l0 = estimate_yj_lambda(lognormal).lambda;
        const bool ok = ident <= 1e-12 && logb <= 1e-12 && std::abs(l1 - 1.0) <= 0.3 && std::abs(l0) <= 0.3;
        return Outcome{ok, fmt::format("identity err {:.1e}, log err {:.1e}, lambda(normal)={:.4f}, "
                                       "lambda(lognormal)={:.4f}",
                                       ident, logb, l1, l0)};
    });

    criterion(9, "parameter-shift gradients match finite differences", 10.0, [] {
        std::mt19937_64 rng(109);
        std::uniform_int_distribution<std::size_t> qd(1, 4), ld(1, 3), vd(1, 3);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            VQRConfig cfg;
            cfg.map = map_cfg(qd(rng), ld(rng));
            cfg.var_layers = vd(rng);
            cfg.seed = static_cast<std::uint64_t>(t);
            const std::size_t q = cfg.map.qubits;
            const Eigen::MatrixXd T = random_angles(8, q, rng);
            Eigen::VectorXd y(8), hw(q);
            for (auto& v : y) v = g(rng);
            for (auto& v : hw) v = g(rng);
            const double hb = g(rng);
            const Eigen::MatrixXd W = vqr_initial_weights(cfg);
            const Eigen::MatrixXd G = vqr_loss_gradient(T, y, W, hw, hb, cfg);
            Eigen::MatrixXd F(W.rows(), W.cols());
            const double h = 1e-5;
            for (Eigen::Index l = 0; l < W.rows(); ++l)
                for (Eigen::Index k = 0; k < W.cols(); ++k) {
                    Eigen::MatrixXd Wp = W, Wm = W;
                    Wp(l, k) += h;
                    Wm(l, k) -= h;
                    F(l, k) = (vqr_loss(T, y, Wp, hw, hb, cfg) - vqr_loss(T, y, Wm, hw, hb, cfg)) / (2 * h);
                }
            worst = std::max(worst, (G - F).norm() / std::max(F.norm(), 1e-12));
        }
        return Outcome{worst <= 1e-4, fmt::format("max relative gradient error {:.2e} over 20 circuits", worst)};
    });

    criterion(11, "stratified split and folds", 0.0, [] {
        RunConfig cfg;
        const auto cohort = load_or_generate_cohort(cfg);
        const auto plan = make_split_plan(cohort, 0.2, 5, cfg.split_seed(), cfg.cv_seed());
        const auto cond = cohort.conditions();
        std::vector<std::string> problems;
        if (cohort.n() != 213) problems.push_back("cohort size");
        if (plan.test_idx.size() != 43) problems.push_back(fmt::format("test size {}", plan.test_idx.size()));
        std::set<Index> test(plan.test_idx.begin(), plan.test_idx.end()), seen;
        for (auto i : plan.train_idx)
            if (test.count(i)) problems.push_back("train/test overlap");
        if (plan.folds.size() != 5) problems.push_back("fold count");
        std::size_t lo_cs = SIZE_MAX, hi_cs = 0, lo_n = SIZE_MAX, hi_n = 0;
        for (const auto& f : plan.folds) {
            std::size_t cs = 0;
            for (auto i : f.validation) {
                if (!seen.insert(i).second) problems.push_back("validation overlap");
                if (test.count(i)) problems.push_back("test row in validation");
                cs += static_cast<std::size_t>(cond[i]);
            }
            IndexList expect;
            std::set<Index> val(f.validation.begin(), f.validation.end());
            for (auto i : plan.train_idx)
                if (!val.count(i)) expect.push_back(i);
            IndexList got = f.train;
            std::sort(got.begin(), got.end());
            if (got != expect) problems.push_back("fold train is not train minus validation");
            lo_cs = std::min(lo_cs, cs);
            hi_cs = std::max(hi_cs, cs);
            lo_n = std::min(lo_n, f.validation.size() - cs);
            hi_n = std::max(hi_n, f.validation.size() - cs);
        }
        if (seen != std::set<Index>(plan.train_idx.begin(), plan.train_idx.end()))
            problems.push_back("validation union differs from train");
        if (hi_cs - lo_cs > 1 || hi_n - lo_n > 1) problems.push_back("folds not stratified");
        std::string detail = fmt::format("n_test={}, n_train={}, folds partition train with CS counts {}..{}",
                                         plan.test_idx.size(), plan.train_idx.size(), lo_cs, hi_cs);
        for (const auto& p : problems) detail += "; " + p;
        return Outcome{problems.empty(), detail};
    });

    criterion(13, "condition means beat the global mean on weight", 0.0, [] {
        std::string detail;
        bool ok = true;
        for (std::uint64_t s : {1u, 2u, 3u}) {
            RunConfig cfg;
            cfg.seed = 42 + s;
            cfg.synthetic_seed = 7 + s;
            cfg.families = {"global_mean", "condition_means"};
            const auto rep = run_benchmark(cfg, load_or_generate_cohort(cfg), Target::Weight);
            const double g = rep.rows.at(0).regression.r2, c = rep.rows.at(1).regression.r2;
            ok = ok && rep.rows[0].key == "global_mean" && g <= 0.0 && c > 0.0;
            detail += fmt::format("{}seed {}: R2 global {:.4f}, condition {:.4f}", detail.empty() ? "" : "; ",
                                  cfg.seed, g, c);
        }
        return Outcome{ok, detail};
    });

    // The full default benchmark: two threaded runs and one serial run.
    const fs::path root = fs::temp_directory_path() / "qsbench_acceptance";
    const unsigned threads = std::max(4u, std::thread::hardware_concurrency());
    FullRun par_a, par_b, serial;
    std::string run_error;
    try {
        par_a = full_default_run(threads, root / "parallel_a");
        par_b = full_default_run(threads, root / "parallel_b");
        serial = full_default_run(1, root / "serial");
    } catch (const std::exception& e) {
        run_error = e.what();
    }

    criterion(10, "leakage audit over the full default run", 0.0, [&] {
        if (!run_error.empty()) return Outcome{false, "benchmark failed: " + run_error};
        std::size_t expected = 0;
        for (const auto& rep : par_a.reports)
            for (const auto& row : rep.rows) {
                if (!row.ok) continue;
                for (const auto& cv : row.cv_table)
                    for (double v : cv.fold_rmse) expected += std::isnan(v) ? 0 : 1;
                expected += 1;
            }
        std::size_t row_checks = 0;
        for (const auto& rep : par_a.reports) row_checks += rep.leakage_checks;
        const bool ok = par_a.audit_violations.empty() && par_a.audit_checks == expected && row_checks == expected &&
                        expected > 0;
        return Outcome{ok, fmt::format("{} fits checked (expected {}), {} violations", par_a.audit_checks, expected,
                                       par_a.audit_violations.size())};
    });

    criterion(12, "full benchmark is deterministic and fast enough", 0.0, [&] {
        if (!run_error.empty()) return Outcome{false, "benchmark failed: " + run_error};
        std::vector<std::string> problems;
        std::size_t rows = 0, failed_rows = 0;
        for (const auto& rep : par_a.reports) {
            rows += rep.rows.size();
            for (const auto& r : rep.rows) failed_rows += r.ok ? 0 : 1;
        }
        if (rows != 3 * family_order().size()) problems.push_back(fmt::format("{} rows", rows));
        if (failed_rows) problems.push_back(fmt::format("{} failed rows", failed_rows));
        const auto files = report_files(root / "parallel_a");
        if (report_files(root / "parallel_b") != files || report_files(root / "serial") != files)
            problems.push_back("file sets differ");
        std::size_t differing = 0;
        for (const auto& f : files) {
            const auto a = slurp(root / "parallel_a" / f);
            if (a != slurp(root / "parallel_b" / f) || a != slurp(root / "serial" / f)) {
                ++differing;
                problems.push_back("differs: " + f);
            }
        }
        if (par_a.seconds >= 600.0) problems.push_back("threaded run over 10 minutes");
        std::string detail = fmt::format("{} files compared, {} differ; wall time threaded {:.1f}s / {:.1f}s with "
                                         "{} threads, serial {:.1f}s",
                                         files.size(), differing, par_a.seconds, par_b.seconds, threads,
                                         serial.seconds);
        for (const auto& p : problems) detail += "; " + p;
        return Outcome{problems.empty(), detail};
    });

    std::cout << (failures ? fmt::format("{} criteria failed", failures) : std::string("all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}

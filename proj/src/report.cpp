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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace qsb {

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return fmt::format("{}", v); }

std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "--";
    return fmt::format("{:.{}f}", v, digits);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string row_label(const ReportRow& r) { return r.group + ": " + r.model; }

nlohmann::json number_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double json_number(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string report_csv(const EvalReport& rep) {
    std::ostringstream os;
    os << "key,group,model,budget,status,rmse,pct_rmse,mae,pct_mae,r2,roc_auc,f1_macro,f1_weighted,precision_macro,"
          "recall_macro,balanced_accuracy,cv_rmse,params,seed,split_hash,tau,notes,columns_read,error\n";
    for (const auto& r : rep.rows) {
        const auto& g = r.regression;
        const auto& s = r.screening;
        os << csv_field(r.key) << ',' << csv_field(r.group) << ',' << csv_field(r.model) << ',' << r.budget << ','
           << (r.ok ? "ok" : "failed");
        if (r.ok) {
            for (double v : {g.rmse, g.pct_rmse, g.mae, g.pct_mae, g.r2, s.roc_auc, s.f1_macro, s.f1_weighted,
                             s.precision_macro, s.recall_macro, s.balanced_accuracy, r.cv_rmse})
                os << ',' << num(v);
        } else {
            for (int i = 0; i < 12; ++i) os << ',';
        }
        os << ',' << csv_field(r.params) << ',' << hex64(r.seed) << ',' << hex64(rep.split_hash) << ','
           << num(rep.screening.tau) << ',' << csv_field(r.notes) << ',' << csv_field(r.columns_read) << ','
           << csv_field(r.error) << '\n';
    }
    return os.str();
}

std::string report_text(const EvalReport& rep) {
    std::ostringstream os;
    os << rep.title << '\n';
    os << fmt::format("train {} / test {}, split {}, cohort {}\n", rep.n_train, rep.n_test, hex64(rep.split_hash),
                      hex64(rep.cohort_fingerprint));
    os << fmt::format("screening: tau = {:.4f} ({} x {} of Sham training targets), positive class {}\n",
                      rep.screening.tau, fmt::format("{}", rep.screening.kappa),
                      rep.screening.statistic == ScreeningStatistic::Mean ? "mean" : "median",
                      rep.screening.positive == PositiveClass::Low ? "low" : "high");
    os << fmt::format("leakage audit: {} fits checked, {} violations; budget violations: {}\n\n", rep.leakage_checks,
                      rep.leakage_violations.size(), rep.budget_violations.size());

    std::size_t w = 5;
    for (const auto& r : rep.rows) w = std::max(w, r.model.size() + 2);
    const std::string header = fmt::format("{:<{}} {:>12} {:>8} {:>12} {:>8} {:>8}  {}", "Model", w, "RMSE", "%RMSE",
                                           "MAE", "R2", "ROC-AUC", "selected");
    os << header << '\n' << std::string(header.size(), '-') << '\n';
    std::string group;
    for (const auto& r : rep.rows) {
        if (r.group != group) {
            if (!group.empty()) os << '\n';
            group = r.group;
            os << "[" << group << "]\n";
        }
        if (!r.ok) {
            os << fmt::format("  {:<{}} failed: {}\n", r.model, w - 2, r.error);
            continue;
        }
        os << fmt::format("  {:<{}} {:>12} {:>8} {:>12} {:>8} {:>8}  {}\n", r.model, w - 2,
                          fixed(r.regression.rmse, 4), fixed(r.regression.pct_rmse, 2), fixed(r.regression.mae, 4),
                          fixed(r.regression.r2, 4), fixed(r.screening.roc_auc, 4),
                          r.params.empty() ? "-" : r.params);
    }
    return os.str();
}

std::string chart_csv(const EvalReport& rep) {
    std::ostringstream os;
    os << "model,rmse,roc_auc\n";
    for (const auto& r : rep.rows) {
        if (!r.ok) continue;
        os << csv_field(row_label(r)) << ',' << num(r.regression.rmse) << ',' << num(r.screening.roc_auc) << '\n';
    }
    return os.str();
}

std::string chart_svg(const EvalReport& rep) {
    std::vector<const ReportRow*> rows;
    for (const auto& r : rep.rows)
        if (r.ok) rows.push_back(&r);
    const int label_w = 430, bar_w = 380, row_h = 20, top = 50, gap = 40, value_w = 90;
    const int panel_h = static_cast<int>(rows.size()) * row_h;
    const int width = label_w + bar_w + value_w, height = top + 2 * panel_h + gap + 40;

    double max_rmse = 0.0;
    for (const auto* r : rows) max_rmse = std::max(max_rmse, r->regression.rmse);
    if (!(max_rmse > 0)) max_rmse = 1.0;

    std::ostringstream os;
    os << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
                      "font-size=\"12\">\n",
                      width, height);
    os << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
    os << fmt::format("<text x=\"10\" y=\"22\" font-size=\"15\">{}</text>\n", xml_escape(rep.title));

    auto panel = [&](int y0, const std::string& title, auto value, double vmax, const char* colour) {
        os << fmt::format("<text x=\"10\" y=\"{}\" font-weight=\"bold\">{}</text>\n", y0 - 6, xml_escape(title));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double v = value(*rows[i]);
            const int y = y0 + static_cast<int>(i) * row_h;
            const double len = std::isfinite(v) ? std::clamp(v / vmax, 0.0, 1.0) * bar_w : 0.0;
            os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", label_w - 6, y + 14,
                              xml_escape(row_label(*rows[i])));
            os << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.2f}\" height=\"{}\" fill=\"{}\"/>\n", label_w, y + 3,
                              len, row_h - 6, colour);
            os << fmt::format("<text x=\"{:.2f}\" y=\"{}\">{}</text>\n", label_w + len + 4, y + 14, fixed(v, 4));
        }
    };
    panel(top, "Test RMSE", [](const ReportRow& r) { return r.regression.rmse; }, max_rmse, "#4c72b0");
    panel(top + panel_h + gap, "Test ROC-AUC", [](const ReportRow& r) { return r.screening.roc_auc; }, 1.0, "#dd8452");
    os << "</svg>\n";
    return os.str();
}

nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["title"] = rep.title;
    j["target"] = target_name(rep.target);
    j["cohort_fingerprint"] = hex64(rep.cohort_fingerprint);
    j["split_hash"] = hex64(rep.split_hash);
    j["n_train"] = rep.n_train;
    j["n_test"] = rep.n_test;
    j["y_test_mean"] = number_json(rep.y_test_mean);
    j["screening"] = {{"kappa", rep.screening.kappa},
                      {"statistic", rep.screening.statistic == ScreeningStatistic::Mean ? "mean" : "median"},
                      {"positive", rep.screening.positive == PositiveClass::Low ? "low" : "high"},
                      {"tau", rep.screening.tau}};
    j["leakage_checks"] = rep.leakage_checks;
    j["leakage_violations"] = rep.leakage_violations;
    j["budget_violations"] = rep.budget_violations;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        const auto& g = r.regression;
        const auto& s = r.screening;
        j["rows"].push_back({{"key", r.key},
                             {"group", r.group},
                             {"model", r.model},
                             {"budget", r.budget},
                             {"ok", r.ok},
                             {"error", r.error},
                             {"rmse", number_json(g.rmse)},
                             {"mae", number_json(g.mae)},
                             {"r2", number_json(g.r2)},
                             {"pct_rmse", number_json(g.pct_rmse)},
                             {"pct_mae", number_json(g.pct_mae)},
                             {"roc_auc", number_json(s.roc_auc)},
                             {"auc_note", s.auc_note},
                             {"f1_macro", number_json(s.f1_macro)},
                             {"f1_weighted", number_json(s.f1_weighted)},
                             {"precision_macro", number_json(s.precision_macro)},
                             {"recall_macro", number_json(s.recall_macro)},
                             {"balanced_accuracy", number_json(s.balanced_accuracy)},
                             {"params", r.params},
                             {"cv_rmse", number_json(r.cv_rmse)},
                             {"seed", hex64(r.seed)},
                             {"notes", r.notes},
                             {"columns_read", r.columns_read}});
    }
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport rep;
        rep.title = j.at("title").get<std::string>();
        rep.target = parse_target(j.at("target").get<std::string>());
        rep.cohort_fingerprint = std::stoull(j.at("cohort_fingerprint").get<std::string>(), nullptr, 16);
        rep.split_hash = std::stoull(j.at("split_hash").get<std::string>(), nullptr, 16);
        rep.n_train = j.at("n_train").get<std::size_t>();
        rep.n_test = j.at("n_test").get<std::size_t>();
        rep.y_test_mean = json_number(j.at("y_test_mean"));
        const auto& s = j.at("screening");
        rep.screening.kappa = s.at("kappa").get<double>();
        rep.screening.statistic = s.at("statistic") == "mean" ? ScreeningStatistic::Mean : ScreeningStatistic::Median;
        rep.screening.positive = s.at("positive") == "low" ? PositiveClass::Low : PositiveClass::High;
        rep.screening.tau = s.at("tau").get<double>();
        rep.screening.fitted = true;
        rep.leakage_checks = j.at("leakage_checks").get<std::size_t>();
        rep.leakage_violations = j.at("leakage_violations").get<std::vector<std::string>>();
        rep.budget_violations = j.at("budget_violations").get<std::vector<std::string>>();
        for (const auto& jr : j.at("rows")) {
            ReportRow r;
            r.key = jr.at("key");
            r.group = jr.at("group");
            r.model = jr.at("model");
            r.budget = jr.at("budget");
            r.ok = jr.at("ok");
            r.error = jr.at("error");
            r.regression.rmse = json_number(jr.at("rmse"));
            r.regression.mae = json_number(jr.at("mae"));
            r.regression.r2 = json_number(jr.at("r2"));
            r.regression.pct_rmse = json_number(jr.at("pct_rmse"));
            r.regression.pct_mae = json_number(jr.at("pct_mae"));
            r.screening.roc_auc = json_number(jr.at("roc_auc"));
            r.screening.auc_note = jr.at("auc_note");
            r.screening.f1_macro = json_number(jr.at("f1_macro"));
            r.screening.f1_weighted = json_number(jr.at("f1_weighted"));
            r.screening.precision_macro = json_number(jr.at("precision_macro"));
            r.screening.recall_macro = json_number(jr.at("recall_macro"));
            r.screening.balanced_accuracy = json_number(jr.at("balanced_accuracy"));
            r.params = jr.at("params");
            r.cv_rmse = json_number(jr.at("cv_rmse"));
            r.seed = std::stoull(jr.at("seed").get<std::string>(), nullptr, 16);
            r.notes = jr.at("notes");
            r.columns_read = jr.at("columns_read");
            rep.rows.push_back(std::move(r));
        }
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report.json: ") + e.what());
    }
}

namespace {

void write_rendered(const EvalReport& rep, const fs::path& dir, bool svg) {
    write_file(dir / "report.csv", report_csv(rep));
    write_file(dir / "report.txt", report_text(rep));
    write_file(dir / "chart.csv", chart_csv(rep));
    if (svg) write_file(dir / "chart.svg", chart_svg(rep));
}

}  // namespace

void emit_report(const EvalReport& rep, const std::string& dir, bool svg) {
    if (rep.rows.empty()) throw ConfigError("refusing to emit an empty report");
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root / "cv", ec);
    if (!ec) fs::create_directories(root / "models", ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());

    write_rendered(rep, root, svg);
    write_file(root / "report.json", report_to_json(rep).dump(2) + "\n");

    std::ostringstream timings;
    timings << "key,wall_seconds\n";
    for (const auto& r : rep.rows) {
        timings << r.key << ',' << fmt::format("{:.3f}", r.wall_seconds) << '\n';
        if (!r.cv_table.empty()) {
            GridSearchResult tmp;
            tmp.table = r.cv_table;
            write_cv_table((root / "cv" / (r.key + ".csv")).string(), tmp);
        }
        if (!r.model_dump.empty()) write_file(root / "models" / (r.key + ".txt"), r.model_dump);
    }
    write_file(root / "timings.csv", timings.str());
}

void rerender_report(const std::string& dir, bool svg) {
    const fs::path root(dir);
    std::ifstream in(root / "report.json");
    if (!in) throw ConfigError("no report.json in '" + dir + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report.json: ") + e.what());
    }
    write_rendered(report_from_json(j), root, svg);
}

}  // namespace qsb

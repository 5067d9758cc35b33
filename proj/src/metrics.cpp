#include "rulkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rulkit/errors.hpp"

namespace rulkit {

namespace {

void check_inputs(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) {
        throw UsageError("metrics: truth length " + std::to_string(truth.size()) +
                         " does not match prediction length " + std::to_string(pred.size()));
    }
    if (truth.empty()) {
        throw UsageError("metrics: empty sample set");
    }
}

}  // namespace

double score_s(std::span<const double> truth, std::span<const double> pred,
               const ScoreParams& params) {
    check_inputs(truth, pred);
    if (!(params.a1 > 0.0) || !(params.a2 > 0.0)) {
        throw ConfigError("score: a1 and a2 must be positive");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        if (d < 0.0) {
            s += std::exp(-d / params.a1) - 1.0;
        } else {
            // d == 0 lands here and contributes 0
            s += std::exp(d / params.a2) - 1.0;
        }
    }
    return s;
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
    check_inputs(truth, pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

double mae(std::span<const double> truth, std::span<const double> pred) {
    check_inputs(truth, pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        acc += std::abs(pred[i] - truth[i]);
    }
    return acc / static_cast<double>(truth.size());
}

EvalReport make_report(std::span<const double> truth, std::span<const double> pred,
                       std::size_t histogram_bins, const ScoreParams& params) {
    check_inputs(truth, pred);
    if (histogram_bins == 0) {
        throw UsageError("metrics: histogram needs at least 1 bin");
    }
    EvalReport report;
    report.n = truth.size();
    report.rmse_h = rmse(truth, pred);
    report.mae_h = mae(truth, pred);
    report.score_s = score_s(truth, pred, params);
    report.pairs.reserve(truth.size());

    double max_abs_error = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        report.pairs.emplace_back(truth[i], pred[i]);
        max_abs_error = std::max(max_abs_error, std::abs(pred[i] - truth[i]));
    }

    // Symmetric range around zero; degenerate all-zero errors still get bins.
    const double half = std::max(max_abs_error, 1e-9);
    const double lo = -half;
    const double width = 2.0 * half / static_cast<double>(histogram_bins);
    report.error_histogram.resize(histogram_bins);
    for (std::size_t b = 0; b < histogram_bins; ++b) {
        report.error_histogram[b].lo = lo + width * static_cast<double>(b);
        report.error_histogram[b].hi = lo + width * static_cast<double>(b + 1);
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = pred[i] - truth[i];
        auto b = static_cast<std::size_t>(
            std::clamp((e - lo) / width, 0.0, static_cast<double>(histogram_bins) - 0.5));
        b = std::min(b, histogram_bins - 1);
        report.error_histogram[b].count += 1;
    }
    return report;
}

void write_report_files(const EvalReport& report, const std::string& dir,
                        const std::string& method) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    }

    nlohmann::ordered_json j;
    j["method"] = method;
    j["n"] = report.n;
    j["rmse_h"] = report.rmse_h;
    j["mae_h"] = report.mae_h;
    j["score_s"] = report.score_s;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const HistogramBin& bin : report.error_histogram) {
        hist.push_back({{"bin_lo", bin.lo}, {"bin_hi", bin.hi}, {"count", bin.count}});
    }
    j["error_histogram"] = hist;

    const fs::path base(dir);
    {
        std::ofstream out(base / "report.json");
        if (!out) {
            throw IoError("cannot write " + (base / "report.json").string());
        }
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(base / "pairs.csv");
        if (!out) {
            throw IoError("cannot write " + (base / "pairs.csv").string());
        }
        out << "rul_true_h,rul_pred_h\n";
        char buf[64];
        for (const auto& [t, p] : report.pairs) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", t, p);
            out << buf;
        }
    }
    {
        std::ofstream out(base / "errors_hist.csv");
        if (!out) {
            throw IoError("cannot write " + (base / "errors_hist.csv").string());
        }
        out << "bin_lo,bin_hi,count\n";
        char buf[80];
        for (const HistogramBin& bin : report.error_histogram) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu\n", bin.lo, bin.hi, bin.count);
            out << buf;
        }
    }
}

ReportSummary read_report_summary(const std::string& report_json_path) {
    std::ifstream in(report_json_path);
    if (!in) {
        throw IoError("cannot open report " + report_json_path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("report " + report_json_path + ": " + e.what());
    }
    ReportSummary s;
    try {
        s.method = j.at("method").get<std::string>();
        s.n = j.at("n").get<std::size_t>();
        s.rmse_h = j.at("rmse_h").get<double>();
        s.mae_h = j.at("mae_h").get<double>();
        s.score_s = j.at("score_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("report " + report_json_path + ": " + e.what());
    }
    return s;
}

}  // namespace rulkit

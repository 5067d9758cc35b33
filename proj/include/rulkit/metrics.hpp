#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rulkit {

/// Asymmetry constants of the scoring function, in hours. a2 < a1 makes
/// overestimates cost more than underestimates of equal size.
struct ScoreParams {
    double a1 = 250.0;
    double a2 = 220.0;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::size_t n = 0;
    double rmse_h = 0.0;
    double mae_h = 0.0;
    double score_s = 0.0;
    std::vector<std::pair<double, double>> pairs;  // (rul_true_h, rul_pred_h)
    std::vector<HistogramBin> error_histogram;     // signed error pred - truth
};

/// S = sum over samples of exp(-d/a1) - 1 for d < 0 and exp(d/a2) - 1 for
/// d >= 0, where d = pred - truth in hours.
double score_s(std::span<const double> truth, std::span<const double> pred,
               const ScoreParams& params = {});

double rmse(std::span<const double> truth, std::span<const double> pred);
double mae(std::span<const double> truth, std::span<const double> pred);

/// All three metrics plus retained pairs and an error histogram with
/// equal-width bins spanning the observed error range symmetrically around 0.
EvalReport make_report(std::span<const double> truth, std::span<const double> pred,
                       std::size_t histogram_bins, const ScoreParams& params = {});

/// report.json / pairs.csv / errors_hist.csv under `dir`. `method` labels the
/// estimator that produced the predictions.
void write_report_files(const EvalReport& report, const std::string& dir,
                        const std::string& method);

struct ReportSummary {
    std::string method;
    std::size_t n = 0;
    double rmse_h = 0.0;
    double mae_h = 0.0;
    double score_s = 0.0;
};

ReportSummary read_report_summary(const std::string& report_json_path);

}  // namespace rulkit

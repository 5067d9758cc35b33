#include "rulkit/llsf.hpp"

#include <algorithm>
#include <cmath>

#include "rulkit/errors.hpp"

namespace rulkit {

LlsfFit llsf_fit(std::span<const double> times_h, std::span<const double> powers) {
    if (times_h.size() != powers.size()) {
        throw UsageError("llsf_fit: time/power length mismatch");
    }
    const std::size_t n = times_h.size();
    if (n < 2) {
        throw UsageError("llsf_fit: need at least 2 points, got " + std::to_string(n));
    }
    double mean_t = 0.0;
    double mean_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_t += times_h[i];
        mean_p += powers[i];
    }
    mean_t /= static_cast<double>(n);
    mean_p /= static_cast<double>(n);

    double s_tt = 0.0;
    double s_tp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = times_h[i] - mean_t;
        s_tt += dt * dt;
        s_tp += dt * (powers[i] - mean_p);
    }
    if (s_tt == 0.0) {
        throw UsageError("llsf_fit: all sample times identical");
    }
    LlsfFit fit;
    fit.slope = s_tp / s_tt;
    fit.intercept = mean_p - fit.slope * mean_t;
    fit.n_points = n;
    return fit;
}

double llsf_predict_rul(std::span<const double> times_h, std::span<const double> powers,
                        double now_h, double threshold_power, double rul_cap_h) {
    const LlsfFit fit = llsf_fit(times_h, powers);
    if (fit.slope >= 0.0) {
        return rul_cap_h;  // no degradation trend observed
    }
    const double crossing_h = (threshold_power - fit.intercept) / fit.slope;
    if (crossing_h <= now_h) {
        return 0.0;  // already projected past failure
    }
    return std::min(crossing_h - now_h, rul_cap_h);
}

EvalReport llsf_evaluate(const std::vector<Sample>& test_samples,
                         const std::map<std::string, DeviceRecord>& fleet_by_id,
                         std::size_t histogram_bins, double drop_fraction, double rul_cap_h) {
    std::vector<double> truth;
    std::vector<double> pred;
    truth.reserve(test_samples.size());
    pred.reserve(test_samples.size());

    for (const Sample& sample : test_samples) {
        const auto it = fleet_by_id.find(sample.device_id);
        if (it == fleet_by_id.end()) {
            throw DataError("llsf_evaluate: no device record for '" + sample.device_id + "'");
        }
        const DeviceRecord& record = it->second;

        // history from test start up to (and including) the window end
        std::size_t n = 0;
        while (n < record.times_h.size() && record.times_h[n] <= sample.window_end_time_h) {
            ++n;
        }
        if (n < 2) {
            throw DataError("llsf_evaluate: device '" + sample.device_id +
                            "' has fewer than 2 measurements before " +
                            std::to_string(sample.window_end_time_h) + " h");
        }
        const double threshold = record.power_mw.front() * (1.0 - drop_fraction);
        const double rul = llsf_predict_rul({record.times_h.data(), n},
                                            {record.power_mw.data(), n},
                                            sample.window_end_time_h, threshold, rul_cap_h);
        truth.push_back(sample.rul_h);
        pred.push_back(rul);
    }
    return make_report(truth, pred, histogram_bins);
}

}  // namespace rulkit

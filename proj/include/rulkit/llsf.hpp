#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rulkit/dataset.hpp"
#include "rulkit/metrics.hpp"
#include "rulkit/synth.hpp"

namespace rulkit {

struct LlsfFit {
    double slope = 0.0;      // power per hour
    double intercept = 0.0;  // power at t = 0
    std::size_t n_points = 0;
};

/// Closed-form least-squares line through (times, powers).
LlsfFit llsf_fit(std::span<const double> times_h, std::span<const double> powers);

/// Extrapolates the fitted line to the failure threshold. Non-degrading fits
/// (slope >= 0) clamp to the cap; crossings at or before `now_h` clamp to 0.
/// Always returns a finite value in [0, rul_cap_h].
double llsf_predict_rul(std::span<const double> times_h, std::span<const double> powers,
                        double now_h, double threshold_power, double rul_cap_h = kRulCapHours);

/// Conventional-baseline evaluation over the test split: per sample, fit on
/// the device's full history up to the window end and extrapolate to the
/// 20% drop threshold.
EvalReport llsf_evaluate(const std::vector<Sample>& test_samples,
                         const std::map<std::string, DeviceRecord>& fleet_by_id,
                         std::size_t histogram_bins = 20, double drop_fraction = 0.2,
                         double rul_cap_h = kRulCapHours);

}  // namespace rulkit

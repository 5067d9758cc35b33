#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rulkit/synth.hpp"

namespace rulkit {

constexpr int kWindowSize = 3;
constexpr std::size_t kConditionCount = 6;
constexpr double kRulCapHours = 5000.0;

/// One supervised example: a raw power window, the device conditions in
/// fixed order (OA, Tj, I, T, J, R) and the RUL label in hours.
struct Sample {
    std::string device_id;
    std::array<double, kWindowSize> window_power{};
    double window_end_time_h = 0.0;
    std::array<double, kConditionCount> conditions{};
    double rul_h = 0.0;
};

struct FeatureRange {
    double min = 0.0;
    double max = 0.0;
};

/// Min-max ranges fitted on the training split only. The RUL label is scaled
/// by the fixed cap rather than a data-dependent max.
struct NormalizationStats {
    FeatureRange power;
    std::array<FeatureRange, kConditionCount> conditions{};
    double rul_cap_h = kRulCapHours;

    std::uint64_t fingerprint() const;
};

struct NormalizedSample {
    std::array<double, kWindowSize> window{};
    std::array<double, kConditionCount> conditions{};
    double target = 0.0;  // rul_h / rul_cap_h
};

struct SplitDataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    NormalizationStats stats;
    std::uint64_t split_seed = 0;
};

/// Drops infant-mortality failures (t_f < 100 h) and censored devices.
std::vector<DeviceRecord> filter_devices(const std::vector<DeviceRecord>& fleet);

/// Sliding windows of `window` consecutive measurements strictly before t_f,
/// stride 1, labeled t_f minus the window's last timestamp. Labels above the
/// cap are dropped.
std::vector<Sample> window_series(const DeviceRecord& record, int window = kWindowSize,
                                  double rul_cap_h = kRulCapHours);

NormalizationStats fit_normalize(const std::vector<Sample>& train);
NormalizedSample apply_normalize(const Sample& sample, const NormalizationStats& stats);

/// Device-granularity 80/20 split: a seeded shuffle of the device order,
/// then devices are assigned to the training side until the realized sample
/// fraction is as close to `train_fraction` as device sizes allow.
SplitDataset split_dataset(const std::vector<Sample>& samples, std::uint64_t seed,
                           double train_fraction = 0.8);

/// Full pipeline: filter -> window -> split -> fit stats.
SplitDataset build_dataset(const std::vector<DeviceRecord>& fleet, std::uint64_t seed,
                           int window = kWindowSize, double rul_cap_h = kRulCapHours,
                           double train_fraction = 0.8);

// dataset.jsonl + stats.json + split.json under `dir`.
void write_dataset_dir(const SplitDataset& dataset, const std::string& dir);
SplitDataset read_dataset_dir(const std::string& dir);

}  // namespace rulkit

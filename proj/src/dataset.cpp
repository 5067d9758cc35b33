#include "rulkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "rulkit/errors.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

namespace {

constexpr double kInfantMortalityHours = 100.0;

double normalize_value(double v, const FeatureRange& range) {
    const double span = range.max - range.min;
    if (span <= 0.0) {
        return 0.0;  // degenerate feature
    }
    return (v - range.min) / span;
}

std::uint64_t fnv1a_accumulate(std::uint64_t h, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t NormalizationStats::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a_accumulate(h, power.min);
    h = fnv1a_accumulate(h, power.max);
    for (const FeatureRange& r : conditions) {
        h = fnv1a_accumulate(h, r.min);
        h = fnv1a_accumulate(h, r.max);
    }
    h = fnv1a_accumulate(h, rul_cap_h);
    return h;
}

std::vector<DeviceRecord> filter_devices(const std::vector<DeviceRecord>& fleet) {
    std::vector<DeviceRecord> kept;
    kept.reserve(fleet.size());
    for (const DeviceRecord& record : fleet) {
        if (record.censored || !record.failure_time_h) {
            continue;  // no label without an observed t_f
        }
        if (*record.failure_time_h < kInfantMortalityHours) {
            continue;  // manufacturing-defect failure
        }
        kept.push_back(record);
    }
    return kept;
}

std::vector<Sample> window_series(const DeviceRecord& record, int window, double rul_cap_h) {
    if (record.censored || !record.failure_time_h) {
        throw UsageError("window_series: device " + record.device_id + " has no failure time");
    }
    if (window < 1) {
        throw UsageError("window_series: window must be at least 1");
    }
    const double t_f = *record.failure_time_h;
    const std::size_t w = static_cast<std::size_t>(window);

    // usable = measurements strictly before t_f (times are increasing)
    std::size_t usable = 0;
    while (usable < record.times_h.size() && record.times_h[usable] < t_f) {
        ++usable;
    }

    std::vector<Sample> samples;
    if (usable < w) {
        return samples;
    }
    samples.reserve(usable - w + 1);
    for (std::size_t start = 0; start + w <= usable; ++start) {
        const double t_end = record.times_h[start + w - 1];
        const double rul = t_f - t_end;
        if (rul > rul_cap_h) {
            continue;
        }
        Sample s;
        s.device_id = record.device_id;
        for (std::size_t i = 0; i < w && i < static_cast<std::size_t>(kWindowSize); ++i) {
            s.window_power[i] = record.power_mw[start + i];
        }
        s.window_end_time_h = t_end;
        const OperatingConditions& c = record.conditions;
        s.conditions = {c.oxide_aperture_um, c.junction_temp_c,          c.current_ma,
                        c.ambient_temp_c,    c.current_density_ka_cm2,   c.resistance_ohm};
        s.rul_h = rul;
        samples.push_back(std::move(s));
    }
    return samples;
}

NormalizationStats fit_normalize(const std::vector<Sample>& train) {
    if (train.empty()) {
        throw UsageError("fit_normalize: empty training set");
    }
    NormalizationStats stats;
    stats.power.min = train.front().window_power[0];
    stats.power.max = train.front().window_power[0];
    for (std::size_t f = 0; f < kConditionCount; ++f) {
        stats.conditions[f].min = train.front().conditions[f];
        stats.conditions[f].max = train.front().conditions[f];
    }
    for (const Sample& s : train) {
        for (double p : s.window_power) {
            stats.power.min = std::min(stats.power.min, p);
            stats.power.max = std::max(stats.power.max, p);
        }
        for (std::size_t f = 0; f < kConditionCount; ++f) {
            stats.conditions[f].min = std::min(stats.conditions[f].min, s.conditions[f]);
            stats.conditions[f].max = std::max(stats.conditions[f].max, s.conditions[f]);
        }
    }
    return stats;
}

NormalizedSample apply_normalize(const Sample& sample, const NormalizationStats& stats) {
    NormalizedSample out;
    for (int i = 0; i < kWindowSize; ++i) {
        out.window[static_cast<std::size_t>(i)] =
            normalize_value(sample.window_power[static_cast<std::size_t>(i)], stats.power);
    }
    for (std::size_t f = 0; f < kConditionCount; ++f) {
        out.conditions[f] = normalize_value(sample.conditions[f], stats.conditions[f]);
    }
    out.target = sample.rul_h / stats.rul_cap_h;
    return out;
}

SplitDataset split_dataset(const std::vector<Sample>& samples, std::uint64_t seed,
                           double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("split: train_fraction must be in (0, 1)");
    }
    // Group by device, keeping first-appearance order.
    std::vector<std::string> device_order;
    std::vector<std::vector<const Sample*>> groups;
    {
        std::vector<std::string> seen;
        for (const Sample& s : samples) {
            auto it = std::find(seen.begin(), seen.end(), s.device_id);
            if (it == seen.end()) {
                seen.push_back(s.device_id);
                device_order.push_back(s.device_id);
                groups.emplace_back();
                groups.back().push_back(&s);
            } else {
                groups[static_cast<std::size_t>(it - seen.begin())].push_back(&s);
            }
        }
    }
    if (groups.size() < 2) {
        throw UsageError("split: need at least 2 distinct devices, got " +
                         std::to_string(groups.size()));
    }

    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(mix_seed(seed, 0x73706c6974ULL));  // "split"
    rng.shuffle(order);

    const double target = train_fraction * static_cast<double>(samples.size());
    std::vector<bool> in_train(groups.size(), false);
    double train_count = 0.0;
    std::size_t taken = 0;
    std::size_t last_taken = 0;
    for (std::size_t oi = 0; oi < order.size() && train_count < target; ++oi) {
        const std::size_t gi = order[oi];
        const double size = static_cast<double>(groups[gi].size());
        // take the device only if it moves the realized count closer to target
        if (std::abs(train_count + size - target) <= std::abs(train_count - target)) {
            in_train[gi] = true;
            train_count += size;
            ++taken;
            last_taken = gi;
        } else {
            break;
        }
    }
    if (taken == groups.size()) {
        in_train[last_taken] = false;  // keep the test side non-empty
    }
    if (taken == 0) {
        in_train[order[0]] = true;
    }

    SplitDataset dataset;
    dataset.split_seed = seed;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& side = in_train[gi] ? dataset.train : dataset.test;
        for (const Sample* s : groups[gi]) {
            side.push_back(*s);
        }
    }
    dataset.stats = fit_normalize(dataset.train);
    return dataset;
}

SplitDataset build_dataset(const std::vector<DeviceRecord>& fleet, std::uint64_t seed, int window,
                           double rul_cap_h, double train_fraction) {
    const std::vector<DeviceRecord> usable = filter_devices(fleet);
    std::vector<Sample> samples;
    for (const DeviceRecord& record : usable) {
        const std::vector<Sample> ws = window_series(record, window, rul_cap_h);
        samples.insert(samples.end(), ws.begin(), ws.end());
    }
    return split_dataset(samples, seed, train_fraction);
}

namespace {

nlohmann::ordered_json sample_to_json(const Sample& s) {
    nlohmann::ordered_json j;
    j["device_id"] = s.device_id;
    j["window"] = s.window_power;
    j["t_end_h"] = s.window_end_time_h;
    j["conditions"] = s.conditions;
    j["rul_h"] = s.rul_h;
    return j;
}

Sample sample_from_json(const nlohmann::json& j, const std::string& context) {
    Sample s;
    try {
        s.device_id = j.at("device_id").get<std::string>();
        const auto window = j.at("window").get<std::vector<double>>();
        const auto conditions = j.at("conditions").get<std::vector<double>>();
        if (window.size() != kWindowSize || conditions.size() != kConditionCount) {
            throw ParseError(context + ": wrong window/conditions arity");
        }
        std::copy(window.begin(), window.end(), s.window_power.begin());
        std::copy(conditions.begin(), conditions.end(), s.conditions.begin());
        s.window_end_time_h = j.at("t_end_h").get<double>();
        s.rul_h = j.at("rul_h").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
    return s;
}

std::vector<std::string> device_list(const std::vector<Sample>& samples) {
    std::vector<std::string> ids;
    for (const Sample& s : samples) {
        if (std::find(ids.begin(), ids.end(), s.device_id) == ids.end()) {
            ids.push_back(s.device_id);
        }
    }
    return ids;
}

}  // namespace

void write_dataset_dir(const SplitDataset& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    }
    {
        std::ofstream out(fs::path(dir) / "dataset.jsonl", std::ios::binary);
        if (!out) {
            throw IoError("cannot write dataset.jsonl under " + dir);
        }
        for (const Sample& s : dataset.train) {
            out << sample_to_json(s).dump() << "\n";
        }
        for (const Sample& s : dataset.test) {
            out << sample_to_json(s).dump() << "\n";
        }
    }
    {
        nlohmann::ordered_json j;
        j["power"] = {{"min", dataset.stats.power.min}, {"max", dataset.stats.power.max}};
        nlohmann::ordered_json cond = nlohmann::ordered_json::array();
        for (const FeatureRange& r : dataset.stats.conditions) {
            cond.push_back({{"min", r.min}, {"max", r.max}});
        }
        j["conditions"] = cond;
        j["rul_cap_h"] = dataset.stats.rul_cap_h;
        j["fingerprint"] = dataset.stats.fingerprint();
        std::ofstream out(fs::path(dir) / "stats.json", std::ios::binary);
        if (!out) {
            throw IoError("cannot write stats.json under " + dir);
        }
        out << j.dump(2) << "\n";
    }
    {
        nlohmann::ordered_json j;
        j["seed"] = dataset.split_seed;
        j["train_devices"] = device_list(dataset.train);
        j["test_devices"] = device_list(dataset.test);
        std::ofstream out(fs::path(dir) / "split.json", std::ios::binary);
        if (!out) {
            throw IoError("cannot write split.json under " + dir);
        }
        out << j.dump(2) << "\n";
    }
}

SplitDataset read_dataset_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path dataset_path = fs::path(dir) / "dataset.jsonl";
    const fs::path stats_path = fs::path(dir) / "stats.json";
    const fs::path split_path = fs::path(dir) / "split.json";

    SplitDataset dataset;
    {
        std::ifstream in(stats_path);
        if (!in) {
            throw IoError("cannot open " + stats_path.string());
        }
        nlohmann::json j;
        try {
            in >> j;
            dataset.stats.power.min = j.at("power").at("min").get<double>();
            dataset.stats.power.max = j.at("power").at("max").get<double>();
            const auto cond = j.at("conditions");
            if (cond.size() != kConditionCount) {
                throw ParseError(stats_path.string() + ": expected 6 condition ranges");
            }
            for (std::size_t f = 0; f < kConditionCount; ++f) {
                dataset.stats.conditions[f].min = cond[f].at("min").get<double>();
                dataset.stats.conditions[f].max = cond[f].at("max").get<double>();
            }
            dataset.stats.rul_cap_h = j.at("rul_cap_h").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(stats_path.string() + ": " + e.what());
        }
    }

    std::set<std::string> train_ids;
    std::set<std::string> test_ids;
    {
        std::ifstream in(split_path);
        if (!in) {
            throw IoError("cannot open " + split_path.string());
        }
        nlohmann::json j;
        try {
            in >> j;
            dataset.split_seed = j.at("seed").get<std::uint64_t>();
            for (const auto& id : j.at("train_devices")) {
                train_ids.insert(id.get<std::string>());
            }
            for (const auto& id : j.at("test_devices")) {
                test_ids.insert(id.get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(split_path.string() + ": " + e.what());
        }
    }

    std::ifstream in(dataset_path);
    if (!in) {
        throw IoError("cannot open " + dataset_path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string context = dataset_path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(context + ": " + e.what());
        }
        Sample s = sample_from_json(j, context);
        if (train_ids.count(s.device_id) != 0) {
            dataset.train.push_back(std::move(s));
        } else if (test_ids.count(s.device_id) != 0) {
            dataset.test.push_back(std::move(s));
        } else {
            throw ParseError(context + ": device '" + s.device_id + "' missing from split.json");
        }
    }
    return dataset;
}

}  // namespace rulkit

#include "rulkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rulkit/errors.hpp"
#include "rulkit/rng.hpp"

namespace rulkit {

namespace {

constexpr double kBoltzmannEvPerK = 8.617333262e-5;
constexpr double kReferenceTempK = 398.15;  // 125 C
constexpr double kReferenceCurrentDensity = 30.0;

// Secondary generator constants (not part of the public config): VCSEL-ish
// ranges for the sampled conditions and the output-power model
// P0 = efficiency * (I - I_threshold(OA)).
constexpr double kApertureMinUm = 4.0;
constexpr double kApertureMaxUm = 8.0;
constexpr double kCurrentMinMa = 7.0;
constexpr double kCurrentMaxMa = 12.0;
constexpr double kSelfHeatingMinC = 8.0;
constexpr double kSelfHeatingMaxC = 20.0;
constexpr double kSlopeEfficiencyMwPerMa = 0.32;
constexpr double kEfficiencyJitterSigma = 0.01;
constexpr double kDefectSigmaLn = 0.25;
constexpr double kResistanceScaleOhmUm = 250.0;
constexpr double kInfantFailureMinH = 8.0;
constexpr double kInfantFailureMaxH = 95.0;
// Devices are removed from the test once power has clearly failed (50% drop),
// which keeps traces positive for any time exponent.
constexpr double kTraceStopDrop = 0.5;
constexpr double kMinPowerMw = 1e-6;

double current_density_ka_cm2(double current_ma, double aperture_um) {
    const double radius_cm = aperture_um * 1e-4 / 2.0;
    const double area_cm2 = 3.14159265358979323846 * radius_cm * radius_cm;
    return current_ma * 1e-3 / area_cm2 / 1000.0;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (!(sampling_interval_h > 0.0)) {
        throw ConfigError("generator: sampling_interval_h must be positive");
    }
    if (max_test_hours < sampling_interval_h) {
        throw ConfigError("generator: max_test_hours must be at least one sampling interval");
    }
    if (temperature_levels_c.empty()) {
        throw ConfigError("generator: at least one temperature level required");
    }
    for (double t : temperature_levels_c) {
        if (t < 85.0 || t > 150.0) {
            throw ConfigError("generator: temperature level " + std::to_string(t) +
                              " outside the 85-150 C sweep range");
        }
    }
    if (!(law.prefactor > 0.0) || !(law.time_exponent > 0.0)) {
        throw ConfigError("generator: degradation law is degenerate (zero rate)");
    }
    if (noise_std_relative < 0.0) {
        throw ConfigError("generator: noise_std_relative must be non-negative");
    }
    if (infant_mortality_fraction < 0.0 || infant_mortality_fraction >= 1.0) {
        throw ConfigError("generator: infant_mortality_fraction must be in [0, 1)");
    }
}

double degradation_rate(const DegradationLaw& law, const OperatingConditions& cond,
                        double defect) {
    const double tj_k = cond.junction_temp_c + 273.15;
    const double arrhenius = std::exp(-law.activation_energy_ev / kBoltzmannEvPerK *
                                      (1.0 / tj_k - 1.0 / kReferenceTempK));
    const double density =
        std::pow(cond.current_density_ka_cm2 / kReferenceCurrentDensity,
                 law.current_density_exponent);
    return law.prefactor * density * arrhenius * defect;
}

double analytic_failure_time(const DegradationLaw& law, double rate_k, double drop_fraction) {
    if (!(rate_k > 0.0)) {
        throw ConfigError("degradation law: rate must be positive");
    }
    return std::pow(drop_fraction / rate_k, 1.0 / law.time_exponent);
}

std::vector<DeviceRecord> generate_fleet(const GeneratorConfig& config) {
    config.validate();

    std::vector<DeviceRecord> fleet;
    fleet.reserve(config.device_count);

    for (std::size_t idx = 0; idx < config.device_count; ++idx) {
        Rng rng(mix_seed(config.master_seed, idx));

        OperatingConditions cond;
        cond.oxide_aperture_um = rng.uniform(kApertureMinUm, kApertureMaxUm);
        cond.current_ma = rng.uniform(kCurrentMinMa, kCurrentMaxMa);
        cond.ambient_temp_c =
            config.temperature_levels_c[rng.bounded(config.temperature_levels_c.size())];
        cond.junction_temp_c =
            cond.ambient_temp_c + rng.uniform(kSelfHeatingMinC, kSelfHeatingMaxC);
        cond.current_density_ka_cm2 =
            current_density_ka_cm2(cond.current_ma, cond.oxide_aperture_um);

        const double defect = std::exp(kDefectSigmaLn * rng.normal());
        // Resistance carries the defect signature on top of the aperture
        // scaling, so the measured conditions determine the degradation rate.
        cond.resistance_ohm =
            kResistanceScaleOhmUm / cond.oxide_aperture_um * std::sqrt(defect);

        const double threshold_current_ma =
            0.3 + 0.05 * cond.oxide_aperture_um * cond.oxide_aperture_um;
        const double initial_power_mw = kSlopeEfficiencyMwPerMa *
                                        (cond.current_ma - threshold_current_ma) *
                                        std::exp(kEfficiencyJitterSigma * rng.normal());

        double rate = degradation_rate(config.law, cond, defect);
        const bool infant = rng.uniform() < config.infant_mortality_fraction;
        const double infant_target_h = rng.uniform(kInfantFailureMinH, kInfantFailureMaxH);
        if (infant) {
            // Manufacturing defect: rate boosted so failure lands before 100 h.
            rate = std::max(rate, 0.2 / std::pow(infant_target_h, config.law.time_exponent));
        }

        DeviceRecord record;
        char id_buf[16];
        std::snprintf(id_buf, sizeof(id_buf), "dev-%04zu", idx);
        record.device_id = id_buf;
        record.conditions = cond;

        double first_measured = 0.0;
        for (double t = 0.0; t <= config.max_test_hours + 1e-9;
             t += config.sampling_interval_h) {
            const double clean =
                initial_power_mw * (1.0 - rate * std::pow(t, config.law.time_exponent));
            double measured = clean;
            if (config.noise_std_relative > 0.0) {
                measured = clean * (1.0 + config.noise_std_relative * rng.normal());
            }
            measured = std::max(measured, kMinPowerMw);
            record.times_h.push_back(t);
            record.power_mw.push_back(measured);
            if (record.times_h.size() == 1) {
                first_measured = measured;
            } else if (measured < kTraceStopDrop * first_measured) {
                break;
            }
        }

        record.failure_time_h = detect_failure(record);
        record.censored = !record.failure_time_h.has_value();
        fleet.push_back(std::move(record));
    }
    return fleet;
}

std::optional<double> detect_failure(const DeviceRecord& record, double drop_fraction) {
    if (record.times_h.size() < 2) {
        throw DataError("detect_failure: device " + record.device_id +
                        " has fewer than 2 samples");
    }
    const double initial = record.power_mw.front();
    if (!(initial > 0.0)) {
        throw DataError("detect_failure: device " + record.device_id +
                        " has non-positive initial power");
    }
    const double threshold = initial * (1.0 - drop_fraction);
    for (std::size_t i = 1; i < record.power_mw.size(); ++i) {
        if (record.power_mw[i] < threshold) {
            // Interpolate between the last sample above and this one.
            const double p_above = record.power_mw[i - 1];
            const double t_above = record.times_h[i - 1];
            const double p_below = record.power_mw[i];
            const double t_below = record.times_h[i];
            const double frac = (p_above - threshold) / (p_above - p_below);
            return t_above + frac * (t_below - t_above);
        }
    }
    return std::nullopt;
}

void write_fleet_csv(const std::vector<DeviceRecord>& fleet, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << "device_id,time_h,power_mw\n";
    char buf[96];
    for (const DeviceRecord& record : fleet) {
        for (std::size_t i = 0; i < record.times_h.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", record.device_id.c_str(),
                          record.times_h[i], record.power_mw[i]);
            out << buf;
        }
    }
}

void write_conditions_csv(const std::vector<DeviceRecord>& fleet, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << "device_id,oa_um,tj_c,i_ma,t_c,j_ka_cm2,r_ohm,t_f_h,censored\n";
    char buf[256];
    for (const DeviceRecord& record : fleet) {
        const OperatingConditions& c = record.conditions;
        std::string t_f;
        if (record.failure_time_h) {
            char fbuf[32];
            std::snprintf(fbuf, sizeof(fbuf), "%.17g", *record.failure_time_h);
            t_f = fbuf;
        }
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%d\n",
                      record.device_id.c_str(), c.oxide_aperture_um, c.junction_temp_c,
                      c.current_ma, c.ambient_temp_c, c.current_density_ka_cm2, c.resistance_ohm,
                      t_f.c_str(), record.censored ? 1 : 0);
        out << buf;
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw ParseError(context + ": trailing characters in number '" + s + "'");
        }
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError(context + ": invalid number '" + s + "'");
    } catch (const std::out_of_range&) {
        throw ParseError(context + ": number out of range '" + s + "'");
    }
}

}  // namespace

std::vector<DeviceRecord> read_fleet_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path conditions_path = fs::path(dir) / "conditions.csv";
    const fs::path fleet_path = fs::path(dir) / "fleet.csv";

    std::ifstream cond_in(conditions_path);
    if (!cond_in) {
        throw IoError("cannot open " + conditions_path.string());
    }
    std::ifstream fleet_in(fleet_path);
    if (!fleet_in) {
        throw IoError("cannot open " + fleet_path.string());
    }

    std::vector<DeviceRecord> fleet;
    std::map<std::string, std::size_t> index_by_id;

    std::string line;
    std::getline(cond_in, line);  // header
    std::size_t line_no = 1;
    while (std::getline(cond_in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) {
            throw ParseError(conditions_path.string() + ":" + std::to_string(line_no) +
                             ": expected 9 fields, got " + std::to_string(fields.size()));
        }
        const std::string ctx = conditions_path.string() + ":" + std::to_string(line_no);
        DeviceRecord record;
        record.device_id = fields[0];
        record.conditions.oxide_aperture_um = parse_double(fields[1], ctx);
        record.conditions.junction_temp_c = parse_double(fields[2], ctx);
        record.conditions.current_ma = parse_double(fields[3], ctx);
        record.conditions.ambient_temp_c = parse_double(fields[4], ctx);
        record.conditions.current_density_ka_cm2 = parse_double(fields[5], ctx);
        record.conditions.resistance_ohm = parse_double(fields[6], ctx);
        if (!fields[7].empty()) {
            record.failure_time_h = parse_double(fields[7], ctx);
        }
        record.censored = fields[8] == "1" || fields[8] == "true";
        if (record.censored == record.failure_time_h.has_value()) {
            throw ParseError(ctx + ": censored flag inconsistent with t_f field");
        }
        index_by_id[record.device_id] = fleet.size();
        fleet.push_back(std::move(record));
    }

    std::getline(fleet_in, line);  // header
    line_no = 1;
    while (std::getline(fleet_in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw ParseError(fleet_path.string() + ":" + std::to_string(line_no) +
                             ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        const std::string ctx = fleet_path.string() + ":" + std::to_string(line_no);
        const auto it = index_by_id.find(fields[0]);
        if (it == index_by_id.end()) {
            throw ParseError(ctx + ": unknown device '" + fields[0] + "'");
        }
        DeviceRecord& record = fleet[it->second];
        record.times_h.push_back(parse_double(fields[1], ctx));
        record.power_mw.push_back(parse_double(fields[2], ctx));
    }

    for (const DeviceRecord& record : fleet) {
        if (record.times_h.empty()) {
            throw ParseError(fleet_path.string() + ": device " + record.device_id +
                             " has no measurements");
        }
    }
    return fleet;
}

}  // namespace rulkit

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rulkit {

/// Per-device test conditions, constant for the whole aging run.
struct OperatingConditions {
    double oxide_aperture_um = 0.0;
    double junction_temp_c = 0.0;
    double current_ma = 0.0;
    double ambient_temp_c = 0.0;
    double current_density_ka_cm2 = 0.0;
    double resistance_ohm = 0.0;
};

struct DeviceRecord {
    std::string device_id;
    OperatingConditions conditions;
    std::vector<double> times_h;   // strictly increasing, starts at 0
    std::vector<double> power_mw;  // same length, positive
    std::optional<double> failure_time_h;
    bool censored = false;
};

/// Power decays as P(t) = P0 * (1 - k * t^m) with
/// k = prefactor * (J/30)^j_exp * exp(-Ea/kB * (1/Tj - 1/398.15)) * defect.
/// Closed form failure time: t_f = (drop / k)^(1/m).
struct DegradationLaw {
    double prefactor = 1.5e-5;              // k at J = 30 kA/cm2, Tj = 125 C, defect 1
    double activation_energy_ev = 0.7;      // Arrhenius temperature activation
    double current_density_exponent = 1.5;  // J dependence
    double time_exponent = 1.3;             // m; > 1 gives convex (accelerating) decay
};

struct GeneratorConfig {
    std::size_t device_count = 240;
    double sampling_interval_h = 50.0;
    double max_test_hours = 3500.0;
    std::vector<double> temperature_levels_c = {85.0, 105.0, 125.0, 150.0};
    DegradationLaw law;
    double noise_std_relative = 0.005;
    double infant_mortality_fraction = 0.1;
    std::uint64_t master_seed = 42;

    void validate() const;  // throws ConfigError
};

/// Degradation rate k for given conditions and per-device defect factor.
double degradation_rate(const DegradationLaw& law, const OperatingConditions& cond, double defect);

/// Time at which the noiseless law reaches the given fractional power drop.
double analytic_failure_time(const DegradationLaw& law, double rate_k, double drop_fraction = 0.2);

/// Simulated accelerated-aging fleet. Per-device RNG streams are derived
/// from master_seed and the device index, so output is a pure function of
/// the config. Device order is by index.
std::vector<DeviceRecord> generate_fleet(const GeneratorConfig& config);

/// Failure threshold crossing by linear interpolation between the last
/// above-threshold and first below-threshold measurements. The threshold is
/// the first measurement scaled by (1 - drop_fraction). Returns nullopt when
/// the trace never crosses.
std::optional<double> detect_failure(const DeviceRecord& record, double drop_fraction = 0.2);

// Fleet files: fleet.csv (device_id,time_h,power_mw) and conditions.csv
// (device_id,oa_um,tj_c,i_ma,t_c,j_ka_cm2,r_ohm,t_f_h,censored).
void write_fleet_csv(const std::vector<DeviceRecord>& fleet, const std::string& path);
void write_conditions_csv(const std::vector<DeviceRecord>& fleet, const std::string& path);
std::vector<DeviceRecord> read_fleet_dir(const std::string& dir);

}  // namespace rulkit

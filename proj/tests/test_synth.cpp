#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rulkit/errors.hpp"
#include "rulkit/synth.hpp"

using namespace rulkit;

namespace {

DeviceRecord record_from_law(double p0, double rate, double exponent, double interval,
                             double max_hours) {
    DeviceRecord r;
    r.device_id = "manual";
    for (double t = 0.0; t <= max_hours + 1e-9; t += interval) {
        r.times_h.push_back(t);
        r.power_mw.push_back(p0 * (1.0 - rate * std::pow(t, exponent)));
    }
    return r;
}

// Closed-form inversion of a noiseless trace: two interior samples determine
// the power-law parameters, which give the exact threshold crossing.
double invert_trace_failure_time(const DeviceRecord& r, double drop = 0.2) {
    const double p0 = r.power_mw.front();
    const double d1 = 1.0 - r.power_mw[1] / p0;
    const double d2 = 1.0 - r.power_mw[2] / p0;
    const double m = std::log(d2 / d1) / std::log(r.times_h[2] / r.times_h[1]);
    const double k = d1 / std::pow(r.times_h[1], m);
    return std::pow(drop / k, 1.0 / m);
}

}  // namespace

TEST_CASE("detect_failure interpolates linearly between straddling samples") {
    DeviceRecord r;
    r.device_id = "d";
    r.times_h = {0, 100, 200};
    r.power_mw = {1.0, 0.85, 0.75};
    // threshold 0.8 crossed between (100, 0.85) and (200, 0.75)
    const auto t_f = detect_failure(r);
    REQUIRE(t_f.has_value());
    CHECK(*t_f == doctest::Approx(150.0).epsilon(1e-12));
}

TEST_CASE("flat trace never crosses: censored") {
    DeviceRecord r;
    r.device_id = "d";
    r.times_h = {0, 50, 100, 150};
    r.power_mw = {1.0, 1.0, 1.0, 1.0};
    CHECK_FALSE(detect_failure(r).has_value());
}

TEST_CASE("first sample below threshold anchors on the initial power") {
    DeviceRecord r;
    r.device_id = "d";
    r.times_h = {0, 50};
    r.power_mw = {1.0, 0.7};
    const auto t_f = detect_failure(r);
    REQUIRE(t_f.has_value());
    // (1.0 - 0.8) / (1.0 - 0.7) * 50
    CHECK(*t_f == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("detect_failure input validation") {
    DeviceRecord too_short;
    too_short.device_id = "d";
    too_short.times_h = {0};
    too_short.power_mw = {1.0};
    CHECK_THROWS_AS(detect_failure(too_short), DataError);

    DeviceRecord bad_p0;
    bad_p0.device_id = "d";
    bad_p0.times_h = {0, 50};
    bad_p0.power_mw = {0.0, -0.1};
    CHECK_THROWS_AS(detect_failure(bad_p0), DataError);
}

TEST_CASE("exact recovery on a linear noiseless law") {
    // m = 1: the trace is globally linear, interpolation is exact
    const double rate = 1e-3;  // t_f = 0.2 / 1e-3 = 200 h
    const DeviceRecord r = record_from_law(2.0, rate, 1.0, 30.0, 600.0);
    const auto t_f = detect_failure(r);
    REQUIRE(t_f.has_value());
    CHECK(std::abs(*t_f - 200.0) < 1e-6);
}

TEST_CASE("recovery within one interpolation step on a convex noiseless law") {
    const double m = 1.3;
    const double rate = 0.2 / std::pow(900.0, m);  // analytic t_f = 900 h
    const double interval = 50.0;
    const DeviceRecord r = record_from_law(1.5, rate, m, interval, 3000.0);
    const auto t_f = detect_failure(r);
    REQUIRE(t_f.has_value());
    CHECK(std::abs(*t_f - 900.0) < interval);
}

TEST_CASE("generated noiseless traces match the closed-form inversion oracle") {
    GeneratorConfig config;
    config.device_count = 40;
    config.noise_std_relative = 0.0;
    config.infant_mortality_fraction = 0.0;
    config.master_seed = 7;
    const auto fleet = generate_fleet(config);

    std::size_t checked = 0;
    for (const DeviceRecord& r : fleet) {
        if (!r.failure_time_h || r.times_h.size() < 3) {
            continue;
        }
        const double analytic = invert_trace_failure_time(r);
        CHECK(std::abs(*r.failure_time_h - analytic) < config.sampling_interval_h);
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("fleet generation is a pure function of the config") {
    GeneratorConfig config;
    config.device_count = 30;
    config.master_seed = 99;
    const auto a = generate_fleet(config);
    const auto b = generate_fleet(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].device_id == b[i].device_id);
        CHECK(a[i].times_h == b[i].times_h);    // bit-identical
        CHECK(a[i].power_mw == b[i].power_mw);  // bit-identical
        CHECK(a[i].censored == b[i].censored);
        CHECK(a[i].conditions.resistance_ohm == b[i].conditions.resistance_ohm);
    }
}

TEST_CASE("zero devices yields an empty fleet") {
    GeneratorConfig config;
    config.device_count = 0;
    CHECK(generate_fleet(config).empty());
}

TEST_CASE("raising the temperature never increases a failure time") {
    GeneratorConfig cool;
    cool.device_count = 60;
    cool.noise_std_relative = 0.0;
    cool.temperature_levels_c = {100.0};
    cool.master_seed = 5;
    GeneratorConfig hot = cool;
    hot.temperature_levels_c = {110.0};

    const auto fleet_cool = generate_fleet(cool);
    const auto fleet_hot = generate_fleet(hot);
    REQUIRE(fleet_cool.size() == fleet_hot.size());
    for (std::size_t i = 0; i < fleet_cool.size(); ++i) {
        if (fleet_cool[i].failure_time_h) {
            REQUIRE(fleet_hot[i].failure_time_h.has_value());
            CHECK(*fleet_hot[i].failure_time_h <= *fleet_cool[i].failure_time_h + 1e-9);
        }
    }
}

TEST_CASE("default fleet covers infants, wear-out failures and censored devices") {
    GeneratorConfig config;  // defaults: 240 devices, seed 42
    const auto fleet = generate_fleet(config);
    REQUIRE(fleet.size() == 240);

    std::size_t infants = 0;
    std::size_t failed = 0;
    std::size_t censored = 0;
    bool saw_85 = false;
    bool saw_150 = false;
    for (const DeviceRecord& r : fleet) {
        CHECK(r.times_h.front() == 0.0);
        for (std::size_t i = 1; i < r.times_h.size(); ++i) {
            CHECK(r.times_h[i] > r.times_h[i - 1]);
        }
        for (double p : r.power_mw) {
            CHECK(p > 0.0);
        }
        saw_85 = saw_85 || r.conditions.ambient_temp_c == 85.0;
        saw_150 = saw_150 || r.conditions.ambient_temp_c == 150.0;
        CHECK(r.censored == !r.failure_time_h.has_value());
        if (r.censored) {
            ++censored;
            continue;
        }
        CHECK(*r.failure_time_h <= config.max_test_hours);
        CHECK(*r.failure_time_h > 0.0);
        if (*r.failure_time_h < 100.0) {
            ++infants;
        } else {
            ++failed;
        }
        // t_f lies within the straddling sample pair
        const DeviceRecord& rec = r;
        bool straddled = false;
        for (std::size_t i = 1; i < rec.times_h.size(); ++i) {
            if (*rec.failure_time_h > rec.times_h[i - 1] &&
                *rec.failure_time_h <= rec.times_h[i]) {
                straddled = true;
                break;
            }
        }
        CHECK(straddled);
    }
    CHECK(infants >= 10);
    CHECK(failed >= 80);
    CHECK(censored >= 10);
    CHECK(saw_85);
    CHECK(saw_150);
}

TEST_CASE("config validation rejects degenerate setups") {
    GeneratorConfig config;
    config.sampling_interval_h = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.law.prefactor = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.temperature_levels_c = {200.0};
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = {};
    config.max_test_hours = 10.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("fleet csv round-trips bit-exactly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rulkit_synth_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    GeneratorConfig config;
    config.device_count = 12;
    config.master_seed = 3;
    const auto fleet = generate_fleet(config);
    write_fleet_csv(fleet, (dir / "fleet.csv").string());
    write_conditions_csv(fleet, (dir / "conditions.csv").string());

    const auto loaded = read_fleet_dir(dir.string());
    REQUIRE(loaded.size() == fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        CHECK(loaded[i].device_id == fleet[i].device_id);
        CHECK(loaded[i].times_h == fleet[i].times_h);
        CHECK(loaded[i].power_mw == fleet[i].power_mw);
        CHECK(loaded[i].censored == fleet[i].censored);
        CHECK(loaded[i].failure_time_h == fleet[i].failure_time_h);
        CHECK(loaded[i].conditions.oxide_aperture_um == fleet[i].conditions.oxide_aperture_um);
        CHECK(loaded[i].conditions.junction_temp_c == fleet[i].conditions.junction_temp_c);
        CHECK(loaded[i].conditions.current_ma == fleet[i].conditions.current_ma);
        CHECK(loaded[i].conditions.ambient_temp_c == fleet[i].conditions.ambient_temp_c);
        CHECK(loaded[i].conditions.current_density_ka_cm2 ==
              fleet[i].conditions.current_density_ka_cm2);
        CHECK(loaded[i].conditions.resistance_ohm == fleet[i].conditions.resistance_ohm);
    }
    fs::remove_all(dir);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rulkit/errors.hpp"
#include "rulkit/metrics.hpp"
#include "rulkit/rng.hpp"

using namespace rulkit;

TEST_CASE("score is zero for exact predictions") {
    const std::vector<double> truth = {100, 2500, 40};
    CHECK(score_s(truth, truth) == 0.0);
}

TEST_CASE("score matches direct evaluation of the asymmetric formula") {
    // single overestimate by a2 = 220 h: e^1 - 1
    CHECK(score_s(std::vector<double>{1000.0}, std::vector<double>{1220.0}) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    // single underestimate by a1 = 250 h: e^1 - 1
    CHECK(score_s(std::vector<double>{1000.0}, std::vector<double>{750.0}) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
    // overestimate by 250 h costs more than the same underestimate
    const double over = score_s(std::vector<double>{1000.0}, std::vector<double>{1250.0});
    CHECK(over == doctest::Approx(std::exp(250.0 / 220.0) - 1.0).epsilon(1e-12));
    CHECK(over > std::exp(1.0) - 1.0);
}

TEST_CASE("asymmetry law across a grid of error magnitudes") {
    for (double d : {1.0, 10.0, 100.0, 500.0, 1000.0}) {
        const double over = score_s(std::vector<double>{0.0}, std::vector<double>{d});
        const double under = score_s(std::vector<double>{d}, std::vector<double>{0.0});
        CHECK(over > under);
    }
}

TEST_CASE("score oracle on 1000 random pairs") {
    Rng rng(123);
    std::vector<double> truth(1000);
    std::vector<double> pred(1000);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth[i] = rng.uniform(0.0, 5000.0);
        pred[i] = rng.uniform(0.0, 5000.0);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = pred[i] - truth[i];
        expected += d < 0.0 ? std::exp(-d / 250.0) - 1.0 : std::exp(d / 220.0) - 1.0;
    }
    CHECK(score_s(truth, pred) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("score is additive over concatenated sample sets") {
    const std::vector<double> t1 = {100, 200};
    const std::vector<double> p1 = {120, 150};
    const std::vector<double> t2 = {900, 50, 10};
    const std::vector<double> p2 = {400, 55, 0};
    std::vector<double> t_all = t1;
    t_all.insert(t_all.end(), t2.begin(), t2.end());
    std::vector<double> p_all = p1;
    p_all.insert(p_all.end(), p2.begin(), p2.end());
    CHECK(score_s(t_all, p_all) ==
          doctest::Approx(score_s(t1, p1) + score_s(t2, p2)).epsilon(1e-14));
}

TEST_CASE("rmse and mae hand examples") {
    const std::vector<double> same = {5, 6, 7};
    CHECK(rmse(same, same) == 0.0);
    CHECK(mae(same, same) == 0.0);

    const std::vector<double> truth = {3, 4};
    const std::vector<double> pred = {0, 0};
    CHECK(rmse(truth, pred) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(mae(truth, pred) == doctest::Approx(3.5).epsilon(1e-15));

    // n = 1 degenerate equality
    CHECK(rmse(std::vector<double>{10.0}, std::vector<double>{7.5}) == doctest::Approx(2.5));
    CHECK(mae(std::vector<double>{10.0}, std::vector<double>{7.5}) == doctest::Approx(2.5));
}

TEST_CASE("input validation") {
    const std::vector<double> a = {1, 2};
    const std::vector<double> b = {1};
    CHECK_THROWS_AS(rmse(a, b), UsageError);
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), UsageError);
    CHECK_THROWS_AS(score_s(a, b), UsageError);
    CHECK_THROWS_AS(make_report(a, a, 0), UsageError);
}

TEST_CASE("rmse >= mae >= 0 on random inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.bounded(20);
        std::vector<double> truth(n);
        std::vector<double> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform(0.0, 5000.0);
            pred[i] = rng.uniform(-100.0, 5100.0);
        }
        const EvalReport r = make_report(truth, pred, 5);
        CHECK(r.rmse_h >= r.mae_h);
        CHECK(r.mae_h >= 0.0);
        CHECK(r.score_s >= 0.0);
    }
}

TEST_CASE("increasing one |error| never decreases any metric") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.bounded(8);
        std::vector<double> truth(n);
        std::vector<double> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform(0.0, 3000.0);
            pred[i] = truth[i] + rng.uniform(-500.0, 500.0);
        }
        const double r0 = rmse(truth, pred);
        const double m0 = mae(truth, pred);
        const double s0 = score_s(truth, pred);

        const std::size_t k = rng.bounded(n);
        const double d = pred[k] - truth[k];
        pred[k] = truth[k] + (d >= 0.0 ? d + 50.0 : d - 50.0);
        CHECK(rmse(truth, pred) >= r0);
        CHECK(mae(truth, pred) >= m0);
        CHECK(score_s(truth, pred) >= s0);
    }
}

TEST_CASE("histogram: all-zero errors concentrate in the bin containing 0") {
    const std::vector<double> truth = {10, 20, 30};
    const EvalReport r = make_report(truth, truth, 5);
    std::size_t total = 0;
    for (const HistogramBin& bin : r.error_histogram) {
        if (bin.count > 0) {
            CHECK(bin.lo <= 0.0);
            CHECK(bin.hi >= 0.0);
        }
        total += bin.count;
    }
    CHECK(total == 3);
}

TEST_CASE("histogram: symmetric errors split across symmetric bins") {
    const std::vector<double> truth = {0, 0};
    const std::vector<double> pred = {-1, 1};
    const EvalReport r = make_report(truth, pred, 2);
    REQUIRE(r.error_histogram.size() == 2);
    CHECK(r.error_histogram[0].count == 1);
    CHECK(r.error_histogram[1].count == 1);
    CHECK(r.error_histogram[0].lo == doctest::Approx(-1.0));
    CHECK(r.error_histogram[1].hi == doctest::Approx(1.0));
}

TEST_CASE("report files round-trip the summary") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rulkit_metrics_test";
    fs::remove_all(dir);

    const std::vector<double> truth = {100, 400, 900};
    const std::vector<double> pred = {110, 350, 1000};
    const EvalReport report = make_report(truth, pred, 4);
    write_report_files(report, dir.string(), "hybrid");

    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "pairs.csv"));
    CHECK(fs::exists(dir / "errors_hist.csv"));

    const ReportSummary summary = read_report_summary((dir / "report.json").string());
    CHECK(summary.method == "hybrid");
    CHECK(summary.n == 3);
    CHECK(summary.rmse_h == doctest::Approx(report.rmse_h).epsilon(1e-12));
    CHECK(summary.mae_h == doctest::Approx(report.mae_h).epsilon(1e-12));
    CHECK(summary.score_s == doctest::Approx(report.score_s).epsilon(1e-12));

    // pairs.csv holds one line per sample plus the header
    std::ifstream in(dir / "pairs.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
    }
    CHECK(lines == 4);
    fs::remove_all(dir);
}

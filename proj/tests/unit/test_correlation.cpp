#include <cmath>
#include <random>

#include "doctest.h"
#include "gamma_audit/correlation.hpp"
#include "gamma_audit/error.hpp"
#include "support/oracles.hpp"

using namespace gamma_audit;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const AuditError& e) {
        return e.code();
    }
    FAIL("expected an AuditError");
    return ErrorCode::InvalidArgument;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = oracle::uniform(rng, -10.0, 10.0);
    }
    return v;
}

double stddev(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) {
        m += x;
    }
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s);
}

// 2x2 design on F03/F04 with hand-built metric columns per centre.
ResultTable small_table(std::size_t centres) {
    ResultTable t;
    t.factors = {{FactorId::F03, {0.0, 2.0}}, {FactorId::F04, {0.0, 1.0}}};
    t.points = full_factorial(t.factors).points;
    for (std::size_t c = 0; c < centres; ++c) {
        t.centre_ids.push_back("c" + std::to_string(c + 1));
        for (std::size_t p = 0; p < t.points.size(); ++p) {
            AuditResult r;
            const double a = static_cast<double>(t.points[p][0]);
            const double b = static_cast<double>(t.points[p][1]);
            const double ab = a * b;
            r.gpr_pct = {100 - 3 * a - (1 + c) * b - ab * static_cast<double>(c % 2),
                         95 - 5 * a - 2 * b, 90 - a, 100 - b};
            r.median_gamma = {0.2 + 0.1 * a, 0.3, 0.4 + 0.01 * static_cast<double>(c) * b, 0.5};
            r.dta_mm = 0.1 * static_cast<double>(p + c);
            t.rows.push_back({c, p, r, ""});
        }
    }
    return t;
}

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("pearson worked values") {
    const std::vector<double> x{1, 2, 3, 4, 5.5};
    CHECK(pearson(x, x) == 1.0);
    std::vector<double> neg;
    for (double v : x) {
        neg.push_back(-2 * v + 7);
    }
    CHECK(pearson(x, neg) == -1.0);
    const std::vector<double> a{1, 2, 3}, b{1, 2, 4};
    CHECK(std::abs(pearson(a, b) - 0.98198) <= 1e-5);
    CHECK(std::abs(pearson(a, b) - oracle::pearson_two_pass(a, b)) <= 1e-15);
}

TEST_CASE("pearson errors") {
    const std::vector<double> a{1, 2, 3}, c{2, 2, 2};
    CHECK(code_of([&] { pearson(a, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([&] { pearson(std::vector<double>{1, 2}, std::vector<double>{2, 1}); }) ==
          ErrorCode::TooFewSamples);
    CHECK(code_of([&] { pearson(a, c); }) == ErrorCode::ConstantInput);
    CHECK(code_of([&] { pearson(c, a); }) == ErrorCode::ConstantInput);
}

TEST_CASE("pearson properties on random vectors") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng() % 60;
        const auto x = random_vector(rng, n);
        const auto y = random_vector(rng, n);
        const double r = pearson(x, y);
        CHECK(std::abs(r) <= 1.0);
        CHECK(std::abs(r - oracle::pearson_two_pass(x, y)) <= 1e-12);
        CHECK(pearson(y, x) == r);

        const double a = oracle::uniform(rng, -100, 100);
        const double b = oracle::uniform(rng, 0.1, 10);
        std::vector<double> z;
        for (double v : x) {
            z.push_back(a + b * v);
        }
        CHECK(std::abs(pearson(z, y) - r) <= 1e-10);
        for (double& v : z) {
            v = -v;
        }
        CHECK(std::abs(pearson(z, y) + r) <= 1e-10);
    }
}

TEST_CASE("correlate_columns") {
    const CorrelationMatrix m = correlate_columns({"a", "b", "c", "d"}, {{1, 2, 3, 4}, {1, 2, 3, 4}, {5, 5, 5, 5}, {4, 1, 3, 2}});
    CHECK(m.size() == 4);
    CHECK(m.r(0, 1) == 1.0);
    CHECK(m.r(0, 0) == 1.0);
    CHECK_FALSE(m.defined(2));
    CHECK_FALSE(m.r(0, 2).has_value());
    CHECK_FALSE(m.r(2, 2).has_value());
    CHECK(m.r(0, 3) == m.r(3, 0));
    CHECK(m.samples(0, 3) == 4);
    CHECK(code_of([] { correlate_columns({"a"}, {{1, 2, 3}, {1, 2, 3}}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { correlate_columns({"a", "b"}, {{1, 2, 3}, {1, 2}}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("compositional columns: each row of r weighted by spread sums to zero") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 4, n = 12;
        std::vector<std::vector<double>> cols(k);
        for (std::size_t s = 0; s < n; ++s) {
            double total = 0;
            std::vector<double> w(k);
            for (double& x : w) {
                x = oracle::uniform(rng, 0.01, 1.0);
                total += x;
            }
            for (std::size_t j = 0; j < k; ++j) {
                cols[j].push_back(w[j] / total);
            }
        }
        const CorrelationMatrix m = correlate_columns({"a", "b", "c", "d"}, cols);
        for (std::size_t i = 0; i < k; ++i) {
            double sum = 0;
            for (std::size_t j = 0; j < k; ++j) {
                sum += *m.r(i, j) * stddev(cols[j]);
            }
            CHECK(std::abs(sum) <= 1e-12);
        }
    }
}

TEST_CASE("metric correlation") {
    ResultTable t = small_table(3);
    const CorrelationMatrix m = metric_correlation(t);
    CHECK(m.size() == kMetricCount);
    CHECK(m.labels().front() == "gpr_gic1");
    CHECK(m.labels().back() == "com_mm");
    CHECK_FALSE(m.defined(static_cast<std::size_t>(Metric::median_gamma_gic2)));
    CHECK(m.r(static_cast<std::size_t>(Metric::gpr_gic3), static_cast<std::size_t>(Metric::median_gamma_gic1)) ==
          doctest::Approx(-1.0));
    CHECK(m.samples(0, 1) == 12);

    t.rows[0].result.reset();
    t.rows[0].error = "x";
    CHECK(metric_correlation(t).samples(0, 1) == 11);

    ResultTable tiny = small_table(1);
    tiny.rows.resize(2);
    tiny.points.resize(2);
    CHECK(code_of([&] { metric_correlation(tiny); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("dose offsets alone make mean and median dose difference identical") {
    const GridGeometry g{24, 24, 1, 1, -11.5, -11.5};
    const DoseGrid flat(g, std::vector<double>(g.size(), 2.0));
    CentreDataset c{"flat", flat, flat, {RoiShape::rectangle, 8, 8, 0, 0}};
    const FactorialDesign d = full_factorial({{FactorId::F03, {-3.0, -1.0, 0.0, 1.5, 4.0}}, {FactorId::F01, {RoiShape::rectangle, RoiShape::ellipse}}});
    const ResultTable t = run_design(std::vector<CentreDataset>{c}, d);
    const CorrelationMatrix m = metric_correlation(t);
    const auto mean = static_cast<std::size_t>(Metric::mean_dose_diff);
    const auto median = static_cast<std::size_t>(Metric::median_dose_diff);
    CHECK(*m.r(mean, median) == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& row : t.rows) {
        CHECK(row.result->mean_dose_diff_pct == doctest::Approx(row.result->median_dose_diff_pct));
    }
}

TEST_CASE("centre correlation") {
    ResultTable t = small_table(3);
    const CorrelationMatrix g2 = center_correlation(t, GicMetric::gpr, 2);
    CHECK(g2.labels() == t.centre_ids);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(*g2.r(i, j) == doctest::Approx(1.0));
        }
    }
    CHECK(center_correlation(t, Metric::gpr_gic2).r(0, 1) == g2.r(0, 1));

    // Only three design points remain once one row fails; pearson still works.
    t.rows[4 + 1].result.reset();
    const CorrelationMatrix g1 = center_correlation(t, GicMetric::gpr, 1);
    CHECK(g1.samples(0, 2) == 3);

    // median_gamma_gic3 is constant for the first centre.
    const CorrelationMatrix med = center_correlation(small_table(3), GicMetric::median_gamma, 3);
    CHECK_FALSE(med.defined(0));
    CHECK(med.defined(1));

    ResultTable shuffled = small_table(2);
    std::swap(shuffled.rows[0], shuffled.rows[1]);
    CHECK(code_of([&] { center_correlation(shuffled, Metric::dta); }) == ErrorCode::MisalignedDesigns);
    ResultTable short_table = small_table(2);
    short_table.rows.pop_back();
    CHECK(code_of([&] { check_aligned(short_table); }) == ErrorCode::MisalignedDesigns);
}

TEST_CASE("factor correlation") {
    SensitivitySweep sweep;
    sweep.factors = {FactorId::F01, FactorId::F09, FactorId::F04};
    sweep.metrics = {Metric::gpr_gic1};
    std::mt19937_64 rng(1);
    for (int c = 0; c < 5; ++c) {
        sweep.centre_ids.push_back("c" + std::to_string(c));
        SensitivityVector v;
        const double f1 = oracle::uniform(rng, 0.05, 0.3);
        v.factors = {f1, 2 * f1, oracle::uniform(rng, 0.0, 0.1)};
        v.interactions = 1 - v.factors[0] - v.factors[1] - v.factors[2];
        sweep.entries.push_back({SensitivityEntry{v, ""}});
    }
    const CorrelationMatrix m = factor_correlation(sweep, GicMetric::gpr, 1);
    CHECK(m.labels() == std::vector<std::string>{"F01", "F09", "F04", "F10"});
    CHECK(*m.r(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.samples(0, 3) == 5);

    sweep.entries[0][0].value.reset();
    sweep.entries[1][0].value.reset();
    CHECK(factor_correlation(sweep, Metric::gpr_gic1).samples(0, 0) == 3);
    sweep.entries[2][0].value.reset();
    CHECK(code_of([&] { factor_correlation(sweep, Metric::gpr_gic1); }) == ErrorCode::TooFewSamples);
}

}  // TEST_SUITE

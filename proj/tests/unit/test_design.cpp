#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "gamma_audit/design.hpp"
#include "gamma_audit/error.hpp"

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

const GridGeometry kGrid{32, 32, 1, 1, -15.5, -15.5};

CentreDataset flat_centre(double dose = 2.0) {
    const DoseGrid g = synth_phantom(kGrid, {8, 6, 0, 0, dose});
    return {"flat", g, g, {RoiShape::rectangle, 8, 8, 0, 0}};
}

std::size_t index_of(const std::vector<Factor>& fs, FactorId id) {
    for (std::size_t k = 0; k < fs.size(); ++k) {
        if (fs[k].id == id) {
            return k;
        }
    }
    FAIL("factor missing");
    return 0;
}

}  // namespace

TEST_SUITE("design") {

TEST_CASE("factor codes") {
    CHECK(factor_code(FactorId::F01) == "F01");
    CHECK(factor_code(FactorId::F09) == "F09");
    CHECK(parse_factor_code("F05") == FactorId::F05);
    CHECK_FALSE(parse_factor_code("F10").has_value());
    CHECK_FALSE(parse_factor_code("f01").has_value());
    CHECK(is_shape_factor(FactorId::F02));
    CHECK_FALSE(is_shape_factor(FactorId::F03));
}

TEST_CASE("factor validation") {
    CHECK(code_of([] { Factor{FactorId::F03, {0.0}}.validate(); }) == ErrorCode::EmptyFactor);
    CHECK(code_of([] { Factor{FactorId::F03, {1.0, 1.0}}.validate(); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Factor{FactorId::F01, {1.0, 2.0}}.validate(); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Factor{FactorId::F03, {RoiShape::ellipse, 2.0}}.validate(); }) ==
          ErrorCode::InvalidArgument);
    Factor{FactorId::F04, {-1.0, 0.0, 1.0}}.validate();
}

TEST_CASE("default factors") {
    const auto fs = default_factors();
    REQUIRE(fs.size() == kFactorCount);
    for (std::size_t k = 0; k < fs.size(); ++k) {
        CHECK(static_cast<std::size_t>(fs[k].id) == k + 1);
        CHECK(fs[k].levels.size() == 2);
    }
}

TEST_CASE("full factorial is complete and balanced") {
    const FactorialDesign d = full_factorial(default_factors());
    CHECK(d.points.size() == 512);
    CHECK(std::set<DesignPoint>(d.points.begin(), d.points.end()).size() == 512);
    CHECK(std::is_sorted(d.points.begin(), d.points.end()));
    for (std::size_t f = 0; f < kFactorCount; ++f) {
        std::size_t high = 0;
        for (const auto& p : d.points) {
            high += p[f];
        }
        CHECK(high == 256);
    }

    std::vector<Factor> mixed{{FactorId::F03, {0.0, 1.0, 2.0}}, {FactorId::F04, {0.0, 1.0}}};
    const FactorialDesign m = full_factorial(mixed);
    CHECK(m.points.size() == 6);
    CHECK(m.points[1] == DesignPoint{0, 1});
    CHECK(m.points[2] == DesignPoint{1, 0});
    CHECK(m.level_counts() == std::vector<std::size_t>{3, 2});

    CHECK(code_of([] { full_factorial({}); }) == ErrorCode::EmptyFactor);
    CHECK(code_of([] {
              full_factorial({{FactorId::F03, {0.0, 1.0}}, {FactorId::F03, {0.0, 2.0}}});
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("baseline point leaves the centre untouched") {
    const CentreDataset c = flat_centre();
    const auto fs = default_factors();
    const DesignPoint base(kFactorCount, 0);
    const DesignPointInputs in = apply_design_point(c, base, fs);
    CHECK(in.reference == c.reference);
    CHECK(in.evaluated == c.evaluated);
    CHECK(in.mask == realize_roi(c.evaluated, c.roi));
    CHECK(in.evaluated_roi == c.roi);
    CHECK(in.reference_roi == c.roi);
}

TEST_CASE("each factor acts on its own side") {
    const CentreDataset c = flat_centre();
    const auto fs = default_factors();
    auto with = [&](FactorId id) {
        DesignPoint p(kFactorCount, 0);
        p[index_of(fs, id)] = 1;
        return apply_design_point(c, p, fs);
    };

    const DesignPointInputs dose = with(FactorId::F03);
    CHECK(dose.reference == c.reference);
    CHECK(dose.evaluated == c.evaluated.scaled(1.02));

    const DesignPointInputs ex = with(FactorId::F04);
    CHECK(ex.reference == c.reference);
    CHECK(ex.evaluated.at(5, 7) == c.evaluated.at(4, 7));
    CHECK_FALSE(ex.evaluated.valid(0, 7));

    const DesignPointInputs ry = with(FactorId::F07);
    CHECK(ry.evaluated == c.evaluated);
    CHECK(ry.reference.at(5, 7) == c.reference.at(5, 6));

    const DesignPointInputs shape = with(FactorId::F01);
    CHECK(shape.evaluated_roi.shape == RoiShape::ellipse);
    CHECK(shape.reference_roi.shape == RoiShape::rectangle);
    CHECK(shape.mask.count() < realize_roi(c.evaluated, c.roi).count());

    const DesignPointInputs size = with(FactorId::F08);
    CHECK(size.reference_roi.half_width_mm == doctest::Approx(6.4));
    CHECK(size.evaluated_roi.half_width_mm == 8.0);
    CHECK(size.mask == realize_roi(c.evaluated.geometry(), size.reference_roi));
}

TEST_CASE("mask is the intersection of both ROIs") {
    const CentreDataset c = flat_centre();
    std::vector<Factor> fs{{FactorId::F01, {RoiShape::rectangle, RoiShape::ellipse}},
                           {FactorId::F08, {1.0, 0.5}}};
    const DesignPointInputs in = apply_design_point(c, DesignPoint{1, 1}, fs);
    const Mask expect = realize_roi(c.evaluated.geometry(), in.evaluated_roi) &
                        realize_roi(c.evaluated.geometry(), in.reference_roi);
    CHECK(in.mask == expect);
}

TEST_CASE("design point errors") {
    const CentreDataset c = flat_centre();
    const auto fs = default_factors();
    CHECK(code_of([&] { apply_design_point(c, DesignPoint{0, 0}, fs); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { apply_design_point(c, DesignPoint(kFactorCount, 2), fs); }) ==
          ErrorCode::InvalidArgument);
    std::vector<Factor> tiny{{FactorId::F09, {1.0, 0.1}}};
    CHECK(code_of([&] { apply_design_point(c, DesignPoint{1}, tiny); }) == ErrorCode::RoiTooSmall);
}

TEST_CASE("run_design shape, error rows and determinism") {
    CentreDataset a = flat_centre();
    a.id = "a";
    CentreDataset b = make_synthetic_centre(
        {"b", kGrid, {9, 5, 0.5, 0, 0.2}, {1, 0.3, 0, 1}, {4, 1.0}, {RoiShape::rectangle, 7, 7, 0, 0}});
    const std::vector<CentreDataset> centres{a, b};
    const FactorialDesign d = full_factorial({{FactorId::F03, {0.0, 2.0}}, {FactorId::F09, {1.0, 0.1}}});

    const ResultTable one = run_design(centres, d, {}, 1);
    CHECK(one.rows.size() == 4 * 2);
    CHECK(one.centre_ids == std::vector<std::string>{"a", "b"});
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t p = 0; p < 4; ++p) {
            const ResultRow& r = one.row(c, p);
            CHECK(r.centre_index == c);
            CHECK(r.point_index == p);
            const bool too_small = d.points[p][1] == 1;
            CHECK(r.result.has_value() == !too_small);
            CHECK(r.error.empty() == !too_small);
            if (too_small) {
                CHECK(r.error.find("RoiTooSmall") != std::string::npos);
            }
        }
    }
    CHECK(one.row(0, 0).result->gpr_pct[0] == 100.0);
    CHECK(one.row(0, 2).result->mean_dose_diff_pct > 0.0);
    CHECK(one.row(0, 2).result->mean_dose_diff_pct <= 2.0 + 1e-12);

    const ResultTable three = run_design(centres, d, {}, 3);
    for (std::size_t r = 0; r < one.rows.size(); ++r) {
        CHECK(one.rows[r].error == three.rows[r].error);
        if (one.rows[r].result) {
            CHECK(one.rows[r].result->values() == three.rows[r].result->values());
        }
    }
}

TEST_CASE("synthetic centres") {
    const SyntheticCentreSpec spec{"s", kGrid, {10, 5, 0, 0, 0.2}, {}, {11, 2.0}, {RoiShape::ellipse, 6, 6, 0, 0}};
    const CentreDataset c = make_synthetic_centre(spec);
    CHECK(c.reference == synth_phantom(kGrid, spec.phantom));
    CHECK(c.evaluated == synth_phantom(kGrid, spec.phantom, spec.film_noise));
    CHECK(make_synthetic_centre(spec).evaluated == c.evaluated);

    SyntheticCentreSpec bad = spec;
    bad.distortion.sigma_scale = 0;
    CHECK(code_of([&] { make_synthetic_centre(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("demo ensemble") {
    const GridGeometry g{64, 64, 1, 1, -31.5, -31.5};
    const auto e = demo_ensemble(20240611, g);
    REQUIRE(e.size() == 9);
    for (std::size_t k = 0; k < 9; ++k) {
        CHECK(e[k].id == "c" + std::to_string(k + 1));
        CHECK(e[k].geometry == g);
    }
    auto same_but_noise = [](const SyntheticCentreSpec& x, const SyntheticCentreSpec& y) {
        return x.phantom.peak_dose_gy == y.phantom.peak_dose_gy && x.phantom.sigma_mm == y.phantom.sigma_mm &&
               x.distortion.shift_x_mm == y.distortion.shift_x_mm && x.roi == y.roi &&
               x.film_noise.seed != y.film_noise.seed;
    };
    CHECK(same_but_noise(e[0], e[6]));
    CHECK(same_but_noise(e[5], e[7]));
    CHECK_FALSE(same_but_noise(e[0], e[1]));
    CHECK(std::abs(e[1].distortion.shift_x_mm) > 1.0);
    CHECK(e[4].distortion.dose_bias_pct < -3.0);

    const auto again = demo_ensemble(20240611, g);
    for (std::size_t k = 0; k < 9; ++k) {
        CHECK(make_synthetic_centre(again[k]).evaluated == make_synthetic_centre(e[k]).evaluated);
    }
    CHECK(demo_ensemble(1, g)[2].phantom.sigma_mm != e[2].phantom.sigma_mm);
}

}  // TEST_SUITE

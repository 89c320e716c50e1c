#include "gamma_audit/design.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "gamma_audit/error.hpp"
#include "gamma_audit/parallel.hpp"
#include "gamma_audit/report.hpp"

namespace gamma_audit {

namespace {

constexpr std::array<std::string_view, kFactorCount> kFactorNames{
    "calibrated shape",         "reference shape",          "calibrated offset dosage",
    "calibrated offset x",      "calibrated offset y",      "reference offset x",
    "reference offset y",       "reference size",           "calibrated size",
};

std::size_t factor_slot(FactorId id) { return static_cast<std::size_t>(id) - 1; }

// Settings for one design point, starting from the centre's baseline.
struct PointSettings {
    RoiShape evaluated_shape;
    RoiShape reference_shape;
    double evaluated_size = 1.0;
    double reference_size = 1.0;
    Perturbation evaluated;
    Perturbation reference;
};

PointSettings settings_for(const CentreDataset& centre, std::span<const std::size_t> point,
                           std::span<const Factor> factors) {
    if (point.size() != factors.size()) {
        fail(ErrorCode::InvalidArgument, "design point has " + std::to_string(point.size()) + " entries for " +
                                             std::to_string(factors.size()) + " factors");
    }
    PointSettings s;
    s.evaluated_shape = centre.roi.shape;
    s.reference_shape = centre.roi.shape;
    for (std::size_t f = 0; f < factors.size(); ++f) {
        const Factor& factor = factors[f];
        if (point[f] >= factor.levels.size()) {
            fail(ErrorCode::InvalidArgument, "level index out of range for " + factor_code(factor.id));
        }
        const LevelValue& level = factor.levels[point[f]];
        if (is_shape_factor(factor.id)) {
            (factor.id == FactorId::F01 ? s.evaluated_shape : s.reference_shape) = std::get<RoiShape>(level);
            continue;
        }
        const double v = std::get<double>(level);
        switch (factor.id) {
        case FactorId::F03: s.evaluated.dose_offset_pct = v; break;
        case FactorId::F04: s.evaluated.shift_x_mm = v; break;
        case FactorId::F05: s.evaluated.shift_y_mm = v; break;
        case FactorId::F06: s.reference.shift_x_mm = v; break;
        case FactorId::F07: s.reference.shift_y_mm = v; break;
        case FactorId::F08: s.reference_size = v; break;
        case FactorId::F09: s.evaluated_size = v; break;
        default: break;
        }
    }
    return s;
}

RoiSpec resized(const RoiSpec& base, RoiShape shape, double size) {
    RoiSpec roi = base;
    roi.shape = shape;
    roi.half_width_mm = base.half_width_mm * size;
    roi.half_height_mm = base.half_height_mm * size;
    return roi;
}

bool is_zero(const Perturbation& p) {
    return p.dose_offset_pct == 0.0 && p.shift_x_mm == 0.0 && p.shift_y_mm == 0.0;
}

}  // namespace

std::string factor_code(FactorId id) {
    const auto n = static_cast<unsigned>(id);
    return std::string("F0") + static_cast<char>('0' + n);
}

std::string_view factor_name(FactorId id) noexcept { return kFactorNames[factor_slot(id)]; }

std::optional<FactorId> parse_factor_code(std::string_view code) noexcept {
    if (code.size() != 3 || code[0] != 'F' || code[1] != '0' || code[2] < '1' || code[2] > '9') {
        return std::nullopt;
    }
    return static_cast<FactorId>(code[2] - '0');
}

bool is_shape_factor(FactorId id) noexcept { return id == FactorId::F01 || id == FactorId::F02; }

std::string format_level(const LevelValue& level) {
    if (const auto* shape = std::get_if<RoiShape>(&level)) {
        return std::string(to_string(*shape));
    }
    return format_number(std::get<double>(level));
}

void Factor::validate() const {
    const std::string code = factor_code(id);
    if (levels.size() < 2) {
        fail(ErrorCode::EmptyFactor, code + " needs at least 2 levels");
    }
    for (std::size_t a = 0; a < levels.size(); ++a) {
        const bool shape = std::holds_alternative<RoiShape>(levels[a]);
        if (shape != is_shape_factor(id)) {
            fail(ErrorCode::InvalidArgument, code + (is_shape_factor(id) ? " levels must be shape names"
                                                                         : " levels must be numbers"));
        }
        if (!shape) {
            const double v = std::get<double>(levels[a]);
            if (!std::isfinite(v)) {
                fail(ErrorCode::InvalidArgument, code + " levels must be finite");
            }
            if ((id == FactorId::F08 || id == FactorId::F09) && !(v > 0.0)) {
                fail(ErrorCode::InvalidArgument, code + " size levels must be > 0");
            }
            if (id == FactorId::F03 && !(v > -100.0)) {
                fail(ErrorCode::InvalidArgument, code + " dose offsets must be > -100 %");
            }
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (levels[a] == levels[b]) {
                fail(ErrorCode::InvalidArgument, code + " has duplicate level " + format_level(levels[a]));
            }
        }
    }
}

std::vector<Factor> default_factors() {
    const std::vector<LevelValue> shapes{RoiShape::rectangle, RoiShape::ellipse};
    const std::vector<LevelValue> offsets{0.0, 1.0};
    const std::vector<LevelValue> sizes{1.0, 0.8};
    return {
        {FactorId::F01, shapes},  {FactorId::F02, shapes},  {FactorId::F03, {0.0, 2.0}},
        {FactorId::F04, offsets}, {FactorId::F05, offsets}, {FactorId::F06, offsets},
        {FactorId::F07, offsets}, {FactorId::F08, sizes},   {FactorId::F09, sizes},
    };
}

std::vector<std::size_t> FactorialDesign::level_counts() const {
    std::vector<std::size_t> counts;
    for (const auto& f : factors) {
        counts.push_back(f.levels.size());
    }
    return counts;
}

std::vector<std::size_t> ResultTable::level_counts() const {
    std::vector<std::size_t> counts;
    for (const auto& f : factors) {
        counts.push_back(f.levels.size());
    }
    return counts;
}

FactorialDesign full_factorial(std::vector<Factor> factors) {
    if (factors.empty()) {
        fail(ErrorCode::EmptyFactor, "design needs at least one factor");
    }
    for (std::size_t a = 0; a < factors.size(); ++a) {
        factors[a].validate();
        for (std::size_t b = 0; b < a; ++b) {
            if (factors[a].id == factors[b].id) {
                fail(ErrorCode::InvalidArgument, factor_code(factors[a].id) + " appears twice");
            }
        }
    }
    std::size_t total = 1;
    for (const auto& f : factors) {
        total *= f.levels.size();
    }

    FactorialDesign design;
    design.points.reserve(total);
    DesignPoint current(factors.size(), 0);
    for (std::size_t p = 0; p < total; ++p) {
        design.points.push_back(current);
        // Odometer increment, last factor fastest.
        for (std::size_t f = factors.size(); f-- > 0;) {
            if (++current[f] < factors[f].levels.size()) {
                break;
            }
            current[f] = 0;
        }
    }
    design.factors = std::move(factors);
    return design;
}

DesignPointInputs apply_design_point(const CentreDataset& centre, std::span<const std::size_t> point,
                                     std::span<const Factor> factors) {
    const PointSettings s = settings_for(centre, point, factors);

    const RoiSpec evaluated_roi = resized(centre.roi, s.evaluated_shape, s.evaluated_size);
    const RoiSpec reference_roi = resized(centre.roi, s.reference_shape, s.reference_size);

    DoseGrid evaluated = is_zero(s.evaluated) ? centre.evaluated : apply_perturbation(centre.evaluated, s.evaluated);
    DoseGrid reference = is_zero(s.reference) ? centre.reference : apply_perturbation(centre.reference, s.reference);

    Mask evaluated_mask = realize_roi(evaluated, evaluated_roi);
    Mask reference_mask = reference.geometry() == evaluated.geometry()
                              ? realize_roi(reference, reference_roi)
                              : realize_roi(evaluated.geometry(), reference_roi);
    Mask mask = evaluated_mask & reference_mask;
    if (mask.count() < kMinMaskNodes) {
        fail(ErrorCode::RoiTooSmall, "calibrated and reference ROIs share " + std::to_string(mask.count()) +
                                         " nodes, need at least " + std::to_string(kMinMaskNodes));
    }
    return {std::move(reference), std::move(evaluated), std::move(mask), evaluated_roi, reference_roi};
}

ResultTable run_design(std::span<const CentreDataset> centres, const FactorialDesign& design, const GammaOptions& opt,
                       unsigned workers) {
    opt.validate();
    ResultTable table;
    table.factors = design.factors;
    table.points = design.points;
    for (const auto& c : centres) {
        table.centre_ids.push_back(c.id);
    }
    const std::size_t n_points = design.points.size();
    table.rows.resize(centres.size() * n_points);

    parallel_for(table.rows.size(), workers, [&](std::size_t r) {
        ResultRow& row = table.rows[r];
        row.centre_index = r / n_points;
        row.point_index = r % n_points;
        try {
            const DesignPointInputs in =
                apply_design_point(centres[row.centre_index], design.points[row.point_index], design.factors);
            row.result = audit_outputs(in.reference, in.evaluated, in.mask, opt, 1);
        } catch (const AuditError& e) {
            row.error = e.what();
        }
    });
    return table;
}

CentreDataset make_synthetic_centre(const SyntheticCentreSpec& spec) {
    if (!(spec.distortion.sigma_scale > 0.0) || !(spec.distortion.dose_bias_pct > -100.0)) {
        fail(ErrorCode::InvalidArgument, "film distortion needs sigma_scale > 0 and dose bias > -100 %");
    }
    DoseGrid reference = synth_phantom(spec.geometry, spec.phantom);

    PhantomSpec film = spec.phantom;
    film.peak_dose_gy *= 1.0 + spec.distortion.dose_bias_pct / 100.0;
    film.background_gy *= 1.0 + spec.distortion.dose_bias_pct / 100.0;
    film.sigma_mm *= spec.distortion.sigma_scale;
    film.center_x_mm += spec.distortion.shift_x_mm;
    film.center_y_mm += spec.distortion.shift_y_mm;
    DoseGrid evaluated = synth_phantom(spec.geometry, film, spec.film_noise);

    spec.roi.validate();
    return {spec.id, std::move(reference), std::move(evaluated), spec.roi};
}

std::vector<SyntheticCentreSpec> demo_ensemble(std::uint64_t seed, const GridGeometry& geometry) {
    geometry.validate();
    std::mt19937_64 engine(seed);
    auto jitter = [&engine](double half_range) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        return half_range * (2.0 * u - 1.0);
    };

    const double cx = geometry.origin_x + geometry.extent_x() / 2.0;
    const double cy = geometry.origin_y + geometry.extent_y() / 2.0;
    const double field = std::min(geometry.extent_x(), geometry.extent_y());

    std::vector<SyntheticCentreSpec> centres;
    for (int k = 1; k <= 9; ++k) {
        SyntheticCentreSpec s;
        s.id = "c" + std::to_string(k);
        s.geometry = geometry;
        s.phantom.peak_dose_gy = 10.0 * (1.0 + jitter(0.05));
        s.phantom.sigma_mm = field * 0.14 * (1.0 + jitter(0.15));
        s.phantom.center_x_mm = cx + jitter(1.0);
        s.phantom.center_y_mm = cy + jitter(1.0);
        s.phantom.background_gy = 0.2;
        s.distortion.dose_bias_pct = jitter(1.0);
        s.distortion.shift_x_mm = jitter(0.3);
        s.distortion.shift_y_mm = jitter(0.3);
        s.film_noise = {seed * 1000u + static_cast<std::uint64_t>(k), 1.5};
        s.roi = {RoiShape::rectangle, field * 0.22, field * 0.22, cx, cy};
        centres.push_back(s);
    }

    // Near-twins share every parameter except the noise seed.
    auto twin = [&centres](std::size_t from, std::size_t to) {
        const std::string id = centres[to].id;
        const NoiseSpec noise = centres[to].film_noise;
        centres[to] = centres[from];
        centres[to].id = id;
        centres[to].film_noise = noise;
    };
    twin(0, 6);  // c1 / c7
    twin(5, 7);  // c6 / c8

    // Systematic film distortions.
    centres[1].distortion = {0.5, 1.6, -1.2, 0.85};   // c2: misregistered, narrowed
    centres[4].distortion = {-4.0, -0.4, 0.9, 1.25};  // c5: under-dosed, broadened
    return centres;
}

}  // namespace gamma_audit

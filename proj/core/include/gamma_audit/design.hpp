#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gamma_audit/dose_grid.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit {

/// Audit factors. "Calibrated" factors act on the evaluated (film) side,
/// "reference" factors on the planning-system side.
enum class FactorId : std::uint8_t {
    F01 = 1,  // calibrated ROI shape
    F02,      // reference ROI shape
    F03,      // calibrated dose offset, %
    F04,      // calibrated offset x, mm
    F05,      // calibrated offset y, mm
    F06,      // reference offset x, mm
    F07,      // reference offset y, mm
    F08,      // reference ROI size, fraction of baseline half extents
    F09,      // calibrated ROI size, fraction of baseline half extents
};

inline constexpr std::size_t kFactorCount = 9;

std::string factor_code(FactorId id);  // "F01".."F09"
std::string_view factor_name(FactorId id) noexcept;
std::optional<FactorId> parse_factor_code(std::string_view code) noexcept;
bool is_shape_factor(FactorId id) noexcept;

using LevelValue = std::variant<RoiShape, double>;

std::string format_level(const LevelValue& level);

struct Factor {
    FactorId id = FactorId::F01;
    std::vector<LevelValue> levels;

    /// Throws EmptyFactor for fewer than 2 levels, InvalidArgument for
    /// duplicate or ill-typed levels.
    void validate() const;
};

/// Two levels per factor: shapes {rectangle, ellipse}, sizes {1, 0.8},
/// dose offset {0, +2 %}, spatial offsets {0, +1 mm}.
std::vector<Factor> default_factors();

using DesignPoint = std::vector<std::size_t>;

struct FactorialDesign {
    std::vector<Factor> factors;
    std::vector<DesignPoint> points;

    std::vector<std::size_t> level_counts() const;
};

/// Full Cartesian product in lexicographic order, last factor fastest.
FactorialDesign full_factorial(std::vector<Factor> factors);

struct CentreDataset {
    std::string id;
    DoseGrid reference;
    DoseGrid evaluated;
    RoiSpec roi;
};

struct DesignPointInputs {
    DoseGrid reference;
    DoseGrid evaluated;
    Mask mask;
    RoiSpec evaluated_roi;
    RoiSpec reference_roi;
};

/// Applies one design point to a centre: ROI factors first, then the dose
/// offset, then the shifts. The metric mask is the intersection of the
/// calibrated-side and reference-side ROIs on the evaluated grid.
DesignPointInputs apply_design_point(const CentreDataset& centre, std::span<const std::size_t> point,
                                     std::span<const Factor> factors);

struct ResultRow {
    std::size_t centre_index = 0;
    std::size_t point_index = 0;
    std::optional<AuditResult> result;
    std::string error;  // empty on success
};

struct ResultTable {
    std::vector<Factor> factors;
    std::vector<DesignPoint> points;
    std::vector<std::string> centre_ids;
    std::vector<ResultRow> rows;  // centre-major, then design point

    const ResultRow& row(std::size_t centre, std::size_t point) const { return rows[centre * points.size() + point]; }
    std::vector<std::size_t> level_counts() const;
};

/// Evaluates every (centre, design point). Failed points become error rows.
/// Output is identical for any worker count.
ResultTable run_design(std::span<const CentreDataset> centres, const FactorialDesign& design,
                       const GammaOptions& opt = {}, unsigned workers = 1);

// Synthetic audit centres: the reference is a noise-free Gaussian dose blob,
// the evaluated ("film") plane the same blob with optional systematic
// distortion and seeded multiplicative noise.

struct FilmDistortion {
    double dose_bias_pct = 0.0;
    double shift_x_mm = 0.0;
    double shift_y_mm = 0.0;
    double sigma_scale = 1.0;
};

struct SyntheticCentreSpec {
    std::string id;
    GridGeometry geometry;
    PhantomSpec phantom;
    FilmDistortion distortion;
    NoiseSpec film_noise;
    RoiSpec roi;
};

CentreDataset make_synthetic_centre(const SyntheticCentreSpec& spec);

/// Nine-centre ensemble c1..c9 on the given geometry. c1/c7 and c6/c8 are
/// near-twins; c2 and c5 carry distinct systematic film distortions.
std::vector<SyntheticCentreSpec> demo_ensemble(std::uint64_t seed, const GridGeometry& geometry);

}  // namespace gamma_audit

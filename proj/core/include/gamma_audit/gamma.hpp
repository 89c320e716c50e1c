#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gamma_audit/dose_grid.hpp"

namespace gamma_audit {

/// Dose-difference criterion (% of global normalization dose) paired with a
/// distance-to-agreement criterion (mm).
struct GammaCriterion {
    double dose_pct = 3.0;
    double dist_mm = 2.0;

    void validate() const;
    friend bool operator==(const GammaCriterion&, const GammaCriterion&) = default;
};

inline constexpr GammaCriterion kGic1{5.0, 2.0};
inline constexpr GammaCriterion kGic2{3.0, 2.0};
inline constexpr GammaCriterion kGic3{2.0, 2.0};
inline constexpr GammaCriterion kGic4{5.0, 1.0};
inline constexpr std::array<GammaCriterion, 4> kGammaCriteria{kGic1, kGic2, kGic3, kGic4};

/// A gamma value counts as passing when gamma <= 1 + kPassTolerance. The slack
/// absorbs rounding on exact-threshold inputs such as a +5 % offset at 5 %.
inline constexpr double kPassTolerance = 1e-9;

/// The candidate step is the same for every criterion: lattice_dist_mm /
/// subsample_step_factor (0.1 mm by default, a tenth of the smallest standard
/// distance criterion). A shared lattice nests the candidate sets of criteria
/// with different distances, so gamma never increases when dist_mm grows.
struct GammaOptions {
    double search_radius_factor = 3.0;    // search radius = factor * dist_mm
    double subsample_step_factor = 10.0;  // candidate step = lattice_dist_mm / factor
    double lattice_dist_mm = 1.0;
    double low_dose_cutoff_pct = 10.0;    // of the normalization dose

    void validate() const;
};

/// Square sub-grid of candidate displacements inside the search disc, sorted
/// by distance (ties by row then column). Offsets are in units of `step_mm`.
struct CandidateSet {
    struct Offset {
        int a;
        int b;
        double dx_mm;
        double dy_mm;
        double dist_term;  // |offset|^2 / dist_mm^2
    };

    double step_mm = 0.0;
    double radius_mm = 0.0;
    int reach = 0;  // max |a|, |b|
    std::vector<Offset> offsets;
};

CandidateSet make_candidates(double dist_mm, const GammaOptions& opt);

/// Per-node gamma values aligned with the evaluated grid; NaN marks nodes that
/// were not evaluated (outside the mask, below the low-dose cutoff, or with
/// no reference dose available).
struct GammaMap {
    GridGeometry geometry;
    GammaCriterion criterion;
    std::vector<double> gamma;

    bool included(std::size_t flat) const noexcept;
    std::size_t included_count() const noexcept;
};

struct GammaStats {
    double gpr_pct = 0.0;
    double median_gamma = 0.0;
};

struct DoseDifferenceStats {
    double mean_pct = 0.0;
    double median_pct = 0.0;
};

enum class Metric : std::size_t {
    gpr_gic1,
    gpr_gic2,
    gpr_gic3,
    gpr_gic4,
    median_gamma_gic1,
    median_gamma_gic2,
    median_gamma_gic3,
    median_gamma_gic4,
    mean_dose_diff,
    median_dose_diff,
    dta,
    com_distance,
};

inline constexpr std::size_t kMetricCount = 12;

/// Column labels used in every export, in AuditResult order.
std::string_view metric_label(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view label) noexcept;
std::array<Metric, kMetricCount> all_metrics() noexcept;

/// The two metric families that exist once per gamma criterion.
enum class GicMetric { gpr, median_gamma };
std::string_view to_string(GicMetric kind) noexcept;
/// gic is 1-based (1..4).
Metric gic_metric(GicMetric kind, int gic);

/// The twelve outputs of one comparison, in fixed order.
struct AuditResult {
    std::array<double, 4> gpr_pct{};
    std::array<double, 4> median_gamma{};
    double mean_dose_diff_pct = 0.0;
    double median_dose_diff_pct = 0.0;
    double dta_mm = 0.0;
    double com_distance_mm = 0.0;

    double value(Metric m) const noexcept;
    std::array<double, kMetricCount> values() const noexcept;
};

/// Global gamma of `evaluated` against `reference`, evaluated on the nodes of
/// `mask` (aligned with the evaluated grid). Reference dose is bilinear.
GammaMap gamma_map(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask, const GammaCriterion& c,
                   const GammaOptions& opt = {}, unsigned workers = 1);

GammaStats gamma_stats(const GammaMap& map);

DoseDifferenceStats dose_difference_stats(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask);

/// Median per-node distance to agreement; nodes with no agreement inside the
/// search radius count as the radius. The candidate lattice follows
/// `dist_mm` exactly as gamma_map does (GIC1's 2 mm by default).
double dta_stat(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask, const GammaOptions& opt = {},
                double dist_mm = kGic1.dist_mm);

double com_distance(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask);

AuditResult audit_outputs(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask,
                          const GammaOptions& opt = {}, unsigned workers = 1);

/// Median with even counts averaged; the input is reordered.
double median_in_place(std::span<double> values);

}  // namespace gamma_audit

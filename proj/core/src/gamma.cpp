#include "gamma_audit/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "gamma_audit/error.hpp"
#include "gamma_audit/parallel.hpp"

namespace gamma_audit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kNodesPerTask = 128;

constexpr std::array<std::string_view, kMetricCount> kMetricLabels{
    "gpr_gic1",          "gpr_gic2",          "gpr_gic3",    "gpr_gic4",    "median_gamma_gic1", "median_gamma_gic2",
    "median_gamma_gic3", "median_gamma_gic4", "mean_dd_pct", "median_dd_pct", "dta_mm",          "com_mm",
};

// Evaluated nodes that take part in a comparison, with the reference dose
// sampled at each node position and the reference index coordinates of the
// node (the reference grid may have a different geometry).
struct Frame {
    std::vector<std::size_t> nodes;
    std::vector<double> ref_fi;
    std::vector<double> ref_fj;
    std::vector<double> ref_dose;
    std::vector<double> eval_dose;
    double normalization = 0.0;
};

Frame build_frame(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask, double cutoff_pct) {
    const auto& ge = evaluated.geometry();
    const auto& gr = reference.geometry();
    if (mask.nx() != ge.nx || mask.ny() != ge.ny) {
        fail(ErrorCode::GeometryMismatch, "mask is not aligned with the evaluated grid");
    }
    const double scale_x = ge.dx / gr.dx;
    const double scale_y = ge.dy / gr.dy;
    const double offset_x = (ge.origin_x - gr.origin_x) / gr.dx;
    const double offset_y = (ge.origin_y - gr.origin_y) / gr.dy;

    Frame all;
    for (std::size_t j = 0; j < ge.ny; ++j) {
        for (std::size_t i = 0; i < ge.nx; ++i) {
            const std::size_t flat = ge.index(i, j);
            if (!mask.contains(flat) || !evaluated.valid(flat)) {
                continue;
            }
            const double fi = offset_x + static_cast<double>(i) * scale_x;
            const double fj = offset_y + static_cast<double>(j) * scale_y;
            const auto dr = sample_bilinear_index(reference, fi, fj);
            if (!dr) {
                continue;
            }
            all.nodes.push_back(flat);
            all.ref_fi.push_back(fi);
            all.ref_fj.push_back(fj);
            all.ref_dose.push_back(*dr);
            all.eval_dose.push_back(evaluated.values()[flat]);
        }
    }
    if (all.nodes.empty()) {
        fail(ErrorCode::GeometryMismatch, "reference and evaluated grids share no node inside the mask");
    }
    all.normalization = *std::max_element(all.ref_dose.begin(), all.ref_dose.end());
    if (!(all.normalization > 0.0)) {
        fail(ErrorCode::EmptyMask, "reference dose is zero everywhere inside the mask");
    }
    if (cutoff_pct <= 0.0) {
        if (all.nodes.size() < kMinMaskNodes) {
            fail(ErrorCode::EmptyMask, std::to_string(all.nodes.size()) + " comparable nodes, need " +
                                           std::to_string(kMinMaskNodes));
        }
        return all;
    }

    const double threshold = cutoff_pct / 100.0 * all.normalization;
    Frame kept;
    kept.normalization = all.normalization;
    for (std::size_t k = 0; k < all.nodes.size(); ++k) {
        if (all.ref_dose[k] < threshold) {
            continue;
        }
        kept.nodes.push_back(all.nodes[k]);
        kept.ref_fi.push_back(all.ref_fi[k]);
        kept.ref_fj.push_back(all.ref_fj[k]);
        kept.ref_dose.push_back(all.ref_dose[k]);
        kept.eval_dose.push_back(all.eval_dose[k]);
    }
    if (kept.nodes.size() < kMinMaskNodes) {
        fail(ErrorCode::EmptyMask, std::to_string(kept.nodes.size()) + " nodes survive the low-dose cutoff, need " +
                                       std::to_string(kMinMaskNodes));
    }
    return kept;
}

}  // namespace

void GammaCriterion::validate() const {
    if (!(std::isfinite(dose_pct) && dose_pct > 0.0 && std::isfinite(dist_mm) && dist_mm > 0.0)) {
        fail(ErrorCode::InvalidArgument, "gamma criterion needs dose % > 0 and distance > 0");
    }
}

void GammaOptions::validate() const {
    if (!(std::isfinite(search_radius_factor) && search_radius_factor >= 1.0)) {
        fail(ErrorCode::InvalidArgument, "search_radius_factor must be >= 1");
    }
    if (!(std::isfinite(subsample_step_factor) && subsample_step_factor >= 2.0)) {
        fail(ErrorCode::InvalidArgument, "subsample_step_factor must be >= 2");
    }
    if (!(std::isfinite(lattice_dist_mm) && lattice_dist_mm > 0.0)) {
        fail(ErrorCode::InvalidArgument, "lattice_dist_mm must be > 0");
    }
    if (!(std::isfinite(low_dose_cutoff_pct) && low_dose_cutoff_pct >= 0.0 && low_dose_cutoff_pct < 100.0)) {
        fail(ErrorCode::InvalidArgument, "low_dose_cutoff_pct must be in [0, 100)");
    }
}

CandidateSet make_candidates(double dist_mm, const GammaOptions& opt) {
    opt.validate();
    if (!(std::isfinite(dist_mm) && dist_mm > 0.0)) {
        fail(ErrorCode::InvalidArgument, "distance criterion must be > 0");
    }
    CandidateSet set;
    set.step_mm = opt.lattice_dist_mm / opt.subsample_step_factor;
    set.radius_mm = opt.search_radius_factor * dist_mm;
    // Disc membership is decided in lattice units so it does not depend on
    // how the step rounds.
    const double reach = opt.search_radius_factor * opt.subsample_step_factor * (dist_mm / opt.lattice_dist_mm);
    const double reach_sq = reach * reach * (1.0 + 1e-12);
    set.reach = static_cast<int>(std::floor(reach + 1e-9));
    const double dist_sq = dist_mm * dist_mm;
    for (int b = -set.reach; b <= set.reach; ++b) {
        for (int a = -set.reach; a <= set.reach; ++a) {
            if (static_cast<double>(a * a + b * b) > reach_sq) {
                continue;
            }
            const double ox = a * set.step_mm;
            const double oy = b * set.step_mm;
            set.offsets.push_back({a, b, ox, oy, (ox * ox + oy * oy) / dist_sq});
        }
    }
    std::stable_sort(set.offsets.begin(), set.offsets.end(), [](const auto& l, const auto& r) {
        const int ll = l.a * l.a + l.b * l.b;
        const int rr = r.a * r.a + r.b * r.b;
        return ll < rr;
    });
    return set;
}

bool GammaMap::included(std::size_t flat) const noexcept { return !std::isnan(gamma[flat]); }

std::size_t GammaMap::included_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(gamma.begin(), gamma.end(), [](double g) { return !std::isnan(g); }));
}

std::string_view metric_label(Metric m) noexcept { return kMetricLabels[static_cast<std::size_t>(m)]; }

std::optional<Metric> parse_metric(std::string_view label) noexcept {
    for (std::size_t k = 0; k < kMetricCount; ++k) {
        if (kMetricLabels[k] == label) {
            return static_cast<Metric>(k);
        }
    }
    return std::nullopt;
}

std::array<Metric, kMetricCount> all_metrics() noexcept {
    std::array<Metric, kMetricCount> out{};
    for (std::size_t k = 0; k < kMetricCount; ++k) {
        out[k] = static_cast<Metric>(k);
    }
    return out;
}

std::string_view to_string(GicMetric kind) noexcept { return kind == GicMetric::gpr ? "gpr" : "median_gamma"; }

Metric gic_metric(GicMetric kind, int gic) {
    if (gic < 1 || gic > 4) {
        fail(ErrorCode::InvalidArgument, "GIC index must be 1..4");
    }
    const std::size_t base = kind == GicMetric::gpr ? 0 : 4;
    return static_cast<Metric>(base + static_cast<std::size_t>(gic - 1));
}

double AuditResult::value(Metric m) const noexcept { return values()[static_cast<std::size_t>(m)]; }

std::array<double, kMetricCount> AuditResult::values() const noexcept {
    return {gpr_pct[0],      gpr_pct[1],         gpr_pct[2],           gpr_pct[3],
            median_gamma[0], median_gamma[1],    median_gamma[2],      median_gamma[3],
            mean_dose_diff_pct, median_dose_diff_pct, dta_mm, com_distance_mm};
}

double median_in_place(std::span<double> values) {
    if (values.empty()) {
        fail(ErrorCode::EmptyMap, "median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) {
        return values[n / 2];
    }
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

GammaMap gamma_map(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask, const GammaCriterion& c,
                   const GammaOptions& opt, unsigned workers) {
    c.validate();
    const CandidateSet candidates = make_candidates(c.dist_mm, opt);
    const Frame frame = build_frame(reference, evaluated, mask, opt.low_dose_cutoff_pct);
    const auto& gr = reference.geometry();

    std::vector<double> offset_fi(candidates.offsets.size());
    std::vector<double> offset_fj(candidates.offsets.size());
    for (std::size_t k = 0; k < candidates.offsets.size(); ++k) {
        offset_fi[k] = candidates.offsets[k].dx_mm / gr.dx;
        offset_fj[k] = candidates.offsets[k].dy_mm / gr.dy;
    }
    const double dose_tol = c.dose_pct / 100.0 * frame.normalization;

    GammaMap map{evaluated.geometry(), c, std::vector<double>(evaluated.geometry().size(), kNaN)};
    const std::size_t n = frame.nodes.size();
    const std::size_t tasks = (n + kNodesPerTask - 1) / kNodesPerTask;
    parallel_for(tasks, workers, [&](std::size_t task) {
        const std::size_t end = std::min(n, (task + 1) * kNodesPerTask);
        for (std::size_t k = task * kNodesPerTask; k < end; ++k) {
            const double de = frame.eval_dose[k];
            double best = std::numeric_limits<double>::infinity();
            // Offsets are sorted by distance term, which bounds the gamma
            // function from below, so the scan can stop once it exceeds the
            // best value found.
            for (std::size_t q = 0; q < candidates.offsets.size(); ++q) {
                const double dist_term = candidates.offsets[q].dist_term;
                if (dist_term >= best) {
                    break;
                }
                const auto dr =
                    sample_bilinear_index(reference, frame.ref_fi[k] + offset_fi[q], frame.ref_fj[k] + offset_fj[q]);
                if (!dr) {
                    continue;
                }
                const double ratio = (*dr - de) / dose_tol;
                const double f = dist_term + ratio * ratio;
                if (f < best) {
                    best = f;
                }
            }
            map.gamma[frame.nodes[k]] = std::sqrt(best);
        }
    });
    return map;
}

GammaStats gamma_stats(const GammaMap& map) {
    std::vector<double> included;
    included.reserve(map.gamma.size());
    std::size_t pass = 0;
    for (double g : map.gamma) {
        if (std::isnan(g)) {
            continue;
        }
        included.push_back(g);
        if (g <= 1.0 + kPassTolerance) {
            ++pass;
        }
    }
    if (included.empty()) {
        fail(ErrorCode::EmptyMap, "gamma map has no included nodes");
    }
    GammaStats stats;
    stats.gpr_pct = 100.0 * static_cast<double>(pass) / static_cast<double>(included.size());
    stats.median_gamma = median_in_place(included);
    return stats;
}

DoseDifferenceStats dose_difference_stats(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask) {
    const Frame frame = build_frame(reference, evaluated, mask, 0.0);
    std::vector<double> diff(frame.nodes.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
        diff[k] = (frame.eval_dose[k] - frame.ref_dose[k]) * 100.0 / frame.normalization;
        sum += diff[k];
    }
    DoseDifferenceStats stats;
    stats.mean_pct = sum / static_cast<double>(diff.size());
    stats.median_pct = median_in_place(diff);
    return stats;
}

double dta_stat(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask, const GammaOptions& opt,
                double dist_mm) {
    const CandidateSet candidates = make_candidates(dist_mm, opt);
    const Frame frame = build_frame(reference, evaluated, mask, opt.low_dose_cutoff_pct);
    const auto& gr = reference.geometry();
    const double tol = 1e-6 * frame.normalization;
    const double h = candidates.step_mm;

    const int reach = candidates.reach;
    const std::size_t side = static_cast<std::size_t>(2 * reach + 1);
    std::vector<std::int32_t> slot_of(side * side, -1);  // lattice cell -> index in offsets
    for (std::size_t q = 0; q < candidates.offsets.size(); ++q) {
        const auto& o = candidates.offsets[q];
        slot_of[static_cast<std::size_t>(o.b + reach) * side + static_cast<std::size_t>(o.a + reach)] =
            static_cast<std::int32_t>(q);
    }
    std::vector<double> radius(candidates.offsets.size());
    for (std::size_t q = 0; q < radius.size(); ++q) {
        const auto& o = candidates.offsets[q];
        radius[q] = std::sqrt(o.dx_mm * o.dx_mm + o.dy_mm * o.dy_mm);
    }

    // Dose mismatch per candidate, computed lazily and memoized per node via
    // a generation stamp.
    std::vector<double> mismatch(candidates.offsets.size(), 0.0);
    std::vector<std::uint32_t> stamp(candidates.offsets.size(), 0);
    std::vector<double> per_node(frame.nodes.size());

    for (std::size_t k = 0; k < frame.nodes.size(); ++k) {
        const std::uint32_t gen = static_cast<std::uint32_t>(k + 1);
        const double de = frame.eval_dose[k];
        auto mismatch_at = [&](std::size_t q) {
            if (stamp[q] != gen) {
                stamp[q] = gen;
                const auto& o = candidates.offsets[q];
                const auto dr = sample_bilinear_index(reference, frame.ref_fi[k] + o.dx_mm / gr.dx,
                                                      frame.ref_fj[k] + o.dy_mm / gr.dy);
                mismatch[q] = dr ? *dr - de : kNaN;
            }
            return mismatch[q];
        };

        double best = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < candidates.offsets.size(); ++q) {
            if (radius[q] - h >= best) {
                break;
            }
            const double s0 = mismatch_at(q);
            if (std::isnan(s0)) {
                continue;
            }
            if (std::abs(s0) <= tol) {
                best = std::min(best, radius[q]);
                continue;
            }
            const auto& o = candidates.offsets[q];
            constexpr int kSteps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (const auto& step : kSteps) {
                const int na = o.a + step[0];
                const int nb = o.b + step[1];
                if (na < -reach || na > reach || nb < -reach || nb > reach) {
                    continue;
                }
                const std::int32_t slot =
                    slot_of[static_cast<std::size_t>(nb + reach) * side + static_cast<std::size_t>(na + reach)];
                if (slot < 0) {
                    continue;
                }
                const double s1 = mismatch_at(static_cast<std::size_t>(slot));
                if (std::isnan(s1) || !((s0 < 0.0 && s1 > 0.0) || (s0 > 0.0 && s1 < 0.0))) {
                    continue;
                }
                // Linear zero crossing on the edge between the two candidates.
                const auto& n1 = candidates.offsets[static_cast<std::size_t>(slot)];
                const double t = s0 / (s0 - s1);
                const double px = o.dx_mm + t * (n1.dx_mm - o.dx_mm);
                const double py = o.dy_mm + t * (n1.dy_mm - o.dy_mm);
                best = std::min(best, std::sqrt(px * px + py * py));
            }
        }
        per_node[k] = std::min(best, candidates.radius_mm);
    }
    return median_in_place(per_node);
}

double com_distance(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask) {
    const Frame frame = build_frame(reference, evaluated, mask, 0.0);
    const auto& ge = evaluated.geometry();
    // Centroids are accumulated in evaluated-grid index units; both share the
    // same node positions, so the difference is independent of the origin.
    double mass_r = 0.0, mass_e = 0.0;
    double ri = 0.0, rj = 0.0, ei = 0.0, ej = 0.0;
    for (std::size_t k = 0; k < frame.nodes.size(); ++k) {
        const double i = static_cast<double>(frame.nodes[k] % ge.nx);
        const double j = static_cast<double>(frame.nodes[k] / ge.nx);
        mass_r += frame.ref_dose[k];
        ri += frame.ref_dose[k] * i;
        rj += frame.ref_dose[k] * j;
        mass_e += frame.eval_dose[k];
        ei += frame.eval_dose[k] * i;
        ej += frame.eval_dose[k] * j;
    }
    if (!(mass_r > 0.0) || !(mass_e > 0.0)) {
        fail(ErrorCode::ZeroMass, "total in-mask dose is zero");
    }
    const double dx = (ei / mass_e - ri / mass_r) * ge.dx;
    const double dy = (ej / mass_e - rj / mass_r) * ge.dy;
    return std::sqrt(dx * dx + dy * dy);
}

AuditResult audit_outputs(const DoseGrid& reference, const DoseGrid& evaluated, const Mask& mask,
                          const GammaOptions& opt, unsigned workers) {
    opt.validate();
    AuditResult result;
    for (std::size_t g = 0; g < kGammaCriteria.size(); ++g) {
        const GammaStats stats = gamma_stats(gamma_map(reference, evaluated, mask, kGammaCriteria[g], opt, workers));
        result.gpr_pct[g] = stats.gpr_pct;
        result.median_gamma[g] = stats.median_gamma;
    }
    const DoseDifferenceStats dd = dose_difference_stats(reference, evaluated, mask);
    result.mean_dose_diff_pct = dd.mean_pct;
    result.median_dose_diff_pct = dd.median_pct;
    result.dta_mm = dta_stat(reference, evaluated, mask, opt, kGic1.dist_mm);
    result.com_distance_mm = com_distance(reference, evaluated, mask);
    return result;
}

}  // namespace gamma_audit

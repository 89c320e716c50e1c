#include "gamma_audit/dose_grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gamma_audit/error.hpp"

namespace gamma_audit {

namespace {

constexpr double kIndexSnap = 1e-10;
constexpr double kIndexSlack = 1e-9;
constexpr double kBoundaryTolerance = 1e-9;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Maps a fractional index onto (cell, weight). Returns false when outside
// [0, n-1] beyond the slack.
bool locate(double f, std::size_t n, std::size_t& cell, double& t) {
    if (!std::isfinite(f)) {
        return false;
    }
    const double last = static_cast<double>(n - 1);
    if (f < -kIndexSlack || f > last + kIndexSlack) {
        return false;
    }
    const double nearest = std::round(f);
    if (std::abs(f - nearest) <= kIndexSnap) {
        f = nearest;
    }
    f = std::clamp(f, 0.0, last);
    const double base = std::min(std::floor(f), last - 1.0);
    cell = static_cast<std::size_t>(base);
    t = f - base;
    return true;
}

}  // namespace

void GridGeometry::validate() const {
    if (nx < 2 || ny < 2) {
        fail(ErrorCode::InvalidArgument, "grid needs at least 2x2 nodes");
    }
    if (!finite_positive(dx) || !finite_positive(dy)) {
        fail(ErrorCode::InvalidArgument, "grid spacing must be finite and > 0");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        fail(ErrorCode::InvalidArgument, "grid origin must be finite");
    }
}

DoseGrid::DoseGrid(GridGeometry geometry, std::vector<double> values)
    : DoseGrid(geometry, std::move(values), std::vector<std::uint8_t>(geometry.nx * geometry.ny, 1)) {}

DoseGrid::DoseGrid(GridGeometry geometry, std::vector<double> values, std::vector<std::uint8_t> valid)
    : geometry_(geometry), values_(std::move(values)), valid_(std::move(valid)) {
    geometry_.validate();
    if (values_.size() != geometry_.size() || valid_.size() != geometry_.size()) {
        std::ostringstream msg;
        msg << "expected " << geometry_.size() << " values for a " << geometry_.nx << "x" << geometry_.ny
            << " grid, got " << values_.size();
        fail(ErrorCode::InvalidArgument, msg.str());
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k]) || values_[k] < 0.0) {
            fail(ErrorCode::InvalidArgument, "dose values must be finite and >= 0 (node " + std::to_string(k) + ")");
        }
        if (valid_[k] == 0) {
            values_[k] = 0.0;
        } else {
            valid_[k] = 1;
        }
    }
}

bool DoseGrid::all_valid() const noexcept {
    return std::all_of(valid_.begin(), valid_.end(), [](std::uint8_t v) { return v != 0; });
}

DoseGrid DoseGrid::scaled(double factor) const {
    if (!finite_positive(factor)) {
        fail(ErrorCode::InvalidArgument, "scale factor must be finite and > 0");
    }
    std::vector<double> out(values_);
    for (double& v : out) {
        v *= factor;
    }
    return DoseGrid(geometry_, std::move(out), valid_);
}

std::string_view to_string(RoiShape shape) noexcept {
    return shape == RoiShape::rectangle ? "rectangle" : "ellipse";
}

std::optional<RoiShape> parse_roi_shape(std::string_view name) noexcept {
    if (name == "rectangle") {
        return RoiShape::rectangle;
    }
    if (name == "ellipse") {
        return RoiShape::ellipse;
    }
    return std::nullopt;
}

void RoiSpec::validate() const {
    if (!finite_positive(half_width_mm) || !finite_positive(half_height_mm)) {
        fail(ErrorCode::InvalidArgument, "ROI half extents must be > 0");
    }
    if (!std::isfinite(center_x_mm) || !std::isfinite(center_y_mm)) {
        fail(ErrorCode::InvalidArgument, "ROI centre must be finite");
    }
}

void Perturbation::validate() const {
    if (!std::isfinite(dose_offset_pct) || dose_offset_pct <= -100.0) {
        fail(ErrorCode::InvalidArgument, "dose offset must be > -100 %");
    }
    if (!std::isfinite(shift_x_mm) || !std::isfinite(shift_y_mm)) {
        fail(ErrorCode::InvalidArgument, "shifts must be finite");
    }
}

Mask::Mask(std::size_t nx, std::size_t ny, std::vector<std::uint8_t> included)
    : nx_(nx), ny_(ny), included_(std::move(included)) {
    if (included_.size() != nx_ * ny_) {
        fail(ErrorCode::InvalidArgument, "mask size does not match its dimensions");
    }
    for (auto& b : included_) {
        b = b != 0 ? 1 : 0;
    }
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count(included_.begin(), included_.end(), std::uint8_t{1}));
}

Mask Mask::operator&(const Mask& other) const {
    if (nx_ != other.nx_ || ny_ != other.ny_) {
        fail(ErrorCode::GeometryMismatch, "cannot intersect masks of different dimensions");
    }
    std::vector<std::uint8_t> out(included_.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = included_[k] & other.included_[k];
    }
    return Mask(nx_, ny_, std::move(out));
}

std::optional<double> sample_bilinear_index(const DoseGrid& grid, double fi, double fj) noexcept {
    std::size_t i0 = 0;
    std::size_t j0 = 0;
    double tx = 0.0;
    double ty = 0.0;
    if (!locate(fi, grid.nx(), i0, tx) || !locate(fj, grid.ny(), j0, ty)) {
        return std::nullopt;
    }
    const bool use_x1 = tx != 0.0;
    const bool use_y1 = ty != 0.0;
    const bool use_x0 = tx != 1.0;
    const bool use_y0 = ty != 1.0;
    if ((use_x0 && use_y0 && !grid.valid(i0, j0)) || (use_x1 && use_y0 && !grid.valid(i0 + 1, j0)) ||
        (use_x0 && use_y1 && !grid.valid(i0, j0 + 1)) || (use_x1 && use_y1 && !grid.valid(i0 + 1, j0 + 1))) {
        return std::nullopt;
    }
    const double v00 = grid.at(i0, j0);
    const double v10 = grid.at(i0 + 1, j0);
    const double v01 = grid.at(i0, j0 + 1);
    const double v11 = grid.at(i0 + 1, j0 + 1);
    const double low = (1.0 - tx) * v00 + tx * v10;
    const double high = (1.0 - tx) * v01 + tx * v11;
    return (1.0 - ty) * low + ty * high;
}

double sample_bilinear(const DoseGrid& grid, double x_mm, double y_mm) {
    const auto& g = grid.geometry();
    const double fi = (x_mm - g.origin_x) / g.dx;
    const double fj = (y_mm - g.origin_y) / g.dy;
    const auto v = sample_bilinear_index(grid, fi, fj);
    if (!v) {
        std::ostringstream msg;
        msg << "(" << x_mm << ", " << y_mm << ") mm is outside the valid grid extent";
        fail(ErrorCode::OutOfBounds, msg.str());
    }
    return *v;
}

Mask realize_roi(const GridGeometry& geometry, const RoiSpec& roi) {
    geometry.validate();
    roi.validate();
    std::vector<std::uint8_t> bits(geometry.size(), 0);
    for (std::size_t j = 0; j < geometry.ny; ++j) {
        const double v = (geometry.y(j) - roi.center_y_mm) / roi.half_height_mm;
        for (std::size_t i = 0; i < geometry.nx; ++i) {
            const double u = (geometry.x(i) - roi.center_x_mm) / roi.half_width_mm;
            bool inside = false;
            if (roi.shape == RoiShape::rectangle) {
                inside = std::abs(u) <= 1.0 + kBoundaryTolerance && std::abs(v) <= 1.0 + kBoundaryTolerance;
            } else {
                inside = u * u + v * v <= 1.0 + kBoundaryTolerance;
            }
            bits[geometry.index(i, j)] = inside ? 1 : 0;
        }
    }
    return Mask(geometry.nx, geometry.ny, std::move(bits));
}

Mask realize_roi(const DoseGrid& grid, const RoiSpec& roi) {
    const auto& g = grid.geometry();
    Mask shape = realize_roi(g, roi);
    std::vector<std::uint8_t> bits(shape.bits().begin(), shape.bits().end());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        bits[k] &= grid.validity()[k];
    }
    Mask out(g.nx, g.ny, std::move(bits));
    if (out.count() < kMinMaskNodes) {
        fail(ErrorCode::RoiTooSmall, "ROI covers " + std::to_string(out.count()) + " valid nodes, need at least " +
                                         std::to_string(kMinMaskNodes));
    }
    return out;
}

DoseGrid apply_perturbation(const DoseGrid& grid, const Perturbation& p) {
    p.validate();
    const auto& g = grid.geometry();
    const double scale = 1.0 + p.dose_offset_pct / 100.0;
    const double di = p.shift_x_mm / g.dx;
    const double dj = p.shift_y_mm / g.dy;

    std::vector<double> values(g.size(), 0.0);
    std::vector<std::uint8_t> valid(g.size(), 0);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const auto v = sample_bilinear_index(grid, static_cast<double>(i) - di, static_cast<double>(j) - dj);
            if (v) {
                values[g.index(i, j)] = scale * *v;
                valid[g.index(i, j)] = 1;
            }
        }
    }
    return DoseGrid(g, std::move(values), std::move(valid));
}

DoseGrid synth_phantom(const GridGeometry& geometry, const PhantomSpec& spec, const NoiseSpec& noise) {
    geometry.validate();
    if (!finite_positive(spec.sigma_mm)) {
        fail(ErrorCode::InvalidArgument, "phantom sigma must be > 0");
    }
    if (!std::isfinite(spec.background_gy) || spec.background_gy < 0.0 || !(spec.peak_dose_gy > spec.background_gy)) {
        fail(ErrorCode::InvalidArgument, "phantom needs peak > background >= 0");
    }
    if (!std::isfinite(noise.amplitude_pct) || noise.amplitude_pct < 0.0 || noise.amplitude_pct >= 100.0) {
        fail(ErrorCode::InvalidArgument, "noise amplitude must be in [0, 100) %");
    }

    // mt19937_64 is fully specified by the standard; the uniform draw is built
    // from its raw output so the noise field is identical on every platform.
    std::mt19937_64 engine(noise.seed);
    const double two_sigma_sq = 2.0 * spec.sigma_mm * spec.sigma_mm;
    std::vector<double> values(geometry.size());
    for (std::size_t j = 0; j < geometry.ny; ++j) {
        const double ry = geometry.y(j) - spec.center_y_mm;
        for (std::size_t i = 0; i < geometry.nx; ++i) {
            const double rx = geometry.x(i) - spec.center_x_mm;
            double dose = spec.background_gy + spec.peak_dose_gy * std::exp(-(rx * rx + ry * ry) / two_sigma_sq);
            const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
            if (noise.amplitude_pct > 0.0) {
                dose *= 1.0 + noise.amplitude_pct / 100.0 * (2.0 * u - 1.0);
            }
            values[geometry.index(i, j)] = dose;
        }
    }
    return DoseGrid(geometry, std::move(values));
}

}  // namespace gamma_audit

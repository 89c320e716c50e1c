#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gamma_audit {

/// Node-centred uniform 2D geometry. Node (i, j) sits at
/// (origin_x + i * dx, origin_y + j * dy), all lengths in mm.
struct GridGeometry {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double dx = 1.0;
    double dy = 1.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    std::size_t size() const noexcept { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    double x(std::size_t i) const noexcept { return origin_x + static_cast<double>(i) * dx; }
    double y(std::size_t j) const noexcept { return origin_y + static_cast<double>(j) * dy; }
    double extent_x() const noexcept { return static_cast<double>(nx - 1) * dx; }
    double extent_y() const noexcept { return static_cast<double>(ny - 1) * dy; }

    /// Throws InvalidArgument unless nx, ny >= 2 and dx, dy > 0 (finite origin).
    void validate() const;

    friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Uniform 2D dose field in Gy, values stored row-major by y then x.
///
/// Nodes can be flagged invalid (for example after a shift moved their
/// pre-image off the grid); invalid nodes hold 0 and are excluded from every
/// mask and statistic downstream.
class DoseGrid {
public:
    DoseGrid(GridGeometry geometry, std::vector<double> values);
    DoseGrid(GridGeometry geometry, std::vector<double> values, std::vector<std::uint8_t> valid);

    const GridGeometry& geometry() const noexcept { return geometry_; }
    std::size_t nx() const noexcept { return geometry_.nx; }
    std::size_t ny() const noexcept { return geometry_.ny; }

    double at(std::size_t i, std::size_t j) const noexcept { return values_[geometry_.index(i, j)]; }
    bool valid(std::size_t i, std::size_t j) const noexcept { return valid_[geometry_.index(i, j)] != 0; }
    bool valid(std::size_t flat) const noexcept { return valid_[flat] != 0; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> validity() const noexcept { return valid_; }
    bool all_valid() const noexcept;

    /// Same geometry and validity, every value multiplied by `factor` (> 0).
    DoseGrid scaled(double factor) const;

    friend bool operator==(const DoseGrid&, const DoseGrid&) = default;

private:
    GridGeometry geometry_;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
};

enum class RoiShape { rectangle, ellipse };

std::string_view to_string(RoiShape shape) noexcept;
std::optional<RoiShape> parse_roi_shape(std::string_view name) noexcept;

struct RoiSpec {
    RoiShape shape = RoiShape::rectangle;
    double half_width_mm = 1.0;
    double half_height_mm = 1.0;
    double center_x_mm = 0.0;
    double center_y_mm = 0.0;

    void validate() const;
    friend bool operator==(const RoiSpec&, const RoiSpec&) = default;
};

struct Perturbation {
    double dose_offset_pct = 0.0;  // multiplicative: +2 means x1.02
    double shift_x_mm = 0.0;
    double shift_y_mm = 0.0;

    void validate() const;
};

inline constexpr std::size_t kMinMaskNodes = 16;

/// Boolean node selection aligned with a grid geometry.
class Mask {
public:
    Mask(std::size_t nx, std::size_t ny, std::vector<std::uint8_t> included);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    bool contains(std::size_t i, std::size_t j) const noexcept { return included_[j * nx_ + i] != 0; }
    bool contains(std::size_t flat) const noexcept { return included_[flat] != 0; }
    std::size_t count() const noexcept;
    std::span<const std::uint8_t> bits() const noexcept { return included_; }

    /// Node-wise AND; throws GeometryMismatch on differing dimensions.
    Mask operator&(const Mask& other) const;

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    std::size_t nx_;
    std::size_t ny_;
    std::vector<std::uint8_t> included_;
};

/// Bilinear interpolation at a fractional node index. Returns nullopt when the
/// position lies outside the grid or any node carrying non-zero weight is
/// invalid. Index positions within 1e-10 of a node snap to it, so node values
/// are reproduced exactly.
std::optional<double> sample_bilinear_index(const DoseGrid& grid, double fi, double fj) noexcept;

/// Bilinear dose at physical coordinates; throws OutOfBounds outside the
/// extent or on invalid neighbours.
double sample_bilinear(const DoseGrid& grid, double x_mm, double y_mm);

/// Nodes inside the ROI (boundary inclusive), ignoring validity.
Mask realize_roi(const GridGeometry& geometry, const RoiSpec& roi);

/// Valid nodes of `grid` inside the ROI. Throws RoiTooSmall below kMinMaskNodes.
Mask realize_roi(const DoseGrid& grid, const RoiSpec& roi);

/// value(node) = (1 + dose_offset_pct / 100) * input(node - shift). Nodes whose
/// pre-image leaves the input extent become invalid.
DoseGrid apply_perturbation(const DoseGrid& grid, const Perturbation& p);

struct PhantomSpec {
    double peak_dose_gy = 10.0;
    double sigma_mm = 5.0;
    double center_x_mm = 0.0;
    double center_y_mm = 0.0;
    double background_gy = 0.0;
};

struct NoiseSpec {
    std::uint64_t seed = 0;
    double amplitude_pct = 0.0;  // uniform multiplicative noise in [-a, a) percent
};

/// Isotropic Gaussian blob plus background with seeded multiplicative noise.
DoseGrid synth_phantom(const GridGeometry& geometry, const PhantomSpec& spec, const NoiseSpec& noise = {});

}  // namespace gamma_audit

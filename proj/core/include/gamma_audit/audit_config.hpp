#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gamma_audit/design.hpp"
#include "gamma_audit/gamma.hpp"
#include "gamma_audit/grid_io.hpp"

namespace gamma_audit {

// AUDIT v1 configuration (JSON):
// {
//   "format": "audit", "version": 1,
//   "gamma_options": {"search_radius_factor": 3, "subsample_step_factor": 10, "lattice_dist_mm": 1,
//                     "low_dose_cutoff_pct": 10},,
//   "factors": [{"id": "F01", "levels": ["rectangle", "ellipse"]}, {"id": "F03", "levels": [0, 2]}, ...],
//   "ensemble": {"seed": 7, "grid": {"nx": 64, "ny": 64, "dx_mm": 1, "dy_mm": 1, "origin_mm": [-31.5, -31.5]}},
//   "centres": [
//     {"id": "h1", "reference": "tps.json", "evaluated": "film.csv", "roi": {...}},
//     {"id": "s1", "synthetic": {"grid": {...}, "phantom": {...}, "distortion": {...}, "noise": {...}},
//      "roi": {"shape": "rectangle", "half_width_mm": 14, "half_height_mm": 14, "center_mm": [0, 0]}}
//   ]
// }
// Every section except "format"/"version" is optional, but the config must
// yield at least one centre. Relative grid paths resolve against the config's
// directory. Missing "factors" means the default 2^9 design.

struct FileCentreSpec {
    std::string id;
    std::filesystem::path reference;
    std::filesystem::path evaluated;
    RoiSpec roi;
};

struct EnsembleSpec {
    std::uint64_t seed = 0;
    GridGeometry geometry;
};

using CentreSource = std::variant<FileCentreSpec, SyntheticCentreSpec>;

struct AuditConfig {
    std::vector<Factor> factors;
    GammaOptions gamma;
    std::optional<EnsembleSpec> ensemble;
    std::vector<CentreSource> centres;
};

std::vector<Diagnostic> validate_audit_text(std::string_view text, const std::filesystem::path& base_dir = {});

/// Throws FormatError with line-anchored messages.
AuditConfig parse_audit_config(std::string_view text, const std::filesystem::path& base_dir,
                               const std::string& source = "<audit>");
AuditConfig load_audit_config(const std::filesystem::path& path);

/// Grid files referenced by the config, in centre order.
std::vector<std::filesystem::path> referenced_grid_files(const AuditConfig& config);

/// Materializes every centre. `seed_override` replaces the ensemble seed.
std::vector<CentreDataset> build_centres(const AuditConfig& config, std::optional<std::uint64_t> seed_override = {});

std::size_t centre_count(const AuditConfig& config);

}  // namespace gamma_audit

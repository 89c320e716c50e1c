#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gamma_audit/dose_grid.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit {

// DGRID v1: a JSON document
//   {"format": "dgrid", "version": 1, "nx": .., "ny": .., "dx_mm": .., "dy_mm": ..,
//    "origin_mm": [x, y], "unit": "Gy", "values": [row-major, y-major]}
// or a CSV matrix (ny lines of nx numbers) with the same header fields, minus
// "values", in a sidecar file named <matrix>.csv.json.

struct Diagnostic {
    std::size_t line = 0;  // 1-based; 0 when no location applies
    std::string message;
};

std::string format_diagnostic(const std::string& source, const Diagnostic& d);

/// Schema check of a DGRID JSON document. Dose grids (unit "Gy") need finite,
/// non-negative values; gamma maps (unit "gamma") may hold null.
std::vector<Diagnostic> validate_dgrid_text(std::string_view text);

/// Parses a dose grid (unit "Gy"). Throws FormatError with a line-anchored
/// message on any violation.
DoseGrid parse_dgrid(std::string_view text, const std::string& source = "<dgrid>");

/// Reads a `.json` DGRID document, or a `.csv` matrix with its sidecar.
DoseGrid read_dgrid(const std::filesystem::path& path);

std::vector<Diagnostic> validate_dgrid_file(const std::filesystem::path& path);

std::string dgrid_json(const DoseGrid& grid);

/// DGRID export of a gamma map: unit "gamma", null for excluded nodes.
std::string gamma_map_json(const GammaMap& map);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// 1-based line of the first occurrence of `"key"` in the text, or 0.
std::size_t line_of_key(std::string_view text, std::string_view key);
std::size_t line_of_offset(std::string_view text, std::size_t offset);

}  // namespace gamma_audit

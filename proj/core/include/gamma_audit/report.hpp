#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gamma_audit/anova.hpp"
#include "gamma_audit/correlation.hpp"
#include "gamma_audit/design.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

/// Literal written for undefined correlations / sensitivities in CSV.
inline constexpr const char* kUndefinedCsv = "NA";

/// The twelve outputs as a JSON object, keys in AuditResult order.
std::string audit_result_json(const AuditResult& result);

/// `centre,F01,...,F09,gpr_gic1,...,com_mm,error`, one line per row.
std::string results_csv(const ResultTable& table);

/// `centre,metric,F01,...,F10,error`.
std::string sensitivity_csv(const SensitivitySweep& sweep);
std::string sensitivity_json(const SensitivitySweep& sweep);

/// Label header row and column; NA for undefined entries.
std::string matrix_csv(const CorrelationMatrix& m);
/// {"labels": [...], "r": [[...]], "n_samples": [[...]]} with null for undefined.
std::string matrix_json(const CorrelationMatrix& m);

/// Report labels for a coefficient: "strong" for r >= 0.9, "poor" for r < 0.6,
/// otherwise "moderate".
inline constexpr double kStrongCorrelation = 0.9;
inline constexpr double kPoorCorrelation = 0.6;
std::string_view correlation_class(double r) noexcept;

/// `matrix,a,b,r,class`: every defined off-diagonal pair (a before b in label
/// order) of each named matrix, in the order given.
std::string correlation_summary_csv(const std::vector<std::pair<std::string, CorrelationMatrix>>& matrices);

/// ASCII (P2) grayscale: r = -1 maps to 0, +1 to 255; undefined cells are 0.
/// Every matrix cell becomes a cell_px x cell_px block.
std::string correlation_pgm(const CorrelationMatrix& m, std::size_t cell_px = 16);

/// ASCII (P2) grayscale: gamma 0 maps to 0, gamma >= 2 to 255; excluded
/// nodes are 0. Row 0 of the image is the grid's last y row.
std::string gamma_pgm(const GammaMap& map);

}  // namespace gamma_audit

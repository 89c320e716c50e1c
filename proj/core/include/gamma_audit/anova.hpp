#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamma_audit/design.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit {

struct AnovaTerm {
    double ss = 0.0;
    std::size_t df = 0;
};

/// Main-effects ANOVA over a complete factorial with one observation per
/// cell. The residual pools every interaction.
struct AnovaTable {
    std::vector<AnovaTerm> terms;  // one per factor, design order
    AnovaTerm residual;
    AnovaTerm total;
};

/// Type III (partial) sums of squares. Levels use sum-to-zero coding; the SS
/// of a term is SSE(model without the term) - SSE(full main-effects model).
///
/// Throws UnbalancedDesign unless the points form a complete factorial with
/// one observation per cell, SingularFit on a rank-deficient model matrix,
/// and NonFiniteResponse for NaN/inf responses.
AnovaTable type3_ss(std::span<const DesignPoint> points, std::span<const std::size_t> level_counts,
                    std::span<const double> response);

/// Share of total SS per factor, plus the pooled-interaction share.
struct SensitivityVector {
    std::vector<double> factors;
    double interactions = 0.0;

    std::vector<double> all() const;  // factors followed by interactions
};

/// Throws ZeroVariance when the total SS is zero.
SensitivityVector relative_sensitivities(const AnovaTable& anova);

struct SensitivityEntry {
    std::optional<SensitivityVector> value;
    std::string error;
};

struct SensitivitySweep {
    std::vector<std::string> centre_ids;
    std::vector<FactorId> factors;
    std::vector<Metric> metrics;
    std::vector<std::vector<SensitivityEntry>> entries;  // [centre][metric]

    const SensitivityEntry& at(std::size_t centre, Metric m) const;

    /// Factor codes in design order followed by "F10", the pooled interactions.
    std::vector<std::string> labels() const;
};

/// Type III sensitivities per (centre, metric). Failures (constant response,
/// failed design points) are recorded per entry.
SensitivitySweep sensitivity_sweep(const ResultTable& table, std::span<const Metric> metrics);

}  // namespace gamma_audit

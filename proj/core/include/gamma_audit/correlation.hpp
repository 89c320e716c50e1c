#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamma_audit/anova.hpp"
#include "gamma_audit/design.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit {

/// Sample Pearson coefficient, two-pass. Rounding excursions beyond +-1 by
/// less than 1e-12 are clamped.
///
/// Throws LengthMismatch, TooFewSamples (< 3) or ConstantInput.
double pearson(std::span<const double> x, std::span<const double> y);

/// Symmetric matrix of Pearson coefficients. Entries involving a constant
/// column are undefined (nullopt) rather than 0 or 1.
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;
    explicit CorrelationMatrix(std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::optional<double> r(std::size_t i, std::size_t j) const { return r_.at(i * size() + j); }
    std::size_t samples(std::size_t i, std::size_t j) const { return n_.at(i * size() + j); }
    void set(std::size_t i, std::size_t j, std::optional<double> value, std::size_t samples);

    bool defined(std::size_t i) const { return r(i, i).has_value(); }

private:
    std::vector<std::string> labels_;
    std::vector<std::optional<double>> r_;
    std::vector<std::size_t> n_;
};

/// Pairwise Pearson over equal-length columns (complete cases assumed).
CorrelationMatrix correlate_columns(std::vector<std::string> labels, const std::vector<std::vector<double>>& columns);

/// 12x12 metric correlation pooled over every successful row of every centre.
CorrelationMatrix metric_correlation(const ResultTable& table);

/// Centre-by-centre correlation of one GIC metric across design points.
/// Design points that failed for any centre are dropped for all centres.
CorrelationMatrix center_correlation(const ResultTable& table, GicMetric kind, int gic);

/// Overload for an arbitrary metric column.
CorrelationMatrix center_correlation(const ResultTable& table, Metric metric);

/// Throws MisalignedDesigns unless every centre has one row per design point
/// in design order.
void check_aligned(const ResultTable& table);

/// Factor-by-factor (F01..F09 plus pooled interactions F10) correlation of
/// relative sensitivities across centres. Throws TooFewSamples when fewer
/// than 3 centres have a defined sensitivity vector for the metric.
CorrelationMatrix factor_correlation(const SensitivitySweep& sweep, GicMetric kind, int gic);
CorrelationMatrix factor_correlation(const SensitivitySweep& sweep, Metric metric);

}  // namespace gamma_audit

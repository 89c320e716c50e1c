#include "gamma_audit/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gamma_audit/error.hpp"

namespace gamma_audit {

namespace {

constexpr double kClampSlack = 1e-12;

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::LengthMismatch, "pearson inputs differ in length");
    }
    if (x.size() < 3) {
        fail(ErrorCode::TooFewSamples, "pearson needs at least 3 samples");
    }
    if (is_constant(x) || is_constant(y)) {
        fail(ErrorCode::ConstantInput, "pearson input is constant");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double a = x[k] - mx;
        const double b = y[k] - my;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        fail(ErrorCode::ConstantInput, "pearson input has zero spread");
    }
    double r = sxy / std::sqrt(sxx * syy);
    if (std::abs(r) > 1.0) {
        if (std::abs(r) - 1.0 > kClampSlack) {
            throw std::logic_error("pearson coefficient out of range: " + std::to_string(r));
        }
        r = std::copysign(1.0, r);
    }
    return r;
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), r_(labels_.size() * labels_.size()), n_(labels_.size() * labels_.size(), 0) {}

void CorrelationMatrix::set(std::size_t i, std::size_t j, std::optional<double> value, std::size_t samples) {
    r_.at(i * size() + j) = value;
    r_.at(j * size() + i) = value;
    n_.at(i * size() + j) = samples;
    n_.at(j * size() + i) = samples;
}

CorrelationMatrix correlate_columns(std::vector<std::string> labels, const std::vector<std::vector<double>>& columns) {
    if (labels.size() != columns.size()) {
        fail(ErrorCode::LengthMismatch, "one label per column required");
    }
    CorrelationMatrix m(std::move(labels));
    const std::size_t k = columns.size();
    std::vector<bool> usable(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0 && columns[i].size() != columns[0].size()) {
            fail(ErrorCode::LengthMismatch, "columns differ in length");
        }
        usable[i] = columns[i].size() >= 3 && !is_constant(columns[i]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t n = columns[i].size();
        m.set(i, i, usable[i] ? std::optional<double>(1.0) : std::nullopt, n);
        for (std::size_t j = i + 1; j < k; ++j) {
            std::optional<double> r;
            if (usable[i] && usable[j]) {
                r = pearson(columns[i], columns[j]);
            }
            m.set(i, j, r, n);
        }
    }
    return m;
}

void check_aligned(const ResultTable& table) {
    if (table.rows.size() != table.centre_ids.size() * table.points.size()) {
        fail(ErrorCode::MisalignedDesigns, "result table does not hold one row per centre and design point");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.centre_index != r / table.points.size() || row.point_index != r % table.points.size()) {
            fail(ErrorCode::MisalignedDesigns, "row " + std::to_string(r) + " is out of design order");
        }
    }
}

CorrelationMatrix metric_correlation(const ResultTable& table) {
    std::vector<std::vector<double>> columns(kMetricCount);
    for (const auto& row : table.rows) {
        if (!row.result) {
            continue;
        }
        const auto values = row.result->values();
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            columns[m].push_back(values[m]);
        }
    }
    if (columns[0].size() < 3) {
        fail(ErrorCode::TooFewSamples, "metric correlation needs at least 3 successful rows");
    }
    std::vector<std::string> labels;
    for (Metric m : all_metrics()) {
        labels.emplace_back(metric_label(m));
    }
    return correlate_columns(std::move(labels), columns);
}

CorrelationMatrix center_correlation(const ResultTable& table, Metric metric) {
    check_aligned(table);
    const std::size_t centres = table.centre_ids.size();
    std::vector<std::size_t> complete;
    for (std::size_t p = 0; p < table.points.size(); ++p) {
        bool ok = true;
        for (std::size_t c = 0; c < centres && ok; ++c) {
            ok = table.row(c, p).result.has_value();
        }
        if (ok) {
            complete.push_back(p);
        }
    }
    std::vector<std::vector<double>> columns(centres);
    for (std::size_t c = 0; c < centres; ++c) {
        for (std::size_t p : complete) {
            columns[c].push_back(table.row(c, p).result->value(metric));
        }
    }
    return correlate_columns(table.centre_ids, columns);
}

CorrelationMatrix center_correlation(const ResultTable& table, GicMetric kind, int gic) {
    return center_correlation(table, gic_metric(kind, gic));
}

CorrelationMatrix factor_correlation(const SensitivitySweep& sweep, Metric metric) {
    std::vector<std::string> labels = sweep.labels();

    std::vector<std::vector<double>> columns(labels.size());
    for (std::size_t c = 0; c < sweep.centre_ids.size(); ++c) {
        const SensitivityEntry& e = sweep.at(c, metric);
        if (!e.value) {
            continue;
        }
        const std::vector<double> all = e.value->all();
        for (std::size_t k = 0; k < all.size(); ++k) {
            columns[k].push_back(all[k]);
        }
    }
    if (columns[0].size() < 3) {
        fail(ErrorCode::TooFewSamples, std::to_string(columns[0].size()) +
                                           " centres have defined sensitivities, need at least 3");
    }
    return correlate_columns(std::move(labels), columns);
}

CorrelationMatrix factor_correlation(const SensitivitySweep& sweep, GicMetric kind, int gic) {
    return factor_correlation(sweep, gic_metric(kind, gic));
}

}  // namespace gamma_audit

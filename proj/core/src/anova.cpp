#include "gamma_audit/anova.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

#include "gamma_audit/error.hpp"

namespace gamma_audit {

namespace {

void check_complete_balanced(std::span<const DesignPoint> points, std::span<const std::size_t> level_counts) {
    std::size_t cells = 1;
    for (std::size_t L : level_counts) {
        if (L < 2) {
            fail(ErrorCode::EmptyFactor, "every factor needs at least 2 levels");
        }
        cells *= L;
    }
    if (points.size() != cells) {
        fail(ErrorCode::UnbalancedDesign, std::to_string(points.size()) + " observations for " +
                                              std::to_string(cells) + " cells");
    }
    std::vector<std::uint8_t> seen(cells, 0);
    for (const auto& p : points) {
        if (p.size() != level_counts.size()) {
            fail(ErrorCode::UnbalancedDesign, "design point has the wrong number of factors");
        }
        std::size_t cell = 0;
        for (std::size_t f = 0; f < p.size(); ++f) {
            if (p[f] >= level_counts[f]) {
                fail(ErrorCode::UnbalancedDesign, "level index out of range");
            }
            cell = cell * level_counts[f] + p[f];
        }
        if (seen[cell]++ != 0) {
            fail(ErrorCode::UnbalancedDesign, "cell observed more than once");
        }
    }
}

// Intercept plus sum-to-zero columns for the factors in `keep`.
Eigen::MatrixXd model_matrix(std::span<const DesignPoint> points, std::span<const std::size_t> level_counts,
                             const std::vector<std::size_t>& keep) {
    std::size_t cols = 1;
    for (std::size_t f : keep) {
        cols += level_counts[f] - 1;
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < points.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        x(row, 0) = 1.0;
        Eigen::Index col = 1;
        for (std::size_t f : keep) {
            const std::size_t last = level_counts[f] - 1;
            const std::size_t level = points[r][f];
            for (std::size_t l = 0; l < last; ++l) {
                x(row, col + static_cast<Eigen::Index>(l)) = level == last ? -1.0 : (level == l ? 1.0 : 0.0);
            }
            col += static_cast<Eigen::Index>(last);
        }
    }
    return x;
}

// Least-squares fitted values of y on the columns of x.
Eigen::VectorXd fitted(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) {
        fail(ErrorCode::SingularFit, "model matrix has rank " + std::to_string(qr.rank()) + " < " +
                                         std::to_string(x.cols()) + " columns");
    }
    return x * qr.solve(y);
}

}  // namespace

AnovaTable type3_ss(std::span<const DesignPoint> points, std::span<const std::size_t> level_counts,
                    std::span<const double> response) {
    if (level_counts.empty()) {
        fail(ErrorCode::EmptyFactor, "ANOVA needs at least one factor");
    }
    if (response.size() != points.size()) {
        fail(ErrorCode::LengthMismatch, "response length differs from the number of design points");
    }
    for (double v : response) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::NonFiniteResponse, "response contains a non-finite value");
        }
    }
    check_complete_balanced(points, level_counts);

    const std::size_t n = points.size();
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        y(static_cast<Eigen::Index>(r)) = response[r];
    }

    AnovaTable table;
    table.total.df = n - 1;
    // A constant response is exactly variance-free; the mean of repeated
    // values need not round back to the value itself.
    if (std::all_of(response.begin(), response.end(), [&](double v) { return v == response.front(); })) {
        std::size_t df_terms = 0;
        for (std::size_t L : level_counts) {
            table.terms.push_back({0.0, L - 1});
            df_terms += L - 1;
        }
        table.residual = {0.0, table.total.df - df_terms};
        return table;
    }
    // Centring leaves every SS unchanged (the intercept absorbs the mean)
    // and keeps the fitted values small relative to the response.
    y.array() -= y.mean();
    table.total.ss = y.squaredNorm();

    std::vector<std::size_t> all(level_counts.size());
    for (std::size_t f = 0; f < all.size(); ++f) {
        all[f] = f;
    }
    const Eigen::VectorXd fit_full = fitted(model_matrix(points, level_counts, all), y);

    // SSE(reduced) - SSE(full) == |fit_full - fit_reduced|^2 for nested models.
    std::size_t df_terms = 0;
    for (std::size_t f = 0; f < level_counts.size(); ++f) {
        std::vector<std::size_t> reduced;
        for (std::size_t g : all) {
            if (g != f) {
                reduced.push_back(g);
            }
        }
        const Eigen::VectorXd fit_reduced = fitted(model_matrix(points, level_counts, reduced), y);
        table.terms.push_back({(fit_full - fit_reduced).squaredNorm(), level_counts[f] - 1});
        df_terms += level_counts[f] - 1;
    }
    if (df_terms > table.total.df) {
        fail(ErrorCode::SingularFit, "more model terms than observations");
    }
    table.residual = {(y - fit_full).squaredNorm(), table.total.df - df_terms};
    return table;
}

std::vector<double> SensitivityVector::all() const {
    std::vector<double> out(factors);
    out.push_back(interactions);
    return out;
}

SensitivityVector relative_sensitivities(const AnovaTable& anova) {
    if (!(anova.total.ss > 0.0)) {
        fail(ErrorCode::ZeroVariance, "response has zero total variance");
    }
    SensitivityVector s;
    for (const auto& term : anova.terms) {
        s.factors.push_back(term.ss / anova.total.ss);
    }
    s.interactions = anova.residual.ss / anova.total.ss;
    return s;
}

const SensitivityEntry& SensitivitySweep::at(std::size_t centre, Metric m) const {
    const auto it = std::find(metrics.begin(), metrics.end(), m);
    if (it == metrics.end()) {
        fail(ErrorCode::InvalidArgument, "metric " + std::string(metric_label(m)) + " is not part of the sweep");
    }
    return entries.at(centre)[static_cast<std::size_t>(it - metrics.begin())];
}

std::vector<std::string> SensitivitySweep::labels() const {
    std::vector<std::string> out;
    for (FactorId f : factors) {
        out.push_back(factor_code(f));
    }
    out.emplace_back("F10");
    return out;
}

SensitivitySweep sensitivity_sweep(const ResultTable& table, std::span<const Metric> metrics) {
    SensitivitySweep sweep;
    sweep.centre_ids = table.centre_ids;
    sweep.metrics.assign(metrics.begin(), metrics.end());
    for (const auto& f : table.factors) {
        sweep.factors.push_back(f.id);
    }
    const std::vector<std::size_t> counts = table.level_counts();

    for (std::size_t c = 0; c < table.centre_ids.size(); ++c) {
        std::vector<SensitivityEntry> row;
        std::vector<DesignPoint> points;
        std::vector<const AuditResult*> results;
        std::string failure;
        for (std::size_t p = 0; p < table.points.size(); ++p) {
            const ResultRow& r = table.row(c, p);
            if (!r.result) {
                failure = "design point " + std::to_string(p) + " failed: " + r.error;
                break;
            }
            points.push_back(table.points[p]);
            results.push_back(&*r.result);
        }
        for (Metric m : metrics) {
            SensitivityEntry entry;
            if (!failure.empty()) {
                entry.error = std::string(to_string(ErrorCode::UnbalancedDesign)) + ": " + failure;
                row.push_back(std::move(entry));
                continue;
            }
            std::vector<double> y;
            y.reserve(results.size());
            for (const AuditResult* res : results) {
                y.push_back(res->value(m));
            }
            try {
                entry.value = relative_sensitivities(type3_ss(points, counts, y));
            } catch (const AuditError& e) {
                entry.error = e.what();
            }
            row.push_back(std::move(entry));
        }
        sweep.entries.push_back(std::move(row));
    }
    return sweep;
}

}  // namespace gamma_audit

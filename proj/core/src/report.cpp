#include "gamma_audit/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace gamma_audit {

namespace {

using ordered_json = nlohmann::ordered_json;

// CSV fields never contain newlines here; quote only on commas or quotes.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') {
            out += '"';
        }
        out += ch == '\n' ? ' ' : ch;
    }
    return out + "\"";
}

std::string optional_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string(kUndefinedCsv);
}

unsigned char gray(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(t * 255.0));
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (value == 0.0) {
        return "0";  // also folds -0
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string audit_result_json(const AuditResult& result) {
    ordered_json j = ordered_json::object();
    const auto values = result.values();
    for (Metric m : all_metrics()) {
        j[std::string(metric_label(m))] = values[static_cast<std::size_t>(m)];
    }
    return j.dump(2) + "\n";
}

std::string results_csv(const ResultTable& table) {
    std::ostringstream out;
    out << "centre";
    for (const auto& f : table.factors) {
        out << ',' << factor_code(f.id);
    }
    for (Metric m : all_metrics()) {
        out << ',' << metric_label(m);
    }
    out << ",error\n";
    for (const auto& row : table.rows) {
        out << csv_field(table.centre_ids[row.centre_index]);
        const DesignPoint& point = table.points[row.point_index];
        for (std::size_t f = 0; f < table.factors.size(); ++f) {
            out << ',' << format_level(table.factors[f].levels[point[f]]);
        }
        for (std::size_t m = 0; m < kMetricCount; ++m) {
            out << ',';
            if (row.result) {
                out << format_number(row.result->values()[m]);
            } else {
                out << kUndefinedCsv;
            }
        }
        out << ',' << csv_field(row.error) << '\n';
    }
    return out.str();
}

std::string sensitivity_csv(const SensitivitySweep& sweep) {
    std::ostringstream out;
    out << "centre,metric";
    for (const auto& label : sweep.labels()) {
        out << ',' << label;
    }
    out << ",error\n";
    for (std::size_t c = 0; c < sweep.centre_ids.size(); ++c) {
        for (std::size_t m = 0; m < sweep.metrics.size(); ++m) {
            const SensitivityEntry& e = sweep.entries[c][m];
            out << csv_field(sweep.centre_ids[c]) << ',' << metric_label(sweep.metrics[m]);
            for (std::size_t k = 0; k <= sweep.factors.size(); ++k) {
                out << ',' << (e.value ? format_number(e.value->all()[k]) : std::string(kUndefinedCsv));
            }
            out << ',' << csv_field(e.error) << '\n';
        }
    }
    return out.str();
}

std::string sensitivity_json(const SensitivitySweep& sweep) {
    ordered_json labels = sweep.labels();
    ordered_json entries = ordered_json::array();
    for (std::size_t c = 0; c < sweep.centre_ids.size(); ++c) {
        for (std::size_t m = 0; m < sweep.metrics.size(); ++m) {
            const SensitivityEntry& e = sweep.entries[c][m];
            ordered_json item;
            item["centre"] = sweep.centre_ids[c];
            item["metric"] = std::string(metric_label(sweep.metrics[m]));
            if (e.value) {
                item["sensitivity"] = e.value->all();
                item["error"] = nullptr;
            } else {
                item["sensitivity"] = nullptr;
                item["error"] = e.error;
            }
            entries.push_back(std::move(item));
        }
    }
    ordered_json j;
    j["labels"] = std::move(labels);
    j["entries"] = std::move(entries);
    return j.dump(2) + "\n";
}

std::string matrix_csv(const CorrelationMatrix& m) {
    std::ostringstream out;
    out << "label";
    for (const auto& l : m.labels()) {
        out << ',' << csv_field(l);
    }
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << csv_field(m.labels()[i]);
        for (std::size_t j = 0; j < m.size(); ++j) {
            out << ',' << optional_number(m.r(i, j));
        }
        out << '\n';
    }
    return out.str();
}

std::string matrix_json(const CorrelationMatrix& m) {
    ordered_json r = ordered_json::array();
    ordered_json n = ordered_json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        ordered_json r_row = ordered_json::array();
        ordered_json n_row = ordered_json::array();
        for (std::size_t j = 0; j < m.size(); ++j) {
            const auto v = m.r(i, j);
            r_row.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
            n_row.push_back(m.samples(i, j));
        }
        r.push_back(std::move(r_row));
        n.push_back(std::move(n_row));
    }
    ordered_json j;
    j["labels"] = m.labels();
    j["r"] = std::move(r);
    j["n_samples"] = std::move(n);
    return j.dump(2) + "\n";
}

std::string_view correlation_class(double r) noexcept {
    if (r >= kStrongCorrelation) {
        return "strong";
    }
    return r < kPoorCorrelation ? "poor" : "moderate";
}

std::string correlation_summary_csv(const std::vector<std::pair<std::string, CorrelationMatrix>>& matrices) {
    std::ostringstream out;
    out << "matrix,a,b,r,class\n";
    for (const auto& [name, m] : matrices) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = i + 1; j < m.size(); ++j) {
                if (const auto r = m.r(i, j)) {
                    out << csv_field(name) << ',' << csv_field(m.labels()[i]) << ',' << csv_field(m.labels()[j])
                        << ',' << format_number(*r) << ',' << correlation_class(*r) << '\n';
                }
            }
        }
    }
    return out.str();
}

std::string correlation_pgm(const CorrelationMatrix& m, std::size_t cell_px) {
    const std::size_t side = m.size() * cell_px;
    std::ostringstream out;
    out << "P2\n" << side << ' ' << side << "\n255\n";
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const auto r = m.r(y / cell_px, x / cell_px);
            out << static_cast<int>(r ? gray((*r + 1.0) / 2.0) : 0) << (x + 1 < side ? ' ' : '\n');
        }
    }
    return out.str();
}

std::string gamma_pgm(const GammaMap& map) {
    const auto& g = map.geometry;
    std::ostringstream out;
    out << "P2\n" << g.nx << ' ' << g.ny << "\n255\n";
    for (std::size_t row = 0; row < g.ny; ++row) {
        const std::size_t j = g.ny - 1 - row;
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double v = map.gamma[g.index(i, j)];
            out << static_cast<int>(std::isnan(v) ? 0 : gray(v / 2.0)) << (i + 1 < g.nx ? ' ' : '\n');
        }
    }
    return out.str();
}

}  // namespace gamma_audit

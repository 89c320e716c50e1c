#include "gamma_audit/grid_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "gamma_audit/error.hpp"
#include "json.hpp"

namespace gamma_audit {

namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxValueDiagnostics = 5;

struct Header {
    GridGeometry geometry;
    std::string unit;
};

void check_header(const json& doc, std::string_view text, bool expect_values, Header& header,
                  std::vector<Diagnostic>& out) {
    auto add = [&](std::string_view key, std::string msg) { out.push_back({line_of_key(text, key), std::move(msg)}); };

    if (!doc.is_object()) {
        out.push_back({1, "document must be a JSON object"});
        return;
    }
    if (!doc.contains("format") || doc["format"] != "dgrid") {
        add("format", "format must be \"dgrid\"");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer()) {
        add("version", "version must be an integer");
    } else if (doc["version"].get<long long>() != 1) {
        add("version", "unsupported version " + doc["version"].dump() + " (this reader understands version 1)");
    }

    auto read_count = [&](const char* key, std::size_t& dst) {
        if (!doc.contains(key) || !doc[key].is_number_integer()) {
            add(key, std::string(key) + " must be an integer");
            return;
        }
        const long long v = doc[key].get<long long>();
        if (v < 2) {
            add(key, std::string(key) + " must be >= 2, got " + std::to_string(v));
            return;
        }
        dst = static_cast<std::size_t>(v);
    };
    auto read_spacing = [&](const char* key, double& dst) {
        if (!doc.contains(key) || !doc[key].is_number()) {
            add(key, std::string(key) + " must be a number");
            return;
        }
        const double v = doc[key].get<double>();
        if (!(std::isfinite(v) && v > 0.0)) {
            add(key, std::string(key) + " must be > 0, got " + doc[key].dump());
            return;
        }
        dst = v;
    };
    read_count("nx", header.geometry.nx);
    read_count("ny", header.geometry.ny);
    read_spacing("dx_mm", header.geometry.dx);
    read_spacing("dy_mm", header.geometry.dy);

    const bool origin_ok = doc.contains("origin_mm") && doc["origin_mm"].is_array() && doc["origin_mm"].size() == 2 &&
                           doc["origin_mm"][0].is_number() && doc["origin_mm"][1].is_number();
    if (!origin_ok) {
        add("origin_mm", "origin_mm must be an array of two numbers");
    } else {
        header.geometry.origin_x = doc["origin_mm"][0].get<double>();
        header.geometry.origin_y = doc["origin_mm"][1].get<double>();
    }

    if (!doc.contains("unit") || !doc["unit"].is_string() ||
        (doc["unit"] != "Gy" && doc["unit"] != "gamma")) {
        add("unit", "unit must be \"Gy\" or \"gamma\"");
    } else {
        header.unit = doc["unit"].get<std::string>();
    }

    if (!expect_values) {
        if (doc.contains("values")) {
            add("values", "sidecar headers must not carry values");
        }
        return;
    }
    if (!doc.contains("values") || !doc["values"].is_array()) {
        add("values", "values must be an array");
        return;
    }
    const auto& values = doc["values"];
    const std::size_t expected = header.geometry.nx * header.geometry.ny;
    if (expected != 0 && values.size() != expected) {
        add("values", "values has " + std::to_string(values.size()) + " entries, expected nx*ny = " +
                          std::to_string(expected));
    }
    std::size_t reported = 0;
    for (std::size_t k = 0; k < values.size() && reported < kMaxValueDiagnostics; ++k) {
        const auto& v = values[k];
        if (v.is_null() && header.unit == "gamma") {
            continue;
        }
        if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() < 0.0) {
            add("values", "values[" + std::to_string(k) + "] must be a finite number >= 0");
            ++reported;
        }
    }
}

std::vector<Diagnostic> check_document(std::string_view text, bool expect_values, Header& header, json& doc) {
    std::vector<Diagnostic> out;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        out.push_back({line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what()});
        return out;
    }
    check_header(doc, text, expect_values, header, out);
    return out;
}

[[noreturn]] void throw_format(const std::string& source, const std::vector<Diagnostic>& diags) {
    std::string msg;
    for (const auto& d : diags) {
        msg += (msg.empty() ? "" : "; ") + format_diagnostic(source, d);
    }
    fail(ErrorCode::FormatError, msg);
}

std::filesystem::path sidecar_of(const std::filesystem::path& csv) {
    return std::filesystem::path(csv.string() + ".json");
}

std::vector<double> parse_csv_matrix(std::string_view text, std::size_t nx, std::size_t ny,
                                     std::vector<Diagnostic>& diags) {
    std::vector<double> values;
    values.reserve(nx * ny);
    std::size_t line_no = 0;
    std::size_t rows = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        std::size_t cols = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                comma = line.size();
            }
            std::string_view field = line.substr(start, comma - start);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v) || v < 0.0) {
                diags.push_back({line_no, "field " + std::to_string(cols + 1) + " is not a finite number >= 0"});
                return {};
            }
            values.push_back(v);
            ++cols;
            start = comma + 1;
        }
        if (cols != nx) {
            diags.push_back({line_no, "row has " + std::to_string(cols) + " fields, expected nx = " + std::to_string(nx)});
            return {};
        }
        ++rows;
    }
    if (rows != ny) {
        diags.push_back({line_no, "matrix has " + std::to_string(rows) + " rows, expected ny = " + std::to_string(ny)});
        return {};
    }
    return values;
}

// Loads a CSV matrix and its sidecar header; violations go to `diags`.
std::optional<DoseGrid> load_csv_grid(const std::filesystem::path& path, std::vector<Diagnostic>& diags,
                                      std::string& source) {
    const auto header_path = sidecar_of(path);
    source = path.string();
    if (!std::filesystem::exists(header_path)) {
        diags.push_back({0, "CSV grids need a sidecar header " + header_path.string()});
        return std::nullopt;
    }
    const std::string header_text = read_text_file(header_path);
    Header header;
    json doc;
    diags = check_document(header_text, false, header, doc);
    if (diags.empty() && header.unit != "Gy") {
        diags.push_back({line_of_key(header_text, "unit"), "CSV dose grids must use unit \"Gy\""});
    }
    if (!diags.empty()) {
        source = header_path.string();
        return std::nullopt;
    }
    std::vector<double> values = parse_csv_matrix(read_text_file(path), header.geometry.nx, header.geometry.ny, diags);
    if (!diags.empty()) {
        return std::nullopt;
    }
    return DoseGrid(header.geometry, std::move(values));
}

void append_number(std::string& out, double v) { out += json(v).dump(); }

std::string grid_document(const GridGeometry& g, std::string_view unit, const std::vector<double>& values) {
    std::string out = "{\n";
    out += "  \"format\": \"dgrid\",\n  \"version\": 1,\n";
    out += "  \"nx\": " + std::to_string(g.nx) + ",\n  \"ny\": " + std::to_string(g.ny) + ",\n";
    out += "  \"dx_mm\": ";
    append_number(out, g.dx);
    out += ",\n  \"dy_mm\": ";
    append_number(out, g.dy);
    out += ",\n  \"origin_mm\": [";
    append_number(out, g.origin_x);
    out += ", ";
    append_number(out, g.origin_y);
    out += "],\n  \"unit\": \"" + std::string(unit) + "\",\n  \"values\": [\n";
    for (std::size_t j = 0; j < g.ny; ++j) {
        out += "    ";
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double v = values[g.index(i, j)];
            if (std::isnan(v)) {
                out += "null";
            } else {
                append_number(out, v);
            }
            if (i + 1 < g.nx || j + 1 < g.ny) {
                out += i + 1 < g.nx ? ", " : ",";
            }
        }
        out += "\n";
    }
    out += "  ]\n}\n";
    return out;
}

}  // namespace

std::string format_diagnostic(const std::string& source, const Diagnostic& d) {
    if (d.line == 0) {
        return source + ": " + d.message;
    }
    return source + ":" + std::to_string(d.line) + ": " + d.message;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1;
    for (std::size_t k = 0; k < offset; ++k) {
        if (text[k] == '\n') {
            ++line;
        }
    }
    return line;
}

std::size_t line_of_key(std::string_view text, std::string_view key) {
    const std::string quoted = "\"" + std::string(key) + "\"";
    const std::size_t at = text.find(quoted);
    return at == std::string_view::npos ? 0 : line_of_offset(text, at);
}

std::vector<Diagnostic> validate_dgrid_text(std::string_view text) {
    Header header;
    json doc;
    return check_document(text, true, header, doc);
}

DoseGrid parse_dgrid(std::string_view text, const std::string& source) {
    Header header;
    json doc;
    auto diags = check_document(text, true, header, doc);
    if (diags.empty() && header.unit != "Gy") {
        diags.push_back({line_of_key(text, "unit"), "dose grids must use unit \"Gy\""});
    }
    if (!diags.empty()) {
        throw_format(source, diags);
    }
    std::vector<double> values = doc["values"].get<std::vector<double>>();
    return DoseGrid(header.geometry, std::move(values));
}

DoseGrid read_dgrid(const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        std::vector<Diagnostic> diags;
        std::string source;
        auto grid = load_csv_grid(path, diags, source);
        if (!grid) {
            throw_format(source, diags);
        }
        return std::move(*grid);
    }
    return parse_dgrid(read_text_file(path), path.string());
}

std::vector<Diagnostic> validate_dgrid_file(const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        std::vector<Diagnostic> diags;
        std::string source;
        load_csv_grid(path, diags, source);
        return diags;
    }
    return validate_dgrid_text(read_text_file(path));
}

std::string dgrid_json(const DoseGrid& grid) {
    const auto values = grid.values();
    std::vector<double> out(values.begin(), values.end());
    return grid_document(grid.geometry(), "Gy", out);
}

std::string gamma_map_json(const GammaMap& map) { return grid_document(map.geometry, "gamma", map.gamma); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gamma_audit

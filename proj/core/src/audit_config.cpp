#include "gamma_audit/audit_config.hpp"

#include <cmath>
#include <set>

#include "gamma_audit/error.hpp"
#include "json.hpp"

namespace gamma_audit {

namespace {

using json = nlohmann::json;

// Walks a parsed config and collects every diagnostic instead of throwing.
class ConfigReader {
public:
    ConfigReader(std::string_view text, std::filesystem::path base_dir) : text_(text), base_(std::move(base_dir)) {}

    std::vector<Diagnostic> diagnostics;

    AuditConfig read(const json& doc) {
        AuditConfig cfg;
        if (!doc.is_object()) {
            diagnostics.push_back({1, "config must be a JSON object"});
            return cfg;
        }
        if (!doc.contains("format") || doc["format"] != "audit") {
            report("format", "format must be \"audit\"");
        }
        if (!doc.contains("version") || !doc["version"].is_number_integer()) {
            report("version", "version must be an integer");
        } else if (doc["version"].get<long long>() != 1) {
            report("version", "unsupported version " + doc["version"].dump() + " (this reader understands version 1)");
        }
        for (const auto& item : doc.items()) {
            if (item.key() != "format" && item.key() != "version" && item.key() != "gamma_options" &&
                item.key() != "factors" && item.key() != "ensemble" && item.key() != "centres") {
                report(item.key(), "unknown field \"" + item.key() + "\"");
            }
        }

        if (doc.contains("gamma_options")) {
            read_gamma(doc["gamma_options"], cfg.gamma);
        }
        cfg.factors = doc.contains("factors") ? read_factors(doc["factors"]) : default_factors();
        if (doc.contains("ensemble")) {
            cfg.ensemble = read_ensemble(doc["ensemble"]);
        }
        if (doc.contains("centres")) {
            read_centres(doc["centres"], cfg.centres);
        }
        if (!cfg.ensemble && cfg.centres.empty() && diagnostics.empty()) {
            diagnostics.push_back({1, "config defines no centres (need \"ensemble\" or \"centres\")"});
        }
        return cfg;
    }

private:
    std::string_view text_;
    std::filesystem::path base_;

    void report(std::string_view key, std::string message) {
        diagnostics.push_back({line_of_key(text_, key), std::move(message)});
    }

    std::optional<double> number(const json& obj, const char* key, const std::string& ctx, bool required) {
        if (!obj.contains(key)) {
            if (required) {
                report(key, ctx + key + " is required");
            }
            return std::nullopt;
        }
        if (!obj[key].is_number() || !std::isfinite(obj[key].get<double>())) {
            report(key, ctx + key + " must be a finite number");
            return std::nullopt;
        }
        return obj[key].get<double>();
    }

    bool object(const json& v, const std::string& key, const std::string& ctx) {
        if (!v.is_object()) {
            report(key, ctx + key + " must be an object");
            return false;
        }
        return true;
    }

    std::optional<std::pair<double, double>> pair(const json& obj, const char* key, const std::string& ctx) {
        if (!obj.contains(key) || !obj[key].is_array() || obj[key].size() != 2 || !obj[key][0].is_number() ||
            !obj[key][1].is_number()) {
            report(key, ctx + key + " must be an array of two numbers");
            return std::nullopt;
        }
        return std::pair{obj[key][0].get<double>(), obj[key][1].get<double>()};
    }

    void read_gamma(const json& g, GammaOptions& opt) {
        if (!object(g, "gamma_options", "")) {
            return;
        }
        const std::string ctx = "gamma_options.";
        if (auto v = number(g, "search_radius_factor", ctx, false)) {
            opt.search_radius_factor = *v;
        }
        if (auto v = number(g, "subsample_step_factor", ctx, false)) {
            opt.subsample_step_factor = *v;
        }
        if (auto v = number(g, "lattice_dist_mm", ctx, false)) {
            opt.lattice_dist_mm = *v;
        }
        if (auto v = number(g, "low_dose_cutoff_pct", ctx, false)) {
            opt.low_dose_cutoff_pct = *v;
        }
        try {
            opt.validate();
        } catch (const AuditError& e) {
            report("gamma_options", e.what());
        }
    }

    std::vector<Factor> read_factors(const json& arr) {
        std::vector<Factor> out;
        if (!arr.is_array() || arr.empty()) {
            report("factors", "factors must be a non-empty array");
            return out;
        }
        std::set<FactorId> seen;
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string ctx = "factors[" + std::to_string(k) + "].";
            const json& f = arr[k];
            if (!object(f, "factors", ctx)) {
                continue;
            }
            std::optional<FactorId> id;
            if (f.contains("id") && f["id"].is_string()) {
                id = parse_factor_code(f["id"].get<std::string>());
            }
            if (!id) {
                report("id", ctx + "id must be one of F01..F09");
                continue;
            }
            if (!seen.insert(*id).second) {
                report("id", ctx + "id " + factor_code(*id) + " listed twice");
                continue;
            }
            if (!f.contains("levels") || !f["levels"].is_array()) {
                report("levels", ctx + "levels must be an array");
                continue;
            }
            Factor factor{*id, {}};
            bool ok = true;
            for (const auto& level : f["levels"]) {
                if (is_shape_factor(*id)) {
                    const auto shape = level.is_string() ? parse_roi_shape(level.get<std::string>()) : std::nullopt;
                    if (!shape) {
                        report("levels", ctx + "levels must be \"rectangle\" or \"ellipse\"");
                        ok = false;
                        break;
                    }
                    factor.levels.emplace_back(*shape);
                } else {
                    if (!level.is_number()) {
                        report("levels", ctx + "levels must be numbers");
                        ok = false;
                        break;
                    }
                    factor.levels.emplace_back(level.get<double>());
                }
            }
            if (!ok) {
                continue;
            }
            try {
                factor.validate();
                out.push_back(std::move(factor));
            } catch (const AuditError& e) {
                report("levels", ctx + e.what());
            }
        }
        return out;
    }

    std::optional<GridGeometry> read_grid(const json& g, const std::string& ctx) {
        if (!object(g, "grid", ctx)) {
            return std::nullopt;
        }
        const std::string c = ctx + "grid.";
        GridGeometry geo;
        bool ok = true;
        for (const char* key : {"nx", "ny"}) {
            if (!g.contains(key) || !g[key].is_number_integer() || g[key].get<long long>() < 2) {
                report(key, c + key + " must be an integer >= 2");
                ok = false;
            }
        }
        const auto dx = number(g, "dx_mm", c, true);
        const auto dy = number(g, "dy_mm", c, true);
        const auto origin = pair(g, "origin_mm", c);
        if (!ok || !dx || !dy || !origin) {
            return std::nullopt;
        }
        geo.nx = g["nx"].get<std::size_t>();
        geo.ny = g["ny"].get<std::size_t>();
        geo.dx = *dx;
        geo.dy = *dy;
        geo.origin_x = origin->first;
        geo.origin_y = origin->second;
        try {
            geo.validate();
        } catch (const AuditError& e) {
            report("dx_mm", c + e.what());
            return std::nullopt;
        }
        return geo;
    }

    std::optional<std::uint64_t> seed(const json& obj, const std::string& ctx) {
        if (!obj.contains("seed") || !obj["seed"].is_number_unsigned()) {
            report("seed", ctx + "seed must be a non-negative integer");
            return std::nullopt;
        }
        return obj["seed"].get<std::uint64_t>();
    }

    std::optional<EnsembleSpec> read_ensemble(const json& e) {
        if (!object(e, "ensemble", "")) {
            return std::nullopt;
        }
        const auto s = seed(e, "ensemble.");
        if (!e.contains("grid")) {
            report("ensemble", "ensemble.grid is required");
            return std::nullopt;
        }
        const auto geo = read_grid(e["grid"], "ensemble.");
        if (!s || !geo) {
            return std::nullopt;
        }
        return EnsembleSpec{*s, *geo};
    }

    std::optional<RoiSpec> read_roi(const json& c, const std::string& ctx) {
        if (!c.contains("roi")) {
            report("roi", ctx + "roi is required");
            return std::nullopt;
        }
        const json& r = c["roi"];
        if (!object(r, "roi", ctx)) {
            return std::nullopt;
        }
        const std::string rc = ctx + "roi.";
        RoiSpec roi;
        const auto shape =
            r.contains("shape") && r["shape"].is_string() ? parse_roi_shape(r["shape"].get<std::string>()) : std::nullopt;
        if (!shape) {
            report("shape", rc + "shape must be \"rectangle\" or \"ellipse\"");
        }
        const auto hw = number(r, "half_width_mm", rc, true);
        const auto hh = number(r, "half_height_mm", rc, true);
        const auto centre = pair(r, "center_mm", rc);
        if (!shape || !hw || !hh || !centre) {
            return std::nullopt;
        }
        roi = {*shape, *hw, *hh, centre->first, centre->second};
        try {
            roi.validate();
        } catch (const AuditError& e) {
            report("half_width_mm", rc + e.what());
            return std::nullopt;
        }
        return roi;
    }

    std::optional<SyntheticCentreSpec> read_synthetic(const json& s, const std::string& ctx) {
        if (!object(s, "synthetic", ctx)) {
            return std::nullopt;
        }
        const std::string sc = ctx + "synthetic.";
        SyntheticCentreSpec spec;
        if (!s.contains("grid")) {
            report("synthetic", sc + "grid is required");
            return std::nullopt;
        }
        const auto geo = read_grid(s["grid"], sc);
        if (!geo) {
            return std::nullopt;
        }
        spec.geometry = *geo;
        if (!s.contains("phantom") || !object(s["phantom"], "phantom", sc)) {
            report("synthetic", sc + "phantom is required");
            return std::nullopt;
        }
        const json& p = s["phantom"];
        const std::string pc = sc + "phantom.";
        const auto peak = number(p, "peak_dose_gy", pc, true);
        const auto sigma = number(p, "sigma_mm", pc, true);
        const auto centre = pair(p, "center_mm", pc);
        const auto background = number(p, "background_gy", pc, false);
        if (!peak || !sigma || !centre) {
            return std::nullopt;
        }
        spec.phantom = {*peak, *sigma, centre->first, centre->second, background.value_or(0.0)};
        if (s.contains("distortion") && object(s["distortion"], "distortion", sc)) {
            const json& d = s["distortion"];
            const std::string dc = sc + "distortion.";
            spec.distortion.dose_bias_pct = number(d, "dose_bias_pct", dc, false).value_or(0.0);
            spec.distortion.sigma_scale = number(d, "sigma_scale", dc, false).value_or(1.0);
            if (d.contains("shift_mm")) {
                if (const auto shift = pair(d, "shift_mm", dc)) {
                    spec.distortion.shift_x_mm = shift->first;
                    spec.distortion.shift_y_mm = shift->second;
                }
            }
        }
        if (s.contains("noise") && object(s["noise"], "noise", sc)) {
            const json& n = s["noise"];
            const std::string nc = sc + "noise.";
            if (const auto sd = seed(n, nc)) {
                spec.film_noise.seed = *sd;
            }
            spec.film_noise.amplitude_pct = number(n, "amplitude_pct", nc, false).value_or(0.0);
        }
        return spec;
    }

    void read_centres(const json& arr, std::vector<CentreSource>& out) {
        if (!arr.is_array()) {
            report("centres", "centres must be an array");
            return;
        }
        std::set<std::string> ids;
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string ctx = "centres[" + std::to_string(k) + "].";
            const json& c = arr[k];
            if (!object(c, "centres", ctx)) {
                continue;
            }
            if (!c.contains("id") || !c["id"].is_string() || c["id"].get<std::string>().empty()) {
                report("id", ctx + "id must be a non-empty string");
                continue;
            }
            const std::string id = c["id"].get<std::string>();
            if (!ids.insert(id).second) {
                report("id", ctx + "duplicate centre id \"" + id + "\"");
            }
            const auto roi = read_roi(c, ctx);
            if (c.contains("synthetic")) {
                auto spec = read_synthetic(c["synthetic"], ctx);
                if (spec && roi) {
                    spec->id = id;
                    spec->roi = *roi;
                    out.emplace_back(std::move(*spec));
                }
                continue;
            }
            FileCentreSpec file{id, {}, {}, {}};
            bool ok = true;
            for (const char* key : {"reference", "evaluated"}) {
                if (!c.contains(key) || !c[key].is_string()) {
                    report(key, ctx + key + " must be a path to a DGRID file");
                    ok = false;
                    continue;
                }
                std::filesystem::path p = c[key].get<std::string>();
                if (p.is_relative() && !base_.empty()) {
                    p = base_ / p;
                }
                if (!std::filesystem::exists(p)) {
                    report(key, ctx + key + " file not found: " + p.string());
                    ok = false;
                }
                (std::string_view(key) == "reference" ? file.reference : file.evaluated) = p;
            }
            if (ok && roi) {
                file.roi = *roi;
                out.emplace_back(std::move(file));
            }
        }
    }
};

std::vector<Diagnostic> read_config(std::string_view text, const std::filesystem::path& base_dir, AuditConfig& cfg) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        return {{line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what()}};
    }
    ConfigReader reader(text, base_dir);
    cfg = reader.read(doc);
    return reader.diagnostics;
}

}  // namespace

std::vector<Diagnostic> validate_audit_text(std::string_view text, const std::filesystem::path& base_dir) {
    AuditConfig cfg;
    return read_config(text, base_dir, cfg);
}

AuditConfig parse_audit_config(std::string_view text, const std::filesystem::path& base_dir,
                               const std::string& source) {
    AuditConfig cfg;
    const auto diags = read_config(text, base_dir, cfg);
    if (!diags.empty()) {
        std::string msg;
        for (const auto& d : diags) {
            msg += (msg.empty() ? "" : "; ") + format_diagnostic(source, d);
        }
        fail(ErrorCode::FormatError, msg);
    }
    return cfg;
}

AuditConfig load_audit_config(const std::filesystem::path& path) {
    return parse_audit_config(read_text_file(path), path.parent_path(), path.string());
}

std::vector<std::filesystem::path> referenced_grid_files(const AuditConfig& config) {
    std::vector<std::filesystem::path> out;
    for (const auto& c : config.centres) {
        if (const auto* f = std::get_if<FileCentreSpec>(&c)) {
            out.push_back(f->reference);
            out.push_back(f->evaluated);
        }
    }
    return out;
}

std::size_t centre_count(const AuditConfig& config) {
    return config.centres.size() + (config.ensemble ? 9 : 0);
}

std::vector<CentreDataset> build_centres(const AuditConfig& config, std::optional<std::uint64_t> seed_override) {
    std::vector<CentreDataset> out;
    if (config.ensemble) {
        for (const auto& spec : demo_ensemble(seed_override.value_or(config.ensemble->seed), config.ensemble->geometry)) {
            out.push_back(make_synthetic_centre(spec));
        }
    }
    for (const auto& c : config.centres) {
        if (const auto* f = std::get_if<FileCentreSpec>(&c)) {
            out.push_back({f->id, read_dgrid(f->reference), read_dgrid(f->evaluated), f->roi});
        } else {
            out.push_back(make_synthetic_centre(std::get<SyntheticCentreSpec>(c)));
        }
    }
    std::set<std::string> ids;
    for (const auto& c : out) {
        if (!ids.insert(c.id).second) {
            fail(ErrorCode::FormatError, "duplicate centre id \"" + c.id + "\"");
        }
    }
    return out;
}

}  // namespace gamma_audit

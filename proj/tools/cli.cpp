#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "gamma_audit/anova.hpp"
#include "gamma_audit/audit_config.hpp"
#include "gamma_audit/correlation.hpp"
#include "gamma_audit/design.hpp"
#include "gamma_audit/error.hpp"
#include "gamma_audit/grid_io.hpp"
#include "gamma_audit/report.hpp"
#include "json.hpp"

namespace gamma_audit::cli {

namespace fs = std::filesystem;

namespace {

using ordered_json = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::FormatError:
    case ErrorCode::IoError:
    case ErrorCode::InvalidArgument:
        return kInputError;
    default:
        return kComputeError;
    }
}

// Files are staged in memory and written to a sibling directory that is
// renamed into place once everything succeeded.
class OutputTree {
public:
    void add(std::string name, std::string content) { files_[std::move(name)] = std::move(content); }
    const std::map<std::string, std::string>& files() const { return files_; }

    void commit(const fs::path& target) const {
        if (fs::exists(target)) {
            if (!fs::is_directory(target)) {
                fail(ErrorCode::IoError, target.string() + " exists and is not a directory");
            }
            if (!fs::is_empty(target) && !fs::exists(target / "manifest.json")) {
                fail(ErrorCode::IoError, target.string() + " is not empty and was not written by " +
                                             std::string(kToolName) + "; refusing to replace it");
            }
        }
        fs::path staging = target;
        staging += ".partial";
        std::error_code ec;
        fs::remove_all(staging, ec);
        fs::create_directories(staging);
        for (const auto& [name, content] : files_) {
            std::ofstream f(staging / name, std::ios::binary);
            f << content;
            if (!f) {
                fs::remove_all(staging, ec);
                fail(ErrorCode::IoError, "cannot write " + (staging / name).string());
            }
        }
        fs::remove_all(target, ec);
        fs::rename(staging, target);
    }

private:
    std::map<std::string, std::string> files_;
};

RoiSpec whole_grid_roi(const GridGeometry& g) {
    const double hw = g.extent_x() / 2.0;
    const double hh = g.extent_y() / 2.0;
    return {RoiShape::rectangle, hw, hh, g.origin_x + hw, g.origin_y + hh};
}

std::string gic_tag(int gic) { return "gic" + std::to_string(gic); }

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += kHex[digest[k] >> 4];
        out += kHex[digest[k] & 0xF];
    }
    return out;
}

unsigned resolve_jobs(std::optional<unsigned> flag) {
    if (flag && *flag > 0) {
        return *flag;
    }
    if (const char* env = std::getenv("GAMMA_AUDIT_JOBS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v < 4096) {
            return static_cast<unsigned>(v);
        }
    }
    return 1;
}

int cmd_gamma(const GammaArgs& args, std::ostream& out, std::ostream& err) {
    try {
        args.options.validate();
        const DoseGrid reference = read_dgrid(args.reference);
        const DoseGrid evaluated = read_dgrid(args.evaluated);
        const RoiSpec roi = args.roi.value_or(whole_grid_roi(evaluated.geometry()));
        const Mask mask = realize_roi(evaluated, roi);

        OutputTree maps;
        AuditResult result = audit_outputs(reference, evaluated, mask, args.options, args.jobs);
        if (args.map_out) {
            for (int g = 1; g <= 4; ++g) {
                const GammaMap map =
                    gamma_map(reference, evaluated, mask, kGammaCriteria[static_cast<std::size_t>(g - 1)], args.options,
                              args.jobs);
                maps.add("gamma_" + gic_tag(g) + ".json", gamma_map_json(map));
                if (args.heatmaps) {
                    maps.add("gamma_" + gic_tag(g) + ".pgm", gamma_pgm(map));
                }
            }
            ordered_json manifest;
            manifest["tool"] = kToolName;
            manifest["version"] = kToolVersion;
            manifest["inputs"] = ordered_json::array();
            for (const fs::path& p : {args.reference, args.evaluated}) {
                manifest["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_hex(read_text_file(p))}});
            }
            manifest["roi"] = {{"shape", to_string(roi.shape)},
                               {"half_width_mm", roi.half_width_mm},
                               {"half_height_mm", roi.half_height_mm},
                               {"center_mm", {roi.center_x_mm, roi.center_y_mm}}};
            manifest["outputs"] = ordered_json::array();
            for (const auto& [name, content] : maps.files()) {
                manifest["outputs"].push_back({{"file", name}, {"sha256", sha256_hex(content)}});
            }
            maps.add("manifest.json", manifest.dump(2) + "\n");
            maps.commit(*args.map_out);
        }
        out << audit_result_json(result);
        return kOk;
    } catch (const AuditError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int cmd_validate(const fs::path& path, std::ostream& out, std::ostream& err) {
    try {
        std::vector<Diagnostic> diags;
        if (path.extension() == ".csv") {
            diags = validate_dgrid_file(path);
        } else {
            const std::string text = read_text_file(path);
            // Sniff the format field; an unparsable document is reported by
            // the DGRID validator.
            bool is_audit = false;
            try {
                const auto doc = nlohmann::json::parse(text);
                is_audit = doc.is_object() && doc.contains("format") && doc["format"] == "audit";
            } catch (const nlohmann::json::exception&) {
            }
            diags = is_audit ? validate_audit_text(text, path.parent_path()) : validate_dgrid_text(text);
        }
        if (diags.empty()) {
            out << "OK\n";
            return kOk;
        }
        for (const auto& d : diags) {
            err << format_diagnostic(path.string(), d) << "\n";
        }
        return kInputError;
    } catch (const AuditError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int cmd_audit(const AuditArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const std::string config_text = read_text_file(args.config);
        const AuditConfig config = parse_audit_config(config_text, args.config.parent_path(), args.config.string());
        const FactorialDesign design = full_factorial(config.factors);
        const std::size_t n_centres = centre_count(config);

        if (args.dry_run) {
            out << "design: " << n_centres << " centres x " << design.points.size()
                << " points = " << n_centres * design.points.size() << " rows\n";
            return kOk;
        }
        if (args.seed && !config.ensemble) {
            err << "notice: --seed ignored, config has no synthetic ensemble\n";
        }

        const std::vector<CentreDataset> centres = build_centres(config, args.seed);
        const ResultTable table = run_design(centres, design, config.gamma, args.jobs);
        const std::size_t failed = static_cast<std::size_t>(
            std::count_if(table.rows.begin(), table.rows.end(), [](const ResultRow& r) { return !r.result; }));
        if (failed > 0) {
            err << "notice: " << failed << " of " << table.rows.size() << " design rows failed (see results.csv)\n";
        }

        const auto metrics = all_metrics();
        const SensitivitySweep sweep = sensitivity_sweep(table, metrics);

        OutputTree tree;
        tree.add("results.csv", results_csv(table));
        tree.add("sensitivity.csv", sensitivity_csv(sweep));
        tree.add("sensitivity.json", sensitivity_json(sweep));

        std::vector<std::pair<std::string, CorrelationMatrix>> emitted;
        auto emit = [&](const std::string& stem, const CorrelationMatrix& m) {
            emitted.emplace_back(stem, m);
            tree.add(stem + ".csv", matrix_csv(m));
            tree.add(stem + ".json", matrix_json(m));
            if (args.heatmaps) {
                tree.add(stem + ".pgm", correlation_pgm(m));
            }
        };

        try {
            emit("corr_metrics", metric_correlation(table));
        } catch (const AuditError& e) {
            err << "notice: metric correlation skipped: " << e.what() << "\n";
        }
        for (GicMetric kind : {GicMetric::gpr, GicMetric::median_gamma}) {
            for (int gic = 1; gic <= 4; ++gic) {
                const std::string suffix = std::string(to_string(kind)) + "_" + gic_tag(gic);
                if (centres.size() < 2) {
                    if (kind == GicMetric::gpr && gic == 1) {
                        err << "notice: centre correlation needs at least 2 centres, skipped\n";
                    }
                } else {
                    try {
                        emit("corr_centres_" + suffix, center_correlation(table, kind, gic));
                    } catch (const AuditError& e) {
                        err << "notice: corr_centres_" << suffix << " skipped: " << e.what() << "\n";
                    }
                }
                try {
                    emit("corr_factors_" + suffix, factor_correlation(sweep, kind, gic));
                } catch (const AuditError& e) {
                    err << "notice: corr_factors_" << suffix << " skipped: " << e.what() << "\n";
                }
            }
        }

        tree.add("correlation_summary.csv", correlation_summary_csv(emitted));

        ordered_json manifest;
        manifest["tool"] = kToolName;
        manifest["version"] = kToolVersion;
        manifest["config"] = {{"path", args.config.string()}, {"sha256", sha256_hex(config_text)}};
        ordered_json inputs = ordered_json::array();
        for (const auto& p : referenced_grid_files(config)) {
            inputs.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_text_file(p))}});
        }
        manifest["inputs"] = std::move(inputs);
        manifest["output_dir"] = args.out_dir.string();
        manifest["seed_override"] = args.seed ? ordered_json(*args.seed) : ordered_json(nullptr);
        manifest["design"] = {{"centres", centres.size()},
                              {"points", design.points.size()},
                              {"rows", table.rows.size()},
                              {"failed_rows", failed}};
        ordered_json outputs = ordered_json::array();
        for (const auto& [name, content] : tree.files()) {
            outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
        }
        manifest["outputs"] = std::move(outputs);
        tree.add("manifest.json", manifest.dump(2) + "\n");

        tree.commit(args.out_dir);
        std::size_t pairs = 0, strong = 0, poor = 0;
        for (const auto& [stem, m] : emitted) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                for (std::size_t j = i + 1; j < m.size(); ++j) {
                    if (const auto r = m.r(i, j)) {
                        ++pairs;
                        strong += correlation_class(*r) == "strong";
                        poor += correlation_class(*r) == "poor";
                    }
                }
            }
        }
        out << "correlations: " << strong << " strong (r >= " << format_number(kStrongCorrelation) << "), " << poor
            << " poor (r < " << format_number(kPoorCorrelation) << ") of " << pairs
            << " pairs, see correlation_summary.csv\n";
        out << "wrote " << tree.files().size() << " files to " << args.out_dir.string() << "\n";
        return kOk;
    } catch (const AuditError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gamma-index audit pipeline: dose comparison metrics, factorial sensitivity and correlation"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::optional<unsigned> jobs_flag;
    bool heatmaps = false;

    GammaArgs gamma_args;
    std::string roi_shape;
    std::optional<double> roi_hw, roi_hh;
    std::vector<double> roi_center;
    std::string map_out;
    auto* gamma = app.add_subcommand("gamma", "Compare two DGRID dose planes and print the 12 audit outputs as JSON");
    gamma->add_option("reference", gamma_args.reference, "Reference (planning system) DGRID file")->required();
    gamma->add_option("evaluated", gamma_args.evaluated, "Evaluated (measured) DGRID file")->required();
    gamma->add_option("--roi-shape", roi_shape, "rectangle or ellipse")->check(CLI::IsMember({"rectangle", "ellipse"}));
    gamma->add_option("--roi-half-width", roi_hw, "ROI half width, mm");
    gamma->add_option("--roi-half-height", roi_hh, "ROI half height, mm");
    gamma->add_option("--roi-center", roi_center, "ROI centre x y, mm")->expected(2);
    gamma->add_option("--search-radius-factor", gamma_args.options.search_radius_factor);
    gamma->add_option("--step-factor", gamma_args.options.subsample_step_factor);
    gamma->add_option("--lattice-dist", gamma_args.options.lattice_dist_mm, "Candidate step = lattice dist / step factor, mm");
    gamma->add_option("--cutoff", gamma_args.options.low_dose_cutoff_pct, "Low-dose cutoff, % of normalization");
    gamma->add_option("--map-out", map_out, "Write per-GIC gamma maps (DGRID, unit gamma) to this directory");
    gamma->add_flag("--heatmaps", heatmaps, "Also write PGM renderings of the gamma maps");
    gamma->add_option("--jobs", jobs_flag, "Worker threads (falls back to GAMMA_AUDIT_JOBS)");

    AuditArgs audit_args;
    std::string out_dir = audit_args.out_dir.string();
    std::optional<std::uint64_t> seed;
    auto* audit = app.add_subcommand("audit", "Run the factorial audit described by an AUDIT v1 config");
    audit->add_option("config", audit_args.config, "AUDIT v1 JSON config")->required();
    audit->add_option("--out", out_dir, "Output directory");
    audit->add_option("--seed", seed, "Override the synthetic ensemble seed");
    audit->add_flag("--heatmaps", heatmaps, "Write PGM heatmaps of every correlation matrix");
    audit->add_flag("--dry-run", audit_args.dry_run, "Print the design size and exit");
    audit->add_option("--jobs", jobs_flag, "Worker threads (falls back to GAMMA_AUDIT_JOBS)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a DGRID or AUDIT file against its schema");
    validate->add_option("path", validate_path, "File to check")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    if (*gamma) {
        if (!roi_shape.empty() || roi_hw || roi_hh || !roi_center.empty()) {
            if (roi_shape.empty() || !roi_hw || !roi_hh || roi_center.size() != 2) {
                err << "error: --roi-shape, --roi-half-width, --roi-half-height and --roi-center go together\n";
                return kInputError;
            }
            gamma_args.roi = RoiSpec{*parse_roi_shape(roi_shape), *roi_hw, *roi_hh, roi_center[0], roi_center[1]};
        }
        if (!map_out.empty()) {
            gamma_args.map_out = map_out;
        }
        gamma_args.heatmaps = heatmaps;
        gamma_args.jobs = resolve_jobs(jobs_flag);
        return cmd_gamma(gamma_args, out, err);
    }
    if (*audit) {
        audit_args.out_dir = out_dir;
        audit_args.seed = seed;
        audit_args.heatmaps = heatmaps;
        audit_args.jobs = resolve_jobs(jobs_flag);
        return cmd_audit(audit_args, out, err);
    }
    return cmd_validate(validate_path, out, err);
}

}  // namespace gamma_audit::cli

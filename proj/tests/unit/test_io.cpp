#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "gamma_audit/audit_config.hpp"
#include "gamma_audit/error.hpp"
#include "gamma_audit/grid_io.hpp"
#include "gamma_audit/report.hpp"
#include "json.hpp"

using namespace gamma_audit;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const AuditError& e) {
        return e.code();
    }
    FAIL("expected an AuditError");
    return ErrorCode::InvalidArgument;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("gamma_audit_io_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name, std::ios::binary) << text;
        return path / name;
    }
};

const char* kSmall = R"({
  "format": "dgrid", "version": 1,
  "nx": 3, "ny": 2, "dx_mm": 0.5, "dy_mm": 2,
  "origin_mm": [-1, 4], "unit": "Gy",
  "values": [0, 1, 2, 3, 4, 5.5]
})";

std::string with(const std::string& key, const std::string& value) {
    auto doc = nlohmann::ordered_json::parse(kSmall);
    doc[key] = nlohmann::ordered_json::parse(value);
    return doc.dump(2);
}

bool mentions(const std::vector<Diagnostic>& diags, const std::string& text) {
    for (const auto& d : diags) {
        if (d.message.find(text) != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("DGRID parse") {
    const DoseGrid g = parse_dgrid(kSmall);
    CHECK(g.geometry() == GridGeometry{3, 2, 0.5, 2, -1, 4});
    CHECK(g.at(2, 1) == 5.5);
    CHECK(g.at(0, 1) == 3.0);
    CHECK(validate_dgrid_text(kSmall).empty());
}

TEST_CASE("DGRID round trip is exact") {
    std::mt19937_64 rng(4);
    const GridGeometry geo{7, 5, 0.3, 1.7, -2.1, 0.1};
    std::vector<double> v(geo.size());
    for (double& x : v) {
        x = std::ldexp(static_cast<double>(rng() >> 11), -50);
    }
    const DoseGrid g(geo, v);
    CHECK(parse_dgrid(dgrid_json(g)) == g);
}

TEST_CASE("DGRID diagnostics") {
    CHECK(mentions(validate_dgrid_text(with("dx_mm", "-1")), "dx_mm must be > 0"));
    CHECK(mentions(validate_dgrid_text(with("version", "2")), "unsupported version 2"));
    CHECK(mentions(validate_dgrid_text(with("values", "[1, 2]")), "expected nx*ny = 6"));
    CHECK(mentions(validate_dgrid_text(with("values", "[0, 1, 2, 3, -4, 5]")), "values[4]"));
    CHECK(mentions(validate_dgrid_text(with("values", "[0, 1, 2, 3, null, 5]")), "values[4]"));
    CHECK(mentions(validate_dgrid_text(with("format", "\"audit\"")), "format"));
    CHECK(mentions(validate_dgrid_text(with("nx", "1")), "nx must be >= 2"));
    CHECK(mentions(validate_dgrid_text(with("origin_mm", "[1]")), "origin_mm"));
    CHECK(mentions(validate_dgrid_text(with("unit", "\"cGy\"")), "unit"));
    CHECK(mentions(validate_dgrid_text("{\"format\": "), "malformed JSON"));
    CHECK(mentions(validate_dgrid_text("[1, 2]"), "JSON object"));

    const auto diags = validate_dgrid_text(with("dx_mm", "-1"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].line == 6);
    CHECK(format_diagnostic("g.json", diags[0]).rfind("g.json:6: ", 0) == 0);

    try {
        parse_dgrid(with("dx_mm", "-1"), "g.json");
        FAIL("expected FormatError");
    } catch (const AuditError& e) {
        CHECK(e.code() == ErrorCode::FormatError);
        CHECK(std::string(e.what()).find("g.json:6") != std::string::npos);
    }
}

TEST_CASE("gamma maps export null and validate as unit gamma") {
    GammaMap m;
    m.geometry = {2, 2, 1, 1, 0, 0};
    m.gamma = {0.5, std::numeric_limits<double>::quiet_NaN(), 1.25, 0};
    const std::string text = gamma_map_json(m);
    const auto doc = nlohmann::json::parse(text);
    CHECK(doc["unit"] == "gamma");
    CHECK(doc["values"][1].is_null());
    CHECK(doc["values"][2] == 1.25);
    CHECK(validate_dgrid_text(text).empty());
    CHECK(code_of([&] { parse_dgrid(text); }) == ErrorCode::FormatError);
}

TEST_CASE("CSV grids with sidecar") {
    TempDir tmp;
    const auto csv = tmp.write("film.csv", "0, 1, 2\r\n3,4,5.5\n\n");
    tmp.write("film.csv.json", R"({"format": "dgrid", "version": 1, "nx": 3, "ny": 2, "dx_mm": 0.5,
        "dy_mm": 2, "origin_mm": [-1, 4], "unit": "Gy"})");
    CHECK(read_dgrid(csv) == parse_dgrid(kSmall));
    CHECK(validate_dgrid_file(csv).empty());
    CHECK(read_dgrid(tmp.write("g.json", kSmall)) == parse_dgrid(kSmall));

    tmp.write("short.csv", "0,1,2\n3,4\n");
    fs::copy_file(tmp.path / "film.csv.json", tmp.path / "short.csv.json");
    const auto diags = validate_dgrid_file(tmp.path / "short.csv");
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].line == 2);
    CHECK(mentions(diags, "expected nx = 3"));

    tmp.write("bad.csv", "0,1,x\n3,4,5\n");
    fs::copy_file(tmp.path / "film.csv.json", tmp.path / "bad.csv.json");
    CHECK(mentions(validate_dgrid_file(tmp.path / "bad.csv"), "field 3"));
    CHECK(code_of([&] { read_dgrid(tmp.path / "bad.csv"); }) == ErrorCode::FormatError);

    tmp.write("orphan.csv", "0,1\n2,3\n");
    CHECK(mentions(validate_dgrid_file(tmp.path / "orphan.csv"), "sidecar"));
    CHECK(code_of([&] { read_dgrid(tmp.path / "missing.json"); }) == ErrorCode::IoError);
}

TEST_CASE("audit config") {
    TempDir tmp;
    tmp.write("ref.json", kSmall);
    tmp.write("film.json", kSmall);
    const std::string text = R"({
  "format": "audit", "version": 1,
  "gamma_options": {"low_dose_cutoff_pct": 5},
  "factors": [{"id": "F01", "levels": ["rectangle", "ellipse"]}, {"id": "F03", "levels": [0, 1, 2]}],
  "centres": [
    {"id": "h1", "reference": "ref.json", "evaluated": "film.json",
     "roi": {"shape": "ellipse", "half_width_mm": 1, "half_height_mm": 2, "center_mm": [0, 5]}},
    {"id": "s1", "synthetic": {"grid": {"nx": 16, "ny": 16, "dx_mm": 1, "dy_mm": 1, "origin_mm": [0, 0]},
                               "phantom": {"peak_dose_gy": 5, "sigma_mm": 3, "center_mm": [7.5, 7.5]},
                               "noise": {"seed": 3, "amplitude_pct": 1}},
     "roi": {"shape": "rectangle", "half_width_mm": 5, "half_height_mm": 5, "center_mm": [7.5, 7.5]}}
  ]
})";
    CHECK(validate_audit_text(text, tmp.path).empty());
    const AuditConfig cfg = parse_audit_config(text, tmp.path);
    CHECK(cfg.gamma.low_dose_cutoff_pct == 5.0);
    CHECK(cfg.gamma.search_radius_factor == 3.0);
    CHECK(cfg.factors.size() == 2);
    CHECK(cfg.factors[1].levels.size() == 3);
    CHECK(centre_count(cfg) == 2);
    CHECK(referenced_grid_files(cfg) == std::vector<fs::path>{tmp.path / "ref.json", tmp.path / "film.json"});
    const auto centres = build_centres(cfg);
    CHECK(centres[0].id == "h1");
    CHECK(centres[0].roi.shape == RoiShape::ellipse);
    CHECK(centres[1].evaluated.nx() == 16);
    CHECK_FALSE(centres[1].evaluated == centres[1].reference);
}

TEST_CASE("audit config defaults and ensemble seed override") {
    const std::string text = R"({"format": "audit", "version": 1,
        "ensemble": {"seed": 5, "grid": {"nx": 24, "ny": 24, "dx_mm": 1, "dy_mm": 1, "origin_mm": [0, 0]}}})";
    const AuditConfig cfg = parse_audit_config(text, {});
    CHECK(cfg.factors.size() == kFactorCount);
    CHECK(centre_count(cfg) == 9);
    const auto a = build_centres(cfg);
    const auto b = build_centres(cfg, 6);
    CHECK(a.size() == 9);
    CHECK_FALSE(a[2].evaluated == b[2].evaluated);
    CHECK(build_centres(cfg, 5)[2].evaluated == a[2].evaluated);
}

TEST_CASE("audit config diagnostics") {
    CHECK(mentions(validate_audit_text(R"({"format": "audit", "version": 1})"), "no centres"));
    CHECK(mentions(validate_audit_text(R"({"format": "audit", "version": 1, "factors": [{"id": "F11", "levels": [0, 1]}],
        "ensemble": {"seed": 1, "grid": {"nx": 8, "ny": 8, "dx_mm": 1, "dy_mm": 1, "origin_mm": [0, 0]}}})"),
                   "F01..F09"));
    CHECK(mentions(validate_audit_text(R"({"format": "audit", "version": 1, "factors": [{"id": "F03", "levels": [1]}],
        "ensemble": {"seed": 1, "grid": {"nx": 8, "ny": 8, "dx_mm": 1, "dy_mm": 1, "origin_mm": [0, 0]}}})"),
                   "at least 2 levels"));
    CHECK(mentions(validate_audit_text(R"({"format": "audit", "version": 1, "gamma_options": {"subsample_step_factor": 0.5},
        "ensemble": {"seed": 1, "grid": {"nx": 8, "ny": 8, "dx_mm": 1, "dy_mm": 1, "origin_mm": [0, 0]}}})"),
                   "subsample_step_factor must be >= 2"));
    CHECK(mentions(validate_audit_text(R"({"format": "audit", "version": 1,
        "ensemble": {"seed": -1, "grid": {"nx": 8, "ny": 8, "dx_mm": 0, "dy_mm": 1, "origin_mm": [0, 0]}}})"),
                   "seed"));
    const auto diags = validate_audit_text("{\n  \"format\": \"audit\",\n  \"version\": 1,\n  \"centres\": 4\n}");
    REQUIRE_FALSE(diags.empty());
    CHECK(diags[0].line == 4);
    CHECK(code_of([] { parse_audit_config("{}", {}); }) == ErrorCode::FormatError);
    CHECK(code_of([] { load_audit_config("/nonexistent/audit.json"); }) == ErrorCode::IoError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(100) == "100");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_number(std::nan("")) == "nan");
    std::mt19937_64 rng(8);
    for (int k = 0; k < 1000; ++k) {
        double v;
        const std::uint64_t bits = rng();
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v)) {
            continue;
        }
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("correlation exports") {
    CorrelationMatrix m({"a", "b,c"});
    m.set(0, 0, 1.0, 5);
    m.set(0, 1, -0.5, 5);
    m.set(1, 1, std::nullopt, 5);
    CHECK(matrix_csv(m) == "label,a,\"b,c\"\na,1,-0.5\n\"b,c\",-0.5,NA\n");
    const auto j = nlohmann::json::parse(matrix_json(m));
    CHECK(j["labels"][1] == "b,c");
    CHECK(j["r"][1][1].is_null());
    CHECK(j["r"][0][1] == -0.5);
    CHECK(j["n_samples"][0][1] == 5);

    const std::string pgm = correlation_pgm(m, 1);
    CHECK(pgm == "P2\n2 2\n255\n255 64\n64 0\n");
    CHECK(correlation_pgm(m, 3).rfind("P2\n6 6\n255\n", 0) == 0);
}

TEST_CASE("correlation summary") {
    CHECK(correlation_class(0.9) == "strong");
    CHECK(correlation_class(0.8999) == "moderate");
    CHECK(correlation_class(0.6) == "moderate");
    CHECK(correlation_class(0.59) == "poor");
    CHECK(correlation_class(-0.95) == "poor");
    CorrelationMatrix m({"c1", "c2", "c3"});
    m.set(0, 1, 0.95, 8);
    m.set(0, 2, std::nullopt, 8);
    m.set(1, 2, 0.25, 8);
    CHECK(correlation_summary_csv({{"corr_centres_gpr_gic1", m}}) ==
          "matrix,a,b,r,class\ncorr_centres_gpr_gic1,c1,c2,0.95,strong\ncorr_centres_gpr_gic1,c2,c3,0.25,poor\n");
}

TEST_CASE("gamma heat map") {
    GammaMap m;
    m.geometry = {3, 2, 1, 1, 0, 0};
    m.gamma = {0, 1, 5, std::nan(""), 0.5, 2};
    CHECK(gamma_pgm(m) == "P2\n3 2\n255\n0 64 255\n0 128 255\n");
}

TEST_CASE("audit result json keeps metric order") {
    AuditResult r;
    r.gpr_pct = {100, 99.5, 98, 97};
    r.dta_mm = 0.25;
    const std::string text = audit_result_json(r);
    const auto j = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) {
        keys.push_back(k);
    }
    REQUIRE(keys.size() == kMetricCount);
    for (Metric m : all_metrics()) {
        CHECK(keys[static_cast<std::size_t>(m)] == metric_label(m));
    }
    CHECK(j["gpr_gic2"] == 99.5);
    CHECK(j["dta_mm"] == 0.25);
}

TEST_CASE("results and sensitivity tables") {
    ResultTable t;
    t.factors = {{FactorId::F01, {RoiShape::rectangle, RoiShape::ellipse}}};
    t.points = full_factorial(t.factors).points;
    t.centre_ids = {"x"};
    AuditResult ok;
    ok.gpr_pct = {100, 100, 100, 100};
    t.rows = {{0, 0, ok, ""}, {0, 1, std::nullopt, "RoiTooSmall: 3 nodes"}};
    const std::string csv = results_csv(t);
    CHECK(csv.rfind("centre,F01,gpr_gic1,", 0) == 0);
    CHECK(csv.find("\nx,rectangle,100,100,100,100,0,0,0,0,0,0,0,0,\n") != std::string::npos);
    CHECK(csv.find("\nx,ellipse,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,RoiTooSmall: 3 nodes\n") != std::string::npos);

    SensitivitySweep s;
    s.centre_ids = {"x"};
    s.factors = {FactorId::F04};
    s.metrics = {Metric::dta};
    s.entries = {{SensitivityEntry{std::nullopt, "ZeroVariance: flat"}}};
    CHECK(sensitivity_csv(s) == "centre,metric,F04,F10,error\nx,dta_mm,NA,NA,ZeroVariance: flat\n");
    const auto j = nlohmann::json::parse(sensitivity_json(s));
    CHECK(j["labels"] == nlohmann::json::array({"F04", "F10"}));
    CHECK(j["entries"][0]["sensitivity"].is_null());
}

}  // TEST_SUITE

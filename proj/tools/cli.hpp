#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "gamma_audit/dose_grid.hpp"
#include "gamma_audit/gamma.hpp"

namespace gamma_audit::cli {

inline constexpr std::string_view kToolName = "gamma-audit";
inline constexpr std::string_view kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kInputError = 2, kComputeError = 3 };

struct GammaArgs {
    std::filesystem::path reference;
    std::filesystem::path evaluated;
    std::optional<RoiSpec> roi;  // default: the whole evaluated grid
    GammaOptions options;
    std::optional<std::filesystem::path> map_out;
    bool heatmaps = false;
    unsigned jobs = 1;
};

struct AuditArgs {
    std::filesystem::path config;
    std::filesystem::path out_dir = "audit_out";
    std::optional<std::uint64_t> seed;
    bool heatmaps = false;
    bool dry_run = false;
    unsigned jobs = 1;
};

int cmd_gamma(const GammaArgs& args, std::ostream& out, std::ostream& err);
int cmd_audit(const AuditArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// --jobs when given, else GAMMA_AUDIT_JOBS, else 1.
unsigned resolve_jobs(std::optional<unsigned> flag);

std::string sha256_hex(std::string_view data);

}  // namespace gamma_audit::cli

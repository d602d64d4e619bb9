#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ktsp/errors.hpp"
#include "ktsp/geometry.hpp"
#include "ktsp/solver.hpp"

namespace ktsp::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitInputError = 3;
inline constexpr int kExitInternal = 4;

struct ParseError : InputError {
    ParseError(const std::string& source, int line, const std::string& what);
    int line;
};

// Text format: `n d k`, then n lines of d numbers. `#` starts a comment.
RawInstance parse_instance(std::istream& in, const std::string& source = "<input>");
RawInstance read_instance_file(const std::string& path);
// Round-trips through parse_instance.
std::string format_instance(const RawInstance& inst);

struct TourFile {
    std::vector<int> order;
    std::optional<double> cost;
};

// Either a JSON run report (fields "tour" and "cost") or plain text: point
// indices separated by whitespace and an optional line `cost <value>`.
TourFile parse_tour(std::istream& in, const std::string& source = "<tour>");
TourFile read_tour_file(const std::string& path);

struct TourCheck {
    bool ok = true;
    std::string reason;
    double recomputed = 0;
    int distinct = 0;
};

inline constexpr double kCostTolerance = 1e-9;

// A repeated first index at the end is read as explicit closure.
TourCheck validate_tour(const RawInstance& inst, const std::vector<int>& order,
                        std::optional<double> reported_cost = std::nullopt);

enum class Distribution { Uniform, Clustered, Collinear, Grid };
Distribution parse_distribution(const std::string& s);
RawInstance generate(int n, int d, int k, Distribution dist, std::uint64_t seed);

struct RunConfig {
    std::optional<int> k;
    SolveOptions solve;
    bool oracle = false;
    bool timing = false;
};

struct RunOutcome {
    std::string instance;
    RawInstance raw;
    SolveReport report;
    std::optional<double> oracle_cost;
    double wall_ms = 0;
};

RunOutcome run_instance(const RawInstance& raw, const std::string& name, const RunConfig& cfg);

// Deterministic for a fixed config and seed; timing only when cfg.timing.
nlohmann::json report_json(const RunOutcome& out, const RunConfig& cfg);

std::string csv_header();
std::string csv_row(const RunOutcome& out, const RunConfig& cfg);

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

}  // namespace ktsp::cli

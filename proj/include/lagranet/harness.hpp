#pragma once

#include "lagranet/dispatch.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/localprox.hpp"
#include "lagranet/metrics.hpp"
#include "lagranet/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lagranet {

/// Seeded generator whose bounded draws do not depend on the standard
/// library's distribution implementations, so streams are portable.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound).
  std::uint64_t index(std::uint64_t bound);
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

enum class InitRule { Zero, Random };

/// A fully resolved run description. Node indices are 0-based in memory and
/// 1-based in JSON.
struct Scenario {
  TraceKind kind = TraceKind::Consensus;
  int n = 0;
  int p = 1;
  std::vector<Edge> edges;
  /// Generator rule the edges came from ("" for inline edges).
  std::string network_rule;

  std::vector<LocalProblem> problems;  // consensus
  std::vector<GeneratorCost> costs;    // dispatch
  Vector demand;                       // dispatch, stacked n*p
  Vector total_demand;                 // dispatch, length p
  std::string demand_split = "equal";  // "equal" or "explicit"

  double rho = 1.0;
  std::optional<double> eta;  // empty means auto
  long iters = 1000;
  std::uint64_t seed = 0;
  InitRule init = InitRule::Zero;

  std::optional<std::string> out_csv;
  std::optional<std::string> out_svg;

  Network network() const;
  DispatchProblem dispatch_problem() const;
};

/// Parses the scenario JSON document. Throws InvalidScenario.
Scenario parse_scenario(const std::string& text);
/// Throws IoError when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

/// Network from { "n", "p", "edges": [[i, j, w], ...] } with 1-based nodes.
Network parse_network_json(const std::string& text);

/// Edges (i, i+1) and (i, i+2) with unit weights on n nodes (0-based).
std::vector<Edge> next_nearest_edges(int n);

struct CoefficientEntry {
  int bus = 0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Reads an array of {bus, a, b, c}. Throws MissingCoefficientFile.
std::vector<CoefficientEntry> load_coefficients(const std::filesystem::path& path);

struct Ieee118Options {
  int buses = 118;
  int generators = 14;
  double lo = 0.0;
  double hi = 300.0;
  double demand = 950.0;
  long iters = 20000;
};

/// 118-bus dispatch scenario: next-nearest topology, generator buses drawn
/// from `seed`, coefficients assigned in order of their `bus` field.
Scenario gen_ieee118(std::uint64_t seed, std::span<const CoefficientEntry> coeffs,
                     const Ieee118Options& opts = {});

/// y0 for the scenario (zeros, or uniform in [-1, 1] from the seed and
/// clipped to each consensus agent's box).
Vector initial_y(const Scenario& s);

/// Certified parameters, resolving an automatic eta.
AlgoParams resolve_params(const Scenario& s, const SpectralData& spec);

/// Reference solution used for metrics; empty when none is available for
/// the problem mix.
std::optional<OracleSolution> scenario_oracle(const Scenario& s);

struct RunOutcome {
  AlgoParams params;
  std::optional<OracleSolution> oracle;
  std::vector<IterationMetrics> trace;
  EnvelopeReport report;
  double max_lambda_sum = 0.0;
  Vector y_final;
  Vector x_final;  // dispatch only
};

/// Runs the scenario for s.iters rounds and evaluates every envelope.
RunOutcome run_scenario(const Scenario& s);

/// Envelope report for an existing trace against the scenario's oracle.
EnvelopeReport check_trace(std::span<const IterationMetrics> trace, const Scenario& s);

// Trace files.

/// Leading columns, in order; lyapunov and duality_gap follow the flags.
extern const std::vector<std::string> kTraceColumns;

std::string format_double(double v);
std::string trace_to_csv(std::span<const IterationMetrics> trace);
/// Throws InvalidTrace on malformed input.
std::vector<IterationMetrics> parse_trace_csv(const std::string& text);

/// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

void emit_csv(std::span<const IterationMetrics> trace, const std::filesystem::path& path);

/// Metric names accepted by emit_svg.
extern const std::vector<std::string> kPlotMetrics;

/// Log-scale line plot of |metric| against k.
std::string trace_to_svg(std::span<const IterationMetrics> trace, const std::string& metric);
/// One file `<dir>/<metric>.svg` per selected metric that has data.
/// Returns the paths written.
std::vector<std::filesystem::path> emit_svg(std::span<const IterationMetrics> trace,
                                            std::span<const std::string> metrics,
                                            const std::filesystem::path& dir);

/// Command-line entry point. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace lagranet

#include "lagranet/error.hpp"
#include "lagranet/harness.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>

namespace lagranet {

namespace {

struct RunFlags {
  std::string scenario;
  std::optional<long> iters;
  std::optional<double> rho;
  std::string eta;
  std::optional<std::string> out_csv;
  std::optional<std::string> out_svg;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_param_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--rho", f.rho, "Penalty parameter");
  cmd->add_option("--eta", f.eta, "Proximal weight, or 'auto'");
  cmd->add_option("--seed", f.seed, "Seed for randomized scenario fields");
  cmd->add_flag("--quiet,-q", f.quiet, "Suppress the summary");
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("LAGRANET_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string_view s(raw);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidScenario, "LAGRANET_SEED must be a nonnegative integer, got '" +
                                                std::string(s) + "'");
  }
  return v;
}

void apply_overrides(Scenario& s, const RunFlags& f) {
  if (f.iters) {
    if (*f.iters < 0) throw Error(ErrorCode::InvalidScenario, "--iters must be nonnegative");
    s.iters = *f.iters;
  }
  if (f.rho) s.rho = *f.rho;
  if (!f.eta.empty()) {
    if (f.eta == "auto") {
      s.eta.reset();
    } else {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.eta.data(), f.eta.data() + f.eta.size(), v);
      if (ec != std::errc() || ptr != f.eta.data() + f.eta.size()) {
        throw Error(ErrorCode::InvalidScenario, "--eta must be a number or 'auto'");
      }
      s.eta = v;
    }
  }
  if (f.seed) s.seed = *f.seed;
  if (const auto env = env_seed()) s.seed = *env;
  if (f.out_csv) s.out_csv = f.out_csv;
  if (f.out_svg) s.out_svg = f.out_svg;
}

void print_report(std::ostream& os, const EnvelopeReport& report) {
  for (const auto& e : report.envelopes) {
    os << "  " << e.name << ": ";
    if (!e.evaluated) {
      os << "skipped (" << e.skip_reason << ")\n";
    } else if (e.violations == 0) {
      os << "pass\n";
    } else {
      os << "FAIL (" << e.violations << " rows, first at k=" << *e.first_violation << ")\n";
    }
  }
}

int run_command(TraceKind kind, const RunFlags& f) {
  Scenario s = load_scenario(f.scenario);
  if (s.kind != kind) {
    throw Error(ErrorCode::InvalidScenario, "'" + f.scenario + "' describes a " +
                                                (s.kind == TraceKind::Consensus ? "consensus" : "dispatch") +
                                                " problem");
  }
  apply_overrides(s, f);
  const RunOutcome out = run_scenario(s);
  if (s.out_csv) emit_csv(out.trace, *s.out_csv);
  if (s.out_svg) emit_svg(out.trace, kPlotMetrics, *s.out_svg);
  if (!f.quiet) {
    const auto& last = out.trace.back();
    std::cout << (kind == TraceKind::Consensus ? "consensus" : "dispatch") << ": n=" << s.n
              << " p=" << s.p << " rho=" << format_double(out.params.rho)
              << " eta=" << format_double(out.params.eta) << " iters=" << s.iters << "\n";
    std::cout << "  final k=" << last.k << " objective_error=" << format_double(last.objective_error)
              << " consensus_residual=" << format_double(last.consensus_residual);
    if (kind == TraceKind::Dispatch) {
      std::cout << " feasibility=" << format_double(last.feasibility)
                << " duality_gap=" << format_double(last.duality_gap);
    }
    std::cout << "\n";
    print_report(std::cout, out.report);
    if (s.out_csv) std::cout << "  wrote " << *s.out_csv << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Linearized method of multipliers over networks: consensus and economic dispatch"};
  app.require_subcommand(1);

  RunFlags cons_flags;
  auto* cons = app.add_subcommand("consensus", "Run a consensus scenario");
  cons->add_option("scenario", cons_flags.scenario, "Scenario JSON")->required();
  RunFlags disp_flags;
  auto* disp = app.add_subcommand("dispatch", "Run an economic dispatch scenario");
  disp->add_option("scenario", disp_flags.scenario, "Scenario JSON")->required();
  for (auto [cmd, f] : {std::pair{cons, &cons_flags}, std::pair{disp, &disp_flags}}) {
    cmd->add_option("--iters", f->iters, "Number of rounds");
    cmd->add_option("--out-csv", f->out_csv, "Trace CSV path");
    cmd->add_option("--out-svg", f->out_svg, "Directory for SVG plots");
    add_param_flags(cmd, *f);
  }

  std::uint64_t gen_seed = 0;
  std::string coeffs_path;
  std::string gen_out;
  long gen_iters = Ieee118Options{}.iters;
  auto* gen = app.add_subcommand("gen-ieee118", "Write the 118-bus dispatch scenario");
  gen->add_option("--seed", gen_seed, "Generator placement seed");
  gen->add_option("--coeffs", coeffs_path, "Coefficient JSON (array of {bus, a, b, c})")->required();
  gen->add_option("-o,--output", gen_out, "Scenario JSON to write")->required();
  gen->add_option("--iters", gen_iters, "Iteration count stored in the scenario");

  std::string trace_path;
  RunFlags check_flags;
  auto* check = app.add_subcommand("check", "Re-evaluate envelopes on a trace");
  check->add_option("trace", trace_path, "Trace CSV")->required();
  check->add_option("scenario", check_flags.scenario, "Scenario JSON")->required();
  add_param_flags(check, check_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*cons) return run_command(TraceKind::Consensus, cons_flags);
    if (*disp) return run_command(TraceKind::Dispatch, disp_flags);
    if (*gen) {
      const auto coeffs = load_coefficients(coeffs_path);
      std::uint64_t seed = gen_seed;
      if (const auto env = env_seed()) seed = *env;
      Ieee118Options opts;
      opts.iters = gen_iters;
      write_file_atomic(gen_out, scenario_to_json(gen_ieee118(seed, coeffs, opts)));
      return 0;
    }
    const auto trace = parse_trace_csv(read_file(trace_path));
    Scenario s = load_scenario(check_flags.scenario);
    apply_overrides(s, check_flags);
    const EnvelopeReport report = check_trace(trace, s);
    if (!check_flags.quiet) {
      std::cout << "check: " << trace.size() << " rows\n";
      print_report(std::cout, report);
    }
    return report.all_passed() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "lagranet: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lagranet

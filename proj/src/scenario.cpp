#include "lagranet/harness.hpp"

#include "lagranet/consensus.hpp"
#include "lagranet/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <variant>

namespace lagranet {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidScenario, msg); }

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; }) == allowed.end()) {
      bad("unknown key '" + item.key() + "' in " + where);
    }
  }
}

// Numbers, or null / "inf" / "-inf" for unbounded entries.
double read_bound(const json& v, double if_null, const std::string& where) {
  if (v.is_null()) return if_null;
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  bad(where + " must be a number, null, \"inf\" or \"-inf\"");
}

double read_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) bad(where + " is missing '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) bad(where + "." + key + " must be a number");
  return v.get<double>();
}

double read_number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? read_number(obj, key, where) : fallback;
}

// Scalar (broadcast) or array of length p.
Vector read_vector(const json& obj, const char* key, int p, double if_absent, double if_null,
                   const std::string& where) {
  if (!obj.contains(key)) return Vector::Constant(p, if_absent);
  const auto& v = obj.at(key);
  const std::string field = where + "." + key;
  if (!v.is_array()) return Vector::Constant(p, read_bound(v, if_null, field));
  if (static_cast<int>(v.size()) != p) bad(field + " must have length " + std::to_string(p));
  Vector out(p);
  for (int j = 0; j < p; ++j) out(j) = read_bound(v[static_cast<std::size_t>(j)], if_null, field);
  return out;
}

json bound_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index j = 0; j < v.size(); ++j) arr.push_back(bound_json(v(j)));
  return arr;
}

std::vector<Edge> rule_edges(const std::string& rule, int n) {
  std::vector<Edge> edges;
  if (rule == "next_nearest") return next_nearest_edges(n);
  if (rule == "path" || rule == "ring") {
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
    if (rule == "ring" && n > 2) edges.push_back({n - 1, 0, 1.0});
    return edges;
  }
  if (rule == "complete") {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
    }
    return edges;
  }
  bad("unknown network rule '" + rule + "'");
}

void read_network(const json& net, Scenario& s) {
  require_keys(net, {"n", "p", "edges", "rule"}, "network");
  if (!net.contains("n") || !net.at("n").is_number_integer()) bad("network.n must be an integer");
  s.n = net.at("n").get<int>();
  s.p = net.contains("p") ? net.at("p").get<int>() : 1;
  if (s.n < 1) bad("network.n must be positive");
  if (s.p < 1) bad("network.p must be positive");
  if (net.contains("rule") == net.contains("edges")) bad("network needs exactly one of 'edges' or 'rule'");
  if (net.contains("rule")) {
    s.network_rule = net.at("rule").get<std::string>();
    s.edges = rule_edges(s.network_rule, s.n);
    return;
  }
  for (const auto& e : net.at("edges")) {
    if (!e.is_array() || e.size() < 2 || e.size() > 3) bad("edges must be [i, j] or [i, j, w]");
    if (!e[0].is_number_integer() || !e[1].is_number_integer()) bad("edge endpoints must be integers");
    const int i = e[0].get<int>();
    const int j = e[1].get<int>();
    if (i < 1 || i > s.n || j < 1 || j > s.n) {
      throw Error(ErrorCode::IndexOutOfRange, "edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                                  ") outside 1.." + std::to_string(s.n));
    }
    const double w = e.size() == 3 ? e[2].get<double>() : 1.0;
    s.edges.push_back({i - 1, j - 1, w});
  }
}

LocalProblem read_problem(const json& obj, int p, const std::string& where) {
  if (!obj.is_object() || !obj.contains("type")) bad(where + " needs a 'type'");
  const auto type = obj.at("type").get<std::string>();
  if (type == "quadratic") {
    require_keys(obj, {"type", "q_diag", "q", "lo", "hi"}, where);
    return LocalProblem::quadratic_box(read_vector(obj, "q_diag", p, 0.0, 0.0, where),
                                       read_vector(obj, "q", p, 0.0, 0.0, where),
                                       read_vector(obj, "lo", p, -kInf, -kInf, where),
                                       read_vector(obj, "hi", p, kInf, kInf, where));
  }
  if (type == "absolute_value") {
    require_keys(obj, {"type", "scale", "center"}, where);
    if (p != 1) bad(where + ": absolute_value agents are scalar");
    return LocalProblem::absolute_value(read_number_or(obj, "scale", 1.0, where),
                                        read_number_or(obj, "center", 0.0, where));
  }
  bad(where + ": unknown problem type '" + type + "'");
}

json problem_json(const LocalProblem& prob) {
  if (const auto* qb = std::get_if<QuadraticBox>(&prob.kind())) {
    return {{"type", "quadratic"},
            {"q_diag", vector_json(qb->q_diag)},
            {"q", vector_json(qb->q)},
            {"lo", vector_json(qb->lo)},
            {"hi", vector_json(qb->hi)}};
  }
  if (const auto* av = std::get_if<AbsoluteValue>(&prob.kind())) {
    return {{"type", "absolute_value"}, {"scale", av->scale}, {"center", av->center}};
  }
  bad("custom problems cannot be serialized");
}

void read_costs(const json& arr, Scenario& s) {
  if (!arr.is_array()) bad("costs must be an array");
  s.costs.assign(static_cast<std::size_t>(s.n), GeneratorCost{});
  std::set<int> seen;
  for (const auto& c : arr) {
    const std::string where = "costs entry";
    require_keys(c, {"bus", "a", "b", "c", "lo", "hi"}, where);
    if (!c.contains("bus") || !c.at("bus").is_number_integer()) bad("costs entries need an integer 'bus'");
    const int bus = c.at("bus").get<int>();
    if (bus < 1 || bus > s.n) {
      throw Error(ErrorCode::IndexOutOfRange, "cost bus " + std::to_string(bus) + " outside 1.." +
                                                  std::to_string(s.n));
    }
    if (!seen.insert(bus).second) bad("duplicate cost entry for bus " + std::to_string(bus));
    GeneratorCost g;
    g.a = read_number_or(c, "a", 0.0, where);
    g.b = read_number_or(c, "b", 0.0, where);
    g.c = read_number_or(c, "c", 0.0, where);
    g.lo = read_number_or(c, "lo", 0.0, where);
    g.hi = read_number_or(c, "hi", 0.0, where);
    g.validate();
    s.costs[static_cast<std::size_t>(bus - 1)] = g;
  }
}

void read_demand(const json& dem, Scenario& s) {
  require_keys(dem, {"total", "split", "values"}, "demand");
  s.demand_split = dem.contains("split") ? dem.at("split").get<std::string>() : "equal";
  std::optional<Vector> total;
  if (dem.contains("total")) total = read_vector(dem, "total", s.p, 0.0, 0.0, "demand");
  if (s.demand_split == "equal") {
    if (!total) bad("demand.total is required for the equal split");
    s.total_demand = *total;
    s.demand = equal_generator_split(s.costs, s.total_demand);
  } else if (s.demand_split == "explicit") {
    if (!dem.contains("values") || !dem.at("values").is_array()) bad("demand.values must be an array");
    const auto& vals = dem.at("values");
    const auto len = static_cast<std::size_t>(s.n) * static_cast<std::size_t>(s.p);
    if (vals.size() != len) bad("demand.values must have length n*p = " + std::to_string(len));
    s.demand.resize(static_cast<Eigen::Index>(len));
    for (std::size_t k = 0; k < len; ++k) s.demand(static_cast<Eigen::Index>(k)) = vals[k].get<double>();
    s.total_demand = total ? *total : block_sum(s.demand, s.n, s.p);
  } else {
    bad("demand.split must be 'equal' or 'explicit'");
  }
}

}  // namespace

std::uint64_t SeededRng::index(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("SeededRng::index: empty range");
  // Rejection sampling on the top of the range keeps draws unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

double SeededRng::uniform(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

Network Scenario::network() const { return build_network(n, p, edges); }

DispatchProblem Scenario::dispatch_problem() const {
  return DispatchProblem(network(), costs, demand, total_demand);
}

// Full path plus skip-one chords among the first n - 2 nodes: 2n - 5 edges,
// 231 for the 118-bus layout.
std::vector<Edge> next_nearest_edges(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  for (int i = 0; i + 4 < n; ++i) edges.push_back({i, i + 2, 1.0});
  return edges;
}

Network parse_network_json(const std::string& text) {
  Scenario s;
  read_network(parse_json(text, "network"), s);
  return s.network();
}

Scenario parse_scenario(const std::string& text) {
  const json doc = parse_json(text, "scenario");
  require_keys(doc, {"kind", "network", "problems", "costs", "demand", "params", "iters", "seed",
                     "init", "output"},
               "scenario");
  Scenario s;
  if (!doc.contains("kind")) bad("scenario is missing 'kind'");
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "consensus") {
    s.kind = TraceKind::Consensus;
  } else if (kind == "dispatch") {
    s.kind = TraceKind::Dispatch;
  } else {
    bad("kind must be 'consensus' or 'dispatch'");
  }
  if (!doc.contains("network")) bad("scenario is missing 'network'");
  read_network(doc.at("network"), s);

  if (s.kind == TraceKind::Consensus) {
    if (!doc.contains("problems") || !doc.at("problems").is_array()) bad("consensus scenarios need 'problems'");
    const auto& arr = doc.at("problems");
    if (static_cast<int>(arr.size()) != s.n) bad("problems must list one entry per node");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      s.problems.push_back(read_problem(arr[i], s.p, "problems[" + std::to_string(i) + "]"));
    }
  } else {
    if (!doc.contains("costs")) bad("dispatch scenarios need 'costs'");
    read_costs(doc.at("costs"), s);
    if (!doc.contains("demand")) bad("dispatch scenarios need 'demand'");
    read_demand(doc.at("demand"), s);
  }

  if (doc.contains("params")) {
    const auto& prm = doc.at("params");
    require_keys(prm, {"rho", "eta"}, "params");
    s.rho = read_number_or(prm, "rho", 1.0, "params");
    if (prm.contains("eta")) {
      const auto& e = prm.at("eta");
      if (e.is_string() && e.get<std::string>() == "auto") {
        s.eta.reset();
      } else if (e.is_number()) {
        s.eta = e.get<double>();
      } else {
        bad("params.eta must be a number or \"auto\"");
      }
    }
  }
  if (doc.contains("iters")) {
    if (!doc.at("iters").is_number_integer() || doc.at("iters").get<long>() < 0) {
      bad("iters must be a nonnegative integer");
    }
    s.iters = doc.at("iters").get<long>();
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) bad("seed must be a nonnegative integer");
    s.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("init")) {
    const auto init = doc.at("init").get<std::string>();
    if (init == "zero") {
      s.init = InitRule::Zero;
    } else if (init == "random") {
      s.init = InitRule::Random;
    } else {
      bad("init must be 'zero' or 'random'");
    }
  }
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    require_keys(out, {"csv", "svg"}, "output");
    if (out.contains("csv")) s.out_csv = out.at("csv").get<std::string>();
    if (out.contains("svg")) s.out_svg = out.at("svg").get<std::string>();
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path));
}

std::string scenario_to_json(const Scenario& s) {
  json doc;
  doc["kind"] = s.kind == TraceKind::Consensus ? "consensus" : "dispatch";
  json net = {{"n", s.n}, {"p", s.p}};
  if (!s.network_rule.empty()) {
    net["rule"] = s.network_rule;
  } else {
    json edges = json::array();
    for (const auto& e : s.edges) edges.push_back({e.i + 1, e.j + 1, e.weight});
    net["edges"] = edges;
  }
  doc["network"] = net;
  if (s.kind == TraceKind::Consensus) {
    json probs = json::array();
    for (const auto& prob : s.problems) probs.push_back(problem_json(prob));
    doc["problems"] = probs;
  } else {
    json costs = json::array();
    for (std::size_t i = 0; i < s.costs.size(); ++i) {
      const auto& c = s.costs[i];
      if (!c.is_generator()) continue;
      costs.push_back({{"bus", i + 1}, {"a", c.a}, {"b", c.b}, {"c", c.c}, {"lo", c.lo}, {"hi", c.hi}});
    }
    doc["costs"] = costs;
    json dem = {{"split", s.demand_split}, {"total", vector_json(s.total_demand)}};
    if (s.demand_split == "explicit") {
      json vals = json::array();
      for (Eigen::Index k = 0; k < s.demand.size(); ++k) vals.push_back(s.demand(k));
      dem["values"] = vals;
    }
    doc["demand"] = dem;
  }
  doc["params"] = {{"rho", s.rho}};
  doc["params"]["eta"] = s.eta ? json(*s.eta) : json("auto");
  doc["iters"] = s.iters;
  doc["seed"] = s.seed;
  doc["init"] = s.init == InitRule::Zero ? "zero" : "random";
  if (s.out_csv || s.out_svg) {
    json out = json::object();
    if (s.out_csv) out["csv"] = *s.out_csv;
    if (s.out_svg) out["svg"] = *s.out_svg;
    doc["output"] = out;
  }
  return doc.dump(2) + "\n";
}

std::vector<CoefficientEntry> load_coefficients(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingCoefficientFile, "coefficient file '" + path.string() + "' not found");
  }
  const json doc = parse_json(read_file(path), "coefficient file");
  if (!doc.is_array()) bad("coefficient file must hold an array of {bus, a, b, c}");
  std::vector<CoefficientEntry> out;
  for (const auto& e : doc) {
    require_keys(e, {"bus", "a", "b", "c"}, "coefficient entry");
    if (!e.contains("bus") || !e.at("bus").is_number_integer()) bad("coefficient entries need an integer 'bus'");
    CoefficientEntry c;
    c.bus = e.at("bus").get<int>();
    c.a = read_number(e, "a", "coefficient entry");
    c.b = read_number(e, "b", "coefficient entry");
    c.c = read_number(e, "c", "coefficient entry");
    if (c.a < 0.0) bad("coefficient 'a' must be nonnegative for bus " + std::to_string(c.bus));
    out.push_back(c);
  }
  return out;
}

Scenario gen_ieee118(std::uint64_t seed, std::span<const CoefficientEntry> coeffs,
                     const Ieee118Options& opts) {
  if (static_cast<int>(coeffs.size()) != opts.generators) {
    bad("expected " + std::to_string(opts.generators) + " coefficient entries, got " +
        std::to_string(coeffs.size()));
  }
  if (opts.generators < 1 || opts.generators > opts.buses) bad("generator count outside 1..buses");

  Scenario s;
  s.kind = TraceKind::Dispatch;
  s.n = opts.buses;
  s.p = 1;
  s.network_rule = "next_nearest";
  s.edges = next_nearest_edges(s.n);
  s.seed = seed;
  s.iters = opts.iters;

  // Partial Fisher-Yates draw of the generator buses.
  std::vector<int> buses(static_cast<std::size_t>(s.n));
  std::iota(buses.begin(), buses.end(), 0);
  SeededRng rng(seed);
  for (int k = 0; k < opts.generators; ++k) {
    const auto pick = k + static_cast<int>(rng.index(static_cast<std::uint64_t>(s.n - k)));
    std::swap(buses[static_cast<std::size_t>(k)], buses[static_cast<std::size_t>(pick)]);
  }
  std::vector<int> chosen(buses.begin(), buses.begin() + opts.generators);
  std::sort(chosen.begin(), chosen.end());

  std::vector<CoefficientEntry> ordered(coeffs.begin(), coeffs.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CoefficientEntry& l, const CoefficientEntry& r) { return l.bus < r.bus; });

  s.costs.assign(static_cast<std::size_t>(s.n), GeneratorCost{});
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    auto& g = s.costs[static_cast<std::size_t>(chosen[k])];
    g.a = ordered[k].a;
    g.b = ordered[k].b;
    g.c = ordered[k].c;
    g.lo = opts.lo;
    g.hi = opts.hi;
  }
  s.demand_split = "equal";
  s.total_demand = Vector::Constant(1, opts.demand);
  s.demand = equal_generator_split(s.costs, s.total_demand);
  return s;
}

Vector initial_y(const Scenario& s) {
  const auto dim = static_cast<Eigen::Index>(s.n) * s.p;
  Vector y = Vector::Zero(dim);
  if (s.init == InitRule::Zero) return y;
  SeededRng rng(s.seed);
  for (Eigen::Index k = 0; k < dim; ++k) y(k) = rng.uniform(-1.0, 1.0);
  if (s.kind == TraceKind::Consensus) {
    for (int i = 0; i < s.n; ++i) {
      const auto* qb = std::get_if<QuadraticBox>(&s.problems[static_cast<std::size_t>(i)].kind());
      if (!qb) continue;
      auto seg = y.segment(static_cast<Eigen::Index>(i) * s.p, s.p);
      seg = seg.cwiseMax(qb->lo).cwiseMin(qb->hi);
    }
  }
  return y;
}

AlgoParams resolve_params(const Scenario& s, const SpectralData& spec) {
  const double eta = s.eta ? *s.eta : suggest_eta(spec, s.rho);
  return validate_params(spec, s.rho, eta);
}

std::optional<OracleSolution> scenario_oracle(const Scenario& s) {
  if (s.kind == TraceKind::Dispatch) return solve_dispatch_bisection(s.dispatch_problem());
  try {
    return solve_consensus(s.problems, s.network());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidProblem) return std::nullopt;
    throw;
  }
}

RunOutcome run_scenario(const Scenario& s) {
  const Network net = s.network();
  const SpectralData spec = spectral(net);
  RunOutcome out;
  out.params = resolve_params(s, spec);
  out.oracle = scenario_oracle(s);
  const Vector y0 = initial_y(s);
  const Vector lambda0 = Vector::Zero(net.dim());

  if (s.kind == TraceKind::Consensus) {
    MetricsRecorder rec(spec, out.params, s.problems, s.p, out.oracle);
    StackedState st = init_state(net, s.problems, y0, lambda0);
    run(st, s.problems, net, out.params, s.iters, [&](const StackedState& z) { rec.observe(z); });
    out.trace = rec.take();
    out.max_lambda_sum = rec.max_lambda_sum();
    out.y_final = st.y;
  } else {
    const DispatchProblem prob = s.dispatch_problem();
    MetricsRecorder rec(spec, out.params, prob, out.oracle);
    DispatchState st = init_dispatch(prob, y0, lambda0);
    run_dispatch(st, prob, out.params, s.iters, [&](const DispatchState& z) { rec.observe(z); });
    out.trace = rec.take();
    out.max_lambda_sum = rec.max_lambda_sum();
    out.y_final = st.y;
    out.x_final = st.x;
  }
  const OracleSolution* oracle = out.oracle ? &*out.oracle : nullptr;
  out.report = evaluate_envelopes(out.trace, s.kind, oracle, out.params, spec, y0, lambda0);
  apply_envelope_flags(out.trace, out.report);
  return out;
}

EnvelopeReport check_trace(std::span<const IterationMetrics> trace, const Scenario& s) {
  const Network net = s.network();
  const SpectralData spec = spectral(net);
  const AlgoParams params = resolve_params(s, spec);
  const auto oracle = scenario_oracle(s);
  return evaluate_envelopes(trace, s.kind, oracle ? &*oracle : nullptr, params, spec, initial_y(s),
                            Vector::Zero(net.dim()));
}

}  // namespace lagranet

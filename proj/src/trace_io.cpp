#include "lagranet/harness.hpp"

#include "lagranet/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace lagranet {

const std::vector<std::string> kTraceColumns = {
    "k",     "objective_error", "feasibility", "consensus_residual", "w_seminorm", "delta_z_norm",
    "env_a", "env_b",           "env_c",       "env_d",              "env_e",      "env_f",
    "lyapunov", "duality_gap"};

const std::vector<std::string> kPlotMetrics = {"objective_error", "feasibility",  "consensus_residual",
                                               "w_seminorm",      "delta_z_norm", "duality_gap"};

namespace {

constexpr double kPlotFloor = 1e-16;

[[noreturn]] void bad_trace(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::InvalidTrace, "line " + std::to_string(line) + ": " + msg);
}

const char* flag_text(EnvelopeFlag f) {
  switch (f) {
    case EnvelopeFlag::Pass: return "1";
    case EnvelopeFlag::Fail: return "0";
    case EnvelopeFlag::Skipped: break;
  }
  return "NA";
}

double parse_double(std::string_view s, std::size_t line) {
  if (s == "nan") return kNaN;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    bad_trace(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

EnvelopeFlag parse_flag(std::string_view s, std::size_t line) {
  if (s == "1") return EnvelopeFlag::Pass;
  if (s == "0") return EnvelopeFlag::Fail;
  if (s == "NA") return EnvelopeFlag::Skipped;
  bad_trace(line, "bad envelope flag '" + std::string(s) + "'");
}

std::vector<std::string_view> split_commas(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = row.find(',', start);
    out.push_back(row.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double metric_value(const IterationMetrics& m, const std::string& metric) {
  if (metric == "objective_error") return m.objective_error;
  if (metric == "feasibility") return m.feasibility;
  if (metric == "consensus_residual") return m.consensus_residual;
  if (metric == "w_seminorm") return m.w_seminorm;
  if (metric == "delta_z_norm") return m.delta_z_norm;
  if (metric == "duality_gap") return m.duality_gap;
  if (metric == "lyapunov") return m.lyapunov;
  throw Error(ErrorCode::InvalidScenario, "unknown plot metric '" + metric + "'");
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trace_to_csv(std::span<const IterationMetrics> trace) {
  std::string out;
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c) {
    if (c) out += ',';
    out += kTraceColumns[c];
  }
  out += '\n';
  for (const auto& m : trace) {
    out += std::to_string(m.k);
    for (double v : {m.objective_error, m.feasibility, m.consensus_residual, m.w_seminorm, m.delta_z_norm}) {
      out += ',';
      out += format_double(v);
    }
    for (auto f : m.envelopes) {
      out += ',';
      out += flag_text(f);
    }
    out += ',';
    out += format_double(m.lyapunov);
    out += ',';
    out += format_double(m.duality_gap);
    out += '\n';
  }
  return out;
}

std::vector<IterationMetrics> parse_trace_csv(const std::string& text) {
  std::vector<IterationMetrics> out;
  std::istringstream in(text);
  std::string row;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, row)) {
    ++line;
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    const auto cells = split_commas(row);
    if (!header) {
      if (cells.size() != kTraceColumns.size() ||
          !std::equal(cells.begin(), cells.end(), kTraceColumns.begin())) {
        bad_trace(line, "unexpected header");
      }
      header = true;
      continue;
    }
    if (cells.size() != kTraceColumns.size()) {
      bad_trace(line, "expected " + std::to_string(kTraceColumns.size()) + " fields, got " +
                          std::to_string(cells.size()));
    }
    IterationMetrics m;
    const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), m.k);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) bad_trace(line, "bad k");
    m.objective_error = parse_double(cells[1], line);
    m.feasibility = parse_double(cells[2], line);
    m.consensus_residual = parse_double(cells[3], line);
    m.w_seminorm = parse_double(cells[4], line);
    m.delta_z_norm = parse_double(cells[5], line);
    for (std::size_t e = 0; e < kEnvelopeCount; ++e) m.envelopes[e] = parse_flag(cells[6 + e], line);
    m.lyapunov = parse_double(cells[12], line);
    m.duality_gap = parse_double(cells[13], line);
    out.push_back(m);
  }
  if (!header) bad_trace(line, "missing header");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot rename into '" + path.string() + "'");
  }
}

void emit_csv(std::span<const IterationMetrics> trace, const std::filesystem::path& path) {
  write_file_atomic(path, trace_to_csv(trace));
}

std::string trace_to_svg(std::span<const IterationMetrics> trace, const std::string& metric) {
  constexpr double width = 720.0, height = 440.0;
  constexpr double left = 70.0, right = 20.0, top = 36.0, bottom = 50.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  long kmin = 0, kmax = 1;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& m : trace) {
    const double v = metric_value(m, metric);
    if (std::isnan(v)) continue;
    const double e = std::log10(std::max(std::abs(v), kPlotFloor));
    if (!any) {
      kmin = kmax = m.k;
      lo = hi = e;
      any = true;
    }
    kmin = std::min(kmin, m.k);
    kmax = std::max(kmax, m.k);
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (kmax == kmin) kmax = kmin + 1;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1.0;

  auto sx = [&](double k) { return left + pw * (k - kmin) / static_cast<double>(kmax - kmin); };
  auto sy = [&](double e) { return top + ph * (hi - e) / (hi - lo); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">|" << metric
     << "| vs iteration</text>\n";

  const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 10.0)));
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
    const double y = sy(e);
    os << "<line x1=\"" << left << "\" y1=\"" << fixed(y) << "\" x2=\"" << left + pw << "\" y2=\""
       << fixed(y) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double k = kmin + (kmax - kmin) * t / 5.0;
    const double x = sx(k);
    os << "<line x1=\"" << fixed(x) << "\" y1=\"" << top + ph << "\" x2=\"" << fixed(x) << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">"
       << static_cast<long>(std::llround(k)) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">k</text>\n";

  // NaN rows split the curve into separate polylines.
  bool open = false;
  for (const auto& m : trace) {
    const double v = metric_value(m, metric);
    if (std::isnan(v)) {
      if (open) os << "\"/>\n";
      open = false;
      continue;
    }
    if (!open) {
      os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" points=\"";
      open = true;
    } else {
      os << ' ';
    }
    const double e = std::log10(std::max(std::abs(v), kPlotFloor));
    os << fixed(sx(static_cast<double>(m.k))) << ',' << fixed(sy(e));
  }
  if (open) os << "\"/>\n";
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_svg(std::span<const IterationMetrics> trace,
                                            std::span<const std::string> metrics,
                                            const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "'");
  std::vector<std::filesystem::path> written;
  for (const auto& metric : metrics) {
    const bool has_data = std::any_of(trace.begin(), trace.end(), [&](const IterationMetrics& m) {
      return !std::isnan(metric_value(m, metric));
    });
    if (!has_data) continue;
    const auto path = dir / (metric + ".svg");
    write_file_atomic(path, trace_to_svg(trace, metric));
    written.push_back(path);
  }
  return written;
}

}  // namespace lagranet

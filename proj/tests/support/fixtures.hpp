#pragma once

// Random instance builders shared by the unit and acceptance tests.

#include "lagranet/dispatch.hpp"
#include "lagranet/error.hpp"
#include "lagranet/graph.hpp"
#include "lagranet/harness.hpp"
#include "lagranet/localprox.hpp"
#include "lagranet/oracle.hpp"

#include <optional>
#include <vector>

namespace lagranet::testing {

/// Error code thrown by fn, or empty when it returns normally.
template <class Fn>
std::optional<ErrorCode> error_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Random spanning tree plus extra edges, weights in [0.5, 2].
inline std::vector<Edge> random_connected_edges(int n, SeededRng& rng, double extra = 0.3) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) {
    const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(i)));
    edges.push_back({j, i, rng.uniform(0.5, 2.0)});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (rng.uniform(0.0, 1.0) < extra) edges.push_back({i, j, rng.uniform(0.5, 2.0)});
    }
  }
  // Drop duplicates of tree edges.
  std::vector<Edge> unique;
  for (const auto& e : edges) {
    bool dup = false;
    for (const auto& u : unique) {
      dup = dup || (std::min(u.i, u.j) == std::min(e.i, e.j) && std::max(u.i, u.j) == std::max(e.i, e.j));
    }
    if (!dup) unique.push_back(e);
  }
  return unique;
}

inline Network random_network(int n, int p, SeededRng& rng) {
  return build_network(n, p, random_connected_edges(n, rng));
}

/// Unconstrained quadratics with curvature in [0.5, 2].
inline std::vector<LocalProblem> random_quadratics(int n, int p, SeededRng& rng) {
  std::vector<LocalProblem> probs;
  for (int i = 0; i < n; ++i) {
    Vector qd(p), q(p);
    for (int j = 0; j < p; ++j) {
      qd(j) = rng.uniform(0.5, 2.0);
      q(j) = rng.uniform(-2.0, 2.0);
    }
    probs.push_back(LocalProblem::quadratic(qd, q));
  }
  return probs;
}

inline Vector random_vector(Eigen::Index len, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(len);
  for (Eigen::Index k = 0; k < len; ++k) v(k) = rng.uniform(lo, hi);
  return v;
}

struct ConsensusInstance {
  Network net;
  std::vector<LocalProblem> problems;
};

inline ConsensusInstance random_consensus(std::uint64_t seed, int n_lo = 2, int n_hi = 10) {
  SeededRng rng(seed);
  const int n = n_lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(n_hi - n_lo + 1)));
  const int p = 1 + static_cast<int>(rng.index(3));
  Network net = random_network(n, p, rng);
  return {std::move(net), random_quadratics(n, p, rng)};
}

/// Scalar dispatch instance with m generators and random positive virtual
/// demands. When `interior` is set, redraws until no generator sits on a
/// bound at the optimum.
inline DispatchProblem random_dispatch(std::uint64_t seed, int m_lo = 2, int m_hi = 10,
                                       bool interior = true) {
  SeededRng rng(seed);
  for (;;) {
    const int m = m_lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(m_hi - m_lo + 1)));
    std::vector<GeneratorCost> costs;
    double cap = 0.0;
    for (int i = 0; i < m; ++i) {
      GeneratorCost g;
      g.a = rng.uniform(0.5, 2.0);
      g.b = rng.uniform(0.0, 5.0);
      g.c = rng.uniform(0.0, 10.0);
      g.lo = 0.0;
      g.hi = rng.uniform(5.0, 15.0);
      cap += g.hi;
      costs.push_back(g);
    }
    const double total = rng.uniform(0.3, 0.7) * cap;
    Vector w = random_vector(m, rng, 0.2, 1.0);
    Vector d = total * w / w.sum();
    Vector tot = Vector::Constant(1, d.sum());
    DispatchProblem prob(random_network(m, 1, rng), costs, d, tot);
    if (!interior || solve_dispatch_bisection(prob).interior) return prob;
  }
}

}  // namespace lagranet::testing

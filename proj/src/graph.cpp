#include "lagranet/graph.hpp"

#include "lagranet/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace lagranet {

namespace {

using RowBlocks = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void require_length(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

}  // namespace

std::span<const Neighbor> Network::neighbors(int node) const {
  if (node < 0 || node >= n_) {
    throw Error(ErrorCode::IndexOutOfRange, "node " + std::to_string(node));
  }
  return adjacency_[static_cast<std::size_t>(node)];
}

double Network::degree(int node) const {
  double d = 0.0;
  for (const auto& nb : neighbors(node)) d += nb.weight;
  return d;
}

Matrix Network::laplacian() const {
  Matrix L = Matrix::Zero(n_, n_);
  for (const auto& e : edges_) {
    L(e.i, e.j) -= e.weight;
    L(e.j, e.i) -= e.weight;
    L(e.i, e.i) += e.weight;
    L(e.j, e.j) += e.weight;
  }
  return L;
}

Network build_network(int n, int p, std::span<const Edge> edges) {
  if (n < 1) throw Error(ErrorCode::IndexOutOfRange, "node count must be >= 1");
  if (p < 1) throw Error(ErrorCode::DimensionMismatch, "block dimension must be >= 1");

  Network net;
  net.n_ = n;
  net.p_ = p;
  net.adjacency_.assign(static_cast<std::size_t>(n), {});

  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
    if (e.i == e.j) throw Error(ErrorCode::SelfLoop, "node " + std::to_string(e.i));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::NonPositiveWeight, "edge (" + std::to_string(e.i) + ", " +
                                                    std::to_string(e.j) + ")");
    }
    auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::DuplicateEdge, "edge (" + std::to_string(key.first) + ", " +
                                                std::to_string(key.second) + ")");
    }
    net.edges_.push_back(e);
    net.adjacency_[static_cast<std::size_t>(e.i)].push_back({e.j, e.weight});
    net.adjacency_[static_cast<std::size_t>(e.j)].push_back({e.i, e.weight});
  }

  // Connectivity by traversal from node 0.
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  visited[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (const auto& nb : net.adjacency_[static_cast<std::size_t>(u)]) {
      if (!visited[static_cast<std::size_t>(nb.node)]) {
        visited[static_cast<std::size_t>(nb.node)] = 1;
        ++reached;
        stack.push_back(nb.node);
      }
    }
  }
  if (reached != n) {
    throw Error(ErrorCode::DisconnectedGraph, "reached " + std::to_string(reached) + " of " +
                                                  std::to_string(n) + " nodes");
  }
  return net;
}

void laplacian_apply(const Network& net, const Eigen::Ref<const Vector>& y,
                     Eigen::Ref<Vector> out) {
  require_length(y.size(), net.dim(), "y");
  require_length(out.size(), net.dim(), "output");
  const int p = net.p();
  for (int i = 0; i < net.n(); ++i) {
    auto yi = y.segment(static_cast<Eigen::Index>(i) * p, p);
    auto ti = out.segment(static_cast<Eigen::Index>(i) * p, p);
    ti.setZero();
    for (const auto& nb : net.neighbors(i)) {
      ti += nb.weight * (yi - y.segment(static_cast<Eigen::Index>(nb.node) * p, p));
    }
  }
}

Vector laplacian_apply(const Network& net, const Eigen::Ref<const Vector>& y) {
  Vector out(net.dim());
  laplacian_apply(net, y, out);
  return out;
}

Matrix lifted_laplacian(const Network& net) {
  const Matrix L = net.laplacian();
  const int p = net.p();
  Matrix W = Matrix::Zero(net.dim(), net.dim());
  for (int i = 0; i < net.n(); ++i) {
    for (int j = 0; j < net.n(); ++j) {
      if (L(i, j) == 0.0) continue;
      W.block(static_cast<Eigen::Index>(i) * p, static_cast<Eigen::Index>(j) * p, p, p) =
          L(i, j) * Matrix::Identity(p, p);
    }
  }
  return W;
}

SpectralData spectral(const Network& net) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(net.laplacian());
  SpectralData out;
  out.eigvals = solver.eigenvalues();
  out.eigvecs = solver.eigenvectors();
  out.lambda_max = std::max(0.0, out.eigvals(out.eigvals.size() - 1));
  return out;
}

namespace {

// Coefficients of u in the eigenbasis, one row per eigenvector.
Matrix spectral_coefficients(const SpectralData& spec, int p, const Eigen::Ref<const Vector>& u) {
  const Eigen::Index n = spec.eigvals.size();
  require_length(u.size(), n * p, "u");
  RowBlocks blocks(u.data(), n, p);
  return spec.eigvecs.transpose() * blocks;
}

}  // namespace

double wdag_quadform(const SpectralData& spec, int p, const Eigen::Ref<const Vector>& u) {
  const Matrix c = spectral_coefficients(spec, p, u);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double ev = spec.eigvals(i);
    if (ev > kZeroEigenvalue) acc += c.row(i).squaredNorm() / ev;
  }
  return acc;
}

double w_quadform(const SpectralData& spec, int p, const Eigen::Ref<const Vector>& u) {
  const Matrix c = spectral_coefficients(spec, p, u);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double ev = spec.eigvals(i);
    if (ev > kZeroEigenvalue) acc += c.row(i).squaredNorm() * ev;
  }
  return acc;
}

Vector block_sum(const Eigen::Ref<const Vector>& u, int n, int p) {
  require_length(u.size(), static_cast<Eigen::Index>(n) * p, "u");
  Vector s = Vector::Zero(p);
  for (int i = 0; i < n; ++i) s += u.segment(static_cast<Eigen::Index>(i) * p, p);
  return s;
}

Vector consensus_deviation(const Eigen::Ref<const Vector>& u, int n, int p) {
  const Vector mean = block_sum(u, n, p) / static_cast<double>(n);
  Vector out = u;
  for (int i = 0; i < n; ++i) out.segment(static_cast<Eigen::Index>(i) * p, p) -= mean;
  return out;
}

}  // namespace lagranet

#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace lagranet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Undirected weighted edge between two 0-based nodes.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

struct Neighbor {
  int node = 0;
  double weight = 0.0;
};

/// Eigenvalues below this magnitude are treated as exact zeros.
inline constexpr double kZeroEigenvalue = 1e-10;

/// A connected, undirected, positively weighted communication graph whose
/// nodes each own a p-dimensional block of every stacked vector.
///
/// Stacked vectors have length n*p; block i occupies [i*p, (i+1)*p).
/// Instances are immutable once built and safe to share between threads.
class Network {
 public:
  int n() const noexcept { return n_; }
  int p() const noexcept { return p_; }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(n_) * p_; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(int node) const;
  double degree(int node) const;

  /// Dense n x n Laplacian (not lifted by I_p).
  Matrix laplacian() const;

 private:
  friend Network build_network(int n, int p, std::span<const Edge> edges);

  int n_ = 0;
  int p_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Validates and builds a network from 0-based edges, each listed once.
/// Throws Error with DisconnectedGraph, NonPositiveWeight, SelfLoop,
/// DuplicateEdge or IndexOutOfRange.
Network build_network(int n, int p, std::span<const Edge> edges);

/// out = (L kron I_p) y, computed from neighbor differences only:
/// block i is sum_j w_ij (y_i - y_j).
void laplacian_apply(const Network& net, const Eigen::Ref<const Vector>& y,
                     Eigen::Ref<Vector> out);
Vector laplacian_apply(const Network& net, const Eigen::Ref<const Vector>& y);

/// Dense lifted Laplacian W = L kron I_p.
Matrix lifted_laplacian(const Network& net);

struct SpectralData {
  Vector eigvals;  // nondecreasing, eigvals(0) ~ 0
  Matrix eigvecs;  // orthonormal columns
  double lambda_max = 0.0;

  int n() const noexcept { return static_cast<int>(eigvals.size()); }
  /// Algebraic connectivity; 0 for a single node.
  double lambda_2() const noexcept { return eigvals.size() > 1 ? eigvals(1) : 0.0; }
};

SpectralData spectral(const Network& net);

/// ||u||^2 in the pseudoinverse metric of W = L kron I_p. The consensus
/// component of u is ignored.
double wdag_quadform(const SpectralData& spec, int p, const Eigen::Ref<const Vector>& u);

/// <u, W u> evaluated through the spectrum.
double w_quadform(const SpectralData& spec, int p, const Eigen::Ref<const Vector>& u);

/// Removes the network-average block from every block of u.
Vector consensus_deviation(const Eigen::Ref<const Vector>& u, int n, int p);

/// Sum of the n blocks of u (a p-vector).
Vector block_sum(const Eigen::Ref<const Vector>& u, int n, int p);

}  // namespace lagranet

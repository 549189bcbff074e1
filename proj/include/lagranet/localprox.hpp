#pragma once

#include "lagranet/graph.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>

namespace lagranet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// g(y) = sum_j 0.5*Q_jj*y_j^2 + q_j*y_j restricted to lo <= y <= hi.
struct QuadraticBox {
  Vector q_diag;
  Vector q;
  Vector lo;
  Vector hi;
};

/// g(y) = scale * |y - center| for scalar y.
struct AbsoluteValue {
  double scale = 1.0;
  double center = 0.0;
};

/// Caller-supplied prox oracle: returns argmin_y g(y) - <linear, y> + eta/2 ||y - anchor||^2
/// over the caller's constraint set. `value` is optional and only used for
/// objective reporting.
struct CustomProx {
  int dim = 1;
  std::function<Vector(const Vector& linear, const Vector& anchor, double eta)> solve;
  std::function<double(const Vector& y)> value;
};

/// One agent's objective g_i together with its constraint set Y_i.
class LocalProblem {
 public:
  using Kind = std::variant<QuadraticBox, AbsoluteValue, CustomProx>;

  static LocalProblem quadratic_box(Vector q_diag, Vector q, Vector lo, Vector hi);
  /// Unconstrained quadratic (box is all of R^p).
  static LocalProblem quadratic(Vector q_diag, Vector q);
  static LocalProblem absolute_value(double scale, double center);
  static LocalProblem custom(CustomProx prox);

  int dim() const;
  const Kind& kind() const noexcept { return kind_; }
  bool is_quadratic_box() const noexcept { return std::holds_alternative<QuadraticBox>(kind_); }

  /// True when y lies in Y_i (within tol for box bounds).
  bool contains(const Eigen::Ref<const Vector>& y, double tol = 0.0) const;
  /// g_i(y); NaN for custom problems without a value callback.
  double value(const Eigen::Ref<const Vector>& y) const;

 private:
  explicit LocalProblem(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// argmin_{y in Y} g(y) - <linear, y> + eta/2 ||y - anchor||^2.
/// Throws NonPositiveEta, DimensionMismatch, or CustomSolverFailure (with
/// `agent` attached) when a custom oracle throws or returns a bad size.
Vector prox_step(const LocalProblem& prob, const Eigen::Ref<const Vector>& linear,
                 const Eigen::Ref<const Vector>& anchor, double eta, std::size_t agent = 0);

/// Quadratic generator cost a*x^2 + b*x + c over the box [lo, hi]. Buses
/// without a generator use a = b = c = 0 and lo = hi = 0.
struct GeneratorCost {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool is_generator() const noexcept {
    return !(a == 0.0 && b == 0.0 && c == 0.0 && lo == 0.0 && hi == 0.0);
  }
  bool pinned() const noexcept { return lo == hi; }
  void validate() const;
};

/// argmin_{lo <= xi <= hi} f(xi) + eta/2 ||jbase + xi/eta||^2, coordinatewise.
Vector dispatch_x_step(const GeneratorCost& cost, const Eigen::Ref<const Vector>& jbase, double eta);

/// sum_j (a x_j^2 + b x_j + c).
double eval_cost(const GeneratorCost& cost, const Eigen::Ref<const Vector>& x);

/// Total cost over stacked x (block i belongs to costs[i]).
double total_cost(std::span<const GeneratorCost> costs, const Eigen::Ref<const Vector>& x, int p);

/// Exact minimizer of a*x^2 + (b + slope)*x over [lo, hi] (scalar).
double minimize_quadratic_on_interval(double a, double linear, double lo, double hi);

}  // namespace lagranet

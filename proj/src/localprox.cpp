#include "lagranet/localprox.hpp"

#include "lagranet/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lagranet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorCode::NonPositiveEta, "eta=" + std::to_string(eta));
  }
}

void require_dim(Eigen::Index got, int want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

double soft_threshold(double v, double thresh) {
  if (v > thresh) return v - thresh;
  if (v < -thresh) return v + thresh;
  return 0.0;
}

}  // namespace

LocalProblem LocalProblem::quadratic_box(Vector q_diag, Vector q, Vector lo, Vector hi) {
  const auto p = q_diag.size();
  if (p < 1 || q.size() != p || lo.size() != p || hi.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic_box fields must share length >= 1");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(q_diag(j) >= 0.0) || !std::isfinite(q_diag(j))) {
      throw Error(ErrorCode::InvalidProblem, "Q_diag must be finite and nonnegative");
    }
    if (!std::isfinite(q(j))) throw Error(ErrorCode::InvalidProblem, "q must be finite");
    if (std::isnan(lo(j)) || std::isnan(hi(j)) || lo(j) > hi(j)) {
      throw Error(ErrorCode::InvalidProblem, "box requires lo <= hi");
    }
  }
  return LocalProblem(QuadraticBox{std::move(q_diag), std::move(q), std::move(lo), std::move(hi)});
}

LocalProblem LocalProblem::quadratic(Vector q_diag, Vector q) {
  const auto p = q_diag.size();
  return quadratic_box(std::move(q_diag), std::move(q), Vector::Constant(p, -kInf),
                       Vector::Constant(p, kInf));
}

LocalProblem LocalProblem::absolute_value(double scale, double center) {
  if (!(scale >= 0.0) || !std::isfinite(scale) || !std::isfinite(center)) {
    throw Error(ErrorCode::InvalidProblem, "absolute value needs finite scale >= 0");
  }
  return LocalProblem(AbsoluteValue{scale, center});
}

LocalProblem LocalProblem::custom(CustomProx prox) {
  if (prox.dim < 1 || !prox.solve) {
    throw Error(ErrorCode::InvalidProblem, "custom prox needs dim >= 1 and a solver");
  }
  return LocalProblem(std::move(prox));
}

int LocalProblem::dim() const {
  return std::visit(Overloaded{
                        [](const QuadraticBox& qb) { return static_cast<int>(qb.q_diag.size()); },
                        [](const AbsoluteValue&) { return 1; },
                        [](const CustomProx& c) { return c.dim; },
                    },
                    kind_);
}

bool LocalProblem::contains(const Eigen::Ref<const Vector>& y, double tol) const {
  if (y.size() != dim()) return false;
  if (const auto* qb = std::get_if<QuadraticBox>(&kind_)) {
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      if (!(y(j) >= qb->lo(j) - tol && y(j) <= qb->hi(j) + tol)) return false;
    }
  }
  return y.allFinite();
}

double LocalProblem::value(const Eigen::Ref<const Vector>& y) const {
  return std::visit(
      Overloaded{
          [&](const QuadraticBox& qb) {
            return (0.5 * qb.q_diag.array() * y.array().square() + qb.q.array() * y.array()).sum();
          },
          [&](const AbsoluteValue& av) { return av.scale * std::abs(y(0) - av.center); },
          [&](const CustomProx& c) {
            return c.value ? c.value(Vector(y)) : std::numeric_limits<double>::quiet_NaN();
          },
      },
      kind_);
}

Vector prox_step(const LocalProblem& prob, const Eigen::Ref<const Vector>& linear,
                 const Eigen::Ref<const Vector>& anchor, double eta, std::size_t agent) {
  require_eta(eta);
  const int p = prob.dim();
  require_dim(linear.size(), p, "linear");
  require_dim(anchor.size(), p, "anchor");

  return std::visit(
      Overloaded{
          [&](const QuadraticBox& qb) -> Vector {
            Vector y(p);
            for (int j = 0; j < p; ++j) {
              const double v = (eta * anchor(j) + linear(j) - qb.q(j)) / (qb.q_diag(j) + eta);
              y(j) = std::clamp(v, qb.lo(j), qb.hi(j));
            }
            return y;
          },
          [&](const AbsoluteValue& av) -> Vector {
            // prox of c|y - r| at v = anchor + linear/eta
            const double v = anchor(0) + linear(0) / eta;
            Vector y(1);
            y(0) = av.center + soft_threshold(v - av.center, av.scale / eta);
            return y;
          },
          [&](const CustomProx& c) -> Vector {
            Vector y;
            try {
              y = c.solve(Vector(linear), Vector(anchor), eta);
            } catch (const std::exception& ex) {
              throw CustomSolverFailure(agent, ex.what());
            }
            if (y.size() != p) throw CustomSolverFailure(agent, "returned wrong dimension");
            if (!y.allFinite()) throw CustomSolverFailure(agent, "returned non-finite point");
            return y;
          },
      },
      prob.kind());
}

void GeneratorCost::validate() const {
  if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw Error(ErrorCode::InvalidProblem, "generator cost needs finite a >= 0, b, c");
  }
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    throw Error(ErrorCode::InvalidProblem, "generator box requires lo <= hi");
  }
  if (a == 0.0 && (std::isinf(lo) || std::isinf(hi)) && b != 0.0) {
    throw Error(ErrorCode::InvalidProblem, "linear cost on an unbounded box");
  }
}

double minimize_quadratic_on_interval(double a, double linear, double lo, double hi) {
  if (lo == hi) return lo;
  if (a > 0.0) return std::clamp(-linear / (2.0 * a), lo, hi);
  if (linear > 0.0) return lo;
  if (linear < 0.0) return hi;
  return std::clamp(0.0, lo, hi);
}

Vector dispatch_x_step(const GeneratorCost& cost, const Eigen::Ref<const Vector>& jbase, double eta) {
  require_eta(eta);
  Vector x(jbase.size());
  const double curvature = 2.0 * cost.a + 1.0 / eta;
  for (Eigen::Index j = 0; j < jbase.size(); ++j) {
    x(j) = std::clamp(-(cost.b + jbase(j)) / curvature, cost.lo, cost.hi);
  }
  return x;
}

double eval_cost(const GeneratorCost& cost, const Eigen::Ref<const Vector>& x) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    acc += cost.a * x(j) * x(j) + cost.b * x(j) + cost.c;
  }
  return acc;
}

double total_cost(std::span<const GeneratorCost> costs, const Eigen::Ref<const Vector>& x, int p) {
  if (x.size() != static_cast<Eigen::Index>(costs.size()) * p) {
    throw Error(ErrorCode::DimensionMismatch, "stacked x does not match cost list");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    acc += eval_cost(costs[i], x.segment(static_cast<Eigen::Index>(i) * p, p));
  }
  return acc;
}

}  // namespace lagranet

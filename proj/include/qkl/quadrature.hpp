#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace qkl {

/// Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 2*order - 1.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  GaussLegendreRule rule{std::vector<double>(order), std::vector<double>(order)};
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_order.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

/// Composite Gauss-Legendre quadrature on [a, b] with equal panels.
/// Nodes are stored panel by panel, ascending; weights sum to b - a.
struct Quadrature {
  double a = 0.0;
  double b = 0.0;
  int panels = 0;
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double panel_width() const { return (b - a) / panels; }

  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

inline Quadrature composite_gauss_legendre(double a, double b, int panels, int order) {
  if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: need b > a");
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be >= 1");
  const GaussLegendreRule rule = gauss_legendre(order);
  Quadrature q;
  q.a = a;
  q.b = b;
  q.panels = panels;
  q.order = order;
  q.nodes.reserve(static_cast<std::size_t>(panels) * order);
  q.weights.reserve(q.nodes.capacity());
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * h;
    for (int i = 0; i < order; ++i) {
      q.nodes.push_back(left + 0.5 * h * (rule.nodes[i] + 1.0));
      q.weights.push_back(0.5 * h * rule.weights[i]);
    }
  }
  return q;
}

/// Composite rule with roughly `total_nodes` nodes: the panel order is the largest
/// of {8, 4, 2, 1} dividing total_nodes.
inline Quadrature composite_gauss_legendre_nodes(double a, double b, int total_nodes) {
  if (total_nodes < 1) throw std::invalid_argument("composite_gauss_legendre_nodes: need >= 1 node");
  int order = 1;
  for (int o : {8, 4, 2}) {
    if (total_nodes % o == 0) {
      order = o;
      break;
    }
  }
  return composite_gauss_legendre(a, b, total_nodes / order, order);
}

/// Barycentric Lagrange interpolation of panel-wise samples at an arbitrary t in [a, b].
/// `values(i)` returns the sample at node i; any type supporting scalar*value and + works.
template <typename Sampler>
auto interpolate_panel(const Quadrature& q, double t, Sampler&& values) {
  if (t < q.a - 1e-14 || t > q.b + 1e-14)
    throw std::invalid_argument("interpolate_panel: t outside quadrature interval");
  const double h = q.panel_width();
  int p = static_cast<int>(std::floor((t - q.a) / h));
  p = std::clamp(p, 0, q.panels - 1);
  const std::size_t base = static_cast<std::size_t>(p) * q.order;
  using Value = std::decay_t<decltype(values(std::size_t{0}))>;
  for (int i = 0; i < q.order; ++i) {
    if (std::abs(t - q.nodes[base + i]) < 1e-15 * std::max(1.0, std::abs(t)))
      return Value(values(base + i));
  }
  // Barycentric weights for this panel's nodes (second form).
  std::vector<double> bw(q.order, 1.0);
  for (int i = 0; i < q.order; ++i)
    for (int j = 0; j < q.order; ++j)
      if (i != j) bw[i] /= (q.nodes[base + i] - q.nodes[base + j]);
  double denom = 0.0;
  Value num = Value(0.0 * values(base));
  for (int i = 0; i < q.order; ++i) {
    const double c = bw[i] / (t - q.nodes[base + i]);
    denom += c;
    num = num + c * values(base + i);
  }
  return Value((1.0 / denom) * num);
}

}  // namespace qkl

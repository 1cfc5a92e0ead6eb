//
// Project     : gcah2
// Module      : quadrature.cpp
// Description : Gauss, Green box, Sauter-Schwab and Duffy rules
//

#include "gcah2/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

namespace gcah2 {

const char* to_string(PairKind kind) {
  switch (kind) {
    case PairKind::identical: return "identical";
    case PairKind::edge: return "edge";
    case PairKind::vertex: return "vertex";
    case PairKind::disjoint: return "disjoint";
  }
  return "unknown";
}

namespace {

void check_order(int m, const char* who) {
  if (m < 1 || m > max_gauss_order)
    throw ParameterError(std::string(who) + ": order " + std::to_string(m) + " outside [1," +
                         std::to_string(max_gauss_order) + "]");
}

// Gauss-Legendre on [0,1]
Rule1D unit_interval_rule(int m) {
  auto r = gauss_legendre(m);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.points[i] = 0.5 * (r.points[i] + 1.0);
    r.weights[i] *= 0.5;
  }
  return r;
}

}  // namespace

//////////////////////////////////////////////////////////////////////
//
// 1D rules
//
//////////////////////////////////////////////////////////////////////

Rule1D gauss_legendre(int m) {
  check_order(m, "gauss_legendre");

  // P_m(x) and P_m'(x) by the three-term recurrence
  auto legendre = [m](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= m; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = m == 1 ? 1.0 : m * (x * p1 - p0) / (x * x - 1.0);
    return std::pair{p1, dp};
  };

  Rule1D r;
  r.points.assign(m, 0.0);
  r.weights.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Newton iteration started from the asymptotic root location
    double x = m == 1 ? 0.0 : std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.points[i] = -x;
    r.points[m - 1 - i] = x;
    r.weights[i] = w;
    r.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) r.points[m / 2] = 0.0;
  return r;
}

Rule1D gauss_jacobi_10(int m) {
  check_order(m, "gauss_jacobi_10");

  // Golub-Welsch with the monic Jacobi recurrence for alpha = 1, beta = 0
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int n = 0; n < m; ++n) J(n, n) = -1.0 / ((2.0 * n + 1.0) * (2.0 * n + 3.0));
  for (int n = 1; n < m; ++n) {
    const double b = n * (n + 1.0) / ((2.0 * n + 1.0) * (2.0 * n + 1.0));
    J(n, n - 1) = J(n - 1, n) = std::sqrt(b);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);

  const double mu0 = 2.0;  // integral of (1-x) over [-1,1]
  Rule1D r;
  r.points.resize(m);
  r.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    r.points[i] = eig.eigenvalues()[i];
    r.weights[i] = mu0 * eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
  }
  return r;
}

TriangleRule triangle_gauss(int q) {
  const auto ru = gauss_jacobi_10(q);
  const auto rv = gauss_legendre(q);

  TriangleRule r;
  r.points.reserve(q * q);
  r.weights.reserve(q * q);
  for (int i = 0; i < q; ++i) {
    const double u = 0.5 * (1.0 + ru.points[i]);
    const double wu = 0.25 * ru.weights[i];
    for (int j = 0; j < q; ++j) {
      const double v = 0.5 * (1.0 + rv.points[j]);
      r.points.emplace_back(u, v * (1.0 - u));
      r.weights.push_back(wu * 0.5 * rv.weights[j]);
    }
  }
  return r;
}

//////////////////////////////////////////////////////////////////////
//
// Green box rule
//
//////////////////////////////////////////////////////////////////////

GreenRule green_box_rule(const BoundingBox& box, double delta, int m) {
  if (!(delta > 0.0)) throw ParameterError("green_box_rule: delta must be positive");
  if (box.empty()) throw ArgumentError("green_box_rule: empty box");
  const auto g = gauss_legendre(m);

  GreenRule r;
  r.omega = BoundingBox::from_corners(box.lower - Vec3::Constant(delta), box.upper + Vec3::Constant(delta));
  const Vec3 lo = r.omega.lower, hi = r.omega.upper;
  const Vec3 half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);

  const std::size_t k = 6 * static_cast<std::size_t>(m) * m;
  r.points.reserve(k);
  r.normals.reserve(k);
  r.weights.reserve(k);
  for (int axis = 0; axis < 3; ++axis) {
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      Vec3 n = Vec3::Zero();
      n[axis] = side == 0 ? -1.0 : 1.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          Vec3 z;
          z[axis] = side == 0 ? lo[axis] : hi[axis];
          z[i] = mid[i] + half[i] * g.points[a];
          z[j] = mid[j] + half[j] * g.points[b];
          r.points.push_back(z);
          r.normals.push_back(n);
          r.weights.push_back(g.weights[a] * g.weights[b] * half[i] * half[j]);
        }
    }
  }
  return r;
}

//////////////////////////////////////////////////////////////////////
//
// singular pairs
//
//////////////////////////////////////////////////////////////////////

SingularityCase classify_pair(const Triangle& t, const Triangle& s) {
  SingularityCase c{};
  int common = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (t[i] == s[j]) {
        c.row_perm[common] = i;
        c.col_perm[common] = j;
        ++common;
        break;
      }

  auto complete = [common](std::array<int, 3>& perm) {
    int filled = common;
    for (int i = 0; i < 3 && filled < 3; ++i) {
      bool used = false;
      for (int k = 0; k < filled; ++k) used = used || perm[k] == i;
      if (!used) perm[filled++] = i;
    }
  };
  complete(c.row_perm);
  complete(c.col_perm);

  static constexpr PairKind by_common[4] = {PairKind::disjoint, PairKind::vertex, PairKind::edge, PairKind::identical};
  c.kind = by_common[common];
  return c;
}

//
// Sauter-Schwab relative-coordinate substitutions on the simplex
// {0 <= x2 <= x1 <= 1}; the affine map (x1 - x2, x2) moves it to the
// reference triangle while keeping the vertex order
//
PairRule sauter_rule(PairKind kind, int q) {
  check_order(q, "sauter_rule");
  PairRule r;

  if (kind == PairKind::disjoint) {
    const auto tri = triangle_gauss(q);
    const std::size_t n = tri.size();
    r.x.reserve(n * n);
    r.y.reserve(n * n);
    r.weights.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        r.x.push_back(tri.points[i]);
        r.y.push_back(tri.points[j]);
        r.weights.push_back(tri.weights[i] * tri.weights[j]);
      }
    return r;
  }

  int subdomains = 0;
  switch (kind) {
    case PairKind::identical: subdomains = 6; break;
    case PairKind::edge: subdomains = 5; break;
    case PairKind::vertex: subdomains = 2; break;
    default: throw ArgumentError("sauter_rule: unknown pair kind");
  }

  const auto g = unit_interval_rule(q);
  const std::size_t n = static_cast<std::size_t>(subdomains) * q * q * q * q;
  r.x.reserve(n);
  r.y.reserve(n);
  r.weights.reserve(n);
  auto add = [&r](double x1, double x2, double y1, double y2, double w) {
    r.x.emplace_back(x1 - x2, x2);
    r.y.emplace_back(y1 - y2, y2);
    r.weights.push_back(w);
  };

  for (int a = 0; a < q; ++a) {
    const double xi = g.points[a];
    for (int b = 0; b < q; ++b) {
      const double e1 = g.points[b];
      for (int c = 0; c < q; ++c) {
        const double e2 = g.points[c];
        for (int d = 0; d < q; ++d) {
          const double e3 = g.points[d];
          const double w = g.weights[a] * g.weights[b] * g.weights[c] * g.weights[d];
          const double xi3 = xi * xi * xi;

          switch (kind) {
            case PairKind::identical: {
              const double lw = w * xi3 * e1 * e1 * e2;
              add(xi, xi * (1.0 - e1 + e1 * e2), xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1), lw);
              add(xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1), xi, xi * (1.0 - e1 + e1 * e2), lw);
              add(xi, xi * e1 * (1.0 - e2 + e2 * e3), xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), lw);
              add(xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * (1.0 - e2 + e2 * e3), lw);
              add(xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * (1.0 - e2), lw);
              add(xi, xi * e1 * (1.0 - e2), xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), lw);
              break;
            }
            case PairKind::edge: {
              const double lw = w * xi3 * e1 * e1 * e2;
              add(xi, xi * e1 * e3, xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), w * xi3 * e1 * e1);
              add(xi, xi * e1, xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), lw);
              add(xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * e2 * e3, lw);
              add(xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), xi, xi * e1, lw);
              add(xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * e2, lw);
              break;
            }
            case PairKind::vertex: {
              const double lw = w * xi3 * e2;
              add(xi, xi * e1, xi * e2, xi * e2 * e3, lw);
              add(xi * e2, xi * e2 * e3, xi, xi * e1, lw);
              break;
            }
            default: break;
          }
        }
      }
    }
  }
  return r;
}

TriangleRule duffy_rule(int singular_vertex, int q) {
  if (singular_vertex < 0 || singular_vertex > 2) throw ArgumentError("duffy_rule: vertex must be 0, 1 or 2");
  const auto g = unit_interval_rule(q);

  TriangleRule r;
  r.points.reserve(q * q);
  r.weights.reserve(q * q);
  for (int a = 0; a < q; ++a) {
    const double u = g.points[a];
    for (int b = 0; b < q; ++b) {
      const double v = g.points[b];
      // barycentric coordinates with respect to (singular, next, next-but-one)
      const double local[3] = {1.0 - u, u * (1.0 - v), u * v};
      double bary[3];
      for (int k = 0; k < 3; ++k) bary[(singular_vertex + k) % 3] = local[k];
      r.points.emplace_back(bary[1], bary[2]);
      r.weights.push_back(g.weights[a] * g.weights[b] * u);
    }
  }
  return r;
}

}  // namespace gcah2

#include "schloegl/actuators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace schloegl {

double control_norm(const ControlVector& u, NormKind norm) {
  if (u.size() == 0) return 0.0;
  switch (norm) {
    case NormKind::Euclidean:
      return u.norm();
    case NormKind::Max:
      return u.cwiseAbs().maxCoeff();
  }
  return u.norm();
}

const char* to_string(NormKind norm) {
  return norm == NormKind::Max ? "max" : "euclidean";
}

NormKind parse_norm_kind(const std::string& text) {
  if (text == "euclidean" || text == "l2") return NormKind::Euclidean;
  if (text == "max" || text == "inf" || text == "linf") return NormKind::Max;
  throw std::invalid_argument("unknown control norm '" + text + "' (expected euclidean or max)");
}

ActuatorGrid::ActuatorGrid(int m, double r, const RectangleDomain& domain) : m_(m), r_(r), domain_(domain) {
  if (m < 1) throw std::invalid_argument("build_actuator_grid: M must be >= 1");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("build_actuator_grid: width fraction r must lie in (0,1)");

  const double hx = r * domain.lx() / (2.0 * m);
  const double hy = r * domain.ly() / (2.0 * m);
  // Actuator index runs fastest along x, matching the mesh node ordering.
  for (int l = 1; l <= m; ++l) {
    for (int k = 1; k <= m; ++k) {
      const Point c{(2.0 * k - 1.0) * domain.lx() / (2.0 * m), (2.0 * l - 1.0) * domain.ly() / (2.0 * m)};
      centers_.push_back(c);
      boxes_.push_back({c.x - hx, c.x + hx, c.y - hy, c.y + hy});
    }
  }
}

Eigen::VectorXd ActuatorGrid::volumes() const {
  Eigen::VectorXd v(count());
  for (int j = 0; j < count(); ++j) v[j] = boxes_[static_cast<std::size_t>(j)].volume();
  return v;
}

double ActuatorGrid::coverage() const { return volumes().sum() / domain_.area(); }

ActuatorGrid build_actuator_grid(int m, double r, const RectangleDomain& domain) {
  return ActuatorGrid(m, r, domain);
}

namespace {

using Polygon = std::vector<Point>;

// Sutherland-Hodgman against one axis-aligned half-plane. `axis` 0 clips on
// x, 1 on y; `keep_above` selects coordinate >= bound, otherwise <= bound.
Polygon clip_half_plane(const Polygon& poly, int axis, double bound, bool keep_above) {
  Polygon out;
  if (poly.empty()) return out;
  const auto coord = [axis](const Point& p) { return axis == 0 ? p.x : p.y; };
  const auto inside = [&](const Point& p) { return keep_above ? coord(p) >= bound : coord(p) <= bound; };
  const auto cross = [&](const Point& a, const Point& b) {
    const double t = (bound - coord(a)) / (coord(b) - coord(a));
    Point p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    // Land exactly on the clip line.
    if (axis == 0) p.x = bound; else p.y = bound;
    return p;
  };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& cur = poly[i];
    const Point& next = poly[(i + 1) % poly.size()];
    const bool in_cur = inside(cur);
    const bool in_next = inside(next);
    if (in_cur) out.push_back(cur);
    if (in_cur != in_next) out.push_back(cross(cur, next));
  }
  return out;
}

// Area and centroid of a simple polygon.
void polygon_moments(const Polygon& poly, double& area, Point& centroid) {
  double a2 = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  const Point& o = poly.front();
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[i + 1];
    const double w = (p.x - o.x) * (q.y - o.y) - (q.x - o.x) * (p.y - o.y);
    a2 += w;
    cx += w * (o.x + p.x + q.x);
    cy += w * (o.y + p.y + q.y);
  }
  area = 0.5 * a2;
  if (a2 != 0.0) {
    centroid = {cx / (3.0 * a2), cy / (3.0 * a2)};
  } else {
    centroid = o;
  }
}

}  // namespace

CouplingMatrix discretize_actuators(const ActuatorGrid& grid, const StructuredTriangulation& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int j = 0; j < grid.count(); ++j) {
    const Box& box = grid.boxes()[static_cast<std::size_t>(j)];
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
      const Point& a = mesh.node(tri[0]);
      const Point& b = mesh.node(tri[1]);
      const Point& c = mesh.node(tri[2]);
      if (std::max({a.x, b.x, c.x}) <= box.x0 || std::min({a.x, b.x, c.x}) >= box.x1 ||
          std::max({a.y, b.y, c.y}) <= box.y0 || std::min({a.y, b.y, c.y}) >= box.y1) {
        continue;
      }
      Polygon poly{a, b, c};
      poly = clip_half_plane(poly, 0, box.x0, true);
      poly = clip_half_plane(poly, 0, box.x1, false);
      poly = clip_half_plane(poly, 1, box.y0, true);
      poly = clip_half_plane(poly, 1, box.y1, false);
      if (poly.size() < 3) continue;
      double area = 0.0;
      Point g;
      polygon_moments(poly, area, g);
      if (area <= 0.0) continue;
      // phi_a is linear, so its integral over the clip is area * phi_a(centroid).
      const double tri_area = mesh.signed_area(t);
      const double l1 = ((b.x - g.x) * (c.y - g.y) - (c.x - g.x) * (b.y - g.y)) / (2.0 * tri_area);
      const double l2 = ((c.x - g.x) * (a.y - g.y) - (a.x - g.x) * (c.y - g.y)) / (2.0 * tri_area);
      const double l3 = 1.0 - l1 - l2;
      triplets.emplace_back(tri[0], j, area * l1);
      triplets.emplace_back(tri[1], j, area * l2);
      triplets.emplace_back(tri[2], j, area * l3);
    }
  }
  CouplingMatrix out;
  out.b.resize(mesh.n_nodes(), grid.count());
  out.b.setFromTriplets(triplets.begin(), triplets.end());
  out.b.makeCompressed();
  out.gram = grid.volumes();
  return out;
}

Eigen::VectorXd apply_control_operator(const CouplingMatrix& coupling, const ControlVector& u) {
  if (u.size() != coupling.n_actuators()) {
    throw std::invalid_argument("apply_control_operator: control length " + std::to_string(u.size()) +
                                " does not match actuator count " + std::to_string(coupling.n_actuators()));
  }
  return coupling.b * u;
}

ControlVector project_onto_actuator_span(const NodalField& z, const CouplingMatrix& coupling) {
  if (z.size() != coupling.n_nodes()) {
    throw std::invalid_argument("project_onto_actuator_span: field length does not match the mesh");
  }
  if ((coupling.gram.array() <= 0.0).any()) {
    throw std::logic_error("project_onto_actuator_span: zero actuator volume");
  }
  return (coupling.b.transpose() * z).cwiseQuotient(coupling.gram);
}

double actuator_span_norm_squared(const ControlVector& coefficients, const CouplingMatrix& coupling) {
  return coefficients.cwiseAbs2().dot(coupling.gram);
}

double control_operator_inverse_norm(const ActuatorGrid& grid) {
  return 1.0 / std::sqrt(grid.volumes().minCoeff());
}

}  // namespace schloegl

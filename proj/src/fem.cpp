#include "schloegl/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace schloegl {

RectangleDomain::RectangleDomain(double lx, double ly) : lx_(lx), ly_(ly) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw std::invalid_argument("RectangleDomain: side lengths must be positive and finite");
  }
}

StructuredTriangulation::StructuredTriangulation(int nx, int ny, const RectangleDomain& domain)
    : nx_(nx), ny_(ny), domain_(domain) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("build_mesh: subdivision counts must be >= 1 (got nx=" +
                                std::to_string(nx) + ", ny=" + std::to_string(ny) + ")");
  }
  nodes_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  const double hx = domain.lx() / nx;
  const double hy = domain.ly() / ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Pin the far edges to the exact lengths so the tiling is exact.
      const double x = (i == nx) ? domain.lx() : i * hx;
      const double y = (j == ny) ? domain.ly() : j * hy;
      nodes_.push_back({x, y});
    }
  }
  triangles_.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n0 = node_index(i, j);
      const int n1 = node_index(i + 1, j);
      const int n2 = node_index(i + 1, j + 1);
      const int n3 = node_index(i, j + 1);
      triangles_.push_back({n0, n1, n2});
      triangles_.push_back({n0, n2, n3});
    }
  }
}

double StructuredTriangulation::signed_area(int t) const {
  const auto& tri = triangles_[static_cast<std::size_t>(t)];
  const Point& a = node(tri[0]);
  const Point& b = node(tri[1]);
  const Point& c = node(tri[2]);
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

StructuredTriangulation build_mesh(int nx, int ny, const RectangleDomain& domain) {
  return StructuredTriangulation(nx, ny, domain);
}

std::array<std::array<double, 3>, 3> element_mass(double area) {
  const double d = area / 6.0;
  const double o = area / 12.0;
  return {{{d, o, o}, {o, d, o}, {o, o, d}}};
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseSymOperator from_triplets(int n, const Triplets& triplets) {
  SparseSymOperator op(n, n);
  op.setFromTriplets(triplets.begin(), triplets.end());
  op.makeCompressed();
  return op;
}

}  // namespace

SparseSymOperator assemble_mass(const StructuredTriangulation& mesh) {
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    const auto local = element_mass(mesh.signed_area(t));
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        triplets.emplace_back(tri[a], tri[b], local[a][b]);
      }
    }
  }
  return from_triplets(mesh.n_nodes(), triplets);
}

SparseSymOperator assemble_stiffness(const StructuredTriangulation& mesh, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("assemble_stiffness: diffusion coefficient must be positive");
  }
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(9 * mesh.n_triangles()));
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
    const double area = mesh.signed_area(t);
    // grad phi_a = (y_b - y_c, x_c - x_b) / (2 area), (a, b, c) cyclic.
    std::array<double, 3> gx{};
    std::array<double, 3> gy{};
    for (int a = 0; a < 3; ++a) {
      const Point& pb = mesh.node(tri[(a + 1) % 3]);
      const Point& pc = mesh.node(tri[(a + 2) % 3]);
      gx[a] = (pb.y - pc.y) / (2.0 * area);
      gy[a] = (pc.x - pb.x) / (2.0 * area);
    }
    // Row sums vanish in exact arithmetic; impose it per element.
    std::array<std::array<double, 3>, 3> local{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        if (a != b) local[a][b] = nu * area * (gx[a] * gx[b] + gy[a] * gy[b]);
      }
      local[a][a] = -(local[a][(a + 1) % 3] + local[a][(a + 2) % 3]);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        triplets.emplace_back(tri[a], tri[b], local[a][b]);
      }
    }
  }
  return from_triplets(mesh.n_nodes(), triplets);
}

Vector apply_stiffness(const SparseSymOperator& stiffness, const Vector& y) {
  if (y.size() != stiffness.rows()) throw std::invalid_argument("apply_stiffness: field length mismatch");
  Vector out(y.size());
  for (Eigen::Index i = 0; i < stiffness.outerSize(); ++i) {
    double acc = 0.0;
    const double yi = y(i);
    for (SparseSymOperator::InnerIterator it(stiffness, i); it; ++it) {
      if (it.col() != i) acc += it.value() * (y(it.col()) - yi);
    }
    out(i) = acc;
  }
  return out;
}

double l2_inner(const NodalField& a, const NodalField& b, const SparseSymOperator& mass) {
  if (a.size() != mass.rows() || b.size() != mass.rows()) {
    throw std::invalid_argument("l2_inner: field length does not match the mesh");
  }
  return a.dot(mass * b);
}

double l2_norm(const NodalField& a, const SparseSymOperator& mass) {
  return std::sqrt(std::max(0.0, l2_inner(a, a, mass)));
}

NodalField interpolate(const StructuredTriangulation& mesh, const std::function<double(const Point&)>& fn) {
  NodalField out(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) out[i] = fn(mesh.node(i));
  return out;
}

}  // namespace schloegl

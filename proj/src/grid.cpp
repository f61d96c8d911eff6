#include "perihom/grid.hpp"

#include <cmath>
#include <string>

#include "perihom/error.hpp"

namespace perihom {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

StructuredGrid StructuredGrid::cell(const Lattice& lattice, int nodes_per_dim) {
  if (nodes_per_dim < 8 || !is_power_of_two(nodes_per_dim)) {
    throw Error(ErrorKind::configuration,
                "cell grid needs a power of two >= 8 nodes per direction, got " +
                    std::to_string(nodes_per_dim));
  }
  StructuredGrid g;
  g.dim_ = lattice.dim;
  g.periodic_ = true;
  for (int j = 0; j < g.dim_; ++j) g.elements_[j] = nodes_per_dim;
  g.jacobian_ = lattice.basis / static_cast<double>(nodes_per_dim);
  g.finalize();
  return g;
}

StructuredGrid StructuredGrid::rectangle(std::span<const double> lengths, std::span<const int> elements,
                                         const Point& origin) {
  if (lengths.size() != elements.size() || lengths.empty() || lengths.size() > kMaxDim) {
    throw Error(ErrorKind::configuration, "rectangle needs matching lengths/elements in 1..3 dimensions");
  }
  StructuredGrid g;
  g.dim_ = static_cast<int>(lengths.size());
  g.periodic_ = false;
  g.origin_ = origin;
  g.jacobian_ = Eigen::MatrixXd::Zero(g.dim_, g.dim_);
  for (int j = 0; j < g.dim_; ++j) {
    if (!(lengths[j] > 0.0) || elements[j] < 1) {
      throw Error(ErrorKind::configuration, "rectangle needs positive lengths and element counts");
    }
    g.elements_[j] = elements[j];
    g.jacobian_(j, j) = lengths[j] / elements[j];
  }
  g.finalize();
  return g;
}

StructuredGrid StructuredGrid::torus(std::span<const double> lengths, std::span<const int> elements) {
  StructuredGrid g = rectangle(lengths, elements);
  for (int j = 0; j < g.dim_; ++j) {
    if (elements[j] < 3) throw Error(ErrorKind::configuration, "torus needs at least 3 elements per direction");
  }
  g.periodic_ = true;
  g.finalize();
  return g;
}

void StructuredGrid::finalize() {
  for (int j = dim_; j < kMaxDim; ++j) {
    elements_[j] = 1;
    nodes_[j] = 1;
  }
  num_nodes_ = 1;
  num_elements_ = 1;
  for (int j = 0; j < dim_; ++j) {
    nodes_[j] = periodic_ ? elements_[j] : elements_[j] + 1;
    num_nodes_ *= static_cast<std::size_t>(nodes_[j]);
    num_elements_ *= static_cast<std::size_t>(elements_[j]);
  }
  // Unused trailing directions carry a single node and no elements of their
  // own, so element multi-indices keep 0 there.
  jacobian_inverse_ = jacobian_.inverse();
  element_volume_ = std::abs(jacobian_.determinant());
  axis_aligned_ = true;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      if (i != j && jacobian_(i, j) != 0.0) axis_aligned_ = false;
    }
  }
}

Index3 StructuredGrid::node_multi(std::size_t idx) const {
  Index3 i{0, 0, 0};
  i[0] = static_cast<int>(idx % nodes_[0]);
  idx /= nodes_[0];
  i[1] = static_cast<int>(idx % nodes_[1]);
  i[2] = static_cast<int>(idx / nodes_[1]);
  return i;
}

Index3 StructuredGrid::element_multi(std::size_t idx) const {
  Index3 i{0, 0, 0};
  i[0] = static_cast<int>(idx % elements_[0]);
  idx /= elements_[0];
  i[1] = static_cast<int>(idx % elements_[1]);
  i[2] = static_cast<int>(idx / elements_[1]);
  return i;
}

bool StructuredGrid::normalize(Index3& i) const {
  for (int j = 0; j < dim_; ++j) {
    if (periodic_) {
      i[j] %= nodes_[j];
      if (i[j] < 0) i[j] += nodes_[j];
    } else if (i[j] < 0 || i[j] >= nodes_[j]) {
      return false;
    }
  }
  return true;
}

Point StructuredGrid::logical_to_physical(const Point& s) const {
  Point x = origin_;
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) x[r] += jacobian_(r, c) * s[c];
  }
  return x;
}

Point StructuredGrid::physical_to_logical(const Point& x) const {
  Point s{};
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) s[r] += jacobian_inverse_(r, c) * (x[c] - origin_[c]);
  }
  return s;
}

Point StructuredGrid::node_coord(const Index3& i) const {
  return logical_to_physical({static_cast<double>(i[0]), static_cast<double>(i[1]), static_cast<double>(i[2])});
}

Point StructuredGrid::element_midpoint(std::size_t e) const {
  const Index3 i = element_multi(e);
  Point s{};
  for (int j = 0; j < dim_; ++j) s[j] = i[j] + 0.5;
  return logical_to_physical(s);
}

void StructuredGrid::element_nodes(std::size_t e, std::array<std::size_t, 8>& out) const {
  const Index3 base = element_multi(e);
  for (int a = 0; a < nodes_per_element(); ++a) {
    Index3 i = base;
    for (int j = 0; j < dim_; ++j) {
      if (a & (1 << j)) {
        ++i[j];
        if (periodic_ && i[j] == nodes_[j]) i[j] = 0;
      }
    }
    out[a] = node_index(i);
  }
}

Box StructuredGrid::bounds() const {
  Box b;
  for (int j = 0; j < dim_; ++j) {
    b.lower[j] = origin_[j];
    b.upper[j] = origin_[j] + jacobian_(j, j) * elements_[j];
  }
  return b;
}

bool StructuredGrid::same_layout(const StructuredGrid& other) const {
  if (dim_ != other.dim_ || periodic_ != other.periodic_) return false;
  for (int j = 0; j < dim_; ++j) {
    if (elements_[j] != other.elements_[j]) return false;
    if (std::abs(origin_[j] - other.origin_[j]) > 1e-12) return false;
  }
  return (jacobian_ - other.jacobian_).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + jacobian_.cwiseAbs().maxCoeff());
}

StructuredGrid StructuredGrid::subgrid(const Index3& offset, const Index3& elements) const {
  StructuredGrid g = *this;
  g.periodic_ = false;
  for (int j = 0; j < dim_; ++j) {
    if (offset[j] < 0 || elements[j] < 1 || (!periodic_ && offset[j] + elements[j] > elements_[j])) {
      throw Error(ErrorKind::out_of_support, "subgrid exceeds the parent grid");
    }
    g.elements_[j] = elements[j];
  }
  g.origin_ = node_coord(offset);
  g.finalize();
  return g;
}

}  // namespace perihom

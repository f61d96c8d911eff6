#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "perihom/lattice.hpp"

namespace perihom {

inline constexpr int kMaxDim = 3;

using Index3 = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

/// Axis-aligned region in physical coordinates.
struct Box {
  Point lower{};
  Point upper{};

  bool contains(const Point& x, int dim) const {
    for (int j = 0; j < dim; ++j) {
      if (x[j] < lower[j] || x[j] > upper[j]) return false;
    }
    return true;
  }
};

/// Tensor-product grid of Q1 elements mapped affinely into R^d:
/// node i sits at origin + J i. Periodic grids have as many nodes as elements
/// per direction and wrap around; non-periodic grids cover the closed box.
///
/// Local node a of an element lies at base + bits(a), bit j giving the offset
/// in direction j.
class StructuredGrid {
 public:
  StructuredGrid() = default;

  /// Periodic grid on the cell spanned by the lattice basis, N nodes per
  /// direction (N >= 8, power of two).
  static StructuredGrid cell(const Lattice& lattice, int nodes_per_dim);

  /// Closed rectangle [origin, origin + lengths] with the given element counts.
  static StructuredGrid rectangle(std::span<const double> lengths, std::span<const int> elements,
                                  const Point& origin = {});

  /// Periodic axis-aligned box of the given side lengths.
  static StructuredGrid torus(std::span<const double> lengths, std::span<const int> elements);

  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  int elements(int j) const { return elements_[j]; }
  int nodes(int j) const { return nodes_[j]; }
  const Index3& node_counts() const { return nodes_; }
  const Index3& element_counts() const { return elements_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_elements() const { return num_elements_; }

  const Eigen::MatrixXd& jacobian() const { return jacobian_; }
  const Eigen::MatrixXd& jacobian_inverse() const { return jacobian_inverse_; }
  double element_volume() const { return element_volume_; }
  double total_volume() const { return element_volume_ * static_cast<double>(num_elements_); }
  bool axis_aligned() const { return axis_aligned_; }
  /// Mesh size along direction j (axis-aligned grids only).
  double spacing(int j) const { return jacobian_(j, j); }
  const Point& origin() const { return origin_; }

  std::size_t node_index(const Index3& i) const {
    return static_cast<std::size_t>(i[0]) +
           static_cast<std::size_t>(nodes_[0]) *
               (static_cast<std::size_t>(i[1]) + static_cast<std::size_t>(nodes_[1]) * i[2]);
  }
  Index3 node_multi(std::size_t idx) const;
  std::size_t element_index(const Index3& i) const {
    return static_cast<std::size_t>(i[0]) +
           static_cast<std::size_t>(elements_[0]) *
               (static_cast<std::size_t>(i[1]) + static_cast<std::size_t>(elements_[1]) * i[2]);
  }
  Index3 element_multi(std::size_t idx) const;

  /// Wraps (periodic) or validates a node multi-index; returns false when
  /// the index falls outside a non-periodic grid.
  bool normalize(Index3& i) const;

  Point node_coord(const Index3& i) const;
  Point node_coord(std::size_t idx) const { return node_coord(node_multi(idx)); }
  Point element_midpoint(std::size_t e) const;
  /// Logical (fractional index) position to physical point.
  Point logical_to_physical(const Point& s) const;
  Point physical_to_logical(const Point& x) const;

  int nodes_per_element() const { return 1 << dim_; }
  /// Global node indices of the 2^d corners of element e.
  void element_nodes(std::size_t e, std::array<std::size_t, 8>& out) const;

  /// Physical bounding box of a non-periodic, axis-aligned grid.
  Box bounds() const;

  bool same_layout(const StructuredGrid& other) const;

  /// Non-periodic grid that shares nodes with this one, starting at node
  /// `offset` and spanning `elements` elements per direction.
  StructuredGrid subgrid(const Index3& offset, const Index3& elements) const;

 private:
  void finalize();

  int dim_ = 0;
  bool periodic_ = false;
  bool axis_aligned_ = true;
  Index3 elements_{1, 1, 1};
  Index3 nodes_{1, 1, 1};
  std::size_t num_nodes_ = 0;
  std::size_t num_elements_ = 0;
  Point origin_{};
  Eigen::MatrixXd jacobian_;
  Eigen::MatrixXd jacobian_inverse_;
  double element_volume_ = 0.0;
};

}  // namespace perihom

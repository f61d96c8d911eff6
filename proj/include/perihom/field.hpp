#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perihom/grid.hpp"
#include "perihom/symbol.hpp"

namespace perihom {

enum class Location { node, element };

/// k real values per node (or per element), stored location-major:
/// values[i * k + c].
class Field {
 public:
  Field() = default;
  Field(StructuredGrid grid, int components, Location where = Location::node);

  static Field from_function(const StructuredGrid& grid, int components,
                             const std::function<void(const Point&, std::span<double>)>& f,
                             Location where = Location::node);

  const StructuredGrid& grid() const { return grid_; }
  int components() const { return components_; }
  Location location() const { return location_; }
  std::size_t points() const { return location_ == Location::node ? grid_.num_nodes() : grid_.num_elements(); }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, int c) { return values_[i * components_ + c]; }
  double operator()(std::size_t i, int c) const { return values_[i * components_ + c]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);
  bool all_finite() const;

 private:
  StructuredGrid grid_;
  int components_ = 0;
  Location location_ = Location::node;
  std::vector<double> values_;
};

Field operator-(Field a, const Field& b);
Field operator+(Field a, const Field& b);

/// Element-midpoint derivatives of a nodal Q1 field: component c, direction l
/// stored at index c * d + l. Exact for affine fields.
Field element_gradient(const Field& u);

/// Nodal derivatives, same layout as element_gradient. Central differences
/// inside, second-order one-sided differences on a non-periodic boundary.
Field nodal_gradient(const Field& u);

/// b(grad) u at element midpoints (m components). Throws component_mismatch
/// when u does not have n components.
Field apply_bD(const SymbolOperator& op, const Field& u);

/// b(grad) u at nodes from nodal_gradient.
Field apply_bD_nodal(const SymbolOperator& op, const Field& u);

/// Applies b(grad) to a gradient field laid out as in element_gradient.
Field symbol_from_gradient(const SymbolOperator& op, const Field& gradient);

/// Mean of the 2^d corner values of each element.
Field element_average(const Field& u);

/// Discrete norms. Nodal fields are integrated exactly as Q1 functions (2^d
/// point Gauss rule per element); element fields as piecewise constants.
/// With a mask only elements whose midpoint lies in the box contribute.
double l2_norm(const Field& u, const std::optional<Box>& mask = std::nullopt);
double h1_seminorm(const Field& u, const std::optional<Box>& mask = std::nullopt);
double h1_norm(const Field& u, const std::optional<Box>& mask = std::nullopt);

/// L2 inner product of two nodal fields (exact for Q1).
double l2_inner(const Field& a, const Field& b);

/// Integral of every component over the grid.
std::vector<double> integral(const Field& u);

/// CSV dump: header x1..xd,comp1..compk then one point per row.
void write_field_csv(const Field& u, const std::string& path);

}  // namespace perihom

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "perihom/coefficient.hpp"
#include "perihom/grid.hpp"
#include "perihom/symbol.hpp"

namespace perihom {

/// Q1 bilinear form a[u, eta] = int <g b(grad)u, b(grad)eta> + lambda int <u, eta>
/// on a structured grid, element by element. The couplings are stored in
/// logical coordinates: C^{jj'} = B_j^T g_e B_j' with B_j = sum_l Jinv(j,l) b_l.
struct LocalForm {
  StructuredGrid grid;
  int n = 0;
  double lambda = 0.0;
  double stiffness_scale = 1.0;  // 0 for pure mass forms
  bool uniform = false;
  std::vector<double> couplings;  // per element (or once): d*d blocks of n*n, column-major

  std::span<const double> coupling(std::size_t e) const {
    const std::size_t block = static_cast<std::size_t>(grid.dim() * grid.dim() * n * n);
    return {couplings.data() + (uniform ? 0 : e * block), block};
  }
};

LocalForm make_form(const StructuredGrid& grid, const SymbolOperator& op, const ElementCoefficients& g,
                    double lambda);
/// Constant coefficient. With drop_cross the mixed logical couplings j != j'
/// are discarded, which leaves a stencil that is even in every direction.
LocalForm make_uniform_form(const StructuredGrid& grid, const SymbolOperator& op, const Eigen::MatrixXd& g,
                            double lambda, bool drop_cross = false);
/// int <u, eta> for n-component fields.
LocalForm make_mass_form(const StructuredGrid& grid, int n);

/// Dense (2^d n) x (2^d n) element matrix, rows/cols ordered (corner, component).
Eigen::MatrixXd element_matrix(const LocalForm& form, std::size_t e);

/// Assembled operator as 3^d blocks of n x n per node. Offset o encodes the
/// neighbour displacement delta in {-1,0,1}^d as sum_j (delta_j + 1) 3^j.
class StencilOperator {
 public:
  StencilOperator() = default;
  StencilOperator(StructuredGrid grid, int block);

  const StructuredGrid& grid() const { return grid_; }
  int block_size() const { return n_; }
  int num_offsets() const { return offsets_; }
  std::size_t size() const { return grid_.num_nodes() * static_cast<std::size_t>(n_); }

  double* block(std::size_t node, int offset) { return blocks_.data() + (node * offsets_ + offset) * n_ * n_; }
  const double* block(std::size_t node, int offset) const {
    return blocks_.data() + (node * offsets_ + offset) * n_ * n_;
  }

  /// y = A x, OpenMP over node lines.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Same stencil, single thread, no specialization.
  void apply_serial(std::span<const double> x, std::span<double> y) const;

  std::vector<double> diagonal() const;

 private:
  template <int D, int N>
  void apply_kernel(std::span<const double> x, std::span<double> y) const;

  StructuredGrid grid_;
  int n_ = 0;
  int offsets_ = 0;
  std::vector<double> blocks_;
};

/// Node-gather assembly, parallel over nodes.
StencilOperator assemble(const LocalForm& form);

/// y = A x by looping over elements and scattering local products; single
/// threaded. Serves as the reference for StencilOperator::apply.
void apply_elementwise(const LocalForm& form, std::span<const double> x, std::span<double> y);

}  // namespace perihom

#include "perihom/assembly.hpp"

#include <algorithm>
#include <string>

#include "perihom/error.hpp"

namespace perihom {

namespace {

// Exact integrals of products of 1D Q1 shape functions and derivatives on [0,1].
double mm(int a, int b) { return a == b ? 1.0 / 3.0 : 1.0 / 6.0; }
double dm(int a, int) { return a ? 0.5 : -0.5; }
double md(int, int b) { return b ? 0.5 : -0.5; }
double dd(int a, int b) { return a == b ? 1.0 : -1.0; }

struct ReferenceIntegrals {
  double stiff[3][3][8][8]{};  // int d_j phi_a d_j' phi_b
  double mass[8][8]{};
};

ReferenceIntegrals reference_integrals(int d) {
  ReferenceIntegrals r;
  const int corners = 1 << d;
  for (int a = 0; a < corners; ++a) {
    for (int b = 0; b < corners; ++b) {
      double m = 1.0;
      for (int k = 0; k < d; ++k) m *= mm((a >> k) & 1, (b >> k) & 1);
      r.mass[a][b] = m;
      for (int j = 0; j < d; ++j) {
        for (int jp = 0; jp < d; ++jp) {
          double v = 1.0;
          for (int k = 0; k < d; ++k) {
            const int ak = (a >> k) & 1, bk = (b >> k) & 1;
            if (k == j && k == jp) {
              v *= dd(ak, bk);
            } else if (k == j) {
              v *= dm(ak, bk);
            } else if (k == jp) {
              v *= md(ak, bk);
            } else {
              v *= mm(ak, bk);
            }
          }
          r.stiff[j][jp][a][b] = v;
        }
      }
    }
  }
  return r;
}

std::vector<Eigen::MatrixXd> logical_symbols(const StructuredGrid& grid, const SymbolOperator& op) {
  const int d = grid.dim();
  if (op.dim != d) {
    throw Error(ErrorKind::component_mismatch, "operator dimension " + std::to_string(op.dim) +
                                                   " differs from grid dimension " + std::to_string(d));
  }
  std::vector<Eigen::MatrixXd> bj(d, Eigen::MatrixXd::Zero(op.rows, op.cols));
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < d; ++l) bj[j] += grid.jacobian_inverse()(j, l) * op.matrices[l];
  }
  return bj;
}

void write_couplings(const std::vector<Eigen::MatrixXd>& bj, const Eigen::Ref<const Eigen::MatrixXd>& g,
                     bool drop_cross, double* out) {
  const int d = static_cast<int>(bj.size());
  const int n = static_cast<int>(bj[0].cols());
  for (int j = 0; j < d; ++j) {
    const Eigen::MatrixXd left = bj[j].transpose() * g;
    for (int jp = 0; jp < d; ++jp) {
      double* dst = out + (j * d + jp) * n * n;
      if (drop_cross && j != jp) {
        std::fill(dst, dst + n * n, 0.0);
        continue;
      }
      Eigen::Map<Eigen::MatrixXd>(dst, n, n) = left * bj[jp];
    }
  }
}

// Block (a, b) of the element matrix, accumulated into dst (n x n, column-major).
void add_local_block(const LocalForm& form, const ReferenceIntegrals& ref, std::span<const double> c, int a, int b,
                     double* dst) {
  const int d = form.grid.dim();
  const int n = form.n;
  const double vol = form.grid.element_volume();
  if (form.stiffness_scale != 0.0) {
    for (int j = 0; j < d; ++j) {
      for (int jp = 0; jp < d; ++jp) {
        const double w = vol * form.stiffness_scale * ref.stiff[j][jp][a][b];
        const double* src = c.data() + (j * d + jp) * n * n;
        for (int q = 0; q < n * n; ++q) dst[q] += w * src[q];
      }
    }
  }
  if (form.lambda != 0.0) {
    const double w = vol * form.lambda * ref.mass[a][b];
    for (int q = 0; q < n; ++q) dst[q + q * n] += w;
  }
}

}  // namespace

LocalForm make_form(const StructuredGrid& grid, const SymbolOperator& op, const ElementCoefficients& g,
                    double lambda) {
  if (g.m != op.rows) {
    throw Error(ErrorKind::component_mismatch, "coefficient is " + std::to_string(g.m) + "x" + std::to_string(g.m) +
                                                   ", operator has m = " + std::to_string(op.rows));
  }
  if (g.count != grid.num_elements()) {
    throw Error(ErrorKind::component_mismatch, "coefficient samples do not match the grid elements");
  }
  const auto bj = logical_symbols(grid, op);
  LocalForm form;
  form.grid = grid;
  form.n = op.cols;
  form.lambda = lambda;
  const int d = grid.dim();
  const std::size_t block = static_cast<std::size_t>(d * d * form.n * form.n);
  form.couplings.resize(block * g.count);
  const std::ptrdiff_t ne = static_cast<std::ptrdiff_t>(g.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < ne; ++e) {
    write_couplings(bj, g.at(static_cast<std::size_t>(e)), false, form.couplings.data() + e * block);
  }
  return form;
}

LocalForm make_uniform_form(const StructuredGrid& grid, const SymbolOperator& op, const Eigen::MatrixXd& g,
                            double lambda, bool drop_cross) {
  if (g.rows() != op.rows || g.cols() != op.rows) {
    throw Error(ErrorKind::component_mismatch, "constant coefficient does not match the operator");
  }
  const auto bj = logical_symbols(grid, op);
  LocalForm form;
  form.grid = grid;
  form.n = op.cols;
  form.lambda = lambda;
  form.uniform = true;
  const int d = grid.dim();
  form.couplings.resize(static_cast<std::size_t>(d * d * form.n * form.n));
  write_couplings(bj, g, drop_cross, form.couplings.data());
  return form;
}

LocalForm make_mass_form(const StructuredGrid& grid, int n) {
  LocalForm form;
  form.grid = grid;
  form.n = n;
  form.lambda = 1.0;
  form.stiffness_scale = 0.0;
  form.uniform = true;
  form.couplings.assign(static_cast<std::size_t>(grid.dim() * grid.dim() * n * n), 0.0);
  return form;
}

Eigen::MatrixXd element_matrix(const LocalForm& form, std::size_t e) {
  const int corners = form.grid.nodes_per_element();
  const int n = form.n;
  const ReferenceIntegrals ref = reference_integrals(form.grid.dim());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(corners * n, corners * n);
  Eigen::MatrixXd blk(n, n);
  for (int a = 0; a < corners; ++a) {
    for (int b = 0; b < corners; ++b) {
      blk.setZero();
      add_local_block(form, ref, form.coupling(e), a, b, blk.data());
      out.block(a * n, b * n, n, n) = blk;
    }
  }
  return out;
}

StencilOperator::StencilOperator(StructuredGrid grid, int block) : grid_(std::move(grid)), n_(block) {
  offsets_ = 1;
  for (int j = 0; j < grid_.dim(); ++j) offsets_ *= 3;
  blocks_.assign(grid_.num_nodes() * offsets_ * n_ * n_, 0.0);
}

StencilOperator assemble(const LocalForm& form) {
  const StructuredGrid& grid = form.grid;
  const int d = grid.dim();
  const int n = form.n;
  const int corners = grid.nodes_per_element();
  const ReferenceIntegrals ref = reference_integrals(d);
  StencilOperator op(grid, n);

  std::vector<double> uniform_blocks;
  if (form.uniform) {
    uniform_blocks.assign(static_cast<std::size_t>(corners * corners * n * n), 0.0);
    for (int a = 0; a < corners; ++a) {
      for (int b = 0; b < corners; ++b) {
        add_local_block(form, ref, form.coupling(0), a, b, uniform_blocks.data() + (a * corners + b) * n * n);
      }
    }
  }

  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(grid.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t node = 0; node < nn; ++node) {
    const Index3 i = grid.node_multi(static_cast<std::size_t>(node));
    for (int a = 0; a < corners; ++a) {
      Index3 base = i;
      bool inside = true;
      for (int j = 0; j < d; ++j) {
        base[j] -= (a >> j) & 1;
        if (grid.periodic()) {
          if (base[j] < 0) base[j] += grid.elements(j);
        } else if (base[j] < 0 || base[j] >= grid.elements(j)) {
          inside = false;
        }
      }
      if (!inside) continue;
      const std::size_t e = grid.element_index(base);
      for (int b = 0; b < corners; ++b) {
        int o = 0, stride = 1;
        for (int j = 0; j < d; ++j) {
          o += (((b >> j) & 1) - ((a >> j) & 1) + 1) * stride;
          stride *= 3;
        }
        double* dst = op.block(static_cast<std::size_t>(node), o);
        if (form.uniform) {
          const double* src = uniform_blocks.data() + (a * corners + b) * n * n;
          for (int q = 0; q < n * n; ++q) dst[q] += src[q];
        } else {
          add_local_block(form, ref, form.coupling(e), a, b, dst);
        }
      }
    }
  }
  return op;
}

template <int D, int N>
void StencilOperator::apply_kernel(std::span<const double> x, std::span<double> y) const {
  const int n = N > 0 ? N : n_;
  const Index3& counts = grid_.node_counts();
  // neighbour[j][delta + 1][i] = wrapped index of i + delta along j, or -1
  std::vector<int> neighbour[3][3];
  for (int j = 0; j < 3; ++j) {
    for (int s = 0; s < 3; ++s) {
      neighbour[j][s].resize(counts[j]);
      for (int i = 0; i < counts[j]; ++i) {
        int k = i + s - 1;
        if (j >= D) {
          k = s == 1 ? i : -1;
        } else if (grid_.periodic()) {
          k = (k + counts[j]) % counts[j];
        } else if (k < 0 || k >= counts[j]) {
          k = -1;
        }
        neighbour[j][s][i] = k;
      }
    }
  }
  const std::ptrdiff_t lines = static_cast<std::ptrdiff_t>(counts[1]) * counts[2];
  const std::size_t n0 = counts[0], n1 = counts[1];
  constexpr int s1 = D > 1 ? 3 : 1;
  constexpr int s2 = D > 2 ? 3 : 1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t line = 0; line < lines; ++line) {
    const int i1 = static_cast<int>(line % counts[1]);
    const int i2 = static_cast<int>(line / counts[1]);
    for (int i0 = 0; i0 < counts[0]; ++i0) {
      const std::size_t node = i0 + n0 * static_cast<std::size_t>(line);
      double acc[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
      const double* blk = block(node, 0);
      for (int t2 = 0; t2 < s2; ++t2) {
        const int j2 = neighbour[2][D > 2 ? t2 : 1][i2];
        for (int t1 = 0; t1 < s1; ++t1) {
          const int j1 = neighbour[1][D > 1 ? t1 : 1][i1];
          for (int t0 = 0; t0 < 3; ++t0, blk += n * n) {
            const int j0 = neighbour[0][t0][i0];
            if (j0 < 0 || j1 < 0 || j2 < 0) continue;
            const std::size_t nb = j0 + n0 * (j1 + n1 * static_cast<std::size_t>(j2));
            const double* xv = x.data() + nb * n;
            for (int c = 0; c < n; ++c) {
              for (int r = 0; r < n; ++r) acc[r] += blk[r + c * n] * xv[c];
            }
          }
        }
      }
      for (int r = 0; r < n; ++r) y[node * n + r] = acc[r];
    }
  }
}

void StencilOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size()) {
    throw Error(ErrorKind::component_mismatch, "stencil apply: vector length mismatch");
  }
  const int d = grid_.dim();
  if (n_ > 6) {
    apply_serial(x, y);
    return;
  }
  auto dispatch = [&]<int D>() {
    switch (n_) {
      case 1: apply_kernel<D, 1>(x, y); break;
      case 2: apply_kernel<D, 2>(x, y); break;
      case 3: apply_kernel<D, 3>(x, y); break;
      default: apply_kernel<D, 0>(x, y); break;
    }
  };
  if (d == 1) {
    dispatch.template operator()<1>();
  } else if (d == 2) {
    dispatch.template operator()<2>();
  } else {
    dispatch.template operator()<3>();
  }
}

void StencilOperator::apply_serial(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size()) {
    throw Error(ErrorKind::component_mismatch, "stencil apply: vector length mismatch");
  }
  const int d = grid_.dim();
  const int n = n_;
  for (std::size_t node = 0; node < grid_.num_nodes(); ++node) {
    const Index3 i = grid_.node_multi(node);
    for (int r = 0; r < n; ++r) y[node * n + r] = 0.0;
    for (int o = 0; o < offsets_; ++o) {
      Index3 j = i;
      int rest = o;
      for (int k = 0; k < d; ++k) {
        j[k] += rest % 3 - 1;
        rest /= 3;
      }
      if (!grid_.normalize(j)) continue;
      const std::size_t nb = grid_.node_index(j);
      const double* blk = block(node, o);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) y[node * n + r] += blk[r + c * n] * x[nb * n + c];
      }
    }
  }
}

std::vector<double> StencilOperator::diagonal() const {
  std::vector<double> out(size());
  const int centre = (offsets_ - 1) / 2;
  for (std::size_t node = 0; node < grid_.num_nodes(); ++node) {
    const double* blk = block(node, centre);
    for (int r = 0; r < n_; ++r) out[node * n_ + r] = blk[r + r * n_];
  }
  return out;
}

void apply_elementwise(const LocalForm& form, std::span<const double> x, std::span<double> y) {
  const StructuredGrid& grid = form.grid;
  const int n = form.n;
  const int corners = grid.nodes_per_element();
  const std::size_t size = grid.num_nodes() * n;
  if (x.size() != size || y.size() != size) {
    throw Error(ErrorKind::component_mismatch, "elementwise apply: vector length mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  Eigen::VectorXd local_x(corners * n);
  std::array<std::size_t, 8> nodes;
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    grid.element_nodes(e, nodes);
    for (int a = 0; a < corners; ++a) {
      for (int c = 0; c < n; ++c) local_x(a * n + c) = x[nodes[a] * n + c];
    }
    const Eigen::VectorXd local_y = element_matrix(form, e) * local_x;
    for (int a = 0; a < corners; ++a) {
      for (int c = 0; c < n; ++c) y[nodes[a] * n + c] += local_y(a * n + c);
    }
  }
}

}  // namespace perihom

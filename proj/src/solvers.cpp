#include "perihom/solvers.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "perihom/error.hpp"
#include "perihom/parallel.hpp"
#include "perihom/spectral.hpp"

namespace perihom {

namespace {

Eigen::MatrixXd mean_matrix(const ElementCoefficients& g) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.m, g.m);
  for (std::size_t e = 0; e < g.count; ++e) s += g.at(e);
  return s / static_cast<double>(g.count);
}

void validate(const ProblemSpec& spec, const SymbolOperator& op) {
  if (spec.grid.dim() != op.dim) throw Error(ErrorKind::component_mismatch, "grid and operator dimensions differ");
  if (spec.grid.periodic() != is_periodic(spec.kind)) {
    throw Error(ErrorKind::configuration, std::string(to_string(spec.kind)) +
                                              (is_periodic(spec.kind) ? " needs a periodic grid" : " needs a rectangle"));
  }
  if (spec.rhs.components() != op.cols || spec.rhs.location() != Location::node ||
      !spec.rhs.grid().same_layout(spec.grid)) {
    throw Error(ErrorKind::component_mismatch, "right-hand side must be a nodal n-component field on the problem grid");
  }
  if (!spec.rhs.all_finite()) throw Error(ErrorKind::configuration, "right-hand side has non-finite values");
  if (!(spec.lambda >= 0.0)) throw Error(ErrorKind::configuration, "lambda must be non-negative");
  if (!(spec.garding_c1 > 0.0) || !(spec.garding_c2 >= 0.0)) {
    throw Error(ErrorKind::configuration, "Garding constants need C1 > 0 and C2 >= 0");
  }
}

double smallest_eigenvalue(const ElementCoefficients& g) { return coefficient_bounds(g).c; }

struct Preconditioner {
  std::unique_ptr<PeriodicSpectralInverse> periodic;
  std::unique_ptr<CosineSpectralInverse> cosine;
  LinearMap map;
};

Preconditioner make_preconditioner(const ProblemSpec& spec, const SymbolOperator& op, const StencilOperator& a) {
  Preconditioner p;
  if (spec.preconditioner == "spectral") {
    const Eigen::MatrixXd ref = spec.reference.size() ? spec.reference : mean_matrix(spec.g);
    if (spec.grid.periodic()) {
      p.periodic = std::make_unique<PeriodicSpectralInverse>(assemble(make_uniform_form(spec.grid, op, ref, spec.lambda)));
      p.map = p.periodic->as_map();
    } else {
      p.cosine =
          std::make_unique<CosineSpectralInverse>(assemble(make_uniform_form(spec.grid, op, ref, spec.lambda, true)));
      p.map = p.cosine->as_map();
    }
  } else if (spec.preconditioner == "jacobi") {
    auto diag = std::make_shared<std::vector<double>>(a.diagonal());
    p.map = [diag](std::span<const double> x, std::span<double> y) {
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / (*diag)[i];
    };
  } else if (spec.preconditioner != "none") {
    throw Error(ErrorKind::configuration, "unknown preconditioner '" + spec.preconditioner + "'");
  }
  return p;
}

Solution finish(const ProblemSpec& spec, const AssembledProblem& ap, std::vector<double> x, const CgReport& rep,
                int n) {
  Solution s;
  s.report = rep;
  std::vector<double> ax(x.size());
  ap.matrix.apply(x, ax);
  s.energy = dot(x, ax);
  s.work = dot(x, ap.load);
  s.u = Field(spec.grid, n);
  s.u.values() = std::move(x);
  return s;
}

}  // namespace

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::neumann_eps: return "neumann_eps";
    case ProblemKind::neumann_eff: return "neumann_eff";
    case ProblemKind::periodic_eps: return "periodic_eps";
    case ProblemKind::periodic_eff: return "periodic_eff";
  }
  return "unknown";
}

bool is_periodic(ProblemKind kind) { return kind == ProblemKind::periodic_eps || kind == ProblemKind::periodic_eff; }

ProblemSpec oscillating_problem(ProblemKind kind, const StructuredGrid& grid, const PeriodicCoefficient& g,
                                double eps, const Lattice& lattice, double lambda, Field rhs) {
  if (is_periodic(kind)) {
    // Every torus side must hold a whole number of eps-cells.
    const Eigen::MatrixXd sides = lattice.basis.inverse() * grid.jacobian() / eps;
    for (int j = 0; j < grid.dim(); ++j) {
      for (int i = 0; i < grid.dim(); ++i) {
        const double cells = sides(i, j) * grid.elements(j);
        if (std::abs(cells - std::round(cells)) > 1e-9) {
          throw Error(ErrorKind::configuration, "torus is not a whole number of eps-cells");
        }
      }
    }
  }
  ProblemSpec spec;
  spec.kind = kind;
  spec.grid = grid;
  spec.g = sample_coefficient(g, grid, eps, lattice);
  spec.lambda = lambda;
  spec.rhs = std::move(rhs);
  return spec;
}

ProblemSpec effective_problem(ProblemKind kind, const StructuredGrid& grid, const Eigen::MatrixXd& g_eff,
                              double lambda, Field rhs) {
  ProblemSpec spec;
  spec.kind = kind;
  spec.grid = grid;
  spec.g = uniform_coefficient(g_eff, grid.num_elements());
  spec.lambda = lambda;
  spec.rhs = std::move(rhs);
  spec.reference = g_eff;
  return spec;
}

double coercivity_constant(const ProblemSpec& spec) {
  const double c = smallest_eigenvalue(spec.g);
  return std::min(spec.garding_c1 * c, spec.lambda - spec.garding_c2 * c);
}

AssembledProblem assemble_problem(const ProblemSpec& spec, const SymbolOperator& op) {
  validate(spec, op);
  if (spec.garding_c2 > 0.0 && spec.lambda > 0.0) {
    const double threshold = spec.garding_c2 * smallest_eigenvalue(spec.g);
    if (!(spec.lambda > threshold)) {
      std::ostringstream msg;
      msg << "lambda = " << spec.lambda << " must exceed C2 |g^-1|^-1 = " << threshold;
      throw Error(ErrorKind::configuration, msg.str());
    }
  }
  AssembledProblem ap;
  ap.form = make_form(spec.grid, op, spec.g, spec.lambda);
  ap.matrix = assemble(ap.form);
  ap.load.resize(ap.matrix.size());
  assemble(make_mass_form(spec.grid, op.cols)).apply(spec.rhs.span(), ap.load);
  return ap;
}

Solution solve_problem(const ProblemSpec& spec, const SymbolOperator& op) {
  if (!(spec.lambda > 0.0)) {
    throw Error(ErrorKind::configuration, "solve_problem needs lambda > 0; use solve_lambda0 for lambda = 0");
  }
  const AssembledProblem ap = assemble_problem(spec, op);
  const Preconditioner pre = make_preconditioner(spec, op, ap.matrix);
  const LinearMap map = [&ap](std::span<const double> x, std::span<double> y) { ap.matrix.apply(x, y); };
  std::vector<double> x(ap.matrix.size(), 0.0);
  CgOptions cg;
  cg.rel_tol = spec.tol;
  const CgReport rep = solve_spd(map, ap.load, x, pre.map, nullptr, cg);
  return finish(spec, ap, std::move(x), rep, op.cols);
}

void KernelBasis::project_out(Field& u) const {
  for (const Field& z : basis) axpy(-l2_inner(u, z), z.values(), u.values());
}

std::vector<AffineField> affine_kernel(const SymbolOperator& op) {
  const int d = op.dim, n = op.cols, m = op.rows;
  std::vector<AffineField> out;
  for (int c = 0; c < n; ++c) {
    AffineField z;
    z.offset = Eigen::VectorXd::Unit(n, c);
    z.gradient = Eigen::MatrixXd::Zero(n, d);
    out.push_back(z);
  }
  // Linear map G -> sum_l b_l G e_l on column-major vec(G).
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(m, n * d);
  for (int l = 0; l < d; ++l) {
    for (int c = 0; c < n; ++c) map.col(c + n * l) = op.matrices[l].col(c);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(map);
  lu.setThreshold(1e-12);
  const Eigen::MatrixXd null = lu.kernel();
  if (lu.rank() < n * d) {
    for (int k = 0; k < null.cols(); ++k) {
      AffineField z;
      z.offset = Eigen::VectorXd::Zero(n);
      z.gradient = Eigen::Map<const Eigen::MatrixXd>(null.col(k).data(), n, d);
      out.push_back(z);
    }
  }
  return out;
}

KernelBasis build_kernel(const SymbolOperator& op, const StructuredGrid& grid,
                         const std::vector<AffineField>& declared) {
  if (grid.dim() != op.dim) throw Error(ErrorKind::component_mismatch, "grid and operator dimensions differ");
  const int d = op.dim, n = op.cols;
  const std::vector<AffineField> fields = declared.empty() ? affine_kernel(op) : declared;
  KernelBasis kb;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const AffineField& a = fields[k];
    if (a.offset.size() != n || a.gradient.rows() != n || a.gradient.cols() != d) {
      throw Error(ErrorKind::component_mismatch, "kernel field " + std::to_string(k) + " has the wrong shape");
    }
    Field z = Field::from_function(grid, n, [&](const Point& x, std::span<double> v) {
      for (int c = 0; c < n; ++c) {
        v[c] = a.offset(c);
        for (int l = 0; l < d; ++l) v[c] += a.gradient(c, l) * x[l];
      }
    });
    const double zn = l2_norm(z);
    const double bz = l2_norm(apply_bD(op, z));
    if (!(zn > 0.0) || bz > 1e-8 * zn) {
      std::ostringstream msg;
      msg << "declared kernel field " << k << " is not annihilated by b(D): |b(D)z| = " << bz << ", |z| = " << zn;
      throw Error(ErrorKind::invalid_kernel, msg.str());
    }
    // Gram-Schmidt in L2, twice for stability.
    for (int pass = 0; pass < 2; ++pass) kb.project_out(z);
    const double rest = l2_norm(z);
    if (rest <= 1e-10 * zn) continue;  // linearly dependent declaration
    z *= 1.0 / rest;
    kb.basis.push_back(std::move(z));
  }
  const std::size_t s = kb.basis.size();
  kb.gram = Eigen::MatrixXd(s, s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) kb.gram(i, j) = l2_inner(kb.basis[i], kb.basis[j]);
  }
  return kb;
}

Solution solve_lambda0(const ProblemSpec& spec, const SymbolOperator& op, const KernelBasis& kernel) {
  if (spec.lambda != 0.0) throw Error(ErrorKind::configuration, "solve_lambda0 needs lambda = 0");
  if (is_periodic(spec.kind)) throw Error(ErrorKind::configuration, "lambda = 0 is supported for Neumann kinds only");
  for (const Field& z : kernel.basis) {
    if (!z.grid().same_layout(spec.grid) || z.components() != op.cols) {
      throw Error(ErrorKind::component_mismatch, "kernel basis does not live on the problem grid");
    }
  }
  ProblemSpec projected = spec;
  kernel.project_out(projected.rhs);
  const AssembledProblem ap = assemble_problem(projected, op);
  const Preconditioner pre = make_preconditioner(projected, op, ap.matrix);
  std::vector<std::vector<double>> vectors;
  for (const Field& z : kernel.basis) vectors.push_back(z.values());
  const Deflation deflation = Deflation::from_vectors(std::move(vectors));
  const LinearMap map = [&ap](std::span<const double> x, std::span<double> y) { ap.matrix.apply(x, y); };
  std::vector<double> x(ap.matrix.size(), 0.0);
  CgOptions cg;
  cg.rel_tol = spec.tol;
  const CgReport rep = solve_spd(map, ap.load, x, pre.map, &deflation, cg);
  Solution s = finish(projected, ap, std::move(x), rep, op.cols);
  for (int pass = 0; pass < 2; ++pass) kernel.project_out(s.u);
  s.work = dot(s.u.values(), ap.load);
  std::vector<double> ax(s.u.size());
  ap.matrix.apply(s.u.values(), ax);
  s.energy = dot(s.u.values(), ax);
  return s;
}

}  // namespace perihom

#include "perihom/cg.hpp"

#include <cmath>
#include <sstream>

#include "perihom/error.hpp"
#include "perihom/parallel.hpp"

namespace perihom {

void Deflation::project(std::span<double> v) const {
  for (const auto& z : basis) axpy(-dot(v, z), z, v);
}

Deflation Deflation::from_vectors(std::vector<std::vector<double>> vectors) {
  Deflation out;
  for (auto& v : vectors) {
    const double original = std::sqrt(dot(v, v));
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) out.project(v);
    const double norm = std::sqrt(dot(v, v));
    if (norm <= 1e-10 * original) continue;
    for (double& t : v) t /= norm;
    out.basis.push_back(std::move(v));
  }
  return out;
}

CgReport solve_spd(const LinearMap& a, std::span<const double> b, std::span<double> x,
                   const LinearMap& preconditioner, const Deflation* deflation, const CgOptions& options) {
  const std::size_t n = b.size();
  if (x.size() != n) throw Error(ErrorKind::component_mismatch, "solve_spd: x and b differ in length");
  const bool deflate = deflation && !deflation->empty();
  std::vector<double> rhs(b.begin(), b.end());
  if (deflate) {
    deflation->project(rhs);
    deflation->project(x);
  }
  const double bnorm = std::sqrt(dot(rhs, rhs));
  CgReport report;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return report;
  }
  const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(std::min<std::size_t>(10 * n, 2000000000));

  std::vector<double> r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    a(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    if (deflate) deflation->project(r);
    return std::sqrt(dot(r, r));
  };
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    if (preconditioner) {
      preconditioner(in, out);
    } else {
      std::copy(in.begin(), in.end(), out.begin());
    }
    if (deflate) deflation->project(out);
  };

  const double target = options.rel_tol * bnorm;
  int it = 0;
  double rnorm = true_residual();
  // The recursive residual can drift below the true one; restart from the
  // current iterate until the true residual meets the target.
  for (int restart = 0; restart < 8 && rnorm > target && it < cap; ++restart) {
    precondition(r, z);
    std::copy(z.begin(), z.end(), p.begin());
    double rz = dot(r, z);
    while (rnorm > target && it < cap) {
      a(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      if (deflate) deflation->project(r);
      ++it;
      rnorm = std::sqrt(dot(r, r));
      if (rnorm <= target) break;
      precondition(r, z);
      const double rz_new = dot(r, z);
      xpby(z, rz_new / rz, p);
      rz = rz_new;
    }
    rnorm = true_residual();
  }
  report.iterations = it;
  report.relative_residual = rnorm / bnorm;
  if (!(report.relative_residual <= options.rel_tol)) {
    std::ostringstream msg;
    msg << "conjugate gradients stopped after " << it << " iterations with relative residual "
        << report.relative_residual << " (target " << options.rel_tol << ")";
    throw SolverFailure(msg.str(), it, report.relative_residual);
  }
  return report;
}

}  // namespace perihom

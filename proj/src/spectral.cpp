#include "perihom/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include <fftw3.h>

#include "perihom/error.hpp"

namespace perihom {

namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(std::max<std::size_t>(bytes, 16))) {
    if (!ptr) throw Error(ErrorKind::solver_failure, "fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

// Displacement of offset o along each direction.
void offset_delta(int o, int d, int delta[3]) {
  for (int j = 0; j < 3; ++j) {
    delta[j] = j < d ? o % 3 - 1 : 0;
    if (j < d) o /= 3;
  }
}

// FFTW wants row-major dimensions, ours run fastest in direction 0.
std::vector<int> reversed_counts(const StructuredGrid& grid) {
  std::vector<int> dims(grid.dim());
  for (int j = 0; j < grid.dim(); ++j) dims[grid.dim() - 1 - j] = grid.nodes(j);
  return dims;
}

}  // namespace

PeriodicSpectralInverse::PeriodicSpectralInverse(const StencilOperator& op) : n_(op.block_size()) {
  const StructuredGrid& grid = op.grid();
  if (!grid.periodic()) throw Error(ErrorKind::configuration, "periodic spectral inverse needs a periodic grid");
  const int d = grid.dim();
  const int n = n_;
  const std::vector<int> dims = reversed_counts(grid);
  real_size_ = grid.num_nodes();
  // Half spectrum along direction 0 (the fastest, last in FFTW order).
  const int half0 = grid.nodes(0) / 2 + 1;
  spectral_size_ = real_size_ / grid.nodes(0) * half0;
  scale_ = 1.0 / static_cast<double>(real_size_);

  std::vector<Eigen::MatrixXcd> symbols(spectral_size_);
  double largest = 0.0;
  std::vector<Eigen::VectorXd> eigenvalues(spectral_size_);
  std::vector<Eigen::MatrixXcd> vectors(spectral_size_);
  for (std::size_t f = 0; f < spectral_size_; ++f) {
    const int k0 = static_cast<int>(f % half0);
    const std::size_t rest = f / half0;
    const int k1 = d > 1 ? static_cast<int>(rest % grid.nodes(1)) : 0;
    const int k2 = d > 2 ? static_cast<int>(rest / grid.nodes(1)) : 0;
    const double theta[3] = {2.0 * std::numbers::pi * k0 / grid.nodes(0),
                             d > 1 ? 2.0 * std::numbers::pi * k1 / grid.nodes(1) : 0.0,
                             d > 2 ? 2.0 * std::numbers::pi * k2 / grid.nodes(2) : 0.0};
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
    for (int o = 0; o < op.num_offsets(); ++o) {
      int delta[3];
      offset_delta(o, d, delta);
      const double phase = theta[0] * delta[0] + theta[1] * delta[1] + theta[2] * delta[2];
      const std::complex<double> w(std::cos(phase), std::sin(phase));
      const double* blk = op.block(0, o);
      for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) s(r, c) += w * blk[r + c * n];
      }
    }
    s = 0.5 * (s + s.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
    eigenvalues[f] = es.eigenvalues();
    vectors[f] = es.eigenvectors();
    largest = std::max(largest, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  const double cutoff = 1e-9 * largest;
  inverse_.resize(spectral_size_ * n * n);
  for (std::size_t f = 0; f < spectral_size_; ++f) {
    Eigen::VectorXd inv = eigenvalues[f];
    for (int q = 0; q < n; ++q) inv(q) = std::abs(inv(q)) > cutoff ? 1.0 / inv(q) : 0.0;
    const Eigen::MatrixXcd m = vectors[f] * inv.asDiagonal() * vectors[f].adjoint();
    std::copy(m.data(), m.data() + n * n, inverse_.begin() + f * n * n);
  }

  FftwBuffer real(sizeof(double) * real_size_ * n);
  FftwBuffer spec(sizeof(fftw_complex) * spectral_size_ * n);
  forward_ = fftw_plan_many_dft_r2c(d, dims.data(), n, static_cast<double*>(real.ptr), nullptr, n, 1,
                                    static_cast<fftw_complex*>(spec.ptr), nullptr, n, 1, FFTW_ESTIMATE);
  backward_ = fftw_plan_many_dft_c2r(d, dims.data(), n, static_cast<fftw_complex*>(spec.ptr), nullptr, n, 1,
                                     static_cast<double*>(real.ptr), nullptr, n, 1, FFTW_ESTIMATE);
  if (!forward_ || !backward_) throw Error(ErrorKind::solver_failure, "FFTW planning failed");
}

PeriodicSpectralInverse::~PeriodicSpectralInverse() {
  if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void PeriodicSpectralInverse::apply(std::span<const double> in, std::span<double> out) const {
  const int n = n_;
  if (in.size() != real_size_ * n || out.size() != in.size()) {
    throw Error(ErrorKind::component_mismatch, "spectral inverse: vector length mismatch");
  }
  FftwBuffer real(sizeof(double) * real_size_ * n);
  FftwBuffer spec(sizeof(fftw_complex) * spectral_size_ * n);
  auto* r = static_cast<double*>(real.ptr);
  auto* s = reinterpret_cast<std::complex<double>*>(spec.ptr);
  std::memcpy(r, in.data(), sizeof(double) * in.size());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), r, reinterpret_cast<fftw_complex*>(s));
  std::complex<double> tmp[8];
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(spectral_size_);
#pragma omp parallel for schedule(static) private(tmp)
  for (std::ptrdiff_t f = 0; f < count; ++f) {
    std::complex<double>* v = s + f * n;
    const std::complex<double>* m = inverse_.data() + f * n * n;
    if (n == 1) {
      v[0] *= m[0];
      continue;
    }
    for (int row = 0; row < n; ++row) {
      std::complex<double> acc = 0.0;
      for (int c = 0; c < n; ++c) acc += m[row + c * n] * v[c];
      tmp[row] = acc;
    }
    for (int row = 0; row < n; ++row) v[row] = tmp[row];
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_), reinterpret_cast<fftw_complex*>(s), r);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] * scale_;
}

CosineSpectralInverse::CosineSpectralInverse(const StencilOperator& op) : grid_(op.grid()), n_(op.block_size()) {
  if (grid_.periodic()) throw Error(ErrorKind::configuration, "cosine spectral inverse needs a non-periodic grid");
  const int d = grid_.dim();
  const int n = n_;
  Index3 ref{0, 0, 0};
  for (int j = 0; j < d; ++j) {
    if (grid_.nodes(j) < 3) throw Error(ErrorKind::configuration, "cosine spectral inverse needs >= 2 elements");
    ref[j] = 1;
  }
  const std::size_t ref_node = grid_.node_index(ref);
  double magnitude = 0.0;
  for (int o = 0; o < op.num_offsets(); ++o) {
    const double* blk = op.block(ref_node, o);
    for (int q = 0; q < n * n; ++q) magnitude = std::max(magnitude, std::abs(blk[q]));
  }
  const double tol = 1e-12 * magnitude;
  for (int o = 0; o < op.num_offsets(); ++o) {
    int delta[3];
    offset_delta(o, d, delta);
    const double* blk = op.block(ref_node, o);
    for (int j = 0; j < d; ++j) {
      int mirror = 0, stride = 1;
      for (int k = 0; k < d; ++k) {
        mirror += ((k == j ? -delta[k] : delta[k]) + 1) * stride;
        stride *= 3;
      }
      const double* other = op.block(ref_node, mirror);
      for (int q = 0; q < n * n; ++q) {
        if (std::abs(blk[q] - other[q]) > tol) {
          throw Error(ErrorKind::configuration, "cosine spectral inverse needs a stencil even in every direction");
        }
      }
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (std::abs(blk[r + c * n] - blk[c + r * n]) > tol) {
          throw Error(ErrorKind::configuration, "cosine spectral inverse needs symmetric stencil blocks");
        }
      }
    }
  }

  const std::size_t total = grid_.num_nodes();
  std::vector<Eigen::VectorXd> eigenvalues(total);
  std::vector<Eigen::MatrixXd> vectors(total);
  double largest = 0.0;
  for (std::size_t f = 0; f < total; ++f) {
    const Index3 k = grid_.node_multi(f);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (int o = 0; o < op.num_offsets(); ++o) {
      int delta[3];
      offset_delta(o, d, delta);
      double w = 1.0;
      for (int j = 0; j < d; ++j) w *= std::cos(std::numbers::pi * k[j] * delta[j] / grid_.elements(j));
      s += w * Eigen::Map<const Eigen::MatrixXd>(op.block(ref_node, o), n, n);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    eigenvalues[f] = es.eigenvalues();
    vectors[f] = es.eigenvectors();
    largest = std::max(largest, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  const double cutoff = 1e-9 * largest;
  inverse_.resize(total * n * n);
  for (std::size_t f = 0; f < total; ++f) {
    Eigen::VectorXd inv = eigenvalues[f];
    for (int q = 0; q < n; ++q) inv(q) = std::abs(inv(q)) > cutoff ? 1.0 / inv(q) : 0.0;
    const Eigen::MatrixXd m = vectors[f] * inv.asDiagonal() * vectors[f].transpose();
    std::copy(m.data(), m.data() + n * n, inverse_.begin() + f * n * n);
  }
  scale_ = 1.0;
  for (int j = 0; j < d; ++j) scale_ /= 2.0 * grid_.elements(j);

  const std::vector<int> dims = reversed_counts(grid_);
  std::vector<fftw_r2r_kind> kinds(d, FFTW_REDFT00);
  FftwBuffer buf(sizeof(double) * total * n);
  plan_ = fftw_plan_many_r2r(d, dims.data(), n, static_cast<double*>(buf.ptr), nullptr, n, 1,
                             static_cast<double*>(buf.ptr), nullptr, n, 1, kinds.data(), FFTW_ESTIMATE);
  if (!plan_) throw Error(ErrorKind::solver_failure, "FFTW planning failed");
}

CosineSpectralInverse::~CosineSpectralInverse() {
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void CosineSpectralInverse::apply(std::span<const double> in, std::span<double> out) const {
  const int n = n_;
  const int d = grid_.dim();
  const std::size_t total = grid_.num_nodes();
  if (in.size() != total * n || out.size() != in.size()) {
    throw Error(ErrorKind::component_mismatch, "spectral inverse: vector length mismatch");
  }
  FftwBuffer buf(sizeof(double) * total * n);
  auto* v = static_cast<double*>(buf.ptr);
  // Undo the halved boundary rows, then T^{-1} = R diag(1/mu) R / prod(2 N_j).
  for (std::size_t i = 0; i < total; ++i) {
    const Index3 k = grid_.node_multi(i);
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      if (k[j] == 0 || k[j] == grid_.elements(j)) w *= 2.0;
    }
    for (int c = 0; c < n; ++c) v[i * n + c] = in[i * n + c] * w;
  }
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), v, v);
  double tmp[8];
  for (std::size_t f = 0; f < total; ++f) {
    const double* m = inverse_.data() + f * n * n;
    double* x = v + f * n;
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) acc += m[r + c * n] * x[c];
      tmp[r] = acc;
    }
    for (int r = 0; r < n; ++r) x[r] = tmp[r];
  }
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), v, v);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] * scale_;
}

}  // namespace perihom

#include "mpspectra/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpspectra/error.hpp"

namespace mpspectra {

namespace {

constexpr int kMaxQlIterations = 60;

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("matrix entries must be finite");
  }
}

void require_capacity(std::size_t dim) {
  if (dim > kMaxDimension) {
    throw CapacityError("matrix dimension " + std::to_string(dim) + " exceeds the cap of " +
                        std::to_string(kMaxDimension));
  }
}

// Four independent partial sums; fixed association order keeps results reproducible.
double dot(const double* x, const double* y, std::size_t len) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    s0 += x[k] * y[k];
    s1 += x[k + 1] * y[k + 1];
    s2 += x[k + 2] * y[k + 2];
    s3 += x[k + 3] * y[k + 3];
  }
  for (; k < len; ++k) s0 += x[k] * y[k];
  return (s0 + s1) + (s2 + s3);
}

double copy_sign(double magnitude, double sign_of) {
  return sign_of >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Householder reduction of the packed lower triangle to tridiagonal form.
// On return diag holds the diagonal and offdiag[i] couples rows i - 1 and i (offdiag[0] = 0).
void tridiagonalize(std::vector<double>& packed, std::size_t n, std::vector<double>& diag,
                    std::vector<double>& offdiag) {
  const auto row = [&](std::size_t i) { return packed.data() + i * (i + 1) / 2; };
  std::vector<double> p(n, 0.0);
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double* u = row(i);
    if (l == 0) {
      offdiag[i] = u[0];
      continue;
    }
    double scale = 0.0;
    for (std::size_t k = 0; k <= l; ++k) scale += std::abs(u[k]);
    if (scale == 0.0) {
      offdiag[i] = u[l];
      continue;
    }
    double h = 0.0;
    for (std::size_t k = 0; k <= l; ++k) {
      u[k] /= scale;
      h += u[k] * u[k];
    }
    double f = u[l];
    const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
    offdiag[i] = scale * g;
    h -= f * g;
    u[l] = f - g;

    // p = A u / h over the leading (l+1) block, by rows of the lower triangle.
    std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(l + 1), 0.0);
    for (std::size_t j = 0; j <= l; ++j) {
      const double* rj = row(j);
      const double uj = u[j];
      double s = 0.0;
      for (std::size_t k = 0; k < j; ++k) {
        s += rj[k] * u[k];
        p[k] += rj[k] * uj;
      }
      p[j] += s + rj[j] * uj;
    }
    f = 0.0;
    for (std::size_t j = 0; j <= l; ++j) {
      p[j] /= h;
      f += p[j] * u[j];
    }
    const double hh = f / (h + h);
    for (std::size_t j = 0; j <= l; ++j) p[j] -= hh * u[j];

    // A <- A - u q^T - q u^T
    for (std::size_t j = 0; j <= l; ++j) {
      double* rj = row(j);
      const double uj = u[j];
      const double qj = p[j];
      for (std::size_t k = 0; k <= j; ++k) rj[k] -= uj * p[k] + qj * u[k];
    }
  }
  offdiag[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag[i] = row(i)[i];
}

// Implicit QL on a symmetric tridiagonal matrix; eigenvalues overwrite diag.
void tridiagonal_ql(std::vector<double>& diag, std::vector<double>& offdiag) {
  const auto n = static_cast<std::ptrdiff_t>(diag.size());
  for (std::ptrdiff_t i = 1; i < n; ++i) offdiag[i - 1] = offdiag[i];
  offdiag[n - 1] = 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (std::ptrdiff_t l = 0; l < n; ++l) {
    int iter = 0;
    std::ptrdiff_t m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(offdiag[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > kMaxQlIterations) {
        throw NumericalError("implicit QL did not converge for block starting at index " +
                                 std::to_string(l),
                             static_cast<std::size_t>(l));
      }
      // Shift from the leading 2x2 block.
      double g = (diag[l + 1] - diag[l]) / (2.0 * offdiag[l]);
      double r = std::hypot(g, 1.0);
      g = diag[m] - diag[l] + offdiag[l] / (g + copy_sign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      std::ptrdiff_t i = m - 1;
      bool deflated = false;
      for (; i >= l; --i) {
        const double f = s * offdiag[i];
        const double b = c * offdiag[i];
        r = std::hypot(f, g);
        offdiag[i + 1] = r;
        if (r == 0.0) {
          diag[i + 1] -= p;
          offdiag[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = diag[i + 1] - p;
        r = (diag[i] - g) * s + 2.0 * c * b;
        p = s * r;
        diag[i + 1] = g + p;
        g = c * r - b;
      }
      if (deflated) continue;
      diag[l] -= p;
      offdiag[l] = g;
      offdiag[m] = 0.0;
    } while (m != l);
  }
}

}  // namespace

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw DomainError("matrix dimensions must be positive");
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw DomainError("matrix dimensions must be positive");
  if (data_.size() != rows * cols) throw DomainError("matrix data length must equal rows * cols");
  require_finite(data_);
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim) : dim_(dim), packed_(dim * (dim + 1) / 2, 0.0) {
  if (dim == 0) throw DomainError("matrix dimension must be positive");
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim, std::vector<double> packed_lower)
    : dim_(dim), packed_(std::move(packed_lower)) {
  if (dim == 0) throw DomainError("matrix dimension must be positive");
  if (packed_.size() != dim * (dim + 1) / 2) {
    throw DomainError("packed storage length must equal dim * (dim + 1) / 2");
  }
  require_finite(packed_);
}

SymmetricMatrix SymmetricMatrix::from_dense(std::size_t dim, std::span<const double> dense) {
  if (dense.size() != dim * dim) throw DomainError("dense storage length must equal dim * dim");
  std::vector<double> packed;
  packed.reserve(dim * (dim + 1) / 2);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) packed.push_back(dense[i * dim + j]);
  }
  return SymmetricMatrix(dim, std::move(packed));
}

double SymmetricMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double SymmetricMatrix::frobenius_norm_squared() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < i; ++j) s += 2.0 * (*this)(i, j) * (*this)(i, j);
    s += (*this)(i, i) * (*this)(i, i);
  }
  return s;
}

SymmetricMatrix gram(const RealMatrix& a) {
  const std::size_t n = a.rows();
  const std::size_t cols = a.cols();
  if (n == 0 || cols == 0) throw DomainError("gram requires a non-empty matrix");
  require_capacity(n);
  std::vector<double> packed(n * (n + 1) / 2);
  const double scale = 1.0 / static_cast<double>(n);
  const double* base = a.data().data();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = base + i * cols;
    for (std::size_t j = 0; j <= i; ++j) {
      packed[idx++] = dot(ri, base + j * cols, cols) * scale;
    }
  }
  return SymmetricMatrix(n, std::move(packed));
}

std::vector<double> eigenvalues_sym(const SymmetricMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw DomainError("eigenvalues_sym requires a non-empty matrix");
  require_capacity(n);
  if (n == 1) return {m(0, 0)};
  std::vector<double> work(m.packed().begin(), m.packed().end());
  std::vector<double> diag(n);
  std::vector<double> offdiag(n);
  tridiagonalize(work, n, diag, offdiag);
  tridiagonal_ql(diag, offdiag);
  std::sort(diag.begin(), diag.end());
  return diag;
}

double spectral_norm(const SymmetricMatrix& m) {
  const auto values = eigenvalues_sym(m);
  return std::max(std::abs(values.front()), std::abs(values.back()));
}

double zero_snap_threshold(double lambda_max) { return 1e-8 * std::max(1.0, lambda_max); }

}  // namespace mpspectra

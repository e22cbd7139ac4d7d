#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpspectra {

/// Largest matrix dimension accepted by gram and the eigensolver.
inline constexpr std::size_t kMaxDimension = 4096;

/// Dense row-major real matrix with finite entries.
class RealMatrix {
 public:
  RealMatrix() = default;
  /// Zero-filled rows x cols matrix. Throws DomainError on a zero dimension.
  RealMatrix(std::size_t rows, std::size_t cols);
  /// Throws DomainError if data.size() != rows * cols or any entry is not finite.
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric matrix stored as its packed lower triangle, row by row:
/// element (i, j) with j <= i lives at i * (i + 1) / 2 + j.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim);
  /// Throws DomainError on size mismatch or non-finite entries.
  SymmetricMatrix(std::size_t dim, std::vector<double> packed_lower);

  /// Lower triangle of a dense row-major dim x dim array; the upper triangle is ignored.
  static SymmetricMatrix from_dense(std::size_t dim, std::span<const double> dense);

  std::size_t dim() const noexcept { return dim_; }

  double& operator()(std::size_t i, std::size_t j) {
    return i >= j ? packed_[i * (i + 1) / 2 + j] : packed_[j * (j + 1) / 2 + i];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return i >= j ? packed_[i * (i + 1) / 2 + j] : packed_[j * (j + 1) / 2 + i];
  }

  std::span<const double> packed() const noexcept { return packed_; }

  double trace() const;
  double frobenius_norm_squared() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> packed_;
};

/// (1/n) A A^T where n is the row count of A.
/// Throws CapacityError when n exceeds kMaxDimension.
SymmetricMatrix gram(const RealMatrix& a);

/// All eigenvalues in nondecreasing order.
///
/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson-type shifts; eigenvectors are not formed.
/// Throws NumericalError naming the unconverged block, CapacityError above kMaxDimension.
std::vector<double> eigenvalues_sym(const SymmetricMatrix& m);

/// max |lambda_i|.
double spectral_norm(const SymmetricMatrix& m);

/// Magnitude below which an eigenvalue of a Gram matrix is treated as an exact zero:
/// 1e-8 * max(1, lambda_max).
double zero_snap_threshold(double lambda_max);

}  // namespace mpspectra

#pragma once

// Dense complex-matrix kernel: Hermitian eigendecomposition, SVD-backed
// polar decomposition and modulus, PSD square roots, support projections and
// local inverses.

#include <complex>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "parfid/errors.hpp"

namespace parfid {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Eigenvalues below this are treated as round-off by sqrt_psd and PSD checks.
inline constexpr double kPsdClamp = 1e-10;

// Local invertibility demands that no eigenvalue sits in (tol / kGapBelow,
// kGapAbove * tol): kept eigenvalues must clear the tolerance by a factor of
// kGapAbove and discarded ones must be smaller by a factor of kGapBelow.
inline constexpr double kGapAbove = 10.0;
inline constexpr double kGapBelow = 100.0;

/// Tolerance for the Hermiticity test: 1e-12 * max|entry|, floored at 1e-14.
double hermiticity_tolerance(const Matrix& m);

/// max(dim * eps * m, 1e-10 * max(1, m)) for m = max|eigenvalue|: the floor
/// is absolute for states and scales with larger operators.
double default_rank_tolerance(Eigen::Index dim, double max_abs_eigenvalue);

class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  /// Validates max|A - A*| against hermiticity_tolerance and stores (A+A*)/2.
  /// Throws ValidationError otherwise.
  explicit HermitianMatrix(const Matrix& m);

  /// Stores (A+A*)/2 without checking. For results of computations that are
  /// Hermitian by construction up to round-off.
  static HermitianMatrix symmetrize(const Matrix& m);
  static HermitianMatrix identity(Eigen::Index n);
  static HermitianMatrix zero(Eigen::Index n);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double max_abs_entry() const;

 private:
  struct Trusted {};
  HermitianMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;
};

struct SpectralDecomposition {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // unitary, columns match eigenvalues

  Matrix reconstruct() const;
};

class OrthoProjection {
 public:
  OrthoProjection() = default;

  /// Validates p = p*, p^2 = p (to 1e-10 scaled by dim) and that every
  /// eigenvalue lies within 1e-8 of {0, 1}.
  explicit OrthoProjection(const Matrix& m);

  /// Projection onto the span of orthonormal columns.
  static OrthoProjection onto_columns(const Matrix& orthonormal_columns);
  static OrthoProjection zero(Eigen::Index n);
  static OrthoProjection identity(Eigen::Index n);
  /// Skips validation; for projections assembled from orthonormal eigenbases.
  static OrthoProjection unchecked(HermitianMatrix p, int rank, double tol) {
    return OrthoProjection(std::move(p), rank, tol);
  }

  const Matrix& matrix() const { return p_.matrix(); }
  const HermitianMatrix& hermitian() const { return p_; }
  Eigen::Index dim() const { return p_.dim(); }
  int rank() const { return rank_; }
  int corank() const { return static_cast<int>(dim()) - rank_; }
  double rank_tolerance() const { return rank_tol_; }

  /// Orthonormal basis of the range (dim x rank).
  Matrix range_basis() const;

 private:
  OrthoProjection(HermitianMatrix p, int rank, double tol)
      : p_(std::move(p)), rank_(rank), rank_tol_(tol) {}
  HermitianMatrix p_;
  int rank_ = 0;
  double rank_tol_ = 0.5;
};

struct PolarDecomposition {
  Matrix isometry;  // partial isometry w with x = w |x|
  HermitianMatrix modulus;
  OrthoProjection right_support;  // r(x) = w*w = s(|x|)
  OrthoProjection left_support;   // l(x) = ww* = s(|x*|)
};

/// Ascending eigenvalues with eigenvectors normalized so that the
/// largest-magnitude component of each column is real and positive.
/// Throws ConvergenceError if the solver fails.
SpectralDecomposition eigh(const HermitianMatrix& a);

/// Singular values in ascending order.
RealVector singular_values(const Matrix& x);

/// Throws NotPsdError if an eigenvalue is below -clamp. Eigenvalues below
/// 4 n eps max|lambda| (including clamped negatives) map to zero.
HermitianMatrix sqrt_psd(const HermitianMatrix& a, double clamp = kPsdClamp);

/// |x| = (x*x)^{1/2}, computed from the SVD of x.
HermitianMatrix modulus(const Matrix& x);

PolarDecomposition polar(const Matrix& x);

/// s(x): projection onto eigenvectors with eigenvalue > tol. Without tol,
/// default_rank_tolerance is used.
OrthoProjection support(const HermitianMatrix& x,
                        std::optional<double> tol = std::nullopt);

/// True when no eigenvalue falls into the ambiguous band around tol.
bool is_locally_invertible(const HermitianMatrix& x,
                           std::optional<double> tol = std::nullopt);

/// Inverse of x on s(x), zero on the orthocomplement. Throws
/// LocalInvertibilityError if an eigenvalue lies in the ambiguous band and
/// NotPsdError for negative input.
HermitianMatrix local_inverse(const HermitianMatrix& x,
                              std::optional<double> tol = std::nullopt);

/// (lambda_min, lambda_max); the open interval is the interior of the
/// numerical range.
std::pair<double, double> numerical_range_interval(const HermitianMatrix& a);

/// exp(H) through the eigendecomposition of H.
HermitianMatrix exp_hermitian(const HermitianMatrix& h);

/// Unitary exp(iK) for Hermitian K.
Matrix exp_i_hermitian(const HermitianMatrix& k);

double operator_norm(const Matrix& x);
double trace_norm(const Matrix& x);
double condition_number(const Matrix& x);
double min_eigenvalue(const HermitianMatrix& a);

inline Matrix commutator(const Matrix& a, const Matrix& b) {
  return a * b - b * a;
}

}  // namespace parfid

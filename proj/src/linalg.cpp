#include "parfid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace parfid {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_square(const Matrix& x, const char* what) {
  if (x.rows() != x.cols() || x.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a nonempty square matrix, got " << x.rows()
       << "x" << x.cols();
    throw ShapeError(os.str());
  }
}

void require_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) {
    throw ValidationError(std::string(what) + ": matrix has non-finite entries");
  }
}

// Columns of u are rotated so their largest-magnitude entry is real positive.
void fix_phases(Matrix& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    const Complex pivot = u(imax, j);
    if (std::abs(pivot) > 0.0) {
      u.col(j) *= std::conj(pivot) / std::abs(pivot);
    }
  }
}

struct Svd {
  RealVector sigma;  // descending
  Matrix u;
  Matrix v;
};

Svd svd(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> solver(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {solver.singularValues(), solver.matrixU(), solver.matrixV()};
}

}  // namespace

double hermiticity_tolerance(const Matrix& m) {
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  return std::max(1e-12 * scale, 1e-14);
}

double default_rank_tolerance(Eigen::Index dim, double max_abs_eigenvalue) {
  return std::max(static_cast<double>(dim) * kEps * max_abs_eigenvalue,
                  1e-10 * std::max(1.0, max_abs_eigenvalue));
}

HermitianMatrix::HermitianMatrix(const Matrix& m) {
  require_square(m, "HermitianMatrix");
  require_finite(m, "HermitianMatrix");
  const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (defect > hermiticity_tolerance(m)) {
    std::ostringstream os;
    os << "HermitianMatrix: max|A - A*| = " << defect << " exceeds tolerance "
       << hermiticity_tolerance(m);
    throw ValidationError(os.str());
  }
  m_ = (m + m.adjoint()) / 2.0;
}

HermitianMatrix HermitianMatrix::symmetrize(const Matrix& m) {
  require_square(m, "HermitianMatrix::symmetrize");
  return HermitianMatrix((m + m.adjoint()) / 2.0, Trusted{});
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index n) {
  return HermitianMatrix(Matrix::Identity(n, n), Trusted{});
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index n) {
  return HermitianMatrix(Matrix::Zero(n, n), Trusted{});
}

double HermitianMatrix::max_abs_entry() const {
  return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0;
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
         eigenvectors.adjoint();
}

OrthoProjection::OrthoProjection(const Matrix& m) {
  HermitianMatrix h(m);
  const double n = static_cast<double>(h.dim());
  const double idem = (h.matrix() * h.matrix() - h.matrix()).cwiseAbs().maxCoeff();
  if (idem > 1e-10 * std::max(1.0, n)) {
    std::ostringstream os;
    os << "OrthoProjection: max|p^2 - p| = " << idem;
    throw ValidationError(os.str());
  }
  const RealVector ev = eigh(h).eigenvalues;
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double lam = ev(i);
    if (std::min(std::abs(lam), std::abs(lam - 1.0)) > 1e-8) {
      std::ostringstream os;
      os << "OrthoProjection: eigenvalue " << lam << " not within 1e-8 of {0,1}";
      throw ValidationError(os.str());
    }
    if (lam > 0.5) ++rank;
  }
  p_ = std::move(h);
  rank_ = rank;
  rank_tol_ = 0.5;
}

OrthoProjection OrthoProjection::onto_columns(const Matrix& cols) {
  return OrthoProjection(HermitianMatrix::symmetrize(cols * cols.adjoint()),
                         static_cast<int>(cols.cols()), 0.5);
}

OrthoProjection OrthoProjection::zero(Eigen::Index n) {
  return OrthoProjection(HermitianMatrix::zero(n), 0, 0.5);
}

OrthoProjection OrthoProjection::identity(Eigen::Index n) {
  return OrthoProjection(HermitianMatrix::identity(n), static_cast<int>(n), 0.5);
}

Matrix OrthoProjection::range_basis() const {
  const SpectralDecomposition sd = eigh(p_);
  // Eigenvalues ascending: the rank_ largest belong to the range.
  return sd.eigenvectors.rightCols(rank_);
}

SpectralDecomposition eigh(const HermitianMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    double residual = std::numeric_limits<double>::infinity();
    if (solver.eigenvectors().allFinite()) {
      residual = (a.matrix() * solver.eigenvectors() -
                  solver.eigenvectors() *
                      solver.eigenvalues().cast<Complex>().asDiagonal())
                     .norm();
    }
    throw ConvergenceError("eigh: eigensolver did not converge", residual);
  }
  SpectralDecomposition sd{solver.eigenvalues(), solver.eigenvectors()};
  fix_phases(sd.eigenvectors);
  return sd;
}

RealVector singular_values(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> solver(x);
  return solver.singularValues().reverse();
}

HermitianMatrix sqrt_psd(const HermitianMatrix& a, double clamp) {
  SpectralDecomposition sd = eigh(a);
  if (sd.eigenvalues.size() && sd.eigenvalues(0) < -clamp) {
    std::ostringstream os;
    os << "sqrt_psd: input is not positive semidefinite (eigenvalue "
       << sd.eigenvalues(0) << ")";
    throw NotPsdError(os.str(), sd.eigenvalues(0));
  }
  // Eigenvalues at rounding level are zeroed: the square root would lift
  // 1e-17 noise to 3e-9.
  const Eigen::Index n = sd.eigenvalues.size();
  const double top = n ? std::max(std::abs(sd.eigenvalues(0)), std::abs(sd.eigenvalues(n - 1))) : 0.0;
  const double floor = 4.0 * static_cast<double>(n) * kEps * top;
  const RealVector root =
      sd.eigenvalues.unaryExpr([floor](double l) { return l > floor ? std::sqrt(l) : 0.0; });
  return HermitianMatrix::symmetrize(sd.eigenvectors *
                                     root.cast<Complex>().asDiagonal() *
                                     sd.eigenvectors.adjoint());
}

HermitianMatrix modulus(const Matrix& x) {
  require_square(x, "modulus");
  const Svd s = svd(x);
  return HermitianMatrix::symmetrize(s.v * s.sigma.cast<Complex>().asDiagonal() *
                                     s.v.adjoint());
}

PolarDecomposition polar(const Matrix& x) {
  require_square(x, "polar");
  const Svd s = svd(x);
  const Eigen::Index n = x.rows();
  const double tol = default_rank_tolerance(n, s.sigma.size() ? s.sigma(0) : 0.0);
  Eigen::Index r = 0;
  while (r < n && s.sigma(r) > tol) ++r;
  const Matrix ur = s.u.leftCols(r);
  const Matrix vr = s.v.leftCols(r);
  PolarDecomposition pd{
      ur * vr.adjoint(),
      HermitianMatrix::symmetrize(s.v * s.sigma.cast<Complex>().asDiagonal() *
                                  s.v.adjoint()),
      OrthoProjection::unchecked(HermitianMatrix::symmetrize(vr * vr.adjoint()),
                                 static_cast<int>(r), tol),
      OrthoProjection::unchecked(HermitianMatrix::symmetrize(ur * ur.adjoint()),
                                 static_cast<int>(r), tol)};
  return pd;
}

OrthoProjection support(const HermitianMatrix& x, std::optional<double> tol) {
  const SpectralDecomposition sd = eigh(x);
  const Eigen::Index n = x.dim();
  const double t =
      tol.value_or(default_rank_tolerance(n, sd.eigenvalues.cwiseAbs().maxCoeff()));
  Eigen::Index first = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sd.eigenvalues(i) > t) {
      first = i;
      break;
    }
  }
  const Matrix kept = sd.eigenvectors.rightCols(n - first);
  return OrthoProjection::unchecked(HermitianMatrix::symmetrize(kept * kept.adjoint()),
                                    static_cast<int>(n - first), t);
}

namespace {

// Returns the offending eigenvalue if one sits in the ambiguous band.
std::optional<double> gap_violation(const RealVector& ev, double tol) {
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double lam = ev(i);
    if (lam > tol / kGapBelow && lam < kGapAbove * tol) return lam;
  }
  return std::nullopt;
}

}  // namespace

bool is_locally_invertible(const HermitianMatrix& x, std::optional<double> tol) {
  const SpectralDecomposition sd = eigh(x);
  if (sd.eigenvalues.size() && sd.eigenvalues(0) < -kPsdClamp) return false;
  const double t = tol.value_or(
      default_rank_tolerance(x.dim(), sd.eigenvalues.cwiseAbs().maxCoeff()));
  return !gap_violation(sd.eigenvalues, t).has_value();
}

HermitianMatrix local_inverse(const HermitianMatrix& x, std::optional<double> tol) {
  const SpectralDecomposition sd = eigh(x);
  const Eigen::Index n = x.dim();
  if (n && sd.eigenvalues(0) < -kPsdClamp) {
    std::ostringstream os;
    os << "local_inverse: input is not positive semidefinite (eigenvalue "
       << sd.eigenvalues(0) << ")";
    throw NotPsdError(os.str(), sd.eigenvalues(0));
  }
  const double t =
      tol.value_or(default_rank_tolerance(n, sd.eigenvalues.cwiseAbs().maxCoeff()));
  if (auto bad = gap_violation(sd.eigenvalues, t)) {
    std::ostringstream os;
    os << "local_inverse: eigenvalue " << *bad << " lies within the band ("
       << t / kGapBelow << ", " << kGapAbove * t << ") around tolerance " << t;
    throw LocalInvertibilityError(os.str(), *bad);
  }
  RealVector inv = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sd.eigenvalues(i) > t) inv(i) = 1.0 / sd.eigenvalues(i);
  }
  return HermitianMatrix::symmetrize(sd.eigenvectors * inv.cast<Complex>().asDiagonal() *
                                     sd.eigenvectors.adjoint());
}

std::pair<double, double> numerical_range_interval(const HermitianMatrix& a) {
  const RealVector ev = eigh(a).eigenvalues;
  return {ev(0), ev(ev.size() - 1)};
}

HermitianMatrix exp_hermitian(const HermitianMatrix& h) {
  const SpectralDecomposition sd = eigh(h);
  const RealVector e = sd.eigenvalues.array().exp();
  return HermitianMatrix::symmetrize(sd.eigenvectors * e.cast<Complex>().asDiagonal() *
                                     sd.eigenvectors.adjoint());
}

Matrix exp_i_hermitian(const HermitianMatrix& k) {
  const SpectralDecomposition sd = eigh(k);
  Vector phases(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::polar(1.0, sd.eigenvalues(i));
  }
  return sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint();
}

double operator_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return singular_values(x).maxCoeff();
}

double trace_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return singular_values(x).sum();
}

double condition_number(const Matrix& x) {
  const RealVector s = singular_values(x);
  if (s(0) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(s.size() - 1) / s(0);
}

double min_eigenvalue(const HermitianMatrix& a) { return eigh(a).eigenvalues(0); }

}  // namespace parfid

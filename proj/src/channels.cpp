#include "parfid/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "parfid/fidelity.hpp"
#include "parfid/forms.hpp"
#include "parfid/partial_fidelity.hpp"
#include "parfid/random.hpp"

namespace parfid {

namespace {

constexpr double kTraceTol = 1e-9;
constexpr double kChoiPsdTol = 1e-9;
constexpr double kChoiTraceTol = 1e-8;
constexpr double kKrausDropTol = 1e-10;
constexpr double kPremiseMargin = 1e-9;
constexpr double kFaceRankRel = 1e-12;

// Frobenius-isometric real coordinates of an N x N Hermitian matrix: the
// diagonal, then sqrt(2) Re and sqrt(2) Im of the strict upper triangle.
RealVector herm_to_vec(const Matrix& h) {
  const Eigen::Index n = h.rows();
  RealVector v(n * n);
  Eigen::Index s = 0;
  for (Eigen::Index i = 0; i < n; ++i) v(s++) = h(i, i).real();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      v(s++) = std::sqrt(2.0) * h(i, j).real();
      v(s++) = std::sqrt(2.0) * h(i, j).imag();
    }
  }
  return v;
}

Matrix vec_to_herm(const RealVector& v, Eigen::Index n) {
  Matrix h = Matrix::Zero(n, n);
  Eigen::Index s = 0;
  for (Eigen::Index i = 0; i < n; ++i) h(i, i) = v(s++);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double re = v(s++) / std::sqrt(2.0);
      const double im = v(s++) / std::sqrt(2.0);
      h(i, j) = Complex(re, im);
      h(j, i) = Complex(re, -im);
    }
  }
  return h;
}

Matrix choi_action(const Matrix& j, const Matrix& x, int n, int m) {
  Matrix out = Matrix::Zero(m, m);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const Complex xba = x(b, a);  // (X^T)_{ab}
      if (xba == Complex(0.0, 0.0)) continue;
      // tr_in[J (X^T (x) I)]: sum_{a,b} J_{(b,.),(a,.)} X^T_{a,b}
      out += xba * j.block(b * m, a * m, m, m);
    }
  }
  return out;
}

// Linear map J -> (tr_out J, Phi_J(omega), Phi_J(rho)) in real coordinates.
struct AffineConstraints {
  Eigen::MatrixXd a;
  RealVector b;
};

RealVector constraint_image(const Matrix& j, int n, int m, const Matrix& omega,
                            const Matrix& rho) {
  RealVector out(n * n + 2 * m * m);
  out << herm_to_vec(partial_trace_second(j, n, m)), herm_to_vec(choi_action(j, omega, n, m)),
      herm_to_vec(choi_action(j, rho, n, m));
  return out;
}

AffineConstraints build_constraints(int n, int m, const Matrix& omega, const Matrix& rho,
                                    const Matrix& omega2, const Matrix& rho2) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * m;
  AffineConstraints c;
  c.a.resize(n * n + 2 * m * m, dim * dim);
  for (Eigen::Index s = 0; s < dim * dim; ++s) {
    RealVector e = RealVector::Zero(dim * dim);
    e(s) = 1.0;
    c.a.col(s) = constraint_image(vec_to_herm(e, dim), n, m, omega, rho);
  }
  c.b.resize(n * n + 2 * m * m);
  c.b << herm_to_vec(Matrix::Identity(n, n)), herm_to_vec(omega2), herm_to_vec(rho2);
  return c;
}

// v -> v - A^+(A v - b), precomputed as v - P v + c with P the projector onto
// the row space of A.
struct AffineProjector {
  Eigen::MatrixXd row_projector;
  RealVector offset;
  double consistency_residual = 0.0;

  AffineProjector(const Eigen::MatrixXd& a, const RealVector& b) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    const double tol = s.size() ? 1e-10 * std::max(1.0, s(0)) : 0.0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > tol) ++r;
    const Eigen::MatrixXd vr = svd.matrixV().leftCols(r);
    const Eigen::MatrixXd ur = svd.matrixU().leftCols(r);
    row_projector = vr * vr.transpose();
    offset = vr * (s.head(r).cwiseInverse().asDiagonal() * (ur.transpose() * b));
    consistency_residual = (a * offset - b).norm();
  }

  RealVector operator()(const RealVector& v) const { return v - row_projector * v + offset; }
};

struct PsdSplit {
  RealVector projected;
  double negative_norm = 0.0;
};

PsdSplit project_psd(const RealVector& v, Eigen::Index dim) {
  const SpectralDecomposition sd = eigh(HermitianMatrix::symmetrize(vec_to_herm(v, dim)));
  const RealVector clipped = sd.eigenvalues.cwiseMax(0.0);
  PsdSplit out;
  out.negative_norm = (sd.eigenvalues - clipped).norm();
  out.projected = herm_to_vec(sd.eigenvectors * clipped.cast<Complex>().asDiagonal() *
                              sd.eigenvectors.adjoint());
  return out;
}

std::optional<ChoiMatrix> try_choi(int n, int m, const Matrix& j) {
  try {
    return ChoiMatrix(n, m, HermitianMatrix::symmetrize(j));
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

// The problem restricted to matrices J = W Y W* for an isometry W (N x r),
// in the real coordinates of Y.
struct FaceProblem {
  Matrix basis;
  Eigen::MatrixXd a;
  Eigen::Index r = 0;
};

FaceProblem restrict_to(const AffineConstraints& c, Matrix basis) {
  FaceProblem f;
  f.r = basis.cols();
  Eigen::MatrixXd lift(basis.rows() * basis.rows(), f.r * f.r);
  for (Eigen::Index s = 0; s < f.r * f.r; ++s) {
    RealVector es = RealVector::Zero(f.r * f.r);
    es(s) = 1.0;
    lift.col(s) = herm_to_vec(basis * vec_to_herm(es, f.r) * basis.adjoint());
  }
  f.a = c.a * lift;
  f.basis = std::move(basis);
  return f;
}

Matrix lift(const FaceProblem& f, const RealVector& y) {
  return f.basis * vec_to_herm(y, f.r) * f.basis.adjoint();
}

// Phi(omega) = omega2 with omega2 u = 0 forces J (conj(s) (x) u) = 0 for every
// s in the support of omega. Returns an orthonormal basis of the complement
// of all such vectors.
Matrix kernel_reduced_basis(int n, int m,
                            const std::vector<std::pair<const HermitianMatrix*,
                                                        const HermitianMatrix*>>& pairs) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n) * m;
  Matrix span = Matrix::Zero(dim, dim);
  for (const auto& [in, out] : pairs) {
    const SpectralDecomposition si = eigh(*in);
    const SpectralDecomposition so = eigh(*out);
    const double ti = kFaceRankRel * std::max(si.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
    const double to = kFaceRankRel * std::max(so.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
    for (int i = 0; i < n; ++i) {
      if (si.eigenvalues(i) <= ti) continue;
      for (int a = 0; a < m; ++a) {
        if (so.eigenvalues(a) > to) continue;
        Vector v(dim);
        for (int x = 0; x < n; ++x) {
          for (int y = 0; y < m; ++y) {
            v(x * m + y) = std::conj(si.eigenvectors(x, i)) * so.eigenvectors(y, a);
          }
        }
        span += v * v.adjoint();
      }
    }
  }
  const SpectralDecomposition sd = eigh(HermitianMatrix::symmetrize(span));
  Eigen::Index keep = 0;
  while (keep < dim && sd.eigenvalues(keep) <= 1e-9) ++keep;
  return sd.eigenvectors.leftCols(keep);
}

struct Candidate {
  ChoiMatrix choi;
  double affine_residual = 0.0;
};

// Least squares over factors J = K K* (K of size dim x r) by
// Levenberg-Marquardt, started from the top r eigenpairs of the current PSD
// iterate, for every rank up to that of the iterate. Near a solution of rank
// r this converges quadratically even when the convex iteration only
// approaches the solution face slowly. Candidates are accepted only after
// verification against the full constraints.
std::optional<Candidate> polish(const AffineConstraints& c, const FaceProblem& face,
                                const RealVector& x, int n, int m, double feas_tol) {
  constexpr int kMaxSteps = 60;
  const Eigen::Index dim = face.r;
  const SpectralDecomposition sd = eigh(HermitianMatrix::symmetrize(vec_to_herm(x, dim)));
  const double top = sd.eigenvalues(dim - 1);
  if (!(top > 0.0)) return std::nullopt;
  Eigen::Index rank = 0;
  while (rank < dim && sd.eigenvalues(dim - 1 - rank) > 1e-12 * top) ++rank;
  const double target = 1e-2 * feas_tol;
  const auto residual = [&](const Matrix& k) {
    return RealVector(face.a * herm_to_vec(k * k.adjoint()) - c.b);
  };
  for (Eigen::Index r = 1; r <= rank; ++r) {
    Matrix k = sd.eigenvectors.rightCols(r) *
               sd.eigenvalues.tail(r).cwiseSqrt().cast<Complex>().asDiagonal();
    RealVector res = residual(k);
    double lambda = 1e-6;
    for (int step = 0; step < kMaxSteps && res.norm() > target; ++step) {
      Eigen::MatrixXd jac(res.size(), 2 * dim * r);
      for (Eigen::Index col = 0; col < dim * r; ++col) {
        for (int part = 0; part < 2; ++part) {
          Matrix d = Matrix::Zero(dim, r);
          d(col % dim, col / dim) = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
          jac.col(2 * col + part) = face.a * herm_to_vec(k * d.adjoint() + d * k.adjoint());
        }
      }
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      const RealVector rhs = -(jac.transpose() * res);
      bool improved = false;
      for (int tries = 0; tries < 20 && !improved; ++tries) {
        Eigen::MatrixXd damped = normal;
        damped.diagonal().array() += lambda * std::max(1.0, normal.diagonal().maxCoeff());
        const RealVector delta = damped.ldlt().solve(rhs);
        Matrix kn = k;
        for (Eigen::Index col = 0; col < dim * r; ++col) {
          kn(col % dim, col / dim) += Complex(delta(2 * col), delta(2 * col + 1));
        }
        const RealVector rn = residual(kn);
        if (rn.norm() < res.norm()) {
          k = kn;
          res = rn;
          lambda = std::max(lambda * 0.1, 1e-15);
          improved = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!improved) break;
    }
    if (res.norm() > target) continue;
    const Matrix j = face.basis * k * k.adjoint() * face.basis.adjoint();
    const double full = (c.a * herm_to_vec(j) - c.b).norm();
    if (full > feas_tol) continue;
    if (std::optional<ChoiMatrix> choi = try_choi(n, m, j)) return Candidate{*choi, full};
  }
  return std::nullopt;
}

void require_density(const HermitianMatrix& w, const char* what) {
  if (std::abs(w.matrix().trace().real() - 1.0) > 1e-10) {
    throw PreconditionError(std::string(what) + ": densities must have unit trace");
  }
  if (min_eigenvalue(w) < -kPsdClamp) {
    throw NotPsdError(std::string(what) + ": density is not positive", min_eigenvalue(w));
  }
}

}  // namespace

KrausSet::KrausSet(int n, int m, std::vector<Matrix> ops) : n_(n), m_(m), ops_(std::move(ops)) {
  if (n < 1 || m < 1) throw ShapeError("KrausSet: dimensions must be positive");
  if (ops_.empty()) throw ShapeError("KrausSet: at least one operator is required");
  Matrix sum = Matrix::Zero(n, n);
  for (const Matrix& k : ops_) {
    if (k.rows() != m || k.cols() != n) {
      std::ostringstream os;
      os << "KrausSet: operator is " << k.rows() << "x" << k.cols() << ", expected " << m << "x"
         << n;
      throw ShapeError(os.str());
    }
    sum += k.adjoint() * k;
  }
  const double defect = (sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect > kTraceTol) {
    std::ostringstream os;
    os << "KrausSet: sum K*K differs from the identity by " << defect;
    throw ValidationError(os.str());
  }
}

ChoiMatrix::ChoiMatrix(int n, int m, HermitianMatrix j) : n_(n), m_(m), j_(std::move(j)) {
  if (n < 1 || m < 1 || j_.dim() != static_cast<Eigen::Index>(n) * m) {
    throw ShapeError("ChoiMatrix: matrix size must be n * m");
  }
  const double lo = min_eigenvalue(j_);
  if (lo < -kChoiPsdTol) {
    std::ostringstream os;
    os << "ChoiMatrix: not positive (eigenvalue " << lo << ")";
    throw ValidationError(os.str());
  }
  const double defect =
      (partial_trace_second(j_.matrix(), n, m) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect > kChoiTraceTol) {
    std::ostringstream os;
    os << "ChoiMatrix: partial trace over the output differs from the identity by " << defect;
    throw ValidationError(os.str());
  }
}

Matrix apply(const KrausSet& kraus, const Matrix& x) {
  if (x.rows() != kraus.input_dim() || x.cols() != kraus.input_dim()) {
    throw ShapeError("apply: input size does not match the channel");
  }
  Matrix out = Matrix::Zero(kraus.output_dim(), kraus.output_dim());
  for (const Matrix& k : kraus.ops()) out += k * x * k.adjoint();
  return out;
}

HermitianMatrix apply(const KrausSet& kraus, const HermitianMatrix& w) {
  return HermitianMatrix::symmetrize(apply(kraus, w.matrix()));
}

Matrix apply(const ChoiMatrix& choi, const Matrix& x) {
  if (x.rows() != choi.input_dim() || x.cols() != choi.input_dim()) {
    throw ShapeError("apply: input size does not match the channel");
  }
  return choi_action(choi.matrix().matrix(), x, choi.input_dim(), choi.output_dim());
}

HermitianMatrix apply(const ChoiMatrix& choi, const HermitianMatrix& w) {
  return HermitianMatrix::symmetrize(apply(choi, w.matrix()));
}

ChoiMatrix choi_from_kraus(const KrausSet& kraus) {
  const int n = kraus.input_dim();
  const int m = kraus.output_dim();
  Matrix j = Matrix::Zero(n * m, n * m);
  for (const Matrix& k : kraus.ops()) {
    Vector v(n * m);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) v(i * m + a) = k(a, i);
    }
    j += v * v.adjoint();
  }
  return ChoiMatrix(n, m, HermitianMatrix::symmetrize(j));
}

KrausSet kraus_from_choi(const ChoiMatrix& choi) {
  const int n = choi.input_dim();
  const int m = choi.output_dim();
  const SpectralDecomposition sd = eigh(choi.matrix());
  std::vector<Matrix> ops;
  for (Eigen::Index l = sd.eigenvalues.size() - 1; l >= 0; --l) {
    const double lambda = sd.eigenvalues(l);
    if (lambda <= kKrausDropTol) break;
    Matrix k(m, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) k(a, i) = std::sqrt(lambda) * sd.eigenvectors(i * m + a, l);
    }
    ops.push_back(std::move(k));
  }
  return KrausSet(n, m, std::move(ops));
}

Matrix partial_trace_second(const Matrix& x, int n, int m) {
  if (x.rows() != static_cast<Eigen::Index>(n) * m || x.cols() != x.rows()) {
    throw ShapeError("partial_trace_second: size is not n * m");
  }
  Matrix out = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = x.block(i * m, j * m, m, m).trace();
  }
  return out;
}

Matrix partial_trace_first(const Matrix& x, int n, int m) {
  if (x.rows() != static_cast<Eigen::Index>(n) * m || x.cols() != x.rows()) {
    throw ShapeError("partial_trace_first: size is not n * m");
  }
  Matrix out = Matrix::Zero(m, m);
  for (int i = 0; i < n; ++i) out += x.block(i * m, i * m, m, m);
  return out;
}

KrausSet identity_channel(int n) { return KrausSet(n, n, {Matrix::Identity(n, n)}); }

KrausSet unitary_channel(const Matrix& u) {
  return KrausSet(static_cast<int>(u.cols()), static_cast<int>(u.rows()), {u});
}

KrausSet replacement_channel(int n, const HermitianMatrix& sigma) {
  const int m = static_cast<int>(sigma.dim());
  const SpectralDecomposition sd = eigh(sigma);
  std::vector<Matrix> ops;
  for (int l = 0; l < m; ++l) {
    const double s = std::max(sd.eigenvalues(l), 0.0);
    if (s <= 0.0) continue;
    for (int i = 0; i < n; ++i) {
      Matrix k = Matrix::Zero(m, n);
      k.col(i) = std::sqrt(s) * sd.eigenvectors.col(l);
      ops.push_back(std::move(k));
    }
  }
  return KrausSet(n, m, std::move(ops));
}

KrausSet depolarizing_channel(int n, int m) {
  std::vector<Matrix> ops;
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      Matrix k = Matrix::Zero(m, n);
      k(a, i) = 1.0 / std::sqrt(static_cast<double>(m));
      ops.push_back(std::move(k));
    }
  }
  return KrausSet(n, m, std::move(ops));
}

KrausSet random_channel(int n, int m, std::uint64_t seed, int env_dim) {
  const int e = env_dim > 0 ? env_dim : n;
  if (m * e < n) throw PreconditionError("random_channel: m * env_dim must be at least n");
  Rng rng(seed);
  const Matrix v = haar_unitary(m * e, rng).leftCols(n);
  std::vector<Matrix> ops;
  for (int l = 0; l < e; ++l) {
    Matrix k(m, n);
    for (int a = 0; a < m; ++a) k.row(a) = v.row(a * e + l);
    ops.push_back(std::move(k));
  }
  return KrausSet(n, m, std::move(ops));
}

MonotonicityReport monotonicity_sweep(int n_channels, int n_state_pairs, int dim,
                                      std::uint64_t seed, double tol) {
  if (dim < 1 || dim > 5) throw PreconditionError("monotonicity_sweep: dim must be in [1, 5]");
  MonotonicityReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const BlockAlgebra alg({dim});
  const Trace tr = Trace::standard(alg);
  for (int c = 0; c < n_channels; ++c) {
    const std::uint64_t cseed = derive_seed(seed, static_cast<std::uint64_t>(c));
    const KrausSet phi = random_channel(dim, dim, cseed);
    Rng rng(derive_seed(cseed, 1));
    for (int p = 0; p < n_state_pairs; ++p) {
      const int rank_w = p % 2 == 0 ? dim : 1 + static_cast<int>(rng() % dim);
      const int rank_r = p % 3 == 0 ? dim : 1 + static_cast<int>(rng() % dim);
      const PositiveForm w = PositiveForm::single(random_density(dim, rank_w, rng));
      const PositiveForm r = PositiveForm::single(random_density(dim, rank_r, rng));
      const PositiveForm pw = PositiveForm::single(apply(phi, w.density(0)));
      const PositiveForm pr = PositiveForm::single(apply(phi, r.density(0)));
      const double before = fidelity_spectral(w, r).value;
      const double after = fidelity_spectral(pw, pr).value;
      ++rep.checks;
      rep.worst_slack = std::min(rep.worst_slack, after - before);
      if (after < before - tol) rep.violations.push_back({c, p, cseed, before, after});
      const PartialFidelityProfile b = profile(w, r, tr);
      const PartialFidelityProfile a = profile(pw, pr, tr);
      for (std::size_t k = 1; k + 1 < b.entries.size(); ++k) {
        ++rep.profile_entries;
        if (a.entries[k].spectral < b.entries[k].spectral - tol) ++rep.profile_decreases;
      }
    }
  }
  if (rep.checks == 0) rep.worst_slack = 0.0;
  return rep;
}

void FeasibilityConfig::validate() const {
  if (max_iters < 1 || !(feas_tol > 0.0) || !(stall_tol > 0.0) || stall_window < 1 ||
      polish_start < 1) {
    throw PreconditionError("FeasibilityConfig: parameter out of range");
  }
}

const char* status_name(FeasibilityStatus status) {
  switch (status) {
    case FeasibilityStatus::feasible:
      return "feasible";
    case FeasibilityStatus::infeasible:
      return "infeasible";
    case FeasibilityStatus::unknown:
      return "unknown";
  }
  return "unknown";
}

FeasibilityVerdict feasibility(const HermitianMatrix& omega, const HermitianMatrix& rho,
                               const HermitianMatrix& omega2, const HermitianMatrix& rho2,
                               const FeasibilityConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(omega.dim());
  const int m = static_cast<int>(omega2.dim());
  if (rho.dim() != n || rho2.dim() != m) {
    throw ShapeError("feasibility: input pair and output pair must share dimensions");
  }
  require_density(omega, "feasibility");
  require_density(rho, "feasibility");
  require_density(omega2, "feasibility");
  require_density(rho2, "feasibility");

  const AffineConstraints c =
      build_constraints(n, m, omega.matrix(), rho.matrix(), omega2.matrix(), rho2.matrix());
  const FaceProblem face =
      restrict_to(c, kernel_reduced_basis(n, m, {{&omega, &omega2}, {&rho, &rho2}}));
  FeasibilityVerdict v;
  const auto inconsistent = [&](double residual) {
    v.status = FeasibilityStatus::infeasible;
    v.affine_inconsistent = true;
    v.affine_residual = v.gap = residual;
    v.note = "the linear constraints have no common solution";
    return v;
  };
  if (face.r == 0) return inconsistent(c.b.head(n * n).norm());
  const AffineProjector proj(face.a, c.b);
  if (proj.consistency_residual > cfg.feas_tol) return inconsistent(proj.consistency_residual);

  const Eigen::Index dim = face.r;
  RealVector x = herm_to_vec(face.basis.adjoint() * face.basis / static_cast<double>(m));
  RealVector y = x;
  RealVector p = RealVector::Zero(x.size());
  RealVector q = RealVector::Zero(x.size());
  std::vector<double> gaps;
  gaps.reserve(cfg.max_iters);
  long next_polish = cfg.polish_start;
  long next_record = 1;
  const auto record_last = [&](int it) {
    if (!gaps.empty() && (v.gap_history.empty() || v.gap_history.back().first != it)) {
      v.gap_history.emplace_back(it, gaps.back());
    }
  };
  const auto accept = [&](const ChoiMatrix& choi, double affine_res, int it) {
    record_last(it);
    v.status = FeasibilityStatus::feasible;
    v.choi = choi;
    v.iterations = it;
    v.affine_residual = affine_res;
    v.psd_residual = project_psd(herm_to_vec(choi.matrix().matrix()), choi.matrix().dim())
                         .negative_norm;
    v.gap = 0.0;
    return v;
  };
  for (int it = 1; it <= cfg.max_iters; ++it) {
    y = proj(x + p);
    p = x + p - y;
    const RealVector z = y + q;
    x = project_psd(z, dim).projected;
    q = z - x;
    const double gap = (x - y).norm();
    gaps.push_back(gap);
    if (it == next_record) {
      v.gap_history.emplace_back(it, gap);
      next_record *= 10;
    }
    const double affine_res = (face.a * x - c.b).norm();
    if (affine_res <= cfg.feas_tol) {
      if (std::optional<ChoiMatrix> choi = try_choi(n, m, lift(face, x))) {
        return accept(*choi, affine_res, it);
      }
    }
    if (it == next_polish) {
      next_polish = 2 * next_polish;
      if (std::optional<Candidate> cand = polish(c, face, x, n, m, cfg.feas_tol)) {
        return accept(cand->choi, cand->affine_residual, it);
      }
    }
    if (it > cfg.stall_window && gap > 100.0 * cfg.feas_tol &&
        gaps[it - 1 - cfg.stall_window] - gap < cfg.stall_tol) {
      record_last(it);
      v.status = FeasibilityStatus::infeasible;
      v.iterations = it;
      v.gap = gap;
      v.affine_residual = affine_res;
      v.psd_residual = project_psd(y, dim).negative_norm;
      v.note = "alternating projections stalled with a positive gap";
      return v;
    }
  }
  if (std::optional<Candidate> cand = polish(c, face, x, n, m, cfg.feas_tol)) {
    return accept(cand->choi, cand->affine_residual, cfg.max_iters);
  }
  record_last(cfg.max_iters);
  v.status = FeasibilityStatus::unknown;
  v.iterations = cfg.max_iters;
  v.gap = gaps.empty() ? 0.0 : gaps.back();
  v.affine_residual = (face.a * x - c.b).norm();
  v.psd_residual = project_psd(y, dim).negative_norm;
  v.note = "iteration cap reached without a verified solution or a stall";
  return v;
}

KanalCounterexample kanal_counterexample(const HermitianMatrix& omega,
                                         const HermitianMatrix& omega2) {
  require_density(omega, "kanal_counterexample");
  require_density(omega2, "kanal_counterexample");
  const SpectralDecomposition in = eigh(omega);
  const SpectralDecomposition out = eigh(omega2);
  const Eigen::Index n = in.eigenvalues.size();
  const Eigen::Index m = out.eigenvalues.size();
  // Descending order: index 0 is the largest eigenvalue.
  const auto lam = [&](Eigen::Index j) { return in.eigenvalues(n - 1 - j); };
  const auto lam2 = [&](Eigen::Index k) { return out.eigenvalues(m - 1 - k); };
  const double top2 = lam2(0);

  std::optional<KanalCounterexample> best;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lj = lam(j);
    if (!(lj < top2 - kPremiseMargin)) continue;
    for (Eigen::Index k = 1; k < m; ++k) {
      const double lk = lam2(k);
      if (!(lj > lk + kPremiseMargin)) continue;
      KanalCounterexample ce;
      ce.j = static_cast<int>(j);
      ce.k = static_cast<int>(k);
      ce.lambda = lj;
      ce.beta = (lj - lk) / (top2 - lk);
      ce.psi = in.eigenvectors.col(n - 1 - j);
      ce.phi = std::sqrt(ce.beta) * out.eigenvectors.col(m - 1) +
               std::sqrt(1.0 - ce.beta) * out.eigenvectors.col(m - 1 - k);
      ce.phi.normalize();
      ce.certificate = min_eigenvalue(
          HermitianMatrix::symmetrize(omega2.matrix() - lj * ce.phi * ce.phi.adjoint()));
      if (!best || ce.certificate < best->certificate) best = ce;
    }
  }
  if (!best) {
    std::ostringstream os;
    os << "kanal_counterexample: no eigenvalue of omega lies inside the open numerical range of "
          "omega2; spec(omega) = {";
    for (Eigen::Index j = 0; j < n; ++j) os << (j ? ", " : "") << lam(j);
    os << "}, spec(omega2) = {";
    for (Eigen::Index k = 0; k < m; ++k) os << (k ? ", " : "") << lam2(k);
    const auto [lo, hi] = numerical_range_interval(omega2);
    os << "}, interior of W(omega2) = (" << lo << ", " << hi << ")";
    throw PreconditionError(os.str());
  }
  KanalCounterexample& ce = *best;
  const PositiveForm w = PositiveForm::single(omega);
  const PositiveForm w2 = PositiveForm::single(omega2);
  ce.fidelity_in = fidelity_pure_vs_mixed(w, ce.psi);
  ce.fidelity_out = fidelity_pure_vs_mixed(w2, ce.phi);
  ce.input_min_eigenvalue = min_eigenvalue(
      HermitianMatrix::symmetrize(omega.matrix() - ce.lambda * ce.psi * ce.psi.adjoint()));
  return ce;
}

Matrix conditional_expectation(const Matrix& x, int n, int m, const HermitianMatrix& sigma) {
  if (sigma.dim() != m) throw ShapeError("conditional_expectation: sigma must be m x m");
  if (x.rows() != static_cast<Eigen::Index>(n) * m || x.cols() != x.rows()) {
    throw ShapeError("conditional_expectation: X must be (n m) x (n m)");
  }
  Matrix one_sigma = Matrix::Zero(n * m, n * m);
  for (int i = 0; i < n; ++i) one_sigma.block(i * m, i * m, m, m) = sigma.matrix();
  const Matrix reduced = partial_trace_second(x * one_sigma, n, m);
  return Eigen::kroneckerProduct(reduced, Matrix::Identity(m, m)).eval();
}

HermitianMatrix compose_with_conditional_expectation(const HermitianMatrix& w, int n, int m,
                                                     const HermitianMatrix& sigma) {
  if (sigma.dim() != m || w.dim() != static_cast<Eigen::Index>(n) * m) {
    throw ShapeError("compose_with_conditional_expectation: dimension mismatch");
  }
  const Matrix reduced = partial_trace_second(w.matrix(), n, m);
  return HermitianMatrix::symmetrize(Eigen::kroneckerProduct(reduced, sigma.matrix()).eval());
}

}  // namespace parfid

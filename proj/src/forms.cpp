#include "parfid/forms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "parfid/random.hpp"

namespace parfid {

void require_same_algebra(const BlockAlgebra& a, const BlockAlgebra& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": operands live on different block algebras");
  }
}

BlockAlgebra::BlockAlgebra(std::vector<int> block_dims, int dimension_cap)
    : dims_(std::move(block_dims)) {
  if (dims_.empty()) throw ShapeError("BlockAlgebra: at least one block is required");
  for (int n : dims_) {
    if (n < 1) throw ShapeError("BlockAlgebra: block dimensions must be positive");
  }
  if (total_dim() > dimension_cap) {
    std::ostringstream os;
    os << "BlockAlgebra: total dimension " << total_dim() << " exceeds cap "
       << dimension_cap;
    throw ShapeError(os.str());
  }
}

int BlockAlgebra::total_dim() const { return std::accumulate(dims_.begin(), dims_.end(), 0); }

BlockMatrix::BlockMatrix(BlockAlgebra algebra, std::vector<Matrix> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (blocks_.size() != algebra_.num_blocks()) {
    throw ShapeError("BlockMatrix: block count does not match the algebra");
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const int n = algebra_.dim(k);
    if (blocks_[k].rows() != n || blocks_[k].cols() != n) {
      std::ostringstream os;
      os << "BlockMatrix: block " << k << " is " << blocks_[k].rows() << "x"
         << blocks_[k].cols() << ", expected " << n << "x" << n;
      throw ShapeError(os.str());
    }
  }
}

BlockMatrix BlockMatrix::identity(const BlockAlgebra& algebra) {
  std::vector<Matrix> b;
  for (int n : algebra.block_dims()) b.push_back(Matrix::Identity(n, n));
  return BlockMatrix(algebra, std::move(b));
}

BlockMatrix BlockMatrix::zero(const BlockAlgebra& algebra) {
  std::vector<Matrix> b;
  for (int n : algebra.block_dims()) b.push_back(Matrix::Zero(n, n));
  return BlockMatrix(algebra, std::move(b));
}

BlockMatrix BlockMatrix::single(const Matrix& m) {
  return BlockMatrix(BlockAlgebra::single(static_cast<int>(m.rows())), {m});
}

Matrix BlockMatrix::to_dense() const {
  const int n = algebra_.total_dim();
  Matrix d = Matrix::Zero(n, n);
  int offset = 0;
  for (const Matrix& b : blocks_) {
    d.block(offset, offset, b.rows(), b.cols()) = b;
    offset += static_cast<int>(b.rows());
  }
  return d;
}

BlockMatrix BlockMatrix::adjoint() const {
  std::vector<Matrix> b;
  for (const Matrix& m : blocks_) b.push_back(m.adjoint());
  return BlockMatrix(algebra_, std::move(b));
}

BlockMatrix BlockMatrix::operator*(const BlockMatrix& rhs) const {
  require_same_algebra(algebra_, rhs.algebra_, "BlockMatrix::operator*");
  std::vector<Matrix> b;
  for (std::size_t k = 0; k < blocks_.size(); ++k) b.push_back(blocks_[k] * rhs.blocks_[k]);
  return BlockMatrix(algebra_, std::move(b));
}

BlockMatrix BlockMatrix::operator+(const BlockMatrix& rhs) const {
  require_same_algebra(algebra_, rhs.algebra_, "BlockMatrix::operator+");
  std::vector<Matrix> b;
  for (std::size_t k = 0; k < blocks_.size(); ++k) b.push_back(blocks_[k] + rhs.blocks_[k]);
  return BlockMatrix(algebra_, std::move(b));
}

BlockMatrix BlockMatrix::operator-(const BlockMatrix& rhs) const {
  require_same_algebra(algebra_, rhs.algebra_, "BlockMatrix::operator-");
  std::vector<Matrix> b;
  for (std::size_t k = 0; k < blocks_.size(); ++k) b.push_back(blocks_[k] - rhs.blocks_[k]);
  return BlockMatrix(algebra_, std::move(b));
}

BlockMatrix BlockMatrix::operator*(Complex s) const {
  std::vector<Matrix> b;
  for (const Matrix& m : blocks_) b.push_back(m * s);
  return BlockMatrix(algebra_, std::move(b));
}

double BlockMatrix::norm() const {
  double n = 0.0;
  for (const Matrix& m : blocks_) n = std::max(n, operator_norm(m));
  return n;
}

BlockProjection::BlockProjection(BlockAlgebra algebra, std::vector<OrthoProjection> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (blocks_.size() != algebra_.num_blocks()) {
    throw ShapeError("BlockProjection: block count does not match the algebra");
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].dim() != algebra_.dim(k)) {
      throw ShapeError("BlockProjection: block dimension does not match the algebra");
    }
  }
}

BlockProjection BlockProjection::identity(const BlockAlgebra& algebra) {
  std::vector<OrthoProjection> b;
  for (int n : algebra.block_dims()) b.push_back(OrthoProjection::identity(n));
  return BlockProjection(algebra, std::move(b));
}

BlockProjection BlockProjection::zero(const BlockAlgebra& algebra) {
  std::vector<OrthoProjection> b;
  for (int n : algebra.block_dims()) b.push_back(OrthoProjection::zero(n));
  return BlockProjection(algebra, std::move(b));
}

BlockProjection BlockProjection::from_block_matrix(const BlockMatrix& x) {
  std::vector<OrthoProjection> b;
  for (const Matrix& m : x.blocks()) b.emplace_back(m);
  return BlockProjection(x.algebra(), std::move(b));
}

BlockRanks BlockProjection::ranks() const {
  BlockRanks r;
  for (const auto& p : blocks_) r.push_back(p.rank());
  return r;
}

BlockRanks BlockProjection::coranks() const {
  BlockRanks r;
  for (const auto& p : blocks_) r.push_back(p.corank());
  return r;
}

int BlockProjection::total_rank() const {
  int r = 0;
  for (const auto& p : blocks_) r += p.rank();
  return r;
}

BlockMatrix BlockProjection::to_block_matrix() const {
  std::vector<Matrix> b;
  for (const auto& p : blocks_) b.push_back(p.matrix());
  return BlockMatrix(algebra_, std::move(b));
}

Trace::Trace(BlockAlgebra algebra, std::vector<double> weights)
    : algebra_(std::move(algebra)), weights_(std::move(weights)) {
  if (weights_.size() != algebra_.num_blocks()) {
    throw ShapeError("Trace: one weight per block is required");
  }
  for (double c : weights_) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ValidationError("Trace: weights must be finite and strictly positive");
    }
  }
}

Trace Trace::standard(const BlockAlgebra& algebra) {
  return Trace(algebra, std::vector<double>(algebra.num_blocks(), 1.0));
}

Complex Trace::operator()(const BlockMatrix& x) const {
  require_same_algebra(algebra_, x.algebra(), "Trace");
  Complex s = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) s += weights_[k] * x.block(k).trace();
  return s;
}

PositiveForm::PositiveForm(BlockAlgebra algebra, std::vector<HermitianMatrix> densities)
    : PositiveForm(unchecked(std::move(algebra), std::move(densities))) {
  for (std::size_t k = 0; k < densities_.size(); ++k) {
    const double lam = min_eigenvalue(densities_[k]);
    if (lam < -kPsdClamp) {
      std::ostringstream os;
      os << "PositiveForm: density of block " << k
         << " is not positive semidefinite (eigenvalue " << lam << ")";
      throw NotPsdError(os.str(), lam);
    }
  }
}

PositiveForm PositiveForm::single(const HermitianMatrix& density) {
  return PositiveForm(BlockAlgebra::single(static_cast<int>(density.dim())), {density});
}

PositiveForm PositiveForm::unchecked(BlockAlgebra algebra,
                                     std::vector<HermitianMatrix> densities) {
  PositiveForm f;
  if (densities.size() != algebra.num_blocks()) {
    throw ShapeError("PositiveForm: one density per block is required");
  }
  for (std::size_t k = 0; k < densities.size(); ++k) {
    if (densities[k].dim() != algebra.dim(k)) {
      throw ShapeError("PositiveForm: density dimension does not match the algebra");
    }
  }
  f.algebra_ = std::move(algebra);
  f.densities_ = std::move(densities);
  return f;
}

double PositiveForm::mass() const {
  double m = 0.0;
  for (const auto& w : densities_) m += w.matrix().trace().real();
  return m;
}

BlockProjection PositiveForm::support(std::optional<double> tol) const {
  std::vector<OrthoProjection> b;
  for (const auto& w : densities_) b.push_back(parfid::support(w, tol));
  return BlockProjection(algebra_, std::move(b));
}

Complex evaluate(const PositiveForm& omega, const BlockMatrix& x) {
  require_same_algebra(omega.algebra(), x.algebra(), "evaluate");
  Complex s = 0.0;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    // tr(w x) as an elementwise sum: sum_ij w_ij x_ji
    s += (omega.density(k).matrix().transpose().cwiseProduct(x.block(k))).sum();
  }
  return s;
}

double evaluate_real(const PositiveForm& omega, const BlockMatrix& x) {
  const Complex v = evaluate(omega, x);
  double scale = 1.0;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    scale = std::max(scale, omega.density(k).matrix().norm() * x.block(k).norm());
  }
  if (std::abs(v.imag()) > 1e-12 * scale) {
    std::ostringstream os;
    os << "evaluate_real: imaginary part " << v.imag() << " (argument not Hermitian?)";
    throw ValidationError(os.str());
  }
  return v.real();
}

PositiveForm inner_derived(const PositiveForm& omega, const BlockMatrix& z) {
  require_same_algebra(omega.algebra(), z.algebra(), "inner_derived");
  std::vector<HermitianMatrix> d;
  for (std::size_t k = 0; k < z.num_blocks(); ++k) {
    d.push_back(HermitianMatrix::symmetrize(z.block(k) * omega.density(k).matrix() *
                                            z.block(k).adjoint()));
  }
  return PositiveForm::unchecked(omega.algebra(), std::move(d));
}

PositiveForm form_from_trace_vector(const Trace& tau, const BlockMatrix& x) {
  require_same_algebra(tau.algebra(), x.algebra(), "form_from_trace_vector");
  std::vector<HermitianMatrix> d;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    d.push_back(HermitianMatrix::symmetrize(tau.weight(k) * x.block(k) * x.block(k).adjoint()));
  }
  return PositiveForm::unchecked(tau.algebra(), std::move(d));
}

BlockMatrix sqrt_density_rep(const PositiveForm& omega, const Trace& tau) {
  require_same_algebra(omega.algebra(), tau.algebra(), "sqrt_density_rep");
  std::vector<Matrix> b;
  for (std::size_t k = 0; k < omega.algebra().num_blocks(); ++k) {
    const HermitianMatrix& w = omega.density(k);
    const double clamp = kPsdClamp * std::max(1.0, w.max_abs_entry());
    b.push_back(
        sqrt_psd(HermitianMatrix::symmetrize(w.matrix() / tau.weight(k)), clamp).matrix());
  }
  return BlockMatrix(omega.algebra(), std::move(b));
}

CentralizerCheck centralizer_check(const PositiveForm& mu, const BlockMatrix& y,
                                   int n_samples, double tol, std::uint64_t seed) {
  require_same_algebra(mu.algebra(), y.algebra(), "in_centralizer");
  CentralizerCheck c;
  for (std::size_t k = 0; k < y.num_blocks(); ++k) {
    c.commutator_norm = std::max(
        c.commutator_norm, operator_norm(commutator(y.block(k), mu.density(k).matrix())));
  }
  Rng rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    std::vector<Matrix> xb;
    for (int n : mu.algebra().block_dims()) {
      Matrix g = ginibre(n, n, rng);
      xb.push_back(g / g.norm());
    }
    const BlockMatrix x(mu.algebra(), std::move(xb));
    c.sampled_defect =
        std::max(c.sampled_defect, std::abs(evaluate(mu, x * y) - evaluate(mu, y * x)));
  }
  c.member = c.commutator_norm <= tol;
  return c;
}

bool in_centralizer(const PositiveForm& mu, const BlockMatrix& y, int n_samples, double tol,
                    std::uint64_t seed) {
  return centralizer_check(mu, y, n_samples, tol, seed).member;
}

bool is_tracial(const PositiveForm& mu, double tol) {
  for (const auto& w : mu.densities()) {
    const Eigen::Index n = w.dim();
    const Complex mean = w.matrix().trace() / static_cast<double>(n);
    const double dev = (w.matrix() - mean * Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (dev > tol * std::max(1.0, w.max_abs_entry())) return false;
  }
  return true;
}

bool orthogonal(const PositiveForm& omega, const PositiveForm& rho, double tol) {
  require_same_algebra(omega.algebra(), rho.algebra(), "orthogonal");
  const BlockProjection so = omega.support();
  const BlockProjection sr = rho.support();
  double overlap = 0.0;
  for (std::size_t k = 0; k < omega.algebra().num_blocks(); ++k) {
    overlap = std::max(overlap, operator_norm(so.block(k).matrix() * sr.block(k).matrix()));
  }
  return overlap <= tol;
}

PositiveForm combine(double a, const PositiveForm& omega, double b, const PositiveForm& rho) {
  require_same_algebra(omega.algebra(), rho.algebra(), "combine");
  std::vector<HermitianMatrix> d;
  for (std::size_t k = 0; k < omega.algebra().num_blocks(); ++k) {
    d.push_back(HermitianMatrix::symmetrize(a * omega.density(k).matrix() +
                                            b * rho.density(k).matrix()));
  }
  return PositiveForm::unchecked(omega.algebra(), std::move(d));
}

}  // namespace parfid

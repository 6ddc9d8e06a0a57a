#pragma once

// Block algebras M = M_{n_1} + ... + M_{n_K}, their elements, traces and
// positive linear forms stored as per-block densities.

#include <cstdint>
#include <vector>

#include "parfid/linalg.hpp"

namespace parfid {

inline constexpr int kDefaultDimensionCap = 64;

class BlockAlgebra {
 public:
  BlockAlgebra() = default;
  explicit BlockAlgebra(std::vector<int> block_dims, int dimension_cap = kDefaultDimensionCap);
  static BlockAlgebra single(int n) { return BlockAlgebra({n}); }

  const std::vector<int>& block_dims() const { return dims_; }
  std::size_t num_blocks() const { return dims_.size(); }
  int dim(std::size_t k) const { return dims_[k]; }
  int total_dim() const;

  bool operator==(const BlockAlgebra&) const = default;

 private:
  std::vector<int> dims_;
};

/// Per-block rank vector; encodes a unitary equivalence class of projections.
using BlockRanks = std::vector<int>;

/// An element x = (x_1, ..., x_K) of a block algebra.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(BlockAlgebra algebra, std::vector<Matrix> blocks);

  static BlockMatrix identity(const BlockAlgebra& algebra);
  static BlockMatrix zero(const BlockAlgebra& algebra);
  static BlockMatrix single(const Matrix& m);

  const BlockAlgebra& algebra() const { return algebra_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const Matrix& block(std::size_t k) const { return blocks_[k]; }
  Matrix& block(std::size_t k) { return blocks_[k]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  /// Block-diagonal dense matrix of size total_dim.
  Matrix to_dense() const;

  BlockMatrix adjoint() const;
  BlockMatrix operator*(const BlockMatrix& rhs) const;
  BlockMatrix operator+(const BlockMatrix& rhs) const;
  BlockMatrix operator-(const BlockMatrix& rhs) const;
  BlockMatrix operator*(Complex s) const;

  /// Max over blocks of the operator norm.
  double norm() const;

 private:
  BlockAlgebra algebra_;
  std::vector<Matrix> blocks_;
};

class BlockProjection {
 public:
  BlockProjection() = default;
  BlockProjection(BlockAlgebra algebra, std::vector<OrthoProjection> blocks);

  static BlockProjection identity(const BlockAlgebra& algebra);
  static BlockProjection zero(const BlockAlgebra& algebra);
  /// Validates every block of x as an orthoprojection.
  static BlockProjection from_block_matrix(const BlockMatrix& x);

  const BlockAlgebra& algebra() const { return algebra_; }
  const OrthoProjection& block(std::size_t k) const { return blocks_[k]; }
  BlockRanks ranks() const;
  BlockRanks coranks() const;
  int total_rank() const;
  BlockMatrix to_block_matrix() const;

 private:
  BlockAlgebra algebra_;
  std::vector<OrthoProjection> blocks_;
};

/// Faithful trace tau(x) = sum_k c_k tr(x_k); all weights must be positive.
class Trace {
 public:
  Trace() = default;
  Trace(BlockAlgebra algebra, std::vector<double> weights);
  /// All weights 1: the standard matrix trace on every block.
  static Trace standard(const BlockAlgebra& algebra);

  const BlockAlgebra& algebra() const { return algebra_; }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<double>& weights() const { return weights_; }

  Complex operator()(const BlockMatrix& x) const;

 private:
  BlockAlgebra algebra_;
  std::vector<double> weights_;
};

class PositiveForm {
 public:
  PositiveForm() = default;
  /// Validates that every density is PSD to -kPsdClamp.
  PositiveForm(BlockAlgebra algebra, std::vector<HermitianMatrix> densities);
  static PositiveForm single(const HermitianMatrix& density);
  /// Skips the PSD check; for forms built from PSD-by-construction products.
  static PositiveForm unchecked(BlockAlgebra algebra, std::vector<HermitianMatrix> densities);

  const BlockAlgebra& algebra() const { return algebra_; }
  const HermitianMatrix& density(std::size_t k) const { return densities_[k]; }
  const std::vector<HermitianMatrix>& densities() const { return densities_; }

  /// omega(1).
  double mass() const;
  /// s(omega), blockwise support of the densities.
  BlockProjection support(std::optional<double> tol = std::nullopt) const;

 private:
  BlockAlgebra algebra_;
  std::vector<HermitianMatrix> densities_;
};

/// sum_k tr(w_k x_k).
Complex evaluate(const PositiveForm& omega, const BlockMatrix& x);

/// evaluate() for Hermitian x; throws ValidationError if the imaginary part
/// exceeds 1e-12 (scaled by the size of the operands).
double evaluate_real(const PositiveForm& omega, const BlockMatrix& x);

/// omega^z = omega(z* (.) z), density z w z*.
PositiveForm inner_derived(const PositiveForm& omega, const BlockMatrix& z);

/// tau^x, density c_k x_k x_k*.
PositiveForm form_from_trace_vector(const Trace& tau, const BlockMatrix& x);

/// x with tau^x = omega: x_k = (w_k / c_k)^{1/2}.
BlockMatrix sqrt_density_rep(const PositiveForm& omega, const Trace& tau);

struct CentralizerCheck {
  bool member = false;
  double commutator_norm = 0.0;  // max_k ||[y_k, w_k]||, decides membership
  double sampled_defect = 0.0;   // max |mu(xy) - mu(yx)| over random unit x
};

CentralizerCheck centralizer_check(const PositiveForm& mu, const BlockMatrix& y,
                                   int n_samples, double tol, std::uint64_t seed);

bool in_centralizer(const PositiveForm& mu, const BlockMatrix& y, int n_samples,
                    double tol, std::uint64_t seed);

/// Every block density is a scalar multiple of the identity (to tol).
bool is_tracial(const PositiveForm& mu, double tol = 1e-12);

/// ||s(omega) s(rho)|| <= tol.
bool orthogonal(const PositiveForm& omega, const PositiveForm& rho, double tol = 1e-9);

/// Forms with densities summed blockwise (a*omega + b*rho).
PositiveForm combine(double a, const PositiveForm& omega, double b, const PositiveForm& rho);

void require_same_algebra(const BlockAlgebra& a, const BlockAlgebra& b, const char* what);

}  // namespace parfid

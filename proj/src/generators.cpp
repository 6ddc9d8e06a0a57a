#include "parfid/generators.hpp"

#include <cmath>

namespace parfid {

BlockAlgebra random_algebra(Rng& rng) {
  static const std::vector<std::vector<int>> menu = {{2}, {3}, {4}, {5}, {2, 2}, {1, 2}, {2, 3}};
  return BlockAlgebra(menu[rng() % menu.size()]);
}

PositiveForm random_form(const BlockAlgebra& alg, Rng& rng, bool full_rank, bool normalize) {
  std::vector<HermitianMatrix> d;
  double mass = 0.0;
  for (int n : alg.block_dims()) {
    const int rank = full_rank ? n : 1 + static_cast<int>(rng() % n);
    d.push_back(random_psd(n, rank, rng));
    mass += d.back().matrix().trace().real();
  }
  if (normalize) {
    for (auto& h : d) h = HermitianMatrix::symmetrize(h.matrix() / mass);
  }
  return PositiveForm(alg, std::move(d));
}

BlockMatrix random_block_matrix(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> b;
  for (int n : alg.block_dims()) b.push_back(ginibre(n, n, rng));
  return BlockMatrix(alg, std::move(b));
}

BlockMatrix random_block_hermitian(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> b;
  for (int n : alg.block_dims()) b.push_back(random_hermitian(n, rng).matrix());
  return BlockMatrix(alg, std::move(b));
}

BlockMatrix random_psd_on(const BlockProjection& p, Rng& rng) {
  std::vector<Matrix> blocks;
  for (std::size_t k = 0; k < p.algebra().num_blocks(); ++k) {
    const OrthoProjection& pk = p.block(k);
    const Matrix basis = pk.range_basis();
    const Eigen::Index r = basis.cols();
    if (r == 0) {
      blocks.push_back(Matrix::Zero(pk.dim(), pk.dim()));
      continue;
    }
    const Matrix g = ginibre(r, r, rng);
    const Matrix inner = g * g.adjoint() + 0.05 * Matrix::Identity(r, r);
    blocks.push_back(HermitianMatrix::symmetrize(basis * inner * basis.adjoint()).matrix());
  }
  return BlockMatrix(p.algebra(), std::move(blocks));
}

BlockMatrix random_invertible(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> blocks;
  for (int n : alg.block_dims()) {
    Matrix g = ginibre(n, n, rng);
    while (condition_number(g) > 1e4) g = ginibre(n, n, rng);
    blocks.push_back(g);
  }
  return BlockMatrix(alg, std::move(blocks));
}

BlockMatrix random_unitary_block(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> blocks;
  for (int n : alg.block_dims()) blocks.push_back(haar_unitary(n, rng));
  return BlockMatrix(alg, std::move(blocks));
}

BlockRanks random_ranks(const BlockAlgebra& alg, Rng& rng) {
  BlockRanks r;
  for (int n : alg.block_dims()) r.push_back(static_cast<int>(rng() % (n + 1)));
  return r;
}

std::pair<Vector, Vector> overlap_pair(int n, double t) {
  if (n < 2 || !(t >= 0.0 && t <= 1.0)) {
    throw PreconditionError("overlap_pair: need n >= 2 and t in [0, 1]");
  }
  Vector a = Vector::Zero(n), b = Vector::Zero(n);
  a(0) = 1.0;
  b(0) = t;
  b(1) = std::sqrt(1.0 - t * t);
  return {a, b};
}

HermitianMatrix pure_density(const Vector& psi) {
  return HermitianMatrix::symmetrize(psi * psi.adjoint());
}

}  // namespace parfid

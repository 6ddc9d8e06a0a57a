#include "parfid/random.hpp"

#include <cmath>

namespace parfid {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

Matrix haar_unitary(Eigen::Index n, Rng& rng) {
  const Matrix g = ginibre(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

OrthoProjection haar_projection(Eigen::Index n, Eigen::Index k, Rng& rng) {
  const Matrix u = haar_unitary(n, rng);
  return OrthoProjection::onto_columns(u.leftCols(k));
}

Vector random_unit_vector(Eigen::Index n, Rng& rng) {
  Vector v = ginibre(n, 1, rng).col(0);
  return v / v.norm();
}

HermitianMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  return HermitianMatrix::symmetrize(ginibre(n, n, rng));
}

HermitianMatrix random_psd(Eigen::Index n, Eigen::Index rank, Rng& rng) {
  const Matrix g = ginibre(n, rank, rng);
  return HermitianMatrix::symmetrize(g * g.adjoint());
}

HermitianMatrix random_density(Eigen::Index n, Eigen::Index rank, Rng& rng) {
  const HermitianMatrix w = random_psd(n, rank, rng);
  return HermitianMatrix::symmetrize(w.matrix() / w.matrix().trace().real());
}

}  // namespace parfid

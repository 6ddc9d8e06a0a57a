#include <cmath>
#include <numbers>

#include "doctest.h"
#include "parfid/linalg.hpp"
#include "parfid/random.hpp"
#include "test_util.hpp"

using namespace parfid;
using namespace parfid::testing;

TEST_CASE("HermitianMatrix rejects non-Hermitian input and symmetrizes") {
  Matrix m(2, 2);
  m << 1.0, Complex(0, 1), Complex(0, 1), 2.0;
  CHECK_THROWS_AS(HermitianMatrix{m}, ValidationError);

  Matrix near(2, 2);
  near << 1.0, Complex(0.5, 1e-15), Complex(0.5, -2e-15), 2.0;
  HermitianMatrix h(near);
  CHECK(max_abs(h.matrix() - h.matrix().adjoint()) == 0.0);

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(HermitianMatrix{bad}, ValidationError);
}

TEST_CASE("eigh on diagonal and identity input") {
  const SpectralDecomposition sd = eigh(hdiag({3, 1, 2}));
  CHECK(sd.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(sd.eigenvalues(1) == doctest::Approx(2.0));
  CHECK(sd.eigenvalues(2) == doctest::Approx(3.0));
  // Permutation eigenvectors: each column is a signed unit vector, phase fixed to +1.
  Matrix expected = Matrix::Zero(3, 3);
  expected(1, 0) = 1.0;
  expected(2, 1) = 1.0;
  expected(0, 2) = 1.0;
  CHECK(max_abs_diff(sd.eigenvectors, expected) < 1e-14);

  const SpectralDecomposition id = eigh(HermitianMatrix::identity(4));
  CHECK((id.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(max_abs_diff(id.eigenvectors.adjoint() * id.eigenvectors, Matrix::Identity(4, 4)) < 1e-12);
}

TEST_CASE("eigh reconstructs a random Hermitian matrix and is deterministic") {
  Rng rng(7);
  const HermitianMatrix a = random_hermitian(5, rng);
  const SpectralDecomposition sd = eigh(a);
  const double scale = max_abs(a.matrix());
  CHECK(max_abs_diff(sd.reconstruct(), a.matrix()) / scale < 1e-10);
  CHECK(max_abs_diff(sd.eigenvectors.adjoint() * sd.eigenvectors, Matrix::Identity(5, 5)) < 1e-10);
  for (Eigen::Index i = 1; i < 5; ++i) CHECK(sd.eigenvalues(i - 1) <= sd.eigenvalues(i));

  const SpectralDecomposition again = eigh(a);
  CHECK((again.eigenvalues.array() == sd.eigenvalues.array()).all());
  CHECK((again.eigenvectors.array() == sd.eigenvectors.array()).all());
}

TEST_CASE("sqrt_psd") {
  CHECK(max_abs_diff(sqrt_psd(hdiag({4, 9})).matrix(), diag({2, 3})) < 1e-14);
  CHECK(max_abs(sqrt_psd(HermitianMatrix::zero(3)).matrix()) == 0.0);

  Rng rng(11);
  const HermitianMatrix a = random_psd(4, 4, rng);
  const HermitianMatrix r = sqrt_psd(a);
  CHECK(max_abs_diff(r.matrix() * r.matrix(), a.matrix()) / max_abs(a.matrix()) < 1e-9);
  CHECK(min_eigenvalue(r) >= 0.0);

  // Round-off negatives are clamped, genuine ones rejected.
  CHECK(max_abs(sqrt_psd(hdiag({-5e-11, 1})).matrix() - diag({0, 1})) < 1e-14);
  try {
    sqrt_psd(hdiag({-1e-3, 1}));
    FAIL("expected NotPsdError");
  } catch (const NotPsdError& e) {
    CHECK(e.eigenvalue() == doctest::Approx(-1e-3));
  }
}

TEST_CASE("modulus") {
  Rng rng(3);
  const Matrix u = haar_unitary(4, rng);
  CHECK(max_abs_diff(modulus(u).matrix(), Matrix::Identity(4, 4)) < 1e-12);
  CHECK(max_abs_diff(modulus(diag({-2, 3})).matrix(), diag({2, 3})) < 1e-14);

  // Eigenvalues of |x| against singular values and against the independent
  // route sqrt_psd(x*x).
  const Matrix x = ginibre(4, 4, rng);
  const RealVector ev = eigh(modulus(x)).eigenvalues;
  const RealVector sv = singular_values(x);
  CHECK((ev - sv).cwiseAbs().maxCoeff() < 1e-9);
  const HermitianMatrix via_square = sqrt_psd(HermitianMatrix::symmetrize(x.adjoint() * x));
  CHECK(max_abs_diff(via_square.matrix(), modulus(x).matrix()) < 1e-9);
}

TEST_CASE("polar decomposition") {
  SUBCASE("orthoprojection is its own polar decomposition") {
    Rng rng(19);
    const OrthoProjection p = haar_projection(4, 2, rng);
    const PolarDecomposition pd = polar(p.matrix());
    CHECK(max_abs_diff(pd.isometry, p.matrix()) < 1e-10);
    CHECK(max_abs_diff(pd.modulus.matrix(), p.matrix()) < 1e-10);
  }
  SUBCASE("invertible x has a unitary polar part") {
    Rng rng(20);
    const Matrix x = ginibre(4, 4, rng);
    const PolarDecomposition pd = polar(x);
    CHECK(max_abs_diff(pd.isometry.adjoint() * pd.isometry, Matrix::Identity(4, 4)) < 1e-10);
    CHECK(max_abs_diff(pd.isometry * pd.modulus.matrix(), x) / max_abs(x) < 1e-10);
  }
  SUBCASE("rank-deficient x") {
    Rng rng(21);
    const Matrix x = ginibre(5, 2, rng) * ginibre(2, 5, rng);
    const PolarDecomposition pd = polar(x);
    const Matrix& w = pd.isometry;
    CHECK(pd.right_support.rank() == 2);
    CHECK(pd.left_support.rank() == 2);
    CHECK(max_abs_diff(w * pd.modulus.matrix(), x) / max_abs(x) < 1e-10);
    CHECK(max_abs_diff(w.adjoint() * w, pd.right_support.matrix()) < 1e-10);
    CHECK(max_abs_diff(w * w.adjoint(), pd.left_support.matrix()) < 1e-10);
    CHECK(max_abs_diff(pd.right_support.matrix(), support(pd.modulus).matrix()) < 1e-10);
    const HermitianMatrix mod_adj = modulus(x.adjoint());
    CHECK(max_abs_diff(pd.left_support.matrix(), support(mod_adj).matrix()) < 1e-10);
    // w vanishes on ker|x|
    const Matrix kernel = Matrix::Identity(5, 5) - pd.right_support.matrix();
    CHECK(max_abs(w * kernel) < 1e-10);
  }
}

TEST_CASE("support") {
  const OrthoProjection s = support(hdiag({0, 0.5, 2}));
  CHECK(s.rank() == 2);
  CHECK(max_abs_diff(s.matrix(), diag({0, 1, 1})) < 1e-14);
  CHECK(support(HermitianMatrix::zero(3)).rank() == 0);

  Rng rng(5);
  const Matrix u = haar_unitary(3, rng);
  const HermitianMatrix x = HermitianMatrix::symmetrize(u * diag({1e-14, 1, 1}) * u.adjoint());
  const OrthoProjection sx = support(x);
  CHECK(sx.rank() == 2);
  CHECK(max_abs_diff(sx.matrix() * x.matrix(), x.matrix()) < 1e-13);
}

TEST_CASE("local_inverse") {
  CHECK(max_abs_diff(local_inverse(hdiag({2, 0})).matrix(), diag({0.5, 0})) < 1e-15);

  Rng rng(9);
  const HermitianMatrix a = random_psd(4, 4, rng);
  CHECK(max_abs_diff(local_inverse(a).matrix(), a.matrix().inverse()) < 1e-9);

  try {
    local_inverse(hdiag({1, 1e-11}), 1e-10);
    FAIL("expected LocalInvertibilityError");
  } catch (const LocalInvertibilityError& e) {
    CHECK(e.eigenvalue() == doctest::Approx(1e-11));
  }
  CHECK_FALSE(is_locally_invertible(hdiag({1, 1e-11}), 1e-10));
  CHECK(is_locally_invertible(hdiag({1, 0}), 1e-10));
}

TEST_CASE("local inverse is a generalized inverse on random rank-deficient PSD input") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    const Eigen::Index r = 1 + trial % n;
    const HermitianMatrix x = random_psd(n, r, rng);
    const Matrix xi = local_inverse(x).matrix();
    const Matrix& xm = x.matrix();
    const double s = max_abs(xm);
    CHECK(max_abs_diff(xm * xi * xm, xm) / s < 1e-9);
    CHECK(max_abs_diff(xi * xm * xi, xi) / max_abs(xi) < 1e-9);
    CHECK(max_abs_diff(xm * xi, support(x).matrix()) < 1e-9);
  }
}

TEST_CASE("rank decisions do not depend on the scale of large operators") {
  CHECK(default_rank_tolerance(3, 0.5) == 1e-10);
  CHECK(default_rank_tolerance(3, 1e3) == doctest::Approx(1e-7));
  Rng rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Eigen::Index r = 1 + trial % n;
    const Matrix g = ginibre(n, n, rng);
    const HermitianMatrix x = random_psd(n, r, rng);
    // Congruence by a non-unitary factor leaves round-off in the kernel.
    const HermitianMatrix big = HermitianMatrix::symmetrize(1e3 * g * x.matrix() * g.adjoint());
    CHECK(support(big).rank() == r);
    CHECK(is_locally_invertible(big));
  }
}

TEST_CASE("numerical range interval") {
  auto [lo, hi] = numerical_range_interval(hdiag({0.2, 0.8}));
  CHECK(lo == doctest::Approx(0.2));
  CHECK(hi == doctest::Approx(0.8));
  auto [clo, chi] = numerical_range_interval(HermitianMatrix(0.3 * Matrix::Identity(3, 3)));
  CHECK(clo == doctest::Approx(chi));
  auto [dlo, dhi] = numerical_range_interval(hdiag({0.5, 0.3, 0.2}));
  CHECK(dlo == doctest::Approx(0.2));
  CHECK(dhi == doctest::Approx(0.5));
}

TEST_CASE("operator monotonicity of the square root") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const HermitianMatrix a = random_psd(n, n, rng);
    const HermitianMatrix b =
        HermitianMatrix::symmetrize(a.matrix() + random_psd(n, 1 + trial % n, rng).matrix());
    const HermitianMatrix diff =
        HermitianMatrix::symmetrize(sqrt_psd(b).matrix() - sqrt_psd(a).matrix());
    CHECK(min_eigenvalue(diff) >= -1e-9);
  }
}

TEST_CASE("exp charts") {
  Rng rng(41);
  const HermitianMatrix h = random_hermitian(3, rng);
  const HermitianMatrix e = exp_hermitian(h);
  const HermitianMatrix em = exp_hermitian(HermitianMatrix::symmetrize(-h.matrix()));
  CHECK(max_abs_diff(e.matrix() * em.matrix(), Matrix::Identity(3, 3)) < 1e-12);
  const Matrix u = exp_i_hermitian(h);
  CHECK(max_abs_diff(u.adjoint() * u, Matrix::Identity(3, 3)) < 1e-12);
  CHECK(exp_hermitian(HermitianMatrix::zero(2)).matrix().isIdentity(1e-15));
}

TEST_CASE("haar unitaries and projections") {
  Rng rng(43423);
  Matrix twirled = Matrix::Zero(3, 3);
  const Matrix rho = diag({0.2, 0.5, 0.3});
  const int n_points = 10000;
  for (int k = 0; k < n_points; ++k) {
    const Matrix u = haar_unitary(3, rng);
    CHECK(max_abs_diff(u.adjoint() * u, Matrix::Identity(3, 3)) < 1e-12);
    twirled += u * rho * u.adjoint();
  }
  twirled /= n_points;
  CHECK(max_abs_diff(twirled, Matrix::Identity(3, 3) / 3.0) < 0.5 / std::sqrt(n_points));

  const OrthoProjection p = haar_projection(5, 2, rng);
  CHECK(p.rank() == 2);
  CHECK_NOTHROW(OrthoProjection(p.matrix()));
}

TEST_CASE("OrthoProjection validation") {
  CHECK_THROWS_AS(OrthoProjection(diag({0.5, 1})), ValidationError);
  const OrthoProjection p(diag({1, 0, 1}));
  CHECK(p.rank() == 2);
  CHECK(p.corank() == 1);
  CHECK(p.range_basis().cols() == 2);
}

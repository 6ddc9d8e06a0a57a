#include <cmath>

#include "doctest.h"
#include "parfid/forms.hpp"
#include "parfid/random.hpp"
#include "test_util.hpp"

using namespace parfid;
using namespace parfid::testing;

namespace {

BlockMatrix random_block(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> b;
  for (int n : alg.block_dims()) b.push_back(ginibre(n, n, rng));
  return BlockMatrix(alg, std::move(b));
}

BlockMatrix random_hermitian_block(const BlockAlgebra& alg, Rng& rng) {
  std::vector<Matrix> b;
  for (int n : alg.block_dims()) b.push_back(random_hermitian(n, rng).matrix());
  return BlockMatrix(alg, std::move(b));
}

PositiveForm random_form(const BlockAlgebra& alg, Rng& rng) {
  std::vector<HermitianMatrix> d;
  for (int n : alg.block_dims()) d.push_back(random_psd(n, n, rng));
  return PositiveForm(alg, std::move(d));
}

// tr(w x) by the naive double loop.
Complex naive_evaluate(const PositiveForm& omega, const BlockMatrix& x) {
  Complex s = 0.0;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    const Matrix& w = omega.density(k).matrix();
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * x.block(k)(j, i);
  }
  return s;
}

}  // namespace

TEST_CASE("BlockAlgebra validation") {
  CHECK_THROWS_AS(BlockAlgebra(std::vector<int>{}), ShapeError);
  CHECK_THROWS_AS(BlockAlgebra({2, 0}), ShapeError);
  CHECK_THROWS_AS(BlockAlgebra({40, 30}), ShapeError);
  CHECK(BlockAlgebra({2, 3}).total_dim() == 5);
}

TEST_CASE("Trace rejects null weights") {
  CHECK_THROWS_AS(Trace(BlockAlgebra({2, 2}), {1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(Trace(BlockAlgebra({2, 2}), {1.0}), ShapeError);
}

TEST_CASE("PositiveForm validation") {
  CHECK_THROWS_AS(PositiveForm::single(hdiag({0.5, -0.1})), NotPsdError);
  const PositiveForm f = PositiveForm::single(hdiag({0.5, 0.0, 0.25}));
  CHECK(f.mass() == doctest::Approx(0.75));
  CHECK(f.support().ranks() == BlockRanks{2});
}

TEST_CASE("evaluate") {
  const BlockAlgebra alg({3});
  const PositiveForm maxmixed =
      PositiveForm::single(HermitianMatrix(Matrix::Identity(3, 3) / 3.0));
  CHECK(evaluate_real(maxmixed, BlockMatrix::identity(alg)) == doctest::Approx(1.0));

  Rng rng(13);
  const BlockAlgebra blocks({2, 3});
  const PositiveForm omega = random_form(blocks, rng);
  CHECK(std::abs(evaluate(omega, BlockMatrix::zero(blocks))) == 0.0);
  for (int i = 0; i < 20; ++i) {
    const BlockMatrix x = random_block(blocks, rng);
    CHECK(std::abs(evaluate(omega, x) - naive_evaluate(omega, x)) < 1e-12);
  }
  CHECK_THROWS_AS(evaluate(omega, BlockMatrix::identity(alg)), ShapeError);
  CHECK_THROWS_AS(evaluate_real(omega, random_block(blocks, rng)), ValidationError);
}

TEST_CASE("inner_derived") {
  Rng rng(14);
  const BlockAlgebra alg({2, 3});
  const PositiveForm omega = random_form(alg, rng);

  const PositiveForm same = inner_derived(omega, BlockMatrix::identity(alg));
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(max_abs_diff(same.density(k).matrix(), omega.density(k).matrix()) < 1e-15);

  const BlockMatrix u(alg, {haar_unitary(2, rng), haar_unitary(3, rng)});
  const PositiveForm rotated = inner_derived(omega, u);
  for (std::size_t k = 0; k < 2; ++k) {
    const Matrix expect = u.block(k) * omega.density(k).matrix() * u.block(k).adjoint();
    CHECK(max_abs_diff(rotated.density(k).matrix(), expect) < 1e-14);
  }

  // tr^z with z = diag(1,0) reads off x_11.
  const PositiveForm tr2 = PositiveForm::single(HermitianMatrix::identity(2));
  const PositiveForm corner = inner_derived(tr2, BlockMatrix::single(diag({1, 0})));
  Matrix x(2, 2);
  x << Complex(0.3, 0.0), Complex(1, 2), Complex(-4, 1), 7.0;
  CHECK(std::abs(evaluate(corner, BlockMatrix::single(x)) - Complex(0.3, 0.0)) < 1e-15);

  // omega^z(x) = omega(z* x z)
  const BlockMatrix z = random_block(alg, rng);
  const PositiveForm derived = inner_derived(omega, z);
  for (int i = 0; i < 10; ++i) {
    const BlockMatrix y = random_block(alg, rng);
    CHECK(std::abs(evaluate(derived, y) - evaluate(omega, z.adjoint() * y * z)) < 1e-11);
  }
  CHECK(std::abs(evaluate_real(derived, BlockMatrix::identity(alg)) -
                 evaluate_real(omega, z.adjoint() * z)) < 1e-12);

  // (omega^z)^y = omega^{zy}
  const BlockMatrix y = random_block(alg, rng);
  const PositiveForm twice = inner_derived(inner_derived(omega, z), y);
  const PositiveForm once = inner_derived(omega, y * z);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(max_abs_diff(twice.density(k).matrix(), once.density(k).matrix()) < 1e-11);
}

TEST_CASE("form_from_trace_vector and sqrt_density_rep") {
  const BlockAlgebra m3({3});
  const Trace tr = Trace::standard(m3);
  const PositiveForm id = form_from_trace_vector(tr, BlockMatrix::identity(m3));
  CHECK(max_abs_diff(id.density(0).matrix(), Matrix::Identity(3, 3)) == 0.0);

  Rng rng(17);
  const HermitianMatrix w = random_density(3, 3, rng);
  const BlockMatrix root = BlockMatrix::single(sqrt_psd(w).matrix());
  CHECK(max_abs_diff(form_from_trace_vector(tr, root).density(0).matrix(), w.matrix()) < 1e-14);
  CHECK(max_abs_diff(sqrt_density_rep(PositiveForm::single(w), tr).block(0),
                     sqrt_psd(w).matrix()) < 1e-14);

  const BlockAlgebra alg({2, 2});
  const Trace weighted(alg, {1.0, 2.0});
  const PositiveForm scaled = form_from_trace_vector(weighted, BlockMatrix::identity(alg));
  CHECK(max_abs_diff(scaled.density(0).matrix(), Matrix::Identity(2, 2)) == 0.0);
  CHECK(max_abs_diff(scaled.density(1).matrix(), 2.0 * Matrix::Identity(2, 2)) == 0.0);

  const Trace four(BlockAlgebra({2}), {4.0});
  const BlockMatrix half =
      sqrt_density_rep(PositiveForm::single(HermitianMatrix::identity(2)), four);
  CHECK(max_abs_diff(half.block(0), Matrix::Identity(2, 2) / 2.0) < 1e-15);

  // tau^x(y) = tau(x* y x)
  const BlockMatrix x = random_block(alg, rng);
  const PositiveForm tx = form_from_trace_vector(weighted, x);
  const BlockMatrix yy = random_block(alg, rng);
  CHECK(std::abs(evaluate(tx, yy) - weighted(x.adjoint() * yy * x)) < 1e-11);

  // round trip
  for (int i = 0; i < 20; ++i) {
    const BlockAlgebra a({2, 3});
    const Trace t(a, {0.5 + i * 0.1, 3.0});
    const PositiveForm f = random_form(a, rng);
    const PositiveForm back = form_from_trace_vector(t, sqrt_density_rep(f, t));
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(max_abs_diff(back.density(k).matrix(), f.density(k).matrix()) < 1e-10);
  }
}

TEST_CASE("trace invariance and tau^z = tau^{|z*|}") {
  Rng rng(23);
  const BlockAlgebra alg({2, 3});
  const Trace tau(alg, {0.7, 1.9});
  for (int i = 0; i < 50; ++i) {
    const BlockMatrix x = random_block(alg, rng);
    const BlockMatrix y = random_block(alg, rng);
    CHECK(std::abs(tau(x * y) - tau(y * x)) < 1e-11);

    std::vector<Matrix> abs_adj;
    for (const Matrix& m : x.blocks()) abs_adj.push_back(modulus(m.adjoint()).matrix());
    const PositiveForm a = form_from_trace_vector(tau, x);
    const PositiveForm b = form_from_trace_vector(tau, BlockMatrix(alg, abs_adj));
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(max_abs_diff(a.density(k).matrix(), b.density(k).matrix()) < 1e-10);
  }
}

TEST_CASE("centralizer predicate") {
  Rng rng(29);
  const BlockAlgebra m2({2});
  const PositiveForm trace_form = PositiveForm::single(HermitianMatrix::identity(2));
  CHECK(is_tracial(trace_form));
  for (int i = 0; i < 5; ++i) {
    CHECK(in_centralizer(trace_form, random_block(m2, rng), 20, 1e-12, 1));
  }

  const PositiveForm mu = PositiveForm::single(hdiag({0.9, 0.1}));
  CHECK_FALSE(is_tracial(mu));
  CHECK(in_centralizer(mu, BlockMatrix::single(diag({2.5, -1})), 20, 1e-12, 2));

  Matrix e12 = Matrix::Zero(2, 2);
  e12(0, 1) = 1.0;
  const CentralizerCheck c = centralizer_check(mu, BlockMatrix::single(e12), 50, 1e-12, 3);
  CHECK_FALSE(c.member);
  CHECK(c.commutator_norm == doctest::Approx(0.8));
  CHECK(c.sampled_defect > 1e-3);
}

TEST_CASE("orthogonal") {
  const PositiveForm a = PositiveForm::single(hdiag({1, 0}));
  const PositiveForm b = PositiveForm::single(hdiag({0, 1}));
  CHECK(orthogonal(a, b));
  CHECK_FALSE(orthogonal(a, a));

  const double theta = 0.1;
  Vector u(2), v(2);
  u << 1.0, 0.0;
  v << std::cos(theta), std::sin(theta);
  const PositiveForm fu = PositiveForm::single(HermitianMatrix(u * u.adjoint()));
  const PositiveForm fv = PositiveForm::single(HermitianMatrix::symmetrize(v * v.adjoint()));
  CHECK_FALSE(orthogonal(fu, fv));
  CHECK(operator_norm(fu.support().block(0).matrix() * fv.support().block(0).matrix()) ==
        doctest::Approx(std::cos(theta)));
}

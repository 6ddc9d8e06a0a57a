#include <chrono>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "doctest.h"
#include "parfid/channels.hpp"
#include "parfid/fidelity.hpp"
#include "parfid/forms.hpp"
#include "parfid/generators.hpp"
#include "parfid/random.hpp"
#include "test_util.hpp"

using namespace parfid;
using namespace parfid::testing;

namespace {

// Matrix units |i><j| of M_n; a basis for the action oracle.
std::vector<Matrix> matrix_units(int n) {
  std::vector<Matrix> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = 1.0;
      out.push_back(e);
    }
  }
  return out;
}

double fid(const HermitianMatrix& a, const HermitianMatrix& b) {
  return fidelity_spectral(PositiveForm::single(a), PositiveForm::single(b)).value;
}

}  // namespace

TEST_CASE("apply: identity, depolarizing and random channels") {
  Rng rng(70);
  const HermitianMatrix w = random_density(3, 3, rng);
  CHECK(max_abs_diff(parfid::apply(identity_channel(3), w).matrix(), w.matrix()) < 1e-15);
  const HermitianMatrix dep = parfid::apply(depolarizing_channel(3, 4), w);
  CHECK(max_abs_diff(dep.matrix(), Matrix::Identity(4, 4) / 4.0) < 1e-15);

  const KrausSet phi = random_channel(4, 3, 71);
  CHECK(phi.size() == 4);
  for (int i = 0; i < 50; ++i) {
    const HermitianMatrix x = random_density(4, 1 + i % 4, rng);
    const HermitianMatrix y = parfid::apply(phi, x);
    CHECK(std::abs(y.matrix().trace().real() - 1.0) < 1e-10);
    CHECK(min_eigenvalue(y) >= -1e-11);
  }
  CHECK_THROWS_AS(parfid::apply(phi, random_density(3, 3, rng)), ShapeError);
  CHECK_THROWS_AS(KrausSet(2, 2, {Matrix::Identity(2, 2) * 0.9}), ValidationError);
  CHECK_THROWS_AS(KrausSet(2, 2, {Matrix::Identity(3, 2)}), ShapeError);
}

TEST_CASE("Choi and Kraus round trips") {
  SUBCASE("identity channel") {
    const ChoiMatrix j = choi_from_kraus(identity_channel(3));
    Vector omega = Vector::Zero(9);
    for (int i = 0; i < 3; ++i) omega(i * 3 + i) = 1.0;
    CHECK(max_abs_diff(j.matrix().matrix(), omega * omega.adjoint()) < 1e-15);
    CHECK(max_abs_diff(partial_trace_second(j.matrix().matrix(), 3, 3), Matrix::Identity(3, 3)) <
          1e-15);
    CHECK(kraus_from_choi(j).size() == 1);
  }
  SUBCASE("random channel (seed 73): action on matrix units") {
    for (auto [n, m] : {std::pair{2, 3}, {3, 2}, {3, 3}, {4, 2}}) {
      const KrausSet phi = random_channel(n, m, 73);
      const ChoiMatrix j = choi_from_kraus(phi);
      const KrausSet back = kraus_from_choi(j);
      for (const Matrix& e : matrix_units(n)) {
        const Matrix want = parfid::apply(phi, e);
        CHECK(max_abs_diff(parfid::apply(j, e), want) < 1e-9);
        CHECK(max_abs_diff(parfid::apply(back, e), want) < 1e-9);
      }
      // Choi block (i, j) is Phi(|i><j|).
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          Matrix e = Matrix::Zero(n, n);
          e(a, b) = 1.0;
          CHECK(max_abs_diff(j.matrix().matrix().block(a * m, b * m, m, m), parfid::apply(phi, e)) <
                1e-12);
        }
      }
    }
  }
  SUBCASE("rank-one Choi gives a single Kraus operator") {
    Rng rng(74);
    const Matrix u = haar_unitary(3, rng);
    const KrausSet k = kraus_from_choi(choi_from_kraus(unitary_channel(u)));
    REQUIRE(k.size() == 1);
    const Complex phase = k.ops()[0](0, 0) / u(0, 0);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK(max_abs_diff(k.ops()[0], phase * u) < 1e-12);
  }
  SUBCASE("invalid Choi matrices") {
    CHECK_THROWS_AS(ChoiMatrix(2, 2, HermitianMatrix::identity(4)), ValidationError);
    CHECK_THROWS_AS(ChoiMatrix(2, 2, HermitianMatrix(diag({1, -0.1, 0.1, 1}))), ValidationError);
    CHECK_THROWS_AS(ChoiMatrix(2, 2, HermitianMatrix::identity(3)), ShapeError);
  }
}

TEST_CASE("partial traces") {
  Rng rng(75);
  const Matrix a = ginibre(2, 2, rng), b = ginibre(3, 3, rng);
  const Matrix x = Eigen::kroneckerProduct(a, b).eval();
  CHECK(max_abs_diff(partial_trace_second(x, 2, 3), a * b.trace()) < 1e-13);
  CHECK(max_abs_diff(partial_trace_first(x, 2, 3), b * a.trace()) < 1e-13);
}

TEST_CASE("monotonicity") {
  Rng rng(76);
  SUBCASE("unitary channel: equality") {
    const KrausSet u = unitary_channel(haar_unitary(3, rng));
    for (int i = 0; i < 50; ++i) {
      const HermitianMatrix w = random_density(3, 1 + i % 3, rng);
      const HermitianMatrix r = random_density(3, 1 + (i / 3) % 3, rng);
      CHECK(std::abs(fid(parfid::apply(u, w), parfid::apply(u, r)) - fid(w, r)) < 1e-10);
    }
  }
  SUBCASE("replacement channel: outputs coincide") {
    const HermitianMatrix sigma = random_density(2, 2, rng);
    const KrausSet phi = replacement_channel(3, sigma);
    for (int i = 0; i < 20; ++i) {
      const HermitianMatrix w = random_density(3, 1 + i % 3, rng);
      const HermitianMatrix r = random_density(3, 3, rng);
      CHECK(max_abs_diff(parfid::apply(phi, w).matrix(), sigma.matrix()) < 1e-12);
      CHECK(fid(parfid::apply(phi, w), parfid::apply(phi, r)) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("200 random channels x 50 pairs, dim 3 (seed 79)") {
    const MonotonicityReport rep = monotonicity_sweep(200, 50, 3, 79);
    CHECK(rep.checks == 10000);
    CHECK(rep.violations.empty());
    CHECK(rep.worst_slack >= -1e-9);
    CHECK(rep.profile_entries == 2 * 10000);
    MESSAGE("profile decreases: " << rep.profile_decreases << " of " << rep.profile_entries);
  }
}

TEST_CASE("feasibility: identity instance") {
  Rng rng(77);
  for (int n : {2, 3}) {
    const HermitianMatrix w = random_density(n, n, rng);
    const HermitianMatrix r = random_density(n, n, rng);
    const FeasibilityVerdict v = feasibility(w, r, w, r);
    INFO("n=" << n << " " << std::string(status_name(v.status)) << " it " << v.iterations
              << " gap " << v.gap << " affine " << v.affine_residual);
    REQUIRE(v.status == FeasibilityStatus::feasible);
    REQUIRE(v.choi.has_value());
    CHECK(max_abs_diff(parfid::apply(*v.choi, w).matrix(), w.matrix()) < 1e-7);
    CHECK(max_abs_diff(parfid::apply(*v.choi, r).matrix(), r.matrix()) < 1e-7);
    CHECK(v.affine_residual <= 1e-7);
  }
}

TEST_CASE("feasibility: rejects bad input") {
  const HermitianMatrix w = hdiag({0.5, 0.5});
  CHECK_THROWS_AS(feasibility(w, hdiag({0.5, 0.6}), w, w), PreconditionError);
  CHECK_THROWS_AS(feasibility(w, hdiag({1.5, -0.5}), w, w), NotPsdError);
  FeasibilityConfig cfg;
  cfg.feas_tol = 0.0;
  CHECK_THROWS_AS(feasibility(w, w, w, w, cfg), PreconditionError);
}

TEST_CASE("feasibility: pure-pair overlap grid") {
  const std::vector<double> overlaps = {0.0, 0.25, 0.5, 0.75, 1.0};
  int cells = 0;
  int agree = 0;
  for (int n : {2, 3}) {
    for (int m : {2, 3}) {
      for (double t : overlaps) {
        for (double t2 : overlaps) {
          const auto [psi, phi] = overlap_pair(n, t);
          const auto [psi2, phi2] = overlap_pair(m, t2);
          const auto start = std::chrono::steady_clock::now();
          const FeasibilityVerdict v =
              feasibility(pure_density(psi), pure_density(phi), pure_density(psi2), pure_density(phi2));
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          const FeasibilityStatus want =
              t2 >= t ? FeasibilityStatus::feasible : FeasibilityStatus::infeasible;
          ++cells;
          if (v.status == want) ++agree;
          CHECK(v.iterations <= 20000);
          INFO("n=" << n << " m=" << m << " t=" << t << " t'=" << t2 << " got "
                    << std::string(status_name(v.status)) << " after " << v.iterations << " iterations ("
                    << secs << " s), gap " << v.gap);
          CHECK(v.status == want);
          if (v.choi) {
            CHECK(max_abs_diff(parfid::apply(*v.choi, pure_density(psi)).matrix(),
                               pure_density(psi2).matrix()) < 1e-6);
            CHECK(max_abs_diff(parfid::apply(*v.choi, pure_density(phi)).matrix(),
                               pure_density(phi2).matrix()) < 1e-6);
          }
        }
      }
    }
  }
  CHECK(cells == 100);
  CHECK(agree == 100);
}

TEST_CASE("kanal counterexample: worked example") {
  const KanalCounterexample ce = kanal_counterexample(hdiag({0.5, 0.5}), hdiag({0.7, 0.2, 0.1}));
  CHECK(ce.lambda == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ce.beta == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(ce.k == 2);
  CHECK(ce.fidelity_in == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(ce.fidelity_out == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(std::abs(ce.fidelity_in - ce.fidelity_out) < 1e-10);
  CHECK(ce.input_min_eigenvalue >= -1e-10);
  // On span{e_1, e_3}: [[0.7 - 0.5 b, -0.5 sqrt(b(1-b))], [., 0.1 - 0.5 (1-b)]].
  const double b = 2.0 / 3.0;
  Eigen::Matrix2d blk;
  blk << 0.7 - 0.5 * b, -0.5 * std::sqrt(b * (1 - b)), -0.5 * std::sqrt(b * (1 - b)),
      0.1 - 0.5 * (1 - b);
  const double want = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(blk).eigenvalues()(0);
  CHECK(want < 0.0);
  CHECK(ce.certificate == doctest::Approx(std::min(want, 0.2)).epsilon(1e-12));
  const FeasibilityVerdict v =
      feasibility(hdiag({0.5, 0.5}), pure_density(ce.psi), hdiag({0.7, 0.2, 0.1}), pure_density(ce.phi));
  CHECK(v.status != FeasibilityStatus::feasible);
}

TEST_CASE("kanal counterexample: premise violations") {
  CHECK_THROWS_AS(kanal_counterexample(hdiag({0.5, 0.5}), hdiag({0.5, 0.5})), PreconditionError);
  CHECK_THROWS_AS(kanal_counterexample(hdiag({1.0, 0.0}), hdiag({0.0, 1.0, 0.0})),
                  PreconditionError);
  try {
    kanal_counterexample(hdiag({0.5, 0.5}), hdiag({0.5, 0.5}));
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("spec(omega)") != std::string::npos);
  }
}

TEST_CASE("kanal counterexample: random instances") {
  Rng rng(81);
  int done = 0;
  int attempts = 0;
  while (done < 50 && attempts < 1000) {
    ++attempts;
    const int n = 2 + static_cast<int>(rng() % 3);
    const int m = 2 + static_cast<int>(rng() % 3);
    const HermitianMatrix w = random_density(n, n, rng);
    const HermitianMatrix w2 = random_density(m, m, rng);
    KanalCounterexample ce;
    try {
      ce = kanal_counterexample(w, w2);
    } catch (const PreconditionError&) {
      continue;
    }
    ++done;
    CHECK(std::abs(ce.fidelity_in - ce.fidelity_out) < 1e-10);
    CHECK(std::abs(ce.fidelity_in - std::sqrt(ce.lambda)) < 1e-10);
    CHECK(ce.input_min_eigenvalue >= -1e-10);
    INFO("n=" << n << " m=" << m << " certificate " << ce.certificate);
    CHECK(ce.certificate < -1e-6);
    const FeasibilityVerdict v = feasibility(w, pure_density(ce.psi), w2, pure_density(ce.phi));
    CHECK(v.status != FeasibilityStatus::feasible);
  }
  CHECK(done == 50);
}

TEST_CASE("conditional expectation") {
  Rng rng(82);
  const HermitianMatrix sigma = random_density(3, 3, rng);
  const Matrix a = ginibre(2, 2, rng), bm = ginibre(3, 3, rng);
  const Matrix a1 = Eigen::kroneckerProduct(a, Matrix::Identity(3, 3)).eval();
  CHECK(max_abs_diff(conditional_expectation(a1, 2, 3, sigma), a1) < 1e-13);
  const Matrix one_b = Eigen::kroneckerProduct(Matrix::Identity(2, 2), bm).eval();
  const Complex tsb = (sigma.matrix() * bm).trace();
  CHECK(max_abs_diff(conditional_expectation(one_b, 2, 3, sigma), tsb * Matrix::Identity(6, 6)) <
        1e-13);
  CHECK_THROWS_AS(conditional_expectation(a1, 3, 2, sigma), ShapeError);

  SUBCASE("random instances (seed 83)") {
    Rng r(83);
    for (int i = 0; i < 50; ++i) {
      const int n = 2 + i % 2, m = 2 + (i / 2) % 2;
      const HermitianMatrix s = random_density(m, 1 + i % m, r);
      const HermitianMatrix w = random_density(n * m, n * m, r);
      const HermitianMatrix rho = random_density(n * m, 1 + i % (n * m), r);
      // Density of omega o E from its values on matrix units.
      Matrix d(n * m, n * m);
      for (int p = 0; p < n * m; ++p) {
        for (int q = 0; q < n * m; ++q) {
          Matrix e = Matrix::Zero(n * m, n * m);
          e(p, q) = 1.0;
          d(q, p) = (w.matrix() * conditional_expectation(e, n, m, s)).trace();
        }
      }
      const HermitianMatrix we = compose_with_conditional_expectation(w, n, m, s);
      CHECK(max_abs_diff(we.matrix(), d) < 1e-12);
      const HermitianMatrix re = compose_with_conditional_expectation(rho, n, m, s);
      const HermitianMatrix wr = HermitianMatrix::symmetrize(partial_trace_second(w.matrix(), n, m));
      const HermitianMatrix rr =
          HermitianMatrix::symmetrize(partial_trace_second(rho.matrix(), n, m));
      CHECK(std::abs(fid(we, re) - fid(wr, rr)) < 1e-9);
    }
  }
}

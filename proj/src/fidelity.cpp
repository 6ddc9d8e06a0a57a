#include "parfid/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parfid/random.hpp"

namespace parfid {

namespace {

constexpr double kIdentityTol = 1e-10;

double psd_clamp(const HermitianMatrix& w) {
  return kPsdClamp * std::max(1.0, w.max_abs_entry());
}

// (f(a) - f(b)) / (a - b) for f = exp(sign * x), with f'(a) on the diagonal.
Matrix exp_divided_differences(const RealVector& lambda, double sign) {
  const Eigen::Index n = lambda.size();
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = sign * lambda(i);
      const double b = sign * lambda(j);
      const double d = a - b;
      double dd;
      if (std::abs(d) < 1e-8) {
        dd = std::exp(0.5 * (a + b)) * (1.0 + d * d / 24.0);
      } else {
        dd = std::exp(b) * std::expm1(d) / d;
      }
      g(i, j) = sign * dd;
    }
  }
  return g;
}

double frobenius_inner(const BlockMatrix& x, const BlockMatrix& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    s += (x.block(k).adjoint() * y.block(k)).trace().real();
  }
  return s;
}

BlockMatrix axpy(const BlockMatrix& x, double t, const BlockMatrix& d) {
  std::vector<Matrix> b;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    b.push_back(HermitianMatrix::symmetrize(x.block(k) + t * d.block(k)).matrix());
  }
  return BlockMatrix(x.algebra(), std::move(b));
}

double spread_condition(const BlockMatrix& h) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Matrix& m : h.blocks()) {
    const RealVector l = eigh(HermitianMatrix::symmetrize(m)).eigenvalues;
    lo = std::min(lo, l(0));
    hi = std::max(hi, l(l.size() - 1));
  }
  return std::exp(hi - lo);
}

struct DescentRun {
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  BlockMatrix h;
  std::vector<double> history;
};

DescentRun descend(const PositiveForm& omega, const PositiveForm& rho, BlockMatrix h,
                   const OptimizerConfig& cfg) {
  DescentRun run;
  double f = variational_objective(omega, rho, h);
  BlockMatrix g = variational_gradient(omega, rho, h);
  double step = cfg.initial_step;
  int flat_steps = 0;
  run.history.push_back(f);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double gg = frobenius_inner(g, g);
    run.iterations = it;
    if (std::sqrt(gg) <= cfg.grad_tolerance) {
      run.converged = true;
      break;
    }
    double t = step;
    double f_new = f;
    BlockMatrix h_new;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      h_new = axpy(h, -t, g);
      f_new = variational_objective(omega, rho, h_new);
      if (std::isfinite(f_new) && f_new <= f - cfg.armijo * t * gg) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack_factor;
    }
    if (!accepted) {
      // No sufficient decrease at any step length: floating-point floor.
      run.converged = true;
      break;
    }
    const BlockMatrix g_new = variational_gradient(omega, rho, h_new);
    const BlockMatrix s = h_new - h;
    const BlockMatrix y = g_new - g;
    const double sy = frobenius_inner(s, y);
    step = sy > 0.0 ? std::clamp(frobenius_inner(s, s) / sy, 1e-10, 1e10) : cfg.initial_step;
    const double decrease = f - f_new;
    h = h_new;
    g = g_new;
    f = f_new;
    run.history.push_back(f);
    flat_steps = decrease <= cfg.tolerance * std::max(1.0, std::abs(f)) ? flat_steps + 1 : 0;
    if (flat_steps >= 3) {
      run.iterations = it + 1;
      run.converged = true;
      break;
    }
    run.iterations = it + 1;
  }
  run.value = f;
  run.grad_norm = std::sqrt(frobenius_inner(g, g));
  run.h = std::move(h);
  return run;
}

}  // namespace

const char* route_name(Route route) {
  switch (route) {
    case Route::spectral:
      return "spectral";
    case Route::variational:
      return "variational";
    case Route::sampling:
      return "sampling";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (max_iters < 1 || !(initial_step > 0.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0) ||
      !(armijo > 0.0 && armijo < 1.0) || max_backtracks < 1 || !(tolerance >= 1e-16) ||
      !(grad_tolerance > 0.0) || restarts < 0) {
    throw PreconditionError("OptimizerConfig: parameter out of range");
  }
}

double fidelity_of_densities(const HermitianMatrix& w, const HermitianMatrix& r) {
  const Matrix sw = sqrt_psd(w, psd_clamp(w)).matrix();
  const Matrix sr = sqrt_psd(r, psd_clamp(r)).matrix();
  return trace_norm(sw * sr);
}

FidelityReport fidelity_spectral(const PositiveForm& omega, const PositiveForm& rho) {
  require_same_algebra(omega.algebra(), rho.algebra(), "fidelity_spectral");
  FidelityReport rep;
  rep.route = Route::spectral;
  for (std::size_t k = 0; k < omega.algebra().num_blocks(); ++k) {
    rep.value += fidelity_of_densities(omega.density(k), rho.density(k));
  }
  rep.value = std::max(rep.value, 0.0);
  return rep;
}

PositiveForm pure_state(const Vector& psi) {
  return PositiveForm::single(HermitianMatrix::symmetrize(psi * psi.adjoint()));
}

double fidelity_pure_vs_mixed(const PositiveForm& omega, const Vector& psi) {
  if (omega.algebra().num_blocks() != 1) {
    throw PreconditionError("fidelity_pure_vs_mixed: a single-block algebra is required");
  }
  if (psi.size() != omega.algebra().dim(0)) {
    throw ShapeError("fidelity_pure_vs_mixed: vector length does not match the algebra");
  }
  if (std::abs(psi.norm() - 1.0) > 1e-12) {
    throw PreconditionError("fidelity_pure_vs_mixed: psi is not a unit vector");
  }
  const double q = (psi.adjoint() * omega.density(0).matrix() * psi)(0, 0).real();
  return std::sqrt(std::max(q, 0.0));
}

double bures_distance(const PositiveForm& omega, const PositiveForm& rho) {
  if (std::abs(omega.mass() - 1.0) > 1e-10 || std::abs(rho.mass() - 1.0) > 1e-10) {
    throw PreconditionError("bures_distance: both forms must be states");
  }
  const double f = fidelity_spectral(omega, rho).value;
  return std::sqrt(2.0 * std::max(0.0, 1.0 - f));
}

double variational_objective(const PositiveForm& omega, const PositiveForm& rho,
                             const BlockMatrix& h) {
  require_same_algebra(omega.algebra(), h.algebra(), "variational_objective");
  require_same_algebra(rho.algebra(), h.algebra(), "variational_objective");
  double f = 0.0;
  for (std::size_t k = 0; k < h.num_blocks(); ++k) {
    const SpectralDecomposition sd = eigh(HermitianMatrix::symmetrize(h.block(k)));
    const Matrix& u = sd.eigenvectors;
    const Matrix wh = u.adjoint() * omega.density(k).matrix() * u;
    const Matrix rh = u.adjoint() * rho.density(k).matrix() * u;
    for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
      const double l = sd.eigenvalues(i);
      f += wh(i, i).real() * std::exp(l) + rh(i, i).real() * std::exp(-l);
    }
  }
  return 0.5 * f;
}

BlockMatrix variational_gradient(const PositiveForm& omega, const PositiveForm& rho,
                                 const BlockMatrix& h) {
  require_same_algebra(omega.algebra(), h.algebra(), "variational_gradient");
  require_same_algebra(rho.algebra(), h.algebra(), "variational_gradient");
  std::vector<Matrix> g;
  for (std::size_t k = 0; k < h.num_blocks(); ++k) {
    const SpectralDecomposition sd = eigh(HermitianMatrix::symmetrize(h.block(k)));
    const Matrix& u = sd.eigenvectors;
    const Matrix wh = u.adjoint() * omega.density(k).matrix() * u;
    const Matrix rh = u.adjoint() * rho.density(k).matrix() * u;
    const Matrix inner = exp_divided_differences(sd.eigenvalues, 1.0).cwiseProduct(wh) +
                         exp_divided_differences(sd.eigenvalues, -1.0).cwiseProduct(rh);
    g.push_back(HermitianMatrix::symmetrize(0.5 * u * inner * u.adjoint()).matrix());
  }
  return BlockMatrix(h.algebra(), std::move(g));
}

FidelityReport fidelity_variational(const PositiveForm& omega, const PositiveForm& rho,
                                    const OptimizerConfig& cfg) {
  require_same_algebra(omega.algebra(), rho.algebra(), "fidelity_variational");
  cfg.validate();
  const BlockAlgebra& alg = omega.algebra();
  FidelityReport rep;
  rep.route = Route::variational;
  rep.value = std::numeric_limits<double>::infinity();
  double best_so_far = rep.value;
  for (int r = 0; r <= cfg.restarts; ++r) {
    BlockMatrix h0 = BlockMatrix::zero(alg);
    if (r > 0) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
        h0.block(k) = 0.5 * random_hermitian(alg.dim(k), rng).matrix();
      }
    }
    DescentRun run = descend(omega, rho, std::move(h0), cfg);
    for (double v : run.history) {
      best_so_far = std::min(best_so_far, v);
      rep.bound_history.push_back(best_so_far);
    }
    // Ties keep the earlier restart.
    if (run.value < rep.value) {
      rep.value = run.value;
      rep.iterations = run.iterations;
      rep.residual = run.grad_norm;
      rep.converged = run.converged;
      rep.conditioning = spread_condition(run.h);
    }
  }
  rep.value = std::max(rep.value, 0.0);
  return rep;
}

std::pair<double, double> check_star_invariance(const PositiveForm& omega,
                                                const PositiveForm& rho, const BlockMatrix& a,
                                                const BlockMatrix& b, const BlockMatrix& c,
                                                const BlockMatrix& d) {
  const BlockMatrix ab = a.adjoint() * b;
  if ((ab - c.adjoint() * d).norm() > kIdentityTol * std::max(1.0, ab.norm())) {
    throw PreconditionError("check_star_invariance: a*b differs from c*d");
  }
  return {fidelity_spectral(inner_derived(omega, a), inner_derived(rho, b)).value,
          fidelity_spectral(inner_derived(omega, c), inner_derived(rho, d)).value};
}

std::optional<SpecialCaseValue> fidelity_special_cases(const PositiveForm& mu,
                                                       const BlockMatrix& a,
                                                       const BlockMatrix& b, double tol) {
  require_same_algebra(mu.algebra(), a.algebra(), "fidelity_special_cases");
  require_same_algebra(mu.algebra(), b.algebra(), "fidelity_special_cases");
  const BlockMatrix ab = a.adjoint() * b;
  const double scale = std::max(1.0, ab.norm());

  bool positive = true;
  for (const Matrix& m : ab.blocks()) {
    if (operator_norm(m - m.adjoint()) > tol * scale ||
        min_eigenvalue(HermitianMatrix::symmetrize(m)) < -tol * scale) {
      positive = false;
      break;
    }
  }
  if (positive) {
    return SpecialCaseValue{std::max(0.0, evaluate(mu, ab).real()), SpecialCase::positive_product};
  }

  const auto mu_of_modulus = [&] {
    std::vector<Matrix> mod;
    for (const Matrix& m : ab.blocks()) mod.push_back(modulus(m).matrix());
    return std::max(0.0, evaluate(mu, BlockMatrix(ab.algebra(), std::move(mod))).real());
  };
  bool commutes = true;
  for (std::size_t k = 0; k < ab.num_blocks(); ++k) {
    const Matrix& w = mu.density(k).matrix();
    if (operator_norm(commutator(ab.block(k), w)) > tol * scale * std::max(1.0, operator_norm(w))) {
      commutes = false;
      break;
    }
  }
  if (commutes) return SpecialCaseValue{mu_of_modulus(), SpecialCase::centralizer};
  if (is_tracial(mu, tol)) return SpecialCaseValue{mu_of_modulus(), SpecialCase::tracial};
  return std::nullopt;
}

std::pair<double, double> check_subadditivity(
    const PositiveForm& omega, const PositiveForm& rho, const BlockMatrix& a,
    const BlockMatrix& b, const std::vector<std::pair<BlockMatrix, BlockMatrix>>& terms) {
  if (terms.empty()) throw PreconditionError("check_subadditivity: empty decomposition");
  const BlockMatrix ab = a.adjoint() * b;
  BlockMatrix sum = BlockMatrix::zero(ab.algebra());
  double rhs = 0.0;
  for (const auto& [aj, bj] : terms) {
    sum = sum + aj.adjoint() * bj;
    rhs += fidelity_spectral(inner_derived(omega, aj), inner_derived(rho, bj)).value;
  }
  if ((ab - sum).norm() > kIdentityTol * std::max(1.0, ab.norm())) {
    throw PreconditionError("check_subadditivity: a*b differs from the sum of a_j* b_j");
  }
  const double lhs = fidelity_spectral(inner_derived(omega, a), inner_derived(rho, b)).value;
  return {lhs, rhs};
}

std::pair<double, double> check_hereditarity(const PositiveForm& omega,
                                             const PositiveForm& rho, const BlockProjection& q) {
  require_same_algebra(omega.algebra(), q.algebra(), "check_hereditarity");
  require_same_algebra(rho.algebra(), q.algebra(), "check_hereditarity");
  double corner = 0.0;
  for (std::size_t k = 0; k < q.algebra().num_blocks(); ++k) {
    const Matrix v = q.block(k).range_basis();
    if (v.cols() == 0) continue;
    corner += fidelity_of_densities(
        HermitianMatrix::symmetrize(v.adjoint() * omega.density(k).matrix() * v),
        HermitianMatrix::symmetrize(v.adjoint() * rho.density(k).matrix() * v));
  }
  const BlockMatrix qm = q.to_block_matrix();
  const double derived =
      fidelity_spectral(inner_derived(omega, qm), inner_derived(rho, qm)).value;
  return {corner, derived};
}

}  // namespace parfid

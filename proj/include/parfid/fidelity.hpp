#pragma once

// Fidelity F(omega, rho) of positive linear forms: closed form, variational
// route over a = exp(H), Bures distance and closed forms for special cases.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "parfid/forms.hpp"

namespace parfid {

enum class Route { spectral, variational, sampling };

const char* route_name(Route route);

struct FidelityReport {
  double value = 0.0;
  Route route = Route::spectral;
  int iterations = 0;
  double residual = 0.0;      // final gradient norm (variational) or 0
  double conditioning = 1.0;  // condition number of the optimizing element, if any
  bool converged = true;
  // Certified upper bounds, one per accepted iterate, nonincreasing.
  std::vector<double> bound_history;
};

struct OptimizerConfig {
  int max_iters = 5000;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 60;
  double tolerance = 1e-13;       // relative objective decrease
  double grad_tolerance = 1e-10;  // Frobenius norm of the gradient
  int restarts = 2;
  std::uint64_t seed = 0;

  /// Throws PreconditionError when a field is out of range.
  void validate() const;
};

/// tr| sqrt(w) sqrt(r) | for PSD densities of one block.
double fidelity_of_densities(const HermitianMatrix& w, const HermitianMatrix& r);

/// sum_k tr| sqrt(w_k) sqrt(r_k) |.
FidelityReport fidelity_spectral(const PositiveForm& omega, const PositiveForm& rho);

/// sqrt(psi* w psi) for a unit vector psi on a single-block algebra.
double fidelity_pure_vs_mixed(const PositiveForm& omega, const Vector& psi);

/// Density of the vector state psi psi*.
PositiveForm pure_state(const Vector& psi);

/// sqrt(2 (1 - F)) for states.
double bures_distance(const PositiveForm& omega, const PositiveForm& rho);

/// f(H) = (omega(e^H) + rho(e^{-H})) / 2 for blockwise Hermitian H.
double variational_objective(const PositiveForm& omega, const PositiveForm& rho,
                             const BlockMatrix& h);

/// Gradient of variational_objective with respect to the real inner product
/// Re tr(X* Y), computed with divided differences of exp.
BlockMatrix variational_gradient(const PositiveForm& omega, const PositiveForm& rho,
                                 const BlockMatrix& h);

/// Gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking from H = 0 and cfg.restarts random starts. Every reported
/// value is an attained objective, hence an upper bound on F. Hitting the
/// iteration cap returns the best bound with converged = false.
FidelityReport fidelity_variational(const PositiveForm& omega, const PositiveForm& rho,
                                    const OptimizerConfig& cfg = {});

/// (F(omega^a, rho^b), F(omega^c, rho^d)); requires a*b = c*d to 1e-10.
std::pair<double, double> check_star_invariance(const PositiveForm& omega,
                                                const PositiveForm& rho, const BlockMatrix& a,
                                                const BlockMatrix& b, const BlockMatrix& c,
                                                const BlockMatrix& d);

enum class SpecialCase { positive_product, centralizer, tracial };

struct SpecialCaseValue {
  double value = 0.0;
  SpecialCase hypothesis = SpecialCase::positive_product;
};

/// Closed form of F(mu^a, mu^b): mu(a*b) when a*b >= 0, else mu(|a*b|) when
/// a*b lies in the centralizer of mu or mu is tracial. Returns nullopt when
/// no hypothesis applies.
std::optional<SpecialCaseValue> fidelity_special_cases(const PositiveForm& mu,
                                                       const BlockMatrix& a,
                                                       const BlockMatrix& b,
                                                       double tol = 1e-10);

/// (F(omega^a, rho^b), sum_j F(omega^{a_j}, rho^{b_j})); requires
/// a*b = sum_j a_j* b_j to 1e-10.
std::pair<double, double> check_subadditivity(
    const PositiveForm& omega, const PositiveForm& rho, const BlockMatrix& a,
    const BlockMatrix& b, const std::vector<std::pair<BlockMatrix, BlockMatrix>>& terms);

/// (F of the forms restricted to the corner qMq, F(omega^q, rho^q)).
std::pair<double, double> check_hereditarity(const PositiveForm& omega,
                                             const PositiveForm& rho, const BlockProjection& q);

}  // namespace parfid

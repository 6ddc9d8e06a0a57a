#pragma once

// Partial fidelity F(omega, rho | r) for an equivalence class r of
// orthoprojections, encoded as a per-block rank vector. Three routes: the
// closed form (sum of the r_k smallest eigenvalues of |x_k* y_k|, weighted by
// the trace), a random search over projections, and a derivative-free
// search over minimal pairs {p, q}.

#include <cstdint>
#include <optional>
#include <vector>

#include "parfid/fidelity.hpp"
#include "parfid/pairs.hpp"

namespace parfid {

struct PartialFidelitySpectral {
  double value = 0.0;
  BlockProjection q0;                // minimizing projection, commutes with |x*y|
  double commutator_residual = 0.0;  // max_k ||[q0_k, |x_k* y_k|]||
  std::vector<RealVector> eigenvalues;  // per block, ascending, of |x_k* y_k|
};

/// Throws PreconditionError if some r_k is outside [0, n_k].
PartialFidelitySpectral partial_fidelity_spectral(const PositiveForm& omega,
                                                  const PositiveForm& rho, const Trace& tau,
                                                  const BlockRanks& r);

PartialFidelitySpectral partial_fidelity_spectral(const PositiveForm& omega,
                                                  const PositiveForm& rho, const Trace& tau,
                                                  const BlockProjection& r);

/// |x_k* y_k| per block with x = sqrt_density_rep(omega, tau), y likewise.
BlockMatrix modulus_of_representatives(const PositiveForm& omega, const PositiveForm& rho,
                                       const Trace& tau);

struct SamplingConfig {
  int n_samples = 10000;
  std::uint64_t seed = 0;
  // Fraction of the samples drawn as random rotations of the incumbent
  // projection instead of fresh Haar draws; 0 gives pure Haar sampling.
  double local_fraction = 0.5;
};

struct SamplingResult {
  double value = 0.0;
  double haar_value = 0.0;  // best value among the Haar draws alone
  int samples = 0;
};

/// Upper bound on the partial fidelity as the minimum of sum_k c_k tr(Z_k q_k)
/// over random projections q_k of rank r_k, Z = |x*y|. The eigenvectors of Z
/// are never used. Blocks are searched independently; the objective is
/// separable, so the minimum over the product of per-block samples is attained
/// by one of the sampled projections.
SamplingResult partial_fidelity_sampling(const PositiveForm& omega, const PositiveForm& rho,
                                         const Trace& tau, const BlockRanks& r,
                                         const SamplingConfig& cfg = {});

/// F(omega^{|qp|^{-2}}, rho^q) for a minimal pair; throws ValidationError if
/// {p, q} is not minimal.
double pafi_objective(const PositiveForm& omega, const PositiveForm& rho,
                      const BlockProjection& p, const BlockProjection& q);

struct PairSearchConfig {
  int max_evals = 40000;  // objective evaluations per block and start
  int restarts = 2;      // random starts beyond the first
  double initial_step = 0.5;
  double min_step = 1e-9;
  double expand = 1.6;
  double shrink = 0.55;
  double gap_floor = kPairGapFloor;
  // Steps are accepted on sum_i sqrt(sigma_i^2 + eps^2) over the singular
  // values of the inner product; eps starts at smoothing_start times
  // sqrt(omega(1) rho(1)) and drops tenfold per stage, the last stage exact.
  int smoothing_stages = 5;
  double smoothing_start = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Random-direction descent over p = U1 P0 U1*, q = U2 P0 U2* with
/// U_i <- exp(i t K) U_i, blockwise since the objective is separable. The
/// reported value is attained by a minimal pair, hence an upper bound. residual holds the final step length; conditioning
/// holds || |qp|^{-2} || at the best pair.
FidelityReport partial_fidelity_variational(const PositiveForm& omega, const PositiveForm& rho,
                                            const BlockRanks& r,
                                            const PairSearchConfig& cfg = {});

/// Spectral partial fidelities of (omega^a, rho^b) and (omega^c, rho^d).
/// Requires invertible a, b, c, d and a*b = c*d to 1e-10.
std::pair<double, double> check_pafi_invariance(const PositiveForm& omega,
                                                const PositiveForm& rho, const Trace& tau,
                                                const BlockRanks& r, const BlockMatrix& a,
                                                const BlockMatrix& b, const BlockMatrix& c,
                                                const BlockMatrix& d);

struct SandwichBounds {
  double lower = 0.0;  // sum_k c_k (sum of r_k smallest eigenvalues of |a_k b_k|)
  double value = 0.0;  // partial_fidelity_spectral(tau^a, tau^b, r)
  double upper = 0.0;  // min over candidate p of tau(sqrt(p |ab|^2 p))
};

/// For PSD a, b: the chain lower <= value <= upper with candidates the
/// eigenprojections of |ab| of the right rank plus n_samples random ones.
SandwichBounds check_sandwich(const Trace& tau, const BlockMatrix& a, const BlockMatrix& b,
                              const BlockRanks& r, int n_samples, std::uint64_t seed);

/// Sum of single-block spectral values; weights default to 1.
double partial_fidelity_direct_sum(const std::vector<PositiveForm>& omegas,
                                   const std::vector<PositiveForm>& rhos, const BlockRanks& r,
                                   const std::vector<double>& weights = {});

struct ProfileEntry {
  BlockRanks ranks;
  double spectral = 0.0;
  std::optional<double> sampling;
  std::optional<double> variational;
  BlockProjection q0;
};

struct PartialFidelityProfile {
  BlockAlgebra algebra;
  // All rank vectors in lexicographic order; on a single factor entry k has
  // ranks {k}.
  std::vector<ProfileEntry> entries;

  const ProfileEntry& at(const BlockRanks& ranks) const;
};

struct ProfileOptions {
  bool sampling = false;
  bool variational = false;
  SamplingConfig sampling_cfg;
  PairSearchConfig variational_cfg;
};

PartialFidelityProfile profile(const PositiveForm& omega, const PositiveForm& rho,
                               const Trace& tau, const ProfileOptions& options = {});

}  // namespace parfid

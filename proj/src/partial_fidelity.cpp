#include "parfid/partial_fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "parfid/random.hpp"

namespace parfid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_ranks(const BlockAlgebra& alg, const BlockRanks& r, const char* what) {
  if (r.size() != alg.num_blocks()) {
    throw PreconditionError(std::string(what) + ": one rank per block is required");
  }
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] < 0 || r[k] > alg.dim(k)) {
      std::ostringstream os;
      os << what << ": rank " << r[k] << " outside [0, " << alg.dim(k) << "] in block " << k;
      throw PreconditionError(os.str());
    }
  }
}

// Orthonormal n x k columns spanning a Haar-random k-dimensional subspace.
Matrix haar_frame(Eigen::Index n, Eigen::Index k, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(n, k, rng));
  return qr.householderQ() * Matrix::Identity(n, k);
}

Matrix random_direction(Eigen::Index n, Rng& rng) {
  Matrix h = random_hermitian(n, rng).matrix();
  return h / h.norm();
}

Matrix rotate(const Matrix& frame, const Matrix& direction, double t) {
  return exp_i_hermitian(HermitianMatrix::symmetrize(t * direction)) * frame;
}

double frame_value(const Matrix& z, const Matrix& v) {
  return (v.adjoint() * z * v).trace().real();
}

// Objective of the pair search for one block, on frames V1, V2 with
// p = V1 V1*, q = V2 V2*. With C = V2* V1 the pair is minimal iff C is
// invertible, |qp|^{-2} = V1 (C* C)^{-1} V1*, and the fidelity reduces to
// tr| sqrt(A) C* sqrt(B) | with A = (C*C)^{-1} V1* w V1 (C*C)^{-1} and
// B = V2* r V2.
struct PairValue {
  double value = kInf;     // exact objective
  double smoothed = kInf;  // sum_i sqrt(sigma_i^2 + eps^2), drives the search
  double min_singular = 0.0;
};

PairValue pair_value(const Matrix& w, const Matrix& r, const Matrix& v1, const Matrix& v2,
                     double gap_floor, double eps) {
  PairValue out;
  const Matrix c = v2.adjoint() * v1;
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector& s = svd.singularValues();
  out.min_singular = s(s.size() - 1);
  if (out.min_singular < gap_floor) return out;
  const Matrix& vv = svd.matrixV();
  const Matrix inv2 =
      vv * s.array().square().inverse().matrix().cast<Complex>().asDiagonal() * vv.adjoint();
  const HermitianMatrix a = HermitianMatrix::symmetrize(inv2 * v1.adjoint() * w * v1 * inv2);
  const HermitianMatrix b = HermitianMatrix::symmetrize(v2.adjoint() * r * v2);
  const double clamp_a = kPsdClamp * std::max(1.0, a.max_abs_entry());
  const double clamp_b = kPsdClamp * std::max(1.0, b.max_abs_entry());
  const RealVector sigma = singular_values(sqrt_psd(a, clamp_a).matrix() * c.adjoint() *
                                           sqrt_psd(b, clamp_b).matrix());
  out.value = sigma.sum();
  out.smoothed = eps > 0.0 ? (sigma.array().square() + eps * eps).sqrt().sum() : out.value;
  return out;
}

struct BlockSearch {
  double value = kInf;
  double min_singular = 0.0;
  double final_step = 0.0;
  int evals = 0;
  bool converged = false;
};

// Random-direction descent from one start. Steps are accepted on the
// smoothed objective, with eps decreasing stage by stage down to 0: where a
// singular value is pinned at zero the exact trace norm has kinked valleys in
// which two-sided random trials almost never find descent. The certified
// value is the exact objective at every evaluated pair. on_improve(v) is
// called whenever the block's best exact value drops to v.
template <typename OnImprove>
void search_from(const Matrix& w, const Matrix& r, Matrix v1, Matrix v2,
                 const PairSearchConfig& cfg, double scale, Rng& rng, BlockSearch& best,
                 OnImprove&& on_improve) {
  const Eigen::Index n = w.rows();
  const int stages = static_cast<int>(cfg.smoothing_stages);
  const int per_stage = std::max(1, cfg.max_evals / (stages + 1));
  int evals = 0;
  double step = cfg.initial_step;
  const auto consider = [&](const PairValue& pv) {
    if (pv.value < best.value) {
      best.value = pv.value;
      best.min_singular = pv.min_singular;
      on_improve(best.value);
    }
  };
  for (int stage = 0; stage <= stages; ++stage) {
    const double eps = stage == stages ? 0.0 : scale * cfg.smoothing_start * std::pow(0.1, stage);
    PairValue cur = pair_value(w, r, v1, v2, cfg.gap_floor, eps);
    ++evals;
    consider(cur);
    step = std::max(step, cfg.initial_step * 1e-3);
    int stage_evals = 0;
    while (stage_evals < per_stage && step > cfg.min_step) {
      const Matrix k1 = random_direction(n, rng);
      const Matrix k2 = random_direction(n, rng);
      bool improved = false;
      for (double sign : {1.0, -1.0}) {
        const Matrix t1 = rotate(v1, k1, sign * step);
        const Matrix t2 = rotate(v2, k2, sign * step);
        const PairValue trial = pair_value(w, r, t1, t2, cfg.gap_floor, eps);
        ++stage_evals;
        consider(trial);
        if (trial.smoothed < cur.smoothed) {
          v1 = t1;
          v2 = t2;
          cur = trial;
          improved = true;
          break;
        }
      }
      step *= improved ? cfg.expand : cfg.shrink;
    }
    evals += stage_evals;
  }
  best.evals += evals;
  best.final_step = best.final_step == 0.0 ? step : std::min(best.final_step, step);
  best.converged = best.converged || step <= cfg.min_step;
}

template <typename OnImprove>
BlockSearch search_block(const Matrix& w, const Matrix& r, int rank, const PairSearchConfig& cfg,
                         std::uint64_t seed, OnImprove&& on_improve) {
  const Eigen::Index n = w.rows();
  const double scale = std::sqrt(std::max(w.trace().real() * r.trace().real(), 1e-300));
  BlockSearch best;
  for (int start = 0; start <= cfg.restarts; ++start) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(start)));
    Matrix v1 = haar_frame(n, rank, rng);
    // The first start uses p = q, which is always a minimal pair.
    Matrix v2 = start == 0 ? v1 : haar_frame(n, rank, rng);
    for (int tries = 0; tries < 100; ++tries) {
      if (pair_value(w, r, v1, v2, cfg.gap_floor, 0.0).min_singular >= cfg.gap_floor) break;
      v2 = haar_frame(n, rank, rng);
    }
    search_from(w, r, std::move(v1), std::move(v2), cfg, scale, rng, best, on_improve);
  }
  return best;
}

}  // namespace

BlockMatrix modulus_of_representatives(const PositiveForm& omega, const PositiveForm& rho,
                                       const Trace& tau) {
  require_same_algebra(omega.algebra(), rho.algebra(), "modulus_of_representatives");
  require_same_algebra(omega.algebra(), tau.algebra(), "modulus_of_representatives");
  const BlockMatrix x = sqrt_density_rep(omega, tau);
  const BlockMatrix y = sqrt_density_rep(rho, tau);
  std::vector<Matrix> z;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    z.push_back(modulus(x.block(k).adjoint() * y.block(k)).matrix());
  }
  return BlockMatrix(x.algebra(), std::move(z));
}

PartialFidelitySpectral partial_fidelity_spectral(const PositiveForm& omega,
                                                  const PositiveForm& rho, const Trace& tau,
                                                  const BlockRanks& r) {
  require_same_algebra(omega.algebra(), rho.algebra(), "partial_fidelity_spectral");
  require_same_algebra(omega.algebra(), tau.algebra(), "partial_fidelity_spectral");
  const BlockAlgebra& alg = omega.algebra();
  require_ranks(alg, r, "partial_fidelity_spectral");
  const BlockMatrix x = sqrt_density_rep(omega, tau);
  const BlockMatrix y = sqrt_density_rep(rho, tau);
  PartialFidelitySpectral out;
  std::vector<OrthoProjection> q0;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const Eigen::Index n = alg.dim(k);
    Eigen::JacobiSVD<Matrix> svd(x.block(k).adjoint() * y.block(k),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    // Eigen orders singular values decreasingly; the smallest r_k sit last.
    const RealVector desc = svd.singularValues();
    const RealVector asc = desc.reverse();
    const Matrix v = svd.matrixV().rowwise().reverse();
    out.eigenvalues.push_back(asc);
    out.value += tau.weight(k) * asc.head(r[k]).sum();
    const Matrix frame = v.leftCols(r[k]);
    const Matrix proj = frame * frame.adjoint();
    const Matrix z = v * asc.cast<Complex>().asDiagonal() * v.adjoint();
    out.commutator_residual =
        std::max(out.commutator_residual, n ? operator_norm(commutator(proj, z)) : 0.0);
    q0.push_back(OrthoProjection::unchecked(HermitianMatrix::symmetrize(proj), r[k],
                                            default_rank_tolerance(n, 1.0)));
  }
  out.q0 = BlockProjection(alg, std::move(q0));
  return out;
}

PartialFidelitySpectral partial_fidelity_spectral(const PositiveForm& omega,
                                                  const PositiveForm& rho, const Trace& tau,
                                                  const BlockProjection& r) {
  require_same_algebra(omega.algebra(), r.algebra(), "partial_fidelity_spectral");
  return partial_fidelity_spectral(omega, rho, tau, r.ranks());
}

SamplingResult partial_fidelity_sampling(const PositiveForm& omega, const PositiveForm& rho,
                                         const Trace& tau, const BlockRanks& r,
                                         const SamplingConfig& cfg) {
  if (cfg.n_samples < 1) throw PreconditionError("partial_fidelity_sampling: n_samples < 1");
  if (!(cfg.local_fraction >= 0.0 && cfg.local_fraction < 1.0)) {
    throw PreconditionError("partial_fidelity_sampling: local_fraction outside [0, 1)");
  }
  const BlockAlgebra& alg = omega.algebra();
  require_ranks(alg, r, "partial_fidelity_sampling");
  const BlockMatrix z = modulus_of_representatives(omega, rho, tau);
  const int n_local = static_cast<int>(cfg.local_fraction * cfg.n_samples);
  const int n_haar = cfg.n_samples - n_local;
  SamplingResult out;
  out.samples = cfg.n_samples;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const Eigen::Index n = alg.dim(k);
    const Matrix& zk = z.block(k);
    const double c = tau.weight(k);
    if (r[k] == 0) continue;
    if (r[k] == n) {
      out.value += c * zk.trace().real();
      out.haar_value += c * zk.trace().real();
      continue;
    }
    Rng rng(derive_seed(cfg.seed, k));
    Matrix best_frame;
    double best = kInf;
    for (int s = 0; s < n_haar; ++s) {
      Matrix v = haar_frame(n, r[k], rng);
      const double f = frame_value(zk, v);
      if (f < best) {
        best = f;
        best_frame = std::move(v);
      }
    }
    out.haar_value += c * best;
    // Random rotations of the incumbent with an adaptive angle.
    double angle = 0.3;
    for (int s = 0; s < n_local; ++s) {
      Matrix v = rotate(best_frame, random_direction(n, rng), angle);
      const double f = frame_value(zk, v);
      if (f < best) {
        best = f;
        best_frame = std::move(v);
        angle = std::min(angle * 1.5, 1.0);
      } else {
        angle = std::max(angle * 0.9, 1e-8);
      }
    }
    out.value += c * best;
  }
  return out;
}

double pafi_objective(const PositiveForm& omega, const PositiveForm& rho,
                      const BlockProjection& p, const BlockProjection& q) {
  const MinimalPair pair = minimal_pair(p, q);
  return fidelity_spectral(inner_derived(omega, pair.mod_qp_inv2),
                           inner_derived(rho, q.to_block_matrix()))
      .value;
}

void PairSearchConfig::validate() const {
  if (max_evals < 1 || restarts < 0 || !(initial_step > 0.0) || !(min_step > 0.0) ||
      !(expand >= 1.0) || !(shrink > 0.0 && shrink < 1.0) || !(gap_floor >= 0.0) ||
      smoothing_stages < 0 || !(smoothing_start > 0.0)) {
    throw PreconditionError("PairSearchConfig: parameter out of range");
  }
}

FidelityReport partial_fidelity_variational(const PositiveForm& omega, const PositiveForm& rho,
                                            const BlockRanks& r, const PairSearchConfig& cfg) {
  require_same_algebra(omega.algebra(), rho.algebra(), "partial_fidelity_variational");
  cfg.validate();
  const BlockAlgebra& alg = omega.algebra();
  require_ranks(alg, r, "partial_fidelity_variational");
  FidelityReport rep;
  rep.route = Route::variational;
  rep.converged = true;

  // Blocks with r_k in {0, n_k} are fixed: p_k = q_k = 0 or 1. Every other
  // block starts from the value of its first start point, so that each
  // recorded total is attained by a minimal pair.
  std::vector<double> block_best(alg.num_blocks(), 0.0);
  std::vector<char> searched(alg.num_blocks(), 0);
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    if (r[k] == alg.dim(k)) {
      block_best[k] = fidelity_of_densities(omega.density(k), rho.density(k));
    } else if (r[k] > 0) {
      searched[k] = 1;
      Rng rng(derive_seed(derive_seed(cfg.seed, k), 0));
      const Matrix v = haar_frame(alg.dim(k), r[k], rng);
      block_best[k] = pair_value(omega.density(k).matrix(), rho.density(k).matrix(), v, v,
                                 cfg.gap_floor, 0.0)
                          .value;
    }
  }
  const auto total = [&] { return std::accumulate(block_best.begin(), block_best.end(), 0.0); };
  rep.bound_history.push_back(total());
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    if (!searched[k]) continue;
    const BlockSearch s = search_block(
        omega.density(k).matrix(), rho.density(k).matrix(), r[k], cfg, derive_seed(cfg.seed, k),
        [&](double v) {
          if (v < block_best[k]) {
            block_best[k] = v;
            rep.bound_history.push_back(total());
          }
        });
    rep.iterations += s.evals;
    rep.residual = std::max(rep.residual, s.final_step);
    rep.converged = rep.converged && s.converged;
    if (s.min_singular > 0.0) {
      rep.conditioning = std::max(rep.conditioning, 1.0 / (s.min_singular * s.min_singular));
    }
  }
  rep.value = std::max(total(), 0.0);
  return rep;
}

std::pair<double, double> check_pafi_invariance(const PositiveForm& omega,
                                                const PositiveForm& rho, const Trace& tau,
                                                const BlockRanks& r, const BlockMatrix& a,
                                                const BlockMatrix& b, const BlockMatrix& c,
                                                const BlockMatrix& d) {
  for (const BlockMatrix* m : {&a, &b, &c, &d}) {
    for (const Matrix& blk : m->blocks()) {
      if (!(condition_number(blk) < kMaxConjugationCondition)) {
        throw PreconditionError("check_pafi_invariance: a, b, c, d must be invertible");
      }
    }
  }
  const BlockMatrix ab = a.adjoint() * b;
  if ((ab - c.adjoint() * d).norm() > 1e-10 * std::max(1.0, ab.norm())) {
    throw PreconditionError("check_pafi_invariance: a*b differs from c*d");
  }
  return {partial_fidelity_spectral(inner_derived(omega, a), inner_derived(rho, b), tau, r).value,
          partial_fidelity_spectral(inner_derived(omega, c), inner_derived(rho, d), tau, r).value};
}

SandwichBounds check_sandwich(const Trace& tau, const BlockMatrix& a, const BlockMatrix& b,
                              const BlockRanks& r, int n_samples, std::uint64_t seed) {
  require_same_algebra(tau.algebra(), a.algebra(), "check_sandwich");
  require_same_algebra(tau.algebra(), b.algebra(), "check_sandwich");
  const BlockAlgebra& alg = tau.algebra();
  require_ranks(alg, r, "check_sandwich");
  std::vector<HermitianMatrix> da, db;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const HermitianMatrix ak(a.block(k));
    const HermitianMatrix bk(b.block(k));
    const double tol_a = kPsdClamp * std::max(1.0, ak.max_abs_entry());
    const double tol_b = kPsdClamp * std::max(1.0, bk.max_abs_entry());
    if (min_eigenvalue(ak) < -tol_a || min_eigenvalue(bk) < -tol_b) {
      throw NotPsdError("check_sandwich: a and b must be positive", 0.0);
    }
  }
  const PositiveForm omega = form_from_trace_vector(tau, a);
  const PositiveForm rho = form_from_trace_vector(tau, b);

  SandwichBounds out;
  out.value = partial_fidelity_spectral(omega, rho, tau, r).value;
  Rng rng(seed);
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const Eigen::Index n = alg.dim(k);
    const int rk = r[k];
    const double c = tau.weight(k);
    const Matrix ab = a.block(k) * b.block(k);
    const RealVector sv = singular_values(ab);
    out.lower += c * sv.head(rk).sum();
    if (rk == 0) continue;
    const Matrix sq = ab.adjoint() * ab;
    const auto upper_at = [&](const Matrix& frame) {
      const Matrix p = frame * frame.adjoint();
      return trace_norm(sqrt_psd(HermitianMatrix::symmetrize(p * sq * p),
                                 kPsdClamp * std::max(1.0, operator_norm(sq)))
                            .matrix());
    };
    // Candidates: every rank-r_k subset of an eigenbasis of |ab|.
    const SpectralDecomposition sd = eigh(modulus(ab));
    double best = kInf;
    std::vector<int> pick(n, 0);
    std::fill(pick.end() - rk, pick.end(), 1);
    do {
      Matrix frame(n, rk);
      int col = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (pick[i]) frame.col(col++) = sd.eigenvectors.col(i);
      }
      best = std::min(best, upper_at(frame));
    } while (std::next_permutation(pick.begin(), pick.end()));
    for (int s = 0; s < n_samples; ++s) best = std::min(best, upper_at(haar_frame(n, rk, rng)));
    out.upper += c * best;
  }
  return out;
}

double partial_fidelity_direct_sum(const std::vector<PositiveForm>& omegas,
                                   const std::vector<PositiveForm>& rhos, const BlockRanks& r,
                                   const std::vector<double>& weights) {
  if (omegas.size() != rhos.size() || omegas.size() != r.size() ||
      (!weights.empty() && weights.size() != r.size())) {
    throw ShapeError("partial_fidelity_direct_sum: inconsistent number of blocks");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    if (omegas[k].algebra().num_blocks() != 1) {
      throw ShapeError("partial_fidelity_direct_sum: each summand must be a single factor");
    }
    const Trace tau(omegas[k].algebra(), {weights.empty() ? 1.0 : weights[k]});
    total += partial_fidelity_spectral(omegas[k], rhos[k], tau, BlockRanks{r[k]}).value;
  }
  return total;
}

const ProfileEntry& PartialFidelityProfile::at(const BlockRanks& ranks) const {
  for (const ProfileEntry& e : entries) {
    if (e.ranks == ranks) return e;
  }
  throw PreconditionError("PartialFidelityProfile: no entry for the requested ranks");
}

PartialFidelityProfile profile(const PositiveForm& omega, const PositiveForm& rho,
                               const Trace& tau, const ProfileOptions& options) {
  require_same_algebra(omega.algebra(), rho.algebra(), "profile");
  const BlockAlgebra& alg = omega.algebra();
  PartialFidelityProfile out{alg, {}};
  BlockRanks ranks(alg.num_blocks(), 0);
  std::uint64_t index = 0;
  while (true) {
    ProfileEntry e;
    e.ranks = ranks;
    const PartialFidelitySpectral s = partial_fidelity_spectral(omega, rho, tau, ranks);
    e.spectral = s.value;
    e.q0 = s.q0;
    if (options.sampling) {
      SamplingConfig cfg = options.sampling_cfg;
      cfg.seed = derive_seed(cfg.seed, index);
      e.sampling = partial_fidelity_sampling(omega, rho, tau, ranks, cfg).value;
    }
    if (options.variational) {
      PairSearchConfig cfg = options.variational_cfg;
      cfg.seed = derive_seed(cfg.seed, index);
      e.variational = partial_fidelity_variational(omega, rho, ranks, cfg).value;
    }
    out.entries.push_back(std::move(e));
    ++index;
    // Lexicographic increment with the last block fastest.
    std::size_t k = ranks.size();
    while (k > 0) {
      --k;
      if (ranks[k] < alg.dim(k)) {
        ++ranks[k];
        break;
      }
      ranks[k] = 0;
      if (k == 0) return out;
    }
  }
}

}  // namespace parfid

#pragma once

// Completely positive trace-preserving maps M_n -> M_m in Kraus and Choi
// form, fidelity monotonicity sweeps, the transformability problem for pairs
// of states, and the explicit non-transformability construction for mixed
// states.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parfid/linalg.hpp"

namespace parfid {

/// Kraus operators K_j (m x n) with sum_j K_j* K_j = I_n.
class KrausSet {
 public:
  KrausSet() = default;
  /// Throws ShapeError on inconsistent shapes and ValidationError if the set
  /// is not trace preserving to 1e-9.
  KrausSet(int n, int m, std::vector<Matrix> ops);

  int input_dim() const { return n_; }
  int output_dim() const { return m_; }
  const std::vector<Matrix>& ops() const { return ops_; }
  std::size_t size() const { return ops_.size(); }

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<Matrix> ops_;
};

/// J = sum_{ij} |i><j| (x) Phi(|i><j|) on C^n (x) C^m, input index first
/// (row i * m + a).
class ChoiMatrix {
 public:
  ChoiMatrix() = default;
  /// Throws ValidationError unless J >= -1e-9 and tr_out J = I_n to 1e-8.
  ChoiMatrix(int n, int m, HermitianMatrix j);

  int input_dim() const { return n_; }
  int output_dim() const { return m_; }
  const HermitianMatrix& matrix() const { return j_; }

 private:
  int n_ = 0;
  int m_ = 0;
  HermitianMatrix j_;
};

/// sum_j K_j X K_j*.
Matrix apply(const KrausSet& kraus, const Matrix& x);
HermitianMatrix apply(const KrausSet& kraus, const HermitianMatrix& w);
/// tr_in[J (X^T (x) I_m)].
Matrix apply(const ChoiMatrix& choi, const Matrix& x);
HermitianMatrix apply(const ChoiMatrix& choi, const HermitianMatrix& w);

ChoiMatrix choi_from_kraus(const KrausSet& kraus);
/// Eigendecomposition of J; eigenvalues <= 1e-10 are dropped.
KrausSet kraus_from_choi(const ChoiMatrix& choi);

/// tr over the second factor of X on C^n (x) C^m.
Matrix partial_trace_second(const Matrix& x, int n, int m);
/// tr over the first factor of X on C^n (x) C^m.
Matrix partial_trace_first(const Matrix& x, int n, int m);

KrausSet identity_channel(int n);
KrausSet unitary_channel(const Matrix& u);
/// X -> tr(X) sigma.
KrausSet replacement_channel(int n, const HermitianMatrix& sigma);
/// X -> tr(X) I/m, Kraus operators |a><i| / sqrt(m).
KrausSet depolarizing_channel(int n, int m);
/// Stinespring dilation by the first n columns of a Haar unitary on
/// C^m (x) C^env; env_dim defaults to n.
KrausSet random_channel(int n, int m, std::uint64_t seed, int env_dim = 0);

struct MonotonicityViolation {
  int channel = 0;
  int pair = 0;
  std::uint64_t seed = 0;
  double before = 0.0;
  double after = 0.0;
};

struct MonotonicityReport {
  int checks = 0;
  double worst_slack = 0.0;  // min over checks of F(Phi w, Phi r) - F(w, r)
  std::vector<MonotonicityViolation> violations;
  // Recorded, not asserted: how often a partial-fidelity profile entry
  // decreased under a channel (n = m only).
  int profile_entries = 0;
  int profile_decreases = 0;
};

/// Random channels M_dim -> M_dim and random state pairs (faithful and rank
/// deficient); a violation is F(Phi w, Phi r) < F(w, r) - tol.
MonotonicityReport monotonicity_sweep(int n_channels, int n_state_pairs, int dim,
                                      std::uint64_t seed, double tol = 1e-9);

struct FeasibilityConfig {
  int max_iters = 20000;
  double feas_tol = 1e-7;
  double stall_tol = 1e-10;
  int stall_window = 500;
  int polish_start = 250;  // first polish; later ones at doubling iteration counts

  void validate() const;
};

enum class FeasibilityStatus { feasible, infeasible, unknown };

const char* status_name(FeasibilityStatus status);

struct FeasibilityVerdict {
  FeasibilityStatus status = FeasibilityStatus::unknown;
  std::optional<ChoiMatrix> choi;  // set iff feasible
  int iterations = 0;
  double psd_residual = 0.0;     // distance of the affine iterate to the PSD cone
  double affine_residual = 0.0;  // constraint residual of the PSD iterate
  double gap = 0.0;              // distance between the two iterates
  bool affine_inconsistent = false;
  std::string note;
  // (iteration, gap) at iterations 1, 10, 100, ... and at the last one.
  std::vector<std::pair<int, double>> gap_history;
};

/// Is there a CPTP Phi with Phi(w) = w2 and Phi(r) = r2? Dykstra alternating
/// projections between the PSD cone and the affine set of Choi matrices with
/// tr_out J = I_n and the two action constraints. The search is first
/// restricted to the face forced by the output kernels: w2 u = 0 implies
/// J (conj(s) (x) u) = 0 for every s in the support of w. At iterations
/// polish_start, 2 polish_start, 4 polish_start, ... a low-rank factor
/// J = K K* started from the dominant eigenpairs of the iterate is refined by
/// Levenberg-Marquardt; this recovers solutions on lower-dimensional faces,
/// where alternating projections converge sublinearly. Feasible is reported
/// only for a verified Choi matrix; infeasible when the constraints are
/// inconsistent or the gap stalls above 100 feas_tol.
FeasibilityVerdict feasibility(const HermitianMatrix& omega, const HermitianMatrix& rho,
                               const HermitianMatrix& omega2, const HermitianMatrix& rho2,
                               const FeasibilityConfig& cfg = {});

struct KanalCounterexample {
  Vector psi;           // unit vector for the input pure state
  Vector phi;           // unit vector for the output pure state
  int j = 0;            // index into spec(omega), descending
  int k = 0;            // index into spec(omega2), descending
  double lambda = 0.0;  // lambda_j
  double beta = 0.0;    // lambda_j = beta lambda'_1 + (1 - beta) lambda'_k
  double fidelity_in = 0.0;   // F(omega, psi psi*)
  double fidelity_out = 0.0;  // F(omega2, phi phi*)
  double input_min_eigenvalue = 0.0;  // of omega - lambda psi psi*, >= 0
  double certificate = 0.0;           // min eigenvalue of omega2 - lambda phi phi*, < 0
};

/// Pure states psi, phi with equal fidelities against omega and omega2 such
/// that omega2 - lambda phi phi* is not positive while omega - lambda psi psi*
/// is; no positive trace-preserving map sends (omega, psi) to (omega2, phi).
/// Requires an eigenvalue of omega strictly inside the numerical range of
/// omega2 (margin 1e-9); otherwise throws PreconditionError listing both.
/// Among admissible (j, k) the most negative certificate is returned.
KanalCounterexample kanal_counterexample(const HermitianMatrix& omega,
                                         const HermitianMatrix& omega2);

/// E(X) = tr_2[X (1 (x) sigma)] (x) 1 on C^n (x) C^m.
Matrix conditional_expectation(const Matrix& x, int n, int m, const HermitianMatrix& sigma);

/// Density of omega o E: (tr_m w) (x) sigma.
HermitianMatrix compose_with_conditional_expectation(const HermitianMatrix& w, int n, int m,
                                                     const HermitianMatrix& sigma);

}  // namespace parfid

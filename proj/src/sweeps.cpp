#include "parfid/sweeps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "parfid/channels.hpp"
#include "parfid/fidelity.hpp"
#include "parfid/generators.hpp"
#include "parfid/pairs.hpp"
#include "parfid/partial_fidelity.hpp"

namespace parfid {

namespace {

using CaseFn = std::function<CaseOutcome(Rng&, bool)>;

struct Suite {
  SuiteInfo info;
  CaseFn run;
};

CaseOutcome judge(double defect, double tol, const std::string& what) {
  CaseOutcome out;
  out.defect = defect;
  out.pass = defect <= tol;
  if (!out.pass) {
    std::ostringstream os;
    os << what << ": " << defect << " > " << tol;
    out.detail = os.str();
  }
  return out;
}

double rel(const Matrix& got, const Matrix& want) {
  return operator_norm(got - want) / std::max(operator_norm(want), 1e-300);
}

BlockRanks nonzero_ranks(const BlockAlgebra& alg, Rng& rng) {
  BlockRanks r = random_ranks(alg, rng);
  int total = 0;
  for (int x : r) total += x;
  if (total == 0) r[rng() % r.size()] = 1;
  return r;
}

PairsElement random_element(const BlockAlgebra& alg, Rng& rng) {
  const MinimalPair pair = make_minimal_pair(alg, nonzero_ranks(alg, rng), rng());
  return complete_pair(random_psd_on(pair.p, rng), pair);
}

BlockMatrix block_inverse(const BlockMatrix& y) {
  std::vector<Matrix> inv;
  for (const Matrix& m : y.blocks()) inv.push_back(m.inverse());
  return BlockMatrix(y.algebra(), std::move(inv));
}

CaseOutcome lemma1_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  PairsElement e = random_element(alg, rng);
  if (inject) e.b = e.b * Complex(1.5, 0.0);
  const PairsDefects d = pairs_defects(e.a, e.b);
  return judge(std::max(d.aba, d.bab), 1e-8, "aba = a, bab = b relative residual");
}

CaseOutcome pairs_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PairsElement e = random_element(alg, rng);
  const BlockMatrix y = random_invertible(alg, rng);
  const PairsElement moved = conjugate_pairs_element(e, y);
  if (pairs_defects(moved.a, moved.b).support_a != e.class_ranks) {
    return {false, 1.0, "conjugation left the class"};
  }
  BlockMatrix back_y = block_inverse(y);
  if (inject) back_y = back_y * Complex(1.1, 0.0);
  const PairsElement back = conjugate_pairs_element(moved, back_y);
  double worst = 0.0;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    worst = std::max({worst, rel(back.a.block(k), e.a.block(k)),
                      rel(back.b.block(k), e.b.block(k))});
  }
  return judge(worst, 1e-8, "conjugation round trip relative residual");
}

CaseOutcome support_equivalence_case(Rng& rng, bool inject) {
  const int n = 1 + static_cast<int>(rng() % 5);
  const BlockAlgebra alg({n});
  const HermitianMatrix x = random_psd(n, 1 + static_cast<int>(rng() % n), rng);
  BlockMatrix y = random_invertible(alg, rng);
  if (inject) {
    // A rank-deficient y can shrink the support.
    const SpectralDecomposition sd = eigh(x);
    y.block(0) = Matrix::Identity(n, n) - sd.eigenvectors.col(n - 1) *
                                              sd.eigenvectors.col(n - 1).adjoint();
    const SupportEquivalence s{BlockProjection(alg, {support(x)}),
                               BlockProjection(alg, {support(HermitianMatrix::symmetrize(
                                                        y.block(0).adjoint() * x.matrix() *
                                                        y.block(0)))}),
                               false};
    const bool eq = unitarily_equivalent(s.before, s.after);
    return {eq, eq ? 0.0 : 1.0, eq ? "" : "s(x) and s(y* x y) are not equivalent"};
  }
  const bool eq = support_equivalence_under_conjugation(BlockMatrix::single(x.matrix()), y).equivalent;
  return {eq, eq ? 0.0 : 1.0, eq ? "" : "s(x) and s(y* x y) are not equivalent"};
}

CaseOutcome subadditivity_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0);
  const BlockMatrix x = random_block_matrix(alg, rng);
  const BlockMatrix y = random_block_matrix(alg, rng);
  const BlockMatrix a1 = random_block_matrix(alg, rng), b1 = random_block_matrix(alg, rng);
  const BlockMatrix a2 = random_invertible(alg, rng);
  const BlockMatrix rest = x.adjoint() * y - a1.adjoint() * b1;
  std::vector<Matrix> b2;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    b2.push_back(a2.block(k).adjoint().partialPivLu().solve(rest.block(k)));
  }
  auto [lhs, rhs] = check_subadditivity(w, r, x, y, {{a1, b1}, {a2, BlockMatrix(alg, b2)}});
  if (inject) rhs = 0.5 * lhs;
  return judge(lhs - rhs, 1e-9, "F(omega^a, rho^b) exceeds the sum over the split");
}

CaseOutcome sandwich_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  std::vector<Matrix> ab, bb;
  std::vector<double> weights;
  for (int n : alg.block_dims()) {
    ab.push_back(random_psd(n, 1 + static_cast<int>(rng() % n), rng).matrix());
    bb.push_back(random_psd(n, 1 + static_cast<int>(rng() % n), rng).matrix());
    weights.push_back(0.5 + static_cast<double>(rng() % 10) / 4.0);
  }
  const Trace tau(alg, weights);
  // Full ranks in the injected case make the value tr|ab| > 0.
  const BlockRanks ranks = inject ? alg.block_dims() : nonzero_ranks(alg, rng);
  const std::uint64_t seed = rng();
  const SandwichBounds s =
      check_sandwich(tau, BlockMatrix(alg, ab), BlockMatrix(alg, bb), ranks, 20, seed);
  double lower = s.lower;
  if (inject) {
    // Bounds of a rescaled pair against the value of the original.
    lower = check_sandwich(tau, BlockMatrix(alg, ab) * Complex(4.0, 0.0), BlockMatrix(alg, bb),
                           ranks, 20, seed)
                .lower;
  }
  return judge(std::max(lower - s.value, s.value - s.upper), 1e-9,
               "lower <= value <= upper chain broken by");
}

CaseOutcome monotonicity_case(Rng& rng, bool inject) {
  const int n = 2 + static_cast<int>(rng() % 3);
  const int m = 2 + static_cast<int>(rng() % 3);
  const KrausSet phi = random_channel(n, m, rng());
  const HermitianMatrix w = random_density(n, 1 + static_cast<int>(rng() % n), rng);
  const HermitianMatrix r = random_density(n, 1 + static_cast<int>(rng() % n), rng);
  const auto f = [](const HermitianMatrix& a, const HermitianMatrix& b) {
    return fidelity_spectral(PositiveForm::single(a), PositiveForm::single(b)).value;
  };
  // The injected case mislabels the input pair as (w, w).
  const double before = f(w, inject ? w : r);
  const double after = f(apply(phi, w), apply(phi, r));
  return judge(before - after, 1e-9, "F(Phi w, Phi r) < F(w, r) by");
}

CaseOutcome additivity_case(Rng& rng, bool inject) {
  static const std::vector<std::vector<int>> menu = {{2, 2}, {1, 2}, {2, 3}, {3, 3}};
  const BlockAlgebra both(menu[rng() % menu.size()]);
  std::vector<PositiveForm> ws, rs;
  std::vector<HermitianMatrix> wd, rd;
  for (int n : both.block_dims()) {
    const BlockAlgebra one({n});
    ws.push_back(random_form(one, rng, rng() % 2 == 0, false));
    rs.push_back(random_form(one, rng, rng() % 2 == 0, false));
    wd.push_back(ws.back().density(0));
    rd.push_back(rs.back().density(0));
  }
  const std::vector<double> weights = {0.5 + static_cast<double>(rng() % 8) / 4.0,
                                       0.5 + static_cast<double>(rng() % 8) / 4.0};
  const PositiveForm w(both, wd), r(both, rd);
  const Trace tau(both, weights);
  // The value does not depend on the weights, so the injected case corrupts
  // a component instead.
  if (inject) rs[0] = PositiveForm::single(HermitianMatrix::symmetrize(4.0 * rd[0].matrix()));
  double worst = 0.0;
  for (int k0 = 0; k0 <= both.dim(0); ++k0) {
    for (int k1 = 0; k1 <= both.dim(1); ++k1) {
      const double assembled = partial_fidelity_spectral(w, r, tau, {k0, k1}).value;
      const double summed = partial_fidelity_direct_sum(ws, rs, {k0, k1}, weights);
      worst = std::max(worst, std::abs(assembled - summed));
    }
  }
  return judge(worst, 1e-10, "assembled vs summed residual");
}

CaseOutcome pafi_invariance_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const Trace tau = Trace::standard(alg);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0);
  const BlockMatrix x = random_invertible(alg, rng);
  const BlockMatrix y = random_invertible(alg, rng);
  const BlockMatrix g = random_invertible(alg, rng);
  // c = g x, d = g^{-*} y keeps x* y = c* d.
  std::vector<Matrix> ginv_adj;
  for (const Matrix& m : g.blocks()) ginv_adj.push_back(m.inverse().adjoint());
  const BlockMatrix c = g * x;
  const BlockMatrix d = BlockMatrix(alg, ginv_adj) * y;
  const BlockRanks ranks = random_ranks(alg, rng);
  if (inject) {
    // Doubling c changes the product, so the value must move.
    const BlockRanks full = alg.block_dims();
    const double f1 = partial_fidelity_spectral(inner_derived(w, x), inner_derived(r, y), tau,
                                                full).value;
    const double f2 = partial_fidelity_spectral(inner_derived(w, c * Complex(2.0, 0.0)),
                                                inner_derived(r, d), tau, full).value;
    return judge(std::abs(f1 - f2), 1e-8, "partial fidelity changed under a*b = c*d by");
  }
  auto [f1, f2] = check_pafi_invariance(w, r, tau, ranks, x, y, c, d);
  return judge(std::abs(f1 - f2), 1e-8, "partial fidelity changed under a*b = c*d by");
}

CaseOutcome star_invariance_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0);
  const BlockMatrix x = random_block_matrix(alg, rng);
  const BlockMatrix y = random_block_matrix(alg, rng);
  std::vector<Matrix> mod, iso;
  for (const Matrix& m : x.blocks()) {
    const PolarDecomposition pd = polar(m);
    mod.push_back(pd.modulus.matrix());
    iso.push_back(pd.isometry);
  }
  const BlockMatrix c(alg, mod);
  const BlockMatrix d = BlockMatrix(alg, iso).adjoint() * y;
  auto [fa, fc] = check_star_invariance(w, r, x, y, c, d);
  if (inject) fc = fidelity_spectral(inner_derived(w, x), inner_derived(r, x)).value + 1.0;
  return judge(std::abs(fa - fc), 1e-9, "F(omega^a, rho^b) - F(omega^c, rho^d)");
}

CaseOutcome hereditarity_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0);
  std::vector<OrthoProjection> qb;
  for (int n : alg.block_dims()) {
    qb.push_back(haar_projection(n, 1 + static_cast<int>(rng() % n), rng));
  }
  auto [corner, derived] = check_hereditarity(w, r, BlockProjection(alg, qb));
  if (inject) derived = fidelity_spectral(w, r).value + 1.0;
  return judge(std::abs(corner - derived), 1e-9, "corner vs derived-form fidelity");
}

CaseOutcome special_cases_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  double worst = 0.0;
  std::string failed;
  const auto compare = [&](const PositiveForm& mu, const BlockMatrix& a, const BlockMatrix& b,
                           const char* what) {
    const auto sc = fidelity_special_cases(mu, a, b);
    if (!sc) {
      failed = std::string(what) + ": no closed form applied";
      worst = std::max(worst, 1.0);
      return;
    }
    const double spectral = fidelity_spectral(inner_derived(mu, a), inner_derived(mu, b)).value;
    worst = std::max(worst, std::abs(sc->value + (inject ? 1.0 : 0.0) - spectral));
  };
  // a*b >= 0 for b = s a with s > 0.
  const PositiveForm mu = random_form(alg, rng);
  const BlockMatrix a = random_block_matrix(alg, rng);
  compare(mu, a, a * Complex(0.5 + static_cast<double>(rng() % 4), 0.0), "positive product");
  // a*b commutes with the density: a = u, b = u c with c diagonal in its eigenbasis.
  std::vector<Matrix> cb, cu;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const SpectralDecomposition sd = eigh(mu.density(k));
    RealVector vals(alg.dim(k));
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
      vals(i) = std::normal_distribution<double>()(rng);
    }
    cb.push_back(sd.eigenvectors * vals.cast<Complex>().asDiagonal() * sd.eigenvectors.adjoint());
    cu.push_back(haar_unitary(alg.dim(k), rng));
  }
  const BlockMatrix u(alg, cu);
  compare(mu, u, u * BlockMatrix(alg, cb), "centralizer");
  // Tracial form.
  std::vector<HermitianMatrix> dens;
  for (int n : alg.block_dims()) {
    dens.push_back(HermitianMatrix::symmetrize(Matrix::Identity(n, n) * (0.5 + rng() % 3)));
  }
  compare(PositiveForm(alg, dens), random_block_matrix(alg, rng), random_block_matrix(alg, rng),
          "tracial");
  CaseOutcome out = judge(worst, 1e-9, "closed form vs spectral route");
  if (!failed.empty()) out.detail = failed;
  return out;
}

CaseOutcome concavity_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w1 = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm w2 = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r1 = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r2 = random_form(alg, rng, rng() % 2 == 0);
  const double l = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
  const double mixed =
      fidelity_spectral(combine(l, w1, 1 - l, w2), combine(l, r1, 1 - l, r2)).value;
  double split = l * fidelity_spectral(w1, r1).value + (1 - l) * fidelity_spectral(w2, r2).value;
  if (inject) split = mixed + 0.1;
  return judge(split - mixed, 1e-9, "joint concavity violated by");
}

CaseOutcome unitary_invariance_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0);
  const BlockMatrix u = random_unitary_block(alg, rng);
  // The injected case moves only one of the two forms.
  const double moved = fidelity_spectral(inner_derived(w, u), inject ? r : inner_derived(r, u)).value;
  const double base = fidelity_spectral(w, r).value;
  return judge(std::abs(moved - base), 1e-9, "F changed under a unitary by");
}

CaseOutcome profile_case(Rng& rng, bool inject) {
  const BlockAlgebra alg = random_algebra(rng);
  const PositiveForm w = random_form(alg, rng, rng() % 2 == 0, rng() % 2 == 0);
  const PositiveForm r = random_form(alg, rng, rng() % 2 == 0, rng() % 2 == 0);
  const PartialFidelityProfile prof = profile(w, r, Trace::standard(alg));
  const double f = fidelity_spectral(w, r).value;
  std::vector<double> values;
  for (const ProfileEntry& e : prof.entries) values.push_back(e.spectral);
  if (inject) std::reverse(values.begin(), values.end());
  double worst = std::abs(values.front());
  worst = std::max(worst, std::abs(values.back() - f));
  // Monotone along the coordinate order of the rank vectors.
  for (std::size_t i = 0; i < prof.entries.size(); ++i) {
    for (std::size_t j = 0; j < prof.entries.size(); ++j) {
      bool below = true;
      for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
        below = below && prof.entries[i].ranks[k] <= prof.entries[j].ranks[k];
      }
      if (below) worst = std::max(worst, values[i] - values[j]);
    }
  }
  const double bound_excess = f - std::sqrt(w.mass() * r.mass());
  if (bound_excess > 1e-11) {
    std::ostringstream os;
    os << "F exceeds sqrt(omega(1) rho(1)) by " << bound_excess;
    return {false, bound_excess, os.str()};
  }
  return judge(worst, 1e-10, "profile sanity defect");
}

const std::vector<Suite>& registry() {
  static const std::vector<Suite> all = {
      {{"lemma1", "complete_pair satisfies aba = a and bab = b", 1e-8}, lemma1_case},
      {{"pairs", "conjugation keeps the class and round-trips", 1e-8}, pairs_case},
      {{"support-equivalence", "s(y* x y) is equivalent to s(x) for invertible y", 0.0},
       support_equivalence_case},
      {{"subadditivity", "F(omega^a, rho^b) <= sum_j F(omega^{a_j}, rho^{b_j})", 1e-9},
       subadditivity_case},
      {{"sandwich", "lower <= partial fidelity <= upper", 1e-9}, sandwich_case},
      {{"monotonicity", "F(Phi w, Phi r) >= F(w, r) for CPTP Phi", 1e-9}, monotonicity_case},
      {{"additivity", "partial fidelity of a direct sum is the weighted sum", 1e-10},
       additivity_case},
      {{"pafi-invariance", "partial fidelity depends on a, b only through a*b", 1e-8},
       pafi_invariance_case},
      {{"star-invariance", "F(omega^a, rho^b) depends only on a*b", 1e-9}, star_invariance_case},
      {{"hereditarity", "F on the corner qMq equals F(omega^q, rho^q)", 1e-9},
       hereditarity_case},
      {{"special-cases", "closed forms agree with the spectral route", 1e-9},
       special_cases_case},
      {{"concavity", "F is jointly concave", 1e-9}, concavity_case},
      {{"unitary-invariance", "F(omega^u, rho^u) = F(omega, rho)", 1e-9},
       unitary_invariance_case},
      {{"profile", "profile is monotone, starts at 0, ends at F <= sqrt(omega(1) rho(1))", 1e-10},
       profile_case},
  };
  return all;
}

const Suite& find_suite(const std::string& name) {
  for (const Suite& s : registry()) {
    if (s.info.name == name) return s;
  }
  std::ostringstream os;
  os << "unknown suite '" << name << "'; known suites:";
  for (const Suite& s : registry()) os << " " << s.info.name;
  throw PreconditionError(os.str());
}

CaseOutcome guarded(const Suite& s, std::uint64_t seed, bool inject) {
  Rng rng(seed);
  try {
    return s.run(rng, inject);
  } catch (const Error& e) {
    return {false, std::numeric_limits<double>::infinity(), std::string("error: ") + e.what()};
  }
}

}  // namespace

const std::vector<SuiteInfo>& suites() {
  static const std::vector<SuiteInfo> infos = [] {
    std::vector<SuiteInfo> out;
    for (const Suite& s : registry()) out.push_back(s.info);
    return out;
  }();
  return infos;
}

std::uint64_t case_seed(std::uint64_t suite_seed, int index) {
  return derive_seed(suite_seed, static_cast<std::uint64_t>(index));
}

CaseOutcome run_case(const std::string& name, std::uint64_t seed, bool inject_violation) {
  return guarded(find_suite(name), seed, inject_violation);
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& options) {
  const Suite& suite = find_suite(name);
  if (options.cases < 0) throw PreconditionError("run_suite: cases must be >= 0");
  if (options.jobs < 1) throw PreconditionError("run_suite: jobs must be >= 1");
  std::vector<CaseOutcome> outcomes(static_cast<std::size_t>(options.cases));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int i = next++; i < options.cases; i = next++) {
      outcomes[i] = guarded(suite, case_seed(options.seed, i), options.inject_violation);
    }
  };
  const int workers = std::min(options.jobs, std::max(options.cases, 1));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  SuiteResult res;
  res.suite = suite.info.name;
  res.property = suite.info.property;
  res.tolerance = suite.info.tolerance;
  res.cases = options.cases;
  for (int i = 0; i < options.cases; ++i) {
    const CaseOutcome& o = outcomes[i];
    res.worst_defect = std::max(res.worst_defect, o.defect);
    if (o.pass) {
      ++res.passed;
    } else {
      ++res.failed;
      if (!res.first_failing_case) {
        res.first_failing_case = i;
        res.first_failing_seed = case_seed(options.seed, i);
        res.first_failure = o.detail;
      }
    }
  }
  return res;
}

}  // namespace parfid

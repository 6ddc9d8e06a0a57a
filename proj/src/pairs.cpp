#include "parfid/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parfid/random.hpp"

namespace parfid {

namespace {

constexpr double kProjectionMatch = 1e-8;
constexpr double kIsometryTol = 1e-9;
constexpr double kPairsRelTol = 1e-8;

struct BlockPairData {
  Matrix mod;
  Matrix inv2;
  Matrix v;
  double min_singular = 1.0;
};

// Returns an error message, or fills `out`.
std::string analyse_block(const OrthoProjection& p, const OrthoProjection& q, double gap_floor,
                          BlockPairData& out) {
  const Eigen::Index n = p.dim();
  const int r = p.rank();
  if (q.rank() != r) {
    std::ostringstream os;
    os << "ranks of p and q differ (" << r << " vs " << q.rank() << ")";
    return os.str();
  }
  if (r == 0) {
    out.mod = out.inv2 = out.v = Matrix::Zero(n, n);
    return {};
  }
  const Matrix qp = q.matrix() * p.matrix();
  Eigen::JacobiSVD<Matrix> svd(qp, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector& sigma = svd.singularValues();
  const double tol = default_rank_tolerance(n, 1.0);
  const double smallest = sigma(r - 1);
  if (smallest < std::max(gap_floor, kGapAbove * tol)) {
    std::ostringstream os;
    os << "|qp| is not locally invertible above the gap floor (smallest nonzero singular value "
       << smallest << ")";
    return os.str();
  }
  const Matrix vr = svd.matrixV().leftCols(r);
  const Matrix ur = svd.matrixU().leftCols(r);
  if ((vr * vr.adjoint() - p.matrix()).cwiseAbs().maxCoeff() > kProjectionMatch) {
    return "s(pqp) differs from p";
  }
  if ((ur * ur.adjoint() - q.matrix()).cwiseAbs().maxCoeff() > kProjectionMatch) {
    return "s(qpq) differs from q";
  }
  const RealVector s = sigma.head(r);
  out.mod = vr * s.cast<Complex>().asDiagonal() * vr.adjoint();
  out.inv2 = vr * s.array().square().inverse().matrix().cast<Complex>().asDiagonal() *
             vr.adjoint();
  out.v = ur * vr.adjoint();
  out.min_singular = smallest;

  const Matrix inv1 = vr * s.array().inverse().matrix().cast<Complex>().asDiagonal() * vr.adjoint();
  if ((qp * inv1 - out.v).cwiseAbs().maxCoeff() > kIsometryTol) {
    return "v differs from qp|qp|^{-1}";
  }
  if ((out.v.adjoint() * out.v - p.matrix()).cwiseAbs().maxCoeff() > kIsometryTol ||
      (out.v * out.v.adjoint() - q.matrix()).cwiseAbs().maxCoeff() > kIsometryTol) {
    return "v*v = p or vv* = q fails";
  }
  return {};
}

double rel_residual(const Matrix& got, const Matrix& want) {
  const double scale = std::max(operator_norm(want), 1e-300);
  return operator_norm(got - want) / scale;
}

}  // namespace

MinimalPair minimal_pair(const BlockProjection& p, const BlockProjection& q, double gap_floor) {
  require_same_algebra(p.algebra(), q.algebra(), "minimal_pair");
  const BlockAlgebra& alg = p.algebra();
  std::vector<Matrix> mod, inv2, v;
  double min_singular = 1.0;
  double conditioning = 0.0;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    BlockPairData d;
    const std::string err = analyse_block(p.block(k), q.block(k), gap_floor, d);
    if (!err.empty()) {
      std::ostringstream os;
      os << "minimal_pair: block " << k << ": " << err;
      throw ValidationError(os.str());
    }
    if (p.block(k).rank() > 0) {
      min_singular = std::min(min_singular, d.min_singular);
      conditioning = std::max(conditioning, 1.0 / (d.min_singular * d.min_singular));
    }
    mod.push_back(std::move(d.mod));
    inv2.push_back(std::move(d.inv2));
    v.push_back(std::move(d.v));
  }
  return MinimalPair{p,
                     q,
                     BlockMatrix(alg, std::move(mod)),
                     BlockMatrix(alg, std::move(inv2)),
                     BlockMatrix(alg, std::move(v)),
                     min_singular,
                     conditioning};
}

bool is_minimal_pair(const BlockProjection& p, const BlockProjection& q, double gap_floor) {
  try {
    minimal_pair(p, q, gap_floor);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

MinimalPair make_minimal_pair(const BlockAlgebra& algebra, const BlockRanks& ranks,
                              std::uint64_t seed, double gap_floor) {
  if (ranks.size() != algebra.num_blocks()) {
    throw PreconditionError("make_minimal_pair: one rank per block is required");
  }
  int total = 0;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (ranks[k] < 0 || ranks[k] > algebra.dim(k)) {
      throw PreconditionError("make_minimal_pair: rank outside [0, n_k]");
    }
    total += ranks[k];
  }
  if (total == 0) {
    throw PreconditionError(
        "make_minimal_pair: zero class requested (partial fidelity is 0 by definition)");
  }
  constexpr int kMaxTries = 100;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<OrthoProjection> pb, qb;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
      pb.push_back(haar_projection(algebra.dim(k), ranks[k], rng));
      qb.push_back(haar_projection(algebra.dim(k), ranks[k], rng));
    }
    const BlockProjection p(algebra, std::move(pb));
    const BlockProjection q(algebra, std::move(qb));
    try {
      return minimal_pair(p, q, gap_floor);
    } catch (const ValidationError&) {
    }
  }
  throw Error("make_minimal_pair: no minimal pair above the gap floor after 100 tries");
}

bool unitarily_equivalent(const BlockProjection& p, const BlockProjection& q) {
  require_same_algebra(p.algebra(), q.algebra(), "unitarily_equivalent");
  return p.ranks() == q.ranks() && p.coranks() == q.coranks();
}

PairsDefects pairs_defects(const BlockMatrix& a, const BlockMatrix& b) {
  require_same_algebra(a.algebra(), b.algebra(), "pairs_defects");
  PairsDefects d;
  d.a_locally_invertible = d.b_locally_invertible = true;
  for (std::size_t k = 0; k < a.num_blocks(); ++k) {
    const Matrix& ak = a.block(k);
    const Matrix& bk = b.block(k);
    const HermitianMatrix ah = HermitianMatrix::symmetrize(ak);
    const HermitianMatrix bh = HermitianMatrix::symmetrize(bk);
    if (operator_norm(ak) > 0.0) d.aba = std::max(d.aba, rel_residual(ak * bk * ak, ak));
    if (operator_norm(bk) > 0.0) d.bab = std::max(d.bab, rel_residual(bk * ak * bk, bk));
    d.support_a.push_back(support(ah).rank());
    d.support_b.push_back(support(bh).rank());
    const auto psd_ok = [](const HermitianMatrix& h) {
      return min_eigenvalue(h) >= -kPsdClamp * std::max(1.0, h.max_abs_entry());
    };
    d.a_locally_invertible = d.a_locally_invertible && psd_ok(ah) && is_locally_invertible(ah);
    d.b_locally_invertible = d.b_locally_invertible && psd_ok(bh) && is_locally_invertible(bh);
  }
  return d;
}

void validate(const PairsElement& e) {
  const PairsDefects d = pairs_defects(e.a, e.b);
  std::ostringstream os;
  if (d.aba > kPairsRelTol) os << "aba = a fails (relative residual " << d.aba << "); ";
  if (d.bab > kPairsRelTol) os << "bab = b fails (relative residual " << d.bab << "); ";
  if (!d.a_locally_invertible) os << "a is not locally invertible; ";
  if (!d.b_locally_invertible) os << "b is not locally invertible; ";
  if (d.support_a != e.class_ranks) os << "s(a) is not in the class of q; ";
  if (d.support_b != e.class_ranks) os << "s(b) is not in the class of q; ";
  // Coranks follow from ranks within a fixed algebra; checked for completeness.
  for (std::size_t k = 0; k < e.class_ranks.size() && k < d.support_a.size(); ++k) {
    const int n = e.a.algebra().dim(k);
    if (n - d.support_a[k] != n - e.class_ranks[k] || n - d.support_b[k] != n - e.class_ranks[k]) {
      os << "corank mismatch in block " << k << "; ";
    }
  }
  const std::string msg = os.str();
  if (!msg.empty()) throw ValidationError("PairsElement: " + msg);
}

PairsElement complete_pair(const BlockMatrix& a, const MinimalPair& pair) {
  require_same_algebra(a.algebra(), pair.p.algebra(), "complete_pair");
  const BlockAlgebra& alg = a.algebra();
  std::vector<Matrix> bb;
  for (std::size_t k = 0; k < alg.num_blocks(); ++k) {
    const HermitianMatrix ak(a.block(k));
    const OrthoProjection sa = support(ak);
    if ((sa.matrix() - pair.p.block(k).matrix()).cwiseAbs().maxCoeff() > kProjectionMatch) {
      std::ostringstream os;
      os << "complete_pair: s(a) differs from p in block " << k;
      throw PreconditionError(os.str());
    }
    const Matrix ainv = local_inverse(ak).matrix();
    const Matrix& q = pair.q.block(k).matrix();
    const Matrix& inv2 = pair.mod_qp_inv2.block(k);
    bb.push_back(HermitianMatrix::symmetrize(q * inv2 * ainv * inv2 * q).matrix());
  }
  return PairsElement{a, BlockMatrix(alg, std::move(bb)), pair.p.ranks()};
}

PairsElement conjugate_pairs_element(const PairsElement& e, const BlockMatrix& y) {
  require_same_algebra(e.a.algebra(), y.algebra(), "conjugate_pairs_element");
  std::vector<Matrix> ab, bb;
  for (std::size_t k = 0; k < y.num_blocks(); ++k) {
    const Matrix& yk = y.block(k);
    const double cond = condition_number(yk);
    if (!(cond < kMaxConjugationCondition)) {
      std::ostringstream os;
      os << "conjugate_pairs_element: y is ill-conditioned in block " << k
         << " (condition number " << cond << ")";
      throw PreconditionError(os.str());
    }
    const Matrix yinv = yk.inverse();
    ab.push_back(HermitianMatrix::symmetrize(yk.adjoint() * e.a.block(k) * yk).matrix());
    bb.push_back(HermitianMatrix::symmetrize(yinv * e.b.block(k) * yinv.adjoint()).matrix());
  }
  PairsElement out{BlockMatrix(y.algebra(), std::move(ab)), BlockMatrix(y.algebra(), std::move(bb)),
                   e.class_ranks};
  validate(out);
  return out;
}

SupportEquivalence support_equivalence_under_conjugation(const BlockMatrix& x,
                                                         const BlockMatrix& y) {
  require_same_algebra(x.algebra(), y.algebra(), "support_equivalence_under_conjugation");
  std::vector<OrthoProjection> before, after;
  for (std::size_t k = 0; k < x.num_blocks(); ++k) {
    if (!(condition_number(y.block(k)) < kMaxConjugationCondition)) {
      throw PreconditionError("support_equivalence_under_conjugation: y is not invertible");
    }
    before.push_back(support(HermitianMatrix(x.block(k))));
    after.push_back(support(
        HermitianMatrix::symmetrize(y.block(k).adjoint() * x.block(k) * y.block(k))));
  }
  SupportEquivalence r{BlockProjection(x.algebra(), std::move(before)),
                       BlockProjection(x.algebra(), std::move(after)), false};
  r.equivalent = unitarily_equivalent(r.before, r.after);
  return r;
}

}  // namespace parfid

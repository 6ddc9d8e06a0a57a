#pragma once

// Minimal pairs of orthoprojections and the elements (a, b) of PAIRS_q(M):
// locally invertible a, b >= 0 with aba = a, bab = b and s(a), s(b) in the
// class of q.

#include <cstdint>

#include "parfid/forms.hpp"

namespace parfid {

/// Floor on the smallest nonzero singular value of qp for generated pairs.
inline constexpr double kPairGapFloor = 1e-6;

/// {p, q} with s(pqp) = p, s(qpq) = q and |qp| locally invertible, together
/// with the derived operators used by the completion formula.
struct MinimalPair {
  BlockProjection p;
  BlockProjection q;
  BlockMatrix mod_qp;       // |qp|
  BlockMatrix mod_qp_inv2;  // |qp|^{-2}, local inverse on p
  BlockMatrix v;            // partial isometry with qp = v |qp|, v*v = p, vv* = q
  double min_singular = 1.0;  // smallest nonzero singular value of qp
  double conditioning = 1.0;  // || |qp|^{-2} ||
};

/// Builds the cached data for {p, q}; throws ValidationError when the pair is
/// not minimal or its smallest nonzero singular value is below gap_floor.
MinimalPair minimal_pair(const BlockProjection& p, const BlockProjection& q,
                         double gap_floor = 0.0);

bool is_minimal_pair(const BlockProjection& p, const BlockProjection& q,
                     double gap_floor = 0.0);

/// Random minimal pair of the given class from two Haar-random unitaries per
/// block. Throws PreconditionError for the zero class or ranks outside
/// [0, n_k], and Error if 100 derived seeds all fail the gap floor.
MinimalPair make_minimal_pair(const BlockAlgebra& algebra, const BlockRanks& ranks,
                              std::uint64_t seed, double gap_floor = kPairGapFloor);

/// p ~ q in a block algebra: equal rank and corank in every block.
bool unitarily_equivalent(const BlockProjection& p, const BlockProjection& q);

struct PairsElement {
  BlockMatrix a;
  BlockMatrix b;
  BlockRanks class_ranks;
};

struct PairsDefects {
  double aba = 0.0;  // ||aba - a|| / ||a||
  double bab = 0.0;  // ||bab - b|| / ||b||
  BlockRanks support_a;
  BlockRanks support_b;
  bool a_locally_invertible = false;
  bool b_locally_invertible = false;
};

/// Residuals of the PAIRS_q conditions, without judging them.
PairsDefects pairs_defects(const BlockMatrix& a, const BlockMatrix& b);

/// Checks aba = a and bab = b to 1e-8 relative, local invertibility, and that
/// s(a), s(b) have the rank and corank of the class in every block.
/// Throws ValidationError naming the violated condition.
void validate(const PairsElement& element);

/// b = q |qp|^{-2} a^{-1} |qp|^{-2} q for a >= 0 with s(a) = p.
/// Throws PreconditionError on support mismatch, LocalInvertibilityError if a
/// is not locally invertible.
PairsElement complete_pair(const BlockMatrix& a, const MinimalPair& pair);

/// (y* a y, y^{-1} b y^{-1}*). Throws PreconditionError if some block of y has
/// condition number >= 1e8. The result is validated.
PairsElement conjugate_pairs_element(const PairsElement& element, const BlockMatrix& y);

struct SupportEquivalence {
  BlockProjection before;  // s(x)
  BlockProjection after;   // s(y* x y)
  bool equivalent = false;
};

SupportEquivalence support_equivalence_under_conjugation(const BlockMatrix& x,
                                                         const BlockMatrix& y);

/// Condition number guard shared by the conjugation action.
inline constexpr double kMaxConjugationCondition = 1e8;

}  // namespace parfid

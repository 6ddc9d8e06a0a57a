#pragma once

// Seeded random instances shared by the property sweeps, the acceptance
// suite and the unit tests.

#include "parfid/forms.hpp"
#include "parfid/random.hpp"

namespace parfid {

/// Random block algebra from a small menu: single factors of dimension 2..5
/// and M_2+M_2, M_1+M_2, M_2+M_3.
BlockAlgebra random_algebra(Rng& rng);

/// Random positive form; faithful when full_rank, otherwise each block has a
/// random rank in [1, n_k]. Normalized to a state when normalize is set.
PositiveForm random_form(const BlockAlgebra& alg, Rng& rng, bool full_rank = true,
                         bool normalize = true);

BlockMatrix random_block_matrix(const BlockAlgebra& alg, Rng& rng);
BlockMatrix random_block_hermitian(const BlockAlgebra& alg, Rng& rng);

/// Random PSD element with support exactly p (blockwise), eigenvalues kept
/// away from zero by a small shift.
BlockMatrix random_psd_on(const BlockProjection& p, Rng& rng);

/// Ginibre blocks redrawn until the condition number is at most 1e4.
BlockMatrix random_invertible(const BlockAlgebra& alg, Rng& rng);

BlockMatrix random_unitary_block(const BlockAlgebra& alg, Rng& rng);

/// Uniform rank in [0, n_k] per block.
BlockRanks random_ranks(const BlockAlgebra& alg, Rng& rng);

/// Unit vectors e_0 and t e_0 + sqrt(1 - t^2) e_1 in C^n (n >= 2, t in [0, 1]).
std::pair<Vector, Vector> overlap_pair(int n, double t);

/// psi psi*.
HermitianMatrix pure_density(const Vector& psi);

}  // namespace parfid

#pragma once

// Seeded random ensembles: Ginibre matrices, Haar unitaries and projections,
// random densities.

#include <cstdint>
#include <random>

#include "parfid/linalg.hpp"

namespace parfid {

using Rng = std::mt19937_64;

/// splitmix64 mix of (base, index); used to derive per-case seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Entries i.i.d. standard complex normal.
Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal absorbed into Q.
Matrix haar_unitary(Eigen::Index n, Rng& rng);

/// Haar-random rank-k projection in dimension n.
OrthoProjection haar_projection(Eigen::Index n, Eigen::Index k, Rng& rng);

Vector random_unit_vector(Eigen::Index n, Rng& rng);

/// (G + G*) / 2 for Ginibre G.
HermitianMatrix random_hermitian(Eigen::Index n, Rng& rng);

/// G G* / tr(G G*) with G of shape n x rank; rank == n gives a faithful state.
HermitianMatrix random_density(Eigen::Index n, Eigen::Index rank, Rng& rng);

/// G G* with G of shape n x rank (unnormalized PSD).
HermitianMatrix random_psd(Eigen::Index n, Eigen::Index rank, Rng& rng);

}  // namespace parfid

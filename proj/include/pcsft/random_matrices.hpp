#pragma once

// Random states and operators for property checks and CLI experiments.

#include "pcsft/hilbert.hpp"
#include "pcsft/rng.hpp"

namespace pcsft {

/// Haar-random unit vector.
FieldVector random_state(std::size_t dim, CounterRng& rng);
/// GUE sample rescaled to unit spectral norm.
HermitianOperator random_hermitian(std::size_t dim, CounterRng& rng);
/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
CMatrix random_unitary(std::size_t dim, CounterRng& rng);
/// rho = G G^dagger / Tr(G G^dagger) for a Ginibre G (Hilbert-Schmidt measure).
DensityOperator random_density(std::size_t dim, CounterRng& rng);

}  // namespace pcsft

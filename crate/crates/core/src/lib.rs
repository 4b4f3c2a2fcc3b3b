//! Super automorphic forms on the super upper half plane `H^{|r}`.
//!
//! Layers, bottom to top:
//! - [`grassmann`]: arithmetic in `P^C ⊠ Λ(C^r)`
//! - [`supermatrix`]: even `(2|r)` matrices, the group `G`, Berezinian, exp/log
//! - [`moebius`]: super Möbius action, cocycle, slash operators
//! - [`superfunctions`]: q-expansions, `η²`, `θ²`, Poincaré series
//! - [`lattices`]: lattice presentations, `V_k^ρ`, `φ_k`, `χ`
//! - [`riemann_roch`]: bundle degrees and dimensions of `sM_k^ρ`, `sS_k^ρ`
//! - [`deformation`]: parameter lattices, `H¹(Γ, g)`, parabolic normal forms
//! - [`adapt`]: order-by-order lifting of forms to deformed lattices
//! - [`checks`]: measurements for the end-to-end self test

pub mod error;
pub mod grassmann;
pub mod supermatrix;
pub mod moebius;
pub mod superfunctions;
pub mod lattices;
pub mod riemann_roch;
pub mod deformation;
pub mod adapt;
pub mod checks;

pub use error::{Error, Result};

//! Weight functions, quasi-norms and the adapted geometries of the built-in groups.
//!
//! An [`AdaptedGeometry`] carries two weight systems: `Sigma_G` on the whole group and
//! `Sigma_N` on the nilpotent subgroup `N`. Generators of the standard tuple receive the base
//! weight `Phi_0^{-1}`, realized as `(1 + t)^{1/2} - 1`; every generator of `H_i ∩ N`
//! receives `Phi_i^{-1}`, and repeated generators keep the pointwise maximum.
//!
//! The closed-form norm is `max_j |x_j|^{1/w_j}` over the coordinates of `N`, with a
//! symmetrised centre for the Heisenberg group and a word-count form for the infinite
//! dihedral group. The rescaled norm is `||g||_{G,2} = (1 + ||g||)^{w_*} - 1`.

mod norm;
mod oracle;
mod system;
mod volume;
mod weight;

pub use norm::{Certificate, CertificateFactor, ClosedForm, NormKind, DEFAULT_BALL_CAP};
pub use oracle::{oracle_ball, oracle_norm, r_grid};
pub use system::{AdaptedGeometry, ComponentGeometry, SigmaEntry, WeightSystem};
pub use volume::{VolumeFactor, VolumeFunction};
pub use weight::{phi0_inverse, phi_to_phi_cap, JumpProfile, RegIndex, WeightFunction};

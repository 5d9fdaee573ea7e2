//! Fourier-lattice representation of periodic solenoidal vector fields.

pub mod checkpoint;
mod field;
mod lattice;
mod random;
mod transform;

pub use field::{SpectralField, Vec3c, VALIDATION_TOL, ZERO3};
pub use lattice::{WaveLattice, Wavevector};
pub use random::{is_canonical, random_divfree_field};
pub use transform::{to_physical, to_spectral, PhysicalField};

pub(crate) use field::{dot_wave, project_mode};
pub(crate) use transform::{component, forward_pair, inverse_pair};

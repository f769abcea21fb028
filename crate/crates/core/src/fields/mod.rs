//! Grids, staggered field storage, discrete operators and snapshot files.

mod grid;
mod ops;
pub mod snapshot;
mod state;

pub(crate) use grid::LANES;
pub use grid::{Grid1D, Grid3D, Stagger};
pub use ops::{
    augment_1d, augment_3d, cell_divergence_1d, extend_1d, extend_primitive, face_gradient_1d,
    face_gradient_3d, primitive_1d, recover_u, recover_u_3d, strain_and_spin_1d,
    strain_and_spin_3d, AugmentedFields3, StrainSpin,
};
pub use snapshot::{write_atomic, Snapshot};
pub use state::{AugmentedState1D, ExtendedState, State1D, State3D};

//! Finite-group theory of equivariant convolutional layers on homogeneous
//! spaces: coset geometry, fields and induced representations, kernel
//! spaces in three equivalent forms, equivariant maps and a catalog of
//! builtin groups.

pub mod catalog;
pub mod coset;
pub mod double_coset;
pub mod error;
pub mod field;
pub mod group;
pub mod kernel;
pub mod layer;
pub mod linalg;
pub mod rep;

pub use coset::{CosetSpace, SectionPolicy};
pub use double_coset::{DoubleCosetSpace, GammaPolicy};
pub use error::{Error, Result};
pub use field::{FieldSpace, MackeyField, SectionField};
pub use group::{build_group, build_subgroup, Group, Subgroup};
pub use kernel::{Kernel, KernelBasis, KernelC, KernelD, KernelForm, KernelG, KernelSpace};
pub use layer::{LayerKernel, LayerSpec, TwoArgKernel};
pub use rep::Representation;

pub mod bivar;
pub mod error;
pub mod estimation;
pub mod fem;
pub mod fractional;
pub mod latent;
pub mod mesh;
pub mod paramfield;
pub mod risk;
pub mod scenario;
pub mod seastate;
pub mod sparse;

pub use error::{Error, ErrorClass, Result};
pub use sparse::{CsrMatrix, SparseChol, SelectedInverse};

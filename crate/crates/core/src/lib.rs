pub mod ansatz;
pub mod cli;
pub mod coeffs;
pub mod dediag;
pub mod error;
pub mod jost;
pub mod mp;
pub mod recurrence;
pub mod scaled;
pub mod spectral;
pub mod volterra;

pub use error::{Error, Result};
pub use mp::{Cplx, Real};
pub use scaled::{PrecisionPolicy, ScaledComplex};

pub mod acceptance;
pub mod analytic;
pub mod applications;
pub mod dist;
pub mod error;
pub mod quadrature;
pub mod simulate;
pub mod steplaw;
pub mod volterra;

pub use dist::ScalarDistribution;
pub use error::{Error, Result};
pub use steplaw::{JointStepLaw, Route, StepAtom, StepMoments, SubCdfs};

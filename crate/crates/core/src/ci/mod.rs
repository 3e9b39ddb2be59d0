//! Conditional independence: numeric checks and symbolic derivation.

pub mod numeric;
pub mod semigraphoid;
pub mod statement;

pub use numeric::{
    check_expectation_version, check_extended_ci, check_extended_ci_with, check_stochastic_ci, mixture_joint,
    mixture_joint_with, uniform_prior, Cell, CommonVersion, ExtendedMode, MixtureJoint, RegimeJoints, Verdict,
    VersionCheck, Witness,
};
pub use semigraphoid::{derivable, semigraphoid_close, Closure, Derivation, TraceStep};
pub use statement::{CiStatement, SIGMA};

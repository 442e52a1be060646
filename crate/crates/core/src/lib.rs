pub mod clifford;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod export;
pub mod generators;
pub mod interaction;
pub mod jet;
pub mod kinematics;
pub mod linalg;
pub mod observables;
pub mod opcalc;
pub mod poincare;
pub mod report;
pub mod sampling;
pub mod suites;

//! Dense complex linear algebra for small matrices (dimension 2–32).

mod eig;
mod expm;
mod hermitian;
mod lu;
mod operator;
pub mod vector;

pub use eig::{eig_general, fix_phase_first, fix_phase_largest, EigenSystem, NEAR_DEFECTIVE_CONDITION};
pub use expm::{expm, overflow_risk, OVERFLOW_RISK_NORM};
pub use hermitian::{eig_hermitian, HermitianEigen, HERMITIAN_TOL};
pub use operator::{pauli, Operator};

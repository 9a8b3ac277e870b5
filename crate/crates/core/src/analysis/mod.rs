//! Figures of merit from simulated or measured records: parity scans, Bell fidelity,
//! detection correction, thermometry, per-gate error and error budgets.

pub mod bell;
pub mod budget;
pub mod decay;
pub mod detection;
pub mod fidelity;
pub mod parity;
pub mod thermometry;

pub use bell::{bell_fidelity, bell_fidelity_from_sum, pair_bell_fidelity};
pub use budget::{build_error_budget, BudgetPlan, ErrorBudget, ErrorSource};
pub use decay::{error_per_gate, GateErrorFit};
pub use detection::{correct_populations, detection_matrix, Correction, DetectionModel};
pub use fidelity::uhlmann_fidelity;
pub use parity::{pair_contrast, parity_curve, parity_fit, parity_of, rotated_populations, ParityFit};
pub use thermometry::{fit_phonon_number, PhononFit};

//! Gate and single-ion dynamics: closed-form phase-space results and the open-system solver.

pub mod envelope;
pub mod gate;
pub mod integrator;
pub mod master;
pub mod operators;
pub mod pointing;
pub mod quad;
pub mod single_ion;
pub mod spectrum;
pub mod state;
pub mod trajectory;

pub use envelope::{PulseEnvelope, Shape};
pub use gate::GateSpec;
pub use master::{evolve_master_equation, Dephasing, Heating, MasterSettings, NoiseModel, SimResult};
pub use state::ReducedState;
pub use trajectory::{analytic_gate_state, calibrate_gate, displacement_trajectory, Trajectory};

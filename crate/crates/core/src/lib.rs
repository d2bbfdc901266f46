//! Operator-ordering witnesses for qubits: exact 2×2 Hermitian algebra, witness
//! checks, a search for the strongest second-moment violation and a shot-level
//! simulation of the two-stage test.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the document
//! formats and the simulator work in `f64`.

pub mod document;
pub mod error;
pub mod golden;
pub mod matcore;
pub mod optimizer;
pub mod scalar;
pub mod simulator;
pub mod witness;

pub use document::{report_json, PlanDocument, TripleDocument};
pub use error::{Error, Result};
pub use matcore::{Density2, EigenPair2, Hermitian2, PureState, QubitState};
pub use optimizer::{FullParams, Optimum, ReducedParams};
pub use scalar::Real;
pub use simulator::{ExperimentPlan, NoiseFamily, NoiseModel, Verdict};
pub use witness::{ClassicalModel, Observable, PolarizationSetup, WitnessTriple};

pub type Hermitian2d = Hermitian2<f64>;
pub type Hermitian2f = Hermitian2<f32>;
pub type QubitStated = QubitState<f64>;
pub type QubitStatef = QubitState<f32>;
pub type WitnessTripled = WitnessTriple<f64>;
pub type WitnessTriplef = WitnessTriple<f32>;
pub type Optimumd = Optimum<f64>;
pub type Optimumf = Optimum<f32>;

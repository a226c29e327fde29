//! Exact finite-time mean-squared error of decentralized TD(0) with linear
//! function approximation, computed through the algorithm's Markov jump
//! linear system form and checked against simulation and small-step theory.

pub mod centralized;
pub mod error;
pub mod linalg;
pub mod mjls;
pub mod model;
pub mod moments;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use nalgebra;
pub use scalar::Real;
pub use scenario::{load_scenario, Scenario, ScenarioFile};

pub type Mdp = model::MultiAgentMdp<f64>;
pub type Network = model::CommNetwork<f64>;
pub type Chain = model::JumpChain<f64>;
pub type Dynamics = model::MeanDynamics<f64>;
pub type Model = model::Model<f64>;
pub type Modes = mjls::ModeSystem<f64>;
pub type Lti = mjls::LtiMoments<f64>;
pub type Trajectory = moments::ErrorTrajectory<f64>;
pub type SteadyState = moments::SteadyState<f64>;
pub type SpectralReport = spectral::SpectralReport<f64>;
pub type Sweep = spectral::PerturbationSweep<f64>;
pub type McEstimate = sim::McEstimate<f64>;

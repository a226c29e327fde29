//! JSON scenario files.
//!
//! ```json
//! {
//!   "transition": [[0.5, 0.5], [0.5, 0.5]],
//!   "gamma": 0.5,
//!   "features": [[1.0], [-1.0]],
//!   "rewards": [[[1, 1], [1, 1]], [[0, 0], [0, 0]]],
//!   "network_weights": [[0.5, 0.5], [0.5, 0.5]],
//!   "initial_state_dist": [1.0, 0.0],
//!   "alpha": 0.1
//! }
//! ```
//!
//! Matrices are arrays of rows. `features` is `|S| × p`, `rewards` holds one
//! `|S| × |S|` table per agent, `theta0` is `p × M`. Omitted fields take the
//! defaults below.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mjls::DEFAULT_SIZE_GUARD;
use crate::model::{CommNetwork, Model, MultiAgentMdp};

pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Redundant with the size of `transition`; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_states: Option<usize>,
    pub transition: Vec<Vec<f64>>,
    pub gamma: f64,
    pub features: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub network_weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state_dist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_guard: Option<usize>,
}

/// A loaded and validated scenario with run parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: Option<String>,
    pub model: Model<f64>,
    pub alpha: Option<f64>,
    pub theta0: DMatrix<f64>,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub size_guard: usize,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{what}: row {i} has {} entries, row 0 has {c}",
            row.len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let transition = matrix(&self.transition, "transition")?;
        if let Some(n) = self.num_states {
            if n != transition.nrows() {
                return Err(Error::Dimension(format!(
                    "num_states is {n} but transition has {} rows",
                    transition.nrows()
                )));
            }
        }
        let rewards = self
            .rewards
            .iter()
            .enumerate()
            .map(|(m, r)| matrix(r, &format!("rewards[{m}]")))
            .collect::<Result<Vec<_>>>()?;
        let features = matrix(&self.features, "features")?;
        let weights = matrix(&self.network_weights, "network_weights")?;

        let mdp = MultiAgentMdp::new(transition, rewards, self.gamma, features)?;
        let net = CommNetwork::new(weights)?;
        if net.num_agents() != mdp.num_agents() {
            return Err(Error::Dimension(format!(
                "network has {} agents, rewards describe {}",
                net.num_agents(),
                mdp.num_agents()
            )));
        }
        let n = mdp.num_states();
        let mu0 = match self.initial_state_dist {
            Some(v) => DVector::from_vec(v),
            None => DVector::from_element(n, 1.0 / n as f64),
        };

        let model = Model::new(mdp, net, mu0)?;

        let (p, m) = (model.feature_dim(), model.num_agents());
        let theta0 = match self.theta0 {
            Some(rows) => matrix(&rows, "theta0")?,
            None => DMatrix::zeros(p, m),
        };
        if theta0.shape() != (p, m) {
            return Err(Error::Dimension(format!(
                "theta0 is {}x{}, expected {p}x{m} (features x agents)",
                theta0.nrows(),
                theta0.ncols()
            )));
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {a}")));
            }
        }
        Ok(Scenario {
            name: self.name,
            model,
            alpha: self.alpha,
            theta0,
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            size_guard: self.size_guard.unwrap_or(DEFAULT_SIZE_GUARD),
        })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        ScenarioFile::from_json(text)?.into_scenario()
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

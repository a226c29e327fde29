//! Single-agent TD(0) on the network-averaged reward.
//!
//! The average `θ̄^k` of the decentralized iterates follows exactly this
//! recursion, and with one agent (`W = [1]`) the decentralized algorithm
//! reduces to it. Kept as a separate code path for cross-checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Real;
use crate::sim::{trial_rng, PathSampler};

fn mean_reward<T: Real>(model: &Model<T>, s: usize, s_next: usize) -> T {
    let m = model.num_agents();
    (0..m).fold(T::zero(), |a, k| a + model.mdp.reward(k, s, s_next)) / T::lit(m as f64)
}

/// `θ ← θ + α φ(s) (r̄(s,s') + γ φ(s')ᵀθ − φ(s)ᵀθ)` along the same sampled
/// path as `sim::run_td0` with the same seed.
pub fn run_centralized_td0<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DVector<T>,
    horizon: usize,
    seed: u64,
) -> Result<Vec<DVector<T>>> {
    if theta0.len() != model.feature_dim() {
        return Err(Error::Dimension("initial weight length".into()));
    }
    let sampler = PathSampler::new(model)?;
    let path = sampler.sample(&mut trial_rng(seed, 0), horizon);
    let gamma = model.mdp.discount();
    let mut out = vec![theta0.clone()];
    for k in 0..horizon {
        let (s, s_next) = (path[k], path[k + 1]);
        let phi = model.mdp.feature(s);
        let phi_next = model.mdp.feature(s_next);
        let theta = &out[k];
        let d = mean_reward(model, s, s_next) + gamma * phi_next.dot(theta) - phi.dot(theta);
        out.push(theta + phi * (alpha * d));
    }
    Ok(out)
}

/// Exact `E‖θ̄^k − θ*‖²` for the single-agent recursion, via its own
/// `p`-dimensional mode-conditioned moments.
pub fn centralized_error_trajectory<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DVector<T>,
    horizon: usize,
) -> Result<Vec<T>> {
    let p = model.feature_dim();
    if theta0.len() != p {
        return Err(Error::Dimension("initial weight length".into()));
    }
    let chain = &model.chain;
    let n = chain.num_modes();
    let ts = &model.dynamics.theta_star;
    let gamma = model.mdp.discount();

    let mut h = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let (s, s_next) = chain.pair_of(i);
        let phi = model.mdp.feature(s);
        let a = &phi * (model.mdp.feature(s_next) * gamma - &phi).transpose();
        let b = &phi * mean_reward(model, s, s_next);
        g.push((&a * ts + b) * alpha);
        h.push(DMatrix::identity(p, p) + a * alpha);
    }

    let e0 = theta0 - ts;
    let mut pk = chain.initial().clone();
    let mut q: Vec<DVector<T>> = pk.iter().map(|&w| &e0 * w).collect();
    let mut qq: Vec<DMatrix<T>> = pk.iter().map(|&w| &e0 * e0.transpose() * w).collect();
    let trace = |qq: &[DMatrix<T>]| qq.iter().fold(T::zero(), |a, m| a + m.trace());
    let mut out = vec![trace(&qq)];
    for _ in 0..horizon {
        let mut q_next = vec![DVector::zeros(p); n];
        let mut qq_next = vec![DMatrix::zeros(p, p); n];
        for i in 0..n {
            let hq = &h[i] * &q[i];
            let cross = &hq * g[i].transpose();
            let mean_in = &hq + &g[i] * pk[i];
            let second_in = &h[i] * &qq[i] * h[i].transpose()
                + &cross
                + cross.transpose()
                + &g[i] * g[i].transpose() * pk[i];
            for (j, pij) in chain.successors(i) {
                q_next[j] += &mean_in * pij;
                qq_next[j] += &second_in * pij;
            }
        }
        pk = chain.propagate(&pk);
        q = q_next;
        qq = qq_next;
        out.push(trace(&qq));
    }
    Ok(out)
}

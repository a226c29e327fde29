//! Stochastic execution of decentralized TD(0) and a brute-force
//! path-enumeration oracle for `δ^k`.
//!
//! Randomness comes from `ChaCha8Rng`: trial `t` of a Monte Carlo run with
//! master seed `s` uses `ChaCha8Rng::seed_from_u64(s)` switched to stream
//! `t`. A single run with seed `s` is trial 0. Streams are independent, so
//! results do not depend on how trials are scheduled.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{mode_matrices, Model, MultiAgentMdp};
use crate::scalar::Real;

/// Recorded in output metadata.
pub const GENERATOR: &str = "ChaCha8Rng(seed_from_u64(master), stream = trial index)";

/// Largest number of state paths `enumerate_error` will visit.
pub const PATH_BUDGET: usize = 1_000_000;

/// Trials per reduction chunk; fixed so the reduction order never depends on
/// the thread count.
const CHUNK: usize = 256;

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Samples `s⁰ ~ μ0` and then `s^{k+1} ~ P(s^k, ·)`.
#[derive(Debug, Clone)]
pub struct PathSampler {
    initial: WeightedIndex<f64>,
    rows: Vec<WeightedIndex<f64>>,
}

impl PathSampler {
    pub fn new<T: Real>(model: &Model<T>) -> Result<Self> {
        let weights = |it: &mut dyn Iterator<Item = T>| -> Result<WeightedIndex<f64>> {
            WeightedIndex::new(it.map(|x| x.as_f64().max(0.0)).collect::<Vec<_>>())
                .map_err(|e| Error::InvalidArgument(format!("sampling weights: {e}")))
        };
        let initial = weights(&mut model.initial_state_dist.iter().cloned())?;
        let p = model.mdp.transition();
        let rows = (0..p.nrows())
            .map(|s| weights(&mut p.row(s).iter().cloned()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { initial, rows })
    }

    /// States `s⁰ … s^{K+1}`.
    pub fn sample(&self, rng: &mut ChaCha8Rng, horizon: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(horizon + 2);
        let mut s = self.initial.sample(rng);
        path.push(s);
        for _ in 0..=horizon {
            s = self.rows[s].sample(rng);
            path.push(s);
        }
        path
    }
}

/// One synchronous decentralized TD(0) step on the `p × M` weight matrix:
/// every agent mixes its neighbours' step-`k` weights and adds its own TD
/// correction.
pub fn td_step<T: Real>(
    mdp: &MultiAgentMdp<T>,
    weights: &DMatrix<T>,
    alpha: T,
    theta: &DMatrix<T>,
    s: usize,
    s_next: usize,
) -> DMatrix<T> {
    let phi = mdp.feature(s);
    let td_dir = mdp.feature(s_next) * mdp.discount() - &phi;
    let m_agents = theta.ncols();
    let mut next = DMatrix::zeros(theta.nrows(), m_agents);
    for m in 0..m_agents {
        let d = td_dir.dot(&theta.column(m)) + mdp.reward(m, s, s_next);
        let mut col = next.column_mut(m);
        for mp in 0..m_agents {
            let w = weights[(m, mp)];
            if w != T::zero() {
                col += theta.column(mp) * w;
            }
        }
        col += &phi * (alpha * d);
    }
    next
}

/// Replays the algorithm along a given state path; returns `Θ⁰ … Θ^K` for a
/// path `s⁰ … s^K` (extra trailing states are ignored).
pub fn propagate_weights<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    path: &[usize],
) -> Vec<DMatrix<T>> {
    let mut out = Vec::with_capacity(path.len());
    out.push(theta0.clone());
    for k in 0..path.len().saturating_sub(1) {
        let next = td_step(&model.mdp, model.net.weights(), alpha, &out[k], path[k], path[k + 1]);
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdRunResult<T: Real> {
    /// `Θ⁰ … Θ^K`.
    pub weights: Vec<DMatrix<T>>,
    /// `s⁰ … s^{K+1}`.
    pub state_path: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
}

impl<T: Real> TdRunResult<T> {
    /// `(1/M) ‖Θ^k − Θ*‖_F²` for every recorded step.
    pub fn squared_errors(&self, theta_star: &DVector<T>) -> Vec<T> {
        self.weights.iter().map(|w| squared_error(w, theta_star)).collect()
    }
}

pub fn squared_error<T: Real>(theta: &DMatrix<T>, theta_star: &DVector<T>) -> T {
    let mut acc = T::zero();
    for c in 0..theta.ncols() {
        for r in 0..theta.nrows() {
            let e = theta[(r, c)] - theta_star[r];
            acc += e * e;
        }
    }
    acc / T::lit(theta.ncols() as f64)
}

fn check_theta0<T: Real>(model: &Model<T>, theta0: &DMatrix<T>) -> Result<()> {
    if theta0.shape() != (model.feature_dim(), model.num_agents()) {
        return Err(Error::Dimension(format!(
            "initial weights are {}x{}, expected {}x{}",
            theta0.nrows(),
            theta0.ncols(),
            model.feature_dim(),
            model.num_agents()
        )));
    }
    Ok(())
}

fn run_stream<T: Real>(
    model: &Model<T>,
    sampler: &PathSampler,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> TdRunResult<T> {
    let mut rng = trial_rng(seed, stream);
    let state_path = sampler.sample(&mut rng, horizon);
    let weights = propagate_weights(model, alpha, theta0, &state_path[..=horizon]);
    TdRunResult {
        weights,
        state_path,
        seed,
        stream,
    }
}

/// One run of decentralized TD(0) for `horizon` steps.
pub fn run_td0<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
    seed: u64,
) -> Result<TdRunResult<T>> {
    check_theta0(model, theta0)?;
    let sampler = PathSampler::new(model)?;
    Ok(run_stream(model, &sampler, alpha, theta0, horizon, seed, 0))
}

/// Per-step squared errors of Monte Carlo trial `trial`.
pub fn trial_errors<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
    seed: u64,
    trial: u64,
) -> Result<Vec<T>> {
    check_theta0(model, theta0)?;
    let sampler = PathSampler::new(model)?;
    Ok(run_stream(model, &sampler, alpha, theta0, horizon, seed, trial)
        .squared_errors(&model.dynamics.theta_star))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate<T: Real> {
    pub deltas_hat: Vec<T>,
    pub stderrs: Vec<T>,
    pub trials: usize,
    pub seed: u64,
    pub generator: &'static str,
}

/// Running mean / sum of squared deviations per step.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.count += 1.0;
        for (k, &x) in xs.iter().enumerate() {
            let d = x - self.mean[k];
            self.mean[k] += d / self.count;
            self.m2[k] += d * (x - self.mean[k]);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * other.count / n;
            self.m2[k] += other.m2[k] + d * d * self.count * other.count / n;
        }
        self.count = n;
    }
}

/// Sample mean and standard error of `(1/M)‖Θ^k − Θ*‖_F²` over independent
/// trials.
pub fn monte_carlo_error<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate<T>> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least 2 trials are needed for a standard error, got {trials}"
        )));
    }
    check_theta0(model, theta0)?;
    let sampler = PathSampler::new(model)?;
    let theta_star = &model.dynamics.theta_star;
    let len = horizon + 1;

    let chunks: Vec<Moments> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::new(len);
            for t in (c * CHUNK)..((c + 1) * CHUNK).min(trials) {
                let run = run_stream(model, &sampler, alpha, theta0, horizon, seed, t as u64);
                let errs: Vec<f64> = run
                    .squared_errors(theta_star)
                    .into_iter()
                    .map(|x| x.as_f64())
                    .collect();
                acc.push(&errs);
            }
            acc
        })
        .collect();

    let mut total = Moments::new(len);
    for c in &chunks {
        total.merge(c);
    }
    let n = total.count;
    Ok(McEstimate {
        deltas_hat: total.mean.iter().map(|&x| T::lit(x)).collect(),
        stderrs: total
            .m2
            .iter()
            .map(|&m2| T::lit((m2.max(0.0) / (n - 1.0) / n).sqrt()))
            .collect(),
        trials,
        seed,
        generator: GENERATOR,
    })
}

/// Exact `δ⁰ … δ^K` by enumerating every state path with its probability and
/// replaying the algorithm along it.
pub fn enumerate_error<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
) -> Result<Vec<T>> {
    check_theta0(model, theta0)?;
    let ns = model.mdp.num_states();
    let paths = (ns as f64).powi(horizon as i32 + 2);
    if paths > PATH_BUDGET as f64 {
        return Err(Error::PathBudget {
            paths,
            budget: PATH_BUDGET,
        });
    }
    let mut deltas = vec![T::zero(); horizon + 1];
    for s0 in 0..ns {
        let p0 = model.initial_state_dist[s0];
        if p0 > T::zero() {
            walk(model, alpha, theta0.clone(), s0, p0, 0, horizon, &mut deltas);
        }
    }
    Ok(deltas)
}

#[allow(clippy::too_many_arguments)]
fn walk<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta: DMatrix<T>,
    s: usize,
    prob: T,
    depth: usize,
    horizon: usize,
    deltas: &mut [T],
) {
    deltas[depth] += prob * squared_error(&theta, &model.dynamics.theta_star);
    if depth == horizon {
        return;
    }
    let p = model.mdp.transition();
    for s_next in 0..model.mdp.num_states() {
        let ps = p[(s, s_next)];
        if ps > T::zero() {
            let next = td_step(&model.mdp, model.net.weights(), alpha, &theta, s, s_next);
            walk(model, alpha, next, s_next, prob * ps, depth + 1, horizon, deltas);
        }
    }
}

/// `θ̄^k = (1/M) Σ_m θ_m^k`.
pub fn average_iterate<T: Real>(theta: &DMatrix<T>) -> DVector<T> {
    theta.column_mean()
}

/// Largest deviation over `k` of the averaged iterate from the single-agent
/// recursion `θ̄^{k+1} = θ̄^k + α (A(z^k) θ̄^k + b̄(z^k))`.
pub fn averaged_iterate_residual<T: Real>(
    model: &Model<T>,
    alpha: T,
    run: &TdRunResult<T>,
) -> Result<T> {
    let ns = model.mdp.num_states();
    let mut worst = T::zero();
    for k in 0..run.weights.len().saturating_sub(1) {
        let mode = run.state_path[k] * ns + run.state_path[k + 1];
        let (a, b) = mode_matrices(&model.mdp, mode)?;
        let bar = average_iterate(&run.weights[k]);
        let predicted = &bar + (&a * &bar + b.column_mean()) * alpha;
        let actual = average_iterate(&run.weights[k + 1]);
        let gap = (actual - predicted).amax();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

/// `max_m ‖θ_m − θ̄‖₂`.
pub fn consensus_spread<T: Real>(theta: &DMatrix<T>) -> T {
    let bar = average_iterate(theta);
    (0..theta.ncols())
        .map(|m| (theta.column(m) - &bar).norm())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{e1, e2};
    use crate::moments::error_trajectory;

    #[test]
    fn zero_step_with_equal_columns_stays_put() {
        let model = e2();
        let theta0 = DMatrix::from_element(1, 2, 0.3);
        let run = run_td0(&model, 0.0, &theta0, 20, 7).unwrap();
        for w in &run.weights {
            assert_eq!(w, &theta0);
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let model = e1();
        let theta0 = DMatrix::from_row_slice(1, 2, &[1.0, -2.0]);
        let a = run_td0(&model, 0.1, &theta0, 3, 42).unwrap();
        let b = run_td0(&model, 0.1, &theta0, 3, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.state_path.len(), 5);
        assert_eq!(a.weights.len(), 4);
        let replay = propagate_weights(&model, 0.1, &theta0, &a.state_path[..4]);
        assert_eq!(replay, a.weights);
    }

    #[test]
    fn single_update_matches_hand_computation() {
        let model = e1();
        let theta = DMatrix::from_row_slice(1, 2, &[1.0, 3.0]);
        // s=0 -> s'=1: td_dir = 0.5*(-1) - 1 = -1.5; rewards (1, 0).
        let next = td_step(&model.mdp, model.net.weights(), 0.1, &theta, 0, 1);
        let d0 = -1.5 * 1.0 + 1.0;
        let d1 = -1.5 * 3.0;
        assert!((next[(0, 0)] - (2.0 + 0.1 * d0)).abs() < 1e-15);
        assert!((next[(0, 1)] - (2.0 + 0.1 * d1)).abs() < 1e-15);
    }

    #[test]
    fn enumeration_examples() {
        let model = e1();
        let theta0 = DMatrix::from_row_slice(1, 2, &[1.0, 3.0]);
        let d = enumerate_error(&model, 0.1, &theta0, 0).unwrap();
        assert!((d[0] - 5.0).abs() < 1e-15);
        let d = enumerate_error(&model, 0.1, &model.theta_star_block(), 1).unwrap();
        assert!((d[1] - 0.005).abs() < 1e-15);
        assert!(matches!(
            enumerate_error(&model, 0.1, &theta0, 19),
            Err(Error::PathBudget { .. })
        ));
    }

    #[test]
    fn enumeration_matches_moment_recursion() {
        for model in [e1(), e2()] {
            let theta0 = DMatrix::from_row_slice(1, 2, &[1.0, -0.5]);
            let exact = error_trajectory(&model, 0.1, &theta0, 6).unwrap();
            let brute = enumerate_error(&model, 0.1, &theta0, 6).unwrap();
            for (a, b) in exact.deltas.iter().zip(&brute) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn monte_carlo_zero_error_at_start() {
        let model = e1();
        let mc = monte_carlo_error(&model, 0.1, &model.theta_star_block(), 3, 100, 1).unwrap();
        assert_eq!(mc.deltas_hat[0], 0.0);
        assert_eq!(mc.stderrs[0], 0.0);
        assert!(mc.deltas_hat.iter().all(|&x| x >= 0.0));
        assert!(monte_carlo_error(&model, 0.1, &model.theta_star_block(), 3, 1, 1).is_err());
    }

    #[test]
    fn trial_streams_are_prefix_stable() {
        let model = e2();
        let theta0 = DMatrix::from_element(1, 2, 0.0);
        let small = trial_errors(&model, 0.1, &theta0, 10, 9, 3).unwrap();
        let again = trial_errors(&model, 0.1, &theta0, 10, 9, 3).unwrap();
        assert_eq!(small, again);
        let other = trial_errors(&model, 0.1, &theta0, 10, 9, 4).unwrap();
        assert_ne!(small, other);
        // Monte Carlo means are reproducible regardless of scheduling.
        let a = monte_carlo_error(&model, 0.1, &theta0, 10, 1000, 9).unwrap();
        let b = monte_carlo_error(&model, 0.1, &theta0, 10, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_iterate_follows_single_agent_td() {
        let model = e2();
        let theta0 = DMatrix::from_row_slice(1, 2, &[4.0, -1.0]);
        let run = run_td0(&model, 0.2, &theta0, 200, 5).unwrap();
        assert!(averaged_iterate_residual(&model, 0.2, &run).unwrap() <= 1e-12);
    }

    #[test]
    fn pure_consensus_contracts() {
        let model = e1();
        let theta0 = DMatrix::from_row_slice(1, 2, &[4.0, -1.0]);
        let run = run_td0(&model, 0.0, &theta0, 10, 5).unwrap();
        let spreads: Vec<f64> = run.weights.iter().map(consensus_spread).collect();
        assert!(spreads.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}

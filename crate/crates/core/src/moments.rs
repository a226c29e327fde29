//! Exact mode-conditioned moment recursion for the jump system.
//!
//! `q_i^k = E[ξ^k 1{z^k = i}]` and `Q_i^k = E[ξ^k ξ^kᵀ 1{z^k = i}]` evolve as
//!
//! ```text
//! q_j^{k+1} = Σ_i p_ij (H_i q_i^k + p_i^k G_i)
//! Q_j^{k+1} = Σ_i p_ij (H_i Q_i^k H_iᵀ + 2 sym(H_i q_i^k G_iᵀ) + p_i^k G_i G_iᵀ)
//! ```
//!
//! and the mean-squared error is `δ^k = (1/M) Σ_i trace(Q_i^k)`.

use nalgebra::{ComplexField, DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, unvec, vec_of};
use crate::mjls::{assemble_lti, drive_terms, LtiMoments, ModeSystem, DEFAULT_SIZE_GUARD};
use crate::model::{JumpChain, MeanDynamics, Model};
use crate::scalar::Real;

/// Any moment entry above this magnitude is reported as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Relative change in `δ` that ends the fixed-point steady-state iteration.
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 1_000_000;
/// Stability margin on the spectral radius of `H22`.
pub const STABILITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentState<T: Real> {
    pub step: usize,
    pub q: Vec<DVector<T>>,
    pub big_q: Vec<DMatrix<T>>,
    pub p_k: DVector<T>,
    pub num_agents: usize,
}

impl<T: Real> MomentState<T> {
    /// `δ^k = (1/M) Σ_i trace(Q_i^k)`.
    pub fn delta(&self) -> T {
        let tr = self.big_q.iter().fold(T::zero(), |a, q| a + q.trace());
        tr / T::lit(self.num_agents as f64)
    }

    /// `E[ξ^k] = Σ_i q_i^k`.
    pub fn mean(&self) -> DVector<T> {
        let d = self.q.first().map_or(0, |v| v.len());
        self.q.iter().fold(DVector::zeros(d), |a, v| a + v)
    }

    /// `E[ξ^k ξ^kᵀ] = Σ_i Q_i^k`.
    pub fn second_moment(&self) -> DMatrix<T> {
        let d = self.q.first().map_or(0, |v| v.len());
        self.big_q.iter().fold(DMatrix::zeros(d, d), |a, m| a + m)
    }

    pub fn stacked_q(&self) -> DVector<T> {
        let d = self.q.first().map_or(0, |v| v.len());
        DVector::from_iterator(
            self.q.len() * d,
            self.q.iter().flat_map(|v| v.iter().cloned()),
        )
    }

    /// `Q̂^k = [vec(Q_1); …; vec(Q_n)]`.
    pub fn stacked_q2(&self) -> DVector<T> {
        let d = self.q.first().map_or(0, |v| v.len());
        DVector::from_iterator(
            self.big_q.len() * d * d,
            self.big_q.iter().flat_map(|m| m.iter().cloned()),
        )
    }

    /// Smallest eigenvalue over all `Q_i^k`.
    pub fn min_eigenvalue(&self) -> T {
        self.big_q
            .iter()
            .map(linalg::min_symmetric_eigenvalue)
            .fold(T::zero(), |a, b| if b < a { b } else { a })
    }

    /// Largest asymmetry `max |Q_i − Q_iᵀ|` over modes.
    pub fn max_asymmetry(&self) -> T {
        self.big_q
            .iter()
            .map(|m| linalg::max_abs(&(m - m.transpose())))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    fn max_abs_entry(&self) -> Option<T> {
        let mut out = T::zero();
        for x in self
            .q
            .iter()
            .flat_map(|v| v.iter())
            .chain(self.big_q.iter().flat_map(|m| m.iter()))
        {
            if !x.is_finite_value() {
                return None;
            }
            let a = ComplexField::abs(*x);
            if a > out {
                out = a;
            }
        }
        Some(out)
    }
}

/// Moments of a deterministic start `Θ⁰`: `q_i⁰ = p_i⁰ ξ⁰`, `Q_i⁰ = p_i⁰ ξ⁰ξ⁰ᵀ`.
pub fn init_moments<T: Real>(
    theta0: &DMatrix<T>,
    dynamics: &MeanDynamics<T>,
    chain: &JumpChain<T>,
) -> Result<MomentState<T>> {
    let p = dynamics.theta_star.len();
    if theta0.nrows() != p || theta0.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "initial weights are {}x{}, expected {p}xM",
            theta0.nrows(),
            theta0.ncols()
        )));
    }
    let m_agents = theta0.ncols();
    let psi = DMatrix::from_fn(p, m_agents, |r, c| theta0[(r, c)] - dynamics.theta_star[r]);
    let xi = vec_of(&psi);
    let outer = &xi * xi.transpose();
    let p0 = chain.initial().clone();
    Ok(MomentState {
        step: 0,
        q: p0.iter().map(|&w| &xi * w).collect(),
        big_q: p0.iter().map(|&w| &outer * w).collect(),
        p_k: p0,
        num_agents: m_agents,
    })
}

/// One step of the mode-conditioned recursion.
pub fn step_moments<T: Real>(
    state: &MomentState<T>,
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
) -> Result<MomentState<T>> {
    let n = modes.num_modes();
    let d = modes.state_dim();
    if state.q.len() != n || state.big_q.len() != n || state.p_k.len() != n {
        return Err(Error::Dimension("moment state does not match the mode count".into()));
    }
    if state.q.iter().any(|v| v.len() != d) {
        return Err(Error::Dimension("moment state does not match the state dimension".into()));
    }
    let mut q = vec![DVector::zeros(d); n];
    let mut big_q = vec![DMatrix::zeros(d, d); n];
    for i in 0..n {
        let h = &modes.h_modes[i];
        let g = &modes.g_modes[i];
        let pi = state.p_k[i];
        let hq = h * &state.q[i];
        let mean_in = &hq + g * pi;
        let cross = &hq * g.transpose();
        let second_in =
            h * &state.big_q[i] * h.transpose() + &cross + cross.transpose() + g * g.transpose() * pi;
        for (j, p) in chain.successors(i) {
            q[j] += &mean_in * p;
            big_q[j] += &second_in * p;
        }
    }
    for m in big_q.iter_mut() {
        *m = linalg::sym(m);
    }
    let next = MomentState {
        step: state.step + 1,
        q,
        big_q,
        p_k: chain.propagate(&state.p_k),
        num_agents: state.num_agents,
    };
    match next.max_abs_entry() {
        Some(x) if x <= T::lit(DIVERGENCE_THRESHOLD) => Ok(next),
        _ => Err(Error::Diverged {
            step: next.step,
            sr_h22: None,
        }),
    }
}

/// `δ⁰ … δ^K` together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrajectory<T: Real> {
    pub deltas: Vec<T>,
    pub alpha: T,
    pub horizon: usize,
    pub fingerprint: String,
}

/// Fingerprint of `(scenario, α, Θ⁰)`.
pub fn run_fingerprint<T: Real>(model: &Model<T>, alpha: T, theta0: &DMatrix<T>) -> String {
    let mut h = Sha256::new();
    h.update(model.fingerprint().as_bytes());
    h.update(alpha.as_f64().to_le_bytes());
    for x in theta0.iter() {
        h.update(x.as_f64().to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Runs the recursion for `horizon` steps from `init`, returning every `δ^k`.
pub fn delta_sequence<T: Real>(
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    init: MomentState<T>,
    horizon: usize,
) -> Result<Vec<T>> {
    let mut deltas = Vec::with_capacity(horizon + 1);
    deltas.push(init.delta());
    let mut state = init;
    for _ in 0..horizon {
        state = step_moments(&state, modes, chain)?;
        deltas.push(state.delta());
    }
    Ok(deltas)
}

fn attach_spectral_radius<T: Real>(err: Error, modes: &ModeSystem<T>, chain: &JumpChain<T>) -> Error {
    match err {
        Error::Diverged { step, sr_h22: None } => {
            let lti = assemble_lti(modes, chain, DEFAULT_SIZE_GUARD);
            let sr = lti
                .blocks()
                .ok()
                .and_then(|b| linalg::spectral_radius(&b.h22).ok())
                .map(|s| s.as_f64());
            Error::Diverged { step, sr_h22: sr }
        }
        other => other,
    }
}

/// Exact finite-time error `δ^0 … δ^K` of decentralized TD(0).
pub fn error_trajectory<T: Real>(
    model: &Model<T>,
    alpha: T,
    theta0: &DMatrix<T>,
    horizon: usize,
) -> Result<ErrorTrajectory<T>> {
    let modes = model.modes(alpha)?;
    let init = init_moments(theta0, &model.dynamics, &model.chain)?;
    if init.num_agents != model.num_agents() {
        return Err(Error::Dimension(format!(
            "initial weights have {} columns, scenario has {} agents",
            init.num_agents,
            model.num_agents()
        )));
    }
    let deltas = delta_sequence(&modes, &model.chain, init, horizon)
        .map_err(|e| attach_spectral_radius(e, &modes, &model.chain))?;
    Ok(ErrorTrajectory {
        deltas,
        alpha,
        horizon,
        fingerprint: run_fingerprint(model, alpha, theta0),
    })
}

/// `δ^0 … δ^K` from the explicit lifted matrices, evaluating
/// `δ^k = C_δ H22^k Q̂⁰ + Σ_{t<k} C_δ H22^{k−1−t} (H21 q^t + u_Q^t)` with
/// `q^t = H11^t q⁰ + Σ_{s<t} H11^{t−1−s} u_q^s`.
pub fn closed_form_deltas<T: Real>(
    lti: &LtiMoments<T>,
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    init: &MomentState<T>,
    horizon: usize,
) -> Result<Vec<T>> {
    let b = lti.blocks()?;
    let c = lti.c_delta_row();
    let mut marginals = vec![init.p_k.clone()];
    for t in 0..horizon {
        let next = chain.propagate(&marginals[t]);
        marginals.push(next);
    }
    let drives = marginals
        .iter()
        .map(|p| drive_terms(modes, chain, p))
        .collect::<Result<Vec<_>>>()?;

    let pow_apply = |m: &DMatrix<T>, v: &DVector<T>, k: usize| (0..k).fold(v.clone(), |acc, _| m * acc);

    let q0 = init.stacked_q();
    let q_at: Vec<DVector<T>> = (0..horizon.max(1))
        .map(|t| {
            let mut q = pow_apply(&b.h11, &q0, t);
            for (s, d) in drives.iter().enumerate().take(t) {
                q += pow_apply(&b.h11, &d.0, t - 1 - s);
            }
            q
        })
        .collect();

    let qq0 = init.stacked_q2();
    Ok((0..=horizon)
        .map(|k| {
            let mut acc = c.dot(&pow_apply(&b.h22, &qq0, k));
            for t in 0..k {
                let forcing = &b.h21 * &q_at[t] + &drives[t].1;
                acc += c.dot(&pow_apply(&b.h22, &forcing, k - 1 - t));
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStateMethod {
    DirectSolve,
    FixedPoint { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<T: Real> {
    pub q_inf: DVector<T>,
    pub q2_inf: DVector<T>,
    pub delta_inf: T,
    pub method: SteadyStateMethod,
}

impl<T: Real> SteadyState<T> {
    /// `Σ_i q_i^∞`, the limiting mean of `ξ`.
    pub fn mean_error(&self, num_modes: usize) -> DVector<T> {
        let d = self.q_inf.len() / num_modes.max(1);
        (0..num_modes).fold(DVector::zeros(d), |a, i| a + self.q_inf.rows(i * d, d))
    }
}

/// Limits `q^∞`, `Q̂^∞`, `δ^∞`; direct solve when the explicit blocks exist,
/// fixed-point iteration otherwise.
pub fn steady_state<T: Real>(
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    lti: &LtiMoments<T>,
) -> Result<SteadyState<T>> {
    let Ok(b) = lti.blocks() else {
        return steady_state_fixed_point(modes, chain, lti);
    };
    let sr = linalg::spectral_radius(&b.h22)?;
    if sr >= T::one() - T::tol(STABILITY_MARGIN) {
        return Err(Error::Unstable { sr_h22: sr.as_f64() });
    }
    let (u_q, u_qq) = drive_terms(modes, chain, chain.stationary())?;
    let n1 = b.h11.nrows();
    let n2 = b.h22.nrows();
    let i_h11 = DMatrix::identity(n1, n1) - &b.h11;
    let q_inf = linalg::solve(&i_h11, &u_q, "I - H11")?;
    let rhs = &b.h21 * &q_inf + &u_qq;
    let i_h22 = DMatrix::identity(n2, n2) - &b.h22;
    let q2_inf = linalg::solve(&i_h22, &rhs, "I - H22")?;

    let tol = T::tol(1e-10);
    let r1 = linalg::max_abs_vec(&(&i_h11 * &q_inf - &u_q));
    let r2 = linalg::max_abs_vec(&(&i_h22 * &q2_inf - &rhs));
    if r1 > tol * T::one().max(linalg::max_abs_vec(&u_q))
        || r2 > tol * T::one().max(linalg::max_abs_vec(&rhs))
    {
        return Err(Error::CrossCheck(format!(
            "steady-state residuals {r1:e}, {r2:e}"
        )));
    }
    let delta_inf = lti.c_delta(&q2_inf);
    Ok(SteadyState {
        q_inf,
        q2_inf,
        delta_inf,
        method: SteadyStateMethod::DirectSolve,
    })
}

/// Iterates the lifted system with stationary drives from zero until `δ`
/// and the stacked state stop changing.
pub fn steady_state_fixed_point<T: Real>(
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    lti: &LtiMoments<T>,
) -> Result<SteadyState<T>> {
    let (u_q, u_qq) = drive_terms(modes, chain, chain.stationary())?;
    let mut q = DVector::zeros(lti.first_moment_len());
    let mut q2 = DVector::zeros(lti.second_moment_len());
    let mut delta = T::zero();
    let tol = T::tol(FIXED_POINT_TOL);
    let tiny = T::zero();
    for it in 1..=FIXED_POINT_MAX_ITER {
        let q_next = lti.apply_h11(&q) + &u_q;
        let q2_next = lti.apply_h22(&q2) + lti.apply_h21(&q) + &u_qq;
        let delta_next = lti.c_delta(&q2_next);

        let scale = linalg::max_abs_vec(&q_next).max(linalg::max_abs_vec(&q2_next));
        if !scale.is_finite_value() || scale > T::lit(DIVERGENCE_THRESHOLD) {
            return Err(Error::Diverged {
                step: it,
                sr_h22: None,
            });
        }
        let change = linalg::max_abs_vec(&(&q_next - &q)).max(linalg::max_abs_vec(&(&q2_next - &q2)));
        let d_change = ComplexField::abs(delta_next - delta);
        q = q_next;
        q2 = q2_next;
        delta = delta_next;
        if d_change <= tol * ComplexField::abs(delta).max(tiny) && change <= tol * scale.max(tiny) {
            return Ok(SteadyState {
                q_inf: q,
                q2_inf: q2,
                delta_inf: delta,
                method: SteadyStateMethod::FixedPoint { iterations: it },
            });
        }
    }
    Err(Error::InsufficientData(format!(
        "fixed-point iteration did not settle within {FIXED_POINT_MAX_ITER} iterations"
    )))
}

/// Least-squares fit of `log|δ^k − δ^∞| ≈ log C + k log ρ` over the tail window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEnvelope<T: Real> {
    pub rate: T,
    pub constant: T,
    pub window: (usize, usize),
    pub samples: usize,
}

pub const MIN_RATE_SAMPLES: usize = 5;

/// Fits the decay rate of `|δ^k − δ^∞|`.
///
/// The window starts at the first `k` whose gap is below 10% of the initial
/// gap and ends at the last `k` whose gap exceeds `1e-12`; exact zeros are
/// skipped.
pub fn fit_rate<T: Real>(deltas: &[T], delta_inf: T) -> Result<RateEnvelope<T>> {
    let gaps: Vec<f64> = deltas
        .iter()
        .map(|&d| (d - delta_inf).as_f64().abs())
        .collect();
    let Some(&last) = gaps.last() else {
        return Err(Error::InsufficientData("empty trajectory".into()));
    };
    let d0 = deltas[0].as_f64().abs();
    if last >= 1e-6 * d0.max(1.0) {
        return Err(Error::InsufficientData(format!(
            "trajectory has not converged: final gap {last:e}"
        )));
    }
    let g0 = gaps[0];
    let start = gaps.iter().position(|&g| g < 0.1 * g0);
    let end = gaps.iter().rposition(|&g| g > 1e-12);
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Error::InsufficientData("no decaying tail to fit".into()));
    };
    let pts: Vec<(f64, f64)> = (start..=end.max(start))
        .filter(|&k| k <= end && gaps[k] > 0.0)
        .map(|k| (k as f64, gaps[k].ln()))
        .collect();
    if pts.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable samples in the tail window (need {MIN_RATE_SAMPLES})",
            pts.len()
        )));
    }
    let (slope, intercept) = least_squares_line(&pts);
    Ok(RateEnvelope {
        rate: T::lit(slope.exp()),
        constant: T::lit(intercept.exp()),
        window: (start, end),
        samples: pts.len(),
    })
}

pub fn rate_envelope<T: Real>(traj: &ErrorTrajectory<T>, ss: &SteadyState<T>) -> Result<RateEnvelope<T>> {
    fit_rate(&traj.deltas, ss.delta_inf)
}

pub(crate) fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Maps a stacked second-moment vector back to per-mode matrices.
pub fn unstack_q2<T: Real>(q2: &DVector<T>, num_modes: usize) -> Vec<DMatrix<T>> {
    let d = ((q2.len() / num_modes.max(1)) as f64).sqrt().round() as usize;
    (0..num_modes)
        .map(|i| unvec(&q2.rows(i * d * d, d * d).into_owned(), d, d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::{e1, e2};

    fn ones(model: &Model<f64>) -> DMatrix<f64> {
        DMatrix::from_element(model.feature_dim(), model.num_agents(), 1.0)
    }

    #[test]
    fn init_examples() {
        let model = e1();
        let s = init_moments(&model.theta_star_block(), &model.dynamics, &model.chain).unwrap();
        assert_eq!(s.delta(), 0.0);
        assert!(s.q.iter().all(|v| v.iter().all(|&x| x == 0.0)));

        let s = init_moments(&ones(&model), &model.dynamics, &model.chain).unwrap();
        assert!((s.delta() - 1.0).abs() < 1e-15);
        let half = DMatrix::from_element(2, 2, 0.5);
        assert!((&s.big_q[0] - &half).amax() < 1e-15);
        assert!(s.big_q[2].iter().all(|&x| x == 0.0));
        assert!(s.big_q[3].iter().all(|&x| x == 0.0));

        assert!(init_moments(&DMatrix::zeros(2, 2), &model.dynamics, &model.chain).is_err());
    }

    #[test]
    fn one_step_from_fixed_point() {
        let model = e1();
        let t = error_trajectory(&model, 0.1, &model.theta_star_block(), 1).unwrap();
        assert_eq!(t.deltas.len(), 2);
        assert_eq!(t.deltas[0], 0.0);
        assert!((t.deltas[1] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn pure_consensus_at_consensual_point_is_constant() {
        let model = e2();
        let theta0 = DMatrix::from_element(1, 2, -0.7);
        let t = error_trajectory(&model, 0.0, &theta0, 50).unwrap();
        for d in &t.deltas {
            assert!((d - t.deltas[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_start_sums_to_mean_drive() {
        let model = e2();
        let modes = model.modes(0.1).unwrap();
        let chain = model.chain.with_initial(model.chain.stationary().clone()).unwrap();
        let init = init_moments(&model.theta_star_block(), &model.dynamics, &chain).unwrap();
        let next = step_moments(&init, &modes, &chain).unwrap();
        let mut expect = DVector::zeros(2);
        for i in 0..4 {
            expect += &modes.g_modes[i] * chain.stationary()[i];
        }
        assert!((next.mean() - expect).amax() < 1e-14);
    }

    #[test]
    fn recursion_matches_closed_form() {
        for model in [e1(), e2()] {
            let modes = model.modes(0.1).unwrap();
            let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
            let init = init_moments(&ones(&model), &model.dynamics, &model.chain).unwrap();
            let rec = delta_sequence(&modes, &model.chain, init.clone(), 12).unwrap();
            let closed = closed_form_deltas(&lti, &modes, &model.chain, &init, 12).unwrap();
            for (a, b) in rec.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn psd_and_symmetry_preserved() {
        let model = e2();
        let modes = model.modes(0.1).unwrap();
        let mut s = init_moments(&ones(&model), &model.dynamics, &model.chain).unwrap();
        for _ in 0..200 {
            s = step_moments(&s, &modes, &model.chain).unwrap();
            assert!(s.min_eigenvalue() >= -1e-10);
            assert_eq!(s.max_asymmetry(), 0.0);
            assert!((s.p_k.sum() - 1.0).abs() < 1e-12);
            assert!(linalg::min_symmetric_eigenvalue(&s.second_moment()) >= -1e-10);
        }
    }

    #[test]
    fn steady_state_examples() {
        let model = e1();
        let modes = model.modes(0.1).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        let ss = steady_state(&modes, &model.chain, &lti).unwrap();
        assert_eq!(ss.method, SteadyStateMethod::DirectSolve);
        assert!(ss.delta_inf > 0.0);
        let t = error_trajectory(&model, 0.1, &ones(&model), 2000).unwrap();
        assert!((t.deltas[2000] - ss.delta_inf).abs() < 1e-8);

        let fp = steady_state_fixed_point(&modes, &model.chain, &lti).unwrap();
        assert!((fp.delta_inf - ss.delta_inf).abs() < 1e-10);

        let op = assemble_lti(&modes, &model.chain, 1);
        let via_op = steady_state(&modes, &model.chain, &op).unwrap();
        assert!(matches!(via_op.method, SteadyStateMethod::FixedPoint { .. }));
    }

    #[test]
    fn zero_step_steady_state_is_unstable() {
        let model = e1();
        let modes = model.modes(0.0).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        assert!(matches!(
            steady_state(&modes, &model.chain, &lti),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn unforced_system_has_zero_steady_error() {
        let (mdp, net, mu) = crate::model::testutil::scenario(&[1.0, 2.0], 0.0, 0.0);
        let model = Model::new(mdp, net, mu).unwrap();
        let modes = model.modes(0.1).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        let ss = steady_state(&modes, &model.chain, &lti).unwrap();
        assert_eq!(ss.delta_inf, 0.0);
        let t = error_trajectory(&model, 0.1, &model.theta_star_block(), 10).unwrap();
        assert!(t.deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let model = e1();
        match error_trajectory(&model, 3.0, &ones(&model), 100_000) {
            Err(Error::Diverged { step, sr_h22 }) => {
                assert!(step > 0);
                assert!(sr_h22.unwrap() > 1.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn geometric_sequence_rate() {
        let deltas: Vec<f64> = (0..=200).map(|k| 3.0 * 0.9f64.powi(k) + 5.0).collect();
        let env = fit_rate(&deltas, 5.0).unwrap();
        assert!((env.rate - 0.9).abs() < 1e-6, "{}", env.rate);
        assert!(env.samples >= 5);
    }

    #[test]
    fn constant_trajectory_has_insufficient_data() {
        let deltas = vec![2.0; 50];
        assert!(matches!(fit_rate(&deltas, 2.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unconverged_trajectory_is_rejected() {
        let deltas: Vec<f64> = (0..=10).map(|k| 0.9f64.powi(k)).collect();
        assert!(matches!(fit_rate(&deltas, 0.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn single_precision_trajectory() {
        let m64 = e1();
        let m32 = Model::new(
            m64.mdp.cast::<f32>(),
            m64.net.cast::<f32>(),
            DVector::from_vec(vec![1.0f32, 0.0]),
        )
        .unwrap();
        let t32 = error_trajectory(&m32, 0.1, &DMatrix::from_element(1, 2, 1.0f32), 30).unwrap();
        let t64 = error_trajectory(&m64, 0.1, &ones(&m64), 30).unwrap();
        for (a, b) in t32.deltas.iter().zip(&t64.deltas) {
            assert!((*a as f64 - b).abs() < 1e-5);
        }
    }
}

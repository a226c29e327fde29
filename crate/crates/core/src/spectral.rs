//! Spectral radii of the lifted system, first-order small-step predictions
//! and step-size sweeps.

use nalgebra::ComplexField;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mjls::{assemble_lti, LtiMoments};
use crate::model::{JumpChain, MeanDynamics, Model};
use crate::moments::{steady_state, STABILITY_MARGIN};
use crate::scalar::Real;

/// Relative tolerance for the first-order slope checks at the smallest step.
pub const PERTURBATION_REL_TOL: f64 = 0.05;
/// Accepted range of the log-log slope of `δ^∞` against `α`.
pub const ORDER_ONE_SLOPE: (f64, f64) = (0.9, 1.1);
pub const DEFAULT_GRID_POINTS: usize = 5;
pub const DEFAULT_GRID_RATIO: f64 = 0.5;
/// Bisection stops once `|σ(H22) − 1|` is at most this.
pub const CRITICAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport<T: Real> {
    pub alpha: T,
    pub sr_h11: T,
    pub sr_h22: T,
    /// Second-largest eigenvalue modulus of the jump chain.
    pub mixing: T,
    /// `max(sr_h11, sr_h22, mixing)`.
    pub rate: T,
    pub stable: bool,
    pub pred_sr_h11: T,
    pub pred_sr_h22: T,
}

pub fn is_stable<T: Real>(sr_h22: T) -> bool {
    sr_h22 < T::one() - T::tol(STABILITY_MARGIN)
}

/// `(1 + α Re λ, 1 + 2α Re λ)` with `λ` the eigenvalue of `Ā` of largest real part.
pub fn perturb_predict<T: Real>(dynamics: &MeanDynamics<T>, alpha: T) -> (T, T) {
    let re = dynamics.max_real_eigenvalue;
    (T::one() + alpha * re, T::one() + (alpha + alpha) * re)
}

pub fn spectrum_report<T: Real>(
    lti: &LtiMoments<T>,
    chain: &JumpChain<T>,
    dynamics: &MeanDynamics<T>,
    alpha: T,
) -> Result<SpectralReport<T>> {
    let b = lti.blocks()?;
    let sr_h11 = linalg::spectral_radius(&b.h11)?;
    let sr_h22 = linalg::spectral_radius(&b.h22)?;
    let mixing = chain.mixing_rate();
    let (pred_sr_h11, pred_sr_h22) = perturb_predict(dynamics, alpha);
    Ok(SpectralReport {
        alpha,
        sr_h11,
        sr_h22,
        mixing,
        rate: sr_h11.max(sr_h22).max(mixing),
        stable: is_stable(sr_h22),
        pred_sr_h11,
        pred_sr_h22,
    })
}

impl<T: Real> Model<T> {
    pub fn spectrum(&self, alpha: T, size_guard: usize) -> Result<SpectralReport<T>> {
        let modes = self.modes(alpha)?;
        let lti = assemble_lti(&modes, &self.chain, size_guard);
        spectrum_report(&lti, &self.chain, &self.dynamics, alpha)
    }
}

/// Geometric grid `α, rα, r²α, …` with `points` entries.
pub fn geometric_grid(alpha: f64, points: usize, ratio: f64) -> Vec<f64> {
    (0..points).map(|i| alpha * ratio.powi(i as i32)).collect()
}

pub fn default_grid(alpha: f64) -> Vec<f64> {
    geometric_grid(alpha, DEFAULT_GRID_POINTS, DEFAULT_GRID_RATIO)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T: Real> {
    pub report: SpectralReport<T>,
    /// `None` for unstable points.
    pub delta_inf: Option<T>,
    pub q_inf_norm: Option<T>,
    pub q2_inf_norm: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSweep<T: Real> {
    pub points: Vec<SweepPoint<T>>,
    pub max_real_eigenvalue: T,
    /// Log-log slope of `δ^∞` against `α` over the three smallest stable steps.
    pub delta_slope: Option<f64>,
    /// `(σ(H22) − 1)/α` at the smallest stable step.
    pub h22_slope: f64,
    /// `(σ(H11) − 1)/α` at the smallest stable step.
    pub h11_slope: f64,
    /// Grid indices that are unstable although a larger step was stable.
    pub onset_violations: Vec<usize>,
}

impl<T: Real> PerturbationSweep<T> {
    pub fn stable_points(&self) -> impl Iterator<Item = &SweepPoint<T>> {
        self.points.iter().filter(|p| p.report.stable)
    }

    pub fn delta_slope_ok(&self) -> bool {
        self.delta_slope
            .is_some_and(|s| s >= ORDER_ONE_SLOPE.0 && s <= ORDER_ONE_SLOPE.1)
    }

    pub fn h22_slope_ok(&self) -> bool {
        within_rel(self.h22_slope, 2.0 * self.max_real_eigenvalue.as_f64(), PERTURBATION_REL_TOL)
    }

    pub fn h11_slope_ok(&self) -> bool {
        within_rel(self.h11_slope, self.max_real_eigenvalue.as_f64(), PERTURBATION_REL_TOL)
    }

    pub fn monotone_onset(&self) -> bool {
        self.onset_violations.is_empty()
    }
}

pub fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn sweep_point<T: Real>(model: &Model<T>, alpha: T, size_guard: usize) -> Result<SweepPoint<T>> {
    let modes = model.modes(alpha)?;
    let lti = assemble_lti(&modes, &model.chain, size_guard);
    let report = spectrum_report(&lti, &model.chain, &model.dynamics, alpha)?;
    if !report.stable {
        return Ok(SweepPoint {
            report,
            delta_inf: None,
            q_inf_norm: None,
            q2_inf_norm: None,
        });
    }
    let ss = steady_state(&modes, &model.chain, &lti)?;
    Ok(SweepPoint {
        report,
        delta_inf: Some(ss.delta_inf),
        q_inf_norm: Some(ss.q_inf.norm()),
        q2_inf_norm: Some(ss.q2_inf.norm()),
    })
}

/// Exact spectra and steady states over a strictly decreasing positive grid.
/// Unstable steps are kept in `points` but excluded from every fit.
pub fn alpha_sweep<T: Real>(
    model: &Model<T>,
    alphas: &[T],
    size_guard: usize,
) -> Result<PerturbationSweep<T>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty step-size grid".into()));
    }
    if alphas.iter().any(|&a| a <= T::zero() || !a.is_finite_value()) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "step-size grid must be strictly decreasing".into(),
        ));
    }
    let points: Vec<SweepPoint<T>> = alphas
        .par_iter()
        .map(|&a| sweep_point(model, a, size_guard))
        .collect::<Result<_>>()?;

    let stable: Vec<&SweepPoint<T>> = points.iter().filter(|p| p.report.stable).collect();
    let Some(smallest) = stable.last() else {
        return Err(Error::InsufficientData("no stable step size in the grid".into()));
    };
    let a_min = smallest.report.alpha.as_f64();
    let h22_slope = (smallest.report.sr_h22.as_f64() - 1.0) / a_min;
    let h11_slope = (smallest.report.sr_h11.as_f64() - 1.0) / a_min;

    let tail: Vec<(f64, f64)> = stable
        .iter()
        .rev()
        .take(3)
        .filter_map(|p| {
            let d = p.delta_inf?.as_f64();
            (d > 0.0).then(|| (p.report.alpha.as_f64().ln(), d.ln()))
        })
        .collect();
    let delta_slope = (tail.len() >= 2).then(|| crate::moments::least_squares_line(&tail).0);

    let first_stable = points.iter().position(|p| p.report.stable);
    let onset_violations = match first_stable {
        Some(f) => (f..points.len()).filter(|&i| !points[i].report.stable).collect(),
        None => Vec::new(),
    };

    Ok(PerturbationSweep {
        points,
        max_real_eigenvalue: model.dynamics.max_real_eigenvalue,
        delta_slope,
        h22_slope,
        h11_slope,
        onset_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalStep {
    pub alpha: f64,
    pub sr_h22: f64,
    pub iterations: usize,
}

/// Bisection for `σ(H22)(α) = 1` on `[lo, hi]`; requires `lo` stable and `hi`
/// unstable.
pub fn critical_step_size<T: Real>(
    model: &Model<T>,
    lo: T,
    hi: T,
    size_guard: usize,
) -> Result<CriticalStep> {
    let sr = |a: T| -> Result<f64> { Ok(model.spectrum(a, size_guard)?.sr_h22.as_f64()) };
    let (mut lo, mut hi) = (lo, hi);
    let (s_lo, s_hi) = (sr(lo)?, sr(hi)?);
    if !(s_lo < 1.0 && s_hi > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bracket does not straddle the boundary: sr(lo)={s_lo}, sr(hi)={s_hi}"
        )));
    }
    let two = T::lit(2.0);
    for it in 1..=200 {
        let mid = (lo + hi) / two;
        let s = sr(mid)?;
        if ComplexField::abs(s - 1.0) <= CRITICAL_TOL {
            return Ok(CriticalStep {
                alpha: mid.as_f64(),
                sr_h22: s,
                iterations: it,
            });
        }
        if s < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::default_epsilon() * hi {
            break;
        }
    }
    Err(Error::InsufficientData(
        "bisection did not reach the boundary tolerance".into(),
    ))
}

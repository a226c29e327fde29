//! Multi-agent MDP, communication network, the pair-state jump chain and the
//! mean TD dynamics.
//!
//! Modes of the jump chain enumerate consecutive state pairs `(s, s')` in
//! row-major order: mode `i` is `(i / |S|, i % |S|)`.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{ComplexField, DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Row sums and column sums must match one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Relative singular-value cutoff for the feature rank test.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues with modulus above `1 - UNIT_MODULUS_TOL` count as unit modulus.
pub const UNIT_MODULUS_TOL: f64 = 1e-10;
/// Strict margin for the Hurwitz test on the mean dynamics matrix.
pub const HURWITZ_MARGIN: f64 = 1e-12;

/// Finite-state Markov reward process seen by `M` agents under fixed local
/// policies, together with a linear feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAgentMdp<T: Real> {
    transition: DMatrix<T>,
    rewards: Vec<DMatrix<T>>,
    discount: T,
    features: DMatrix<T>,
}

impl<T: Real> MultiAgentMdp<T> {
    /// Checks shapes and finiteness only; the probabilistic invariants are
    /// reported by [`validate_scenario`].
    pub fn new(
        transition: DMatrix<T>,
        rewards: Vec<DMatrix<T>>,
        discount: T,
        features: DMatrix<T>,
    ) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || transition.ncols() != n {
            return Err(Error::Dimension(format!(
                "transition must be a non-empty square matrix, got {}x{}",
                n,
                transition.ncols()
            )));
        }
        if rewards.is_empty() {
            return Err(Error::Dimension("at least one reward table is required".into()));
        }
        for (m, r) in rewards.iter().enumerate() {
            if r.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "reward table {m} is {}x{}, expected {n}x{n}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            if !linalg::all_finite(r) {
                return Err(Error::NonFinite(format!("reward table {m}")));
            }
        }
        if features.nrows() != n || features.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "features must be {n}xp with p >= 1, got {}x{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if !linalg::all_finite(&transition) {
            return Err(Error::NonFinite("transition".into()));
        }
        if !linalg::all_finite(&features) {
            return Err(Error::NonFinite("features".into()));
        }
        if !discount.is_finite_value() {
            return Err(Error::NonFinite("discount".into()));
        }
        Ok(Self {
            transition,
            rewards,
            discount,
            features,
        })
    }

    pub fn num_states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn num_agents(&self) -> usize {
        self.rewards.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn transition(&self) -> &DMatrix<T> {
        &self.transition
    }

    pub fn rewards(&self) -> &[DMatrix<T>] {
        &self.rewards
    }

    pub fn reward(&self, agent: usize, s: usize, s_next: usize) -> T {
        self.rewards[agent][(s, s_next)]
    }

    pub fn discount(&self) -> T {
        self.discount
    }

    pub fn features(&self) -> &DMatrix<T> {
        &self.features
    }

    /// Feature vector `φ(s)` as a column.
    pub fn feature(&self, s: usize) -> DVector<T> {
        self.features.row(s).transpose()
    }

    pub fn cast<U: Real>(&self) -> MultiAgentMdp<U> {
        let c = |m: &DMatrix<T>| m.map(|x| U::lit(x.as_f64()));
        MultiAgentMdp {
            transition: c(&self.transition),
            rewards: self.rewards.iter().map(c).collect(),
            discount: U::lit(self.discount.as_f64()),
            features: c(&self.features),
        }
    }
}

/// Consensus weights `W` over `M` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct CommNetwork<T: Real> {
    weights: DMatrix<T>,
}

impl<T: Real> CommNetwork<T> {
    pub fn new(weights: DMatrix<T>) -> Result<Self> {
        if weights.nrows() == 0 || weights.nrows() != weights.ncols() {
            return Err(Error::Dimension(format!(
                "network weights must be a non-empty square matrix, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if !linalg::all_finite(&weights) {
            return Err(Error::NonFinite("network weights".into()));
        }
        Ok(Self { weights })
    }

    pub fn num_agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    pub fn cast<U: Real>(&self) -> CommNetwork<U> {
        CommNetwork {
            weights: self.weights.map(|x| U::lit(x.as_f64())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub message: String,
}

/// Pass/fail outcome of every scenario invariant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, name: &'static str, passed: bool, message: impl Into<String>) {
        self.checks.push(Check {
            name,
            passed,
            message: message.into(),
        });
    }

    pub fn is_accepted(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.message)?;
        }
        Ok(())
    }
}

fn support_reaches_all<T: Real>(m: &DMatrix<T>, transpose: bool) -> bool {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let w = if transpose { m[(v, u)] } else { m[(u, v)] };
            if w > T::zero() && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

fn unit_modulus_count<T: Real>(p: &DMatrix<T>) -> Result<usize> {
    let cut = T::one() - T::tol(UNIT_MODULUS_TOL);
    Ok(linalg::sorted_moduli(p)?.into_iter().filter(|&x| x >= cut).count())
}

/// Evaluates every invariant of the MDP and the network.
///
/// Structural problems (mismatched agent counts) are errors; invariant
/// violations are reported as failed checks.
pub fn validate_scenario<T: Real>(
    mdp: &MultiAgentMdp<T>,
    net: &CommNetwork<T>,
) -> Result<ValidationReport> {
    if mdp.num_agents() != net.num_agents() {
        return Err(Error::Dimension(format!(
            "{} reward tables but network has {} agents",
            mdp.num_agents(),
            net.num_agents()
        )));
    }
    let mut report = ValidationReport::default();
    let tol = T::tol(STOCHASTIC_TOL);
    let p = mdp.transition();
    let n = mdp.num_states();

    let negatives: Vec<String> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| p[(i, j)] < T::zero())
        .map(|(i, j)| format!("({i},{j})"))
        .collect();
    report.push(
        "transition nonnegative",
        negatives.is_empty(),
        if negatives.is_empty() {
            "all entries >= 0".to_string()
        } else {
            format!("negative entries at {}", negatives.join(", "))
        },
    );

    let bad_rows: Vec<String> = (0..n)
        .filter_map(|i| {
            let s = p.row(i).sum();
            (ComplexField::abs(s - T::one()) > tol).then(|| format!("row {i} sums to {s}"))
        })
        .collect();
    report.push(
        "transition row-stochastic",
        bad_rows.is_empty(),
        if bad_rows.is_empty() {
            "every row sums to 1".to_string()
        } else {
            bad_rows.join("; ")
        },
    );

    let irreducible = support_reaches_all(p, false) && support_reaches_all(p, true);
    report.push(
        "transition irreducible",
        irreducible,
        if irreducible {
            "support graph strongly connected"
        } else {
            "support graph not strongly connected"
        },
    );

    match unit_modulus_count(p) {
        Ok(1) => report.push("aperiodic", true, "unique eigenvalue of modulus 1"),
        Ok(k) => report.push(
            "aperiodic",
            false,
            format!("{k} eigenvalues of modulus 1 (need exactly one)"),
        ),
        Err(e) => report.push("aperiodic", false, e.to_string()),
    }

    let g = mdp.discount();
    let discount_ok = g > T::zero() && g < T::one();
    report.push("discount in (0,1)", discount_ok, format!("gamma = {g}"));

    let rank = linalg::numerical_rank(mdp.features(), T::tol(RANK_TOL));
    report.push(
        "features full column rank",
        rank == mdp.feature_dim(),
        format!("rank {rank} of {} columns", mdp.feature_dim()),
    );

    let w = net.weights();
    let m = net.num_agents();
    let in_range = w.iter().all(|&x| x >= T::zero() && x <= T::one());
    report.push(
        "network weights in [0,1]",
        in_range,
        if in_range {
            "all weights in [0,1]"
        } else {
            "weight outside [0,1]"
        },
    );

    let mut ds_errors = Vec::new();
    for i in 0..m {
        let rs = w.row(i).sum();
        if ComplexField::abs(rs - T::one()) > tol {
            ds_errors.push(format!("row {i} sums to {rs}"));
        }
        let cs = w.column(i).sum();
        if ComplexField::abs(cs - T::one()) > tol {
            ds_errors.push(format!("column {i} sums to {cs}"));
        }
    }
    report.push(
        "network doubly stochastic",
        ds_errors.is_empty(),
        if ds_errors.is_empty() {
            "all row and column sums equal 1".to_string()
        } else {
            ds_errors.join("; ")
        },
    );

    let undirected = DMatrix::from_fn(m, m, |i, j| {
        if i != j && (w[(i, j)] > T::zero() || w[(j, i)] > T::zero()) {
            T::one()
        } else {
            T::zero()
        }
    });
    let connected = support_reaches_all(&undirected, false);
    report.push(
        "network connected",
        connected,
        if connected {
            "communication graph connected"
        } else {
            "communication graph disconnected"
        },
    );

    Ok(report)
}

/// Checks that `mu` is a probability vector of the given length.
pub fn check_distribution<T: Real>(mu: &DVector<T>, len: usize, what: &str) -> Result<()> {
    if mu.len() != len {
        return Err(Error::Dimension(format!(
            "{what} has length {}, expected {len}",
            mu.len()
        )));
    }
    if mu.iter().any(|x| !x.is_finite_value()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    if mu.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidArgument(format!("{what} has negative entries")));
    }
    if ComplexField::abs(mu.sum() - T::one()) > T::tol(STOCHASTIC_TOL) {
        return Err(Error::InvalidArgument(format!(
            "{what} sums to {}, expected 1",
            mu.sum()
        )));
    }
    Ok(())
}

/// Normalized left null vector of `P - I` (eigenvector of `Pᵀ` for eigenvalue 1).
fn left_unit_eigenvector<T: Real>(p: &DMatrix<T>) -> Result<DVector<T>> {
    let n = p.nrows();
    let m = p.transpose() - DMatrix::identity(n, n);
    let v = linalg::null_vector(&m)?;
    let s = v.sum();
    if ComplexField::abs(s) <= T::default_epsilon() {
        return Err(Error::NotErgodic("eigenvector for eigenvalue 1 sums to zero".into()));
    }
    Ok(v / s)
}

fn stationarity_residual<T: Real>(p: &DMatrix<T>, pi: &DVector<T>) -> T {
    linalg::max_abs_vec(&(p.transpose() * pi - pi))
}

/// Unique stationary distribution `π` with `πᵀP = πᵀ`.
pub fn stationary_distribution<T: Real>(p: &DMatrix<T>) -> Result<DVector<T>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::Dimension("stationary distribution needs a square matrix".into()));
    }
    if !linalg::all_finite(p) {
        return Err(Error::NonFinite("transition".into()));
    }
    let k = unit_modulus_count(p)?;
    if k != 1 {
        return Err(Error::NotErgodic(format!("{k} eigenvalues of modulus 1")));
    }
    let pi = left_unit_eigenvector(p)?;
    if pi.iter().any(|&x| x <= T::tol(STOCHASTIC_TOL)) {
        return Err(Error::NotErgodic(
            "stationary distribution has non-positive entries".into(),
        ));
    }
    let res = stationarity_residual(p, &pi);
    if res > T::tol(STOCHASTIC_TOL) {
        return Err(Error::CrossCheck(format!("stationarity residual {res:e}")));
    }
    Ok(pi)
}

/// Markov chain of consecutive state pairs `z^k = (s^k, s^{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChain<T: Real> {
    num_states: usize,
    transition: DMatrix<T>,
    initial: DVector<T>,
    stationary: DVector<T>,
    state_stationary: DVector<T>,
    mixing_rate: T,
}

impl<T: Real> JumpChain<T> {
    pub fn num_modes(&self) -> usize {
        self.num_states * self.num_states
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn mode_of(&self, s: usize, s_next: usize) -> usize {
        s * self.num_states + s_next
    }

    /// `(s_cur, s_next)` encoded by mode `i`.
    pub fn pair_of(&self, mode: usize) -> (usize, usize) {
        (mode / self.num_states, mode % self.num_states)
    }

    /// `P_z` with entries `p_ij`.
    pub fn transition(&self) -> &DMatrix<T> {
        &self.transition
    }

    pub fn initial(&self) -> &DVector<T> {
        &self.initial
    }

    pub fn stationary(&self) -> &DVector<T> {
        &self.stationary
    }

    /// Stationary distribution `π` of the underlying state chain.
    pub fn state_stationary(&self) -> &DVector<T> {
        &self.state_stationary
    }

    /// Second-largest eigenvalue modulus of `P_z`.
    pub fn mixing_rate(&self) -> T {
        self.mixing_rate
    }

    /// One step of the mode marginal: `P_zᵀ p`.
    pub fn propagate(&self, p: &DVector<T>) -> DVector<T> {
        self.transition.tr_mul(p)
    }

    /// Modes reachable in one step from `mode`, with their probabilities.
    pub fn successors(&self, mode: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (_, s_next) = self.pair_of(mode);
        (0..self.num_states).filter_map(move |t| {
            let j = self.mode_of(s_next, t);
            let p = self.transition[(mode, j)];
            (p > T::zero()).then_some((j, p))
        })
    }

    /// Same chain with a different initial mode distribution.
    pub fn with_initial(&self, initial: DVector<T>) -> Result<Self> {
        check_distribution(&initial, self.num_modes(), "initial mode distribution")?;
        Ok(Self {
            initial,
            ..self.clone()
        })
    }
}

pub fn pair_transition<T: Real>(p: &DMatrix<T>) -> DMatrix<T> {
    let ns = p.nrows();
    let n = ns * ns;
    let mut pz = DMatrix::zeros(n, n);
    for s in 0..ns {
        for s_next in 0..ns {
            let i = s * ns + s_next;
            for t in 0..ns {
                pz[(i, s_next * ns + t)] = p[(s_next, t)];
            }
        }
    }
    pz
}

/// Builds the pair-state jump chain from the MDP and the law `μ0` of `s⁰`.
pub fn build_jump_chain<T: Real>(
    mdp: &MultiAgentMdp<T>,
    initial_state_dist: &DVector<T>,
) -> Result<JumpChain<T>> {
    let ns = mdp.num_states();
    check_distribution(initial_state_dist, ns, "initial state distribution")?;
    let p = mdp.transition();
    let pi = stationary_distribution(p)?;
    let pz = pair_transition(p);
    let n = ns * ns;

    let initial = DVector::from_fn(n, |i, _| initial_state_dist[i / ns] * p[(i / ns, i % ns)]);
    let product = DVector::from_fn(n, |i, _| pi[i / ns] * p[(i / ns, i % ns)]);

    let stationary = left_unit_eigenvector(&pz)?;
    let gap = linalg::max_abs_vec(&(&stationary - &product));
    if gap > T::tol(1e-10) {
        return Err(Error::CrossCheck(format!(
            "pair-chain stationary vector differs from pi(s)P(s,s') by {gap:e}"
        )));
    }
    let res = stationarity_residual(&pz, &stationary);
    if res > T::tol(STOCHASTIC_TOL) {
        return Err(Error::CrossCheck(format!(
            "pair-chain stationarity residual {res:e}"
        )));
    }

    // The nonzero spectrum of P_z coincides with that of P (P_z = R C with
    // C R = P), so the second modulus is read off the smaller matrix.
    let mixing_rate = if ns == 1 {
        T::zero()
    } else {
        linalg::sorted_moduli(p)?[1]
    };
    if mixing_rate >= T::one() {
        return Err(Error::NotErgodic(format!("mixing rate {mixing_rate} >= 1")));
    }

    Ok(JumpChain {
        num_states: ns,
        transition: pz,
        initial,
        stationary,
        state_stationary: pi,
        mixing_rate,
    })
}

/// `A_i = φ(s)(γφ(s') − φ(s))ᵀ` and `B_i = [R_1(s,s')φ(s) … R_M(s,s')φ(s)]`.
pub fn mode_matrices<T: Real>(
    mdp: &MultiAgentMdp<T>,
    mode: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let ns = mdp.num_states();
    if mode >= ns * ns {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} out of range for {} modes",
            ns * ns
        )));
    }
    let (s, s_next) = (mode / ns, mode % ns);
    let phi = mdp.feature(s);
    let td_dir = mdp.feature(s_next) * mdp.discount() - &phi;
    let a = &phi * td_dir.transpose();
    let rewards = DVector::from_fn(mdp.num_agents(), |m, _| mdp.reward(m, s, s_next));
    let b = &phi * rewards.transpose();
    Ok((a, b))
}

/// Stationary averages of the TD update and its fixed point `θ*`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDynamics<T: Real> {
    pub a_bar: DMatrix<T>,
    pub b_bar_agents: Vec<DVector<T>>,
    pub b_bar: DVector<T>,
    pub theta_star: DVector<T>,
    /// Real part of the eigenvalue of `Ā` with the largest real part.
    pub max_real_eigenvalue: T,
}

pub fn mean_dynamics<T: Real>(
    mdp: &MultiAgentMdp<T>,
    chain: &JumpChain<T>,
) -> Result<MeanDynamics<T>> {
    let p_dim = mdp.feature_dim();
    let m_agents = mdp.num_agents();
    let mut a_bar = DMatrix::zeros(p_dim, p_dim);
    let mut b_cols = DMatrix::zeros(p_dim, m_agents);
    for i in 0..chain.num_modes() {
        let w = chain.stationary()[i];
        if w == T::zero() {
            continue;
        }
        let (a, b) = mode_matrices(mdp, i)?;
        a_bar += a * w;
        b_cols += b * w;
    }

    // Closed form Φᵀ diag(π) (γP − I) Φ.
    let ns = mdp.num_states();
    let phi = mdp.features();
    let pi = chain.state_stationary();
    let gp = mdp.transition() * mdp.discount() - DMatrix::identity(ns, ns);
    let closed = phi.transpose() * DMatrix::from_diagonal(pi) * gp * phi;
    let scale = T::one().max(linalg::max_abs(&closed));
    let gap = linalg::max_abs(&(&a_bar - &closed));
    if gap > T::tol(1e-10) * scale {
        return Err(Error::CrossCheck(format!(
            "mode-averaged A differs from closed form by {gap:e}"
        )));
    }

    let max_real_eigenvalue = linalg::max_real_part(&a_bar)?;
    if max_real_eigenvalue >= -T::tol(HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz {
            max_real: max_real_eigenvalue.as_f64(),
        });
    }

    let b_bar_agents: Vec<DVector<T>> = (0..m_agents).map(|m| b_cols.column(m).into_owned()).collect();
    let b_bar = b_cols.column_sum() / T::lit(m_agents as f64);
    let theta_star = -linalg::solve(&a_bar, &b_bar, "mean dynamics matrix")?;
    let res = linalg::max_abs_vec(&(&a_bar * &theta_star + &b_bar));
    let rscale = T::one().max(linalg::max_abs_vec(&b_bar));
    if res > T::tol(1e-10) * rscale {
        return Err(Error::CrossCheck(format!("fixed-point residual {res:e}")));
    }

    Ok(MeanDynamics {
        a_bar,
        b_bar_agents,
        b_bar,
        theta_star,
        max_real_eigenvalue,
    })
}

/// A validated scenario with its jump chain and mean dynamics.
#[derive(Debug, Clone)]
pub struct Model<T: Real> {
    pub mdp: MultiAgentMdp<T>,
    pub net: CommNetwork<T>,
    pub initial_state_dist: DVector<T>,
    pub chain: JumpChain<T>,
    pub dynamics: MeanDynamics<T>,
    pub report: ValidationReport,
}

impl<T: Real> Model<T> {
    pub fn new(
        mdp: MultiAgentMdp<T>,
        net: CommNetwork<T>,
        initial_state_dist: DVector<T>,
    ) -> Result<Self> {
        let report = validate_scenario(&mdp, &net)?;
        if !report.is_accepted() {
            return Err(Error::Validation(report));
        }
        let chain = build_jump_chain(&mdp, &initial_state_dist)?;
        let dynamics = mean_dynamics(&mdp, &chain)?;
        Ok(Self {
            mdp,
            net,
            initial_state_dist,
            chain,
            dynamics,
            report,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.mdp.num_agents()
    }

    pub fn feature_dim(&self) -> usize {
        self.mdp.feature_dim()
    }

    /// `n_ξ = M p`.
    pub fn state_dim(&self) -> usize {
        self.num_agents() * self.feature_dim()
    }

    /// `Θ* = [θ* … θ*]`.
    pub fn theta_star_block(&self) -> DMatrix<T> {
        let ts = &self.dynamics.theta_star;
        DMatrix::from_fn(self.feature_dim(), self.num_agents(), |r, _| ts[r])
    }

    /// Hex SHA-256 prefix over every scenario number.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |xs: &mut dyn Iterator<Item = T>| {
            for x in xs {
                h.update(x.as_f64().to_le_bytes());
            }
        };
        let dims = [
            self.mdp.num_states(),
            self.feature_dim(),
            self.num_agents(),
        ];
        put(&mut dims.iter().map(|&d| T::lit(d as f64)));
        put(&mut self.mdp.transition().iter().cloned());
        for r in self.mdp.rewards() {
            put(&mut r.iter().cloned());
        }
        put(&mut std::iter::once(self.mdp.discount()));
        put(&mut self.mdp.features().iter().cloned());
        put(&mut self.net.weights().iter().cloned());
        put(&mut self.initial_state_dist.iter().cloned());
        h.finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn scenario(phi: &[f64], r1: f64, r2: f64) -> (MultiAgentMdp<f64>, CommNetwork<f64>, DVector<f64>) {
        let p = DMatrix::from_element(2, 2, 0.5);
        let mdp = MultiAgentMdp::new(
            p,
            vec![DMatrix::from_element(2, 2, r1), DMatrix::from_element(2, 2, r2)],
            0.5,
            DMatrix::from_column_slice(2, 1, phi),
        )
        .unwrap();
        let net = CommNetwork::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        (mdp, net, DVector::from_vec(vec![1.0, 0.0]))
    }

    pub fn e1() -> Model<f64> {
        let (mdp, net, mu) = scenario(&[1.0, -1.0], 1.0, 0.0);
        Model::new(mdp, net, mu).unwrap()
    }

    pub fn e2() -> Model<f64> {
        let (mdp, net, mu) = scenario(&[1.0, 2.0], 1.0, 2.0);
        Model::new(mdp, net, mu).unwrap()
    }
}

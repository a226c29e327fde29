//! Markov jump linear system form of decentralized TD(0) and its lifted
//! first/second-moment LTI system.
//!
//! With `ξ^k = vec(Θ^k − Θ*)` the algorithm reads
//! `ξ^{k+1} = H(z^k) ξ^k + G(z^k)` where
//! `H_i = α (I_M ⊗ A_i) + W ⊗ I_p` and `G_i = α vec(B_i + A_i Θ*)`.
//! Stacking the mode-conditioned moments gives a lower block-triangular
//! linear system driven by `u_q^k`, `u_Q^k`:
//!
//! ```text
//! [q^{k+1}]   [H11  0 ] [q^k]   [u_q^k]
//! [Q^{k+1}] = [H21 H22] [Q^k] + [u_Q^k]
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{kron, unvec, vec_of};
use crate::model::{mode_matrices, CommNetwork, JumpChain, MeanDynamics, Model, MultiAgentMdp};
use crate::scalar::Real;

/// Explicit assembly is used while `n · n_ξ²` stays at or below this value.
pub const DEFAULT_SIZE_GUARD: usize = 5000;

/// Per-mode matrices of the jump system at a fixed step size.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystem<T: Real> {
    pub alpha: T,
    pub h_modes: Vec<DMatrix<T>>,
    pub g_modes: Vec<DVector<T>>,
    pub theta_star_block: DMatrix<T>,
    pub num_agents: usize,
    pub feature_dim: usize,
}

impl<T: Real> ModeSystem<T> {
    pub fn num_modes(&self) -> usize {
        self.h_modes.len()
    }

    /// `n_ξ = M p`.
    pub fn state_dim(&self) -> usize {
        self.num_agents * self.feature_dim
    }
}

pub fn build_modes<T: Real>(
    mdp: &MultiAgentMdp<T>,
    net: &CommNetwork<T>,
    chain: &JumpChain<T>,
    alpha: T,
    dynamics: &MeanDynamics<T>,
) -> Result<ModeSystem<T>> {
    if alpha < T::zero() || !alpha.is_finite_value() {
        return Err(Error::InvalidArgument(format!(
            "step size must be finite and >= 0, got {alpha}"
        )));
    }
    let m_agents = net.num_agents();
    let p = mdp.feature_dim();
    if mdp.num_agents() != m_agents {
        return Err(Error::Dimension("reward tables vs network size".into()));
    }
    if dynamics.theta_star.len() != p || chain.num_states() != mdp.num_states() {
        return Err(Error::Dimension("mean dynamics or chain do not match the MDP".into()));
    }
    let theta_star_block = DMatrix::from_fn(p, m_agents, |r, _| dynamics.theta_star[r]);
    let consensus = kron(net.weights(), &DMatrix::identity(p, p));
    let eye_m = DMatrix::identity(m_agents, m_agents);

    let mut h_modes = Vec::with_capacity(chain.num_modes());
    let mut g_modes = Vec::with_capacity(chain.num_modes());
    for i in 0..chain.num_modes() {
        let (a, b) = mode_matrices(mdp, i)?;
        h_modes.push(kron(&eye_m, &a) * alpha + &consensus);
        g_modes.push(vec_of(&(b + &a * &theta_star_block)) * alpha);
    }
    Ok(ModeSystem {
        alpha,
        h_modes,
        g_modes,
        theta_star_block,
        num_agents: m_agents,
        feature_dim: p,
    })
}

impl<T: Real> Model<T> {
    pub fn modes(&self, alpha: T) -> Result<ModeSystem<T>> {
        build_modes(&self.mdp, &self.net, &self.chain, alpha, &self.dynamics)
    }
}

/// Explicit lifted matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBlocks<T: Real> {
    pub h11: DMatrix<T>,
    pub h21: DMatrix<T>,
    pub h22: DMatrix<T>,
}

/// Lifted moment system. Always usable in matrix-free form; the explicit
/// blocks are present only when the size guard allows it.
#[derive(Debug, Clone)]
pub struct LtiMoments<T: Real> {
    transition: DMatrix<T>,
    h_modes: Vec<DMatrix<T>>,
    g_modes: Vec<DVector<T>>,
    num_agents: usize,
    explicit: Option<LiftedBlocks<T>>,
    size_guard: usize,
}

impl<T: Real> LtiMoments<T> {
    pub fn num_modes(&self) -> usize {
        self.h_modes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.h_modes.first().map_or(0, |h| h.nrows())
    }

    /// Length of the stacked second-moment vector, `n · n_ξ²`.
    pub fn second_moment_len(&self) -> usize {
        let d = self.state_dim();
        self.num_modes() * d * d
    }

    pub fn first_moment_len(&self) -> usize {
        self.num_modes() * self.state_dim()
    }

    pub fn assembled_explicitly(&self) -> bool {
        self.explicit.is_some()
    }

    pub fn blocks(&self) -> Result<&LiftedBlocks<T>> {
        self.explicit.as_ref().ok_or(Error::SizeGuard {
            size: self.second_moment_len(),
            guard: self.size_guard,
        })
    }

    /// `H11 q`, mode-wise.
    pub fn apply_h11(&self, q: &DVector<T>) -> DVector<T> {
        let d = self.state_dim();
        let mut out = DVector::zeros(self.first_moment_len());
        for (i, h) in self.h_modes.iter().enumerate() {
            let hq = h * q.rows(i * d, d);
            for j in 0..self.num_modes() {
                let p = self.transition[(i, j)];
                if p != T::zero() {
                    let mut blk = out.rows_mut(j * d, d);
                    blk += &hq * p;
                }
            }
        }
        out
    }

    /// `H21 q` using `S_i q_i = vec(G_i q_iᵀ H_iᵀ + H_i q_i G_iᵀ)`.
    pub fn apply_h21(&self, q: &DVector<T>) -> DVector<T> {
        let d = self.state_dim();
        let d2 = d * d;
        let mut out = DVector::zeros(self.second_moment_len());
        for i in 0..self.num_modes() {
            let qi = q.rows(i * d, d).into_owned();
            let x = &self.h_modes[i] * &qi * self.g_modes[i].transpose();
            let s = vec_of(&(&x + x.transpose()));
            for j in 0..self.num_modes() {
                let p = self.transition[(i, j)];
                if p != T::zero() {
                    let mut blk = out.rows_mut(j * d2, d2);
                    blk += &s * p;
                }
            }
        }
        out
    }

    /// `H22 Q̂` using `(H_i ⊗ H_i) vec(X) = vec(H_i X H_iᵀ)`.
    pub fn apply_h22(&self, q2: &DVector<T>) -> DVector<T> {
        let d = self.state_dim();
        let d2 = d * d;
        let mut out = DVector::zeros(self.second_moment_len());
        for (i, h) in self.h_modes.iter().enumerate() {
            let xi = unvec(&q2.rows(i * d2, d2).into_owned(), d, d);
            let y = vec_of(&(h * xi * h.transpose()));
            for j in 0..self.num_modes() {
                let p = self.transition[(i, j)];
                if p != T::zero() {
                    let mut blk = out.rows_mut(j * d2, d2);
                    blk += &y * p;
                }
            }
        }
        out
    }

    /// `C_δ Q̂ = (1/M) Σ_i trace(Q_i)`.
    pub fn c_delta(&self, q2: &DVector<T>) -> T {
        let d = self.state_dim();
        let mut acc = T::zero();
        for i in 0..self.num_modes() {
            for r in 0..d {
                acc += q2[i * d * d + r * (d + 1)];
            }
        }
        acc / T::lit(self.num_agents as f64)
    }

    /// Row functional `C_δ = (1/M)(1_nᵀ ⊗ vec(I)ᵀ)`.
    pub fn c_delta_row(&self) -> DVector<T> {
        let d = self.state_dim();
        let inv_m = T::one() / T::lit(self.num_agents as f64);
        DVector::from_fn(self.second_moment_len(), |k, _| {
            let r = k % (d * d);
            if r.is_multiple_of(d + 1) {
                inv_m
            } else {
                T::zero()
            }
        })
    }
}

/// Assembles the lifted system; falls back to matrix-free form when
/// `n · n_ξ²` exceeds `size_guard`.
pub fn assemble_lti<T: Real>(
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    size_guard: usize,
) -> LtiMoments<T> {
    let n = modes.num_modes();
    let d = modes.state_dim();
    let d2 = d * d;
    let pz = chain.transition();

    let explicit = (n * d2 <= size_guard).then(|| {
        let mut h11 = DMatrix::zeros(n * d, n * d);
        let mut h21 = DMatrix::zeros(n * d2, n * d);
        let mut h22 = DMatrix::zeros(n * d2, n * d2);
        for i in 0..n {
            let h = &modes.h_modes[i];
            let g = DMatrix::from_column_slice(d, 1, modes.g_modes[i].as_slice());
            let hh = kron(h, h);
            let s = kron(h, &g) + kron(&g, h);
            for j in 0..n {
                let p = pz[(i, j)];
                if p == T::zero() {
                    continue;
                }
                h11.view_mut((j * d, i * d), (d, d)).copy_from(&(h * p));
                h21.view_mut((j * d2, i * d), (d2, d)).copy_from(&(&s * p));
                h22.view_mut((j * d2, i * d2), (d2, d2)).copy_from(&(&hh * p));
            }
        }
        LiftedBlocks { h11, h21, h22 }
    });

    LtiMoments {
        transition: pz.clone(),
        h_modes: modes.h_modes.clone(),
        g_modes: modes.g_modes.clone(),
        num_agents: modes.num_agents,
        explicit,
        size_guard,
    }
}

/// Drives `u_q`, `u_Q` for mode marginal `p_k`:
/// block `j` is `Σ_i p_ij p_i^k G_i` and `Σ_i p_ij p_i^k vec(G_i G_iᵀ)`.
pub fn drive_terms<T: Real>(
    modes: &ModeSystem<T>,
    chain: &JumpChain<T>,
    p_k: &DVector<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    let n = modes.num_modes();
    if p_k.len() != n {
        return Err(Error::Dimension(format!(
            "mode marginal has length {}, expected {n}",
            p_k.len()
        )));
    }
    let d = modes.state_dim();
    let d2 = d * d;
    let mut u_q = DVector::zeros(n * d);
    let mut u_qq = DVector::zeros(n * d2);
    for i in 0..n {
        if p_k[i] == T::zero() {
            continue;
        }
        let g = &modes.g_modes[i];
        let gg = vec_of(&(g * g.transpose()));
        for (j, p) in chain.successors(i) {
            let w = p * p_k[i];
            let mut a = u_q.rows_mut(j * d, d);
            a += g * w;
            let mut b = u_qq.rows_mut(j * d2, d2);
            b += &gg * w;
        }
    }
    Ok((u_q, u_qq))
}

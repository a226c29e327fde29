use dtd_mjls::linalg::{kron, max_abs_vec, vec_of};
use dtd_mjls::mjls::{assemble_lti, DEFAULT_SIZE_GUARD};
use dtd_mjls::model::{CommNetwork, Model, MultiAgentMdp};
use dtd_mjls::moments::{closed_form_deltas, delta_sequence, error_trajectory, init_moments, step_moments};
use dtd_mjls::nalgebra::{DMatrix, DVector};
use dtd_mjls::sim::{
    averaged_iterate_residual, consensus_spread, enumerate_error, monte_carlo_error, run_td0,
};
use dtd_mjls::spectral::perturb_predict;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Raw {
    ns: usize,
    m: usize,
    p: usize,
    trans: Vec<f64>,
    feats: Vec<f64>,
    rewards: Vec<f64>,
    gamma: f64,
    mix: Vec<f64>,
    theta0: Vec<f64>,
    alpha: f64,
}

fn raw() -> impl Strategy<Value = Raw> {
    (2usize..=3, 1usize..=3, 1usize..=2).prop_flat_map(|(ns, m, p)| {
        (
            prop::collection::vec(0.05f64..1.0, ns * ns),
            prop::collection::vec(-2.0f64..2.0, ns * p),
            prop::collection::vec(-1.0f64..1.0, m * ns * ns),
            0.1f64..0.95,
            prop::collection::vec(0.05f64..1.0, 3),
            prop::collection::vec(-1.5f64..1.5, p * m),
            0.01f64..0.3,
        )
            .prop_map(move |(trans, feats, rewards, gamma, mix, theta0, alpha)| Raw {
                ns,
                m,
                p,
                trans,
                feats,
                rewards,
                gamma,
                mix,
                theta0,
                alpha,
            })
    })
}

/// Convex combination of `I`, the cyclic shift and its inverse: doubly
/// stochastic, and connected whenever the shift carries weight.
fn gossip(m: usize, mix: &[f64]) -> DMatrix<f64> {
    let total: f64 = mix.iter().sum();
    DMatrix::from_fn(m, m, |i, j| {
        let mut w = 0.0;
        if i == j {
            w += mix[0];
        }
        if j == (i + 1) % m {
            w += mix[1];
        }
        if (j + 1) % m == i {
            w += mix[2];
        }
        w / total
    })
}

fn build(r: &Raw, mu0: Option<DVector<f64>>) -> Option<Model<f64>> {
    let mut p = DMatrix::from_row_slice(r.ns, r.ns, &r.trans);
    for i in 0..r.ns {
        let s: f64 = p.row(i).sum();
        p.row_mut(i).scale_mut(1.0 / s);
    }
    let rewards = (0..r.m)
        .map(|k| DMatrix::from_row_slice(r.ns, r.ns, &r.rewards[k * r.ns * r.ns..(k + 1) * r.ns * r.ns]))
        .collect();
    let feats = DMatrix::from_row_slice(r.ns, r.p, &r.feats);
    let mdp = MultiAgentMdp::new(p, rewards, r.gamma, feats).ok()?;
    let net = CommNetwork::new(gossip(r.m, &r.mix)).ok()?;
    let mu0 = mu0.unwrap_or_else(|| DVector::from_element(r.ns, 1.0 / r.ns as f64));
    Model::new(mdp, net, mu0).ok()
}

fn theta0(r: &Raw) -> DMatrix<f64> {
    DMatrix::from_column_slice(r.p, r.m, &r.theta0)
}

fn scale(xs: &[f64]) -> f64 {
    xs.iter().fold(1.0f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_matches_path_enumeration(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let th = theta0(&r);
        let horizon = if r.ns == 2 { 6 } else { 4 };
        let exact = error_trajectory(&model, r.alpha, &th, horizon).unwrap().deltas;
        let oracle = enumerate_error(&model, r.alpha, &th, horizon).unwrap();
        let tol = 1e-10 * scale(&oracle);
        for (k, (a, b)) in exact.iter().zip(&oracle).enumerate() {
            prop_assert!((a - b).abs() <= tol, "k={} {} vs {}", k, a, b);
        }
    }

    #[test]
    fn closed_form_sum_matches_recursion(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let modes = model.modes(r.alpha).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        prop_assume!(lti.assembled_explicitly());
        let init = init_moments(&theta0(&r), &model.dynamics, &model.chain).unwrap();
        let closed = closed_form_deltas(&lti, &modes, &model.chain, &init, 15).unwrap();
        let rec = delta_sequence(&modes, &model.chain, init, 15).unwrap();
        let tol = 1e-9 * scale(&rec);
        for (a, b) in closed.iter().zip(&rec) {
            prop_assert!((a - b).abs() <= tol, "{} vs {}", a, b);
        }
    }

    #[test]
    fn operator_form_matches_explicit_blocks(r in raw(), seed in 0u64..1000) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let modes = model.modes(r.alpha).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        prop_assume!(lti.assembled_explicitly());
        let b = lti.blocks().unwrap();
        let pseudo = |n: usize, off: u64| {
            DVector::from_fn(n, |i, _| (((i as u64 + 1) * 2654435761 + seed + off) % 1000) as f64 / 500.0 - 1.0)
        };
        let q = pseudo(lti.first_moment_len(), 0);
        let q2 = pseudo(lti.second_moment_len(), 7);
        prop_assert!(max_abs_vec(&(lti.apply_h11(&q) - &b.h11 * &q)) < 1e-12);
        prop_assert!(max_abs_vec(&(lti.apply_h21(&q) - &b.h21 * &q)) < 1e-12);
        prop_assert!(max_abs_vec(&(lti.apply_h22(&q2) - &b.h22 * &q2)) < 1e-12);
    }

    #[test]
    fn lifted_blocks_are_kronecker_products(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let modes = model.modes(r.alpha).unwrap();
        let lti = assemble_lti(&modes, &model.chain, DEFAULT_SIZE_GUARD);
        prop_assume!(lti.assembled_explicitly());
        let b = lti.blocks().unwrap();
        let d = modes.state_dim();
        let d2 = d * d;
        let pz = model.chain.transition();
        for i in 0..modes.num_modes() {
            let h = &modes.h_modes[i];
            let g = DMatrix::from_column_slice(d, 1, modes.g_modes[i].as_slice());
            // vec(H X Hᵀ) = (H ⊗ H) vec(X) and vec(H q gᵀ + g qᵀ Hᵀ) = (H ⊗ g + g ⊗ H) q.
            let x = DMatrix::from_fn(d, d, |r, c| (r as f64 + 1.0) * 0.3 - c as f64 * 0.7);
            prop_assert!(max_abs_vec(&(kron(h, h) * vec_of(&x) - vec_of(&(h * &x * h.transpose())))) < 1e-12);
            let q = DVector::from_fn(d, |r, _| 0.2 * r as f64 - 0.5);
            let cross = h * &q * g.transpose() + &g * q.transpose() * h.transpose();
            prop_assert!(max_abs_vec(&((kron(h, &g) + kron(&g, h)) * &q - vec_of(&cross))) < 1e-12);
            for j in 0..modes.num_modes() {
                let p = pz[(i, j)];
                let blk22 = b.h22.view((j * d2, i * d2), (d2, d2));
                prop_assert!((blk22 - kron(h, h) * p).amax() < 1e-14);
                let blk11 = b.h11.view((j * d, i * d), (d, d));
                prop_assert!((blk11 - h * p).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn second_moments_stay_positive_semidefinite(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let modes = model.modes(r.alpha).unwrap();
        let mut st = init_moments(&theta0(&r), &model.dynamics, &model.chain).unwrap();
        for _ in 0..40 {
            st = step_moments(&st, &modes, &model.chain).unwrap();
            let s = st.big_q.iter().fold(1.0f64, |a, q| a.max(q.amax()));
            prop_assert!(st.min_eigenvalue() >= -1e-10 * s, "{}", st.min_eigenvalue());
            prop_assert!(st.max_asymmetry() == 0.0);
        }
    }

    #[test]
    fn agent_relabeling_leaves_error_unchanged(r in raw()) {
        prop_assume!(r.m >= 2);
        let Some(model) = build(&r, None) else { return Ok(()); };
        // Reverse the agent order in rewards, W and Θ⁰.
        let mut rr = r.clone();
        let blk = r.ns * r.ns;
        rr.rewards = (0..r.m).rev().flat_map(|k| r.rewards[k * blk..(k + 1) * blk].to_vec()).collect();
        rr.theta0 = (0..r.m).rev().flat_map(|k| r.theta0[k * r.p..(k + 1) * r.p].to_vec()).collect();
        let w = gossip(r.m, &r.mix);
        let wr = DMatrix::from_fn(r.m, r.m, |i, j| w[(r.m - 1 - i, r.m - 1 - j)]);
        let permuted = {
            let base = build(&rr, None).unwrap();
            Model::new(base.mdp.clone(), CommNetwork::new(wr).unwrap(), base.initial_state_dist.clone()).unwrap()
        };
        let a = error_trajectory(&model, r.alpha, &theta0(&r), 25).unwrap().deltas;
        let b = error_trajectory(&permuted, r.alpha, &theta0(&rr), 25).unwrap().deltas;
        let tol = 1e-11 * scale(&a);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= tol, "{} vs {}", x, y);
        }
    }

    #[test]
    fn error_is_linear_in_the_initial_distribution(r in raw(), lam in 0.0f64..1.0) {
        let n = r.ns;
        let ea = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let eb = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
        let mix = &ea * lam + &eb * (1.0 - lam);
        let (Some(ma), Some(mb), Some(mm)) = (build(&r, Some(ea)), build(&r, Some(eb)), build(&r, Some(mix))) else {
            return Ok(());
        };
        let th = theta0(&r);
        let da = error_trajectory(&ma, r.alpha, &th, 20).unwrap().deltas;
        let db = error_trajectory(&mb, r.alpha, &th, 20).unwrap().deltas;
        let dm = error_trajectory(&mm, r.alpha, &th, 20).unwrap().deltas;
        let tol = 1e-11 * scale(&dm);
        for k in 0..=20 {
            prop_assert!((dm[k] - (lam * da[k] + (1.0 - lam) * db[k])).abs() <= tol);
        }
    }

    #[test]
    fn mixing_rate_does_not_depend_on_step(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let rates: Vec<f64> = [0.0, 0.01, r.alpha, 0.5]
            .iter()
            .map(|&a| model.spectrum(a, DEFAULT_SIZE_GUARD).map(|s| s.mixing))
            .collect::<Result<_, _>>()
            .unwrap_or_default();
        for w in rates.windows(2) {
            prop_assert!((w[0] - w[1]).abs() <= 1e-14);
        }
    }

    #[test]
    fn prediction_slopes_are_consistent(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let (p11, p22) = perturb_predict(&model.dynamics, r.alpha);
        prop_assert!(((p22 - 1.0) - 2.0 * (p11 - 1.0)).abs() <= 4.0 * f64::EPSILON);
        prop_assert!(model.dynamics.max_real_eigenvalue < 0.0);
    }

    #[test]
    fn stationary_mode_law_is_invariant(r in raw()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let p = model.chain.stationary();
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(max_abs_vec(&(model.chain.propagate(p) - p)) < 1e-12);
        let w = model.net.weights();
        for i in 0..w.nrows() {
            prop_assert!((w.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert!((w.column(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_iterate_follows_single_agent_recursion(r in raw(), seed in any::<u64>()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let run = run_td0(&model, r.alpha, &theta0(&r), 60, seed).unwrap();
        let s = run.weights.iter().fold(1.0f64, |a, w| a.max(w.amax()));
        prop_assert!(averaged_iterate_residual(&model, r.alpha, &run).unwrap() <= 1e-12 * s);
    }

    #[test]
    fn gossip_alone_contracts_disagreement(r in raw(), seed in any::<u64>()) {
        let Some(model) = build(&r, None) else { return Ok(()); };
        let run = run_td0(&model, 0.0, &theta0(&r), 30, seed).unwrap();
        let spread: Vec<f64> = run.weights.iter().map(consensus_spread).collect();
        for w in spread.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn monte_carlo_is_reproducible_and_seed_sensitive() {
    let r = Raw {
        ns: 2,
        m: 2,
        p: 1,
        trans: vec![0.3, 0.7, 0.6, 0.4],
        feats: vec![1.0, 0.5],
        rewards: vec![1.0, 0.0, 0.5, 0.2, -1.0, 0.3, 0.0, 1.0],
        gamma: 0.7,
        mix: vec![0.5, 0.3, 0.2],
        theta0: vec![1.0, -1.0],
        alpha: 0.1,
    };
    let model = build(&r, None).unwrap();
    let th = theta0(&r);
    let a = monte_carlo_error(&model, 0.1, &th, 10, 600, 5).unwrap();
    let b = monte_carlo_error(&model, 0.1, &th, 10, 600, 5).unwrap();
    let c = monte_carlo_error(&model, 0.1, &th, 10, 600, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.deltas_hat, c.deltas_hat);
    assert_eq!(a.stderrs[0], 0.0);
}

#[test]
fn single_precision_tracks_double() {
    let r = Raw {
        ns: 3,
        m: 2,
        p: 2,
        trans: vec![0.2, 0.5, 0.3, 0.4, 0.1, 0.5, 0.6, 0.3, 0.1],
        feats: vec![1.0, 0.0, 0.5, 1.0, -0.5, 0.8],
        rewards: (0..18).map(|i| (i as f64 * 0.37).sin()).collect(),
        gamma: 0.8,
        mix: vec![0.5, 0.5, 0.5],
        theta0: vec![1.0, 0.0, -1.0, 0.5],
        alpha: 0.05,
    };
    let m64 = build(&r, None).unwrap();
    let m32 = Model::new(m64.mdp.cast::<f32>(), m64.net.cast::<f32>(), m64.initial_state_dist.clone().cast::<f32>()).unwrap();
    let d64 = error_trajectory(&m64, 0.05, &theta0(&r), 50).unwrap().deltas;
    let d32 = error_trajectory(&m32, 0.05f32, &theta0(&r).cast::<f32>(), 50).unwrap().deltas;
    for (a, b) in d64.iter().zip(&d32) {
        assert!((a - *b as f64).abs() <= 1e-4 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

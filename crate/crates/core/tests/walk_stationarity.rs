use dikin_core::barriers::BarrierKind;
use dikin_core::diagnostics::{ess, ks_test};
use dikin_core::geometry::{Body, Polytope};
use dikin_core::walk::{
    default_params, evaluate_metric, params_from_config, propose, run_chain, step, ChainState, HessianMode, Target,
    WalkConfig, WalkParams,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: [f64; 2] = [1.0, 0.5];

fn unit_box() -> Body {
    Polytope::cube(2, 1.0).unwrap().into()
}

fn linear_target() -> Target {
    Target::linear(DVector::from_column_slice(&C))
}

/// CDF of the density proportional to `exp(−c t)` on `[−1, 1]`.
fn truncated_exp_cdf(c: f64, t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    ((c).exp() - (-c * t).exp()) / ((c).exp() - (-c).exp())
}

fn truncated_exp_draw(c: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let (lo, hi) = ((-c).exp(), c.exp());
    -(hi - u * (hi - lo)).ln() / c
}

fn walk_params(mode: HessianMode, c_alpha: f64, steps: u64) -> WalkParams {
    let cfg = WalkConfig {
        c_alpha,
        steps: Some(steps),
        mode,
        full_trace: true,
        ..WalkConfig::default()
    };
    let p = params_from_config(BarrierKind::LogPolytope, &unit_box(), &linear_target(), &cfg);
    match mode {
        HessianMode::Exact => p,
        HessianMode::Approx => p.with_eps_h(5e-4, 2),
    }
}

fn run_from_oracle(params: &WalkParams, chains: u64, seed: u64) -> [Vec<f64>; 2] {
    let body = unit_box();
    let target = linear_target();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [Vec::new(), Vec::new()];
    for k in 0..chains {
        let x0 = DVector::from_fn(2, |i, _| truncated_exp_draw(C[i], &mut rng));
        let p = params.clone().with_seed(seed.wrapping_mul(1_000_003) + k);
        let run = run_chain(BarrierKind::LogPolytope, &body, &target, &p, &x0).unwrap();
        let last = run.final_point();
        out[0].push(last[0]);
        out[1].push(last[1]);
    }
    out
}

#[test]
fn exact_mode_preserves_target() {
    let params = walk_params(HessianMode::Exact, 1.0, 5);
    let cols = run_from_oracle(&params, 10_000, 1);
    for (i, col) in cols.iter().enumerate() {
        let r = ks_test(col, |t| truncated_exp_cdf(C[i], t), 0.01).unwrap();
        assert!(r.pass, "coordinate {i}: {r:?}");
    }
}

#[test]
fn approximate_mode_preserves_target() {
    let params = walk_params(HessianMode::Approx, 1.0, 5);
    let cols = run_from_oracle(&params, 10_000, 2);
    for (i, col) in cols.iter().enumerate() {
        let r = ks_test(col, |t| truncated_exp_cdf(C[i], t), 0.01).unwrap();
        assert!(r.pass, "coordinate {i}: {r:?}");
    }
}

#[test]
fn dropping_the_metric_correction_is_detected() {
    let body = unit_box();
    let target = linear_target();
    let params = walk_params(HessianMode::Exact, 1.0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cols = [Vec::new(), Vec::new()];
    for _ in 0..10_000 {
        let mut x = DVector::from_fn(2, |i, _| truncated_exp_draw(C[i], &mut rng));
        for _ in 0..20 {
            if rng.random::<f64>() >= params.laziness {
                continue;
            }
            let Ok(m) = evaluate_metric(BarrierKind::LogPolytope, &body, &x, &params, 0) else {
                continue;
            };
            let z = propose(&x, &m, &mut rng).unwrap();
            if !body.contains(&z, true) {
                continue;
            }
            let log_tau = target.eval(&x).unwrap() - target.eval(&z).unwrap();
            if rng.random::<f64>().ln() < log_tau {
                x = z;
            }
        }
        cols[0].push(x[0]);
        cols[1].push(x[1]);
    }
    let failed = (0..2).any(|i| !ks_test(&cols[i], |t| truncated_exp_cdf(C[i], t), 0.01).unwrap().pass);
    assert!(failed, "naive filter went undetected");
}

#[test]
fn uniform_box_mean_within_ess_band() {
    let body = unit_box();
    let target = Target::uniform();
    let params = default_params(BarrierKind::LogPolytope, &body, &target).with_steps(200_000);
    let params = WalkParams { thin: 1, ..params };
    let run = run_chain(BarrierKind::LogPolytope, &body, &target, &params, &DVector::zeros(2)).unwrap();
    for j in 0..2 {
        let col: Vec<f64> = run.samples.column(j).iter().copied().collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let e = ess(&col).unwrap();
        assert!(mean.abs() <= 3.0 * sd / e.sqrt(), "coordinate {j}: mean {mean}, sd {sd}, ess {e}");
    }
}

#[test]
fn chain_state_counts_steps() {
    let body = unit_box();
    let target = linear_target();
    let params = walk_params(HessianMode::Exact, 1.0, 0);
    let mut state = ChainState::new(DVector::zeros(2), 9);
    for _ in 0..1000 {
        step(&mut state, BarrierKind::LogPolytope, &body, &target, &params).unwrap();
    }
    let c = state.counters();
    assert_eq!(c.steps, 1000);
    assert_eq!(c.accepted + c.rejected_outside + c.rejected_filter + c.lazy_hold, 1000);
}

//! Self-check oracles behind the `validate` subcommand.
//!
//! Each check compares a production routine against an independent
//! reference computed a different way.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::wilcoxon_signed_rank;
use crate::decision::update_belief;
use crate::dynamics::{
    analytic_state, drift_diffusion_step, project_simplex, simulate_path, stationary_moments,
    NoiseIncrement, NonFinite,
};
use crate::params::AgentParams;
use crate::types::{Belief, EmotionVector, RawAffect, SIMPLEX_TOL};

/// Signature of the projection under test, injectable for negative controls.
pub type ProjectionFn = fn(&RawAffect) -> Result<EmotionVector, NonFinite>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub dt: f64,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<OracleCheck>,
    pub dt_sweep: Vec<SweepPoint>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<5} {:<22} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(out, "\ndt sweep (Euler vs closed form, horizon 1.0):");
        let _ = writeln!(out, "{:>10}  {:>12}  {:>7}", "dt", "max rel err", "ratio");
        let mut prev: Option<f64> = None;
        for p in &self.dt_sweep {
            let ratio = prev
                .map(|e| format!("{:.3}", e / p.max_rel_error))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>10.2e}  {:>12.4e}  {:>7}",
                p.dt, p.max_rel_error, ratio
            );
            prev = Some(p.max_rel_error);
        }
        out
    }
}

/// Exact simplex projection by enumerating supports: on a support S the
/// minimizer is v_S shifted by a common constant; keep the nearest feasible one.
pub fn projection_oracle(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let shift = (members.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / members.len() as f64;
        let mut x = vec![0.0; k];
        for &i in &members {
            x[i] = v[i] - shift;
        }
        if x.iter().any(|&c| c < -1e-12) {
            continue;
        }
        let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("the vertex supports are always feasible").1
}

fn check_projection(project: ProjectionFn, rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut worst = 0.0f64;
    let mut idempotent = true;
    for _ in 0..1000 {
        let k = rng.random_range(3..=5);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = match project(&RawAffect::from_slice(&v)) {
            Ok(p) => p,
            Err(e) => {
                return OracleCheck {
                    name: "projection",
                    passed: false,
                    detail: format!("projection failed on finite input: {e}"),
                }
            }
        };
        let want = projection_oracle(&v);
        for (a, b) in got.as_slice().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        if let Ok(again) = project(&RawAffect::from(&got)) {
            if again
                .as_slice()
                .iter()
                .zip(got.as_slice())
                .any(|(a, b)| (a - b).abs() > SIMPLEX_TOL)
            {
                idempotent = false;
            }
        } else {
            idempotent = false;
        }
    }
    OracleCheck {
        name: "projection",
        passed: worst <= 1e-6 && idempotent,
        detail: format!(
            "1000 inputs, max |diff| vs support enumeration {worst:.2e}, idempotent: {idempotent}"
        ),
    }
}

fn check_stationary() -> OracleCheck {
    let (theta, sigma) = (1.0, 0.2);
    let mu = EmotionVector::new(vec![0.5, 0.3, 0.2]).expect("valid");
    let params = AgentParams::diagonal(&[theta; 3], &[sigma; 3], DMatrix::zeros(3, 2), mu, 0.0);
    let (burn, keep) = (10_000u64, 100_000u64);
    let e0 = RawAffect::from(&params.mu);
    let path = match simulate_path(&e0, &params, 0.01, burn + keep, 7, 1, false) {
        Ok(p) => p,
        Err(e) => {
            return OracleCheck {
                name: "stationary-moments",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let (mean_ref, var_ref) = stationary_moments(&params).expect("diagonal");
    let tail = &path[burn as usize..];
    let n = tail.len() as f64;
    let mut detail = String::new();
    let mut passed = true;
    for k in 0..3 {
        let m = tail.iter().map(|e| e.0[k]).sum::<f64>() / n;
        let v = tail.iter().map(|e| (e.0[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
        let ok = (m - mean_ref[k]).abs() <= 0.02 && ((v - var_ref[k]) / var_ref[k]).abs() <= 0.15;
        passed &= ok;
        let _ = write!(
            detail,
            "[{k}] mean {m:.4}/{:.4} var {v:.5}/{:.5} ",
            mean_ref[k], var_ref[k]
        );
    }
    OracleCheck {
        name: "stationary-moments",
        passed,
        detail: detail.trim_end().to_string(),
    }
}

fn check_conjugate(rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=100);
        let sigma2 = rng.random_range(0.1..5.0);
        let prior = Belief {
            mean: rng.random_range(-1.0..1.0),
            precision: rng.random_range(0.1..5.0),
        };
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sequential = ys
            .iter()
            .try_fold(prior, |b, &y| update_belief(b, y, sigma2))
            .expect("valid inputs");
        let mut reversed = ys.clone();
        reversed.reverse();
        let backwards = reversed
            .iter()
            .try_fold(prior, |b, &y| update_belief(b, y, sigma2))
            .expect("valid inputs");
        let precision = prior.precision + n as f64 / sigma2;
        let mean = (prior.precision * prior.mean + ys.iter().sum::<f64>() / sigma2) / precision;
        for (a, b) in [
            (sequential.mean, mean),
            (sequential.precision, precision),
            (backwards.mean, mean),
            (backwards.precision, precision),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    OracleCheck {
        name: "conjugate-update",
        passed: worst <= 1e-10,
        detail: format!("200 sequences, max |sequential - batch| {worst:.2e}"),
    }
}

/// Two-sided p by listing all 2^n sign patterns of the ranked magnitudes.
pub fn wilcoxon_enumeration_p(diffs: &[f64]) -> f64 {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let less = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut lo, mut hi) = (0u64, 0u64);
    for signs in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| signs & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if w <= observed + 1e-9 {
            lo += 1;
        }
        if w >= observed - 1e-9 {
            hi += 1;
        }
    }
    (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0)
}

fn check_wilcoxon(rng: &mut ChaCha8Rng) -> OracleCheck {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 5..=10 {
        for _ in 0..50 {
            // integer-valued draws so ties and zeros occur
            let d: Vec<f64> = (0..n)
                .map(|_| f64::from(rng.random_range(-6i32..=6)))
                .collect();
            let Ok(r) = wilcoxon_signed_rank(&d) else {
                continue;
            };
            if !r.exact {
                continue;
            }
            worst = worst.max((r.p - wilcoxon_enumeration_p(&d)).abs());
            cases += 1;
        }
    }
    OracleCheck {
        name: "wilcoxon-exact",
        passed: worst <= 1e-12 && cases > 0,
        detail: format!("{cases} samples with n <= 10, max |p - enumeration| {worst:.2e}"),
    }
}

/// Max relative deviation of noise-free Euler stepping from the closed form.
pub fn euler_error(params: &AgentParams, e0: &RawAffect, dt: f64, horizon: f64) -> f64 {
    let steps = (horizon / dt).round() as u64;
    let zero = NoiseIncrement::zeros(e0.dim());
    let mut e = e0.clone();
    let mut worst = 0.0f64;
    for n in 1..=steps {
        e = drift_diffusion_step(&e, params, dt, &zero).expect("dimensions match");
        let exact = analytic_state(e0, params, n as f64 * dt).expect("diagonal");
        for (a, b) in e.as_slice().iter().zip(exact.as_slice()) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    worst
}

/// Default sweep grid, halving from 1e-2.
pub const SWEEP_DTS: [f64; 6] = [8e-3, 4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4];

fn sweep_params() -> (AgentParams, RawAffect) {
    let mu = EmotionVector::new(vec![0.2, 0.5, 0.3]).expect("valid");
    let params = AgentParams::diagonal(&[0.75, 1.5, 3.0], &[0.0; 3], DMatrix::zeros(3, 2), mu, 0.0);
    (params, RawAffect::from_slice(&[0.9, 0.05, 0.05]))
}

pub fn dt_sweep() -> Vec<SweepPoint> {
    let (params, e0) = sweep_params();
    SWEEP_DTS
        .iter()
        .map(|&dt| SweepPoint {
            dt,
            max_rel_error: euler_error(&params, &e0, dt, 1.0),
        })
        .collect()
}

fn check_convergence(sweep: &[SweepPoint]) -> OracleCheck {
    let at = |dt: f64| {
        sweep
            .iter()
            .find(|p| (p.dt - dt).abs() < 1e-15)
            .map(|p| p.max_rel_error)
    };
    let ratios: Vec<f64> = sweep
        .windows(2)
        .map(|w| w[0].max_rel_error / w[1].max_rel_error)
        .collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let err_1e3 = at(1e-3).unwrap_or(f64::INFINITY);
    OracleCheck {
        name: "euler-convergence",
        passed: err_1e3 < 0.01 && min_ratio >= 1.8,
        detail: format!("rel error at dt=1e-3 {err_1e3:.3e}, min halving ratio {min_ratio:.3}"),
    }
}

pub fn run_oracles() -> ValidationReport {
    run_oracles_with(project_simplex)
}

/// The oracle suite with a substitute projection.
pub fn run_oracles_with(project: ProjectionFn) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let sweep = dt_sweep();
    let checks = vec![
        check_stationary(),
        check_projection(project, &mut rng),
        check_conjugate(&mut rng),
        check_wilcoxon(&mut rng),
        check_convergence(&sweep),
    ];
    ValidationReport {
        checks,
        dt_sweep: sweep,
    }
}

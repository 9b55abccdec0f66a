//! Continuous emotion layer: Euler–Maruyama OU stepping, the closed-form mean
//! path, message impulses and Euclidean projection onto the simplex.

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::params::AgentParams;
use crate::rng::{substream, Purpose};
use crate::types::{EmotionVector, RawAffect};

/// Wiener increments for one step, each component ~ N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement(pub DVector<f64>);

impl NoiseIncrement {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, k: usize, dt: f64) -> Self {
        let scale = dt.sqrt();
        NoiseIncrement(DVector::from_fn(k, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        }))
    }

    /// The increment an agent draws at `step` under `seed`.
    pub fn for_step(seed: u64, agent: u64, step: u64, k: usize, dt: f64) -> Self {
        let mut rng = substream(seed, agent, step, Purpose::Diffusion);
        NoiseIncrement::sample(&mut rng, k, dt)
    }

    pub fn zeros(k: usize) -> Self {
        NoiseIncrement(DVector::zeros(k))
    }
}

fn check_dims(e: &RawAffect, params: &AgentParams) -> Result<()> {
    let k = e.dim();
    if params.theta.shape() != (k, k) || params.sigma.shape() != (k, k) || params.mu.dim() != k {
        return Err(Error::domain(format!(
            "state has dimension {k} but parameters are {}x{} / {}x{} / {}",
            params.theta.nrows(),
            params.theta.ncols(),
            params.sigma.nrows(),
            params.sigma.ncols(),
            params.mu.dim()
        )));
    }
    Ok(())
}

/// ẽ = e + Θ(μ − e)dt + Σ dW. No projection.
pub fn drift_diffusion_step(
    e: &RawAffect,
    params: &AgentParams,
    dt: f64,
    dw: &NoiseIncrement,
) -> Result<RawAffect> {
    check_dims(e, params)?;
    if dw.0.len() != e.dim() {
        return Err(Error::domain(format!(
            "noise has dimension {} but state has {}",
            dw.0.len(),
            e.dim()
        )));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let drift = &params.theta * (params.mu.as_vector() - &e.0) * dt;
    let diffusion = &params.sigma * &dw.0;
    Ok(RawAffect(&e.0 + drift + diffusion))
}

/// Mean path of the OU flow: μ + exp(−Θt)(e0 − μ), per component.
pub fn analytic_state(e0: &RawAffect, params: &AgentParams, t: f64) -> Result<RawAffect> {
    check_dims(e0, params)?;
    let theta = params.theta_diagonal()?;
    let mu = params.mu.as_slice();
    Ok(RawAffect(DVector::from_fn(e0.dim(), |k, _| {
        mu[k] + (-theta[k] * t).exp() * (e0.0[k] - mu[k])
    })))
}

/// e + Ψ·va.
pub fn apply_impulse(e: &RawAffect, psi: &DMatrix<f64>, va: [f64; 2]) -> RawAffect {
    assert_eq!(
        psi.nrows(),
        e.dim(),
        "psi rows must match the state dimension"
    );
    RawAffect(&e.0 + psi * Vector2::new(va[0], va[1]))
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("non-finite component {value} at index {index}")]
pub struct NonFinite {
    pub index: usize,
    pub value: f64,
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(e: &RawAffect) -> std::result::Result<EmotionVector, NonFinite> {
    if let Some((index, &value)) = e.0.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(NonFinite { index, value });
    }
    let mut sorted: Vec<f64> = e.0.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    let projected = e.0.map(|x| (x - tau).max(0.0));
    Ok(EmotionVector::from_projected(projected))
}

/// Stationary mean μ and per-component variance σ_k² / (2θ_k).
pub fn stationary_moments(params: &AgentParams) -> Result<(DVector<f64>, DVector<f64>)> {
    let theta = params.theta_diagonal()?;
    let sigma = params.sigma_diagonal()?;
    if let Some(t) = theta.iter().find(|&&t| t <= 0.0) {
        return Err(Error::domain(format!(
            "stiffness {t} <= 0 has no stationary law"
        )));
    }
    let var = DVector::from_fn(theta.len(), |k, _| sigma[k] * sigma[k] / (2.0 * theta[k]));
    Ok((params.mu.as_vector().clone(), var))
}

/// Impulse-free path of one agent, drawing the same substreams as the engine.
/// Returns the state after each of `steps` steps.
pub fn simulate_path(
    e0: &RawAffect,
    params: &AgentParams,
    dt: f64,
    steps: u64,
    seed: u64,
    agent: u64,
    project: bool,
) -> Result<Vec<RawAffect>> {
    let k = e0.dim();
    let mut e = e0.clone();
    let mut out = Vec::with_capacity(steps as usize);
    for step in 0..steps {
        let dw = NoiseIncrement::for_step(seed, agent, step, k, dt);
        let raw = drift_diffusion_step(&e, params, dt, &dw)?;
        e = if project {
            RawAffect::from(&project_simplex(&raw).map_err(|nf| Error::Numeric {
                agent: format!("{agent:#x}"),
                step,
                detail: nf.to_string(),
            })?)
        } else {
            if !raw.is_finite() {
                return Err(Error::Numeric {
                    agent: format!("{agent:#x}"),
                    step,
                    detail: "state diverged".into(),
                });
            }
            raw
        };
        out.push(e.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(theta: &[f64], sigma: &[f64], mu: &[f64]) -> AgentParams {
        let k = mu.len();
        AgentParams::diagonal(
            theta,
            sigma,
            DMatrix::zeros(k, 2),
            EmotionVector::new(mu.to_vec()).unwrap(),
            0.0,
        )
    }

    #[test]
    fn drift_fixed_point() {
        let p = params(&[1.0, 2.0], &[0.0, 0.0], &[0.3, 0.7]);
        let e = RawAffect::from_slice(&[0.3, 0.7]);
        let out = drift_diffusion_step(&e, &p, 0.1, &NoiseIncrement::zeros(2)).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn drift_hand_value() {
        let p = params(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 0.0]);
        let out =
            drift_diffusion_step(&RawAffect::zeros(2), &p, 0.1, &NoiseIncrement::zeros(2)).unwrap();
        assert_abs_diff_eq!(out.0[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out.0[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diffusion_hand_value() {
        let p = params(&[0.0, 0.0], &[0.2, 0.2], &[0.5, 0.5]);
        let e = RawAffect::from_slice(&[0.4, 0.6]);
        let dw = NoiseIncrement(DVector::from_column_slice(&[0.1, -0.1]));
        let out = drift_diffusion_step(&e, &p, 0.1, &dw).unwrap();
        assert_abs_diff_eq!(out.0[0], 0.42, epsilon = 1e-15);
        assert_abs_diff_eq!(out.0[1], 0.58, epsilon = 1e-15);
    }

    #[test]
    fn drift_rejects_dimension_mismatch() {
        let p = params(&[1.0, 1.0], &[0.0, 0.0], &[0.5, 0.5]);
        let e = RawAffect::zeros(3);
        assert!(drift_diffusion_step(&e, &p, 0.1, &NoiseIncrement::zeros(3)).is_err());
        let e = RawAffect::zeros(2);
        assert!(drift_diffusion_step(&e, &p, 0.1, &NoiseIncrement::zeros(3)).is_err());
    }

    #[test]
    fn analytic_examples() {
        let p = params(&[1.0, 1.0], &[0.0, 0.0], &[0.5, 0.5]);
        let e0 = RawAffect::from_slice(&[0.9, 0.1]);
        let start = analytic_state(&e0, &p, 0.0).unwrap();
        assert_abs_diff_eq!(start.0, e0.0, epsilon = 1e-15);
        let half = analytic_state(&e0, &p, 2f64.ln()).unwrap();
        assert_abs_diff_eq!(half.0[0] - 0.5, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(half.0[1] - 0.5, -0.2, epsilon = 1e-15);
        let late = analytic_state(&e0, &p, 50.0).unwrap();
        assert!((late.0[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn analytic_rejects_full_theta() {
        let mut p = params(&[1.0, 1.0], &[0.0, 0.0], &[0.5, 0.5]);
        p.theta[(1, 0)] = 0.5;
        let err = analytic_state(&RawAffect::zeros(2), &p, 1.0).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn impulse_examples() {
        let e = RawAffect::from_slice(&[0.5, 0.5]);
        assert_eq!(apply_impulse(&e, &DMatrix::zeros(2, 2), [0.3, -0.1]), e);
        let id = DMatrix::identity(2, 2);
        let out = apply_impulse(&e, &id, [0.3, -0.1]);
        assert_abs_diff_eq!(out.0[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(out.0[1], 0.4, epsilon = 1e-15);
        let doubled = apply_impulse(&e, &(id * 2.0), [0.3, -0.1]);
        assert_abs_diff_eq!(doubled.0[0] - 0.5, 2.0 * 0.3, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let on = project_simplex(&RawAffect::from_slice(&[0.5, 0.3, 0.2])).unwrap();
        for (a, b) in on.as_slice().iter().zip([0.5, 0.3, 0.2]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let p = project_simplex(&RawAffect::from_slice(&[0.8, 0.4, -0.2])).unwrap();
        for (a, b) in p.as_slice().iter().zip([0.7, 0.3, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let p = project_simplex(&RawAffect::from_slice(&[2.0, 0.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);
        assert!(project_simplex(&RawAffect::from_slice(&[f64::NAN, 1.0])).is_err());
        assert!(project_simplex(&RawAffect::from_slice(&[f64::INFINITY, 1.0])).is_err());
    }

    #[test]
    fn stationary_examples() {
        let p = params(&[1.0, 1.0, 1.0], &[0.2, 0.2, 0.2], &[0.2, 0.3, 0.5]);
        let (mean, var) = stationary_moments(&p).unwrap();
        assert_eq!(mean.as_slice(), p.mu.as_slice());
        for v in var.iter() {
            assert_abs_diff_eq!(*v, 0.02, epsilon = 1e-15);
        }
        let det = params(&[1.0, 1.0], &[0.0, 0.0], &[0.5, 0.5]);
        assert!(stationary_moments(&det)
            .unwrap()
            .1
            .iter()
            .all(|&v| v == 0.0));
        let bad = params(&[0.0, 1.0], &[0.1, 0.1], &[0.5, 0.5]);
        assert!(stationary_moments(&bad).is_err());
    }

    #[test]
    fn noise_for_step_is_reproducible() {
        let a = NoiseIncrement::for_step(1, 2, 3, 6, 0.1);
        let b = NoiseIncrement::for_step(1, 2, 3, 6, 0.1);
        assert_eq!(a, b);
        assert_ne!(a, NoiseIncrement::for_step(1, 2, 4, 6, 0.1));
    }

    #[test]
    fn euler_converges_first_order() {
        let p = params(&[0.5, 1.0, 2.0], &[0.0; 3], &[0.2, 0.3, 0.5]);
        let e0 = RawAffect::from_slice(&[0.9, 0.05, 0.05]);
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as u64;
            let mut e = e0.clone();
            let mut worst: f64 = 0.0;
            for i in 1..=n {
                e = drift_diffusion_step(&e, &p, dt, &NoiseIncrement::zeros(3)).unwrap();
                let exact = analytic_state(&e0, &p, i as f64 * dt).unwrap();
                worst = worst.max((&e.0 - &exact.0).amax());
            }
            worst
        };
        let coarse = err(2e-3);
        let fine = err(1e-3);
        assert!(coarse / fine > 1.8, "ratio {}", coarse / fine);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_on_simplex(v in prop::collection::vec(-3.0f64..3.0, 1..8)) {
            let p = project_simplex(&RawAffect::from_slice(&v)).unwrap();
            let s: f64 = p.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
            let again = project_simplex(&RawAffect::from(&p)).unwrap();
            for (a, b) in again.as_slice().iter().zip(p.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn impulse_is_additive(v1 in prop::array::uniform2(-1.0f64..1.0), v2 in prop::array::uniform2(-1.0f64..1.0)) {
            let psi = DMatrix::from_row_slice(3, 2, &[0.3, 0.1, -0.2, 0.4, 0.0, -0.5]);
            let e = RawAffect::from_slice(&[0.2, 0.3, 0.5]);
            let seq = apply_impulse(&apply_impulse(&e, &psi, v1), &psi, v2);
            let joint = apply_impulse(&e, &psi, [v1[0] + v2[0], v1[1] + v2[1]]);
            for (a, b) in seq.0.iter().zip(joint.0.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

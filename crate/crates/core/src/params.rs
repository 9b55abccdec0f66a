//! Per-type dynamical parameters synthesized from dichotomy multipliers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mbti::{Attitude, Axis, Judging, Lifestyle, MbtiProfile, Perceiving};
use crate::policy::EmotionLexicon;
use crate::priors::PriorTable;
use crate::types::EmotionVector;

/// Scalar base values and the four multiplier pairs.
///
/// Shipped numbers are modelling choices. Only their orderings
/// (J > P, F > T, I > E) carry meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsDefaults {
    /// Base stiffness, scaled by the J/P multiplier.
    pub theta0: f64,
    /// Base volatility, scaled by the S/N multiplier.
    pub sigma0: f64,
    /// Base susceptibility, scaled by the T/F multiplier.
    pub psi0: f64,
    /// Base activation threshold, scaled by the E/I multiplier.
    pub gamma0: f64,
    pub m_j: f64,
    pub m_p: f64,
    pub m_s: f64,
    pub m_n: f64,
    pub m_t: f64,
    pub m_f: f64,
    pub m_e: f64,
    pub m_i: f64,
    /// Optional K×2 susceptibility column map; derived from the lexicon when absent.
    pub psi_columns: Option<Vec<[f64; 2]>>,
}

impl Default for DynamicsDefaults {
    fn default() -> Self {
        DynamicsDefaults {
            theta0: 0.5,
            sigma0: 0.1,
            psi0: 0.05,
            gamma0: 0.7,
            m_j: 1.5,
            m_p: 0.7,
            m_s: 0.8,
            m_n: 1.25,
            m_t: 0.6,
            m_f: 1.5,
            m_e: 0.75,
            m_i: 1.4,
            psi_columns: None,
        }
    }
}

impl DynamicsDefaults {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("theta0", self.theta0),
            ("sigma0", self.sigma0),
            ("psi0", self.psi0),
            ("gamma0", self.gamma0),
            ("m_j", self.m_j),
            ("m_p", self.m_p),
            ("m_s", self.m_s),
            ("m_n", self.m_n),
            ("m_t", self.m_t),
            ("m_f", self.m_f),
            ("m_e", self.m_e),
            ("m_i", self.m_i),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "dynamics.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Replace each listed axis' multiplier pair by its geometric mean.
    pub fn neutralized(&self, axes: &[Axis]) -> DynamicsDefaults {
        let mut out = self.clone();
        for axis in axes {
            let (a, b) = match axis {
                Axis::EI => (&mut out.m_e, &mut out.m_i),
                Axis::SN => (&mut out.m_s, &mut out.m_n),
                Axis::TF => (&mut out.m_t, &mut out.m_f),
                Axis::JP => (&mut out.m_j, &mut out.m_p),
            };
            let g = (*a * *b).sqrt();
            *a = g;
            *b = g;
        }
        out
    }

    /// Resolve the K×2 column map: explicit rows if configured, else the lexicon default.
    pub fn column_map(&self, lexicon: &EmotionLexicon) -> Result<DMatrix<f64>> {
        match &self.psi_columns {
            Some(rows) => {
                if rows.len() != lexicon.len() {
                    return Err(Error::config(format!(
                        "dynamics.psi_columns has {} rows but the vocabulary has {} emotions",
                        rows.len(),
                        lexicon.len()
                    )));
                }
                if rows.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::config("dynamics.psi_columns must be finite"));
                }
                Ok(DMatrix::from_fn(rows.len(), 2, |r, c| rows[r][c]))
            }
            None => Ok(default_column_map(lexicon)),
        }
    }
}

/// Valence column: each emotion's own valence, so positive valence adds mass to
/// positive emotions and removes it from negative ones. Arousal column: non-neutral
/// emotions gain their arousal, neutral (zero-valence) emotions lose the mean
/// non-neutral arousal.
pub fn default_column_map(lexicon: &EmotionLexicon) -> DMatrix<f64> {
    let entries = lexicon.entries();
    let charged: Vec<f64> = entries
        .iter()
        .filter(|e| e.valence != 0.0)
        .map(|e| e.arousal)
        .collect();
    let mean_arousal = if charged.is_empty() {
        0.0
    } else {
        charged.iter().sum::<f64>() / charged.len() as f64
    };
    DMatrix::from_fn(entries.len(), 2, |r, c| {
        let e = &entries[r];
        match c {
            0 => e.valence,
            _ if e.valence != 0.0 => e.arousal,
            _ => -mean_arousal,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    /// K×K stiffness (1/time).
    pub theta: DMatrix<f64>,
    /// K×K volatility (per sqrt(time)).
    pub sigma: DMatrix<f64>,
    /// K×2 susceptibility, valence-arousal to emotion delta.
    pub psi: DMatrix<f64>,
    /// Baseline centroid.
    pub mu: EmotionVector,
    /// Activation threshold.
    pub gamma: f64,
}

fn diagonal_of(m: &DMatrix<f64>, name: &str) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Unsupported(format!("{name} must be square")));
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c && m[(r, c)] != 0.0 {
                return Err(Error::Unsupported(format!(
                    "{name} has off-diagonal entry ({r}, {c}); only diagonal matrices are supported"
                )));
            }
        }
    }
    Ok(m.diagonal().iter().copied().collect())
}

impl AgentParams {
    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn theta_diagonal(&self) -> Result<Vec<f64>> {
        diagonal_of(&self.theta, "theta")
    }

    pub fn sigma_diagonal(&self) -> Result<Vec<f64>> {
        diagonal_of(&self.sigma, "sigma")
    }

    /// Largest singular value of psi.
    pub fn psi_spectral_norm(&self) -> f64 {
        spectral_norm(&self.psi)
    }

    pub fn diagonal(
        theta: &[f64],
        sigma: &[f64],
        psi: DMatrix<f64>,
        mu: EmotionVector,
        gamma: f64,
    ) -> Self {
        AgentParams {
            theta: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(theta)),
            sigma: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(sigma)),
            psi,
            mu,
            gamma,
        }
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Build Θ, Σ, Ψ, μ and Γ for one profile.
pub fn synthesize_params(
    profile: MbtiProfile,
    base: &DynamicsDefaults,
    column_map: &DMatrix<f64>,
    priors: Option<&PriorTable>,
) -> Result<AgentParams> {
    base.validate()?;
    if column_map.ncols() != 2 {
        return Err(Error::config("psi column map must have exactly 2 columns"));
    }
    let k = column_map.nrows();
    let m_jp = match profile.lifestyle {
        Lifestyle::J => base.m_j,
        Lifestyle::P => base.m_p,
    };
    let m_sn = match profile.perceiving_fn {
        Perceiving::S => base.m_s,
        Perceiving::N => base.m_n,
    };
    let m_tf = match profile.judging_fn {
        Judging::T => base.m_t,
        Judging::F => base.m_f,
    };
    let m_ei = match profile.attitude {
        Attitude::E => base.m_e,
        Attitude::I => base.m_i,
    };
    let mu = match priors {
        Some(table) => {
            let dist = table
                .distribution(profile)
                .ok_or_else(|| Error::config(format!("prior table has no entry for {profile}")))?;
            if dist.len() != k {
                return Err(Error::config(format!(
                    "prior for {profile} has {} components but the vocabulary has {k}",
                    dist.len()
                )));
            }
            EmotionVector::new(dist.to_vec())?
        }
        None => EmotionVector::uniform(k),
    };
    Ok(AgentParams {
        theta: DMatrix::identity(k, k) * (base.theta0 * m_jp),
        sigma: DMatrix::identity(k, k) * (base.sigma0 * m_sn),
        psi: column_map * (base.psi0 * m_tf),
        mu,
        gamma: base.gamma0 * m_ei,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbti::parse_mbti;

    fn params(code: &str) -> AgentParams {
        let lex = EmotionLexicon::default();
        let base = DynamicsDefaults::default();
        let map = base.column_map(&lex).unwrap();
        synthesize_params(parse_mbti(code).unwrap(), &base, &map, None).unwrap()
    }

    #[test]
    fn judging_types_are_stiffer() {
        let j = params("INTJ").theta_diagonal().unwrap();
        let p = params("INTP").theta_diagonal().unwrap();
        assert!(j.iter().zip(&p).all(|(a, b)| a > b));
    }

    #[test]
    fn feeling_types_are_more_susceptible() {
        assert!(params("ENFJ").psi_spectral_norm() > params("ENTJ").psi_spectral_norm());
    }

    #[test]
    fn introverts_have_higher_threshold() {
        assert!(params("ISTJ").gamma > params("ESTJ").gamma);
    }

    #[test]
    fn pure_function() {
        assert_eq!(params("ESFP"), params("ESFP"));
    }

    #[test]
    fn rejects_non_positive_base() {
        let lex = EmotionLexicon::default();
        let base = DynamicsDefaults {
            theta0: 0.0,
            ..Default::default()
        };
        let map = default_column_map(&lex);
        let err = synthesize_params(parse_mbti("ENTJ").unwrap(), &base, &map, None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn neutralizing_uses_geometric_mean() {
        let base = DynamicsDefaults::default();
        let n = base.neutralized(&[Axis::TF]);
        let g = (base.m_t * base.m_f).sqrt();
        assert_eq!(n.m_t, g);
        assert_eq!(n.m_f, g);
        assert_eq!(n.m_j, base.m_j);
    }

    #[test]
    fn off_diagonal_theta_is_unsupported() {
        let mut p = params("ENTJ");
        p.theta[(0, 1)] = 0.1;
        assert!(matches!(p.theta_diagonal(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn default_column_map_signs() {
        let map = default_column_map(&EmotionLexicon::default());
        // neutral loses mass under arousal, anger gains; valence column follows the lexicon
        assert!(map[(0, 1)] < 0.0);
        assert!(map[(4, 1)] > 0.0);
        assert!(map[(1, 0)] > 0.0 && map[(4, 0)] < 0.0);
        assert_eq!(map[(0, 0)], 0.0);
    }

    #[test]
    fn uses_prior_for_mu() {
        let lex = EmotionLexicon::default();
        let base = DynamicsDefaults::default();
        let map = base.column_map(&lex).unwrap();
        let table = PriorTable::shipped();
        let p = parse_mbti("ISTP").unwrap();
        let params = synthesize_params(p, &base, &map, Some(&table)).unwrap();
        assert_eq!(params.mu.as_slice(), table.distribution(p).unwrap());
    }
}

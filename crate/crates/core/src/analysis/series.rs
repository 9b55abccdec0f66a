//! Sentiment series built from trajectory logs, and the metrics defined on them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::stats::{spearman_rho, wilcoxon_signed_rank, TestResult};
use crate::engine::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::mbti::{Axis, MbtiProfile};
use crate::policy::EmotionLexicon;
use crate::types::{AgentId, EmotionVector};

/// e · valence.
pub fn sentiment_score(e: &EmotionVector, lexicon: &EmotionLexicon) -> f64 {
    dot_valence(e.as_slice(), &lexicon.valences())
}

pub fn dot_valence(e: &[f64], valences: &[f64]) -> f64 {
    assert_eq!(
        e.len(),
        valences.len(),
        "emotion and valence dimensions differ"
    );
    e.iter().zip(valences).map(|(a, v)| a * v).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentSeries {
    pub group: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SentimentSeries {
    pub fn new(group: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::domain("series times and values differ in length"));
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::domain("series times must be strictly increasing"));
        }
        Ok(SentimentSeries {
            group: group.into(),
            times,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation; `None` outside the covered interval.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        const SLACK: f64 = 1e-9;
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if t < first - SLACK || t > last + SLACK {
            return None;
        }
        let i = self.times.partition_point(|&x| x < t);
        if i == 0 {
            return Some(self.values[0]);
        }
        if i == self.times.len() {
            return Some(self.values[i - 1]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        if (t1 - t).abs() <= SLACK {
            return Some(self.values[i]);
        }
        let w = (t - t0) / (t1 - t0);
        Some(self.values[i - 1] * (1.0 - w) + self.values[i] * w)
    }

    /// Mean of the values with time in [from, to).
    pub fn window_mean(&self, from: f64, to: f64) -> Option<f64> {
        let picked: Vec<f64> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= from && **t < to)
            .map(|(_, v)| *v)
            .collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Grouping {
    All,
    ByType,
    /// One series per pole of each listed axis.
    ByAxis(Vec<Axis>),
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "all" => Ok(Grouping::All),
            "type" | "by-type" => Ok(Grouping::ByType),
            "axis" | "by-axis" => Ok(Grouping::ByAxis(Axis::ALL.to_vec())),
            _ => {
                let rest = lower
                    .strip_prefix("axis:")
                    .or_else(|| lower.strip_prefix("by-axis:"))
                    .ok_or_else(|| {
                        Error::config(format!("unknown grouping {s:?} (all, type, axis, axis:TF)"))
                    })?;
                let axes = rest
                    .split(',')
                    .map(|a| a.trim().parse::<Axis>().map_err(Error::config))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Grouping::ByAxis(axes))
            }
        }
    }
}

fn groups_of(profile: MbtiProfile, grouping: &Grouping) -> Vec<String> {
    match grouping {
        Grouping::All => vec!["all".into()],
        Grouping::ByType => vec![profile.code()],
        Grouping::ByAxis(axes) => axes
            .iter()
            .map(|&a| profile.letter(a).to_string())
            .collect(),
    }
}

fn group_order(grouping: &Grouping) -> Vec<String> {
    match grouping {
        Grouping::All => vec!["all".into()],
        Grouping::ByType => MbtiProfile::all().iter().map(MbtiProfile::code).collect(),
        Grouping::ByAxis(axes) => axes
            .iter()
            .flat_map(|a| {
                let (p, q) = a.poles();
                [p.to_string(), q.to_string()]
            })
            .collect(),
    }
}

/// Per-group mean sentiment at every logged time.
pub fn group_trajectories(
    records: &[TrajectoryRecord],
    grouping: &Grouping,
    lexicon: &EmotionLexicon,
) -> Result<Vec<SentimentSeries>> {
    let valences = lexicon.valences();
    // group -> step -> (t, sum, count)
    let mut acc: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for r in records {
        if r.emotion.len() != valences.len() {
            return Err(Error::domain(format!(
                "record for {} has {} emotion components, lexicon has {}",
                r.agent_id,
                r.emotion.len(),
                valences.len()
            )));
        }
        let s = dot_valence(&r.emotion, &valences);
        for g in groups_of(r.mbti, grouping) {
            let cell = acc
                .entry(g)
                .or_default()
                .entry(r.step)
                .or_insert((r.t, 0.0, 0));
            cell.1 += s;
            cell.2 += 1;
        }
    }
    let mut out = Vec::new();
    for g in group_order(grouping) {
        if let Some(steps) = acc.remove(&g) {
            let (times, values) = steps
                .values()
                .map(|&(t, sum, n)| (t, sum / n as f64))
                .unzip();
            out.push(SentimentSeries::new(g, times, values)?);
        }
    }
    Ok(out)
}

/// Plot data with columns t, group, mean_sentiment.
pub fn plot_csv(series: &[SentimentSeries]) -> String {
    let mut out = String::from("t,group,mean_sentiment\n");
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            let _ = writeln!(out, "{t},{},{v}", s.group);
        }
    }
    out
}

/// Inverse of [`plot_csv`].
pub fn parse_plot_csv(text: &str) -> Result<Vec<SentimentSeries>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::config("plot CSV is empty"))?;
    if header.trim() != "t,group,mean_sentiment" {
        return Err(Error::config(format!(
            "unexpected plot CSV header {header:?}"
        )));
    }
    let mut groups: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::config(format!("plot CSV line {}: malformed row {line:?}", i + 2));
        if fields.len() != 3 {
            return Err(bad());
        }
        let t: f64 = fields[0].parse().map_err(|_| bad())?;
        let v: f64 = fields[2].parse().map_err(|_| bad())?;
        match groups.iter_mut().find(|(g, _, _)| g == fields[1]) {
            Some((_, ts, vs)) => {
                ts.push(t);
                vs.push(v);
            }
            None => groups.push((fields[1].to_string(), vec![t], vec![v])),
        }
    }
    groups
        .into_iter()
        .map(|(g, ts, vs)| SentimentSeries::new(g, ts, vs))
        .collect()
}

fn aligned(sim: &SentimentSeries, reference: &SentimentSeries) -> Vec<(f64, f64)> {
    sim.times
        .iter()
        .zip(&sim.values)
        .filter_map(|(&t, &v)| reference.value_at(t).map(|r| (v, r)))
        .collect()
}

/// Mean |sim − ref| over sim's time points, with ref linearly interpolated.
pub fn polarity_mae(sim: &SentimentSeries, reference: &SentimentSeries) -> Result<f64> {
    let pairs = aligned(sim, reference);
    if pairs.is_empty() {
        return Err(Error::domain(format!(
            "series {:?} and reference {:?} do not overlap in time",
            sim.group, reference.group
        )));
    }
    Ok(pairs.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Signed-rank test on the aligned differences sim − ref.
pub fn paired_wilcoxon(sim: &SentimentSeries, reference: &SentimentSeries) -> Result<TestResult> {
    let diffs: Vec<f64> = aligned(sim, reference).iter().map(|(a, b)| a - b).collect();
    wilcoxon_signed_rank(&diffs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentConsistency {
    pub agent_id: AgentId,
    pub mbti: MbtiProfile,
    /// Time-averaged emotion vector over the run.
    pub empirical: Vec<f64>,
    /// `None` when either vector is constant.
    pub rho: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub agents: Vec<AgentConsistency>,
    pub mean_rho: f64,
    pub defined: usize,
}

/// Spearman ρ between each agent's time-averaged emotion vector and its
/// baseline μ, plus the mean over agents where ρ is defined.
pub fn consistency<F>(records: &[TrajectoryRecord], mut mu_of: F) -> Result<ConsistencyReport>
where
    F: FnMut(&AgentId, MbtiProfile) -> Option<Vec<f64>>,
{
    let mut sums: BTreeMap<&AgentId, (MbtiProfile, Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let cell = sums
            .entry(&r.agent_id)
            .or_insert_with(|| (r.mbti, vec![0.0; r.emotion.len()], 0));
        if cell.1.len() != r.emotion.len() {
            return Err(Error::domain(format!(
                "inconsistent emotion dimension for {}",
                r.agent_id
            )));
        }
        for (s, e) in cell.1.iter_mut().zip(&r.emotion) {
            *s += e;
        }
        cell.2 += 1;
    }
    let mut agents = Vec::with_capacity(sums.len());
    for (id, (mbti, sum, n)) in sums {
        let empirical: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mu = mu_of(id, mbti)
            .ok_or_else(|| Error::config(format!("no baseline μ known for agent {id}")))?;
        if mu.len() != empirical.len() {
            return Err(Error::domain(format!(
                "baseline for {id} has the wrong dimension"
            )));
        }
        let (rho, p) = match spearman_rho(&empirical, &mu) {
            Ok(r) => (Some(r.statistic), Some(r.p)),
            Err(Error::Stats(_)) => (None, None),
            Err(e) => return Err(e),
        };
        agents.push(AgentConsistency {
            agent_id: id.clone(),
            mbti,
            empirical,
            rho,
            p,
        });
    }
    let defined: Vec<f64> = agents.iter().filter_map(|a| a.rho).collect();
    if defined.is_empty() {
        return Err(Error::Stats(
            "consistency is undefined: every agent has a constant emotion average or baseline"
                .into(),
        ));
    }
    Ok(ConsistencyReport {
        mean_rho: defined.iter().sum::<f64>() / defined.len() as f64,
        defined: defined.len(),
        agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbti::parse_mbti;
    use approx::assert_abs_diff_eq;

    fn series(v: &[f64]) -> SentimentSeries {
        SentimentSeries::new("g", (0..v.len()).map(|i| i as f64).collect(), v.to_vec()).unwrap()
    }

    fn record(id: &str, mbti: &str, step: u64, emotion: Vec<f64>) -> TrajectoryRecord {
        TrajectoryRecord {
            t: step as f64 * 0.1,
            step,
            agent_id: AgentId::new(id),
            mbti: parse_mbti(mbti).unwrap(),
            emotion,
            belief_mean: 0.0,
            belief_precision: 1.0,
            activated: false,
            message: None,
        }
    }

    #[test]
    fn sentiment_hand_values() {
        let lex = EmotionLexicon::default();
        assert_eq!(sentiment_score(&EmotionVector::point_mass(6, 0), &lex), 0.0);
        assert_eq!(
            sentiment_score(&EmotionVector::point_mass(6, 4), &lex),
            -0.8
        );
        assert_eq!(dot_valence(&[0.5, 0.5], &[1.0, -1.0]), 0.0);
    }

    #[test]
    fn mae_hand_values() {
        assert_eq!(
            polarity_mae(&series(&[0.1, 0.3]), &series(&[0.1, 0.3])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            polarity_mae(&series(&[0.3, 0.5]), &series(&[0.1, 0.3])).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            polarity_mae(&series(&[0.0, 0.5]), &series(&[0.1, 0.1])).unwrap(),
            0.25,
            epsilon = 1e-12
        );
        let late = SentimentSeries::new("g", vec![10.0, 11.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            polarity_mae(&series(&[0.0, 0.5]), &late),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mae_interpolates_reference() {
        let sim = SentimentSeries::new("g", vec![0.5], vec![0.0]).unwrap();
        let reference = SentimentSeries::new("g", vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            polarity_mae(&sim, &reference).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn series_rejects_unordered_times() {
        assert!(SentimentSeries::new("g", vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn grouping_parses() {
        assert_eq!("all".parse::<Grouping>().unwrap(), Grouping::All);
        assert_eq!(
            "axis:TF".parse::<Grouping>().unwrap(),
            Grouping::ByAxis(vec![Axis::TF])
        );
        assert!("axis:QQ".parse::<Grouping>().is_err());
    }

    #[test]
    fn groups_average_members() {
        let lex = EmotionLexicon::default();
        // happy (0.8) vs anger (-0.8)
        let recs = vec![
            record("a", "INTJ", 1, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            record("b", "INFJ", 1, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        ];
        let all = group_trajectories(&recs, &Grouping::All, &lex).unwrap();
        assert_eq!(all.len(), 1);
        assert_abs_diff_eq!(all[0].values[0], 0.0, epsilon = 1e-12);
        let tf = group_trajectories(&recs, &"axis:TF".parse().unwrap(), &lex).unwrap();
        assert_eq!(
            tf.iter().map(|s| s.group.as_str()).collect::<Vec<_>>(),
            ["T", "F"]
        );
        assert_abs_diff_eq!(tf[0].values[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(tf[1].values[0], -0.8, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let s = vec![
            series(&[0.1, -0.25]),
            SentimentSeries::new("h", vec![0.5], vec![1.0]).unwrap(),
        ];
        assert_eq!(parse_plot_csv(&plot_csv(&s)).unwrap(), s);
    }

    #[test]
    fn consistency_matches_prior_order() {
        let recs = vec![
            record("a", "INTJ", 1, vec![0.5, 0.3, 0.2]),
            record("a", "INTJ", 2, vec![0.7, 0.2, 0.1]),
        ];
        let report = consistency(&recs, |_, _| Some(vec![0.6, 0.3, 0.1])).unwrap();
        assert_eq!(report.defined, 1);
        assert_abs_diff_eq!(report.mean_rho, 1.0, epsilon = 1e-12);
        let flat = consistency(&recs, |_, _| Some(vec![1.0 / 3.0; 3]));
        assert!(matches!(flat, Err(Error::Stats(_))));
    }
}

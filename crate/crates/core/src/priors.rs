//! Per-type emotion priors: corpus ingestion, additive smoothing, entropy and
//! grid quantization.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mbti::{parse_mbti, MbtiProfile};
use crate::types::Vocabulary;

pub const DEFAULT_SMOOTHING_ALPHA: f64 = 1.0;
pub const DEFAULT_QUANT_EPSILON: f64 = 0.05;

const SHIPPED_PRIORS: &str = include_str!("../assets/default_priors.json");

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedRecord {
    pub author_type: MbtiProfile,
    /// Index into the vocabulary.
    pub emotion: usize,
    pub text: Option<String>,
    pub sentiment: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    author_type: String,
    emotion: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    sentiment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct AnnotatedCorpus {
    vocabulary: Vocabulary,
    records: BTreeMap<MbtiProfile, Vec<AnnotatedRecord>>,
    pub rejects: Vec<Rejection>,
}

impl AnnotatedCorpus {
    pub fn empty(vocabulary: Vocabulary) -> Self {
        AnnotatedCorpus {
            vocabulary,
            records: BTreeMap::new(),
            rejects: Vec::new(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self, profile: MbtiProfile) -> &[AnnotatedRecord] {
        self.records.get(&profile).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn push(&mut self, record: AnnotatedRecord) -> Result<()> {
        if record.emotion >= self.vocabulary.len() {
            return Err(Error::domain(format!(
                "emotion index {} outside vocabulary",
                record.emotion
            )));
        }
        self.records
            .entry(record.author_type)
            .or_default()
            .push(record);
        Ok(())
    }

    /// Emotion counts N(e_k, type) in vocabulary order.
    pub fn counts(&self, profile: MbtiProfile) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocabulary.len()];
        for r in self.records(profile) {
            counts[r.emotion] += 1;
        }
        counts
    }
}

fn parse_record(line: &str, vocab: &Vocabulary) -> std::result::Result<AnnotatedRecord, String> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let author_type = parse_mbti(raw.author_type.trim()).map_err(|e| e.to_string())?;
    let emotion = vocab
        .index_of(&raw.emotion)
        .ok_or_else(|| format!("unknown emotion label {:?}", raw.emotion))?;
    if let Some(s) = raw.sentiment {
        if !(s.is_finite() && (-1.0..=1.0).contains(&s)) {
            return Err(format!("sentiment {s} outside [-1, 1]"));
        }
    }
    Ok(AnnotatedRecord {
        author_type,
        emotion,
        text: raw.text,
        sentiment: raw.sentiment,
    })
}

/// Read JSONL records. Blank lines are skipped; bad lines are rejected with
/// their line number. More than half the lines rejected is a hard failure.
pub fn ingest_corpus<R: BufRead>(reader: R, vocab: &Vocabulary) -> Result<AnnotatedCorpus> {
    let mut corpus = AnnotatedCorpus::empty(vocab.clone());
    let mut seen = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line =
            line.map_err(|e| Error::Corpus(format!("read failure at line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        match parse_record(&line, vocab) {
            Ok(rec) => corpus.records.entry(rec.author_type).or_default().push(rec),
            Err(reason) => corpus.rejects.push(Rejection {
                line: i + 1,
                reason,
            }),
        }
    }
    if seen > 0 && corpus.rejects.len() * 2 > seen {
        return Err(Error::Corpus(format!(
            "{} of {seen} records rejected (first: line {}: {})",
            corpus.rejects.len(),
            corpus.rejects[0].line,
            corpus.rejects[0].reason
        )));
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub distribution: Vec<f64>,
    pub entropy_bits: f64,
    pub support_count: u64,
}

/// Per-type emotion distributions, serialized as an object keyed by type code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorTable {
    entries: BTreeMap<MbtiProfile, PriorEntry>,
}

impl PriorTable {
    pub fn from_entries(entries: BTreeMap<MbtiProfile, PriorEntry>) -> Self {
        PriorTable { entries }
    }

    /// The hand-authored default table bundled with the crate (six-emotion vocabulary).
    pub fn shipped() -> Self {
        PriorTable::from_json(SHIPPED_PRIORS).expect("bundled prior table is valid")
    }

    /// Parse and validate a table. Entropies are recomputed from the distributions.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut table: PriorTable = serde_json::from_str(s)
            .map_err(|e| Error::config(format!("invalid prior table: {e}")))?;
        let dims: std::collections::BTreeSet<usize> = table
            .entries
            .values()
            .map(|e| e.distribution.len())
            .collect();
        if dims.len() > 1 {
            return Err(Error::config("prior table rows have different lengths"));
        }
        for (profile, entry) in table.entries.iter_mut() {
            entry.entropy_bits = affective_entropy(&entry.distribution)
                .map_err(|e| Error::config(format!("prior for {profile}: {e}")))?;
        }
        Ok(table)
    }

    pub fn uniform(k: usize) -> Self {
        let entries = MbtiProfile::all()
            .into_iter()
            .map(|p| {
                (
                    p,
                    PriorEntry {
                        distribution: vec![1.0 / k as f64; k],
                        entropy_bits: (k as f64).log2(),
                        support_count: 0,
                    },
                )
            })
            .collect();
        PriorTable { entries }
    }

    pub fn get(&self, profile: MbtiProfile) -> Option<&PriorEntry> {
        self.entries.get(&profile)
    }

    pub fn distribution(&self, profile: MbtiProfile) -> Option<&[f64]> {
        self.entries
            .get(&profile)
            .map(|e| e.distribution.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MbtiProfile, &PriorEntry)> {
        self.entries.iter()
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.values().next().map(|e| e.distribution.len())
    }

    /// Quantize every row onto the ε grid and refresh entropies.
    pub fn quantized(&self, epsilon: f64) -> Result<PriorTable> {
        let mut entries = BTreeMap::new();
        for (p, e) in &self.entries {
            let distribution = quantize_distribution(&e.distribution, epsilon)?;
            let entropy_bits = affective_entropy(&distribution)?;
            entries.insert(
                *p,
                PriorEntry {
                    distribution,
                    entropy_bits,
                    support_count: e.support_count,
                },
            );
        }
        Ok(PriorTable { entries })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("prior table serializes")
    }
}

/// Additive smoothing of one count vector: (N_k + α) / (Σ N + Kα).
pub fn smooth_counts(counts: &[u64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::config(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let k = counts.len() as f64;
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let denom = total + k * alpha;
    Ok(counts.iter().map(|&c| (c as f64 + alpha) / denom).collect())
}

/// Smoothed prior for all sixteen types; types absent from the corpus get the uniform prior.
pub fn estimate_priors(corpus: &AnnotatedCorpus, alpha: f64) -> Result<PriorTable> {
    let mut entries = BTreeMap::new();
    for profile in MbtiProfile::all() {
        let counts = corpus.counts(profile);
        let distribution = smooth_counts(&counts, alpha)?;
        let entropy_bits = affective_entropy(&distribution)?;
        entries.insert(
            profile,
            PriorEntry {
                distribution,
                entropy_bits,
                support_count: counts.iter().sum(),
            },
        );
    }
    Ok(PriorTable { entries })
}

/// Shannon entropy in bits, with 0·log 0 = 0.
pub fn affective_entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::domain(
            "distribution has negative or non-finite entries",
        ));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("distribution sums to {sum}, not 1")));
    }
    let h: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    Ok(h.max(0.0))
}

/// Snap every component to the nearest multiple of ε, ties away from zero.
pub fn snap_to_grid(dist: &[f64], epsilon: f64) -> Vec<f64> {
    // m / n is exact-rounded where ε·m is not (0.05 · 12 ≠ 0.6)
    let n = (1.0 / epsilon).round();
    if (n * epsilon - 1.0).abs() < 1e-12 {
        dist.iter().map(|&p| (p * n).round() / n).collect()
    } else {
        dist.iter()
            .map(|&p| epsilon * (p / epsilon).round())
            .collect()
    }
}

const MAX_QUANT_ROUNDS: usize = 32;

/// Coarse-grain onto the ε grid and renormalize.
///
/// Snap and renormalize repeat until the snapped point stops moving, so the
/// result is a fixed point: quantizing it again returns it unchanged. The
/// first round is the plain snap-then-divide-by-Z rule.
pub fn quantize_distribution(dist: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!(
            "quantization epsilon must be in (0, 1), got {epsilon}"
        )));
    }
    if dist.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("distribution has non-finite entries"));
    }
    let mut snapped = snap_to_grid(dist, epsilon);
    for _ in 0..MAX_QUANT_ROUNDS {
        let z: f64 = snapped.iter().sum();
        if z <= 0.0 {
            return Err(Error::Quantization { epsilon });
        }
        let normalized: Vec<f64> = snapped.iter().map(|s| s / z).collect();
        let again = snap_to_grid(&normalized, epsilon);
        if again == snapped {
            return Ok(normalized);
        }
        snapped = again;
    }
    Err(Error::domain(format!(
        "quantization did not reach a fixed point within {MAX_QUANT_ROUNDS} rounds"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeSummary {
    pub mbti: MbtiProfile,
    pub distribution: Vec<f64>,
    pub entropy_bits: f64,
    pub support_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorReport {
    pub vocabulary: Vec<String>,
    pub max_entropy_bits: f64,
    pub types: Vec<TypeSummary>,
    pub mean_entropy_thinking: f64,
    pub mean_entropy_feeling: f64,
    /// Corpus lines that were skipped, if the table came from a corpus.
    pub rejects: Vec<Rejection>,
}

impl PriorReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<6}", "type"));
        for l in &self.vocabulary {
            out.push_str(&format!(" {:>11}", l));
        }
        out.push_str(&format!(" {:>9} {:>8}\n", "H(bits)", "n"));
        for t in &self.types {
            out.push_str(&format!("{:<6}", t.mbti.code()));
            for p in &t.distribution {
                out.push_str(&format!(" {:>11.4}", p));
            }
            out.push_str(&format!(
                " {:>9.4} {:>8}\n",
                t.entropy_bits, t.support_count
            ));
        }
        out.push_str(&format!(
            "mean entropy: T = {:.4} bits, F = {:.4} bits (max {:.4})\n",
            self.mean_entropy_thinking, self.mean_entropy_feeling, self.max_entropy_bits
        ));
        for r in &self.rejects {
            out.push_str(&format!("rejected line {}: {}\n", r.line, r.reason));
        }
        out
    }
}

/// Per-type rows plus T-group versus F-group mean entropy.
pub fn prior_report(table: &PriorTable, vocab: &Vocabulary) -> PriorReport {
    let mut t_sum = 0.0;
    let mut t_n = 0usize;
    let mut f_sum = 0.0;
    let mut f_n = 0usize;
    let mut types = Vec::new();
    for (p, e) in table.iter() {
        if p.is_feeling() {
            f_sum += e.entropy_bits;
            f_n += 1;
        } else {
            t_sum += e.entropy_bits;
            t_n += 1;
        }
        types.push(TypeSummary {
            mbti: *p,
            distribution: e.distribution.clone(),
            entropy_bits: e.entropy_bits,
            support_count: e.support_count,
        });
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    PriorReport {
        vocabulary: vocab.labels().to_vec(),
        max_entropy_bits: (vocab.len() as f64).log2(),
        types,
        mean_entropy_thinking: mean(t_sum, t_n),
        mean_entropy_feeling: mean(f_sum, f_n),
        rejects: Vec::new(),
    }
}

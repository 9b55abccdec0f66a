//! Rank statistics: Spearman correlation and the Wilcoxon signed-rank test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Largest n for which the Spearman p-value is an exact permutation count.
pub const SPEARMAN_EXACT_MAX: usize = 8;
/// Largest n (after dropping zeros) for which the Wilcoxon null is enumerated.
pub const WILCOXON_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
    pub n: usize,
    pub exact: bool,
}

/// 1-based ranks, ties get the mean of the positions they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Visit every permutation of `v` (Heap's algorithm, iterative).
fn for_each_permutation(v: &mut [f64], mut f: impl FnMut(&[f64])) {
    let n = v.len();
    let mut c = vec![0usize; n];
    f(v);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                v.swap(0, i);
            } else {
                v.swap(c[i], i);
            }
            f(v);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Spearman ρ with a two-sided p-value.
///
/// Exact permutation p for n ≤ 8, Student-t approximation above.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!(
            "spearman needs at least 3 pairs, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("spearman input has non-finite values"));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::Stats(
            "correlation is undefined for a constant input".into(),
        ));
    }
    let rx = average_ranks(x);
    let mut ry = average_ranks(y);
    let rho = pearson(&rx, &ry).clamp(-1.0, 1.0);
    if n <= SPEARMAN_EXACT_MAX {
        let target = rho.abs() - 1e-12;
        let (mut hits, mut total) = (0u64, 0u64);
        for_each_permutation(&mut ry, |perm| {
            total += 1;
            if pearson(&rx, perm).abs() >= target {
                hits += 1;
            }
        });
        return Ok(TestResult {
            statistic: rho,
            p: hits as f64 / total as f64,
            n,
            exact: true,
        });
    }
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Stats(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)
    };
    Ok(TestResult {
        statistic: rho,
        p,
        n,
        exact: false,
    })
}

/// Signed-rank test on paired differences, two-sided.
///
/// Zeros are dropped. The statistic is min(W+, W−). For n ≤ 12 the null is
/// enumerated exactly (conditional on the tie pattern); above that a normal
/// approximation with continuity and tie corrections is used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<TestResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::domain("wilcoxon input has non-finite values"));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if !diffs.is_empty() && nonzero.is_empty() {
        return Err(Error::Stats(
            "every paired difference is zero; the signed-rank test is degenerate".into(),
        ));
    }
    let n = nonzero.len();
    if n < 5 {
        return Err(Error::Stats(format!(
            "wilcoxon needs at least 5 nonzero differences, got {n}"
        )));
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    if n <= WILCOXON_EXACT_MAX {
        // averaged ranks are multiples of 1/2, so doubled ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0u64; max + 1];
        counts[0] = 1;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let observed = (2.0 * w_plus).round() as usize;
        let all = 1u64 << n;
        let lower: u64 = counts[..=observed].iter().sum();
        let upper: u64 = counts[observed..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / all as f64).min(1.0);
        return Ok(TestResult {
            statistic,
            p,
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(TestResult {
        statistic,
        p,
        n,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            vec![2.0, 3.5, 3.5, 1.0]
        );
    }

    #[test]
    fn spearman_hand_values() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(
            spearman_rho(&x, &x).unwrap().statistic,
            1.0,
            epsilon = 1e-12
        );
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_abs_diff_eq!(
            spearman_rho(&x, &rev).unwrap().statistic,
            -1.0,
            epsilon = 1e-12
        );
        // Σd² = 4, so ρ = 1 − 24/120
        let r = spearman_rho(&x, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.8, epsilon = 1e-12);
        assert!(r.exact);
    }

    #[test]
    fn spearman_perfect_p_is_two_over_factorial() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = spearman_rho(&x, &x).unwrap();
        assert_abs_diff_eq!(r.p, 2.0 / 120.0, epsilon = 1e-15);
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Stats(_))
        ));
        assert!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_large_n_uses_t() {
        let x: Vec<f64> = (0..30).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 1.7).sin()).collect();
        let r = spearman_rho(&x, &y).unwrap();
        assert!(!r.exact);
        assert!((0.0..=1.0).contains(&r.p));
    }

    #[test]
    fn wilcoxon_hand_values() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.p, 0.03125);
        assert_eq!(r.statistic, 0.0);
        let sym = wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0, 3.0, -3.0]).unwrap();
        assert_eq!(sym.p, 1.0);
        assert!(matches!(
            wilcoxon_signed_rank(&[0.0; 8]),
            Err(Error::Stats(_))
        ));
        assert!(wilcoxon_signed_rank(&[1.0, 2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn wilcoxon_normal_path() {
        let d: Vec<f64> = (1..=30)
            .map(|i| f64::from(i) * if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert!(!r.exact);
        assert_eq!(r.statistic, 165.0);
        // W+ = 300, mean 232.5, var 2363.75: z = 67 / 48.618..., reference value from scipy
        assert_abs_diff_eq!(r.p, 0.168_178_979_723_352_5, epsilon = 1e-9);
    }
}

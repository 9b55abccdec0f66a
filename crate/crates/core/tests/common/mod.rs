//! Independent oracles shared by the integration tests. Nothing here calls the
//! library routine it checks.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

/// One line per criterion, written straight to stderr so it survives output capture.
pub fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("[acceptance {id:>2}] {verdict} {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

/// Collect failures for a criterion instead of stopping at the first.
#[derive(Default)]
pub struct Checks {
    failures: Vec<String>,
    passed: usize,
}

impl Checks {
    pub fn check(&mut self, cond: bool, what: impl FnOnce() -> String) {
        if cond {
            self.passed += 1;
        } else {
            self.failures.push(what());
        }
    }

    pub fn finish(self, id: u32, name: &str, summary: &str) {
        let ok = self.failures.is_empty();
        let detail = if ok {
            format!("{} checks; {summary}", self.passed)
        } else {
            format!(
                "{} of {} checks failed; first: {}",
                self.failures.len(),
                self.failures.len() + self.passed,
                self.failures[0]
            )
        };
        report(id, name, ok, &detail);
    }
}

// ---- simplex ----

/// Brute-force Euclidean projection onto the simplex: try every support,
/// keep the feasible candidate closest to v.
pub fn brute_force_projection(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; k];
        let mut feasible = true;
        for &i in &support {
            x[i] = v[i] - shift;
            if x[i] < -1e-15 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("some support is always feasible").1
}

// ---- information ----

pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

// ---- ranks and tests ----

/// Rank of each element (1-based); inputs must be tie-free.
pub fn simple_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut r = vec![0.0; x.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = (rank + 1) as f64;
    }
    r
}

/// ρ = 1 − 6Σd² / (n(n² − 1)) for tie-free data.
pub fn rank_formula_rho(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (simple_ranks(x), simple_ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// Two-sided exact permutation p for the rank-formula ρ (tie-free data).
pub fn spearman_permutation_p(x: &[f64], y: &[f64], perms: &[Vec<usize>]) -> f64 {
    let n = x.len();
    let rx = simple_ranks(x);
    let ry = simple_ranks(y);
    let s_obs: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    let nf = n as f64;
    let rho_of = |s: f64| 1.0 - 6.0 * s / (nf * (nf * nf - 1.0));
    let obs = rho_of(s_obs).abs();
    let hits = perms
        .iter()
        .filter(|p| {
            let s: f64 = (0..n).map(|i| (rx[i] - ry[p[i]]).powi(2)).sum();
            rho_of(s).abs() >= obs - 1e-12
        })
        .count();
    hits as f64 / perms.len() as f64
}

/// Two-sided signed-rank p by visiting every sign assignment of the
/// observed absolute values (midranks for ties).
pub fn signed_rank_enumeration_p(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let w_obs: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for signs in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| signs >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= w_obs + 1e-9 {
            le += 1;
        }
        if w >= w_obs - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

// ---- stub chat-completion endpoint ----

pub struct Stub {
    pub url: String,
    pub served: Arc<AtomicUsize>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl Stub {
    /// Answer up to `limit` requests with `content`, then close the socket
    /// (every later connection is refused).
    pub fn start(content: &str, limit: usize) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let served = Arc::new(AtomicUsize::new(0));
        let counter = served.clone();
        let body = format!(
            r#"{{"id":"stub","object":"chat.completion","choices":[{{"index":0,"message":{{"role":"assistant","content":{}}},"finish_reason":"stop"}}]}}"#,
            serde_json::to_string(content).unwrap()
        );
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if counter.load(Ordering::SeqCst) >= limit {
                    break;
                }
                let Ok(mut stream) = stream else { continue };
                if serve_one(&mut stream, &body).is_ok() {
                    counter.fetch_add(1, Ordering::SeqCst);
                }
            }
            // listener dropped here
        });
        Stub {
            url,
            served,
            handle: Some(handle),
        }
    }

    pub fn served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }

    /// Make the accept loop notice a reached limit, then wait for it to exit.
    pub fn shutdown(mut self) {
        if let Some(h) = self.handle.take() {
            let addr = self
                .url
                .trim_start_matches("http://")
                .split('/')
                .next()
                .unwrap()
                .to_string();
            let _ = std::net::TcpStream::connect(addr);
            let _ = h.join();
        }
    }
}

fn serve_one(stream: &mut std::net::TcpStream, body: &str) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(std::io::ErrorKind::UnexpectedEof.into());
        }
        if line == "\r\n" {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
    }
    let mut buf = vec![0u8; len];
    reader.read_exact(&mut buf)?;
    write!(
        stream,
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        body.len(),
        body
    )?;
    stream.flush()
}

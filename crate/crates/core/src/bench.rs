//! Wall-clock timing of the fast transform against a dense `k x n` multiply.

use std::time::Instant;

use rand::Rng;

use crate::error::{invalid, require_pow2, Result};
use crate::hadamard::fwht_unchecked;
use crate::report::fmt_f64;
use crate::rng::rng_from_seed;
use crate::transform::{dense_matrix_capped, sample_transform, FastJLTransform};

/// Above this many entries the dense baseline generates each row on the fly
/// instead of storing the matrix.
pub const DENSE_MATERIALIZE_MAX: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    /// `k = max(1, n / k_divisor)`.
    pub k_divisor: usize,
    pub repeats: usize,
    /// Repeats for the dense baseline, which is orders of magnitude slower.
    pub dense_repeats: usize,
    /// Skip the dense baseline above this `n`.
    pub dense_max_n: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: (14..=18).map(|p| 1 << p).collect(),
            k_divisor: 4,
            repeats: 21,
            dense_repeats: 3,
            dense_max_n: 1 << 16,
            warmup: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    /// Median seconds for one in-place transform.
    pub fwht_seconds: f64,
    /// Median seconds for one full `apply` (sign flip, transform, gather, scale).
    pub apply_seconds: f64,
    pub dense_seconds: Option<f64>,
    pub dense_materialized: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Median wall time of `f` over `repeats` runs after `warmup` untimed runs.
/// `setup` prepares `state` before each call, outside the timed region.
pub fn time_median<T, S, F>(warmup: usize, repeats: usize, state: &mut T, mut setup: S, mut f: F) -> f64
where
    S: FnMut(&mut T),
    F: FnMut(&mut T),
{
    for _ in 0..warmup {
        setup(state);
        f(state);
    }
    let samples = (0..repeats.max(1))
        .map(|_| {
            setup(state);
            let start = Instant::now();
            f(state);
            start.elapsed().as_secs_f64()
        })
        .collect();
    median(samples)
}

/// `(1/sqrt(k)) Φ D_b y` by a row-by-row dot product with entries generated
/// from their bit parity; `O(k n)`.
pub fn dense_apply_streamed(t: &FastJLTransform, y: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (t.k() as f64).sqrt();
    let z: Vec<f64> = y.iter().zip(t.signs().as_slice()).map(|(a, b)| a * b).collect();
    t.rows()
        .indices()
        .iter()
        .map(|&r| {
            let mut acc = 0.0;
            for (j, &v) in z.iter().enumerate() {
                let flip = (((r & j).count_ones() & 1) as u64) << 63;
                acc += f64::from_bits(v.to_bits() ^ flip);
            }
            acc * scale
        })
        .collect()
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Fast-path calls per timing sample are batched up to this many coordinates,
/// so small `n` are not dominated by timer and scheduler noise.
const BATCH_COORDS: usize = 1 << 20;

struct Case {
    n: usize,
    k: usize,
    t: FastJLTransform,
    y: Vec<f64>,
    buf: Vec<f64>,
    batch: usize,
    fwht: Vec<f64>,
    apply: Vec<f64>,
}

impl Case {
    fn sample(&mut self, sink: &mut f64) -> (f64, f64) {
        // a fresh allocation per sample, so no single page placement decides the median
        self.buf = self.y.clone();
        let start = Instant::now();
        for _ in 0..self.batch {
            fwht_unchecked(&mut self.buf);
        }
        let fwht = start.elapsed().as_secs_f64() / self.batch as f64;
        let start = Instant::now();
        for _ in 0..self.batch {
            *sink += self.t.apply(&self.y).unwrap()[0];
        }
        let apply = start.elapsed().as_secs_f64() / self.batch as f64;
        (fwht, apply)
    }
}

/// Times every `n` in `cfg.n_list`. Fast-path repeats are interleaved across
/// sizes (one sample per size per round) so that slow periods on the host
/// spread over all sizes instead of skewing one of them.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.k_divisor == 0 {
        return invalid("k divisor must be positive");
    }
    let mut cases = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        require_pow2(n)?;
        let k = (n / cfg.k_divisor).max(1);
        let t = sample_transform(n, k, cfg.seed)?;
        let y = random_vector(n, cfg.seed ^ n as u64);
        let batch = (BATCH_COORDS / n).max(1);
        cases.push(Case { n, k, t, buf: y.clone(), y, batch, fwht: Vec::new(), apply: Vec::new() });
    }

    let mut sink = 0.0;
    for _ in 0..cfg.warmup {
        for c in cases.iter_mut() {
            c.sample(&mut sink);
        }
    }
    for _ in 0..cfg.repeats.max(1) {
        for c in cases.iter_mut() {
            let (f, a) = c.sample(&mut sink);
            c.fwht.push(f);
            c.apply.push(a);
        }
    }

    let mut rows = Vec::with_capacity(cases.len());
    for c in cases {
        let (n, k, t, y) = (c.n, c.k, &c.t, &c.y);
        let (dense_seconds, dense_materialized) = if n <= cfg.dense_max_n {
            if k * n <= DENSE_MATERIALIZE_MAX {
                let m = dense_matrix_capped(t, usize::MAX)?;
                let s = time_median(1, cfg.dense_repeats, &mut sink, |_| {}, |s| *s += m.mul_vec(y).unwrap()[0]);
                (Some(s), true)
            } else {
                let s = time_median(0, cfg.dense_repeats, &mut sink, |_| {}, |s| *s += dense_apply_streamed(t, y)[0]);
                (Some(s), false)
            }
        } else {
            (None, false)
        };
        rows.push(BenchRow {
            n,
            k,
            fwht_seconds: median(c.fwht),
            apply_seconds: median(c.apply),
            dense_seconds,
            dense_materialized,
        });
    }
    std::hint::black_box(sink);
    Ok(rows)
}

/// Timing table as CSV, with per-doubling growth ratios relative to the previous row.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
    wtr.write_record([
        "n",
        "k",
        "fwht_seconds",
        "apply_seconds",
        "dense_seconds",
        "dense_mode",
        "fwht_ratio",
        "dense_ratio",
        "speedup",
    ])
    .unwrap();
    let mut prev: Option<&BenchRow> = None;
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let fwht_ratio = prev.map(|p| r.fwht_seconds / p.fwht_seconds);
        let dense_ratio = prev.and_then(|p| Some(r.dense_seconds? / p.dense_seconds?));
        let speedup = r.dense_seconds.map(|d| d / r.apply_seconds);
        let mode = match (r.dense_seconds, r.dense_materialized) {
            (None, _) => "",
            (Some(_), true) => "materialized",
            (Some(_), false) => "streamed",
        };
        wtr.write_record([
            r.n.to_string(),
            r.k.to_string(),
            fmt_f64(r.fwht_seconds),
            fmt_f64(r.apply_seconds),
            opt(r.dense_seconds),
            mode.to_string(),
            opt(fwht_ratio),
            opt(dense_ratio),
            opt(speedup),
        ])
        .unwrap();
        prev = Some(r);
    }
    String::from_utf8(wtr.into_inner().unwrap()).unwrap()
}

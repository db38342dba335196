//! Experiment drivers behind the `verify` and `embed` commands.
//!
//! Every driver is a pure function of its [`ExperimentConfig`]; the config is
//! echoed into the report header so that [`replay`] can rerun it.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{generate, DatasetKind, VectorDataset};
use crate::error::{invalid, require_pow2, Error, Result};
use crate::estimators::{
    concentration_check, cross_term_stats, distortion_stats, estimate_e_alpha, evaluate_objective, evaluate_support,
    rip_constant_bruteforce, TAIL_MULTIPLES,
};
use crate::report::{fmt_f64, parse_config, Report};
use crate::rng::{derive_seed, rng_from_seed, uniform_index, uniform_signs};
use crate::split::split_heavy_light;
use crate::transform::{
    sparsity_level, target_dimension, FastJLTransform, RowSampling, SignPattern, TargetDimension, TransformParams,
};

/// Tolerance for re-evaluated witnesses and linearity checks.
pub const REPRODUCE_TOL: f64 = 1e-9;

/// How the transform of an experiment is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformChoice {
    pub n: usize,
    /// Explicit target dimension; `None` derives it from the formula.
    pub k: Option<usize>,
    /// Point-set cardinality `N` for the `k` and `r` formulas.
    pub points: u64,
    pub delta: f64,
    pub c_k: f64,
    pub c_r: f64,
    /// Use every row once (`k = n`) instead of sampling.
    pub full_selection: bool,
    pub sampling: RowSampling,
}

impl TransformChoice {
    pub fn with_k(n: usize, k: usize) -> Self {
        Self { k: Some(k), ..Self::formula(n, 1024, 0.5) }
    }

    pub fn formula(n: usize, points: u64, delta: f64) -> Self {
        Self {
            n,
            k: None,
            points,
            delta,
            c_k: 1.0,
            c_r: 1.0,
            full_selection: false,
            sampling: RowSampling::WithReplacement,
        }
    }

    pub fn full(n: usize) -> Self {
        Self { full_selection: true, ..Self::with_k(n, n) }
    }

    pub fn params(&self) -> Result<TransformParams> {
        TransformParams::with_constants(self.n, self.points as u128, self.delta, self.c_k, self.c_r)
    }

    /// The resolved `k`, plus the formula evaluation when `k` was derived.
    pub fn resolve_k(&self) -> Result<(usize, Option<TargetDimension>)> {
        require_pow2(self.n)?;
        if self.full_selection {
            return Ok((self.n, None));
        }
        match self.k {
            Some(k) if k >= 1 && k <= self.n => Ok((k, None)),
            Some(k) => invalid(format!("k = {k} outside [1, n = {}]", self.n)),
            None => {
                let t = target_dimension(&self.params()?)?;
                Ok((t.k, Some(t)))
            }
        }
    }

    pub fn build(&self, seed: u64) -> Result<FastJLTransform> {
        let (k, _) = self.resolve_k()?;
        if self.full_selection {
            let signs = uniform_signs(&mut rng_from_seed(seed), self.n);
            FastJLTransform::full_selection(self.n, SignPattern::new(signs)?)
        } else {
            FastJLTransform::sample(self.n, k, seed, self.sampling)
        }
    }

    /// Sparsity `r` from an explicit value or the formula.
    pub fn resolve_r(&self, r: Option<usize>) -> Result<usize> {
        match r {
            Some(r) if r >= 1 && r <= self.n => Ok(r),
            Some(r) => invalid(format!("r = {r} outside [1, n = {}]", self.n)),
            None => Ok(sparsity_level(&self.params()?)?.r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipConfig {
    pub transform: TransformChoice,
    pub r: usize,
    pub budget: usize,
    pub phi_seeds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EAlphaConfig {
    pub transform: TransformChoice,
    /// Explicit `α`; otherwise `1/sqrt(r)`.
    pub alpha: Option<f64>,
    pub r: Option<usize>,
    pub samples: usize,
    pub ascent_iters: usize,
    pub phi_seeds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortConfig {
    pub transform: TransformChoice,
    pub data: PathBuf,
    /// Sample this many difference vectors `y_i − y_j` instead of using the vectors themselves.
    pub pairs: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub transform: TransformChoice,
    pub r: Option<usize>,
    pub trials: usize,
    pub vectors: usize,
    pub seed: u64,
}

/// One `verify` run, fully specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Rip(RipConfig),
    Ealpha(EAlphaConfig),
    Distort(DistortConfig),
    Cross(SplitConfig),
    Conc(SplitConfig),
}

impl ExperimentConfig {
    pub fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        }
    }

    pub fn from_map(map: Map<String, Value>) -> Result<Self> {
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::Format(format!("bad config: {e}")))
    }
}

/// Runs an experiment and returns its report, including a `[timing]` section.
pub fn run(config: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new(config.to_map());
    match config {
        ExperimentConfig::Rip(c) => run_rip(c, &mut report)?,
        ExperimentConfig::Ealpha(c) => run_ealpha(c, &mut report)?,
        ExperimentConfig::Distort(c) => run_distort(c, &mut report)?,
        ExperimentConfig::Cross(c) => run_cross(c, &mut report)?,
        ExperimentConfig::Conc(c) => run_conc(c, &mut report)?,
    }
    report.timing.push(("elapsed_seconds".into(), format!("{:.3}", start.elapsed().as_secs_f64())));
    Ok(report)
}

/// Reruns the experiment whose report text is given.
pub fn replay(report_text: &str) -> Result<Report> {
    run(&ExperimentConfig::from_map(parse_config(report_text)?)?)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn record_k(report: &mut Report, k: usize, formula: Option<TargetDimension>) {
    report.summary("k", k);
    if let Some(t) = formula {
        report.summary_f64("k_formula_raw", t.raw);
        report.summary("k_clamped", t.clamped);
    }
}

/// `log2(n)^{3/2} log2(k)^{1/2} / sqrt(k)`: the shape of the deviation bound
/// without its constant.
fn bound_shape(n: usize, k: usize) -> f64 {
    (n as f64).log2().powf(1.5) * (k as f64).log2().sqrt() / (k as f64).sqrt()
}

fn run_rip(c: &RipConfig, report: &mut Report) -> Result<()> {
    if c.phi_seeds < 1 {
        return invalid("phi_seeds must be at least 1");
    }
    let (k, formula) = c.transform.resolve_k()?;
    record_k(report, k, formula);
    report.set_columns(&["phi", "transform_seed", "delta_hat", "supports_checked", "exhaustive", "witness_support"]);
    let mut deltas = Vec::with_capacity(c.phi_seeds);
    let mut all_exhaustive = true;
    for phi in 0..c.phi_seeds {
        let tseed = derive_seed(c.seed, 2 * phi as u64);
        let t = c.transform.build(tseed)?;
        let rep = rip_constant_bruteforce(t.rows(), k, c.r, c.budget, derive_seed(c.seed, 2 * phi as u64 + 1))?;
        let again = evaluate_support(t.rows(), &rep.witness_support)?;
        if (again - rep.delta_hat).abs() > REPRODUCE_TOL {
            report.fail(format!("phi {phi}: witness gives {again}, report says {}", rep.delta_hat));
        }
        all_exhaustive &= rep.exhaustive;
        deltas.push(rep.delta_hat);
        let witness: Vec<String> = rep.witness_support.iter().map(|i| i.to_string()).collect();
        report.push_row(vec![
            phi.to_string(),
            tseed.to_string(),
            fmt_f64(rep.delta_hat),
            rep.supports_checked.to_string(),
            rep.exhaustive.to_string(),
            witness.join(" "),
        ]);
    }
    report.summary("r", c.r);
    report.summary_f64("delta_hat_mean", mean(&deltas));
    report.summary_f64("delta_hat_min", min_of(&deltas));
    report.summary_f64("delta_hat_max", max_of(&deltas));
    report.summary("exhaustive", all_exhaustive);
    let shape = (c.r as f64).sqrt() * bound_shape(c.transform.n, k);
    if shape > 0.0 {
        report.summary_f64("bound_shape", shape);
        report.summary_f64("empirical_constant", mean(&deltas) / shape);
    }
    Ok(())
}

fn run_ealpha(c: &EAlphaConfig, report: &mut Report) -> Result<()> {
    if c.phi_seeds < 1 {
        return invalid("phi_seeds must be at least 1");
    }
    let (k, formula) = c.transform.resolve_k()?;
    record_k(report, k, formula);
    let alpha = match c.alpha {
        Some(a) => a,
        None => 1.0 / (c.transform.resolve_r(c.r)? as f64).sqrt(),
    };
    report.set_columns(&["phi", "transform_seed", "lower_bound", "witness_l2", "witness_linf_sq", "witness_trial"]);
    let mut bounds = Vec::with_capacity(c.phi_seeds);
    let mut linf_sq = Vec::with_capacity(c.phi_seeds);
    let mut flat_size = 0;
    for phi in 0..c.phi_seeds {
        let tseed = derive_seed(c.seed, 2 * phi as u64);
        let t = c.transform.build(tseed)?;
        let est = estimate_e_alpha(t.rows(), k, alpha, c.samples, c.ascent_iters, derive_seed(c.seed, 2 * phi as u64 + 1))?;
        flat_size = est.flat_size;
        if est.witness_l2() > 1.0 + 1e-12 || est.witness.iter().any(|v| v.abs() > alpha + 1e-12) {
            report.fail(format!("phi {phi}: witness outside the feasible set"));
        }
        let again = evaluate_objective(t.rows(), &est.witness);
        if (again - est.lower_bound).abs() > REPRODUCE_TOL {
            report.fail(format!("phi {phi}: witness gives {again}, report says {}", est.lower_bound));
        }
        bounds.push(est.lower_bound);
        linf_sq.push(est.witness_linf_sq());
        report.push_row(vec![
            phi.to_string(),
            tseed.to_string(),
            fmt_f64(est.lower_bound),
            fmt_f64(est.witness_l2()),
            fmt_f64(est.witness_linf_sq()),
            est.witness_trial.to_string(),
        ]);
    }
    report.summary_f64("alpha", alpha);
    report.summary_f64("alpha_sq", alpha * alpha);
    report.summary("flat_size", flat_size);
    report.summary_f64("lower_bound_mean", mean(&bounds));
    report.summary_f64("lower_bound_min", min_of(&bounds));
    report.summary_f64("lower_bound_max", max_of(&bounds));
    // ‖D_y²‖ = ‖y‖_∞² for the witnesses, against both α and α²
    let worst = max_of(&linf_sq);
    report.summary_f64("witness_linf_sq_max", worst);
    report.summary("witness_linf_sq_le_alpha", worst <= alpha + 1e-12);
    report.summary("witness_linf_sq_le_alpha_sq", worst <= alpha * alpha + 1e-12);
    let shape = alpha * bound_shape(c.transform.n, k);
    if shape > 0.0 {
        report.summary_f64("bound_shape", shape);
        report.summary_f64("empirical_constant", mean(&bounds) / shape);
    }
    Ok(())
}

fn run_distort(c: &DistortConfig, report: &mut Report) -> Result<()> {
    let data = VectorDataset::load(&c.data)?;
    if !data.n().is_power_of_two() {
        return invalid(format!("dataset dimension {} is not a power of 2; run `fjlt pad` first", data.n()));
    }
    if data.n() != c.transform.n {
        return Err(Error::DimensionMismatch { expected: c.transform.n, actual: data.n() });
    }
    let (k, formula) = c.transform.resolve_k()?;
    record_k(report, k, formula);
    let t = c.transform.build(derive_seed(c.seed, 0))?;

    let (labels, vectors): (Vec<String>, Vec<Vec<f64>>) = match c.pairs {
        None => data.rows().enumerate().map(|(i, r)| (i.to_string(), r.to_vec())).unzip(),
        Some(m) => {
            if data.count() < 2 {
                return invalid("pair sampling needs at least 2 vectors");
            }
            let mut rng = rng_from_seed(derive_seed(c.seed, 1));
            let mut worst_linearity = 0.0f64;
            let mut out = (Vec::with_capacity(m), Vec::with_capacity(m));
            for _ in 0..m {
                let i = uniform_index(&mut rng, data.count());
                let mut j = uniform_index(&mut rng, data.count() - 1);
                if j >= i {
                    j += 1;
                }
                let diff: Vec<f64> = data.row(i).iter().zip(data.row(j)).map(|(a, b)| a - b).collect();
                let (ei, ej, ed) = (t.apply(data.row(i))?, t.apply(data.row(j))?, t.apply(&diff)?);
                let scale = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                if scale > 0.0 {
                    let err = ei.iter().zip(&ej).zip(&ed).map(|((a, b), d)| (a - b - d).abs()).fold(0.0, f64::max);
                    worst_linearity = worst_linearity.max(err / scale);
                }
                out.0.push(format!("{i}-{j}"));
                out.1.push(diff);
            }
            report.summary_f64("linearity_error_max", worst_linearity);
            if worst_linearity > REPRODUCE_TOL {
                report.fail(format!("apply is not linear on pairs: relative error {worst_linearity}"));
            }
            out
        }
    };
    let stats = distortion_stats(&t, &vectors, c.transform.delta)?;
    report.summary("vectors", vectors.len());
    report.summary("skipped", stats.skipped.len());
    report.summary_f64("ratio_min", stats.min);
    report.summary_f64("ratio_max", stats.max);
    report.summary_f64("ratio_mean", stats.mean);
    report.summary_f64("max_deviation", stats.max_deviation);
    report.summary_f64("delta", stats.delta);
    report.summary_f64("success_fraction", stats.success_fraction);
    report.set_columns(&["vector", "ratio"]);
    let kept = labels.iter().enumerate().filter(|(i, _)| !stats.skipped.contains(i)).map(|(_, l)| l);
    for (label, ratio) in kept.zip(&stats.ratios) {
        report.push_row(vec![label.clone(), fmt_f64(*ratio)]);
    }
    Ok(())
}

fn split_inputs(c: &SplitConfig, report: &mut Report) -> Result<(FastJLTransform, usize, usize, VectorDataset)> {
    if c.vectors < 1 {
        return invalid("vectors must be at least 1");
    }
    let (k, formula) = c.transform.resolve_k()?;
    record_k(report, k, formula);
    let r = c.transform.resolve_r(c.r)?;
    report.summary("r", r);
    let t = c.transform.build(derive_seed(c.seed, 0))?;
    let ys = generate(DatasetKind::UnitSphere, c.transform.n, c.vectors, derive_seed(c.seed, 1))?;
    Ok((t, k, r, ys))
}

fn trial_seed(seed: u64, vector: usize) -> u64 {
    derive_seed(seed, 2 + vector as u64)
}

fn run_cross(c: &SplitConfig, report: &mut Report) -> Result<()> {
    let (t, k, r, ys) = split_inputs(c, report)?;
    report.set_columns(&["vector", "mean", "std", "standard_error", "mean_over_se", "within_4se"]);
    let mut worst: f64 = 0.0;
    for (i, y) in ys.rows().enumerate() {
        let split = split_heavy_light(y, r)?;
        let s = cross_term_stats(t.rows(), k, &split, c.trials, trial_seed(c.seed, i))?;
        let se = s.standard_error();
        let z = if se > 0.0 { s.mean.abs() / se } else { 0.0 };
        worst = worst.max(z);
        report.push_row(vec![
            i.to_string(),
            fmt_f64(s.mean),
            fmt_f64(s.std),
            fmt_f64(se),
            fmt_f64(z),
            (z <= 4.0).to_string(),
        ]);
    }
    report.summary_f64("mean_over_se_max", worst);
    Ok(())
}

fn run_conc(c: &SplitConfig, report: &mut Report) -> Result<()> {
    let (t, k, r, ys) = split_inputs(c, report)?;
    let mut cols = vec!["vector", "median", "rms", "sigma", "normalized_gap"];
    let tail_names: Vec<String> = TAIL_MULTIPLES.iter().map(|m| format!("tail_{m}sigma")).collect();
    cols.extend(tail_names.iter().map(String::as_str));
    cols.extend(["cross_mean", "cross_std"]);
    report.set_columns(&cols);
    let (mut worst_gap, mut worst_tail): (f64, f64) = (0.0, 0.0);
    for (i, y) in ys.rows().enumerate() {
        let split = split_heavy_light(y, r)?;
        let mut rep = concentration_check(t.rows(), k, &split.light, c.trials, trial_seed(c.seed, i))?;
        rep.cross = Some(cross_term_stats(t.rows(), k, &split, c.trials, trial_seed(c.seed, i))?);
        if !rep.sigma_converged {
            report.fail(format!("vector {i}: sigma did not converge"));
        }
        worst_gap = worst_gap.max(rep.normalized_gap);
        worst_tail = worst_tail.max(rep.tail_two_sided(TAIL_MULTIPLES.len() - 1));
        let cross = rep.cross.expect("set above");
        let mut row = vec![i.to_string(), fmt_f64(rep.median), fmt_f64(rep.rms), fmt_f64(rep.sigma), fmt_f64(rep.normalized_gap)];
        row.extend((0..TAIL_MULTIPLES.len()).map(|m| fmt_f64(rep.tail_two_sided(m))));
        row.extend([fmt_f64(cross.mean), fmt_f64(cross.std)]);
        report.push_row(row);
    }
    report.summary_f64("normalized_gap_max", worst_gap);
    report.summary_f64("tail_3sigma_max", worst_tail);
    Ok(())
}

/// What `embed` records next to its output.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedMetadata {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub c_k: f64,
    pub clamped: bool,
    pub sampling: RowSampling,
}

impl EmbedMetadata {
    pub fn to_text(&self) -> String {
        format!(
            "n = {}\nk = {}\nseed = {}\nc_k = {}\nclamped = {}\nsampling = {}\n",
            self.n,
            self.k,
            self.seed,
            fmt_f64(self.c_k),
            self.clamped,
            serde_json::to_string(&self.sampling).unwrap(),
        )
    }
}

/// Embeds every vector of `data` with the transform sampled from `seed`.
pub fn embed(data: &VectorDataset, choice: &TransformChoice, seed: u64) -> Result<(VectorDataset, EmbedMetadata)> {
    if !data.n().is_power_of_two() {
        return invalid(format!("dataset dimension {} is not a power of 2; run `fjlt pad` first", data.n()));
    }
    let choice = TransformChoice { n: data.n(), ..choice.clone() };
    let (k, formula) = choice.resolve_k()?;
    let t = choice.build(seed)?;
    let rows: Vec<&[f64]> = data.rows().collect();
    let out = t.apply_batch(&rows)?;
    let embedded = VectorDataset::from_rows(k, &out)?;
    let meta = EmbedMetadata {
        n: data.n(),
        k,
        seed,
        c_k: choice.c_k,
        clamped: formula.map(|f| f.clamped).unwrap_or(false),
        sampling: choice.sampling,
    };
    Ok((embedded, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_survives_the_header() {
        let cfg = ExperimentConfig::Ealpha(EAlphaConfig {
            transform: TransformChoice::formula(512, 1 << 20, 0.25),
            alpha: None,
            r: Some(16),
            samples: 4,
            ascent_iters: 2,
            phi_seeds: 2,
            seed: u64::MAX - 3,
        });
        assert_eq!(ExperimentConfig::from_map(cfg.to_map()).unwrap(), cfg);
    }

    #[test]
    fn rip_full_selection_row_is_zero() {
        let cfg = ExperimentConfig::Rip(RipConfig { transform: TransformChoice::full(16), r: 3, budget: 1000, phi_seeds: 2, seed: 1 });
        let rep = run(&cfg).unwrap();
        assert!(rep.passed());
        for row in &rep.rows {
            assert!(row[2].parse::<f64>().unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn resolve_k_paths() {
        assert_eq!(TransformChoice::with_k(64, 8).resolve_k().unwrap().0, 8);
        assert!(TransformChoice::with_k(64, 65).resolve_k().is_err());
        let (k, f) = TransformChoice::formula(1024, 1024, 0.5).resolve_k().unwrap();
        assert_eq!(k, 1024);
        assert!(f.unwrap().clamped);
        assert_eq!(TransformChoice::full(32).resolve_k().unwrap().0, 32);
    }

    #[test]
    fn embed_is_deterministic_and_records_metadata() {
        let data = generate(DatasetKind::UnitSphere, 64, 5, 2).unwrap();
        let choice = TransformChoice::with_k(64, 16);
        let (a, meta) = embed(&data, &choice, 9).unwrap();
        let (b, _) = embed(&data, &choice, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n(), a.count(), meta.k, meta.seed), (16, 5, 16, 9));
        assert!(meta.to_text().contains("sampling = \"with-replacement\""));
    }

    #[test]
    fn embed_rejects_unpadded_data() {
        let data = VectorDataset::new(6, vec![1.0; 12]).unwrap();
        let err = embed(&data, &TransformChoice::with_k(8, 2), 0).unwrap_err();
        assert!(err.to_string().contains("pad"));
    }
}

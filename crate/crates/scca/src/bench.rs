//! Experiment harness: rank-one model sweeps over a sparsity grid, seeded
//! Monte Carlo replications, method comparison, and CSV emission.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::row_sparsity;
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::recovery_errors;
use crate::model::{make_rank1_model, CcaModel, CovCase};
use crate::recover::{
    ct_estimate_directions_with, ct_threshold_scaled, recover_supp, simulation_cut,
    sparse_power_supports, sparsity_aware_cut, ModelMatrices, Side,
};

/// Results CSV header, fixed byte-for-byte.
pub const RESULTS_HEADER: &str =
    "method,side,p,s,replication_id,seed,type_one,type_two,hamming,exact,wall_time_ms,error";

/// Summary CSV header, fixed byte-for-byte.
pub const SUMMARY_HEADER: &str = "method,side,p,s,mean_type_one,se_type_one,mean_type_two,se_type_two,mean_hamming,se_hamming,exact_rate";

/// Multiplier taking a resolved cut to the naive baseline's soft-threshold
/// penalty; chosen by cross-validation so the baseline keeps the
/// conservative profile of penalized CCA estimators.
const NAIVE_PENALTY_MULT: f64 = 1.3;
const NAIVE_POWER_ITERS: usize = 4;

/// Support recovery methods the harness compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Conservative baseline: soft-threshold power iterations seeded by the
    /// whitened SVD; supports are the nonzero coordinates.
    WhitenedSvdNaive,
    /// Clean-then-threshold decoder on a plain whitened-SVD preliminary.
    CleanedWhitenedSvd,
    /// Coordinate thresholding preliminary plus the decoder.
    #[serde(rename = "CT")]
    Ct,
    /// CT with the cut raised to the s-th largest score.
    CtSparsityAware,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::WhitenedSvdNaive => "WhitenedSvdNaive",
            Method::CleanedWhitenedSvd => "CleanedWhitenedSvd",
            Method::Ct => "CT",
            Method::CtSparsityAware => "CtSparsityAware",
        }
    }
}

/// Sparsity grid: explicit s/sqrt(n) ratios or an equidistant range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SGrid {
    Explicit(Vec<f64>),
    Range { count: usize, ratio_range: [f64; 2] },
}

impl SGrid {
    pub fn ratios(&self) -> Result<Vec<f64>> {
        match self {
            SGrid::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::Config("empty s_grid".into()));
                }
                let mut sorted = v.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if &sorted != v {
                    return Err(Error::Config("s_grid ratios must be ascending".into()));
                }
                Ok(v.clone())
            }
            SGrid::Range { count, ratio_range } => {
                if *count < 1 {
                    return Err(Error::Config("s_grid count must be >= 1".into()));
                }
                let [lo, hi] = *ratio_range;
                if !(lo <= hi) {
                    return Err(Error::Config("ratio_range must be ordered".into()));
                }
                if *count == 1 {
                    return Ok(vec![lo]);
                }
                let step = (hi - lo) / (*count as f64 - 1.0);
                Ok((0..*count).map(|i| lo + step * i as f64).collect())
            }
        }
    }
}

/// Cut constants per covariance case and side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutConstants {
    #[serde(default = "one")]
    pub identity_a_alpha: f64,
    #[serde(default = "one")]
    pub identity_a_beta: f64,
    #[serde(default = "b_alpha_default")]
    pub banded_b_alpha: f64,
    #[serde(default = "b_beta_default")]
    pub banded_b_beta: f64,
}

fn one() -> f64 {
    1.0
}
fn b_alpha_default() -> f64 {
    0.05
}
fn b_beta_default() -> f64 {
    0.2
}

impl Default for CutConstants {
    fn default() -> Self {
        CutConstants {
            identity_a_alpha: 1.0,
            identity_a_beta: 1.0,
            banded_b_alpha: 0.05,
            banded_b_beta: 0.2,
        }
    }
}

impl CutConstants {
    fn for_case_side(&self, case: CovCase, side: Side) -> f64 {
        match (case, side) {
            (CovCase::IdentityA, Side::ForU) => self.identity_a_alpha,
            (CovCase::IdentityA, Side::ForV) => self.identity_a_beta,
            (CovCase::BandedB, Side::ForU) => self.banded_b_alpha,
            (CovCase::BandedB, Side::ForV) => self.banded_b_beta,
        }
    }
}

/// Coordinate thresholding constants as multiples of b_eff^4.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CtConstants {
    #[serde(default = "k_mult_default", alias = "K_mult")]
    pub k_mult: f64,
    #[serde(default = "c1_mult_default", alias = "C1_mult")]
    pub c1_mult: f64,
}

fn k_mult_default() -> f64 {
    1288.0
}
fn c1_mult_default() -> f64 {
    50.0
}

impl Default for CtConstants {
    fn default() -> Self {
        CtConstants {
            k_mult: 1288.0,
            c1_mult: 50.0,
        }
    }
}

/// Full experiment description; deserializable from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p_list: Vec<usize>,
    pub s_grid: SGrid,
    pub rho: f64,
    pub cov_case: CovCase,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub cut: CutConstants,
    #[serde(default)]
    pub ct: CtConstants,
    pub replications: usize,
    pub seed: u64,
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.n < 4 {
            return Err(Error::Config("n must be >= 4".into()));
        }
        if self.p_list.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("p_list and methods must be nonempty".into()));
        }
        self.s_grid.ratios()?;
        Ok(())
    }

    /// Sparsity values for a given p: round(ratio * sqrt(n)) clamped into
    /// [2, p - 17] so the impossibility preconditions stay satisfiable.
    pub fn s_values(&self, p: usize) -> Result<Vec<usize>> {
        let hi = p.saturating_sub(17).max(2);
        Ok(self
            .s_grid
            .ratios()?
            .iter()
            .map(|r| ((r * (self.n as f64).sqrt()).round() as isize).max(2) as usize)
            .map(|s| s.clamp(2, hi))
            .collect())
    }
}

/// One (method, side, grid point, replication) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub side: Side,
    pub p: usize,
    pub s: usize,
    pub replication_id: usize,
    pub seed: u64,
    pub type_one: Option<f64>,
    pub type_two: Option<f64>,
    pub hamming: Option<f64>,
    pub exact: Option<bool>,
    pub wall_time_ms: u64,
    pub error: String,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::ForU => "alpha",
        Side::ForV => "beta",
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Replication seed: the base seed xor a stable hash of the grid point and
/// replication id, so perturbing one grid point never touches another.
pub fn replication_seed(base: u64, p: usize, s: usize, replication: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(p as u64) ^ s as u64) ^ replication as u64);
    base ^ h
}

struct GridContext {
    model: CcaModel,
    mats: ModelMatrices,
    theta: f64,
    prec_x: nalgebra::DMatrix<f64>,
    prec_y: nalgebra::DMatrix<f64>,
    s_prec_x: usize,
    s_prec_y: usize,
}

fn error_row(
    method: Method,
    side: Side,
    p: usize,
    s: usize,
    replication_id: usize,
    seed: u64,
    msg: &str,
) -> ResultRow {
    ResultRow {
        method,
        side,
        p,
        s,
        replication_id,
        seed,
        type_one: None,
        type_two: None,
        hamming: None,
        exact: None,
        wall_time_ms: 0,
        error: msg.replace(',', ";"),
    }
}

/// Run the full sweep. Failures of individual estimates become rows with an
/// error tag; the sweep itself never aborts. Rows come back sorted by
/// (method, side, p, s, replication_id).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows: Vec<ResultRow> = Vec::new();
    for &p in &config.p_list {
        for s in config.s_values(p)? {
            rows.extend(run_grid_point(config, p, s));
        }
    }
    rows.sort_by(|a, b| {
        (a.method.name(), side_name(a.side), a.p, a.s, a.replication_id).cmp(&(
            b.method.name(),
            side_name(b.side),
            b.p,
            b.s,
            b.replication_id,
        ))
    });
    Ok(rows)
}

fn run_grid_point(config: &ExperimentConfig, p: usize, s: usize) -> Vec<ResultRow> {
    let ctx = match build_context(config, p, s) {
        Ok(ctx) => ctx,
        Err(e) => {
            // The whole grid point is unusable; tag every would-be row.
            let msg = format!("model: {e}");
            let mut rows = Vec::new();
            for rep in 0..config.replications {
                let seed = replication_seed(config.seed, p, s, rep);
                for &method in &config.methods {
                    for side in [Side::ForU, Side::ForV] {
                        rows.push(error_row(method, side, p, s, rep, seed, &msg));
                    }
                }
            }
            return rows;
        }
    };

    (0..config.replications)
        .into_par_iter()
        .flat_map_iter(|rep| {
            let seed = replication_seed(config.seed, p, s, rep);
            run_replication(config, &ctx, p, s, rep, seed)
        })
        .collect()
}

fn build_context(config: &ExperimentConfig, p: usize, s: usize) -> Result<GridContext> {
    let model = make_rank1_model(p, p, s, config.rho, config.cov_case)?;
    let mats = ModelMatrices::from_model(&model)?;
    let truth = model.support_truth();
    let theta = ct_threshold_scaled(
        model.p,
        model.q,
        truth.s_x,
        truth.s_y,
        model.b_eff(),
        config.ct.k_mult,
        config.ct.c1_mult,
    )
    .theta;
    let prec_x = mats.sigma_x_inv.clone();
    let prec_y = mats.sigma_y_inv.clone();
    Ok(GridContext {
        s_prec_x: row_sparsity(&prec_x),
        s_prec_y: row_sparsity(&prec_y),
        model,
        mats,
        theta,
        prec_x,
        prec_y,
    })
}

fn run_replication(
    config: &ExperimentConfig,
    ctx: &GridContext,
    p: usize,
    s: usize,
    rep: usize,
    seed: u64,
) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    let sample = match ctx.model.sample(config.n, seed) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("sample: {e}");
            for &method in &config.methods {
                for side in [Side::ForU, Side::ForV] {
                    rows.push(error_row(method, side, p, s, rep, seed, &msg));
                }
            }
            return rows;
        }
    };
    let truth = ctx.model.support_truth();
    let d_u: BTreeSet<usize> = truth.d_u.iter().copied().collect();
    let d_v: BTreeSet<usize> = truth.d_v.iter().copied().collect();
    let ((x1, y1), (x2, y2)) = sample.halves();
    let m2 = x2.nrows() as f64;

    let cut_alpha = simulation_cut(
        config.n,
        p,
        p,
        ctx.s_prec_x,
        config.cut.for_case_side(config.cov_case, Side::ForU),
    );
    let cut_beta = simulation_cut(
        config.n,
        p,
        p,
        ctx.s_prec_y,
        config.cut.for_case_side(config.cov_case, Side::ForV),
    );

    // Naive baseline once per replication; both supports come from one fit.
    let naive = if config.methods.contains(&Method::WhitenedSvdNaive) {
        Some(sparse_power_supports(
            &sample,
            &ctx.model,
            NAIVE_PENALTY_MULT * cut_alpha,
            NAIVE_PENALTY_MULT * cut_beta,
            NAIVE_POWER_ITERS,
        ))
    } else {
        None
    };

    for side in [Side::ForU, Side::ForV] {
        // Cleaning for side alpha estimates the beta-side directions first
        // and vice versa; organize the halves accordingly.
        let (a1, b1, a2, b2, prec, d_true, ambient, cut) = match side {
            Side::ForU => (&y1, &x1, &y2, &x2, &ctx.prec_x, &d_u, p, cut_alpha),
            Side::ForV => (&x1, &y1, &x2, &y2, &ctx.prec_y, &d_v, p, cut_beta),
        };
        let swapped_mats = match side {
            Side::ForU => ModelMatrices {
                sigma_x_inv: ctx.mats.sigma_y_inv.clone(),
                sigma_y_inv: ctx.mats.sigma_x_inv.clone(),
                sigma_x_sqrt: ctx.mats.sigma_y_sqrt.clone(),
                sigma_y_sqrt: ctx.mats.sigma_x_sqrt.clone(),
                sigma_x_inv_sqrt: linalg::spd_inv_sqrt(&ctx.model.sigma_y)
                    .expect("validated model"),
            },
            Side::ForV => ctx.mats.clone(),
        };
        let cross = b2.transpose() * a2 / m2;

        for &method in &config.methods {
            let row = match method {
                Method::WhitenedSvdNaive => match naive.as_ref().unwrap() {
                    Ok((du, dv, _, _)) => {
                        let d_hat: BTreeSet<usize> = match side {
                            Side::ForU => du.iter().copied().collect(),
                            Side::ForV => dv.iter().copied().collect(),
                        };
                        finish_row(method, side, p, s, rep, seed, &d_hat, d_true, ambient)
                    }
                    Err(e) => error_row(method, side, p, s, rep, seed, &format!("naive: {e}")),
                },
                Method::CleanedWhitenedSvd | Method::Ct | Method::CtSparsityAware => {
                    let theta = if method == Method::CleanedWhitenedSvd {
                        0.0
                    } else {
                        ctx.theta
                    };
                    match ct_estimate_directions_with(a1, b1, &swapped_mats, ctx.model.r, theta) {
                        Ok(dirs) if dirs.effective_rank > 0 => {
                            let base_cut = cut;
                            let score = prec * &cross * &dirs.matrix;
                            let cut_used = if method == Method::CtSparsityAware {
                                match sparsity_aware_cut(base_cut, &score, s.min(score.nrows())) {
                                    Ok(c) => c,
                                    Err(e) => {
                                        rows.push(error_row(
                                            method,
                                            side,
                                            p,
                                            s,
                                            rep,
                                            seed,
                                            &format!("cut: {e}"),
                                        ));
                                        continue;
                                    }
                                }
                            } else {
                                base_cut
                            };
                            match recover_supp(&dirs.matrix, prec, &cross, cut_used, side) {
                                Ok(est) => {
                                    let d_hat: BTreeSet<usize> =
                                        est.indices.iter().copied().collect();
                                    finish_row(
                                        method, side, p, s, rep, seed, &d_hat, d_true, ambient,
                                    )
                                }
                                Err(e) => error_row(
                                    method,
                                    side,
                                    p,
                                    s,
                                    rep,
                                    seed,
                                    &format!("recover: {e}"),
                                ),
                            }
                        }
                        Ok(_) => error_row(method, side, p, s, rep, seed, "RankDeficient"),
                        Err(e) => {
                            error_row(method, side, p, s, rep, seed, &format!("estimate: {e}"))
                        }
                    }
                }
            };
            rows.push(row);
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn finish_row(
    method: Method,
    side: Side,
    p: usize,
    s: usize,
    rep: usize,
    seed: u64,
    d_hat: &BTreeSet<usize>,
    d_true: &BTreeSet<usize>,
    ambient: usize,
) -> ResultRow {
    match recovery_errors(d_hat, d_true, ambient) {
        Ok(e) => ResultRow {
            method,
            side,
            p,
            s,
            replication_id: rep,
            seed,
            type_one: Some(e.type_one),
            type_two: Some(e.type_two),
            hamming: Some(e.hamming),
            exact: Some(e.exact),
            wall_time_ms: 0,
            error: String::new(),
        },
        Err(e) => error_row(method, side, p, s, rep, seed, &format!("metrics: {e}")),
    }
}

/// 17 significant digits, enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let fmt_opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.method.name(),
            side_name(r.side),
            r.p,
            r.s,
            r.replication_id,
            r.seed,
            fmt_opt(r.type_one),
            fmt_opt(r.type_two),
            fmt_opt(r.hamming),
            r.exact.map(|b| b.to_string()).unwrap_or_default(),
            r.wall_time_ms,
            r.error,
        ));
    }
    out
}

fn parse_method(name: &str) -> Result<Method> {
    match name {
        "WhitenedSvdNaive" => Ok(Method::WhitenedSvdNaive),
        "CleanedWhitenedSvd" => Ok(Method::CleanedWhitenedSvd),
        "CT" => Ok(Method::Ct),
        "CtSparsityAware" => Ok(Method::CtSparsityAware),
        other => Err(Error::Config(format!("unknown method {other}"))),
    }
}

fn parse_side(name: &str) -> Result<Side> {
    match name {
        "alpha" => Ok(Side::ForU),
        "beta" => Ok(Side::ForV),
        other => Err(Error::Config(format!("unknown side {other}"))),
    }
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty results csv".into()))?;
    if header != RESULTS_HEADER {
        return Err(Error::Config(format!("unexpected header: {header}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Config(format!(
                "line {}: expected 12 fields, got {}",
                i + 2,
                f.len()
            )));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Config(format!("bad int {s}")))
        };
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("bad float {s}")))
            }
        };
        rows.push(ResultRow {
            method: parse_method(f[0])?,
            side: parse_side(f[1])?,
            p: num(f[2])?,
            s: num(f[3])?,
            replication_id: num(f[4])?,
            seed: f[5]
                .parse()
                .map_err(|_| Error::Config(format!("bad seed {}", f[5])))?,
            type_one: opt_f(f[6])?,
            type_two: opt_f(f[7])?,
            hamming: opt_f(f[8])?,
            exact: match f[9] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => return Err(Error::Config(format!("bad exact flag {other}"))),
            },
            wall_time_ms: f[10]
                .parse()
                .map_err(|_| Error::Config(format!("bad wall time {}", f[10])))?,
            error: f[11].to_string(),
        });
    }
    Ok(rows)
}

/// Summary statistics for one (method, side, p, s) cell over its successful
/// replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub side: Side,
    pub p: usize,
    pub s: usize,
    pub mean_type_one: f64,
    pub se_type_one: f64,
    pub mean_type_two: f64,
    pub se_type_two: f64,
    pub mean_hamming: f64,
    pub se_hamming: f64,
    pub exact_rate: f64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Aggregate per grid cell; error rows are excluded from the statistics.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::Config("no rows to summarize".into()));
    }
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(&str, &str, usize, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        if r.error.is_empty() {
            groups
                .entry((r.method.name(), side_name(r.side), r.p, r.s))
                .or_default()
                .push(r);
        }
    }
    let mut out = Vec::new();
    for ((_, _, p, s), group) in groups {
        let pull = |f: fn(&ResultRow) -> Option<f64>| -> Vec<f64> {
            group.iter().filter_map(|r| f(r)).collect()
        };
        let (m1, s1) = mean_se(&pull(|r| r.type_one));
        let (m2, s2) = mean_se(&pull(|r| r.type_two));
        let (mh, sh) = mean_se(&pull(|r| r.hamming));
        let exact_rate = group
            .iter()
            .filter(|r| r.exact == Some(true))
            .count() as f64
            / group.len() as f64;
        out.push(SummaryRow {
            method: group[0].method,
            side: group[0].side,
            p,
            s,
            mean_type_one: m1,
            se_type_one: s1,
            mean_type_two: m2,
            se_type_two: s2,
            mean_hamming: mh,
            se_hamming: sh,
            exact_rate,
        });
    }
    Ok(out)
}

pub fn write_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.method.name(),
            side_name(r.side),
            r.p,
            r.s,
            fmt_f64(r.mean_type_one),
            fmt_f64(r.se_type_one),
            fmt_f64(r.mean_type_two),
            fmt_f64(r.se_type_two),
            fmt_f64(r.mean_hamming),
            fmt_f64(r.se_hamming),
            fmt_f64(r.exact_rate),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 120,
            p_list: vec![20],
            s_grid: SGrid::Explicit(vec![0.3]),
            rho: 0.5,
            cov_case: CovCase::IdentityA,
            methods: vec![Method::Ct],
            cut: CutConstants::default(),
            ct: CtConstants::default(),
            replications: 1,
            seed: 11,
            output_path: "out.csv".into(),
        }
    }

    #[test]
    fn row_count_contract() {
        let rows = run_experiment(&tiny_config()).unwrap();
        assert_eq!(rows.len(), 2); // alpha and beta sides
    }

    #[test]
    fn determinism_bytes() {
        let cfg = tiny_config();
        let a = write_results_csv(&run_experiment(&cfg).unwrap());
        let b = write_results_csv(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let mut cfg = tiny_config();
        cfg.methods = vec![Method::WhitenedSvdNaive, Method::Ct];
        cfg.replications = 3;
        let rows = run_experiment(&cfg).unwrap();
        let text = write_results_csv(&rows);
        let parsed = parse_results_csv(&text).unwrap();
        assert_eq!(rows, parsed);
    }

    #[test]
    fn grid_point_isolation() {
        // Changing one grid point's config cannot perturb another's seeds.
        let s1 = replication_seed(9, 50, 3, 0);
        let s2 = replication_seed(9, 50, 10, 0);
        assert_ne!(s1, s2);
        assert_eq!(s1, replication_seed(9, 50, 3, 0));
    }

    #[test]
    fn summarize_single_and_identical_rows() {
        let mut cfg = tiny_config();
        cfg.replications = 1;
        let rows = run_experiment(&cfg).unwrap();
        let summary = summarize(&rows).unwrap();
        for s in &summary {
            assert_eq!(s.se_type_one, 0.0);
            assert_eq!(s.se_hamming, 0.0);
        }
        // Duplicate the single row: stderr stays 0.
        let mut doubled = rows.clone();
        doubled.extend(rows.iter().cloned().map(|mut r| {
            r.replication_id += 1;
            r
        }));
        let summary2 = summarize(&doubled).unwrap();
        for s in &summary2 {
            assert!(s.se_type_one.abs() < 1e-15);
        }
    }

    #[test]
    fn summarize_matches_hand_recomputation() {
        // A 10-row fixture with known means and standard errors.
        let vals = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let rows: Vec<ResultRow> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| ResultRow {
                method: Method::Ct,
                side: Side::ForV,
                p: 10,
                s: 2,
                replication_id: i,
                seed: i as u64,
                type_one: Some(v),
                type_two: Some(v / 2.0),
                hamming: Some(v / 3.0),
                exact: Some(v == 0.0),
                wall_time_ms: 0,
                error: String::new(),
            })
            .collect();
        let s = &summarize(&rows).unwrap()[0];
        assert!((s.mean_type_one - 0.45).abs() < 1e-15);
        // Sample sd of 0..0.9 step .1 is sqrt(.11/1.2...)=0.30276; /sqrt(10).
        assert!((s.se_type_one - 0.0957427107756338).abs() < 1e-12);
        assert!((s.mean_type_two - 0.225).abs() < 1e-15);
        assert!((s.exact_rate - 0.1).abs() < 1e-15);
    }

    #[test]
    fn config_toml_parses_both_grid_forms() {
        let t1 = r#"
            n = 400
            p_list = [50]
            s_grid = [0.15, 0.5, 1.0]
            rho = 0.5
            cov_case = "IdentityA"
            methods = ["WhitenedSvdNaive", "CT"]
            replications = 2
            seed = 1
            output_path = "r.csv"
        "#;
        let c1 = ExperimentConfig::from_toml(t1).unwrap();
        assert_eq!(c1.s_values(50).unwrap(), vec![3, 10, 20]);
        let t2 = r#"
            n = 1000
            p_list = [100, 200]
            s_grid = { count = 16, ratio_range = [0.01, 2.0] }
            rho = 0.5
            cov_case = "BandedB"
            methods = ["CT", "CtSparsityAware", "CleanedWhitenedSvd"]
            replications = 1
            seed = 2
            output_path = "r.csv"
            [cut]
            banded_b_alpha = 0.05
            banded_b_beta = 0.2
            [ct]
            k_mult = 1288.0
            c1_mult = 50.0
        "#;
        let c2 = ExperimentConfig::from_toml(t2).unwrap();
        assert_eq!(c2.s_grid.ratios().unwrap().len(), 16);
        let sv = c2.s_values(100).unwrap();
        assert_eq!(sv.len(), 16);
        assert!(sv.iter().all(|&s| (2..=83).contains(&s)));
    }

    #[test]
    fn banded_case_errors_are_tagged_not_fatal() {
        let mut cfg = tiny_config();
        cfg.cov_case = CovCase::BandedB; // indefinite at p = 20
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| !r.error.is_empty()));
        assert!(rows.iter().all(|r| r.type_one.is_none()));
    }

    #[test]
    fn fmt_f64_has_17_significant_digits() {
        let s = fmt_f64(1.0 / 3.0);
        assert_eq!(s, "3.3333333333333331e-1");
        let x = 0.1234567890123456789;
        let back: f64 = fmt_f64(x).parse().unwrap();
        assert_eq!(back, x);
    }
}

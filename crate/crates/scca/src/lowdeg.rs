//! Truncated likelihood-ratio norm under the sparse Rademacher prior,
//! the quantity whose boundedness evidences the conjectured computational
//! barrier. Exact evaluation for small instances and a Monte Carlo
//! estimator for everything else.
//!
//! The target expectation, over independent replica draws
//! (a1, a2) from the x-block prior and (b1, b2) from the y-block prior, is
//!
//!   E[ W * sum_{d=0}^{floor(D/2)} C(d+n-1, d) (B^{-2} (a1.a2)(b1.b2))^d ]
//!
//! where W indicates that both replicas have norm product below B.

use nalgebra::DVector;
use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Instance description for the norm computation.
#[derive(Debug, Clone)]
pub struct LowDegConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub s_x: usize,
    pub s_y: usize,
    pub b_const: f64,
    /// Polynomial degree ceiling; the series truncates at floor(degree/2).
    pub degree: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

/// How a norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: NormMethod,
}

impl LowDegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.q == 0 || self.degree == 0 {
            return Err(Error::PreconditionViolated(
                "n, p, q, degree must be positive".into(),
            ));
        }
        if self.s_x == 0 || self.s_x > self.p || self.s_y == 0 || self.s_y > self.q {
            return Err(Error::PreconditionViolated(format!(
                "sparsities ({}, {}) outside (0, p] x (0, q]",
                self.s_x, self.s_y
            )));
        }
        if self.b_const <= 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "b_const {} must be positive",
                self.b_const
            )));
        }
        Ok(())
    }

    /// Hypothesis checks that are flagged rather than enforced: the degree
    /// ceiling and the constant needed by the Bayesian reduction.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let cap = (self.p as f64).sqrt().min((self.q as f64).sqrt()).min(self.n as f64);
        if self.degree as f64 > cap {
            w.push(format!(
                "degree {} exceeds min(sqrt(p), sqrt(q), n) = {cap:.2}",
                self.degree
            ));
        }
        if self.b_const <= 2.0 {
            w.push(format!(
                "b_const {} <= 2; the reduction to the testing problem needs B > 2",
                self.b_const
            ));
        }
        w
    }
}

/// One draw from the three-point prior: entries are +-1/sqrt(s) with
/// probability s/(2 dim) each and 0 otherwise, i.i.d. across coordinates.
pub fn sample_rademacher_prior(dim: usize, s: usize, seed: u64) -> DVector<f64> {
    assert!(s >= 1 && s <= dim, "need 1 <= s <= dim");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = s as f64 / dim as f64;
    let mag = 1.0 / (s as f64).sqrt();
    DVector::from_fn(dim, |_, _| {
        let u: f64 = rng.gen();
        if u < nz / 2.0 {
            mag
        } else if u < nz {
            -mag
        } else {
            0.0
        }
    })
}

/// log C(d+n-1, d) computed as sum of log((n-1+i)/i); exact enough for the
/// handful of terms the truncated series ever needs.
fn ln_neg_binom_coeff(n: usize, d: usize) -> f64 {
    (1..=d).map(|i| (((n - 1 + i) as f64) / i as f64).ln()).sum()
}

/// Signed log-space accumulator: represents sign * exp(log_mag).
#[derive(Clone, Copy)]
struct SignedLog {
    sign: f64,
    log_mag: f64,
}

impl SignedLog {
    const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        log_mag: f64::NEG_INFINITY,
    };

    fn add(self, other: SignedLog) -> SignedLog {
        if other.sign == 0.0 || other.log_mag == f64::NEG_INFINITY {
            return self;
        }
        if self.sign == 0.0 || self.log_mag == f64::NEG_INFINITY {
            return other;
        }
        let (big, small) = if self.log_mag >= other.log_mag {
            (self, other)
        } else {
            (other, self)
        };
        let delta = small.log_mag - big.log_mag;
        if big.sign == small.sign {
            SignedLog {
                sign: big.sign,
                log_mag: big.log_mag + delta.exp().ln_1p(),
            }
        } else {
            let rem = 1.0 - delta.exp();
            if rem <= 0.0 {
                SignedLog::ZERO
            } else {
                SignedLog {
                    sign: big.sign,
                    log_mag: big.log_mag + rem.ln(),
                }
            }
        }
    }

    fn to_f64(self) -> f64 {
        self.sign * self.log_mag.exp()
    }
}

/// Truncated negative-binomial series sum_{d=0}^{d_max} C(d+n-1, d) x^d,
/// accumulated in signed log space so the binomial coefficients cannot
/// overflow intermediate terms.
fn truncated_series(n: usize, d_max: usize, x: f64) -> Result<f64> {
    let mut acc = SignedLog { sign: 1.0, log_mag: 0.0 }; // d = 0 term
    if x != 0.0 {
        let ln_abs_x = x.abs().ln();
        let sign_x = x.signum();
        for d in 1..=d_max {
            acc = acc.add(SignedLog {
                sign: sign_x.powi(d as i32),
                log_mag: ln_neg_binom_coeff(n, d) + d as f64 * ln_abs_x,
            });
        }
    }
    let v = acc.to_f64();
    if !v.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(v)
}

/// Sparse draw from the prior into a reused buffer: sorted (index, sign)
/// pairs. Same law as `sample_rademacher_prior`; the nonzero count is
/// Binomial(dim, s/dim), positions are a uniform subset, signs fair coins.
fn draw_sparse_into<R: Rng>(
    rng: &mut R,
    dim: usize,
    nnz_law: &rand_distr::Binomial,
    buf: &mut Vec<(u32, i8)>,
) {
    let m = nnz_law.sample(rng) as usize;
    buf.clear();
    if m == dim {
        buf.extend((0..dim as u32).map(|i| (i, 0)));
    } else if m * 2 <= dim {
        while buf.len() < m {
            let c = rng.gen_range(0..dim as u32);
            if !buf.iter().any(|&(i, _)| i == c) {
                buf.push((c, 0));
            }
        }
        buf.sort_unstable_by_key(|&(i, _)| i);
    } else {
        // Dense regime: sample the complement instead.
        let mut excl: Vec<u32> = Vec::with_capacity(dim - m);
        while excl.len() < dim - m {
            let c = rng.gen_range(0..dim as u32);
            if !excl.contains(&c) {
                excl.push(c);
            }
        }
        excl.sort_unstable();
        let mut e = 0;
        for c in 0..dim as u32 {
            if e < excl.len() && excl[e] == c {
                e += 1;
            } else {
                buf.push((c, 0));
            }
        }
    }
    for slot in buf.iter_mut() {
        slot.1 = if rng.gen::<bool>() { 1 } else { -1 };
    }
}

/// Signed overlap (k_plus - k_minus) of two sorted sparse sign vectors.
fn signed_overlap(a: &[(u32, i8)], b: &[(u32, i8)]) -> i64 {
    let mut i = 0;
    let mut j = 0;
    let mut acc = 0i64;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += (a[i].1 as i64) * (b[j].1 as i64);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of the truncated norm. Samples are sharded into
/// fixed chunks with derived seeds and reduced in chunk order, so the result
/// does not depend on the worker count.
pub fn lowdeg_norm_mc(config: &LowDegConfig) -> Result<NormEstimate> {
    config.validate()?;
    let d_max = config.degree / 2;
    let w_bound = config.b_const * config.b_const * (config.s_x * config.s_y) as f64;
    let n_chunks = 256.min(config.mc_samples.max(1));
    let base = config.mc_samples / n_chunks;
    let extra = config.mc_samples % n_chunks;

    let nnz_law_x = rand_distr::Binomial::new(config.p as u64, config.s_x as f64 / config.p as f64)
        .map_err(|e| Error::PreconditionViolated(e.to_string()))?;
    let nnz_law_y = rand_distr::Binomial::new(config.q as u64, config.s_y as f64 / config.q as f64)
        .map_err(|e| Error::PreconditionViolated(e.to_string()))?;

    let chunk_stats: Vec<Result<(f64, f64, usize)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
                config.seed ^ (chunk as u64).wrapping_mul(0x9e3779b97f4a7c15),
            ));
            let count = base + usize::from(chunk < extra);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let (mut a1, mut a2) = (Vec::new(), Vec::new());
            let (mut b1, mut b2) = (Vec::new(), Vec::new());
            for _ in 0..count {
                draw_sparse_into(&mut rng, config.p, &nnz_law_x, &mut a1);
                draw_sparse_into(&mut rng, config.p, &nnz_law_x, &mut a2);
                draw_sparse_into(&mut rng, config.q, &nnz_law_y, &mut b1);
                draw_sparse_into(&mut rng, config.q, &nnz_law_y, &mut b2);
                // ||a||^2 = nnz / s, so the indicator compares nnz products.
                let w = ((a1.len() * b1.len()) as f64) < w_bound
                    && ((a2.len() * b2.len()) as f64) < w_bound;
                if !w {
                    continue; // contributes 0
                }
                let dot_a = signed_overlap(&a1, &a2) as f64 / config.s_x as f64;
                let dot_b = signed_overlap(&b1, &b2) as f64 / config.s_y as f64;
                let x = dot_a * dot_b / (config.b_const * config.b_const);
                let t = truncated_series(config.n, d_max, x)?;
                sum += t;
                sumsq += t * t;
            }
            Ok((sum, sumsq, count))
        })
        .collect();

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut total = 0usize;
    for s in chunk_stats {
        let (a, b, c) = s?;
        sum += a;
        sumsq += b;
        total += c;
    }
    let nf = total as f64;
    let mean = sum / nf;
    let var = if total > 1 {
        ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(NormEstimate {
        value: mean,
        std_error: (var / nf).sqrt(),
        method: NormMethod::MonteCarlo,
    })
}

/// Per-block pattern summary: probability mass by (signed overlap, nnz of
/// replica 1, nnz of replica 2).
type BlockTable = Vec<(i64, usize, usize, f64)>;

/// Compensated (Kahan) accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// pow with the convention 0^0 = 1 and an early exit for zero bases with
/// positive exponents (mass zero, term dropped by the caller).
fn checked_pow(base: f64, k: usize) -> Option<f64> {
    if k == 0 {
        Some(1.0)
    } else if base <= 0.0 {
        None
    } else {
        Some(base.powi(k as i32))
    }
}

/// Binomial coefficient by the multiplicative formula; values stay well
/// within f64 range for the dimensions the exact evaluator accepts.
fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Factored per-block law via multinomial counting over the five
/// per-coordinate categories (agree, disagree, only-1, only-2, neither).
fn block_table_combinatorial(dim: usize, s: usize) -> BlockTable {
    let sf = s as f64;
    let df = dim as f64;
    let p_agree = sf * sf / (2.0 * df * df);
    let p_only = (sf / df) * (1.0 - sf / df);
    let p_none = (1.0 - sf / df) * (1.0 - sf / df);
    let mut table = Vec::new();
    for k_plus in 0..=dim {
        for k_minus in 0..=(dim - k_plus) {
            for j1 in 0..=(dim - k_plus - k_minus) {
                for j2 in 0..=(dim - k_plus - k_minus - j1) {
                    let rest = dim - k_plus - k_minus - j1 - j2;
                    let (Some(pa), Some(pb), Some(pc)) = (
                        checked_pow(p_agree, k_plus + k_minus),
                        checked_pow(p_only, j1 + j2),
                        checked_pow(p_none, rest),
                    ) else {
                        continue;
                    };
                    let coeff = binom(dim, k_plus)
                        * binom(dim - k_plus, k_minus)
                        * binom(dim - k_plus - k_minus, j1)
                        * binom(dim - k_plus - k_minus - j1, j2);
                    let weight = coeff * pa * pb * pc;
                    if weight == 0.0 {
                        continue;
                    }
                    table.push((
                        k_plus as i64 - k_minus as i64,
                        k_plus + k_minus + j1,
                        k_plus + k_minus + j2,
                        weight,
                    ));
                }
            }
        }
    }
    table
}

/// Per-block law by brute enumeration of all 3^(2 dim) replica pairs; the
/// reference the combinatorial factorization is checked against.
fn block_table_enumerated(dim: usize, s: usize) -> Result<BlockTable> {
    if 9f64.powi(dim as i32) > 1e8 {
        return Err(Error::TooLarge(format!(
            "enumeration over 9^{dim} patterns",
        )));
    }
    let sf = s as f64;
    let df = dim as f64;
    let p_sign = sf / (2.0 * df);
    let p_zero = 1.0 - sf / df;
    let n_pat = 3usize.pow(dim as u32);
    let decode = |mut code: usize| -> (Vec<i8>, f64) {
        let mut v = vec![0i8; dim];
        let mut prob = 1.0;
        for slot in v.iter_mut() {
            let trit = code % 3;
            code /= 3;
            *slot = match trit {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            prob *= if *slot == 0 { p_zero } else { p_sign };
        }
        (v, prob)
    };
    let patterns: Vec<(Vec<i8>, f64)> = (0..n_pat).map(decode).collect();
    let mut table = Vec::new();
    for (v1, pr1) in &patterns {
        if *pr1 == 0.0 {
            continue;
        }
        for (v2, pr2) in &patterns {
            let w = pr1 * pr2;
            if w == 0.0 {
                continue;
            }
            let mut dot = 0i64;
            let mut m1 = 0usize;
            let mut m2 = 0usize;
            for i in 0..dim {
                dot += (v1[i] as i64) * (v2[i] as i64);
                m1 += usize::from(v1[i] != 0);
                m2 += usize::from(v2[i] != 0);
            }
            table.push((dot, m1, m2, w));
        }
    }
    Ok(table)
}

/// Assemble the norm from two per-block tables, per degree. Only even powers
/// enter: odd powers cancel by sign symmetry, which the enumerated route
/// (which keeps them) confirms.
fn assemble(config: &LowDegConfig, xt: &BlockTable, yt: &BlockTable) -> f64 {
    let d_max = config.degree / 2;
    let w_bound = config.b_const * config.b_const * (config.s_x * config.s_y) as f64;
    let sx = config.s_x as f64;
    let sy = config.s_y as f64;
    let binv2 = 1.0 / (config.b_const * config.b_const);
    let mut value = Kahan::default();
    for d in (0..=d_max).step_by(2) {
        let coeff = (ln_neg_binom_coeff(config.n, d) + d as f64 * binv2.ln()).exp();
        let mut cross = Kahan::default();
        for &(dot_x, m1, m2, wx) in xt {
            let ax = (dot_x as f64 / sx).powi(d as i32) * wx;
            if ax == 0.0 {
                continue;
            }
            for &(dot_y, mb1, mb2, wy) in yt {
                if ((m1 * mb1) as f64) < w_bound && ((m2 * mb2) as f64) < w_bound {
                    cross.add(ax * (dot_y as f64 / sy).powi(d as i32) * wy);
                }
            }
        }
        value.add(coeff * cross.sum);
    }
    value.sum
}

/// Direct assembly for the enumerated oracle: the full truncated series
/// (odd powers included) is evaluated for every pattern pair.
fn assemble_direct(config: &LowDegConfig, xt: &BlockTable, yt: &BlockTable) -> f64 {
    let d_max = config.degree / 2;
    let w_bound = config.b_const * config.b_const * (config.s_x * config.s_y) as f64;
    let scale = 1.0 / (config.b_const * config.b_const * config.s_x as f64 * config.s_y as f64);
    // C(d+n-1, d) for d = 0..=d_max via the recurrence.
    let mut coeffs = vec![1.0f64; d_max + 1];
    for d in 1..=d_max {
        coeffs[d] = coeffs[d - 1] * (config.n - 1 + d) as f64 / d as f64;
    }
    let mut value = Kahan::default();
    for &(dot_x, m1, m2, wx) in xt {
        for &(dot_y, mb1, mb2, wy) in yt {
            if ((m1 * mb1) as f64) < w_bound && ((m2 * mb2) as f64) < w_bound {
                let x = (dot_x * dot_y) as f64 * scale;
                let mut series = 0.0;
                let mut xp = 1.0;
                for &c in coeffs.iter() {
                    series += c * xp;
                    xp *= x;
                }
                value.add(wx * wy * series);
            }
        }
    }
    value.sum
}

fn compress(table: BlockTable) -> BlockTable {
    use std::collections::HashMap;
    let mut map: HashMap<(i64, usize, usize), f64> = HashMap::new();
    for (dot, m1, m2, w) in table {
        *map.entry((dot, m1, m2)).or_insert(0.0) += w;
    }
    let mut out: BlockTable = map
        .into_iter()
        .map(|((dot, m1, m2), w)| (dot, m1, m2, w))
        .collect();
    out.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    out
}

/// Exact value via the combinatorial factorization of the prior; polynomial
/// in p and q rather than exponential.
pub fn lowdeg_norm_exact(config: &LowDegConfig) -> Result<NormEstimate> {
    config.validate()?;
    if config.p > 150 || config.q > 150 {
        return Err(Error::TooLarge(format!(
            "combinatorial evaluation at p={}, q={}",
            config.p, config.q
        )));
    }
    let xt = compress(block_table_combinatorial(config.p, config.s_x));
    let yt = compress(block_table_combinatorial(config.q, config.s_y));
    Ok(NormEstimate {
        value: assemble(config, &xt, &yt),
        std_error: 0.0,
        method: NormMethod::Exact,
    })
}

/// Exact value by naive full enumeration; usable only for tiny dimensions
/// and kept as the independent oracle for `lowdeg_norm_exact`. Unlike the
/// combinatorial route it keeps the odd series terms, whose cancellation is
/// part of what the cross-check confirms.
pub fn lowdeg_norm_enumerated(config: &LowDegConfig) -> Result<NormEstimate> {
    config.validate()?;
    let xt = compress(block_table_enumerated(config.p, config.s_x)?);
    let yt = compress(block_table_enumerated(config.q, config.s_y)?);
    Ok(NormEstimate {
        value: assemble_direct(config, &xt, &yt),
        std_error: 0.0,
        method: NormMethod::Exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, p: usize, q: usize, s: usize, b: f64, degree: usize) -> LowDegConfig {
        LowDegConfig {
            n,
            p,
            q,
            s_x: s,
            s_y: s,
            b_const: b,
            degree,
            mc_samples: 100_000,
            seed: 7,
        }
    }

    #[test]
    fn prior_mass_formula() {
        // s = dim leaves no zero mass: all entries are +-1/sqrt(dim).
        let v = sample_rademacher_prior(50, 50, 3);
        assert!(v.iter().all(|&x| x.abs() > 0.0));
        let mag = 1.0 / 50.0_f64.sqrt();
        assert!(v.iter().all(|&x| (x.abs() - mag).abs() < 1e-15));
    }

    #[test]
    fn prior_nonzero_fraction_and_norm() {
        let mut nonzero = 0usize;
        let mut norm2 = 0.0;
        let reps = 2000;
        for seed in 0..reps {
            let v = sample_rademacher_prior(100, 10, seed);
            nonzero += v.iter().filter(|&&x| x != 0.0).count();
            norm2 += v.norm_squared();
        }
        let frac = nonzero as f64 / (reps as f64 * 100.0);
        assert!((frac - 0.1).abs() < 0.01, "nonzero fraction {frac}");
        let mean_norm2 = norm2 / reps as f64;
        // E||a||^2 = 1; SE of the mean is about sqrt(2/(s*reps)) ~ 0.01.
        assert!((mean_norm2 - 1.0).abs() < 0.03, "mean norm^2 {mean_norm2}");
    }

    #[test]
    fn degree_one_truncates_to_w_mass() {
        let cfg = config(5, 4, 4, 2, 3.0, 1);
        let exact = lowdeg_norm_exact(&cfg).unwrap();
        // With B = 3 the indicator bound is nnz1 * nnz2 < 36, violated only
        // when a replica pair has large support on both blocks.
        assert!(exact.value <= 1.0 + 1e-12);
        assert!(exact.value > 0.9);
        let enumerated = lowdeg_norm_enumerated(&cfg).unwrap();
        assert!((exact.value - enumerated.value).abs() < 1e-12);
    }

    #[test]
    fn tiny_instance_reference_values() {
        // p = q = s = 2, B large enough that W is always 1, n = 1: the d = 1
        // term vanishes by sign symmetry, so degree 2 gives exactly 1, and
        // degree 4 adds B^-4 E[(a1.a2)^2] E[(b1.b2)^2] = B^-4 / 4.
        let c2 = config(1, 2, 2, 2, 100.0, 2);
        let v2 = lowdeg_norm_exact(&c2).unwrap().value;
        assert!((v2 - 1.0).abs() < 1e-12);
        let c4 = config(1, 2, 2, 2, 100.0, 4);
        let v4 = lowdeg_norm_exact(&c4).unwrap().value;
        let expected = 1.0 + 100.0_f64.powi(-4) * 0.25;
        assert!((v4 - expected).abs() < 1e-12, "{v4} vs {expected}");
        let ve = lowdeg_norm_enumerated(&c4).unwrap().value;
        assert!((v4 - ve).abs() < 1e-12);
    }

    #[test]
    fn w_kills_everything_when_b_below_all_patterns() {
        // s = dim makes every replica have norm exactly 1, so B <= 1 forces
        // W = 0 identically and the value collapses to 0.
        let mut cfg = config(3, 3, 3, 3, 0.9, 4);
        assert!(!cfg.warnings().is_empty());
        let v = lowdeg_norm_exact(&cfg).unwrap().value;
        assert_eq!(v, 0.0);
        cfg.mc_samples = 1000;
        let mc = lowdeg_norm_mc(&cfg).unwrap();
        assert_eq!(mc.value, 0.0);
    }

    #[test]
    fn combinatorial_matches_enumeration() {
        for (p, q, s, b, deg) in [(2, 2, 2, 100.0, 4), (3, 2, 2, 3.0, 4), (4, 3, 2, 2.5, 6)] {
            let cfg = LowDegConfig {
                n: 3,
                p,
                q,
                s_x: s,
                s_y: s.min(q),
                b_const: b,
                degree: deg,
                mc_samples: 1,
                seed: 0,
            };
            let a = lowdeg_norm_exact(&cfg).unwrap().value;
            let b_ = lowdeg_norm_enumerated(&cfg).unwrap().value;
            assert!((a - b_).abs() < 1e-12, "p={p} q={q}: {a} vs {b_}");
        }
    }

    #[test]
    fn mc_agrees_with_exact_small_instance() {
        let mut cfg = config(4, 6, 6, 2, 3.0, 4);
        cfg.mc_samples = 200_000;
        let exact = lowdeg_norm_exact(&cfg).unwrap();
        let mc = lowdeg_norm_mc(&cfg).unwrap();
        let dev = (mc.value - exact.value).abs();
        assert!(
            dev < 4.0 * mc.std_error.max(1e-9),
            "mc {} +- {} vs exact {}",
            mc.value,
            mc.std_error,
            exact.value
        );
    }

    #[test]
    fn mc_deterministic_given_seed() {
        let cfg = config(4, 6, 6, 2, 3.0, 4);
        let a = lowdeg_norm_mc(&cfg).unwrap();
        let b = lowdeg_norm_mc(&cfg).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn exact_nondecreasing_in_degree() {
        let mut last = 0.0;
        for deg in [1, 2, 4, 6, 8] {
            let v = lowdeg_norm_exact(&config(6, 5, 5, 2, 3.0, deg)).unwrap().value;
            assert!(v >= last - 1e-12, "degree {deg}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn block_permutation_invariance() {
        // The prior is exchangeable across coordinates, so the table only
        // depends on (dim, s); swapping p and q with equal sparsity leaves
        // the value unchanged.
        let a = lowdeg_norm_exact(&config(5, 6, 4, 2, 3.0, 4)).unwrap().value;
        let cfg_sw = LowDegConfig {
            p: 4,
            q: 6,
            ..config(5, 6, 4, 2, 3.0, 4)
        };
        let b = lowdeg_norm_exact(&cfg_sw).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn series_matches_linear_evaluation() {
        for (n, d_max, x) in [(10, 5, 0.3), (50, 3, -0.02), (7, 4, 0.0), (4, 6, -0.9)] {
            let log_space = truncated_series(n, d_max, x).unwrap();
            let mut linear = 0.0;
            let mut coeff = 1.0;
            for d in 0..=d_max {
                if d > 0 {
                    coeff *= (n - 1 + d) as f64 / d as f64;
                }
                linear += coeff * x.powi(d as i32);
            }
            assert!(
                (log_space - linear).abs() < 1e-10 * linear.abs().max(1.0),
                "n={n} d={d_max} x={x}: {log_space} vs {linear}"
            );
        }
    }

    #[test]
    fn warnings_flag_hypothesis_violations() {
        let cfg = config(4, 6, 6, 2, 1.5, 40);
        let w = cfg.warnings();
        assert_eq!(w.len(), 2);
        assert!(cfg.validate().is_ok());
    }
}

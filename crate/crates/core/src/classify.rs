//! Class predicates: Z, diagonal dominance, Nekrasov, M/H and a P-tensor falsifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::tensor::{for_each_index, Tensor};

/// Relative slack on the non-strict dominance test `|t_ii| >= R_i`.
///
/// Equality rows (the scaled tensor `T·W` has them) land a few ulps either
/// side after the `(·)^(1/(m-1))` round trip; strict dominance is exact.
pub const DOMINANCE_REL_TOL: f64 = 1e-12;

/// Sum of `|t|` over the off-diagonal entries of each row.
pub fn row_excess(t: &Tensor) -> Vec<f64> {
    (0..t.dim())
        .map(|i| {
            let d = t.diagonal_in_row(i);
            t.row(i)
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != d)
                .map(|(_, v)| v.abs())
                .sum()
        })
        .collect()
}

/// Per-row quantities behind the Nekrasov test.
#[derive(Clone, Debug, PartialEq)]
pub struct NekrasovProfile {
    pub row_excess: Vec<f64>,
    pub lambda: Vec<f64>,
    pub diag: Vec<f64>,
    pub per_row_strict: Vec<bool>,
}

impl NekrasovProfile {
    pub fn is_nekrasov(&self) -> bool {
        self.per_row_strict.iter().all(|b| *b)
    }

    /// First row with `|t_ii| <= Λ_i`.
    pub fn first_failing_row(&self) -> Option<usize> {
        self.per_row_strict.iter().position(|b| !*b)
    }
}

/// Computes `R_i` and the recursive weighted excesses `Λ_i`.
///
/// `Λ_1 = R_1`; for later rows an off-diagonal entry whose whole index tail
/// lies in rows already processed is weighted by
/// `Π_k (Λ_{i_k} / |t_{i_k..i_k}|)^(1/(m-1))`, every other entry counts fully.
pub fn nekrasov_profile(t: &Tensor) -> Result<NekrasovProfile> {
    let n = t.dim();
    let diag = t.diagonal();
    if let Some(row) = diag.iter().position(|d| *d == 0.0) {
        return Err(Error::ZeroDiagonal { row });
    }
    let row_excess = row_excess(t);
    let exponent = 1.0 / (t.order() - 1) as f64;
    let mut lambda = vec![0.0; n];
    let mut ratio = vec![0.0; n];
    for i in 0..n {
        lambda[i] = if i == 0 {
            row_excess[0]
        } else {
            let row = t.row(i);
            let d = t.diagonal_in_row(i);
            let mut sum = 0.0;
            for_each_index(t.order() - 1, n, |offset, tail| {
                let a = row[offset].abs();
                if offset == d || a == 0.0 {
                    return;
                }
                if tail.iter().all(|&k| k < i) {
                    sum += a * tail.iter().map(|&k| ratio[k]).product::<f64>();
                } else {
                    sum += a;
                }
            });
            sum
        };
        ratio[i] = (lambda[i] / diag[i].abs()).powf(exponent);
    }
    let per_row_strict = diag
        .iter()
        .zip(&lambda)
        .map(|(d, l)| d.abs() > *l)
        .collect();
    Ok(NekrasovProfile {
        row_excess,
        lambda,
        diag,
        per_row_strict,
    })
}

/// First off-diagonal index with a positive entry, if any.
pub fn z_violation(t: &Tensor) -> Option<Vec<usize>> {
    let n = t.dim();
    (0..n).find_map(|i| {
        let d = t.diagonal_in_row(i);
        t.row(i)
            .iter()
            .enumerate()
            .find(|(k, v)| *k != d && **v > 0.0)
            .map(|(k, _)| t.index_of(i * t.row_len() + k))
    })
}

pub fn is_z(t: &Tensor) -> bool {
    z_violation(t).is_none()
}

/// First row breaking `|t_ii| >= R_i` (or `>` when `strict`).
pub fn dominance_violation(t: &Tensor, strict: bool) -> Option<usize> {
    row_excess(t).iter().enumerate().find_map(|(i, &r)| {
        let d = t.diag(i).abs();
        let ok = if strict {
            d > r
        } else {
            d >= r - DOMINANCE_REL_TOL * d.max(r)
        };
        (!ok).then_some(i)
    })
}

pub fn is_diag_dominant(t: &Tensor, strict: bool) -> bool {
    dominance_violation(t, strict).is_none()
}

pub fn is_nekrasov(t: &Tensor) -> Result<bool> {
    Ok(nekrasov_profile(t)?.is_nekrasov())
}

/// Every predicate verdict for one tensor. Row and index witnesses are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub order: usize,
    pub dim: usize,
    pub is_z: bool,
    pub is_dd: bool,
    pub is_sdd: bool,
    pub is_nekrasov: bool,
    pub is_nekrasov_z: bool,
    pub positive_diagonal: bool,
    pub even_order: bool,
    /// Nekrasov Z with positive diagonal and even order, hence a P-tensor.
    pub predicted_p: bool,
    pub z_witness: Option<Vec<usize>>,
    pub dd_witness: Option<usize>,
    pub sdd_witness: Option<usize>,
    pub nekrasov_witness: Option<usize>,
    /// Why the Nekrasov test could not run (zero diagonal).
    pub reason: Option<String>,
    pub row_excess: Vec<f64>,
    pub profile: Option<NekrasovProfile>,
}

pub fn classify(t: &Tensor) -> ClassReport {
    let z_witness = z_violation(t);
    let dd_witness = dominance_violation(t, false);
    let sdd_witness = dominance_violation(t, true);
    let (profile, reason) = match nekrasov_profile(t) {
        Ok(p) => (Some(p), None),
        Err(Error::ZeroDiagonal { row }) => (None, Some(format!("zero diagonal in row {}", row + 1))),
        Err(e) => (None, Some(e.to_string())),
    };
    let is_nekrasov = profile.as_ref().is_some_and(|p| p.is_nekrasov());
    let nekrasov_witness = profile.as_ref().and_then(|p| p.first_failing_row());
    let is_z = z_witness.is_none();
    let positive_diagonal = t.diagonal().iter().all(|d| *d > 0.0);
    let even_order = t.order().is_multiple_of(2);
    let is_nekrasov_z = is_nekrasov && is_z;
    ClassReport {
        order: t.order(),
        dim: t.dim(),
        is_z,
        is_dd: dd_witness.is_none(),
        is_sdd: sdd_witness.is_none(),
        is_nekrasov,
        is_nekrasov_z,
        positive_diagonal,
        even_order,
        predicted_p: is_nekrasov_z && positive_diagonal && even_order,
        z_witness,
        dd_witness,
        sdd_witness,
        nekrasov_witness,
        reason,
        row_excess: row_excess(t),
        profile,
    }
}

/// Power-iteration estimate of `ρ(T)` for a nonnegative tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    /// Positive, normalized to `max_i x_i = 1`.
    pub eigenvector: Vec<f64>,
    /// Certified bounds: `lower <= ρ(T) <= upper`.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SpectralEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Relative support thresholds tried for the restricted lower bound.
const SUPPORT_THRESHOLDS: [f64; 5] = [1e-3, 1e-6, 1e-9, 1e-12, 1e-15];

fn power_row(v: f64, p: f64) -> f64 {
    v.powf(p)
}

/// Min/max of `(T x)_i / x_i^(m-1)` over `support` (all rows when `None`).
fn collatz_bounds(t: &Tensor, x: &[f64], support: Option<&[bool]>) -> Result<(f64, f64)> {
    let m1 = (t.order() - 1) as f64;
    let y = t.apply(x)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..x.len() {
        if support.is_some_and(|s| !s[i]) {
            continue;
        }
        let r = y[i] / power_row(x[i], m1);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Collatz–Wielandt bracket for `ρ(T)` at a positive point, tightened by
/// lower bounds from principal supports: for `x ≥ 0` supported on `S`,
/// `ρ(T) >= min_{i∈S} (T x_S)_i / x_i^(m-1)` (reducible tensors need this).
fn bracket(t: &Tensor, x: &[f64]) -> Result<(f64, f64)> {
    let (mut lower, upper) = collatz_bounds(t, x, None)?;
    let xmax = x.iter().cloned().fold(0.0, f64::max);
    let mut last_support: Option<Vec<bool>> = None;
    for &delta in &SUPPORT_THRESHOLDS {
        let support: Vec<bool> = x.iter().map(|v| *v > delta * xmax).collect();
        if support.iter().all(|s| *s) || last_support.as_ref() == Some(&support) {
            continue;
        }
        let restricted: Vec<f64> = x
            .iter()
            .zip(&support)
            .map(|(v, s)| if *s { *v } else { 0.0 })
            .collect();
        let (lo, _) = collatz_bounds(t, &restricted, Some(&support))?;
        lower = lower.max(lo);
        last_support = Some(support);
    }
    Ok((lower, upper))
}

/// Estimates the spectral radius of a nonnegative tensor from the all-ones start.
///
/// Iterates `x ← (T x^(m-1) + x^[m-1])^[1/(m-1)]` (the shift by ℐ keeps
/// imprimitive tensors from oscillating) and keeps the tightest certified
/// bracket seen. Converged when `upper - lower <= tol·max(1, upper)`.
pub fn spectral_radius_nonneg(t: &Tensor, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    spectral_radius_nonneg_from(t, &vec![1.0; t.dim()], tol, max_iter)
}

pub fn spectral_radius_nonneg_from(
    t: &Tensor,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate> {
    if let Some(k) = t.values().iter().position(|v| *v < 0.0) {
        return Err(Error::NegativeEntry {
            index: t.index_of(k),
        });
    }
    if start.len() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: start.len(),
        });
    }
    if start.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("start vector must be strictly positive".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let blocks = components(t);
    if blocks.len() > 1 {
        return reducible_estimate(t, &blocks, start, tol, max_iter);
    }
    irreducible_estimate(t, start, tol, max_iter)
}

fn irreducible_estimate(t: &Tensor, start: &[f64], tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    let m1 = (t.order() - 1) as f64;
    let root = 1.0 / m1;
    let mut x = normalized(start);
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let (lo, hi) = bracket(t, &x)?;
        lower = lower.max(lo);
        upper = upper.min(hi);
        if upper - lower <= tol * upper.max(1.0) {
            converged = true;
            break;
        }
        let y = t.apply(&x)?;
        let next: Vec<f64> = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| power_row(yi + power_row(*xi, m1), root))
            .collect();
        x = normalized(&next);
        // keep the Collatz–Wielandt upper bound valid
        for v in x.iter_mut() {
            if *v < f64::MIN_POSITIVE {
                *v = f64::MIN_POSITIVE;
            }
        }
    }
    Ok(SpectralEstimate {
        value: 0.5 * (lower + upper),
        eigenvector: x,
        lower,
        upper,
        iterations,
        converged,
    })
}

/// A strongly connected block of the digraph with an edge `i → j` whenever
/// some nonzero `t_{i i2..im}` has `j` among `i2..im`.
struct Block {
    members: Vec<usize>,
    /// Longest chain of distinct blocks reaching this one.
    depth: usize,
}

fn components(t: &Tensor) -> Vec<Block> {
    let n = t.dim();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for (idx, _) in t.nonzeros() {
        for &j in &idx[1..] {
            reach[idx[0]][j] = true;
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (r, v) in row.iter_mut().zip(&via) {
                    *r |= *v;
                }
            }
        }
    }
    let mut block_of = vec![usize::MAX; n];
    let mut blocks: Vec<Block> = Vec::new();
    for i in 0..n {
        if block_of[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &members {
            block_of[j] = blocks.len();
        }
        blocks.push(Block { members, depth: 0 });
    }
    let rep: Vec<usize> = blocks.iter().map(|b| b.members[0]).collect();
    let ancestors = |b: usize| (0..blocks.len()).filter(|&a| a != b && reach[rep[a]][rep[b]]).count();
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by_key(|&b| ancestors(b));
    for (k, &b) in order.iter().enumerate() {
        let depth = order[..k]
            .iter()
            .filter(|&&a| reach[rep[a]][rep[b]])
            .map(|&a| blocks[a].depth + 1)
            .max()
            .unwrap_or(0);
        blocks[b].depth = depth;
    }
    blocks
}

fn principal_subtensor(t: &Tensor, members: &[usize]) -> Tensor {
    let n = t.dim();
    let k = members.len();
    let mut values = Vec::with_capacity(k.pow(t.order() as u32));
    for_each_index(t.order(), k, |_, idx| {
        let offset = idx.iter().fold(0, |acc, &i| acc * n + members[i]);
        values.push(t.values()[offset]);
    });
    Tensor::from_values(t.order(), k, values).expect("principal subtensor of a valid tensor")
}

/// `ρ(T)` is the largest `ρ` over the diagonal blocks of the strongly connected
/// decomposition. Every block bound is certified for `T`; the upper bound
/// comes from block eigenvectors scaled by `ε^depth`, which makes the
/// coupling into deeper blocks `O(ε)`.
fn reducible_estimate(
    t: &Tensor,
    blocks: &[Block],
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate> {
    let n = t.dim();
    let m1 = (t.order() - 1) as f64;
    let mut local = vec![1.0; n];
    let mut depth = vec![0usize; n];
    let mut lower = 0.0f64;
    let mut iterations = 0;
    for b in blocks {
        for &i in &b.members {
            depth[i] = b.depth;
        }
        if b.members.len() == 1 {
            let i = b.members[0];
            lower = lower.max(t.diag(i));
            continue;
        }
        let sub = principal_subtensor(t, &b.members);
        let sub_start: Vec<f64> = b.members.iter().map(|&i| start[i]).collect();
        let est = irreducible_estimate(&sub, &sub_start, tol, max_iter)?;
        lower = lower.max(est.lower);
        iterations += est.iterations;
        for (&i, v) in b.members.iter().zip(&est.eigenvector) {
            local[i] = *v;
        }
    }
    let max_depth = blocks.iter().map(|b| b.depth).max().unwrap_or(0).max(1);
    // keeps every x_i^(m-1) a normal number
    let min_exponent = -290.0 / (max_depth as f64 * m1);
    let mut upper = f64::INFINITY;
    let mut best = local.clone();
    let mut exponent = 0.0;
    while exponent >= min_exponent {
        let eps = 10f64.powf(exponent);
        let x: Vec<f64> = local.iter().zip(&depth).map(|(v, &d)| v * eps.powi(d as i32)).collect();
        if x.iter().all(|v| v.is_normal()) {
            let (_, hi) = collatz_bounds(t, &x, None)?;
            if hi < upper {
                upper = hi;
                best = x;
            }
            if upper - lower <= tol * upper.max(1.0) {
                break;
            }
        }
        exponent -= 1.0;
    }
    let upper = upper.max(lower);
    Ok(SpectralEstimate {
        value: 0.5 * (lower + upper),
        eigenvector: normalized(&best),
        lower,
        upper,
        iterations,
        converged: upper - lower <= tol * upper.max(1.0),
    })
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(0.0, f64::max);
    x.iter().map(|v| v / max).collect()
}

/// Tri-state outcome for tests that rest on an iterative estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    pub fn is_yes(self) -> bool {
        self == Verdict::Yes
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "true",
            Verdict::No => "false",
            Verdict::Unknown => "unknown",
        }
    }
}

/// Default iteration budget for the spectral estimate inside the M-tensor test.
pub const M_TEST_MAX_ITER: usize = 100_000;
/// Bracket tolerance for the spectral estimate inside the M-tensor test.
pub const M_TEST_SPECTRAL_TOL: f64 = 1e-10;

/// Evidence behind an M-tensor verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct MCertificate {
    pub verdict: Verdict,
    /// Shift `s = max_i t_{i..i}` with `T = s·ℐ - B`.
    pub shift: f64,
    pub estimate: Option<SpectralEstimate>,
}

/// Decides `T = s·ℐ - B` with `B >= 0` and `s > ρ(B)`, taking `s` as the largest diagonal entry.
///
/// `tol` is the guard in `s > ρ(B) + tol·max(1, s)`; a stalled estimate gives
/// [`Verdict::Unknown`] unless its certified bracket already decides.
pub fn m_certificate(t: &Tensor, tol: f64) -> MCertificate {
    let shift = t.diagonal().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !is_z(t) || shift <= 0.0 {
        return MCertificate {
            verdict: Verdict::No,
            shift,
            estimate: None,
        };
    }
    let b = t.shifted_negation(shift);
    let estimate = match spectral_radius_nonneg(&b, M_TEST_SPECTRAL_TOL, M_TEST_MAX_ITER) {
        Ok(e) => e,
        Err(_) => {
            return MCertificate {
                verdict: Verdict::Unknown,
                shift,
                estimate: None,
            }
        }
    };
    let guard = tol * shift.max(1.0);
    let verdict = if estimate.converged {
        if shift > estimate.value + guard {
            Verdict::Yes
        } else {
            Verdict::No
        }
    } else if estimate.upper + guard < shift {
        Verdict::Yes
    } else if estimate.lower >= shift {
        Verdict::No
    } else {
        Verdict::Unknown
    };
    MCertificate {
        verdict,
        shift,
        estimate: Some(estimate),
    }
}

pub fn is_nonsingular_m(t: &Tensor, tol: f64) -> Verdict {
    m_certificate(t, tol).verdict
}

/// Nonsingular H: the comparison tensor is a nonsingular M tensor.
pub fn is_nonsingular_h(t: &Tensor, tol: f64) -> Verdict {
    is_nonsingular_m(&t.comparison(), tol)
}

/// A nonzero `x` with `x_j (T x^(m-1))_j <= 0` wherever `x_j != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PWitness {
    pub x: Vec<f64>,
    pub products: Vec<f64>,
    /// Sample ordinal that produced `x`.
    pub sample: usize,
}

/// Draws sample `ordinal` of the deterministic search sequence.
///
/// When all `3^n - 1` nonzero sign patterns fit in the budget they come first,
/// in base-3 order (digits 0, 1, 2 map to 0, 1, -1), and the rest are uniform
/// on the unit sphere. Otherwise even ordinals are sphere points and odd
/// ordinals random sign patterns. Each ordinal has its own ChaCha8 stream.
pub fn p_sample(dim: usize, samples: usize, seed: u64, ordinal: usize) -> Vec<f64> {
    let patterns = 3usize
        .checked_pow(dim as u32)
        .map(|p| p - 1)
        .filter(|p| *p <= samples);
    if let Some(count) = patterns {
        if ordinal < count {
            let mut code = ordinal + 1;
            return (0..dim)
                .map(|_| {
                    let digit = code % 3;
                    code /= 3;
                    [0.0, 1.0, -1.0][digit]
                })
                .collect();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal as u64);
    if patterns.is_none() && ordinal % 2 == 1 {
        loop {
            let x: Vec<f64> = (0..dim)
                .map(|_| [0.0, 1.0, -1.0][rng.random_range(0..3)])
                .collect();
            if x.iter().any(|v| *v != 0.0) {
                return x;
            }
        }
    }
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Searches for a vector showing `T` is not a P-tensor.
///
/// `None` only means no counterexample among `samples` draws.
pub fn p_falsify(t: &Tensor, samples: usize, seed: u64) -> Option<PWitness> {
    p_falsify_with(t, samples, seed, Execution::default())
}

/// As [`p_falsify`]; the returned witness is always the lowest sample ordinal.
pub fn p_falsify_with(t: &Tensor, samples: usize, seed: u64, exec: Execution) -> Option<PWitness> {
    let exec = exec.for_work(samples.saturating_mul(t.values().len()));
    par::find_first(exec, samples, |ordinal| {
        let x = p_sample(t.dim(), samples, seed, ordinal);
        let y = t.apply_with(&x, Execution::Sequential).ok()?;
        let products: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
        let best = x
            .iter()
            .zip(&products)
            .filter(|(xi, _)| **xi != 0.0)
            .map(|(_, p)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        (best <= 0.0).then_some(PWitness {
            x,
            products,
            sample: ordinal,
        })
    })
}

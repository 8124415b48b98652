//! Tensor complementarity problem: find `x >= 0` with `w = T x^(m-1) + q >= 0`
//! and `x^T w = 0`.
//!
//! Every solver is judged by the same certificate, the natural min-map
//! residual `‖min(x, w)‖∞`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct TcpInstance {
    tensor: Tensor,
    q: Vec<f64>,
}

impl TcpInstance {
    pub fn new(tensor: Tensor, q: Vec<f64>) -> Result<Self> {
        if q.len() != tensor.dim() {
            return Err(Error::DimensionMismatch {
                expected: tensor.dim(),
                got: q.len(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "q".into() });
        }
        Ok(TcpInstance { tensor, q })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `w = T x^(m-1) + q`.
    pub fn w(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut w = self.tensor.apply(x)?;
        for (wi, qi) in w.iter_mut().zip(&self.q) {
            *wi += qi;
        }
        Ok(w)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

fn min_map(x: &[f64], w: &[f64]) -> Vec<f64> {
    x.iter().zip(w).map(|(a, b)| a.min(*b)).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `‖min(x, T x^(m-1) + q)‖∞`; zero exactly at solutions.
pub fn residual(inst: &TcpInstance, x: &[f64]) -> Result<f64> {
    inst.check_point(x)?;
    let w = inst.w(x)?;
    Ok(inf_norm(&min_map(x, &w)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    MaxIter,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcpSolution {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub residual: f64,
    pub complementarity_gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

impl TcpSolution {
    fn at(inst: &TcpInstance, x: Vec<f64>, iterations: usize, status: SolveStatus) -> Result<Self> {
        let w = inst.w(&x)?;
        let residual = inf_norm(&min_map(&x, &w));
        let complementarity_gap = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        Ok(TcpSolution {
            x,
            w,
            residual,
            complementarity_gap,
            iterations,
            status,
        })
    }

    fn diverged(inst: &TcpInstance, x: Vec<f64>, iterations: usize) -> Self {
        let w = vec![f64::NAN; inst.dim()];
        TcpSolution {
            x,
            w,
            residual: f64::INFINITY,
            complementarity_gap: f64::NAN,
            iterations,
            status: SolveStatus::Diverged,
        }
    }
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_FIXED_POINT_MAX_ITER: usize = 10_000;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 200;

/// Start point `(1/n, ..., 1/n)`.
pub fn default_start(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointOptions {
    /// Initial step α.
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            step: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_FIXED_POINT_MAX_ITER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_NEWTON_MAX_ITER,
        }
    }
}

fn validate(tol: f64, step: f64) -> Result<()> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    Ok(())
}

fn start_point(inst: &TcpInstance, x0: Option<&[f64]>) -> Result<Vec<f64>> {
    let x = match x0 {
        Some(x) => x.to_vec(),
        None => default_start(inst.dim()),
    };
    inst.check_point(&x)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "x0".into() });
    }
    Ok(x)
}

fn projected_step(x: &[f64], w: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(w).map(|(xi, wi)| (xi - alpha * wi).max(0.0)).collect()
}

/// A step may raise the residual up to this multiple of the best one seen.
const GROWTH_ALLOWANCE: f64 = 10.0;
/// Accepted steps without a new best residual before the step ceiling halves.
const STALL_LIMIT: usize = 20;

/// Backtracking state of the projected iteration `x ← max(0, x - α w)`.
///
/// The natural residual is not monotone along projected steps, so a step is
/// rejected (and α halved) only when its residual exceeds
/// [`GROWTH_ALLOWANCE`] times the best residual so far or is not finite.
/// An accepted step doubles α again, up to a ceiling that starts at the
/// initial step and halves after [`STALL_LIMIT`] steps without a new best,
/// which breaks the cycles a too-long step falls into.
struct ProjectedSweep {
    alpha: f64,
    alpha_max: f64,
    alpha_min: f64,
    best: f64,
    stalled: usize,
}

impl ProjectedSweep {
    fn new(step: f64) -> Self {
        ProjectedSweep {
            alpha: step,
            alpha_max: step,
            alpha_min: step * 1e-15,
            best: f64::INFINITY,
            stalled: 0,
        }
    }

    /// Returns `None` if no finite step could be accepted.
    fn step(&mut self, inst: &TcpInstance, x: &[f64], res: f64) -> Option<(Vec<f64>, f64)> {
        let w = inst.w(x).ok()?;
        if res < self.best {
            self.best = res;
            self.stalled = 0;
        } else {
            self.stalled += 1;
            if self.stalled >= STALL_LIMIT {
                self.alpha_max *= 0.5;
                self.alpha = self.alpha.min(self.alpha_max);
                self.stalled = 0;
            }
        }
        while self.alpha >= self.alpha_min {
            let cand = projected_step(x, &w, self.alpha);
            let cand_res = residual(inst, &cand).unwrap_or(f64::NAN);
            if cand_res.is_finite() && cand_res <= GROWTH_ALLOWANCE * self.best {
                self.alpha = (2.0 * self.alpha).min(self.alpha_max);
                return Some((cand, cand_res));
            }
            self.alpha *= 0.5;
        }
        None
    }
}

/// Projected fixed-point iteration with residual-based step halving.
pub fn solve_fixed_point(
    inst: &TcpInstance,
    opts: &FixedPointOptions,
    x0: Option<&[f64]>,
) -> Result<TcpSolution> {
    validate(opts.tol, opts.step)?;
    let mut x = start_point(inst, x0)?;
    let mut res = residual(inst, &x)?;
    let mut sweep = ProjectedSweep::new(opts.step);
    for iter in 0..opts.max_iter {
        if res <= opts.tol {
            return TcpSolution::at(inst, x, iter, SolveStatus::Solved);
        }
        match sweep.step(inst, &x, res) {
            Some((next, next_res)) => {
                x = next;
                res = next_res;
            }
            None => return Ok(TcpSolution::diverged(inst, x, iter + 1)),
        }
    }
    let status = if res <= opts.tol {
        SolveStatus::Solved
    } else {
        SolveStatus::MaxIter
    };
    TcpSolution::at(inst, x, opts.max_iter, status)
}

const ARMIJO_SIGMA: f64 = 1e-4;
const MIN_LINE_STEP: f64 = 1e-10;
/// Newton steps allowed without halving the residual before escaping.
const NEWTON_STALL: usize = 5;
/// Projected sweeps spent per escape.
const ESCAPE_SWEEPS: usize = 2_000;

fn merit(inst: &TcpInstance, x: &[f64]) -> f64 {
    match inst.w(x) {
        Ok(w) => {
            let phi = min_map(x, &w);
            let v = 0.5 * phi.iter().map(|p| p * p).sum::<f64>();
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Semismooth Newton on `Φ(x) = min(x, w(x))` with Armijo damping.
///
/// Rows with `x_i <= w_i` take the identity row, the rest the Jacobian row of
/// `w`. A singular system or a failed line search falls back to one projected
/// sweep; more than `n` consecutive singular systems end in `Diverged`.
///
/// The merit `½‖Φ‖²` has stationary points that are not solutions. When
/// [`NEWTON_STALL`] steps pass without halving the residual, projected sweeps
/// run until it is halved (at most [`ESCAPE_SWEEPS`] of them) and Newton
/// resumes from there.
pub fn solve_newton(inst: &TcpInstance, opts: &NewtonOptions, x0: Option<&[f64]>) -> Result<TcpSolution> {
    validate(opts.tol, 1.0)?;
    let n = inst.dim();
    let mut x = start_point(inst, x0)?;
    let mut sweep = ProjectedSweep::new(1.0);
    let mut singular_streak = 0usize;
    let mut progress = f64::INFINITY;
    let mut stalled = 0usize;
    for iter in 0..opts.max_iter {
        let mut w = inst.w(&x)?;
        let mut phi = min_map(&x, &w);
        let mut res = inf_norm(&phi);
        if !res.is_finite() {
            return Ok(TcpSolution::diverged(inst, x, iter));
        }
        if res <= 0.5 * progress {
            progress = res;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled >= NEWTON_STALL {
            for _ in 0..ESCAPE_SWEEPS {
                match sweep.step(inst, &x, res) {
                    Some((next, next_res)) => {
                        x = next;
                        res = next_res;
                    }
                    None => return Ok(TcpSolution::diverged(inst, x, iter + 1)),
                }
                if res <= 0.5 * progress || res <= opts.tol {
                    break;
                }
            }
            progress = progress.min(res);
            stalled = 0;
            w = inst.w(&x)?;
            phi = min_map(&x, &w);
        }
        if res <= opts.tol {
            return TcpSolution::at(inst, x, iter, SolveStatus::Solved);
        }
        let jac = inst.tensor().jacobian(&x)?;
        let g = DMatrix::from_fn(n, n, |i, j| {
            if x[i] <= w[i] {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            } else {
                jac[(i, j)]
            }
        });
        let rhs = DVector::from_iterator(n, phi.iter().map(|p| -p));
        let direction = g
            .lu()
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()));
        let stepped = match direction {
            Some(d) => {
                singular_streak = 0;
                let theta = 0.5 * phi.iter().map(|p| p * p).sum::<f64>();
                let mut t = 1.0;
                let mut accepted = None;
                while t >= MIN_LINE_STEP {
                    let cand: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
                    if merit(inst, &cand) <= (1.0 - 2.0 * ARMIJO_SIGMA * t) * theta {
                        accepted = Some(cand);
                        break;
                    }
                    t *= 0.5;
                }
                accepted
            }
            None => {
                singular_streak += 1;
                if singular_streak > n {
                    return TcpSolution::at(inst, x, iter + 1, SolveStatus::Diverged);
                }
                None
            }
        };
        x = match stepped {
            Some(next) => next,
            None => match sweep.step(inst, &x, res) {
                Some((next, _)) => next,
                None => return Ok(TcpSolution::diverged(inst, x, iter + 1)),
            },
        };
    }
    let sol = TcpSolution::at(inst, x, opts.max_iter, SolveStatus::MaxIter)?;
    if sol.residual <= opts.tol {
        return Ok(TcpSolution {
            status: SolveStatus::Solved,
            ..sol
        });
    }
    Ok(sol)
}

/// Largest `n` allowed for the order-2 support enumeration (`2^n <= 4096`).
pub const MAX_SUPPORT_DIM: usize = 12;
/// Largest `n` allowed for the grid search on higher orders.
pub const MAX_GRID_DIM: usize = 3;
/// Residual a brute-force point must reach to be returned.
pub const BRUTE_FORCE_TOL: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 60;

/// Desk-scale exhaustive oracle.
///
/// Order 2: tries every support `S`, solving `M_SS x_S = -q_S`. Higher orders
/// (`n <= 3`): grid search on `[0, X]^n`, `X = 1 + n·max|q_i|^(1/(m-1))`,
/// zooming into the best cell until the residual reaches [`BRUTE_FORCE_TOL`].
pub fn brute_force_supports(inst: &TcpInstance, grid: usize) -> Result<Option<Vec<f64>>> {
    let n = inst.dim();
    if inst.q.iter().all(|v| *v >= 0.0) {
        return Ok(Some(vec![0.0; n]));
    }
    if inst.tensor.order() == 2 {
        if n > MAX_SUPPORT_DIM {
            return Err(Error::InvalidArgument(format!(
                "support enumeration limited to n <= {MAX_SUPPORT_DIM}, got {n}"
            )));
        }
        return enumerate_supports(inst);
    }
    if n > MAX_GRID_DIM {
        return Err(Error::InvalidArgument(format!(
            "grid search limited to n <= {MAX_GRID_DIM}, got {n}"
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points per axis".into()));
    }
    grid_search(inst, grid)
}

fn enumerate_supports(inst: &TcpInstance) -> Result<Option<Vec<f64>>> {
    let n = inst.dim();
    let m = inst.tensor.values();
    for mask in 0u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = support.len();
        let mut x = vec![0.0; n];
        if k > 0 {
            let a = DMatrix::from_fn(k, k, |r, c| m[support[r] * n + support[c]]);
            let b = DVector::from_iterator(k, support.iter().map(|&i| -inst.q[i]));
            let Some(sol) = a.lu().solve(&b) else {
                continue;
            };
            for (s, &i) in support.iter().enumerate() {
                x[i] = sol[s];
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if residual(inst, &x)? <= BRUTE_FORCE_TOL {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

fn grid_search(inst: &TcpInstance, grid: usize) -> Result<Option<Vec<f64>>> {
    let n = inst.dim();
    let root = 1.0 / (inst.tensor.order() - 1) as f64;
    let qmax = inst.q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let x_max = 1.0 + qmax.powf(root) * n as f64;
    // cells are ranked by ‖min(x, w)‖₂ so no coordinate hides behind the max
    let score = |x: &[f64]| -> f64 {
        inst.w(x)
            .map(|w| min_map(x, &w).iter().map(|v| v * v).sum::<f64>())
            .unwrap_or(f64::INFINITY)
    };
    let mut lo = vec![0.0; n];
    let mut hi = vec![x_max; n];
    let mut best = vec![0.0; n];
    let mut best_score = score(&best);
    for _ in 0..MAX_REFINEMENTS {
        let h: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / (grid - 1) as f64).collect();
        let mut point = vec![0.0; n];
        crate::tensor::for_each_index(n, grid, |_, idx| {
            for k in 0..n {
                point[k] = lo[k] + h[k] * idx[k] as f64;
            }
            let s = score(&point);
            if s < best_score {
                best_score = s;
                best.copy_from_slice(&point);
            }
        });
        if residual(inst, &best)? <= BRUTE_FORCE_TOL * 1e-2 || h.iter().all(|v| *v < 1e-15) {
            break;
        }
        for k in 0..n {
            lo[k] = (best[k] - 2.0 * h[k]).max(0.0);
            hi[k] = best[k] + 2.0 * h[k];
        }
    }
    Ok((residual(inst, &best)? <= BRUTE_FORCE_TOL).then_some(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_tensor;

    fn inst(t: Tensor, q: &[f64]) -> TcpInstance {
        TcpInstance::new(t, q.to_vec()).unwrap()
    }

    #[test]
    fn residual_examples() {
        let id = Tensor::identity(4, 2).unwrap();
        assert_eq!(residual(&inst(id.clone(), &[1.0, 1.0]), &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(residual(&inst(id, &[-1.0, -1.0]), &[1.0, 1.0]).unwrap(), 0.0);
        let ex = inst(example_tensor(), &[1.0; 4]);
        assert_eq!(residual(&ex, &[0.0; 4]).unwrap(), 0.0);
        assert!(residual(&ex, &[0.0; 3]).is_err());
        assert!(TcpInstance::new(example_tensor(), vec![1.0; 3]).is_err());
    }

    #[test]
    fn fixed_point_closed_form() {
        let p = inst(Tensor::identity(4, 2).unwrap(), &[-1.0, -1.0]);
        let s = solve_fixed_point(&p, &FixedPointOptions::default(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert!(s.residual <= 1e-8);
        assert!((s.x[0] - 1.0).abs() < 1e-6 && (s.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_nonnegative_q_from_zero() {
        let p = inst(example_tensor(), &[0.5, 0.0, 2.0, 1.0]);
        let s = solve_fixed_point(&p, &FixedPointOptions::default(), Some(&[0.0; 4])).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert_eq!(s.iterations, 0);
        assert_eq!(s.x, vec![0.0; 4]);
    }

    #[test]
    fn example_both_solvers_agree() {
        let p = inst(example_tensor(), &[-1.0; 4]);
        let a = solve_fixed_point(&p, &FixedPointOptions::default(), None).unwrap();
        let b = solve_newton(&p, &NewtonOptions::default(), None).unwrap();
        assert_eq!(a.status, SolveStatus::Solved, "{a:?}");
        assert_eq!(b.status, SolveStatus::Solved, "{b:?}");
        assert!(a.residual <= 1e-8 && b.residual <= 1e-8);
        let gap = a.x.iter().zip(&b.x).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(gap <= 1e-6, "solvers disagree by {gap}");
    }

    #[test]
    fn newton_lcp_identity() {
        let p = inst(Tensor::identity(2, 3).unwrap(), &[-1.0, 0.0, 2.0]);
        let s = solve_newton(&p, &NewtonOptions::default(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert!(s.iterations <= 3);
        assert_eq!(s.x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn newton_closed_form() {
        let p = inst(Tensor::identity(4, 2).unwrap(), &[-8.0, -1.0]);
        let s = solve_newton(&p, &NewtonOptions::default(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Solved);
        assert!((s.x[0] - 2.0).abs() < 1e-8 && (s.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn newton_on_singular_jacobian_still_solves() {
        // Jacobian of x^[3] vanishes at 0; the zero start needs the sweep fallback
        let p = inst(Tensor::identity(4, 2).unwrap(), &[-8.0, -1.0]);
        let s = solve_newton(&p, &NewtonOptions::default(), Some(&[0.0, 0.0])).unwrap();
        assert_eq!(s.status, SolveStatus::Solved, "{s:?}");
    }

    #[test]
    fn newton_diverges_without_solution() {
        // -x^3 - 1 >= 0 has no nonnegative solution
        let p = inst(Tensor::identity(4, 1).unwrap().map(|v| -v), &[-1.0]);
        let s = solve_newton(&p, &NewtonOptions { tol: 1e-8, max_iter: 50 }, None).unwrap();
        assert_ne!(s.status, SolveStatus::Solved);
    }

    #[test]
    fn brute_force_examples() {
        let p = inst(Tensor::identity(2, 3).unwrap(), &[-1.0, 0.0, 2.0]);
        assert_eq!(brute_force_supports(&p, 11).unwrap(), Some(vec![1.0, 0.0, 0.0]));
        let p = inst(example_tensor(), &[1.0, 0.0, 3.0, 2.0]);
        assert_eq!(brute_force_supports(&p, 11).unwrap(), Some(vec![0.0; 4]));
        let p = inst(Tensor::identity(4, 2).unwrap(), &[-8.0, -1.0]);
        let x = brute_force_supports(&p, 7).unwrap().unwrap();
        assert!((x[0] - 2.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn brute_force_size_guards() {
        let p = inst(example_tensor(), &[-1.0; 4]);
        assert!(brute_force_supports(&p, 11).is_err());
        let p = inst(Tensor::identity(2, 13).unwrap(), &[-1.0; 13]);
        assert!(brute_force_supports(&p, 11).is_err());
    }

    #[test]
    fn invalid_options() {
        let p = inst(example_tensor(), &[-1.0; 4]);
        let bad = FixedPointOptions {
            step: 0.0,
            ..Default::default()
        };
        assert!(solve_fixed_point(&p, &bad, None).is_err());
        let bad = NewtonOptions { tol: -1.0, max_iter: 5 };
        assert!(solve_newton(&p, &bad, None).is_err());
    }
}

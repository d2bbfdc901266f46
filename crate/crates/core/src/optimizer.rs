//! Search for the maximally violating qubit triple.
//!
//! With `B = diag(1, b)` and `A = [[a1, ξ], [ξ, a2]]`, the objective is the
//! smaller eigenvalue of `B² - A²` (more negative is a stronger violation).
//! Making both determinant constraints active (`a1·a2 = ξ²` and
//! `(1 - a1)(b - a2) = ξ²`) leaves the two free parameters `(a1, a2)`, which
//! [`grid_search`] scans and [`refine_local`] polishes. [`full_search`] scans
//! all four parameters independently to check that the best point really sits
//! on that boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{Hermitian2, QubitState};
use crate::scalar::Real;
use crate::witness::{violation_eigs_closed_form, WitnessTriple};

/// Lower/upper margin on `a1`, keeping `b = a2 / (1 - a1)` away from its pole.
pub const A1_MARGIN: f64 = 1e-6;
/// Outer sweep cap for [`refine_local`].
pub const MAX_SWEEPS: usize = 10_000;
/// Slack tolerance when deciding feasibility of a full-parameter point.
pub const FEASIBILITY_TOL: f64 = 1e-12;
const MIN_IMPROVEMENT: f64 = 1e-14;

/// Point of the boundary family: `ξ = √(a1·a2)`, `b = a2 / (1 - a1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedParams<T> {
    a1: T,
    a2: T,
}

impl<T: Real> ReducedParams<T> {
    pub fn new(a1: T, a2: T) -> Result<Self> {
        if !(a1 >= T::zero() && a1 < T::one()) {
            return Err(Error::Infeasible(format!("a1 = {} not in [0, 1)", a1.as_f64())));
        }
        if !(a2 >= T::zero() && a2 <= T::one() - a1) {
            return Err(Error::Infeasible(format!(
                "a2 = {} not in [0, 1 - a1] = [0, {}]",
                a2.as_f64(),
                (T::one() - a1).as_f64()
            )));
        }
        Ok(Self { a1, a2 })
    }

    pub fn a1(&self) -> T {
        self.a1
    }

    pub fn a2(&self) -> T {
        self.a2
    }

    pub fn b(&self) -> T {
        (self.a2 / (T::one() - self.a1)).min(T::one())
    }

    pub fn xi(&self) -> T {
        (self.a1 * self.a2).sqrt()
    }

    pub fn full(&self) -> FullParams<T> {
        FullParams::new(self.a1, self.a2, self.b(), self.xi())
    }
}

/// Unreduced parameters `(a1, a2, b, ξ)` with `ξ` canonicalized to `ξ >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FullParams<T> {
    pub a1: T,
    pub a2: T,
    pub b: T,
    pub xi: T,
}

impl<T: Real> FullParams<T> {
    pub fn new(a1: T, a2: T, b: T, xi: T) -> Self {
        Self { a1, a2, b, xi: xi.abs() }
    }

    /// Determinant margins of `A` and `B - A`: `(a1·a2 - ξ², (1 - a1)(b - a2) - ξ²)`.
    pub fn slacks(&self) -> (T, T) {
        let xi2 = self.xi * self.xi;
        (
            self.a1 * self.a2 - xi2,
            (T::one() - self.a1) * (self.b - self.a2) - xi2,
        )
    }

    /// Nonnegative diagonals and determinants of `A`, `B - A` and `I - B`.
    pub fn is_feasible(&self, tol: T) -> bool {
        let (zero, one) = (T::zero(), T::one());
        let (s1, s2) = self.slacks();
        self.b >= zero
            && self.b <= one
            && self.a1 >= zero
            && self.a1 <= one
            && self.a2 >= zero
            && self.b - self.a2 >= zero
            && s1 >= -tol
            && s2 >= -tol
    }

    /// Smaller eigenvalue of `B² - A²` in closed form.
    pub fn objective(&self) -> T {
        violation_eigs_closed_form(self.a1, self.a2, self.b, self.xi).0
    }

    pub fn observables(&self) -> (Hermitian2<T>, Hermitian2<T>) {
        let a = Hermitian2::real(self.a1, self.a2, self.xi).expect("finite parameters");
        let b = Hermitian2::diag(T::one(), self.b).expect("finite parameters");
        (a, b)
    }

    /// Triple at these parameters with the optimal (lower-eigenvector) state.
    pub fn triple(&self) -> WitnessTriple<T> {
        let (a, b) = self.observables();
        let t = WitnessTriple::new(a, b, QubitState::pure_real(T::one(), T::zero()).expect("basis state"));
        let state = t.optimal_state();
        t.with_state(state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum<T> {
    pub params: FullParams<T>,
    pub objective: T,
    pub triple: WitnessTriple<T>,
    pub constraint_slacks: (T, T),
    pub evaluations: u64,
}

impl<T: Real> Optimum<T> {
    fn at(params: FullParams<T>, evaluations: u64) -> Self {
        Self {
            params,
            objective: params.objective(),
            triple: params.triple(),
            constraint_slacks: params.slacks(),
            evaluations,
        }
    }

    /// Violation strength `|objective|`.
    pub fn violation(&self) -> T {
        self.objective.abs()
    }
}

pub fn build_reduced_triple<T: Real>(p: &ReducedParams<T>) -> WitnessTriple<T> {
    p.full().triple()
}

/// Lower eigenvalue of `B² - A²` on the boundary family.
pub fn objective<T: Real>(p: &ReducedParams<T>) -> T {
    p.full().objective()
}

fn reduced_raw<T: Real>(a1: T, a2: T) -> T {
    let b = (a2 / (T::one() - a1)).min(T::one());
    violation_eigs_closed_form(a1, a2, b, (a1 * a2).sqrt()).0
}

fn idx<T: Real>(i: usize) -> T {
    T::from_usize(i).expect("grid index representable")
}

/// Exhaustive scan of `a1 ∈ [ε, 1 - ε]`, `a2 ∈ [0, 1 - a1]` at spacing `step`.
///
/// Ties resolve to the first point in row-major order (`a1` outer).
pub fn grid_search<T: Real>(step: T) -> Result<Optimum<T>> {
    if !(step > T::zero() && step <= T::lit(0.01)) {
        return Err(Error::param("step", step.as_f64(), "0 < step <= 0.01"));
    }
    let lo = T::lit(A1_MARGIN);
    let hi = T::one() - lo;
    let rows = ((hi - lo) / step).ceil().to_usize().expect("finite row count");

    let per_row: Vec<(T, T, T, u64)> = (0..=rows)
        .into_par_iter()
        .map(|i| {
            let a1 = (lo + step * idx(i)).min(hi);
            let a2_max = T::one() - a1;
            let cols = (a2_max / step).floor().to_usize().unwrap_or(0);
            let mut best = (T::infinity(), a1, T::zero());
            for j in 0..=cols {
                let a2 = (step * idx(j)).min(a2_max);
                let f = reduced_raw(a1, a2);
                if f < best.0 {
                    best = (f, a1, a2);
                }
            }
            (best.0, best.1, best.2, cols as u64 + 1)
        })
        .collect();

    let evaluations = per_row.iter().map(|r| r.3).sum();
    let (_, a1, a2, _) = per_row
        .into_iter()
        .fold((T::infinity(), T::zero(), T::zero(), 0), |acc, r| if r.0 < acc.0 { r } else { acc });
    Ok(Optimum::at(ReducedParams::new(a1, a2)?.full(), evaluations))
}

/// Golden-section minimum of `f` on `[a, b]`; returns `(x, f(x), evaluations)`.
fn golden_section<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T, u64) {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    while (b - a) > tol && evals < 400 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 <= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Alternating golden-section descent on `a1` and `a2` along the boundary
/// family, until a full sweep moves both parameters by less than `tol`.
pub fn refine_local<T: Real>(start: ReducedParams<T>, tol: T) -> Result<Optimum<T>> {
    refine_local_traced(start, tol).map(|(opt, _)| opt)
}

/// [`refine_local`] plus the objective value after every sweep.
pub fn refine_local_traced<T: Real>(start: ReducedParams<T>, tol: T) -> Result<(Optimum<T>, Vec<T>)> {
    if tol.is_nan() || tol <= T::zero() {
        return Err(Error::param("tol", tol.as_f64(), "tol > 0"));
    }
    let one = T::one();
    let margin = T::lit(A1_MARGIN);
    let line_tol = (tol * T::lit(0.1)).max(T::epsilon() * T::lit(16.0));
    let min_gain = T::lit(MIN_IMPROVEMENT).max(T::epsilon() * T::lit(4.0));

    let (mut a1, mut a2) = (start.a1, start.a2);
    let mut f = reduced_raw(a1, a2);
    let mut evaluations = 1u64;
    let mut history = vec![f];

    for _ in 0..MAX_SWEEPS {
        let (prev1, prev2) = (a1, a2);

        let hi1 = (one - a2).min(one - margin);
        let (x, fx, n) = golden_section(|x| reduced_raw(x, a2), T::zero(), hi1, line_tol);
        evaluations += n;
        if fx < f - min_gain {
            a1 = x;
            f = fx;
        }

        let (y, fy, n) = golden_section(|y| reduced_raw(a1, y), T::zero(), one - a1, line_tol);
        evaluations += n;
        if fy < f - min_gain {
            a2 = y;
            f = fy;
        }

        history.push(f);
        if (a1 - prev1).abs().max((a2 - prev2).abs()) < tol {
            let params = ReducedParams::new(a1, a2)?;
            return Ok((Optimum::at(params.full(), evaluations), history));
        }
    }
    Err(Error::IterationCap {
        sweeps: MAX_SWEEPS,
        a1: a1.as_f64(),
        a2: a2.as_f64(),
        objective: f.as_f64(),
    })
}

/// Four-parameter scan of the feasible set at spacing `step`.
pub fn full_search<T: Real>(step: T) -> Result<Optimum<T>> {
    scan_full(step, None)
}

/// [`full_search`] with `b` pinned to a single value.
pub fn full_search_fixed_b<T: Real>(step: T, b: T) -> Result<Optimum<T>> {
    if !(b >= T::zero() && b <= T::one()) {
        return Err(Error::param("b", b.as_f64(), "[0, 1]"));
    }
    scan_full(step, Some(b))
}

fn scan_full<T: Real>(step: T, fixed_b: Option<T>) -> Result<Optimum<T>> {
    if !(step > T::zero() && step <= T::lit(0.05)) {
        return Err(Error::param("step", step.as_f64(), "0 < step <= 0.05"));
    }
    let one = T::one();
    let tol = T::lit(FEASIBILITY_TOL);
    let n = (one / step + T::lit(1e-9)).floor().to_usize().expect("finite grid");
    let mut axis: Vec<T> = (0..=n).map(|k| step * idx(k)).collect();
    if *axis.last().expect("nonempty") < one - tol {
        axis.push(one);
    }
    let b_axis = fixed_b.map(|b| vec![b]).unwrap_or_else(|| axis.clone());

    let per_a1: Vec<(Option<FullParams<T>>, T, u64)> = axis
        .par_iter()
        .map(|&a1| {
            let mut best: Option<FullParams<T>> = None;
            let mut best_f = T::infinity();
            let mut evals = 0u64;
            for &a2 in &axis {
                for &b in b_axis.iter().filter(|&&b| b >= a2) {
                    let cap = (a1 * a2).min((one - a1) * (b - a2));
                    for &xi in axis.iter().take_while(|&&xi| xi * xi <= cap + tol) {
                        let p = FullParams::new(a1, a2, b, xi);
                        if !p.is_feasible(tol) {
                            continue;
                        }
                        evals += 1;
                        let f = p.objective();
                        if f < best_f {
                            best_f = f;
                            best = Some(p);
                        }
                    }
                }
            }
            (best, best_f, evals)
        })
        .collect();

    let evaluations = per_a1.iter().map(|r| r.2).sum();
    let best = per_a1
        .into_iter()
        .fold((None, T::infinity()), |acc, (p, f, _)| if f < acc.1 { (p, f) } else { acc })
        .0
        .ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    Ok(Optimum::at(best, evaluations))
}

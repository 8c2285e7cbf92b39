//! Linear programs and a bounded-variable revised simplex solver.
//!
//! The solver keeps a dense explicit basis inverse, which is adequate for
//! the few hundred rows a planning window produces. Rows are equilibrated
//! by their largest coefficient. Phase 1 minimises the sum of artificial
//! variables; phase 2 optimises the user objective from the phase-1 basis.
//! Pricing is Dantzig's rule, falling back to Bland's rule after a run of
//! degenerate pivots so the method cannot cycle.

// Row loops index the basis and the column together.
#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub label: String,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Violation divided by `max(1, |rhs|, max |coeff|)`.
    pub fn relative_violation(&self, x: &[f64]) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .fold(self.rhs.abs().max(1.0), |m, &(_, a)| m.max(a.abs()));
        self.violation(x) / scale
    }
}

/// `min c^T x` subject to linear rows and `lower <= x <= upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        label: impl Into<String>,
    ) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            sense,
            rhs,
            label: label.into(),
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(domain("objective and bound vectors differ in length"));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(domain(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                return Err(domain(format!(
                    "variable {j} is free; free variables are not supported"
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(domain(format!("variable {j} has a non-finite cost")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(domain(format!("row {i} has a non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(domain(format!("row {i} references variable {j} with coefficient {a}")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest relative violation over rows and bounds, with the index of
    /// the offending row (`None` for a bound).
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<usize>) {
        let mut worst = (0.0, None);
        for (j, &v) in x.iter().enumerate() {
            let e = (self.lower[j] - v).max(v - self.upper[j]).max(0.0);
            if e > worst.0 {
                worst = (e, None);
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            let e = row.relative_violation(x);
            if e > worst.0 {
                worst = (e, Some(i));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; for an infeasible problem, the phase-1 end point.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// For infeasible problems: the row with the largest remaining
    /// violation and that violation.
    pub binding: Option<(usize, f64)>,
}

impl LpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Stop after phase 1 (a feasibility check).
    pub feasibility_only: bool,
    /// Iteration cap; 0 selects `50 * (rows + columns)`.
    pub max_iterations: usize,
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(p, SolveOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: SolveOptions) -> Result<LpSolution> {
    p.validate()?;
    let mut s = Simplex::new(p);
    let cap = if opts.max_iterations == 0 {
        50 * (s.m + s.ncols) + 1000
    } else {
        opts.max_iterations
    };
    s.run_phase(Phase::One, cap)?;
    let infeas = s.artificial_sum();
    if infeas > FEAS_TOL * (1.0 + s.rhs_norm) {
        let x = s.structural_values();
        let binding = s.worst_artificial();
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: p.objective_value(&x),
            x,
            iterations: s.iterations,
            binding,
        });
    }
    if !opts.feasibility_only {
        s.run_phase(Phase::Two, cap)?;
    }
    let mut x = s.structural_values();
    // Snap to bounds to remove round-off.
    for (j, v) in x.iter_mut().enumerate() {
        *v = v.clamp(p.lower[j], p.upper[j]);
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: p.objective_value(&x),
        x,
        iterations: s.iterations,
        binding: None,
    })
}

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    /// Slack of row `i`.
    Logical(usize),
    /// Artificial of row `i` with sign.
    Artificial(usize, i8),
}

struct Simplex {
    m: usize,
    n: usize,
    ncols: usize,
    kinds: Vec<Kind>,
    /// CSC storage of the scaled structural columns.
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    row_scale: Vec<f64>,
    b: Vec<f64>,
    rhs_norm: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    user_cost: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    /// Column in basis position `r`.
    basis: Vec<usize>,
    /// Row-major m x m.
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl Simplex {
    fn new(p: &LpProblem) -> Simplex {
        let n = p.num_variables();
        let m = p.constraints.len();
        let mut row_scale = vec![1.0; m];
        for (i, row) in p.constraints.iter().enumerate() {
            let mx = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            if mx > 0.0 {
                row_scale[i] = 1.0 / mx;
            }
        }
        // Build CSC, merging duplicate entries.
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in p.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    per_col[j].push((i, a * row_scale[i]));
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_rows = Vec::new();
        let mut col_vals = Vec::new();
        for col in &mut per_col {
            col.sort_by_key(|e| e.0);
            col_start.push(col_rows.len());
            let mut k = 0;
            while k < col.len() {
                let (i, mut v) = col[k];
                while k + 1 < col.len() && col[k + 1].0 == i {
                    k += 1;
                    v += col[k].1;
                }
                col_rows.push(i);
                col_vals.push(v);
                k += 1;
            }
        }
        col_start.push(col_rows.len());

        let b: Vec<f64> = p.constraints.iter().zip(&row_scale).map(|(r, s)| r.rhs * s).collect();
        let rhs_norm = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        let mut kinds = vec![Kind::Structural; n];
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        let mut user_cost = p.objective.clone();
        let mut x = Vec::with_capacity(n + 2 * m);
        let mut status = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            if lo[j].is_finite() {
                x.push(lo[j]);
                status.push(Status::Lower);
            } else {
                x.push(hi[j]);
                status.push(Status::Upper);
            }
        }
        // Row activities at the starting point.
        let mut act = vec![0.0; m];
        for j in 0..n {
            if x[j] != 0.0 {
                for k in col_start[j]..col_start[j + 1] {
                    act[col_rows[k]] += col_vals[k] * x[j];
                }
            }
        }
        let mut basis = vec![usize::MAX; m];
        let mut diag = vec![1.0; m];
        for i in 0..m {
            let (slo, shi) = match p.constraints[i].sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            let r = b[i] - act[i];
            let col = kinds.len();
            kinds.push(Kind::Logical(i));
            lo.push(slo);
            hi.push(shi);
            user_cost.push(0.0);
            if r >= slo - FEAS_TOL && r <= shi + FEAS_TOL {
                x.push(r);
                status.push(Status::Basic);
                basis[i] = col;
            } else {
                let (bound, st) = if r < slo {
                    (slo, Status::Lower)
                } else {
                    (shi, Status::Upper)
                };
                x.push(bound);
                status.push(st);
                let resid = r - bound;
                let sign: i8 = if resid >= 0.0 { 1 } else { -1 };
                let acol = kinds.len();
                kinds.push(Kind::Artificial(i, sign));
                lo.push(0.0);
                hi.push(f64::INFINITY);
                user_cost.push(0.0);
                x.push(resid.abs());
                status.push(Status::Basic);
                basis[i] = acol;
                diag[i] = sign as f64;
            }
        }
        let ncols = kinds.len();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0 / diag[i];
        }
        Simplex {
            m,
            n,
            ncols,
            kinds,
            col_start,
            col_rows,
            col_vals,
            row_scale,
            b,
            rhs_norm,
            lo,
            hi,
            user_cost,
            cost: vec![0.0; ncols],
            x,
            status,
            basis,
            binv,
            iterations: 0,
            since_refactor: 0,
        }
    }

    #[inline]
    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match self.kinds[j] {
            Kind::Structural => {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    f(self.col_rows[k], self.col_vals[k]);
                }
            }
            Kind::Logical(i) => f(i, 1.0),
            Kind::Artificial(i, s) => f(i, s as f64),
        }
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.ncols)
            .filter(|&j| matches!(self.kinds[j], Kind::Artificial(..)))
            .map(|j| self.x[j].max(0.0))
            .sum()
    }

    fn worst_artificial(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if let Kind::Artificial(i, _) = self.kinds[j] {
                let v = self.x[j] / self.row_scale[i];
                if v > FEAS_TOL && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
        }
        best
    }

    fn structural_values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    fn set_phase(&mut self, phase: Phase) {
        for j in 0..self.ncols {
            self.cost[j] = match (phase, self.kinds[j]) {
                (Phase::One, Kind::Artificial(..)) => 1.0,
                (Phase::One, _) => 0.0,
                (Phase::Two, _) => self.user_cost[j],
            };
            if phase == Phase::Two {
                if let Kind::Artificial(..) = self.kinds[j] {
                    self.hi[j] = 0.0;
                    if self.status[j] != Status::Basic {
                        self.x[j] = 0.0;
                    }
                }
            }
        }
    }

    /// y^T = c_B^T B^{-1}.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let c = self.cost[self.basis[r]];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yk, bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        self.for_column(j, |i, a| d -= y[i] * a);
        d
    }

    /// alpha = B^{-1} a_j.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        self.for_column(j, |k, a| {
            for (r, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[r * m + k] * a;
            }
        });
        alpha
    }

    fn choose_entering(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            let st = self.status[j];
            if st == Status::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(j, y);
            let eligible = match st {
                Status::Lower => d < -DUAL_TOL,
                Status::Upper => d > DUAL_TOL,
                Status::Basic => false,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.is_none_or(|(_, bd)| d.abs() > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan on [B | I].
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.for_column(j, |i, v| a[i * m + r] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(domain("simplex basis became singular"));
            }
            if piv != c {
                for k in 0..m {
                    a.swap(c * m + k, piv * m + k);
                    inv.swap(c * m + k, piv * m + k);
                }
            }
            let p = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= p;
                inv[c * m + k] /= p;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basics();
        Ok(())
    }

    /// x_B = B^{-1} (b - N x_N).
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                let mut upd = Vec::new();
                self.for_column(j, |i, a| upd.push((i, a)));
                for (i, a) in upd {
                    rhs[i] -= a * xj;
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[r]] = v;
        }
    }

    fn run_phase(&mut self, phase: Phase, cap: usize) -> Result<()> {
        self.set_phase(phase);
        let m = self.m;
        let mut degenerate = 0usize;
        let mut verified = false;
        loop {
            if self.iterations >= cap {
                return Err(Error::IterationLimit(cap));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((q, d)) = self.choose_entering(&y, bland) else {
                // Confirm optimality on a fresh factorisation once.
                if !verified && self.since_refactor > 0 {
                    self.refactor()?;
                    verified = true;
                    continue;
                }
                return Ok(());
            };
            verified = false;
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            for r in 0..m {
                let a = dir * alpha[r];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[r];
                let t = if a > 0.0 {
                    (self.x[j] - self.lo[j] + FEAS_TOL) / a
                } else {
                    (self.hi[j] - self.x[j] + FEAS_TOL) / -a
                };
                theta_max = theta_max.min(t);
            }
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            let mut best_abs = 0.0;
            for r in 0..m {
                let a = dir * alpha[r];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[r];
                let t = if a > 0.0 {
                    (self.x[j] - self.lo[j]) / a
                } else {
                    (self.hi[j] - self.x[j]) / -a
                };
                if t.is_finite() && t <= theta_max {
                    let better = if bland {
                        leave.is_none_or(|l| j < self.basis[l])
                    } else {
                        a.abs() > best_abs
                    };
                    if better {
                        best_abs = a.abs();
                        leave = Some(r);
                        theta = t.max(0.0);
                    }
                }
            }
            let span = self.hi[q] - self.lo[q];
            self.iterations += 1;
            if span.is_finite() && span <= theta {
                // Bound flip, no basis change.
                theta = span;
                for r in 0..m {
                    let j = self.basis[r];
                    self.x[j] -= theta * dir * alpha[r];
                }
                if dir > 0.0 {
                    self.x[q] = self.hi[q];
                    self.status[q] = Status::Upper;
                } else {
                    self.x[q] = self.lo[q];
                    self.status[q] = Status::Lower;
                }
                degenerate = 0;
                continue;
            }
            let Some(r) = leave else {
                return Err(Error::Unbounded);
            };
            if theta <= FEAS_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for i in 0..m {
                let j = self.basis[i];
                self.x[j] -= theta * dir * alpha[i];
            }
            self.x[q] += dir * theta;
            let out = self.basis[r];
            let a = dir * alpha[r];
            if a > 0.0 {
                self.x[out] = self.lo[out];
                self.status[out] = Status::Lower;
            } else {
                self.x[out] = self.hi[out];
                self.status[out] = Status::Upper;
            }
            if let Kind::Artificial(..) = self.kinds[out] {
                // Artificials never re-enter.
                self.hi[out] = 0.0;
                self.x[out] = 0.0;
                self.status[out] = Status::Lower;
            }
            self.status[q] = Status::Basic;
            self.basis[r] = q;
            self.pivot(r, &alpha);
        }
    }

    /// Updates B^{-1} after column `alpha` replaces basis position `r`.
    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (i, row) in before.chunks_exact_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
            }
        }
        for (i, row) in after.chunks_exact_mut(m).enumerate() {
            let f = alpha[r + 1 + i];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
            }
        }
        self.since_refactor += 1;
    }
}

//! Self-contained dense linear-program solver: two-phase revised simplex on
//! the bounded-variable form with an explicitly maintained basis inverse.
//!
//! Minimizes `c·z` subject to `G z <= h` and `lb <= z <= ub` (bounds may use
//! ±inf sentinels). Per-room scheduling programs stay small (a few hundred
//! rows), so a dense exact-vertex method is the simple, auditable choice.
//! Pivot rules are deterministic: Dantzig pricing with smallest-index
//! tie-breaking, Bland's rule engaged after a stall of 50 degenerate pivots.

use std::io::Write;

use crate::error::{Error, Result};

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// An inequality-constrained LP with per-variable bounds.
#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Cost vector (minimized).
    pub c: Vec<f64>,
    /// Constraint rows, each a sparse list of (column, coefficient).
    rows: Vec<Vec<(u32, f64)>>,
    /// Right-hand sides for `G z <= h`.
    pub h: Vec<f64>,
    /// Lower variable bounds; `-inf` marks an unbounded-below variable.
    pub lb: Vec<f64>,
    /// Upper variable bounds; `+inf` marks an unbounded-above variable.
    pub ub: Vec<f64>,
}

impl LpProblem {
    pub fn new(c: Vec<f64>, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        LpProblem {
            c,
            rows: Vec::new(),
            h: Vec::new(),
            lb,
            ub,
        }
    }

    /// Append the constraint `sum coeffs_j z_j <= rhs`.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        self.rows.push(
            coeffs
                .iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|(j, v)| (*j as u32, *v))
                .collect(),
        );
        self.h.push(rhs);
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if n == 0 {
            return Err(Error::invalid("lp has no variables"));
        }
        if self.lb.len() != n || self.ub.len() != n {
            return Err(Error::dims("lp bounds must match variable count"));
        }
        if self.h.len() != self.rows.len() {
            return Err(Error::dims("lp rhs must match row count"));
        }
        for j in 0..n {
            if !self.c[j].is_finite() {
                return Err(Error::NonFinite(format!("objective coefficient {j}")));
            }
            if self.lb[j].is_nan() || self.ub[j].is_nan() {
                return Err(Error::NonFinite(format!("bounds of variable {j}")));
            }
            if self.lb[j] > self.ub[j] {
                return Err(Error::invalid(format!("variable {j} has lb > ub")));
            }
            if self.lb[j] == f64::INFINITY || self.ub[j] == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("variable {j} has an empty bound interval")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !self.h[i].is_finite() {
                return Err(Error::NonFinite(format!("rhs of row {i}")));
            }
            for (j, v) in row {
                if *j as usize >= n {
                    return Err(Error::dims(format!("row {i} references variable {j}")));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("coefficient in row {i}")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `z`, for post-hoc audits.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, rhs) in self.rows.iter().zip(&self.h) {
            let lhs: f64 = row.iter().map(|(j, v)| v * z[*j as usize]).sum();
            worst = worst.max(lhs - rhs);
        }
        for j in 0..self.n_vars() {
            if self.lb[j].is_finite() {
                worst = worst.max(self.lb[j] - z[j]);
            }
            if self.ub[j].is_finite() {
                worst = worst.max(z[j] - self.ub[j]);
            }
        }
        worst
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.c.iter().zip(z).map(|(c, z)| c * z).sum()
    }

    /// Plain-text dump for cross-checking in external tools: objective row,
    /// then constraint rows, then bounds. See the README for the format.
    pub fn dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "lp vars {} rows {}", self.n_vars(), self.n_rows())?;
        write!(w, "min")?;
        for c in &self.c {
            write!(w, " {c:.17e}")?;
        }
        writeln!(w)?;
        for (row, rhs) in self.rows.iter().zip(&self.h) {
            write!(w, "row <= {rhs:.17e} :")?;
            for (j, v) in row {
                write!(w, " {j}:{v:.17e}")?;
            }
            writeln!(w)?;
        }
        for j in 0..self.n_vars() {
            writeln!(w, "bound {} {:.17e} {:.17e}", j, self.lb[j], self.ub[j])?;
        }
        Ok(())
    }
}

/// Result of a solve.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status == Optimal`.
    pub z: Vec<f64>,
    /// Objective value; NaN unless `status == Optimal`.
    pub objective: f64,
    pub iterations: usize,
    /// Violation of the original rows and bounds at `z`, re-checked
    /// independently of the solver internals.
    pub max_constraint_violation: f64,
    /// Phase-1 optimum when the problem is infeasible.
    pub phase1_infeasibility: Option<f64>,
    /// Index of the variable driving an unbounded ray.
    pub unbounded_var: Option<usize>,
}

const PIVOT_EPS: f64 = 1e-10;
const RATIO_TIE_EPS: f64 = 1e-12;
const DEGENERATE_STEP: f64 = 1e-11;
const STALL_THRESHOLD: usize = 50;
const REFACTOR_INTERVAL: usize = 200;
const MAX_ITER_FACTOR: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Basic,
    Lower,
    Upper,
    /// Nonbasic with both bounds infinite, resting at zero.
    Free,
}

/// Reference to a column of the constraint matrix.
enum ColumnRef<'a> {
    Sparse(&'a [(u32, f64)]),
    Unit(usize, f64),
}

enum StepOutcome {
    Optimal,
    Unbounded(usize),
    Progress,
}

struct Simplex {
    m: usize,
    n_struct: usize,
    /// Variables `n_struct..n_slack_end` are row slacks.
    n_slack_end: usize,
    /// Total variable count including any artificials.
    n_total: usize,
    /// Structural columns only; slack and artificial columns are implicit.
    cols: Vec<Vec<(u32, f64)>>,
    h: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    loc: Vec<Loc>,
    basis: Vec<u32>,
    x_basic: Vec<f64>,
    c_basic: Vec<f64>,
    /// Basis inverse, column-major: entry (row r, col c) at `binv[c*m + r]`.
    binv: Vec<f64>,
    /// Row of each artificial variable, parallel to vars >= n_slack_end.
    art_rows: Vec<usize>,
    iterations: usize,
    degenerate_streak: usize,
    pivots_since_refactor: usize,
    // Scratch buffers.
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Simplex {
    fn new(p: &LpProblem) -> Simplex {
        let m = p.n_rows();
        let n = p.n_vars();
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in p.rows.iter().enumerate() {
            for (j, v) in row {
                cols[*j as usize].push((i as u32, *v));
            }
        }
        let mut lb = p.lb.clone();
        let mut ub = p.ub.clone();
        lb.extend(std::iter::repeat(0.0).take(m));
        ub.extend(std::iter::repeat(f64::INFINITY).take(m));
        let mut loc = Vec::with_capacity(n + m);
        for j in 0..n {
            loc.push(if p.lb[j].is_finite() {
                Loc::Lower
            } else if p.ub[j].is_finite() {
                Loc::Upper
            } else {
                Loc::Free
            });
        }
        loc.extend(std::iter::repeat(Loc::Basic).take(m));
        let basis: Vec<u32> = (n..n + m).map(|v| v as u32).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut s = Simplex {
            m,
            n_struct: n,
            n_slack_end: n + m,
            n_total: n + m,
            cols,
            h: p.h.clone(),
            lb,
            ub,
            cost: vec![0.0; n + m],
            loc,
            basis,
            x_basic: vec![0.0; m],
            c_basic: vec![0.0; m],
            binv,
            art_rows: Vec::new(),
            iterations: 0,
            degenerate_streak: 0,
            pivots_since_refactor: 0,
            y: vec![0.0; m],
            w: vec![0.0; m],
        };
        s.recompute_basics();
        s
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.loc[j] {
            Loc::Lower => self.lb[j],
            Loc::Upper => self.ub[j],
            Loc::Free => 0.0,
            Loc::Basic => unreachable!("basic variable has no resting value"),
        }
    }

    fn column(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n_struct {
            ColumnRef::Sparse(&self.cols[j])
        } else if j < self.n_slack_end {
            ColumnRef::Unit(j - self.n_struct, 1.0)
        } else {
            ColumnRef::Unit(self.art_rows[j - self.n_slack_end], -1.0)
        }
    }

    /// Cover rows whose slack starts below zero with artificial variables:
    /// the slack moves out of the basis and an artificial with coefficient
    /// -1 takes its place at a positive value.
    fn install_artificials(&mut self, rows: &[usize]) {
        for &r in rows {
            let art = self.n_total;
            self.art_rows.push(r);
            self.lb.push(0.0);
            self.ub.push(f64::INFINITY);
            self.cost.push(0.0);
            self.loc.push(Loc::Basic);
            self.n_total += 1;

            let slack = self.basis[r] as usize;
            debug_assert!(slack >= self.n_struct && slack < self.n_slack_end);
            self.loc[slack] = Loc::Lower;
            self.basis[r] = art as u32;
            // Basis column r changed from +e_r to -e_r.
            let m = self.m;
            self.binv[r * m + r] = -1.0;
            self.x_basic[r] = -self.x_basic[r];
        }
    }

    /// Sum of artificial-variable values (the phase-1 objective).
    fn phase1_value(&self) -> f64 {
        let mut total = 0.0;
        for (r, var) in self.basis.iter().enumerate() {
            if *var as usize >= self.n_slack_end {
                total += self.x_basic[r].max(0.0);
            }
        }
        total
    }

    /// Prevent artificials from ever re-entering once phase 1 is done.
    fn lock_artificials(&mut self) {
        for j in self.n_slack_end..self.n_total {
            self.ub[j] = 0.0;
        }
    }

    /// x_B = Binv (h - N x_N) from scratch.
    fn recompute_basics(&mut self) {
        let mut rhs = self.h.clone();
        for j in 0..self.n_total {
            if self.loc[j] == Loc::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v == 0.0 {
                continue;
            }
            match self.column(j) {
                ColumnRef::Sparse(col) => {
                    for (i, a) in col {
                        rhs[*i as usize] -= a * v;
                    }
                }
                ColumnRef::Unit(i, a) => rhs[i] -= a * v,
            }
        }
        let m = self.m;
        for r in 0..m {
            self.x_basic[r] = 0.0;
        }
        for (c, val) in rhs.iter().enumerate() {
            if *val == 0.0 {
                continue;
            }
            let col = &self.binv[c * m..(c + 1) * m];
            for r in 0..m {
                self.x_basic[r] += val * col[r];
            }
        }
        for r in 0..m {
            self.c_basic[r] = self.cost[self.basis[r] as usize];
        }
    }

    /// y^T = c_B^T B^{-1}.
    fn btran(&mut self) {
        let m = self.m;
        for j in 0..m {
            let col = &self.binv[j * m..(j + 1) * m];
            let mut acc = 0.0;
            for r in 0..m {
                acc += self.c_basic[r] * col[r];
            }
            self.y[j] = acc;
        }
    }

    /// w = B^{-1} a_j.
    fn ftran(&mut self, j: usize) {
        let m = self.m;
        if j < self.n_struct {
            let Simplex { cols, binv, w, .. } = self;
            for wr in w.iter_mut() {
                *wr = 0.0;
            }
            for (i, a) in &cols[j] {
                let bcol = &binv[(*i as usize) * m..(*i as usize + 1) * m];
                let a = *a;
                for r in 0..m {
                    w[r] += a * bcol[r];
                }
            }
        } else {
            let (i, a) = match self.column(j) {
                ColumnRef::Unit(i, a) => (i, a),
                ColumnRef::Sparse(_) => unreachable!(),
            };
            let Simplex { binv, w, .. } = self;
            let bcol = &binv[i * m..(i + 1) * m];
            for r in 0..m {
                w[r] = a * bcol[r];
            }
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        match self.column(j) {
            ColumnRef::Sparse(col) => {
                let mut acc = self.cost[j];
                for (i, a) in col {
                    acc -= self.y[*i as usize] * a;
                }
                acc
            }
            ColumnRef::Unit(i, a) => self.cost[j] - self.y[i] * a,
        }
    }

    fn step(&mut self, tol_opt: f64) -> Result<StepOutcome> {
        self.btran();
        let bland = self.degenerate_streak >= STALL_THRESHOLD;
        let mut entering: Option<(usize, f64, f64)> = None; // (var, |reduced cost|, direction)
        for j in 0..self.n_total {
            if self.loc[j] == Loc::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.reduced_cost(j);
            let dir = match self.loc[j] {
                Loc::Lower if d < -tol_opt => 1.0,
                Loc::Upper if d > tol_opt => -1.0,
                Loc::Free if d.abs() > tol_opt => -d.signum(),
                _ => continue,
            };
            if bland {
                entering = Some((j, d.abs(), dir));
                break;
            }
            // Dantzig with smallest-index tie-breaking: strictly larger
            // violation required to displace an earlier candidate.
            if entering.map_or(true, |(_, best, _)| d.abs() > best) {
                entering = Some((j, d.abs(), dir));
            }
        }
        let Some((q, _, dir)) = entering else {
            return Ok(StepOutcome::Optimal);
        };

        self.ftran(q);

        // Ratio test, pass 1: the smallest step at which a basic variable
        // hits a bound. The entering variable's own span competes as a
        // bound-flip candidate.
        let span = self.ub[q] - self.lb[q];
        let mut t_min = if span.is_finite() { span } else { f64::INFINITY };
        for r in 0..self.m {
            let rate = -dir * self.w[r];
            if rate.abs() <= PIVOT_EPS {
                continue;
            }
            let bvar = self.basis[r] as usize;
            let limit = if rate > 0.0 { self.ub[bvar] } else { self.lb[bvar] };
            if !limit.is_finite() {
                continue;
            }
            let t = ((limit - self.x_basic[r]) / rate).max(0.0);
            if t < t_min {
                t_min = t;
            }
        }
        if !t_min.is_finite() {
            return Ok(StepOutcome::Unbounded(q));
        }

        // Pass 2: among rows blocking at (near) the minimum step, pick the
        // leaving row: Bland mode takes the smallest leaving-variable index,
        // otherwise the largest pivot magnitude with row index as the final
        // tie-break.
        let mut leaving: Option<(usize, bool)> = None;
        let mut leaving_piv = 0.0_f64;
        for r in 0..self.m {
            let rate = -dir * self.w[r];
            if rate.abs() <= PIVOT_EPS {
                continue;
            }
            let bvar = self.basis[r] as usize;
            let (limit, to_upper) = if rate > 0.0 {
                (self.ub[bvar], true)
            } else {
                (self.lb[bvar], false)
            };
            if !limit.is_finite() {
                continue;
            }
            let t = ((limit - self.x_basic[r]) / rate).max(0.0);
            if t > t_min + RATIO_TIE_EPS {
                continue;
            }
            let take = match leaving {
                None => true,
                Some((lr, _)) => {
                    if bland {
                        (self.basis[r] as usize) < (self.basis[lr] as usize)
                    } else {
                        let piv = self.w[r].abs();
                        piv > leaving_piv * (1.0 + 1e-12)
                    }
                }
            };
            if take {
                leaving = Some((r, to_upper));
                leaving_piv = self.w[r].abs();
            }
        }

        self.iterations += 1;
        if t_min <= DEGENERATE_STEP {
            self.degenerate_streak += 1;
        } else {
            self.degenerate_streak = 0;
        }

        match leaving {
            // A basic variable blocks strictly before the entering variable
            // could flip to its opposite bound: perform a basis change.
            Some((rp, to_upper)) if t_min < span - RATIO_TIE_EPS => {
                let enter_value = self.nonbasic_value(q) + dir * t_min;
                for r in 0..self.m {
                    self.x_basic[r] -= dir * t_min * self.w[r];
                }
                let leaving_var = self.basis[rp] as usize;
                self.loc[leaving_var] = if to_upper { Loc::Upper } else { Loc::Lower };
                if leaving_var >= self.n_slack_end {
                    // An artificial that leaves the basis is done for good.
                    self.ub[leaving_var] = 0.0;
                    self.loc[leaving_var] = Loc::Lower;
                }
                self.basis[rp] = q as u32;
                self.loc[q] = Loc::Basic;
                self.x_basic[rp] = enter_value;
                self.c_basic[rp] = self.cost[q];
                self.update_binv(rp)?;
                self.pivots_since_refactor += 1;
                if self.pivots_since_refactor >= REFACTOR_INTERVAL {
                    self.refactor()?;
                }
            }
            _ => {
                // Bound flip across the whole span; no basis change.
                for r in 0..self.m {
                    self.x_basic[r] -= dir * t_min * self.w[r];
                }
                self.loc[q] = if dir > 0.0 { Loc::Upper } else { Loc::Lower };
            }
        }
        Ok(StepOutcome::Progress)
    }

    /// Binv <- E^{-1} Binv for the elementary matrix E that maps the new
    /// basis column into the unit vector of row `rp`.
    fn update_binv(&mut self, rp: usize) -> Result<()> {
        let m = self.m;
        let piv = self.w[rp];
        if piv.abs() <= PIVOT_EPS {
            return Err(Error::Solver("vanishing pivot in basis update".into()));
        }
        let inv_piv = 1.0 / piv;
        let Simplex { binv, w, .. } = self;
        for c in 0..m {
            let col = &mut binv[c * m..(c + 1) * m];
            let t = col[rp] * inv_piv;
            if t == 0.0 {
                continue;
            }
            for (r, wr) in w.iter().enumerate() {
                col[r] -= t * wr;
            }
            col[rp] = t;
        }
        Ok(())
    }

    /// Rebuild the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recompute the basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m]; // column-major basis matrix
        for (r, var) in self.basis.iter().enumerate() {
            match self.column(*var as usize) {
                ColumnRef::Sparse(col) => {
                    for (i, a) in col {
                        b[r * m + *i as usize] = *a;
                    }
                }
                ColumnRef::Unit(i, a) => b[r * m + i] = a,
            }
        }
        let inv = &mut self.binv;
        inv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = b[col * m + col].abs();
            for r in col + 1..m {
                let v = b[col * m + r].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val <= 1e-12 {
                return Err(Error::Solver("singular basis during refactorization".into()));
            }
            if piv_row != col {
                for c in 0..m {
                    b.swap(c * m + col, c * m + piv_row);
                    inv.swap(c * m + col, c * m + piv_row);
                }
            }
            let inv_piv = 1.0 / b[col * m + col];
            for c in 0..m {
                b[c * m + col] *= inv_piv;
                inv[c * m + col] *= inv_piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = b[col * m + r];
                if f == 0.0 {
                    continue;
                }
                for c in 0..m {
                    let t = b[c * m + col];
                    if t != 0.0 {
                        b[c * m + r] -= f * t;
                    }
                    let ti = inv[c * m + col];
                    if ti != 0.0 {
                        inv[c * m + r] -= f * ti;
                    }
                }
            }
        }
        self.pivots_since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    fn extract(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n_struct];
        for (j, zj) in z.iter_mut().enumerate() {
            if self.loc[j] != Loc::Basic {
                *zj = self.nonbasic_value(j);
            }
        }
        for (r, var) in self.basis.iter().enumerate() {
            let var = *var as usize;
            if var < self.n_struct {
                z[var] = self.x_basic[r];
            }
        }
        z
    }
}

/// Solve `p`, classifying the outcome. Optimal points are re-checked against
/// the original rows and bounds, independent of solver internals; a point
/// violating them beyond `tol_feas` is never reported as Optimal.
pub fn solve_lp(p: &LpProblem, tol_feas: f64, tol_opt: f64) -> Result<LpSolution> {
    p.validate()?;
    let mut s = Simplex::new(p);
    let max_iters = MAX_ITER_FACTOR * (s.m + s.n_struct + 16);

    let infeasible_rows: Vec<usize> = (0..s.m)
        .filter(|r| s.x_basic[*r] < -tol_feas)
        .collect();
    if !infeasible_rows.is_empty() {
        s.install_artificials(&infeasible_rows);
        for j in s.n_slack_end..s.n_total {
            s.cost[j] = 1.0;
        }
        for r in 0..s.m {
            s.c_basic[r] = s.cost[s.basis[r] as usize];
        }
        loop {
            if s.iterations > max_iters {
                return Err(Error::Solver("phase 1 iteration limit exceeded".into()));
            }
            match s.step(tol_opt.max(1e-12))? {
                StepOutcome::Optimal => break,
                StepOutcome::Unbounded(_) => {
                    return Err(Error::Solver("phase 1 reported unbounded".into()));
                }
                StepOutcome::Progress => {}
            }
        }
        let infeasibility = s.phase1_value();
        if infeasibility > tol_feas.max(1e-9) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                z: Vec::new(),
                objective: f64::NAN,
                iterations: s.iterations,
                max_constraint_violation: f64::NAN,
                phase1_infeasibility: Some(infeasibility),
                unbounded_var: None,
            });
        }
        s.lock_artificials();
    }

    // Phase 2: the real objective from a feasible basis.
    for j in 0..s.n_struct {
        s.cost[j] = p.c[j];
    }
    for j in s.n_struct..s.n_total {
        s.cost[j] = 0.0;
    }
    for r in 0..s.m {
        s.c_basic[r] = s.cost[s.basis[r] as usize];
    }
    s.degenerate_streak = 0;

    let mut refactor_attempts = 0;
    loop {
        loop {
            if s.iterations > max_iters {
                return Err(Error::Solver("phase 2 iteration limit exceeded".into()));
            }
            match s.step(tol_opt)? {
                StepOutcome::Optimal => break,
                StepOutcome::Unbounded(var) => {
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        z: Vec::new(),
                        objective: f64::NAN,
                        iterations: s.iterations,
                        max_constraint_violation: f64::NAN,
                        phase1_infeasibility: None,
                        unbounded_var: Some(var),
                    });
                }
                StepOutcome::Progress => {}
            }
        }
        let z = s.extract();
        let violation = p.violation(&z);
        if violation <= tol_feas {
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: p.objective(&z),
                z,
                iterations: s.iterations,
                max_constraint_violation: violation,
                phase1_infeasibility: None,
                unbounded_var: None,
            });
        }
        if refactor_attempts >= 2 {
            return Err(Error::Solver(format!(
                "solution violates constraints by {violation:.3e} after refactorization"
            )));
        }
        refactor_attempts += 1;
        s.refactor()?;
    }
}

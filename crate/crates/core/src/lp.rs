//! Dense two-phase primal simplex for
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_eq x = b_eq
//!             l_r ≤ G x ≤ u_r
//!             l_x ≤ x ≤ u_x        (infinite bounds allowed)
//! ```
//!
//! Row constraints become equalities `G x − s = 0` on bounded slack columns,
//! and variable bounds are handled by the bounded-variable ratio test, so the
//! tableau has one row per equality or two-sided row. Entering and leaving
//! choices follow Bland's smallest-index rule, which makes the solver
//! deterministic and cycle-free.
//!
//! Once a phase terminates the basic values and the row duals are recomputed
//! from an LU factorization of the basis columns of the original matrix, so
//! the reported point does not carry the round-off accumulated by the tableau.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Lu, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility.
    pub feasibility: f64,
    /// Reduced-cost optimality and stationarity.
    pub stationarity: f64,
    /// Complementary slackness.
    pub complementarity: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot: f64,
    pub max_pivots: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-9,
            stationarity: 1e-9,
            complementarity: 1e-9,
            pivot: 1e-10,
            max_pivots: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub eq_matrix: Matrix,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: Matrix,
    pub ineq_lower: Vec<f64>,
    pub ineq_upper: Vec<f64>,
    pub var_lower: Vec<f64>,
    pub var_upper: Vec<f64>,
}

impl LinearProgram {
    /// An LP over `cost.len()` nonnegative variables with no constraints.
    pub fn new(cost: Vec<f64>) -> Self {
        let n = cost.len();
        LinearProgram {
            cost,
            eq_matrix: Matrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ineq_matrix: Matrix::zeros(0, n),
            ineq_lower: Vec::new(),
            ineq_upper: Vec::new(),
            var_lower: vec![0.0; n],
            var_upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn with_equalities(mut self, a: Matrix, b: Vec<f64>) -> Self {
        self.eq_matrix = a;
        self.eq_rhs = b;
        self
    }

    pub fn with_rows(mut self, g: Matrix, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.ineq_matrix = g;
        self.ineq_lower = lower;
        self.ineq_upper = upper;
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.var_lower = lower;
        self.var_upper = upper;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        let dim = |what, expected, got| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected, got })
            }
        };
        dim("equality matrix columns", n, self.eq_matrix.cols())?;
        dim("equality rhs", self.eq_matrix.rows(), self.eq_rhs.len())?;
        dim("row matrix columns", n, self.ineq_matrix.cols())?;
        dim("row lower bounds", self.ineq_matrix.rows(), self.ineq_lower.len())?;
        dim("row upper bounds", self.ineq_matrix.rows(), self.ineq_upper.len())?;
        dim("variable lower bounds", n, self.var_lower.len())?;
        dim("variable upper bounds", n, self.var_upper.len())?;
        let pairs = self
            .var_lower
            .iter()
            .zip(&self.var_upper)
            .chain(self.ineq_lower.iter().zip(&self.ineq_upper));
        for (lo, hi) in pairs {
            if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("bad bound pair [{lo}, {hi}]")));
            }
        }
        if self.cost.iter().chain(&self.eq_rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("cost and rhs must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal point and KKT multipliers. At an optimum
/// `c − A_eqᵀ·eq_duals − Gᵀ·(ineq_duals_lower − ineq_duals_upper)
///    − bound_duals_lower + bound_duals_upper = 0`
/// with all four bound-type multiplier vectors nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub eq_duals: Vec<f64>,
    pub ineq_duals_upper: Vec<f64>,
    pub ineq_duals_lower: Vec<f64>,
    pub bound_duals_upper: Vec<f64>,
    pub bound_duals_lower: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, lp: &LinearProgram, pivots: usize) -> Self {
        let n = lp.n_vars();
        let r = lp.ineq_matrix.rows();
        LpSolution {
            status,
            x: vec![0.0; n],
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            eq_duals: vec![0.0; lp.eq_matrix.rows()],
            ineq_duals_upper: vec![0.0; r],
            ineq_duals_lower: vec![0.0; r],
            bound_duals_upper: vec![0.0; n],
            bound_duals_lower: vec![0.0; n],
            pivots,
        }
    }

    /// Value of the Lagrangian dual at the reported multipliers.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let term = |dual: f64, bound: f64| if dual == 0.0 { 0.0 } else { dual * bound };
        let mut v = dot(&lp.eq_rhs, &self.eq_duals);
        for r in 0..lp.ineq_lower.len() {
            v += term(self.ineq_duals_lower[r], lp.ineq_lower[r]);
            v -= term(self.ineq_duals_upper[r], lp.ineq_upper[r]);
        }
        for j in 0..lp.n_vars() {
            v += term(self.bound_duals_lower[j], lp.var_lower[j]);
            v -= term(self.bound_duals_upper[j], lp.var_upper[j]);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Max violation of equalities, rows and bounds.
    pub feasibility: f64,
    /// Max stationarity residual, including negative multipliers.
    pub stationarity: f64,
    /// Max |multiplier · slack| over all bounded constraints.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.feasibility.max(self.stationarity).max(self.complementarity)
    }
}

/// Max-norm residuals of primal feasibility, stationarity (with dual
/// feasibility) and complementary slackness.
pub fn kkt_residuals(lp: &LinearProgram, sol: &LpSolution) -> Result<KktResiduals> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal);
    }
    lp.validate()?;
    let x = &sol.x;
    if x.len() != lp.n_vars() {
        return Err(Error::DimensionMismatch {
            what: "solution vector",
            expected: lp.n_vars(),
            got: x.len(),
        });
    }
    let ax = lp.eq_matrix.mul_vec(x);
    let gx = lp.ineq_matrix.mul_vec(x);

    let mut feas = ax
        .iter()
        .zip(&lp.eq_rhs)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let bound_violation = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    for r in 0..gx.len() {
        feas = feas.max(bound_violation(gx[r], lp.ineq_lower[r], lp.ineq_upper[r]));
    }
    for j in 0..x.len() {
        feas = feas.max(bound_violation(x[j], lp.var_lower[j], lp.var_upper[j]));
    }

    let row_net: Vec<f64> = sol
        .ineq_duals_lower
        .iter()
        .zip(&sol.ineq_duals_upper)
        .map(|(l, u)| l - u)
        .collect();
    let aty = lp.eq_matrix.tr_mul_vec(&sol.eq_duals);
    let gty = lp.ineq_matrix.tr_mul_vec(&row_net);
    let mut stat = 0.0_f64;
    for j in 0..x.len() {
        let r = lp.cost[j] - aty[j] - gty[j] - sol.bound_duals_lower[j] + sol.bound_duals_upper[j];
        stat = stat.max(r.abs());
    }
    let negatives = sol
        .ineq_duals_lower
        .iter()
        .chain(&sol.ineq_duals_upper)
        .chain(&sol.bound_duals_lower)
        .chain(&sol.bound_duals_upper);
    for d in negatives {
        stat = stat.max(-d);
    }

    let product = |dual: f64, slack: f64| {
        if dual == 0.0 {
            0.0
        } else if slack.is_infinite() {
            f64::INFINITY
        } else {
            (dual * slack).abs()
        }
    };
    let mut comp = 0.0_f64;
    for r in 0..gx.len() {
        comp = comp.max(product(sol.ineq_duals_lower[r], gx[r] - lp.ineq_lower[r]));
        comp = comp.max(product(sol.ineq_duals_upper[r], lp.ineq_upper[r] - gx[r]));
    }
    for j in 0..x.len() {
        comp = comp.max(product(sol.bound_duals_lower[j], x[j] - lp.var_lower[j]));
        comp = comp.max(product(sol.bound_duals_upper[j], lp.var_upper[j] - x[j]));
    }
    Ok(KktResiduals {
        feasibility: feas,
        stationarity: stat,
        complementarity: comp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    tol: &'a Tolerances,
    /// Original constraint matrix over structural, slack and artificial columns.
    a: Matrix,
    b: Vec<f64>,
    /// B⁻¹A, kept in step with `a` by pivoting.
    tab: Matrix,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// First artificial column.
    n_real: usize,
    pivots: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, tol: &'a Tolerances) -> Self {
        let n = lp.n_vars();
        let me = lp.eq_matrix.rows();
        let mr = lp.ineq_matrix.rows();
        let m = me + mr;
        let n_real = n + mr;
        let total = n_real + m;

        let mut a = Matrix::zeros(m, total);
        for i in 0..me {
            a.row_mut(i)[..n].copy_from_slice(lp.eq_matrix.row(i));
        }
        for r in 0..mr {
            let i = me + r;
            a.row_mut(i)[..n].copy_from_slice(lp.ineq_matrix.row(r));
            a[(i, n + r)] = -1.0;
        }
        let mut b = lp.eq_rhs.clone();
        b.extend(std::iter::repeat_n(0.0, mr));

        let mut lo: Vec<f64> = lp.var_lower.iter().chain(&lp.ineq_lower).copied().collect();
        let mut hi: Vec<f64> = lp.var_upper.iter().chain(&lp.ineq_upper).copied().collect();
        let mut state = Vec::with_capacity(total);
        let mut x = Vec::with_capacity(total);
        for j in 0..n_real {
            let (s, v) = if lo[j].is_finite() {
                (VarState::AtLower, lo[j])
            } else if hi[j].is_finite() {
                (VarState::AtUpper, hi[j])
            } else {
                (VarState::Free, 0.0)
            };
            state.push(s);
            x.push(v);
        }

        // Artificials absorb the residual of the starting point; their sign
        // makes them start nonnegative.
        let ax = a.mul_vec(&x.iter().copied().chain(std::iter::repeat_n(0.0, m)).collect::<Vec<_>>());
        let mut tab = a.clone();
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let resid = b[i] - ax[i];
            let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
            a[(i, n_real + i)] = sign;
            for v in tab.row_mut(i)[..n_real].iter_mut() {
                *v *= sign;
            }
            tab[(i, n_real + i)] = 1.0;
            basis.push(n_real + i);
            state.push(VarState::Basic);
            x.push(resid.abs());
            lo.push(0.0);
            hi.push(f64::INFINITY);
        }
        Simplex {
            tol,
            a,
            b,
            tab,
            basis,
            state,
            x,
            lo,
            hi,
            n_real,
            pivots: 0,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &k) in self.basis.iter().enumerate() {
            let ck = cost[k];
            if ck != 0.0 {
                for (dj, t) in d.iter_mut().zip(self.tab.row(i)) {
                    *dj -= ck * t;
                }
            }
        }
        d
    }

    fn entering(&self, d: &[f64]) -> Option<(usize, f64)> {
        let tol = self.tol.stationarity;
        (0..d.len()).find_map(|j| {
            if self.lo[j] == self.hi[j] {
                return None;
            }
            match self.state[j] {
                VarState::AtLower if d[j] < -tol => Some((j, 1.0)),
                VarState::AtUpper if d[j] > tol => Some((j, -1.0)),
                VarState::Free if d[j].abs() > tol => Some((j, -d[j].signum())),
                _ => None,
            }
        })
    }

    fn run(&mut self, cost: &[f64]) -> Result<PhaseEnd> {
        let mut d = self.reduced_costs(cost);
        loop {
            let Some((j, dir)) = self.entering(&d) else {
                return Ok(PhaseEnd::Optimal);
            };
            if self.pivots >= self.tol.max_pivots {
                return Err(Error::IterationLimit(self.pivots));
            }

            // Ratio test; ties go to the smallest basic variable index.
            let mut best: Option<(f64, usize, usize, bool)> = None; // (step, var, row, to_lower)
            for i in 0..self.basis.len() {
                let alpha = dir * self.tab[(i, j)];
                if alpha.abs() <= self.tol.pivot {
                    continue;
                }
                let k = self.basis[i];
                let (step, to_lower) = if alpha > 0.0 {
                    if !self.lo[k].is_finite() {
                        continue;
                    }
                    ((self.x[k] - self.lo[k]) / alpha, true)
                } else {
                    if !self.hi[k].is_finite() {
                        continue;
                    }
                    ((self.hi[k] - self.x[k]) / -alpha, false)
                };
                let step = step.max(0.0);
                let better = match best {
                    None => true,
                    Some((s, kb, _, _)) => {
                        let tie = (step - s).abs() <= 1e-12 * s.max(1.0);
                        if tie {
                            k < kb
                        } else {
                            step < s
                        }
                    }
                };
                if better {
                    best = Some((step, k, i, to_lower));
                }
            }
            let flip = self.hi[j] - self.lo[j];
            let row_step = best.map_or(f64::INFINITY, |b| b.0);
            if flip.is_infinite() && row_step.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }
            let step = row_step.min(flip);

            self.x[j] += dir * step;
            for i in 0..self.basis.len() {
                let t = self.tab[(i, j)];
                if t != 0.0 {
                    let k = self.basis[i];
                    self.x[k] -= dir * step * t;
                }
            }

            if flip < row_step {
                self.state[j] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                continue;
            }

            let (_, leaving, r, to_lower) = best.expect("finite row step");
            self.state[leaving] = if to_lower { VarState::AtLower } else { VarState::AtUpper };
            self.x[leaving] = if to_lower { self.lo[leaving] } else { self.hi[leaving] };
            if leaving >= self.n_real {
                // artificials never re-enter
                self.hi[leaving] = 0.0;
                self.x[leaving] = 0.0;
            }
            self.pivot(r, j, &mut d);
        }
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let piv = self.tab[(r, j)];
        for v in self.tab.row_mut(r) {
            *v /= piv;
        }
        let prow = self.tab.row(r).to_vec();
        for i in 0..self.tab.rows() {
            if i == r {
                continue;
            }
            let f = self.tab[(i, j)];
            if f != 0.0 {
                for (v, p) in self.tab.row_mut(i).iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.tab[(i, j)] = 0.0;
            }
        }
        let dj = d[j];
        if dj != 0.0 {
            for (v, p) in d.iter_mut().zip(&prow) {
                *v -= dj * p;
            }
            d[j] = 0.0;
        }
        self.basis[r] = j;
        self.state[j] = VarState::Basic;
        self.pivots += 1;
    }

    fn basis_lu(&self) -> Option<Lu> {
        let m = self.basis.len();
        let mut bm = Matrix::zeros(m, m);
        for (c, &k) in self.basis.iter().enumerate() {
            for i in 0..m {
                bm[(i, c)] = self.a[(i, k)];
            }
        }
        Lu::factor(&bm, 1e-15)
    }

    /// Recomputes basic values from the original matrix.
    fn refresh(&mut self) {
        let m = self.basis.len();
        if m == 0 {
            return;
        }
        let Some(lu) = self.basis_lu() else {
            return;
        };
        let mut rhs = self.b.clone();
        for j in 0..self.x.len() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.a[(i, j)] * self.x[j];
                }
            }
        }
        let mut xb = lu.solve(&rhs);
        // one step of iterative refinement
        let mut resid = rhs.clone();
        for (c, &k) in self.basis.iter().enumerate() {
            for (i, r) in resid.iter_mut().enumerate() {
                *r -= self.a[(i, k)] * xb[c];
            }
        }
        for (v, dv) in xb.iter_mut().zip(lu.solve(&resid)) {
            *v += dv;
        }
        for (c, &k) in self.basis.iter().enumerate() {
            self.x[k] = xb[c];
        }
    }

    /// Pivots basic artificials out wherever a real column can replace them.
    /// Artificials left in the basis sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        let mut scratch = vec![0.0; self.x.len()];
        for r in 0..self.basis.len() {
            if self.basis[r] < self.n_real {
                continue;
            }
            let candidate = (0..self.n_real)
                .filter(|&j| self.state[j] != VarState::Basic)
                .map(|j| (j, self.tab[(r, j)].abs()))
                .filter(|&(_, v)| v > 1e-7)
                .fold(None, |best: Option<(usize, f64)>, c| match best {
                    Some(b) if b.1 >= c.1 => Some(b),
                    _ => Some(c),
                });
            if let Some((j, _)) = candidate {
                let leaving = self.basis[r];
                self.state[leaving] = VarState::AtLower;
                self.x[leaving] = 0.0;
                self.pivot(r, j, &mut scratch);
            }
        }
        for k in self.n_real..self.x.len() {
            self.hi[k] = 0.0;
            if self.state[k] != VarState::Basic {
                self.x[k] = 0.0;
            }
        }
    }
}

/// Solves `lp`. Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; malformed input is an error.
pub fn solve(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let me = lp.eq_matrix.rows();
    let mr = lp.ineq_matrix.rows();
    let m = me + mr;

    let mut sx = Simplex::new(lp, tol);
    let total = sx.x.len();

    let mut phase1 = vec![0.0; total];
    for c in phase1.iter_mut().skip(sx.n_real) {
        *c = 1.0;
    }
    sx.run(&phase1)?;
    sx.refresh();
    let infeasibility: f64 = sx.x[sx.n_real..].iter().map(|v| v.abs()).sum();
    let scale = 1.0 + norm_inf(&sx.b);
    if infeasibility > tol.feasibility * scale {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible, lp, sx.pivots));
    }
    sx.drive_out_artificials();

    let mut phase2 = lp.cost.clone();
    phase2.resize(total, 0.0);
    if let PhaseEnd::Unbounded = sx.run(&phase2)? {
        return Ok(LpSolution::non_optimal(LpStatus::Unbounded, lp, sx.pivots));
    }
    sx.refresh();

    // Row duals from Bᵀy = c_B.
    let y = if m == 0 {
        Vec::new()
    } else {
        let lu = sx.basis_lu().ok_or(Error::NotOptimal)?;
        let cb: Vec<f64> = sx.basis.iter().map(|&k| phase2[k]).collect();
        lu.solve_transpose(&cb)
    };
    let aty = sx.a.tr_mul_vec(&y);
    let d: Vec<f64> = (0..sx.n_real).map(|j| phase2[j] - aty[j]).collect();

    let mut x: Vec<f64> = sx.x[..n].to_vec();
    // Snap nonbasic values exactly onto their bounds.
    for j in 0..n {
        match sx.state[j] {
            VarState::AtLower => x[j] = lp.var_lower[j],
            VarState::AtUpper => x[j] = lp.var_upper[j],
            _ => {}
        }
    }
    let split = |v: f64, basic: bool| -> (f64, f64) {
        if basic {
            (0.0, 0.0)
        } else if v >= 0.0 {
            (v, 0.0)
        } else {
            (0.0, -v)
        }
    };
    let mut bound_lower = vec![0.0; n];
    let mut bound_upper = vec![0.0; n];
    for j in 0..n {
        let (l, u) = split(d[j], sx.state[j] == VarState::Basic);
        bound_lower[j] = if lp.var_lower[j].is_finite() { l } else { 0.0 };
        bound_upper[j] = if lp.var_upper[j].is_finite() { u } else { 0.0 };
    }
    let mut row_lower = vec![0.0; mr];
    let mut row_upper = vec![0.0; mr];
    for r in 0..mr {
        let j = n + r;
        let (l, u) = split(d[j], sx.state[j] == VarState::Basic);
        row_lower[r] = if lp.ineq_lower[r].is_finite() { l } else { 0.0 };
        row_upper[r] = if lp.ineq_upper[r].is_finite() { u } else { 0.0 };
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: dot(&lp.cost, &x),
        x,
        eq_duals: y[..me].to_vec(),
        ineq_duals_upper: row_upper,
        ineq_duals_lower: row_lower,
        bound_duals_upper: bound_upper,
        bound_duals_lower: bound_lower,
        pivots: sx.pivots,
    })
}

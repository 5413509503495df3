//! Dense two-phase primal simplex over general linear programs with
//! per-variable bounds.
//!
//! Variables carry finite lower bounds and optional finite upper bounds;
//! internally everything is shifted to y = x - lower >= 0, finite uppers
//! become extra rows, and variables whose bounds pin them are substituted
//! out. Phase 1 drives artificial variables to zero, phase 2 maximizes the
//! real objective. Pivoting uses Dantzig's rule with a deterministic switch
//! to Bland's rule after a stall, so the solve is cycle-free and
//! reproducible.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One linear constraint with sparse coefficients.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Maximization problem: maximize objective . x subject to rows and bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Finite lower bound per variable.
    pub lower: Vec<f64>,
    /// Upper bound per variable; `f64::INFINITY` when unbounded above.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("simplex stalled past the pivot limit")]
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Feasibility tolerance used when classifying phase-1 leftovers.
const FEAS_EPS: f64 = 1e-9;
/// Smallest pivot element accepted by the ratio test.
const PIVOT_EPS: f64 = 1e-9;
/// Pivots without objective improvement before switching to Bland's rule.
const STALL_LIMIT: usize = 200;
const MAX_PIVOTS: usize = 100_000;

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with_bounds(&self.lower, &self.upper)
    }

    /// Solves with the supplied bounds in place of the stored ones; the
    /// branch-and-bound layer uses this to fix binaries without cloning
    /// the row data.
    pub fn solve_with_bounds(&self, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
        assert_eq!(lower.len(), self.n_vars);
        assert_eq!(upper.len(), self.n_vars);
        for j in 0..self.n_vars {
            assert!(
                lower[j].is_finite(),
                "variable {j} needs a finite lower bound"
            );
            if upper[j] < lower[j] - 1e-12 {
                return Err(LpError::Infeasible);
            }
        }

        // Pack out variables pinned by their bounds.
        let fixed: Vec<bool> = (0..self.n_vars)
            .map(|j| upper[j] - lower[j] <= 1e-12)
            .collect();
        let mut packed = vec![usize::MAX; self.n_vars];
        let mut cols = Vec::new();
        for j in 0..self.n_vars {
            if !fixed[j] {
                packed[j] = cols.len();
                cols.push(j);
            }
        }
        let np = cols.len();

        // Shifted rows: rhs' = rhs - sum a_j * lower_j, bound rows appended.
        struct StdRow {
            coeffs: Vec<(usize, f64)>,
            relation: Relation,
            rhs: f64,
        }
        let mut std_rows = Vec::with_capacity(self.rows.len() + np);
        for row in &self.rows {
            let mut rhs = row.rhs;
            let mut coeffs = Vec::with_capacity(row.coeffs.len());
            for &(j, a) in &row.coeffs {
                rhs -= a * lower[j];
                if !fixed[j] {
                    coeffs.push((packed[j], a));
                }
            }
            std_rows.push(StdRow {
                coeffs,
                relation: row.relation,
                rhs,
            });
        }
        for (p, &j) in cols.iter().enumerate() {
            if upper[j].is_finite() {
                std_rows.push(StdRow {
                    coeffs: vec![(p, 1.0)],
                    relation: Relation::Le,
                    rhs: upper[j] - lower[j],
                });
            }
        }

        // Tableau layout: packed vars | slacks/surplus | artificials | rhs.
        let m = std_rows.len();
        let mut n_slack = 0;
        let mut n_art = 0;
        for row in &mut std_rows {
            if row.rhs < 0.0 {
                row.rhs = -row.rhs;
                for c in &mut row.coeffs {
                    c.1 = -c.1;
                }
                row.relation = match row.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            match row.relation {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1;
                }
                Relation::Eq => n_art += 1,
            }
        }
        let slack_base = np;
        let art_base = np + n_slack;
        let total = np + n_slack + n_art;
        let width = total + 1;

        let mut tab = vec![0.0f64; (m + 1) * width];
        let mut basis = vec![0usize; m];
        let mut slack_idx = 0;
        let mut art_idx = 0;
        for (r, row) in std_rows.iter().enumerate() {
            let base = r * width;
            for &(p, a) in &row.coeffs {
                tab[base + p] += a;
            }
            tab[base + total] = row.rhs;
            match row.relation {
                Relation::Le => {
                    let col = slack_base + slack_idx;
                    slack_idx += 1;
                    tab[base + col] = 1.0;
                    basis[r] = col;
                }
                Relation::Ge => {
                    let s = slack_base + slack_idx;
                    slack_idx += 1;
                    tab[base + s] = -1.0;
                    let a = art_base + art_idx;
                    art_idx += 1;
                    tab[base + a] = 1.0;
                    basis[r] = a;
                }
                Relation::Eq => {
                    let a = art_base + art_idx;
                    art_idx += 1;
                    tab[base + a] = 1.0;
                    basis[r] = a;
                }
            }
        }

        let mut state = Tableau {
            tab,
            basis,
            m,
            width,
            total,
        };

        // Phase 1: maximize -(sum of artificials).
        if n_art > 0 {
            for col in art_base..total {
                state.tab[m * width + col] = -1.0;
            }
            for r in 0..m {
                if state.basis[r] >= art_base {
                    // canonicalize: objective row must have zeros on basics
                    let base = r * width;
                    for j in 0..width {
                        let v = state.tab[base + j];
                        state.tab[m * width + j] += v;
                    }
                }
            }
            state.iterate(|_| true)?;
            let art_sum: f64 = (0..m)
                .filter(|&r| state.basis[r] >= art_base)
                .map(|r| state.tab[r * width + total].max(0.0))
                .sum();
            let rhs_scale = (0..m)
                .map(|r| state.tab[r * width + total].abs())
                .fold(1.0f64, f64::max);
            if art_sum > FEAS_EPS * rhs_scale.max(1.0) * 100.0 {
                return Err(LpError::Infeasible);
            }
            // Drive leftover artificials out of the basis so phase 2 cannot
            // regrow them.
            for r in 0..m {
                if state.basis[r] < art_base {
                    continue;
                }
                let base = r * width;
                let pivot_col = (0..art_base).find(|&j| state.tab[base + j].abs() > 1e-7);
                if let Some(c) = pivot_col {
                    state.pivot(r, c);
                }
            }
        }

        // Phase 2: real objective on the shifted variables.
        let obj_base = m * width;
        for j in 0..width {
            state.tab[obj_base + j] = 0.0;
        }
        for (p, &j) in cols.iter().enumerate() {
            state.tab[obj_base + p] = self.objective[j];
        }
        for r in 0..m {
            let b = state.basis[r];
            let factor = state.tab[obj_base + b];
            if factor != 0.0 {
                let base = r * width;
                for j in 0..width {
                    let v = state.tab[base + j];
                    state.tab[obj_base + j] -= factor * v;
                }
            }
        }
        state.iterate(|col| col < art_base)?;

        let mut x = lower.to_vec();
        for r in 0..m {
            let b = state.basis[r];
            if b < np {
                x[cols[b]] = lower[cols[b]] + state.tab[r * width + total];
            }
        }
        let objective = self
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum::<f64>();
        Ok(LpSolution { x, objective })
    }
}

struct Tableau {
    tab: Vec<f64>,
    basis: Vec<usize>,
    m: usize,
    width: usize,
    total: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.tab[r * w + c];
        let inv = 1.0 / p;
        for j in 0..w {
            self.tab[r * w + j] *= inv;
        }
        self.tab[r * w + c] = 1.0;
        let pivot_row: Vec<f64> = self.tab[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let base = i * w;
            let f = self.tab[base + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[base..base + w];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs the simplex loop until optimality. `allow` filters entering
    /// columns (phase 2 excludes artificials).
    fn iterate<F: Fn(usize) -> bool>(&mut self, allow: F) -> Result<(), LpError> {
        let w = self.width;
        let obj_base = self.m * w;
        let scale = self.tab[obj_base..obj_base + self.total]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let eps_rc = 1e-9 * (1.0 + scale);

        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = -self.tab[obj_base + self.total];

        for _ in 0..MAX_PIVOTS {
            // entering column
            let mut entering = None;
            if bland {
                for j in 0..self.total {
                    if allow(j) && self.tab[obj_base + j] > eps_rc {
                        entering = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = eps_rc;
                for j in 0..self.total {
                    let rc = self.tab[obj_base + j];
                    if allow(j) && rc > best {
                        best = rc;
                        entering = Some(j);
                    }
                }
            }
            let Some(entering) = entering else {
                return Ok(());
            };

            // ratio test; ties resolved by the lowest basic variable index
            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.m {
                let a = self.tab[r * w + entering];
                if a > PIVOT_EPS {
                    let rhs = self.tab[r * w + self.total].max(0.0);
                    let ratio = rhs / a;
                    let better = match leaving {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - 1e-12
                                || ((ratio - best_ratio).abs() <= 1e-12
                                    && self.basis[r] < self.basis[cur])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leaving = Some(r);
                    }
                }
            }
            let Some(leaving) = leaving else {
                return Err(LpError::Unbounded);
            };

            self.pivot(leaving, entering);

            let obj = -self.tab[obj_base + self.total];
            if obj > last_obj + 1e-13 * (1.0 + last_obj.abs()) {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Err(LpError::Stalled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        n: usize,
        objective: Vec<f64>,
        rows: Vec<Row>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> LinearProgram {
        LinearProgram {
            n_vars: n,
            objective,
            rows,
            lower,
            upper,
        }
    }

    fn le(coeffs: Vec<(usize, f64)>, rhs: f64) -> Row {
        Row {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    #[test]
    fn simple_box() {
        let p = lp(
            2,
            vec![2.0, 1.0],
            vec![le(vec![(0, 1.0), (1, 1.0)], 1.5)],
            vec![0.0, 0.0],
            vec![1.0, f64::INFINITY],
        );
        let s = p.solve().unwrap();
        assert!((s.objective - 2.5).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge() {
        // maximize x0 with x0 + x1 = 1, x0 - x1 >= -0.2  -> x0 = 1
        let p = lp(
            2,
            vec![1.0, 0.0],
            vec![
                Row {
                    coeffs: vec![(0, 1.0), (1, 1.0)],
                    relation: Relation::Eq,
                    rhs: 1.0,
                },
                Row {
                    coeffs: vec![(0, 1.0), (1, -1.0)],
                    relation: Relation::Ge,
                    rhs: -0.2,
                },
            ],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let s = p.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_bounds_shift() {
        // maximize x, x in [-5, -1]
        let p = lp(1, vec![1.0], vec![], vec![-5.0], vec![-1.0]);
        let s = p.solve().unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let p = lp(
            1,
            vec![1.0],
            vec![Row {
                coeffs: vec![(0, 1.0)],
                relation: Relation::Ge,
                rhs: 2.0,
            }],
            vec![0.0],
            vec![1.0],
        );
        assert_eq!(p.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let p = lp(1, vec![1.0], vec![], vec![0.0], vec![f64::INFINITY]);
        assert_eq!(p.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        // x0 fixed at 3 by bounds; maximize x1 with x0 + x1 <= 5
        let p = lp(
            2,
            vec![0.0, 1.0],
            vec![le(vec![(0, 1.0), (1, 1.0)], 5.0)],
            vec![3.0, 0.0],
            vec![3.0, f64::INFINITY],
        );
        let s = p.solve().unwrap();
        assert_eq!(s.x[0], 3.0);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bound_overrides() {
        let p = lp(1, vec![1.0], vec![], vec![0.0], vec![1.0]);
        let s = p.solve_with_bounds(&[0.0], &[0.25]).unwrap();
        assert!((s.x[0] - 0.25).abs() < 1e-12);
        // fixing collapses the variable entirely
        let s = p.solve_with_bounds(&[1.0], &[1.0]).unwrap();
        assert_eq!(s.x[0], 1.0);
    }

    #[test]
    fn free_variable_via_negative_lower() {
        // maximize -x^... linear: maximize -x with x >= -10 -> x = -10
        let p = lp(1, vec![-1.0], vec![], vec![-10.0], vec![f64::INFINITY]);
        let s = p.solve().unwrap();
        assert!((s.x[0] + 10.0).abs() < 1e-9);
        assert!((s.objective - 10.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // several redundant rows through the same vertex
        let rows = vec![
            le(vec![(0, 1.0), (1, 1.0)], 1.0),
            le(vec![(0, 2.0), (1, 2.0)], 2.0),
            le(vec![(0, 1.0)], 1.0),
            le(vec![(1, 1.0)], 1.0),
            le(vec![(0, 1.0), (1, 2.0)], 2.0),
        ];
        let p = lp(
            2,
            vec![3.0, 5.0],
            rows,
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let s = p.solve().unwrap();
        // the optimum sits on the degenerate vertex (0, 1)
        assert!(
            (s.objective - 5.0).abs() < 1e-9,
            "objective {}",
            s.objective
        );
    }

    /// Independent optimum oracle for small box-bounded programs: every
    /// vertex of the polytope solves some n-subset of the constraints
    /// (rows tightened to equalities plus active bounds) as a linear
    /// system, so enumerating subsets and filtering for feasibility finds
    /// the exact optimum.
    fn vertex_enumeration_optimum(p: &LinearProgram) -> Option<f64> {
        let n = p.n_vars;
        // constraint list: (coeffs, rhs) treated as equality candidates
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &p.rows {
            let mut dense = vec![0.0; n];
            for &(j, a) in &row.coeffs {
                dense[j] += a;
            }
            planes.push((dense, row.rhs));
        }
        for j in 0..n {
            let mut lower = vec![0.0; n];
            lower[j] = 1.0;
            planes.push((lower.clone(), p.lower[j]));
            if p.upper[j].is_finite() {
                planes.push((lower, p.upper[j]));
            }
        }

        let feasible = |x: &[f64]| -> bool {
            const TOL: f64 = 1e-7;
            for (j, &v) in x.iter().enumerate() {
                if v < p.lower[j] - TOL || v > p.upper[j] + TOL {
                    return false;
                }
            }
            for row in &p.rows {
                let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
                let ok = match row.relation {
                    Relation::Le => lhs <= row.rhs + TOL,
                    Relation::Ge => lhs >= row.rhs - TOL,
                    Relation::Eq => (lhs - row.rhs).abs() <= TOL,
                };
                if !ok {
                    return false;
                }
            }
            true
        };

        fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
            let n = b.len();
            for col in 0..n {
                let pivot = (col..n)
                    .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                    .unwrap();
                if a[pivot][col].abs() < 1e-9 {
                    return None;
                }
                a.swap(col, pivot);
                b.swap(col, pivot);
                for i in 0..n {
                    if i == col {
                        continue;
                    }
                    let f = a[i][col] / a[col][col];
                    if f != 0.0 {
                        let pivot_row = a[col].clone();
                        for (k, pv) in pivot_row.iter().enumerate().skip(col) {
                            a[i][k] -= f * pv;
                        }
                        b[i] -= f * b[col];
                    }
                }
            }
            Some((0..n).map(|i| b[i] / a[i][i]).collect())
        }

        let mut best: Option<f64> = None;
        let m = planes.len();
        let mut pick = vec![0usize; n];
        fn combos(
            start: usize,
            depth: usize,
            n: usize,
            m: usize,
            pick: &mut Vec<usize>,
            visit: &mut dyn FnMut(&[usize]),
        ) {
            if depth == n {
                visit(pick);
                return;
            }
            for i in start..m {
                pick[depth] = i;
                combos(i + 1, depth + 1, n, m, pick, visit);
            }
        }
        combos(0, 0, n, m, &mut pick, &mut |subset: &[usize]| {
            let a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
            let b: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
            if let Some(x) = gauss_solve(a, b) {
                if feasible(&x) {
                    let value: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    best = Some(best.map_or(value, |b: f64| b.max(value)));
                }
            }
        });
        best
    }

    #[test]
    fn random_programs_match_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut feasible_count = 0;
        for case in 0..200 {
            let n = rng.random_range(2..=4usize);
            let n_rows = rng.random_range(1..=5usize);
            let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lower = vec![0.0; n];
            let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
            let rows: Vec<Row> = (0..n_rows)
                .map(|_| Row {
                    coeffs: (0..n).map(|j| (j, rng.random_range(-2.0..2.0))).collect(),
                    relation: if rng.random_bool(0.5) {
                        Relation::Le
                    } else {
                        Relation::Ge
                    },
                    rhs: rng.random_range(-1.0..4.0),
                })
                .collect();
            let p = lp(n, objective, rows, lower, upper);
            let oracle = vertex_enumeration_optimum(&p);
            match (p.solve(), oracle) {
                (Ok(sol), Some(best)) => {
                    feasible_count += 1;
                    assert!(
                        (sol.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                        "case {case}: simplex {} vs enumeration {best}",
                        sol.objective
                    );
                }
                (Err(LpError::Infeasible), None) => {}
                (got, want) => {
                    panic!("case {case}: simplex said {got:?}, enumeration said {want:?}")
                }
            }
        }
        // the generator must actually produce solvable programs
        assert!(feasible_count > 80, "only {feasible_count} feasible cases");
    }
}

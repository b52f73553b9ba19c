//! Exact linear and integer programming for small dense models.
//!
//! Models have integer data. The simplex first runs over `Ratio<i128>` and
//! transparently re-solves over arbitrary-precision rationals if any
//! intermediate value overflows.

mod branch;
mod scalar;
mod simplex;

pub use branch::{solve_integer, IntegerSolution};
pub use scalar::{Float, Scalar, SmallRational};

use num_bigint::BigInt;
use num_rational::BigRational;
use simplex::SimplexError;
use std::fmt::Write;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, i64)>,
    pub relation: Relation,
    pub rhs: i64,
}

/// `minimize objective · x` subject to `rows` and `lower <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub objective: Vec<i64>,
    pub rows: Vec<Constraint>,
    pub lower: Vec<i64>,
    pub upper: Vec<Option<i64>>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex pivot limit reached")]
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub objective: BigRational,
    pub values: Vec<BigRational>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, cost: i64, lower: i64, upper: Option<i64>) -> usize {
        self.names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, i64)>, relation: Relation, rhs: i64) {
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with_bounds(&self.lower, &self.upper)
    }

    pub(crate) fn solve_with_bounds(&self, lower: &[i64], upper: &[Option<i64>]) -> Result<LpSolution, LpError> {
        match simplex::solve::<SmallRational>(self, lower, upper) {
            Ok(sol) => Ok(LpSolution {
                objective: widen(&sol.objective),
                values: sol.values.iter().map(widen).collect(),
            }),
            Err(SimplexError::Overflow) => match simplex::solve::<BigRational>(self, lower, upper) {
                Ok(sol) => Ok(LpSolution {
                    objective: sol.objective,
                    values: sol.values,
                }),
                Err(e) => Err(e.into()),
            },
            Err(e) => Err(e.into()),
        }
    }

    /// Ceiling of the relaxation optimum, or something at most that which is
    /// still a valid lower bound on every feasible point.
    pub fn relaxation_bound(&self) -> Result<i64, LpError> {
        match self.relax(&self.lower, &self.upper)? {
            Some(r) => Ok(r.bound),
            None => Err(LpError::Infeasible),
        }
    }

    /// Solves the relaxation under the given bounds, in floating point when
    /// that can be certified and exactly otherwise. `None` means infeasible.
    pub(crate) fn relax(&self, lower: &[i64], upper: &[Option<i64>]) -> Result<Option<Relaxation>, LpError> {
        if let Ok(sol) = simplex::solve::<Float>(self, lower, upper) {
            let duals: Vec<f64> = sol.duals.iter().map(|y| y.0).collect();
            if let Some(bound) = self.dual_bound(lower, upper, &duals) {
                let point: Vec<f64> = sol.values.iter().map(|v| v.0).collect();
                match pick_branch(&point) {
                    Some(branch) => {
                        return Ok(Some(Relaxation {
                            bound,
                            outcome: Outcome::Branch(branch),
                        }))
                    }
                    None => {
                        let rounded: Vec<i64> = point.iter().map(|v| v.round() as i64).collect();
                        if self.is_feasible(&rounded, lower, upper) && self.cost(&rounded) == bound {
                            return Ok(Some(Relaxation {
                                bound,
                                outcome: Outcome::Integral(rounded),
                            }));
                        }
                    }
                }
            }
        }
        let sol = match self.solve_with_bounds(lower, upper) {
            Ok(sol) => sol,
            Err(LpError::Infeasible) => return Ok(None),
            Err(e) => return Err(e),
        };
        let bound = sol.objective.ceil_int();
        let outcome = if sol.values.iter().all(|v| v.is_integer()) {
            Outcome::Integral(sol.values.iter().map(|v| v.floor_int()).collect())
        } else {
            let j = most_fractional_exact(&sol.values);
            Outcome::Branch((j, sol.values[j].floor_int()))
        };
        Ok(Some(Relaxation { bound, outcome }))
    }

    fn cost(&self, x: &[i64]) -> i64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn is_feasible(&self, x: &[i64], lower: &[i64], upper: &[Option<i64>]) -> bool {
        let in_box = (0..x.len()).all(|j| x[j] >= lower[j] && upper[j].is_none_or(|u| x[j] <= u));
        in_box
            && self.rows.iter().all(|row| {
                let lhs: i64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
                match row.relation {
                    Relation::Le => lhs <= row.rhs,
                    Relation::Ge => lhs >= row.rhs,
                    Relation::Eq => lhs == row.rhs,
                }
            })
    }

    /// Lagrangian bound `min_box c·x + λ·(Ax − b)` for multipliers rounded
    /// from approximate duals. Weak duality makes it valid for any `λ` of the
    /// right signs; integer arithmetic makes it exact.
    fn dual_bound(&self, lower: &[i64], upper: &[Option<i64>], duals: &[f64]) -> Option<i64> {
        const SCALE: i128 = 1 << 40;
        let mut lambda = Vec::with_capacity(self.rows.len());
        for (row, &y) in self.rows.iter().zip(duals) {
            let l = -y;
            let l = match row.relation {
                Relation::Le => l.max(0.0),
                Relation::Ge => l.min(0.0),
                Relation::Eq => l,
            };
            let scaled = (l * SCALE as f64).round();
            if !scaled.is_finite() || scaled.abs() > 1e30 {
                return None;
            }
            lambda.push(scaled as i128);
        }
        let mut reduced: Vec<i128> = self.objective.iter().map(|&c| c as i128 * SCALE).collect();
        let mut total: i128 = 0;
        for (row, &l) in self.rows.iter().zip(&lambda) {
            if l == 0 {
                continue;
            }
            for &(j, a) in &row.coeffs {
                reduced[j] = reduced[j].checked_add(l.checked_mul(a as i128)?)?;
            }
            total = total.checked_sub(l.checked_mul(row.rhs as i128)?)?;
        }
        for (j, &d) in reduced.iter().enumerate() {
            let at = if d >= 0 { lower[j] } else { upper[j]? };
            total = total.checked_add(d.checked_mul(at as i128)?)?;
        }
        // ceil(total / SCALE)
        Some(-((-total).div_euclid(SCALE)) as i64)
    }

    /// Human-readable dump in CPLEX LP style.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        let mut any = false;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0 {
                write_term(&mut out, c, &self.names[j], !any);
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            for (k, &(j, a)) in row.coeffs.iter().enumerate() {
                write_term(&mut out, a, &self.names[j], k == 0);
            }
            if row.coeffs.is_empty() {
                out.push_str(" 0");
            }
            let op = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            match self.upper[j] {
                Some(u) => {
                    let _ = writeln!(out, " {} <= {} <= {}", self.lower[j], self.names[j], u);
                }
                None => {
                    let _ = writeln!(out, " {} >= {}", self.names[j], self.lower[j]);
                }
            }
        }
        out.push_str("General\n");
        for name in &self.names {
            let _ = writeln!(out, " {name}");
        }
        out.push_str("End\n");
        out
    }
}

pub(crate) struct Relaxation {
    /// Valid lower bound on the objective of every integer point in the box.
    pub bound: i64,
    pub outcome: Outcome,
}

pub(crate) enum Outcome {
    /// An optimal integer point whose cost equals the bound.
    Integral(Vec<i64>),
    /// Split on variable `j` at `x_j <= floor` versus `x_j >= floor + 1`.
    Branch((usize, i64)),
}

const INTEGRALITY_TOLERANCE: f64 = 1e-6;

/// Variable whose fractional part is closest to one half; lowest index wins ties.
fn pick_branch(point: &[f64]) -> Option<(usize, i64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in point.iter().enumerate() {
        let frac = v - v.floor();
        if frac <= INTEGRALITY_TOLERANCE || frac >= 1.0 - INTEGRALITY_TOLERANCE {
            continue;
        }
        let dist = (frac - 0.5).abs();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| (j, point[j].floor() as i64))
}

fn most_fractional_exact(values: &[BigRational]) -> usize {
    let half = BigRational::new(1.into(), 2.into());
    let mut best: Option<(usize, BigRational)> = None;
    for (j, v) in values.iter().enumerate() {
        if v.is_integer() {
            continue;
        }
        let dist = num_traits::Signed::abs(&(v - v.floor() - &half));
        if best.as_ref().is_none_or(|(_, d)| dist < *d) {
            best = Some((j, dist));
        }
    }
    best.expect("some value is fractional").0
}

fn write_term(out: &mut String, coeff: i64, name: &str, first: bool) {
    let sign = if coeff < 0 {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let mag = coeff.unsigned_abs();
    if sign.is_empty() {
        out.push(' ');
    } else {
        let _ = write!(out, " {sign} ");
    }
    if mag != 1 {
        let _ = write!(out, "{mag} ");
    }
    out.push_str(name);
}

fn widen(v: &SmallRational) -> BigRational {
    BigRational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
}

impl From<SimplexError> for LpError {
    fn from(e: SimplexError) -> Self {
        match e {
            SimplexError::Infeasible => LpError::Infeasible,
            SimplexError::Unbounded => LpError::Unbounded,
            SimplexError::Stalled => LpError::IterationLimit,
            SimplexError::Overflow => unreachable!("big rationals never overflow"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", -3, 0, None);
        let y = lp.add_var("y", -5, 0, None);
        lp.add_row("c1", vec![(x, 1)], Relation::Le, 4);
        lp.add_row("c2", vec![(y, 2)], Relation::Le, 12);
        lp.add_row("c3", vec![(x, 3), (y, 2)], Relation::Le, 18);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, q(-36, 1));
        assert_eq!(sol.values, vec![q(2, 1), q(6, 1)]);
    }

    #[test]
    fn fractional_optimum_with_bounds_and_equality() {
        // min r s.t. a - r = 0, (80 - r) - (41 + a) <= 0, 0 <= r <= 80
        let mut lp = LinearProgram::default();
        let r = lp.add_var("r", 1, 0, Some(80));
        let a = lp.add_var("a", 0, 0, None);
        lp.add_row("conserve", vec![(a, 1), (r, -1)], Relation::Eq, 0);
        lp.add_row("order", vec![(r, -1), (a, -1)], Relation::Le, -39);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, q(39, 2));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 1, 0, Some(3));
        lp.add_row("ge", vec![(x, 1)], Relation::Ge, 5);
        assert_eq!(lp.solve(), Err(LpError::Infeasible));

        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", -1, 0, None);
        let y = lp.add_var("y", 0, 0, None);
        lp.add_row("c", vec![(x, 1), (y, -1)], Relation::Le, 1);
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn lower_bounds_and_ge_rows() {
        // min x + y, x >= 2, y in [1, 5], x + y >= 15 -> 15
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x", 1, 2, None);
        let y = lp.add_var("y", 1, 1, Some(5));
        lp.add_row("sum", vec![(x, 1), (y, 1)], Relation::Ge, 15);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, q(15, 1));
        assert!(sol.values[0] >= q(2, 1));
        assert!(sol.values[1] <= q(5, 1) && sol.values[1] >= q(1, 1));
    }

    #[test]
    fn upper_bound_flips() {
        // max x + y + z with each in [0, 1] and x + y + z <= 2.5
        let mut lp = LinearProgram::default();
        let v: Vec<usize> = (0..3).map(|i| lp.add_var(format!("v{i}"), -1, 0, Some(1))).collect();
        lp.add_row("cap", v.iter().map(|&j| (j, 1)).collect(), Relation::Le, 5);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, q(-3, 1));
        lp.rows[0].coeffs = v.iter().map(|&j| (j, 2)).collect();
        lp.rows[0].rhs = 5;
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, q(-5, 2));
    }

    #[test]
    fn duals_certify_the_optimum() {
        let mut lp = LinearProgram::default();
        let r = lp.add_var("r", 1, 0, Some(80));
        let a = lp.add_var("a", 0, 0, Some(121));
        lp.add_row("conserve", vec![(a, 1), (r, -1)], Relation::Eq, 0);
        lp.add_row("order", vec![(r, -1), (a, -1)], Relation::Le, -39);
        let exact = simplex::solve::<BigRational>(&lp, &lp.lower, &lp.upper).unwrap();
        assert_eq!(exact.duals, vec![q(-1, 2), q(-1, 2)]);
        let float = simplex::solve::<Float>(&lp, &lp.lower, &lp.upper).unwrap();
        let y: Vec<f64> = float.duals.iter().map(|v| v.0).collect();
        assert_eq!(lp.dual_bound(&lp.lower, &lp.upper, &y), Some(20));
        // wrong-signed multipliers are clamped, never trusted
        assert!(lp.dual_bound(&lp.lower, &lp.upper, &[0.0, 5.0]).unwrap() <= 20);
    }

    #[test]
    fn lp_text_dump() {
        let mut lp = LinearProgram::default();
        let r = lp.add_var("r", 1, 0, Some(80));
        let a = lp.add_var("a", 0, 0, None);
        lp.add_row("conserve", vec![(a, 1), (r, -1)], Relation::Eq, 0);
        lp.add_row("order", vec![(r, -2), (a, -1)], Relation::Le, -39);
        let text = lp.to_lp_text();
        assert_eq!(
            text,
            "Minimize\n obj: r\nSubject To\n conserve: a - r = 0\n order: - 2 r - a <= -39\nBounds\n 0 <= r <= 80\n a >= 0\nGeneral\n r\n a\nEnd\n"
        );
    }

    /// Brute-force check of small random integer-bounded LPs against a
    /// vertex enumeration would be heavy; instead compare against a dense
    /// grid over a box, which bounds the LP optimum from above.
    #[test]
    fn random_boxes_respect_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut lp = LinearProgram::default();
            let x = lp.add_var("x", rng.gen_range(-3..4), 0, Some(6));
            let y = lp.add_var("y", rng.gen_range(-3..4), 0, Some(6));
            for k in 0..3 {
                let rel = [Relation::Le, Relation::Ge, Relation::Le][k];
                lp.add_row(
                    format!("r{k}"),
                    vec![(x, rng.gen_range(-3..4)), (y, rng.gen_range(-3..4))],
                    rel,
                    rng.gen_range(-6..10),
                );
            }
            let mut grid_best: Option<i64> = None;
            for xi in 0..=6 {
                for yi in 0..=6 {
                    let ok = lp.rows.iter().all(|row| {
                        let lhs: i64 = row.coeffs.iter().map(|&(j, a)| a * [xi, yi][j]).sum();
                        match row.relation {
                            Relation::Le => lhs <= row.rhs,
                            Relation::Ge => lhs >= row.rhs,
                            Relation::Eq => lhs == row.rhs,
                        }
                    });
                    if ok {
                        let v = lp.objective[0] * xi + lp.objective[1] * yi;
                        grid_best = Some(grid_best.map_or(v, |b: i64| b.min(v)));
                    }
                }
            }
            match lp.solve() {
                Ok(sol) => {
                    if let Some(g) = grid_best {
                        assert!(sol.objective <= BigRational::from_integer(BigInt::from(g)));
                    }
                    assert_eq!(lp.relaxation_bound(), Ok(sol.objective.ceil_int()));
                    let ilp = solve_integer(&lp, None).unwrap();
                    assert_eq!(ilp.map(|s| s.objective), grid_best);
                }
                Err(LpError::Infeasible) => assert_eq!(grid_best, None),
                Err(e) => panic!("boxed LP failed: {e}"),
            }
        }
    }
}

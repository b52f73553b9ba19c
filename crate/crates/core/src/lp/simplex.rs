//! Dense bounded-variable primal simplex (two phases) over an exact
//! [`Scalar`] field.

use super::scalar::Scalar;
use super::{LinearProgram, Relation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum SimplexError {
    Infeasible,
    Unbounded,
    Overflow,
    /// Pivot limit reached; only expected from inexact arithmetic.
    Stalled,
}

/// Values in the original (unshifted) variable space.
pub(crate) struct RawSolution<S> {
    pub objective: S,
    pub values: Vec<S>,
    /// Row prices `y` with reduced costs `c_j - y·A_j`.
    pub duals: Vec<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    AtLower,
    AtUpper,
    Basic,
}

// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;
const PIVOT_LIMIT: usize = 100_000;

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    beta: Vec<S>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<Option<S>>,
    reduced: Vec<S>,
    first_artificial: usize,
}

fn ck<T>(v: Option<T>) -> Result<T, SimplexError> {
    v.ok_or(SimplexError::Overflow)
}

pub(crate) fn solve<S: Scalar>(
    lp: &LinearProgram,
    lower: &[i64],
    upper: &[Option<i64>],
) -> Result<RawSolution<S>, SimplexError> {
    let n = lp.num_vars();
    let m = lp.rows.len();

    let mut shifted_upper: Vec<Option<S>> = Vec::with_capacity(n);
    for j in 0..n {
        match upper[j] {
            Some(u) if u < lower[j] => return Err(SimplexError::Infeasible),
            Some(u) => shifted_upper.push(Some(S::from_int(u - lower[j]))),
            None => shifted_upper.push(None),
        }
    }

    // Shift variables to zero lower bounds and orient every row so that its
    // right-hand side is nonnegative.
    let num_slacks = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let mut dense: Vec<Vec<i64>> = Vec::with_capacity(m);
    let mut rhs: Vec<i64> = Vec::with_capacity(m);
    let mut basic_slack: Vec<Option<usize>> = Vec::with_capacity(m);
    // Per row: was it negated, and which column (with what sign) prices it.
    let mut flipped = Vec::with_capacity(m);
    let mut price_col: Vec<(usize, i64)> = Vec::with_capacity(m);
    let mut slack_col = n;
    for row in &lp.rows {
        let mut coeffs = vec![0i64; n + num_slacks];
        let mut b = row.rhs;
        for &(j, a) in &row.coeffs {
            coeffs[j] += a;
            b -= a * lower[j];
        }
        let slack = match row.relation {
            Relation::Le => {
                coeffs[slack_col] = 1;
                slack_col += 1;
                Some(slack_col - 1)
            }
            Relation::Ge => {
                coeffs[slack_col] = -1;
                slack_col += 1;
                Some(slack_col - 1)
            }
            Relation::Eq => None,
        };
        flipped.push(b < 0);
        if b < 0 {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            b = -b;
        }
        if let Some(s) = slack {
            price_col.push((s, coeffs[s]));
        }
        basic_slack.push(slack.filter(|&s| coeffs[s] == 1));
        dense.push(coeffs);
        rhs.push(b);
    }

    let first_artificial = n + num_slacks;
    let num_artificial = basic_slack.iter().filter(|s| s.is_none()).count();
    let total = first_artificial + num_artificial;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = first_artificial;
    for (i, coeffs) in dense.iter().enumerate() {
        let mut row: Vec<S> = coeffs.iter().map(|&a| S::from_int(a)).collect();
        row.resize(total, S::zero());
        match basic_slack[i] {
            Some(s) => basis.push(s),
            None => {
                row[art] = S::from_int(1);
                basis.push(art);
                art += 1;
            }
        }
        if lp.rows[i].relation == Relation::Eq {
            price_col.insert(i, (art - 1, 1));
        }
        rows.push(row);
    }

    let mut status = vec![Status::AtLower; total];
    for &b in &basis {
        status[b] = Status::Basic;
    }
    let mut upper_all = shifted_upper;
    upper_all.resize(total, None);

    // Phase one: minimize the sum of artificials.
    let mut reduced = vec![S::zero(); total];
    for (i, row) in rows.iter().enumerate() {
        if basis[i] >= first_artificial {
            for (j, a) in row.iter().enumerate() {
                if j < first_artificial && !a.is_zero() {
                    reduced[j] = ck(reduced[j].sub(a))?;
                }
            }
        }
    }

    let mut t = Tableau {
        rows,
        beta: rhs.iter().map(|&b| S::from_int(b)).collect(),
        basis,
        status,
        upper: upper_all,
        reduced,
        first_artificial,
    };

    if num_artificial > 0 {
        t.run()?;
        let mut infeasibility = S::zero();
        for (i, &b) in t.basis.iter().enumerate() {
            if b >= first_artificial {
                infeasibility = ck(infeasibility.add(&t.beta[i]))?;
            }
        }
        if infeasibility.is_positive() {
            return Err(SimplexError::Infeasible);
        }
        for j in first_artificial..total {
            t.upper[j] = Some(S::zero());
        }
    }

    // Phase two.
    let cost: Vec<S> = (0..total)
        .map(|j| S::from_int(if j < n { lp.objective[j] } else { 0 }))
        .collect();
    let mut reduced = cost.clone();
    for (i, row) in t.rows.iter().enumerate() {
        let cb = &cost[t.basis[i]];
        if cb.is_zero() {
            continue;
        }
        for (j, a) in row.iter().enumerate() {
            if !a.is_zero() {
                reduced[j] = ck(reduced[j].sub(&ck(cb.mul(a))?))?;
            }
        }
    }
    t.reduced = reduced;
    t.run()?;

    let mut shifted = vec![S::zero(); total];
    for (j, x) in shifted.iter_mut().enumerate() {
        if t.status[j] == Status::AtUpper {
            *x = t.upper[j].clone().expect("at upper implies finite bound");
        }
    }
    for (i, &b) in t.basis.iter().enumerate() {
        shifted[b] = t.beta[i].clone();
    }
    let mut values = Vec::with_capacity(n);
    let mut objective = S::zero();
    for j in 0..n {
        let v = ck(shifted[j].add(&S::from_int(lower[j])))?;
        if lp.objective[j] != 0 {
            objective = ck(objective.add(&ck(v.mul(&S::from_int(lp.objective[j])))?))?;
        }
        values.push(v);
    }
    let mut duals = Vec::with_capacity(m);
    for (i, &(col, sign)) in price_col.iter().enumerate() {
        // 0 - y'_i * sign = reduced cost of the pricing column
        let mut y = ck(S::zero().sub(&t.reduced[col]))?;
        if (sign < 0) != flipped[i] {
            y = ck(S::zero().sub(&y))?;
        }
        duals.push(y);
    }
    Ok(RawSolution {
        objective,
        values,
        duals,
    })
}

impl<S: Scalar> Tableau<S> {
    fn run(&mut self) -> Result<(), SimplexError> {
        let mut degenerate = 0usize;
        for _ in 0..PIVOT_LIMIT {
            let bland = degenerate > DEGENERATE_LIMIT;
            let Some(entering) = self.choose_entering(bland) else {
                return Ok(());
            };
            let step = self.ratio_test(entering, bland)?;
            if step.theta.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.apply(entering, step)?;
        }
        Err(SimplexError::Stalled)
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        // Artificials never re-enter once they leave the basis.
        let mut best: Option<(usize, &S)> = None;
        for j in 0..self.first_artificial {
            let d = &self.reduced[j];
            let improving = match self.status[j] {
                Status::AtLower => d.is_negative(),
                Status::AtUpper => d.is_positive(),
                Status::Basic => false,
            };
            if !improving || matches!(&self.upper[j], Some(u) if u.is_zero()) {
                continue;
            }
            if bland {
                return Some(j);
            }
            let better = match best {
                None => true,
                Some((_, b)) => abs_gt(d, b),
            };
            if better {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn ratio_test(&self, entering: usize, bland: bool) -> Result<Step<S>, SimplexError> {
        let increasing = self.status[entering] == Status::AtLower;
        let mut best: Option<(S, usize, bool)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let alpha = &row[entering];
            if alpha.is_zero() {
                continue;
            }
            // The basic variable moves by -rate * theta.
            let rate_positive = alpha.is_positive() == increasing;
            let (limit, to_upper) = if rate_positive {
                (ck(self.beta[i].div(&abs(alpha)?))?, false)
            } else {
                match &self.upper[self.basis[i]] {
                    Some(u) => (ck(ck(u.sub(&self.beta[i]))?.div(&abs(alpha)?))?, true),
                    None => continue,
                }
            };
            let replace = match &best {
                None => true,
                Some((t, r, _)) => limit < *t || (limit == *t && bland && self.basis[i] < self.basis[*r]),
            };
            if replace {
                best = Some((limit, i, to_upper));
            }
        }
        let flip = self.upper[entering].clone();
        match (best, flip) {
            (Some((theta, r, to_upper)), flip) if flip.as_ref().is_none_or(|u| theta <= *u) => Ok(Step {
                theta,
                leaving: Some((r, to_upper)),
                increasing,
            }),
            (_, Some(u)) => Ok(Step {
                theta: u,
                leaving: None,
                increasing,
            }),
            (None, None) => Err(SimplexError::Unbounded),
            (Some(_), None) => unreachable!(),
        }
    }

    fn apply(&mut self, entering: usize, step: Step<S>) -> Result<(), SimplexError> {
        let Step {
            theta,
            leaving,
            increasing,
        } = step;
        if !theta.is_zero() {
            for i in 0..self.rows.len() {
                let alpha = &self.rows[i][entering];
                if alpha.is_zero() {
                    continue;
                }
                let delta = ck(alpha.mul(&theta))?;
                self.beta[i] = if increasing {
                    ck(self.beta[i].sub(&delta))?
                } else {
                    ck(self.beta[i].add(&delta))?
                };
            }
        }
        let Some((r, to_upper)) = leaving else {
            self.status[entering] = if increasing { Status::AtUpper } else { Status::AtLower };
            return Ok(());
        };

        let entering_value = if increasing {
            theta
        } else {
            let u = self.upper[entering].clone().expect("decreasing implies finite bound");
            ck(u.sub(&theta))?
        };
        let old = self.basis[r];
        self.status[old] = if to_upper { Status::AtUpper } else { Status::AtLower };
        self.status[entering] = Status::Basic;
        self.basis[r] = entering;
        self.beta[r] = entering_value;

        let pivot = self.rows[r][entering].clone();
        let nonzero: Vec<usize> = (0..self.rows[r].len())
            .filter(|&k| !self.rows[r][k].is_zero())
            .collect();
        for &k in &nonzero {
            self.rows[r][k] = ck(self.rows[r][k].div(&pivot))?;
        }
        let pivot_row = self.rows[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][entering].clone();
            if f.is_zero() {
                continue;
            }
            let row = &mut self.rows[i];
            for &k in &nonzero {
                row[k] = ck(row[k].sub(&ck(f.mul(&pivot_row[k]))?))?;
            }
        }
        let f = self.reduced[entering].clone();
        if !f.is_zero() {
            for &k in &nonzero {
                self.reduced[k] = ck(self.reduced[k].sub(&ck(f.mul(&pivot_row[k]))?))?;
            }
        }
        Ok(())
    }
}

struct Step<S> {
    theta: S,
    leaving: Option<(usize, bool)>,
    increasing: bool,
}

fn abs<S: Scalar>(v: &S) -> Result<S, SimplexError> {
    if v.is_negative() {
        ck(S::zero().sub(v))
    } else {
        Ok(v.clone())
    }
}

fn abs_gt<S: Scalar>(a: &S, b: &S) -> bool {
    match (abs(a), abs(b)) {
        (Ok(a), Ok(b)) => a > b,
        _ => false,
    }
}

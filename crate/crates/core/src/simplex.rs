//! Exact feasibility LP: find `λ ≥ 0` with `M λ = rhs`.
//!
//! Phase-one simplex on a dense rational tableau, one artificial variable per
//! row, Bland's smallest-index rule for both entering and leaving choices so
//! the iteration terminates without any tolerance.

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    /// A nonnegative solution, one value per column.
    Feasible(Vec<Rational>),
    /// `certificate · M_j ≤ 0` for every column `j` while
    /// `certificate · rhs = residual > 0`.
    Infeasible {
        certificate: Vec<Rational>,
        residual: Rational,
    },
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial, rhs stored separately
    body: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    reduced: Vec<Rational>,
    objective: Rational,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.body[row][col].recip();
        for v in self.body[row].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        self.rhs[row] = &self.rhs[row] * &inv;
        let pivot_row = self.body[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows {
            if r == row || self.body[r][col].is_zero() {
                continue;
            }
            let factor = self.body[r][col].clone();
            for (c, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    let delta = &factor * pv;
                    self.body[r][c] -= &delta;
                }
            }
            let delta = &factor * &pivot_rhs;
            self.rhs[r] -= &delta;
        }
        let factor = self.reduced[col].clone();
        if !factor.is_zero() {
            for (c, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    let delta = &factor * pv;
                    self.reduced[c] -= &delta;
                }
            }
            // objective = c_B B^-1 rhs; moves by reduced cost times step length
            let delta = &factor * &pivot_rhs;
            self.objective += &delta;
        }
        self.basis[row] = col;
    }

    fn entering(&self) -> Option<usize> {
        (0..self.cols).find(|&c| self.reduced[c].is_negative())
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for r in 0..self.rows {
            let a = &self.body[r][col];
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[r] / a;
            let better = match &best {
                None => true,
                Some((br, bratio)) => {
                    ratio < *bratio || (ratio == *bratio && self.basis[r] < self.basis[*br])
                }
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }
}

/// Decides whether `matrix · λ = rhs` has a solution with `λ ≥ 0`.
/// `matrix` is row-major with every row of equal length.
pub fn find_nonnegative_solution(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Feasibility {
    assert_eq!(matrix.len(), rhs.len(), "one rhs entry per row");
    let rows = matrix.len();
    let structural = matrix.first().map_or(0, |r| r.len());
    let cols = structural + rows;

    let mut body = Vec::with_capacity(rows);
    let mut rhs_col = Vec::with_capacity(rows);
    let mut signs = Vec::with_capacity(rows);
    for (i, (row, b)) in matrix.iter().zip(rhs).enumerate() {
        assert_eq!(row.len(), structural, "ragged constraint matrix");
        // Flip rows with negative rhs so the artificial basis starts feasible.
        let flip = b.is_negative();
        signs.push(flip);
        let mut full: Vec<Rational> = if flip {
            row.iter().map(|v| -v.clone()).collect()
        } else {
            row.clone()
        };
        full.extend((0..rows).map(|j| if j == i { Rational::one() } else { Rational::zero() }));
        body.push(full);
        rhs_col.push(if flip { -b.clone() } else { b.clone() });
    }

    // Minimize the sum of artificials: reduced cost of structural column j is
    // -Σ_i body[i][j]; artificials start basic with reduced cost 0.
    let mut reduced = vec![Rational::zero(); cols];
    for (j, r) in reduced.iter_mut().enumerate().take(structural) {
        *r = -body.iter().map(|row| &row[j]).sum::<Rational>();
    }
    let objective: Rational = rhs_col.iter().sum();

    let mut t = Tableau {
        rows,
        cols,
        body,
        rhs: rhs_col,
        reduced,
        objective,
        basis: (structural..cols).collect(),
    };

    while let Some(col) = t.entering() {
        let row = t
            .leaving(col)
            .expect("phase-one objective is bounded below by zero");
        t.pivot(row, col);
    }

    if t.objective.is_zero() {
        let mut solution = vec![Rational::zero(); structural];
        for (r, &var) in t.basis.iter().enumerate() {
            if var < structural {
                solution[var] = t.rhs[r].clone();
            }
        }
        Feasibility::Feasible(solution)
    } else {
        // y_i = 1 - reduced cost of artificial i, mapped back through row flips.
        let certificate = (0..rows)
            .map(|i| {
                let y = Rational::one() - &t.reduced[structural + i];
                if signs[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Feasibility::Infeasible { certificate, residual: t.objective }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn r(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| q(n, 1)).collect()
    }

    fn dot(a: &[Rational], b: &[Rational]) -> Rational {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn simple_feasible() {
        // x + y = 1, x - y = 0 -> x = y = 1/2
        let m = vec![r(&[1, 1]), r(&[1, -1])];
        let b = r(&[1, 0]);
        match find_nonnegative_solution(&m, &b) {
            Feasibility::Feasible(sol) => assert_eq!(sol, vec![q(1, 2), q(1, 2)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_row() {
        // -x = -3
        let m = vec![r(&[-1])];
        match find_nonnegative_solution(&m, &r(&[-3])) {
            Feasibility::Feasible(sol) => assert_eq!(sol, vec![q(3, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_with_certificate() {
        // x + y = 1, x + y = 2
        let m = vec![r(&[1, 1]), r(&[1, 1])];
        let b = r(&[1, 2]);
        match find_nonnegative_solution(&m, &b) {
            Feasibility::Infeasible { certificate, residual } => {
                assert!(residual.is_positive());
                for j in 0..2 {
                    let col: Vec<_> = m.iter().map(|row| row[j].clone()).collect();
                    assert!(!dot(&certificate, &col).is_positive());
                }
                assert!(dot(&certificate, &b).is_positive());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sign_constraint_bites() {
        // x - y = -1 has solutions, x = -1 has none with x >= 0.
        let m = vec![r(&[1])];
        assert!(matches!(
            find_nonnegative_solution(&m, &r(&[-1])),
            Feasibility::Infeasible { .. }
        ));
    }

    #[test]
    fn redundant_rows_are_fine() {
        let m = vec![r(&[1, 1, 0]), r(&[1, 1, 0]), r(&[0, 0, 1]), r(&[2, 2, 0])];
        let b = r(&[1, 1, 0, 2]);
        match find_nonnegative_solution(&m, &b) {
            Feasibility::Feasible(sol) => {
                for (row, rhs) in m.iter().zip(&b) {
                    assert_eq!(dot(row, &sol), *rhs);
                }
            }
            other => panic!("{other:?}"),
        }
    }
}

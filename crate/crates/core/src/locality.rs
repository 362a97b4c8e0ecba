//! Local-polytope membership and CHSH values.
//!
//! A box is local when it is a convex mixture of deterministic local boxes
//! `a = f_A(x), b = f_B(y)`. Membership is decided by an exact feasibility LP
//! over all vertices; a positive answer carries the mixture weights, which are
//! re-multiplied against the vertices before being returned.

use serde::Serialize;

use crate::boxes::{BipartiteBox, BoxShape};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::simplex::{find_nonnegative_solution, Feasibility};

pub const DEFAULT_VERTEX_CAP: u128 = 1_000_000;

/// `(2 + √2) / 4`, the best CHSH success achievable with entangled qubits.
/// Reference only: nothing in this crate computes quantum values.
pub const QUANTUM_CHSH_REFERENCE: f64 = 0.853_553_390_593_273_8;

/// A deterministic local strategy, identified by its position in the
/// lexicographic order of `(f_A, f_B)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalVertex {
    pub id: u64,
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl LocalVertex {
    pub fn to_box(&self, shape: BoxShape) -> Result<BipartiteBox> {
        BipartiteBox::local_deterministic(shape.x, shape.y, shape.a, shape.b, &self.alice, &self.bob)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedVertex {
    pub vertex: LocalVertex,
    pub weight: Rational,
}

/// Farkas-type witness: `functional · v ≤ 0` for every local vertex `v` but
/// `functional · box > 0`. Coefficients are indexed like the box table, with
/// one trailing coefficient for the normalization row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparatingReport {
    pub functional: Vec<Rational>,
    pub box_value: Rational,
    pub max_vertex_value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalityVerdict {
    pub is_local: bool,
    pub decomposition: Option<Vec<WeightedVertex>>,
    pub separating_report: Option<SeparatingReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChshValue {
    pub success_probability: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalChshOptimum {
    pub value: Rational,
    /// Lexicographically first maximizing vertex.
    pub vertex: LocalVertex,
}

fn pow_checked(base: usize, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

pub fn vertex_count(shape: BoxShape) -> Option<u128> {
    pow_checked(shape.a, shape.x)?.checked_mul(pow_checked(shape.b, shape.y)?)
}

/// Mixed-radix digits of `index`, most significant first.
fn digits(mut index: u128, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % radix as u128) as usize;
        index /= radix as u128;
    }
    out
}

fn vertex_from_id(shape: BoxShape, id: u128) -> LocalVertex {
    let bob_count = pow_checked(shape.b, shape.y).expect("count checked by caller");
    LocalVertex {
        id: id as u64,
        alice: digits(id / bob_count, shape.a, shape.x),
        bob: digits(id % bob_count, shape.b, shape.y),
    }
}

fn checked_vertex_count(shape: BoxShape, cap: u128) -> Result<u128> {
    match vertex_count(shape) {
        Some(n) if n <= cap => Ok(n),
        n => Err(Error::CapExceeded {
            what: "local vertex enumeration".into(),
            needed: n.map_or_else(|| "more than 2^128".into(), |n| n.to_string()),
            cap,
        }),
    }
}

/// All deterministic local strategies for `shape`, `f_A` most significant,
/// each function written as its value list in input order.
pub fn enumerate_local_vertices(shape: BoxShape, cap: u128) -> Result<Vec<LocalVertex>> {
    let n = checked_vertex_count(shape, cap)?;
    Ok((0..n).map(|id| vertex_from_id(shape, id)).collect())
}

/// Decides local-polytope membership with the default vertex cap.
pub fn is_local(b: &BipartiteBox) -> Result<LocalityVerdict> {
    is_local_with_cap(b, DEFAULT_VERTEX_CAP)
}

pub fn is_local_with_cap(b: &BipartiteBox, cap: u128) -> Result<LocalityVerdict> {
    b.ensure_valid()?;
    let shape = b.shape();
    let vertices = enumerate_local_vertices(shape, cap)?;

    // Rows: one per table entry plus Σλ = 1. Column j is vertex j.
    let rows = shape.len() + 1;
    let mut matrix = vec![vec![Rational::zero(); vertices.len()]; rows];
    for (j, v) in vertices.iter().enumerate() {
        for x in 0..shape.x {
            for y in 0..shape.y {
                matrix[b.index(x, y, v.alice[x], v.bob[y])][j] = Rational::one();
            }
        }
        matrix[rows - 1][j] = Rational::one();
    }
    let mut rhs: Vec<Rational> = b.entries().to_vec();
    rhs.push(Rational::one());

    match find_nonnegative_solution(&matrix, &rhs) {
        Feasibility::Feasible(weights) => {
            let decomposition: Vec<WeightedVertex> = vertices
                .into_iter()
                .zip(weights)
                .filter(|(_, w)| !w.is_zero())
                .map(|(vertex, weight)| WeightedVertex { vertex, weight })
                .collect();
            verify_decomposition(b, &decomposition)?;
            Ok(LocalityVerdict {
                is_local: true,
                decomposition: Some(decomposition),
                separating_report: None,
            })
        }
        Feasibility::Infeasible { certificate, residual } => {
            let report = separating_report(&matrix, &rhs, certificate)?;
            if report.box_value != residual {
                return Err(Error::Internal(format!(
                    "LP residual {residual} disagrees with certificate value {}",
                    report.box_value
                )));
            }
            Ok(LocalityVerdict {
                is_local: false,
                decomposition: None,
                separating_report: Some(report),
            })
        }
    }
}

fn verify_decomposition(b: &BipartiteBox, parts: &[WeightedVertex]) -> Result<()> {
    let total: Rational = parts.iter().map(|p| &p.weight).sum();
    if !total.is_one() || parts.iter().any(|p| p.weight.is_negative()) {
        return Err(Error::Internal(format!("decomposition weights sum to {total}")));
    }
    let shape = b.shape();
    let boxes = parts
        .iter()
        .map(|p| p.vertex.to_box(shape))
        .collect::<Result<Vec<_>>>()?;
    let mixed = BipartiteBox::mixture(shape, parts.iter().map(|p| &p.weight).zip(&boxes))?;
    if mixed != *b {
        return Err(Error::Internal("decomposition does not reproduce the box".into()));
    }
    Ok(())
}

fn separating_report(
    matrix: &[Vec<Rational>],
    rhs: &[Rational],
    functional: Vec<Rational>,
) -> Result<SeparatingReport> {
    let columns = matrix.first().map_or(0, |r| r.len());
    let mut max_vertex_value: Option<Rational> = None;
    for j in 0..columns {
        let value: Rational = matrix.iter().zip(&functional).map(|(row, y)| &row[j] * y).sum();
        if value.is_positive() {
            return Err(Error::Internal(format!("certificate positive on vertex {j}")));
        }
        if max_vertex_value.as_ref().is_none_or(|m| value > *m) {
            max_vertex_value = Some(value);
        }
    }
    let box_value: Rational = rhs.iter().zip(&functional).map(|(b, y)| b * y).sum();
    if !box_value.is_positive() {
        return Err(Error::Internal("certificate does not separate the box".into()));
    }
    Ok(SeparatingReport {
        functional,
        box_value,
        max_vertex_value: max_vertex_value.unwrap_or_else(Rational::zero),
    })
}

/// `(1/4) Σ_{x,y} Σ_{a⊕b = x∧y} p(a,b|x,y)`.
pub fn chsh_success_probability(b: &BipartiteBox) -> Result<ChshValue> {
    let s = b.shape();
    if (s.x, s.y, s.a, s.b) != (2, 2, 2, 2) {
        return Err(Error::NotBinary { x: s.x, y: s.y, a: s.a, b: s.b });
    }
    let mut total = Rational::zero();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                total += b.prob(x, y, a, a ^ (x & y));
            }
        }
    }
    Ok(ChshValue { success_probability: total * Rational::unit_fraction(4) })
}

pub fn max_local_chsh_report() -> LocalChshOptimum {
    let shape = BoxShape::binary_inputs(2);
    let mut best: Option<LocalChshOptimum> = None;
    for vertex in enumerate_local_vertices(shape, 16).expect("16 vertices") {
        let value = chsh_success_probability(&vertex.to_box(shape).expect("valid vertex"))
            .expect("binary box")
            .success_probability;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(LocalChshOptimum { value, vertex });
        }
    }
    best.expect("vertex set is nonempty")
}

/// Best CHSH success over deterministic local strategies.
pub fn max_local_chsh() -> Rational {
    max_local_chsh_report().value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn vertex_counts() {
        assert_eq!(enumerate_local_vertices(BoxShape::binary_inputs(2), 100).unwrap().len(), 16);
        assert_eq!(enumerate_local_vertices(BoxShape::binary_inputs(3), 100).unwrap().len(), 81);
        let first = &enumerate_local_vertices(BoxShape::binary_inputs(3), 100).unwrap()[0];
        assert_eq!((first.alice.as_slice(), first.bob.as_slice()), (&[0, 0][..], &[0, 0][..]));
        let last = enumerate_local_vertices(BoxShape::binary_inputs(3), 100).unwrap().pop().unwrap();
        assert_eq!((last.alice, last.bob), (vec![2, 2], vec![2, 2]));
        assert!(matches!(
            enumerate_local_vertices(BoxShape::binary_inputs(3), 80),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn pr_box_is_nonlocal() {
        let verdict = is_local(&BipartiteBox::modp(2).unwrap()).unwrap();
        assert!(!verdict.is_local);
        let report = verdict.separating_report.unwrap();
        assert!(report.box_value.is_positive());
        assert!(!report.max_vertex_value.is_positive());
    }

    #[test]
    fn mod3_box_is_nonlocal() {
        assert!(!is_local(&BipartiteBox::modp(3).unwrap()).unwrap().is_local);
    }

    #[test]
    fn uniform_noise_is_local() {
        let verdict = is_local(&BipartiteBox::uniform_noise(BoxShape::binary_inputs(2)).unwrap()).unwrap();
        assert!(verdict.is_local);
        let total: Rational = verdict.decomposition.unwrap().iter().map(|w| w.weight.clone()).sum();
        assert!(total.is_one());
    }

    #[test]
    fn degenerate_alphabet_is_local() {
        let b = BipartiteBox::local_deterministic(3, 1, 1, 2, &[0, 0, 0], &[1]).unwrap();
        assert!(is_local(&b).unwrap().is_local);
    }

    #[test]
    fn invalid_box_is_rejected() {
        let b = BipartiteBox::from_fn(BoxShape::binary_inputs(2), |_, _, _, _| q(1, 3)).unwrap();
        assert!(matches!(is_local(&b), Err(Error::InvalidBox(_))));
    }

    #[test]
    fn chsh_values() {
        assert!(chsh_success_probability(&BipartiteBox::modp(2).unwrap())
            .unwrap()
            .success_probability
            .is_one());
        let zero = BipartiteBox::local_deterministic(2, 2, 2, 2, &[0, 0], &[0, 0]).unwrap();
        assert_eq!(chsh_success_probability(&zero).unwrap().success_probability, q(3, 4));
        let noise = BipartiteBox::uniform_noise(BoxShape::binary_inputs(2)).unwrap();
        assert_eq!(chsh_success_probability(&noise).unwrap().success_probability, q(1, 2));
        assert!(matches!(
            chsh_success_probability(&BipartiteBox::modp(3).unwrap()),
            Err(Error::NotBinary { .. })
        ));
    }

    #[test]
    fn classical_chsh_bound() {
        let best = max_local_chsh_report();
        assert_eq!(best.value, q(3, 4));
        assert!(best.value < Rational::one());
        assert_eq!((best.vertex.alice, best.vertex.bob), (vec![0, 0], vec![0, 0]));
        const { assert!(QUANTUM_CHSH_REFERENCE > 0.75 && QUANTUM_CHSH_REFERENCE < 1.0) };
    }
}

//! Bipartite boxes `p(a,b|x,y)` over finite integer alphabets.
//!
//! A box is stored densely, indexed by `(x, y, a, b)` with `b` varying
//! fastest. Construction does not enforce the probabilistic invariants so that
//! malformed tables loaded from disk can still be inspected;
//! [`BipartiteBox::check_invariants`] reports exactly what is wrong.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Alphabet sizes `|X|, |Y|, |A|, |B|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxShape {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
}

impl BoxShape {
    pub fn new(x: usize, y: usize, a: usize, b: usize) -> Self {
        BoxShape { x, y, a, b }
    }

    /// Two binary inputs, `outputs` symbols per party.
    pub fn binary_inputs(outputs: usize) -> Self {
        BoxShape::new(2, 2, outputs, outputs)
    }

    pub fn len(&self) -> usize {
        self.x * self.y * self.a * self.b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.x == 0 || self.y == 0 || self.a == 0 || self.b == 0 {
            return Err(Error::Dimension(format!(
                "alphabet sizes must be positive, got {self}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BoxShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|X|={} |Y|={} |A|={} |B|={}", self.x, self.y, self.a, self.b)
    }
}

/// First witness of a broken box invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Negative {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        value: Rational,
    },
    Unnormalized {
        x: usize,
        y: usize,
        sum: Rational,
    },
    /// Bob's marginal at `(y, b)` differs between Alice inputs `x0` and `x1`.
    AliceSignalsToBob {
        y: usize,
        b: usize,
        x0: usize,
        x1: usize,
        marginal_x0: Rational,
        marginal_x1: Rational,
    },
    /// Alice's marginal at `(x, a)` differs between Bob inputs `y0` and `y1`.
    BobSignalsToAlice {
        x: usize,
        a: usize,
        y0: usize,
        y1: usize,
        marginal_y0: Rational,
        marginal_y1: Rational,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { x, y, a, b, value } => {
                write!(f, "negative entry p({a},{b}|{x},{y}) = {value}")
            }
            Violation::Unnormalized { x, y, sum } => {
                write!(f, "sum over outputs for (x={x}, y={y}) is {sum}, expected 1/1")
            }
            Violation::AliceSignalsToBob { y, b, x0, x1, marginal_x0, marginal_x1 } => write!(
                f,
                "A->B signalling: p_B(b={b}|y={y}) is {marginal_x0} when x={x0} but {marginal_x1} when x={x1}"
            ),
            Violation::BobSignalsToAlice { x, a, y0, y1, marginal_y0, marginal_y1 } => write!(
                f,
                "B->A signalling: p_A(a={a}|x={x}) is {marginal_y0} when y={y0} but {marginal_y1} when y={y1}"
            ),
        }
    }
}

/// Pass/fail for each box invariant; `None` means the check passed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub nonnegativity: Option<Violation>,
    pub normalization: Option<Violation>,
    pub no_signalling_a_to_b: Option<Violation>,
    pub no_signalling_b_to_a: Option<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn is_no_signalling(&self) -> bool {
        self.no_signalling_a_to_b.is_none() && self.no_signalling_b_to_a.is_none()
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.nonnegativity
            .as_ref()
            .or(self.normalization.as_ref())
            .or(self.no_signalling_a_to_b.as_ref())
            .or(self.no_signalling_b_to_a.as_ref())
    }

    pub fn entries(&self) -> [(&'static str, Option<&Violation>); 4] {
        [
            ("nonnegativity", self.nonnegativity.as_ref()),
            ("normalization", self.normalization.as_ref()),
            ("no-signalling A->B", self.no_signalling_a_to_b.as_ref()),
            ("no-signalling B->A", self.no_signalling_b_to_a.as_ref()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
}

/// Single-party conditional distribution `p(out|in)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalTable {
    pub side: Side,
    pub input_size: usize,
    pub output_size: usize,
    table: Vec<Rational>,
}

impl MarginalTable {
    pub fn new(
        side: Side,
        input_size: usize,
        output_size: usize,
        table: Vec<Rational>,
    ) -> Result<Self> {
        if table.len() != input_size * output_size {
            return Err(Error::Dimension(format!(
                "marginal table has {} entries, expected {}x{}",
                table.len(),
                input_size,
                output_size
            )));
        }
        Ok(MarginalTable { side, input_size, output_size, table })
    }

    pub fn from_fn(
        side: Side,
        input_size: usize,
        output_size: usize,
        mut f: impl FnMut(usize, usize) -> Rational,
    ) -> Self {
        let mut table = Vec::with_capacity(input_size * output_size);
        for i in 0..input_size {
            for o in 0..output_size {
                table.push(f(i, o));
            }
        }
        MarginalTable { side, input_size, output_size, table }
    }

    pub fn get(&self, input: usize, output: usize) -> &Rational {
        &self.table[input * self.output_size + output]
    }

    /// The distribution over outputs for one input.
    pub fn row(&self, input: usize) -> &[Rational] {
        &self.table[input * self.output_size..(input + 1) * self.output_size]
    }

    pub fn is_uniform(&self) -> bool {
        let u = Rational::unit_fraction(self.output_size as u64);
        self.table.iter().all(|v| *v == u)
    }

    pub fn is_normalized(&self) -> bool {
        (0..self.input_size).all(|i| {
            self.row(i).iter().all(|v| !v.is_negative())
                && self.row(i).iter().sum::<Rational>().is_one()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteBox {
    shape: BoxShape,
    table: Vec<Rational>,
}

impl BipartiteBox {
    pub fn from_table(shape: BoxShape, table: Vec<Rational>) -> Result<Self> {
        shape.validate()?;
        if table.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "table has {} entries, {shape} needs {}",
                table.len(),
                shape.len()
            )));
        }
        Ok(BipartiteBox { shape, table })
    }

    pub fn from_fn(
        shape: BoxShape,
        mut f: impl FnMut(usize, usize, usize, usize) -> Rational,
    ) -> Result<Self> {
        shape.validate()?;
        let mut table = Vec::with_capacity(shape.len());
        for x in 0..shape.x {
            for y in 0..shape.y {
                for a in 0..shape.a {
                    for b in 0..shape.b {
                        table.push(f(x, y, a, b));
                    }
                }
            }
        }
        Ok(BipartiteBox { shape, table })
    }

    /// The mod-p box: binary inputs, outputs in `0..p`, and
    /// `p(a,b|x,y) = 1/p` exactly when `b - a ≡ x·y (mod p)`.
    pub fn modp(p: u64) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidModulus(p));
        }
        let n = p as usize;
        let mass = Rational::unit_fraction(p);
        BipartiteBox::from_fn(BoxShape::binary_inputs(n), |x, y, a, b| {
            if (b + n - a) % n == (x * y) % n {
                mass.clone()
            } else {
                Rational::zero()
            }
        })
    }

    /// Vertex of the local polytope: `a = alice[x]`, `b = bob[y]` with certainty.
    pub fn local_deterministic(
        x_size: usize,
        y_size: usize,
        a_size: usize,
        b_size: usize,
        alice: &[usize],
        bob: &[usize],
    ) -> Result<Self> {
        let shape = BoxShape::new(x_size, y_size, a_size, b_size);
        shape.validate()?;
        check_function("f_A", alice, x_size, a_size)?;
        check_function("f_B", bob, y_size, b_size)?;
        BipartiteBox::from_fn(shape, |x, y, a, b| {
            if a == alice[x] && b == bob[y] {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    /// Product of uniform marginals: every outcome pair has mass `1/(|A||B|)`.
    pub fn uniform_noise(shape: BoxShape) -> Result<Self> {
        let mass = Rational::unit_fraction((shape.a * shape.b) as u64);
        BipartiteBox::from_fn(shape, |_, _, _, _| mass.clone())
    }

    pub fn shape(&self) -> BoxShape {
        self.shape
    }

    pub fn entries(&self) -> &[Rational] {
        &self.table
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        let s = &self.shape;
        ((x * s.y + y) * s.a + a) * s.b + b
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> &Rational {
        &self.table[self.index(x, y, a, b)]
    }

    /// `weight · self + (1 − weight) · other`.
    pub fn mix(&self, other: &BipartiteBox, weight: &Rational) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "cannot mix {} with {}",
                self.shape, other.shape
            )));
        }
        let rest = Rational::one() - weight;
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(p, r)| weight * p + &rest * r)
            .collect();
        Ok(BipartiteBox { shape: self.shape, table })
    }

    /// Convex combination of boxes of one shape; weights need not be checked
    /// for normalization here, callers validate the result.
    pub fn mixture<'a>(
        shape: BoxShape,
        parts: impl IntoIterator<Item = (&'a Rational, &'a BipartiteBox)>,
    ) -> Result<Self> {
        let mut table = vec![Rational::zero(); shape.len()];
        for (w, part) in parts {
            if part.shape != shape {
                return Err(Error::Dimension(format!(
                    "mixture component {} does not match {shape}",
                    part.shape
                )));
            }
            for (acc, p) in table.iter_mut().zip(&part.table) {
                if !p.is_zero() {
                    *acc += w * p;
                }
            }
        }
        BipartiteBox::from_table(shape, table)
    }

    fn alice_marginal(&self, x: usize, y: usize, a: usize) -> Rational {
        (0..self.shape.b).map(|b| self.prob(x, y, a, b)).sum()
    }

    fn bob_marginal(&self, x: usize, y: usize, b: usize) -> Rational {
        (0..self.shape.a).map(|a| self.prob(x, y, a, b)).sum()
    }

    fn first_a_to_b_violation(&self) -> Option<Violation> {
        let s = self.shape;
        for y in 0..s.y {
            for b in 0..s.b {
                let reference = self.bob_marginal(0, y, b);
                for x in 1..s.x {
                    let m = self.bob_marginal(x, y, b);
                    if m != reference {
                        return Some(Violation::AliceSignalsToBob {
                            y,
                            b,
                            x0: 0,
                            x1: x,
                            marginal_x0: reference,
                            marginal_x1: m,
                        });
                    }
                }
            }
        }
        None
    }

    fn first_b_to_a_violation(&self) -> Option<Violation> {
        let s = self.shape;
        for x in 0..s.x {
            for a in 0..s.a {
                let reference = self.alice_marginal(x, 0, a);
                for y in 1..s.y {
                    let m = self.alice_marginal(x, y, a);
                    if m != reference {
                        return Some(Violation::BobSignalsToAlice {
                            x,
                            a,
                            y0: 0,
                            y1: y,
                            marginal_y0: reference,
                            marginal_y1: m,
                        });
                    }
                }
            }
        }
        None
    }

    /// Nonnegativity, normalization and both no-signalling directions, each
    /// with the first violating index in `(x, y, a, b)` order.
    pub fn check_invariants(&self) -> ValidationReport {
        let s = self.shape;
        let mut nonnegativity = None;
        'outer: for x in 0..s.x {
            for y in 0..s.y {
                for a in 0..s.a {
                    for b in 0..s.b {
                        let v = self.prob(x, y, a, b);
                        if v.is_negative() {
                            nonnegativity =
                                Some(Violation::Negative { x, y, a, b, value: v.clone() });
                            break 'outer;
                        }
                    }
                }
            }
        }
        let mut normalization = None;
        'norm: for x in 0..s.x {
            for y in 0..s.y {
                let start = self.index(x, y, 0, 0);
                let sum: Rational = self.table[start..start + s.a * s.b].iter().sum();
                if !sum.is_one() {
                    normalization = Some(Violation::Unnormalized { x, y, sum });
                    break 'norm;
                }
            }
        }
        ValidationReport {
            nonnegativity,
            normalization,
            no_signalling_a_to_b: self.first_a_to_b_violation(),
            no_signalling_b_to_a: self.first_b_to_a_violation(),
        }
    }

    /// Errors with the first violation unless every invariant holds.
    pub fn ensure_valid(&self) -> Result<()> {
        match self.check_invariants().first_violation() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidBox(Box::new(v.clone()))),
        }
    }

    /// `p_A(a|x)` and `p_B(b|y)`. Well defined only for no-signalling boxes;
    /// the error carries the violated direction.
    pub fn marginals(&self) -> Result<(MarginalTable, MarginalTable)> {
        if let Some(v) = self.first_a_to_b_violation() {
            return Err(Error::Signalling(Box::new(v)));
        }
        if let Some(v) = self.first_b_to_a_violation() {
            return Err(Error::Signalling(Box::new(v)));
        }
        let s = self.shape;
        let alice = MarginalTable::from_fn(Side::Alice, s.x, s.a, |x, a| self.alice_marginal(x, 0, a));
        let bob = MarginalTable::from_fn(Side::Bob, s.y, s.b, |y, b| self.bob_marginal(0, y, b));
        Ok((alice, bob))
    }

    /// True iff both parties' outputs are uniform for every input.
    pub fn is_uniform_output(&self) -> bool {
        match self.marginals() {
            Ok((alice, bob)) => alice.is_uniform() && bob.is_uniform(),
            Err(_) => false,
        }
    }
}

pub(crate) fn check_function(
    what: &str,
    values: &[usize],
    domain: usize,
    codomain: usize,
) -> Result<()> {
    if values.len() != domain {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, domain has {domain}",
            values.len()
        )));
    }
    for (i, &v) in values.iter().enumerate() {
        if v >= codomain {
            return Err(Error::OutOfRange {
                what: format!("{what}[{i}]"),
                value: v,
                bound: codomain,
            });
        }
    }
    Ok(())
}

/// Free-function form of [`BipartiteBox::modp`].
pub fn make_modp_box(p: u64) -> Result<BipartiteBox> {
    BipartiteBox::modp(p)
}

pub fn check_box_invariants(b: &BipartiteBox) -> ValidationReport {
    b.check_invariants()
}

pub fn marginals_of_box(b: &BipartiteBox) -> Result<(MarginalTable, MarginalTable)> {
    b.marginals()
}

pub fn is_uniform_output_box(b: &BipartiteBox) -> bool {
    b.is_uniform_output()
}

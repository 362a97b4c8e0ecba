//! Canonical enumeration order of deterministic strategies.
//!
//! A strategy is the tuple `(g_A, g_B, F_A, F_B)`. Each component is a list of
//! table entries (box tables concatenated in box order, each in canonical
//! domain order) read as a mixed-radix number with the first entry most
//! significant. Strategies are ordered lexicographically by the four
//! component numbers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::boxes::BoxShape;
use crate::wiring::{StrategyLayout, WiringStrategy};

/// Position of a strategy in the canonical order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StrategyIndex {
    pub alice_wiring: u128,
    pub bob_wiring: u128,
    pub alice_output: u128,
    pub bob_output: u128,
}

/// Radices of one component's digits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Radices(pub Vec<usize>);

impl Radices {
    pub fn count(&self) -> BigUint {
        self.0.iter().fold(BigUint::one(), |acc, &r| acc * BigUint::from(r))
    }

    pub fn count_u128(&self) -> Option<u128> {
        self.count().to_u128()
    }

    pub fn decode(&self, mut index: u128) -> Vec<usize> {
        let mut out = vec![0; self.0.len()];
        for (slot, &r) in out.iter_mut().zip(&self.0).rev() {
            *slot = (index % r as u128) as usize;
            index /= r as u128;
        }
        out
    }

    pub fn encode(&self, digits: &[usize]) -> u128 {
        digits
            .iter()
            .zip(&self.0)
            .fold(0u128, |acc, (&d, &r)| acc * r as u128 + d as u128)
    }

    /// Advances `digits` to the next number; returns false on wrap-around.
    pub fn increment(&self, digits: &mut [usize]) -> bool {
        for (d, &r) in digits.iter_mut().zip(&self.0).rev() {
            *d += 1;
            if *d < r {
                return true;
            }
            *d = 0;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategySpace {
    pub layout: StrategyLayout,
    pub(crate) alice_wiring: Radices,
    pub(crate) bob_wiring: Radices,
    pub(crate) alice_output: Radices,
    pub(crate) bob_output: Radices,
}

impl StrategySpace {
    pub fn new(target: BoxShape, resources: Vec<BoxShape>, adaptive: bool) -> Self {
        let layout = StrategyLayout::new(target, resources, adaptive);
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for (i, r) in layout.resources.iter().enumerate() {
            alice.extend(std::iter::repeat_n(r.x, layout.alice_input_len(i)));
            bob.extend(std::iter::repeat_n(r.y, layout.bob_input_len(i)));
        }
        StrategySpace {
            alice_wiring: Radices(alice),
            bob_wiring: Radices(bob),
            alice_output: Radices(vec![target.a; layout.alice_output_len()]),
            bob_output: Radices(vec![target.b; layout.bob_output_len()]),
            layout,
        }
    }

    /// Exact number of strategies.
    pub fn size(&self) -> BigUint {
        self.alice_wiring.count()
            * self.bob_wiring.count()
            * self.alice_output.count()
            * self.bob_output.count()
    }

    pub fn size_u128(&self) -> Option<u128> {
        self.size().to_u128()
    }

    /// Number of choices for `g_A`, `g_B`, `F_A` and `F_B`.
    pub fn component_counts(&self) -> Option<[u128; 4]> {
        Some([
            self.alice_wiring.count_u128()?,
            self.bob_wiring.count_u128()?,
            self.alice_output.count_u128()?,
            self.bob_output.count_u128()?,
        ])
    }

    pub(crate) fn wiring_count(&self) -> Option<u128> {
        self.alice_wiring.count_u128()?.checked_mul(self.bob_wiring.count_u128()?)
    }

    pub(crate) fn alice_candidate_count(&self) -> Option<u128> {
        self.wiring_count()?.checked_mul(self.alice_output.count_u128()?)
    }

    pub(crate) fn split_tables(&self, flat: &[usize], alice: bool) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.layout.resources.len());
        let mut offset = 0;
        for i in 0..self.layout.resources.len() {
            let len = if alice {
                self.layout.alice_input_len(i)
            } else {
                self.layout.bob_input_len(i)
            };
            out.push(flat[offset..offset + len].to_vec());
            offset += len;
        }
        out
    }

    pub fn strategy(&self, index: &StrategyIndex) -> WiringStrategy {
        WiringStrategy {
            target: self.layout.target,
            resources: self.layout.resources.clone(),
            adaptive: self.layout.adaptive,
            alice_inputs: self.split_tables(&self.alice_wiring.decode(index.alice_wiring), true),
            bob_inputs: self.split_tables(&self.bob_wiring.decode(index.bob_wiring), false),
            alice_output: self.alice_output.decode(index.alice_output),
            bob_output: self.bob_output.decode(index.bob_output),
        }
    }

    /// Inverse of [`StrategySpace::strategy`] for strategies of this space.
    pub fn index_of(&self, s: &WiringStrategy) -> StrategyIndex {
        let flat = |tables: &[Vec<usize>]| tables.concat();
        StrategyIndex {
            alice_wiring: self.alice_wiring.encode(&flat(&s.alice_inputs)),
            bob_wiring: self.bob_wiring.encode(&flat(&s.bob_inputs)),
            alice_output: self.alice_output.encode(&s.alice_output),
            bob_output: self.bob_output.encode(&s.bob_output),
        }
    }

    /// Every strategy in canonical order. Meant for spaces small enough to
    /// walk one by one.
    pub fn iter(&self) -> impl Iterator<Item = WiringStrategy> + '_ {
        let counts = [
            self.alice_wiring.count_u128().expect("enumerable space"),
            self.bob_wiring.count_u128().expect("enumerable space"),
            self.alice_output.count_u128().expect("enumerable space"),
            self.bob_output.count_u128().expect("enumerable space"),
        ];
        (0..counts[0]).flat_map(move |ga| {
            (0..counts[1]).flat_map(move |gb| {
                (0..counts[2]).flat_map(move |fa| {
                    (0..counts[3]).map(move |fb| {
                        self.strategy(&StrategyIndex {
                            alice_wiring: ga,
                            bob_wiring: gb,
                            alice_output: fa,
                            bob_output: fb,
                        })
                    })
                })
            })
        })
    }
}

/// Number of distinct strategies for the given resources and target shape.
pub fn count_strategy_space(resources: &[BoxShape], target: BoxShape, adaptive: bool) -> BigUint {
    StrategySpace::new(target, resources.to_vec(), adaptive).size()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr() -> BoxShape {
        BoxShape::binary_inputs(2)
    }

    #[test]
    fn counts() {
        let t = BoxShape::binary_inputs(3);
        assert_eq!(count_strategy_space(&[pr()], t, false), BigUint::from(104_976u32));
        assert_eq!(count_strategy_space(&[], t, false), BigUint::from(81u32));
        assert_eq!(count_strategy_space(&[pr()], t, true), count_strategy_space(&[pr()], t, false));
        // 4^2 · 4^2 · 3^8 · 3^8
        assert_eq!(count_strategy_space(&[pr(), pr()], t, false), BigUint::from(11_019_960_576u64));
        // adaptive: box 1 sees x and z_0 -> 2^2 · 2^4 per side
        assert_eq!(
            count_strategy_space(&[pr(), pr()], t, true),
            BigUint::from(64u64 * 64 * 6561 * 6561)
        );
    }

    #[test]
    fn iteration_matches_count_and_index() {
        let space = StrategySpace::new(BoxShape::binary_inputs(2), vec![pr()], false);
        let mut n = 0u128;
        let mut prev: Option<StrategyIndex> = None;
        for s in space.iter() {
            let idx = space.index_of(&s);
            assert_eq!(space.strategy(&idx), s);
            if let Some(p) = prev {
                assert!(p < idx);
            }
            prev = Some(idx);
            n += 1;
        }
        assert_eq!(Some(n), space.size_u128());
    }

    #[test]
    fn radix_roundtrip() {
        let r = Radices(vec![3, 2, 5]);
        let mut digits = vec![0, 0, 0];
        for i in 0..30u128 {
            assert_eq!(r.decode(i), digits);
            assert_eq!(r.encode(&digits), i);
            assert_eq!(r.increment(&mut digits), i != 29);
        }
    }
}

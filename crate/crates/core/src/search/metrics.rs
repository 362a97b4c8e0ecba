use serde::{Deserialize, Serialize};

use crate::boxes::BipartiteBox;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// How well a simulated box matches a target.
///
/// Equation success for an input pair is the simulated mass on the target's
/// support; for mod-p targets that is `Pr[(b − a) mod p = xy]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FidelityMetrics {
    pub equation_success_avg: Rational,
    pub equation_success_worst: Rational,
    pub tv_distance_to_target: Rational,
}

impl FidelityMetrics {
    pub fn compute(simulated: &BipartiteBox, target: &BipartiteBox) -> Result<Self> {
        let s = target.shape();
        if simulated.shape() != s {
            return Err(Error::Dimension(format!(
                "simulated box {} vs target {}",
                simulated.shape(),
                s
            )));
        }
        let half = Rational::unit_fraction(2);
        let mut total = Rational::zero();
        let mut worst: Option<Rational> = None;
        let mut tv = Rational::zero();
        for x in 0..s.x {
            for y in 0..s.y {
                let mut success = Rational::zero();
                let mut distance = Rational::zero();
                for a in 0..s.a {
                    for b in 0..s.b {
                        let t = target.prob(x, y, a, b);
                        let p = simulated.prob(x, y, a, b);
                        if !t.is_zero() {
                            success += p;
                        }
                        distance += (p - t).abs();
                    }
                }
                let distance = distance * &half;
                if distance > tv {
                    tv = distance;
                }
                if worst.as_ref().is_none_or(|w| success < *w) {
                    worst = Some(success.clone());
                }
                total += success;
            }
        }
        Ok(FidelityMetrics {
            equation_success_avg: total * Rational::unit_fraction((s.x * s.y) as u64),
            equation_success_worst: worst.expect("nonempty input alphabets"),
            tv_distance_to_target: tv,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.tv_distance_to_target.is_zero()
    }

    pub fn satisfies_equation(&self) -> bool {
        self.equation_success_worst.is_one()
    }
}

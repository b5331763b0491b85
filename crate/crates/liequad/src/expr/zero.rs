use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::canonical::{Base, Expr, Factor, Rat, Term};

/// Three-valued answer of the identical-zero test.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tri {
    Zero,
    NonZero,
    Unknown,
}

impl Tri {
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::NonZero, _) | (_, Tri::NonZero) => Tri::NonZero,
            (Tri::Zero, Tri::Zero) => Tri::Zero,
            _ => Tri::Unknown,
        }
    }
}

const SAMPLE_POINTS: usize = 25;
const SAMPLE_ATTEMPTS: usize = 200;
const SAMPLE_THRESHOLD: f64 = 1e-8;
const SAMPLE_SEED: u64 = 0x4c69_6551;

impl Expr {
    /// Decides whether the expression is identically zero.
    ///
    /// `Zero` when the canonical form is empty, possibly after clearing
    /// denominators; `NonZero` when a sampled point in `[-2, 2]` per free
    /// variable evaluates above 1e-8 in magnitude; `Unknown` otherwise
    /// (canonically undecided and all valid samples small).
    pub fn zero_test(&self) -> Tri {
        if self.terms.is_empty() {
            return Tri::Zero;
        }
        if let Some(r) = self.as_rational() {
            return if r.is_zero() { Tri::Zero } else { Tri::NonZero };
        }
        // Clearing a sum denominator can expose denominators that were
        // nested inside it, so the pass iterates to a small cap.
        let mut cur = self.clone();
        for _ in 0..4 {
            let Some(cleared) = cur.cleared_of_denominators() else { break };
            if cleared.is_zero_expr() {
                return Tri::Zero;
            }
            cur = cleared;
        }
        self.sample_nonzero()
    }

    /// Multiplies through by enough positive powers of every base appearing
    /// with a negative exponent to clear them, then re-canonicalizes. Sound
    /// for zero-testing: the atom algebra is an integral domain. `None`
    /// when there is nothing to clear.
    fn cleared_of_denominators(&self) -> Option<Expr> {
        let mut needed: BTreeMap<Base, Rat> = BTreeMap::new();
        for t in &self.terms {
            for f in &t.factors {
                if f.exp.is_negative() {
                    if let Base::Num(_) = f.base {
                        continue;
                    }
                    let need = (-&f.exp).ceil();
                    let cur = needed.entry(f.base.clone()).or_insert_with(Rat::zero);
                    if *cur < need {
                        *cur = need;
                    }
                }
            }
        }
        if needed.is_empty() {
            return None;
        }
        let factors: Vec<Factor> = needed
            .into_iter()
            .map(|(base, exp)| Factor { base, exp })
            .collect();
        let multiplier = Expr {
            terms: vec![Term { coeff: Rat::one(), factors }],
        };
        Some(self.mul_ref(&multiplier))
    }

    fn sample_nonzero(&self) -> Tri {
        let vars: Vec<usize> = self.free_vars().into_iter().collect();
        let dim = vars.iter().copied().max().map_or(0, |m| m + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        let mut point = vec![0.0; dim];
        let mut valid = 0;
        for _ in 0..SAMPLE_ATTEMPTS {
            for &v in &vars {
                point[v] = rng.gen_range(-2.0..2.0);
            }
            match self.evaluate(&point) {
                Ok(v) => {
                    if v.abs() > SAMPLE_THRESHOLD {
                        return Tri::NonZero;
                    }
                    valid += 1;
                    if valid >= SAMPLE_POINTS {
                        return Tri::Unknown;
                    }
                }
                Err(_) => continue,
            }
        }
        Tri::Unknown
    }
}

use super::{GroupElement, MarkedGroup};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real-valued homomorphism `φ : Γ → R` given by one weight per generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Homomorphism<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Homomorphism<T> {
    /// Checks the weight count and, for presentations, that every relator is
    /// sent to zero.
    pub fn new(group: &MarkedGroup, weights: Vec<T>) -> Result<Self> {
        if weights.len() != group.rank() {
            return Err(Error::InvalidHomomorphism(format!(
                "expected {} weights, got {}",
                group.rank(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidHomomorphism("weights must be finite".into()));
        }
        let hom = Self { weights };
        if let crate::group::BackendKind::Presentation { relators, .. } = group.kind() {
            let free = MarkedGroup::free_with_names(group.generator_names().to_vec())?;
            for r in relators {
                let v = hom.apply(&free.parse_word(&r)?);
                let scale = hom.max_abs_weight() * T::from_usize(r.len()).unwrap_or_else(T::one);
                if v.abs() > T::mass_tolerance() * scale.max(T::one()) {
                    return Err(Error::InvalidHomomorphism(format!("relator {r} is sent to {v}, not 0")));
                }
            }
        }
        Ok(hom)
    }

    /// Exponent sum of generator `generator`.
    pub fn exponent_sum(group: &MarkedGroup, generator: usize) -> Result<Self> {
        let mut w = vec![T::zero(); group.rank()];
        *w.get_mut(generator)
            .ok_or_else(|| Error::InvalidHomomorphism(format!("generator index {generator} out of range")))? = T::one();
        Self::new(group, w)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn max_abs_weight(&self) -> T {
        self.weights.iter().fold(T::zero(), |m, w| m.max(w.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    /// `φ(x)`: signed sum of the letter weights.
    pub fn apply(&self, x: &GroupElement) -> T {
        x.letters()
            .iter()
            .map(|l| {
                let w = self.weights[l.generator()];
                if l.is_inverse() {
                    -w
                } else {
                    w
                }
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// `φ` of every prefix of `x`: entry `m` is `φ(x[..m])`, length `|x| + 1`.
    pub fn prefix_values(&self, x: &GroupElement) -> Vec<T> {
        let mut out = Vec::with_capacity(x.len() + 1);
        let mut acc = T::zero();
        out.push(acc);
        for l in x.letters() {
            let w = self.weights[l.generator()];
            acc = if l.is_inverse() { acc - w } else { acc + w };
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{default_generator_names, Letter};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let g = MarkedGroup::free(2).unwrap();
        let phi = Homomorphism::<f64>::new(&g, vec![1.0, 0.0]).unwrap();
        assert_eq!(phi.apply(&g.parse_word("a b a b'").unwrap()), 2.0);
        assert_eq!(phi.apply(&g.identity()), 0.0);
        assert_eq!(
            phi.prefix_values(&g.parse_word("aab'a'").unwrap()),
            vec![0.0, 1.0, 2.0, 2.0, 1.0]
        );
        let phi32 = Homomorphism::<f32>::exponent_sum(&g, 1).unwrap();
        assert_eq!(phi32.apply(&g.parse_word("b'b'a").unwrap()), -2.0);
    }

    #[test]
    fn construction_errors() {
        let g = MarkedGroup::free(2).unwrap();
        assert!(Homomorphism::<f64>::new(&g, vec![1.0]).is_err());
        assert!(Homomorphism::<f64>::new(&g, vec![1.0, f64::NAN]).is_err());
        assert!(Homomorphism::<f64>::exponent_sum(&g, 2).is_err());
        let z2 = MarkedGroup::presentation(default_generator_names(2), &["aba'b'"], 1).unwrap();
        assert!(Homomorphism::<f64>::new(&z2, vec![0.3, -2.0]).is_ok());
        let torsion = MarkedGroup::presentation(default_generator_names(2), &["aaa"], 1).unwrap();
        assert!(Homomorphism::<f64>::new(&torsion, vec![1.0, 0.0]).is_err());
        assert!(Homomorphism::<f64>::new(&torsion, vec![0.0, 1.0]).is_ok());
    }

    fn arb_word() -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(0..4usize, 0..=16)
            .prop_map(|r| GroupElement::free_reduce(r.into_iter().map(Letter::from_rank)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn additive_and_lipschitz(x in arb_word(), y in arb_word(), wa in -3.0f64..3.0, wb in -3.0f64..3.0) {
            let g = MarkedGroup::free(2).unwrap();
            let phi = Homomorphism::new(&g, vec![wa, wb]).unwrap();
            let xy = g.multiply(&x, &y).unwrap();
            prop_assert!((phi.apply(&xy) - phi.apply(&x) - phi.apply(&y)).abs() <= 1e-9);
            prop_assert!(phi.apply(&x).abs() <= phi.max_abs_weight() * x.len() as f64 + 1e-9);
        }
    }
}

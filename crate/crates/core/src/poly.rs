//! Polynomial functionals `F(mu) = sum_m mu^m(g_m)` with symmetric `g_m`.

use std::collections::BTreeMap;

use crate::combinat::binomial;
use crate::error::{Error, Result};
use crate::measure::SimplexPoint;
use crate::scalar::Scalar;
use crate::tensor::{sub_multisets, sym_product, TensorFn};

/// Finite sum of monomials `mu^m(g_m)`. Every stored tensor is symmetric and
/// nonzero, and is keyed by its order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFunctional<S> {
    d: usize,
    terms: BTreeMap<usize, TensorFn<S>>,
}

impl<S: Scalar> PolyFunctional<S> {
    /// Sums the given monomials after symmetrizing each tensor.
    pub fn new(d: usize, terms: impl IntoIterator<Item = TensorFn<S>>) -> Result<Self> {
        let mut out = Self::zero(d);
        for t in terms {
            if t.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: t.d(),
                });
            }
            out.add_symmetric_term(t.symmetrize());
        }
        Ok(out)
    }

    /// Like [`new`](Self::new) for tensors already known to be symmetric.
    pub(crate) fn from_symmetric_terms(d: usize, terms: impl IntoIterator<Item = TensorFn<S>>) -> Self {
        let mut out = Self::zero(d);
        for t in terms {
            debug_assert!(t.is_symmetric());
            out.add_symmetric_term(t);
        }
        out
    }

    fn add_symmetric_term(&mut self, t: TensorFn<S>) {
        let m = t.order();
        let merged = match self.terms.remove(&m) {
            Some(prev) => prev.add(&t).expect("same shape"),
            None => t,
        };
        if !merged.is_zero() {
            self.terms.insert(m, merged);
        }
    }

    pub fn zero(d: usize) -> Self {
        PolyFunctional {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: S) -> Self {
        Self::from_symmetric_terms(d, [TensorFn::scalar(d, c)])
    }

    /// `mu -> mu(g)`.
    pub fn linear(g: &TensorFn<S>) -> Self {
        assert_eq!(g.order(), 1, "linear functional needs a one-variable function");
        Self::from_symmetric_terms(g.d(), [g.clone()])
    }

    /// `mu -> mu^m(f)`.
    pub fn monomial(f: &TensorFn<S>) -> Self {
        Self::from_symmetric_terms(f.d(), [f.symmetrize()])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<usize, TensorFn<S>> {
        &self.terms
    }

    pub fn term(&self, m: usize) -> Option<&TensorFn<S>> {
        self.terms.get(&m)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The degree-0 coefficient.
    pub fn constant_term(&self) -> S {
        self.terms.get(&0).map_or_else(S::zero, |t| t.as_scalar().clone())
    }

    fn check_d(&self, d: usize) -> Result<()> {
        if d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: d,
            });
        }
        Ok(())
    }

    pub fn eval(&self, mu: &SimplexPoint<S>) -> Result<S> {
        self.check_d(mu.d())?;
        let mut acc = S::zero();
        for t in self.terms.values() {
            acc += &t.contract(mu.probs())?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_d(other.d)?;
        let mut out = self.clone();
        for t in other.terms.values() {
            out.add_symmetric_term(t.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(self.d);
        }
        PolyFunctional {
            d: self.d,
            terms: self.terms.iter().map(|(&m, t)| (m, t.scale(c))).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        PolyFunctional {
            d: self.d,
            terms: self.terms.iter().map(|(&m, t)| (m, t.neg())).collect(),
        }
    }

    /// Pointwise product, using `mu^a(f) mu^b(g) = mu^{a+b}(sym(f ⊗ g))`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_d(other.d)?;
        let mut out = Self::zero(self.d);
        for f in self.terms.values() {
            for g in other.terms.values() {
                out.add_symmetric_term(sym_product(f, g)?);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: usize) -> Result<Self> {
        let mut out = Self::constant(self.d, S::one());
        for _ in 0..e {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// The single symmetric tensor `h` of order `degree` with
    /// `F(mu) = mu^degree(h)` for every probability measure `mu`, obtained
    /// by padding lower-order terms with constant factors.
    pub fn homogenized(&self, degree: usize) -> TensorFn<S> {
        assert!(degree >= self.degree(), "cannot homogenize below the degree");
        let mut acc = TensorFn::zeros(self.d, degree);
        for (&m, g) in &self.terms {
            let padded = if m == degree { g.clone() } else { pad_with_ones(g, degree) };
            acc.add_assign(&padded).expect("same shape");
        }
        acc
    }

    /// Equality as functions on the probability measures carried by
    /// `support` (`None` means all atoms).
    pub fn same_functional(&self, other: &Self, support: Option<&[bool]>, tol: f64) -> bool {
        if self.d != other.d {
            return false;
        }
        let deg = self.degree().max(other.degree());
        let a = self.homogenized(deg);
        let b = other.homogenized(deg);
        match support {
            Some(s) => a.close_on_support(&b, s, tol),
            None => a.close_on_support(&b, &vec![true; self.d], tol),
        }
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyFunctional<T> {
        PolyFunctional {
            d: self.d,
            terms: self.terms.iter().map(|(&m, t)| (m, t.convert(&f))).collect(),
        }
    }
}

/// `sym(g ⊗ 1^{n-m})` for symmetric `g` of order `m`.
fn pad_with_ones<S: Scalar>(g: &TensorFn<S>, n: usize) -> TensorFn<S> {
    let d = g.d();
    let m = g.order();
    let norm = S::from_i64(binomial(n, m) as i64);
    let mut counts = vec![0usize; d];
    let mut sub = vec![0usize; d];
    let mut picked = Vec::with_capacity(m);
    TensorFn::from_symmetric_fn(d, n, |rep| {
        counts.iter_mut().for_each(|c| *c = 0);
        for &x in rep {
            counts[x] += 1;
        }
        let mut acc = S::zero();
        sub_multisets(&counts, m, 0, &mut sub, &mut |sub| {
            let mut weight: u128 = 1;
            picked.clear();
            for a in 0..d {
                weight *= binomial(counts[a], sub[a]);
                picked.extend(std::iter::repeat_n(a, sub[a]));
            }
            let mut term = g.get(&picked).clone();
            term *= &S::from_i64(weight as i64);
            acc += &term;
        });
        acc /= &norm;
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn point(p: &[(i64, i64)]) -> SimplexPoint<Rational> {
        SimplexPoint::new(p.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = PolyFunctional::constant(2, q(3, 1));
        assert_eq!(c.eval(&point(&[(1, 2), (1, 2)])).unwrap(), q(3, 1));
        let g = TensorFn::from_fn(2, 1, |i| q((i[0] == 0) as i64, 1));
        let lin = PolyFunctional::linear(&g);
        assert_eq!(lin.eval(&point(&[(1, 2), (1, 2)])).unwrap(), q(1, 2));
        let sq = PolyFunctional::monomial(&TensorFn::indicator(2, &[0, 0]));
        assert_eq!(sq.eval(&point(&[(1, 3), (2, 3)])).unwrap(), q(1, 9));
    }

    #[test]
    fn product_examples() {
        let g = TensorFn::from_fn(3, 1, |i| q(i[0] as i64 - 1, 2));
        let h = TensorFn::from_fn(3, 1, |i| q(2 - i[0] as i64, 3));
        let f = PolyFunctional::linear(&g);
        let one = PolyFunctional::constant(3, q(1, 1));
        assert_eq!(f.mul(&one).unwrap(), f);
        let prod = f.mul(&PolyFunctional::linear(&h)).unwrap();
        assert_eq!(prod.degree(), 2);
        let expected = g.outer(&h).unwrap().symmetrize();
        assert_eq!(prod.term(2).unwrap(), &expected);
        let mu = point(&[(1, 5), (1, 5), (3, 5)]);
        assert_eq!(
            prod.eval(&mu).unwrap(),
            f.eval(&mu).unwrap() * PolyFunctional::linear(&h).eval(&mu).unwrap()
        );
    }

    #[test]
    fn canonical_equality_uses_unit_mass() {
        // mu(1) = 1 on probability measures
        let ones = PolyFunctional::linear(&TensorFn::<Rational>::ones(3, 1));
        let one = PolyFunctional::constant(3, q(1, 1));
        assert!(ones.same_functional(&one, None, 0.0));
        assert!(!ones.same_functional(&PolyFunctional::zero(3), None, 0.0));
        // with atom 2 excluded, mu({2}) vanishes
        let e2 = PolyFunctional::<Rational>::linear(&TensorFn::indicator(3, &[2]));
        assert!(e2.same_functional(&PolyFunctional::zero(3), Some(&[true, true, false]), 0.0));
        assert!(!e2.same_functional(&PolyFunctional::zero(3), None, 0.0));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let g = TensorFn::from_fn(2, 1, |i| q(i[0] as i64, 1));
        let f = PolyFunctional::linear(&g);
        assert!(f.sub(&f).unwrap().is_zero());
    }
}

//! Random fields `H(mu, x) = sum_n int h_n(x, y) mu^n(dy)`.

use std::collections::BTreeMap;

use crate::chaos::{is_in_hn_tol, kernels_general};
use crate::error::{Error, Result};
use crate::law::expect_poly;
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::scalar::Scalar;
use crate::tensor::{sym_product, TensorFn};

/// Term `n` is a tensor of order `n + 1` whose first axis is the field
/// point `x`. Identically zero terms are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomField<S> {
    d: usize,
    terms: BTreeMap<usize, TensorFn<S>>,
}

impl<S: Scalar> RandomField<S> {
    /// Sums the given terms; a tensor of order `n + 1` contributes to term `n`.
    pub fn new(d: usize, terms: impl IntoIterator<Item = TensorFn<S>>) -> Result<Self> {
        let mut out = Self::zero(d);
        for t in terms {
            if t.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: t.d(),
                });
            }
            if t.order() == 0 {
                return Err(Error::InvalidParameter("field terms need an x axis".into()));
            }
            out.add_term(t);
        }
        Ok(out)
    }

    fn add_term(&mut self, t: TensorFn<S>) {
        let n = t.order() - 1;
        let merged = match self.terms.remove(&n) {
            Some(prev) => prev.add(&t).expect("same shape"),
            None => t,
        };
        if !merged.is_zero() {
            self.terms.insert(n, merged);
        }
    }

    pub fn zero(d: usize) -> Self {
        RandomField {
            d,
            terms: BTreeMap::new(),
        }
    }

    /// The deterministic field `(mu, x) -> h(x)`.
    pub fn deterministic(h: &TensorFn<S>) -> Self {
        assert_eq!(h.order(), 1, "deterministic field needs a one-variable function");
        let mut out = Self::zero(h.d());
        out.add_term(h.clone());
        out
    }

    /// Assembles a field from one functional per atom, `H(., x) = P_x`.
    pub fn from_atoms(polys: &[PolyFunctional<S>]) -> Result<Self> {
        let d = polys.len();
        let deg = polys.iter().map(|p| p.degree()).max().unwrap_or(0);
        let mut out = Self::zero(d);
        for n in 0..=deg {
            let mut slices = Vec::with_capacity(d);
            for p in polys {
                if p.d() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: p.d(),
                    });
                }
                slices.push(p.term(n).cloned().unwrap_or_else(|| TensorFn::zeros(d, n)));
            }
            out.add_term(TensorFn::stack(&slices)?);
        }
        Ok(out)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<usize, TensorFn<S>> {
        &self.terms
    }

    pub fn term(&self, n: usize) -> Option<&TensorFn<S>> {
        self.terms.get(&n)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
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

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_d(other.d)?;
        let mut out = self.clone();
        for t in other.terms.values() {
            out.add_term(t.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.d);
        for t in self.terms.values() {
            out.add_term(t.scale(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    /// The functional `mu -> H(mu, x)`.
    pub fn at_atom(&self, x: usize) -> PolyFunctional<S> {
        PolyFunctional::new(self.d, self.terms.values().map(|t| t.slice_first(x))).expect("same dimension")
    }

    pub fn atoms(&self) -> Vec<PolyFunctional<S>> {
        (0..self.d).map(|x| self.at_atom(x)).collect()
    }

    pub fn eval(&self, mu: &SimplexPoint<S>, x: usize) -> Result<S> {
        self.check_d(mu.d())?;
        if x >= self.d {
            return Err(Error::AtomOutOfRange { atom: x, d: self.d });
        }
        let mut acc = S::zero();
        for t in self.terms.values() {
            acc += &t.slice_first(x).contract(mu.probs())?;
        }
        Ok(acc)
    }

    /// `mu -> int H(mu, x) mu(dx)`.
    pub fn integral(&self) -> PolyFunctional<S> {
        PolyFunctional::new(self.d, self.terms.values().cloned()).expect("same dimension")
    }

    /// `mu -> int H(mu, x) K(mu, x) mu(dx)`, built atom by atom as
    /// `sum_x mu({x}) P_x(mu)` with `P_x = H(., x) K(., x)`.
    pub fn inner_functional(&self, other: &Self) -> Result<PolyFunctional<S>> {
        self.check_d(other.d)?;
        let d = self.d;
        let mut terms = Vec::new();
        for x in 0..d {
            let p = self.at_atom(x).mul(&other.at_atom(x))?;
            let ex = TensorFn::indicator(d, &[x]);
            for t in p.terms().values() {
                terms.push(sym_product(&ex, t)?);
            }
        }
        PolyFunctional::new(d, terms)
    }

    /// The field `(mu, x) -> F(mu) H(mu, x)`.
    pub fn multiply(&self, f: &PolyFunctional<S>) -> Result<Self> {
        self.check_d(f.d())?;
        let polys = (0..self.d)
            .map(|x| self.at_atom(x).mul(f))
            .collect::<Result<Vec<_>>>()?;
        Self::from_atoms(&polys)
    }

    /// True when every slice `h_n(x, .)`, `n >= 1`, lies in `H_n`.
    pub fn is_divergence_ready(&self, rho: &FiniteMeasure<S>, tol: f64) -> bool {
        self.first_unready_slice(rho, tol).is_none()
    }

    pub(crate) fn first_unready_slice(&self, rho: &FiniteMeasure<S>, tol: f64) -> Option<(usize, usize)> {
        for (&n, t) in &self.terms {
            if n == 0 {
                continue;
            }
            for x in 0..self.d {
                if !is_in_hn_tol(rho, &t.slice_first(x), tol) {
                    return Some((n, x));
                }
            }
        }
        None
    }

    /// The same field rewritten with every slice in `H_n`: the functional
    /// `H(., x)` is replaced by its chaos decomposition at each atom.
    pub fn chaos_form(&self, rho: &FiniteMeasure<S>) -> Result<Self> {
        rho.check_dims(self.d)?;
        let d = self.d;
        let mut constants = Vec::with_capacity(d);
        let mut per_order: BTreeMap<usize, Vec<Option<TensorFn<S>>>> = BTreeMap::new();
        for x in 0..d {
            let ce = kernels_general(rho, &self.at_atom(x))?;
            constants.push(ce.f0().clone());
            for (&n, k) in ce.kernels() {
                per_order.entry(n).or_insert_with(|| vec![None; d])[x] = Some(k.clone());
            }
        }
        let mut out = Self::zero(d);
        out.add_term(TensorFn::new(d, 1, constants)?);
        for (n, slices) in per_order {
            let slices: Vec<TensorFn<S>> = slices
                .into_iter()
                .map(|s| s.unwrap_or_else(|| TensorFn::zeros(d, n)))
                .collect();
            out.add_term(TensorFn::stack(&slices)?);
        }
        Ok(out)
    }

    /// Equality of `H(., x)` and `K(., x)` as functionals, for every atom in
    /// the support of `rho`.
    pub fn same_field(&self, other: &Self, rho: &FiniteMeasure<S>, tol: f64) -> bool {
        if self.d != other.d || rho.d() != self.d {
            return false;
        }
        let support = rho.support();
        (0..self.d)
            .filter(|&x| support[x])
            .all(|x| self.at_atom(x).same_functional(&other.at_atom(x), Some(&support), tol))
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> RandomField<T> {
        RandomField {
            d: self.d,
            terms: self.terms.iter().map(|(&n, t)| (n, t.convert(&f))).collect(),
        }
    }
}

/// `E int H_x K_x zeta(dx)`.
pub fn campbell_inner<S: Scalar>(rho: &FiniteMeasure<S>, h: &RandomField<S>, k: &RandomField<S>) -> Result<S> {
    rho.check_dims(h.d())?;
    expect_poly(rho, &h.inner_functional(k)?)
}

//! Cylinder functions `F(mu) = phi(mu(f_1), ..., mu(f_k))` with polynomial
//! `phi`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measure::SimplexPoint;
use crate::poly::PolyFunctional;
use crate::scalar::Scalar;
use crate::tensor::TensorFn;

/// A polynomial in `k` variables, stored as exponent vector -> coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<S> {
    k: usize,
    coeffs: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(k: usize, coeffs: impl IntoIterator<Item = (Vec<usize>, S)>) -> Result<Self> {
        let mut out = Polynomial {
            k,
            coeffs: BTreeMap::new(),
        };
        for (e, c) in coeffs {
            if e.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: e.len(),
                });
            }
            out.add_monomial(e, c);
        }
        Ok(out)
    }

    fn add_monomial(&mut self, e: Vec<usize>, c: S) {
        let v = match self.coeffs.remove(&e) {
            Some(prev) => prev + c,
            None => c,
        };
        if !v.is_zero() {
            self.coeffs.insert(e, v);
        }
    }

    pub fn constant(k: usize, c: S) -> Self {
        Self::new(k, [(vec![0; k], c)]).expect("matching arity")
    }

    /// The coordinate polynomial `y_i`.
    pub fn variable(k: usize, i: usize) -> Self {
        let mut e = vec![0; k];
        e[i] = 1;
        Self::new(k, [(e, S::one())]).expect("matching arity")
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, S> {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, y: &[S]) -> Result<S> {
        if y.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: y.len(),
            });
        }
        let mut acc = S::zero();
        for (e, c) in &self.coeffs {
            let mut t = c.clone();
            for (yi, &p) in y.iter().zip(e) {
                t *= &yi.pow_u(p);
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// `d phi / d y_i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Polynomial {
            k: self.k,
            coeffs: BTreeMap::new(),
        };
        for (e, c) in &self.coeffs {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_monomial(e2, c.mul_ref(&S::from_usize(e[i])));
        }
        out
    }

    /// `mu -> phi(F_1(mu), ..., F_k(mu))`.
    pub fn compose(&self, fs: &[PolyFunctional<S>]) -> Result<PolyFunctional<S>> {
        if fs.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: fs.len(),
            });
        }
        let d = fs.first().map_or(1, |f| f.d());
        let mut powers: Vec<Vec<PolyFunctional<S>>> = fs
            .iter()
            .map(|f| vec![PolyFunctional::constant(f.d(), S::one())])
            .collect();
        let mut out = PolyFunctional::zero(d);
        for (e, c) in &self.coeffs {
            let mut term = PolyFunctional::constant(d, c.clone());
            for (i, &p) in e.iter().enumerate() {
                while powers[i].len() <= p {
                    let next = powers[i].last().expect("nonempty").mul(&fs[i])?;
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][p])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction<S> {
    phi: Polynomial<S>,
    fs: Vec<TensorFn<S>>,
}

impl<S: Scalar> CylinderFunction<S> {
    pub fn new(phi: Polynomial<S>, fs: Vec<TensorFn<S>>) -> Result<Self> {
        if phi.arity() != fs.len() {
            return Err(Error::DimensionMismatch {
                expected: phi.arity(),
                found: fs.len(),
            });
        }
        if fs.is_empty() {
            return Err(Error::InvalidParameter("cylinder function without test functions".into()));
        }
        let d = fs[0].d();
        for f in &fs {
            if f.order() != 1 {
                return Err(Error::InvalidParameter("cylinder test functions take one variable".into()));
            }
            if f.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.d(),
                });
            }
        }
        Ok(CylinderFunction { phi, fs })
    }

    pub fn phi(&self) -> &Polynomial<S> {
        &self.phi
    }

    pub fn fs(&self) -> &[TensorFn<S>] {
        &self.fs
    }

    pub fn d(&self) -> usize {
        self.fs[0].d()
    }

    pub fn linear_parts(&self) -> Vec<PolyFunctional<S>> {
        self.fs.iter().map(PolyFunctional::linear).collect()
    }

    /// Exact expansion into a polynomial functional.
    pub fn to_poly(&self) -> Result<PolyFunctional<S>> {
        self.phi.compose(&self.linear_parts())
    }

    pub fn eval(&self, mu: &SimplexPoint<S>) -> Result<S> {
        let y = self.fs.iter().map(|f| mu.integrate(f)).collect::<Result<Vec<_>>>()?;
        self.phi.eval(&y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn polynomial_calculus() {
        // phi = 3 y0^2 y1 - y1 + 2
        let phi = Polynomial::new(2, [(vec![2, 1], q(3, 1)), (vec![0, 1], q(-1, 1)), (vec![0, 0], q(2, 1))]).unwrap();
        assert_eq!(phi.eval(&[q(1, 2), q(2, 1)]).unwrap(), q(3, 2));
        let d0 = phi.partial(0);
        assert_eq!(d0.eval(&[q(1, 2), q(2, 1)]).unwrap(), q(6, 1));
        assert_eq!(phi.degree(), 3);
        assert!(Polynomial::<Rational>::constant(2, q(1, 1)).partial(1).coeffs().is_empty());
    }

    #[test]
    fn cylinder_expansion_matches_evaluation() {
        let f0 = TensorFn::from_fn(3, 1, |i| q(i[0] as i64 - 1, 2));
        let f1 = TensorFn::from_fn(3, 1, |i| q(2 - i[0] as i64 * i[0] as i64, 3));
        let phi = Polynomial::new(2, [(vec![2, 1], q(3, 1)), (vec![1, 0], q(-1, 1)), (vec![0, 0], q(2, 1))]).unwrap();
        let cyl = CylinderFunction::new(phi, vec![f0, f1]).unwrap();
        let poly = cyl.to_poly().unwrap();
        let mu = SimplexPoint::new(vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
        assert_eq!(poly.eval(&mu).unwrap(), cyl.eval(&mu).unwrap());
    }
}

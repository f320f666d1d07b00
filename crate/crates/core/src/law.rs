//! Exact expectations under the Dirichlet law `Di(rho)`.

use std::collections::HashMap;

use crate::bracket::{bracket_integrate, bracket_integrate_fn, bracket_integrate_symmetric};
use crate::check::Comparison;
use crate::combinat::rising_factorial;
use crate::error::Result;
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::scalar::Scalar;
use crate::tensor::TensorFn;

/// `E zeta^n(f) = rho^[n](f) / theta^(n)`.
pub fn expect_power<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<S> {
    let mut v = bracket_integrate(rho, f)?;
    v /= &rising_factorial(rho.theta(), f.order());
    Ok(v)
}

/// `E F = sum_m rho^[m](g_m) / theta^(m)`.
pub fn expect_poly<S: Scalar>(rho: &FiniteMeasure<S>, f: &PolyFunctional<S>) -> Result<S> {
    rho.check_dims(f.d())?;
    let mut acc = S::zero();
    for (&m, g) in f.terms() {
        let mut v = bracket_integrate_symmetric(rho, g)?;
        v /= &rising_factorial(rho.theta(), m);
        acc += &v;
    }
    Ok(acc)
}

/// The Palm parameter `rho + delta_{x_1} + ... + delta_{x_k}`.
pub fn palm_shift<S: Scalar>(rho: &FiniteMeasure<S>, points: &[usize]) -> Result<FiniteMeasure<S>> {
    rho.shifted(points)
}

/// `T_{F,n}(x_1..x_n) = E F` under `Di(rho + delta_{x_1} + ... + delta_{x_n})`.
/// The tensor is symmetric, so one Palm expectation per multiset suffices.
pub fn tfn<S: Scalar>(rho: &FiniteMeasure<S>, f: &PolyFunctional<S>, n: usize) -> Result<TensorFn<S>> {
    rho.check_dims(f.d())?;
    let mut err = None;
    let t = TensorFn::from_symmetric_fn(rho.d(), n, |rep| {
        match rho.shifted(rep).and_then(|shifted| expect_poly(&shifted, f)) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                S::zero()
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(t),
    }
}

/// Both sides of the multivariate Mecke equation for the separable
/// integrand `(mu, x) -> G(mu) g(x)`:
/// `E[G zeta^n(g)] = theta^(n)^{-1} int g(x) E_{rho + delta_x} G rho^[n](dx)`.
pub fn mecke_check<S: Scalar>(
    rho: &FiniteMeasure<S>,
    g_fun: &PolyFunctional<S>,
    g: &TensorFn<S>,
    tol: f64,
) -> Result<Comparison<S>> {
    rho.check_dims(g.d())?;
    rho.check_dims(g_fun.d())?;
    let lhs = expect_poly(rho, &g_fun.mul(&PolyFunctional::monomial(g))?)?;
    let mut palm: HashMap<Vec<usize>, S> = HashMap::new();
    let mut err = None;
    let mut rhs = bracket_integrate_fn(rho, g.order(), |idx, flat| {
        let gv = g.get_flat(flat);
        if gv.is_zero() {
            return S::zero();
        }
        let mut key = idx.to_vec();
        key.sort_unstable();
        let e = palm.entry(key).or_insert_with_key(|key| {
            match rho.shifted(key).and_then(|shifted| expect_poly(&shifted, g_fun)) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    S::zero()
                }
            }
        });
        gv.mul_ref(e)
    });
    if let Some(e) = err {
        return Err(e);
    }
    rhs /= &rising_factorial(rho.theta(), g.order());
    Ok(Comparison::new(lhs, rhs, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn unit2() -> FiniteMeasure<Rational> {
        FiniteMeasure::from_ints(&[1, 1]).unwrap()
    }

    #[test]
    fn beta_moments() {
        let rho = unit2();
        assert_eq!(expect_power(&rho, &TensorFn::indicator(2, &[0])).unwrap(), q(1, 2));
        assert_eq!(expect_power(&rho, &TensorFn::indicator(2, &[0, 0])).unwrap(), q(1, 3));
        assert_eq!(expect_power(&rho, &TensorFn::ones(2, 3)).unwrap(), q(1, 1));
        assert_eq!(expect_power(&rho, &TensorFn::scalar(2, q(5, 1))).unwrap(), q(5, 1));
    }

    #[test]
    fn expect_poly_examples() {
        let rho = FiniteMeasure::<Rational>::new(vec![q(1, 2), q(3, 2), q(1, 1)]).unwrap();
        let g = TensorFn::from_fn(3, 1, |i| q(i[0] as i64 * 2 - 1, 3));
        let f = PolyFunctional::linear(&g);
        let expected = rho.integrate(&g).unwrap() / rho.theta().clone();
        assert_eq!(expect_poly(&rho, &f).unwrap(), expected);
        assert_eq!(expect_poly(&rho, &PolyFunctional::constant(3, q(4, 7))).unwrap(), q(4, 7));
        let e0 = PolyFunctional::linear(&TensorFn::indicator(2, &[0]));
        assert_eq!(expect_poly(&unit2(), &e0.mul(&e0).unwrap()).unwrap(), q(1, 3));
    }

    #[test]
    fn tfn_examples() {
        let rho = FiniteMeasure::<Rational>::new(vec![q(1, 2), q(3, 2), q(1, 1)]).unwrap();
        let c = PolyFunctional::constant(3, q(2, 1));
        assert!(tfn(&rho, &c, 2).unwrap().values().iter().all(|v| *v == q(2, 1)));
        let g = TensorFn::from_fn(3, 1, |i| q(i[0] as i64 + 1, 2));
        let f = PolyFunctional::linear(&g);
        let t1 = tfn(&rho, &f, 1).unwrap();
        let rg = rho.integrate(&g).unwrap();
        for x in 0..3 {
            let expected = (rg.clone() + g.get(&[x]).clone()) / (rho.theta().clone() + q(1, 1));
            assert_eq!(t1.get(&[x]), &expected);
        }
        // int T_{F,1} d rho = theta T_{F,0}
        let t0 = tfn(&rho, &f, 0).unwrap();
        assert_eq!(rho.integrate(&t1).unwrap(), rho.theta().clone() * t0.as_scalar().clone());
    }

    #[test]
    fn mecke_examples() {
        let rho = unit2();
        // f(mu, x) = mu({x})
        let g_fun = PolyFunctional::linear(&TensorFn::indicator(2, &[0]));
        let c = mecke_check(&rho, &g_fun, &TensorFn::indicator(2, &[0]), 0.0).unwrap();
        let g_fun1 = PolyFunctional::linear(&TensorFn::indicator(2, &[1]));
        let c1 = mecke_check(&rho, &g_fun1, &TensorFn::indicator(2, &[1]), 0.0).unwrap();
        assert!(c.holds && c1.holds);
        assert_eq!(c.lhs.clone() + c1.lhs.clone(), q(2, 3));
        let one = PolyFunctional::constant(2, q(1, 1));
        let c2 = mecke_check(&rho, &one, &TensorFn::ones(2, 2), 0.0).unwrap();
        assert_eq!((c2.lhs.clone(), c2.rhs.clone()), (q(1, 1), q(1, 1)));
    }
}

//! Gradient, divergence, the generator `L`, its semigroup, the Fleming-Viot
//! operator and the Poincare inequality.

use crate::chaos::{chaos_inner, kernels_general, reconstruct, weighted_kernel_inner, ChaosExpansion};
use crate::combinat::factorial;
use crate::cylinder::CylinderFunction;
use crate::error::{Error, Result};
use crate::field::{campbell_inner, RandomField};
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::scalar::Scalar;
use crate::tensor::TensorFn;

/// Two functionals compared in canonical form on the support of `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalComparison<S> {
    pub lhs: PolyFunctional<S>,
    pub rhs: PolyFunctional<S>,
    pub holds: bool,
}

impl<S: Scalar> FunctionalComparison<S> {
    pub fn new(rho: &FiniteMeasure<S>, lhs: PolyFunctional<S>, rhs: PolyFunctional<S>, tol: f64) -> Self {
        let holds = lhs.same_functional(&rhs, Some(&rho.support()), tol);
        FunctionalComparison { lhs, rhs, holds }
    }
}

/// `nabla_x F = sum_n n (int f_n(x, .) d zeta^(n-1) - zeta^n(f_n))`.
///
/// The result is generally not divergence-ready; see
/// [`RandomField::chaos_form`].
pub fn gradient<S: Scalar>(ce: &ChaosExpansion<S>) -> RandomField<S> {
    let d = ce.d();
    let ones = TensorFn::ones(d, 1);
    let mut terms = Vec::new();
    for (&n, f) in ce.kernels() {
        let c = S::from_usize(n);
        terms.push(f.scale(&c));
        terms.push(ones.outer(f).expect("same dimension").scale(&-c));
    }
    RandomField::new(d, terms).expect("kernels share the dimension")
}

/// Directional derivative of a cylinder function along `(1-t) mu + t delta_x`.
pub fn gradient_pathwise<S: Scalar>(cyl: &CylinderFunction<S>, mu: &SimplexPoint<S>, x: usize) -> Result<S> {
    let d = cyl.d();
    if mu.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: mu.d(),
        });
    }
    if x >= d {
        return Err(Error::AtomOutOfRange { atom: x, d });
    }
    let y = cyl.fs().iter().map(|f| mu.integrate(f)).collect::<Result<Vec<_>>>()?;
    let mut acc = S::zero();
    for (i, f) in cyl.fs().iter().enumerate() {
        let di = cyl.phi().partial(i).eval(&y)?;
        acc += &(di * (f.get(&[x]).clone() - y[i].clone()));
    }
    Ok(acc)
}

/// `delta(H)` for a divergence-ready field, as a functional of `zeta`.
pub fn divergence<S: Scalar>(rho: &FiniteMeasure<S>, h: &RandomField<S>, tol: f64) -> Result<PolyFunctional<S>> {
    rho.check_dims(h.d())?;
    if let Some((order, atom)) = h.first_unready_slice(rho, tol) {
        return Err(Error::FieldNotReady { order, atom });
    }
    let d = h.d();
    let theta = rho.theta();
    let mut terms = Vec::new();
    for (&n, t) in h.terms() {
        terms.push(t.scale(&(theta.clone() + S::from_usize(n))));
        // k(y) = sum_x (rho_x + #{i: y_i = x}) h(x, y)
        let k = TensorFn::from_fn(d, n, |y| {
            let mut acc = S::zero();
            for x in 0..d {
                let mut w = rho.weight(x).clone();
                w += &S::from_usize(y.iter().filter(|&&yi| yi == x).count());
                if w.is_zero() {
                    continue;
                }
                let mut idx = Vec::with_capacity(n + 1);
                idx.push(x);
                idx.extend_from_slice(y);
                acc += &w.mul_ref(t.get(&idx));
            }
            -acc
        });
        terms.push(k);
    }
    PolyFunctional::new(d, terms)
}

/// `LF = -sum_n n (theta + n - 1) zeta^n(f_n)`.
pub fn generator_l<S: Scalar>(rho: &FiniteMeasure<S>, ce: &ChaosExpansion<S>) -> ChaosExpansion<S> {
    let theta = rho.theta().clone();
    ce.map(
        |_| S::zero(),
        |n, f| f.scale(&-eigenvalue(&theta, n)),
    )
}

/// `n (theta + n - 1)`, the eigenvalue of `-L` on the `n`-th chaos.
pub fn eigenvalue<S: Scalar>(theta: &S, n: usize) -> S {
    S::from_usize(n) * (theta.clone() + S::from_usize(n) - S::one())
}

/// Compares `delta(nabla F)` with `-LF`.
pub fn delta_nabla_check<S: Scalar>(
    rho: &FiniteMeasure<S>,
    ce: &ChaosExpansion<S>,
    tol: f64,
) -> Result<FunctionalComparison<S>> {
    let field = gradient(ce).chaos_form(rho)?;
    let lhs = divergence(rho, &field, tol)?;
    let rhs = reconstruct(rho, &generator_l(rho, ce))?.neg();
    Ok(FunctionalComparison::new(rho, lhs, rhs, tol))
}

/// `T_t F`: kernel `n` damped by `exp(-n (theta + n - 1) t)`.
pub fn semigroup(rho: &FiniteMeasure<f64>, ce: &ChaosExpansion<f64>, t: f64) -> Result<ChaosExpansion<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let theta = *rho.theta();
    Ok(ce.map(|c| *c, |n, f| f.scale(&(-eigenvalue(&theta, n) * t).exp())))
}

/// `(Af)(x) = rho(f) - theta f(x)`.
pub fn mutation<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<TensorFn<S>> {
    if f.order() != 1 {
        return Err(Error::InvalidParameter("mutation acts on one-variable functions".into()));
    }
    let m = rho.integrate(f)?;
    Ok(f.map(|v| m.clone() - rho.theta().mul_ref(v)))
}

/// The Fleming-Viot operator `L_rho` applied to a polynomial cylinder
/// function, expanded into a functional.
pub fn flemingviot_generator<S: Scalar>(rho: &FiniteMeasure<S>, cyl: &CylinderFunction<S>) -> Result<PolyFunctional<S>> {
    rho.check_dims(cyl.d())?;
    let d = cyl.d();
    let lin = cyl.linear_parts();
    let half = S::from_ratio(1, 2);
    let mut out = PolyFunctional::zero(d);
    for (i, fi) in cyl.fs().iter().enumerate() {
        let di = cyl.phi().partial(i);
        let drift = PolyFunctional::linear(&mutation(rho, fi)?);
        out = out.add(&di.compose(&lin)?.mul(&drift)?)?;
        for (j, fj) in cyl.fs().iter().enumerate() {
            let dij = di.partial(j);
            if dij.coeffs().is_empty() {
                continue;
            }
            let cov = PolyFunctional::linear(&fi.hadamard(fj)?).sub(&lin[i].mul(&lin[j])?)?;
            out = out.add(&dij.compose(&lin)?.mul(&cov)?)?;
        }
    }
    Ok(out.scale(&half))
}

/// `E int nabla F nabla G d zeta`.
pub fn dirichlet_form<S: Scalar>(rho: &FiniteMeasure<S>, a: &ChaosExpansion<S>, b: &ChaosExpansion<S>) -> Result<S> {
    campbell_inner(rho, &gradient(a), &gradient(b))
}

/// Closed form of the gradient isometry,
/// `sum_n n (theta + n - 1) n! / theta^(2n) rho^[n](f_n g_n)`.
pub fn gradient_isometry_rhs<S: Scalar>(
    rho: &FiniteMeasure<S>,
    a: &ChaosExpansion<S>,
    b: &ChaosExpansion<S>,
) -> Result<S> {
    let theta = rho.theta().clone();
    weighted_kernel_inner(rho, a, b, |n| {
        let mut w = eigenvalue(&theta, n) * factorial::<S>(n);
        w /= &crate::combinat::rising_factorial(&theta, 2 * n);
        w
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareCheck<S> {
    pub variance: S,
    pub energy_over_theta: S,
    pub holds: bool,
    /// Variance and energy bound coincide.
    pub equality: bool,
    /// No kernel of order two or more survives on the support.
    pub first_chaos_only: bool,
    /// `F` is constant, so equality holds with both sides zero.
    pub degenerate: bool,
}

pub fn poincare_check<S: Scalar>(rho: &FiniteMeasure<S>, ce: &ChaosExpansion<S>, tol: f64) -> Result<PoincareCheck<S>> {
    let variance = chaos_inner(rho, ce, ce)? - ce.f0().clone() * ce.f0().clone();
    let mut energy_over_theta = dirichlet_form(rho, ce, ce)?;
    energy_over_theta /= rho.theta();
    let equality = variance.close_to(&energy_over_theta, tol);
    let holds = equality || variance < energy_over_theta;
    let support = rho.support();
    let degenerate = ce.kernels().values().all(|k| k.is_zero_on_support(&support, tol));
    Ok(PoincareCheck {
        first_chaos_only: ce.first_chaos_only(&support, tol),
        variance,
        energy_over_theta,
        holds,
        equality,
        degenerate,
    })
}

/// `2 L_rho F` and `LF` for a cylinder function.
pub fn flemingviot_check<S: Scalar>(
    rho: &FiniteMeasure<S>,
    cyl: &CylinderFunction<S>,
    tol: f64,
) -> Result<FunctionalComparison<S>> {
    let lhs = flemingviot_generator(rho, cyl)?.scale(&S::from_i64(2));
    let ce = kernels_general(rho, &cyl.to_poly()?)?;
    let rhs = reconstruct(rho, &generator_l(rho, &ce))?;
    Ok(FunctionalComparison::new(rho, lhs, rhs, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::Polynomial;
    use crate::law::expect_poly;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn unit2() -> FiniteMeasure<Rational> {
        FiniteMeasure::from_ints(&[1, 1]).unwrap()
    }

    fn zeta_g() -> (TensorFn<Rational>, ChaosExpansion<Rational>) {
        let g = TensorFn::new(2, 1, vec![q(1, 1), q(0, 1)]).unwrap();
        let ce = kernels_general(&unit2(), &PolyFunctional::linear(&g)).unwrap();
        (g, ce)
    }

    #[test]
    fn gradient_of_linear_functional() {
        let (g, ce) = zeta_g();
        let field = gradient(&ce);
        let mu = SimplexPoint::new(vec![q(1, 3), q(2, 3)]).unwrap();
        for x in 0..2 {
            let expected = g.get(&[x]).clone() - q(1, 3);
            assert_eq!(field.eval(&mu, x).unwrap(), expected);
        }
        assert!(field.integral().same_functional(&PolyFunctional::zero(2), None, 0.0));
        assert!(gradient(&ChaosExpansion::constant(2, q(5, 1))).is_zero());
    }

    #[test]
    fn campbell_and_poincare_anchor() {
        let rho = unit2();
        let (_, ce) = zeta_g();
        assert_eq!(dirichlet_form(&rho, &ce, &ce).unwrap(), q(1, 6));
        assert_eq!(gradient_isometry_rhs(&rho, &ce, &ce).unwrap(), q(1, 6));
        let p = poincare_check(&rho, &ce, 0.0).unwrap();
        assert_eq!(p.variance, q(1, 12));
        assert_eq!(p.energy_over_theta, q(1, 12));
        assert!(p.holds && p.equality && p.first_chaos_only && !p.degenerate);
        let c = poincare_check(&rho, &ChaosExpansion::constant(2, q(3, 1)), 0.0).unwrap();
        assert!(c.equality && c.degenerate);
    }

    #[test]
    fn divergence_of_deterministic_field() {
        let rho = FiniteMeasure::<Rational>::from_ints(&[1, 2, 1]).unwrap();
        let h = TensorFn::new(3, 1, vec![q(1, 1), q(-2, 1), q(1, 3)]).unwrap();
        let div = divergence(&rho, &RandomField::deterministic(&h), 0.0).unwrap();
        let expected = PolyFunctional::linear(&h)
            .scale(rho.theta())
            .sub(&PolyFunctional::constant(3, rho.integrate(&h).unwrap()))
            .unwrap();
        assert!(div.same_functional(&expected, None, 0.0));
        assert_eq!(expect_poly(&rho, &div).unwrap(), q(0, 1));
    }

    #[test]
    fn unready_field_is_rejected() {
        let rho = FiniteMeasure::<Rational>::from_ints(&[1, 2, 1]).unwrap();
        let f = TensorFn::from_fn(3, 2, |i| q((i[0] * i[1]) as i64 + i[0] as i64 + i[1] as i64, 1));
        let f2 = crate::chaos::project_to_hn(&rho, &f).unwrap();
        let ce = ChaosExpansion::new(3, q(0, 1), [f2]).unwrap();
        let err = divergence(&rho, &gradient(&ce), 0.0).unwrap_err();
        assert!(matches!(err, Error::FieldNotReady { .. }));
    }

    #[test]
    fn generator_identities_on_linear_functional() {
        let rho = unit2();
        let (g, ce) = zeta_g();
        let lf = reconstruct(&rho, &generator_l(&rho, &ce)).unwrap();
        let expected = PolyFunctional::constant(2, q(1, 1))
            .sub(&PolyFunctional::linear(&g).scale(&q(2, 1)))
            .unwrap();
        assert!(lf.same_functional(&expected, None, 0.0));
        assert!(delta_nabla_check(&rho, &ce, 0.0).unwrap().holds);
        let cyl = CylinderFunction::new(Polynomial::variable(1, 0), vec![g.clone()]).unwrap();
        assert!(flemingviot_check(&rho, &cyl, 0.0).unwrap().holds);
        assert_eq!(
            mutation(&rho, &g).unwrap(),
            TensorFn::new(2, 1, vec![q(-1, 1), q(1, 1)]).unwrap()
        );
    }

    #[test]
    fn pathwise_gradient_matches() {
        let rho = FiniteMeasure::<Rational>::from_ints(&[1, 2, 1]).unwrap();
        let f0 = TensorFn::new(3, 1, vec![q(1, 1), q(0, 1), q(2, 1)]).unwrap();
        let f1 = TensorFn::new(3, 1, vec![q(-1, 2), q(1, 1), q(0, 1)]).unwrap();
        let phi = Polynomial::new(2, [(vec![2, 1], q(1, 1)), (vec![0, 2], q(-3, 1)), (vec![1, 0], q(1, 2))]).unwrap();
        let cyl = CylinderFunction::new(phi, vec![f0, f1]).unwrap();
        let ce = kernels_general(&rho, &cyl.to_poly().unwrap()).unwrap();
        let field = gradient(&ce);
        let mu = SimplexPoint::new(vec![q(1, 4), q(1, 4), q(1, 2)]).unwrap();
        for x in 0..3 {
            assert_eq!(field.eval(&mu, x).unwrap(), gradient_pathwise(&cyl, &mu, x).unwrap());
        }
        assert!(flemingviot_check(&rho, &cyl, 0.0).unwrap().holds);
        assert!(delta_nabla_check(&rho, &ce, 0.0).unwrap().holds);
    }

    #[test]
    fn semigroup_basics() {
        let rho = FiniteMeasure::<f64>::new(vec![1.0, 1.0]).unwrap();
        let (_, ce) = zeta_g();
        let ce = ce.convert(|v| v.to_f64());
        assert_eq!(semigroup(&rho, &ce, 0.0).unwrap(), ce);
        let t1 = semigroup(&rho, &ce, 0.3).unwrap();
        let k = t1.kernel(1).unwrap().get(&[0]);
        assert!((k - 0.5 * (-0.6f64).exp()).abs() < 1e-15);
        assert!(semigroup(&rho, &ce, -1.0).is_err());
    }
}

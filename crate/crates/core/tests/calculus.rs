use dfcalc::bracket::bracket_integrate;
use dfcalc::chaos::{chaos_inner, kernels_general, reconstruct, ChaosExpansion};
use dfcalc::cylinder::{CylinderFunction, Polynomial};
use dfcalc::field::{campbell_inner, RandomField};
use dfcalc::law::expect_poly;
use dfcalc::malliavin::{
    delta_nabla_check, dirichlet_form, divergence, flemingviot_check, flemingviot_generator, generator_l, gradient,
    gradient_pathwise, mutation, poincare_check, semigroup,
};
use dfcalc::random::{random_chaos, random_cylinder, random_hn, random_poly, random_ready_field, random_simplex_point, rng_for};
use dfcalc::{Error, FiniteMeasure, PolyFunctional, Rational, Scalar, SimplexPoint, TensorFn};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn unit2() -> FiniteMeasure<Rational> {
    FiniteMeasure::from_ints(&[1, 1]).unwrap()
}

fn vec1(v: &[Rational]) -> TensorFn<Rational> {
    TensorFn::new(v.len(), 1, v.to_vec()).unwrap()
}

fn rho3() -> FiniteMeasure<Rational> {
    FiniteMeasure::new(vec![q(1, 2), q(3, 2), q(1, 3)]).unwrap()
}

/// `(mu, x) -> g(x) - mu(g)`.
fn centered_field(g: &TensorFn<Rational>) -> RandomField<Rational> {
    let d = g.d();
    let minus = TensorFn::from_fn(d, 2, |i| -g.get(&[i[1]]).clone());
    RandomField::new(d, [g.clone(), minus]).unwrap()
}

fn linear_ce(rho: &FiniteMeasure<Rational>, g: &TensorFn<Rational>) -> ChaosExpansion<Rational> {
    kernels_general(rho, &PolyFunctional::linear(g)).unwrap()
}

#[test]
fn gradient_examples() {
    let rho = rho3();
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let grad = gradient(&linear_ce(&rho, &g));
    assert!(grad.same_field(&centered_field(&g), &rho, 0.0));
    assert!(gradient(&ChaosExpansion::constant(3, q(4, 1))).is_zero());
    let mut rng = rng_for(11, "examples/gradient", 0);
    let ce = random_chaos(&mut rng, &rho, 3).unwrap();
    let total = gradient(&ce).integral();
    assert!(total.same_functional(&PolyFunctional::zero(3), Some(&rho.support()), 0.0));
}

#[test]
fn pathwise_gradient_examples() {
    let rho = rho3();
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let mu = SimplexPoint::new(vec![q(1, 6), q(1, 2), q(1, 3)]).unwrap();
    let id = CylinderFunction::new(Polynomial::variable(1, 0), vec![g.clone()]).unwrap();
    let mean = mu.integrate(&g).unwrap();
    for x in 0..3 {
        assert_eq!(gradient_pathwise(&id, &mu, x).unwrap(), g.get(&[x]).clone() - mean.clone());
    }
    let flat = CylinderFunction::new(Polynomial::constant(1, q(3, 1)), vec![g]).unwrap();
    assert_eq!(gradient_pathwise(&flat, &mu, 1).unwrap(), q(0, 1));

    let mut rng = rng_for(11, "examples/pathwise", 0);
    for _ in 0..5 {
        let cyl = random_cylinder(&mut rng, 3, 2, 3);
        let grad = gradient(&kernels_general(&rho, &cyl.to_poly().unwrap()).unwrap());
        let nu = random_simplex_point(&mut rng, &rho.support());
        for x in 0..3 {
            assert_eq!(gradient_pathwise(&cyl, &nu, x).unwrap(), grad.eval(&nu, x).unwrap());
        }
    }
}

#[test]
fn campbell_examples() {
    let rho = unit2();
    let grad = gradient(&linear_ce(&rho, &vec1(&[q(1, 1), q(0, 1)])));
    assert_eq!(campbell_inner(&rho, &grad, &grad).unwrap(), q(1, 6));
    assert_eq!(campbell_inner(&rho, &RandomField::zero(2), &grad).unwrap(), q(0, 1));
}

#[test]
fn divergence_examples() {
    let rho = rho3();
    let h = vec1(&[q(1, 1), q(-2, 1), q(5, 2)]);
    let delta = divergence(&rho, &RandomField::deterministic(&h), 0.0).unwrap();
    let want = PolyFunctional::linear(&h)
        .scale(rho.theta())
        .sub(&PolyFunctional::constant(3, bracket_integrate(&rho, &h).unwrap()))
        .unwrap();
    assert!(delta.same_functional(&want, Some(&rho.support()), 0.0));
    assert!(divergence(&rho, &RandomField::zero(3), 0.0).unwrap().is_zero());

    let mut rng = rng_for(11, "examples/divergence", 0);
    for _ in 0..4 {
        let field = random_ready_field(&mut rng, &rho, &[0, 1, 2]).unwrap();
        let d = divergence(&rho, &field, 0.0).unwrap();
        assert_eq!(expect_poly(&rho, &d).unwrap(), q(0, 1));
    }
    // a slice outside H_2 is rejected
    let bad = RandomField::new(3, [TensorFn::ones(3, 3)]).unwrap();
    assert!(matches!(divergence(&rho, &bad, 0.0), Err(Error::FieldNotReady { .. })));
}

#[test]
fn generator_examples() {
    let rho = rho3();
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let lf = reconstruct(&rho, &generator_l(&rho, &linear_ce(&rho, &g))).unwrap();
    let want = PolyFunctional::constant(3, bracket_integrate(&rho, &g).unwrap())
        .sub(&PolyFunctional::linear(&g).scale(rho.theta()))
        .unwrap();
    assert!(lf.same_functional(&want, Some(&rho.support()), 0.0));
    assert!(generator_l(&rho, &ChaosExpansion::constant(3, q(1, 1))).kernels().is_empty());

    let mut rng = rng_for(11, "examples/generator", 0);
    let a = random_chaos(&mut rng, &rho, 3).unwrap();
    let b = random_chaos(&mut rng, &rho, 2).unwrap();
    assert_eq!(
        chaos_inner(&rho, &generator_l(&rho, &a), &b).unwrap(),
        chaos_inner(&rho, &a, &generator_l(&rho, &b)).unwrap()
    );
}

#[test]
fn delta_nabla_examples() {
    let rho = rho3();
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let c = delta_nabla_check(&rho, &linear_ce(&rho, &g), 0.0).unwrap();
    assert!(c.holds);
    let want = PolyFunctional::linear(&g)
        .scale(rho.theta())
        .sub(&PolyFunctional::constant(3, bracket_integrate(&rho, &g).unwrap()))
        .unwrap();
    assert!(c.lhs.same_functional(&want, Some(&rho.support()), 0.0));
    let c = delta_nabla_check(&rho, &ChaosExpansion::constant(3, q(2, 1)), 0.0).unwrap();
    assert!(c.holds && c.lhs.is_zero());
    let mut rng = rng_for(11, "examples/delta-nabla", 0);
    for _ in 0..4 {
        let ce = kernels_general(&rho, &random_poly(&mut rng, 3, 3)).unwrap();
        assert!(delta_nabla_check(&rho, &ce, 0.0).unwrap().holds);
    }
}

#[test]
fn semigroup_examples() {
    let rho = FiniteMeasure::new(vec![0.5, 1.5, 1.0 / 3.0]).unwrap();
    let g = TensorFn::new(3, 1, vec![2.0, -1.0, 1.0 / 3.0]).unwrap();
    let ce = kernels_general(&rho, &PolyFunctional::linear(&g)).unwrap();
    assert_eq!(semigroup(&rho, &ce, 0.0).unwrap(), ce);
    let t = 0.3;
    let tt = semigroup(&rho, &ce, t).unwrap();
    let damp = (-rho.theta() * t).exp();
    assert!((tt.f0() - ce.f0()).abs() < 1e-15);
    for (a, b) in tt.kernel(1).unwrap().values().iter().zip(ce.kernel(1).unwrap().values()) {
        assert!((a - damp * b).abs() < 1e-14);
    }
    assert!(matches!(semigroup(&rho, &ce, -1.0), Err(Error::NegativeTime(_))));
}

#[test]
fn mutation_examples() {
    let rho = unit2();
    assert_eq!(mutation(&rho, &vec1(&[q(1, 1), q(0, 1)])).unwrap(), vec1(&[q(-1, 1), q(1, 1)]));
    assert!(mutation(&rho, &vec1(&[q(3, 1), q(3, 1)])).unwrap().is_zero());
    let r3 = rho3();
    let f = vec1(&[q(1, 1), q(-4, 1), q(2, 3)]);
    assert_eq!(bracket_integrate(&r3, &mutation(&r3, &f).unwrap()).unwrap(), q(0, 1));
}

#[test]
fn flemingviot_examples() {
    let rho = rho3();
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let id = CylinderFunction::new(Polynomial::variable(1, 0), vec![g.clone()]).unwrap();
    let lr = flemingviot_generator(&rho, &id).unwrap();
    let want = PolyFunctional::constant(3, bracket_integrate(&rho, &g).unwrap())
        .sub(&PolyFunctional::linear(&g).scale(rho.theta()))
        .unwrap()
        .scale(&q(1, 2));
    assert!(lr.same_functional(&want, Some(&rho.support()), 0.0));
    let flat = CylinderFunction::new(Polynomial::constant(1, q(5, 1)), vec![g]).unwrap();
    assert!(flemingviot_generator(&rho, &flat).unwrap().is_zero());
    let mut rng = rng_for(11, "examples/fv", 0);
    for _ in 0..4 {
        let cyl = random_cylinder(&mut rng, 3, 2, 2);
        assert!(flemingviot_check(&rho, &cyl, 0.0).unwrap().holds);
    }
}

#[test]
fn dirichlet_form_examples() {
    let rho = unit2();
    let ce = linear_ce(&rho, &vec1(&[q(1, 1), q(0, 1)]));
    assert_eq!(dirichlet_form(&rho, &ce, &ce).unwrap(), q(1, 6));
    let r3 = rho3();
    let mut rng = rng_for(11, "examples/form", 0);
    let a = random_chaos(&mut rng, &r3, 3).unwrap();
    let b = random_chaos(&mut rng, &r3, 3).unwrap();
    assert!(dirichlet_form(&r3, &a, &a).unwrap() >= q(0, 1));
    let minus_la = generator_l(&r3, &a).map(|c| -c.clone(), |_, k| k.neg());
    assert_eq!(dirichlet_form(&r3, &a, &b).unwrap(), chaos_inner(&r3, &minus_la, &b).unwrap());
}

#[test]
fn poincare_examples() {
    let rho = unit2();
    let p = poincare_check(&rho, &linear_ce(&rho, &vec1(&[q(1, 1), q(0, 1)])), 0.0).unwrap();
    assert_eq!((p.variance.clone(), p.energy_over_theta.clone()), (q(1, 12), q(1, 12)));
    assert!(p.holds && p.equality && p.first_chaos_only && !p.degenerate);

    let r3 = rho3();
    let mut rng = rng_for(11, "examples/poincare", 0);
    let h2 = random_hn(&mut rng, &r3, 2).unwrap();
    let only2 = ChaosExpansion::new(3, q(1, 1), [h2]).unwrap();
    let p = poincare_check(&r3, &only2, 0.0).unwrap();
    assert!(p.holds && !p.equality);
    let ratio = p.energy_over_theta.clone() / p.variance.clone();
    assert_eq!(ratio, q(2, 1) * (r3.theta().clone() + q(1, 1)) / r3.theta().clone());

    let p = poincare_check(&r3, &ChaosExpansion::constant(3, q(3, 1)), 0.0).unwrap();
    assert!(p.holds && p.equality && p.degenerate);
    assert_eq!(p.variance, q(0, 1));
}

#[test]
fn partial_integration_and_product_rule() {
    let rho = rho3();
    let h = vec1(&[q(1, 1), q(-2, 1), q(5, 2)]);
    let g = vec1(&[q(2, 1), q(-1, 1), q(1, 3)]);
    let zg = PolyFunctional::linear(&g);
    let field = RandomField::deterministic(&h);
    let lhs = expect_poly(&rho, &divergence(&rho, &field, 0.0).unwrap().mul(&zg).unwrap()).unwrap();
    let rhs = campbell_inner(&rho, &field, &gradient(&linear_ce(&rho, &g))).unwrap();
    let direct = PolyFunctional::linear(&h)
        .scale(rho.theta())
        .sub(&PolyFunctional::constant(3, bracket_integrate(&rho, &h).unwrap()))
        .unwrap()
        .mul(&zg)
        .unwrap();
    assert_eq!(lhs, rhs);
    assert_eq!(lhs, expect_poly(&rho, &direct).unwrap());

    // nabla(F^2) = 2 F nabla F for F = zeta(g)
    let sq = kernels_general(&rho, &zg.pow(2).unwrap()).unwrap();
    let want = centered_field(&g).multiply(&zg.scale(&q(2, 1))).unwrap();
    assert!(gradient(&sq).same_field(&want, &rho, 0.0));
}

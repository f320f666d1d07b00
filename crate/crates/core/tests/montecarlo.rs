use dfcalc::chaos::kernels_general;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use dfcalc::malliavin::gradient;
use dfcalc::montecarlo::{
    estimate, CompiledPoly, mc_expect, mc_expect_with, polya_urn, sample_dirichlet, sample_rng, sample_stick_breaking, Sampler,
};
use dfcalc::random::{random_poly, rng_for};
use dfcalc::{FiniteMeasure, PolyFunctional, Rational, Scalar, TensorFn};

fn unit2() -> FiniteMeasure<f64> {
    FiniteMeasure::new(vec![1.0, 1.0]).unwrap()
}

fn first_atom() -> PolyFunctional<f64> {
    PolyFunctional::linear(&TensorFn::new(2, 1, vec![1.0, 0.0]).unwrap())
}

#[test]
fn dirichlet_draws_lie_on_simplex() {
    let rho = FiniteMeasure::new(vec![0.5, 0.0, 2.0, 1.0 / 3.0]).unwrap();
    for i in 0..2000 {
        let p = sample_dirichlet(&rho, &mut sample_rng(1, "simplex", i));
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert_eq!(p.probs()[1], 0.0);
    }
    let single = FiniteMeasure::new(vec![2.5]).unwrap();
    assert_eq!(sample_dirichlet(&single, &mut sample_rng(1, "simplex", 0)).probs(), &[1.0]);
    let degenerate = FiniteMeasure::new(vec![0.0, 1.0]).unwrap();
    assert_eq!(sample_dirichlet(&degenerate, &mut sample_rng(1, "simplex", 0)).probs(), &[0.0, 1.0]);
}

#[test]
fn gamma_sampler_moments() {
    let m1 = mc_expect(&unit2(), &first_atom(), 100_000, 1).unwrap();
    assert!(m1.within(0.5, 4.0), "{m1:?}");
    let m2 = mc_expect(&unit2(), &first_atom().pow(2).unwrap(), 100_000, 1).unwrap();
    assert!(m2.within(1.0 / 3.0, 4.0), "{m2:?}");
    let c = mc_expect(&unit2(), &PolyFunctional::constant(2, -2.5), 100, 1).unwrap();
    assert_eq!((c.mean, c.std_error), (-2.5, 0.0));
}

#[test]
fn stick_breaking_moments_and_truncation() {
    let rho = unit2();
    let sb = Sampler::StickBreaking { trunc: 200 };
    let m2 = mc_expect_with(&rho, &first_atom().pow(2).unwrap(), 100_000, 2, sb).unwrap();
    assert!(m2.within(1.0 / 3.0, 4.0), "{m2:?}");
    let single = FiniteMeasure::new(vec![1.0]).unwrap();
    let draw = sample_stick_breaking(&single, &mut sample_rng(2, "sb", 0), 3).unwrap();
    assert_eq!(draw.point.probs(), &[1.0]);
    // one stick leaves visible mass behind; it is reported
    let leftover = estimate(20_000, 2, "sb/leftover", |rng| {
        Ok(sample_stick_breaking(&rho, rng, 1)?.leftover)
    })
    .unwrap();
    // E[1 - V] = theta / (theta + 1) for V ~ Beta(1, theta)
    assert!(leftover.within(2.0 / 3.0, 4.0), "{leftover:?}");
}

#[test]
fn polya_urn_replicates() {
    let rho = unit2();
    let reps: Vec<f64> = (0..1000)
        .map(|i| polya_urn(&rho, 10_000, &mut sample_rng(3, "urn", i)).unwrap().probs()[0])
        .collect();
    let n = reps.len() as f64;
    let mean = reps.iter().sum::<f64>() / n;
    let var = reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 0.5).abs() <= 4.0 * (var / n).sqrt(), "mean {mean}");
    assert!((var - 1.0 / 12.0).abs() <= 0.05 / 12.0, "variance {var}");
    let single = FiniteMeasure::new(vec![1.0]).unwrap();
    assert_eq!(polya_urn(&single, 5, &mut sample_rng(3, "urn", 0)).unwrap().probs(), &[1.0]);
}

#[test]
fn estimates_are_bit_reproducible() {
    let rho = FiniteMeasure::new(vec![0.5, 1.0, 2.0]).unwrap();
    let f = random_poly(&mut rng_for(1, "mc/repro", 0), 3, 3).convert(|v| v.to_f64());
    let a = mc_expect(&rho, &f, 50_000, 42).unwrap();
    let b = mc_expect(&rho, &f, 50_000, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    let c = mc_expect(&rho, &f, 50_000, 43).unwrap();
    assert_ne!(a.mean.to_bits(), c.mean.to_bits());
}

/// `int nabla_x F zeta(dx)` estimated by drawing `zeta`, then an atom
/// `X ~ zeta`, and averaging `nabla_X F(zeta)`.
#[test]
fn gradient_integral_is_statistically_zero() {
    let rho_q = FiniteMeasure::new(vec![Rational::from_ratio(1, 2), Rational::from_i64(1), Rational::from_ratio(3, 2)])
        .unwrap();
    let mut rng = rng_for(1, "mc/gradient", 0);
    let f = random_poly(&mut rng, 3, 3);
    let grad = gradient(&kernels_general(&rho_q, &f).unwrap());
    let total = grad.integral();
    assert!(total.same_functional(&PolyFunctional::zero(3), None, 0.0));
    let rho = rho_q.convert(|v| v.to_f64());
    let atoms: Vec<CompiledPoly> = grad.atoms().iter().map(|p| CompiledPoly::new(&p.convert(|v| v.to_f64()))).collect();
    let est = estimate(100_000, 5, "gradient/integral", |rng| {
        let zeta = sample_dirichlet(&rho, rng);
        let x = WeightedIndex::new(zeta.probs()).expect("probability vector").sample(rng);
        Ok(atoms[x].eval(zeta.probs()))
    })
    .unwrap();
    assert!(est.std_error > 0.0);
    assert!(est.within(0.0, 4.0), "{est:?}");
}

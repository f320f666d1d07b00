//! The Poincare inequality and its equality case.

use rand::Rng;

use super::{fit, measure_s, to_s, Identity, Outcome, SuiteConfig};
use crate::chaos::{kernels_general, ChaosExpansion};
use crate::malliavin::poincare_check;
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::random::{battery_measure, random_chaos};
use crate::report::VerificationReport;
use crate::scalar::Scalar;
use crate::tensor::TensorFn;

pub fn poincare_suite<S: Scalar>(cfg: &SuiteConfig) -> VerificationReport {
    let id = Identity { suite: "poincare", cfg };
    let tol = cfg.tol::<S>();
    let max = cfg.max_degree.max(1);
    let mut results = Vec::new();

    // Trials alternate between general expansions, first-chaos functionals
    // and constants so both branches of the equality case are exercised.
    let corpus = |rng: &mut rand_chacha::ChaCha8Rng, t: usize| -> crate::error::Result<(FiniteMeasure<S>, ChaosExpansion<S>)> {
        let rq = battery_measure(rng, t, cfg.d);
        let deg = match t % 4 {
            0 => 0,
            1 => 1,
            _ => rng.random_range(2..=fit(rq.d(), max, 2, 1, cfg.budget(), 2).max(2)),
        };
        let ce = random_chaos(rng, &rq, deg)?.convert(to_s::<S>);
        Ok((measure_s(&rq), ce))
    };

    results.extend(id.run(
        "poincare_inequality",
        "Var F <= theta^-1 E int (nabla_x F)^2 zeta(dx)",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = corpus(rng, t)?;
            let p = poincare_check(&rho, &ce, tol)?;
            Ok(Outcome::flag(p.variance, p.energy_over_theta, p.holds))
        },
    ));

    results.extend(id.run(
        "poincare_equality_case",
        "equality in the Poincare inequality iff F = E F + zeta(g)",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = corpus(rng, t)?;
            let p = poincare_check(&rho, &ce, tol)?;
            let label = |b: bool| if b { "equal" } else { "strict" };
            let expected = if p.degenerate { "equal (constant)" } else { label(p.first_chaos_only) };
            Ok(Outcome::flag(label(p.equality), expected, p.equality == p.first_chaos_only))
        },
    ));

    results.extend(id.run(
        "poincare_anchor",
        "rho = (1,1), F = zeta(1_{x_1}): Var F = theta^-1 E int (nabla F)^2 d zeta = 1/12",
        1,
        |_, _| {
            let rho = FiniteMeasure::<S>::new(vec![S::one(), S::one()])?;
            let ce = kernels_general(&rho, &PolyFunctional::linear(&TensorFn::indicator(2, &[0])))?;
            let p = poincare_check(&rho, &ce, tol)?;
            let twelfth = S::from_ratio(1, 12);
            let pass = p.variance.close_to(&twelfth, tol) && p.energy_over_theta.close_to(&twelfth, tol) && p.equality;
            Ok(Outcome::flag(p.variance, p.energy_over_theta, pass))
        },
    ));

    VerificationReport::new("poincare", cfg.params(S::MODE.as_str()), results)
}

//! The semigroup `T_t` in floating point.

use rand::Rng;

use super::{fit, measure_s, Identity, Outcome, SuiteConfig};
use crate::chaos::{chaos_inner, ChaosExpansion};
use crate::malliavin::{generator_l, semigroup};
use crate::random::{battery_measure, random_chaos};
use crate::report::VerificationReport;

/// Relative tolerance of the semigroup checks.
pub const SEMIGROUP_TOL: f64 = 1e-12;
/// Step and tolerance of the finite-difference generator check.
pub const FD_STEP: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-4;

/// Largest absolute entry over the constant and all kernels.
fn sup_norm(ce: &ChaosExpansion<f64>) -> f64 {
    ce.kernels()
        .values()
        .flat_map(|k| k.values().iter())
        .fold(ce.f0().abs(), |m, v| m.max(v.abs()))
}

/// `sup |a - b| / sup |b|`, or the absolute difference when `b` vanishes.
pub fn relative_distance(a: &ChaosExpansion<f64>, b: &ChaosExpansion<f64>) -> f64 {
    let diff = a.map(|c| c - b.f0(), |n, k| match b.kernel(n) {
        Some(bk) => k.sub(bk).expect("same shape"),
        None => k.clone(),
    });
    let mut num = sup_norm(&diff);
    for (n, bk) in b.kernels() {
        if a.kernel(*n).is_none() {
            num = bk.values().iter().fold(num, |m, v| m.max(v.abs()));
        }
    }
    let den = sup_norm(b);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn semigroup_suite(cfg: &SuiteConfig) -> VerificationReport {
    let id = Identity { suite: "semigroup", cfg };
    let max = cfg.max_degree.max(1);
    let mut results = Vec::new();
    let instance = |rng: &mut rand_chacha::ChaCha8Rng, t: usize| {
        let rq = battery_measure(rng, t, cfg.d);
        let deg = fit(rq.d(), max, 1, 0, cfg.budget(), 1);
        random_chaos(rng, &rq, deg).map(|ce| (measure_s::<f64>(&rq), ce.convert(crate::scalar::Scalar::to_f64)))
    };

    results.extend(id.run(
        "semigroup_property",
        "T_s T_t F = T_{s+t} F",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = instance(rng, t)?;
            let s: f64 = rng.random_range(0.0..1.0);
            let u: f64 = rng.random_range(0.0..1.0);
            let lhs = semigroup(&rho, &semigroup(&rho, &ce, u)?, s)?;
            let rhs = semigroup(&rho, &ce, s + u)?;
            let r = relative_distance(&lhs, &rhs);
            Ok(Outcome::flag(format!("{r:e}"), format!("<= {SEMIGROUP_TOL:e}"), r <= SEMIGROUP_TOL))
        },
    ));

    results.extend(id.run(
        "semigroup_contraction",
        "E (T_t F)^2 <= E F^2 and T_0 F = F",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = instance(rng, t)?;
            let s: f64 = rng.random_range(0.0..2.0);
            let lhs = chaos_inner(&rho, &semigroup(&rho, &ce, s)?, &semigroup(&rho, &ce, s)?)?;
            let rhs = chaos_inner(&rho, &ce, &ce)?;
            let pass = lhs <= rhs * (1.0 + SEMIGROUP_TOL) && semigroup(&rho, &ce, 0.0)? == ce;
            Ok(Outcome::flag(lhs, rhs, pass))
        },
    ));

    results.extend(id.run(
        "semigroup_fixes_constants",
        "T_t c = c",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = instance(rng, t)?;
            let s: f64 = rng.random_range(0.0..5.0);
            let c = ChaosExpansion::constant(rho.d(), *ce.f0());
            let out = semigroup(&rho, &c, s)?;
            Ok(Outcome::flag(out.f0(), c.f0(), out == c))
        },
    ));

    results.extend(id.run(
        "semigroup_generator",
        "(T_t F - F)/t -> L F as t -> 0",
        cfg.trials,
        |rng, t| {
            let (rho, ce) = instance(rng, t)?;
            let moved = semigroup(&rho, &ce, FD_STEP)?;
            let slope = moved.map(|c| (c - ce.f0()) / FD_STEP, |n, k| {
                let base = ce.kernel(n).expect("same orders");
                k.sub(base).expect("same shape").scale(&(1.0 / FD_STEP))
            });
            let r = relative_distance(&slope, &generator_l(&rho, &ce));
            Ok(Outcome::flag(format!("{r:e}"), format!("<= {FD_TOL:e}"), r <= FD_TOL))
        },
    ));

    VerificationReport::new("semigroup", cfg.params("float"), results)
}

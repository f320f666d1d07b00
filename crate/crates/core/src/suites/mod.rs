//! Randomized identity batteries. Every trial draws its own instance from a
//! generator keyed by (seed, suite, identity, trial), so reports are
//! reproducible and independent of scheduling.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::Result;
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::random::rng_for;
use crate::report::{IdentityResult, VerificationReport};
use crate::scalar::{Rational, Scalar, DEFAULT_TOL};
use crate::tensor::{TensorFn, DEFAULT_MEMORY_CAP};

pub mod calculus;
pub mod measure;
pub mod orthogonality;
pub mod poincare;
pub mod semigroup;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Largest phase-space size; trials cycle through `2..=d`.
    pub d: usize,
    pub max_degree: usize,
    pub trials: usize,
    pub seed: u64,
    /// Relative tolerance, used in float mode only.
    pub tolerance: f64,
    pub memory_cap: u64,
    /// Perturbs one kernel in the round-trip check so the run must fail.
    pub inject_fault: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            d: 3,
            max_degree: 3,
            trials: 50,
            seed: 1,
            tolerance: DEFAULT_TOL,
            memory_cap: DEFAULT_MEMORY_CAP,
            inject_fault: false,
        }
    }
}

impl SuiteConfig {
    pub fn params(&self, mode: &str) -> BTreeMap<String, serde_json::Value> {
        let mut p = BTreeMap::new();
        p.insert("mode".into(), json!(mode));
        p.insert("d".into(), json!(self.d));
        p.insert("max_degree".into(), json!(self.max_degree));
        p.insert("trials".into(), json!(self.trials));
        p.insert("seed".into(), json!(self.seed));
        if mode == "float" {
            p.insert("tolerance".into(), json!(self.tolerance));
        }
        p.insert("memory_cap".into(), json!(self.memory_cap));
        p
    }

    /// Tolerance handed to comparisons; exact mode ignores it.
    pub(crate) fn tol<S: Scalar>(&self) -> f64 {
        match S::MODE {
            crate::scalar::Mode::Exact => 0.0,
            crate::scalar::Mode::Float => self.tolerance,
        }
    }

    /// Tensor entries a single brute-force integrand may span.
    pub(crate) fn budget(&self) -> u64 {
        self.memory_cap.min(ENTRY_BUDGET)
    }
}

/// Keeps single checks to desk-scale tensor sizes.
pub(crate) const ENTRY_BUDGET: u64 = 20_000;

/// Largest `k <= want` with `d^(mult k + add) <= budget`, at least `min`.
pub(crate) fn fit(d: usize, want: usize, mult: u32, add: u32, budget: u64, min: usize) -> usize {
    let mut k = want;
    while k > min {
        let e = mult * k as u32 + add;
        if (d as u64).checked_pow(e).is_some_and(|v| v <= budget) {
            break;
        }
        k -= 1;
    }
    k
}

pub(crate) struct Outcome {
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl Outcome {
    pub fn scalars<S: Scalar>(lhs: &S, rhs: &S, tol: f64) -> Self {
        Outcome {
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            pass: lhs.close_to(rhs, tol),
        }
    }

    pub fn flag(lhs: impl ToString, rhs: impl ToString, pass: bool) -> Self {
        Outcome {
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            pass,
        }
    }

    /// Functionals compared canonically on the support; the reported values
    /// are both sides evaluated at `probe`.
    pub fn functionals<S: Scalar>(
        rho: &FiniteMeasure<S>,
        lhs: &PolyFunctional<S>,
        rhs: &PolyFunctional<S>,
        probe: &SimplexPoint<S>,
        tol: f64,
    ) -> Result<Self> {
        Ok(Outcome {
            lhs: lhs.eval(probe)?.to_string(),
            rhs: rhs.eval(probe)?.to_string(),
            pass: lhs.same_functional(rhs, Some(&rho.support()), tol),
        })
    }
}

pub(crate) struct Identity<'a> {
    pub suite: &'a str,
    pub cfg: &'a SuiteConfig,
}

impl Identity<'_> {
    /// Runs `trials` independent instances of one identity.
    pub fn run<F>(&self, id: &str, paper_ref: &str, trials: usize, f: F) -> Vec<IdentityResult>
    where
        F: Fn(&mut ChaCha8Rng, usize) -> Result<Outcome> + Sync,
    {
        let key = format!("{}/{}", self.suite, id);
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(self.cfg.seed, &key, t);
                let o = f(&mut rng, t).unwrap_or_else(|e| Outcome::flag(format!("error: {e}"), "", false));
                IdentityResult {
                    identity: id.to_string(),
                    paper_ref: paper_ref.to_string(),
                    lhs: o.lhs,
                    rhs: o.rhs,
                    pass: o.pass,
                    seed: self.cfg.seed,
                    trial: t,
                }
            })
            .collect()
    }
}

pub(crate) fn to_s<S: Scalar>(r: &Rational) -> S {
    S::from_rational(r)
}

pub(crate) fn measure_s<S: Scalar>(rho: &FiniteMeasure<Rational>) -> FiniteMeasure<S> {
    rho.convert(to_s)
}

pub(crate) fn tensor_s<S: Scalar>(t: &TensorFn<Rational>) -> TensorFn<S> {
    t.convert(to_s)
}

pub(crate) fn point_s<S: Scalar>(mu: &SimplexPoint<Rational>) -> SimplexPoint<S> {
    SimplexPoint::new(mu.probs().iter().map(to_s).collect()).expect("converted simplex point")
}

/// All exact-capable suites in mode `S`, followed by the float semigroup
/// suite.
pub fn run_battery<S: Scalar>(cfg: &SuiteConfig) -> Vec<VerificationReport> {
    vec![
        measure::measure_suite::<S>(cfg),
        orthogonality::orthogonality_suite::<S>(cfg),
        calculus::calculus_suite::<S>(cfg),
        poincare::poincare_suite::<S>(cfg),
        semigroup::semigroup_suite(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_respects_budget() {
        assert_eq!(fit(4, 4, 2, 1, 20_000, 1), 3);
        assert_eq!(fit(2, 4, 2, 1, 20_000, 1), 4);
        assert_eq!(fit(10, 4, 2, 1, 20_000, 1), 1);
    }
}

//! Seeded random instances for the identity suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chaos::{project_to_hn, ChaosExpansion};
use crate::cylinder::{CylinderFunction, Polynomial};
use crate::error::Result;
use crate::field::RandomField;
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::scalar::{Rational, Scalar};
use crate::tensor::TensorFn;

/// Total masses cycled through by the battery.
pub const THETAS: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (7, 3)];

pub(crate) fn fnv1a(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Independent generator for one (identity, trial) pair, so results do not
/// depend on evaluation order.
pub fn rng_for(seed: u64, key: &str, trial: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&fnv1a(key).to_le_bytes());
    bytes[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// `p/q` with `p` in `[-5, 5]` and `q` in `[1, 4]`.
pub fn rq<R: Rng>(rng: &mut R) -> Rational {
    Rational::from_ratio(rng.random_range(-5..=5), rng.random_range(1..=4))
}

pub fn random_tensor<R: Rng>(rng: &mut R, d: usize, order: usize) -> TensorFn<Rational> {
    TensorFn::from_fn(d, order, |_| rq(rng))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, d: usize, order: usize) -> TensorFn<Rational> {
    TensorFn::from_symmetric_fn(d, order, |_| rq(rng))
}

/// A random element of `H_n`.
pub fn random_hn<R: Rng>(rng: &mut R, rho: &FiniteMeasure<Rational>, n: usize) -> Result<TensorFn<Rational>> {
    project_to_hn(rho, &random_symmetric(rng, rho.d(), n))
}

pub fn random_poly<R: Rng>(rng: &mut R, d: usize, degree: usize) -> PolyFunctional<Rational> {
    let terms: Vec<_> = (0..=degree).map(|m| random_symmetric(rng, d, m)).collect();
    PolyFunctional::new(d, terms).expect("same dimension")
}

/// A random expansion with kernels of every order in `1..=degree`.
pub fn random_chaos<R: Rng>(
    rng: &mut R,
    rho: &FiniteMeasure<Rational>,
    degree: usize,
) -> Result<ChaosExpansion<Rational>> {
    let kernels = (1..=degree)
        .map(|n| random_hn(rng, rho, n))
        .collect::<Result<Vec<_>>>()?;
    ChaosExpansion::new(rho.d(), rq(rng), kernels)
}

/// A divergence-ready field `h_0(x) + sum_n sum_l a_{n,l}(x) zeta^n(g_{n,l})`
/// with `g_{n,l}` in `H_n`.
pub fn random_ready_field<R: Rng>(
    rng: &mut R,
    rho: &FiniteMeasure<Rational>,
    orders: &[usize],
) -> Result<RandomField<Rational>> {
    let d = rho.d();
    let mut terms = Vec::new();
    for &n in orders {
        if n == 0 {
            terms.push(random_tensor(rng, d, 1));
            continue;
        }
        for _ in 0..2 {
            let a = random_tensor(rng, d, 1);
            terms.push(a.outer(&random_hn(rng, rho, n)?)?);
        }
    }
    RandomField::new(d, terms)
}

pub fn random_cylinder<R: Rng>(rng: &mut R, d: usize, arity: usize, degree: usize) -> CylinderFunction<Rational> {
    let mut coeffs = Vec::new();
    let mut exps = vec![0; arity];
    loop {
        if exps.iter().sum::<usize>() <= degree {
            coeffs.push((exps.clone(), rq(rng)));
        }
        let mut i = 0;
        while i < arity {
            exps[i] += 1;
            if exps[i] <= degree {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == arity {
            break;
        }
    }
    let phi = Polynomial::new(arity, coeffs).expect("matching arity");
    let fs = (0..arity).map(|_| random_tensor(rng, d, 1)).collect();
    CylinderFunction::new(phi, fs).expect("valid cylinder")
}

/// Positive weights with the prescribed total mass; `zero` forces one atom
/// to carry no mass.
pub fn random_measure<R: Rng>(
    rng: &mut R,
    d: usize,
    theta: &Rational,
    zero: Option<usize>,
) -> FiniteMeasure<Rational> {
    let raw: Vec<i64> = (0..d)
        .map(|x| if Some(x) == zero { 0 } else { rng.random_range(1..=4) })
        .collect();
    let total: i64 = raw.iter().sum();
    let weights = raw
        .iter()
        .map(|&w| Rational::from_ratio(w, total) * theta.clone())
        .collect();
    FiniteMeasure::new(weights).expect("positive total mass")
}

/// Dimension, total mass and zero-weight pattern used by battery trial `t`.
pub fn battery_measure<R: Rng>(rng: &mut R, trial: usize, d_max: usize) -> FiniteMeasure<Rational> {
    let d_min = d_max.min(2);
    let d = d_min + trial % (d_max - d_min + 1);
    let (p, q) = THETAS[(trial / 3) % THETAS.len()];
    let zero = (d >= 3 && trial % 5 == 4).then(|| (trial / 5) % d);
    random_measure(rng, d, &Rational::from_ratio(p, q), zero)
}

/// A random rational probability vector carried by `support`.
pub fn random_simplex_point<R: Rng>(rng: &mut R, support: &[bool]) -> SimplexPoint<Rational> {
    let raw: Vec<i64> = support
        .iter()
        .map(|&s| if s { rng.random_range(1..=6) } else { 0 })
        .collect();
    let total: i64 = raw.iter().sum::<i64>().max(1);
    SimplexPoint::new(raw.iter().map(|&w| Rational::from_ratio(w, total)).collect()).expect("normalized")
}

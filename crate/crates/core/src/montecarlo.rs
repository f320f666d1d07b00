//! Samplers for the Dirichlet law on a finite phase space and Monte Carlo
//! estimators checked against exact expectations.
//!
//! Every draw is a pure function of `(seed, sampler, index)`: the generator
//! for sample `i` is a ChaCha8 stream keyed by the seed and the sampler id,
//! positioned on stream `i`. Estimates are therefore independent of thread
//! count and evaluation order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::random::fnv1a;
use crate::tensor::{multiplicity, multisets};

/// Samples per parallel work unit. Partial statistics are merged in chunk
/// order, so the result does not depend on scheduling.
const CHUNK: usize = 4096;

/// Generator for sample `index` of the stream `key` under `seed`.
pub fn sample_rng(seed: u64, key: &str, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&fnv1a(key).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(index);
    rng
}

/// `ln G` for `G ~ Gamma(shape, 1)`, `shape > 0`. Shapes below one use the
/// boost `G = G' U^{1/shape}` with `G' ~ Gamma(shape + 1, 1)`; working in
/// logs keeps tiny shapes from underflowing to zero.
fn log_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = Open01.sample(rng);
        g.ln() + u.ln() / shape
    }
}

/// One draw of `(G_1, ..., G_d) / sum G_i` with independent
/// `G_i ~ Gamma(rho_i, 1)`. Atoms of weight zero get mass exactly zero.
pub fn sample_dirichlet<R: Rng + ?Sized>(rho: &FiniteMeasure<f64>, rng: &mut R) -> SimplexPoint<f64> {
    let logs: Vec<Option<f64>> = rho
        .weights()
        .iter()
        .map(|&w| (w > 0.0).then(|| log_gamma_draw(w, rng)))
        .collect();
    let top = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| l.map_or(0.0, |l| (l - top).exp())).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    SimplexPoint::new(probs).expect("normalized gamma draw")
}

/// A truncated stick-breaking draw together with the mass left on the
/// stick after `trunc` breaks, which was assigned to one extra atom draw.
#[derive(Debug, Clone, PartialEq)]
pub struct StickBreakingDraw {
    pub point: SimplexPoint<f64>,
    pub leftover: f64,
}

/// GEM(theta) weights `V_k prod_{j<k} (1 - V_j)` with `V_k ~ Beta(1, theta)`,
/// each placed on an atom drawn from `rho / theta`. The mass remaining after
/// `trunc` sticks goes to one further `rho / theta` draw.
pub fn sample_stick_breaking<R: Rng + ?Sized>(
    rho: &FiniteMeasure<f64>,
    rng: &mut R,
    trunc: usize,
) -> Result<StickBreakingDraw> {
    if trunc == 0 {
        return Err(Error::InvalidParameter("stick-breaking needs trunc >= 1".into()));
    }
    let atoms = WeightedIndex::new(rho.weights()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let inv_theta = 1.0 / *rho.theta();
    let mut probs = vec![0.0; rho.d()];
    let mut remaining = 1.0f64;
    for _ in 0..trunc {
        // 1 - V for V ~ Beta(1, theta)
        let u: f64 = Open01.sample(rng);
        let keep = u.powf(inv_theta);
        probs[atoms.sample(rng)] += remaining * (1.0 - keep);
        remaining *= keep;
    }
    probs[atoms.sample(rng)] += remaining;
    // absorb rounding in the accumulated stick lengths
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(StickBreakingDraw {
        point: SimplexPoint::new(probs)?,
        leftover: remaining,
    })
}

/// Empirical composition after `steps` draws of a Pólya urn started from
/// `rho`: each draw picks an atom with probability proportional to
/// `rho + counts` and increments its count.
pub fn polya_urn<R: Rng + ?Sized>(rho: &FiniteMeasure<f64>, steps: usize, rng: &mut R) -> Result<SimplexPoint<f64>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("Pólya urn needs steps >= 1".into()));
    }
    let mut mass: Vec<f64> = rho.weights().to_vec();
    let mut counts = vec![0usize; rho.d()];
    let mut total = *rho.theta();
    for _ in 0..steps {
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (x, m) in mass.iter().enumerate() {
            if *m > 0.0 {
                pick = Some(x);
                if u < *m {
                    break;
                }
                u -= m;
            }
        }
        let x = pick.expect("positive total mass");
        mass[x] += 1.0;
        counts[x] += 1;
        total += 1.0;
    }
    SimplexPoint::new(counts.iter().map(|&c| c as f64 / steps as f64).collect())
}

/// Which sampler produces the draws of an estimate. The id keys the random
/// stream, so different samplers never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Gamma,
    StickBreaking { trunc: usize },
    PolyaUrn { steps: usize },
}

impl Sampler {
    pub fn id(&self) -> String {
        match self {
            Sampler::Gamma => "gamma".into(),
            Sampler::StickBreaking { trunc } => format!("stick-breaking/{trunc}"),
            Sampler::PolyaUrn { steps } => format!("polya-urn/{steps}"),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rho: &FiniteMeasure<f64>, rng: &mut R) -> Result<SimplexPoint<f64>> {
        match *self {
            Sampler::Gamma => Ok(sample_dirichlet(rho, rng)),
            Sampler::StickBreaking { trunc } => Ok(sample_stick_breaking(rho, rng, trunc)?.point),
            Sampler::PolyaUrn { steps } => polya_urn(rho, steps, rng),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `(mean - exact) / std_error`; `None` when the error is zero and the
    /// mean is off, since no finite score exists.
    pub fn z_score(&self, exact: f64) -> Option<f64> {
        let diff = self.mean - exact;
        if self.std_error > 0.0 {
            Some(diff / self.std_error)
        } else if diff == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }

    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        self.z_score(exact).is_some_and(|z| z.abs() <= sigmas)
    }

    pub fn report(&self, exact: f64) -> McReport {
        McReport {
            mean: self.mean,
            std_error: self.std_error,
            n: self.n_samples,
            seed: self.seed,
            exact_ref: exact,
            z_score: self.z_score(exact),
        }
    }
}

/// Serialized form of an estimate compared with its exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
    pub exact_ref: f64,
    pub z_score: Option<f64>,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    /// Pairwise merge of two partial results.
    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Moments {
            n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }
}

/// Mean and standard error of `f` over `n_samples` independent draws, the
/// `i`-th using `sample_rng(seed, key, i)`.
pub fn estimate<F>(n_samples: u64, seed: u64, key: &str, f: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK as u64);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            let end = ((c + 1) * CHUNK as u64).min(n_samples);
            for i in c * CHUNK as u64..end {
                m.push(f(&mut sample_rng(seed, key, i))?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = if m.n > 1 { m.m2 / (m.n - 1) as f64 } else { 0.0 };
    Ok(McEstimate {
        mean: m.mean,
        std_error: (var.max(0.0) / m.n as f64).sqrt(),
        n_samples,
        seed,
    })
}

/// A polynomial functional flattened into monomials
/// `c * mu_{x_1} ... mu_{x_m}` for fast float evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    d: usize,
    coeffs: Vec<f64>,
    ends: Vec<usize>,
    atoms: Vec<usize>,
}

impl CompiledPoly {
    pub fn new(f: &PolyFunctional<f64>) -> Self {
        let d = f.d();
        let mut out = CompiledPoly {
            d,
            coeffs: Vec::new(),
            ends: Vec::new(),
            atoms: Vec::new(),
        };
        for (m, t) in f.terms() {
            // terms are symmetric: one monomial per multiset
            for ms in multisets(d, *m) {
                let c = t.get(&ms) * multiplicity(&ms) as f64;
                if c != 0.0 {
                    out.coeffs.push(c);
                    out.atoms.extend_from_slice(&ms);
                    out.ends.push(out.atoms.len());
                }
            }
        }
        out
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut start = 0;
        for (c, &end) in self.coeffs.iter().zip(&self.ends) {
            let mut v = *c;
            for &x in &self.atoms[start..end] {
                v *= p[x];
            }
            acc += v;
            start = end;
        }
        acc
    }
}

/// Monte Carlo estimate of `E F(zeta)` under `zeta ~ Di(rho)` from the
/// gamma sampler.
pub fn mc_expect(rho: &FiniteMeasure<f64>, f: &PolyFunctional<f64>, n_samples: u64, seed: u64) -> Result<McEstimate> {
    mc_expect_with(rho, f, n_samples, seed, Sampler::Gamma)
}

pub fn mc_expect_with(
    rho: &FiniteMeasure<f64>,
    f: &PolyFunctional<f64>,
    n_samples: u64,
    seed: u64,
    sampler: Sampler,
) -> Result<McEstimate> {
    rho.check_dims(f.d())?;
    let poly = CompiledPoly::new(f);
    estimate(n_samples, seed, &sampler.id(), |rng| {
        Ok(poly.eval(sampler.draw(rho, rng)?.probs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::TensorFn;

    fn uniform2() -> FiniteMeasure<f64> {
        FiniteMeasure::new(vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn compiled_poly_matches_contraction() {
        let t = TensorFn::from_fn(3, 2, |i| (i[0] * 3 + i[1]) as f64 - 2.5);
        let f = PolyFunctional::new(3, [TensorFn::scalar(3, 0.5), TensorFn::new(3, 1, vec![1.0, -2.0, 3.0]).unwrap(), t])
            .unwrap();
        let mu = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let c = CompiledPoly::new(&f);
        assert!((c.eval(mu.probs()) - f.eval(&mu).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn single_atom_and_zero_weight() {
        let one = FiniteMeasure::new(vec![0.3]).unwrap();
        let mut rng = sample_rng(1, "t", 0);
        assert_eq!(sample_dirichlet(&one, &mut rng).probs(), &[1.0]);
        assert_eq!(sample_stick_breaking(&one, &mut rng, 5).unwrap().point.probs(), &[1.0]);
        assert_eq!(polya_urn(&one, 10, &mut rng).unwrap().probs(), &[1.0]);
        let zero = FiniteMeasure::new(vec![0.0, 1.0]).unwrap();
        for i in 0..100 {
            let mut rng = sample_rng(2, "t", i);
            assert_eq!(sample_dirichlet(&zero, &mut rng).probs(), &[0.0, 1.0]);
            assert_eq!(polya_urn(&zero, 20, &mut rng).unwrap().probs(), &[0.0, 1.0]);
        }
    }

    #[test]
    fn tiny_shapes_stay_on_simplex() {
        let rho = FiniteMeasure::new(vec![1e-3, 1e-4, 2e-3]).unwrap();
        for i in 0..200 {
            let p = sample_dirichlet(&rho, &mut sample_rng(3, "t", i));
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.probs().iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn constant_functional_has_zero_error() {
        let f = PolyFunctional::constant(2, 1.75);
        let e = mc_expect(&uniform2(), &f, 1000, 4).unwrap();
        assert_eq!(e.mean, 1.75);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn first_two_moments_of_beta() {
        let g = TensorFn::new(2, 1, vec![1.0, 0.0]).unwrap();
        let lin = PolyFunctional::linear(&g);
        let e1 = mc_expect(&uniform2(), &lin, 100_000, 1).unwrap();
        assert!(e1.within(0.5, 4.0), "{e1:?}");
        let e2 = mc_expect(&uniform2(), &lin.pow(2).unwrap(), 100_000, 1).unwrap();
        assert!(e2.within(1.0 / 3.0, 4.0), "{e2:?}");
    }

    #[test]
    fn stick_breaking_reports_leftover() {
        let mut rng = sample_rng(5, "t", 0);
        let draw = sample_stick_breaking(&uniform2(), &mut rng, 1).unwrap();
        assert!(draw.leftover > 0.0 && draw.leftover < 1.0);
        assert!(sample_stick_breaking(&uniform2(), &mut rng, 0).is_err());
    }

    #[test]
    fn estimates_are_reproducible() {
        let g = TensorFn::new(2, 1, vec![0.3, -1.0]).unwrap();
        let f = PolyFunctional::linear(&g).pow(3).unwrap();
        let a = mc_expect(&uniform2(), &f, 10_000, 9).unwrap();
        let b = mc_expect(&uniform2(), &f, 10_000, 9).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.report(0.0).z_score, b.report(0.0).z_score);
    }
}

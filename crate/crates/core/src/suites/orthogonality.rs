//! The spaces `H_n`, orthogonality relations, chaos kernels and covariances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{fit, measure_s, point_s, tensor_s, to_s, Identity, Outcome, SuiteConfig};
use crate::bracket::bracket_integrate_fn;
use crate::chaos::{
    chaos_inner, covariance_chaos, covariance_power, covariance_power_compositions, is_in_hn_tol, kernels_general,
    kernels_monomial, reconstruct,
};
use crate::combinat::{distinct_tuples, factorial, rising_factorial};
use crate::error::Result;
use crate::law::expect_poly;
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::random::{battery_measure, random_hn, random_poly, random_simplex_point, random_tensor};
use crate::report::VerificationReport;
use crate::scalar::{Rational, Scalar};
use crate::tensor::TensorFn;

fn br<S: Scalar>(rho: &FiniteMeasure<S>, n: usize, mut f: impl FnMut(&[usize]) -> S) -> S {
    bracket_integrate_fn(rho, n, |z, _| f(z))
}

fn cat(parts: &[&[usize]]) -> Vec<usize> {
    parts.concat()
}

/// Two orders in `1..=max`, equal about half the time, with `d^(m+n+extra)`
/// within budget.
fn pick_pair(rng: &mut ChaCha8Rng, d: usize, max: usize, extra: u32, budget: u64) -> (usize, usize) {
    let mut m = rng.random_range(1..=max);
    let mut n = if rng.random_bool(0.5) { m } else { rng.random_range(1..=max) };
    while m + n > 2 && (d as u64).pow((m + n) as u32 + extra) > budget {
        if m >= n && m > 1 {
            m -= 1;
        } else {
            n -= 1;
        }
        if rng.random_bool(0.5) && m > 1 && n > 1 {
            m -= 1;
            n -= 1;
        }
    }
    (m, n)
}

fn random_hn_s<S: Scalar>(rng: &mut ChaCha8Rng, rho: &FiniteMeasure<Rational>, n: usize) -> Result<TensorFn<S>> {
    Ok(tensor_s(&random_hn(rng, rho, n)?))
}

/// `sum_l a_l(first) b_l(rest)`: two random rank-one terms.
struct Split<S> {
    a: Vec<TensorFn<S>>,
    b: Vec<TensorFn<S>>,
}

impl<S: Scalar> Split<S> {
    fn eval(&self, first: &[usize], rest: &[usize]) -> S {
        let mut acc = S::zero();
        for (a, b) in self.a.iter().zip(&self.b) {
            acc += &a.get(first).mul_ref(b.get(rest));
        }
        acc
    }
}

pub fn orthogonality_suite<S: Scalar>(cfg: &SuiteConfig) -> VerificationReport {
    let id = Identity { suite: "orthogonality", cfg };
    let tol = cfg.tol::<S>();
    let budget = cfg.budget();
    let trials = cfg.trials;
    let max = cfg.max_degree.max(1);
    let mut results = Vec::new();

    results.extend(id.run(
        "hn_orthogonality",
        "int g(x) h(y) rho^[m+n](d(x,y)) = 1{m=n} n! int g h d rho^[n] for g in H_m, h in H_n",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let (m, n) = pick_pair(rng, rho.d(), max, 0, budget);
            let g = random_hn_s::<S>(rng, &rq, m)?;
            let h = random_hn_s::<S>(rng, &rq, n)?;
            let lhs = br(&rho, m + n, |z| g.get(&z[..m]).mul_ref(h.get(&z[m..])));
            let rhs = if m == n {
                br(&rho, n, |z| g.get(z).mul_ref(h.get(z))) * factorial::<S>(n)
            } else {
                S::zero()
            };
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "chaos_orthogonality",
        "E[zeta^m(g) zeta^n(h)] = 1{m=n} n!/theta^(2n) int g h d rho^[n]",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let (m, n) = pick_pair(rng, rho.d(), max, 0, budget);
            let g = random_hn_s::<S>(rng, &rq, m)?;
            let h = random_hn_s::<S>(rng, &rq, n)?;
            let lhs = expect_poly(&rho, &PolyFunctional::monomial(&g).mul(&PolyFunctional::monomial(&h))?)?;
            let rhs = if m == n {
                let mut v = br(&rho, n, |z| g.get(z).mul_ref(h.get(z))) * factorial::<S>(n);
                v /= &rising_factorial(rho.theta(), 2 * n);
                v
            } else {
                S::zero()
            };
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "centered_slice_reduction",
        "int f(x_m, y_r, y_n) rho^[m+n] = sum over distinct i_1..i_{n-r} in [m] of int f(x_m, y_r, y_r, x_i) rho^[m+r]; zero if m < n-r",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let d = rho.d();
            let mut n = rng.random_range(1..=max.min(3));
            let mut m = rng.random_range(0..=3usize);
            while m + n > 2 && (d as u64).pow((m + n) as u32) > budget {
                if m > 0 {
                    m -= 1;
                } else {
                    n -= 1;
                }
            }
            let r = rng.random_range(0..n);
            let f = Split::<S> {
                a: (0..2).map(|_| tensor_s(&random_tensor(rng, d, m + r))).collect(),
                b: (0..2).map(|_| random_hn_s(rng, &rq, n)).collect::<Result<_>>()?,
            };
            let lhs = br(&rho, m + n, |z| {
                let (x, y) = z.split_at(m);
                f.eval(&cat(&[x, &y[..r]]), y)
            });
            let mut rhs = S::zero();
            if m + r >= n {
                for i in distinct_tuples(m, n - r) {
                    rhs += &br(&rho, m + r, |z| {
                        let (x, y) = z.split_at(m);
                        let xi: Vec<usize> = i.iter().map(|&j| x[j]).collect();
                        f.eval(z, &cat(&[y, &xi]))
                    });
                }
            }
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "mixed_order_orthogonality",
        "int g(y_n) h(x_{l-k}, y_k) rho^[l+n-k] = 1{l=n} (n-k)! int g h d rho^[n] for g in H_n, n >= l >= k",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let d = rho.d();
            let (a, b) = pick_pair(rng, d, max, 0, budget);
            let (n, l) = (a.max(b), a.min(b));
            let k = rng.random_range(0..=l);
            let g = random_hn_s::<S>(rng, &rq, n)?;
            let h = tensor_s::<S>(&random_tensor(rng, d, l));
            let lhs = br(&rho, l + n - k, |z| {
                let (x, y) = z.split_at(l - k);
                g.get(y).mul_ref(h.get(&cat(&[x, &y[..k]])))
            });
            let rhs = if l == n {
                br(&rho, n, |z| g.get(z).mul_ref(h.get(z))) * factorial::<S>(n - k)
            } else {
                S::zero()
            };
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    // f(x_1..x_{m+n+1}) = sum_l a_l(x_1..x_m) c_l(x_{m+1}) b_l(x_{m+2}..), a_l in H_m, b_l in H_n
    let two_sided = |rng: &mut ChaCha8Rng, t: usize, extra: u32| -> Result<(FiniteMeasure<S>, usize, usize, TwoSided<S>)> {
        let rq = battery_measure(rng, t, cfg.d);
        let rho = measure_s::<S>(&rq);
        let (m, n) = pick_pair(rng, rho.d(), max, extra, budget);
        let mut f = TwoSided { m, a: vec![], c: vec![], b: vec![] };
        for _ in 0..2 {
            f.a.push(random_hn_s(rng, &rq, m)?);
            f.c.push(tensor_s(&random_tensor(rng, rho.d(), 1)));
            f.b.push(random_hn_s(rng, &rq, n)?);
        }
        Ok((rho, m, n, f))
    };

    results.extend(id.run(
        "two_sided_centering",
        "int f d rho^[m+n+1] for f centered in its first m and last n arguments",
        trials,
        |rng, t| {
            let (rho, m, n, f) = two_sided(rng, t, 1)?;
            let lhs = br(&rho, m + n + 1, |z| f.eval(z));
            let mut rhs = S::zero();
            if m == n + 1 {
                rhs += &(factorial::<S>(m) * br(&rho, m, |x| f.eval(&cat(&[x, &[x[m - 1]], &x[..m - 1]]))));
            }
            if m == n {
                let diag = br(&rho, m, |x| f.eval(&cat(&[x, &[x[m - 1]], x]))) * S::from_usize(m);
                let off = br(&rho, m + 1, |x| f.eval(&cat(&[x, &x[..m]])));
                rhs += &(factorial::<S>(m) * (diag + off));
            }
            if m + 1 == n {
                rhs += &(factorial::<S>(m + 1) * br(&rho, m + 1, |x| f.eval(&cat(&[x, x]))));
            }
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "two_sided_centering_diagonal",
        "int f(x_1..x_{m+1}, x_{m+1}..x_{m+n}) rho^[m+n] for f centered in its first m and last n arguments",
        trials,
        |rng, t| {
            let (rho, m, n, f) = two_sided(rng, t, 0)?;
            let lhs = br(&rho, m + n, |x| f.eval(&cat(&[&x[..m + 1], &[x[m]], &x[m + 1..]])));
            let mut rhs = S::zero();
            if m + 1 == n {
                rhs += &(factorial::<S>(m) * br(&rho, m + 1, |x| f.eval(&cat(&[x, x]))));
            }
            if m == n {
                rhs += &(factorial::<S>(m) * br(&rho, m, |x| f.eval(&cat(&[x, &[x[m - 1]], x]))));
            }
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "centered_field_orthogonality",
        "int int h(x, x_m) f(y_n) (rho + delta_{x_1} + ... + delta_{x_m})(dx) rho^[m+n] for f in H_n, h(x, .) in H_m",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let d = rho.d();
            let (m, n) = pick_pair(rng, d, max, 1, budget);
            let fh = random_hn_s::<S>(rng, &rq, n)?;
            let h = Split::<S> {
                a: (0..2).map(|_| tensor_s(&random_tensor(rng, d, 1))).collect(),
                b: (0..2).map(|_| random_hn_s(rng, &rq, m)).collect::<Result<_>>()?,
            };
            let lhs = br(&rho, m + n, |z| {
                let (x, y) = z.split_at(m);
                let mut s = S::zero();
                for a in 0..d {
                    let w = rho.weight(a).clone() + S::from_usize(x.iter().filter(|&&v| v == a).count());
                    s += &w.mul_ref(&h.eval(&[a], x));
                }
                s * fh.get(y).clone()
            });
            let mut rhs = S::zero();
            if m == n {
                rhs += &(factorial::<S>(m) * br(&rho, m + 1, |x| h.eval(&[x[m]], &x[..m]) * fh.get(&x[..m]).clone()));
            }
            if m == n + 1 {
                rhs += &(factorial::<S>(m) * br(&rho, m, |x| h.eval(&[x[m - 1]], x) * fh.get(&x[..m - 1]).clone()));
            }
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "chaos_round_trip",
        "F = E F + sum_n zeta^n(f_n) with f_n = (theta+2n-1)/n! sum_j (-1)^(n-j) (theta+j)^(n-1) sum_{|I|=j} T_{F,j}(x_I)",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let deg = fit(rho.d(), max, 1, 0, budget, 1);
            let f = random_poly(rng, rho.d(), deg).convert(to_s::<S>);
            let probe = point_s::<S>(&random_simplex_point(rng, &rho.support()));
            let mut ce = kernels_general(&rho, &f)?;
            if cfg.inject_fault {
                let two = S::from_i64(2);
                ce = ce.map(|c| c.clone(), |_, k| k.scale(&two));
            }
            Outcome::functionals(&rho, &reconstruct(&rho, &ce)?, &f, &probe, tol)
        },
    ));

    results.extend(id.run(
        "kernel_routes_agree",
        "kernels of zeta^m(f) from Palm expectations agree with the Dirac-addition formula",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let m = rng.random_range(1..=fit(rho.d(), max, 1, 0, budget, 1));
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), m));
            let a = kernels_monomial(&rho, &f)?;
            let b = kernels_general(&rho, &PolyFunctional::monomial(&f))?;
            let pass = a.same_on_support(&b, &rho.support(), tol);
            Ok(Outcome::flag(a.f0(), b.f0(), pass))
        },
    ));

    results.extend(id.run(
        "kernels_in_hn",
        "every kernel f_n is symmetric and conditionally centered",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let deg = fit(rho.d(), max, 1, 0, budget, 1);
            let ce = kernels_general(&rho, &random_poly(rng, rho.d(), deg).convert(to_s::<S>))?;
            let ok = ce.kernels().values().filter(|k| is_in_hn_tol(&rho, k, tol)).count();
            Ok(Outcome::flag(ok, ce.kernels().len(), ok == ce.kernels().len()))
        },
    ));

    results.extend(id.run(
        "chaos_isometry",
        "E F G = E F E G + sum_n n!/theta^(2n) int f_n g_n d rho^[n]",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let deg = fit(rho.d(), max, 2, 0, budget, 1);
            let f = random_poly(rng, rho.d(), deg).convert(to_s::<S>);
            let g = random_poly(rng, rho.d(), deg).convert(to_s::<S>);
            let lhs = chaos_inner(&rho, &kernels_general(&rho, &f)?, &kernels_general(&rho, &g)?)?;
            Ok(Outcome::scalars(&lhs, &expect_poly(&rho, &f.mul(&g)?)?, tol))
        },
    ));

    results.extend(id.run(
        "orthogonal_projection",
        "zeta^n(f_n) is the orthogonal projection of zeta^m(f) onto the n-th chaos",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let (m, n) = pick_pair(rng, rho.d(), max, 0, budget);
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), m));
            let g = PolyFunctional::monomial(&random_hn_s::<S>(rng, &rq, n)?);
            let lhs = expect_poly(&rho, &PolyFunctional::monomial(&f).mul(&g)?)?;
            let rhs = match kernels_monomial(&rho, &f)?.kernel(n) {
                Some(fn_) => expect_poly(&rho, &PolyFunctional::monomial(fn_).mul(&g)?)?,
                None => S::zero(),
            };
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    let brute_cov = |rho: &FiniteMeasure<S>, h: &TensorFn<S>, prod: &TensorFn<S>| -> Result<S> {
        let a = PolyFunctional::monomial(h);
        let b = PolyFunctional::monomial(prod);
        Ok(expect_poly(rho, &a.mul(&b)?)? - expect_poly(rho, &a)? * expect_poly(rho, &b)?)
    };
    let cov_shape = |rng: &mut ChaCha8Rng, d: usize| -> (usize, usize) {
        let k = rng.random_range(1..=max.min(3));
        let mut m = rng.random_range(1..=3usize);
        while m > 1 && (d as u64).pow((k + m) as u32) > budget {
            m -= 1;
        }
        (k, m)
    };

    results.extend(id.run(
        "covariance_chaos",
        "Cov(zeta^k(h), zeta^m(h_1 ⊗ ... ⊗ h_m)) as a sum over ordered selections i_1..i_r of int h f^k_{⊗ i_1..i_r} d rho^[k]",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let (k, m) = cov_shape(rng, rho.d());
            let h = random_hn_s::<S>(rng, &rq, k)?;
            let hs: Vec<TensorFn<S>> = (0..m).map(|_| tensor_s(&random_tensor(rng, rho.d(), 1))).collect();
            let prod = hs[1..].iter().try_fold(hs[0].clone(), |acc, f| acc.outer(f))?;
            Ok(Outcome::scalars(&covariance_chaos(&rho, &h, &hs)?, &brute_cov(&rho, &h, &prod)?, tol))
        },
    ));

    results.extend(id.run(
        "covariance_power",
        "Cov(zeta^k(h), zeta(f)^m) as a sum over compositions j_1 + ... + j_k = r with j_i >= 1",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let (k, m) = cov_shape(rng, rho.d());
            let h = random_hn_s::<S>(rng, &rq, k)?;
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), 1));
            let prod = (1..m).try_fold(f.clone(), |acc, _| acc.outer(&f))?;
            Ok(Outcome::scalars(
                &covariance_power_compositions(&rho, &h, &f, m)?,
                &brute_cov(&rho, &h, &prod)?,
                tol,
            ))
        },
    ));

    results.extend(id.run(
        "covariance_second_chaos",
        "Cov(zeta^2(h), zeta(f)^m) split into a diagonal term with coefficient (r-1) and an integral against rho ⊗ rho",
        trials,
        |rng, t| {
            let rq = battery_measure(rng, t, cfg.d);
            let rho = measure_s::<S>(&rq);
            let m = rng.random_range(1..=fit(rho.d(), 4, 1, 2, budget, 1));
            let h = random_hn_s::<S>(rng, &rq, 2)?;
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), 1));
            let prod = (1..m).try_fold(f.clone(), |acc, _| acc.outer(&f))?;
            let split = covariance_power(&rho, &h, &f, m)?;
            let general = covariance_power_compositions(&rho, &h, &f, m)?;
            let mut o = Outcome::scalars(&split, &brute_cov(&rho, &h, &prod)?, tol);
            o.pass &= split.close_to(&general, tol);
            Ok(o)
        },
    ));

    VerificationReport::new("orthogonality", cfg.params(S::MODE.as_str()), results)
}

struct TwoSided<S> {
    m: usize,
    a: Vec<TensorFn<S>>,
    c: Vec<TensorFn<S>>,
    b: Vec<TensorFn<S>>,
}

impl<S: Scalar> TwoSided<S> {
    fn eval(&self, z: &[usize]) -> S {
        let m = self.m;
        let mut acc = S::zero();
        for l in 0..self.a.len() {
            let mut v = self.a[l].get(&z[..m]).mul_ref(self.c[l].get(&z[m..m + 1]));
            v *= self.b[l].get(&z[m + 1..]);
            acc += &v;
        }
        acc
    }
}


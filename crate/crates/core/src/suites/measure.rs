//! Bracket measures, Dirac-addition expansions and the Mecke equation.

use rand::Rng;

use super::{fit, measure_s, tensor_s, to_s, Identity, Outcome, SuiteConfig};
use crate::bracket::{
    add_diracs_expand, bracket_integrate, bracket_integrate_symmetric, bracket_materialize, bracket_weight,
    moment_partition_formula, rising_sum_identity,
};
use crate::combinat::rising_factorial;
use crate::law::{expect_poly, mecke_check, tfn};
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::random::{battery_measure, random_poly, random_symmetric, random_tensor, THETAS};
use crate::report::VerificationReport;
use crate::scalar::{Rational, Scalar};
use crate::tensor::{for_each_index, TensorFn};

fn slice_prefix<S: Scalar>(f: &TensorFn<S>, prefix: &[usize]) -> TensorFn<S> {
    prefix.iter().fold(f.clone(), |t, &x| t.slice_first(x))
}

pub fn measure_suite<S: Scalar>(cfg: &SuiteConfig) -> VerificationReport {
    let id = Identity { suite: "measure", cfg };
    let tol = cfg.tol::<S>();
    let budget = cfg.budget();
    let trials = cfg.trials;
    let max = cfg.max_degree.max(1);
    let mut results = Vec::new();

    results.extend(id.run(
        "bracket_total_mass",
        "rho^[n](X^n) = theta^(n)",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let n = rng.random_range(0..=fit(rho.d(), max + 1, 1, 0, budget, 0));
            let m = bracket_materialize(&rho, n, cfg.memory_cap)?;
            let mut total = S::zero();
            for v in m.values() {
                total += v;
            }
            Ok(Outcome::scalars(&total, &rising_factorial(rho.theta(), n), tol))
        },
    ));

    results.extend(id.run(
        "bracket_materialized_contraction",
        "sum_x rho^[n]({x}) f(x) = rho^[n](f), with rho^[n] permutation-symmetric",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let n = rng.random_range(1..=fit(rho.d(), max + 1, 1, 0, budget, 1));
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), n));
            let m = bracket_materialize(&rho, n, cfg.memory_cap)?;
            let mut lhs = S::zero();
            for (a, b) in m.values().iter().zip(f.values()) {
                lhs += &a.mul_ref(b);
            }
            let mut o = Outcome::scalars(&lhs, &bracket_integrate(&rho, &f)?, tol);
            o.pass &= m.close_on_support(&m.symmetrize(), &vec![true; rho.d()], tol);
            Ok(o)
        },
    ));

    results.extend(id.run(
        "bracket_multiset_route",
        "rho^[n](f) for symmetric f as a sum over multisets",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let n = rng.random_range(0..=fit(rho.d(), max + 1, 1, 0, budget, 0));
            let f = tensor_s::<S>(&random_symmetric(rng, rho.d(), n));
            Ok(Outcome::scalars(
                &bracket_integrate_symmetric(&rho, &f)?,
                &bracket_integrate(&rho, &f)?,
                tol,
            ))
        },
    ));

    results.extend(id.run(
        "dirac_addition_expansion",
        "(rho + delta_{x_1} + ... + delta_{x_k})^[m](f) = sum_r sum_{i_1..i_r} sum_{l_1<=..<=l_r} rho^[m-r](f_{i_1..i_r}(x_{l_1},..,x_{l_r}, .))",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let m = rng.random_range(1..=fit(rho.d(), max, 1, 0, budget, 1));
            let k = rng.random_range(1..=3);
            let points: Vec<usize> = (0..k).map(|_| rng.random_range(0..rho.d())).collect();
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), m));
            Ok(Outcome::scalars(
                &add_diracs_expand(&rho, &f, &points)?,
                &bracket_integrate(&rho.shifted(&points)?, &f)?,
                tol,
            ))
        },
    ));

    results.extend(id.run(
        "bracket_recursion",
        "rho^[m+n](B) = int int 1_B (rho + delta_{x_1} + ... + delta_{x_m})^[n](dy) rho^[m](dx)",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let total = fit(rho.d(), 5, 1, 0, budget, 2).max(2);
            let m = rng.random_range(1..total);
            let n = total - m;
            let f = tensor_s::<S>(&random_tensor(rng, rho.d(), m + n));
            let mut rhs = S::zero();
            let mut err = None;
            for_each_index(rho.d(), m, |x| {
                let w = bracket_weight(&rho, x);
                if w.is_zero() || err.is_some() {
                    return;
                }
                match add_diracs_expand(&rho, &slice_prefix(&f, x), x) {
                    Ok(v) => rhs += &w.mul_ref(&v),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(Outcome::scalars(&bracket_integrate(&rho, &f)?, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "ethier_partition_formula",
        "rho^[m](f_1 ⊗ ... ⊗ f_m) = sum over set partitions of prod (|I|-1)! rho(prod_{k in I} f_k)",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let m = rng.random_range(1..=fit(rho.d(), 5, 1, 0, budget, 1));
            let fs: Vec<TensorFn<S>> = (0..m).map(|_| tensor_s(&random_tensor(rng, rho.d(), 1))).collect();
            let prod = fs[1..]
                .iter()
                .try_fold(fs[0].clone(), |acc, f| acc.outer(f))?;
            Ok(Outcome::scalars(
                &moment_partition_formula(&rho, &fs)?,
                &bracket_integrate(&rho, &prod)?,
                tol,
            ))
        },
    ));

    // Deterministic sweep over every listed total mass, 2 <= m <= 8, 1 <= j < m.
    let sweep: Vec<(Rational, usize, usize)> = THETAS
        .iter()
        .flat_map(|&(p, q)| {
            (2..=8usize).flat_map(move |m| (1..m).map(move |j| (Rational::from_ratio(p, q), m, j)))
        })
        .collect();
    results.extend(id.run(
        "rising_factorial_sum",
        "sum_{n=j}^m (-1)^(n-j) (theta+2n-1)/(n-j)! (theta+j)^(n-1) = (-1)^(m-j) (theta+j)^(m)/(m-j)!",
        sweep.len(),
        |_, t| {
            let (theta, m, j) = &sweep[t];
            let c = rising_sum_identity(&to_s::<S>(theta), *m, *j, tol)?;
            Ok(Outcome::flag(&c.lhs, &c.rhs, c.holds))
        },
    ));

    results.extend(id.run(
        "mecke_equation",
        "E int f(zeta, x) zeta^n(dx) = theta^(n)^-1 E int f(zeta_{rho+delta_x}, x) rho^[n](dx)",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let deg = rng.random_range(0..=max.min(3));
            let n = rng.random_range(1..=fit(rho.d(), 3, 1, 0, budget, 1));
            let g_fun = random_poly(rng, rho.d(), deg).convert(to_s::<S>);
            let g = tensor_s::<S>(&random_tensor(rng, rho.d(), n));
            let c = mecke_check(&rho, &g_fun, &g, tol)?;
            Ok(Outcome::flag(&c.lhs, &c.rhs, c.holds))
        },
    ));

    results.extend(id.run(
        "palm_expectation_recursion",
        "int T_{F,k}(x_1..x_{k-1}, x) (rho + delta_{x_1} + ... + delta_{x_{k-1}})(dx) = (theta+k-1) T_{F,k-1}(x_1..x_{k-1})",
        trials,
        |rng, t| {
            let rho = measure_s::<S>(&battery_measure(rng, t, cfg.d));
            let k = rng.random_range(1..=max.min(4));
            let f = random_poly(rng, rho.d(), max).convert(to_s::<S>);
            palm_recursion(&rho, &f, k, tol)
        },
    ));

    results.extend(id.run(
        "moment_anchor",
        "Di(1,1): E zeta_1 = 1/2, E zeta_1^2 = 1/3, Var zeta_1 = 1/12",
        1,
        |_, _| {
            let rho = FiniteMeasure::<S>::new(vec![S::one(), S::one()])?;
            let e1 = TensorFn::<S>::indicator(2, &[0]);
            let m1 = expect_poly(&rho, &PolyFunctional::linear(&e1))?;
            let m2 = expect_poly(&rho, &PolyFunctional::monomial(&e1.outer(&e1)?))?;
            let var = m2.clone() - m1.clone() * m1.clone();
            let lhs = vec![m1, m2, var];
            let rhs = [S::from_ratio(1, 2), S::from_ratio(1, 3), S::from_ratio(1, 12)];
            let pass = lhs.iter().zip(&rhs).all(|(a, b)| a.close_to(b, tol));
            let fmt = |v: &[S]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            Ok(Outcome::flag(fmt(&lhs), fmt(&rhs), pass))
        },
    ));

    VerificationReport::new("measure", cfg.params(S::MODE.as_str()), results)
}

fn palm_recursion<S: Scalar>(
    rho: &FiniteMeasure<S>,
    f: &PolyFunctional<S>,
    k: usize,
    tol: f64,
) -> crate::error::Result<Outcome> {
    let d = rho.d();
    let support = rho.support();
    let tk = tfn(rho, f, k)?;
    let tk1 = tfn(rho, f, k - 1)?;
    let factor = rho.theta().clone() + S::from_usize(k - 1);
    let (mut lsum, mut rsum, mut pass) = (S::zero(), S::zero(), true);
    for_each_index(d, k - 1, |y| {
        if y.iter().any(|&a| !support[a]) {
            return;
        }
        let mut lhs = S::zero();
        let mut idx = y.to_vec();
        idx.push(0);
        for x in 0..d {
            let w = rho.weight(x).clone() + S::from_usize(y.iter().filter(|&&a| a == x).count());
            idx[k - 1] = x;
            lhs += &w.mul_ref(tk.get(&idx));
        }
        let rhs = factor.mul_ref(tk1.get(y));
        pass &= lhs.close_to(&rhs, tol);
        lsum += &lhs;
        rsum += &rhs;
    });
    Ok(Outcome::flag(lsum, rsum, pass))
}

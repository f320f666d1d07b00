//! Gradient, divergence, generator and the calculus rules.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{fit, measure_s, point_s, tensor_s, to_s, Identity, Outcome, SuiteConfig};
use crate::bracket::bracket_integrate_fn;
use crate::chaos::{chaos_inner, kernels_general, reconstruct, ChaosExpansion};
use crate::combinat::{factorial, rising_factorial};
use crate::error::Result;
use crate::field::{campbell_inner, RandomField};
use crate::law::expect_poly;
use crate::malliavin::{
    delta_nabla_check, dirichlet_form, divergence, flemingviot_check, generator_l, gradient, gradient_isometry_rhs,
    gradient_pathwise,
};
use crate::measure::{FiniteMeasure, SimplexPoint};
use crate::poly::PolyFunctional;
use crate::random::{
    battery_measure, random_chaos, random_cylinder, random_poly, random_ready_field, random_simplex_point,
    random_tensor,
};
use crate::report::VerificationReport;
use crate::scalar::{Rational, Scalar};

struct Instance<S> {
    rq: FiniteMeasure<Rational>,
    rho: FiniteMeasure<S>,
    probe: SimplexPoint<S>,
}

fn instance<S: Scalar>(rng: &mut ChaCha8Rng, t: usize, d_max: usize) -> Instance<S> {
    let rq = battery_measure(rng, t, d_max);
    let probe = point_s(&random_simplex_point(rng, &rq.support()));
    Instance {
        rho: measure_s(&rq),
        rq,
        probe,
    }
}

fn chaos_s<S: Scalar>(rng: &mut ChaCha8Rng, rq: &FiniteMeasure<Rational>, deg: usize) -> Result<ChaosExpansion<S>> {
    Ok(random_chaos(rng, rq, deg)?.convert(to_s))
}

fn field_s<S: Scalar>(rng: &mut ChaCha8Rng, rq: &FiniteMeasure<Rational>, orders: &[usize]) -> Result<RandomField<S>> {
    Ok(random_ready_field(rng, rq, orders)?.convert(to_s))
}

/// Random nonempty subset of `0..=max`.
fn random_orders(rng: &mut ChaCha8Rng, max: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=max).filter(|_| rng.random_bool(0.6)).collect();
    if v.is_empty() {
        v.push(rng.random_range(0..=max));
    }
    v
}

/// Divergence of an arbitrary field, after rewriting it atom by atom in
/// chaos form.
fn divergence_any<S: Scalar>(rho: &FiniteMeasure<S>, h: &RandomField<S>, tol: f64) -> Result<PolyFunctional<S>> {
    divergence(rho, &h.chaos_form(rho)?, tol)
}

fn fields_outcome<S: Scalar>(inst: &Instance<S>, a: &RandomField<S>, b: &RandomField<S>, tol: f64) -> Result<Outcome> {
    let x = inst.rho.support().iter().position(|&s| s).unwrap_or(0);
    Ok(Outcome::flag(
        a.eval(&inst.probe, x)?,
        b.eval(&inst.probe, x)?,
        a.same_field(b, &inst.rho, tol),
    ))
}

/// Closed form of `E Z^2` for `Z = delta(H)`, `H(mu, x) = int h(x, y) mu^n(dy)`
/// with every slice `h(x, .)` in `H_n`.
pub(crate) fn divergence_second_moment<S: Scalar>(rho: &FiniteMeasure<S>, h: &crate::tensor::TensorFn<S>) -> S {
    let n = h.order() - 1;
    let theta = rho.theta().clone();
    let nf = factorial::<S>(n);
    let ns = S::from_usize(n);
    let r1 = rising_factorial(&theta, 2 * n + 1);
    let r2 = rising_factorial(&theta, 2 * n + 2);
    let tn = theta.clone() + ns.clone();
    let hv = |idx: &[usize]| h.get(idx).clone();
    let cat = |a: &[usize], b: &[usize]| [a, b].concat();
    let br = |k: usize, f: &dyn Fn(&[usize]) -> S| bracket_integrate_fn(rho, k, |z, _| f(z));

    let mut total = S::zero();
    let mut add = |coef: S, den: &S, v: S| {
        let mut c = coef * v;
        c /= den;
        total += &c;
    };
    add(theta.clone() * nf.clone(), &r1, br(n + 1, &|z| hv(z) * hv(z)));
    add(
        theta.clone() * ns.clone() * nf.clone(),
        &r1,
        br(n, &|z| {
            let v = hv(&cat(&[z[0]], z));
            v.clone() * v
        }),
    );
    let n2 = ns.clone() * ns.clone() - theta.clone();
    add(
        nf.clone() * n2.clone(),
        &r2,
        br(n + 2, &|z| hv(&cat(&[z[0]], &z[2..])) * hv(&cat(&[z[1]], &z[2..]))),
    );
    add(
        ns.clone() * nf.clone() * n2,
        &r2,
        br(n + 1, &|z| hv(&cat(&[z[0], z[0]], &z[2..])) * hv(&cat(&[z[1], z[1]], &z[2..]))),
    );
    add(
        -(S::from_usize(2 * (n + 1)) * tn.clone() * ns.clone() * nf.clone()),
        &r2,
        br(n + 1, &|z| hv(&cat(&[z[0], z[0]], &z[2..])) * hv(&cat(&[z[1], z[0]], &z[2..]))),
    );
    let sq = ns.clone() * nf.clone() * tn.clone() * tn;
    add(
        sq.clone(),
        &r2,
        br(n + 1, &|z| hv(&cat(&[z[0], z[1]], &z[2..])) * hv(&cat(&[z[1], z[0]], &z[2..]))),
    );
    // coefficient n(n-1) n! (theta+n)^2; vanishes for n=1
    if n >= 2 {
        add(sq * S::from_usize(n - 1), &r2, br(n, &|z| hv(&cat(&[z[0]], z)) * hv(&cat(&[z[1]], z))));
    }
    total
}

pub fn calculus_suite<S: Scalar>(cfg: &SuiteConfig) -> VerificationReport {
    let id = Identity { suite: "calculus", cfg };
    let tol = cfg.tol::<S>();
    let budget = cfg.budget();
    let trials = cfg.trials;
    let max = cfg.max_degree.max(1);
    // degree keeping a product of two gradients within budget
    let deg2 = |d: usize| fit(d, max, 2, 1, budget, 1);
    let deg1 = |d: usize| fit(d, max, 1, 1, budget, 1);
    let mut results = Vec::new();

    results.extend(id.run(
        "gradient_isometry",
        "E int nabla_x F nabla_x G zeta(dx) = sum_n (theta+n-1) n n!/theta^(2n) int f_n g_n d rho^[n]",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let deg = deg2(inst.rho.d());
            let f = chaos_s::<S>(rng, &inst.rq, deg)?;
            let g = chaos_s::<S>(rng, &inst.rq, deg)?;
            let lhs = campbell_inner(&inst.rho, &gradient(&f), &gradient(&g))?;
            Ok(Outcome::scalars(&lhs, &gradient_isometry_rhs(&inst.rho, &f, &g)?, tol))
        },
    ));

    results.extend(id.run(
        "gradient_centering",
        "int nabla_x F zeta(dx) = 0",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let f = chaos_s::<S>(rng, &inst.rq, deg1(inst.rho.d()))?;
            let lhs = gradient(&f).integral();
            Outcome::functionals(&inst.rho, &lhs, &PolyFunctional::zero(inst.rho.d()), &inst.probe, tol)
        },
    ));

    results.extend(id.run(
        "pathwise_gradient",
        "nabla_x F(mu) = sum_i d_i phi(mu(f_1), .., mu(f_k)) (f_i(x) - mu(f_i)) on cylinder functions",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let arity = rng.random_range(1..=2);
            let cyl = random_cylinder(rng, inst.rho.d(), arity, max.min(3));
            let cyl = crate::cylinder::CylinderFunction::new(
                crate::cylinder::Polynomial::new(
                    arity,
                    cyl.phi().coeffs().iter().map(|(e, c)| (e.clone(), to_s::<S>(c))),
                )?,
                cyl.fs().iter().map(tensor_s).collect(),
            )?;
            let grad = gradient(&kernels_general(&inst.rho, &cyl.to_poly()?)?);
            let (mut l, mut r, mut pass) = (S::zero(), S::zero(), true);
            for (x, &s) in inst.rho.support().iter().enumerate() {
                if !s {
                    continue;
                }
                let a = grad.eval(&inst.probe, x)?;
                let b = gradient_pathwise(&cyl, &inst.probe, x)?;
                pass &= a.close_to(&b, tol);
                l += &a;
                r += &b;
            }
            Ok(Outcome::flag(l, r, pass))
        },
    ));

    results.extend(id.run(
        "partial_integration",
        "E int H_x nabla_x G zeta(dx) = E[delta(H) G]",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let deg = deg2(inst.rho.d());
            let orders = random_orders(rng, deg);
            let h = field_s::<S>(rng, &inst.rq, &orders)?;
            let g = chaos_s::<S>(rng, &inst.rq, deg)?;
            let lhs = campbell_inner(&inst.rho, &h, &gradient(&g))?;
            let div = divergence(&inst.rho, &h, tol)?;
            let rhs = expect_poly(&inst.rho, &div.mul(&reconstruct(&inst.rho, &g)?)?)?;
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "divergence_of_gradient",
        "delta(nabla F) = -L F",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let f = chaos_s::<S>(rng, &inst.rq, deg1(inst.rho.d()))?;
            let c = delta_nabla_check(&inst.rho, &f, tol)?;
            Outcome::functionals(&inst.rho, &c.lhs, &c.rhs, &inst.probe, tol)
        },
    ));

    results.extend(id.run(
        "divergence_mean_zero",
        "E delta(H) = 0",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let orders = random_orders(rng, deg1(inst.rho.d()));
            let h = field_s::<S>(rng, &inst.rq, &orders)?;
            let e = expect_poly(&inst.rho, &divergence(&inst.rho, &h, tol)?)?;
            Ok(Outcome::scalars(&e, &S::zero(), tol))
        },
    ));

    results.extend(id.run(
        "divergence_product",
        "delta(F H) = F delta(H) - int nabla_x F H_x zeta(dx)",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let total = deg2(inst.rho.d()).max(1);
            let a = rng.random_range(0..=total);
            let f = chaos_s::<S>(rng, &inst.rq, a)?;
            let orders = random_orders(rng, total - a);
            let h = field_s::<S>(rng, &inst.rq, &orders)?;
            let fp = reconstruct(&inst.rho, &f)?;
            let lhs = divergence_any(&inst.rho, &h.multiply(&fp)?, tol)?;
            let rhs = fp
                .mul(&divergence(&inst.rho, &h, tol)?)?
                .sub(&gradient(&f).inner_functional(&h)?)?;
            Outcome::functionals(&inst.rho, &lhs, &rhs, &inst.probe, tol)
        },
    ));

    results.extend(id.run(
        "divergence_scalar_field",
        "delta(F' h) = int h(x) F' (theta zeta - rho)(dx) - int h(x) nabla_x F' zeta(dx)",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let d = inst.rho.d();
            let f = chaos_s::<S>(rng, &inst.rq, deg2(d))?;
            let h = tensor_s::<S>(&random_tensor(rng, d, 1));
            let fp = reconstruct(&inst.rho, &f)?;
            let hf = RandomField::deterministic(&h);
            let lhs = divergence_any(&inst.rho, &hf.multiply(&fp)?, tol)?;
            let centered = PolyFunctional::linear(&h)
                .scale(inst.rho.theta())
                .sub(&PolyFunctional::constant(d, inst.rho.integrate(&h)?))?;
            let rhs = fp.mul(&centered)?.sub(&gradient(&f).inner_functional(&hf)?)?;
            Outcome::functionals(&inst.rho, &lhs, &rhs, &inst.probe, tol)
        },
    ));

    results.extend(id.run(
        "product_rule",
        "nabla(F G) = (nabla F) G + F (nabla G)",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let total = deg1(inst.rho.d());
            let a = rng.random_range(0..=total);
            let f = random_poly(rng, inst.rho.d(), a).convert(to_s::<S>);
            let g = random_poly(rng, inst.rho.d(), total - a).convert(to_s::<S>);
            let lhs = gradient(&kernels_general(&inst.rho, &f.mul(&g)?)?);
            let rhs = gradient(&kernels_general(&inst.rho, &f)?)
                .multiply(&g)?
                .add(&gradient(&kernels_general(&inst.rho, &g)?).multiply(&f)?)?;
            fields_outcome(&inst, &lhs, &rhs, tol)
        },
    ));

    results.extend(id.run(
        "chain_rule",
        "nabla phi(F_1, .., F_k) = sum_i d_i phi(F_1, .., F_k) nabla F_i",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let d = inst.rho.d();
            let k = rng.random_range(1..=2);
            let inner = if deg1(d) >= 4 { 2 } else { 1 };
            let fs: Vec<PolyFunctional<S>> = (0..k)
                .map(|_| random_poly(rng, d, inner).convert(to_s::<S>))
                .collect();
            let outer = (deg1(d) / inner).clamp(1, 2);
            let cyl = random_cylinder(rng, d, k, outer);
            let phi = crate::cylinder::Polynomial::new(
                k,
                cyl.phi().coeffs().iter().map(|(e, c)| (e.clone(), to_s::<S>(c))),
            )?;
            let lhs = gradient(&kernels_general(&inst.rho, &phi.compose(&fs)?)?);
            let mut rhs = RandomField::zero(d);
            for (i, fi) in fs.iter().enumerate() {
                let di = phi.partial(i).compose(&fs)?;
                rhs = rhs.add(&gradient(&kernels_general(&inst.rho, fi)?).multiply(&di)?)?;
            }
            fields_outcome(&inst, &lhs, &rhs, tol)
        },
    ));

    results.extend(id.run(
        "divergence_second_moment",
        "E delta(H)^2 for H = int h(x, y) zeta^n(dy), h(x, .) in H_n, as a seven-term bracket formula",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let n = fit(inst.rho.d(), max, 2, 2, budget, 1);
            let n = rng.random_range(1..=n);
            let field = field_s::<S>(rng, &inst.rq, &[n])?;
            let div = divergence(&inst.rho, &field, tol)?;
            let lhs = expect_poly(&inst.rho, &div.mul(&div)?)?;
            let h = field.term(n).cloned().unwrap_or_else(|| crate::tensor::TensorFn::zeros(inst.rho.d(), n + 1));
            Ok(Outcome::scalars(&lhs, &divergence_second_moment(&inst.rho, &h), tol))
        },
    ));

    results.extend(id.run(
        "divergence_chaos_locality",
        "E delta(H) F = E (delta(H_{n-1}) + delta(H_n) + delta(H_{n+1})) F for F in the n-th chaos",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let d = inst.rho.d();
            let deg = fit(d, max + 1, 2, 0, budget, 2);
            let h = field_s::<S>(rng, &inst.rq, &(0..deg).collect::<Vec<_>>())?;
            let n = rng.random_range(1..=deg);
            let g = tensor_s::<S>(&crate::random::random_hn(rng, &inst.rq, n)?);
            let f = PolyFunctional::monomial(&g);
            let lhs = expect_poly(&inst.rho, &divergence(&inst.rho, &h, tol)?.mul(&f)?)?;
            let mut rhs = S::zero();
            for i in [n - 1, n, n + 1] {
                if let Some(hi) = h.term(i) {
                    let part = RandomField::new(d, [hi.clone()])?;
                    rhs += &expect_poly(&inst.rho, &divergence(&inst.rho, &part, tol)?.mul(&f)?)?;
                }
            }
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "flemingviot_generator",
        "2 L_rho F = L F on polynomial cylinder functions",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let arity = rng.random_range(1..=2);
            let cyl = random_cylinder(rng, inst.rho.d(), arity, max.min(3));
            let cyl = crate::cylinder::CylinderFunction::new(
                crate::cylinder::Polynomial::new(
                    arity,
                    cyl.phi().coeffs().iter().map(|(e, c)| (e.clone(), to_s::<S>(c))),
                )?,
                cyl.fs().iter().map(tensor_s).collect(),
            )?;
            let c = flemingviot_check(&inst.rho, &cyl, tol)?;
            Outcome::functionals(&inst.rho, &c.lhs, &c.rhs, &inst.probe, tol)
        },
    ));

    results.extend(id.run(
        "generator_mean_zero",
        "E L F = 0",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let f = chaos_s::<S>(rng, &inst.rq, deg1(inst.rho.d()))?;
            let lf = reconstruct(&inst.rho, &generator_l(&inst.rho, &f))?;
            Ok(Outcome::scalars(&expect_poly(&inst.rho, &lf)?, &S::zero(), tol))
        },
    ));

    results.extend(id.run(
        "generator_symmetric",
        "E (L F) G = E F (L G)",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let deg = deg1(inst.rho.d());
            let f = chaos_s::<S>(rng, &inst.rq, deg)?;
            let g = chaos_s::<S>(rng, &inst.rq, deg)?;
            let lhs = chaos_inner(&inst.rho, &generator_l(&inst.rho, &f), &g)?;
            let rhs = chaos_inner(&inst.rho, &f, &generator_l(&inst.rho, &g))?;
            Ok(Outcome::scalars(&lhs, &rhs, tol))
        },
    ));

    results.extend(id.run(
        "generator_nonpositive",
        "E (L F) F <= 0 with equality iff F is constant",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let deg = rng.random_range(0..=deg1(inst.rho.d()));
            let f = chaos_s::<S>(rng, &inst.rq, deg)?;
            let v = chaos_inner(&inst.rho, &generator_l(&inst.rho, &f), &f)?;
            let constant = f
                .kernels()
                .values()
                .all(|k| k.is_zero_on_support(&inst.rho.support(), tol));
            let zero = v.close_to(&S::zero(), tol);
            let pass = (v < S::zero() || zero) && (zero == constant);
            Ok(Outcome::flag(&v, if constant { "0" } else { "<0" }, pass))
        },
    ));

    results.extend(id.run(
        "dirichlet_form_generator",
        "E int nabla_x F nabla_x G zeta(dx) = E (-L F) G",
        trials,
        |rng, t| {
            let inst = instance::<S>(rng, t, cfg.d);
            let deg = deg2(inst.rho.d());
            let f = chaos_s::<S>(rng, &inst.rq, deg)?;
            let g = chaos_s::<S>(rng, &inst.rq, deg)?;
            let lhs = dirichlet_form(&inst.rho, &f, &g)?;
            let lf = generator_l(&inst.rho, &f).map(|c| -c.clone(), |_, k| k.neg());
            Ok(Outcome::scalars(&lhs, &chaos_inner(&inst.rho, &lf, &g)?, tol))
        },
    ));

    VerificationReport::new("calculus", cfg.params(S::MODE.as_str()), results)
}

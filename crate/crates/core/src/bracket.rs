//! Bracket measures `rho^[n]` and the Dirac-addition expansions.
//!
//! `rho^[n]` puts mass `prod_a rho_a^(c_a)` on a tuple in which atom `a`
//! occurs `c_a` times; it is built by integrating successively against
//! `rho`, `rho + delta_{x_1}`, `rho + delta_{x_1} + delta_{x_2}`, and so on.

use crate::check::Comparison;
use crate::combinat::{distinct_tuples, factorial, partitions, rising_factorial, weakly_increasing};
use crate::error::{Error, Result};
use crate::measure::FiniteMeasure;
use crate::scalar::Scalar;
use crate::tensor::{check_cap, flat_index_of, multiplicity, multisets, TensorFn};

/// Mass of the singleton `{idx}` under `rho^[n]`.
pub fn bracket_weight<S: Scalar>(rho: &FiniteMeasure<S>, idx: &[usize]) -> S {
    let mut counts = vec![0usize; rho.d()];
    let mut w = S::one();
    for &x in idx {
        let mut factor = rho.weight(x).clone();
        factor += &S::from_usize(counts[x]);
        w *= &factor;
        counts[x] += 1;
    }
    w
}

/// `(rho_a + c)` for every atom `a` and `c < n`.
fn shifted_weights<S: Scalar>(rho: &FiniteMeasure<S>, n: usize) -> Vec<Vec<S>> {
    rho.weights()
        .iter()
        .map(|w| {
            (0..n)
                .map(|c| {
                    let mut v = w.clone();
                    v += &S::from_usize(c);
                    v
                })
                .collect()
        })
        .collect()
}

/// `rho^[n](f)` by the nested recursion, innermost integral first.
pub fn bracket_integrate<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<S> {
    rho.check_dims(f.d())?;
    Ok(bracket_integrate_fn(rho, f.order(), |_, flat| f.get_flat(flat).clone()))
}

/// `rho^[n]` applied to an integrand given as a closure of the index and
/// its row-major position. Atoms of zero weight are skipped.
pub fn bracket_integrate_fn<S: Scalar>(rho: &FiniteMeasure<S>, n: usize, mut f: impl FnMut(&[usize], usize) -> S) -> S {
    let stride = rho.d();
    let table = shifted_weights(rho, n);
    let mut counts = vec![0usize; rho.d()];
    let mut idx = vec![0usize; n];
    fn rec<S: Scalar>(
        depth: usize,
        flat: usize,
        table: &[Vec<S>],
        counts: &mut [usize],
        idx: &mut [usize],
        stride: usize,
        f: &mut impl FnMut(&[usize], usize) -> S,
    ) -> S {
        if depth == idx.len() {
            return f(idx, flat);
        }
        let mut acc = S::zero();
        for x in 0..table.len() {
            let w = &table[x][counts[x]];
            if w.is_zero() {
                continue;
            }
            idx[depth] = x;
            counts[x] += 1;
            let inner = rec(depth + 1, flat * stride + x, table, counts, idx, stride, f);
            counts[x] -= 1;
            if !inner.is_zero() {
                acc += &inner.mul_ref(w);
            }
        }
        acc
    }
    rec(0, 0, &table, &mut counts, &mut idx, stride, &mut f)
}

/// `rho^[n](f)` for symmetric `f`, summing over multisets with weight
/// `n!/prod c_a! * prod rho_a^(c_a)`. The caller guarantees symmetry.
pub fn bracket_integrate_symmetric<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<S> {
    rho.check_dims(f.d())?;
    debug_assert!(f.is_symmetric());
    if f.order() == 0 {
        return Ok(f.as_scalar().clone());
    }
    let d = f.d();
    let n = f.order();
    // rising[a][c] = rho_a^(c)
    let rising: Vec<Vec<S>> = rho
        .weights()
        .iter()
        .map(|w| (0..=n).map(|c| rising_factorial(w, c)).collect())
        .collect();
    let mut acc = S::zero();
    let mut counts = vec![0usize; d];
    for rep in multisets(d, n) {
        counts.iter_mut().for_each(|c| *c = 0);
        for &x in &rep {
            counts[x] += 1;
        }
        let mut w = S::from_i64(multiplicity(&rep) as i64);
        for (a, &c) in counts.iter().enumerate() {
            if c > 0 {
                w *= &rising[a][c];
            }
        }
        if w.is_zero() {
            continue;
        }
        let v = &f.values()[flat_index_of(d, &rep)];
        if !v.is_zero() {
            acc += &w.mul_ref(v);
        }
    }
    Ok(acc)
}

/// Dense weights of `rho^[n]`: `W(x) = rho^[n]({x})`.
pub fn bracket_materialize<S: Scalar>(rho: &FiniteMeasure<S>, n: usize, cap: u64) -> Result<TensorFn<S>> {
    check_cap(rho.d(), n, cap)?;
    Ok(TensorFn::from_fn(rho.d(), n, |idx| bracket_weight(rho, idx)))
}

fn check_index_list(m: usize, i_list: &[usize]) -> Result<()> {
    let mut seen = vec![false; m];
    for &i in i_list {
        if i >= m || seen[i] {
            return Err(Error::RepeatedIndex(i_list.to_vec()));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Maps the argument list `(x_1, ..., x_m)` of `f_{i_1..i_r}` to the
/// argument list of `f`: coordinate `i_l` receives `x_l`, the remaining
/// coordinates receive `x_{r+1}, ..., x_m` in increasing order.
fn placement(m: usize, i_list: &[usize]) -> Vec<usize> {
    let mut target = Vec::with_capacity(m);
    target.extend_from_slice(i_list);
    target.extend((0..m).filter(|i| !i_list.contains(i)));
    target
}

/// The reindexed function `f_{i_1..i_r}` (indices are 0-based).
pub fn reindex<S: Scalar>(f: &TensorFn<S>, i_list: &[usize]) -> Result<TensorFn<S>> {
    let m = f.order();
    check_index_list(m, i_list)?;
    let target = placement(m, i_list);
    let mut tilde = vec![0usize; m];
    Ok(TensorFn::from_fn(f.d(), m, |x| {
        for (l, &t) in target.iter().enumerate() {
            tilde[t] = x[l];
        }
        f.get(&tilde).clone()
    }))
}

/// `z -> f^k_{i_1..i_r}(x_1, ..., x_k, z)`, the sum of `f_{i_1..i_r}` over
/// weakly increasing selections `x_{j_1}, ..., x_{j_r}` of the points.
/// The result has order `m - r`.
pub fn dirac_sum<S: Scalar>(f: &TensorFn<S>, i_list: &[usize], points: &[usize]) -> Result<TensorFn<S>> {
    let m = f.order();
    check_index_list(m, i_list)?;
    for &p in points {
        if p >= f.d() {
            return Err(Error::AtomOutOfRange { atom: p, d: f.d() });
        }
    }
    let r = i_list.len();
    let target = placement(m, i_list);
    let selections = weakly_increasing(points.len(), r);
    let mut tilde = vec![0usize; m];
    Ok(TensorFn::from_fn(f.d(), m - r, |z| {
        for (l, &t) in target[r..].iter().enumerate() {
            tilde[t] = z[l];
        }
        let mut acc = S::zero();
        for sel in &selections {
            for (l, &j) in sel.iter().enumerate() {
                tilde[target[l]] = points[j];
            }
            acc += f.get(&tilde);
        }
        acc
    }))
}

/// `(rho + delta_{x_1} + ... + delta_{x_k})^[m](f)` through the closed-form
/// expansion in `rho^[m-r]` integrals of the Dirac sums.
pub fn add_diracs_expand<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>, points: &[usize]) -> Result<S> {
    rho.check_dims(f.d())?;
    let mut acc = bracket_integrate(rho, f)?;
    if points.is_empty() {
        return Ok(acc);
    }
    let m = f.order();
    for r in 1..=m {
        for i_list in distinct_tuples(m, r) {
            let g = dirac_sum(f, &i_list, points)?;
            acc += &bracket_integrate(rho, &g)?;
        }
    }
    Ok(acc)
}

/// `rho^[m](f_1 ⊗ ... ⊗ f_m)` as a sum over set partitions of `[m]`,
/// each block `I` contributing `(|I|-1)! rho(prod_{k in I} f_k)`.
pub fn moment_partition_formula<S: Scalar>(rho: &FiniteMeasure<S>, fs: &[TensorFn<S>]) -> Result<S> {
    for f in fs {
        rho.check_dims(f.d())?;
        if f.order() != 1 {
            return Err(Error::InvalidParameter(format!(
                "partition formula needs one-variable functions, got order {}",
                f.order()
            )));
        }
    }
    let d = rho.d();
    let mut total = S::zero();
    for sigma in partitions(fs.len()) {
        let mut term = S::one();
        for block in &sigma.blocks {
            let mut integral = S::zero();
            for x in 0..d {
                let mut v = rho.weight(x).clone();
                for &k in block {
                    v *= fs[k].get_flat(x);
                }
                integral += &v;
            }
            term *= &factorial::<S>(block.len() - 1);
            term *= &integral;
            if term.is_zero() {
                break;
            }
        }
        total += &term;
    }
    Ok(total)
}

/// Both sides of
/// `sum_{n=j}^m (-1)^{n-j} (theta+2n-1)/(n-j)! (theta+j)^(n-1)
///  = (-1)^{m-j} (theta+j)^(m) / (m-j)!`.
pub fn rising_sum_identity<S: Scalar>(theta: &S, m: usize, j: usize, tol: f64) -> Result<Comparison<S>> {
    if m < 2 || j == 0 || j >= m || *theta <= S::zero() {
        return Err(Error::InvalidParameter(format!(
            "rising sum identity needs m >= 2, 1 <= j <= m-1, theta > 0 (got m={m}, j={j}, theta={theta})"
        )));
    }
    let mut tj = theta.clone();
    tj += &S::from_usize(j);
    let mut lhs = S::zero();
    for n in j..=m {
        let mut term = theta.clone();
        term += &S::from_i64(2 * n as i64 - 1);
        term *= &rising_factorial(&tj, n - 1);
        term /= &factorial::<S>(n - j);
        if (n - j) % 2 == 1 {
            lhs -= &term;
        } else {
            lhs += &term;
        }
    }
    let mut rhs = rising_factorial(&tj, m);
    rhs /= &factorial::<S>(m - j);
    if (m - j) % 2 == 1 {
        rhs = -rhs;
    }
    Ok(Comparison::new(lhs, rhs, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn unit(d: usize) -> FiniteMeasure<Rational> {
        FiniteMeasure::from_ints(&vec![1; d]).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let rho = FiniteMeasure::<Rational>::from_ints(&[2]).unwrap();
        assert_eq!(bracket_integrate(&rho, &TensorFn::ones(1, 2)).unwrap(), q(6, 1));
        let f = TensorFn::indicator(2, &[1, 1]);
        assert_eq!(bracket_integrate(&unit(2), &f).unwrap(), q(2, 1));
        let c = TensorFn::scalar(2, q(7, 1));
        assert_eq!(bracket_integrate(&unit(2), &c).unwrap(), q(7, 1));
    }

    #[test]
    fn materialize_examples() {
        let w1 = bracket_materialize(&unit(2), 1, 100).unwrap();
        assert_eq!(w1.values(), &[q(1, 1), q(1, 1)]);
        let w2 = bracket_materialize(&unit(2), 2, 100).unwrap();
        assert_eq!(w2.values(), &[q(2, 1), q(1, 1), q(1, 1), q(2, 1)]);
        let total: Rational = w2.values().iter().sum();
        assert_eq!(total, q(6, 1));
        assert!(bracket_materialize(&unit(4), 5, 100).is_err());
    }

    #[test]
    fn reindex_examples() {
        let g = TensorFn::from_fn(3, 1, |i| q(i[0] as i64, 1));
        assert_eq!(reindex(&g, &[0]).unwrap(), g);
        let f = TensorFn::from_fn(3, 2, |i| q((3 * i[0] + i[1]) as i64, 1));
        let f2 = reindex(&f, &[1]).unwrap();
        assert_eq!(f2.get(&[0, 2]), f.get(&[2, 0]));
        assert!(reindex(&f, &[1, 1]).is_err());
        // f^2_1(x_1, x_2) = f(x_1) + f(x_2)
        let s = dirac_sum(&g, &[0], &[1, 2]).unwrap();
        assert_eq!(s.as_scalar(), &q(3, 1));
    }

    #[test]
    fn add_diracs_examples() {
        let rho = unit(2);
        let g = TensorFn::from_fn(2, 1, |i| q(2 * i[0] as i64 + 1, 3));
        let expected = rho.integrate(&g).unwrap() + g.get(&[1]).clone();
        assert_eq!(add_diracs_expand(&rho, &g, &[1]).unwrap(), expected);
        let ones = TensorFn::ones(2, 2);
        assert_eq!(add_diracs_expand(&rho, &ones, &[0]).unwrap(), q(12, 1));
        let f = TensorFn::from_fn(2, 2, |i| q(i[0] as i64 - 2 * i[1] as i64, 5));
        assert_eq!(add_diracs_expand(&rho, &f, &[]).unwrap(), bracket_integrate(&rho, &f).unwrap());
    }

    #[test]
    fn partition_formula_examples() {
        let rho = unit(2);
        let e0 = TensorFn::indicator(2, &[0]);
        assert_eq!(moment_partition_formula(&rho, &[e0.clone(), e0.clone()]).unwrap(), q(2, 1));
        let g = TensorFn::from_fn(2, 1, |i| q(i[0] as i64 + 2, 3));
        assert_eq!(moment_partition_formula(&rho, std::slice::from_ref(&g)).unwrap(), rho.integrate(&g).unwrap());
        let two = moment_partition_formula(&rho, &[e0.clone(), g.clone()]).unwrap();
        let direct = rho.integrate(&e0).unwrap() * rho.integrate(&g).unwrap()
            + rho.integrate(&e0.hadamard(&g).unwrap()).unwrap();
        assert_eq!(two, direct);
    }

    #[test]
    fn rising_sum_examples() {
        let c = rising_sum_identity(&q(1, 1), 2, 1, 0.0).unwrap();
        assert_eq!((c.lhs.clone(), c.rhs.clone()), (q(-6, 1), q(-6, 1)));
        assert!(c.holds);
        assert!(rising_sum_identity(&q(1, 2), 5, 2, 0.0).unwrap().holds);
        for m in 2..6 {
            assert!(rising_sum_identity(&q(7, 3), m, m - 1, 0.0).unwrap().holds);
        }
        assert!(rising_sum_identity(&q(1, 1), 3, 3, 0.0).is_err());
        assert!(rising_sum_identity(&q(1, 1), 1, 0, 0.0).is_err());
    }
}

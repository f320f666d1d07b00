//! Chaos expansions: the spaces `H_n`, explicit kernel formulas, the
//! isometry and the covariance identities.

use std::collections::{BTreeMap, HashMap};

use crate::bracket::{
    add_diracs_expand, bracket_integrate_fn, bracket_integrate_symmetric, moment_partition_formula,
};
use crate::combinat::{compositions, distinct_tuples, factorial, rising_factorial, weakly_increasing};
use crate::error::{Error, Result};
use crate::law::tfn;
use crate::measure::FiniteMeasure;
use crate::poly::PolyFunctional;
use crate::scalar::{Scalar, DEFAULT_TOL};
use crate::tensor::{flat_index_of, for_each_index, TensorFn};

/// `F = f0 + sum_n zeta^n(f_n)` with symmetric kernels. Identically zero
/// kernels are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion<S> {
    d: usize,
    f0: S,
    kernels: BTreeMap<usize, TensorFn<S>>,
}

impl<S: Scalar> ChaosExpansion<S> {
    pub fn new(d: usize, f0: S, kernels: impl IntoIterator<Item = TensorFn<S>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for k in kernels {
            if k.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.d(),
                });
            }
            let n = k.order();
            if n == 0 {
                return Err(Error::InvalidParameter("kernels start at order 1".into()));
            }
            if !k.is_symmetric() {
                return Err(Error::InvalidParameter(format!("kernel of order {n} is not symmetric")));
            }
            if map.contains_key(&n) {
                return Err(Error::InvalidParameter(format!("two kernels of order {n}")));
            }
            if !k.is_zero() {
                map.insert(n, k);
            }
        }
        Ok(ChaosExpansion { d, f0, kernels: map })
    }

    pub fn constant(d: usize, c: S) -> Self {
        ChaosExpansion {
            d,
            f0: c,
            kernels: BTreeMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn f0(&self) -> &S {
        &self.f0
    }

    pub fn kernel(&self, n: usize) -> Option<&TensorFn<S>> {
        self.kernels.get(&n)
    }

    pub fn kernels(&self) -> &BTreeMap<usize, TensorFn<S>> {
        &self.kernels
    }

    /// Highest order with a stored kernel (0 for constants).
    pub fn degree(&self) -> usize {
        self.kernels.keys().next_back().copied().unwrap_or(0)
    }

    /// Applies `f(n, f_n)` to every kernel and `c` to the constant.
    pub fn map(&self, c: impl Fn(&S) -> S, f: impl Fn(usize, &TensorFn<S>) -> TensorFn<S>) -> Self {
        let kernels = self
            .kernels
            .iter()
            .map(|(&n, k)| (n, f(n, k)))
            .filter(|(_, k)| !k.is_zero())
            .collect();
        ChaosExpansion {
            d: self.d,
            f0: c(&self.f0),
            kernels,
        }
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> ChaosExpansion<T> {
        ChaosExpansion {
            d: self.d,
            f0: f(&self.f0),
            kernels: self.kernels.iter().map(|(&n, k)| (n, k.convert(&f))).collect(),
        }
    }

    /// Kernels agree on the support of `rho` (order by order, absent
    /// kernels read as zero) and the constants agree.
    pub fn same_on_support(&self, other: &Self, support: &[bool], tol: f64) -> bool {
        if !self.f0.close_to(&other.f0, tol) {
            return false;
        }
        let orders: std::collections::BTreeSet<usize> =
            self.kernels.keys().chain(other.kernels.keys()).copied().collect();
        orders.into_iter().all(|n| {
            let zero = TensorFn::zeros(self.d, n);
            let a = self.kernels.get(&n).unwrap_or(&zero);
            let b = other.kernels.get(&n).unwrap_or(&zero);
            a.close_on_support(b, support, tol)
        })
    }

    /// True when every kernel of order at least 2 vanishes on the support.
    pub fn first_chaos_only(&self, support: &[bool], tol: f64) -> bool {
        self.kernels
            .iter()
            .filter(|(&n, _)| n >= 2)
            .all(|(_, k)| k.is_zero_on_support(support, tol))
    }
}

/// Membership in `H_n`: symmetry and conditional centering
/// `int g(y, x) (rho + delta_{y_1} + ... + delta_{y_{n-1}})(dx) = 0`, both
/// checked at every tuple of atoms in the support of `rho`.
pub fn is_in_hn<S: Scalar>(rho: &FiniteMeasure<S>, g: &TensorFn<S>) -> bool {
    is_in_hn_tol(rho, g, DEFAULT_TOL)
}

pub fn is_in_hn_tol<S: Scalar>(rho: &FiniteMeasure<S>, g: &TensorFn<S>, tol: f64) -> bool {
    let n = g.order();
    if n == 0 || g.d() != rho.d() {
        return false;
    }
    let d = rho.d();
    let support = rho.support();
    let mut ok = true;
    let mut sorted = vec![0usize; n];
    for_each_index(d, n, |idx| {
        if ok && idx.iter().all(|&a| support[a]) {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            if !g.get(idx).close_to(g.get(&sorted), tol) {
                ok = false;
            }
        }
    });
    if !ok {
        return false;
    }
    let zero = S::zero();
    let mut full = vec![0usize; n];
    for_each_index(d, n - 1, |prefix| {
        if !ok || !prefix.iter().all(|&a| support[a]) {
            return;
        }
        full[..n - 1].copy_from_slice(prefix);
        let mut acc = S::zero();
        for x in 0..d {
            let mut w = rho.weight(x).clone();
            w += &S::from_usize(prefix.iter().filter(|&&y| y == x).count());
            if w.is_zero() {
                continue;
            }
            full[n - 1] = x;
            acc += &w.mul_ref(g.get(&full));
        }
        if !acc.close_to(&zero, tol) {
            ok = false;
        }
    });
    ok
}

/// Kernels from Palm expectations:
/// `f_n(x) = (theta+2n-1)/n! sum_{j=0}^n (-1)^{n-j} (theta+j)^(n-1)
///  sum_{|I|=j} T_{F,j}(x_I)`, with the empty index set giving `E F`.
pub fn kernels_general<S: Scalar>(rho: &FiniteMeasure<S>, f: &PolyFunctional<S>) -> Result<ChaosExpansion<S>> {
    rho.check_dims(f.d())?;
    let d = rho.d();
    let deg = f.degree();
    let tables: Vec<TensorFn<S>> = (0..=deg).map(|j| tfn(rho, f, j)).collect::<Result<_>>()?;
    let f0 = tables[0].as_scalar().clone();
    let theta = rho.theta();
    let mut kernels = Vec::with_capacity(deg);
    for n in 1..=deg {
        let coeffs: Vec<S> = (0..=n)
            .map(|j| {
                let mut tj = theta.clone();
                tj += &S::from_usize(j);
                let c = rising_factorial(&tj, n - 1);
                if (n - j) % 2 == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect();
        let mut front = theta.clone();
        front += &S::from_i64(2 * n as i64 - 1);
        front /= &factorial::<S>(n);
        let mut sub = Vec::with_capacity(n);
        let kernel = TensorFn::from_symmetric_fn(d, n, |rep| {
            let mut acc = S::zero();
            for mask in 0u32..(1 << n) {
                sub.clear();
                for (i, &x) in rep.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        sub.push(x);
                    }
                }
                let j = sub.len();
                let t = tables[j].get_flat(flat_index_of(d, &sub));
                acc += &t.mul_ref(&coeffs[j]);
            }
            acc *= &front;
            acc
        });
        kernels.push(kernel);
    }
    ChaosExpansion::new(d, f0, kernels)
}

/// Kernel of order `k` of `zeta^m(f)` given a routine for
/// `(rho + delta_{x_1} + ... + delta_{x_j})^[m](f)`:
/// `f_k(x) = (theta+2k-1)/k! sum_j (-1)^{k-j} (theta+j)^(k-1)/(theta+j)^(m)
///  sum_{|I|=j} (rho + delta_{x_I})^[m](f)`.
fn monomial_kernel_with<S: Scalar>(
    rho: &FiniteMeasure<S>,
    m: usize,
    k: usize,
    shifted_bracket: &mut impl FnMut(&[usize]) -> Result<S>,
) -> Result<TensorFn<S>> {
    let d = rho.d();
    let theta = rho.theta();
    let coeffs: Vec<S> = (0..=k)
        .map(|j| {
            let mut tj = theta.clone();
            tj += &S::from_usize(j);
            let mut c = rising_factorial(&tj, k - 1);
            c /= &rising_factorial(&tj, m);
            if (k - j) % 2 == 1 {
                -c
            } else {
                c
            }
        })
        .collect();
    let mut front = theta.clone();
    front += &S::from_i64(2 * k as i64 - 1);
    front /= &factorial::<S>(k);
    let mut err = None;
    let mut sub = Vec::with_capacity(k);
    let kernel = TensorFn::from_symmetric_fn(d, k, |rep| {
        let mut acc = S::zero();
        for mask in 0u32..(1 << k) {
            sub.clear();
            for (i, &x) in rep.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sub.push(x);
                }
            }
            match shifted_bracket(&sub) {
                Ok(v) => acc += &v.mul_ref(&coeffs[sub.len()]),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        acc *= &front;
        acc
    });
    match err {
        Some(e) => Err(e),
        None => Ok(kernel),
    }
}

/// Kernels of `zeta^m(f)` through the Dirac-addition expansion of
/// `(rho + delta_{x_I})^[m](f)`; kernels of order above `m` vanish.
pub fn kernels_monomial<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<ChaosExpansion<S>> {
    rho.check_dims(f.d())?;
    let m = f.order();
    let fs = f.symmetrize();
    if m == 0 {
        return Ok(ChaosExpansion::constant(rho.d(), fs.as_scalar().clone()));
    }
    let mut cache: HashMap<Vec<usize>, S> = HashMap::new();
    let mut shifted = |xs: &[usize]| -> Result<S> {
        if let Some(v) = cache.get(xs) {
            return Ok(v.clone());
        }
        let v = add_diracs_expand(rho, &fs, xs)?;
        cache.insert(xs.to_vec(), v.clone());
        Ok(v)
    };
    let mut f0 = shifted(&[])?;
    f0 /= &rising_factorial(rho.theta(), m);
    let kernels = (1..=m)
        .map(|k| monomial_kernel_with(rho, m, k, &mut shifted))
        .collect::<Result<Vec<_>>>()?;
    ChaosExpansion::new(rho.d(), f0, kernels)
}

/// Orthogonal projection of `zeta^n(f)` onto the `n`-th chaos, returned as
/// its kernel in `H_n`. Uses direct brackets of the shifted measures.
pub fn project_to_hn<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<TensorFn<S>> {
    rho.check_dims(f.d())?;
    let n = f.order();
    if n == 0 {
        return Err(Error::InvalidParameter("H_0 is not a kernel space".into()));
    }
    let fs = f.symmetrize();
    let mut cache: HashMap<Vec<usize>, S> = HashMap::new();
    let mut shifted = |xs: &[usize]| -> Result<S> {
        if let Some(v) = cache.get(xs) {
            return Ok(v.clone());
        }
        let v = bracket_integrate_symmetric(&rho.shifted(xs)?, &fs)?;
        cache.insert(xs.to_vec(), v.clone());
        Ok(v)
    };
    monomial_kernel_with(rho, n, n, &mut shifted)
}

/// `f0 + sum_n zeta^n(f_n)` after checking every kernel lies in `H_n`.
pub fn reconstruct<S: Scalar>(rho: &FiniteMeasure<S>, ce: &ChaosExpansion<S>) -> Result<PolyFunctional<S>> {
    rho.check_dims(ce.d())?;
    for (&n, k) in ce.kernels() {
        if !is_in_hn(rho, k) {
            return Err(Error::NotInHn { order: n });
        }
    }
    let mut terms = vec![TensorFn::scalar(ce.d(), ce.f0().clone())];
    terms.extend(ce.kernels().values().cloned());
    Ok(PolyFunctional::from_symmetric_terms(ce.d(), terms))
}

/// `E[FG] = f0 g0 + sum_n n!/theta^(2n) rho^[n](f_n g_n)`.
pub fn chaos_inner<S: Scalar>(rho: &FiniteMeasure<S>, a: &ChaosExpansion<S>, b: &ChaosExpansion<S>) -> Result<S> {
    rho.check_dims(a.d())?;
    rho.check_dims(b.d())?;
    let mut acc = a.f0().mul_ref(b.f0());
    for (&n, fa) in a.kernels() {
        if let Some(fb) = b.kernel(n) {
            let mut v = bracket_integrate_symmetric(rho, &fa.hadamard(fb)?)?;
            v *= &factorial::<S>(n);
            v /= &rising_factorial(rho.theta(), 2 * n);
            acc += &v;
        }
    }
    Ok(acc)
}

/// `sum_n w_n rho^[n](f_n g_n)` for arbitrary per-order weights.
pub fn weighted_kernel_inner<S: Scalar>(
    rho: &FiniteMeasure<S>,
    a: &ChaosExpansion<S>,
    b: &ChaosExpansion<S>,
    weight: impl Fn(usize) -> S,
) -> Result<S> {
    let mut acc = S::zero();
    for (&n, fa) in a.kernels() {
        if let Some(fb) = b.kernel(n) {
            let v = bracket_integrate_symmetric(rho, &fa.hadamard(fb)?)?;
            acc += &v.mul_ref(&weight(n));
        }
    }
    Ok(acc)
}

fn check_one_variable<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>) -> Result<()> {
    rho.check_dims(f.d())?;
    if f.order() != 1 {
        return Err(Error::InvalidParameter(format!(
            "expected a one-variable function, got order {}",
            f.order()
        )));
    }
    Ok(())
}

/// `Cov[zeta^k(h), zeta^m(h_1 ⊗ ... ⊗ h_m)]` for `h` in `H_k` as a sum over
/// ordered index selections `i_1..i_r` of `rho^[m-r]` of the remaining
/// factors times `int h^k_{⊗ i_1..i_r} h d rho^[k]`.
pub fn covariance_chaos<S: Scalar>(rho: &FiniteMeasure<S>, h: &TensorFn<S>, hs: &[TensorFn<S>]) -> Result<S> {
    rho.check_dims(h.d())?;
    for f in hs {
        check_one_variable(rho, f)?;
    }
    let k = h.order();
    if !is_in_hn(rho, h) {
        return Err(Error::NotInHn { order: k });
    }
    let m = hs.len();
    let mut total = S::zero();
    for r in 1..=m {
        let selections = weakly_increasing(k, r);
        for i_list in distinct_tuples(m, r) {
            let rest: Vec<TensorFn<S>> = (0..m).filter(|j| !i_list.contains(j)).map(|j| hs[j].clone()).collect();
            let outer = moment_partition_formula(rho, &rest)?;
            if outer.is_zero() {
                continue;
            }
            let inner = bracket_integrate_fn(rho, k, |x, flat| {
                let hv = h.get_flat(flat);
                if hv.is_zero() {
                    return S::zero();
                }
                let mut s = S::zero();
                for sel in &selections {
                    let mut p = S::one();
                    for (l, &pos) in sel.iter().enumerate() {
                        p *= hs[i_list[l]].get_flat(x[pos]);
                    }
                    s += &p;
                }
                s * hv.clone()
            });
            total += &outer.mul_ref(&inner);
        }
    }
    total /= &rising_factorial(rho.theta(), m + k);
    Ok(total)
}

fn power_prefactors<S: Scalar>(rho: &FiniteMeasure<S>, f: &TensorFn<S>, m: usize) -> Result<Vec<S>> {
    (1..=m)
        .map(|r| {
            let rest = vec![f.clone(); m - r];
            let mut c = moment_partition_formula(rho, &rest)?;
            c *= &factorial::<S>(m);
            c /= &factorial::<S>(m - r);
            Ok(c)
        })
        .collect()
}

/// `Cov(zeta^k(h), zeta^m(f^{⊗m}))` summed over compositions
/// `j_1 + ... + j_k = r` with every `j_i >= 1`.
pub fn covariance_power_compositions<S: Scalar>(
    rho: &FiniteMeasure<S>,
    h: &TensorFn<S>,
    f: &TensorFn<S>,
    m: usize,
) -> Result<S> {
    check_one_variable(rho, f)?;
    let k = h.order();
    if !is_in_hn(rho, h) {
        return Err(Error::NotInHn { order: k });
    }
    let pre = power_prefactors(rho, f, m)?;
    let mut total = S::zero();
    for r in 1..=m {
        let mut inner = S::zero();
        for js in compositions(r, k, 1) {
            inner += &bracket_integrate_fn(rho, k, |x, flat| {
                let mut p = h.get_flat(flat).clone();
                for (i, &j) in js.iter().enumerate() {
                    p *= &f.get_flat(x[i]).pow_u(j);
                }
                p
            });
        }
        total += &inner.mul_ref(&pre[r - 1]);
    }
    total /= &rising_factorial(rho.theta(), m + k);
    Ok(total)
}

/// `Cov(zeta^k(h), zeta^m(f^{⊗m}))`. For `k = 2` the inner `rho^[2]`
/// integral is split into a diagonal part with coefficient `r - 1` and an
/// integral against the product measure `rho ⊗ rho`.
pub fn covariance_power<S: Scalar>(rho: &FiniteMeasure<S>, h: &TensorFn<S>, f: &TensorFn<S>, m: usize) -> Result<S> {
    if h.order() != 2 {
        return covariance_power_compositions(rho, h, f, m);
    }
    check_one_variable(rho, f)?;
    if !is_in_hn(rho, h) {
        return Err(Error::NotInHn { order: 2 });
    }
    let d = rho.d();
    let pre = power_prefactors(rho, f, m)?;
    let mut total = S::zero();
    for r in 1..=m {
        let mut diag = S::zero();
        for x in 0..d {
            let mut v = rho.weight(x).mul_ref(h.get(&[x, x]));
            v *= &f.get_flat(x).pow_u(r);
            diag += &v;
        }
        diag *= &S::from_usize(r - 1);
        let mut off = S::zero();
        for j in 1..r {
            for x1 in 0..d {
                for x2 in 0..d {
                    let mut v = rho.weight(x1).mul_ref(rho.weight(x2));
                    v *= h.get(&[x1, x2]);
                    v *= &f.get_flat(x1).pow_u(j);
                    v *= &f.get_flat(x2).pow_u(r - j);
                    off += &v;
                }
            }
        }
        diag += &off;
        total += &diag.mul_ref(&pre[r - 1]);
    }
    total /= &rising_factorial(rho.theta(), m + 2);
    Ok(total)
}

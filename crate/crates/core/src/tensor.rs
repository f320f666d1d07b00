//! Dense functions on `[d]^n`, stored row-major with the last coordinate
//! varying fastest.

use crate::combinat::binomial;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default bound on the number of dense entries, `d^n <= 10^7`.
pub const DEFAULT_MEMORY_CAP: u64 = 10_000_000;

pub fn tensor_len(d: usize, order: usize) -> Option<usize> {
    d.checked_pow(order as u32)
}

pub fn check_cap(d: usize, order: usize, cap: u64) -> Result<()> {
    let entries = (d as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
    if entries > cap as u128 {
        return Err(Error::MemoryCap {
            order,
            d,
            entries,
            cap,
        });
    }
    Ok(())
}

/// Calls `f` on every index of `[d]^order` in row-major order.
pub fn for_each_index(d: usize, order: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; order];
    if d == 0 && order > 0 {
        return;
    }
    loop {
        f(&idx);
        let mut pos = order;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < d {
                break;
            }
            idx[pos] = 0;
        }
    }
}

pub fn flat_index_of(d: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &x| acc * d + x)
}

/// All nondecreasing tuples of length `n` over `[d]`, i.e. one
/// representative per multiset.
pub fn multisets(d: usize, n: usize) -> Vec<Vec<usize>> {
    crate::combinat::weakly_increasing(d, n)
}

/// Number of distinct orderings of a tuple, `n! / prod c_a!`.
pub fn multiplicity(tuple: &[usize]) -> u128 {
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    let mut out: u128 = 1;
    let mut placed = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let run = j - i;
        out *= binomial(placed + run, run);
        placed += run;
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFn<S> {
    d: usize,
    order: usize,
    values: Vec<S>,
}

impl<S: Scalar> TensorFn<S> {
    pub fn new(d: usize, order: usize, values: Vec<S>) -> Result<Self> {
        let len = tensor_len(d, order).ok_or(Error::MemoryCap {
            order,
            d,
            entries: u128::MAX,
            cap: u64::MAX,
        })?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        Ok(TensorFn { d, order, values })
    }

    pub fn constant(d: usize, order: usize, c: S) -> Self {
        let len = tensor_len(d, order).expect("tensor size overflow");
        TensorFn {
            d,
            order,
            values: vec![c; len],
        }
    }

    pub fn zeros(d: usize, order: usize) -> Self {
        Self::constant(d, order, S::zero())
    }

    pub fn ones(d: usize, order: usize) -> Self {
        Self::constant(d, order, S::one())
    }

    /// Order-0 tensor holding a single value.
    pub fn scalar(d: usize, c: S) -> Self {
        TensorFn {
            d,
            order: 0,
            values: vec![c],
        }
    }

    pub fn from_fn(d: usize, order: usize, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut values = Vec::with_capacity(tensor_len(d, order).expect("tensor size overflow"));
        for_each_index(d, order, |idx| values.push(f(idx)));
        TensorFn { d, order, values }
    }

    /// Builds a symmetric tensor from its values on nondecreasing tuples.
    pub fn from_symmetric_fn(d: usize, order: usize, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let reps = multisets(d, order);
        let len = tensor_len(d, order).expect("tensor size overflow");
        let mut slot = vec![usize::MAX; len];
        let mut vals = Vec::with_capacity(reps.len());
        for (k, rep) in reps.iter().enumerate() {
            slot[flat_index_of(d, rep)] = k;
            vals.push(f(rep));
        }
        let mut values = Vec::with_capacity(len);
        let mut sorted = vec![0usize; order];
        for_each_index(d, order, |idx| {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            values.push(vals[slot[flat_index_of(d, &sorted)]].clone());
        });
        TensorFn { d, order, values }
    }

    pub fn indicator(d: usize, idx: &[usize]) -> Self {
        let mut t = Self::zeros(d, idx.len());
        let k = flat_index_of(d, idx);
        t.values[k] = S::one();
        t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        flat_index_of(self.d, idx)
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.values[self.flat_index(idx)]
    }

    pub fn get_flat(&self, k: usize) -> &S {
        &self.values[k]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let k = self.flat_index(idx);
        self.values[k] = v;
    }

    /// The value of an order-0 tensor.
    pub fn as_scalar(&self) -> &S {
        &self.values[0]
    }

    pub fn for_each(&self, mut f: impl FnMut(&[usize], &S)) {
        let mut k = 0;
        for_each_index(self.d, self.order, |idx| {
            f(idx, &self.values[k]);
            k += 1;
        });
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        TensorFn {
            d: self.d,
            order: self.order,
            values: self.values.iter().map(f).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(TensorFn {
            d: self.d,
            order: self.order,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| {
            let mut s = a.clone();
            s += b;
            s
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| {
            let mut s = a.clone();
            s -= b;
            s
        })
    }

    /// Pointwise product of two tensors of the same order.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.mul_ref(b))
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.mul_ref(c))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// `(f ⊗ g)(x, y) = f(x) g(y)`.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        let mut values = Vec::with_capacity(self.values.len() * other.values.len());
        for a in &self.values {
            for b in &other.values {
                values.push(a.mul_ref(b));
            }
        }
        Ok(TensorFn {
            d: self.d,
            order: self.order + other.order,
            values,
        })
    }

    /// Average over all coordinate permutations.
    pub fn symmetrize(&self) -> Self {
        if self.order <= 1 {
            return self.clone();
        }
        let d = self.d;
        let len = self.values.len();
        let mut sums: Vec<Option<S>> = vec![None; len];
        let mut counts = vec![0u64; len];
        let mut keys = Vec::with_capacity(len);
        let mut sorted = vec![0usize; self.order];
        let mut k = 0;
        for_each_index(d, self.order, |idx| {
            sorted.copy_from_slice(idx);
            sorted.sort_unstable();
            let key = flat_index_of(d, &sorted);
            match &mut sums[key] {
                Some(s) => *s += &self.values[k],
                slot @ None => *slot = Some(self.values[k].clone()),
            }
            counts[key] += 1;
            keys.push(key);
            k += 1;
        });
        let mut avg: Vec<Option<S>> = vec![None; len];
        for key in 0..len {
            if let Some(s) = sums[key].take() {
                let mut v = s;
                v /= &S::from_i64(counts[key] as i64);
                avg[key] = Some(v);
            }
        }
        let values = keys
            .into_iter()
            .map(|key| avg[key].clone().expect("orbit representative"))
            .collect();
        TensorFn {
            d,
            order: self.order,
            values,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        if self.order <= 1 {
            return true;
        }
        let mut sorted = vec![0usize; self.order];
        let mut ok = true;
        let mut k = 0;
        for_each_index(self.d, self.order, |idx| {
            if ok {
                sorted.copy_from_slice(idx);
                sorted.sort_unstable();
                if self.values[k] != self.values[flat_index_of(self.d, &sorted)] {
                    ok = false;
                }
            }
            k += 1;
        });
        ok
    }

    /// `sum_x f(x) v_{x_1} ... v_{x_n}`, i.e. integration against the
    /// product measure `v^{⊗n}`.
    pub fn contract(&self, v: &[S]) -> Result<S> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: v.len(),
            });
        }
        let d = self.d;
        let mut cur: Vec<S> = self.values.clone();
        for _ in 0..self.order {
            cur = cur
                .chunks(d)
                .map(|chunk| {
                    let mut acc = S::zero();
                    for (a, w) in chunk.iter().zip(v) {
                        if !w.is_zero() {
                            acc += &a.mul_ref(w);
                        }
                    }
                    acc
                })
                .collect();
        }
        Ok(cur.pop().unwrap_or_else(S::zero))
    }

    /// The slice `y -> f(x, y)` along the first axis.
    pub fn slice_first(&self, x: usize) -> Self {
        assert!(self.order >= 1, "slice of an order-0 tensor");
        let block = self.values.len() / self.d;
        TensorFn {
            d: self.d,
            order: self.order - 1,
            values: self.values[x * block..(x + 1) * block].to_vec(),
        }
    }

    /// Stacks `d` tensors of equal order along a new leading axis.
    pub fn stack(slices: &[TensorFn<S>]) -> Result<Self> {
        let d = slices.len();
        let order = slices.first().map_or(0, |s| s.order);
        let mut values = Vec::new();
        for s in slices {
            if s.d != d || s.order != order {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.d,
                });
            }
            values.extend(s.values.iter().cloned());
        }
        Ok(TensorFn {
            d,
            order: order + 1,
            values,
        })
    }

    /// Equality at every index whose atoms all lie in `support`.
    pub fn eq_on_support(&self, other: &Self, support: &[bool]) -> bool {
        if self.d != other.d || self.order != other.order {
            return false;
        }
        let mut ok = true;
        let mut k = 0;
        for_each_index(self.d, self.order, |idx| {
            if ok && idx.iter().all(|&a| support[a]) && self.values[k] != other.values[k] {
                ok = false;
            }
            k += 1;
        });
        ok
    }

    /// Like [`eq_on_support`](Self::eq_on_support) with the backend's
    /// tolerance.
    pub fn close_on_support(&self, other: &Self, support: &[bool], tol: f64) -> bool {
        if self.d != other.d || self.order != other.order {
            return false;
        }
        let mut ok = true;
        let mut k = 0;
        for_each_index(self.d, self.order, |idx| {
            if ok
                && idx.iter().all(|&a| support[a])
                && !self.values[k].close_to(&other.values[k], tol)
            {
                ok = false;
            }
            k += 1;
        });
        ok
    }

    pub fn is_zero_on_support(&self, support: &[bool], tol: f64) -> bool {
        let zero = Self::zeros(self.d, self.order);
        self.close_on_support(&zero, support, tol)
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TensorFn<T> {
        TensorFn {
            d: self.d,
            order: self.order,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// `sym(f ⊗ g)` for symmetric `f` and `g`, evaluated multiset by multiset
/// with hypergeometric weights instead of a full permutation average.
pub fn sym_product<S: Scalar>(f: &TensorFn<S>, g: &TensorFn<S>) -> Result<TensorFn<S>> {
    if f.d != g.d {
        return Err(Error::DimensionMismatch {
            expected: f.d,
            found: g.d,
        });
    }
    let d = f.d;
    let (a, b) = (f.order, g.order);
    if a == 0 {
        return Ok(g.scale(f.as_scalar()));
    }
    if b == 0 {
        return Ok(f.scale(g.as_scalar()));
    }
    let norm = S::from_i64(binomial(a + b, a) as i64);
    let mut counts = vec![0usize; d];
    let mut sub = vec![0usize; d];
    let mut left = Vec::with_capacity(a);
    let mut right = Vec::with_capacity(b);
    Ok(TensorFn::from_symmetric_fn(d, a + b, |rep| {
        counts.iter_mut().for_each(|c| *c = 0);
        for &x in rep {
            counts[x] += 1;
        }
        let mut acc = S::zero();
        sub_multisets(&counts, a, 0, &mut sub, &mut |sub| {
            let mut weight: u128 = 1;
            left.clear();
            right.clear();
            for atom in 0..d {
                weight *= binomial(counts[atom], sub[atom]);
                left.extend(std::iter::repeat_n(atom, sub[atom]));
                right.extend(std::iter::repeat_n(atom, counts[atom] - sub[atom]));
            }
            let mut term = f.get(&left).mul_ref(g.get(&right));
            term *= &S::from_i64(weight as i64);
            acc += &term;
        });
        acc /= &norm;
        acc
    }))
}

/// Enumerates count vectors `sub <= counts` with total `size`.
pub(crate) fn sub_multisets(
    counts: &[usize],
    size: usize,
    atom: usize,
    sub: &mut [usize],
    f: &mut impl FnMut(&[usize]),
) {
    if atom == counts.len() {
        if size == 0 {
            f(sub);
        }
        return;
    }
    let rest: usize = counts[atom + 1..].iter().sum();
    let lo = size.saturating_sub(rest);
    let hi = counts[atom].min(size);
    for take in lo..=hi {
        sub[atom] = take;
        sub_multisets(counts, size - take, atom + 1, sub, f);
    }
    sub[atom] = 0;
}

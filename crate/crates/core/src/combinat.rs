//! Rising factorials, set partitions and the index enumerations used by
//! the bracket-measure expansions.

use crate::scalar::Scalar;

/// `w (w+1) ... (w+n-1)`, with `w^(0) = 1`.
pub fn rising_factorial<S: Scalar>(w: &S, n: usize) -> S {
    let mut out = S::one();
    let mut term = w.clone();
    let one = S::one();
    for _ in 0..n {
        out *= &term;
        term += &one;
    }
    out
}

pub fn factorial<S: Scalar>(n: usize) -> S {
    let mut out = S::one();
    for i in 2..=n {
        out *= &S::from_usize(i);
    }
    out
}

pub fn factorial_u128(n: usize) -> u128 {
    (2..=n as u128).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

/// A set partition of `{0, ..., m-1}`. Blocks are sorted internally and
/// listed by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Streams every set partition of `{0, ..., m-1}` exactly once, in
/// restricted-growth-string order. For `m = 0` the single empty partition
/// is produced.
pub fn partitions(m: usize) -> Partitions {
    Partitions {
        m,
        rgs: vec![0; m],
        done: false,
    }
}

pub struct Partitions {
    m: usize,
    rgs: Vec<usize>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        let nblocks = self.rgs.iter().max().map_or(0, |&b| b + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        let out = SetPartition { blocks };

        // advance: rightmost position that can grow
        self.done = true;
        for i in (1..self.m).rev() {
            let prefix_max = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= prefix_max {
                self.rgs[i] += 1;
                for v in &mut self.rgs[i + 1..] {
                    *v = 0;
                }
                self.done = false;
                break;
            }
        }
        Some(out)
    }
}

/// All `r`-tuples of pairwise distinct entries of `{0, ..., m-1}`.
pub fn distinct_tuples(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, r: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(m, r, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    if r <= m {
        rec(m, r, &mut Vec::with_capacity(r), &mut vec![false; m], &mut out);
    }
    out
}

/// All weakly increasing `r`-tuples `j_1 <= ... <= j_r` from `{0, ..., k-1}`.
pub fn weakly_increasing(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for j in start..k {
            cur.push(j);
            rec(k, r, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Increasing `j`-subsets of `{0, ..., n-1}`.
pub fn combinations(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, j: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, j, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, j, 0, &mut Vec::with_capacity(j), &mut out);
    out
}

/// Ordered `parts`-tuples of integers `>= min` summing to `total`.
pub fn compositions(total: usize, parts: usize, min: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == parts {
            if rest >= min {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let left = parts - cur.len() - 1;
        let mut v = min;
        while v + left * min <= rest {
            cur.push(v);
            rec(rest - v, parts, min, cur, out);
            cur.pop();
            v += 1;
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, min, &mut Vec::with_capacity(parts), &mut out);
    out
}

//! Independent reference implementations used only by tests. Each takes a
//! different route from the library code (exact arithmetic, brute force,
//! power iteration) so that agreement is meaningful.
#![allow(dead_code)]

use std::collections::HashMap;

use num::bigint::BigInt;
use num::{BigRational, One, ToPrimitive, Zero};

const FRAC: u32 = 256;

fn fixed_to_f64(v: &BigInt) -> f64 {
    let shift = FRAC - 64;
    let scaled: BigInt = v >> shift;
    scaled.to_f64().unwrap() / 2f64.powi(64)
}

/// ln(p / q) as 2·atanh(y), `y = (p - q) / (p + q)` with |y| ≤ 1/3.
fn atanh_series(p: &BigInt, q: &BigInt) -> BigInt {
    if p < q {
        // atanh is odd; keeping the series positive lets the terms
        // truncate to exactly zero.
        return -atanh_series(q, p);
    }
    let y: BigInt = ((p - q) << FRAC) / (p + q);
    let y2: BigInt = (&y * &y) >> FRAC;
    let mut term = y.clone();
    let mut sum = y;
    let mut j = 1u32;
    loop {
        term = (&term * &y2) >> FRAC;
        if term.is_zero() {
            break;
        }
        sum += &term / BigInt::from(2 * j + 1);
        j += 1;
    }
    sum * 2
}

/// Natural log of the positive rational `p / q` in fixed point.
fn ln_fixed(p: &BigInt, q: &BigInt) -> BigInt {
    let k = p.bits() as i64 - q.bits() as i64;
    let (pp, qq) = if k >= 0 { (p.clone(), q << k as usize) } else { (p << (-k) as usize, q.clone()) };
    let ln2 = atanh_series(&BigInt::from(2), &BigInt::one());
    atanh_series(&pp, &qq) + ln2 * BigInt::from(k)
}

/// Distinctiveness score evaluated with 256 fractional bits.
pub fn zscore_hp(c1: u64, c2: u64, n1: u64, n2: u64) -> f64 {
    let (c1, c2, n1, n2) = (BigInt::from(c1), BigInt::from(c2), BigInt::from(n1), BigInt::from(n2));
    let p = &c1 + &c2;
    if p.is_zero() {
        return 0.0;
    }
    let n = &n1 + &n2;
    // a = (c1·n + p) / n and b = (c2·n + p) / n; the common 1/n cancels in
    // the log ratio.
    let a = &c1 * &n + &p;
    let b = &c2 * &n + &p;
    let log_ratio = ln_fixed(&(&a * (&n2 + 1)), &(&b * (&n1 + 1)));
    // 1/a' + 1/b' = n (a + b) / (a b)
    let s_num = &n * (&a + &b);
    let s_den = &a * &b;
    let sqrt_s: BigInt = ((s_num << (2 * FRAC)) / s_den).sqrt();
    fixed_to_f64(&((log_ratio << FRAC) / sqrt_s))
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact arithmetic mean of each coordinate, rounded once.
pub fn exact_mean(vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = BigRational::from_integer(BigInt::from(vectors.len()));
    (0..vectors[0].len())
        .map(|j| {
            let s = vectors.iter().fold(BigRational::zero(), |acc, v| acc + rational(v[j]));
            (s / &n).to_f64().unwrap()
        })
        .collect()
}

/// Least-squares quadratic `a x² + b x + c` from exact normal equations.
pub fn exact_quadratic(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut sx = vec![BigRational::zero(); 5];
    let mut sxy = vec![BigRational::zero(); 3];
    for &(x, y) in points {
        let (x, y) = (rational(x), rational(y));
        let mut pow = BigRational::one();
        for k in 0..5 {
            if k < 3 {
                sxy[k] += &pow * &y;
            }
            sx[k] += &pow;
            pow *= &x;
        }
    }
    // Unknowns (c, b, a): row i is Σ x^(i+j) · coef_j = Σ x^i y.
    let mut m: Vec<Vec<BigRational>> =
        (0..3).map(|i| (0..3).map(|j| sx[i + j].clone()).chain([sxy[i].clone()]).collect()).collect();
    for col in 0..3 {
        let pivot = (col..3).find(|&r| !m[r][col].is_zero()).expect("non-singular system");
        m.swap(col, pivot);
        for r in 0..3 {
            if r != col {
                let f = &m[r][col] / &m[col][col];
                let pivot_row = m[col].clone();
                for (cell, p) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                    *cell -= &f * p;
                }
            }
        }
    }
    let coef = |i: usize| (&m[i][3] / &m[i][i]).to_f64().unwrap();
    (coef(2), coef(1), coef(0))
}

/// Top-`size` terms by descending count, ties by (category, lemma), from
/// a flat token list sorted and run-length counted.
pub fn brute_vocabulary<K: Ord + Clone>(tokens: &[K], size: usize) -> Vec<(K, u64)> {
    let mut sorted = tokens.to_vec();
    sorted.sort();
    let mut runs: Vec<(K, u64)> = Vec::new();
    for t in sorted {
        match runs.last_mut() {
            Some((k, c)) if *k == t => *c += 1,
            _ => runs.push((t, 1)),
        }
    }
    runs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    runs.truncate(size);
    runs
}

/// Leading eigenpairs of the sample covariance by power iteration with
/// deflation. Vectors are oriented like the library (largest |loading| > 0).
pub fn power_iteration_pca(rows: &[Vec<f64>], k: usize) -> Vec<(f64, Vec<f64>)> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1) as f64;
            }
        }
    }
    let mut out = Vec::new();
    for _ in 0..k {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 * 0.37).collect();
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| cov[i][j] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            lambda = norm;
            if delta < 1e-15 {
                break;
            }
        }
        let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..d {
            for j in 0..d {
                cov[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

fn partition_inertia(rows: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for (r, &l) in rows.iter().zip(labels) {
        counts[l] += 1.0;
        sums[l].iter_mut().zip(r).for_each(|(s, x)| *s += x);
    }
    rows.iter()
        .zip(labels)
        .map(|(r, &l)| r.iter().zip(&sums[l]).map(|(x, s)| (x - s / counts[l]).powi(2)).sum::<f64>())
        .sum()
}

/// Minimum within-cluster sum of squares over every partition of the rows
/// into exactly `k` non-empty clusters.
pub fn exhaustive_kmeans(rows: &[Vec<f64>], k: usize) -> f64 {
    fn recurse(rows: &[Vec<f64>], k: usize, labels: &mut Vec<usize>, used: usize, best: &mut f64) {
        let i = labels.len();
        if i == rows.len() {
            if used == k {
                *best = best.min(partition_inertia(rows, labels, k));
            }
            return;
        }
        if rows.len() - i < k - used {
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels.push(l);
            recurse(rows, k, labels, used.max(l + 1), best);
            labels.pop();
        }
    }
    let mut best = f64::INFINITY;
    recurse(rows, k, &mut Vec::with_capacity(rows.len()), 0, &mut best);
    best
}

/// Pair-counting adjusted Rand index computed directly over all pairs.
pub fn pairwise_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let total: f64 = both + only_a + only_b + neither;
    let expected = (both + only_a) * (both + only_b) / total;
    let max = ((both + only_a) + (both + only_b)) / 2.0;
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

/// Counts per key.
pub fn tally<K: std::hash::Hash + Eq, I: IntoIterator<Item = K>>(items: I) -> HashMap<K, usize> {
    let mut m = HashMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

pub fn abs_diff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}


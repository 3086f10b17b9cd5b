//! Dynamic time warping: full dynamic programming and the multi-resolution
//! FastDTW approximation.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtwMode {
    Exact,
    Fast { radius: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub distance: f64,
    pub path_length: usize,
    pub mode: DtwMode,
}

/// Exact DP up to `exact_limit` elements in the longer sequence, FastDTW
/// with `radius` beyond that.
pub fn select_mode(len_a: usize, len_b: usize, exact_limit: usize, radius: usize) -> DtwMode {
    if len_a.max(len_b) <= exact_limit {
        DtwMode::Exact
    } else {
        DtwMode::Fast { radius }
    }
}

/// Elements that can be averaged pairwise when coarsening a sequence.
pub trait Coarsen: Clone {
    fn midpoint(&self, other: &Self) -> Self;
}

impl Coarsen for f64 {
    fn midpoint(&self, other: &Self) -> Self {
        (self + other) / 2.0
    }
}

impl Coarsen for Vec<f64> {
    fn midpoint(&self, other: &Self) -> Self {
        self.iter().zip(other).map(|(a, b)| (a + b) / 2.0).collect()
    }
}

/// Absolute difference, the Euclidean distance between scalars.
pub fn abs_diff(a: &f64, b: &f64) -> f64 {
    libm::fabs(a - b)
}

/// Euclidean distance between vectors of equal length.
#[allow(clippy::ptr_arg)]
pub fn euclidean(a: &Vec<f64>, b: &Vec<f64>) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Minimum cumulative cost of a monotone alignment using steps (1,0), (0,1)
/// and (1,1).
pub fn dtw_distance<T: Coarsen>(a: &[T], b: &[T], dist: impl Fn(&T, &T) -> f64, mode: DtwMode) -> Result<Alignment> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("dtw needs two non-empty sequences"));
    }
    let (distance, path) = match mode {
        DtwMode::Exact => windowed(a, b, &dist, &Window::full(a.len(), b.len())),
        DtwMode::Fast { radius } => fast(a, b, &dist, radius),
    };
    if !distance.is_finite() || distance < 0.0 {
        return Err(contract("dtw distance is not a finite non-negative number"));
    }
    Ok(Alignment { distance, path_length: path.len(), mode })
}

/// Per-row inclusive column ranges.
struct Window {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Window {
    fn full(n: usize, m: usize) -> Self {
        Self { lo: vec![0; n], hi: vec![m - 1; n] }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        i < self.lo.len() && self.lo[i] <= j && j <= self.hi[i]
    }
}

/// DP restricted to `window`. Ties between predecessors prefer (i-1, j),
/// then (i, j-1), then (i-1, j-1).
fn windowed<T>(a: &[T], b: &[T], dist: &impl Fn(&T, &T) -> f64, window: &Window) -> (f64, Vec<(usize, usize)>) {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * width];
    // 0 = up, 1 = left, 2 = diagonal
    let mut from = vec![0u8; (n + 1) * width];
    cost[0] = 0.0;
    for i in 1..=n {
        for j in (window.lo[i - 1] + 1)..=(window.hi[i - 1] + 1) {
            let candidates = [cost[(i - 1) * width + j], cost[i * width + j - 1], cost[(i - 1) * width + j - 1]];
            let mut best = 0;
            for (k, c) in candidates.iter().enumerate().skip(1) {
                if *c < candidates[best] {
                    best = k;
                }
            }
            cost[i * width + j] = candidates[best] + dist(&a[i - 1], &b[j - 1]);
            from[i * width + j] = best as u8;
        }
    }
    let mut path = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        match from[i * width + j] {
            0 => i -= 1,
            1 => j -= 1,
            _ => {
                i -= 1;
                j -= 1;
            }
        }
    }
    path.reverse();
    (cost[n * width + m], path)
}

fn halve<T: Coarsen>(x: &[T]) -> Vec<T> {
    x.chunks_exact(2).map(|p| p[0].midpoint(&p[1])).collect()
}

fn fast<T: Coarsen>(a: &[T], b: &[T], dist: &impl Fn(&T, &T) -> f64, radius: usize) -> (f64, Vec<(usize, usize)>) {
    let min_size = radius + 2;
    if a.len() < min_size || b.len() < min_size {
        return windowed(a, b, dist, &Window::full(a.len(), b.len()));
    }
    let (_, coarse_path) = fast(&halve(a), &halve(b), dist, radius);
    let window = expand_window(&coarse_path, a.len(), b.len(), radius);
    windowed(a, b, dist, &window)
}

/// Projects a coarse path to full resolution, widened by `radius` cells.
fn expand_window(path: &[(usize, usize)], n: usize, m: usize, radius: usize) -> Window {
    let r = radius as isize;
    let mut cells = alloc::collections::BTreeSet::new();
    for &(i, j) in path {
        for di in -r..=r {
            for dj in -r..=r {
                let (ci, cj) = (i as isize + di, j as isize + dj);
                if ci < 0 || cj < 0 {
                    continue;
                }
                let (ci, cj) = (ci as usize, cj as usize);
                for (fi, fj) in [(2 * ci, 2 * cj), (2 * ci, 2 * cj + 1), (2 * ci + 1, 2 * cj), (2 * ci + 1, 2 * cj + 1)] {
                    if fi < n && fj < m {
                        cells.insert((fi, fj));
                    }
                }
            }
        }
    }
    // contiguous run per row, starting no earlier than the previous row's start
    let mut lo = vec![usize::MAX; n];
    let mut hi = vec![0; n];
    let mut start = 0;
    for i in 0..n {
        let mut first = None;
        for j in start..m {
            if cells.contains(&(i, j)) {
                if first.is_none() {
                    first = Some(j);
                }
                hi[i] = j;
            } else if first.is_some() {
                break;
            }
        }
        if let Some(f) = first {
            lo[i] = f;
            start = f;
        }
    }
    // keep every row non-empty and connected to the one above, and reach both corners
    lo[0] = 0;
    if hi[0] < lo[0] {
        hi[0] = 0;
    }
    for i in 1..n {
        if lo[i] == usize::MAX {
            lo[i] = hi[i - 1];
            hi[i] = hi[i - 1];
        }
        lo[i] = lo[i].max(lo[i - 1]).min(hi[i - 1] + 1).min(m - 1);
        hi[i] = hi[i].max(lo[i]).max(lo[i - 1]);
    }
    hi[n - 1] = m - 1;
    let w = Window { lo, hi };
    debug_assert!(w.contains(0, 0) && w.contains(n - 1, m - 1));
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimum over every monotone path, summing costs from the start.
    fn oracle<T>(a: &[T], b: &[T], dist: &impl Fn(&T, &T) -> f64) -> f64 {
        fn go<T>(i: usize, j: usize, acc: f64, a: &[T], b: &[T], dist: &impl Fn(&T, &T) -> f64, best: &mut f64) {
            let acc = acc + dist(&a[i], &b[j]);
            if i == a.len() - 1 && j == b.len() - 1 {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            if i + 1 < a.len() {
                go(i + 1, j, acc, a, b, dist, best);
            }
            if j + 1 < b.len() {
                go(i, j + 1, acc, a, b, dist, best);
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                go(i + 1, j + 1, acc, a, b, dist, best);
            }
        }
        let mut best = f64::INFINITY;
        go(0, 0, 0.0, a, b, dist, &mut best);
        best
    }

    #[test]
    fn identical_sequences() {
        let a = [0.3, 0.9, 0.1];
        let r = dtw_distance(&a, &a, abs_diff, DtwMode::Exact).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.path_length, 3);
    }

    #[test]
    fn crossed_pair() {
        let r = dtw_distance(&[0.0, 1.0], &[1.0, 0.0], abs_diff, DtwMode::Exact).unwrap();
        assert_eq!(r.distance, oracle(&[0.0, 1.0], &[1.0, 0.0], &abs_diff));
        assert_eq!(r.distance, 2.0);
    }

    #[test]
    fn singletons_and_one_vs_many() {
        let r = dtw_distance(&[0.25], &[1.0], abs_diff, DtwMode::Exact).unwrap();
        assert_eq!(r.distance, 0.75);
        let r = dtw_distance(&[1.0], &[0.0, 0.5, 1.0], abs_diff, DtwMode::Exact).unwrap();
        assert_eq!(r.distance, 1.5);
        assert_eq!(r.path_length, 3);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(dtw_distance::<f64>(&[], &[1.0], abs_diff, DtwMode::Exact).is_err());
    }

    #[test]
    fn mode_selection() {
        assert_eq!(select_mode(512, 3, 512, 1), DtwMode::Exact);
        assert_eq!(select_mode(513, 3, 512, 1), DtwMode::Fast { radius: 1 });
    }

    #[test]
    fn fast_on_long_sequences_is_close() {
        let a: Vec<f64> = (0..600).map(|i| libm::sin(i as f64 / 30.0)).collect();
        let b: Vec<f64> = (0..700).map(|i| libm::sin(i as f64 / 35.0 + 0.2)).collect();
        let exact = dtw_distance(&a, &b, abs_diff, DtwMode::Exact).unwrap().distance;
        let approx = dtw_distance(&a, &b, abs_diff, DtwMode::Fast { radius: 1 }).unwrap().distance;
        assert!(approx >= exact);
        assert!(approx <= exact * 1.5 + 1.0, "{approx} vs {exact}");
    }

    fn scalars() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 1..=8)
    }

    fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 1..=8)
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(a in scalars(), b in scalars()) {
            let r = dtw_distance(&a, &b, abs_diff, DtwMode::Exact).unwrap();
            prop_assert_eq!(r.distance.to_bits(), oracle(&a, &b, &abs_diff).to_bits());
            let wide = dtw_distance(&a, &b, abs_diff, DtwMode::Fast { radius: a.len().max(b.len()) }).unwrap();
            prop_assert_eq!(wide.distance.to_bits(), r.distance.to_bits());
        }

        #[test]
        fn exact_matches_enumeration_vectors(a in vectors(), b in vectors()) {
            let r = dtw_distance(&a, &b, euclidean, DtwMode::Exact).unwrap();
            prop_assert_eq!(r.distance.to_bits(), oracle(&a, &b, &euclidean).to_bits());
        }

        #[test]
        fn fast_never_undercuts_exact(
            a in proptest::collection::vec(-5.0f64..5.0, 1..60),
            b in proptest::collection::vec(-5.0f64..5.0, 1..60),
            radius in 0usize..3,
        ) {
            let exact = dtw_distance(&a, &b, abs_diff, DtwMode::Exact).unwrap().distance;
            let approx = dtw_distance(&a, &b, abs_diff, DtwMode::Fast { radius }).unwrap().distance;
            prop_assert!(approx >= exact);
            prop_assert!(approx.is_finite());
        }

        #[test]
        fn symmetric(a in scalars(), b in scalars()) {
            let ab = dtw_distance(&a, &b, abs_diff, DtwMode::Exact).unwrap().distance;
            let ba = dtw_distance(&b, &a, abs_diff, DtwMode::Exact).unwrap().distance;
            prop_assert!((ab - ba).abs() < 1e-12);
        }
    }
}

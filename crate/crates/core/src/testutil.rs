//! Random generators and classical oracles shared by unit tests.

use faer::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, c, CMat, C64};
use crate::maps::KrausMap;
use crate::operator::{matrix_function, DensityOperator, HermitianOperator, MatrixFunction};

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    random_rect(rng, n, n)
}

pub fn random_rect(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
    Mat::from_fn(r, cols, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(random_matrix(rng, n))
}

pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> DensityOperator {
    let g = random_matrix(rng, n);
    let p = linalg::mul(g.as_ref(), g.adjoint());
    let t = linalg::trace(p.as_ref()).re;
    DensityOperator::from_matrix(linalg::scale(p.as_ref(), c(1.0 / t))).unwrap()
}

pub fn random_kraus(rng: &mut ChaCha8Rng, din: usize, dout: usize, count: usize) -> KrausMap {
    KrausMap::new(
        din,
        dout,
        (0..count).map(|_| random_rect(rng, dout, din)).collect(),
    )
    .unwrap()
}

/// Random unital CP map on `d × d` matrices.
pub fn random_unital(rng: &mut ChaCha8Rng, d: usize, count: usize) -> KrausMap {
    let raw = random_kraus(rng, d, d, count);
    let s = HermitianOperator::from_matrix_unchecked(raw.image_of_identity());
    let inv_sqrt = matrix_function(&s, MatrixFunction::Power(-0.5)).unwrap();
    let ops = raw
        .ops()
        .iter()
        .map(|a| linalg::mul(inv_sqrt.matrix(), a.as_ref()))
        .collect();
    KrausMap::new(d, d, ops).unwrap()
}

/// Row-stochastic matrix whose entries vanish with
/// probability `zero_prob`; every row keeps at least one positive entry.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(zero_prob) {
                        0.0
                    } else {
                        rng.gen_range(0.05..1.0)
                    }
                })
                .collect();
            if row.iter().all(|&x| x == 0.0) {
                let k = rng.gen_range(0..n);
                row[k] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
            row
        })
        .collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn reachable(adj: &[Vec<bool>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..adj.len() {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// (strongly connected, strongly connected and aperiodic) for the digraph
/// of positive entries.
pub fn digraph_classification(t: &[Vec<f64>]) -> (bool, bool) {
    let n = t.len();
    let adj: Vec<Vec<bool>> = t
        .iter()
        .map(|r| r.iter().map(|&x| x > 0.0).collect())
        .collect();
    let rev: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| adj[j][i]).collect())
        .collect();
    let strong = reachable(&adj, 0).iter().all(|&b| b) && reachable(&rev, 0).iter().all(|&b| b);
    if !strong {
        return (false, false);
    }
    let mut level = vec![-1i64; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj[u][v] && level[v] < 0 {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut period = 0;
    for u in 0..n {
        for v in 0..n {
            if adj[u][v] {
                period = gcd(period, level[u] + 1 - level[v]);
            }
        }
    }
    (true, period == 1)
}

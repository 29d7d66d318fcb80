//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use forestcast::cart::{GrowConfig, RegressionTree, TreeNode};
use forestcast::forest::{Fingerprint, ForestConfig, ForestModel};
use forestcast::panel::{DesignMatrix, DesignRow};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force split search: every feature, every midpoint between distinct
/// sorted values, SSEs recomputed from scratch with two-pass means.
/// Returns `(feature, threshold, objective)`.
pub fn brute_split(x: &[Vec<f64>], y: &[f64], rows: &[usize], candidates: &[usize]) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let parent = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>() / n as f64;
    let tol = 1e-12 * parent;
    let sse = |part: &[usize]| -> f64 {
        let m = part.iter().map(|&i| y[i]).sum::<f64>() / part.len() as f64;
        part.iter().map(|&i| (y[i] - m).powi(2)).sum()
    };
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut best: Option<(usize, f64, f64)> = None;
    for k in ks {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][k]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let left: Vec<usize> = rows.iter().copied().filter(|&i| x[i][k] <= t).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&i| x[i][k] > t).collect();
            let obj = (sse(&left) + sse(&right)) / n as f64;
            if best.is_none_or(|b| obj < b.2 - tol) {
                best = Some((k, t, obj));
            }
        }
    }
    best
}

/// Solves `a · x = b` by Gauss-Jordan elimination with partial pivoting and
/// returns `(x, a^{-1})`.
pub fn gauss_jordan(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular oracle system");
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    let pivot_row = m[col].clone();
                    for (v, p) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    let x = m.iter().map(|row| row[2 * k]).collect();
    let inv = m.iter().map(|row| row[k..2 * k].to_vec()).collect();
    (x, inv)
}

/// Textbook OLS with an intercept: `β = (X'X)^{-1} X'y` and the HC0 sandwich
/// `(X'X)^{-1} X' diag(e²) X (X'X)^{-1}`. Returns `(β, se)`.
pub fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect();
    let k = rows[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (r, &yi) in rows.iter().zip(y) {
        for a in 0..k {
            xty[a] += r[a] * yi;
            for b in 0..k {
                xtx[a][b] += r[a] * r[b];
            }
        }
    }
    let (beta, inv) = gauss_jordan(&xtx, &xty);
    let mut meat = vec![vec![0.0; k]; k];
    for (r, &yi) in rows.iter().zip(y) {
        let e = yi - r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += e * e * r[a] * r[b];
            }
        }
    }
    let mut se = vec![0.0; k];
    for (j, s) in se.iter_mut().enumerate() {
        let mut v = 0.0;
        for a in 0..k {
            for b in 0..k {
                v += inv[j][a] * meat[a][b] * inv[b][j];
            }
        }
        *s = v.sqrt();
    }
    let _ = n;
    (beta, se)
}

pub fn names(p: usize) -> Vec<String> {
    (0..p).map(|k| format!("x{k}")).collect()
}

/// A design with one country per 40 rows and consecutive years.
pub fn design_from(x: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
    let p = x.first().map_or(0, Vec::len);
    let rows = x
        .into_iter()
        .zip(y)
        .enumerate()
        .map(|(i, (features, target))| DesignRow {
            country: format!("C{:02}", i / 40),
            year: 1980 + (i % 40) as i32,
            features,
            target,
        })
        .collect();
    DesignMatrix::new(names(p), rows, false).unwrap()
}

/// Uniform features on [-1, 1] and a nonlinear noisy target.
pub fn random_design(rng: &mut impl Rng, n: usize, p: usize) -> DesignMatrix {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| {
            let step = if r[0] > 0.2 { 2.0 } else { -1.0 };
            step + r.iter().skip(1).map(|v| v * v).sum::<f64>() + 0.3 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    design_from(x, y)
}

pub fn leaf(v: f64) -> Box<TreeNode> {
    Box::new(TreeNode::Leaf { prediction: v, n: 1 })
}

pub fn split(feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode>) -> Box<TreeNode> {
    Box::new(TreeNode::Split {
        feature,
        threshold,
        n: 2,
        left,
        right,
    })
}

/// Wraps hand-built trees into a forest over `p` features.
pub fn forest_of(trees: Vec<TreeNode>, p: usize) -> ForestModel {
    let names = names(p);
    let trees: Vec<RegressionTree> = trees
        .into_iter()
        .map(|root| RegressionTree {
            root,
            feature_names: names.clone(),
            config: GrowConfig::default(),
            training_rows: vec![],
        })
        .collect();
    ForestModel {
        config: ForestConfig {
            n_trees: trees.len(),
            ..Default::default()
        },
        trees,
        feature_names: names,
        fingerprint: Fingerprint {
            rows: 0,
            feature_hash: 0,
        },
        feature_means: vec![0.0; p],
        feature_ranges: vec![(-1.0, 1.0); p],
        target_range: (0.0, 1.0),
    }
}

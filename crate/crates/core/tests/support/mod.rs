//! Independent oracles for integration and acceptance tests. Everything here
//! recomputes expected values through a different route than the library:
//! centered normal equations instead of SVD, dense Riemann sums instead of
//! per-bin quadrature, and exhaustive enumeration or integer DP instead of
//! branch and bound.
//!
//! Shared by several test binaries; not every binary uses every oracle.
#![allow(dead_code)]

use framereg_core::{CharacteristicPoints, KnapsackItem, SpriteId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Least-squares affine fit via normal equations on centroid-centered
/// coordinates, solved by Gaussian elimination. Returns the residual sum of
/// squared distances measured on the original coordinates.
pub fn affine_residual_oracle(src: &[[f64; 2]], dst: &[[f64; 2]]) -> f64 {
    assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let center = |pts: &[[f64; 2]]| {
        let sx: f64 = pts.iter().map(|p| p[0]).sum();
        let sy: f64 = pts.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    };
    let cs = center(src);
    let cd = center(dst);
    let u: Vec<[f64; 2]> = src.iter().map(|p| [p[0] - cs[0], p[1] - cs[1]]).collect();
    let v: Vec<[f64; 2]> = dst.iter().map(|p| [p[0] - cd[0], p[1] - cd[1]]).collect();

    // Solve two independent 3-parameter systems, one per output coordinate.
    let mut params = [[0.0_f64; 3]; 2];
    for coord in 0..2 {
        let mut a = [[0.0_f64; 3]; 3];
        let mut b = [0.0_f64; 3];
        for (p, q) in u.iter().zip(&v) {
            let row = [p[0], p[1], 1.0];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += row[i] * row[j];
                }
                b[i] += row[i] * q[coord];
            }
        }
        params[coord] = solve3(a, b);
    }

    src.iter()
        .zip(dst)
        .map(|(p, q)| {
            let x = p[0] - cs[0];
            let y = p[1] - cs[1];
            let mx = params[0][0] * x + params[0][1] * y + params[0][2] + cd[0];
            let my = params[1][0] * x + params[1][1] * y + params[1][2] + cd[1];
            (mx - q[0]).powi(2) + (my - q[1]).powi(2)
        })
        .sum()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "oracle hit a singular system");
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut sum = b[row];
        for k in (row + 1)..3 {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    x
}

/// Confirms a residual is a local minimum of the quadratic objective by
/// probing perturbed affine parameters around the oracle optimum.
pub fn residual_is_locally_minimal(src: &[[f64; 2]], dst: &[[f64; 2]], residual: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF17);
    let objective = |params: &[f64; 6]| -> f64 {
        src.iter()
            .zip(dst)
            .map(|(p, q)| {
                let mx = params[0] * p[0] + params[1] * p[1] + params[2];
                let my = params[3] * p[0] + params[4] * p[1] + params[5];
                (mx - q[0]).powi(2) + (my - q[1]).powi(2)
            })
            .sum()
    };
    // Coarse random restarts refined by coordinate descent must not beat the
    // claimed residual by more than numerical slack.
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let mut params = [
            1.0 + rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            rng.random_range(-5.0..5.0),
            rng.random_range(-0.1..0.1),
            1.0 + rng.random_range(-0.1..0.1),
            rng.random_range(-5.0..5.0),
        ];
        let mut step = 0.5;
        let mut current = objective(&params);
        while step > 1e-9 {
            let mut improved = false;
            for i in 0..6 {
                for dir in [-1.0, 1.0] {
                    let mut candidate = params;
                    candidate[i] += dir * step;
                    let value = objective(&candidate);
                    if value < current {
                        params = candidate;
                        current = value;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(current);
    }
    residual <= best + 1e-6 * (1.0 + best)
}

pub fn to_points(v: &[[f64; 2]]) -> CharacteristicPoints {
    CharacteristicPoints::new(v.to_vec()).unwrap()
}

/// Dense Riemann sum of `density(x) * attenuation(x)` over [0, 1] for a
/// piecewise-constant density given as bin values.
pub fn riemann_expected_attenuation(
    bins: &[f64],
    attenuation: impl Fn(f64) -> f64,
    samples: usize,
) -> f64 {
    let k = bins.len();
    let h = 1.0 / samples as f64;
    (0..samples)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            let bin = ((x * k as f64) as usize).min(k - 1);
            bins[bin] * attenuation(x) * h
        })
        .sum()
}

/// Exhaustive 0/1 knapsack optimum; usable up to ~20 items.
pub fn enumerate_knapsack(items: &[KnapsackItem], capacity: f64) -> f64 {
    let n = items.len();
    assert!(n <= 20, "enumeration oracle limited to 20 items");
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << n) {
        let mut weight = 0.0;
        let mut benefit = 0.0;
        for (i, item) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                weight += item.weight;
                benefit += item.benefit;
            }
        }
        if weight <= capacity {
            best = best.max(benefit);
        }
    }
    best
}

/// Classic DP over integer weights; cross-checks the enumeration and the
/// branch-and-bound solver on integer-weight instances.
pub fn dp_knapsack(values: &[f64], weights: &[u64], capacity: u64) -> f64 {
    let cap = capacity as usize;
    let mut table = vec![0.0_f64; cap + 1];
    for (value, &weight) in values.iter().zip(weights) {
        let w = weight as usize;
        if w > cap {
            continue;
        }
        for c in (w..=cap).rev() {
            table[c] = table[c].max(table[c - w] + value);
        }
    }
    table[cap]
}

/// Random knapsack instance with benefits and weights in (0, 10].
pub fn random_items(rng: &mut ChaCha8Rng, n: usize) -> Vec<KnapsackItem> {
    (0..n)
        .map(|i| KnapsackItem {
            id: SpriteId::new(format!("s{i:02}")),
            benefit: rng.random_range(0.0_f64..10.0).max(1e-3),
            weight: rng.random_range(0.0_f64..10.0).max(1e-3),
        })
        .collect()
}

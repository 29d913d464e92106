//! Metrics recomputed with explicit loops over a dense `k × a × 2 × 8` array.

use anthropometer_experiment::metrics::{mad, rpe};
use anthropometer_experiment::{FoldResults, ResultsTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub k: usize,
    pub a: usize,
    /// `[fold][instance][0 = estimated, 1 = actual][dimension]`
    pub v: Vec<Vec<[[f64; 8]; 2]>>,
}

pub fn random_dense(seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, a) = (rng.gen_range(1..7), rng.gen_range(1..30));
    let v = (0..k)
        .map(|_| {
            (0..a)
                .map(|_| {
                    let mut pair = [[0.0; 8]; 2];
                    for d in 0..8 {
                        pair[1][d] = rng.gen_range(0.2..2.0);
                        pair[0][d] = pair[1][d] + rng.gen_range(-0.1..0.1);
                    }
                    pair
                })
                .collect()
        })
        .collect();
    Dense { k, a, v }
}

pub fn to_tensor(d: &Dense) -> ResultsTensor {
    let folds = d
        .v
        .iter()
        .enumerate()
        .map(|(j, rows)| FoldResults {
            indices: (0..d.a).map(|i| j * d.a + i).collect(),
            estimated: rows.iter().map(|p| p[0]).collect(),
            actual: rows.iter().map(|p| p[1]).collect(),
        })
        .collect();
    ResultsTensor::new(folds).unwrap()
}

/// Returns (MAD, RPE %) per dimension.
pub fn oracle(d: &Dense) -> ([f64; 8], [f64; 8]) {
    let (mut m, mut r) = ([0.0; 8], [0.0; 8]);
    for dim in 0..8 {
        let mut fold_sum_m = 0.0;
        let mut fold_sum_r = 0.0;
        for j in 0..d.k {
            let mut sm = 0.0;
            let mut sr = 0.0;
            for i in 0..d.a {
                let (e, a) = (d.v[j][i][0][dim], d.v[j][i][1][dim]);
                sm += (e - a).abs();
                sr += ((e - a) / a).abs();
            }
            fold_sum_m += sm / d.a as f64;
            fold_sum_r += sr / d.a as f64;
        }
        m[dim] = fold_sum_m / d.k as f64;
        r[dim] = 100.0 * fold_sum_r / d.k as f64;
    }
    (m, r)
}

/// Largest deviation between the library and the loops over `cases` tensors.
pub fn max_deviation(cases: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let d = random_dense(seed);
        let t = to_tensor(&d);
        let (om, or) = oracle(&d);
        let (lm, lr) = (mad(&t), rpe(&t).unwrap());
        for i in 0..8 {
            worst = worst.max((om[i] - lm[i]).abs()).max((or[i] - lr[i]).abs());
        }
    }
    worst
}

/// MAD in mm and RPE in % for a constant +10 mm error on 1.0 m.
pub fn closed_form() -> ([f64; 8], [f64; 8]) {
    let t = ResultsTensor::new(
        (0..5)
            .map(|j| FoldResults {
                indices: vec![j],
                estimated: vec![[1.010; 8]],
                actual: vec![[1.0; 8]],
            })
            .collect(),
    )
    .unwrap();
    (mad(&t).map(|v| v * 1000.0), rpe(&t).unwrap())
}

//! Seeded generators for test and experiment instances: random channels,
//! structured ensembles (collinear, dominance-satisfying), and random
//! assignments. Everything takes the generator by argument so callers own
//! reproducibility.

use crate::assignment::Assignment;
use crate::channel::Channel;
use rand::seq::SliceRandom;
use rand::Rng;

/// Uniform draw bounded away from zero, so normalized vectors keep every
/// entry strictly positive and numerically comfortable.
fn positive_uniform(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.05..1.0)
}

/// Random strictly positive distribution on `dim` points.
pub fn random_simplex(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(dim >= 1);
    let raw: Vec<f64> = (0..dim).map(|_| positive_uniform(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

/// Random channel with strictly positive prior and transition rows.
pub fn random_channel(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Channel {
    let px = random_simplex(inputs, rng);
    let pyx: Vec<Vec<f64>> = (0..inputs).map(|_| random_simplex(outputs, rng)).collect();
    Channel::new(px, pyx).expect("normalized positive rows form a channel")
}

/// Binary symmetric channel with crossover `eps` and a uniform prior.
pub fn bsc(eps: f64) -> Channel {
    assert!((0.0..=1.0).contains(&eps));
    Channel::new(
        vec![0.5, 0.5],
        vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]],
    )
    .expect("crossover in [0,1] forms a channel")
}

/// Random channel whose posteriors lie on a line segment between two random
/// interior endpoints. With `sorted` the outputs walk the segment
/// monotonically from one endpoint to the other (so the channel is
/// sequentially collinear as given); otherwise the positions are shuffled.
pub fn random_collinear_channel(
    inputs: usize,
    outputs: usize,
    sorted: bool,
    rng: &mut impl Rng,
) -> Channel {
    assert!(outputs >= 2);
    let p = random_simplex(inputs, rng);
    let mut r = random_simplex(inputs, rng);
    // Keep the segment from degenerating to a point.
    for _ in 0..100 {
        let spread = p
            .iter()
            .zip(&r)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if spread > 0.05 {
            break;
        }
        r = random_simplex(inputs, rng);
    }

    let mut t: Vec<f64> = vec![0.0, 1.0];
    t.extend((0..outputs - 2).map(|_| rng.random_range(0.0..1.0)));
    if sorted {
        t.sort_by(f64::total_cmp);
    } else {
        t.shuffle(rng);
    }

    let py = random_simplex(outputs, rng);
    // Posterior for output j is the segment point at t[j]; the joint column
    // is that posterior scaled by P(Y = j), and rows renormalize to the
    // induced prior.
    let mut joint = vec![vec![0.0; outputs]; inputs];
    for j in 0..outputs {
        for i in 0..inputs {
            let post = (1.0 - t[j]) * p[i] + t[j] * r[i];
            joint[i][j] = py[j] * post;
        }
    }
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let pyx: Vec<Vec<f64>> = joint
        .iter()
        .zip(&px)
        .map(|(row, &mass)| row.iter().map(|v| v / mass).collect())
        .collect();
    Channel::new(px, pyx).expect("segment posteriors stay strictly positive")
}

/// Random channel satisfying the full pairwise dominance condition by
/// construction: transition rows come from an exponential family
/// `pyx[i][j] ∝ base_j · exp(κ · v_i · u_j)` with both parameter vectors
/// sorted ascending, which makes every 2×2 minor non-negative.
pub fn random_dominant_channel(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Channel {
    let px = random_simplex(inputs, rng);
    let base: Vec<f64> = (0..outputs).map(|_| positive_uniform(rng)).collect();
    let mut u: Vec<f64> = (0..outputs).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut v: Vec<f64> = (0..inputs).map(|_| rng.random_range(0.0..1.0)).collect();
    u.sort_by(f64::total_cmp);
    v.sort_by(f64::total_cmp);
    let kappa = 3.0;
    let pyx: Vec<Vec<f64>> = v
        .iter()
        .map(|&vi| {
            let row: Vec<f64> = base
                .iter()
                .zip(&u)
                .map(|(&b, &uj)| b * (kappa * vi * uj).exp())
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter().map(|w| w / sum).collect()
        })
        .collect();
    Channel::new(px, pyx).expect("exponential-family rows form a channel")
}

/// Random surjective assignment of `outputs` outputs onto `cells` cells:
/// uniform cell choice per output, with one randomly placed seed output per
/// cell to guarantee surjectivity.
pub fn random_assignment(outputs: usize, cells: usize, rng: &mut impl Rng) -> Assignment {
    assert!(cells >= 1 && cells <= outputs);
    let mut map: Vec<usize> = (0..outputs).map(|_| rng.random_range(0..cells)).collect();
    let mut seeds: Vec<usize> = (0..outputs).collect();
    seeds.shuffle(rng);
    for (z, &j) in seeds.iter().take(cells).enumerate() {
        map[j] = z;
    }
    Assignment::new(map, cells).expect("seeded map is surjective")
}

//! Finite-difference check of the Q-network gradient.

use garagegen::dqn::{QNetwork, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

/// Relative error. Central differences at this step carry about 1e-10
/// absolute rounding noise, so gradients under 1e-3 are compared against
/// a 1e-3 scale instead of their own magnitude.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub struct GradientReport {
    pub cases: usize,
    pub parameters: usize,
    pub worst: f64,
}

/// Compares every parameter's analytic gradient with central differences on
/// `cases` random networks and batches.
pub fn check(cases: usize, seed: u64) -> GradientReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientReport {
        cases,
        parameters: 0,
        worst: 0.0,
    };
    for _ in 0..cases {
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(2..=8)];
        for _ in 0..depth {
            sizes.push(rng.random_range(2..=10));
        }
        sizes.push(4);
        let mut net = QNetwork::new(&sizes, &mut rng).unwrap();
        let inputs: Vec<Vec<f64>> = (0..rng.random_range(1..=6))
            .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let batch: Vec<Sample<'_>> = inputs
            .iter()
            .map(|obs| Sample {
                obs,
                action: rng.random_range(0..4),
                target: rng.random_range(-5.0..5.0),
            })
            .collect();
        let (_, grad) = net.loss_and_gradient(&batch).unwrap();
        let base = net.params().to_vec();
        let mut loss_at = |i: usize, v: f64| {
            let mut p = base.clone();
            p[i] = v;
            net.set_params(&p).unwrap();
            net.loss_and_gradient(&batch).unwrap().0
        };
        for (i, &analytic) in grad.iter().enumerate() {
            let numeric = (loss_at(i, base[i] + STEP) - loss_at(i, base[i] - STEP)) / (2.0 * STEP);
            report.worst = report.worst.max(relative_error(analytic, numeric));
            report.parameters += 1;
        }
    }
    report
}

//! Draws from each sampler and prints sample moments next to the analytic ones.
//!
//! cargo run --example sample_distributions

use qdchan::distributions::{
    sample_exponential, sample_laplacian, sample_normal, sample_phase, sample_rician,
    sample_uniform,
};
use qdchan::RngStream;

const N: usize = 200_000;

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn report(name: &str, xs: &[f64], mean: f64, var: f64) {
    let (m, v) = moments(xs);
    println!("{name:<28} mean {m:>9.4} (expect {mean:>9.4})   var {v:>9.4} (expect {var:>9.4})");
}

pub fn main() -> qdchan::Result<()> {
    let root = RngStream::new(7);

    let mut rng = root.child(0);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_normal(&mut rng, 1.5, 2.0))
        .collect::<Result<_, _>>()?;
    report("normal(1.5, 2^2)", &xs, 1.5, 4.0);

    let mut rng = root.child(1);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_laplacian(&mut rng, 0.0, 8.0))
        .collect::<Result<_, _>>()?;
    report("laplacian(0, var 8)", &xs, 0.0, 8.0);

    let mut rng = root.child(2);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_exponential(&mut rng, 0.25))
        .collect::<Result<_, _>>()?;
    report("exponential(rate 0.25)", &xs, 4.0, 16.0);

    let mut rng = root.child(3);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_uniform(&mut rng, -1.0, 3.0))
        .collect::<Result<_, _>>()?;
    report("uniform[-1, 3]", &xs, 1.0, 16.0 / 12.0);

    // Rayleigh case of the Rician law: mean sigma * sqrt(pi / 2), var (4 - pi) / 2 * sigma^2.
    let mut rng = root.child(4);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_rician(&mut rng, 0.0, 2.0))
        .collect::<Result<_, _>>()?;
    report(
        "rician(s 0, sigma 2)",
        &xs,
        2.0 * (std::f64::consts::PI / 2.0).sqrt(),
        (4.0 - std::f64::consts::PI) * 2.0,
    );

    // With s >> sigma the Rician is close to normal(s, sigma^2).
    let mut rng = root.child(5);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_rician(&mut rng, 10.0, 0.5))
        .collect::<Result<_, _>>()?;
    report(
        "rician(s 10, sigma 0.5)",
        &xs,
        (100.0f64 + 0.25).sqrt(),
        0.25,
    );

    let mut rng = root.child(6);
    let xs: Vec<f64> = (0..N).map(|_| sample_phase(&mut rng)).collect();
    report(
        "phase [0, 2pi)",
        &xs,
        std::f64::consts::PI,
        std::f64::consts::TAU.powi(2) / 12.0,
    );

    // Same (seed, path) gives the same numbers.
    let a = sample_normal(&mut RngStream::from_path(7, &[0]), 1.5, 2.0)?;
    assert_eq!(a, sample_normal(&mut root.child(0), 1.5, 2.0)?);
    println!("stream 7/0 first draw: {a}");
    Ok(())
}

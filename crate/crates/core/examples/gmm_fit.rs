//! Fit the two-component mixture to synthetic scores and print the clean
//! confidence for a few points.
//!
//!     cargo run --example gmm_fit

use icgnn::indicator::{clean_confidence, fit_gmm, IcsLevel, IcsVector};
use icgnn::rng;
use rand_distr::{Distribution, Normal};

fn main() -> icgnn::Result<()> {
    let mut r = rng::stream(0, "gmm-example");
    let clean = Normal::new(0.2, 0.05).unwrap();
    let noisy = Normal::new(0.7, 0.1).unwrap();
    let scores: Vec<f64> = (0..400)
        .map(|i| {
            let x: f64 = if i % 5 == 0 { noisy.sample(&mut r) } else { clean.sample(&mut r) };
            x.max(0.0)
        })
        .collect();
    let ics = IcsVector::new(scores, IcsLevel::Fused)?;
    let model = fit_gmm(&ics, 100)?;
    println!("means     {:.4?}", model.means);
    println!("variances {:.5?}", model.variances);
    println!("weights   {:.4?}", model.weights);
    println!("log-likelihood by iteration:");
    for (i, ll) in model.log_likelihood_trace.iter().enumerate() {
        println!("  {i:>3}  {ll:.4}");
    }
    let probe = IcsVector::new(vec![0.1, 0.3, 0.45, 0.6, 0.9], IcsLevel::Fused)?;
    let beta = clean_confidence(&model, &probe);
    for (x, b) in probe.values().iter().zip(beta.values()) {
        println!("score {x:.2} -> clean confidence {b:.4}");
    }
    Ok(())
}

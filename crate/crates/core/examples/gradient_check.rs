//! Compare the analytic GCN gradient with central finite differences.
//!
//!     cargo run --example gradient_check

use icgnn::encoder::{forward, loss_and_grad, GcnInput, Mode, ModelParams};
use icgnn::graph::NormalizedAdjacency;
use icgnn::rng;
use ndarray::Array2;
use rand::Rng;

fn main() -> icgnn::Result<()> {
    let (n, f, d, c) = (8, 5, 4, 3);
    let mut r = rng::stream(0, "gradcheck");
    let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4)];
    let adj = NormalizedAdjacency::from_edges(n, &edges)?;
    let x = Array2::from_shape_simple_fn((n, f), || r.gen_range(-1.0..1.0));
    let input = GcnInput::new(adj, x.view())?;
    let params = ModelParams::glorot(f, d, c, 0.0, &mut r)?;
    let mask = [0, 2, 5, 7];
    let mut targets = Array2::<f64>::zeros((n, c));
    for &i in &mask {
        targets[[i, i % c]] = 0.8;
        targets[[i, (i + 1) % c]] = 0.2;
    }
    let l2 = 5e-4;
    let loss = |p: &ModelParams| -> icgnn::Result<f64> {
        let out = forward(&input, p, Mode::Eval, &mut rng::stream(0, "unused"))?;
        Ok(loss_and_grad(&input, p, &out, targets.view(), &mask, l2)?.0)
    };
    let out = forward(&input, &params, Mode::Eval, &mut r)?;
    let (l, grads) = loss_and_grad(&input, &params, &out, targets.view(), &mask, l2)?;
    println!("loss {l:.6}");

    let h = 1e-5;
    let mut worst = 0.0f64;
    for (name, layer) in [("W1", 0), ("W2", 1)] {
        let analytic = if layer == 0 { &grads.w1 } else { &grads.w2 };
        for ((a, b), g) in analytic.indexed_iter() {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            let (wp, wm) = if layer == 0 { (&mut plus.w1, &mut minus.w1) } else { (&mut plus.w2, &mut minus.w2) };
            wp[[a, b]] += h;
            wm[[a, b]] -= h;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            if a == 0 {
                println!("{name}[{a},{b}]  analytic {g:+.8}  numeric {numeric:+.8}  rel {rel:.1e}");
            }
        }
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}

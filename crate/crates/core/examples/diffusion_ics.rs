//! Structure-level contradiction scores from the PPR diffusion of a small
//! two-community graph with one mislabeled node.
//!
//!     cargo run --example diffusion_ics

use icgnn::diffusion::ppr_diffusion;
use icgnn::graph::NormalizedAdjacency;
use icgnn::indicator::{class_index_sets, structure_ics};

fn main() -> icgnn::Result<()> {
    // two 5-cliques joined by the edge 4-5
    let mut edges = Vec::new();
    for block in [0, 5] {
        for i in block..block + 5 {
            for j in (i + 1)..block + 5 {
                edges.push((i, j));
            }
        }
    }
    edges.push((4, 5));
    let adj = NormalizedAdjacency::from_edges(10, &edges)?;
    let t = ppr_diffusion(&adj, 0.15)?;

    // node 2 sits in the first clique but carries the second clique's label
    let labeled = [0, 1, 2, 3, 6, 7, 8];
    let noisy = [0, 0, 1, 0, 1, 1, 1];
    let sets = class_index_sets(&noisy, 2)?;
    let scores = structure_ics(&t, &sets, &labeled)?;
    println!("node  label  score");
    for ((node, y), s) in labeled.iter().zip(noisy).zip(scores.values()) {
        println!("{node:>4}  {y:>5}  {s:.4}");
    }
    Ok(())
}

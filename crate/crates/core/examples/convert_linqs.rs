//! Convert a LINQS citation dataset (`<name>.content`, `<name>.cites`) into
//! the directory layout read by `load_dataset`.
//!
//!     cargo run --release --example convert_linqs -- cora/cora.content cora/cora.cites out/cora
//!
//! Documents are numbered in `.content` order and classes in order of first
//! appearance. Citations to unknown documents, self-citations and duplicate
//! (undirected) citations are dropped.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use icgnn::graph::Graph;
use icgnn::harness::{write_dataset, Dataset};
use icgnn::Error;
use ndarray::Array2;

fn read(path: &str) -> icgnn::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn main() -> icgnn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [content, cites, out] = args.as_slice() else {
        eprintln!("usage: convert_linqs <name.content> <name.cites> <out_dir>");
        std::process::exit(2);
    };

    let mut ids = HashMap::new();
    let mut classes: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in read(content)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::InvalidArgument(format!("{content}:{}: too few fields", line_no + 1)));
        }
        let class = fields[fields.len() - 1];
        let c = classes.iter().position(|k| k == class).unwrap_or_else(|| {
            classes.push(class.to_string());
            classes.len() - 1
        });
        let x = fields[1..fields.len() - 1]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("{content}:{}: {e}", line_no + 1)))?;
        ids.insert(fields[0].to_string(), rows.len());
        labels.push(c);
        rows.push(x);
    }

    let mut edges = BTreeSet::new();
    let mut dropped = 0usize;
    for line in read(cites)?.lines() {
        let mut it = line.split_whitespace();
        match (it.next().and_then(|a| ids.get(a)), it.next().and_then(|b| ids.get(b))) {
            (Some(&a), Some(&b)) if a != b => {
                edges.insert((a.min(b), a.max(b)));
            }
            _ => dropped += 1,
        }
    }

    let f = rows[0].len();
    let features = Array2::from_shape_vec((rows.len(), f), rows.concat())
        .map_err(|e| Error::InvalidArgument(format!("ragged feature rows: {e}")))?;
    let graph = Graph::new(rows.len(), edges.into_iter().collect(), features, classes.len())?;
    let name = Path::new(out).file_name().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
    let data = Dataset::new(name, graph, labels)?;
    write_dataset(Path::new(out), &data)?;
    println!(
        "{} nodes, {} edges, {} features, {} classes ({dropped} unknown or self citations dropped) -> {out}",
        data.graph.n_nodes(),
        data.graph.n_edges(),
        f,
        classes.len()
    );
    Ok(())
}

//! Plain-text dataset directories.
//!
//! ```text
//! edges.txt     one "i j" pair per line, 0-based, each undirected edge once
//! features.csv  N rows of F comma-separated reals, row order = node id
//! labels.txt    N lines, one clean class id per line
//! meta.txt      n_nodes=<N>, n_classes=<C>, n_features=<F>
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::graph::Graph;
use crate::{Error, Result};

/// A graph with its clean labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graph: Graph, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != graph.n_nodes() {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} nodes",
                labels.len(),
                graph.n_nodes()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= graph.n_classes()) {
            return Err(Error::InvalidGraph(format!(
                "label {y} outside [0, {})",
                graph.n_classes()
            )));
        }
        Ok(Self {
            name: name.into(),
            graph,
            labels,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

struct Meta {
    n_nodes: usize,
    n_classes: usize,
    n_features: usize,
}

fn parse_meta(path: &Path) -> Result<Meta> {
    let text = read(path)?;
    let (mut n, mut c, mut f) = (None, None, None);
    for (no, line) in lines(&text) {
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::data(path, Some(no), format!("expected key=value, got `{line}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::data(path, Some(no), format!("`{}` is not a count", value.trim())))?;
        match key.trim() {
            "n_nodes" => n = Some(value),
            "n_classes" => c = Some(value),
            "n_features" => f = Some(value),
            other => return Err(Error::data(path, Some(no), format!("unknown key `{other}`"))),
        }
    }
    let need = |v: Option<usize>, key: &str| v.ok_or_else(|| Error::data(path, None, format!("missing `{key}`")));
    Ok(Meta {
        n_nodes: need(n, "n_nodes")?,
        n_classes: need(c, "n_classes")?,
        n_features: need(f, "n_features")?,
    })
}

fn parse_index(path: &Path, no: usize, token: &str, bound: usize, what: &str) -> Result<usize> {
    let v: usize = token
        .parse()
        .map_err(|_| Error::data(path, Some(no), format!("`{token}` is not a valid {what}")))?;
    if v >= bound {
        return Err(Error::data(path, Some(no), format!("{what} {v} out of range [0, {bound})")));
    }
    Ok(v)
}

/// Reads and validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta = parse_meta(&dir.join("meta.txt"))?;
    if meta.n_nodes == 0 || meta.n_features == 0 || meta.n_classes < 2 {
        return Err(Error::data(dir.join("meta.txt"), None, "need N >= 1, F >= 1 and C >= 2"));
    }

    let path = dir.join("edges.txt");
    let text = read(&path)?;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (no, line) in lines(&text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::data(&path, Some(no), format!("expected `i j`, got `{line}`")));
        }
        let i = parse_index(&path, no, tokens[0], meta.n_nodes, "node id")?;
        let j = parse_index(&path, no, tokens[1], meta.n_nodes, "node id")?;
        if i == j {
            return Err(Error::data(&path, Some(no), format!("self-loop on node {i}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::data(&path, Some(no), format!("duplicate edge ({i}, {j})")));
        }
        edges.push((i, j));
    }

    let path = dir.join("features.csv");
    let text = read(&path)?;
    let mut values = Vec::with_capacity(meta.n_nodes * meta.n_features);
    let mut rows = 0;
    for (no, line) in lines(&text) {
        let before = values.len();
        for token in line.split(',') {
            let token = token.trim();
            let v: f64 = token
                .parse()
                .map_err(|_| Error::data(&path, Some(no), format!("non-numeric feature `{token}`")))?;
            if !v.is_finite() {
                return Err(Error::data(&path, Some(no), format!("non-finite feature `{token}`")));
            }
            values.push(v);
        }
        if values.len() - before != meta.n_features {
            return Err(Error::data(
                &path,
                Some(no),
                format!("expected {} features, got {}", meta.n_features, values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != meta.n_nodes {
        return Err(Error::data(&path, None, format!("expected {} rows, got {rows}", meta.n_nodes)));
    }
    let features = Array2::from_shape_vec((meta.n_nodes, meta.n_features), values)
        .map_err(|e| Error::data(&path, None, e.to_string()))?;

    let path = dir.join("labels.txt");
    let text = read(&path)?;
    let mut labels = Vec::with_capacity(meta.n_nodes);
    for (no, line) in lines(&text) {
        labels.push(parse_index(&path, no, line, meta.n_classes, "class id")?);
    }
    if labels.len() != meta.n_nodes {
        return Err(Error::data(&path, None, format!("expected {} labels, got {}", meta.n_nodes, labels.len())));
    }

    let graph = Graph::new(meta.n_nodes, edges, features, meta.n_classes)?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, graph, labels)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".tmp-{}", std::process::id()));
        path.with_file_name(name)
    };
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes a dataset directory, creating it if needed.
pub fn write_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    use std::fmt::Write as _;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = &data.graph;

    let mut edges = String::new();
    for &(i, j) in g.edges() {
        let _ = writeln!(edges, "{i} {j}");
    }
    let mut features = String::new();
    for row in g.features().rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(features, "{}", line.join(","));
    }
    let mut labels = String::new();
    for y in &data.labels {
        let _ = writeln!(labels, "{y}");
    }
    let meta = format!(
        "n_nodes={}\nn_classes={}\nn_features={}\n",
        g.n_nodes(),
        g.n_classes(),
        g.n_features()
    );
    write_atomic(&dir.join("edges.txt"), edges.as_bytes())?;
    write_atomic(&dir.join("features.csv"), features.as_bytes())?;
    write_atomic(&dir.join("labels.txt"), labels.as_bytes())?;
    write_atomic(&dir.join("meta.txt"), meta.as_bytes())
}

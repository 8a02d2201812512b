//! CSV/JSON dataset files.
//!
//! Layout of a dataset directory:
//!
//! * `schema.json` – node and edge type declarations
//! * `nodes_<type>.csv` – header `id,f0,f1,...`
//! * `edges_<edge type>.csv` – header `src,dst`
//! * `labels.csv` – header `id,label` over anchor nodes

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::graph::{HinGraph, TargetTask};
use super::schema::Schema;
use crate::error::{Error, Result};
use crate::sparse::Csr;

pub fn node_file(dir: &Path, node_type: &str) -> PathBuf {
    dir.join(format!("nodes_{node_type}.csv"))
}

pub fn edge_file(dir: &Path, edge_type: &str) -> PathBuf {
    dir.join(format!("edges_{edge_type}.csv"))
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))
}

fn stem_suffix<'a>(path: &'a Path, prefix: &str) -> Result<&'a str> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix(prefix))
        .ok_or_else(|| Error::parse(path, format!("file name must look like {prefix}<name>.csv")))
}

fn read_nodes(path: &Path, node_type: &str) -> Result<Array2<f64>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    if headers.get(0) != Some("id") {
        return Err(Error::parse(path, "first column must be `id`"));
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(Error::FeatureDimInconsistent {
            node_type: node_type.to_string(),
            expected: 1,
            got: 0,
        });
    }
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => Error::FeatureDimInconsistent {
                node_type: node_type.to_string(),
                expected: dim,
                got: (*len as usize).saturating_sub(1),
            },
            _ => Error::parse(path, e),
        })?;
        let id: usize = rec[0].trim().parse().map_err(|e| Error::parse(path, e))?;
        let feats = rec
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::parse(path, e)))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, feats));
    }
    let n = rows.len();
    let mut out = Array2::zeros((n, dim));
    let mut seen = vec![false; n];
    for (id, feats) in rows {
        if id >= n || seen[id] {
            return Err(Error::parse(
                path,
                format!("node ids must be a permutation of 0..{n}; offending id {id}"),
            ));
        }
        seen[id] = true;
        for (j, v) in feats.into_iter().enumerate() {
            out[[id, j]] = v;
        }
    }
    Ok(out)
}

fn read_edges(path: &Path, relation: &str, n_src: usize, n_dst: usize) -> Result<Csr> {
    let mut rdr = reader(path)?;
    let mut trip = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        if rec.len() < 2 {
            return Err(Error::parse(path, format!("row {} needs src,dst", row + 1)));
        }
        let src: usize = rec[0].trim().parse().map_err(|e| Error::parse(path, e))?;
        let dst: usize = rec[1].trim().parse().map_err(|e| Error::parse(path, e))?;
        if src >= n_src || dst >= n_dst {
            return Err(Error::DanglingEdge {
                relation: relation.to_string(),
                row: row + 1,
                src,
                dst,
            });
        }
        trip.push((src, dst, 1.0));
    }
    Ok(Csr::from_triplets(n_src, n_dst, &trip))
}

/// Loads a graph from explicit file lists. Node files are matched to types by
/// their `nodes_<type>.csv` name, edge files by `edges_<edge type>.csv`.
pub fn load_graph(node_files: &[PathBuf], edge_files: &[PathBuf], schema_file: &Path) -> Result<HinGraph> {
    let schema = read_schema(schema_file)?;
    let mut by_type: BTreeMap<usize, Array2<f64>> = BTreeMap::new();
    for path in node_files {
        let name = stem_suffix(path, "nodes_")?;
        let t = schema.type_index(name).map_err(|_| {
            Error::SchemaMismatch(format!("node file {} names undeclared type `{name}`", path.display()))
        })?;
        by_type.insert(t, read_nodes(path, name)?);
    }
    let mut features = Vec::with_capacity(schema.num_node_types());
    for (t, name) in schema.node_types().iter().enumerate() {
        match by_type.remove(&t) {
            Some(x) => features.push(x),
            None => {
                let expected = node_files
                    .first()
                    .and_then(|p| p.parent())
                    .map(|d| node_file(d, name))
                    .unwrap_or_else(|| PathBuf::from(format!("nodes_{name}.csv")));
                return Err(Error::MissingFile(expected));
            }
        }
    }
    let node_counts: Vec<usize> = features.iter().map(|x| x.nrows()).collect();

    let mut by_edge: BTreeMap<usize, Csr> = BTreeMap::new();
    for path in edge_files {
        let name = stem_suffix(path, "edges_")?;
        let e = schema.edge_index(name).ok_or_else(|| {
            Error::SchemaMismatch(format!("edge file {} names undeclared edge type `{name}`", path.display()))
        })?;
        let (s, d) = schema.endpoints(e);
        by_edge.insert(e, read_edges(path, name, node_counts[s], node_counts[d])?);
    }
    let mut adjacency = Vec::with_capacity(schema.edge_types().len());
    for (e, et) in schema.edge_types().iter().enumerate() {
        match by_edge.remove(&e) {
            Some(a) => adjacency.push(a),
            None => return Err(Error::MissingFile(PathBuf::from(format!("edges_{}.csv", et.name)))),
        }
    }
    HinGraph::new(schema, node_counts, adjacency, features)
}

/// Loads `schema.json` plus every node and edge file it implies from `dir`.
pub fn load_dir(dir: &Path) -> Result<HinGraph> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let schema_path = dir.join("schema.json");
    let schema = read_schema(&schema_path)?;
    let nodes: Vec<PathBuf> = schema.node_types().iter().map(|t| node_file(dir, t)).collect();
    let edges: Vec<PathBuf> = schema.edge_types().iter().map(|e| edge_file(dir, &e.name)).collect();
    load_graph(&nodes, &edges, &schema_path)
}

/// Reads `labels.csv`; the class count is one past the largest label.
pub fn load_labels(path: &Path, graph: &HinGraph, anchor_type: &str) -> Result<TargetTask> {
    let t = graph.schema().type_index(anchor_type)?;
    let n = graph.node_count(t);
    let mut rdr = reader(path)?;
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let id: usize = rec[0].trim().parse().map_err(|e| Error::parse(path, e))?;
        let label: usize = rec
            .get(1)
            .ok_or_else(|| Error::parse(path, "missing label column"))?
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, e))?;
        if id >= n {
            return Err(Error::parse(path, format!("label for unknown anchor id {id}")));
        }
        labels[id] = Some(label);
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::parse(path, format!("anchor {i} has no label"))))
        .collect::<Result<Vec<_>>>()?;
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    TargetTask::new(graph, anchor_type, labels, num_classes)
}

fn write_csv<F>(path: &Path, header: &[String], mut rows: F) -> Result<()>
where
    F: FnMut(&mut csv::Writer<fs::File>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    w.write_record(header).map_err(|e| Error::parse(path, e))?;
    rows(&mut w).map_err(|e| Error::parse(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the dataset directory layout. Floats use the shortest decimal form
/// that parses back to the same value, so a reload is exact.
pub fn write_dir(dir: &Path, graph: &HinGraph, task: Option<&TargetTask>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let schema_path = dir.join("schema.json");
    let json = serde_json::to_string_pretty(graph.schema()).expect("schema serializes");
    fs::write(&schema_path, json + "\n").map_err(|e| Error::io(&schema_path, e))?;
    for (t, name) in graph.schema().node_types().iter().enumerate() {
        let x = graph.features(t);
        let mut header = vec!["id".to_string()];
        header.extend((0..x.ncols()).map(|j| format!("f{j}")));
        write_csv(&node_file(dir, name), &header, |w| {
            for (i, row) in x.rows().into_iter().enumerate() {
                let mut rec = vec![i.to_string()];
                rec.extend(row.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            Ok(())
        })?;
    }
    for (e, et) in graph.schema().edge_types().iter().enumerate() {
        let header = vec!["src".to_string(), "dst".to_string()];
        write_csv(&edge_file(dir, &et.name), &header, |w| {
            for (r, c, _) in graph.adjacency(e).iter() {
                w.write_record([r.to_string(), c.to_string()])?;
            }
            Ok(())
        })?;
    }
    if let Some(task) = task {
        let header = vec!["id".to_string(), "label".to_string()];
        write_csv(&dir.join("labels.csv"), &header, |w| {
            for (i, l) in task.labels().iter().enumerate() {
                w.write_record([i.to_string(), l.to_string()])?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

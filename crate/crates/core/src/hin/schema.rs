use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub src: String,
    pub dst: String,
}

impl EdgeType {
    pub fn new(name: &str, src: &str, dst: &str) -> Self {
        EdgeType {
            name: name.to_string(),
            src: src.to_string(),
            dst: dst.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawSchema {
    node_types: Vec<String>,
    edge_types: Vec<EdgeType>,
}

/// Node and edge type declarations of a heterogeneous graph.
///
/// Edge types are directed; an undirected relation is declared as two edge
/// types (for example `AP` and `PA`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct Schema {
    node_types: Vec<String>,
    edge_types: Vec<EdgeType>,
    // (src, dst) type indices per edge type
    endpoints: Vec<(usize, usize)>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        Schema::new(raw.node_types, raw.edge_types)
    }
}

impl From<Schema> for RawSchema {
    fn from(s: Schema) -> Self {
        RawSchema {
            node_types: s.node_types,
            edge_types: s.edge_types,
        }
    }
}

impl Schema {
    pub fn new(node_types: Vec<String>, edge_types: Vec<EdgeType>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &node_types {
            if !seen.insert(t.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate node type `{t}`")));
            }
        }
        let mut seen_edges = HashSet::new();
        let mut endpoints = Vec::with_capacity(edge_types.len());
        for e in &edge_types {
            if !seen_edges.insert(e.name.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate edge type `{}`", e.name)));
            }
            let find = |name: &str| {
                node_types.iter().position(|t| t == name).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "edge type `{}` references undeclared node type `{name}`",
                        e.name
                    ))
                })
            };
            endpoints.push((find(&e.src)?, find(&e.dst)?));
        }
        Ok(Schema {
            node_types,
            edge_types,
            endpoints,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_parts(node_types: &[&str], edge_types: &[(&str, &str, &str)]) -> Result<Self> {
        Schema::new(
            node_types.iter().map(|s| s.to_string()).collect(),
            edge_types
                .iter()
                .map(|(n, s, d)| EdgeType::new(n, s, d))
                .collect(),
        )
    }

    /// Author/paper/conference schema with both directions of each relation.
    pub fn dblp() -> Self {
        Schema::from_parts(
            &["A", "P", "C"],
            &[
                ("AP", "A", "P"),
                ("PA", "P", "A"),
                ("CP", "C", "P"),
                ("PC", "P", "C"),
            ],
        )
        .expect("static schema is valid")
    }

    pub fn node_types(&self) -> &[String] {
        &self.node_types
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub fn num_node_types(&self) -> usize {
        self.node_types.len()
    }

    pub fn type_index(&self, name: &str) -> Result<usize> {
        self.node_types
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edge_types.iter().position(|e| e.name == name)
    }

    /// `(src, dst)` node type indices of edge type `e`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.endpoints[e]
    }

    pub fn is_heterogeneous(&self) -> bool {
        self.node_types.len() + self.edge_types.len() > 2
    }
}

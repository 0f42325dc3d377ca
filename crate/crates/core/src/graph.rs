//! Areal adjacency structure: ingestion, validation and serialization.
//!
//! The neighborhood of the map is the binary symmetric matrix W with null
//! diagonal, stored as sorted neighbor lists, together with the degree
//! D_ii = |neighbors(i)| of every area. Every spatial computation divides
//! by D_ii, so isolated areas are rejected at load time.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge row {row}: self-loop on area '{area}'")]
    SelfLoop { row: usize, area: String },
    #[error("edge row {row}: unknown area id '{area}'")]
    UnknownArea { row: usize, area: String },
    #[error("area '{area}' has no neighbors")]
    IsolatedArea { area: String },
    #[error("duplicate area id '{area}' in registry")]
    DuplicateArea { area: String },
    #[error("area registry is empty")]
    EmptyRegistry,
    #[error("edge file header must be 'area_a,area_b', got '{0}'")]
    BadHeader(String),
    #[error("edge row {row}: expected two fields")]
    BadRow { row: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

/// Undirected neighborhood structure of `n` areas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    area_ids: Vec<String>,
    index: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    /// Build and validate a graph from an area registry and undirected
    /// index pairs. Duplicate and reversed duplicate edges collapse to a
    /// single edge. Rows are 1-based positions used in error messages.
    pub fn from_edges(
        area_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self, GraphError> {
        if area_ids.is_empty() {
            return Err(GraphError::EmptyRegistry);
        }
        let mut index = HashMap::with_capacity(area_ids.len());
        for (i, id) in area_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateArea { area: id.clone() });
            }
        }
        let n = area_ids.len();
        let mut neighbors = vec![Vec::new(); n];
        for (a, b, row) in edges {
            if a == b {
                return Err(GraphError::SelfLoop {
                    row,
                    area: area_ids[a].clone(),
                });
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let g = AdjacencyGraph {
            area_ids,
            index,
            neighbors,
        };
        for i in 0..n {
            if g.neighbors[i].is_empty() {
                return Err(GraphError::IsolatedArea {
                    area: g.area_ids[i].clone(),
                });
            }
        }
        Ok(g)
    }

    /// Convenience constructor from named edge pairs.
    pub fn from_named_edges(
        area_ids: Vec<String>,
        edges: &[(String, String)],
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, id) in area_ids.iter().enumerate() {
            index.insert(id.clone(), i);
        }
        let resolved = edges
            .iter()
            .enumerate()
            .map(|(row, (a, b))| {
                let row = row + 1;
                let ia = *index.get(a).ok_or_else(|| GraphError::UnknownArea {
                    row,
                    area: a.clone(),
                })?;
                let ib = *index.get(b).ok_or_else(|| GraphError::UnknownArea {
                    row,
                    area: b.clone(),
                })?;
                Ok((ia, ib, row))
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::from_edges(area_ids, resolved)
    }

    pub fn n(&self) -> usize {
        self.area_ids.len()
    }

    pub fn area_ids(&self) -> &[String] {
        &self.area_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Sorted neighbor indices of area `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// D_ii, the neighbor count of area `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Unique undirected edges as (i, j) with i < j, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Partition of the areas into connected components (BFS, deterministic
    /// order). More than one component is legal for every downstream
    /// computation, but unusual for a map, so it is reported as a warning.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &j in &self.neighbors[i] {
                    if !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        if components.len() > 1 {
            log::warn!(
                "adjacency graph has {} connected components",
                components.len()
            );
        }
        components
    }

    /// Write the area registry (one id per line, index order).
    pub fn write_registry(&self, path: &Path) -> Result<(), GraphError> {
        let body = self.area_ids.join("\n") + "\n";
        std::fs::write(path, body).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Write the undirected edge list with the canonical header.
    pub fn write_edge_list(&self, path: &Path) -> Result<(), GraphError> {
        let mut buf = String::from("area_a,area_b\n");
        for (i, j) in self.edges() {
            buf.push_str(&self.area_ids[i]);
            buf.push(',');
            buf.push_str(&self.area_ids[j]);
            buf.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        f.write_all(buf.as_bytes()).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Read an area registry file: one id per line, order defines index 0..n−1.
pub fn read_registry(path: &Path) -> Result<Vec<String>, GraphError> {
    let body = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Load a graph from a registry file and a comma-separated edge-list file
/// with header `area_a,area_b`.
pub fn load_adjacency(registry: &Path, edge_list: &Path) -> Result<AdjacencyGraph, GraphError> {
    let area_ids = read_registry(registry)?;
    let edges = read_edge_list(edge_list)?;
    AdjacencyGraph::from_named_edges(area_ids, &edges)
}

/// Read the undirected edge pairs of an edge-list file.
pub fn read_edge_list(path: &Path) -> Result<Vec<(String, String)>, GraphError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| GraphError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    let headers = reader
        .headers()
        .map_err(|source| GraphError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .clone();
    if headers.len() != 2 || &headers[0] != "area_a" || &headers[1] != "area_b" {
        return Err(GraphError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut edges = Vec::new();
    for (pos, record) in reader.records().enumerate() {
        let row = pos + 1;
        let record = record.map_err(|source| GraphError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        if record.len() != 2 {
            return Err(GraphError::BadRow { row });
        }
        edges.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(edges)
}

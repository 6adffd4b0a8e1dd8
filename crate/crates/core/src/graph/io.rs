use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{GraphError, LinkGraph};

fn open(path: &Path) -> Result<File, GraphError> {
    File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(source: std::io::Error) -> GraphError {
    GraphError::Io {
        path: "<stream>".into(),
        source,
    }
}

fn parse_id(token: &str, line: usize) -> Result<u64, GraphError> {
    token.parse::<u64>().map_err(|_| GraphError::Parse {
        line,
        message: format!("expected a non-negative integer node id, found {token:?}"),
    })
}

/// Parses a whitespace-separated `src dst` edge list. Lines starting with
/// `#` and blank lines are skipped.
pub fn parse_edge_list<R: Read>(reader: R) -> Result<Vec<(u64, u64)>, GraphError> {
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
        if tokens.len() != 2 {
            return Err(GraphError::Parse {
                line: lineno + 1,
                message: format!("expected 2 tokens \"src dst\", found {}", tokens.len()),
            });
        }
        edges.push((
            parse_id(tokens[0], lineno + 1)?,
            parse_id(tokens[1], lineno + 1)?,
        ));
    }
    Ok(edges)
}

/// Parses a node manifest: one external id per line.
pub fn parse_node_manifest<R: Read>(reader: R) -> Result<Vec<u64>, GraphError> {
    let mut ids = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.split_ascii_whitespace().count() != 1 {
            return Err(GraphError::Parse {
                line: lineno + 1,
                message: "expected a single node id".into(),
            });
        }
        ids.push(parse_id(line, lineno + 1)?);
    }
    Ok(ids)
}

/// Loads an edge-list file into a snapshot.
pub fn load_graph(path: impl AsRef<Path>) -> Result<LinkGraph, GraphError> {
    load_graph_with_manifest(path, None::<&Path>)
}

/// Loads an edge-list file plus an optional node manifest declaring nodes
/// that have no links.
pub fn load_graph_with_manifest(
    edges: impl AsRef<Path>,
    manifest: Option<impl AsRef<Path>>,
) -> Result<LinkGraph, GraphError> {
    let edges_path = edges.as_ref();
    let edge_list = parse_edge_list(open(edges_path)?).map_err(|e| with_path(e, edges_path))?;
    let nodes = match manifest {
        Some(m) => {
            let m = m.as_ref();
            parse_node_manifest(open(m)?).map_err(|e| with_path(e, m))?
        }
        None => Vec::new(),
    };
    let g = LinkGraph::from_edges(nodes, edge_list);
    if g.is_empty() {
        return Err(GraphError::Empty);
    }
    Ok(g)
}

fn with_path(e: GraphError, path: &Path) -> GraphError {
    match e {
        GraphError::Io { source, .. } => GraphError::Io {
            path: path.display().to_string(),
            source,
        },
        GraphError::Parse { line, message } => GraphError::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Writes the edge set as `src dst` lines in sorted order.
pub fn write_edge_list<W: Write>(g: &LinkGraph, mut w: W) -> std::io::Result<()> {
    for (s, d) in g.external_edges() {
        writeln!(w, "{s} {d}")?;
    }
    Ok(())
}

/// Writes every node id, one per line. Together with [`write_edge_list`] this
/// preserves isolated nodes.
pub fn write_node_manifest<W: Write>(g: &LinkGraph, mut w: W) -> std::io::Result<()> {
    for id in g.external_ids() {
        writeln!(w, "{id}")?;
    }
    Ok(())
}

/// Writes the `external_id,internal_index` map.
pub fn write_id_map<W: Write>(g: &LinkGraph, w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["external_id", "internal_index"])?;
    for (i, id) in g.external_ids().iter().enumerate() {
        out.write_record([id.to_string(), i.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an `external_id,internal_index` map, returned sorted by internal index.
pub fn read_id_map<R: Read>(r: R) -> Result<Vec<(u64, usize)>, GraphError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<(u64, usize)>().enumerate() {
        let row = rec.map_err(|e| GraphError::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    rows.sort_by_key(|&(_, idx)| idx);
    Ok(rows)
}

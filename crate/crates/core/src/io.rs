//! Text formats: graphs (edge list, DIMACS), QUBO files, partitions and
//! embeddings.
//!
//! Edge list: header `n m`, then one `u v` line per edge, 0-based; `#` starts
//! a comment line. DIMACS: `p edge n m` (or `p col`), `e u v` lines, 1-based,
//! `c` comment lines.
//!
//! QUBO files use `c` comments, the header `p qubo 0 <maxNodes> <nNodes>
//! <nCouplers>`, `nNodes` lines `i i w`, then `nCouplers` lines `i j w` with
//! `i < j`. A comment `c offset <w>` carries the constant term.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::chimera::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::QuboModel;
use crate::partition::Partition;

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Reads a whole file; errors name the path.
pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

/// Writes a whole file; errors name the path.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| with_path(path, e))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GraphFormat {
    #[default]
    EdgeList,
    Dimacs,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgelist" | "edge-list" => Ok(Self::EdgeList),
            "dimacs" => Ok(Self::Dimacs),
            other => Err(Error::Config(format!("unknown graph format `{other}`"))),
        }
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn data_lines<'a>(
    text: &'a str,
    comment: &'a [&'a str],
) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !comment.iter().any(|c| l.starts_with(c)))
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

fn ensure_end<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        None => Ok(()),
        Some(t) => Err(Error::parse(line, format!("unexpected token `{t}`"))),
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = data_lines(text, &["#"]);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse(0, "missing `n m` header"))?;
    let mut t = header.split_whitespace();
    let n: usize = field(t.next(), hl, "vertex count")?;
    let m: usize = field(t.next(), hl, "edge count")?;
    ensure_end(t, hl)?;
    let mut edges = Vec::with_capacity(m);
    for (ln, line) in lines {
        let mut t = line.split_whitespace();
        let u: usize = field(t.next(), ln, "endpoint")?;
        let v: usize = field(t.next(), ln, "endpoint")?;
        ensure_end(t, ln)?;
        if u >= n || v >= n || u == v {
            return Err(Error::parse(
                ln,
                format!("invalid edge ({u}, {v}) for {n} vertices"),
            ));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::parse(
            0,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::from_edges(n, edges)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.num_vertices(), g.num_edges());
    for (u, v) in g.edges() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

/// DIMACS graph; repeated edges collapse.
pub fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut n = None;
    let mut edges = Vec::new();
    for (ln, line) in data_lines(text, &["c"]) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("p") => {
                if n.is_some() {
                    return Err(Error::parse(ln, "second problem line"));
                }
                match t.next() {
                    Some("edge" | "col") => {}
                    other => {
                        return Err(Error::parse(
                            ln,
                            format!("unsupported problem type {other:?}"),
                        ))
                    }
                }
                n = Some(field::<usize>(t.next(), ln, "vertex count")?);
                let _declared: usize = field(t.next(), ln, "edge count")?;
            }
            Some("e") => {
                let n = n.ok_or_else(|| Error::parse(ln, "edge before problem line"))?;
                let u: usize = field(t.next(), ln, "endpoint")?;
                let v: usize = field(t.next(), ln, "endpoint")?;
                if u == 0 || v == 0 || u > n || v > n || u == v {
                    return Err(Error::parse(
                        ln,
                        format!("invalid edge ({u}, {v}) for {n} vertices"),
                    ));
                }
                edges.push((u - 1, v - 1));
            }
            other => return Err(Error::parse(ln, format!("unknown line type {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::parse(0, "missing problem line"))?;
    Graph::from_edges(n, edges)
}

pub fn format_dimacs(g: &Graph) -> String {
    let mut s = format!("p edge {} {}\n", g.num_vertices(), g.num_edges());
    for (u, v) in g.edges() {
        s.push_str(&format!("e {} {}\n", u + 1, v + 1));
    }
    s
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<Graph> {
    let text = read_text(path)?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::Dimacs => parse_dimacs(&text),
    }
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>, format: GraphFormat) -> Result<()> {
    let text = match format {
        GraphFormat::EdgeList => format_edge_list(g),
        GraphFormat::Dimacs => format_dimacs(g),
    };
    write_text(path, &text)
}

pub fn parse_qubo(text: &str) -> Result<QuboModel> {
    let mut offset = 0.0;
    let mut header: Option<(usize, usize, usize)> = None;
    let mut q = QuboModel::new(0);
    let (mut nodes, mut couplers) = (0, 0);
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        match t.next() {
            Some("c") => {
                if t.next() == Some("offset") {
                    offset += field::<f64>(t.next(), ln, "offset")?;
                    ensure_end(t, ln)?;
                }
            }
            Some("p") => {
                if header.is_some() {
                    return Err(Error::parse(ln, "second `p` line"));
                }
                if t.next() != Some("qubo") {
                    return Err(Error::parse(
                        ln,
                        "expected `p qubo <topology> <maxNodes> <nNodes> <nCouplers>`",
                    ));
                }
                let _topology: String = field(t.next(), ln, "topology")?;
                let max_nodes: usize = field(t.next(), ln, "maxNodes")?;
                let n_nodes: usize = field(t.next(), ln, "nNodes")?;
                let n_couplers: usize = field(t.next(), ln, "nCouplers")?;
                ensure_end(t, ln)?;
                header = Some((max_nodes, n_nodes, n_couplers));
                q = QuboModel::new(max_nodes);
            }
            Some(first) => {
                let (max_nodes, n_nodes, n_couplers) =
                    header.ok_or_else(|| Error::parse(ln, "data before the `p qubo` header"))?;
                let a: usize = field(Some(first), ln, "index")?;
                let b: usize = field(t.next(), ln, "index")?;
                let w: f64 = field(t.next(), ln, "weight")?;
                ensure_end(t, ln)?;
                if a >= max_nodes || b >= max_nodes {
                    return Err(Error::parse(
                        ln,
                        format!("index exceeds maxNodes {max_nodes}"),
                    ));
                }
                if nodes < n_nodes {
                    if a != b {
                        return Err(Error::parse(
                            ln,
                            format!("expected a linear term `i i w`, found `{a} {b}`"),
                        ));
                    }
                    q.add_linear(a, w);
                    nodes += 1;
                } else if couplers < n_couplers {
                    if b <= a {
                        return Err(Error::parse(
                            ln,
                            format!("coupler `{a} {b}` violates i < j"),
                        ));
                    }
                    q.add_quadratic(a, b, w);
                    couplers += 1;
                } else {
                    return Err(Error::parse(ln, "more entries than the header declares"));
                }
            }
            None => {}
        }
    }
    let (_, n_nodes, n_couplers) =
        header.ok_or_else(|| Error::parse(0, "missing `p qubo` header"))?;
    if nodes != n_nodes || couplers != n_couplers {
        return Err(Error::parse(
            0,
            format!("header declares {n_nodes} nodes and {n_couplers} couplers, found {nodes} and {couplers}"),
        ));
    }
    q.add_offset(offset);
    Ok(q)
}

/// Writes every linear term (zeros included) and every stored coupler.
pub fn format_qubo(q: &QuboModel) -> String {
    let n = q.num_vars();
    let mut s = format!("p qubo 0 {n} {n} {}\n", q.quadratic().len());
    for (i, w) in q.linear().iter().enumerate() {
        s.push_str(&format!("{i} {i} {w}\n"));
    }
    for (&(i, j), w) in q.quadratic() {
        s.push_str(&format!("{i} {j} {w}\n"));
    }
    if q.offset() != 0.0 {
        s.push_str(&format!("c offset {}\n", q.offset()));
    }
    s
}

pub fn load_qubo_file(path: impl AsRef<Path>) -> Result<QuboModel> {
    parse_qubo(&read_text(path)?)
}

pub fn write_qubo_file(q: &QuboModel, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &format_qubo(q))
}

/// One `v part` line per vertex, in vertex order.
pub fn format_partition(p: &Partition) -> String {
    p.parts()
        .iter()
        .enumerate()
        .map(|(v, k)| format!("{v} {k}\n"))
        .collect()
}

/// Parses `v part` lines covering `0..n` exactly once. The part count is `k`
/// when given, otherwise one more than the largest part label.
pub fn parse_partition(text: &str, k: Option<usize>) -> Result<Partition> {
    let mut entries = Vec::new();
    for (ln, line) in data_lines(text, &["#"]) {
        let mut t = line.split_whitespace();
        let v: usize = field(t.next(), ln, "vertex")?;
        let p: usize = field(t.next(), ln, "part")?;
        ensure_end(t, ln)?;
        entries.push((ln, v, p));
    }
    let n = entries.len();
    let mut parts = vec![usize::MAX; n];
    for &(ln, v, p) in &entries {
        if v >= n || parts[v] != usize::MAX {
            return Err(Error::parse(
                ln,
                format!("vertex {v} out of range or repeated"),
            ));
        }
        parts[v] = p;
    }
    let k = k.unwrap_or_else(|| parts.iter().max().map_or(1, |m| m + 1));
    Partition::new(parts, k)
}

pub fn load_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    read_text(path)?.parse()
}

pub fn save_embedding(e: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_mis_qubo;
    use crate::graph::random_graph;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn qubo_examples() {
        let q = build_mis_qubo(&Graph::complete(3), -1.0, 2.0).unwrap();
        assert_eq!(parse_qubo(&format_qubo(&q)).unwrap(), q);
        assert_eq!(format_qubo(&QuboModel::new(0)), "p qubo 0 0 0 0\n");
        let bad = "p qubo 0 3 1 1\n0 0 1.0\n2 1 4.0\n";
        assert!(matches!(parse_qubo(bad), Err(Error::Parse { line: 3, .. })));
        let far = "p qubo 0 3 1 0\n5 5 1.0\n";
        assert!(matches!(parse_qubo(far), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(
            parse_qubo("c hi\np qubo 0 x 0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_qubo("0 0 1\n").is_err());
    }

    #[test]
    fn qbsolv_style_file_with_comments() {
        let text = "c a comment\np qubo 0 4 2 1\nc mid\n0 0 -1\n3 3 2.5\n0 3 -0.5\n";
        let q = parse_qubo(text).unwrap();
        assert_eq!(q.num_vars(), 4);
        assert_eq!(q.linear(), &[-1.0, 0.0, 0.0, 2.5]);
        assert_eq!(q.coupler(0, 3), -0.5);
    }

    #[test]
    fn graph_formats() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (3, 0)]).unwrap();
        assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
        assert_eq!(parse_dimacs(&format_dimacs(&g)).unwrap(), g);
        let dup = "c x\np edge 3 3\ne 1 2\ne 2 1\ne 2 3\n";
        assert_eq!(parse_dimacs(dup).unwrap().num_edges(), 2);
        assert!(matches!(
            parse_dimacs("p edge 2 1\ne 1 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("2 1\n0 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn partition_round_trip() {
        let p = Partition::new(vec![1, 0, 2, 1], 3).unwrap();
        assert_eq!(parse_partition(&format_partition(&p), Some(3)).unwrap(), p);
        assert_eq!(
            parse_partition("1 0\n0 1\n", None).unwrap().parts(),
            &[1, 0]
        );
        assert!(parse_partition("0 0\n0 1\n", None).is_err());
    }

    #[test]
    fn files() {
        let dir = tempfile::tempdir().unwrap();
        let q = build_mis_qubo(&Graph::cycle(5), -1.0, 2.0).unwrap();
        let path = dir.path().join("m.qubo");
        write_qubo_file(&q, &path).unwrap();
        assert_eq!(load_qubo_file(&path).unwrap(), q);
        assert!(matches!(
            load_qubo_file(dir.path().join("nope")),
            Err(Error::Io(_))
        ));
        let e = Embedding::new(vec![vec![0, 1], vec![2]]);
        save_embedding(&e, dir.path().join("e.txt")).unwrap();
        assert_eq!(load_embedding(dir.path().join("e.txt")).unwrap(), e);
        let g = Graph::cycle(6);
        save_graph(&g, dir.path().join("g.col"), GraphFormat::Dimacs).unwrap();
        assert_eq!(
            load_graph(dir.path().join("g.col"), GraphFormat::Dimacs).unwrap(),
            g
        );
    }

    proptest! {
        #[test]
        fn qubo_round_trip_is_lossless(n in 0usize..10, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let mut q = QuboModel::new(n);
            for i in 0..n {
                q.add_linear(i, rng.gen_range(-1e3..1e3));
                for j in i + 1..n {
                    if rng.gen_bool(0.5) {
                        q.add_quadratic(i, j, rng.gen::<f64>() * 1e-7 - 3.3);
                    }
                }
            }
            q.add_offset(rng.gen_range(-5.0..5.0));
            prop_assert_eq!(parse_qubo(&format_qubo(&q)).unwrap(), q);
        }

        #[test]
        fn graph_round_trip(n in 0usize..20, p in 0.0f64..1.0, seed in any::<u64>()) {
            let g = random_graph(n, p, seed).unwrap();
            prop_assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g.clone());
            prop_assert_eq!(parse_dimacs(&format_dimacs(&g)).unwrap(), g);
        }
    }
}

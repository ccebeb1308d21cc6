//! Graph map text format.
//!
//! ```text
//! graph
//! vertex v
//! edge e v v
//! action
//! path e +e +e
//! node 0 0
//! node 1 2
//! ```
//!
//! `edge <id> <from> <to>` puts chart parameter 0 at `from` and 1 at `to`.
//! Each `path` names the signed edge word traversed by the image of the edge;
//! the `node <t> <s>` lines that follow give a continuous piecewise-affine
//! chart from `[0, 1]` onto the path parameter `[0, k]` for a word of length
//! `k`. `path <id> @<vertex>` sends the whole edge to a vertex. Blank lines and
//! lines starting with `#` are ignored.

use super::{Edge, EdgeAction, GraphMapSpec, GraphSpec, Step};
use crate::error::{Error, Result};
use crate::pwmap::PwaMap;
use crate::rational::{format_rational, int, parse_rational, Rational};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

enum Section {
    None,
    Graph,
    Action,
}

struct PendingPath {
    line: usize,
    edge: String,
    word: Option<Vec<(String, bool)>>,
    target: Option<String>,
    nodes: Vec<(Rational, Rational)>,
}

pub fn parse_graph_map(text: &str) -> Result<GraphMapSpec> {
    let mut section = Section::None;
    let mut vertices: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String, String)> = Vec::new();
    let mut paths: Vec<PendingPath> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match (f[0], &section) {
            ("graph", _) if f.len() == 1 => section = Section::Graph,
            ("action", _) if f.len() == 1 => section = Section::Action,
            ("vertex", Section::Graph) => {
                if f.len() != 2 {
                    return Err(perr(ln, "expected 'vertex <id>'"));
                }
                vertices.push(f[1].to_string());
            }
            ("edge", Section::Graph) => {
                if f.len() != 4 {
                    return Err(perr(ln, "expected 'edge <id> <from> <to>'"));
                }
                edges.push((f[1].to_string(), f[2].to_string(), f[3].to_string()));
            }
            ("path", Section::Action) => {
                if f.len() < 3 {
                    return Err(perr(ln, "expected 'path <id> <word>'"));
                }
                let mut p = PendingPath {
                    line: ln,
                    edge: f[1].to_string(),
                    word: None,
                    target: None,
                    nodes: Vec::new(),
                };
                if let Some(v) = f[2].strip_prefix('@') {
                    if f.len() != 3 || v.is_empty() {
                        return Err(perr(ln, "expected 'path <id> @<vertex>'"));
                    }
                    p.target = Some(v.to_string());
                } else {
                    let word = f[2..]
                        .iter()
                        .map(|tok| match tok.as_bytes()[0] {
                            b'+' => (tok[1..].to_string(), true),
                            b'-' => (tok[1..].to_string(), false),
                            _ => (tok.to_string(), true),
                        })
                        .collect::<Vec<_>>();
                    if word.iter().any(|(e, _)| e.is_empty()) {
                        return Err(perr(ln, "empty edge name in word"));
                    }
                    p.word = Some(word);
                }
                paths.push(p);
            }
            ("node", Section::Action) => {
                if f.len() != 3 {
                    return Err(perr(ln, "expected 'node <t> <s>'"));
                }
                let num = |tok: &str| {
                    parse_rational(tok).ok_or_else(|| perr(ln, format!("bad number '{tok}'")))
                };
                let p = paths
                    .last_mut()
                    .ok_or_else(|| perr(ln, "chart node before any path"))?;
                if p.target.is_some() {
                    return Err(perr(ln, "a collapsed edge takes no chart nodes"));
                }
                p.nodes.push((num(f[1])?, num(f[2])?));
            }
            _ => return Err(perr(ln, format!("unexpected '{line}'"))),
        }
    }

    let graph = GraphSpec::new(
        vertices,
        edges
            .into_iter()
            .map(|(id, from, to)| Edge { id, from, to })
            .collect(),
    )?;

    let mut action: Vec<Option<EdgeAction>> = vec![None; graph.edges.len()];
    for p in paths {
        let idx = graph
            .edge_index(&p.edge)
            .ok_or_else(|| perr(p.line, format!("unknown edge '{}'", p.edge)))?;
        if action[idx].is_some() {
            return Err(perr(p.line, format!("edge '{}' has two paths", p.edge)));
        }
        action[idx] = Some(if let Some(v) = p.target {
            EdgeAction::Collapse(v)
        } else {
            let word = p
                .word
                .expect("path without target has a word")
                .into_iter()
                .map(|(e, forward)| {
                    graph
                        .edge_index(&e)
                        .map(|edge| Step { edge, forward })
                        .ok_or_else(|| perr(p.line, format!("unknown edge '{e}' in word")))
                })
                .collect::<Result<Vec<_>>>()?;
            if p.nodes.len() < 2 {
                return Err(perr(p.line, "a path needs at least 2 chart nodes"));
            }
            let k = int(word.len() as i64);
            let nodes = p.nodes.into_iter().map(|(t, s)| (t, s / &k)).collect();
            let chart = PwaMap::continuous(nodes).map_err(|e| perr(p.line, e.to_string()))?;
            EdgeAction::Path { word, chart }
        });
    }
    let action = action
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Graph(format!("edge '{}' has no path", graph.edges[i].id))))
        .collect::<Result<Vec<_>>>()?;
    GraphMapSpec::new(graph, action)
}

pub fn serialize_graph_map(gm: &GraphMapSpec) -> String {
    let mut out = String::from("graph\n");
    for v in &gm.graph.vertices {
        out.push_str(&format!("vertex {v}\n"));
    }
    for e in &gm.graph.edges {
        out.push_str(&format!("edge {} {} {}\n", e.id, e.from, e.to));
    }
    out.push_str("action\n");
    for (e, a) in gm.graph.edges.iter().zip(&gm.action) {
        match a {
            EdgeAction::Collapse(v) => out.push_str(&format!("path {} @{v}\n", e.id)),
            EdgeAction::Path { word, chart } => {
                let w: Vec<String> = word
                    .iter()
                    .map(|s| {
                        let sign = if s.forward { '+' } else { '-' };
                        format!("{sign}{}", gm.graph.edges[s.edge].id)
                    })
                    .collect();
                out.push_str(&format!("path {} {}\n", e.id, w.join(" ")));
                for n in chart.nodes() {
                    let s = n.y_right.as_ref().or(n.y_left.as_ref()).expect("chart value");
                    let s = s * int(word.len() as i64);
                    out.push_str(&format!("node {} {}\n", format_rational(&n.x), format_rational(&s)));
                }
            }
        }
    }
    out
}

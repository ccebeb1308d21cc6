//! Piecewise monotone graph maps, their flattening to interval maps, and the
//! lift of a constant-slope normal form back to a quotient graph.
//!
//! Edges are cut at every vertex and laid side by side in listed order, each
//! taking a subinterval of length `1/m` of `[0, 1]` with its own orientation.

mod format;
mod lift;

pub use format::{parse_graph_map, serialize_graph_map};
pub use lift::{normalize_graph, GraphNormalForm, GraphPoint, QuotientEdge, QuotientGraph, VertexCheck};

use crate::error::{Error, Result};
use crate::pwmap::{Node, PwaMap, Side};
use crate::rational::{format_rational, int, one, zero, Rational};
use num::{One, Zero};
use petgraph::unionfind::UnionFind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    /// Vertex at chart parameter 0.
    pub from: String,
    /// Vertex at chart parameter 1.
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl GraphSpec {
    /// Checks names are unique, edges reference known vertices, and the graph
    /// is connected.
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let g = GraphSpec { vertices, edges };
        if g.edges.is_empty() {
            return Err(Error::Graph("no edges".into()));
        }
        for (i, v) in g.vertices.iter().enumerate() {
            if g.vertices[..i].contains(v) {
                return Err(Error::Graph(format!("duplicate vertex '{v}'")));
            }
        }
        for (i, e) in g.edges.iter().enumerate() {
            if g.edges[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::Graph(format!("duplicate edge '{}'", e.id)));
            }
            for v in [&e.from, &e.to] {
                if g.vertex_index(v).is_none() {
                    return Err(Error::Graph(format!("edge '{}' uses unknown vertex '{v}'", e.id)));
                }
            }
        }
        let mut uf = UnionFind::new(g.vertices.len());
        for e in &g.edges {
            uf.union(g.vertex_index(&e.from).unwrap(), g.vertex_index(&e.to).unwrap());
        }
        if (1..g.vertices.len()).any(|i| !uf.equiv(0, i)) {
            return Err(Error::Graph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn vertex_index(&self, v: &str) -> Option<usize> {
        self.vertices.iter().position(|w| w == v)
    }

    pub fn edge_index(&self, e: &str) -> Option<usize> {
        self.edges.iter().position(|f| f.id == e)
    }
}

/// One letter of an edge-path word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeAction {
    /// The edge runs along `word`; `chart` maps `[0, 1]` continuously to the
    /// fraction of the path covered, with `0 ↦ 0` and `1 ↦ 1`. Path parameter
    /// `s` in `[j, j+1]` lies on the `j`-th letter of the word.
    Path { word: Vec<Step>, chart: PwaMap },
    /// The whole edge goes to one vertex.
    Collapse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMapSpec {
    pub graph: GraphSpec,
    pub action: Vec<EdgeAction>,
}

impl GraphMapSpec {
    /// Validates charts and words and checks that every vertex has a single
    /// image, which makes the map continuous on the graph.
    pub fn new(graph: GraphSpec, action: Vec<EdgeAction>) -> Result<Self> {
        if action.len() != graph.edges.len() {
            return Err(Error::Graph("one action per edge required".into()));
        }
        let gm = GraphMapSpec { graph, action };
        let mut image: Vec<Option<String>> = vec![None; gm.graph.vertices.len()];
        for (i, e) in gm.graph.edges.iter().enumerate() {
            let (start, end) = match &gm.action[i] {
                EdgeAction::Collapse(v) => {
                    if gm.graph.vertex_index(v).is_none() {
                        return Err(Error::Graph(format!("edge '{}' collapses to unknown vertex '{v}'", e.id)));
                    }
                    (v.clone(), v.clone())
                }
                EdgeAction::Path { word, chart } => {
                    gm.check_path(&e.id, word, chart)?;
                    let first = word[0];
                    let last = word[word.len() - 1];
                    (gm.step_start(first).to_string(), gm.step_end(last).to_string())
                }
            };
            for (v, img) in [(&e.from, start), (&e.to, end)] {
                let slot = &mut image[gm.graph.vertex_index(v).unwrap()];
                match slot {
                    Some(prev) if *prev != img => {
                        return Err(Error::Graph(format!(
                            "vertex '{v}' sent to both '{prev}' and '{img}'"
                        )))
                    }
                    _ => *slot = Some(img),
                }
            }
        }
        Ok(gm)
    }

    fn check_path(&self, id: &str, word: &[Step], chart: &PwaMap) -> Result<()> {
        if word.is_empty() {
            return Err(Error::Graph(format!("edge '{id}' has an empty word")));
        }
        for w in word.windows(2) {
            if self.step_end(w[0]) != self.step_start(w[1]) {
                return Err(Error::Graph(format!("word of edge '{id}' is not a path")));
            }
        }
        let nodes = chart.nodes();
        if !chart.lo().is_zero() || !chart.hi().is_one() {
            return Err(Error::Graph(format!("chart of edge '{id}' must run over [0, 1]")));
        }
        let first = nodes[0].y_right.as_ref().expect("first node value");
        let last = nodes[nodes.len() - 1].y_left.as_ref().expect("last node value");
        if !first.is_zero() || !last.is_one() {
            return Err(Error::Graph(format!(
                "chart of edge '{id}' must start at 0 and end at {}",
                word.len()
            )));
        }
        if !chart.is_continuous() {
            return Err(Error::Graph(format!("chart of edge '{id}' has a jump")));
        }
        Ok(())
    }

    fn step_start(&self, s: Step) -> &str {
        let e = &self.graph.edges[s.edge];
        if s.forward {
            &e.from
        } else {
            &e.to
        }
    }

    fn step_end(&self, s: Step) -> &str {
        let e = &self.graph.edges[s.edge];
        if s.forward {
            &e.to
        } else {
            &e.from
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartEntry {
    pub edge: String,
    /// Always true for charts built by [`flatten`]; kept so a chart can
    /// describe reversed edges.
    pub forward: bool,
    pub lo: Rational,
    pub hi: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatteningChart {
    pub ordering: Vec<ChartEntry>,
    pub cut_points: Vec<Rational>,
}

impl FlatteningChart {
    fn uniform(graph: &GraphSpec) -> Self {
        let m = int(graph.edges.len() as i64);
        let ordering: Vec<ChartEntry> = graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| ChartEntry {
                edge: e.id.clone(),
                forward: true,
                lo: int(i as i64) / &m,
                hi: int(i as i64 + 1) / &m,
            })
            .collect();
        let cut_points = ordering[1..].iter().map(|c| c.lo.clone()).collect();
        FlatteningChart { ordering, cut_points }
    }

    fn position(&self, entry: usize, t: &Rational) -> Rational {
        let c = &self.ordering[entry];
        let u = if c.forward { t.clone() } else { one() - t };
        &c.lo + u * (&c.hi - &c.lo)
    }

    /// Flat coordinate of the point at parameter `t` on `edge`.
    pub fn from_graph(&self, edge: &str, t: &Rational) -> Option<Rational> {
        let i = self.ordering.iter().position(|c| c.edge == edge)?;
        Some(self.position(i, t))
    }

    /// Edge and parameter of a flat coordinate. At a cut point `side` picks
    /// the edge ending there (`Left`) or starting there (`Right`).
    pub fn to_graph(&self, x: &Rational, side: Side) -> Option<(String, Rational)> {
        let i = match side {
            Side::Left => self.ordering.iter().position(|c| &c.lo < x && x <= &c.hi),
            Side::Right => self.ordering.iter().position(|c| &c.lo <= x && x < &c.hi),
        }
        .or_else(|| self.ordering.iter().position(|c| &c.lo <= x && x <= &c.hi))?;
        let c = &self.ordering[i];
        let u = (x - &c.lo) / (&c.hi - &c.lo);
        Some((c.edge.clone(), if c.forward { u } else { one() - u }))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("edge\tlo\thi\n");
        for c in &self.ordering {
            out.push_str(&format!("{}\t{}\t{}\n", c.edge, format_rational(&c.lo), format_rational(&c.hi)));
        }
        out
    }
}

/// Affine piece of the flattened map.
struct Piece {
    x0: Rational,
    x1: Rational,
    y0: Rational,
    y1: Rational,
}

/// The interval map obtained by cutting at every vertex.
pub fn flatten(gm: &GraphMapSpec) -> Result<(PwaMap, FlatteningChart)> {
    let chart = FlatteningChart::uniform(&gm.graph);
    let mut pieces: Vec<Piece> = Vec::new();
    for (i, action) in gm.action.iter().enumerate() {
        let entry = &chart.ordering[i];
        let x_of = |t: &Rational| &entry.lo + t * (&entry.hi - &entry.lo);
        match action {
            EdgeAction::Collapse(v) => {
                let y = vertex_position(gm, &chart, v);
                pieces.push(Piece {
                    x0: entry.lo.clone(),
                    x1: entry.hi.clone(),
                    y0: y.clone(),
                    y1: y,
                });
            }
            EdgeAction::Path { word, chart: h } => {
                let k = word.len() as i64;
                // position on the path parameter s, inside unit j
                let flat = |s: &Rational, j: i64| {
                    let step = word[j as usize];
                    let u = s - int(j);
                    let t = if step.forward { u } else { one() - u };
                    chart.position(step.edge, &t)
                };
                let kq = int(k);
                for seg in h.segments() {
                    let (s0, s1) = (seg.y0 * &kq, seg.y1 * &kq);
                    if s0 == s1 {
                        let j = s0.floor().to_integer().try_into().unwrap_or(k - 1).min(k - 1);
                        let y = flat(&s0, j);
                        pieces.push(Piece {
                            x0: x_of(seg.x0),
                            x1: x_of(seg.x1),
                            y0: y.clone(),
                            y1: y,
                        });
                        continue;
                    }
                    let mut ts = vec![seg.x0.clone()];
                    let (lo, hi) = if s0 < s1 { (&s0, &s1) } else { (&s1, &s0) };
                    let mut cross: Vec<Rational> = Vec::new();
                    let mut c = lo.floor() + one();
                    while &c < hi {
                        cross.push(seg.preimage(&(&c / &kq)));
                        c += one();
                    }
                    if s0 > s1 {
                        cross.reverse();
                    }
                    ts.extend(cross);
                    ts.push(seg.x1.clone());
                    for w in ts.windows(2) {
                        let (sa, sb) = (seg.at(&w[0]) * &kq, seg.at(&w[1]) * &kq);
                        let mid = (&sa + &sb) / int(2);
                        let j: i64 = mid.floor().to_integer().try_into().expect("small path index");
                        pieces.push(Piece {
                            x0: x_of(&w[0]),
                            x1: x_of(&w[1]),
                            y0: flat(&sa, j),
                            y1: flat(&sb, j),
                        });
                    }
                }
            }
        }
    }

    let mut nodes = Vec::with_capacity(pieces.len() + 1);
    nodes.push(Node::new(pieces[0].x0.clone(), None, Some(pieces[0].y0.clone())));
    for w in pieces.windows(2) {
        nodes.push(Node::new(w[1].x0.clone(), Some(w[0].y1.clone()), Some(w[1].y0.clone())));
    }
    let last = pieces.last().expect("at least one piece");
    nodes.push(Node::new(last.x1.clone(), Some(last.y1.clone()), None));
    Ok((PwaMap::new(nodes)?.simplify(), chart))
}

/// Flat position used for a vertex that is the image of a collapsed edge: its
/// first occurrence as an edge endpoint in listed order.
fn vertex_position(gm: &GraphMapSpec, chart: &FlatteningChart, v: &str) -> Rational {
    for (i, e) in gm.graph.edges.iter().enumerate() {
        if e.from == v {
            return chart.position(i, &zero());
        }
        if e.to == v {
            return chart.position(i, &one());
        }
    }
    unreachable!("connected graph: every vertex has an edge")
}

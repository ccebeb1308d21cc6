//! Lifting the interval normal form of a flattened graph map back to a graph.

use super::{flatten, FlatteningChart, GraphMapSpec};
use crate::approximation::{normalize, NormalizeConfig, PipelineTrace};
use crate::error::Result;
use crate::pwmap::{PwaMap, Side};
use crate::rational::{from_f64, to_f64};
use crate::semiconjugacy::COLLAPSE_EPS;
use petgraph::unionfind::UnionFind;

/// Tolerance for matching a lifted value with a vertex of the quotient graph.
const POINT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientEdge {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Flat interval `[psi(lo), psi(hi)]` of the original edge.
    pub lo: f64,
    pub hi: f64,
}

/// The graph left after `psi` contracts every edge it maps to a point.
/// Vertices merged by a contraction are named by joining their names with `=`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<QuotientEdge>,
}

impl QuotientGraph {
    /// The quotient in graph text format (no action section).
    pub fn to_text(&self) -> String {
        let mut out = String::from("graph\n");
        for v in &self.vertices {
            out.push_str(&format!("vertex {v}\n"));
        }
        for e in &self.edges {
            out.push_str(&format!("edge {} {} {}\n", e.id, e.from, e.to));
        }
        out
    }

    /// Graph point of a flat coordinate reached from `side`.
    pub fn locate(&self, y: f64, side: Side) -> Option<GraphPoint> {
        let near = |a: f64, b: f64| (a - b).abs() < POINT_TOL;
        let ending = self.edges.iter().find(|e| near(e.hi, y));
        let starting = self.edges.iter().find(|e| near(e.lo, y));
        let at_vertex = match side {
            Side::Left => ending.map(|e| &e.to).or(starting.map(|e| &e.from)),
            Side::Right => starting.map(|e| &e.from).or(ending.map(|e| &e.to)),
        };
        if let Some(v) = at_vertex {
            return Some(GraphPoint::Vertex(v.clone()));
        }
        self.edges
            .iter()
            .find(|e| e.lo < y && y < e.hi)
            .map(|e| GraphPoint::Edge {
                edge: e.id.clone(),
                t: (y - e.lo) / (e.hi - e.lo),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphPoint {
    Vertex(String),
    Edge { edge: String, t: f64 },
}

impl GraphPoint {
    fn same(&self, other: &GraphPoint) -> bool {
        match (self, other) {
            (GraphPoint::Vertex(a), GraphPoint::Vertex(b)) => a == b,
            (GraphPoint::Edge { edge: a, t: s }, GraphPoint::Edge { edge: b, t }) => {
                a == b && (s - t).abs() < POINT_TOL
            }
            _ => false,
        }
    }
}

impl std::fmt::Display for GraphPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphPoint::Vertex(v) => write!(f, "{v}"),
            GraphPoint::Edge { edge, t } => write!(f, "{edge}@{t}"),
        }
    }
}

/// Images of all edge ends meeting at one quotient vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCheck {
    pub vertex: String,
    pub images: Vec<Option<GraphPoint>>,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct GraphNormalForm {
    pub flat: PwaMap,
    pub chart: FlatteningChart,
    pub trace: PipelineTrace,
    pub quotient: QuotientGraph,
    pub collapsed_edges: Vec<String>,
    pub checks: Vec<VertexCheck>,
    pub continuity_ok: bool,
}

impl GraphNormalForm {
    pub fn g(&self) -> &PwaMap {
        &self.trace.g.map
    }

    pub fn slope(&self) -> f64 {
        self.trace.g.slope
    }
}

/// Flattens `gm`, normalizes the interval map and lifts `psi` and `g` back.
pub fn normalize_graph(gm: &GraphMapSpec, cfg: &NormalizeConfig) -> Result<GraphNormalForm> {
    let (flat, chart) = flatten(gm)?;
    let trace = normalize(&flat, cfg)?;

    let nv = gm.graph.vertices.len();
    let mut uf = UnionFind::new(nv);
    let vidx = |v: &str| gm.graph.vertex_index(v).expect("validated vertex");
    let mut kept = Vec::new();
    let mut collapsed_edges = Vec::new();
    for (e, c) in gm.graph.edges.iter().zip(&chart.ordering) {
        let lo = trace.psi.eval_exact(&c.lo);
        let hi = trace.psi.eval_exact(&c.hi);
        if hi - lo <= COLLAPSE_EPS {
            uf.union(vidx(&e.from), vidx(&e.to));
            collapsed_edges.push(e.id.clone());
        } else {
            kept.push((e, lo, hi));
        }
    }

    let labels = uf.into_labeling();
    let class_name = |v: &str| {
        let root = labels[vidx(v)];
        gm.graph
            .vertices
            .iter()
            .enumerate()
            .filter(|(i, _)| labels[*i] == root)
            .map(|(_, w)| w.as_str())
            .collect::<Vec<_>>()
            .join("=")
    };
    let mut vertices: Vec<String> = Vec::new();
    for v in &gm.graph.vertices {
        let name = class_name(v);
        if !vertices.contains(&name) {
            vertices.push(name);
        }
    }
    let quotient = QuotientGraph {
        vertices,
        edges: kept
            .iter()
            .map(|(e, lo, hi)| QuotientEdge {
                id: e.id.clone(),
                from: class_name(&e.from),
                to: class_name(&e.to),
                lo: *lo,
                hi: *hi,
            })
            .collect(),
    };

    let g = &trace.g.map;
    let image = |y: f64, side: Side| -> Option<GraphPoint> {
        let x = from_f64(y.clamp(to_f64(g.lo()), to_f64(g.hi())));
        let side = g.clamp_side(&x, side);
        let seg = g.locate(&x, side).ok()?;
        let value = g.eval_f64(y, side);
        let carried = g.segment(seg).direction().carry(side).unwrap_or(Side::Right);
        quotient.locate(value, carried)
    };
    let mut checks = Vec::new();
    for v in &quotient.vertices {
        let mut images = Vec::new();
        for e in &quotient.edges {
            if &e.from == v {
                images.push(image(e.lo, Side::Right));
            }
            if &e.to == v {
                images.push(image(e.hi, Side::Left));
            }
        }
        let ok = images.iter().all(|p| p.is_some())
            && images
                .windows(2)
                .all(|w| w[0].as_ref().unwrap().same(w[1].as_ref().unwrap()));
        checks.push(VertexCheck {
            vertex: v.clone(),
            images,
            ok,
        });
    }
    let continuity_ok = checks.iter().all(|c| c.ok);
    Ok(GraphNormalForm {
        flat,
        chart,
        trace,
        quotient,
        collapsed_edges,
        checks,
        continuity_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::operator::{phi, PhiConfig};

    #[test]
    fn doubling_circle_lifts_to_itself() {
        let r = normalize_graph(&fixtures::circle_doubling(), &NormalizeConfig::default()).unwrap();
        assert!(r.trace.exact);
        assert!((r.slope() - 2.0).abs() < 1e-12);
        assert_eq!(r.g(), &fixtures::doubling());
        assert!(r.collapsed_edges.is_empty());
        assert_eq!(r.quotient.edges.len(), 1);
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.checks[0].images.len(), 2);
        assert!(r.continuity_ok);
    }

    #[test]
    fn interval_skew_tent_matches_phi() {
        let r = normalize_graph(&fixtures::interval_skew_tent(), &NormalizeConfig::default()).unwrap();
        let direct = phi(&fixtures::skew_tent(), &PhiConfig::default()).unwrap();
        assert!(r.g().sup_dist(&direct.g.map).map(|d| d == crate::rational::zero()).unwrap());
        assert!(r.collapsed_edges.is_empty());
        assert!(r.continuity_ok);
    }

    #[test]
    fn collapsed_edge_leaves_one_loop() {
        let r = normalize_graph(&fixtures::circle_collapse(), &NormalizeConfig::default()).unwrap();
        assert_eq!(r.collapsed_edges, vec!["b".to_string()]);
        assert_eq!(r.quotient.vertices, vec!["u=w".to_string()]);
        assert_eq!(r.quotient.edges.len(), 1);
        assert!((r.slope() - 2.0).abs() < 1e-9);
        assert!(r.continuity_ok, "{:?}", r.checks);
    }

    #[test]
    fn two_edge_circle_is_continuous_on_the_graph() {
        let r = normalize_graph(&fixtures::circle_two_edges(), &NormalizeConfig::default()).unwrap();
        assert!(r.collapsed_edges.is_empty());
        assert_eq!(r.quotient.edges.len(), 2);
        assert!(r.continuity_ok, "{:?}", r.checks);
    }
}

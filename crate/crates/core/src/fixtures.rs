//! Bundled example maps, parsed from the files under `fixtures/`.

use crate::graphmap::{parse_graph_map, GraphMapSpec};
use crate::pwmap::{parse_pwa, PwaMap};

macro_rules! fixture {
    ($name:ident, $file:literal) => {
        pub fn $name() -> PwaMap {
            parse_pwa(include_str!(concat!("../fixtures/", $file))).expect("bundled fixture parses")
        }
    };
}

fixture!(tent, "tent.pwa");
fixture!(doubling, "doubling.pwa");
fixture!(golden, "golden.pwa");
fixture!(skew_tent, "skewtent.pwa");
fixture!(tent_three_halves, "tent32.pwa");
fixture!(trapezoid, "trapezoid.pwa");
fixture!(identity, "identity.pwa");
fixture!(constant_half, "constant.pwa");
fixture!(flat_top_tent, "flattop.pwa");
fixture!(n_map, "nmap3.pwa");
fixture!(unimodal_three_halves, "unimodal32.pwa");
fixture!(bimodal, "bimodal.pwa");
fixture!(cubic, "cubic.pwa");

macro_rules! graph_fixture {
    ($name:ident, $file:literal) => {
        pub fn $name() -> GraphMapSpec {
            parse_graph_map(include_str!(concat!("../fixtures/", $file)))
                .expect("bundled fixture parses")
        }
    };
}

graph_fixture!(circle_doubling, "circle_doubling.txt");
graph_fixture!(interval_tent, "interval_tent.txt");
graph_fixture!(interval_skew_tent, "interval_skewtent.txt");
graph_fixture!(circle_two_edges, "circle_two_edges.txt");
graph_fixture!(circle_collapse, "circle_collapse.txt");

/// Raw text of a bundled fixture by file name.
pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "tent.pwa" => include_str!("../fixtures/tent.pwa"),
        "doubling.pwa" => include_str!("../fixtures/doubling.pwa"),
        "golden.pwa" => include_str!("../fixtures/golden.pwa"),
        "skewtent.pwa" => include_str!("../fixtures/skewtent.pwa"),
        "tent32.pwa" => include_str!("../fixtures/tent32.pwa"),
        "trapezoid.pwa" => include_str!("../fixtures/trapezoid.pwa"),
        "identity.pwa" => include_str!("../fixtures/identity.pwa"),
        "constant.pwa" => include_str!("../fixtures/constant.pwa"),
        "flattop.pwa" => include_str!("../fixtures/flattop.pwa"),
        "nmap3.pwa" => include_str!("../fixtures/nmap3.pwa"),
        "unimodal32.pwa" => include_str!("../fixtures/unimodal32.pwa"),
        "bimodal.pwa" => include_str!("../fixtures/bimodal.pwa"),
        "cubic.pwa" => include_str!("../fixtures/cubic.pwa"),
        "circle_doubling.txt" => include_str!("../fixtures/circle_doubling.txt"),
        "interval_tent.txt" => include_str!("../fixtures/interval_tent.txt"),
        "interval_skewtent.txt" => include_str!("../fixtures/interval_skewtent.txt"),
        "circle_two_edges.txt" => include_str!("../fixtures/circle_two_edges.txt"),
        "circle_collapse.txt" => include_str!("../fixtures/circle_collapse.txt"),
        _ => return None,
    })
}

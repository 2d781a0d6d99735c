#![allow(dead_code)]

use std::path::PathBuf;

use cellplan::formats::{export_graph, load_map, load_weights, read_file, GraphExport};
use cellplan_core::gnn::score_portals;
use cellplan_core::pipeline::build_graph;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Golden comparison for one dimension tag (`2d` or `3d`).
pub struct Golden {
    /// Largest difference between rebuilt and stored graph features.
    pub feature_diff: f64,
    /// Largest difference between computed and reference scores.
    pub score_diff: f64,
    pub portals: usize,
}

pub fn golden(tag: &str) -> Golden {
    let doc = load_map(&fixture(&format!("golden_map_{tag}.json"))).unwrap();
    let (qs, qg) = doc.query.expect("fixture map has a query");
    let g = build_graph(&doc.workspace, qs, qg).unwrap();
    let stored: GraphExport =
        serde_json::from_str(&read_file(&fixture(&format!("golden_graph_{tag}.json"))).unwrap()).unwrap();
    let rebuilt = export_graph(&g);
    assert_eq!(rebuilt.edge_index, stored.edge_index);
    assert_eq!(rebuilt.portals.len(), stored.portals.len());
    let flat = |v: &[Vec<f64>]| v.iter().flatten().copied().collect::<Vec<f64>>();
    let max_diff = |a: &[f64], b: &[f64]| {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let feature_diff = max_diff(&flat(&rebuilt.x), &flat(&stored.x))
        .max(max_diff(&flat(&rebuilt.edge_attr), &flat(&stored.edge_attr)));

    let w = load_weights(&fixture(&format!("golden_weights_{tag}.json")), g.feature_version()).unwrap();
    let got = score_portals(&g, &w).unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&read_file(&fixture(&format!("golden_expected_{tag}.json"))).unwrap()).unwrap();
    let expected: Vec<f64> = expected["scores"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    Golden { feature_diff, score_diff: max_diff(&got, &expected), portals: got.len() }
}

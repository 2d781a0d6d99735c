//! Inference-only portal scoring network.
//!
//! encoder -> 3 message-passing layers (GCN in 2D, GATv2 in 3D) with
//! two-layer-skip residuals -> edge MLP with a sigmoid output. Batch norms
//! are stored as running statistics and applied as fixed affine maps.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cellgraph::{
    CellGraph, EDGE_DIM_2D, EDGE_DIM_3D, FEATURE_VERSION_2D, FEATURE_VERSION_3D, NODE_DIM_2D,
    NODE_DIM_3D,
};
use crate::error::{GnnError, WeightsError};
use crate::math;

pub const FORMAT_NAME: &str = "cellplan-gnn";
pub const SCHEMA_VERSION: u32 = 1;
/// Layer `l` adds the post-activation output of layer `l - 2`.
pub const RESIDUAL_SKIP2: &str = "skip2-post-activation";
pub const LAYERS: usize = 3;
pub const MLP_MID: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Gcn2d,
    Gatv2_3d,
}

impl Arch {
    pub fn as_str(self) -> &'static str {
        match self {
            Arch::Gcn2d => "gcn2d",
            Arch::Gatv2_3d => "gatv2_3d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gcn2d" => Some(Arch::Gcn2d),
            "gatv2_3d" => Some(Arch::Gatv2_3d),
            _ => None,
        }
    }

    pub fn feature_version(self) -> &'static str {
        match self {
            Arch::Gcn2d => FEATURE_VERSION_2D,
            Arch::Gatv2_3d => FEATURE_VERSION_3D,
        }
    }

    pub fn dims(self) -> (usize, usize) {
        match self {
            Arch::Gcn2d => (NODE_DIM_2D, EDGE_DIM_2D),
            Arch::Gatv2_3d => (NODE_DIM_3D, EDGE_DIM_3D),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub format: String,
    pub schema_version: u32,
    pub arch: Arch,
    pub d_n: usize,
    pub d_e: usize,
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub feature_version: String,
    pub leaky_relu_slope: f64,
    pub residual: String,
    pub norm_eps: f64,
}

impl Header {
    /// Header with the standard settings for `arch` at width `hidden`.
    pub fn standard(arch: Arch, hidden: usize) -> Self {
        let (d_n, d_e) = arch.dims();
        Self {
            format: FORMAT_NAME.to_string(),
            schema_version: SCHEMA_VERSION,
            arch,
            d_n,
            d_e,
            hidden,
            heads: if arch == Arch::Gatv2_3d { 4 } else { 1 },
            layers: LAYERS,
            feature_version: arch.feature_version().to_string(),
            leaky_relu_slope: 0.2,
            residual: RESIDUAL_SKIP2.to_string(),
            norm_eps: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { shape, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnWeights {
    pub header: Header,
    pub tensors: BTreeMap<String, Tensor>,
}

/// Every tensor name and shape implied by a header, in a stable order.
pub fn expected_tensors(h: &Header) -> Vec<(String, Vec<usize>)> {
    let hid = h.hidden;
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    let norm = |out: &mut Vec<(String, Vec<usize>)>, prefix: &str, n: usize| {
        for part in ["weight", "bias", "running_mean", "running_var"] {
            out.push((format!("{prefix}.{part}"), vec![n]));
        }
    };
    out.push(("encoder.weight".into(), vec![hid, h.d_n]));
    out.push(("encoder.bias".into(), vec![hid]));
    norm(&mut out, "encoder.norm", hid);
    for l in 0..h.layers {
        match h.arch {
            Arch::Gcn2d => {
                out.push((format!("layers.{l}.weight"), vec![hid, hid]));
                out.push((format!("layers.{l}.bias"), vec![hid]));
            }
            Arch::Gatv2_3d => {
                let (c, width) = gat_dims(h, l);
                for side in ["lin_l", "lin_r"] {
                    out.push((format!("layers.{l}.{side}.weight"), vec![h.heads * c, hid]));
                    out.push((format!("layers.{l}.{side}.bias"), vec![h.heads * c]));
                }
                out.push((format!("layers.{l}.att"), vec![h.heads, c]));
                out.push((format!("layers.{l}.bias"), vec![width]));
            }
        }
        norm(&mut out, &format!("layers.{l}.norm"), hid);
    }
    norm(&mut out, "edge_norm", h.d_e);
    out.push(("edge_mlp.0.weight".into(), vec![hid, 2 * hid + h.d_e]));
    out.push(("edge_mlp.0.bias".into(), vec![hid]));
    out.push(("edge_mlp.1.weight".into(), vec![MLP_MID, hid]));
    out.push(("edge_mlp.1.bias".into(), vec![MLP_MID]));
    out.push(("edge_mlp.2.weight".into(), vec![1, MLP_MID]));
    out.push(("edge_mlp.2.bias".into(), vec![1]));
    out
}

/// Per-head channels and output width of GATv2 layer `l`.
fn gat_dims(h: &Header, l: usize) -> (usize, usize) {
    if l + 1 < h.layers {
        (h.hidden / h.heads, h.hidden)
    } else {
        (h.hidden, h.hidden)
    }
}

impl GnnWeights {
    /// Validates header and tensor shapes.
    pub fn new(header: Header, tensors: BTreeMap<String, Tensor>) -> Result<Self, WeightsError> {
        let schema = |m: &str| WeightsError::SchemaMismatch(m.to_string());
        if header.format != FORMAT_NAME {
            return Err(schema("unknown format name"));
        }
        if header.schema_version != SCHEMA_VERSION {
            return Err(schema("unsupported schema version"));
        }
        if header.layers != LAYERS {
            return Err(schema("exactly three message-passing layers are supported"));
        }
        if header.residual != RESIDUAL_SKIP2 {
            return Err(schema("unsupported residual wiring"));
        }
        if header.hidden == 0 || header.heads == 0 || header.hidden % header.heads != 0 {
            return Err(schema("hidden width must be a positive multiple of heads"));
        }
        if header.arch == Arch::Gcn2d && header.heads != 1 {
            return Err(schema("GCN weights use a single head"));
        }
        if !(header.norm_eps > 0.0) || !header.leaky_relu_slope.is_finite() {
            return Err(schema("invalid numeric header field"));
        }
        if header.feature_version != header.arch.feature_version() {
            return Err(WeightsError::FeatureVersionMismatch {
                expected: header.arch.feature_version().to_string(),
                found: header.feature_version.clone(),
            });
        }
        let (d_n, d_e) = header.arch.dims();
        if header.d_n != d_n || header.d_e != d_e {
            return Err(schema("feature widths do not match the architecture"));
        }
        let expected = expected_tensors(&header);
        if tensors.len() != expected.len() {
            return Err(schema("unexpected tensor set"));
        }
        for (name, shape) in expected {
            let t = tensors
                .get(&name)
                .ok_or_else(|| WeightsError::SchemaMismatch(format!("missing tensor `{name}`")))?;
            let count: usize = t.shape.iter().product();
            if t.shape != shape || t.data.len() != count {
                return Err(WeightsError::ShapeMismatch {
                    name,
                    expected: shape,
                    found: t.shape.clone(),
                });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(WeightsError::SchemaMismatch(format!("non-finite value in `{name}`")));
            }
            if name.ends_with("running_var") && t.data.iter().any(|&v| v < 0.0) {
                return Err(WeightsError::SchemaMismatch(format!("negative variance in `{name}`")));
            }
        }
        Ok(Self { header, tensors })
    }

    /// Checks that these weights were trained for the given feature packing.
    pub fn check_features(&self, version: &str) -> Result<(), WeightsError> {
        if self.header.feature_version != version {
            return Err(WeightsError::FeatureVersionMismatch {
                expected: version.to_string(),
                found: self.header.feature_version.clone(),
            });
        }
        Ok(())
    }

    /// Deterministic random weights, Glorot-uniform style.
    pub fn random(header: Header, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in expected_tensors(&header) {
            let n: usize = shape.iter().product();
            let data: Vec<f64> = if name.ends_with("running_var") {
                (0..n).map(|_| rng.random_range(0.5..1.5)).collect()
            } else if name.ends_with("norm.weight") {
                (0..n).map(|_| rng.random_range(0.8..1.2)).collect()
            } else {
                let fan = if shape.len() == 2 { shape[0] + shape[1] } else { 2 * shape[0] };
                let lim = math::sqrt(6.0 / fan as f64);
                (0..n).map(|_| rng.random_range(-lim..lim)).collect()
            };
            tensors.insert(name, Tensor::new(shape, data));
        }
        Self { header, tensors }
    }

    fn t(&self, name: &str) -> &[f64] {
        &self.tensors[name].data
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors
            .iter()
            .filter(|(k, _)| !k.ends_with("running_mean") && !k.ends_with("running_var"))
            .map(|(_, t)| t.data.len())
            .sum()
    }
}

/// `y = x W^T + b` for `n` rows.
fn linear(x: &[f64], n: usize, w: &[f64], b: Option<&[f64]>, din: usize, dout: usize) -> Vec<f64> {
    let mut y = vec![0.0; n * dout];
    for r in 0..n {
        let xr = &x[r * din..(r + 1) * din];
        for o in 0..dout {
            let wr = &w[o * din..(o + 1) * din];
            let mut s = b.map_or(0.0, |b| b[o]);
            for k in 0..din {
                s += xr[k] * wr[k];
            }
            y[r * dout + o] = s;
        }
    }
    y
}

fn norm_inplace(w: &GnnWeights, prefix: &str, x: &mut [f64], dim: usize) {
    let g = w.t(&format!("{prefix}.weight"));
    let b = w.t(&format!("{prefix}.bias"));
    let m = w.t(&format!("{prefix}.running_mean"));
    let v = w.t(&format!("{prefix}.running_var"));
    let eps = w.header.norm_eps;
    for row in x.chunks_mut(dim) {
        for k in 0..dim {
            row[k] = (row[k] - m[k]) / math::sqrt(v[k] + eps) * g[k] + b[k];
        }
    }
}

fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Logistic function kept strictly inside (0, 1) where f64 would round to
/// an endpoint.
fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn check(x: &[f64], stage: &'static str) -> Result<(), GnnError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GnnError::NonFiniteActivation(stage))
    }
}

fn gcn(w: &GnnWeights, g: &CellGraph, h: &[f64], l: usize) -> Vec<f64> {
    let hid = w.header.hidden;
    let n = g.len();
    let xw = linear(h, n, w.t(&format!("layers.{l}.weight")), None, hid, hid);
    let deg: Vec<f64> = (0..n).map(|i| (g.adjacency[i].len() + 1) as f64).collect();
    let bias = w.t(&format!("layers.{l}.bias"));
    let mut out = vec![0.0; n * hid];
    for i in 0..n {
        let row = &mut out[i * hid..(i + 1) * hid];
        let self_w = 1.0 / deg[i];
        for k in 0..hid {
            row[k] = self_w * xw[i * hid + k];
        }
        for &(j, _) in &g.adjacency[i] {
            let c = 1.0 / math::sqrt(deg[i] * deg[j]);
            for k in 0..hid {
                row[k] += c * xw[j * hid + k];
            }
        }
        for k in 0..hid {
            row[k] += bias[k];
        }
    }
    out
}

fn gatv2(w: &GnnWeights, g: &CellGraph, h: &[f64], l: usize) -> Vec<f64> {
    let hd = &w.header;
    let (hid, heads, slope) = (hd.hidden, hd.heads, hd.leaky_relu_slope);
    let (c, width) = gat_dims(hd, l);
    let concat = l + 1 < hd.layers;
    let n = g.len();
    let p = |s: &str| format!("layers.{l}.{s}");
    let xl = linear(h, n, w.t(&p("lin_l.weight")), Some(w.t(&p("lin_l.bias"))), hid, heads * c);
    let xr = linear(h, n, w.t(&p("lin_r.weight")), Some(w.t(&p("lin_r.bias"))), hid, heads * c);
    let att = w.t(&p("att"));
    let bias = w.t(&p("bias"));
    let mut out = vec![0.0; n * width];
    let mut src: Vec<usize> = Vec::new();
    let mut logits: Vec<f64> = Vec::new();
    for i in 0..n {
        src.clear();
        src.extend(g.adjacency[i].iter().map(|&(j, _)| j));
        src.push(i);
        for k in 0..heads {
            let a = &att[k * c..(k + 1) * c];
            logits.clear();
            for &j in &src {
                let mut e = 0.0;
                for t in 0..c {
                    let s = xl[j * heads * c + k * c + t] + xr[i * heads * c + k * c + t];
                    let s = if s >= 0.0 { s } else { slope * s };
                    e += a[t] * s;
                }
                logits.push(e);
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for e in logits.iter_mut() {
                *e = math::exp(*e - m);
                z += *e;
            }
            for (idx, &j) in src.iter().enumerate() {
                let alpha = logits[idx] / z;
                for t in 0..c {
                    let v = alpha * xl[j * heads * c + k * c + t];
                    if concat {
                        out[i * width + k * c + t] += v;
                    } else {
                        out[i * width + t] += v / heads as f64;
                    }
                }
            }
        }
        for t in 0..width {
            out[i * width + t] += bias[t];
        }
    }
    out
}

/// Node embeddings after the final message-passing layer.
pub fn embed(g: &CellGraph, w: &GnnWeights) -> Result<Vec<f64>, GnnError> {
    let hd = &w.header;
    if g.node_dim != hd.d_n || g.edge_dim != hd.d_e {
        return Err(GnnError::FeatureShape("feature widths"));
    }
    if g.feature_version() != hd.feature_version {
        return Err(GnnError::FeatureShape("feature packing version"));
    }
    let n = g.len();
    let hid = hd.hidden;
    let mut h0 = linear(&g.node_features, n, w.t("encoder.weight"), Some(w.t("encoder.bias")), hd.d_n, hid);
    norm_inplace(w, "encoder.norm", &mut h0, hid);
    relu_inplace(&mut h0);
    check(&h0, "encoder")?;

    let mut hist: Vec<Vec<f64>> = vec![h0];
    for l in 0..hd.layers {
        let prev = hist.last().expect("nonempty");
        let mut z = match hd.arch {
            Arch::Gcn2d => gcn(w, g, prev, l),
            Arch::Gatv2_3d => gatv2(w, g, prev, l),
        };
        norm_inplace(w, &format!("layers.{l}.norm"), &mut z, hid);
        relu_inplace(&mut z);
        if l >= 1 {
            let skip = &hist[l - 1];
            for (a, b) in z.iter_mut().zip(skip) {
                *a += *b;
            }
        }
        check(&z, "message passing")?;
        hist.push(z);
    }
    Ok(hist.pop().expect("nonempty"))
}

/// Directed edge index used to score each portal: the endpoint with the
/// lexicographically smaller centroid is the source.
pub fn canonical_edge(g: &CellGraph, p: usize) -> usize {
    let (a, b) = g.portals[p].cells;
    let (ca, cb) = (g.cells[a].centroid.to_array(), g.cells[b].centroid.to_array());
    let order = ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(core::cmp::Ordering::Less);
    if order.is_le() {
        2 * p
    } else {
        2 * p + 1
    }
}

/// One score in (0, 1) per portal.
pub fn score_portals(g: &CellGraph, w: &GnnWeights) -> Result<Vec<f64>, GnnError> {
    let hd = &w.header;
    let h = embed(g, w)?;
    let hid = hd.hidden;
    let d_e = hd.d_e;
    let mut ef = g.edge_features.clone();
    norm_inplace(w, "edge_norm", &mut ef, d_e);
    let din = 2 * hid + d_e;
    let mut input = vec![0.0; g.portals.len() * din];
    for p in 0..g.portals.len() {
        let e = canonical_edge(g, p);
        let (s, t) = g.edges[e];
        let row = &mut input[p * din..(p + 1) * din];
        row[..hid].copy_from_slice(&h[s * hid..(s + 1) * hid]);
        row[hid..2 * hid].copy_from_slice(&h[t * hid..(t + 1) * hid]);
        row[2 * hid..].copy_from_slice(&ef[e * d_e..(e + 1) * d_e]);
    }
    let m = g.portals.len();
    let mut z = linear(&input, m, w.t("edge_mlp.0.weight"), Some(w.t("edge_mlp.0.bias")), din, hid);
    relu_inplace(&mut z);
    let mut z = linear(&z, m, w.t("edge_mlp.1.weight"), Some(w.t("edge_mlp.1.bias")), hid, MLP_MID);
    relu_inplace(&mut z);
    let z = linear(&z, m, w.t("edge_mlp.2.weight"), Some(w.t("edge_mlp.2.bias")), MLP_MID, 1);
    check(&z, "edge head")?;
    Ok(z.into_iter().map(sigmoid).collect())
}

/// Scores, or all zeros when inference fails numerically.
pub fn score_or_zero(g: &CellGraph, w: &GnnWeights) -> (Vec<f64>, Option<GnnError>) {
    match score_portals(g, w) {
        Ok(s) => (s, None),
        Err(e) => (vec![0.0; g.portals.len()], Some(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgraph::{build_planar, build_spatial};
    use crate::decomp2d::{triangulate, PlanarMap};
    use crate::decomp3d::{slab_decompose, BoxMap};
    use crate::geom::{Aabb3, Point2, Point3, Rect, SimplePolygon};

    fn planar_graph() -> CellGraph {
        let map = PlanarMap::new(
            Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
            vec![SimplePolygon::rectangle(Point2::new(0.3, 0.3), Point2::new(0.6, 0.5))],
        );
        let t = triangulate(&map).unwrap();
        build_planar(&t, &map, Point2::new(0.05, 0.05), Point2::new(0.95, 0.9)).unwrap()
    }

    fn spatial_graph() -> CellGraph {
        let b = Aabb3::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        let o = Aabb3::new(Point3::new(0.3, 0.4, 0.2), Point3::new(0.6, 0.7, 0.9));
        let d = slab_decompose(&BoxMap::new(b, vec![o])).unwrap();
        build_spatial(&d, Point3::new(0.05, 0.05, 0.05), Point3::new(0.95, 0.95, 0.95)).unwrap()
    }

    #[test]
    fn random_weights_validate() {
        for arch in [Arch::Gcn2d, Arch::Gatv2_3d] {
            let w = GnnWeights::random(Header::standard(arch, 16), 1);
            GnnWeights::new(w.header.clone(), w.tensors.clone()).unwrap();
        }
    }

    #[test]
    fn parameter_count_matches_layout() {
        let w = GnnWeights::random(Header::standard(Arch::Gcn2d, 128), 0);
        let enc = 128 * 11 + 128 + 2 * 128;
        let layers = 3 * (128 * 128 + 128 + 2 * 128);
        let head = 2 * 9 + (128 * 265 + 128) + (32 * 128 + 32) + 33;
        assert_eq!(w.parameter_count(), enc + layers + head);
    }

    #[test]
    fn shape_and_version_errors() {
        let w = GnnWeights::random(Header::standard(Arch::Gcn2d, 8), 1);
        let mut t = w.tensors.clone();
        t.get_mut("encoder.bias").unwrap().shape = vec![9];
        assert!(matches!(GnnWeights::new(w.header.clone(), t), Err(WeightsError::ShapeMismatch { .. })));
        let mut t = w.tensors.clone();
        t.remove("edge_mlp.2.bias");
        assert!(matches!(GnnWeights::new(w.header.clone(), t), Err(WeightsError::SchemaMismatch(_))));
        assert!(matches!(
            w.check_features(FEATURE_VERSION_3D),
            Err(WeightsError::FeatureVersionMismatch { .. })
        ));
    }

    #[test]
    fn scores_are_probabilities_and_deterministic() {
        for (g, arch) in [(planar_graph(), Arch::Gcn2d), (spatial_graph(), Arch::Gatv2_3d)] {
            let w = GnnWeights::random(Header::standard(arch, 16), 7);
            let a = score_portals(&g, &w).unwrap();
            let b = score_portals(&g, &w).unwrap();
            assert_eq!(a.len(), g.portals.len());
            assert!(a.iter().all(|&s| s > 0.0 && s < 1.0));
            assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_weights_give_zero_encoding() {
        let mut w = GnnWeights::random(Header::standard(Arch::Gcn2d, 4), 3);
        for (name, t) in w.tensors.iter_mut() {
            let fill = if name.ends_with("running_var") || name.ends_with("norm.weight") { 1.0 } else { 0.0 };
            t.data.iter_mut().for_each(|v| *v = fill);
        }
        let map = PlanarMap::new(Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)), vec![]);
        let t = triangulate(&map).unwrap();
        let mut g = build_planar(&t, &map, Point2::new(0.1, 0.1), Point2::new(0.2, 0.1)).unwrap();
        // Keep one cell and no portals.
        g.cells.truncate(1);
        g.portals.clear();
        g.adjacency = vec![Vec::new()];
        g.edges.clear();
        g.node_features.truncate(NODE_DIM_2D);
        g.edge_features.clear();
        assert!(embed(&g, &w).unwrap().iter().all(|&v| v == 0.0));
        assert!(score_portals(&g, &w).unwrap().is_empty());
    }

    #[test]
    fn non_finite_falls_back_to_zero() {
        let g = planar_graph();
        let mut w = GnnWeights::random(Header::standard(Arch::Gcn2d, 8), 3);
        w.tensors.get_mut("encoder.bias").unwrap().data[0] = f64::NAN;
        let (s, err) = score_or_zero(&g, &w);
        assert!(err.is_some());
        assert!(s.iter().all(|&v| v == 0.0));
    }
}

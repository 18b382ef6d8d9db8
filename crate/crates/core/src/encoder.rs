//! Forward pass of the tree isomorphism encoder and its loss heads.
//!
//! A text vector is broadcast to one row per label, pushed up a layer-aligned
//! coding tree one level at a time (sum of children, then a two-layer MLP),
//! pooled per level, concatenated and fed to a sigmoid classifier. Nothing
//! here trains; weights are supplied by the caller.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::CodingTree;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                context: "matrix data",
                expected: format!("{} values", rows * cols),
                actual: format!("{} values", data.len()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape {
                context: "matrix rows",
                expected: format!("{cols} columns"),
                actual: format!("{} columns", bad.len()),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn row_vector(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(1, n, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn expect_shape(&self, context: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.shape() != (rows, cols) {
            return Err(Error::Shape {
                context,
                expected: format!("{rows}x{cols}"),
                actual: format!("{}x{}", self.rows, self.cols),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DenseMatrix::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

/// `x·W + b` for a row vector `x`.
fn affine(x: &[f64], w: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let mut out = b.to_vec();
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, &wij) in out.iter_mut().zip(w.row(i)) {
            *o += xi * wij;
        }
    }
    out
}

/// Column-wise sum that does not depend on row order: each column's values
/// are sorted before being added.
pub fn sum_rows(rows: &[&[f64]]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut column = Vec::with_capacity(rows.len());
    (0..width)
        .map(|j| {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolMode {
    #[default]
    Sum,
    Avg,
    Max,
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolMode::Sum => "sum",
            PoolMode::Avg => "avg",
            PoolMode::Max => "max",
        })
    }
}

/// Normalization inside each MLP. `Inference` applies the supplied
/// per-feature scale and shift; no batch statistics are used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    #[default]
    Off,
    #[serde(alias = "inference-normalization")]
    Inference,
}

/// Two affine maps with normalization and a rectifier in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_scale: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_shift: Option<Vec<f64>>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
}

impl MlpWeights {
    pub fn identity(dim: usize) -> Self {
        MlpWeights {
            w1: DenseMatrix::identity(dim),
            b1: vec![0.0; dim],
            norm_scale: None,
            norm_shift: None,
            w2: DenseMatrix::identity(dim),
            b2: vec![0.0; dim],
        }
    }

    pub fn forward(&self, x: &[f64], norm: NormMode) -> Vec<f64> {
        let mut hidden = affine(x, &self.w1, &self.b1);
        if norm == NormMode::Inference {
            if let (Some(scale), Some(shift)) = (&self.norm_scale, &self.norm_shift) {
                for ((h, s), b) in hidden.iter_mut().zip(scale).zip(shift) {
                    *h = *h * s + b;
                }
            }
        }
        for h in &mut hidden {
            *h = h.max(0.0);
        }
        affine(&hidden, &self.w2, &self.b2)
    }

    fn check(&self, dim: usize, norm: NormMode) -> Result<()> {
        self.w1.expect_shape("mlp w1", dim, dim)?;
        self.w2.expect_shape("mlp w2", dim, dim)?;
        check_len("mlp b1", &self.b1, dim)?;
        check_len("mlp b2", &self.b2, dim)?;
        if norm == NormMode::Inference {
            for (name, v) in [
                ("mlp norm_scale", &self.norm_scale),
                ("mlp norm_shift", &self.norm_shift),
            ] {
                match v {
                    Some(v) => check_len(name, v, dim)?,
                    None => {
                        return Err(Error::Shape {
                            context: name,
                            expected: format!("{dim} values"),
                            actual: "missing".into(),
                        })
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_len(context: &'static str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::Shape {
            context,
            expected: format!("{len} values"),
            actual: format!("{} values", v.len()),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    Ok(())
}

/// Every numeric parameter of the encoder and classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinWeights {
    /// |Y|
    pub num_labels: usize,
    /// d_H
    pub text_dim: usize,
    /// d_V
    pub node_dim: usize,
    /// K, the coding-tree height.
    pub height: usize,
    #[serde(default)]
    pub pool_mode: PoolMode,
    #[serde(default)]
    pub norm_mode: NormMode,
    /// |Y|×1 duplication weights.
    pub w_d: DenseMatrix,
    /// d_H×d_V projection.
    pub w_p: DenseMatrix,
    /// |Y|×d_V bias.
    pub b_h: DenseMatrix,
    /// One MLP per level `1..=K`.
    pub mlps: Vec<MlpWeights>,
    /// d_T×|Y| classifier weights, d_T = (K+1)·d_V.
    pub w_c: DenseMatrix,
    pub b_c: Vec<f64>,
    /// Optional parent label index per label, for the recursive regularizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_parents: Option<Vec<Option<usize>>>,
}

impl TinWeights {
    pub fn tree_dim(&self) -> usize {
        (self.height + 1) * self.node_dim
    }

    /// Checks that every shape agrees with the declared dimensions.
    pub fn check(&self) -> Result<()> {
        let (y, dh, dv, k) = (self.num_labels, self.text_dim, self.node_dim, self.height);
        if k == 0 {
            return Err(Error::ZeroHeight);
        }
        self.w_d.expect_shape("w_d", y, 1)?;
        self.w_p.expect_shape("w_p", dh, dv)?;
        self.b_h.expect_shape("b_h", y, dv)?;
        if self.mlps.len() != k {
            return Err(Error::Shape {
                context: "mlps",
                expected: format!("{k} layers"),
                actual: format!("{} layers", self.mlps.len()),
            });
        }
        for mlp in &self.mlps {
            mlp.check(dv, self.norm_mode)?;
        }
        self.w_c.expect_shape("w_c", self.tree_dim(), y)?;
        check_len("b_c", &self.b_c, y)?;
        if let Some(parents) = &self.label_parents {
            if parents.len() != y {
                return Err(Error::Shape {
                    context: "label_parents",
                    expected: format!("{y} entries"),
                    actual: format!("{} entries", parents.len()),
                });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: TinWeights = serde_json::from_str(text)?;
        w.check()?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    /// Weights with identity projections, identity MLPs and zero biases, for
    /// `d_H = d_V`.
    pub fn identity(num_labels: usize, dim: usize, height: usize) -> Self {
        TinWeights {
            num_labels,
            text_dim: dim,
            node_dim: dim,
            height,
            pool_mode: PoolMode::Sum,
            norm_mode: NormMode::Off,
            w_d: DenseMatrix::new(num_labels, 1, vec![1.0; num_labels]).expect("shape"),
            w_p: DenseMatrix::identity(dim),
            b_h: DenseMatrix::zeros(num_labels, dim),
            mlps: (0..height).map(|_| MlpWeights::identity(dim)).collect(),
            w_c: DenseMatrix::zeros((height + 1) * dim, num_labels),
            b_c: vec![0.0; num_labels],
            label_parents: None,
        }
    }
}

/// Leaf embeddings `W_d·H·W_p + B_H`, one row per label.
pub fn duplicate_project(h: &DenseMatrix, w: &TinWeights) -> Result<DenseMatrix> {
    h.expect_shape("text vector", 1, w.text_dim)?;
    w.w_d.expect_shape("w_d", w.num_labels, 1)?;
    w.w_p.expect_shape("w_p", w.text_dim, w.node_dim)?;
    w.b_h.expect_shape("b_h", w.num_labels, w.node_dim)?;
    let projected = affine(h.row(0), &w.w_p, &vec![0.0; w.node_dim]);
    let mut data = Vec::with_capacity(w.num_labels * w.node_dim);
    for j in 0..w.num_labels {
        let scale = w.w_d.get(j, 0);
        data.extend(
            projected
                .iter()
                .zip(w.b_h.row(j))
                .map(|(p, b)| scale * p + b),
        );
    }
    DenseMatrix::new(w.num_labels, w.node_dim, data)
}

/// Embeddings of level `layer` from those of level `layer - 1`.
///
/// Rows follow [`CodingTree::levels`] order at both levels.
pub fn tin_layer(
    tree: &CodingTree,
    layer: usize,
    x_prev: &DenseMatrix,
    w: &TinWeights,
) -> Result<DenseMatrix> {
    let levels = tree.levels()?;
    tin_layer_with_levels(tree, &levels, layer, x_prev, w)
}

fn tin_layer_with_levels(
    tree: &CodingTree,
    levels: &[Vec<crate::tree::NodeId>],
    layer: usize,
    x_prev: &DenseMatrix,
    w: &TinWeights,
) -> Result<DenseMatrix> {
    if layer == 0 || layer > w.height || layer >= levels.len() {
        return Err(Error::Shape {
            context: "layer index",
            expected: format!("1..={}", w.height.min(levels.len().saturating_sub(1))),
            actual: layer.to_string(),
        });
    }
    let below = &levels[layer - 1];
    x_prev.expect_shape("previous layer", below.len(), w.node_dim)?;
    let mut row_of = std::collections::HashMap::with_capacity(below.len());
    for (i, &id) in below.iter().enumerate() {
        row_of.insert(id, i);
    }
    let mlp = &w.mlps[layer - 1];
    let mut data = Vec::with_capacity(levels[layer].len() * w.node_dim);
    for &v in &levels[layer] {
        let rows: Vec<&[f64]> = tree
            .children(v)
            .iter()
            .map(|c| {
                row_of
                    .get(c)
                    .map(|&i| x_prev.row(i))
                    .ok_or(Error::NotAligned(*c))
            })
            .collect::<Result<_>>()?;
        let message = sum_rows(&rows);
        data.extend(mlp.forward(&message, w.norm_mode));
    }
    DenseMatrix::new(levels[layer].len(), w.node_dim, data)
}

/// Pools each level and concatenates the results, level 0 first.
pub fn readout(layers: &[DenseMatrix], pool: PoolMode) -> Result<DenseMatrix> {
    let mut out = Vec::new();
    for (i, layer) in layers.iter().enumerate() {
        if layer.rows() == 0 {
            return Err(Error::EmptyLayer(i));
        }
        let rows: Vec<&[f64]> = (0..layer.rows()).map(|r| layer.row(r)).collect();
        let segment: Vec<f64> = match pool {
            PoolMode::Sum => sum_rows(&rows),
            PoolMode::Avg => sum_rows(&rows)
                .into_iter()
                .map(|s| s / layer.rows() as f64)
                .collect(),
            PoolMode::Max => (0..layer.cols())
                .map(|j| rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        };
        out.extend(segment);
    }
    DenseMatrix::row_vector(out)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(H_T·W_c + b_c)`.
pub fn classify(h_t: &DenseMatrix, w: &TinWeights) -> Result<Vec<f64>> {
    h_t.expect_shape("tree vector", 1, w.w_c.rows())?;
    check_len("b_c", &w.b_c, w.w_c.cols())?;
    Ok(affine(h_t.row(0), &w.w_c, &w.b_c)
        .into_iter()
        .map(sigmoid)
        .collect())
}

/// Everything the forward pass produces for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    /// Node embeddings for levels `0..=K`.
    pub layers: Vec<DenseMatrix>,
    pub tree_vector: DenseMatrix,
    pub probabilities: Vec<f64>,
}

/// Full forward pass for one text vector.
pub fn encode(tree: &CodingTree, h: &DenseMatrix, w: &TinWeights) -> Result<Encoding> {
    w.check()?;
    if tree.height() != w.height {
        return Err(Error::Shape {
            context: "coding tree height",
            expected: w.height.to_string(),
            actual: tree.height().to_string(),
        });
    }
    if tree.leaf_count() != w.num_labels {
        return Err(Error::Shape {
            context: "coding tree leaves",
            expected: w.num_labels.to_string(),
            actual: tree.leaf_count().to_string(),
        });
    }
    let levels = tree.levels()?;
    let mut layers = Vec::with_capacity(w.height + 1);
    layers.push(duplicate_project(h, w)?);
    for i in 1..=w.height {
        let next = tin_layer_with_levels(tree, &levels, i, &layers[i - 1], w)?;
        layers.push(next);
    }
    let tree_vector = readout(&layers, w.pool_mode)?;
    let probabilities = classify(&tree_vector, w)?;
    Ok(Encoding {
        layers,
        tree_vector,
        probabilities,
    })
}

/// Default regularization strength.
pub const DEFAULT_LAMBDA: f64 = 1e-6;
/// Default clamp for probabilities inside logarithms.
pub const DEFAULT_PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub lambda: f64,
    /// Parent label per label, `None` for top-level labels.
    pub label_parents: Vec<Option<usize>>,
    pub prob_clamp: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda: DEFAULT_LAMBDA,
            label_parents: Vec::new(),
            prob_clamp: DEFAULT_PROB_CLAMP,
        }
    }
}

impl LossConfig {
    pub fn with_parents(label_parents: Vec<Option<usize>>) -> Self {
        LossConfig {
            label_parents,
            ..Self::default()
        }
    }
}

/// Mean binary cross-entropy over labels, natural log.
pub fn bce_loss(p: &[f64], y: &[bool], cfg: &LossConfig) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::Shape {
            context: "bce labels",
            expected: p.len().to_string(),
            actual: y.len().to_string(),
        });
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let eps = cfg.prob_clamp;
    let sum: f64 = p
        .iter()
        .zip(y)
        .map(|(&pj, &yj)| {
            let pj = pj.clamp(eps, 1.0 - eps);
            if yj {
                pj.ln()
            } else {
                (1.0 - pj).ln()
            }
        })
        .sum();
    Ok(-sum / p.len() as f64)
}

/// `Σ_{parent p, child q} ½‖w_p − w_q‖²` over classifier columns.
pub fn recursive_reg(w_c: &DenseMatrix, cfg: &LossConfig) -> Result<f64> {
    let labels = w_c.cols();
    let parents = &cfg.label_parents;
    if parents.len() != labels {
        return Err(Error::Shape {
            context: "label_parents",
            expected: format!("{labels} entries"),
            actual: format!("{} entries", parents.len()),
        });
    }
    for (q, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if p >= labels {
                return Err(Error::Shape {
                    context: "label parent index",
                    expected: format!("< {labels}"),
                    actual: p.to_string(),
                });
            }
            // Walk upward; more than `labels` steps means a cycle.
            let mut cur = Some(p);
            let mut steps = 0;
            while let Some(c) = cur {
                if c == q || steps > labels {
                    return Err(Error::ParentCycle(q));
                }
                cur = parents[c];
                steps += 1;
            }
        }
    }
    let mut total = 0.0;
    for (q, p) in parents.iter().enumerate() {
        let Some(p) = *p else { continue };
        let dist: f64 = (0..w_c.rows())
            .map(|i| {
                let d = w_c.get(i, p) - w_c.get(i, q);
                d * d
            })
            .sum();
        total += 0.5 * dist;
    }
    Ok(total)
}

/// `c + λ·r`.
pub fn total_loss(c: f64, r: f64, cfg: &LossConfig) -> f64 {
    c + cfg.lambda * r
}

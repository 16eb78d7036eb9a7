//! JSON file formats: instances, towers and generator specs.
//!
//! Scalars are `"p/q"` strings; maps are per-source-degree row-major matrices;
//! multilinear maps are sparse lists of `(input tuple, output vector)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use hominduce::exactlin::{fmt_scalar, parse_scalar, GradedMap, GradedSpace, Matrix, Scalar, SparseVec, MAX_DEGREE};
use hominduce::homotopydata::{HomotopyData, Parts, Provenance};
use hominduce::instances::max_dim;
use hominduce::multimap::MultiMap;
use hominduce::towers::{AInftyTower, Method, MAX_ARITY};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("expected a {expected} file, found {found:?}")]
    Kind { expected: &'static str, found: String },
    #[error("invalid content: {0}")]
    Invalid(String),
    #[error("total dimension {0} exceeds HOMINDUCE_MAX_DIM = {1}")]
    TooLarge(usize, usize),
}

fn invalid(e: impl std::fmt::Display) -> FormatError {
    FormatError::Invalid(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub gmin: i32,
    pub labels: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockJson {
    pub source_degree: i32,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub degree: i32,
    pub blocks: Vec<BlockJson>,
}

/// `(index, coefficient)` pairs.
pub type VecJson = Vec<(usize, String)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiJson {
    pub arity: usize,
    pub degree: i32,
    pub entries: Vec<(Vec<usize>, VecJson)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    pub generator: String,
    pub params: Vec<(String, String)>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub kind: String,
    pub a: SpaceJson,
    pub b: SpaceJson,
    pub d_a: MapJson,
    pub d_b: MapJson,
    pub y: MapJson,
    pub z: MapJson,
    pub h_a: MapJson,
    pub h_b: MapJson,
    pub wedge: MultiJson,
    /// `(k, j, u_k ▷ e_j)` on the echelon basis of `Im Z`.
    pub lact: Vec<(usize, usize, VecJson)>,
    /// `(j, k, e_j ◁ u_k)`.
    pub ract: Vec<(usize, usize, VecJson)>,
    pub provenance: ProvenanceJson,
    pub flags: BTreeMap<String, bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerFile {
    pub schema_version: u32,
    pub kind: String,
    pub method: String,
    pub k1: Option<String>,
    pub k2: Option<String>,
    pub convention: String,
    pub space: SpaceJson,
    pub hypotheses: Vec<String>,
    pub notes: Vec<String>,
    /// `products[n-1] = m_n`.
    pub products: Vec<MultiJson>,
    pub expressions: Vec<Option<String>>,
    /// Arities whose defect was checked to vanish when the file was written.
    pub certified_arities: Vec<usize>,
}

pub fn space_to_json(s: &GradedSpace) -> SpaceJson {
    SpaceJson { gmin: s.gmin(), labels: s.labels().to_vec() }
}

pub fn space_from_json(s: &SpaceJson) -> Result<Arc<GradedSpace>, FormatError> {
    Ok(Arc::new(GradedSpace::new(s.gmin, s.labels.clone()).map_err(invalid)?))
}

pub fn vec_to_json(v: &SparseVec) -> VecJson {
    v.iter().map(|(i, x)| (*i, fmt_scalar(x))).collect()
}

pub fn vec_from_json(v: &VecJson, dim: usize) -> Result<SparseVec, FormatError> {
    let mut out = SparseVec::new();
    for (i, x) in v {
        if *i >= dim {
            return Err(invalid(format!("index {i} out of range {dim}")));
        }
        let x = parse_scalar(x).map_err(invalid)?;
        if !x.is_zero() {
            *out.entry(*i).or_insert_with(Scalar::zero) += x;
        }
    }
    out.retain(|_, x| !x.is_zero());
    Ok(out)
}

pub fn map_to_json(m: &GradedMap) -> MapJson {
    let blocks = m
        .blocks()
        .iter()
        .map(|(d, b)| BlockJson { source_degree: *d, rows: (0..b.rows()).map(|i| b.row(i).iter().map(fmt_scalar).collect()).collect() })
        .collect();
    MapJson { degree: m.degree(), blocks }
}

pub fn map_from_json(m: &MapJson, source: &Arc<GradedSpace>, target: &Arc<GradedSpace>, degree: i32) -> Result<GradedMap, FormatError> {
    if m.degree != degree {
        return Err(invalid(format!("map of degree {} where {degree} was expected", m.degree)));
    }
    let mut blocks: BTreeMap<i32, Matrix> = BTreeMap::new();
    for b in &m.blocks {
        let target_degree = b.source_degree.checked_add(degree).filter(|&t| target.in_window(t));
        if !source.in_window(b.source_degree) || target_degree.is_none() {
            return Err(invalid(format!("block at source degree {} lies outside the degree windows", b.source_degree)));
        }
        let (rows, cols) = (target.dim(b.source_degree + degree), source.dim(b.source_degree));
        if b.rows.len() != rows || b.rows.iter().any(|r| r.len() != cols) {
            return Err(invalid(format!("block at source degree {} must be {rows}×{cols}", b.source_degree)));
        }
        let parsed = b.rows.iter().map(|r| r.iter().map(|x| parse_scalar(x).map_err(invalid)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
        let mat = if rows == 0 { Matrix::zeros(0, cols) } else { Matrix::from_rows(parsed) };
        if blocks.insert(b.source_degree, mat).is_some() {
            return Err(invalid(format!("duplicate block at source degree {}", b.source_degree)));
        }
    }
    GradedMap::from_fn(source.clone(), target.clone(), degree, |j| {
        let sd = source.degree_of(j);
        let mut v = SparseVec::new();
        if let Some(b) = blocks.get(&sd) {
            let to = target.offset(sd + degree);
            let jj = j - source.offset(sd);
            for i in 0..b.rows() {
                let x = b.get(i, jj);
                if !x.is_zero() {
                    v.insert(to + i, x.clone());
                }
            }
        }
        v
    })
    .map_err(invalid)
}

pub fn multi_to_json(m: &MultiMap) -> MultiJson {
    MultiJson { arity: m.arity(), degree: m.degree(), entries: m.entries().iter().map(|(t, v)| (t.clone(), vec_to_json(v))).collect() }
}

pub fn multi_from_json(m: &MultiJson, space: &Arc<GradedSpace>) -> Result<MultiMap, FormatError> {
    let n = space.total_dim();
    if m.degree.unsigned_abs() > MAX_DEGREE as u32 || m.arity > MAX_ARITY {
        return Err(invalid(format!("multilinear map of arity {} and degree {} is out of range", m.arity, m.degree)));
    }
    let mut out = MultiMap::zero(m.arity, m.degree, space.clone(), space.clone());
    for (t, v) in &m.entries {
        if t.len() != m.arity || t.iter().any(|&i| i >= n) {
            return Err(invalid(format!("bad input tuple {t:?}")));
        }
        let v = vec_from_json(v, n)?;
        let want = out.input_degree(t) + m.degree;
        if v.keys().any(|&i| space.degree_of(i) != want) {
            return Err(invalid(format!("entry at {t:?} is not homogeneous of degree {}", m.degree)));
        }
        out.add_to(t.clone(), &v, &Scalar::from_integer(1.into()));
    }
    Ok(out)
}

fn check_cap(a: &GradedSpace, b: &GradedSpace) -> Result<(), FormatError> {
    let total = a.total_dim() + b.total_dim();
    let cap = max_dim();
    if total > cap {
        return Err(FormatError::TooLarge(total, cap));
    }
    Ok(())
}

pub fn instance_to_file(inst: &HomotopyData) -> InstanceFile {
    let lact = inst
        .lact_table()
        .iter()
        .enumerate()
        .flat_map(|(k, row)| row.iter().enumerate().filter(|(_, v)| !v.is_empty()).map(move |(j, v)| (k, j, vec_to_json(v))))
        .collect();
    let ract = inst
        .ract_table()
        .iter()
        .enumerate()
        .flat_map(|(j, row)| row.iter().enumerate().filter(|(_, v)| !v.is_empty()).map(move |(k, v)| (j, k, vec_to_json(v))))
        .collect();
    let p = inst.provenance();
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        kind: "instance".into(),
        a: space_to_json(inst.a()),
        b: space_to_json(inst.b()),
        d_a: map_to_json(inst.d_a()),
        d_b: map_to_json(inst.d_b()),
        y: map_to_json(inst.y()),
        z: map_to_json(inst.z()),
        h_a: map_to_json(inst.h_a()),
        h_b: map_to_json(inst.h_b()),
        wedge: multi_to_json(inst.wedge()),
        lact,
        ract,
        provenance: ProvenanceJson { generator: p.generator.clone(), params: p.params.clone(), notes: p.notes.clone() },
        flags: inst.flags().conditions.iter().map(|c| (c.name.to_string(), c.holds)).collect(),
    }
}

fn check_header(version: u32, kind: &str, expected: &'static str) -> Result<(), FormatError> {
    if version != SCHEMA_VERSION {
        return Err(FormatError::Schema(version));
    }
    if kind != expected {
        return Err(FormatError::Kind { expected, found: kind.to_string() });
    }
    Ok(())
}

/// Rebuilds the parts of an instance without validating the axioms.
pub fn parts_from_file(f: &InstanceFile) -> Result<Parts, FormatError> {
    check_header(f.schema_version, &f.kind, "instance")?;
    let a = space_from_json(&f.a)?;
    let b = space_from_json(&f.b)?;
    check_cap(&a, &b)?;
    let z = map_from_json(&f.z, &b, &a, 0)?;
    let imz = hominduce::homotopydata::ImageBasis::of(&z).len();
    let nb = b.total_dim();
    let mut lact = vec![vec![SparseVec::new(); nb]; imz];
    for (k, j, v) in &f.lact {
        if *k >= imz || *j >= nb {
            return Err(invalid(format!("left action index ({k}, {j}) out of range")));
        }
        lact[*k][*j] = vec_from_json(v, nb)?;
    }
    let mut ract = vec![vec![SparseVec::new(); imz]; nb];
    for (j, k, v) in &f.ract {
        if *k >= imz || *j >= nb {
            return Err(invalid(format!("right action index ({j}, {k}) out of range")));
        }
        ract[*j][*k] = vec_from_json(v, nb)?;
    }
    let wedge = multi_from_json(&f.wedge, &a)?;
    if wedge.arity() != 2 || wedge.degree() != 0 {
        return Err(invalid("wedge must be binary of degree 0"));
    }
    Ok(Parts {
        d_a: map_from_json(&f.d_a, &a, &a, 1)?,
        d_b: map_from_json(&f.d_b, &b, &b, 1)?,
        y: map_from_json(&f.y, &a, &b, 0)?,
        z,
        h_a: map_from_json(&f.h_a, &a, &a, -1)?,
        h_b: map_from_json(&f.h_b, &b, &b, -1)?,
        wedge,
        lact,
        ract,
        provenance: Provenance { generator: f.provenance.generator.clone(), params: f.provenance.params.clone(), notes: f.provenance.notes.clone() },
        a,
        b,
    })
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let f: InstanceFile = serde_json::from_str(text)?;
    check_header(f.schema_version, &f.kind, "instance")?;
    Ok(f)
}

pub fn tower_to_file(t: &AInftyTower, certified: usize) -> TowerFile {
    let space = t.product(1).source();
    TowerFile {
        schema_version: SCHEMA_VERSION,
        kind: "tower".into(),
        method: t.method.name().into(),
        k1: t.k.as_ref().map(|k| fmt_scalar(&k.0)),
        k2: t.k.as_ref().map(|k| fmt_scalar(&k.1)),
        convention: "defect: sum (-1)^(r+st) m_(r+t+1)(1^r, m_s, 1^t) = 0".into(),
        space: space_to_json(space),
        hypotheses: t.hypotheses.clone(),
        notes: t.notes.clone(),
        products: t.products.iter().map(multi_to_json).collect(),
        expressions: t.expressions.iter().map(|e| e.as_ref().map(|e| e.to_string())).collect(),
        certified_arities: (1..=certified).collect(),
    }
}

pub fn tower_from_file(f: &TowerFile) -> Result<AInftyTower, FormatError> {
    check_header(f.schema_version, &f.kind, "tower")?;
    let space = space_from_json(&f.space)?;
    if space.total_dim() > max_dim() {
        return Err(FormatError::TooLarge(space.total_dim(), max_dim()));
    }
    let method = Method::parse(&f.method).ok_or_else(|| invalid(format!("unknown method {:?}", f.method)))?;
    let mut products = Vec::new();
    for (idx, m) in f.products.iter().enumerate() {
        let p = multi_from_json(m, &space)?;
        if p.arity() != idx + 1 || p.degree() != 1 - idx as i32 {
            return Err(invalid(format!("product {} has arity {} and degree {}", idx + 1, p.arity(), p.degree())));
        }
        products.push(p);
    }
    if products.is_empty() {
        return Err(invalid("a tower needs at least m_1"));
    }
    let parse_k = |s: &Option<String>| s.as_ref().map(|x| parse_scalar(x).map_err(invalid)).transpose();
    let k = match (parse_k(&f.k1)?, parse_k(&f.k2)?) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    let n = products.len();
    Ok(AInftyTower { method, k, products, expressions: vec![None; n], hypotheses: f.hypotheses.clone(), notes: f.notes.clone() })
}

/// Canonical pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: String,
    #[serde(default)]
    pub dga: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub base: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub keep: Vec<String>,
    #[serde(default, rename = "break")]
    pub brk: Vec<String>,
    #[serde(default)]
    pub side: Option<String>,
}

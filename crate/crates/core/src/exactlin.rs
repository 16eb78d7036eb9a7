//! Exact rational linear algebra over graded vector spaces.
//!
//! Scalars are arbitrary-precision rationals. Graded spaces carry a degree
//! window with per-degree bases; graded maps are stored as one dense block per
//! source degree. Row reduction always picks the leftmost pivot column and the
//! lowest available row, so every basis returned here is deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Scalar = BigRational;

/// Sparse coordinate vector keyed by global basis index. Never stores zeros.
pub type SparseVec = BTreeMap<usize, Scalar>;

/// Bound on degrees, keeping window arithmetic far from overflow.
pub const MAX_DEGREE: i32 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("duplicate basis label {label:?} in degree {degree}")]
    DuplicateLabel { degree: i32, label: String },
    #[error("not a differential: d∘d is nonzero on basis vector {0}")]
    NotADifferential(usize),
    #[error("map of degree {found} where degree {expected} was required")]
    WrongDegree { expected: i32, found: i32 },
    #[error("malformed scalar {0:?}")]
    BadScalar(String),
    #[error("degree window starting at {gmin} with {len} degrees exceeds ±{MAX_DEGREE}")]
    WindowOutOfRange { gmin: i32, len: usize },
    #[error("inhomogeneous entry: basis {source_index} of degree {source_degree} mapped to degree {target_degree}")]
    Inhomogeneous { source_index: usize, source_degree: i32, target_degree: i32 },
}

pub fn q(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn qq(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

/// `(-1)^p` for a possibly negative exponent.
pub fn parity_sign(p: i64) -> Scalar {
    if p.rem_euclid(2) == 0 {
        Scalar::one()
    } else {
        -Scalar::one()
    }
}

/// Renders as `"p/q"`, or `"p"` for integers.
pub fn fmt_scalar(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_scalar(s: &str) -> Result<Scalar, LinError> {
    let bad = || LinError::BadScalar(s.to_string());
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Scalar::new(n, d))
}

pub fn sv_add_scaled(acc: &mut SparseVec, v: &SparseVec, c: &Scalar) {
    if c.is_zero() {
        return;
    }
    for (k, x) in v {
        add_entry(acc, *k, x * c);
    }
}

pub fn add_entry(acc: &mut SparseVec, k: usize, x: Scalar) {
    if x.is_zero() {
        return;
    }
    match acc.entry(k) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(x);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += x;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub fn sv_scale(v: &SparseVec, c: &Scalar) -> SparseVec {
    if c.is_zero() {
        return SparseVec::new();
    }
    v.iter().map(|(k, x)| (*k, x * c)).collect()
}

/// Dense row-major matrix of scalars.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_columns(rows: usize, cols: &[Vec<Scalar>]) -> Self {
        let mut m = Matrix::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: &Scalar) {
        self.data[i * self.cols + j] += x;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Scalar::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        s += a * b;
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = m.get(r, c).recip();
            for j in c..m.cols {
                let x = m.get(r, j) * &inv;
                m.set(r, j, x);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let x = m.get(r, j) * &f;
                    if !x.is_zero() {
                        m.data[i * m.cols + j] -= x;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Null space basis, one vector per free column in increasing order.
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        let Rref { matrix, pivots } = self.rref();
        let mut is_pivot = vec![None; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            is_pivot[c] = Some(r);
        }
        let mut out = Vec::new();
        for f in 0..self.cols {
            if is_pivot[f].is_some() {
                continue;
            }
            let mut v = vec![Scalar::zero(); self.cols];
            v[f] = Scalar::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -matrix.get(r, f).clone();
            }
            out.push(v);
        }
        out
    }

    /// Columns of the original matrix at the pivot positions.
    pub fn image_basis(&self) -> Vec<Vec<Scalar>> {
        self.rref().pivots.iter().map(|&c| self.column(c)).collect()
    }

    /// Particular solution of `self * x = b` with all free variables zero.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let Rref { matrix, pivots } = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Scalar::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = matrix.get(r, self.cols).clone();
        }
        Some(x)
    }

    /// A row functional `phi` with `phi * self = 0` and `phi · b ≠ 0`, if any.
    pub fn inconsistency_witness(&self, b: &[Scalar]) -> Option<Vec<Scalar>> {
        self.transpose().kernel().into_iter().find(|phi| !dot(phi, b).is_zero())
    }
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    let mut s = Scalar::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

/// Finite-dimensional ℤ-graded vector space over a degree window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedSpace {
    gmin: i32,
    labels: Vec<Vec<String>>,
    offsets: Vec<usize>,
    degs: Vec<i32>,
}

impl GradedSpace {
    pub fn new(gmin: i32, labels: Vec<Vec<String>>) -> Result<Self, LinError> {
        if gmin.unsigned_abs() as usize + labels.len() > MAX_DEGREE as usize {
            return Err(LinError::WindowOutOfRange { gmin, len: labels.len() });
        }
        for (k, ls) in labels.iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            for l in ls {
                if !seen.insert(l) {
                    return Err(LinError::DuplicateLabel { degree: gmin + k as i32, label: l.clone() });
                }
            }
        }
        let mut offsets = Vec::with_capacity(labels.len() + 1);
        let mut degs = Vec::new();
        let mut acc = 0;
        for (k, ls) in labels.iter().enumerate() {
            offsets.push(acc);
            acc += ls.len();
            degs.extend(std::iter::repeat(gmin + k as i32).take(ls.len()));
        }
        offsets.push(acc);
        Ok(GradedSpace { gmin, labels, offsets, degs })
    }

    pub fn from_dims(gmin: i32, dims: &[usize]) -> Self {
        let labels = dims
            .iter()
            .enumerate()
            .map(|(k, &n)| (0..n).map(|i| format!("e{}_{}", gmin + k as i32, i)).collect())
            .collect();
        GradedSpace::new(gmin, labels).expect("generated labels are unique")
    }

    /// Same basis with every degree lowered by `s` (the `s`-fold suspension).
    pub fn suspended(&self, s: i32) -> Self {
        GradedSpace::new(self.gmin - s, self.labels.clone()).expect("labels already unique")
    }

    pub fn gmin(&self) -> i32 {
        self.gmin
    }

    pub fn gmax(&self) -> i32 {
        self.gmin + self.labels.len() as i32 - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.len()).collect()
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn in_window(&self, deg: i32) -> bool {
        deg >= self.gmin && deg <= self.gmax()
    }

    pub fn dim(&self, deg: i32) -> usize {
        if self.in_window(deg) {
            self.labels[(deg - self.gmin) as usize].len()
        } else {
            0
        }
    }

    pub fn total_dim(&self) -> usize {
        self.degs.len()
    }

    /// Global index of the first basis vector of degree `deg`.
    pub fn offset(&self, deg: i32) -> usize {
        if deg < self.gmin {
            0
        } else if deg > self.gmax() {
            self.total_dim()
        } else {
            self.offsets[(deg - self.gmin) as usize]
        }
    }

    pub fn degree_of(&self, idx: usize) -> i32 {
        self.degs[idx]
    }

    pub fn label(&self, idx: usize) -> &str {
        let d = self.degs[idx];
        &self.labels[(d - self.gmin) as usize][idx - self.offset(d)]
    }

    pub fn index_of(&self, deg: i32, k: usize) -> usize {
        self.offset(deg) + k
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        (0..self.total_dim()).find(|&i| self.label(i) == label)
    }

    /// Degrees with nonzero dimension.
    pub fn support(&self) -> Vec<i32> {
        (self.gmin..=self.gmax()).filter(|&d| self.dim(d) > 0).collect()
    }
}

impl fmt::Display for GradedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}] dims {:?}", self.gmin, self.gmax(), self.dims())
    }
}

pub fn same_space(a: &Arc<GradedSpace>, b: &Arc<GradedSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Homogeneous linear map of fixed degree between graded spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    source: Arc<GradedSpace>,
    target: Arc<GradedSpace>,
    degree: i32,
    blocks: BTreeMap<i32, Matrix>,
    overflow: bool,
}

impl GradedMap {
    pub fn zero(source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32) -> Self {
        let mut blocks = BTreeMap::new();
        for d in source.support() {
            if target.dim(d + degree) > 0 {
                blocks.insert(d, Matrix::zeros(target.dim(d + degree), source.dim(d)));
            }
        }
        GradedMap { source, target, degree, blocks, overflow: false }
    }

    pub fn identity(space: Arc<GradedSpace>) -> Self {
        Self::from_fn(space.clone(), space, 0, |j| [(j, Scalar::one())].into_iter().collect())
            .expect("identity is homogeneous")
    }

    /// Builds a map from the image of each global source basis index.
    /// Images landing outside the target window are dropped and flagged.
    pub fn from_fn<F>(source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32, mut f: F) -> Result<Self, LinError>
    where
        F: FnMut(usize) -> SparseVec,
    {
        let mut m = Self::zero(source.clone(), target.clone(), degree);
        for j in 0..source.total_dim() {
            let sd = source.degree_of(j);
            let img = f(j);
            if img.is_empty() {
                continue;
            }
            let td = sd + degree;
            if !target.in_window(td) || target.dim(td) == 0 {
                m.overflow = true;
                continue;
            }
            let block = m.blocks.get_mut(&sd).expect("block exists for in-window target");
            let (to, so) = (target.offset(td), source.offset(sd));
            for (i, x) in img {
                if target.degree_of(i) != td {
                    return Err(LinError::Inhomogeneous { source_index: j, source_degree: sd, target_degree: target.degree_of(i) });
                }
                block.set(i - to, j - so, x);
            }
        }
        Ok(m)
    }

    /// Map given by a dense matrix on global coordinates (target × source).
    pub fn from_global(source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32, m: &Matrix) -> Result<Self, LinError> {
        Self::from_fn(source, target, degree, |j| {
            let mut v = SparseVec::new();
            for i in 0..m.rows() {
                add_entry(&mut v, i, m.get(i, j).clone());
            }
            v
        })
    }

    pub fn source(&self) -> &Arc<GradedSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedSpace> {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn overflow(&self) -> bool {
        self.overflow
    }

    pub fn blocks(&self) -> &BTreeMap<i32, Matrix> {
        &self.blocks
    }

    /// Image of global source basis vector `j`.
    pub fn column(&self, j: usize) -> SparseVec {
        let sd = self.source.degree_of(j);
        let mut out = SparseVec::new();
        if let Some(b) = self.blocks.get(&sd) {
            let to = self.target.offset(sd + self.degree);
            let jj = j - self.source.offset(sd);
            for i in 0..b.rows() {
                add_entry(&mut out, to + i, b.get(i, jj).clone());
            }
        }
        out
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, x) in v {
            sv_add_scaled(&mut out, &self.column(*j), x);
        }
        out
    }

    /// All columns, indexed by global source index.
    pub fn columns(&self) -> Vec<SparseVec> {
        (0..self.source.total_dim()).map(|j| self.column(j)).collect()
    }

    pub fn to_global(&self) -> Matrix {
        let mut m = Matrix::zeros(self.target.total_dim(), self.source.total_dim());
        for j in 0..self.source.total_dim() {
            for (i, x) in self.column(j) {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|b| b.is_zero())
    }

    /// First source basis vector with nonzero image, and that image.
    pub fn first_nonzero(&self) -> Option<(usize, SparseVec)> {
        (0..self.source.total_dim()).map(|j| (j, self.column(j))).find(|(_, v)| !v.is_empty())
    }

    fn check_same_shape(&self, other: &GradedMap) -> Result<(), LinError> {
        if !same_space(&self.source, &other.source) || !same_space(&self.target, &other.target) || self.degree != other.degree {
            return Err(LinError::SpaceMismatch("maps differ in source, target or degree".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &GradedMap) -> Result<GradedMap, LinError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (d, b) in &other.blocks {
            let e = out.blocks.get_mut(d).expect("same shape");
            *e = e.add(b);
        }
        out.overflow |= other.overflow;
        Ok(out)
    }

    pub fn sub(&self, other: &GradedMap) -> Result<GradedMap, LinError> {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> GradedMap {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b = b.scale(c);
        }
        out
    }

    pub fn transpose_dual(&self, source: Arc<GradedSpace>, target: Arc<GradedSpace>) -> Result<GradedMap, LinError> {
        Self::from_global(source, target, self.degree, &self.to_global().transpose())
    }

    /// Per source degree: (degree, rank, kernel basis, image basis) in block coordinates.
    pub fn rank_kernel_image(&self) -> Vec<(i32, usize, Vec<Vec<Scalar>>, Vec<Vec<Scalar>>)> {
        let mut out = Vec::new();
        for d in self.source.support() {
            let block = match self.blocks.get(&d) {
                Some(b) => b.clone(),
                None => Matrix::zeros(0, self.source.dim(d)),
            };
            let ker = block.kernel();
            let img = block.image_basis();
            out.push((d, img.len(), ker, img));
        }
        out
    }
}

/// `f ∘ g`.
pub fn compose_graded(f: &GradedMap, g: &GradedMap) -> Result<GradedMap, LinError> {
    if !same_space(g.target(), f.source()) {
        return Err(LinError::SpaceMismatch(format!("compose: {} vs {}", g.target(), f.source())));
    }
    let mut out = GradedMap::zero(g.source.clone(), f.target.clone(), f.degree + g.degree);
    out.overflow = f.overflow || g.overflow;
    for (d, gb) in &g.blocks {
        let mid = d + g.degree;
        let Some(fb) = f.blocks.get(&mid) else {
            if !gb.is_zero() && !f.target.in_window(mid + f.degree) {
                out.overflow = true;
            }
            continue;
        };
        if let Some(ob) = out.blocks.get_mut(d) {
            *ob = fb.mul(gb);
        }
    }
    Ok(out)
}

/// `d∘h + h∘d` for a degree −1 map `h` on a complex with differential `d`.
pub fn graded_commutator(d: &GradedMap, h: &GradedMap) -> Result<GradedMap, LinError> {
    let a = compose_graded(d, h)?;
    let b = compose_graded(h, d)?;
    if (h.degree() * d.degree()) % 2 == 0 {
        a.sub(&b)
    } else {
        a.add(&b)
    }
}

/// Cohomology of a complex with explicit inclusion, projection and splitting homotopy.
#[derive(Clone, Debug)]
pub struct CohomologyModel {
    pub complex: Arc<GradedSpace>,
    pub d: GradedMap,
    pub h: Arc<GradedSpace>,
    pub i: GradedMap,
    pub p: GradedMap,
    pub h_split: GradedMap,
}

impl CohomologyModel {
    /// Checks all six splitting identities; returns the name of the first failure.
    pub fn check(&self) -> Result<(), String> {
        let dd = compose_graded(&self.d, &self.d).map_err(|e| e.to_string())?;
        let checks: Vec<(&str, GradedMap)> = vec![
            ("d∘d", dd),
            ("d∘i", compose_graded(&self.d, &self.i).map_err(|e| e.to_string())?),
            ("p∘d", compose_graded(&self.p, &self.d).map_err(|e| e.to_string())?),
            (
                "p∘i − 1",
                compose_graded(&self.p, &self.i).map_err(|e| e.to_string())?.sub(&GradedMap::identity(self.h.clone())).map_err(|e| e.to_string())?,
            ),
            (
                "1 − i∘p − [d, h]",
                GradedMap::identity(self.complex.clone())
                    .sub(&compose_graded(&self.i, &self.p).map_err(|e| e.to_string())?)
                    .and_then(|x| x.sub(&graded_commutator(&self.d, &self.h_split)?))
                    .map_err(|e| e.to_string())?,
            ),
            ("p∘h", compose_graded(&self.p, &self.h_split).map_err(|e| e.to_string())?),
            ("h∘i", compose_graded(&self.h_split, &self.i).map_err(|e| e.to_string())?),
            ("h∘h", compose_graded(&self.h_split, &self.h_split).map_err(|e| e.to_string())?),
        ];
        for (name, m) in checks {
            if !m.is_zero() {
                return Err(name.to_string());
            }
        }
        Ok(())
    }
}

/// Splits `space = im d ⊕ H ⊕ C` per degree and returns the resulting model.
///
/// In each degree `k` the cycles `Z_k` are the kernel of `d_k`; boundaries
/// `B_k` are the image of `d_{k-1}`. `H_k` is spanned by the kernel vectors
/// not in the span of the boundaries (greedy in kernel order) and `C_k` by
/// standard basis vectors completing `Z_k` to a basis (greedy in index order).
pub fn cohomology(space: Arc<GradedSpace>, d: &GradedMap) -> Result<CohomologyModel, LinError> {
    if d.degree() != 1 {
        return Err(LinError::WrongDegree { expected: 1, found: d.degree() });
    }
    let dd = compose_graded(d, d)?;
    if let Some((j, _)) = dd.first_nonzero() {
        return Err(LinError::NotADifferential(j));
    }
    let n = space.total_dim();
    let dg = d.to_global();
    // per degree: boundary basis, harmonic basis, complement basis (global coords)
    let mut h_labels = Vec::new();
    let mut harmonic: Vec<Vec<Vec<Scalar>>> = Vec::new();
    let mut bases: Vec<Vec<Scalar>> = Vec::new(); // columns of change-of-basis: B, H, C per degree
    let mut kinds: Vec<(u8, i32, usize)> = Vec::new(); // (0 = boundary, 1 = harmonic, 2 = complement, degree, k)
    let mut c_pre: Vec<Vec<Scalar>> = Vec::new(); // for complement basis c, the preimage of d(c) is c itself
    let gmin = space.gmin();
    for deg in gmin..=space.gmax() {
        let dim = space.dim(deg);
        let off = space.offset(deg);
        let embed = |v: &[Scalar]| {
            let mut g = vec![Scalar::zero(); n];
            for (k, x) in v.iter().enumerate() {
                g[off + k] = x.clone();
            }
            g
        };
        let block = |dd: i32| -> Matrix {
            d.blocks().get(&dd).cloned().unwrap_or_else(|| Matrix::zeros(space.dim(dd + 1), space.dim(dd)))
        };
        let dk = block(deg);
        let cycles = dk.kernel();
        // boundaries in this degree: images of complement vectors of previous degree
        let bounds: Vec<Vec<Scalar>> = c_pre
            .iter()
            .map(|c| {
                let img = dg.mul_vec(c);
                img[off..off + dim].to_vec()
            })
            .collect();
        let mut span: Vec<Vec<Scalar>> = bounds.clone();
        let mut harm = Vec::new();
        for z in &cycles {
            let mut trial = span.clone();
            trial.push(z.clone());
            if Matrix::from_columns(dim, &trial).rank() > span.len() {
                span.push(z.clone());
                harm.push(z.clone());
            }
        }
        let mut comp = Vec::new();
        for k in 0..dim {
            let mut e = vec![Scalar::zero(); dim];
            e[k] = Scalar::one();
            let mut trial = span.clone();
            trial.push(e.clone());
            if Matrix::from_columns(dim, &trial).rank() > span.len() {
                span.push(e.clone());
                comp.push(e);
            }
        }
        for (k, b) in bounds.iter().enumerate() {
            bases.push(embed(b));
            kinds.push((0, deg, k));
        }
        let mut labels = Vec::new();
        for (k, z) in harm.iter().enumerate() {
            bases.push(embed(z));
            kinds.push((1, deg, k));
            labels.push(format!("[{}]", describe(&space, off, z)));
        }
        h_labels.push(labels);
        harmonic.push(harm);
        c_pre = Vec::new();
        for (k, c) in comp.iter().enumerate() {
            bases.push(embed(c));
            kinds.push((2, deg, k));
            c_pre.push(embed(c));
        }
    }
    let hspace = Arc::new(GradedSpace::new(gmin, dedupe(h_labels))?);
    // change of basis: coordinates of each standard vector in the adapted basis
    let cob = Matrix::from_columns(n, &bases);
    let mut coords = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Scalar::zero(); n];
        e[j] = Scalar::one();
        coords.push(cob.solve(&e).expect("adapted basis spans"));
    }
    // map adapted index → role
    let mut h_index = vec![None; n];
    let mut b_index = vec![None; n];
    {
        let mut hcount = 0;
        for (pos, (kind, deg, k)) in kinds.iter().enumerate() {
            match kind {
                1 => {
                    h_index[pos] = Some(hcount);
                    hcount += 1;
                }
                0 => b_index[pos] = Some((*deg, *k)),
                _ => {}
            }
        }
    }
    // complement vector that hits each boundary basis vector, by (degree, k)
    let mut comp_of_bound: BTreeMap<(i32, usize), Vec<Scalar>> = BTreeMap::new();
    for (pos, (kind, deg, k)) in kinds.iter().enumerate() {
        if *kind == 2 {
            comp_of_bound.insert((deg + 1, *k), bases[pos].clone());
        }
    }
    let i_map = GradedMap::from_fn(hspace.clone(), space.clone(), 0, |j| {
        let deg = hspace.degree_of(j);
        let k = j - hspace.offset(deg);
        let z = &harmonic[(deg - gmin) as usize][k];
        let off = space.offset(deg);
        let mut v = SparseVec::new();
        for (t, x) in z.iter().enumerate() {
            add_entry(&mut v, off + t, x.clone());
        }
        v
    })?;
    let p_map = GradedMap::from_fn(space.clone(), hspace.clone(), 0, |j| {
        let mut v = SparseVec::new();
        for (pos, c) in coords[j].iter().enumerate() {
            if let Some(hk) = h_index[pos] {
                add_entry(&mut v, hk, c.clone());
            }
        }
        v
    })?;
    let h_map = GradedMap::from_fn(space.clone(), space.clone(), -1, |j| {
        let mut v = SparseVec::new();
        for (pos, c) in coords[j].iter().enumerate() {
            if let Some(key) = b_index[pos] {
                let pre = &comp_of_bound[&key];
                for (t, x) in pre.iter().enumerate() {
                    add_entry(&mut v, t, x * c);
                }
            }
        }
        v
    })?;
    Ok(CohomologyModel { complex: space, d: d.clone(), h: hspace, i: i_map, p: p_map, h_split: h_map })
}

fn describe(space: &GradedSpace, off: usize, v: &[Scalar]) -> String {
    let mut parts = Vec::new();
    for (k, x) in v.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        let l = space.label(off + k);
        if x.is_one() {
            parts.push(l.to_string());
        } else {
            parts.push(format!("{}*{}", fmt_scalar(x), l));
        }
    }
    parts.join("+")
}

fn dedupe(labels: Vec<Vec<String>>) -> Vec<Vec<String>> {
    labels
        .into_iter()
        .map(|ls| {
            let mut seen = std::collections::BTreeSet::new();
            ls.into_iter()
                .enumerate()
                .map(|(k, l)| if seen.insert(l.clone()) { l } else { format!("{l}#{k}") })
                .collect()
        })
        .collect()
}

/// Coordinates on the space of homogeneous degree-`k` maps `source → target`:
/// one coordinate per (target index, source index) pair of matching degrees.
#[derive(Clone, Debug)]
pub struct HomBasis {
    pub source: Arc<GradedSpace>,
    pub target: Arc<GradedSpace>,
    pub degree: i32,
    pub positions: Vec<(usize, usize)>,
}

impl HomBasis {
    pub fn new(source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32) -> Self {
        let mut positions = Vec::new();
        for j in 0..source.total_dim() {
            let td = source.degree_of(j) + degree;
            for i in target.offset(td)..target.offset(td) + target.dim(td) {
                positions.push((i, j));
            }
        }
        HomBasis { source, target, degree, positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn map(&self, coords: &[Scalar]) -> GradedMap {
        let mut cols: Vec<SparseVec> = vec![SparseVec::new(); self.source.total_dim()];
        for (&(i, j), x) in self.positions.iter().zip(coords) {
            add_entry(&mut cols[j], i, x.clone());
        }
        GradedMap::from_fn(self.source.clone(), self.target.clone(), self.degree, |j| cols[j].clone()).expect("homogeneous by construction")
    }

    pub fn unit(&self, k: usize) -> GradedMap {
        let mut c = vec![Scalar::zero(); self.len()];
        c[k] = Scalar::one();
        self.map(&c)
    }

    pub fn coords(&self, m: &GradedMap) -> Vec<Scalar> {
        let g = m.to_global();
        self.positions.iter().map(|&(i, j)| g.get(i, j).clone()).collect()
    }

    /// Matrix of a linear operator from this Hom space to `out`, column per basis map.
    pub fn operator_matrix<F>(&self, out: &HomBasis, mut op: F) -> Matrix
    where
        F: FnMut(&GradedMap) -> GradedMap,
    {
        let cols: Vec<Vec<Scalar>> = (0..self.len()).map(|k| out.coords(&op(&self.unit(k)))).collect();
        Matrix::from_columns(out.len(), &cols)
    }
}

/// Absolute value helper used by rendering code.
pub fn abs(x: &Scalar) -> Scalar {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Arc<GradedSpace>, GradedMap) {
        // 0 → k{u} → k{du} with d u = du, plus a cycle in degree 0
        let s = Arc::new(GradedSpace::new(0, vec![vec!["1".into(), "u".into()], vec!["du".into()]]).unwrap());
        let d = GradedMap::from_fn(s.clone(), s.clone(), 1, |j| if j == 1 { [(2, q(1))].into_iter().collect() } else { SparseVec::new() }).unwrap();
        (s, d)
    }

    #[test]
    fn scalar_round_trip() {
        for s in ["0", "3", "-7/2", "5/10"] {
            let x = parse_scalar(s).unwrap();
            assert_eq!(parse_scalar(&fmt_scalar(&x)).unwrap(), x);
        }
        assert_eq!(fmt_scalar(&qq(5, 10)), "1/2");
        assert!(parse_scalar("1/0").is_err());
    }

    #[test]
    fn rank_nullity_and_solve() {
        let m = Matrix::from_rows(vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]]);
        assert_eq!(m.rank(), 1);
        assert_eq!(m.kernel().len(), 2);
        for k in m.kernel() {
            assert!(m.mul_vec(&k).iter().all(|x| x.is_zero()));
        }
        assert!(m.solve(&[q(1), q(3)]).is_none());
        let phi = m.inconsistency_witness(&[q(1), q(3)]).unwrap();
        assert!(!dot(&phi, &[q(1), q(3)]).is_zero());
        let x = m.solve(&[q(2), q(4)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![q(2), q(4)]);
    }

    #[test]
    fn compose_identity_and_square() {
        let (s, d) = line();
        let id = GradedMap::identity(s.clone());
        assert_eq!(compose_graded(&id, &d).unwrap(), d);
        assert!(compose_graded(&d, &d).unwrap().is_zero());
    }

    #[test]
    fn cohomology_of_line() {
        let (s, d) = line();
        let c = cohomology(s, &d).unwrap();
        assert_eq!(c.h.dims(), vec![1, 0]);
        c.check().unwrap();
    }

    #[test]
    fn cohomology_zero_differential() {
        let s = Arc::new(GradedSpace::from_dims(0, &[1, 2]));
        let d = GradedMap::zero(s.clone(), s.clone(), 1);
        let c = cohomology(s.clone(), &d).unwrap();
        assert_eq!(c.h.dims(), s.dims());
        assert!(c.h_split.is_zero());
        c.check().unwrap();
    }

    #[test]
    fn not_a_differential() {
        let s = Arc::new(GradedSpace::from_dims(0, &[1, 1, 1]));
        let d = GradedMap::from_fn(s.clone(), s.clone(), 1, |j| if j < 2 { [(j + 1, q(1))].into_iter().collect() } else { SparseVec::new() }).unwrap();
        assert!(matches!(cohomology(s, &d), Err(LinError::NotADifferential(0))));
    }
}

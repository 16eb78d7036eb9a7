//! Sparse graded multilinear maps with Koszul-signed composition.
//!
//! A `MultiMap` of arity n and degree k sends basis tuples of `source^{⊗n}` to
//! vectors of `target`. The Koszul convention is
//! `(f⊗g)(a⊗b) = (-1)^{|g||a|} f(a)⊗g(b)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactlin::{add_entry, parity_sign, same_space, sv_add_scaled, GradedMap, GradedSpace, LinError, Scalar, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultiError {
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("missing product m_{0}")]
    MissingProduct(usize),
    #[error(transparent)]
    Lin(#[from] LinError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiMap {
    arity: usize,
    degree: i32,
    source: Arc<GradedSpace>,
    target: Arc<GradedSpace>,
    entries: BTreeMap<Vec<usize>, SparseVec>,
}

impl MultiMap {
    pub fn zero(arity: usize, degree: i32, source: Arc<GradedSpace>, target: Arc<GradedSpace>) -> Self {
        assert!(arity >= 1, "arity must be positive");
        MultiMap { arity, degree, source, target, entries: BTreeMap::new() }
    }

    pub fn from_graded(g: &GradedMap) -> Self {
        let mut m = Self::zero(1, g.degree(), g.source().clone(), g.target().clone());
        for j in 0..g.source().total_dim() {
            m.add_to(vec![j], &g.column(j), &Scalar::one());
        }
        m
    }

    /// Evaluates `f` on every basis tuple whose output degree lies in the target window.
    pub fn from_fn<F>(arity: usize, degree: i32, source: Arc<GradedSpace>, target: Arc<GradedSpace>, mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> SparseVec,
    {
        let mut m = Self::zero(arity, degree, source.clone(), target.clone());
        for_each_tuple(source.total_dim(), arity, |t| {
            let deg: i32 = t.iter().map(|&i| source.degree_of(i)).sum::<i32>() + degree;
            if target.dim(deg) == 0 {
                return;
            }
            let v = f(t);
            m.add_to(t.to_vec(), &v, &Scalar::one());
        });
        m
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn source(&self) -> &Arc<GradedSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedSpace> {
        &self.target
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, SparseVec> {
        &self.entries
    }

    pub fn get(&self, tuple: &[usize]) -> SparseVec {
        self.entries.get(tuple).cloned().unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lexicographically first tuple with nonzero value.
    pub fn first_nonzero(&self) -> Option<(Vec<usize>, SparseVec)> {
        self.entries.iter().next().map(|(k, v)| (k.clone(), v.clone()))
    }

    pub fn input_degree(&self, tuple: &[usize]) -> i32 {
        tuple.iter().map(|&i| self.source.degree_of(i)).sum()
    }

    /// Adds `c·v` at `tuple`, dropping zeros and out-of-window components.
    pub fn add_to(&mut self, tuple: Vec<usize>, v: &SparseVec, c: &Scalar) {
        if v.is_empty() || c.is_zero() {
            return;
        }
        for (i, x) in v {
            self.add_component(&tuple, *i, x * c);
        }
    }

    fn add_component(&mut self, tuple: &[usize], idx: usize, x: Scalar) {
        if x.is_zero() {
            return;
        }
        match self.entries.get_mut(tuple) {
            Some(e) => {
                add_entry(e, idx, x);
                if e.is_empty() {
                    self.entries.remove(tuple);
                }
            }
            None => {
                self.entries.insert(tuple.to_vec(), [(idx, x)].into_iter().collect());
            }
        }
    }

    fn check_shape(&self, other: &MultiMap) -> Result<(), MultiError> {
        if self.arity != other.arity || self.degree != other.degree {
            return Err(MultiError::ArityMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.arity, self.degree, other.arity, other.degree
            )));
        }
        if !same_space(&self.source, &other.source) || !same_space(&self.target, &other.target) {
            return Err(MultiError::SpaceMismatch("operands live on different spaces".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiMap) -> Result<MultiMap, MultiError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.add_assign_scaled(other, &Scalar::one());
        Ok(out)
    }

    pub fn sub(&self, other: &MultiMap) -> Result<MultiMap, MultiError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Scalar::one());
        Ok(out)
    }

    /// `self += c·other`, assuming identical shape.
    pub fn add_assign_scaled(&mut self, other: &MultiMap, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (t, v) in &other.entries {
            for (i, x) in v {
                self.add_component(t, *i, x * c);
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> MultiMap {
        let mut out = Self::zero(self.arity, self.degree, self.source.clone(), self.target.clone());
        if c.is_zero() {
            return out;
        }
        for (t, v) in &self.entries {
            out.entries.insert(t.clone(), v.iter().map(|(i, x)| (*i, x * c)).collect());
        }
        out
    }

    /// Multiplies each entry by `(-1)^{parity(input degrees)}`.
    pub fn twist<F>(&self, mut parity: F) -> MultiMap
    where
        F: FnMut(&[i32]) -> bool,
    {
        let mut out = self.clone();
        for (t, v) in out.entries.iter_mut() {
            let degs: Vec<i32> = t.iter().map(|&i| self.source.degree_of(i)).collect();
            if parity(&degs) {
                for x in v.values_mut() {
                    *x = -x.clone();
                }
            }
        }
        out
    }

    /// Same coefficients reinterpreted on relabelled spaces with a new degree.
    pub fn reinterpret(&self, source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32) -> MultiMap {
        MultiMap { arity: self.arity, degree, source, target, entries: self.entries.clone() }
    }

    /// `g ∘ self`.
    pub fn post_compose(&self, g: &GradedMap) -> Result<MultiMap, MultiError> {
        if !same_space(g.source(), &self.target) {
            return Err(MultiError::SpaceMismatch("post-composition target".into()));
        }
        let cols = g.columns();
        let mut out = Self::zero(self.arity, self.degree + g.degree(), self.source.clone(), g.target().clone());
        for (t, v) in &self.entries {
            let mut acc = SparseVec::new();
            for (i, x) in v {
                sv_add_scaled(&mut acc, &cols[*i], x);
            }
            if !acc.is_empty() {
                out.entries.insert(t.clone(), acc);
            }
        }
        Ok(out)
    }

    /// `self ∘ (1^{⊗j} ⊗ inner ⊗ 1^{⊗t})` with Koszul sign `(-1)^{|inner|·(|a_1|+…+|a_j|)}`.
    pub fn compose_at(&self, j: usize, inner: &MultiMap) -> Result<MultiMap, MultiError> {
        if j >= self.arity {
            return Err(MultiError::ArityMismatch(format!("slot {j} of arity {}", self.arity)));
        }
        if !same_space(&inner.target, &self.source) || !same_space(&inner.source, &self.source) {
            return Err(MultiError::SpaceMismatch("inner map must act on the outer source".into()));
        }
        let index = inner.index_by_output();
        let odd = inner.degree.rem_euclid(2) == 1;
        let mut out = Self::zero(self.arity + inner.arity - 1, self.degree + inner.degree, self.source.clone(), self.target.clone());
        let mut key = Vec::with_capacity(out.arity);
        for (a, v) in &self.entries {
            let Some(hits) = index.get(&a[j]) else { continue };
            let mut sign = Scalar::one();
            if odd && a[..j].iter().map(|&i| self.source.degree_of(i)).sum::<i32>().rem_euclid(2) == 1 {
                sign = -sign;
            }
            for (b, w) in hits {
                key.clear();
                key.extend_from_slice(&a[..j]);
                key.extend_from_slice(b);
                key.extend_from_slice(&a[j + 1..]);
                let c = &sign * *w;
                for (o, x) in v {
                    out.add_component(&key, *o, x * &c);
                }
            }
        }
        Ok(out)
    }

    /// Tuples with their coefficient on output basis vector `o`, grouped by `o`.
    fn index_by_output(&self) -> HashMap<usize, Vec<(&Vec<usize>, &Scalar)>> {
        let mut idx: HashMap<usize, Vec<(&Vec<usize>, &Scalar)>> = HashMap::new();
        for (t, v) in &self.entries {
            for (o, x) in v {
                idx.entry(*o).or_default().push((t, x));
            }
        }
        idx
    }

    /// `self ∘ (g_1 ⊗ … ⊗ g_k)` where all `g_l` share one source space.
    pub fn compose_tensor(&self, gs: &[&MultiMap]) -> Result<MultiMap, MultiError> {
        self.compose_tensor_impl(gs, true)
    }

    /// As [`compose_tensor`](Self::compose_tensor) but without Koszul signs, for
    /// factors that have degree zero in a shifted grading.
    pub fn compose_tensor_unsigned(&self, gs: &[&MultiMap]) -> Result<MultiMap, MultiError> {
        self.compose_tensor_impl(gs, false)
    }

    fn compose_tensor_impl(&self, gs: &[&MultiMap], koszul: bool) -> Result<MultiMap, MultiError> {
        if gs.len() != self.arity {
            return Err(MultiError::ArityMismatch(format!("{} maps for arity {}", gs.len(), self.arity)));
        }
        let src = gs[0].source.clone();
        for g in gs {
            if !same_space(&g.target, &self.source) || !same_space(&g.source, &src) {
                return Err(MultiError::SpaceMismatch("tensor factors".into()));
            }
        }
        let indices: Vec<_> = gs.iter().map(|g| g.index_by_output()).collect();
        let arity: usize = gs.iter().map(|g| g.arity).sum();
        let degree = self.degree + gs.iter().map(|g| g.degree).sum::<i32>();
        let mut out = Self::zero(arity, degree, src.clone(), self.target.clone());
        let mut key = Vec::with_capacity(arity);
        for (a, v) in &self.entries {
            let lists: Option<Vec<_>> = a.iter().zip(&indices).map(|(o, idx)| idx.get(o)).collect();
            let Some(lists) = lists else { continue };
            let mut choice = vec![0usize; lists.len()];
            'outer: loop {
                key.clear();
                let mut coef = Scalar::one();
                let mut parity = 0i64;
                let mut deg_left = 0i64;
                for (l, list) in lists.iter().enumerate() {
                    let (t, x) = list[choice[l]];
                    if koszul {
                        parity += gs[l].degree as i64 * deg_left;
                    }
                    deg_left += t.iter().map(|&i| src.degree_of(i) as i64).sum::<i64>();
                    key.extend_from_slice(t);
                    coef *= x;
                }
                if parity.rem_euclid(2) == 1 {
                    coef = -coef;
                }
                for (o, x) in v {
                    out.add_component(&key, *o, x * &coef);
                }
                let mut l = lists.len();
                loop {
                    if l == 0 {
                        break 'outer;
                    }
                    l -= 1;
                    choice[l] += 1;
                    if choice[l] < lists[l].len() {
                        break;
                    }
                    choice[l] = 0;
                }
            }
        }
        Ok(out)
    }

    /// Value of `1^{⊗r} ⊗ self ⊗ 1^{⊗t}` on a basis tuple of length `n`.
    pub fn koszul_apply(&self, r: usize, n: usize, inputs: &[usize]) -> Result<Vec<(Vec<usize>, Scalar)>, MultiError> {
        if r + self.arity > n || inputs.len() != n {
            return Err(MultiError::ArityMismatch(format!("slot block {r}+{} in {n}", self.arity)));
        }
        let left: i32 = inputs[..r].iter().map(|&i| self.source.degree_of(i)).sum();
        let sign = parity_sign(self.degree as i64 * left as i64);
        let v = self.get(&inputs[r..r + self.arity]);
        Ok(v.into_iter()
            .map(|(o, x)| {
                let mut t = inputs[..r].to_vec();
                t.push(o);
                t.extend_from_slice(&inputs[r + self.arity..]);
                (t, x * &sign)
            })
            .collect())
    }
}

/// Calls `f` on every tuple in `{0..dim}^arity` in lexicographic order.
pub fn for_each_tuple<F: FnMut(&[usize])>(dim: usize, arity: usize, mut f: F) {
    if dim == 0 {
        return;
    }
    let mut t = vec![0usize; arity];
    loop {
        f(&t);
        let mut l = arity;
        loop {
            if l == 0 {
                return;
            }
            l -= 1;
            t[l] += 1;
            if t[l] < dim {
                break;
            }
            t[l] = 0;
        }
    }
}

/// `m_i ∘ m_k = Σ_j (-1)^{j+i+k(i-j-1)} m_i(1^{⊗j} ⊗ m_k ⊗ 1^{⊗(i-j-1)})`.
pub fn op_compose(mi: &MultiMap, mk: &MultiMap) -> Result<MultiMap, MultiError> {
    let (i, k) = (mi.arity as i64, mk.arity as i64);
    let mut out = MultiMap::zero(mi.arity + mk.arity - 1, mi.degree + mk.degree, mi.source.clone(), mi.target.clone());
    for j in 0..mi.arity {
        let part = mi.compose_at(j, mk)?;
        let jj = j as i64;
        out.add_assign_scaled(&part, &parity_sign(jj + i + k * (i - jj - 1)));
    }
    Ok(out)
}

/// `Σ_j φ ∘ (1^{⊗j} ⊗ h ⊗ 1^{⊗(n-j-1)})`, Koszul-signed.
pub fn insert_homotopy_all_slots(phi: &MultiMap, h: &GradedMap) -> Result<MultiMap, MultiError> {
    let hm = MultiMap::from_graded(h);
    let mut out = MultiMap::zero(phi.arity, phi.degree + h.degree(), phi.source.clone(), phi.target.clone());
    for j in 0..phi.arity {
        out.add_assign_scaled(&phi.compose_at(j, &hm)?, &Scalar::one());
    }
    Ok(out)
}

/// `d_t ∘ φ − (-1)^{|φ|} φ ∘ d_{⊗n}`.
pub fn hom_differential(phi: &MultiMap, d_target: &GradedMap, d_source: &GradedMap) -> Result<MultiMap, MultiError> {
    let mut out = phi.post_compose(d_target)?;
    let inner = insert_homotopy_all_slots(phi, d_source)?;
    out.add_assign_scaled(&inner, &-parity_sign(phi.degree as i64));
    Ok(out)
}

/// `Σ_{r+s+t=n} (-1)^{r+st} m_{r+t+1}(1^{⊗r} ⊗ m_s ⊗ 1^{⊗t})` for `products[k] = m_{k+1}`.
pub fn a_infinity_defect(products: &[MultiMap], n: usize) -> Result<MultiMap, MultiError> {
    if n == 0 || products.len() < n {
        return Err(MultiError::MissingProduct(products.len() + 1));
    }
    let m1 = &products[0];
    let mut out = MultiMap::zero(n, 3 - n as i32, m1.source.clone(), m1.target.clone());
    for s in 1..=n {
        for r in 0..=(n - s) {
            let t = n - s - r;
            let outer = &products[r + t];
            let part = outer.compose_at(r, &products[s - 1])?;
            out.add_assign_scaled(&part, &parity_sign((r + s * t) as i64));
        }
    }
    Ok(out)
}

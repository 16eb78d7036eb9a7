//! Deterministic generators of validated homotopy data.
//!
//! The dga catalogue:
//! - `exterior:n` — Λ(θ_1..θ_n), generators in degree 1, d = 0 (n ≤ 3);
//! - `dual` — k[ε]/ε², ε in degree 0;
//! - `trunc:D` — k[x]/x^{D+1}, x in degree 2 (D ≤ 3);
//! - `odd:D` — forms on the odd line ℝ^{0|1} modulo polynomial weight > D+1;
//! - `odd-ideal:D` — the augmentation ideal of `odd:D` (non-unital, acyclic).

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactlin::{add_entry, compose_graded, graded_commutator, q, GradedMap, GradedSpace, HomBasis, LinError, Matrix, Scalar, SparseVec};
use crate::homotopydata::{synthesize_homotopy, unit, HomotopyData, HomotopyError, Parts, Provenance, CONDITION_NAMES};
use crate::multimap::MultiMap;

pub const DEFAULT_MAX_DIM: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("unknown or malformed dga spec {0:?}")]
    UnknownDga(String),
    #[error("parameter out of range: {0}")]
    InvalidParameters(String),
    #[error("truncation is not closed under the differential: {0}")]
    TruncationUnsound(String),
    #[error("perturbation constraints force τ = 0")]
    EmptyPerturbationSpace,
    #[error("no sampled perturbation satisfies the requested flags")]
    PerturbationExhausted,
    #[error("requested flags are contradictory: {0}")]
    Infeasible(String),
    #[error("unknown condition name {0:?}")]
    UnknownCondition(String),
    #[error("total dimension {0} exceeds the cap {1}")]
    TooLarge(usize, usize),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
    #[error(transparent)]
    Lin(#[from] LinError),
}

/// Size cap from `HOMINDUCE_MAX_DIM`, default 32.
pub fn max_dim() -> usize {
    std::env::var("HOMINDUCE_MAX_DIM").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_MAX_DIM)
}

/// A finite-dimensional dga from the catalogue.
#[derive(Clone, Debug)]
pub struct Dga {
    pub name: String,
    pub space: Arc<GradedSpace>,
    pub d: GradedMap,
    pub wedge: MultiMap,
    pub unit: Option<usize>,
}

struct Monomials<K> {
    keys: Vec<K>,
    degs: Vec<i32>,
    labels: Vec<String>,
}

/// Builds a dga from monomials with a product `key × key → ±key` and a
/// differential `key → Σ c·key`. Monomials are ordered by degree, then by
/// generation order.
fn monomial_dga<K, M, D>(name: &str, mons: Monomials<K>, mut mult: M, mut diff: D) -> Dga
where
    K: Clone + Ord,
    M: FnMut(&K, &K) -> Option<(K, i64)>,
    D: FnMut(&K) -> Vec<(K, i64)>,
{
    let gmin = *mons.degs.iter().min().unwrap_or(&0);
    let gmax = *mons.degs.iter().max().unwrap_or(&0);
    let mut labels = vec![Vec::new(); (gmax - gmin + 1) as usize];
    let mut order: Vec<usize> = (0..mons.keys.len()).collect();
    order.sort_by_key(|&i| (mons.degs[i], i));
    let mut index = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        labels[(mons.degs[i] - gmin) as usize].push(mons.labels[i].clone());
        index.insert(mons.keys[i].clone(), pos);
    }
    let keys: Vec<K> = order.iter().map(|&i| mons.keys[i].clone()).collect();
    let space = Arc::new(GradedSpace::new(gmin, labels).expect("monomial labels are unique"));
    let d = GradedMap::from_fn(space.clone(), space.clone(), 1, |j| {
        let mut v = SparseVec::new();
        for (k, c) in diff(&keys[j]) {
            if let Some(&t) = index.get(&k) {
                add_entry(&mut v, t, q(c));
            }
        }
        v
    })
    .expect("differential raises degree by one");
    let wedge = MultiMap::from_fn(2, 0, space.clone(), space.clone(), |t| {
        let mut v = SparseVec::new();
        if let Some((k, c)) = mult(&keys[t[0]], &keys[t[1]]) {
            if let Some(&p) = index.get(&k) {
                add_entry(&mut v, p, q(c));
            }
        }
        v
    });
    let unit = (0..keys.len()).find(|&i| {
        (0..keys.len()).all(|j| wedge.get(&[i, j]) == unit_vec(j) && wedge.get(&[j, i]) == unit_vec(j))
    });
    Dga { name: name.to_string(), space, d, wedge, unit }
}

fn unit_vec(j: usize) -> SparseVec {
    unit(j)
}

/// Sign of sorting the concatenation of two sorted index lists; `None` if they overlap.
fn merge_sign(s: &[usize], t: &[usize]) -> Option<(Vec<usize>, i64)> {
    let mut inv = 0i64;
    for &a in s {
        for &b in t {
            if a == b {
                return None;
            }
            if a > b {
                inv += 1;
            }
        }
    }
    let mut out: Vec<usize> = s.iter().chain(t).copied().collect();
    out.sort();
    Some((out, if inv % 2 == 0 { 1 } else { -1 }))
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..(1u32 << n)).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect();
    out.sort_by_key(|s| (s.len(), s.clone()));
    out
}

fn theta_label(s: &[usize]) -> String {
    s.iter().map(|i| format!("t{}", i + 1)).collect::<Vec<_>>().join(" ")
}

pub fn exterior(n: usize) -> Result<Dga, InstanceError> {
    if !(1..=3).contains(&n) {
        return Err(InstanceError::InvalidParameters(format!("exterior:{n} needs 1 ≤ n ≤ 3")));
    }
    let keys = subsets(n);
    let degs = keys.iter().map(|s| s.len() as i32).collect();
    let labels = keys.iter().map(|s| if s.is_empty() { "1".to_string() } else { theta_label(s) }).collect();
    Ok(monomial_dga(&format!("exterior:{n}"), Monomials { keys, degs, labels }, |a, b| merge_sign(a, b), |_| vec![]))
}

pub fn dual_numbers() -> Dga {
    let keys = vec![0usize, 1];
    monomial_dga(
        "dual",
        Monomials { keys, degs: vec![0, 0], labels: vec!["1".into(), "e".into()] },
        |a, b| (a + b <= 1).then_some((a + b, 1)),
        |_| vec![],
    )
}

pub fn truncated_poly(d: usize) -> Result<Dga, InstanceError> {
    if !(1..=3).contains(&d) {
        return Err(InstanceError::InvalidParameters(format!("trunc:{d} needs 1 ≤ D ≤ 3")));
    }
    let keys: Vec<usize> = (0..=d).collect();
    let degs = keys.iter().map(|k| 2 * *k as i32).collect();
    let labels = keys.iter().map(|k| if *k == 0 { "1".to_string() } else { format!("x^{k}") }).collect();
    Ok(monomial_dga(&format!("trunc:{d}"), Monomials { keys, degs, labels }, |a, b| (a + b <= d).then_some((a + b, 1)), |_| vec![]))
}

/// Monomial `θ^S dθ^J` of the de Rham algebra of `ℝ^{0|n}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SuperMonomial {
    pub s: Vec<usize>,
    pub j: Vec<usize>,
}

impl SuperMonomial {
    pub fn weight(&self) -> usize {
        self.s.len() + self.j.iter().sum::<usize>()
    }

    pub fn form_degree(&self) -> i32 {
        self.j.iter().sum::<usize>() as i32
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if !self.s.is_empty() {
            parts.push(theta_label(&self.s));
        }
        for (b, &e) in self.j.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("dt{}", b + 1)),
                _ => parts.push(format!("dt{}^{}", b + 1, e)),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }
}

fn super_monomials(n: usize, max_weight: usize) -> Vec<SuperMonomial> {
    let mut out = Vec::new();
    for s in subsets(n) {
        let mut j = vec![0usize; n];
        loop {
            let m = SuperMonomial { s: s.clone(), j: j.clone() };
            if m.weight() <= max_weight {
                out.push(m);
            }
            let mut l = 0;
            loop {
                if l == n {
                    break;
                }
                j[l] += 1;
                if j[l] <= max_weight {
                    break;
                }
                j[l] = 0;
                l += 1;
            }
            if l == n {
                break;
            }
        }
    }
    out.sort_by_key(|m| (m.weight(), m.form_degree(), m.clone()));
    out
}

fn super_mult(a: &SuperMonomial, b: &SuperMonomial, max_weight: usize) -> Option<(SuperMonomial, i64)> {
    if a.weight() + b.weight() > max_weight {
        return None;
    }
    let (s, sign) = merge_sign(&a.s, &b.s)?;
    let jt = a.j.iter().sum::<usize>() * b.s.len();
    let j = a.j.iter().zip(&b.j).map(|(x, y)| x + y).collect();
    Some((SuperMonomial { s, j }, if jt % 2 == 0 { sign } else { -sign }))
}

fn super_diff(m: &SuperMonomial) -> Vec<(SuperMonomial, i64)> {
    let p = m.s.len();
    let mut out = Vec::new();
    for (i, &si) in m.s.iter().enumerate() {
        let mut s = m.s.clone();
        s.remove(i);
        let mut j = m.j.clone();
        j[si] += 1;
        out.push((SuperMonomial { s, j }, if (p - 1 - i) % 2 == 0 { 1 } else { -1 }));
    }
    out
}

/// Contraction with the odd Euler field, divided by the polynomial weight.
fn super_contraction(m: &SuperMonomial) -> Vec<(SuperMonomial, Scalar)> {
    let w = m.weight();
    if w == 0 {
        return vec![];
    }
    let mut out = Vec::new();
    for (beta, &e) in m.j.iter().enumerate() {
        if e == 0 || m.s.contains(&beta) {
            continue;
        }
        let below = m.s.iter().filter(|&&s| s > beta).count();
        let mut s = m.s.clone();
        s.push(beta);
        s.sort();
        let mut j = m.j.clone();
        j[beta] -= 1;
        let sign = if below % 2 == 0 { 1 } else { -1 };
        out.push((SuperMonomial { s, j }, Scalar::new((sign * e as i64).into(), (w as i64).into())));
    }
    out
}

fn super_dga(name: &str, n: usize, max_weight: usize, ideal: bool) -> Dga {
    let mut keys = super_monomials(n, max_weight);
    if ideal {
        keys.retain(|m| m.weight() > 0);
    }
    let degs = keys.iter().map(|m| m.form_degree()).collect();
    let labels = keys.iter().map(|m| m.label()).collect();
    monomial_dga(name, Monomials { keys, degs, labels }, |a, b| super_mult(a, b, max_weight), super_diff)
}

pub fn odd_line(d: usize, ideal: bool) -> Result<Dga, InstanceError> {
    if d > 3 {
        return Err(InstanceError::InvalidParameters(format!("odd:{d} needs D ≤ 3")));
    }
    let name = if ideal { format!("odd-ideal:{d}") } else { format!("odd:{d}") };
    Ok(super_dga(&name, 1, d + 1, ideal))
}

/// Parses a catalogue spec such as `exterior:1`, `dual`, `trunc:2`, `odd:1`.
pub fn catalogue(spec: &str) -> Result<Dga, InstanceError> {
    let bad = || InstanceError::UnknownDga(spec.to_string());
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a.parse::<usize>().map_err(|_| bad())?)),
        None => (spec, None),
    };
    match (kind, arg) {
        ("exterior", Some(n)) => exterior(n),
        ("dual", None) | ("dual_numbers", None) => Ok(dual_numbers()),
        ("trunc", Some(d)) => truncated_poly(d),
        ("odd", Some(d)) => odd_line(d, false),
        ("odd-ideal", Some(d)) => odd_line(d, true),
        _ => Err(bad()),
    }
}

fn check_cap(n: usize) -> Result<(), InstanceError> {
    let cap = max_dim();
    if n > cap {
        return Err(InstanceError::TooLarge(n, cap));
    }
    Ok(())
}

fn provenance(generator: &str, params: &[(&str, String)]) -> Provenance {
    Provenance { generator: generator.into(), params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(), notes: vec![] }
}

/// `B = A`, `Y = Z = id`, zero homotopies, actions given by ∧.
pub fn gen_trivial(dga: &Dga) -> Result<HomotopyData, InstanceError> {
    check_cap(2 * dga.space.total_dim())?;
    let s = dga.space.clone();
    let id = GradedMap::identity(s.clone());
    let zero = GradedMap::zero(s.clone(), s.clone(), -1);
    let w = &dga.wedge;
    let mult = |u: &SparseVec, v: &SparseVec| {
        let mut out = SparseVec::new();
        for (i, x) in u {
            for (j, y) in v {
                crate::exactlin::sv_add_scaled(&mut out, &w.get(&[*i, *j]), &(x * y));
            }
        }
        out
    };
    let parts = Parts::with_actions(
        s.clone(),
        s.clone(),
        [dga.d.clone(), dga.d.clone(), id.clone(), id, zero.clone(), zero],
        dga.wedge.clone(),
        |u, j| mult(u, &unit(j)),
        |j, u| mult(&unit(j), u),
        provenance("trivial", &[("dga", dga.name.clone())]),
    );
    Ok(HomotopyData::new(parts)?)
}

/// `B = A ⊗ K` with `K = span{1, u, du}` the cochains of an interval.
pub fn gen_interval(dga: &Dga) -> Result<HomotopyData, InstanceError> {
    let a = dga.space.clone();
    let na = a.total_dim();
    check_cap(na * 4)?;
    // K basis: 0 = "1", 1 = "u" (degree 0), 2 = "du" (degree 1)
    let kdeg = [0, 0, 1];
    let kname = ["1", "u", "du"];
    let mut pairs: Vec<(usize, usize)> = (0..na).flat_map(|i| (0..3).map(move |k| (i, k))).collect();
    pairs.sort_by_key(|&(i, k)| (a.degree_of(i) + kdeg[k], i, k));
    let gmin = a.gmin();
    let gmax = a.gmax() + 1;
    let mut labels = vec![Vec::new(); (gmax - gmin + 1) as usize];
    let mut index = BTreeMap::new();
    for (pos, &(i, k)) in pairs.iter().enumerate() {
        labels[(a.degree_of(i) + kdeg[k] - gmin) as usize].push(format!("{}|{}", a.label(i), kname[k]));
        index.insert((i, k), pos);
    }
    let b = Arc::new(GradedSpace::new(gmin, labels)?);
    let sgn = |i: usize| if a.degree_of(i) % 2 == 0 { q(1) } else { q(-1) };
    let da = dga.d.columns();
    let lift = |v: &SparseVec, k: usize, c: &Scalar| -> SparseVec { v.iter().map(|(i, x)| (index[&(*i, k)], x * c)).collect() };
    let d_b = GradedMap::from_fn(b.clone(), b.clone(), 1, |p| {
        let (i, k) = pairs[p];
        let mut out = lift(&da[i], k, &q(1));
        if k == 1 {
            add_entry(&mut out, index[&(i, 2)], sgn(i));
        }
        out
    })?;
    let y = GradedMap::from_fn(a.clone(), b.clone(), 0, |i| unit(index[&(i, 0)]))?;
    let z = GradedMap::from_fn(b.clone(), a.clone(), 0, |p| {
        let (i, k) = pairs[p];
        if k == 0 {
            unit(i)
        } else {
            SparseVec::new()
        }
    })?;
    let h_b = GradedMap::from_fn(b.clone(), b.clone(), -1, |p| {
        let (i, k) = pairs[p];
        if k == 2 {
            [(index[&(i, 1)], sgn(i))].into_iter().collect()
        } else {
            SparseVec::new()
        }
    })?;
    let h_a = GradedMap::zero(a.clone(), a.clone(), -1);
    let w = dga.wedge.clone();
    let mult = |u: &SparseVec, v: &SparseVec| {
        let mut out = SparseVec::new();
        for (i, x) in u {
            for (j, y) in v {
                crate::exactlin::sv_add_scaled(&mut out, &w.get(&[*i, *j]), &(x * y));
            }
        }
        out
    };
    let parts = Parts::with_actions(
        a.clone(),
        b.clone(),
        [dga.d.clone(), d_b, y, z, h_a, h_b],
        dga.wedge.clone(),
        |u, p| {
            let (i, k) = pairs[p];
            lift(&mult(u, &unit(i)), k, &q(1))
        },
        |p, u| {
            let (i, k) = pairs[p];
            let mut out = SparseVec::new();
            for (j, x) in u {
                let sign = if kdeg[k] * a.degree_of(*j) % 2 == 0 { x.clone() } else { -x.clone() };
                let pr = mult(&unit(i), &unit(*j));
                crate::exactlin::sv_add_scaled(&mut out, &lift(&pr, k, &q(1)), &sign);
            }
            out
        },
        provenance("interval", &[("dga", dga.name.clone())]),
    );
    Ok(HomotopyData::new(parts)?)
}

/// Forms and integral forms on the odd superspace `ℝ^{0|n}`, truncated at
/// polynomial weight `D + 1`. `B` is the graded dual of `A` (degrees
/// negated) with transposed differential and homotopy.
pub fn gen_grassmann_super(n: usize, cutoff: usize) -> Result<HomotopyData, InstanceError> {
    if !(1..=2).contains(&n) || cutoff > 3 {
        return Err(InstanceError::InvalidParameters(format!("grassmann_super({n}, {cutoff}) needs n ∈ {{1,2}}, D ≤ 3")));
    }
    let max_weight = cutoff + 1;
    let dga = super_dga(&format!("forms:{n}:{cutoff}"), n, max_weight, false);
    let a = dga.space.clone();
    let na = a.total_dim();
    check_cap(2 * na)?;
    let keys = super_monomials(n, max_weight);
    let mut by_label = BTreeMap::new();
    for m in &keys {
        by_label.insert(m.label(), m.clone());
    }
    let mono: Vec<SuperMonomial> = (0..na).map(|i| by_label[a.label(i)].clone()).collect();
    let index: BTreeMap<SuperMonomial, usize> = mono.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    // sanity: the truncation ideal is closed under d
    for (i, m) in mono.iter().enumerate() {
        for (t, _) in super_diff(m) {
            if !index.contains_key(&t) {
                return Err(InstanceError::TruncationUnsound(format!("d({}) leaves the window", a.label(i))));
            }
        }
    }
    let unit_idx = dga.unit.ok_or_else(|| InstanceError::TruncationUnsound("no unit".into()))?;
    // dual space: basis vector i* in degree −|i|
    let bdeg: Vec<i32> = (0..na).map(|i| -a.degree_of(i)).collect();
    let gmin = *bdeg.iter().min().unwrap();
    let gmax = *bdeg.iter().max().unwrap();
    let mut order: Vec<usize> = (0..na).collect();
    order.sort_by_key(|&i| (bdeg[i], i));
    let mut labels = vec![Vec::new(); (gmax - gmin + 1) as usize];
    let mut pos_of = vec![0usize; na];
    for (pos, &i) in order.iter().enumerate() {
        labels[(bdeg[i] - gmin) as usize].push(integral_label(&mono[i], n));
        pos_of[i] = pos;
    }
    let b = Arc::new(GradedSpace::new(gmin, labels)?);
    let zy = GradedMap::from_fn(a.clone(), a.clone(), 0, |i| if i == unit_idx { unit(i) } else { SparseVec::new() })?;
    let mut branch = "normalized contraction";
    let mut h_a = GradedMap::from_fn(a.clone(), a.clone(), -1, |i| {
        let mut v = SparseVec::new();
        for (t, c) in super_contraction(&mono[i]) {
            add_entry(&mut v, index[&t], c);
        }
        v
    })?;
    let target = GradedMap::identity(a.clone()).sub(&zy)?;
    if graded_commutator(&dga.d, &h_a)? != target {
        h_a = synthesize_homotopy(&a, &dga.d, &zy)?;
        branch = "linear solve";
    }
    let dual = |m: &GradedMap| -> GradedMap {
        GradedMap::from_fn(b.clone(), b.clone(), m.degree(), |p| {
            let x = order[p];
            let mut v = SparseVec::new();
            for y in 0..na {
                if let Some(c) = m.column(y).get(&x) {
                    add_entry(&mut v, pos_of[y], c.clone());
                }
            }
            v
        })
        .expect("transpose of a homogeneous map")
    };
    let d_b = dual(&dga.d);
    let h_b = dual(&h_a);
    let top = pos_of[unit_idx];
    let y = GradedMap::from_fn(a.clone(), b.clone(), 0, |i| if i == unit_idx { unit(top) } else { SparseVec::new() })?;
    let z = GradedMap::from_fn(b.clone(), a.clone(), 0, |p| if p == top { unit(unit_idx) } else { SparseVec::new() })?;
    let w = dga.wedge.clone();
    let scalar_part = |u: &SparseVec| -> Scalar { u.get(&unit_idx).cloned().unwrap_or_else(Scalar::zero) };
    let mut prov = provenance("grassmann_super", &[("n_odd", n.to_string()), ("cutoff", cutoff.to_string())]);
    prov.notes.push(format!("h_A branch: {branch}; h_B is its transpose"));
    let parts = Parts::with_actions(
        a.clone(),
        b.clone(),
        [dga.d.clone(), d_b, y, z, h_a, h_b],
        w,
        |u, j| crate::exactlin::sv_scale(&unit(j), &scalar_part(u)),
        |j, u| crate::exactlin::sv_scale(&unit(j), &scalar_part(u)),
        prov,
    );
    Ok(HomotopyData::new(parts)?)
}

fn integral_label(m: &SuperMonomial, n: usize) -> String {
    let comp: Vec<usize> = (0..n).filter(|i| !m.s.contains(i)).collect();
    let mut parts = Vec::new();
    if !comp.is_empty() {
        parts.push(theta_label(&comp));
    }
    parts.push("D".into());
    for (b, &e) in m.j.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("pd{}", b + 1)),
            _ => parts.push(format!("pd{}^{}", b + 1, e)),
        }
    }
    parts.join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbSpec {
    pub seed: u64,
    pub keep: Vec<String>,
    pub brk: Vec<String>,
    pub side: Side,
}

impl PerturbSpec {
    pub fn new(seed: u64, keep: &[&str], brk: &[&str]) -> Self {
        PerturbSpec { seed, keep: keep.iter().map(|s| s.to_string()).collect(), brk: brk.iter().map(|s| s.to_string()).collect(), side: Side::B }
    }
}

/// Adds a closed degree −1 map `τ` to `h_B` (or `h_A`), chosen from the
/// solution space of the linear constraints implied by `keep`, sampled
/// deterministically from `seed`, and rejected until every condition in
/// `brk` fails and every condition in `keep` holds.
pub fn gen_perturbed(base: &HomotopyData, spec: &PerturbSpec) -> Result<HomotopyData, InstanceError> {
    for c in spec.keep.iter().chain(&spec.brk) {
        if !CONDITION_NAMES.contains(&c.as_str()) {
            return Err(InstanceError::UnknownCondition(c.clone()));
        }
    }
    let wants = |list: &[String], n: &str| list.iter().any(|k| k == n);
    if spec.side == Side::B && wants(&spec.keep, "WSC") && wants(&spec.brk, "SC_right") && base.flags().get("ZYZ") {
        return Err(InstanceError::Infeasible("Z∘Y∘Z = Z and WSC give Z∘h_B = Z∘Y∘Z∘h_B = 0, so SC_right holds; use the twisted generator".into()));
    }
    let (space, d, h) = match spec.side {
        Side::B => (base.b().clone(), base.d_b().clone(), base.h_b().clone()),
        Side::A => (base.a().clone(), base.d_a().clone(), base.h_a().clone()),
    };
    let unknowns = HomBasis::new(space.clone(), space.clone(), -1);
    let c = |f: &GradedMap, g: &GradedMap| compose_graded(f, g).expect("composable");
    // each block: (operator on τ, right-hand side)
    type Op<'a> = Box<dyn Fn(&GradedMap) -> GradedMap + 'a>;
    let mut blocks: Vec<(HomBasis, Op, GradedMap)> = Vec::new();
    let d2 = d.clone();
    blocks.push((HomBasis::new(space.clone(), space.clone(), 0), Box::new(move |t| graded_commutator(&d2, t).expect("same space")), GradedMap::zero(space.clone(), space.clone(), 0)));
    let keep = |n: &str| spec.keep.iter().any(|k| k == n);
    let (y, z) = (base.y().clone(), base.z().clone());
    let yz = c(&y, &z);
    let zy = c(&z, &y);
    let neg = |m: GradedMap| m.scale(&q(-1));
    match spec.side {
        Side::B => {
            if keep("SC_left") {
                let y2 = y.clone();
                blocks.push((HomBasis::new(base.a().clone(), space.clone(), -1), Box::new(move |t| c(t, &y2)), neg(c(&h, &y))));
            }
            if keep("SC_right") {
                let z2 = z.clone();
                blocks.push((HomBasis::new(space.clone(), base.a().clone(), -1), Box::new(move |t| c(&z2, t)), neg(c(&z, &h))));
            }
            if keep("WSC") {
                let (p1, p2) = (yz.clone(), yz.clone());
                blocks.push((HomBasis::new(space.clone(), space.clone(), -1), Box::new(move |t| c(&p1, t)), neg(c(&yz, &h))));
                blocks.push((HomBasis::new(space.clone(), space.clone(), -1), Box::new(move |t| c(t, &p2)), neg(c(&h, &yz))));
            }
        }
        Side::A => {
            if keep("SC_left_A") {
                let z2 = z.clone();
                blocks.push((HomBasis::new(base.b().clone(), space.clone(), -1), Box::new(move |t| c(t, &z2)), neg(c(&h, &z))));
            }
            if keep("SC_right_A") {
                let y2 = y.clone();
                blocks.push((HomBasis::new(space.clone(), base.b().clone(), -1), Box::new(move |t| c(&y2, t)), neg(c(&y, &h))));
            }
            let _ = zy;
        }
    }
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    let mut rhs: Vec<Scalar> = Vec::new();
    for (out, op, r) in &blocks {
        let m = unknowns.operator_matrix(out, |t| op(t));
        for i in 0..m.rows() {
            rows.push(m.row(i).to_vec());
        }
        rhs.extend(out.coords(r));
    }
    let m = if rows.is_empty() { Matrix::zeros(0, unknowns.len()) } else { Matrix::from_rows(rows) };
    let particular = m.solve(&rhs).ok_or(InstanceError::EmptyPerturbationSpace)?;
    let kernel = m.kernel();
    if kernel.is_empty() && particular.iter().all(|x| x.is_zero()) {
        return Err(InstanceError::EmptyPerturbationSpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..256 {
        let mut x = particular.clone();
        for kv in &kernel {
            let c: i64 = rng.gen_range(-2..=2);
            if c != 0 {
                for (xi, ki) in x.iter_mut().zip(kv) {
                    *xi += ki * q(c);
                }
            }
        }
        if x.iter().all(|v| v.is_zero()) {
            continue;
        }
        let tau = unknowns.map(&x);
        let note = format!("perturbed by closed τ (seed {}, keep {:?}, break {:?}, side {:?})", spec.seed, spec.keep, spec.brk, spec.side);
        let mut parts = base.parts();
        match spec.side {
            Side::B => parts.h_b = parts.h_b.add(&tau)?,
            Side::A => parts.h_a = parts.h_a.add(&tau)?,
        }
        parts.provenance.notes.push(note);
        parts.provenance.params.push(("seed".into(), spec.seed.to_string()));
        let cand = HomotopyData::unchecked(parts)?;
        let f = cand.flags();
        if spec.keep.iter().all(|k| f.get(k)) && spec.brk.iter().all(|k| !f.get(k)) {
            cand.validate()?;
            return Ok(cand);
        }
    }
    Err(InstanceError::PerturbationExhausted)
}

/// Replaces `Y` by the homotopic bimodule map `Y + [d, σ]` for a degree −1
/// `σ: A → B` with `[d, σ]` an `Im Z`-bimodule map, sampled from `seed`, and
/// adjusts `h_A ↦ h_A − Z∘σ`, `h_B ↦ h_B − σ∘Z`. Samples are rejected until
/// `Z∘Y∘Z ≠ Z`, and, with `projector`, until `Y∘Z` is idempotent.
pub fn gen_twisted(base: &HomotopyData, seed: u64, projector: bool) -> Result<HomotopyData, InstanceError> {
    let (a, b) = (base.a().clone(), base.b().clone());
    let unknowns = HomBasis::new(a.clone(), b.clone(), -1);
    let c = |f: &GradedMap, g: &GradedMap| compose_graded(f, g).expect("composable");
    let bracket = |s: &GradedMap| c(base.d_b(), s).add(&c(s, base.d_a())).expect("same shape");
    let na = a.total_dim();
    let nb = b.total_dim();
    let imz = base.imz().vectors.clone();
    let constraint = |g: &GradedMap| -> Result<Vec<Scalar>, InstanceError> {
        let mut out = Vec::new();
        let mut push = |v: SparseVec| {
            let mut row = vec![Scalar::zero(); nb];
            for (i, x) in v {
                row[i] = x;
            }
            out.extend(row);
        };
        for u in &imz {
            for j in 0..na {
                let mut l = g.apply(&base.wedge_vec(u, &unit(j)));
                crate::exactlin::sv_add_scaled(&mut l, &base.lact_vec(u, &g.apply(&unit(j)))?, &q(-1));
                push(l);
                let mut r = g.apply(&base.wedge_vec(&unit(j), u));
                crate::exactlin::sv_add_scaled(&mut r, &base.ract_vec(&g.apply(&unit(j)), u)?, &q(-1));
                push(r);
            }
        }
        Ok(out)
    };
    let cols = (0..unknowns.len()).map(|k| constraint(&bracket(&unknowns.unit(k)))).collect::<Result<Vec<_>, _>>()?;
    let rows = cols.first().map_or(0, |v| v.len());
    let kernel = Matrix::from_columns(rows, &cols).kernel();
    if kernel.is_empty() {
        return Err(InstanceError::EmptyPerturbationSpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2048 {
        let mut x = vec![Scalar::zero(); unknowns.len()];
        for kv in &kernel {
            let k: i64 = rng.gen_range(-2..=2);
            for (xi, ki) in x.iter_mut().zip(kv) {
                *xi += ki * q(k);
            }
        }
        let sigma = unknowns.map(&x);
        let y = base.y().add(&bracket(&sigma))?;
        let zyz = c(&c(base.z(), &y), base.z());
        if zyz == *base.z() {
            continue;
        }
        if projector {
            let yz = c(&y, base.z());
            if c(&yz, &yz) != yz {
                continue;
            }
        }
        let mut parts = base.parts();
        parts.h_a = parts.h_a.sub(&c(base.z(), &sigma))?;
        parts.h_b = parts.h_b.sub(&c(&sigma, base.z()))?;
        parts.y = y;
        parts.provenance.notes.push(format!("Y twisted by [d, σ] (seed {seed})"));
        parts.provenance.params.push(("twist_seed".into(), seed.to_string()));
        return Ok(HomotopyData::new(parts)?);
    }
    Err(InstanceError::PerturbationExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_parses() {
        for s in ["exterior:1", "exterior:2", "dual", "trunc:2", "odd:1", "odd-ideal:1"] {
            let d = catalogue(s).unwrap();
            assert!(compose_graded(&d.d, &d.d).unwrap().is_zero(), "{s}");
        }
        assert!(catalogue("exterior:9").is_err());
        assert!(catalogue("bogus").is_err());
    }

    #[test]
    fn interval_dims() {
        let inst = gen_interval(&exterior(1).unwrap()).unwrap();
        assert_eq!(inst.b().dims(), vec![2, 3, 1]);
        let f = inst.flags();
        for c in ["SC_left", "SC_right", "SC_sq", "ZYZ", "YZY"] {
            assert!(f.get(c), "{c}");
        }
    }

    #[test]
    fn grassmann_small() {
        let inst = gen_grassmann_super(1, 1).unwrap();
        assert_eq!(inst.a().dims(), vec![2, 2, 1]);
        assert_eq!(inst.b().dims(), vec![1, 2, 2]);
        for c in crate::homotopydata::CONDITION_NAMES {
            assert!(inst.flags().get(c), "{c}");
        }
        assert!(inst.provenance().notes[0].contains("normalized contraction"));
    }
}

//! Formal sums of decorated planar trees and their evaluation.
//!
//! A tree is read literally on basis tuples: leaves are the inputs, unary
//! nodes apply one of the instance maps, binary nodes apply ∧, ▷ or ◁, and no
//! implicit Koszul sign is inserted anywhere. Instead every tree carries a
//! sign mask, a set of slots `S`, and contributes `(-1)^{Σ_{s∈S} |b_s|}` times
//! its literal value. Grafting keeps the mask up to date so that sums built by
//! composition evaluate to the Koszul-signed operadic composites.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactlin::{fmt_scalar, parity_sign, sv_scale, GradedMap, Scalar, SparseVec};
use crate::homotopydata::{unit, HomotopyData};
use crate::multimap::MultiMap;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("type check failure: {0}")]
    TypeCheckFailure(String),
    #[error("tree {0} has more than one free slot")]
    MultipleFreeSlots(String),
    #[error("empty expression has no well-defined arity")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unary {
    DA,
    DB,
    Y,
    Z,
    HA,
    HB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binary {
    Wedge,
    Lact,
    Ract,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    A,
    B,
}

impl Unary {
    fn name(self) -> &'static str {
        match self {
            Unary::DA => "dA",
            Unary::DB => "dB",
            Unary::Y => "Y",
            Unary::Z => "Z",
            Unary::HA => "hA",
            Unary::HB => "hB",
        }
    }

    pub fn degree(self) -> i32 {
        match self {
            Unary::DA | Unary::DB => 1,
            Unary::HA | Unary::HB => -1,
            Unary::Y | Unary::Z => 0,
        }
    }

    fn spaces(self) -> (Space, Space) {
        match self {
            Unary::DA | Unary::HA => (Space::A, Space::A),
            Unary::DB | Unary::HB => (Space::B, Space::B),
            Unary::Y => (Space::A, Space::B),
            Unary::Z => (Space::B, Space::A),
        }
    }
}

impl Binary {
    fn name(self) -> &'static str {
        match self {
            Binary::Wedge => "wedge",
            Binary::Lact => "lact",
            Binary::Ract => "ract",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    /// Input slot, numbered from 1.
    Leaf(usize),
    Unary(Unary, Box<Node>),
    Binary(Binary, Box<Node>, Box<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf(i) => write!(f, "{i}"),
            Node::Unary(u, c) => write!(f, "{}({c})", u.name()),
            Node::Binary(b, l, r) => write!(f, "{}({l}, {r})", b.name()),
        }
    }
}

impl Node {
    pub fn leaf(i: usize) -> Node {
        Node::Leaf(i)
    }

    pub fn un(u: Unary, c: Node) -> Node {
        Node::Unary(u, Box::new(c))
    }

    pub fn bin(b: Binary, l: Node, r: Node) -> Node {
        Node::Binary(b, Box::new(l), Box::new(r))
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            Node::Leaf(i) => out.push(*i),
            Node::Unary(_, c) => c.leaves(out),
            Node::Binary(_, l, r) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }

    pub fn degree(&self) -> i32 {
        match self {
            Node::Leaf(_) => 0,
            Node::Unary(u, c) => u.degree() + c.degree(),
            Node::Binary(_, l, r) => l.degree() + r.degree(),
        }
    }

    fn from_z(&self) -> bool {
        match self {
            Node::Unary(Unary::Z, _) => true,
            Node::Unary(Unary::DA, c) => c.from_z(),
            Node::Binary(Binary::Wedge, l, r) => l.from_z() && r.from_z(),
            _ => false,
        }
    }

    pub fn typecheck(&self) -> Result<Space, ExprError> {
        let err = |m: String| Err(ExprError::TypeCheckFailure(m));
        match self {
            Node::Leaf(_) => Ok(Space::B),
            Node::Unary(u, c) => {
                let (input, output) = u.spaces();
                let cs = c.typecheck()?;
                if cs != input {
                    return err(format!("{} applied to {cs:?}-valued {c}", u.name()));
                }
                Ok(output)
            }
            Node::Binary(b, l, r) => {
                let (ls, rs) = (l.typecheck()?, r.typecheck()?);
                match b {
                    Binary::Wedge if ls == Space::A && rs == Space::A => Ok(Space::A),
                    Binary::Lact if ls == Space::A && rs == Space::B && l.from_z() => Ok(Space::B),
                    Binary::Ract if ls == Space::B && rs == Space::A && r.from_z() => Ok(Space::B),
                    _ => err(format!("{} on ({ls:?}, {rs:?}) in {self}", b.name())),
                }
            }
        }
    }

    fn shift(&self, by: usize) -> Node {
        match self {
            Node::Leaf(i) => Node::Leaf(i + by),
            Node::Unary(u, c) => Node::un(*u, c.shift(by)),
            Node::Binary(b, l, r) => Node::bin(*b, l.shift(by), r.shift(by)),
        }
    }

    /// Replaces leaf `s` by `g` (leaves of `g` start at `s`) and shifts later leaves by `k − 1`.
    fn graft(&self, s: usize, g: &Node, k: usize) -> Node {
        match self {
            Node::Leaf(i) if *i == s => g.shift(s - 1),
            Node::Leaf(i) if *i > s => Node::Leaf(i + k - 1),
            Node::Leaf(i) => Node::Leaf(*i),
            Node::Unary(u, c) => Node::un(*u, c.graft(s, g, k)),
            Node::Binary(b, l, r) => Node::bin(*b, l.graft(s, g, k), r.graft(s, g, k)),
        }
    }

    fn slot_kinds(&self, parent: Option<Unary>, under_z: bool, out: &mut BTreeMap<usize, SlotKind>) {
        match self {
            Node::Leaf(i) => {
                let kind = match parent {
                    Some(Unary::Z) => SlotKind::Z,
                    Some(Unary::HB) => SlotKind::HB,
                    Some(_) => SlotKind::Other,
                    None if under_z => SlotKind::Other,
                    None => SlotKind::Free,
                };
                out.insert(*i, kind);
            }
            Node::Unary(u, c) => c.slot_kinds(Some(*u), under_z || *u == Unary::Z, out),
            Node::Binary(_, l, r) => {
                l.slot_kinds(None, under_z, out);
                r.slot_kinds(None, under_z, out);
            }
        }
    }

    /// Leaves renumbered from 1, with the original first leaf index.
    fn normalized(&self) -> (Node, usize) {
        let mut ls = Vec::new();
        self.leaves(&mut ls);
        let first = *ls.iter().min().expect("trees have leaves");
        (self.unshift(first - 1), first)
    }

    fn unshift(&self, by: usize) -> Node {
        match self {
            Node::Leaf(i) => Node::Leaf(i - by),
            Node::Unary(u, c) => Node::un(*u, c.unshift(by)),
            Node::Binary(b, l, r) => Node::bin(*b, l.unshift(by), r.unshift(by)),
        }
    }
}

/// How the edge above a leaf is decorated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    /// Directly under `Z`.
    Z,
    /// Directly under `h_B`.
    HB,
    /// No decoration and no `Z` further up.
    Free,
    /// Anything else (e.g. under a binary node inside `Z`, or under `h_A`).
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExprTree {
    pub root: Node,
    pub arity: usize,
    /// Bit `s − 1` set means the factor `(-1)^{|b_s|}`.
    pub sign_slots: u64,
}

impl ExprTree {
    pub fn new(root: Node, sign_slots: &[usize]) -> Result<Self, ExprError> {
        root.typecheck()?;
        let mut ls = Vec::new();
        root.leaves(&mut ls);
        let arity = ls.len();
        if ls != (1..=arity).collect::<Vec<_>>() {
            return Err(ExprError::TypeCheckFailure(format!("leaves of {root} are not 1..{arity} left to right")));
        }
        let mut mask = 0u64;
        for &s in sign_slots {
            if s == 0 || s > arity {
                return Err(ExprError::TypeCheckFailure(format!("sign slot {s} out of range")));
            }
            mask ^= 1 << (s - 1);
        }
        Ok(ExprTree { root, arity, sign_slots: mask })
    }

    pub fn degree(&self) -> i32 {
        self.root.degree()
    }

    pub fn space(&self) -> Space {
        self.root.typecheck().expect("trees are checked on construction")
    }

    pub fn slot_kinds(&self) -> Vec<SlotKind> {
        let mut m = BTreeMap::new();
        self.root.slot_kinds(None, false, &mut m);
        m.into_values().collect()
    }

    /// Slots (1-based) whose leaf carries no decoration and no `Z` above it.
    pub fn free_slots(&self) -> Vec<usize> {
        self.slots_of(SlotKind::Free)
    }

    pub fn slots_of(&self, kind: SlotKind) -> Vec<usize> {
        self.slot_kinds().iter().enumerate().filter(|(_, k)| **k == kind).map(|(i, _)| i + 1).collect()
    }

    /// Literal graft of `g` into slot `s`, with the sign of moving `g`'s degree
    /// through the mask; Koszul and operadic prefactors are left to callers.
    fn graft(&self, s: usize, g: &ExprTree) -> (bool, ExprTree) {
        let k = g.arity;
        let root = self.root.graft(s, &g.root, k);
        let mut mask = 0u64;
        let mut negate = false;
        for slot in 1..=self.arity {
            if self.sign_slots & (1 << (slot - 1)) == 0 {
                continue;
            }
            if slot < s {
                mask ^= 1 << (slot - 1);
            } else if slot > s {
                mask ^= 1 << (slot + k - 2);
            } else {
                negate ^= g.degree().rem_euclid(2) == 1;
                for t in 0..k {
                    mask ^= 1 << (s - 1 + t);
                }
            }
        }
        mask ^= g.sign_slots << (s - 1);
        (negate, ExprTree { root, arity: self.arity + k - 1, sign_slots: mask })
    }

    /// Graft with the Koszul sign `(-1)^{|g|·(|b_1|+…+|b_{s−1}|)}` added to the mask.
    fn insert(&self, s: usize, g: &ExprTree) -> (bool, ExprTree) {
        let (neg, mut t) = self.graft(s, g);
        if g.degree().rem_euclid(2) == 1 {
            for l in 1..s {
                t.sign_slots ^= 1 << (l - 1);
            }
        }
        (neg, t)
    }

    fn key(&self) -> String {
        format!("{}#{}", self.root, self.mask_string())
    }

    fn mask_string(&self) -> String {
        (1..=self.arity).filter(|s| self.sign_slots & (1 << (s - 1)) != 0).map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign_slots == 0 {
            write!(f, "{}", self.root)
        } else {
            write!(f, "s[{}]*{}", self.mask_string(), self.root)
        }
    }
}

/// Rational combination of trees of one arity, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExprSum {
    terms: Vec<(Scalar, ExprTree)>,
}

impl ExprSum {
    pub fn zero() -> Self {
        ExprSum { terms: vec![] }
    }

    pub fn from_terms(terms: Vec<(Scalar, ExprTree)>) -> Self {
        ExprSum { terms }.normalize()
    }

    pub fn terms(&self) -> &[(Scalar, ExprTree)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn arity(&self) -> Option<usize> {
        self.terms.first().map(|(_, t)| t.arity)
    }

    pub fn degree(&self) -> Option<i32> {
        self.terms.first().map(|(_, t)| t.degree())
    }

    /// Merges equal trees, drops zero coefficients and sorts by the tree key.
    pub fn normalize(self) -> Self {
        let mut map: BTreeMap<String, (Scalar, ExprTree)> = BTreeMap::new();
        for (c, t) in self.terms {
            let e = map.entry(t.key()).or_insert_with(|| (Scalar::zero(), t));
            e.0 += c;
        }
        ExprSum { terms: map.into_values().filter(|(c, _)| !c.is_zero()).collect() }
    }

    pub fn add(&self, other: &ExprSum) -> ExprSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ExprSum { terms }.normalize()
    }

    pub fn scale(&self, c: &Scalar) -> ExprSum {
        ExprSum { terms: self.terms.iter().map(|(x, t)| (x * c, t.clone())).collect() }.normalize()
    }
}

impl fmt::Display for ExprSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (c, t)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}", fmt_scalar(c), t)?;
        }
        Ok(())
    }
}

fn hb_tree() -> ExprTree {
    ExprTree { root: Node::un(Unary::HB, Node::Leaf(1)), arity: 1, sign_slots: 0 }
}

/// Inserts `h_B` into the unique free slot of every tree, dropping trees
/// without one.
pub fn compose_fb(e: &ExprSum) -> Result<ExprSum, ExprError> {
    let hb = hb_tree();
    let mut terms = Vec::new();
    for (c, t) in &e.terms {
        let free = t.free_slots();
        match free.len() {
            0 => {}
            1 => {
                let (neg, nt) = t.insert(free[0], &hb);
                terms.push((if neg { -c.clone() } else { c.clone() }, nt));
            }
            _ => return Err(ExprError::MultipleFreeSlots(t.to_string())),
        }
    }
    Ok(ExprSum { terms }.normalize())
}

/// Inserts `h_B` into every slot (Koszul-signed), the symbolic counterpart of
/// all-slot insertion.
pub fn insert_hb_all_slots(e: &ExprSum) -> ExprSum {
    let hb = hb_tree();
    let mut terms = Vec::new();
    for (c, t) in &e.terms {
        for s in 1..=t.arity {
            let (neg, nt) = t.insert(s, &hb);
            terms.push((if neg { -c.clone() } else { c.clone() }, nt));
        }
    }
    ExprSum { terms }.normalize()
}

fn compose_into(e: &ExprSum, g: &ExprSum, select: impl Fn(&ExprTree) -> Vec<usize>) -> ExprSum {
    let mut terms = Vec::new();
    for (ce, te) in &e.terms {
        let i = te.arity as i64;
        for s in select(te) {
            let j = s as i64 - 1;
            for (cg, tg) in &g.terms {
                let k = tg.arity as i64;
                let (neg, nt) = te.insert(s, tg);
                let mut c = ce * cg * parity_sign(j + i + k * (i - j - 1));
                if neg {
                    c = -c;
                }
                terms.push((c, nt));
            }
        }
    }
    ExprSum { terms }.normalize()
}

/// Full operadic composite `e ∘ g`, with the prefactor `(-1)^{j+i+k(i−j−1)}`.
pub fn compose_full(e: &ExprSum, g: &ExprSum) -> ExprSum {
    compose_into(e, g, |t| (1..=t.arity).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotDecoration {
    Z,
    HB,
}

/// Result of a restricted composition; `free_slot_fallback` records that an
/// `h_B`-composition found no `h_B` slot in some tree and used its free slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotComposition {
    pub sum: ExprSum,
    pub free_slot_fallback: bool,
}

/// `e ∘_Z g` or `e ∘_{h_B} g`: composition restricted to slots directly under
/// the given decoration. For `h_B`, a tree with no such slot but a free slot
/// (the binary product) is composed into its free slot instead.
pub fn compose_slot(e: &ExprSum, kind: SlotDecoration, g: &ExprSum) -> SlotComposition {
    let fallback = std::cell::Cell::new(false);
    let sum = compose_into(e, g, |t| match kind {
        SlotDecoration::Z => t.slots_of(SlotKind::Z),
        SlotDecoration::HB => {
            let hb = t.slots_of(SlotKind::HB);
            if hb.is_empty() {
                let free = t.free_slots();
                if !free.is_empty() {
                    fallback.set(true);
                }
                free
            } else {
                hb
            }
        }
    });
    SlotComposition { sum, free_slot_fallback: fallback.get() }
}

type Lit = Arc<BTreeMap<Vec<usize>, SparseVec>>;

struct Evaluator<'a> {
    inst: &'a HomotopyData,
    cols: HashMap<Unary, Vec<SparseVec>>,
    cache: HashMap<Node, Lit>,
}

impl<'a> Evaluator<'a> {
    fn new(inst: &'a HomotopyData) -> Self {
        let maps: [(Unary, &GradedMap); 6] = [
            (Unary::DA, inst.d_a()),
            (Unary::DB, inst.d_b()),
            (Unary::Y, inst.y()),
            (Unary::Z, inst.z()),
            (Unary::HA, inst.h_a()),
            (Unary::HB, inst.h_b()),
        ];
        let cols = maps.iter().map(|(u, m)| (*u, m.columns())).collect();
        Evaluator { inst, cols, cache: HashMap::new() }
    }

    /// Literal values of a subtree whose leaves are numbered from 1.
    fn lit(&mut self, node: &Node) -> Result<Lit, ExprError> {
        if let Some(v) = self.cache.get(node) {
            return Ok(v.clone());
        }
        let out: BTreeMap<Vec<usize>, SparseVec> = match node {
            Node::Leaf(_) => (0..self.inst.b().total_dim()).map(|j| (vec![j], unit(j))).collect(),
            Node::Unary(u, c) => {
                let inner = self.lit(c)?;
                let cols = &self.cols[u];
                let mut out = BTreeMap::new();
                for (t, v) in inner.iter() {
                    let mut acc = SparseVec::new();
                    for (i, x) in v {
                        crate::exactlin::sv_add_scaled(&mut acc, &cols[*i], x);
                    }
                    if !acc.is_empty() {
                        out.insert(t.clone(), acc);
                    }
                }
                out
            }
            Node::Binary(b, l, r) => {
                let (ln, _) = l.normalized();
                let (rn, _) = r.normalized();
                let lv = self.lit(&ln)?;
                let rv = self.lit(&rn)?;
                let mut out = BTreeMap::new();
                for (a, u) in lv.iter() {
                    let coords = match b {
                        Binary::Lact => Some(self.inst.imz().coords(u).ok_or_else(|| {
                            ExprError::TypeCheckFailure(format!("left operand of {node} leaves Im Z"))
                        })?),
                        _ => None,
                    };
                    for (bt, w) in rv.iter() {
                        let val = match b {
                            Binary::Wedge => self.inst.wedge_vec(u, w),
                            Binary::Lact => self.inst.lact_coords(coords.as_ref().expect("computed above"), w),
                            Binary::Ract => {
                                let c = self.inst.imz().coords(w).ok_or_else(|| {
                                    ExprError::TypeCheckFailure(format!("right operand of {node} leaves Im Z"))
                                })?;
                                self.inst.ract_coords(u, &c)
                            }
                        };
                        if !val.is_empty() {
                            let mut key = a.clone();
                            key.extend_from_slice(bt);
                            out.insert(key, val);
                        }
                    }
                }
                out
            }
        };
        let out = Arc::new(out);
        self.cache.insert(node.clone(), out.clone());
        Ok(out)
    }
}

/// Evaluates a sum on an instance. The result acts on `B`; its target is `B`
/// or `A` according to the root space.
pub fn evaluate(e: &ExprSum, inst: &HomotopyData) -> Result<MultiMap, ExprError> {
    let (arity, degree) = match e.terms.first() {
        Some((_, t)) => (t.arity, t.degree()),
        None => return Err(ExprError::Empty),
    };
    evaluate_as(e, inst, arity, degree)
}

/// As [`evaluate`] but with an explicit shape, so that empty sums give the zero map.
pub fn evaluate_as(e: &ExprSum, inst: &HomotopyData, arity: usize, degree: i32) -> Result<MultiMap, ExprError> {
    let target_space = e.terms.first().map(|(_, t)| t.space()).unwrap_or(Space::B);
    let target = match target_space {
        Space::A => inst.a().clone(),
        Space::B => inst.b().clone(),
    };
    let mut out = MultiMap::zero(arity, degree, inst.b().clone(), target);
    let mut ev = Evaluator::new(inst);
    let b = inst.b();
    for (c, t) in &e.terms {
        if t.arity != arity || t.degree() != degree || t.space() != target_space {
            return Err(ExprError::TypeCheckFailure(format!("term {t} does not match the sum's shape")));
        }
        let lit = ev.lit(&t.root)?;
        let mut part = MultiMap::zero(arity, degree, b.clone(), out.target().clone());
        for (tuple, v) in lit.iter() {
            let mut p = 0i64;
            for (s, &i) in tuple.iter().enumerate() {
                if t.sign_slots & (1 << s) != 0 {
                    p += b.degree_of(i) as i64;
                }
            }
            let coef = if p.rem_euclid(2) == 1 { -c.clone() } else { c.clone() };
            part.add_to(tuple.clone(), &sv_scale(v, &coef), &Scalar::one());
        }
        out.add_assign_scaled(&part, &Scalar::one());
    }
    Ok(out)
}

/// Small constructors for writing product formulas.
pub mod build {
    use super::*;

    pub fn b(i: usize) -> Node {
        Node::Leaf(i)
    }
    pub fn z(n: Node) -> Node {
        Node::un(Unary::Z, n)
    }
    pub fn y(n: Node) -> Node {
        Node::un(Unary::Y, n)
    }
    pub fn hb(n: Node) -> Node {
        Node::un(Unary::HB, n)
    }
    pub fn ha(n: Node) -> Node {
        Node::un(Unary::HA, n)
    }
    pub fn zb(i: usize) -> Node {
        z(b(i))
    }
    pub fn zhb(i: usize) -> Node {
        z(hb(b(i)))
    }
    pub fn w(l: Node, r: Node) -> Node {
        Node::bin(Binary::Wedge, l, r)
    }
    /// Left-nested wedge of several factors.
    pub fn wn(fs: Vec<Node>) -> Node {
        let mut it = fs.into_iter();
        let first = it.next().expect("at least one factor");
        it.fold(first, w)
    }
    pub fn la(l: Node, r: Node) -> Node {
        Node::bin(Binary::Lact, l, r)
    }
    pub fn ra(l: Node, r: Node) -> Node {
        Node::bin(Binary::Ract, l, r)
    }
    pub fn term(c: Scalar, signs: &[usize], root: Node) -> (Scalar, ExprTree) {
        (c, ExprTree::new(root, signs).expect("well-typed formula"))
    }
}

//! A∞ towers on `B`: homotopy transfer and the two module-induced constructions.
//!
//! Products are stored in the sign convention of the defect relation
//! `Σ (-1)^{r+st} m_{r+t+1}(1^r ⊗ m_s ⊗ 1^t) = 0`. Expressions, and everything
//! named after a closed formula, use the convention `∂m_n = Σ_{i} (-1)^i m_i ∘ m_{n-i+1}`
//! in which the formulas are written. The two differ by `(-1)^n` on `m_n`.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactlin::{parity_sign, GradedMap, LinError, Scalar};
use crate::exprcalc::{
    build::*, compose_fb, compose_full, compose_slot, evaluate_as, ExprError, ExprSum, SlotDecoration,
};
use crate::homotopydata::HomotopyData;
use crate::multimap::{a_infinity_defect, insert_homotopy_all_slots, op_compose, MultiError, MultiMap};

pub const DEFAULT_ARITY: usize = 6;
pub const MAX_ARITY: usize = 8;

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("A-infinity relation fails at arity {n} on input {tuple:?}")]
    DefectNonzero { n: usize, tuple: Vec<usize> },
    #[error("arity {0} is outside 2..={MAX_ARITY}")]
    ArityOutOfRange(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Multi(#[from] MultiError),
    #[error(transparent)]
    Lin(#[from] LinError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Ht,
    HmiSc,
    HmiGeneral,
    Dga,
    Massey,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ht => "ht",
            Method::HmiSc => "hmi-sc",
            Method::HmiGeneral => "hmi-general",
            Method::Dga => "dga",
            Method::Massey => "massey",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        [Method::Ht, Method::HmiSc, Method::HmiGeneral, Method::Dga, Method::Massey].into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct AInftyTower {
    pub method: Method,
    pub k: Option<(Scalar, Scalar)>,
    /// `products[n-1] = m_n`, defect-relation convention.
    pub products: Vec<MultiMap>,
    /// `expressions[n-1]` in the formula convention, where built symbolically.
    pub expressions: Vec<Option<ExprSum>>,
    pub hypotheses: Vec<String>,
    pub notes: Vec<String>,
}

impl AInftyTower {
    pub fn max_arity(&self) -> usize {
        self.products.len()
    }

    pub fn product(&self, n: usize) -> &MultiMap {
        &self.products[n - 1]
    }

    /// `m_n` in the formula convention.
    pub fn formula_product(&self, n: usize) -> MultiMap {
        to_formula(self.product(n), n)
    }

    pub fn defect(&self, n: usize) -> Result<MultiMap, TowerError> {
        Ok(a_infinity_defect(&self.products, n)?)
    }

    /// Checks every relation up to the top arity.
    pub fn certify(&self) -> Result<(), TowerError> {
        for n in 1..=self.max_arity() {
            let d = self.defect(n)?;
            if let Some((tuple, _)) = d.first_nonzero() {
                return Err(TowerError::DefectNonzero { n, tuple });
            }
        }
        Ok(())
    }

    /// The dga `(A, d_A, ∧)` viewed as an A∞-algebra.
    pub fn from_dga(inst: &HomotopyData, n_max: usize) -> Result<Self, TowerError> {
        check_arity(n_max)?;
        let a = inst.a().clone();
        let mut products = vec![MultiMap::from_graded(inst.d_a()), inst.wedge().clone()];
        for n in 3..=n_max {
            products.push(MultiMap::zero(n, 2 - n as i32, a.clone(), a.clone()));
        }
        products.truncate(n_max);
        Ok(AInftyTower {
            method: Method::Dga,
            k: None,
            products,
            expressions: vec![None; n_max],
            hypotheses: vec![],
            notes: vec![],
        })
    }
}

fn check_arity(n: usize) -> Result<(), TowerError> {
    if !(2..=MAX_ARITY).contains(&n) {
        return Err(TowerError::ArityOutOfRange(n));
    }
    Ok(())
}

/// `(-1)^n m_n`: switches between the two sign conventions (an involution).
pub fn to_formula(m: &MultiMap, n: usize) -> MultiMap {
    m.scale(&parity_sign(n as i64))
}

pub fn to_defect_convention(m: &MultiMap, n: usize) -> MultiMap {
    m.scale(&parity_sign(n as i64))
}

fn kk(k1: &Scalar, k2: &Scalar) -> Scalar {
    k1 * k2
}

/// `k₁ Z(b)▷b′ + k₂ b◁Z(b′)`.
pub fn m2_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    ExprSum::from_terms(vec![term(k1.clone(), &[], la(zb(1), b(2))), term(k2.clone(), &[], ra(b(1), zb(2)))])
}

/// `k₁(-1)^{|b|} Z(b)▷h_B(b′) + k₂ h_B(b)◁Z(b′)`.
pub fn m2_tilde_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    ExprSum::from_terms(vec![
        term(k1.clone(), &[1], la(zb(1), hb(b(2)))),
        term(k2.clone(), &[], ra(hb(b(1)), zb(2))),
    ])
}

/// `Y(Z(b)∧Z(b′))`.
pub fn m2ht_expr() -> ExprSum {
    ExprSum::from_terms(vec![term(Scalar::one(), &[], y(w(zb(1), zb(2))))])
}

/// `−Y(h_A(Zb∧Zb′)∧Zb″) + (-1)^{|b|} Y(Zb∧h_A(Zb′∧Zb″))`.
pub fn m3ht_expr() -> ExprSum {
    ExprSum::from_terms(vec![
        term(-Scalar::one(), &[], y(w(ha(w(zb(1), zb(2))), zb(3)))),
        term(Scalar::one(), &[1], y(w(zb(1), ha(w(zb(2), zb(3)))))),
    ])
}

/// `k₁k₂(Zb∧Zb′)▷b″ − k₁k₂ b◁(Zb′∧Zb″)`.
pub fn associator_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let c = kk(k1, k2);
    ExprSum::from_terms(vec![term(c.clone(), &[], la(w(zb(1), zb(2)), b(3))), term(-c, &[], ra(b(1), w(zb(2), zb(3))))])
}

/// `k₁k₂(-1)^{|b|+|b′|}(Zb∧Zb′)▷h_B b″ − k₁k₂ h_B b◁(Zb′∧Zb″)`.
pub fn m3_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let c = kk(k1, k2);
    ExprSum::from_terms(vec![
        term(c.clone(), &[1, 2], la(w(zb(1), zb(2)), hb(b(3)))),
        term(-c, &[], ra(hb(b(1)), w(zb(2), zb(3)))),
    ])
}

/// The twelve-term pentagonator of `m₂` and `m₃`.
pub fn pentagonator_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let a = k1 * k2 * k2;
    let c = k1 * k1 * k2;
    ExprSum::from_terms(vec![
        term(a.clone(), &[1, 2], la(w(zb(1), zb(2)), ra(hb(b(3)), zb(4)))),
        term(-a.clone(), &[], ra(hb(b(1)), wn(vec![zb(2), zb(3), zb(4)]))),
        term(c.clone(), &[1, 2, 3], la(wn(vec![zb(1), zb(2), zb(3)]), hb(b(4)))),
        term(-c.clone(), &[1], la(zb(1), ra(hb(b(2)), w(zb(3), zb(4))))),
        term(c.clone(), &[1, 2], la(wn(vec![zb(1), zb(2), zhb(3)]), b(4))),
        term(-c.clone(), &[], la(wn(vec![zhb(1), zb(2), zb(3)]), b(4))),
        term(a.clone(), &[1, 2, 3], ra(b(1), wn(vec![zb(2), zb(3), zhb(4)]))),
        term(-a.clone(), &[1], ra(b(1), wn(vec![zhb(2), zb(3), zb(4)]))),
        term(c.clone(), &[], ra(hb(la(zb(1), b(2))), w(zb(3), zb(4)))),
        term(a.clone(), &[], ra(hb(ra(b(1), zb(2))), w(zb(3), zb(4)))),
        term(-c, &[1, 2], la(w(zb(1), zb(2)), hb(la(zb(3), b(4))))),
        term(-a, &[1, 2], la(w(zb(1), zb(2)), hb(ra(b(3), zb(4))))),
    ])
}

/// The eight-term `m₄` obtained from the pentagonator by dressing naked branches,
/// with Koszul signs for the dressing applied uniformly (equal to `−(Pen ∘_fb h_B)`).
pub fn m4_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let a = k1 * k2 * k2;
    let c = k1 * k1 * k2;
    ExprSum::from_terms(vec![
        term(-c.clone(), &[3], la(wn(vec![zb(1), zb(2), zhb(3)]), hb(b(4)))),
        term(c.clone(), &[1, 2, 3], la(wn(vec![zhb(1), zb(2), zb(3)]), hb(b(4)))),
        term(a.clone(), &[1, 2, 3], ra(hb(b(1)), wn(vec![zb(2), zb(3), zhb(4)]))),
        term(-a.clone(), &[1], ra(hb(b(1)), wn(vec![zhb(2), zb(3), zb(4)]))),
        term(-c.clone(), &[1], ra(hb(la(zb(1), hb(b(2)))), w(zb(3), zb(4)))),
        term(-a.clone(), &[], ra(hb(ra(hb(b(1)), zb(2))), w(zb(3), zb(4)))),
        term(c, &[3], la(w(zb(1), zb(2)), hb(la(zb(3), hb(b(4)))))),
        term(a, &[], la(w(zb(1), zb(2)), hb(ra(hb(b(3)), zb(4))))),
    ])
}

/// The four-term `m₄` left under the side conditions.
pub fn m4_sc_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let a = k1 * k2 * k2;
    let c = k1 * k1 * k2;
    ExprSum::from_terms(vec![
        term(-c.clone(), &[1], ra(hb(la(zb(1), hb(b(2)))), w(zb(3), zb(4)))),
        term(-a.clone(), &[], ra(hb(ra(hb(b(1)), zb(2))), w(zb(3), zb(4)))),
        term(c, &[3], la(w(zb(1), zb(2)), hb(la(zb(3), hb(b(4)))))),
        term(a, &[], la(w(zb(1), zb(2)), hb(ra(hb(b(3)), zb(4))))),
    ])
}

/// The six residual terms `𝔯_Y`, each carrying `k₁k₂(k₁+k₂)`, with the Koszul
/// sign of every `h_B` passing the inputs on its left.
pub fn residual_ry_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    let c = k1 * k2 * (k1 + k2);
    let yz = |l: usize, r: usize| hb(y(w(zb(l), zb(r))));
    ExprSum::from_terms(vec![
        term(-c.clone(), &[1, 2], y(wn(vec![zb(1), zb(2), zhb(3), zb(4)]))),
        term(c.clone(), &[], y(wn(vec![zhb(1), zb(2), zb(3), zb(4)]))),
        term(-c.clone(), &[1, 2, 3], y(wn(vec![zb(1), zb(2), zb(3), zhb(4)]))),
        term(c.clone(), &[1], y(wn(vec![zb(1), zhb(2), zb(3), zb(4)]))),
        term(-c.clone(), &[], ra(yz(1, 2), w(zb(3), zb(4)))),
        term(c, &[1, 2], la(w(zb(1), zb(2)), yz(3, 4))),
    ])
}

/// Closed form of `m₂ ∘ m₂ʰᵗ`.
pub fn m2_after_m2ht_expr(k1: &Scalar, k2: &Scalar) -> ExprSum {
    ExprSum::from_terms(vec![
        term(k1.clone(), &[], la(w(zb(1), zb(2)), b(3))),
        term(-k2.clone(), &[], ra(b(1), w(zb(2), zb(3)))),
        term(k2 - k1, &[], y(wn(vec![zb(1), zb(2), zb(3)]))),
    ])
}

pub fn evaluate_m2_after_m2ht(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<MultiMap, TowerError> {
    eval(&m2_after_m2ht_expr(k1, k2), inst, 3, 0)
}

fn eval(e: &ExprSum, inst: &HomotopyData, arity: usize, degree: i32) -> Result<MultiMap, TowerError> {
    Ok(evaluate_as(e, inst, arity, degree)?)
}

pub fn hmi_m2(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = m2_expr(k1, k2);
    Ok((eval(&e, inst, 2, 0)?, e))
}

pub fn hmi_m2_tilde(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = m2_tilde_expr(k1, k2);
    Ok((eval(&e, inst, 2, -1)?, e))
}

pub fn m2ht(inst: &HomotopyData) -> Result<MultiMap, TowerError> {
    eval(&m2ht_expr(), inst, 2, 0)
}

/// `m₂(m₂⊗1) − m₂(1⊗m₂)`.
pub fn associator(m2: &MultiMap) -> Result<MultiMap, TowerError> {
    if m2.arity() != 2 {
        return Err(TowerError::Multi(MultiError::ArityMismatch(format!("associator of arity {}", m2.arity()))));
    }
    Ok(m2.compose_at(0, m2)?.sub(&m2.compose_at(1, m2)?)?)
}

/// `m₂(m₃⊗1) + (-1)^{|b|} m₂(1⊗m₃) − m₃(m₂⊗1⊗1) + m₃(1⊗m₂⊗1) − m₃(1⊗1⊗m₂)`.
pub fn pentagonator(m2: &MultiMap, m3: &MultiMap) -> Result<MultiMap, TowerError> {
    let mut out = m2.compose_at(0, m3)?;
    out.add_assign_scaled(&m2.compose_at(1, m3)?, &Scalar::one());
    out.add_assign_scaled(&m3.compose_at(0, m2)?, &-Scalar::one());
    out.add_assign_scaled(&m3.compose_at(1, m2)?, &Scalar::one());
    out.add_assign_scaled(&m3.compose_at(2, m2)?, &-Scalar::one());
    Ok(out)
}

pub fn hmi_m3(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = m3_expr(k1, k2);
    Ok((eval(&e, inst, 3, -1)?, e))
}

pub fn hmi_pentagonator(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = pentagonator_expr(k1, k2);
    Ok((eval(&e, inst, 4, -1)?, e))
}

/// Eight-term `m₄`, or the four-term form when the instance satisfies SC.
pub fn hmi_m4(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = if inst.flags().sc() { m4_sc_expr(k1, k2) } else { m4_expr(k1, k2) };
    Ok((eval(&e, inst, 4, -2)?, e))
}

pub fn residual_ry(inst: &HomotopyData, k1: &Scalar, k2: &Scalar) -> Result<(MultiMap, ExprSum), TowerError> {
    let e = residual_ry_expr(k1, k2);
    Ok((eval(&e, inst, 4, -1)?, e))
}

/// `∂` on `Hom(B^{⊗n}, B)`.
pub fn del_b(inst: &HomotopyData, phi: &MultiMap) -> Result<MultiMap, TowerError> {
    Ok(crate::multimap::hom_differential(phi, inst.d_b(), inst.d_b())?)
}

fn assemble(
    inst: &HomotopyData,
    method: Method,
    k: Option<(Scalar, Scalar)>,
    formula: Vec<MultiMap>,
    expressions: Vec<Option<ExprSum>>,
    hypotheses: Vec<String>,
    notes: Vec<String>,
) -> Result<AInftyTower, TowerError> {
    let mut products = vec![MultiMap::from_graded(inst.d_b())];
    for (idx, m) in formula.iter().enumerate() {
        products.push(to_defect_convention(m, idx + 2));
    }
    let mut exprs = vec![None];
    exprs.extend(expressions);
    let tower = AInftyTower { method, k, products, expressions: exprs, hypotheses, notes };
    tower.certify()?;
    Ok(tower)
}

/// Module-induced tower under the side conditions:
/// `m_n = (m_{n-1} ∘ m₂) ∘_fb h_B`, evaluated from the symbolic recursion.
pub fn hmi_tower_sc(inst: &HomotopyData, k1: &Scalar, k2: &Scalar, n_max: usize) -> Result<AInftyTower, TowerError> {
    check_arity(n_max)?;
    let flags = inst.flags();
    for name in ["SC_left", "SC_right", "SC_sq"] {
        if !flags.get(name) {
            return Err(TowerError::PreconditionFailed(format!(
                "{name} is false; Theorem \"the Homotopy Module-Induction gives an\" requires the side conditions"
            )));
        }
    }
    let e2 = m2_expr(k1, k2);
    let mut exprs = vec![e2.clone()];
    for _ in 3..=n_max {
        let prev = exprs.last().expect("m2 present");
        exprs.push(compose_fb(&compose_full(prev, &e2))?);
    }
    let formula = exprs
        .iter()
        .enumerate()
        .map(|(i, e)| eval(e, inst, i + 2, -(i as i32)))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(
        inst,
        Method::HmiSc,
        Some((k1.clone(), k2.clone())),
        formula,
        exprs.into_iter().map(Some).collect(),
        vec!["SC".into()],
        vec![],
    )
}

/// Direct tensor recursion `m_n = (m_{n-1} ∘ m₂) ∘ h_B` with all-slot insertion,
/// formula convention, `result[n-2] = m_n`.
pub fn sc_recursion_numeric(inst: &HomotopyData, k1: &Scalar, k2: &Scalar, n_max: usize) -> Result<Vec<MultiMap>, TowerError> {
    let (m2, _) = hmi_m2(inst, k1, k2)?;
    let mut out = vec![m2.clone()];
    for _ in 3..=n_max {
        let prev = out.last().expect("m2 present");
        out.push(insert_homotopy_all_slots(&op_compose(prev, &m2)?, inst.h_b())?);
    }
    Ok(out)
}

/// Expressions of the general module-induced tower:
/// `m_n = m̃₂ ∘_Z m_{n-1} + m_{n-1} ∘_{h_B} m̃₂`, returned with a flag recording
/// whether `∘_{h_B}` fell back to the free slot of `m₂`.
pub fn general_expressions(k1: &Scalar, k2: &Scalar, n_max: usize) -> (Vec<ExprSum>, bool) {
    let e2 = m2_expr(k1, k2);
    let et = m2_tilde_expr(k1, k2);
    let mut exprs = vec![e2];
    let mut fallback = false;
    for _ in 3..=n_max {
        let prev = exprs.last().expect("m2 present");
        let left = compose_slot(&et, SlotDecoration::Z, prev);
        let right = compose_slot(prev, SlotDecoration::HB, &et);
        fallback |= left.free_slot_fallback || right.free_slot_fallback;
        exprs.push(left.sum.add(&right.sum));
    }
    (exprs, fallback)
}

/// Module-induced tower under WSC or `k₁ = −k₂`.
pub fn hmi_tower_general(inst: &HomotopyData, k1: &Scalar, k2: &Scalar, n_max: usize) -> Result<AInftyTower, TowerError> {
    check_arity(n_max)?;
    let wsc = inst.flags().wsc();
    let opposite = (k1 + k2).is_zero();
    let mut hypotheses = vec![];
    if wsc {
        hypotheses.push("WSC".to_string());
    }
    if opposite {
        hypotheses.push("k1 = -k2".to_string());
    }
    if hypotheses.is_empty() {
        return Err(TowerError::PreconditionFailed(
            "WSC is false and k1 != -k2; Theorem \"Homotopy Module-Induced A∞-Algebra\" requires one of them".into(),
        ));
    }
    let (exprs, fallback) = general_expressions(k1, k2, n_max);
    let mut notes = vec![];
    if fallback {
        notes.push("composition along h_B into m2 used its free slot".to_string());
    }
    let formula = exprs
        .iter()
        .enumerate()
        .map(|(i, e)| eval(e, inst, i + 2, -(i as i32)))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(
        inst,
        Method::HmiGeneral,
        Some((k1.clone(), k2.clone())),
        formula,
        exprs.into_iter().map(Some).collect(),
        hypotheses,
        notes,
    )
}

/// Sign of the homotopy on internal edges of the transfer trees.
const TRANSFER_SIGN: i64 = -1;

/// Parity of the suspension sign `Σ_j (n−j)|a_j|`.
fn suspension_parity(degs: &[i32]) -> bool {
    let n = degs.len();
    degs.iter().enumerate().map(|(j, d)| (n - 1 - j) as i64 * *d as i64).sum::<i64>().rem_euclid(2) == 1
}

fn for_each_composition(m: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(rest: usize, k: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == 1 {
            acc.push(rest);
            f(acc);
            acc.pop();
            return;
        }
        for first in 1..=rest - (k - 1) {
            acc.push(first);
            rec(rest - first, k - 1, acc, f);
            acc.pop();
        }
    }
    if k <= m {
        rec(m, k, &mut Vec::new(), f);
    }
}

/// Transfers an A∞-structure on `S` (defect convention, `source[0] = m₁`)
/// along `i: T → S`, `p: S → T`, `h: S → S` with `1 − i p = d h + h d`.
/// Works in the suspended grading, where every tree factor has degree zero.
/// Returns `m₂ … m_{n_max}` on `T` in the defect convention.
pub fn transfer(source: &[MultiMap], i: &GradedMap, p: &GradedMap, h: &GradedMap, n_max: usize) -> Result<Vec<MultiMap>, TowerError> {
    let bar: Vec<MultiMap> = source.iter().map(|m| m.twist(suspension_parity)).collect();
    let sigma = parity_sign(if TRANSFER_SIGN < 0 { 1 } else { 0 });
    let mut trees: Vec<MultiMap> = vec![MultiMap::from_graded(i)];
    let mut out = Vec::new();
    for m in 2..=n_max {
        let mut q = MultiMap::zero(m, 2 - m as i32, i.source().clone(), i.target().clone());
        for k in 2..=m.min(bar.len()) {
            let bk = &bar[k - 1];
            if bk.is_zero() {
                continue;
            }
            let mut err = None;
            for_each_composition(m, k, &mut |parts| {
                if err.is_some() {
                    return;
                }
                let gs: Vec<&MultiMap> = parts.iter().map(|&n| &trees[n - 1]).collect();
                match bk.compose_tensor_unsigned(&gs) {
                    Ok(c) => q.add_assign_scaled(&c, &Scalar::one()),
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
        }
        out.push(q.post_compose(p)?.twist(suspension_parity));
        if m < n_max {
            trees.push(q.post_compose(h)?.scale(&sigma));
        }
    }
    Ok(out)
}

/// Homotopy transfer of `(A, d_A, ∧)` along `Z`, `Y`, `h_A`.
pub fn ht_tower(inst: &HomotopyData, n_max: usize) -> Result<AInftyTower, TowerError> {
    check_arity(n_max)?;
    let source = AInftyTower::from_dga(inst, n_max)?;
    let products = transfer(&source.products, inst.z(), inst.y(), inst.h_a(), n_max)?;
    let mut all = vec![MultiMap::from_graded(inst.d_b())];
    all.extend(products);
    let mut expressions = vec![None; n_max];
    expressions[1] = Some(m2ht_expr());
    if n_max >= 3 {
        expressions[2] = Some(m3ht_expr());
    }
    let tower = AInftyTower {
        method: Method::Ht,
        k: None,
        products: all,
        expressions,
        hypotheses: vec![],
        notes: vec![],
    };
    tower.certify()?;
    Ok(tower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::q;
    use crate::exprcalc::evaluate;
    use crate::instances::{catalogue, gen_grassmann_super, gen_interval, gen_perturbed, gen_trivial, gen_twisted, PerturbSpec};

    fn interval() -> HomotopyData {
        gen_interval(&catalogue("exterior:1").unwrap()).unwrap()
    }

    #[test]
    fn ht_tower_certifies_and_matches_m3_formula() {
        for inst in [interval(), gen_grassmann_super(1, 1).unwrap(), gen_trivial(&catalogue("exterior:1").unwrap()).unwrap()] {
            let t = ht_tower(&inst, 4).unwrap();
            assert_eq!(t.formula_product(2), m2ht(&inst).unwrap());
            assert_eq!(t.formula_product(3), evaluate_as(&m3ht_expr(), &inst, 3, -1).unwrap());
        }
    }

    #[test]
    fn lemma_identity_on_interval() {
        let inst = interval();
        for (k1, k2) in [(1, 1), (2, 3), (1, -1)] {
            let (k1, k2) = (q(k1), q(k2));
            let (m2, _) = hmi_m2(&inst, &k1, &k2).unwrap();
            let (mt, _) = hmi_m2_tilde(&inst, &k1, &k2).unwrap();
            let rhs = m2.sub(&m2ht(&inst).unwrap().scale(&(&k1 + &k2))).unwrap();
            assert_eq!(del_b(&inst, &mt).unwrap(), rhs);
        }
    }

    #[test]
    fn m3_and_pentagonator_forms() {
        let base = interval();
        let inst = gen_perturbed(&base, &PerturbSpec::new(3, &[], &["SC_right", "WSC"])).unwrap();
        let (k1, k2) = (q(2), q(3));
        let (m2, _) = hmi_m2(&inst, &k1, &k2).unwrap();
        let (m3, _) = hmi_m3(&inst, &k1, &k2).unwrap();
        let ass = associator(&m2).unwrap();
        assert_eq!(ass, evaluate(&associator_expr(&k1, &k2), &inst).unwrap());
        assert_eq!(del_b(&inst, &m3).unwrap(), ass);
        let pen = pentagonator(&m2, &m3).unwrap();
        assert_eq!(pen, hmi_pentagonator(&inst, &k1, &k2).unwrap().0);
        let m4 = evaluate_as(&m4_expr(&k1, &k2), &inst, 4, -2).unwrap();
        let ry = residual_ry(&inst, &k1, &k2).unwrap().0;
        assert_eq!(del_b(&inst, &m4).unwrap(), pen.add(&ry).unwrap());
    }

    #[test]
    fn residual_vanishing_cases() {
        let inst = gen_perturbed(&interval(), &PerturbSpec::new(5, &[], &["SC_right", "WSC"])).unwrap();
        for (k1, k2) in [(0, 3), (2, 0), (2, -2)] {
            assert!(residual_ry(&inst, &q(k1), &q(k2)).unwrap().0.is_zero());
        }
        let twisted = gen_twisted(&gen_interval(&catalogue("odd-ideal:1").unwrap()).unwrap(), 1, true).unwrap();
        let wsc = gen_perturbed(&twisted, &PerturbSpec::new(5, &["WSC"], &["SC_right"])).unwrap();
        assert!(residual_ry(&wsc, &q(2), &q(3)).unwrap().0.is_zero());
        assert!(!residual_ry(&inst, &q(2), &q(3)).unwrap().0.is_zero());
    }

    #[test]
    fn general_tower_m4_is_opposite_of_closed_form() {
        let inst = gen_perturbed(&interval(), &PerturbSpec::new(3, &[], &["SC_right", "WSC"])).unwrap();
        let (k1, k2) = (q(1), q(-1));
        let t = hmi_tower_general(&inst, &k1, &k2, 4).unwrap();
        assert_eq!(t.formula_product(3), hmi_m3(&inst, &k1, &k2).unwrap().0);
        let m4 = evaluate_as(&m4_expr(&k1, &k2), &inst, 4, -2).unwrap();
        assert_eq!(t.formula_product(4), m4.scale(&q(-1)));
    }

    #[test]
    fn general_tower_without_conditions_breaks_at_five() {
        let inst = gen_perturbed(&interval(), &PerturbSpec::new(3, &[], &["SC_right", "WSC"])).unwrap();
        let err = hmi_tower_general(&inst, &q(1), &q(-1), 5).unwrap_err();
        assert!(matches!(err, TowerError::DefectNonzero { n: 5, .. }));
    }

    #[test]
    fn general_tower_under_wsc() {
        let twisted = gen_twisted(&gen_interval(&catalogue("odd-ideal:1").unwrap()).unwrap(), 1, true).unwrap();
        let inst = gen_perturbed(&twisted, &PerturbSpec::new(7, &["WSC"], &["SC_right"])).unwrap();
        for (k1, k2) in [(1, 1), (2, 3)] {
            hmi_tower_general(&inst, &q(k1), &q(k2), 5).unwrap();
        }
    }

    #[test]
    fn sc_tower_on_interval() {
        let inst = interval();
        let t = hmi_tower_sc(&inst, &q(1), &q(1), 5).unwrap();
        let direct = sc_recursion_numeric(&inst, &q(1), &q(1), 5).unwrap();
        for n in 2..=5 {
            assert_eq!(t.formula_product(n), direct[n - 2]);
        }
        assert_eq!(t.formula_product(3), hmi_m3(&inst, &q(1), &q(1)).unwrap().0);
    }
}

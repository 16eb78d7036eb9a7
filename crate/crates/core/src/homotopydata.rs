//! Homotopy data with bimodule structure, condition checks and homotopy
//! modifications.
//!
//! An instance consists of a dga `(A, d_A, ∧)`, a complex `(B, d_B)`, chain
//! maps `Y: A → B`, `Z: B → A` and homotopies `h_A`, `h_B` with
//! `1 − ZY = [d_A, h_A]`, `1 − YZ = [d_B, h_B]`, together with left and right
//! actions of the subring `Im Z ⊂ A` on `B`.

use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactlin::{
    add_entry, compose_graded, graded_commutator, parity_sign, same_space, sv_add_scaled, GradedMap, GradedSpace, HomBasis, LinError, Matrix,
    Scalar, SparseVec,
};
use crate::multimap::{MultiError, MultiMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomotopyError {
    #[error("axiom {axiom} fails on basis tuple {witness:?}")]
    AxiomViolation { axiom: String, witness: Vec<usize> },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("modified homotopy no longer satisfies the weak side conditions")]
    WSCLost,
    #[error("no homotopy solves the required relation")]
    NoSolution,
    #[error("vector is not in the image of Z")]
    NotInImage,
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Multi(#[from] MultiError),
}

/// Where an instance came from.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Provenance {
    pub generator: String,
    pub params: Vec<(String, String)>,
    pub notes: Vec<String>,
}

/// A failed condition's witness: a basis vector with nonzero image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub map: String,
    pub basis: usize,
    pub image: SparseVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub name: &'static str,
    pub holds: bool,
    pub witness: Option<Witness>,
}

pub const CONDITION_NAMES: [&str; 11] =
    ["SC_left", "SC_right", "SC_sq", "SC_left_A", "SC_right_A", "SC_sq_A", "WSC", "ZYZ", "YZY", "YZ_proj", "ZY_proj"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> bool {
        self.conditions.iter().find(|c| c.name == name).map(|c| c.holds).unwrap_or_else(|| panic!("unknown condition {name}"))
    }

    pub fn find(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// The three side conditions on the B side.
    pub fn sc(&self) -> bool {
        self.get("SC_left") && self.get("SC_right") && self.get("SC_sq")
    }

    pub fn wsc(&self) -> bool {
        self.get("WSC")
    }
}

/// Basis of `Im Z` in reduced echelon form: vector `k` has a 1 at `pivots[k]`
/// and every other basis vector vanishes there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBasis {
    pub vectors: Vec<SparseVec>,
    pub pivots: Vec<usize>,
}

impl ImageBasis {
    pub fn of(z: &GradedMap) -> Self {
        let cols = z.columns();
        let n = z.target().total_dim();
        let rows: Vec<Vec<Scalar>> = cols
            .iter()
            .map(|c| {
                let mut r = vec![Scalar::zero(); n];
                for (i, x) in c {
                    r[*i] = x.clone();
                }
                r
            })
            .collect();
        if rows.is_empty() {
            return ImageBasis { vectors: vec![], pivots: vec![] };
        }
        let rref = Matrix::from_rows(rows).rref();
        let mut vectors = Vec::new();
        for (r, &p) in rref.pivots.iter().enumerate() {
            let mut v = SparseVec::new();
            for (i, x) in rref.matrix.row(r).iter().enumerate() {
                add_entry(&mut v, i, x.clone());
            }
            let _ = p;
            vectors.push(v);
        }
        ImageBasis { vectors, pivots: rref.pivots }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Coordinates of `u` in this basis, or `None` if `u ∉ Im Z`.
    pub fn coords(&self, u: &SparseVec) -> Option<Vec<Scalar>> {
        let c: Vec<Scalar> = self.pivots.iter().map(|p| u.get(p).cloned().unwrap_or_else(Scalar::zero)).collect();
        let mut back = SparseVec::new();
        for (v, x) in self.vectors.iter().zip(&c) {
            sv_add_scaled(&mut back, v, x);
        }
        (back == *u).then_some(c)
    }
}

/// Raw ingredients of an instance; actions are tabulated on the `Im Z` basis
/// computed from `z` (`lact[k][j] = u_k ▷ e_j`, `ract[j][k] = e_j ◁ u_k`).
#[derive(Clone, Debug)]
pub struct Parts {
    pub a: Arc<GradedSpace>,
    pub b: Arc<GradedSpace>,
    pub d_a: GradedMap,
    pub d_b: GradedMap,
    pub y: GradedMap,
    pub z: GradedMap,
    pub h_a: GradedMap,
    pub h_b: GradedMap,
    pub wedge: MultiMap,
    pub lact: Vec<Vec<SparseVec>>,
    pub ract: Vec<Vec<SparseVec>>,
    pub provenance: Provenance,
}

impl Parts {
    /// Tabulates actions from functions defined on all of `A × B`.
    #[allow(clippy::too_many_arguments)]
    pub fn with_actions<L, R>(
        a: Arc<GradedSpace>,
        b: Arc<GradedSpace>,
        maps: [GradedMap; 6],
        wedge: MultiMap,
        mut left: L,
        mut right: R,
        provenance: Provenance,
    ) -> Parts
    where
        L: FnMut(&SparseVec, usize) -> SparseVec,
        R: FnMut(usize, &SparseVec) -> SparseVec,
    {
        let [d_a, d_b, y, z, h_a, h_b] = maps;
        let imz = ImageBasis::of(&z);
        let nb = b.total_dim();
        let lact = imz.vectors.iter().map(|u| (0..nb).map(|j| left(u, j)).collect()).collect();
        let ract = (0..nb).map(|j| imz.vectors.iter().map(|u| right(j, u)).collect()).collect();
        Parts { a, b, d_a, d_b, y, z, h_a, h_b, wedge, lact, ract, provenance }
    }
}

#[derive(Clone, Debug)]
pub struct HomotopyData {
    a: Arc<GradedSpace>,
    b: Arc<GradedSpace>,
    d_a: GradedMap,
    d_b: GradedMap,
    y: GradedMap,
    z: GradedMap,
    h_a: GradedMap,
    h_b: GradedMap,
    wedge: MultiMap,
    imz: ImageBasis,
    lact: Vec<Vec<SparseVec>>,
    ract: Vec<Vec<SparseVec>>,
    flags: ConditionReport,
    provenance: Provenance,
}

fn expect_shape(m: &GradedMap, name: &str, src: &Arc<GradedSpace>, tgt: &Arc<GradedSpace>, deg: i32) -> Result<(), HomotopyError> {
    if !same_space(m.source(), src) || !same_space(m.target(), tgt) || m.degree() != deg {
        return Err(HomotopyError::Shape(format!("{name} has wrong source, target or degree")));
    }
    Ok(())
}

impl HomotopyData {
    /// Checks shapes, computes condition flags and validates every axiom.
    pub fn new(parts: Parts) -> Result<Self, HomotopyError> {
        let inst = Self::unchecked(parts)?;
        inst.validate()?;
        Ok(inst)
    }

    /// Checks shapes and computes flags without validating the axioms.
    pub fn unchecked(p: Parts) -> Result<Self, HomotopyError> {
        expect_shape(&p.d_a, "d_A", &p.a, &p.a, 1)?;
        expect_shape(&p.d_b, "d_B", &p.b, &p.b, 1)?;
        expect_shape(&p.y, "Y", &p.a, &p.b, 0)?;
        expect_shape(&p.z, "Z", &p.b, &p.a, 0)?;
        expect_shape(&p.h_a, "h_A", &p.a, &p.a, -1)?;
        expect_shape(&p.h_b, "h_B", &p.b, &p.b, -1)?;
        if p.wedge.arity() != 2 || p.wedge.degree() != 0 || !same_space(p.wedge.source(), &p.a) || !same_space(p.wedge.target(), &p.a) {
            return Err(HomotopyError::Shape("wedge must be a degree 0 binary map on A".into()));
        }
        let imz = ImageBasis::of(&p.z);
        let nb = p.b.total_dim();
        if p.lact.len() != imz.len() || p.lact.iter().any(|r| r.len() != nb) {
            return Err(HomotopyError::Shape("left action table does not match Im Z × B".into()));
        }
        if p.ract.len() != nb || p.ract.iter().any(|r| r.len() != imz.len()) {
            return Err(HomotopyError::Shape("right action table does not match B × Im Z".into()));
        }
        let flags = compute_flags(&p.d_a, &p.y, &p.z, &p.h_a, &p.h_b)?;
        Ok(HomotopyData {
            a: p.a,
            b: p.b,
            d_a: p.d_a,
            d_b: p.d_b,
            y: p.y,
            z: p.z,
            h_a: p.h_a,
            h_b: p.h_b,
            wedge: p.wedge,
            imz,
            lact: p.lact,
            ract: p.ract,
            flags,
            provenance: p.provenance,
        })
    }

    pub fn parts(&self) -> Parts {
        Parts {
            a: self.a.clone(),
            b: self.b.clone(),
            d_a: self.d_a.clone(),
            d_b: self.d_b.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
            h_a: self.h_a.clone(),
            h_b: self.h_b.clone(),
            wedge: self.wedge.clone(),
            lact: self.lact.clone(),
            ract: self.ract.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Replaces `h_B`, recomputing flags and revalidating.
    pub fn with_h_b(&self, h_b: GradedMap, note: &str) -> Result<Self, HomotopyError> {
        let mut p = self.parts();
        p.h_b = h_b;
        p.provenance.notes.push(note.to_string());
        Self::new(p)
    }

    pub fn with_h_a(&self, h_a: GradedMap, note: &str) -> Result<Self, HomotopyError> {
        let mut p = self.parts();
        p.h_a = h_a;
        p.provenance.notes.push(note.to_string());
        Self::new(p)
    }

    pub fn a(&self) -> &Arc<GradedSpace> {
        &self.a
    }
    pub fn b(&self) -> &Arc<GradedSpace> {
        &self.b
    }
    pub fn d_a(&self) -> &GradedMap {
        &self.d_a
    }
    pub fn d_b(&self) -> &GradedMap {
        &self.d_b
    }
    pub fn y(&self) -> &GradedMap {
        &self.y
    }
    pub fn z(&self) -> &GradedMap {
        &self.z
    }
    pub fn h_a(&self) -> &GradedMap {
        &self.h_a
    }
    pub fn h_b(&self) -> &GradedMap {
        &self.h_b
    }
    pub fn wedge(&self) -> &MultiMap {
        &self.wedge
    }
    pub fn imz(&self) -> &ImageBasis {
        &self.imz
    }
    pub fn lact_table(&self) -> &[Vec<SparseVec>] {
        &self.lact
    }
    pub fn ract_table(&self) -> &[Vec<SparseVec>] {
        &self.ract
    }
    pub fn flags(&self) -> &ConditionReport {
        &self.flags
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn wedge_vec(&self, u: &SparseVec, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (i, x) in u {
            for (j, y) in v {
                let e = self.wedge.get(&[*i, *j]);
                sv_add_scaled(&mut out, &e, &(x * y));
            }
        }
        out
    }

    /// `u ▷ w` for `u ∈ Im Z`.
    pub fn lact_vec(&self, u: &SparseVec, w: &SparseVec) -> Result<SparseVec, HomotopyError> {
        let c = self.imz.coords(u).ok_or(HomotopyError::NotInImage)?;
        Ok(self.lact_coords(&c, w))
    }

    pub fn lact_coords(&self, c: &[Scalar], w: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (k, ck) in c.iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            for (j, x) in w {
                sv_add_scaled(&mut out, &self.lact[k][*j], &(ck * x));
            }
        }
        out
    }

    /// `w ◁ u` for `u ∈ Im Z`.
    pub fn ract_vec(&self, w: &SparseVec, u: &SparseVec) -> Result<SparseVec, HomotopyError> {
        let c = self.imz.coords(u).ok_or(HomotopyError::NotInImage)?;
        Ok(self.ract_coords(w, &c))
    }

    pub fn ract_coords(&self, w: &SparseVec, c: &[Scalar]) -> SparseVec {
        let mut out = SparseVec::new();
        for (k, ck) in c.iter().enumerate() {
            if ck.is_zero() {
                continue;
            }
            for (j, x) in w {
                sv_add_scaled(&mut out, &self.ract[*j][k], &(ck * x));
            }
        }
        out
    }

    /// `b, b' ↦ Z(b) ▷ b'` as a binary map on B.
    pub fn left_mult(&self) -> MultiMap {
        let zc = self.z.columns();
        MultiMap::from_fn(2, 0, self.b.clone(), self.b.clone(), |t| {
            self.lact_vec(&zc[t[0]], &unit(t[1])).expect("Z(b) lies in Im Z")
        })
    }

    /// `b, b' ↦ b ◁ Z(b')` as a binary map on B.
    pub fn right_mult(&self) -> MultiMap {
        let zc = self.z.columns();
        MultiMap::from_fn(2, 0, self.b.clone(), self.b.clone(), |t| {
            self.ract_vec(&unit(t[0]), &zc[t[1]]).expect("Z(b) lies in Im Z")
        })
    }

    /// Checks every axiom; the first failure is reported with a witness.
    pub fn validate(&self) -> Result<(), HomotopyError> {
        let fail = |axiom: &str, witness: Vec<usize>| Err(HomotopyError::AxiomViolation { axiom: axiom.to_string(), witness });
        let zero_map = |name: &str, m: GradedMap| -> Result<(), HomotopyError> {
            match m.first_nonzero() {
                Some((j, _)) => Err(HomotopyError::AxiomViolation { axiom: name.to_string(), witness: vec![j] }),
                None => Ok(()),
            }
        };
        zero_map("d_A∘d_A = 0", compose_graded(&self.d_a, &self.d_a)?)?;
        zero_map("d_B∘d_B = 0", compose_graded(&self.d_b, &self.d_b)?)?;
        zero_map("d_B∘Y = Y∘d_A", compose_graded(&self.d_b, &self.y)?.sub(&compose_graded(&self.y, &self.d_a)?)?)?;
        zero_map("d_A∘Z = Z∘d_B", compose_graded(&self.d_a, &self.z)?.sub(&compose_graded(&self.z, &self.d_b)?)?)?;
        let one_a = GradedMap::identity(self.a.clone());
        let one_b = GradedMap::identity(self.b.clone());
        zero_map(
            "1_A − Z∘Y = [d_A, h_A]",
            one_a.sub(&compose_graded(&self.z, &self.y)?)?.sub(&graded_commutator(&self.d_a, &self.h_a)?)?,
        )?;
        zero_map(
            "1_B − Y∘Z = [d_B, h_B]",
            one_b.sub(&compose_graded(&self.y, &self.z)?)?.sub(&graded_commutator(&self.d_b, &self.h_b)?)?,
        )?;
        let na = self.a.total_dim();
        let nb = self.b.total_dim();
        let da = self.d_a.columns();
        let db = self.d_b.columns();
        let zc = self.z.columns();
        let yc = self.y.columns();
        // wedge: associativity and Leibniz
        for i in 0..na {
            for j in 0..na {
                let ij = self.wedge.get(&[i, j]);
                let lhs = self.d_a.apply(&ij);
                let mut rhs = self.wedge_vec(&da[i], &unit(j));
                sv_add_scaled(&mut rhs, &self.wedge_vec(&unit(i), &da[j]), &parity_sign(self.a.degree_of(i) as i64));
                if lhs != rhs {
                    return fail("Leibniz rule for ∧", vec![i, j]);
                }
                for k in 0..na {
                    if self.wedge_vec(&ij, &unit(k)) != self.wedge_vec(&unit(i), &self.wedge.get(&[j, k])) {
                        return fail("∧ associative", vec![i, j, k]);
                    }
                }
            }
        }
        // Im Z is a subring
        for (s, u) in self.imz.vectors.iter().enumerate() {
            for (t, v) in self.imz.vectors.iter().enumerate() {
                if self.imz.coords(&self.wedge_vec(u, v)).is_none() {
                    return fail("Im Z closed under ∧", vec![s, t]);
                }
            }
        }
        // module axioms on the Im Z basis
        let k = self.imz.len();
        for s in 0..k {
            for t in 0..k {
                let st = self.wedge_vec(&self.imz.vectors[s], &self.imz.vectors[t]);
                for j in 0..nb {
                    let l1 = self.lact_coords(&e(k, s), &self.lact[t][j]);
                    if l1 != self.lact_vec(&st, &unit(j))? {
                        return fail("left module associativity", vec![s, t, j]);
                    }
                    let r1 = self.ract_coords(&self.ract[j][s], &e(k, t));
                    if r1 != self.ract_vec(&unit(j), &st)? {
                        return fail("right module associativity", vec![j, s, t]);
                    }
                    let c1 = self.ract_coords(&self.lact[s][j], &e(k, t));
                    let c2 = self.lact_coords(&e(k, s), &self.ract[j][t]);
                    if c1 != c2 {
                        return fail("bimodule compatibility", vec![s, j, t]);
                    }
                }
            }
        }
        for b1 in 0..nb {
            let sgn = parity_sign(self.b.degree_of(b1) as i64);
            for b2 in 0..nb {
                // Leibniz rules for the actions
                let lhs = self.d_b.apply(&self.lact_vec(&zc[b1], &unit(b2))?);
                let mut rhs = self.lact_vec(&self.z.apply(&db[b1]), &unit(b2))?;
                sv_add_scaled(&mut rhs, &self.lact_vec(&zc[b1], &db[b2])?, &sgn);
                if lhs != rhs {
                    return fail("Leibniz rule for ▷", vec![b1, b2]);
                }
                let lhs = self.d_b.apply(&self.ract_vec(&unit(b1), &zc[b2])?);
                let mut rhs = self.ract_vec(&db[b1], &zc[b2])?;
                sv_add_scaled(&mut rhs, &self.ract_vec(&unit(b1), &self.z.apply(&db[b2]))?, &sgn);
                if lhs != rhs {
                    return fail("Leibniz rule for ◁", vec![b1, b2]);
                }
                // Z is a bimodule map
                let zz = self.wedge_vec(&zc[b1], &zc[b2]);
                if self.z.apply(&self.lact_vec(&zc[b1], &unit(b2))?) != zz {
                    return fail("Z(Z(b)▷b′) = Z(b)∧Z(b′)", vec![b1, b2]);
                }
                if self.z.apply(&self.ract_vec(&unit(b1), &zc[b2])?) != zz {
                    return fail("Z(b◁Z(b′)) = Z(b)∧Z(b′)", vec![b1, b2]);
                }
            }
            for a in 0..na {
                let l = self.y.apply(&self.wedge_vec(&zc[b1], &unit(a)));
                if l != self.lact_vec(&zc[b1], &yc[a])? {
                    return fail("Y(Z(b)∧a) = Z(b)▷Y(a)", vec![b1, a]);
                }
                let r = self.y.apply(&self.wedge_vec(&unit(a), &zc[b1]));
                if r != self.ract_vec(&yc[a], &zc[b1])? {
                    return fail("Y(a∧Z(b)) = Y(a)◁Z(b)", vec![a, b1]);
                }
            }
        }
        Ok(())
    }

    /// `Z∘h_B − h_A∘Z`, the representative of the lifting obstruction.
    pub fn obstruction_representative(&self) -> Result<GradedMap, HomotopyError> {
        Ok(compose_graded(&self.z, &self.h_b)?.sub(&compose_graded(&self.h_a, &self.z)?)?)
    }
}

pub fn unit(i: usize) -> SparseVec {
    [(i, Scalar::one())].into_iter().collect()
}

fn e(n: usize, k: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(); n];
    v[k] = Scalar::one();
    v
}

fn compute_flags(d_a: &GradedMap, y: &GradedMap, z: &GradedMap, h_a: &GradedMap, h_b: &GradedMap) -> Result<ConditionReport, HomotopyError> {
    let _ = d_a;
    let c = compose_graded;
    let yz = c(y, z)?;
    let zy = c(z, y)?;
    let maps: Vec<(&'static str, Vec<(&str, GradedMap)>)> = vec![
        ("SC_left", vec![("h_B∘Y", c(h_b, y)?)]),
        ("SC_right", vec![("Z∘h_B", c(z, h_b)?)]),
        ("SC_sq", vec![("h_B∘h_B", c(h_b, h_b)?)]),
        ("SC_left_A", vec![("h_A∘Z", c(h_a, z)?)]),
        ("SC_right_A", vec![("Y∘h_A", c(y, h_a)?)]),
        ("SC_sq_A", vec![("h_A∘h_A", c(h_a, h_a)?)]),
        ("WSC", vec![("Y∘Z∘h_B", c(&yz, h_b)?), ("h_B∘Y∘Z", c(h_b, &yz)?)]),
        ("ZYZ", vec![("Z∘Y∘Z − Z", c(&zy, z)?.sub(z)?)]),
        ("YZY", vec![("Y∘Z∘Y − Y", c(&yz, y)?.sub(y)?)]),
        ("YZ_proj", vec![("(Y∘Z)² − Y∘Z", c(&yz, &yz)?.sub(&yz)?)]),
        ("ZY_proj", vec![("(Z∘Y)² − Z∘Y", c(&zy, &zy)?.sub(&zy)?)]),
    ];
    let mut conditions = Vec::new();
    for (name, ms) in maps {
        let mut witness = None;
        for (mname, m) in ms {
            if let Some((j, img)) = m.first_nonzero() {
                witness = Some(Witness { map: mname.to_string(), basis: j, image: img });
                break;
            }
        }
        conditions.push(Condition { name, holds: witness.is_none(), witness });
    }
    Ok(ConditionReport { conditions })
}

/// Solves `d∘h + h∘d = 1 − projector` for a degree −1 map `h`.
pub fn synthesize_homotopy(space: &Arc<GradedSpace>, d: &GradedMap, projector: &GradedMap) -> Result<GradedMap, HomotopyError> {
    let unknowns = HomBasis::new(space.clone(), space.clone(), -1);
    let out = HomBasis::new(space.clone(), space.clone(), 0);
    let m = unknowns.operator_matrix(&out, |h| graded_commutator(d, h).expect("endomorphisms of one space"));
    let rhs = GradedMap::identity(space.clone()).sub(projector)?;
    let x = m.solve(&out.coords(&rhs)).ok_or(HomotopyError::NoSolution)?;
    Ok(unknowns.map(&x))
}

fn require(inst: &HomotopyData, name: &str, what: &str) -> Result<(), HomotopyError> {
    if inst.flags().get(name) {
        Ok(())
    } else {
        Err(HomotopyError::PreconditionFailed(format!("{what} ({name}) does not hold")))
    }
}

/// `h_B′ = (1 − YZ)∘h_B`; yields `Z∘h_B′ = 0` when `ZYZ = Z`.
pub fn modify_h_right(inst: &HomotopyData) -> Result<HomotopyData, HomotopyError> {
    require(inst, "ZYZ", "Z∘Y∘Z = Z")?;
    let p = graded_commutator(inst.d_b(), inst.h_b())?;
    inst.with_h_b(compose_graded(&p, inst.h_b())?, "h_B replaced by (∂h_B)∘h_B")
}

/// `h_B′ = h_B∘(1 − YZ)`; yields `h_B′∘Y = 0` when `YZY = Y`.
pub fn modify_h_left(inst: &HomotopyData) -> Result<HomotopyData, HomotopyError> {
    require(inst, "YZY", "Y∘Z∘Y = Y")?;
    let p = graded_commutator(inst.d_b(), inst.h_b())?;
    inst.with_h_b(compose_graded(inst.h_b(), &p)?, "h_B replaced by h_B∘(∂h_B)")
}

/// `h_B′ = (1 − YZ)∘h_B∘(1 − YZ)`; yields WSC when `YZ` is a projector.
pub fn modify_h_weak(inst: &HomotopyData) -> Result<HomotopyData, HomotopyError> {
    require(inst, "YZ_proj", "(Y∘Z)² = Y∘Z")?;
    let p = graded_commutator(inst.d_b(), inst.h_b())?;
    let h = compose_graded(&compose_graded(&p, inst.h_b())?, &p)?;
    inst.with_h_b(h, "h_B replaced by (∂h_B)∘h_B∘(∂h_B)")
}

/// `h_B′ = h_B∘d_B∘h_B`, which squares to zero whenever WSC holds.
pub fn modify_h_square(inst: &HomotopyData) -> Result<HomotopyData, HomotopyError> {
    let h = compose_graded(&compose_graded(inst.h_b(), inst.d_b())?, inst.h_b())?;
    let mut p = inst.parts();
    p.h_b = h;
    p.provenance.notes.push("h_B replaced by h_B∘d_B∘h_B".into());
    let out = HomotopyData::unchecked(p)?;
    if !out.flags().wsc() {
        return Err(HomotopyError::WSCLost);
    }
    out.validate()?;
    Ok(out)
}

/// `h_A′ = (∂h_A)∘h_A`; requires `Z∘h_B = 0`.
pub fn modify_ha_markl(inst: &HomotopyData) -> Result<HomotopyData, HomotopyError> {
    require(inst, "SC_right", "Z∘h_B = 0")?;
    let p = graded_commutator(inst.d_a(), inst.h_a())?;
    inst.with_h_a(compose_graded(&p, inst.h_a())?, "h_A replaced by (∂h_A)∘h_A")
}

/// Result of the `h_B + Y∘h_A∘Z` redefinition.
#[derive(Clone, Debug)]
pub struct MarklBReport {
    pub instance: HomotopyData,
    pub sc_right_before: bool,
    pub sc_right_after: bool,
}

/// `h_B′ = h_B + Y∘h_A∘Z`. Valid homotopy data requires `(YZ)² = YZ`; otherwise
/// validation of the result reports the broken homotopy relation.
pub fn modify_hb_markl(inst: &HomotopyData) -> Result<MarklBReport, HomotopyError> {
    let extra = compose_graded(&compose_graded(inst.y(), inst.h_a())?, inst.z())?;
    let out = inst.with_h_b(inst.h_b().add(&extra)?, "h_B replaced by h_B + Y∘h_A∘Z")?;
    Ok(MarklBReport { sc_right_before: inst.flags().get("SC_right"), sc_right_after: out.flags().get("SC_right"), instance: out })
}

/// Whether `Im Z ∩ ker Y = 0`, via `rank(Y∘Z) = rank(Z)`.
pub fn imz_meets_ker_y_trivially(inst: &HomotopyData) -> Result<bool, HomotopyError> {
    let yz = compose_graded(inst.y(), inst.z())?;
    Ok(yz.to_global().rank() == inst.z().to_global().rank())
}

//! Cohomology classes with certificates, strict A∞-morphisms, truncated
//! Hochschild differentials and Massey towers on `H(B)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactlin::{cohomology, compose_graded, dot, parity_sign, CohomologyModel, GradedMap, GradedSpace, HomBasis, LinError, Matrix, Scalar, SparseVec};
use crate::homotopydata::{HomotopyData, HomotopyError};
use crate::multimap::{for_each_tuple, hom_differential, op_compose, MultiError, MultiMap};
use crate::towers::{
    evaluate_m2_after_m2ht, hmi_tower_general, hmi_tower_sc, ht_tower, to_defect_convention, transfer, AInftyTower, Method, TowerError,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("obstruction representative is not closed (first nonzero column {0})")]
    NotClosed(usize),
    #[error("Hochschild component of arity {arity} needs products up to arity {needed}; tower stops at {available}")]
    TruncationTooTight { arity: usize, needed: usize, available: usize },
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Multi(#[from] MultiError),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
}

/// Either a primitive or a linear functional that kills every boundary but
/// not the representative.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate<T> {
    Primitive(T),
    Witness(Vec<Scalar>),
}

/// `∂φ = d_A∘φ − (-1)^{|φ|} φ∘d_B` on `Hom(B, A)`.
pub fn hom_differential_ba(phi: &GradedMap, d_a: &GradedMap, d_b: &GradedMap) -> Result<GradedMap, LinError> {
    let left = compose_graded(d_a, phi)?;
    let right = compose_graded(phi, d_b)?;
    left.sub(&right.scale(&parity_sign(phi.degree() as i64)))
}

/// Solves `M x = rhs` or returns a functional `w` with `wᵀM = 0`, `w·rhs ≠ 0`.
fn solve_or_witness(m: &Matrix, rhs: &[Scalar]) -> Result<Vec<Scalar>, Vec<Scalar>> {
    match m.solve(rhs) {
        Some(x) => Ok(x),
        None => Err(m.inconsistency_witness(rhs).expect("inconsistent systems have a witness")),
    }
}

fn witness_holds(m: &Matrix, rhs: &[Scalar], w: &[Scalar]) -> bool {
    let wm = m.transpose().mul_vec(w);
    wm.iter().all(Zero::is_zero) && !dot(w, rhs).is_zero()
}

#[derive(Clone, Debug)]
pub struct HomObstruction {
    /// `Z∘h_B − h_A∘Z`, degree −1.
    pub representative: GradedMap,
    pub class_zero: bool,
    pub certificate: Certificate<GradedMap>,
}

impl HomObstruction {
    /// Re-checks the certificate from scratch.
    pub fn verify(&self, inst: &HomotopyData) -> Result<bool, AnalysisError> {
        match &self.certificate {
            Certificate::Primitive(x) => self.is_primitive(inst, x),
            Certificate::Witness(w) => {
                let (m, rhs) = obstruction_system(inst, &self.representative);
                Ok(witness_holds(&m, &rhs, w))
            }
        }
    }

    /// Whether `x` is a primitive of the representative.
    pub fn is_primitive(&self, inst: &HomotopyData, x: &GradedMap) -> Result<bool, AnalysisError> {
        Ok(hom_differential_ba(x, inst.d_a(), inst.d_b())?.sub(&self.representative)?.is_zero())
    }
}

fn obstruction_system(inst: &HomotopyData, rep: &GradedMap) -> (Matrix, Vec<Scalar>) {
    let src = HomBasis::new(inst.b().clone(), inst.a().clone(), -2);
    let out = HomBasis::new(inst.b().clone(), inst.a().clone(), -1);
    let m = src.operator_matrix(&out, |x| hom_differential_ba(x, inst.d_a(), inst.d_b()).expect("shapes agree"));
    (m, out.coords(rep))
}

/// Class of `Z∘h_B − h_A∘Z` in `H(Hom(B, A))`.
pub fn obstruction_class(inst: &HomotopyData) -> Result<HomObstruction, AnalysisError> {
    let rep = inst.obstruction_representative()?;
    let closed = hom_differential_ba(&rep, inst.d_a(), inst.d_b())?;
    if let Some((j, _)) = closed.first_nonzero() {
        return Err(AnalysisError::NotClosed(j));
    }
    let (m, rhs) = obstruction_system(inst, &rep);
    let src = HomBasis::new(inst.b().clone(), inst.a().clone(), -2);
    Ok(match solve_or_witness(&m, &rhs) {
        Ok(x) => HomObstruction { representative: rep, class_zero: true, certificate: Certificate::Primitive(src.map(&x)) },
        Err(w) => HomObstruction { representative: rep, class_zero: false, certificate: Certificate::Witness(w) },
    })
}

/// Coordinates on homogeneous multilinear maps `source^{⊗n} → target`.
#[derive(Clone, Debug)]
pub struct MultiBasis {
    pub arity: usize,
    pub degree: i32,
    pub source: Arc<GradedSpace>,
    pub target: Arc<GradedSpace>,
    pub positions: Vec<(Vec<usize>, usize)>,
}

impl MultiBasis {
    pub fn new(arity: usize, degree: i32, source: Arc<GradedSpace>, target: Arc<GradedSpace>) -> Self {
        let mut positions = Vec::new();
        for_each_tuple(source.total_dim(), arity, |t| {
            let deg: i32 = t.iter().map(|&i| source.degree_of(i)).sum::<i32>() + degree;
            if target.in_window(deg) {
                for o in target.offset(deg)..target.offset(deg) + target.dim(deg) {
                    positions.push((t.to_vec(), o));
                }
            }
        });
        MultiBasis { arity, degree, source, target, positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn map(&self, coords: &[Scalar]) -> MultiMap {
        let mut m = MultiMap::zero(self.arity, self.degree, self.source.clone(), self.target.clone());
        for ((t, o), x) in self.positions.iter().zip(coords) {
            if !x.is_zero() {
                let v: SparseVec = [(*o, Scalar::one())].into_iter().collect();
                m.add_to(t.clone(), &v, x);
            }
        }
        m
    }

    pub fn coords(&self, m: &MultiMap) -> Vec<Scalar> {
        self.positions.iter().map(|(t, o)| m.get(t).get(o).cloned().unwrap_or_else(Scalar::zero)).collect()
    }

    pub fn operator_matrix<F>(&self, out: &MultiBasis, mut op: F) -> Matrix
    where
        F: FnMut(&MultiMap) -> MultiMap,
    {
        let cols: Vec<Vec<Scalar>> = (0..self.len())
            .map(|k| {
                let mut c = vec![Scalar::zero(); self.len()];
                c[k] = Scalar::one();
                out.coords(&op(&self.map(&c)))
            })
            .collect();
        Matrix::from_columns(out.len(), &cols)
    }
}

#[derive(Clone, Debug)]
pub struct WedgeClass {
    pub class_zero: bool,
    pub certificate: Certificate<MultiMap>,
}

fn wedge_system(inst: &HomotopyData) -> (MultiBasis, Matrix, Vec<Scalar>) {
    let a = inst.a().clone();
    let src = MultiBasis::new(2, -1, a.clone(), a.clone());
    let out = MultiBasis::new(2, 0, a.clone(), a);
    let m = src.operator_matrix(&out, |x| hom_differential(x, inst.d_a(), inst.d_a()).expect("shapes agree"));
    let rhs = out.coords(inst.wedge());
    (src, m, rhs)
}

/// Class of `∧` in `H(Hom(A^{⊗2}, A))`.
pub fn wedge_class(inst: &HomotopyData) -> Result<WedgeClass, AnalysisError> {
    let (src, m, rhs) = wedge_system(inst);
    Ok(match solve_or_witness(&m, &rhs) {
        Ok(x) => WedgeClass { class_zero: true, certificate: Certificate::Primitive(src.map(&x)) },
        Err(w) => WedgeClass { class_zero: false, certificate: Certificate::Witness(w) },
    })
}

impl WedgeClass {
    pub fn verify(&self, inst: &HomotopyData) -> Result<bool, AnalysisError> {
        match &self.certificate {
            Certificate::Primitive(x) => Ok(&hom_differential(x, inst.d_a(), inst.d_a())? == inst.wedge()),
            Certificate::Witness(w) => {
                let (_, m, rhs) = wedge_system(inst);
                Ok(witness_holds(&m, &rhs, w))
            }
        }
    }
}

/// A residual map with its first nonzero entry, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub arity: usize,
    pub map: MultiMap,
    pub witness: Option<(Vec<usize>, SparseVec)>,
}

impl Residual {
    pub fn new(arity: usize, map: MultiMap) -> Self {
        let witness = map.first_nonzero();
        Residual { arity, map, witness }
    }

    pub fn is_zero(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct MorphismReport {
    pub residuals: Vec<Residual>,
    pub quasi_iso: bool,
    /// Rank of the induced map on cohomology against the two cohomology dimensions.
    pub cohomology_rank: (usize, usize, usize),
}

impl MorphismReport {
    pub fn all_zero(&self) -> bool {
        self.residuals.iter().all(Residual::is_zero)
    }
}

fn unary(m: &MultiMap) -> Result<GradedMap, LinError> {
    GradedMap::from_fn(m.source().clone(), m.target().clone(), m.degree(), |j| m.get(&[j]))
}

/// Induced map `H(f)` between cohomology models.
pub fn induced_on_cohomology(f: &GradedMap, src: &CohomologyModel, tgt: &CohomologyModel) -> Result<GradedMap, LinError> {
    compose_graded(&tgt.p, &compose_graded(f, &src.i)?)
}

/// Residuals `f₁∘m_n − m′_n∘f₁^{⊗n}` of the morphism relations with `f_i = 0`
/// for `i ≥ 2`, `1 ≤ n ≤ N`, plus the quasi-isomorphism test on cohomology.
pub fn check_strict_morphism(f1: &GradedMap, source: &AInftyTower, target: &AInftyTower, n_max: usize) -> Result<MorphismReport, AnalysisError> {
    let fm = MultiMap::from_graded(f1);
    let top = n_max.min(source.max_arity()).min(target.max_arity());
    let mut residuals = Vec::new();
    for n in 1..=top {
        let left = source.product(n).post_compose(f1)?;
        let fs: Vec<&MultiMap> = vec![&fm; n];
        let right = target.product(n).compose_tensor(&fs)?;
        residuals.push(Residual::new(n, left.sub(&right)?));
    }
    let hs = cohomology(f1.source().clone(), &unary(source.product(1))?)?;
    let ht = cohomology(f1.target().clone(), &unary(target.product(1))?)?;
    let hf = induced_on_cohomology(f1, &hs, &ht)?;
    let rank = hf.to_global().rank();
    let (ds, dt) = (hs.h.total_dim(), ht.h.total_dim());
    Ok(MorphismReport { residuals, quasi_iso: rank == ds && rank == dt, cohomology_rank: (rank, ds, dt) })
}

/// Truncated Hochschild differential with respect to `ht` (formula convention):
/// `(𝖽μ)_N = ∂μ_N + Σ_{n≥2} ((-1)^{n-1} m_n∘μ_k − (-1)^{|μ_k|} μ_k∘m_n)`, `n + k − 1 = N`.
/// `mu` maps arity to component; components are returned for arities `2..=n_max`.
pub fn hochschild_differential(mu: &BTreeMap<usize, MultiMap>, ht: &AInftyTower, n_max: usize) -> Result<BTreeMap<usize, MultiMap>, AnalysisError> {
    let d = unary(ht.product(1))?;
    let space = d.source().clone();
    let mut out = BTreeMap::new();
    let shifted = mu.iter().next().map(|(k, m)| m.degree() + *k as i32 - 1);
    for big_n in 2..=n_max {
        let needed = big_n - 1;
        if needed > ht.max_arity() {
            return Err(AnalysisError::TruncationTooTight { arity: big_n, needed, available: ht.max_arity() });
        }
        let degree = shifted.map_or(2 - big_n as i32, |s| s + 2 - big_n as i32);
        let mut acc = MultiMap::zero(big_n, degree, space.clone(), space.clone());
        if let Some(m) = mu.get(&big_n) {
            acc.add_assign_scaled(&hom_differential(m, &d, &d)?, &Scalar::one());
        }
        for n in 2..big_n {
            let k = big_n + 1 - n;
            let Some(mk) = mu.get(&k) else { continue };
            let mn = ht.formula_product(n);
            acc.add_assign_scaled(&op_compose(&mn, mk)?, &parity_sign(n as i64 - 1));
            acc.add_assign_scaled(&op_compose(mk, &mn)?, &-parity_sign(mk.degree() as i64));
        }
        out.insert(big_n, acc);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeformationVerdict {
    /// `𝖽μ` has a nonzero component at this arity.
    NotDeformation { arity: usize, tuple: Vec<usize> },
    /// Every component up to the truncation vanishes.
    CocycleThrough(usize),
    /// `μ` itself vanishes up to the truncation.
    TriviallyZero,
}

#[derive(Clone, Debug)]
pub struct DeformationReport {
    pub verdict: DeformationVerdict,
    pub components: BTreeMap<usize, Residual>,
    /// Whether `m₂∘m₂ʰᵗ` equals its closed form.
    pub closed_form_matches: bool,
    /// Whether the arity-3 component equals `∂m₃ − m₂∘m₂ʰᵗ`.
    pub arity3_matches: bool,
    pub method: Method,
}

/// Builds `μ = Σ(m_i − m_iʰᵗ)` from the module-induced and transferred towers
/// and evaluates `𝖽μ` up to arity `N`.
pub fn check_infinitesimal_deformation(inst: &HomotopyData, k1: &Scalar, k2: &Scalar, n_max: usize) -> Result<DeformationReport, AnalysisError> {
    let hmi = if inst.flags().sc() { hmi_tower_sc(inst, k1, k2, n_max)? } else { hmi_tower_general(inst, k1, k2, n_max)? };
    let ht = ht_tower(inst, n_max)?;
    let mut mu = BTreeMap::new();
    for n in 2..=n_max {
        mu.insert(n, hmi.formula_product(n).sub(&ht.formula_product(n))?);
    }
    let d = hochschild_differential(&mu, &ht, n_max)?;
    let components: BTreeMap<usize, Residual> = d.into_iter().map(|(n, m)| (n, Residual::new(n, m))).collect();
    let m2 = hmi.formula_product(2);
    let m2ht = ht.formula_product(2);
    let composed = op_compose(&m2, &m2ht)?;
    let closed_form_matches = composed == evaluate_m2_after_m2ht(inst, k1, k2)?;
    let arity3_matches = match components.get(&3) {
        Some(r) => {
            let dm3 = hom_differential(&hmi.formula_product(3), inst.d_b(), inst.d_b())?;
            r.map == dm3.sub(&composed)?
        }
        None => false,
    };
    let verdict = if mu.values().all(MultiMap::is_zero) {
        DeformationVerdict::TriviallyZero
    } else {
        match components.values().find(|r| !r.is_zero()) {
            Some(r) => DeformationVerdict::NotDeformation { arity: r.arity, tuple: r.witness.clone().expect("nonzero").0 },
            None => DeformationVerdict::CocycleThrough(n_max),
        }
    };
    Ok(DeformationReport { verdict, components, closed_form_matches, arity3_matches, method: hmi.method })
}

#[derive(Clone, Debug)]
pub struct MasseyTower {
    pub model: CohomologyModel,
    /// Transferred from the module-induced tower, defect convention, `[0] = 𝖬₁ = 0`.
    pub massey: Vec<MultiMap>,
    /// Transferred from the homotopy-transfer tower.
    pub massey_ht: Vec<MultiMap>,
}

impl MasseyTower {
    pub fn as_tower(&self, ht: bool, k: Option<(Scalar, Scalar)>) -> AInftyTower {
        let products = if ht { self.massey_ht.clone() } else { self.massey.clone() };
        let n = products.len();
        AInftyTower { method: Method::Massey, k, products, expressions: vec![None; n], hypotheses: vec![], notes: vec![] }
    }

    /// `𝖬₂` in the formula convention (equal in both conventions).
    pub fn m2(&self) -> &MultiMap {
        &self.massey[1]
    }

    pub fn m2_ht(&self) -> &MultiMap {
        &self.massey_ht[1]
    }
}

/// Transfers `tower` and the homotopy-transfer tower of `inst` onto `H(B)`
/// and certifies both.
pub fn massey_transfer(inst: &HomotopyData, tower: &AInftyTower, n_max: usize) -> Result<MasseyTower, AnalysisError> {
    tower.certify()?;
    let model = cohomology(inst.b().clone(), inst.d_b())?;
    let ht = ht_tower(inst, n_max)?;
    let lift = |t: &AInftyTower| -> Result<Vec<MultiMap>, AnalysisError> {
        let top = n_max.min(t.max_arity());
        let mut products = vec![MultiMap::zero(1, 1, model.h.clone(), model.h.clone())];
        products.extend(transfer(&t.products[..top], &model.i, &model.p, &model.h_split, top)?);
        let cert = AInftyTower { method: Method::Massey, k: None, products: products.clone(), expressions: vec![None; top], hypotheses: vec![], notes: vec![] };
        cert.certify()?;
        Ok(products)
    };
    Ok(MasseyTower { massey: lift(tower)?, massey_ht: lift(&ht)?, model })
}

/// `m_n` rescaled by `λ^{n−1}` (defect convention preserved).
pub fn rescale_products(products: &[MultiMap], lambda: &Scalar) -> Vec<MultiMap> {
    let mut pow = Scalar::one();
    products
        .iter()
        .map(|m| {
            let out = m.scale(&pow);
            pow = &pow * lambda;
            out
        })
        .collect()
}

/// `m_n ↦ (n−1)·m_n` (formula convention), the tangent to rescaling.
pub fn rescaling_cocycle(tower: &AInftyTower) -> BTreeMap<usize, MultiMap> {
    (2..=tower.max_arity()).map(|n| (n, tower.formula_product(n).scale(&crate::exactlin::q(n as i64 - 1)))).collect()
}

/// Defect-convention view of formula-convention components.
pub fn to_defect(components: &BTreeMap<usize, MultiMap>) -> BTreeMap<usize, MultiMap> {
    components.iter().map(|(n, m)| (*n, to_defect_convention(m, *n))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::q;
    use crate::homotopydata::modify_ha_markl;
    use crate::instances::{catalogue, gen_grassmann_super, gen_interval, gen_perturbed, gen_trivial, PerturbSpec, Side};

    fn interval() -> HomotopyData {
        gen_interval(&catalogue("exterior:1").unwrap()).unwrap()
    }

    #[test]
    fn obstruction_on_plain_instances() {
        for inst in [interval(), gen_trivial(&catalogue("exterior:2").unwrap()).unwrap()] {
            let o = obstruction_class(&inst).unwrap();
            assert!(o.representative.is_zero());
            assert!(o.class_zero);
            assert!(o.verify(&inst).unwrap());
        }
    }

    #[test]
    fn markl_primitive() {
        let base = gen_grassmann_super(1, 2).unwrap();
        let mut spec = PerturbSpec::new(4, &["SC_right"], &[]);
        spec.side = Side::A;
        let inst = gen_perturbed(&base, &spec).unwrap_or(base);
        let fixed = modify_ha_markl(&inst).unwrap();
        let o = obstruction_class(&fixed).unwrap();
        assert!(o.class_zero);
        let ha = fixed.h_a();
        let prim = compose_graded(&compose_graded(ha, ha).unwrap(), fixed.z()).unwrap().scale(&q(-1));
        assert!(o.is_primitive(&fixed, &prim).unwrap());
    }

    #[test]
    fn wedge_of_exterior_is_nonzero() {
        let inst = gen_trivial(&catalogue("exterior:1").unwrap()).unwrap();
        let c = wedge_class(&inst).unwrap();
        assert!(!c.class_zero);
        assert!(c.verify(&inst).unwrap());
    }

    #[test]
    fn strict_morphism_from_sc_tower() {
        let inst = interval();
        for (k1, k2, qi) in [(1, 1, true), (2, 3, true), (1, -1, false)] {
            let (k1, k2) = (q(k1), q(k2));
            let t = hmi_tower_sc(&inst, &k1, &k2, 5).unwrap();
            let a = AInftyTower::from_dga(&inst, 5).unwrap();
            let f1 = inst.z().scale(&(&k1 + &k2));
            let r = check_strict_morphism(&f1, &t, &a, 5).unwrap();
            assert!(r.all_zero());
            assert_eq!(r.quasi_iso, qi);
        }
    }

    #[test]
    fn rescaling_tangent_is_cocycle() {
        for inst in [interval(), gen_grassmann_super(1, 1).unwrap()] {
            let ht = ht_tower(&inst, 5).unwrap();
            let mu = rescaling_cocycle(&ht);
            let d = hochschild_differential(&mu, &ht, 5).unwrap();
            assert!(d.values().all(MultiMap::is_zero));
            let l = rescale_products(&ht.products, &q(3));
            let t = AInftyTower { products: l, ..ht.clone() };
            t.certify().unwrap();
        }
    }

    #[test]
    fn hochschild_zero_and_truncation() {
        let inst = interval();
        let ht = ht_tower(&inst, 3).unwrap();
        let d = hochschild_differential(&BTreeMap::new(), &ht, 4).unwrap();
        assert!(d.values().all(MultiMap::is_zero));
        assert!(matches!(hochschild_differential(&BTreeMap::new(), &ht, 5), Err(AnalysisError::TruncationTooTight { .. })));
    }

    #[test]
    fn deformation_on_interval() {
        let inst = interval();
        let r = check_infinitesimal_deformation(&inst, &q(2), &q(3), 4).unwrap();
        assert!(matches!(r.verdict, DeformationVerdict::NotDeformation { arity: 3, .. }));
        assert!(r.closed_form_matches);
        assert!(r.arity3_matches);
    }

    #[test]
    fn massey_second_product() {
        let inst = interval();
        for (k1, k2) in [(1, -1), (1, 1), (2, 3)] {
            let (k1, k2) = (q(k1), q(k2));
            let t = hmi_tower_sc(&inst, &k1, &k2, 4).unwrap();
            let m = massey_transfer(&inst, &t, 4).unwrap();
            assert_eq!(m.m2(), &m.m2_ht().scale(&(&k1 + &k2)));
        }
    }
}

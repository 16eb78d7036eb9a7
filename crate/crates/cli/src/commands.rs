//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hominduce::analysis::{
    check_infinitesimal_deformation, check_strict_morphism, massey_transfer, obstruction_class, wedge_class, AnalysisError, Certificate, DeformationVerdict,
};
use hominduce::exactlin::{compose_graded, fmt_scalar, parse_scalar, q, GradedMap, Scalar};
use hominduce::homotopydata::{modify_ha_markl, HomotopyData, HomotopyError, CONDITION_NAMES};
use hominduce::instances::{catalogue, gen_grassmann_super, gen_interval, gen_perturbed, gen_trivial, gen_twisted, InstanceError, PerturbSpec, Side};
use hominduce::towers::{hmi_tower_general, hmi_tower_sc, ht_tower, AInftyTower, TowerError, DEFAULT_ARITY};
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::io::{self, FormatError, GeneratorSpec, InstanceFile, TowerFile};
use crate::report::{anchors, tuple_witness, Check, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Generation(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Generation(_) => 1,
            _ => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<HomotopyData, CliError> {
    let f = io::parse_instance(&read(path)?)?;
    instance_from_file(&f)
}

pub fn instance_from_file(f: &InstanceFile) -> Result<HomotopyData, CliError> {
    let parts = io::parts_from_file(f)?;
    let inst = HomotopyData::new(parts).map_err(|e| input(format!("invalid homotopy data: {e}")))?;
    for c in &inst.flags().conditions {
        if let Some(&stored) = f.flags.get(c.name) {
            if stored != c.holds {
                return Err(input(format!("stored flag {} = {stored} disagrees with the data", c.name)));
            }
        }
    }
    Ok(inst)
}

pub fn parse_k(s: &str) -> Result<Scalar, CliError> {
    parse_scalar(s).map_err(|e| input(format!("coefficient {s:?}: {e}")))
}

fn label(p: &Path) -> String {
    p.display().to_string()
}

fn map_witness(m: &GradedMap) -> Option<Value> {
    m.first_nonzero().map(|(j, v)| tuple_witness(&[j], &v))
}

// ---------------------------------------------------------------- gen

fn dga_of(spec: &GeneratorSpec) -> Result<hominduce::instances::Dga, CliError> {
    catalogue(spec.dga.as_deref().unwrap_or("exterior:1")).map_err(input)
}

fn gen_error(e: InstanceError) -> CliError {
    match e {
        InstanceError::EmptyPerturbationSpace | InstanceError::PerturbationExhausted | InstanceError::Infeasible(_) => CliError::Generation(e.to_string()),
        _ => input(e),
    }
}

pub fn cmd_gen(spec: &GeneratorSpec) -> Result<InstanceFile, CliError> {
    let base = || -> Result<HomotopyData, CliError> {
        let path = spec.base.as_ref().ok_or_else(|| input(format!("{} needs a base instance", spec.kind)))?;
        load_instance(Path::new(path))
    };
    let inst = match spec.kind.as_str() {
        "trivial" => gen_trivial(&dga_of(spec)?).map_err(gen_error)?,
        "interval" => gen_interval(&dga_of(spec)?).map_err(gen_error)?,
        "grassmann" | "grassmann_super" => gen_grassmann_super(spec.n.unwrap_or(1), spec.cutoff.unwrap_or(1)).map_err(gen_error)?,
        "perturbed" => {
            let keep: Vec<&str> = spec.keep.iter().map(String::as_str).collect();
            let brk: Vec<&str> = spec.brk.iter().map(String::as_str).collect();
            let mut p = PerturbSpec::new(spec.seed.unwrap_or(0), &keep, &brk);
            p.side = match spec.side.as_deref() {
                None | Some("B") | Some("b") => Side::B,
                Some("A") | Some("a") => Side::A,
                Some(s) => return Err(input(format!("unknown side {s:?}"))),
            };
            gen_perturbed(&base()?, &p).map_err(gen_error)?
        }
        "twisted" => {
            let inst = gen_twisted(&base()?, spec.seed.unwrap_or(0), true).map_err(gen_error)?;
            let keep: Vec<&str> = spec.keep.iter().map(String::as_str).collect();
            let brk: Vec<&str> = spec.brk.iter().map(String::as_str).collect();
            if keep.is_empty() && brk.is_empty() {
                inst
            } else {
                gen_perturbed(&inst, &PerturbSpec::new(spec.seed.unwrap_or(0), &keep, &brk)).map_err(gen_error)?
            }
        }
        k => return Err(input(format!("unknown generator kind {k:?}"))),
    };
    Ok(io::instance_to_file(&inst))
}

// ---------------------------------------------------------------- tower

pub struct TowerArgs {
    pub file: PathBuf,
    pub method: String,
    pub k1: Scalar,
    pub k2: Scalar,
    pub n: usize,
}

pub struct TowerOutcome {
    pub report: Report,
    pub tower: Option<TowerFile>,
}

fn defect_checks(report: &mut Report, tower: &AInftyTower, prefix: &str) -> Result<(), CliError> {
    for n in 1..=tower.max_arity() {
        let d = tower.defect(n).map_err(input)?;
        let mut c = Check::new(format!("{prefix}defect m_{n} = 0"), d.is_zero());
        if let Some((t, v)) = d.first_nonzero() {
            c = c.witness(tuple_witness(&t, &v));
        }
        report.push(c);
    }
    Ok(())
}

fn build_tower(inst: &HomotopyData, method: &str, k1: &Scalar, k2: &Scalar, n: usize) -> Result<AInftyTower, TowerError> {
    match method {
        "ht" => ht_tower(inst, n),
        "hmi-sc" => hmi_tower_sc(inst, k1, k2, n),
        "hmi-general" => hmi_tower_general(inst, k1, k2, n),
        "hmi" if inst.flags().sc() => hmi_tower_sc(inst, k1, k2, n),
        "hmi" => hmi_tower_general(inst, k1, k2, n),
        "dga" => AInftyTower::from_dga(inst, n),
        m => Err(TowerError::PreconditionFailed(format!("unknown method {m:?}"))),
    }
}

fn method_anchor(method: &str) -> &'static str {
    match method {
        "ht" => anchors::HT_ASSOCIATIVE,
        "hmi-general" => anchors::HMI_GENERAL,
        _ => anchors::HMI_SC,
    }
}

/// Runs a builder and turns precondition and defect failures into checks.
fn tower_or_report(report: &mut Report, inst: &HomotopyData, method: &str, k1: &Scalar, k2: &Scalar, n: usize) -> Result<Option<AInftyTower>, CliError> {
    match build_tower(inst, method, k1, k2, n) {
        Ok(t) => {
            report.push(Check::new(format!("{method} hypotheses"), true).detail(t.hypotheses.join(", ")));
            Ok(Some(t))
        }
        Err(TowerError::PreconditionFailed(msg)) if msg.starts_with("unknown method") => Err(input(msg)),
        Err(TowerError::PreconditionFailed(msg)) => {
            report.push(Check::new(format!("{method} hypotheses"), false).detail(msg).anchor(method_anchor(method)));
            Ok(None)
        }
        Err(TowerError::DefectNonzero { n, tuple }) => {
            report.push(Check::new(format!("{method} hypotheses"), true));
            report.push(
                Check::new(format!("defect m_{n} = 0"), false)
                    .witness(json!({ "input": tuple }))
                    .detail("the recursion does not satisfy the A∞ relation at this arity")
                    .anchor(method_anchor(method)),
            );
            Ok(None)
        }
        Err(e @ TowerError::ArityOutOfRange(_)) => Err(input(e)),
        Err(e) => Err(input(e)),
    }
}

pub fn cmd_tower(a: &TowerArgs) -> Result<TowerOutcome, CliError> {
    let inst = load_instance(&a.file)?;
    let mut report = Report::new("tower", vec![label(&a.file)]);
    report.find("method", a.method.clone());
    if a.method != "ht" && a.method != "dga" {
        report.find("k1", fmt_scalar(&a.k1));
        report.find("k2", fmt_scalar(&a.k2));
    }
    let Some(tower) = tower_or_report(&mut report, &inst, &a.method, &a.k1, &a.k2, a.n)? else {
        return Ok(TowerOutcome { report: report.finish(), tower: None });
    };
    defect_checks(&mut report, &tower, "")?;
    let vanishing: Vec<usize> = (3..=tower.max_arity()).filter(|&n| tower.product(n).is_zero()).collect();
    report.find("vanishing higher products", json!(vanishing));
    if a.method == "ht" && inst.flags().get("SC_left_A") {
        let all = (3..=tower.max_arity()).all(|n| tower.product(n).is_zero());
        report.push(Check::new("h_A∘Z = 0 gives m_n^ht = 0 for n ≥ 3", all).anchor(anchors::HT_ASSOCIATIVE));
    }
    if tower.method == hominduce::towers::Method::HmiSc {
        let target = AInftyTower::from_dga(&inst, a.n).map_err(input)?;
        let f1 = inst.z().scale(&(&a.k1 + &a.k2));
        let m = check_strict_morphism(&f1, &tower, &target, a.n).map_err(input)?;
        let mut c = Check::new("f_1 = (k1+k2)Z is a strict A∞ morphism to (A, ∧)", m.all_zero());
        if let Some(r) = m.residuals.iter().find(|r| !r.is_zero()) {
            let (t, v) = r.witness.clone().expect("nonzero residual");
            c = c.witness(json!({ "arity": r.arity, "input": t, "output": io::vec_to_json(&v) }));
        }
        report.push(c.anchor(anchors::STRICT_QI));
        report.find("f_1 quasi-isomorphism", m.quasi_iso);
        report.find("rank of H(f_1)", json!([m.cohomology_rank.0, m.cohomology_rank.1, m.cohomology_rank.2]));
    }
    let file = io::tower_to_file(&tower, tower.max_arity());
    Ok(TowerOutcome { report: report.finish(), tower: Some(file) })
}

// ---------------------------------------------------------------- verify

pub fn cmd_verify(files: &[PathBuf]) -> Result<Report, CliError> {
    let mut files = files.to_vec();
    files.sort();
    let mut report = Report::new("verify", files.iter().map(|p| label(p)).collect());
    for path in &files {
        let text = read(path)?;
        let v: Value = serde_json::from_str(&text).map_err(FormatError::from)?;
        let prefix = format!("{}: ", label(path));
        match v.get("kind").and_then(Value::as_str) {
            Some("tower") => {
                let f: TowerFile = serde_json::from_value(v).map_err(FormatError::from)?;
                let t = io::tower_from_file(&f)?;
                defect_checks(&mut report, &t, &prefix)?;
                let again = io::tower_to_file(&t, f.certified_arities.len());
                report.push(Check::new(format!("{prefix}round trip"), again.products == f.products && again.space == f.space));
            }
            Some("instance") => {
                let f: InstanceFile = serde_json::from_value(v).map_err(FormatError::from)?;
                let parts = io::parts_from_file(&f)?;
                match HomotopyData::new(parts) {
                    Ok(inst) => {
                        report.push(Check::new(format!("{prefix}homotopy data axioms"), true));
                        let stale: Vec<&str> =
                            inst.flags().conditions.iter().filter(|c| f.flags.get(c.name).is_some_and(|&s| s != c.holds)).map(|c| c.name).collect();
                        report.push(Check::new(format!("{prefix}stored flags"), stale.is_empty()).detail(stale.join(", ")));
                        report.push(Check::new(format!("{prefix}round trip"), io::instance_to_file(&inst) == f));
                    }
                    Err(HomotopyError::AxiomViolation { axiom, witness }) => {
                        report.push(Check::new(format!("{prefix}homotopy data axioms"), false).detail(axiom).witness(json!({ "input": witness })));
                    }
                    Err(e) => return Err(input(e)),
                }
            }
            other => return Err(input(format!("{}: unknown file kind {other:?}", label(path)))),
        }
    }
    Ok(report.finish())
}

// ---------------------------------------------------------------- obstruction

pub fn cmd_obstruction(file: &Path, markl: bool) -> Result<Report, CliError> {
    let mut inst = load_instance(file)?;
    let mut report = Report::new("obstruction", vec![label(file)]);
    if markl {
        match modify_ha_markl(&inst) {
            Ok(m) => {
                report.push(Check::new("h_A modification (SC_right)", true));
                inst = m;
            }
            Err(HomotopyError::PreconditionFailed(msg)) => {
                report.push(Check::new("h_A modification (SC_right)", false).detail(msg).anchor(anchors::OBSTRUCTION));
                return Ok(report.finish());
            }
            Err(e) => return Err(input(e)),
        }
    }
    let analysis = |e: AnalysisError| input(e);
    match obstruction_class(&inst) {
        Ok(o) => {
            report.push(Check::new("obstruction certificate", o.verify(&inst).map_err(analysis)?));
            report.find("obstruction class zero", o.class_zero);
            report.find("obstruction representative", map_witness(&o.representative).unwrap_or(Value::Null));
            if markl {
                let ha = inst.h_a();
                let prim = compose_graded(&compose_graded(ha, ha).map_err(input)?, inst.z()).map_err(input)?.scale(&q(-1));
                let ok = o.class_zero && o.is_primitive(&inst, &prim).map_err(analysis)?;
                report.push(Check::new("−h_A∘h_A∘Z is a primitive of the obstruction", ok).anchor(anchors::OBSTRUCTION));
            }
            if let Certificate::Witness(w) = &o.certificate {
                report.find("obstruction witness", json!(w.iter().map(fmt_scalar).collect::<Vec<_>>()));
            }
        }
        Err(AnalysisError::NotClosed(j)) => report.push(Check::new("obstruction representative is closed", false).witness(json!({ "input": [j] }))),
        Err(e) => return Err(analysis(e)),
    }
    let w = wedge_class(&inst).map_err(analysis)?;
    report.push(Check::new("wedge class certificate", w.verify(&inst).map_err(analysis)?));
    report.find("wedge class zero", w.class_zero);
    Ok(report.finish())
}

// ---------------------------------------------------------------- massey

pub fn cmd_massey(file: &Path, k1: &Scalar, k2: &Scalar, n: usize) -> Result<Report, CliError> {
    let inst = load_instance(file)?;
    let mut report = Report::new("massey", vec![label(file)]);
    report.find("k1", fmt_scalar(k1));
    report.find("k2", fmt_scalar(k2));
    let Some(tower) = tower_or_report(&mut report, &inst, "hmi", k1, k2, n)? else {
        return Ok(report.finish());
    };
    let m = match massey_transfer(&inst, &tower, n) {
        Ok(m) => m,
        Err(AnalysisError::Tower(TowerError::DefectNonzero { n, tuple })) => {
            report.push(Check::new(format!("Massey defect 𝖬_{n} = 0"), false).witness(json!({ "input": tuple })));
            return Ok(report.finish());
        }
        Err(e) => return Err(input(e)),
    };
    report.push(Check::new(format!("Massey towers certified through arity {n}"), true));
    report.find("dim H(B)", m.model.h.total_dim());
    report.find("𝖬_2 = 0", m.m2().is_zero());
    report.find("𝖬_2^ht = 0", m.m2_ht().is_zero());
    let s = k1 + k2;
    if s.is_zero() {
        let mut c = Check::new("k1 = −k2 gives 𝖬_2 = 0", m.m2().is_zero());
        if let Some((t, v)) = m.m2().first_nonzero() {
            c = c.witness(tuple_witness(&t, &v));
        }
        report.push(c.anchor(anchors::MASSEY_ZERO));
    }
    if inst.flags().sc() {
        let diff = m.m2().sub(&m.m2_ht().scale(&s)).map_err(input)?;
        let mut c = Check::new("𝖬_2 = (k1+k2)𝖬_2^ht", diff.is_zero());
        if let Some((t, v)) = diff.first_nonzero() {
            c = c.witness(tuple_witness(&t, &v));
        }
        report.push(c.anchor(anchors::STRICT_QI));
    }
    let higher: Vec<usize> = (3..=m.massey.len()).filter(|&i| m.massey[i - 1].is_zero()).collect();
    report.find("vanishing higher Massey products", json!(higher));
    Ok(report.finish())
}

// ---------------------------------------------------------------- hochschild

pub fn cmd_hochschild(file: &Path, k1: &Scalar, k2: &Scalar, n: usize) -> Result<Report, CliError> {
    let inst = load_instance(file)?;
    let mut report = Report::new("hochschild", vec![label(file)]);
    report.find("k1", fmt_scalar(k1));
    report.find("k2", fmt_scalar(k2));
    let d = match check_infinitesimal_deformation(&inst, k1, k2, n) {
        Ok(d) => d,
        Err(AnalysisError::Tower(TowerError::PreconditionFailed(msg))) => {
            report.push(Check::new("module-induced tower hypotheses", false).detail(msg).anchor(anchors::HMI_GENERAL));
            return Ok(report.finish());
        }
        Err(AnalysisError::Tower(TowerError::DefectNonzero { n, tuple })) => {
            report.push(Check::new(format!("module-induced defect m_{n} = 0"), false).witness(json!({ "input": tuple })));
            return Ok(report.finish());
        }
        Err(e) => return Err(input(e)),
    };
    report.find("tower", d.method.name());
    report.push(Check::new("m_2∘m_2^ht equals its closed form", d.closed_form_matches));
    report.push(Check::new("arity-3 component equals ∂m_3 − m_2∘m_2^ht", d.arity3_matches));
    let nonzero: Vec<usize> = d.components.values().filter(|r| !r.is_zero()).map(|r| r.arity).collect();
    report.find("nonzero arities of 𝖽μ", json!(nonzero));
    let c = match &d.verdict {
        DeformationVerdict::NotDeformation { arity, .. } => {
            let r = &d.components[arity];
            let (t, v) = r.witness.clone().expect("nonzero component");
            Check::new("not an infinitesimal deformation", true)
                .detail(format!("𝖽μ is nonzero at arity {arity}"))
                .witness(json!({ "arity": arity, "input": t, "output": io::vec_to_json(&v) }))
        }
        DeformationVerdict::CocycleThrough(k) => {
            Check::new("not an infinitesimal deformation", false).detail(format!("𝖽μ vanishes through arity {k}: μ is a cocycle up to the truncation"))
        }
        DeformationVerdict::TriviallyZero => Check::new("not an infinitesimal deformation", false).detail("μ = 0: the two towers coincide up to the truncation"),
    };
    report.push(c.anchor(anchors::NOT_DEFORMATION));
    Ok(report.finish())
}

// ---------------------------------------------------------------- conditions

pub fn cmd_conditions(file: &Path, require: &[String], forbid: &[String]) -> Result<Report, CliError> {
    for c in require.iter().chain(forbid) {
        if !CONDITION_NAMES.contains(&c.as_str()) {
            return Err(input(format!("unknown condition {c:?}")));
        }
    }
    let inst = load_instance(file)?;
    let mut report = Report::new("conditions", vec![label(file)]);
    let flags = inst.flags();
    let mut values = BTreeMap::new();
    for c in &flags.conditions {
        values.insert(c.name.to_string(), c.holds);
    }
    report.find("flags", json!(values));
    for c in &flags.conditions {
        if let Some(w) = &c.witness {
            report.find(format!("{} witness", c.name), json!({ "map": w.map, "input": [w.basis], "output": io::vec_to_json(&w.image) }));
        }
    }
    for name in require {
        report.push(Check::new(format!("{name} holds"), flags.get(name)));
    }
    for name in forbid {
        report.push(Check::new(format!("{name} fails"), !flags.get(name)));
    }
    Ok(report.finish())
}

pub fn default_arity() -> usize {
    DEFAULT_ARITY
}

//! End-to-end acceptance suite: one line per criterion, exact arithmetic.
//!
//! Criteria listed in `KNOWN_FAILURES` are evaluated at full strength and
//! reported as FAIL; the run fails if any other criterion fails, or if a
//! known failure starts passing.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hominduce::analysis::{check_infinitesimal_deformation, check_strict_morphism, massey_transfer, obstruction_class, DeformationVerdict};
use hominduce::exactlin::{cohomology, compose_graded, graded_commutator, parity_sign, q, GradedMap, GradedSpace, Matrix, Scalar};
use hominduce::exprcalc::evaluate_as;
use hominduce::homotopydata::{modify_h_left, modify_h_right, modify_h_square, modify_h_weak, modify_ha_markl, unit, HomotopyData};
use hominduce::instances::{catalogue, gen_grassmann_super, gen_interval, gen_perturbed, gen_trivial, gen_twisted, PerturbSpec, Side};
use hominduce::multimap::MultiMap;
use hominduce::towers::{
    associator, del_b, general_expressions, hmi_m2, hmi_m2_tilde, hmi_m3, hmi_tower_general, hmi_tower_sc, ht_tower, m2ht, m4_expr, pentagonator, residual_ry,
    sc_recursion_numeric, AInftyTower,
};
use num_traits::{One, Zero};

/// Criteria that cannot hold as stated; see the decisions ledger.
const KNOWN_FAILURES: [usize; 2] = [3, 11];

const SC_PAIRS: [(i64, i64); 5] = [(1, 0), (0, 1), (1, 1), (2, 3), (1, -1)];

type Outcome = Result<(bool, String), String>;
type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Fixture {
    name: &'static str,
    inst: HomotopyData,
}

fn dga(s: &str) -> hominduce::instances::Dga {
    catalogue(s).expect("catalogue entry")
}

fn interval(s: &str) -> HomotopyData {
    gen_interval(&dga(s)).expect("interval instance")
}

fn no_conditions(base: &HomotopyData, seed: u64) -> HomotopyData {
    gen_perturbed(base, &PerturbSpec::new(seed, &[], &["SC_right", "WSC"])).expect("no-condition fixture")
}

fn wsc_only() -> HomotopyData {
    let twisted = gen_twisted(&interval("odd-ideal:1"), 1, true).expect("twisted fixture");
    gen_perturbed(&twisted, &PerturbSpec::new(7, &["WSC"], &["SC_right"])).expect("WSC-only fixture")
}

fn fixtures() -> Vec<Fixture> {
    let mut side_a = PerturbSpec::new(4, &["SC_right"], &[]);
    side_a.side = Side::A;
    let g12 = gen_grassmann_super(1, 2).expect("grassmann(1,2)");
    vec![
        Fixture { name: "trivial exterior:1", inst: gen_trivial(&dga("exterior:1")).expect("trivial") },
        Fixture { name: "trivial exterior:2", inst: gen_trivial(&dga("exterior:2")).expect("trivial") },
        Fixture { name: "interval exterior:1", inst: interval("exterior:1") },
        Fixture { name: "interval dual", inst: interval("dual") },
        Fixture { name: "interval odd-ideal:1", inst: interval("odd-ideal:1") },
        Fixture { name: "grassmann(1,1)", inst: gen_grassmann_super(1, 1).expect("grassmann(1,1)") },
        Fixture { name: "grassmann(1,2) perturbed h_A", inst: gen_perturbed(&g12, &side_a).expect("side A fixture") },
        Fixture { name: "no conditions over exterior:1", inst: no_conditions(&interval("exterior:1"), 3) },
        Fixture { name: "no conditions over odd-ideal:1", inst: no_conditions(&interval("odd-ideal:1"), 3) },
        Fixture { name: "WSC only (twisted odd-ideal:1)", inst: wsc_only() },
    ]
}

fn no_condition_fixtures(all: &[Fixture]) -> Vec<&Fixture> {
    all.iter().filter(|f| !f.inst.flags().wsc() && !f.inst.flags().get("SC_right") && !f.inst.flags().sc()).collect()
}

fn kq(k: (i64, i64)) -> (Scalar, Scalar) {
    (q(k.0), q(k.1))
}

fn zero_diff(a: &MultiMap, b: &MultiMap) -> Result<bool, String> {
    Ok(a.sub(b).map_err(err)?.is_zero())
}

fn all_defects_zero(t: &AInftyTower) -> Result<bool, String> {
    for n in 1..=t.max_arity() {
        if !t.defect(n).map_err(err)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ------------------------------------------------------------ criteria

fn c01() -> Outcome {
    let start = Instant::now();
    let insts = [gen_trivial(&dga("exterior:1")).map_err(err)?, interval("exterior:1"), gen_grassmann_super(1, 1).map_err(err)?];
    for inst in &insts {
        let t = ht_tower(inst, 6).map_err(err)?;
        if !all_defects_zero(&t)? {
            return Ok((false, format!("nonzero defect on {}", inst.provenance().generator)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((secs < 30.0, format!("3 instances, n ≤ 6, {secs:.2} s")))
}

fn c02() -> Outcome {
    let mut count = 0;
    for inst in [interval("exterior:1"), gen_grassmann_super(1, 1).map_err(err)?] {
        for k in SC_PAIRS {
            let (k1, k2) = kq(k);
            let t = hmi_tower_sc(&inst, &k1, &k2, 6).map_err(|e| format!("{k:?}: {e}"))?;
            if !all_defects_zero(&t)? {
                return Ok((false, format!("{k:?}: nonzero defect")));
            }
            count += 1;
        }
    }
    Ok((true, format!("{count} towers, n ≤ 6")))
}

fn c03(all: &[Fixture]) -> Outcome {
    let wsc = wsc_only();
    let f = wsc.flags();
    if !f.wsc() || f.get("SC_right") {
        return Ok((false, "WSC-only fixture has the wrong flags".into()));
    }
    let first = match hmi_tower_general(&wsc, &q(1), &q(1), 5) {
        Ok(t) => all_defects_zero(&t)?,
        Err(_) => false,
    };
    let mut lines = vec![format!("WSC-only (1,1): {}", if first { "certified" } else { "FAILED" })];
    let mut second = true;
    for fx in no_condition_fixtures(all) {
        let ok = match hmi_tower_general(&fx.inst, &q(1), &q(-1), 5) {
            Ok(t) => all_defects_zero(&t)?,
            Err(e) => {
                lines.push(format!("{} (1,-1): {e}", fx.name));
                false
            }
        };
        if ok {
            lines.push(format!("{} (1,-1): certified", fx.name));
        }
        second &= ok;
    }
    Ok((first && second, lines.join("; ")))
}

fn c04(all: &[Fixture]) -> Outcome {
    let pairs = [(1, 0), (0, 1), (1, 1), (2, 3), (1, -1), (-1, -1), (3, -2)];
    for fx in all {
        let ht = m2ht(&fx.inst).map_err(err)?;
        for k in pairs {
            let (k1, k2) = kq(k);
            let (m2, _) = hmi_m2(&fx.inst, &k1, &k2).map_err(err)?;
            let (mt, _) = hmi_m2_tilde(&fx.inst, &k1, &k2).map_err(err)?;
            let rhs = m2.sub(&ht.scale(&(&k1 + &k2))).map_err(err)?;
            if !zero_diff(&del_b(&fx.inst, &mt).map_err(err)?, &rhs)? {
                return Ok((false, format!("{} {k:?}", fx.name)));
            }
        }
    }
    Ok((true, format!("{} fixtures × {} pairs", all.len(), pairs.len())))
}

fn c05(all: &[Fixture]) -> Outcome {
    let nc = no_condition_fixtures(all);
    for fx in &nc {
        let inst = &fx.inst;
        for k in [(2, 3), (1, 1), (1, -1), (-2, 5)] {
            let (k1, k2) = kq(k);
            let (m2, _) = hmi_m2(inst, &k1, &k2).map_err(err)?;
            let (m3, _) = hmi_m3(inst, &k1, &k2).map_err(err)?;
            if !zero_diff(&del_b(inst, &m3).map_err(err)?, &associator(&m2).map_err(err)?)? {
                return Ok((false, format!("{} {k:?}: ∂m₃ ≠ Ass", fx.name)));
            }
            let pen = pentagonator(&m2, &m3).map_err(err)?;
            let ry = residual_ry(inst, &k1, &k2).map_err(err)?.0;
            let m4 = evaluate_as(&m4_expr(&k1, &k2), inst, 4, -2).map_err(err)?;
            if !zero_diff(&del_b(inst, &m4).map_err(err)?, &pen.add(&ry).map_err(err)?)? {
                return Ok((false, format!("{} {k:?}: ∂m₄ ≠ Pen + r_Y", fx.name)));
            }
        }
    }
    let mut nonzero_seen = false;
    for fx in all {
        let inst = &fx.inst;
        for k in [(0, 3), (2, 0), (2, -2), (1, -1)] {
            let (k1, k2) = kq(k);
            if !residual_ry(inst, &k1, &k2).map_err(err)?.0.is_zero() {
                return Ok((false, format!("{} {k:?}: r_Y ≠ 0", fx.name)));
            }
        }
        let generic = residual_ry(inst, &q(2), &q(3)).map_err(err)?.0;
        if inst.flags().wsc() && !generic.is_zero() {
            return Ok((false, format!("{}: r_Y ≠ 0 under WSC", fx.name)));
        }
        nonzero_seen |= !generic.is_zero();
    }
    Ok((nonzero_seen, format!("{} no-condition fixtures; r_Y vanishing cases on {} fixtures; r_Y nonzero somewhere: {nonzero_seen}", nc.len(), all.len())))
}

fn c06(all: &[Fixture]) -> Outcome {
    let mut count = 0;
    for fx in all.iter().filter(|f| f.inst.flags().get("SC_left_A")) {
        let t = ht_tower(&fx.inst, 6).map_err(err)?;
        if let Some(n) = (3..=6).find(|&n| !t.product(n).is_zero()) {
            return Ok((false, format!("{}: m_{n}^ht ≠ 0", fx.name)));
        }
        count += 1;
    }
    Ok((count > 0, format!("{count} fixtures with h_A∘Z = 0")))
}

fn c07(all: &[Fixture]) -> Outcome {
    let mut count = 0;
    for fx in all.iter().filter(|f| f.inst.flags().get("ZYZ")) {
        let t = ht_tower(&fx.inst, 6).map_err(err)?;
        for n in 2..=6 {
            if !del_b(&fx.inst, &t.formula_product(n)).map_err(err)?.is_zero() {
                return Ok((false, format!("{}: ∂m_{n}^ht ≠ 0", fx.name)));
            }
        }
        count += 1;
    }
    Ok((count > 0, format!("{count} fixtures with ZYZ = Z")))
}

type Modifier = fn(&HomotopyData) -> Result<HomotopyData, hominduce::homotopydata::HomotopyError>;

fn homotopy_relation(inst: &HomotopyData) -> Result<bool, String> {
    let yz = compose_graded(inst.y(), inst.z()).map_err(err)?;
    let lhs = GradedMap::identity(inst.b().clone()).sub(&yz).map_err(err)?;
    Ok(lhs.sub(&graded_commutator(inst.d_b(), inst.h_b()).map_err(err)?).map_err(err)?.is_zero())
}

fn c08() -> Outcome {
    let bases: Vec<HomotopyData> = ["exterior:1", "exterior:2", "dual", "trunc:2", "odd:1", "odd-ideal:1"]
        .iter()
        .map(|s| interval(s))
        .chain([gen_grassmann_super(1, 1).map_err(err)?, gen_grassmann_super(1, 2).map_err(err)?])
        .chain(gen_twisted(&interval("odd-ideal:1"), 1, true).ok())
        .collect();
    let cases: [(&str, Modifier, &str, &[&str]); 4] =
        [("right", modify_h_right, "SC_right", &[]), ("left", modify_h_left, "SC_left", &[]), ("weak", modify_h_weak, "WSC", &[]), ("square", modify_h_square, "SC_sq", &["WSC"])];
    let mut lines = vec![];
    let mut ok = true;
    for (name, modify, target, keep) in cases {
        let mut done = 0;
        let mut seen: Vec<GradedMap> = vec![];
        'outer: for seed in 0..40u64 {
            for base in &bases {
                let Ok(fx) = gen_perturbed(base, &PerturbSpec::new(seed, keep, &[target])) else { continue };
                if seen.iter().any(|h| h.source().total_dim() == fx.h_b().source().total_dim() && h.sub(fx.h_b()).map(|d| d.is_zero()).unwrap_or(false)) {
                    continue;
                }
                let Ok(out) = modify(&fx) else { continue };
                seen.push(fx.h_b().clone());
                if !out.flags().get(target) || !homotopy_relation(&out)? {
                    return Ok((false, format!("modify_h_{name}: target {target} or homotopy relation fails (seed {seed})")));
                }
                done += 1;
                if done == 20 {
                    break 'outer;
                }
            }
        }
        ok &= done >= 20;
        lines.push(format!("{name}: {done}"));
    }
    Ok((ok, format!("fixtures per modification: {}", lines.join(", "))))
}

fn c09() -> Outcome {
    let mut count = 0;
    for base in [interval("exterior:1"), interval("exterior:2"), gen_grassmann_super(1, 1).map_err(err)?, gen_grassmann_super(1, 2).map_err(err)?] {
        for seed in 0..4u64 {
            let mut spec = PerturbSpec::new(seed, &["SC_right"], &[]);
            spec.side = Side::A;
            let Ok(fx) = gen_perturbed(&base, &spec) else { continue };
            let fixed = modify_ha_markl(&fx).map_err(err)?;
            let o = obstruction_class(&fixed).map_err(err)?;
            let ha = fixed.h_a();
            let prim = compose_graded(&compose_graded(ha, ha).map_err(err)?, fixed.z()).map_err(err)?.scale(&q(-1));
            if !o.class_zero || !o.verify(&fixed).map_err(err)? || !o.is_primitive(&fixed, &prim).map_err(err)? {
                return Ok((false, format!("seed {seed}: primitive −h_A∘h_A∘Z does not verify")));
            }
            count += 1;
        }
    }
    Ok((count > 0, format!("{count} SC_right fixtures")))
}

fn c10() -> Outcome {
    let mut count = 0;
    for inst in [interval("exterior:1"), gen_grassmann_super(1, 1).map_err(err)?] {
        let target = AInftyTower::from_dga(&inst, 6).map_err(err)?;
        for k in SC_PAIRS.iter().copied().chain([(-1, 1), (3, -3), (-1, -1)]) {
            let (k1, k2) = kq(k);
            let t = hmi_tower_sc(&inst, &k1, &k2, 6).map_err(err)?;
            let f1 = inst.z().scale(&(&k1 + &k2));
            let r = check_strict_morphism(&f1, &t, &target, 6).map_err(err)?;
            if !r.all_zero() {
                return Ok((false, format!("{k:?}: nonzero residual")));
            }
            if r.quasi_iso == (&k1 + &k2).is_zero() {
                return Ok((false, format!("{k:?}: quasi-iso = {}", r.quasi_iso)));
            }
            count += 1;
        }
    }
    Ok((true, format!("{count} towers, n ≤ 6")))
}

fn c11() -> Outcome {
    let inst = interval("exterior:1");
    let mut generic_ok = true;
    let mut lines = vec![];
    for k in [(2, 3), (1, 2), (3, 1), (2, -1), (1, 0)] {
        let (k1, k2) = kq(k);
        let d = check_infinitesimal_deformation(&inst, &k1, &k2, 4).map_err(err)?;
        let arity3 = matches!(d.verdict, DeformationVerdict::NotDeformation { arity: 3, .. });
        generic_ok &= arity3 && d.closed_form_matches && d.arity3_matches;
    }
    lines.push(format!("generic pairs: {}", if generic_ok { "nonzero at arity 3, witness matches closed form" } else { "FAILED" }));
    let d = check_infinitesimal_deformation(&inst, &q(-1), &q(-1), 4).map_err(err)?;
    let special = matches!(d.verdict, DeformationVerdict::NotDeformation { arity: 4, .. });
    lines.push(format!("(-1,-1): {:?}", d.verdict));
    let d = check_infinitesimal_deformation(&inst, &q(1), &q(1), 4).map_err(err)?;
    lines.push(format!("(1,1): {:?}", d.verdict));
    Ok((generic_ok && special, lines.join("; ")))
}

fn c12() -> Outcome {
    let mut count = 0;
    for inst in [interval("exterior:1"), gen_grassmann_super(1, 1).map_err(err)?] {
        for k in SC_PAIRS.iter().copied().chain([(2, -2), (-1, -1)]) {
            let (k1, k2) = kq(k);
            let t = hmi_tower_sc(&inst, &k1, &k2, 5).map_err(err)?;
            let m = massey_transfer(&inst, &t, 5).map_err(err)?;
            let s = &k1 + &k2;
            if !zero_diff(m.m2(), &m.m2_ht().scale(&s))? {
                return Ok((false, format!("{k:?}: 𝖬₂ ≠ (k1+k2)𝖬₂ʰᵗ")));
            }
            if m.m2().is_zero() != (s.is_zero() || m.m2_ht().is_zero()) {
                return Ok((false, format!("{k:?}: 𝖬₂ = 0 is {}", m.m2().is_zero())));
            }
            for tower in [m.as_tower(false, None), m.as_tower(true, None)] {
                if tower.max_arity() < 5 || !all_defects_zero(&tower)? {
                    return Ok((false, format!("{k:?}: Massey tower not certified to 5")));
                }
            }
            count += 1;
        }
    }
    Ok((true, format!("{count} coefficient pairs, both towers to n = 5")))
}

// Numeric oracle for the general recursion, on slot-decorated components.

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Z,
    Hb,
    Free,
}

#[derive(Clone)]
struct Comp {
    map: MultiMap,
    kinds: Vec<Kind>,
}

fn graft(outer: &[Comp], inner: &[Comp], hb: bool) -> Result<Vec<Comp>, String> {
    let mut out = vec![];
    for o in outer {
        let slots: Vec<usize> = if hb {
            let h: Vec<usize> = (0..o.kinds.len()).filter(|&s| o.kinds[s] == Kind::Hb).collect();
            if h.is_empty() {
                (0..o.kinds.len()).filter(|&s| o.kinds[s] == Kind::Free).collect()
            } else {
                h
            }
        } else {
            (0..o.kinds.len()).filter(|&s| o.kinds[s] == Kind::Z).collect()
        };
        let i = o.kinds.len() as i64;
        for s in slots {
            for g in inner {
                let k = g.kinds.len() as i64;
                let j = s as i64;
                let map = o.map.compose_at(s, &g.map).map_err(err)?.scale(&parity_sign(j + i + k * (i - j - 1)));
                let kinds = o.kinds[..s].iter().chain(&g.kinds).chain(&o.kinds[s + 1..]).copied().collect();
                out.push(Comp { map, kinds });
            }
        }
    }
    Ok(out)
}

fn oracle_general(inst: &HomotopyData, k1: &Scalar, k2: &Scalar, n: usize) -> Result<Vec<MultiMap>, String> {
    let b = inst.b().clone();
    let (z, h) = (inst.z(), inst.h_b());
    let sgn = |j: usize| parity_sign(b.degree_of(j) as i64);
    let lz = MultiMap::from_fn(2, 0, b.clone(), b.clone(), |t| inst.lact_vec(&z.column(t[0]), &unit(t[1])).expect("Z lands in Im Z"));
    let rz = MultiMap::from_fn(2, 0, b.clone(), b.clone(), |t| inst.ract_vec(&unit(t[0]), &z.column(t[1])).expect("Z lands in Im Z"));
    let lt = MultiMap::from_fn(2, -1, b.clone(), b.clone(), |t| {
        let v = inst.lact_vec(&z.column(t[0]), &h.column(t[1])).expect("Z lands in Im Z");
        v.into_iter().map(|(i, x)| (i, x * sgn(t[0]))).collect()
    });
    let rt = MultiMap::from_fn(2, -1, b.clone(), b.clone(), |t| inst.ract_vec(&h.column(t[0]), &z.column(t[1])).expect("Z lands in Im Z"));
    let m2 = vec![Comp { map: lz.scale(k1), kinds: vec![Kind::Z, Kind::Free] }, Comp { map: rz.scale(k2), kinds: vec![Kind::Free, Kind::Z] }];
    let mt = vec![Comp { map: lt.scale(k1), kinds: vec![Kind::Z, Kind::Hb] }, Comp { map: rt.scale(k2), kinds: vec![Kind::Hb, Kind::Z] }];
    let sum = |cs: &[Comp], arity: usize, degree: i32| {
        let mut acc = MultiMap::zero(arity, degree, b.clone(), b.clone());
        for c in cs {
            acc.add_assign_scaled(&c.map, &Scalar::one());
        }
        acc
    };
    let mut out = vec![sum(&m2, 2, 0)];
    let mut prev = m2;
    for arity in 3..=n {
        let mut next = graft(&mt, &prev, false)?;
        next.extend(graft(&prev, &mt, true)?);
        out.push(sum(&next, arity, 2 - arity as i32));
        prev = next;
    }
    Ok(out)
}

fn brute_force_cohomology(space: &std::sync::Arc<GradedSpace>, d: &GradedMap) -> Vec<(i32, usize)> {
    let g = d.to_global();
    let cols = |deg: i32| -> Matrix {
        let idx: Vec<usize> = (0..space.total_dim()).filter(|&j| space.degree_of(j) == deg).collect();
        Matrix::from_columns(g.rows(), &idx.iter().map(|&j| g.column(j)).collect::<Vec<_>>())
    };
    space.support().into_iter().map(|k| (k, space.dim(k) - cols(k).rank() - if space.dim(k - 1) > 0 { cols(k - 1).rank() } else { 0 })).collect()
}

fn c13(all: &[Fixture]) -> Outcome {
    let mut checks = 0;
    for fx in all {
        let inst = &fx.inst;
        for k in [(1, 1), (2, 3), (1, -1), (0, 2)] {
            let (k1, k2) = kq(k);
            let (exprs, _) = general_expressions(&k1, &k2, 4);
            let direct = oracle_general(inst, &k1, &k2, 4)?;
            for n in [3, 4] {
                let symbolic = evaluate_as(&exprs[n - 2], inst, n, 2 - n as i32).map_err(err)?;
                if !zero_diff(&symbolic, &direct[n - 2])? {
                    return Ok((false, format!("{} {k:?}: general m_{n} differs", fx.name)));
                }
                checks += 1;
            }
            if inst.flags().sc() {
                let t = hmi_tower_sc(inst, &k1, &k2, 4).map_err(err)?;
                let direct = sc_recursion_numeric(inst, &k1, &k2, 4).map_err(err)?;
                for n in [3, 4] {
                    if !zero_diff(&t.formula_product(n), &direct[n - 2])? {
                        return Ok((false, format!("{} {k:?}: SC m_{n} differs", fx.name)));
                    }
                    checks += 1;
                }
            }
        }
        for (space, d) in [(inst.a(), inst.d_a()), (inst.b(), inst.d_b())] {
            let model = cohomology(space.clone(), d).map_err(err)?;
            for (k, dim) in brute_force_cohomology(space, d) {
                if model.h.dim(k) != dim {
                    return Ok((false, format!("{}: dim H^{k} = {} but brute force gives {dim}", fx.name, model.h.dim(k))));
                }
            }
            checks += 1;
        }
    }
    Ok((true, format!("{checks} comparisons on {} fixtures", all.len())))
}

fn run_batch(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let bin = env!("CARGO_BIN_EXE_hominduce");
    std::fs::create_dir_all(dir).map_err(err)?;
    let p = |f: &str| dir.join(f).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["gen".into(), "interval".into(), "--dga".into(), "exterior:1".into(), "-o".into(), p("i.json")],
        vec!["gen".into(), "perturbed".into(), "--base".into(), p("i.json"), "--seed".into(), "3".into(), "--break".into(), "SC_right,WSC".into(), "-o".into(), p("n.json")],
        vec!["tower".into(), p("i.json"), "--method".into(), "hmi-sc".into(), "--k1".into(), "2".into(), "--k2".into(), "3".into(), "-N".into(), "5".into(), "-o".into(), p("t.json")],
        vec!["tower".into(), p("i.json"), "--method".into(), "ht".into(), "-N".into(), "5".into()],
        vec!["tower".into(), p("n.json"), "--method".into(), "hmi-general".into(), "--k1".into(), "1".into(), "--k2".into(), "-1".into(), "-N".into(), "4".into()],
        vec!["verify".into(), p("t.json"), p("i.json")],
        vec!["massey".into(), p("i.json"), "--k1".into(), "1".into(), "--k2".into(), "-1".into(), "-N".into(), "4".into()],
        vec!["hochschild".into(), p("i.json"), "--k1".into(), "2".into(), "--k2".into(), "3".into(), "-N".into(), "4".into()],
        vec!["obstruction".into(), p("n.json")],
        vec!["conditions".into(), p("n.json")],
    ];
    let mut out = vec![];
    for (idx, args) in steps.iter().enumerate() {
        let o = Command::new(bin).args(args).current_dir(dir).output().map_err(err)?;
        if o.status.code().is_none_or(|c| c > 1) {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
        }
        // paths differ between the two runs; compare with the directory stripped
        let text = String::from_utf8_lossy(&o.stdout).replace(&dir.display().to_string(), "<dir>");
        out.push((format!("step {idx}"), text.into_bytes()));
    }
    for f in ["i.json", "n.json", "t.json"] {
        let text = std::fs::read_to_string(dir.join(f)).map_err(err)?.replace(&dir.display().to_string(), "<dir>");
        out.push((f.to_string(), text.into_bytes()));
    }
    Ok(out)
}

fn c14() -> Outcome {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&root);
    let a = run_batch(&root.join("run1"))?;
    let b = run_batch(&root.join("run2"))?;
    let differing: Vec<&String> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| &x.0).collect();
    Ok((differing.is_empty() && a.len() == b.len(), format!("{} reports and files compared byte for byte; differing: {differing:?}", a.len())))
}

fn main() {
    let all = fixtures();
    let criteria: Vec<Criterion> = vec![
        (1, "ht towers certified to arity 6", Box::new(c01)),
        (2, "module-induced SC towers certified to arity 6", Box::new(c02)),
        (3, "general module-induced towers certified to arity 5", Box::new(|| c03(&all))),
        (4, "∂m̃₂ = m₂ − (k₁+k₂)m₂ʰᵗ", Box::new(|| c04(&all))),
        (5, "∂m₃ = Ass, ∂m₄ = Pen + r_Y, r_Y vanishing cases", Box::new(|| c05(&all))),
        (6, "m_n^ht = 0 for n ≥ 3 when h_A∘Z = 0", Box::new(|| c06(&all))),
        (7, "∂m_n^ht = 0 when ZYZ = Z", Box::new(|| c07(&all))),
        (8, "homotopy modifications reach their targets", Box::new(c08)),
        (9, "obstruction removal with primitive −h_A∘h_A∘Z", Box::new(c09)),
        (10, "f₁ = (k₁+k₂)Z strict morphism, quasi-iso iff k₁ ≠ −k₂", Box::new(c10)),
        (11, "Hochschild differential of the deformation", Box::new(c11)),
        (12, "Massey products", Box::new(c12)),
        (13, "symbolic vs direct recursion, cohomology vs brute force", Box::new(|| c13(&all))),
        (14, "byte-identical reports across runs", Box::new(c14)),
    ];
    let mut unexpected = vec![];
    for (id, title, run) in &criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.contains(id);
        let tag = match (pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (expected failure)",
        };
        println!("criterion {id:2} {tag}: {title} [{detail}] ({:.1} s)", start.elapsed().as_secs_f64());
        if pass == known {
            unexpected.push(*id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria as expected ({} known failures: {KNOWN_FAILURES:?})", KNOWN_FAILURES.len());
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}

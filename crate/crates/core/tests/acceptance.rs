//! Acceptance criteria, one line per criterion.

use std::process::Command;
use std::time::Instant;

use hamjet::connections::Geometry;
use hamjet::curvature::CurvatureData;
use hamjet::field;
use hamjet::space::{HamiltonSpace, BUNDLED};
use hamjet::tensor::{DTensor, S_DOWN, S_UP, T_DOWN};
use hamjet::verify::{run_checks, run_suite, Check, IdentityResult, SampleConfig, Suite};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cfg(count: usize) -> SampleConfig {
    SampleConfig { count, ..Default::default() }
}

fn valid_spaces() -> Vec<HamiltonSpace> {
    BUNDLED
        .iter()
        .map(|n| HamiltonSpace::bundled(n).unwrap())
        .filter(|s| s.fault.is_none())
        .collect()
}

fn space(name: &str) -> HamiltonSpace {
    HamiltonSpace::bundled(name).unwrap()
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn worst(results: &[IdentityResult]) -> f64 {
    results.iter().fold(0.0, |m, r| m.max(r.max_abs_residual))
}

/// Max |lhs - rhs| over `count` seeded points.
fn gap(space: &HamiltonSpace, name: &str, lhs: DTensor, rhs: DTensor, count: usize) -> Result<f64, String> {
    let r = run_checks(space, &[Check::tensors(name, name, lhs, rhs)], &cfg(count)).map_err(|e| e.to_string())?;
    Ok(r[0].max_abs_residual)
}

fn bounded(space: &HamiltonSpace, name: &str, lhs: DTensor, rhs: DTensor, tol: f64) -> Result<f64, String> {
    let g = gap(space, name, lhs, rhs, 100)?;
    require(g < tol, || format!("{name} on {}: residual {g:e} >= {tol:e}", space.name))?;
    Ok(g)
}

fn ac1() -> Outcome {
    let mut max = 0.0f64;
    let spaces = valid_spaces();
    for s in &spaces {
        let r = run_suite(s, Suite::Metricity, &cfg(100), 1.0).map_err(|e| e.to_string())?;
        require(r.len() == 6, || format!("{}: {} metricity results", s.name, r.len()))?;
        for x in &r {
            require(x.max_abs_residual < 1e-9, || format!("{} on {}: {:e}", x.identity, s.name, x.max_abs_residual))?;
        }
        max = max.max(worst(&r));
    }
    Ok(format!("6 metricity identities on {} spaces, 100 points, max residual {max:e}", spaces.len()))
}

fn ac2() -> Outcome {
    let mut max = 0.0f64;
    let mut names = Vec::new();
    for s in valid_spaces().iter().filter(|s| s.m >= 2) {
        let geo = Geometry::new(s);
        let corollary = geo.nonlinear.n2_corollary.clone().ok_or("missing corollary form")?;
        max = max.max(bounded(s, "N2", geo.nonlinear.n2_general.clone(), corollary, 1e-9)?);
        names.push(s.name.clone());
    }
    Ok(format!("general N2 = corollary N2 on {}, max residual {max:e}", names.join(", ")))
}

fn ac3() -> Outcome {
    let (mut closed, mut c_max) = (0.0f64, 0.0f64);
    for s in valid_spaces().iter().filter(|s| s.m >= 2) {
        let cc = Geometry::new(s).cartan;
        closed = closed.max(bounded(s, "A", cc.a.clone(), cc.a_general.clone(), 1e-10)?);
        closed = closed.max(bounded(s, "H", cc.h.clone(), cc.h_general.clone(), 1e-10)?);
        let zero = DTensor::zeros("0", &cc.c.slots, s.m, s.n);
        require(cc.c.is_structurally_zero(), || format!("C not structurally zero on {}", s.name))?;
        c_max = c_max.max(bounded(s, "C general", cc.c_general.clone(), zero, 1e-12)?);
    }
    Ok(format!("A, H closed = general (max {closed:e}); C = 0 (general form max {c_max:e})"))
}

fn ac4() -> Outcome {
    let mut max = 0.0f64;
    for name in ["sphere2", "sphere2_u"] {
        let s = space(name);
        let r = run_suite(&s, Suite::Oracle, &cfg(50), 1.0).map_err(|e| e.to_string())?;
        for id in ["oracle: Gamma", "oracle: Rfrak"] {
            let x = r.iter().find(|x| x.identity == id).ok_or(format!("{id} missing"))?;
            require(x.max_abs_residual < 1e-6, || format!("{id} on {name}: {:e}", x.max_abs_residual))?;
            max = max.max(x.max_abs_residual);
        }
    }
    let s = space("sphere2");
    let geo = Geometry::new(&s);
    let curv = CurvatureData::new(&geo);
    let ricci_gap = bounded(&s, "R_ij - g_ij", curv.ricci.get("R_ij").clone(), geo.g_lower.clone(), 1e-6)?;
    let sc = DTensor::scalar("Sc", curv.ricci.scalars.sc.clone(), s.m, s.n);
    let two = DTensor::scalar("2", 2.0.into(), s.m, s.n);
    let sc_gap = bounded(&s, "Sc - 2", sc, two, 1e-6)?;
    Ok(format!(
        "symbolic vs numeric oracle max {max:e}; unit sphere |R_ij - g_ij| {ricci_gap:e}, |Sc - 2| {sc_gap:e}"
    ))
}

fn ac5() -> Outcome {
    let mut max = 0.0f64;
    for name in ["m1sphere", "sphere2_u", "timewarp"] {
        let s = space(name);
        let d = field::deflections(&Geometry::new(&s));
        max = max.max(bounded(&s, "Delta_t", d.metrical_t.clone(), d.closed_t.clone(), 1e-9)?);
        max = max.max(bounded(&s, "Delta_x", d.metrical_x.clone(), d.closed_x.clone(), 1e-9)?);
        max = max.max(bounded(&s, "theta", d.metrical_v.clone(), d.closed_v.clone(), 1e-9)?);
    }
    let mut exact = 0;
    for s in valid_spaces().iter().filter(|s| s.m >= 2) {
        let geo = Geometry::new(s);
        let d = field::deflections(&geo);
        let block = DTensor::from_fn("", &[S_UP, S_UP, T_DOWN, T_DOWN], s.m, s.n, |ix| geo.h(ix[2], ix[3]) * geo.g_inv(ix[0], ix[1]));
        let g = gap(s, "theta = h g", d.metrical_v.clone(), block, 100)?;
        require(g == 0.0, || format!("theta - h g = {g:e} on {}", s.name))?;
        exact += 1;
    }
    Ok(format!("closed forms on m1sphere, sphere2_u, timewarp max {max:e}; theta = h_ab g^ij exactly on {exact} spaces"))
}

fn ac6() -> Outcome {
    let mut max = 0.0f64;
    let mut f_max = 0.0f64;
    for name in ["sphere2_u", "m1sphere"] {
        let s = space(name);
        let r = run_suite(&s, Suite::Maxwell, &cfg(100), 1.0).map_err(|e| e.to_string())?;
        require(r.len() == 3, || format!("{} maxwell groups on {name}", r.len()))?;
        for x in &r {
            require(x.max_abs_residual < 1e-8, || format!("{} on {name}: {:e}", x.identity, x.max_abs_residual))?;
        }
        max = max.max(worst(&r));
        let geo = Geometry::new(&s);
        let em = field::em_field(&geo, &field::deflections(&geo));
        let zero = DTensor::zeros("0", &em.f_vertical.slots, s.m, s.n);
        f_max = f_max.max(bounded(&s, "f", em.f_vertical, zero, 1e-12)?);
    }
    Ok(format!("3 groups on sphere2_u and m1sphere, 100 points, max {max:e}; |f| max {f_max:e}"))
}

fn ac7() -> Outcome {
    let s = space("sphere2");
    let geo = Geometry::new(&s);
    let curv = CurvatureData::new(&geo);
    let e = field::einstein(&geo, &curv, 1.0).map_err(|e| e.to_string())?;
    let t = |name: &str| e.block(name).map(|b| b.lhs.clone()).ok_or(format!("no block {name}"));
    let (m, n) = (s.m, s.n);
    let t_ij = bounded(&s, "T_ij", t("T_ij")?, DTensor::zeros("", &[S_DOWN, S_DOWN], m, n), 1e-8)?;
    let t_ab = bounded(&s, "T_ab", t("T_ab")?, geo.h_lower.map("", |_, x| -x), 1e-10)?;
    let minus_hg = DTensor::from_fn("", &[S_UP, S_UP, T_DOWN, T_DOWN], m, n, |ix| -(geo.h(ix[2], ix[3]) * geo.g_inv(ix[0], ix[1])));
    let t_v = bounded(&s, "T^(i)(j)_(a)(b)", t("T^(i)(j)_(a)(b)")?, minus_hg, 1e-10)?;

    let tw = space("timewarp");
    let geo = Geometry::new(&tw);
    let curv = CurvatureData::new(&geo);
    let e = field::einstein(&geo, &curv, 1.0).map_err(|e| e.to_string())?;
    let mut compat = 0.0f64;
    let mut names = Vec::new();
    for b in e.compatibility() {
        let zero = DTensor::zeros("", &b.lhs.slots, tw.m, tw.n);
        compat = compat.max(bounded(&tw, b.name, b.lhs.clone(), zero, 1e-10)?);
        names.push(b.name);
    }
    require(names.len() == 5, || format!("expected 5 compatibility blocks, got {names:?}"))?;
    Ok(format!(
        "sphere2: |T_ij| {t_ij:e}, |T_ab + h_ab| {t_ab:e}, |T^(i)(j)_(a)(b) + h_ab g^ij| {t_v:e}; timewarp compatibility {} max {compat:e}",
        names.join(", ")
    ))
}

fn ac8() -> Outcome {
    let mut max = 0.0f64;
    for name in ["flat2x2", "sphere2"] {
        let s = space(name);
        let r = run_suite(&s, Suite::Conservation, &cfg(100), 1.0).map_err(|e| e.to_string())?;
        require(r.len() == 2, || format!("{} laws on {name}", r.len()))?;
        for x in &r {
            require(x.pass == Some(true) && x.max_abs_residual < 1e-8, || format!("{} on {name}: {:e}", x.identity, x.max_abs_residual))?;
        }
        max = max.max(worst(&r));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_hamjet"))
        .args(["verify", "timewarp", "--suite", "conservation", "--samples", "100"])
        .output()
        .map_err(|e| e.to_string())?;
    require(out.status.code() == Some(0), || format!("timewarp verify exit {:?}", out.status.code()))?;
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let results = doc["results"].as_array().ok_or("no results")?;
    require(
        results.len() == 2 && results.iter().all(|r| r["report_only"] == true && r.get("pass").is_none()),
        || "timewarp laws are not report-only".into(),
    )?;
    let tw: Vec<String> = results.iter().map(|r| format!("{:e}", r["max_abs_residual"].as_f64().unwrap_or(f64::NAN))).collect();
    Ok(format!("flat2x2, sphere2 max {max:e}; timewarp report-only residuals [{}], exit 0", tw.join(", ")))
}

fn ac9() -> Outcome {
    let mut checked = 0;
    let mut max_rel = 0.0f64;
    for s in valid_spaces() {
        let r = run_suite(&s, Suite::Oracle, &cfg(100), 1.0).map_err(|e| e.to_string())?;
        for x in r.iter().filter(|x| x.identity.starts_with("fd: ")) {
            require(x.pass == Some(true), || format!("{} on {}: {:e}", x.identity, s.name, x.max_abs_residual))?;
            max_rel = max_rel.max(x.max_rel_residual);
            checked += 1;
        }
    }
    let mut controls = Vec::new();
    for s in BUNDLED.iter().map(|n| space(n)).filter(|s| s.fault.is_some()) {
        let corrupts = s.fault.as_ref().unwrap().corrupts.clone();
        for suite in Suite::EACH {
            let r = run_suite(&s, suite, &cfg(30), 1.0).map_err(|e| e.to_string())?;
            let failed = r.iter().any(|x| !x.ok());
            let expected = corrupts.iter().any(|c| c == suite.name());
            require(failed == expected, || format!("{} {}: failed = {failed}, declared = {expected}", s.name, suite))?;
        }
        controls.push(format!("{} fails {}", s.name, corrupts.join("/")));
    }
    Ok(format!("{checked} finite-difference checks pass (max scaled gap {max_rel:e}); {}", controls.join("; ")))
}

fn run_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hamjet")).args(args).output().map_err(|e| e.to_string())?;
    require(out.status.success(), || format!("{args:?} exited {:?}", out.status.code()))?;
    Ok(out.stdout)
}

fn ac10() -> Outcome {
    let args = ["verify", "sphere2_u", "--seed", "11", "--samples", "30"];
    let a = run_bin(&args)?;
    let b = run_bin(&args)?;
    require(a == b, || "verify output differs between runs".into())?;
    let c = ["compute", "sphere2_u", "--object", "curvature", "--at", "x1=0.7,x2=0.4"];
    let x = run_bin(&c)?;
    require(x == run_bin(&c)?, || "compute output differs between runs".into())?;
    let text = String::from_utf8(x).map_err(|e| e.to_string())?;
    // within each tensor, one-based indices appear in lexicographic order
    let mut last: Option<(String, Vec<usize>)> = None;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let (lhs, _) = line.split_once(" = ").ok_or("malformed line")?;
        let (name, idx) = lhs.rsplit_once('[').ok_or("no index")?;
        let idx: Vec<usize> = idx.trim_end_matches(']').split(',').map(|k| k.parse().unwrap()).collect();
        if let Some((prev_name, prev)) = &last {
            require(prev_name != name || prev < &idx, || format!("{name}: {prev:?} before {idx:?}"))?;
        }
        last = Some((name.to_string(), idx));
    }
    Ok(format!("verify output byte-identical ({} bytes); compute ordering lexicographic", a.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("{name} PASS ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL ({secs:.1}s): {msg}");
            }
        }
    }
    println!("acceptance: {} of 10 criteria pass", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

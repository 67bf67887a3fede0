//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Experiments run from the checked-in configs under `configs/`, through the
//! same runner the binary uses. Tolerances and runtime budgets are pinned here.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use grassdyn::construction::verify_construction;
use grassdyn::functionals::{m_l_bound_with, phi_kronecker_check, vanishing_violations_in, FunctionalTable};
use grassdyn::space::seeded_rng;
use grassdyn::{AdmissibleSource, ConstructionParams, IndexScheme};
use grassdyn_cli::{load_config, run, Experiment, RunReport};
use num_traits::Signed;
use rand::Rng;
use serde_json::{json, Value};

const CLAIM_MAX_P: u32 = 16;
const VANISHING_L_MAX: u64 = 3;
const M_L_SAMPLES: usize = 500;
const M_L_SEED: u64 = 2024;
const CONSTRUCTION_MAX_N: u64 = 5;
const CLOSURE_CAP: u64 = 700;
const CLOSURE_RELATIVE: f64 = 1e-8;
const SUMMABILITY_TAIL: f64 = 1e-3;
const DENSITY_MIN_HIT: f64 = 0.9;
const OBSTRUCTION_DEVIATION: f64 = 1e-12;
const OBSTRUCTION_HORIZON: usize = 500;
const RIGHT_INVERSE: f64 = 1e-12;
const SC_FINAL_PRODUCT: f64 = 1e-6;
const SC_HORIZON: usize = 60;

const MINUTE: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    detail: String,
    /// Everything the criterion computed, minus timings.
    payload: Value,
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_config(name: &str) -> RunReport {
    let path = config_path(name);
    let exp = match name.split('_').next().unwrap() {
        "claim" => Experiment::ClaimCheck(load_config(&path).unwrap()),
        "verify" => Experiment::VerifyConstruction(load_config(&path).unwrap()),
        "summability" => Experiment::Summability(load_config(&path).unwrap()),
        "witness" => Experiment::Witness(load_config(&path).unwrap()),
        "spectrum" => Experiment::SpectrumCircles(load_config(&path).unwrap()),
        _ => Experiment::OrbitDensity(load_config(&path).unwrap()),
    };
    run(&exp).unwrap_or_else(|e| panic!("{name}: {e}")).0
}

fn instance(p: u32, scheme: IndexScheme) -> ConstructionParams {
    ConstructionParams::new(p, scheme, AdmissibleSource::Triangular)
}

fn claim() -> Outcome {
    let r = run_config("claim_check.json");
    let max_p = r.results["max_p"].as_u64();
    let pass = r.pass && max_p == Some(CLAIM_MAX_P as u64);
    Outcome { pass, detail: format!("p = 2..={CLAIM_MAX_P}"), payload: r.payload() }
}

fn kronecker() -> Outcome {
    let cases = [(IndexScheme::Pow2p1, 2), (IndexScheme::Pow2p1, 3), (IndexScheme::Pow5, 2), (IndexScheme::Pow5, 3)];
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (scheme, p) in cases {
        let ok = phi_kronecker_check(&instance(p, scheme)).unwrap();
        if !ok {
            failed.push(format!("{scheme:?} p={p}"));
        }
        rows.push(json!({ "scheme": scheme, "p": p, "pass": ok }));
    }
    let detail = if failed.is_empty() { "4 instances".into() } else { format!("failed: {}", failed.join(", ")) };
    Outcome { pass: failed.is_empty(), detail, payload: json!(rows) }
}

/// Exhaustive vanishing over `0 <= k <= l <= 3` and sampled `|y| <= M_l`.
fn vanishing() -> Outcome {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut pass = true;
    for p in [2u32, 3] {
        let params = instance(p, IndexScheme::Pow5);
        let tables: Vec<FunctionalTable> =
            (0..2 * p as u64).map(|d| FunctionalTable::new(&params, d).unwrap()).collect();
        for t in &tables {
            let bad = vanishing_violations_in(t, 0, VANISHING_L_MAX).unwrap();
            if !bad.is_empty() {
                pass = false;
                notes.push(format!("p={p} δ={} offset={} first (k,u,l,v)={:?} of {}", t.delta(), t.offset(), bad[0], bad.len()));
            }
            rows.push(json!({ "p": p, "delta": t.delta(), "offset": t.offset(), "violations": bad }));
        }
        let c = tables[0].construction();
        let mut rng = seeded_rng(M_L_SEED, p as u64);
        for l in 0..=VANISHING_L_MAX {
            let bound = m_l_bound_with(c, l).unwrap();
            let mut exceed = 0usize;
            for _ in 0..M_L_SAMPLES {
                let t = &tables[rng.random_range(0..tables.len())];
                let k = rng.random_range(0..=l);
                let u = rng.random_range(0..c.b(k + 1) - c.b(k));
                let v = rng.random_range(0..c.b(l + 1) - c.b(l));
                if t.y_value(k, u, l, v).unwrap().abs() > bound {
                    exceed += 1;
                }
            }
            if exceed > 0 {
                pass = false;
                notes.push(format!("p={p} l={l}: {exceed}/{M_L_SAMPLES} samples exceed M_l"));
            }
            rows.push(json!({ "p": p, "l": l, "samples": M_L_SAMPLES, "exceed_m_l": exceed }));
        }
    }
    let detail = if notes.is_empty() { format!("pow5 p=2,3, l <= {VANISHING_L_MAX}") } else { notes.join("; ") };
    Outcome { pass, detail, payload: json!(rows) }
}

fn construction() -> Outcome {
    let mut certs = Vec::new();
    let mut notes = Vec::new();
    let mut pass = true;
    for scheme in [IndexScheme::Pow5, IndexScheme::Pow2p1] {
        for p in [2u32, 3] {
            let cert = verify_construction(&instance(p, scheme), CONSTRUCTION_MAX_N, CLOSURE_CAP).unwrap();
            let eps_ok = cert.records.iter().all(|r| r.eps_le_one);
            let f_ok = cert.records.iter().all(|r| r.f_le_one);
            let closure_ok = !cert.closure.is_empty()
                && cert.closure.iter().all(|c| c.b_n <= CLOSURE_CAP && c.relative_error <= CLOSURE_RELATIVE);
            let ok = cert.pass && eps_ok && f_ok && closure_ok && cert.precision_stable;
            if !ok {
                notes.push(format!("{scheme:?} p={p}: eps {eps_ok} f {f_ok} closure {closure_ok} stable {}", cert.precision_stable));
            }
            pass &= ok;
            certs.push(serde_json::to_value(&cert).unwrap());
        }
    }
    for name in ["verify_pow5_p2.json", "verify_pow2p1_p2.json"] {
        let r = run_config(name);
        pass &= r.pass;
        certs.push(r.payload());
    }
    let detail = if notes.is_empty() { format!("n <= {CONSTRUCTION_MAX_N}, closure b_n <= {CLOSURE_CAP}") } else { notes.join("; ") };
    Outcome { pass, detail, payload: json!(certs) }
}

fn summability() -> Outcome {
    let r = run_config("summability_pow5_p2.json");
    let radii: Vec<u64> = serde_json::from_value(r.results["radii"].clone()).unwrap();
    let n = radii.len();
    let mut pass = r.pass && n >= 2 && radii[n - 2] == 600 && radii[n - 1] == 800;
    let mut tails = Vec::new();
    for d in r.results["per_delta"].as_array().unwrap() {
        let tail = d["tail"].as_f64().unwrap();
        pass &= tail < SUMMABILITY_TAIL && d["monotone"] == true;
        tails.push(format!("δ={}: {tail:.2e}", d["delta"]));
    }
    let deltas = r.results["per_delta"].as_array().unwrap().len();
    pass &= deltas == 4;
    Outcome { pass, detail: format!("tail 600→800 {}", tails.join(", ")), payload: r.payload() }
}

fn density() -> Outcome {
    let r = run_config("graph_density.json");
    let hit = r.results["hit_fraction"].as_f64().unwrap();
    let report = &r.results["report"];
    let cfg = &report["config"];
    let shape_ok = cfg["dim_x"] == 64
        && cfg["targets"] == 20
        && cfg["horizon"] == 2000
        && cfg["threshold"] == 0.15
        && cfg["support"]["end"] == 8;
    let pass = shape_ok && hit >= DENSITY_MIN_HIT && report["recovered_pass"] == true;
    let detail = format!(
        "hit fraction {hit:.2} (need {DENSITY_MIN_HIT}), {} of 20 targets seeded into N = 64",
        report["seeded_targets"]
    );
    Outcome { pass, detail, payload: r.payload() }
}

fn negative() -> Outcome {
    let mut pass = true;
    let mut payload = Vec::new();
    let mut parts = Vec::new();
    for name in ["witness_identity_2_1.json", "witness_identity_3_2.json"] {
        let r = run_config(name);
        let dev = r.results["max_deviation"].as_f64().unwrap();
        let steps = r.results["distances"].as_array().unwrap().len();
        pass &= r.pass && dev <= OBSTRUCTION_DEVIATION && steps == OBSTRUCTION_HORIZON + 1;
        parts.push(format!("n={} k={}: dev {dev:.1e}", r.results["n"], r.results["k_sub"]));
        payload.push(r.payload());
    }
    let r = run_config("identity_negative_control.json");
    let hit = r.results["hit_fraction"].as_f64().unwrap();
    pass &= r.pass && hit == 0.0;
    parts.push(format!("Id hit fraction {hit}"));
    payload.push(r.payload());
    Outcome { pass, detail: parts.join(", "), payload: json!(payload) }
}

fn sc_witness() -> Outcome {
    let mut pass = true;
    let mut payload = Vec::new();
    let mut parts = Vec::new();
    for (name, lambda) in [("witness_sc_shift_0.5.json", 0.5), ("witness_sc_shift_0.9.json", 0.9)] {
        let r = run_config(name);
        let res = r.results["max_residual"].as_f64().unwrap();
        let last = r.results["final_product"].as_f64().unwrap();
        let horizon = r.results["horizon"].as_u64().unwrap() as usize;
        let mut ok = r.pass && res <= RIGHT_INVERSE && r.results["tail_monotone"] == true && horizon == SC_HORIZON;
        if lambda == 0.5 {
            ok &= last < SC_FINAL_PRODUCT;
        }
        pass &= ok;
        parts.push(format!("λ={lambda}: residual {res:.1e}, final {last:.1e}"));
        payload.push(r.payload());
    }
    Outcome { pass, detail: parts.join(", "), payload: json!(payload) }
}

fn circles() -> Outcome {
    let none = run_config("spectrum_points_and_disk.json");
    let disk = run_config("spectrum_single_disk.json");
    let pair = run_config("spectrum_unit_circle_pair.json");
    let nonempty = |r: &RunReport| {
        r.results["passing_radii"].as_array().is_some_and(|v| v[0].as_f64().unwrap() <= v[1].as_f64().unwrap())
    };
    let pass = none.pass
        && none.results["verdict"] == "none"
        && disk.pass
        && nonempty(&disk)
        && pair.pass
        && nonempty(&pair);
    let detail = format!(
        "points and disk: {}, disk: {}, pair: {}",
        none.results["verdict"], disk.results["verdict"], pair.results["verdict"]
    );
    Outcome { pass, detail, payload: json!([none.payload(), disk.payload(), pair.payload()]) }
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, name: "claim check", budget: MINUTE, check: claim },
    Criterion { id: 2, name: "kronecker property", budget: MINUTE, check: kronecker },
    Criterion { id: 3, name: "vanishing and M_l bound", budget: Duration::from_secs(300), check: vanishing },
    Criterion { id: 4, name: "construction bounds", budget: Duration::from_secs(300), check: construction },
    Criterion { id: 5, name: "summability", budget: Duration::from_secs(600), check: summability },
    Criterion { id: 6, name: "positive density", budget: Duration::from_secs(300), check: density },
    Criterion { id: 7, name: "negative witnesses", budget: MINUTE, check: negative },
    Criterion { id: 8, name: "supercyclicity criterion witness", budget: MINUTE, check: sc_witness },
    Criterion { id: 9, name: "spectrum circles", budget: Duration::from_secs(1), check: circles },
];

fn report(id: u8, name: &str, pass: bool, detail: &str) {
    println!("criterion {id:>2} {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    let mut failed = Vec::new();
    let mut first_payloads = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let out = (c.check)();
        let took = start.elapsed();
        let in_budget = took <= c.budget;
        let pass = out.pass && in_budget;
        let budget = if in_budget { String::new() } else { format!(" (over budget {:?})", c.budget) };
        report(c.id, c.name, pass, &format!("{} [{took:.2?}]{budget}", out.detail));
        if !pass {
            failed.push(c.id);
        }
        first_payloads.push(serde_json::to_string(&out.payload).unwrap());
    }

    // Whole-suite rerun with the same seeds.
    let mut differing = Vec::new();
    for (c, first) in CRITERIA.iter().zip(&first_payloads) {
        if serde_json::to_string(&(c.check)().payload).unwrap() != *first {
            differing.push(c.id);
        }
    }
    let pass = differing.is_empty();
    let detail =
        if pass { "payloads byte-identical across reruns".to_string() } else { format!("payloads differ for {differing:?}") };
    report(10, "determinism", pass, &detail);
    if !pass {
        failed.push(10);
    }

    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}

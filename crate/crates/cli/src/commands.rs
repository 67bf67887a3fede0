//! One function per subcommand. Each returns the results payload, the pass
//! flag derived from it, and a CSV rendering where the command has one.

use std::fmt::Write as _;

use grassdyn::construction::{verify_claim, verify_construction};
use grassdyn::dynamics::{
    hypercyclic_seed, identity_block_obstruction_witness, projective_orbit_min_distance, sample_target, sc_criterion_witness,
    score_against, graph_density_experiment, DensityReport, TargetTrace,
};
use grassdyn::functionals::{criterion_report, phi_kronecker_check, FunctionalTable};
use grassdyn::grassmann::{pi_n, Subspace};
use grassdyn::operators::circle_intersects_all_components;
use grassdyn::space::{format_rational, sample_vector_with, seeded_rng};
use grassdyn::{Field, Scalar, Vector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CircleExpectation, ClaimCheckConfig, GraphProbe, IdentityBlockCase, OrbitDensityConfig, PhiTableConfig,
    ProjectiveProbe, Role, ScShiftCase, SpectrumCirclesConfig, SubspaceProbe, SubspaceSpec, SummabilityConfig,
    VerifyConstructionConfig, WitnessConfig,
};
use crate::CliError;

pub struct Outcome {
    pub results: Value,
    pub pass: bool,
    pub csv: Option<String>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialise")
}

fn density_csv(d: &DensityReport) -> String {
    let mut buf = Vec::new();
    d.write_csv(&mut buf).expect("write to memory");
    String::from_utf8(buf).expect("ascii csv")
}

fn role_pass(role: Role, d: &DensityReport, min_hit_fraction: f64) -> bool {
    match role {
        Role::Density => d.hit_fraction >= min_hit_fraction,
        Role::NegativeControl => d.hits == 0,
    }
}

fn build_subspace(spec: &SubspaceSpec, seed: u64, targets: &[Subspace]) -> Result<Subspace, CliError> {
    Ok(match spec {
        SubspaceSpec::Coordinate { dim, indices } => Subspace::coordinate(*dim, indices)?,
        SubspaceSpec::Vectors { vectors } => pi_n(&vectors.iter().map(|v| Vector::from_real(v)).collect::<Vec<_>>())?,
        SubspaceSpec::Random { dim, n, support } => {
            let mut rng = seeded_rng(seed, u64::MAX);
            let tuple = (0..*n)
                .map(|_| sample_vector_with(Field::Real, *dim, support.clone(), &mut rng))
                .collect::<grassdyn::Result<Vec<_>>>()?;
            pi_n(&tuple)?
        }
        SubspaceSpec::FittedSeed { dim, c, spacing } => {
            let lines: Vec<Vector> = targets.iter().map(|t| t.columns()[0].clone()).collect();
            let (x, _) = hypercyclic_seed(Scalar::new(*c, 0.0), *dim, &lines, *spacing)?;
            pi_n(&[x])?
        }
    })
}

pub fn orbit_density(cfg: &OrbitDensityConfig) -> Result<Outcome, CliError> {
    match cfg {
        OrbitDensityConfig::Graph(GraphProbe { experiment, min_hit_fraction }) => {
            let report = graph_density_experiment(experiment)?;
            let density_pass = report.density.hit_fraction >= *min_hit_fraction;
            Ok(Outcome {
                pass: density_pass && report.recovered_pass,
                csv: Some(density_csv(&report.density)),
                results: json!({
                    "hit_fraction": report.density.hit_fraction,
                    "density_pass": density_pass,
                    "report": to_value(&report),
                }),
            })
        }
        OrbitDensityConfig::Subspace(SubspaceProbe {
            operator,
            subspace,
            targets,
            support,
            horizon,
            threshold,
            field,
            role,
            min_hit_fraction,
            seed,
        }) => {
            let op = operator.to_spec()?;
            let targets = (0..*targets)
                .map(|id| sample_target(subspace.dim(), subspace.n(), support.clone(), *field, *seed, id))
                .collect::<grassdyn::Result<Vec<_>>>()?;
            let l = build_subspace(subspace, *seed, &targets)?;
            let d = score_against(&op, &l, &targets, *threshold, *horizon)?;
            let pass = role_pass(*role, &d, *min_hit_fraction);
            Ok(Outcome {
                pass,
                csv: Some(density_csv(&d)),
                results: json!({
                    "hit_fraction": d.hit_fraction,
                    "density_pass": d.hit_fraction >= *min_hit_fraction,
                    "role": role,
                    "report": to_value(&d),
                }),
            })
        }
        OrbitDensityConfig::Projective(ProjectiveProbe {
            operator,
            x,
            targets,
            support,
            horizon,
            threshold,
            role,
            min_hit_fraction,
            seed,
        }) => {
            let op = operator.to_spec()?;
            let x = Vector::from_real(x);
            let traces = (0..*targets)
                .map(|id| {
                    let t = sample_target(x.dim(), 1, support.clone(), Field::Real, *seed, id)?;
                    let trace = projective_orbit_min_distance(&op, &x, &t.columns()[0], *horizon)?;
                    Ok(TargetTrace { target_id: id, trace })
                })
                .collect::<grassdyn::Result<Vec<_>>>()?;
            let d = DensityReport::from_traces(traces, *threshold, *horizon);
            let pass = role_pass(*role, &d, *min_hit_fraction);
            Ok(Outcome {
                pass,
                csv: Some(density_csv(&d)),
                results: json!({
                    "hit_fraction": d.hit_fraction,
                    "density_pass": d.hit_fraction >= *min_hit_fraction,
                    "role": role,
                    "report": to_value(&d),
                }),
            })
        }
    }
}

pub fn verify(cfg: &VerifyConstructionConfig) -> Result<Outcome, CliError> {
    let cert = verify_construction(&cfg.params(), cfg.max_n, cfg.closure_cap)?;
    let mut csv = String::from("n,b_n,eps_n,f_n_l1,bound_rhs,pass\n");
    for r in &cert.records {
        writeln!(csv, "{},{},{},{},{},{}", r.n, r.b_n, r.eps_n, r.f_n_l1, r.bound_rhs, r.pass).expect("string");
    }
    Ok(Outcome { pass: cert.pass, csv: Some(csv), results: to_value(&cert) })
}

pub fn claim_check(cfg: &ClaimCheckConfig) -> Result<Outcome, CliError> {
    if cfg.max_p < 2 {
        return Err(CliError::Config(format!("max_p = {} but the claim needs p >= 2", cfg.max_p)));
    }
    let mut per_p = Vec::new();
    for p in 2..=cfg.max_p {
        per_p.push(json!({ "p": p, "holds": verify_claim(p)? }));
    }
    let pass = per_p.iter().all(|r| r["holds"] == true);
    Ok(Outcome { pass, csv: None, results: json!({ "max_p": cfg.max_p, "per_p": per_p }) })
}

pub fn phi_table(cfg: &PhiTableConfig) -> Result<Outcome, CliError> {
    let params = cfg.params();
    if cfg.delta >= 2 * params.p as u64 {
        return Err(CliError::Config(format!("delta = {} but delta < 2p = {} is required", cfg.delta, 2 * params.p)));
    }
    let table = FunctionalTable::new(&params, cfg.delta)?;
    let values = table.prefix(cfg.max_i)?;
    let kronecker = phi_kronecker_check(&params)?;
    let mut csv = String::from("i,delta,value\n");
    let mut nonzero = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let s = format_rational(v);
        writeln!(csv, "{i},{},{s}", cfg.delta).expect("string");
        if !num_traits::Zero::is_zero(v) {
            nonzero.push(json!([i, s]));
        }
    }
    Ok(Outcome {
        pass: kronecker,
        csv: Some(csv),
        results: json!({
            "offset": table.offset(),
            "base_window_end": table.base_window_end(),
            "kronecker_pass": kronecker,
            "rows": values.len(),
            "nonzero": nonzero,
        }),
    })
}

pub fn summability(cfg: &SummabilityConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let params = cfg.params();
    let deltas = cfg.deltas.clone().unwrap_or_else(|| (0..2 * params.p as u64).collect());
    if let Some(&d) = deltas.iter().find(|&&d| d >= 2 * params.p as u64) {
        return Err(CliError::Config(format!("delta = {d} but delta < 2p is required")));
    }
    let mut per_delta = Vec::new();
    let mut pass = true;
    let mut csv = String::from("delta,radius,partial_sum\n");
    for &delta in &deltas {
        let profile = FunctionalTable::new(&params, delta)?.summability_profile(&cfg.radii)?;
        let monotone = profile.windows(2).all(|w| w[0] <= w[1]);
        let n = profile.len();
        let tail = profile[n - 1] - profile[n - 2];
        let ok = monotone && tail < cfg.tail_threshold;
        pass &= ok;
        for (r, s) in cfg.radii.iter().zip(&profile) {
            writeln!(csv, "{delta},{r},{s:e}").expect("string");
        }
        per_delta.push(json!({ "delta": delta, "partial_sums": profile, "monotone": monotone, "tail": tail, "pass": ok }));
    }
    let mut results = json!({ "radii": cfg.radii, "tail_threshold": cfg.tail_threshold, "per_delta": per_delta });
    if cfg.criterion {
        let report = criterion_report(&params)?;
        pass &= report.valid;
        results["criterion"] = to_value(&report);
    }
    Ok(Outcome { pass, csv: Some(csv), results })
}

pub fn witness(cfg: &WitnessConfig) -> Result<Outcome, CliError> {
    match cfg {
        WitnessConfig::IdentityBlock(IdentityBlockCase { n, k_sub, s, horizon }) => {
            let c = identity_block_obstruction_witness(*n, *k_sub, &s.to_spec()?, *horizon)?;
            Ok(Outcome { pass: c.pass, csv: None, results: to_value(&c) })
        }
        WitnessConfig::ScShift(ScShiftCase { lambda, support, samples, horizon, seed }) => {
            let w = sc_criterion_witness(Scalar::new(*lambda, 0.0), support.clone(), *samples, *horizon, *seed)?;
            let mut csv = String::from("k,product,residual\n");
            for s in &w.steps {
                writeln!(csv, "{},{:e},{:e}", s.k, s.product, s.residual).expect("string");
            }
            Ok(Outcome { pass: w.pass, csv: Some(csv), results: to_value(&w) })
        }
    }
}

pub fn spectrum_circles(cfg: &SpectrumCirclesConfig) -> Result<Outcome, CliError> {
    let op = cfg.operator.to_spec()?;
    let spectrum = op.analytic_spectrum()?;
    let exact = spectrum.passing_radii();
    let boundary = spectrum.boundary_radii();
    let top = boundary.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE) * 1.25;
    let mut radii: Vec<f64> = (0..=cfg.grid).map(|i| top * i as f64 / cfg.grid.max(1) as f64).collect();
    radii.extend(&boundary);
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let passing: Vec<f64> = radii.iter().copied().filter(|&r| circle_intersects_all_components(&spectrum, r)).collect();
    // The scan must agree with the exact interval on every sampled radius.
    let consistent = radii.iter().all(|&r| {
        let inside = exact.is_some_and(|(lo, hi)| r >= lo && r <= hi);
        inside == passing.contains(&r)
    });
    let verdict = match exact {
        None => "none".to_string(),
        Some((lo, hi)) => format!("[{lo}, {hi}]"),
    };
    let expectation_met = match cfg.expect {
        None => true,
        Some(CircleExpectation::None) => exact.is_none(),
        Some(CircleExpectation::Interval) => exact.is_some(),
    };
    let mut csv = String::from("radius,passes\n");
    for &r in &radii {
        writeln!(csv, "{r:e},{}", passing.contains(&r)).expect("string");
    }
    Ok(Outcome {
        pass: consistent && expectation_met,
        csv: Some(csv),
        results: json!({
            "spectrum": to_value(&spectrum),
            "components": spectrum.connected_radial_intervals(),
            "passing_radii": exact,
            "verdict": verdict,
            "scanned": radii.len(),
            "scan_passing": passing.len(),
            "consistent": consistent,
            "expectation_met": expectation_met,
        }),
    })
}

//! Subcommand implementations. Each returns `Ok` on success; validation and
//! convergence failures are typed so `main` can map them to exit codes.

use crate::config::{cx, to_cx, Cx, Fixture, FlowBlock, RunConfig};
use crate::output::{grid_heatmap, line_plot, mesh_heatmap, num, OutDir};
use anyhow::{Context, Result};
use hflow::fixtures::*;
use hflow::framed_rep::*;
use hflow::heat_flow::*;
use hflow::hyperbolic::*;
use hflow::initial_map::{collapse_map, energy_density_fd, horodisk_map, InitialMap};
use hflow::mesh::{rect_grid, EquivariantMesh, GridSpec};
use hflow::metric_interp::*;
use hflow::quad_diff::*;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::Path;

/// Hypotheses or inputs violated; exit code 2.
#[derive(Debug)]
pub struct ValidationFailure(pub Vec<String>);

impl std::fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation failed: {}", self.0.join("; "))
    }
}

impl std::error::Error for ValidationFailure {}

/// The flow stopped at `t_max` above the tension tolerance; exit code 3.
#[derive(Debug)]
pub struct NonConvergence(pub String);

impl std::fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "flow did not converge: {}", self.0)
    }
}

impl std::error::Error for NonConvergence {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationFailure(vec![msg.into()]).into()
}

/// Settings shared by all subcommands after command-line overrides.
pub struct Common {
    pub out: Option<std::path::PathBuf>,
    pub refine: Option<u32>,
    pub seed: Option<u64>,
    pub plots: Option<bool>,
}

impl Common {
    fn out_dir(&self, cfg: Option<&RunConfig>) -> Result<Option<OutDir>> {
        let path = self.out.clone().or_else(|| cfg.and_then(|c| c.output.directory.clone()).map(Into::into));
        path.map(|p| OutDir::create(&p)).transpose()
    }

    fn plots(&self, cfg: Option<&RunConfig>) -> bool {
        self.plots.unwrap_or_else(|| cfg.is_none_or(|c| c.output.plots))
    }

    fn seed(&self, cfg: Option<&RunConfig>) -> u64 {
        self.seed.or_else(|| cfg.and_then(|c| c.seed)).unwrap_or(0)
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn mobius_json(m: &Mobius) -> serde_json::Value {
    json!([[to_cx(m.a), to_cx(m.b)], [to_cx(m.c), to_cx(m.d)]])
}

fn point_json(p: BoundaryPoint) -> serde_json::Value {
    match p.finite() {
        Some(z) => json!(to_cx(z)),
        None => json!("inf"),
    }
}

// ---------------------------------------------------------------- check

#[derive(Debug, Serialize)]
struct PartCheck {
    end: usize,
    order: u32,
    compatible: bool,
    note: String,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    euler: i64,
    edge_count: i64,
    peripheral_classes: Vec<String>,
    degeneracy: String,
    framing_signs: Vec<i8>,
    principal_parts: Vec<PartCheck>,
    warnings: Vec<String>,
    violations: Vec<String>,
    pass: bool,
}

pub fn check_config(cfg: &RunConfig) -> Result<CheckReport> {
    let mut violations = vec![];
    let mut warnings = vec![];
    let surf = cfg.surface();
    let sr = validate_surface(&surf);
    violations.extend(sr.violations.iter().map(|v| format!("surface: {v}")));
    let early = |violations: Vec<String>, warnings: Vec<String>| CheckReport {
        euler: sr.euler,
        edge_count: sr.edge_count,
        peripheral_classes: vec![],
        degeneracy: "unknown".into(),
        framing_signs: vec![],
        principal_parts: vec![],
        warnings,
        violations,
        pass: false,
    };
    let tri = match cfg.triangulation() {
        Ok(t) => t,
        Err(e) => {
            violations.push(format!("input: {e}"));
            return Ok(early(violations, warnings));
        }
    };
    if let Err(e) = tri.check_surface(&surf) {
        violations.push(format!("triangulation: {e}"));
    }
    let z = cfg.coords(&tri);
    let designation = cfg.end_types(&tri);
    let signing = cfg.signing();
    let parts = cfg.principal_parts(&tri);
    for e in [z.as_ref().err(), designation.as_ref().err(), signing.as_ref().err(), parts.as_ref().err()].into_iter().flatten() {
        violations.push(format!("input: {e}"));
    }
    let (Ok(z), Ok(designation), Ok(signing), Ok(parts)) = (z, designation, signing, parts) else {
        return Ok(early(violations, warnings));
    };
    let (_, rep) = match rep_from_coords(&tri, &z) {
        Ok(r) => r,
        Err(e) => {
            violations.push(format!("framed representation: {e}"));
            return Ok(early(violations, warnings));
        }
    };
    let tp = is_type_preserving(&rep, &tri, &designation)?;
    violations.extend(tp.violations.iter().map(|v| format!("type-preserving: {v}")));
    let deg = classify_degenerate(&rep, &tri);
    if deg != Degeneracy::Nondegenerate {
        violations.push(format!("non-degenerate: framing is degenerate ({deg:?})"));
    }
    let signs = framing_signs(&rep, &tri);
    if let Some(s) = &signing {
        for (i, (want, got)) in s.0.iter().zip(&signs).enumerate() {
            if *got != 0 && want != got {
                warnings.push(format!("signing: puncture {i} has sign {want}, framing sits at the fixed point of sign {got}"));
            }
        }
    }
    let mut part_checks = vec![];
    for (end, pp, match_residue) in parts {
        let e = &tri.ends[end];
        let (compatible, note) = match e.kind {
            EndKind::Boundary => {
                if pp.order < 3 {
                    (false, "a boundary with marked points needs a pole of order >= 3".to_string())
                } else {
                    let chain = chain_from_framing(&rep, &tri, end)?;
                    if match_residue && pp.order % 2 == 1 {
                        warnings.push(format!("end {end}: odd order {}, residue condition dropped", pp.order));
                    }
                    let ok = compatible_with_chain(&pp, &chain)?;
                    let note = if pp.order % 2 == 1 {
                        format!("chain of length {}, pole order {}: count condition only", chain.m(), pp.order)
                    } else {
                        let mr = match metric_residue_chain(&chain, &vec![1.0; chain.m()]) {
                            Ok(v) => format!("metric residue {}", num(v)),
                            Err(e) => e.to_string(),
                        };
                        format!("chain of length {}, {mr}, residue {}", chain.m(), num(residue(&pp).map(|r| r.re).unwrap_or(f64::NAN)))
                    };
                    (ok, note)
                }
            }
            EndKind::Puncture => {
                if pp.order >= 3 {
                    (false, "poles of order >= 3 belong to boundary components".to_string())
                } else {
                    let m = rep.eval(&e.word);
                    let l = if classify(&m) == MapClass::Loxodromic { translation_length(&m)? } else { 0.0 };
                    (compatible_with_boundary(&pp, l), format!("peripheral translation length {}", num(l)))
                }
            }
        };
        if !compatible {
            violations.push(format!("principal part at end {end}: incompatible ({note})"));
        }
        part_checks.push(PartCheck { end, order: pp.order, compatible, note });
    }
    let pass = violations.is_empty();
    Ok(CheckReport {
        euler: sr.euler,
        edge_count: sr.edge_count,
        peripheral_classes: tp.classes.iter().map(|c| format!("{c:?}")).collect(),
        degeneracy: format!("{deg:?}"),
        framing_signs: signs,
        principal_parts: part_checks,
        warnings,
        violations,
        pass,
    })
}

pub fn check(cfg: &RunConfig, common: &Common) -> Result<()> {
    let report = check_config(cfg)?;
    if let Some(out) = common.out_dir(Some(cfg))? {
        out.json("check.json", &report)?;
    }
    print_json(&report)?;
    if report.pass {
        Ok(())
    } else {
        Err(ValidationFailure(report.violations).into())
    }
}

// ------------------------------------------------------------ build-rep

pub fn build_rep(cfg: &RunConfig, common: &Common) -> Result<()> {
    let tri = cfg.triangulation().map_err(|e| invalid(e.to_string()))?;
    let z = cfg.coords(&tri).map_err(|e| invalid(e.to_string()))?;
    let (dev, rep) = rep_from_coords(&tri, &z).map_err(|e| invalid(format!("framed representation: {e}")))?;
    let back = fg_from_rep(&rep, &tri)?;
    let round_trip = back.0.iter().zip(&z.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let ends: Vec<_> = tri
        .ends
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let m = rep.eval(&e.word);
            json!({
                "end": i,
                "kind": format!("{:?}", e.kind),
                "word": e.word.display_with(&tri.generator_names),
                "class": format!("{:?}", classify(&m)),
                "trace_sq": to_cx(m.tr2()),
                "matrix": mobius_json(&m),
            })
        })
        .collect();
    let pair = semisimple_pair(&rep).ok().map(|(a, b)| [a.display_with(&tri.generator_names), b.display_with(&tri.generator_names)]);
    let summary = json!({
        "generators": tri.generator_names.iter().zip(&rep.generators).map(|(n, g)| json!({"name": n, "matrix": mobius_json(g), "trace_sq": to_cx(g.tr2())})).collect::<Vec<_>>(),
        "framing": rep.framing.iter().map(|t| t.iter().map(|p| point_json(*p)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "ends": ends,
        "fg_round_trip_error": round_trip,
        "relator_residual": relator_residual(&dev, &rep)?,
        "degeneracy": format!("{:?}", classify_degenerate(&rep, &tri)),
        "semisimple_pair": pair,
    });
    if let Some(out) = common.out_dir(Some(cfg))? {
        out.json("rep.json", &summary)?;
    }
    print_json(&summary)
}

// ---------------------------------------------------------- make-metric

pub fn make_metric(cfg: &RunConfig, common: &Common) -> Result<()> {
    let m = &cfg.metric;
    let model = m.model.as_ref().ok_or_else(|| invalid("$.metric.model: make-metric needs a model differential"))?.build().map_err(|e| invalid(e.to_string()))?;
    let dm = domain_metric_assemble(&model, m.zero_eps, m.pole_eps).map_err(|e| invalid(format!("metric: {e}")))?;
    let n = m.grid.max(2);
    let hw = m.half_width;
    let at = |k: usize| -hw + 2.0 * hw * (k as f64 + 0.5) / n as f64;
    let mut rows = vec![];
    let mut l2 = vec![vec![0.0; n]; n];
    let mut kk = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in 0..n {
            let z = C64::new(at(i), at(j));
            if model.near_singularity(z, 1e-9) {
                l2[j][i] = f64::NAN;
                kk[j][i] = f64::NAN;
                continue;
            }
            let (lam, reg) = dm.lambda2(z);
            let k = dm.curvature(z);
            l2[j][i] = lam.ln();
            kk[j][i] = k;
            rows.push(vec![num(z.re), num(z.im), num(lam), num(k), reg.map_or(String::new(), |r| r.to_string())]);
        }
    }
    let audit = dm.curvature_audit(hw, n);
    let summary = json!({
        "regions": dm.regions.iter().map(|r| json!({"feature": format!("{:?}", r.feature), "center": to_cx(r.center), "z_radius": r.z_radius()})).collect::<Vec<_>>(),
        "zero_eps": m.zero_eps,
        "pole_eps": m.pole_eps,
        "max_curvature": audit,
        "nonpositive": audit <= 1e-8,
    });
    if let Some(out) = common.out_dir(Some(cfg))? {
        out.csv("metric.csv", &["x", "y", "lambda2", "curvature", "region"], rows)?;
        out.json("metric.json", &summary)?;
        if common.plots(Some(cfg)) {
            let ext = [-hw, hw, -hw, hw];
            out.text("metric_log_lambda2.svg", &grid_heatmap(&l2, ext, "ln lambda^2"))?;
            out.text("metric_curvature.svg", &grid_heatmap(&kk, ext, "Gaussian curvature"))?;
        }
    }
    print_json(&summary)
}

// ------------------------------------------------------- fixtures/flows

enum Built {
    Torus(Box<TorusFixture>),
    Crown(Box<CrownFixture>),
    Divergent(DivergentFixture),
}

fn flow_block(cfg: &RunConfig) -> Result<&FlowBlock> {
    cfg.flow.as_ref().ok_or_else(|| invalid("$.flow: this subcommand needs a flow block"))
}

fn build_fixture(cfg: &RunConfig, fb: &FlowBlock, level: u32) -> Result<Built> {
    let preset = match &cfg.triangulation {
        crate::config::TriangulationBlock::Preset { preset } => Some(preset.as_str()),
        _ => None,
    };
    match fb.fixture {
        Fixture::ModularTorus => {
            if preset != Some("once-punctured-torus") || cfg.coordinates.iter().any(|c| (cx(*c) - C64::new(1.0, 0.0)).norm() > 1e-12) {
                return Err(invalid("modular-torus fixture needs the once-punctured-torus preset with all coordinates [1, 0]"));
            }
            Ok(Built::Torus(Box::new(torus_fixture(level, cfg.metric.y_trunc)?)))
        }
        Fixture::CrownEnd => {
            if preset != Some("one-boundary-torus") {
                return Err(invalid("crown-end fixture needs the one-boundary-torus preset"));
            }
            let tri = cfg.triangulation().map_err(|e| invalid(e.to_string()))?;
            let z = cfg.coords(&tri).map_err(|e| invalid(e.to_string()))?;
            Ok(Built::Crown(Box::new(crown_fixture(level, &z, cx(fb.alpha), cfg.metric.r_max, fb.width, fb.theta)?)))
        }
        Fixture::FlatDivergent => Ok(Built::Divergent(divergent_fixture(4usize << level, fb.t0)?)),
    }
}

fn level(cfg_level: u32, common: &Common) -> u32 {
    common.refine.unwrap_or(cfg_level)
}

fn divergent_dt(fix: &DivergentFixture) -> f64 {
    // dt quartered per level along with h²
    let n = (fix.mesh.len() as f64).sqrt();
    0.16 / (n * n)
}

fn flow_config(b: &Built, fb: &FlowBlock, cfg: &RunConfig) -> FlowConfig {
    let mut c = match b {
        Built::Torus(_) => torus_flow_config(),
        Built::Crown(_) => crown_flow_config(),
        Built::Divergent(f) => f.config(divergent_dt(f)),
    };
    if let Some(dt) = fb.dt {
        c.dt = Some(dt);
    }
    c.cfl = fb.cfl;
    if let Some(t) = fb.tol_tau {
        c.tol_tau = t;
    }
    if let Some(t) = fb.t_max {
        c.t_max = t;
    }
    if let Some(k) = cfg.output.cadence {
        c.cadence = k;
    }
    c
}

struct Start<'a> {
    mesh: &'a EquivariantMesh,
    u0: MapState,
    map: Option<InitialMap<'a>>,
    residual: f64,
    trace: TraceSpec,
}

fn start<'a>(b: &'a Built, fb: &FlowBlock) -> Result<Start<'a>> {
    Ok(match b {
        Built::Torus(f) => {
            let m = torus_u0(f, fb.amp, (fb.collar[0], fb.collar[1])).map_err(|e| invalid(format!("initial map: {e}")))?;
            let residual = equivariance_residual_fn(&f.mesh, &m.eval);
            Start { mesh: &f.mesh, u0: m.state(), map: Some(m), residual, trace: f.trace.clone() }
        }
        Built::Crown(f) => Start { mesh: &f.mesh, u0: f.u0(), map: None, residual: f.u0_residual(), trace: TraceSpec::default() },
        Built::Divergent(f) => Start { mesh: &f.mesh, u0: f.u0(), map: None, residual: f.u0_residual(), trace: f.trace() },
    })
}

fn state_rows(mesh: &EquivariantMesh, s: &MapState, extra: &[&[f64]]) -> Vec<Vec<String>> {
    (0..mesh.len())
        .map(|v| {
            let p = mesh.vertices[v].pos;
            let u = s.u[v];
            let mut r = vec![v.to_string(), num(p.re), num(p.im), num(u.x1), num(u.x2), num(u.x3)];
            r.extend(extra.iter().map(|col| num(col[v])));
            r
        })
        .collect()
}

const STATE_HEADER: [&str; 6] = ["vertex", "x", "y", "u1", "u2", "u3"];

pub fn init_map(cfg: &RunConfig, common: &Common) -> Result<()> {
    let fb = flow_block(cfg)?;
    let built = build_fixture(cfg, fb, level(fb.refinement, common))?;
    let st = start(&built, fb)?;
    let e = energy_density(&st.u0, st.mesh);
    let tau: Vec<f64> = tension_field(&st.u0, st.mesh)?.iter().map(|t| t.norm()).collect();
    let mut summary = json!({
        "fixture": fb.fixture,
        "vertices": st.mesh.len(),
        "h_mesh": st.mesh.h_mesh,
        "equivariance_residual": st.residual,
        "sup_tension": sup_tension(&tension_field(&st.u0, st.mesh)?, st.mesh),
        "max_energy_density": e.iter().copied().fold(0.0, f64::max),
        "core_energy": core_energy(&st.u0, st.mesh),
        "analytic_map": st.map.is_some(),
    });
    if let Built::Torus(f) = &built {
        summary["sup_dist_to_identity"] = json!(sup_dist_to_identity(&st.u0, &f.mesh));
    }
    if let Some(out) = common.out_dir(Some(cfg))? {
        let mut header = STATE_HEADER.to_vec();
        header.extend(["energy_density", "tension"]);
        out.csv("u0.csv", &header, state_rows(st.mesh, &st.u0, &[&e, &tau]))?;
        out.json("init.json", &summary)?;
        if common.plots(Some(cfg)) {
            out.text("u0_energy_density.svg", &mesh_heatmap(st.mesh, &e, "energy density of u0"))?;
            out.text("u0_tension.svg", &mesh_heatmap(st.mesh, &tau, "tension norm of u0"))?;
        }
    }
    print_json(&summary)
}

pub fn flow_cmd(cfg: &RunConfig, common: &Common) -> Result<()> {
    let fb = flow_block(cfg)?;
    let built = build_fixture(cfg, fb, level(fb.refinement, common))?;
    let st = start(&built, fb)?;
    let fc = flow_config(&built, fb, cfg);
    let out = common.out_dir(Some(cfg))?;
    let snap_dir = match &out {
        Some(o) => Some(OutDir::create(&o.file("snapshots"))?),
        None => None,
    };
    let every = cfg.output.snapshot_every.max(1);
    let mut sample_idx = 0usize;
    let mut snap_err: Option<anyhow::Error> = None;
    let mesh = st.mesh;
    let res = flow_observed(&st.u0, mesh, &fc, &st.trace, &mut |s| {
        if sample_idx % every == 0 {
            if let Some(d) = &snap_dir {
                if let Err(e) = d.csv(&format!("snap_{sample_idx:05}.csv"), &STATE_HEADER, state_rows(mesh, s, &[])) {
                    snap_err.get_or_insert(e);
                }
            }
        }
        sample_idx += 1;
    })
    .map_err(|e| match e {
        FlowError::Cfl { .. } => invalid(format!("$.flow.dt: {e}")),
        e => anyhow::Error::from(e).context("flow"),
    })?;
    if let Some(e) = snap_err {
        return Err(e);
    }
    let mon = monitors(&res.diag);
    let mut summary = json!({
        "fixture": fb.fixture,
        "vertices": mesh.len(),
        "h_mesh": mesh.h_mesh,
        "dt": res.diag.dt,
        "steps": res.diag.steps,
        "t_final": res.state.t,
        "converged": res.converged,
        "sup_tau_final": res.diag.sup_tau.last(),
        "max_energy_rise": res.diag.max_energy_rise,
        "equivariance_max": mon.equivariance_max,
        "u0_equivariance_residual": st.residual,
        "energy_bound_ok": mon.energy_bound_ok,
        "monitors_stable": mon.all_stable,
        "monitors": mon.lines.iter().map(|l| json!({"name": l.name, "stable": l.stable, "early_max": l.early_max, "late_max": l.late_max})).collect::<Vec<_>>(),
    });
    match &built {
        Built::Torus(f) => {
            let d = sup_dist_to_identity(&res.state, &f.mesh);
            summary["sup_dist_to_identity"] = json!(d);
            summary["within_10_h_mesh"] = json!(d < 10.0 * f.mesh.h_mesh);
        }
        Built::Crown(f) => match f.fit(&res.state, 2, 4) {
            Ok(fit) => {
                summary["principal_part_fit"] = json!({
                    "order": fit.pp.order,
                    "coeffs": fit.pp.coeffs.iter().map(|c| to_cx(*c)).collect::<Vec<Cx>>(),
                    "prescribed": f.prescribed.coeffs.iter().map(|c| to_cx(*c)).collect::<Vec<Cx>>(),
                    "leading_relative_error": f.leading_error(&fit),
                    "condition": fit.condition,
                    "rms_residual": fit.rms_residual,
                });
                summary["compatible"] = json!(f.compatible()?);
            }
            Err(e) => summary["principal_part_fit"] = json!({"error": e.to_string()}),
        },
        Built::Divergent(f) => {
            summary["closed_form_error"] = json!(f.error(&res.state));
        }
    }
    if let Some(out) = &out {
        let d = &res.diag;
        let rows = (0..d.t.len()).map(|k| vec![num(d.t[k]), num(d.sup_tau[k]), num(d.max_e[k]), num(d.energy[k]), num(d.sup_dist_u0[k]), num(d.equivariance[k])]);
        out.csv("diagnostics.csv", &["t", "sup_tau", "max_energy_density", "energy", "sup_dist_u0", "equivariance"], rows)?;
        let e = energy_density(&res.state, mesh);
        let dist: Vec<f64> = res.state.u.iter().zip(&st.u0.u).map(|(a, b)| dist_h3(*a, *b)).collect();
        let mut header = STATE_HEADER.to_vec();
        header.extend(["energy_density", "dist_u0"]);
        out.csv("final.csv", &header, state_rows(mesh, &res.state, &[&e, &dist]))?;
        if let Built::Crown(f) = &built {
            if let Ok(fit) = f.fit(&res.state, 2, 4) {
                let rows = fit.pp.coeffs.iter().enumerate().map(|(k, c)| vec![k.to_string(), num(c.re), num(c.im), num(fit.std_errors.get(k).copied().unwrap_or(f64::NAN))]);
                out.csv("principal_part.csv", &["index", "re", "im", "std_error"], rows)?;
            }
        }
        out.json("summary.json", &summary)?;
        if common.plots(Some(cfg)) {
            out.text("final_energy_density.svg", &mesh_heatmap(mesh, &e, "energy density at the final time"))?;
            out.text("final_dist_u0.svg", &mesh_heatmap(mesh, &dist, "distance to u0 at the final time"))?;
            let pts = |ys: &[f64]| d.t.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>();
            out.text(
                "diagnostics.svg",
                &line_plot(&[("sup |tau|", pts(&d.sup_tau)), ("energy", pts(&d.energy)), ("sup d(u_t, u0)", pts(&d.sup_dist_u0))], "flow diagnostics", "t", true),
            )?;
        }
    }
    print_json(&summary)?;
    if res.converged {
        Ok(())
    } else {
        Err(NonConvergence(format!("sup |tau| = {} at t = {}", num(*res.diag.sup_tau.last().unwrap_or(&f64::NAN)), num(res.state.t))).into())
    }
}

// --------------------------------------------------------------- report

pub fn report(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(invalid(format!("run directory {} does not exist", dir.display())));
    }
    let sp = dir.join("summary.json");
    let text = std::fs::read_to_string(&sp).map_err(|_| invalid(format!("{} has no summary.json (run `flow --out` first)", dir.display())))?;
    let summary: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", sp.display()))?;
    let mut samples = 0usize;
    let mut last: Option<Vec<f64>> = None;
    let dp = dir.join("diagnostics.csv");
    if dp.is_file() {
        let mut r = csv::Reader::from_path(&dp)?;
        for rec in r.records() {
            let rec = rec?;
            last = Some(rec.iter().map(|x| x.parse().unwrap_or(f64::NAN)).collect());
            samples += 1;
        }
    }
    let snapshots = std::fs::read_dir(dir.join("snapshots")).map(|d| d.count()).unwrap_or(0);
    let rep = json!({
        "run_dir": dir.display().to_string(),
        "summary": summary,
        "diagnostic_samples": samples,
        "last_sample": last.map(|v| json!({"t": v[0], "sup_tau": v[1], "max_energy_density": v[2], "energy": v[3], "sup_dist_u0": v[4], "equivariance": v[5]})),
        "snapshots": snapshots,
    });
    OutDir(dir.to_path_buf()).json("report.json", &rep)?;
    print_json(&rep)
}

// ---------------------------------------------------------- interp-demo

pub fn interp_demo(n: u32, eps: f64, pole_eps: f64, common: &Common) -> Result<()> {
    let (a, b, c) = zero_interp_coeffs(n, eps).map_err(|e| invalid(e.to_string()))?;
    let rep = zero_interp_verify(n, eps, 2000)?;
    let prof = pole_interp_profile(pole_eps).map_err(|e| invalid(e.to_string()))?;
    let curv = curvature_of_profile(&prof);
    let summary = json!({
        "n": n,
        "eps": eps,
        "coefficients": [a, b, c],
        "residuals": rep.residuals,
        "min_p": rep.min_p,
        "stationary_value": rep.stationary_value,
        "max_curvature_zero": rep.max_curvature,
        "pole_eps": pole_eps,
        "pole_endpoint_mismatch": prof.endpoint_mismatch().iter().flatten().fold(0.0f64, |m, x| m.max(*x)),
        "pole_min_k_increment": prof.min_k_increment(),
        "pole_max_curvature_interpolation": curv.max_on(Segment::Interpolation),
        "pole_cusp_curvature_deviation": curv.max_dev_on(Segment::Cusp, -1.0),
    });
    let out = common.out_dir(None)?.ok_or_else(|| invalid("interp-demo needs --out DIR"))?;
    out.csv("zero_interp.csv", &["a", "b", "c", "n", "eps"], [vec![num(a), num(b), num(c), n.to_string(), num(eps)]])?;
    // ψ|dz|² on (0, ε] then r^n beyond, curvature K = −Δ ln ψ / (2ψ)
    let zero_rows: Vec<Vec<String>> = (1..=400)
        .map(|j| {
            let r = 2.0 * eps * j as f64 / 400.0;
            let (u, du, d2u) = if r <= eps {
                let [p, d1, d2] = zero_interp_psi(n, (a, b, c), r);
                (p, d1, d2)
            } else {
                let nf = n as f64;
                (r.powi(n as i32), nf * r.powi(n as i32 - 1), nf * (nf - 1.0) * r.powi(n as i32 - 2))
            };
            let k = -0.5 * (-du * du / (u * u) + d2u / u + du / (r * u)) / u;
            vec![num(r), num(u), num(du), num(d2u), num(k), if r <= eps { "interpolation" } else { "flat" }.to_string()]
        })
        .collect();
    out.csv("zero_profile.csv", &["r", "u", "du", "d2u", "K", "segment"], zero_rows)?;
    let pole_rows = (0..prof.r.len()).map(|j| {
        vec![num(prof.r[j]), num(prof.u[j]), num(prof.du[j]), num(prof.d2u[j]), num(curv.k[j]), format!("{:?}", prof.segment[j]).to_lowercase()]
    });
    out.csv("pole_profile.csv", &["r", "u", "du", "d2u", "K", "segment"], pole_rows)?;
    out.json("interp.json", &summary)?;
    if common.plots(None) {
        let seg = |s: Segment| prof.r.iter().zip(&prof.u).zip(&prof.segment).filter(|(_, g)| **g == s).map(|((r, u), _)| (*r, *u)).collect::<Vec<_>>();
        let cusp_ref: Vec<(f64, f64)> = prof.r.iter().filter(|r| **r < 0.9).map(|r| (*r, -(r * r.ln().abs()).ln())).collect();
        let flat_ref: Vec<(f64, f64)> = prof.r.iter().filter(|r| **r > pole_eps).map(|r| (*r, -0.5 * r.ln())).collect();
        out.text(
            "pole_profile.svg",
            &line_plot(
                &[
                    ("u (cusp)", seg(Segment::Cusp)),
                    ("u (interpolation)", seg(Segment::Interpolation)),
                    ("u (flat)", seg(Segment::Flat)),
                    ("-ln(r |ln r|)", cusp_ref),
                    ("-ln(r)/2", flat_ref),
                ],
                "conformal exponent near a simple pole",
                "r",
                false,
            ),
        )?;
        let z: Vec<(f64, f64)> = (1..=400)
            .map(|j| {
                let r = 2.0 * eps * j as f64 / 400.0;
                (r, if r <= eps { zero_interp_psi(n, (a, b, c), r)[0] } else { r.powi(n as i32) })
            })
            .collect();
        out.text("zero_profile.svg", &line_plot(&[("conformal factor", z)], "smoothed conformal factor near a zero", "r", false))?;
    }
    print_json(&summary)
}

// ------------------------------------------------------------- validate

#[derive(Debug, Serialize)]
struct Invariant {
    name: &'static str,
    pass: bool,
    value: f64,
    tolerance: f64,
}

fn inv(name: &'static str, value: f64, tolerance: f64) -> Invariant {
    Invariant { name, pass: value <= tolerance, value, tolerance }
}

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(-3.0..3.0))
}

fn rand_sl2(rng: &mut ChaCha8Rng) -> Mobius {
    let (a, b, c) = (rand_c(rng), rand_c(rng), rand_c(rng));
    Mobius::new(a, b, c, (C64::new(1.0, 0.0) + b * c) / a)
}

/// Fast invariant suite: closed forms, FG round trips, trace identity,
/// energy constants, chain invariants, equivariance of the fixtures'
/// initial maps and a short divergent flow.
pub fn validate(cfg: Option<&RunConfig>, common: &Common) -> Result<()> {
    let seed = common.seed(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];

    let mut worst: f64 = 0.0;
    let mut neg: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=4u32);
        let eps = rng.gen_range(0.005..=0.2);
        let r = zero_interp_verify(n, eps, 500)?;
        worst = r.residuals.iter().fold(worst, |m, x| m.max(*x));
        neg = neg.max(-r.min_p).max(r.max_curvature);
    }
    out.push(inv("zero interpolation residuals", worst, 1e-12));
    out.push(inv("zero interpolation negative p or positive curvature", neg, 1e-10));

    let prof = pole_interp_profile(0.01)?;
    let k = curvature_of_profile(&prof);
    out.push(inv("pole interpolation C2 mismatch", prof.endpoint_mismatch().iter().flatten().fold(0.0f64, |m, x| m.max(*x)), 1e-8));
    out.push(inv("pole interpolation k decrease", (-prof.min_k_increment()).max(0.0), 0.0));
    out.push(inv("pole interpolation curvature", k.max_on(Segment::Interpolation).max(0.0), 1e-8));
    out.push(inv("cusp curvature deviation from -1", k.max_dev_on(Segment::Cusp, -1.0), 1e-8));

    let par = Mobius::translation(C64::new(1.0, 0.0)).conj_by(&rand_sl2(&mut rng));
    let lox = Mobius::diag(C64::new(2.0, 0.3));
    let mut dh: f64 = 0.0;
    let mut dc: f64 = 0.0;
    for _ in 0..30 {
        let z = C64::new(rng.gen_range(0.0..1.0), rng.gen_range(0.3..3.0));
        dh = dh.max((energy_density_fd(&|w| horodisk_map(w, &par).unwrap(), 1.0 / (z.im * z.im), z, 1e-5) - 2.0).abs());
        for c in [0.0, 1.0, 2.0] {
            let w = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            dc = dc.max((energy_density_fd(&|q| collapse_map(q, f64::atan(c), &lox).unwrap(), 1.0, w, 1e-5) - (1.0 + c * c)).abs());
        }
    }
    out.push(inv("horodisk energy density minus 2", dh, 1e-6));
    out.push(inv("collapse energy density minus 1 + c^2", dc, 1e-6));

    let mut rt: f64 = 0.0;
    let mut rel: f64 = 0.0;
    for tri in [IdealTriangulation::once_punctured_torus(), IdealTriangulation::one_boundary_torus()] {
        for _ in 0..20 {
            let z = FGCoords((0..tri.edge_count()).map(|_| rand_c(&mut rng)).collect());
            let (dev, rep) = rep_from_coords(&tri, &z)?;
            let back = fg_from_rep(&rep, &tri)?;
            rt = back.0.iter().zip(&z.0).fold(rt, |m, (a, b)| m.max((a - b).norm()));
            rel = rel.max(relator_residual(&dev, &rep)?);
        }
    }
    out.push(inv("FG round trip", rt, 1e-9));
    out.push(inv("relator residual", rel, 1e-9));

    let mut tr: f64 = 0.0;
    for _ in 0..20 {
        let alpha = Mobius::translation(rand_c(&mut rng)).conj_by(&rand_sl2(&mut rng));
        let delta = rand_sl2(&mut rng);
        for n in 0..=10 {
            let d = (alpha.pow(n) * delta).tr2();
            tr = tr.max((d - parabolic_power_trace_sq(&alpha, &delta, n)?).norm() / d.norm().max(1.0));
        }
    }
    out.push(inv("parabolic power trace identity", tr, 1e-10));

    let deck = Mobius::diag(C64::new(2.0, 0.0));
    let flat = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0), BoundaryPoint::real(2.5)])?;
    let ax = Geodesic::new(flat.point(0), flat.point(-1))?;
    let ch = ChainSpec::new(deck, vec![flat.base_points[0], elliptic_about_axis(&ax, rng.gen_range(-0.8..0.8)).apply(flat.base_points[1])])?;
    let r0 = metric_residue_chain(&ch, &[1.0, 1.0])?;
    let r1 = metric_residue_chain(&ch, &[rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)])?;
    let rs = metric_residue_chain(&straighten_chain(&ch)?, &[1.0, 1.0])?;
    out.push(inv("metric residue horoball dependence", (r0 - r1).abs(), 1e-10));
    out.push(inv("straightening residue change", (r0.abs() - rs.abs()).abs(), 1e-9));

    let tf = torus_fixture(0, TORUS_Y_TRUNC)?;
    let tu = torus_u0(&tf, 0.25, (2.0, 2.6))?;
    out.push(inv("torus initial map equivariance", equivariance_residual_fn(&tf.mesh, &tu.eval), 1e-10));
    let cf = crown_fixture(0, &crown_default_coords(), C64::new(1.5, 0.0), 4.0, 0.8, 0.0)?;
    out.push(inv("crown initial map equivariance", cf.u0_residual(), 1e-10));

    let patch = rect_grid(&GridSpec { x0: 0.0, x1: 1.0, y0: 1.0, y1: 2.0, nx: 8, ny: 8, periodic_x: None, periodic_y: None }, |z| 1.0 / (z.im * z.im))?;
    let s = MapState::new(patch.vertices.iter().map(|v| H3Point::new(v.pos.re, 0.0, v.pos.im)).collect());
    out.push(inv("identity embedding tension", sup_tension(&tension_field(&s, &patch)?, &patch), 1e-10));

    let df = divergent_fixture(4, 1.0)?;
    let r = flow(&df.u0(), &df.mesh, &df.config(0.01), &df.trace())?;
    out.push(inv("divergent flow closed-form error", df.error(&r.state), 1e-3));
    out.push(inv("divergent flow equivariance", r.diag.equivariance.iter().copied().fold(0.0, f64::max), 1e-10));
    let flagged = !monitors(&r.diag).all_stable;
    out.push(Invariant { name: "divergent flow flagged by monitors", pass: flagged, value: flagged as u8 as f64, tolerance: 1.0 });

    let pass = out.iter().all(|i| i.pass);
    let summary = json!({"seed": seed, "pass": pass, "invariants": out});
    if let Some(o) = common.out_dir(cfg)? {
        o.json("validate.json", &summary)?;
    }
    print_json(&summary)?;
    if pass {
        Ok(())
    } else {
        Err(ValidationFailure(out.iter().filter(|i| !i.pass).map(|i| i.name.to_string()).collect()).into())
    }
}


//! Run configuration: JSON with complex numbers as `[re, im]` pairs.

use hflow::framed_rep::{EndType, FGCoords, IdealTriangulation, MarkedBorderedSurface, SideGlue, Signing};
use hflow::quad_diff::{ModelDifferential, PoleSpec, PrincipalPart, ZeroSpec};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// `[re, im]`.
pub type Cx = [f64; 2];

pub fn cx(c: Cx) -> C64 {
    C64::new(c[0], c[1])
}

pub fn to_cx(z: C64) -> Cx {
    [z.re, z.im]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SurfaceBlock {
    pub genus: u32,
    #[serde(default)]
    pub boundary_marked: Vec<u32>,
    #[serde(default)]
    pub punctures: u32,
}

/// A preset name or an explicit gluing table; `null` marks a boundary arc.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TriangulationBlock {
    Preset { preset: String },
    Explicit {
        sides: Vec<[Option<[usize; 2]>; 3]>,
        #[serde(default)]
        tree: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PrincipalPartBlock {
    /// End index in the triangulation's end list.
    pub end: usize,
    pub order: u32,
    /// `α_r, …, α_1` for order ≥ 3, the single leading term otherwise.
    pub coeffs: Vec<Cx>,
    /// Ask for the residue condition too (only meaningful for even order).
    #[serde(default)]
    pub match_residue: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ZeroBlock {
    pub position: Cx,
    pub order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub genus: u32,
    pub kappa: Cx,
    #[serde(default)]
    pub zeros: Vec<ZeroBlock>,
    #[serde(default)]
    pub poles: Vec<ZeroBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    #[serde(default = "d_zero_eps")]
    pub zero_eps: f64,
    #[serde(default = "d_pole_eps")]
    pub pole_eps: f64,
    /// Cusp truncation height of the torus fixture.
    #[serde(default = "d_y_trunc")]
    pub y_trunc: f64,
    /// Outer truncation radius of the crown annulus.
    #[serde(default = "d_r_max")]
    pub r_max: f64,
    /// Model differential for `make-metric`.
    #[serde(default)]
    pub model: Option<ModelBlock>,
    /// Half width of the square sampled by `make-metric`.
    #[serde(default = "d_half_width")]
    pub half_width: f64,
    #[serde(default = "d_grid")]
    pub grid: usize,
}

fn d_zero_eps() -> f64 {
    0.1
}
fn d_pole_eps() -> f64 {
    0.01
}
fn d_y_trunc() -> f64 {
    hflow::fixtures::TORUS_Y_TRUNC
}
fn d_r_max() -> f64 {
    4.0
}
fn d_half_width() -> f64 {
    2.0
}
fn d_grid() -> usize {
    96
}

impl Default for MetricBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    ModularTorus,
    CrownEnd,
    FlatDivergent,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlowBlock {
    pub fixture: Fixture,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub tol_tau: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "d_refinement")]
    pub refinement: u32,
    /// Torus: perturbation amplitude and blending collar.
    #[serde(default = "d_amp")]
    pub amp: f64,
    #[serde(default = "d_collar")]
    pub collar: [f64; 2],
    /// Crown: pole coefficient, equivariant width and bend.
    #[serde(default = "d_alpha")]
    pub alpha: Cx,
    #[serde(default = "d_width")]
    pub width: f64,
    #[serde(default)]
    pub theta: f64,
    /// Divergent: starting height.
    #[serde(default = "d_t0")]
    pub t0: f64,
}

fn d_cfl() -> f64 {
    0.2
}
fn d_refinement() -> u32 {
    1
}
fn d_amp() -> f64 {
    0.25
}
fn d_collar() -> [f64; 2] {
    [2.0, 2.6]
}
fn d_alpha() -> Cx {
    [1.5, 0.0]
}
fn d_width() -> f64 {
    0.8
}
fn d_t0() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub directory: Option<String>,
    /// Flow steps between diagnostic samples.
    #[serde(default)]
    pub cadence: Option<usize>,
    /// Diagnostic samples between state snapshots.
    #[serde(default = "d_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "d_plots")]
    pub plots: bool,
}

fn d_snapshot_every() -> usize {
    10
}
fn d_plots() -> bool {
    true
}

impl Default for OutputBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: SurfaceBlock,
    pub triangulation: TriangulationBlock,
    pub coordinates: Vec<Cx>,
    /// One sign per interior puncture.
    #[serde(default)]
    pub signing: Option<Vec<i8>>,
    /// Designated end types (`cusp`, `cylinder`, `crown`), by end index.
    #[serde(default)]
    pub end_types: Option<Vec<String>>,
    #[serde(default)]
    pub principal_parts: Vec<PrincipalPartBlock>,
    #[serde(default)]
    pub metric: MetricBlock,
    #[serde(default)]
    pub flow: Option<FlowBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Schema or cross-reference problem at a JSON path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigIssue> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigIssue { path: "$".into(), message: format!("cannot read {}: {e}", path.display()) })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigIssue> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        ConfigIssue { path: if p == "." { "$".into() } else { format!("$.{p}") }, message: e.into_inner().to_string() }
    })
}

impl RunConfig {
    pub fn surface(&self) -> MarkedBorderedSurface {
        MarkedBorderedSurface {
            genus: self.surface.genus,
            boundary_marked_counts: self.surface.boundary_marked.clone(),
            interior_punctures: self.surface.punctures,
        }
    }

    pub fn triangulation(&self) -> Result<IdealTriangulation, ConfigIssue> {
        match &self.triangulation {
            TriangulationBlock::Preset { preset } => match preset.as_str() {
                "once-punctured-torus" => Ok(IdealTriangulation::once_punctured_torus()),
                "one-boundary-torus" => Ok(IdealTriangulation::one_boundary_torus()),
                other => Err(ConfigIssue { path: "$.triangulation.preset".into(), message: format!("unknown preset {other:?}") }),
            },
            TriangulationBlock::Explicit { sides, tree } => {
                let table = sides
                    .iter()
                    .map(|t| t.map(|s| s.map_or(SideGlue::Boundary, |[tri, side]| SideGlue::Glued { tri, side })))
                    .collect();
                IdealTriangulation::new(table, tree.clone(), None)
                    .map_err(|e| ConfigIssue { path: "$.triangulation.sides".into(), message: e.to_string() })
            }
        }
    }

    pub fn coords(&self, tri: &IdealTriangulation) -> Result<FGCoords, ConfigIssue> {
        if self.coordinates.len() != tri.edge_count() {
            return Err(ConfigIssue {
                path: "$.coordinates".into(),
                message: format!("{} entries, triangulation has {} edges", self.coordinates.len(), tri.edge_count()),
            });
        }
        for (i, c) in self.coordinates.iter().enumerate() {
            if !(c[0].is_finite() && c[1].is_finite()) || (c[0] == 0.0 && c[1] == 0.0) {
                return Err(ConfigIssue { path: format!("$.coordinates[{i}]"), message: "must be finite and nonzero".into() });
            }
        }
        Ok(FGCoords(self.coordinates.iter().copied().map(cx).collect()))
    }

    pub fn signing(&self) -> Result<Option<Signing>, ConfigIssue> {
        let Some(s) = &self.signing else { return Ok(None) };
        if s.len() != self.surface.punctures as usize {
            return Err(ConfigIssue { path: "$.signing".into(), message: format!("{} signs for {} punctures", s.len(), self.surface.punctures) });
        }
        if let Some(i) = s.iter().position(|x| *x != 1 && *x != -1) {
            return Err(ConfigIssue { path: format!("$.signing[{i}]"), message: "sign must be 1 or -1".into() });
        }
        Ok(Some(Signing(s.clone())))
    }

    pub fn end_types(&self, tri: &IdealTriangulation) -> Result<Vec<EndType>, ConfigIssue> {
        let Some(names) = &self.end_types else { return Ok(vec![]) };
        if names.len() != tri.ends.len() {
            return Err(ConfigIssue { path: "$.end_types".into(), message: format!("{} entries, triangulation has {} ends", names.len(), tri.ends.len()) });
        }
        names
            .iter()
            .enumerate()
            .map(|(i, n)| match n.as_str() {
                "cusp" => Ok(EndType::Cusp),
                "cylinder" => Ok(EndType::Cylinder),
                "crown" => Ok(EndType::Crown),
                other => Err(ConfigIssue { path: format!("$.end_types[{i}]"), message: format!("unknown end type {other:?}") }),
            })
            .collect()
    }

    pub fn principal_parts(&self, tri: &IdealTriangulation) -> Result<Vec<(usize, PrincipalPart, bool)>, ConfigIssue> {
        self.principal_parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let path = format!("$.principal_parts[{i}]");
                if p.end >= tri.ends.len() {
                    return Err(ConfigIssue { path: format!("{path}.end"), message: format!("no end {} (triangulation has {})", p.end, tri.ends.len()) });
                }
                let coeffs: Vec<C64> = p.coeffs.iter().copied().map(cx).collect();
                let pp = if p.order >= 3 {
                    PrincipalPart::higher(p.order, coeffs)
                } else {
                    match coeffs.as_slice() {
                        [lead] => PrincipalPart::low(p.order, *lead),
                        _ => return Err(ConfigIssue { path: format!("{path}.coeffs"), message: "order <= 2 takes exactly one coefficient".into() }),
                    }
                };
                pp.map(|pp| (p.end, pp, p.match_residue)).map_err(|e| ConfigIssue { path, message: e.to_string() })
            })
            .collect()
    }
}

impl ModelBlock {
    pub fn build(&self) -> Result<ModelDifferential, ConfigIssue> {
        let zeros = self.zeros.iter().map(|z| ZeroSpec { position: cx(z.position), order: z.order }).collect();
        let poles = self.poles.iter().map(|z| PoleSpec { position: cx(z.position), order: z.order }).collect();
        ModelDifferential::new(self.genus, cx(self.kappa), zeros, poles).map_err(|e| ConfigIssue { path: "$.metric.model".into(), message: e.to_string() })
    }
}

//! Reference problems wired end to end: the modular once-punctured torus,
//! an order-3 crown end of the one-boundary torus, and the flat divergent
//! strip.

use crate::framed_rep::{chain_from_framing, rep_from_coords, FGCoords, FramedRepresentation, IdealTriangulation, RepError};
use crate::heat_flow::{equivariance_residual_fn, FlowConfig, FlowResult, MapState, TensionScheme, TraceSpec};
use crate::hyperbolic::{axis, dist_h3, exp_h3, H3Point, Mobius, TangentVector};
use crate::initial_map::{assemble_u0, horodisk_map, ramp, CrownModel, EndPiece, InitError, InitialMap};
use crate::mesh::{kite_bottom, modular_torus_generators, modular_torus_mesh, rect_grid, EquivariantMesh, GridSpec, ModularTorusSpec};
use crate::quad_diff::{compatible_with_chain, fit_principal_part, hopf_from_grid, ChainSpec, HopfSample, PrincipalPart, PrincipalPartFit, QuadError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Default cusp truncation height in kite coordinates.
pub const TORUS_Y_TRUNC: f64 = 3.0;

/// Identity embedding of the upper half-plane onto `{x2 = 0}`.
pub fn identity_map(z: C64) -> H3Point {
    H3Point::new(z.re, 0.0, z.im)
}

/// Once-punctured torus `ℍ² / [PSL₂ℤ, PSL₂ℤ]` with `ρ` the inclusion and
/// the hyperbolic metric `λ² = 1/y²` on the kite domain.
pub struct TorusFixture {
    pub mesh: EquivariantMesh,
    pub spec: ModularTorusSpec,
    pub generators: [Mobius; 2],
    /// Peripheral deck map of the cusp.
    pub peripheral: Mobius,
    pub trace: TraceSpec,
}

pub fn torus_fixture(level: u32, y_trunc: f64) -> Result<TorusFixture, FixtureError> {
    let spec = ModularTorusSpec::level(level, y_trunc);
    let mesh = modular_torus_mesh(spec, |z| 1.0 / (z.im * z.im)).map_err(InitError::from)?;
    let generators = modular_torus_generators();
    let target = C64::new(2.5, 1.5);
    let p0 = mesh.interior().min_by(|a, b| (mesh.vertices[*a].pos - target).norm().partial_cmp(&(mesh.vertices[*b].pos - target).norm()).unwrap()).unwrap();
    let axes = generators.iter().map(axis).collect::<Result<Vec<_>, _>>().map_err(InitError::from)?;
    let trace = TraceSpec { p0, words: generators.to_vec(), axes };
    Ok(TorusFixture { mesh, spec, generators, peripheral: Mobius::translation(C64::new(6.0, 0.0)), trace })
}

/// Relative height of `z` between the kite's lower arcs (0) and the cusp
/// truncation (1).
fn kite_fraction(z: C64, y_trunc: f64) -> f64 {
    let yb = kite_bottom(z.re.rem_euclid(1.0));
    ((z.im.ln() - yb.ln()) / (y_trunc.ln() - yb.ln())).clamp(0.0, 1.0)
}

/// Identity perturbed by `amp · sin(π f)` (`f` from `kite_fraction`) in the
/// normal and in-plane directions; zero on the arcs and the truncation, so
/// the deck relations hold exactly. Hyperbolic size at most `1.12 · amp`.
pub fn perturbed_identity(z: C64, amp: f64, y_trunc: f64) -> H3Point {
    let b = amp * (PI * kite_fraction(z, y_trunc)).sin();
    let p = identity_map(z);
    let v = [0.5 * b * z.im * (PI * z.re / 3.0).sin(), b * z.im, 0.0];
    exp_h3(p, &TangentVector::new(p, v))
}

/// Perturbed core glued by geodesic blending to the horodisk map over the
/// collar `collar.0 ≤ y ≤ collar.1`.
pub fn torus_u0<'a>(fix: &'a TorusFixture, amp: f64, collar: (f64, f64)) -> Result<InitialMap<'a>, FixtureError> {
    let yt = fix.spec.y_trunc;
    let p = fix.peripheral;
    // the horodisk chart has deck x ↦ x + 1
    let scale = 6.0;
    let end = EndPiece {
        weight: Box::new(move |z: C64| ramp((z.im - collar.0) / (collar.1 - collar.0))),
        map: Box::new(move |z: C64| horodisk_map(z / scale, &p).expect("parabolic peripheral")),
    };
    Ok(assemble_u0(&fix.mesh, Box::new(move |z| perturbed_identity(z, amp, yt)), vec![end])?)
}

/// Largest `d(u(v), identity(v))` over vertices.
pub fn sup_dist_to_identity(state: &MapState, mesh: &EquivariantMesh) -> f64 {
    state.u.iter().zip(&mesh.vertices).map(|(u, v)| dist_h3(*u, identity_map(v.pos))).fold(0.0, f64::max)
}

/// Default torus flow settings.
pub fn torus_flow_config() -> FlowConfig {
    FlowConfig { dt: None, cfl: 0.2, t_max: 200.0, tol_tau: 1e-5, cadence: 200, planar: false, energy_every_step: true, scheme: TensionScheme::Geodesic }
}

/// One-boundary torus with a single boundary marked point: the crown end
/// carries a 1-chain and an order-3 pole `α z⁻³ dz²`.
pub struct CrownFixture {
    pub tri: IdealTriangulation,
    pub rep: FramedRepresentation,
    pub chain: ChainSpec,
    pub model: CrownModel,
    pub mesh: EquivariantMesh,
    pub grid: GridSpec,
    pub prescribed: PrincipalPart,
}

/// Default Fuchsian coordinates of the one-boundary torus fixture.
pub fn crown_default_coords() -> FGCoords {
    FGCoords(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.5, 0.0), C64::new(1.5, 0.0)])
}

/// Log-polar cells per level: `7·2^l` radial, `16·2^l` angular.
pub fn crown_fixture(level: u32, coords: &FGCoords, alpha: C64, r_max: f64, width: f64, theta: f64) -> Result<CrownFixture, FixtureError> {
    let tri = IdealTriangulation::one_boundary_torus();
    let (_, rep) = rep_from_coords(&tri, coords)?;
    let chain = chain_from_framing(&rep, &tri, 0)?;
    let model = CrownModel::new(&chain, alpha, width, theta)?;
    let s = 1usize << level;
    let (mesh, grid) = crate::initial_map::crown_mesh(&model, r_max, 7 * s, 16 * s)?;
    let prescribed = PrincipalPart::higher(3, vec![alpha.sqrt()])?;
    Ok(CrownFixture { tri, rep, chain, model, mesh, grid, prescribed })
}

impl CrownFixture {
    pub fn u0(&self) -> MapState {
        MapState::new(self.mesh.vertices.iter().map(|v| self.model.eval_sigma(v.pos)).collect())
    }

    pub fn u0_residual(&self) -> f64 {
        equivariance_residual_fn(&self.mesh, |z| self.model.eval_sigma(z))
    }

    /// Compatibility of the prescription with the chain (order check only
    /// for odd order).
    pub fn compatible(&self) -> Result<bool, FixtureError> {
        Ok(compatible_with_chain(&self.prescribed, &self.chain)?)
    }

    /// Hopf differential of a state in the puncture coordinate `z = e^σ`,
    /// dropping `margin` rings next to each truncation circle.
    pub fn hopf_samples(&self, state: &MapState, margin: usize) -> Vec<HopfSample> {
        let g = &self.grid;
        let vals = self.mesh.node_values(&state.u);
        let (nx, ny) = (g.nx, g.ny);
        let hx = (g.x1 - g.x0) / nx as f64;
        let hy = (g.y1 - g.y0) / ny as f64;
        // one extra angular row on each side through the deck map
        let deck = g.periodic_y.unwrap();
        let inv = deck.inverse();
        let cols: Vec<Vec<H3Point>> = (0..=nx)
            .map(|i| {
                let at = |j: usize| vals[j * (nx + 1) + i];
                let mut c = vec![inv.apply_interior(at(ny - 1))];
                c.extend((0..=ny).map(at));
                c.push(deck.apply_interior(at(1)));
                c
            })
            .collect();
        hopf_from_grid(&cols, g.x0, g.y0 - hy, hx, hy)
            .into_iter()
            .filter(|s| s.z.re > g.x0 + (margin as f64 + 0.5) * hx && s.z.re < g.x1 - (margin as f64 + 0.5) * hx)
            .filter(|s| s.z.im >= g.y0 - 1e-12 && s.z.im < g.y1 - 0.5 * hy)
            .map(|s| {
                let z = s.z.exp();
                HopfSample { z, phi: s.phi / (z * z), weight: s.weight * z.norm_sqr() }
            })
            .collect()
    }

    /// Fit of the order-3 principal part from a state's Hopf differential.
    pub fn fit(&self, state: &MapState, margin: usize, regular: usize) -> Result<PrincipalPartFit, FixtureError> {
        Ok(fit_principal_part(&self.hopf_samples(state, margin), 3, regular)?)
    }

    /// Relative error of the fitted leading coefficient, up to sign.
    pub fn leading_error(&self, fit: &PrincipalPartFit) -> f64 {
        let want = self.prescribed.coeffs[0];
        let got = fit.pp.coeffs[0];
        (got - want).norm().min((got + want).norm()) / want.norm()
    }
}

pub fn crown_flow_config() -> FlowConfig {
    FlowConfig { dt: None, cfl: 0.2, t_max: 200.0, tol_tau: 1e-4, cadence: 200, planar: false, energy_every_step: true, scheme: TensionScheme::Geodesic }
}

/// Flat periodic square `[0,1]²`, `λ² = 1`, deck `x ↦ x + 1` acting by the
/// translation `z ↦ z + 1` and `y ↦ y + 1` acting trivially. Starting from
/// `u₀ = (x, 0, t₀)` the flow is `u_t = (x, 0, √(2t + t₀²))`.
pub struct DivergentFixture {
    pub mesh: EquivariantMesh,
    pub t0: f64,
}

pub fn divergent_fixture(n: usize, t0: f64) -> Result<DivergentFixture, FixtureError> {
    let spec = GridSpec {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
        nx: n,
        ny: n,
        periodic_x: Some(Mobius::translation(C64::new(1.0, 0.0))),
        periodic_y: Some(Mobius::identity()),
    };
    let mesh = rect_grid(&spec, |_| 1.0).map_err(InitError::from)?;
    Ok(DivergentFixture { mesh, t0 })
}

impl DivergentFixture {
    pub fn exact(&self, z: C64, t: f64) -> H3Point {
        H3Point::new(z.re, 0.0, (2.0 * t + self.t0 * self.t0).sqrt())
    }

    pub fn u0(&self) -> MapState {
        MapState::new(self.mesh.vertices.iter().map(|v| self.exact(v.pos, 0.0)).collect())
    }

    pub fn u0_residual(&self) -> f64 {
        equivariance_residual_fn(&self.mesh, |z| self.exact(z, 0.0))
    }

    pub fn error(&self, state: &MapState) -> f64 {
        state.u.iter().zip(&self.mesh.vertices).map(|(u, v)| dist_h3(*u, self.exact(v.pos, state.t))).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> TraceSpec {
        TraceSpec { p0: 0, words: vec![Mobius::translation(C64::new(1.0, 0.0))], axes: vec![] }
    }

    pub fn config(&self, dt: f64) -> FlowConfig {
        FlowConfig { dt: Some(dt), cfl: 0.2, t_max: 4.0, tol_tau: 1e-12, cadence: 10, planar: false, energy_every_step: false, scheme: TensionScheme::Geodesic }
    }
}

/// Largest pointwise distance between two flows' final states.
pub fn state_distance(a: &FlowResult, b: &FlowResult) -> f64 {
    a.state.u.iter().zip(&b.state.u).map(|(x, y)| dist_h3(*x, *y)).fold(0.0, f64::max)
}

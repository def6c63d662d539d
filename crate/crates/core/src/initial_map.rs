//! Equivariant initial maps: cusp horodisk embeddings, boundary collapsing
//! maps, crown end models with bending, geodesic blending over collars and
//! the tension audit.

use crate::heat_flow::{flow, tension_fd, tension_field, FlowConfig, FlowError, MapState, TraceSpec};
use crate::hyperbolic::{axis, classify_tol, parabolic_normalizer, exp_h3, log_h3, BoundaryPoint, GeomError, H3Point, MapClass, Mobius, DELTA_CLASS};
use crate::mesh::{rect_grid, EquivariantMesh, GridSpec, MeshError};
use crate::quad_diff::{halfplane_partition, ChainSpec, HalfplanePartition, QuadError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InitError {
    #[error("peripheral is not parabolic; the cusp end is not type-preserving")]
    NotParabolic,
    #[error("peripheral is not loxodromic")]
    NotLoxodromic,
    #[error("collapse angle |theta| = pi/2 has no slope")]
    VerticalCollapse,
    #[error("collar weights sum to {0} > 1 at {1}")]
    Overlap(f64, C64),
    #[error("crown model needs a 1-chain, got m = {0}")]
    ChainLength(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// `6s⁵ − 15s⁴ + 10s³` clamped to `[0, 1]`: `C²` with flat ends.
pub fn ramp(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

pub fn ramp_prime(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

fn h3(z: C64, h: f64) -> H3Point {
    H3Point::new(z.re, z.im, h)
}

/// Conjugator `N` with `N P N⁻¹ = z + 1` for a parabolic `P`.
pub fn horodisk_normalizer(peripheral: &Mobius) -> Result<Mobius, InitError> {
    parabolic_normalizer(peripheral).map_err(|_| InitError::NotParabolic)
}

/// `f(x, y) = N⁻¹(x, 0, y)`: horodisk chart with deck `x ↦ x + 1` sent
/// isometrically onto a totally geodesic plane, equivariant for `P`.
pub fn horodisk_map(z: C64, peripheral: &Mobius) -> Result<H3Point, InitError> {
    let n = horodisk_normalizer(peripheral)?;
    Ok(n.inverse().apply_interior(H3Point::new(z.re, 0.0, z.im)))
}

/// `N` sending the axis start to 0 and its end to ∞.
pub fn axis_normalizer(peripheral: &Mobius) -> Result<Mobius, InitError> {
    if classify_tol(peripheral, DELTA_CLASS) != MapClass::Loxodromic {
        return Err(InitError::NotLoxodromic);
    }
    let ax = axis(peripheral)?;
    let target = [BoundaryPoint::real(0.0), BoundaryPoint::Infinity, BoundaryPoint::real(1.0)];
    // any third point off the axis endpoints will do
    let third = [1.0, -1.0, 2.0]
        .into_iter()
        .map(BoundaryPoint::real)
        .find(|p| p.chordal(ax.start) > 1e-6 && p.chordal(ax.end) > 1e-6)
        .unwrap();
    Ok(Mobius::from_triples([ax.start, ax.end, third], target)?)
}

/// `g(x, y) = N⁻¹(0, 0, e^{x − y tan θ})`: the half-plane collapsed onto the
/// axis at unit speed; equivariant for `x ↦ x + ℓ(P)`.
pub fn collapse_map(z: C64, theta: f64, peripheral: &Mobius) -> Result<H3Point, InitError> {
    if (theta.abs() - PI / 2.0).abs() < 1e-12 {
        return Err(InitError::VerticalCollapse);
    }
    let n = axis_normalizer(peripheral)?;
    Ok(n.inverse().apply_interior(H3Point::new(0.0, 0.0, (z.re - theta.tan() * z.im).exp())))
}

/// `e = λ⁻² (|∂ₓf|² + |∂ᵧf|²)` by central differences.
pub fn energy_density_fd(f: &dyn Fn(C64) -> H3Point, lambda2: f64, z: C64, h: f64) -> f64 {
    let d = |dz: C64| {
        let (p, m) = (f(z + dz).as_array(), f(z - dz).as_array());
        [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h), (p[2] - m[2]) / (2.0 * h)]
    };
    let w = f(z).x3;
    let sq = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / (w * w);
    (sq(d(C64::new(h, 0.0))) + sq(d(C64::new(0.0, h)))) / lambda2
}

/// Geodesic interpolation `exp_p(w · log_p q)`.
pub fn blend(p: H3Point, q: H3Point, w: f64) -> H3Point {
    if w <= 0.0 {
        return p;
    }
    if w >= 1.0 {
        return q;
    }
    exp_h3(p, &log_h3(p, q).scale(w))
}

/// End type with its chart data.
#[derive(Debug, Clone, PartialEq)]
pub enum EndKind {
    Cusp,
    Cylinder,
    Crown(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndChart {
    pub kind: EndKind,
    /// Horocycle height (cusp) or `|ζ|` radius (crown, cylinder).
    pub truncation: f64,
    pub partition: Option<HalfplanePartition>,
    /// Bend angles per boundary cusp.
    pub bends: Vec<f64>,
}

impl EndChart {
    pub fn crown(n: u32, leading: C64, truncation: f64, bends: Vec<f64>) -> Result<Self, InitError> {
        Ok(EndChart { kind: EndKind::Crown(n), truncation, partition: Some(halfplane_partition(n, leading)?), bends })
    }
}

/// Model map on an order-3 crown end. With `ζ = −2√α z^{−1/2} = ξ + iη`
/// the fundamental domain is `ξ < 0`, and
/// `u = N⁻¹ R_{s(η)θ}(X(η), e^{−2ξ})` where `X` ramps from `x0` to `x1`
/// across `|η| < W`, `R_θ` rotates about the vertical line over `x0`, and
/// `N` sends `(q0, q1, q2) = (p, Ap, A²p)` to `(x0, ∞, x1)` scaled so that
/// `N A N⁻¹ = x1 − 1/(z − x0)`. Where `|η| ≥ W` the map is a unit-speed
/// parametrization of a chain geodesic, hence harmonic with Hopf
/// differential `α z⁻³ dz²`.
#[derive(Debug, Clone)]
pub struct CrownModel {
    pub alpha: C64,
    pub width: f64,
    pub theta: f64,
    pub normalizer: Mobius,
    pub x0: C64,
    pub x1: C64,
    /// Deck image of `φ ↦ φ + 2π` (the bent peripheral when `θ ≠ 0`).
    pub deck: Mobius,
}

impl CrownModel {
    pub fn new(chain: &ChainSpec, alpha: C64, width: f64, theta: f64) -> Result<Self, InitError> {
        if chain.m() != 1 {
            return Err(InitError::ChainLength(chain.m()));
        }
        let q = [chain.point(0), chain.point(1), chain.point(2)];
        let n0 = Mobius::from_triples(q, [BoundaryPoint::real(0.0), BoundaryPoint::Infinity, BoundaryPoint::real(1.0)])?;
        let at = n0 * chain.deck * n0.inverse();
        // at(z) = 1 − k / z
        let k = -at.b / at.c;
        let c = C64::new(1.0, 0.0) / k.sqrt();
        let normalizer = Mobius::diag(c.sqrt()) * n0;
        let x0 = C64::new(0.0, 0.0);
        let x1 = c;
        let rot = Self::rotation(x0, theta);
        let deck = normalizer.inverse() * rot * normalizer * chain.deck;
        Ok(CrownModel { alpha, width, theta, normalizer, x0, x1, deck })
    }

    fn rotation(x0: C64, theta: f64) -> Mobius {
        Mobius::translation(x0) * Mobius::diag(C64::from_polar(1.0, theta / 2.0)) * Mobius::translation(-x0)
    }

    /// Natural coordinate `ζ(σ)`, `σ = ln z`.
    pub fn zeta(&self, sigma: C64) -> C64 {
        -2.0 * self.alpha.sqrt() * (-sigma / 2.0).exp()
    }

    /// `φ` range `[φ0, φ0 + 2π]` of the fundamental domain.
    pub fn phi0(&self) -> f64 {
        self.alpha.arg() - PI
    }

    /// Model value on the fundamental domain, in natural coordinates.
    pub fn eval_zeta(&self, zeta: C64) -> H3Point {
        let (xi, eta) = (zeta.re, zeta.im);
        let s = ramp((eta + self.width) / (2.0 * self.width));
        let x = self.x0 + (self.x1 - self.x0) * s;
        let r = C64::from_polar(1.0, s * self.theta);
        let xr = self.x0 + r * (x - self.x0);
        self.normalizer.inverse().apply_interior(h3(xr, (-2.0 * xi).exp()))
    }

    /// Model value at `σ = s + iφ`, any sheet.
    pub fn eval_sigma(&self, sigma: C64) -> H3Point {
        let k = ((sigma.im - self.phi0() - PI) / (2.0 * PI)).round() as i64;
        let base = C64::new(sigma.re, sigma.im - 2.0 * PI * k as f64);
        let v = self.eval_zeta(self.zeta(base));
        if k == 0 { v } else { self.deck.pow(k).apply_interior(v) }
    }

    /// `s` with `|ζ| = r`.
    pub fn s_at_radius(&self, r: f64) -> f64 {
        2.0 * (2.0 * self.alpha.norm().sqrt() / r).ln()
    }

    /// `λ² = 4|q|` in `σ` coordinates.
    pub fn lambda2(&self, sigma: C64) -> f64 {
        4.0 * self.alpha.norm() * (-sigma.re).exp()
    }
}

/// Log-polar mesh of the crown annulus `1 ≤ |ζ| ≤ r_max`, periodic in `φ`
/// with target the model's deck map; both truncation circles are Dirichlet.
pub fn crown_mesh(model: &CrownModel, r_max: f64, ns: usize, nphi: usize) -> Result<(EquivariantMesh, GridSpec), InitError> {
    let spec = GridSpec {
        x0: model.s_at_radius(r_max),
        x1: model.s_at_radius(1.0),
        y0: model.phi0(),
        y1: model.phi0() + 2.0 * PI,
        nx: ns,
        ny: nphi,
        periodic_x: None,
        periodic_y: Some(model.deck),
    };
    let mesh = rect_grid(&spec, |z| model.lambda2(z))?;
    Ok((mesh, spec))
}

/// Blending piece: a map and its collar weight.
pub struct EndPiece<'a> {
    pub weight: Box<dyn Fn(C64) -> f64 + 'a>,
    pub map: Box<dyn Fn(C64) -> H3Point + 'a>,
}

/// Initial map: per-vertex values and the formula they came from.
pub struct InitialMap<'a> {
    pub values: Vec<H3Point>,
    pub eval: Box<dyn Fn(C64) -> H3Point + 'a>,
}

impl InitialMap<'_> {
    pub fn state(&self) -> MapState {
        MapState::new(self.values.clone())
    }
}

/// Geodesic blending of end maps into a core map; the weights must be deck
/// invariant and have disjoint supports.
pub fn assemble_u0<'a>(mesh: &EquivariantMesh, core: Box<dyn Fn(C64) -> H3Point + 'a>, ends: Vec<EndPiece<'a>>) -> Result<InitialMap<'a>, InitError> {
    for v in &mesh.vertices {
        let total: f64 = ends.iter().map(|e| (e.weight)(v.pos)).sum();
        let nonzero = ends.iter().filter(|e| (e.weight)(v.pos) > 0.0).count();
        if total > 1.0 + 1e-12 || nonzero > 1 {
            return Err(InitError::Overlap(total, v.pos));
        }
    }
    let eval = move |z: C64| {
        let mut u = core(z);
        for e in &ends {
            let w = (e.weight)(z);
            if w > 0.0 {
                u = blend(u, (e.map)(z), w);
            }
        }
        u
    };
    let values = mesh.vertices.iter().map(|v| eval(v.pos)).collect();
    Ok(InitialMap { values, eval: Box::new(eval) })
}

/// Planar flow of a Fuchsian start: returns the premap and its `sup|τ|`.
pub fn fuchsian_premap(mesh: &EquivariantMesh, start: &MapState, cfg: &FlowConfig) -> Result<(MapState, f64), InitError> {
    let cfg = FlowConfig { planar: true, ..cfg.clone() };
    let res = flow(start, mesh, &cfg, &TraceSpec::default())?;
    let quality = res.diag.sup_tau.last().copied().unwrap_or(f64::INFINITY);
    Ok((res.state, quality))
}

/// Per-region tension summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionAudit {
    pub name: String,
    pub sup_tau: f64,
    pub vertices: usize,
    /// Slope and `R²` of the binned `ln max|τ|` against distance, when requested.
    pub decay: Option<(f64, f64)>,
}

/// Hyperbolic tension norm per vertex of a state on its mesh.
pub fn mesh_tension_norms(state: &MapState, mesh: &EquivariantMesh) -> Result<Vec<f64>, InitError> {
    Ok(tension_field(state, mesh)?.iter().map(|t| t.norm()).collect())
}

/// Hyperbolic tension norm per vertex of a map formula, by fine central
/// differences (free of the mesh discretization floor).
pub fn formula_tension_norms(mesh: &EquivariantMesh, f: &dyn Fn(C64) -> H3Point, h: f64) -> Vec<f64> {
    mesh.vertices
        .iter()
        .map(|v| {
            let g = |x: f64, y: f64| f(C64::new(x, y)).as_array();
            let t = tension_fd(&g, v.lambda2, v.pos.re, v.pos.im, h);
            (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt() / f(v.pos).x3
        })
        .collect()
}

const AUDIT_BINS: usize = 12;

/// `(mean distance, ln max value)` per equal-width distance bin: the decay
/// envelope, insensitive to sign changes of the profile across the strip.
fn envelope(pts: &[(f64, f64)], bins: usize) -> Vec<(f64, f64)> {
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![];
    }
    let mut acc = vec![(0.0, 0usize, 0.0f64); bins];
    for (d, t) in pts {
        let b = (((d - lo) / (hi - lo)) * bins as f64).floor().min(bins as f64 - 1.0) as usize;
        acc[b].0 += d;
        acc[b].1 += 1;
        acc[b].2 = acc[b].2.max(*t);
    }
    acc.into_iter().filter(|a| a.1 > 0).map(|(s, n, m)| (s / n as f64, m.ln())).collect()
}

/// Labelled region with an optional distance for a decay fit.
pub type AuditRegion<'a> = (&'a str, &'a dyn Fn(C64) -> bool, Option<&'a dyn Fn(C64) -> f64>);

/// `sup|τ|` per labelled region; regions with a distance function also get
/// a least-squares fit of `ln|τ|` against it.
pub fn tension_audit(tau: &[f64], mesh: &EquivariantMesh, regions: &[AuditRegion]) -> Vec<RegionAudit> {
    let mut out = vec![];
    for (name, inside, dist) in regions {
        let ids: Vec<usize> = mesh.interior().filter(|v| inside(mesh.vertices[*v].pos)).collect();
        let sup = ids.iter().map(|v| tau[*v]).fold(0.0, f64::max);
        let decay = dist.map(|d| {
            let pts: Vec<(f64, f64)> = ids.iter().filter(|v| tau[**v] > 0.0).map(|v| (d(mesh.vertices[*v].pos), tau[*v])).collect();
            linear_fit(&envelope(&pts, AUDIT_BINS))
        });
        out.push(RegionAudit { name: name.to_string(), sup_tau: sup, vertices: ids.len(), decay });
    }
    out
}

/// Least-squares slope and `R²` of `y` against `x`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framed_rep::{chain_from_framing, rep_from_coords, FGCoords, IdealTriangulation};
    use crate::heat_flow::equivariance_residual_fn;
    use crate::hyperbolic::{dist_h3, translation_length};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn crown_chain() -> ChainSpec {
        let t = IdealTriangulation::one_boundary_torus();
        let (_, rep) = rep_from_coords(&t, &FGCoords(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), c(1.5, 0.0)])).unwrap();
        chain_from_framing(&rep, &t, 0).unwrap()
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), 0.0);
        assert_eq!(ramp(1.0), 1.0);
        assert_eq!(ramp_prime(0.0), 0.0);
        assert_eq!(ramp_prime(1.0), 0.0);
        assert!((ramp(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn horodisk_commutes_with_deck() {
        let p = Mobius::real(1.0, 0.0, -2.0, 1.0).conj_by(&Mobius::real(2.0, 1.0, 1.0, 1.0));
        for (x, y) in [(0.1, 2.0), (-0.7, 3.5)] {
            let a = horodisk_map(c(x + 1.0, y), &p).unwrap();
            let b = p.apply_interior(horodisk_map(c(x, y), &p).unwrap());
            assert!(dist_h3(a, b) < 1e-10);
        }
        assert_eq!(horodisk_map(c(0.0, 1.0), &Mobius::real(2.0, 0.0, 0.0, 0.5)), Err(InitError::NotParabolic));
    }

    #[test]
    fn collapse_lies_on_axis_and_commutes() {
        let p = Mobius::real(2.0, 1.0, 1.0, 1.0);
        let l = translation_length(&p).unwrap();
        let ax = axis(&p).unwrap();
        let f = |z: C64| collapse_map(z, 0.4, &p).unwrap();
        for (x, y) in [(0.2, 0.3), (-1.0, 2.0)] {
            assert!(ax.distance_to(f(c(x, y))) < 1e-10);
            assert!(dist_h3(f(c(x + l, y)), p.apply_interior(f(c(x, y)))) < 1e-9);
        }
        assert_eq!(collapse_map(c(0.0, 0.0), PI / 2.0, &p), Err(InitError::VerticalCollapse));
    }

    #[test]
    fn crown_model_is_equivariant_and_asymptotic() {
        let ch = crown_chain();
        let m = CrownModel::new(&ch, c(1.5, 0.0), 0.8, 0.0).unwrap();
        assert!(m.deck.dist_pm(&ch.deck) < 1e-10);
        for s in [-2.0, -0.5, 0.3] {
            let a = m.eval_sigma(c(s, m.phi0() + 2.0 * PI));
            let b = m.deck.apply_interior(m.eval_sigma(c(s, m.phi0())));
            assert!(dist_h3(a, b) < 1e-10);
        }
        // deep leaves at |η| > W lie on the chain geodesics
        let g01 = crate::hyperbolic::Geodesic::new(ch.point(0), ch.point(1)).unwrap();
        let g12 = crate::hyperbolic::Geodesic::new(ch.point(1), ch.point(2)).unwrap();
        assert!(g01.distance_to(m.eval_zeta(c(-0.5, -3.0))) < 1e-9);
        assert!(g12.distance_to(m.eval_zeta(c(-0.5, 3.0))) < 1e-9);
        // Fuchsian: planar image
        let bent = CrownModel::new(&ch, c(1.5, 0.0), 0.8, 0.5).unwrap();
        for s in [-2.0, 0.3] {
            let a = bent.eval_sigma(c(s, bent.phi0() + 2.0 * PI));
            let b = bent.deck.apply_interior(bent.eval_sigma(c(s, bent.phi0())));
            assert!(dist_h3(a, b) < 1e-10);
        }
    }

    #[test]
    fn zero_bend_model_is_a_premap_on_the_end() {
        let ch = crown_chain();
        let m = CrownModel::new(&ch, c(1.5, 0.0), 0.8, 0.0).unwrap();
        let b = CrownModel::new(&ch, c(1.5, 0.0), 0.8, 1e-300).unwrap();
        let z = c(-1.3, 0.2);
        assert!(dist_h3(m.eval_zeta(z), b.eval_zeta(z)) < 1e-12);
    }

    #[test]
    fn crown_tension_decays() {
        let ch = crown_chain();
        let m = CrownModel::new(&ch, c(1.5, 0.0), 0.8, 0.0).unwrap();
        let (mesh, _) = crown_mesh(&m, 4.0, 28, 64).unwrap();
        let u0 = MapState::new(mesh.vertices.iter().map(|v| m.eval_sigma(v.pos)).collect());
        let res = equivariance_residual_fn(&mesh, |z| m.eval_sigma(z));
        assert!(res < 1e-10, "{res}");
        let mm = m.clone();
        let strip = move |z: C64| mm.zeta(z).im.abs() < 0.4;
        let mm = m.clone();
        let depth = move |z: C64| -mm.zeta(z).re;
        let mm = m.clone();
        let tau = formula_tension_norms(&mesh, &move |z| mm.eval_sigma(z), 1e-4);
        let audit = tension_audit(&tau, &mesh, &[("strip", &strip, Some(&depth))]);
        let (slope, r2) = audit[0].decay.unwrap();
        assert!(slope < 0.0 && r2 > 0.9, "{slope} {r2}");
        let tau = mesh_tension_norms(&u0, &mesh).unwrap();
        assert!(tau.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn overlapping_collars_are_reported() {
        let spec = GridSpec { x0: 0.0, x1: 1.0, y0: 1.0, y1: 2.0, nx: 4, ny: 4, periodic_x: None, periodic_y: None };
        let mesh = rect_grid(&spec, |_| 1.0).unwrap();
        let id = |z: C64| H3Point::new(z.re, 0.0, z.im);
        let piece = || EndPiece { weight: Box::new(|_z: C64| 0.6), map: Box::new(id) };
        let r = assemble_u0(&mesh, Box::new(id), vec![piece(), piece()]);
        assert!(matches!(r, Err(InitError::Overlap(..))));
    }
}

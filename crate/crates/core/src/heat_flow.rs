//! Equivariant harmonic map heat flow on a mesh: tension field, energy,
//! geodesic Euler steps, monitors.

use crate::hyperbolic::{dist_h3, exp_h3, log_h3, Geodesic, H3Point, Mobius, TangentVector};
use crate::mesh::{half_cot, EquivariantMesh};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("state corruption: x3 = {1} at vertex {0}")]
    NonPositiveHeight(usize, f64),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },
    #[error("state has {got} values, mesh has {want} vertices")]
    Size { got: usize, want: usize },
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    pub u: Vec<H3Point>,
    pub t: f64,
}

impl MapState {
    pub fn new(u: Vec<H3Point>) -> Self {
        MapState { u, t: 0.0 }
    }

    pub fn check(&self, mesh: &EquivariantMesh) -> Result<(), FlowError> {
        if self.u.len() != mesh.len() {
            return Err(FlowError::Size { got: self.u.len(), want: mesh.len() });
        }
        for (i, p) in self.u.iter().enumerate() {
            if !(p.x1.is_finite() && p.x2.is_finite() && p.x3.is_finite()) {
                return Err(FlowError::NonFinite(i));
            }
            if p.x3 <= 0.0 {
                return Err(FlowError::NonPositiveHeight(i, p.x3));
            }
        }
        Ok(())
    }
}

/// Discretization of the tension field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TensionScheme {
    /// Chart Laplacian of the coordinates plus Christoffel terms.
    Coordinate,
    /// Cotangent-weighted sum of `log_{u(v)} u(w)`: the gradient of
    /// `½ Σ w_e d²`, which keeps vertices off the ideal boundary when
    /// cells span large target distances.
    #[default]
    Geodesic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Explicit step; `None` picks `cfl · min λ²h²`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_max: f64,
    pub tol_tau: f64,
    /// Steps between diagnostic samples.
    pub cadence: usize,
    /// Keep the image in the plane `x2 = 0`.
    pub planar: bool,
    /// Evaluate the core energy after every step.
    pub energy_every_step: bool,
    pub scheme: TensionScheme,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { dt: None, cfl: 0.2, t_max: 200.0, tol_tau: 1e-5, cadence: 50, planar: false, energy_every_step: true, scheme: TensionScheme::Geodesic }
    }
}

impl FlowConfig {
    pub fn time_step(&self, mesh: &EquivariantMesh) -> Result<f64, FlowError> {
        let bound = self.cfl * mesh.cfl_scale();
        let dt = self.dt.unwrap_or(bound);
        if dt > bound * (1.0 + 1e-12) || dt <= 0.0 {
            return Err(FlowError::Cfl { dt, bound });
        }
        Ok(dt)
    }
}

fn fetch(u: &[H3Point], id: usize, m: &Option<Mobius>) -> [f64; 3] {
    match m {
        None => u[id].as_array(),
        Some(m) => m.apply_interior(u[id]).as_array(),
    }
}

/// Laplacian and averaged gradient tensor at one vertex.
fn local_terms(u: &[H3Point], mesh: &EquivariantMesh, v: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let u0 = u[v].as_array();
    let mut lap = [0.0; 3];
    let mut g = [[0.0; 3]; 3];
    let mut area = 0.0;
    for lt in &mesh.stencils[v] {
        let vals = [u0, fetch(u, lt.ids[1], &lt.maps[1]), fetch(u, lt.ids[2], &lt.maps[2])];
        let mut grads = [[0.0; 2]; 3];
        for a in 0..3 {
            lap[a] += lt.w[0] * (vals[1][a] - u0[a]) + lt.w[1] * (vals[2][a] - u0[a]);
            for (i, val) in vals.iter().enumerate() {
                grads[a][0] += val[a] * lt.grad[i][0];
                grads[a][1] += val[a] * lt.grad[i][1];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                g[a][b] += lt.area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            }
        }
        area += lt.area;
    }
    let da = mesh.dual_area[v];
    for l in lap.iter_mut() {
        *l /= da;
    }
    for row in g.iter_mut() {
        for x in row.iter_mut() {
            *x /= area;
        }
    }
    (lap, g)
}

/// `Γᵏ_ab Gᵃᵇ` for the upper half-space metric at height `w`.
pub fn christoffel_contraction(g: &[[f64; 3]; 3], w: f64) -> [f64; 3] {
    [-2.0 * g[0][2] / w, -2.0 * g[1][2] / w, (g[0][0] + g[1][1] - g[2][2]) / w]
}

/// Tension at every vertex (zero at Dirichlet vertices).
pub fn tension_field(state: &MapState, mesh: &EquivariantMesh) -> Result<Vec<TangentVector>, FlowError> {
    state.check(mesh)?;
    Ok((0..mesh.len())
        .map(|v| {
            if mesh.vertices[v].dirichlet {
                return TangentVector::zero(state.u[v]);
            }
            tension_at(state, mesh, v)
        })
        .collect())
}

pub fn tension_at(state: &MapState, mesh: &EquivariantMesh, v: usize) -> TangentVector {
    let (lap, g) = local_terms(&state.u, mesh, v);
    let w = state.u[v].x3;
    let ch = christoffel_contraction(&g, w);
    let l2 = mesh.vertices[v].lambda2;
    TangentVector::new(state.u[v], [(lap[0] + ch[0]) / l2, (lap[1] + ch[1]) / l2, (lap[2] + ch[2]) / l2])
}

/// Geodesic form: `λ⁻² A_v⁻¹ Σ w_e log_{u(v)} u(w)`.
pub fn tension_at_geodesic(state: &MapState, mesh: &EquivariantMesh, v: usize) -> TangentVector {
    let u0 = state.u[v];
    let mut acc = [0.0; 3];
    for lt in &mesh.stencils[v] {
        for k in 0..2 {
            let q = H3Point::from_array(fetch(&state.u, lt.ids[k + 1], &lt.maps[k + 1]));
            let l = log_h3(u0, q).v;
            for a in 0..3 {
                acc[a] += lt.w_geo[k] * l[a];
            }
        }
    }
    let s = 1.0 / (mesh.vertices[v].lambda2 * mesh.dual_area[v]);
    TangentVector::new(u0, acc.map(|x| x * s))
}

pub fn tension_field_with(scheme: TensionScheme, state: &MapState, mesh: &EquivariantMesh) -> Result<Vec<TangentVector>, FlowError> {
    state.check(mesh)?;
    Ok((0..mesh.len())
        .map(|v| {
            if mesh.vertices[v].dirichlet {
                TangentVector::zero(state.u[v])
            } else if scheme == TensionScheme::Geodesic {
                tension_at_geodesic(state, mesh, v)
            } else {
                tension_at(state, mesh, v)
            }
        })
        .collect())
}

/// `½ Σ_T Σ_e w_e d²(u_i, u_j)` over the selected triangles.
pub fn geodesic_energy(state: &MapState, mesh: &EquivariantMesh, core_only: bool) -> f64 {
    let mut e = 0.0;
    for t in mesh.triangles.iter().filter(|t| t.core || !core_only) {
        let vals = t.corners.map(|c| c.target.apply_interior(state.u[c.vertex]));
        for k in 0..3 {
            let (i, j, o) = (k, (k + 1) % 3, (k + 2) % 3);
            let w = half_cot(t.pos[o], t.pos[i], t.pos[j]);
            e += 0.5 * w * dist_h3(vals[i], vals[j]).powi(2);
        }
    }
    e
}

/// Core energy in the discretization matching the scheme.
pub fn scheme_energy(scheme: TensionScheme, state: &MapState, mesh: &EquivariantMesh) -> f64 {
    match scheme {
        TensionScheme::Coordinate => core_energy(state, mesh),
        TensionScheme::Geodesic => geodesic_energy(state, mesh, true),
    }
}

/// `e = λ⁻² Σ ⟨∂u, ∂u⟩` per vertex.
pub fn energy_density(state: &MapState, mesh: &EquivariantMesh) -> Vec<f64> {
    (0..mesh.len())
        .map(|v| {
            let (_, g) = local_terms(&state.u, mesh, v);
            let w = state.u[v].x3;
            (g[0][0] + g[1][1] + g[2][2]) / (w * w * mesh.vertices[v].lambda2)
        })
        .collect()
}

fn triangle_energy(u: &[H3Point], t: &crate::mesh::MeshTriangle) -> f64 {
    let vals = t.corners.map(|c| c.target.apply_interior(u[c.vertex]).as_array());
    let p = t.pos;
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let area2 = e1.re * e2.im - e1.im * e2.re;
    let mut sq = 0.0;
    for a in 0..3 {
        // gradient of the linear interpolant
        let d1 = vals[1][a] - vals[0][a];
        let d2 = vals[2][a] - vals[0][a];
        let gx = (d1 * e2.im - d2 * e1.im) / area2;
        let gy = (d2 * e1.re - d1 * e2.re) / area2;
        sq += gx * gx + gy * gy;
    }
    let w = (vals[0][2] + vals[1][2] + vals[2][2]) / 3.0;
    0.25 * area2 * sq / (w * w)
}

/// `½ ∫ |du|² dvol` over core triangles.
pub fn core_energy(state: &MapState, mesh: &EquivariantMesh) -> f64 {
    mesh.triangles.iter().filter(|t| t.core).map(|t| triangle_energy(&state.u, t)).sum()
}

/// Discrete energy over all triangles.
pub fn total_energy(state: &MapState, mesh: &EquivariantMesh) -> f64 {
    mesh.triangles.iter().map(|t| triangle_energy(&state.u, t)).sum()
}

/// One explicit geodesic Euler step; Dirichlet vertices stay put.
pub fn step(state: &MapState, mesh: &EquivariantMesh, dt: f64) -> Result<MapState, FlowError> {
    let bound = 0.5 * mesh.cfl_scale();
    if dt > bound {
        return Err(FlowError::Cfl { dt, bound });
    }
    let tau = tension_field(state, mesh)?;
    Ok(apply_step(state, mesh, &tau, dt, false))
}

fn apply_step(state: &MapState, mesh: &EquivariantMesh, tau: &[TangentVector], dt: f64, planar: bool) -> MapState {
    let u = state
        .u
        .iter()
        .zip(tau)
        .enumerate()
        .map(|(v, (p, t))| {
            if mesh.vertices[v].dirichlet {
                *p
            } else {
                let mut q = exp_h3(*p, &t.scale(dt));
                if planar {
                    q.x2 = 0.0;
                }
                q
            }
        })
        .collect();
    MapState { u, t: state.t + dt }
}

pub fn sup_tension(tau: &[TangentVector], mesh: &EquivariantMesh) -> f64 {
    mesh.interior().map(|v| tau[v].norm()).fold(0.0, f64::max)
}

/// Values at every non-canonical node pushed through the deck maps.
pub fn unfold(state: &MapState, mesh: &EquivariantMesh) -> Vec<H3Point> {
    mesh.idents.iter().map(|id| id.target.apply_interior(state.u[id.vertex])).collect()
}

/// Largest `d(copy, ρ(γ)·canonical)` over identified nodes.
pub fn equivariance_residual(state: &MapState, copies: &[H3Point], mesh: &EquivariantMesh) -> f64 {
    mesh.idents
        .iter()
        .zip(copies)
        .map(|(id, c)| dist_h3(*c, id.target.apply_interior(state.u[id.vertex])))
        .fold(0.0, f64::max)
}

/// Largest equivariance defect of a map given by an off-mesh formula.
pub fn equivariance_residual_fn(mesh: &EquivariantMesh, f: impl Fn(num_complex::Complex64) -> H3Point) -> f64 {
    mesh.idents
        .iter()
        .map(|id| dist_h3(f(id.node_pos), id.target.apply_interior(f(mesh.vertices[id.vertex].pos))))
        .fold(0.0, f64::max)
}

/// Base point and deck images followed by the monitors.
#[derive(Debug, Clone, Default)]
pub struct TraceSpec {
    pub p0: usize,
    pub words: Vec<Mobius>,
    pub axes: Vec<Geodesic>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub t: Vec<f64>,
    pub sup_tau: Vec<f64>,
    pub max_e: Vec<f64>,
    pub energy: Vec<f64>,
    pub sup_dist_u0: Vec<f64>,
    pub trace: Vec<H3Point>,
    pub axis_dist: Vec<Vec<f64>>,
    pub displacement: Vec<Vec<f64>>,
    pub equivariance: Vec<f64>,
    /// Largest relative energy increase over one step.
    pub max_energy_rise: f64,
    pub steps: usize,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: MapState,
    pub diag: Diagnostics,
    pub converged: bool,
}

fn sample(diag: &mut Diagnostics, state: &MapState, u0: &MapState, mesh: &EquivariantMesh, sup_tau: f64, energy: f64, trace: &TraceSpec) {
    diag.t.push(state.t);
    diag.sup_tau.push(sup_tau);
    diag.max_e.push(energy_density(state, mesh).into_iter().fold(0.0, f64::max));
    diag.energy.push(energy);
    diag.sup_dist_u0.push(state.u.iter().zip(&u0.u).map(|(a, b)| dist_h3(*a, *b)).fold(0.0, f64::max));
    let p = state.u[trace.p0.min(state.u.len() - 1)];
    diag.trace.push(p);
    diag.axis_dist.push(trace.axes.iter().map(|g| g.distance_to(p)).collect());
    diag.displacement.push(trace.words.iter().map(|m| dist_h3(m.apply_interior(p), p)).collect());
    let copies = unfold(state, mesh);
    diag.equivariance.push(equivariance_residual(state, &copies, mesh));
}

/// Iterates until `sup|τ| < tol_tau` or `t ≥ t_max`.
pub fn flow(state0: &MapState, mesh: &EquivariantMesh, cfg: &FlowConfig, trace: &TraceSpec) -> Result<FlowResult, FlowError> {
    flow_observed(state0, mesh, cfg, trace, &mut |_| {})
}

/// `flow` that also hands every sampled state to `observe`.
pub fn flow_observed(
    state0: &MapState,
    mesh: &EquivariantMesh,
    cfg: &FlowConfig,
    trace: &TraceSpec,
    observe: &mut dyn FnMut(&MapState),
) -> Result<FlowResult, FlowError> {
    state0.check(mesh)?;
    let dt = cfg.time_step(mesh)?;
    let mut diag = Diagnostics { dt, ..Default::default() };
    let mut state = state0.clone();
    let mut energy = scheme_energy(cfg.scheme, &state, mesh);
    let mut k = 0usize;
    let converged = loop {
        let tau = tension_field_with(cfg.scheme, &state, mesh)?;
        let sup = sup_tension(&tau, mesh);
        let done = sup < cfg.tol_tau;
        let out_of_time = state.t >= cfg.t_max - 1e-12;
        if k % cfg.cadence.max(1) == 0 || done || out_of_time {
            sample(&mut diag, &state, state0, mesh, sup, energy, trace);
            observe(&state);
        }
        if done || out_of_time {
            break done;
        }
        let next = apply_step(&state, mesh, &tau, dt.min(cfg.t_max - state.t).max(1e-300), cfg.planar);
        next.check(mesh)?;
        if cfg.energy_every_step || (k + 1) % cfg.cadence.max(1) == 0 {
            let e2 = scheme_energy(cfg.scheme, &next, mesh);
            if energy > 0.0 {
                diag.max_energy_rise = diag.max_energy_rise.max((e2 - energy) / energy);
            }
            energy = e2;
        }
        state = next;
        k += 1;
    };
    diag.steps = k;
    Ok(FlowResult { state, diag, converged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorLine {
    pub name: String,
    pub stable: bool,
    pub early_max: f64,
    pub late_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub lines: Vec<MonitorLine>,
    /// `max_t e(u_t) ≤ e · max e(u₀)`.
    pub energy_bound_ok: bool,
    pub equivariance_max: f64,
    pub all_stable: bool,
}

/// A series is stable when its last quarter sets no new maximum beyond the
/// first three quarters (relative slack `rtol`, absolute slack `atol`).
pub fn stable_series(xs: &[f64], rtol: f64, atol: f64) -> (bool, f64, f64) {
    if xs.len() < 4 {
        return (true, xs.iter().copied().fold(0.0, f64::max), 0.0);
    }
    let cut = xs.len() - xs.len() / 4;
    let early = xs[..cut].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let late = xs[cut..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (late <= early * (1.0 + rtol) + atol, early, late)
}

pub fn monitors(diag: &Diagnostics) -> MonitorReport {
    let mut lines = vec![];
    let mut push = |name: String, xs: Vec<f64>| {
        let (stable, early_max, late_max) = stable_series(&xs, 1e-3, 1e-9);
        lines.push(MonitorLine { name, stable, early_max, late_max });
    };
    push("sup_dist_u0".into(), diag.sup_dist_u0.clone());
    let na = diag.axis_dist.first().map_or(0, |v| v.len());
    for i in 0..na {
        push(format!("axis_dist_{i}"), diag.axis_dist.iter().map(|v| v[i]).collect());
    }
    let nw = diag.displacement.first().map_or(0, |v| v.len());
    for i in 0..nw {
        push(format!("displacement_{i}"), diag.displacement.iter().map(|v| v[i]).collect());
    }
    let e0 = diag.max_e.first().copied().unwrap_or(0.0);
    let emax = diag.max_e.iter().copied().fold(0.0, f64::max);
    let energy_bound_ok = emax <= std::f64::consts::E * e0 + 1e-12;
    let equivariance_max = diag.equivariance.iter().copied().fold(0.0, f64::max);
    let all_stable = lines.iter().all(|l| l.stable);
    MonitorReport { lines, energy_bound_ok, equivariance_max, all_stable }
}

/// Tension of a map given by a formula, by central differences of step `h`.
pub fn tension_fd(u: &dyn Fn(f64, f64) -> [f64; 3], lambda2: f64, x: f64, y: f64, h: f64) -> [f64; 3] {
    let c = u(x, y);
    let d = |p: [f64; 3], m: [f64; 3]| {
        let mut first = [0.0; 3];
        let mut second = [0.0; 3];
        for a in 0..3 {
            first[a] = (p[a] - m[a]) / (2.0 * h);
            second[a] = (p[a] - 2.0 * c[a] + m[a]) / (h * h);
        }
        (first, second)
    };
    let (ux, uxx) = d(u(x + h, y), u(x - h, y));
    let (uy, uyy) = d(u(x, y + h), u(x, y - h));
    let mut g = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            g[a][b] = ux[a] * ux[b] + uy[a] * uy[b];
        }
    }
    let ch = christoffel_contraction(&g, c[2]);
    [0, 1, 2].map(|a| (uxx[a] + uyy[a] + ch[a]) / lambda2)
}

/// Residual `|∂u/∂t − τ(u)|` of a closed-form family `u(x, y, t)` under the
/// conformal domain metric `λ²(x, y)`, by central differences of step `h`.
pub fn heat_residual(u: &dyn Fn(f64, f64, f64) -> [f64; 3], lambda2: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, t: f64, h: f64) -> f64 {
    let (p, m) = (u(x, y, t + h), u(x, y, t - h));
    let tau = tension_fd(&|a, b| u(a, b, t), lambda2(x, y), x, y, h);
    let w = u(x, y, t)[2];
    let r2: f64 = (0..3).map(|a| ((p[a] - m[a]) / (2.0 * h) - tau[a]).powi(2)).sum();
    r2.sqrt() / w
}

/// `τᵏ ≈ −x3² ∂E/∂uᵏ / (λ² A_v)`: central differences of the discrete
/// energy under single-vertex perturbations.
pub fn energy_gradient_tension(state: &MapState, mesh: &EquivariantMesh, v: usize, delta: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    let w = state.u[v].x3;
    for (k, o) in out.iter_mut().enumerate() {
        let mut plus = state.clone();
        let mut minus = state.clone();
        let mut a = plus.u[v].as_array();
        a[k] += delta;
        plus.u[v] = H3Point::from_array(a);
        let mut b = minus.u[v].as_array();
        b[k] -= delta;
        minus.u[v] = H3Point::from_array(b);
        let de = (local_energy(&plus, mesh, v) - local_energy(&minus, mesh, v)) / (2.0 * delta);
        *o = -w * w * de / (mesh.vertices[v].lambda2 * mesh.dual_area[v]);
    }
    out
}

/// Energy of the triangles touching a vertex (enough for its gradient).
fn local_energy(state: &MapState, mesh: &EquivariantMesh, v: usize) -> f64 {
    mesh.triangles
        .iter()
        .filter(|t| t.corners.iter().any(|c| c.vertex == v))
        .map(|t| triangle_energy(&state.u, t))
        .sum()
}

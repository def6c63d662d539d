//! Equivariant triangle meshes over chart domains: canonical vertices,
//! deck identifications and per-vertex local stencils.

use crate::hyperbolic::{BoundaryPoint, Mobius};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("inconsistent identification at node {0}: loop transform is not the identity")]
    Inconsistent(usize),
    #[error("triangle {0} is degenerate or negatively oriented")]
    BadTriangle(usize),
    #[error("conformal factor not positive at vertex {0}")]
    BadLambda(usize),
    #[error("vertex {0} has no incident triangle")]
    Isolated(usize),
    #[error("no kite vertex matches an arc image at {0}")]
    Unmatched(String),
}

fn is_identity(m: &Mobius) -> bool {
    m.dist_pm(&Mobius::identity()) < 1e-13
}

fn apply_pos(m: &Mobius, p: C64) -> C64 {
    m.apply(BoundaryPoint::Finite(p)).finite().expect("chart point maps to infinity")
}

/// Raw nodes with positions, to be merged into canonical vertices by
/// identifications `pos(a) = g(pos(b))`, `value(a) = r(value(b))`.
#[derive(Debug, Clone, Default)]
pub struct MeshBuilder {
    pub pos: Vec<C64>,
    pub dirichlet: Vec<bool>,
    pub triangles: Vec<[usize; 3]>,
    pub core: Vec<bool>,
    parent: Vec<usize>,
    dom: Vec<Mobius>,
    tgt: Vec<Mobius>,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, p: C64, dirichlet: bool) -> usize {
        let id = self.pos.len();
        self.pos.push(p);
        self.dirichlet.push(dirichlet);
        self.parent.push(id);
        self.dom.push(Mobius::identity());
        self.tgt.push(Mobius::identity());
        id
    }

    pub fn triangle(&mut self, t: [usize; 3], core: bool) {
        self.triangles.push(t);
        self.core.push(core);
    }

    /// `(root, g, r)` with `pos(x) = g(pos(root))`.
    fn find(&mut self, x: usize) -> (usize, Mobius, Mobius) {
        let p = self.parent[x];
        if p == x {
            return (x, Mobius::identity(), Mobius::identity());
        }
        let (r, g, t) = self.find(p);
        let g2 = self.dom[x] * g;
        let t2 = self.tgt[x] * t;
        self.parent[x] = r;
        self.dom[x] = g2;
        self.tgt[x] = t2;
        (r, g2, t2)
    }

    /// Records `pos(a) = g(pos(b))` and `value(a) = r(value(b))`.
    pub fn identify(&mut self, a: usize, b: usize, g: Mobius, r: Mobius) -> Result<(), MeshError> {
        let (ra, ga, ta) = self.find(a);
        let (rb, gb, tb) = self.find(b);
        let gl = ga.inverse() * g * gb;
        let tl = ta.inverse() * r * tb;
        if ra == rb {
            if !is_identity(&gl) || !is_identity(&tl) {
                return Err(MeshError::Inconsistent(a));
            }
            return Ok(());
        }
        // keep the smaller index as root
        if ra < rb {
            self.parent[rb] = ra;
            self.dom[rb] = gl.inverse();
            self.tgt[rb] = tl.inverse();
        } else {
            self.parent[ra] = rb;
            self.dom[ra] = gl;
            self.tgt[ra] = tl;
        }
        Ok(())
    }

    /// Merges nodes at identical positions with identity maps.
    pub fn merge_coincident(&mut self, tol: f64) -> Result<(), MeshError> {
        let n = self.pos.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| self.pos[*a].re.partial_cmp(&self.pos[*b].re).unwrap());
        for i in 0..n {
            let a = order[i];
            for &b in &order[i + 1..] {
                if self.pos[b].re - self.pos[a].re > tol {
                    break;
                }
                if (self.pos[a] - self.pos[b]).norm() < tol {
                    self.identify(a, b, Mobius::identity(), Mobius::identity())?;
                }
            }
        }
        Ok(())
    }

    /// Finalizes with a conformal factor given on canonical positions.
    pub fn build(mut self, lambda2: impl Fn(C64) -> f64) -> Result<EquivariantMesh, MeshError> {
        let n = self.pos.len();
        let mut roots = vec![];
        let mut canon = vec![usize::MAX; n];
        let mut node_info = Vec::with_capacity(n);
        for x in 0..n {
            let f = self.find(x);
            node_info.push(f);
        }
        for x in 0..n {
            if node_info[x].0 == x {
                canon[x] = roots.len();
                roots.push(x);
            }
        }
        let mut vertices: Vec<MeshVertex> = roots
            .iter()
            .map(|&r| MeshVertex { pos: self.pos[r], lambda2: lambda2(self.pos[r]), dirichlet: false })
            .collect();
        let mut idents = vec![];
        for x in 0..n {
            let (r, g, t) = &node_info[x];
            let v = canon[*r];
            if self.dirichlet[x] {
                vertices[v].dirichlet = true;
            }
            if x != *r {
                let expect = apply_pos(g, self.pos[*r]);
                if (expect - self.pos[x]).norm() > 1e-9 * (1.0 + self.pos[x].norm()) {
                    return Err(MeshError::Inconsistent(x));
                }
                idents.push(Identification { node_pos: self.pos[x], vertex: v, domain: *g, target: *t });
            }
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.lambda2 > 0.0) || !v.lambda2.is_finite() {
                return Err(MeshError::BadLambda(i));
            }
        }
        let triangles: Vec<MeshTriangle> = self
            .triangles
            .iter()
            .zip(&self.core)
            .map(|(t, core)| {
                let corners = t.map(|x| {
                    let (r, g, tg) = node_info[x];
                    Corner { vertex: canon[r], domain: g, target: tg }
                });
                MeshTriangle { corners, pos: t.map(|x| self.pos[x]), core: *core }
            })
            .collect();
        let nodes = node_info.iter().map(|(r, _, t)| (canon[*r], *t)).collect();
        let mut mesh = EquivariantMesh::assemble(vertices, triangles, idents)?;
        mesh.nodes = nodes;
        Ok(mesh)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshVertex {
    pub pos: C64,
    pub lambda2: f64,
    pub dirichlet: bool,
}

/// Triangle corner: the canonical vertex and the deck pair carrying it to
/// this corner's position and value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub vertex: usize,
    pub domain: Mobius,
    pub target: Mobius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshTriangle {
    pub corners: [Corner; 3],
    pub pos: [C64; 3],
    pub core: bool,
}

/// Non-canonical node: `pos = domain(pos(vertex))`, `value = target(value(vertex))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub node_pos: C64,
    pub vertex: usize,
    pub domain: Mobius,
    pub target: Mobius,
}

/// Triangle seen from one of its vertices, in that vertex's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTri {
    /// Canonical ids; entry 0 is the centre vertex.
    pub ids: [usize; 3],
    /// Target maps bringing canonical values into the centre's frame.
    pub maps: [Option<Mobius>; 3],
    pub area: f64,
    /// Gradients of the three barycentric hat functions.
    pub grad: [[f64; 2]; 3],
    /// Half-cotangent weights of edges (0,1) and (0,2).
    pub w: [f64; 2],
    /// The same weights from the triangle as placed in the mesh, shared by
    /// all three corners (used by the geodesic energy and its gradient).
    pub w_geo: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct EquivariantMesh {
    pub vertices: Vec<MeshVertex>,
    pub triangles: Vec<MeshTriangle>,
    pub idents: Vec<Identification>,
    pub stencils: Vec<Vec<LocalTri>>,
    /// Barycentric dual area in the chart.
    pub dual_area: Vec<f64>,
    /// Smallest incident chart edge per vertex.
    pub h_local: Vec<f64>,
    /// Largest edge length measured in the domain metric.
    pub h_mesh: f64,
    /// Builder nodes in insertion order: canonical vertex and target map.
    pub nodes: Vec<(usize, Mobius)>,
}

fn tri_geometry(p: [C64; 3]) -> (f64, [[f64; 2]; 3]) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let area2 = e1.re * e2.im - e1.im * e2.re;
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        // gradient of hat i: rotate the opposite edge by -90 degrees
        let e = p[(i + 2) % 3] - p[(i + 1) % 3];
        grad[i] = [-e.im / area2, e.re / area2];
    }
    (0.5 * area2, grad)
}

pub fn half_cot(p: C64, a: C64, b: C64) -> f64 {
    // half cotangent of the angle at p
    let u = a - p;
    let v = b - p;
    let dot = u.re * v.re + u.im * v.im;
    let cross = u.re * v.im - u.im * v.re;
    0.5 * dot / cross.abs()
}

impl EquivariantMesh {
    fn assemble(vertices: Vec<MeshVertex>, triangles: Vec<MeshTriangle>, idents: Vec<Identification>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut stencils: Vec<Vec<LocalTri>> = vec![vec![]; nv];
        let mut dual_area = vec![0.0; nv];
        let mut h_local = vec![f64::INFINITY; nv];
        let mut h_mesh: f64 = 0.0;
        for (ti, t) in triangles.iter().enumerate() {
            let (area, _) = tri_geometry(t.pos);
            if !(area > 0.0) {
                return Err(MeshError::BadTriangle(ti));
            }
            for c in 0..3 {
                let corner = t.corners[c];
                let v = corner.vertex;
                let to_frame_dom = corner.domain.inverse();
                let to_frame_tgt = corner.target.inverse();
                let idx = [c, (c + 1) % 3, (c + 2) % 3];
                let p = idx.map(|k| if is_identity(&to_frame_dom) { t.pos[k] } else { apply_pos(&to_frame_dom, t.pos[k]) });
                let (a, grad) = tri_geometry(p);
                if !(a > 0.0) {
                    return Err(MeshError::BadTriangle(ti));
                }
                let maps = idx.map(|k| {
                    let m = to_frame_tgt * t.corners[k].target;
                    if is_identity(&m) { None } else { Some(m) }
                });
                let w = [half_cot(p[2], p[0], p[1]), half_cot(p[1], p[0], p[2])];
                let q = idx.map(|k| t.pos[k]);
                let w_geo = [half_cot(q[2], q[0], q[1]), half_cot(q[1], q[0], q[2])];
                stencils[v].push(LocalTri { ids: idx.map(|k| t.corners[k].vertex), maps, area: a, grad, w, w_geo });
                dual_area[v] += a / 3.0;
                let l = (p[1] - p[0]).norm().min((p[2] - p[0]).norm());
                h_local[v] = h_local[v].min(l);
            }
            for k in 0..3 {
                let a = t.pos[k];
                let b = t.pos[(k + 1) % 3];
                let la = vertices[t.corners[k].vertex].lambda2;
                let lb = vertices[t.corners[(k + 1) % 3].vertex].lambda2;
                // conformal factors are stored at canonical positions; scale
                // by the deck derivative to get the factor at the corner
                let fa = la / deriv_sq(&t.corners[k].domain, vertices[t.corners[k].vertex].pos);
                let fb = lb / deriv_sq(&t.corners[(k + 1) % 3].domain, vertices[t.corners[(k + 1) % 3].vertex].pos);
                h_mesh = h_mesh.max((a - b).norm() * (0.5 * (fa + fb)).sqrt());
            }
        }
        for (i, a) in dual_area.iter().enumerate() {
            if *a <= 0.0 {
                return Err(MeshError::Isolated(i));
            }
        }
        Ok(EquivariantMesh { vertices, triangles, idents, stencils, dual_area, h_local, h_mesh, nodes: vec![] })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `min λ² h²` over vertices; the explicit step needs `dt ≤ cfl · this`.
    pub fn cfl_scale(&self) -> f64 {
        self.vertices
            .iter()
            .zip(&self.h_local)
            .map(|(v, h)| v.lambda2 * h * h)
            .fold(f64::INFINITY, f64::min)
    }

    /// Values at every builder node, pushed through the node's target map.
    pub fn node_values(&self, u: &[crate::hyperbolic::H3Point]) -> Vec<crate::hyperbolic::H3Point> {
        self.nodes.iter().map(|(v, t)| t.apply_interior(u[*v])).collect()
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|i| !self.vertices[*i].dirichlet)
    }
}

/// `|g′(z)|²` for a Möbius map.
pub fn deriv_sq(g: &Mobius, z: C64) -> f64 {
    let [_, _, c, d] = g.entries();
    let det = g.det();
    (det / ((c * z + d) * (c * z + d))).norm_sqr()
}

/// Rectangular chart grid `[x0, x1] × [y0, y1]` with optional periodic
/// identifications (domain translation, target deck map) in x and y.
/// Non-periodic sides are Dirichlet.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub periodic_x: Option<Mobius>,
    pub periodic_y: Option<Mobius>,
}

pub fn rect_grid(spec: &GridSpec, lambda2: impl Fn(C64) -> f64) -> Result<EquivariantMesh, MeshError> {
    let mut b = MeshBuilder::new();
    let (nx, ny) = (spec.nx, spec.ny);
    let hx = (spec.x1 - spec.x0) / nx as f64;
    let hy = (spec.y1 - spec.y0) / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    for j in 0..=ny {
        for i in 0..=nx {
            let bx = spec.periodic_x.is_none() && (i == 0 || i == nx);
            let by = spec.periodic_y.is_none() && (j == 0 || j == ny);
            b.node(C64::new(spec.x0 + i as f64 * hx, spec.y0 + j as f64 * hy), bx || by);
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            b.triangle([id(i, j), id(i + 1, j), id(i + 1, j + 1)], true);
            b.triangle([id(i, j), id(i + 1, j + 1), id(i, j + 1)], true);
        }
    }
    if let Some(r) = spec.periodic_x {
        let g = Mobius::translation(C64::new(spec.x1 - spec.x0, 0.0));
        for j in 0..=ny {
            b.identify(id(nx, j), id(0, j), g, r)?;
        }
    }
    if let Some(r) = spec.periodic_y {
        let g = Mobius::translation(C64::new(0.0, spec.y1 - spec.y0));
        for i in 0..=nx {
            b.identify(id(i, ny), id(i, 0), g, r)?;
        }
    }
    b.build(lambda2)
}

/// Commutator subgroup of the modular group: free on these two.
pub fn modular_torus_generators() -> [Mobius; 2] {
    [Mobius::real(1.0, 1.0, 1.0, 2.0), Mobius::real(1.0, -1.0, -1.0, 2.0)]
}

/// Image of `g ∈ PSL₂(ℤ)` in the abelianization `ℤ/6`, normalized by
/// `T ↦ 1`, `S ↦ 3`. Kernel: the commutator subgroup.
pub fn modular_character(m: [[i64; 2]; 2]) -> i64 {
    let [[mut a, mut b], [mut c, mut d]] = m;
    let mut acc = 0i64;
    // reduce to ±T^k by g ← T^{-k} g and g ← S^{-1} g, counting exponents
    while c != 0 {
        let k = if a.abs() >= c.abs() { a.div_euclid(c) } else { 0 };
        if k != 0 {
            // T^{-k} g
            a -= k * c;
            b -= k * d;
            acc += k;
            continue;
        }
        // S^{-1} g with S = [[0,-1],[1,0]]: S^{-1} = [[0,1],[-1,0]]
        let (na, nb, nc, nd) = (c, d, -a, -b);
        a = na;
        b = nb;
        c = nc;
        d = nd;
        acc += 3;
    }
    // now ±[[1, b'],[0, 1]] with a = d = ±1
    let k = b * a;
    (acc + k).rem_euclid(6)
}

fn int_matrix(m: &Mobius) -> [[i64; 2]; 2] {
    let e = m.entries();
    // PSL representative normalized to det 1 has entries ±integer
    let r = |z: C64| z.re.round() as i64;
    [[r(e[0]), r(e[1])], [r(e[2]), r(e[3])]]
}

/// Parameters of the modular torus mesh.
#[derive(Debug, Clone, Copy)]
pub struct ModularTorusSpec {
    /// Columns per kite (even).
    pub nx: usize,
    /// Rows per kite.
    pub ny: usize,
    /// Horocycle height of the cusp truncation.
    pub y_trunc: f64,
}

impl ModularTorusSpec {
    pub fn level(level: u32, y_trunc: f64) -> Self {
        let s = 1usize << level;
        ModularTorusSpec { nx: 2 * s, ny: 3 * s, y_trunc }
    }
}

/// Lower boundary height of the unit kite `{0 ≤ x ≤ 1, |z| ≥ 1, |z − 1| ≥ 1}`.
pub fn kite_bottom(x: f64) -> f64 {
    // max of the two unit circles centred at 0 and 1
    (1.0 - x * x).max(0.0).sqrt().max((1.0 - (1.0 - x) * (1.0 - x)).max(0.0).sqrt())
}

/// Fundamental domain `{0 ≤ x ≤ 6, |z − n| ≥ 1, y ≤ y_trunc}` of the
/// commutator subgroup, six kites, with deck identifications; the cusp
/// truncation row is Dirichlet. Deck target maps equal the domain maps.
pub fn modular_torus_mesh(spec: ModularTorusSpec, lambda2: impl Fn(C64) -> f64) -> Result<EquivariantMesh, MeshError> {
    let (nx, ny) = (spec.nx, spec.ny);
    assert!(nx % 2 == 0 && nx >= 2 && ny >= 2);
    let mut b = MeshBuilder::new();
    // kite template: column x_i, rows geometric in y from the arcs to y_trunc
    let mut template = vec![];
    for j in 0..=ny {
        for i in 0..=nx {
            let x = i as f64 / nx as f64;
            let yb = kite_bottom(x);
            let s = (yb.ln() + (spec.y_trunc.ln() - yb.ln()) * j as f64 / ny as f64).exp();
            template.push(C64::new(x, s));
        }
    }
    let tid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut kite_nodes = vec![];
    for n in 0..6 {
        let base = b.pos.len();
        for (k, p) in template.iter().enumerate() {
            let j = k / (nx + 1);
            b.node(p + C64::new(n as f64, 0.0), j == ny);
        }
        for j in 0..ny {
            for i in 0..nx {
                let (a, bb, c, d) = (base + tid(i, j), base + tid(i + 1, j), base + tid(i + 1, j + 1), base + tid(i, j + 1));
                // diagonals mirror across the kite's centre line
                if i < nx / 2 {
                    b.triangle([a, bb, d], true);
                    b.triangle([bb, c, d], true);
                } else {
                    b.triangle([a, bb, c], true);
                    b.triangle([a, c, d], true);
                }
            }
        }
        kite_nodes.push(base);
    }
    b.merge_coincident(1e-12)?;
    // x = 0 and x = 6 sides: peripheral translation by 6
    let p6 = Mobius::translation(C64::new(6.0, 0.0));
    for j in 0..=ny {
        let right = kite_nodes[5] + tid(nx, j);
        let left = kite_nodes[0] + tid(0, j);
        b.identify(right, left, p6, p6)?;
    }
    // arcs: bottom vertex p of kite n equals T^n R^k (p') for a template
    // bottom vertex p' on the other arc, and T^n R^k = γ T^m with γ in the
    // commutator subgroup, m the character of T^n R^k
    let t = |n: i64| Mobius::real(1.0, n as f64, 0.0, 1.0);
    let r = Mobius::real(0.0, 1.0, -1.0, 1.0);
    for n in 0..6i64 {
        for i in 0..=nx {
            let p = b.pos[kite_nodes[n as usize] + tid(i, 0)];
            let rk = if i <= nx / 2 { r } else { r * r };
            let g = t(n) * rk;
            let pp = apply_pos(&g.inverse(), p);
            // find template bottom vertex at pp
            let found = (0..=nx).find(|ii| (template[tid(*ii, 0)] - pp).norm() < 1e-9);
            let Some(ii) = found else { return Err(MeshError::Unmatched(format!("{pp}"))) };
            let m = modular_character(int_matrix(&g));
            let gamma = g * t(-m);
            debug_assert_eq!(modular_character(int_matrix(&gamma)), 0);
            let target = kite_nodes[m as usize] + tid(ii, 0);
            b.identify(kite_nodes[n as usize] + tid(i, 0), target, gamma, gamma)?;
        }
    }
    b.build(lambda2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn character_of_generators() {
        assert_eq!(modular_character([[1, 1], [0, 1]]), 1);
        assert_eq!(modular_character([[0, -1], [1, 0]]), 3);
        assert_eq!(modular_character([[1, 1], [1, 2]]), 0);
        assert_eq!(modular_character([[1, -1], [-1, 2]]), 0);
        // R = S T^{-1}
        assert_eq!(modular_character([[0, 1], [-1, 1]]), 2);
        let [a, b] = modular_torus_generators();
        let comm = a * b * a.inverse() * b.inverse();
        assert_eq!(modular_character(int_matrix(&comm)), 0);
    }

    #[test]
    fn flat_grid_is_five_point() {
        let spec = GridSpec { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0, nx: 4, ny: 4, periodic_x: None, periodic_y: None };
        let m = rect_grid(&spec, |_| 1.0).unwrap();
        // interior vertex (2,2)
        let v = 2 * 5 + 2;
        let mut weights = std::collections::BTreeMap::new();
        for lt in &m.stencils[v] {
            *weights.entry(lt.ids[1]).or_insert(0.0) += lt.w[0];
            *weights.entry(lt.ids[2]).or_insert(0.0) += lt.w[1];
        }
        for (k, w) in weights {
            let expect = if [v - 1, v + 1, v - 5, v + 5].contains(&k) { 1.0 } else { 0.0 };
            assert!((w - expect).abs() < 1e-12, "{k}: {w}");
        }
        assert!((m.dual_area[v] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_grid_counts() {
        let tr = Mobius::translation(C64::new(1.0, 0.0));
        let spec = GridSpec { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0, nx: 5, ny: 4, periodic_x: Some(tr), periodic_y: Some(Mobius::identity()) };
        let m = rect_grid(&spec, |_| 1.0).unwrap();
        assert_eq!(m.len(), 20);
        assert!(m.vertices.iter().all(|v| !v.dirichlet));
        let total: f64 = m.dual_area.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modular_torus_area_and_euler() {
        let spec = ModularTorusSpec::level(1, 3.0);
        let m = modular_torus_mesh(spec, |z| 1.0 / (z.im * z.im)).unwrap();
        // hyperbolic area of the truncated surface: 2π − 6/y_trunc
        let area: f64 = m
            .triangles
            .iter()
            .map(|t| {
                let (a, _) = tri_geometry(t.pos);
                let y = (t.pos[0].im + t.pos[1].im + t.pos[2].im) / 3.0;
                a / (y * y)
            })
            .sum();
        let expect = 2.0 * std::f64::consts::PI - 6.0 / 3.0;
        assert!((area - expect).abs() / expect < 0.02, "{area} vs {expect}");
        // Euler characteristic of the truncated torus (one boundary circle) is -1
        let v = m.len() as i64;
        let f = m.triangles.len() as i64;
        let mut edges = std::collections::HashSet::new();
        for t in &m.triangles {
            for k in 0..3 {
                let a = t.corners[k].vertex;
                let b = t.corners[(k + 1) % 3].vertex;
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let e = edges.len() as i64;
        assert_eq!(v - e + f, -1, "V={v} E={e} F={f}");
    }
}

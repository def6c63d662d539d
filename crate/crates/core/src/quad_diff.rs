//! Principal parts, residues, chains of geodesics, metric residues and Hopf
//! differential extraction.

use crate::hyperbolic::{
    classify, cross_ratio, translation_length, BoundaryPoint, GeomError, H3Point, MapClass, Mobius,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Relative tolerance for compatibility comparisons.
pub const TOL_COMPAT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("residue undefined for pole order {0}")]
    NoResidue(u32),
    #[error("metric residue needs an even chain, got m = {0}")]
    OddChain(usize),
    #[error("chain deck transformation is {0:?}, not loxodromic")]
    DeckNotLoxodromic(MapClass),
    #[error("chain has no base points")]
    EmptyChain,
    #[error("chain points collide")]
    Collision,
    #[error("straightening planes are parallel at cusp {0}")]
    ParallelPlanes(usize),
    #[error("bad principal part: {0}")]
    BadPrincipalPart(String),
    #[error("fit is ill-conditioned: singular value ratio {0:e}")]
    IllConditioned(f64),
    #[error("not enough samples for fit: {have} < {need}")]
    TooFewSamples { have: usize, need: usize },
    #[error("degree relation fails: zeros {zeros} != 4g-4+poles {rhs}")]
    Degree { zeros: i64, rhs: i64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Laurent data of `√q` at a pole of order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPart {
    pub order: u32,
    /// `α_r, …, α_1` for `n ≥ 3`.
    pub coeffs: Vec<C64>,
    /// `a e^{iθ}` for `n ≤ 2`.
    pub leading: C64,
}

impl PrincipalPart {
    pub fn new(order: u32, coeffs: Vec<C64>, leading: C64) -> Result<Self, QuadError> {
        if order == 0 {
            return Err(QuadError::BadPrincipalPart("order must be >= 1".into()));
        }
        if order >= 3 {
            let r = (order / 2) as usize;
            if coeffs.len() != r {
                return Err(QuadError::BadPrincipalPart(format!("order {order} needs {r} coefficients, got {}", coeffs.len())));
            }
            if coeffs[0] == C64::new(0.0, 0.0) {
                return Err(QuadError::BadPrincipalPart("leading coefficient vanishes".into()));
            }
        }
        Ok(PrincipalPart { order, coeffs, leading })
    }

    pub fn higher(order: u32, coeffs: Vec<C64>) -> Result<Self, QuadError> {
        PrincipalPart::new(order, coeffs, C64::new(0.0, 0.0))
    }

    pub fn low(order: u32, leading: C64) -> Result<Self, QuadError> {
        if order > 2 {
            return Err(QuadError::BadPrincipalPart("low-order constructor needs n <= 2".into()));
        }
        PrincipalPart::new(order, vec![], leading)
    }

    /// `1/2` for odd `n ≥ 3`, else `0`.
    pub fn epsilon(&self) -> f64 {
        if self.order >= 3 && self.order % 2 == 1 { 0.5 } else { 0.0 }
    }

    /// Leading coefficient of `√q`: `α_r` for `n ≥ 3`.
    pub fn leading_sqrt(&self) -> C64 {
        if self.order >= 3 { self.coeffs[0] } else { self.leading.sqrt() }
    }
}

/// Residue up to sign.
pub fn residue(pp: &PrincipalPart) -> Result<C64, QuadError> {
    match pp.order {
        2 => Ok(C64::new(0.0, 4.0 * PI) * pp.leading.sqrt()),
        n if n >= 4 && n % 2 == 0 => Ok(*pp.coeffs.last().unwrap()),
        n => Err(QuadError::NoResidue(n)),
    }
}

/// `L² = 16π² a sin²(θ/2)` with `leading = a e^{iθ}`.
pub fn compatible_with_boundary(pp: &PrincipalPart, l: f64) -> bool {
    let a = pp.leading.norm();
    let theta = pp.leading.arg();
    let rhs = 16.0 * PI * PI * a * (theta / 2.0).sin().powi(2);
    (l * l - rhs).abs() < TOL_COMPAT * (l * l).max(1.0)
}

/// Ideal points `p_1..p_m` and the deck map generating their orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub deck: Mobius,
    pub base_points: Vec<BoundaryPoint>,
}

impl ChainSpec {
    pub fn new(deck: Mobius, base_points: Vec<BoundaryPoint>) -> Result<Self, QuadError> {
        let cls = classify(&deck);
        if cls != MapClass::Loxodromic {
            return Err(QuadError::DeckNotLoxodromic(cls));
        }
        if base_points.is_empty() {
            return Err(QuadError::EmptyChain);
        }
        let c = ChainSpec { deck, base_points };
        let pts = c.points(0, c.m() + 3);
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if pts[i].chordal(pts[j]) < 1e-12 {
                    return Err(QuadError::Collision);
                }
            }
        }
        Ok(c)
    }

    pub fn m(&self) -> usize {
        self.base_points.len()
    }

    /// `q_k` with `q_{i + m j} = A^j p_{i+1}`.
    pub fn point(&self, k: i64) -> BoundaryPoint {
        let m = self.m() as i64;
        let (j, i) = (k.div_euclid(m), k.rem_euclid(m));
        self.deck.pow(j).apply(self.base_points[i as usize])
    }

    pub fn points(&self, from: i64, count: usize) -> Vec<BoundaryPoint> {
        (0..count as i64).map(|k| self.point(from + k)).collect()
    }

    /// Consecutive cross-ratios `w_k = cr(q_{k−1}, q_k, q_{k+1}, q_{k+2})`, `k = 0..m`.
    pub fn shape(&self) -> Result<Vec<C64>, QuadError> {
        (0..self.m() as i64)
            .map(|k| Ok(cross_ratio(self.point(k - 1), self.point(k), self.point(k + 1), self.point(k + 2))?))
            .collect()
    }

    pub fn conjugate(&self, g: &Mobius) -> ChainSpec {
        ChainSpec { deck: self.deck.conj_by(g), base_points: self.base_points.iter().map(|p| g.apply(*p)).collect() }
    }

    /// Largest distance of chain points and deck fixed points from the circle
    /// through `q_0, q_1, q_2`, measured by imaginary parts of cross-ratios.
    pub fn planarity_defect(&self) -> Result<f64, QuadError> {
        let (a, b, c) = (self.point(0), self.point(1), self.point(2));
        let ax = crate::hyperbolic::axis(&self.deck)?;
        let mut worst: f64 = 0.0;
        let m = self.m() as i64;
        let mut others: Vec<BoundaryPoint> = (3..(m + 3)).map(|k| self.point(k)).collect();
        others.push(ax.start);
        others.push(ax.end);
        for p in others {
            let w = cross_ratio(a, b, c, p)?;
            worst = worst.max(w.im.abs() / w.norm().max(1.0));
        }
        Ok(worst)
    }
}

/// Spinor `v` with `[v] = p`; the horoball at `p` has Euclidean diameter
/// `1/|v_1|²` (height `|v_0|²` at infinity).
pub fn horoball_spinor(p: BoundaryPoint, scale: f64) -> [C64; 2] {
    let h = p.homogeneous();
    let n = (h[0].norm_sqr() + h[1].norm_sqr()).sqrt();
    [h[0] * (scale / n), h[1] * (scale / n)]
}

/// Signed length `2 ln |det(v, w)|` of the geodesic between two horoballs.
pub fn truncated_length(v: [C64; 2], w: [C64; 2]) -> f64 {
    2.0 * (v[0] * w[1] - v[1] * w[0]).norm().ln()
}

/// Truncated lengths `l_1..l_m` for horoball scales `s_i` at `p_i`.
pub fn chain_lengths(c: &ChainSpec, scales: &[f64]) -> Vec<f64> {
    let m = c.m();
    let v: Vec<[C64; 2]> = (0..m).map(|i| horoball_spinor(c.base_points[i], scales.get(i).copied().unwrap_or(1.0))).collect();
    let next = c.deck.apply_h(v[0]);
    (0..m).map(|i| truncated_length(v[i], if i + 1 < m { v[i + 1] } else { next })).collect()
}

/// `Σ (−1)^i l_i` over one period, up to sign.
pub fn metric_residue_chain(c: &ChainSpec, scales: &[f64]) -> Result<f64, QuadError> {
    let m = c.m();
    if m % 2 == 1 {
        return Err(QuadError::OddChain(m));
    }
    let l = chain_lengths(c, scales);
    Ok(l.iter().enumerate().map(|(i, li)| if (i + 1) % 2 == 0 { *li } else { -*li }).sum())
}

/// The point `p1` with `cr(p1, p2, p3, p4) = w`.
pub fn solve_first(p2: BoundaryPoint, p3: BoundaryPoint, p4: BoundaryPoint, w: C64) -> BoundaryPoint {
    let (v2, v3, v4) = (p2.homogeneous(), p3.homogeneous(), p4.homogeneous());
    let d = |a: [C64; 2], b: [C64; 2]| a[0] * b[1] - a[1] * b[0];
    let (d34, d23) = (d(v3, v4), d(v2, v3));
    BoundaryPoint::from_homogeneous([v2[0] * d34 - w * v4[0] * d23, v2[1] * d34 - w * v4[1] * d23])
}

/// The point `p4` with `cr(p1, p2, p3, p4) = w`.
pub fn solve_fourth(p1: BoundaryPoint, p2: BoundaryPoint, p3: BoundaryPoint, w: C64) -> BoundaryPoint {
    let (v1, v2, v3) = (p1.homogeneous(), p2.homogeneous(), p3.homogeneous());
    let d = |a: [C64; 2], b: [C64; 2]| a[0] * b[1] - a[1] * b[0];
    let (d12, d23) = (d(v1, v2), d(v2, v3));
    BoundaryPoint::from_homogeneous([w * d23 * v1[0] - d12 * v3[0], w * d23 * v1[1] - d12 * v3[1]])
}

/// Rebuilds a chain from its periodic shape, starting at `(∞, −1, 0)`.
pub fn chain_from_shape(w: &[C64]) -> Result<ChainSpec, QuadError> {
    let m = w.len();
    let mut q = vec![BoundaryPoint::Infinity, BoundaryPoint::real(-1.0), BoundaryPoint::real(0.0)];
    // q[k] here is q_{k-1}
    for k in 0..=m {
        let next = solve_fourth(q[k], q[k + 1], q[k + 2], w[k % m]);
        q.push(next);
    }
    let deck = Mobius::from_triples([q[0], q[1], q[2]], [q[m], q[m + 1], q[m + 2]])?;
    ChainSpec::new(deck, q[1..=m].to_vec())
}

/// Straightens a chain onto a totally geodesic plane by elliptic rotations at
/// each cusp of one period, keeping truncated lengths.
///
/// Strongly bent chains can straighten to a planar configuration whose deck
/// map is elliptic; no crown lifts it and `DeckNotLoxodromic` is returned.
pub fn straighten_chain(c: &ChainSpec) -> Result<ChainSpec, QuadError> {
    let m = c.m();
    if m == 1 {
        let l = translation_length(&c.deck)?;
        let deck = Mobius::diag(C64::new((l / 2.0).exp(), 0.0));
        return ChainSpec::new(deck, vec![BoundaryPoint::real(1.0)]);
    }
    let mut w = c.shape()?;
    for j in 0..m {
        let wm = w[(j + m - 1) % m];
        let wj = w[j];
        // frame with q_{j−1} = 0, q_j = ∞, q_{j+1} = 1
        let (b, inf, c1) = (BoundaryPoint::real(0.0), BoundaryPoint::Infinity, BoundaryPoint::real(1.0));
        let d = solve_fourth(b, inf, c1, wj);
        let a = solve_first(b, inf, c1, wm);
        let (Some(a), Some(d)) = (a.finite(), d.finite()) else { return Err(QuadError::Collision) };
        let (b, c1) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        let u1 = b - a;
        let u2 = d - c1;
        let cross = |x: C64, y: C64| x.re * y.im - x.im * y.re;
        let denom = cross(u1, u2);
        let scale = u1.norm() * u2.norm();
        if denom.abs() <= 1e-12 * scale {
            if cross(c1 - a, u1).abs() <= 1e-12 * u1.norm() * (c1 - a).norm().max(1.0) {
                continue;
            }
            return Err(QuadError::ParallelPlanes(j));
        }
        // centre on line(a, b) ∩ line(c1, d)
        let t = cross(c1 - a, u2) / denom;
        let ctr = a + u1 * t;
        let tol = 1e-12 * (1.0 + ctr.norm());
        let (refp, dir) = if (b - ctr).norm() > tol { (b, -(c1 - ctr)) } else { (a, -(c1 - ctr)) };
        let dir = if dir.norm() > tol { dir } else { u2 };
        let rot = (dir / dir.norm()) / ((refp - ctr) / (refp - ctr).norm());
        let a2 = ctr + rot * (a - ctr);
        let b2 = ctr + rot * (b - ctr);
        let (pa, pb) = (BoundaryPoint::Finite(a2), BoundaryPoint::Finite(b2));
        let (pc, pd) = (BoundaryPoint::Finite(c1), BoundaryPoint::Finite(d));
        w[(j + m - 1) % m] = cross_ratio(pa, pb, inf, pc)?;
        w[j] = cross_ratio(pb, inf, pc, pd)?;
    }
    chain_from_shape(&w)
}

/// Order and residue test of a principal part against a chain.
pub fn compatible_with_chain(pp: &PrincipalPart, c: &ChainSpec) -> Result<bool, QuadError> {
    if pp.order < 3 {
        return Err(QuadError::BadPrincipalPart("chain compatibility needs n >= 3".into()));
    }
    if c.m() as u32 + 2 != pp.order {
        return Ok(false);
    }
    if pp.order % 2 == 1 {
        return Ok(true);
    }
    let re = residue(pp)?.re;
    let mr = metric_residue_chain(c, &vec![1.0; c.m()])?;
    let tol = TOL_COMPAT * re.abs().max(mr.abs()).max(1.0);
    Ok((re - mr).abs() < tol || (re + mr).abs() < tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorKind {
    Horizontal,
    Vertical,
}

/// Angular sector `(start, end)` in the chart angle, in increasing order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub kind: SectorKind,
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfplanePartition {
    pub horizontal: usize,
    pub vertical: usize,
    pub sectors: Vec<Sector>,
}

/// Argument of the natural coordinate `∫√q` along the ray at angle `phi`.
pub fn natural_arg(n: u32, leading: C64, phi: f64) -> f64 {
    leading.arg() + PI - (n as f64 - 2.0) * phi / 2.0
}

/// Horizontal and vertical half-planes around a pole of order `n ≥ 3`.
pub fn halfplane_decomposition(n: u32) -> Result<(usize, usize), QuadError> {
    halfplane_partition(n, C64::new(1.0, 0.0)).map(|p| (p.horizontal, p.vertical))
}

/// Sectors in the chart angle `φ ∈ [0, 2π)`. Horizontal sectors are where
/// the natural coordinate lies in an upper or lower half-plane, vertical ones
/// where it lies in a left or right half-plane.
pub fn halfplane_partition(n: u32, leading: C64) -> Result<HalfplanePartition, QuadError> {
    if n < 3 {
        return Err(QuadError::BadPrincipalPart("half-plane decomposition needs n >= 3".into()));
    }
    let k = (n - 2) as usize;
    let step = 2.0 * PI / k as f64;
    let mut sectors = Vec::with_capacity(2 * k);
    // ψ(φ) = kπ at φ = 2(arg + π − kπ)/(n − 2); ψ decreases in φ
    let base = (2.0 * (leading.arg() + PI) / (n as f64 - 2.0)).rem_euclid(step);
    for i in 0..k {
        let s = base + i as f64 * step;
        sectors.push(Sector { kind: SectorKind::Horizontal, index: i, start: s, end: s + step });
        let sv = s + step / 2.0;
        sectors.push(Sector { kind: SectorKind::Vertical, index: i, start: sv, end: sv + step });
    }
    let h = sectors.iter().filter(|s| s.kind == SectorKind::Horizontal).count();
    Ok(HalfplanePartition { horizontal: h, vertical: sectors.len() - h, sectors })
}

/// Zero of a model differential.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSpec {
    pub position: C64,
    pub order: u32,
}

/// Pole of a model differential with its principal part.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSpec {
    pub position: C64,
    pub order: u32,
}

/// `q = κ Π (z − z_k)^{n_k} / Π (z − p_j)^{m_j} dz²` on the core chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDifferential {
    pub genus: u32,
    pub kappa: C64,
    pub zeros: Vec<ZeroSpec>,
    pub poles: Vec<PoleSpec>,
}

impl ModelDifferential {
    /// Checks `Σ zero orders = 4g − 4 + Σ pole orders`.
    pub fn new(genus: u32, kappa: C64, zeros: Vec<ZeroSpec>, poles: Vec<PoleSpec>) -> Result<Self, QuadError> {
        let z: i64 = zeros.iter().map(|z| z.order as i64).sum();
        let rhs = 4 * genus as i64 - 4 + poles.iter().map(|p| p.order as i64).sum::<i64>();
        if z != rhs {
            return Err(QuadError::Degree { zeros: z, rhs });
        }
        Ok(ModelDifferential { genus, kappa, zeros, poles })
    }

    pub fn q(&self, z: C64) -> C64 {
        let mut v = self.kappa;
        for zz in &self.zeros {
            v *= (z - zz.position).powi(zz.order as i32);
        }
        for p in &self.poles {
            v /= (z - p.position).powi(p.order as i32);
        }
        v
    }

    /// `|q(z) / (z − center)^order|` at `center`.
    pub fn local_coefficient(&self, center: C64, order: i32) -> f64 {
        let mut v = self.kappa;
        let mut skipped = false;
        for zz in &self.zeros {
            if !skipped && order > 0 && zz.position == center && zz.order as i32 == order {
                skipped = true;
                continue;
            }
            v *= (center - zz.position).powi(zz.order as i32);
        }
        for p in &self.poles {
            if !skipped && order < 0 && p.position == center && -(p.order as i32) == order {
                skipped = true;
                continue;
            }
            v /= (center - p.position).powi(p.order as i32);
        }
        v.norm()
    }

    pub fn near_singularity(&self, z: C64, tol: f64) -> bool {
        self.zeros.iter().any(|s| (s.position - z).norm() < tol) || self.poles.iter().any(|s| (s.position - z).norm() < tol)
    }
}

/// Chart sample of the Hopf differential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfSample {
    pub z: C64,
    pub phi: C64,
    /// Area weight for residual norms.
    pub weight: f64,
}

/// `⟨u_z, u_z⟩ = ¼(|u_x|² − |u_y|² − 2i⟨u_x, u_y⟩)` in the hyperbolic metric at `u`.
pub fn hopf_value(u: H3Point, ux: [f64; 3], uy: [f64; 3]) -> C64 {
    let w = 1.0 / (u.x3 * u.x3);
    let dot = |a: [f64; 3], b: [f64; 3]| (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) * w;
    C64::new(dot(ux, ux) - dot(uy, uy), -2.0 * dot(ux, uy)) * 0.25
}

/// Hopf differential of a map sampled on a rectangular chart grid
/// `z = x0 + i*hx + i(y0 + j*hy)`, by central differences at interior nodes.
pub fn hopf_from_grid(values: &[Vec<H3Point>], x0: f64, y0: f64, hx: f64, hy: f64) -> Vec<HopfSample> {
    let nx = values.len();
    let ny = values.first().map_or(0, |c| c.len());
    let mut out = Vec::new();
    for i in 1..nx.saturating_sub(1) {
        for j in 1..ny.saturating_sub(1) {
            let d = |p: H3Point, q: H3Point, h: f64| [(p.x1 - q.x1) / h, (p.x2 - q.x2) / h, (p.x3 - q.x3) / h];
            let ux = d(values[i + 1][j], values[i - 1][j], 2.0 * hx);
            let uy = d(values[i][j + 1], values[i][j - 1], 2.0 * hy);
            let z = C64::new(x0 + i as f64 * hx, y0 + j as f64 * hy);
            out.push(HopfSample { z, phi: hopf_value(values[i][j], ux, uy), weight: hx * hy });
        }
    }
    out
}

/// Area-weighted discrete `∂̄φ` norm over grid samples, relative to `|φ|`.
pub fn dbar_residual(samples: &[HopfSample]) -> f64 {
    use std::collections::HashMap;
    if samples.len() < 5 {
        return 0.0;
    }
    // grid spacing from the smallest positive coordinate gaps
    let mut xs: Vec<f64> = samples.iter().map(|s| s.z.re).collect();
    let mut ys: Vec<f64> = samples.iter().map(|s| s.z.im).collect();
    let gap = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 1e-12).fold(f64::INFINITY, f64::min)
    };
    let (hx, hy) = (gap(&mut xs), gap(&mut ys));
    let key = |z: C64| ((z.re / hx).round() as i64, (z.im / hy).round() as i64);
    let map: HashMap<(i64, i64), C64> = samples.iter().map(|s| (key(s.z), s.phi)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for s in samples {
        let (i, j) = key(s.z);
        let (Some(e), Some(w), Some(n), Some(so)) = (map.get(&(i + 1, j)), map.get(&(i - 1, j)), map.get(&(i, j + 1)), map.get(&(i, j - 1))) else {
            continue;
        };
        let dx = (e - w) / (2.0 * hx);
        let dy = (n - so) / (2.0 * hy);
        let dbar = (dx + C64::new(0.0, 1.0) * dy) * 0.5;
        num += dbar.norm_sqr() * s.weight;
        den += s.phi.norm_sqr() * s.weight;
    }
    if den == 0.0 { num.sqrt() } else { (num / den).sqrt() }
}

/// Least-squares principal part with diagnostics.
#[derive(Debug, Clone)]
pub struct PrincipalPartFit {
    pub pp: PrincipalPart,
    /// Standard errors of `α_r, …, α_1` (or of the single leading term).
    pub std_errors: Vec<f64>,
    /// Smallest over largest singular value of the column-scaled design.
    pub condition: f64,
    pub rms_residual: f64,
}

/// Fits the Laurent tail of `√φ` (of `√(φ z)` for odd `n`) over samples in
/// an annulus, with `regular` extra Taylor terms absorbing the smooth part.
pub fn fit_principal_part(samples: &[HopfSample], n: u32, regular: usize) -> Result<PrincipalPartFit, QuadError> {
    if n == 0 {
        return Err(QuadError::BadPrincipalPart("order must be >= 1".into()));
    }
    let odd = n % 2 == 1;
    let r = (n / 2) as usize;
    let ncols = r + regular.max(if r == 0 { 1 } else { 0 });
    if samples.len() < ncols + 2 {
        return Err(QuadError::TooFewSamples { have: samples.len(), need: ncols + 2 });
    }
    let target: Vec<C64> = samples.iter().map(|s| if odd { s.phi * s.z } else { s.phi }).collect();
    let roots = continuous_sqrt(samples, &target);
    let rows = samples.len();
    let mut a = DMatrix::<C64>::zeros(rows, ncols);
    for (i, s) in samples.iter().enumerate() {
        for k in 0..r {
            a[(i, k)] = s.z.powi(-((r - k) as i32));
        }
        for j in 0..(ncols - r) {
            a[(i, r + j)] = s.z.powi(j as i32);
        }
    }
    let mut col_scale = vec![1.0; ncols];
    for j in 0..ncols {
        let nrm = a.column(j).norm();
        col_scale[j] = if nrm > 0.0 { nrm } else { 1.0 };
        let f = C64::new(1.0 / col_scale[j], 0.0);
        for i in 0..rows {
            a[(i, j)] *= f;
        }
    }
    let b = DVector::<C64>::from_vec(roots);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smax > 0.0 { smin / smax } else { 0.0 };
    if condition < 1e-12 {
        return Err(QuadError::IllConditioned(condition));
    }
    let x = svd.solve(&b, 1e-14 * smax).map_err(|e| QuadError::BadPrincipalPart(e.to_string()))?;
    let res = &b - &a * &x;
    let rss: f64 = res.iter().map(|z| z.norm_sqr()).sum();
    let dof = (rows as f64 - ncols as f64).max(1.0);
    let sigma2 = rss / dof;
    // (A^H A)^{-1} = V diag(1/s²) V^H
    let v_t = svd.v_t.as_ref().unwrap();
    let mut se = vec![0.0; ncols];
    for j in 0..ncols {
        let mut acc = 0.0;
        for k in 0..sv.len() {
            acc += v_t[(k, j)].norm_sqr() / (sv[k] * sv[k]);
        }
        se[j] = (sigma2 * acc).sqrt() / col_scale[j];
    }
    let coef: Vec<C64> = (0..ncols).map(|j| x[j] / col_scale[j]).collect();
    let pp = if n >= 3 {
        PrincipalPart::higher(n, coef[..r].to_vec())?
    } else if n == 2 {
        PrincipalPart::low(2, coef[0] * coef[0])?
    } else {
        PrincipalPart::low(1, coef[0] * coef[0])?
    };
    let std_errors = if n >= 3 { se[..r].to_vec() } else { vec![2.0 * coef[0].norm() * se[0]] };
    Ok(PrincipalPartFit { pp, std_errors, condition, rms_residual: (rss / rows as f64).sqrt() })
}

/// Square roots chosen by nearest-neighbour continuation from the sample
/// closest to the positive real ray.
fn continuous_sqrt(samples: &[HopfSample], values: &[C64]) -> Vec<C64> {
    let n = samples.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut done = vec![false; n];
    let start = (0..n)
        .min_by(|&i, &j| samples[i].z.arg().abs().partial_cmp(&samples[j].z.arg().abs()).unwrap())
        .unwrap();
    out[start] = values[start].sqrt();
    done[start] = true;
    // nearest visited neighbour for each pending sample
    let mut best: Vec<(f64, usize)> = (0..n).map(|i| ((samples[i].z - samples[start].z).norm(), start)).collect();
    for _ in 1..n {
        let mut pick = usize::MAX;
        let mut pd = f64::INFINITY;
        for i in 0..n {
            if !done[i] && best[i].0 < pd {
                pd = best[i].0;
                pick = i;
            }
        }
        let s = values[pick].sqrt();
        let refv = out[best[pick].1];
        out[pick] = if (s - refv).norm() <= (s + refv).norm() { s } else { -s };
        done[pick] = true;
        for i in 0..n {
            if !done[i] {
                let d = (samples[i].z - samples[pick].z).norm();
                if d < best[i].0 {
                    best[i] = (d, pick);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{dist_h3, elliptic_about_axis, Geodesic};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn residue_examples() {
        let r = residue(&PrincipalPart::low(2, c(1.0, 0.0)).unwrap()).unwrap();
        assert!((r - c(0.0, 4.0 * PI)).norm() < 1e-14);
        let pp = PrincipalPart::higher(4, vec![c(1.0, 2.0), c(-0.5, 0.3)]).unwrap();
        assert_eq!(residue(&pp).unwrap(), c(-0.5, 0.3));
        let p3 = PrincipalPart::higher(3, vec![c(1.0, 0.0)]).unwrap();
        assert_eq!(residue(&p3), Err(QuadError::NoResidue(3)));
    }

    #[test]
    fn boundary_compat_examples() {
        assert!(compatible_with_boundary(&PrincipalPart::low(2, c(1.0, 0.0)).unwrap(), 0.0));
        let pp = PrincipalPart::low(2, C64::from_polar(0.25, PI)).unwrap();
        assert!(compatible_with_boundary(&pp, 2.0 * PI));
        assert!(!compatible_with_boundary(&PrincipalPart::low(2, c(0.0, 0.0)).unwrap(), 1.0));
    }

    #[test]
    fn halfplane_counts() {
        assert_eq!(halfplane_decomposition(3).unwrap(), (1, 1));
        assert_eq!(halfplane_decomposition(4).unwrap(), (2, 2));
        assert_eq!(halfplane_decomposition(5).unwrap(), (3, 3));
        assert!(halfplane_decomposition(2).is_err());
    }

    #[test]
    fn halfplane_sectors_match_natural_arg() {
        for n in 3..=6u32 {
            let lead = c(0.3, -1.1);
            let part = halfplane_partition(n, lead).unwrap();
            for s in &part.sectors {
                let mid = 0.5 * (s.start + s.end);
                let psi = natural_arg(n, lead, mid);
                let frac = match s.kind {
                    SectorKind::Horizontal => psi.rem_euclid(PI),
                    SectorKind::Vertical => (psi + PI / 2.0).rem_euclid(PI),
                };
                assert!((frac - PI / 2.0).abs() < 1e-9, "n={n} {s:?} psi={psi}");
            }
        }
    }

    #[test]
    fn solvers_invert_cross_ratio() {
        let p = [BoundaryPoint::Finite(c(0.3, 1.0)), BoundaryPoint::real(-2.0), BoundaryPoint::Infinity, BoundaryPoint::Finite(c(1.0, -0.5))];
        let w = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
        assert!(solve_fourth(p[0], p[1], p[2], w).chordal(p[3]) < 1e-14);
        assert!(solve_first(p[1], p[2], p[3], w).chordal(p[0]) < 1e-14);
    }

    /// Horoball intersection by bisection along the geodesic, independent of
    /// the spinor formula.
    fn truncated_by_sampling(p: C64, dp: f64, q: C64, dq: f64) -> f64 {
        // semicircle over [p, q] in the vertical plane through both
        let ctr = (p + q) / 2.0;
        let rad = (q - p).norm() / 2.0;
        let dir = (q - p) / (q - p).norm();
        let at = |t: f64| {
            let h = ctr + dir * (rad * -t.cos());
            H3Point::new(h.re, h.im, rad * t.sin())
        };
        let inside = |x: H3Point, base: C64, dia: f64| {
            let d = x.horizontal() - base;
            d.norm_sqr() + (x.x3 - dia / 2.0).powi(2) < (dia / 2.0).powi(2)
        };
        let bis = |mut lo: f64, mut hi: f64, base: C64, dia: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if inside(at(mid), base, dia) == inside(at(lo), base, dia) { lo = mid } else { hi = mid }
            }
            at(0.5 * (lo + hi))
        };
        let x = bis(1e-9, PI / 2.0, p, dp);
        let y = bis(PI / 2.0, PI - 1e-9, q, dq);
        dist_h3(x, y)
    }

    #[test]
    fn truncated_length_matches_sampling() {
        let (p, q) = (c(0.2, -0.4), c(1.7, 0.9));
        let v = horoball_spinor(BoundaryPoint::Finite(p), 2.0);
        let w = horoball_spinor(BoundaryPoint::Finite(q), 3.0);
        let (dp, dq) = (1.0 / v[1].norm_sqr(), 1.0 / w[1].norm_sqr());
        let l = truncated_length(v, w);
        assert!((l - truncated_by_sampling(p, dp, q, dq)).abs() < 1e-9);
    }

    fn bent_two_chain(theta: f64) -> ChainSpec {
        let deck = Mobius::diag(c(2.0, 0.0));
        let base = vec![BoundaryPoint::real(1.0), BoundaryPoint::real(2.5)];
        let flat = ChainSpec::new(deck, base).unwrap();
        // rotate the second point about the geodesic through q_1 and q_{-1}
        let ax = Geodesic::new(flat.point(0), flat.point(-1)).unwrap();
        let r = elliptic_about_axis(&ax, theta);
        ChainSpec::new(deck, vec![flat.base_points[0], r.apply(flat.base_points[1])]).unwrap()
    }

    #[test]
    fn symmetric_chain_residue_zero() {
        let deck = Mobius::diag(c(2.0, 0.0));
        // p_2 = A^{1/2} p_1 makes l_1 = l_2
        let ch = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0), BoundaryPoint::real(2.0)]).unwrap();
        let r = metric_residue_chain(&ch, &[1.0, 1.0]).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(metric_residue_chain(&ChainSpec::new(deck, vec![BoundaryPoint::real(1.0)]).unwrap(), &[1.0]).is_err());
    }

    #[test]
    fn residue_horoball_independent() {
        let ch = bent_two_chain(0.6);
        let r0 = metric_residue_chain(&ch, &[1.0, 1.0]).unwrap();
        let r1 = metric_residue_chain(&ch, &[2.0, 2.0]).unwrap();
        let r2 = metric_residue_chain(&ch, &[0.3, 5.0]).unwrap();
        assert!((r0 - r1).abs() < 1e-12 && (r0 - r2).abs() < 1e-12);
    }

    #[test]
    fn straighten_planar_and_residue() {
        let ch = bent_two_chain(0.8);
        assert!(ch.planarity_defect().unwrap() > 1e-3);
        let st = straighten_chain(&ch).unwrap();
        assert!(st.planarity_defect().unwrap() < 1e-10);
        let (a, b) = (metric_residue_chain(&ch, &[1.0; 2]).unwrap(), metric_residue_chain(&st, &[1.0; 2]).unwrap());
        assert!((a.abs() - b.abs()).abs() < 1e-9, "{a} {b}");
        let st2 = straighten_chain(&st).unwrap();
        let (s1, s2) = (st.shape().unwrap(), st2.shape().unwrap());
        for k in 0..2 {
            assert!((s1[k] - s2[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn straighten_one_chain() {
        let a = Mobius::new(c(2.0, 0.5), c(0.3, 0.0), c(0.1, 0.2), c(0.6, 0.0));
        let ch = ChainSpec::new(a, vec![BoundaryPoint::Finite(c(0.4, 0.9))]).unwrap();
        let st = straighten_chain(&ch).unwrap();
        assert!((translation_length(&st.deck).unwrap() - translation_length(&a).unwrap()).abs() < 1e-12);
        assert!(st.planarity_defect().unwrap() < 1e-12);
    }

    #[test]
    fn chain_compat_rules() {
        let deck = Mobius::diag(c(2.0, 0.0));
        let one = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0)]).unwrap();
        let sym = ChainSpec::new(deck, vec![BoundaryPoint::real(1.0), BoundaryPoint::real(2.0)]).unwrap();
        let p3 = PrincipalPart::higher(3, vec![c(1.0, 0.0)]).unwrap();
        assert!(compatible_with_chain(&p3, &one).unwrap());
        let p4 = PrincipalPart::higher(4, vec![c(1.0, 0.0), c(0.0, 0.7)]).unwrap();
        assert!(compatible_with_chain(&p4, &sym).unwrap());
        assert!(!compatible_with_chain(&p4, &one).unwrap());
    }

    #[test]
    fn hopf_of_simple_maps() {
        let u = H3Point::new(0.0, 0.0, 2.0);
        // conformal: horodisk embedding (x, 0, y)
        assert!(hopf_value(u, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).norm() < 1e-15);
        // collapse (0, 0, e^{x − c y}) gives ¼(1 + ic)²
        let cc = 0.7;
        let phi = hopf_value(u, [0.0, 0.0, 2.0], [0.0, 0.0, -2.0 * cc]);
        assert!((phi - c(1.0, cc).powi(2) * 0.25).norm() < 1e-15);
    }

    #[test]
    fn fit_recovers_synthetic() {
        for n in [3u32, 4, 5, 6] {
            let r = (n / 2) as usize;
            let coeffs: Vec<C64> = (0..r).map(|k| c(1.0 + 0.3 * k as f64, -0.2 + 0.1 * k as f64)).collect();
            let pp = PrincipalPart::higher(n, coeffs.clone()).unwrap();
            let mut samples = vec![];
            for i in 0..24 {
                for j in 0..6 {
                    let z = C64::from_polar(0.2 + 0.05 * j as f64, 2.0 * PI * i as f64 / 24.0 + 0.01);
                    let mut s = c(0.0, 0.0);
                    for (k, a) in coeffs.iter().enumerate() {
                        s += a * z.powi(-((r - k) as i32));
                    }
                    s += c(0.3, 0.1) + c(-0.2, 0.05) * z;
                    let sq = if n % 2 == 1 { s * s / z } else { s * s };
                    samples.push(HopfSample { z, phi: sq, weight: 1.0 });
                }
            }
            let fit = fit_principal_part(&samples, n, 3).unwrap();
            let sgn = if (fit.pp.coeffs[0] - coeffs[0]).norm() < (fit.pp.coeffs[0] + coeffs[0]).norm() { 1.0 } else { -1.0 };
            for k in 0..r {
                let rel = (fit.pp.coeffs[k] * sgn - pp.coeffs[k]).norm() / pp.coeffs[k].norm();
                assert!(rel < 1e-6, "n={n} k={k} rel={rel}");
            }
        }
    }
}

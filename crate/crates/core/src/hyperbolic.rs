//! Upper half-space geometry: Möbius maps, ideal points, geodesics, exp/log.

use num_complex::Complex64 as C64;
use std::fmt;
use std::ops::Mul;

/// Tolerance on `tr²` comparisons in [`classify`].
pub const DELTA_CLASS: f64 = 1e-9;
/// Chordal tolerance used to decide whether two ideal points coincide.
pub const DELTA_AXIS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("repeated ideal points in cross-ratio")]
    RepeatedPoints,
    #[error("map is {0:?}; expected a semi-simple element")]
    NotSemisimple(MapClass),
    #[error("map is {0:?}; expected a loxodromic element")]
    NotLoxodromic(MapClass),
    #[error("map is {0:?}; expected a parabolic element")]
    NotParabolic(MapClass),
    #[error("degenerate point triple: cannot match")]
    DegenerateTriple,
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Finite(C64),
    Infinity,
}

impl BoundaryPoint {
    pub fn real(x: f64) -> Self {
        BoundaryPoint::Finite(C64::new(x, 0.0))
    }

    /// Homogeneous coordinates `[x : y]` with `p = x / y`.
    pub fn homogeneous(self) -> [C64; 2] {
        match self {
            BoundaryPoint::Finite(z) => [z, C64::new(1.0, 0.0)],
            BoundaryPoint::Infinity => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        }
    }

    pub fn from_homogeneous(v: [C64; 2]) -> Self {
        if v[1] == C64::new(0.0, 0.0) {
            BoundaryPoint::Infinity
        } else {
            BoundaryPoint::Finite(v[0] / v[1])
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    pub fn finite(self) -> Option<C64> {
        match self {
            BoundaryPoint::Finite(z) => Some(z),
            BoundaryPoint::Infinity => None,
        }
    }

    /// Chordal distance on the sphere of diameter one.
    pub fn chordal(self, other: BoundaryPoint) -> f64 {
        chordal_h(self.homogeneous(), other.homogeneous())
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            BoundaryPoint::Infinity => write!(f, "inf"),
        }
    }
}

fn hnorm(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn det2(v: [C64; 2], w: [C64; 2]) -> C64 {
    v[0] * w[1] - v[1] * w[0]
}

pub(crate) fn chordal_h(v: [C64; 2], w: [C64; 2]) -> f64 {
    det2(v, w).norm() / (hnorm(v) * hnorm(w))
}

/// Point of upper half-space, `x3 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H3Point {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl H3Point {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        H3Point { x1, x2, x3 }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        H3Point::new(a[0], a[1], a[2])
    }

    pub fn horizontal(self) -> C64 {
        C64::new(self.x1, self.x2)
    }
}

/// Tangent vector in ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub base: H3Point,
    pub v: [f64; 3],
}

impl TangentVector {
    pub fn new(base: H3Point, v: [f64; 3]) -> Self {
        TangentVector { base, v }
    }

    pub fn zero(base: H3Point) -> Self {
        TangentVector { base, v: [0.0; 3] }
    }

    /// Hyperbolic length `|v| / x3`.
    pub fn norm(&self) -> f64 {
        (self.v[0] * self.v[0] + self.v[1] * self.v[1] + self.v[2] * self.v[2]).sqrt() / self.base.x3
    }

    pub fn scale(&self, s: f64) -> Self {
        TangentVector::new(self.base, [s * self.v[0], s * self.v[1], s * self.v[2]])
    }
}

/// Element of SL₂(ℂ) standing for its class in PSL₂(ℂ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    /// Builds the map and rescales to determinant one.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        let det = a * d - b * c;
        let s = det.sqrt();
        Mobius { a: a / s, b: b / s, c: c / s, d: d / s }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mobius::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0))
    }

    pub fn identity() -> Self {
        Mobius::real(1.0, 0.0, 0.0, 1.0)
    }

    /// `z ↦ λ² z`, i.e. `diag(λ, 1/λ)`.
    pub fn diag(lambda: C64) -> Self {
        Mobius { a: lambda, b: C64::new(0.0, 0.0), c: C64::new(0.0, 0.0), d: lambda.inv() }
    }

    pub fn translation(t: C64) -> Self {
        Mobius { a: C64::new(1.0, 0.0), b: t, c: C64::new(0.0, 0.0), d: C64::new(1.0, 0.0) }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn tr2(&self) -> C64 {
        let t = self.trace();
        t * t
    }

    pub fn inverse(&self) -> Self {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> Self {
        Mobius { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = Mobius::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    fn frob_diff(&self, o: &Mobius) -> f64 {
        self.entries().iter().zip(o.entries().iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance in PSL₂, minimised over the sign of `other`.
    pub fn dist_pm(&self, other: &Mobius) -> f64 {
        self.frob_diff(other).min(self.frob_diff(&other.neg()))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn conj_by(&self, g: &Mobius) -> Mobius {
        *g * *self * g.inverse()
    }

    pub fn apply_h(&self, v: [C64; 2]) -> [C64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn apply(&self, p: BoundaryPoint) -> BoundaryPoint {
        mobius_apply_boundary(self, p)
    }

    pub fn apply_interior(&self, x: H3Point) -> H3Point {
        mobius_apply_interior(self, x)
    }

    /// The map sending `(∞, 0, 1)` to `(pa, pb, pc)`.
    pub fn from_standard_triple(pa: BoundaryPoint, pb: BoundaryPoint, pc: BoundaryPoint) -> Result<Self, GeomError> {
        let (va, vb, vc) = (pa.homogeneous(), pb.homogeneous(), pc.homogeneous());
        let det = det2(va, vb);
        if det.norm() <= 1e-14 * hnorm(va) * hnorm(vb) {
            return Err(GeomError::DegenerateTriple);
        }
        // alpha va + beta vb = vc
        let alpha = det2(vc, vb) / det;
        let beta = det2(va, vc) / det;
        if alpha.norm() * hnorm(va) <= 1e-14 * hnorm(vc) || beta.norm() * hnorm(vb) <= 1e-14 * hnorm(vc) {
            return Err(GeomError::DegenerateTriple);
        }
        Ok(Mobius::new(alpha * va[0], beta * vb[0], alpha * va[1], beta * vb[1]))
    }

    /// The unique map with `M(p_i) = q_i`.
    pub fn from_triples(p: [BoundaryPoint; 3], q: [BoundaryPoint; 3]) -> Result<Self, GeomError> {
        let sp = Mobius::from_standard_triple(p[0], p[1], p[2])?;
        let sq = Mobius::from_standard_triple(q[0], q[1], q[2])?;
        Ok(sq * sp.inverse())
    }
}

impl Mul for Mobius {
    type Output = Mobius;
    fn mul(self, o: Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Oriented geodesic with ordered ideal endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodesic {
    pub start: BoundaryPoint,
    pub end: BoundaryPoint,
}

impl Geodesic {
    pub fn new(start: BoundaryPoint, end: BoundaryPoint) -> Result<Self, GeomError> {
        if start.chordal(end) < DELTA_AXIS {
            return Err(GeomError::DegenerateGeodesic);
        }
        Ok(Geodesic { start, end })
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic { start: self.end, end: self.start }
    }

    /// Distance from `x` to the geodesic.
    pub fn distance_to(&self, x: H3Point) -> f64 {
        // Move the geodesic to (0, ∞); distance is asinh(|z|/t).
        let n = Mobius::from_standard_triple(self.end, self.start, pick_third(self.start, self.end))
            .expect("distinct endpoints")
            .inverse();
        let y = n.apply_interior(x);
        (y.horizontal().norm() / y.x3).asinh()
    }

    /// Unordered endpoint comparison in the chordal metric.
    pub fn same_endpoints(&self, other: &Geodesic, tol: f64) -> bool {
        let direct = self.start.chordal(other.start).max(self.end.chordal(other.end));
        let swapped = self.start.chordal(other.end).max(self.end.chordal(other.start));
        direct.min(swapped) <= tol
    }

    pub fn shares_endpoint(&self, other: &Geodesic, tol: f64) -> bool {
        [self.start, self.end].iter().any(|p| [other.start, other.end].iter().any(|q| p.chordal(*q) <= tol))
    }
}

fn pick_third(p: BoundaryPoint, q: BoundaryPoint) -> BoundaryPoint {
    for cand in [BoundaryPoint::real(1.0), BoundaryPoint::real(-1.0), BoundaryPoint::Finite(C64::new(0.0, 1.0))] {
        if cand.chordal(p) > 0.1 && cand.chordal(q) > 0.1 {
            return cand;
        }
    }
    BoundaryPoint::Finite(C64::new(0.0, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapClass {
    Identity,
    Parabolic,
    Elliptic,
    Loxodromic,
}

pub fn mobius_apply_boundary(m: &Mobius, p: BoundaryPoint) -> BoundaryPoint {
    BoundaryPoint::from_homogeneous(m.apply_h(p.homogeneous()))
}

/// Poincaré extension to upper half-space.
pub fn mobius_apply_interior(m: &Mobius, x: H3Point) -> H3Point {
    let z = x.horizontal();
    let t2 = x.x3 * x.x3;
    let w = m.c * z + m.d;
    let den = w.norm_sqr() + m.c.norm_sqr() * t2;
    let num = (m.a * z + m.b) * w.conj() + m.a * m.c.conj() * t2;
    H3Point::new(num.re / den, num.im / den, x.x3 / den)
}

pub fn dist_h3(x: H3Point, y: H3Point) -> f64 {
    let dx = [x.x1 - y.x1, x.x2 - y.x2, x.x3 - y.x3];
    let e = (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
    2.0 * (e / (2.0 * (x.x3 * y.x3).sqrt())).asinh()
}

pub fn classify(m: &Mobius) -> MapClass {
    classify_tol(m, DELTA_CLASS)
}

pub fn classify_tol(m: &Mobius, tol: f64) -> MapClass {
    let t2 = m.tr2();
    if (t2 - 4.0).norm() < tol {
        let off = m.b.norm().max(m.c.norm()).max((m.a - m.d).norm());
        if off < tol.sqrt() * 1e-2 {
            MapClass::Identity
        } else {
            MapClass::Parabolic
        }
    } else if t2.im.abs() < tol && t2.re > -tol && t2.re < 4.0 {
        MapClass::Elliptic
    } else {
        MapClass::Loxodromic
    }
}

/// Eigenvector of `m` for eigenvalue `lambda`.
fn eigvec(m: &Mobius, lambda: C64) -> [C64; 2] {
    let v1 = [m.b, lambda - m.a];
    let v2 = [lambda - m.d, m.c];
    if hnorm(v1) >= hnorm(v2) { v1 } else { v2 }
}

/// Fixed points of a semi-simple map, repelling point first for loxodromics.
pub fn axis(m: &Mobius) -> Result<Geodesic, GeomError> {
    let cls = classify(m);
    if matches!(cls, MapClass::Identity | MapClass::Parabolic) {
        return Err(GeomError::NotSemisimple(cls));
    }
    let t = m.trace();
    let s = (t * t - 4.0).sqrt();
    let mut l1 = (t - s) / 2.0;
    let mut l2 = (t + s) / 2.0;
    if l1.norm() > l2.norm() {
        std::mem::swap(&mut l1, &mut l2);
    }
    let p = BoundaryPoint::from_homogeneous(eigvec(m, l1));
    let q = BoundaryPoint::from_homogeneous(eigvec(m, l2));
    Ok(Geodesic { start: p, end: q })
}

/// `2 |Re acosh(tr/2)|`.
pub fn translation_length(m: &Mobius) -> Result<f64, GeomError> {
    let cls = classify(m);
    if cls != MapClass::Loxodromic {
        return Err(GeomError::NotLoxodromic(cls));
    }
    Ok(2.0 * (m.trace() / 2.0).acosh().re.abs())
}

/// Cross-ratio normalised by `cross_ratio(∞, −1, 0, z) = z`.
pub fn cross_ratio(p1: BoundaryPoint, p2: BoundaryPoint, p3: BoundaryPoint, p4: BoundaryPoint) -> Result<C64, GeomError> {
    let v = [p1.homogeneous(), p2.homogeneous(), p3.homogeneous(), p4.homogeneous()];
    for i in 0..4 {
        for j in (i + 1)..4 {
            if chordal_h(v[i], v[j]) < 1e-14 {
                return Err(GeomError::RepeatedPoints);
            }
        }
    }
    let d = |i: usize, j: usize| det2(v[i], v[j]);
    Ok(d(0, 1) * d(2, 3) / (d(0, 3) * d(1, 2)))
}

/// Rotation by `theta` about `g`, fixing both endpoints.
pub fn elliptic_about_axis(g: &Geodesic, theta: f64) -> Mobius {
    let (p, q) = (g.start.homogeneous(), g.end.homogeneous());
    // C(0) = start, C(∞) = end
    let c = Mobius::new(q[0], p[0], q[1], p[1]);
    let r = Mobius::diag(C64::from_polar(1.0, theta / 2.0));
    c * r * c.inverse()
}

/// Conjugator `N` with `N P N⁻¹ = z + 1` for a parabolic `P`.
pub fn parabolic_normalizer(p: &Mobius) -> Result<Mobius, GeomError> {
    let class = classify(p);
    if class != MapClass::Parabolic {
        return Err(GeomError::NotParabolic(class));
    }
    let p = if p.trace().re < 0.0 { p.neg() } else { *p };
    let one = C64::new(1.0, 0.0);
    // send the fixed point to infinity
    let m = if p.c.norm() < 1e-14 * p.max_abs() {
        Mobius::identity()
    } else {
        Mobius::new(C64::new(0.0, 0.0), one, -one, (p.a - p.d) / (p.c * 2.0))
    };
    let q = m * p * m.inverse();
    // q = z + t up to sign
    let t = q.b / q.d;
    Ok(Mobius::diag((one / t).sqrt()) * m)
}

/// `tr²(αⁿδ)` read off the normal form `α = z + 1`, `δ = [[a, b], [c, d]]`:
/// `(a + d + nc)²`.
pub fn parabolic_power_trace_sq(alpha: &Mobius, delta: &Mobius, n: i64) -> Result<C64, GeomError> {
    let d = delta.conj_by(&parabolic_normalizer(alpha)?);
    let t = d.a + d.d + d.c * n as f64;
    Ok(t * t / d.det())
}

/// Geodesic exponential map.
pub fn exp_h3(x: H3Point, v: &TangentVector) -> H3Point {
    let u = [v.v[0] / x.x3, v.v[1] / x.x3, v.v[2] / x.x3];
    let s = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if s == 0.0 {
        return x;
    }
    let w = [u[0] / s, u[1] / s, u[2] / s];
    let h2 = w[0] * w[0] + w[1] * w[1];
    let (one_minus, one_plus) = if w[2] >= 0.0 { (h2 / (1.0 + w[2]), 1.0 + w[2]) } else { (1.0 - w[2], h2 / (1.0 - w[2])) };
    let dd = s.exp() * one_minus / 2.0 + (-s).exp() * one_plus / 2.0;
    let sh = s.sinh();
    let p = [w[0] * sh / dd, w[1] * sh / dd, 1.0 / dd];
    H3Point::new(x.x1 + x.x3 * p[0], x.x2 + x.x3 * p[1], x.x3 * p[2])
}

/// Inverse of [`exp_h3`].
pub fn log_h3(x: H3Point, y: H3Point) -> TangentVector {
    let n = [(y.x1 - x.x1) / x.x3, (y.x2 - x.x2) / x.x3, y.x3 / x.x3];
    let d = dist_h3(H3Point::new(0.0, 0.0, 1.0), H3Point::from_array(n));
    if d == 0.0 {
        return TangentVector::zero(x);
    }
    let f = if d < 1e-8 { 1.0 - d * d / 6.0 } else { d / d.sinh() };
    let h2 = n[0] * n[0] + n[1] * n[1];
    let w = [n[0] / n[2], n[1] / n[2], (n[2] * n[2] + h2 - 1.0) / (2.0 * n[2])];
    TangentVector::new(x, [x.x3 * f * w[0], x.x3 * f * w[1], x.x3 * f * w[2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn boundary_examples() {
        let p = BoundaryPoint::Finite(c(1.0, 2.0));
        assert_eq!(Mobius::identity().apply(p), p);
        assert_eq!(Mobius::real(1.0, 1.0, 0.0, 1.0).apply(BoundaryPoint::Infinity), BoundaryPoint::Infinity);
        assert_eq!(Mobius::real(0.0, -1.0, 1.0, 0.0).apply(BoundaryPoint::real(0.0)), BoundaryPoint::Infinity);
    }

    #[test]
    fn interior_examples() {
        let e3 = H3Point::new(0.0, 0.0, 1.0);
        assert_eq!(Mobius::identity().apply_interior(e3), e3);
        assert_eq!(Mobius::real(1.0, 1.0, 0.0, 1.0).apply_interior(e3), H3Point::new(1.0, 0.0, 1.0));
        let l = 2f64.sqrt();
        let y = Mobius::real(l, 0.0, 0.0, 1.0 / l).apply_interior(e3);
        assert!((y.x3 - 2.0).abs() < 1e-15 && y.x1.abs() < 1e-15);
        assert!((dist_h3(e3, y) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let e3 = H3Point::new(0.0, 0.0, 1.0);
        assert_eq!(dist_h3(e3, e3), 0.0);
        assert!((dist_h3(e3, H3Point::new(0.0, 0.0, std::f64::consts::E)) - 1.0).abs() < 1e-15);
        assert!((dist_h3(e3, H3Point::new(1.0, 0.0, 1.0)) - 1.5f64.acosh()).abs() < 1e-15);
        assert!((1.5f64.acosh() - 0.9624236501192069).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&Mobius::real(1.0, 1.0, 0.0, 1.0)), MapClass::Parabolic);
        assert_eq!(classify(&Mobius::real(2.0, 0.0, 0.0, 0.5)), MapClass::Loxodromic);
        assert_eq!(classify(&Mobius::identity()), MapClass::Identity);
        assert_eq!(classify(&Mobius::identity().neg()), MapClass::Identity);
        let r = elliptic_about_axis(&Geodesic::new(BoundaryPoint::real(0.0), BoundaryPoint::Infinity).unwrap(), 1.0);
        assert_eq!(classify(&r), MapClass::Elliptic);
    }

    #[test]
    fn axis_examples() {
        let g = axis(&Mobius::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!(g.start, BoundaryPoint::real(0.0));
        assert_eq!(g.end, BoundaryPoint::Infinity);
        let m = Mobius::real(2.0, 1.0, 1.0, 1.0);
        let g = axis(&m).unwrap();
        let s5 = 5f64.sqrt();
        let roots = [(1.0 - s5) / 2.0, (1.0 + s5) / 2.0];
        for p in [g.start, g.end] {
            let z = p.finite().unwrap();
            assert!(roots.iter().any(|r| (z - r).norm() < 1e-12));
            let fz = m.apply(p).finite().unwrap();
            assert!((fz - z).norm() < 1e-12);
        }
        assert!(axis(&Mobius::real(1.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn translation_length_examples() {
        let m = Mobius::real(2.0, 0.0, 0.0, 0.5);
        let l = translation_length(&m).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-14);
        let e3 = H3Point::new(0.0, 0.0, 1.0);
        assert!((dist_h3(e3, m.apply_interior(e3)) - l).abs() < 1e-14);
        assert!(translation_length(&Mobius::real(1.0, 1.0, 0.0, 1.0)).is_err());
        let mut prev = f64::INFINITY;
        for k in 1..5 {
            let l = 1.0 + 10f64.powi(-k);
            let len = translation_length(&Mobius::real(l, 0.0, 0.0, 1.0 / l)).unwrap();
            assert!(len < prev && len < 3.0 * 10f64.powi(-k));
            prev = len;
        }
    }

    #[test]
    fn cross_ratio_examples() {
        let z = c(2.0, 1.0);
        let inf = BoundaryPoint::Infinity;
        let cr = cross_ratio(inf, BoundaryPoint::real(-1.0), BoundaryPoint::real(0.0), BoundaryPoint::Finite(z)).unwrap();
        assert!((cr - z).norm() < 1e-15);
        assert!(cross_ratio(inf, inf, BoundaryPoint::real(0.0), BoundaryPoint::real(1.0)).is_err());
        // Two routes for (0, 1, ∞, λ): direct, and after moving (0, 1, ∞) to (∞, −1, 0).
        let lam = BoundaryPoint::Finite(c(0.3, -0.7));
        let direct = cross_ratio(BoundaryPoint::real(0.0), BoundaryPoint::real(1.0), inf, lam).unwrap();
        let m = Mobius::from_triples(
            [BoundaryPoint::real(0.0), BoundaryPoint::real(1.0), inf],
            [inf, BoundaryPoint::real(-1.0), BoundaryPoint::real(0.0)],
        )
        .unwrap();
        let read = m.apply(lam).finite().unwrap();
        assert!((direct - read).norm() < 1e-12);
        let l = lam.finite().unwrap();
        assert!((direct + l.inv()).norm() < 1e-12);
    }

    #[test]
    fn elliptic_examples() {
        let g = Geodesic::new(BoundaryPoint::real(0.0), BoundaryPoint::Infinity).unwrap();
        assert!(elliptic_about_axis(&g, 0.0).dist_pm(&Mobius::identity()) < 1e-15);
        let th = 0.7;
        let r = elliptic_about_axis(&g, th);
        assert!(r.dist_pm(&Mobius::diag(C64::from_polar(1.0, th / 2.0))) < 1e-15);
        let g2 = Geodesic::new(BoundaryPoint::Finite(c(0.2, 1.0)), BoundaryPoint::real(-3.0)).unwrap();
        let lhs = elliptic_about_axis(&g2, 0.4) * elliptic_about_axis(&g2, 0.9);
        assert!(lhs.dist_pm(&elliptic_about_axis(&g2, 1.3)) < 1e-12);
        let r2 = elliptic_about_axis(&g2, 0.9);
        assert!((r2.tr2() - 4.0 * (0.45f64).cos().powi(2)).norm() < 1e-12);
        for p in [g2.start, g2.end] {
            assert!(r2.apply(p).chordal(p) < 1e-12);
        }
    }

    #[test]
    fn exp_log_examples() {
        let e3 = H3Point::new(0.0, 0.0, 1.0);
        assert_eq!(exp_h3(e3, &TangentVector::zero(e3)), e3);
        let y = exp_h3(e3, &TangentVector::new(e3, [0.0, 0.0, 1.5]));
        assert!((y.x3 - 1.5f64.exp()).abs() < 1e-14 && y.x1 == 0.0);
        let x = H3Point::new(0.3, -0.2, 0.5);
        let v = TangentVector::new(x, [0.4, 0.1, -0.3]);
        let y = exp_h3(x, &v);
        assert!((dist_h3(x, y) - v.norm()).abs() < 1e-13);
        let w = log_h3(x, y);
        for k in 0..3 {
            assert!((w.v[k] - v.v[k]).abs() < 1e-12);
        }
    }
}

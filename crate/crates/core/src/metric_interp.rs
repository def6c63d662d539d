//! Radial conformal-factor interpolations: cusp-to-flat near a simple pole and
//! a smoothing polynomial at a zero, plus assembly of the domain metric.

use crate::quad_diff::ModelDifferential;
use num_complex::Complex64 as C64;

/// Right end of the interpolation window near a simple pole.
pub const POLE_OUTER: f64 = 2.0 / 3.0;
/// Fraction of `k(2/3) − k(ε)` carried by the first window.
const FIRST_WINDOW_SHARE: f64 = 0.02;
/// Width of the second window relative to `b − ε₀`.
const SECOND_WINDOW_WIDTH: f64 = 0.1;
pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("k(eps) = {k_eps} is not below k(2/3) = -1/2; needs eps < e^-2")]
    NotMonotoneFeasible { k_eps: f64 },
    #[error("target integral {rhs} outside the reachable range ({lo}, {hi})")]
    TargetOutOfRange { rhs: f64, lo: f64, hi: f64 },
    #[error("p(r) = {value} < 0 at r = {r}")]
    NegativeP { r: f64, value: f64 },
    #[error("modification regions {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("zero interpolation needs order n >= 1")]
    BadOrder,
}

/// `ψ(r) = a r^{4n} + b r^{2n} + c` matching `r^n` to second order at `ε`.
///
/// Exact solution of the matching system: `a = −1/(8ε^{3n})`, `b = 3/(4εⁿ)`,
/// `c = (3/8)εⁿ`. The variant with `1/(8n)` in `a` and `c` only solves it for `n = 1`.
pub fn zero_interp_coeffs(n: u32, eps: f64) -> Result<(f64, f64, f64), InterpError> {
    if n == 0 {
        return Err(InterpError::BadOrder);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(InterpError::BadEpsilon(eps));
    }
    let en = eps.powi(n as i32);
    let (ah, bh, ch) = ZERO_HAT;
    Ok((ah / (en * en * en), bh / en, ch * en))
}

/// Scale-free coefficients `(aε^{3n}, bεⁿ, c/εⁿ)`, exact in binary.
pub const ZERO_HAT: (f64, f64, f64) = (-0.125, 0.75, 0.375);

/// `p` in the variable `t = (r/ε)^{2n}`: `ab r^{4n} = âb̂ t²` and so on, so `p`
/// itself is scale free and vanishes exactly at `t = 1`.
pub fn zero_interp_p_scaled(t: f64) -> f64 {
    let (a, b, c) = ZERO_HAT;
    a * b * t * t + 4.0 * a * c * t + b * c
}

/// `ψ, ψ′, ψ″` at `r`.
pub fn zero_interp_psi(n: u32, coeffs: (f64, f64, f64), r: f64) -> [f64; 3] {
    let (a, b, c) = coeffs;
    let nf = n as f64;
    let s = r.powi(2 * n as i32);
    let psi = a * s * s + b * s + c;
    let d1 = 4.0 * nf * a * r.powi(4 * n as i32 - 1) + 2.0 * nf * b * r.powi(2 * n as i32 - 1);
    let d2 = 4.0 * nf * (4.0 * nf - 1.0) * a * r.powi(4 * n as i32 - 2)
        + 2.0 * nf * (2.0 * nf - 1.0) * b * r.powi(2 * n as i32 - 2);
    [psi, d1, d2]
}

/// Residuals of the three matching equations, each relative to its right side.
pub fn zero_interp_residuals(n: u32, eps: f64) -> Result<[f64; 3], InterpError> {
    let co = zero_interp_coeffs(n, eps)?;
    let p = zero_interp_psi(n, co, eps);
    let nf = n as f64;
    let target = [eps.powi(n as i32), nf * eps.powi(n as i32 - 1), nf * (nf - 1.0) * eps.powi(n as i32 - 2)];
    let mut out = [0.0; 3];
    for k in 0..3 {
        let scale = target[k].abs().max(eps.powi(n as i32 - k as i32).abs());
        out[k] = (p[k] - target[k]).abs() / scale;
    }
    Ok(out)
}

/// `p(r) = ab r^{4n} + 4ac r^{2n} + bc`, the numerator factor of `Δ ln ψ`.
pub fn zero_interp_p(n: u32, coeffs: (f64, f64, f64), r: f64) -> f64 {
    let (a, b, c) = coeffs;
    let s = r.powi(2 * n as i32);
    a * b * s * s + 4.0 * a * c * s + b * c
}

#[derive(Debug, Clone)]
pub struct ZeroInterpReport {
    pub n: u32,
    pub eps: f64,
    pub coeffs: (f64, f64, f64),
    pub residuals: [f64; 3],
    /// Smallest sampled `p` on `(0, ε]` and where it occurs.
    pub min_p: f64,
    pub argmin_p: f64,
    /// `p` at the stationary point `s = −2c/b`, i.e. `bc − (4ac)²/(4ab)`.
    pub stationary_value: f64,
    /// `s = r^{2n}` at the stationary point; negative, so outside the disk.
    pub stationary_s: f64,
    /// `p(ε)`, the true minimum over `(0, ε]` since `p` is concave in `s`.
    pub p_at_eps: f64,
    /// Largest sampled Gaussian curvature of `ψ |dz|²`.
    pub max_curvature: f64,
    /// Largest disagreement between the factored and direct `Δ ln ψ`.
    pub laplacian_mismatch: f64,
    /// `r → 0` limit of `ψ` and the value at the innermost sample.
    pub limit_c: f64,
    pub psi_near_zero: f64,
}

impl ZeroInterpReport {
    pub fn ok(&self) -> bool {
        self.residuals.iter().all(|r| *r < 1e-12)
            && self.min_p >= -1e-12
            && self.stationary_value >= 0.0
            && self.max_curvature <= 1e-10
    }
}

/// Samples `p`, the curvature and the stationary-point value on `(0, ε]`.
pub fn zero_interp_verify(n: u32, eps: f64, samples: usize) -> Result<ZeroInterpReport, InterpError> {
    let co = zero_interp_coeffs(n, eps)?;
    let (a, b, c) = co;
    let residuals = zero_interp_residuals(n, eps)?;
    let nf = n as f64;
    let mut min_p = f64::INFINITY;
    let mut argmin = 0.0;
    let mut max_k = f64::NEG_INFINITY;
    let mut mismatch: f64 = 0.0;
    let m = samples.max(2);
    for j in 1..=m {
        let r = eps * j as f64 / m as f64;
        let p = zero_interp_p_scaled((j as f64 / m as f64).powi(2 * n as i32));
        if p < min_p {
            min_p = p;
            argmin = r;
        }
        let [psi, d1, d2] = zero_interp_psi(n, co, r);
        let lap_factored = 4.0 * nf * nf * r.powi(2 * n as i32 - 2) * p / (psi * psi);
        let lap_direct = -d1 * d1 / (psi * psi) + d2 / psi + d1 / (r * psi);
        mismatch = mismatch.max((lap_factored - lap_direct).abs() / lap_direct.abs().max(1.0));
        let k = -lap_factored / (2.0 * psi);
        max_k = max_k.max(k);
    }
    let stationary_s = -4.0 * a * c / (2.0 * a * b);
    let stationary_value = -(4.0 * a * c).powi(2) / (4.0 * a * b) + b * c;
    let r0 = eps * 1e-6;
    Ok(ZeroInterpReport {
        n,
        eps,
        coeffs: co,
        residuals,
        min_p,
        argmin_p: argmin,
        stationary_value,
        stationary_s,
        p_at_eps: zero_interp_p_scaled(1.0),
        max_curvature: max_k,
        laplacian_mismatch: mismatch,
        limit_c: c,
        psi_near_zero: zero_interp_psi(n, co, r0)[0],
    })
}

/// Cusp conformal exponent `f(r) = −ln(r |ln r|)` with two derivatives.
pub fn cusp_u(r: f64) -> [f64; 3] {
    let l = r.ln();
    let k = -1.0 - 1.0 / l;
    let dk = 1.0 / (r * l * l);
    [-(r * l.abs()).ln(), k / r, dk / r - k / (r * r)]
}

/// Flat exponent `g(r) = −½ ln r` with two derivatives.
pub fn flat_u(r: f64) -> [f64; 3] {
    [-0.5 * r.ln(), -0.5 / r, 0.5 / (r * r)]
}

fn k_cusp(r: f64) -> f64 {
    -1.0 - 1.0 / r.ln()
}

const K_OUTER: f64 = -0.5;

/// Right side of the fourth bump condition.
pub fn pole_target_integral(eps: f64) -> f64 {
    flat_u(POLE_OUTER)[0] - cusp_u(eps)[0] - k_cusp(eps) * (POLE_OUTER / eps).ln()
}

/// Upper bound `(k(2/3) − k(ε)) ln(2/(3ε))` for the fourth bump integral.
pub fn pole_alpha(eps: f64) -> f64 {
    (K_OUTER - k_cusp(eps)) * (POLE_OUTER / eps).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Cusp,
    Interpolation,
    Flat,
}

/// Piece of `v(s) = α + β s` on `[r0, r1]`, with `k` and `u` at `r0`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    r0: f64,
    r1: f64,
    alpha: f64,
    beta: f64,
    k0: f64,
    u0: f64,
}

impl Piece {
    fn v(&self, r: f64) -> f64 {
        self.alpha + self.beta * r
    }
    fn k(&self, r: f64) -> f64 {
        self.k0 + self.alpha * (r - self.r0) + 0.5 * self.beta * (r * r - self.r0 * self.r0)
    }
    fn u(&self, r: f64) -> f64 {
        let cst = self.k0 - self.alpha * self.r0 - 0.5 * self.beta * self.r0 * self.r0;
        self.u0 + cst * (r / self.r0).ln() + self.alpha * (r - self.r0) + 0.25 * self.beta * (r * r - self.r0 * self.r0)
    }
}

/// Two-window piecewise-linear bump `v` and the profile it integrates to.
#[derive(Debug, Clone)]
pub struct BumpSpec {
    pub eps: f64,
    pub eps0: f64,
    pub a: f64,
    pub b: f64,
    pub first_height: f64,
    pub second_height: f64,
    pieces: Vec<Piece>,
}

impl BumpSpec {
    fn build(eps: f64, b: f64) -> BumpSpec {
        let k_eps = k_cusp(eps);
        let dk = K_OUTER - k_eps;
        let h1 = 1.0 / (eps * eps.ln().powi(2));
        let i1 = FIRST_WINDOW_SHARE * dk;
        let eps0 = eps + 2.0 * i1 / h1;
        let a = b - SECOND_WINDOW_WIDTH * (b - eps0);
        let h2 = 2.0 * (dk - i1) / (b - a);
        let mid = 0.5 * (a + b);
        // (r0, r1, v(r0), v(r1))
        let spans = [
            (eps, eps0, h1, 0.0),
            (eps0, a, 0.0, 0.0),
            (a, mid, 0.0, h2),
            (mid, b, h2, 0.0),
            (b, POLE_OUTER, 0.0, 0.0),
        ];
        let mut pieces = Vec::with_capacity(spans.len());
        let (mut k0, mut u0) = (k_eps, cusp_u(eps)[0]);
        for (i, (r0, r1, v0, v1)) in spans.into_iter().enumerate() {
            let beta = (v1 - v0) / (r1 - r0);
            let alpha = v0 - beta * r0;
            // v vanishes on the last span, where k equals k(2/3) exactly; pin
            // it so accumulated rounding cannot dip below the flat value
            if i == spans.len() - 1 {
                k0 = K_OUTER;
            }
            let p = Piece { r0, r1, alpha, beta, k0, u0 };
            k0 = p.k(r1);
            u0 = p.u(r1);
            pieces.push(p);
        }
        BumpSpec { eps, eps0, a, b, first_height: h1, second_height: h2, pieces }
    }

    fn piece(&self, r: f64) -> &Piece {
        self.pieces.iter().find(|p| r <= p.r1).unwrap_or(self.pieces.last().unwrap())
    }

    pub fn v(&self, r: f64) -> f64 {
        self.piece(r).v(r)
    }

    /// `∫_ε^{2/3} v`.
    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(|p| 0.5 * (p.v(p.r0) + p.v(p.r1)) * (p.r1 - p.r0)).sum()
    }

    /// `u, u′, u″, k` on the interpolation segment.
    pub fn eval(&self, r: f64) -> [f64; 4] {
        let p = self.piece(r);
        let k = p.k(r);
        [p.u(r), k / r, p.v(r) / r - k / (r * r), k]
    }

    /// `𝓘 = ∫_ε^{2/3} (k(r) − k(ε)) / r dr`.
    pub fn inner_integral(&self) -> f64 {
        self.eval(POLE_OUTER)[0] - cusp_u(self.eps)[0] - k_cusp(self.eps) * (POLE_OUTER / self.eps).ln()
    }

    /// Conditions (i)–(iv) as absolute residuals.
    pub fn condition_residuals(&self) -> [f64; 4] {
        let dk = K_OUTER - k_cusp(self.eps);
        [
            (self.total_mass() - dk).abs(),
            (self.v(self.eps) - 1.0 / (self.eps * self.eps.ln().powi(2))).abs(),
            self.v(POLE_OUTER).abs(),
            (self.inner_integral() - pole_target_integral(self.eps)).abs(),
        ]
    }
}

/// Sup of admissible `ε`: monotone interpolation possible and the fourth
/// bump condition reachable by the window family.
pub fn pole_eps_max() -> f64 {
    let (mut lo, mut hi) = (1e-6, (-2.0f64).exp());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pole_bump(mid).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn pole_default_eps() -> f64 {
    0.01f64.min(0.5 * pole_eps_max())
}

/// Solves for the second-window position `b` so that `u(2/3) = g(2/3)`.
pub fn pole_bump(eps: f64) -> Result<BumpSpec, InterpError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(InterpError::BadEpsilon(eps));
    }
    let k_eps = k_cusp(eps);
    if !(k_eps < K_OUTER) {
        return Err(InterpError::NotMonotoneFeasible { k_eps });
    }
    let rhs = pole_target_integral(eps);
    let probe = BumpSpec::build(eps, POLE_OUTER);
    let eps0 = probe.eps0;
    if eps0 >= POLE_OUTER {
        return Err(InterpError::TargetOutOfRange { rhs, lo: f64::NAN, hi: f64::NAN });
    }
    let mut b_lo = eps0 + 1e-3 * (POLE_OUTER - eps0);
    let mut b_hi = POLE_OUTER;
    let i_hi = BumpSpec::build(eps, b_lo).inner_integral();
    let i_lo = probe.inner_integral();
    if !(rhs > i_lo && rhs < i_hi) {
        return Err(InterpError::TargetOutOfRange { rhs, lo: i_lo, hi: i_hi });
    }
    // the integral decreases as the second window moves outward
    for _ in 0..200 {
        let mid = 0.5 * (b_lo + b_hi);
        if BumpSpec::build(eps, mid).inner_integral() > rhs {
            b_lo = mid;
        } else {
            b_hi = mid;
        }
        if b_hi - b_lo < 1e-15 {
            break;
        }
    }
    Ok(BumpSpec::build(eps, 0.5 * (b_lo + b_hi)))
}

/// Sampled radial profile with segment tags.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub bump: BumpSpec,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    pub k: Vec<f64>,
    pub segment: Vec<Segment>,
}

impl RadialProfile {
    /// `u, u′, u″` at any `r ∈ (0, 1)`.
    pub fn eval(&self, r: f64) -> ([f64; 3], Segment) {
        let (u, _, seg) = eval_profile(&self.bump, r);
        (u, seg)
    }

    /// Jumps of `u, u′, u″` between the interpolation and the two reference
    /// exponents at `ε` and `2/3`.
    pub fn endpoint_mismatch(&self) -> [[f64; 3]; 2] {
        let e = self.bump.eps;
        let left = self.bump.eval(e);
        let fl = cusp_u(e);
        let right = self.bump.eval(POLE_OUTER);
        let gr = flat_u(POLE_OUTER);
        let mut out = [[0.0; 3]; 2];
        for j in 0..3 {
            out[0][j] = (left[j] - fl[j]).abs();
            out[1][j] = (right[j] - gr[j]).abs();
        }
        out
    }

    /// Smallest consecutive difference of `k` on the grid.
    pub fn min_k_increment(&self) -> f64 {
        self.k.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// `(u, u′, u″)`, `k = r u′` taken from its own closed form (not `r · u′`,
/// which adds rounding noise on the plateaus) and the segment tag.
fn eval_profile(bump: &BumpSpec, r: f64) -> ([f64; 3], f64, Segment) {
    if r <= bump.eps {
        (cusp_u(r), k_cusp(r), Segment::Cusp)
    } else if r < POLE_OUTER {
        let e = bump.eval(r);
        ([e[0], e[1], e[2]], e[3], Segment::Interpolation)
    } else {
        (flat_u(r), K_OUTER, Segment::Flat)
    }
}

/// Geometric grid on `(0, 1)` that contains `ε` and `2/3`.
pub fn profile_grid(eps: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (1e-6f64.min(eps * 1e-3), 0.999);
    let m = n.max(8) - 2;
    let mut r: Vec<f64> = (0..m).map(|j| lo * (hi / lo).powf(j as f64 / (m - 1) as f64)).collect();
    r.push(eps);
    r.push(POLE_OUTER);
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.dedup();
    r
}

pub fn pole_interp_profile(eps: f64) -> Result<RadialProfile, InterpError> {
    pole_interp_profile_n(eps, DEFAULT_GRID)
}

pub fn pole_interp_profile_n(eps: f64, n: usize) -> Result<RadialProfile, InterpError> {
    let bump = pole_bump(eps)?;
    let r = profile_grid(eps, n);
    let mut out = RadialProfile {
        bump,
        r: Vec::with_capacity(r.len()),
        u: vec![],
        du: vec![],
        d2u: vec![],
        k: vec![],
        segment: vec![],
    };
    for &x in &r {
        let (v, k, seg) = eval_profile(&out.bump, x);
        out.r.push(x);
        out.u.push(v[0]);
        out.du.push(v[1]);
        out.d2u.push(v[2]);
        out.k.push(k);
        out.segment.push(seg);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CurvatureSamples {
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub segment: Vec<Segment>,
    /// Largest relative disagreement between stored and finite-difference
    /// derivatives at interior nodes of each segment.
    pub fd_mismatch_du: f64,
    pub fd_mismatch_d2u: f64,
}

impl CurvatureSamples {
    pub fn max_on(&self, seg: Segment) -> f64 {
        self.iter_on(seg).fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn max_dev_on(&self, seg: Segment, target: f64) -> f64 {
        self.iter_on(seg).map(|k| (k - target).abs()).fold(0.0, f64::max)
    }
    fn iter_on(&self, seg: Segment) -> impl Iterator<Item = f64> + '_ {
        self.k.iter().zip(&self.segment).filter(move |(_, s)| **s == seg).map(|(k, _)| *k)
    }
}

/// `K = −(u″ + u′/r) e^{−2u}`.
pub fn curvature(r: f64, u: [f64; 3]) -> f64 {
    -(u[2] + u[1] / r) * (-2.0 * u[0]).exp()
}

pub fn curvature_of_profile(p: &RadialProfile) -> CurvatureSamples {
    let n = p.r.len();
    let k: Vec<f64> = (0..n).map(|j| curvature(p.r[j], [p.u[j], p.du[j], p.d2u[j]])).collect();
    let (mut m1, mut m2): (f64, f64) = (0.0, 0.0);
    for j in 1..n.saturating_sub(1) {
        if p.segment[j - 1] != p.segment[j] || p.segment[j + 1] != p.segment[j] {
            continue;
        }
        let (h0, h1) = (p.r[j] - p.r[j - 1], p.r[j + 1] - p.r[j]);
        let d1 = (p.u[j + 1] - p.u[j - 1]) / (h0 + h1);
        let d2 = 2.0 * (h0 * p.u[j + 1] - (h0 + h1) * p.u[j] + h1 * p.u[j - 1]) / (h0 * h1 * (h0 + h1));
        m1 = m1.max((d1 - p.du[j]).abs() / p.du[j].abs().max(1.0));
        m2 = m2.max((d2 - p.d2u[j]).abs() / p.d2u[j].abs().max(1.0));
    }
    CurvatureSamples { r: p.r.clone(), k, segment: p.segment.clone(), fd_mismatch_du: m1, fd_mismatch_d2u: m2 }
}

/// Kind of a metric modification region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    /// Zero of the given order.
    Zero(u32),
    SimplePole,
}

/// Modification disk in the core chart with its normal coordinate
/// `w = scale · (z − center)`.
#[derive(Debug, Clone)]
pub struct Region {
    pub feature: Feature,
    pub center: C64,
    pub scale: C64,
    /// Radius in the normal coordinate.
    pub w_radius: f64,
}

impl Region {
    pub fn z_radius(&self) -> f64 {
        self.w_radius / self.scale.norm()
    }
}

/// Conformal factor `λ²` on the core chart of a model differential.
#[derive(Debug, Clone)]
pub struct DomainMetric {
    pub model: ModelDifferential,
    pub regions: Vec<Region>,
    pub zero_coeffs: Vec<(f64, f64, f64)>,
    pub zero_eps: f64,
    pub pole_profile: Option<RadialProfile>,
}

impl DomainMetric {
    /// `λ²(z)` and the index of the region containing `z`, if any.
    pub fn lambda2(&self, z: C64) -> (f64, Option<usize>) {
        for (i, reg) in self.regions.iter().enumerate() {
            let w = reg.scale * (z - reg.center);
            let rw = w.norm();
            if rw < reg.w_radius {
                let jac = reg.scale.norm_sqr();
                let f = match reg.feature {
                    Feature::Zero(n) => zero_interp_psi(n, self.zero_coeffs[i], rw)[0],
                    Feature::SimplePole => {
                        let prof = self.pole_profile.as_ref().expect("pole profile");
                        (2.0 * prof.eval(rw).0[0]).exp()
                    }
                };
                return (f * jac, Some(i));
            }
        }
        (4.0 * self.model.q(z).norm(), None)
    }

    /// Gaussian curvature from the exact radial formulas inside regions;
    /// zero outside, where `ln |q|` is harmonic.
    pub fn curvature(&self, z: C64) -> f64 {
        let (l2, reg) = self.lambda2(z);
        let Some(i) = reg else { return 0.0 };
        let r = &self.regions[i];
        let rw = (r.scale * (z - r.center)).norm();
        let jac = r.scale.norm_sqr();
        match r.feature {
            Feature::Zero(n) => {
                let co = self.zero_coeffs[i];
                let [psi, d1, d2] = zero_interp_psi(n, co, rw);
                let lap = -d1 * d1 / (psi * psi) + d2 / psi + d1 / (rw * psi);
                -0.5 * lap * jac / l2
            }
            Feature::SimplePole => {
                let prof = self.pole_profile.as_ref().expect("pole profile");
                curvature(rw, prof.eval(rw).0)
            }
        }
    }

    /// Largest sampled curvature over a square grid of the core chart.
    pub fn curvature_audit(&self, half_width: f64, n: usize) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let z = C64::new(
                    -half_width + 2.0 * half_width * (i as f64 + 0.5) / n as f64,
                    -half_width + 2.0 * half_width * (j as f64 + 0.5) / n as f64,
                );
                if self.model.near_singularity(z, 1e-9) {
                    continue;
                }
                worst = worst.max(self.curvature(z));
            }
        }
        worst
    }
}

/// Modifies `4|q|` near zeros (radius `zero_eps` in normal coordinates) and
/// simple poles (radius 2/3 in normal coordinates, cusp below `pole_eps`).
pub fn domain_metric_assemble(model: &ModelDifferential, zero_eps: f64, pole_eps: f64) -> Result<DomainMetric, InterpError> {
    let mut regions = Vec::new();
    let mut zero_coeffs = Vec::new();
    for z in &model.zeros {
        // q ≈ A (z − z0)^n, normal form ¼ w^n dw² with w = c (z − z0)
        let a = model.local_coefficient(z.position, z.order as i32);
        let n = z.order as i32;
        let c = (4.0 * a).powf(1.0 / (n + 2) as f64);
        regions.push(Region { feature: Feature::Zero(z.order), center: z.position, scale: C64::new(c, 0.0), w_radius: zero_eps });
        zero_coeffs.push(zero_interp_coeffs(z.order, zero_eps)?);
    }
    let mut pole_profile = None;
    for p in model.poles.iter().filter(|p| p.order == 1) {
        // q ≈ A / (z − p), normal form 1/(4w) dw² with w = 4A (z − p)
        let a = model.local_coefficient(p.position, -1);
        regions.push(Region { feature: Feature::SimplePole, center: p.position, scale: C64::new(4.0 * a, 0.0), w_radius: POLE_OUTER });
        zero_coeffs.push((0.0, 0.0, 0.0));
        if pole_profile.is_none() {
            pole_profile = Some(pole_interp_profile(pole_eps)?);
        }
    }
    for i in 0..regions.len() {
        for j in (i + 1)..regions.len() {
            let d = (regions[i].center - regions[j].center).norm();
            if d < regions[i].z_radius() + regions[j].z_radius() {
                return Err(InterpError::Overlap(i, j));
            }
        }
    }
    Ok(DomainMetric { model: model.clone(), regions, zero_coeffs, zero_eps, pole_profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coeffs_example() {
        let (a, b, c) = zero_interp_coeffs(1, 0.1).unwrap();
        assert!((a + 125.0).abs() < 1e-9);
        assert!((b - 7.5).abs() < 1e-12);
        assert!((c - 0.0375).abs() < 1e-15);
    }

    #[test]
    fn zero_verify_n1() {
        let rep = zero_interp_verify(1, 0.1, 2000).unwrap();
        assert!(rep.ok(), "{rep:?}");
        assert!(rep.p_at_eps.abs() < 1e-12);
        assert!(rep.stationary_s < 0.0);
        assert!((rep.psi_near_zero - rep.limit_c).abs() < 1e-12);
    }

    #[test]
    fn p_vanishes_at_eps_for_every_order() {
        // with s = r^{2n}: p(ε) = −3/32 − 3/16 + 9/32 = 0
        for n in 1..=4u32 {
            let rep = zero_interp_verify(n, 0.13, 10).unwrap();
            assert!(rep.p_at_eps.abs() < 1e-12);
            assert!(rep.residuals.iter().all(|r| *r < 1e-12), "{:?}", rep.residuals);
            let co = rep.coeffs;
            for r in [0.02, 0.07, 0.12] {
                let t = (r / 0.13f64).powi(2 * n as i32);
                assert!((zero_interp_p(n, co, r) - zero_interp_p_scaled(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_exponents() {
        for r in [0.001, 0.01, 0.03] {
            assert!((curvature(r, cusp_u(r)) + 1.0).abs() < 1e-12);
        }
        for r in [0.7, 0.9] {
            assert!(curvature(r, flat_u(r)).abs() < 1e-15);
        }
        assert_eq!(curvature(0.5, [1.3, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn pole_target_at_default() {
        // g(2/3) − f(ε) − k(ε) ln(2/(3ε)) evaluated independently
        let e: f64 = 0.01;
        let g = -0.5 * (2.0f64 / 3.0).ln();
        let f = -(e * e.ln().abs()).ln();
        let k = -1.0 - 1.0 / e.ln();
        let rhs = g - f - k * (2.0 / (3.0 * e)).ln();
        assert!((pole_target_integral(e) - rhs).abs() < 1e-14);
        assert!(rhs > 0.0 && rhs < pole_alpha(e));
    }

    #[test]
    fn pole_bump_conditions() {
        let b = pole_bump(0.01).unwrap();
        assert!(b.eps < b.eps0 && b.eps0 < b.a && b.a < b.b && b.b < POLE_OUTER);
        for r in b.condition_residuals() {
            assert!(r < 1e-9, "{:?}", b.condition_residuals());
        }
    }

    #[test]
    fn pole_eps_bounds() {
        let m = pole_eps_max();
        assert!(m < (-2.0f64).exp());
        assert!(pole_bump(m * 0.99).is_ok());
        assert!(pole_bump(m * 1.01).is_err());
        assert!(matches!(pole_bump(0.2), Err(InterpError::NotMonotoneFeasible { .. })));
        assert_eq!(pole_default_eps(), 0.01f64.min(0.5 * m));
    }

    #[test]
    fn profile_fd_consistency() {
        let c1 = curvature_of_profile(&pole_interp_profile_n(0.01, 4096).unwrap());
        let c2 = curvature_of_profile(&pole_interp_profile_n(0.01, 16384).unwrap());
        assert!(c1.fd_mismatch_du < 1e-3, "{}", c1.fd_mismatch_du);
        // v has kinks, so only a decrease under refinement is expected
        assert!(c2.fd_mismatch_d2u < 0.75 * c1.fd_mismatch_d2u, "{} {}", c1.fd_mismatch_d2u, c2.fd_mismatch_d2u);
        assert!(c1.max_on(Segment::Flat).abs() < 1e-12);
    }
}

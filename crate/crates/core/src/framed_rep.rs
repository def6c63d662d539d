//! Ideal triangulations of marked bordered surfaces, development from
//! Fock-Goncharov coordinates, holonomy, peripheral data and bending.

use crate::hyperbolic::{
    axis, classify, cross_ratio, elliptic_about_axis, BoundaryPoint, Geodesic, GeomError, MapClass, Mobius, DELTA_AXIS,
};
use crate::quad_diff::{solve_fourth, ChainSpec, QuadError};
use num_complex::Complex64 as C64;
use std::collections::{HashSet, VecDeque};
use std::fmt;

pub const WORD_SEARCH_LEN: usize = 8;
pub const POWER_SWEEP: i64 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepError {
    #[error("surface invalid: {0}")]
    Surface(String),
    #[error("triangulation invalid: {0}")]
    Triangulation(String),
    #[error("coordinate vector has {got} entries, triangulation has {want} edges")]
    CoordCount { got: usize, want: usize },
    #[error("coordinate on edge {0} is zero")]
    ZeroCoordinate(usize),
    #[error("development degenerates across edge {0}")]
    Degenerate(usize),
    #[error("edge {0}: framing values coincide")]
    DegenerateEdge(usize),
    #[error("generator {0}: ill-conditioned triple matching")]
    IllConditioned(usize),
    #[error("no end with id {0}")]
    NoEnd(usize),
    #[error("end {0} is not a boundary component")]
    NotBoundary(usize),
    #[error("no semi-simple pair within word length {0} and power sweep {1}")]
    SearchExhausted(usize, i64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Genus, marked points per boundary component, interior punctures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedBorderedSurface {
    pub genus: u32,
    pub boundary_marked_counts: Vec<u32>,
    pub interior_punctures: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceReport {
    pub valid: bool,
    /// `2 − 2g − k − |P|`.
    pub euler: i64,
    /// `6g − 6 + Σ(n_i + 3)`.
    pub n_param: i64,
    /// Interior edges of an ideal triangulation, `6g − 6 + 3|P| + Σ(n_i + 3)`.
    pub edge_count: i64,
    pub triangle_count: i64,
    /// Disk with marked boundary points; handled elsewhere.
    pub disk_out_of_scope: bool,
    pub violations: Vec<String>,
}

pub fn validate_surface(s: &MarkedBorderedSurface) -> SurfaceReport {
    let g = s.genus as i64;
    let k = s.boundary_marked_counts.len() as i64;
    let p = s.interior_punctures as i64;
    let marked: i64 = s.boundary_marked_counts.iter().map(|n| *n as i64).sum();
    let euler = 2 - 2 * g - k - p;
    let n_param = 6 * g - 6 + s.boundary_marked_counts.iter().map(|n| *n as i64 + 3).sum::<i64>();
    let edge_count = n_param + 3 * p;
    let mut violations = vec![];
    if marked + p == 0 {
        violations.push("marked set is empty".to_string());
    }
    if euler >= 0 {
        violations.push(format!("Euler characteristic of the punctured surface is {euler}, must be negative"));
    }
    for (i, n) in s.boundary_marked_counts.iter().enumerate() {
        if *n == 0 {
            violations.push(format!("boundary component {i} has no marked point"));
        }
    }
    let disk_out_of_scope = g == 0 && k == 1 && p == 0;
    if disk_out_of_scope {
        violations.push("disk with marked boundary points is out of scope".to_string());
    }
    // triangles: 3T = 2E + (number of boundary arcs)
    let triangle_count = (2 * edge_count + marked) / 3;
    SurfaceReport { valid: violations.is_empty(), euler, n_param, edge_count, triangle_count, disk_out_of_scope, violations }
}

/// What lies across a triangle side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideGlue {
    Glued { tri: usize, side: usize },
    Boundary,
}

/// Interior edge joining side `a` of one triangle to side `b` of another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeInfo {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub tree: bool,
    /// Generator index for edges off the spanning tree.
    pub generator: Option<usize>,
}

/// Letter `+(i+1)` for generator `i`, `−(i+1)` for its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn identity() -> Self {
        Word(vec![])
    }

    pub fn gen(i: usize) -> Self {
        Word(vec![i as i32 + 1])
    }

    pub fn mul_letter(&self, l: i32) -> Word {
        let mut v = self.0.clone();
        if v.last() == Some(&-l) {
            v.pop();
        } else {
            v.push(l);
        }
        Word(v)
    }

    pub fn mul(&self, o: &Word) -> Word {
        o.0.iter().fold(self.clone(), |w, l| w.mul_letter(*l))
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, gens: &[Mobius]) -> Mobius {
        self.0.iter().fold(Mobius::identity(), |m, l| {
            let g = gens[(l.unsigned_abs() - 1) as usize];
            m * if *l > 0 { g } else { g.inverse() }
        })
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|l| {
                let n = &names[(l.unsigned_abs() - 1) as usize];
                if *l > 0 { n.clone() } else { format!("{n}^-1") }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..64).map(|i| format!("g{i}")).collect();
        write!(f, "{}", self.display_with(&names))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    Puncture,
    Boundary,
}

/// One end of the surface: a puncture link or a boundary component.
#[derive(Debug, Clone, PartialEq)]
pub struct End {
    pub kind: EndKind,
    /// Index among ends of the same kind, in discovery order.
    pub index: usize,
    /// Peripheral element.
    pub word: Word,
    /// Lifted corners `(triangle, corner, deck word)`: the start corner for a
    /// puncture, the marked points in walk order for a boundary.
    pub corners: Vec<(usize, usize, Word)>,
    /// Crossings `(triangle, side)` of the walk, in order.
    pub crossings: Vec<(usize, usize)>,
}

/// Triangles with positively ordered corners; side `i` runs from corner `i`
/// to corner `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealTriangulation {
    pub sides: Vec<[SideGlue; 3]>,
    pub edges: Vec<EdgeInfo>,
    pub generator_edges: Vec<usize>,
    pub generator_names: Vec<String>,
    pub edge_names: Vec<String>,
    pub ends: Vec<End>,
    edge_of_side: Vec<[Option<usize>; 3]>,
    tree_order: Vec<(usize, usize)>,
}

impl IdealTriangulation {
    /// Builds from a gluing table. `tree` lists edges (by id) forming the dual
    /// spanning tree; when absent a breadth-first tree from triangle 0 is used.
    pub fn new(sides: Vec<[SideGlue; 3]>, tree: Option<Vec<usize>>, names: Option<Vec<String>>) -> Result<Self, RepError> {
        let nt = sides.len();
        if nt == 0 {
            return Err(RepError::Triangulation("no triangles".into()));
        }
        let mut edges = vec![];
        let mut edge_of_side = vec![[None; 3]; nt];
        for t in 0..nt {
            for i in 0..3 {
                if let SideGlue::Glued { tri, side } = sides[t][i] {
                    if tri >= nt || side >= 3 {
                        return Err(RepError::Triangulation(format!("side ({t},{i}) glued to missing ({tri},{side})")));
                    }
                    if sides[tri][side] != (SideGlue::Glued { tri: t, side: i }) {
                        return Err(RepError::Triangulation(format!("gluing of ({t},{i}) is not an involution")));
                    }
                    if (tri, side) == (t, i) {
                        return Err(RepError::Triangulation(format!("side ({t},{i}) glued to itself")));
                    }
                    if edge_of_side[t][i].is_none() {
                        let id = edges.len();
                        edges.push(EdgeInfo { a: (t, i), b: (tri, side), tree: false, generator: None });
                        edge_of_side[t][i] = Some(id);
                        edge_of_side[tri][side] = Some(id);
                    }
                }
            }
        }
        // dual spanning tree
        let mut in_tree = vec![false; edges.len()];
        let mut tree_order = vec![];
        let mut seen = vec![false; nt];
        seen[0] = true;
        match tree {
            Some(list) => {
                for e in &list {
                    if *e >= edges.len() {
                        return Err(RepError::Triangulation(format!("tree edge {e} out of range")));
                    }
                    in_tree[*e] = true;
                }
                let mut queue = VecDeque::from([0usize]);
                while let Some(t) = queue.pop_front() {
                    for i in 0..3 {
                        if let (Some(e), SideGlue::Glued { tri, .. }) = (edge_of_side[t][i], sides[t][i]) {
                            if in_tree[e] && !seen[tri] {
                                seen[tri] = true;
                                tree_order.push((t, i));
                                queue.push_back(tri);
                            }
                        }
                    }
                }
                if list.len() != nt - 1 || seen.iter().any(|s| !s) {
                    return Err(RepError::Triangulation("tree edges do not form a spanning tree".into()));
                }
            }
            None => {
                let mut queue = VecDeque::from([0usize]);
                while let Some(t) = queue.pop_front() {
                    for i in 0..3 {
                        if let (Some(e), SideGlue::Glued { tri, .. }) = (edge_of_side[t][i], sides[t][i]) {
                            if !seen[tri] {
                                seen[tri] = true;
                                in_tree[e] = true;
                                tree_order.push((t, i));
                                queue.push_back(tri);
                            }
                        }
                    }
                }
                if seen.iter().any(|s| !s) {
                    return Err(RepError::Triangulation("dual graph is disconnected".into()));
                }
            }
        }
        let mut generator_edges = vec![];
        for (e, info) in edges.iter_mut().enumerate() {
            info.tree = in_tree[e];
            if !info.tree {
                info.generator = Some(generator_edges.len());
                generator_edges.push(e);
            }
        }
        let edge_names = match names {
            Some(n) if n.len() == edges.len() => n,
            Some(n) => return Err(RepError::Triangulation(format!("{} edge names for {} edges", n.len(), edges.len()))),
            None => (0..edges.len()).map(|e| format!("e{e}")).collect(),
        };
        let generator_names = generator_edges.iter().map(|e| edge_names[*e].clone()).collect();
        let mut tri = IdealTriangulation { sides, edges, generator_edges, generator_names, edge_names, ends: vec![], edge_of_side, tree_order };
        tri.ends = tri.walk_ends()?;
        Ok(tri)
    }

    pub fn triangle_count(&self) -> usize {
        self.sides.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generator_edges.len()
    }

    pub fn edge_of(&self, t: usize, i: usize) -> Option<usize> {
        self.edge_of_side[t][i]
    }

    /// Lands across side `i` of `(t, g)`: `(t′, j, g′)`.
    pub fn cross(&self, t: usize, i: usize, g: &Word) -> Option<(usize, usize, Word)> {
        let SideGlue::Glued { tri, side } = self.sides[t][i] else { return None };
        let e = self.edge_of_side[t][i].unwrap();
        let info = &self.edges[e];
        let g2 = match info.generator {
            None => g.clone(),
            Some(h) => {
                let l = h as i32 + 1;
                if info.a == (t, i) { g.mul_letter(l) } else { g.mul_letter(-l) }
            }
        };
        Some((tri, side, g2))
    }

    fn walk_ends(&self) -> Result<Vec<End>, RepError> {
        let nt = self.sides.len();
        let mut used = vec![[false; 3]; nt];
        let mut ends = vec![];
        let mut arc_used = vec![[false; 3]; nt];
        let limit = 6 * nt + 6;
        let mut nb = 0;
        for t0 in 0..nt {
            for i0 in 0..3 {
                if self.sides[t0][i0] != SideGlue::Boundary || arc_used[t0][i0] {
                    continue;
                }
                // start at the far end of arc (t0, i0)
                let (mut t, mut k, mut g) = (t0, (i0 + 1) % 3, Word::identity());
                let mut corners = vec![(t, k, g.clone())];
                let mut crossings = vec![];
                arc_used[t0][i0] = true;
                let mut steps = 0;
                loop {
                    used[t][k] = true;
                    if self.sides[t][k] == SideGlue::Boundary {
                        if (t, k) == (t0, i0) {
                            break;
                        }
                        arc_used[t][k] = true;
                        k = (k + 1) % 3;
                        corners.push((t, k, g.clone()));
                    } else {
                        crossings.push((t, k));
                        let (t2, j, g2) = self.cross(t, k, &g).unwrap();
                        t = t2;
                        k = (j + 1) % 3;
                        g = g2;
                    }
                    steps += 1;
                    if steps > limit {
                        return Err(RepError::Triangulation("boundary walk does not close".into()));
                    }
                }
                ends.push(End { kind: EndKind::Boundary, index: nb, word: g, corners, crossings });
                nb += 1;
            }
        }
        let mut np = 0;
        for t0 in 0..nt {
            for k0 in 0..3 {
                if used[t0][k0] {
                    continue;
                }
                let (mut t, mut k, mut g) = (t0, k0, Word::identity());
                let mut crossings = vec![];
                let mut steps = 0;
                loop {
                    used[t][k] = true;
                    if self.sides[t][k] == SideGlue::Boundary {
                        return Err(RepError::Triangulation("puncture walk meets a boundary arc".into()));
                    }
                    crossings.push((t, k));
                    let (t2, j, g2) = self.cross(t, k, &g).unwrap();
                    t = t2;
                    k = (j + 1) % 3;
                    g = g2;
                    if (t, k) == (t0, k0) {
                        break;
                    }
                    steps += 1;
                    if steps > limit {
                        return Err(RepError::Triangulation("puncture walk does not close".into()));
                    }
                }
                ends.push(End { kind: EndKind::Puncture, index: np, word: g, corners: vec![(t0, k0, Word::identity())], crossings });
                np += 1;
            }
        }
        Ok(ends)
    }

    pub fn punctures(&self) -> impl Iterator<Item = &End> {
        self.ends.iter().filter(|e| e.kind == EndKind::Puncture)
    }

    pub fn boundaries(&self) -> impl Iterator<Item = &End> {
        self.ends.iter().filter(|e| e.kind == EndKind::Boundary)
    }

    /// Checks the triangulation against a surface description.
    pub fn check_surface(&self, s: &MarkedBorderedSurface) -> Result<(), RepError> {
        let rep = validate_surface(s);
        if self.edges.len() as i64 != rep.edge_count {
            return Err(RepError::Triangulation(format!("{} interior edges, surface needs {}", self.edges.len(), rep.edge_count)));
        }
        let np = self.punctures().count();
        if np != s.interior_punctures as usize {
            return Err(RepError::Triangulation(format!("{np} punctures, surface has {}", s.interior_punctures)));
        }
        let counts: Vec<u32> = self.boundaries().map(|e| e.corners.len() as u32).collect();
        if counts != s.boundary_marked_counts {
            return Err(RepError::Triangulation(format!("boundary marked counts {counts:?}, surface has {:?}", s.boundary_marked_counts)));
        }
        Ok(())
    }

    /// Two triangles, edges `a`, `b` off the tree and the diagonal on it.
    pub fn once_punctured_torus() -> Self {
        use SideGlue::Glued as G;
        let sides = vec![
            [G { tri: 1, side: 1 }, G { tri: 1, side: 2 }, G { tri: 1, side: 0 }],
            [G { tri: 0, side: 2 }, G { tri: 0, side: 0 }, G { tri: 0, side: 1 }],
        ];
        IdealTriangulation::new(sides, Some(vec![2]), Some(vec!["a".into(), "b".into(), "d".into()])).expect("preset")
    }

    /// Pentagon `a b a⁻¹ b⁻¹ ∂` cut into three triangles from one corner.
    pub fn one_boundary_torus() -> Self {
        use SideGlue::{Boundary as B, Glued as G};
        let sides = vec![
            [G { tri: 1, side: 1 }, G { tri: 2, side: 1 }, G { tri: 1, side: 0 }],
            [G { tri: 0, side: 2 }, G { tri: 0, side: 0 }, G { tri: 2, side: 0 }],
            [G { tri: 1, side: 2 }, G { tri: 0, side: 1 }, B],
        ];
        // edge ids: 0 = a, 1 = b, 2 = d1, 3 = d2
        IdealTriangulation::new(sides, Some(vec![2, 3]), Some(vec!["a".into(), "b".into(), "d1".into(), "d2".into()])).expect("preset")
    }

    /// The four framing points `(p1, p2, p3, p4)` whose cross-ratio is the
    /// coordinate of edge `e`, as lifted corners.
    pub fn quad_corners(&self, e: usize) -> [(usize, usize, Word); 4] {
        let info = &self.edges[e];
        let (t, i) = info.a;
        let (t2, j, g) = self.cross(t, i, &Word::identity()).unwrap();
        let _ = j;
        let jb = info.b.1;
        [
            (t, (i + 1) % 3, Word::identity()),
            (t, (i + 2) % 3, Word::identity()),
            (t, i, Word::identity()),
            (t2, (jb + 2) % 3, g),
        ]
    }
}

/// Per-edge nonzero complex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FGCoords(pub Vec<C64>);

impl FGCoords {
    pub fn check(&self, tri: &IdealTriangulation) -> Result<(), RepError> {
        if self.0.len() != tri.edge_count() {
            return Err(RepError::CoordCount { got: self.0.len(), want: tri.edge_count() });
        }
        for (e, z) in self.0.iter().enumerate() {
            if *z == C64::new(0.0, 0.0) || !z.re.is_finite() || !z.im.is_finite() {
                return Err(RepError::ZeroCoordinate(e));
            }
        }
        Ok(())
    }

    pub fn args(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }
}

/// Modulus of every coordinate.
pub fn fuchsian_shadow(z: &FGCoords) -> FGCoords {
    FGCoords(z.0.iter().map(|w| C64::new(w.norm(), 0.0)).collect())
}

/// Sign per interior puncture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signing(pub Vec<i8>);

/// Framing of the base lift of each triangle plus one collar triangle across
/// each generator edge.
#[derive(Debug, Clone)]
pub struct DevelopedTriangulation {
    pub tri: IdealTriangulation,
    pub coords: FGCoords,
    pub base: Vec<[BoundaryPoint; 3]>,
    /// `(edge, triangle, deck word, positions)` for each collar triangle.
    pub collar: Vec<(usize, usize, Word, [BoundaryPoint; 3])>,
}

/// Positions of the triangle across side `i` of a triangle at `pos`.
pub fn develop_across(pos: &[BoundaryPoint; 3], i: usize, j: usize, z: C64) -> Result<[BoundaryPoint; 3], GeomError> {
    let (p1, p2, p3) = (pos[(i + 1) % 3], pos[(i + 2) % 3], pos[i]);
    let p4 = solve_fourth(p1, p2, p3, z);
    for q in [p1, p2, p3] {
        if q.chordal(p4) < 1e-13 {
            return Err(GeomError::RepeatedPoints);
        }
    }
    let mut out = [BoundaryPoint::Infinity; 3];
    out[j] = p1;
    out[(j + 1) % 3] = p3;
    out[(j + 2) % 3] = p4;
    Ok(out)
}

pub fn develop(tri: &IdealTriangulation, z: &FGCoords) -> Result<DevelopedTriangulation, RepError> {
    z.check(tri)?;
    let nt = tri.triangle_count();
    let mut base = vec![[BoundaryPoint::Infinity; 3]; nt];
    base[0] = [BoundaryPoint::Infinity, BoundaryPoint::real(-1.0), BoundaryPoint::real(0.0)];
    for &(t, i) in &tri.tree_order {
        let e = tri.edge_of(t, i).unwrap();
        let SideGlue::Glued { tri: t2, side: j } = tri.sides[t][i] else { unreachable!() };
        base[t2] = develop_across(&base[t], i, j, z.0[e]).map_err(|_| RepError::Degenerate(e))?;
    }
    let mut collar = vec![];
    for &e in &tri.generator_edges {
        let (t, i) = tri.edges[e].a;
        let (t2, j, g) = tri.cross(t, i, &Word::identity()).unwrap();
        let pos = develop_across(&base[t], i, j, z.0[e]).map_err(|_| RepError::Degenerate(e))?;
        collar.push((e, t2, g, pos));
    }
    Ok(DevelopedTriangulation { tri: tri.clone(), coords: z.clone(), base, collar })
}

/// Generator images and the framing of each triangle's base lift.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedRepresentation {
    pub generators: Vec<Mobius>,
    pub framing: Vec<[BoundaryPoint; 3]>,
}

impl FramedRepresentation {
    pub fn eval(&self, w: &Word) -> Mobius {
        w.eval(&self.generators)
    }

    /// Framing value at a lifted corner.
    pub fn corner(&self, t: usize, k: usize, g: &Word) -> BoundaryPoint {
        self.eval(g).apply(self.framing[t][k])
    }

    pub fn conjugate(&self, m: &Mobius) -> FramedRepresentation {
        FramedRepresentation {
            generators: self.generators.iter().map(|g| g.conj_by(m)).collect(),
            framing: self.framing.iter().map(|f| [m.apply(f[0]), m.apply(f[1]), m.apply(f[2])]).collect(),
        }
    }
}

pub fn holonomy(dev: &DevelopedTriangulation) -> Result<FramedRepresentation, RepError> {
    let mut generators = vec![Mobius::identity(); dev.tri.generator_count()];
    for (e, t2, _g, pos) in &dev.collar {
        let h = dev.tri.edges[*e].generator.unwrap();
        let m = Mobius::from_triples(dev.base[*t2], *pos).map_err(|_| RepError::IllConditioned(h))?;
        generators[h] = m;
    }
    Ok(FramedRepresentation { generators, framing: dev.base.clone() })
}

/// Edge coordinates read back from a framed representation.
pub fn fg_from_rep(rep: &FramedRepresentation, tri: &IdealTriangulation) -> Result<FGCoords, RepError> {
    let mut out = Vec::with_capacity(tri.edge_count());
    for e in 0..tri.edge_count() {
        let c = tri.quad_corners(e);
        let p: Vec<BoundaryPoint> = c.iter().map(|(t, k, g)| rep.corner(*t, *k, g)).collect();
        out.push(cross_ratio(p[0], p[1], p[2], p[3]).map_err(|_| RepError::DegenerateEdge(e))?);
    }
    Ok(FGCoords(out))
}

/// Peripheral element of an end evaluated through the generators.
pub fn peripheral_monodromy(rep: &FramedRepresentation, tri: &IdealTriangulation, end: usize) -> Result<Mobius, RepError> {
    let e = tri.ends.get(end).ok_or(RepError::NoEnd(end))?;
    Ok(rep.eval(&e.word))
}

/// Peripheral element obtained by developing the triangles around the end
/// directly from the edge coordinates.
pub fn peripheral_by_fan(dev: &DevelopedTriangulation, end: usize) -> Result<Mobius, RepError> {
    let e = dev.tri.ends.get(end).ok_or(RepError::NoEnd(end))?;
    let (t0, _, _) = e.corners[0];
    let start_tri = match e.kind {
        EndKind::Puncture => t0,
        EndKind::Boundary => e.crossings.first().map_or(t0, |c| c.0),
    };
    let start = dev.base[start_tri];
    let mut pos = start;
    let mut t = start_tri;
    for &(tc, side) in &e.crossings {
        debug_assert_eq!(tc, t);
        let SideGlue::Glued { tri: t2, side: j } = dev.tri.sides[tc][side] else { unreachable!() };
        let z = dev.coords.0[dev.tri.edge_of(tc, side).unwrap()];
        pos = develop_across(&pos, side, j, z).map_err(|_| RepError::Degenerate(dev.tri.edge_of(tc, side).unwrap()))?;
        t = t2;
    }
    if t != start_tri {
        return Err(RepError::Triangulation("fan walk does not return to its start triangle".into()));
    }
    Ok(Mobius::from_triples(start, pos)?)
}

/// Largest PSL₂ distance between the two routes to each peripheral element.
pub fn relator_residual(dev: &DevelopedTriangulation, rep: &FramedRepresentation) -> Result<f64, RepError> {
    let mut worst: f64 = 0.0;
    for i in 0..dev.tri.ends.len() {
        let a = peripheral_monodromy(rep, &dev.tri, i)?;
        let b = peripheral_by_fan(dev, i)?;
        worst = worst.max(a.dist_pm(&b) / a.max_abs().max(1.0));
    }
    Ok(worst)
}

/// Designated geometry of an end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndType {
    Cusp,
    /// Puncture opening to a geodesic boundary.
    Cylinder,
    Crown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeReport {
    pub type_preserving: bool,
    pub classes: Vec<MapClass>,
    pub violations: Vec<String>,
}

/// Cusps parabolic, cylinders and crowns loxodromic, no identity peripheral.
pub fn is_type_preserving(rep: &FramedRepresentation, tri: &IdealTriangulation, designation: &[EndType]) -> Result<TypeReport, RepError> {
    let mut classes = vec![];
    let mut violations = vec![];
    for (i, e) in tri.ends.iter().enumerate() {
        let cls = classify(&rep.eval(&e.word));
        classes.push(cls);
        let want = designation.get(i).copied().unwrap_or(match e.kind {
            EndKind::Puncture => EndType::Cusp,
            EndKind::Boundary => EndType::Crown,
        });
        let ok = match (want, cls) {
            (_, MapClass::Identity) => {
                violations.push(format!("end {i}: peripheral element maps to the identity (apparent singularity)"));
                continue;
            }
            (EndType::Cusp, c) => c == MapClass::Parabolic,
            (_, c) => c == MapClass::Loxodromic,
        };
        if !ok {
            violations.push(format!("end {i}: designated {want:?}, peripheral is {cls:?}"));
        }
    }
    Ok(TypeReport { type_preserving: violations.is_empty(), classes, violations })
}

/// For each puncture: whether the framing value is the attracting fixed point
/// of the peripheral element (`+1`), the repelling one (`−1`) or neither (`0`).
pub fn framing_signs(rep: &FramedRepresentation, tri: &IdealTriangulation) -> Vec<i8> {
    tri.punctures()
        .map(|e| {
            let m = rep.eval(&e.word);
            let (t, k, g) = &e.corners[0];
            let p = rep.corner(*t, *k, g);
            match axis(&m) {
                Ok(ax) if classify(&m) == MapClass::Loxodromic => {
                    if p.chordal(ax.end) < DELTA_AXIS {
                        1
                    } else if p.chordal(ax.start) < DELTA_AXIS {
                        -1
                    } else {
                        0
                    }
                }
                _ => 0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    Nondegenerate,
    /// Framing image is one point.
    SinglePoint,
    /// Framing image is two points.
    TwoPoints,
    /// Endpoints of a boundary segment share a framing value.
    BoundarySegment,
}

fn fixes(m: &Mobius, p: BoundaryPoint) -> bool {
    m.apply(p).chordal(p) < DELTA_AXIS
}

pub fn classify_degenerate(rep: &FramedRepresentation, tri: &IdealTriangulation) -> Degeneracy {
    let values: Vec<BoundaryPoint> = rep.framing.iter().flat_map(|f| f.iter().copied()).collect();
    let mut distinct: Vec<BoundaryPoint> = vec![];
    for v in &values {
        if !distinct.iter().any(|d| d.chordal(*v) < DELTA_AXIS) {
            distinct.push(*v);
        }
    }
    if distinct.len() == 1 && rep.generators.iter().all(|g| fixes(g, distinct[0])) {
        return Degeneracy::SinglePoint;
    }
    if distinct.len() == 2 {
        let (p, q) = (distinct[0], distinct[1]);
        let preserved = rep.generators.iter().all(|g| {
            let (gp, gq) = (g.apply(p), g.apply(q));
            let in_set = |x: BoundaryPoint| x.chordal(p) < DELTA_AXIS || x.chordal(q) < DELTA_AXIS;
            in_set(gp) && in_set(gq)
        });
        if preserved {
            return Degeneracy::TwoPoints;
        }
    }
    for e in tri.boundaries() {
        let pts: Vec<BoundaryPoint> = e.corners.iter().map(|(t, k, g)| rep.corner(*t, *k, g)).collect();
        let m = pts.len();
        let next = rep.eval(&e.word).apply(pts[0]);
        for i in 0..m {
            let b = if i + 1 < m { pts[i + 1] } else { next };
            if pts[i].chordal(b) < DELTA_AXIS {
                return Degeneracy::BoundarySegment;
            }
        }
    }
    Degeneracy::Nondegenerate
}

/// Two semi-simple words with disjoint axis endpoints.
pub fn semisimple_pair(rep: &FramedRepresentation) -> Result<(Word, Word), RepError> {
    let ng = rep.generators.len();
    let mut cands: Vec<(Word, Geodesic)> = vec![];
    let consider = |w: Word, cands: &mut Vec<(Word, Geodesic)>| -> Option<(Word, Word)> {
        let m = rep.eval(&w);
        if !matches!(classify(&m), MapClass::Elliptic | MapClass::Loxodromic) {
            return None;
        }
        let ax = axis(&m).ok()?;
        for (w0, a0) in cands.iter() {
            if !ax.shares_endpoint(a0, DELTA_AXIS) {
                return Some((w0.clone(), w));
            }
        }
        if !cands.iter().any(|(_, a)| a.same_endpoints(&ax, DELTA_AXIS)) {
            cands.push((w, ax));
        }
        None
    };
    let letters: Vec<i32> = (1..=ng as i32).flat_map(|l| [l, -l]).collect();
    let mut frontier = vec![Word::identity()];
    let mut visited: HashSet<Word> = HashSet::new();
    for _len in 1..=WORD_SEARCH_LEN {
        let mut next = vec![];
        for w in &frontier {
            for &l in &letters {
                if w.0.last() == Some(&-l) {
                    continue;
                }
                let w2 = w.mul_letter(l);
                if !visited.insert(w2.clone()) {
                    continue;
                }
                if let Some(pair) = consider(w2.clone(), &mut cands) {
                    return Ok(pair);
                }
                next.push(w2);
            }
        }
        frontier = next;
    }
    for a in 0..ng {
        for d in 0..ng {
            if a == d {
                continue;
            }
            for n in 1..=POWER_SWEEP {
                for sa in [1i32, -1] {
                    let w = Word(vec![sa * (a as i32 + 1); n as usize]).mul(&Word::gen(d));
                    if let Some(pair) = consider(w, &mut cands) {
                        return Ok(pair);
                    }
                }
            }
        }
    }
    Err(RepError::SearchExhausted(WORD_SEARCH_LEN, POWER_SWEEP))
}

/// Bends a Fuchsian representation along every edge by the given angles.
pub fn bend(fuchsian: &FramedRepresentation, tri: &IdealTriangulation, theta: &[f64]) -> Result<FramedRepresentation, RepError> {
    if theta.len() != tri.edge_count() {
        return Err(RepError::CoordCount { got: theta.len(), want: tri.edge_count() });
    }
    let nt = tri.triangle_count();
    let mut b = vec![Mobius::identity(); nt];
    let edge_rot = |t: usize, i: usize, e: usize| -> Result<Mobius, RepError> {
        let f = fuchsian.framing[t];
        let ax = Geodesic::new(f[i], f[(i + 1) % 3])?;
        Ok(elliptic_about_axis(&ax, theta[e]))
    };
    for &(t, i) in &tri.tree_order {
        let e = tri.edge_of(t, i).unwrap();
        let SideGlue::Glued { tri: t2, .. } = tri.sides[t][i] else { unreachable!() };
        b[t2] = b[t] * edge_rot(t, i, e)?;
    }
    let mut generators = fuchsian.generators.clone();
    for &e in &tri.generator_edges {
        let (t, i) = tri.edges[e].a;
        let SideGlue::Glued { tri: t2, .. } = tri.sides[t][i] else { unreachable!() };
        let h = tri.edges[e].generator.unwrap();
        generators[h] = b[t] * edge_rot(t, i, e)? * fuchsian.generators[h] * b[t2].inverse();
    }
    let framing = (0..nt).map(|t| {
        let f = fuchsian.framing[t];
        [b[t].apply(f[0]), b[t].apply(f[1]), b[t].apply(f[2])]
    });
    Ok(FramedRepresentation { generators, framing: framing.collect() })
}

/// Chain of framing values at the marked points of a boundary end.
pub fn chain_from_framing(rep: &FramedRepresentation, tri: &IdealTriangulation, end: usize) -> Result<ChainSpec, RepError> {
    let e = tri.ends.get(end).ok_or(RepError::NoEnd(end))?;
    if e.kind != EndKind::Boundary {
        return Err(RepError::NotBoundary(end));
    }
    let deck = rep.eval(&e.word);
    let pts = e.corners.iter().map(|(t, k, g)| rep.corner(*t, *k, g)).collect();
    Ok(ChainSpec::new(deck, pts)?)
}

/// Convenience: develop and read off the holonomy.
pub fn rep_from_coords(tri: &IdealTriangulation, z: &FGCoords) -> Result<(DevelopedTriangulation, FramedRepresentation), RepError> {
    let dev = develop(tri, z)?;
    let rep = holonomy(&dev)?;
    Ok((dev, rep))
}

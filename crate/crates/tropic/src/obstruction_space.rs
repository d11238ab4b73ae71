//! The dual obstruction space `H`: segment decomposition of the loops,
//! covector assignments annihilating each segment, and the scalar
//! compatible-numbering solver.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::curve_model::{CurveError, EdgeKind, TropicalCurve};
use crate::exact_linalg::{annihilator_basis, kernel_basis, rank_int, IntVec, Rat, RatVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObstructionError {
    #[error("vertex {vertex} has valence {valence}, expected 3")]
    NotTrivalent { vertex: usize, valence: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A maximal path of loop edges between cut vertices, or a cut-free cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub bouquet: usize,
    pub edges: Vec<usize>,
    /// Vertices along the segment; `edges.len() + 1` entries, equal ends for cycles.
    pub path: Vec<usize>,
    /// `true` when the segment contains no cut vertex.
    pub closed: bool,
    /// Primitive directions spanning `U_m`.
    pub directions: Vec<IntVec>,
    /// Integral basis of `(U_m)^⊥`.
    pub perp: Vec<IntVec>,
}

impl Segment {
    pub fn start(&self) -> usize {
        self.path[0]
    }

    pub fn end(&self) -> usize {
        *self.path.last().unwrap()
    }

    pub fn span_rank(&self, n: usize) -> usize {
        rank_int(&self.directions, n)
    }

    /// Vertices strictly inside the segment (all of them for a closed segment).
    pub fn interior_vertices(&self) -> Vec<usize> {
        if self.closed {
            self.path[..self.path.len() - 1].to_vec()
        } else {
            self.path[1..self.path.len() - 1].to_vec()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentDecomposition {
    pub segments: Vec<Segment>,
    pub cut_vertices: BTreeSet<usize>,
    pub segment_of_edge: BTreeMap<usize, usize>,
}

impl SegmentDecomposition {
    /// The segment containing `v` in its interior, if any.
    pub fn segment_through(&self, v: usize) -> Option<usize> {
        self.segments.iter().position(|s| s.interior_vertices().contains(&v))
    }
}

pub fn segment_decomposition(curve: &TropicalCurve) -> SegmentDecomposition {
    let bd = curve.bouquet_decomposition();
    let loop_set: BTreeSet<usize> = bd.loop_edges.iter().copied().collect();
    let loop_flags = |v: usize| -> Vec<usize> {
        curve.incident[v].iter().map(|&f| curve.flags[f].edge).filter(|e| loop_set.contains(e)).collect()
    };
    let cut_vertices: BTreeSet<usize> = bd.loop_vertices.iter().copied().filter(|&v| loop_flags(v).len() >= 3).collect();
    let mut used = BTreeSet::new();
    let mut segments = Vec::new();
    let n = curve.n;
    let walk = |start: usize, first: usize, used: &mut BTreeSet<usize>| -> (Vec<usize>, Vec<usize>) {
        let mut path = vec![start];
        let mut edges = vec![];
        let (mut v, mut e) = (start, first);
        loop {
            used.insert(e);
            edges.push(e);
            let w = curve.edges[e].other(v).unwrap();
            path.push(w);
            if cut_vertices.contains(&w) || w == start {
                break;
            }
            match loop_flags(w).into_iter().find(|x| !used.contains(x)) {
                Some(next) => {
                    v = w;
                    e = next;
                }
                None => break,
            }
        }
        (edges, path)
    };
    let mut raw = Vec::new();
    for &c in &cut_vertices {
        for e in loop_flags(c) {
            if !used.contains(&e) {
                let (edges, path) = walk(c, e, &mut used);
                raw.push((edges, path, false));
            }
        }
    }
    for &v in &bd.loop_vertices {
        if let Some(e) = loop_flags(v).into_iter().find(|x| !used.contains(x)) {
            let (edges, path) = walk(v, e, &mut used);
            raw.push((edges, path, true));
        }
    }
    let mut segment_of_edge = BTreeMap::new();
    for (edges, path, closed) in raw {
        let mut directions: Vec<IntVec> = Vec::new();
        for &e in &edges {
            if let Some(d) = &curve.edges[e].direction {
                if !directions.contains(d) {
                    directions.push(d.clone());
                }
            }
        }
        let perp = annihilator_basis(&directions, n);
        let bouquet = bd.bouquet_of_vertex(path[0]).unwrap();
        for &e in &edges {
            segment_of_edge.insert(e, segments.len());
        }
        segments.push(Segment { bouquet, edges, path, closed, directions, perp });
    }
    SegmentDecomposition { segments, cut_vertices, segment_of_edge }
}

/// An element of `H`: one covector per segment.
pub type Assignment = Vec<RatVec>;

#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionBasis {
    pub n: usize,
    pub decomposition: SegmentDecomposition,
    /// Basis elements, each an integral covector per segment.
    pub basis: Vec<Vec<IntVec>>,
}

impl ObstructionBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn element(&self, j: usize) -> Assignment {
        self.basis[j].iter().map(|u| u.iter().map(|x| Rat::from_integer(x.clone())).collect()).collect()
    }

    /// `Σ_j coeffs[j]·𝔞_j`.
    pub fn combine(&self, coeffs: &[Rat]) -> Assignment {
        let segs = self.decomposition.segments.len();
        let mut out = vec![vec![Rat::zero(); self.n]; segs];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            for (m, u) in b.iter().enumerate() {
                for i in 0..self.n {
                    out[m][i] += c * Rat::from_integer(u[i].clone());
                }
            }
        }
        out
    }

    /// The constant covector of a genus-one (single closed segment) basis element.
    pub fn global_covector(&self, j: usize) -> Option<&IntVec> {
        (self.decomposition.segments.len() == 1).then(|| &self.basis[j][0])
    }
}

pub fn dual_obstruction_basis(curve: &TropicalCurve) -> Result<ObstructionBasis, ObstructionError> {
    curve.image_curve()?;
    let n = curve.n;
    let dec = segment_decomposition(curve);
    let mut offsets = Vec::new();
    let mut cols = 0;
    for s in &dec.segments {
        offsets.push(cols);
        cols += s.perp.len();
    }
    let mut rows: Vec<RatVec> = Vec::new();
    for &c in &dec.cut_vertices {
        for i in 0..n {
            let mut row = vec![Rat::zero(); cols];
            for (m, s) in dec.segments.iter().enumerate() {
                let sign = (s.start() == c) as i64 - (s.end() == c) as i64;
                if sign == 0 {
                    continue;
                }
                for (k, p) in s.perp.iter().enumerate() {
                    row[offsets[m] + k] += Rat::from_integer(&p[i] * sign);
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
    }
    let coeffs: Vec<IntVec> = if rows.is_empty() {
        (0..cols).map(|i| (0..cols).map(|j| if i == j { 1.into() } else { 0.into() }).collect()).collect()
    } else {
        kernel_basis(&rows, cols)
    };
    let basis = coeffs
        .iter()
        .map(|c| {
            dec.segments
                .iter()
                .enumerate()
                .map(|(m, s)| {
                    let mut u: IntVec = vec![0.into(); n];
                    for (k, p) in s.perp.iter().enumerate() {
                        for i in 0..n {
                            u[i] += &c[offsets[m] + k] * &p[i];
                        }
                    }
                    u
                })
                .collect()
        })
        .collect();
    Ok(ObstructionBasis { n, decomposition: dec, basis })
}

/// Flag values of an assignment: `+u` on the forward flag of each segment
/// edge, `−u` on the backward one, zero off the loops.
pub fn flag_values(curve: &TropicalCurve, dec: &SegmentDecomposition, a: &Assignment) -> Vec<RatVec> {
    let mut out = vec![vec![Rat::zero(); curve.n]; curve.flags.len()];
    for (m, s) in dec.segments.iter().enumerate() {
        for (k, &e) in s.edges.iter().enumerate() {
            let (from, to) = (s.path[k], s.path[k + 1]);
            let fl: Vec<usize> = (0..curve.flags.len()).filter(|&f| curve.flags[f].edge == e).collect();
            // A self-loop has two flags at the same vertex; assign them in order.
            let (ff, fb) = if from == to {
                (fl[0], fl[1])
            } else {
                let ff = *fl.iter().find(|&&f| curve.flags[f].vertex == from).unwrap();
                let fb = *fl.iter().find(|&&f| curve.flags[f].vertex == to).unwrap();
                (ff, fb)
            };
            out[ff] = a[m].clone();
            out[fb] = a[m].iter().map(|x| -x).collect();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    pub segments: Vec<usize>,
    /// Whether every vertex of the support has at least two support edges.
    pub closed_under_loops: bool,
}

pub fn support_of(curve: &TropicalCurve, dec: &SegmentDecomposition, a: &Assignment) -> SupportSet {
    let segments: Vec<usize> = (0..a.len()).filter(|&m| a[m].iter().any(|x| !x.is_zero())).collect();
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for &m in &segments {
        for &e in &dec.segments[m].edges {
            if let EdgeKind::Bounded { ends: (x, y) } = curve.edges[e].kind {
                *degree.entry(x).or_default() += 1;
                *degree.entry(y).or_default() += 1;
            }
        }
    }
    let closed_under_loops = degree.values().all(|&d| d >= 2);
    SupportSet { segments, closed_under_loops }
}

/// A graph given only by incidences: bounded edges `(a, Some(b))`, legs `(a, None)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, Option<usize>)>,
}

impl AbstractGraph {
    pub fn from_curve(curve: &TropicalCurve) -> Self {
        let edges = curve
            .edges
            .iter()
            .map(|e| match e.kind {
                EdgeKind::Bounded { ends: (a, b) } => (a, Some(b)),
                EdgeKind::Unbounded { end } => (end, None),
            })
            .collect();
        AbstractGraph { vertices: curve.vertices.len(), edges }
    }

    pub fn betti(&self) -> usize {
        let bounded = self.edges.iter().filter(|e| e.1.is_some()).count();
        (bounded + 1).saturating_sub(self.vertices)
    }
}

/// Dimension of the space of scalar flag numberings with zero legs, zero
/// vertex sums and zero edge sums.
pub fn compatible_numbering_dim(g: &AbstractGraph) -> Result<usize, ObstructionError> {
    let mut valence = vec![0usize; g.vertices];
    for &(a, b) in &g.edges {
        valence[a] += 1;
        if let Some(b) = b {
            valence[b] += 1;
        }
    }
    if let Some(v) = valence.iter().position(|&d| d != 3) {
        return Err(ObstructionError::NotTrivalent { vertex: v, valence: valence[v] });
    }
    // Unknowns: two flag values per bounded edge.
    let bounded: Vec<(usize, usize)> = g.edges.iter().filter_map(|&(a, b)| b.map(|b| (a, b))).collect();
    let cols = 2 * bounded.len();
    if cols == 0 {
        return Ok(0);
    }
    let mut rows = Vec::new();
    for (k, _) in bounded.iter().enumerate() {
        let mut row = vec![Rat::zero(); cols];
        row[2 * k] = Rat::from_integer(1.into());
        row[2 * k + 1] = Rat::from_integer(1.into());
        rows.push(row);
    }
    for v in 0..g.vertices {
        let mut row = vec![Rat::zero(); cols];
        for (k, &(a, b)) in bounded.iter().enumerate() {
            if a == v {
                row[2 * k] += Rat::from_integer(1.into());
            }
            if b == v {
                row[2 * k + 1] += Rat::from_integer(1.into());
            }
        }
        rows.push(row);
    }
    Ok(kernel_basis(&rows, cols).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::{validate_curve, RawCurve};

    fn square3() -> TropicalCurve {
        validate_curve(
            &RawCurve::new(3)
                .vertex("p", &[0, 0, 0])
                .vertex("q", &[1, 0, 0])
                .vertex("r", &[1, 1, 0])
                .vertex("s", &[0, 1, 0])
                .bounded("pq", "p", "q", 1)
                .bounded("qr", "q", "r", 1)
                .bounded("rs", "r", "s", 1)
                .bounded("sp", "s", "p", 1)
                .unbounded("ep", "p", &[-1, -1, 0], 1)
                .unbounded("eq", "q", &[1, -1, 0], 1)
                .unbounded("er", "r", &[1, 1, 0], 1)
                .unbounded("es", "s", &[-1, 1, 0], 1),
        )
        .unwrap()
    }

    #[test]
    fn planar_loop_in_space_has_normal_covector() {
        let c = square3();
        let h = dual_obstruction_basis(&c).unwrap();
        assert_eq!(h.dimension(), 1);
        let dec = &h.decomposition;
        assert_eq!(dec.segments.len(), 1);
        assert!(dec.segments[0].closed);
        let u = h.global_covector(0).unwrap();
        assert!(u[0].is_zero() && u[1].is_zero() && !u[2].is_zero());
        let s = support_of(&c, dec, &h.element(0));
        assert_eq!(s.segments, vec![0]);
        assert!(s.closed_under_loops);
        assert!(support_of(&c, dec, &h.combine(&[Rat::zero()])).segments.is_empty());
    }

    #[test]
    fn numbering_dims() {
        // Theta graph: two vertices, three parallel edges.
        let theta = AbstractGraph { vertices: 2, edges: vec![(0, Some(1)), (0, Some(1)), (0, Some(1))] };
        assert_eq!(compatible_numbering_dim(&theta), Ok(2));
        let tree = AbstractGraph { vertices: 2, edges: vec![(0, Some(1)), (0, None), (0, None), (1, None), (1, None)] };
        assert_eq!(compatible_numbering_dim(&tree), Ok(0));
        let lollipop = AbstractGraph { vertices: 1, edges: vec![(0, Some(0)), (0, None)] };
        assert_eq!(compatible_numbering_dim(&lollipop), Ok(1));
        let bad = AbstractGraph { vertices: 1, edges: vec![(0, None), (0, None)] };
        assert!(matches!(compatible_numbering_dim(&bad), Err(ObstructionError::NotTrivalent { .. })));
    }

    #[test]
    fn flag_values_cancel_along_loop() {
        let c = square3();
        let h = dual_obstruction_basis(&c).unwrap();
        let fv = flag_values(&c, &h.decomposition, &h.element(0));
        for v in 0..c.vertices.len() {
            let mut s = vec![Rat::zero(); 3];
            for &f in &c.incident[v] {
                for i in 0..3 {
                    s[i] += &fv[f][i];
                }
            }
            assert!(s.iter().all(|x| x.is_zero()));
        }
    }
}

//! Affine incidence constraints, intersection multiplicities and the lattice
//! index of the (obstruction-corrected) evaluation map.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::curve_model::{CurveError, EdgeKind, ImageCurve, TropicalCurve};
use crate::exact_linalg::{
    annihilator_basis, dot_int, dot_mixed, dual_functional, fmt_rat, in_span_int, integer_kernel, lattice_index, rank_int,
    saturation, smith_invariants, Index, Int, IntVec, LatticeMap, LinalgError, Rat, RatVec,
};
use crate::kuranishi_leading::{leading_form_system, BaseCoefficients, KuranishiError};
use crate::moduli_space::deformation_space;
use crate::obstruction_space::{dual_obstruction_basis, ObstructionError};
use crate::well_spacedness::{smoothability_verdict, Verdict, WellSpacedError};

#[derive(Debug, Error)]
pub enum EnumerationError {
    #[error("{constraints} constraints for {markings} marked edges")]
    CountMismatch { constraints: usize, markings: usize },
    #[error("constraint {index}: {reason}")]
    BadConstraint { index: usize, reason: String },
    #[error("direction of marked edge {edge} lies in the constraint's direction space")]
    DegenerateDirection { edge: String },
    #[error("marked edge {edge} is contracted")]
    ContractedMarking { edge: String },
    #[error("marked edge {edge} does not meet its constraint")]
    Unmatched { edge: String },
    #[error("{count} tied minimal vertices for one basis element of H; need exactly two")]
    NotGeneric { count: usize },
    #[error("index map has rank {rank} on {cols} columns (kernel vector {witness:?})")]
    RankMismatch { rank: usize, cols: usize, witness: Vec<String> },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
    #[error(transparent)]
    Kuranishi(#[from] KuranishiError),
    #[error(transparent)]
    WellSpaced(#[from] WellSpacedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `A = point + span_ℝ(span)`, an affine subspace defined over ℚ.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraint {
    pub point: RatVec,
    pub span: Vec<IntVec>,
}

impl AffineConstraint {
    pub fn point(p: RatVec) -> Self {
        AffineConstraint { point: p, span: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        rank_int(&self.span, self.point.len())
    }

    /// `d` with `dim A = n − d − 1`.
    pub fn codimension(&self) -> i64 {
        self.point.len() as i64 - self.dim() as i64 - 1
    }

    /// `L(A) ∩ ℤⁿ`.
    pub fn direction_lattice(&self) -> Vec<IntVec> {
        saturation(&self.span, self.point.len())
    }

    pub fn transform(&self, t_mat: &[IntVec], shift: &[Rat]) -> Self {
        let n = self.point.len();
        let apply_int = |v: &[Int]| -> IntVec { (0..n).map(|i| dot_int(&t_mat[i], v)).collect() };
        let point = (0..n).map(|i| dot_mixed(&self.point, &t_mat[i]) + &shift[i]).collect();
        AffineConstraint { point, span: self.span.iter().map(|v| apply_int(v)).collect() }
    }
}

/// Constraints aligned with the curve's marking list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub constraints: Vec<AffineConstraint>,
}

impl ConstraintSet {
    pub fn codimensions(&self) -> Vec<i64> {
        self.constraints.iter().map(AffineConstraint::codimension).collect()
    }

    pub fn total_codimension(&self) -> i64 {
        self.codimensions().iter().sum()
    }

    pub fn transform(&self, t_mat: &[IntVec], shift: &[Rat]) -> Self {
        ConstraintSet { constraints: self.constraints.iter().map(|c| c.transform(t_mat, shift)).collect() }
    }

    fn check(&self, curve: &TropicalCurve) -> Result<(), EnumerationError> {
        if self.constraints.len() != curve.markings.len() {
            return Err(EnumerationError::CountMismatch { constraints: self.constraints.len(), markings: curve.markings.len() });
        }
        for (index, c) in self.constraints.iter().enumerate() {
            if c.point.len() != curve.n || c.span.iter().any(|v| v.len() != curve.n) {
                return Err(EnumerationError::BadConstraint { index, reason: format!("expected rank {}", curve.n) });
            }
            if c.codimension() < 0 {
                return Err(EnumerationError::BadConstraint { index, reason: "constraint fills the ambient space".into() });
            }
        }
        Ok(())
    }
}

/// Dimension the constraints have to cut down: the deformation space minus
/// the obstruction.
pub fn required_codimension(curve: &TropicalCurve) -> Result<i64, EnumerationError> {
    let a = dual_obstruction_basis(curve)?.dimension();
    Ok(deformation_space(curve).dimension() as i64 - a as i64)
}

/// Where `p + s·u`, `s ∈ [0, len]` (`len = None` for a ray), meets `A`.
pub fn segment_meets(p: &[Rat], u: Option<&IntVec>, len: Option<&Rat>, c: &AffineConstraint) -> Option<RatVec> {
    let n = p.len();
    let diff: RatVec = (0..n).map(|i| &p[i] - &c.point[i]).collect();
    let ann = annihilator_basis(&c.span, n);
    let Some(u) = u else {
        return ann.iter().all(|f| dot_mixed(&diff, f).is_zero()).then(|| p.to_vec());
    };
    let mut s: Option<Rat> = None;
    for f in &ann {
        let a = dot_mixed(&diff, f);
        let b = Rat::from_integer(dot_int(f, u));
        if b.is_zero() {
            if !a.is_zero() {
                return None;
            }
            continue;
        }
        let t = -a / b;
        match &s {
            Some(prev) if *prev != t => return None,
            _ => s = Some(t),
        }
    }
    // Parallel and inside `A`: the base point witnesses the intersection.
    let s = s.unwrap_or_else(Rat::zero);
    if s.is_negative() || len.is_some_and(|l| &s > l) {
        return None;
    }
    Some((0..n).map(|i| &p[i] + &s * Rat::from_integer(u[i].clone())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub matched: bool,
    /// Intersection point per marking.
    pub points: Vec<Option<RatVec>>,
}

pub fn match_constraints(curve: &TropicalCurve, set: &ConstraintSet) -> Result<MatchReport, EnumerationError> {
    set.check(curve)?;
    let points: Vec<Option<RatVec>> = curve
        .markings
        .iter()
        .zip(&set.constraints)
        .map(|(&m, c)| {
            let e = &curve.edges[m];
            let start = e.endpoints()[0];
            segment_meets(&curve.vertices[start].pos, e.direction.as_ref(), e.length.as_ref(), c)
        })
        .collect();
    Ok(MatchReport { matched: points.iter().all(Option::is_some), points })
}

/// `w(E_i) · [(ℚu + L(A_i)) ∩ ℤⁿ : ℤu + L(A_i) ∩ ℤⁿ]`.
pub fn delta_factor(curve: &TropicalCurve, i: usize, c: &AffineConstraint) -> Result<Int, EnumerationError> {
    let e = &curve.edges[curve.markings[i]];
    let Some(u) = &e.direction else {
        return Err(EnumerationError::ContractedMarking { edge: e.id.clone() });
    };
    let n = curve.n;
    let lattice = c.direction_lattice();
    if in_span_int(&lattice, u, n) {
        return Err(EnumerationError::DegenerateDirection { edge: e.id.clone() });
    }
    let mut sub = vec![u.clone()];
    sub.extend(lattice);
    let ambient = saturation(&sub, n);
    match lattice_index(&sub, &ambient, n)? {
        Index::Finite(k) => Ok(k * BigInt::from(e.weight)),
        Index::Infinite => unreachable!("a generating set spans its saturation rationally"),
    }
}

/// The assembled integral map and where its rows come from.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub matrix: LatticeMap,
    /// Row labels: `edge:<id>`, `constraint:<i>` or `tie:<j>`.
    pub row_labels: Vec<String>,
    /// Vertex id for each block of `n` columns.
    pub column_vertices: Vec<String>,
    /// Tied minimal vertex pairs (as vertex-id paths) behind the `tie` rows.
    pub ties: Vec<(Vec<String>, Vec<String>)>,
}

struct Assembly<'a> {
    curve: &'a TropicalCurve,
    image: ImageCurve,
    rows: Vec<IntVec>,
    labels: Vec<String>,
}

impl<'a> Assembly<'a> {
    fn cols(&self) -> usize {
        self.image.vertices.len() * self.curve.n
    }

    fn push(&mut self, terms: &[(usize, &[Int], i64)], label: String) {
        let n = self.curve.n;
        let mut row = vec![Int::zero(); self.cols()];
        for &(block, f, sign) in terms {
            for i in 0..n {
                row[block * n + i] += &f[i] * sign;
            }
        }
        self.rows.push(row);
        self.labels.push(label);
    }

    /// `Σ φ_E(h(q) − h(p)) / w_E` along an image-vertex path, scaled to be integral.
    fn path_functional(&self, path: &[usize]) -> RatVec {
        let n = self.curve.n;
        let mut out = vec![Rat::zero(); self.cols()];
        for w in path.windows(2) {
            let (e, _) = self.image.neighbours(w[0]).into_iter().find(|&(_, x)| x == w[1]).expect("path edge");
            let edge = &self.image.edges[e];
            let phi = dual_functional(&edge.direction_from(w[0]));
            let weight = Rat::from_integer((*edge.weights.first().unwrap()).into());
            for i in 0..n {
                let c = Rat::from_integer(phi[i].clone()) / &weight;
                out[w[1] * n + i] += &c;
                out[w[0] * n + i] -= &c;
            }
        }
        out
    }
}

fn integral_multiple(v: &[Rat]) -> IntVec {
    let l = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
    v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect()
}

/// Builds the evaluation map on the image graph: `n − 1` rows per bounded
/// image edge, `N/((ℚu + L) ∩ N)` rows per constraint at the start vertex of
/// its marked edge, and one path-length-difference row per basis element of
/// `H` whose minimum is attained at two vertices.
pub fn index_map(curve: &TropicalCurve, set: &ConstraintSet, seed: u64) -> Result<IndexMap, EnumerationError> {
    set.check(curve)?;
    let image = curve.image_curve()?;
    let n = curve.n;
    let vid = |image: &ImageCurve, v: usize| curve.vertices[image.vertices[v].members[0]].id.clone();
    let column_vertices: Vec<String> = (0..image.vertices.len()).map(|v| vid(&image, v)).collect();
    let mut asm = Assembly { curve, image, rows: Vec::new(), labels: Vec::new() };

    for e in 0..asm.image.edges.len() {
        let edge = &asm.image.edges[e];
        let Some(end) = edge.end else { continue };
        let start = edge.start;
        let id = curve.edges[edge.members[0]].id.clone();
        for f in annihilator_basis(std::slice::from_ref(&edge.direction), n) {
            asm.push(&[(end, &f, 1), (start, &f, -1)], format!("edge:{id}"));
        }
    }

    for (i, (&m, c)) in curve.markings.iter().zip(&set.constraints).enumerate() {
        let e = &curve.edges[m];
        let Some(u) = e.direction.clone() else {
            return Err(EnumerationError::ContractedMarking { edge: e.id.clone() });
        };
        let lattice = c.direction_lattice();
        if in_span_int(&lattice, &u, n) {
            return Err(EnumerationError::DegenerateDirection { edge: e.id.clone() });
        }
        let start = asm.image.vertex_of[e.endpoints()[0]];
        let mut gens = vec![u];
        gens.extend(lattice);
        for f in annihilator_basis(&gens, n) {
            asm.push(&[(start, &f, 1)], format!("constraint:{i}"));
        }
    }

    let mut ties = Vec::new();
    if dual_obstruction_basis(curve)?.dimension() > 0 {
        let system = leading_form_system(curve, &BaseCoefficients::new(), seed)?;
        for (j, form) in system.forms.iter().enumerate() {
            let live: Vec<usize> = (0..form.pairings.len()).filter(|&k| !form.pairings[k].is_zero()).collect();
            match live.len() {
                // Pairs trivially, or a four-valent vertex absorbs it.
                0 | 1 => continue,
                2 => {}
                count => return Err(EnumerationError::NotGeneric { count }),
            }
            let (p, q) = (&form.paths[live[0]], &form.paths[live[1]]);
            let diff: RatVec = asm.path_functional(p).iter().zip(&asm.path_functional(q)).map(|(x, y)| x - y).collect();
            asm.rows.push(integral_multiple(&diff));
            asm.labels.push(format!("tie:{j}"));
            ties.push((p.iter().map(|&v| vid(&asm.image, v)).collect(), q.iter().map(|&v| vid(&asm.image, v)).collect()));
        }
    }

    let cols = asm.cols();
    Ok(IndexMap { matrix: LatticeMap::new(cols, asm.rows), row_labels: asm.labels, column_vertices, ties })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityReport {
    /// Index of the image of `Map(Γ^[0], N)` in its saturation.
    pub lattice_index: Int,
    pub deltas: Vec<Int>,
    /// `𝔇 · ∏ δ_i`.
    pub d_tilde: Int,
    pub total_marked_weight: Int,
    /// `w(Γ, E, h) · 𝔇̃`.
    pub contribution: Int,
    pub smith: Vec<Int>,
    pub rows: usize,
    pub cols: usize,
    pub ties: Vec<(Vec<String>, Vec<String>)>,
    pub intersections: Vec<RatVec>,
}

/// Lattice index of an integral map of full column rank: the product of its
/// elementary divisors, which is `|det|` when the map is square.
pub fn map_index(m: &LatticeMap) -> Result<(Int, Vec<Int>), EnumerationError> {
    let smith = smith_invariants(m);
    if smith.len() < m.cols {
        let witness = integer_kernel(&m.entries, m.cols).into_iter().next().unwrap_or_default();
        return Err(EnumerationError::RankMismatch {
            rank: smith.len(),
            cols: m.cols,
            witness: witness.iter().map(|x| x.to_string()).collect(),
        });
    }
    Ok((smith.iter().product(), smith))
}

pub fn lattice_multiplicity(curve: &TropicalCurve, set: &ConstraintSet, seed: u64) -> Result<MultiplicityReport, EnumerationError> {
    let matching = match_constraints(curve, set)?;
    if let Some(i) = matching.points.iter().position(Option::is_none) {
        return Err(EnumerationError::Unmatched { edge: curve.edges[curve.markings[i]].id.clone() });
    }
    let map = index_map(curve, set, seed)?;
    let (index, smith) = map_index(&map.matrix)?;
    let deltas = (0..set.constraints.len())
        .map(|i| delta_factor(curve, i, &set.constraints[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let d_tilde = &index * deltas.iter().product::<Int>();
    let total_marked_weight = curve.weights_summary().total_marked_weight;
    Ok(MultiplicityReport {
        contribution: &total_marked_weight * &d_tilde,
        lattice_index: index,
        deltas,
        d_tilde,
        total_marked_weight,
        smith,
        rows: map.matrix.rows,
        cols: map.matrix.cols,
        ties: map.ties,
        intersections: matching.points.into_iter().flatten().collect(),
    })
}

/// The unobstructed index computed straight from the curve's own vertices
/// and bounded edges (no image merging, no divalent vertices): `|det|` of
/// the square evaluation map, or `None` if it is not square.
pub fn direct_index(curve: &TropicalCurve, set: &ConstraintSet) -> Result<Option<Int>, EnumerationError> {
    set.check(curve)?;
    let n = curve.n;
    let cols = n * curve.vertices.len();
    let mut rows = Vec::new();
    for e in &curve.edges {
        let EdgeKind::Bounded { ends: (a, b) } = e.kind else { continue };
        if a == b {
            continue;
        }
        let functionals = match &e.direction {
            Some(u) => annihilator_basis(std::slice::from_ref(u), n),
            None => crate::curve_model::identity(n),
        };
        for f in functionals {
            let mut row = vec![Int::zero(); cols];
            for i in 0..n {
                row[b * n + i] += &f[i];
                row[a * n + i] -= &f[i];
            }
            rows.push(row);
        }
    }
    for (&m, c) in curve.markings.iter().zip(&set.constraints) {
        let e = &curve.edges[m];
        if e.is_bounded() {
            return Ok(None);
        }
        let mut gens = vec![e.direction.clone().ok_or_else(|| EnumerationError::ContractedMarking { edge: e.id.clone() })?];
        gens.extend(c.direction_lattice());
        let v = e.endpoints()[0];
        for f in annihilator_basis(&gens, n) {
            let mut row = vec![Int::zero(); cols];
            for i in 0..n {
                row[v * n + i] += &f[i];
            }
            rows.push(row);
        }
    }
    if rows.len() != cols {
        return Ok(None);
    }
    Ok(Some(crate::exact_linalg::det(&rows).abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountEntry {
    pub verdict: &'static str,
    pub contribution: Int,
    pub multiplicity: Option<MultiplicityReport>,
    /// Why the curve contributes nothing, when it does not.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub total: Int,
    pub entries: Vec<CountEntry>,
}

/// `Σ w(Γ, E, h) · 𝔇̃` over the supplied curves. Curves that are not
/// smoothable, miss a constraint or have a degenerate index map contribute
/// zero and say why.
pub fn tropical_count(curves: &[TropicalCurve], set: &ConstraintSet, seed: u64) -> CountReport {
    let mut total = Int::zero();
    let mut entries = Vec::new();
    for curve in curves {
        let verdict = match smoothability_verdict(curve, seed) {
            Ok(v) => v,
            Err(e) => {
                entries.push(CountEntry { verdict: "ERROR", contribution: Int::zero(), multiplicity: None, excluded: Some(e.to_string()) });
                continue;
            }
        };
        let label = verdict.verdict.label();
        if verdict.verdict != Verdict::Smoothable {
            entries.push(CountEntry { verdict: label, contribution: Int::zero(), multiplicity: None, excluded: Some(verdict.reason) });
            continue;
        }
        match lattice_multiplicity(curve, set, seed) {
            Ok(m) => {
                total += &m.contribution;
                entries.push(CountEntry { verdict: label, contribution: m.contribution.clone(), multiplicity: Some(m), excluded: None });
            }
            Err(e) => entries.push(CountEntry { verdict: label, contribution: Int::zero(), multiplicity: None, excluded: Some(e.to_string()) }),
        }
    }
    CountReport { total, entries }
}

/// Readable form of a witness point.
pub fn fmt_point(p: &[Rat]) -> Vec<String> {
    p.iter().map(fmt_rat).collect()
}

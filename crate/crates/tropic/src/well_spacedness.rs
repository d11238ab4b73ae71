//! Path lengths, the loop-plane component Γ′, stratified well-spacedness
//! tests, the vanishing-Kuranishi criterion and the smoothability verdict.
//!
//! "For every hyperplane" / "for every dual vector" is made finite by
//! stratifying the dual obstruction space: inside a flat of `H`, the
//! relevant combinatorics (which segments carry a nonzero covector and which
//! tree edges each covector annihilates) is constant on a dense open subset,
//! so one pseudo-generic point decides the flat; flats where an extra edge
//! becomes annihilated, or a covector vanishes, are visited recursively.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::curve_model::{FourValentClass, ImageCurve, TropicalCurve};
use crate::exact_linalg::{
    dot_int, dot_mixed, fmt_rat, kernel_basis_rat, rank_int, rref, saturation, IntVec, Rat, RatVec,
};
use crate::obstruction_space::{dual_obstruction_basis, ObstructionBasis, ObstructionError, SegmentDecomposition};

pub const DEFAULT_SEED: u64 = 0x7e_11_5eed;
const REDRAW_LIMIT: u64 = 64;
const STRATA_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellSpacedError {
    #[error("consecutive vertices {0} and {1} are not joined by an image edge")]
    NotAPath(usize, usize),
    #[error("well-spacedness is not defined here: {0}")]
    Scope(String),
    #[error("no generic point found in a stratum after {0} draws")]
    GenericPointNotFound(u64),
    #[error("stratification exceeded {0} strata")]
    TooManyStrata(usize),
    #[error(transparent)]
    Obstruction(#[from] ObstructionError),
}

/// A path length, with `Infinite` ordered above every rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distance {
    Finite(Rat),
    Infinite,
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a.cmp(b),
            (Distance::Finite(_), Distance::Infinite) => Ordering::Less,
            (Distance::Infinite, Distance::Finite(_)) => Ordering::Greater,
            (Distance::Infinite, Distance::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(r) => write!(f, "{}", fmt_rat(r)),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

/// Normalized length `Σ r/w` along a path of image vertices, and whether
/// every edge's integral length is a multiple of its weight.
pub fn path_length(image: &ImageCurve, path: &[usize]) -> Result<(Rat, bool), WellSpacedError> {
    let mut total = Rat::zero();
    let mut integral = true;
    for w in path.windows(2) {
        let e = image
            .neighbours(w[0])
            .into_iter()
            .find(|&(_, v)| v == w[1])
            .map(|(e, _)| e)
            .ok_or(WellSpacedError::NotAPath(w[0], w[1]))?;
        let l = image.normalized_length(e).expect("bounded edge");
        integral &= l.is_integer();
        total += l;
    }
    Ok((total, integral))
}

/// Distance from every image vertex to the loops through the tree part.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLengthTable {
    pub distance: BTreeMap<usize, Rat>,
    /// Normalized length `r/w` of each bounded non-loop image edge.
    pub edge_lengths: BTreeMap<usize, Rat>,
    pub integral: bool,
}

fn loop_image_sets(curve: &TropicalCurve, image: &ImageCurve) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let bd = curve.bouquet_decomposition();
    let verts = bd.loop_vertices.iter().map(|&v| image.vertex_of[v]).collect();
    let edges = bd.loop_edges.iter().filter_map(|&e| image.edge_of[e]).collect();
    (verts, edges)
}

pub fn path_length_table(curve: &TropicalCurve, image: &ImageCurve) -> PathLengthTable {
    let (lv, le) = loop_image_sets(curve, image);
    let mut distance: BTreeMap<usize, Rat> = lv.iter().map(|&v| (v, Rat::zero())).collect();
    let mut edge_lengths = BTreeMap::new();
    let mut integral = true;
    let mut queue: VecDeque<usize> = lv.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for (e, w) in image.neighbours(v) {
            if le.contains(&e) || distance.contains_key(&w) {
                continue;
            }
            let l = image.normalized_length(e).unwrap();
            integral &= l.is_integer();
            edge_lengths.insert(e, l.clone());
            distance.insert(w, &distance[&v] + l);
            queue.push_back(w);
        }
    }
    PathLengthTable { distance, edge_lengths, integral }
}

/// The affine span `A` of the loops and the component Γ′ of `h(Γ) ∩ A`
/// containing them.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaPrime {
    pub base_point: RatVec,
    /// Saturated basis of the direction lattice of `A`.
    pub directions: Vec<IntVec>,
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<usize>,
    pub one_valent: Vec<usize>,
}

impl GammaPrime {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }
}

pub fn gamma_prime(curve: &TropicalCurve, image: &ImageCurve) -> GammaPrime {
    let (lv, le) = loop_image_sets(curve, image);
    let n = curve.n;
    let dirs: Vec<IntVec> = le.iter().map(|&e| image.edges[e].direction.clone()).collect();
    let directions = saturation(&dirs, n);
    let base_point = lv.iter().next().map(|&v| image.vertices[v].pos.clone()).unwrap_or_else(|| vec![Rat::zero(); n]);
    let inside = |d: &IntVec| crate::exact_linalg::in_span_int(&directions, d, n);
    let mut vertices: BTreeSet<usize> = lv.clone();
    let mut edges: BTreeSet<usize> = BTreeSet::new();
    let mut queue: VecDeque<usize> = lv.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &e in &image.incident[v] {
            if !inside(&image.edges[e].direction) || !edges.insert(e) {
                continue;
            }
            if let Some(w) = image.edges[e].other(v) {
                if vertices.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    let one_valent = vertices
        .iter()
        .copied()
        .filter(|&v| image.incident[v].iter().filter(|e| edges.contains(e)).count() == 1)
        .collect();
    GammaPrime { base_point, directions, vertices, edges, one_valent }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    TwoMinima,
    FourValentException,
    NoCandidates,
    Fail,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::TwoMinima => "TWO_MINIMA",
            Branch::FourValentException => "FOUR_VALENT_EXCEPTION",
            Branch::NoCandidates => "NO_FINITE_CANDIDATE",
            Branch::Fail => "FAIL",
        }
    }

    pub fn passes(self) -> bool {
        self != Branch::Fail
    }
}

/// A one-valent vertex of a sliced tree (or `None` when a tree has none).
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub segment: usize,
    /// Index into the complement components of the bouquet decomposition.
    pub component: usize,
    pub vertex: Option<usize>,
    pub distance: Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellSpacedWitness {
    /// Linear constraints on the coefficients (in the basis of `H`) cutting the stratum.
    pub constraints: Vec<RatVec>,
    /// Representative covector per segment at the stratum's generic point.
    pub covectors: Vec<RatVec>,
    /// Image edges annihilated by the representative, per component.
    pub sliced_edges: BTreeMap<usize, Vec<usize>>,
    pub candidates: Vec<Candidate>,
    pub minimum: Distance,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counting {
    /// Every one-valent vertex is a candidate.
    PerVertex,
    /// Each sliced tree contributes its nearest one-valent vertex (∞ if none).
    PerComponent,
}

struct Context<'a> {
    curve: &'a TropicalCurve,
    image: ImageCurve,
    h: ObstructionBasis,
    /// For each complement component: segments meeting its closure, its image edges, attachment image vertex.
    comps: Vec<(Vec<usize>, BTreeSet<usize>, usize)>,
    loop_span: Vec<IntVec>,
}

impl<'a> Context<'a> {
    fn new(curve: &'a TropicalCurve) -> Result<Self, WellSpacedError> {
        let h = dual_obstruction_basis(curve)?;
        let image = curve.build_image();
        let bd = curve.bouquet_decomposition();
        let dec = &h.decomposition;
        let mut comps = Vec::new();
        for c in &bd.complement {
            let segs = segments_meeting(dec, &c.attachments);
            let edges = c.edges.iter().filter_map(|&e| image.edge_of[e]).collect();
            let att = c.attachments.first().map(|&a| image.vertex_of[a]).unwrap_or(usize::MAX);
            comps.push((segs, edges, att));
        }
        let loop_dirs: Vec<IntVec> = bd.loop_edges.iter().filter_map(|&e| curve.edges[e].direction.clone()).collect();
        let loop_span = saturation(&loop_dirs, curve.n);
        Ok(Context { curve, image, h, comps, loop_span })
    }

    fn covectors(&self, coeffs: &[Rat]) -> Vec<RatVec> {
        self.h.combine(coeffs)
    }

    /// Grows the sliced tree of component `k` from its attachment through image
    /// edges annihilated by `u`. Returns (edges, distances, boundary edges).
    fn slice(&self, k: usize, u: &[Rat]) -> (BTreeSet<usize>, BTreeMap<usize, Rat>, Vec<usize>) {
        let (edges, dist, boundary, _) = self.slice_tree(k, u);
        (edges, dist, boundary)
    }

    /// As [`Context::slice`], also returning the BFS parent of each reached vertex.
    fn slice_tree(&self, k: usize, u: &[Rat]) -> (BTreeSet<usize>, BTreeMap<usize, Rat>, Vec<usize>, BTreeMap<usize, usize>) {
        let (_, allowed, att) = &self.comps[k];
        let mut edges = BTreeSet::new();
        let mut dist = BTreeMap::from([(*att, Rat::zero())]);
        let mut boundary = BTreeSet::new();
        let mut parent = BTreeMap::new();
        let mut queue = VecDeque::from([*att]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.image.incident[v] {
                if !allowed.contains(&e) {
                    continue;
                }
                if !dot_mixed(u, &self.image.edges[e].direction).is_zero() {
                    boundary.insert(e);
                    continue;
                }
                if !edges.insert(e) {
                    continue;
                }
                if let Some(w) = self.image.edges[e].other(v) {
                    if !dist.contains_key(&w) {
                        let d = &dist[&v] + self.image.normalized_length(e).unwrap();
                        dist.insert(w, d);
                        parent.insert(w, v);
                        queue.push_back(w);
                    }
                }
            }
        }
        (edges, dist, boundary.into_iter().collect(), parent)
    }

    fn leaves(&self, k: usize, edges: &BTreeSet<usize>, dist: &BTreeMap<usize, Rat>) -> Vec<(usize, Rat)> {
        let att = self.comps[k].2;
        dist.iter()
            .filter(|(&v, _)| v != att)
            .filter(|(&v, _)| self.image.incident[v].iter().filter(|e| edges.contains(e)).count() == 1)
            .map(|(&v, d)| (v, d.clone()))
            .collect()
    }

    /// Is the unique minimum at `v` one of the admissible four-valent local models?
    fn exceptional(&self, v: usize, sliced: &BTreeSet<usize>) -> bool {
        match self.image.classify_high_valence(v) {
            FourValentClass::MergedEdge => true,
            FourValentClass::FourDistinct => {
                let off: Vec<IntVec> = self.image.incident[v]
                    .iter()
                    .filter(|e| !sliced.contains(e))
                    .map(|&e| self.image.edges[e].direction_from(v))
                    .collect();
                if off.len() != 3 {
                    return false;
                }
                let mut gens = self.loop_span.clone();
                gens.extend(off);
                rank_int(&gens, self.curve.n) == self.loop_span.len() + 1
            }
            FourValentClass::Other => false,
        }
    }

    fn evaluate(&self, constraints: Vec<RatVec>, coeffs: &[Rat], counting: Counting) -> (WellSpacedWitness, Vec<RatVec>) {
        let covectors = self.covectors(coeffs);
        let mut candidates = Vec::new();
        let mut sliced_edges = BTreeMap::new();
        let mut refinements = Vec::new();
        let a = self.h.dimension();
        let mut exceptional = BTreeMap::new();
        for (m, u) in covectors.iter().enumerate() {
            if u.iter().all(|x| x.is_zero()) {
                continue;
            }
            // Refinement: this covector vanishes.
            for i in 0..self.curve.n {
                let row: RatVec = (0..a).map(|j| Rat::from_integer(self.h.basis[j][m][i].clone())).collect();
                refinements.push(row);
            }
            for k in 0..self.comps.len() {
                if !self.comps[k].0.contains(&m) {
                    continue;
                }
                let (edges, dist, boundary) = self.slice(k, u);
                for e in boundary {
                    let d = &self.image.edges[e].direction;
                    let row: RatVec = (0..a).map(|j| Rat::from_integer(dot_int(&self.h.basis[j][m], d))).collect();
                    refinements.push(row);
                }
                let leaves = self.leaves(k, &edges, &dist);
                for (v, _) in &leaves {
                    exceptional.insert(*v, self.exceptional(*v, &edges));
                }
                sliced_edges.insert(k, edges.iter().copied().collect());
                match counting {
                    Counting::PerVertex => {
                        for (v, d) in leaves {
                            candidates.push(Candidate { segment: m, component: k, vertex: Some(v), distance: Distance::Finite(d) });
                        }
                    }
                    Counting::PerComponent => {
                        let best = leaves.into_iter().min_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
                        candidates.push(match best {
                            Some((v, d)) => Candidate { segment: m, component: k, vertex: Some(v), distance: Distance::Finite(d) },
                            None => Candidate { segment: m, component: k, vertex: None, distance: Distance::Infinite },
                        });
                    }
                }
            }
        }
        let minimum = candidates.iter().map(|c| c.distance.clone()).min().unwrap_or(Distance::Infinite);
        let at_min: Vec<&Candidate> = candidates.iter().filter(|c| c.distance == minimum).collect();
        let branch = if minimum == Distance::Infinite {
            Branch::NoCandidates
        } else if at_min.len() >= 2 {
            Branch::TwoMinima
        } else if exceptional[&at_min[0].vertex.unwrap()] {
            Branch::FourValentException
        } else {
            Branch::Fail
        };
        let witness = WellSpacedWitness { constraints, covectors, sliced_edges, candidates, minimum, branch };
        (witness, refinements)
    }
}

/// A one-valent vertex of a sliced tree, with the data needed to evaluate its
/// leading obstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedLeaf {
    pub segment: usize,
    pub component: usize,
    /// Image vertices from the leaf to the attachment vertex.
    pub path: Vec<usize>,
    pub distance: Rat,
    /// Directions of the edges at the leaf leaving the sliced tree.
    pub off_directions: Vec<IntVec>,
    pub merged_edge: bool,
}

/// Slices the complement trees by arbitrary elements of `H`.
pub struct Slicer<'a> {
    ctx: Context<'a>,
}

impl<'a> Slicer<'a> {
    pub fn new(curve: &'a TropicalCurve) -> Result<Self, WellSpacedError> {
        Ok(Slicer { ctx: Context::new(curve)? })
    }

    pub fn basis(&self) -> &ObstructionBasis {
        &self.ctx.h
    }

    pub fn image(&self) -> &ImageCurve {
        &self.ctx.image
    }

    pub fn loop_span(&self) -> &[IntVec] {
        &self.ctx.loop_span
    }

    /// Leaves of every sliced tree for the element `Σ coeffs[j]·𝔞_j`.
    pub fn leaves(&self, coeffs: &[Rat]) -> Vec<SlicedLeaf> {
        let mut out = Vec::new();
        for (m, u) in self.ctx.covectors(coeffs).iter().enumerate() {
            if u.iter().all(|x| x.is_zero()) {
                continue;
            }
            for k in 0..self.ctx.comps.len() {
                if !self.ctx.comps[k].0.contains(&m) {
                    continue;
                }
                let (edges, dist, _, parent) = self.ctx.slice_tree(k, u);
                for (v, d) in self.ctx.leaves(k, &edges, &dist) {
                    let mut path = vec![v];
                    while let Some(&p) = parent.get(path.last().unwrap()) {
                        path.push(p);
                    }
                    let off_directions = self.ctx.image.incident[v]
                        .iter()
                        .filter(|e| !edges.contains(e))
                        .map(|&e| self.ctx.image.edges[e].direction_from(v))
                        .collect();
                    let merged_edge = self.ctx.image.classify_high_valence(v) == FourValentClass::MergedEdge;
                    out.push(SlicedLeaf { segment: m, component: k, path, distance: d, off_directions, merged_edge });
                }
            }
        }
        out
    }
}

fn segments_meeting(dec: &SegmentDecomposition, attachments: &[usize]) -> Vec<usize> {
    let mut out = BTreeSet::new();
    for &a in attachments {
        for (m, s) in dec.segments.iter().enumerate() {
            let hit = if dec.cut_vertices.contains(&a) { s.path.contains(&a) } else { s.interior_vertices().contains(&a) };
            if hit {
                out.insert(m);
            }
        }
    }
    out.into_iter().collect()
}

/// Canonical key of a flat: its constraint rows in reduced echelon form.
fn canonical(rows: &[RatVec], a: usize) -> Vec<RatVec> {
    rref(rows, a).0
}

pub(crate) fn flat_basis(rows: &[RatVec], a: usize) -> Vec<RatVec> {
    if rows.is_empty() {
        (0..a).map(|i| (0..a).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect()
    } else {
        kernel_basis_rat(rows, a)
    }
}

/// A point of the flat at which no functional in `watch` vanishes unless it
/// vanishes on the whole flat.
pub(crate) fn generic_point(basis: &[RatVec], a: usize, watch: &dyn Fn(&[Rat]) -> Vec<RatVec>, seed: u64) -> Result<RatVec, WellSpacedError> {
    for attempt in 0..REDRAW_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut p = vec![Rat::zero(); a];
        for b in basis {
            let c = Rat::from_integer(rng.gen_range(1..=1_000_000i64).into());
            for i in 0..a {
                p[i] += &c * &b[i];
            }
        }
        let ok = watch(&p).iter().all(|f| {
            let at_p: Rat = f.iter().zip(&p).map(|(x, y)| x * y).sum();
            !at_p.is_zero() || basis.iter().all(|b| f.iter().zip(b).map(|(x, y)| x * y).sum::<Rat>().is_zero())
        });
        if ok {
            return Ok(p);
        }
    }
    Err(WellSpacedError::GenericPointNotFound(REDRAW_LIMIT))
}

fn stratified_check(ctx: &Context, counting: Counting, seed: u64) -> Result<Vec<WellSpacedWitness>, WellSpacedError> {
    let a = ctx.h.dimension();
    if a == 0 {
        return Ok(Vec::new());
    }
    // Every functional whose vanishing could change the combinatorics.
    let all_functionals = |_: &[Rat]| -> Vec<RatVec> {
        let mut out = Vec::new();
        for (m, _) in ctx.h.decomposition.segments.iter().enumerate() {
            for i in 0..ctx.curve.n {
                out.push((0..a).map(|j| Rat::from_integer(ctx.h.basis[j][m][i].clone())).collect());
            }
            for e in &ctx.image.edges {
                out.push((0..a).map(|j| Rat::from_integer(dot_int(&ctx.h.basis[j][m], &e.direction))).collect());
            }
        }
        out
    };
    let mut seen: BTreeSet<Vec<Vec<String>>> = BTreeSet::new();
    let key = |rows: &[RatVec]| -> Vec<Vec<String>> {
        canonical(rows, a).iter().map(|r| r.iter().map(fmt_rat).collect()).collect()
    };
    let mut out = Vec::new();
    let mut stack: Vec<Vec<RatVec>> = vec![Vec::new()];
    seen.insert(key(&[]));
    while let Some(rows) = stack.pop() {
        let basis = flat_basis(&rows, a);
        if basis.is_empty() {
            continue;
        }
        let p = generic_point(&basis, a, &all_functionals, seed)?;
        let (witness, refinements) = ctx.evaluate(canonical(&rows, a), &p, counting);
        out.push(witness);
        for r in refinements {
            let on_flat = basis.iter().any(|b| !r.iter().zip(b).map(|(x, y)| x * y).sum::<Rat>().is_zero());
            if !on_flat {
                continue;
            }
            let mut next = rows.clone();
            next.push(r);
            if seen.insert(key(&next)) {
                if seen.len() > STRATA_LIMIT {
                    return Err(WellSpacedError::TooManyStrata(STRATA_LIMIT));
                }
                stack.push(next);
            }
        }
    }
    Ok(out)
}

/// Hyperplane strata for a genus-one curve: one witness per stratum of
/// covectors vanishing on the loop span.
pub fn candidate_hyperplanes(curve: &TropicalCurve, seed: u64) -> Result<Vec<WellSpacedWitness>, WellSpacedError> {
    if curve.genus() != 1 {
        return Err(WellSpacedError::Scope("hyperplane strata are defined for genus one".into()));
    }
    let ctx = Context::new(curve)?;
    stratified_check(&ctx, Counting::PerVertex, seed)
}

pub fn well_spaced_check(curve: &TropicalCurve, seed: u64) -> Result<(bool, Vec<WellSpacedWitness>), WellSpacedError> {
    let bd = curve.bouquet_decomposition();
    let counting = match (curve.genus(), bd.bouquets.len()) {
        (0, _) => return Ok((true, Vec::new())),
        (1, _) => Counting::PerVertex,
        (_, 1) => Counting::PerComponent,
        (g, b) => return Err(WellSpacedError::Scope(format!("genus {g} with {b} bouquets"))),
    };
    let ctx = Context::new(curve)?;
    let witnesses = stratified_check(&ctx, counting, seed)?;
    Ok((witnesses.iter().all(|w| w.branch.passes()), witnesses))
}

/// Whether every tree hanging off the loops stays inside the span of the
/// segment it is attached to.
pub fn kuranishi_zero_check(curve: &TropicalCurve) -> Result<bool, WellSpacedError> {
    let h = dual_obstruction_basis(curve)?;
    let dec = &h.decomposition;
    let bd = curve.bouquet_decomposition();
    let n = curve.n;
    for c in &bd.complement {
        if c.attachments.is_empty() {
            continue;
        }
        let segs = segments_meeting(dec, &c.attachments);
        for m in segs {
            let span = &dec.segments[m].directions;
            for &e in &c.edges {
                if let Some(d) = &curve.edges[e].direction {
                    if !crate::exact_linalg::in_span_int(span, d, n) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Smoothable,
    NotSmoothable,
    Undetermined,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Smoothable => "SMOOTHABLE",
            Verdict::NotSmoothable => "NOT_SMOOTHABLE",
            Verdict::Undetermined => "UNDETERMINED",
        }
    }
}

/// Which criterion decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NonSuperabundant,
    KuranishiZero,
    GenusOneImmersive,
    GenusOneFourValent,
    UniqueBouquet,
    OutOfScope,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::NonSuperabundant => "NON_SUPERABUNDANT",
            Rule::KuranishiZero => "KURANISHI_ZERO",
            Rule::GenusOneImmersive => "GENUS_ONE_IMMERSIVE",
            Rule::GenusOneFourValent => "GENUS_ONE_FOUR_VALENT",
            Rule::UniqueBouquet => "UNIQUE_BOUQUET",
            Rule::OutOfScope => "OUT_OF_SCOPE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothabilityVerdict {
    pub verdict: Verdict,
    pub rule: Rule,
    pub reason: String,
    pub witnesses: Vec<WellSpacedWitness>,
}

pub fn smoothability_verdict(curve: &TropicalCurve, seed: u64) -> Result<SmoothabilityVerdict, WellSpacedError> {
    let done = |verdict, rule, reason: &str| SmoothabilityVerdict { verdict, rule, reason: reason.to_string(), witnesses: Vec::new() };
    let profile = curve.regularity_profile();
    if !profile.regular {
        let (clause, w) = &profile.violations[0];
        return Ok(done(Verdict::Undetermined, Rule::OutOfScope, &format!("regularity condition ({clause}) fails: {w}")));
    }
    let h = dual_obstruction_basis(curve)?;
    if h.dimension() == 0 {
        return Ok(done(Verdict::Smoothable, Rule::NonSuperabundant, "dual obstruction space is zero"));
    }
    if kuranishi_zero_check(curve)? {
        return Ok(done(Verdict::Smoothable, Rule::KuranishiZero, "every tree stays in the span of its segment"));
    }
    if !profile.admissible_valence {
        return Ok(done(Verdict::Undetermined, Rule::OutOfScope, "an image vertex is not of an admissible valence-four type"));
    }
    let bouquets = curve.bouquet_decomposition().bouquets.len();
    let rule = if curve.genus() == 1 {
        if profile.high_valence.is_empty() {
            Rule::GenusOneImmersive
        } else {
            Rule::GenusOneFourValent
        }
    } else if bouquets == 1 {
        Rule::UniqueBouquet
    } else {
        return Ok(done(Verdict::Undetermined, Rule::OutOfScope, &format!("{bouquets} bouquets in genus {}", curve.genus())));
    };
    let (ok, witnesses) = well_spaced_check(curve, seed)?;
    let verdict = if ok { Verdict::Smoothable } else { Verdict::NotSmoothable };
    let reason = if ok { "well-spaced" } else { "a unique minimum at an ordinary vertex" };
    Ok(SmoothabilityVerdict { verdict, rule, reason: reason.to_string(), witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::{validate_curve, RawCurve};
    use crate::exact_linalg::rat;

    #[test]
    fn distance_order() {
        assert!(Distance::Finite(rat(5, 1)) < Distance::Infinite);
        assert!(Distance::Finite(rat(1, 2)) < Distance::Finite(rat(1, 1)));
        assert_eq!(Distance::Infinite.to_string(), "inf");
    }

    /// Two segments of lengths 3 (weight 1) and 2 (weight 2) end to end.
    #[test]
    fn path_length_examples() {
        let c = validate_curve(
            &RawCurve::new(2)
                .vertex("a", &[0, 0])
                .vertex("b", &[3, 0])
                .vertex("c", &[3, 2])
                .bounded("ab", "a", "b", 1)
                .bounded("bc", "b", "c", 2)
                .unbounded("a1", "a", &[-1, 1], 1)
                .unbounded("a2", "a", &[0, -1], 1)
                .unbounded("b1", "b", &[1, -2], 1)
                .unbounded("c1", "c", &[1, 1], 1)
                .unbounded("c2", "c", &[-1, 1], 1),
        )
        .unwrap();
        let img = c.build_image();
        let (a, b, cc) = (img.vertex_of[0], img.vertex_of[1], img.vertex_of[2]);
        assert_eq!(path_length(&img, &[a, b]).unwrap(), (rat(3, 1), true));
        assert_eq!(path_length(&img, &[b, cc]).unwrap(), (rat(1, 1), true));
        assert_eq!(path_length(&img, &[a, b, cc]).unwrap().0, rat(4, 1));
        assert!(matches!(path_length(&img, &[a, cc]), Err(WellSpacedError::NotAPath(..))));
    }
}

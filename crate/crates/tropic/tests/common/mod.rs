//! Shared fixtures, random generators and brute-force oracles for the
//! integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tropic::cli_io::{load_curve, parse_constraints, read_text};
use tropic::curve_model::{validate_curve, RawCurve, TropicalCurve};
use tropic::enumeration_index::ConstraintSet;
use tropic::exact_linalg::{IntVec, Rat, RatVec};
use tropic::kuranishi_leading::{NodeCoefficients, PathStep, PreLogPathConfig};
use tropic::obstruction_space::AbstractGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> TropicalCurve {
    load_curve(&fixture_path(&format!("{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn constraints(name: &str) -> ConstraintSet {
    parse_constraints(&read_text(&fixture_path(&format!("{name}.json"))).unwrap()).unwrap()
}

/// Every curve fixture that validates.
pub const CURVES: &[&str] = &[
    "line",
    "line_marked",
    "line_mult2",
    "planar_genus_one",
    "planar_loop_in_space",
    "gamma1",
    "gamma2",
    "superabundant",
    "cubic",
    "cubic_marked",
    "cubicnon_a",
    "cubicnon_b",
    "cubic_scaled",
    "cubicweight2",
    "cubicmove_b_i",
    "cubicmove_b_ii",
    "genus2_deg",
    "genus2_unequal",
    "genus2_nondef",
    "high",
];

pub fn q(n: i64, d: i64) -> Rat {
    BigRational::new(n.into(), d.into())
}

pub fn iv(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

// ---- abstract trivalent graphs ----

/// A connected graph with every vertex trivalent, first Betti number `genus`
/// and `vertices` vertices; remaining half-edges become legs. `None` when the
/// random attempt overshoots a valence.
pub fn random_trivalent_graph(r: &mut impl Rng, vertices: usize, genus: usize) -> Option<AbstractGraph> {
    let mut valence = vec![0usize; vertices];
    let mut edges = Vec::new();
    // Random spanning tree, attaching each vertex to an earlier one with room.
    let mut order: Vec<usize> = (0..vertices).collect();
    order.shuffle(r);
    for i in 1..vertices {
        let open: Vec<usize> = order[..i].iter().copied().filter(|&v| valence[v] < 3).collect();
        let &a = open.choose(r)?;
        let b = order[i];
        edges.push((a, Some(b)));
        valence[a] += 1;
        valence[b] += 1;
    }
    for _ in 0..genus {
        let open: Vec<usize> = (0..vertices).filter(|&v| valence[v] < 3).collect();
        if open.len() < 2 {
            return None;
        }
        let pair: Vec<usize> = open.choose_multiple(r, 2).copied().collect();
        edges.push((pair[0], Some(pair[1])));
        valence[pair[0]] += 1;
        valence[pair[1]] += 1;
    }
    for v in 0..vertices {
        for _ in valence[v]..3 {
            edges.push((v, None));
        }
    }
    edges.shuffle(r);
    Some(AbstractGraph { vertices, edges })
}

/// Independent genus: connected components by union–find, then `E − V + C`.
pub fn graph_genus(g: &AbstractGraph) -> usize {
    let mut parent: Vec<usize> = (0..g.vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut bounded = 0;
    for &(a, b) in &g.edges {
        if let Some(b) = b {
            bounded += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let comps = (0..g.vertices).filter(|&v| find(&mut parent, v) == v).count();
    bounded + comps - g.vertices
}

// ---- random immersive curves ----

/// Builder for curves grown by splitting ends.
#[derive(Debug, Clone)]
pub struct Grower {
    pub n: usize,
    pub verts: Vec<RatVec>,
    pub bounded: Vec<(usize, usize, i64)>,
    /// `(vertex, direction, weight)`; direction primitive.
    pub rays: Vec<(usize, Vec<i64>, i64)>,
}

fn small_vec(r: &mut impl Rng, n: usize) -> Vec<i64> {
    loop {
        let v: Vec<i64> = (0..n).map(|_| r.gen_range(-2..=2)).collect();
        if v.iter().any(|&x| x != 0) {
            return v;
        }
    }
}

fn parallel(a: &[i64], b: &[i64]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i] * b[j] == a[j] * b[i]))
}

fn primitive(v: &[i64]) -> (Vec<i64>, i64) {
    let g = gcd_all(v);
    (v.iter().map(|x| x / g).collect(), g)
}

impl Grower {
    /// A single trivalent vertex at the origin.
    pub fn tripod(r: &mut impl Rng, n: usize) -> Self {
        loop {
            let a = small_vec(r, n);
            let b = small_vec(r, n);
            let c: Vec<i64> = a.iter().zip(&b).map(|(x, y)| -x - y).collect();
            if parallel(&a, &b) || c.iter().all(|&x| x == 0) || parallel(&a, &c) || parallel(&b, &c) {
                continue;
            }
            let mut g = Grower { n, verts: vec![vec![Rat::zero(); n]], bounded: vec![], rays: vec![] };
            for d in [a, b, c] {
                let (u, w) = primitive(&d);
                g.rays.push((0, u, w));
            }
            return g;
        }
    }

    /// A triangular cycle with one end at each corner.
    pub fn triangle(r: &mut impl Rng, n: usize) -> Self {
        loop {
            let u0 = small_vec(r, n);
            let u1 = small_vec(r, n);
            if parallel(&u0, &u1) {
                continue;
            }
            let (l0, l1) = (r.gen_range(1..=3i64), r.gen_range(1..=3i64));
            let closing: Vec<i64> = (0..n).map(|i| -(l0 * u0[i] + l1 * u1[i])).collect();
            let (u2, _) = primitive(&closing);
            if parallel(&u2, &u0) || parallel(&u2, &u1) {
                continue;
            }
            let p0 = vec![Rat::zero(); n];
            let p1: RatVec = (0..n).map(|i| Rat::from_integer((l0 * u0[i]).into())).collect();
            let p2: RatVec = (0..n).map(|i| &p1[i] + Rat::from_integer((l1 * u1[i]).into())).collect();
            let mut g = Grower { n, verts: vec![p0, p1, p2], bounded: vec![(0, 1, 1), (1, 2, 1), (2, 0, 1)], rays: vec![] };
            let outs = [(0, &u0, &u2), (1, &u1, &u0), (2, &u2, &u1)];
            let mut ok = true;
            for (v, out, inc) in outs {
                // balancing: ray = incoming − outgoing
                let d: Vec<i64> = (0..n).map(|i| inc[i] - out[i]).collect();
                if d.iter().all(|&x| x == 0) || parallel(&d, out) || parallel(&d, inc) {
                    ok = false;
                    break;
                }
                let (u, w) = primitive(&d);
                g.rays.push((v, u, w));
            }
            if ok {
                return g;
            }
        }
    }

    /// Replaces a random end by a bounded edge ending in a new trivalent vertex.
    pub fn split(&mut self, r: &mut impl Rng) {
        let k = r.gen_range(0..self.rays.len());
        let (v, u, w) = self.rays[k].clone();
        let total: Vec<i64> = u.iter().map(|x| x * w).collect();
        let a = loop {
            let a = small_vec(r, self.n);
            let b: Vec<i64> = (0..self.n).map(|i| total[i] - a[i]).collect();
            if !parallel(&a, &u) && b.iter().any(|&x| x != 0) {
                break a;
            }
        };
        let b: Vec<i64> = (0..self.n).map(|i| total[i] - a[i]).collect();
        let len = q(r.gen_range(1..=6), r.gen_range(1..=2));
        let pos: RatVec = (0..self.n).map(|i| &self.verts[v][i] + &len * Rat::from_integer(u[i].into())).collect();
        self.verts.push(pos);
        let nv = self.verts.len() - 1;
        self.bounded.push((v, nv, w));
        self.rays.remove(k);
        for d in [a, b] {
            let (p, wt) = primitive(&d);
            self.rays.push((nv, p, wt));
        }
    }

    pub fn raw(&self) -> RawCurve {
        let mut raw = RawCurve::new(self.n);
        for (i, p) in self.verts.iter().enumerate() {
            raw = raw.vertex_q(&format!("v{i:02}"), p.clone());
        }
        for (i, &(a, b, w)) in self.bounded.iter().enumerate() {
            raw = raw.bounded(&format!("b{i:02}"), &format!("v{a:02}"), &format!("v{b:02}"), w);
        }
        for (i, (v, d, w)) in self.rays.iter().enumerate() {
            raw = raw.unbounded(&format!("r{i:02}"), &format!("v{v:02}"), d, *w);
        }
        raw
    }

    /// The grown curve when it validates, is trivalent and satisfies the regularity conditions.
    pub fn curve(&self) -> Option<TropicalCurve> {
        let c = validate_curve(&self.raw()).ok()?;
        let p = c.regularity_profile();
        (p.trivalent && p.regular).then_some(c)
    }
}

/// A random trivalent regular curve of genus 0 or 1 in `ℝⁿ`.
pub fn random_immersive_curve(r: &mut impl Rng, n: usize, genus_one: bool, splits: usize) -> TropicalCurve {
    loop {
        let mut g = if genus_one { Grower::triangle(r, n) } else { Grower::tripod(r, n) };
        for _ in 0..splits {
            g.split(r);
        }
        if let Some(c) = g.curve() {
            return c;
        }
    }
}

// ---- unimodular transforms ----

pub fn random_unimodular(r: &mut impl Rng, n: usize) -> Vec<IntVec> {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..(2 * n + 2) {
        let i = r.gen_range(0..n);
        let j = (i + r.gen_range(1..n)) % n;
        match r.gen_range(0..4) {
            0 => m.swap(i, j),
            1 => m[i].iter_mut().for_each(|x| *x = -*x),
            _ => {
                let c = *[-2i64, -1, 1, 2].choose(r).unwrap();
                let row = m[j].clone();
                m[i].iter_mut().zip(row).for_each(|(x, y)| *x += c * y);
            }
        }
    }
    m.iter().map(|row| iv(row)).collect()
}

pub fn random_shift(r: &mut impl Rng, n: usize) -> RatVec {
    (0..n).map(|_| q(r.gen_range(-9..=9), r.gen_range(1..=4))).collect()
}

/// Determinant by cofactor expansion; enough for the small matrices here.
pub fn det_i64(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..].iter().map(|row| [&row[..j], &row[j + 1..]].concat()).collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det_i64(&minor)
            })
            .sum(),
    }
}

/// `|ℤⁿ / L|` for the lattice spanned by the rows of `m`, counted by testing
/// which points of the box `[0, d)ⁿ` lie in `L` (`dℤⁿ ⊆ L` for `d = |det|`).
pub fn coset_count(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let d = det_i64(m).abs();
    assert!(d > 0);
    // x ∈ L iff x·adj(m) ≡ 0 (mod det).
    let cof = |i: usize, j: usize| {
        let minor: Vec<Vec<i64>> = (0..n)
            .filter(|&r| r != i)
            .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c]).collect())
            .collect();
        let s = if (i + j) % 2 == 0 { 1 } else { -1 };
        if n == 1 {
            1
        } else {
            s * det_i64(&minor)
        }
    };
    let adj: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| cof(j, i)).collect()).collect();
    let mut inside = 0i64;
    let total = d.pow(n as u32);
    for idx in 0..total {
        let mut x = vec![0i64; n];
        let mut t = idx;
        for xi in x.iter_mut() {
            *xi = t % d;
            t /= d;
        }
        let ok = (0..n).all(|j| (0..n).map(|i| x[i] * adj[i][j]).sum::<i64>() % d == 0);
        inside += i64::from(ok);
    }
    total / inside
}

pub fn random_full_rank(r: &mut impl Rng, n: usize, max_det: i64) -> Vec<Vec<i64>> {
    loop {
        let m: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| r.gen_range(-5..=5)).collect()).collect();
        let d = det_i64(&m).abs();
        if d > 0 && d <= max_det {
            return m;
        }
    }
}

// ---- pre-log path data ----

fn nonzero_rat(r: &mut impl Rng) -> Rat {
    let mut n = r.gen_range(-7..=7);
    if n == 0 {
        n = 1;
    }
    q(n, r.gen_range(1..=5))
}

pub fn random_prelog_config(r: &mut impl Rng) -> PreLogPathConfig {
    let len = r.gen_range(2..=6);
    let nodes = (0..len)
        .map(|i| {
            if i > 0 && r.gen_bool(0.2) {
                NodeCoefficients::Conic { a: nonzero_rat(r), b: nonzero_rat(r) }
            } else {
                NodeCoefficients::Trivalent { k: nonzero_rat(r), l: nonzero_rat(r), m: nonzero_rat(r) }
            }
        })
        .collect();
    let steps = (1..len)
        .map(|_| {
            let weight = r.gen_range(1..=3u64);
            // Mostly integral r/w, sometimes not.
            let length = if r.gen_bool(0.8) {
                Rat::from_integer(BigInt::from(weight) * BigInt::from(r.gen_range(1..=4)))
            } else {
                q(r.gen_range(1..=9), r.gen_range(1..=3))
            };
            PathStep { weight, length }
        })
        .collect();
    PreLogPathConfig {
        path: (0..len).map(|i| format!("x{i}")).collect(),
        nodes,
        steps,
        direction: iv(&small_vec(r, 3)),
        segment: None,
    }
}

/// The leading coefficient written out directly from the node data.
pub fn coefficient_oracle(c: &PreLogPathConfig) -> Rat {
    let last = c.nodes.len() - 1;
    let mut acc = Rat::one();
    for (i, node) in c.nodes.iter().enumerate() {
        acc *= match node {
            NodeCoefficients::Conic { a, b } => a / b,
            NodeCoefficients::Trivalent { k, l, m } if i == 0 => k / m,
            NodeCoefficients::Trivalent { l, m, .. } if i == last => l / m,
            NodeCoefficients::Trivalent { k, l, m } => k * l / (m * m),
        };
    }
    acc
}

/// `Σ length/weight` in exact arithmetic.
pub fn length_oracle(c: &PreLogPathConfig) -> Rat {
    c.steps.iter().fold(Rat::zero(), |acc, s| acc + &s.length / Rat::from_integer(s.weight.into()))
}

// ---- genus-two family ----

/// The two-loop fixture with `E₁`, `E₂` (and `F₁` when present) moved to the given lengths.
pub fn genus_two_with(base: &str, e1: &Rat, e2: &Rat, f1: Option<&Rat>) -> TropicalCurve {
    let c = fixture(base);
    let mut raw = c.to_raw();
    let pos = |id: &str| c.vertices[c.vertex_index(id).unwrap()].pos.clone();
    let moved = |from: RatVec, d: &[i64], l: &Rat| -> RatVec {
        from.iter().zip(d).map(|(x, &di)| x + l * Rat::from_integer(di.into())).collect()
    };
    for (id, p) in raw.vertices.iter_mut() {
        match id.as_str() {
            "alpha1" => *p = moved(pos("P1"), &[-1, -1, 0], e1),
            "alpha2" => *p = moved(pos("P5"), &[0, 1, 0], e2),
            "beta" => *p = moved(pos("S5"), &[0, 1, 0], f1.expect("F1 length")),
            _ => {}
        }
    }
    validate_curve(&raw).unwrap()
}


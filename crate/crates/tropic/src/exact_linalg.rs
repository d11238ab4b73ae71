//! Exact integer and rational linear algebra.
//!
//! Everything here works over arbitrary-precision integers (`BigInt`) and
//! rationals (`BigRational`); nothing rounds. Lattices are described by lists
//! of generators in ℤⁿ and normalized to row-style Hermite normal form so that
//! derived bases are byte-stable.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Int = BigInt;
pub type Rat = BigRational;
pub type IntVec = Vec<BigInt>;
pub type RatVec = Vec<BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("zero vector has no primitive direction")]
    ZeroVector,
    #[error("generator {generator} is not in the ambient lattice ({reason})")]
    NotASublattice { generator: usize, reason: &'static str },
}

/// Index of a sublattice; `Infinite` when the ranks differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Index {
    Finite(BigInt),
    Infinite,
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Finite(d) => write!(f, "{d}"),
            Index::Infinite => write!(f, "INFINITE"),
        }
    }
}

/// Integer matrix with an explicit shape (`rows` × `cols`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeMap {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<IntVec>,
}

impl LatticeMap {
    pub fn new(cols: usize, entries: Vec<IntVec>) -> Self {
        debug_assert!(entries.iter().all(|r| r.len() == cols));
        LatticeMap { rows: entries.len(), cols, entries }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        LatticeMap::new(cols, rows.iter().map(|r| int_vec(r)).collect())
    }
}

pub fn int(v: i64) -> Int {
    BigInt::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int_vec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn to_rat(v: &[Int]) -> RatVec {
    v.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

pub fn rat_vec(v: &[i64]) -> RatVec {
    v.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect()
}

/// gcd of the absolute values of the entries (0 for the zero vector).
pub fn content(v: &[Int]) -> Int {
    v.iter().fold(Int::zero(), |g, x| g.gcd(x))
}

/// `v / gcd(v)`, keeping the direction.
pub fn primitive_vector(v: &[Int]) -> Result<IntVec, LinalgError> {
    let g = content(v);
    if g.is_zero() {
        return Err(LinalgError::ZeroVector);
    }
    Ok(v.iter().map(|x| x / &g).collect())
}

/// Scales a rational vector to an integer vector with content 1 pointing the
/// same way. The zero vector maps to the zero vector.
pub fn clear_denominators(v: &[Rat]) -> IntVec {
    let l = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
    let ints: IntVec = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    primitive_vector(&ints).unwrap_or(ints)
}

/// If `d` is a positive rational multiple of an integer vector, returns the
/// primitive direction and the multiple (the integral length).
pub fn direction_and_length(d: &[Rat]) -> Option<(IntVec, Rat)> {
    let p = clear_denominators(d);
    let i = p.iter().position(|x| !x.is_zero())?;
    Some((p.clone(), &d[i] / Rat::from_integer(p[i].clone())))
}

pub fn dot_int(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_rat(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |s, (x, y)| s + x * y)
}

pub fn dot_mixed(a: &[Rat], b: &[Int]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |s, (x, y)| s + x * Rat::from_integer(y.clone()))
}

/// Reduced row echelon form; returns the nonzero rows and their pivot columns.
pub fn rref(m: &[RatVec], cols: usize) -> (Vec<RatVec>, Vec<usize>) {
    let mut a: Vec<RatVec> = m.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &a[r][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    (a, pivots)
}

pub fn rank(m: &[RatVec], cols: usize) -> usize {
    rref(m, cols).1.len()
}

pub fn rank_int(m: &[IntVec], cols: usize) -> usize {
    let q: Vec<RatVec> = m.iter().map(|r| to_rat(r)).collect();
    rank(&q, cols)
}

/// Basis of `{x : Mx = 0}`. Vectors are integral with content 1; one vector per
/// free column of the reduced echelon form, free columns ascending.
pub fn kernel_basis(m: &[RatVec], cols: usize) -> Vec<IntVec> {
    let (r, pivots) = rref(m, cols);
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut x = vec![Rat::zero(); cols];
        x[free] = Rat::one();
        for (row, &pc) in r.iter().zip(&pivots) {
            x[pc] = -row[free].clone();
        }
        out.push(clear_denominators(&x));
    }
    out
}

/// Rational kernel basis without clearing denominators (used where the exact
/// free-variable normalization matters).
pub fn kernel_basis_rat(m: &[RatVec], cols: usize) -> Vec<RatVec> {
    let (r, pivots) = rref(m, cols);
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut x = vec![Rat::zero(); cols];
        x[free] = Rat::one();
        for (row, &pc) in r.iter().zip(&pivots) {
            x[pc] = -row[free].clone();
        }
        out.push(x);
    }
    out
}

/// Some solution of `Mx = b`, or `None` if inconsistent.
pub fn solve(m: &[RatVec], b: &[Rat], cols: usize) -> Option<RatVec> {
    let aug: Vec<RatVec> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, cols + 1);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (row, &pc) in r.iter().zip(&pivots) {
        x[pc] = row[cols].clone();
    }
    Some(x)
}

/// Is `v` in the ℚ-span of `gens`?
pub fn in_span(gens: &[RatVec], v: &[Rat], n: usize) -> bool {
    let mut m = gens.to_vec();
    let r0 = rank(&m, n);
    m.push(v.to_vec());
    rank(&m, n) == r0
}

pub fn in_span_int(gens: &[IntVec], v: &[Int], n: usize) -> bool {
    let g: Vec<RatVec> = gens.iter().map(|x| to_rat(x)).collect();
    in_span(&g, &to_rat(v), n)
}

/// Elementary divisors `d₁ | d₂ | …` of an integer matrix (positive, length = rank).
pub fn smith_invariants(m: &LatticeMap) -> Vec<Int> {
    let mut a = m.entries.clone();
    let (rows, cols) = (m.rows, m.cols);
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Smallest nonzero entry of the trailing block becomes the pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    for j in t..cols {
                        let s = &q * &a[t][j];
                        a[i][j] -= s;
                    }
                    if !a[i][t].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for i in t..rows {
                        let s = &q * &a[i][t];
                        a[i][j] -= s;
                    }
                    if !a[t][j].is_zero() {
                        dirty = true;
                    }
                }
            }
            if !dirty {
                // Divisibility: fold a non-divisible row into the pivot row.
                let bad = (t + 1..rows)
                    .find(|&i| (t + 1..cols).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
                match bad {
                    Some(i) => {
                        for j in t..cols {
                            let s = a[i][j].clone();
                            a[t][j] += s;
                        }
                    }
                    None => break,
                }
            }
            // Move the smallest nonzero entry of row/column t into the pivot.
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        out.push(a[t][t].abs());
        t += 1;
    }
    out
}

/// Row-style Hermite normal form of the lattice generated by `gens`: nonzero
/// rows, positive pivots, entries above each pivot reduced into `[0, pivot)`.
pub fn hnf_rows(gens: &[IntVec], n: usize) -> Vec<IntVec> {
    let mut a: Vec<IntVec> = gens.to_vec();
    let mut r = 0;
    for c in 0..n {
        // Euclid down the column until one nonzero entry remains.
        loop {
            let nz: Vec<usize> = (r..a.len()).filter(|&i| !a[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| a[i][c].abs()).unwrap();
            for &i in &nz {
                if i != p {
                    let q = a[i][c].div_floor(&a[p][c]);
                    for j in c..n {
                        let s = &q * &a[p][j];
                        a[i][j] -= s;
                    }
                }
            }
        }
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        if a[r][c].is_negative() {
            for x in a[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let q = a[i][c].div_floor(&a[r][c]);
            if !q.is_zero() {
                for j in c..n {
                    let s = &q * &a[r][j];
                    a[i][j] -= s;
                }
            }
        }
        r += 1;
    }
    a.truncate(r);
    a.retain(|row| row.iter().any(|x| !x.is_zero()));
    a
}

/// ℤ-basis of `{x ∈ ℤⁿ : row·x = 0 for every row}` (always saturated).
pub fn integer_kernel(rows: &[IntVec], n: usize) -> Vec<IntVec> {
    let mut a: Vec<IntVec> = rows.to_vec();
    // u[j] is column j of the unimodular transform, stored as a vector.
    let mut u: Vec<IntVec> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { Int::one() } else { Int::zero() }).collect())
        .collect();
    let mut p = 0;
    for r in 0..a.len() {
        loop {
            let nz: Vec<usize> = (p..n).filter(|&j| !a[r][j].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&j) = nz.first() {
                    swap_cols(&mut a, &mut u, p, j);
                    p += 1;
                }
                break;
            }
            let piv = *nz.iter().min_by_key(|&&j| a[r][j].abs()).unwrap();
            for &j in &nz {
                if j != piv {
                    let q = a[r][j].div_floor(&a[r][piv]);
                    for row in a.iter_mut() {
                        let s = &q * &row[piv];
                        row[j] -= s;
                    }
                    let col = u[piv].clone();
                    for (x, y) in u[j].iter_mut().zip(col) {
                        *x -= &q * y;
                    }
                }
            }
        }
        if p == n {
            break;
        }
    }
    u.drain(p..).collect()
}

fn swap_cols(a: &mut [IntVec], u: &mut [IntVec], i: usize, j: usize) {
    if i != j {
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        u.swap(i, j);
    }
}

/// Basis (in Hermite normal form) of the saturated lattice of integral
/// covectors vanishing on every vector in `vectors`.
pub fn annihilator_basis(vectors: &[IntVec], n: usize) -> Vec<IntVec> {
    hnf_rows(&integer_kernel(vectors, n), n)
}

/// Basis of `span_ℚ(sub) ∩ ℤⁿ`.
pub fn saturation(sub: &[IntVec], n: usize) -> Vec<IntVec> {
    annihilator_basis(&annihilator_basis(sub, n), n)
}

/// Integral coordinates of `v` in the lattice basis `basis`, if any.
fn lattice_coords(basis: &[IntVec], v: &[Int], n: usize) -> Result<Option<IntVec>, ()> {
    let cols = basis.len();
    let m: Vec<RatVec> = (0..n)
        .map(|i| basis.iter().map(|b| Rat::from_integer(b[i].clone())).collect())
        .collect();
    let Some(x) = solve(&m, &to_rat(v), cols) else { return Err(()) };
    if x.iter().all(|c| c.is_integer()) {
        Ok(Some(x.into_iter().map(|c| c.to_integer()).collect()))
    } else {
        Ok(None)
    }
}

pub fn lattice_contains(gens: &[IntVec], v: &[Int], n: usize) -> bool {
    let b = hnf_rows(gens, n);
    matches!(lattice_coords(&b, v, n), Ok(Some(_)))
}

/// Lattice equality as mutual integral membership of generators.
pub fn lattice_equal(a: &[IntVec], b: &[IntVec], n: usize) -> bool {
    a.iter().all(|v| lattice_contains(b, v, n)) && b.iter().all(|v| lattice_contains(a, v, n))
}

/// `[⟨ambient⟩ : ⟨sub⟩]`, or `Infinite` when `sub` has lower rank.
pub fn lattice_index(sub: &[IntVec], ambient: &[IntVec], n: usize) -> Result<Index, LinalgError> {
    let basis = hnf_rows(ambient, n);
    let mut coords = Vec::with_capacity(sub.len());
    for (g, v) in sub.iter().enumerate() {
        match lattice_coords(&basis, v, n) {
            Err(()) => {
                return Err(LinalgError::NotASublattice { generator: g, reason: "outside the rational span" })
            }
            Ok(None) => {
                return Err(LinalgError::NotASublattice { generator: g, reason: "non-integral coordinates" })
            }
            Ok(Some(c)) => coords.push(c),
        }
    }
    let m = LatticeMap::new(basis.len(), coords);
    let inv = smith_invariants(&m);
    if inv.len() < basis.len() {
        return Ok(Index::Infinite);
    }
    Ok(Index::Finite(inv.iter().product()))
}

/// Exact determinant by fraction-free elimination over ℚ.
pub fn det(m: &[IntVec]) -> Int {
    let n = m.len();
    let mut a: Vec<RatVec> = m.iter().map(|r| to_rat(r)).collect();
    let mut d = Rat::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else { return Int::zero() };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c].clone();
        for i in c + 1..n {
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let t = &a[c][j] * &f;
                a[i][j] -= t;
            }
        }
    }
    d.to_integer()
}

/// A covector `φ` with `φ(u) = 1` for a primitive `u`.
pub fn dual_functional(u: &[Int]) -> IntVec {
    // Extended Euclid across the coordinates.
    let n = u.len();
    let mut coeffs = vec![Int::zero(); n];
    let mut g = Int::zero();
    for i in 0..n {
        if u[i].is_zero() {
            continue;
        }
        if g.is_zero() {
            g = u[i].clone();
            coeffs[i] = Int::one();
            continue;
        }
        let e = g.extended_gcd(&u[i]);
        for c in coeffs.iter_mut() {
            *c *= &e.x;
        }
        coeffs[i] = e.y;
        g = e.gcd;
    }
    if g.is_negative() {
        for c in coeffs.iter_mut() {
            *c = -c.clone();
        }
    }
    coeffs
}

/// Formats a rational as `p` or `p/q`.
pub fn fmt_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `^-?[0-9]+(/[1-9][0-9]*)?$`.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let digits = num.strip_prefix('-').unwrap_or(num);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: Int = num.parse().ok()?;
    let d: Int = match den {
        None => Int::one(),
        Some(b) => {
            if b.is_empty() || b.starts_with('0') || !b.bytes().all(|c| c.is_ascii_digit()) {
                return None;
            }
            b.parse().ok()?
        }
    };
    Some(Rat::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(rows: &[&[i64]]) -> Vec<IntVec> {
        rows.iter().map(|r| int_vec(r)).collect()
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(primitive_vector(&int_vec(&[2, 4, -6])).unwrap(), int_vec(&[1, 2, -3]));
        assert_eq!(primitive_vector(&int_vec(&[1, 0])).unwrap(), int_vec(&[1, 0]));
        assert_eq!(primitive_vector(&int_vec(&[0, 0, -7])).unwrap(), int_vec(&[0, 0, -1]));
        assert_eq!(primitive_vector(&int_vec(&[0, 0])), Err(LinalgError::ZeroVector));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&[rat_vec(&[1, 1])], 2), iv(&[&[-1, 1]]));
        let id: Vec<RatVec> = (0..3).map(|i| rat_vec(&[(i == 0) as i64, (i == 1) as i64, (i == 2) as i64])).collect();
        assert!(kernel_basis(&id, 3).is_empty());
        let m = vec![rat_vec(&[1, 2, 3]), rat_vec(&[2, 4, 6])];
        let k = kernel_basis(&m, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            for row in &m {
                assert!(dot_mixed(row, v).is_zero());
            }
        }
    }

    #[test]
    fn smith_examples() {
        assert_eq!(smith_invariants(&LatticeMap::from_i64(&[&[2, 0], &[0, 3]])), int_vec(&[1, 6]));
        assert_eq!(smith_invariants(&LatticeMap::from_i64(&[&[2, 4], &[6, 8]])), int_vec(&[2, 4]));
        assert!(smith_invariants(&LatticeMap::from_i64(&[&[0, 0], &[0, 0]])).is_empty());
    }

    #[test]
    fn index_examples() {
        let std2 = iv(&[&[1, 0], &[0, 1]]);
        assert_eq!(lattice_index(&iv(&[&[2, 0], &[0, 3]]), &std2, 2).unwrap(), Index::Finite(int(6)));
        assert_eq!(lattice_index(&std2, &std2, 2).unwrap(), Index::Finite(int(1)));
        assert_eq!(lattice_index(&iv(&[&[1, 1], &[1, -1]]), &std2, 2).unwrap(), Index::Finite(int(2)));
        assert_eq!(lattice_index(&iv(&[&[1, 1]]), &std2, 2).unwrap(), Index::Infinite);
        assert!(matches!(
            lattice_index(&iv(&[&[1, 0]]), &iv(&[&[2, 0]]), 2),
            Err(LinalgError::NotASublattice { generator: 0, .. })
        ));
        assert!(matches!(
            lattice_index(&iv(&[&[0, 1]]), &iv(&[&[1, 0]]), 2),
            Err(LinalgError::NotASublattice { generator: 0, .. })
        ));
    }

    #[test]
    fn annihilator_and_saturation_examples() {
        assert_eq!(annihilator_basis(&iv(&[&[1, 0, 0], &[0, 1, 0]]), 3), iv(&[&[0, 0, 1]]));
        assert!(annihilator_basis(&iv(&[&[1, 2, 0], &[0, 1, 1], &[1, 0, 1]]), 3).is_empty());
        assert_eq!(saturation(&iv(&[&[2, 0]]), 2), iv(&[&[1, 0]]));
        assert_eq!(saturation(&iv(&[&[1, 1], &[1, -1]]), 2), iv(&[&[1, 0], &[0, 1]]));
        assert!(saturation(&[], 2).is_empty());
        assert_eq!(annihilator_basis(&[], 2), iv(&[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn dual_functional_pairs_to_one() {
        for u in [[3, 5, 0], [0, -2, 7], [6, 10, 15], [-1, 0, 0]] {
            let u = int_vec(&u);
            assert_eq!(dot_int(&dual_functional(&u), &u), int(1));
        }
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rat("-3/6"), Some(rat(-1, 2)));
        assert_eq!(parse_rat("7"), Some(rat(7, 1)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("1/-2"), None);
        assert_eq!(parse_rat("1.5"), None);
        assert_eq!(fmt_rat(&rat(2, 6)), "1/3");
    }
}

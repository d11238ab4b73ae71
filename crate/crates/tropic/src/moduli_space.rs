//! Linear span of the deformations of a fixed combinatorial type, expected
//! dimension and the superabundancy report.

use num_traits::{One, Zero};

use crate::curve_model::{EdgeKind, TropicalCurve};
use crate::exact_linalg::{annihilator_basis, kernel_basis, IntVec, Rat, RatVec};

/// Vertex-position deformations: `n` coordinates per vertex, in vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSpace {
    pub ambient_dim: usize,
    pub basis: Vec<IntVec>,
}

impl DeformationSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperabundanceReport {
    pub expected_dim: i64,
    pub actual_dim: usize,
    pub obstruction_dim: usize,
    pub contracted_edges: usize,
    pub superabundant: bool,
    /// `Some(false)` when the dimension identity is applicable but fails.
    pub identity_holds: Option<bool>,
}

/// Rows of the map whose kernel is the deformation space.
pub fn deformation_constraints(curve: &TropicalCurve) -> Vec<RatVec> {
    let n = curve.n;
    let cols = n * curve.vertices.len();
    let mut rows = Vec::new();
    for e in &curve.edges {
        let EdgeKind::Bounded { ends: (a, b) } = e.kind else { continue };
        if a == b {
            continue;
        }
        let functionals: Vec<IntVec> = match &e.direction {
            Some(u) => annihilator_basis(std::slice::from_ref(u), n),
            None => (0..n).map(|i| (0..n).map(|j| if i == j { 1.into() } else { 0.into() }).collect()).collect(),
        };
        for f in functionals {
            let mut row = vec![Rat::zero(); cols];
            for i in 0..n {
                row[b * n + i] += Rat::from_integer(f[i].clone());
                row[a * n + i] -= Rat::from_integer(f[i].clone());
            }
            rows.push(row);
        }
    }
    rows
}

pub fn deformation_space(curve: &TropicalCurve) -> DeformationSpace {
    let cols = curve.n * curve.vertices.len();
    let rows = deformation_constraints(curve);
    let basis = if rows.is_empty() {
        (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { One::one() } else { Zero::zero() }).collect())
            .collect()
    } else {
        kernel_basis(&rows, cols)
    };
    DeformationSpace { ambient_dim: cols, basis }
}

pub fn expected_dimension(curve: &TropicalCurve) -> i64 {
    let e = curve.unbounded_count() as i64;
    let n = curve.n as i64;
    let g = curve.genus() as i64;
    e + (n - 3) * (1 - g)
}

/// Combines the deformation dimension with a known obstruction dimension.
///
/// Contracted non-loop edges each remove one degree of freedom relative to
/// the count behind the expected dimension, so the identity checked is
/// `actual + #contracted = expected + dim H` for trivalent curves satisfying
/// the regularity conditions.
pub fn superabundance_report(curve: &TropicalCurve, obstruction_dim: usize) -> SuperabundanceReport {
    let expected_dim = expected_dimension(curve);
    let actual_dim = deformation_space(curve).dimension();
    let contracted_edges = curve.edges.iter().filter(|e| e.is_bounded() && e.is_contracted()).count();
    let profile = curve.regularity_profile();
    let identity_holds = (profile.trivalent && profile.regular)
        .then(|| (actual_dim + contracted_edges) as i64 == expected_dim + obstruction_dim as i64);
    SuperabundanceReport {
        expected_dim,
        actual_dim,
        obstruction_dim,
        contracted_edges,
        superabundant: actual_dim as i64 > expected_dim,
        identity_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_model::{validate_curve, RawCurve};
    use crate::exact_linalg::rank_int;

    #[test]
    fn line_has_only_translations() {
        let c = validate_curve(
            &RawCurve::new(2)
                .vertex("v", &[0, 0])
                .unbounded("a", "v", &[-1, 0], 1)
                .unbounded("b", "v", &[0, -1], 1)
                .unbounded("c", "v", &[1, 1], 1),
        )
        .unwrap();
        assert_eq!(deformation_space(&c).dimension(), 2);
        assert_eq!(expected_dimension(&c), 2);
    }

    #[test]
    fn planar_square_moves_freely() {
        let c = validate_curve(
            &RawCurve::new(2)
                .vertex("p", &[0, 0])
                .vertex("q", &[1, 0])
                .vertex("r", &[1, 1])
                .vertex("s", &[0, 1])
                .bounded("pq", "p", "q", 1)
                .bounded("qr", "q", "r", 1)
                .bounded("rs", "r", "s", 1)
                .bounded("sp", "s", "p", 1)
                .unbounded("ep", "p", &[-1, -1], 1)
                .unbounded("eq", "q", &[1, -1], 1)
                .unbounded("er", "r", &[1, 1], 1)
                .unbounded("es", "s", &[-1, 1], 1),
        )
        .unwrap();
        // e + (n-3)(1-g) = 4; the square has 2 translations + 2 side lengths.
        let d = deformation_space(&c);
        assert_eq!(d.dimension(), 4);
        assert_eq!(rank_int(&d.basis, d.ambient_dim), 4);
        let r = superabundance_report(&c, 0);
        assert!(!r.superabundant);
        assert_eq!(r.identity_holds, Some(true));
    }
}

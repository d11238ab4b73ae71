//! Leading-order obstruction terms from exact pre-log coefficient data.
//!
//! A path from a one-valent vertex `α = α_0` of a sliced tree to its
//! attachment vertex `α_N` on the loop carries, per node, the coefficients of
//! the line `k·x + l·z + m = 0` cut out by the corresponding component. The
//! leading term of the obstruction it contributes is
//! `(k_0/m_0)·∏_{0<i<N}(l_i k_i / m_i²)·(l_N/m_N)·t^M` with `M` the
//! weight-normalized path length. A four-valent node of the merged-edge type
//! contributes `a/b` instead, so `a = 0` kills the leading term.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::curve_model::TropicalCurve;
use crate::exact_linalg::{dot_mixed, fmt_rat, rank, Int, IntVec, Rat, RatVec};
use crate::obstruction_space::ObstructionBasis;
use crate::well_spacedness::{flat_basis, generic_point, well_spaced_check, Slicer, WellSpacedError};

#[derive(Debug, Error)]
pub enum KuranishiError {
    #[error("path length {0} is not an integer")]
    NonIntegralOrder(String),
    #[error("curve is not well-spaced")]
    NotWellSpaced,
    #[error("edge directions do not span the ambient space")]
    DirectionsDoNotSpan,
    #[error("missing configuration: {0}")]
    MissingConfig(String),
    #[error("modulus must exceed 1, got {0}")]
    NonPositiveModulus(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    WellSpaced(#[from] WellSpacedError),
}

/// Coefficients attached to one node of a path.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeCoefficients {
    /// The line `k·x + l·z + m = 0`. Only `k, m` are used at the start of a
    /// path and only `l, m` at its end.
    Trivalent { k: Rat, l: Rat, m: Rat },
    /// The conic `x² + a·x + b + c·z = 0` of a four-valent vertex with a
    /// merged incident edge.
    Conic { a: Rat, b: Rat },
}

impl NodeCoefficients {
    pub fn ones() -> Self {
        NodeCoefficients::Trivalent { k: Rat::one(), l: Rat::one(), m: Rat::one() }
    }

    fn scaled(&self, s: &Rat) -> Self {
        match self {
            NodeCoefficients::Trivalent { k, l, m } => NodeCoefficients::Trivalent { k: k * s, l: l * s, m: m * s },
            NodeCoefficients::Conic { a, b } => NodeCoefficients::Conic { a: a * s, b: b * s },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Start,
    Interior,
    End,
}

/// Names of the coefficients a node contributes through, given its role.
fn variables(node: &NodeCoefficients, role: Role) -> &'static [&'static str] {
    match (node, role) {
        (NodeCoefficients::Conic { .. }, _) => &["a", "b"],
        (_, Role::Start) => &["k", "m"],
        (_, Role::Interior) => &["l", "k", "m"],
        (_, Role::End) => &["l", "m"],
    }
}

/// Value of a node's factor and its partial derivatives in [`variables`] order.
fn factor(node: &NodeCoefficients, role: Role) -> (Rat, Vec<Rat>) {
    match node {
        NodeCoefficients::Conic { a, b } => (a / b, vec![b.recip(), -(a / (b * b))]),
        NodeCoefficients::Trivalent { k, l, m } => match role {
            Role::Start => (k / m, vec![m.recip(), -(k / (m * m))]),
            Role::End => (l / m, vec![m.recip(), -(l / (m * m))]),
            Role::Interior => {
                let m2 = m * m;
                (l * k / &m2, vec![k / &m2, l / &m2, -(Rat::from_integer(2.into()) * l * k / (&m2 * m))])
            }
        },
    }
}

/// One edge of a path: its weight and integral (lattice) length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub weight: u64,
    pub length: Rat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreLogPathConfig {
    /// Vertex ids from the one-valent vertex to the attachment vertex.
    pub path: Vec<String>,
    pub nodes: Vec<NodeCoefficients>,
    pub steps: Vec<PathStep>,
    /// Direction of the obstruction section at the one-valent vertex.
    pub direction: IntVec,
    /// Segment whose covector is paired with `direction`; `None` means the
    /// only segment of a genus-one curve.
    pub segment: Option<usize>,
}

impl PreLogPathConfig {
    pub fn validate(&self) -> Result<(), KuranishiError> {
        let bad = |s: String| Err(KuranishiError::InvalidConfig(s));
        if self.path.len() < 2 {
            return bad("a path needs at least two vertices".into());
        }
        if self.nodes.len() != self.path.len() || self.steps.len() + 1 != self.path.len() {
            return bad(format!(
                "{} vertices need {} nodes and {} steps, got {} and {}",
                self.path.len(),
                self.path.len(),
                self.path.len() - 1,
                self.nodes.len(),
                self.steps.len()
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let ok = match node {
                NodeCoefficients::Trivalent { k, l, m } => !k.is_zero() && !l.is_zero() && !m.is_zero(),
                NodeCoefficients::Conic { b, .. } => !b.is_zero(),
            };
            if !ok {
                return bad(format!("degenerate coefficients at {}", self.path[i]));
            }
        }
        if let Some(s) = self.steps.iter().find(|s| s.weight == 0 || !s.length.is_positive()) {
            return bad(format!("step with weight {} and length {}", s.weight, fmt_rat(&s.length)));
        }
        Ok(())
    }

    fn role(&self, i: usize) -> Role {
        if i == 0 {
            Role::Start
        } else if i + 1 == self.nodes.len() {
            Role::End
        } else {
            Role::Interior
        }
    }

    /// `Σ r/w` along the path.
    pub fn path_length(&self) -> Rat {
        self.steps.iter().map(|s| &s.length / Rat::from_integer(BigInt::from(s.weight))).sum()
    }

    /// Multiplies every coefficient of node `i` by `s`.
    pub fn rescale_node(&self, i: usize, s: &Rat) -> Self {
        let mut out = self.clone();
        out.nodes[i] = self.nodes[i].scaled(s);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadingContribution {
    pub order: Int,
    pub coefficient: Rat,
    pub direction: IntVec,
    pub segment: Option<usize>,
}

pub fn leading_contribution(config: &PreLogPathConfig) -> Result<LeadingContribution, KuranishiError> {
    config.validate()?;
    let m = config.path_length();
    if !m.is_integer() {
        return Err(KuranishiError::NonIntegralOrder(fmt_rat(&m)));
    }
    let coefficient = (0..config.nodes.len()).map(|i| factor(&config.nodes[i], config.role(i)).0).product();
    Ok(LeadingContribution { order: m.to_integer(), coefficient, direction: config.direction.clone(), segment: config.segment })
}

/// Partial derivatives of the leading coefficient, keyed by (node, variable).
pub fn coefficient_gradient(config: &PreLogPathConfig) -> Vec<((usize, &'static str), Rat)> {
    let parts: Vec<(Rat, Vec<Rat>)> = (0..config.nodes.len()).map(|i| factor(&config.nodes[i], config.role(i))).collect();
    let mut out = Vec::new();
    for (i, (_, grad)) in parts.iter().enumerate() {
        // Product of the other factors, without dividing (factors may vanish).
        let rest: Rat = parts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.0.clone()).product();
        for (name, g) in variables(&config.nodes[i], config.role(i)).iter().zip(grad) {
            out.push(((i, *name), &rest * g));
        }
    }
    out
}

/// Rescales by a root of unity across step `edge`: the near side's `k` by `λ`
/// and the far side's `l` by `λ⁻¹`. Over ℚ the root condition is not
/// visible, so any nonzero `λ` is accepted.
pub fn zeta_twist(config: &PreLogPathConfig, edge: usize, root_order: u64, lambda: &Rat) -> Result<PreLogPathConfig, KuranishiError> {
    let step = config
        .steps
        .get(edge)
        .ok_or_else(|| KuranishiError::InvalidConfig(format!("no step {edge}")))?;
    if lambda.is_zero() || root_order == 0 || step.weight != root_order {
        return Err(KuranishiError::InvalidConfig(format!(
            "twist of order {root_order} by {} across a weight-{} edge",
            fmt_rat(lambda),
            step.weight
        )));
    }
    let mut out = config.clone();
    match &mut out.nodes[edge] {
        NodeCoefficients::Trivalent { k, .. } => *k *= lambda,
        NodeCoefficients::Conic { a, .. } => *a *= lambda,
    }
    match &mut out.nodes[edge + 1] {
        NodeCoefficients::Trivalent { l, .. } => *l /= lambda,
        NodeCoefficients::Conic { b, .. } => *b *= lambda,
    }
    Ok(out)
}

/// Sums `Σ_i ⟨𝔞_j, d_i⟩·c_i` grouped by order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingTable {
    pub by_order: BTreeMap<Int, Vec<Rat>>,
    pub minimal_order: Option<Int>,
    /// Whether every sum at the minimal order is zero.
    pub vanishes: bool,
}

fn pairing(h: &ObstructionBasis, j: usize, c: &LeadingContribution) -> Rat {
    let seg = c.segment.unwrap_or(0);
    h.basis[j].get(seg).map_or_else(Rat::zero, |u| Rat::from_integer(crate::exact_linalg::dot_int(u, &c.direction)))
}

pub fn pair_with_h(contributions: &[LeadingContribution], h: &ObstructionBasis) -> PairingTable {
    let mut by_order: BTreeMap<Int, Vec<Rat>> = BTreeMap::new();
    for c in contributions {
        let sums = by_order.entry(c.order.clone()).or_insert_with(|| vec![Rat::zero(); h.dimension()]);
        for (j, s) in sums.iter_mut().enumerate() {
            *s += pairing(h, j, c) * &c.coefficient;
        }
    }
    let minimal_order = by_order.keys().next().cloned();
    let vanishes = by_order.values().next().map_or(true, |s| s.iter().all(Zero::is_zero));
    PairingTable { by_order, minimal_order, vanishes }
}

/// One linear form `h_i` of the leading Kuranishi system.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingForm {
    /// Coordinates of `𝔞_i` in the basis of `H`.
    pub element: RatVec,
    /// Minimal path length for `𝔞_i`, in units of the order scale.
    pub order: Option<Int>,
    pub contributions: Vec<LeadingContribution>,
    /// Image-vertex path of each contribution, from the one-valent vertex.
    pub paths: Vec<Vec<usize>>,
    /// `⟨𝔞_i, d⟩` for each contribution.
    pub pairings: Vec<Rat>,
    /// `Σ ⟨𝔞_i, d⟩·c` over the minimal contributions at the base point.
    pub leading_sum: Rat,
    /// Coefficients over [`LeadingFormSystem::variables`].
    pub coefficients: RatVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadingFormSystem {
    /// (vertex id, coefficient name) for each first-order perturbation.
    pub variables: Vec<(String, &'static str)>,
    pub forms: Vec<LeadingForm>,
    /// Lengths are multiplied by this to make every order integral.
    pub order_scale: Int,
    pub declared_codimension: usize,
    pub rank: usize,
}

impl LeadingFormSystem {
    /// Codimension of the common zero set of the forms.
    pub fn codimension(&self) -> usize {
        self.rank
    }
}

/// Base coefficients keyed by vertex id; absent vertices use all ones.
pub type BaseCoefficients = BTreeMap<String, NodeCoefficients>;

/// Builds the adapted basis `𝔞_1, 𝔞_2, …` of `H` by the nested-subspace
/// procedure and differentiates the minimal-order contributions of each.
///
/// `𝔞_i` is a seeded generic element of the part of `H` annihilating every
/// direction at the minimal one-valent vertices already used. Each minimal
/// vertex's path becomes a [`PreLogPathConfig`] with coefficients from
/// `base`; `h_i` is `Σ ⟨𝔞_i, d⟩·∇c` over those paths.
pub fn leading_form_system(curve: &TropicalCurve, base: &BaseCoefficients, seed: u64) -> Result<LeadingFormSystem, KuranishiError> {
    if !curve.directions_span_ambient() {
        return Err(KuranishiError::DirectionsDoNotSpan);
    }
    let slicer = Slicer::new(curve)?;
    let h = slicer.basis();
    let a = h.dimension();
    if a > 0 && !well_spaced_check(curve, seed)?.0 {
        return Err(KuranishiError::NotWellSpaced);
    }
    let image = slicer.image();
    let vid = |v: usize| curve.vertices[image.vertices[v].members[0]].id.clone();
    let watch = |_: &[Rat]| -> Vec<RatVec> {
        let mut out = Vec::new();
        for m in 0..h.decomposition.segments.len() {
            for e in &image.edges {
                out.push((0..a).map(|j| Rat::from_integer(crate::exact_linalg::dot_int(&h.basis[j][m], &e.direction))).collect());
            }
        }
        out
    };

    let mut rows: Vec<RatVec> = Vec::new();
    let mut raw_forms = Vec::new();
    let mut chosen: Vec<RatVec> = Vec::new();
    for i in 0..a {
        let mut flat = flat_basis(&rows, a);
        if flat.is_empty() {
            // The used directions exhaust H: the rest of the basis pairs
            // trivially with them, so any complement of the chosen elements does.
            rows = chosen.clone();
            flat = flat_basis(&rows, a);
        }
        let element = generic_point(&flat, a, &watch, seed.wrapping_add(i as u64 * 0x1000))?;
        let covectors = h.combine(&element);
        let leaves = slicer.leaves(&element);
        let minimum = leaves.iter().map(|l| l.distance.clone()).min();
        let at_min: Vec<_> = leaves.iter().filter(|l| Some(&l.distance) == minimum.as_ref()).collect();
        let before = rank(&rows, a);
        for leaf in &at_min {
            for d in &leaf.off_directions {
                for m in 0..h.decomposition.segments.len() {
                    let row: RatVec = (0..a).map(|j| Rat::from_integer(crate::exact_linalg::dot_int(&h.basis[j][m], d))).collect();
                    if row.iter().any(|x| !x.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
        if rank(&rows, a) == before {
            // Nothing at this element pairs: continue in a complement of it.
            rows.push(element.clone());
        }
        let mut paths = Vec::new();
        for leaf in at_min {
            let d = leaf.off_directions.first().cloned().unwrap_or_default();
            let p = dot_mixed(&covectors[leaf.segment], &d);
            paths.push((leaf.clone(), d, p));
        }
        chosen.push(element.clone());
        raw_forms.push((element, minimum, paths));
    }

    // Common scale making every minimal length integral.
    let order_scale = raw_forms
        .iter()
        .filter_map(|(_, m, _)| m.as_ref())
        .fold(Int::one(), |acc, m| acc.lcm(m.denom()));
    let scale = Rat::from_integer(order_scale.clone());

    let mut var_index: BTreeMap<(String, &'static str), usize> = BTreeMap::new();
    let mut forms_sparse = Vec::new();
    for (element, minimum, paths) in raw_forms {
        let mut contributions = Vec::new();
        let mut leaf_paths = Vec::new();
        let mut pairings = Vec::new();
        let mut leading_sum = Rat::zero();
        let mut terms: BTreeMap<(String, &'static str), Rat> = BTreeMap::new();
        for (leaf, d, p) in paths {
            let config = path_config(&slicer, &leaf, d, base, &scale, &vid)?;
            let c = leading_contribution(&config)?;
            leading_sum += &p * &c.coefficient;
            for ((node, name), g) in coefficient_gradient(&config) {
                let key = (config.path[node].clone(), name);
                let next = var_index.len();
                var_index.entry(key.clone()).or_insert(next);
                *terms.entry(key).or_insert_with(Rat::zero) += &p * g;
            }
            contributions.push(c);
            leaf_paths.push(leaf.path);
            pairings.push(p);
        }
        let order = minimum.map(|m| (m * &scale).to_integer());
        forms_sparse.push((element, order, contributions, leaf_paths, pairings, leading_sum, terms));
    }
    let mut variables: Vec<(String, &'static str)> = vec![(String::new(), ""); var_index.len()];
    for (k, &i) in &var_index {
        variables[i] = k.clone();
    }
    let forms: Vec<LeadingForm> = forms_sparse
        .into_iter()
        .map(|(element, order, contributions, paths, pairings, leading_sum, terms)| {
            let mut coefficients = vec![Rat::zero(); variables.len()];
            for (k, v) in terms {
                coefficients[var_index[&k]] = v;
            }
            LeadingForm { element, order, contributions, paths, pairings, leading_sum, coefficients }
        })
        .collect();
    let matrix: Vec<RatVec> = forms.iter().map(|f| f.coefficients.clone()).collect();
    let rank = rank(&matrix, variables.len());
    Ok(LeadingFormSystem { variables, forms, order_scale, declared_codimension: a, rank })
}

fn path_config(
    slicer: &Slicer,
    leaf: &crate::well_spacedness::SlicedLeaf,
    direction: IntVec,
    base: &BaseCoefficients,
    scale: &Rat,
    vid: &dyn Fn(usize) -> String,
) -> Result<PreLogPathConfig, KuranishiError> {
    let image = slicer.image();
    let path: Vec<String> = leaf.path.iter().map(|&v| vid(v)).collect();
    let mut nodes = Vec::new();
    for (i, id) in path.iter().enumerate() {
        let default = if i == 0 && leaf.merged_edge {
            NodeCoefficients::Conic { a: Rat::one(), b: Rat::one() }
        } else {
            NodeCoefficients::ones()
        };
        nodes.push(base.get(id).cloned().unwrap_or(default));
    }
    let mut steps = Vec::new();
    for w in leaf.path.windows(2) {
        let e = image
            .neighbours(w[0])
            .into_iter()
            .find(|&(_, x)| x == w[1])
            .map(|(e, _)| e)
            .ok_or_else(|| KuranishiError::MissingConfig(format!("no edge between {} and {}", vid(w[0]), vid(w[1]))))?;
        let weight = *image.edges[e].weights.first().unwrap();
        let length = image.normalized_length(e).unwrap() * Rat::from_integer(weight.into()) * scale;
        steps.push(PathStep { weight, length });
    }
    Ok(PreLogPathConfig { path, nodes, steps, direction, segment: Some(leaf.segment) })
}

/// A coefficient ratio `coefficient · τ^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRatio {
    pub coefficient: Rat,
    pub exponent: Rat,
}

impl ScaledRatio {
    /// `log|coefficient · τ^exponent|`, computed without forming the power.
    pub fn ln_abs(&self, ln_tau: f64) -> f64 {
        ln_abs_rat(&self.coefficient) + self.exponent.to_f64().unwrap_or(f64::NAN) * ln_tau
    }
}

fn ln_abs_rat(x: &Rat) -> f64 {
    // Ratios of big integers can overflow f64; subtract bit lengths first.
    let (n, d) = (x.numer().abs(), x.denom().clone());
    let shift = n.bits().max(d.bits()).saturating_sub(60);
    let nf = (&n >> shift).to_f64().unwrap_or(f64::NAN);
    let df = (&d >> shift).to_f64().unwrap_or(f64::NAN);
    if nf > 0.0 && df > 0.0 {
        nf.ln() - df.ln()
    } else {
        n.to_f64().unwrap_or(f64::NAN).ln() - d.to_f64().unwrap_or(f64::NAN).ln()
    }
}

/// The ratios `k/m` and `l/m` of one node at modulus `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRatios {
    pub k_over_m: ScaledRatio,
    pub l_over_m: ScaledRatio,
}

/// Edge lengths of the tropicalization with modulus `τ` along a chain of
/// nodes: edge `i` joins nodes `i` and `i + 1` and has length
/// `(log|k_i/m_i| + log|l_{i+1}/m_{i+1}|) / log τ`.
pub fn tropicalization_lengths(nodes: &[NodeRatios], tau: f64) -> Result<Vec<f64>, KuranishiError> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(KuranishiError::NonPositiveModulus(tau));
    }
    if nodes.iter().any(|n| n.k_over_m.coefficient.is_zero() || n.l_over_m.coefficient.is_zero()) {
        return Err(KuranishiError::InvalidConfig("zero coefficient ratio".into()));
    }
    let lt = tau.ln();
    Ok(nodes.windows(2).map(|w| (w[0].k_over_m.ln_abs(lt) + w[1].l_over_m.ln_abs(lt)) / lt).collect())
}

/// `d(𝓟) − d(𝓟′) − log|c| / log τ` for two chains at modulus `τ`, together
/// with the two path lengths.
pub fn edge_length_residual(p: &[NodeRatios], q: &[NodeRatios], c: &Rat, tau: f64) -> Result<(f64, f64, f64), KuranishiError> {
    if c.is_zero() {
        return Err(KuranishiError::InvalidConfig("matching constant is zero".into()));
    }
    let dp: f64 = tropicalization_lengths(p, tau)?.iter().sum();
    let dq: f64 = tropicalization_lengths(q, tau)?.iter().sum();
    Ok((dp - dq - ln_abs_rat(c) / tau.ln(), dp, dq))
}

/// The matching constant `c = −⟨𝔞, d′⟩ / ⟨𝔞, d⟩` that makes two
/// contributions cancel when `coef = c · coef′`.
pub fn matching_constant(covector: &[Int], d: &[Int], d_prime: &[Int]) -> Option<Rat> {
    let p = crate::exact_linalg::dot_int(covector, d);
    let q = crate::exact_linalg::dot_int(covector, d_prime);
    (!p.is_zero()).then(|| -Rat::new(q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_linalg::{int_vec, rat};

    fn tri(k: i64, l: i64, m: i64) -> NodeCoefficients {
        NodeCoefficients::Trivalent { k: rat(k, 1), l: rat(l, 1), m: rat(m, 1) }
    }

    fn config(nodes: Vec<NodeCoefficients>) -> PreLogPathConfig {
        let n = nodes.len();
        PreLogPathConfig {
            path: (0..n).map(|i| format!("v{i}")).collect(),
            nodes,
            steps: (0..n - 1).map(|_| PathStep { weight: 1, length: rat(2, 1) }).collect(),
            direction: int_vec(&[0, 0, 1]),
            segment: None,
        }
    }

    #[test]
    fn ones_give_unit_coefficient() {
        let c = leading_contribution(&config(vec![tri(1, 1, 1); 4])).unwrap();
        assert_eq!(c.coefficient, Rat::one());
        assert_eq!(c.order, 6.into());
    }

    #[test]
    fn product_of_ratios() {
        // (2/3)·(5·7/11²)·(13/17)
        let c = leading_contribution(&config(vec![tri(2, 99, 3), tri(7, 5, 11), tri(99, 13, 17)])).unwrap();
        assert_eq!(c.coefficient, Rat::new((2 * 35 * 13).into(), (3 * 121 * 17).into()));
    }

    #[test]
    fn conic_node_with_zero_a_kills_the_term() {
        let cfg = config(vec![NodeCoefficients::Conic { a: rat(0, 1), b: rat(3, 1) }, tri(1, 2, 3)]);
        let c = leading_contribution(&cfg).unwrap();
        assert!(c.coefficient.is_zero());
        // The perturbation in `a` still moves it.
        let g = coefficient_gradient(&cfg);
        assert_eq!(g[0], ((0, "a"), rat(2, 9)));
    }

    #[test]
    fn fractional_order_is_rejected() {
        let mut cfg = config(vec![tri(1, 1, 1); 2]);
        cfg.steps[0] = PathStep { weight: 2, length: rat(3, 1) };
        assert!(matches!(leading_contribution(&cfg), Err(KuranishiError::NonIntegralOrder(_))));
    }

    #[test]
    fn twist_is_invisible() {
        let cfg = config(vec![tri(2, 3, 5), tri(7, 11, 13), tri(17, 19, 23)]);
        let c = leading_contribution(&cfg).unwrap();
        for lambda in [rat(1, 1), rat(-1, 1), rat(-7, 4)] {
            let t = zeta_twist(&cfg, 1, 1, &lambda).unwrap();
            assert_eq!(leading_contribution(&t).unwrap(), c);
        }
        assert!(zeta_twist(&cfg, 1, 2, &rat(1, 1)).is_err());
    }

    #[test]
    fn log_lengths_cancel() {
        let r = |c: i64, e: i64| ScaledRatio { coefficient: rat(c, 1), exponent: rat(e, 1) };
        let nodes = vec![
            NodeRatios { k_over_m: r(1, 2), l_over_m: r(1, 0) },
            NodeRatios { k_over_m: r(1, 0), l_over_m: r(1, 3) },
        ];
        for tau in [2.0, 1e3, 1e9] {
            let l = tropicalization_lengths(&nodes, tau).unwrap();
            assert!((l[0] - 5.0).abs() < 1e-12);
        }
        assert!(matches!(tropicalization_lengths(&nodes, 1.0), Err(KuranishiError::NonPositiveModulus(_))));
    }
}

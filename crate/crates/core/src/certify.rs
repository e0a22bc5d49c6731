//! First-order optimality certificates for Steiner vertices.
//!
//! At a Steiner vertex `s` with incoming neighbours `p_i` (flows `t_i`) and
//! outgoing neighbour `q` (flow `T = Σ t_i`), write `u_i = (p_i − s)*` and
//! `v = (q − s)*` for the dual unit vectors of the edge directions. The star
//! is
//!
//! * *balanced* when `Σ w(t_i) u_i + w(T) v = 0`, i.e. `s` is stationary for
//!   the cost with the topology held fixed;
//! * *collapsing* when `‖Σ_{i∈I} w(t_i) u_i‖_* ≤ w(Σ_{i∈I} t_i)` for every
//!   nonempty subset `I`, i.e. no group of incoming edges can be merged into
//!   a new Steiner vertex with a first-order gain.
//!
//! For a single-Steiner star the pair is necessary and sufficient for a
//! minimum arborescence. For larger trees the per-vertex conditions, together
//! with convexity in the Steiner coordinates, certify the positions for the
//! given topology only.

use thiserror::Error;

use crate::model::{Embedding, Instance, ModelError};
use crate::norms::{sub, NormError, NormSpace};
use crate::weights::WeightFunction;

/// Default relative tolerance; the absolute tolerance is this times `w(Σt)`.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Stars with more incoming edges than this are not checked subset by subset.
pub const MAX_STAR_DEGREE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("star needs at least one incoming edge")]
    EmptyStar,
    #[error("flow not conserved at the star centre: in {inflow}, out {outflow}")]
    Kirchhoff { inflow: f64, outflow: f64 },
    #[error("neighbour {index} coincides with the star centre")]
    CoincidentNeighbour { index: usize },
    #[error("star has {degree} incoming edges; subset enumeration is capped at {MAX_STAR_DEGREE}")]
    DegreeCap { degree: usize },
    #[error("zero-length edge at Steiner vertex {vertex}")]
    ZeroLengthEdge { vertex: String },
    #[error("{0} vectors but {1} tonnages")]
    LengthMismatch(usize, usize),
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("tonnage {0} is not positive")]
    NonPositiveTonnage(f64),
}

/// A vertex with its incoming neighbours and one outgoing neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct StarData {
    pub centre: Vec<f64>,
    /// `(neighbour, flow)` for every incoming edge.
    pub incoming: Vec<(Vec<f64>, f64)>,
    /// `(neighbour, flow)` of the outgoing edge.
    pub outgoing: (Vec<f64>, f64),
    pub space: NormSpace,
    pub weight: WeightFunction,
}

impl StarData {
    /// Validates flow conservation, dimensions and that no neighbour sits on
    /// the centre.
    pub fn new(
        centre: Vec<f64>,
        incoming: Vec<(Vec<f64>, f64)>,
        outgoing: (Vec<f64>, f64),
        space: NormSpace,
        weight: WeightFunction,
    ) -> Result<Self, CertifyError> {
        if incoming.is_empty() {
            return Err(CertifyError::EmptyStar);
        }
        let inflow: f64 = incoming.iter().map(|(_, t)| t).sum();
        let outflow = outgoing.1;
        if (inflow - outflow).abs() > 1e-9 * inflow.abs().max(1.0) {
            return Err(CertifyError::Kirchhoff { inflow, outflow });
        }
        for (i, (p, t)) in incoming.iter().chain(std::iter::once(&outgoing)).enumerate() {
            if !(t.is_finite() && *t > 0.0) {
                return Err(CertifyError::NonPositiveTonnage(*t));
            }
            let len = space.norm(&sub(p, &centre))?;
            if len <= space.zero_floor() {
                return Err(CertifyError::CoincidentNeighbour { index: i });
            }
        }
        Ok(Self {
            centre,
            incoming,
            outgoing,
            space,
            weight,
        })
    }

    /// `w(t_i) (p_i − s)*` for every incoming edge and `w(T) (q − s)*`.
    fn weighted_duals(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>), CertifyError> {
        let scaled = |p: &[f64], t: f64| -> Result<Vec<f64>, CertifyError> {
            let w = self.weight.eval_unchecked(t);
            Ok(self
                .space
                .dual_vector(&sub(p, &self.centre))?
                .into_iter()
                .map(|x| w * x)
                .collect())
        };
        let ins = self
            .incoming
            .iter()
            .map(|(p, t)| scaled(p, *t))
            .collect::<Result<_, _>>()?;
        let out = scaled(&self.outgoing.0, self.outgoing.1)?;
        Ok((ins, out))
    }
}

/// `‖Σ w(t_i) u_i + w(T) v‖_*`.
pub fn balancing_residual(star: &StarData) -> Result<f64, CertifyError> {
    let (ins, out) = star.weighted_duals()?;
    let mut sum = out;
    for u in &ins {
        for (s, x) in sum.iter_mut().zip(u) {
            *s += x;
        }
    }
    Ok(star.space.dual_norm_unchecked(&sum))
}

/// `w(Σ_{i∈I} t_i) − ‖Σ_{i∈I} w(t_i) u_i‖_*` for every nonempty subset `I`
/// of the incoming edges (indices into `star.incoming`). Nonnegative margins
/// mean the star is collapsing.
pub fn collapsing_margins(star: &StarData) -> Result<Vec<(Vec<usize>, f64)>, CertifyError> {
    let k = star.incoming.len();
    if k > MAX_STAR_DEGREE {
        return Err(CertifyError::DegreeCap { degree: k });
    }
    let (ins, _) = star.weighted_duals()?;
    let dim = star.space.dim();
    let mut out = Vec::with_capacity((1 << k) - 1);
    for mask in 1u32..(1 << k) {
        let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let mut sum = vec![0.0; dim];
        let mut flow = 0.0;
        for &i in &subset {
            flow += star.incoming[i].1;
            for (s, x) in sum.iter_mut().zip(&ins[i]) {
                *s += x;
            }
        }
        let margin = star.weight.eval_unchecked(flow) - star.space.dual_norm_unchecked(&sum);
        out.push((subset, margin));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Balancing,
    Collapsing,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::Balancing => "balancing",
            Condition::Collapsing => "collapsing",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified,
    /// First violated condition, at the named Steiner vertex.
    Violated { condition: Condition, vertex: usize },
    NotApplicable(String),
}

/// Per-Steiner-vertex numbers behind the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StarReport {
    pub vertex: usize,
    pub balancing_residual: f64,
    /// Margins keyed by the child vertex ids in the subset.
    pub collapsing_margins: Vec<(Vec<usize>, f64)>,
    pub min_collapsing_margin: f64,
    pub balanced: bool,
    pub collapsing: bool,
}

/// Stationarity residual at a terminal of degree > 1. Terminals are fixed,
/// so this is informational only.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalReport {
    pub vertex: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub stars: Vec<StarReport>,
    pub terminals: Vec<TerminalReport>,
    pub verdict: Verdict,
    /// Absolute tolerance used for every comparison.
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

fn star_at(inst: &Instance, emb: &Embedding, v: usize) -> Result<StarData, CertifyError> {
    let top = emb.topology();
    let incoming = top
        .children(v)
        .into_iter()
        .map(|c| (emb.position(c).to_vec(), emb.edge_from(c).expect("child edge").flow))
        .collect();
    let out = emb.edge_from(v).expect("Steiner vertex has a parent");
    StarData::new(
        emb.position(v).to_vec(),
        incoming,
        (emb.position(out.parent).to_vec(), out.flow),
        inst.space().clone(),
        *inst.weight(),
    )
}

/// Checks balancing and collapsing at every Steiner vertex of `emb`, with
/// absolute tolerance `tol_rel · w(Σt)`.
pub fn certify_embedding(
    inst: &Instance,
    emb: &Embedding,
    tol_rel: f64,
) -> Result<Certificate, CertifyError> {
    if !(tol_rel.is_finite() && tol_rel >= 0.0) {
        return Err(CertifyError::InvalidTolerance(tol_rel));
    }
    let top = emb.topology();
    let space = inst.space();
    let tolerance = tol_rel * inst.weight().eval_unchecked(inst.total_tonnage());

    for e in emb.edges() {
        if (top.is_steiner(e.child) || top.is_steiner(e.parent)) && e.length <= space.zero_floor() {
            let v = if top.is_steiner(e.child) { e.child } else { e.parent };
            return Err(CertifyError::ZeroLengthEdge {
                vertex: inst.vertex_label(v),
            });
        }
    }

    let mut notes = Vec::new();
    if !inst.weight().is_concave() {
        notes.push("weight not concave: optimality among all Gilbert networks is not implied".into());
    }
    match top.n_steiner() {
        0 => notes.push("no Steiner vertices: nothing to certify".into()),
        1 if top.steiner_vertices().all(|s| top.children(s).len() == inst.n_sources()) => notes.push(
            "single star: balancing and collapsing are necessary and sufficient for a minimum arborescence".into(),
        ),
        _ => notes.push(
            "several Steiner vertices: conditions certify the positions for this topology, not optimality over topologies".into(),
        ),
    }

    let mut stars = Vec::new();
    let mut verdict = Verdict::Certified;
    for v in top.steiner_vertices() {
        let star = star_at(inst, emb, v)?;
        let children = top.children(v);
        let balancing_residual = balancing_residual(&star)?;
        let balanced = balancing_residual <= tolerance;
        let margins = match collapsing_margins(&star) {
            Ok(m) => m,
            Err(CertifyError::DegreeCap { degree }) => {
                if verdict == Verdict::Certified {
                    verdict = Verdict::NotApplicable(format!(
                        "{} has {degree} incoming edges, above the subset cap of {MAX_STAR_DEGREE}",
                        inst.vertex_label(v)
                    ));
                }
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        let min_margin = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        let collapsing = min_margin >= -tolerance;
        if verdict == Verdict::Certified {
            if !balanced {
                verdict = Verdict::Violated { condition: Condition::Balancing, vertex: v };
            } else if !collapsing {
                verdict = Verdict::Violated { condition: Condition::Collapsing, vertex: v };
            }
        }
        stars.push(StarReport {
            vertex: v,
            balancing_residual,
            collapsing_margins: margins
                .into_iter()
                .map(|(s, m)| (s.into_iter().map(|i| children[i]).collect(), m))
                .collect(),
            min_collapsing_margin: min_margin,
            balanced,
            collapsing,
        });
    }

    let mut terminals = Vec::new();
    for v in 0..=inst.n_sources() {
        if top.is_steiner(v) || top.degree(v) < 2 {
            continue;
        }
        let mut sum = vec![0.0; space.dim()];
        let mut ok = true;
        let mut add = |other: usize, flow: f64| {
            let d = sub(emb.position(other), emb.position(v));
            match space.dual_vector(&d) {
                Ok(u) => {
                    let w = inst.weight().eval_unchecked(flow);
                    sum.iter_mut().zip(u).for_each(|(s, x)| *s += w * x);
                }
                Err(_) => ok = false,
            }
        };
        for c in top.children(v) {
            add(c, emb.edge_from(c).expect("child edge").flow);
        }
        if let Some(e) = emb.edge_from(v) {
            add(e.parent, e.flow);
        }
        if ok {
            terminals.push(TerminalReport {
                vertex: v,
                residual: space.dual_norm_unchecked(&sum),
            });
        }
    }

    Ok(Certificate {
        stars,
        terminals,
        verdict,
        tolerance,
        notes,
    })
}

/// Which inequality of the vector-form degree test failed.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorCheckFailure {
    /// `‖v_i‖ ≠ w(t_i)`.
    Norm { index: usize, norm: f64, weight: f64 },
    /// `‖Σ v_i‖ ≠ w(Σ t_i)`.
    Total { norm: f64, weight: f64 },
    /// `‖Σ_{i∈I} v_i‖ > w(Σ_{i∈I} t_i)` for a proper subset `I`.
    Subset { subset: Vec<usize>, norm: f64, weight: f64 },
}

/// Euclidean test that vectors `v_i` with tonnages `t_i` form the incoming
/// side of a balanced, collapsing star with outgoing vector `−Σ v_i`:
/// `‖v_i‖ = w(t_i)`, `‖Σ v_i‖ = w(Σ t_i)`, and
/// `‖Σ_{i∈I} v_i‖ ≤ w(Σ_{i∈I} t_i)` for every subset with `2 ≤ |I| < k`.
/// All comparisons use the absolute tolerance `tol · w(Σ t_i)`.
pub fn star_vector_check(
    vectors: &[Vec<f64>],
    tonnages: &[f64],
    w: &WeightFunction,
    tol: f64,
) -> Result<Result<(), VectorCheckFailure>, CertifyError> {
    if vectors.len() != tonnages.len() {
        return Err(CertifyError::LengthMismatch(vectors.len(), tonnages.len()));
    }
    let k = vectors.len();
    if k == 0 {
        return Err(CertifyError::EmptyStar);
    }
    if k > MAX_STAR_DEGREE {
        return Err(CertifyError::DegreeCap { degree: k });
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CertifyError::InvalidTolerance(tol));
    }
    if let Some(&t) = tonnages.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(CertifyError::NonPositiveTonnage(t));
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(NormError::DimensionMismatch { expected: dim, got: v.len() }.into());
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let total_t: f64 = tonnages.iter().sum();
    let abs_tol = tol * w.eval_unchecked(total_t);

    for (i, (v, &t)) in vectors.iter().zip(tonnages).enumerate() {
        let (n, wt) = (norm(v), w.eval_unchecked(t));
        if (n - wt).abs() > abs_tol {
            return Ok(Err(VectorCheckFailure::Norm { index: i, norm: n, weight: wt }));
        }
    }
    let sum_all = |idx: &[usize]| -> Vec<f64> {
        let mut s = vec![0.0; dim];
        for &i in idx {
            s.iter_mut().zip(&vectors[i]).for_each(|(a, b)| *a += b);
        }
        s
    };
    let all: Vec<usize> = (0..k).collect();
    let (n, wt) = (norm(&sum_all(&all)), w.eval_unchecked(total_t));
    if (n - wt).abs() > abs_tol {
        return Ok(Err(VectorCheckFailure::Total { norm: n, weight: wt }));
    }
    for mask in 1u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size < 2 || size == k {
            continue;
        }
        let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let t: f64 = subset.iter().map(|&i| tonnages[i]).sum();
        let (n, wt) = (norm(&sum_all(&subset)), w.eval_unchecked(t));
        if n > wt + abs_tol {
            return Ok(Err(VectorCheckFailure::Subset { subset, norm: n, weight: wt }));
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Source, Topology};

    fn unit(deg: f64) -> Vec<f64> {
        let r = deg.to_radians();
        vec![r.cos(), r.sin()]
    }

    fn balanced_triple() -> StarData {
        // equal weights on three edges at 120° balance exactly
        StarData::new(
            vec![0.0, 0.0],
            vec![(unit(90.0), 1.0), (unit(210.0), 1.0)],
            (unit(330.0), 2.0),
            NormSpace::euclidean(2).unwrap(),
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_star_has_zero_residual() {
        assert!(balancing_residual(&balanced_triple()).unwrap() < 1e-15);
        let m = collapsing_margins(&balanced_triple()).unwrap();
        assert_eq!(m.len(), 3);
        // the pair sums to a unit vector: margin 1 − 1 = 0
        assert!(m.iter().all(|(_, x)| *x > -1e-15));
    }

    #[test]
    fn star_validation() {
        let s = NormSpace::euclidean(2).unwrap();
        let w = WeightFunction::constant(1.0).unwrap();
        let bad_flow = StarData::new(vec![0.0, 0.0], vec![(unit(0.0), 1.0)], (unit(180.0), 2.0), s.clone(), w);
        assert!(matches!(bad_flow, Err(CertifyError::Kirchhoff { .. })));
        let coincident =
            StarData::new(vec![0.0, 0.0], vec![(vec![0.0, 0.0], 1.0)], (unit(180.0), 1.0), s.clone(), w);
        assert!(matches!(coincident, Err(CertifyError::CoincidentNeighbour { index: 0 })));
        let empty = StarData::new(vec![0.0, 0.0], vec![], (unit(180.0), 1.0), s, w);
        assert!(matches!(empty, Err(CertifyError::EmptyStar)));
    }

    #[test]
    fn degree_cap() {
        let incoming: Vec<_> = (0..13).map(|i| (unit(10.0 * i as f64), 1.0)).collect();
        let star = StarData::new(
            vec![0.0, 0.0],
            incoming,
            (unit(270.0), 13.0),
            NormSpace::euclidean(2).unwrap(),
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(collapsing_margins(&star), Err(CertifyError::DegreeCap { degree: 13 })));
    }

    #[test]
    fn vacuous_certificate_without_steiner_vertices() {
        let inst = Instance::new(
            vec![Source { point: vec![1.0, 0.0], tonnage: 1.0 }],
            vec![0.0, 0.0],
            NormSpace::euclidean(2).unwrap(),
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        let emb = Embedding::new(&inst, Topology::direct(1), vec![]).unwrap();
        let c = certify_embedding(&inst, &emb, DEFAULT_TOLERANCE).unwrap();
        assert!(c.is_certified());
        assert!(c.stars.is_empty());
    }

    #[test]
    fn zero_length_steiner_edge_is_an_error() {
        let inst = Instance::new(
            vec![
                Source { point: vec![1.0, 0.0], tonnage: 1.0 },
                Source { point: vec![0.0, 1.0], tonnage: 1.0 },
            ],
            vec![0.0, 0.0],
            NormSpace::euclidean(2).unwrap(),
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        let emb = Embedding::new(&inst, Topology::star(2), vec![vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            certify_embedding(&inst, &emb, DEFAULT_TOLERANCE),
            Err(CertifyError::ZeroLengthEdge { .. })
        ));
    }

    #[test]
    fn off_centre_star_violates_balancing() {
        let inst = Instance::new(
            vec![
                Source { point: vec![-1.0, 1.0], tonnage: 1.0 },
                Source { point: vec![1.0, 1.0], tonnage: 1.0 },
            ],
            vec![0.0, -1.0],
            NormSpace::euclidean(2).unwrap(),
            WeightFunction::constant(1.0).unwrap(),
        )
        .unwrap();
        let emb = Embedding::new(&inst, Topology::star(2), vec![vec![0.3, 0.0]]).unwrap();
        let c = certify_embedding(&inst, &emb, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(c.verdict, Verdict::Violated { condition: Condition::Balancing, vertex: 3 });
    }

    #[test]
    fn vector_check() {
        let w = WeightFunction::constant(1.0).unwrap();
        let ok = star_vector_check(&[unit(90.0), unit(210.0)], &[1.0, 1.0], &w, 1e-9).unwrap();
        assert!(ok.is_ok());
        let long = star_vector_check(&[vec![2.0, 0.0], unit(90.0)], &[1.0, 1.0], &w, 1e-9).unwrap();
        assert!(matches!(long, Err(VectorCheckFailure::Norm { index: 0, .. })));
        let total = star_vector_check(&[unit(0.0), unit(90.0)], &[1.0, 1.0], &w, 1e-9).unwrap();
        assert!(matches!(total, Err(VectorCheckFailure::Total { .. })));
        assert!(star_vector_check(&[unit(0.0)], &[1.0, 2.0], &w, 1e-9).is_err());
    }
}

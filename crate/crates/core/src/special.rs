//! Closed-form constructions: the weighted Melzak construction for two
//! sources in the euclidean plane, the split-routing counterexample, the
//! degree-4 star in three dimensions, and the scalar oracles behind the
//! degree bounds.

use thiserror::Error;

use crate::model::{
    Embedding, FlowEdge, GeneralNetwork, Instance, ModelError, NetworkNode, NodeRole, Source, Topology,
};
use crate::norms::NormSpace;
use crate::weights::WeightFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("points must lie in the plane and be finite")]
    NotPlanar,
    #[error("the two sources coincide")]
    CoincidentSources,
    #[error("tonnage {0} must be positive and finite")]
    InvalidTonnage(f64),
    #[error("need at least two tonnages, got {0}")]
    TooFewTonnages(usize),
    #[error("degree-4 condition fails for t = {t}: slack {slack}")]
    Infeasible { t: f64, slack: f64 },
    #[error("pairwise inner product {0} outside [-1/2, 1]")]
    LambdaOutOfRange(f64),
    #[error("split network ({split}) is not cheaper than the arborescence ({tree})")]
    CounterexampleFailed { split: f64, tree: f64 },
}

/// Optimal two-source star `p1, p2 → s → q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelzakSolution {
    /// Apex `p` of the weighted triangle erected on `p1p2` away from `q`.
    pub auxiliary_point: Vec<f64>,
    pub steiner_point: Vec<f64>,
    pub simpson_segment: (Vec<f64>, Vec<f64>),
    pub total_cost: f64,
    /// The construction left the triangle and `s` was taken from a corner.
    pub degenerate: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn circumcentre(a: &[f64], b: &[f64], c: &[f64]) -> Option<[f64; 2]> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d == 0.0 {
        return None;
    }
    let (a2, b2, c2) = (a[0] * a[0] + a[1] * a[1], b[0] * b[0] + b[1] * b[1], c[0] * c[0] + c[1] * c[1]);
    Some([
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ])
}

/// Weighted Melzak construction for sources `p1, p2` (tonnages `t1, t2`) and
/// sink `q` in the euclidean plane.
///
/// The apex `p` satisfies `‖p − p1‖ : ‖p − p2‖ : ‖p1 − p2‖ = w(t2) : w(t1) :
/// w(t1 + t2)`. The Steiner point is the second intersection of the line
/// `pq` with the circle through `p, p1, p2`, and the cost is
/// `w(t1 + t2) · ‖p − q‖`. When that point is not strictly inside the
/// triangle `p1 p2 q` the optimum sits at a corner and the cheapest corner is
/// returned.
pub fn melzak_two_source(
    p1: &[f64],
    p2: &[f64],
    q: &[f64],
    t1: f64,
    t2: f64,
    w: &WeightFunction,
) -> Result<MelzakSolution, SpecialError> {
    for p in [p1, p2, q] {
        if p.len() != 2 || !p.iter().all(|x| x.is_finite()) {
            return Err(SpecialError::NotPlanar);
        }
    }
    for t in [t1, t2] {
        if !(t.is_finite() && t > 0.0) {
            return Err(SpecialError::InvalidTonnage(t));
        }
    }
    let len = dist(p1, p2);
    if len == 0.0 {
        return Err(SpecialError::CoincidentSources);
    }
    let (w1, w2, wt) = (w.eval_unchecked(t1), w.eval_unchecked(t2), w.eval_unchecked(t1 + t2));
    let d1 = w2 / wt * len;
    let d2 = w1 / wt * len;
    let along = (d1 * d1 - d2 * d2 + len * len) / (2.0 * len);
    let height = (d1 * d1 - along * along).max(0.0).sqrt();
    let u = [(p2[0] - p1[0]) / len, (p2[1] - p1[1]) / len];
    let mut n = [-u[1], u[0]];
    if n[0] * (q[0] - p1[0]) + n[1] * (q[1] - p1[1]) > 0.0 {
        n = [-n[0], -n[1]];
    }
    let p = vec![
        p1[0] + along * u[0] + height * n[0],
        p1[1] + along * u[1] + height * n[1],
    ];

    let star = |s: &[f64]| w1 * dist(p1, s) + w2 * dist(p2, s) + wt * dist(s, q);
    let generic = circumcentre(&p, p1, p2).and_then(|c| {
        let d = [q[0] - p[0], q[1] - p[1]];
        let dd = d[0] * d[0] + d[1] * d[1];
        if dd == 0.0 {
            return None;
        }
        let tau = -2.0 * ((p[0] - c[0]) * d[0] + (p[1] - c[1]) * d[1]) / dd;
        let s = vec![p[0] + tau * d[0], p[1] + tau * d[1]];
        // strictly inside △p1p2q, with a margin relative to its size
        let area = cross(p1, p2, q);
        let margin = 1e-12 * area.abs();
        let inside = area != 0.0
            && [cross(p1, p2, &s), cross(p2, q, &s), cross(q, p1, &s)]
                .iter()
                .all(|c| c * area.signum() > margin);
        inside.then_some(s)
    });

    let (steiner_point, total_cost, degenerate) = match generic {
        Some(s) => (s, wt * dist(&p, q), false),
        None => {
            let corners = [p1, p2, q];
            let best = corners
                .iter()
                .map(|c| (c.to_vec(), star(c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("three corners");
            (best.0, best.1, true)
        }
    };
    Ok(MelzakSolution {
        simpson_segment: (p.clone(), q.to_vec()),
        auxiliary_point: p,
        steiner_point,
        total_cost,
        degenerate,
    })
}

/// The triangle with `‖p1 − p2‖ = 1`, `‖p1 − q‖ = ‖p2 − q‖ = 10`, tonnages
/// `(2, 4)` and weight `⌈(3t + 1)/2⌉`.
pub fn rounded_affine_triangle() -> Instance {
    let h = 99.75f64.sqrt();
    Instance::new(
        vec![
            Source { point: vec![0.0, 0.0], tonnage: 2.0 },
            Source { point: vec![1.0, 0.0], tonnage: 4.0 },
        ],
        vec![0.5, h],
        NormSpace::euclidean(2).expect("plane"),
        WeightFunction::rounded_affine(3.0, 1.0, 2.0).expect("valid weight"),
    )
    .expect("valid instance")
}

/// Split routing beating the best arborescence on [`rounded_affine_triangle`].
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub instance: Instance,
    /// One unit travels `p2 → p1`; both sources then ship 3 units to `q`.
    pub split_network: GeneralNetwork,
    pub split_cost: f64,
    pub melzak: MelzakSolution,
    pub arborescence: Embedding,
    pub arborescence_cost: f64,
}

pub fn split_counterexample() -> Result<Counterexample, SpecialError> {
    let instance = rounded_affine_triangle();
    let node = |v: usize, role| NetworkNode { point: instance.terminal(v).to_vec(), role };
    let split_network = GeneralNetwork {
        nodes: vec![
            node(0, NodeRole::Source { tonnage: 2.0 }),
            node(1, NodeRole::Source { tonnage: 4.0 }),
            node(2, NodeRole::Sink),
        ],
        edges: vec![
            FlowEdge { from: 1, to: 0, flow: 1.0 },
            FlowEdge { from: 0, to: 2, flow: 3.0 },
            FlowEdge { from: 1, to: 2, flow: 3.0 },
        ],
    };
    let split_cost = crate::model::general_network_cost(&split_network, instance.weight(), instance.space())?;
    let melzak = melzak_two_source(
        instance.terminal(0),
        instance.terminal(1),
        instance.sink(),
        2.0,
        4.0,
        instance.weight(),
    )?;
    let arborescence = Embedding::new(&instance, Topology::star(2), vec![melzak.steiner_point.clone()])?;
    let arborescence_cost = arborescence.cost();
    if split_cost >= arborescence_cost {
        return Err(SpecialError::CounterexampleFailed { split: split_cost, tree: arborescence_cost });
    }
    Ok(Counterexample {
        instance,
        split_network,
        split_cost,
        melzak,
        arborescence,
        arborescence_cost,
    })
}

/// Whether `3w(t)² + w(3t)² ≤ 3w(2t)²`, with the signed slack
/// `3w(2t)² − 3w(t)² − w(3t)²`. This is what three equal-flow incoming edges
/// need to form a balanced, collapsing star in three dimensions.
pub fn degree4_feasible(w: &WeightFunction, t: f64) -> Result<(bool, f64), SpecialError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(SpecialError::InvalidTonnage(t));
    }
    let (a, b, c) = (w.eval_unchecked(t), w.eval_unchecked(2.0 * t), w.eval_unchecked(3.0 * t));
    let slack = 3.0 * b * b - 3.0 * a * a - c * c;
    Ok((slack >= 0.0, slack))
}

/// Three unit vectors in `R³` with pairwise inner product `lambda`, symmetric
/// about the z-axis.
pub fn equiangular_unit_vectors(lambda: f64) -> Result<Vec<Vec<f64>>, SpecialError> {
    if !(-0.5..=1.0).contains(&lambda) {
        return Err(SpecialError::LambdaOutOfRange(lambda));
    }
    let z = ((1.0 + 2.0 * lambda) / 3.0).sqrt();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Ok((1..=3)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
            vec![r * a.cos(), r * a.sin(), z]
        })
        .collect())
}

/// A degree-4 Steiner star in euclidean `R³`.
#[derive(Debug, Clone)]
pub struct Degree4Star {
    pub lambda: f64,
    pub unit_vectors: Vec<Vec<f64>>,
    /// `w(t) · u_i`.
    pub vectors: Vec<Vec<f64>>,
    /// Sources at the unit vectors with tonnage `t`; sink at the unit vector
    /// opposite `Σ v_i`.
    pub instance: Instance,
    /// Star with its centre at the origin.
    pub embedding: Embedding,
}

/// Builds the star: `λ = w(3t)²/(6w(t)²) − 1/2` makes `‖Σ v_i‖ = w(3t)`, and
/// the degree-4 condition makes every pair satisfy `‖v_i + v_j‖ ≤ w(2t)`.
pub fn degree4_construct(w: &WeightFunction, t: f64) -> Result<Degree4Star, SpecialError> {
    let (ok, slack) = degree4_feasible(w, t)?;
    if !ok {
        return Err(SpecialError::Infeasible { t, slack });
    }
    let (w1, w3) = (w.eval_unchecked(t), w.eval_unchecked(3.0 * t));
    let lambda = w3 * w3 / (6.0 * w1 * w1) - 0.5;
    let unit_vectors = equiangular_unit_vectors(lambda)?;
    let vectors: Vec<Vec<f64>> = unit_vectors
        .iter()
        .map(|u| u.iter().map(|x| w1 * x).collect())
        .collect();
    let sum: Vec<f64> = (0..3).map(|k| vectors.iter().map(|v| v[k]).sum()).collect();
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sink: Vec<f64> = sum.iter().map(|x| -x / norm).collect();
    let instance = Instance::new(
        unit_vectors
            .iter()
            .map(|u| Source { point: u.clone(), tonnage: t })
            .collect(),
        sink,
        NormSpace::euclidean(3).expect("three dimensions"),
        *w,
    )?;
    let embedding = Embedding::new(&instance, Topology::star(3), vec![vec![0.0; 3]])?;
    Ok(Degree4Star {
        lambda,
        unit_vectors,
        vectors,
        instance,
        embedding,
    })
}

/// `(m−2)Σf(t_i) + f(Σt_i) − (m−1)(m−2)/2 · f(0) − Σ_{i<j} f(t_i + t_j)`.
/// Nonnegative whenever `f′` is convex; zero for `m = 2`.
pub fn pairwise_convexity_slack(f: impl Fn(f64) -> f64, tonnages: &[f64]) -> Result<f64, SpecialError> {
    let m = tonnages.len();
    if m < 2 {
        return Err(SpecialError::TooFewTonnages(m));
    }
    if let Some(&t) = tonnages.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(SpecialError::InvalidTonnage(t));
    }
    let mf = m as f64;
    let singles: f64 = tonnages.iter().map(|&t| f(t)).sum();
    let total = f(tonnages.iter().sum());
    let mut pairs = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            pairs += f(tonnages[i] + tonnages[j]);
        }
    }
    Ok((mf - 2.0) * singles + total - (mf - 1.0) * (mf - 2.0) / 2.0 * f(0.0) - pairs)
}

/// `3 + 3^(2α) − 3 · 2^(2α)`: zero at `α = 1/2` and `α = 1`, negative in
/// between.
pub fn f_alpha(alpha: f64) -> f64 {
    3.0 + 3f64.powf(2.0 * alpha) - 3.0 * 2f64.powf(2.0 * alpha)
}

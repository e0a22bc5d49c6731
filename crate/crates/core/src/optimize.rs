//! Steiner-point optimization for a fixed topology, degenerate-edge
//! contraction, vertex splitting, and the global search over topologies.
//!
//! For a fixed topology the flows, and hence the edge weights, are fixed, so
//! the cost `Σ_e w_e ‖x_u − x_v‖` is a convex function of the Steiner
//! coordinates. It is not differentiable where an edge has zero length, which
//! is exactly where optimal trees tend to sit (a Steiner point collapsing
//! onto a terminal or onto another Steiner point). The norm is therefore
//! replaced by a smoothed version with parameter `ε`, minimized by damped
//! Newton steps, and `ε` is annealed geometrically towards zero.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::certify::{self, Certificate, CertifyError};
use crate::model::{enumerate_full_topologies, Embedding, Instance, ModelError, Topology};
use crate::norms::sub;

/// Largest Steiner degree for which all vertex splits are tried.
pub const MAX_SPLIT_DEGREE: usize = 12;

/// Relative cost decrease a split must achieve to count as an improvement.
pub const SPLIT_IMPROVEMENT: f64 = 1e-9;

/// Edges up to this fraction of the diameter are tried for a neutral merge.
const NEAR_DEGENERATE: f64 = 1e-4;

/// Relative cost increase tolerated when merging a near-degenerate edge.
const NEUTRAL_CONTRACTION: f64 = 1e-12;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("invalid optimizer options: {0}")]
    InvalidOptions(String),
    #[error("Steiner vertex {vertex} has degree {degree}, above the split cap of {MAX_SPLIT_DEGREE}")]
    SplitDegreeCap { vertex: String, degree: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// First smoothing parameter, relative to the instance diameter.
    pub smoothing_eps_start: f64,
    /// Last smoothing parameter, relative to the instance diameter.
    pub smoothing_eps_end: f64,
    /// Factor applied to `ε` between stages.
    pub eps_decay: f64,
    /// Budget of Newton iterations over all stages.
    pub max_iters: usize,
    /// Final-stage step size (relative to the diameter) that counts as converged.
    pub position_tol: f64,
    /// Edges shorter than this fraction of the diameter are contracted.
    pub contract_tol: f64,
    /// Largest source count handed to the topology enumeration.
    pub enumeration_cap: usize,
    /// Relative tolerance for the final certificate.
    pub certificate_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            smoothing_eps_start: 1e-2,
            smoothing_eps_end: 1e-10,
            eps_decay: 0.25,
            max_iters: 10_000,
            position_tol: 1e-10,
            contract_tol: 1e-7,
            enumeration_cap: crate::model::DEFAULT_ENUMERATION_CAP,
            certificate_tol: certify::DEFAULT_TOLERANCE,
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let positive = [
            ("smoothing_eps_start", self.smoothing_eps_start),
            ("smoothing_eps_end", self.smoothing_eps_end),
            ("eps_decay", self.eps_decay),
            ("position_tol", self.position_tol),
            ("contract_tol", self.contract_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(OptimizeError::InvalidOptions(format!("{name} must be positive, got {v}")));
            }
        }
        if self.smoothing_eps_end >= self.smoothing_eps_start {
            return Err(OptimizeError::InvalidOptions(
                "smoothing_eps_end must be below smoothing_eps_start".into(),
            ));
        }
        if self.eps_decay >= 1.0 {
            return Err(OptimizeError::InvalidOptions("eps_decay must lie in (0, 1)".into()));
        }
        if !(self.certificate_tol.is_finite() && self.certificate_tol >= 0.0) {
            return Err(OptimizeError::InvalidOptions(format!(
                "certificate_tol must be nonnegative, got {}",
                self.certificate_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(OptimizeError::InvalidOptions("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a fixed-topology solve.
#[derive(Debug, Clone)]
pub struct OptimizedEmbedding {
    pub embedding: Embedding,
    /// The final smoothing stage met `position_tol` within the budget.
    pub converged: bool,
    pub iterations: usize,
    /// Smoothed objective after every accepted step and at every stage
    /// switch. Nonincreasing: steps pass an Armijo test and shrinking `ε`
    /// lowers the smoothed norm pointwise.
    pub objective_history: Vec<f64>,
}

struct Problem<'a> {
    inst: &'a Instance,
    n_terminals: usize,
    dim: usize,
    // (child, parent, weight)
    edges: Vec<(usize, usize, f64)>,
}

impl<'a> Problem<'a> {
    fn new(inst: &'a Instance, top: &Topology) -> Result<Self, ModelError> {
        let flows = top.derive_flows(&inst.tonnages())?;
        let w = inst.weight();
        let edges = top
            .edges()
            .map(|(c, p)| (c, p, w.eval_unchecked(flows[c])))
            .collect();
        Ok(Self {
            inst,
            n_terminals: inst.n_sources() + 1,
            dim: inst.space().dim(),
            edges,
        })
    }

    fn point<'b>(&'b self, v: usize, x: &'b [f64]) -> &'b [f64] {
        if v < self.n_terminals {
            self.inst.terminal(v)
        } else {
            let k = v - self.n_terminals;
            &x[k * self.dim..(k + 1) * self.dim]
        }
    }

    fn value(&self, x: &[f64], eps: f64) -> f64 {
        let space = self.inst.space();
        self.edges
            .iter()
            .map(|&(c, p, w)| w * space.smoothed_value(&sub(self.point(c, x), self.point(p, x)), eps))
            .sum()
    }

    fn value_grad_hess(&self, x: &[f64], eps: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let n = x.len();
        let space = self.inst.space();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        let mut total = 0.0;
        for &(c, p, w) in &self.edges {
            g.iter_mut().for_each(|v| *v = 0.0);
            h.iter_mut().for_each(|v| *v = 0.0);
            let diff = sub(self.point(c, x), self.point(p, x));
            total += w * space.smoothed_accumulate(&diff, eps, w, &mut g, &mut h);
            let slot = |v: usize| (v >= self.n_terminals).then(|| (v - self.n_terminals) * d);
            let (sc, sp) = (slot(c), slot(p));
            // d/dx_c = +∇f, d/dx_p = −∇f; Hessian blocks ±H
            for (a, sign_a) in [(sc, 1.0), (sp, -1.0)] {
                let Some(a) = a else { continue };
                for i in 0..d {
                    grad[a + i] += sign_a * g[i];
                }
                for (b, sign_b) in [(sc, 1.0), (sp, -1.0)] {
                    let Some(b) = b else { continue };
                    for i in 0..d {
                        for j in 0..d {
                            hess[(a + i) * n + b + j] += sign_a * sign_b * h[i * d + j];
                        }
                    }
                }
            }
        }
        (total, grad, hess)
    }
}

fn newton_direction(grad: &[f64], hess: Vec<f64>) -> Vec<f64> {
    let n = grad.len();
    let h = DMatrix::from_row_slice(n, n, &hess);
    let rhs = -DVector::from_column_slice(grad);
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..30 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(chol) = m.cholesky() {
            return chol.solve(&rhs).iter().copied().collect();
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
    }
    // steepest descent as a last resort
    rhs.iter().map(|v| v / scale).collect()
}

/// Default starting point: each Steiner vertex sits between the centroid of
/// the sources it collects and the sink.
fn initial_positions(inst: &Instance, top: &Topology) -> Vec<Vec<f64>> {
    let clusters = top.clusters();
    let dim = inst.space().dim();
    top.steiner_vertices()
        .map(|v| {
            let members = &clusters[v];
            let mut c = vec![0.0; dim];
            for &i in members {
                for (k, x) in inst.sources()[i].point.iter().enumerate() {
                    c[k] += x / members.len() as f64;
                }
            }
            c.iter()
                .zip(inst.sink())
                .map(|(a, b)| (2.0 * a + b) / 3.0)
                .collect()
        })
        .collect()
}

/// Minimizes the cost of `top` over its Steiner coordinates.
pub fn optimize_embedding(
    inst: &Instance,
    top: &Topology,
    opts: &OptimizeOptions,
) -> Result<OptimizedEmbedding, OptimizeError> {
    optimize_from(inst, top, initial_positions(inst, top), opts)
}

/// Like [`optimize_embedding`] but starting from the given Steiner
/// coordinates.
pub fn optimize_from(
    inst: &Instance,
    top: &Topology,
    start: Vec<Vec<f64>>,
    opts: &OptimizeOptions,
) -> Result<OptimizedEmbedding, OptimizeError> {
    opts.validate()?;
    if start.len() != top.n_steiner() {
        return Err(ModelError::SteinerCountMismatch {
            expected: top.n_steiner(),
            got: start.len(),
        }
        .into());
    }
    let problem = Problem::new(inst, top)?;
    let diam = inst.diameter();
    let mut x: Vec<f64> = start.into_iter().flatten().collect();

    if top.n_steiner() == 0 || diam == 0.0 {
        if diam == 0.0 {
            let sink = inst.sink();
            x = (0..top.n_steiner()).flat_map(|_| sink.iter().copied()).collect();
        }
        let embedding = Embedding::new(inst, top.clone(), unflatten(&x, problem.dim))?;
        return Ok(OptimizedEmbedding {
            objective_history: vec![embedding.cost()],
            embedding,
            converged: true,
            iterations: 0,
        });
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut eps_rel = opts.smoothing_eps_start;
    'stages: loop {
        let last_stage = eps_rel <= opts.smoothing_eps_end;
        let eps = eps_rel * diam;
        let tol = if last_stage {
            opts.position_tol * diam
        } else {
            (opts.position_tol * diam).max(1e-3 * eps)
        };
        let mut stage_done = false;
        let (mut f, mut grad, mut hess) = problem.value_grad_hess(&x, eps);
        history.push(f);
        while iterations < opts.max_iters {
            let dir = newton_direction(&grad, hess);
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            if !(slope < 0.0) {
                // stationary to machine precision
                stage_done = true;
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
                let ft = problem.value(&trial, eps);
                if ft <= f + ARMIJO * alpha * slope {
                    accepted = Some((trial, ft));
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            let Some((trial, _)) = accepted else {
                // no representable decrease left
                stage_done = true;
                break;
            };
            let step = dir.iter().fold(0.0_f64, |m, d| m.max((alpha * d).abs()));
            x = trial;
            (f, grad, hess) = problem.value_grad_hess(&x, eps);
            history.push(f);
            if step <= tol {
                stage_done = true;
                break;
            }
        }
        if !stage_done {
            break 'stages;
        }
        if last_stage {
            converged = true;
            break;
        }
        eps_rel = (eps_rel * opts.eps_decay).max(opts.smoothing_eps_end);
    }

    let embedding = Embedding::new(inst, top.clone(), unflatten(&x, problem.dim))?;
    Ok(OptimizedEmbedding {
        embedding,
        converged,
        iterations,
        objective_history: history,
    })
}

fn unflatten(x: &[f64], dim: usize) -> Vec<Vec<f64>> {
    x.chunks(dim).map(<[f64]>::to_vec).collect()
}

/// Merges every edge with a Steiner endpoint that is no longer than
/// `tol · diameter`. A Steiner vertex merged with a terminal disappears into
/// the terminal (which may then have degree > 1); two merged Steiner
/// vertices keep the parent's position. Only adjacent vertices are merged,
/// since identifying non-adjacent tree vertices would close a cycle.
pub fn contract_degenerate_edges(
    inst: &Instance,
    emb: &Embedding,
    tol: f64,
) -> Result<Embedding, ModelError> {
    let top = emb.topology();
    let n = top.n_sources();
    let threshold = tol * inst.diameter();
    let space = inst.space();
    let mut parent: Vec<Option<usize>> = top.parents().to_vec();
    let pos: Vec<Vec<f64>> = emb.positions().to_vec();
    let mut alive = vec![true; parent.len()];
    let is_steiner = |v: usize| v > n;

    loop {
        let mut shortest: Option<(f64, usize, usize)> = None;
        for c in 0..parent.len() {
            let Some(p) = parent[c] else { continue };
            if !alive[c] || !(is_steiner(c) || is_steiner(p)) {
                continue;
            }
            let len = space.norm_unchecked(&sub(&pos[c], &pos[p]));
            if len <= threshold && shortest.is_none_or(|(l, _, _)| len < l) {
                shortest = Some((len, c, p));
            }
        }
        let Some((_, c, p)) = shortest else { break };
        if is_steiner(c) {
            for v in 0..parent.len() {
                if parent[v] == Some(c) {
                    parent[v] = Some(p);
                }
            }
            alive[c] = false;
            parent[c] = None;
        } else {
            // terminal child absorbs its Steiner parent
            parent[c] = parent[p];
            for v in 0..parent.len() {
                if v != c && parent[v] == Some(p) {
                    parent[v] = Some(c);
                }
            }
            alive[p] = false;
            parent[p] = None;
        }
    }

    if alive.iter().all(|&a| a) {
        return Ok(emb.clone());
    }
    let mut remap = vec![usize::MAX; parent.len()];
    let mut next = n + 1;
    for v in 0..parent.len() {
        if v <= n {
            remap[v] = v;
        } else if alive[v] {
            remap[v] = next;
            next += 1;
        }
    }
    let new_parent: Vec<Option<usize>> = (0..parent.len())
        .filter(|&v| alive[v])
        .map(|v| parent[v].map(|p| remap[p]))
        .collect();
    let steiner: Vec<Vec<f64>> = (n + 1..parent.len())
        .filter(|&v| alive[v])
        .map(|v| pos[v].clone())
        .collect();
    Embedding::new(inst, Topology::new(n, new_parent)?, steiner)
}

/// Contracts degenerate edges and re-optimizes the contracted topology until
/// nothing is left to contract.
fn settle(
    inst: &Instance,
    mut current: OptimizedEmbedding,
    opts: &OptimizeOptions,
) -> Result<OptimizedEmbedding, OptimizeError> {
    for _ in 0..=inst.n_sources() {
        let contracted = contract_degenerate_edges(inst, &current.embedding, opts.contract_tol)?;
        if contracted.topology() == current.embedding.topology() {
            break;
        }
        let converged = current.converged;
        current = optimize_from(
            inst,
            contracted.topology(),
            contracted.steiner_positions().to_vec(),
            opts,
        )?;
        current.converged &= converged;
    }
    Ok(current)
}

/// [`settle`], then additionally merges short edges whose contraction costs
/// nothing. When a contraction is exactly neutral to first order (a
/// collapsing margin of zero) the smoothed optimum stays about `ε^(2/3)`
/// away from the merge point, above `contract_tol`; trying the merge and
/// comparing costs resolves those cases.
fn polish(
    inst: &Instance,
    current: OptimizedEmbedding,
    opts: &OptimizeOptions,
) -> Result<OptimizedEmbedding, OptimizeError> {
    let mut current = settle(inst, current, opts)?;
    let diam = inst.diameter();
    if diam == 0.0 {
        return Ok(current);
    }
    'outer: for _ in 0..=inst.n_sources() {
        let top = current.embedding.topology();
        let mut short: Vec<f64> = current
            .embedding
            .edges()
            .iter()
            .filter(|e| (top.is_steiner(e.child) || top.is_steiner(e.parent)) && e.length <= NEAR_DEGENERATE * diam)
            .map(|e| e.length)
            .collect();
        short.sort_by(f64::total_cmp);
        for len in short {
            let contracted = contract_degenerate_edges(inst, &current.embedding, len / diam * (1.0 + 1e-9))?;
            let trial = optimize_from(
                inst,
                contracted.topology(),
                contracted.steiner_positions().to_vec(),
                opts,
            )?;
            let trial = settle(inst, trial, opts)?;
            let base = current.embedding.cost();
            if trial.embedding.cost() <= base + NEUTRAL_CONTRACTION * base {
                let converged = current.converged;
                current = trial;
                current.converged &= converged;
                continue 'outer;
            }
        }
        break;
    }
    Ok(current)
}

/// Tries every way of splitting a subset of the incoming neighbours of a
/// Steiner vertex of degree ≥ 4 off to a new Steiner vertex, re-optimizes,
/// and returns the cheapest split that lowers the cost by more than
/// [`SPLIT_IMPROVEMENT`] (relative), if any.
pub fn split_improvement_scan(
    inst: &Instance,
    emb: &Embedding,
    opts: &OptimizeOptions,
) -> Result<Option<OptimizedEmbedding>, OptimizeError> {
    let top = emb.topology();
    let base = emb.cost();
    let mut candidates = Vec::new();
    for v in top.steiner_vertices() {
        let degree = top.degree(v);
        if degree < 4 {
            continue;
        }
        if degree > MAX_SPLIT_DEGREE {
            return Err(OptimizeError::SplitDegreeCap {
                vertex: inst.vertex_label(v),
                degree,
            });
        }
        let children = top.children(v);
        let k = children.len();
        for mask in 1u32..(1 << k) {
            let size = mask.count_ones() as usize;
            if size < 2 || size + 1 > k {
                continue;
            }
            let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| children[i]).collect();
            candidates.push((v, subset));
        }
    }

    let results: Vec<Result<OptimizedEmbedding, OptimizeError>> = candidates
        .par_iter()
        .map(|(v, subset)| {
            let mut parent = top.parents().to_vec();
            let u = parent.len();
            parent.push(Some(*v));
            for &c in subset {
                parent[c] = Some(u);
            }
            let split = Topology::new(top.n_sources(), parent)?;
            let centre = emb.position(*v);
            let mut toward = vec![0.0; centre.len()];
            for &c in subset {
                for (t, (a, b)) in toward.iter_mut().zip(emb.position(c).iter().zip(centre)) {
                    *t += (a - b) / subset.len() as f64;
                }
            }
            let mut start = emb.steiner_positions().to_vec();
            start.push(centre.iter().zip(&toward).map(|(c, t)| c + 0.25 * t).collect());
            optimize_from(inst, &split, start, opts)
        })
        .collect();

    let mut best: Option<OptimizedEmbedding> = None;
    for r in results {
        let r = r?;
        let cost = r.embedding.cost();
        if cost < base - SPLIT_IMPROVEMENT * base
            && best.as_ref().is_none_or(|b| cost < b.embedding.cost())
        {
            best = Some(r);
        }
    }
    Ok(best)
}

/// A solved instance.
#[derive(Debug, Clone)]
pub struct MgaSolution {
    pub embedding: Embedding,
    pub certificate: Certificate,
    /// Every sub-solve that contributed to the answer converged.
    pub converged: bool,
    pub warnings: Vec<String>,
    pub topologies_evaluated: usize,
}

/// Warning attached to solutions whose weight function is not concave.
pub const NON_CONCAVE_WARNING: &str = "weight not concave: arborescence may not be globally optimal";

/// Finds a minimum Gilbert arborescence: optimizes every full topology,
/// contracts degenerate edges, keeps the cheapest result (ties go to the
/// smallest canonical topology key), applies improving splits until none is
/// left, and certifies the outcome.
pub fn solve_mga(inst: &Instance, opts: &OptimizeOptions) -> Result<MgaSolution, OptimizeError> {
    opts.validate()?;
    let mut warnings = Vec::new();
    if !inst.weight().is_concave() {
        warnings.push(NON_CONCAVE_WARNING.to_string());
    }
    for (a, b) in inst.duplicate_terminals() {
        warnings.push(format!(
            "terminals {} and {} coincide",
            inst.vertex_label(a),
            inst.vertex_label(b)
        ));
    }

    let topologies = enumerate_full_topologies(inst.n_sources(), opts.enumeration_cap)?;
    let solved: Vec<Result<OptimizedEmbedding, OptimizeError>> = topologies
        .par_iter()
        .map(|top| polish(inst, optimize_embedding(inst, top, opts)?, opts))
        .collect();
    let solved: Vec<OptimizedEmbedding> = solved.into_iter().collect::<Result<_, _>>()?;

    let min_cost = solved
        .iter()
        .map(|s| s.embedding.cost())
        .fold(f64::INFINITY, f64::min);
    let window = min_cost + 1e-10 * min_cost.abs();
    let mut best = solved
        .into_iter()
        .filter(|s| s.embedding.cost() <= window)
        .min_by_key(|s| s.embedding.topology().canonical_key())
        .expect("enumeration yields at least one topology");

    for _ in 0..4 * inst.n_sources() {
        match split_improvement_scan(inst, &best.embedding, opts)? {
            Some(better) => {
                let converged = best.converged;
                best = polish(inst, better, opts)?;
                best.converged &= converged;
            }
            None => break,
        }
    }

    if !best.converged {
        warnings.push("optimizer did not reach the position tolerance".to_string());
    }
    let certificate = certify::certify_embedding(inst, &best.embedding, opts.certificate_tol)?;
    Ok(MgaSolution {
        embedding: best.embedding,
        certificate,
        converged: best.converged,
        warnings,
        topologies_evaluated: topologies.len(),
    })
}

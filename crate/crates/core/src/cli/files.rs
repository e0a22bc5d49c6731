//! JSON instance and solution files.
//!
//! Numbers are written in shortest round-trip form and parsed with correct
//! rounding, so `parse_instance(instance_to_json(i)) == i` bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{Certificate, Verdict};
use crate::model::{Embedding, Instance, ModelError, Source, Topology};
use crate::norms::{NormError, NormKind, NormSpace};
use crate::weights::{WeightError, WeightFunction};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing key `{key}` for {context}")]
    MissingKey { key: &'static str, context: String },
    #[error("key `{key}` does not apply to {context}")]
    UnexpectedKey { key: &'static str, context: String },
    #[error("unknown {what} kind `{kind}`")]
    UnknownKind { what: &'static str, kind: String },
    #[error("`dim` is {dim} but the norm is defined on dimension {norm_dim}")]
    DimMismatch { dim: usize, norm_dim: usize },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solution does not match instance: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub point: Vec<f64>,
    pub tonnage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dim: usize,
    pub norm: NormSpec,
    pub weight: WeightSpec,
    pub sources: Vec<SourceSpec>,
    pub sink: Vec<f64>,
}

impl NormSpec {
    fn to_space(&self, dim: usize) -> Result<NormSpace, FileError> {
        let context = || format!("norm kind `{}`", self.kind);
        match self.kind.as_str() {
            "euclidean" => {
                if self.p.is_some() {
                    return Err(FileError::UnexpectedKey { key: "p", context: context() });
                }
                Ok(NormSpace::euclidean(dim)?)
            }
            "p" => {
                let p = self.p.ok_or_else(|| FileError::MissingKey { key: "p", context: context() })?;
                Ok(NormSpace::p_norm(p, dim)?)
            }
            other => Err(FileError::UnknownKind { what: "norm", kind: other.to_string() }),
        }
    }

    fn from_space(space: &NormSpace) -> Self {
        match space.kind() {
            NormKind::Euclidean => Self { kind: "euclidean".into(), p: None },
            NormKind::P(p) => Self { kind: "p".into(), p: Some(p) },
        }
    }
}

impl WeightSpec {
    fn to_weight(&self) -> Result<WeightFunction, FileError> {
        let keys: [(&'static str, Option<f64>); 6] = [
            ("d", self.d),
            ("h", self.h),
            ("alpha", self.alpha),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
        ];
        let required: &[&str] = match self.kind.as_str() {
            "constant" => &["d"],
            "affine" => &["d", "h"],
            "power" => &["d", "h", "alpha"],
            "rounded_affine" => &["a", "b", "c"],
            other => return Err(FileError::UnknownKind { what: "weight", kind: other.to_string() }),
        };
        let context = || format!("weight kind `{}`", self.kind);
        for (key, value) in keys {
            match (required.contains(&key), value) {
                (true, None) => return Err(FileError::MissingKey { key, context: context() }),
                (false, Some(_)) => return Err(FileError::UnexpectedKey { key, context: context() }),
                _ => {}
            }
        }
        let v = |x: Option<f64>| x.expect("checked above");
        Ok(match self.kind.as_str() {
            "constant" => WeightFunction::constant(v(self.d))?,
            "affine" => WeightFunction::affine(v(self.d), v(self.h))?,
            "power" => WeightFunction::power(v(self.d), v(self.h), v(self.alpha))?,
            _ => WeightFunction::rounded_affine(v(self.a), v(self.b), v(self.c))?,
        })
    }

    fn from_weight(w: &WeightFunction) -> Self {
        match *w {
            WeightFunction::Constant { d } => Self { kind: "constant".into(), d: Some(d), ..Default::default() },
            WeightFunction::Affine { d, h } => {
                Self { kind: "affine".into(), d: Some(d), h: Some(h), ..Default::default() }
            }
            WeightFunction::Power { d, h, alpha } => Self {
                kind: "power".into(),
                d: Some(d),
                h: Some(h),
                alpha: Some(alpha),
                ..Default::default()
            },
            WeightFunction::RoundedAffine { a, b, c } => Self {
                kind: "rounded_affine".into(),
                a: Some(a),
                b: Some(b),
                c: Some(c),
                ..Default::default()
            },
        }
    }
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance, FileError> {
        let space = self.norm.to_space(self.dim)?;
        if space.dim() != self.dim {
            return Err(FileError::DimMismatch { dim: self.dim, norm_dim: space.dim() });
        }
        let weight = self.weight.to_weight()?;
        let sources = self
            .sources
            .iter()
            .map(|s| Source { point: s.point.clone(), tonnage: s.tonnage })
            .collect();
        Ok(Instance::new(sources, self.sink.clone(), space, weight)?)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            dim: inst.space().dim(),
            norm: NormSpec::from_space(inst.space()),
            weight: WeightSpec::from_weight(inst.weight()),
            sources: inst
                .sources()
                .iter()
                .map(|s| SourceSpec { point: s.point.clone(), tonnage: s.tonnage })
                .collect(),
            sink: inst.sink().to_vec(),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, FileError> {
    serde_json::from_str::<InstanceFile>(text)?.to_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Source,
    Sink,
    Steiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    pub kind: VertexKind,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub flow: f64,
    pub weight: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarSpec {
    pub vertex: String,
    pub balancing_residual: f64,
    /// `null` when the subsets were not enumerated.
    pub min_collapsing_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub verdict: String,
    pub stars: Vec<StarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub cost: f64,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    pub certificate: CertificateSpec,
    pub converged: bool,
}

pub fn verdict_text(inst: &Instance, v: &Verdict) -> String {
    match v {
        Verdict::Certified => "certified".into(),
        Verdict::Violated { condition, vertex } => {
            format!("violated: {condition} at {}", inst.vertex_label(*vertex))
        }
        Verdict::NotApplicable(reason) => format!("not applicable: {reason}"),
    }
}

impl SolutionFile {
    pub fn new(inst: &Instance, emb: &Embedding, cert: &Certificate, converged: bool) -> Self {
        let n = inst.n_sources();
        let vertices = (0..emb.topology().n_vertices())
            .map(|v| VertexSpec {
                id: inst.vertex_label(v),
                kind: match v.cmp(&n) {
                    std::cmp::Ordering::Less => VertexKind::Source,
                    std::cmp::Ordering::Equal => VertexKind::Sink,
                    std::cmp::Ordering::Greater => VertexKind::Steiner,
                },
                point: emb.position(v).to_vec(),
            })
            .collect();
        let edges = emb
            .edges()
            .iter()
            .map(|e| EdgeSpec {
                from: inst.vertex_label(e.child),
                to: inst.vertex_label(e.parent),
                flow: e.flow,
                weight: e.weight,
                length: e.length,
            })
            .collect();
        let stars = cert
            .stars
            .iter()
            .map(|s| StarSpec {
                vertex: inst.vertex_label(s.vertex),
                balancing_residual: s.balancing_residual,
                min_collapsing_slack: s.min_collapsing_margin.is_finite().then_some(s.min_collapsing_margin),
            })
            .collect();
        Self {
            cost: emb.cost(),
            vertices,
            edges,
            certificate: CertificateSpec { verdict: verdict_text(inst, &cert.verdict), stars },
            converged,
        }
    }

    /// Rebuilds the embedding against `inst`: terminals must sit where the
    /// instance puts them and the edges must form an arborescence whose
    /// flows agree with the tonnages.
    pub fn to_embedding(&self, inst: &Instance) -> Result<Embedding, FileError> {
        let n = inst.n_sources();
        let n_steiner = self.vertices.iter().filter(|v| v.kind == VertexKind::Steiner).count();
        let total = n + 1 + n_steiner;
        let index_of = |id: &str| -> Result<usize, FileError> {
            (0..total)
                .find(|&v| inst.vertex_label(v) == id)
                .ok_or_else(|| FileError::Mismatch(format!("unknown vertex id `{id}`")))
        };
        let mut positions: Vec<Option<Vec<f64>>> = vec![None; total];
        for vs in &self.vertices {
            let v = index_of(&vs.id)?;
            let expected = match v.cmp(&n) {
                std::cmp::Ordering::Less => VertexKind::Source,
                std::cmp::Ordering::Equal => VertexKind::Sink,
                std::cmp::Ordering::Greater => VertexKind::Steiner,
            };
            if vs.kind != expected {
                return Err(FileError::Mismatch(format!("vertex `{}` has the wrong kind", vs.id)));
            }
            if positions[v].replace(vs.point.clone()).is_some() {
                return Err(FileError::Mismatch(format!("vertex `{}` listed twice", vs.id)));
            }
        }
        let scale = inst.diameter().max(1.0);
        for v in 0..=n {
            let label = inst.vertex_label(v);
            let p = positions[v]
                .as_ref()
                .ok_or_else(|| FileError::Mismatch(format!("vertex `{label}` missing")))?;
            let t = inst.terminal(v);
            if p.len() != t.len() || p.iter().zip(t).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
                return Err(FileError::Mismatch(format!("vertex `{label}` is not at the instance position")));
            }
        }

        let mut parent = vec![None; total];
        for e in &self.edges {
            let (c, p) = (index_of(&e.from)?, index_of(&e.to)?);
            if parent[c].replace(p).is_some() {
                return Err(FileError::Mismatch(format!("vertex `{}` has two outgoing edges", e.from)));
            }
        }
        let topology = Topology::new(n, parent)?;
        let steiner = positions[n + 1..]
            .iter()
            .map(|p| p.clone().expect("every Steiner id was listed"))
            .collect();
        let emb = Embedding::new(inst, topology, steiner)?;
        for e in &self.edges {
            let c = index_of(&e.from)?;
            let derived = emb.edge_from(c).expect("edge exists").flow;
            if (derived - e.flow).abs() > 1e-9 * inst.total_tonnage() {
                return Err(FileError::Mismatch(format!(
                    "edge `{}` → `{}` carries {} but the tonnages give {derived}",
                    e.from, e.to, e.flow
                )));
            }
        }
        Ok(emb)
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, FileError> {
    Ok(serde_json::from_str(text)?)
}

pub fn solution_to_json(sol: &SolutionFile) -> String {
    serde_json::to_string_pretty(sol).expect("solution serializes")
}

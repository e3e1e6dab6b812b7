//! JSON and OFF input formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryOptions, Halfspace, Polytope, MAX_DIM};
use crate::perturbation::{DiscretePerturbation, PiecewiseAffineDensity};
use crate::quadrature::{AffinePiece, Polynomial};
use crate::transport::SignedAtomicMeasure;

/// `{"dim": n, "vertices": [...]}` or `{"dim": n, "halfspaces": [{"u": [...], "b": x}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PolytopeSpec {
    Vertices { dim: usize, vertices: Vec<Vec<f64>> },
    Halfspaces { dim: usize, halfspaces: Vec<HalfspaceSpec> },
}

/// `<u, x> <= b`; `u` need not be normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub u: Vec<f64>,
    pub b: f64,
}

impl PolytopeSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Vertices { dim, .. } | Self::Halfspaces { dim, .. } => *dim,
        }
    }

    pub fn build(&self, eps: f64) -> Result<Polytope> {
        let dim = self.dim();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let opts = GeometryOptions {
            eps,
            ..GeometryOptions::default()
        };
        match self {
            Self::Vertices { vertices, .. } => {
                check_rows(vertices.iter().map(Vec::len), dim)?;
                Polytope::from_vertices_with(vertices, &opts)
            }
            Self::Halfspaces { halfspaces, .. } => {
                check_rows(halfspaces.iter().map(|h| h.u.len()), dim)?;
                let hs = halfspaces
                    .iter()
                    .map(|h| {
                        let len = h.u.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if !(len > 0.0) || !h.b.is_finite() {
                            return Err(Error::InvalidArgument("halfspace needs a nonzero finite normal".into()));
                        }
                        Ok(Halfspace::new(h.u.iter().map(|x| x / len).collect(), h.b / len).expect("normal is nonzero"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Polytope::from_halfspaces_with(&hs, &opts)
            }
        }
    }

    pub fn from_polytope(p: &Polytope) -> Self {
        Self::Vertices {
            dim: p.dim(),
            vertices: p.vertices().to_vec(),
        }
    }
}

fn check_rows(mut lens: impl Iterator<Item = usize>, dim: usize) -> Result<()> {
    match lens.find(|&l| l != dim) {
        Some(got) => Err(Error::DimensionMismatch { expected: dim, got }),
        None => Ok(()),
    }
}

/// Vertex list of an OFF file in ℝ³; the faces are ignored and the hull is recomputed.
pub fn read_off(text: &str, eps: f64) -> Result<Polytope> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let bad = |what: &str| Error::InvalidArgument(format!("malformed OFF: {what}"));
    if tokens.next() != Some("OFF") {
        return Err(bad("missing OFF header"));
    }
    let mut count = || -> Result<usize> { tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad counts")) };
    let nv = count()?;
    let _faces = count()?;
    let _edges = count()?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let v = (0..3)
            .map(|_| tokens.next().and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| bad("bad vertex")))
            .collect::<Result<Vec<_>>>()?;
        vertices.push(v);
    }
    PolytopeSpec::Vertices { dim: 3, vertices }.build(eps)
}

/// `{"dim": n, "terms": [{"exp": [...], "coef": x}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub dim: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl PolynomialSpec {
    pub fn build(&self) -> Result<Polynomial> {
        Polynomial::from_terms(self.dim, self.terms.iter().map(|t| (t.exp.clone(), t.coef)))
    }

    pub fn from_polynomial(p: &Polynomial) -> Self {
        Self {
            dim: p.dim(),
            terms: p
                .terms()
                .map(|(e, c)| TermSpec {
                    exp: e.to_vec(),
                    coef: c,
                })
                .collect(),
        }
    }
}

/// `{"atoms": [{"x": [...], "w": s}, ...]}`, with an optional `"dim"` for empty measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub atoms: Vec<AtomSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: Vec<f64>,
    pub w: f64,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<SignedAtomicMeasure> {
        let dim = match (self.dim, self.atoms.first()) {
            (Some(d), _) => d,
            (None, Some(a)) => a.x.len(),
            (None, None) => return Err(Error::InvalidArgument("empty measure needs \"dim\"".into())),
        };
        SignedAtomicMeasure::new(dim, self.atoms.iter().map(|a| (a.x.clone(), a.w)))
    }

    pub fn from_measure(mu: &SignedAtomicMeasure) -> Self {
        Self {
            dim: Some(mu.dim()),
            atoms: mu
                .atoms()
                .iter()
                .map(|a| AtomSpec {
                    x: a.x.clone(),
                    w: a.w,
                })
                .collect(),
        }
    }
}

/// One facet density, `{"facet": i, "pieces": [{"a": [...], "b": x}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub facet: usize,
    pub pieces: Vec<PieceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub a: Vec<f64>,
    pub b: f64,
}

/// A list of facet densities on `p`.
pub fn build_perturbation(p: &Polytope, specs: &[DensitySpec]) -> Result<DiscretePerturbation> {
    let densities = specs
        .iter()
        .map(|d| {
            let pieces = d
                .pieces
                .iter()
                .map(|q| AffinePiece {
                    a: q.a.clone(),
                    b: q.b,
                })
                .collect();
            PiecewiseAffineDensity::new(p, d.facet, pieces)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscretePerturbation::new(p, densities)
}

pub fn perturbation_specs(mu: &DiscretePerturbation) -> Vec<DensitySpec> {
    mu.densities()
        .iter()
        .map(|d| DensitySpec {
            facet: d.facet(),
            pieces: d
                .pieces()
                .iter()
                .map(|q| PieceSpec { a: q.a.clone(), b: q.b })
                .collect(),
        })
        .collect()
}

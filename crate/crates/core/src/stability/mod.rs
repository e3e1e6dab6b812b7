//! First-order stability of moment functionals: the boundary inner product, reversible
//! conditions, cone projection of facet densities and lower-face certificates.

mod lower;
mod mesh;
mod projection;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generic_direction, Polytope};
use crate::isotropy::{h_function, CompositeMomentFunctional};
use crate::linalg::dot;
use crate::quadrature::{integrate_face, AffinePiece, FaceWeight, Polynomial};
use crate::perturbation::{build_family, family_at, DiscretePerturbation, PiecewiseAffineDensity, DELTA_GEN};

pub use lower::{lower_face_search, nelder_mead, LowerFaceCandidate, LowerFaceDensity};
pub use mesh::FaceMesh;
pub use projection::{facet_cone_projection, project_onto_cone, FacetProjection, ProjectionResult, KKT_TOL, MAX_SWEEPS};

/// Normalized pairing above which a cone direction certifies instability.
pub const STABILITY_TOL: f64 = 1e-6;
/// Bound on the reversible residuals for a weakly stable verdict.
pub const REVERSIBLE_TOL: f64 = 1e-7;
/// Allowed hinge excess, relative to the largest node value, for cone membership.
pub const CONE_TOL: f64 = 1e-6;
/// Default refinement and restart counts of [`stability_report`].
pub const DEFAULT_REFINEMENT: usize = 4;
pub const DEFAULT_RESTARTS: usize = 8;

/// Value of a boundary function on one face.
#[derive(Clone, Debug, PartialEq)]
pub enum FaceValue {
    /// A polynomial in ambient coordinates, restricted to the face.
    Polynomial(Polynomial),
    /// Node values of a piecewise-linear function on the face's [`FaceMesh`].
    Nodes { refinement: usize, values: Vec<f64> },
}

/// A function on `∂P`, face by face. Faces without a value carry zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryFunction {
    parts: BTreeMap<(usize, usize), FaceValue>,
}

impl BoundaryFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// `q` on every proper face, vertices included.
    pub fn from_polynomial(p: &Polytope, q: &Polynomial) -> Self {
        let mut out = Self::new();
        for d in 0..p.dim() {
            for i in 0..p.face_lattice().faces(d).len() {
                out.insert(d, i, FaceValue::Polynomial(q.clone()));
            }
        }
        out
    }

    /// `q` on the facets only.
    pub fn on_facets(p: &Polytope, q: &Polynomial) -> Self {
        let mut out = Self::new();
        for i in 0..p.num_facets() {
            out.insert(p.dim() - 1, i, FaceValue::Polynomial(q.clone()));
        }
        out
    }

    pub fn insert(&mut self, dim: usize, index: usize, value: FaceValue) {
        self.parts.insert((dim, index), value);
    }

    pub fn get(&self, dim: usize, index: usize) -> Option<&FaceValue> {
        self.parts.get(&(dim, index))
    }

    /// `((dim, index), value)` in face order.
    pub fn faces(&self) -> impl Iterator<Item = (&(usize, usize), &FaceValue)> {
        self.parts.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// `Σ_G ∫_G f g dvol_{dim G}` over the proper faces, with counting measure on vertices.
pub fn boundary_inner_product(f: &BoundaryFunction, g: &BoundaryFunction, p: &Polytope) -> Result<f64> {
    let mut total = 0.0;
    for (&(d, i), fv) in f.faces() {
        check_face(p, d, i)?;
        if let Some(gv) = g.get(d, i) {
            total += face_product(p, d, i, fv, gv)?;
        }
    }
    for &(d, i) in g.parts.keys() {
        check_face(p, d, i)?;
    }
    Ok(total)
}

fn check_face(p: &Polytope, d: usize, i: usize) -> Result<()> {
    if d >= p.dim() || i >= p.face_lattice().faces(d).len() {
        return Err(Error::TriangulationMismatch(format!("no face of dimension {d} with index {i}")));
    }
    Ok(())
}

fn checked_mesh(p: &Polytope, d: usize, i: usize, refinement: usize, values: &[f64]) -> Result<FaceMesh> {
    let mesh = FaceMesh::new(p, d, i, refinement)?;
    if mesh.num_nodes() != values.len() {
        return Err(Error::TriangulationMismatch(format!(
            "face ({d}, {i}) has {} nodes at refinement {refinement}, got {} values",
            mesh.num_nodes(),
            values.len()
        )));
    }
    Ok(mesh)
}

fn face_product(p: &Polytope, d: usize, i: usize, f: &FaceValue, g: &FaceValue) -> Result<f64> {
    use FaceValue::*;
    match (f, g) {
        (Polynomial(a), Polynomial(b)) => integrate_face(&a.mul(b), p, d, i, &FaceWeight::One),
        (Polynomial(a), Nodes { refinement, values }) | (Nodes { refinement, values }, Polynomial(a)) => {
            if a.dim() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    got: a.dim(),
                });
            }
            let mesh = checked_mesh(p, d, i, *refinement, values)?;
            Ok(mesh.load_vector(a).iter().zip(values).map(|(x, y)| x * y).sum())
        }
        (Nodes { refinement: r1, values: v1 }, Nodes { refinement: r2, values: v2 }) => {
            if r1 != r2 {
                return Err(Error::TriangulationMismatch(format!("refinements {r1} and {r2} on face ({d}, {i})")));
            }
            let mesh = checked_mesh(p, d, i, *r1, v1)?;
            if v2.len() != v1.len() {
                return Err(Error::TriangulationMismatch(format!("{} and {} node values on face ({d}, {i})", v1.len(), v2.len())));
            }
            Ok(mesh.product_integral(v1, v2))
        }
    }
}

/// For each facet, `∫_F h q` for the basis `q ∈ {1, y_1, …, y_{n-1}}` of affine functions
/// on the facet, `y` its orthonormal chart. This is the projection of
/// `(∫_F h, ∫_F h x_1, …, ∫_F h x_n)` onto the affine functions restricted to the facet.
pub fn reversible_check(p: &Polytope, phi: &CompositeMomentFunctional) -> Result<Vec<Vec<f64>>> {
    let h = h_function(phi, p)?;
    reversible_residuals(p, &h)
}

pub fn reversible_residuals(p: &Polytope, h: &Polynomial) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    (0..p.num_facets())
        .map(|i| {
            let face = p.facet(i);
            let mut out = vec![integrate_face(h, p, n - 1, i, &FaceWeight::One)?];
            for b in face.basis() {
                let yk = Polynomial::affine(b, -dot(b, face.relint_point()));
                out.push(integrate_face(&h.mul(&yk), p, n - 1, i, &FaceWeight::One)?);
            }
            Ok(out)
        })
        .collect()
}

/// Facet part of a cone element: node values of a concave interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetDensity {
    pub facet: usize,
    pub refinement: usize,
    pub values: Vec<f64>,
}

/// Element of the discretized cone of small perturbations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeElement {
    pub facets: Vec<FacetDensity>,
    pub lower: Vec<LowerFaceDensity>,
}

impl ConeElement {
    pub fn is_zero(&self) -> bool {
        self.facets.iter().all(|f| f.values.iter().all(|&v| v == 0.0)) && self.lower.is_empty()
    }

    /// Facet part as a boundary function.
    pub fn facet_function(&self, p: &Polytope) -> BoundaryFunction {
        let mut out = BoundaryFunction::new();
        for f in &self.facets {
            out.insert(
                p.dim() - 1,
                f.facet,
                FaceValue::Nodes {
                    refinement: f.refinement,
                    values: f.values.clone(),
                },
            );
        }
        out
    }

    /// Hinge conditions on the facets within [`CONE_TOL`] and admissible lower-face exponents.
    pub fn is_certified(&self, p: &Polytope) -> Result<bool> {
        for f in &self.facets {
            let mesh = checked_mesh(p, p.dim() - 1, f.facet, f.refinement, &f.values)?;
            let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            if mesh.hinge_violation(&f.values)? > CONE_TOL * scale {
                return Ok(false);
            }
        }
        Ok(self
            .lower
            .iter()
            .all(|g| g.exponent as usize == p.dim() - g.dim && g.exponent >= 2 && g.a.len() == g.dim))
    }

    /// `<h, g>` and `‖g‖²` in `L²(vol_Φ)`.
    pub fn moments(&self, p: &Polytope, h: &Polynomial) -> Result<(f64, f64)> {
        let gf = self.facet_function(p);
        let mut pair = boundary_inner_product(&BoundaryFunction::on_facets(p, h), &gf, p)?;
        let mut sq = boundary_inner_product(&gf, &gf, p)?;
        for g in &self.lower {
            check_face(p, g.dim, g.index)?;
            let (a, b) = lower::density_moments(p, h, g)?;
            pair += a;
            sq += b;
        }
        Ok((pair, sq))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let root = |e: u32| s.powf(1.0 / e as f64);
        Self {
            facets: self
                .facets
                .iter()
                .map(|f| FacetDensity {
                    values: f.values.iter().map(|v| v * s).collect(),
                    ..f.clone()
                })
                .collect(),
            lower: self
                .lower
                .iter()
                .map(|g| LowerFaceDensity {
                    a: g.a.iter().map(|x| x * root(g.exponent)).collect(),
                    b: g.b * root(g.exponent),
                    ..g.clone()
                })
                .collect(),
        }
    }

    /// The facet part as a discrete perturbation: each concave interpolant is the minimum of
    /// its per-simplex affine pieces.
    pub fn facet_perturbation(&self, p: &Polytope) -> Result<DiscretePerturbation> {
        let mut densities = Vec::new();
        for f in &self.facets {
            if f.values.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mesh = checked_mesh(p, p.dim() - 1, f.facet, f.refinement, &f.values)?;
            let pieces = dedup_pieces(mesh.pieces(&f.values)?);
            densities.push(PiecewiseAffineDensity::new(p, f.facet, pieces)?);
        }
        DiscretePerturbation::new(p, densities)
    }
}

fn dedup_pieces(pieces: Vec<AffinePiece>) -> Vec<AffinePiece> {
    let mut out: Vec<AffinePiece> = Vec::new();
    for q in pieces {
        let same = |r: &AffinePiece| {
            (r.b - q.b).abs() <= 1e-12 * (1.0 + q.b.abs()) && r.a.iter().zip(&q.a).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
        };
        if !out.iter().any(same) {
            out.push(q);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WeaklyStableWithinTol,
    UnstableWithCertificate,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub refinement: usize,
    pub restarts: usize,
    pub stability_tol: f64,
    /// Steps at which an unstable facet certificate is realized as a family.
    pub t_grid: Vec<f64>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            refinement: DEFAULT_REFINEMENT,
            restarts: DEFAULT_RESTARTS,
            stability_tol: STABILITY_TOL,
            t_grid: vec![0.01, 0.0025],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    /// Per facet, see [`reversible_check`].
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
    /// `Σ_F ‖h - π(h)‖²`, absent when the projection stalled.
    pub projection_objective: Option<f64>,
    /// `‖h‖` in `L²(vol_Φ)`.
    pub h_norm: f64,
    /// Best cone direction found, scaled to unit norm (zero when none was found).
    pub certificate: ConeElement,
    /// `<h, g>` for the unit certificate `g`.
    pub inner_product: f64,
    /// Finite-difference slopes of the family realizing a facet certificate.
    pub realization: Option<Crosscheck>,
}

/// Slopes `(φ(P_t) - φ(P)) / t` of a realized family against the predicted `<h, g>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crosscheck {
    pub expected: f64,
    pub phi: f64,
    /// `(t, φ(P_t), slope)`.
    pub slopes: Vec<(f64, f64, f64)>,
}

impl Crosscheck {
    /// `|slope - expected| / |expected|` per grid value.
    pub fn relative_errors(&self) -> Vec<f64> {
        self.slopes
            .iter()
            .map(|&(_, _, s)| (s - self.expected).abs() / self.expected.abs().max(f64::MIN_POSITIVE))
            .collect()
    }
}

pub fn stability_report(p: &Polytope, phi: &CompositeMomentFunctional, refinement: usize, restarts: usize) -> Result<StabilityReport> {
    stability_report_with(
        p,
        phi,
        &StabilityOptions {
            refinement,
            restarts,
            ..StabilityOptions::default()
        },
    )
}

/// Unstable when a certified cone direction has `<h, g> > tol ‖h‖ ‖g‖` and, for facet
/// directions, its realized family increases `φ` at the smallest grid step; weakly stable
/// when every reversible residual is below [`REVERSIBLE_TOL`] and no certificate exists.
pub fn stability_report_with(p: &Polytope, phi: &CompositeMomentFunctional, opts: &StabilityOptions) -> Result<StabilityReport> {
    let h = h_function(phi, p)?;
    let residuals = reversible_residuals(p, &h)?;
    let max_residual = residuals.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
    let everywhere = BoundaryFunction::from_polynomial(p, &h);
    let h_norm = boundary_inner_product(&everywhere, &everywhere, p)?.max(0.0).sqrt();

    let projection = match facet_cone_projection(p, &BoundaryFunction::on_facets(p, &h), opts.refinement) {
        Ok(r) => Some(r),
        Err(Error::SolverStalled { .. }) => None,
        Err(e) => return Err(e),
    };
    let lower = lower_face_search(p, &everywhere, opts.restarts)?;

    let mut candidates: Vec<ConeElement> = Vec::new();
    if let Some(proj) = &projection {
        candidates.push(ConeElement {
            facets: proj
                .facets
                .iter()
                .map(|f| FacetDensity {
                    facet: f.facet,
                    refinement: opts.refinement,
                    values: f.values.clone(),
                })
                .collect(),
            lower: Vec::new(),
        });
    }
    if let Some(c) = &lower {
        candidates.push(ConeElement {
            facets: Vec::new(),
            lower: vec![c.density.clone()],
        });
    }
    let mut best: Option<(ConeElement, f64)> = None;
    for c in candidates {
        let (pair, sq) = c.moments(p, &h)?;
        if !(sq > 0.0) || !c.is_certified(p)? {
            continue;
        }
        let norm = sq.sqrt();
        let score = pair / norm;
        if best.as_ref().map_or(true, |b| score > b.1) {
            best = Some((c.scaled(1.0 / norm), score));
        }
    }

    let (mut certificate, inner_product) = best.clone().unwrap_or_default();
    let certified = inner_product > opts.stability_tol * h_norm;
    let mut realization = None;
    let mut verdict = if certified {
        Verdict::UnstableWithCertificate
    } else if projection.is_some() && max_residual < REVERSIBLE_TOL {
        Verdict::WeaklyStableWithinTol
    } else {
        Verdict::Inconclusive
    };
    if certified && certificate.lower.is_empty() {
        let check = first_order_crosscheck(p, phi, &certificate, &opts.t_grid)?;
        let smallest = check.slopes.iter().min_by(|a, b| a.0.total_cmp(&b.0));
        if !smallest.map_or(false, |s| s.1 > check.phi) {
            verdict = Verdict::Inconclusive;
        }
        realization = Some(check);
    }
    if !certified {
        certificate = ConeElement::default();
    }
    Ok(StabilityReport {
        verdict,
        residuals,
        max_residual,
        projection_objective: projection.map(|r| r.objective),
        h_norm,
        certificate,
        inner_product: if certified { inner_product } else { best.map_or(0.0, |b| b.1) },
        realization,
    })
}

/// Realizes the facet part of `g` as a family `P_t` and compares `(φ(P_t) - φ(P)) / t`
/// with `<h, g>`.
pub fn first_order_crosscheck(p: &Polytope, phi: &CompositeMomentFunctional, g: &ConeElement, t_grid: &[f64]) -> Result<Crosscheck> {
    if let Some(&bad) = t_grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(format!("grid value {bad} must be positive")));
    }
    let h = h_function(phi, p)?;
    let facets_only = ConeElement {
        facets: g.facets.clone(),
        lower: Vec::new(),
    };
    let (expected, _) = facets_only.moments(p, &h)?;
    let mu = facets_only.facet_perturbation(p)?;
    let v = generic_direction(p, 0, DELTA_GEN, 1000)?;
    let fam = build_family(p, &mu, &v)?;
    let base = phi.evaluate(p)?;
    let slopes = t_grid
        .iter()
        .map(|&t| {
            let value = phi.evaluate(&family_at(&fam, t)?)?;
            Ok((t, value, (value - base) / t))
        })
        .collect::<Result<_>>()?;
    Ok(Crosscheck {
        expected,
        phi: base,
        slopes,
    })
}

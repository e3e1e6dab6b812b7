use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::{dot, Matrix};
use crate::quadrature::{integrate_face, FaceWeight};

use super::mesh::{row_dot, FaceMesh};
use super::{BoundaryFunction, FaceValue};

/// Stopping threshold on the scaled KKT residual.
pub const KKT_TOL: f64 = 1e-7;
/// Cap on full sweeps over the hinge constraints.
pub const MAX_SWEEPS: usize = 200_000;

/// Projection of `h` onto the concave interpolants of one facet mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetProjection {
    pub facet: usize,
    pub mesh: FaceMesh,
    pub values: Vec<f64>,
    /// `‖h - g‖²` on this facet.
    pub objective: f64,
    pub kkt: f64,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub objective: f64,
    pub facets: Vec<FacetProjection>,
}

/// Minimizes `Σ_F ‖h - g_F‖²` over concave piecewise-linear `g_F` on every facet's
/// refinement mesh, one facet at a time. Facets where `h` is undefined count as `h = 0`.
pub fn facet_cone_projection(p: &Polytope, h: &BoundaryFunction, refinement: usize) -> Result<ProjectionResult> {
    let d = p.dim() - 1;
    let facets: Vec<FacetProjection> = (0..p.num_facets())
        .into_par_iter()
        .map(|facet| {
            let mesh = FaceMesh::new(p, d, facet, refinement)?;
            let (load, norm_sq) = match h.get(d, facet) {
                None => (vec![0.0; mesh.num_nodes()], 0.0),
                Some(FaceValue::Polynomial(q)) => (
                    mesh.load_vector(q),
                    integrate_face(&q.mul(q), p, d, facet, &FaceWeight::One)?,
                ),
                Some(FaceValue::Nodes { refinement: r, values }) => {
                    if *r != refinement || values.len() != mesh.num_nodes() {
                        return Err(Error::TriangulationMismatch(format!(
                            "facet {facet}: {} node values at refinement {r}, mesh has {} nodes at refinement {refinement}",
                            values.len(),
                            mesh.num_nodes()
                        )));
                    }
                    (mesh.mass_matrix().mul_vec(values), mesh.product_integral(values, values))
                }
            };
            let (values, kkt, sweeps) = project_onto_cone(&mesh, &load)?;
            let mg = mesh.mass_matrix().mul_vec(&values);
            let objective = (norm_sq - 2.0 * dot(&load, &values) + dot(&values, &mg)).max(0.0);
            Ok(FacetProjection {
                facet,
                mesh,
                values,
                objective,
                kkt,
                sweeps,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ProjectionResult {
        objective: facets.iter().map(|f| f.objective).sum(),
        facets,
    })
}

/// Minimizes `½ gᵀMg - bᵀg` subject to the hinge rows `<a_k, g> <= 0`, where `b` is the
/// load vector of `h`, by Hildreth's dual coordinate ascent in the `M` metric.
///
/// Returns the node values, the final KKT residual and the sweep count. The problem is
/// solved at unit scale and rescaled, which the positive homogeneity of the projection allows.
pub fn project_onto_cone(mesh: &FaceMesh, load: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
    let n = mesh.num_nodes();
    let mass = mesh.mass_matrix();
    let inv = mass
        .inverse(1e-300)
        .ok_or_else(|| Error::TriangulationMismatch("singular mass matrix".into()))?;
    let g0 = inv.mul_vec(load);
    let scale = dot(&g0, &mass.mul_vec(&g0)).sqrt();
    if !(scale > 0.0) {
        return Ok((vec![0.0; n], 0.0, 0));
    }
    let rows = mesh.hinge_constraints()?;
    let mut g: Vec<f64> = g0.iter().map(|x| x / scale).collect();
    if rows.is_empty() {
        return Ok((g0, 0.0, 0));
    }
    let w: Vec<Vec<f64>> = rows.iter().map(|row| sparse_solve(&inv, row, n)).collect();
    let c: Vec<f64> = rows.iter().zip(&w).map(|(row, wk)| row_dot(row, wk)).collect();
    let mut lambda = vec![0.0; rows.len()];
    let mut kkt = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for k in 0..rows.len() {
            let step = row_dot(&rows[k], &g) / c[k];
            let next = (lambda[k] + step).max(0.0);
            let delta = next - lambda[k];
            if delta != 0.0 {
                for (gi, wi) in g.iter_mut().zip(&w[k]) {
                    *gi -= delta * wi;
                }
                lambda[k] = next;
            }
        }
        kkt = kkt_residual(&rows, &lambda, &g);
        if kkt < KKT_TOL {
            break;
        }
    }
    if kkt >= KKT_TOL {
        return Err(Error::SolverStalled {
            iterations: sweeps,
            residual: kkt,
        });
    }
    Ok((g.iter().map(|x| x * scale).collect(), kkt, sweeps))
}

/// Largest of the primal infeasibility and the complementarity gap.
fn kkt_residual(rows: &[Vec<(usize, f64)>], lambda: &[f64], g: &[f64]) -> f64 {
    rows.iter()
        .zip(lambda)
        .map(|(row, &l)| {
            let r = row_dot(row, g);
            r.max(0.0).max((l * r).abs())
        })
        .fold(0.0, f64::max)
}

fn sparse_solve(inv: &Matrix<f64>, row: &[(usize, f64)], n: usize) -> Vec<f64> {
    (0..n).map(|i| row.iter().map(|&(j, a)| inv[(i, j)] * a).sum()).collect()
}

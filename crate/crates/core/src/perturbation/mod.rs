//! Discrete perturbations of polytopes: concave piecewise-affine facet densities, the
//! families realizing them, and finite-difference checks of their weak derivatives.

mod atoms;
mod family;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::{dot, orthogonal_complement_vector, sub};
use crate::quadrature::{integrate_face, min_cells, AffinePiece, FaceWeight, Polynomial};

pub use atoms::{difference_measure_atoms, perturbation_atoms, weak_convergence_diagnostic, CellGrid, MAX_CELLS};
pub use family::{build_family, family_at, weak_derivative_fd, PerturbedFamily, DEFAULT_T_GRID, DELTA_GEN, T_MAX_GRID};

/// `y ↦ min_k (<a_k, y> + b_k)` in the chart of one facet.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffineDensity {
    facet: usize,
    pieces: Vec<AffinePiece>,
}

impl PiecewiseAffineDensity {
    /// Validates the chart dimension and drops pieces that are nowhere uniquely minimal
    /// on the facet.
    pub fn new(p: &Polytope, facet: usize, pieces: Vec<AffinePiece>) -> Result<Self> {
        if facet >= p.num_facets() {
            return Err(Error::NoSuchFacet(facet));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("density needs at least one piece".into()));
        }
        let d = p.dim() - 1;
        if let Some(bad) = pieces.iter().find(|q| q.a.len() != d) {
            return Err(Error::ChartMismatch(format!(
                "piece has {} chart coordinates, facet has dimension {d}",
                bad.a.len()
            )));
        }
        if pieces.iter().any(|q| !q.b.is_finite() || q.a.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("non-finite density piece".into()));
        }
        let pieces = if pieces.len() == 1 {
            pieces
        } else {
            min_cells(p, p.facet(facet), &pieces)?
                .into_iter()
                .map(|(k, _)| pieces[k].clone())
                .collect()
        };
        Ok(Self { facet, pieces })
    }

    pub fn facet(&self) -> usize {
        self.facet
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// Value at chart coordinates `y`, extended canonically beyond the facet.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.pieces.iter().map(|q| q.eval(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn weight(&self) -> FaceWeight {
        FaceWeight::MinOfAffine(self.pieces.clone())
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            facet: self.facet,
            pieces: self.pieces.iter().map(|q| q.scaled(s)).collect(),
        }
    }
}

/// `μ = Σ_F [f_F]` over facets carrying a density; absent facets have zero density.
#[derive(Clone, Debug)]
pub struct DiscretePerturbation {
    base: Polytope,
    densities: Vec<PiecewiseAffineDensity>,
}

impl DiscretePerturbation {
    pub fn zero(base: &Polytope) -> Self {
        Self {
            base: base.clone(),
            densities: Vec::new(),
        }
    }

    pub fn new(base: &Polytope, densities: Vec<PiecewiseAffineDensity>) -> Result<Self> {
        let mut out = Self::zero(base);
        for d in densities {
            if d.facet >= base.num_facets() {
                return Err(Error::NoSuchFacet(d.facet));
            }
            out = out.plus_density(d)?;
        }
        Ok(out)
    }

    pub fn single(base: &Polytope, density: PiecewiseAffineDensity) -> Result<Self> {
        Self::new(base, vec![density])
    }

    pub fn base(&self) -> &Polytope {
        &self.base
    }

    pub fn densities(&self) -> &[PiecewiseAffineDensity] {
        &self.densities
    }

    pub fn density(&self, facet: usize) -> Option<&PiecewiseAffineDensity> {
        self.densities.iter().find(|d| d.facet == facet)
    }

    pub fn is_zero(&self) -> bool {
        self.densities.is_empty()
    }

    /// `λ μ` for `λ >= 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("scale {lambda} must be nonnegative")));
        }
        if lambda == 0.0 {
            return Ok(Self::zero(&self.base));
        }
        Ok(Self {
            base: self.base.clone(),
            densities: self.densities.iter().map(|d| d.scaled(lambda)).collect(),
        })
    }

    /// `μ + ν`; on a shared facet the densities add, which keeps them concave.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        other
            .densities
            .iter()
            .try_fold(self.clone(), |acc, d| acc.plus_density(d.clone()))
    }

    fn plus_density(mut self, d: PiecewiseAffineDensity) -> Result<Self> {
        match self.densities.iter().position(|x| x.facet == d.facet) {
            None => {
                self.densities.push(d);
                self.densities.sort_by_key(|x| x.facet);
            }
            Some(k) => {
                let old = &self.densities[k];
                let pieces = old
                    .pieces
                    .iter()
                    .flat_map(|p| {
                        d.pieces.iter().map(move |q| AffinePiece {
                            a: p.a.iter().zip(&q.a).map(|(x, y)| x + y).collect(),
                            b: p.b + q.b,
                        })
                    })
                    .collect();
                self.densities[k] = PiecewiseAffineDensity::new(&self.base, d.facet, pieces)?;
            }
        }
        Ok(self)
    }
}

/// Built-in facet densities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CanonicalKind {
    /// Constant 1: parallel outward shift.
    Shift,
    /// Distance to the affine hull of a ridge of the facet: hinging around it.
    /// `ridge` indexes the faces of dimension `n - 2`.
    Hinge { ridge: usize },
    /// Distance to the relative boundary: stacking a pyramid.
    Pyramid,
}

/// Affine piece measuring the in-facet distance to the affine hull of a ridge,
/// positive on the facet's interior.
fn ridge_distance_piece(p: &Polytope, facet: usize, ridge: usize) -> Result<AffinePiece> {
    let n = p.dim();
    let f = p.facet(facet);
    let e = &p.face_lattice().faces(n - 2)[ridge];
    if !e.vertex_ids().iter().all(|v| f.vertex_ids().contains(v)) {
        return Err(Error::EdgeNotInFacet { edge: ridge, facet });
    }
    let z: Vec<Vec<f64>> = e.vertex_ids().iter().map(|&k| f.to_chart(&p.vertices()[k])).collect();
    let diffs: Vec<Vec<f64>> = z[1..].iter().map(|y| sub(y, &z[0])).collect();
    let mut a = orthogonal_complement_vector(&diffs, n - 1, 1e-9)
        .ok_or_else(|| Error::DegenerateInput("ridge does not span a hyperplane of the facet".into()))?;
    let mut b = -dot(&a, &z[0]);
    // the chart origin is the facet's vertex centroid
    if b < 0.0 {
        a.iter_mut().for_each(|x| *x = -*x);
        b = -b;
    }
    Ok(AffinePiece { a, b })
}

fn ridges_of(p: &Polytope, facet: usize) -> Vec<usize> {
    let f = p.facet(facet);
    p.face_lattice()
        .faces(p.dim() - 2)
        .iter()
        .enumerate()
        .filter(|(_, e)| e.vertex_ids().iter().all(|v| f.vertex_ids().contains(v)))
        .map(|(k, _)| k)
        .collect()
}

pub fn canonical_density(p: &Polytope, kind: CanonicalKind, facet: usize) -> Result<PiecewiseAffineDensity> {
    if facet >= p.num_facets() {
        return Err(Error::NoSuchFacet(facet));
    }
    if p.dim() < 2 {
        return Err(Error::InvalidArgument("perturbations need dimension at least 2".into()));
    }
    let d = p.dim() - 1;
    match kind {
        CanonicalKind::Shift => PiecewiseAffineDensity::new(
            p,
            facet,
            vec![AffinePiece {
                a: vec![0.0; d],
                b: 1.0,
            }],
        ),
        CanonicalKind::Hinge { ridge } => {
            if ridge >= p.face_lattice().faces(d - 1).len() {
                return Err(Error::EdgeNotInFacet { edge: ridge, facet });
            }
            PiecewiseAffineDensity::new(p, facet, vec![ridge_distance_piece(p, facet, ridge)?])
        }
        CanonicalKind::Pyramid => {
            let pieces = ridges_of(p, facet)
                .into_iter()
                .map(|r| ridge_distance_piece(p, facet, r))
                .collect::<Result<Vec<_>>>()?;
            PiecewiseAffineDensity::new(p, facet, pieces)
        }
    }
}

/// `∫ p dμ = Σ_F ∫_F p · f_F`.
pub fn pair(mu: &DiscretePerturbation, p: &Polynomial) -> Result<f64> {
    let base = &mu.base;
    if p.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            got: p.dim(),
        });
    }
    mu.densities
        .iter()
        .map(|d| integrate_face(p, base, base.dim() - 1, d.facet, &d.weight()))
        .sum()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::Halfspace;

    pub(crate) fn cube(n: usize, a: f64) -> Polytope {
        let hs: Vec<Halfspace> = (0..n)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut u = vec![0.0; n];
                    u[i] = s;
                    Halfspace::new(u, a).unwrap()
                })
            })
            .collect();
        Polytope::from_halfspaces(&hs).unwrap()
    }

    fn facet_x1(c: &Polytope) -> usize {
        c.halfspaces().iter().position(|h| h.normal[0] > 0.5).unwrap()
    }

    fn ridge_x2(c: &Polytope, facet: usize) -> usize {
        // ridge of the facet lying in the plane x2 = 1
        let f = c.facet(facet);
        c.face_lattice()
            .faces(1)
            .iter()
            .position(|e| {
                e.vertex_ids().iter().all(|v| f.vertex_ids().contains(v))
                    && e.vertex_ids().iter().all(|&v| (c.vertices()[v][1] - 1.0).abs() < 1e-12)
            })
            .unwrap()
    }

    #[test]
    fn canonical_masses() {
        let c = cube(3, 1.0);
        let f = facet_x1(&c);
        let one = Polynomial::one(3);
        let shift = DiscretePerturbation::single(&c, canonical_density(&c, CanonicalKind::Shift, f).unwrap()).unwrap();
        assert!((pair(&shift, &one).unwrap() - 4.0).abs() < 1e-13);

        let r = ridge_x2(&c, f);
        let hinge = canonical_density(&c, CanonicalKind::Hinge { ridge: r }, f).unwrap();
        // density 1 - x2 on the facet
        for y in [[0.3, -0.2], [0.0, 0.0], [-0.9, 0.7]] {
            let x = c.facet(f).from_chart(&y);
            assert!((hinge.eval(&y) - (1.0 - x[1])).abs() < 1e-13);
        }
        let hinge = DiscretePerturbation::single(&c, hinge).unwrap();
        assert!((pair(&hinge, &one).unwrap() - 4.0).abs() < 1e-13);

        let pyr = canonical_density(&c, CanonicalKind::Pyramid, f).unwrap();
        assert_eq!(pyr.pieces().len(), 4);
        let pyr = DiscretePerturbation::single(&c, pyr).unwrap();
        assert!((pair(&pyr, &one).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hinge_ridge_must_lie_in_facet() {
        let c = cube(3, 1.0);
        let f = facet_x1(&c);
        let outside = c
            .face_lattice()
            .faces(1)
            .iter()
            .position(|e| e.vertex_ids().iter().all(|&v| c.vertices()[v][0] < 0.0))
            .unwrap();
        assert_eq!(
            canonical_density(&c, CanonicalKind::Hinge { ridge: outside }, f).unwrap_err(),
            Error::EdgeNotInFacet { edge: outside, facet: f }
        );
    }

    #[test]
    fn isotropic_cube_shift_pairs_to_zero() {
        let c = cube(3, 3f64.sqrt());
        let h = Polynomial::norm_squared(3).sub(&Polynomial::constant(3, 5.0));
        for f in 0..6 {
            let mu = DiscretePerturbation::single(&c, canonical_density(&c, CanonicalKind::Shift, f).unwrap()).unwrap();
            assert!(pair(&mu, &h).unwrap().abs() < 1e-12);
            assert_eq!(pair(&mu, &Polynomial::zero(3)).unwrap(), 0.0);
        }
    }

    #[test]
    fn redundant_pieces_pruned() {
        let c = cube(2, 1.0);
        let pieces = vec![
            AffinePiece { a: vec![0.0], b: 1.0 },
            AffinePiece { a: vec![0.0], b: 5.0 },
            AffinePiece { a: vec![0.1], b: 3.0 },
            AffinePiece { a: vec![0.0], b: 1.0 },
        ];
        let d = PiecewiseAffineDensity::new(&c, 0, pieces).unwrap();
        assert_eq!(d.pieces().len(), 1);
        assert!(matches!(
            PiecewiseAffineDensity::new(&c, 9, vec![AffinePiece { a: vec![0.0], b: 1.0 }]),
            Err(Error::NoSuchFacet(9))
        ));
    }

    #[test]
    fn sum_on_shared_facet() {
        let c = cube(2, 1.0);
        let f = facet_x1(&c);
        let shift = DiscretePerturbation::single(&c, canonical_density(&c, CanonicalKind::Shift, f).unwrap()).unwrap();
        let pyr = DiscretePerturbation::single(&c, canonical_density(&c, CanonicalKind::Pyramid, f).unwrap()).unwrap();
        let both = shift.sum(&pyr).unwrap();
        let p = Polynomial::variable(2, 1).add(&Polynomial::one(2).scale(2.0));
        let lhs = pair(&both, &p).unwrap();
        let rhs = pair(&shift, &p).unwrap() + pair(&pyr, &p).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

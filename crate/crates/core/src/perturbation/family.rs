use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{min_genericity, GeometryOptions, Halfspace, Polytope};
use crate::linalg::{dot, norm, orthonormalize, scale};
use crate::quadrature::{integrate_polytope, Polynomial};

use super::DiscretePerturbation;

/// Required margin `min_i |<u_i, v>|` for the direction of a family.
pub const DELTA_GEN: f64 = 1e-3;

/// Default step sizes for finite-difference checks.
pub const DEFAULT_T_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Candidate values for the admissible range, `2^0, 2^-1, …, 2^-12`.
pub const T_MAX_GRID: [f64; 13] = [
    1.0,
    0.5,
    0.25,
    0.125,
    0.0625,
    0.03125,
    0.015625,
    0.0078125,
    0.00390625,
    0.001953125,
    0.0009765625,
    0.00048828125,
    0.000244140625,
];

/// `x ↦ <g, x> + k` on ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFunction {
    pub g: Vec<f64>,
    pub k: f64,
}

impl AffineFunction {
    fn from_fn(n: usize, f: impl Fn(&[f64]) -> f64) -> Self {
        let zero = vec![0.0; n];
        let k = f(&zero);
        let g = (0..n)
            .map(|j| {
                let mut e = zero.clone();
                e[j] = 1.0;
                f(&e) - k
            })
            .collect();
        Self { g, k }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.g, x) + self.k
    }
}

/// Slope data of one facet in the family.
#[derive(Clone, Debug)]
pub struct FacetSlope {
    pub facet: usize,
    /// `<u_i, v>`.
    pub speed: f64,
    /// `h_i ∘ π_{v⊥}`.
    pub h: AffineFunction,
    /// Affine pieces of `f_i ∘ π_{v⊥}`; empty for facets without density.
    pub f: Vec<AffineFunction>,
}

/// Polytopes `P_t = {x ∈ π⁻¹(π(P)) : ℓ(x, t) <= <v, x> <= u(x, t)}` for `t ∈ [0, t_max]`.
#[derive(Clone, Debug)]
pub struct PerturbedFamily {
    perturbation: DiscretePerturbation,
    direction: Vec<f64>,
    upper: Vec<FacetSlope>,
    lower: Vec<FacetSlope>,
    shadow: Polytope,
    walls: Vec<Halfspace>,
    t_max: f64,
}

impl PerturbedFamily {
    pub fn base(&self) -> &Polytope {
        self.perturbation.base()
    }

    pub fn perturbation(&self) -> &DiscretePerturbation {
        &self.perturbation
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Facets with `<u_i, v> > 0`.
    pub fn upper(&self) -> &[FacetSlope] {
        &self.upper
    }

    /// Facets with `<u_i, v> < 0`.
    pub fn lower(&self) -> &[FacetSlope] {
        &self.lower
    }

    /// `π_{v⊥}(P)` in an orthonormal basis of `v⊥`.
    pub fn shadow(&self) -> &Polytope {
        &self.shadow
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn halfspaces_at(&self, t: f64) -> Vec<Halfspace> {
        let v = &self.direction;
        let mut out = self.walls.clone();
        let zero = AffineFunction {
            g: vec![0.0; v.len()],
            k: 0.0,
        };
        for (slopes, sign) in [(&self.upper, 1.0), (&self.lower, -1.0)] {
            for s in slopes.iter() {
                let pieces = if s.f.is_empty() { std::slice::from_ref(&zero) } else { &s.f[..] };
                for f in pieces {
                    // upper: <v,x> - h(x) - t f(x) <= 0; lower: h(x) - t f(x) - <v,x> <= 0
                    let normal: Vec<f64> = (0..v.len())
                        .map(|j| sign * (v[j] - s.h.g[j]) - t * f.g[j])
                        .collect();
                    let offset = sign * s.h.k + t * f.k;
                    out.push(Halfspace::new(normal, offset).expect("normal has unit component along v"));
                }
            }
        }
        out
    }

    fn evaluate(&self, t: f64) -> Result<Polytope> {
        let base = self.base();
        let opts = GeometryOptions {
            eps: base.eps(),
            max_halfspaces: 256,
            max_vertices: 1024,
        };
        match Polytope::from_halfspaces_with(&self.halfspaces_at(t), &opts) {
            Ok(p) => Ok(p),
            Err(Error::Empty) | Err(Error::DegenerateInput(_)) => Err(Error::DegenerateResult(t)),
            Err(e) => Err(e),
        }
    }
}

fn unit_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut vecs = vec![v.to_vec()];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        vecs.push(e);
    }
    let basis = orthonormalize(&vecs, 1e-6);
    basis[1..n].to_vec()
}

/// Builds the family of Construction-type envelopes for `μ` along the generic unit
/// direction `v`.
pub fn build_family(p: &Polytope, mu: &DiscretePerturbation, v: &[f64]) -> Result<PerturbedFamily> {
    let n = p.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("families need dimension at least 2".into()));
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let base = mu.base();
    if base.halfspaces().len() != p.halfspaces().len() || !base.same_vertices(p, base.eps()) {
        return Err(Error::InvalidArgument("perturbation belongs to a different polytope".into()));
    }
    let len = norm(v);
    if !(len > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let v = scale(v, 1.0 / len);
    let margin = min_genericity(p, &v);
    if margin < DELTA_GEN {
        return Err(Error::NotGeneric {
            min: margin,
            delta: DELTA_GEN,
        });
    }

    let proj = |x: &[f64]| -> Vec<f64> {
        let c = dot(x, &v);
        x.iter().zip(&v).map(|(&xi, &vi)| xi - c * vi).collect()
    };
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (i, hs) in p.halfspaces().iter().enumerate() {
        let s = dot(&hs.normal, &v);
        let h = AffineFunction::from_fn(n, |x| (hs.offset - dot(&hs.normal, &proj(x))) / s);
        let face = p.facet(i);
        let f = match mu.density(i) {
            None => Vec::new(),
            Some(d) => d
                .pieces()
                .iter()
                .map(|piece| {
                    AffineFunction::from_fn(n, |x| {
                        let y = proj(x);
                        // the point of aff F_i over y
                        let c = (dot(&hs.normal, &y) - hs.offset) / s;
                        let on_facet: Vec<f64> = y.iter().zip(&v).map(|(&yi, &vi)| yi - c * vi).collect();
                        piece.eval(&face.to_chart(&on_facet)) / s.abs()
                    })
                })
                .collect(),
        };
        let slope = FacetSlope { facet: i, speed: s, h, f };
        if s > 0.0 {
            upper.push(slope);
        } else {
            lower.push(slope);
        }
    }

    let q = unit_complement(&v);
    let projected: Vec<Vec<f64>> = p
        .vertices()
        .iter()
        .map(|x| q.iter().map(|b| dot(b, x)).collect())
        .collect();
    let shadow = Polytope::from_vertices_with(
        &projected,
        &GeometryOptions {
            eps: p.eps(),
            ..GeometryOptions::default()
        },
    )?;
    let walls = shadow
        .halfspaces()
        .iter()
        .map(|h| {
            let mut normal = vec![0.0; n];
            for (b, &w) in q.iter().zip(&h.normal) {
                for (x, &bi) in normal.iter_mut().zip(b) {
                    *x += w * bi;
                }
            }
            Halfspace::new(normal, h.offset).expect("lifted wall normal is a unit vector")
        })
        .collect();

    let mut fam = PerturbedFamily {
        perturbation: mu.clone(),
        direction: v,
        upper,
        lower,
        shadow,
        walls,
        t_max: 0.0,
    };
    if mu.is_zero() {
        fam.t_max = T_MAX_GRID[0];
        return Ok(fam);
    }
    // largest grid value below which every grid value evaluates to a full-dimensional body
    for &t in T_MAX_GRID.iter().rev() {
        if fam.evaluate(t).is_err() {
            break;
        }
        fam.t_max = t;
    }
    Ok(fam)
}

/// `P_t`.
pub fn family_at(fam: &PerturbedFamily, t: f64) -> Result<Polytope> {
    if !(t >= 0.0) || t > fam.t_max * (1.0 + 1e-12) {
        return Err(Error::RangeExceeded { t, t_max: fam.t_max });
    }
    if t == 0.0 || fam.perturbation.is_zero() {
        return Ok(fam.base().clone());
    }
    fam.evaluate(t)
}

/// `(t, (∫_{P_t} p - ∫_P p) / t)` for every `t` in the grid.
pub fn weak_derivative_fd(fam: &PerturbedFamily, p: &Polynomial, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(&bad) = t_grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument(format!("grid value {bad} must be positive")));
    }
    let base = integrate_polytope(p, fam.base())?;
    t_grid
        .par_iter()
        .map(|&t| {
            let pt = family_at(fam, t)?;
            Ok((t, (integrate_polytope(p, &pt)? - base) / t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generic_direction;
    use crate::perturbation::tests::cube;
    use crate::perturbation::{canonical_density, pair, CanonicalKind};

    fn setup(kind: CanonicalKind) -> (Polytope, DiscretePerturbation, Vec<f64>) {
        let c = cube(3, 1.0);
        let f = c.halfspaces().iter().position(|h| h.normal[0] > 0.5).unwrap();
        let mu = DiscretePerturbation::single(&c, canonical_density(&c, kind, f).unwrap()).unwrap();
        let v = generic_direction(&c, 0, DELTA_GEN, 100).unwrap();
        (c, mu, v)
    }

    #[test]
    fn t_zero_is_base() {
        let (c, mu, v) = setup(CanonicalKind::Pyramid);
        let fam = build_family(&c, &mu, &v).unwrap();
        assert!(fam.t_max() >= 0.25);
        assert!(fam.evaluate(0.0).unwrap().same_vertices(&c, 1e-9));
        assert!(family_at(&fam, 0.0).unwrap().same_vertices(&c, 1e-9));
        assert!(matches!(family_at(&fam, 2.0), Err(Error::RangeExceeded { .. })));
    }

    #[test]
    fn zero_perturbation_is_static() {
        let (c, _, v) = setup(CanonicalKind::Shift);
        let fam = build_family(&c, &DiscretePerturbation::zero(&c), &v).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert!(family_at(&fam, t).unwrap().same_vertices(&c, 1e-12));
        }
    }

    #[test]
    fn non_generic_direction_rejected() {
        let (c, mu, _) = setup(CanonicalKind::Shift);
        assert!(matches!(build_family(&c, &mu, &[1.0, 0.0, 0.0]), Err(Error::NotGeneric { .. })));
    }

    /// Parallel shift of the facet x1 = 1, clipped by the cylinder over the shadow:
    /// the slab `1 <= x1 <= 1 + t` loses a wedge along two of its side faces.
    fn shift_volume(v: &[f64], t: f64) -> f64 {
        let (a, b, c) = (v[0].abs(), v[1].abs(), v[2].abs());
        8.0 + 4.0 * t - (b + c) * t * t / a + b * c * t.powi(3) / (3.0 * a * a)
    }

    #[test]
    fn shift_volume_closed_form() {
        let (c, mu, v) = setup(CanonicalKind::Shift);
        let fam = build_family(&c, &mu, &v).unwrap();
        for t in [0.025, 0.1, 0.25] {
            let vol = family_at(&fam, t).unwrap().volume();
            assert!((vol - shift_volume(&v, t)).abs() < 1e-12, "t = {t}: {vol}");
        }
    }

    #[test]
    fn pyramid_stacks_one_vertex() {
        let (c, mu, v) = setup(CanonicalKind::Pyramid);
        let fam = build_family(&c, &mu, &v).unwrap();
        let pt = family_at(&fam, 0.1).unwrap();
        assert_eq!(pt.vertices().len(), 9);
        assert!((pt.volume() - (8.0 + 0.4 / 3.0)).abs() < 1e-12);
    }

    fn hinge_setup() -> (Polytope, DiscretePerturbation, Vec<f64>) {
        let (c, _, v) = setup(CanonicalKind::Shift);
        let f = c.halfspaces().iter().position(|h| h.normal[0] > 0.5).unwrap();
        let fv = c.facet(f).vertex_ids().to_vec();
        let ridge = c
            .face_lattice()
            .faces(1)
            .iter()
            .position(|e| e.vertex_ids().iter().all(|x| fv.contains(x)))
            .unwrap();
        let mu = DiscretePerturbation::single(&c, canonical_density(&c, CanonicalKind::Hinge { ridge }, f).unwrap()).unwrap();
        (c, mu, v)
    }

    #[test]
    fn hinge_quotients_converge_linearly() {
        let (c, mu, v) = hinge_setup();
        let fam = build_family(&c, &mu, &v).unwrap();
        let one = Polynomial::one(3);
        let target = pair(&mu, &one).unwrap();
        let q = weak_derivative_fd(&fam, &one, &DEFAULT_T_GRID).unwrap();
        let errs: Vec<f64> = q.iter().map(|(_, x)| (x - target).abs()).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
        }
    }
}

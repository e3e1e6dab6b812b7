use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GeometryOptions, Halfspace, Polytope};
use crate::linalg::{centroid, dist};
use crate::transport::{wasserstein_norm, SignedAtomicMeasure};

use super::{family_at, DiscretePerturbation, PerturbedFamily};

/// Largest number of grid cells for atom discretizations.
pub const MAX_CELLS: usize = 1 << 21;

/// Uniform axis-aligned grid with `resolution` cells per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    resolution: usize,
}

impl CellGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> Result<Self> {
        let n = lo.len();
        if hi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: hi.len(),
            });
        }
        if resolution == 0 || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidArgument("grid needs positive extent and resolution".into()));
        }
        let cap = (MAX_CELLS as f64).powf(1.0 / n as f64).floor() as usize;
        if resolution > cap {
            return Err(Error::ResolutionTooHigh { resolution, cap });
        }
        Ok(Self { lo, hi, resolution })
    }

    /// Bounding box of all the given polytopes.
    pub fn covering(polys: &[&Polytope], resolution: usize) -> Result<Self> {
        let n = polys[0].dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in polys {
            let (a, b) = p.bounding_box();
            for k in 0..n {
                lo[k] = lo[k].min(a[k]);
                hi[k] = hi[k].max(b[k]);
            }
        }
        Self::new(lo, hi, resolution)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn num_cells(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    fn width(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    fn multi_index(&self, mut cell: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|_| {
                let i = cell % self.resolution;
                cell /= self.resolution;
                i
            })
            .collect()
    }

    fn bounds(&self, cell: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(cell);
        let lo: Vec<f64> = (0..self.dim()).map(|k| self.lo[k] + idx[k] as f64 * self.width(k)).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|k| lo[k] + self.width(k)).collect();
        (lo, hi)
    }

    pub fn center(&self, cell: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds(cell);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Cell containing `x`, half-open except at the upper boundary.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut cell = 0;
        for k in (0..self.dim()).rev() {
            let r = (x[k] - self.lo[k]) / self.width(k);
            if r < -1e-9 || r > self.resolution as f64 + 1e-9 {
                return None;
            }
            let i = (r.floor().max(0.0) as usize).min(self.resolution - 1);
            cell = cell * self.resolution + i;
        }
        Some(cell)
    }

    /// `vol(K ∩ cell)`, exact.
    fn clipped_volume(&self, k: &Polytope, cell: usize) -> f64 {
        let (lo, hi) = self.bounds(cell);
        let n = self.dim();
        let corners: Vec<Vec<f64>> = (0..1usize << n)
            .map(|m| (0..n).map(|j| if m >> j & 1 == 1 { hi[j] } else { lo[j] }).collect())
            .collect();
        if k.halfspaces()
            .iter()
            .any(|h| corners.iter().all(|c| h.excess(c) >= 0.0))
        {
            return 0.0;
        }
        if corners.iter().all(|c| k.halfspaces().iter().all(|h| h.excess(c) <= 0.0)) {
            return self.cell_volume();
        }
        let mut hs = k.halfspaces().to_vec();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            hs.push(Halfspace::new(e.clone(), hi[j]).unwrap());
            e[j] = -1.0;
            hs.push(Halfspace::new(e, -lo[j]).unwrap());
        }
        let opts = GeometryOptions {
            eps: k.eps(),
            max_halfspaces: 512,
            max_vertices: 512,
        };
        Polytope::from_halfspaces_with(&hs, &opts).map_or(0.0, |p| p.volume())
    }

    /// Atoms at cell centers with weights `scale · (vol(Q ∩ C) - vol(P ∩ C))`.
    pub fn difference_atoms(&self, p: &Polytope, q: &Polytope, scale: f64) -> Result<SignedAtomicMeasure> {
        let floor = 1e-13 * self.cell_volume();
        let atoms: Vec<(Vec<f64>, f64)> = (0..self.num_cells())
            .into_par_iter()
            .filter_map(|cell| {
                let w = self.clipped_volume(q, cell) - self.clipped_volume(p, cell);
                (w.abs() > floor).then(|| (self.center(cell), scale * w))
            })
            .collect();
        SignedAtomicMeasure::new(self.dim(), atoms)
    }
}

/// `(1_Q - 1_P) dx` discretized on a grid over the union of the bounding boxes.
pub fn difference_measure_atoms(p: &Polytope, q: &Polytope, resolution: usize) -> Result<SignedAtomicMeasure> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    CellGrid::covering(&[p, q], resolution)?.difference_atoms(p, q, 1.0)
}

/// `μ` lumped into the grid cells: facets are finely subdivided and the mass of each
/// piece goes to the center of the cell holding its centroid.
pub fn perturbation_atoms(grid: &CellGrid, mu: &DiscretePerturbation) -> Result<SignedAtomicMeasure> {
    let base = mu.base();
    let n = base.dim();
    let min_width = (0..n).map(|k| grid.width(k)).fold(f64::INFINITY, f64::min);
    let mut mass = std::collections::BTreeMap::<usize, f64>::new();
    for d in mu.densities() {
        let face = base.facet(d.facet());
        for s in base.triangulate_face(n - 1, d.facet()) {
            let pts = s.points();
            let diam = pts
                .iter()
                .flat_map(|a| pts.iter().map(move |b| dist(a, b)))
                .fold(0.0, f64::max);
            let budget = (1usize << 18) as f64;
            let k = ((8.0 * diam / min_width).ceil())
                .min(budget.powf(1.0 / (n - 1).max(1) as f64))
                .max(1.0) as usize;
            for sub in s.subdivide(k) {
                let c = centroid(sub.points());
                let w = sub.volume() * d.eval(&face.to_chart(&c));
                let cell = grid
                    .cell_of(&c)
                    .ok_or_else(|| Error::InvalidArgument("grid does not cover the perturbed facets".into()))?;
                *mass.entry(cell).or_insert(0.0) += w;
            }
        }
    }
    SignedAtomicMeasure::new(n, mass.into_iter().map(|(cell, w)| (grid.center(cell), w)))
}

/// `‖(1/t)(1_{P_t} - 1_P) - μ‖_W` on a fixed grid covering `P` and `P_t` for the largest `t`.
pub fn weak_convergence_diagnostic(fam: &PerturbedFamily, resolution: usize, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let top = t_grid.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::InvalidArgument("grid needs a positive step".into()));
    }
    let base = fam.base();
    let outer = family_at(fam, top)?;
    let grid = CellGrid::covering(&[base, &outer], resolution)?;
    let target = perturbation_atoms(&grid, fam.perturbation())?;
    t_grid
        .iter()
        .map(|&t| {
            let pt = family_at(fam, t)?;
            let diff = grid.difference_atoms(base, &pt, 1.0 / t)?;
            Ok((t, wasserstein_norm(&diff.difference(&target)?)?))
        })
        .collect()
}

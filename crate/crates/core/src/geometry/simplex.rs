use crate::error::{Error, Result};
use crate::linalg::{dot, sub, Matrix};
use crate::scalar::{factorial, Scalar};

/// `d + 1` affinely independent points in ℝⁿ spanning a `d`-simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex<S = f64> {
    points: Vec<Vec<S>>,
}

impl<S: Scalar> Simplex<S> {
    pub fn new(points: Vec<Vec<S>>, eps: S) -> Result<Self> {
        let s = Self::new_unchecked(points);
        let g = s.gram_determinant();
        if g <= eps {
            return Err(Error::DegenerateSimplex(g.to_f64_lossy()));
        }
        Ok(s)
    }

    pub(crate) fn new_unchecked(points: Vec<Vec<S>>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.len() - 1
    }

    /// Gram determinant of the edge vectors from the first point.
    pub fn gram_determinant(&self) -> S {
        let d = self.dim();
        if d == 0 {
            return S::one();
        }
        let edges: Vec<Vec<S>> = self.points[1..].iter().map(|p| sub(p, &self.points[0])).collect();
        let mut g = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = dot(&edges[i], &edges[j]);
            }
        }
        g.determinant()
    }

    /// `d`-dimensional volume (1 for a point).
    pub fn volume(&self) -> S {
        let d = self.dim();
        let scaled = if d > 0 && d == self.points[0].len() {
            let edges: Vec<Vec<S>> = self.points[1..].iter().map(|p| sub(p, &self.points[0])).collect();
            Matrix::from_rows(&edges).determinant().abs()
        } else {
            self.gram_determinant().max(S::zero()).sqrt()
        };
        scaled / factorial::<S>(d as u32)
    }

    /// Splits every edge into `k` parts and returns the `k^d` sub-simplices of the
    /// regular (Freudenthal/Kuhn) subdivision.
    pub fn subdivide(&self, k: usize) -> Vec<Simplex<S>> {
        let d = self.dim();
        if k <= 1 || d == 0 {
            return vec![self.clone()];
        }
        // lattice points of the scaled standard simplex in "staircase" coordinates
        let point_at = |steps: &[usize]| -> Vec<S> {
            // steps[j] = number of unit moves along edge direction (p_{j+1} - p_j)
            let mut x = self.points[0].clone();
            let kk = S::lit(k as f64);
            for (j, &s) in steps.iter().enumerate() {
                let w = S::lit(s as f64) / kk;
                for (xi, (a, b)) in x.iter_mut().zip(self.points[j + 1].iter().zip(&self.points[j])) {
                    *xi += w * (*a - *b);
                }
            }
            x
        };
        let mut out = Vec::new();
        let perms = permutations(d);
        // base cube corners c with k-1 >= c_0 >= c_1 >= ... >= c_{d-1} >= 0 (Kuhn cells
        // clipped to the simplex)
        let mut corner = vec![0usize; d];
        loop {
            for perm in &perms {
                let mut cur = corner.clone();
                let mut pts = vec![point_at(&cur)];
                let mut ok = is_monotone(&cur, k);
                for &axis in perm {
                    cur[axis] += 1;
                    if !is_monotone(&cur, k) {
                        ok = false;
                        break;
                    }
                    pts.push(point_at(&cur));
                }
                if ok {
                    out.push(Simplex::new_unchecked(pts));
                }
            }
            if !next_corner(&mut corner, k) {
                break;
            }
        }
        out
    }
}

fn is_monotone(c: &[usize], k: usize) -> bool {
    c.first().is_none_or(|&c0| c0 <= k) && c.windows(2).all(|w| w[0] >= w[1])
}

fn next_corner(c: &mut [usize], k: usize) -> bool {
    for i in (0..c.len()).rev() {
        if c[i] + 1 < k {
            c[i] += 1;
            for j in i + 1..c.len() {
                c[j] = 0;
            }
            return true;
        }
    }
    false
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..d).permutations(d).collect()
}

//! Small dense linear algebra for desk-scale problems (dimension ≤ a few hundred).

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<S: Scalar>(a: &[S], s: S) -> Vec<S> {
    a.iter().map(|&x| x * s).collect()
}

/// `a + s * b`
pub fn axpy<S: Scalar>(a: &[S], s: S, b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

pub fn centroid<S: Scalar>(points: &[Vec<S>]) -> Vec<S> {
    let n = points[0].len();
    let mut c = vec![S::zero(); n];
    for p in points {
        for (ci, &pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    let k = S::lit(points.len() as f64);
    c.iter_mut().for_each(|x| *x /= k);
    c
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>]) -> Self {
        Self::from_rows(cols).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn scaled(&self, s: S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let mut a = self.clone();
        let n = self.rows;
        let mut det = S::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)] == S::zero() {
                return S::zero();
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f != S::zero() {
                    for j in k..n {
                        let v = a[(k, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Solves `self * x = b`; `None` when a pivot falls below `tol` (relative to the
    /// largest entry).
    pub fn solve(&self, b: &[S], tol: S) -> Option<Vec<S>> {
        let cols = self.solve_many(&[b.to_vec()], tol)?;
        cols.into_iter().next()
    }

    fn solve_many(&self, rhs: &[Vec<S>], tol: S) -> Option<Vec<Vec<S>>> {
        assert_eq!(self.rows, self.cols, "solve with non-square matrix");
        let n = self.rows;
        let scale = self.data.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
        if scale == S::zero() {
            return None;
        }
        let mut a = self.clone();
        let mut x: Vec<Vec<S>> = rhs.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)].abs() <= tol * scale {
                return None;
            }
            if p != k {
                a.swap_rows(p, k);
                for col in x.iter_mut() {
                    col.swap(p, k);
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f != S::zero() {
                    for j in k..n {
                        let v = a[(k, j)];
                        a[(i, j)] -= f * v;
                    }
                    for col in x.iter_mut() {
                        let v = col[k];
                        col[i] -= f * v;
                    }
                }
            }
        }
        for col in x.iter_mut() {
            for k in (0..n).rev() {
                let mut s = col[k];
                for j in k + 1..n {
                    s -= a[(k, j)] * col[j];
                }
                col[k] = s / a[(k, k)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self, tol: S) -> Option<Self> {
        let n = self.rows;
        let eye: Vec<Vec<S>> = Self::identity(n).to_rows();
        let cols = self.solve_many(&eye, tol)?;
        Some(Self::from_columns(&cols))
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the matrix whose columns are the eigenvectors.
    pub fn symmetric_eigen(&self) -> (Vec<S>, Self) {
        assert_eq!(self.rows, self.cols, "eigen of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = S::epsilon();
        for _sweep in 0..100 {
            let mut off = S::zero();
            let mut diag = S::zero();
            for i in 0..n {
                diag += a[(i, i)] * a[(i, i)];
                for j in 0..n {
                    if i != j {
                        off += a[(i, j)] * a[(i, j)];
                    }
                }
            }
            if off <= eps * eps * diag || off == S::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == S::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (S::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[(i, i)]).collect(), v)
    }

    /// `f(self)` for symmetric `self`, applied through the spectrum.
    pub fn symmetric_function(&self, f: impl Fn(S) -> S) -> Self {
        let (vals, vecs) = self.symmetric_eigen();
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for k in 0..n {
            let fk = f(vals[k]);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += vecs[(i, k)] * fk * vecs[(j, k)];
                }
            }
        }
        out
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Gram–Schmidt on the given vectors, dropping those whose residual norm is
/// below `tol`. Returns an orthonormal basis of their span.
pub fn orthonormalize<S: Scalar>(vectors: &[Vec<S>], tol: S) -> Vec<Vec<S>> {
    let mut basis: Vec<Vec<S>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = norm(&w);
        if nw > tol {
            basis.push(scale(&w, S::one() / nw));
        }
    }
    basis
}

/// Dimension of the affine hull of `points`.
pub fn affine_rank<S: Scalar>(points: &[Vec<S>], tol: S) -> usize {
    if points.is_empty() {
        return 0;
    }
    let diffs: Vec<Vec<S>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    orthonormalize(&diffs, tol).len()
}

/// Unit vector orthogonal to the `n - 1` given vectors in ℝⁿ, if they are independent.
pub fn orthogonal_complement_vector<S: Scalar>(vectors: &[Vec<S>], n: usize, tol: S) -> Option<Vec<S>> {
    let basis = orthonormalize(vectors, tol);
    if basis.len() != n - 1 {
        return None;
    }
    (0..n).find_map(|k| {
        let mut e = vec![S::zero(); n];
        e[k] = S::one();
        let mut w = e;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = norm(&w);
        (nw > S::lit(0.5) / S::lit(n as f64).sqrt()).then(|| scale(&w, S::one() / nw))
    })
}

/// Merges points closer than a tolerance, with hashed lookup.
#[derive(Clone, Debug, Default)]
pub struct PointIndex {
    tol: f64,
    buckets: std::collections::HashMap<Vec<i64>, Vec<usize>>,
    points: Vec<Vec<f64>>,
}

impl PointIndex {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            buckets: Default::default(),
            points: Vec::new(),
        }
    }

    /// Index of a stored point within `tol` of `x`, inserting `x` if there is none.
    /// The flag is `true` for a new point.
    pub fn insert(&mut self, x: &[f64]) -> (usize, bool) {
        let key: Vec<i64> = x.iter().map(|&c| (c / self.tol).floor() as i64).collect();
        let n = key.len();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let probe: Vec<i64> = key
                .iter()
                .map(|&k| {
                    let d = (c % 3) as i64 - 1;
                    c /= 3;
                    k + d
                })
                .collect();
            if let Some(ids) = self.buckets.get(&probe) {
                if let Some(&id) = ids.iter().find(|&&id| dist(&self.points[id], x) <= self.tol) {
                    return (id, false);
                }
            }
        }
        let id = self.points.len();
        self.buckets.entry(key).or_default().push(id);
        self.points.push(x.to_vec());
        (id, true)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }
}

#![allow(dead_code)]

use polyperturb::geometry::Polytope;
use polyperturb::isotropy::to_isotropic;

/// `[-a, a]^n`.
pub fn cube(n: usize, a: f64) -> Polytope {
    let pts: Vec<Vec<f64>> = (0..1usize << n)
        .map(|m| (0..n).map(|j| if m >> j & 1 == 1 { a } else { -a }).collect())
        .collect();
    Polytope::from_vertices(&pts).unwrap()
}

/// The cube with identity covariance, `[-√3, √3]^n`.
pub fn isotropic_cube(n: usize) -> Polytope {
    cube(n, 3f64.sqrt())
}

pub fn triangle() -> Polytope {
    Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
}

pub fn isotropic_triangle() -> Polytope {
    to_isotropic(&triangle()).unwrap().0
}

/// Hull of (0,0), (2,0), (2.5,1), (0,1.5) in isotropic position.
pub fn quadrilateral() -> Polytope {
    let q = Polytope::from_vertices(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![2.5, 1.0], vec![0.0, 1.5]]).unwrap();
    to_isotropic(&q).unwrap().0
}

/// Index of the facet with outer normal closest to `u`.
pub fn facet_towards(p: &Polytope, u: &[f64]) -> usize {
    let score = |i: usize| -> f64 { p.halfspaces()[i].normal.iter().zip(u).map(|(a, b)| a * b).sum() };
    (0..p.num_facets()).max_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap()
}

use polyperturb::linalg::Matrix;

/// Minimizes `½ zᵀQz - rᵀz` with `z_j >= 0` for `j >= free`, by the Lawson–Hanson
/// active-set method.
pub fn bounded_qp(q: &Matrix<f64>, r: &[f64], free: usize) -> Vec<f64> {
    let m = r.len();
    let solve = |passive: &[bool]| -> Vec<f64> {
        let ids: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
        let sub = Matrix::from_rows(&ids.iter().map(|&i| ids.iter().map(|&j| q[(i, j)]).collect()).collect::<Vec<_>>());
        let rhs: Vec<f64> = ids.iter().map(|&i| r[i]).collect();
        let s = sub.solve(&rhs, 1e-300).expect("passive block is nonsingular");
        let mut out = vec![0.0; m];
        for (&i, v) in ids.iter().zip(s) {
            out[i] = v;
        }
        out
    };
    let scale = r.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let mut passive: Vec<bool> = (0..m).map(|j| j < free).collect();
    let mut z = solve(&passive);
    for _ in 0..10 * m + 10 {
        let grad: Vec<f64> = (0..m).map(|i| r[i] - (0..m).map(|j| q[(i, j)] * z[j]).sum::<f64>()).collect();
        let Some(enter) = (free..m)
            .filter(|&j| !passive[j] && grad[j] > 1e-13 * scale)
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]))
        else {
            break;
        };
        passive[enter] = true;
        loop {
            let s = solve(&passive);
            let blocking: Vec<usize> = (free..m).filter(|&k| passive[k] && s[k] <= 0.0).collect();
            if blocking.is_empty() {
                z = s;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&k| z[k] / (z[k] - s[k]))
                .fold(f64::INFINITY, f64::min);
            for k in 0..m {
                z[k] += alpha * (s[k] - z[k]);
            }
            for k in free..m {
                if passive[k] && z[k] <= 1e-15 * scale {
                    passive[k] = false;
                    z[k] = 0.0;
                }
            }
        }
    }
    z
}

/// Least-squares projection onto concave piecewise-linear functions on sorted 1-D nodes,
/// parameterized as `α + βx - Σ_j c_j (x - x_j)₊` with `c_j >= 0` over interior nodes.
/// Returns node values for mass matrix `mass` and load vector `load`.
pub fn concave_projection_oracle(x: &[f64], mass: &Matrix<f64>, load: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n], x.to_vec()];
    for &j in &order[1..n - 1] {
        columns.push(x.iter().map(|&xi| -(xi - x[j]).max(0.0)).collect());
    }
    let b = Matrix::from_columns(&columns);
    let q = b.transpose().mul(mass).mul(&b);
    let r = b.transpose().mul_vec(load);
    let z = bounded_qp(&q, &r, 2);
    b.mul_vec(&z)
}

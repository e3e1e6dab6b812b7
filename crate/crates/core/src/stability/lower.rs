use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{GeometryOptions, Halfspace, Polytope};
use crate::linalg::norm;
use crate::quadrature::{face_in_chart, integrate_polytope, AffineMap, Polynomial};

use super::{BoundaryFunction, FaceValue};

/// `g = -((<a, y> + b)₊)^exponent` on one lower-dimensional face, in its chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerFaceDensity {
    pub dim: usize,
    pub index: usize,
    pub a: Vec<f64>,
    pub b: f64,
    pub exponent: u32,
}

/// Best density found on one face with its normalized pairing `<h, g> / ‖g‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerFaceCandidate {
    pub density: LowerFaceDensity,
    pub score: f64,
}

/// `(∫ h g, ∫ g²)` on the face.
pub(crate) fn density_moments(p: &Polytope, h: &Polynomial, g: &LowerFaceDensity) -> Result<(f64, f64)> {
    let face = &p.face_lattice().faces(g.dim)[g.index];
    if g.dim == 0 {
        let c = g.b.max(0.0).powi(g.exponent as i32);
        return Ok((-c * h.eval(face.relint_point()), c * c));
    }
    let chart = face_in_chart(p, face)?;
    let pulled = h.compose(&AffineMap::face_chart(face));
    Ok(clipped_moments(&chart, &pulled, &g.a, g.b, g.exponent).unwrap_or((0.0, 0.0)))
}

/// `(-∫_R h (<a,y>+b)^k, ∫_R (<a,y>+b)^{2k})` over `R = {y ∈ chart : <a,y> + b >= 0}`.
fn clipped_moments(chart: &Polytope, h: &Polynomial, a: &[f64], b: f64, k: u32) -> Option<(f64, f64)> {
    let mut hs = chart.halfspaces().to_vec();
    let minus_a: Vec<f64> = a.iter().map(|x| -x).collect();
    let len = norm(a);
    if len > 1e-12 {
        hs.push(Halfspace::new(minus_a, b)?);
    } else if b <= 0.0 {
        return None;
    }
    let opts = GeometryOptions {
        eps: chart.eps(),
        max_halfspaces: 128,
        max_vertices: 128,
    };
    let region = Polytope::from_halfspaces_with(&hs, &opts).ok()?;
    let lin = Polynomial::affine(a, b);
    let pow = lin.pow(k);
    let pair = integrate_polytope(&h.mul(&pow), &region).ok()?;
    let sq = integrate_polytope(&pow.mul(&pow), &region).ok()?;
    (sq > 0.0).then_some((-pair, sq))
}

/// Maximizes `<h, g> / ‖g‖` over the densities `-((<a,y>+b)₊)^{n - dim G}` on every face `G`
/// of dimension below `n - 1` where `h` is a polynomial. Vertices are solved exactly; other
/// faces by Nelder–Mead from `restarts + 1` starting points on the unit sphere of `(a, b)`.
pub fn lower_face_search(p: &Polytope, h: &BoundaryFunction, restarts: usize) -> Result<Option<LowerFaceCandidate>> {
    let n = p.dim();
    let mut jobs = Vec::new();
    for d in 0..n.saturating_sub(1) {
        for index in 0..p.face_lattice().faces(d).len() {
            if let Some(FaceValue::Polynomial(q)) = h.get(d, index) {
                jobs.push((d, index, q));
            }
        }
    }
    let found: Vec<Option<LowerFaceCandidate>> = jobs
        .into_par_iter()
        .map(|(d, index, q)| search_face(p, d, index, q, restarts))
        .collect::<Result<_>>()?;
    Ok(found
        .into_iter()
        .flatten()
        .fold(None, |best: Option<LowerFaceCandidate>, c| match best {
            Some(b) if b.score >= c.score => Some(b),
            _ => Some(c),
        }))
}

fn search_face(p: &Polytope, d: usize, index: usize, h: &Polynomial, restarts: usize) -> Result<Option<LowerFaceCandidate>> {
    let exponent = (p.dim() - d) as u32;
    let face = &p.face_lattice().faces(d)[index];
    if d == 0 {
        return Ok(Some(LowerFaceCandidate {
            density: LowerFaceDensity {
                dim: 0,
                index,
                a: Vec::new(),
                b: 1.0,
                exponent,
            },
            score: -h.eval(face.relint_point()),
        }));
    }
    let chart = face_in_chart(p, face)?;
    let pulled = h.compose(&AffineMap::face_chart(face));
    let (lo, hi) = chart.bounding_box();
    let radius = lo.iter().zip(&hi).map(|(x, y)| x.abs().max(y.abs())).fold(0.0, f64::max).max(1e-12);
    // chart coordinates are rescaled by the radius so that (a, b) are comparable
    let score = |theta: &[f64]| -> f64 {
        let len = norm(theta);
        if !(len > 0.0) {
            return f64::NEG_INFINITY;
        }
        let a: Vec<f64> = theta[..d].iter().map(|x| x / (len * radius)).collect();
        let b = theta[d] / len;
        match clipped_moments(&chart, &pulled, &a, b, exponent) {
            Some((pair, sq)) => pair / sq.sqrt(),
            None => f64::NEG_INFINITY,
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in 0..=restarts {
        let x0: Vec<f64> = if start == 0 {
            let mut e = vec![0.0; d + 1];
            e[d] = 1.0;
            e
        } else {
            (0..=d).map(|j| 2.0 * radical_inverse(start as u64, PRIMES[j % PRIMES.len()]) - 1.0).collect()
        };
        let (x, fx) = nelder_mead(|t| -score(t), &x0, 0.5, 400 * (d + 1), 1e-12);
        if best.as_ref().map_or(true, |b| -fx > b.1) {
            best = Some((x, -fx));
        }
    }
    let Some((theta, value)) = best else { return Ok(None) };
    if !value.is_finite() {
        return Ok(None);
    }
    let len = norm(&theta);
    Ok(Some(LowerFaceCandidate {
        density: LowerFaceDensity {
            dim: d,
            index,
            a: theta[..d].iter().map(|x| x / (len * radius)).collect(),
            b: theta[d] / len,
            exponent,
        },
        score: value,
    }))
}

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Derivative-free minimization with the standard reflection, expansion, contraction and
/// shrink coefficients `(1, 2, ½, ½)`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && worst.is_finite() && (worst - best).abs() <= ftol * (best.abs() + worst.abs()).max(1e-300) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |s: f64, x: &[f64]| -> Vec<f64> { centroid.iter().zip(x).map(|(c, w)| c + s * (w - c)).collect() };
        let reflected = toward(-1.0, &simplex[n].0);
        let fr = eval(&reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = toward(-2.0, &simplex[n].0);
            let fe = eval(&expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < simplex[n].1 { (reflected.clone(), fr) } else { (simplex[n].0.clone(), simplex[n].1) };
            let contracted = toward(0.5, &target);
            let fc = eval(&contracted, &mut evals);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, w)| b + 0.5 * (w - b)).collect();
                    let fx = eval(&x, &mut evals);
                    *v = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

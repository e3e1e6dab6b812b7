use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::AffineMap;

/// Largest total degree accepted for user-supplied integrands.
pub const DEGREE_CAP: u32 = 8;

/// Sparse multivariate polynomial, `Σ coef · x^exp`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S = f64> {
    dim: usize,
    terms: BTreeMap<Vec<u32>, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        Self::monomial(vec![0; dim], c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, S::one())
    }

    /// The coordinate function `x_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(e, S::one())
    }

    pub fn monomial(exponents: Vec<u32>, coef: S) -> Self {
        let dim = exponents.len();
        let mut p = Self::zero(dim);
        p.add_term(exponents, coef);
        p
    }

    /// Affine function `<a, x> + b`.
    pub fn affine(a: &[S], b: S) -> Self {
        let dim = a.len();
        let mut p = Self::constant(dim, b);
        for (i, &ai) in a.iter().enumerate() {
            p = p.add(&Self::variable(dim, i).scale(ai));
        }
        p
    }

    /// `‖x‖²`.
    pub fn norm_squared(dim: usize) -> Self {
        (0..dim).fold(Self::zero(dim), |acc, i| {
            let mut e = vec![0; dim];
            e[i] = 2;
            acc.add(&Self::monomial(e, S::one()))
        })
    }

    /// Builds from `(exponents, coef)` pairs, summing duplicates and enforcing the degree cap.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, S)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        let degree = p.degree();
        if degree > DEGREE_CAP {
            return Err(Error::DegreeTooHigh {
                degree,
                cap: DEGREE_CAP,
            });
        }
        Ok(p)
    }

    fn add_term(&mut self, exponents: Vec<u32>, coef: S) {
        debug_assert_eq!(exponents.len(), self.dim);
        let entry = self.terms.entry(exponents).or_insert(S::zero());
        *entry += coef;
        if *entry == S::zero() {
            self.terms.retain(|_, c| *c != S::zero());
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], S)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exponents: &[u32]) -> S {
        self.terms.get(exponents).copied().unwrap_or(S::zero())
    }

    pub fn eval(&self, x: &[S]) -> S {
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(x)
                    .fold(c, |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-S::one()))
    }

    pub fn scale(&self, s: S) -> Self {
        if s == S::zero() {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, &c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let mut out = Self::zero(self.dim);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(S::zero()) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != S::zero());
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.dim), |acc, _| acc.mul(self))
    }

    /// `p ∘ map`: substitutes `x = A y + c`, expanding every term exactly.
    /// The result is a polynomial in `map.domain_dim()` variables.
    pub fn compose(&self, map: &AffineMap<S>) -> Self {
        assert_eq!(map.codomain_dim(), self.dim, "composition dimension mismatch");
        let d = map.domain_dim();
        // coordinate x_i as an affine polynomial in y, with cached powers
        let coords: Vec<Self> = (0..self.dim)
            .map(|i| Self::affine(map.matrix().row(i), map.offset()[i]))
            .collect();
        let mut powers: Vec<Vec<Self>> = coords.iter().map(|c| vec![Self::one(d), c.clone()]).collect();
        let mut out = Self::zero(d);
        for (e, &coef) in &self.terms {
            let mut term = Self::constant(d, coef);
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().mul(&coords[i]);
                    powers[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&powers[i][k]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * S::lit(e[i] as f64));
        }
        out
    }

    /// Largest coefficient difference to `other`.
    pub fn max_coef_diff(&self, other: &Self) -> S {
        let keys: std::collections::BTreeSet<&Vec<u32>> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter()
            .map(|k| (self.coefficient(k) - other.coefficient(k)).abs())
            .fold(S::zero(), S::max)
    }

    /// Converts the coefficient type.
    pub fn cast<T: Scalar>(&self) -> Polynomial<T> {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, &c)| (e.clone(), T::lit(c.to_f64_lossy())))
                .collect(),
        }
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{k}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

//! Signed atomic measures, total variation, Wasserstein distances and the Wasserstein norm.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, PointIndex};

pub use simplex::{solve_transport, Pricing, TransportSolution};

/// Default cap on the number of atoms in a measure.
pub const DEFAULT_ATOM_CAP: usize = 10_000;
/// Points closer than this are merged.
pub const DEDUP_EPS: f64 = 1e-9;
/// Largest total atom count solved by the dense kernel.
pub const DENSE_LIMIT: usize = 200;
/// Mass agreement required by the balanced problem.
pub const MASS_TOL: f64 = 1e-9;

/// `Σ_k w_k δ_{x_k}` with distinct points and nonzero weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedAtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub w: f64,
}

impl SignedAtomicMeasure {
    pub fn zero(dim: usize) -> Self {
        Self { dim, atoms: Vec::new() }
    }

    pub fn new(dim: usize, atoms: impl IntoIterator<Item = (Vec<f64>, f64)>) -> Result<Self> {
        Self::with_cap(dim, atoms, DEFAULT_ATOM_CAP)
    }

    /// Merges points within [`DEDUP_EPS`], sums their weights and drops cancelled atoms.
    pub fn with_cap(dim: usize, atoms: impl IntoIterator<Item = (Vec<f64>, f64)>, cap: usize) -> Result<Self> {
        let mut index = PointIndex::new(DEDUP_EPS);
        let mut merged: Vec<Atom> = Vec::new();
        let mut scale = 0.0f64;
        for (x, w) in atoms {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if !w.is_finite() || x.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument("non-finite atom".into()));
            }
            scale = scale.max(w.abs());
            match index.insert(&x) {
                (id, false) => merged[id].w += w,
                (_, true) => merged.push(Atom { x, w }),
            }
        }
        let floor = scale * 1e-14;
        merged.retain(|a| a.w.abs() > floor);
        if merged.len() > cap {
            return Err(Error::TooManyAtoms {
                count: merged.len(),
                cap,
            });
        }
        Ok(Self { dim, atoms: merged })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `μ(X)`, the signed total mass.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.w >= 0.0)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.dim, self.atoms.iter().map(|a| (a.x.clone(), a.w * s)))
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| (a.x.clone(), a.w))
            .chain(other.atoms.iter().map(|a| (a.x.clone(), -a.w)));
        Self::new(self.dim, atoms)
    }
}

/// `(μ⁺, μ⁻)` with `μ = μ⁺ - μ⁻`.
pub fn jordan_decompose(mu: &SignedAtomicMeasure) -> (SignedAtomicMeasure, SignedAtomicMeasure) {
    let part = |sign: f64| SignedAtomicMeasure {
        dim: mu.dim,
        atoms: mu
            .atoms
            .iter()
            .filter(|a| a.w * sign > 0.0)
            .map(|a| Atom {
                x: a.x.clone(),
                w: a.w * sign,
            })
            .collect(),
    };
    (part(1.0), part(-1.0))
}

pub fn tv_norm(mu: &SignedAtomicMeasure) -> f64 {
    mu.atoms.iter().map(|a| a.w.abs()).sum()
}

/// Sparse coupling between two atom lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferencePlan {
    pub sources: Vec<Atom>,
    pub targets: Vec<Atom>,
    /// `(source index, target index, mass)` for every nonzero entry.
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransferencePlan {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.targets.len()]; self.sources.len()];
        for &(i, j, m) in &self.entries {
            out[i][j] += m;
        }
        out
    }

    pub fn cost(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, m)| m * dist(&self.sources[i].x, &self.targets[j].x))
            .sum()
    }
}

fn check_positive(mu: &SignedAtomicMeasure) -> Result<()> {
    match mu.atoms.iter().find(|a| a.w < 0.0) {
        Some(a) => Err(Error::NegativeWeight(a.w)),
        None => Ok(()),
    }
}

fn check_dims(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure) -> Result<()> {
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch {
            expected: mu.dim,
            got: nu.dim,
        });
    }
    Ok(())
}

fn pricing_for(total_atoms: usize) -> Pricing {
    if total_atoms <= DENSE_LIMIT {
        Pricing::Dense
    } else {
        Pricing::Block
    }
}

/// Projection key used to order atoms for the initial basis.
fn sort_key(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, &c)| c * (1.0 + 0.37 * i as f64)).sum()
}

/// Balanced transport of equal-mass positive measures under Euclidean cost.
pub fn wasserstein(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure) -> Result<(f64, TransferencePlan)> {
    wasserstein_with(mu, nu, pricing_for(mu.len() + nu.len()))
}

pub fn wasserstein_with(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure, pricing: Pricing) -> Result<(f64, TransferencePlan)> {
    check_dims(mu, nu)?;
    check_positive(mu)?;
    check_positive(nu)?;
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > MASS_TOL * a.abs().max(b.abs()).max(1.0) {
        return Err(Error::MassMismatch(a, b));
    }
    let mut plan = TransferencePlan {
        sources: mu.atoms.clone(),
        targets: nu.atoms.clone(),
        entries: Vec::new(),
    };
    if mu.is_empty() || nu.is_empty() {
        return Ok((0.0, plan));
    }
    let supply: Vec<f64> = mu.atoms.iter().map(|x| x.w).collect();
    let mut demand: Vec<f64> = nu.atoms.iter().map(|x| x.w).collect();
    *demand.last_mut().unwrap() += a - b;
    let row_keys: Vec<f64> = mu.atoms.iter().map(|x| sort_key(&x.x)).collect();
    let col_keys: Vec<f64> = nu.atoms.iter().map(|x| sort_key(&x.x)).collect();
    let cost = |i: usize, j: usize| dist(&mu.atoms[i].x, &nu.atoms[j].x);
    let sol = solve_transport(&supply, &demand, &row_keys, &col_keys, cost, pricing)?;
    plan.entries = sol.flows;
    Ok((sol.objective, plan))
}

/// Partial transport with unit penalties for created and destroyed mass.
pub fn generalized_wasserstein(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure) -> Result<f64> {
    generalized_wasserstein_with(mu, nu, pricing_for(mu.len() + nu.len() + 2))
}

/// Solved as a balanced problem with one dummy node per side: the dummy source
/// carries `ν(X)`, the dummy sink `μ(X)`, real-to-dummy arcs cost 1 and the
/// dummy-to-dummy arc costs 0.
pub fn generalized_wasserstein_with(mu: &SignedAtomicMeasure, nu: &SignedAtomicMeasure, pricing: Pricing) -> Result<f64> {
    check_dims(mu, nu)?;
    check_positive(mu)?;
    check_positive(nu)?;
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if mu.is_empty() || nu.is_empty() {
        return Ok(a + b);
    }
    let (m, k) = (mu.len(), nu.len());
    let mut supply: Vec<f64> = mu.atoms.iter().map(|x| x.w).collect();
    supply.push(b);
    let mut demand: Vec<f64> = nu.atoms.iter().map(|x| x.w).collect();
    demand.push(a);
    let mut row_keys: Vec<f64> = mu.atoms.iter().map(|x| sort_key(&x.x)).collect();
    row_keys.push(f64::INFINITY);
    let mut col_keys: Vec<f64> = nu.atoms.iter().map(|x| sort_key(&x.x)).collect();
    col_keys.push(f64::INFINITY);
    let cost = |i: usize, j: usize| match (i == m, j == k) {
        (false, false) => dist(&mu.atoms[i].x, &nu.atoms[j].x),
        (true, true) => 0.0,
        _ => 1.0,
    };
    Ok(solve_transport(&supply, &demand, &row_keys, &col_keys, cost, pricing)?.objective)
}

/// `‖μ‖_W = W̄(μ⁺, μ⁻)`.
pub fn wasserstein_norm(mu: &SignedAtomicMeasure) -> Result<f64> {
    let (p, n) = jordan_decompose(mu);
    generalized_wasserstein(&p, &n)
}

use std::path::{Path, PathBuf};

use polyperturb::geometry::{generic_direction, Polytope};
use polyperturb::io::{build_perturbation, perturbation_specs, read_off, DensitySpec, MeasureSpec, PolynomialSpec, PolytopeSpec};
use polyperturb::isotropy::{isotropic_constant, moments, to_isotropic, CompositeMomentFunctional};
use polyperturb::perturbation::{
    build_family, canonical_density, family_at, pair, weak_convergence_diagnostic, weak_derivative_fd, CanonicalKind,
    DiscretePerturbation, DELTA_GEN,
};
use polyperturb::quadrature::Polynomial;
use polyperturb::stability::{stability_report_with, StabilityOptions, Verdict};
use polyperturb::transport::{generalized_wasserstein, jordan_decompose, tv_norm, wasserstein, wasserstein_norm, SignedAtomicMeasure};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, Kind, PerturbCommand, PerturbationSource};
use crate::error::{CliError, CliResult};
use crate::output::{InputDigest, Table};

const DIRECTION_ATTEMPTS: usize = 1000;

pub struct Outcome {
    pub result: Value,
    pub table: Table,
    pub inconclusive: bool,
}

impl Outcome {
    fn new(result: Value, table: Table) -> Self {
        Self {
            result,
            table,
            inconclusive: false,
        }
    }
}

/// Reads and fingerprints every input file of a run.
#[derive(Default)]
pub struct Inputs {
    pub digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &str, path: &Path) -> CliResult<String> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.digests.push(InputDigest {
            role: role.into(),
            path: path.display().to_string(),
            sha256,
        });
        String::from_utf8(bytes).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn json<T: DeserializeOwned>(&mut self, role: &str, path: &Path) -> CliResult<T> {
        let text = self.read(role, path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    fn polytope(&mut self, path: &Path, eps: f64) -> CliResult<Polytope> {
        let at = |source| CliError::Core {
            path: Some(path.to_path_buf()),
            source,
        };
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")) {
            let text = self.read("polytope", path)?;
            read_off(&text, eps).map_err(at)
        } else {
            let spec: PolytopeSpec = self.json("polytope", path)?;
            spec.build(eps).map_err(at)
        }
    }

    fn measure(&mut self, role: &str, path: &Path) -> CliResult<SignedAtomicMeasure> {
        let spec: MeasureSpec = self.json(role, path)?;
        spec.build().map_err(|source| CliError::Core {
            path: Some(path.to_path_buf()),
            source,
        })
    }

    fn perturbation(&mut self, p: &Polytope, source: &PerturbationSource) -> CliResult<DiscretePerturbation> {
        if let Some(path) = &source.perturbation {
            let specs: Vec<DensitySpec> = self.json("perturbation", path)?;
            return build_perturbation(p, &specs).map_err(|source| CliError::Core {
                path: Some(path.clone()),
                source,
            });
        }
        let (Some(kind), Some(facet)) = (source.kind, source.facet) else {
            return Err(CliError::Usage("either --perturbation or --kind with --facet is required".into()));
        };
        let kind = match (kind, source.ridge) {
            (Kind::Hinge, Some(ridge)) => CanonicalKind::Hinge { ridge },
            (Kind::Hinge, None) => return Err(CliError::Usage("--kind hinge needs --ridge".into())),
            (_, Some(_)) => return Err(CliError::Usage("--ridge only applies to --kind hinge".into())),
            (Kind::Shift, None) => CanonicalKind::Shift,
            (Kind::Pyramid, None) => CanonicalKind::Pyramid,
        };
        Ok(DiscretePerturbation::single(p, canonical_density(p, kind, facet)?)?)
    }

    fn polynomial(&mut self, path: &Path, dim: usize) -> CliResult<Polynomial> {
        let spec: PolynomialSpec = self.json("poly", path)?;
        let at = |source| CliError::Core {
            path: Some(path.to_path_buf()),
            source,
        };
        let q = spec.build().map_err(at)?;
        if q.dim() != dim {
            return Err(at(polyperturb::Error::DimensionMismatch { expected: dim, got: q.dim() }));
        }
        Ok(q)
    }
}

pub fn run(cli: &Cli, inputs: &mut Inputs) -> CliResult<Outcome> {
    let eps = cli.eps_geo;
    match &cli.command {
        Command::Moments { polytope } => {
            let p = inputs.polytope(polytope, eps)?;
            let m = moments(&p);
            let covariance = m.covariance.to_rows();
            let mut table = Table::new(&["quantity", "i", "j", "value"]);
            table.push(vec!["volume".into(), "".into(), "".into(), m.volume.into()]);
            for (i, &c) in m.centroid.iter().enumerate() {
                table.push(vec!["centroid".into(), i.into(), "".into(), c.into()]);
            }
            for (i, row) in covariance.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    table.push(vec!["covariance".into(), i.into(), j.into(), c.into()]);
                }
            }
            Ok(Outcome::new(
                json!({ "dim": p.dim(), "volume": m.volume, "centroid": m.centroid, "covariance": covariance }),
                table,
            ))
        }
        Command::Isotropize { polytope } => {
            let p = inputs.polytope(polytope, eps)?;
            let (q, map) = to_isotropic(&p)?;
            let mut header: Vec<String> = (0..q.dim()).map(|i| format!("x{i}")).collect();
            header.insert(0, "vertex".into());
            let mut table = Table {
                header,
                rows: Vec::new(),
            };
            for (k, v) in q.vertices().iter().enumerate() {
                let mut row = vec![k.into()];
                row.extend(v.iter().map(|&x| x.into()));
                table.push(row);
            }
            Ok(Outcome::new(
                json!({
                    "polytope": PolytopeSpec::from_polytope(&q),
                    "map": { "matrix": map.matrix().to_rows(), "offset": map.offset() },
                    "L": isotropic_constant(&q),
                }),
                table,
            ))
        }
        Command::Lk { polytope } => {
            let p = inputs.polytope(polytope, eps)?;
            let l = isotropic_constant(&p);
            Ok(Outcome::new(json!({ "L": l }), Table::scalars(&[("L", l)])))
        }
        Command::Perturb { action } => perturb(cli, action, inputs),
        Command::Wass { mu, nu, generalized } => {
            let a = inputs.measure("mu", mu)?;
            let b = inputs.measure("nu", nu)?;
            if *generalized {
                let d = generalized_wasserstein(&a, &b)?;
                return Ok(Outcome::new(json!({ "distance": d }), Table::scalars(&[("distance", d)])));
            }
            let (d, plan) = wasserstein(&a, &b)?;
            let mut table = Table::new(&["source", "target", "mass"]);
            for &(i, j, m) in &plan.entries {
                table.push(vec![i.into(), j.into(), m.into()]);
            }
            Ok(Outcome::new(json!({ "distance": d, "plan": plan }), table))
        }
        Command::Wassnorm { measure } => {
            let mu = inputs.measure("measure", measure)?;
            let (plus, minus) = jordan_decompose(&mu);
            let (w, tv) = (wasserstein_norm(&mu)?, tv_norm(&mu));
            let (pm, nm) = (plus.total_mass(), minus.total_mass());
            Ok(Outcome::new(
                json!({ "norm": w, "tv": tv, "positive_mass": pm, "negative_mass": nm }),
                Table::scalars(&[("norm", w), ("tv", tv), ("positive_mass", pm), ("negative_mass", nm)]),
            ))
        }
        Command::Tv { measure } => {
            let mu = inputs.measure("measure", measure)?;
            let (plus, minus) = jordan_decompose(&mu);
            let (tv, pm, nm) = (tv_norm(&mu), plus.total_mass(), minus.total_mass());
            Ok(Outcome::new(
                json!({ "tv": tv, "positive_mass": pm, "negative_mass": nm }),
                Table::scalars(&[("tv", tv), ("positive_mass", pm), ("negative_mass", nm)]),
            ))
        }
        Command::Stability {
            polytope,
            functional,
            refine,
            restarts,
            isotropize,
        } => {
            let mut p = inputs.polytope(polytope, eps)?;
            if *isotropize {
                p = to_isotropic(&p)?.0;
            }
            let phi = CompositeMomentFunctional::new((*functional).into(), p.dim())?;
            let opts = StabilityOptions {
                refinement: *refine,
                restarts: *restarts,
                stability_tol: cli.stability_tol,
                ..StabilityOptions::default()
            };
            let report = stability_report_with(&p, &phi, &opts)?;
            let mut table = Table::new(&["facet", "component", "residual"]);
            for (f, r) in report.residuals.iter().enumerate() {
                for (k, &x) in r.iter().enumerate() {
                    table.push(vec![f.into(), k.into(), x.into()]);
                }
            }
            let mut result = json!({ "report": report });
            if *isotropize {
                result["polytope"] = json!(PolytopeSpec::from_polytope(&p));
            }
            Ok(Outcome {
                result,
                table,
                inconclusive: report.verdict == Verdict::Inconclusive,
            })
        }
    }
}

fn perturb(cli: &Cli, action: &PerturbCommand, inputs: &mut Inputs) -> CliResult<Outcome> {
    let (polytope, source): (&PathBuf, &PerturbationSource) = match action {
        PerturbCommand::Build { polytope, source, .. } | PerturbCommand::Check { polytope, source, .. } => (polytope, source),
    };
    let p = inputs.polytope(polytope, cli.eps_geo)?;
    let mu = inputs.perturbation(&p, source)?;
    let v = generic_direction(&p, cli.seed, DELTA_GEN, DIRECTION_ATTEMPTS)?;
    let fam = build_family(&p, &mu, &v)?;
    match action {
        PerturbCommand::Build { t, .. } => {
            let mut table = Table::new(&["t", "volume", "vertices"]);
            let snapshots = t
                .iter()
                .map(|&t| {
                    let pt = family_at(&fam, t)?;
                    let volume = pt.volume();
                    table.push(vec![t.into(), volume.into(), pt.vertices().len().into()]);
                    Ok(json!({ "t": t, "volume": volume, "polytope": PolytopeSpec::from_polytope(&pt) }))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(Outcome::new(
                json!({
                    "perturbation": perturbation_specs(&mu),
                    "mass": pair(&mu, &Polynomial::one(p.dim()))?,
                    "direction": fam.direction(),
                    "t_max": fam.t_max(),
                    "snapshots": snapshots,
                }),
                table,
            ))
        }
        PerturbCommand::Check {
            poly,
            tgrid,
            weak_resolution,
            ..
        } => {
            let q = match poly {
                Some(path) => inputs.polynomial(path, p.dim())?,
                None => Polynomial::one(p.dim()),
            };
            let expected = pair(&mu, &q)?;
            let quotients = weak_derivative_fd(&fam, &q, tgrid)?;
            let errors: Vec<f64> = quotients.iter().map(|&(_, x)| (x - expected).abs()).collect();
            let ratios: Vec<Option<f64>> = errors.windows(2).map(|w| (w[1] > 0.0).then(|| w[0] / w[1])).collect();
            let weak = match weak_resolution {
                Some(r) => Some(weak_convergence_diagnostic(&fam, *r, tgrid)?),
                None => None,
            };
            let mut table = Table::new(&["t", "quotient", "expected", "error", "w_distance"]);
            for (k, &(t, x)) in quotients.iter().enumerate() {
                let w = weak.as_ref().map(|d| d[k].1);
                table.push(vec![t.into(), x.into(), expected.into(), errors[k].into(), w.into()]);
            }
            let rows: Vec<Value> = quotients
                .iter()
                .zip(&errors)
                .map(|(&(t, x), &e)| json!({ "t": t, "quotient": x, "error": e }))
                .collect();
            let mut result = json!({
                "expected": expected,
                "t_max": fam.t_max(),
                "quotients": rows,
                "richardson_ratios": ratios,
            });
            if let Some(d) = weak {
                result["weak_convergence"] = d.iter().map(|&(t, w)| json!({ "t": t, "distance": w })).collect();
            }
            Ok(Outcome::new(result, table))
        }
    }
}

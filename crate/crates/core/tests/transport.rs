use itertools::Itertools;
use polyperturb::transport::*;
use polyperturb::Error;
use proptest::prelude::*;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn unit(points: &[Vec<f64>]) -> SignedAtomicMeasure {
    SignedAtomicMeasure::new(points[0].len(), points.iter().map(|x| (x.clone(), 1.0))).unwrap()
}

fn permutation_cost(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    (0..b.len())
        .permutations(b.len())
        .map(|p| p.iter().enumerate().map(|(i, &j)| dist(&a[i], &b[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn plan_has_the_right_marginals() {
    let mu = SignedAtomicMeasure::new(2, [(vec![0.0, 0.0], 1.0), (vec![1.0, 0.0], 2.0)]).unwrap();
    let nu = SignedAtomicMeasure::new(2, [(vec![0.0, 1.0], 1.5), (vec![2.0, 0.0], 1.5)]).unwrap();
    let (w, plan) = wasserstein(&mu, &nu).unwrap();
    let dense = plan.to_dense();
    for (i, row) in dense.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - plan.sources[i].w).abs() < 1e-12);
    }
    for j in 0..plan.targets.len() {
        assert!((dense.iter().map(|r| r[j]).sum::<f64>() - plan.targets[j].w).abs() < 1e-12);
    }
    assert!((plan.cost() - w).abs() < 1e-12);
}

#[test]
fn invalid_inputs() {
    let a = SignedAtomicMeasure::new(1, [(vec![0.0], 1.0)]).unwrap();
    let b = SignedAtomicMeasure::new(1, [(vec![0.0], 2.0)]).unwrap();
    assert!(matches!(wasserstein(&a, &b), Err(Error::MassMismatch(..))));
    let neg = SignedAtomicMeasure::new(1, [(vec![0.0], -1.0)]).unwrap();
    assert!(matches!(wasserstein(&neg, &a), Err(Error::NegativeWeight(_))));
    let c = SignedAtomicMeasure::new(2, [(vec![0.0, 0.0], 1.0)]).unwrap();
    assert!(matches!(generalized_wasserstein(&a, &c), Err(Error::DimensionMismatch { .. })));
    let many = (0..20).map(|i| (vec![i as f64], 1.0));
    assert!(matches!(SignedAtomicMeasure::with_cap(1, many, 10), Err(Error::TooManyAtoms { .. })));
}

#[test]
fn both_pricing_rules_agree() {
    let pts = |s: f64| -> Vec<(Vec<f64>, f64)> { (0..40).map(|i| (vec![(i as f64 * s).sin(), (i as f64 * 0.7).cos()], 1.0)).collect() };
    let mu = SignedAtomicMeasure::new(2, pts(1.3)).unwrap();
    let nu = SignedAtomicMeasure::new(2, pts(2.9)).unwrap();
    let (a, _) = wasserstein_with(&mu, &nu, Pricing::Dense).unwrap();
    let (b, _) = wasserstein_with(&mu, &nu, Pricing::Block).unwrap();
    assert!((a - b).abs() < 1e-12 * a);
}

#[test]
fn empty_sides_cost_their_mass() {
    let a = SignedAtomicMeasure::new(1, [(vec![0.0], 0.75)]).unwrap();
    assert_eq!(generalized_wasserstein(&a, &SignedAtomicMeasure::zero(1)).unwrap(), 0.75);
    assert_eq!(wasserstein_norm(&SignedAtomicMeasure::zero(3)).unwrap(), 0.0);
}

fn cloud(k: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, dim), k)
}

fn positive(dim: usize) -> impl Strategy<Value = SignedAtomicMeasure> {
    prop::collection::vec((prop::collection::vec(-2.0..2.0f64, dim), 0.05..1.5f64), 1..8)
        .prop_map(move |atoms| SignedAtomicMeasure::new(dim, atoms).unwrap())
}

fn signed(dim: usize) -> impl Strategy<Value = SignedAtomicMeasure> {
    prop::collection::vec((prop::collection::vec(-2.0..2.0f64, dim), -1.5..1.5f64), 1..10)
        .prop_map(move |atoms| SignedAtomicMeasure::new(dim, atoms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balanced_matches_assignment((a, b) in (1usize..=6, 1usize..=3).prop_flat_map(|(k, d)| (cloud(k, d), cloud(k, d)))) {
        let (w, _) = wasserstein(&unit(&a), &unit(&b)).unwrap();
        let exact = permutation_cost(&a, &b);
        prop_assert!((w - exact).abs() <= 1e-12 * exact.max(1.0), "{} vs {}", w, exact);
    }

    #[test]
    fn norm_is_at_most_tv(mu in signed(2)) {
        prop_assert!(wasserstein_norm(&mu).unwrap() <= tv_norm(&mu) + 1e-12);
    }

    #[test]
    fn norm_is_homogeneous_and_symmetric(mu in signed(2), s in 0.1..4.0f64) {
        let w = wasserstein_norm(&mu).unwrap();
        prop_assert!((wasserstein_norm(&mu.scaled(s).unwrap()).unwrap() - s * w).abs() < 1e-10 * (1.0 + s * w));
        prop_assert!((wasserstein_norm(&mu.scaled(-1.0).unwrap()).unwrap() - w).abs() < 1e-10 * (1.0 + w));
    }

    #[test]
    fn generalized_is_a_metric(a in positive(2), b in positive(2), c in positive(2)) {
        let d = |x: &SignedAtomicMeasure, y: &SignedAtomicMeasure| generalized_wasserstein(x, y).unwrap();
        prop_assert!(d(&a, &a).abs() < 1e-12);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-10);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-10);
    }

    #[test]
    fn generalized_never_exceeds_balanced(a in cloud(4, 2), b in cloud(4, 2)) {
        let (mu, nu) = (unit(&a), unit(&b));
        let (w, _) = wasserstein(&mu, &nu).unwrap();
        prop_assert!(generalized_wasserstein(&mu, &nu).unwrap() <= w + 1e-12);
    }

    #[test]
    fn jordan_parts_reassemble(mu in signed(3)) {
        let (p, n) = jordan_decompose(&mu);
        prop_assert!(p.is_nonnegative() && n.is_nonnegative());
        prop_assert!((p.total_mass() + n.total_mass() - tv_norm(&mu)).abs() < 1e-12);
        prop_assert!((p.total_mass() - n.total_mass() - mu.total_mass()).abs() < 1e-12);
    }
}

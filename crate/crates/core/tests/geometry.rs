mod common;

use common::*;
use polyperturb::geometry::*;
use polyperturb::Error;
use proptest::prelude::*;

#[test]
fn cube_face_counts() {
    let c = cube(4, 1.0);
    let counts: Vec<usize> = (0..4).map(|d| c.face_lattice().faces(d).len()).collect();
    assert_eq!(counts, vec![16, 32, 24, 8]);
}

#[test]
fn interior_points_are_dropped() {
    let p = Polytope::from_vertices(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![0.5, 0.5], vec![1.0, 1.0]]).unwrap();
    assert_eq!(p.vertices().len(), 3);
    assert_eq!(p.num_facets(), 3);
}

#[test]
fn thin_triangle_keeps_its_vertices() {
    let p = Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1e-5]]).unwrap();
    assert_eq!(p.vertices().len(), 3);
    assert_eq!(p.num_facets(), 3);
    assert!((p.volume() - 5e-6f64).abs() < 1e-18, "{}", p.volume());
}

#[test]
fn failure_modes() {
    assert!(matches!(
        Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]),
        Err(Error::DegenerateInput(_))
    ));
    let open = [Halfspace::new(vec![1.0, 0.0], 1.0).unwrap(), Halfspace::new(vec![0.0, 1.0], 1.0).unwrap(), Halfspace::new(vec![-1.0, 0.0], 1.0).unwrap()];
    assert!(matches!(Polytope::from_halfspaces(&open), Err(Error::Unbounded)));
    let empty = [
        Halfspace::new(vec![1.0], -1.0).unwrap(),
        Halfspace::new(vec![-1.0], -1.0).unwrap(),
    ];
    assert!(matches!(Polytope::from_halfspaces(&empty), Err(Error::Empty)));
}

#[test]
fn generic_directions_avoid_facet_planes() {
    let c = cube(3, 1.0);
    let v = generic_direction(&c, 0, 1e-3, 100).unwrap();
    assert!(is_generic(&c, &v, 1e-3));
    assert!(min_genericity(&c, &v) >= 1e-3);
    assert!(!is_generic(&c, &[1.0, 0.0, 0.0], 1e-3));
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 5..14)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn representations_round_trip(pts in cloud()) {
        let Ok(p) = Polytope::from_vertices(&pts) else { return Ok(()) };
        prop_assume!(p.volume() > 1e-3);
        let q = Polytope::from_halfspaces(p.halfspaces()).unwrap();
        prop_assert!(q.same_vertices(&p, 1e-9));
        prop_assert!((q.volume() - p.volume()).abs() < 1e-12);
    }

    #[test]
    fn euler_relation(pts in cloud()) {
        let Ok(p) = Polytope::from_vertices(&pts) else { return Ok(()) };
        prop_assume!(p.volume() > 1e-3);
        let f: Vec<i64> = (0..3).map(|d| p.face_lattice().faces(d).len() as i64).collect();
        prop_assert_eq!(f[0] - f[1] + f[2], 2);
    }

    #[test]
    fn input_points_are_contained(pts in cloud()) {
        let Ok(p) = Polytope::from_vertices(&pts) else { return Ok(()) };
        prop_assert!(pts.iter().all(|x| p.contains(x)));
        let c = p.vertex_centroid();
        prop_assert!(p.contains(&c));
    }
}

use super::*;

#[test]
fn bundled_scenarios_parse() {
    for (name, _) in BUILTIN {
        let s = builtin(name).unwrap();
        assert_eq!(&s.name, name);
    }
    assert!(builtin("no-such").is_none());
}

#[test]
fn missing_and_unknown_fields_are_named() {
    let missing = r#"{"name":"x","c":0,"geometry":{"kind":"cap-in-ball","r":1},"resolution":8,"analyses":["jets"]}"#;
    let e = Scenario::from_json(missing).unwrap_err();
    assert!(e.contains("`R`"), "{e}");

    let extra = r#"{"name":"x","c":0,"geometry":{"kind":"cap-in-ball","R":1,"r":1},"resolution":8,"analyses":["jets"],"colour":1}"#;
    assert!(Scenario::from_json(extra).unwrap_err().contains("colour"));

    let empty = r#"{"name":"x","c":0,"geometry":{"kind":"cap-in-ball","R":1,"r":1},"resolution":8,"analyses":[]}"#;
    assert!(Scenario::from_json(empty).unwrap_err().starts_with("analyses"));
}

#[test]
fn euclidean_geometries_require_flat_space() {
    let text =
        r#"{"name":"x","c":1,"geometry":{"kind":"hemisphere-slab","radius":1},"resolution":8,"analyses":["jets"]}"#;
    assert!(Scenario::from_json(text).unwrap_err().starts_with("c:"));
    let text = r#"{"name":"x","c":0,"geometry":{"kind":"rotational-slab","H2":1,"s_range":[0,1]},"resolution":8,"analyses":["jets"]}"#;
    assert!(Scenario::from_json(text).unwrap_err().starts_with("seed"));
}

#[test]
fn exit_codes() {
    assert_eq!(Failure::Config("x".into()).exit_code(), 2);
    assert_eq!(Failure::from(Error::ShootingFailed("x".into())).exit_code(), 4);
    assert_eq!(Failure::from(Error::NoConvergence { iterations: 1, residual: 1.0 }).exit_code(), 4);
    assert_eq!(Failure::from(Error::NonConvexBall { radius: 2.0, limit: 1.0 }).exit_code(), 3);
}

#[test]
fn slab_shooting_fails_as_a_solver_error() {
    let s = builtin("slab-shooting").unwrap();
    let e = build_geometry(&s).err().unwrap();
    assert_eq!(e.exit_code(), 4, "{e}");
}

#[test]
fn ellipsoid_umbilics_through_the_runner() {
    let dir = tempfile::tempdir().unwrap();
    let s = builtin("ellipsoid").unwrap();
    let report = run(&s, &RunOptions { out: Some(dir.path().into()), timestamp: false }).unwrap();
    let Some(TopologySection { umbilics: UmbilicOutcome::Isolated(u), .. }) = &report.topology else {
        panic!("{:?}", report.topology)
    };
    assert_eq!(u.umbilics.len(), 4);
    assert_eq!(u.sum_of_indices, 2.0);
    assert!(report.passed, "{:?}", report.checks);
    let off = fs::read_to_string(dir.path().join("mesh.off")).unwrap();
    let counts: Vec<usize> = off.lines().nth(1).unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(counts[0], report.geometry.patches.iter().map(|p| p.vertices).sum::<usize>());
}

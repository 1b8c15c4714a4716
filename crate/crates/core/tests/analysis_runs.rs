use combat_core::analysis::{compare, ensemble, run_ca, run_pde, EnsembleConfig, MetricSeries};
use combat_core::scenarios::builtin;
use combat_core::Error;

#[test]
fn ensemble_does_not_depend_on_the_worker_count() {
    let mut s = builtin("precess-ca").unwrap().ca().unwrap().clone();
    s.steps = 80;
    let mut cfg = EnsembleConfig::new(0..4);
    cfg.jobs = 1;
    let one = ensemble("precess-ca", &s, &cfg);
    cfg.jobs = 3;
    let three = ensemble("precess-ca", &s, &cfg);
    assert_eq!(one, three);
    assert_eq!(one.n_runs(), 4);
    // every run is reproducible on its own
    let (_, single) = run_ca(&s, 2).unwrap();
    assert_eq!(one.runs[2].series, single);
}

#[test]
fn metrics_of_a_real_run_survive_csv() {
    let mut s = builtin("precess-ca").unwrap().ca().unwrap().clone();
    s.steps = 50;
    let (_, series) = run_ca(&s, 9).unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let back = MetricSeries::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.records.len(), series.records.len());
    for (a, b) in back.records.iter().zip(&series.records) {
        assert_eq!(a.mass, b.mass);
        assert_eq!(a.centroid, b.centroid);
    }
}

#[test]
fn engines_compare_within_a_family_only() {
    let mut p = builtin("classic-fronts-pde").unwrap().pde().unwrap().clone();
    p.t_end = 2e-3;
    let (_, pde) = run_pde(&p).unwrap();
    let mut c = builtin("classic-fronts-ca").unwrap().ca().unwrap().clone();
    c.steps = 60;
    let (_, ca) = run_ca(&c, 1).unwrap();
    let report = compare("classic-fronts-pde", &pde, "classic-fronts-ca", &ca).unwrap();
    assert!(report.centroid_rmse.is_finite() && report.centroid_rmse >= 0.0);
    assert!(matches!(
        compare("precess-pde", &pde, "classic-fronts-ca", &ca),
        Err(Error::ScenarioMismatch(_))
    ));
}

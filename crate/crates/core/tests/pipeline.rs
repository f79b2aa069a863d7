use locgauss::pipeline::Step;
use locgauss::testkit::{gen_blobs, sample_mean, BlobSpec};
use locgauss::{run, suggest_ds, ClusterConfig, Error, FilterParams, PointSet};

fn two_blobs() -> (PointSet, Vec<usize>) {
    let specs = [
        BlobSpec::isotropic(vec![0.0, 0.0], 1.0, 500),
        BlobSpec::isotropic(vec![10.0, 0.0], 1.0, 500),
    ];
    gen_blobs(51, &specs).unwrap()
}

#[test]
fn two_blobs_give_two_clusters_at_their_means() {
    let (points, truth) = two_blobs();
    let result = run(&points, &ClusterConfig::new(4.0)).unwrap();
    assert_eq!(result.models.len(), 2);
    for blob in 0..2 {
        let ids: Vec<usize> = (0..points.len()).filter(|&i| truth[i] == blob).collect();
        let mean = sample_mean(&points, &ids);
        let best = result
            .models
            .iter()
            .map(|m| {
                m.mu()
                    .iter()
                    .zip(&mean)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 0.15, "blob {blob}: {best}");
    }
    let s = &result.report.summary;
    assert!(s.seeds >= s.after_prune && s.after_prune >= s.clusters);
    assert_eq!(s.cluster_stats.len(), s.clusters);
}

#[test]
fn wide_separation_merges_into_one() {
    let (points, _) = two_blobs();
    assert_eq!(
        run(&points, &ClusterConfig::new(12.0))
            .unwrap()
            .models
            .len(),
        1
    );
}

#[test]
fn no_filters_drop_nothing() {
    let (points, _) = two_blobs();
    let result = run(&points, &ClusterConfig::new(4.0)).unwrap();
    assert_eq!(result.labeling.dropped(), 0);
    assert_eq!(result.report.summary.drops, Default::default());
}

#[test]
fn filters_run_in_order_and_are_reported() {
    let (points, _) = two_blobs();
    let mut config = ClusterConfig::new(4.0);
    config.filters = FilterParams {
        l_p: Some(1e-4),
        l_pct: Some(0.1),
        l_s: Some(0.9),
    };
    let result = run(&points, &config).unwrap();
    let d = result.report.summary.drops;
    assert_eq!(
        d.pvalue + d.percent + d.separation,
        result.labeling.dropped()
    );
    assert!(d.percent > 0);
}

#[test]
fn every_step_is_timed_once_in_order() {
    let (points, _) = two_blobs();
    let report = run(&points, &ClusterConfig::new(4.0)).unwrap().report;
    let steps: Vec<Step> = report.timings.iter().map(|t| t.step).collect();
    assert_eq!(
        steps,
        [
            Step::Index,
            Step::Seed,
            Step::Converge,
            Step::Fit,
            Step::Assign,
            Step::Filter
        ]
    );
    assert!(report.timings.iter().all(|t| t.millis >= 0.0));
}

#[test]
fn thread_count_does_not_change_results() {
    let (points, _) = two_blobs();
    let one = run(&points, &ClusterConfig::new(4.0).with_threads(1)).unwrap();
    let four = run(&points, &ClusterConfig::new(4.0).with_threads(4)).unwrap();
    assert_eq!(one.labeling, four.labeling);
    assert_eq!(one.report.summary, four.report.summary);
    for (a, b) in one.models.iter().zip(&four.models) {
        assert_eq!(a.mu(), b.mu());
        assert_eq!(a.sigma(), b.sigma());
    }
}

#[test]
fn high_threshold_reports_no_clusters() {
    let (points, _) = two_blobs();
    let mut config = ClusterConfig::new(4.0);
    config.min_count = 100_000;
    let err = run(&points, &config).unwrap_err();
    assert!(matches!(err, Error::NoClusters));
    assert_eq!(
        err.to_string(),
        "no clusters found; decrease L or adjust d_s"
    );
}

#[test]
fn invalid_config_is_rejected() {
    let (points, _) = two_blobs();
    assert!(matches!(
        run(&points, &ClusterConfig::new(0.0)),
        Err(Error::InvalidParameter { .. })
    ));
    let mut config = ClusterConfig::new(4.0);
    config.filters.l_pct = Some(1.0);
    assert!(matches!(
        run(&points, &config),
        Err(Error::InvalidParameter { .. })
    ));
}

#[test]
fn suggestion_is_positive_for_blobs() {
    let (points, _) = two_blobs();
    assert!(suggest_ds(&points).unwrap() > 0.0);
}

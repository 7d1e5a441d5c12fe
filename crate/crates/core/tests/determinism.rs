use ramify::verify::{run_suite, Model, Suite, VerifyConfig};

fn report_json(suite: Suite, seed: u64, threads: usize) -> String {
    let config = VerifyConfig { threads, ..VerifyConfig::new(500, seed) };
    serde_json::to_string(&run_suite(suite, &Model::default(), &config).unwrap()).unwrap()
}

#[test]
fn same_seed_gives_identical_reports() {
    for suite in Suite::ALL {
        assert_eq!(report_json(suite, 3, 1), report_json(suite, 3, 1), "{suite}");
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for suite in Suite::ALL {
        assert_eq!(report_json(suite, 4, 1), report_json(suite, 4, 4), "{suite}");
    }
}

#[test]
fn seeds_change_the_statistics() {
    assert_ne!(report_json(Suite::Additivity, 5, 2), report_json(Suite::Additivity, 6, 2));
}

use aulas::estimation::{run_trial, MusicConfig};
use aulas::{Family, Scenario};

// Z ≤ 3 well-separated sources at 20 dB with 10⁴ snapshots: every estimate
// within one 0.01° grid step, for each generated family.
#[test]
fn high_snr_estimates_within_one_grid_step() {
    let sc = Scenario::new(vec![-41.3, 7.2, 52.9], Some(20.0), 10_000, 3);
    let cfg = MusicConfig::new(3);
    let step = cfg.step();
    for fam in Family::ALL {
        let p = fam.design(12).unwrap();
        let r = run_trial::<f64>(&p, &sc, &cfg, None, 0).unwrap();
        assert!(!r.under_detected, "{fam}");
        for (est, truth) in r.estimates.iter().zip(&sc.angles_deg) {
            assert!(
                (est - truth).abs() <= step + 1e-9,
                "{fam}: {est} vs {truth}"
            );
        }
    }
}

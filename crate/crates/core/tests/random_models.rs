use crw_core::simulate::walker_rng;
use crw_core::verify::{random_admissible_model, run_suite, Nu2Sign, SuiteOptions};

fn sweep(sign: Nu2Sign, count: usize, seed: u64) {
    let mut rng = walker_rng(seed, 0);
    for k in 0..count {
        let g = random_admissible_model(&mut rng, 8, sign, 50_000).expect("admissible model");
        let failed: Vec<_> = run_suite(&g.model, &SuiteOptions::default())
            .into_iter()
            .filter(|c| !c.passed)
            .collect();
        assert!(
            failed.is_empty(),
            "model {k} (n = {}, nu2 = {}): {failed:#?}\ncoins {:?}",
            g.model.n(),
            g.model.nu2(),
            g.model.coins()
        );
    }
}

#[test]
fn positive_nu2_sweep() {
    sweep(Nu2Sign::Positive, 200, 17);
}

#[test]
fn negative_nu2_sweep() {
    sweep(Nu2Sign::Negative, 40, 23);
}

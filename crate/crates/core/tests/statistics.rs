use maoa::algorithms::{
    find_peak, run_algorithm, sampling_ratio, Algorithm, GasConfig, MaoaConfig, Session, StopRule, Target,
};
use maoa::grover::{grover_probability, AmplifiedStateModel};
use maoa::harness::{analytic_classical, run_experiment, ExperimentSpec};
use maoa::{EffortLedger, FiniteDistribution, QualityDistribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn distinct(n: usize) -> QualityDistribution {
    FiniteDistribution::from_qualities((0..n).map(|i| i as f64).collect())
        .unwrap()
        .into()
}

#[test]
fn marked_frequency_follows_closed_form() {
    let d = QualityDistribution::Normal;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 100_000;
    for &r in &[0u64, 1, 3, 10, 40] {
        for &rho in &[1e-4, 1e-3, 1e-2, 0.1, 0.4] {
            let t = d.quantile(rho).unwrap();
            let m = AmplifiedStateModel::below(&d, r, t).unwrap();
            let p = m.success_probability();
            assert!((p - grover_probability(r, rho)).abs() < 1e-9);
            let mut ledger = EffortLedger::new();
            let hits = (0..trials).filter(|_| m.measure(&mut rng, &mut ledger).marked).count();
            assert_eq!(ledger.calls(), trials as u64 * (2 * r + 1));
            let f = hits as f64 / trials as f64;
            assert!(
                (f - p).abs() <= three_sigma(p, trials),
                "r={r} rho={rho}: {f} vs {p}"
            );
        }
    }
}

#[test]
fn two_marked_of_hundred() {
    let d = distinct(100);
    let m = AmplifiedStateModel::below(&d, 1, 2.0).unwrap();
    let p = grover_probability(1, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let hits = (0..n).filter(|_| m.sample(&mut rng).marked).count();
    assert!((hits as f64 / n as f64 - p).abs() <= three_sigma(p, n));
}

#[test]
fn marked_draws_are_uniform() {
    // ten marked solutions; chi-square with 9 degrees of freedom
    let d = distinct(100);
    let m = AmplifiedStateModel::below(&d, 1, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0u64; 10];
    let mut total = 0u64;
    while total < 100_000 {
        let x = m.sample(&mut rng);
        if x.marked {
            counts[x.id.unwrap() as usize] += 1;
            total += 1;
        }
    }
    let e = total as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // upper 1% point of chi-square(9)
    assert!(chi2 < 21.666, "chi2 = {chi2}");
}

#[test]
fn unmarked_draws_are_uniform() {
    let d = distinct(30);
    let m = AmplifiedStateModel::below(&d, 2, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = [0u64; 20];
    let mut total = 0u64;
    while total < 100_000 {
        let x = m.sample(&mut rng);
        if !x.marked {
            counts[x.id.unwrap() as usize - 10] += 1;
            total += 1;
        }
    }
    let e = total as f64 / 20.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // upper 1% point of chi-square(19)
    assert!(chi2 < 36.191, "chi2 = {chi2}");
}

#[test]
fn sampling_threshold_gives_one_in_forty() {
    let d = QualityDistribution::Normal;
    let t = d.quantile(sampling_ratio(64)).unwrap();
    let m = AmplifiedStateModel::below(&d, 64, t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let hits = (0..n).filter(|_| m.sample(&mut rng).marked).count();
    let f = hits as f64 / n as f64;
    assert!((f - 1.0 / 40.0).abs() <= three_sigma(1.0 / 40.0, n), "{f}");
}

#[test]
fn sampling_phase_inter_success_effort() {
    // with nothing to find, consecutive improvements are spaced by roughly
    // 40 measurements of 129 calls
    let d = QualityDistribution::Normal;
    let t = d.quantile(sampling_ratio(64)).unwrap();
    let stop = StopRule::new(Target::None, 50_000_000);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut s = Session::new(&d, &stop, &mut rng);
    let mut gaps = Vec::new();
    let mut last = 0;
    while let Ok(_) = s.measure_until(64..=64, t, t) {
        gaps.push(s.calls() - last);
        last = s.calls();
    }
    let mean = gaps.iter().sum::<u64>() as f64 / gaps.len() as f64;
    gaps.sort_unstable();
    let median = gaps[gaps.len() / 2] as f64;
    let scale = 40.0 * 129.0;
    // geometric gaps: mean 1/P measurements, standard error about mean/sqrt(n)
    let expect = 129.0 / grover_probability(64, sampling_ratio(64));
    assert!((mean - expect).abs() < 4.0 * expect / (gaps.len() as f64).sqrt(), "mean gap {mean}");
    assert!(median > scale / 1.5 && median < scale * 1.5, "median gap {median}");
}

#[test]
fn no_marked_solutions_no_hits() {
    let d = distinct(50);
    let m = AmplifiedStateModel::below(&d, 7, -1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((0..10_000).all(|_| !m.sample(&mut rng).marked));
}

#[test]
fn classical_matches_geometric_law() {
    let d = distinct(1000);
    let target = Target::ratio(&d, 0.01).unwrap();
    let spec = ExperimentSpec {
        dist: &d,
        algorithm: Algorithm::Classical,
        target,
        runs: 10_000,
        effort_cap: 10_000,
        master_seed: 21,
    };
    let res = run_experiment(&spec, 2).unwrap();
    let curve = res.curve(vec![10.0, 50.0, 100.0, 300.0]);
    for (&e, &p) in curve.grid.iter().zip(&curve.p) {
        let want = analytic_classical(e, 0.01);
        assert!((p - want).abs() <= three_sigma(want, 10_000), "e={e}: {p} vs {want}");
    }
    assert!((analytic_classical(100.0, 0.01) - 0.634).abs() < 1e-3);
}

fn median_found(d: &QualityDistribution, alg: Algorithm, target: Target, runs: usize, seed: u64) -> f64 {
    let spec = ExperimentSpec {
        dist: d,
        algorithm: alg,
        target,
        runs,
        effort_cap: u64::MAX,
        master_seed: seed,
    };
    let mut t = run_experiment(&spec, 2).unwrap().success_times();
    assert_eq!(t.len(), runs);
    t.sort_unstable();
    t[runs / 2] as f64
}

#[test]
fn gas_scales_with_square_root() {
    let sizes = [256usize, 1024, 4096];
    let mut means = Vec::new();
    for &n in &sizes {
        let d = distinct(n);
        let r_max = (n as f64).sqrt() as u64;
        let spec = ExperimentSpec {
            dist: &d,
            algorithm: Algorithm::Gas(GasConfig::restricted(r_max, 1.34).unwrap()),
            target: Target::optimal(&d).unwrap(),
            runs: 4000,
            effort_cap: u64::MAX,
            master_seed: 2,
        };
        let t = run_experiment(&spec, 2).unwrap().success_times();
        let mean = t.iter().sum::<u64>() as f64 / t.len() as f64;
        assert!(mean < n as f64 / 2.0, "N={n}: mean effort {mean}");
        means.push(mean);
    }
    // least-squares slope of log(mean) against log(N)
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((0.4..0.6).contains(&slope), "slope {slope}, means {means:?}");
}

#[test]
fn gas_growth_factor_ordering() {
    let d = QualityDistribution::Normal;
    let target = Target::ratio(&d, 1e-6).unwrap();
    let slow = median_found(&d, Algorithm::Gas(GasConfig::new(1.34, 1000).unwrap()), target.clone(), 2000, 6);
    let fast = median_found(&d, Algorithm::Gas(GasConfig::new(4.0, 1000).unwrap()), target, 2000, 6);
    assert!(slow < fast, "lambda 1.34: {slow}, lambda 4: {fast}");
}

#[test]
fn gas_best_strictly_improves() {
    let d = distinct(5000);
    let stop = StopRule::new(Target::ids(vec![0]), u64::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = GasConfig::unrestricted(5000, 1.34).unwrap();
    let (out, ledger) = run_algorithm(&Algorithm::Gas(cfg), &d, &stop, &mut rng, true);
    assert_eq!(out.best, 0.0);
    let mut bests: Vec<f64> = ledger.events().iter().map(|e| e.best).collect();
    bests.dedup();
    assert!(bests.windows(2).all(|w| w[1] < w[0]));
    assert!(ledger.events().iter().all(|e| e.rotations.is_none_or(|r| r <= cfg.r_max)));
}

#[test]
fn restricted_gas_at_full_cap_is_gas() {
    let d = distinct(3000);
    let full = GasConfig::unrestricted(3000, 1.34).unwrap();
    let same = GasConfig::restricted(full.r_max, 1.34).unwrap();
    let stop = StopRule::new(Target::optimal(&d).unwrap(), u64::MAX);
    let a = run_algorithm(&Algorithm::Gas(full), &d, &stop, &mut ChaCha8Rng::seed_from_u64(3), false).0;
    let b = run_algorithm(&Algorithm::Gas(same), &d, &stop, &mut ChaCha8Rng::seed_from_u64(3), false).0;
    assert_eq!(a, b);
}

#[test]
fn find_peak_lands_near_known_peak() {
    // at r = 2 the response over 1000 distinct qualities peaks where
    // 5 asin(sqrt(rho)) = pi/2
    let d = distinct(1000);
    let rho_peak = (std::f64::consts::PI / 10.0).sin().powi(2);
    let t_peak = rho_peak * 1000.0;
    let cfg = MaoaConfig::new(4).unwrap();
    let stop = StopRule::new(Target::None, u64::MAX);
    let step = 30.0;
    let mut close = 0;
    for seed in 0..1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Session::new(&d, &stop, &mut rng);
        let p = find_peak(&mut s, 2, 185.0, step, &cfg).unwrap();
        if (p.threshold - t_peak).abs() <= step {
            close += 1;
        }
    }
    assert!(close >= 900, "{close} of 1000 within one step");
}

#[test]
fn unreachable_target_never_found() {
    let d = distinct(100);
    let stop = StopRule::new(Target::Below(-1.0), 50_000);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for alg in [
        Algorithm::Classical,
        Algorithm::Gas(GasConfig::restricted(8, 1.34).unwrap()),
        Algorithm::Maoa(MaoaConfig::new(2).unwrap()),
    ] {
        let (out, _) = run_algorithm(&alg, &d, &stop, &mut rng, false);
        assert_eq!(out.found_at, None);
        assert!(out.calls <= 50_000);
    }
}

use noma_core::analytic::gamma_cdf;
use noma_core::channel::{GainSampler, RngSpec, SamplerKind};
use noma_core::outage::{sample_bank, Simulation};
use noma_core::SystemConfig;

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn single_user_draws(cfg: &SystemConfig, kind: SamplerKind, seed: u64, n: u64) -> Vec<f64> {
    let sampler = GainSampler::new(cfg, kind);
    let rng = RngSpec::new(seed);
    (0..n).map(|t| sampler.draw_trial(&rng, t)[0]).collect()
}

#[test]
fn explicit_and_direct_paths_agree_in_distribution() {
    const SAMPLES: u64 = 100_000;
    // 1% critical value c(0.01) sqrt((n + m) / (n m)) with c(0.01) = 1.628
    let critical = 1.628 * (2.0 / SAMPLES as f64).sqrt();
    for m in [1, 2, 4] {
        for n in [1, 2, 4] {
            let cfg = SystemConfig::new(1, m, n, 1.0, 1.0, 1.0).unwrap();
            let explicit = single_user_draws(&cfg, SamplerKind::ExplicitMatrix, 100 + m as u64, SAMPLES);
            let direct = single_user_draws(&cfg, SamplerKind::DirectGamma, 200 + n as u64, SAMPLES);
            let d = ks_two_sample(explicit, direct);
            assert!(d < critical, "M={m} N={n}: KS {d} >= {critical}");
        }
    }
}

#[test]
fn explicit_path_matches_erlang_law() {
    let cfg = SystemConfig::new(1, 3, 4, 1.0, 1.0, 0.5).unwrap();
    let xs = single_user_draws(&cfg, SamplerKind::ExplicitMatrix, 17, 100_000);
    // one-sample KS against the closed-form CDF, 1% critical 1.628 / sqrt(n)
    let mut sorted = xs;
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = gamma_cdf(*x, 4, 0.5).unwrap();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.628 / n.sqrt(), "{d}");
}

#[test]
fn bank_is_independent_of_partitioning() {
    let cfg = SystemConfig::new(4, 2, 2, 1.0, 1.0, 1.0).unwrap();
    for kind in [SamplerKind::DirectGamma, SamplerKind::ExplicitMatrix] {
        let base = Simulation::new(10_000, 77).with_sampler(kind);
        let one = sample_bank(&cfg, &base).unwrap();
        for workers in [2, 3, 8] {
            let many = sample_bank(&cfg, &base.with_workers(workers)).unwrap();
            assert_eq!(one.len(), many.len());
            for (a, b) in one.iter().zip(&many) {
                assert_eq!(a.trial_index(), b.trial_index());
                assert!(a.gains().iter().zip(b.gains()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
        // a single trial drawn on its own matches its slot in the bank
        let sampler = GainSampler::new(&cfg, kind);
        for t in [0u64, 4095, 4096, 9_999] {
            assert_eq!(sampler.sample(&base.rng, t), one[t as usize]);
        }
    }
}

use noma_core::allocation::pow2;
use noma_core::analytic::OrderedGainModel;
use noma_core::sweep::{
    fixed_a1, interference_budget, run_a1_sweep, run_interference_sweep, Grid, SweepKind,
    SweepSpec, SweepTable, A1_HEADER, INTERFERENCE_HEADER,
};
use noma_core::SystemConfig;

fn spec(kind: SweepKind, step: f64, trials: u64, workers: usize) -> SweepSpec {
    SweepSpec {
        kind,
        grid: Grid::new(0.0, 1.0, step).unwrap(),
        trials,
        seed: 2468,
        workers,
    }
}

fn rows_where<'a>(t: &'a SweepTable, col: &str, value: &str) -> Vec<&'a Vec<String>> {
    let i = t.column(col).unwrap();
    t.rows.iter().filter(|r| r[i] == value).collect()
}

fn cell(t: &SweepTable, row: &[String], col: &str) -> f64 {
    row[t.column(col).unwrap()].parse().unwrap()
}

#[test]
fn a1_sweep_structure() {
    let cfg = SystemConfig::reference(1.0).unwrap();
    let t = run_a1_sweep(&cfg, &spec(SweepKind::A1, 0.05, 20_000, 2)).unwrap();
    assert_eq!(t.header, A1_HEADER);
    let marked = fixed_a1(4, 1.0).unwrap().to_string();
    let at_fixed = rows_where(&t, "a1", &marked);
    assert_eq!(at_fixed.len(), 4);
    for row in at_fixed {
        assert_eq!(cell(&t, row, "noma_outage"), cell(&t, row, "oma_outage"));
    }
    for row in rows_where(&t, "a1", "1") {
        let user = cell(&t, row, "user");
        if user > 1.0 {
            assert_eq!(cell(&t, row, "noma_outage"), 1.0);
        }
    }
    let user1: Vec<f64> = rows_where(&t, "user", "1").iter().map(|r| cell(&t, r, "noma_outage")).collect();
    assert!(user1.windows(2).all(|w| w[1] <= w[0]), "{user1:?}");
    // every row echoes the configuration
    for row in &t.rows {
        assert_eq!(&row[5..], &["4", "1", "4", "1", "3", "1", "2468", "20000"]);
    }
}

#[test]
fn interference_sweep_cliff() {
    let cfg = SystemConfig::reference(1.0).unwrap();
    for n in 1..=3 {
        let t = run_interference_sweep(
            &cfg,
            &spec(SweepKind::Interference { target_user: n }, 0.01, 20_000, 1),
        )
        .unwrap();
        assert_eq!(t.header, INTERFERENCE_HEADER);
        let limit = pow2(-(n as f64));
        let mut saw_boundary = false;
        for row in &t.rows {
            let tail = cell(&t, row, "A_n");
            assert!(tail <= interference_budget(n, 1.0));
            assert_eq!(cell(&t, row, "boundary"), limit);
            let own = cell(&t, row, "own_outage");
            let sic = cell(&t, row, "sic_K_to_n_outage");
            if tail >= limit {
                assert_eq!((own, sic), (1.0, 1.0), "n={n} tail={tail}");
                saw_boundary |= tail == limit;
            }
        }
        assert!(saw_boundary);
        let zero = rows_where(&t, "A_n", "0")[0];
        let own = cell(&t, zero, "own_outage");
        assert!(own < 1.0);
        // at A_n = 0 the target needs gain > (2^R0 - 1) / (xi * budget)
        let threshold = 1.0 / (3.0 * interference_budget(n, 1.0));
        let p = OrderedGainModel::new(4, 4, 1.0).unwrap().ordered_cdf(n - 1, threshold).unwrap();
        assert!((own - p).abs() <= 4.0 * (p * (1.0 - p) / 2e4).sqrt() + 1e-4, "n={n}: {own} vs {p}");
        assert!(p < 1.0);
    }
}

#[test]
fn sweeps_are_byte_identical_across_workers() {
    let cfg = SystemConfig::reference(0.75).unwrap();
    for kind in [SweepKind::A1, SweepKind::Interference { target_user: 2 }] {
        let base = noma_core::sweep::run_sweep(&cfg, &spec(kind, 0.1, 10_000, 1))
            .unwrap()
            .to_csv_string();
        for w in [2, 8] {
            let other = noma_core::sweep::run_sweep(&cfg, &spec(kind, 0.1, 10_000, w))
                .unwrap()
                .to_csv_string();
            assert_eq!(base, other);
        }
        assert_eq!(SweepTable::parse(&base).unwrap().to_csv_string(), base);
    }
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SystemConfig::reference(1.0).unwrap();
    let t = run_a1_sweep(&cfg, &spec(SweepKind::A1, 0.25, 1_000, 1)).unwrap();
    let path = dir.path().join("a1.csv");
    t.write_file(&path).unwrap();
    assert_eq!(SweepTable::read_file(&path).unwrap(), t);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), t.to_csv_string());
}

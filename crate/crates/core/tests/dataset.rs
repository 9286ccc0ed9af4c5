use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uhisr_core::dataset::schema::schema_columns;
use uhisr_core::dataset::{msd_value, r_squared, read_tlc, rmse, SubstitutionPattern};

fn orbit(set: &BTreeSet<u8>) -> Vec<BTreeSet<u8>> {
    let mut out = Vec::new();
    for shift in 0..6u8 {
        for reflect in [false, true] {
            out.push(
                set.iter()
                    .map(|&p| {
                        let q = if reflect { (6 - (p - 1)) % 6 } else { p - 1 };
                        (q + shift) % 6 + 1
                    })
                    .collect(),
            );
        }
    }
    out
}

fn expected_code(set: &BTreeSet<u8>) -> u8 {
    let reps: [(&[u8], u8); 10] = [
        (&[1, 2], 2),
        (&[1, 3], 3),
        (&[1, 4], 4),
        (&[1, 2, 3], 5),
        (&[1, 2, 4], 6),
        (&[1, 3, 5], 7),
        (&[1, 2, 3, 4], 8),
        (&[1, 2, 3, 5], 9),
        (&[1, 2, 4, 5], 10),
        (&[1], 1),
    ];
    match set.len() {
        0 | 1 => 1,
        5 => 11,
        6 => 12,
        _ => {
            let images = orbit(set);
            reps.iter()
                .find(|(r, _)| images.contains(&r.iter().copied().collect()))
                .map(|(_, c)| *c)
                .expect("every subset has a class")
        }
    }
}

#[test]
fn msd_exhaustive_symmetry_and_classes() {
    assert_eq!(msd_value(&SubstitutionPattern::no_ring()), 0);
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for mask in 0u8..64 {
        let set: BTreeSet<u8> = (1..=6).filter(|p| mask & (1 << (p - 1)) != 0).collect();
        let code = msd_value(&SubstitutionPattern::ring(set.iter().copied()).unwrap());
        assert_eq!(code, expected_code(&set), "{set:?}");
        for image in orbit(&set) {
            assert_eq!(
                msd_value(&SubstitutionPattern::ring(image.iter().copied()).unwrap()),
                code
            );
        }
        *counts.entry(code).or_default() += 1;
    }
    let expected: BTreeMap<u8, usize> = [
        (1, 7),
        (2, 6),
        (3, 6),
        (4, 3),
        (5, 6),
        (6, 12),
        (7, 2),
        (8, 6),
        (9, 6),
        (10, 3),
        (11, 6),
        (12, 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(counts, expected);
    assert_eq!(msd_value(&SubstitutionPattern::ring([1, 4]).unwrap()), 4);
    assert_eq!(msd_value(&SubstitutionPattern::ring([2, 4, 6]).unwrap()), 7);
}

fn naive_r2(y: &[f64], p: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..y.len() {
        ss_res += (y[i] - p[i]).powi(2);
        ss_tot += (y[i] - mean).powi(2);
    }
    1.0 - ss_res / ss_tot
}

fn naive_rmse(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]).powi(2);
    }
    (s / y.len() as f64).sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn metrics_match_naive_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        assert!(rel(r_squared(&y, &p).unwrap(), naive_r2(&y, &p)) <= 1e-12);
        assert!(rel(rmse(&y, &p).unwrap(), naive_rmse(&y, &p)) <= 1e-12);
    }
}

#[test]
fn hand_computed_metrics() {
    let y = [0.0, 1.0, 2.0];
    let p = [0.0, 1.0, 1.0];
    assert!((rmse(&y, &p).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert!((r_squared(&y, &p).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn load_then_serialize_is_value_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cols: Vec<&str> = schema_columns().collect();
    let mut text = format!("compound,{}\n", cols.join(","));
    for r in 0..25 {
        let fr: f64 = rng.random_range(0.0..1.0);
        let vals: Vec<String> = cols
            .iter()
            .map(|c| match *c {
                "Hex" => format!("{fr}"),
                "EA" => format!("{}", 1.0 - fr),
                "DCM" | "MeOH" | "Et2O" => "0".into(),
                "MSD" => format!("{}", rng.random_range(0..13)),
                "DM" => format!("{}", rng.random_range(0.0..8.0)),
                "Rf" => format!("{}", rng.random_range(0.0..1.0)),
                _ => format!("{}", rng.random_range(0..4)),
            })
            .collect();
        text.push_str(&format!("c{r},{}\n", vals.join(",")));
    }
    let (t1, report) = read_tlc(text.as_bytes()).unwrap();
    assert_eq!(report.rows, 25);
    let again = t1.to_csv_string();
    let (t2, _) = read_tlc(again.as_bytes()).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(again, t2.to_csv_string());
}

//! Synthetic TLC tables with a known generating equation chain, for runs
//! and tests when no measured table is at hand.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::schema::{DISTRIBUTION_COLUMNS, FG_COLUMNS, SOLVENT_COLUMNS, TARGET_COLUMN};
use crate::dataset::{msd_value, DataTable, SubstitutionPattern};
use crate::eqsystem::{fixtures, EquationSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub compounds: usize,
    /// Eluents each compound is measured in.
    pub eluents_per_compound: usize,
    /// Standard deviation of the noise added to Rf before clamping.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            compounds: 600,
            eluents_per_compound: 4,
            noise_sd: 0.02,
            seed: 0,
        }
    }
}

/// Compounds whose solute index leaves this range are redrawn; outside it
/// the chain saturates Rf for every eluent.
const XI_LIMIT: f64 = 6.0;

// Two-component eluents: (main, modifier, modifier fractions).
const MIXTURES: [(&str, &str, &[f64]); 5] = [
    ("Hex", "EA", &[0.05, 0.1, 0.2, 0.25, 0.33, 0.5, 1.0]),
    ("Hex", "Et2O", &[0.1, 0.2, 0.5]),
    ("DCM", "MeOH", &[0.0, 0.01, 0.02, 0.05, 0.1]),
    ("Hex", "DCM", &[0.25, 0.5, 1.0]),
    ("EA", "MeOH", &[0.05, 0.1]),
];

fn draw_compound(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let nben = *[0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0]
        .choose(rng)
        .expect("non-empty");
    let msd = if nben == 0.0 {
        0.0
    } else {
        let mask = rng.random_range(0u8..64);
        msd_value(&SubstitutionPattern::from_mask(true, mask).expect("6-bit mask")) as f64
    };
    let dm = (rng.random_range(0.0..6.0f64) * 100.0).round() / 100.0;
    let mut out = vec![nben, msd, dm];
    let n_groups = rng.random_range(1..=3);
    let mut counts = vec![0.0; FG_COLUMNS.len()];
    for _ in 0..n_groups {
        counts[rng.random_range(0..FG_COLUMNS.len())] += 1.0;
    }
    out.extend(counts);
    out
}

fn draw_eluent(rng: &mut ChaCha8Rng) -> [f64; 5] {
    let (a, b, fracs) = *MIXTURES.choose(rng).expect("non-empty");
    let f = *fracs.choose(rng).expect("non-empty");
    let mut v = [0.0; 5];
    let idx = |n: &str| {
        SOLVENT_COLUMNS
            .iter()
            .position(|c| *c == n)
            .expect("solvent")
    };
    v[idx(a)] += 1.0 - f;
    v[idx(b)] += f;
    v
}

/// A table that passes [`crate::dataset::read_tlc`], with Rf generated by
/// the reference equation chain plus clamped Gaussian noise, rounded to two
/// decimals as a plate reading would be.
pub fn synthetic_tlc(cfg: &SynthConfig) -> DataTable {
    let sys = EquationSystem::parse(fixtures::REFERENCE).expect("bundled system parses");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sd.max(0.0)).expect("finite sd");

    let solute_cols: Vec<&str> = DISTRIBUTION_COLUMNS
        .iter()
        .chain(FG_COLUMNS.iter())
        .copied()
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ids = Vec::new();
    let mut made = 0;
    while made < cfg.compounds {
        let solute = draw_compound(&mut rng);
        let mut eluents = Vec::with_capacity(cfg.eluents_per_compound);
        let mut rfs = Vec::with_capacity(cfg.eluents_per_compound);
        let mut ok = true;
        for _ in 0..cfg.eluents_per_compound {
            let e = draw_eluent(&mut rng);
            let value = |name: &str| {
                SOLVENT_COLUMNS
                    .iter()
                    .position(|c| *c == name)
                    .map(|k| e[k])
                    .or_else(|| {
                        solute_cols
                            .iter()
                            .position(|c| *c == name)
                            .map(|k| solute[k])
                    })
                    .expect("reference inputs are schema columns")
            };
            let inputs: Vec<f64> = sys.inputs().iter().map(|n| value(n)).collect();
            let out = sys.evaluate_row(&inputs).expect("width matches");
            let get = |n: &str| {
                out.iter()
                    .find(|(k, _)| k == n)
                    .map(|(_, v)| *v)
                    .expect("defined")
            };
            let (xi, rf) = (get("xi"), get(TARGET_COLUMN));
            if !(xi.is_finite() && xi.abs() <= XI_LIMIT && rf.is_finite()) {
                ok = false;
                break;
            }
            let noisy = ((rf + noise.sample(&mut rng)).clamp(0.0, 1.0) * 100.0).round() / 100.0;
            eluents.push(e);
            rfs.push(noisy);
        }
        if !ok {
            continue;
        }
        for (e, rf) in eluents.iter().zip(rfs) {
            let mut row = e.to_vec();
            row.extend_from_slice(&solute);
            row.push(rf);
            rows.push(row);
            ids.push(format!("syn{made:05}"));
        }
        made += 1;
    }

    let names: Vec<&str> = SOLVENT_COLUMNS
        .iter()
        .chain(DISTRIBUTION_COLUMNS.iter())
        .chain(FG_COLUMNS.iter())
        .chain(std::iter::once(&TARGET_COLUMN))
        .copied()
        .collect();
    let mut table = DataTable::new(rows.len());
    for (j, name) in names.iter().enumerate() {
        table
            .add_column(*name, rows.iter().map(|r| r[j]).collect())
            .expect("unique names");
    }
    table.set_ids(ids).expect("one id per row");
    table
}

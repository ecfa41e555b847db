//! Shared helpers for integration tests: seeded random slices with
//! realistic shapes (missing observations, value ties, planted trends).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use statclaim_core::preprocess::{MeasureCombination, MeasureSlice, SlicePoint, TimeWindow};

/// A random slice with at most `max_countries` x `max_years` points.
/// Values draw from a small integer grid about half the time so rank
/// ties actually occur.
pub fn random_slice(seed: u64, max_countries: u32, max_years: u32) -> MeasureSlice {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n_countries = rng.gen_range(5..=max_countries);
    let n_years = rng.gen_range(5..=max_years);
    let start_year = rng.gen_range(1980..=2000);
    let integer_grid = rng.gen_bool(0.5);
    let presence = rng.gen_range(0.7..1.0);

    let mut rows = Vec::new();
    for country_index in 0..n_countries {
        let country = format!("C{country_index:03}");
        let monotone = rng.gen_bool(0.2);
        let base = rng.gen_range(1.0..50.0);
        for year_offset in 0..n_years {
            if !rng.gen_bool(presence) {
                continue;
            }
            let value = if monotone {
                base + f64::from(year_offset) * rng.gen_range(0.5..2.0)
            } else if integer_grid {
                f64::from(rng.gen_range(1..=20))
            } else {
                rng.gen_range(1.0..100.0)
            };
            rows.push(SlicePoint {
                reference_area: country.clone(),
                year: start_year + year_offset as i32,
                value,
            });
        }
    }
    let end_year = start_year + n_years as i32 - 1;
    MeasureSlice {
        table_id: format!("rand-{seed}"),
        combination: MeasureCombination::default(),
        window: TimeWindow {
            start_year,
            end_year,
            max_coverage: n_countries,
            per_year_coverage: Default::default(),
        },
        rows,
    }
}

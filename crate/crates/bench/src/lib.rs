//! Shared inputs for the benchmarks.

use krylov_toda::{Level, SpectralMeasure};

/// `d` quasi-random levels in `[-1, 1]` with weights spanning six decades.
pub fn sample_measure(d: usize) -> SpectralMeasure {
    let golden = 0.618_033_988_749_894_9_f64;
    let levels = (0..d)
        .map(|k| {
            let u = (k as f64 * golden).fract();
            Level { energy: -1.0 + 2.0 * (k as f64 + 0.5) / d as f64, log_weight: -13.8 * u }
        })
        .collect();
    SpectralMeasure::new(levels).expect("levels are sorted and finite")
}

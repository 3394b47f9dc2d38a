//! Moves one subject's signals into the graph spectral domain and prints
//! how its energy spreads over the low, middle and high frequency bands.
//!
//! ```text
//! cargo run --example gft_spectra
//! ```

use graph_fkt::eval::synth::{generate_synthetic, synthetic_atlas, SyntheticSpec};
use graph_fkt::features::{band_ranges, gft_baseline_features};
use graph_fkt::spectra::{gft_coefficients, joint_expectancy, normalize_columns};
use graph_fkt::{build_graph, gft_basis, Banding, GraphKind};

fn main() -> graph_fkt::Result<()> {
    let r = 24;
    let atlas = synthetic_atlas(r, 3)?;
    let basis = gft_basis(&build_graph(&atlas, GraphKind::Knn { k: 3 })?)?;
    // One class with extra power on a smooth mode, the other on a rough one.
    let spec = SyntheticSpec::planted(r, 2, 200, 2, 20, 8.0, 11);
    let subjects = generate_synthetic(&spec, &basis)?;

    for subject in &subjects {
        let coeffs = gft_coefficients(subject.signals(), &basis)?;
        let spectra = normalize_columns(&coeffs)?;
        let expectancy = joint_expectancy(&spectra)?;
        let bands = gft_baseline_features(&spectra, Banding::ThreeBands)?;
        let diag = expectancy.matrix().diagonal();
        let peak = (1..r).max_by(|&a, &b| diag[a].total_cmp(&diag[b])).unwrap_or(1);
        println!(
            "{} ({:?}): strongest mode {peak}, diagonal share {:.3}",
            subject.id, subject.label, diag[peak]
        );
        for (range, v) in band_ranges(r).iter().zip(&bands.values) {
            println!("  modes {:>2}..{:<2} variance {v:.5}", range.start, range.end);
        }
    }
    Ok(())
}

//! Fits the two-class transform on a planted cohort and shows that its
//! dominant dimensions point at the planted graph modes.
//!
//! ```text
//! cargo run --example fkt_projection
//! ```

use graph_fkt::eval::synth::{generate_synthetic, synthetic_atlas, SyntheticSpec};
use graph_fkt::fkt::fit_fkt;
use graph_fkt::spectra::{class_means, gft_coefficients, joint_expectancy, normalize_columns};
use graph_fkt::{build_graph, dominant_dimensions, gft_basis, GraphKind};

fn main() -> graph_fkt::Result<()> {
    let (r, asd_mode, nt_mode) = (16, 4, 11);
    let atlas = synthetic_atlas(r, 0)?;
    let basis = gft_basis(&build_graph(&atlas, GraphKind::Knn { k: 2 })?)?;
    let subjects = generate_synthetic(&SyntheticSpec::planted(r, 60, 120, asd_mode, nt_mode, 6.0, 5), &basis)?;

    let mut expectancies = Vec::new();
    for s in &subjects {
        let spectra = normalize_columns(&gft_coefficients(s.signals(), &basis)?)?;
        expectancies.push((joint_expectancy(&spectra)?, s.label));
    }
    let means = class_means(expectancies.iter().map(|(e, l)| (e, *l)))?;
    let model = fit_fkt(&means)?;
    let dims = dominant_dimensions(&model, 2)?;

    println!("planted modes: ASD {asd_mode}, NT {nt_mode}");
    for (class, list) in [("ASD", &dims.asd), ("NT", &dims.nt)] {
        for (rank, &d) in list.iter().enumerate() {
            let share = if class == "ASD" {
                model.asd_share(d)
            } else {
                model.nt_share(d)
            };
            let row = model.projection.row(d);
            let mode = (0..r)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()))
                .unwrap_or(0);
            println!(
                "{class}_dom{}: dimension {d:>2}, share {share:.3}, heaviest mode {mode}",
                rank + 1
            );
        }
    }
    Ok(())
}

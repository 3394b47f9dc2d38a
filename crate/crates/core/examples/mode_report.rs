//! Fits a model, flags the graph modes that dominate each discriminative
//! dimension and writes node files for them into a temporary directory.
//!
//! ```text
//! cargo run --example mode_report
//! ```

use graph_fkt::eval::synth::{generate_synthetic, synthetic_atlas, SyntheticSpec};
use graph_fkt::eval::{fit_experiment, ExperimentConfig, Method};
use graph_fkt::io::report::{export_mode_report, export_node_file, DEFAULT_MULTIPLIER};
use graph_fkt::{build_graph, gft_basis, GraphKind, Label};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = 30;
    let graph = GraphKind::Knn { k: 2 };
    let atlas = synthetic_atlas(r, 2)?;
    let basis = gft_basis(&build_graph(&atlas, graph)?)?;
    let data = generate_synthetic(&SyntheticSpec::planted(r, 80, 100, 5, 17, 4.0, 3), &basis)?;

    let fitted = fit_experiment(&ExperimentConfig::new(Method::Ours { graph }), &data, &atlas)?;
    let (Some(model), Some(dims)) = (fitted.fkt_model()?, fitted.dims.clone()) else {
        unreachable!("the FKT pipeline always carries a model");
    };
    let report = export_mode_report(&model, &dims, DEFAULT_MULTIPLIER)?;
    for row in &report.rows {
        println!(
            "{:?} rank {} (dimension {:>2}): flagged modes {:?}",
            row.class,
            row.rank,
            row.dimension,
            row.flagged_modes()
        );
    }

    let out = std::env::temp_dir().join("graph-fkt-mode-report");
    std::fs::create_dir_all(&out)?;
    for class in [Label::Asd, Label::Nt] {
        for mode in report.flagged_for(class) {
            let path = out.join(format!("mode-{mode:03}.node"));
            export_node_file(&atlas, &basis, mode, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

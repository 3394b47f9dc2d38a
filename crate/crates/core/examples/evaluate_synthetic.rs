//! Compares the spectral FKT pipeline with the GFT band baseline and the
//! node-domain FKT on a weakly planted cohort.
//!
//! ```text
//! cargo run --release --example evaluate_synthetic
//! ```

use graph_fkt::eval::synth::{generate_synthetic, synthetic_atlas, SyntheticSpec};
use graph_fkt::eval::{run_experiment, ExperimentConfig, Method};
use graph_fkt::io::report::eval_summary_tsv;
use graph_fkt::{build_graph, gft_basis, Banding, GraphKind};

fn main() -> graph_fkt::Result<()> {
    let r = 20;
    let graph = GraphKind::Knn { k: 2 };
    let atlas = synthetic_atlas(r, 0)?;
    let basis = gft_basis(&build_graph(&atlas, graph)?)?;
    let mut spec = SyntheticSpec::planted(r, 120, 80, 3, 9, 0.6, 1);
    spec.noise = 0.3;
    let data = generate_synthetic(&spec, &basis)?;

    let base = ExperimentConfig::new(Method::Ours { graph });
    let mut ours = run_experiment(&base, &data, &atlas)?;
    let others = [
        Method::Gft {
            graph,
            banding: Banding::ThreeBands,
        },
        Method::Sfm,
    ];
    let mut reports = Vec::new();
    for method in others {
        let report = run_experiment(&base.with_method(method), &data, &atlas)?;
        ours.compare_with(&report)?;
        reports.push(report);
    }
    reports.insert(0, ours);
    print!("{}", eval_summary_tsv(&reports));
    Ok(())
}

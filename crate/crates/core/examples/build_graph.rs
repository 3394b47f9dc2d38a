//! Builds each graph family over the AAL90 atlas and reports its structure.
//!
//! ```text
//! cargo run --example build_graph
//! ```

use graph_fkt::{build_graph, gft_basis, GraphKind, RoiAtlas};

fn main() -> graph_fkt::Result<()> {
    let atlas = RoiAtlas::aal90();
    println!("atlas: {} ROIs, sha256 {}", atlas.len(), &atlas.checksum()[..12]);
    for kind in [
        GraphKind::Knn { k: 2 },
        GraphKind::Knn { k: 5 },
        GraphKind::Wfc,
        GraphKind::Uc,
        GraphKind::RandWfc { seed: 1 },
    ] {
        let graph = build_graph(&atlas, kind)?;
        let basis = gft_basis(&graph)?;
        let edges = graph.adjacency().iter().filter(|w| **w > 0.0).count() / 2;
        let ev = basis.eigenvalues();
        println!(
            "{:<16} edges {edges:>5}  components {:>2}  lambda_1 {:.4}  lambda_max {:.4}",
            kind.to_string(),
            graph.components().len(),
            ev[1],
            ev[ev.len() - 1]
        );
    }
    Ok(())
}

//! Grows a gain-ratio tree on a small two-feature table, tunes its leaf
//! size by cross-validation and prints it.
//!
//! ```text
//! cargo run --example decision_tree
//! ```

use graph_fkt::tree::{best_split, fit_tree, tune_min_leaf};
use graph_fkt::{FeatureVector, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> graph_fkt::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let schema = vec!["ASD_dom1".to_string(), "NT_dom1".to_string()];
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let label = if i % 2 == 0 { Label::Asd } else { Label::Nt };
        let shift = if label == Label::Asd { 0.3 } else { -0.3 };
        let row = vec![
            shift + rng.random_range(-0.5..0.5),
            -shift + rng.random_range(-0.5..0.5),
        ];
        features.push(FeatureVector::new(row, schema.clone())?);
        labels.push(label);
    }

    if let Some(root) = best_split(&features, &labels, 2)? {
        println!(
            "root split: {} <= {:.3} (gain ratio {:.3})",
            schema[root.feature], root.threshold, root.gain_ratio
        );
    }
    let min_leaf = tune_min_leaf(&features, &labels, &[1, 2, 4, 8], 5, 0)?;
    let tree = fit_tree(&features, &labels, min_leaf)?;
    println!("min_leaf {min_leaf}, depth {}\n{}", tree.depth(), tree.render());
    let hits = features
        .iter()
        .zip(&labels)
        .filter(|(f, l)| tree.predict(f).map(|p| p == **l).unwrap_or(false))
        .count();
    println!("training accuracy {:.3}", hits as f64 / labels.len() as f64);
    Ok(())
}

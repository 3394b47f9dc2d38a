//! Anatomical graphs over an atlas and their graph Fourier bases.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::RoiAtlas;
use crate::error::{Error, Result};
use crate::linalg;

/// How edge weights between ROIs are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphKind {
    /// K nearest neighbours with inverse-distance weights, symmetrized.
    Knn { k: usize },
    /// Complete graph with inverse-distance weights.
    Wfc,
    /// Complete graph with unit weights.
    Uc,
    /// Complete graph with uniform(0, 1) weights drawn from `seed`.
    RandWfc { seed: u64 },
    /// Adjacency supplied directly by the caller.
    Custom,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Knn { k } => write!(f, "{k}-nn"),
            GraphKind::Wfc => f.write_str("wfc"),
            GraphKind::Uc => f.write_str("uc"),
            GraphKind::RandWfc { seed } => write!(f, "randwfc(seed={seed})"),
            GraphKind::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrainGraph {
    adjacency: DMatrix<f64>,
    kind: GraphKind,
}

impl BrainGraph {
    /// Wraps a caller-supplied adjacency after checking symmetry, a zero
    /// diagonal and nonnegative finite weights.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        Self::checked(adjacency, GraphKind::Custom)
    }

    fn checked(adjacency: DMatrix<f64>, kind: GraphKind) -> Result<Self> {
        let r = adjacency.nrows();
        if !adjacency.is_square() || r < 2 {
            return Err(Error::dims(format!(
                "adjacency must be square with at least 2 nodes, got {}x{}",
                r,
                adjacency.ncols()
            )));
        }
        for i in 0..r {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero self-loop at node {}", i + 1)));
            }
            for j in 0..r {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!(
                        "edge ({}, {}) has invalid weight {w}",
                        i + 1,
                        j + 1
                    )));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::invalid(format!(
                        "adjacency is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { adjacency, kind })
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.node_count(),
            self.adjacency.row_iter().map(|row| row.iter().sum::<f64>()),
        )
    }

    /// Combinatorial Laplacian `D − A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut lap = -self.adjacency.clone();
        for (i, d) in self.degrees().iter().enumerate() {
            lap[(i, i)] = *d;
        }
        lap
    }

    /// Connected components as lists of 0-based node indices, ordered by
    /// their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let r = self.node_count();
        let mut seen = vec![false; r];
        let mut out = Vec::new();
        for start in 0..r {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for (v, visited) in seen.iter_mut().enumerate() {
                    if !*visited && self.adjacency[(u, v)] > 0.0 {
                        *visited = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

/// Builds a graph over the atlas ROIs.
///
/// For `Knn`, every node links to its `k` closest ROIs (ties broken by
/// lower index) with weight `1/d`, and the directed result `A` is replaced
/// by `(A + Aᵀ) / 2`.
pub fn build_graph(atlas: &RoiAtlas, kind: GraphKind) -> Result<BrainGraph> {
    let r = atlas.len();
    if kind == GraphKind::Custom {
        return Err(Error::invalid(
            "custom graphs are built with BrainGraph::from_adjacency",
        ));
    }
    if let GraphKind::Knn { k } = kind {
        if k == 0 || k > r - 1 {
            return Err(Error::invalid(format!(
                "K = {k} out of range: need 1 <= K <= {}",
                r - 1
            )));
        }
    }

    let mut dist = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in (i + 1)..r {
            let d = atlas.distance(i, j);
            if d == 0.0 {
                return Err(Error::invalid(format!(
                    "zero distance between ROI {} and {}",
                    i + 1,
                    j + 1
                )));
            }
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut adjacency = DMatrix::zeros(r, r);
    match kind {
        GraphKind::Knn { k } => {
            let mut directed = DMatrix::<f64>::zeros(r, r);
            for u in 0..r {
                let mut others: Vec<usize> = (0..r).filter(|&v| v != u).collect();
                others.sort_by(|&a, &b| dist[(u, a)].total_cmp(&dist[(u, b)]).then(a.cmp(&b)));
                for &v in &others[..k] {
                    directed[(u, v)] = 1.0 / dist[(u, v)];
                }
            }
            for i in 0..r {
                for j in (i + 1)..r {
                    let w = 0.5 * (directed[(i, j)] + directed[(j, i)]);
                    adjacency[(i, j)] = w;
                    adjacency[(j, i)] = w;
                }
            }
        }
        GraphKind::Wfc => {
            for i in 0..r {
                for j in (i + 1)..r {
                    let w = 1.0 / dist[(i, j)];
                    adjacency[(i, j)] = w;
                    adjacency[(j, i)] = w;
                }
            }
        }
        GraphKind::Uc => {
            adjacency.fill(1.0);
            adjacency.fill_diagonal(0.0);
        }
        GraphKind::RandWfc { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..r {
                for j in (i + 1)..r {
                    let w: f64 = rng.random();
                    adjacency[(i, j)] = w;
                    adjacency[(j, i)] = w;
                }
            }
        }
        GraphKind::Custom => unreachable!(),
    }
    BrainGraph::checked(adjacency, kind)
}

/// Where a spectral basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum BasisSource {
    Graph {
        graph: GraphKind,
    },
    /// The standard basis: no graph transform at all.
    Identity,
}

/// Laplacian eigenbasis. Column `k` of `eigenvectors` is the GFT mode with
/// frequency `eigenvalues[k]`; frequencies ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct GftBasis {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    source: BasisSource,
}

impl GftBasis {
    pub fn identity(r: usize) -> Self {
        Self {
            eigenvalues: DVector::zeros(r),
            eigenvectors: DMatrix::identity(r, r),
            source: BasisSource::Identity,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// GFT mode `k` (0-based) as a graph signal.
    pub fn mode(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).clone_owned()
    }
}

/// Eigendecomposition of `L = D − A`.
pub fn gft_basis(graph: &BrainGraph) -> Result<GftBasis> {
    let eig = linalg::symmetric_eigen(&graph.laplacian())?;
    let err = linalg::orthonormality_error(&eig.vectors);
    if err >= 1e-10 {
        return Err(Error::numerical(format!(
            "GFT basis not orthonormal after correction: residual {err:e}"
        )));
    }
    Ok(GftBasis {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        source: BasisSource::Graph { graph: graph.kind() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::RoiAtlas;

    fn line(xs: &[f64]) -> RoiAtlas {
        RoiAtlas::from_coords(&xs.iter().map(|&x| [x, 0.0, 0.0]).collect::<Vec<_>>()).unwrap()
    }

    fn path_graph(n: usize) -> BrainGraph {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
            a[(i + 1, i)] = 1.0;
        }
        BrainGraph::from_adjacency(a).unwrap()
    }

    #[test]
    fn single_pair_knn() {
        let g = build_graph(&line(&[0.0, 2.0]), GraphKind::Knn { k: 1 }).unwrap();
        assert_eq!(g.adjacency(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn collinear_knn_symmetrization() {
        let g = build_graph(&line(&[0.0, 1.0, 3.0]), GraphKind::Knn { k: 1 }).unwrap();
        let a = g.adjacency();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 2)], 0.25);
        assert_eq!(a[(0, 2)], 0.0);
    }

    #[test]
    fn k_out_of_range() {
        let atlas = line(&[0.0, 1.0, 3.0]);
        assert!(build_graph(&atlas, GraphKind::Knn { k: 0 }).is_err());
        assert!(build_graph(&atlas, GraphKind::Knn { k: 3 }).is_err());
        assert!(build_graph(&atlas, GraphKind::Knn { k: 2 }).is_ok());
    }

    #[test]
    fn coincident_rois_are_rejected() {
        let atlas = line(&[0.0, 1.0, 1.0]);
        let err = build_graph(&atlas, GraphKind::Wfc).unwrap_err().to_string();
        assert!(err.contains("zero distance between ROI 2 and 3"), "{err}");
    }

    #[test]
    fn complete_graph_weights() {
        let atlas = line(&[0.0, 1.0, 3.0]);
        let wfc = build_graph(&atlas, GraphKind::Wfc).unwrap();
        assert_eq!(wfc.adjacency()[(0, 2)], 1.0 / 3.0);
        let uc = build_graph(&atlas, GraphKind::Uc).unwrap();
        assert_eq!(uc.adjacency().sum(), 6.0);
        let r1 = build_graph(&atlas, GraphKind::RandWfc { seed: 3 }).unwrap();
        let r2 = build_graph(&atlas, GraphKind::RandWfc { seed: 3 }).unwrap();
        let r3 = build_graph(&atlas, GraphKind::RandWfc { seed: 4 }).unwrap();
        assert_eq!(r1, r2);
        assert_ne!(r1, r3);
        assert!(r1.adjacency().iter().all(|&w| (0.0..1.0).contains(&w)));
    }

    #[test]
    fn path_laplacian_spectrum() {
        let basis = gft_basis(&path_graph(4)).unwrap();
        let s2 = 2f64.sqrt();
        let expected = [0.0, 2.0 - s2, 2.0, 2.0 + s2];
        for (got, want) in basis.eigenvalues().iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_first_mode() {
        let basis = gft_basis(&path_graph(6)).unwrap();
        let c = 1.0 / 6f64.sqrt();
        for v in basis.mode(0).iter() {
            assert!((v - c).abs() < 1e-12);
        }
    }

    #[test]
    fn uc_spectrum() {
        let coords: Vec<[f64; 3]> = (0..7).map(|i| [i as f64, (i * i) as f64, 0.0]).collect();
        let g = build_graph(&RoiAtlas::from_coords(&coords).unwrap(), GraphKind::Uc).unwrap();
        let basis = gft_basis(&g).unwrap();
        assert!(basis.eigenvalues()[0].abs() < 1e-10);
        for v in basis.eigenvalues().iter().skip(1) {
            assert!((v - 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn aal90_two_nn_separates_front_from_back() {
        let atlas = RoiAtlas::aal90();
        let g = build_graph(&atlas, GraphKind::Knn { k: 2 }).unwrap();
        let comps = g.components();
        assert!(comps.len() >= 2);
        let of = |name: &str| {
            let i = atlas.rois().iter().position(|r| r.name == name).unwrap();
            comps.iter().position(|c| c.contains(&i)).unwrap()
        };
        for side in ["L", "R"] {
            let front = of(&format!("SFGdor.{side}"));
            assert_eq!(front, of(&format!("STG.{side}")));
            assert_ne!(front, of(&format!("SOG.{side}")));
            assert_ne!(front, of(&format!("SPG.{side}")));
        }
    }
}

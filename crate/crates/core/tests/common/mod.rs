#![allow(dead_code)]

use graph_fkt::eval::synth::{generate_synthetic, SyntheticSpec};
use graph_fkt::spectra::{joint_expectancy, normalize_columns, JointExpectancy};
use graph_fkt::{GftBasis, Label, SubjectRecord};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthogonal matrix from a QR factorization.
pub fn orthogonal(rng: &mut ChaCha8Rng, r: usize) -> DMatrix<f64> {
    gaussian(rng, r, r).qr().q()
}

/// Subjects with i.i.d. Gaussian node signals and per-class random
/// mixing, so the two classes differ.
pub fn random_subjects(seed: u64, r: usize, n_asd: usize, n_nt: usize, t: usize) -> Vec<SubjectRecord> {
    let mut g = rng(seed);
    let mix = [gaussian(&mut g, r, r), gaussian(&mut g, r, r)];
    (0..n_asd + n_nt)
        .map(|i| {
            let label = if i < n_asd { Label::Asd } else { Label::Nt };
            let x = &mix[label.index()] * gaussian(&mut g, r, t);
            SubjectRecord::new(format!("s{i}"), label, x).unwrap()
        })
        .collect()
}

pub fn expectancies(subjects: &[SubjectRecord], basis: &GftBasis) -> Vec<(JointExpectancy, Label)> {
    subjects
        .iter()
        .map(|s| {
            let y = normalize_columns(&graph_fkt::spectra::gft_coefficients(s.signals(), basis).unwrap()).unwrap();
            (joint_expectancy(&y).unwrap(), s.label)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn planted(
    r: usize,
    n: usize,
    t: usize,
    asd_mode: usize,
    nt_mode: usize,
    strength: f64,
    seed: u64,
    basis: &GftBasis,
) -> Vec<SubjectRecord> {
    generate_synthetic(
        &SyntheticSpec::planted(r, n, t, asd_mode, nt_mode, strength, seed),
        basis,
    )
    .unwrap()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

pub fn entropy(a: usize, n: usize) -> f64 {
    let total = (a + n) as f64;
    [a, n]
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Exhaustive search: every feature, every midpoint between distinct sorted
/// values, counted by direct filtering.
pub fn brute_force_split(x: &[Vec<f64>], y: &[Label], min_leaf: usize) -> Option<(usize, Vec<usize>)> {
    let n = y.len();
    let count = |idx: &[usize]| {
        let a = idx.iter().filter(|&&i| y[i] == Label::Asd).count();
        (a, idx.len() - a)
    };
    let all: Vec<usize> = (0..n).collect();
    let (pa, pn) = count(&all);
    let parent = entropy(pa, pn);
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = all.iter().copied().filter(|&i| x[i][f] <= thr).collect();
            let right: Vec<usize> = all.iter().copied().filter(|&i| x[i][f] > thr).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let (la, ln) = count(&left);
            let (ra, rn) = count(&right);
            let wl = left.len() as f64 / n as f64;
            let wr = right.len() as f64 / n as f64;
            let gain = parent - wl * entropy(la, ln) - wr * entropy(ra, rn);
            if gain <= 1e-12 {
                continue;
            }
            let ratio = gain / (-wl * wl.log2() - wr * wr.log2());
            if best.as_ref().is_none_or(|b| ratio > b.0) {
                best = Some((ratio, f, left));
            }
        }
    }
    best.map(|(_, f, left)| (f, left))
}

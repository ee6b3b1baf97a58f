//! Smallest nonzero eigenvalue of `−L` in `L²(ν)`.
//!
//! The generator is symmetrized as `S = D^{1/2} (−L) D^{−1/2}`, whose kernel
//! is spanned by `√ν`. Small chains use a dense symmetric eigensolve; large
//! ones use Lanczos with full reorthogonalization, `√ν` projected out of
//! every Krylov vector, and explicit restarts from the best Ritz vector.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::generator::GeneratorMatrix;
use crate::error::{Result, ZrpError};

pub const DENSE_LIMIT: usize = 4000;
pub const RESIDUAL_TOL: f64 = 1e-9;
const LANCZOS_DIM: usize = 120;
const LANCZOS_RESTARTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenMethod {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapResult {
    pub gap: f64,
    pub c_sg: f64,
    /// Eigenfunction in `L²(ν)`: `ν[v] = 0`, `ν[v²] = 1`.
    pub eigenvector: Vec<f64>,
    /// `‖(−L)v − λv‖_ν`.
    pub residual: f64,
    pub method: EigenMethod,
}

pub fn spectral_gap(gen: &GeneratorMatrix) -> Result<GapResult> {
    spectral_gap_with(gen, EigenMethod::Auto)
}

pub fn spectral_gap_with(gen: &GeneratorMatrix, method: EigenMethod) -> Result<GapResult> {
    let n = gen.len();
    if n < 2 {
        return Err(ZrpError::EigensolveFailure(
            "a single state has no nonzero eigenvalue".into(),
        ));
    }
    let method = match method {
        EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Lanczos,
        m => m,
    };
    let sq: Vec<f64> = gen.nu.iter().map(|p| p.sqrt()).collect();
    let (gap, mut u) = match method {
        EigenMethod::Dense => dense_gap(gen)?,
        _ => lanczos_gap(gen, &sq)?,
    };
    normalize(&mut u);
    // deterministic sign: largest-magnitude component positive
    let piv = u
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &v)| if v.abs() > acc.1.abs() + 1e-12 { (i, v) } else { acc })
        .0;
    if u[piv] < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let su = gen.apply_symmetrized(&u, &sq);
    let residual = su.iter().zip(&u).map(|(a, b)| (a - gap * b).powi(2)).sum::<f64>().sqrt();
    if !(gap > 0.0) || residual > RESIDUAL_TOL {
        return Err(ZrpError::EigensolveFailure(format!(
            "gap {gap:e} with residual {residual:e}"
        )));
    }
    let eigenvector = u.iter().zip(&sq).map(|(a, s)| a / s).collect();
    Ok(GapResult {
        gap,
        c_sg: 1.0 / gap,
        eigenvector,
        residual,
        method,
    })
}

/// Full spectrum of `−L`, ascending.
pub fn eigenvalues_dense(gen: &GeneratorMatrix) -> Vec<f64> {
    let n = gen.len();
    let m = DMatrix::from_row_slice(n, n, &gen.symmetrized_dense());
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn dense_gap(gen: &GeneratorMatrix) -> Result<(f64, Vec<f64>)> {
    let n = gen.len();
    let m = DMatrix::from_row_slice(n, n, &gen.symmetrized_dense());
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| ZrpError::EigensolveFailure("dense eigensolve did not converge".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // irreducible: the zero eigenvalue is simple and the smallest
    let k = idx[1];
    let u = eig.eigenvectors.column(k).iter().copied().collect();
    Ok((eig.eigenvalues[k], u))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn lanczos_gap(gen: &GeneratorMatrix, sq: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = gen.len();
    let dim = LANCZOS_DIM.min(n - 1);
    let mut q0 = sq.to_vec();
    normalize(&mut q0);

    let mut start: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5)
        .collect();
    let mut best = (f64::INFINITY, Vec::new(), f64::INFINITY);

    for _ in 0..LANCZOS_RESTARTS {
        let c = dot(&start, &q0);
        axpy(&mut start, -c, &q0);
        if normalize(&mut start) == 0.0 {
            return Err(ZrpError::EigensolveFailure("start vector collapsed".into()));
        }
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(dim);
        let mut beta: Vec<f64> = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut w = gen.apply_symmetrized(&basis[j], sq);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // two passes of Gram-Schmidt against q0 and the whole basis
            for _ in 0..2 {
                let c = dot(&w, &q0);
                axpy(&mut w, -c, &q0);
                for b in &basis {
                    let c = dot(&w, b);
                    axpy(&mut w, -c, b);
                }
            }
            let bnorm = normalize(&mut w);
            if j + 1 == dim || bnorm < 1e-13 {
                break;
            }
            beta.push(bnorm);
            basis.push(w);
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let k = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let theta = eig.eigenvalues[k];
        let mut ritz = vec![0.0; n];
        for (i, b) in basis.iter().enumerate().take(m) {
            axpy(&mut ritz, eig.eigenvectors[(i, k)], b);
        }
        normalize(&mut ritz);
        let s = gen.apply_symmetrized(&ritz, sq);
        let res = s.iter().zip(&ritz).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if res < best.2 {
            best = (theta, ritz.clone(), res);
        }
        if res <= 0.1 * RESIDUAL_TOL {
            break;
        }
        start = ritz;
    }
    let (theta, u, res) = best;
    if res > RESIDUAL_TOL {
        return Err(ZrpError::NoConvergence {
            what: "Lanczos gap".into(),
            iterations: LANCZOS_RESTARTS,
        });
    }
    Ok((theta, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Cube;
    use crate::model::{CanonicalEnsemble, RateFamily};
    use crate::spectral::generator::{build_generator, Topology};

    fn gen(preset: &str, n: usize, r: usize) -> GeneratorMatrix {
        let cube = Cube::segment(n);
        let rf = RateFamily::preset(preset, &cube).unwrap();
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        build_generator(&ens, &rf, Topology::NearestNeighbour).unwrap()
    }

    #[test]
    fn independent_particles_on_three_sites() {
        for r in 1..=6 {
            let g = spectral_gap(&gen("linear", 3, r)).unwrap();
            assert!((g.gap - 0.5).abs() < 1e-10, "r={r} gap={}", g.gap);
        }
    }

    #[test]
    fn two_sites_four_particles() {
        let g = spectral_gap(&gen("linear", 2, 4)).unwrap();
        assert!((g.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_eigenvalue_has_constant_eigenvector() {
        let g = gen("staircase", 3, 4);
        let ones = vec![1.0; g.len()];
        assert!(g.apply(&ones).iter().all(|v| v.abs() < 1e-12));
        let ev = eigenvalues_dense(&g);
        assert!(ev[0].abs() < 1e-10 && ev[1] > 1e-6);
    }

    #[test]
    fn eigenvector_is_centred_and_normalized() {
        let g = gen("alternating:1,2", 3, 3);
        let res = spectral_gap(&g).unwrap();
        let m: f64 = g.nu.iter().zip(&res.eigenvector).map(|(p, v)| p * v).sum();
        let s: f64 = g.nu.iter().zip(&res.eigenvector).map(|(p, v)| p * v * v).sum();
        assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense() {
        for (preset, n, r) in [("staircase", 4, 5), ("alternating:1,2", 5, 4), ("linear", 6, 3)] {
            let g = gen(preset, n, r);
            let d = spectral_gap_with(&g, EigenMethod::Dense).unwrap();
            let l = spectral_gap_with(&g, EigenMethod::Lanczos).unwrap();
            assert!((d.gap - l.gap).abs() < 1e-9, "{preset}: {} vs {}", d.gap, l.gap);
        }
    }

    #[test]
    fn time_rescaling() {
        let cube = Cube::segment(3);
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        let ens = CanonicalEnsemble::new(&rf, &cube, 3).unwrap();
        let g1 = build_generator(&ens, &rf, Topology::NearestNeighbour).unwrap();
        let g2 = build_generator(&ens, &rf.scaled(2.0).unwrap(), Topology::NearestNeighbour).unwrap();
        let a = spectral_gap(&g1).unwrap().gap;
        let b = spectral_gap(&g2).unwrap().gap;
        assert!((b - 2.0 * a).abs() < 1e-10);
    }
}

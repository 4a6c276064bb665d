//! Random matrices and states for property checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::qlinalg::{c, hermitian_part, CMatrix, DensityMatrix, Projector, C64};

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Haar-distributed unitary via QR with the phases of `R` fixed.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let rm = qr.r();
    for j in 0..d {
        let z = rm[(j, j)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    hermitian_part(&ginibre(rng, d, d))
}

/// Hilbert-Schmidt random state of the given rank.
pub fn density_with_rank<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.unscale(tr))
}

pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    density_with_rank(rng, d, d)
}

pub fn pure_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    let g = ginibre(rng, d, 1);
    let n = g.norm();
    g.iter().map(|z| z / n).collect()
}

pub fn probability_vector<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// `U diag(λ) U†` with the given real spectrum.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[f64]) -> CMatrix {
    let d = spectrum.len();
    let u = unitary(rng, d);
    let mut scaled = u.clone();
    for (j, &l) in spectrum.iter().enumerate() {
        for i in 0..d {
            scaled[(i, j)] *= l;
        }
    }
    hermitian_part(&(scaled * u.adjoint()))
}

/// Random operator with `0 ⪯ S ⪯ I`.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let spec: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    with_spectrum(rng, &spec)
}

pub fn projector<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> Projector {
    let u = unitary(rng, d);
    let cols = u.columns(0, rank.min(d)).into_owned();
    Projector::from_orthonormal_columns(&cols)
}

//! Random system generators shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use pnpcert::StateSpaceModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; good enough for test matrices.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn randn_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| randn(rng))
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

/// Strictly passive 2x2 port-Hamiltonian system `A = s (J - R)`, `C = B^T`,
/// `D` with positive definite symmetric part.
pub fn port_hamiltonian(rng: &mut ChaCha8Rng, n: usize) -> StateSpaceModel {
    let s = log_uniform(rng, 0.1, 1e4);
    let k = randn_matrix(rng, n, n);
    let j = &k - k.transpose();
    let l = randn_matrix(rng, n, n) * 0.5;
    let r = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let a = (j - r) * s;
    let b = randn_matrix(rng, n, 2) * s.sqrt();
    let c = b.transpose();
    let ld = randn_matrix(rng, 2, 2) * 0.3;
    let kd = randn_matrix(rng, 2, 2) * 0.3;
    let d = &ld * ld.transpose() + DMatrix::identity(2, 2) * rng.gen_range(0.05..1.0) + (&kd - kd.transpose());
    StateSpaceModel::new(a, b, c, d).expect("valid dimensions")
}

/// Hurwitz `A = T diag(blocks) T^-1` with modes spread over `[w_lo, w_hi]`
/// rad/s and damping ratios in `[zeta_min, 1]`.
pub fn hurwitz_system(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    m: usize,
    (w_lo, w_hi): (f64, f64),
    zeta_min: f64,
) -> StateSpaceModel {
    let mut blk = DMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let w = log_uniform(rng, w_lo, w_hi);
        if i + 1 < n && rng.gen_bool(0.6) {
            let z: f64 = rng.gen_range(zeta_min..1.0);
            let wd = w * (1.0 - z * z).sqrt();
            blk[(i, i)] = -z * w;
            blk[(i + 1, i + 1)] = -z * w;
            blk[(i, i + 1)] = wd;
            blk[(i + 1, i)] = -wd;
            i += 2;
        } else {
            blk[(i, i)] = -w;
            i += 1;
        }
    }
    let t = DMatrix::identity(n, n) + randn_matrix(rng, n, n) * 0.3;
    let tinv = t.clone().try_inverse().expect("perturbed identity is invertible");
    let a = &t * blk * tinv;
    let scale = (w_lo * w_hi).sqrt().sqrt();
    let b = randn_matrix(rng, n, m) * scale;
    let c = randn_matrix(rng, p, n) * scale;
    let d = randn_matrix(rng, p, m) * 0.3;
    StateSpaceModel::new(a, b, c, d).expect("valid dimensions")
}

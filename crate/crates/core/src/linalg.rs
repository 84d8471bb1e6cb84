//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Every Hermitian eigendecomposition in the crate goes through [`eigh`], which
//! sorts eigenvalues non-increasingly and fixes the phase of each eigenvector
//! so that its largest-magnitude entry is real and positive. That keeps
//! results identical across runs and platforms.

use nalgebra::linalg::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMat, CVec, JcasError, Result, C64};

/// Eigenvalue floor applied before inverse square roots.
pub const EIG_CLAMP: f64 = 1e-14;

/// Hermitian eigendecomposition, eigenvalues sorted non-increasing.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the unit eigenvectors matching `values`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> CVec {
        self.vectors.column(k).into_owned()
    }

    /// `U f(Λ) Uᴴ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let vals: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        compose(&self.vectors, &vals)
    }
}

pub fn eigh(m: &CMat) -> Eigh {
    let n = m.nrows();
    let dec = SymmetricEigen::new(hermitize(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| dec.eigenvalues[b].total_cmp(&dec.eigenvalues[a]));
    let values: Vec<f64> = idx.iter().map(|&i| dec.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        let mut v = dec.eigenvectors.column(i).into_owned();
        fix_phase(&mut v);
        vectors.set_column(k, &v);
    }
    Eigh { values, vectors }
}

/// Rotate `v` so its largest-magnitude entry is real and positive. The first
/// index wins ties.
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag > 0.0 {
        let rot = v[best].conj() / best_mag;
        v.iter_mut().for_each(|z| *z *= rot);
        v[best] = C64::new(v[best].re, 0.0);
    }
}

/// `U diag(values) Uᴴ`, Hermitized.
pub fn compose(vectors: &CMat, values: &[f64]) -> CMat {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    let out = &scaled * vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    hermitize(&out)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `‖M − Mᴴ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

pub fn ensure_hermitian(m: &CMat, rel_tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(JcasError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = hermitian_asymmetry(m);
    if asym > rel_tol {
        return Err(JcasError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Inverse Hermitian square root through the eigendecomposition, eigenvalues
/// floored at [`EIG_CLAMP`].
pub fn inv_sqrt_hermitian(m: &CMat) -> CMat {
    eigh(m).map(|v| 1.0 / v.max(EIG_CLAMP).sqrt())
}

/// Square root of a PSD matrix, negative eigenvalues clipped to zero.
pub fn sqrt_psd(m: &CMat) -> CMat {
    eigh(m).map(|v| v.max(0.0).sqrt())
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `Re tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// `v wᴴ`.
pub fn outer(v: &CVec, w: &CVec) -> CMat {
    v * w.adjoint()
}

/// `vᴴ M v`, real part.
pub fn quad_form(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

/// `log2 det(M)` for Hermitian positive definite `M`.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    let chol = nalgebra::linalg::Cholesky::new(hermitize(m))
        .ok_or_else(|| JcasError::Dimension("matrix is not positive definite".to_string()))?;
    let l = chol.l_dirty();
    let ln: f64 = (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum();
    Ok(2.0 * ln / std::f64::consts::LN_2)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_cvec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn01(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| cn01(rng));
    hermitize(&g)
}

/// Random PSD matrix `G Gᴴ` with trace rescaled to `trace`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, trace: f64) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| cn01(rng));
    let p = &g * g.adjoint();
    let t = trace_re(&p);
    hermitize(&p.scale(trace / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m = random_hermitian(&mut rng, 6);
        let e = eigh(&m);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = compose(&e.vectors, &e.values);
        assert!((back - &m).norm() < 1e-12 * m.norm());
        for k in 0..6 {
            let v = e.vector(k);
            let (i, _) = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            assert!(v[i].im.abs() < 1e-14 && v[i].re > 0.0);
        }
    }

    #[test]
    fn inverse_square_root_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = random_psd(&mut rng, 5, 5.0) + identity(5);
        let s = inv_sqrt_hermitian(&m);
        let prod = &s * &s * &m;
        assert!((prod - identity(5)).norm() < 1e-10);
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let m = random_psd(&mut rng, 4, 3.0) + identity(4);
        let e = eigh(&m);
        let want: f64 = e.values.iter().map(|v| v.log2()).sum();
        assert!((log2_det_hpd(&m).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = identity(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            ensure_hermitian(&m, 1e-8),
            Err(JcasError::NotHermitian { .. })
        ));
    }
}

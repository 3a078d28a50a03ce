//! Eigenvalues, resolvents of minors and the error terms of the
//! self-consistent equation for `m - m_sc`.
//!
//! Index sets and resolvent entries are addressed by the original (0-based)
//! row labels of the full matrix, so `G^(T)_{ij}` is `resolvent(h, z, T).entry(i, j)`.

use std::collections::HashMap;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::ensemble::{minor, HermitianMatrix};
use crate::error::{Error, Result};
use crate::semicircle::{msc, sqrt_upper, SpectralPoint};

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const INVERSE_TOLERANCE: f64 = 1e-8;

/// Eigenvalues in ascending order, optionally with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column-major `N x N`, column `alpha` is the eigenvector of `eigenvalues[alpha]`.
    eigenvectors: Option<Vec<Complex64>>,
}

impl SpectralDecomposition {
    /// Wraps a list of eigenvalues (sorted on the way in).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self { eigenvalues, eigenvectors: None }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn has_vectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    pub fn eigenvector(&self, alpha: usize) -> Option<&[Complex64]> {
        let n = self.dim();
        self.eigenvectors.as_ref().map(|v| &v[alpha * n..(alpha + 1) * n])
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// `max_alpha ||H v_alpha - lambda_alpha v_alpha||_inf`, if vectors were kept.
    pub fn residual(&self, matrix: &HermitianMatrix) -> Option<f64> {
        let n = self.dim();
        let vectors = self.eigenvectors.as_ref()?;
        let mut worst = 0.0_f64;
        for (alpha, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = &vectors[alpha * n..(alpha + 1) * n];
            for i in 0..n {
                let hv: Complex64 = (0..n).map(|j| matrix.get(i, j) * v[j]).sum();
                worst = worst.max((hv - v[i] * lambda).norm());
            }
        }
        Some(worst)
    }
}

fn to_faer(matrix: &HermitianMatrix) -> Mat<Complex64> {
    Mat::from_fn(matrix.dim(), matrix.dim(), |i, j| matrix.get(i, j))
}

/// Dense Hermitian eigendecomposition.
pub fn eigendecompose(matrix: &HermitianMatrix, want_vectors: bool) -> Result<SpectralDecomposition> {
    matrix.check_hermitian(HERMITIAN_TOLERANCE)?;
    let n = matrix.dim();
    let a = to_faer(matrix);
    let failed = |e| Error::InvalidInput(format!("eigensolver failed: {e:?}"));
    if want_vectors {
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(failed)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let eigenvalues: Vec<f64> = (0..n).map(|i| s[i].re).collect();
        let mut vectors = Vec::with_capacity(n * n);
        for col in 0..n {
            for row in 0..n {
                vectors.push(u[(row, col)]);
            }
        }
        Ok(SpectralDecomposition { eigenvalues, eigenvectors: Some(vectors) })
    } else {
        let eigenvalues = a.self_adjoint_eigenvalues(Side::Lower).map_err(failed)?;
        Ok(SpectralDecomposition { eigenvalues, eigenvectors: None })
    }
}

/// Empirical Stieltjes transform `(1/N) sum_alpha 1/(lambda_alpha - z)`.
pub fn stieltjes(spectrum: &SpectralDecomposition, z: SpectralPoint) -> Complex64 {
    let z = z.z();
    let sum: Complex64 = spectrum.eigenvalues.iter().map(|&l| 1.0 / (l - z)).sum();
    sum / spectrum.dim() as f64
}

/// Dense resolvent `G^(T) = (H^(T) - z)^{-1}` indexed by surviving labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    labels: Vec<usize>,
    data: Vec<Complex64>,
}

impl Resolvent {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Entry by position in the minor.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    /// Entry by original labels.
    pub fn try_entry(&self, row: usize, col: usize) -> Option<Complex64> {
        let r = self.labels.binary_search(&row).ok()?;
        let c = self.labels.binary_search(&col).ok()?;
        Some(self.get(r, c))
    }

    /// Entry by original labels; panics when a label was deleted.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.try_entry(row, col)
            .unwrap_or_else(|| panic!("G entry ({row},{col}) not present in minor with labels {:?}", self.labels))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `sum_{j,k} |G_jk|^2`, the Hilbert-Schmidt norm squared.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|g| g.norm_sqr()).sum()
    }
}

/// Resolvent of the minor obtained by deleting the labels in `removed`.
pub fn resolvent(matrix: &HermitianMatrix, z: SpectralPoint, removed: &[usize]) -> Result<Resolvent> {
    let reduced = minor(matrix, removed)?;
    reduced.check_hermitian(HERMITIAN_TOLERANCE)?;
    let m = reduced.dim();
    let zc = z.z();
    let shifted = Mat::from_fn(m, m, |i, j| if i == j { reduced.get(i, j) - zc } else { reduced.get(i, j) });
    let inverse = shifted.partial_piv_lu().inverse();
    let mut residual = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::new(if i == j { -1.0 } else { 0.0 }, 0.0);
            for k in 0..m {
                acc += shifted[(i, k)] * inverse[(k, j)];
            }
            residual = residual.max(acc.norm());
        }
    }
    if !(residual <= INVERSE_TOLERANCE) {
        return Err(Error::Singular { residual });
    }
    let mut data = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            data.push(inverse[(i, j)]);
        }
    }
    Ok(Resolvent { labels: reduced.labels().to_vec(), data })
}

/// Lazily computed resolvents of minors of one matrix at one spectral point.
#[derive(Debug)]
pub struct MinorResolvents<'a> {
    matrix: &'a HermitianMatrix,
    z: SpectralPoint,
    cache: HashMap<Vec<usize>, Resolvent>,
}

impl<'a> MinorResolvents<'a> {
    pub fn new(matrix: &'a HermitianMatrix, z: SpectralPoint) -> Self {
        Self { matrix, z, cache: HashMap::new() }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        self.matrix
    }

    /// `G^(T)`; the set may be given in any order.
    pub fn get(&mut self, removed: &[usize]) -> Result<&Resolvent> {
        let mut key = removed.to_vec();
        key.sort_unstable();
        key.dedup();
        if !self.cache.contains_key(&key) {
            let g = resolvent(self.matrix, self.z, &key)?;
            self.cache.insert(key.clone(), g);
        }
        Ok(&self.cache[&key])
    }
}

/// Maximum absolute residual of each resolvent identity over all index
/// tuples and all deleted sets `T` with `|T| <= 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityReport {
    /// `G_jj = 1/(h_jj - z - a_j* G^(j) a_j)`
    pub schur_diagonal: f64,
    /// `G_kk = G^(j)_kk + G_jk G_kj / G_jj`
    pub diagonal_minor: f64,
    /// `G_ij = G^(k)_ij + G_ik G_kj / G_kk`
    pub offdiag_expansion: f64,
    /// `1/G_ii = 1/G^(k)_ii - G_ik G_ki / (G_ii G^(k)_ii G_kk)`
    pub reciprocal_expansion: f64,
    /// `G_kl = -G_ll G^(l)_kk K_kl` with `K_kl = h_kl - a_k^(l)* G^(kl) a_l^(k)`
    pub offdiag_factorization: f64,
    /// `(1/M^2) sum |G_jk|^2 = Im m / (M eta)` for each minor of size `M`
    pub ward: f64,
    pub checks: usize,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.schur_diagonal,
            self.diagonal_minor,
            self.offdiag_expansion,
            self.reciprocal_expansion,
            self.offdiag_factorization,
            self.ward,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn subsets_up_to(labels: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    if max_size >= 1 {
        out.extend(labels.iter().map(|&a| vec![a]));
    }
    if max_size >= 2 {
        for (p, &a) in labels.iter().enumerate() {
            for &b in &labels[p + 1..] {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

fn with(set: &[usize], extra: &[usize]) -> Vec<usize> {
    let mut v = set.to_vec();
    v.extend_from_slice(extra);
    v
}

/// `sum_{p,q} h_{row,p} G_{pq} h_{q,col}` over the labels of `g`.
fn sandwich(matrix: &HermitianMatrix, g: &Resolvent, row: usize, col: usize) -> Complex64 {
    let labels = g.labels();
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &p) in labels.iter().enumerate() {
        let left = matrix.get(row, p);
        for (b, &q) in labels.iter().enumerate() {
            acc += left * g.get(a, b) * matrix.get(q, col);
        }
    }
    acc
}

/// Checks the Schur-complement identities for `G` and its minors by direct
/// inversion. Requires `N >= 2`.
pub fn identity_suite(matrix: &HermitianMatrix, z: SpectralPoint) -> Result<IdentityReport> {
    let n = matrix.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    matrix.check_hermitian(HERMITIAN_TOLERANCE)?;
    let labels: Vec<usize> = (0..n).collect();
    let zc = z.z();
    let mut table = MinorResolvents::new(matrix, z);
    let mut report = IdentityReport::default();

    for t in subsets_up_to(&labels, 2.min(n - 1)) {
        let alive: Vec<usize> = labels.iter().copied().filter(|l| !t.contains(l)).collect();
        let g = table.get(&t)?.clone();
        let size = alive.len() as f64;

        let ward = g.frobenius_sq() / (size * size) - g.trace().im / size / (size * z.eta());
        report.ward = report.ward.max(ward.abs());
        report.checks += 1;

        for &j in &alive {
            let quad = if alive.len() > 1 {
                sandwich(matrix, table.get(&with(&t, &[j]))?, j, j)
            } else {
                Complex64::new(0.0, 0.0)
            };
            let predicted = 1.0 / (matrix.get(j, j) - zc - quad);
            report.schur_diagonal = report.schur_diagonal.max((g.entry(j, j) - predicted).norm());
            report.checks += 1;
        }

        for &k in &alive {
            if alive.len() < 2 {
                break;
            }
            let gk = table.get(&with(&t, &[k]))?.clone();
            let gkk = g.entry(k, k);
            for &i in &alive {
                if i == k {
                    continue;
                }
                // diagonal minor identity (k plays the deleted index)
                let diag = g.entry(i, i) - gk.entry(i, i) - g.entry(k, i) * g.entry(i, k) / gkk;
                report.diagonal_minor = report.diagonal_minor.max(diag.norm());

                let recip = 1.0 / g.entry(i, i) - 1.0 / gk.entry(i, i)
                    + g.entry(i, k) * g.entry(k, i) / (g.entry(i, i) * gk.entry(i, i) * gkk);
                report.reciprocal_expansion = report.reciprocal_expansion.max(recip.norm());
                report.checks += 2;

                for &j in &alive {
                    if j == k {
                        continue;
                    }
                    let off = g.entry(i, j) - gk.entry(i, j) - g.entry(i, k) * g.entry(k, j) / gkk;
                    report.offdiag_expansion = report.offdiag_expansion.max(off.norm());
                    report.checks += 1;
                }
            }
        }

        for &k in &alive {
            for &l in &alive {
                if k == l {
                    continue;
                }
                let k_kl = if alive.len() > 2 {
                    matrix.get(k, l) - sandwich(matrix, table.get(&with(&t, &[k, l]))?, k, l)
                } else {
                    matrix.get(k, l)
                };
                let gl_kk = table.get(&with(&t, &[l]))?.entry(k, k);
                let residual = g.entry(k, l) + g.entry(l, l) * gl_kk * k_kl;
                report.offdiag_factorization = report.offdiag_factorization.max(residual.norm());
                report.checks += 1;
            }
        }
    }
    Ok(report)
}

/// Trace identity for the first minor:
/// `(1/N^2) Tr|G^(0)|^2 = -(1/(N^2 eta)) Im[(1/G_00) sum_k G_k0 G_0k] + Im m/(N eta)`.
/// Returns the absolute difference of the two sides.
pub fn trace_identity_residual(matrix: &HermitianMatrix, z: SpectralPoint) -> Result<f64> {
    let n = matrix.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let nf = n as f64;
    let eta = z.eta();
    let g = resolvent(matrix, z, &[])?;
    let g1 = resolvent(matrix, z, &[0])?;
    let lhs = g1.frobenius_sq() / (nf * nf);
    let m = g.trace() / nf;
    let cross: Complex64 = (0..n).map(|k| g.entry(k, 0) * g.entry(0, k)).sum();
    let rhs = -(cross / g.entry(0, 0)).im / (nf * nf * eta) + m.im / (nf * eta);
    Ok((lhs - rhs).abs())
}

/// `Lambda = m - m_sc` together with the per-index error terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition {
    pub z: SpectralPoint,
    pub m: Complex64,
    pub msc: Complex64,
    pub lambda: Complex64,
    /// `Upsilon_j`
    pub upsilon: Vec<Complex64>,
    /// `Z_j = (1 - E_j) a_j* G^(j) a_j`
    pub zvar: Vec<Complex64>,
    /// `R = (1/N) sum_j Upsilon_j G_jj`
    pub r: Complex64,
    /// Diagonal resolvent entries `G_jj`.
    pub g_diag: Vec<Complex64>,
}

impl ErrorDecomposition {
    /// `|Lambda^2 + (2 m_sc + z) Lambda + R|`
    pub fn quadratic_residual(&self) -> f64 {
        let l = self.lambda;
        (l * l + (2.0 * self.msc + self.z.z()) * l + self.r).norm()
    }

    /// `max_j |G_jj + 1/(z + m_sc + Lambda + Upsilon_j)|`
    pub fn self_consistency_residual(&self) -> f64 {
        let base = self.z.z() + self.msc + self.lambda;
        self.g_diag
            .iter()
            .zip(&self.upsilon)
            .map(|(&g, &u)| (g + 1.0 / (base + u)).norm())
            .fold(0.0, f64::max)
    }

    /// `max_j |(G_jj - m_sc) - m_sc (Lambda + Upsilon_j) G_jj|`
    pub fn gj_residual(&self) -> f64 {
        self.g_diag
            .iter()
            .zip(&self.upsilon)
            .map(|(&g, &u)| ((g - self.msc) - self.msc * (self.lambda + u) * g).norm())
            .fold(0.0, f64::max)
    }

    /// `|R - (1/N) sum_j Upsilon_j G_jj|`, recomputed from the stored vectors.
    pub fn r_residual(&self) -> f64 {
        let n = self.g_diag.len() as f64;
        let sum: Complex64 = self.g_diag.iter().zip(&self.upsilon).map(|(&g, &u)| g * u).sum();
        (self.r - sum / n).norm()
    }
}

/// Computes `Lambda`, `Upsilon_j`, `Z_j` and `R` by inverting `H - z` and
/// each first minor. The partial expectation `E_j a_j* G^(j) a_j` is
/// `(1/N) sum_{k != j} G^(j)_kk`.
pub fn error_terms(matrix: &HermitianMatrix, z: SpectralPoint) -> Result<ErrorDecomposition> {
    let n = matrix.dim();
    let nf = n as f64;
    let g = resolvent(matrix, z, &[])?;
    let g_diag: Vec<Complex64> = (0..n).map(|j| g.get(j, j)).collect();
    let m = g.trace() / nf;
    let m_sc = msc(z);
    let lambda = m - m_sc;

    let mut upsilon = Vec::with_capacity(n);
    let mut zvar = Vec::with_capacity(n);
    for j in 0..n {
        let (z_j, minor_shift) = if n > 1 {
            let gj = resolvent(matrix, z, &[j])?;
            let quad = sandwich(matrix, &gj, j, j);
            let partial_expectation = gj.trace() / nf;
            let shift: Complex64 = gj.labels().iter().map(|&k| g.entry(k, k) - gj.entry(k, k)).sum();
            (quad - partial_expectation, shift)
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        };
        let u = -matrix.get(j, j) - g_diag[j] / nf - minor_shift / nf + z_j;
        upsilon.push(u);
        zvar.push(z_j);
    }
    let r = g_diag.iter().zip(&upsilon).map(|(&gj, &u)| gj * u).sum::<Complex64>() / nf;
    Ok(ErrorDecomposition { z, m, msc: m_sc, lambda, upsilon, zvar, r, g_diag })
}

/// Root of `Lambda^2 + (2 m_sc + z) Lambda + R = 0` selected by
/// `Lambda = -sqrt_upper(z^2/4 - 1) + sqrt_upper(z^2/4 - 1 - R)`.
pub fn lambda_from_r(z: SpectralPoint, r: Complex64) -> Complex64 {
    let zc = z.z();
    let a = zc * zc / 4.0 - 1.0;
    -sqrt_upper(a) + sqrt_upper(a - r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_wigner, EntryDistribution, WignerSpec};

    fn point(e: f64, eta: f64) -> SpectralPoint {
        SpectralPoint::new(e, eta).unwrap()
    }

    fn random(n: usize, seed: u64) -> HermitianMatrix {
        sample_wigner(&WignerSpec::new(n, EntryDistribution::Gaussian, seed).unwrap())
    }

    #[test]
    fn diagonal_eigenvalues() {
        let h = HermitianMatrix::from_real(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let d = eigendecompose(&h, false).unwrap();
        assert_eq!(d.dim(), 3);
        for (got, want) in d.eigenvalues().iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let h = HermitianMatrix::from_real(2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(eigendecompose(&h, false), Err(Error::NotHermitian { .. })));
        assert!(matches!(resolvent(&h, point(0.0, 1.0), &[]), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn scalar_stieltjes_and_resolvent() {
        let h = HermitianMatrix::from_real(1, &[0.5]).unwrap();
        let z = point(0.0, 1.0);
        let m = stieltjes(&eigendecompose(&h, false).unwrap(), z);
        assert!((m - Complex64::new(0.4, 0.8)).norm() < 1e-15);
        let g = resolvent(&h, z, &[]).unwrap();
        assert!((g.entry(0, 0) - Complex64::new(0.4, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn trace_and_vectors() {
        let h = random(50, 5);
        let d = eigendecompose(&h, true).unwrap();
        let sum: f64 = d.eigenvalues().iter().sum();
        assert!((sum - h.trace()).abs() < 1e-9 * 50.0);
        assert!(d.residual(&h).unwrap() < 1e-9);
        assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn resolvent_reports_labels() {
        let h = random(5, 2);
        let g = resolvent(&h, point(0.1, 0.5), &[1, 3]).unwrap();
        assert_eq!(g.labels(), &[0, 2, 4]);
        assert!(g.try_entry(1, 1).is_none());
        assert!(matches!(resolvent(&h, point(0.1, 0.5), &[0, 1, 2, 3, 4]), Err(Error::FullDeletion { .. })));
    }

    #[test]
    fn two_by_two_identities_exact() {
        let h = HermitianMatrix::from_entries(
            2,
            vec![
                Complex64::new(0.3, 0.0),
                Complex64::new(0.2, -0.4),
                Complex64::new(0.2, 0.4),
                Complex64::new(-0.7, 0.0),
            ],
        )
        .unwrap();
        let report = identity_suite(&h, point(0.0, 1.0)).unwrap();
        assert!(report.max_residual() < 1e-12, "{report:?}");
        assert!(report.checks > 0);
    }

    #[test]
    fn scalar_error_terms() {
        let h = HermitianMatrix::from_real(1, &[0.25]).unwrap();
        let z = point(0.2, 0.7);
        let d = error_terms(&h, z).unwrap();
        assert_eq!(d.zvar[0], Complex64::new(0.0, 0.0));
        let expected = -Complex64::new(0.25, 0.0) - d.g_diag[0];
        assert!((d.upsilon[0] - expected).norm() < 1e-15);
        assert!(d.quadratic_residual() < 1e-12);
    }

    #[test]
    fn lambda_from_zero_r() {
        assert_eq!(lambda_from_r(point(0.4, 0.1), Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }
}

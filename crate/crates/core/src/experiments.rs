//! Monte Carlo studies: fluctuation scans of `Lambda = m - m_sc`, counting
//! and rigidity statistics of the spectrum, edge scaling of `lambda_max`,
//! Hanson-Wright tails and the `E_q` control parameter.
//!
//! Every sample is generated from its own seed, derived from
//! `(base_seed, N, sample_index)`, so results do not depend on how samples
//! are distributed over threads.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::ensemble::{sample_wigner, EntryDistribution, WignerSpec};
use crate::error::{Error, Result};
use crate::semicircle::{classical_locations, msc, n_sc_cdf, SpectralPoint};
use crate::spectral::{eigendecompose, resolvent, stieltjes, SpectralDecomposition};

/// Lower bound on `N * eta` for every scan cell.
pub const MIN_N_ETA: f64 = 5.0;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the matrix used for sample `index` at dimension `n`.
pub fn sample_seed(base_seed: u64, n: usize, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ n as u64) ^ index as u64)
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {threads} worker threads: {e}")))
}

fn spectrum_of(n: usize, distribution: EntryDistribution, seed: u64) -> Result<SpectralDecomposition> {
    let matrix = sample_wigner(&WignerSpec::new(n, distribution, seed)?);
    eigendecompose(&matrix, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub n_list: Vec<usize>,
    pub eta_list: Vec<f64>,
    pub e_list: Vec<f64>,
    pub samples: usize,
    pub base_seed: u64,
    pub distribution: EntryDistribution,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.eta_list.is_empty() || self.e_list.is_empty() {
            return Err(Error::InvalidInput("N, E and eta lists must be nonempty".into()));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::DimensionTooSmall { n, min: 2 });
        }
        for &energy in &self.e_list {
            for &eta in &self.eta_list {
                SpectralPoint::new(energy, eta)?;
            }
        }
        for &n in &self.n_list {
            for &eta in &self.eta_list {
                if (n as f64) * eta < MIN_N_ETA {
                    return Err(Error::InvalidInput(format!(
                        "cell N = {n}, eta = {eta} has N*eta = {} below {MIN_N_ETA}",
                        n as f64 * eta
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One observation of a fluctuation scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub n: usize,
    pub energy: f64,
    pub eta: f64,
    pub sample: usize,
    pub abs_lambda: f64,
    pub im_lambda: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub counting_stat: f64,
    pub rigidity_stat: f64,
}

/// Records ordered by `(N, sample)`, then `E`, then `eta`, as listed in the config.
pub fn fluctuation_scan(config: &ScanConfig, threads: usize) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    let points: Vec<SpectralPoint> = config
        .e_list
        .iter()
        .flat_map(|&e| config.eta_list.iter().map(move |&eta| SpectralPoint::new(e, eta)))
        .collect::<Result<_>>()?;
    let gammas: BTreeMap<usize, Vec<f64>> = config.n_list.iter().map(|&n| (n, classical_locations(n))).collect();
    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.samples).map(move |s| (n, s)))
        .collect();
    let per_sample = thread_pool(threads)?.install(|| {
        tasks
            .par_iter()
            .map(|&(n, sample)| -> Result<Vec<SampleRecord>> {
                let spectrum = spectrum_of(n, config.distribution, sample_seed(config.base_seed, n, sample))?;
                let counting_stat = counting_statistic(&spectrum);
                let rigidity_stat = rigidity_with(spectrum.eigenvalues(), &gammas[&n]).log;
                Ok(points
                    .iter()
                    .map(|&z| {
                        let lambda = stieltjes(&spectrum, z) - msc(z);
                        SampleRecord {
                            n,
                            energy: z.energy(),
                            eta: z.eta(),
                            sample,
                            abs_lambda: lambda.norm(),
                            im_lambda: lambda.im,
                            lambda_min: spectrum.lambda_min(),
                            lambda_max: spectrum.lambda_max(),
                            counting_stat,
                            rigidity_stat,
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_sample.into_iter().flatten().collect())
}

/// Median `|Lambda|` of one `(N, E, eta)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub energy: f64,
    pub eta: f64,
    pub samples: usize,
    pub median_abs_lambda: f64,
    pub median_abs_im_lambda: f64,
}

/// Groups scan records by cell, in order of first appearance.
pub fn summarize_cells(records: &[SampleRecord]) -> Vec<CellSummary> {
    let mut order: Vec<(usize, u64, u64)> = Vec::new();
    let mut cells: BTreeMap<(usize, u64, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let key = (r.n, r.energy.to_bits(), r.eta.to_bits());
        let entry = cells.entry(key).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(r.abs_lambda);
        entry.1.push(r.im_lambda.abs());
    }
    order
        .into_iter()
        .map(|key| {
            let (abs, im) = &cells[&key];
            CellSummary {
                n: key.0,
                energy: f64::from_bits(key.1),
                eta: f64::from_bits(key.2),
                samples: abs.len(),
                median_abs_lambda: median(abs),
                median_abs_im_lambda: median(im),
            }
        })
        .collect()
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let position = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    sorted[lo] + (position - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn interquartile_range(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Ordinary least squares of `log y` against `log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub stderr_slope: f64,
    pub n_points: usize,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("fit needs equal lengths (got {} and {})", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("fit needs at least 3 points (got {})", x.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("log-log fit needs positive finite values (got {v})")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy <= f64::EPSILON * sxx { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let stderr_slope = if lx.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(FitResult { slope, intercept, r_squared, stderr_slope, n_points: lx.len() })
}

/// `sup_E |n(E) - n_sc(E)|`, attained at an eigenvalue from one side.
pub fn counting_statistic(spectrum: &SpectralDecomposition) -> f64 {
    let eigenvalues = spectrum.eigenvalues();
    let n = eigenvalues.len() as f64;
    eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let f = n_sc_cdf(lambda);
            ((i + 1) as f64 / n - f).abs().max((i as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

struct Rigidity {
    log: f64,
    sqrt_log: f64,
}

fn rigidity_with(eigenvalues: &[f64], gammas: &[f64]) -> Rigidity {
    let n = eigenvalues.len();
    let nf = n as f64;
    let deviation = eigenvalues
        .iter()
        .zip(gammas)
        .enumerate()
        .map(|(i, (lambda, gamma))| {
            let alpha_hat = (i + 1).min(n - i) as f64;
            (lambda - gamma).abs() * nf * (alpha_hat / nf).cbrt()
        })
        .fold(0.0, f64::max);
    let log_n = nf.ln();
    Rigidity { log: deviation / log_n, sqrt_log: deviation / log_n.sqrt() }
}

/// `max_alpha |lambda_alpha - gamma_alpha| N (alpha_hat/N)^{1/3} / log N`.
pub fn rigidity_statistic(spectrum: &SpectralDecomposition) -> Result<f64> {
    let n = spectrum.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    Ok(rigidity_with(spectrum.eigenvalues(), &classical_locations(n)).log)
}

/// Same deviation normalized by `sqrt(log N)` instead of `log N`.
pub fn rigidity_statistic_sqrt_log(spectrum: &SpectralDecomposition) -> Result<f64> {
    let n = spectrum.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    Ok(rigidity_with(spectrum.eigenvalues(), &classical_locations(n)).sqrt_log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub base_seed: u64,
    pub distribution: EntryDistribution,
}

/// Per-sample spectral statistics, without any spectral point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRecord {
    pub n: usize,
    pub sample: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub counting_stat: f64,
    pub rigidity_stat: f64,
    pub rigidity_sqrt_log_stat: f64,
}

/// Records ordered by `(N, sample)`. Sample `i` at dimension `N` uses the
/// same matrix as in [`fluctuation_scan`] with the same base seed.
pub fn spectrum_study(config: &SpectrumConfig, threads: usize) -> Result<Vec<SpectrumRecord>> {
    if config.n_list.is_empty() {
        return Err(Error::InvalidInput("N list must be nonempty".into()));
    }
    if let Some(&n) = config.n_list.iter().find(|&&n| n < 2) {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let gammas: BTreeMap<usize, Vec<f64>> = config.n_list.iter().map(|&n| (n, classical_locations(n))).collect();
    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.samples).map(move |s| (n, s)))
        .collect();
    thread_pool(threads)?.install(|| {
        tasks
            .par_iter()
            .map(|&(n, sample)| {
                let spectrum = spectrum_of(n, config.distribution, sample_seed(config.base_seed, n, sample))?;
                let rigidity = rigidity_with(spectrum.eigenvalues(), &gammas[&n]);
                Ok(SpectrumRecord {
                    n,
                    sample,
                    lambda_min: spectrum.lambda_min(),
                    lambda_max: spectrum.lambda_max(),
                    counting_stat: counting_statistic(&spectrum),
                    rigidity_stat: rigidity.log,
                    rigidity_sqrt_log_stat: rigidity.sqrt_log,
                })
            })
            .collect()
    })
}

/// Dispersion measure of `lambda_max` at one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpreadProxy {
    /// interquartile range of `lambda_max`
    #[default]
    Iqr,
    /// median of `|lambda_max - 2|`
    MedianEdgeDistance,
}

impl SpreadProxy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Iqr => "iqr",
            Self::MedianEdgeDistance => "median_edge_distance",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "iqr" => Ok(Self::Iqr),
            "median_edge_distance" => Ok(Self::MedianEdgeDistance),
            other => Err(Error::InvalidInput(format!("unknown spread proxy `{other}` (expected iqr or median_edge_distance)"))),
        }
    }

    fn spread(&self, values: &[f64]) -> f64 {
        match self {
            Self::Iqr => interquartile_range(values),
            Self::MedianEdgeDistance => median(&values.iter().map(|v| (v - 2.0).abs()).collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGroup {
    pub n: usize,
    pub samples: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStudy {
    pub groups: Vec<EdgeGroup>,
    pub fit: FitResult,
}

pub const EDGE_MIN_GROUPS: usize = 3;
pub const EDGE_MIN_SAMPLES: usize = 50;

/// Fits `log spread(lambda_max)` against `log N` from `(N, lambda_max)` pairs.
pub fn edge_statistic(lambda_max: &[(usize, f64)], proxy: SpreadProxy) -> Result<EdgeStudy> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(n, value) in lambda_max {
        by_n.entry(n).or_default().push(value);
    }
    if by_n.len() < EDGE_MIN_GROUPS {
        return Err(Error::InsufficientData(format!(
            "edge fit needs at least {EDGE_MIN_GROUPS} distinct N (got {})",
            by_n.len()
        )));
    }
    if let Some((n, values)) = by_n.iter().find(|(_, v)| v.len() < EDGE_MIN_SAMPLES) {
        return Err(Error::InsufficientData(format!(
            "edge fit needs at least {EDGE_MIN_SAMPLES} samples per N (N = {n} has {})",
            values.len()
        )));
    }
    let groups: Vec<EdgeGroup> = by_n
        .iter()
        .map(|(&n, values)| EdgeGroup { n, samples: values.len(), spread: proxy.spread(values) })
        .collect();
    let x: Vec<f64> = groups.iter().map(|g| g.n as f64).collect();
    let y: Vec<f64> = groups.iter().map(|g| g.spread).collect();
    let fit = loglog_fit(&x, &y)?;
    Ok(EdgeStudy { groups, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraticFormKind {
    Identity,
    /// `G(z)` of one Wigner matrix drawn from the configured seed
    RandomResolvent(SpectralPoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HansonWrightConfig {
    pub n: usize,
    pub kind: QuadraticFormKind,
    pub deltas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub distribution: EntryDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub deltas: Vec<f64>,
    pub exceedances: Vec<usize>,
    pub samples: usize,
    /// `Tr A*A`
    pub trace_a_star_a: f64,
}

impl TailEstimate {
    pub fn tails(&self) -> Vec<f64> {
        self.exceedances
            .iter()
            .map(|&c| if self.samples == 0 { 0.0 } else { c as f64 / self.samples as f64 })
            .collect()
    }
}

/// Empirical `P(|sum a_ij (x_i conj(x_j) - delta_ij)| > delta sqrt(Tr A*A))`
/// for a row-major `n x n` matrix `a` and vectors with `E x_i conj(x_j) = delta_ij`.
pub fn quadratic_form_tail(
    a: &[Complex64],
    n: usize,
    deltas: &[f64],
    samples: usize,
    seed: u64,
    distribution: EntryDistribution,
) -> Result<TailEstimate> {
    if a.len() != n * n {
        return Err(Error::InvalidInput(format!("matrix has {} entries, expected {}", a.len(), n * n)));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("deltas must be positive and strictly ascending".into()));
    }
    let trace_a_star_a: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let hilbert_schmidt = trace_a_star_a.sqrt();
    let trace: Complex64 = (0..n).map(|i| a[i * n + i]).sum();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    let mut exceedances = vec![0usize; deltas.len()];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            let re = distribution.sample_offdiag_component(&mut rng);
            let im = distribution.sample_offdiag_component(&mut rng);
            *xi = Complex64::new(re, im);
        }
        for (i, row) in a.chunks_exact(n).enumerate() {
            ax[i] = row.iter().zip(&x).map(|(aij, xj)| aij * xj).sum();
        }
        // sum_ij a_ij conj(x_i) x_j - Tr A
        let form: Complex64 = x.iter().zip(&ax).map(|(xi, axi)| xi.conj() * axi).sum::<Complex64>() - trace;
        let magnitude = form.norm();
        for (count, delta) in exceedances.iter_mut().zip(deltas) {
            if magnitude > delta * hilbert_schmidt {
                *count += 1;
            }
        }
    }
    Ok(TailEstimate { deltas: deltas.to_vec(), exceedances, samples, trace_a_star_a })
}

pub fn hanson_wright_tail(config: &HansonWrightConfig) -> Result<TailEstimate> {
    let n = config.n;
    if n == 0 {
        return Err(Error::DimensionTooSmall { n, min: 1 });
    }
    let a = match config.kind {
        QuadraticFormKind::Identity => {
            let mut a = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..n {
                a[i * n + i] = Complex64::new(1.0, 0.0);
            }
            a
        }
        QuadraticFormKind::RandomResolvent(z) => {
            let matrix = sample_wigner(&WignerSpec::new(n, config.distribution, splitmix64(config.seed))?);
            let g = resolvent(&matrix, z, &[])?;
            (0..n * n).map(|p| g.get(p / n, p % n)).collect()
        }
    };
    quadratic_form_tail(&a, n, &config.deltas, config.samples, config.seed, config.distribution)
}

/// `max{(N eta)^{-2q}, ((Im m_sc)^q + moment)/(N eta)^q} + N^{-q}`.
pub fn control_parameter(n: usize, z: SpectralPoint, q: u32, im_lambda_moment: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::DimensionTooSmall { n, min: 1 });
    }
    if !(im_lambda_moment >= 0.0) {
        return Err(Error::InvalidInput(format!("moment estimate must be nonnegative (got {im_lambda_moment})")));
    }
    let qi = q as i32;
    let n_eta = n as f64 * z.eta();
    let floor = n_eta.powi(-2 * qi);
    let moment_term = (msc(z).im.powi(qi) + im_lambda_moment) / n_eta.powi(qi);
    Ok(floor.max(moment_term) + (n as f64).powi(-qi))
}

//! Seeded sampling of Hermitian Wigner matrices and their minors.
//!
//! Off-diagonal entries are `h_lj = (x_lj + i y_lj)/sqrt(N)` with
//! `E x^2 = E y^2 = 1/2`; diagonal entries are `h_jj = x_jj/sqrt(N)` with
//! `E x_jj^2 = 1`. Each matrix draws from its own ChaCha20 stream seeded by
//! `WignerSpec::seed`, filling the strict upper triangle row by row
//! (real part, then imaginary part) and then the diagonal.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the real components of the matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryDistribution {
    Gaussian,
    /// Off-diagonal components `+-1/sqrt(2)`, diagonal `+-1`.
    Rademacher,
    /// Off-diagonal components on `[-sqrt(3/2), sqrt(3/2)]`, diagonal on `[-sqrt(3), sqrt(3)]`.
    Uniform,
}

impl EntryDistribution {
    pub const ALL: [EntryDistribution; 3] = [Self::Gaussian, Self::Rademacher, Self::Uniform];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::Uniform => "uniform",
        }
    }

    /// One real component of an off-diagonal entry (variance 1/2).
    pub fn sample_offdiag_component<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => {
                let g: f64 = rng.sample(StandardNormal);
                g * std::f64::consts::FRAC_1_SQRT_2
            }
            Self::Rademacher => {
                if rng.random::<bool>() {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    -std::f64::consts::FRAC_1_SQRT_2
                }
            }
            Self::Uniform => {
                let half_width = 1.5_f64.sqrt();
                rng.random_range(-half_width..=half_width)
            }
        }
    }

    /// One diagonal variable (variance 1).
    pub fn sample_diagonal<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => rng.sample(StandardNormal),
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Uniform => {
                let half_width = 3.0_f64.sqrt();
                rng.random_range(-half_width..=half_width)
            }
        }
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntryDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "rademacher" => Ok(Self::Rademacher),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::InvalidInput(format!(
                "unknown distribution `{other}` (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

/// Everything needed to reproduce one sampled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WignerSpec {
    pub n: usize,
    pub distribution: EntryDistribution,
    pub seed: u64,
}

impl WignerSpec {
    pub fn new(n: usize, distribution: EntryDistribution, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionTooSmall { n, min: 1 });
        }
        Ok(Self { n, distribution, seed })
    }
}

/// Dense Hermitian matrix, row-major, with the original index of each row.
///
/// Sampled matrices and their minors are Hermitian by construction;
/// [`HermitianMatrix::from_entries`] accepts arbitrary data and leaves the
/// check to consumers that need it (see [`HermitianMatrix::symmetry_violation`]).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<Complex64>,
    labels: Vec<usize>,
    spec: Option<WignerSpec>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries with labels `0..n`.
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self { n, entries, labels: (0..n).collect(), spec: None })
    }

    /// Real symmetric matrix from row-major real entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_entries(n, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Original index of each row (and column).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn spec(&self) -> Option<&WignerSpec> {
        self.spec.as_ref()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    /// Entry by original labels.
    pub fn get_labeled(&self, row: usize, col: usize) -> Option<Complex64> {
        let r = self.labels.binary_search(&row).ok()?;
        let c = self.labels.binary_search(&col).ok()?;
        Some(self.get(r, c))
    }

    /// Largest `|h_ij - conj(h_ji)|` (including imaginary diagonal parts) and where it occurs.
    pub fn symmetry_violation(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n {
            for j in i..self.n {
                let v = (self.get(i, j) - self.get(j, i).conj()).norm();
                if v > worst.2 || v.is_nan() {
                    worst = (self.labels[i], self.labels[j], v);
                }
            }
        }
        worst
    }

    pub fn check_hermitian(&self, tolerance: f64) -> Result<()> {
        let (row, col, violation) = self.symmetry_violation();
        if violation > tolerance || violation.is_nan() {
            Err(Error::NotHermitian { row, col, violation })
        } else {
            Ok(())
        }
    }

    /// Writes the debugging dump: a header `N distribution seed`, then one
    /// `row col re im` line per entry (0-based positions, row-major).
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match &self.spec {
            Some(spec) => writeln!(out, "{} {} {}", self.n, spec.distribution, spec.seed)?,
            None => writeln!(out, "{} none 0", self.n)?,
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let h = self.get(i, j);
                writeln!(out, "{i} {j} {:e} {:e}", h.re, h.im)?;
            }
        }
        Ok(())
    }

    /// Parses the format written by [`HermitianMatrix::write_dump`].
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: String| Error::InvalidInput(format!("matrix dump: {msg}"));
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad("empty input".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("malformed header `{header}`")));
        }
        let n: usize = fields[0].parse().map_err(|_| bad(format!("bad dimension `{}`", fields[0])))?;
        let seed: u64 = fields[2].parse().map_err(|_| bad(format!("bad seed `{}`", fields[2])))?;
        let spec = match fields[1] {
            "none" => None,
            name => Some(WignerSpec::new(n, name.parse()?, seed)?),
        };
        let mut entries = vec![Complex64::new(f64::NAN, f64::NAN); n * n];
        let mut seen = 0usize;
        for line in lines {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(bad(format!("malformed entry line `{line}`")));
            }
            let parse_idx = |s: &str| s.parse::<usize>().ok().filter(|&v| v < n);
            let (Some(i), Some(j)) = (parse_idx(parts[0]), parse_idx(parts[1])) else {
                return Err(bad(format!("index out of range in `{line}`")));
            };
            let re: f64 = parts[2].parse().map_err(|_| bad(format!("bad float in `{line}`")))?;
            let im: f64 = parts[3].parse().map_err(|_| bad(format!("bad float in `{line}`")))?;
            entries[i * n + j] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != n * n {
            return Err(bad(format!("expected {} entries, found {seen}", n * n)));
        }
        let mut matrix = Self::from_entries(n, entries)?;
        matrix.spec = spec;
        Ok(matrix)
    }
}

/// Samples a Wigner matrix; a pure function of `spec`.
pub fn sample_wigner(spec: &WignerSpec) -> HermitianMatrix {
    let n = spec.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for l in 0..n {
        for j in (l + 1)..n {
            let x = spec.distribution.sample_offdiag_component(&mut rng);
            let y = spec.distribution.sample_offdiag_component(&mut rng);
            let h = Complex64::new(x * scale, y * scale);
            entries[l * n + j] = h;
            entries[j * n + l] = h.conj();
        }
    }
    for j in 0..n {
        entries[j * n + j] = Complex64::new(spec.distribution.sample_diagonal(&mut rng) * scale, 0.0);
    }
    HermitianMatrix { n, entries, labels: (0..n).collect(), spec: Some(*spec) }
}

/// Deletes the rows and columns whose labels are in `removed`.
///
/// Labels refer to the original indices, so `minor(&minor(h, &[j]), &[k])`
/// equals `minor(h, &[j, k])`.
pub fn minor(matrix: &HermitianMatrix, removed: &[usize]) -> Result<HermitianMatrix> {
    for &label in removed {
        if matrix.labels.binary_search(&label).is_err() {
            return Err(Error::UnknownIndex { index: label });
        }
    }
    let keep: Vec<usize> = (0..matrix.n)
        .filter(|&p| !removed.contains(&matrix.labels[p]))
        .collect();
    if keep.is_empty() {
        return Err(Error::FullDeletion { n: matrix.n });
    }
    let m = keep.len();
    let mut entries = Vec::with_capacity(m * m);
    for &r in &keep {
        for &c in &keep {
            entries.push(matrix.get(r, c));
        }
    }
    Ok(HermitianMatrix {
        n: m,
        entries,
        labels: keep.iter().map(|&p| matrix.labels[p]).collect(),
        spec: matrix.spec,
    })
}

//! Symbolic expansion of resolvent entries over minors.
//!
//! A [`Monomial`] is a signed ordered product of factors `G^(T)_ij`,
//! `G^(T)_ii` and `1/G^(T)_ii`. The rewrite `w = w0 + w1` acts on the first
//! factor (left to right) that is not maximally expanded with respect to the
//! lone coordinates, splitting it with the identities
//!
//! ```text
//! G^(T)_ij   -> G^(Tu)_ij            + (1/G^(T)_uu) G^(T)_iu G^(T)_uj
//! G^(T)_ii   -> G^(Tu)_ii            + G^(T)_iu G^(T)_ui (1/G^(T)_uu)
//! 1/G^(T)_ii -> 1/G^(Tu)_ii          - (1/G^(T)_ii)(1/G^(T)_uu)(1/G^(Tu)_ii) G^(T)_iu G^(T)_ui
//! ```
//!
//! where `u` is the smallest lone coordinate outside `T u {i, j}`. The new
//! factors replace the rewritten one in place. Rewriting stops once every
//! factor is maximally expanded or the monomial holds more than `2q`
//! off-diagonal factors.
//!
//! Labels are 1-based coordinates; numeric evaluation maps label `l` to row
//! `l - 1` of the matrix.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;

use crate::ensemble::HermitianMatrix;
use crate::error::{Error, Result};
use crate::semicircle::SpectralPoint;
use crate::spectral::MinorResolvents;

const DENOMINATOR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorKind {
    DiagNumerator,
    DiagDenominator,
    OffDiag,
}

impl FactorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DiagNumerator => "diag_numerator",
            Self::DiagDenominator => "diag_denominator",
            Self::OffDiag => "offdiag",
        }
    }

    pub fn is_diagonal(&self) -> bool {
        !matches!(self, Self::OffDiag)
    }
}

/// One resolvent entry `G^(upper)_{row,col}`, or its reciprocal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResolventFactor {
    kind: FactorKind,
    row: usize,
    col: usize,
    upper: BTreeSet<usize>,
}

impl ResolventFactor {
    pub fn new(kind: FactorKind, row: usize, col: usize, upper: BTreeSet<usize>) -> Result<Self> {
        match kind {
            FactorKind::OffDiag if row == col => {
                return Err(Error::InvalidFactor(format!("off-diagonal factor needs row != col (got {row})")))
            }
            FactorKind::DiagNumerator | FactorKind::DiagDenominator if row != col => {
                return Err(Error::InvalidFactor(format!("diagonal factor needs row == col (got {row}, {col})")))
            }
            _ => {}
        }
        if upper.contains(&row) || upper.contains(&col) {
            return Err(Error::InvalidFactor(format!(
                "indices ({row},{col}) must not lie in the upper set {upper:?}"
            )));
        }
        Ok(Self { kind, row, col, upper })
    }

    /// `G^(upper)_ii`
    pub fn diag(i: usize, upper: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(FactorKind::DiagNumerator, i, i, upper.into_iter().collect())
    }

    /// `1/G^(upper)_ii`
    pub fn diag_inverse(i: usize, upper: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(FactorKind::DiagDenominator, i, i, upper.into_iter().collect())
    }

    /// `G^(upper)_ij`, `i != j`
    pub fn offdiag(i: usize, j: usize, upper: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(FactorKind::OffDiag, i, j, upper.into_iter().collect())
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn row(&self) -> usize {
        self.row
    }

    pub fn col(&self) -> usize {
        self.col
    }

    pub fn upper(&self) -> &BTreeSet<usize> {
        &self.upper
    }

    // Invariants are preserved: callers only add labels outside {row, col}.
    fn build(kind: FactorKind, row: usize, col: usize, upper: &BTreeSet<usize>) -> Self {
        Self { kind, row, col, upper: upper.clone() }
    }

    fn with_upper(&self, extra: usize) -> Self {
        let mut upper = self.upper.clone();
        upper.insert(extra);
        Self { upper, ..self.clone() }
    }

    /// Smallest coordinate not yet covered by `upper u {row, col}`.
    fn next_expansion_index(&self, coords: &BTreeSet<usize>) -> Option<usize> {
        coords
            .iter()
            .copied()
            .find(|c| *c != self.row && *c != self.col && !self.upper.contains(c))
    }
}

impl fmt::Display for ResolventFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{}|", self.kind.name(), self.row, self.col)?;
        for (n, t) in self.upper.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flipped(self) -> Self {
        match self {
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plus => "+",
            Self::Minus => "-",
        })
    }
}

/// Signed ordered product of resolvent factors. The empty product is one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub sign: Sign,
    pub factors: Vec<ResolventFactor>,
}

impl Monomial {
    pub fn new(sign: Sign, factors: Vec<ResolventFactor>) -> Self {
        Self { sign, factors }
    }

    pub fn offdiag_count(&self) -> usize {
        self.factors.iter().filter(|f| f.kind == FactorKind::OffDiag).count()
    }

    pub fn diag_count(&self) -> usize {
        self.factors.iter().filter(|f| f.kind.is_diagonal()).count()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign)?;
        for factor in &self.factors {
            write!(f, " {factor}")?;
        }
        Ok(())
    }
}

/// Starting point of an expansion: `A = 1/G_kk` or `B = G_kk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialMonomial {
    A(usize),
    B(usize),
}

impl InitialMonomial {
    pub fn index(&self) -> usize {
        match *self {
            Self::A(k) | Self::B(k) => k,
        }
    }

    pub fn monomial(&self) -> Monomial {
        let factor = match *self {
            Self::A(k) => ResolventFactor::build(FactorKind::DiagDenominator, k, k, &BTreeSet::new()),
            Self::B(k) => ResolventFactor::build(FactorKind::DiagNumerator, k, k, &BTreeSet::new()),
        };
        Monomial::new(Sign::Plus, vec![factor])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionConfig {
    initial: InitialMonomial,
    lone_coords: BTreeSet<usize>,
    q: usize,
}

impl ExpansionConfig {
    pub fn new(initial: InitialMonomial, lone_coords: impl IntoIterator<Item = usize>, q: usize) -> Result<Self> {
        let lone_coords: BTreeSet<usize> = lone_coords.into_iter().collect();
        let k = initial.index();
        if k == 0 || lone_coords.contains(&0) {
            return Err(Error::InvalidExpansion("labels are 1-based".into()));
        }
        if lone_coords.contains(&k) {
            return Err(Error::InvalidExpansion(format!("initial index {k} is one of the lone coordinates")));
        }
        if q == 0 {
            return Err(Error::InvalidExpansion("q must be positive".into()));
        }
        Ok(Self { initial, lone_coords, q })
    }

    pub fn initial(&self) -> InitialMonomial {
        self.initial
    }

    pub fn lone_coords(&self) -> &BTreeSet<usize> {
        &self.lone_coords
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Longest admissible rewrite history, `2q(4q + 5) + 2q`.
    pub fn depth_cap(&self) -> usize {
        2 * self.q * (4 * self.q + 5) + 2 * self.q
    }

    /// Largest label used by the configuration.
    pub fn max_label(&self) -> usize {
        self.lone_coords.iter().copied().chain([self.initial.index()]).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalReason {
    MaximallyExpanded,
    OffdiagOverflow,
}

impl TerminalReason {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MaximallyExpanded => "maximally_expanded",
            Self::OffdiagOverflow => "offdiag_overflow",
        }
    }
}

/// One leaf of the rewrite tree; `sigma` lists the `w0`/`w1` choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionTerm {
    pub sigma: String,
    pub monomial: Monomial,
    pub terminal_reason: TerminalReason,
}

impl fmt::Display for ExpansionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.sigma, self.monomial.sign)?;
        for (n, factor) in self.monomial.factors.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// Term dump, one `sigma TAB sign TAB factors` line per leaf.
pub fn format_terms(terms: &[ExpansionTerm]) -> String {
    terms.iter().map(|t| format!("{t}\n")).collect()
}

/// Positions (1-based) whose coordinate occurs exactly once, and those coordinates.
pub fn lone_labels(k: &[usize]) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let mut positions = BTreeSet::new();
    let mut coords = BTreeSet::new();
    for (s, &ks) in k.iter().enumerate() {
        if k.iter().filter(|&&kr| kr == ks).count() == 1 {
            positions.insert(s + 1);
            coords.insert(ks);
        }
    }
    (positions, coords)
}

/// `coords` is contained in `upper u {row, col}`.
pub fn is_maximally_expanded(factor: &ResolventFactor, coords: &BTreeSet<usize>) -> bool {
    factor.next_expansion_index(coords).is_none()
}

fn rewrite(monomial: &Monomial, position: usize, u: usize) -> (Monomial, Monomial) {
    let target = &monomial.factors[position];
    let (i, j, t) = (target.row, target.col, &target.upper);
    let w0 = vec![target.with_upper(u)];
    let (w1, sign) = match target.kind {
        FactorKind::OffDiag => (
            vec![
                ResolventFactor::build(FactorKind::DiagDenominator, u, u, t),
                ResolventFactor::build(FactorKind::OffDiag, i, u, t),
                ResolventFactor::build(FactorKind::OffDiag, u, j, t),
            ],
            monomial.sign,
        ),
        FactorKind::DiagNumerator => (
            vec![
                ResolventFactor::build(FactorKind::OffDiag, i, u, t),
                ResolventFactor::build(FactorKind::OffDiag, u, i, t),
                ResolventFactor::build(FactorKind::DiagDenominator, u, u, t),
            ],
            monomial.sign,
        ),
        FactorKind::DiagDenominator => (
            vec![
                ResolventFactor::build(FactorKind::DiagDenominator, i, i, t),
                ResolventFactor::build(FactorKind::DiagDenominator, u, u, t),
                target.with_upper(u),
                ResolventFactor::build(FactorKind::OffDiag, i, u, t),
                ResolventFactor::build(FactorKind::OffDiag, u, i, t),
            ],
            monomial.sign.flipped(),
        ),
    };
    let splice = |replacement: Vec<ResolventFactor>, sign: Sign| {
        let mut factors = Vec::with_capacity(monomial.factors.len() + replacement.len() - 1);
        factors.extend_from_slice(&monomial.factors[..position]);
        factors.extend(replacement);
        factors.extend_from_slice(&monomial.factors[position + 1..]);
        Monomial::new(sign, factors)
    };
    (splice(w0, monomial.sign), splice(w1, sign))
}

/// Expands the initial monomial into its leaves, in depth-first order with
/// the `w0` branch first.
pub fn expand(config: &ExpansionConfig) -> Result<Vec<ExpansionTerm>> {
    let coords = &config.lone_coords;
    let cap = config.depth_cap();
    let max_offdiag = 2 * config.q;
    let mut leaves = Vec::new();
    let mut stack = vec![(String::new(), config.initial.monomial())];
    while let Some((sigma, monomial)) = stack.pop() {
        if sigma.len() > cap {
            return Err(Error::DepthCap { length: sigma.len(), cap });
        }
        if monomial.offdiag_count() > max_offdiag {
            leaves.push(ExpansionTerm { sigma, monomial, terminal_reason: TerminalReason::OffdiagOverflow });
            continue;
        }
        let next = monomial
            .factors
            .iter()
            .enumerate()
            .find_map(|(p, f)| f.next_expansion_index(coords).map(|u| (p, u)));
        match next {
            None => leaves.push(ExpansionTerm { sigma, monomial, terminal_reason: TerminalReason::MaximallyExpanded }),
            Some((position, u)) => {
                let (w0, w1) = rewrite(&monomial, position, u);
                stack.push((format!("{sigma}1"), w1));
                stack.push((format!("{sigma}0"), w0));
            }
        }
    }
    Ok(leaves)
}

/// Counts attached to one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralStats {
    /// off-diagonal factors
    pub gamma: usize,
    /// diagonal factors, numerator and denominator
    pub delta: usize,
    /// number of `w1` steps in the history
    pub ones: usize,
}

pub fn structural_stats(term: &ExpansionTerm) -> StructuralStats {
    StructuralStats {
        gamma: term.monomial.offdiag_count(),
        delta: term.monomial.diag_count(),
        ones: term.sigma.bytes().filter(|&b| b == b'1').count(),
    }
}

/// `sum_{k=0}^{2q} C(4q(2q+3), k)`, an upper bound on the number of leaves.
pub fn leaf_count_bound(q: usize) -> u128 {
    let length = (4 * q * (2 * q + 3)) as u128;
    let mut total = 0u128;
    let mut binom = 1u128;
    for k in 0..=(2 * q as u128) {
        if k > length {
            break;
        }
        total += binom;
        binom = binom * (length - k) / (k + 1);
    }
    total
}

/// Numeric evaluation of monomials against one matrix and spectral point;
/// resolvents of the minors are computed once per distinct upper set.
#[derive(Debug)]
pub struct MonomialEvaluator<'a> {
    resolvents: MinorResolvents<'a>,
}

impl<'a> MonomialEvaluator<'a> {
    pub fn new(matrix: &'a HermitianMatrix, z: SpectralPoint) -> Self {
        Self { resolvents: MinorResolvents::new(matrix, z) }
    }

    fn index(&self, label: usize) -> Result<usize> {
        let labels = self.resolvents.matrix().labels();
        if label == 0 || label > labels.len() {
            return Err(Error::InvalidFactor(format!("label {label} outside 1..={}", labels.len())));
        }
        Ok(labels[label - 1])
    }

    pub fn factor(&mut self, factor: &ResolventFactor) -> Result<Complex64> {
        let row = self.index(factor.row)?;
        let col = self.index(factor.col)?;
        let upper = factor.upper.iter().map(|&t| self.index(t)).collect::<Result<Vec<_>>>()?;
        if upper.contains(&row) || upper.contains(&col) {
            return Err(Error::InvalidFactor(format!("{factor} refers to a deleted index")));
        }
        let g = self.resolvents.get(&upper)?.entry(row, col);
        match factor.kind {
            FactorKind::DiagDenominator => {
                if g.norm() < DENOMINATOR_FLOOR {
                    return Err(Error::NearSingular { index: factor.row, upper: factor.upper.iter().copied().collect(), magnitude: g.norm() });
                }
                Ok(1.0 / g)
            }
            _ => Ok(g),
        }
    }

    pub fn monomial(&mut self, monomial: &Monomial) -> Result<Complex64> {
        let mut value = Complex64::new(monomial.sign.as_f64(), 0.0);
        for factor in &monomial.factors {
            value *= self.factor(factor)?;
        }
        Ok(value)
    }
}

/// `sign * prod G^(upper)_{row,col}` (reciprocals for denominators).
pub fn evaluate_monomial(monomial: &Monomial, matrix: &HermitianMatrix, z: SpectralPoint) -> Result<Complex64> {
    MonomialEvaluator::new(matrix, z).monomial(monomial)
}

/// Numeric comparison of an expansion against its initial monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub leaves: usize,
    pub initial: Complex64,
    pub sum: Complex64,
    pub relative_residual: f64,
}

pub fn verify_reconstruction(config: &ExpansionConfig, matrix: &HermitianMatrix, z: SpectralPoint) -> Result<Reconstruction> {
    let n = matrix.dim();
    if n < config.lone_coords.len() + 2 {
        return Err(Error::DimensionTooSmall { n, min: config.lone_coords.len() + 2 });
    }
    if config.max_label() > n {
        return Err(Error::InvalidExpansion(format!("label {} exceeds the dimension {n}", config.max_label())));
    }
    let terms = expand(config)?;
    let mut evaluator = MonomialEvaluator::new(matrix, z);
    let initial = evaluator.monomial(&config.initial.monomial())?;
    let mut sum = Complex64::new(0.0, 0.0);
    for term in &terms {
        sum += evaluator.monomial(&term.monomial)?;
    }
    Ok(Reconstruction { leaves: terms.len(), initial, sum, relative_residual: (sum - initial).norm() / initial.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(c: &[usize]) -> BTreeSet<usize> {
        c.iter().copied().collect()
    }

    #[test]
    fn lone_label_examples() {
        assert_eq!(lone_labels(&[1, 2, 1, 3]), (coords(&[2, 4]), coords(&[2, 3])));
        assert_eq!(lone_labels(&[5, 5, 5, 5]), (coords(&[]), coords(&[])));
        assert_eq!(lone_labels(&[7, 3, 7, 9]), (coords(&[2, 4]), coords(&[3, 9])));
    }

    #[test]
    fn maximally_expanded_examples() {
        assert!(!is_maximally_expanded(&ResolventFactor::diag(1, []).unwrap(), &coords(&[2])));
        assert!(is_maximally_expanded(&ResolventFactor::diag(1, [2]).unwrap(), &coords(&[2])));
        assert!(is_maximally_expanded(&ResolventFactor::offdiag(1, 2, []).unwrap(), &coords(&[2])));
    }

    #[test]
    fn factor_validation() {
        assert!(ResolventFactor::offdiag(1, 1, []).is_err());
        assert!(ResolventFactor::new(FactorKind::DiagNumerator, 1, 2, BTreeSet::new()).is_err());
        assert!(ResolventFactor::diag(1, [1]).is_err());
        assert!(ResolventFactor::offdiag(1, 2, [2]).is_err());
        assert_eq!(ResolventFactor::offdiag(1, 2, [5, 3]).unwrap().to_string(), "offdiag(1,2|3,5)");
    }

    #[test]
    fn config_validation() {
        assert!(ExpansionConfig::new(InitialMonomial::A(1), [1], 1).is_err());
        assert!(ExpansionConfig::new(InitialMonomial::A(1), [2], 0).is_err());
        assert!(ExpansionConfig::new(InitialMonomial::B(0), [2], 1).is_err());
    }

    #[test]
    fn nothing_to_expand() {
        let cfg = ExpansionConfig::new(InitialMonomial::A(1), [], 1).unwrap();
        let terms = expand(&cfg).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].sigma, "");
        assert_eq!(terms[0].monomial, InitialMonomial::A(1).monomial());
        assert_eq!(terms[0].terminal_reason, TerminalReason::MaximallyExpanded);
    }

    #[test]
    fn b_type_single_coordinate() {
        let cfg = ExpansionConfig::new(InitialMonomial::B(1), [2], 1).unwrap();
        let terms = expand(&cfg).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].sigma, "0");
        assert_eq!(terms[0].monomial, Monomial::new(Sign::Plus, vec![ResolventFactor::diag(1, [2]).unwrap()]));
        assert_eq!(terms[1].sigma, "1");
        assert_eq!(
            terms[1].monomial,
            Monomial::new(
                Sign::Plus,
                vec![
                    ResolventFactor::offdiag(1, 2, []).unwrap(),
                    ResolventFactor::offdiag(2, 1, []).unwrap(),
                    ResolventFactor::diag_inverse(2, []).unwrap(),
                ]
            )
        );
        assert!(terms.iter().all(|t| t.terminal_reason == TerminalReason::MaximallyExpanded));
    }

    #[test]
    fn a_type_single_coordinate() {
        let cfg = ExpansionConfig::new(InitialMonomial::A(1), [2], 1).unwrap();
        let terms = expand(&cfg).unwrap();
        let sigmas: Vec<&str> = terms.iter().map(|t| t.sigma.as_str()).collect();
        assert_eq!(sigmas, ["0", "10", "11"]);
        assert_eq!(terms[1].monomial.sign, Sign::Minus);
        assert_eq!(terms[2].monomial.sign, Sign::Plus);
        assert_eq!(terms[2].monomial.offdiag_count(), 4);
        assert_eq!(terms[2].terminal_reason, TerminalReason::OffdiagOverflow);
    }

    #[test]
    fn stats_count_history() {
        let cfg = ExpansionConfig::new(InitialMonomial::A(1), [2], 1).unwrap();
        let terms = expand(&cfg).unwrap();
        let s = structural_stats(&terms[2]);
        assert_eq!(s, StructuralStats { gamma: 4, delta: 5, ones: 2 });
    }

    #[test]
    fn leaf_bound_values() {
        // q = 1: C(20,0) + C(20,1) + C(20,2)
        assert_eq!(leaf_count_bound(1), 1 + 20 + 190);
        assert_eq!(leaf_count_bound(2), 1 + 56 + 1540 + 27720 + 367290);
    }
}

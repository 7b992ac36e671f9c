//! Truncated multi-mode Fock space tensored with a register of two-level ions.
//!
//! Basis ordering is fixed: the occupation of mode 0 is the slowest index,
//! then mode 1, and so on, followed by the spin factors in order. Inside each
//! spin factor the excited state `|e>` precedes the ground state `|g>`, so
//! `sigma_z = diag(+1, -1)` and every operator on `H (x) C^2` reads as a 2x2
//! block matrix `[[ee, eg], [ge, gg]]` over the mode space.
//!
//! Mode, spin and drive indices are zero-based throughout the library.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Tolerance used when an operator claims to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Shape of the truncated state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub n_modes: usize,
    /// Fock cutoff per mode: states `|0>..|n_max - 1>` are kept.
    pub n_max: usize,
    pub n_spins: usize,
    /// Levels `>= n_max - guard` are excluded from comparison norms.
    pub guard: usize,
}

impl HilbertConfig {
    pub fn new(n_modes: usize, n_max: usize, n_spins: usize, guard: usize) -> Result<Self> {
        let config = Self { n_modes, n_max, n_spins, guard };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidConfig("at least one mode is required".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_max must be at least 2, got {}",
                self.n_max
            )));
        }
        if self.guard >= self.n_max {
            return Err(Error::InvalidConfig(format!(
                "guard ({}) must be smaller than n_max ({})",
                self.guard, self.n_max
            )));
        }
        let dim = (self.n_max as u128)
            .checked_pow(self.n_modes as u32)
            .and_then(|m| m.checked_mul(1u128 << self.n_spins.min(64)));
        match dim {
            Some(d) if d <= 1 << 16 => Ok(()),
            _ => Err(Error::InvalidConfig(
                "total dimension exceeds the dense-matrix limit of 65536".into(),
            )),
        }
    }

    pub fn mode_dim(&self) -> usize {
        self.n_max.pow(self.n_modes as u32)
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.mode_dim() * self.spin_dim()
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange { index: mode, count: self.n_modes })
        }
    }

    pub fn check_spin(&self, spin: usize) -> Result<()> {
        if spin < self.n_spins {
            Ok(())
        } else {
            Err(Error::SpinOutOfRange { index: spin, count: self.n_spins })
        }
    }

    pub fn index_of(&self, state: &BasisState) -> usize {
        debug_assert_eq!(state.occupations.len(), self.n_modes);
        debug_assert_eq!(state.spins.len(), self.n_spins);
        let mode_index = state
            .occupations
            .iter()
            .fold(0, |acc, &n| acc * self.n_max + n);
        let spin_index = state
            .spins
            .iter()
            .fold(0, |acc, s| acc * 2 + s.local_index());
        mode_index * self.spin_dim() + spin_index
    }

    pub fn state_at(&self, index: usize) -> BasisState {
        let mut spin_index = index % self.spin_dim();
        let mut mode_index = index / self.spin_dim();
        let mut spins = vec![Spin::Excited; self.n_spins];
        for s in spins.iter_mut().rev() {
            *s = if spin_index & 1 == 0 { Spin::Excited } else { Spin::Ground };
            spin_index >>= 1;
        }
        let mut occupations = vec![0; self.n_modes];
        for n in occupations.iter_mut().rev() {
            *n = mode_index % self.n_max;
            mode_index /= self.n_max;
        }
        BasisState { occupations, spins }
    }

    /// Indices of basis states whose every mode occupation lies below the
    /// guard band.
    pub fn guarded_indices(&self) -> Vec<usize> {
        let limit = self.n_max - self.guard;
        (0..self.dim())
            .filter(|&i| self.state_at(i).occupations.iter().all(|&n| n < limit))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Excited,
    Ground,
}

impl Spin {
    pub fn local_index(self) -> usize {
        match self {
            Spin::Excited => 0,
            Spin::Ground => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub occupations: Vec<usize>,
    pub spins: Vec<Spin>,
}

/// What a construction routine guarantees about its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    General,
    Hermitian,
    Unitary,
}

/// Dense operator on the space described by its [`HilbertConfig`].
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    config: HilbertConfig,
    matrix: CMatrix,
    structure: Structure,
}

impl OperatorMatrix {
    pub fn new(config: HilbertConfig, matrix: CMatrix) -> Result<Self> {
        Self::with_structure(config, matrix, Structure::General)
    }

    pub fn with_structure(config: HilbertConfig, matrix: CMatrix, structure: Structure) -> Result<Self> {
        let dim = config.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { config, matrix, structure })
    }

    pub(crate) fn from_parts(config: HilbertConfig, matrix: CMatrix, structure: Structure) -> Self {
        debug_assert_eq!(matrix.nrows(), config.dim());
        Self { config, matrix, structure }
    }

    pub fn identity(config: HilbertConfig) -> Self {
        Self::from_parts(config, CMatrix::identity(config.dim(), config.dim()), Structure::Unitary)
    }

    pub fn zeros(config: HilbertConfig) -> Self {
        Self::from_parts(config, CMatrix::zeros(config.dim(), config.dim()), Structure::Hermitian)
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.config
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.config, self.matrix.adjoint(), self.structure)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let structure = match self.structure {
            Structure::Hermitian if factor.im == 0.0 => Structure::Hermitian,
            Structure::Unitary if (factor.norm() - 1.0).abs() < 1e-15 => Structure::Unitary,
            _ => Structure::General,
        };
        Self::from_parts(self.config, &self.matrix * factor, structure)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self * other;
        let ba = other * self;
        &ab - &ba
    }

    /// `max |H - H^dag|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// `max |U^dag U - I|` over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n)))
    }

    /// Retags the operator as Hermitian after checking it to [`HERMITIAN_TOL`].
    pub fn into_hermitian(self) -> Result<Self> {
        let deviation = self.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { structure: Structure::Hermitian, ..self })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn apply(&self, state: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        &self.matrix * state
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

fn combine_sum(a: Structure, b: Structure) -> Structure {
    match (a, b) {
        (Structure::Hermitian, Structure::Hermitian) => Structure::Hermitian,
        _ => Structure::General,
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.config, rhs.config, "operator configs differ");
        OperatorMatrix::from_parts(
            self.config,
            &self.matrix + &rhs.matrix,
            combine_sum(self.structure, rhs.structure),
        )
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.config, rhs.config, "operator configs differ");
        OperatorMatrix::from_parts(
            self.config,
            &self.matrix - &rhs.matrix,
            combine_sum(self.structure, rhs.structure),
        )
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.config, rhs.config, "operator configs differ");
        let structure = match (self.structure, rhs.structure) {
            (Structure::Unitary, Structure::Unitary) => Structure::Unitary,
            _ => Structure::General,
        };
        OperatorMatrix::from_parts(self.config, &self.matrix * &rhs.matrix, structure)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        let structure = match self.structure {
            Structure::Hermitian => Structure::Hermitian,
            _ => Structure::General,
        };
        OperatorMatrix::from_parts(self.config, -&self.matrix, structure)
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Single-factor matrices, before embedding into the full space.
pub mod local {
    use super::*;

    pub fn annihilation(n_max: usize) -> CMatrix {
        let mut a = CMatrix::zeros(n_max, n_max);
        for n in 1..n_max {
            a[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        a
    }

    pub fn creation(n_max: usize) -> CMatrix {
        annihilation(n_max).adjoint()
    }

    pub fn number(n_max: usize) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n_max, |n, _| C64::from(n as f64)))
    }

    /// `exp(alpha a^dag - alpha^* a)` on the truncated single-mode space.
    pub fn displacement(n_max: usize, alpha: C64) -> CMatrix {
        if alpha == C64::from(0.0) {
            return CMatrix::identity(n_max, n_max);
        }
        // exp(G) = exp(-i H) with H = i G Hermitian.
        let g = creation(n_max) * alpha - annihilation(n_max) * alpha.conj();
        let h = g * C64::i();
        expm_hermitian(&h, 1.0)
    }

    pub fn sigma_plus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(C64::from))
    }

    pub fn sigma_minus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0].map(C64::from))
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(C64::from))
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(C64::from))
    }

    /// `|a><b|` in the `(e, g)` ordering.
    pub fn spin_unit(row: usize, col: usize) -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(row, col)] = C64::from(1.0);
        m
    }
}

/// `exp(-i H t)` for Hermitian `H` via its eigendecomposition.
pub(crate) fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    // symmetrize so the eigensolver sees an exactly Hermitian input
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let eig = sym.symmetric_eigen();
    let phases = nalgebra::DVector::from_fn(n, |k, _| C64::from_polar(1.0, -eig.eigenvalues[k] * t));
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (k, mut col) in vd.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    vd * v.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Mode(usize),
    Spin(usize),
}

/// Kronecker embedding of local operators, identity on every other factor.
pub fn embed(config: &HilbertConfig, locals: &[(Factor, &CMatrix)]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    let mut pending_identity = 1usize;
    let flush = |out: CMatrix, pending: &mut usize| -> CMatrix {
        if *pending > 1 {
            let id = CMatrix::identity(*pending, *pending);
            let r = out.kronecker(&id);
            *pending = 1;
            r
        } else {
            out
        }
    };
    let factors = (0..config.n_modes)
        .map(|m| (Factor::Mode(m), config.n_max))
        .chain((0..config.n_spins).map(|s| (Factor::Spin(s), 2)));
    for (factor, size) in factors {
        match locals.iter().find(|(f, _)| *f == factor) {
            Some((_, m)) => {
                debug_assert_eq!(m.nrows(), size);
                out = flush(out, &mut pending_identity);
                out = out.kronecker(*m);
            }
            None => pending_identity *= size,
        }
    }
    flush(out, &mut pending_identity)
}

/// Operator acting on the whole mode register (dimension `mode_dim`) and
/// trivially on every spin.
pub fn on_modes(config: &HilbertConfig, mode_op: &CMatrix) -> CMatrix {
    mode_op.kronecker(&CMatrix::identity(config.spin_dim(), config.spin_dim()))
}

/// Assembles `sum_ab blocks[a][b] (x) |a><b|_spin` with the mode-register
/// blocks given in `(e, g)` order.
pub fn spin_block(config: &HilbertConfig, spin: usize, blocks: [[&CMatrix; 2]; 2]) -> CMatrix {
    let d = config.dim();
    let mut out = CMatrix::zeros(d, d);
    let before = 1usize << spin;
    let after = 1usize << (config.n_spins - spin - 1);
    for (a, row) in blocks.iter().enumerate() {
        for (b, block) in row.iter().enumerate() {
            let spin_part = CMatrix::identity(before, before)
                .kronecker(&local::spin_unit(a, b))
                .kronecker(&CMatrix::identity(after, after));
            out += block.kronecker(&spin_part);
        }
    }
    out
}

/// Product over modes of local operators on the mode register.
pub fn mode_product(config: &HilbertConfig, per_mode: &[CMatrix]) -> CMatrix {
    debug_assert_eq!(per_mode.len(), config.n_modes);
    per_mode
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// `prod_p D_p(alpha_p)` on the mode register.
pub fn multimode_displacement(config: &HilbertConfig, alphas: &[C64]) -> CMatrix {
    let locals: Vec<CMatrix> = alphas
        .iter()
        .map(|&a| local::displacement(config.n_max, a))
        .collect();
    mode_product(config, &locals)
}

/// Single-mode operator `local` on mode `mode` of the register (no spin part).
pub fn mode_register_op(config: &HilbertConfig, mode: usize, local_op: &CMatrix) -> CMatrix {
    let locals: Vec<CMatrix> = (0..config.n_modes)
        .map(|m| {
            if m == mode {
                local_op.clone()
            } else {
                CMatrix::identity(config.n_max, config.n_max)
            }
        })
        .collect();
    mode_product(config, &locals)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
    Number,
}

pub fn ladder(config: &HilbertConfig, mode: usize, kind: Ladder) -> Result<OperatorMatrix> {
    config.check_mode(mode)?;
    let (local, structure) = match kind {
        Ladder::Annihilate => (local::annihilation(config.n_max), Structure::General),
        Ladder::Create => (local::creation(config.n_max), Structure::General),
        Ladder::Number => (local::number(config.n_max), Structure::Hermitian),
    };
    Ok(OperatorMatrix::from_parts(
        *config,
        embed(config, &[(Factor::Mode(mode), &local)]),
        structure,
    ))
}

pub fn displacement(config: &HilbertConfig, mode: usize, alpha: C64) -> Result<OperatorMatrix> {
    config.check_mode(mode)?;
    let local = local::displacement(config.n_max, alpha);
    Ok(OperatorMatrix::from_parts(
        *config,
        embed(config, &[(Factor::Mode(mode), &local)]),
        Structure::Unitary,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinOp {
    Plus,
    Minus,
    Z,
    X,
}

pub fn spin_op(config: &HilbertConfig, spin: usize, kind: SpinOp) -> Result<OperatorMatrix> {
    config.check_spin(spin)?;
    let (local, structure) = match kind {
        SpinOp::Plus => (local::sigma_plus(), Structure::General),
        SpinOp::Minus => (local::sigma_minus(), Structure::General),
        SpinOp::Z => (local::sigma_z(), Structure::Hermitian),
        SpinOp::X => (local::sigma_x(), Structure::Hermitian),
    };
    Ok(OperatorMatrix::from_parts(
        *config,
        embed(config, &[(Factor::Spin(spin), &local)]),
        structure,
    ))
}

/// `exp(-i H t)`; rejects `H` that is not Hermitian to [`HERMITIAN_TOL`].
pub fn expm_unitary(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let deviation = h.hermiticity_error();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    if t == 0.0 {
        return Ok(OperatorMatrix::identity(h.config));
    }
    Ok(OperatorMatrix::from_parts(
        h.config,
        expm_hermitian(&h.matrix, t),
        Structure::Unitary,
    ))
}

fn check_pair(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<()> {
    if a.config != b.config || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

fn guarded_block(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Spectral norm of `P (A - B) P`, with `P` the guard projector of the
/// operands' config.
pub fn guarded_distance(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<f64> {
    check_pair(a, b)?;
    let idx = a.config.guarded_indices();
    let diff = &a.matrix - &b.matrix;
    Ok(spectral_norm(&guarded_block(&diff, &idx)))
}

/// `1 - |tr(P A^dag B P)| / tr(P)`; insensitive to a global phase.
pub fn guarded_infidelity(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<f64> {
    check_pair(a, b)?;
    let idx = a.config.guarded_indices();
    // tr(P A^dag B P) = sum_{i in P} sum_k conj(A_ki) B_ki
    let mut acc = C64::from(0.0);
    for &i in &idx {
        acc += a.matrix.column(i).dotc(&b.matrix.column(i));
    }
    Ok((1.0 - acc.norm() / idx.len() as f64).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n_modes: usize, n_max: usize, n_spins: usize, guard: usize) -> HilbertConfig {
        HilbertConfig::new(n_modes, n_max, n_spins, guard).unwrap()
    }

    fn ket(config: &HilbertConfig, occ: &[usize], spins: &[Spin]) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(config.dim());
        v[config.index_of(&BasisState { occupations: occ.to_vec(), spins: spins.to_vec() })] = C64::from(1.0);
        v
    }

    #[test]
    fn config_rejects_bad_guard() {
        assert!(HilbertConfig::new(1, 5, 1, 5).is_err());
        assert!(HilbertConfig::new(0, 5, 1, 0).is_err());
        assert_eq!(cfg(2, 3, 2, 0).dim(), 36);
    }

    #[test]
    fn index_round_trip() {
        let c = cfg(2, 4, 2, 1);
        for i in 0..c.dim() {
            assert_eq!(c.index_of(&c.state_at(i)), i);
        }
        // excited precedes ground, last mode fastest among modes
        let s = c.state_at(1);
        assert_eq!(s.occupations, vec![0, 0]);
        assert_eq!(s.spins, vec![Spin::Excited, Spin::Ground]);
        assert_eq!(c.state_at(4).occupations, vec![0, 1]);
    }

    #[test]
    fn annihilation_lowers() {
        let c = cfg(1, 3, 0, 0);
        let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
        let out = a.apply(&ket(&c, &[1], &[]));
        assert!((out - ket(&c, &[0], &[])).norm() < 1e-15);
        let n = ladder(&c, 0, Ladder::Number).unwrap();
        let two = ket(&c, &[2], &[]);
        assert!((n.apply(&two) - &two * C64::from(2.0)).norm() < 1e-15);
    }

    #[test]
    fn creation_truncates_top_level() {
        let c = cfg(1, 4, 0, 0);
        let ad = ladder(&c, 0, Ladder::Create).unwrap();
        assert!(ad.apply(&ket(&c, &[3], &[])).norm() == 0.0);
        let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
        assert_eq!(ad.max_abs_diff(&a.dagger()), 0.0);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let c = cfg(1, 6, 0, 0);
        let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
        let comm = a.commutator(&a.dagger());
        for n in 0..5 {
            for m in 0..5 {
                let expected = if n == m { 1.0 } else { 0.0 };
                assert!((comm.matrix()[(n, m)] - C64::from(expected)).norm() < 1e-14);
            }
        }
        // the single violated entry sits at the top level
        assert!((comm.matrix()[(5, 5)] - C64::from(-5.0)).norm() < 1e-14);
    }

    #[test]
    fn ladder_mode_out_of_range() {
        let c = cfg(2, 3, 1, 0);
        assert!(matches!(
            ladder(&c, 2, Ladder::Number),
            Err(Error::ModeOutOfRange { index: 2, count: 2 })
        ));
        assert!(spin_op(&c, 1, SpinOp::Z).is_err());
    }

    #[test]
    fn displacement_zero_is_identity() {
        let c = cfg(1, 8, 1, 0);
        let d = displacement(&c, 0, C64::from(0.0)).unwrap();
        assert_eq!(d.max_abs_diff(&OperatorMatrix::identity(c)), 0.0);
    }

    #[test]
    fn displacement_vacuum_overlap() {
        // series oracle: |<0|D(alpha)|0>|^2 = e^{-|alpha|^2}, and the phase is zero
        let c = cfg(1, 30, 0, 0);
        let alpha = C64::from(0.3);
        let d = displacement(&c, 0, alpha).unwrap();
        let series: f64 = (0..30)
            .map(|n| alpha.norm_sqr().powi(n) / (1..=n).map(|k| k as f64).product::<f64>())
            .sum();
        let expected = 1.0 / series.sqrt();
        assert!((d.matrix()[(0, 0)].re - expected).abs() < 1e-14);
        assert!((d.matrix()[(0, 0)].re - 0.955_997_481_833_100_3).abs() < 1e-12);
        assert!(d.unitarity_error() <= 1e-12);
    }

    #[test]
    fn displacement_shifts_annihilator_on_guarded_subspace() {
        let alpha = C64::from(0.3);
        let shift_error = |guard: usize| {
            let c = cfg(1, 30, 0, guard);
            let d = displacement(&c, 0, alpha).unwrap();
            let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
            let lhs = &(&d * &a) * &d.dagger();
            let rhs = &a - &OperatorMatrix::identity(c).scale(alpha);
            guarded_distance(&lhs, &rhs).unwrap()
        };
        // truncation error at guard 8 is ~1.65e-7; it falls below 1e-8 from guard 10
        assert!(shift_error(8) <= 2e-7);
        assert!(shift_error(10) <= 1e-8);
        assert!(shift_error(12) <= 1e-13);
    }

    #[test]
    fn pauli_algebra() {
        let c = cfg(1, 2, 1, 0);
        let p = spin_op(&c, 0, SpinOp::Plus).unwrap();
        let m = spin_op(&c, 0, SpinOp::Minus).unwrap();
        let z = spin_op(&c, 0, SpinOp::Z).unwrap();
        let anti = &(&p * &m) + &(&m * &p);
        assert_eq!(anti.max_abs_diff(&OperatorMatrix::identity(c)), 0.0);
        let g = ket(&c, &[1], &[Spin::Ground]);
        assert!((z.apply(&g) + &g).norm() == 0.0);
        assert_eq!(z.commutator(&p).max_abs_diff(&p.scale(C64::from(2.0))), 0.0);
    }

    #[test]
    fn expm_diagonal_case() {
        let c = cfg(1, 2, 1, 0);
        let z = spin_op(&c, 0, SpinOp::Z).unwrap();
        let u = expm_unitary(&z, std::f64::consts::FRAC_PI_2).unwrap();
        let e = ket(&c, &[0], &[Spin::Excited]);
        let g = ket(&c, &[0], &[Spin::Ground]);
        assert!((u.apply(&e) - &e * C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((u.apply(&g) - &g * C64::new(0.0, 1.0)).norm() < 1e-14);
        let id = expm_unitary(&z, 0.0).unwrap();
        assert_eq!(id.max_abs_diff(&OperatorMatrix::identity(c)), 0.0);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let c = cfg(1, 3, 1, 0);
        let p = spin_op(&c, 0, SpinOp::Plus).unwrap();
        assert!(matches!(expm_unitary(&p, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn operators_on_disjoint_factors_commute() {
        let c = cfg(2, 4, 2, 0);
        let a0 = ladder(&c, 0, Ladder::Annihilate).unwrap();
        let a1 = ladder(&c, 1, Ladder::Create).unwrap();
        let s0 = spin_op(&c, 0, SpinOp::Plus).unwrap();
        let s1 = spin_op(&c, 1, SpinOp::Minus).unwrap();
        for (x, y) in [(&a0, &a1), (&a0, &s0), (&s0, &s1), (&a1, &s1)] {
            assert_eq!(max_abs(x.commutator(y).matrix()), 0.0);
        }
    }

    #[test]
    fn spin_block_matches_embedding() {
        let c = cfg(2, 3, 2, 0);
        let a = mode_register_op(&c, 1, &local::annihilation(3));
        let zero = CMatrix::zeros(c.mode_dim(), c.mode_dim());
        let built = spin_block(&c, 1, [[&zero, &a], [&zero, &zero]]);
        let direct = embed(&c, &[(Factor::Mode(1), &local::annihilation(3)), (Factor::Spin(1), &local::sigma_plus())]);
        assert_eq!(max_abs(&(built - direct)), 0.0);
    }

    #[test]
    fn guarded_distance_basics() {
        let c = cfg(1, 6, 1, 0);
        let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
        assert_eq!(guarded_distance(&a, &a).unwrap(), 0.0);
        let n = ladder(&c, 0, Ladder::Number).unwrap();
        // guard = 0: plain spectral norm
        let d = guarded_distance(&n, &OperatorMatrix::zeros(c)).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn guard_hides_top_level() {
        let c = cfg(1, 6, 1, 1);
        let a = ladder(&c, 0, Ladder::Annihilate).unwrap();
        let mut projected = a.matrix().clone();
        let top = c.guarded_indices().len();
        for i in top..c.dim() {
            projected.row_mut(i).fill(C64::from(0.0));
            projected.column_mut(i).fill(C64::from(0.0));
        }
        let b = OperatorMatrix::new(c, projected).unwrap();
        assert!(a.max_abs_diff(&b) > 0.0);
        assert_eq!(guarded_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn infidelity_of_spin_flip_is_one() {
        let c = cfg(1, 4, 1, 1);
        let x = spin_op(&c, 0, SpinOp::X).unwrap();
        let id = OperatorMatrix::identity(c);
        assert!((guarded_infidelity(&id, &x).unwrap() - 1.0).abs() < 1e-15);
        let phased = x.scale(C64::from_polar(1.0, 0.7));
        assert!(guarded_infidelity(&x, &phased).unwrap() < 1e-15);
    }

    #[test]
    fn mismatched_configs_rejected() {
        let a = OperatorMatrix::identity(cfg(1, 3, 1, 0));
        let b = OperatorMatrix::identity(cfg(1, 4, 1, 0));
        assert!(matches!(guarded_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    fn random_hermitian(dim: usize, entries: &[f64]) -> CMatrix {
        let mut h = CMatrix::zeros(dim, dim);
        let mut k = 0;
        for r in 0..dim {
            for c in r..dim {
                let z = if r == c {
                    C64::from(entries[k])
                } else {
                    C64::new(entries[k], entries[k + 1])
                };
                k += 2;
                h[(r, c)] = z;
                h[(c, r)] = z.conj();
            }
        }
        h
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn expm_group_property(entries in prop::collection::vec(-1.0f64..1.0, 72), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let c = cfg(1, 4, 1, 0);
            let h = OperatorMatrix::new(c, random_hermitian(8, &entries)).unwrap();
            let u1 = expm_unitary(&h, t1).unwrap();
            let u2 = expm_unitary(&h, t2).unwrap();
            let u12 = expm_unitary(&h, t1 + t2).unwrap();
            prop_assert!((&u1 * &u2).max_abs_diff(&u12) <= 1e-12);
            prop_assert!(u1.unitarity_error() <= 1e-12);
        }

        #[test]
        fn displacement_is_unitary(re in -1.5f64..1.5, im in -1.5f64..1.5) {
            let c = cfg(1, 20, 1, 0);
            let d = displacement(&c, 0, C64::new(re, im)).unwrap();
            prop_assert!(d.unitarity_error() <= 1e-12);
        }

        #[test]
        fn guarded_distance_is_pseudometric(
            xs in prop::collection::vec(-1.0f64..1.0, 72),
            ys in prop::collection::vec(-1.0f64..1.0, 72),
            zs in prop::collection::vec(-1.0f64..1.0, 72),
        ) {
            let c = cfg(1, 4, 1, 1);
            let a = OperatorMatrix::new(c, random_hermitian(8, &xs)).unwrap();
            let b = OperatorMatrix::new(c, random_hermitian(8, &ys)).unwrap();
            let d = OperatorMatrix::new(c, random_hermitian(8, &zs)).unwrap();
            let ab = guarded_distance(&a, &b).unwrap();
            prop_assert!((ab - guarded_distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= guarded_distance(&a, &d).unwrap() + guarded_distance(&d, &b).unwrap() + 1e-12);
        }
    }
}

//! Hamiltonians of the driven ion chain in the laser rotating frame and in
//! the balanced frame reached through `T_Delta`.
//!
//! Every operator with a dropped constant carries it as `offset`: the
//! physical Hamiltonian is always `op + offset * I`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::chain::{lamb_dicke_matrix, ChainModel, LaserDrive};
use crate::error::{Error, Result};
use crate::fock::{
    local, mode_register_op, multimode_displacement, on_modes, spin_block, spin_op, CMatrix, HilbertConfig,
    OperatorMatrix, SpinOp, Structure,
};
use crate::transforms::{balanced_params, BalancedParams};

/// A driven chain restricted to a truncated Hilbert space. Spin factor `j`
/// belongs to drive `j`; frequencies are in units of `nu1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub config: HilbertConfig,
    /// Mode frequencies `nu_p`.
    pub frequencies: Vec<f64>,
    /// Transition frequency; it only enters through the frame phases.
    pub omega_ge: f64,
    pub drives: Vec<LaserDrive>,
    /// Lamb-Dicke matrix, one row per drive.
    pub lamb_dicke: DMatrix<f64>,
    /// Placeholder for the anharmonic Coulomb correction; always off.
    pub include_anharmonic: bool,
}

impl ModelSpec {
    pub fn new(chain: &ChainModel, drives: Vec<LaserDrive>, config: HilbertConfig, omega_ge: f64) -> Result<Self> {
        let lamb_dicke = lamb_dicke_matrix(chain, &drives)?;
        let frequencies = chain.frequencies.clone();
        Self::from_parts(config, frequencies, omega_ge, drives, lamb_dicke)
    }

    pub fn from_parts(
        config: HilbertConfig,
        frequencies: Vec<f64>,
        omega_ge: f64,
        drives: Vec<LaserDrive>,
        lamb_dicke: DMatrix<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if frequencies.len() != config.n_modes {
            return Err(Error::DimensionMismatch { left: config.n_modes, right: frequencies.len() });
        }
        if drives.len() != config.n_spins {
            return Err(Error::DimensionMismatch { left: config.n_spins, right: drives.len() });
        }
        if lamb_dicke.nrows() != drives.len() || lamb_dicke.ncols() != frequencies.len() {
            return Err(Error::DimensionMismatch {
                left: drives.len() * frequencies.len(),
                right: lamb_dicke.nrows() * lamb_dicke.ncols(),
            });
        }
        if frequencies.iter().any(|&nu| !(nu > 0.0 && nu.is_finite())) {
            return Err(Error::InvalidConfig("mode frequencies must be positive".into()));
        }
        if !omega_ge.is_finite() || lamb_dicke.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidConfig("non-finite model parameter".into()));
        }
        Ok(Self { config, frequencies, omega_ge, drives, lamb_dicke, include_anharmonic: false })
    }

    /// One ion, one mode at `nu = 1`, a single drive with the given detuning.
    pub fn single_ion(eta: f64, rabi: f64, detuning: f64, n_max: usize, guard: usize) -> Result<Self> {
        let config = HilbertConfig::new(1, n_max, 1, guard)?;
        let drive = LaserDrive::with_detuning(0, rabi, detuning, 0.0, 1.0);
        Self::from_parts(config, vec![1.0], 0.0, vec![drive], DMatrix::from_element(1, 1, eta))
    }

    pub fn eta_row(&self, drive: usize) -> Vec<f64> {
        self.lamb_dicke.row(drive).iter().copied().collect()
    }

    pub fn detuning(&self, drive: usize) -> f64 {
        self.drives[drive].detuning(self.omega_ge)
    }

    pub fn check_drive(&self, drive: usize) -> Result<()> {
        if drive < self.drives.len() {
            Ok(())
        } else {
            Err(Error::DriveOutOfRange { index: drive, count: self.drives.len() })
        }
    }

    /// Balanced parameters for every drive; fails on an undriven ion.
    pub fn balanced(&self) -> Result<Vec<BalancedParams>> {
        self.drives
            .iter()
            .enumerate()
            .map(|(j, d)| balanced_params(d, self.omega_ge, &self.eta_row(j)).map_err(|e| relabel(e, j)))
            .collect()
    }
}

fn relabel(e: Error, drive: usize) -> Error {
    match e {
        Error::NoDrive { .. } => Error::NoDrive { drive },
        other => other,
    }
}

/// Hermitian operator plus a scalar that completes the physical Hamiltonian.
#[derive(Clone, Debug)]
pub struct OffsetHamiltonian {
    pub op: OperatorMatrix,
    pub offset: f64,
}

impl OffsetHamiltonian {
    fn new(op: OperatorMatrix, offset: f64) -> Result<Self> {
        Ok(Self { op: op.into_hermitian()?, offset })
    }

    /// `op + offset * I`.
    pub fn full(&self) -> OperatorMatrix {
        let id = OperatorMatrix::identity(*self.op.config()).scale(C64::from(self.offset));
        &self.op + &id
    }
}

fn c(x: f64) -> C64 {
    C64::from(x)
}

fn hermitian(config: &HilbertConfig, m: CMatrix) -> OperatorMatrix {
    OperatorMatrix::from_parts(*config, m, Structure::General)
}

/// `(L + L^dag) / 2`.
fn hermitian_part(config: &HilbertConfig, m: CMatrix) -> OperatorMatrix {
    let h = (&m + m.adjoint()) * c(0.5);
    OperatorMatrix::from_parts(*config, h, Structure::Hermitian)
}

/// Energies of the basis states under `sum_p nu_p n_p + sum_j (split_j / 2) sigma_z^j`.
pub fn diagonal_energies(config: &HilbertConfig, frequencies: &[f64], splittings: &[f64]) -> DVector<f64> {
    DVector::from_fn(config.dim(), |i, _| {
        let state = config.state_at(i);
        let modes: f64 = state.occupations.iter().zip(frequencies).map(|(&n, nu)| n as f64 * nu).sum();
        let spins: f64 = state
            .spins
            .iter()
            .zip(splittings)
            .map(|(s, w)| if s.local_index() == 0 { 0.5 * w } else { -0.5 * w })
            .sum();
        modes + spins
    })
}

fn diagonal_operator(config: &HilbertConfig, energies: &DVector<f64>) -> OperatorMatrix {
    let m = CMatrix::from_diagonal(&energies.map(C64::from));
    OperatorMatrix::from_parts(*config, m, Structure::Hermitian)
}

/// `sum_p nu_p n_p` on the mode register.
fn phonon_energy_register(model: &ModelSpec) -> CMatrix {
    let cfg = &model.config;
    let mut out = CMatrix::zeros(cfg.mode_dim(), cfg.mode_dim());
    for (p, &nu) in model.frequencies.iter().enumerate() {
        out += mode_register_op(cfg, p, &local::number(cfg.n_max)) * c(nu);
    }
    out
}

/// `a_p - a_p^dag` on the mode register.
fn momentum_register(config: &HilbertConfig, p: usize) -> CMatrix {
    let local = local::annihilation(config.n_max) - local::creation(config.n_max);
    mode_register_op(config, p, &local)
}

/// `prod_p D_p(i scale eta_p)` on the mode register.
fn recoil(config: &HilbertConfig, eta: &[f64], scale: C64) -> CMatrix {
    let alphas: Vec<C64> = eta.iter().map(|&e| C64::i() * scale * e).collect();
    multimode_displacement(config, &alphas)
}

/// `sigma_+ X + sigma_- X^dag` on spin `j`.
fn flip(config: &HilbertConfig, j: usize, x: &CMatrix) -> CMatrix {
    let zero = CMatrix::zeros(x.nrows(), x.ncols());
    spin_block(config, j, [[&zero, x], [&x.adjoint(), &zero]])
}

/// Rotating-frame Hamiltonian
/// `H~ = sum_p nu_p n_p + sum_j [delta_j/2 sigma_z^j + Omega_j (sigma_-^j D_j^dag^2 + sigma_+^j D_j^2)]`
/// with `D_j^2 = prod_p D_p(i eta_jp)`.
pub fn h_tilde(model: &ModelSpec) -> Result<OffsetHamiltonian> {
    let cfg = &model.config;
    let mut m = on_modes(cfg, &phonon_energy_register(model));
    for (j, drive) in model.drives.iter().enumerate() {
        m += spin_op(cfg, j, SpinOp::Z)?.into_matrix() * c(0.5 * model.detuning(j));
        if drive.rabi != 0.0 {
            let d2 = recoil(cfg, &model.eta_row(j), c(1.0));
            m += flip(cfg, j, &d2) * c(drive.rabi);
        }
    }
    OffsetHamiltonian::new(hermitian(cfg, m), 0.0)
}

/// Named sideband of the standard rotating-wave approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sideband {
    Carrier,
    Blue(usize),
    Red(usize),
}

/// Effective interaction-picture generator of the standard RWA on drive `j`:
/// carrier `Omega sigma_x`, blue `i eta Omega (a^dag sigma_+ - a sigma_-)`,
/// red `i eta Omega (a sigma_+ - a^dag sigma_-)`.
pub fn standard_rwa_generator(model: &ModelSpec, j: usize, sideband: Sideband) -> Result<OffsetHamiltonian> {
    model.check_drive(j)?;
    let cfg = &model.config;
    let rabi = model.drives[j].rabi;
    let m = match sideband {
        Sideband::Carrier => flip(cfg, j, &CMatrix::identity(cfg.mode_dim(), cfg.mode_dim())) * c(rabi),
        Sideband::Blue(k) | Sideband::Red(k) => {
            cfg.check_mode(k)?;
            let a = mode_register_op(cfg, k, &local::annihilation(cfg.n_max));
            let raise = if matches!(sideband, Sideband::Red(_)) { a } else { a.adjoint() };
            flip(cfg, j, &(raise * C64::new(0.0, model.lamb_dicke[(j, k)] * rabi)))
        }
    };
    OffsetHamiltonian::new(hermitian(cfg, m), 0.0)
}

/// Balanced Hamiltonian split as `H_0 + H_flip + H_cross`.
#[derive(Clone, Debug)]
pub struct BreveHamiltonian {
    /// `sum_p nu_p n_p + sum_j delta_breve_j / 2 sigma_z^j`, diagonal; carries
    /// the constant dropped along the transformation chain.
    pub h0: OffsetHamiltonian,
    pub flip: OperatorMatrix,
    /// Inter-drive coupling `sum_p nu_p sum_{j<k} 2 eta_jp eta_kp / (s_j s_k) F_j F_k`,
    /// zero for a single drive.
    pub cross_drive: OperatorMatrix,
    pub params: Vec<BalancedParams>,
}

impl BreveHamiltonian {
    /// `H_0 + H_flip + H_cross` without the offset.
    pub fn total(&self) -> OperatorMatrix {
        let sum = &(&self.h0.op + &self.flip) + &self.cross_drive;
        OperatorMatrix::from_parts(*sum.config(), sum.into_matrix(), Structure::Hermitian)
    }

    pub fn offset(&self) -> f64 {
        self.h0.offset
    }
}

/// Spin-flip part on drive `j` with the mode operators already rotated:
/// `a_p -> a_p e^{-i nu_p t}`, `D_breve^2 -> D_breve_t`, `sigma_+ -> e^{i delta_breve t} sigma_+`.
/// At `t = 0` this is the literal
/// `i sum_p (eta_breve/Delta) nu_p (a - a^dag)(sigma_- D^dag^2 + sigma_+ D^2)
///  - sum_p (eta_breve^2/Delta) nu_p (sigma_- D^dag^2 - sigma_+ D^2)`.
fn flip_literal(model: &ModelSpec, j: usize, p: &BalancedParams, t: f64) -> CMatrix {
    let cfg = &model.config;
    let n = cfg.n_max;
    let rotate = |nu: f64| C64::from_polar(1.0, nu * t);
    let alphas: Vec<C64> = p
        .eta_breve
        .iter()
        .zip(&model.frequencies)
        .map(|(&e, &nu)| C64::i() * e * rotate(nu))
        .collect();
    let dt = multimode_displacement(cfg, &alphas);
    let dim = cfg.mode_dim();
    let mut up = CMatrix::zeros(dim, dim);
    let mut down = CMatrix::zeros(dim, dim);
    for (k, &nu) in model.frequencies.iter().enumerate() {
        let omega_minus = nu - p.delta_breve;
        let omega_plus = nu + p.delta_breve;
        let a = mode_register_op(cfg, k, &local::annihilation(n));
        let ad = mode_register_op(cfg, k, &local::creation(n));
        let cc = C64::i() * p.eta_breve_over_delta(k) * nu;
        let dd = p.eta_breve_sq_over_delta(k) * nu;
        up += (&a * rotate(-omega_minus) - &ad * rotate(omega_plus)) * cc
            + CMatrix::identity(dim, dim) * (rotate(p.delta_breve) * dd);
        down += (&a * rotate(-omega_plus) - &ad * rotate(omega_minus)) * cc
            - CMatrix::identity(dim, dim) * (rotate(-p.delta_breve) * dd);
    }
    let up = up * &dt;
    let down = down * dt.adjoint();
    let zero = CMatrix::zeros(dim, dim);
    spin_block(cfg, j, [[&zero, &up], [&down, &zero]])
}

fn cross_literal(model: &ModelSpec, params: &[BalancedParams], t: f64) -> CMatrix {
    let cfg = &model.config;
    let dim = cfg.dim();
    let mut out = CMatrix::zeros(dim, dim);
    if params.len() < 2 {
        return out;
    }
    let flips: Vec<CMatrix> = params
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let alphas: Vec<C64> = p
                .eta_breve
                .iter()
                .zip(&model.frequencies)
                .map(|(&e, &nu)| C64::i() * e * C64::from_polar(1.0, nu * t))
                .collect();
            let dt = multimode_displacement(cfg, &alphas) * C64::from_polar(1.0, p.delta_breve * t);
            flip(cfg, j, &dt)
        })
        .collect();
    for j in 0..params.len() {
        for k in j + 1..params.len() {
            let weight: f64 = (0..model.frequencies.len())
                .map(|q| {
                    2.0 * params[j].eta[q] * params[k].eta[q] * model.frequencies[q]
                        / (params[j].root() * params[k].root())
                })
                .sum();
            if weight != 0.0 {
                out += (&flips[j] * &flips[k]) * c(weight);
            }
        }
    }
    out
}

/// Constant separating `T_Delta H~ T_Delta^dag` from `H_breve`:
/// `sum_j sum_p eta_jp^2 nu_p / (4 + Delta_j^2)`.
pub fn breve_offset(model: &ModelSpec, params: &[BalancedParams]) -> f64 {
    params
        .iter()
        .map(|p| {
            let s2 = 4.0 + p.delta_ratio * p.delta_ratio;
            p.eta.iter().zip(&model.frequencies).map(|(e, nu)| e * e * nu / s2).sum::<f64>()
        })
        .sum()
}

/// `H_breve = T_Delta (H~ - offset) T_Delta^dag` assembled from its closed form.
///
/// The truncated literal spin-flip term is only Hermitian up to the cutoff,
/// so its Hermitian part is returned; the two agree on untruncated states.
pub fn breve_h(model: &ModelSpec) -> Result<BreveHamiltonian> {
    let cfg = &model.config;
    let params = model.balanced()?;
    let splittings: Vec<f64> = params.iter().map(|p| p.delta_breve).collect();
    let h0 = diagonal_operator(cfg, &diagonal_energies(cfg, &model.frequencies, &splittings));
    let mut literal = CMatrix::zeros(cfg.dim(), cfg.dim());
    for (j, p) in params.iter().enumerate() {
        literal += flip_literal(model, j, p, 0.0);
    }
    let flip = hermitian_part(cfg, literal);
    let cross_drive = hermitian_part(cfg, cross_literal(model, &params, 0.0));
    let offset = breve_offset(model, &params);
    Ok(BreveHamiltonian { h0: OffsetHamiltonian::new(h0, offset)?, flip, cross_drive, params })
}

/// `V_t = exp(i H_breve_0 t)`, diagonal.
pub fn breve_frame(model: &ModelSpec, params: &[BalancedParams], t: f64) -> OperatorMatrix {
    let cfg = &model.config;
    let splittings: Vec<f64> = params.iter().map(|p| p.delta_breve).collect();
    let e = diagonal_energies(cfg, &model.frequencies, &splittings);
    let m = CMatrix::from_diagonal(&e.map(|x| C64::from_polar(1.0, x * t)));
    OperatorMatrix::from_parts(*cfg, m, Structure::Unitary)
}

/// Interaction-picture coupling `JC(t) = V_t (H_flip + H_cross) V_t^dag`,
/// written out with the rotating phases `e^{-+ i omega_p^-+ t}`, `e^{-+ i delta_breve t}`
/// and the rotated dressing `prod_p exp(i eta_breve_p (e^{-i nu_p t} a_p + e^{i nu_p t} a_p^dag))`.
pub fn jc_interaction(model: &ModelSpec, t: f64) -> Result<OperatorMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidTime(format!("non-finite time {t}")));
    }
    let cfg = &model.config;
    let params = model.balanced()?;
    let mut literal = cross_literal(model, &params, t);
    for (j, p) in params.iter().enumerate() {
        literal += flip_literal(model, j, p, t);
    }
    Ok(hermitian_part(cfg, literal))
}

/// Sideband offsets `omega^-+_{j,p} = nu_p -+ delta_breve_j` for one (drive, mode) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceEntry {
    pub drive: usize,
    pub mode: usize,
    pub omega_minus: f64,
    pub omega_plus: f64,
    /// `|delta|` that puts `delta_breve_j = nu_p` at the current Rabi
    /// frequency; `None` when `nu_p < 2 Omega_j`.
    pub required_detuning: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceReport {
    pub entries: Vec<ResonanceEntry>,
    /// `(drive, mode)` with the smallest `|omega^-|`.
    pub nearest: (usize, usize),
}

/// `|delta|` solving `nu = sqrt(4 Omega^2 + delta^2)`, if any.
pub fn required_detuning(nu: f64, rabi: f64) -> Option<f64> {
    let r = nu * nu - 4.0 * rabi * rabi;
    (r >= 0.0).then(|| r.sqrt())
}

pub fn resonance_offsets(model: &ModelSpec) -> ResonanceReport {
    resonance_table(&model.frequencies, &model.drives, model.omega_ge)
}

/// Same as [`resonance_offsets`] without a truncated Hilbert space.
pub fn resonance_table(frequencies: &[f64], drives: &[LaserDrive], omega_ge: f64) -> ResonanceReport {
    let mut entries = Vec::new();
    for (j, drive) in drives.iter().enumerate() {
        let delta_breve = (2.0 * drive.rabi).hypot(drive.detuning(omega_ge));
        for (p, &nu) in frequencies.iter().enumerate() {
            entries.push(ResonanceEntry {
                drive: j,
                mode: p,
                omega_minus: nu - delta_breve,
                omega_plus: nu + delta_breve,
                required_detuning: required_detuning(nu, drive.rabi),
            });
        }
    }
    let nearest = entries
        .iter()
        .min_by(|a, b| a.omega_minus.abs().total_cmp(&b.omega_minus.abs()))
        .map(|e| (e.drive, e.mode))
        .unwrap_or((0, 0));
    ResonanceReport { entries, nearest }
}

/// Intermediate Hamiltonians along `T1`, `T2`, built directly from their
/// closed forms for one drive. Used to check each step of the chain.
pub mod intermediate {
    use super::*;

    fn sum_modes(model: &ModelSpec, f: impl Fn(usize, f64) -> CMatrix) -> CMatrix {
        let dim = model.config.mode_dim();
        model
            .frequencies
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(dim, dim), |acc, (p, &nu)| acc + f(p, nu))
    }

    fn spin(model: &ModelSpec, j: usize, kind: SpinOp) -> Result<CMatrix> {
        Ok(spin_op(&model.config, j, kind)?.into_matrix())
    }

    /// `sum_p nu_p n_p + Omega sigma_z - delta/2 sigma_x`.
    pub fn frak_h0(model: &ModelSpec, j: usize) -> Result<OperatorMatrix> {
        model.check_drive(j)?;
        let cfg = &model.config;
        let m = on_modes(cfg, &phonon_energy_register(model))
            + spin(model, j, SpinOp::Z)? * c(model.drives[j].rabi)
            - spin(model, j, SpinOp::X)? * c(0.5 * model.detuning(j));
        Ok(hermitian(cfg, m))
    }

    /// `i sum_p eta_p nu_p / 2 (a_p - a_p^dag) sigma_x`.
    pub fn frak_w(model: &ModelSpec, j: usize) -> Result<OperatorMatrix> {
        model.check_drive(j)?;
        let cfg = &model.config;
        let eta = model.eta_row(j);
        let p_sum = sum_modes(model, |p, nu| momentum_register(cfg, p) * c(0.5 * eta[p] * nu));
        let m = on_modes(cfg, &p_sum) * spin(model, j, SpinOp::X)? * C64::i();
        Ok(hermitian(cfg, m))
    }

    /// `sum_p nu_p n_p + (delta_breve/2 - i Delta/(2 s) sum_p eta_p nu_p (a_p - a_p^dag)) sigma_z`.
    pub fn hat_h0(model: &ModelSpec, j: usize) -> Result<OperatorMatrix> {
        let cfg = &model.config;
        let p = &model.balanced()?[j];
        let eta = model.eta_row(j);
        let lin = sum_modes(model, |q, nu| momentum_register(cfg, q) * c(eta[q] * nu));
        let lin = lin * C64::new(0.0, -p.delta_ratio / (2.0 * p.root()));
        let id = CMatrix::identity(cfg.mode_dim(), cfg.mode_dim());
        let m = on_modes(cfg, &phonon_energy_register(model))
            + on_modes(cfg, &(id * c(0.5 * p.delta_breve) + lin)) * spin(model, j, SpinOp::Z)?;
        Ok(hermitian(cfg, m))
    }

    /// `i/s sum_p eta_p nu_p (a_p - a_p^dag) sigma_x`.
    pub fn hat_flip(model: &ModelSpec, j: usize) -> Result<OperatorMatrix> {
        let cfg = &model.config;
        let p = &model.balanced()?[j];
        let eta = model.eta_row(j);
        let lin = sum_modes(model, |q, nu| momentum_register(cfg, q) * c(eta[q] * nu / p.root()));
        let m = on_modes(cfg, &lin) * spin(model, j, SpinOp::X)? * C64::i();
        Ok(hermitian(cfg, m))
    }

    /// `-Delta^2 / (4 (4 + Delta^2)) sum_p eta_p^2 nu_p`, the constant left by `T3` on `H_hat_0`.
    pub fn t3_constant(model: &ModelSpec, j: usize) -> Result<f64> {
        let p = &model.balanced()?[j];
        let d2 = p.delta_ratio * p.delta_ratio;
        let s: f64 = p.eta.iter().zip(&model.frequencies).map(|(e, nu)| e * e * nu).sum();
        Ok(-d2 / (4.0 * (4.0 + d2)) * s)
    }

    /// `sigma_- D^dag^2 + sigma_+ D^2` with `D^2 = prod_p D_p(i eta_p)`.
    pub fn recoil_flip(model: &ModelSpec, j: usize) -> Result<OperatorMatrix> {
        model.check_drive(j)?;
        let cfg = &model.config;
        let d2 = recoil(cfg, &model.eta_row(j), c(1.0));
        Ok(hermitian(cfg, flip(cfg, j, &d2)))
    }
}

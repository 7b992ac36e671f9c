//! Unitaries taking the rotating-frame Hamiltonian to its balanced form.
//!
//! For a drive on spin `j` with Rabi frequency `Omega` and detuning `delta`
//! the chain is `T_Delta = T3 T2 T1`:
//!
//! * `T1 = (1/sqrt2) [[D^dag, D], [-D^dag, D]]` with `D = prod_p D_p(i eta_jp / 2)`
//!   turns the displaced spin flip into `sigma_z`;
//! * `T2` rotates the spin about `y` by `theta = atan(Delta / 2)`;
//! * `T3 = diag(D({alpha_p}), D({alpha_p})^dag)` removes the spin-conditioned
//!   linear term left by `T2`.
//!
//! With several drives each ion gets its own `T_Delta_j`; the mode parts are
//! all functions of the quadratures `a_p + a_p^dag`, so the factors commute
//! and their product is the tensor product over ions.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::chain::LaserDrive;
use crate::error::{Error, Result};
use crate::fock::{multimode_displacement, spin_block, CMatrix, HilbertConfig, OperatorMatrix, Structure};

/// Derived parameters of one drive entering the balanced transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedParams {
    pub rabi: f64,
    pub detuning: f64,
    /// `Delta = delta / Omega`.
    pub delta_ratio: f64,
    /// `sqrt(4 Omega^2 + delta^2)`.
    pub delta_breve: f64,
    /// `atan(Delta / 2)`, in `[-pi/2, pi/2]`.
    pub theta: f64,
    pub eta: Vec<f64>,
    /// `Delta / sqrt(4 + Delta^2) * eta`.
    pub eta_breve: Vec<f64>,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
    /// `i Delta / (2 sqrt(4 + Delta^2)) * eta`.
    pub alpha: Vec<C64>,
}

/// `sign` with `sign(0) = +1`.
fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl BalancedParams {
    pub fn new(rabi: f64, detuning: f64, eta: &[f64]) -> Result<Self> {
        if !(rabi.is_finite() && detuning.is_finite()) {
            return Err(Error::InvalidDrive("non-finite Rabi frequency or detuning".into()));
        }
        if rabi < 0.0 {
            return Err(Error::InvalidDrive(format!("negative Rabi frequency {rabi}")));
        }
        if rabi == 0.0 {
            return Err(Error::NoDrive { drive: 0 });
        }
        let delta_ratio = detuning / rabi;
        let root = 2.0f64.hypot(delta_ratio);
        let half_ratio = delta_ratio / (2.0 * root);
        let a = 0.25 + 0.5 / root;
        let b = (0.25 - 0.5 / root).max(0.0);
        let s = sign(delta_ratio);
        Ok(Self {
            rabi,
            detuning,
            delta_ratio,
            delta_breve: (2.0 * rabi).hypot(detuning),
            theta: (delta_ratio / 2.0).atan(),
            eta: eta.to_vec(),
            eta_breve: eta.iter().map(|&e| delta_ratio / root * e).collect(),
            kappa_plus: a.sqrt() + s * b.sqrt(),
            kappa_minus: a.sqrt() - s * b.sqrt(),
            eps_plus: half_ratio + 0.5,
            eps_minus: half_ratio - 0.5,
            alpha: eta.iter().map(|&e| C64::new(0.0, half_ratio * e)).collect(),
        })
    }

    /// `sqrt(4 + Delta^2)`.
    pub fn root(&self) -> f64 {
        2.0f64.hypot(self.delta_ratio)
    }

    /// `eta_breve_p / Delta = eta_p / sqrt(4 + Delta^2)`, finite at `Delta = 0`.
    pub fn eta_breve_over_delta(&self, p: usize) -> f64 {
        self.eta[p] / self.root()
    }

    /// `eta_breve_p^2 / Delta = Delta eta_p^2 / (4 + Delta^2)`.
    pub fn eta_breve_sq_over_delta(&self, p: usize) -> f64 {
        self.delta_ratio * self.eta[p] * self.eta[p] / (4.0 + self.delta_ratio * self.delta_ratio)
    }
}

/// Balanced parameters of `drive` with its Lamb-Dicke row.
pub fn balanced_params(drive: &LaserDrive, omega_ge: f64, eta_row: &[f64]) -> Result<BalancedParams> {
    BalancedParams::new(drive.rabi, drive.detuning(omega_ge), eta_row).map_err(|e| match e {
        Error::NoDrive { .. } => Error::NoDrive { drive: drive.ion },
        other => other,
    })
}

/// `R_t = prod_j exp(i/2 (omega_L^j t + phi^j) sigma_z^j)`, one drive per spin factor.
pub fn rotation_frame(config: &HilbertConfig, drives: &[LaserDrive], t: f64) -> Result<OperatorMatrix> {
    if drives.len() != config.n_spins {
        return Err(Error::DimensionMismatch { left: config.n_spins, right: drives.len() });
    }
    let spin_dim = config.spin_dim();
    let phases: Vec<C64> = (0..spin_dim)
        .map(|s| {
            let angle: f64 = drives
                .iter()
                .enumerate()
                .map(|(j, d)| {
                    let bit = (s >> (config.n_spins - 1 - j)) & 1;
                    let z = if bit == 0 { 1.0 } else { -1.0 };
                    0.5 * (d.omega_l * t + d.phase) * z
                })
                .sum();
            C64::from_polar(1.0, angle)
        })
        .collect();
    let diag = nalgebra::DVector::from_fn(config.dim(), |i, _| phases[i % spin_dim]);
    Ok(OperatorMatrix::from_parts(*config, CMatrix::from_diagonal(&diag), Structure::Unitary))
}

fn imaginary_displacement(config: &HilbertConfig, eta: &[f64], scale: f64) -> CMatrix {
    let alphas: Vec<C64> = eta.iter().map(|&e| C64::new(0.0, scale * e)).collect();
    multimode_displacement(config, &alphas)
}

fn check_row(config: &HilbertConfig, spin: usize, eta: &[f64]) -> Result<()> {
    config.check_spin(spin)?;
    if eta.len() != config.n_modes {
        return Err(Error::DimensionMismatch { left: config.n_modes, right: eta.len() });
    }
    Ok(())
}

/// `T1 = (1/sqrt2) [[D^dag, D], [-D^dag, D]]`, `D = prod_p D_p(i eta_p / 2)`.
pub fn build_t1(config: &HilbertConfig, spin: usize, eta: &[f64]) -> Result<OperatorMatrix> {
    check_row(config, spin, eta)?;
    let d = imaginary_displacement(config, eta, 0.5) * C64::from(FRAC_1_SQRT_2);
    let dd = d.adjoint();
    let neg_dd = -&dd;
    let m = spin_block(config, spin, [[&dd, &d], [&neg_dd, &d]]);
    Ok(OperatorMatrix::from_parts(*config, m, Structure::Unitary))
}

/// Spin rotation by `theta` about the y axis.
pub fn build_t2(config: &HilbertConfig, spin: usize, theta: f64) -> Result<OperatorMatrix> {
    config.check_spin(spin)?;
    let n = config.mode_dim();
    let id = CMatrix::identity(n, n);
    let (s, c) = (0.5 * theta).sin_cos();
    let cos_b = &id * C64::from(c);
    let sin_b = &id * C64::from(s);
    let neg_sin = -&sin_b;
    let m = spin_block(config, spin, [[&cos_b, &neg_sin], [&sin_b, &cos_b]]);
    Ok(OperatorMatrix::from_parts(*config, m, Structure::Unitary))
}

/// `T3 = diag(D({alpha_p}), D({alpha_p})^dag)`.
pub fn build_t3(config: &HilbertConfig, spin: usize, alpha: &[C64]) -> Result<OperatorMatrix> {
    config.check_spin(spin)?;
    if alpha.len() != config.n_modes {
        return Err(Error::DimensionMismatch { left: config.n_modes, right: alpha.len() });
    }
    let d = multimode_displacement(config, alpha);
    let dd = d.adjoint();
    let zero = CMatrix::zeros(d.nrows(), d.ncols());
    let m = spin_block(config, spin, [[&d, &zero], [&zero, &dd]]);
    Ok(OperatorMatrix::from_parts(*config, m, Structure::Unitary))
}

/// `T_Delta` as the product `T3 T2 T1` for each drive, drives multiplied in
/// spin order.
pub fn build_t_delta(config: &HilbertConfig, params: &[BalancedParams]) -> Result<OperatorMatrix> {
    if params.len() != config.n_spins {
        return Err(Error::DimensionMismatch { left: config.n_spins, right: params.len() });
    }
    let mut out = OperatorMatrix::identity(*config);
    for (spin, p) in params.iter().enumerate() {
        let t1 = build_t1(config, spin, &p.eta)?;
        let t2 = build_t2(config, spin, p.theta)?;
        let t3 = build_t3(config, spin, &p.alpha)?;
        let single = &(&t3 * &t2) * &t1;
        out = &single * &out;
    }
    Ok(out)
}

/// Closed block form
/// `[[k+ D(i e- eta), k- D(i e+ eta)], [-k- D(i e+ eta)^dag, k+ D(i e- eta)^dag]]`
/// of `T_Delta`, one factor per drive.
pub fn build_t_delta_closed(config: &HilbertConfig, params: &[BalancedParams]) -> Result<OperatorMatrix> {
    if params.len() != config.n_spins {
        return Err(Error::DimensionMismatch { left: config.n_spins, right: params.len() });
    }
    let mut out = OperatorMatrix::identity(*config);
    for (spin, p) in params.iter().enumerate() {
        check_row(config, spin, &p.eta)?;
        let d_minus = imaginary_displacement(config, &p.eta, p.eps_minus);
        let d_plus = imaginary_displacement(config, &p.eta, p.eps_plus);
        let ee = &d_minus * C64::from(p.kappa_plus);
        let eg = &d_plus * C64::from(p.kappa_minus);
        let ge = d_plus.adjoint() * C64::from(-p.kappa_minus);
        let gg = d_minus.adjoint() * C64::from(p.kappa_plus);
        let m = spin_block(config, spin, [[&ee, &eg], [&ge, &gg]]);
        let single = OperatorMatrix::from_parts(*config, m, Structure::Unitary);
        out = &single * &out;
    }
    Ok(out)
}

//! Linear Coulomb crystal of N equal ions in a harmonic axial trap.
//!
//! Positions are in the dimensionless unit `l = (e^2 / 4 pi eps0 mu nu1^2)^(1/3)`
//! and frequencies in units of the axial trap frequency `nu1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_IONS: usize = 10;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-12;

/// Equilibrium equations `u_m - sum_{n<m} (u_m-u_n)^-2 + sum_{n>m} (u_m-u_n)^-2`.
fn equilibrium_residual(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |m, _| {
        let mut r = u[m];
        for k in 0..n {
            if k < m {
                r -= (u[m] - u[k]).powi(-2);
            } else if k > m {
                r += (u[m] - u[k]).powi(-2);
            }
        }
        r
    })
}

/// Hessian of the dimensionless trap + Coulomb potential; also the Jacobian
/// of [`equilibrium_residual`].
pub fn coulomb_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |m, k| {
        if m == k {
            1.0 + 2.0
                * (0..n)
                    .filter(|&p| p != m)
                    .map(|p| (u[m] - u[p]).abs().powi(-3))
                    .sum::<f64>()
        } else {
            -2.0 * (u[m] - u[k]).abs().powi(-3)
        }
    })
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Sorted equilibrium coordinates, found by damped Newton iteration.
pub fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("the chain needs at least one ion".into()));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    // seed: uniform spacing at the approximate minimum separation 2.018 N^-0.559
    let spacing = 2.018 / (n as f64).powf(0.559);
    let centre = (n as f64 - 1.0) / 2.0;
    let mut u = DVector::from_fn(n, |m, _| (m as f64 - centre) * spacing);
    let mut residual = equilibrium_residual(&u);
    let mut iterations = 0;
    while max_norm(&residual) > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::EquilibriumNotConverged {
                iterations,
                residual: max_norm(&residual),
            });
        }
        iterations += 1;
        let jac = coulomb_hessian(u.as_slice());
        let step = jac
            .lu()
            .solve(&residual)
            .ok_or(Error::EquilibriumNotConverged { iterations, residual: max_norm(&residual) })?;
        let current = residual.norm();
        let mut damping = 1.0;
        loop {
            let trial = &u - &step * damping;
            let ordered = trial.as_slice().windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let r = equilibrium_residual(&trial);
                if r.norm() < current || damping < 1e-6 {
                    u = trial;
                    residual = r;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::EquilibriumNotConverged { iterations, residual: max_norm(&residual) });
            }
        }
    }
    // enforce reflection symmetry exactly
    let sym: Vec<f64> = (0..n).map(|m| 0.5 * (u[m] - u[n - 1 - m])).collect();
    Ok(sym)
}

/// Orthonormal eigenvectors `s` (columns) and mode frequencies `nu_p / nu1`,
/// sorted ascending.
///
/// Each column is signed so that its component sum is positive; when the sum
/// vanishes (antisymmetric modes) the last non-negligible component is made
/// positive, which aligns the breathing mode with the equilibrium positions.
pub fn normal_modes(positions: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
    let n = positions.len();
    let eig = coulomb_hessian(positions).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut freqs = Vec::with_capacity(n);
    for (p, &k) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(k).into_owned();
        let sum: f64 = col.iter().sum();
        let flip = if sum.abs() > 1e-10 {
            sum < 0.0
        } else {
            col.iter().rev().find(|x| x.abs() > 1e-10).is_some_and(|&x| x < 0.0)
        };
        if flip {
            col.neg_mut();
        }
        vectors.set_column(p, &col);
        freqs.push(eig.eigenvalues[k].sqrt());
    }
    (vectors, freqs)
}

/// Geometry and normal modes of an N-ion chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    pub ions: usize,
    /// Ion mass in units with hbar = 1, consistent with `nu1`.
    pub mass: f64,
    /// Axial trap frequency (angular).
    pub nu1: f64,
    pub positions: Vec<f64>,
    /// Orthonormal eigenvectors `s_jp` of the Hessian, one mode per column.
    pub eigenvectors: DMatrix<f64>,
    /// Dimensionless mode matrix `M_jp = s_jp sqrt(nu1 / nu_p)`.
    pub mode_matrix: DMatrix<f64>,
    /// Mode frequencies in units of `nu1`, ascending.
    pub frequencies: Vec<f64>,
}

impl ChainModel {
    pub fn new(ions: usize, mass: f64, nu1: f64) -> Result<Self> {
        if ions == 0 || ions > MAX_IONS {
            return Err(Error::Config(format!(
                "N exceeds supported range: {ions} ions requested, 1..={MAX_IONS} supported"
            )));
        }
        if !(mass > 0.0 && nu1 > 0.0) {
            return Err(Error::Config("mass and trap frequency must be positive".into()));
        }
        let positions = equilibrium_positions(ions)?;
        let (eigenvectors, frequencies) = normal_modes(&positions);
        let mode_matrix = DMatrix::from_fn(ions, ions, |j, p| eigenvectors[(j, p)] / frequencies[p].sqrt());
        Ok(Self { ions, mass, nu1, positions, eigenvectors, mode_matrix, frequencies })
    }

    /// Chain in natural units where `k_L / sqrt(2 mu nu1)` equals the
    /// wavevector passed to each drive.
    pub fn dimensionless(ions: usize) -> Result<Self> {
        Self::new(ions, 0.5, 1.0)
    }

    /// `1 / sqrt(2 mu nu1)`, the zero-point length scale of the first mode.
    pub fn zero_point_scale(&self) -> f64 {
        (2.0 * self.mass * self.nu1).sqrt().recip()
    }
}

/// A laser beam addressing one ion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserDrive {
    /// Index of the addressed ion (zero-based).
    pub ion: usize,
    /// Rabi frequency, in units of `nu1`.
    pub rabi: f64,
    /// Laser frequency, in units of `nu1`.
    pub omega_l: f64,
    /// Angle between the trap axis and the wavevector.
    pub beam_angle: f64,
    /// Wavevector magnitude, in inverse units of the chain length scale.
    pub wavevector: f64,
    /// Initial phase of the beam.
    pub phase: f64,
}

impl LaserDrive {
    /// Drive on `ion` specified by its detuning `delta = omega_ge - omega_l`.
    pub fn with_detuning(ion: usize, rabi: f64, detuning: f64, omega_ge: f64, wavevector: f64) -> Self {
        Self {
            ion,
            rabi,
            omega_l: omega_ge - detuning,
            beam_angle: 0.0,
            wavevector,
            phase: 0.0,
        }
    }

    pub fn detuning(&self, omega_ge: f64) -> f64 {
        omega_ge - self.omega_l
    }

    pub fn validate(&self, ions: usize) -> Result<()> {
        if self.ion >= ions {
            return Err(Error::InvalidDrive(format!(
                "drive addresses ion {} but the chain has {ions}",
                self.ion
            )));
        }
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return Err(Error::InvalidDrive(format!("Rabi frequency must be >= 0, got {}", self.rabi)));
        }
        if !(self.wavevector > 0.0 && self.wavevector.is_finite()) {
            return Err(Error::InvalidDrive(format!("wavevector must be > 0, got {}", self.wavevector)));
        }
        if !(self.omega_l.is_finite() && self.beam_angle.is_finite() && self.phase.is_finite()) {
            return Err(Error::InvalidDrive("non-finite laser parameter".into()));
        }
        Ok(())
    }
}

/// Lamb-Dicke matrix, one row per drive:
/// `eta_jp = k_L cos(phi) / sqrt(2 mu nu1) * M_jp` for the addressed ion `j`.
pub fn lamb_dicke_matrix(chain: &ChainModel, drives: &[LaserDrive]) -> Result<DMatrix<f64>> {
    let mut eta = DMatrix::zeros(drives.len(), chain.ions);
    for (row, drive) in drives.iter().enumerate() {
        drive.validate(chain.ions)?;
        let prefactor = drive.wavevector * drive.beam_angle.cos() * chain.zero_point_scale();
        for p in 0..chain.ions {
            eta[(row, p)] = prefactor * chain.mode_matrix[(drive.ion, p)];
        }
    }
    Ok(eta)
}

//! Evolution operators in the Schrödinger frame.
//!
//! All propagators map states at `t0` to states at `t`. The exact oracle is
//! `R_t^dag exp(-i (t - t0) H~) R_t0`; the balanced pipeline rewrites the
//! middle factor as `T_Delta^dag e^{-i c (t - t0)} V_t^dag U(JC; t, t0) V_t0 T_Delta`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    expm_unitary, guarded_infidelity, local, mode_register_op, spin_block, CMatrix, HilbertConfig, OperatorMatrix,
    Structure,
};
use crate::hamiltonians::{breve_frame, breve_h, diagonal_energies, h_tilde, ModelSpec};
use crate::transforms::{build_t_delta, rotation_frame};

fn check_times(t: f64, t0: f64) -> Result<()> {
    if !(t.is_finite() && t0.is_finite()) {
        return Err(Error::InvalidTime(format!("non-finite time (t = {t}, t0 = {t0})")));
    }
    if t < t0 {
        return Err(Error::InvalidTime(format!("t = {t} precedes t0 = {t0}")));
    }
    Ok(())
}

fn diagonal_phase(config: &HilbertConfig, energies: &DVector<f64>, t: f64) -> OperatorMatrix {
    let m = CMatrix::from_diagonal(&energies.map(|e| C64::from_polar(1.0, -e * t)));
    OperatorMatrix::from_parts(*config, m, Structure::Unitary)
}

/// `R_t^dag M R_t0`.
fn to_lab(model: &ModelSpec, middle: &OperatorMatrix, t: f64, t0: f64) -> Result<OperatorMatrix> {
    let rt = rotation_frame(&model.config, &model.drives, t)?;
    let rt0 = rotation_frame(&model.config, &model.drives, t0)?;
    Ok(&(&rt.dagger() * middle) * &rt0)
}

/// Oracle: `R_t^dag exp(-i (t - t0) H~) R_t0` by eigendecomposition.
pub fn exact_propagator(model: &ModelSpec, t: f64, t0: f64) -> Result<OperatorMatrix> {
    check_times(t, t0)?;
    let h = h_tilde(model)?;
    let middle = expm_unitary(&h.op, t - t0)?;
    to_lab(model, &middle, t, t0)
}

/// How the balanced-frame evolution is computed.
#[derive(Clone, Debug, PartialEq)]
pub enum PipelineMode {
    /// Exponentiate the full balanced Hamiltonian.
    Exact,
    /// Closed-form Jaynes-Cummings factors for the listed `(drive, mode)` pairs.
    Rwa(Vec<(usize, usize)>),
    /// No resonant pair: the interaction-picture coupling is dropped altogether.
    NonResonant,
}

pub fn pipeline_propagator(model: &ModelSpec, t: f64, t0: f64, mode: &PipelineMode) -> Result<OperatorMatrix> {
    check_times(t, t0)?;
    let cfg = &model.config;
    let b = breve_h(model)?;
    let tau = t - t0;
    let balanced = match mode {
        PipelineMode::Exact => expm_unitary(&b.total(), tau)?,
        PipelineMode::Rwa(_) | PipelineMode::NonResonant => {
            let jc = match mode {
                PipelineMode::Rwa(pairs) => rwa_jc_propagator(model, pairs, t, t0)?,
                _ => OperatorMatrix::identity(*cfg),
            };
            let vt = breve_frame(model, &b.params, t);
            let vt0 = breve_frame(model, &b.params, t0);
            &(&vt.dagger() * &jc) * &vt0
        }
    };
    let balanced = balanced.scale(C64::from_polar(1.0, -b.offset() * tau));
    let td = build_t_delta(cfg, &b.params)?;
    let middle = &(&td.dagger() * &balanced) * &td;
    to_lab(model, &middle, t, t0)
}

/// Generator `i g (a_k sigma_+^j - a_k^dag sigma_-^j)`, so that
/// `exp(-i tau H) = exp(g tau (a sigma_+ - a^dag sigma_-))`.
pub fn jc_generator(config: &HilbertConfig, spin: usize, mode: usize, coupling: f64) -> Result<OperatorMatrix> {
    config.check_spin(spin)?;
    config.check_mode(mode)?;
    let a = mode_register_op(config, mode, &local::annihilation(config.n_max)) * C64::new(0.0, coupling);
    let zero = CMatrix::zeros(a.nrows(), a.ncols());
    let m = spin_block(config, spin, [[&zero, &a], [&a.adjoint(), &zero]]);
    Ok(OperatorMatrix::from_parts(*config, m, Structure::Hermitian))
}

/// `exp(g tau (a sigma_+ - a^dag sigma_-))` in closed form:
/// `[[cos(g tau sqrt(a a^dag)), sin(g tau sqrt(a a^dag)) / sqrt(a a^dag) a],
///   [-sin(g tau sqrt(a^dag a)) / sqrt(a^dag a) a^dag, cos(g tau sqrt(a^dag a))]]`.
///
/// On the truncated mode `a a^dag = diag(1, ..., n_max - 1, 0)`, which keeps
/// the result equal to the exponential of the truncated generator.
pub fn jc_closed_form(config: &HilbertConfig, spin: usize, mode: usize, coupling: f64, tau: f64) -> Result<OperatorMatrix> {
    config.check_spin(spin)?;
    config.check_mode(mode)?;
    let n = config.n_max;
    let phi = coupling * tau;
    let cos = |x: f64| (phi * x.sqrt()).cos();
    // sin(phi sqrt x) / sqrt x, continuous at x = 0
    let sinc = |x: f64| if x == 0.0 { phi } else { (phi * x.sqrt()).sin() / x.sqrt() };
    let aad = |m: usize| if m + 1 < n { (m + 1) as f64 } else { 0.0 };
    let ada = |m: usize| m as f64;
    let diag = |f: &dyn Fn(usize) -> f64| CMatrix::from_diagonal(&DVector::from_fn(n, |m, _| C64::from(f(m))));
    let a = local::annihilation(n);
    let ee = diag(&|m| cos(aad(m)));
    let eg = diag(&|m| sinc(aad(m))) * &a;
    let ge = -(diag(&|m| sinc(ada(m))) * a.adjoint());
    let gg = diag(&|m| cos(ada(m)));
    let lift = |x: &CMatrix| mode_register_op(config, mode, x);
    let m = spin_block(config, spin, [[&lift(&ee), &lift(&eg)], [&lift(&ge), &lift(&gg)]]);
    Ok(OperatorMatrix::from_parts(*config, m, Structure::Unitary))
}

fn check_pairs(model: &ModelSpec, pairs: &[(usize, usize)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::MissingResonance);
    }
    for (i, &(j, k)) in pairs.iter().enumerate() {
        model.check_drive(j)?;
        model.config.check_mode(k)?;
        for &(j2, k2) in &pairs[..i] {
            if j == j2 || k == k2 {
                return Err(Error::OverlappingResonances { first: (j2, k2), second: (j, k) });
            }
        }
    }
    Ok(())
}

/// Product of commuting single-pair factors; pairs must not share a drive or a mode.
fn jc_product(model: &ModelSpec, pairs: &[(usize, usize)], couplings: &[f64], tau: f64) -> Result<OperatorMatrix> {
    let mut out = OperatorMatrix::identity(model.config);
    for (&(j, k), &g) in pairs.iter().zip(couplings) {
        out = &jc_closed_form(&model.config, j, k, g, tau)? * &out;
    }
    Ok(out)
}

/// Coupling `eta_breve_jk nu_k / Delta_j = eta_jk nu_k / sqrt(4 + Delta_j^2)` of the balanced RWA.
pub fn balanced_coupling(model: &ModelSpec, j: usize, k: usize) -> Result<f64> {
    model.check_drive(j)?;
    model.config.check_mode(k)?;
    let p = &model.balanced()?[j];
    Ok(p.eta_breve_over_delta(k) * model.frequencies[k])
}

/// Coupling `eta_jk Omega_j` of the standard red-sideband RWA.
pub fn standard_coupling(model: &ModelSpec, j: usize, k: usize) -> Result<f64> {
    model.check_drive(j)?;
    model.config.check_mode(k)?;
    Ok(model.lamb_dicke[(j, k)] * model.drives[j].rabi)
}

/// `U(JC; t, t0)` in the balanced interaction picture, one closed-form factor per pair.
pub fn rwa_jc_propagator(model: &ModelSpec, pairs: &[(usize, usize)], t: f64, t0: f64) -> Result<OperatorMatrix> {
    check_times(t, t0)?;
    check_pairs(model, pairs)?;
    let couplings = pairs
        .iter()
        .map(|&(j, k)| balanced_coupling(model, j, k))
        .collect::<Result<Vec<_>>>()?;
    jc_product(model, pairs, &couplings, t - t0)
}

/// Standard red-sideband RWA mapped back to the Schrödinger frame:
/// `R_t^dag e^{-i H_ref t} U_I(t - t0) e^{i H_ref t0} R_t0` with
/// `H_ref = sum_p nu_p n_p + sum_j delta_j / 2 sigma_z^j`.
pub fn standard_rwa_propagator(model: &ModelSpec, pairs: &[(usize, usize)], t: f64, t0: f64) -> Result<OperatorMatrix> {
    check_times(t, t0)?;
    check_pairs(model, pairs)?;
    let couplings = pairs
        .iter()
        .map(|&(j, k)| standard_coupling(model, j, k))
        .collect::<Result<Vec<_>>>()?;
    let interaction = jc_product(model, pairs, &couplings, t - t0)?;
    let cfg = &model.config;
    let detunings: Vec<f64> = (0..model.drives.len()).map(|j| model.detuning(j)).collect();
    let e = diagonal_energies(cfg, &model.frequencies, &detunings);
    let middle = &(&diagonal_phase(cfg, &e, t) * &interaction) * &diagonal_phase(cfg, &e, -t0);
    to_lab(model, &middle, t, t0)
}

/// Laser switched on at `t = 0`, free evolution before:
/// `U(H; t, 0) exp(i H_0 t0)` with `H_0 = sum_p nu_p n_p + omega_ge / 2 sum_j sigma_z^j`.
pub fn turn_on_propagator(model: &ModelSpec, t: f64, t0: f64) -> Result<OperatorMatrix> {
    if t0.is_nan() || t0 >= 0.0 {
        return Err(Error::InvalidTime(format!(
            "turn-on needs t0 < 0 (got {t0}); use exact_propagator otherwise"
        )));
    }
    let driven = exact_propagator(model, t, 0.0)?;
    let cfg = &model.config;
    let splittings = vec![model.omega_ge; model.drives.len()];
    let e = diagonal_energies(cfg, &model.frequencies, &splittings);
    Ok(&driven * &diagonal_phase(cfg, &e, -t0))
}

/// `1 - |tr(P U^dag V P)| / tr(P)` over the guarded subspace.
pub fn propagator_infidelity(u: &OperatorMatrix, v: &OperatorMatrix) -> Result<f64> {
    guarded_infidelity(u, v)
}

/// Time of a full `|g, 1> -> |e, 0>` transfer at coupling `g`.
pub fn pi_time(coupling: f64) -> Result<f64> {
    if coupling == 0.0 || !coupling.is_finite() {
        return Err(Error::InvalidDrive(format!("no pi pulse at coupling {coupling}")));
    }
    Ok(std::f64::consts::PI / (2.0 * coupling.abs()))
}

/// Propagator flavours selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    PipelineExact,
    PipelineRwa,
    StandardRwa,
    /// `U(JC; t, t0)` alone, in the balanced interaction picture.
    JcRwa,
}

#[derive(Clone, Debug)]
pub struct PropagatorRequest {
    pub model: ModelSpec,
    pub t0: f64,
    pub t: f64,
    pub method: Method,
    /// `(drive, mode)` pairs, required by the RWA methods.
    pub resonant_pairs: Vec<(usize, usize)>,
}

impl PropagatorRequest {
    pub fn run(&self) -> Result<OperatorMatrix> {
        let (m, t, t0) = (&self.model, self.t, self.t0);
        match self.method {
            Method::Exact => exact_propagator(m, t, t0),
            Method::PipelineExact => pipeline_propagator(m, t, t0, &PipelineMode::Exact),
            Method::PipelineRwa => pipeline_propagator(m, t, t0, &PipelineMode::Rwa(self.resonant_pairs.clone())),
            Method::StandardRwa => standard_rwa_propagator(m, &self.resonant_pairs, t, t0),
            Method::JcRwa => rwa_jc_propagator(m, &self.resonant_pairs, t, t0),
        }
    }
}

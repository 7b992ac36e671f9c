//! The four experiments exposed by the command line.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::chain::lamb_dicke_matrix;
use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, ModeState, SpinState};
use crate::experiments::output::{Cell, Table};
use crate::fock::{HilbertConfig, Spin};
use crate::hamiltonians::{required_detuning, resonance_table, ModelSpec};
use crate::propagators::{
    balanced_coupling, exact_propagator, pi_time, pipeline_propagator, propagator_infidelity, standard_coupling,
    standard_rwa_propagator, PipelineMode, PropagatorRequest,
};

/// Population above the guard band tolerated in a coherent initial state.
pub const COHERENT_TAIL_TOL: f64 = 1e-6;
/// Allowed drift of the state norm under evolution.
pub const NORM_TOL: f64 = 1e-10;

/// Mode frequencies, normal-mode matrix and Lamb-Dicke rows.
pub fn cmd_modes(cfg: &ExperimentConfig) -> Result<Table> {
    let chain = cfg.chain_model()?;
    let drives = cfg.laser_drives();
    let eta = lamb_dicke_matrix(&chain, &drives)?;
    let n = chain.ions;
    let mut columns = vec!["mode".to_string(), "frequency".to_string()];
    columns.extend((1..=n).map(|j| format!("M_ion{j}")));
    columns.extend((1..=drives.len()).map(|d| format!("eta_drive{d}")));
    let mut table = Table::new("modes", columns);
    for p in 0..n {
        let mut row: Vec<Cell> = vec![(p + 1).into(), chain.frequencies[p].into()];
        row.extend((0..n).map(|j| Cell::from(chain.mode_matrix[(j, p)])));
        row.extend((0..drives.len()).map(|d| Cell::from(eta[(d, p)])));
        table.push(row);
    }
    Ok(table)
}

/// Sideband offsets for every (drive, mode) pair and the detuning that
/// reaches the field-corrected resonance.
pub fn cmd_resonance(cfg: &ExperimentConfig) -> Result<Table> {
    if cfg.drives.is_empty() {
        return Err(Error::Config("drives: at least one drive is required".into()));
    }
    let chain = cfg.chain_model()?;
    let drives = cfg.laser_drives();
    let omega_ge = cfg.omega_ge_nu1();
    let report = resonance_table(&chain.frequencies, &drives, omega_ge);
    let columns = [
        "drive", "ion", "mode", "frequency", "rabi", "detuning", "delta_breve", "omega_minus", "omega_plus",
        "required_detuning", "nearest",
    ];
    let mut table = Table::new("resonance", columns.iter().map(|s| s.to_string()).collect());
    for e in &report.entries {
        let d = &drives[e.drive];
        let detuning = d.detuning(omega_ge);
        table.push(vec![
            (e.drive + 1).into(),
            (d.ion + 1).into(),
            (e.mode + 1).into(),
            chain.frequencies[e.mode].into(),
            d.rabi.into(),
            detuning.into(),
            (2.0 * d.rabi).hypot(detuning).into(),
            e.omega_minus.into(),
            e.omega_plus.into(),
            e.required_detuning.map_or(Cell::from("unreachable"), Cell::from),
            Cell::from(if (e.drive, e.mode) == report.nearest { "yes" } else { "no" }),
        ]);
    }
    Ok(table)
}

/// One grid point of the Rabi sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub rabi: f64,
    /// Detuning used for the balanced RWA; zero when unreachable.
    pub detuning: f64,
    pub delta_breve: f64,
    pub eta_breve: f64,
    pub pi_time: f64,
    pub infidelity_pipeline: f64,
    pub standard_pi_time: f64,
    pub infidelity_standard: f64,
    /// `|nu_k - delta_breve|`.
    pub residual: f64,
    /// `nu_k < 2 Omega`: no detuning puts `delta_breve` on the mode.
    pub unreachable: bool,
}

/// Compares both rotating-wave approximations with the exact propagator at
/// their own resonance and pi-pulse time.
///
/// The balanced RWA sits on `delta_breve = nu_k`. When that is out of reach
/// the drive is put on the carrier (`delta = 0`, smallest `|omega^-|`) and
/// the interaction-picture coupling is dropped. The standard RWA sits on
/// `delta = nu_k`.
pub fn sweep_point(base: &ModelSpec, j: usize, k: usize, rabi: f64) -> Result<SweepPoint> {
    base.check_drive(j)?;
    base.config.check_mode(k)?;
    let nu = base.frequencies[k];
    let omega_ge = base.omega_ge;

    let mut model = base.clone();
    model.drives[j].rabi = rabi;
    let (detuning, mode, unreachable) = match required_detuning(nu, rabi) {
        Some(d) => (d, PipelineMode::Rwa(vec![(j, k)]), false),
        None => (0.0, PipelineMode::NonResonant, true),
    };
    model.drives[j].omega_l = omega_ge - detuning;
    let params = model.balanced()?.swap_remove(j);
    let tau = pi_time(balanced_coupling(&model, j, k)?)?;
    let exact = exact_propagator(&model, tau, 0.0)?;
    let pipeline = pipeline_propagator(&model, tau, 0.0, &mode)?;
    let infidelity_pipeline = propagator_infidelity(&exact, &pipeline)?;

    let mut standard = base.clone();
    standard.drives[j].rabi = rabi;
    standard.drives[j].omega_l = omega_ge - nu;
    let tau_s = pi_time(standard_coupling(&standard, j, k)?)?;
    let exact_s = exact_propagator(&standard, tau_s, 0.0)?;
    let rwa_s = standard_rwa_propagator(&standard, &[(j, k)], tau_s, 0.0)?;
    let infidelity_standard = propagator_infidelity(&exact_s, &rwa_s)?;

    for (name, x) in [("balanced", infidelity_pipeline), ("standard", infidelity_standard)] {
        if !(0.0..=1.0 + 1e-12).contains(&x) {
            return Err(Error::Validation(format!("{name} infidelity {x} at rabi {rabi}")));
        }
    }
    Ok(SweepPoint {
        rabi,
        detuning,
        delta_breve: params.delta_breve,
        eta_breve: params.eta_breve[k],
        pi_time: tau,
        infidelity_pipeline,
        standard_pi_time: tau_s,
        infidelity_standard,
        residual: (nu - params.delta_breve).abs(),
        unreachable,
    })
}

pub fn sweep_rabi(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let grid = sweep.values()?;
    let base = cfg.model()?;
    let (j, k) = (sweep.drive - 1, sweep.mode - 1);
    grid.par_iter().map(|&rabi| sweep_point(&base, j, k, rabi)).collect()
}

pub fn cmd_sweep_rabi(cfg: &ExperimentConfig) -> Result<Table> {
    let points = sweep_rabi(cfg)?;
    let columns = [
        "rabi", "detuning", "delta_breve", "eta_breve", "pi_time", "infidelity_pipeline_rwa", "standard_pi_time",
        "infidelity_standard_rwa", "omega_minus_residual", "resonance",
    ];
    let mut table = Table::new("sweep-rabi", columns.iter().map(|s| s.to_string()).collect());
    for p in points {
        table.push(vec![
            p.rabi.into(),
            p.detuning.into(),
            p.delta_breve.into(),
            p.eta_breve.into(),
            p.pi_time.into(),
            p.infidelity_pipeline.into(),
            p.standard_pi_time.into(),
            p.infidelity_standard.into(),
            p.residual.into(),
            Cell::from(if p.unreachable { "unreachable" } else { "corrected" }),
        ]);
    }
    Ok(table)
}

/// Normalised truncated coherent state; rejects amplitudes whose population
/// beyond the guard band exceeds [`COHERENT_TAIL_TOL`].
pub fn coherent_state(n_max: usize, guard: usize, alpha: C64) -> Result<DVector<C64>> {
    let mut v = DVector::zeros(n_max);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..n_max {
        v[n] = c;
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    let kept: f64 = v.iter().take(n_max - guard).map(|z| z.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    if tail > COHERENT_TAIL_TOL {
        return Err(Error::Config(format!(
            "initial_state: coherent amplitude |alpha| = {} leaves {tail:.3e} population above the guard band",
            alpha.norm()
        )));
    }
    let norm = v.norm();
    Ok(v / C64::from(norm))
}

pub fn initial_state(config: &HilbertConfig, modes: &[ModeState], spins: &[SpinState]) -> Result<DVector<C64>> {
    let mut psi = DVector::from_element(1, C64::from(1.0));
    for m in modes {
        let v = match *m {
            ModeState::Fock(n) => {
                if n >= config.n_max {
                    return Err(Error::Config(format!("initial_state: Fock state {n} exceeds n_max")));
                }
                let mut v = DVector::zeros(config.n_max);
                v[n] = C64::from(1.0);
                v
            }
            ModeState::Coherent([re, im]) => coherent_state(config.n_max, config.guard, C64::new(re, im))?,
        };
        psi = psi.kronecker(&v);
    }
    for s in spins {
        let v = match s {
            SpinState::Excited => DVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]),
            SpinState::Ground => DVector::from_vec(vec![C64::from(0.0), C64::from(1.0)]),
        };
        psi = psi.kronecker(&v);
    }
    Ok(psi)
}

pub fn cmd_evolve(cfg: &ExperimentConfig) -> Result<Table> {
    let evo = cfg
        .evolution
        .clone()
        .ok_or_else(|| Error::Config("evolution: section required".into()))?;
    let init = cfg
        .initial_state
        .clone()
        .ok_or_else(|| Error::Config("initial_state: section required".into()))?;
    let model = cfg.model()?;
    let config = model.config;
    let psi0 = initial_state(&config, &init.modes, &init.spins)?;
    let times = evo.times.values()?;
    let pairs: Vec<(usize, usize)> = evo.resonances.iter().map(|&(j, k)| (j - 1, k - 1)).collect();
    let states: Vec<_> = (0..config.dim()).map(|i| config.state_at(i)).collect();

    let rows: Vec<Vec<Cell>> = times
        .par_iter()
        .map(|&t| {
            let request = PropagatorRequest {
                model: model.clone(),
                t0: evo.t0,
                t,
                method: evo.method,
                resonant_pairs: pairs.clone(),
            };
            let psi = request.run()?.apply(&psi0);
            let norm = psi.norm();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Validation(format!("state norm drifted to {norm} at t = {t}")));
            }
            let probs: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
            let mut row: Vec<Cell> = vec![t.into()];
            for j in 0..config.n_spins {
                let pe: f64 = states
                    .iter()
                    .zip(&probs)
                    .filter(|(s, _)| s.spins[j] == Spin::Excited)
                    .map(|(_, p)| p)
                    .sum();
                row.push(pe.into());
            }
            for p in 0..config.n_modes {
                let n: f64 = states.iter().zip(&probs).map(|(s, w)| s.occupations[p] as f64 * w).sum();
                row.push(n.into());
            }
            row.push(psi0.dotc(&psi).norm_sqr().into());
            row.push(norm.into());
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut columns = vec!["t".to_string()];
    columns.extend(model.drives.iter().map(|d| format!("excited_ion{}", d.ion + 1)));
    columns.extend((1..=config.n_modes).map(|p| format!("phonons_mode{p}")));
    columns.push("overlap".into());
    columns.push("norm".into());
    let mut table = Table::new("evolve", columns);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

/// Subcommand names accepted by [`run`].
pub const COMMANDS: [&str; 4] = ["modes", "resonance", "sweep-rabi", "evolve"];

pub fn run(command: &str, cfg: &ExperimentConfig) -> Result<Table> {
    if let Some(name) = &cfg.experiment {
        if name != command {
            return Err(Error::Config(format!(
                "experiment: config is for `{name}` but `{command}` was requested"
            )));
        }
    }
    match command {
        "modes" => cmd_modes(cfg),
        "resonance" => cmd_resonance(cfg),
        "sweep-rabi" => cmd_sweep_rabi(cfg),
        "evolve" => cmd_evolve(cfg),
        other => Err(Error::Config(format!("unknown experiment `{other}`"))),
    }
}

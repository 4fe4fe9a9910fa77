//! Time evolution and steady states of a [`LindbladModel`].
//!
//! The master equation is integrated on the column-stacked density matrix,
//! vec(ρ̇) = L vec(ρ), with a sparse superoperator and an embedded
//! Dormand-Prince 5(4) pair by default. The trace is monitored and never
//! renormalized; a guard violation aborts the run.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::LindbladModel;
use crate::space::SpaceSpec;
use crate::sparse::CsrMatrix;
use crate::states::{partial_trace_boson, DensityMatrix, StateVector};

/// Integration method for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Adaptive embedded Runge-Kutta 5(4) (default).
    AdaptiveRk45,
    /// Classic fixed-step RK4 with step `max_step`.
    FixedRk4,
    /// Dense propagator exp(L Δt) between samples; cross-check tool for
    /// small dimensions.
    SuperopExp,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step, in 1/J; also the fixed RK4 step.
    pub max_step: f64,
    /// Abort threshold on |tr ρ − 1|.
    pub trace_guard: f64,
    /// Top-boson-level population above this flags the run as
    /// truncation-limited; with `strict_truncation` it aborts instead.
    pub truncation_tol: f64,
    pub strict_truncation: bool,
    /// Stop once the fidelity drifts less than `tol` over a trailing window
    /// of `window` time units; remaining samples repeat the plateau value.
    pub early_stop: Option<EarlyStop>,
    /// Cap on the superoperator dimension d².
    pub superop_dim_cap: usize,
    /// Largest d² for which the steady-state solver runs an SVD null-space
    /// probe to count stationary directions.
    pub null_probe_cap: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EarlyStop {
    pub window: f64,
    pub tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk45,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
            trace_guard: 1e-6,
            truncation_tol: 1e-4,
            strict_truncation: false,
            early_stop: None,
            superop_dim_cap: 1 << 16,
            null_probe_cap: 4096,
        }
    }
}

impl IntegratorConfig {
    /// Looser tolerances and plateau detection for bulk parameter sweeps.
    pub fn sweep() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-11,
            early_stop: Some(EarlyStop { window: 50.0, tol: 1e-8 }),
            ..IntegratorConfig::default()
        }
    }
}

/// Sparse superoperator on the squared-dimension space.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub mat: CsrMatrix,
}

impl Superoperator {
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.mat.matvec(x, y);
    }
}

/// Column-stacking superoperator of the full Liouvillian: commutator part
/// plus standard-form dissipators.
pub fn liouvillian_superoperator(model: &LindbladModel) -> Result<Superoperator> {
    liouvillian_superoperator_capped(model, usize::MAX)
}

pub fn liouvillian_superoperator_capped(
    model: &LindbladModel,
    cap: usize,
) -> Result<Superoperator> {
    let d = model.dim();
    let d2 = d * d;
    if d2 > cap {
        return Err(Error::DimensionCap { dim: d2, cap });
    }
    let id = CsrMatrix::identity(d);
    let h = &model.h.mat;
    // -i (1 ⊗ H - Hᵀ ⊗ 1)
    let mut l = id
        .kron(h)
        .sub(&h.transpose().kron(&id))
        .scale(C64::new(0.0, -1.0));
    for (rate, jump) in &model.jumps {
        if *rate == 0.0 {
            continue;
        }
        let lm = &jump.mat;
        let ldl = lm.adjoint().matmul(lm);
        let sandwich = lm.conj().kron(lm);
        let left = id.kron(&ldl);
        let right = ldl.transpose().kron(&id);
        let term = sandwich.sub(&left.add(&right).scale(C64::new(0.5, 0.0)));
        l = l.add(&term.scale(C64::new(*rate, 0.0)));
    }
    Ok(Superoperator { dim: d2, mat: l })
}

/// Time grid, observable series, and diagnostics of one integration run.
#[derive(Debug, Clone)]
pub struct SimTrajectory {
    pub times: Vec<f64>,
    pub fidelity: Option<Vec<f64>>,
    pub boson_occupation: Option<Vec<f64>>,
    pub top_level_population: Option<Vec<f64>>,
    pub trace_error: Vec<f64>,
    pub snapshots: Option<Vec<DensityMatrix>>,
    /// Set when plateau detection ended the integration before the last
    /// sample; later samples repeat the plateau values.
    pub early_stop_time: Option<f64>,
    pub truncation_flagged: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl SimTrajectory {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity.as_ref().and_then(|f| f.last().copied())
    }

    pub fn max_trace_error(&self) -> f64 {
        self.trace_error.iter().cloned().fold(0.0, f64::max)
    }

    pub fn fidelity_at(&self, t: f64) -> Option<f64> {
        let f = self.fidelity.as_ref()?;
        self.times
            .iter()
            .position(|&tk| (tk - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|k| f[k])
    }
}

/// What to record during [`evolve`].
#[derive(Debug, Clone, Default)]
pub struct Probes {
    pub target: Option<StateVector>,
    pub store_snapshots: bool,
}

struct ObservableContext {
    space: SpaceSpec,
    /// target amplitudes lifted/kept to the spin basis of the model space
    target: Option<DVector<C64>>,
    number_diag: Option<Vec<f64>>,
    top_diag: Option<Vec<f64>>,
}

impl ObservableContext {
    fn new(space: &SpaceSpec, probes: &Probes) -> Result<Self> {
        let target = match &probes.target {
            None => None,
            Some(t) => {
                let spin = space.spin_only();
                let t = if t.space == spin {
                    t.clone()
                } else if t.space.sector.is_some() && t.space.spin_only().sectored(t.space.sector.unwrap())? == t.space && spin.sector.is_none() && t.space.n_spins == spin.n_spins {
                    t.lift_to_full()?
                } else {
                    return Err(Error::DimensionMismatch(
                        "target state does not live in the model's spin factor".into(),
                    ));
                };
                Some(t.vec)
            }
        };
        let (number_diag, top_diag) = if space.has_boson() {
            let d = space.dim();
            let b = space.boson_dim();
            let mut nd = vec![0.0; d];
            let mut td = vec![0.0; d];
            for i in 0..d {
                let (_, k) = space.split_index(i);
                nd[i] = k as f64;
                if k == b - 1 {
                    td[i] = 1.0;
                }
            }
            (Some(nd), Some(td))
        } else {
            (None, None)
        };
        Ok(ObservableContext { space: space.clone(), target, number_diag, top_diag })
    }

    fn trace(&self, y: &[C64]) -> f64 {
        let d = self.space.dim();
        (0..d).map(|k| y[k * d + k].re).sum()
    }

    /// ⟨ψ| Tr_b(ρ) |ψ⟩ straight from the stacked state.
    fn fidelity(&self, y: &[C64]) -> Option<f64> {
        let t = self.target.as_ref()?;
        let d = self.space.dim();
        let b = self.space.boson_dim();
        let sd = self.space.spin_dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..sd {
            for j in 0..sd {
                let mut red = C64::new(0.0, 0.0);
                for k in 0..b {
                    // vec index of ρ[(i,k),(j,k)] = col*d + row
                    red += y[(j * b + k) * d + (i * b + k)];
                }
                acc += t[i].conj() * red * t[j];
            }
        }
        Some(acc.norm())
    }

    fn diag_expectation(&self, y: &[C64], w: &[f64]) -> f64 {
        let d = self.space.dim();
        (0..d).map(|k| w[k] * y[k * d + k].re).sum()
    }
}

struct Recorder {
    ctx: ObservableContext,
    cfg: IntegratorConfig,
    times: Vec<f64>,
    fidelity: Vec<f64>,
    occupation: Vec<f64>,
    top: Vec<f64>,
    trace_error: Vec<f64>,
    snapshots: Vec<DensityMatrix>,
    store_snapshots: bool,
    truncation_flagged: bool,
}

impl Recorder {
    fn record(&mut self, t: f64, y: &[C64]) -> Result<()> {
        let tr_err = (self.ctx.trace(y) - 1.0).abs();
        if tr_err > self.cfg.trace_guard {
            return Err(Error::TraceGuard { t, err: tr_err, guard: self.cfg.trace_guard });
        }
        self.times.push(t);
        self.trace_error.push(tr_err);
        if let Some(f) = self.ctx.fidelity(y) {
            self.fidelity.push(f);
        }
        if let Some(nd) = &self.ctx.number_diag {
            self.occupation.push(self.ctx.diag_expectation(y, nd));
        }
        if let Some(td) = &self.ctx.top_diag {
            let pop = self.ctx.diag_expectation(y, td);
            self.top.push(pop);
            if pop > self.cfg.truncation_tol {
                if self.cfg.strict_truncation {
                    return Err(Error::TruncationTrip { t, pop, tol: self.cfg.truncation_tol });
                }
                self.truncation_flagged = true;
            }
        }
        if self.store_snapshots {
            let d = self.ctx.space.dim();
            let mat = DMatrix::from_column_slice(d, d, y);
            self.snapshots.push(DensityMatrix::unchecked(self.ctx.space.clone(), mat)?);
        }
        Ok(())
    }

    fn repeat_last(&mut self, t: f64) {
        self.times.push(t);
        self.trace_error.push(*self.trace_error.last().unwrap());
        if let Some(&f) = self.fidelity.last() {
            self.fidelity.push(f);
        }
        if let Some(&o) = self.occupation.last() {
            self.occupation.push(o);
        }
        if let Some(&p) = self.top.last() {
            self.top.push(p);
        }
        if self.store_snapshots {
            let s = self.snapshots.last().unwrap().clone();
            self.snapshots.push(s);
        }
    }

    fn finish(self, early_stop_time: Option<f64>, accepted: usize, rejected: usize) -> SimTrajectory {
        SimTrajectory {
            times: self.times,
            fidelity: if self.ctx.target.is_some() { Some(self.fidelity) } else { None },
            boson_occupation: if self.ctx.number_diag.is_some() { Some(self.occupation) } else { None },
            top_level_population: if self.ctx.top_diag.is_some() { Some(self.top) } else { None },
            trace_error: self.trace_error,
            snapshots: if self.store_snapshots { Some(self.snapshots) } else { None },
            early_stop_time,
            truncation_flagged: self.truncation_flagged,
            accepted_steps: accepted,
            rejected_steps: rejected,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate the master equation and sample on `times` (strictly
/// increasing; `times[0]` is the initial time).
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    times: &[f64],
    cfg: &IntegratorConfig,
    probes: &Probes,
) -> Result<SimTrajectory> {
    if rho0.space != model.space {
        return Err(Error::DimensionMismatch("initial state space differs from model space".into()));
    }
    if times.is_empty() {
        return Err(Error::InvalidParam("empty sample grid".into()));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParam("sample times must be strictly increasing".into()));
        }
    }
    let sup = liouvillian_superoperator_capped(model, cfg.superop_dim_cap)?;
    let ctx = ObservableContext::new(&model.space, probes)?;
    let mut rec = Recorder {
        ctx,
        cfg: cfg.clone(),
        times: Vec::with_capacity(times.len()),
        fidelity: Vec::with_capacity(times.len()),
        occupation: Vec::with_capacity(times.len()),
        top: Vec::with_capacity(times.len()),
        trace_error: Vec::with_capacity(times.len()),
        snapshots: Vec::new(),
        store_snapshots: probes.store_snapshots,
        truncation_flagged: false,
    };
    let mut y: Vec<C64> = rho0.mat.as_slice().to_vec();
    rec.record(times[0], &y)?;

    match cfg.method {
        Method::AdaptiveRk45 => evolve_rk45(&sup, &mut y, times, cfg, rec),
        Method::FixedRk4 => evolve_rk4(&sup, &mut y, times, cfg, rec),
        Method::SuperopExp => evolve_expm(&sup, &mut y, times, cfg, rec),
    }
}

fn evolve_rk45(
    sup: &Superoperator,
    y: &mut Vec<C64>,
    times: &[f64],
    cfg: &IntegratorConfig,
    mut rec: Recorder,
) -> Result<SimTrajectory> {
    let n = sup.dim;
    let zero = C64::new(0.0, 0.0);
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];

    let mut t = times[0];
    let mut h = cfg.max_step.min(1e-3);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut early_stop_time: Option<f64> = None;

    // plateau detector state
    let check_early = cfg.early_stop.is_some() && rec.ctx.target.is_some();
    let (es_window, es_tol) = match cfg.early_stop {
        Some(es) => (es.window, es.tol),
        None => (0.0, 0.0),
    };
    let mut win_start = t;
    let mut win_min = f64::INFINITY;
    let mut win_max = f64::NEG_INFINITY;

    sup.apply(y, &mut k[0]);

    'outer: for (si, &ts) in times.iter().enumerate().skip(1) {
        while t < ts {
            let mut hstep = h.min(cfg.max_step);
            let last = t + hstep >= ts - 1e-14 * ts.abs().max(1.0);
            if last {
                hstep = ts - t;
            }
            if hstep < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h: hstep });
            }
            // stages
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = zero;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s - 1][j];
                        if a != 0.0 {
                            acc += C64::new(a, 0.0) * kj[i];
                        }
                    }
                    ytmp[i] = y[i] + C64::new(hstep, 0.0) * acc;
                }
                if s < 6 {
                    let (head, tail) = k.split_at_mut(s);
                    let _ = head;
                    sup.apply(&ytmp, &mut tail[0]);
                } else {
                    // stage 7 is the 5th-order solution's derivative (FSAL)
                    ynew.copy_from_slice(&ytmp);
                    sup.apply(&ynew, &mut k[6]);
                }
            }
            // scaled RMS error
            let mut err2 = 0.0;
            for i in 0..n {
                let mut e = zero;
                for (j, kj) in k.iter().enumerate() {
                    if ERR[j] != 0.0 {
                        e += C64::new(ERR[j], 0.0) * kj[i];
                    }
                }
                let e = e.norm() * hstep;
                let scale = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(ynew[i].norm());
                err2 += (e / scale) * (e / scale);
            }
            let err = (err2 / n as f64).sqrt();
            if err <= 1.0 {
                t = if last { ts } else { t + hstep };
                std::mem::swap(y, &mut ynew);
                k.swap(0, 6);
                accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (hstep * grow).min(cfg.max_step);
                if check_early {
                    if let Some(f) = rec.ctx.fidelity(y) {
                        win_min = win_min.min(f);
                        win_max = win_max.max(f);
                        if t - win_start >= es_window {
                            if win_max - win_min < es_tol {
                                rec.record(t.min(ts), y)?;
                                // backfill this sample at its nominal time label
                                if (t - ts).abs() > 1e-12 {
                                    rec.times.pop();
                                    rec.times.push(ts);
                                }
                                early_stop_time = Some(t);
                                for &tr in &times[si + 1..] {
                                    rec.repeat_last(tr);
                                }
                                break 'outer;
                            }
                            win_start = t;
                            win_min = f;
                            win_max = f;
                        }
                    }
                }
            } else {
                rejected += 1;
                h = hstep * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        if early_stop_time.is_none() {
            rec.record(ts, y)?;
        }
    }
    Ok(rec.finish(early_stop_time, accepted, rejected))
}

fn evolve_rk4(
    sup: &Superoperator,
    y: &mut Vec<C64>,
    times: &[f64],
    cfg: &IntegratorConfig,
    mut rec: Recorder,
) -> Result<SimTrajectory> {
    let n = sup.dim;
    let zero = C64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut accepted = 0usize;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / cfg.max_step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            sup.apply(y, &mut k1);
            for i in 0..n {
                ytmp[i] = y[i] + C64::new(0.5 * h, 0.0) * k1[i];
            }
            sup.apply(&ytmp, &mut k2);
            for i in 0..n {
                ytmp[i] = y[i] + C64::new(0.5 * h, 0.0) * k2[i];
            }
            sup.apply(&ytmp, &mut k3);
            for i in 0..n {
                ytmp[i] = y[i] + C64::new(h, 0.0) * k3[i];
            }
            sup.apply(&ytmp, &mut k4);
            for i in 0..n {
                y[i] += C64::new(h / 6.0, 0.0)
                    * (k1[i] + C64::new(2.0, 0.0) * (k2[i] + k3[i]) + k4[i]);
            }
            accepted += 1;
        }
        rec.record(w[1], y)?;
    }
    Ok(rec.finish(None, accepted, 0))
}

fn evolve_expm(
    sup: &Superoperator,
    y: &mut Vec<C64>,
    times: &[f64],
    _cfg: &IntegratorConfig,
    mut rec: Recorder,
) -> Result<SimTrajectory> {
    let dense = sup.mat.to_dense();
    let mut cached: Option<(f64, DMatrix<C64>)> = None;
    let mut steps = 0usize;
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let prop = match &cached {
            Some((cdt, p)) if (cdt - dt).abs() <= 1e-15 * dt.abs() => p.clone(),
            _ => {
                let p = (dense.clone() * C64::new(dt, 0.0)).exp();
                cached = Some((dt, p.clone()));
                p
            }
        };
        let yv = DVector::from_column_slice(y);
        let out = &prop * yv;
        y.copy_from_slice(out.as_slice());
        steps += 1;
        rec.record(w[1], y)?;
    }
    Ok(rec.finish(None, steps, 0))
}

/// Fidelity F = |⟨Ψ| ρ_s |Ψ⟩| with the boson traced out first when present.
/// A sector-restricted target is lifted automatically when ρ lives in the
/// full spin space.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if target.space.has_boson() {
        return Err(Error::DimensionMismatch("target must live in the spin factor".into()));
    }
    let rho_s = if rho.space.has_boson() { partial_trace_boson(rho)? } else { rho.clone() };
    let t = if target.space == rho_s.space {
        target.clone()
    } else if target.space.sector.is_some()
        && rho_s.space.sector.is_none()
        && target.space.n_spins == rho_s.space.n_spins
    {
        target.lift_to_full()?
    } else {
        return Err(Error::DimensionMismatch("target space does not match the spin factor".into()));
    };
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho_s.dim() {
        for j in 0..rho_s.dim() {
            acc += t.vec[i].conj() * rho_s.mat[(i, j)] * t.vec[j];
        }
    }
    Ok(acc.norm())
}

/// Steady-state solve outcome.
#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    /// (sector label, state); the label is set for sector-resolved solves of
    /// excitation-conserving models.
    pub states: Vec<(Option<usize>, DensityMatrix)>,
    /// Number of stationary directions found (sectors, or the null-space
    /// dimension from the SVD probe when it ran).
    pub null_dim: usize,
    /// max over states of ‖L vec(ρ)‖ / ‖vec(ρ)‖.
    pub residual: f64,
}

impl SteadyStateReport {
    pub fn unique(&self) -> Result<&DensityMatrix> {
        if self.states.len() == 1 {
            Ok(&self.states[0].1)
        } else {
            Err(Error::SteadyStateFailure(format!(
                "steady state is not unique ({} stationary directions)",
                self.null_dim
            )))
        }
    }
}

/// Solve L(ρ_ss) = 0 with tr ρ_ss = 1.
///
/// Excitation-conserving models on an unsectored spin space are solved per
/// sector and reported sector-by-sector; everything else goes through a
/// dense solve of the vectorized equation with the trace row pinned.
pub fn steady_state(model: &LindbladModel, cfg: &IntegratorConfig) -> Result<SteadyStateReport> {
    if model.jumps.iter().all(|(r, _)| *r == 0.0) {
        return Err(Error::SteadyStateFailure(
            "model has no dissipation; the stationary set is degenerate".into(),
        ));
    }
    let space = &model.space;
    if space.sector.is_none() && space.n_spins > 0 && model.conserves_excitation() {
        let mut states = Vec::new();
        let mut residual = 0.0f64;
        for n_s in 0..=space.n_spins {
            let sub = model.sectored(n_s)?;
            let (rho, res) = solve_direct(&sub, cfg)?;
            // lift the sector state back to the full basis
            let bits = sub.space.sector_bits();
            let bdim = space.boson_dim();
            let mut mat = DMatrix::zeros(space.dim(), space.dim());
            for (si, &bi) in bits.iter().enumerate() {
                for (sj, &bj) in bits.iter().enumerate() {
                    for ki in 0..bdim {
                        for kj in 0..bdim {
                            mat[(space.join_index(bi as usize, ki), space.join_index(bj as usize, kj))] =
                                rho.mat[(sub.space.join_index(si, ki), sub.space.join_index(sj, kj))];
                        }
                    }
                }
            }
            states.push((Some(n_s), DensityMatrix::unchecked(space.clone(), mat)?));
            residual = residual.max(res);
        }
        let null_dim = states.len();
        return Ok(SteadyStateReport { states, null_dim, residual });
    }
    let (rho, residual) = solve_direct(model, cfg)?;
    // count stationary directions when the dimension allows it
    let null_dim = if model.dim() * model.dim() <= cfg.null_probe_cap {
        let sup = liouvillian_superoperator_capped(model, cfg.superop_dim_cap)?;
        let svd = sup.mat.to_dense().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        svd.singular_values.iter().filter(|&&s| s <= 1e-10 * smax.max(1.0)).count().max(1)
    } else {
        1
    };
    Ok(SteadyStateReport { states: vec![(None, rho)], null_dim, residual })
}

fn solve_direct(model: &LindbladModel, cfg: &IntegratorConfig) -> Result<(DensityMatrix, f64)> {
    let d = model.dim();
    let sup = liouvillian_superoperator_capped(model, cfg.superop_dim_cap)?;
    let mut a = sup.mat.to_dense();
    // pin the trace: replace the row of the (0,0) matrix element by the
    // trace functional and solve A x = e_0
    for c in 0..d * d {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        a[(0, k * d + k)] = C64::new(1.0, 0.0);
    }
    let mut b = DVector::zeros(d * d);
    b[0] = C64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SteadyStateFailure("trace-pinned system is singular".into()))?;
    // residual against the true superoperator
    let mut lx = vec![C64::new(0.0, 0.0); d * d];
    sup.apply(x.as_slice(), &mut lx);
    let res = lx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        / x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if res > 1e-8 {
        return Err(Error::SteadyStateFailure(format!(
            "steady-state residual {:.3e} (null space empty or ill-conditioned)",
            res
        )));
    }
    let mat = DMatrix::from_column_slice(d, d, x.as_slice());
    let herm = (mat.clone() + mat.adjoint()) * C64::new(0.5, 0.0);
    Ok((DensityMatrix::unchecked(model.space.clone(), herm)?, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_dsbc_model, build_initial_state, damped_oscillator, DsbcParams, InitialPattern, LindbladModel};
    use crate::operators::{boson_op, BosonOp, SparseOp};
    use crate::space::SpaceSpec;
    use crate::spinwave::spin_wave_state;
    use crate::states::StateVector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_level_damping_eigenpairs() {
        // H = 0, single jump a on 2 levels: acting on the basis
        // {|0⟩⟨0|, |1⟩⟨1| − |0⟩⟨0|, |0⟩⟨1|, |1⟩⟨0|} the superoperator has
        // eigenvalues {0, −κ_std, −κ_std/2, −κ_std/2}, i.e. {0, −2κ, −κ, −κ}
        // in the amplitude-damping units where ⟨n⟩ decays as e^{−2κt}
        let kappa = 0.37;
        let kappa_std = 2.0 * kappa;
        let space = SpaceSpec::new(0, 2);
        let a = boson_op(&space, BosonOp::Annihilate).unwrap();
        let model =
            LindbladModel::new(SparseOp::zeros(&space), vec![(kappa_std, a)]).unwrap();
        let sup = liouvillian_superoperator(&model).unwrap();
        let dense = sup.mat.to_dense();
        // vec index = col*2 + row
        let vecs: [(Vec<C64>, f64); 4] = [
            (vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 0.0),
            (vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], -kappa_std),
            (vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], -0.5 * kappa_std),
            (vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], -0.5 * kappa_std),
        ];
        for (v, lambda) in vecs {
            let x = DVector::from_vec(v);
            let lx = &dense * &x;
            let diff = (&lx - &x * c(lambda, 0.0)).norm();
            assert!(diff < 1e-14, "eigenvalue {} mismatch ({})", lambda, diff);
        }
    }

    #[test]
    fn superoperator_preserves_trace_and_hermiticity() {
        let params = DsbcParams::new(2, 0.9, 0.07, 0.05, 3).unwrap();
        let model = build_dsbc_model(&params, 0.1, None).unwrap();
        let sup = liouvillian_superoperator(&model).unwrap();
        let d = model.dim();
        // the trace functional annihilates the superoperator columns
        let mut row_sum = vec![c(0.0, 0.0); d * d];
        for (r, col, v) in sup.mat.iter() {
            // accumulate Σ_diag rows: entry contributes to trace row if r is diagonal
            let (rr, rc) = (r % d, r / d);
            if rr == rc {
                row_sum[col] += v;
            }
        }
        let max = row_sum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max < 1e-12, "trace row norm {}", max);
        // Hermiticity preservation: L(ρ†)† = L(ρ) on a random-ish matrix
        let mat = DMatrix::<C64>::from_fn(d, d, |i, j| c((i * 7 % 5) as f64 - 1.0, (j * 3 % 4) as f64 - 1.5));
        let mut x = vec![c(0.0, 0.0); d * d];
        for col in 0..d {
            for row in 0..d {
                x[col * d + row] = mat[(row, col)];
            }
        }
        let mut lx = vec![c(0.0, 0.0); d * d];
        sup.apply(&x, &mut lx);
        let mut xa = vec![c(0.0, 0.0); d * d];
        for col in 0..d {
            for row in 0..d {
                xa[col * d + row] = mat[(col, row)].conj();
            }
        }
        let mut lxa = vec![c(0.0, 0.0); d * d];
        sup.apply(&xa, &mut lxa);
        let mut max = 0.0f64;
        for col in 0..d {
            for row in 0..d {
                let lhs = lxa[row * d + col].conj();
                let rhs = lx[col * d + row];
                max = max.max((lhs - rhs).norm());
            }
        }
        assert!(max < 1e-12, "adjoint-flip violation {}", max);
    }

    #[test]
    fn damped_oscillator_decay_law() {
        // ⟨n⟩(t) = e^{−2κt} from |1⟩
        let kappa = 0.25;
        let model = damped_oscillator(4, 0.0, kappa, 0.0).unwrap();
        let psi = StateVector::basis_state(model.space.clone(), 1).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi);
        let tmax = 5.0 / kappa;
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * tmax / 100.0).collect();
        let traj = evolve(&model, &rho0, &times, &IntegratorConfig::default(), &Probes::default())
            .unwrap();
        assert!(traj.max_trace_error() < 1e-12);
        let occ = traj.boson_occupation.unwrap();
        for (t, n) in times.iter().zip(occ.iter()) {
            let expect = (-2.0 * kappa * t).exp();
            assert!(
                (n - expect).abs() <= 1e-6 * expect.max(1e-12),
                "t = {}: {} vs {}",
                t,
                n,
                expect
            );
        }
    }

    #[test]
    fn unitary_evolution_preserves_purity() {
        let params = DsbcParams::new(3, 2.0_f64.sqrt(), 0.05, 0.0, 3).unwrap();
        let h = crate::model::build_boson_hamiltonian(&params)
            .unwrap()
            .add(&crate::model::build_xy_hamiltonian(&params).unwrap())
            .unwrap()
            .add(&crate::model::build_spin_boson_coupling(&params).unwrap())
            .unwrap();
        let h = crate::operators::sector_project(&h, 1).unwrap();
        let model = LindbladModel::new(h, vec![]).unwrap();
        let rho0 = build_initial_state(&params, 1, &InitialPattern::LeftBlock, true).unwrap();
        let times = vec![0.0, 250.0, 500.0, 1000.0];
        let probes = Probes { store_snapshots: true, ..Default::default() };
        // purity drifts linearly with the local error, so the unitary check
        // runs at tight tolerance
        let cfg = IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() };
        let traj = evolve(&model, &rho0, &times, &cfg, &probes).unwrap();
        for snap in traj.snapshots.unwrap() {
            assert!((snap.purity() - 1.0).abs() < 1e-8);
            assert!(snap.hermiticity_defect() < 1e-8);
        }
    }

    #[test]
    fn rk45_agrees_with_expm_on_ten_level_model() {
        // N=5 single-excitation sector ⊗ 2 boson levels: dimension 10
        let params = DsbcParams::new(5, 1.2, 0.15, 0.3, 2).unwrap();
        let model = build_dsbc_model(&params, 0.05, Some(1)).unwrap();
        assert_eq!(model.dim(), 10);
        let rho0 = build_initial_state(&params, 1, &InitialPattern::LeftBlock, true).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 5.0).collect();
        let probes = Probes { store_snapshots: true, ..Default::default() };
        let t1 = evolve(&model, &rho0, &times, &IntegratorConfig::default(), &probes).unwrap();
        let cfg2 = IntegratorConfig { method: Method::SuperopExp, ..IntegratorConfig::default() };
        let t2 = evolve(&model, &rho0, &times, &cfg2, &probes).unwrap();
        let s1 = t1.snapshots.unwrap();
        let s2 = t2.snapshots.unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert!(a.trace_distance(b) <= 1e-6);
        }
    }

    #[test]
    fn fixed_rk4_matches_adaptive() {
        let kappa = 0.2;
        let model = damped_oscillator(3, 0.7, kappa, 0.1).unwrap();
        let psi = StateVector::basis_state(model.space.clone(), 1).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi);
        let times = vec![0.0, 2.0, 4.0, 8.0];
        let cfg4 = IntegratorConfig { method: Method::FixedRk4, max_step: 1e-3, ..Default::default() };
        let probes = Probes { store_snapshots: true, ..Default::default() };
        let a = evolve(&model, &rho0, &times, &IntegratorConfig::default(), &probes).unwrap();
        let b = evolve(&model, &rho0, &times, &cfg4, &probes).unwrap();
        for (x, y) in a.snapshots.unwrap().iter().zip(b.snapshots.unwrap().iter()) {
            assert!(x.trace_distance(y) < 1e-8);
        }
    }

    #[test]
    fn boson_steady_states() {
        let cfg = IntegratorConfig::default();
        // ζ = 0 → vacuum
        let model = damped_oscillator(5, 0.3, 0.2, 0.0).unwrap();
        let report = steady_state(&model, &cfg).unwrap();
        let rho = report.unique().unwrap();
        assert!((rho.mat[(0, 0)].re - 1.0).abs() < 1e-10);
        assert!(report.residual < 1e-10);
        // ζ = 0.2 → thermal with n̄ = 0.25
        let levels = 12;
        let model = damped_oscillator(levels, 0.3, 0.2, 0.2).unwrap();
        let report = steady_state(&model, &cfg).unwrap();
        let rho = report.unique().unwrap();
        let nbar: f64 =
            (0..levels).map(|k| k as f64 * rho.mat[(k, k)].re).sum();
        assert!((nbar - 0.25).abs() < 1e-6, "nbar = {}", nbar);
        // ζ → general: n̄ = ζ/(1−ζ)
        let model = damped_oscillator(16, 0.0, 0.15, 0.1).unwrap();
        let rho = steady_state(&model, &cfg).unwrap().states[0].1.clone();
        let nbar: f64 = (0..16).map(|k| k as f64 * rho.mat[(k, k)].re).sum();
        assert!((nbar - 0.1 / 0.9).abs() < 1e-6);
    }

    #[test]
    fn dsbc_sector_steady_state_is_lowest_spin_wave() {
        // N=2, Δ_a = Δ_1 = 2J, κ ≪ J: the steady state is |q_2⟩. The
        // residual heating leak scales as κ²/(4Δ²), so κ must sit near 1e-3
        // for the 1e-6 fidelity band.
        let params = DsbcParams::new(2, 2.0, 0.0005, 0.002, 3).unwrap();
        let model = build_dsbc_model(&params, 0.0, Some(1)).unwrap();
        let report = steady_state(&model, &IntegratorConfig::default()).unwrap();
        let rho = report.unique().unwrap();
        let target = spin_wave_state(2, 2).unwrap();
        let f = fidelity(rho, &target).unwrap();
        assert!(f >= 1.0 - 1e-6, "fidelity {}", f);
        assert!(report.residual <= 1e-10);
    }

    #[test]
    fn conserving_model_resolves_sectors() {
        let params = DsbcParams::new(2, 2.0, 0.05, 0.1, 2).unwrap();
        let model = build_dsbc_model(&params, 0.0, None).unwrap();
        let report = steady_state(&model, &IntegratorConfig::default()).unwrap();
        assert_eq!(report.null_dim, 3);
        let sectors: Vec<usize> = report.states.iter().map(|(s, _)| s.unwrap()).collect();
        assert_eq!(sectors, vec![0, 1, 2]);
        for (_, rho) in &report.states {
            assert!((rho.trace() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_basics() {
        let space = SpaceSpec::with_sector(3, 2, 1).unwrap();
        let spin = SpaceSpec::with_sector(3, 0, 1).unwrap();
        let target = StateVector::basis_state(spin.clone(), 1).unwrap();
        // ρ = |ψ⟩⟨ψ| ⊗ |0⟩⟨0| with ψ = target
        let psi = StateVector::basis_state(space.clone(), space.join_index(1, 0)).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!((fidelity(&rho, &target).unwrap() - 1.0).abs() < 1e-14);
        // maximally mixed sector state has fidelity 1/3 with any target
        let rho = DensityMatrix::maximally_mixed(spin.clone());
        let q = spin_wave_state(3, 2).unwrap();
        assert!((fidelity(&rho, &q).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // orthogonal pure state gives 0
        let other = StateVector::basis_state(spin, 0).unwrap();
        let rho = DensityMatrix::from_pure(&other);
        assert!(fidelity(&rho, &target).unwrap() < 1e-14);
    }

    #[test]
    fn trace_guard_aborts() {
        // Euler-unstable fixed step on a fast-decaying model blows up the
        // trace and must abort rather than renormalize
        let model = damped_oscillator(3, 0.0, 50.0, 0.0).unwrap();
        let psi = StateVector::basis_state(model.space.clone(), 2).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi);
        let cfg = IntegratorConfig {
            method: Method::FixedRk4,
            max_step: 0.5,
            ..IntegratorConfig::default()
        };
        let res = evolve(&model, &rho0, &[0.0, 10.0], &cfg, &Probes::default());
        assert!(matches!(res, Err(Error::TraceGuard { .. })));
    }

    #[test]
    fn excitation_conserving_sector_populations_constant() {
        let params = DsbcParams::new(3, 1.0, 0.08, 0.06, 3).unwrap();
        let model = build_dsbc_model(&params, 0.0, None).unwrap();
        let rho0 = build_initial_state(&params, 2, &InitialPattern::LeftBlock, false).unwrap();
        let times = vec![0.0, 50.0, 100.0];
        let probes = Probes { store_snapshots: true, ..Default::default() };
        let traj = evolve(&model, &rho0, &times, &IntegratorConfig::default(), &probes).unwrap();
        let space = model.space.clone();
        for snap in traj.snapshots.unwrap() {
            // population of the n_s = 2 sector stays 1
            let mut pop = 0.0;
            for (si, &bits) in space.sector_bits().iter().enumerate() {
                let _ = si;
                if bits.count_ones() as usize == space.n_spins - 2 {
                    for k in 0..space.boson_dim() {
                        let idx = space.join_index(bits as usize, k);
                        pop += snap.mat[(idx, idx)].re;
                    }
                }
            }
            assert!((pop - 1.0).abs() < 1e-10);
        }
    }
}

//! Trapped-ion realization layer: Coulomb-crystal equilibrium positions,
//! normal modes, laser-synthesized spin-spin couplings, the axial σ^z
//! state-dependent force, and assembly of the resulting damped spin-boson
//! chain model in J-normalized units.
//!
//! Lengths are measured in ℓ = (e²/4πε₀ m ω_z²)^{1/3} with the system-ion
//! mass m as reference; mixed species enter through mass-weighted
//! coordinates. The axial confinement is electrostatic, so the spring
//! constant m ω_z² is shared by all species, while the transverse
//! pseudopotential spring scales as m²/m̃.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{build_general_spin_hamiltonian, LindbladModel, SpinCouplingMatrix};
use crate::operators::{boson_local, embed, pauli_local, sector_project, BosonOp, Factor, Pauli, SparseOp};
use crate::space::SpaceSpec;
use crate::spinwave::{xy_ground_state, CouplingSign};
use crate::states::{DensityMatrix, StateVector};

/// Profile of the axial state-dependent force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    /// Cosine-modulated coupling magnitudes (phase π/2 standing wave).
    Standing,
    /// Uniform magnitudes with site-dependent complex phases.
    Traveling,
}

/// Laser and trap inputs. Frequencies share one unit (the docs use
/// 2π × MHz); only ratios enter the normalized model.
#[derive(Debug, Clone)]
pub struct IonChainConfig {
    pub n_total: usize,
    /// Chain slots (0-based, position-ordered) occupied by cooling ions.
    pub cooling_positions: Vec<usize>,
    /// System-ion mass (atomic mass units).
    pub mass: f64,
    /// Cooling-ion mass.
    pub mass_cool: f64,
    pub omega_z: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    /// Trap minimum along z, units of ℓ.
    pub trap_center: f64,

    /// Shared Raman Rabi frequency of the two transverse drives.
    pub raman_rabi: f64,
    /// Lamb-Dicke factors at the transverse centre-of-mass modes.
    pub eta_com_x: f64,
    pub eta_com_y: f64,
    /// Detuning of each Raman beat note from its branch's centre-of-mass
    /// sideband; negative values sit below the whole branch and give an
    /// antiferromagnetic coupling.
    pub raman_detuning_x: f64,
    pub raman_detuning_y: f64,
    /// Beam-balance anisotropy knob: J^y = J^x (1−a)/(1+a). Zero is the
    /// sweet spot where both axes contribute identically.
    pub anisotropy: f64,
    /// Derive J^y from the y-branch mode structure instead of mirroring the
    /// x result; the residual J^x ≠ J^y then reflects the actual branch
    /// mismatch.
    pub independent_axes: bool,

    pub wave: WaveKind,
    /// Differential ac-Stark scale Ω_Lz of the axial force.
    pub omega_rabi_z: f64,
    /// Lamb-Dicke factor at the axial centre-of-mass mode.
    pub eta_z: f64,
    /// Effective axial wavevector, units 1/ℓ.
    pub k_lz: f64,
    /// Standing-wave phase (or traveling-wave phase offset).
    pub phi_z: f64,
    /// Red detuning from the axial centre-of-mass mode; plays Δ_a.
    pub delta_1z: f64,

    /// Sympathetic cooling rate of the axial COM mode (amplitude-decay
    /// convention, like κ in the ideal chain).
    pub kappa_minus: f64,
    /// Heating-to-cooling ratio ζ = κ⁺/κ⁻.
    pub zeta: f64,
    pub boson_levels: usize,
}

impl IonChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.omega_x <= 0.0 || self.omega_y <= 0.0 || self.omega_z <= 0.0 {
            return Err(Error::InvalidParam("trap frequencies must be positive".into()));
        }
        if self.omega_x == self.omega_y {
            return Err(Error::InvalidParam(
                "omega_x and omega_y must differ to decouple the two transverse drives".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.zeta) {
            return Err(Error::InvalidParam("zeta must lie in [0, 1)".into()));
        }
        if self.mass <= 0.0 || self.mass_cool <= 0.0 {
            return Err(Error::InvalidParam("masses must be positive".into()));
        }
        let n = self.n_total;
        if self.cooling_positions.iter().any(|&p| p >= n) {
            return Err(Error::InvalidParam("cooling position outside the chain".into()));
        }
        let mut sorted = self.cooling_positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.cooling_positions.len() {
            return Err(Error::InvalidParam("duplicate cooling positions".into()));
        }
        if sorted.len() >= n {
            return Err(Error::InvalidParam("no system ions left".into()));
        }
        if self.boson_levels < 2 {
            return Err(Error::InvalidParam("boson_levels must be at least 2".into()));
        }
        Ok(())
    }

    pub fn n_system(&self) -> usize {
        self.n_total - self.cooling_positions.len()
    }

    /// Chain slots of the system ions, ascending.
    pub fn system_positions(&self) -> Vec<usize> {
        (0..self.n_total).filter(|p| !self.cooling_positions.contains(p)).collect()
    }

    /// Mass of the ion in chain slot `i`, in units of the system mass.
    fn mass_ratio(&self, slot: usize) -> f64 {
        if self.cooling_positions.contains(&slot) {
            self.mass_cool / self.mass
        } else {
            1.0
        }
    }
}

/// One phonon branch: physical frequencies and the mass-weighted
/// orthonormal mode matrix (columns are modes, rows are chain slots).
#[derive(Debug, Clone)]
pub struct ModeBranch {
    pub freqs: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Everything derived from an [`IonChainConfig`].
#[derive(Debug, Clone)]
pub struct IonChainDerived {
    /// Equilibrium positions, units of ℓ, ascending.
    pub positions: Vec<f64>,
    /// Axial branch, ascending from the COM mode.
    pub modes_z: ModeBranch,
    /// Transverse branches, descending from the COM mode.
    pub modes_x: ModeBranch,
    pub modes_y: ModeBranch,
    /// Synthesized couplings over the system ions, physical units.
    pub coupling: SpinCouplingMatrix,
    /// Mean nearest-neighbour hopping 2 J^x_{i,i+1}; the unit J of the
    /// normalized model.
    pub j_unit: f64,
    /// Axial force amplitudes F^z_{i1} per system ion (complex for the
    /// traveling wave), physical units; plays g_i.
    pub force: Vec<C64>,
    /// δ_1z, playing Δ_a.
    pub delta_a: f64,
    /// κ₁⁻, playing κ.
    pub kappa: f64,
    /// max_n,i |F^α_in| / |δ_nα| over both transverse drives.
    pub validity_ratio: f64,
    /// δ_1z relative to the axial COM gap ω_2z − ω_1z.
    pub gap_ratio: f64,
    pub warnings: Vec<String>,
}

fn coulomb_gradient(u: &[f64], center: f64, grad: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let mut g = u[i] - center;
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                g -= d.signum() / (d * d);
            }
        }
        grad[i] = g;
    }
}

fn coulomb_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let d = (u[i] - u[j]).abs();
                let c = 2.0 / (d * d * d);
                diag += c;
                h[(i, j)] = -c;
            }
        }
        h[(i, i)] = diag;
    }
    h
}

fn potential(u: &[f64], center: f64) -> f64 {
    let n = u.len();
    let mut v = 0.0;
    for i in 0..n {
        v += 0.5 * (u[i] - center).powi(2);
        for j in (i + 1)..n {
            v += 1.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

/// Stationary point of the trap-plus-Coulomb potential by damped Newton
/// iteration, positions ascending. The axial potential is electrostatic,
/// so the result is independent of the ion masses.
pub fn equilibrium_positions(config: &IonChainConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = config.n_total;
    // evenly spaced start with the known ~N^-0.56 density scaling
    let spread = 2.0 * (n as f64).powf(0.56);
    let mut u: Vec<f64> =
        (0..n).map(|i| config.trap_center + spread * (i as f64 / (n as f64 - 1.0).max(1.0) - 0.5)).collect();
    if n == 1 {
        u[0] = config.trap_center;
        return Ok(u);
    }
    let mut grad = vec![0.0; n];
    let max_iters = 200;
    for _ in 0..max_iters {
        coulomb_gradient(&u, config.trap_center, &mut grad);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= 1e-13 {
            let mut out = u.clone();
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(out);
        }
        let h = coulomb_hessian(&u);
        let rhs = nalgebra::DVector::from_column_slice(&grad);
        let step = h
            .lu()
            .solve(&rhs)
            .ok_or(Error::NewtonNonConvergence { grad: gnorm, iters: max_iters })?;
        if gnorm < 1e-6 {
            // quadratic convergence zone: the potential decrease is below
            // roundoff here, so a line search would stall
            for (x, s) in u.iter_mut().zip(step.iter()) {
                *x -= s;
            }
            continue;
        }
        // backtracking keeps the ordering and decreases the potential
        let v0 = potential(&u, config.trap_center);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - alpha * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered && potential(&trial, config.trap_center) <= v0 + 1e-12 * v0.abs() {
                u = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-8 {
                u = u.iter().zip(step.iter()).map(|(x, s)| x - 1e-8 * s).collect();
                break;
            }
        }
    }
    coulomb_gradient(&u, config.trap_center, &mut grad);
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gnorm <= 1e-12 {
        u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(u)
    } else {
        Err(Error::NewtonNonConvergence { grad: gnorm, iters: max_iters })
    }
}

/// Trap axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn tag(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// Mass-weighted normal modes of one axis. Axial modes come back ascending
/// (COM first); transverse modes descending (COM first again, since the
/// Coulomb interaction softens the other transverse modes).
pub fn normal_modes(config: &IonChainConfig, positions: &[f64], axis: Axis) -> Result<ModeBranch> {
    let n = config.n_total;
    let mut a = DMatrix::<f64>::zeros(n, n);
    match axis {
        Axis::Z => {
            for i in 0..n {
                let mut diag = 1.0;
                for j in 0..n {
                    if j != i {
                        let d = (positions[i] - positions[j]).abs();
                        let c = 2.0 / (d * d * d);
                        diag += c;
                        a[(i, j)] = -c;
                    }
                }
                a[(i, i)] = diag;
            }
        }
        Axis::X | Axis::Y => {
            let omega = if axis == Axis::X { config.omega_x } else { config.omega_y };
            for i in 0..n {
                // transverse pseudopotential spring: k̃ = (m²/m̃) ω²
                let k = (omega / config.omega_z).powi(2) / config.mass_ratio(i);
                let mut diag = k;
                for j in 0..n {
                    if j != i {
                        let d = (positions[i] - positions[j]).abs();
                        let c = 1.0 / (d * d * d);
                        diag -= c;
                        a[(i, j)] = c;
                    }
                }
                a[(i, i)] = diag;
            }
        }
    }
    // mass weighting D = M^{-1/2} A M^{-1/2}
    let inv_sqrt_m: Vec<f64> = (0..n).map(|i| 1.0 / config.mass_ratio(i).sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= inv_sqrt_m[i] * inv_sqrt_m[j];
        }
    }
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].partial_cmp(&eig.eigenvalues[q]).unwrap());
    if axis != Axis::Z {
        order.reverse();
    }
    let mut freqs = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 0.0 {
            return Err(Error::ZigzagInstability { mode: k + 1, axis: axis.tag(), lambda });
        }
        freqs.push(config.omega_z * lambda.sqrt());
        let mut col = eig.eigenvectors.column(idx).clone_owned();
        // deterministic sign: largest-magnitude entry positive
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        for r in 0..n {
            vectors[(r, k)] = col[r];
        }
    }
    Ok(ModeBranch { freqs, vectors })
}

fn transverse_couplings(
    config: &IonChainConfig,
    branch: &ModeBranch,
    axis: Axis,
) -> Result<(DMatrix<f64>, f64)> {
    let (eta_com, delta_com) = match axis {
        Axis::X => (config.eta_com_x, config.raman_detuning_x),
        Axis::Y => (config.eta_com_y, config.raman_detuning_y),
        Axis::Z => return Err(Error::InvalidParam("transverse couplings need x or y".into())),
    };
    let sys = config.system_positions();
    let ns = sys.len();
    let omega_com = branch.freqs[0];
    let mut j = DMatrix::<f64>::zeros(ns, ns);
    let mut validity = 0.0f64;
    for (n_mode, &omega_n) in branch.freqs.iter().enumerate() {
        let delta_n = delta_com + (omega_n - omega_com);
        if delta_n == 0.0 {
            return Err(Error::ResonantMode { mode: n_mode + 1, axis: axis.tag() });
        }
        let eta_n = eta_com * (omega_com / omega_n).sqrt();
        for (a, &ia) in sys.iter().enumerate() {
            let f_a = 0.5 * eta_n * config.raman_rabi * branch.vectors[(ia, n_mode)];
            validity = validity.max(f_a.abs() / delta_n.abs());
            for (b, &ib) in sys.iter().enumerate() {
                if a == b {
                    continue;
                }
                let f_b = 0.5 * eta_n * config.raman_rabi * branch.vectors[(ib, n_mode)];
                j[(a, b)] += -f_a * f_b / delta_n;
            }
        }
    }
    Ok((j, validity))
}

/// Laser-synthesized J^x, J^y over the system ions, plus the
/// force-over-detuning validity ratio (small means the second-order
/// derivation of the couplings holds).
pub fn spin_couplings(
    config: &IonChainConfig,
    modes_x: &ModeBranch,
    modes_y: &ModeBranch,
) -> Result<(SpinCouplingMatrix, f64)> {
    let (jx, val_x) = transverse_couplings(config, modes_x, Axis::X)?;
    let (jy, validity) = if config.independent_axes {
        let (jy, val_y) = transverse_couplings(config, modes_y, Axis::Y)?;
        (jy, val_x.max(val_y))
    } else {
        // sweet-spot tuning makes both axes contribute identically; the
        // anisotropy knob then scales the y couplings
        let a = config.anisotropy;
        (jx.clone() * ((1.0 - a) / (1.0 + a)), val_x)
    };
    Ok((SpinCouplingMatrix::new(jx, jy)?, validity))
}

/// Axial state-dependent force restricted to the COM mode:
/// F^z_{i1} = ½ η_1z Ω_Lz M^z_{i1} · sin(φ_z − k z_i) for the standing wave,
/// or the uniform-magnitude complex phase e^{i(k z_i + φ_z)} for the
/// traveling wave. Returns the per-system-ion amplitudes.
pub fn axial_force(
    config: &IonChainConfig,
    positions: &[f64],
    modes_z: &ModeBranch,
) -> Vec<C64> {
    let sys = config.system_positions();
    let mut out = Vec::with_capacity(sys.len());
    for &slot in &sys {
        let m_com = modes_z.vectors[(slot, 0)];
        let scale = 0.5 * config.eta_z * config.omega_rabi_z * m_com;
        let phase = config.k_lz * positions[slot];
        let f = match config.wave {
            WaveKind::Standing => C64::new(scale * (config.phi_z - phase).sin(), 0.0),
            WaveKind::Traveling => C64::from_polar(scale, phase + config.phi_z),
        };
        out.push(f);
    }
    out
}

/// Run the whole derivation pipeline.
pub fn derive(config: &IonChainConfig) -> Result<IonChainDerived> {
    config.validate()?;
    let positions = equilibrium_positions(config)?;
    let modes_z = normal_modes(config, &positions, Axis::Z)?;
    let modes_x = normal_modes(config, &positions, Axis::X)?;
    let modes_y = normal_modes(config, &positions, Axis::Y)?;
    let (coupling, validity_ratio) = spin_couplings(config, &modes_x, &modes_y)?;
    let force = axial_force(config, &positions, &modes_z);

    let sys = config.system_positions();
    let ns = sys.len();
    let mut j_nn = 0.0;
    for i in 0..ns.saturating_sub(1) {
        j_nn += 2.0 * coupling.jx[(i, i + 1)];
    }
    let j_unit = j_nn / (ns as f64 - 1.0).max(1.0);
    if j_unit <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "derived nearest-neighbour coupling is not antiferromagnetic (J = {:.3e}); \
             move the Raman detuning below the transverse branch",
            j_unit
        )));
    }

    let mut warnings = Vec::new();
    if validity_ratio > 0.1 {
        warnings.push(format!(
            "force-over-detuning ratio {:.3} approaches the perturbative limit",
            validity_ratio
        ));
    }
    let com_gap = modes_z.freqs[1] - modes_z.freqs[0];
    let gap_ratio = config.delta_1z.abs() / com_gap;
    if gap_ratio > 0.2 {
        warnings.push(format!(
            "axial detuning is {:.3} of the COM gap; neighbouring modes are no longer negligible",
            gap_ratio
        ));
    }
    Ok(IonChainDerived {
        positions,
        modes_z,
        modes_x,
        modes_y,
        coupling,
        j_unit,
        force,
        delta_a: config.delta_1z,
        kappa: config.kappa_minus,
        validity_ratio,
        gap_ratio,
        warnings,
    })
}

/// Which spin state the fidelity is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Ground state of the ideal homogeneous nearest-neighbour chain at the
    /// given filling (the default convention).
    IdealNearestNeighbour,
    /// Sector ground state of the actual synthesized coupling matrix.
    ActualCoupling,
}

/// The trapped-ion DSBC model in J-normalized units plus its derivation
/// record.
#[derive(Debug, Clone)]
pub struct IonDsbcModel {
    pub model: LindbladModel,
    pub derived: IonChainDerived,
    pub n_system: usize,
    /// Sector the model was restricted to, when isotropic.
    pub sector: Option<usize>,
}

/// Assemble the Lindblad model of the ion chain, normalized so the mean
/// nearest-neighbour hopping is 1. With `sector` set the spin space is
/// restricted to that filling, which requires isotropic couplings.
pub fn build_ion_dsbc_model(config: &IonChainConfig, sector: Option<usize>) -> Result<IonDsbcModel> {
    let derived = derive(config)?;
    let ns = config.n_system();
    let ju = derived.j_unit;

    let coupling = SpinCouplingMatrix::new(&derived.coupling.jx / ju, &derived.coupling.jy / ju)?;
    let h_spin =
        build_general_spin_hamiltonian(&coupling, &vec![0.0; ns], config.boson_levels, None)?;
    let space = SpaceSpec::new(ns, config.boson_levels);
    let h_b = crate::operators::boson_op(&space, BosonOp::Number)?.scale_re(derived.delta_a / ju);
    let mut h = h_spin.add(&h_b)?;
    for (i, f) in derived.force.iter().enumerate() {
        let g = f / C64::new(ju, 0.0);
        if g.norm() == 0.0 {
            continue;
        }
        // τ^z_i ⊗ (g b + g* b†)
        let local = boson_local(config.boson_levels, BosonOp::Annihilate)
            .scale(g)
            .add(&boson_local(config.boson_levels, BosonOp::Create).scale(g.conj()));
        let term = embed(&space, &[(Factor::Spin(i), pauli_local(Pauli::Z)), (Factor::Boson, local)])?;
        h = h.add(&term)?;
    }
    let a = crate::operators::boson_op(&space, BosonOp::Annihilate)?;
    let kappa_norm = derived.kappa / ju;
    let mut jumps = vec![(2.0 * kappa_norm, a.clone())];
    if config.zeta > 0.0 {
        jumps.push((2.0 * config.zeta * kappa_norm, a.adjoint()));
    }
    let model = LindbladModel::new(h, jumps)?;
    let model = match sector {
        Some(n_s) => {
            if config.anisotropy != 0.0 || (config.independent_axes && coupling.anisotropy_defect() > 1e-12) {
                return Err(Error::SectorViolation(
                    "anisotropic ion couplings cannot be sector-restricted".into(),
                ));
            }
            model.sectored(n_s)?
        }
        None => model,
    };
    Ok(IonDsbcModel { model, derived, n_system: ns, sector })
}

impl IonDsbcModel {
    /// Target state at filling `n_s` under the chosen convention.
    pub fn target(&self, n_s: usize, kind: TargetKind) -> Result<StateVector> {
        match kind {
            TargetKind::IdealNearestNeighbour => {
                xy_ground_state(self.n_system, n_s, CouplingSign::Antiferromagnetic, 0.0)
            }
            TargetKind::ActualCoupling => {
                let ju = self.derived.j_unit;
                let coupling = SpinCouplingMatrix::new(
                    &self.derived.coupling.jx / ju,
                    &self.derived.coupling.jy / ju,
                )?;
                let h = build_general_spin_hamiltonian(
                    &coupling,
                    &vec![0.0; self.n_system],
                    0,
                    Some(n_s),
                )?;
                let eig = h.mat.to_dense().symmetric_eigen();
                let (mut kmin, mut emin) = (0, f64::INFINITY);
                for (k, &e) in eig.eigenvalues.iter().enumerate() {
                    if e < emin {
                        emin = e;
                        kmin = k;
                    }
                }
                let amps: Vec<C64> = eig.eigenvectors.column(kmin).iter().cloned().collect();
                StateVector::from_amplitudes(h.space.clone(), amps)
            }
        }
    }

    /// Left-block product state at filling `n_s` in the model's space.
    pub fn initial_state(&self, n_s: usize) -> Result<DensityMatrix> {
        let space = self.model.space.clone();
        let bits = crate::space::bits_from_up_sites(self.n_system, &(0..n_s).collect::<Vec<_>>());
        let spin_idx = space
            .spin_index_of_bits(bits)
            .ok_or_else(|| Error::SectorViolation("initial pattern outside the model sector".into()))?;
        let psi = StateVector::basis_state(space.clone(), space.join_index(spin_idx, 0))?;
        Ok(DensityMatrix::from_pure(&psi))
    }
}

/// Least-squares fit of (k, φ) such that k z_i + φ ≈ θ_i over the system
/// ions; used to align the axial-force phases with the ideal modulation.
pub fn fit_wavevector(positions: &[f64], targets: &[f64]) -> (f64, f64) {
    let n = positions.len() as f64;
    let sx: f64 = positions.iter().sum();
    let sy: f64 = targets.iter().sum();
    let sxx: f64 = positions.iter().map(|z| z * z).sum();
    let sxy: f64 = positions.iter().zip(targets).map(|(z, t)| z * t).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return (0.0, sy / n);
    }
    let k = (n * sxy - sx * sy) / denom;
    let phi = (sy - k * sx) / n;
    (k, phi)
}

/// Power-law exponent p of |J_{ij}| ~ 1/|z_i − z_j|^p from a log-log least
/// squares over all system pairs.
pub fn dipolar_fit_exponent(coupling: &SpinCouplingMatrix, sys_positions: &[f64]) -> f64 {
    let ns = sys_positions.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..ns {
        for j in (i + 1)..ns {
            let d = (sys_positions[i] - sys_positions[j]).abs();
            let jij = coupling.jx[(i, j)].abs();
            if jij > 0.0 {
                xs.push(d.ln());
                ys.push(jij.ln());
            }
        }
    }
    let (slope, _) = fit_wavevector(&xs, &ys);
    -slope
}

/// Baseline six-ion demonstration chain: four system spins framed by two
/// cooling ions, tuned so the normalized protocol parameters land on the
/// requested (Δ_a/J, g/J, κ/J).
pub fn six_ion_demo(
    delta_a_over_j: f64,
    g_over_j: f64,
    kappa_over_j: f64,
    zeta: f64,
    wave: WaveKind,
    boson_levels: usize,
) -> Result<IonChainConfig> {
    tuned_config(
        6,
        vec![0, 5],
        1.0,
        1.0,
        delta_a_over_j,
        g_over_j,
        kappa_over_j,
        zeta,
        wave,
        boson_levels,
    )
}

/// Build a config whose axial-force and cooling settings realize the given
/// J-normalized protocol parameters on the derived crystal.
#[allow(clippy::too_many_arguments)]
pub fn tuned_config(
    n_total: usize,
    cooling_positions: Vec<usize>,
    mass: f64,
    mass_cool: f64,
    delta_a_over_j: f64,
    g_over_j: f64,
    kappa_over_j: f64,
    zeta: f64,
    wave: WaveKind,
    boson_levels: usize,
) -> Result<IonChainConfig> {
    let mut config = IonChainConfig {
        n_total,
        cooling_positions,
        mass,
        mass_cool,
        omega_z: 1.0,
        omega_x: 10.0,
        omega_y: 11.0,
        trap_center: 0.0,
        raman_rabi: 2.0,
        eta_com_x: 0.10,
        eta_com_y: 0.095,
        raman_detuning_x: -2.0,
        raman_detuning_y: -2.2,
        anisotropy: 0.0,
        independent_axes: false,
        wave,
        omega_rabi_z: 0.0,
        eta_z: 0.10,
        k_lz: 0.0,
        phi_z: 0.0,
        delta_1z: 0.0,
        kappa_minus: 0.0,
        zeta,
        boson_levels,
    };
    config.validate()?;
    let positions = equilibrium_positions(&config)?;
    let modes_z = normal_modes(&config, &positions, Axis::Z)?;
    let modes_x = normal_modes(&config, &positions, Axis::X)?;
    let modes_y = normal_modes(&config, &positions, Axis::Y)?;
    let (coupling, _) = spin_couplings(&config, &modes_x, &modes_y)?;
    let sys = config.system_positions();
    let ns = sys.len();
    let mut j_nn = 0.0;
    for i in 0..ns - 1 {
        j_nn += 2.0 * coupling.jx[(i, i + 1)];
    }
    let j_unit = j_nn / (ns as f64 - 1.0);

    // align the force phases with the ideal modulation cos(π i /(N+1)):
    // standing-wave amplitudes follow sin(φ_z − k z) = cos(k z − φ_z + π/2)
    let sys_z: Vec<f64> = sys.iter().map(|&s| positions[s]).collect();
    let thetas: Vec<f64> = (1..=ns)
        .map(|i| std::f64::consts::PI * i as f64 / (ns as f64 + 1.0))
        .collect();
    let (k, b) = fit_wavevector(&sys_z, &thetas);
    match wave {
        WaveKind::Standing => {
            // want φ_z − k z_i = π/2 − θ_i, i.e. θ_i = k z_i + (π/2 − φ_z)
            config.k_lz = k;
            config.phi_z = std::f64::consts::FRAC_PI_2 - b;
        }
        WaveKind::Traveling => {
            // want k z_i + φ_z = θ_i
            config.k_lz = k;
            config.phi_z = b;
        }
    }
    let m_com_mean: f64 =
        sys.iter().map(|&s| modes_z.vectors[(s, 0)].abs()).sum::<f64>() / ns as f64;
    config.omega_rabi_z = g_over_j * j_unit / (0.5 * config.eta_z * m_com_mean);
    config.delta_1z = delta_a_over_j * j_unit;
    config.kappa_minus = kappa_over_j * j_unit;
    Ok(config)
}

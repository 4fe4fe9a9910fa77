//! Builders for the damped spin-boson chain: XY chain, general two-axis spin
//! couplings with transverse fields, the σ^z spin-boson coupling, and the
//! full Lindblad model with boson damping (and optional heating).
//!
//! Rate convention: jump rates are stored in standard Lindblad form,
//! `D(ρ) = Σ rate (LρL† − ½{L†L, ρ})`. A damping written as
//! `κ(aρa† − a†aρ) + H.c.` therefore enters as rate `2κ`; the analytic decay
//! `⟨n⟩(t) = e^{−2κt}` of a single damped mode pins this factor.

use nalgebra::DMatrix;


use crate::error::{Error, Result};
use crate::operators::{
    boson_op, embed, pauli_local, pauli_op, sector_project, BosonOp, Factor, Pauli, SparseOp,
    HERMITICITY_TOL,
};
use crate::space::{bits_from_up_sites, SpaceSpec};

use crate::states::{DensityMatrix, StateVector};

/// Parameters of the damped spin-boson chain, all energies in units of `j`.
#[derive(Debug, Clone)]
pub struct DsbcParams {
    pub n: usize,
    /// Nearest-neighbour XY coupling; the antiferromagnetic sign is j > 0.
    pub j: f64,
    /// Oscillator detuning Δ_a (positive selects cooling down the ladder).
    pub delta_a: f64,
    /// Spin-boson strength scale g.
    pub g: f64,
    /// Boson damping rate κ (amplitude-decay convention, see module docs).
    pub kappa: f64,
    /// Modulation wavevector of the site-dependent couplings.
    pub q_g: f64,
    pub boson_levels: usize,
    /// Site couplings g_i, derived as g·cos(q_g·i) for i = 1..N unless
    /// overridden.
    pub couplings: Vec<f64>,
}

impl DsbcParams {
    pub fn new(n: usize, delta_a: f64, g: f64, kappa: f64, boson_levels: usize) -> Result<Self> {
        if kappa < 0.0 {
            return Err(Error::InvalidParam("kappa must be nonnegative".into()));
        }
        if boson_levels < 2 {
            return Err(Error::InvalidParam("boson_levels must be at least 2".into()));
        }
        let q_g = std::f64::consts::PI / (n as f64 + 1.0);
        let couplings = (1..=n).map(|i| g * (q_g * i as f64).cos()).collect();
        Ok(DsbcParams { n, j: 1.0, delta_a, g, kappa, q_g, boson_levels, couplings })
    }

    /// Override the site couplings (e.g. for alternative modulations).
    pub fn with_couplings(mut self, couplings: Vec<f64>) -> Result<Self> {
        if couplings.len() != self.n {
            return Err(Error::InvalidParam("couplings length must equal spin count".into()));
        }
        self.couplings = couplings;
        Ok(self)
    }

    /// Site couplings from a modulation profile `f(i)` (1-based site index),
    /// scaled by `g`.
    pub fn with_modulation<F: Fn(usize) -> f64>(self, f: F) -> Result<Self> {
        let g = self.g;
        let n = self.n;
        self.with_couplings((1..=n).map(|i| g * f(i)).collect())
    }

    pub fn space(&self) -> SpaceSpec {
        SpaceSpec::new(self.n, self.boson_levels)
    }
}

/// One Hamiltonian plus a list of (standard-form rate, jump operator) pairs.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub space: SpaceSpec,
    pub h: SparseOp,
    pub jumps: Vec<(f64, SparseOp)>,
}

impl LindbladModel {
    pub fn new(h: SparseOp, jumps: Vec<(f64, SparseOp)>) -> Result<Self> {
        h.assert_hermitian(HERMITICITY_TOL)?;
        for (rate, l) in &jumps {
            if *rate < 0.0 {
                return Err(Error::InvalidParam(format!("negative jump rate {}", rate)));
            }
            if l.space != h.space {
                return Err(Error::DimensionMismatch("jump operator space mismatch".into()));
            }
        }
        Ok(LindbladModel { space: h.space.clone(), h, jumps })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// True when the Hamiltonian and every jump operator commute with the
    /// total spin-excitation operator.
    pub fn conserves_excitation(&self) -> bool {
        self.h.conserves_excitation() && self.jumps.iter().all(|(_, l)| l.conserves_excitation())
    }

    /// Restriction of the whole model to a fixed-excitation sector.
    pub fn sectored(&self, n_s: usize) -> Result<Self> {
        let h = sector_project(&self.h, n_s)?;
        let jumps = self
            .jumps
            .iter()
            .map(|(rate, l)| Ok((*rate, sector_project(l, n_s)?)))
            .collect::<Result<Vec<_>>>()?;
        LindbladModel::new(h, jumps)
    }
}

/// Symmetric zero-diagonal coupling matrices for the two transverse axes,
/// in units of the reference coupling.
#[derive(Debug, Clone)]
pub struct SpinCouplingMatrix {
    pub jx: DMatrix<f64>,
    pub jy: DMatrix<f64>,
}

impl SpinCouplingMatrix {
    pub fn new(jx: DMatrix<f64>, jy: DMatrix<f64>) -> Result<Self> {
        for (name, m) in [("jx", &jx), ("jy", &jy)] {
            if m.nrows() != m.ncols() {
                return Err(Error::DimensionMismatch(format!("{} must be square", name)));
            }
            for i in 0..m.nrows() {
                if m[(i, i)] != 0.0 {
                    return Err(Error::InvalidParam(format!("{} must have zero diagonal", name)));
                }
                for j in 0..i {
                    if (m[(i, j)] - m[(j, i)]).abs() > 1e-14 * m[(i, j)].abs().max(1.0) {
                        return Err(Error::InvalidParam(format!("{} must be symmetric", name)));
                    }
                }
            }
        }
        if jx.nrows() != jy.nrows() {
            return Err(Error::DimensionMismatch("jx and jy must have equal size".into()));
        }
        Ok(SpinCouplingMatrix { jx, jy })
    }

    /// Nearest-neighbour isotropic chain: J^x = J^y = j/2 on the
    /// off-diagonals, which reproduces the XY chain with hopping `j`.
    pub fn nearest_neighbour(n: usize, j: f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            m[(i, i + 1)] = 0.5 * j;
            m[(i + 1, i)] = 0.5 * j;
        }
        SpinCouplingMatrix { jx: m.clone(), jy: m }
    }

    pub fn n(&self) -> usize {
        self.jx.nrows()
    }

    /// max |J^x − J^y| over entries.
    pub fn anisotropy_defect(&self) -> f64 {
        (&self.jx - &self.jy).iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// XY chain Hamiltonian Σ_i J(σ⁺_i σ⁻_{i+1} + H.c.) on the unsectored
/// spin ⊗ boson space.
pub fn build_xy_hamiltonian(params: &DsbcParams) -> Result<SparseOp> {
    let space = params.space();
    let mut h = SparseOp::zeros(&space);
    for i in 0..params.n.saturating_sub(1) {
        let hop = embed(
            &space,
            &[(Factor::Spin(i), pauli_local(Pauli::Plus)), (Factor::Spin(i + 1), pauli_local(Pauli::Minus))],
        )?;
        h = h.add(&hop)?.add(&hop.adjoint())?;
    }
    Ok(h.scale_re(params.j))
}

/// General two-axis spin Hamiltonian with transverse fields,
/// Σ_{i<j} (J^x_ij σ^x_i σ^x_j + J^y_ij σ^y_i σ^y_j) − Σ_i (μ_i/2) σ^z_i.
///
/// When J^x = J^y each pair reduces to 2(σ⁺σ⁻ + σ⁻σ⁺) and the result
/// conserves excitation number; a sectored build is refused otherwise.
pub fn build_general_spin_hamiltonian(
    coupling: &SpinCouplingMatrix,
    transverse_field: &[f64],
    boson_levels: usize,
    sector: Option<usize>,
) -> Result<SparseOp> {
    let n = coupling.n();
    if transverse_field.len() != n {
        return Err(Error::DimensionMismatch("transverse field length must equal spin count".into()));
    }
    if sector.is_some() && coupling.anisotropy_defect() > 0.0 {
        return Err(Error::SectorViolation(
            "anisotropic couplings do not conserve excitation number; cannot build in a sector"
                .into(),
        ));
    }
    let space = SpaceSpec::new(n, boson_levels);
    let mut h = SparseOp::zeros(&space);
    for i in 0..n {
        for j in (i + 1)..n {
            if coupling.jx[(i, j)] != 0.0 {
                let xx = embed(
                    &space,
                    &[(Factor::Spin(i), pauli_local(Pauli::X)), (Factor::Spin(j), pauli_local(Pauli::X))],
                )?;
                h = h.add(&xx.scale_re(coupling.jx[(i, j)]))?;
            }
            if coupling.jy[(i, j)] != 0.0 {
                let yy = embed(
                    &space,
                    &[(Factor::Spin(i), pauli_local(Pauli::Y)), (Factor::Spin(j), pauli_local(Pauli::Y))],
                )?;
                h = h.add(&yy.scale_re(coupling.jy[(i, j)]))?;
            }
        }
    }
    for (i, mu) in transverse_field.iter().enumerate() {
        if *mu != 0.0 {
            let z = pauli_op(&space, i, Pauli::Z)?;
            h = h.add(&z.scale_re(-0.5 * mu))?;
        }
    }
    match sector {
        Some(n_s) => sector_project(&h, n_s),
        None => Ok(h),
    }
}

/// Edge-field variant of the XY chain,
/// J [ Σ (σ⁺σ⁻ + H.c.) − ½σ^z_1 − ½σ^z_N ], whose single-excitation ground
/// state is the alternating-sign W-like state.
pub fn build_edge_field_hamiltonian(
    n: usize,
    j: f64,
    boson_levels: usize,
    sector: Option<usize>,
) -> Result<SparseOp> {
    let coupling = SpinCouplingMatrix::nearest_neighbour(n, j);
    let mut mu = vec![0.0; n];
    mu[0] = j;
    mu[n - 1] = j;
    build_general_spin_hamiltonian(&coupling, &mu, boson_levels, sector)
}

/// Spin-boson coupling Σ_i g_i σ^z_i (a + a†) with the site couplings from
/// `params`.
pub fn build_spin_boson_coupling(params: &DsbcParams) -> Result<SparseOp> {
    let space = params.space();
    if !space.has_boson() {
        return Err(Error::NoBosonFactor);
    }
    let x = boson_op(&space, BosonOp::Annihilate)?.add(&boson_op(&space, BosonOp::Create)?)?;
    let mut h = SparseOp::zeros(&space);
    for (i, gi) in params.couplings.iter().enumerate() {
        if *gi != 0.0 {
            let z = pauli_op(&space, i, Pauli::Z)?;
            h = h.add(&z.matmul(&x)?.scale_re(*gi))?;
        }
    }
    Ok(h)
}

/// Boson Hamiltonian Δ_a a†a on the composite space.
pub fn build_boson_hamiltonian(params: &DsbcParams) -> Result<SparseOp> {
    let space = params.space();
    Ok(boson_op(&space, BosonOp::Number)?.scale_re(params.delta_a))
}

/// Full damped spin-boson chain model. `heating_ratio` is ζ = κ⁺/κ⁻; the
/// jump list is (2κ, a) plus (2ζκ, a†) when ζ > 0 (standard-form rates).
pub fn build_dsbc_model(
    params: &DsbcParams,
    heating_ratio: f64,
    sector: Option<usize>,
) -> Result<LindbladModel> {
    if !(0.0..1.0).contains(&heating_ratio) {
        return Err(Error::InvalidParam(format!(
            "heating ratio {} must lie in [0, 1) for a steady state to exist",
            heating_ratio
        )));
    }
    let h = build_boson_hamiltonian(params)?
        .add(&build_xy_hamiltonian(params)?)?
        .add(&build_spin_boson_coupling(params)?)?;
    let a = boson_op(&params.space(), BosonOp::Annihilate)?;
    let mut jumps = vec![(2.0 * params.kappa, a.clone())];
    if heating_ratio > 0.0 {
        jumps.push((2.0 * heating_ratio * params.kappa, a.adjoint()));
    }
    let model = LindbladModel::new(h, jumps)?;
    match sector {
        Some(n_s) => model.sectored(n_s),
        None => Ok(model),
    }
}

/// Single damped (and optionally heated) oscillator with no spins.
pub fn damped_oscillator(
    levels: usize,
    delta_a: f64,
    kappa: f64,
    heating_ratio: f64,
) -> Result<LindbladModel> {
    if !(0.0..1.0).contains(&heating_ratio) {
        return Err(Error::InvalidParam("heating ratio must lie in [0, 1)".into()));
    }
    let space = SpaceSpec::new(0, levels);
    let h = boson_op(&space, BosonOp::Number)?.scale_re(delta_a);
    let a = boson_op(&space, BosonOp::Annihilate)?;
    let mut jumps = vec![(2.0 * kappa, a.clone())];
    if heating_ratio > 0.0 {
        jumps.push((2.0 * heating_ratio * kappa, a.adjoint()));
    }
    LindbladModel::new(h, jumps)
}

/// Initial spin pattern for product states.
#[derive(Debug, Clone)]
pub enum InitialPattern {
    /// The first n_s sites up, the rest down.
    LeftBlock,
    /// Explicit occupation bitstring (site 1 most significant, ↑ = 0).
    Bits(u64),
}

/// Pure product state |pattern⟩⟨pattern| ⊗ |0⟩⟨0|, in the sector basis when
/// `sectored` is set.
pub fn build_initial_state(
    params: &DsbcParams,
    n_s: usize,
    pattern: &InitialPattern,
    sectored: bool,
) -> Result<DensityMatrix> {
    if n_s > params.n {
        return Err(Error::InvalidParam("excitation count exceeds spin count".into()));
    }
    let bits = match pattern {
        InitialPattern::LeftBlock => {
            let ups: Vec<usize> = (0..n_s).collect();
            bits_from_up_sites(params.n, &ups)
        }
        InitialPattern::Bits(b) => {
            let weight = params.n - b.count_ones() as usize;
            if weight != n_s {
                return Err(Error::SectorViolation(format!(
                    "bitstring has {} up spins, expected {}",
                    weight, n_s
                )));
            }
            *b
        }
    };
    let space = if sectored {
        SpaceSpec::with_sector(params.n, params.boson_levels, n_s)?
    } else {
        params.space()
    };
    let spin_idx = space
        .spin_index_of_bits(bits)
        .ok_or_else(|| Error::SectorViolation("bitstring outside the requested sector".into()))?;
    let psi = StateVector::basis_state(space.clone(), space.join_index(spin_idx, 0))?;
    Ok(DensityMatrix::from_pure(&psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::total_sz;
    use num_complex::Complex64 as C64;

    #[test]
    fn two_site_sector_hopping_matrix() {
        let params = DsbcParams::new(2, 1.0, 0.1, 0.1, 2).unwrap();
        let h = build_xy_hamiltonian(&params).unwrap();
        let hs = sector_project(&h, 1).unwrap();
        // spin part is [[0, J], [J, 0]] tensored with the boson identity
        assert_eq!(hs.mat.get(0, 2), C64::new(1.0, 0.0));
        assert_eq!(hs.mat.get(2, 0), C64::new(1.0, 0.0));
        assert_eq!(hs.mat.get(0, 0), C64::new(0.0, 0.0));
    }

    #[test]
    fn xy_sector_spectrum_n3() {
        let mut params = DsbcParams::new(3, 1.0, 0.1, 0.1, 2).unwrap();
        params.boson_levels = 2;
        let h = build_xy_hamiltonian(&params).unwrap();
        let spin_only = DsbcParams { boson_levels: 2, ..params.clone() };
        let _ = spin_only;
        // project, then strip the boson identity by looking at the spin block
        let hs = sector_project(&h, 1).unwrap();
        let dense = hs.mat.to_dense();
        // eigenvalues of H ⊗ I2 are the spin eigenvalues doubled up
        let eig = ((dense.clone() + dense.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r2 = 2.0_f64.sqrt();
        let expect = [-r2, -r2, 0.0, 0.0, r2, r2];
        for (v, e) in vals.iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-12, "eigenvalue {} vs {}", v, e);
        }
    }

    #[test]
    fn builders_conserve_excitation() {
        let params = DsbcParams::new(3, 0.7, 0.05, 0.1, 3).unwrap();
        let hs = build_xy_hamiltonian(&params).unwrap();
        let hsb = build_spin_boson_coupling(&params).unwrap();
        let hb = build_boson_hamiltonian(&params).unwrap();
        let sz = total_sz(&params.space());
        for h in [&hs, &hsb, &hb] {
            assert!(h.commutator_norm(&sz) < 1e-12);
            assert!(h.hermiticity_defect() < 1e-10);
        }
    }

    #[test]
    fn default_modulation_n3() {
        // g_i/g = {cos(π/4), cos(π/2), cos(3π/4)}; the middle site decouples
        let params = DsbcParams::new(3, 1.0, 0.2, 0.1, 3).unwrap();
        let half_r2 = 0.5 * 2.0_f64.sqrt();
        assert!((params.couplings[0] - 0.2 * half_r2).abs() < 1e-15);
        assert!(params.couplings[1].abs() < 1e-15);
        assert!((params.couplings[2] + 0.2 * half_r2).abs() < 1e-15);
    }

    #[test]
    fn general_builder_matches_xy() {
        let params = DsbcParams::new(4, 1.0, 0.1, 0.1, 2).unwrap();
        let xy = build_xy_hamiltonian(&params).unwrap();
        let coupling = SpinCouplingMatrix::nearest_neighbour(4, params.j);
        let gen =
            build_general_spin_hamiltonian(&coupling, &[0.0; 4], params.boson_levels, None).unwrap();
        assert!(xy.sub(&gen).unwrap().mat.max_abs() < 1e-14);
    }

    #[test]
    fn edge_field_matches_explicit_form() {
        // J [Σ(σ⁺σ⁻ + H.c.) − ½σ^z_1 − ½σ^z_N]
        let n = 3;
        let j = 1.3;
        let h = build_edge_field_hamiltonian(n, j, 0, None).unwrap();
        let params = DsbcParams { j, ..DsbcParams::new(n, 1.0, 0.1, 0.1, 2).unwrap() };
        let params = DsbcParams { boson_levels: 0, ..params };
        let space = SpaceSpec::new(n, 0);
        let mut expect = build_xy_hamiltonian(&DsbcParams { boson_levels: 0, ..params.clone() });
        // build_xy refuses boson_levels 0? it does not use the boson factor
        let expect = expect.as_mut().unwrap();
        let z0 = pauli_op(&space, 0, Pauli::Z).unwrap();
        let zn = pauli_op(&space, n - 1, Pauli::Z).unwrap();
        let expect = expect
            .add(&z0.scale_re(-0.5 * j))
            .unwrap()
            .add(&zn.scale_re(-0.5 * j))
            .unwrap();
        assert!(h.sub(&expect).unwrap().mat.max_abs() < 1e-14);
    }

    #[test]
    fn anisotropic_sector_build_is_refused() {
        let mut coupling = SpinCouplingMatrix::nearest_neighbour(3, 1.0);
        coupling.jy[(0, 1)] *= 1.5;
        coupling.jy[(1, 0)] *= 1.5;
        let res = build_general_spin_hamiltonian(&coupling, &[0.0; 3], 0, Some(1));
        assert!(matches!(res, Err(Error::SectorViolation(_))));
        // the same couplings in the full space build fine but break conservation
        let h = build_general_spin_hamiltonian(&coupling, &[0.0; 3], 0, None).unwrap();
        assert!(!h.conserves_excitation());
    }

    #[test]
    fn isotropic_general_builder_conserves() {
        let coupling = SpinCouplingMatrix::nearest_neighbour(4, 0.8);
        let h = build_general_spin_hamiltonian(&coupling, &[0.3, 0.0, 0.0, 0.3], 0, None).unwrap();
        assert!(h.conserves_excitation());
    }

    #[test]
    fn heating_ratio_validation() {
        let params = DsbcParams::new(2, 1.0, 0.1, 0.1, 3).unwrap();
        assert!(build_dsbc_model(&params, 0.0, Some(1)).is_ok());
        assert!(build_dsbc_model(&params, 0.2, Some(1)).is_ok());
        assert!(build_dsbc_model(&params, 1.0, Some(1)).is_err());
        assert!(build_dsbc_model(&params, -0.1, Some(1)).is_err());
    }

    #[test]
    fn initial_state_left_block() {
        let params = DsbcParams::new(3, 1.0, 0.1, 0.1, 3).unwrap();
        let rho = build_initial_state(&params, 1, &InitialPattern::LeftBlock, true).unwrap();
        // |↑↓↓⟩ is sector index 0; boson vacuum is offset 0
        assert_eq!(rho.mat[(0, 0)], C64::new(1.0, 0.0));
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn initial_state_bitstring_weight_check() {
        let params = DsbcParams::new(3, 1.0, 0.1, 0.1, 3).unwrap();
        let res = build_initial_state(&params, 2, &InitialPattern::Bits(0b011), true);
        assert!(res.is_err());
        let ok = build_initial_state(&params, 1, &InitialPattern::Bits(0b101), true).unwrap();
        assert_eq!(ok.mat[(3, 3)], C64::new(1.0, 0.0));
    }
}

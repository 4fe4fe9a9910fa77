//! Spin-wave spectrum of the open XY chain, transition grouping, the
//! Lorentzian spectral density of the boson-mediated environment, the
//! adiabatically-eliminated effective Liouvillian on the spin sector, and
//! the Jordan-Wigner target states for arbitrary fillings.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{DsbcParams, LindbladModel};
use crate::operators::SparseOp;
use crate::space::SpaceSpec;
use crate::sparse::CsrMatrix;
use crate::states::StateVector;

/// Default grouping tolerance: exact degeneracies only, with double-precision
/// headroom.
pub const GROUPING_TOL: f64 = 1e-9;

/// Single-excitation band structure of the open XY chain: wavevectors
/// q_n = πn/(N+1), energies ε_n = 2J cos(q_n), and sine-profile mode vectors.
#[derive(Debug, Clone)]
pub struct SpinWaveBasis {
    pub n: usize,
    pub j: f64,
    pub wavevectors: Vec<f64>,
    /// Strictly decreasing in the mode index.
    pub energies: Vec<f64>,
    /// `modes[k][i]` is the amplitude of mode k+1 on site i+1.
    pub modes: Vec<Vec<f64>>,
}

impl SpinWaveBasis {
    pub fn new(n: usize, j: f64) -> Self {
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let wavevectors: Vec<f64> =
            (1..=n).map(|k| std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).collect();
        let energies = wavevectors.iter().map(|q| 2.0 * j * q.cos()).collect();
        let modes = wavevectors
            .iter()
            .map(|q| (1..=n).map(|i| norm * (q * i as f64).sin()).collect())
            .collect();
        SpinWaveBasis { n, j, wavevectors, energies, modes }
    }

    /// ε_n for a 1-based mode index.
    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n - 1]
    }
}

/// Spin-wave state |q_n⟩ (1-based n) in the single-excitation sector.
pub fn spin_wave_state(n_sites: usize, n: usize) -> Result<StateVector> {
    if n == 0 || n > n_sites {
        return Err(Error::InvalidParam(format!(
            "mode index {} out of range 1..={}",
            n, n_sites
        )));
    }
    let basis = SpinWaveBasis::new(n_sites, 1.0);
    let space = SpaceSpec::with_sector(n_sites, 0, 1)?;
    let amps = basis.modes[n - 1].iter().map(|&a| C64::new(a, 0.0)).collect();
    StateVector::from_amplitudes(space, amps)
}

/// Alternating-sign equal-weight state in the single-excitation sector,
/// the ground state of the edge-field chain. The phase puts +1 on site 1.
pub fn w_like_state(n_sites: usize) -> Result<StateVector> {
    if n_sites < 2 {
        return Err(Error::InvalidParam("need at least two sites".into()));
    }
    let space = SpaceSpec::with_sector(n_sites, 0, 1)?;
    let amps = (0..n_sites)
        .map(|s| C64::new(if s % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    StateVector::from_amplitudes(space, amps)
}

/// Neighbouring-level gaps Δ_n = ε_n − ε_{n+1} of a descending energy list.
pub fn transition_frequencies(energies: &[f64]) -> Vec<f64> {
    energies.windows(2).map(|w| w[0] - w[1]).collect()
}

/// A set of ladder transitions sharing one frequency, with the collective
/// jump operators J_Δ± = Σ L_n±.
#[derive(Debug, Clone)]
pub struct TransitionGroup {
    pub delta: f64,
    /// 1-based ladder indices n with Δ_n in this group.
    pub members: Vec<usize>,
    pub jump_plus: SparseOp,
    pub jump_minus: SparseOp,
}

/// Partition transition frequencies into groups that are equal within `tol`.
///
/// Frequencies chained by gaps ≤ tol must all land in one group; if such a
/// chain spans more than `tol` the clustering is ambiguous and the call
/// fails, asking for a different tolerance. Groups come back sorted by
/// frequency. Returns (group frequency, member ladder indices).
pub fn group_transitions(deltas: &[f64], tol: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    if tol < 0.0 {
        return Err(Error::InvalidParam("grouping tolerance must be nonnegative".into()));
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].partial_cmp(&deltas[b]).unwrap());
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && deltas[order[end + 1]] - deltas[order[end]] <= tol {
            end += 1;
        }
        let span = deltas[order[end]] - deltas[order[start]];
        if span > tol {
            return Err(Error::AmbiguousGrouping { tol });
        }
        let members: Vec<usize> = order[start..=end].iter().map(|&k| k + 1).collect();
        let freq =
            members.iter().map(|&n| deltas[n - 1]).sum::<f64>() / members.len() as f64;
        groups.push((freq, members));
        start = end + 1;
    }
    Ok(groups)
}

/// Lorentzian spectral density of the boson-mediated environment,
/// J_a(ω) = (κ/π) |g|² / (κ² + (ω − Δ_a)²).
pub fn spectral_density(omega: f64, g: f64, kappa: f64, delta_a: f64) -> f64 {
    kappa / std::f64::consts::PI * g * g / (kappa * kappa + (omega - delta_a).powi(2))
}

/// Ratio r_n = |ξ_n⁺|/|ξ_n⁻| of up- and down-ladder amplitudes, with
/// ξ_n± = κ/[κ + i(Δ_a ± Δ_n)]. Positive detuning at resonance
/// (Δ_a ≈ +Δ_n, κ ≪ Δ_n) drives r_n → 0, selecting the cooling processes.
pub fn ladder_ratio(n: usize, delta_a: f64, kappa: f64, deltas: &[f64]) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::InvalidParam("kappa must be positive".into()));
    }
    if n == 0 || n > deltas.len() {
        return Err(Error::InvalidParam(format!("transition index {} out of range", n)));
    }
    let d = deltas[n - 1];
    Ok(((kappa * kappa + (delta_a - d).powi(2)) / (kappa * kappa + (delta_a + d).powi(2))).sqrt())
}

/// Quadratic fermion operator Σ_ij T_ij c†_i c_j on the n_s-excitation spin
/// sector, with Jordan-Wigner strings ordered by ascending site index
/// (fermion occupied = spin up).
pub fn quadratic_fermion_op(
    n_spins: usize,
    n_s: usize,
    t: &DMatrix<C64>,
) -> Result<SparseOp> {
    if t.nrows() != n_spins || t.ncols() != n_spins {
        return Err(Error::DimensionMismatch("single-particle matrix must be N x N".into()));
    }
    let space = SpaceSpec::with_sector(n_spins, 0, n_s)?;
    let basis = space.sector_bits();
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    for (col, &b) in basis.iter().enumerate() {
        // diagonal: Σ_i T_ii n_i
        let mut diag = C64::new(0.0, 0.0);
        for i in 0..n_spins {
            if space.site_is_up(b, i) {
                diag += t[(i, i)];
            }
        }
        if diag != C64::new(0.0, 0.0) {
            trip.push((col, col, diag));
        }
        // hopping: c†_i c_j moves a fermion from site j to site i with a
        // parity sign counting occupied sites strictly between
        for j in 0..n_spins {
            if !space.site_is_up(b, j) {
                continue;
            }
            for i in 0..n_spins {
                if i == j || space.site_is_up(b, i) || t[(i, j)] == C64::new(0.0, 0.0) {
                    continue;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let mut parity = 0u32;
                for k in (lo + 1)..hi {
                    if space.site_is_up(b, k) {
                        parity += 1;
                    }
                }
                let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                let nb = (b | SpaceSpec::site_mask(n_spins, j))
                    & !SpaceSpec::site_mask(n_spins, i);
                let row = space.spin_index_of_bits(nb).expect("hop stays in sector");
                trip.push((row, col, t[(i, j)] * C64::new(sign, 0.0)));
            }
        }
    }
    SparseOp::new(space.clone(), CsrMatrix::from_triplets(space.dim(), space.dim(), trip))
}

/// Momentum-space ladder operators L⁺_{f,n} = c†_{q_n} c_{q_{n+1}} for
/// n = 1..N−1, restricted to the n_s sector. For n_s = 1 these coincide
/// entrywise with |q_n⟩⟨q_{n+1}|.
pub fn fermionic_ladder_operators(n_spins: usize, n_s: usize) -> Result<Vec<SparseOp>> {
    let basis = SpinWaveBasis::new(n_spins, 1.0);
    let mut out = Vec::with_capacity(n_spins.saturating_sub(1));
    for n in 1..n_spins {
        // c†_{q_n} c_{q_{n+1}} = Σ_ij m_n[i] m_{n+1}[j] c†_i c_j
        let t = DMatrix::from_fn(n_spins, n_spins, |i, j| {
            C64::new(basis.modes[n - 1][i] * basis.modes[n][j], 0.0)
        });
        out.push(quadratic_fermion_op(n_spins, n_s, &t)?);
    }
    Ok(out)
}

/// Which band edge the dissipation fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSign {
    /// J > 0: excitations relax into the lowest spin-wave orbitals.
    Antiferromagnetic,
    /// Reversed couplings: excitations pile into the highest orbitals.
    Reversed,
}

/// Many-body target state at filling n_s: the Slater determinant over the
/// n_s lowest (or highest, for reversed sign) spin-wave orbitals, expressed
/// in the sector basis with Jordan-Wigner phases.
pub fn xy_ground_state(
    n_spins: usize,
    n_s: usize,
    sign: CouplingSign,
    _mu: f64,
) -> Result<StateVector> {
    if n_s > n_spins {
        return Err(Error::InvalidParam("filling exceeds spin count".into()));
    }
    let space = SpaceSpec::with_sector(n_spins, 0, n_s)?;
    if n_s == 0 {
        return StateVector::basis_state(space, 0);
    }
    let basis = SpinWaveBasis::new(n_spins, 1.0);
    // filled orbitals, ascending 1-based mode index
    let orbitals: Vec<usize> = match sign {
        CouplingSign::Antiferromagnetic => ((n_spins - n_s + 1)..=n_spins).collect(),
        CouplingSign::Reversed => (1..=n_s).collect(),
    };
    let bits = space.sector_bits();
    let mut amps = Vec::with_capacity(bits.len());
    for &b in &bits {
        let sites: Vec<usize> = (0..n_spins).filter(|&s| space.site_is_up(b, s)).collect();
        let m = DMatrix::<f64>::from_fn(n_s, n_s, |r, c| basis.modes[orbitals[r] - 1][sites[c]]);
        amps.push(C64::new(m.determinant(), 0.0));
    }
    StateVector::from_amplitudes(space, amps)
}

/// Transverse field that pins the filling: the midpoint of the two
/// single-particle levels at the Fermi edge, μ = ½(ε_{N−n_s+1} + ε_{N−n_s}).
pub fn chemical_potential_for_filling(n_spins: usize, n_s: usize) -> Result<f64> {
    if n_s == 0 || n_s >= n_spins {
        return Err(Error::InvalidParam(
            "chemical potential needs two levels to straddle (0 < n_s < N)".into(),
        ));
    }
    let basis = SpinWaveBasis::new(n_spins, 1.0);
    Ok(0.5 * (basis.energy(n_spins - n_s + 1) + basis.energy(n_spins - n_s)))
}

/// The boson-free Lindblad model on the spin sector obtained by integrating
/// out the damped mode, with one cooling and one heating channel per
/// transition group.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub model: LindbladModel,
    pub groups: Vec<TransitionGroup>,
    pub lamb_shift: bool,
    /// Set when the derivation's |g| ≪ κ assumption is violated.
    pub regime_warning: Option<String>,
}

/// Build the effective (adiabatically-eliminated) model at filling `n_s`.
///
/// Dissipator weights are 2π J_a(±Δ) on the jumps J_Δ∓ per group; the
/// Hamiltonian carries the level-shift terms
/// 2π (Δ_a∓Δ)/(2κ) J_a(±Δ) J_Δ± J_Δ∓ unless `lamb_shift` is off.
pub fn build_effective_model(
    params: &DsbcParams,
    n_s: usize,
    tol: f64,
    lamb_shift: bool,
) -> Result<EffectiveModel> {
    if params.kappa <= 0.0 {
        return Err(Error::InvalidParam("effective model needs kappa > 0".into()));
    }
    let n = params.n;
    let basis = SpinWaveBasis::new(n, params.j);
    let deltas = transition_frequencies(&basis.energies);
    let grouped = group_transitions(&deltas, tol)?;
    let ladders = fermionic_ladder_operators(n, n_s)?;

    // sector XY Hamiltonian via its quadratic fermion form
    let mut t = DMatrix::<C64>::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        t[(i, i + 1)] = C64::new(params.j, 0.0);
        t[(i + 1, i)] = C64::new(params.j, 0.0);
    }
    let h_s = quadratic_fermion_op(n, n_s, &t)?;

    let mut groups = Vec::with_capacity(grouped.len());
    let mut h_eff = h_s;
    let mut jumps = Vec::with_capacity(2 * grouped.len());
    let two_pi = 2.0 * std::f64::consts::PI;
    for (delta, members) in grouped {
        let mut plus = SparseOp::zeros(&h_eff.space);
        for &m in &members {
            plus = plus.add(&ladders[m - 1])?;
        }
        let minus = plus.adjoint();
        let w_down = two_pi * spectral_density(delta, params.g, params.kappa, params.delta_a);
        let w_up = two_pi * spectral_density(-delta, params.g, params.kappa, params.delta_a);
        jumps.push((w_down, minus.clone()));
        jumps.push((w_up, plus.clone()));
        if lamb_shift {
            let shift_down = (params.delta_a - delta) / (2.0 * params.kappa) * w_down;
            let shift_up = (params.delta_a + delta) / (2.0 * params.kappa) * w_up;
            h_eff = h_eff.add(&plus.matmul(&minus)?.scale_re(shift_down))?;
            h_eff = h_eff.add(&minus.matmul(&plus)?.scale_re(shift_up))?;
        }
        groups.push(TransitionGroup { delta, members, jump_plus: plus, jump_minus: minus });
    }
    let regime_warning = if params.g.abs() >= params.kappa {
        Some(format!(
            "effective model derived for |g| << kappa; here g = {:.3e}, kappa = {:.3e}",
            params.g, params.kappa
        ))
    } else {
        None
    };
    Ok(EffectiveModel {
        model: LindbladModel::new(h_eff, jumps)?,
        groups,
        lamb_shift,
        regime_warning,
    })
}

impl EffectiveModel {
    /// Replace every dissipator weight by `w` (flat-spectrum surrogate).
    pub fn with_equalized_weights(&self, w: f64) -> Result<EffectiveModel> {
        let jumps = self.model.jumps.iter().map(|(_, l)| (w, l.clone())).collect();
        Ok(EffectiveModel {
            model: LindbladModel::new(self.model.h.clone(), jumps)?,
            groups: self.groups.clone(),
            lamb_shift: self.lamb_shift,
            regime_warning: self.regime_warning.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_edge_field_hamiltonian;
    use crate::operators::sector_project;

    const R2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn mode_vectors_orthonormal_and_energies_descending() {
        for n in [2usize, 3, 7, 12] {
            let b = SpinWaveBasis::new(n, 1.0);
            for k in 0..n {
                for l in 0..n {
                    let dot: f64 =
                        b.modes[k].iter().zip(&b.modes[l]).map(|(x, y)| x * y).sum();
                    let expect = if k == l { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
            for w in b.energies.windows(2) {
                assert!(w[0] > w[1]);
            }
        }
    }

    #[test]
    fn lowest_spin_wave_n3() {
        // |q_3⟩ = (1/2, -1/√2, 1/2) over sites
        let q3 = spin_wave_state(3, 3).unwrap();
        let expect = [0.5, -1.0 / R2, 0.5];
        for (a, e) in q3.vec.iter().zip(expect.iter()) {
            assert!((a.re - e).abs() < 1e-14 && a.im == 0.0);
        }
    }

    #[test]
    fn spin_waves_are_orthonormal_eigenstates() {
        let n = 5;
        let params = DsbcParams::new(n, 1.0, 0.1, 0.1, 2).unwrap();
        let params = DsbcParams { boson_levels: 0, ..params };
        let h = crate::model::build_xy_hamiltonian(&params).unwrap();
        let hs = sector_project(&h, 1).unwrap();
        let basis = SpinWaveBasis::new(n, 1.0);
        for k in 1..=n {
            let q = spin_wave_state(n, k).unwrap();
            let mut hq = vec![C64::new(0.0, 0.0); n];
            hs.mat.matvec(q.vec.as_slice(), &mut hq);
            for (i, a) in q.vec.iter().enumerate() {
                assert!((hq[i] - a * C64::new(basis.energy(k), 0.0)).norm() < 1e-12);
            }
            for l in 1..=n {
                let p = spin_wave_state(n, l).unwrap();
                let ov = q.overlap(&p).norm();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((ov - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w_like_state_phases_and_ground_state() {
        let w = w_like_state(3).unwrap();
        let r3 = 3.0_f64.sqrt();
        let expect = [1.0 / r3, -1.0 / r3, 1.0 / r3];
        for (a, e) in w.vec.iter().zip(expect.iter()) {
            assert!((a.re - e).abs() < 1e-14);
        }
        // ground state of the edge-field chain in the one-excitation sector
        for n in [2usize, 3, 5, 8] {
            let h = build_edge_field_hamiltonian(n, 1.0, 0, Some(1)).unwrap();
            let eig = h.mat.to_dense().symmetric_eigen();
            let (mut kmin, mut emin) = (0, f64::INFINITY);
            for (k, &e) in eig.eigenvalues.iter().enumerate() {
                if e < emin {
                    emin = e;
                    kmin = k;
                }
            }
            let gs = eig.eigenvectors.column(kmin);
            let w = w_like_state(n).unwrap();
            let ov: C64 = w.vec.iter().zip(gs.iter()).map(|(a, b)| a.conj() * b).sum();
            assert!(
                ov.norm() > 1.0 - 1e-10,
                "N = {}: overlap {} with edge-field ground state",
                n,
                ov.norm()
            );
        }
    }

    #[test]
    fn transition_tables() {
        // N=3: both gaps √2 J
        let b3 = SpinWaveBasis::new(3, 1.0);
        let d3 = transition_frequencies(&b3.energies);
        assert!((d3[0] - R2).abs() < 1e-14 && (d3[1] - R2).abs() < 1e-14);
        // N=4: {J, (√5−1)J, J}
        let b4 = SpinWaveBasis::new(4, 1.0);
        let d4 = transition_frequencies(&b4.energies);
        let mid = 5.0_f64.sqrt() - 1.0;
        for (d, e) in d4.iter().zip([1.0, mid, 1.0].iter()) {
            assert!((d - e).abs() < 1e-12, "gap {} vs {}", d, e);
        }
        // edge-field variant, N=3: gaps {2J, J}
        let h = build_edge_field_hamiltonian(3, 1.0, 0, Some(1)).unwrap();
        let eig = h.mat.to_dense().symmetric_eigen();
        let mut e: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let dw = transition_frequencies(&e);
        assert!((dw[0] - 2.0).abs() < 1e-12 && (dw[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_degenerate_and_distinct() {
        let b3 = SpinWaveBasis::new(3, 1.0);
        let g3 = group_transitions(&transition_frequencies(&b3.energies), GROUPING_TOL).unwrap();
        assert_eq!(g3.len(), 1);
        assert_eq!(g3[0].1, vec![1, 2]);
        assert!((g3[0].0 - R2).abs() < 1e-12);

        let b4 = SpinWaveBasis::new(4, 1.0);
        let g4 = group_transitions(&transition_frequencies(&b4.energies), GROUPING_TOL).unwrap();
        assert_eq!(g4.len(), 2);
        assert_eq!(g4[0].1, vec![1, 3]);
        assert_eq!(g4[1].1, vec![2]);
        assert!((g4[1].0 - (5.0_f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn grouping_zero_tolerance_and_ambiguity() {
        // exact degeneracies still group at tol = 0
        let g = group_transitions(&[1.0, 2.0, 1.0], 0.0).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1, vec![1, 3]);
        // a chain of small gaps spanning more than tol is ambiguous
        let res = group_transitions(&[1.0, 1.4, 1.8, 2.2], 0.5);
        assert!(matches!(res, Err(Error::AmbiguousGrouping { .. })));
    }

    #[test]
    fn lorentzian_shape_and_weight() {
        let (g, kappa, da) = (0.3, 0.07, 1.2);
        let peak = spectral_density(da, g, kappa, da);
        assert!((peak - g * g / (std::f64::consts::PI * kappa)).abs() < 1e-14);
        for s in [-1.0, 1.0] {
            let half = spectral_density(da + s * kappa, g, kappa, da);
            assert!((half - 0.5 * peak).abs() < 1e-14);
        }
        // ∫ J_a dω = |g|² over a wide window (trapezoid; the window must be
        // ~1e6 κ wide for the Lorentzian tail to drop below 1e-6 relative)
        let (lo, hi, steps) = (da - 3.0e6 * kappa, da + 3.0e6 * kappa, 20_000_000usize);
        let dw = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for k in 0..=steps {
            let w = lo + k as f64 * dw;
            let f = spectral_density(w, g, kappa, da);
            acc += if k == 0 || k == steps { 0.5 * f } else { f };
        }
        acc *= dw;
        assert!((acc - g * g).abs() < 1e-6 * g * g, "integral {} vs {}", acc, g * g);
    }

    #[test]
    fn ladder_ratio_limits() {
        let deltas = vec![1.3];
        // flat-spectrum limit
        let r = ladder_ratio(1, 0.9, 1e6, &deltas).unwrap();
        assert!((r - 1.0).abs() < 1e-10);
        // resonant cooling: r ≈ κ/(2Δ)
        let kappa = 1e-4;
        let r = ladder_ratio(1, 1.3, kappa, &deltas).unwrap();
        assert!((r - kappa / 2.6).abs() < 1e-8 * r.max(1e-12));
        // Δ_a → −Δ_a inverts the ratio
        let r_plus = ladder_ratio(1, 0.7, 0.05, &deltas).unwrap();
        let r_minus = ladder_ratio(1, -0.7, 0.05, &deltas).unwrap();
        assert!((r_plus * r_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fermionic_ladder_reduces_to_single_excitation() {
        for n in [3usize, 4, 6] {
            let ladders = fermionic_ladder_operators(n, 1).unwrap();
            for (k, l) in ladders.iter().enumerate() {
                let qn = spin_wave_state(n, k + 1).unwrap();
                let qn1 = spin_wave_state(n, k + 2).unwrap();
                // |q_n⟩⟨q_{n+1}|
                let mut expect = Vec::new();
                for r in 0..n {
                    for c in 0..n {
                        let v = qn.vec[r] * qn1.vec[c].conj();
                        if v.norm() > 0.0 {
                            expect.push((r, c, v));
                        }
                    }
                }
                let expect = CsrMatrix::from_triplets(n, n, expect);
                assert!(l.mat.sub(&expect).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fermionic_ladder_conserves_number_and_adjoints() {
        let n = 5;
        for n_s in 1..n {
            let space = SpaceSpec::with_sector(n, 0, n_s).unwrap();
            let number = crate::operators::total_sz(&space);
            for l in fermionic_ladder_operators(n, n_s).unwrap() {
                assert!(l.commutator_norm(&number) < 1e-12);
                // L⁻ = (L⁺)† entrywise
                assert_eq!(l.adjoint().mat, l.mat.adjoint());
            }
        }
    }

    #[test]
    fn ground_state_fillings() {
        // n_s = 1 is the lowest spin wave
        let gs = xy_ground_state(4, 1, CouplingSign::Antiferromagnetic, 0.0).unwrap();
        let q4 = spin_wave_state(4, 4).unwrap();
        assert!(gs.overlap(&q4).norm() > 1.0 - 1e-12);
        // filled band is the all-up product state
        let gs = xy_ground_state(3, 3, CouplingSign::Antiferromagnetic, 0.0).unwrap();
        assert!((gs.vec[0].norm() - 1.0).abs() < 1e-12);
        // reversed couplings at n_s = 1 give the highest spin wave
        let gs = xy_ground_state(4, 1, CouplingSign::Reversed, 0.0).unwrap();
        let q1 = spin_wave_state(4, 1).unwrap();
        assert!(gs.overlap(&q1).norm() > 1.0 - 1e-12);
    }

    #[test]
    fn ground_state_matches_exact_diagonalization() {
        // brute-force oracle: lowest eigenvector of the sector XY chain
        for n in 2..=6usize {
            for n_s in 0..=n {
                let gs = xy_ground_state(n, n_s, CouplingSign::Antiferromagnetic, 0.0).unwrap();
                let mut t = DMatrix::<C64>::zeros(n, n);
                for i in 0..n - 1 {
                    t[(i, i + 1)] = C64::new(1.0, 0.0);
                    t[(i + 1, i)] = C64::new(1.0, 0.0);
                }
                let h = quadratic_fermion_op(n, n_s, &t).unwrap();
                let eig = h.mat.to_dense().symmetric_eigen();
                let (mut kmin, mut emin) = (0, f64::INFINITY);
                for (k, &e) in eig.eigenvalues.iter().enumerate() {
                    if e < emin {
                        emin = e;
                        kmin = k;
                    }
                }
                let ov: C64 = gs
                    .vec
                    .iter()
                    .zip(eig.eigenvectors.column(kmin).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                assert!(
                    ov.norm() >= 1.0 - 1e-10,
                    "N = {}, n_s = {}: overlap {}",
                    n,
                    n_s,
                    ov.norm()
                );
            }
        }
    }

    #[test]
    fn chemical_potential_midpoints() {
        // N=3: μ(n_s=1) = −√2/2, μ(n_s=2) = +√2/2
        let mu1 = chemical_potential_for_filling(3, 1).unwrap();
        let mu2 = chemical_potential_for_filling(3, 2).unwrap();
        assert!((mu1 + R2 / 2.0).abs() < 1e-14);
        assert!((mu2 - R2 / 2.0).abs() < 1e-14);
        // half filling at even N sits at zero by symmetry
        let mu = chemical_potential_for_filling(6, 3).unwrap();
        assert!(mu.abs() < 1e-14);
        assert!(chemical_potential_for_filling(4, 0).is_err());
        assert!(chemical_potential_for_filling(4, 4).is_err());
    }

    #[test]
    fn effective_model_weights_and_hermiticity() {
        let params = DsbcParams::new(3, R2, 0.01, 0.1, 3).unwrap();
        let eff = build_effective_model(&params, 1, GROUPING_TOL, true).unwrap();
        assert_eq!(eff.groups.len(), 1);
        assert!(eff.model.h.hermiticity_defect() < 1e-10);
        assert_eq!(eff.model.jumps.len(), 2);
        let w_down = eff.model.jumps[0].0;
        let expect = 2.0 * std::f64::consts::PI * spectral_density(R2, 0.01, 0.1, R2);
        assert!((w_down - expect).abs() < 1e-15);
        assert!(eff.regime_warning.is_none());
        let bad = DsbcParams::new(3, R2, 0.2, 0.1, 3).unwrap();
        assert!(build_effective_model(&bad, 1, GROUPING_TOL, true).unwrap().regime_warning.is_some());
    }

    #[test]
    fn projected_coupling_is_ladder_sum() {
        // in the one-excitation sector the modulated σ^z coupling acts as
        // g Σ_n (L_n⁺ + L_n⁻) between spin waves
        for n in [3usize, 4, 5, 8] {
            let params = DsbcParams::new(n, 1.0, 0.17, 0.1, 2).unwrap();
            let params = DsbcParams { boson_levels: 0, ..params };
            let space = SpaceSpec::new(n, 0);
            let mut zsum = SparseOp::zeros(&space);
            for (i, gi) in params.couplings.iter().enumerate() {
                let z = crate::operators::pauli_op(&space, i, crate::operators::Pauli::Z).unwrap();
                zsum = zsum.add(&z.scale_re(*gi)).unwrap();
            }
            let proj = sector_project(&zsum, 1).unwrap();
            let mut expect = SparseOp::zeros(&proj.space);
            for l in fermionic_ladder_operators(n, 1).unwrap() {
                expect = expect.add(&l).unwrap().add(&l.adjoint()).unwrap();
            }
            let expect = expect.scale_re(params.g);
            assert!(
                proj.sub(&expect).unwrap().mat.max_abs() < 1e-12,
                "N = {} projected coupling mismatch",
                n
            );
        }
    }
}

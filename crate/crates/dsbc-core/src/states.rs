//! Dense state containers: normalized state vectors and density matrices,
//! plus the boson partial trace.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::space::SpaceSpec;

/// Norm tolerance for freshly constructed state vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity tolerance for density matrices.
pub const RHO_HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices at construction.
pub const RHO_TRACE_TOL: f64 = 1e-6;
/// Positivity drift bound on density-matrix eigenvalues.
pub const RHO_POSITIVITY_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub space: SpaceSpec,
    pub vec: DVector<C64>,
}

impl StateVector {
    pub fn new(space: SpaceSpec, vec: DVector<C64>) -> Result<Self> {
        if vec.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} on a dimension-{} space",
                vec.len(),
                space.dim()
            )));
        }
        let norm = vec.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParam(format!("state norm deviates by {:.3e}", norm - 1.0)));
        }
        Ok(StateVector { space, vec })
    }

    /// Build from unnormalized amplitudes.
    pub fn from_amplitudes(space: SpaceSpec, amps: Vec<C64>) -> Result<Self> {
        let mut v = DVector::from_vec(amps);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParam("zero state vector".into()));
        }
        v /= C64::new(norm, 0.0);
        StateVector::new(space, v)
    }

    /// Computational basis state.
    pub fn basis_state(space: SpaceSpec, idx: usize) -> Result<Self> {
        if idx >= space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "basis index {} on a dimension-{} space",
                idx,
                space.dim()
            )));
        }
        let mut v = DVector::zeros(space.dim());
        v[idx] = C64::new(1.0, 0.0);
        StateVector::new(space, v)
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        self.vec.dotc(&other.vec)
    }

    /// Re-express a sectored spin state in the unsectored spin basis.
    pub fn lift_to_full(&self) -> Result<Self> {
        let n_s = self
            .space
            .sector
            .ok_or_else(|| Error::InvalidParam("state is not sector-restricted".into()))?;
        let _ = n_s;
        let full = SpaceSpec::new(self.space.n_spins, self.space.boson_levels);
        let bits = self.space.sector_bits();
        let bdim = self.space.boson_dim();
        let mut v = DVector::zeros(full.dim());
        for (s, &b) in bits.iter().enumerate() {
            for k in 0..bdim {
                v[full.join_index(b as usize, k)] = self.vec[self.space.join_index(s, k)];
            }
        }
        StateVector::new(full, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: SpaceSpec,
    pub mat: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian within 1e-10 and unit trace within
    /// 1e-6. Positivity is checked separately by [`DensityMatrix::min_eigenvalue`]
    /// since it costs a full eigendecomposition.
    pub fn new(space: SpaceSpec, mat: DMatrix<C64>) -> Result<Self> {
        let rho = Self::unchecked(space, mat)?;
        let h = rho.hermiticity_defect();
        if h > RHO_HERMITICITY_TOL {
            return Err(Error::InvalidParam(format!("density matrix non-Hermitian by {:.3e}", h)));
        }
        let t = rho.trace();
        if (t - 1.0).abs() > RHO_TRACE_TOL {
            return Err(Error::InvalidParam(format!("density matrix trace deviates by {:.3e}", t - 1.0)));
        }
        Ok(rho)
    }

    /// Shape-checked only; used for simulation snapshots where trace and
    /// Hermiticity are monitored, never silently repaired.
    pub fn unchecked(space: SpaceSpec, mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on a dimension-{} space",
                mat.nrows(),
                mat.ncols(),
                space.dim()
            )));
        }
        Ok(DensityMatrix { space, mat })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.space.dim();
        let mut mat = DMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                mat[(r, c)] = psi.vec[r] * psi.vec[c].conj();
            }
        }
        DensityMatrix { space: psi.space.clone(), mat }
    }

    pub fn maximally_mixed(space: SpaceSpec) -> Self {
        let d = space.dim();
        let mat = DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        DensityMatrix { space, mat }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (self.mat.clone() + self.mat.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// tr(ρ A) for a sparse observable.
    pub fn expect(&self, op: &crate::operators::SparseOp) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (r, c, v) in op.mat.iter() {
            acc += v * self.mat[(c, r)];
        }
        acc
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.mat - &other.mat;
        let sym = (diff.clone() + diff.adjoint()) * C64::new(0.5, 0.0);
        0.5 * sym.symmetric_eigen().eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Trace out the boson factor, leaving the spin-only reduced state. The
/// trace is preserved exactly (term-by-term sum of diagonal blocks).
pub fn partial_trace_boson(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !rho.space.has_boson() {
        return Err(Error::NoBosonFactor);
    }
    let spin = rho.space.spin_only();
    let sd = spin.dim();
    let bd = rho.space.boson_dim();
    let mut out = DMatrix::zeros(sd, sd);
    for i in 0..sd {
        for j in 0..sd {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..bd {
                acc += rho.mat[(i * bd + k, j * bd + k)];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::unchecked(spin, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::bits_from_up_sites;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn norm_validation() {
        let space = SpaceSpec::new(1, 0);
        let bad = DVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(StateVector::new(space.clone(), bad).is_err());
        let ok = StateVector::from_amplitudes(space, vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!((ok.vec.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn product_state_traces_to_spin_factor() {
        // ρ_s ⊗ |0⟩⟨0| -> ρ_s
        let spin = SpaceSpec::new(1, 0);
        let psi = StateVector::from_amplitudes(spin, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let rho_s = DensityMatrix::from_pure(&psi);
        let full = SpaceSpec::new(1, 3);
        let mut mat = DMatrix::zeros(6, 6);
        for i in 0..2 {
            for j in 0..2 {
                mat[(i * 3, j * 3)] = rho_s.mat[(i, j)];
            }
        }
        let rho = DensityMatrix::new(full, mat).unwrap();
        let red = partial_trace_boson(&rho).unwrap();
        assert!((&red.mat - &rho_s.mat).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn mixed_state_traces_to_mixed() {
        let full = SpaceSpec::new(2, 3);
        let rho = DensityMatrix::maximally_mixed(full);
        let red = partial_trace_boson(&rho).unwrap();
        let expect = DensityMatrix::maximally_mixed(SpaceSpec::new(2, 0));
        assert!((&red.mat - &expect.mat).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let full = SpaceSpec::new(2, 4);
        let d = full.dim();
        // a normalized positive matrix
        let m = DMatrix::<C64>::from_fn(d, d, |i, j| c((1.0 + i as f64) * (1.0 + j as f64), 0.0));
        let pos = &m * m.adjoint();
        let tr: f64 = pos.diagonal().iter().map(|z| z.re).sum();
        let rho = DensityMatrix::new(full, pos / c(tr, 0.0)).unwrap();
        let red = partial_trace_boson(&rho).unwrap();
        assert!((red.trace() - rho.trace()).abs() < 1e-14);
    }

    #[test]
    fn lift_sector_state() {
        let sectored = SpaceSpec::with_sector(3, 0, 1).unwrap();
        let psi = StateVector::from_amplitudes(
            sectored,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let full = psi.lift_to_full().unwrap();
        let idx = bits_from_up_sites(3, &[0]) as usize;
        assert_eq!(full.vec[idx], c(1.0, 0.0));
        assert!((full.vec.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn purity_and_trace_of_pure_state() {
        let space = SpaceSpec::with_sector(3, 0, 1).unwrap();
        let psi = StateVector::basis_state(space, 0).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
    }
}

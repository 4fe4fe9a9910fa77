//! Operator construction over composite spin ⊗ boson spaces: Pauli and
//! oscillator operators, Kronecker embedding, and projection onto a
//! fixed-excitation spin sector.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::space::SpaceSpec;
use crate::sparse::CsrMatrix;

/// Tolerance for declared-Hermitian operators.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for excitation-number conservation checks.
pub const CONSERVATION_TOL: f64 = 1e-12;

/// A complex sparse matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub space: SpaceSpec,
    pub mat: CsrMatrix,
}

impl SparseOp {
    pub fn new(space: SpaceSpec, mat: CsrMatrix) -> Result<Self> {
        if mat.nrows != space.dim() || mat.ncols != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on a dimension-{} space",
                mat.nrows,
                mat.ncols,
                space.dim()
            )));
        }
        Ok(SparseOp { space, mat })
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        SparseOp { space: space.clone(), mat: CsrMatrix::identity(space.dim()) }
    }

    pub fn zeros(space: &SpaceSpec) -> Self {
        SparseOp { space: space.clone(), mat: CsrMatrix::zeros(space.dim(), space.dim()) }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch("operators live on different spaces".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(SparseOp { space: self.space.clone(), mat: self.mat.add(&other.mat) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(SparseOp { space: self.space.clone(), mat: self.mat.sub(&other.mat) })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(SparseOp { space: self.space.clone(), mat: self.mat.matmul(&other.mat) })
    }

    pub fn scale(&self, s: C64) -> Self {
        SparseOp { space: self.space.clone(), mat: self.mat.scale(s) }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        SparseOp { space: self.space.clone(), mat: self.mat.adjoint() }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.mat.hermiticity_defect()
    }

    pub fn assert_hermitian(&self, tol: f64) -> Result<()> {
        let d = self.hermiticity_defect();
        if d > tol {
            return Err(Error::InvalidParam(format!(
                "operator declared Hermitian but max |A - A†| = {:.3e}",
                d
            )));
        }
        Ok(())
    }

    pub fn commutator_norm(&self, other: &Self) -> f64 {
        self.mat.commutator_norm(&other.mat)
    }

    /// Commutator norm with the total spin-excitation operator.
    pub fn conservation_defect(&self) -> f64 {
        self.commutator_norm(&total_sz(&self.space))
    }

    pub fn conserves_excitation(&self) -> bool {
        self.conservation_defect() <= CONSERVATION_TOL
    }
}

/// Pauli operator flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// The 2×2 matrix of a Pauli flavor in the |↑⟩-first basis.
pub fn pauli_local(which: Pauli) -> CsrMatrix {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let trip = match which {
        Pauli::Z => vec![(0, 0, one), (1, 1, -one)],
        Pauli::X => vec![(0, 1, one), (1, 0, one)],
        Pauli::Y => vec![(0, 1, -i), (1, 0, i)],
        Pauli::Plus => vec![(0, 1, one)],
        Pauli::Minus => vec![(1, 0, one)],
    };
    CsrMatrix::from_triplets(2, 2, trip)
}

/// Single-site Pauli operator embedded in `space` (σ^z eigenvalue +1 on ↑).
///
/// In a sectored space only `Z` is allowed; the ladder and transverse
/// operators leave the sector and must be assembled pairwise in the
/// unsectored space before projection.
pub fn pauli_op(space: &SpaceSpec, site: usize, which: Pauli) -> Result<SparseOp> {
    space.check_site(site)?;
    if space.sector.is_some() {
        if which != Pauli::Z {
            return Err(Error::SectorViolation(format!(
                "bare {:?} on site {} does not preserve the fixed-excitation sector",
                which, site
            )));
        }
        let bits = space.sector_bits();
        let bdim = space.boson_dim();
        let mut trip = Vec::with_capacity(space.dim());
        for (s, &b) in bits.iter().enumerate() {
            let z = if space.site_is_up(b, site) { 1.0 } else { -1.0 };
            for k in 0..bdim {
                let idx = space.join_index(s, k);
                trip.push((idx, idx, C64::new(z, 0.0)));
            }
        }
        return SparseOp::new(space.clone(), CsrMatrix::from_triplets(space.dim(), space.dim(), trip));
    }
    embed(space, &[(Factor::Spin(site), pauli_local(which))])
}

/// Total spin-excitation operator Σ_i σ^z_i on `space`.
pub fn total_sz(space: &SpaceSpec) -> SparseOp {
    if space.n_spins == 0 {
        return SparseOp::zeros(space);
    }
    let mut acc = SparseOp::zeros(space);
    for site in 0..space.n_spins {
        acc = acc.add(&pauli_op(space, site, Pauli::Z).unwrap()).unwrap();
    }
    acc
}

/// Oscillator operator flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BosonOp {
    Create,
    Annihilate,
    Number,
}

pub fn boson_local(levels: usize, which: BosonOp) -> CsrMatrix {
    let mut trip = Vec::new();
    match which {
        BosonOp::Annihilate => {
            for n in 1..levels {
                trip.push((n - 1, n, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
        BosonOp::Create => {
            for n in 1..levels {
                trip.push((n, n - 1, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
        BosonOp::Number => {
            for n in 1..levels {
                trip.push((n, n, C64::new(n as f64, 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(levels, levels, trip)
}

/// Truncated-oscillator operator embedded in `space`.
pub fn boson_op(space: &SpaceSpec, which: BosonOp) -> Result<SparseOp> {
    if !space.has_boson() {
        return Err(Error::NoBosonFactor);
    }
    if space.boson_levels < 2 {
        return Err(Error::InvalidParam("boson factor needs at least 2 levels".into()));
    }
    embed(space, &[(Factor::Boson, boson_local(space.boson_levels, which))])
}

/// Tensor factor of a composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Spin(usize),
    Boson,
}

/// Kronecker embedding of site-local operators into the global basis
/// ordering (site 1 most significant, boson last). Unspecified factors get
/// identities; placements must be disjoint. Only defined on unsectored
/// spaces.
pub fn embed(space: &SpaceSpec, placements: &[(Factor, CsrMatrix)]) -> Result<SparseOp> {
    if space.sector.is_some() {
        return Err(Error::SectorViolation(
            "embed works in the unsectored space; project afterwards".into(),
        ));
    }
    let mut spin_slots: Vec<Option<&CsrMatrix>> = vec![None; space.n_spins];
    let mut boson_slot: Option<&CsrMatrix> = None;
    for (f, m) in placements {
        match *f {
            Factor::Spin(site) => {
                space.check_site(site)?;
                if spin_slots[site].is_some() {
                    return Err(Error::InvalidParam(format!("site {} placed twice", site)));
                }
                if m.nrows != 2 || m.ncols != 2 {
                    return Err(Error::DimensionMismatch("spin-local operator must be 2x2".into()));
                }
                spin_slots[site] = Some(m);
            }
            Factor::Boson => {
                if !space.has_boson() {
                    return Err(Error::NoBosonFactor);
                }
                if boson_slot.is_some() {
                    return Err(Error::InvalidParam("boson factor placed twice".into()));
                }
                let l = space.boson_levels;
                if m.nrows != l || m.ncols != l {
                    return Err(Error::DimensionMismatch(format!(
                        "boson-local operator must be {}x{}",
                        l, l
                    )));
                }
                boson_slot = Some(m);
            }
        }
    }
    let mut acc = CsrMatrix::identity(1);
    for slot in &spin_slots {
        match slot {
            Some(m) => acc = acc.kron(m),
            None => acc = acc.kron(&CsrMatrix::identity(2)),
        }
    }
    if space.has_boson() {
        match boson_slot {
            Some(m) => acc = acc.kron(m),
            None => acc = acc.kron(&CsrMatrix::identity(space.boson_dim())),
        }
    }
    SparseOp::new(space.clone(), acc)
}

fn project_to_sector(op: &SparseOp, n_s: usize) -> Result<SparseOp> {
    let space = &op.space;
    let target = space.sectored(n_s)?;
    let bits = target.sector_bits();
    let bdim = space.boson_dim();
    // unsectored spin index -> sector index
    let mut lookup = vec![usize::MAX; space.spin_dim()];
    for (k, &b) in bits.iter().enumerate() {
        lookup[b as usize] = k;
    }
    let mut trip = Vec::new();
    for (r, c, v) in op.mat.iter() {
        let (sr, br) = space.split_index(r);
        let (sc, bc) = space.split_index(c);
        let (pr, pc) = (lookup[sr], lookup[sc]);
        if pr != usize::MAX && pc != usize::MAX {
            trip.push((pr * bdim + br, pc * bdim + bc, v));
        }
    }
    SparseOp::new(target.clone(), CsrMatrix::from_triplets(target.dim(), target.dim(), trip))
}

/// Express an excitation-conserving operator in the `n_s`-sector basis.
///
/// Fails when the operator does not commute with Σ_i σ^z_i; use
/// [`sector_project_truncating`] to discard the sector-breaking part
/// explicitly.
pub fn sector_project(op: &SparseOp, n_s: usize) -> Result<SparseOp> {
    if op.space.sector.is_some() {
        return Err(Error::SectorViolation("operator is already sector-restricted".into()));
    }
    let defect = op.conservation_defect();
    if defect > CONSERVATION_TOL {
        return Err(Error::NonConserving { norm: defect });
    }
    project_to_sector(op, n_s)
}

/// Sector restriction of an arbitrary operator, silently dropping matrix
/// elements that leave the sector.
pub fn sector_project_truncating(op: &SparseOp, n_s: usize) -> Result<SparseOp> {
    if op.space.sector.is_some() {
        return Err(Error::SectorViolation("operator is already sector-restricted".into()));
    }
    project_to_sector(op, n_s)
}

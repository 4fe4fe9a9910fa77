//! Composite spin ⊗ boson Hilbert-space bookkeeping.
//!
//! Basis ordering convention, fixed once for the whole crate:
//!
//! * the spin factor is most significant, the boson factor least significant,
//!   so a global index is `spin_index * boson_levels + boson_index`;
//! * within the spin factor, site 1 is the most significant bit and `|↑⟩`
//!   maps to bit value 0, so the all-up product state has spin index 0;
//! * a fixed-excitation sector is ordered lexicographically over the
//!   occupation bitstrings, which with the encoding above is simply numeric
//!   order of the unsectored spin indices.

use crate::error::{Error, Result};

/// Binomial coefficient, exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Dimensions and basis ordering of a composite spin ⊗ boson space.
///
/// `boson_levels == 0` means there is no boson factor. `sector` restricts the
/// spin factor to states with exactly `n_s` up spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    pub n_spins: usize,
    pub boson_levels: usize,
    pub sector: Option<usize>,
}

impl SpaceSpec {
    pub fn new(n_spins: usize, boson_levels: usize) -> Self {
        SpaceSpec { n_spins, boson_levels, sector: None }
    }

    pub fn with_sector(n_spins: usize, boson_levels: usize, n_s: usize) -> Result<Self> {
        if n_s > n_spins {
            return Err(Error::InvalidParam(format!(
                "sector {} exceeds spin count {}",
                n_s, n_spins
            )));
        }
        Ok(SpaceSpec { n_spins, boson_levels, sector: Some(n_s) })
    }

    /// Spin-only copy of this space (drops the boson factor).
    pub fn spin_only(&self) -> Self {
        SpaceSpec { n_spins: self.n_spins, boson_levels: 0, sector: self.sector }
    }

    /// Same spin content, restricted to the `n_s` sector.
    pub fn sectored(&self, n_s: usize) -> Result<Self> {
        SpaceSpec::with_sector(self.n_spins, self.boson_levels, n_s)
    }

    pub fn has_boson(&self) -> bool {
        self.boson_levels > 0
    }

    /// Dimension of the spin factor.
    pub fn spin_dim(&self) -> usize {
        match self.sector {
            Some(n_s) => binomial(self.n_spins, n_s),
            None => 1usize << self.n_spins,
        }
    }

    /// Dimension of the boson factor (1 when absent).
    pub fn boson_dim(&self) -> usize {
        self.boson_levels.max(1)
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        self.spin_dim() * self.boson_dim()
    }

    /// Split a global index into (spin index, boson index).
    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        let b = self.boson_dim();
        (idx / b, idx % b)
    }

    /// Combine a spin index and boson index into a global index.
    pub fn join_index(&self, spin: usize, boson: usize) -> usize {
        spin * self.boson_dim() + boson
    }

    /// All spin bitstrings of the sector, in basis order. For unsectored
    /// spaces this is just `0..2^N`.
    pub fn sector_bits(&self) -> Vec<u64> {
        match self.sector {
            None => (0..(1u64 << self.n_spins)).collect(),
            Some(n_s) => {
                let down = (self.n_spins - n_s) as u32;
                (0..(1u64 << self.n_spins))
                    .filter(|b| b.count_ones() == down)
                    .collect()
            }
        }
    }

    /// Spin-basis index of an occupation bitstring, if it lies in this space.
    pub fn spin_index_of_bits(&self, bits: u64) -> Option<usize> {
        match self.sector {
            None => {
                if bits < (1u64 << self.n_spins) {
                    Some(bits as usize)
                } else {
                    None
                }
            }
            Some(n_s) => {
                if bits.count_ones() as usize != self.n_spins - n_s {
                    return None;
                }
                let basis = self.sector_bits();
                basis.binary_search(&bits).ok()
            }
        }
    }

    /// True when the bit at `site` (0-based) is up.
    pub fn site_is_up(&self, bits: u64, site: usize) -> bool {
        bits & Self::site_mask(self.n_spins, site) == 0
    }

    /// Bit mask of `site` (0-based) under the site-1-most-significant layout.
    pub fn site_mask(n_spins: usize, site: usize) -> u64 {
        1u64 << (n_spins - 1 - site)
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_spins {
            Err(Error::SiteOutOfRange { site, n_spins: self.n_spins })
        } else {
            Ok(())
        }
    }
}

/// Bitstring of a product state given the set of up sites (0-based).
pub fn bits_from_up_sites(n_spins: usize, up_sites: &[usize]) -> u64 {
    let mut bits = (1u64 << n_spins) - 1;
    for &s in up_sites {
        bits &= !SpaceSpec::site_mask(n_spins, s);
    }
    bits
}

/// Render a spin bitstring as e.g. `↑↓↓`.
pub fn bits_to_arrows(n_spins: usize, bits: u64) -> String {
    (0..n_spins)
        .map(|s| if bits & SpaceSpec::site_mask(n_spins, s) == 0 { '↑' } else { '↓' })
        .collect()
}

use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer frequency index, padded with zeros beyond the active dimension.
pub type Freq = [i32; 3];

/// Upper bound on `M^d` for any physical grid.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Frequency lattice of a periodic cell.
///
/// `Integer` gives the usual frequencies `k/L`. `HalfShifted` uses
/// `(k + 1/2)/L` on every axis, i.e. functions that flip sign across the
/// cell; it has no zero frequency and approximates `R^d` band-limited
/// problems without a spurious constant mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    Integer,
    HalfShifted,
}

impl Lattice {
    pub fn offset(self) -> f64 {
        match self {
            Lattice::Integer => 0.0,
            Lattice::HalfShifted => 0.5,
        }
    }
}

/// Dimension, frequency cutoff, physical resolution and cell length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    /// Euclidean cutoff on the lattice index `|k + offset| <= n_cut`.
    #[serde(rename = "N")]
    pub n_cut: usize,
    /// Grid points per axis.
    #[serde(rename = "M")]
    pub m: usize,
    /// Cell side length (1 on the torus).
    #[serde(rename = "L")]
    pub length: f64,
    pub lattice: Lattice,
}

/// Smallest power of two `>= max(2N + 2, ceil(p) N + 2)`.
pub fn default_resolution(n_cut: usize, p: f64) -> usize {
    let need = (2 * n_cut + 2).max(p.max(2.0).ceil() as usize * n_cut + 2);
    need.next_power_of_two()
}

impl GridSpec {
    pub fn new(d: usize, n_cut: usize, m: usize, length: f64, lattice: Lattice) -> Result<Self> {
        let grid = GridSpec {
            d,
            n_cut,
            m,
            length,
            lattice,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Unit torus `T^d` with an explicit resolution.
    pub fn torus(d: usize, n_cut: usize, m: usize) -> Result<Self> {
        Self::new(d, n_cut, m, 1.0, Lattice::Integer)
    }

    /// Unit torus with the default resolution for `L^p` work.
    pub fn torus_for(d: usize, n_cut: usize, p: f64) -> Result<Self> {
        Self::torus(d, n_cut, default_resolution(n_cut, p))
    }

    /// Half-shifted cell of side `length` holding every frequency `|xi| <= 1`.
    pub fn band_limited_box(d: usize, length: f64, p: f64) -> Result<Self> {
        if !(length >= 1.0) {
            return Err(Error::Config(format!("box side {length} must be at least 1")));
        }
        let n_cut = length.round() as usize;
        if (n_cut as f64 - length).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "band-limited box side {length} must be an integer"
            )));
        }
        Self::new(d, n_cut, default_resolution(n_cut, p), length, Lattice::HalfShifted)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::Config(format!("dimension {} outside 1..=3", self.d)));
        }
        if self.m < 2 * self.n_cut + 2 {
            return Err(Error::Config(format!(
                "grid too small: M = {} < 2N + 2 = {}",
                self.m,
                2 * self.n_cut + 2
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Config(format!("cell length {} must be positive", self.length)));
        }
        match self.m.checked_pow(self.d as u32) {
            Some(points) if points <= MAX_GRID_POINTS => Ok(()),
            _ => Err(Error::Config(format!(
                "grid {}^{} exceeds the {} point limit",
                self.m, self.d, MAX_GRID_POINTS
            ))),
        }
    }

    pub fn points(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    /// Cell volume `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.d as i32)
    }

    pub fn with_resolution(&self, m: usize) -> Result<Self> {
        Self::new(self.d, self.n_cut, m, self.length, self.lattice)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.d, self.n_cut, self.m, length, self.lattice)
    }

    pub fn modes(&self) -> Arc<ModeTable> {
        ModeTable::shared(self.d, self.n_cut, self.lattice)
    }
}

/// Lattice indices inside the cutoff ball, in lexicographic order.
#[derive(Debug, PartialEq)]
pub struct ModeTable {
    pub d: usize,
    pub n_cut: usize,
    pub lattice: Lattice,
    pub indices: Vec<Freq>,
    /// `|k + offset|` for each index.
    pub radii: Vec<f64>,
}

impl ModeTable {
    fn build(d: usize, n_cut: usize, lattice: Lattice) -> Self {
        let off = lattice.offset();
        let n = n_cut as i32;
        let range = |axis: usize| if axis < d { -n - 1..=n + 1 } else { 0..=0 };
        let limit = n_cut as f64 + 1e-9;
        let mut indices = Vec::new();
        let mut radii = Vec::new();
        for a in range(0) {
            for b in range(1) {
                for c in range(2) {
                    let k = [a, b, c];
                    let r2: f64 = (0..d).map(|i| (k[i] as f64 + off).powi(2)).sum();
                    let r = r2.sqrt();
                    if r <= limit {
                        indices.push(k);
                        radii.push(r);
                    }
                }
            }
        }
        ModeTable {
            d,
            n_cut,
            lattice,
            indices,
            radii,
        }
    }

    /// Shared table, built once per `(d, N, lattice)`.
    pub fn shared(d: usize, n_cut: usize, lattice: Lattice) -> Arc<ModeTable> {
        type Cache = Mutex<HashMap<(usize, usize, Lattice), Arc<ModeTable>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("mode table cache poisoned");
        guard
            .entry((d, n_cut, lattice))
            .or_insert_with(|| Arc::new(ModeTable::build(d, n_cut, lattice)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of the zero index, present only on the integer lattice.
    pub fn zero_position(&self) -> Option<usize> {
        match self.lattice {
            Lattice::Integer => self.indices.iter().position(|k| *k == [0, 0, 0]),
            Lattice::HalfShifted => None,
        }
    }

    pub fn position(&self, k: &Freq) -> Option<usize> {
        self.indices.binary_search(k).ok()
    }

    /// Shifted index `k + offset` as a real vector.
    pub fn shifted(&self, i: usize) -> [f64; 3] {
        let off = self.lattice.offset();
        let k = self.indices[i];
        let mut v = [0.0; 3];
        for (axis, slot) in v.iter_mut().enumerate().take(self.d) {
            *slot = k[axis] as f64 + off;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_rule() {
        assert_eq!(default_resolution(5, 2.0), 16);
        assert_eq!(default_resolution(64, 6.0), 512);
        assert_eq!(default_resolution(128, 8.0), 2048);
        assert_eq!(default_resolution(1, 2.0), 4);
    }

    #[test]
    fn rejects_small_grid() {
        assert!(matches!(GridSpec::torus(1, 4, 9), Err(Error::Config(_))));
        assert!(GridSpec::torus(1, 4, 10).is_ok());
    }

    #[test]
    fn ball_is_euclidean() {
        let table = ModeTable::shared(2, 2, Lattice::Integer);
        assert!(table.position(&[1, 1, 0]).is_some());
        assert!(table.position(&[2, 0, 0]).is_some());
        assert!(table.position(&[2, 1, 0]).is_none());
        // 1 + 4 + 4 + 4 (|k|=√2 corners) + 4 (|k|=2 axes)
        assert_eq!(table.len(), 13);
    }

    #[test]
    fn half_shifted_line_has_2n_modes() {
        let table = ModeTable::shared(1, 8, Lattice::HalfShifted);
        assert_eq!(table.len(), 16);
        assert!(table.zero_position().is_none());
        assert!(table.radii.iter().all(|r| *r <= 8.0 && *r >= 0.5));
    }

    #[test]
    fn indices_are_sorted() {
        let table = ModeTable::shared(3, 3, Lattice::Integer);
        assert!(table.indices.windows(2).all(|w| w[0] < w[1]));
    }
}

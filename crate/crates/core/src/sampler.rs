//! Truncated fractional Gaussian free fields and the Brownian mode paths
//! that generate them.

use std::sync::Arc;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{complex_normal, mode_stream, StreamTag};
use crate::spectral::{Freq, GridSpec, Lattice, ModeTable, SpectralField};

/// Default number of Brownian time steps on `[0, 1]`.
pub const DEFAULT_STEPS: usize = 256;

#[derive(Debug, Clone)]
pub struct FieldSample {
    pub field: SpectralField,
    pub seed: u64,
    pub index: u64,
    pub params: ModelParams,
    pub n_cut: usize,
}

/// Torus grid used for fields at cutoff `n_cut`.
pub fn field_grid(params: &ModelParams, n_cut: usize) -> Result<GridSpec> {
    GridSpec::torus_for(params.d, n_cut, params.p)
}

fn check_cutoff(n_cut: usize) -> Result<()> {
    if n_cut == 0 {
        return Err(Error::Precondition("cutoff N must be at least 1".into()));
    }
    Ok(())
}

/// Draw number `index` of `Y_N`; coefficient `n` is `g_n / symbol(|n|)`.
///
/// Each `g_n` comes from its own stream, so the draws at different cutoffs
/// share all common modes.
pub fn sample_gff(params: &ModelParams, n_cut: usize, seed: u64, index: u64) -> Result<FieldSample> {
    params.validate()?;
    check_cutoff(n_cut)?;
    let grid = field_grid(params, n_cut)?;
    let mean_zero = !params.includes_zero_mode();
    let field = SpectralField::from_fn(grid, mean_zero, |k, xi| {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if mean_zero && r == 0.0 {
            return Complex64::default();
        }
        let mut rng = mode_stream(seed, index, k, StreamTag::Gff);
        complex_normal(&mut rng) / params.symbol(r)
    });
    Ok(FieldSample {
        field,
        seed,
        index,
        params: *params,
        n_cut,
    })
}

/// Streams the `T` increments of the complex Brownian motion of mode `k`.
pub struct IncrementStream {
    rng: ChaCha8Rng,
    scale: f64,
}

impl IncrementStream {
    pub fn new(seed: u64, index: u64, k: &Freq, steps: usize) -> Self {
        IncrementStream {
            rng: mode_stream(seed, index, k, StreamTag::Brownian),
            scale: (1.0 / steps as f64).sqrt(),
        }
    }

    pub fn next_increment(&mut self) -> Complex64 {
        complex_normal(&mut self.rng) * self.scale
    }
}

/// Brownian paths `B_n(t_j)`, `t_j = j/T`, for every `|n| <= N` (including `n = 0`).
#[derive(Debug, Clone)]
pub struct BrownianModes {
    pub d: usize,
    pub n_cut: usize,
    pub steps: usize,
    pub modes: Arc<ModeTable>,
    /// `paths[i][j] = B_{n_i}(j/T)`.
    pub paths: Vec<Vec<Complex64>>,
}

impl BrownianModes {
    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| j as f64 / self.steps as f64).collect()
    }

    /// Same modes with every path identically zero.
    pub fn zero(d: usize, n_cut: usize, steps: usize) -> Self {
        let modes = ModeTable::shared(d, n_cut, Lattice::Integer);
        let paths = vec![vec![Complex64::default(); steps + 1]; modes.len()];
        BrownianModes {
            d,
            n_cut,
            steps,
            modes,
            paths,
        }
    }
}

pub fn sample_brownian(d: usize, n_cut: usize, steps: usize, seed: u64, index: u64) -> Result<BrownianModes> {
    check_cutoff(n_cut)?;
    if steps == 0 {
        return Err(Error::Precondition("time grid needs at least one step".into()));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::Precondition(format!("dimension {d} outside 1..=3")));
    }
    let modes = ModeTable::shared(d, n_cut, Lattice::Integer);
    let paths = modes
        .indices
        .iter()
        .map(|k| {
            let mut stream = IncrementStream::new(seed, index, k, steps);
            let mut path = Vec::with_capacity(steps + 1);
            let mut b = Complex64::default();
            path.push(b);
            for _ in 0..steps {
                b += stream.next_increment();
                path.push(b);
            }
            path
        })
        .collect();
    Ok(BrownianModes {
        d,
        n_cut,
        steps,
        modes,
        paths,
    })
}

/// `Y_N(1) = D^{-s} B(1)` restricted to the model's modes.
pub fn terminal_field(b: &BrownianModes, params: &ModelParams, n_cut: usize) -> Result<SpectralField> {
    if b.d != params.d || b.n_cut < n_cut {
        return Err(Error::Config(format!(
            "Brownian modes (d = {}, N = {}) cannot produce d = {}, N = {n_cut}",
            b.d, b.n_cut, params.d
        )));
    }
    let grid = field_grid(params, n_cut)?;
    let mean_zero = !params.includes_zero_mode();
    Ok(SpectralField::from_fn(grid, mean_zero, |k, xi| {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if mean_zero && r == 0.0 {
            return Complex64::default();
        }
        let i = b.modes.position(k).expect("mode table covers the cutoff ball");
        b.paths[i][b.steps] / params.symbol(r)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1, 1.0, 6.0, 1.0).unwrap()
    }

    #[test]
    fn two_active_modes_at_n1() {
        let s = sample_gff(&params(), 1, 3, 0).unwrap();
        assert_eq!(s.field.len(), 3);
        assert_eq!(s.field.get(&[0, 0, 0]), Complex64::default());
        assert!(s.field.get(&[1, 0, 0]).norm() > 0.0);
        assert!(s.field.get(&[-1, 0, 0]).norm() > 0.0);
    }

    #[test]
    fn deterministic_and_nested() {
        let a = sample_gff(&params(), 8, 11, 4).unwrap();
        let b = sample_gff(&params(), 8, 11, 4).unwrap();
        assert_eq!(a.field, b.field);
        let small = sample_gff(&params(), 3, 11, 4).unwrap();
        assert_eq!(a.field.with_cutoff(3, small.field.grid().m).unwrap(), small.field);
    }

    #[test]
    fn massive_includes_zero_mode() {
        let p = params().massive(true);
        let s = sample_gff(&p, 2, 1, 0).unwrap();
        assert!(!s.field.is_mean_zero());
        assert!(s.field.get(&[0, 0, 0]).norm() > 0.0);
    }

    #[test]
    fn brownian_starts_at_zero() {
        let b = sample_brownian(2, 3, 16, 5, 0).unwrap();
        assert!(b.paths.iter().all(|p| p[0] == Complex64::default() && p.len() == 17));
        assert_eq!(b.time_grid()[16], 1.0);
    }

    #[test]
    fn terminal_matches_scaling() {
        let b = sample_brownian(1, 4, 8, 5, 0).unwrap();
        let y = terminal_field(&b, &params(), 4).unwrap();
        let i = b.modes.position(&[2, 0, 0]).unwrap();
        assert!((y.get(&[2, 0, 0]) - b.paths[i][8] / (4.0 * PI)).norm() < 1e-15);
        let zero = terminal_field(&BrownianModes::zero(1, 4, 8), &params(), 4).unwrap();
        assert!(zero.coeffs().iter().all(|c| c.norm() == 0.0));
        assert!(terminal_field(&b, &params(), 5).is_err());
    }
}

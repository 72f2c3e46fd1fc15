use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{GridSpec, Lattice, ModeTable};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place FFT over every axis of an `m^d` row-major array.
///
/// `inverse = true` computes `sum_k a_k e^{+2πi k·j/m}`.
pub fn fft_nd(data: &mut [Complex64], d: usize, m: usize, inverse: bool) {
    debug_assert_eq!(data.len(), m.pow(d as u32));
    let fft = PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(m)
        } else {
            planner.plan_fft_forward(m)
        }
    });
    if d == 1 {
        fft.process(data);
        return;
    }
    let mut line = vec![Complex64::default(); m];
    let total = data.len();
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, value) in line.iter().enumerate() {
                    data[base + i * stride] = *value;
                }
            }
        }
    }
}

/// Precomputed scatter/gather map between a mode table and an `m^d` grid.
#[derive(Debug, Clone)]
pub struct Transform {
    pub d: usize,
    pub m: usize,
    bins: Vec<usize>,
    /// Per-axis phase `e^{2πi·offset·x_j/L}` with centred `x_j`; `None` on the integer lattice.
    phase: Option<Vec<Complex64>>,
}

impl Transform {
    pub fn new(grid: &GridSpec, modes: &ModeTable, m: usize) -> Self {
        assert!(m >= 2 * modes.n_cut + 2, "resolution below Nyquist margin");
        let d = grid.d;
        let bins = modes
            .indices
            .iter()
            .map(|k| {
                (0..d).fold(0usize, |acc, axis| {
                    acc * m + k[axis].rem_euclid(m as i32) as usize
                })
            })
            .collect();
        let phase = match grid.lattice {
            Lattice::Integer => None,
            Lattice::HalfShifted => Some(
                (0..m)
                    .map(|j| {
                        let centred = if 2 * j < m { j as f64 } else { j as f64 - m as f64 };
                        Complex64::from_polar(1.0, PI * centred / m as f64)
                    })
                    .collect(),
            ),
        };
        Transform { d, m, bins, phase }
    }

    pub fn points(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    fn apply_phase(&self, data: &mut [Complex64], conjugate: bool) {
        let Some(phase) = &self.phase else { return };
        let m = self.m;
        for (idx, value) in data.iter_mut().enumerate() {
            let mut rest = idx;
            let mut factor = Complex64::new(1.0, 0.0);
            for _ in 0..self.d {
                factor *= phase[rest % m];
                rest /= m;
            }
            *value *= if conjugate { factor.conj() } else { factor };
        }
    }

    /// Samples `sum_k c_k e^{2πi(k+offset)·x_j/L}` on the grid.
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut data = vec![Complex64::default(); self.points()];
        for (bin, c) in self.bins.iter().zip(coeffs) {
            data[*bin] = *c;
        }
        fft_nd(&mut data, self.d, self.m, true);
        self.apply_phase(&mut data, false);
        data
    }

    /// Discrete coefficients of grid samples restricted to the mode table.
    pub fn to_spectral(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut data = samples.to_vec();
        self.apply_phase(&mut data, true);
        fft_nd(&mut data, self.d, self.m, false);
        let scale = 1.0 / self.points() as f64;
        self.bins.iter().map(|bin| data[*bin] * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_then_forward_is_identity_2d() {
        let m = 8;
        let mut data: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1))
            .collect();
        let orig = data.clone();
        fft_nd(&mut data, 2, m, true);
        fft_nd(&mut data, 2, m, false);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / (m * m) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn axis_order_matches_direct_sum_3d() {
        let m = 4;
        let mut data = vec![Complex64::default(); m * m * m];
        // single mode at (1, 2, 3) in row-major order
        data[(1 * m + 2) * m + 3] = Complex64::new(1.0, 0.0);
        fft_nd(&mut data, 3, m, true);
        for (idx, value) in data.iter().enumerate() {
            let (a, b, c) = (idx / (m * m), (idx / m) % m, idx % m);
            let arg = 2.0 * PI * (a + 2 * b + 3 * c) as f64 / m as f64;
            assert!((value - Complex64::from_polar(1.0, arg)).norm() < 1e-12);
        }
    }
}

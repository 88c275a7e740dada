//! Trigonometric-interpolation machinery on a periodic rectangular grid.
//!
//! Grids are stored row-major over `(y, x)`: index `y * nx + x`. A grid of
//! samples is identified with its trigonometric interpolant; the Nyquist
//! coefficient is represented as a cosine (split evenly between `±n/2`), which
//! is why its derivative is zero and why the upsampler splits it.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::algebra::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Derivative {
    /// `½(∂x + i∂y)`
    Dbar,
    /// `½(∂x − i∂y)`
    D,
}

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, nx: usize, ny: usize) -> Self {
        Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }
}

pub(crate) struct Spectral {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    coarse: Plans,
    fine: Plans,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

/// Signed wavenumber index of DFT bin `j` for length `n`.
pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Interpolant terms of DFT bin `j`: `(signed frequency, weight)`.
pub(crate) fn bin_terms(j: usize, n: usize) -> [(i64, f64); 2] {
    if j == n / 2 {
        let h = (n / 2) as i64;
        [(h, 0.5), (-h, 0.5)]
    } else {
        [(signed_index(j, n), 1.0), (0, 0.0)]
    }
}

fn fft2(data: &mut [Complex64], nx: usize, ny: usize, fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
    fx.process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            t[x * ny + y] = data[y * nx + x];
        }
    }
    fy.process(&mut t);
    for y in 0..ny {
        for x in 0..nx {
            data[y * nx + x] = t[x * ny + y];
        }
    }
}

impl Spectral {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let mut planner = FftPlanner::new();
        let coarse = Plans::new(&mut planner, nx, ny);
        let fine = Plans::new(&mut planner, 2 * nx, 2 * ny);
        Spectral {
            nx,
            ny,
            lx,
            ly,
            coarse,
            fine,
        }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Unnormalized forward DFT.
    pub fn forward(&self, data: &mut [Complex64]) {
        fft2(data, self.nx, self.ny, &*self.coarse.fwd_x, &*self.coarse.fwd_y);
    }

    /// Normalized inverse DFT.
    pub fn inverse(&self, data: &mut [Complex64]) {
        fft2(data, self.nx, self.ny, &*self.coarse.inv_x, &*self.coarse.inv_y);
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Normalized interpolation coefficients `c` with `f(x_j) = Σ c e^{ik·x_j}`.
    pub fn coefficients(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut c = f.to_vec();
        self.forward(&mut c);
        let s = 1.0 / (self.nx * self.ny) as f64;
        c.iter_mut().for_each(|z| *z *= s);
        c
    }

    fn wavenumber(j: usize, n: usize, period: f64) -> f64 {
        if n % 2 == 0 && j == n / 2 {
            0.0
        } else {
            2.0 * std::f64::consts::PI * signed_index(j, n) as f64 / period
        }
    }

    pub fn derivative(&self, f: &[Complex64], op: Derivative) -> Vec<Complex64> {
        let mut c = f.to_vec();
        self.forward(&mut c);
        let i = Complex64::new(0.0, 1.0);
        for jy in 0..self.ny {
            let ky = Self::wavenumber(jy, self.ny, self.ly);
            for jx in 0..self.nx {
                let kx = Self::wavenumber(jx, self.nx, self.lx);
                let m = match op {
                    Derivative::Dbar => 0.5 * i * Complex64::new(kx, ky),
                    Derivative::D => 0.5 * i * Complex64::new(kx, -ky),
                };
                c[jy * self.nx + jx] *= m;
            }
        }
        self.inverse(&mut c);
        c
    }

    /// Applies a real Fourier multiplier `m(kx, ky)`.
    pub fn filter(&self, f: &[Complex64], m: impl Fn(f64, f64) -> f64) -> Vec<Complex64> {
        let mut c = f.to_vec();
        self.forward(&mut c);
        for jy in 0..self.ny {
            let ky = Self::wavenumber(jy, self.ny, self.ly);
            for jx in 0..self.nx {
                let kx = Self::wavenumber(jx, self.nx, self.lx);
                c[jy * self.nx + jx] *= m(kx, ky);
            }
        }
        self.inverse(&mut c);
        c
    }

    /// Values of the interpolant on the doubled grid.
    pub fn upsample(&self, f: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let (fx, fy) = (2 * nx, 2 * ny);
        let c = self.coefficients(f);
        let mut fine = vec![Complex64::new(0.0, 0.0); fx * fy];
        let slot = |k: i64, n: usize| -> usize { k.rem_euclid(n as i64) as usize };
        for jy in 0..ny {
            for (ky, wy) in bin_terms(jy, ny) {
                if wy == 0.0 {
                    continue;
                }
                for jx in 0..nx {
                    for (kx, wx) in bin_terms(jx, nx) {
                        if wx == 0.0 {
                            continue;
                        }
                        fine[slot(ky, fy) * fx + slot(kx, fx)] += c[jy * nx + jx] * (wx * wy);
                    }
                }
            }
        }
        fft2(&mut fine, fx, fy, &*self.fine.inv_x, &*self.fine.inv_y);
        fine
    }

    /// Spectral truncation of a doubled-grid field back to this grid.
    pub fn downsample(&self, fine: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let (fx, fy) = (2 * nx, 2 * ny);
        let mut spec = fine.to_vec();
        fft2(&mut spec, fx, fy, &*self.fine.fwd_x, &*self.fine.fwd_y);
        let s = 1.0 / (fx * fy) as f64;
        let slot = |k: i64, n: usize| -> usize { k.rem_euclid(n as i64) as usize };
        let mut c = vec![Complex64::new(0.0, 0.0); nx * ny];
        for jy in 0..ny {
            for (ky, wy) in bin_terms(jy, ny) {
                if wy == 0.0 {
                    continue;
                }
                for jx in 0..nx {
                    for (kx, wx) in bin_terms(jx, nx) {
                        if wx == 0.0 {
                            continue;
                        }
                        // Nyquist bins collect both fine-grid halves.
                        c[jy * nx + jx] += spec[slot(ky, fy) * fx + slot(kx, fx)] * s;
                    }
                }
            }
        }
        // c now holds normalized coefficients; convert to grid values.
        fft2(&mut c, nx, ny, &*self.coarse.inv_x, &*self.coarse.inv_y);
        c
    }

    /// Per-dimension interpolant phases `e^{ikx}` (cosine for the Nyquist bin).
    fn basis_1d(n: usize, period: f64, x: f64) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                bin_terms(j, n)
                    .iter()
                    .filter(|(_, w)| *w != 0.0)
                    .map(|&(k, w)| {
                        Complex64::from_polar(w, 2.0 * std::f64::consts::PI * k as f64 * x / period)
                    })
                    .sum()
            })
            .collect()
    }

    /// Evaluates the interpolant with coefficients `c` at an arbitrary point.
    pub fn eval_coefficients(&self, c: &[Complex64], x: f64, y: f64) -> Complex64 {
        let bx = Self::basis_1d(self.nx, self.lx, x);
        let by = Self::basis_1d(self.ny, self.ly, y);
        let mut acc = Complex64::new(0.0, 0.0);
        for jy in 0..self.ny {
            let row = &c[jy * self.nx..(jy + 1) * self.nx];
            let s: Complex64 = row.iter().zip(&bx).map(|(a, b)| a * b).sum();
            acc += s * by[jy];
        }
        acc
    }
}

pub(crate) fn split_entries(grid: &[Mat2]) -> [Vec<Complex64>; 4] {
    std::array::from_fn(|e| grid.iter().map(|m| m.0[e]).collect())
}

pub(crate) fn join_entries(entries: [Vec<Complex64>; 4]) -> Vec<Mat2> {
    let n = entries[0].len();
    (0..n)
        .map(|i| Mat2([entries[0][i], entries[1][i], entries[2][i], entries[3][i]]))
        .collect()
}

pub(crate) fn map_entries(
    grid: &[Mat2],
    f: impl Fn(&[Complex64]) -> Vec<Complex64>,
) -> Vec<Mat2> {
    let e = split_entries(grid);
    join_entries([f(&e[0]), f(&e[1]), f(&e[2]), f(&e[3])])
}

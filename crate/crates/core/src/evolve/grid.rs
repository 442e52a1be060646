//! Rectangular periodic grids over a subset of the six coordinates and the
//! spectral transforms on them.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::jet::NVARS;
use crate::linalg::C64;

/// Desk-scale cap on the number of grid sites.
pub const MAX_SITES: usize = 1 << 22;
/// Spinor components per site.
pub const COMPONENTS: usize = 8;

/// Active axes are 1-based. Inactive axes carry zero momentum and are not
/// sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub active_axes: Vec<usize>,
    pub n: Vec<usize>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn one_axis(axis: usize, n: usize, l: f64, dt: f64, steps: usize) -> Result<Self> {
        Self {
            active_axes: vec![axis],
            n: vec![n],
            l: vec![l],
            dt,
            steps,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let d = self.active_axes.len();
        if !(1..=3).contains(&d) {
            return Err(Error::Grid(format!("1 to 3 active axes required, got {d}")));
        }
        if self.n.len() != d || self.l.len() != d {
            return Err(Error::Grid("n and L need one entry per active axis".into()));
        }
        for (i, &a) in self.active_axes.iter().enumerate() {
            if !(1..=NVARS).contains(&a) {
                return Err(Error::IndexOutOfRange {
                    what: "grid axis",
                    index: a,
                    lo: 1,
                    hi: NVARS,
                });
            }
            if self.active_axes[..i].contains(&a) {
                return Err(Error::Grid(format!("axis {a} listed twice")));
            }
        }
        if let Some(n) = self.n.iter().find(|n| !n.is_power_of_two() || **n < 2) {
            return Err(Error::Grid(format!("points per axis must be a power of two ≥ 2, got {n}")));
        }
        let sites = self.n.iter().try_fold(1usize, |acc, n| acc.checked_mul(*n));
        if !matches!(sites, Some(s) if s <= MAX_SITES) {
            return Err(Error::Grid(format!("grid exceeds {MAX_SITES} sites")));
        }
        if self.l.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Grid("box lengths must be positive".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Grid("dt must be positive".into()));
        }
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.active_axes.len()
    }

    pub fn sites(&self) -> usize {
        self.n.iter().product()
    }

    pub fn spacing(&self, j: usize) -> f64 {
        self.l[j] / self.n[j] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|j| self.spacing(j)).product()
    }

    /// 0-based coordinate index of active axis `j`.
    pub fn axis_var(&self, j: usize) -> usize {
        self.active_axes[j] - 1
    }

    /// Position of active axis `j` for the active index `j` of the grid, in `[-L/2, L/2)`.
    pub fn coordinate(&self, j: usize, i: usize) -> f64 {
        -0.5 * self.l[j] + i as f64 * self.spacing(j)
    }

    pub fn wavenumber(&self, j: usize, i: usize) -> f64 {
        let n = self.n[j] as isize;
        let i = i as isize;
        let s = if i < n / 2 { i } else { i - n };
        2.0 * PI / self.l[j] * s as f64
    }

    /// Per-axis indices of a site (row-major, last active axis fastest).
    pub fn indices(&self, mut site: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for j in (0..self.dims()).rev() {
            out[j] = site % self.n[j];
            site /= self.n[j];
        }
        out
    }

    /// Six-vector of positions for a site; inactive axes at 0.
    pub fn position(&self, site: usize) -> [f64; NVARS] {
        let idx = self.indices(site);
        let mut x = [0.0; NVARS];
        for j in 0..self.dims() {
            x[self.axis_var(j)] = self.coordinate(j, idx[j]);
        }
        x
    }

    /// Six-vector of wavenumbers for a site of the transformed grid.
    pub fn momentum(&self, site: usize) -> [f64; NVARS] {
        let idx = self.indices(site);
        let mut k = [0.0; NVARS];
        for j in 0..self.dims() {
            k[self.axis_var(j)] = self.wavenumber(j, idx[j]);
        }
        k
    }

    /// Largest `|k|` component on the grid per active axis.
    pub fn k_max(&self) -> Vec<f64> {
        (0..self.dims()).map(|j| PI / self.spacing(j)).collect()
    }
}

/// Multi-dimensional FFT over the active axes of a site-major spinor field.
#[derive(Clone)]
pub struct SpectralTransform {
    spec: GridSpec,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl SpectralTransform {
    pub fn new(spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            spec: spec.clone(),
            forward: spec.n.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: spec.n.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Unnormalised forward transform, `ψ̂(k) = Σ_x ψ(x) e^{-ikx}`.
    pub fn forward(&self, psi: &mut [C64], exec: Exec) {
        self.run(psi, &self.forward, exec, 1.0);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, psi: &mut [C64], exec: Exec) {
        let scale = 1.0 / self.spec.sites() as f64;
        self.run(psi, &self.inverse, exec, scale);
    }

    fn run(&self, psi: &mut [C64], plans: &[Arc<dyn Fft<f64>>], exec: Exec, scale: f64) {
        let sites = self.spec.sites();
        assert_eq!(psi.len(), sites * COMPONENTS, "field does not match the grid");
        // component-major copy so every component transforms independently
        let mut planes: Vec<C64> = vec![C64::new(0.0, 0.0); psi.len()];
        for (s, spinor) in psi.chunks_exact(COMPONENTS).enumerate() {
            for (c, v) in spinor.iter().enumerate() {
                planes[c * sites + s] = *v;
            }
        }
        exec.for_each_chunk(&mut planes, sites, |_, plane| self.transform_plane(plane, plans));
        for (s, spinor) in psi.chunks_exact_mut(COMPONENTS).enumerate() {
            for (c, v) in spinor.iter_mut().enumerate() {
                *v = planes[c * sites + s] * scale;
            }
        }
    }

    fn transform_plane(&self, plane: &mut [C64], plans: &[Arc<dyn Fft<f64>>]) {
        let n = &self.spec.n;
        let dims = n.len();
        for j in 0..dims {
            let len = n[j];
            let stride: usize = n[j + 1..].iter().product();
            let outer = plane.len() / (len * stride);
            let mut line = vec![C64::new(0.0, 0.0); len];
            let mut scratch = vec![C64::new(0.0, 0.0); plans[j].get_inplace_scratch_len()];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * len * stride + s;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = plane[base + i * stride];
                    }
                    plans[j].process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        plane[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2() -> GridSpec {
        GridSpec {
            active_axes: vec![1, 4],
            n: vec![8, 16],
            l: vec![4.0, 10.0],
            dt: 0.1,
            steps: 1,
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(GridSpec::one_axis(4, 256, 400.0, 0.3, 10).is_ok());
        assert!(GridSpec::one_axis(4, 100, 400.0, 0.3, 10).is_err());
        assert!(GridSpec::one_axis(7, 64, 400.0, 0.3, 10).is_err());
        assert!(GridSpec::one_axis(1, 64, -1.0, 0.3, 10).is_err());
        let mut s = spec2();
        s.active_axes = vec![1, 1];
        assert!(s.validated().is_err());
        let big = GridSpec {
            active_axes: vec![1, 2, 3],
            n: vec![256, 256, 128],
            l: vec![1.0; 3],
            dt: 0.1,
            steps: 1,
        };
        assert!(big.validated().is_err());
    }

    #[test]
    fn geometry() {
        let s = spec2();
        assert_eq!(s.sites(), 128);
        assert_eq!(s.indices(17), [1, 1, 0]);
        let x = s.position(17);
        assert_eq!(x, [-1.5, 0.0, 0.0, -4.375, 0.0, 0.0]);
        assert!((s.wavenumber(1, 15) + 2.0 * PI / 10.0).abs() < 1e-15);
        assert!((s.wavenumber(1, 8) + PI / s.spacing(1)).abs() < 1e-12);
    }

    #[test]
    fn fourier_round_trip_and_plane_wave() {
        let s = spec2();
        let fft = SpectralTransform::new(&s);
        let mut psi: Vec<C64> = (0..s.sites() * COMPONENTS)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = psi.clone();
        for exec in [Exec::Sequential, Exec::Parallel] {
            fft.forward(&mut psi, exec);
            fft.inverse(&mut psi, exec);
            let err = psi.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
        // e^{ik·x} lands on a single mode
        let target = 2 * 16 + 3;
        let k = s.momentum(target);
        let mut wave: Vec<C64> = (0..s.sites())
            .flat_map(|site| {
                let x = s.position(site);
                let ph = C64::from_polar(1.0, k[0] * x[0] + k[3] * x[3]);
                (0..COMPONENTS).map(move |c| if c == 2 { ph } else { C64::new(0.0, 0.0) })
            })
            .collect();
        fft.forward(&mut wave, Exec::default());
        for site in 0..s.sites() {
            let v = wave[site * COMPONENTS + 2].norm();
            if site == target {
                assert!((v - s.sites() as f64).abs() < 1e-9);
            } else {
                assert!(v < 1e-9);
            }
        }
    }
}

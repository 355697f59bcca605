//! Brillouin-zone reductions over a periodic k-grid: density of states,
//! emitter self-energy, bound states and their overlap with the emitter.

pub mod fit;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::lattice::{BlochSample, LatticeModel, Variant};
use crate::reduce;

pub use fit::{fit_exponential, fit_power_law, ExponentialFit, PowerLawFit};

/// Denominators below this magnitude are treated as poles.
pub const POLE_TOLERANCE: f64 = 1e-14;
/// Imaginary shift applied to pole denominators of bound-state wavefunctions.
pub const WAVEFUNCTION_ETA: f64 = 1e-8;
/// Relative size (in units of J1) below which `omega(k)` is an exact zero mode.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Treatment of grid points sitting exactly on a band touching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModes {
    #[default]
    Include,
    Exclude,
}

/// Bands sampled on `k_i = -π + 2π n / N_i`, stored row-major in `(n1, n2)`.
#[derive(Debug, Clone)]
pub struct BandGrid {
    pub model: LatticeModel,
    pub n1: usize,
    pub n2: usize,
    pub h_i: Vec<f64>,
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
    pub hz: Vec<f64>,
    pub omega_l: Vec<f64>,
    pub omega_u: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

#[inline]
pub fn grid_k(n: usize, len: usize) -> f64 {
    -PI + 2.0 * PI * n as f64 / len as f64
}

impl BandGrid {
    pub fn new(model: LatticeModel, n1: usize, n2: usize) -> Result<Self> {
        model.validate()?;
        if n1 == 0 || n2 == 0 {
            return Err(Error::Domain("grid sizes must be positive".into()));
        }
        let samples: Vec<BlochSample> = (0..n1 * n2)
            .into_par_iter()
            .map(|i| BlochSample::from_pauli(model.pauli((grid_k(i / n2, n1), grid_k(i % n2, n2)))))
            .collect();
        let col = |f: fn(&BlochSample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
        Ok(BandGrid {
            model,
            n1,
            n2,
            h_i: col(|s| s.h_i),
            hx: col(|s| s.hx),
            hy: col(|s| s.hy),
            hz: col(|s| s.hz),
            omega_l: col(|s| s.omega_l),
            omega_u: col(|s| s.omega_u),
            theta: col(|s| s.theta),
            phi: col(|s| s.phi),
        })
    }

    pub fn square(model: LatticeModel, n: usize) -> Result<Self> {
        Self::new(model, n, n)
    }

    /// Number of unit cells.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self, idx: usize) -> (f64, f64) {
        (grid_k(idx / self.n2, self.n1), grid_k(idx % self.n2, self.n2))
    }

    /// Half splitting `omega(k)`.
    #[inline]
    pub fn omega(&self, idx: usize) -> f64 {
        0.5 * (self.omega_u[idx] - self.omega_l[idx])
    }

    pub fn sample(&self, idx: usize) -> BlochSample {
        BlochSample {
            h_i: self.h_i[idx],
            hx: self.hx[idx],
            hy: self.hy[idx],
            hz: self.hz[idx],
            omega_l: self.omega_l[idx],
            omega_u: self.omega_u[idx],
            theta: self.theta[idx],
            phi: self.phi[idx],
        }
    }

    #[inline]
    pub fn is_zero_mode(&self, idx: usize) -> bool {
        self.omega(idx) <= ZERO_MODE_TOLERANCE * self.model.scale()
    }

    pub fn zero_mode_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_zero_mode(i)).count()
    }

    #[inline]
    pub fn included(&self, idx: usize, zm: ZeroModes) -> bool {
        zm == ZeroModes::Include || !self.is_zero_mode(idx)
    }

    /// `(min, max)` of the lower and upper bands over included points.
    pub fn band_ranges(&self, zm: ZeroModes) -> ((f64, f64), (f64, f64)) {
        let mut l = (f64::INFINITY, f64::NEG_INFINITY);
        let mut u = l;
        for i in 0..self.len() {
            if !self.included(i, zm) {
                continue;
            }
            l = (l.0.min(self.omega_l[i]), l.1.max(self.omega_l[i]));
            u = (u.0.min(self.omega_u[i]), u.1.max(self.omega_u[i]));
        }
        (l, u)
    }

    /// Smallest `omega(k)` on the grid, ignoring exact zero modes when asked.
    pub fn min_splitting(&self, zm: ZeroModes) -> f64 {
        (0..self.len())
            .filter(|&i| self.included(i, zm))
            .map(|i| self.omega(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Binned density of states per unit cell; integrates to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
}

impl DosHistogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn integral(&self) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, c)| c * (w[1] - w[0]))
            .sum()
    }

    /// Histogram value of the bin containing `e` (zero outside the range).
    pub fn at(&self, e: f64) -> f64 {
        let (lo, hi) = (self.edges[0], *self.edges.last().unwrap());
        if e < lo || e > hi {
            return 0.0;
        }
        let n = self.counts.len();
        let b = (((e - lo) / self.bin_width()) as usize).min(n - 1);
        self.counts[b]
    }

    /// Gaussian-kernel estimate at `e` with standard deviation `bins` bin widths.
    pub fn smoothed_at(&self, e: f64, bins: f64) -> f64 {
        let w = self.bin_width();
        let s = bins * w;
        let norm = 1.0 / ((2.0 * PI).sqrt() * s);
        self.centers()
            .iter()
            .zip(&self.counts)
            .map(|(c, d)| d * w * norm * (-0.5 * ((e - c) / s).powi(2)).exp())
            .sum()
    }
}

pub fn density_of_states(grid: &BandGrid, n_bins: usize) -> Result<DosHistogram> {
    if n_bins < 2 {
        return Err(Error::Domain(format!("n_bins = {n_bins} < 2")));
    }
    let ((lo, _), (_, hi)) = grid.band_ranges(ZeroModes::Include);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / n_bins as f64;
    let bin = |e: f64| (((e - lo) / width) as usize).min(n_bins - 1);
    let parts: Vec<Vec<u64>> = reduce::chunk_ranges(grid.len())
        .into_par_iter()
        .map(|r| {
            let mut h = vec![0u64; n_bins];
            for i in r {
                h[bin(grid.omega_l[i])] += 1;
                h[bin(grid.omega_u[i])] += 1;
            }
            h
        })
        .collect();
    let mut total = vec![0u64; n_bins];
    for p in parts {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    let scale = 1.0 / (grid.len() as f64 * width);
    Ok(DosHistogram {
        edges: (0..=n_bins).map(|b| lo + b as f64 * width).collect(),
        counts: total.iter().map(|&c| c as f64 * scale).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergyOptions {
    pub sublattice: Sublattice,
    pub zero_modes: ZeroModes,
}

impl Default for SelfEnergyOptions {
    fn default() -> Self {
        SelfEnergyOptions {
            sublattice: Sublattice::A,
            zero_modes: ZeroModes::Include,
        }
    }
}

impl SelfEnergyOptions {
    pub fn excluding_zero_modes() -> Self {
        SelfEnergyOptions {
            zero_modes: ZeroModes::Exclude,
            ..Default::default()
        }
    }
}

#[inline]
fn sign(s: Sublattice) -> f64 {
    match s {
        Sublattice::A => 1.0,
        Sublattice::B => -1.0,
    }
}

/// Emitter self-energy for an emitter on sublattice A.
pub fn self_energy(grid: &BandGrid, z: Complex64, g: f64) -> Result<Complex64> {
    self_energy_with(grid, z, g, SelfEnergyOptions::default())
}

pub fn self_energy_with(
    grid: &BandGrid,
    z: Complex64,
    g: f64,
    opts: SelfEnergyOptions,
) -> Result<Complex64> {
    let s = sign(opts.sublattice);
    let zero = Complex64::new(0.0, 0.0);
    let bad = reduce::sum(grid.len(), 0usize, |i| {
        if !grid.included(i, opts.zero_modes) {
            return 0;
        }
        let w = grid.omega(i);
        let d = (z - grid.h_i[i]) * (z - grid.h_i[i]) - w * w;
        usize::from(d.norm() < POLE_TOLERANCE)
    });
    if bad > 0 {
        return Err(Error::Pole(format!("{bad} grid points resonant with z = {z}")));
    }
    let acc = reduce::sum(grid.len(), zero, |i| {
        if !grid.included(i, opts.zero_modes) {
            return zero;
        }
        let w = grid.omega(i);
        let x = z - grid.h_i[i];
        (x + s * grid.hz[i]) / (x * x - w * w)
    });
    Ok(acc * (g * g / grid.len() as f64))
}

fn secular(grid: &BandGrid, e: f64, delta: f64, g: f64, opts: SelfEnergyOptions) -> Result<f64> {
    Ok(e - delta - self_energy_with(grid, Complex64::new(e, 0.0), g, opts)?.re)
}

/// Intervals of the real axis free of grid eigenvalues, split at `split`.
fn gap_intervals(grid: &BandGrid, zm: ZeroModes, split: Option<f64>) -> Vec<(f64, f64)> {
    let ((l0, l1), (u0, u1)) = grid.band_ranges(zm);
    let mut gaps = vec![(f64::NEG_INFINITY, l0)];
    if l1 < u0 {
        gaps.push((l1, u0));
    }
    gaps.push((u1, f64::INFINITY));
    let mut out = Vec::new();
    for (a, b) in gaps {
        match split {
            Some(s) if s > a && s < b => {
                out.push((a, s));
                out.push((s, b));
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// Solve `E = Δ + Σ(E)` in the spectral gaps of the grid; returns the root closest to `delta`.
pub fn bound_state_energy(grid: &BandGrid, delta: f64, g: f64) -> Result<f64> {
    bound_state_energy_with(grid, delta, g, SelfEnergyOptions::default())
}

pub fn bound_state_energy_with(
    grid: &BandGrid,
    delta: f64,
    g: f64,
    opts: SelfEnergyOptions,
) -> Result<f64> {
    let scale = grid.model.scale();
    let tol = 1e-10 * scale;
    let split = match grid.model.variant {
        Variant::AnisotropicHoneycomb if grid.model.beta1 <= 2.0 => {
            crate::lattice::cone_parameters(&grid.model).ok().map(|c| c.dirac_energy)
        }
        Variant::Mizoguchi => Some(0.0),
        _ => None,
    };
    let reach = 10.0 * scale + delta.abs() + 10.0 * g * g / scale;
    let mut roots = Vec::new();
    if let Some(s) = split {
        if secular(grid, s, delta, g, opts).is_ok_and(|f| f.abs() < tol) {
            roots.push(s);
        }
    }
    for (a, b) in gap_intervals(grid, opts.zero_modes, split) {
        let a = if a.is_finite() { a } else { b - reach };
        let b = if b.is_finite() { b } else { a + reach };
        let pad = |x: f64| {
            let p = 1e-12 * scale.max(x.abs()) + 4.0 * POLE_TOLERANCE / x.abs().max(scale * 1e-6);
            p.min(0.25 * (b - a))
        };
        let (lo, hi) = (a + pad(a), b - pad(b));
        if lo >= hi {
            continue;
        }
        if let Some(r) = bisect(|e| secular(grid, e, delta, g, opts), lo, hi, tol)? {
            roots.push(r);
        }
    }
    roots
        .into_iter()
        .min_by(|x, y| (x - delta).abs().total_cmp(&(y - delta).abs()))
        .ok_or_else(|| Error::NoRoot(format!("no sign change of E - Δ - Σ(E) for Δ = {delta}")))
}

fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    if flo.abs() < tol {
        return Ok(Some(lo));
    }
    let fhi = f(hi)?;
    if fhi.abs() < tol {
        return Ok(Some(hi));
    }
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Photon-dressed emitter eigenstate, normalized together with the emitter amplitude.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub e_bs: f64,
    pub sublattice: Sublattice,
    pub n1: usize,
    pub n2: usize,
    /// Real-space amplitudes on A sites, row-major in `(p1, p2)`.
    pub c_a: Vec<Complex64>,
    pub c_b: Vec<Complex64>,
    pub emitter: f64,
    /// Emitter population `|emitter|^2`.
    pub r0: f64,
}

impl BoundState {
    fn index(&self, p: (i64, i64)) -> usize {
        let a = p.0.rem_euclid(self.n1 as i64) as usize;
        let b = p.1.rem_euclid(self.n2 as i64) as usize;
        a * self.n2 + b
    }

    pub fn a(&self, p: (i64, i64)) -> Complex64 {
        self.c_a[self.index(p)]
    }

    pub fn b(&self, p: (i64, i64)) -> Complex64 {
        self.c_b[self.index(p)]
    }

    /// Amplitude on the sublattice opposite to the emitter.
    pub fn opposite(&self, p: (i64, i64)) -> Complex64 {
        match self.sublattice {
            Sublattice::A => self.b(p),
            Sublattice::B => self.a(p),
        }
    }

    /// `|C(-n, -n)|` on the opposite sublattice for `n` in `range`.
    pub fn diagonal_cut(&self, range: std::ops::RangeInclusive<usize>) -> Vec<(usize, f64)> {
        range
            .map(|n| (n, self.opposite((-(n as i64), -(n as i64))).norm()))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.emitter * self.emitter
            + self.c_a.iter().chain(&self.c_b).map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// Inverse-transform `f(k)` to `(1/N) sum_k f(k) exp(-i k.p)` on the grid.
pub fn to_real_space(values: Vec<Complex64>, n1: usize, n2: usize) -> Vec<Complex64> {
    let mut v = values;
    fft::fft2(&mut v, n1, n2);
    let inv = 1.0 / (n1 * n2) as f64;
    v.par_iter_mut().enumerate().for_each(|(i, c)| {
        let s = if (i / n2 + i % n2) % 2 == 0 { inv } else { -inv };
        *c *= s;
    });
    v
}

pub fn bound_state_wavefunction(
    grid: &BandGrid,
    e_bs: f64,
    sublattice: Sublattice,
    g: f64,
) -> Result<BoundState> {
    let eta = WAVEFUNCTION_ETA * grid.model.scale();
    let s = sign(sublattice);
    let n = grid.len();
    let mut same = vec![Complex64::new(0.0, 0.0); n];
    let mut other = same.clone();
    same.par_iter_mut()
        .zip(other.par_iter_mut())
        .enumerate()
        .for_each(|(i, (fs, fo))| {
            let x = e_bs - grid.h_i[i];
            let w = grid.omega(i);
            let mut d = Complex64::new(x * x - w * w, 0.0);
            if d.norm() < POLE_TOLERANCE {
                d += Complex64::new(0.0, eta);
            }
            *fs = Complex64::new(x + s * grid.hz[i], 0.0) / d;
            *fo = Complex64::new(grid.hx[i], s * grid.hy[i]) / d;
        });
    let mut cs = to_real_space(same, grid.n1, grid.n2);
    let mut co = to_real_space(other, grid.n1, grid.n2);
    let photon: f64 = g * g * cs.iter().chain(&co).map(|c| c.norm_sqr()).sum::<f64>();
    let emitter = 1.0 / (1.0 + photon).sqrt();
    let amp = g * emitter;
    cs.par_iter_mut().chain(co.par_iter_mut()).for_each(|c| *c *= amp);
    let (c_a, c_b) = match sublattice {
        Sublattice::A => (cs, co),
        Sublattice::B => (co, cs),
    };
    Ok(BoundState {
        e_bs,
        sublattice,
        n1: grid.n1,
        n2: grid.n2,
        c_a,
        c_b,
        emitter,
        r0: emitter * emitter,
    })
}

/// `(J1^2 / N) sum_k 1 / omega(k)^2`, skipping exact zero modes.
pub fn overlap_sum(grid: &BandGrid) -> f64 {
    let j1 = grid.model.j1;
    let s = reduce::sum(grid.len(), 0.0, |i| {
        if grid.is_zero_mode(i) {
            0.0
        } else {
            let w = grid.omega(i);
            1.0 / (w * w)
        }
    });
    j1 * j1 * s / grid.len() as f64
}

/// Emitter overlap with the zero-energy quasi-bound state.
pub fn quasi_bound_overlap(grid: &BandGrid, g: f64) -> Result<f64> {
    if grid.model.variant != Variant::AnisotropicHoneycomb || grid.model.j2 != 0.0 {
        return Err(Error::Domain(
            "overlap formula holds only for the chiral nearest-neighbour lattice".into(),
        ));
    }
    let j1 = grid.model.j1;
    Ok(1.0 / (1.0 + (g * g) / (j1 * j1) * overlap_sum(grid)))
}

//! Single-excitation dynamics of emitters coupled to a two-band bath.
//!
//! The bath is propagated in its eigenbasis `(u_k, l_k)`, where the free
//! evolution is a phase rotation. The coupled system is integrated with a
//! fourth-order Runge-Kutta scheme in the interaction picture of the
//! diagonal part (Lawson form), so the bath rotations are exact and only
//! the emitter rows enter the Runge-Kutta stages.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Variant};
use crate::reduce;
use crate::spectral::{self, BandGrid, Sublattice};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Largest tolerated drift of the total norm before a run is rejected.
pub const MAX_NORM_DRIFT: f64 = 1e-6;
/// `dt * max(|omega|, |delta|, g)` bound.
pub const STEP_RULE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitterSite {
    pub n1: i64,
    pub n2: i64,
    pub sublattice: Sublattice,
}

impl EmitterSite {
    pub fn new(n1: i64, n2: i64, sublattice: Sublattice) -> Self {
        EmitterSite { n1, n2, sublattice }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitterConfig {
    pub positions: Vec<EmitterSite>,
    pub delta: f64,
    pub g: f64,
}

impl EmitterConfig {
    pub fn single(sublattice: Sublattice, delta: f64, g: f64) -> Self {
        EmitterConfig {
            positions: vec![EmitterSite::new(0, 0, sublattice)],
            delta,
            g,
        }
    }

    pub fn validate(&self, grid: &BandGrid) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Domain("at least one emitter is required".into()));
        }
        if !(self.g >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Domain(format!("invalid coupling g = {} or detuning", self.g)));
        }
        for p in &self.positions {
            if p.n1.unsigned_abs() as usize >= grid.n1 || p.n2.unsigned_abs() as usize >= grid.n2 {
                return Err(Error::Domain(format!("emitter cell ({}, {}) outside the grid", p.n1, p.n2)));
            }
        }
        Ok(())
    }
}

/// Amplitudes of the single-excitation sector.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub emitters: Vec<C64>,
    /// Upper-band amplitudes for every k followed by lower-band amplitudes.
    pub bath: Vec<C64>,
}

impl State {
    /// Emitter `which` excited, bath empty.
    pub fn excited(n_emitters: usize, which: usize, n_cells: usize) -> Self {
        let mut e = vec![ZERO; n_emitters];
        e[which] = C64::new(1.0, 0.0);
        State {
            emitters: e,
            bath: vec![ZERO; 2 * n_cells],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.emitters.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + reduce::sum(self.bath.len(), 0.0, |i| self.bath[i].norm_sqr())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub n1: usize,
    pub n2: usize,
    pub c_a: Vec<C64>,
    pub c_b: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// `c_e[j][s]` is emitter `j` at `times[s]`.
    pub c_e: Vec<Vec<C64>>,
    pub snapshots: Vec<Snapshot>,
    pub norm_drift: f64,
    pub dt: f64,
    pub emitters: Vec<EmitterSite>,
}

impl EvolutionRecord {
    pub fn population(&self, emitter: usize) -> Vec<f64> {
        self.c_e[emitter].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Mean of `|C_e|^2` over the final tenth of the run.
    pub fn plateau(&self, emitter: usize) -> f64 {
        let t_end = *self.times.last().unwrap_or(&0.0);
        let cut = 0.9 * t_end;
        let (s, n) = self
            .times
            .iter()
            .zip(&self.c_e[emitter])
            .filter(|(t, _)| **t >= cut)
            .fold((0.0, 0usize), |(s, n), (_, c)| (s + c.norm_sqr(), n + 1));
        s / n.max(1) as f64
    }
}

/// Fixed-step propagator for one grid and emitter set.
pub struct Propagator {
    n_modes: usize,
    n_e: usize,
    dt: f64,
    /// `exp(-i s omega dt / 2)` per mode.
    half: Vec<C64>,
    /// Coupling of emitter `j` to mode `m`, stored as `g[j * n_modes + m]`.
    g: Vec<C64>,
    emitter_half: C64,
    /// `sum_m g_i(m) P(m) conj(g_j(m))` for `P = 1, P_h, P_f`.
    kernels: [Vec<C64>; 3],
}

/// Coupling vectors `G_j(m)` for every emitter and bath mode.
pub fn couplings(grid: &BandGrid, emitters: &EmitterConfig) -> Vec<C64> {
    let n = grid.len();
    let norm = emitters.g / (n as f64).sqrt();
    let mut out = vec![ZERO; emitters.positions.len() * 2 * n];
    for (j, site) in emitters.positions.iter().enumerate() {
        let row = &mut out[j * 2 * n..(j + 1) * 2 * n];
        let (upper, lower) = row.split_at_mut(n);
        upper
            .par_iter_mut()
            .zip(lower.par_iter_mut())
            .enumerate()
            .for_each(|(i, (gu, gl))| {
                let (k1, k2) = grid.k(i);
                let phase = C64::from_polar(norm, -(k1 * site.n1 as f64 + k2 * site.n2 as f64));
                let u = lattice::band_vectors(grid.theta[i], grid.phi[i]);
                let r = match site.sublattice {
                    Sublattice::A => 0,
                    Sublattice::B => 1,
                };
                *gu = phase * u[r][0];
                *gl = phase * u[r][1];
            });
    }
    out
}

impl Propagator {
    pub fn new(grid: &BandGrid, emitters: &EmitterConfig, dt: f64) -> Result<Self> {
        Self::with_direction(grid, emitters, dt, false)
    }

    /// With `reversed`, propagates under `-H`.
    pub fn with_direction(
        grid: &BandGrid,
        emitters: &EmitterConfig,
        dt: f64,
        reversed: bool,
    ) -> Result<Self> {
        emitters.validate(grid)?;
        let n = grid.len();
        let wmax = grid
            .omega_u
            .iter()
            .chain(&grid.omega_l)
            .fold(0.0f64, |m, w| m.max(w.abs()));
        let bound = STEP_RULE / wmax.max(emitters.delta.abs()).max(emitters.g);
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::StepSize(format!("dt = {dt} exceeds the stable bound {bound:.6}")));
        }
        let s = if reversed { -1.0 } else { 1.0 };
        let half: Vec<C64> = (0..2 * n)
            .into_par_iter()
            .map(|m| {
                let w = if m < n { grid.omega_u[m] } else { grid.omega_l[m - n] };
                C64::from_polar(1.0, -s * w * 0.5 * dt)
            })
            .collect();
        let mut g = couplings(grid, emitters);
        if reversed {
            g.par_iter_mut().for_each(|x| *x = -*x);
        }
        let n_e = emitters.positions.len();
        let modes = 2 * n;
        let kernel = |pow: u32| {
            let mut k = vec![ZERO; n_e * n_e];
            for a in 0..n_e {
                for b in 0..n_e {
                    let (ga, gb) = (&g[a * modes..(a + 1) * modes], &g[b * modes..(b + 1) * modes]);
                    k[a * n_e + b] = reduce::sum(modes, ZERO, |m| {
                        ga[m] * half[m].powu(pow) * gb[m].conj()
                    });
                }
            }
            k
        };
        Ok(Propagator {
            n_modes: modes,
            n_e,
            dt,
            kernels: [kernel(0), kernel(1), kernel(2)],
            half,
            g,
            emitter_half: C64::from_polar(1.0, -s * emitters.delta * 0.5 * dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn matvec(&self, which: usize, v: &[C64]) -> Vec<C64> {
        let k = &self.kernels[which];
        (0..self.n_e)
            .map(|a| (0..self.n_e).map(|b| k[a * self.n_e + b] * v[b]).sum())
            .collect()
    }

    /// `(sum G b, sum G P_h b, sum G P_f b)` per emitter.
    pub fn projections(&self, bath: &[C64]) -> [Vec<C64>; 3] {
        let ne = self.n_e;
        let parts = reduce::sum_chunks(self.n_modes, Partial::zero(ne), |r| {
            let mut p = Partial::zero(ne);
            for m in r {
                let b0 = bath[m];
                let b1 = self.half[m] * b0;
                let b2 = self.half[m] * b1;
                for j in 0..ne {
                    let gj = self.g[j * self.n_modes + m];
                    p.v[3 * j] += gj * b0;
                    p.v[3 * j + 1] += gj * b1;
                    p.v[3 * j + 2] += gj * b2;
                }
            }
            p
        });
        let get = |o: usize| (0..ne).map(|j| parts.v[3 * j + o]).collect::<Vec<_>>();
        [get(0), get(1), get(2)]
    }

    /// Advances `state` by one step; `proj` must hold the projections of the
    /// current bath and is replaced by those of the new one. Returns the new
    /// bath norm.
    pub fn step(&self, state: &mut State, proj: &mut [Vec<C64>; 3]) -> f64 {
        let h = self.dt;
        let ne = self.n_e;
        let eh = self.emitter_half;
        let ef = eh * eh;
        let c = state.emitters.clone();
        let neg_i = -I;

        let k1: Vec<C64> = proj[0].iter().map(|a| neg_i * a).collect();
        let c2: Vec<C64> = (0..ne).map(|j| eh * (c[j] + 0.5 * h * k1[j])).collect();
        let sh1 = self.matvec(1, &c);
        let k2: Vec<C64> = (0..ne)
            .map(|j| neg_i * (proj[1][j] + neg_i * 0.5 * h * sh1[j]))
            .collect();
        let c3: Vec<C64> = (0..ne).map(|j| eh * c[j] + 0.5 * h * k2[j]).collect();
        let s02 = self.matvec(0, &c2);
        let k3: Vec<C64> = (0..ne)
            .map(|j| neg_i * (proj[1][j] + neg_i * 0.5 * h * s02[j]))
            .collect();
        let c4: Vec<C64> = (0..ne).map(|j| ef * c[j] + h * eh * k3[j]).collect();
        let sh3 = self.matvec(1, &c3);
        let k4: Vec<C64> = (0..ne)
            .map(|j| neg_i * (proj[2][j] + neg_i * h * sh3[j]))
            .collect();

        for j in 0..ne {
            state.emitters[j] =
                ef * c[j] + h / 6.0 * (ef * k1[j] + 2.0 * eh * (k2[j] + k3[j]) + k4[j]);
        }

        // bath increment coefficients multiplying conj(G_j) P_f, P_h, 1
        let w = neg_i * (h / 6.0);
        let cf: Vec<C64> = c.iter().map(|x| w * x).collect();
        let chh: Vec<C64> = (0..ne).map(|j| w * 2.0 * (c2[j] + c3[j])).collect();
        let c1: Vec<C64> = c4.iter().map(|x| w * x).collect();

        let n_modes = self.n_modes;
        let half = &self.half;
        let g = &self.g;
        let chunks: Vec<Partial> = state
            .bath
            .par_chunks_mut(reduce::CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let base = ci * reduce::CHUNK;
                let mut p = Partial::zero(ne);
                for (o, b) in chunk.iter_mut().enumerate() {
                    let m = base + o;
                    let ph = half[m];
                    let pf = ph * ph;
                    let mut nb = pf * *b;
                    for j in 0..ne {
                        let gc = g[j * n_modes + m].conj();
                        nb += gc * (cf[j] * pf + chh[j] * ph + c1[j]);
                    }
                    *b = nb;
                    let b1 = ph * nb;
                    let b2 = ph * b1;
                    for j in 0..ne {
                        let gj = g[j * n_modes + m];
                        p.v[3 * j] += gj * nb;
                        p.v[3 * j + 1] += gj * b1;
                        p.v[3 * j + 2] += gj * b2;
                    }
                    p.norm += nb.norm_sqr();
                }
                p
            })
            .collect();
        let total = reduce::tree_combine(chunks, Partial::zero(ne));
        for j in 0..ne {
            proj[0][j] = total.v[3 * j];
            proj[1][j] = total.v[3 * j + 1];
            proj[2][j] = total.v[3 * j + 2];
        }
        total.norm
    }
}

#[derive(Clone)]
struct Partial {
    v: buf::Buf,
    norm: f64,
}

impl Partial {
    fn zero(ne: usize) -> Self {
        Partial {
            v: buf::Buf::zeros(3 * ne),
            norm: 0.0,
        }
    }
}

impl Copy for Partial {}

impl std::ops::Add for Partial {
    type Output = Partial;
    fn add(mut self, o: Partial) -> Partial {
        for i in 0..self.v.len {
            self.v.data[i] += o.v.data[i];
        }
        self.norm += o.norm;
        self
    }
}

mod buf {
    use super::C64;

    /// Fixed-capacity buffer so partial sums stay `Copy`.
    pub const CAP: usize = 3 * 8;

    #[derive(Clone, Copy)]
    pub struct Buf {
        pub data: [C64; CAP],
        pub len: usize,
    }

    impl Buf {
        pub fn zeros(len: usize) -> Self {
            assert!(len <= CAP, "at most {} emitters supported", CAP / 3);
            Buf {
                data: [C64::new(0.0, 0.0); CAP],
                len,
            }
        }
    }

    impl std::ops::Index<usize> for Buf {
        type Output = C64;
        fn index(&self, i: usize) -> &C64 {
            &self.data[i]
        }
    }

    impl std::ops::IndexMut<usize> for Buf {
        fn index_mut(&mut self, i: usize) -> &mut C64 {
            &mut self.data[i]
        }
    }
}

/// Largest number of emitters in one run.
pub const MAX_EMITTERS: usize = buf::CAP / 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub t_max: f64,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    /// Store emitter amplitudes every `record_stride` steps.
    pub record_stride: usize,
}

impl EvolveOptions {
    pub fn new(t_max: f64, dt: f64) -> Self {
        EvolveOptions {
            t_max,
            dt,
            snapshot_times: Vec::new(),
            record_stride: 1,
        }
    }
}

/// Real-space amplitudes of the bath part of `state`.
pub fn bath_to_real_space(grid: &BandGrid, bath: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = grid.len();
    let mut fa = vec![ZERO; n];
    let mut fb = vec![ZERO; n];
    fa.par_iter_mut()
        .zip(fb.par_iter_mut())
        .enumerate()
        .for_each(|(i, (a, b))| {
            let u = lattice::band_vectors(grid.theta[i], grid.phi[i]);
            let (bu, bl) = (bath[i], bath[n + i]);
            *a = u[0][0] * bu + u[0][1] * bl;
            *b = u[1][0] * bu + u[1][1] * bl;
        });
    let s = (n as f64).sqrt();
    let mut ca = spectral::to_real_space(fa, grid.n1, grid.n2);
    let mut cb = spectral::to_real_space(fb, grid.n1, grid.n2);
    ca.par_iter_mut().chain(cb.par_iter_mut()).for_each(|c| *c *= s);
    (ca, cb)
}

/// Evolve with emitter 0 initially excited and the bath empty.
pub fn evolve(
    grid: &BandGrid,
    emitters: &EmitterConfig,
    t_max: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<EvolutionRecord> {
    let opts = EvolveOptions {
        snapshot_times: snapshot_times.to_vec(),
        ..EvolveOptions::new(t_max, dt)
    };
    let init = State::excited(emitters.positions.len(), 0, grid.len());
    evolve_state(grid, emitters, init, &opts).map(|(r, _)| r)
}

pub fn evolve_state(
    grid: &BandGrid,
    emitters: &EmitterConfig,
    init: State,
    opts: &EvolveOptions,
) -> Result<(EvolutionRecord, State)> {
    let prop = Propagator::new(grid, emitters, opts.dt)?;
    run(&prop, grid, emitters, init, opts)
}

pub fn run(
    prop: &Propagator,
    grid: &BandGrid,
    emitters: &EmitterConfig,
    init: State,
    opts: &EvolveOptions,
) -> Result<(EvolutionRecord, State)> {
    if emitters.positions.len() > MAX_EMITTERS {
        return Err(Error::Domain(format!("at most {MAX_EMITTERS} emitters")));
    }
    if init.bath.len() != 2 * grid.len() || init.emitters.len() != emitters.positions.len() {
        return Err(Error::Domain("initial state does not match grid and emitters".into()));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::Domain(format!("t_max = {} must be non-negative", opts.t_max)));
    }
    let dt = prop.dt();
    let steps = (opts.t_max / dt).round() as usize;
    let stride = opts.record_stride.max(1);
    let mut snap_steps: Vec<(usize, f64)> = Vec::new();
    for &t in &opts.snapshot_times {
        let s = (t / dt).round();
        if !(t >= 0.0) || s as usize > steps {
            return Err(Error::Domain(format!("snapshot time {t} outside [0, {}]", opts.t_max)));
        }
        snap_steps.push((s as usize, t));
    }

    let mut state = init;
    let ne = state.emitters.len();
    let emitter_norm = |s: &State| s.emitters.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let norm0 = state.norm_sqr();
    let mut drift: f64 = 0.0;
    let mut proj = prop.projections(&state.bath);
    let mut times = vec![0.0];
    let mut c_e: Vec<Vec<C64>> = (0..ne).map(|j| vec![state.emitters[j]]).collect();
    let mut snapshots = Vec::new();
    let take = |step: usize, state: &State, out: &mut Vec<Snapshot>| {
        for &(s, t) in snap_steps.iter().filter(|(s, _)| *s == step) {
            let (c_a, c_b) = bath_to_real_space(grid, &state.bath);
            out.push(Snapshot { t, n1: grid.n1, n2: grid.n2, c_a, c_b });
            let _ = s;
        }
    };
    take(0, &state, &mut snapshots);
    for step in 1..=steps {
        let bath_norm = prop.step(&mut state, &mut proj);
        let d = (bath_norm + emitter_norm(&state) - norm0).abs();
        drift = drift.max(d);
        if d > MAX_NORM_DRIFT * norm0.max(1.0) {
            return Err(Error::StepSize(format!(
                "norm drift {d:e} at t = {:.4} exceeds {MAX_NORM_DRIFT:e}",
                step as f64 * dt
            )));
        }
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
            for j in 0..ne {
                c_e[j].push(state.emitters[j]);
            }
        }
        take(step, &state, &mut snapshots);
    }
    Ok((
        EvolutionRecord {
            times,
            c_e,
            snapshots,
            norm_drift: drift,
            dt,
            emitters: emitters.positions.clone(),
        },
        state,
    ))
}

/// Fermi golden-rule decay rate `pi g^2 D(delta)` from the smoothed DOS.
pub fn markovian_rate(grid: &BandGrid, delta: f64, g: f64, n_bins: usize) -> Result<f64> {
    let dos = spectral::density_of_states(grid, n_bins)?;
    let (l, u) = grid.band_ranges(spectral::ZeroModes::Include);
    let in_band = |r: (f64, f64)| delta >= r.0 && delta <= r.1;
    if !in_band(l) && !in_band(u) {
        return Ok(0.0);
    }
    Ok(PI * g * g * dos.smoothed_at(delta, 2.0))
}

/// Per-cell state density in the window `|E - e| <= half_width`.
pub fn local_dos(grid: &BandGrid, e: f64, half_width: f64, zm: spectral::ZeroModes) -> f64 {
    let count = reduce::sum(grid.len(), 0usize, |i| {
        if !grid.included(i, zm) {
            return 0;
        }
        usize::from((grid.omega_u[i] - e).abs() <= half_width)
            + usize::from((grid.omega_l[i] - e).abs() <= half_width)
    });
    count as f64 / (grid.len() as f64 * 2.0 * half_width)
}

/// Half-width of the energy window used to judge the DOS at `E`.
pub const DOS_WINDOW: f64 = 2.5e-3;

/// Largest DOS for which the bath can be eliminated adiabatically.
pub const ELIMINATION_DOS_LIMIT: f64 = 1e-3;

/// Bath-mediated exchange `G_ij` between an emitter on `sublattices.0` at
/// the origin and one on `sublattices.1` at cell `separation`.
pub fn effective_coupling(
    grid: &BandGrid,
    e: f64,
    g: f64,
    separation: (i64, i64),
    sublattices: (Sublattice, Sublattice),
) -> Result<C64> {
    let j1 = grid.model.j1;
    // exact zero modes drop out of the bound state, so they do not count here
    let d = local_dos(grid, e, DOS_WINDOW * j1, spectral::ZeroModes::Exclude);
    if d > ELIMINATION_DOS_LIMIT / j1 {
        return Err(Error::Domain(format!(
            "density of states {d:.3e} at E = {e} too large for adiabatic elimination"
        )));
    }
    let bs = spectral::bound_state_wavefunction(grid, e, sublattices.0, g)?;
    let amp = match sublattices.1 {
        Sublattice::A => bs.a(separation),
        Sublattice::B => bs.b(separation),
    };
    Ok(g * bs.emitter * amp)
}

/// Bath intensity map around one emitter cell.
#[derive(Debug, Clone)]
pub struct IntensityMap {
    pub t: f64,
    pub n1: usize,
    pub n2: usize,
    pub center: (i64, i64),
    pub variant: Variant,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl IntensityMap {
    fn idx(&self, d: (i64, i64)) -> usize {
        let p1 = (self.center.0 + d.0).rem_euclid(self.n1 as i64) as usize;
        let p2 = (self.center.1 + d.1).rem_euclid(self.n2 as i64) as usize;
        p1 * self.n2 + p2
    }

    /// `(|C_a|^2, |C_b|^2)` at cell offset `d` from the emitter.
    pub fn at(&self, d: (i64, i64)) -> (f64, f64) {
        let i = self.idx(d);
        (self.a[i], self.b[i])
    }

    /// Offsets covering the torus once, centred on the emitter.
    pub fn offsets(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (h1, h2) = ((self.n1 / 2) as i64, (self.n2 / 2) as i64);
        let r1 = -h1..(self.n1 as i64 - h1);
        r1.flat_map(move |a| (-h2..(self.n2 as i64 - h2)).map(move |b| (a, b)))
    }

    pub fn position(&self, d: (i64, i64)) -> (f64, f64) {
        match self.variant {
            Variant::AnisotropicHoneycomb => lattice::cell_position(d),
            Variant::Mizoguchi => (d.0 as f64, d.1 as f64),
        }
    }

    pub fn total(&self) -> f64 {
        self.a.iter().chain(&self.b).sum()
    }

    /// Share of the bath population in cells closer than `radius`.
    pub fn fraction_within(&self, radius: f64) -> f64 {
        let inside: f64 = self
            .offsets()
            .filter(|&d| {
                let (x, y) = self.position(d);
                x.hypot(y) < radius
            })
            .map(|d| {
                let (a, b) = self.at(d);
                a + b
            })
            .sum();
        inside / self.total()
    }

    /// Mean `|C_b|^2` in `bins` angular sectors of the ring `|r - radius| <= half_width`.
    pub fn angular_profile(&self, radius: f64, half_width: f64, bins: usize) -> Vec<f64> {
        let mut sum = vec![0.0; bins];
        let mut cnt = vec![0usize; bins];
        for d in self.offsets() {
            let (x, y) = self.position(d);
            if (x.hypot(y) - radius).abs() > half_width {
                continue;
            }
            let a = y.atan2(x) + PI;
            let b = ((a / (2.0 * PI) * bins as f64) as usize) % bins;
            sum[b] += self.at(d).1;
            cnt[b] += 1;
        }
        sum.iter()
            .zip(&cnt)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    }
}

/// Ratio of the strongest sector to the mean of the two sectors rotated by `offset_bins`.
pub fn axis_ratio(profile: &[f64], offset_bins: usize) -> (usize, f64) {
    let n = profile.len();
    let (k, max) = profile
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let other = 0.5 * (profile[(k + offset_bins) % n] + profile[(k + n - offset_bins % n) % n]);
    (k, max / other)
}

pub fn radiation_snapshot(record: &EvolutionRecord, t: f64) -> Result<IntensityMap> {
    radiation_snapshot_for(record, t, Variant::AnisotropicHoneycomb)
}

pub fn radiation_snapshot_for(record: &EvolutionRecord, t: f64, variant: Variant) -> Result<IntensityMap> {
    let s = record
        .snapshots
        .iter()
        .find(|s| (s.t - t).abs() <= 0.5 * record.dt)
        .ok_or(Error::MissingSnapshot(t))?;
    let center = record.emitters.first().map(|e| (e.n1, e.n2)).unwrap_or((0, 0));
    Ok(IntensityMap {
        t: s.t,
        n1: s.n1,
        n2: s.n2,
        center,
        variant,
        a: s.c_a.iter().map(|c| c.norm_sqr()).collect(),
        b: s.c_b.iter().map(|c| c.norm_sqr()).collect(),
    })
}

/// Fit `|C_e|^2 ~ A exp(-rate t)` over `window`; returns `(rate, rms of log residual)`.
pub fn fit_decay(times: &[f64], population: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(population)
        .filter(|(t, p)| **t >= window.0 && **t <= window.1 && **p > 0.0)
        .map(|(t, p)| (*t, p.ln()))
        .unzip();
    if x.len() < 8 {
        return Err(Error::InsufficientData(format!("{} samples in decay window", x.len())));
    }
    let (_, slope, rms) = spectral::fit::linear_fit(&x, &y);
    Ok((-slope, rms))
}

/// Single-exponential fit in log space, residual measured on the populations.
pub fn exponential_residual(times: &[f64], population: &[f64], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(population)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, p)| (*t, *p))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|p| (p.0, p.1.ln()))
        .unzip();
    if x.len() < 8 {
        return Err(Error::InsufficientData(format!("{} samples in fit window", x.len())));
    }
    let (a, b, _) = spectral::fit::linear_fit(&x, &y);
    let ss: f64 = pts.iter().map(|(t, p)| (p - (a + b * t).exp()).powi(2)).sum();
    Ok((ss / pts.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeModel;

    #[test]
    fn decoupled_emitter_stays_excited() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 12).unwrap();
        let em = EmitterConfig::single(Sublattice::A, 0.3, 0.0);
        let rec = evolve(&grid, &em, 5.0, 0.01, &[]).unwrap();
        for p in rec.population(0) {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_rule_is_enforced() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 8).unwrap();
        let em = EmitterConfig::single(Sublattice::A, 0.0, 0.1);
        assert!(matches!(evolve(&grid, &em, 1.0, 0.05, &[]), Err(Error::StepSize(_))));
    }

    #[test]
    fn emitters_outside_grid_are_rejected() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 8).unwrap();
        let mut em = EmitterConfig::single(Sublattice::A, 0.0, 0.1);
        em.positions.push(EmitterSite::new(9, 0, Sublattice::B));
        assert!(evolve(&grid, &em, 1.0, 0.01, &[]).is_err());
    }

    #[test]
    fn missing_snapshot_is_an_error() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 8).unwrap();
        let em = EmitterConfig::single(Sublattice::A, 0.0, 0.1);
        let rec = evolve(&grid, &em, 1.0, 0.01, &[0.5]).unwrap();
        assert!(radiation_snapshot(&rec, 0.5).is_ok());
        assert!(matches!(radiation_snapshot(&rec, 0.7), Err(Error::MissingSnapshot(_))));
    }

    #[test]
    fn gap_rate_is_zero() {
        let grid = BandGrid::square(LatticeModel::nearest(2.1), 64).unwrap();
        assert_eq!(markovian_rate(&grid, 0.0, 0.1, 400).unwrap(), 0.0);
    }

    #[test]
    fn same_sublattice_exchange_vanishes() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 40).unwrap();
        for sep in [(1, 0), (3, -2), (-5, -5)] {
            let g = effective_coupling(&grid, 0.0, 0.1, sep, (Sublattice::A, Sublattice::A)).unwrap();
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn elimination_refused_inside_band() {
        let grid = BandGrid::square(LatticeModel::nearest(1.0), 128).unwrap();
        let r = effective_coupling(&grid, 1.5, 0.1, (1, 1), (Sublattice::A, Sublattice::B));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn plateau_averages_last_tenth() {
        let rec = EvolutionRecord {
            times: (0..=100).map(|i| i as f64).collect(),
            c_e: vec![(0..=100).map(|i| C64::new(if i >= 90 { 0.5 } else { 1.0 }, 0.0)).collect()],
            snapshots: vec![],
            norm_drift: 0.0,
            dt: 1.0,
            emitters: vec![],
        };
        assert!((rec.plateau(0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn axis_ratio_picks_strongest_sector() {
        let prof = [1.0, 2.0, 10.0, 2.0, 1.0, 2.0, 10.0, 2.0];
        let (k, r) = axis_ratio(&prof, 2);
        assert_eq!(k, 2);
        assert!((r - 10.0).abs() < 1e-15);
    }
}

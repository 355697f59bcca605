//! Collective modes of a planar honeycomb array of two-level atoms.
//!
//! Lengths are in units of the transition wavelength when `lambda_a = 1`,
//! energies are `(omega - omega_a) / Gamma_a`. The Bloch matrix is split into
//! its Hermitian part, a smoothly truncated real-space sum over hexagonal
//! rings, and its radiative part, evaluated exactly as a sum over the
//! reciprocal vectors inside the light cone.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeModel};
use crate::reduce;

type C64 = Complex64;

pub const MIN_SHELLS: usize = 8;
pub const DEFAULT_SHELLS: usize = 60;
/// Largest eigenvalue change under shell doubling outside the light cone, in `Gamma_a`.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayModel {
    pub d: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub lambda_a: f64,
    #[serde(default = "one", rename = "Gamma_a")]
    pub gamma_a: f64,
}

fn one() -> f64 {
    1.0
}

impl ArrayModel {
    pub fn new(d: f64, beta: f64) -> Result<Self> {
        let m = ArrayModel {
            d,
            beta,
            lambda_a: 1.0,
            gamma_a: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d", self.d), ("beta", self.beta), ("lambda_a", self.lambda_a), ("Gamma_a", self.gamma_a)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.lambda_a
    }

    /// A-B distance within the unit cell.
    pub fn d_intra(&self) -> f64 {
        let b2 = self.beta * self.beta;
        let (a, b, c) = (1.0 - b2, 3.0 * b2 * self.d, -3.0 * b2 * self.d * self.d);
        if a.abs() < 1e-14 {
            -c / b
        } else {
            (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
        }
    }

    pub fn d_inter(&self) -> f64 {
        self.d_intra() / self.beta
    }

    /// Primitive vectors `c1, c2`.
    pub fn primitive(&self) -> [[f64; 2]; 2] {
        let s = self.d * 3f64.sqrt() / 2.0;
        [[s * 3f64.sqrt(), s], [s * 3f64.sqrt(), -s]]
    }

    pub fn reciprocal(&self) -> [[f64; 2]; 2] {
        let [c1, c2] = self.primitive();
        let det = c1[0] * c2[1] - c1[1] * c2[0];
        let f = 2.0 * PI / det;
        [[f * c2[1], -f * c2[0]], [-f * c1[1], f * c1[0]]]
    }

    pub fn cell_area(&self) -> f64 {
        1.5 * 3f64.sqrt() * self.d * self.d
    }

    /// Positions of the A and B atoms in the cell.
    pub fn sites(&self) -> [[f64; 3]; 2] {
        [[0.0; 3], [-self.d_intra(), 0.0, 0.0]]
    }

    pub fn gamma_point(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    pub fn m_point(&self) -> (f64, f64) {
        (2.0 * PI / (3.0 * self.d), 0.0)
    }

    pub fn k_point(&self) -> (f64, f64) {
        (2.0 * PI / (3.0 * self.d), 2.0 * PI / (3.0 * 3f64.sqrt() * self.d))
    }

    /// Twice the Γ-K distance.
    pub fn bz_diameter(&self) -> f64 {
        let (x, y) = self.k_point();
        2.0 * x.hypot(y)
    }
}

/// Free-space dyadic Green function.
pub fn green_dyadic(r: [f64; 3], k0: f64) -> Result<Matrix3<C64>> {
    let d = r[0].hypot(r[1]).hypot(r[2]);
    if d == 0.0 {
        return Err(Error::Singular("Green dyadic at r = 0".into()));
    }
    Ok(green_unchecked(r, d, k0))
}

fn green_unchecked(r: [f64; 3], d: f64, k0: f64) -> Matrix3<C64> {
    let kr = k0 * d;
    let e = C64::from_polar(1.0 / (4.0 * PI * d), kr);
    let kr2 = kr * kr;
    let a = e * (1.0 + C64::new(-1.0, kr) / kr2);
    let b = e * (-1.0 + C64::new(3.0, -3.0 * kr) / kr2);
    let u = Vector3::new(r[0] / d, r[1] / d, r[2] / d);
    let uu = u * u.transpose();
    Matrix3::from_fn(|i, j| b * uu[(i, j)] + if i == j { a } else { C64::new(0.0, 0.0) })
}

fn ring_index(n1: i64, n2: i64) -> i64 {
    n1.abs().max(n2.abs()).max((n1 + n2).abs())
}

fn taper(ring: i64, shells: usize) -> f64 {
    let s = ring as f64 / shells as f64;
    if s <= 0.5 {
        1.0
    } else {
        (PI * (s - 0.5)).cos().powi(2)
    }
}

/// Hermitian part of the Bloch matrix from a tapered sum over `shells` rings.
pub fn hermitian_part(model: &ArrayModel, k: (f64, f64), shells: usize) -> Matrix6<C64> {
    let s = shells as i64;
    let side = (2 * s + 1) as usize;
    let [c1, c2] = model.primitive();
    let sites = model.sites();
    let k0 = model.k0();
    let pref = -3.0 * PI * model.gamma_a / k0;
    let sum = reduce::sum(side * side, Matrix6::<C64>::zeros(), |i| {
        let n1 = (i / side) as i64 - s;
        let n2 = (i % side) as i64 - s;
        let ring = ring_index(n1, n2);
        let mut m = Matrix6::<C64>::zeros();
        if ring > s {
            return m;
        }
        let w = taper(ring, shells);
        let rx = n1 as f64 * c1[0] + n2 as f64 * c2[0];
        let ry = n1 as f64 * c1[1] + n2 as f64 * c2[1];
        let ph = C64::from_polar(w, -(k.0 * rx + k.1 * ry));
        for a in 0..2 {
            for b in 0..2 {
                let r = [rx + sites[a][0] - sites[b][0], ry + sites[a][1] - sites[b][1], 0.0];
                let d = r[0].hypot(r[1]);
                if d < 1e-12 * model.d {
                    continue;
                }
                let g = green_unchecked(r, d, k0);
                for i in 0..3 {
                    for j in 0..3 {
                        m[(3 * a + i, 3 * b + j)] = ph * g[(i, j)].re;
                    }
                }
            }
        }
        m
    });
    sum * C64::new(pref, 0.0)
}

/// Radiative decay matrix (in units of `Gamma_a`) from the reciprocal-lattice sum.
pub fn decay_matrix(model: &ArrayModel, k: (f64, f64)) -> Matrix6<C64> {
    let k0 = model.k0();
    let [b1, b2] = model.reciprocal();
    let bmin = b1[0].hypot(b1[1]).min(b2[0].hypot(b2[1]));
    let reach = ((k.0.hypot(k.1) + k0) / bmin).ceil() as i64 * 2 + 1;
    let sites = model.sites();
    let mut s = Matrix6::<C64>::zeros();
    for m1 in -reach..=reach {
        for m2 in -reach..=reach {
            let q = [k.0 + m1 as f64 * b1[0] + m2 as f64 * b2[0], k.1 + m1 as f64 * b1[1] + m2 as f64 * b2[1]];
            let qq = q[0] * q[0] + q[1] * q[1];
            if qq >= k0 * k0 {
                continue;
            }
            let kz2 = k0 * k0 - qq;
            let kz = kz2.sqrt();
            let q3 = [q[0], q[1], 0.0];
            let f = Matrix3::from_fn(|i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                let zz = if i == 2 && j == 2 { kz2 } else { 0.0 };
                (id - (q3[i] * q3[j] + zz) / (k0 * k0)) / (2.0 * kz)
            });
            for a in 0..2 {
                for b in 0..2 {
                    let rho = [sites[a][0] - sites[b][0], sites[a][1] - sites[b][1]];
                    let ph = C64::from_polar(1.0 / model.cell_area(), q[0] * rho[0] + q[1] * rho[1]);
                    for i in 0..3 {
                        for j in 0..3 {
                            s[(3 * a + i, 3 * b + j)] += ph * f[(i, j)];
                        }
                    }
                }
            }
        }
    }
    let self_term = k0 / (6.0 * PI);
    let mut gamma = s * C64::new(6.0 * PI / k0, 0.0);
    for i in 0..6 {
        gamma[(i, i)] += C64::new(1.0 - 6.0 * PI / k0 * self_term, 0.0);
    }
    gamma * C64::new(model.gamma_a, 0.0)
}

/// `H - (i/2) Gamma` without the doubling check.
pub fn bloch_matrix_unchecked(model: &ArrayModel, k: (f64, f64), shells: usize) -> Result<Matrix6<C64>> {
    model.validate()?;
    if shells < MIN_SHELLS {
        return Err(Error::Domain(format!("cutoff_shells = {shells} below minimum {MIN_SHELLS}")));
    }
    let h = hermitian_part(model, k, shells);
    let g = decay_matrix(model, k);
    Ok(h - g * C64::new(0.0, 0.5))
}

pub fn outside_light_cone(model: &ArrayModel, k: (f64, f64)) -> bool {
    k.0.hypot(k.1) > model.k0()
}

/// Width of the band above the light cone, in units of `2π / (shells |a1|)`,
/// where a tapered sum of `shells` rings cannot resolve the dispersion.
pub const LIGHT_CONE_MARGIN: f64 = 8.0;

/// True when `k` lies far enough outside the light cone for a `shells`-ring
/// sum to be checked by doubling.
pub fn certifiable(model: &ArrayModel, k: (f64, f64), shells: usize) -> bool {
    let a = model.primitive()[0];
    let margin = LIGHT_CONE_MARGIN * 2.0 * PI / (shells as f64 * a[0].hypot(a[1]));
    k.0.hypot(k.1) > model.k0() + margin
}

/// Bloch matrix; at [`certifiable`] points the result is checked against
/// twice as many shells.
pub fn bloch_matrix(model: &ArrayModel, k: (f64, f64), shells: usize) -> Result<Matrix6<C64>> {
    Ok(certified_matrix(model, k, shells)?.0)
}

/// Bloch matrix with its doubling change, `None` where not certifiable.
pub fn certified_matrix(model: &ArrayModel, k: (f64, f64), shells: usize) -> Result<(Matrix6<C64>, Option<f64>)> {
    let m = bloch_matrix_unchecked(model, k, shells)?;
    let mut checked = None;
    if certifiable(model, k, shells) {
        let change = doubling_change(model, k, shells, &m)?;
        checked = Some(change);
        if change > CONVERGENCE_TOLERANCE * model.gamma_a {
            return Err(Error::Convergence(format!(
                "eigenvalues at k = ({:.4}, {:.4}) move by {change:.3e} between {shells} and {} shells",
                k.0,
                k.1,
                2 * shells
            )));
        }
    }
    Ok((m, checked))
}

/// Largest eigenvalue shift between `shells` and `2 * shells`.
pub fn doubling_change(model: &ArrayModel, k: (f64, f64), shells: usize, m: &Matrix6<C64>) -> Result<f64> {
    let m2 = bloch_matrix_unchecked(model, k, 2 * shells)?;
    let mut worst: f64 = 0.0;
    for sector in [Sector::InPlane, Sector::OutOfPlane] {
        let a = sector_values(m, sector)?;
        let b = sector_values(&m2, sector)?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    InPlane,
    OutOfPlane,
}

impl Sector {
    pub fn indices(self) -> &'static [usize] {
        match self {
            Sector::InPlane => &[0, 1, 3, 4],
            Sector::OutOfPlane => &[2, 5],
        }
    }
}

fn sector_block(m: &Matrix6<C64>, sector: Sector) -> DMatrix<C64> {
    let idx = sector.indices();
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn sorted_eigenvalues(a: DMatrix<C64>) -> Result<Vec<C64>> {
    let mut ev: Vec<C64> = a
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Convergence("Schur decomposition did not converge".into()))?
        .iter()
        .copied()
        .collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re));
    Ok(ev)
}

/// Eigenvalues of one polarization sector, ascending in real part.
pub fn sector_values(m: &Matrix6<C64>, sector: Sector) -> Result<Vec<C64>> {
    sorted_eigenvalues(sector_block(m, sector))
}

/// Eigenpairs of a small non-Hermitian matrix, ascending in real part.
fn eigenpairs(a: &DMatrix<C64>) -> Result<Vec<(C64, DVector<C64>)>> {
    let n = a.nrows();
    let ev = sorted_eigenvalues(a.clone())?;
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.norm())).max(1e-300);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (ev[j] - ev[i]).norm() < 1e-9 * scale {
            j += 1;
        }
        let shifted = a - DMatrix::<C64>::identity(n, n) * ev[i];
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Singular("SVD failed".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        for (c, &row) in order.iter().take(j - i).enumerate() {
            let v = vt.row(row).adjoint().into_owned();
            out.push((ev[i + c], v));
        }
        i = j;
    }
    Ok(out)
}

/// Band data at one k-point; bands 0-3 are in-plane, 4-5 out-of-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayBandPoint {
    pub k: (f64, f64),
    pub omegas: [f64; 6],
    pub gammas: [f64; 6],
    /// `(out-of-plane, in-plane)` weight of each eigenvector.
    pub polarization_weights: [[f64; 2]; 6],
    /// Eigenvalue shift on doubling the shells, where certified.
    pub doubling_change: Option<f64>,
}

struct RawPoint {
    k: (f64, f64),
    values: Vec<C64>,
    vectors: Vec<DVector<C64>>,
    change: Option<f64>,
}

fn raw_point(model: &ArrayModel, k: (f64, f64), shells: usize, check: bool) -> Result<RawPoint> {
    let (m, change) = if check {
        certified_matrix(model, k, shells)?
    } else {
        (bloch_matrix_unchecked(model, k, shells)?, None)
    };
    let mut values = Vec::with_capacity(6);
    let mut vectors = Vec::with_capacity(6);
    for sector in [Sector::InPlane, Sector::OutOfPlane] {
        let idx = sector.indices();
        for (val, v) in eigenpairs(&sector_block(&m, sector))? {
            let mut full = DVector::<C64>::zeros(6);
            for (o, &i) in idx.iter().enumerate() {
                full[i] = v[o];
            }
            let n = full.norm();
            values.push(val);
            vectors.push(full / C64::new(n, 0.0));
        }
    }
    Ok(RawPoint { k, values, vectors, change })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Reorders `cur` within each sector to follow `prev` by eigenvector overlap.
fn follow(prev: &RawPoint, cur: &mut RawPoint) {
    for (start, len) in [(0usize, 4usize), (4, 2)] {
        let ov = |a: usize, b: usize| prev.vectors[start + a].dotc(&cur.vectors[start + b]).norm();
        let best = permutations(len)
            .into_iter()
            .map(|p| {
                let score: f64 = (0..len).map(|a| ov(a, p[a])).sum();
                let worst = (0..len).map(|a| ov(a, p[a])).fold(f64::INFINITY, f64::min);
                (p, score, worst)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if best.2 < 0.5 {
            continue;
        }
        let vals: Vec<C64> = best.0.iter().map(|&b| cur.values[start + b]).collect();
        let vecs: Vec<DVector<C64>> = best.0.iter().map(|&b| cur.vectors[start + b].clone()).collect();
        for a in 0..len {
            cur.values[start + a] = vals[a];
            cur.vectors[start + a] = vecs[a].clone();
        }
    }
}

fn finish(p: &RawPoint) -> ArrayBandPoint {
    let mut omegas = [0.0; 6];
    let mut gammas = [0.0; 6];
    let mut w = [[0.0; 2]; 6];
    for b in 0..6 {
        omegas[b] = p.values[b].re;
        gammas[b] = -2.0 * p.values[b].im;
        let v = &p.vectors[b];
        let z = v[2].norm_sqr() + v[5].norm_sqr();
        let total = v.norm_squared();
        w[b] = [z / total, 1.0 - z / total];
    }
    ArrayBandPoint {
        k: p.k,
        omegas,
        gammas,
        polarization_weights: w,
        doubling_change: p.change,
    }
}

/// Bands along `path`, continued by eigenvector overlap.
pub fn array_band_structure(model: &ArrayModel, path: &[(f64, f64)], shells: usize) -> Result<Vec<ArrayBandPoint>> {
    array_band_structure_with(model, path, shells, true)
}

pub fn array_band_structure_with(
    model: &ArrayModel,
    path: &[(f64, f64)],
    shells: usize,
    certify: bool,
) -> Result<Vec<ArrayBandPoint>> {
    let mut raw: Vec<RawPoint> = path
        .par_iter()
        .map(|&k| raw_point(model, k, shells, certify))
        .collect::<Result<_>>()?;
    for i in 1..raw.len() {
        let (head, tail) = raw.split_at_mut(i);
        follow(&head[i - 1], &mut tail[0]);
    }
    Ok(raw.iter().map(finish).collect())
}

/// Piecewise-linear path through `corners` with `per_segment` points per leg.
pub fn k_path(corners: &[(f64, f64)], per_segment: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in corners.windows(2) {
        for s in 0..per_segment {
            let t = s as f64 / per_segment as f64;
            out.push((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
        }
    }
    if let Some(&last) = corners.last() {
        out.push(last);
    }
    out
}

impl ArrayModel {
    /// Γ-K-M-Γ.
    pub fn standard_path(&self, per_segment: usize) -> Vec<(f64, f64)> {
        k_path(&[self.gamma_point(), self.k_point(), self.m_point(), self.gamma_point()], per_segment)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Flat,
    Sine,
}

impl Envelope {
    fn weight(self, n: usize, cells: usize) -> f64 {
        match self {
            Envelope::Flat => 1.0,
            Envelope::Sine => (PI * (n as f64 + 0.5) / cells as f64).sin(),
        }
    }
}

/// Rayleigh quotient of a Bloch eigenvector spread over an open array of
/// `cells x cells` unit cells.
pub fn finite_array_energy(
    model: &ArrayModel,
    k: (f64, f64),
    vector: &[C64; 6],
    cells: usize,
    envelope: Envelope,
) -> Result<C64> {
    let [c1, c2] = model.primitive();
    let sites = model.sites();
    let k0 = model.k0();
    let pref = -3.0 * PI * model.gamma_a / k0;
    let mut pos = Vec::new();
    let mut amp = Vec::new();
    for n1 in 0..cells {
        for n2 in 0..cells {
            let rx = n1 as f64 * c1[0] + n2 as f64 * c2[0];
            let ry = n1 as f64 * c1[1] + n2 as f64 * c2[1];
            let env = envelope.weight(n1, cells) * envelope.weight(n2, cells);
            let ph = C64::from_polar(env, k.0 * rx + k.1 * ry);
            for (a, s) in sites.iter().enumerate() {
                pos.push([rx + s[0], ry + s[1], 0.0]);
                amp.push([ph * vector[3 * a], ph * vector[3 * a + 1], ph * vector[3 * a + 2]]);
            }
        }
    }
    let n = pos.len();
    let num = reduce::sum(n, C64::new(0.0, 0.0), |i| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            if i == j {
                let s: f64 = amp[i].iter().map(|x| x.norm_sqr()).sum();
                acc += C64::new(0.0, -0.5 * model.gamma_a) * s;
                continue;
            }
            let r = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1], 0.0];
            let d = r[0].hypot(r[1]);
            let g = green_unchecked(r, d, k0);
            for p in 0..3 {
                for q in 0..3 {
                    acc += amp[i][p].conj() * pref * g[(p, q)] * amp[j][q];
                }
            }
        }
        acc
    });
    let den: f64 = amp.iter().flat_map(|a| a.iter()).map(|x| x.norm_sqr()).sum();
    Ok(num / den)
}

/// Eigenvector of band `band` of an [`ArrayBandPoint`] computation, for
/// cross-checks.
pub fn band_vector(model: &ArrayModel, k: (f64, f64), shells: usize, band: usize) -> Result<(C64, [C64; 6])> {
    let p = raw_point(model, k, shells, false)?;
    let v = &p.vectors[band];
    let mut out = [C64::new(0.0, 0.0); 6];
    for i in 0..6 {
        out[i] = v[i];
    }
    Ok((p.values[band], out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingKind {
    DiracI,
    SemiDirac,
    Tilted,
    None,
}

/// Two adjacent bands as functions of a two-dimensional wavevector.
pub trait TwoBandSource: Sync {
    /// `(lower, upper)` energies at `k`.
    fn pair(&self, k: (f64, f64)) -> Result<(f64, f64)>;
    fn bz_diameter(&self) -> f64;
}

/// Bands of the tight-binding lattice in `(k1, k2)` coordinates.
pub struct LatticeBands(pub LatticeModel);

impl TwoBandSource for LatticeBands {
    fn pair(&self, k: (f64, f64)) -> Result<(f64, f64)> {
        let s = lattice::bloch_eval(&self.0, k);
        let w = s.omega();
        Ok((s.h_i - w, s.h_i + w))
    }

    fn bz_diameter(&self) -> f64 {
        2.0 * PI * 2f64.sqrt()
    }
}

/// Bands `lower` and `lower + 1` (energy order) of one polarization sector.
pub struct ArrayBands {
    pub model: ArrayModel,
    pub sector: Sector,
    pub lower: usize,
    pub shells: usize,
}

impl TwoBandSource for ArrayBands {
    fn pair(&self, k: (f64, f64)) -> Result<(f64, f64)> {
        let m = bloch_matrix_unchecked(&self.model, k, self.shells)?;
        let v = sector_values(&m, self.sector)?;
        if self.lower + 1 >= v.len() {
            return Err(Error::Domain(format!("sector has {} bands", v.len())));
        }
        Ok((v[self.lower].re, v[self.lower + 1].re))
    }

    fn bz_diameter(&self) -> f64 {
        self.model.bz_diameter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: CrossingKind,
    pub k_star: (f64, f64),
    /// Exponents along the steepest-rising direction's orthogonal pair, `(smaller, larger)`.
    pub exponents: (f64, f64),
    /// Angles (radians) of the two directions.
    pub directions: (f64, f64),
    pub tilt: f64,
    pub gap: f64,
}

pub const EXPONENT_TOLERANCE: f64 = 0.2;
pub const TILT_THRESHOLD: f64 = 0.1;
const DIRECTIONS: usize = 16;
const SAMPLES: usize = 8;

/// Path point with the smallest splitting.
pub fn locate_crossing<S: TwoBandSource>(src: &S, path: &[(f64, f64)]) -> Result<((f64, f64), f64)> {
    let gaps: Vec<f64> = path
        .par_iter()
        .map(|&k| src.pair(k).map(|(l, u)| u - l))
        .collect::<Result<_>>()?;
    let (i, g) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InsufficientData("empty path".into()))?;
    Ok((path[i], *g))
}

pub fn default_window<S: TwoBandSource>(src: &S) -> f64 {
    0.05 * src.bz_diameter()
}

/// Classifies the touching at `k_star` from splittings on `[window/10, window]`.
pub fn classify_crossing<S: TwoBandSource>(src: &S, k_star: (f64, f64), window: f64) -> Result<Classification> {
    if !(window > 0.0) {
        return Err(Error::Domain(format!("window = {window} must be positive")));
    }
    let (l0, u0) = src.pair(k_star)?;
    let gap = u0 - l0;
    let qs: Vec<f64> = (0..SAMPLES)
        .map(|i| window / 10.0 * 10f64.powf(i as f64 / (SAMPLES - 1) as f64))
        .collect();
    let angles: Vec<f64> = (0..DIRECTIONS).map(|i| PI * i as f64 / DIRECTIONS as f64).collect();
    struct Dir {
        exponent: f64,
        tilt: f64,
        outer: f64,
    }
    let dirs: Vec<Dir> = angles
        .par_iter()
        .map(|&th| {
            let (c, s) = (th.cos(), th.sin());
            let mut xs = Vec::with_capacity(SAMPLES);
            let mut ys = Vec::with_capacity(SAMPLES);
            let mut outer = (0.0, 0.0);
            for &q in &qs {
                let (lp, up) = src.pair((k_star.0 + q * c, k_star.1 + q * s))?;
                let (lm, um) = src.pair((k_star.0 - q * c, k_star.1 - q * s))?;
                let split = 0.5 * ((up - lp) + (um - lm)) - gap;
                if split <= 0.0 {
                    return Ok(Dir { exponent: f64::NAN, tilt: f64::NAN, outer: 0.0 });
                }
                xs.push(q.ln());
                ys.push(split.ln());
                outer = (split, 0.5 * ((up + lp) - (um + lm)));
            }
            let (_, slope, _) = crate::spectral::fit::linear_fit(&xs, &ys);
            Ok(Dir {
                exponent: slope,
                tilt: outer.1.abs() / outer.0,
                outer: outer.0,
            })
        })
        .collect::<Result<_>>()?;

    let mean_outer = dirs.iter().map(|d| d.outer).sum::<f64>() / DIRECTIONS as f64;
    if gap > 0.5 * mean_outer {
        return Ok(Classification {
            kind: CrossingKind::None,
            k_star,
            exponents: (f64::NAN, f64::NAN),
            directions: (f64::NAN, f64::NAN),
            tilt: f64::NAN,
            gap,
        });
    }
    let steep = (0..DIRECTIONS)
        .filter(|&i| dirs[i].exponent.is_finite())
        .max_by(|&a, &b| dirs[a].exponent.total_cmp(&dirs[b].exponent))
        .ok_or_else(|| Error::Ambiguous("splitting does not grow away from the touching point".into()))?;
    let perp = (steep + DIRECTIONS / 2) % DIRECTIONS;
    let (e_hi, e_lo) = (dirs[steep].exponent, dirs[perp].exponent);
    let tilt = dirs
        .iter()
        .filter(|d| (d.exponent - 1.0).abs() <= EXPONENT_TOLERANCE)
        .map(|d| d.tilt)
        .fold(0.0, f64::max);
    let near = |x: f64, t: f64| (x - t).abs() <= EXPONENT_TOLERANCE;
    let kind = if near(e_lo, 1.0) && near(e_hi, 1.0) {
        if tilt >= TILT_THRESHOLD {
            CrossingKind::Tilted
        } else {
            CrossingKind::DiracI
        }
    } else if near(e_lo, 1.0) && near(e_hi, 2.0) {
        CrossingKind::SemiDirac
    } else {
        return Err(Error::Ambiguous(format!(
            "splitting exponents ({e_lo:.3}, {e_hi:.3}) match no crossing type"
        )));
    };
    Ok(Classification {
        kind,
        k_star,
        exponents: (e_lo, e_hi),
        directions: (angles[perp], angles[steep]),
        tilt,
        gap,
    })
}

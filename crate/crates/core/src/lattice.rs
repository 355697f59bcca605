//! Two-band photonic lattice models and their Bloch Hamiltonians.
//!
//! Wave vectors are given in reciprocal-primitive coordinates `(k1, k2)`,
//! each component periodic in `2π`. The Bloch Hamiltonian of every model is
//! written as `hI + hx σx + hy σy + hz σz`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Honeycomb lattice with one anisotropic nearest-neighbour bond and
    /// anisotropic next-nearest-neighbour hoppings.
    AnisotropicHoneycomb,
    /// Two-band square-lattice model with flat nodal lines through the cones.
    Mizoguchi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel {
    pub variant: Variant,
    pub j1: f64,
    pub j2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl LatticeModel {
    pub fn honeycomb(j1: f64, j2: f64, beta1: f64, beta2: f64) -> Result<Self> {
        let m = LatticeModel {
            variant: Variant::AnisotropicHoneycomb,
            j1,
            j2,
            beta1,
            beta2,
        };
        m.validate()?;
        Ok(m)
    }

    /// Nearest-neighbour honeycomb with only `beta1` set.
    pub fn nearest(beta1: f64) -> Self {
        LatticeModel {
            variant: Variant::AnisotropicHoneycomb,
            j1: 1.0,
            j2: 0.0,
            beta1,
            beta2: 1.0,
        }
    }

    pub fn mizoguchi(j1: f64, j2: f64) -> Result<Self> {
        let m = LatticeModel {
            variant: Variant::Mizoguchi,
            j1,
            j2,
            beta1: 1.0,
            beta2: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.j1, self.j2, self.beta1, self.beta2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if self.j1 <= 0.0 {
            return Err(Error::InvalidModel(format!("J1 must be positive, got {}", self.j1)));
        }
        if self.variant == Variant::Mizoguchi && (self.beta1 != 1.0 || self.beta2 != 1.0) {
            return Err(Error::InvalidModel(
                "beta1 and beta2 are not parameters of the Mizoguchi variant".into(),
            ));
        }
        Ok(())
    }

    /// Pauli decomposition `(hI, hx, hy, hz)` at `k`.
    #[inline]
    pub fn pauli(&self, k: (f64, f64)) -> [f64; 4] {
        let (k1, k2) = k;
        let (c1, c2) = (k1.cos(), k2.cos());
        match self.variant {
            Variant::AnisotropicHoneycomb => {
                let hi = -2.0 * self.j2 * (c1 + c2 + self.beta2 * (k1 - k2).cos());
                let hx = -self.j1 * (self.beta1 + c1 + c2);
                let hy = -self.j1 * (k1.sin() + k2.sin());
                [hi, hx, hy, 0.0]
            }
            Variant::Mizoguchi => {
                let d = 2.0 * self.j1 * (c1 + c2);
                let a = 2.0 * self.j2 * (c1 - c2);
                [a, a, 0.0, d]
            }
        }
    }

    /// Energy scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.j1
    }
}

/// Everything known about the Bloch Hamiltonian at one wave vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSample {
    pub h_i: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub omega_l: f64,
    pub omega_u: f64,
    pub theta: f64,
    pub phi: f64,
}

impl BlochSample {
    pub fn from_pauli(p: [f64; 4]) -> Self {
        let [h_i, hx, hy, hz] = p;
        let w = (hx * hx + hy * hy + hz * hz).sqrt();
        let theta = if w > 0.0 { (hz / w).clamp(-1.0, 1.0).acos() } else { FRAC_PI_2 };
        BlochSample {
            h_i,
            hx,
            hy,
            hz,
            omega_l: h_i - w,
            omega_u: h_i + w,
            theta,
            phi: azimuth(hx, hy),
        }
    }

    pub fn omega(&self) -> f64 {
        0.5 * (self.omega_u - self.omega_l)
    }

    /// Sublattice content of the band eigenvectors: `[A, B]` rows,
    /// `[upper, lower]` columns.
    pub fn eigenvectors(&self) -> [[Complex64; 2]; 2] {
        band_vectors(self.theta, self.phi)
    }
}

/// `atan2(hy, hx)` on `(-π, π]`, zero where both vanish.
#[inline]
pub fn azimuth(hx: f64, hy: f64) -> f64 {
    if hx == 0.0 && hy == 0.0 {
        return 0.0;
    }
    let p = hy.atan2(hx);
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

#[inline]
pub fn band_vectors(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = Complex64::from_polar(1.0, -phi);
    [
        [e * c, e * s],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ]
}

pub fn bloch_eval(model: &LatticeModel, k: (f64, f64)) -> BlochSample {
    BlochSample::from_pauli(model.pauli(k))
}

/// Map an angle to `[-π, π)`.
pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Band-touching points inside `[-π, π)²`.
pub fn dirac_points(model: &LatticeModel) -> Vec<(f64, f64)> {
    match model.variant {
        Variant::AnisotropicHoneycomb => {
            let c = -0.5 * model.beta1;
            if c < -1.0 || c > 1.0 {
                return Vec::new();
            }
            let k = c.acos();
            let a = (wrap(k), wrap(-k));
            let b = (wrap(-k), wrap(k));
            if a == b {
                vec![a]
            } else {
                vec![a, b]
            }
        }
        Variant::Mizoguchi => {
            let h = FRAC_PI_2;
            vec![(h, h), (h, -h), (-h, h), (-h, -h)]
        }
    }
}

/// Expansion of the bands around the cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeParameters {
    pub v1: f64,
    pub v2: f64,
    pub v01: f64,
    pub v02: f64,
    pub vtilde: f64,
    pub dirac_energy: f64,
    pub dirac_points: Vec<(f64, f64)>,
}

pub fn cone_parameters(model: &LatticeModel) -> Result<ConeParameters> {
    if model.variant != Variant::AnisotropicHoneycomb {
        return Err(Error::Domain(
            "no cone expansion available for the Mizoguchi variant".into(),
        ));
    }
    let (j1, j2, b1, b2) = (model.j1, model.j2, model.beta1, model.beta2);
    if b1 > 2.0 {
        return Err(Error::Domain(format!("beta1 = {b1} > 2 has no band touching")));
    }
    let v1 = j1 * b1 / 2f64.sqrt();
    let v2 = j1 * (2.0 - 0.5 * b1 * b1).max(0.0).sqrt();
    let tilt = b1 * b2 - 1.0;
    Ok(ConeParameters {
        v1,
        v2,
        v01: 0.0,
        v02: 2.0 * (j2 / j1) * v2 * tilt,
        vtilde: 2.0 * (j2 / j1) * tilt.abs(),
        dirac_energy: j2 * (2.0 * b2 + b1 * (2.0 - b1 * b2)),
        dirac_points: dirac_points(model),
    })
}

/// Cartesian wave vector `k1 d1 + k2 d2` with `d1/2 = (1/3, ±1/√3)`,
/// in inverse nearest-neighbour distance units.
pub fn to_cartesian(k: (f64, f64)) -> (f64, f64) {
    let s = 1.0 / 3f64.sqrt();
    ((k.0 + k.1) / 3.0, (k.0 - k.1) * s)
}

/// Cartesian position of a unit cell `n1 c1 + n2 c2`, `c1/2 = (3/2, ±√3/2)`.
pub fn cell_position(n: (i64, i64)) -> (f64, f64) {
    let (a, b) = (n.0 as f64, n.1 as f64);
    (1.5 * (a + b), 0.5 * 3f64.sqrt() * (a - b))
}

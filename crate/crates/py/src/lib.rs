//! Python bindings.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use semidirac::atomarray::{self, ArrayBands, LatticeBands, Sector};
use semidirac::dynamics::{self, EmitterConfig, EmitterSite};
use semidirac::spectral::{self, SelfEnergyOptions};
use semidirac::{lattice, Error, Sublattice, ZeroModes};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Schema { .. } | Error::Range { .. } | Error::InvalidModel(_) | Error::Domain(_) => PyValueError::new_err(msg),
        Error::Convergence(_) | Error::NoRoot(_) | Error::Ambiguous(_) | Error::MissingSnapshot(_) => {
            PyRuntimeError::new_err(msg)
        }
        _ => PyArithmeticError::new_err(msg),
    }
}

fn sublattice(s: &str) -> PyResult<Sublattice> {
    match s {
        "A" | "a" => Ok(Sublattice::A),
        "B" | "b" => Ok(Sublattice::B),
        _ => Err(PyValueError::new_err(format!("sublattice must be 'A' or 'B', got {s:?}"))),
    }
}

/// Two-band lattice model.
#[pyclass(frozen, name = "LatticeModel")]
pub struct PyLatticeModel {
    inner: semidirac::LatticeModel,
}

#[pymethods]
impl PyLatticeModel {
    #[staticmethod]
    #[pyo3(signature = (j1=1.0, j2=0.0, beta1=1.0, beta2=1.0))]
    fn honeycomb(j1: f64, j2: f64, beta1: f64, beta2: f64) -> PyResult<Self> {
        Ok(PyLatticeModel { inner: semidirac::LatticeModel::honeycomb(j1, j2, beta1, beta2).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (j1=1.0, j2=0.0))]
    fn mizoguchi(j1: f64, j2: f64) -> PyResult<Self> {
        Ok(PyLatticeModel { inner: semidirac::LatticeModel::mizoguchi(j1, j2).map_err(to_py)? })
    }

    /// `(hI, hx, hy, hz)` at `(k1, k2)`.
    fn pauli(&self, k1: f64, k2: f64) -> (f64, f64, f64, f64) {
        let p = self.inner.pauli((k1, k2));
        (p[0], p[1], p[2], p[3])
    }

    /// `(omega_l, omega_u)` at `(k1, k2)`.
    fn bands(&self, k1: f64, k2: f64) -> (f64, f64) {
        let s = lattice::bloch_eval(&self.inner, (k1, k2));
        (s.omega_l, s.omega_u)
    }

    fn dirac_points(&self) -> Vec<(f64, f64)> {
        lattice::dirac_points(&self.inner)
    }

    /// Dict with `v1, v2, v01, v02, vtilde, dirac_energy`.
    fn cone_parameters(&self) -> PyResult<std::collections::HashMap<String, f64>> {
        let c = lattice::cone_parameters(&self.inner).map_err(to_py)?;
        Ok([
            ("v1", c.v1),
            ("v2", c.v2),
            ("v01", c.v01),
            ("v02", c.v02),
            ("vtilde", c.vtilde),
            ("dirac_energy", c.dirac_energy),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Bands sampled on an `n1 x n2` grid.
#[pyclass(frozen, name = "BandGrid")]
pub struct PyBandGrid {
    inner: semidirac::BandGrid,
}

#[pymethods]
impl PyBandGrid {
    #[new]
    #[pyo3(signature = (model, n1, n2=None))]
    fn new(model: &PyLatticeModel, n1: usize, n2: Option<usize>) -> PyResult<Self> {
        let inner = semidirac::BandGrid::new(model.inner, n1, n2.unwrap_or(n1)).map_err(to_py)?;
        Ok(PyBandGrid { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn zero_mode_count(&self) -> usize {
        self.inner.zero_mode_count()
    }

    /// `(bin_centers, density)` per unit cell.
    #[pyo3(signature = (n_bins=400))]
    fn density_of_states(&self, n_bins: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let h = spectral::density_of_states(&self.inner, n_bins).map_err(to_py)?;
        Ok((h.centers(), h.counts))
    }

    #[pyo3(signature = (z, g, sublattice="A", exclude_zero_modes=false))]
    fn self_energy(&self, z: Complex64, g: f64, sublattice: &str, exclude_zero_modes: bool) -> PyResult<Complex64> {
        let opts = SelfEnergyOptions {
            sublattice: self::sublattice(sublattice)?,
            zero_modes: if exclude_zero_modes { ZeroModes::Exclude } else { ZeroModes::Include },
        };
        spectral::self_energy_with(&self.inner, z, g, opts).map_err(to_py)
    }

    fn bound_state_energy(&self, delta: f64, g: f64) -> PyResult<f64> {
        spectral::bound_state_energy(&self.inner, delta, g).map_err(to_py)
    }

    /// `(R0, [(n, |C(-n,-n)|)])` for the bound state at energy `e`.
    #[pyo3(signature = (e, g, sublattice="A", cut=64))]
    fn bound_state(&self, e: f64, g: f64, sublattice: &str, cut: usize) -> PyResult<(f64, Vec<(usize, f64)>)> {
        let bs = spectral::bound_state_wavefunction(&self.inner, e, self::sublattice(sublattice)?, g).map_err(to_py)?;
        let hi = cut.min(self.inner.n1.min(self.inner.n2) / 2).max(1);
        Ok((bs.r0, bs.diagonal_cut(1..=hi)))
    }

    fn quasi_bound_overlap(&self, g: f64) -> PyResult<f64> {
        spectral::quasi_bound_overlap(&self.inner, g).map_err(to_py)
    }

    #[pyo3(signature = (delta, g, n_bins=400))]
    fn markovian_rate(&self, delta: f64, g: f64, n_bins: usize) -> PyResult<f64> {
        dynamics::markovian_rate(&self.inner, delta, g, n_bins).map_err(to_py)
    }

    /// Evolves with the first emitter excited; returns `(times, populations)`
    /// with one population list per emitter.
    #[pyo3(signature = (t_max, dt, delta=0.0, g=0.1, emitters=None, record_stride=1))]
    fn evolve(
        &self,
        t_max: f64,
        dt: f64,
        delta: f64,
        g: f64,
        emitters: Option<Vec<(i64, i64, String)>>,
        record_stride: usize,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let positions = match emitters {
            None => vec![EmitterSite::new(0, 0, Sublattice::A)],
            Some(list) => list
                .into_iter()
                .map(|(a, b, s)| Ok(EmitterSite::new(a, b, sublattice(&s)?)))
                .collect::<PyResult<_>>()?,
        };
        let em = EmitterConfig { positions, delta, g };
        let opts = dynamics::EvolveOptions { record_stride, ..dynamics::EvolveOptions::new(t_max, dt) };
        let init = dynamics::State::excited(em.positions.len(), 0, self.inner.len());
        let (rec, _) = dynamics::evolve_state(&self.inner, &em, init, &opts).map_err(to_py)?;
        let pops = (0..em.positions.len()).map(|j| rec.population(j)).collect();
        Ok((rec.times, pops))
    }
}

/// Band structure of a dipole array along a path; returns one
/// `(kx, ky, omegas, gammas, z_weights)` tuple per k-point.
#[pyfunction]
#[pyo3(signature = (d, beta, path, shells=60, certify=true))]
#[allow(clippy::type_complexity)]
fn array_bands(
    d: f64,
    beta: f64,
    path: Vec<(f64, f64)>,
    shells: usize,
    certify: bool,
) -> PyResult<Vec<(f64, f64, Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let m = atomarray::ArrayModel::new(d, beta).map_err(to_py)?;
    let pts = atomarray::array_band_structure_with(&m, &path, shells, certify).map_err(to_py)?;
    Ok(pts
        .into_iter()
        .map(|p| {
            let z = p.polarization_weights.iter().map(|w| w[0]).collect();
            (p.k.0, p.k.1, p.omegas.to_vec(), p.gammas.to_vec(), z)
        })
        .collect())
}

/// High-symmetry points `(Gamma, K, M)` of a dipole array with spacing `d`.
#[pyfunction]
fn array_points(d: f64) -> PyResult<((f64, f64), (f64, f64), (f64, f64))> {
    let m = atomarray::ArrayModel::new(d, 1.0).map_err(to_py)?;
    Ok((m.gamma_point(), m.k_point(), m.m_point()))
}

/// Crossing type at `k_star` for a lattice model.
#[pyfunction]
#[pyo3(signature = (model, k_star, window=None))]
fn classify_lattice(model: &PyLatticeModel, k_star: (f64, f64), window: Option<f64>) -> PyResult<(String, f64, f64)> {
    let src = LatticeBands(model.inner);
    let w = window.unwrap_or_else(|| atomarray::default_window(&src));
    let c = atomarray::classify_crossing(&src, k_star, w).map_err(to_py)?;
    Ok((format!("{:?}", c.kind), c.exponents.0, c.exponents.1))
}

/// Crossing type of a dipole-array sector (`"in_plane"` or `"out_of_plane"`).
#[pyfunction]
#[pyo3(signature = (d, beta, sector, lower, k_star, shells=60, window=None))]
fn classify_array(
    d: f64,
    beta: f64,
    sector: &str,
    lower: usize,
    k_star: (f64, f64),
    shells: usize,
    window: Option<f64>,
) -> PyResult<(String, f64, f64)> {
    let sector = match sector {
        "in_plane" => Sector::InPlane,
        "out_of_plane" => Sector::OutOfPlane,
        _ => return Err(PyValueError::new_err("sector must be 'in_plane' or 'out_of_plane'")),
    };
    let model = atomarray::ArrayModel::new(d, beta).map_err(to_py)?;
    let src = ArrayBands { model, sector, lower, shells };
    let w = window.unwrap_or_else(|| atomarray::default_window(&src));
    let c = atomarray::classify_crossing(&src, k_star, w).map_err(to_py)?;
    Ok((format!("{:?}", c.kind), c.exponents.0, c.exponents.1))
}

/// Runs a CLI command from a JSON config; returns the exit status.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir, threads=None))]
fn run_config(config_json: &str, out_dir: &str, threads: Option<usize>) -> PyResult<i32> {
    let mut cfg = semidirac::cli::parse_config(config_json).map_err(to_py)?;
    cfg.output.directory = out_dir.to_string();
    semidirac::cli::run_to_directory(&cfg, std::path::Path::new(out_dir), threads).map_err(to_py)
}

#[pymodule]
pub fn pysemidirac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLatticeModel>()?;
    m.add_class::<PyBandGrid>()?;
    m.add_function(wrap_pyfunction!(array_bands, m)?)?;
    m.add_function(wrap_pyfunction!(array_points, m)?)?;
    m.add_function(wrap_pyfunction!(classify_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(classify_array, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}

//! Command execution and artifact serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::config::{Command, Model, RunConfig};
use crate::atomarray::{self, ArrayBands, LatticeBands};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::lattice::{self, Variant};
use crate::spectral::{self, BandGrid, SelfEnergyOptions};

/// One output table held in memory until the run has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub diagnostics: Map<String, Value>,
}

/// Shortest exact decimal form with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    text: String,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    fn into_artifact(self, name: &str) -> Artifact {
        Artifact { name: name.into(), content: self.text }
    }
}

fn grid_of(cfg: &RunConfig) -> Result<BandGrid> {
    let g = cfg.grid.as_ref().expect("resolved grid");
    BandGrid::new(cfg.lattice_model()?, g.n1, g.n2)
}

fn lattice_path(cfg: &RunConfig) -> Vec<(f64, f64)> {
    let p = cfg.path.as_ref().expect("resolved path");
    let corners: Vec<(f64, f64)> = p.points.as_ref().unwrap().iter().map(|c| (c[0], c[1])).collect();
    atomarray::k_path(&corners, p.points_per_segment)
}

fn array_path(cfg: &RunConfig, model: &atomarray::ArrayModel) -> Vec<(f64, f64)> {
    let p = cfg.path.as_ref().expect("resolved path");
    let corners: Vec<(f64, f64)> = match (&p.labels, &p.points) {
        (Some(l), _) => l
            .iter()
            .map(|s| match s.as_str() {
                "K" => model.k_point(),
                "M" => model.m_point(),
                _ => model.gamma_point(),
            })
            .collect(),
        (None, Some(pts)) => pts.iter().map(|c| (c[0], c[1])).collect(),
        (None, None) => unreachable!("resolved path"),
    };
    atomarray::k_path(&corners, p.points_per_segment)
}

/// Runs one resolved configuration and returns its tables.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    match cfg.command {
        Command::Bands => bands(cfg, &mut out)?,
        Command::Dos => dos(cfg, &mut out)?,
        Command::Selfenergy => selfenergy(cfg, &mut out)?,
        Command::Boundstate => boundstate(cfg, &mut out)?,
        Command::Dynamics => run_dynamics(cfg, &mut out, false)?,
        Command::Radiation => run_dynamics(cfg, &mut out, true)?,
        Command::ArrayBands => array_bands(cfg, &mut out)?,
        Command::Classify => classify(cfg, &mut out)?,
    }
    Ok(out)
}

const BAND_COLUMNS: [&str; 8] = [
    "hI_over_J1",
    "hx_over_J1",
    "hy_over_J1",
    "hz_over_J1",
    "omega_l_over_J1",
    "omega_u_over_J1",
    "theta_rad",
    "phi_rad",
];

fn band_cells(s: &lattice::BlochSample, j1: f64) -> Vec<String> {
    vec![
        num(s.h_i / j1),
        num(s.hx / j1),
        num(s.hy / j1),
        num(s.hz / j1),
        num(s.omega_l / j1),
        num(s.omega_u / j1),
        num(s.theta),
        num(s.phi),
    ]
}

fn bands(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let model = cfg.lattice_model()?;
    if cfg.path.is_some() {
        let path = lattice_path(cfg);
        let mut header = vec!["index", "k1", "k2"];
        header.extend(BAND_COLUMNS);
        let mut t = Table::new(&header);
        for (i, &k) in path.iter().enumerate() {
            let mut cells = vec![i.to_string(), num(k.0), num(k.1)];
            cells.extend(band_cells(&lattice::bloch_eval(&model, k), model.j1));
            t.row(&cells);
        }
        out.artifacts.push(t.into_artifact("bands.csv"));
        out.diagnostics.insert("points".into(), json!(path.len()));
    } else {
        let grid = grid_of(cfg)?;
        let mut header = vec!["n1", "n2", "k1", "k2"];
        header.extend(BAND_COLUMNS);
        let mut t = Table::new(&header);
        for i in 0..grid.len() {
            let k = grid.k(i);
            let mut cells = vec![(i / grid.n2).to_string(), (i % grid.n2).to_string(), num(k.0), num(k.1)];
            cells.extend(band_cells(&grid.sample(i), model.j1));
            t.row(&cells);
        }
        out.artifacts.push(t.into_artifact("bands.csv"));
        out.diagnostics.insert("zero_modes".into(), json!(grid.zero_mode_count()));
    }
    if let Ok(c) = lattice::cone_parameters(&model) {
        out.diagnostics.insert(
            "cone".into(),
            json!({"v1": c.v1, "v2": c.v2, "v01": c.v01, "v02": c.v02, "vtilde": c.vtilde,
                   "dirac_energy": c.dirac_energy, "dirac_points": c.dirac_points}),
        );
    }
    Ok(())
}

fn dos(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let grid = grid_of(cfg)?;
    let j1 = grid.model.j1;
    let h = spectral::density_of_states(&grid, cfg.numeric.n_bins)?;
    let mut t = Table::new(&["E_over_J1", "D"]);
    for (c, d) in h.centers().iter().zip(&h.counts) {
        t.row(&[num(c / j1), num(d * j1)]);
    }
    out.artifacts.push(t.into_artifact("dos.csv"));
    out.diagnostics.insert("normalization".into(), json!(2));
    out.diagnostics.insert("integral".into(), json!(h.integral()));
    out.diagnostics.insert("bin_width_over_J1".into(), json!(h.bin_width() / j1));
    Ok(())
}

fn selfenergy(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let grid = grid_of(cfg)?;
    let j1 = grid.model.j1;
    let em = cfg.emitter_config().expect("resolved emitters");
    let opts = SelfEnergyOptions {
        sublattice: em.positions[0].sublattice,
        zero_modes: cfg.numeric.zero_modes,
    };
    let mut t = Table::new(&["E_over_J1", "eta_over_J1", "re_sigma_over_J1", "im_sigma_over_J1"]);
    for &e in &cfg.numeric.energies {
        let z = Complex64::new(e, cfg.numeric.eta);
        let s = spectral::self_energy_with(&grid, z, em.g, opts)?;
        t.row(&[num(e / j1), num(cfg.numeric.eta / j1), num(s.re / j1), num(s.im / j1)]);
    }
    out.artifacts.push(t.into_artifact("selfenergy.csv"));
    out.diagnostics.insert("zero_modes_on_grid".into(), json!(grid.zero_mode_count()));
    Ok(())
}

fn boundstate(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let grid = grid_of(cfg)?;
    let j1 = grid.model.j1;
    let em = cfg.emitter_config().expect("resolved emitters");
    let sub = em.positions[0].sublattice;
    let opts = SelfEnergyOptions { sublattice: sub, zero_modes: cfg.numeric.zero_modes };
    let e = spectral::bound_state_energy_with(&grid, em.delta, em.g, opts)?;
    let bs = spectral::bound_state_wavefunction(&grid, e, sub, em.g)?;
    let mut t = Table::new(&["E_BS_over_J1", "delta_over_J1", "g_over_J1", "R0"]);
    t.row(&[num(e / j1), num(em.delta / j1), num(em.g / j1), num(bs.r0)]);
    out.artifacts.push(t.into_artifact("boundstate.csv"));
    let mut w = Table::new(&["p1", "p2", "re_C_a", "im_C_a", "re_C_b", "im_C_b"]);
    for p1 in 0..grid.n1 {
        for p2 in 0..grid.n2 {
            let i = p1 * grid.n2 + p2;
            w.row(&[
                p1.to_string(),
                p2.to_string(),
                num(bs.c_a[i].re),
                num(bs.c_a[i].im),
                num(bs.c_b[i].re),
                num(bs.c_b[i].im),
            ]);
        }
    }
    out.artifacts.push(w.into_artifact("wavefunction.csv"));
    out.diagnostics.insert("norm".into(), json!(bs.norm_sqr()));
    Ok(())
}

fn run_dynamics(cfg: &RunConfig, out: &mut Outcome, radiation: bool) -> Result<()> {
    let grid = grid_of(cfg)?;
    let j1 = grid.model.j1;
    let em = cfg.emitter_config().expect("resolved emitters");
    let n = &cfg.numeric;
    let opts = dynamics::EvolveOptions {
        t_max: n.t_max,
        dt: n.dt.expect("resolved dt"),
        snapshot_times: n.snapshot_times.clone(),
        record_stride: n.record_stride,
    };
    let init = dynamics::State::excited(em.positions.len(), 0, grid.len());
    let (rec, _) = dynamics::evolve_state(&grid, &em, init, &opts)?;
    let mut t = Table::new(&["t_times_J1", "emitter", "re_C_e", "im_C_e", "population"]);
    for (s, &time) in rec.times.iter().enumerate() {
        for j in 0..em.positions.len() {
            let c = rec.c_e[j][s];
            t.row(&[num(time * j1), j.to_string(), num(c.re), num(c.im), num(c.norm_sqr())]);
        }
    }
    out.artifacts.push(t.into_artifact("emitter.csv"));
    out.diagnostics.insert("norm_drift".into(), json!(rec.norm_drift));
    out.diagnostics.insert("dt".into(), json!(rec.dt));
    out.diagnostics.insert("plateau".into(), json!(rec.plateau(0)));

    let variant = grid.model.variant;
    let mut snaps = Vec::new();
    for (i, s) in rec.snapshots.iter().enumerate() {
        let map = dynamics::radiation_snapshot_for(&rec, s.t, variant)?;
        let name = format!("snapshot_{i:03}.csv");
        if radiation {
            let mut t = Table::new(&["n1", "n2", "abs_C_a_sq", "abs_C_b_sq"]);
            for d in map.offsets() {
                let (a, b) = map.at(d);
                t.row(&[d.0.to_string(), d.1.to_string(), num(a), num(b)]);
            }
            out.artifacts.push(t.into_artifact(&name));
        }
        snaps.push(json!({
            "t": s.t,
            "file": if radiation { Value::String(name) } else { Value::Null },
            "bath_population": map.total(),
            "fraction_within_10": map.fraction_within(10.0),
        }));
    }
    out.diagnostics.insert("snapshots".into(), Value::Array(snaps));
    if variant == Variant::Mizoguchi {
        out.diagnostics.insert("coordinates".into(), json!("square cells"));
    }
    Ok(())
}

fn array_bands(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let Model::Array(model) = cfg.model()? else {
        unreachable!("validated variant")
    };
    let path = array_path(cfg, &model);
    let pts = atomarray::array_band_structure_with(&model, &path, cfg.numeric.cutoff_shells, cfg.numeric.certify)?;
    let mut t = Table::new(&["kx_times_lambda", "ky_times_lambda", "band", "omega_over_Gamma", "gamma_over_Gamma", "z_weight"]);
    let (l, g) = (model.lambda_a, model.gamma_a);
    for p in &pts {
        for b in 0..6 {
            t.row(&[
                num(p.k.0 * l),
                num(p.k.1 * l),
                b.to_string(),
                num(p.omegas[b] / g),
                num(p.gammas[b] / g),
                num(p.polarization_weights[b][0]),
            ]);
        }
    }
    out.artifacts.push(t.into_artifact("bands.csv"));
    out.diagnostics.insert("points".into(), json!(pts.len()));
    out.diagnostics.insert("cutoff_shells".into(), json!(cfg.numeric.cutoff_shells));
    out.diagnostics.insert("certified_by_doubling".into(), json!(cfg.numeric.certify));
    if cfg.numeric.certify {
        let checked: Vec<f64> = pts.iter().filter_map(|p| p.doubling_change).collect();
        out.diagnostics.insert("certified_points".into(), json!(checked.len()));
        out.diagnostics.insert("max_doubling_change".into(), json!(checked.iter().copied().fold(0.0, f64::max)));
    }
    Ok(())
}

fn classify(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let n = &cfg.numeric;
    let c = match cfg.model()? {
        Model::Lattice(m) => {
            let src = LatticeBands(m);
            let k = match n.k_star {
                Some(k) => (k[0], k[1]),
                None => lattice::dirac_points(&m).first().copied().unwrap_or((-std::f64::consts::PI, -std::f64::consts::PI)),
            };
            let w = n.window.unwrap_or_else(|| atomarray::default_window(&src));
            atomarray::classify_crossing(&src, k, w)?
        }
        Model::Array(m) => {
            let src = ArrayBands { model: m, sector: n.sector, lower: n.lower_band, shells: n.cutoff_shells };
            let k = match n.k_star {
                Some(k) => (k[0], k[1]),
                None => atomarray::locate_crossing(&src, &array_path(cfg, &m))?.0,
            };
            let w = n.window.unwrap_or_else(|| atomarray::default_window(&src));
            let c = atomarray::classify_crossing(&src, k, w)?;
            if atomarray::certifiable(&m, k, n.cutoff_shells) {
                let bm = atomarray::bloch_matrix_unchecked(&m, k, n.cutoff_shells)?;
                let change = atomarray::doubling_change(&m, k, n.cutoff_shells, &bm)?;
                out.diagnostics.insert("doubling_change".into(), json!(change));
            }
            out.diagnostics.insert("window".into(), json!(w));
            c
        }
    };
    let mut t = Table::new(&["kind", "k_1", "k_2", "exponent_low", "exponent_high", "tilt", "gap"]);
    t.row(&[
        format!("{:?}", c.kind),
        num(c.k_star.0),
        num(c.k_star.1),
        num(c.exponents.0),
        num(c.exponents.1),
        num(c.tilt),
        num(c.gap),
    ]);
    out.artifacts.push(t.into_artifact("classification.csv"));
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidModel(_) => "InvalidModel",
        Error::Domain(_) => "DomainError",
        Error::Pole(_) => "PoleError",
        Error::NoRoot(_) => "NoRootError",
        Error::InsufficientData(_) => "InsufficientData",
        Error::StepSize(_) => "StepSizeError",
        Error::MissingSnapshot(_) => "MissingSnapshotError",
        Error::Singular(_) => "SingularError",
        Error::Convergence(_) => "ConvergenceError",
        Error::Ambiguous(_) => "AmbiguousError",
        Error::Schema { .. } => "SchemaError",
        Error::Range { .. } => "RangeError",
        Error::Io(_) => "IoError",
    }
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Executes `cfg` on a pool of `threads` workers and writes all artifacts,
/// `resolved_config.json` and `manifest.json` into `dir`. On failure only
/// the manifest is written. Returns the process exit status.
pub fn run_to_directory(cfg: &RunConfig, dir: &Path, threads: Option<usize>) -> Result<i32> {
    fs::create_dir_all(dir)?;
    let text = cfg.to_json();
    let hash = sha256_hex(&text);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let result = pool.install(|| execute(cfg));
    let wall = start.elapsed().as_secs_f64();
    let mut manifest = json!({
        "command": cfg.command.name(),
        "config_sha256": hash,
        "wall_time_s": wall,
        "threads": pool.current_num_threads(),
    });
    let code = match result {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                fs::write(dir.join(&a.name), &a.content)?;
            }
            fs::write(dir.join("resolved_config.json"), &text)?;
            manifest["status"] = json!("ok");
            manifest["outputs"] = json!(outcome.artifacts.iter().map(|a| a.name.clone()).collect::<Vec<_>>());
            manifest["diagnostics"] = Value::Object(outcome.diagnostics);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            manifest["status"] = json!("error");
            manifest["error"] = json!({"kind": error_kind(&e), "message": e.to_string(), "exit_code": e.exit_code()});
            e.exit_code()
        }
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("manifest"))?;
    Ok(code)
}

/// Records a failure that happened before a configuration could be resolved.
pub fn write_failure(dir: &Path, command: &str, e: &Error) -> i32 {
    eprintln!("error: {e}");
    let manifest = json!({
        "command": command,
        "status": "error",
        "error": {"kind": error_kind(e), "message": e.to_string(), "exit_code": e.exit_code()},
    });
    if fs::create_dir_all(dir).is_ok() {
        let _ = fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("manifest"));
    }
    e.exit_code()
}

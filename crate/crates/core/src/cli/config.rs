//! Run configuration: parsing, default resolution and validation.

use serde::{Deserialize, Serialize};

use crate::atomarray::{ArrayModel, Sector, MIN_SHELLS};
use crate::dynamics::{EmitterConfig, EmitterSite, STEP_RULE};
use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, Variant};
use crate::spectral::{Sublattice, ZeroModes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bands,
    Dos,
    Selfenergy,
    Boundstate,
    Dynamics,
    Radiation,
    ArrayBands,
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Dos => "dos",
            Command::Selfenergy => "selfenergy",
            Command::Boundstate => "boundstate",
            Command::Dynamics => "dynamics",
            Command::Radiation => "radiation",
            Command::ArrayBands => "array-bands",
            Command::Classify => "classify",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    AnisotropicHoneycomb,
    Mizoguchi,
    DipoleArray,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    #[serde(rename = "J1", default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(rename = "J2", default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_a: Option<f64>,
    #[serde(rename = "Gamma_a", default, skip_serializing_if = "Option::is_none")]
    pub gamma_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N1", default = "default_n")]
    pub n1: usize,
    #[serde(rename = "N2", default = "default_n")]
    pub n2: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n1: default_n(), n2: default_n() }
    }
}

fn default_n() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Corner names among `G`, `K`, `M` (dipole arrays only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Explicit corners; `(k1, k2)` for lattices, `(kx, ky)` for arrays.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_per_segment")]
    pub points_per_segment: usize,
}

fn default_per_segment() -> usize {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionConfig {
    pub n1: i64,
    pub n2: i64,
    #[serde(default = "default_sublattice")]
    pub sublattice: Sublattice,
}

fn default_sublattice() -> Sublattice {
    Sublattice::A
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmittersConfig {
    #[serde(default = "default_positions")]
    pub positions: Vec<PositionConfig>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_g")]
    pub g: f64,
}

impl Default for EmittersConfig {
    fn default() -> Self {
        EmittersConfig { positions: default_positions(), delta: 0.0, g: default_g() }
    }
}

fn default_positions() -> Vec<PositionConfig> {
    vec![PositionConfig { n1: 0, n2: 0, sublattice: Sublattice::A }]
}

fn default_g() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericConfig {
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_shells")]
    pub cutoff_shells: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Real parts of the self-energy arguments.
    #[serde(default = "default_energies")]
    pub energies: Vec<f64>,
    #[serde(default)]
    pub zero_modes: ZeroModes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<[f64; 2]>,
    #[serde(default = "default_sector")]
    pub sector: Sector,
    #[serde(default)]
    pub lower_band: usize,
    #[serde(default = "default_true")]
    pub certify: bool,
}

impl Default for NumericConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

fn default_bins() -> usize {
    400
}
fn default_t_max() -> f64 {
    100.0
}
fn default_eta() -> f64 {
    1e-6
}
fn default_shells() -> usize {
    crate::atomarray::DEFAULT_SHELLS
}
fn default_stride() -> usize {
    1
}
fn default_energies() -> Vec<f64> {
    vec![0.0]
}
fn default_sector() -> Sector {
    Sector::OutOfPlane
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_dir(), format: Format::Csv }
    }
}

fn default_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emitters: Option<EmittersConfig>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either kind of physical model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Lattice(LatticeModel),
    Array(ArrayModel),
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

fn range(path: &str, message: impl Into<String>) -> Error {
    Error::Range { path: path.into(), message: message.into() }
}

fn check(ok: bool, path: &str, value: impl std::fmt::Display, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(range(path, format!("value {value} violates {rule}")))
    }
}

/// Parses, resolves defaults and validates a JSON document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })?;
    raw.resolve()
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn needs_lattice(&self) -> bool {
        matches!(
            self.command,
            Command::Bands | Command::Dos | Command::Selfenergy | Command::Boundstate | Command::Dynamics | Command::Radiation
        )
    }

    fn needs_emitters(&self) -> bool {
        matches!(self.command, Command::Selfenergy | Command::Boundstate | Command::Dynamics | Command::Radiation)
    }

    /// Fills command-dependent defaults and validates every field.
    pub fn resolve(mut self) -> Result<RunConfig> {
        let m = &mut self.model;
        let array_keys = [("d", m.d), ("beta", m.beta), ("lambda_a", m.lambda_a), ("Gamma_a", m.gamma_a)];
        let lattice_keys = [("J1", m.j1), ("J2", m.j2), ("beta1", m.beta1), ("beta2", m.beta2)];
        match m.variant {
            ModelVariant::AnisotropicHoneycomb | ModelVariant::Mizoguchi => {
                if let Some((k, _)) = array_keys.iter().find(|(_, v)| v.is_some()) {
                    return Err(schema(&format!("model.{k}"), "not a parameter of lattice models"));
                }
                m.j1 = Some(m.j1.unwrap_or(1.0));
                m.j2 = Some(m.j2.unwrap_or(0.0));
                if m.variant == ModelVariant::Mizoguchi {
                    for (k, v) in [("beta1", m.beta1), ("beta2", m.beta2)] {
                        if v.is_some_and(|x| x != 1.0) {
                            return Err(schema(&format!("model.{k}"), "Mizoguchi model takes no anisotropy parameters"));
                        }
                    }
                    m.beta1 = None;
                    m.beta2 = None;
                } else {
                    m.beta1 = Some(m.beta1.unwrap_or(1.0));
                    m.beta2 = Some(m.beta2.unwrap_or(1.0));
                }
                let j1 = m.j1.unwrap();
                check(j1.is_finite() && j1 > 0.0, "model.J1", j1, "J1 > 0")?;
                let j2 = m.j2.unwrap();
                check(j2.is_finite() && j2 >= 0.0, "model.J2", j2, "J2 >= 0")?;
                for (k, v) in [("beta1", m.beta1), ("beta2", m.beta2)] {
                    if let Some(x) = v {
                        check(x.is_finite() && x >= 0.0, &format!("model.{k}"), x, &format!("{k} >= 0"))?;
                    }
                }
            }
            ModelVariant::DipoleArray => {
                if let Some((k, _)) = lattice_keys.iter().find(|(_, v)| v.is_some()) {
                    return Err(schema(&format!("model.{k}"), "not a parameter of dipole arrays"));
                }
                for (k, v) in [("d", m.d), ("beta", m.beta)] {
                    if v.is_none() {
                        return Err(schema(&format!("model.{k}"), "required for DipoleArray"));
                    }
                }
                m.lambda_a = Some(m.lambda_a.unwrap_or(1.0));
                m.gamma_a = Some(m.gamma_a.unwrap_or(1.0));
                for (k, v) in [("d", m.d), ("beta", m.beta), ("lambda_a", m.lambda_a), ("Gamma_a", m.gamma_a)] {
                    let x = v.unwrap();
                    check(x.is_finite() && x > 0.0, &format!("model.{k}"), x, &format!("{k} > 0"))?;
                }
            }
        }

        let is_array = self.model.variant == ModelVariant::DipoleArray;
        if self.needs_lattice() && is_array {
            return Err(schema("model.variant", format!("command {} needs a lattice model", self.command.name())));
        }
        if self.command == Command::ArrayBands && !is_array {
            return Err(schema("model.variant", "array-bands needs a DipoleArray model"));
        }

        let uses_grid = matches!(
            self.command,
            Command::Dos | Command::Selfenergy | Command::Boundstate | Command::Dynamics | Command::Radiation
        ) || (self.command == Command::Bands && self.path.is_none());
        if uses_grid {
            let g = self.grid.get_or_insert_with(GridConfig::default);
            check(g.n1 >= 2 && g.n1 <= 1 << 14, "grid.N1", g.n1, "2 <= N1 <= 16384")?;
            check(g.n2 >= 2 && g.n2 <= 1 << 14, "grid.N2", g.n2, "2 <= N2 <= 16384")?;
        } else if self.grid.is_some() {
            return Err(schema("grid", format!("not used by {}", self.command.name())));
        }

        let uses_path = self.command == Command::ArrayBands
            || (self.command == Command::Classify && is_array && self.numeric.k_star.is_none())
            || (self.command == Command::Bands && self.path.is_some());
        if uses_path {
            let p = self.path.get_or_insert_with(|| PathConfig {
                labels: None,
                points: None,
                points_per_segment: default_per_segment(),
            });
            if p.labels.is_none() && p.points.is_none() {
                if is_array {
                    p.labels = Some(vec!["G".into(), "K".into(), "M".into(), "G".into()]);
                } else {
                    return Err(schema("path.points", "lattice paths need explicit points"));
                }
            }
            if p.labels.is_some() && p.points.is_some() {
                return Err(schema("path", "give either labels or points, not both"));
            }
            if let Some(l) = &p.labels {
                if !is_array {
                    return Err(schema("path.labels", "labels are defined for dipole arrays only"));
                }
                if let Some((i, bad)) = l.iter().enumerate().find(|(_, s)| !["G", "K", "M"].contains(&s.as_str())) {
                    return Err(schema(&format!("path.labels[{i}]"), format!("unknown point {bad:?}")));
                }
            }
            let n = p.labels.as_ref().map(Vec::len).or(p.points.as_ref().map(Vec::len)).unwrap();
            check(n >= 2, "path", n, "at least two corners")?;
            check(p.points_per_segment >= 1, "path.points_per_segment", p.points_per_segment, ">= 1")?;
        } else if self.path.is_some() && self.command != Command::Bands {
            return Err(schema("path", format!("not used by {}", self.command.name())));
        }

        if self.needs_emitters() {
            let e = self.emitters.get_or_insert_with(EmittersConfig::default);
            check(!e.positions.is_empty(), "emitters.positions", 0, "at least one emitter")?;
            check(
                e.positions.len() <= crate::dynamics::MAX_EMITTERS,
                "emitters.positions",
                e.positions.len(),
                "at most 8 emitters",
            )?;
            check(e.g.is_finite() && e.g >= 0.0, "emitters.g", e.g, "g >= 0")?;
            check(e.delta.is_finite(), "emitters.delta", e.delta, "finite")?;
            if let Some(g) = &self.grid {
                for (i, p) in e.positions.iter().enumerate() {
                    let ok = (p.n1.unsigned_abs() as usize) < g.n1 && (p.n2.unsigned_abs() as usize) < g.n2;
                    check(ok, &format!("emitters.positions[{i}]"), format!("({}, {})", p.n1, p.n2), "|n| < N")?;
                }
            }
        } else if self.emitters.is_some() {
            return Err(schema("emitters", format!("not used by {}", self.command.name())));
        }

        let n = &mut self.numeric;
        check(n.n_bins >= 2, "numeric.n_bins", n.n_bins, "n_bins >= 2")?;
        check(n.t_max.is_finite() && n.t_max >= 0.0, "numeric.t_max", n.t_max, "t_max >= 0")?;
        check(n.eta.is_finite() && n.eta >= 0.0, "numeric.eta", n.eta, "eta >= 0")?;
        check(n.cutoff_shells >= MIN_SHELLS, "numeric.cutoff_shells", n.cutoff_shells, "cutoff_shells >= 8")?;
        check(n.record_stride >= 1, "numeric.record_stride", n.record_stride, "record_stride >= 1")?;
        for (i, t) in n.snapshot_times.iter().enumerate() {
            check(
                t.is_finite() && *t >= 0.0 && *t <= n.t_max,
                &format!("numeric.snapshot_times[{i}]"),
                t,
                "0 <= t <= t_max",
            )?;
        }
        if let Some(w) = n.window {
            check(w.is_finite() && w > 0.0, "numeric.window", w, "window > 0")?;
        }
        for (i, e) in n.energies.iter().enumerate() {
            check(e.is_finite(), &format!("numeric.energies[{i}]"), e, "finite")?;
        }
        if self.command == Command::Selfenergy {
            check(!n.energies.is_empty(), "numeric.energies", 0, "at least one energy")?;
        }
        if self.command == Command::Radiation {
            check(!n.snapshot_times.is_empty(), "numeric.snapshot_times", 0, "at least one time")?;
        }
        if matches!(self.command, Command::Dynamics | Command::Radiation) {
            let e = self.emitters.as_ref().unwrap();
            let model = self.lattice_model()?;
            let bound = STEP_RULE / spectral_bound(&model).max(e.delta.abs()).max(e.g);
            let dt = *self.numeric.dt.get_or_insert(bound);
            check(dt.is_finite() && dt > 0.0 && dt <= bound, "numeric.dt", dt, &format!("0 < dt <= {bound}"))?;
        } else if self.numeric.dt.is_some() {
            return Err(schema("numeric.dt", format!("not used by {}", self.command.name())));
        }
        self.model()?;
        Ok(self)
    }

    pub fn model(&self) -> Result<Model> {
        let m = &self.model;
        match m.variant {
            ModelVariant::AnisotropicHoneycomb => Ok(Model::Lattice(LatticeModel {
                variant: Variant::AnisotropicHoneycomb,
                j1: m.j1.unwrap_or(1.0),
                j2: m.j2.unwrap_or(0.0),
                beta1: m.beta1.unwrap_or(1.0),
                beta2: m.beta2.unwrap_or(1.0),
            })),
            ModelVariant::Mizoguchi => Ok(Model::Lattice(LatticeModel::mizoguchi(
                m.j1.unwrap_or(1.0),
                m.j2.unwrap_or(0.0),
            )?)),
            ModelVariant::DipoleArray => {
                let a = ArrayModel {
                    d: m.d.unwrap_or(0.0),
                    beta: m.beta.unwrap_or(0.0),
                    lambda_a: m.lambda_a.unwrap_or(1.0),
                    gamma_a: m.gamma_a.unwrap_or(1.0),
                };
                a.validate()?;
                Ok(Model::Array(a))
            }
        }
    }

    pub fn lattice_model(&self) -> Result<LatticeModel> {
        match self.model()? {
            Model::Lattice(l) => Ok(l),
            Model::Array(_) => Err(schema("model.variant", "a lattice model is required")),
        }
    }

    pub fn emitter_config(&self) -> Option<EmitterConfig> {
        self.emitters.as_ref().map(|e| EmitterConfig {
            positions: e.positions.iter().map(|p| EmitterSite::new(p.n1, p.n2, p.sublattice)).collect(),
            delta: e.delta,
            g: e.g,
        })
    }
}

/// Upper bound on `|omega|` over the Brillouin zone.
pub fn spectral_bound(m: &LatticeModel) -> f64 {
    match m.variant {
        Variant::AnisotropicHoneycomb => 2.0 * m.j2.abs() * (2.0 + m.beta2.abs()) + m.j1 * (m.beta1.abs() + 2.0),
        Variant::Mizoguchi => 4.0 * m.j2.abs() + 4.0 * (m.j1 * m.j1 + m.j2 * m.j2).sqrt(),
    }
}

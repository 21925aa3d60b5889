//! Run configuration for `nsmpb solve`.
//!
//! The file is TOML restricted to dotted keys, for example
//!
//! ```toml
//! model = "nsmpb"
//! molecule.charge = 1.0
//! mesh.born.divisions = 12
//! solvent.eps_inf = 1.8
//! newton.selection_order = [2, 1, 3, 4]
//! output.prefix = "born"
//! ```
//!
//! Every key is optional except for one molecule source (`molecule.pqr`, or
//! `molecule.charge` with optional `molecule.center`) and one mesh source
//! (`mesh.node` with `mesh.ele`, or a `mesh.born` section). Relative paths
//! are resolved against the directory holding the configuration file.
//! Loading reports every offending key at once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nsmpb_core::mesh::BornMeshParams;
use nsmpb_core::model::{
    build_solvent_model, default_species, derive_constants, DielectricParams, IonSpecies, PhysicalConstants,
    SolventModel,
};
use nsmpb_core::solver::{ModelKind, NewtonConfig};
use nsmpb_core::sparse::GmresConfig;
use toml::{Table, Value};

/// Every problem found while loading a configuration file.
#[derive(Debug)]
pub struct ConfigErrors {
    pub path: PathBuf,
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} has {} error(s):", self.path.display(), self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum MoleculeSource {
    Pqr(PathBuf),
    /// A single point charge, in units of the elementary charge.
    Ion { charge: f64, center: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Tetgen { node: PathBuf, ele: PathBuf },
    Born(BornMeshParams),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub molecule: MoleculeSource,
    pub mesh: MeshSource,
    pub solvent: SolventModel,
    pub newton: NewtonConfig,
    pub linear: GmresConfig,
    /// Run assembly and kernel evaluation on the rayon pool; `false` pins
    /// the pool to one thread.
    pub parallel: bool,
    pub output_prefix: PathBuf,
    /// Every key set in the file with its value as written, sorted by key.
    pub overrides: Vec<(String, String)>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigErrors> {
        let fail = |errors| ConfigErrors {
            path: path.to_path_buf(),
            errors,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(vec![format!("cannot read file: {e}")]))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let default_prefix = base.join(path.file_stem().unwrap_or_default());
        Self::parse(&text, &base, default_prefix).map_err(fail)
    }

    /// Parse configuration text. Relative paths are resolved against
    /// `base`; `default_prefix` applies when `output.prefix` is absent.
    pub fn parse(text: &str, base: &Path, default_prefix: PathBuf) -> Result<Self, Vec<String>> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| vec![format!("syntax: {}", e.message())])?;
        let mut r = Reader::new(&table, base);

        let model = match r.string("model") {
            None => ModelKind::Nsmpb,
            Some(name) => ModelKind::from_name(&name).unwrap_or_else(|| {
                r.error("model", format!("unknown model {name:?}; expected nsmpb, nmpb, smpb or linear-nsmpb"));
                ModelKind::Nsmpb
            }),
        };
        let parallel = r.bool("parallel").unwrap_or(true);
        let molecule = read_molecule(&mut r);
        let mesh = read_mesh(&mut r, &table);
        let solvent = read_solvent(&mut r);
        let newton = read_newton(&mut r);
        let linear = read_linear(&mut r);
        let output_prefix = r.path("output.prefix", false).unwrap_or(default_prefix);

        let overrides = r.overrides();
        r.reject_unused();
        if !r.errors.is_empty() {
            return Err(r.errors);
        }
        Ok(Self {
            model,
            molecule: molecule.expect("checked above"),
            mesh: mesh.expect("checked above"),
            solvent: solvent.expect("checked above"),
            newton,
            linear,
            parallel,
            output_prefix,
            overrides,
        })
    }
}

fn read_molecule(r: &mut Reader) -> Option<MoleculeSource> {
    let pqr = r.path("molecule.pqr", true);
    let charge = r.f64("molecule.charge");
    let center = r.vec3("molecule.center");
    match (pqr, charge) {
        (Some(_), Some(_)) => {
            r.error("molecule", "set either molecule.pqr or molecule.charge, not both");
            None
        }
        (Some(path), None) => {
            if center.is_some() {
                r.error("molecule.center", "only applies to a synthetic ion (molecule.charge)");
            }
            Some(MoleculeSource::Pqr(path))
        }
        (None, Some(charge)) => Some(MoleculeSource::Ion {
            charge,
            center: center.unwrap_or([0.0; 3]),
        }),
        (None, None) => {
            if !r.has("molecule.pqr") && !r.has("molecule.charge") {
                r.error("molecule", "no molecule source; set molecule.pqr or molecule.charge");
            }
            None
        }
    }
}

fn read_mesh(r: &mut Reader, table: &Table) -> Option<MeshSource> {
    let born_section = table
        .get("mesh")
        .and_then(Value::as_table)
        .is_some_and(|m| m.contains_key("born"));
    let tetgen_keys = r.has("mesh.node") || r.has("mesh.ele");
    let node = r.path("mesh.node", true);
    let ele = r.path("mesh.ele", true);
    let defaults = BornMeshParams::default();
    let born = BornMeshParams {
        half_width: r.f64("mesh.born.half_width").unwrap_or(defaults.half_width),
        sphere_radius: r.f64("mesh.born.radius").unwrap_or(defaults.sphere_radius),
        divisions: r.usize("mesh.born.divisions").unwrap_or(defaults.divisions),
    };
    if born_section {
        if !(born.sphere_radius > 0.0 && born.sphere_radius < born.half_width) {
            r.error(
                "mesh.born.radius",
                format!(
                    "need 0 < radius < half_width, got radius {} and half_width {}",
                    born.sphere_radius, born.half_width
                ),
            );
        }
        if born.divisions < 2 {
            r.error("mesh.born.divisions", format!("need at least 2, got {}", born.divisions));
        }
    }
    match (born_section, tetgen_keys) {
        (true, true) => {
            r.error("mesh", "set either mesh.node/mesh.ele or a mesh.born section, not both");
            None
        }
        (true, false) => Some(MeshSource::Born(born)),
        (false, true) => {
            for key in ["mesh.node", "mesh.ele"] {
                if !r.has(key) {
                    r.error(key, "required together with the other TetGen file");
                }
            }
            Some(MeshSource::Tetgen {
                node: node?,
                ele: ele?,
            })
        }
        (false, false) => {
            r.error("mesh", "no mesh source; set mesh.node and mesh.ele, or a mesh.born section");
            None
        }
    }
}

fn read_solvent(r: &mut Reader) -> Option<SolventModel> {
    let d = DielectricParams::default();
    let dielectric = DielectricParams {
        eps_p: r.f64("solvent.eps_p").unwrap_or(d.eps_p),
        eps_s: r.f64("solvent.eps_s").unwrap_or(d.eps_s),
        eps_inf: r.f64("solvent.eps_inf").unwrap_or(d.eps_inf),
        lambda: r.f64("solvent.lambda").unwrap_or(d.lambda),
    };
    let v0 = r.f64("solvent.v0");
    let constants = match r.f64("solvent.temperature") {
        None => Some(PhysicalConstants::default()),
        Some(t) => derive_constants(t)
            .map_err(|e| r.error("solvent.temperature", e.to_string()))
            .ok(),
    };
    let species = read_species(r);
    let before = r.errors.len();
    if dielectric.eps_inf > dielectric.eps_s {
        r.error(
            "solvent.eps_inf",
            format!(
                "eps_inf ({}) must not exceed solvent.eps_s ({})",
                dielectric.eps_inf, dielectric.eps_s
            ),
        );
    }
    for (key, value) in [
        ("solvent.eps_p", dielectric.eps_p),
        ("solvent.eps_inf", dielectric.eps_inf),
        ("solvent.lambda", dielectric.lambda),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            r.error(key, format!("must be positive, got {value}"));
        }
    }
    if let Some(v) = v0.filter(|v| !(*v > 0.0)) {
        r.error("solvent.v0", format!("must be positive, got {v}"));
    }
    if r.errors.len() > before {
        return None;
    }
    build_solvent_model(species?, dielectric, v0, constants?)
        .map_err(|e| r.error("solvent", e.to_string()))
        .ok()
}

fn read_species(r: &mut Reader) -> Option<Vec<IonSpecies>> {
    const KEY: &str = "solvent.species";
    let Some(value) = r.take(KEY) else {
        return Some(default_species());
    };
    let Some(entries) = value.as_array() else {
        r.error(KEY, "expected an array of {name, charge, concentration, radius} tables");
        return None;
    };
    if entries.is_empty() {
        r.error(KEY, "needs at least one species");
        return None;
    }
    let mut species = Vec::new();
    let mut ok = true;
    for (i, entry) in entries.iter().enumerate() {
        let at = format!("{KEY}[{i}]");
        let Some(t) = entry.as_table() else {
            r.error(&at, "expected a table {name, charge, concentration, radius}");
            ok = false;
            continue;
        };
        for k in t.keys() {
            if !["name", "charge", "concentration", "radius"].contains(&k.as_str()) {
                r.error(&format!("{at}.{k}"), "unknown key");
                ok = false;
            }
        }
        let name = t.get("name").and_then(Value::as_str).map(str::to_string);
        let charge = t.get("charge").and_then(Value::as_integer).and_then(|z| i32::try_from(z).ok());
        let conc = t.get("concentration").and_then(as_number);
        let radius = t.get("radius").and_then(as_number);
        let mut missing = |field: &str, what: &str, present: bool| {
            if !present {
                r.error(&format!("{at}.{field}"), format!("expected {what}"));
                ok = false;
            }
        };
        missing("name", "a string", name.is_some());
        missing("charge", "an integer charge number", charge.is_some());
        missing("concentration", "a number in mol/L", conc.is_some());
        missing("radius", "a number in angstrom", radius.is_some());
        if let (Some(name), Some(z), Some(c), Some(a)) = (name, charge, conc, radius) {
            match IonSpecies::new(name, z, c, a) {
                Ok(s) => species.push(s),
                Err(e) => {
                    r.error(&at, e.to_string());
                    ok = false;
                }
            }
        }
    }
    ok.then_some(species)
}

fn read_newton(r: &mut Reader) -> NewtonConfig {
    let d = NewtonConfig::default();
    let newton = NewtonConfig {
        tau: r.f64("newton.tau").unwrap_or(d.tau),
        eta: r.f64("newton.eta").unwrap_or(d.eta),
        eps_r: r.f64("newton.eps_r").unwrap_or(d.eps_r),
        eps_a: r.f64("newton.eps_a").unwrap_or(d.eps_a),
        max_newton: r.usize("newton.max_newton").unwrap_or(d.max_newton),
        selection_order: r.selections("newton.selection_order").unwrap_or(d.selection_order),
    };
    if let Err(e) = newton.validate() {
        r.error("newton", e.to_string());
    }
    newton
}

fn read_linear(r: &mut Reader) -> GmresConfig {
    let d = GmresConfig::default();
    let linear = GmresConfig {
        rel_tol: r.f64("linear.rel_tol").unwrap_or(d.rel_tol),
        abs_tol: r.f64("linear.abs_tol").unwrap_or(d.abs_tol),
        restart: r.usize("linear.restart").unwrap_or(d.restart),
        max_iter: r.usize("linear.max_iter").unwrap_or(d.max_iter),
    };
    for (key, value) in [("linear.rel_tol", linear.rel_tol), ("linear.abs_tol", linear.abs_tol)] {
        if !(value > 0.0) {
            r.error(key, format!("must be positive, got {value}"));
        }
    }
    for (key, value) in [("linear.restart", linear.restart), ("linear.max_iter", linear.max_iter)] {
        if value == 0 {
            r.error(key, "must be at least 1");
        }
    }
    linear
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Typed access to the flattened key set, recording every error and every
/// key consumed.
struct Reader<'a> {
    values: BTreeMap<String, &'a Value>,
    used: Vec<String>,
    errors: Vec<String>,
    base: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(table: &'a Table, base: &'a Path) -> Self {
        let mut values = BTreeMap::new();
        flatten("", table, &mut values);
        Self {
            values,
            used: Vec::new(),
            errors: Vec::new(),
            base,
        }
    }

    fn error(&mut self, key: &str, message: impl fmt::Display) {
        self.errors.push(format!("{key}: {message}"));
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.values.get(key).copied();
        if v.is_some() {
            self.used.push(key.to_string());
        }
        v
    }

    fn typed<T>(&mut self, key: &str, what: &str, f: impl FnOnce(&Value) -> Option<T>) -> Option<T> {
        let v = self.take(key)?;
        let out = f(v);
        if out.is_none() {
            self.error(key, format!("expected {what}, got {v}"));
        }
        out
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        self.typed(key, "a number", as_number)
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.typed(key, "a non-negative integer", |v| v.as_integer().and_then(|i| usize::try_from(i).ok()))
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.typed(key, "true or false", Value::as_bool)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.typed(key, "a string", |v| v.as_str().map(str::to_string))
    }

    fn vec3(&mut self, key: &str) -> Option<[f64; 3]> {
        self.typed(key, "an array of three numbers", |v| {
            let a = v.as_array().filter(|a| a.len() == 3)?;
            Some([as_number(&a[0])?, as_number(&a[1])?, as_number(&a[2])?])
        })
    }

    fn selections(&mut self, key: &str) -> Option<Vec<u8>> {
        self.typed(key, "an array of selections 1 to 4", |v| {
            v.as_array()?
                .iter()
                .map(|s| s.as_integer().and_then(|i| u8::try_from(i).ok()))
                .collect()
        })
    }

    /// A path relative to the configuration directory. With `must_exist`
    /// a missing file is an error.
    fn path(&mut self, key: &str, must_exist: bool) -> Option<PathBuf> {
        let p = self.base.join(self.string(key)?);
        if must_exist && !p.is_file() {
            self.error(key, format!("file {} does not exist", p.display()));
            return None;
        }
        Some(p)
    }

    fn overrides(&self) -> Vec<(String, String)> {
        self.values.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }

    fn reject_unused(&mut self) {
        let unused: Vec<String> = self
            .values
            .keys()
            .filter(|k| !self.used.contains(k))
            .cloned()
            .collect();
        for key in unused {
            self.error(&key, "unknown key");
        }
    }
}

/// Dotted key paths of every non-table value. Arrays are leaves.
fn flatten<'a>(prefix: &str, table: &'a Table, out: &mut BTreeMap<String, &'a Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => {
                out.insert(key, v);
            }
        }
    }
}

//! Scenario files: a flat TOML dialect with dotted sections describing one
//! task run — potentials, coupling, numeric overrides, grids, and output
//! destination. `load` builds a validated scenario (hard errors); `validate`
//! dry-runs the same checks and returns human-readable diagnostics instead of
//! failing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::potential::{EdgePotentials, PotentialProfile};
use crate::resolvent::JunctionScheme;
use crate::types::{C64, NumericOptions};

/// The pipelines a scenario can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Dump sampled Jost solutions per edge.
    Jost,
    /// Determinant values on a spectral grid.
    Det,
    /// Locate negative eigenvalues.
    Spectrum,
    /// Full Levinson ledger.
    Levinson,
    /// Trace formula vs. grid oracle.
    TraceCheck,
    /// Spectral shift function curve.
    Ssf,
    /// Nuclear-norm decay fit.
    Tracenorm,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Task::Jost => "jost",
            Task::Det => "det",
            Task::Spectrum => "spectrum",
            Task::Levinson => "levinson",
            Task::TraceCheck => "trace-check",
            Task::Ssf => "ssf",
            Task::Tracenorm => "tracenorm",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSpec {
    family: Option<String>,
    depth: Option<f64>,
    width: Option<f64>,
    amplitude: Option<f64>,
    rate: Option<f64>,
    center: Option<f64>,
    sigma: Option<f64>,
    xs: Option<Vec<f64>>,
    vs: Option<Vec<f64>>,
    /// Two-column table `x, V(x)` loaded relative to the scenario file.
    file: Option<String>,
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Scenario {
        field: field.to_string(),
        message: message.into(),
    }
}

fn require(field: &str, v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| field_err(field, format!("missing parameter `{name}`")))
}

fn load_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|c| !c.is_empty());
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| {
                Error::Io(format!(
                    "{}:{}: expected two numeric columns",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let x = parse(cols.next());
        let v = parse(cols.next());
        match (x, v) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            (Err(e), _) | (_, Err(e)) => {
                // Tolerate a single header line of labels.
                if lineno == 0 {
                    continue;
                }
                return Err(e);
            }
        }
    }
    Ok((xs, vs))
}

impl ProfileSpec {
    fn build(&self, field: &str, base_dir: &Path) -> Result<PotentialProfile> {
        let family = self.family.as_deref().unwrap_or("zero");
        let profile = match family {
            "zero" => PotentialProfile::Zero,
            "square_well" => PotentialProfile::SquareWell {
                depth: require(field, self.depth, "depth")?,
                width: require(field, self.width, "width")?,
            },
            "exponential" => PotentialProfile::Exponential {
                amplitude: require(field, self.amplitude, "amplitude")?,
                rate: require(field, self.rate, "rate")?,
            },
            "gaussian" => PotentialProfile::Gaussian {
                amplitude: require(field, self.amplitude, "amplitude")?,
                center: require(field, self.center, "center")?,
                sigma: require(field, self.sigma, "sigma")?,
            },
            "tabulated" => {
                let (xs, vs) = if let Some(file) = &self.file {
                    load_table(&base_dir.join(file))?
                } else {
                    match (&self.xs, &self.vs) {
                        (Some(xs), Some(vs)) => (xs.clone(), vs.clone()),
                        _ => {
                            return Err(field_err(
                                field,
                                "tabulated potential needs `file` or both `xs` and `vs`",
                            ));
                        }
                    }
                };
                PotentialProfile::Tabulated { xs, vs }
            }
            other => {
                return Err(field_err(
                    field,
                    format!(
                        "unknown family `{other}` (expected zero, square_well, exponential, \
                         gaussian, tabulated)"
                    ),
                ));
            }
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialSection {
    edge1: Option<ProfileSpec>,
    edge2: Option<ProfileSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractionSection {
    preset: Option<String>,
    #[serde(default)]
    params: Vec<f64>,
    phi: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    d: Option<f64>,
}

impl InteractionSection {
    fn build(&self) -> Result<InteractionMatrix> {
        if let Some(name) = &self.preset {
            if self.a.is_some() || self.b.is_some() || self.c.is_some() || self.d.is_some() {
                return Err(field_err(
                    "interaction",
                    "give either `preset` or raw `a,b,c,d`, not both",
                ));
            }
            let m = InteractionMatrix::preset(name, &self.params)?;
            match self.phi {
                Some(phi) => m.with_phase(phi),
                None => Ok(m),
            }
        } else {
            let get = |v: Option<f64>, name: &str| require("interaction", v, name);
            InteractionMatrix::new(
                self.phi.unwrap_or(0.0),
                get(self.a, "a")?,
                get(self.b, "b")?,
                get(self.c, "c")?,
                get(self.d, "d")?,
            )
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericSection {
    ode_rtol: Option<f64>,
    ode_atol: Option<f64>,
    quad_tol: Option<f64>,
    divergence_bound: Option<f64>,
    tol_tail: Option<f64>,
    verify_tail: Option<bool>,
    x_max_override: Option<f64>,
    zero_tol: Option<f64>,
    warn_tol: Option<f64>,
    resonance_tol: Option<f64>,
    division_floor: Option<f64>,
    bisect_tol: Option<f64>,
    tangential_tol: Option<f64>,
    winding_residue_max: Option<f64>,
}

impl NumericSection {
    fn apply(&self) -> NumericOptions {
        let mut o = NumericOptions::default();
        macro_rules! set {
            ($($f:ident),*) => {
                $(if let Some(v) = self.$f { o.$f = v; })*
            };
        }
        set!(
            ode_rtol,
            ode_atol,
            quad_tol,
            divergence_bound,
            tol_tail,
            zero_tol,
            warn_tol,
            resonance_tol,
            division_floor,
            bisect_tol,
            tangential_tol,
            winding_residue_max
        );
        if self.x_max_override.is_some() {
            o.x_max_override = self.x_max_override;
        }
        if let Some(v) = self.verify_tail {
            o.verify_tail = v;
        }
        o
    }
}

/// Which axis a determinant grid walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxis {
    /// Points `i kappa` (negative energies `-kappa^2`).
    Imaginary,
    /// Points `k` on the scattering axis.
    Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    axis: Option<GridAxis>,
    scale: Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
}

/// Resolved sampling grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub axis: GridAxis,
    pub log_scale: bool,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let n = self.count.max(2);
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                if self.log_scale {
                    self.min * (self.max / self.min).powf(f)
                } else {
                    self.min + (self.max - self.min) * f
                }
            })
            .collect()
    }

    fn check(&self, field: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(field_err(field, format!("need min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.log_scale && self.min <= 0.0 {
            return Err(field_err(field, "log scale needs min > 0"));
        }
        if self.count < 2 {
            return Err(field_err(field, "need at least 2 grid points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZetaSection {
    re: Option<f64>,
    im: Option<f64>,
    samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscretizationSection {
    h: Option<f64>,
    x_max: Option<f64>,
    scheme: Option<String>,
    t: Option<Vec<f64>>,
}

/// Resolved grid-oracle parameters.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationSpec {
    pub h: f64,
    pub x_max: f64,
    pub scheme: JunctionScheme,
    /// Resolvent shifts for trace tasks (`None`: task default).
    pub t: Option<Vec<f64>>,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        DiscretizationSpec {
            h: 0.01,
            x_max: 30.0,
            scheme: JunctionScheme::default(),
            t: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
    dump_matrix: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    task: Option<Task>,
    kappa_max: Option<f64>,
    potential: Option<PotentialSection>,
    interaction: Option<InteractionSection>,
    #[serde(default)]
    numeric: NumericSection,
    grid: Option<GridSection>,
    zeta: Option<ZetaSection>,
    discretization: Option<DiscretizationSection>,
    #[serde(default)]
    output: OutputSection,
}

/// A fully built scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub task: Option<Task>,
    pub potentials: EdgePotentials,
    pub interaction: InteractionMatrix,
    pub numeric: NumericOptions,
    /// Explicit spectral grid, when the file gave one.
    pub grid: Option<GridSpec>,
    /// Spectral point and sample count for solution dumps.
    pub zeta: C64,
    pub zeta_samples: usize,
    pub discretization: DiscretizationSpec,
    pub kappa_max: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub dump_matrix: bool,
}

fn parse_file(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
}

fn build_grid(section: &GridSection) -> Result<GridSpec> {
    let log_scale = match section.scale.as_deref() {
        None => true,
        Some("log") => true,
        Some("linear") => false,
        Some(other) => {
            return Err(field_err(
                "grid.scale",
                format!("unknown scale `{other}` (expected `log` or `linear`)"),
            ));
        }
    };
    let spec = GridSpec {
        axis: section.axis.unwrap_or(GridAxis::Imaginary),
        log_scale,
        min: section.min.unwrap_or(0.1),
        max: section.max.unwrap_or(100.0),
        count: section.count.unwrap_or(400),
    };
    spec.check("grid")?;
    Ok(spec)
}

fn build_scenario(file: ScenarioFile, base_dir: &Path) -> Result<Scenario> {
    let pot = file.potential.unwrap_or_default();
    let v1 = pot
        .edge1
        .unwrap_or_default()
        .build("potential.edge1", base_dir)?;
    let v2 = pot
        .edge2
        .unwrap_or_default()
        .build("potential.edge2", base_dir)?;
    let potentials = EdgePotentials::new(v1, v2)?;
    let interaction = file
        .interaction
        .ok_or_else(|| field_err("interaction", "section missing"))?
        .build()?;
    let numeric = file.numeric.apply();
    let grid = file.grid.as_ref().map(build_grid).transpose()?;
    let (zeta, zeta_samples) = match &file.zeta {
        Some(z) => (
            C64::new(z.re.unwrap_or(0.0), z.im.unwrap_or(1.0)),
            z.samples.unwrap_or(200),
        ),
        None => (C64::new(0.0, 1.0), 200),
    };
    if zeta.im < 0.0 {
        return Err(field_err("zeta.im", "needs Im zeta >= 0"));
    }
    let discretization = match &file.discretization {
        Some(d) => {
            let scheme = match d.scheme.as_deref() {
                None => JunctionScheme::default(),
                Some("eliminated") => JunctionScheme::EliminatedStencil,
                Some("lumped") => JunctionScheme::LumpedForm,
                Some(other) => {
                    return Err(field_err(
                        "discretization.scheme",
                        format!("unknown scheme `{other}` (expected `eliminated` or `lumped`)"),
                    ));
                }
            };
            let spec = DiscretizationSpec {
                h: d.h.unwrap_or(0.01),
                x_max: d.x_max.unwrap_or(30.0),
                scheme,
                t: d.t.clone(),
            };
            if !(spec.h > 0.0 && spec.x_max > 0.0 && spec.h <= spec.x_max / 200.0) {
                return Err(field_err(
                    "discretization",
                    format!(
                        "need 0 < h <= x_max/200, got h={}, x_max={}",
                        spec.h, spec.x_max
                    ),
                ));
            }
            if let Some(ts) = &spec.t {
                if ts.iter().any(|&t| !(t > 0.0)) {
                    return Err(field_err("discretization.t", "shifts must be positive"));
                }
            }
            spec
        }
        None => DiscretizationSpec::default(),
    };
    Ok(Scenario {
        task: file.task,
        potentials,
        interaction,
        numeric,
        grid,
        zeta,
        zeta_samples,
        discretization,
        kappa_max: file.kappa_max,
        out_dir: file.output.dir.clone().map(PathBuf::from),
        dump_matrix: file.output.dump_matrix.unwrap_or(false),
    })
}

/// Parse scenario text; relative table paths resolve against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    build_scenario(parse_file(text)?, base_dir)
}

/// Load and build a scenario from a file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, base)
}

/// Dry-run diagnostics: every check `load_scenario` enforces plus the
/// deeper numeric screens (moment finiteness, zero-energy classifier bands),
/// reported as strings instead of errors. An empty list means the scenario
/// is clean.
pub fn validate_scenario(text: &str, base_dir: &Path) -> Vec<String> {
    let mut notes = Vec::new();
    let file = match parse_file(text) {
        Ok(f) => f,
        Err(e) => {
            notes.push(format!("parse: {e}"));
            return notes;
        }
    };

    // Interaction checks run on the raw numbers so constraint violations
    // surface as diagnostics, not construction failures.
    let mut interaction = None;
    match &file.interaction {
        None => notes.push("interaction: section missing".to_string()),
        Some(sec) => {
            if sec.preset.is_none() {
                if let (Some(a), Some(b), Some(c), Some(d)) = (sec.a, sec.b, sec.c, sec.d) {
                    let dev = a * d - b * c + 1.0;
                    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1.0);
                    if dev.abs() > 1e-12 * scale * scale {
                        notes.push(format!(
                            "interaction: determinant-constraint violated: ad - bc = {} (need -1)",
                            a * d - b * c
                        ));
                    }
                }
            }
            if let Some(phi) = sec.phi {
                if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&phi) {
                    notes.push(format!(
                        "interaction: phase {phi} outside [-pi/2, pi/2]"
                    ));
                }
            }
            match sec.build() {
                Ok(m) => interaction = Some(m),
                Err(e) => notes.push(format!("interaction: {e}")),
            }
        }
    }

    let mut potentials = None;
    {
        let pot = file.potential.clone().unwrap_or_default();
        let v1 = pot
            .edge1
            .unwrap_or_default()
            .build("potential.edge1", base_dir);
        let v2 = pot
            .edge2
            .unwrap_or_default()
            .build("potential.edge2", base_dir);
        match (v1, v2) {
            (Ok(v1), Ok(v2)) => match EdgePotentials::new(v1, v2) {
                Ok(eps) => potentials = Some(eps),
                Err(e) => notes.push(format!("potential: {e}")),
            },
            (r1, r2) => {
                if let Err(e) = r1 {
                    notes.push(format!("potential.edge1: {e}"));
                }
                if let Err(e) = r2 {
                    notes.push(format!("potential.edge2: {e}"));
                }
            }
        }
    }

    let numeric = file.numeric.apply();
    if let Some(eps) = &potentials {
        for (name, v) in [("edge1", &eps.v1), ("edge2", &eps.v2)] {
            for order in [0u32, 1] {
                if let Err(e) = v.moment(order, numeric.quad_tol, numeric.divergence_bound) {
                    notes.push(format!("potential.{name}: moment {order} not finite: {e}"));
                }
            }
        }
    }

    if let (Some(eps), Some(m)) = (&potentials, &interaction) {
        match crate::determinant::levinson_constants(eps, m, &numeric) {
            Ok(c) => {
                if c.boundary {
                    notes.push(
                        "classifier: a zero-energy magnitude sits in the warning band \
                         (1e-12, 1e-6); case selection is unreliable"
                            .to_string(),
                    );
                }
            }
            Err(e) => notes.push(format!("classifier: {e}")),
        }
        match m.pole_class(&numeric) {
            Ok(p) => {
                if p.boundary {
                    notes.push(
                        "classifier: denominator pole class sits in the warning band".to_string(),
                    );
                }
            }
            Err(e) => notes.push(format!("classifier: {e}")),
        }
    }

    if let Some(g) = &file.grid {
        if let Err(e) = build_grid(g) {
            notes.push(format!("grid: {e}"));
        }
    }
    if let Some(d) = &file.discretization {
        let h = d.h.unwrap_or(0.01);
        let x_max = d.x_max.unwrap_or(30.0);
        if !(h > 0.0 && x_max > 0.0 && h <= x_max / 200.0) {
            notes.push(format!(
                "discretization: need 0 < h <= x_max/200, got h={h}, x_max={x_max}"
            ));
        }
    }
    notes
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::flows::{FlowSystem, Scheme};
use crate::tensor::Stencil;

/// Initial-data recipe of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    FlatKahlerTorus,
    PerturbedTorus { seed: u64, amplitude: f64 },
    CommutingGkTorus { epsilon: f64 },
    HopfGk { radius: f64 },
    HopfStatic { samples: usize, seed: u64 },
    Custom { path: PathBuf },
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::FlatKahlerTorus => "FLAT_KAHLER_TORUS",
            Recipe::PerturbedTorus { .. } => "PERTURBED_TORUS",
            Recipe::CommutingGkTorus { .. } => "COMMUTING_GK_TORUS",
            Recipe::HopfGk { .. } => "HOPF_GK",
            Recipe::HopfStatic { .. } => "HOPF_STATIC",
            Recipe::Custom { .. } => "CUSTOM",
        }
    }
}

/// Verification pipelines a scenario can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    /// GK residuals of every row stay below `tol_gk`.
    GkResiduals,
    /// |dH| and |J² + Id| stay below `tol_closed`.
    Closedness,
    /// Two pluriclosed runs, gauge transport and comparison with the coupled run.
    GaugeEquivalence,
    /// Soliton residual, integral identity, Lee form and λ-sweep on the initial datum.
    Static,
    /// Pointwise staticity of the Hopf static metric.
    HopfStaticity,
}

impl Check {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gk_residuals" => Ok(Self::GkResiduals),
            "closedness" => Ok(Self::Closedness),
            "gauge_equivalence" => Ok(Self::GaugeEquivalence),
            "static" => Ok(Self::Static),
            "hopf_staticity" => Ok(Self::HopfStaticity),
            _ => Err(Error::UnknownName(format!("check {s}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GkResiduals => "gk_residuals",
            Self::Closedness => "closedness",
            Self::GaugeEquivalence => "gauge_equivalence",
            Self::Static => "static",
            Self::HopfStaticity => "hopf_staticity",
        }
    }
}

/// Tolerances, each overridable by a `tol_*` key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub gk: f64,
    pub closed: f64,
    pub gauge: f64,
    pub static_residual: f64,
    pub hopf: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gk: 1e-9, closed: 1e-10, gauge: 1e-8, static_residual: 1e-10, hopf: 1e-7 }
    }
}

/// Time integration part of a scenario; absent for purely static scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub system: FlowSystem,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    /// BFIELD only: carry J± unchanged so that GK residuals can be monitored.
    pub frozen_j: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub recipe: Recipe,
    pub resolution: Vec<usize>,
    pub stencil: Stencil,
    pub flow: Option<FlowSpec>,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    /// λ used by the static check.
    pub lambda: f64,
    /// The scenario is a negative control: it passes iff some check fails.
    pub expect_fail: bool,
    pub threads: usize,
    pub snapshots: bool,
}

/// Keys accepted by [`Scenario::parse`] with a one-line description each.
pub const KEYS: &[(&str, &str)] = &[
    ("name", "scenario name, used as output subdirectory (required)"),
    ("recipe", "FLAT_KAHLER_TORUS | PERTURBED_TORUS | COMMUTING_GK_TORUS | HOPF_GK | HOPF_STATIC | CUSTOM (required)"),
    ("resolution", "comma-separated grid sizes for torus recipes, default 16,16,1,1"),
    ("stencil", "SPECTRAL or FD2/FD4/FD6/FD8, default SPECTRAL"),
    ("seed", "PERTURBED_TORUS and HOPF_STATIC seed, default 1"),
    ("amplitude", "PERTURBED_TORUS amplitude, default 0.05"),
    ("epsilon", "COMMUTING_GK_TORUS deformation size, default 0.05"),
    ("radius", "HOPF_GK radius of the 3-sphere factor, default 1"),
    ("samples", "HOPF_STATIC number of sample points, default 100"),
    ("snapshot", "CUSTOM: directory written by a previous run's snapshots"),
    ("system", "BFIELD | PLURICLOSED | GK_COUPLED | GAUGE_FIXED; omit for static scenarios"),
    ("scheme", "RK4 or EULER, default RK4"),
    ("dt", "time step (required with system)"),
    ("steps", "number of steps (required with system)"),
    ("stride", "keep every stride-th state for snapshots, default 1"),
    ("frozen_j", "true: BFIELD carries J+ and J- unchanged (naive run), default false"),
    ("checks", "comma-separated: gk_residuals, closedness, gauge_equivalence, static, hopf_staticity"),
    ("lambda", "λ for the static check, default 0"),
    ("expect", "PASS or FAIL, default PASS"),
    ("threads", "worker threads, default 1; results do not depend on it"),
    ("snapshots", "true to write the final state, default false"),
    ("tol_gk", "GK residual tolerance, default 1e-9"),
    ("tol_closed", "|dH| and |J^2 + Id| tolerance, default 1e-10"),
    ("tol_gauge", "gauge-equivalence tolerance, default 1e-8"),
    ("tol_static", "static residual tolerance, default 1e-10"),
    ("tol_hopf", "Hopf pointwise S - Q tolerance, default 1e-7"),
];

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| perr(line, format!("bad value for {key}: {v}"))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        match self.take(key) {
            None => Err(perr(0, format!("missing key {key}"))),
            Some((line, v)) => v.parse().map_err(|_| perr(line, format!("bad value for {key}: {v}"))),
        }
    }

    fn flag(&mut self, key: &str) -> Result<bool> {
        match self.take(key) {
            None => Ok(false),
            Some((_, v)) if v == "true" => Ok(true),
            Some((_, v)) if v == "false" => Ok(false),
            Some((line, v)) => Err(perr(line, format!("{key} must be true or false, got {v}"))),
        }
    }
}

fn with_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => e,
        other => perr(line, other.to_string()),
    })
}

impl Scenario {
    /// Parses `key = value` lines; `#` starts a comment. Unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| perr(line, "expected key = value"))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(perr(line, format!("unknown key {k}")));
            }
            if map.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(perr(line, format!("repeated key {k}")));
            }
        }
        let mut e = Entries { map };
        let name: String = e.required("name")?;
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(perr(0, format!("invalid scenario name {name:?}")));
        }
        let (rline, rname) = e.take("recipe").ok_or_else(|| perr(0, "missing key recipe"))?;
        let seed = e.parsed("seed", 1u64)?;
        let recipe = match rname.as_str() {
            "FLAT_KAHLER_TORUS" => Recipe::FlatKahlerTorus,
            "PERTURBED_TORUS" => Recipe::PerturbedTorus { seed, amplitude: e.parsed("amplitude", 0.05)? },
            "COMMUTING_GK_TORUS" => Recipe::CommutingGkTorus { epsilon: e.parsed("epsilon", 0.05)? },
            "HOPF_GK" => Recipe::HopfGk { radius: e.parsed("radius", 1.0)? },
            "HOPF_STATIC" => Recipe::HopfStatic { samples: e.parsed("samples", 100usize)?, seed },
            "CUSTOM" => Recipe::Custom { path: PathBuf::from(e.required::<String>("snapshot")?) },
            other => return Err(perr(rline, format!("unknown recipe {other}"))),
        };
        let resolution = match e.take("resolution") {
            None => vec![16, 16, 1, 1],
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| perr(line, format!("bad resolution {v}"))))
                .collect::<Result<Vec<_>>>()?,
        };
        let stencil = match e.take("stencil") {
            None => Stencil::Spectral,
            Some((line, v)) => with_line(line, Stencil::parse(&v))?,
        };
        let flow = match e.take("system") {
            None => None,
            Some((line, v)) => {
                let system = with_line(line, FlowSystem::parse(&v))?;
                let scheme = match e.take("scheme") {
                    None => Scheme::Rk4,
                    Some((l, s)) => with_line(l, Scheme::parse(&s))?,
                };
                let dt: f64 = e.required("dt")?;
                if !(dt > 0.0) {
                    return Err(perr(line, "dt must be positive"));
                }
                let steps = e.required("steps")?;
                let stride = e.parsed("stride", 1usize)?.max(1);
                let frozen_j = e.flag("frozen_j")?;
                if frozen_j && system != FlowSystem::BField {
                    return Err(perr(line, "frozen_j applies to BFIELD only"));
                }
                Some(FlowSpec { system, scheme, dt, steps, stride, frozen_j })
            }
        };
        let checks = match e.take("checks") {
            None => Vec::new(),
            Some((line, v)) => {
                let mut c =
                    v.split(',').map(|s| with_line(line, Check::parse(s.trim()))).collect::<Result<Vec<_>>>()?;
                c.sort();
                c.dedup();
                c
            }
        };
        let expect_fail = match e.take("expect") {
            None => false,
            Some((_, v)) if v == "PASS" => false,
            Some((_, v)) if v == "FAIL" => true,
            Some((line, v)) => return Err(perr(line, format!("expect must be PASS or FAIL, got {v}"))),
        };
        let d = Tolerances::default();
        let tolerances = Tolerances {
            gk: e.parsed("tol_gk", d.gk)?,
            closed: e.parsed("tol_closed", d.closed)?,
            gauge: e.parsed("tol_gauge", d.gauge)?,
            static_residual: e.parsed("tol_static", d.static_residual)?,
            hopf: e.parsed("tol_hopf", d.hopf)?,
        };
        let s = Scenario {
            name,
            recipe,
            resolution,
            stencil,
            flow,
            checks,
            tolerances,
            lambda: e.parsed("lambda", 0.0)?,
            expect_fail,
            threads: e.parsed("threads", 1usize)?.max(1),
            snapshots: e.flag("snapshots")?,
        };
        // keys valid for other recipes or flows are still misconfiguration here
        if let Some((k, (line, _))) = e.map.into_iter().next() {
            return Err(perr(line, format!("key {k} does not apply to this scenario")));
        }
        if s.checks.is_empty() {
            return Err(perr(0, "no checks requested"));
        }
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "
        # flat torus, coupled flow
        name = flat
        recipe = FLAT_KAHLER_TORUS
        resolution = 8,8,1,1
        system = GK_COUPLED
        dt = 0.01
        steps = 100
        checks = gk_residuals, closedness
    ";

    #[test]
    fn parses_documented_schema() {
        let s = Scenario::parse(GOOD).unwrap();
        assert_eq!(s.recipe, Recipe::FlatKahlerTorus);
        assert_eq!(s.resolution, vec![8, 8, 1, 1]);
        let f = s.flow.unwrap();
        assert_eq!((f.system, f.steps, f.stride), (FlowSystem::GkCoupled, 100, 1));
        assert_eq!(s.checks, vec![Check::GkResiduals, Check::Closedness]);
        assert!(!s.expect_fail);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let e = Scenario::parse(&format!("{GOOD}\nstpes = 3\n")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 11, .. }), "{e}");
    }

    #[test]
    fn inapplicable_key_is_an_error() {
        assert!(Scenario::parse(&format!("{GOOD}\nepsilon = 0.1\n")).is_err());
    }

    #[test]
    fn repeated_key_and_bad_values() {
        assert!(Scenario::parse(&format!("{GOOD}\nname = again\n")).is_err());
        assert!(Scenario::parse(&GOOD.replace("0.01", "-1")).is_err());
        assert!(Scenario::parse(&GOOD.replace("GK_COUPLED", "RICCI")).is_err());
        assert!(Scenario::parse(&GOOD.replace("closedness", "closed")).is_err());
    }
}

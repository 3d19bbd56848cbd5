use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Recipe,
    Scenario,
}

/// A built-in recipe or bundled scenario, with the statement it exercises.
#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub kind: EntryKind,
    pub anchor: &'static str,
    pub summary: &'static str,
    /// Config text of bundled scenarios.
    pub config: Option<&'static str>,
}

pub const CATALOG: &[Entry] = &[
    Entry {
        name: "FLAT_KAHLER_TORUS",
        kind: EntryKind::Recipe,
        anchor: "generalized Kähler equations, trivial case",
        summary: "flat metric on a torus, H = 0, J+ = J- = standard structure",
        config: None,
    },
    Entry {
        name: "PERTURBED_TORUS",
        kind: EntryKind::Recipe,
        anchor: "Kähler reduction of the pluriclosed flow",
        summary: "Kähler torus with seeded conformal factors on each complex line (seed, amplitude)",
        config: None,
    },
    Entry {
        name: "COMMUTING_GK_TORUS",
        kind: EntryKind::Recipe,
        anchor: "generalized Kähler structure with commuting complex structures",
        summary: "non-Kähler GK torus, J- reverses the second complex line, H = d^c+ omega+ (epsilon)",
        config: None,
    },
    Entry {
        name: "HOPF_GK",
        kind: EntryKind::Recipe,
        anchor: "S3 x S1 with left and right invariant complex structures",
        summary: "bi-invariant metric on SU(2) x U(1), Cartan 3-form, frame backend (radius)",
        config: None,
    },
    Entry {
        name: "HOPF_STATIC",
        kind: EntryKind::Recipe,
        anchor: "static metrics on Hopf surfaces: (1/rho^2) ddbar rho^2 satisfies S - Q = 0 and is locally isometric to R x S3",
        summary: "seeded sample points in C2 minus the origin; jets on small patches (samples, seed)",
        config: None,
    },
    Entry {
        name: "CUSTOM",
        kind: EntryKind::Recipe,
        anchor: "any generalized Kähler state",
        summary: "state directory written by a previous run with snapshots = true (snapshot)",
        config: None,
    },
    Entry {
        name: "flat_coupled",
        kind: EntryKind::Scenario,
        anchor: "coupled flow preserves the generalized Kähler condition",
        summary: "flat torus, 100 coupled steps, all residuals at floor",
        config: Some(include_str!("../../scenarios/flat_coupled.cfg")),
    },
    Entry {
        name: "perturbed_coupled",
        kind: EntryKind::Scenario,
        anchor: "coupled flow preserves the generalized Kähler condition",
        summary: "perturbed Kähler torus under the coupled flow",
        config: Some(include_str!("../../scenarios/perturbed_coupled.cfg")),
    },
    Entry {
        name: "commuting_coupled",
        kind: EntryKind::Scenario,
        anchor: "coupled flow preserves the generalized Kähler condition",
        summary: "non-Kähler GK torus, 200 coupled steps, residuals stay at the discretization floor",
        config: Some(include_str!("../../scenarios/commuting_coupled.cfg")),
    },
    Entry {
        name: "naive_bfield",
        kind: EntryKind::Scenario,
        anchor: "the B-field flow alone does not preserve the GK condition for fixed J+ and J-",
        summary: "negative control, EXPECT_FAIL: frozen complex structures, r1 grows",
        config: Some(include_str!("../../scenarios/naive_bfield.cfg")),
    },
    Entry {
        name: "hopf_gauge",
        kind: EntryKind::Scenario,
        anchor: "pluriclosed flows for J+ and J- are gauge equivalent to the B-field flow",
        summary: "S3 x S1: two pluriclosed runs transported by their gauge flows",
        config: Some(include_str!("../../scenarios/hopf_gauge.cfg")),
    },
    Entry {
        name: "commuting_gauge",
        kind: EntryKind::Scenario,
        anchor: "pluriclosed flows for J+ and J- are gauge equivalent to the B-field flow",
        summary: "commuting GK torus: transported metrics and d^c forms against the coupled run",
        config: Some(include_str!("../../scenarios/commuting_gauge.cfg")),
    },
    Entry {
        name: "hopf_static",
        kind: EntryKind::Scenario,
        anchor: "static solitons: integral identity, d*H = 0 for lambda = 0, parallel Lee form, theta = *H",
        summary: "static datum on S3 x S1 with the lambda sweep",
        config: Some(include_str!("../../scenarios/hopf_static.cfg")),
    },
    Entry {
        name: "static_negative",
        kind: EntryKind::Scenario,
        anchor: "static solitons with lambda < 0 are Kähler",
        summary: "negative control, EXPECT_FAIL: lambda = -0.5 with H != 0",
        config: Some(include_str!("../../scenarios/static_negative.cfg")),
    },
    Entry {
        name: "hopf_staticity",
        kind: EntryKind::Scenario,
        anchor: "static metrics on Hopf surfaces: S - Q = 0, locally isometric to R x S3",
        summary: "100 sample points, S - Q and cylinder curvature invariants",
        config: Some(include_str!("../../scenarios/hopf_staticity.cfg")),
    },
];

pub fn lookup(name: &str) -> Result<&'static Entry> {
    CATALOG.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownName(name.to_string()))
}

/// Text of `describe --list`.
pub fn list() -> String {
    let mut s = String::new();
    for (kind, title) in [(EntryKind::Recipe, "recipes"), (EntryKind::Scenario, "scenarios")] {
        s.push_str(title);
        s.push_str(":\n");
        for e in CATALOG.iter().filter(|e| e.kind == kind) {
            s.push_str(&format!("  {:<20} {}\n", e.name, e.anchor));
        }
    }
    s
}

/// Text of `describe --explain <name>`.
pub fn explain(name: &str) -> Result<String> {
    let e = lookup(name)?;
    let mut s = format!("{}\n  exercises: {}\n  {}\n", e.name, e.anchor, e.summary);
    if let Some(c) = e.config {
        s.push_str("\nconfig:\n");
        s.push_str(c);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn bundled_scenarios_parse_and_match_names() {
        for e in CATALOG.iter().filter(|e| e.kind == EntryKind::Scenario) {
            let s = Scenario::parse(e.config.unwrap()).unwrap();
            assert_eq!(s.name, e.name);
        }
    }

    #[test]
    fn list_and_explain() {
        let l = list();
        for r in ["FLAT_KAHLER_TORUS", "PERTURBED_TORUS", "HOPF_GK", "HOPF_STATIC", "CUSTOM", "COMMUTING_GK_TORUS"] {
            assert!(l.contains(r));
        }
        assert!(explain("HOPF_STATIC").unwrap().contains("S - Q = 0"));
        assert!(explain("nope").is_err());
    }
}

//! Scenario-driven command-line front end for the workbench.

pub mod output;
pub mod run;
pub mod scenario;

/// Scenarios shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("einstein-lc", include_str!("../scenarios/einstein-lc.scn")),
    ("decoupled-system", include_str!("../scenarios/decoupled-system.scn")),
    ("zero-torsion-gate", include_str!("../scenarios/zero-torsion-gate.scn")),
    ("lcdm", include_str!("../scenarios/lcdm.scn")),
    ("lcdm-derived-chi", include_str!("../scenarios/lcdm-derived-chi.scn")),
    ("phantom-powerlaw", include_str!("../scenarios/phantom-powerlaw.scn")),
    ("dedm-attractor", include_str!("../scenarios/dedm-attractor.scn")),
    ("fgt-roots", include_str!("../scenarios/fgt-roots.scn")),
    ("stability", include_str!("../scenarios/stability.scn")),
    ("infrastructure", include_str!("../scenarios/infrastructure.scn")),
    ("qelgen-exponential", include_str!("../scenarios/qelgen-exponential.scn")),
    ("system-torsionful", include_str!("../scenarios/system-torsionful.scn")),
    ("epsilon-family", include_str!("../scenarios/epsilon-family.scn")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|b| b.0 == name).map(|b| b.1)
}

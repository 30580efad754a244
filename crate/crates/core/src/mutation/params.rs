//! Parameter catalogs and the solver-parameter toggle.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{Choices, MutationError, MutationKind};
use crate::ast::ChcSystem;

/// Rewrite identifier that runs the simplifier with default settings.
pub const EMPTY_SIMPLIFY: &str = "empty_simplify";

/// Option-name prefix of fixedpoint-engine parameters in a script.
const FP_PREFIX: &str = "fp.";

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct SolverParam {
    /// Name without the `fp.` prefix, e.g. `spacer.ctp`.
    pub name: String,
    pub default: bool,
}

#[derive(Deserialize)]
struct RewriteCatalog {
    params: Vec<String>,
}

#[derive(Deserialize)]
struct SolverCatalog {
    param: Vec<SolverParam>,
}

/// The 33 Boolean simplifier parameters, in catalog order.
pub fn rewrite_params() -> &'static [String] {
    static CELL: OnceLock<Vec<String>> = OnceLock::new();
    CELL.get_or_init(|| {
        toml::from_str::<RewriteCatalog>(include_str!("../../data/rewrite_params.toml"))
            .expect("bundled rewrite catalog parses")
            .params
    })
}

/// The 37 Boolean fixedpoint-engine parameters, in catalog order.
pub fn solver_params() -> &'static [SolverParam] {
    static CELL: OnceLock<Vec<SolverParam>> = OnceLock::new();
    CELL.get_or_init(|| {
        toml::from_str::<SolverCatalog>(include_str!("../../data/solver_params.toml"))
            .expect("bundled solver catalog parses")
            .param
    })
}

/// Catalog parameters already set in `system`'s options, with their values.
pub fn toggled_params(system: &ChcSystem) -> Vec<(String, bool)> {
    system
        .options
        .iter()
        .filter_map(|(k, v)| {
            let name = k.strip_prefix(FP_PREFIX)?;
            solver_params().iter().any(|p| p.name == name).then(|| (name.to_string(), v == "true"))
        })
        .collect()
}

fn is_set(system: &ChcSystem, name: &str) -> bool {
    system.options.iter().any(|(k, _)| k.strip_prefix(FP_PREFIX) == Some(name))
}

pub(super) fn sample_toggle(system: &ChcSystem, rng: &mut ChaCha8Rng) -> Result<Choices, MutationError> {
    let free: Vec<&SolverParam> = solver_params().iter().filter(|p| !is_set(system, &p.name)).collect();
    if free.is_empty() {
        return Err(MutationError::not_applicable(MutationKind::ParamToggle, "every parameter is already set"));
    }
    let p = free[rng.gen_range(0..free.len())];
    Ok(Choices::ParamToggle { param: p.name.clone(), value: !p.default })
}

pub(super) fn toggle(system: &ChcSystem, param: &str, value: bool) -> Result<ChcSystem, MutationError> {
    let invalid = |r: String| MutationError::invalid(MutationKind::ParamToggle, r);
    if !solver_params().iter().any(|p| p.name == param) {
        return Err(invalid(format!("`{param}` is not a catalog parameter")));
    }
    if is_set(system, param) {
        return Err(invalid(format!("`{param}` is already set")));
    }
    let mut out = system.clone();
    out.options.push((format!("{FP_PREFIX}{param}"), value.to_string()));
    Ok(out)
}

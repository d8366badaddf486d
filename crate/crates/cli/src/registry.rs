//! Resolves function references: builtin names first, then file paths.

use std::path::Path;

use mkz_core::{builtin, PiecewiseLinear, TestFunction, BUILTIN_NAMES};

use crate::error::{CliError, CliResult};

pub fn resolve(reference: &str) -> CliResult<TestFunction<f64>> {
    if let Some(f) = builtin(reference) {
        return Ok(f);
    }
    let path = Path::new(reference);
    if !path.exists() {
        return Err(CliError::usage(format!(
            "unknown function {reference:?}: not a builtin ({}) and no such file",
            BUILTIN_NAMES.join(", ")
        )));
    }
    Ok(PiecewiseLinear::from_path(path)?.into_test_function(reference))
}

pub fn resolve_all(references: &[String]) -> CliResult<Vec<TestFunction<f64>>> {
    references.iter().map(|r| resolve(r)).collect()
}

/// Builtins whose modulus of continuity is known in closed form.
pub fn analytic_builtins() -> Vec<TestFunction<f64>> {
    BUILTIN_NAMES
        .iter()
        .filter_map(|n| builtin::<f64>(n))
        .filter(TestFunction::has_analytic_modulus)
        .collect()
}

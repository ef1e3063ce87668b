//! Construction of [`HalfSpaceTables`]: the torsion column comes from
//! adaptive quadrature of the closed-form integrand, the frequency column
//! from the 1D Dirichlet eigensolve on truncated half-line meshes.

use crate::error::Result;
use crate::geometry::{build_mesh, Domain};
use crate::ou_solver::solve_frequency;
use crate::special::{halfspace_torsion, HalfSpaceTables};
use rayon::prelude::*;

/// Default tabulation range. Outside it the suite never lands: T(6) is
/// below every rigidity of interest and Λ(H₋₆) is already ≈ 0.
pub const DEFAULT_S_MIN: f64 = -6.0;
pub const DEFAULT_S_MAX: f64 = 6.0;
pub const DEFAULT_STEP: f64 = 0.05;
/// Mesh size of the 1D eigensolves feeding the frequency column.
pub const DEFAULT_H: f64 = 1e-3;

/// Tabulate s ↦ T(s) and s ↦ Λ_γ(H_s) on a uniform grid.
pub fn build_halfspace_tables(
    s_min: f64,
    s_max: f64,
    step: f64,
    h: f64,
) -> Result<HalfSpaceTables> {
    if !(step > 0.0 && s_min < s_max) {
        return Err(crate::Error::Validation(format!(
            "table grid requires s_min < s_max and step > 0, got [{s_min}, {s_max}] step {step}"
        )));
    }
    let n = ((s_max - s_min) / step).round() as usize;
    let s_grid: Vec<f64> = (0..=n).map(|i| s_min + i as f64 * step).collect();
    let torsion_values: Vec<f64> = s_grid.iter().map(|&s| halfspace_torsion(s)).collect();
    let frequency_values: Vec<f64> = s_grid
        .par_iter()
        .map(|&s| {
            let mesh = build_mesh(&Domain::HalfLine { s }, h)?;
            Ok(solve_frequency(&mesh)?.eigenvalue)
        })
        .collect::<Result<Vec<f64>>>()?;
    HalfSpaceTables::new(s_grid, torsion_values, frequency_values)
}

/// Tables at the default range and resolution.
pub fn default_tables() -> Result<HalfSpaceTables> {
    build_halfspace_tables(DEFAULT_S_MIN, DEFAULT_S_MAX, DEFAULT_STEP, DEFAULT_H)
}

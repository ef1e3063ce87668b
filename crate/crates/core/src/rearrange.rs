//! The Ehrhard–Kohler-Jobin rearrangement `u† = f∘T(x₁)` on the
//! half-space `K† = H_{s†}`, the Theorem 4.2 verification, and the full
//! Theorem 1.1 pipeline.
//!
//! All τ-integrals run on the image grid `τ_i = D(t_i)` (no uniform
//! re-gridding), so the change of variables in the Theorem 4.2 proof is
//! mirrored discretely and the cancellations are exact at the table
//! level. Inequality verdicts use a one-sided tolerance of
//! `tol_inequality` plus the reported discretization/extrapolation
//! estimates of both sides; equality verdicts use `tol_equality`
//! relative at default resolution.

use crate::coarea::{distribution_d, integrate_thresholds, level_profile, LevelProfile};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh_with_override, gaussian_measure, Domain, Mesh};
use crate::interp::{power_law_panel, MonotoneCubic};
use crate::ou_solver::{assemble, solve_frequency_assembled, solve_torsion_assembled};
use crate::special::{
    gamma_halfspace, gaussian_quantile, halfspace_torsion, halfspace_torsion_inverse,
    HalfSpaceTables,
};
use serde::Serialize;

/// Default one-sided slack for inequality verdicts (added to the
/// reported per-side discretization estimates).
pub const DEFAULT_TOL_INEQUALITY: f64 = 1e-6;
/// Default relative tolerance for the Theorem 4.2 equality verdicts.
pub const DEFAULT_TOL_EQUALITY: f64 = 0.01;

const ENDPOINT_SAMPLES: usize = 5;

/// The 1D profile `f` on `[0, t₀]` representing `u†(x) = f(T(x₁))`.
#[derive(Debug, Clone)]
pub struct RearrangedProfile {
    /// `t₀ = D(0) = T^mod`, the torsional rigidity of `K†`
    pub t0: f64,
    /// half-space offset: `T(s†) = t₀`
    pub s_dagger: f64,
    /// image grid `τ_i = D(t_i)`, strictly decreasing from `t₀` to 0
    pub tau_grid: Vec<f64>,
    /// `f(τ_i)`: 0 at `τ₀ = t₀`, increasing along the grid
    pub f_values: Vec<f64>,
    /// `D⁻¹(τ_i) = t_i` (the source thresholds)
    pub d_inv: Vec<f64>,
    /// `γ(H_{T⁻¹(τ_i)})`; 0 at the final grid point
    pub gamma_h: Vec<f64>,
    /// `ℓ(t_i)/γ(K_{t_i})` (equals `−f′(τ_i)·γ(H_{T⁻¹(τ_i)})`)
    pub lg_ratio: Vec<f64>,
    /// power-law exponent fitted for the last `f` panel
    pub endpoint_alpha: f64,
    /// monotone interpolant of `f` over ascending τ
    interp: MonotoneCubic,
}

impl RearrangedProfile {
    pub fn m(&self) -> usize {
        self.tau_grid.len() - 1
    }

    /// `sup u† = f(0)`
    pub fn f_max(&self) -> f64 {
        *self.f_values.last().unwrap()
    }

    /// CSV dump (columns tau, f, D_inv) for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,f,D_inv\n");
        for i in 0..self.tau_grid.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.tau_grid[i], self.f_values[i], self.d_inv[i]
            ));
        }
        out
    }
}

/// Build the rearranged profile from a level profile with `D` filled.
pub fn build_rearrangement(
    profile: &LevelProfile,
    tables: &HalfSpaceTables,
) -> Result<RearrangedProfile> {
    let m = profile.m();
    if profile.d.len() != m + 1 {
        return Err(Error::Validation(
            "build_rearrangement requires a profile with D filled".into(),
        ));
    }
    for w in profile.d.windows(2) {
        if !(w[0] > w[1]) {
            return Err(Error::Validation(
                "distribution function D is not strictly decreasing after regularization".into(),
            ));
        }
    }
    let t0 = profile.d[0];
    let s_dagger = halfspace_torsion_inverse(t0)?;
    if s_dagger < tables.s_min() || s_dagger > tables.s_max() {
        return Err(Error::Domain(format!(
            "t0 = {t0:.6e} maps to s† = {s_dagger:.4} outside the tabulated range \
             [{}, {}]",
            tables.s_min(),
            tables.s_max()
        )));
    }
    let tau_grid = profile.d.clone();
    let d_inv = profile.thresholds.clone();

    // γ(H_{T⁻¹(τ_i)}) per grid point (exactly 0 at τ = 0)
    let mut gamma_h = vec![0.0; m + 1];
    gamma_h[0] = gamma_halfspace(s_dagger);
    for i in 1..m {
        gamma_h[i] = gamma_halfspace(halfspace_torsion_inverse(tau_grid[i])?);
    }

    let mut lg_ratio = vec![0.0; m + 1];
    for i in 0..m {
        if profile.gamma[i] <= 0.0 {
            return Err(Error::Validation(format!(
                "γ(K_t) vanished at interior threshold t = {:.6e}",
                profile.thresholds[i]
            )));
        }
        lg_ratio[i] = profile.ell[i] / profile.gamma[i];
    }

    // f by quadrature of f′ = −ℓ/(γ·γ_H) in τ, which after the change of
    // variables dτ = −(γ²/ℓ) dt is f(t_i) − f(t_{i-1}) = ∫ γ/γ_H dt
    let t = &profile.thresholds;
    let mut ratio = vec![0.0; m + 1];
    for i in 0..m {
        if gamma_h[i] <= 0.0 {
            return Err(Error::numerical(
                "rearrange",
                format!("γ(H) vanished at τ = {:.6e}", tau_grid[i]),
            ));
        }
        ratio[i] = profile.gamma[i] / gamma_h[i];
    }
    let mut f_values = vec![0.0; m + 1];
    for i in 0..m - 1 {
        f_values[i + 1] = f_values[i] + 0.5 * (ratio[i] + ratio[i + 1]) * (t[i + 1] - t[i]);
    }
    // top panel: γ/γ_H tends to a finite limit for nondegenerate maxima
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| t[m] - t[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| ratio[i]).collect();
    let (panel, endpoint_alpha) = power_law_panel(&gaps, &sample, t[m] - t[m - 1]);
    f_values[m] = f_values[m - 1] + panel;

    // monotone interpolant over ascending τ
    let tau_asc: Vec<f64> = tau_grid.iter().rev().cloned().collect();
    let f_asc: Vec<f64> = f_values.iter().rev().cloned().collect();
    let interp = MonotoneCubic::new(&tau_asc, &f_asc)?;

    Ok(RearrangedProfile {
        t0,
        s_dagger,
        tau_grid,
        f_values,
        d_inv,
        gamma_h,
        lg_ratio,
        endpoint_alpha,
        interp,
    })
}

/// Evaluate `u†(x₁) = f(T(x₁))` for `x₁ ≥ s†`.
pub fn evaluate_dagger(rp: &RearrangedProfile, x1: f64) -> Result<f64> {
    if x1 < rp.s_dagger - 1e-12 {
        return Err(Error::Domain(format!(
            "u† is defined on [s†, ∞) = [{:.6}, ∞), got x₁ = {x1}",
            rp.s_dagger
        )));
    }
    let tau = halfspace_torsion(x1).min(rp.t0);
    Ok(rp.interp.eval(tau).clamp(0.0, rp.f_max()))
}

// ---------------------------------------------------------------------
// grid integrals with error estimates
// ---------------------------------------------------------------------

/// Trapezoid over the decreasing τ-grid plus a power-law panel at τ → 0.
/// Returns (value, discretization estimate) where the estimate combines a
/// Richardson coarse-grid comparison with the endpoint-fit uncertainty.
fn tau_integral(tau: &[f64], vals: &[f64]) -> (f64, f64) {
    let value = tau_integral_once(tau, vals);
    let (ct, cv) = coarsen(tau, vals);
    let coarse = tau_integral_once(&ct, &cv);
    let m = tau.len() - 1;
    let width = tau[m - 1];
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| tau[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| vals[i]).collect();
    let (panel, _) = power_law_panel(&gaps, &sample, width);
    let fallback = 0.5 * vals[m - 1].max(0.0) * width;
    (value, (value - coarse).abs() / 3.0 + (panel - fallback).abs())
}

fn tau_integral_once(tau: &[f64], vals: &[f64]) -> f64 {
    let m = tau.len() - 1;
    let mut acc = 0.0;
    for i in 0..m - 1 {
        acc += 0.5 * (vals[i] + vals[i + 1]) * (tau[i] - tau[i + 1]);
    }
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| tau[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| vals[i]).collect();
    let (panel, _) = power_law_panel(&gaps, &sample, tau[m - 1]);
    acc + panel
}

/// Same as [`integrate_thresholds`] but with a discretization estimate.
fn t_integral(t: &[f64], vals: &[f64]) -> (f64, f64) {
    let (value, _) = integrate_thresholds(t, vals);
    let (ct, cv) = coarsen(t, vals);
    let (coarse, _) = integrate_thresholds(&ct, &cv);
    let m = t.len() - 1;
    let width = t[m] - t[m - 1];
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| t[m] - t[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| vals[i]).collect();
    let (panel, _) = power_law_panel(&gaps, &sample, width);
    let fallback = 0.5 * vals[m - 1].max(0.0) * width;
    (value, (value - coarse).abs() / 3.0 + (panel - fallback).abs())
}

/// Every other grid point, keeping the two top entries.
fn coarsen(x: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = x.len() - 1;
    let mut cx = Vec::with_capacity(m / 2 + 2);
    let mut cv = Vec::with_capacity(m / 2 + 2);
    let mut i = 0;
    while i < m - 1 {
        cx.push(x[i]);
        cv.push(v[i]);
        i += 2;
    }
    cx.push(x[m - 1]);
    cv.push(v[m - 1]);
    cx.push(x[m]);
    cv.push(v[m]);
    (cx, cv)
}

// ---------------------------------------------------------------------
// Theorem 4.2
// ---------------------------------------------------------------------

/// Left/right values and verdicts for the three properties of
/// Theorem 4.2.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem42Report {
    /// Dirichlet energies: `∫ ℓ dt` vs `∫ f′² γ_H² dτ`
    pub energy_left: f64,
    pub energy_right: f64,
    pub energy_gap: f64,
    pub energy_pass: bool,
    /// masses: `∫ γ(K_t) dt` vs `−∫ γ_H f′ dτ`
    pub mass_left: f64,
    pub mass_right: f64,
    pub mass_gap: f64,
    pub mass_pass: bool,
    /// convex functional: `∫ F(u) dγ ≤ ∫ F(u†) dγ` via layer cake
    pub convex_left: f64,
    pub convex_right: f64,
    pub convex_pass: bool,
    pub tol_equality: f64,
}

/// Verify the three Theorem 4.2 properties for a convex nondecreasing
/// `F` given as a table `(f_grid, f_vals)` on `[0, u_max]`.
pub fn verify_theorem_4_2(
    profile: &LevelProfile,
    rp: &RearrangedProfile,
    f_grid: &[f64],
    f_vals: &[f64],
    tol_equality: f64,
) -> Result<Theorem42Report> {
    let m = profile.m();
    let t = &profile.thresholds;
    let tau = &rp.tau_grid;

    // (1) energies; the right side uses f′ γ_H = −ℓ/γ on the image grid
    let (energy_left, e_est_l) = t_integral(t, &profile.ell);
    let sq: Vec<f64> = rp.lg_ratio.iter().map(|r| r * r).collect();
    let (energy_right, e_est_r) = tau_integral(tau, &sq);
    let energy_gap = (energy_left - energy_right).abs() / energy_left.abs().max(1e-300);
    let energy_pass = energy_gap <= tol_equality + (e_est_l + e_est_r) / energy_left.abs();

    // (2) masses
    let (mass_left, m_est_l) = t_integral(t, &profile.gamma);
    let (mass_right, m_est_r) = tau_integral(tau, &rp.lg_ratio);
    let mass_gap = (mass_left - mass_right).abs() / mass_left.abs().max(1e-300);
    let mass_pass = mass_gap <= tol_equality + (m_est_l + m_est_r) / mass_left.abs();

    // (3) convex functional via layer cake with F′ weights
    let f_interp = MonotoneCubic::new(f_grid, f_vals)?;
    let f0 = f_interp.eval(0.0);
    let left_integrand: Vec<f64> = (0..=m)
        .map(|i| f_interp.eval_deriv(t[i]).max(0.0) * profile.gamma[i])
        .collect();
    let (li, l_est) = t_integral(t, &left_integrand);
    let convex_left = f0 * profile.gamma[0] + li;
    let right_integrand: Vec<f64> = (0..=m)
        .map(|i| f_interp.eval_deriv(rp.f_values[i]).max(0.0) * rp.lg_ratio[i])
        .collect();
    let (ri, r_est) = tau_integral(tau, &right_integrand);
    let convex_right = f0 * rp.gamma_h[0] + ri;
    let convex_pass = convex_left
        <= convex_right + tol_equality * convex_right.abs().max(1e-12) + l_est + r_est;

    Ok(Theorem42Report {
        energy_left,
        energy_right,
        energy_gap,
        energy_pass,
        mass_left,
        mass_right,
        mass_gap,
        mass_pass,
        convex_left,
        convex_right,
        convex_pass,
        tol_equality,
    })
}

// ---------------------------------------------------------------------
// Theorem 1.1 pipeline
// ---------------------------------------------------------------------

/// One inequality link of the Theorem 1.1 chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainLink {
    pub name: String,
    /// must satisfy `lhs ≤ rhs + tol`
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

fn link(name: &str, lhs: f64, rhs: f64, tol: f64) -> ChainLink {
    ChainLink {
        name: name.to_string(),
        lhs,
        rhs,
        tol,
        pass: lhs <= rhs + tol,
    }
}

/// Full report of one Theorem 1.1 run.
#[derive(Debug, Clone, Serialize)]
pub struct KJReport {
    pub domain: Domain,
    pub h: f64,
    pub m: usize,
    pub hypothesis_satisfied: bool,
    /// `Λ_γ(K)`
    pub lambda_k: f64,
    /// `T_γ(K)`
    pub torsion_k: f64,
    /// `t₀ = T^mod(K; u)` for the first eigenfunction `u`
    pub t0: f64,
    /// `T(s†) = t₀`
    pub s_dagger: f64,
    /// `T(s_H) = T_γ(K)`
    pub s_h: f64,
    /// Rayleigh quotient of `u†` on `K†`
    pub rayleigh_dagger: f64,
    /// `Λ_γ(K†)` from the half-space tables
    pub lambda_k_dagger: f64,
    /// `Λ_γ(H_{s_H})` from the half-space tables
    pub lambda_h: f64,
    /// the chain links, in proof order; the last is the verdict
    pub chain: Vec<ChainLink>,
    pub thm42: Theorem42Report,
    /// Eq. (levset-meas): `γ(K_{D⁻¹(τ)}) ≥ γ(H_{T⁻¹(τ)})` pointwise
    pub levset_holds: bool,
    /// Eq. (left): `D⁻¹(τ) ≤ f(τ)` pointwise
    pub left_ineq_holds: bool,
    /// independent sanity check: `Λ_γ(K) ≥ Λ_γ(H)` for the half-space of
    /// equal measure
    pub faber_krahn_holds: bool,
    pub pav_distance: f64,
    pub endpoint_alpha: f64,
    pub warnings: Vec<String>,
    pub tol_equality: f64,
    pub tol_inequality: f64,
    pub pass: bool,
}

/// Run the Theorem 1.1 pipeline on one domain.
pub fn kj_pipeline(
    domain: &Domain,
    h: f64,
    m: usize,
    tables: &HalfSpaceTables,
    tol_equality: f64,
    tol_inequality: f64,
    allow_nonconvex: bool,
) -> Result<KJReport> {
    let stage = |s: &str, e: Error| Error::numerical(s, e.to_string());

    let mesh = build_mesh_with_override(domain, h, allow_nonconvex)?;
    let asm = assemble(&mesh).map_err(|e| stage("assemble", e))?;
    let spectral = solve_frequency_assembled(&mesh, &asm).map_err(|e| stage("frequency", e))?;
    let lambda_k = spectral.eigenvalue;
    let torsion = solve_torsion_assembled(&mesh, &asm).map_err(|e| stage("torsion", e))?;
    let torsion_k = torsion.rigidity;

    let profile = level_profile(&mesh, &spectral.eigenfunction, m)
        .map_err(|e| stage("level_profile", e))?;
    let profile = distribution_d(&profile).map_err(|e| stage("distribution", e))?;
    let rp = build_rearrangement(&profile, tables).map_err(|e| stage("rearrange", e))?;
    let t0 = rp.t0;
    let s_dagger = rp.s_dagger;

    // estimate for t0 = D(0): integration of γ²/ℓ over the t-grid
    let mm = profile.m();
    let gsq: Vec<f64> = (0..=mm)
        .map(|i| {
            if i < mm {
                profile.gamma[i] * profile.gamma[i] / profile.ell[i]
            } else {
                0.0
            }
        })
        .collect();
    let (_, t0_est) = t_integral(&profile.thresholds, &gsq);

    // Rayleigh quotient of u† on K†: energy and ∫ (u†)² dγ by layer cake
    let sq: Vec<f64> = rp.lg_ratio.iter().map(|r| r * r).collect();
    let (num, num_est) = tau_integral(&rp.tau_grid, &sq);
    let den_integrand: Vec<f64> = (0..=mm)
        .map(|i| 2.0 * rp.f_values[i] * rp.lg_ratio[i])
        .collect();
    let (den, den_est) = tau_integral(&rp.tau_grid, &den_integrand);
    if den <= 0.0 {
        return Err(Error::numerical("rearrange", "∫ (u†)² dγ vanished"));
    }
    let rayleigh_dagger = num / den;
    let ray_est = rayleigh_dagger * (num_est / num + den_est / den);

    let s_h = halfspace_torsion_inverse(torsion_k).map_err(|e| stage("s_H", e))?;
    let lambda_k_dagger = tables
        .frequency_at(s_dagger)
        .map_err(|e| stage("tables", e))?;
    let lambda_h = tables.frequency_at(s_h).map_err(|e| stage("tables", e))?;

    // s-space tolerance for the s_H ≤ s† link: |Δτ| / |T′(s†)|
    let dt_ds = crate::special::halfspace_torsion_deriv(s_dagger).abs();
    let s_tol = (tol_inequality + t0_est) / dt_ds.max(1e-300);

    // Λ(H_s) interpolation error is far below these scales; the per-link
    // tolerances carry the integration estimates of both sides
    let chain = vec![
        link("T_mod <= T_K", t0, torsion_k, tol_inequality + t0_est),
        link("s_H <= s_dagger", s_h, s_dagger, s_tol),
        link(
            "rayleigh(u_dagger) <= lambda_K",
            rayleigh_dagger,
            lambda_k,
            tol_inequality + ray_est,
        ),
        link(
            "lambda_K_dagger <= rayleigh(u_dagger)",
            lambda_k_dagger,
            rayleigh_dagger,
            tol_inequality + ray_est,
        ),
        link(
            "lambda_H <= lambda_K_dagger",
            lambda_h,
            lambda_k_dagger,
            tol_inequality,
        ),
        link(
            "lambda_H <= lambda_K",
            lambda_h,
            lambda_k,
            tol_inequality + ray_est,
        ),
    ];

    // pointwise inequalities on the grid (small slack for the top panels)
    let slack = 1e-9 + 1e-6 * profile.gamma[0];
    let levset_holds = (0..=mm).all(|i| profile.gamma[i] >= rp.gamma_h[i] - slack);
    let f_slack = 1e-9 + 1e-6 * profile.u_max;
    let left_ineq_holds = (0..=mm).all(|i| rp.d_inv[i] <= rp.f_values[i] + f_slack);

    // Theorem 4.2 with F(t) = t²
    let u_max = profile.u_max;
    let f_grid: Vec<f64> = (0..=64).map(|i| 1.05 * u_max * i as f64 / 64.0).collect();
    let f_vals: Vec<f64> = f_grid.iter().map(|&x| x * x).collect();
    let thm42 = verify_theorem_4_2(&profile, &rp, &f_grid, &f_vals, tol_equality)?;

    // Faber-Krahn-type comparison at equal measure
    let gamma_k = gaussian_measure(domain)?;
    let s_star = gaussian_quantile(1.0 - gamma_k)?;
    let faber_krahn_holds = match tables.frequency_at(s_star) {
        Ok(l) => lambda_k >= l - tol_inequality - ray_est,
        Err(_) => true, // outside the table: nothing to compare against
    };

    let mut warnings = profile.warnings.clone();
    if !mesh.hypothesis_satisfied {
        warnings.push("convexity hypothesis not satisfied (override active)".into());
    }

    let pass = chain.iter().all(|c| c.pass)
        && thm42.energy_pass
        && thm42.mass_pass
        && thm42.convex_pass
        && levset_holds
        && left_ineq_holds
        && faber_krahn_holds;

    Ok(KJReport {
        domain: domain.clone(),
        h,
        m,
        hypothesis_satisfied: mesh.hypothesis_satisfied,
        lambda_k,
        torsion_k,
        t0,
        s_dagger,
        s_h,
        rayleigh_dagger,
        lambda_k_dagger,
        lambda_h,
        chain,
        thm42,
        levset_holds,
        left_ineq_holds,
        faber_krahn_holds,
        pav_distance: profile.pav_distance,
        endpoint_alpha: rp.endpoint_alpha,
        warnings,
        tol_equality,
        tol_inequality,
        pass,
    })
}

/// Remark 4.6: generalized-frequency comparison for a convex
/// nondecreasing `F` with `F(0) ≥ 0`, using the first eigenfunction as
/// the trial function.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedReport {
    pub quotient_k: f64,
    pub quotient_dagger: f64,
    pub tol: f64,
    /// paper-predicted direction: `quotient_k ≥ quotient_dagger`
    pub pass: bool,
}

pub fn generalized_frequency_check(
    domain: &Domain,
    f_grid: &[f64],
    f_vals: &[f64],
    h: f64,
    m: usize,
    tables: &HalfSpaceTables,
    allow_nonconvex: bool,
) -> Result<GeneralizedReport> {
    let mesh = build_mesh_with_override(domain, h, allow_nonconvex)?;
    let asm = assemble(&mesh)?;
    let spectral = solve_frequency_assembled(&mesh, &asm)?;
    let u = &spectral.eigenfunction;
    let profile = level_profile(&mesh, u, m)?;
    let profile = distribution_d(&profile)?;
    let rp = build_rearrangement(&profile, tables)?;

    let thm = verify_theorem_4_2(&profile, &rp, f_grid, f_vals, DEFAULT_TOL_EQUALITY)?;
    // numerators: the shared Dirichlet energy, computed per side
    let quotient_k = thm.energy_left / thm.convex_left;
    let quotient_dagger = thm.energy_right / thm.convex_right;
    // both quotients carry ~tol_equality relative discretization error
    let tol = 2.0 * DEFAULT_TOL_EQUALITY * quotient_k.abs();
    Ok(GeneralizedReport {
        quotient_k,
        quotient_dagger,
        tol,
        pass: quotient_k >= quotient_dagger - tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_mesh;
    use crate::ou_solver::{solve_torsion, ScalarField};
    use crate::special::halfspace_torsion_function;
    use crate::tables::build_halfspace_tables;
    use std::sync::OnceLock;

    fn tables() -> &'static HalfSpaceTables {
        static T: OnceLock<HalfSpaceTables> = OnceLock::new();
        T.get_or_init(|| build_halfspace_tables(-4.0, 4.0, 0.05, 1e-3).unwrap())
    }

    fn halfline_torsion_rearrangement(s: f64) -> (LevelProfile, RearrangedProfile) {
        let mesh = build_mesh(&Domain::HalfLine { s }, 1e-3).unwrap();
        let t = solve_torsion(&mesh).unwrap();
        let p = level_profile(&mesh, &t.field, 256).unwrap();
        let p = distribution_d(&p).unwrap();
        let rp = build_rearrangement(&p, tables()).unwrap();
        (p, rp)
    }

    #[test]
    fn fixed_point_halfline_reproduces_itself() {
        // K = H_s with u its torsion function: T^mod = T_γ(K), so
        // s† = s and u† = u
        let s = 0.5;
        let (_, rp) = halfline_torsion_rearrangement(s);
        assert!(
            (rp.s_dagger - s).abs() < 1e-3,
            "s† = {}, expected {s}",
            rp.s_dagger
        );
        assert_eq!(rp.f_values[0], 0.0);
        // u†(x₁) matches V(x₁) − V(s) in sup norm
        let sup = halfspace_torsion_function(s, s + 6.0).unwrap();
        let mut x1 = s + 0.05;
        while x1 < s + 4.0 {
            let got = evaluate_dagger(&rp, x1).unwrap();
            let exact = halfspace_torsion_function(s, x1).unwrap();
            assert!(
                (got - exact).abs() / sup < 0.01,
                "x₁ = {x1}: u† = {got}, torsion fn = {exact}"
            );
            x1 += 0.173;
        }
    }

    #[test]
    fn f_monotone_and_dominates_d_inverse() {
        let (_, rp) = halfline_torsion_rearrangement(-0.3);
        for w in rp.f_values.windows(2) {
            assert!(w[1] > w[0] - 1e-15, "f not increasing along the grid");
        }
        let f_slack = 1e-4 * rp.f_max();
        for i in 0..rp.tau_grid.len() {
            assert!(
                rp.d_inv[i] <= rp.f_values[i] + f_slack,
                "Eq. (left) fails at i = {i}: D⁻¹ = {}, f = {}",
                rp.d_inv[i],
                rp.f_values[i]
            );
        }
    }

    #[test]
    fn evaluate_dagger_boundary_and_monotonicity() {
        let (_, rp) = halfline_torsion_rearrangement(0.5);
        let at_boundary = evaluate_dagger(&rp, rp.s_dagger).unwrap();
        assert!(at_boundary.abs() < 1e-6, "u†(s†) = {at_boundary}");
        let mut prev = -1.0;
        let mut x = rp.s_dagger;
        while x < rp.s_dagger + 5.0 {
            let v = evaluate_dagger(&rp, x).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
            x += 0.1;
        }
        assert!(evaluate_dagger(&rp, rp.s_dagger - 0.5).is_err());
    }

    #[test]
    fn rearrangement_requires_filled_d() {
        let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, 0.02).unwrap();
        let t = solve_torsion(&mesh).unwrap();
        let p = level_profile(&mesh, &t.field, 64).unwrap();
        assert!(build_rearrangement(&p, tables()).is_err());
    }

    #[test]
    fn theorem_4_2_fixed_point_gaps_small() {
        let (p, rp) = halfline_torsion_rearrangement(0.5);
        let u_max = p.u_max;
        let f_grid: Vec<f64> = (0..=64).map(|i| 1.05 * u_max * i as f64 / 64.0).collect();
        let f_vals: Vec<f64> = f_grid.iter().map(|&x| x * x).collect();
        let r = verify_theorem_4_2(&p, &rp, &f_grid, &f_vals, 1e-3).unwrap();
        assert!(r.energy_gap <= 1e-3, "energy gap {}", r.energy_gap);
        assert!(r.mass_gap <= 1e-3, "mass gap {}", r.mass_gap);
        assert!(r.convex_pass, "convex: {} vs {}", r.convex_left, r.convex_right);
    }

    #[test]
    fn theorem_4_2_identity_f_reduces_to_mass() {
        // F(t) = t: property (3) must compute exactly the mass integrals
        let (p, rp) = halfline_torsion_rearrangement(0.0);
        let u_max = p.u_max;
        let f_grid: Vec<f64> = (0..=64).map(|i| 1.05 * u_max * i as f64 / 64.0).collect();
        let r = verify_theorem_4_2(&p, &rp, &f_grid, &f_grid, 0.01).unwrap();
        assert!(
            (r.convex_left - r.mass_left).abs() <= 1e-10 * r.mass_left,
            "{} vs {}",
            r.convex_left,
            r.mass_left
        );
        assert!(
            (r.convex_right - r.mass_right).abs() <= 1e-10 * r.mass_right,
            "{} vs {}",
            r.convex_right,
            r.mass_right
        );
    }

    #[test]
    fn theorem_4_2_eigenfunction_interval() {
        let mesh = build_mesh(&Domain::Interval { a: -1.3, b: 0.9 }, 2e-3).unwrap();
        let u = crate::ou_solver::solve_frequency(&mesh).unwrap().eigenfunction;
        let p = level_profile(&mesh, &u, 256).unwrap();
        let p = distribution_d(&p).unwrap();
        let rp = build_rearrangement(&p, tables()).unwrap();
        let u_max = p.u_max;
        let f_grid: Vec<f64> = (0..=64).map(|i| 1.05 * u_max * i as f64 / 64.0).collect();
        for pow in [2.0, 4.0] {
            let f_vals: Vec<f64> = f_grid.iter().map(|&x| x.powf(pow)).collect();
            let r = verify_theorem_4_2(&p, &rp, &f_grid, &f_vals, 0.01).unwrap();
            assert!(r.energy_pass && r.mass_pass, "equalities fail for F = t^{pow}");
            assert!(
                r.convex_left <= r.convex_right * 1.01,
                "F = t^{pow}: left {} right {}",
                r.convex_left,
                r.convex_right
            );
        }
    }

    #[test]
    fn theorem_4_2_gaps_shrink_under_refinement() {
        let gap = |h: f64, m: usize| {
            let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, h).unwrap();
            let u = crate::ou_solver::solve_frequency(&mesh).unwrap().eigenfunction;
            let p = level_profile(&mesh, &u, m).unwrap();
            let p = distribution_d(&p).unwrap();
            let rp = build_rearrangement(&p, tables()).unwrap();
            let f_grid: Vec<f64> = (0..=64).map(|i| 1.05 * p.u_max * i as f64 / 64.0).collect();
            let f_vals: Vec<f64> = f_grid.iter().map(|&x| x * x).collect();
            let r = verify_theorem_4_2(&p, &rp, &f_grid, &f_vals, 0.01).unwrap();
            r.energy_gap.max(r.mass_gap)
        };
        let g1 = gap(0.02, 128);
        let g2 = gap(0.01, 256);
        assert!(
            g2 <= g1 / 1.7,
            "gaps did not shrink: {g1:.3e} -> {g2:.3e}"
        );
    }

    #[test]
    fn pipeline_halfline_chain_is_tight() {
        let r = kj_pipeline(
            &Domain::HalfLine { s: 0.5 },
            1e-3,
            256,
            tables(),
            DEFAULT_TOL_EQUALITY,
            DEFAULT_TOL_INEQUALITY,
            false,
        )
        .unwrap();
        assert!(r.pass, "chain: {:#?}", r.chain);
        // every link is an equality within 1e-3
        assert!((r.t0 - r.torsion_k).abs() < 1e-3);
        assert!((r.s_dagger - 0.5).abs() < 1e-3);
        assert!((r.s_h - 0.5).abs() < 1e-3);
        assert!((r.rayleigh_dagger - r.lambda_k).abs() < 1e-3 * r.lambda_k);
        assert!((r.lambda_h - r.lambda_k).abs() < 1e-3 * r.lambda_k);
    }

    #[test]
    fn pipeline_interval_strict_margin() {
        let r = kj_pipeline(
            &Domain::Interval { a: -1.0, b: 1.0 },
            1e-3,
            256,
            tables(),
            DEFAULT_TOL_EQUALITY,
            DEFAULT_TOL_INEQUALITY,
            false,
        )
        .unwrap();
        assert!(r.pass, "chain: {:#?}", r.chain);
        assert!(r.levset_holds && r.left_ineq_holds && r.faber_krahn_holds);
        // Λ(K) = 2 here while Λ(H) is strictly smaller
        assert!(
            r.lambda_k > r.lambda_h + 0.1,
            "expected a strict margin: Λ_K = {}, Λ_H = {}",
            r.lambda_k,
            r.lambda_h
        );
    }

    #[test]
    fn cor_4_4_for_non_eigenfunction_trials() {
        // the Rayleigh quotient does not increase for arbitrary
        // admissible trial fields, not only eigenfunctions
        let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, 2e-3).unwrap();
        let asm = assemble(&mesh).unwrap();
        for u in [
            ScalarField::from_fn(&mesh, |x, _| (1.0 - x * x).max(0.0)),
            ScalarField::from_fn(&mesh, |x, _| ((1.0 - x * x) * (1.3 + x)).max(0.0)),
            ScalarField::from_fn(&mesh, |x, _| {
                (std::f64::consts::PI * (x + 1.0) / 2.0).sin().max(0.0)
            }),
        ] {
            let x = asm.restrict(&u);
            let quotient_k = asm.stiffness.quadratic_form(&x) / asm.mass.quadratic_form(&x);
            let p = level_profile(&mesh, &u, 256).unwrap();
            let p = distribution_d(&p).unwrap();
            let rp = build_rearrangement(&p, tables()).unwrap();
            let sq: Vec<f64> = rp.lg_ratio.iter().map(|r| r * r).collect();
            let (num, num_est) = tau_integral(&rp.tau_grid, &sq);
            let den_i: Vec<f64> = (0..rp.tau_grid.len())
                .map(|i| 2.0 * rp.f_values[i] * rp.lg_ratio[i])
                .collect();
            let (den, den_est) = tau_integral(&rp.tau_grid, &den_i);
            let q_dagger = num / den;
            let est = q_dagger * (num_est / num + den_est / den);
            assert!(
                q_dagger <= quotient_k + 1e-6 + est,
                "Cor 4.4 fails: quotient {quotient_k}, rearranged {q_dagger}"
            );
        }
    }

    #[test]
    fn d_inverse_two_ways_consistent() {
        // inverting the D table vs integrating (D⁻¹)′ = 1/D′ = −ℓ/γ²
        let (p, rp) = halfline_torsion_rearrangement(0.0);
        let m = p.m();
        // cumulative integral of −1/D′ from τ = t0 downward equals t
        let mut t_rebuilt = vec![0.0; m + 1];
        for i in 0..m - 1 {
            let g0 = p.ell[i] / (p.gamma[i] * p.gamma[i]);
            let g1 = p.ell[i + 1] / (p.gamma[i + 1] * p.gamma[i + 1]);
            t_rebuilt[i + 1] =
                t_rebuilt[i] + 0.5 * (g0 + g1) * (rp.tau_grid[i] - rp.tau_grid[i + 1]);
        }
        for i in (8..m - 8).step_by(13) {
            let rel = (t_rebuilt[i] - p.thresholds[i]).abs() / p.thresholds[i];
            assert!(
                rel < 0.005,
                "D⁻¹ mismatch at i = {i}: {} vs {}",
                t_rebuilt[i],
                p.thresholds[i]
            );
        }
    }

    #[test]
    fn generalized_check_directions() {
        let f_grid: Vec<f64> = (0..=64).map(|i| 0.1 * i as f64).collect();
        let quartic: Vec<f64> = f_grid.iter().map(|&x| x.powi(4)).collect();
        let r = generalized_frequency_check(
            &Domain::Interval { a: -1.0, b: 1.0 },
            &f_grid,
            &quartic,
            2e-3,
            256,
            tables(),
            false,
        )
        .unwrap();
        assert!(r.pass, "F = t⁴: {} vs {}", r.quotient_k, r.quotient_dagger);
        // fixed-point case: equality within 1e-3 relative
        let square: Vec<f64> = f_grid.iter().map(|&x| x * x).collect();
        let rf = generalized_frequency_check(
            &Domain::HalfLine { s: 0.5 },
            &f_grid,
            &square,
            1e-3,
            256,
            tables(),
            false,
        )
        .unwrap();
        let rel = (rf.quotient_k - rf.quotient_dagger).abs() / rf.quotient_k;
        assert!(rel < 1e-3, "fixed point quotients differ: rel = {rel:.3e}");
    }
}

//! Level-set functionals of a nonnegative reference field `u`:
//! the superlevel measures `γ(K_t)`, the flux `ℓ(t) = −E′(t)` with
//! `E(t) = ∫_{K_t} |∇u|² dγ`, the modified torsional rigidity
//! `T^mod = ∫ γ(K_t)²/ℓ(t) dt`, its distribution function `D`, and the
//! optimal profile `φ₀`.
//!
//! Superlevel quantities come from sub-element slicing of the
//! piecewise-linear field (never from node counting); `ℓ` comes from
//! differentiating a monotone fit of the cumulative Dirichlet energy,
//! which avoids reconstructing level curves.

use crate::error::{Error, Result};
use crate::geometry::{Cells, Mesh, SEGMENT_RULE, TRIANGLE_RULE};
use crate::interp::{pava_decreasing, power_law_panel, MonotoneCubic};
use crate::ou_solver::{element_gradients, ScalarField};

/// Number of trailing interior samples feeding the power-law endpoint fit.
const ENDPOINT_SAMPLES: usize = 5;

/// Sampled level-set curves of a reference field.
#[derive(Debug, Clone)]
pub struct LevelProfile {
    /// `t₀ = 0 < t₁ < … < t_m = u_max` (quantile-spaced interior levels)
    pub thresholds: Vec<f64>,
    /// `γ(K_{t_i})`, nonincreasing, `gamma[0] = γ(K)`, `gamma[m] = 0`
    pub gamma: Vec<f64>,
    /// `ℓ(t_i) = −E′(t_i)`, positive below the top, `ell[m] = 0`
    pub ell: Vec<f64>,
    /// `D(t_i)`; empty until [`distribution_D`] fills it
    pub d: Vec<f64>,
    pub u_max: f64,
    /// l2 distance of the monotone (PAV) projections — quality metric
    pub pav_distance: f64,
    /// fitted exponent of the last `γ²/ℓ` panel (NaN until `distribution_D`)
    pub endpoint_alpha: f64,
    pub warnings: Vec<String>,
}

impl LevelProfile {
    pub fn m(&self) -> usize {
        self.thresholds.len() - 1
    }

    /// CSV dump (columns t, gamma, ell, D) for inspection.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,gamma,ell,D\n");
        for i in 0..self.thresholds.len() {
            let d = self.d.get(i).copied().unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.thresholds[i], self.gamma[i], self.ell[i], d
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------
// sub-element slicing
// ---------------------------------------------------------------------

/// Gaussian mass of `{u > t}` within a segment, by the same 3-point rule
/// the mesh quadrature uses (so the t = 0 slice matches the element mass
/// to round-off).
fn slice_segment(x0: f64, x1: f64, u0: f64, u1: f64, t: f64) -> f64 {
    let (lo, hi) = if u0 <= u1 { (u0, u1) } else { (u1, u0) };
    if t >= hi {
        return 0.0;
    }
    let (a, b) = if t <= lo {
        (x0, x1)
    } else {
        // single crossing of the linear interpolant
        let xc = x0 + (t - u0) / (u1 - u0) * (x1 - x0);
        if u1 > u0 {
            (xc, x1)
        } else {
            (x0, xc)
        }
    };
    let len = b - a;
    let mut acc = 0.0;
    for (s, w) in SEGMENT_RULE {
        let x = a + s * len;
        acc += w * len * (-0.5 * x * x).exp();
    }
    acc / crate::special::SQRT_2PI
}

/// Gaussian mass of `{u > t}` within a triangle: clip the triangle by the
/// linear interpolant and integrate the density with the 6-point rule on
/// a fan of the clipped polygon.
fn slice_triangle(p: &[[f64; 2]; 3], u: &[f64; 3], t: f64) -> f64 {
    let mut poly: Vec<[f64; 2]> = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if u[i] >= t {
            poly.push(p[i]);
        }
        if (u[i] > t) != (u[j] > t) && u[i] != u[j] {
            let s = (t - u[i]) / (u[j] - u[i]);
            if s > 0.0 && s < 1.0 {
                poly.push([
                    p[i][0] + s * (p[j][0] - p[i][0]),
                    p[i][1] + s * (p[j][1] - p[i][1]),
                ]);
            }
        }
    }
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 1..poly.len() - 1 {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let area =
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
        for (l1, l2, w) in TRIANGLE_RULE {
            let l3 = 1.0 - l1 - l2;
            let x = l1 * a[0] + l2 * b[0] + l3 * c[0];
            let y = l1 * a[1] + l2 * b[1] + l3 * c[1];
            acc += w * area * (-0.5 * (x * x + y * y)).exp();
        }
    }
    acc / (2.0 * std::f64::consts::PI)
}

// ---------------------------------------------------------------------
// level_profile
// ---------------------------------------------------------------------

/// Sample `γ(K_t)` and `ℓ(t)` on an `m`-level quantile grid.
pub fn level_profile(mesh: &Mesh, u: &ScalarField, m: usize) -> Result<LevelProfile> {
    if u.values.len() != mesh.num_nodes() {
        return Err(Error::Validation("level_profile: field/mesh mismatch".into()));
    }
    if m < 8 {
        return Err(Error::Validation(format!("level count m = {m} too small (need >= 8)")));
    }
    let min = u.min_value();
    if min < -1e-9 {
        return Err(Error::Validation(format!(
            "reference field has negative values (min = {min:.3e})"
        )));
    }
    for &b in &mesh.boundary_nodes {
        if u.values[b].abs() > 1e-12 {
            return Err(Error::Validation(
                "reference field must vanish on the boundary".into(),
            ));
        }
    }
    let vals: Vec<f64> = u.values.iter().map(|&v| v.max(0.0)).collect();
    let u_max = vals.iter().cloned().fold(0.0f64, f64::max);
    if u_max <= 0.0 {
        return Err(Error::Validation("reference field is identically zero".into()));
    }
    let mut warnings = Vec::new();

    // per-element summary: mass, squared gradient, nodal range
    let grads = element_gradients(mesh, &vals)?;
    let qpe = mesh.quad_per_element();
    let ne = mesh.num_elements();
    let mut mass_e = vec![0.0; ne];
    for e in 0..ne {
        mass_e[e] = mesh.quad_weights[e * qpe..(e + 1) * qpe].iter().sum();
    }
    let grad2_e: Vec<f64> = grads.iter().map(|g| g[0] * g[0] + g[1] * g[1]).collect();
    let (umin_e, umax_e): (Vec<f64>, Vec<f64>) = match &mesh.cells {
        Cells::Segments(segs) => segs
            .iter()
            .map(|s| {
                let (a, b) = (vals[s[0]], vals[s[1]]);
                (a.min(b), a.max(b))
            })
            .unzip(),
        Cells::Triangles(tris) => tris
            .iter()
            .map(|t| {
                let (a, b, c) = (vals[t[0]], vals[t[1]], vals[t[2]]);
                (a.min(b).min(c), a.max(b).max(c))
            })
            .unzip(),
    };

    // plateau detection: flat elements carrying Gaussian mass above the
    // zero level (level sets of positive measure)
    let plateau_mass: f64 = (0..ne)
        .filter(|&e| grad2_e[e] <= (1e-8 * u_max).powi(2) && umax_e[e] > 1e-12 * u_max)
        .map(|e| mass_e[e])
        .sum();
    if plateau_mass > 1e-8 {
        warnings.push(format!(
            "plateau detected: flat elements carry Gaussian mass {plateau_mass:.3e}"
        ));
    }

    // quantile-spaced thresholds from the weighed quadrature samples
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(mesh.quad_points.len());
    let mut q = 0;
    match &mesh.cells {
        Cells::Segments(segs) => {
            for s in segs {
                for (t, _) in SEGMENT_RULE {
                    let uv = (1.0 - t) * vals[s[0]] + t * vals[s[1]];
                    samples.push((uv, mesh.quad_weights[q]));
                    q += 1;
                }
            }
        }
        Cells::Triangles(tris) => {
            for tr in tris {
                for (l1, l2, _) in TRIANGLE_RULE {
                    let l3 = 1.0 - l1 - l2;
                    let uv = l1 * vals[tr[0]] + l2 * vals[tr[1]] + l3 * vals[tr[2]];
                    samples.push((uv, mesh.quad_weights[q]));
                    q += 1;
                }
            }
        }
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mut thresholds = vec![0.0];
    {
        let mut cum = 0.0;
        let mut k = 0;
        for i in 1..m {
            let target = total * i as f64 / m as f64;
            while k < samples.len() && cum + samples[k].1 < target {
                cum += samples[k].1;
                k += 1;
            }
            let cand = samples[k.min(samples.len() - 1)].0;
            if cand > *thresholds.last().unwrap() + 1e-13 * u_max && cand < u_max * (1.0 - 1e-12)
            {
                thresholds.push(cand);
            }
        }
    }
    thresholds.push(u_max);
    let mt = thresholds.len() - 1;
    if mt + 1 < m / 2 {
        warnings.push(format!(
            "quantile grid collapsed to {} distinct levels (requested {m})",
            mt + 1
        ));
    }

    // full contributions via a difference array, partial by slicing
    let mut gamma_raw = vec![0.0; mt + 1];
    let mut energy_raw = vec![0.0; mt + 1];
    let mut full_mass_diff = vec![0.0; mt + 2];
    let mut full_energy_diff = vec![0.0; mt + 2];
    for e in 0..ne {
        let lo = thresholds.partition_point(|&t| t <= umin_e[e]);
        let hi = thresholds.partition_point(|&t| t < umax_e[e]);
        full_mass_diff[0] += mass_e[e];
        full_mass_diff[lo] -= mass_e[e];
        full_energy_diff[0] += mass_e[e] * grad2_e[e];
        full_energy_diff[lo] -= mass_e[e] * grad2_e[e];
        if lo >= hi {
            continue;
        }
        match &mesh.cells {
            Cells::Segments(segs) => {
                let s = &segs[e];
                let (x0, x1) = (mesh.nodes[s[0]][0], mesh.nodes[s[1]][0]);
                for i in lo..hi {
                    let sm = slice_segment(x0, x1, vals[s[0]], vals[s[1]], thresholds[i]);
                    gamma_raw[i] += sm;
                    energy_raw[i] += grad2_e[e] * sm;
                }
            }
            Cells::Triangles(tris) => {
                let tr = &tris[e];
                let p = [mesh.nodes[tr[0]], mesh.nodes[tr[1]], mesh.nodes[tr[2]]];
                let uv = [vals[tr[0]], vals[tr[1]], vals[tr[2]]];
                for i in lo..hi {
                    let sm = slice_triangle(&p, &uv, thresholds[i]);
                    gamma_raw[i] += sm;
                    energy_raw[i] += grad2_e[e] * sm;
                }
            }
        }
    }
    let mut acc_m = 0.0;
    let mut acc_en = 0.0;
    for i in 0..=mt {
        acc_m += full_mass_diff[i];
        acc_en += full_energy_diff[i];
        gamma_raw[i] += acc_m;
        energy_raw[i] += acc_en;
    }
    gamma_raw[mt] = 0.0;
    energy_raw[mt] = 0.0;

    // monotone projections; the distance is the advertised quality metric
    let (gamma, dist_g) = pava_decreasing(&gamma_raw);
    let (energy, dist_e) = pava_decreasing(&energy_raw);
    let pav_distance = (dist_g * dist_g + dist_e * dist_e).sqrt();

    // ℓ = −E′ from a monotone fit of the cumulative energy
    let fit = MonotoneCubic::new(&thresholds, &energy)?;
    let mut ell: Vec<f64> = thresholds.iter().map(|&t| (-fit.eval_deriv(t)).max(0.0)).collect();
    ell[mt] = 0.0;
    for i in 0..mt.saturating_sub(2) {
        if ell[i] <= 0.0 {
            warnings.push(format!(
                "ℓ vanished at interior threshold t = {:.6e}",
                thresholds[i]
            ));
            break;
        }
    }

    // connectedness probe of a mid superlevel set (warning only)
    if let Some(w) = disconnected_warning(mesh, &vals, thresholds[mt / 2]) {
        warnings.push(w);
    }

    Ok(LevelProfile {
        thresholds,
        gamma,
        ell,
        d: Vec::new(),
        u_max,
        pav_distance,
        endpoint_alpha: f64::NAN,
        warnings,
    })
}

/// Union-find probe: elements fully above `t`, glued along shared nodes.
fn disconnected_warning(mesh: &Mesh, vals: &[f64], t: f64) -> Option<String> {
    let mut parent: Vec<usize> = (0..mesh.num_nodes()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut any = false;
    let mut visit = |nodes: &[usize], parent: &mut Vec<usize>| {
        for w in nodes.windows(2) {
            let (a, b) = (find(parent, w[0]), find(parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    };
    match &mesh.cells {
        Cells::Segments(segs) => {
            for s in segs {
                if vals[s[0]] > t && vals[s[1]] > t {
                    visit(&[s[0], s[1]], &mut parent);
                    roots.push(s[0]);
                    any = true;
                }
            }
        }
        Cells::Triangles(tris) => {
            for tr in tris {
                if vals[tr[0]] > t && vals[tr[1]] > t && vals[tr[2]] > t {
                    visit(&[tr[0], tr[1], tr[2], tr[0]], &mut parent);
                    roots.push(tr[0]);
                    any = true;
                }
            }
        }
    }
    if !any {
        return None;
    }
    let mut reps: Vec<usize> = roots
        .iter()
        .map(|&r| find(&mut parent, r))
        .collect();
    reps.sort_unstable();
    reps.dedup();
    if reps.len() > 1 {
        Some(format!(
            "superlevel set at t = {t:.6e} appears disconnected ({} components)",
            reps.len()
        ))
    } else {
        None
    }
}

// ---------------------------------------------------------------------
// integrals over the threshold grid
// ---------------------------------------------------------------------

/// Integrate sampled values over `[t₀, u_max]`: nonuniform trapezoid over
/// the interior panels, one-sided power-law fit `c·(u_max − t)^α` on the
/// last panel (fitted from the trailing interior samples). Returns the
/// integral and the fitted exponent.
pub fn integrate_thresholds(t: &[f64], vals: &[f64]) -> (f64, f64) {
    let m = t.len() - 1;
    let mut acc = 0.0;
    for i in 0..m - 1 {
        acc += 0.5 * (vals[i] + vals[i + 1]) * (t[i + 1] - t[i]);
    }
    let u_max = t[m];
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| u_max - t[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| vals[i]).collect();
    let (panel, alpha) = power_law_panel(&gaps, &sample, u_max - t[m - 1]);
    (acc + panel, alpha)
}

/// Modified torsional rigidity `T^mod = ∫₀^{u_max} γ(K_t)²/ℓ(t) dt`.
pub fn modified_torsion(profile: &LevelProfile) -> Result<f64> {
    Ok(modified_torsion_with_alpha(profile)?.0)
}

fn modified_torsion_with_alpha(profile: &LevelProfile) -> Result<(f64, f64)> {
    let m = profile.m();
    let mut integrand = vec![0.0; m + 1];
    for i in 0..m {
        if profile.ell[i] <= 0.0 {
            return Err(Error::Validation(format!(
                "ℓ(t) = 0 at t = {:.6e}: modified torsion undefined",
                profile.thresholds[i]
            )));
        }
        integrand[i] = profile.gamma[i] * profile.gamma[i] / profile.ell[i];
    }
    Ok(integrate_thresholds(&profile.thresholds, &integrand))
}

/// Fill `D(t_i) = ∫_{t_i}^{u_max} γ²/ℓ ds` by cumulative quadrature from
/// the top; `D(0)` equals [`modified_torsion`] by construction.
pub fn distribution_d(profile: &LevelProfile) -> Result<LevelProfile> {
    let m = profile.m();
    let mut integrand = vec![0.0; m + 1];
    for i in 0..m {
        if profile.ell[i] <= 0.0 {
            return Err(Error::Validation(format!(
                "ℓ(t) = 0 at t = {:.6e}: distribution function undefined",
                profile.thresholds[i]
            )));
        }
        integrand[i] = profile.gamma[i] * profile.gamma[i] / profile.ell[i];
    }
    let t = &profile.thresholds;
    let u_max = t[m];
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| u_max - t[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| integrand[i]).collect();
    let (panel, alpha) = power_law_panel(&gaps, &sample, u_max - t[m - 1]);
    let mut d = vec![0.0; m + 1];
    d[m] = 0.0;
    d[m - 1] = panel;
    for i in (0..m - 1).rev() {
        d[i] = d[i + 1] + 0.5 * (integrand[i] + integrand[i + 1]) * (t[i + 1] - t[i]);
    }
    let mut out = profile.clone();
    out.d = d;
    out.endpoint_alpha = alpha;
    Ok(out)
}

/// Optimal profile `φ₀(t) = ∫₀^t γ(K_s)/ℓ(s) ds`, tabulated on the
/// threshold grid.
pub fn optimal_phi(profile: &LevelProfile) -> Result<Vec<f64>> {
    let m = profile.m();
    let mut integrand = vec![0.0; m + 1];
    for i in 0..m {
        if profile.ell[i] <= 0.0 {
            return Err(Error::Validation(format!(
                "ℓ(t) = 0 at t = {:.6e}: optimal profile undefined",
                profile.thresholds[i]
            )));
        }
        integrand[i] = profile.gamma[i] / profile.ell[i];
    }
    let t = &profile.thresholds;
    let mut phi = vec![0.0; m + 1];
    for i in 0..m - 1 {
        phi[i + 1] = phi[i] + 0.5 * (integrand[i] + integrand[i + 1]) * (t[i + 1] - t[i]);
    }
    // top panel: power-law fit of γ/ℓ (finite limit for nondegenerate maxima)
    let u_max = t[m];
    let k0 = m.saturating_sub(ENDPOINT_SAMPLES);
    let gaps: Vec<f64> = (k0..m).map(|i| u_max - t[i]).collect();
    let sample: Vec<f64> = (k0..m).map(|i| integrand[i]).collect();
    let (panel, _) = power_law_panel(&gaps, &sample, u_max - t[m - 1]);
    phi[m] = phi[m - 1] + panel;
    Ok(phi)
}

/// The torsion functional `J[w] = (∫ w dγ)² / ∫ |∇w|² dγ` for
/// `w = φ∘u`, with `φ` given by a monotone table on `[0, u_max]`.
pub fn torsion_functional(
    mesh: &Mesh,
    u: &ScalarField,
    phi_t: &[f64],
    phi_v: &[f64],
) -> Result<f64> {
    let phi = MonotoneCubic::new(phi_t, phi_v)?;
    let w = ScalarField::new(
        mesh,
        u.values.iter().map(|&v| phi.eval(v.max(0.0))).collect(),
    )?;
    let asm = crate::ou_solver::assemble(mesh)?;
    let x = asm.restrict(&w);
    let mass = crate::linalg::dot(&asm.load, &x);
    let energy = asm.stiffness.quadratic_form(&x);
    if energy <= 0.0 {
        return Err(Error::Domain("torsion functional of a constant field".into()));
    }
    Ok(mass * mass / energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, gaussian_measure, Domain};
    use crate::ou_solver::{solve_torsion, ScalarField};
    use crate::special::{gaussian_cdf, gaussian_density};

    fn interval_torsion_profile(h: f64, m: usize) -> (Mesh, ScalarField, LevelProfile, f64) {
        let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, h).unwrap();
        let t = solve_torsion(&mesh).unwrap();
        let p = level_profile(&mesh, &t.field, m).unwrap();
        (mesh, t.field, p, t.rigidity)
    }

    #[test]
    fn gamma_at_zero_is_domain_measure() {
        let (mesh, _, p, _) = interval_torsion_profile(0.02, 64);
        let exact = gaussian_measure(&mesh.domain).unwrap();
        assert!(
            (p.gamma[0] - exact).abs() < mesh.measure_tolerance.max(1e-9),
            "gamma(0) = {}, γ(K) = {exact}",
            p.gamma[0]
        );
        assert_eq!(*p.gamma.last().unwrap(), 0.0);
        assert_eq!(*p.ell.last().unwrap(), 0.0);
    }

    #[test]
    fn torsion_function_has_ell_equal_gamma() {
        // integrating Lv = −1 over K_t gives ℓ(t) = γ(K_t)
        let (_, _, p, _) = interval_torsion_profile(0.02, 64);
        let m = p.m();
        for i in 0..m - 2 {
            let rel = (p.ell[i] - p.gamma[i]).abs() / p.gamma[i];
            assert!(
                rel <= 0.02,
                "t = {:.4e}: ell = {:.6e}, gamma = {:.6e}, rel = {rel:.3e}",
                p.thresholds[i],
                p.ell[i],
                p.gamma[i]
            );
        }
    }

    #[test]
    fn closed_form_level_sets_of_linear_field() {
        // u = √2·x on HalfLine(0) (unit-mass eigenfunction shape):
        // γ(K_t) = 1 − Φ(t/√2), ℓ(t) = √2·φ(t/√2)
        let mesh = build_mesh(&Domain::HalfLine { s: 0.0 }, 0.005).unwrap();
        let u = ScalarField::from_fn(&mesh, |x, _| std::f64::consts::SQRT_2 * x);
        let p = level_profile(&mesh, &u, 128).unwrap();
        let m = p.m();
        for i in (0..m - 4).step_by(7) {
            let t = p.thresholds[i];
            let g_exact = 1.0 - gaussian_cdf(t / std::f64::consts::SQRT_2);
            let l_exact = std::f64::consts::SQRT_2 * gaussian_density(t / std::f64::consts::SQRT_2);
            assert!(
                (p.gamma[i] - g_exact).abs() / g_exact < 5e-3,
                "gamma at t = {t}: {} vs {g_exact}",
                p.gamma[i]
            );
            assert!(
                (p.ell[i] - l_exact).abs() / l_exact < 1e-2,
                "ell at t = {t}: {} vs {l_exact}",
                p.ell[i]
            );
        }
    }

    #[test]
    fn coarea_and_layer_cake_closures() {
        let (mesh, field, p, rigidity) = interval_torsion_profile(0.01, 128);
        // ∫|∇u|² dγ = ∫ ℓ dt
        let (ell_int, _) = integrate_thresholds(&p.thresholds, &p.ell);
        assert!(
            (ell_int - rigidity).abs() / rigidity < 0.01,
            "coarea closure: {ell_int} vs {rigidity}"
        );
        // ∫ u dγ = ∫ γ(K_t) dt
        let (gamma_int, _) = integrate_thresholds(&p.thresholds, &p.gamma);
        let direct = crate::geometry::integrate(&mesh, &field.values).unwrap();
        assert!(
            (gamma_int - direct).abs() / direct < 0.005,
            "layer cake: {gamma_int} vs {direct}"
        );
    }

    #[test]
    fn modified_torsion_of_torsion_function_is_rigidity() {
        let (_, _, p, rigidity) = interval_torsion_profile(0.01, 256);
        let tm = modified_torsion(&p).unwrap();
        assert!(
            (tm - rigidity).abs() / rigidity < 0.01,
            "T^mod = {tm}, T_γ = {rigidity}"
        );
    }

    #[test]
    fn modified_torsion_scaling_invariance() {
        let (mesh, field, p, _) = interval_torsion_profile(0.02, 64);
        let doubled = ScalarField::new(&mesh, field.values.iter().map(|v| 2.0 * v).collect())
            .unwrap();
        let p2 = level_profile(&mesh, &doubled, 64).unwrap();
        let a = modified_torsion(&p).unwrap();
        let b = modified_torsion(&p2).unwrap();
        assert!((a - b).abs() / a < 1e-9, "T^mod scaled: {a} vs {b}");
    }

    #[test]
    fn modified_torsion_bounded_by_rigidity() {
        // any admissible u: the supremum runs over a smaller class
        let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, 0.01).unwrap();
        let rigidity = solve_torsion(&mesh).unwrap().rigidity;
        for u in [
            ScalarField::from_fn(&mesh, |x, _| (1.0 - x * x).max(0.0)),
            ScalarField::from_fn(&mesh, |x, _| {
                (std::f64::consts::PI * (x + 1.0) / 2.0).sin().max(0.0)
            }),
        ] {
            let p = level_profile(&mesh, &u, 128).unwrap();
            let tm = modified_torsion(&p).unwrap();
            assert!(
                tm <= rigidity * (1.0 + 0.01),
                "T^mod = {tm} exceeds T_γ = {rigidity}"
            );
        }
    }

    #[test]
    fn distribution_monotone_and_anchored() {
        let (_, _, p, _) = interval_torsion_profile(0.02, 64);
        let p = distribution_d(&p).unwrap();
        let m = p.m();
        assert_eq!(p.d[m], 0.0);
        for w in p.d.windows(2) {
            assert!(w[0] > w[1], "D not strictly decreasing: {} -> {}", w[0], w[1]);
        }
        let tm = modified_torsion(&p).unwrap();
        assert!((p.d[0] - tm).abs() <= 1e-12 * tm, "D(0) = {}, T^mod = {tm}", p.d[0]);
        assert!(p.endpoint_alpha.is_finite());
    }

    #[test]
    fn distribution_matches_sublevel_rigidity() {
        // for u the torsion function, u − t is the torsion function of
        // K_t, so D(t) = T^mod(K_t; u − t) = T_γ(K_t)
        let (mesh, field, p, _) = interval_torsion_profile(1e-3, 256);
        let p = distribution_d(&p).unwrap();
        let k = p.m() / 2;
        let t = p.thresholds[k];
        // locate the crossing interval of {u > t} by linear interpolation
        let v = &field.values;
        let n = v.len();
        let mut a = f64::NAN;
        let mut b = f64::NAN;
        for i in 0..n - 1 {
            if (v[i] > t) != (v[i + 1] > t) {
                let x0 = mesh.nodes[i][0];
                let x1 = mesh.nodes[i + 1][0];
                let xc = x0 + (t - v[i]) / (v[i + 1] - v[i]) * (x1 - x0);
                if a.is_nan() {
                    a = xc;
                } else {
                    b = xc;
                }
            }
        }
        let sub = build_mesh(&Domain::Interval { a, b }, 1e-3).unwrap();
        let sub_rigidity = solve_torsion(&sub).unwrap().rigidity;
        let rel = (p.d[k] - sub_rigidity).abs() / sub_rigidity;
        assert!(rel < 0.01, "D({t:.4e}) = {}, T_γ(K_t) = {sub_rigidity}", p.d[k]);
    }

    #[test]
    fn optimal_phi_is_identity_for_torsion_function() {
        let (_, _, p, _) = interval_torsion_profile(0.01, 128);
        let phi = optimal_phi(&p).unwrap();
        let m = p.m();
        for i in (1..m).step_by(9) {
            let rel = (phi[i] - p.thresholds[i]).abs() / p.thresholds[i];
            assert!(
                rel < 0.02,
                "φ₀({:.4e}) = {:.4e}",
                p.thresholds[i],
                phi[i]
            );
        }
        for w in phi.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn optimal_phi_maximizes_the_torsion_functional() {
        let mesh = build_mesh(&Domain::Interval { a: -1.3, b: 0.9 }, 0.005).unwrap();
        let u = crate::ou_solver::solve_frequency(&mesh).unwrap().eigenfunction;
        let p = level_profile(&mesh, &u, 256).unwrap();
        let tm = modified_torsion(&p).unwrap();
        let phi0 = optimal_phi(&p).unwrap();
        let at_opt = torsion_functional(&mesh, &u, &p.thresholds, &phi0).unwrap();
        assert!(
            (at_opt - tm).abs() / tm < 0.02,
            "J[φ₀∘u] = {at_opt}, T^mod = {tm}"
        );
        // competitors with φ(0) = 0 stay below the supremum
        let u_max = p.u_max;
        let grid: Vec<f64> = (0..=64).map(|i| u_max * i as f64 / 64.0).collect();
        for pow in [0.5, 1.5, 2.0, 3.0, 0.25] {
            let vals: Vec<f64> = grid.iter().map(|&t| u_max * (t / u_max).powf(pow)).collect();
            let j = torsion_functional(&mesh, &u, &grid, &vals).unwrap();
            assert!(
                j <= tm * (1.0 + 0.01),
                "J[t^{pow}] = {j} exceeds T^mod = {tm}"
            );
        }
    }

    #[test]
    fn plateau_field_warns() {
        let mesh = build_mesh(&Domain::Interval { a: 0.0, b: 2.0 }, 0.01).unwrap();
        let u = ScalarField::from_fn(&mesh, |x, _| x.min(2.0 - x).min(0.4));
        let p = level_profile(&mesh, &u, 64).unwrap();
        assert!(
            p.warnings.iter().any(|w| w.contains("plateau")),
            "warnings: {:?}",
            p.warnings
        );
    }

    #[test]
    fn disconnected_superlevel_warns() {
        let mesh = build_mesh(&Domain::Interval { a: -2.0, b: 2.0 }, 0.01).unwrap();
        // two bumps separated by a valley
        let u = ScalarField::from_fn(&mesh, |x, _| {
            ((x + 1.0).cos() * 0.0 + (2.0 - x.abs()).max(0.0) * (x.abs() - 0.2).max(0.0)).max(0.0)
        });
        let p = level_profile(&mesh, &u, 64).unwrap();
        assert!(
            p.warnings.iter().any(|w| w.contains("disconnected")),
            "warnings: {:?}",
            p.warnings
        );
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mesh = build_mesh(&Domain::Interval { a: -1.0, b: 1.0 }, 0.1).unwrap();
        let neg = ScalarField::from_fn(&mesh, |x, _| -(1.0 - x * x));
        assert!(level_profile(&mesh, &neg, 64).is_err());
        let zero = ScalarField::new(&mesh, vec![0.0; mesh.num_nodes()]).unwrap();
        assert!(level_profile(&mesh, &zero, 64).is_err());
        let ok = ScalarField::from_fn(&mesh, |x, _| (1.0 - x * x).max(0.0));
        assert!(level_profile(&mesh, &ok, 4).is_err());
        let mut bad_boundary = ok.clone();
        bad_boundary.values[0] = 0.3;
        assert!(level_profile(&mesh, &bad_boundary, 64).is_err());
    }

    #[test]
    fn two_dimensional_profile_closures() {
        let square = Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        let mesh = build_mesh(&square, 0.03).unwrap();
        let tr = solve_torsion(&mesh).unwrap();
        let p = level_profile(&mesh, &tr.field, 128).unwrap();
        let exact = gaussian_measure(&square).unwrap();
        assert!((p.gamma[0] - exact).abs() < 2e-4, "gamma(0) = {}", p.gamma[0]);
        let (ell_int, _) = integrate_thresholds(&p.thresholds, &p.ell);
        assert!(
            (ell_int - tr.rigidity).abs() / tr.rigidity < 0.01,
            "2D coarea closure: {ell_int} vs {}",
            tr.rigidity
        );
        let tm = modified_torsion(&p).unwrap();
        assert!(
            (tm - tr.rigidity).abs() / tr.rigidity < 0.01,
            "2D T^mod = {tm} vs {}",
            tr.rigidity
        );
    }
}

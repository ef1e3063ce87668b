//! Galerkin discretization of the Ornstein-Uhlenbeck operator
//! `Lu = Δu − ⟨x, ∇u⟩` with Dirichlet boundary conditions.
//!
//! The weak form is the γ-weighted Dirichlet form
//! `a(u, w) = ∫ ⟨∇u, ∇w⟩ dγ`, so the drift term is never discretized and
//! the stiffness operator is symmetric by construction. The module solves
//! the torsion problem `Lv = −1` and the principal-frequency eigenproblem,
//! and evaluates the four equivalent torsion characterizations.

use crate::error::{Error, Result};
use crate::geometry::{Cells, Mesh, SEGMENT_RULE, TRIANGLE_RULE};
use crate::linalg::{cg_solve, dot, norm2, Csr, Tridiag};

/// Relative residual target for linear solves.
pub const LINEAR_TOL: f64 = 1e-12;
/// Eigenresidual target `‖A u − λ M u‖ / ‖M u‖`.
pub const EIGEN_TOL: f64 = 1e-10;
const MAX_EIGEN_ITER: usize = 400;

/// Nodal values of a piecewise-linear function on a mesh, zero on the
/// Dirichlet boundary for fields produced by solves.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Validation(format!(
                "field has {} values for a mesh with {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(ScalarField { values })
    }

    /// Sample a closed-form function at the nodes, forcing exact zeros on
    /// the boundary.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values: Vec<f64> = mesh.nodes.iter().map(|p| f(p[0], p[1])).collect();
        for &b in &mesh.boundary_nodes {
            values[b] = 0.0;
        }
        ScalarField { values }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }
}

/// Smallest generalized eigenpair of (stiffness, mass).
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalue: f64,
    pub eigenfunction: ScalarField,
    /// `‖A u − λ M u‖₂ / ‖M u‖₂` on the interior space.
    pub residual: f64,
    pub iterations: usize,
}

/// Symmetric positive-definite operator on the interior degrees of
/// freedom: tridiagonal (1D meshes) or sparse (2D meshes).
#[derive(Debug, Clone)]
pub enum Operator {
    Tri(Tridiag),
    Sparse(Csr),
}

impl Operator {
    pub fn n(&self) -> usize {
        match self {
            Operator::Tri(t) => t.n(),
            Operator::Sparse(a) => a.n,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Operator::Tri(t) => t.matvec(x, y),
            Operator::Sparse(a) => a.matvec(x, y),
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        match self {
            Operator::Tri(t) => t.quadratic_form(x),
            Operator::Sparse(a) => a.quadratic_form(x),
        }
    }

    /// Solve `self · x = b` to [`LINEAR_TOL`] relative residual.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Operator::Tri(t) => Ok(t.factor()?.solve(b)),
            Operator::Sparse(a) => cg_solve(a, b, LINEAR_TOL, 20 * a.n + 200),
        }
    }
}

/// Assembled Dirichlet problem: interior dof numbering, the two quadratic
/// forms, and the torsion load vector.
#[derive(Debug, Clone)]
pub struct Assembly {
    /// mesh node index per interior dof, in increasing node order
    pub interior_nodes: Vec<usize>,
    /// inverse map: node -> dof
    pub dof_of_node: Vec<Option<usize>>,
    pub stiffness: Operator,
    pub mass: Operator,
    /// `load_i = ∫ φ_i dγ` over interior basis functions
    pub load: Vec<f64>,
}

impl Assembly {
    pub fn n(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Restrict a nodal field to the interior dofs.
    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        self.interior_nodes.iter().map(|&n| field.values[n]).collect()
    }

    /// Extend an interior vector to a full nodal field (zero boundary).
    pub fn extend(&self, x: &[f64], num_nodes: usize) -> ScalarField {
        let mut values = vec![0.0; num_nodes];
        for (dof, &node) in self.interior_nodes.iter().enumerate() {
            values[node] = x[dof];
        }
        ScalarField { values }
    }
}

/// Constant gradient of the P1 interpolant on each element.
pub fn element_gradients(mesh: &Mesh, values: &[f64]) -> Result<Vec<[f64; 2]>> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::Validation("gradient: field/mesh size mismatch".into()));
    }
    let mut grads = Vec::with_capacity(mesh.num_elements());
    match &mesh.cells {
        Cells::Segments(segs) => {
            for s in segs {
                let dx = mesh.nodes[s[1]][0] - mesh.nodes[s[0]][0];
                grads.push([(values[s[1]] - values[s[0]]) / dx, 0.0]);
            }
        }
        Cells::Triangles(tris) => {
            for t in tris {
                let (a, b, c) = (mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                let (ua, ub, uc) = (values[t[0]], values[t[1]], values[t[2]]);
                let gx = ((ub - ua) * (c[1] - a[1]) - (uc - ua) * (b[1] - a[1])) / det;
                let gy = ((uc - ua) * (b[0] - a[0]) - (ub - ua) * (c[0] - a[0])) / det;
                grads.push([gx, gy]);
            }
        }
    }
    Ok(grads)
}

/// Assemble stiffness, mass, and torsion load on the interior space.
pub fn assemble(mesh: &Mesh) -> Result<Assembly> {
    let n_nodes = mesh.num_nodes();
    let mut dof_of_node: Vec<Option<usize>> = vec![None; n_nodes];
    let mut interior_nodes = Vec::new();
    for node in 0..n_nodes {
        if !mesh.is_boundary(node) {
            dof_of_node[node] = Some(interior_nodes.len());
            interior_nodes.push(node);
        }
    }
    let n = interior_nodes.len();
    if n == 0 {
        return Err(Error::Validation("mesh has no interior nodes".into()));
    }
    let mut load = vec![0.0; n];

    match &mesh.cells {
        Cells::Segments(segs) => {
            // tridiagonal assembly; interior dofs are consecutive nodes
            let mut a_diag = vec![0.0; n];
            let mut a_off = vec![0.0; n.saturating_sub(1)];
            let mut m_diag = vec![0.0; n];
            let mut m_off = vec![0.0; n.saturating_sub(1)];
            let mut q = 0;
            for s in segs {
                let (x0, x1) = (mesh.nodes[s[0]][0], mesh.nodes[s[1]][0]);
                let len = x1 - x0;
                let dofs = [dof_of_node[s[0]], dof_of_node[s[1]]];
                // element integrals of the Gaussian weight and shapes
                let mut w_total = 0.0;
                let mut m_loc = [[0.0f64; 2]; 2];
                let mut l_loc = [0.0f64; 2];
                for (t, _) in SEGMENT_RULE {
                    let w = mesh.quad_weights[q];
                    q += 1;
                    w_total += w;
                    let phi = [1.0 - t, t];
                    for i in 0..2 {
                        l_loc[i] += w * phi[i];
                        for j in 0..2 {
                            m_loc[i][j] += w * phi[i] * phi[j];
                        }
                    }
                }
                let k = w_total / (len * len);
                let k_loc = [[k, -k], [-k, k]];
                for i in 0..2 {
                    let Some(di) = dofs[i] else { continue };
                    load[di] += l_loc[i];
                    for j in 0..2 {
                        let Some(dj) = dofs[j] else { continue };
                        if di == dj {
                            a_diag[di] += k_loc[i][j];
                            m_diag[di] += m_loc[i][j];
                        } else if dj == di + 1 {
                            a_off[di] += k_loc[i][j];
                            m_off[di] += m_loc[i][j];
                        }
                    }
                }
            }
            Ok(Assembly {
                interior_nodes,
                dof_of_node,
                stiffness: Operator::Tri(Tridiag {
                    diag: a_diag,
                    off: a_off,
                }),
                mass: Operator::Tri(Tridiag {
                    diag: m_diag,
                    off: m_off,
                }),
                load,
            })
        }
        Cells::Triangles(tris) => {
            let mut a_trip: Vec<(usize, usize, f64)> = Vec::new();
            let mut m_trip: Vec<(usize, usize, f64)> = Vec::new();
            let mut q = 0;
            for t in tris {
                let (a, b, c) = (mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                // gradients of the three barycentric shape functions
                let grads = [
                    [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                    [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                    [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
                ];
                let dofs = [dof_of_node[t[0]], dof_of_node[t[1]], dof_of_node[t[2]]];
                let mut w_total = 0.0;
                let mut m_loc = [[0.0f64; 3]; 3];
                let mut l_loc = [0.0f64; 3];
                for (l1, l2, _) in TRIANGLE_RULE {
                    let w = mesh.quad_weights[q];
                    q += 1;
                    w_total += w;
                    let phi = [l1, l2, 1.0 - l1 - l2];
                    for i in 0..3 {
                        l_loc[i] += w * phi[i];
                        for j in 0..3 {
                            m_loc[i][j] += w * phi[i] * phi[j];
                        }
                    }
                }
                for i in 0..3 {
                    let Some(di) = dofs[i] else { continue };
                    load[di] += l_loc[i];
                    for j in 0..3 {
                        let Some(dj) = dofs[j] else { continue };
                        let k_ij =
                            w_total * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                        a_trip.push((di, dj, k_ij));
                        m_trip.push((di, dj, m_loc[i][j]));
                    }
                }
            }
            Ok(Assembly {
                interior_nodes,
                dof_of_node,
                stiffness: Operator::Sparse(Csr::from_triplets(n, &mut a_trip)),
                mass: Operator::Sparse(Csr::from_triplets(n, &mut m_trip)),
                load,
            })
        }
    }
}

/// Discrete torsion function and the Prop 2.3 diagnostics.
#[derive(Debug, Clone)]
pub struct TorsionResult {
    pub field: ScalarField,
    /// `∫ v dγ`
    pub rigidity: f64,
    /// `∫ |∇v|² dγ` — equals `rigidity` to round-off (Galerkin identity)
    pub dirichlet_energy: f64,
    /// smallest nodal value (discrete maximum-principle check)
    pub min_value: f64,
}

/// Solve the torsion problem `Lv = −1`, `v = 0` on the boundary.
pub fn solve_torsion(mesh: &Mesh) -> Result<TorsionResult> {
    let asm = assemble(mesh)?;
    solve_torsion_assembled(mesh, &asm)
}

/// As [`solve_torsion`] with a pre-built assembly.
pub fn solve_torsion_assembled(mesh: &Mesh, asm: &Assembly) -> Result<TorsionResult> {
    let x = asm.stiffness.solve(&asm.load)?;
    // Galerkin identities: ∫ v dγ = l·v and ∫|∇v|² dγ = v^T A v
    let rigidity = dot(&asm.load, &x);
    let dirichlet_energy = asm.stiffness.quadratic_form(&x);
    let min_value = x.iter().cloned().fold(f64::MAX, f64::min).min(0.0);
    if min_value < -1e-9 {
        log::warn!(
            "torsion solution violates the discrete maximum principle: min = {min_value:.3e}"
        );
    }
    Ok(TorsionResult {
        field: asm.extend(&x, mesh.num_nodes()),
        rigidity,
        dirichlet_energy,
        min_value,
    })
}

/// Torsional rigidity `T_γ(K) = ∫ v dγ` plus diagnostics.
pub fn torsional_rigidity(mesh: &Mesh) -> Result<TorsionResult> {
    solve_torsion(mesh)
}

/// Smallest Dirichlet eigenvalue of `−L` by inverse iteration with zero
/// shift; deterministic interior-indicator start vector.
pub fn solve_frequency(mesh: &Mesh) -> Result<SpectralResult> {
    let asm = assemble(mesh)?;
    solve_frequency_assembled(mesh, &asm)
}

/// As [`solve_frequency`] with a pre-built assembly.
pub fn solve_frequency_assembled(mesh: &Mesh, asm: &Assembly) -> Result<SpectralResult> {
    let n = asm.n();
    let mut x = vec![1.0f64; n];
    let mut mx = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::MAX;
    let mut residual = f64::MAX;
    let mut iterations = 0;
    for it in 1..=MAX_EIGEN_ITER {
        iterations = it;
        asm.mass.matvec(&x, &mut mx);
        let y = asm.stiffness.solve(&mx)?;
        // normalize in the mass norm: ∫ u² dγ = 1
        let m_norm = asm.mass.quadratic_form(&y).sqrt();
        if !(m_norm > 0.0 && m_norm.is_finite()) {
            return Err(Error::numerical(
                "frequency",
                "inverse iteration collapsed to the zero vector",
            ));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / m_norm;
        }
        let new_lambda = asm.stiffness.quadratic_form(&x);
        asm.stiffness.matvec(&x, &mut ax);
        asm.mass.matvec(&x, &mut mx);
        let mut r = 0.0;
        for i in 0..n {
            let d = ax[i] - new_lambda * mx[i];
            r += d * d;
        }
        residual = r.sqrt() / norm2(&mx).max(f64::MIN_POSITIVE);
        let converged = (new_lambda - lambda).abs() <= 1e-14 * new_lambda.abs()
            || residual <= EIGEN_TOL;
        lambda = new_lambda;
        if converged && residual <= EIGEN_TOL {
            break;
        }
    }
    if residual > EIGEN_TOL {
        return Err(Error::numerical(
            "frequency",
            format!(
                "inverse iteration stalled after {iterations} iterations: \
                 eigenvalue ≈ {lambda:.12e}, residual = {residual:.3e}"
            ),
        ));
    }
    // sign fix: first eigenfunction chosen nonnegative
    let sum: f64 = x.iter().sum();
    if sum < 0.0 {
        for xi in &mut x {
            *xi = -*xi;
        }
    }
    let min = x.iter().cloned().fold(f64::MAX, f64::min);
    if min < -1e-9 {
        log::warn!("first eigenfunction has negative nodal values: min = {min:.3e}");
    }
    Ok(SpectralResult {
        eigenvalue: lambda,
        eigenfunction: asm.extend(&x, mesh.num_nodes()),
        residual,
        iterations,
    })
}

/// Rayleigh quotient `∫|∇u|² dγ / ∫ u² dγ` of a nodal field that
/// vanishes on the boundary.
pub fn rayleigh_quotient(mesh: &Mesh, field: &ScalarField) -> Result<f64> {
    if field.values.len() != mesh.num_nodes() {
        return Err(Error::Validation("rayleigh: field/mesh size mismatch".into()));
    }
    for &b in &mesh.boundary_nodes {
        if field.values[b] != 0.0 {
            return Err(Error::Validation(
                "rayleigh quotient requires zero boundary values".into(),
            ));
        }
    }
    let asm = assemble(mesh)?;
    let x = asm.restrict(field);
    let denom = asm.mass.quadratic_form(&x);
    if denom <= 0.0 {
        return Err(Error::Domain(
            "rayleigh quotient of the zero field is undefined".into(),
        ));
    }
    Ok(asm.stiffness.quadratic_form(&x) / denom)
}

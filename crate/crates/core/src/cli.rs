//! Command-line interface: tables, solvers, the rearrangement, and the
//! verification suite.
//!
//! Exit codes: 0 = success / all PASS, 1 = an inequality verdict failed,
//! 2 = invalid configuration or domain description, 3 = numerical
//! failure (with a stage label). Verbosity via the `KJ_LOG` env var.

use crate::geometry::{build_mesh_with_override, Domain};
use crate::ou_solver::{solve_frequency, solve_torsion};
use crate::rearrange::{build_rearrangement, kj_pipeline, KJReport};
use crate::special::HalfSpaceTables;
use crate::tables::build_halfspace_tables;
use crate::{coarea, tables};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

/// Built-in verification battery: symmetric/asymmetric, bounded and
/// unbounded, 1D and 2D.
pub fn suite_domains() -> Vec<Domain> {
    vec![
        Domain::HalfLine { s: -0.5 },
        Domain::HalfLine { s: 0.7 },
        Domain::Interval { a: -1.0, b: 1.0 },
        Domain::Interval { a: -2.5, b: 0.3 },
        Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        },
        Domain::Polygon {
            vertices: vec![[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]],
        },
        Domain::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        Domain::Disk {
            center: [0.8, 0.0],
            radius: 0.6,
        },
        Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.5, 0.0], [0.0, 1.0]],
        },
    ]
}

/// Per-dimension default mesh size.
fn default_h(domain: &Domain) -> f64 {
    match domain.dimension() {
        1 => 1e-3,
        _ => 0.02,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "gauss-kj",
    about = "Gaussian Kohler-Jobin rearrangement: torsion, principal frequency, \
             and the half-space comparison theorem at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Domain description: path to a JSON file, or inline JSON
    /// {"kind": "interval"|"halfline"|"polygon"|"disk", ...}
    #[arg(long)]
    pub domain: String,
    /// Mesh size (default: 1e-3 in 1D, 0.02 in 2D)
    #[arg(long)]
    pub h: Option<f64>,
    /// Level count for the co-area grids
    #[arg(long, default_value_t = 256)]
    pub m: usize,
    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed recorded in reports and used by any randomized checks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the convexity validation (results carry a hypothesis marker)
    #[arg(long)]
    pub override_convexity: bool,
    /// Relative tolerance for equality verdicts
    #[arg(long, default_value_t = crate::rearrange::DEFAULT_TOL_EQUALITY)]
    pub tol_equality: f64,
    /// One-sided slack for inequality verdicts
    #[arg(long, default_value_t = crate::rearrange::DEFAULT_TOL_INEQUALITY)]
    pub tol_inequality: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the half-space tables s ↦ T(s), Λ(H_s) as CSV
    HalfspaceTable {
        #[arg(long, default_value_t = -4.0)]
        s_min: f64,
        #[arg(long, default_value_t = 4.0)]
        s_max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Mesh size for the 1D eigensolves
        #[arg(long, default_value_t = tables::DEFAULT_H)]
        h: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the torsion problem Lv = −1 and report T_γ(K)
    Torsion {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the principal-frequency eigenproblem
    Frequency {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the rearranged profile (τ, f, D⁻¹)
    Rearrange {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full Theorem 1.1 pipeline on one domain
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the built-in convex battery
    Suite {
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 256)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bounded worker count for the per-domain parallel runs
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = crate::rearrange::DEFAULT_TOL_EQUALITY)]
        tol_equality: f64,
        #[arg(long, default_value_t = crate::rearrange::DEFAULT_TOL_INEQUALITY)]
        tol_inequality: f64,
    },
}

/// Typed failure carrying the process exit code.
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

type CliResult<T> = std::result::Result<T, CliFailure>;

fn config_error(message: impl Into<String>) -> CliFailure {
    CliFailure {
        code: 2,
        message: message.into(),
    }
}

fn numerical_error(err: crate::Error) -> CliFailure {
    CliFailure {
        code: 3,
        message: err.to_string(),
    }
}

fn parse_domain(spec: &str, allow_nonconvex: bool) -> CliResult<Domain> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| config_error(format!("cannot read domain file {spec}: {e}")))?
    };
    let domain: Domain = serde_json::from_str(&text).map_err(|e| {
        config_error(format!(
            "invalid domain JSON ({e}); expected \
             {{\"kind\": \"interval\"|\"halfline\"|\"polygon\"|\"disk\", ...}} with fields \
             a,b | s | vertices | center,radius per kind"
        ))
    })?;
    domain
        .validate(allow_nonconvex)
        .map_err(|e| config_error(e.to_string()))?;
    Ok(domain)
}

fn validate_common(common: &CommonArgs) -> CliResult<()> {
    if let Some(h) = common.h {
        if !(h > 0.0) {
            return Err(config_error(format!("h must be positive, got {h}")));
        }
    }
    if common.m < 16 {
        return Err(config_error(format!("m must be >= 16, got {}", common.m)));
    }
    if !(common.format == Format::Json || common.format == Format::Csv) {
        return Err(config_error("format must be csv or json"));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| config_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn timestamp() -> String {
    let d = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:09}", d.as_secs(), d.subsec_nanos())
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    timestamp: String,
    seed: u64,
    #[serde(flatten)]
    payload: T,
}

fn to_json<T: Serialize>(seed: u64, payload: T) -> CliResult<String> {
    serde_json::to_string_pretty(&Envelope {
        timestamp: timestamp(),
        seed,
        payload,
    })
    .map_err(|e| config_error(format!("serialization failed: {e}")))
}

#[derive(Serialize)]
struct TorsionReport {
    domain: Domain,
    h: f64,
    rigidity: f64,
    dirichlet_energy: f64,
    relative_gap: f64,
    min_value: f64,
    hypothesis_satisfied: bool,
}

#[derive(Serialize)]
struct FrequencyReport {
    domain: Domain,
    h: f64,
    eigenvalue: f64,
    residual: f64,
    iterations: usize,
    hypothesis_satisfied: bool,
}

#[derive(Serialize)]
struct RearrangeReport {
    domain: Domain,
    h: f64,
    m: usize,
    t0: f64,
    s_dagger: f64,
    f_max: f64,
    endpoint_alpha: f64,
    pav_distance: f64,
    warnings: Vec<String>,
}

fn nodal_csv(mesh: &crate::geometry::Mesh, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (p, v) in mesh.nodes.iter().zip(values) {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p[0], p[1], v));
    }
    out
}

fn chain_csv(report: &KJReport) -> String {
    let mut out = String::from("link,lhs,rhs,tol,pass\n");
    for c in &report.chain {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{}\n",
            c.name, c.lhs, c.rhs, c.tol, c.pass
        ));
    }
    out
}

fn suite_csv(reports: &[KJReport]) -> String {
    let mut out = String::from(
        "domain,lambda_k,torsion_k,t0,s_dagger,s_h,rayleigh_dagger,lambda_k_dagger,lambda_h,pass\n",
    );
    for r in reports {
        let name = serde_json::to_string(&r.domain).unwrap_or_default();
        out.push_str(&format!(
            "{:?},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            name,
            r.lambda_k,
            r.torsion_k,
            r.t0,
            r.s_dagger,
            r.s_h,
            r.rayleigh_dagger,
            r.lambda_k_dagger,
            r.lambda_h,
            r.pass
        ));
    }
    out
}

fn shared_tables() -> CliResult<HalfSpaceTables> {
    build_halfspace_tables(
        tables::DEFAULT_S_MIN,
        tables::DEFAULT_S_MAX,
        tables::DEFAULT_STEP,
        tables::DEFAULT_H,
    )
    .map_err(numerical_error)
}

/// Execute a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(all_pass) => {
            if all_pass {
                0
            } else {
                1
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::HalfspaceTable {
            s_min,
            s_max,
            step,
            h,
            out,
        } => {
            let t = build_halfspace_tables(s_min, s_max, step, h).map_err(numerical_error)?;
            emit(&out, &t.to_csv())?;
            Ok(true)
        }
        Command::Torsion { common } => {
            validate_common(&common)?;
            let domain = parse_domain(&common.domain, common.override_convexity)?;
            let h = common.h.unwrap_or_else(|| default_h(&domain));
            let mesh = build_mesh_with_override(&domain, h, common.override_convexity)
                .map_err(|e| config_error(e.to_string()))?;
            let t = solve_torsion(&mesh).map_err(numerical_error)?;
            let content = match common.format {
                Format::Json => to_json(
                    common.seed,
                    TorsionReport {
                        domain,
                        h,
                        rigidity: t.rigidity,
                        dirichlet_energy: t.dirichlet_energy,
                        relative_gap: (t.rigidity - t.dirichlet_energy).abs() / t.rigidity,
                        min_value: t.min_value,
                        hypothesis_satisfied: mesh.hypothesis_satisfied,
                    },
                )?,
                Format::Csv => nodal_csv(&mesh, &t.field.values),
            };
            emit(&common.out, &content)?;
            Ok(true)
        }
        Command::Frequency { common } => {
            validate_common(&common)?;
            let domain = parse_domain(&common.domain, common.override_convexity)?;
            let h = common.h.unwrap_or_else(|| default_h(&domain));
            let mesh = build_mesh_with_override(&domain, h, common.override_convexity)
                .map_err(|e| config_error(e.to_string()))?;
            let r = solve_frequency(&mesh).map_err(numerical_error)?;
            let content = match common.format {
                Format::Json => to_json(
                    common.seed,
                    FrequencyReport {
                        domain,
                        h,
                        eigenvalue: r.eigenvalue,
                        residual: r.residual,
                        iterations: r.iterations,
                        hypothesis_satisfied: mesh.hypothesis_satisfied,
                    },
                )?,
                Format::Csv => nodal_csv(&mesh, &r.eigenfunction.values),
            };
            emit(&common.out, &content)?;
            Ok(true)
        }
        Command::Rearrange { common } => {
            validate_common(&common)?;
            let domain = parse_domain(&common.domain, common.override_convexity)?;
            let h = common.h.unwrap_or_else(|| default_h(&domain));
            let mesh = build_mesh_with_override(&domain, h, common.override_convexity)
                .map_err(|e| config_error(e.to_string()))?;
            let spectral = solve_frequency(&mesh).map_err(numerical_error)?;
            let profile = coarea::level_profile(&mesh, &spectral.eigenfunction, common.m)
                .map_err(numerical_error)?;
            let profile = coarea::distribution_d(&profile).map_err(numerical_error)?;
            let t = shared_tables()?;
            let rp = build_rearrangement(&profile, &t).map_err(numerical_error)?;
            let content = match common.format {
                Format::Json => to_json(
                    common.seed,
                    RearrangeReport {
                        domain,
                        h,
                        m: common.m,
                        t0: rp.t0,
                        s_dagger: rp.s_dagger,
                        f_max: rp.f_max(),
                        endpoint_alpha: rp.endpoint_alpha,
                        pav_distance: profile.pav_distance,
                        warnings: profile.warnings.clone(),
                    },
                )?,
                Format::Csv => rp.to_csv(),
            };
            emit(&common.out, &content)?;
            Ok(true)
        }
        Command::Verify { common } => {
            validate_common(&common)?;
            let domain = parse_domain(&common.domain, common.override_convexity)?;
            let h = common.h.unwrap_or_else(|| default_h(&domain));
            let t = shared_tables()?;
            let report = kj_pipeline(
                &domain,
                h,
                common.m,
                &t,
                common.tol_equality,
                common.tol_inequality,
                common.override_convexity,
            )
            .map_err(numerical_error)?;
            let pass = report.pass;
            let content = match common.format {
                Format::Json => to_json(common.seed, &report)?,
                Format::Csv => chain_csv(&report),
            };
            emit(&common.out, &content)?;
            Ok(pass)
        }
        Command::Suite {
            h,
            m,
            out,
            format,
            seed,
            workers,
            tol_equality,
            tol_inequality,
        } => {
            if m < 16 {
                return Err(config_error(format!("m must be >= 16, got {m}")));
            }
            let t = shared_tables()?;
            let domains = suite_domains();
            let run_one = |domain: &Domain| {
                kj_pipeline(
                    domain,
                    h.unwrap_or_else(|| default_h(domain)),
                    m,
                    &t,
                    tol_equality,
                    tol_inequality,
                    false,
                )
            };
            let reports: Vec<KJReport> = match workers {
                Some(w) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(w.max(1))
                        .build()
                        .map_err(|e| config_error(format!("worker pool: {e}")))?;
                    pool.install(|| {
                        use rayon::prelude::*;
                        domains.par_iter().map(run_one).collect()
                    })
                }
                None => {
                    use rayon::prelude::*;
                    domains.par_iter().map(run_one).collect()
                }
            }
            .into_iter()
            .collect::<crate::Result<Vec<_>>>()
            .map_err(numerical_error)?;
            let pass = reports.iter().all(|r| r.pass);
            #[derive(Serialize)]
            struct SuitePayload {
                pass: bool,
                reports: Vec<KJReport>,
            }
            let content = match format {
                Format::Json => to_json(seed, SuitePayload { pass, reports })?,
                Format::Csv => suite_csv(&reports),
            };
            emit(&out, &content)?;
            Ok(pass)
        }
    }
}

/// Parse argv, initialize logging from `KJ_LOG`, and run.
pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("KJ_LOG", "warn"))
        .try_init();
    let cli = Cli::parse();
    run(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_has_nine_mixed_domains() {
        let d = suite_domains();
        assert_eq!(d.len(), 9);
        assert!(d.iter().any(|x| matches!(x, Domain::HalfLine { .. })));
        assert!(d.iter().any(|x| matches!(x, Domain::Disk { .. })));
        assert_eq!(d.iter().filter(|x| x.dimension() == 1).count(), 4);
    }

    #[test]
    fn inline_domain_parses_and_validates() {
        let d = parse_domain(r#"{"kind": "interval", "a": -1.0, "b": 1.0}"#, false).unwrap();
        assert!(matches!(d, Domain::Interval { .. }));
        // invalid: a >= b
        assert!(parse_domain(r#"{"kind": "interval", "a": 1.0, "b": 1.0}"#, false).is_err());
        // invalid JSON shape
        let err = parse_domain(r#"{"kind": "oval", "r": 1.0}"#, false).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("kind"));
    }

    #[test]
    fn nonconvex_requires_override() {
        let reflex = r#"{"kind": "polygon",
            "vertices": [[0,0],[2,0],[1,0.5],[1,2]]}"#;
        assert!(parse_domain(reflex, false).is_err());
        assert!(parse_domain(reflex, true).is_ok());
    }

    #[test]
    fn m_floor_enforced() {
        let common = CommonArgs {
            domain: r#"{"kind": "halfline", "s": 0.0}"#.into(),
            h: None,
            m: 8,
            out: None,
            format: Format::Json,
            seed: 0,
            override_convexity: false,
            tol_equality: 0.01,
            tol_inequality: 1e-6,
        };
        assert_eq!(validate_common(&common).unwrap_err().code, 2);
    }
}

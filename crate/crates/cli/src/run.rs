//! Command implementations: each builds its domain objects from the config,
//! runs the computation, and writes figure-ready CSV plus a JSON summary.
//! All files carry the config hash and seed and are written atomically, so
//! identical config+seed reruns are byte-identical.

use crate::config::{ConfigError, ScenarioConfig};
use impactlab_core::friction::{analyze, limit_points, rho_local};
use impactlab_core::generator::{gen_equilibrium, gen_nonequilibrium, gen_volumes};
use impactlab_core::oracle;
use impactlab_core::path::ImpactPath;
use impactlab_core::relaxation::{fair_pricing, relax_paths, NoiseSpec};
use impactlab_core::rng::stream;
use impactlab_core::schedule::{MarketVolumes, OrderSchedule};
use impactlab_core::sizes::{hill_estimate, moment_exponent, size_bracket_probability};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "io failure: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numerical(e.to_string())
}

/// Context shared by every command of one scenario run.
pub struct RunContext {
    pub config: ScenarioConfig,
    pub config_sha256: String,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// 17 significant digits: enough for bit-exact f64 round-trips.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl RunContext {
    fn csv_header(&self, command: &str) -> String {
        format!(
            "# impactlab {command}\n# config_sha256: {}\n# seed: {}\n",
            self.config_sha256, self.seed
        )
    }

    fn write_csv(&self, name: &str, command: &str, body: &str) -> Result<(), RunError> {
        let text = format!("{}{}", self.csv_header(command), body);
        write_atomic(&self.out_dir.join(name), text.as_bytes())
    }

    fn write_summary<T: Serialize>(&self, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::Numerical(format!("summary serialization: {e}")))?;
        text.push('\n');
        write_atomic(&self.out_dir.join("summary.json"), text.as_bytes())
    }
}

#[derive(Serialize)]
struct PathSummary {
    command: &'static str,
    config_sha256: String,
    seed: u64,
    n: usize,
    rho: f64,
    /// Estimators are null for paths shorter than the tail-analysis floor.
    rho_hat_friction: Option<f64>,
    rho_hat_loglog: Option<f64>,
    rho_hat_local: Option<f64>,
    limit_estimate: f64,
    tail_liminf: f64,
    tail_limsup: f64,
    converged: bool,
    divergent: bool,
    final_impact: f64,
    final_avg_impact: f64,
    final_friction: f64,
}

fn path_csv(schedule: &OrderSchedule, vols: &MarketVolumes, path: &ImpactPath) -> String {
    let mut body = String::from("n,tau,Q,S,V,I,avg_I,R\n");
    for k in 0..path.len() {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            k + 1,
            fmt(schedule.times()[k]),
            fmt(schedule.volumes()[k]),
            fmt(path.cumulative_sizes()[k]),
            fmt(vols.volumes()[k]),
            fmt(path.impacts()[k]),
            fmt(path.avg_impacts()[k]),
            fmt(path.friction()[k]),
        );
    }
    body
}

/// `simulate`: equilibrium scenario -> path.csv + summary.json.
pub fn cmd_simulate(ctx: &RunContext) -> Result<(), RunError> {
    let schedule_cfg = ctx.config.schedule()?;
    let spec = schedule_cfg.to_spec(ctx.seed)?;
    let kernel = ctx.config.kernel()?.to_kernel()?;
    let (schedule, path) = gen_equilibrium(&spec, &kernel).map_err(numerical)?;
    let vols = gen_volumes(
        &schedule,
        schedule_cfg.participation,
        if schedule_cfg.participation == 1.0 {
            0.0
        } else {
            schedule_cfg.volume_noise
        },
        ctx.seed,
    )
    .map_err(numerical)?;
    ctx.write_csv("path.csv", "simulate", &path_csv(&schedule, &vols, &path))?;
    if path.len() >= 100 {
        let analysis = analyze(&path).map_err(numerical)?;
        ctx.write_summary(&PathSummary {
            command: "simulate",
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            n: path.len(),
            rho: kernel.rho(),
            rho_hat_friction: Some(analysis.rho_hat_friction),
            rho_hat_loglog: Some(analysis.rho_hat_loglog),
            rho_hat_local: Some(analysis.rho_hat_local),
            limit_estimate: analysis.limit_estimate,
            tail_liminf: analysis.tail_liminf,
            tail_limsup: analysis.tail_limsup,
            converged: analysis.converged,
            divergent: analysis.divergent,
            final_impact: path.final_impact(),
            final_avg_impact: path.final_avg_impact(),
            final_friction: path.final_friction(),
        })
    } else {
        let lp = limit_points(&path, 0.2, 0.01);
        ctx.write_summary(&PathSummary {
            command: "simulate",
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
            n: path.len(),
            rho: kernel.rho(),
            rho_hat_friction: None,
            rho_hat_loglog: None,
            rho_hat_local: None,
            limit_estimate: path.final_friction(),
            tail_liminf: lp.liminf,
            tail_limsup: lp.limsup,
            converged: false,
            divergent: false,
            final_impact: path.final_impact(),
            final_avg_impact: path.final_avg_impact(),
            final_friction: path.final_friction(),
        })
    }
}

#[derive(Serialize)]
struct NonEqSummary {
    command: &'static str,
    config_sha256: String,
    seed: u64,
    n: usize,
    rho1: f64,
    rho2: f64,
    liminf: f64,
    limsup: f64,
    max_gap: f64,
    limit_low_target: f64,
    limit_high_target: f64,
    equilibrium: bool,
    size_impact_nondecreasing: bool,
}

/// `noneq`: sawtooth scenario -> path.csv + summary.json with the
/// limit-point report.
pub fn cmd_noneq(ctx: &RunContext) -> Result<(), RunError> {
    let schedule_cfg = ctx.config.schedule()?;
    let spec = schedule_cfg.to_spec(ctx.seed)?;
    let neq_cfg = ctx
        .config
        .noneq
        .as_ref()
        .ok_or(ConfigError::MissingSection("noneq"))?;
    let neq = neq_cfg.to_spec()?;
    let (schedule, path) = gen_nonequilibrium(&spec, &neq).map_err(numerical)?;
    let vols = gen_volumes(&schedule, 1.0, 0.0, ctx.seed).map_err(numerical)?;
    // the whole point is the tail; cover two block cycles
    let lp = limit_points(&path, 0.99, 0.01);
    let s = path.cumulative_sizes();
    let i = path.impacts();
    let nondecreasing = (1..path.len()).all(|k| s[k] * i[k] >= s[k - 1] * i[k - 1]);
    let equilibrium = neq.rho1 == neq.rho2 || lp.limsup - lp.liminf < 0.02;
    ctx.write_csv("path.csv", "noneq", &path_csv(&schedule, &vols, &path))?;
    ctx.write_summary(&NonEqSummary {
        command: "noneq",
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        n: path.len(),
        rho1: neq.rho1,
        rho2: neq.rho2,
        liminf: lp.liminf,
        limsup: lp.limsup,
        max_gap: lp.max_gap,
        limit_low_target: 1.0 / (1.0 + neq.rho2),
        limit_high_target: 1.0 / (1.0 + neq.rho1),
        equilibrium,
        size_impact_nondecreasing: nondecreasing,
    })
}

#[derive(Serialize)]
struct LawMoments {
    law: String,
    mean_rho: f64,
    mean_inv_one_plus_rho: f64,
    zero_limit: f64,
}

#[derive(Serialize)]
struct PsiSummary {
    command: &'static str,
    config_sha256: String,
    seed: u64,
    mc_samples: usize,
    laws: Vec<LawMoments>,
}

/// `psi`: averaged impact function grids -> psi.csv + summary.json. The
/// `"all"` variant emits the three canonical laws (Dirac(1/2), uniform on
/// [0,1], exponential(1)) side by side in one file.
pub fn cmd_psi(ctx: &RunContext) -> Result<(), RunError> {
    let law_cfg = ctx
        .config
        .rho_law
        .as_ref()
        .ok_or(ConfigError::MissingSection("rho_law"))?;
    let laws = law_cfg.to_laws()?;
    let grid = law_cfg.x_grid.max(2);
    let mut body = String::from("law,x,psi,psi_mc,std_err\n");
    let mut moments = Vec::with_capacity(laws.len());
    for (li, law) in laws.iter().enumerate() {
        let label = law_label(law);
        for gi in 0..grid {
            let x = 0.01 + (1.0 - 0.01) * gi as f64 / (grid - 1) as f64;
            let exact = law.psi(x).map_err(numerical)?;
            let (mc, se) = law
                .psi_mc(
                    x,
                    law_cfg.mc_samples,
                    ctx.seed.wrapping_add((li * grid + gi) as u64),
                )
                .map_err(numerical)?;
            let _ = writeln!(
                body,
                "{label},{},{},{},{}",
                fmt(x),
                fmt(exact),
                fmt(mc),
                fmt(se)
            );
        }
        moments.push(LawMoments {
            law: label,
            mean_rho: law.mean().map_err(numerical)?,
            mean_inv_one_plus_rho: law.mean_inv_one_plus_rho().map_err(numerical)?,
            zero_limit: law.zero_limit(),
        });
    }
    ctx.write_csv("psi.csv", "psi", &body)?;
    ctx.write_summary(&PsiSummary {
        command: "psi",
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        mc_samples: law_cfg.mc_samples,
        laws: moments,
    })
}

fn law_label(law: &impactlab_core::averaging::RhoLaw) -> String {
    use impactlab_core::averaging::RhoLaw;
    match law {
        RhoLaw::Dirac(l) => format!("dirac({l})"),
        RhoLaw::Uniform01 => "uniform01".into(),
        RhoLaw::Exponential(l) => format!("exponential({l})"),
        RhoLaw::Empirical(s) => format!("empirical({} samples)", s.len()),
    }
}

#[derive(Serialize)]
struct MomentVerdict {
    nu: f64,
    fitted_exponent: f64,
    expected_exponent: f64,
    finite: bool,
}

#[derive(Serialize)]
struct SizesSummary {
    command: &'static str,
    config_sha256: String,
    seed: u64,
    beta: f64,
    hill_estimate: f64,
    bracket_burn_in: Option<u64>,
    moments: Vec<MomentVerdict>,
}

/// `sizes`: hazard/bracket grid -> sizes.csv + summary.json with the Hill
/// estimate and moment verdicts.
pub fn cmd_sizes(ctx: &RunContext) -> Result<(), RunError> {
    let cfg = ctx
        .config
        .sizes
        .as_ref()
        .ok_or(ConfigError::MissingSection("sizes"))?;
    let (length, size) = cfg.to_laws()?;
    let mut body =
        String::from("n,hazard_ratio,hazard_target,bracket_probability,lower_bound,upper_bound\n");
    let grid: Vec<u64> = (0..18)
        .map(|k| 10f64.powf(1.0 + k as f64 / 6.0) as u64)
        .collect();
    let mut burn_in = None;
    for &n in &grid {
        let hazard = length.hazard_ratio(n);
        let target = (1.0 + 1.0 / n as f64).powf(-length.beta());
        let chk = size_bracket_probability(&length, &size, n);
        if chk.lower_ok && chk.upper_ok {
            burn_in.get_or_insert(n);
        } else {
            burn_in = None;
        }
        let _ = writeln!(
            body,
            "{n},{},{},{},{},{}",
            fmt(hazard),
            fmt(target),
            fmt(chk.probability),
            fmt(chk.lower_bound),
            fmt(chk.upper_bound)
        );
    }
    ctx.write_csv("sizes.csv", "sizes", &body)?;

    let mut rng = stream(ctx.seed, 4);
    let samples: Vec<f64> = (0..cfg.hill_samples)
        .map(|_| length.sample(&mut rng) as f64)
        .collect();
    let hill = hill_estimate(&samples, 0.01);
    let moments = cfg
        .nu_grid()
        .into_iter()
        .map(|nu| {
            let me = moment_exponent(nu, &length, &size, 1_000, 1_000_000);
            MomentVerdict {
                nu,
                fitted_exponent: me.fitted,
                expected_exponent: me.expected,
                finite: me.finite,
            }
        })
        .collect();
    ctx.write_summary(&SizesSummary {
        command: "sizes",
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        beta: cfg.beta,
        hill_estimate: hill,
        bracket_burn_in: burn_in,
        moments,
    })
}

#[derive(Serialize)]
struct RelaxSummary {
    command: &'static str,
    config_sha256: String,
    seed: u64,
    alpha: f64,
    final_friction: f64,
    fair_pricing_time: f64,
    residual_at_fair_point: f64,
    residual_at_inf: f64,
    identity_error: f64,
    fair_pricing_cap: f64,
    sup_deviation: f64,
}

/// `relax`: relaxation curve of an equilibrium path -> relax.csv +
/// summary.json with the fair-pricing row.
pub fn cmd_relax(ctx: &RunContext) -> Result<(), RunError> {
    let schedule_cfg = ctx.config.schedule()?;
    let spec = schedule_cfg.to_spec(ctx.seed)?;
    let kernel = ctx.config.kernel()?.to_kernel()?;
    let relax_cfg = ctx
        .config
        .relaxation
        .as_ref()
        .ok_or(ConfigError::MissingSection("relaxation"))?;
    let profile = relax_cfg.to_profile()?;
    let (_, path) = gen_equilibrium(&spec, &kernel).map_err(numerical)?;
    let fp = fair_pricing(&path, &profile).map_err(numerical)?;
    let noise = NoiseSpec {
        std_scale: relax_cfg.std_scale,
        seed: ctx.seed,
    };
    let curve = relax_paths(
        &path,
        &profile,
        &noise,
        relax_cfg.horizon,
        relax_cfg.grid_points,
        relax_cfg.paths,
    )
    .map_err(numerical)?;
    let mut body = String::from("t,G,G_hat\n");
    for k in 0..curve.times.len() {
        let _ = writeln!(
            body,
            "{},{},{}",
            fmt(curve.times[k]),
            fmt(curve.g[k]),
            fmt(curve.g_hat[k])
        );
    }
    ctx.write_csv("relax.csv", "relax", &body)?;
    let identity_error =
        (fp.residual_at_fair_point - path.final_avg_impact()).abs() / path.final_avg_impact();
    let sup_deviation = curve
        .g
        .iter()
        .zip(&curve.g_hat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ctx.write_summary(&RelaxSummary {
        command: "relax",
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        alpha: profile.alpha(),
        final_friction: path.final_friction(),
        fair_pricing_time: fp.time,
        residual_at_fair_point: fp.residual_at_fair_point,
        residual_at_inf: fp.residual_at_inf,
        identity_error,
        fair_pricing_cap: profile.inverse(0.5).map_err(numerical)?,
        sup_deviation,
    })
}

/// `selftest`: run the oracle reference checks; true iff all pass.
pub fn cmd_selftest() -> bool {
    let results = oracle::selftest();
    let mut all = true;
    for r in &results {
        println!(
            "[{}] {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all &= r.passed;
    }
    // the diagnostics double as production cross-checks: friction == Z
    let spec = impactlab_core::generator::ScenarioSpec::uniform(5_000, 1);
    let kernel = impactlab_core::kernel::ImpactKernel::power(0.5);
    match gen_equilibrium(&spec, &kernel) {
        Ok((schedule, path)) => {
            let z = oracle::brute_force_z(schedule.volumes(), path.impacts());
            let worst = path
                .friction()
                .iter()
                .zip(&z)
                .map(|(r, zi)| (r - zi).abs() / zi.abs())
                .fold(0.0, f64::max);
            let ok = worst <= 1e-12;
            println!(
                "[{}] friction equals brute-force Z: max relative gap {worst:.3e}",
                if ok { "PASS" } else { "FAIL" }
            );
            all &= ok;
        }
        Err(e) => {
            println!("[FAIL] friction equals brute-force Z: {e}");
            all = false;
        }
    }
    // local estimator sequence stays finite on an equilibrium path
    if let Ok((_, path)) = gen_equilibrium(
        &impactlab_core::generator::ScenarioSpec::uniform(2_000, 2),
        &impactlab_core::kernel::ImpactKernel::power(1.0),
    ) {
        let local = rho_local(&path);
        let ok = local.iter().all(|v| v.is_finite());
        println!(
            "[{}] local estimator finite along equilibrium paths",
            if ok { "PASS" } else { "FAIL" }
        );
        all &= ok;
    }
    all
}

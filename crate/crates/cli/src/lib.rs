//! Command-line front end: load a scenario file, run one analysis, write
//! CSV/JSON artifacts.

pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dtd_mjls::mjls::assemble_lti;
use dtd_mjls::moments::{init_moments, step_moments, steady_state, SteadyStateMethod};
use dtd_mjls::sim::{monte_carlo_error, GENERATOR};
use dtd_mjls::spectral::{alpha_sweep, default_grid, spectrum_report, ORDER_ONE_SLOPE};
use dtd_mjls::{load_scenario, Error, Scenario};
use serde_json::json;

use output::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_SIZE_GUARD: i32 = 3;
pub const EXIT_IO: i32 = 4;
/// Usage errors and failed internal checks.
pub const EXIT_OTHER: i32 = 5;

/// |z| bound used in the `compare` summary.
pub const Z_BOUND: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(name = "dtd-mjls", version, about = "Exact finite-time error analysis of decentralized TD(0)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Step size; overrides the scenario file.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated, strictly decreasing step sizes for `perturb`.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every scenario invariant and print the report.
    Validate(Common),
    /// Exact error trajectory to trajectory.csv.
    Exact(Common),
    /// Steady-state limits.
    Steady(Common),
    /// Spectral radii, rate and stability verdict.
    Spectrum(Common),
    /// Step-size sweep to sweep.csv with slope diagnostics.
    Perturb(Common),
    /// Monte Carlo estimate to mc.csv.
    Simulate(Common),
    /// Exact trajectory against Monte Carlo with z-scores to compare.csv.
    Compare(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Exact(c)
            | Command::Steady(c)
            | Command::Spectrum(c)
            | Command::Perturb(c)
            | Command::Simulate(c)
            | Command::Compare(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Exact(_) => "exact",
            Command::Steady(_) => "steady",
            Command::Spectrum(_) => "spectrum",
            Command::Perturb(_) => "perturb",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::NotErgodic(_) | Error::NotHurwitz { .. } => EXIT_VALIDATION,
        Error::Unstable { .. } | Error::Diverged { .. } => EXIT_UNSTABLE,
        Error::SizeGuard { .. } => EXIT_SIZE_GUARD,
        Error::Io(_) | Error::Parse(_) | Error::Dimension(_) | Error::NonFinite(_) => EXIT_IO,
        _ => EXIT_OTHER,
    }
}

struct Run {
    scenario: Scenario,
    common: Common,
    command: &'static str,
}

impl Run {
    fn alpha(&self) -> dtd_mjls::Result<f64> {
        let a = self.common.alpha.or(self.scenario.alpha).ok_or_else(|| {
            Error::InvalidArgument("no step size: pass --alpha or set \"alpha\" in the scenario".into())
        })?;
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {a}")));
        }
        Ok(a)
    }

    fn horizon(&self) -> usize {
        self.common.horizon.unwrap_or(self.scenario.horizon)
    }

    fn trials(&self) -> usize {
        self.common.trials.unwrap_or(self.scenario.trials)
    }

    fn seed(&self) -> u64 {
        self.common.seed.unwrap_or(self.scenario.seed)
    }

    fn meta(&self, alpha: Option<f64>) -> Vec<(String, String)> {
        let mut m = vec![
            ("tool".into(), format!("dtd-mjls-{}", env!("CARGO_PKG_VERSION"))),
            ("command".into(), self.command.into()),
            ("fingerprint".into(), self.scenario.model.fingerprint()),
            ("seed".into(), self.seed().to_string()),
            ("generator".into(), GENERATOR.replace(' ', "")),
        ];
        if let Some(a) = alpha {
            m.push(("alpha".into(), output::fmt_num(a)));
        }
        m
    }

    fn out_path(&self, file: &str) -> dtd_mjls::Result<PathBuf> {
        std::fs::create_dir_all(&self.common.out)?;
        Ok(self.common.out.join(file))
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_OTHER;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    execute(&cli.command, stdout, stderr)
}

pub fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let common = cmd.common().clone();
    let scenario = match load_scenario(&common.scenario) {
        Ok(s) => s,
        Err(Error::Validation(report)) if matches!(cmd, Command::Validate(_)) => {
            let _ = write!(stdout, "{report}");
            return EXIT_VALIDATION;
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", common.scenario.display());
            return exit_code(&e);
        }
    };
    let run = Run {
        scenario,
        common,
        command: cmd.name(),
    };
    let result = match cmd {
        Command::Validate(_) => validate(&run, stdout),
        Command::Exact(_) => exact(&run, stdout),
        Command::Steady(_) => steady(&run, stdout),
        Command::Spectrum(_) => spectrum(&run, stdout),
        Command::Perturb(_) => perturb(&run, stdout),
        Command::Simulate(_) => simulate(&run, stdout),
        Command::Compare(_) => compare(&run, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn validate(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    write!(out, "{}", run.scenario.model.report)?;
    writeln!(out, "fingerprint={}", run.scenario.model.fingerprint())?;
    Ok(())
}

/// Rows `k, δ^k, ‖E ξ^k‖, trace E[ξ^k ξ^kᵀ]`.
pub fn trajectory_table(scenario: &Scenario, alpha: f64, horizon: usize) -> dtd_mjls::Result<Table> {
    let model = &scenario.model;
    let modes = model.modes(alpha)?;
    let mut st = init_moments(&scenario.theta0, &model.dynamics, &model.chain)?;
    let mut t = Table::new(Vec::new(), &["k", "delta", "q_norm", "trace_Q"]);
    for k in 0..=horizon {
        if k > 0 {
            st = step_moments(&st, &modes, &model.chain).map_err(|e| match e {
                Error::Diverged { step, .. } => {
                    let sr = model
                        .spectrum(alpha, scenario.size_guard)
                        .ok()
                        .map(|r| r.sr_h22);
                    Error::Diverged { step, sr_h22: sr }
                }
                other => other,
            })?;
        }
        t.push(vec![
            Some(k as f64),
            Some(st.delta()),
            Some(st.mean().norm()),
            Some(st.second_moment().trace()),
        ]);
    }
    Ok(t)
}

fn exact(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let alpha = run.alpha()?;
    let mut t = trajectory_table(&run.scenario, alpha, run.horizon())?;
    t.meta = run.meta(Some(alpha));
    let path = run.out_path("trajectory.csv")?;
    t.write(&path)?;
    let last = t.rows.last().and_then(|r| r[1]).unwrap_or(f64::NAN);
    writeln!(out, "rows={}", t.rows.len())?;
    writeln!(out, "delta_final={}", output::fmt_num(last))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn steady(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let alpha = run.alpha()?;
    let model = &run.scenario.model;
    let modes = model.modes(alpha)?;
    let lti = assemble_lti(&modes, &model.chain, run.scenario.size_guard);
    if let Ok(r) = spectrum_report(&lti, &model.chain, &model.dynamics, alpha) {
        if !r.stable {
            return Err(Error::Unstable { sr_h22: r.sr_h22 });
        }
    }
    let ss = steady_state(&modes, &model.chain, &lti)?;
    let mean: Vec<f64> = ss.mean_error(modes.num_modes()).iter().copied().collect();
    let method = match ss.method {
        SteadyStateMethod::DirectSolve => "direct".to_string(),
        SteadyStateMethod::FixedPoint { iterations } => format!("fixed-point({iterations})"),
    };
    writeln!(out, "alpha={}", output::fmt_num(alpha))?;
    writeln!(out, "delta_inf={}", output::fmt_num(ss.delta_inf))?;
    writeln!(out, "q_inf_norm={}", output::fmt_num(ss.q_inf.norm()))?;
    writeln!(out, "q2_inf_norm={}", output::fmt_num(ss.q2_inf.norm()))?;
    writeln!(out, "method={method}")?;
    let doc = json!({
        "alpha": alpha,
        "fingerprint": model.fingerprint(),
        "delta_inf": ss.delta_inf,
        "mean_error": mean,
        "q_inf": ss.q_inf.as_slice(),
        "q2_inf": ss.q2_inf.as_slice(),
        "method": method,
    });
    let path = run.out_path("steady.json")?;
    std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn spectrum(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let alpha = run.alpha()?;
    let model = &run.scenario.model;
    let r = model.spectrum(alpha, run.scenario.size_guard)?;
    let fields = [
        ("alpha", r.alpha),
        ("sr_h11", r.sr_h11),
        ("sr_h22", r.sr_h22),
        ("mixing", r.mixing),
        ("rate", r.rate),
        ("pred_sr_h11", r.pred_sr_h11),
        ("pred_sr_h22", r.pred_sr_h22),
    ];
    for (k, v) in fields {
        writeln!(out, "{k}={}", output::fmt_num(v))?;
    }
    writeln!(out, "stable={}", r.stable)?;
    let mut doc = serde_json::Map::new();
    for (k, v) in fields {
        doc.insert(k.into(), json!(v));
    }
    doc.insert("stable".into(), json!(r.stable));
    doc.insert("fingerprint".into(), json!(model.fingerprint()));
    let path = run.out_path("spectrum.json")?;
    std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn perturb(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let grid = match &run.common.alphas {
        Some(a) => a.clone(),
        None => default_grid(run.alpha()?),
    };
    let model = &run.scenario.model;
    let guard = run.scenario.size_guard;
    let sw = alpha_sweep(model, &grid, guard).map_err(|e| match e {
        // Every grid point unstable: report the smallest spectral radius seen.
        Error::InsufficientData(_) => {
            let least = grid
                .iter()
                .filter_map(|&a| model.spectrum(a, guard).ok())
                .map(|r| r.sr_h22)
                .fold(f64::INFINITY, f64::min);
            Error::Unstable { sr_h22: least }
        }
        other => other,
    })?;
    let mut t = Table::new(
        run.meta(None),
        &["alpha", "sr_h11", "sr_h22", "pred_sr_h11", "pred_sr_h22", "delta_inf", "stable"],
    );
    for p in &sw.points {
        let r = &p.report;
        t.push(vec![
            Some(r.alpha),
            Some(r.sr_h11),
            Some(r.sr_h22),
            Some(r.pred_sr_h11),
            Some(r.pred_sr_h22),
            p.delta_inf,
            Some(if r.stable { 1.0 } else { 0.0 }),
        ]);
    }
    let path = run.out_path("sweep.csv")?;
    t.write(&path)?;
    let re = sw.max_real_eigenvalue;
    writeln!(out, "max_real_eigenvalue={}", output::fmt_num(re))?;
    writeln!(
        out,
        "h22_slope={} target={} ok={}",
        output::fmt_num(sw.h22_slope),
        output::fmt_num(2.0 * re),
        sw.h22_slope_ok()
    )?;
    writeln!(
        out,
        "h11_slope={} target={} ok={}",
        output::fmt_num(sw.h11_slope),
        output::fmt_num(re),
        sw.h11_slope_ok()
    )?;
    match sw.delta_slope {
        Some(s) => writeln!(
            out,
            "delta_loglog_slope={} range=[{},{}] ok={}",
            output::fmt_num(s),
            ORDER_ONE_SLOPE.0,
            ORDER_ONE_SLOPE.1,
            sw.delta_slope_ok()
        )?,
        None => writeln!(out, "delta_loglog_slope=unavailable")?,
    }
    writeln!(out, "unstable_points={}", sw.points.len() - sw.stable_points().count())?;
    writeln!(
        out,
        "monotone_onset={}{}",
        sw.monotone_onset(),
        if sw.monotone_onset() {
            String::new()
        } else {
            format!(" violations={:?}", sw.onset_violations)
        }
    )?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn mc_table(
    run: &Run,
    alpha: f64,
    exact: Option<&[f64]>,
) -> dtd_mjls::Result<Table> {
    let s = &run.scenario;
    let mc = monte_carlo_error(&s.model, alpha, &s.theta0, run.horizon(), run.trials(), run.seed())?;
    let mut cols = vec!["k", "delta_hat", "stderr", "delta_exact"];
    if exact.is_some() {
        cols.push("z");
    }
    let mut meta = run.meta(Some(alpha));
    meta.push(("trials".into(), mc.trials.to_string()));
    let mut t = Table::new(meta, &cols);
    for k in 0..mc.deltas_hat.len() {
        let (d, se) = (mc.deltas_hat[k], mc.stderrs[k]);
        let mut row = vec![Some(k as f64), Some(d), Some(se)];
        match exact {
            Some(ex) => {
                row.push(Some(ex[k]));
                row.push(Some(z_score(d, ex[k], se)));
            }
            None => row.push(None),
        }
        t.push(row);
    }
    Ok(t)
}

/// `(estimate − exact)/stderr`; zero when the two agree to round-off, which
/// covers deterministic steps where the standard error vanishes.
pub fn z_score(estimate: f64, exact: f64, stderr: f64) -> f64 {
    let diff = estimate - exact;
    if diff.abs() <= 1e-12 * exact.abs().max(1.0) {
        0.0
    } else {
        diff / stderr
    }
}

fn simulate(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let alpha = run.alpha()?;
    let t = mc_table(run, alpha, None)?;
    let path = run.out_path("mc.csv")?;
    t.write(&path)?;
    writeln!(out, "trials={} rows={}", run.trials(), t.rows.len())?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn compare(run: &Run, out: &mut dyn Write) -> dtd_mjls::Result<()> {
    let alpha = run.alpha()?;
    let exact = trajectory_table(&run.scenario, alpha, run.horizon())?;
    let ex: Vec<f64> = exact.rows.iter().map(|r| r[1].unwrap_or(f64::NAN)).collect();
    let t = mc_table(run, alpha, Some(&ex))?;
    let z: Vec<f64> = t.rows.iter().filter_map(|r| r[4]).collect();
    let within = z.iter().filter(|z| z.abs() <= Z_BOUND).count();
    let path = run.out_path("compare.csv")?;
    t.write(&path)?;
    writeln!(out, "trials={} rows={}", run.trials(), t.rows.len())?;
    writeln!(
        out,
        "fraction_within_{Z_BOUND}sigma={}",
        output::fmt_num(within as f64 / z.len().max(1) as f64)
    )?;
    let zmax = z.iter().fold(0.0f64, |a, z| a.max(z.abs()));
    writeln!(out, "max_abs_z={}", output::fmt_num(zmax))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

/// Convenience for tests and scripts.
pub fn run_args(args: &[&str], out_dir: &Path) -> (i32, String, String) {
    let mut argv: Vec<String> = std::iter::once("dtd-mjls".to_string())
        .chain(args.iter().map(|s| s.to_string()))
        .collect();
    argv.push("--out".into());
    argv.push(out_dir.display().to_string());
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = main_with_args(argv, &mut o, &mut e);
    (
        code,
        String::from_utf8_lossy(&o).into_owned(),
        String::from_utf8_lossy(&e).into_owned(),
    )
}

//! Subcommand implementations: configuration merging, execution, output.

use std::fmt;
use std::path::{Path, PathBuf};

use noeffect::functional::{read_curves_csv, write_curves_csv};
use noeffect::simulation::DEFAULT_BANDWIDTHS;
use noeffect::{
    power_curve, run_test, BasisKind, Calibration, Error, PowerReport, PrivilegedChoice,
    QuadraticMode, Scenario, ScenarioKind, TestConfig, TestOutcome,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    BasisArg, CalibrationArg, Format, PowerArgs, QuadraticModeArg, ScenarioArg, ScenarioArgs,
    SimulateArgs, TestArgs, TuningArgs,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_GRID_MISMATCH: u8 = 4;
pub const EXIT_ROW_MISMATCH: u8 = 5;
pub const EXIT_TOO_FEW: u8 = 6;
pub const EXIT_NON_FINITE: u8 = 7;
pub const EXIT_DEGENERATE: u8 = 8;
pub const EXIT_BOOTSTRAP: u8 = 9;
pub const EXIT_SIMULATION: u8 = 10;
pub const EXIT_INTERNAL: u8 = 11;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Config(String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(..) => EXIT_INPUT,
            CliError::Core(e) => match e {
                Error::InvalidConfig(_)
                | Error::InvalidBandwidth(_)
                | Error::InvalidDirection(_)
                | Error::TooManyComponents { .. } => EXIT_CONFIG,
                Error::InvalidGrid(_)
                | Error::LengthMismatch { .. }
                | Error::Parse(_)
                | Error::Io(_) => EXIT_INPUT,
                Error::GridMismatch => EXIT_GRID_MISMATCH,
                Error::RowCountMismatch { .. } => EXIT_ROW_MISMATCH,
                Error::TooFewCurves { .. } => EXIT_TOO_FEW,
                Error::NonFinite { .. } => EXIT_NON_FINITE,
                Error::DegenerateVariance { .. } => EXIT_DEGENERATE,
                Error::BootstrapFailed { .. } => EXIT_BOOTSTRAP,
                Error::SimulationFailed { .. } => EXIT_SIMULATION,
                Error::DimensionMismatch(_) => EXIT_INTERNAL,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_gamma0(s: &str) -> CliResult<PrivilegedChoice> {
    match s {
        "uninformative" => Ok(PrivilegedChoice::Uninformative),
        "first_axis" | "first-axis" => Ok(PrivilegedChoice::FirstAxis),
        _ => s
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(PrivilegedChoice::Custom)
            .map_err(|_| {
                CliError::Config(format!(
                    "--gamma0 must be uninformative, first_axis or comma-separated numbers, got {s:?}"
                ))
            }),
    }
}

/// Flags override `base`.
fn apply_tuning(mut cfg: TestConfig, t: &TuningArgs) -> CliResult<TestConfig> {
    if let Some(p) = t.p {
        cfg.p = p;
    }
    if let Some(b) = t.basis {
        cfg.basis = Some(match b {
            BasisArg::BridgeSine => BasisKind::BridgeSine,
            BasisArg::MotionSine => BasisKind::MotionSine,
        });
    }
    if let Some(h) = &t.bandwidths {
        cfg.bandwidths = h.clone();
    }
    if let Some(a) = t.alpha {
        cfg.alpha_n = a;
    }
    if let Some(g) = &t.gamma0 {
        cfg.gamma0 = parse_gamma0(g)?;
    }
    if let Some(m) = t.grid {
        cfg.grid_size = m;
    }
    if let Some(b) = t.bootstrap {
        cfg.bootstrap = b;
    }
    if let Some(l) = t.level {
        cfg.level = l;
    }
    if let Some(s) = t.seed {
        cfg.seed = s;
    }
    if let Some(c) = t.calibration {
        cfg.calibration = match c {
            CalibrationArg::Bootstrap => Calibration::Bootstrap,
            CalibrationArg::Asymptotic => Calibration::Asymptotic,
        };
    }
    Ok(cfg)
}

fn output_format(t: &TuningArgs) -> Format {
    t.format.unwrap_or_else(|| match &t.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        _ => Format::Json,
    })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e)),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Io(PathBuf::from("<stdout>"), e))
                }
                _ => Ok(()),
            }
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    quoted.join(",") + "\n"
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------- test

#[derive(Debug, Serialize, Deserialize)]
pub struct TestReport {
    pub responses: String,
    pub covariates: String,
    #[serde(flatten)]
    pub outcome: TestOutcome,
}

const TEST_CSV_HEADER: [&str; 12] = [
    "bandwidth",
    "t_n",
    "q_n",
    "v_hat_sq",
    "gamma_hat",
    "gamma_hat_index",
    "selected_is_privileged",
    "critical_value",
    "p_value",
    "reject",
    "skipped_directions",
    "bootstrap_aborts",
];

fn test_csv(report: &TestReport) -> CliResult<String> {
    let echo = serde_json::json!({
        "responses": report.responses,
        "covariates": report.covariates,
        "n": report.outcome.n,
        "grid_directions": report.outcome.grid_directions,
        "config": report.outcome.config,
    });
    let mut s = format!("# config: {echo}\n");
    s += &csv_line(&TEST_CSV_HEADER.map(String::from));
    for r in &report.outcome.results {
        let gamma: Vec<String> = r.gamma_hat.iter().map(|g| g.to_string()).collect();
        s += &csv_line(&[
            r.bandwidth.to_string(),
            r.t_n.to_string(),
            r.q_n.to_string(),
            r.v_hat_sq.to_string(),
            gamma.join(";"),
            r.gamma_hat_index.to_string(),
            r.selected_is_privileged.to_string(),
            opt_num(r.critical_value),
            r.p_value.to_string(),
            r.reject.to_string(),
            r.skipped_directions.to_string(),
            r.bootstrap_aborts.to_string(),
        ]);
    }
    Ok(s)
}

pub fn test_config(args: &TestArgs) -> CliResult<TestConfig> {
    let base = match &args.tuning.config {
        Some(path) => read_json::<TestConfig>(path)?,
        None => TestConfig::default(),
    };
    let mut cfg = apply_tuning(base, &args.tuning)?;
    if args.no_center {
        cfg.center = false;
    }
    if args.per_direction {
        cfg.per_direction = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn test(args: TestArgs) -> CliResult<()> {
    let cfg = test_config(&args)?;
    let u = read_curves_csv(&args.responses)?;
    let x = read_curves_csv(&args.covariates)?;
    let outcome = run_test(&u, &x, &cfg)?;
    let report = TestReport {
        responses: args.responses.display().to_string(),
        covariates: args.covariates.display().to_string(),
        outcome,
    };
    let text = match output_format(&args.tuning) {
        Format::Json => {
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?
                + "\n"
        }
        Format::Csv => test_csv(&report)?,
    };
    emit(args.tuning.out.as_deref(), &text)?;
    for r in &report.outcome.results {
        eprintln!(
            "h={:<6} T_n={:>9.4} p={:.4} {}",
            r.bandwidth,
            r.t_n,
            r.p_value,
            if r.reject { "reject" } else { "do not reject" }
        );
    }
    Ok(())
}

// --------------------------------------------------------------------- power

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerFile {
    pub scenarios: Option<Vec<ScenarioKind>>,
    pub c: Option<f64>,
    pub n: Option<usize>,
    pub kl_terms: Option<usize>,
    pub grid_points: Option<usize>,
    pub quadratic_mode: Option<QuadraticMode>,
    pub reps: Option<usize>,
    pub test: Option<TestConfig>,
}

/// Effective configuration of a power run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerPlan {
    pub scenarios: Vec<Scenario>,
    pub reps: usize,
    pub seed: u64,
    pub test: TestConfig,
}

fn scenario_kind(s: ScenarioArg) -> ScenarioKind {
    match s {
        ScenarioArg::NullLinear => ScenarioKind::NullLinear,
        ScenarioArg::Linear => ScenarioKind::Linear,
        ScenarioArg::Concurrent => ScenarioKind::Concurrent,
        ScenarioArg::Quadratic => ScenarioKind::Quadratic,
    }
}

fn build_scenarios(args: &ScenarioArgs, file: &PowerFile) -> CliResult<Vec<Scenario>> {
    let kinds: Vec<ScenarioKind> = match (&args.scenario, &file.scenarios) {
        (Some(s), _) => s.iter().map(|k| scenario_kind(*k)).collect(),
        (None, Some(f)) => f.clone(),
        (None, None) => return Err(CliError::Config("--scenario is required".into())),
    };
    let n = args.n.or(file.n).unwrap_or(40);
    kinds
        .into_iter()
        .map(|kind| {
            let mut sc = Scenario::reference(kind, n);
            if let Some(c) = args.c.or(file.c) {
                sc.c = c;
            }
            if let Some(j) = args.kl_terms.or(file.kl_terms) {
                sc.kl_terms = j;
            }
            if let Some(m) = args.grid_points.or(file.grid_points) {
                sc.grid_points = m;
            }
            if let Some(q) = args.quadratic_mode {
                sc.quadratic_mode = match q {
                    QuadraticModeArg::PaperLiteral => QuadraticMode::PaperLiteral,
                    QuadraticModeArg::Centered => QuadraticMode::Centered,
                };
            } else if let Some(q) = file.quadratic_mode {
                sc.quadratic_mode = q;
            }
            sc.validate()?;
            Ok(sc)
        })
        .collect()
}

pub fn power_plan(args: &PowerArgs) -> CliResult<PowerPlan> {
    let file = match &args.tuning.config {
        Some(path) => read_json::<PowerFile>(path)?,
        None => PowerFile::default(),
    };
    let base = file.test.clone().unwrap_or_else(|| TestConfig {
        bandwidths: DEFAULT_BANDWIDTHS.to_vec(),
        ..TestConfig::default()
    });
    let mut test = apply_tuning(base, &args.tuning)?;
    test.center = false;
    test.validate()?;
    let scenarios = build_scenarios(&args.scenario, &file)?;
    let reps = args.reps.or(file.reps).unwrap_or(1000);
    if reps == 0 {
        return Err(CliError::Config("--reps must be at least 1".into()));
    }
    for sc in &scenarios {
        let max = noeffect::functional::max_components(sc.n);
        if test.p > max {
            return Err(Error::TooManyComponents { p: test.p, max }.into());
        }
    }
    Ok(PowerPlan {
        scenarios,
        reps,
        seed: test.seed,
        test,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PowerOutput {
    pub plan: PowerPlan,
    pub reports: Vec<PowerReport>,
}

fn power_csv(out: &PowerOutput) -> CliResult<String> {
    let plan = serde_json::to_string(&out.plan).map_err(|e| CliError::Config(e.to_string()))?;
    let mut s = format!("# config: {plan}\n");
    for (i, r) in out.reports.iter().enumerate() {
        let body = r.to_csv()?;
        // one header for the whole file
        let body = if i == 0 {
            body.as_str()
        } else {
            body.split_once('\n').map_or("", |(_, rest)| rest)
        };
        s += body;
    }
    Ok(s)
}

pub fn power(args: PowerArgs) -> CliResult<()> {
    let plan = power_plan(&args)?;
    if args.dry_run {
        let text =
            serde_json::to_string_pretty(&plan).map_err(|e| CliError::Config(e.to_string()))?;
        return emit(None, &(text + "\n"));
    }
    let reports = plan
        .scenarios
        .iter()
        .map(|sc| power_curve(sc, &plan.test, plan.reps, plan.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let out = PowerOutput { plan, reports };
    let text = match output_format(&args.tuning) {
        Format::Json => {
            serde_json::to_string_pretty(&out).map_err(|e| CliError::Config(e.to_string()))? + "\n"
        }
        Format::Csv => power_csv(&out)?,
    };
    emit(args.tuning.out.as_deref(), &text)?;
    eprintln!(
        "{:<12} {:>6} {:>6} {:>8} {:>8}",
        "scenario", "h", "reps", "rate", "mc_se"
    );
    for r in out.reports.iter().flat_map(|r| &r.rows) {
        eprintln!(
            "{:<12} {:>6} {:>6} {:>8.4} {:>8.4}",
            r.scenario, r.h, r.n_reps, r.rate, r.mc_se
        );
    }
    Ok(())
}

// ------------------------------------------------------------------ simulate

pub fn simulate(args: SimulateArgs) -> CliResult<()> {
    let file = PowerFile::default();
    let scenarios = build_scenarios(&args.scenario, &file)?;
    let [sc] = scenarios.as_slice() else {
        return Err(CliError::Config(
            "simulate takes exactly one scenario".into(),
        ));
    };
    let (u, x) = sc.generate(args.seed, args.replication)?;
    let prefix = args.out_prefix.display().to_string();
    let up = PathBuf::from(format!("{prefix}_responses.csv"));
    let xp = PathBuf::from(format!("{prefix}_covariates.csv"));
    write_curves_csv(&up, &u)?;
    write_curves_csv(&xp, &x)?;
    eprintln!("wrote {} and {}", up.display(), xp.display());
    Ok(())
}

//! `retail-sim`: single runs, replicated sweeps, analysis and config linting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use retail_sim::analysis::{analyze, observations_from_csv, AnalysisError};
use retail_sim::experiments::{
    run_cashier_sweep_with_headcount, run_empowerment_sweep, summarize, Experiment,
    ExperimentDesign, CASHIER_SWEEP_HEADCOUNT, DEFAULT_REPLICATIONS,
};
use retail_sim::model::{Horizon, HorizonError, SHIPPED_ATV, SHIPPED_WW};
use retail_sim::{
    load_config, parse_config, run_replication, ConfigError, DepartmentConfig, RunMetrics,
    StaffingPlan, SweepError,
};

const CONFIG_DIR_ENV: &str = "RETAILSIM_CONFIG_DIR";

#[derive(Parser)]
#[command(
    name = "retail-sim",
    version,
    about = "Retail department staffing and empowerment simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication and print its metrics.
    Run(RunArgs),
    /// Run a replicated experiment over both departments and write the result table.
    Sweep(SweepArgs),
    /// ANOVA, Levene and Tukey tests for one metric of a results file.
    Analyze(AnalyzeArgs),
    /// Check config files without running anything.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConfigSource {
    /// Directory holding dept_atv.toml and dept_ww.toml; the built-in configs are used when unset.
    #[arg(long, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Department {
    Atv,
    Ww,
}

impl Department {
    fn file_name(self) -> &'static str {
        match self {
            Department::Atv => "dept_atv.toml",
            Department::Ww => "dept_ww.toml",
        }
    }

    fn shipped(self) -> &'static str {
        match self {
            Department::Atv => SHIPPED_ATV,
            Department::Ww => SHIPPED_WW,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Department config file.
    #[arg(
        long,
        conflicts_with = "department",
        required_unless_present = "department"
    )]
    config: Option<PathBuf>,
    /// Use the department's config from the config directory (or the built-in one).
    #[arg(long, value_enum)]
    department: Option<Department>,
    #[command(flatten)]
    source: ConfigSource,
    #[arg(long)]
    cashiers: Option<u32>,
    #[arg(long)]
    normal_sellers: Option<u32>,
    #[arg(long)]
    expert_sellers: Option<u32>,
    #[arg(long)]
    managers: Option<u32>,
    /// Run length in weeks of seven trading days [default: the config horizon, 10 weeks when shipped].
    #[arg(long)]
    weeks: Option<u32>,
    /// Master seed; a fresh one is generated and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the metrics as a one-row CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Cashiers,
    Empowerment,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
    /// Base seed for every cell; a fresh one is generated and printed when omitted.
    #[arg(long)]
    base_seed: Option<u64>,
    /// Results CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Total staff held constant in the cashier sweep.
    #[arg(long, default_value_t = CASHIER_SWEEP_HEADCOUNT)]
    headcount: u32,
    #[arg(long)]
    weeks: Option<u32>,
    #[command(flatten)]
    source: ConfigSource,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Results CSV written by `sweep`.
    results: PathBuf,
    #[arg(long)]
    metric: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Machine-readable test results [default: next to the results file].
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config files to check; both department configs from the config directory when empty.
    paths: Vec<PathBuf>,
    #[command(flatten)]
    source: ConfigSource,
}

enum Failure {
    /// Bad arguments or config: exit 2.
    Usage(String),
    /// The simulation or an output write failed: exit 1.
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(c) => c.into(),
            SweepError::Design(_) => Failure::Usage(e.to_string()),
            SweepError::Replication { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn department_config(
    dept: Department,
    source: &ConfigSource,
) -> Result<DepartmentConfig, ConfigError> {
    match &source.config_dir {
        Some(dir) => load_config(dir.join(dept.file_name())),
        None => parse_config(dept.shipped(), Path::new(dept.file_name())),
    }
}

fn apply_weeks(config: &mut DepartmentConfig, weeks: Option<u32>) -> Result<(), Failure> {
    if let Some(w) = weeks {
        config.horizon = Horizon::weeks(w, config.horizon.trading_day_minutes())
            .map_err(|e: HorizonError| Failure::Usage(format!("--weeks {w}: {e}")))?;
    }
    Ok(())
}

fn fresh_seed(label: &str) -> u64 {
    let seed = rand::random::<u64>();
    println!("{label}: {seed} (generated)");
    seed
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn format_metric(name: &str, value: Option<f64>) -> String {
    match value {
        Some(v) if name.ends_with("_utilization") => format!("{v:.4}"),
        Some(v) => format!("{v}"),
        None => "n/a".to_string(),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut config = match (&args.config, args.department) {
        (Some(path), _) => load_config(path)?,
        (None, Some(dept)) => department_config(dept, &args.source)?,
        (None, None) => unreachable!("clap requires one of --config and --department"),
    };
    apply_weeks(&mut config, args.weeks)?;
    let base = config.staffing;
    let staffing = StaffingPlan {
        cashiers: args.cashiers.unwrap_or(base.cashiers),
        normal_sellers: args.normal_sellers.unwrap_or(base.normal_sellers),
        expert_sellers: args.expert_sellers.unwrap_or(base.expert_sellers),
        section_managers: args.managers.unwrap_or(base.section_managers),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => fresh_seed("seed"),
    };
    let metrics = run_replication(&config, &staffing, seed).map_err(|e| match e {
        retail_sim::RunFailure::Setup(msg) => Failure::Usage(msg),
        other => Failure::Runtime(format!("{other} (seed {seed})")),
    })?;

    println!("department: {}", config.department);
    println!(
        "staffing: {} cashiers, {} normal sellers, {} expert sellers, {} section managers",
        staffing.cashiers,
        staffing.normal_sellers,
        staffing.expert_sellers,
        staffing.section_managers
    );
    println!("days: {}", config.horizon.days());
    for field in RunMetrics::FIELDS {
        println!(
            "{field}: {}",
            format_metric(field, metrics.get(field).expect("listed field"))
        );
    }
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "department,seed,{}", RunMetrics::FIELDS.join(","))?;
            let values: Vec<String> = RunMetrics::FIELDS
                .iter()
                .map(|f| {
                    metrics
                        .get(f)
                        .expect("listed field")
                        .map(|v| format!("{v}"))
                        .unwrap_or_default()
                })
                .collect();
            writeln!(w, "{},{seed},{}", config.department, values.join(","))?;
            w.flush()
        };
        write(&mut w)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut configs = Vec::new();
    for dept in [Department::Atv, Department::Ww] {
        let mut c = department_config(dept, &args.source)?;
        apply_weeks(&mut c, args.weeks)?;
        configs.push(c);
    }
    let experiment = match args.experiment {
        ExperimentArg::Cashiers => Experiment::CashierSweep,
        ExperimentArg::Empowerment => Experiment::EmpowermentSweep,
    };
    let base_seed = match args.base_seed {
        Some(s) => s,
        None => fresh_seed("base seed"),
    };
    let design = ExperimentDesign::new(experiment, args.reps, base_seed);
    let run = || match experiment {
        Experiment::CashierSweep => {
            run_cashier_sweep_with_headcount(&configs, &design, args.headcount)
        }
        Experiment::EmpowermentSweep => run_empowerment_sweep(&configs, &design),
    };
    let table = match args.jobs {
        Some(0) => return Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(format!("cannot start worker threads: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let mut w = create(&args.out)?;
    table
        .write_csv(&mut w)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote {} rows to {}", table.rows.len(), args.out.display());

    let metrics: &[&str] = match experiment {
        Experiment::CashierSweep => &[
            "transactions",
            "satisfied_customers",
            "overall_satisfaction",
        ],
        Experiment::EmpowermentSweep => &["refund_satisfaction", "cashier_utilization"],
    };
    let factor = match experiment {
        Experiment::CashierSweep => "cashiers",
        Experiment::EmpowermentSweep => "empowerment",
    };
    let summaries = metrics
        .iter()
        .map(|m| summarize(&table, m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("\n{:<12} {:>11}", "department", factor);
    for m in metrics {
        print!("  {:>26}", format!("{m} (mean / sd)"));
    }
    println!();
    for row in 0..summaries[0].len() {
        let cell = &summaries[0][row];
        print!("{:<12} {:>11}", cell.department, cell.level);
        for (m, s) in metrics.iter().zip(&summaries) {
            print!("  {:>26}", s[row].display(m));
        }
        println!();
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Usage(format!(
            "--alpha {} outside (0, 1)",
            args.alpha
        )));
    }
    let file = File::open(&args.results)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.results.display())))?;
    let obs = observations_from_csv(file, &args.metric).map_err(|e| match e {
        AnalysisError::Stats(_) => Failure::Runtime(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    })?;
    let report = analyze(&obs, args.alpha).map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("{}", report.to_text());

    let out = args.report_out.unwrap_or_else(|| {
        let stem = args
            .results
            .file_stem()
            .map_or("results".into(), |s| s.to_string_lossy().into_owned());
        args.results
            .with_file_name(format!("{stem}.{}.tests.csv", args.metric))
    });
    let mut w = create(&out)?;
    report
        .write_csv(&mut w)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    println!("\ntest results written to {}", out.display());
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let mut failed = 0;
    let mut check = |label: String, result: Result<DepartmentConfig, ConfigError>| match result {
        Ok(c) => {
            println!("ok: {label} ({})", c.department);
            for d in &c.defaulted {
                println!("  default applied: {d}");
            }
        }
        Err(e) => {
            failed += 1;
            println!("invalid: {e}");
        }
    };
    if args.paths.is_empty() {
        for dept in [Department::Atv, Department::Ww] {
            let label = match &args.source.config_dir {
                Some(dir) => dir.join(dept.file_name()).display().to_string(),
                None => format!("built-in {}", dept.file_name()),
            };
            check(label, department_config(dept, &args.source));
        }
    } else {
        for path in &args.paths {
            check(path.display().to_string(), load_config(path));
        }
    }
    if failed > 0 {
        return Err(Failure::Usage(format!("{failed} invalid config file(s)")));
    }
    Ok(())
}

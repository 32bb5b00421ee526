use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use coldmpc::ga::GaConfig;
use coldmpc::mpc::{receding_horizon_run, ControllerConfig, ObjectiveKind, RunContext};
use coldmpc::plant::{load_chiller_config, Plant};
use coldmpc::scenario::{
    compare_reports, load_scenario, read_report, synth_scenario, write_run, write_scenario, write_trace,
    ComparisonSummary, Noise, Scenario, SimulationReport, Template,
};
use coldmpc::tariff::{default_tariffs, load_tariff_config, PeriodCalendar, Season, TariffSchedule};
use coldmpc::validation;

/// Receding-horizon control of a multi-chiller plant with cold storage.
#[derive(Parser, Debug)]
#[command(name = "coldmpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one controller over a scenario and write a report directory.
    Simulate(SimulateArgs),
    /// Compare economic against energetic runs, from run directories or by running both.
    Compare(CompareArgs),
    /// Run the embedded model checks; the exit code is the number of failures (at most 100).
    ValidateModel(ValidateArgs),
    /// Write a synthetic scenario CSV.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario CSV (timestamp,q_real,q_forecast,t_real,t_forecast; kW and degC).
    #[arg(long, conflicts_with = "synthetic")]
    scenario: Option<PathBuf>,
    /// Synthetic template: high, medium or low.
    #[arg(long)]
    synthetic: Option<Template>,
    /// Hours to simulate [default: 168 for synthetic scenarios, the whole file otherwise].
    #[arg(long)]
    hours: Option<usize>,
    /// Tariff season: high, medium_high, medium or low [default: from the scenario start month].
    #[arg(long)]
    season: Option<Season>,
}

#[derive(Args, Debug, Clone)]
struct ControlArgs {
    /// Controller TOML file [default: embedded controller config].
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chiller curve TOML file [default: embedded curves].
    #[arg(long)]
    chillers: Option<PathBuf>,
    /// Tariff/calendar TOML file used for prices and for re-pricing summaries [default: embedded A, B, C].
    #[arg(long)]
    tariffs: Option<PathBuf>,
    /// Prediction horizon in periods (overrides the config).
    #[arg(long)]
    np: Option<usize>,
    /// Use the large GA profile (population 3000, tournament 69).
    #[arg(long)]
    paper_scale: bool,
    /// Run seed; also seeds the synthetic forecast noise.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// GA evaluation threads [default: machine parallelism]. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write trace.csv with the per-generation GA history of every hour.
    #[arg(long)]
    trace_ga: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    control: ControlArgs,
    /// Objective: economic or energetic (overrides the config).
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    /// Tariff name from the tariff file, or a TOML file holding one tariff.
    #[arg(long, default_value = "A")]
    tariff: String,
    /// Output directory.
    #[arg(long, env = "COLDMPC_OUT", default_value = "run")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Energetic run directory.
    #[arg(long, requires = "econ", conflicts_with = "run_both")]
    ener: Option<PathBuf>,
    /// Economic run directories; each is compared under the tariff it was run with.
    #[arg(long, num_args = 1.., requires = "ener")]
    econ: Vec<PathBuf>,
    /// Run the energetic controller and one economic controller per tariff on the same scenario and seed.
    #[arg(long)]
    run_both: bool,
    /// Tariffs for run-both mode [default: every tariff valid in the season].
    #[arg(long = "tariff", num_args = 1..)]
    tariff_names: Vec<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    control: ControlArgs,
    /// Output directory for run-both runs and comparison.csv.
    #[arg(long, env = "COLDMPC_OUT", default_value = "compare")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Chiller curve TOML file to check [default: embedded curves].
    #[arg(long)]
    chillers: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Template: high, medium or low.
    #[arg(long)]
    template: Template,
    /// Hours to simulate; the file gets np extra look-ahead rows.
    #[arg(long, default_value_t = 168)]
    hours: usize,
    #[arg(long, default_value_t = 24)]
    np: usize,
    /// Forecast noise seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Forecasts equal the real tracks.
    #[arg(long)]
    no_noise: bool,
    /// Output CSV [default: stdout].
    #[arg(long, env = "COLDMPC_OUT")]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

struct Setup {
    plant: Plant,
    config: ControllerConfig,
    tariffs: Vec<TariffSchedule>,
    calendar: PeriodCalendar,
    scenario: Scenario,
    season: Option<Season>,
}

fn setup(sc: &ScenarioArgs, ctl: &ControlArgs, objective: Option<ObjectiveKind>) -> Result<Setup> {
    if let Some(n) = ctl.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting the worker pool")?;
    }
    let plant = match &ctl.chillers {
        Some(p) => Plant::new(load_chiller_config(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Plant::default(),
    };
    let mut config = match &ctl.config {
        Some(p) => ControllerConfig::from_toml(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => ControllerConfig::default(),
    };
    if let Some(np) = ctl.np {
        config.np = np;
    }
    if ctl.paper_scale {
        config.ga = GaConfig::paper_scale();
    }
    if let Some(o) = objective {
        config.objective = o;
    }
    config.validate()?;

    let (tariffs, calendar) = match &ctl.tariffs {
        Some(p) => load_tariff_config(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => default_tariffs(),
    };

    let mut scenario = match (&sc.scenario, sc.synthetic) {
        (Some(p), _) => {
            let name = p.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
            let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            load_scenario(file, &name, config.np).with_context(|| format!("in {}", p.display()))?
        }
        (None, Some(t)) => synth_scenario(t, sc.hours.unwrap_or(168), config.np, Noise::default(), ctl.seed),
        (None, None) => bail!("give a scenario with --scenario FILE or --synthetic TEMPLATE"),
    };
    if let Some(h) = sc.hours {
        if h == 0 || h > scenario.hours {
            bail!("--hours {h} is outside 1..={} for this scenario", scenario.hours);
        }
        scenario.hours = h;
    }
    scenario.check_horizon(config.np)?;

    let month_season = calendar.season_at(&scenario.start).ok();
    let season = match (sc.season, month_season) {
        (Some(s), Some(m)) if s != m => {
            bail!("--season {} does not match the scenario, which starts in {} season", s.label(), m.label())
        }
        (s, m) => s.or(m),
    };
    scenario.season = season;
    Ok(Setup { plant, config, tariffs, calendar, scenario, season })
}

/// Resolves `--tariff`: a name in the tariff set or a file with one tariff.
fn pick_tariff(setup: &Setup, spec: &str) -> Result<TariffSchedule> {
    if let Some(t) = setup.tariffs.iter().find(|t| t.name.eq_ignore_ascii_case(spec)) {
        return Ok(t.clone());
    }
    let path = Path::new(spec);
    if path.is_file() {
        let (mut ts, _) = load_tariff_config(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        if ts.len() != 1 {
            bail!("{} holds {} tariffs; name one of the tariff set instead", path.display(), ts.len());
        }
        return Ok(ts.remove(0));
    }
    let names: Vec<&str> = setup.tariffs.iter().map(|t| t.name.as_str()).collect();
    bail!("unknown tariff {spec:?}; expected one of {names:?} or a tariff file")
}

fn check_tariff(setup: &Setup, tariff: &TariffSchedule) -> Result<()> {
    if let Some(season) = setup.season {
        tariff.check_season(&setup.calendar, season)?;
    }
    Ok(())
}

fn run(setup: &Setup, tariff: &TariffSchedule, objective: ObjectiveKind, seed: u64) -> Result<SimulationReport> {
    let config = ControllerConfig { objective, ..setup.config.clone() };
    let ctx = RunContext { plant: &setup.plant, tariff, calendar: &setup.calendar, config: &config };
    Ok(receding_horizon_run(&ctx, &setup.scenario, seed)?)
}

fn save(report: &SimulationReport, dir: &Path, setup: &Setup, trace: bool) -> Result<()> {
    write_run(report, dir, &setup.tariffs)?;
    if trace {
        write_trace(report, &dir.join("trace.csv"))?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let setup = setup(&args.scenario, &args.control, args.objective)?;
    let tariff = pick_tariff(&setup, &args.tariff)?;
    check_tariff(&setup, &tariff)?;
    let report = run(&setup, &tariff, setup.config.objective, args.control.seed)?;
    save(&report, &args.out, &setup, args.control.trace_ga)?;
    let tol = setup.config.demand_tolerance;
    println!(
        "{} {} tariff {}: {:.3} MWh, {:.2} EUR, {}/{} hours within {}% of demand -> {}",
        report.meta.scenario,
        report.meta.objective,
        tariff.name,
        report.energy_kwh() / 1e3,
        report.cost_eur(),
        report.hours_within_tolerance(tol),
        report.records.len(),
        tol * 100.0,
        args.out.display()
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut summary = ComparisonSummary::default();
    if args.run_both {
        let setup = setup(&args.scenario, &args.control, None)?;
        let seed = args.control.seed;
        let chosen: Vec<TariffSchedule> = if args.tariff_names.is_empty() {
            let valid: Vec<TariffSchedule> =
                setup.tariffs.iter().filter(|t| check_tariff(&setup, t).is_ok()).cloned().collect();
            for t in setup.tariffs.iter().filter(|t| check_tariff(&setup, t).is_err()) {
                eprintln!("skipping tariff {}: {}", t.name, check_tariff(&setup, t).unwrap_err());
            }
            valid
        } else {
            let ts = args.tariff_names.iter().map(|n| pick_tariff(&setup, n)).collect::<Result<Vec<_>>>()?;
            for t in &ts {
                check_tariff(&setup, t)?;
            }
            ts
        };
        let first = chosen.first().ok_or_else(|| anyhow!("no tariff is valid in this season"))?;
        let ener = run(&setup, first, ObjectiveKind::Energetic, seed)?;
        save(&ener, &args.out.join("energetic"), &setup, args.control.trace_ga)?;
        for t in &chosen {
            let econ = run(&setup, t, ObjectiveKind::Economic, seed)?;
            save(&econ, &args.out.join(format!("economic_{}", t.name)), &setup, args.control.trace_ga)?;
            summary.rows.push(compare_reports(&econ, &ener, t)?);
        }
    } else {
        let ener_dir = args.ener.as_ref().ok_or_else(|| anyhow!("give --ener DIR --econ DIR... or --run-both"))?;
        let ener = read_report(ener_dir).with_context(|| format!("reading {}", ener_dir.display()))?;
        for dir in &args.econ {
            let econ = read_report(dir).with_context(|| format!("reading {}", dir.display()))?;
            let tariff = TariffSchedule::new(econ.meta.tariff.clone(), econ.meta.tariff_prices)?;
            summary.rows.push(compare_reports(&econ, &ener, &tariff).with_context(|| format!("{}", dir.display()))?);
        }
    }
    print!("{}", summary.to_table());
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("comparison.csv");
    summary
        .write_csv(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn validate_model(args: ValidateArgs) -> Result<u8> {
    let plant = match &args.chillers {
        Some(p) => Plant::new(load_chiller_config(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Plant::default(),
    };
    let checks = validation::full_suite(&plant);
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} of {} checks failed", failed, checks.len());
    Ok(failed.min(100) as u8)
}

fn synth(args: SynthArgs) -> Result<()> {
    let noise = if args.no_noise { Noise::NONE } else { Noise::default() };
    let s = synth_scenario(args.template, args.hours, args.np, noise, args.seed);
    match &args.out {
        Some(p) => write_scenario(&s, fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_scenario(&s, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| 0),
        Command::Compare(a) => compare(a).map(|_| 0),
        Command::ValidateModel(a) => validate_model(a),
        Command::Synth(a) => synth(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(101)
        }
    }
}

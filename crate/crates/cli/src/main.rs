use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use log::info;

use cutinit::active::{
    read_labeled_csv, read_pool_csv, write_labeled_csv, write_pool_csv, write_trace_csv, LabelTable, Metric, Pool,
};
use cutinit::bench::{
    write_report_csv, write_results_csv, BenchError, BenchReport, Experiment, ExperimentConfig, Strategy,
};
use cutinit::cstr::{build_master, CaseStudy, NominalSchedule, ScheduleInstance};
use cutinit::gbd::select_initial_cuts;
use cutinit::lp::write_lp_dump;
use cutinit::policy::InitPolicy;
use cutinit::surrogate::ModelKind;

#[derive(Parser)]
#[command(name = "cutinit", version, about = "Benders decomposition with learned cut initialization")]
struct Cli {
    /// Experiment config (JSON). Defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the learning seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the cost metric.
    #[arg(long, global = true)]
    metric: Option<Metric>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample disturbances and write the pool plus its instances to a new run directory.
    PoolGen,
    /// Label every pool entry by solving it.
    Label {
        #[arg(long)]
        run: PathBuf,
    },
    /// Train a policy from the labeled pool.
    Train {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "al")]
        strategy: Strategy,
        #[arg(long, default_value = "gp")]
        model: ModelKind,
        /// Three hidden layers of 150 units for the MLP.
        #[arg(long)]
        wide: bool,
    },
    /// Solve fresh held-out disturbances under every strategy and write the report.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        n_test: Option<usize>,
    },
    /// Solve one instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Choose the cut count with this policy.
        #[arg(long, conflicts_with = "cuts")]
        policy: Option<PathBuf>,
        /// Fixed cut count (0 for none).
        #[arg(long)]
        cuts: Option<usize>,
        /// Write the initial master problem as a text dump.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn cfg_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn solver_err(e: impl std::fmt::Display) -> Failure {
    Failure::Solver(e.to_string())
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| cfg_err(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli, run: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let path = match (&cli.config, run) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(r)) => Some(r.join("config.json")),
        (None, None) => None,
    };
    let mut cfg = match path {
        Some(p) => ExperimentConfig::from_json(&read(&p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.learning.seed = s;
    }
    if let Some(m) = cli.metric {
        cfg.solver.metric = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Experiment for a run directory, reusing its cached nominal plan.
fn experiment(cfg: ExperimentConfig, run: &Path) -> Result<Experiment, Failure> {
    let case = CaseStudy::new(cfg.case.clone()).map_err(cfg_err)?;
    let cache = run.join("nominal.json");
    let nominal: NominalSchedule = if cache.exists() {
        serde_json::from_str(&read(&cache)?).map_err(cfg_err)?
    } else {
        let n = case.nominal_schedule(&cfg.gbd_config()).map_err(solver_err)?;
        write_atomic(&cache, serde_json::to_string(&n).map_err(cfg_err)?.as_bytes())?;
        n
    };
    Ok(Experiment::with_nominal(cfg, case, nominal)?)
}

fn load_pool(run: &Path, n_max: usize) -> Result<Pool, Failure> {
    let (entries, seed) = read_pool_csv(read(&run.join("pool.csv"))?.as_bytes()).map_err(cfg_err)?;
    let mut instances = BTreeMap::new();
    for e in &entries {
        if !instances.contains_key(&e.instance_id) {
            let p = run.join("instances").join(format!("{}.json", e.instance_id));
            let inst = ScheduleInstance::from_json(&read(&p)?).map_err(cfg_err)?;
            instances.insert(e.instance_id, inst);
        }
    }
    Ok(Pool {
        seed,
        n_max,
        entries,
        instances,
    })
}

fn pool_gen(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli, None)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let run = cfg.paths.runs_dir.join(format!("{}-{stamp}", cfg.hash()));
    fs::create_dir_all(run.join("instances")).map_err(cfg_err)?;
    write_atomic(&run.join("config.json"), cfg.to_json().as_bytes())?;
    let exp = experiment(cfg, &run)?;
    let pool = exp.build_pool();
    for inst in pool.instances.values() {
        write_atomic(&run.join("instances").join(format!("{}.json", inst.id)), inst.to_json().as_bytes())?;
    }
    let mut buf = Vec::new();
    write_pool_csv(&pool.entries, pool.seed, &mut buf).map_err(cfg_err)?;
    write_atomic(&run.join("pool.csv"), &buf)?;
    info!("{} instances, {} pool entries", pool.instances.len(), pool.len());
    println!("{}", run.display());
    Ok(())
}

fn label(cli: &Cli, run: &Path) -> Result<(), Failure> {
    let exp = experiment(load_config(cli, Some(run))?, run)?;
    let pool = load_pool(run, exp.config.learning.n_max)?;
    let set = exp.label_pool(&pool)?;
    if set.len() < pool.len() {
        log::warn!("{} of {} entries could not be labeled", pool.len() - set.len(), pool.len());
    }
    let mut buf = Vec::new();
    write_labeled_csv(&set, &mut buf).map_err(cfg_err)?;
    write_atomic(&run.join("labeled.csv"), &buf)?;
    info!("{} labels, {} censored", set.len(), set.censored_count());
    Ok(())
}

fn train(cli: &Cli, run: &Path, strategy: Strategy, model: ModelKind, wide: bool) -> Result<(), Failure> {
    let mut cfg = load_config(cli, Some(run))?;
    cfg.learning.strategy = strategy;
    cfg.learning.model = model;
    if wide {
        cfg.learning.models.mlp.hidden = vec![150; 3];
    }
    let exp = experiment(cfg, run)?;
    let pool = load_pool(run, exp.config.learning.n_max)?;
    let labeled = read_labeled_csv(read(&run.join("labeled.csv"))?.as_bytes()).map_err(cfg_err)?;
    let trained = exp.train(&pool, &LabelTable::new(&labeled))?;
    let stem = format!("{model}-{strategy}");
    write_atomic(&run.join(format!("policy-{stem}.json")), trained.policy.to_json().as_bytes())?;
    let mut buf = Vec::new();
    write_labeled_csv(&trained.labeled, &mut buf).map_err(cfg_err)?;
    write_atomic(&run.join(format!("train-{stem}.csv")), &buf)?;
    if strategy == Strategy::Al {
        let mut buf = Vec::new();
        write_trace_csv(&trained.trace, &mut buf).map_err(cfg_err)?;
        write_atomic(&run.join(format!("trace-{stem}.csv")), &buf)?;
    }
    info!("policy trained on {} labels", trained.labeled.len());
    Ok(())
}

fn evaluate(cli: &Cli, run: &Path, policy: &Path, n_test: Option<usize>) -> Result<(), Failure> {
    let exp = experiment(load_config(cli, Some(run))?, run)?;
    let pol = InitPolicy::from_json(&read(policy)?).map_err(cfg_err)?;
    let k = n_test.unwrap_or(exp.config.learning.n_test);
    let tests = exp.held_out(k);
    if tests.is_empty() {
        return Err(Failure::Config("no feasible held-out instance".into()));
    }
    let results = exp.evaluate(&pol, &tests)?;
    let report = BenchReport::from_results(&results)?;
    let stem = policy
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("policy")
        .trim_start_matches("policy-")
        .to_string();
    let mut buf = Vec::new();
    write_results_csv(&results, &mut buf)?;
    write_atomic(&run.join(format!("results-{stem}.csv")), &buf)?;
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    write_atomic(&run.join(format!("report-{stem}.csv")), &buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    Ok(())
}

fn solve(
    cli: &Cli,
    instance: &Path,
    policy: Option<&Path>,
    cuts: Option<usize>,
    dump_lp: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(cli, None)?;
    let inst = ScheduleInstance::from_json(&read(instance)?).map_err(cfg_err)?;
    let case = CaseStudy::new(cfg.case.clone()).map_err(cfg_err)?;
    let (n, overhead) = match policy {
        Some(p) => {
            let pol = InitPolicy::from_json(&read(p)?).map_err(cfg_err)?;
            let t = std::time::Instant::now();
            let n = pol.optimal_cuts(&inst).map_err(cfg_err)?;
            (n, t.elapsed().as_secs_f64())
        }
        None => (cuts.unwrap_or(0), 0.0),
    };
    let library = case.cut_library(n.max(2)).map_err(solver_err)?;
    let initial = select_initial_cuts(&library, n).map_err(cfg_err)?;
    if let Some(path) = dump_lp {
        let model = build_master(&inst, &case.config.economics, &initial, case.config.formulation).map_err(cfg_err)?;
        let mut buf = Vec::new();
        write_lp_dump(&model, &mut buf).map_err(cfg_err)?;
        write_atomic(path, &buf)?;
    }
    let r = case.solve(&inst, &initial, &cfg.gbd_config()).map_err(solver_err)?;
    let out = serde_json::json!({
        "instance_id": inst.id,
        "n_cuts": n,
        "policy_overhead_seconds": overhead,
        "objective": r.upper,
        "lower_bound": r.lower,
        "iterations": r.iterations,
        "converged": r.converged,
        "work_units": r.work_units,
        "wall_seconds": r.wall_seconds,
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(cfg_err)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::PoolGen => pool_gen(&cli),
        Command::Label { run } => label(&cli, run),
        Command::Train {
            run,
            strategy,
            model,
            wide,
        } => train(&cli, run, *strategy, *model, *wide),
        Command::Evaluate { run, policy, n_test } => evaluate(&cli, run, policy, *n_test),
        Command::Solve {
            instance,
            policy,
            cuts,
            dump_lp,
        } => solve(&cli, instance, policy.as_deref(), *cuts, dump_lp.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(2)
        }
    }
}

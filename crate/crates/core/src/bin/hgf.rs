use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hgf::inference::{
    compare, derive_seed, map_fit, recover, sample, summarize, Candidate, FitMode, Model, RecoveryConfig, Subject,
    Summary, Target,
};
use hgf::io::{
    plot_trajectory_svg, read_timeseries_csv, read_trajectory_csv, write_comparison_json, write_inputs_csv, write_json,
    write_recovery_csv, write_samples_csv, write_trajectory_csv, InputSeries, ModelConfig, NetworkSpec, SwitchingTask,
};
use hgf::response::simulate_actions;
use hgf::{HgfError, Result};

#[derive(Parser)]
#[command(name = "hgf", version, about = "Simulate, fit and compare generalized HGF models of binary choice data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate inputs and responses from a configured agent
    Simulate(SimulateArgs),
    /// Maximum a posteriori fit of one data set
    Fit(FitArgs),
    /// Posterior sampling for one data set
    Sample(SampleArgs),
    /// Parameter recovery on simulated subjects
    Recover(RecoverArgs),
    /// Rank several models on the same data by ELPD
    Compare(CompareArgs),
    /// Render a trajectory file as SVG
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Switching,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "switching")]
    task: Task,
    #[arg(long, default_value_t = 320)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the optimizer seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Also write trajectory.svg
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write trajectory.svg
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    subjects: usize,
    #[arg(long, default_value_t = 320)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Model configuration; give at least two
    #[arg(long = "config", required = true, num_args = 1)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Recover(a) => recover_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn load_subject(config: &ModelConfig, data: &Path) -> Result<Subject> {
    let kinds = config.node_kinds()?;
    let input_kinds: Vec<_> = config.input_nodes.iter().map(|&n| kinds[n]).collect();
    let series = read_timeseries_csv(data, Some(&input_kinds))?.with_input_nodes(&config.input_nodes)?;
    Subject::from_series(series)
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let config = ModelConfig::from_path(&a.config)?;
    if config.input_nodes.len() != 1 {
        return Err(HgfError::Validation("the switching task feeds exactly one input node".into()));
    }
    let Task::Switching = a.task;
    let u = SwitchingTask::with_trials(a.trials).generate(derive_seed(a.seed, 0))?;
    let inputs = InputSeries::single(config.input_nodes[0], &u);
    let (_, traj) = config.build_network()?.run(&inputs)?;
    let actions = simulate_actions(&traj, &config.response_model()?, derive_seed(a.seed, 1))?;
    out_dir(&a.out)?;
    write_inputs_csv(&inputs.with_actions(actions), a.out.join("data.csv"))?;
    write_trajectory_csv(&traj, a.out.join("trajectory.csv"))?;
    Ok(())
}

#[derive(Serialize)]
struct MapSummary<'a> {
    method: &'static str,
    parameters: Vec<MapParameter<'a>>,
    log_posterior: f64,
    trials: usize,
}

#[derive(Serialize)]
struct MapParameter<'a> {
    name: &'a str,
    target: String,
    value: f64,
    at_bound: bool,
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let config = ModelConfig::from_path(&a.config)?;
    let model = config.model()?;
    let subject = load_subject(&config, &a.data)?;
    let mut optimizer = config.optimizer;
    if let Some(seed) = a.seed {
        optimizer.seed = seed;
    }
    let estimate = map_fit(&config.space, &subject, &model, &optimizer)?;
    let traj = model.trajectory(&config.space, &estimate.values, &subject.inputs)?;
    out_dir(&a.out)?;
    write_trajectory_csv(&traj, a.out.join("trajectory.csv"))?;
    let summary = MapSummary {
        method: "map",
        parameters: config
            .space
            .parameters
            .iter()
            .enumerate()
            .map(|(i, p)| MapParameter {
                name: &estimate.names[i],
                target: p.target.to_string(),
                value: estimate.values[i],
                at_bound: estimate.at_bound[i],
            })
            .collect(),
        log_posterior: estimate.log_posterior,
        trials: subject.len(),
    };
    write_json(&summary, a.out.join("summary.json"))?;
    if a.plot {
        plot_trajectory_svg(&traj, a.out.join("trajectory.svg"))?;
    }
    Ok(())
}

fn sampler_overrides(
    config: &mut ModelConfig,
    chains: Option<usize>,
    draws: Option<usize>,
    warmup: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let s = &mut config.sampler;
    s.chains = chains.unwrap_or(s.chains);
    s.draws = draws.unwrap_or(s.draws);
    s.warmup = warmup.unwrap_or(s.warmup);
    s.seed = seed.unwrap_or(s.seed);
    s.validate()
}

fn posterior_means(summary: &Summary) -> Vec<f64> {
    summary.parameters.iter().map(|p| p.mean).collect()
}

fn sample_cmd(a: SampleArgs) -> Result<()> {
    let mut config = ModelConfig::from_path(&a.config)?;
    sampler_overrides(&mut config, a.chains, a.draws, a.warmup, a.seed)?;
    let model = config.model()?;
    let subject = load_subject(&config, &a.data)?;
    let samples = sample(&config.space, &subject, &model, &config.sampler)?;
    let summary = summarize(&samples, config.hdi_mass)?;
    out_dir(&a.out)?;
    write_samples_csv(&samples, a.out.join("samples.csv"))?;
    write_json(&summary, a.out.join("summary.json"))?;
    let traj = model.trajectory(&config.space, &posterior_means(&summary), &subject.inputs)?;
    write_trajectory_csv(&traj, a.out.join("trajectory.csv"))?;
    if a.plot {
        plot_trajectory_svg(&traj, a.out.join("trajectory.svg"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RecoverySummary<'a> {
    subjects: usize,
    trials: usize,
    seed: u64,
    parameters: Vec<RecoveredParameter<'a>>,
    excluded: &'a [usize],
}

#[derive(Serialize)]
struct RecoveredParameter<'a> {
    name: &'a str,
    /// Pearson r on the unconstrained scale.
    correlation: Option<f64>,
    /// Simulation range on the unconstrained scale.
    unconstrained_truth_range: (f64, f64),
}

fn truth_range(target: &Target) -> Result<(f64, f64)> {
    match target {
        Target::InverseTemperature => Ok((0.5f64.ln(), 4f64.ln())),
        t if t.to_string().ends_with(".tonic_volatility") => Ok((-4.5, -1.5)),
        t => Err(HgfError::Validation(format!("no default simulation range for `{t}`"))),
    }
}

fn recover_cmd(a: RecoverArgs) -> Result<()> {
    let config = ModelConfig::from_path(&a.config)?;
    let NetworkSpec::Preset { spec, .. } = &config.network else {
        return Err(HgfError::Validation("recovery simulates from a preset network".into()));
    };
    let recovery = RecoveryConfig {
        subjects: a.subjects,
        trials: a.trials,
        preset: spec.clone(),
        response: config.response_model()?,
        truth_ranges: config
            .space
            .parameters
            .iter()
            .map(|p| truth_range(&p.target))
            .collect::<Result<_>>()?,
        space: config.space.clone(),
        mode: FitMode::Map(config.optimizer),
        workers: a.workers,
        seed: a.seed,
    };
    let report = recover(&recovery)?;
    out_dir(&a.out)?;
    write_recovery_csv(&report, a.out.join("recovery.csv"))?;
    let summary = RecoverySummary {
        subjects: a.subjects,
        trials: a.trials,
        seed: a.seed,
        parameters: report
            .names
            .iter()
            .zip(&report.correlations)
            .zip(&recovery.truth_ranges)
            .map(|((name, &r), &range)| RecoveredParameter {
                name,
                correlation: r.is_finite().then_some(r),
                unconstrained_truth_range: range,
            })
            .collect(),
        excluded: &report.excluded,
    };
    write_json(&summary, a.out.join("summary.json"))?;
    Ok(())
}

fn model_name(path: &Path, index: usize) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("model{index}"))
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    if a.configs.len() < 2 {
        return Err(HgfError::Validation("compare needs at least two --config files".into()));
    }
    let mut configs = Vec::new();
    for path in &a.configs {
        let mut c = ModelConfig::from_path(path)?;
        sampler_overrides(&mut c, a.chains, a.draws, a.warmup, a.seed)?;
        configs.push(c);
    }
    let mut names: Vec<String> = a.configs.iter().enumerate().map(|(i, p)| model_name(p, i)).collect();
    if (1..names.len()).any(|i| names[..i].contains(&names[i])) {
        names = names.iter().enumerate().map(|(i, n)| format!("{i}:{n}")).collect();
    }
    if configs.iter().any(|c| c.input_nodes != configs[0].input_nodes) {
        return Err(HgfError::Validation("compared models must share their input nodes".into()));
    }
    let subject = load_subject(&configs[0], &a.data)?;
    let mut fitted: Vec<(Model, _)> = Vec::new();
    for c in &configs {
        let model = c.model()?;
        let samples = sample(&c.space, &subject, &model, &c.sampler)?;
        fitted.push((model, samples));
    }
    let candidates: Vec<Candidate<'_>> = fitted
        .iter()
        .zip(&configs)
        .zip(&names)
        .map(|(((model, samples), c), name)| Candidate {
            name: name.clone(),
            model,
            space: &c.space,
            samples,
        })
        .collect();
    let report = compare(&candidates, &subject)?;
    out_dir(&a.out)?;
    write_comparison_json(&report, a.out.join("comparison.json"))?;
    Ok(())
}

fn plot_cmd(a: PlotArgs) -> Result<()> {
    let traj = read_trajectory_csv(&a.trajectory)?;
    plot_trajectory_svg(&traj, &a.out)
}

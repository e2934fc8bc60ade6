//! Command-line front end for the `anysched` library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use anysched::analysis::{classify_hazard, compare_restart_vs_interleave, optimal_restart_point};
use anysched::io;
use anysched::latinsq::{self, SolveStatus, Workload};
use anysched::optimizer::optimize;
use anysched::simulator::{self, Baseline, BaselineConfig, QualityBasis};
use anysched::{CostModel, OptimizerConfig, Profile, Schedule, StrategyReport, ZetaSequence};

const PROFILE_HELP: &str = "Profile as family:param1:param2:p. Families: uniform:lo:hi, exp:rate:shift, \
tnormal:mean:sd, lognormal:mu:sigma, peaks:k:span, atoms:10@0.5,40@0.5 (time@mass), pwl:0@0,2@1 (time@F). \
Repeat once per process.";

#[derive(Parser)]
#[command(name = "anysched", version, about = "Optimal scheduling of anytime processes on one shared resource")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an empirical profile from a `steps,solved` sample log.
    ProfileFit {
        #[arg(long)]
        samples: PathBuf,
        /// Step cap used when the samples were collected; becomes the horizon.
        #[arg(long)]
        cutoff: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate t, F, f, S and the hazard of one profile.
    ProfileShow {
        #[command(flatten)]
        profiles: ProfileArgs,
        /// Number of evenly spaced rows across the support.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute the optimal suspend-resume schedule and write its zeta file.
    ScheduleOptimize {
        #[command(flatten)]
        profiles: ProfileArgs,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the schedule as segments.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
        /// Write one line per expanded node of the winning search tree.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Expected cost of a schedule, analytically and by simulation.
    ScheduleEval {
        #[command(flatten)]
        profiles: ProfileArgs,
        /// Schedule file (process,duration,intensity per line).
        #[arg(long, conflicts_with = "zetas", required_unless_present = "zetas")]
        schedule: Option<PathBuf>,
        /// Zeta file (`n=` header, one value per line).
        #[arg(long)]
        zetas: Option<PathBuf>,
        #[arg(long, default_value = "1:0", value_parser = parse_cost)]
        cost: CostModel,
        #[arg(long)]
        deadline: Option<f64>,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the optimal schedule with the baseline strategies as CSV.
    StrategyCompare {
        #[command(flatten)]
        profiles: ProfileArgs,
        #[command(flatten)]
        opt: OptArgs,
        #[command(flatten)]
        mc: McArgs,
        /// Strategy that relative quality is measured against.
        #[arg(long, default_value = "sequential")]
        reference: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Restart points and the restart-versus-interleaving comparison.
    RestartAnalyze {
        #[command(flatten)]
        profiles: ProfileArgs,
        /// Cost charged per restart.
        #[arg(long, default_value_t = 1.0)]
        restart_cost: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a partially filled Latin square.
    LatinGenerate {
        #[command(flatten)]
        work: LatinArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve a Latin square instance with First-Fail search.
    LatinSolve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 5000)]
        step_cap: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build an empirical profile by solving fresh instances.
    LatinProfile {
        #[command(flatten)]
        work: LatinArgs,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the raw sample log.
        #[arg(long)]
        sample_log: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the optimal and baseline schedules on fresh instance pairs.
    LatinEvaluate {
        #[command(flatten)]
        work: LatinArgs,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sequential")]
        reference: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long = "profile", aliases = ["profile1", "profile2", "profile3"], help = PROFILE_HELP)]
    specs: Vec<String>,
    /// Key-value profile file; repeat once per process.
    #[arg(long = "profile-file", conflicts_with = "specs")]
    files: Vec<PathBuf>,
}

impl ProfileArgs {
    fn load(&self) -> Result<Vec<Profile>> {
        let mut out = Vec::new();
        for s in &self.specs {
            out.push(io::parse_profile_spec(s)?);
        }
        for f in &self.files {
            out.push(io::parse_profile(&read(f)?).with_context(|| format!("{}", f.display()))?);
        }
        if out.is_empty() {
            bail!("no profiles given; use --profile or --profile-file");
        }
        Ok(out)
    }

    fn load_one(&self) -> Result<Profile> {
        let mut ps = self.load()?;
        if ps.len() != 1 {
            bail!("exactly one profile is expected");
        }
        Ok(ps.remove(0))
    }
}

#[derive(Args)]
struct OptArgs {
    /// Linear cost weights a:b for u = a t + b (sum of subjective times).
    #[arg(long, default_value = "1:0", value_parser = parse_cost)]
    cost: CostModel,
    #[arg(long)]
    deadline: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    eps_fail: f64,
    #[arg(long, default_value_t = 1e12)]
    cost_cap: f64,
    /// Maximum search-tree depth.
    #[arg(long, default_value_t = 64)]
    depth: usize,
}

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            eps_fail: self.eps_fail,
            cost_cap: self.cost_cap,
            max_depth: self.depth,
            start_depth: d.start_depth.min(self.depth),
            deadline: self.deadline,
            ..d
        }
    }

    fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig { eps_fail: self.eps_fail, deadline: self.deadline, ..BaselineConfig::default() }
    }
}

#[derive(Args)]
struct McArgs {
    /// Monte Carlo trials (0 skips simulation).
    #[arg(long, default_value_t = 0)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LatinArgs {
    /// Square order N.
    #[arg(long, default_value_t = 10)]
    order: usize,
    /// Fraction of cells pre-filled.
    #[arg(long, default_value_t = 0.1)]
    fill: f64,
    #[arg(long, default_value_t = 5000)]
    step_cap: u64,
}

impl LatinArgs {
    fn workload(&self) -> Workload {
        Workload { n: self.order, fill: self.fill, step_cap: self.step_cap }
    }
}

fn parse_cost(s: &str) -> std::result::Result<CostModel, String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: f64 = a.parse().map_err(|_| format!("`{a}` is not a number"))?;
    let b: f64 = b.parse().map_err(|_| format!("`{b}` is not a number"))?;
    CostModel::linear(a, b).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn strategies(
    profiles: &[Profile],
    opt: &OptArgs,
) -> Result<Vec<(String, Schedule)>> {
    let best = optimize(profiles, &opt.cost, &opt.config())?;
    if best.approximate {
        eprintln!("note: search hit its depth or node limit; the optimal schedule is approximate");
    }
    let mut out = vec![("optimal".to_string(), best.zetas.to_schedule())];
    let bcfg = opt.baseline_config();
    for kind in [Baseline::Sequential, Baseline::Simultaneous { quantum: None }, Baseline::SingleSwitch] {
        out.push((kind.name().to_string(), simulator::baseline(kind, profiles, &opt.cost, &bcfg)?));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    match cli.command {
        Command::ProfileFit { samples, cutoff, output } => {
            let data = io::parse_samples(&read(&samples)?).with_context(|| format!("{}", samples.display()))?;
            let prof = anysched::fit_empirical(&data, cutoff)?;
            emit(output.as_deref(), &io::format_profile(&prof))
        }
        Command::ProfileShow { profiles, grid, output } => {
            let prof = profiles.load_one()?;
            if grid < 2 {
                bail!("--grid needs at least 2 rows");
            }
            let (lo, hi) = prof.display_range();
            let mut text = String::from("t,F,f,S,h\n");
            for k in 0..grid {
                let t = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
                let e = prof.evaluate(t)?;
                let h = e.hazard.map_or("undefined".to_string(), |h| h.to_string());
                text += &format!("{t},{},{},{},{h}\n", e.cdf, e.density, e.survival);
            }
            emit(output.as_deref(), &text)
        }
        Command::ScheduleOptimize { profiles, opt, output, schedule_out, trace } => {
            let ps = profiles.load()?;
            let mut cfg = opt.config();
            cfg.trace = trace.is_some();
            let res = optimize(&ps, &opt.cost, &cfg)?;
            eprintln!(
                "expected cost {} ({} nodes expanded{})",
                res.expected_cost,
                res.node_stats.expanded,
                if res.approximate { ", approximate" } else { "" }
            );
            if let Some(p) = schedule_out {
                emit(Some(&p), &io::format_schedule(&res.zetas.to_schedule()))?;
            }
            if let Some(p) = trace {
                emit(Some(&p), &io::format_trace(&res.trace))?;
            }
            emit(output.as_deref(), &io::format_zetas(&res.zetas))
        }
        Command::ScheduleEval { profiles, schedule, zetas, cost, deadline, mc, output } => {
            let ps = profiles.load()?;
            let sch = match (schedule, zetas) {
                (Some(p), _) => io::parse_schedule(&read(&p)?, Some(ps.len())).with_context(|| format!("{}", p.display()))?,
                (None, Some(p)) => {
                    let z: ZetaSequence = io::parse_zetas(&read(&p)?).with_context(|| format!("{}", p.display()))?;
                    z.to_schedule()
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            if sch.n_processes() != ps.len() {
                bail!("schedule has {} processes but {} profiles were given", sch.n_processes(), ps.len());
            }
            let mut text = format!("analytic_cost={}\n", anysched::cost::expected_cost(&sch, &ps, &cost, deadline)?);
            if mc.trials > 0 {
                let est = simulator::monte_carlo_cost(&sch, &ps, &cost, mc.trials, mc.seed)?;
                text += &format!("mc_cost={}\nmc_stderr={}\n", est.mean, est.stderr);
            }
            emit(output.as_deref(), &text)
        }
        Command::StrategyCompare { profiles, opt, mc, reference, output } => {
            let ps = profiles.load()?;
            let mut entries = Vec::new();
            for (name, sch) in strategies(&ps, &opt)? {
                let analytic = anysched::cost::expected_cost(&sch, &ps, &opt.cost, opt.deadline)?;
                let est = if mc.trials > 0 {
                    Some(simulator::monte_carlo_cost(&sch, &ps, &opt.cost, mc.trials, mc.seed)?)
                } else {
                    None
                };
                entries.push((name, analytic, est));
            }
            let report = StrategyReport::new(&reference, QualityBasis::Analytic, entries)?;
            emit(output.as_deref(), &report.to_csv())
        }
        Command::RestartAnalyze { profiles, restart_cost, output } => {
            let prof = profiles.load_one()?;
            let class = classify_hazard(&prof, 1000)?;
            let free = optimal_restart_point(&prof, None)?;
            let cmp = compare_restart_vs_interleave(&prof, restart_cost)?;
            let mut text = format!("hazard_shape={:?}\npolicy={:?}\n", class.shape, class.policy);
            text += &format!("restart_point={}\nrestart_expected={}\n", free.t, free.value);
            text += &cmp.to_report();
            emit(output.as_deref(), &text)
        }
        Command::LatinGenerate { work, seed, output } => {
            let inst = latinsq::generate_instance(work.order, work.fill, seed)?;
            emit(output.as_deref(), &io::format_instance(&inst))
        }
        Command::LatinSolve { instance, step_cap, output } => {
            let inst = io::parse_instance(&read(&instance)?).with_context(|| format!("{}", instance.display()))?;
            let out = latinsq::solve_first_fail(&inst, step_cap);
            let status = match out.status {
                SolveStatus::Solved => "solved",
                SolveStatus::Unsatisfiable => "unsatisfiable",
                SolveStatus::CutOff => "cut-off",
            };
            let mut text = format!("status={status}\nsteps={}\n", out.steps);
            if let Some(sol) = out.solution {
                text += &io::format_instance(&sol);
            }
            emit(output.as_deref(), &text)
        }
        Command::LatinProfile { work, samples, seed, sample_log, output } => {
            let w = work.workload();
            let data = latinsq::collect_samples(&w, samples, seed)?;
            if let Some(p) = sample_log {
                emit(Some(&p), &io::format_samples(&data))?;
            }
            let prof = anysched::fit_empirical(&data, w.step_cap)?;
            emit(output.as_deref(), &io::format_profile(&prof))
        }
        Command::LatinEvaluate { work, samples, pairs, seed, reference, output } => {
            let w = work.workload();
            let prof = latinsq::build_profile(&w, samples, seed)?;
            let opt = OptArgs {
                cost: CostModel::time(),
                deadline: None,
                eps_fail: 1e-6,
                cost_cap: 1e12,
                depth: 64,
            };
            let strats = strategies(&[prof.clone(), prof.clone()], &opt)?;
            // Pairs use their own seed stream so they never repeat profiling instances.
            let eval = latinsq::evaluate_pairs(&prof, &strats, &w, pairs, seed.wrapping_add(1), &reference)?;
            emit(output.as_deref(), &eval.report.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

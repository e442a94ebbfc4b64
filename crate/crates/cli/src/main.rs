use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fermi_gibbs_core::expansion::{expand_coefficients, UpdateContext, DEFAULT_TERM_CAP};
use fermi_gibbs_core::io::{config_digest, write_estimates_csv, write_samples_jsonl, HeaderRow};
use fermi_gibbs_core::oracle::set_dense_cap;
use fermi_gibbs_core::rng::stream_rng;
use fermi_gibbs_core::sampler::{
    estimate_observable, run_trajectory, sample_many, GibbsConfig, SamplerParams, Strategy, WalkConfig,
};
use fermi_gibbs_core::syk::{separation_report, syk_generate, Normalization, OptConfig};
use fermi_gibbs_core::verify::{random, run_oracle_suite};
use fermi_gibbs_core::{Error as CoreError, LocalHamiltonian, MajoranaString};

const DENSE_CAP_ENV: &str = "FERMI_GIBBS_DENSE_CAP";

#[derive(Parser)]
#[command(name = "fermi-gibbs", version, about = "Gaussian-mixture sampling of high-temperature fermionic Gibbs states")]
struct Cli {
    /// Maximum number of modes for dense oracle matrices.
    #[arg(long, global = true, env = DENSE_CAP_ENV)]
    dense_cap: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print locality, degree and temperature thresholds of a Hamiltonian.
    Info { hamiltonian: PathBuf },
    /// Dump the exhaustive expansion of one update operator.
    Expand {
        #[arg(long)]
        hamiltonian: PathBuf,
        #[arg(long)]
        beta: f64,
        /// Majorana index (1-based) removed from the full set; defaults to 1.
        #[arg(long, default_value_t = 1)]
        remove: usize,
        #[arg(long, default_value_t = 2)]
        tmax: u32,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw Gibbs samples and write them as JSONL.
    Sample {
        #[command(flatten)]
        run: SampleArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate observables from Gibbs samples and write a CSV table.
    Estimate {
        #[command(flatten)]
        run: SampleArgs,
        /// JSON list of Majorana strings, e.g. ["+i g1 g2"].
        #[arg(long)]
        observables: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run structural trajectories on random Hamiltonians and count invariant failures.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        trajectories: usize,
        #[arg(long, default_value_t = 10)]
        hamiltonians: usize,
        #[arg(long, default_value_t = 4)]
        n_modes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the dense oracle-equivalence suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// SYK energy curve against the best Gaussian energy.
    Syk {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        beta_max: f64,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = NormArg::None)]
        normalization: NormArg,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct SampleArgs {
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Rejection)]
    strategy: StrategyArg,
    /// Override the computed degree truncation.
    #[arg(long)]
    tmax_override: Option<u32>,
    #[arg(long, default_value_t = 10_000_000)]
    max_attempts: u64,
    #[arg(long, default_value_t = 2000)]
    burn_in: u64,
    /// Worker threads (0 = available parallelism).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Rejection,
    Walk,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    None,
    QHalf,
    QMinusOneHalf,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::None => Normalization::None,
            NormArg::QHalf => Normalization::QHalf,
            NormArg::QMinusOneHalf => Normalization::QMinusOneHalf,
        }
    }
}

fn load_hamiltonian(path: &Path) -> Result<LocalHamiltonian> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(LocalHamiltonian::from_json_str(&text)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

impl SampleArgs {
    fn gibbs_config(&self) -> GibbsConfig {
        let strategy = match self.strategy {
            StrategyArg::Rejection => Strategy::Rejection { max_attempts: self.max_attempts },
            StrategyArg::Walk => Strategy::Walk(WalkConfig { burn_in: self.burn_in, ..WalkConfig::default() }),
        };
        GibbsConfig { epsilon: self.epsilon, strategy, t_max_override: self.tmax_override }
    }

    /// Everything that determines the output, excluding worker count and paths.
    fn digest_config(&self, h: &LocalHamiltonian, cfg: &GibbsConfig) -> Value {
        json!({
            "hamiltonian": h.to_document(),
            "beta": self.beta,
            "gibbs": cfg,
            "t_max": cfg.t_max(h.n_modes()),
            "samples": self.samples,
            "seed": self.seed,
        })
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(cap) = cli.dense_cap {
        set_dense_cap(cap);
    }
    match cli.command {
        Command::Info { hamiltonian } => {
            let h = load_hamiltonian(&hamiltonian)?;
            let (bs, bg) = h.beta_thresholds();
            print_json(&json!({
                "n_modes": h.n_modes(),
                "n_terms": h.terms().len(),
                "locality": h.locality(),
                "degree": h.degree(),
                "sampler_eligible": h.sampler_eligible(),
                "beta_structural": bs,
                "beta_sampling": bg,
            }));
        }
        Command::Expand { hamiltonian, beta, remove, tmax, cap, out } => {
            let h = load_hamiltonian(&hamiltonian)?;
            if remove == 0 || remove > h.n_majoranas() {
                return Err(CoreError::IndexOutOfRange { index: remove, n_modes: h.n_modes() }.into());
            }
            let prev = h.full_sites();
            let mut next = prev;
            next.remove(remove - 1);
            let ctx = UpdateContext::new(&h, prev, next, beta)?;
            let terms = expand_coefficients(&ctx, tmax, cap)?;
            let rows: Vec<Value> = terms
                .iter()
                .map(|t| json!({"degree": t.degree, "coeff": t.coeff, "string": t.string.to_string(), "mu_prob": t.mu_prob}))
                .collect();
            let doc = json!({"beta": beta, "removed": remove, "tmax": tmax, "terms": rows});
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    serde_json::to_writer_pretty(&mut w, &doc)?;
                    w.flush()?;
                    print_json(&json!({"command": "expand", "terms": terms.len(), "out": p}));
                }
                None => print_json(&doc),
            }
        }
        Command::Sample { run, out } => {
            let h = load_hamiltonian(&run.hamiltonian)?;
            let cfg = run.gibbs_config();
            let config = run.digest_config(&h, &cfg);
            let start = Instant::now();
            let samples = sample_many(&h, run.beta, &cfg, run.seed, run.samples, run.workers)?;
            let attempts: u64 = samples.iter().map(|s| s.attempts).sum();
            let header = HeaderRow::new(config, samples.len());
            let states: Vec<_> = samples.into_iter().map(|s| s.state).collect();
            write_samples_jsonl(create(&out)?, &header, &states)?;
            print_json(&json!({
                "command": "sample",
                "config_digest": header.config_digest,
                "samples": states.len(),
                "attempts": attempts,
                "acceptance_rate": if attempts > 0 { states.len() as f64 / attempts as f64 } else { 0.0 },
                "elapsed_s": start.elapsed().as_secs_f64(),
                "out": out,
            }));
        }
        Command::Estimate { run, observables, out } => {
            let h = load_hamiltonian(&run.hamiltonian)?;
            let text = std::fs::read_to_string(&observables).with_context(|| format!("reading {}", observables.display()))?;
            let names: Vec<String> = serde_json::from_str(&text).context("observables must be a JSON list of strings")?;
            let obs = names.iter().map(|s| s.parse::<MajoranaString>()).collect::<Result<Vec<_>, _>>()?;
            let cfg = run.gibbs_config();
            let mut config = run.digest_config(&h, &cfg);
            config["observables"] = json!(names);
            let digest = config_digest(&config);
            let start = Instant::now();
            let est = estimate_observable(&h, run.beta, &cfg, &obs, run.samples, run.seed, run.workers)?;
            write_estimates_csv(create(&out)?, &digest, &est)?;
            print_json(&json!({
                "command": "estimate",
                "config_digest": digest,
                "samples": run.samples,
                "estimates": est,
                "elapsed_s": start.elapsed().as_secs_f64(),
                "out": out,
            }));
        }
        Command::Fuzz { trajectories, hamiltonians, n_modes, seed } => {
            let start = Instant::now();
            let mut failures = Vec::new();
            let per = trajectories.div_ceil(hamiltonians.max(1));
            let mut run_count = 0usize;
            for k in 0..hamiltonians.max(1) {
                let mut rng = stream_rng(seed, k as u64);
                let h = random::mixed(n_modes, 2 * n_modes, 4, &mut rng);
                let (beta, _) = h.beta_thresholds();
                let params = SamplerParams::structural();
                for t in 0..per {
                    if run_count == trajectories {
                        break;
                    }
                    run_count += 1;
                    let mut trng = stream_rng(seed ^ 0xF022, (k * per + t) as u64);
                    if let Err(e) = run_trajectory(&h, beta, &params, &mut trng) {
                        failures.push(json!({"hamiltonian": k, "trajectory": t, "error": e.to_string()}));
                    }
                }
            }
            let ok = failures.is_empty();
            print_json(&json!({
                "command": "fuzz",
                "trajectories": run_count,
                "hamiltonians": hamiltonians,
                "failures": failures,
                "passed": ok,
                "elapsed_s": start.elapsed().as_secs_f64(),
            }));
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Verify { seed } => {
            let start = Instant::now();
            let outcomes = run_oracle_suite(seed)?;
            for o in &outcomes {
                eprintln!(
                    "{:<48} {}  max_err={:.3e}  tol={:.1e}",
                    o.name,
                    if o.passed { "PASS" } else { "FAIL" },
                    o.max_error,
                    o.tolerance
                );
            }
            let ok = outcomes.iter().all(|o| o.passed);
            print_json(&json!({
                "command": "verify",
                "checks": outcomes,
                "passed": ok,
                "elapsed_s": start.elapsed().as_secs_f64(),
            }));
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Syk { n, q, seed, beta_max, grid, normalization, restarts, iterations, workers, out } => {
            if beta_max.is_nan() || beta_max < 0.0 {
                bail!(CoreError::Invalid(format!("beta-max {beta_max} must be nonnegative")));
            }
            let start = Instant::now();
            let inst = syk_generate(n, q, seed)?;
            let norm: Normalization = normalization.into();
            let h = inst.hamiltonian(norm)?;
            let opt = OptConfig { iterations, restarts, seed, workers, ..OptConfig::default() };
            let report = separation_report(&h, beta_max, grid, &opt)?;
            let config = json!({"n": n, "q": q, "seed": seed, "beta_max": beta_max, "grid": grid,
                                "normalization": norm, "opt": opt});
            let digest = config_digest(&config);
            let mut w = create(&out)?;
            writeln!(w, "# config_digest={digest}")?;
            w.write_all(report.to_csv().as_bytes())?;
            w.flush()?;
            let (m1, m2) = inst.moments(norm);
            print_json(&json!({
                "command": "syk",
                "config_digest": digest,
                "couplings": inst.couplings.len(),
                "first_moment": m1,
                "second_moment": m2,
                "operator_norm": report.operator_norm,
                "D": report.d,
                "S": report.s,
                "best_gaussian_energy": report.best_gaussian_energy,
                "monotone": report.monotone,
                "any_certificate": report.any_certificate,
                "elapsed_s": start.elapsed().as_secs_f64(),
                "out": out,
            }));
            if !report.monotone {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &anyhow::Error) -> ExitCode {
    match e.downcast_ref::<CoreError>() {
        Some(ce) if ce.is_assertion() => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

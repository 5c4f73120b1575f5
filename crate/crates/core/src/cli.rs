//! Command-line front end: `info`, `simulate`, `surface` and `verify`.
//!
//! Exit codes: 0 on success, 1 for invalid input or I/O trouble, 2 when a
//! verification check fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, capacity_surface, report, CapacityReport};
use crate::oracle::{self, PhaseDivisor, REFERENCE_MATRICES};
use crate::protocol::{
    self, branch_probabilities, conversion_step, encoded_basis, encoding_operator, initial_state,
    purification_unitary, run_protocol, with_auxiliaries, ChannelSpec, MessageChoice,
};
use crate::qstate::{self, outcome_probabilities, NORM_TOL, UNITARY_TOL};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_VERIFY_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "densecode",
    version,
    about = "Probabilistic dense coding over non-symmetric entangled qudit channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Branch table, average information and side-channel cost.
    Info(CommonArgs),
    /// Seeded Monte Carlo protocol round trips.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Send this message instead of a uniformly random one.
        #[arg(long)]
        message: Option<u64>,
        /// Fail when --message is out of range for the sampled branch
        /// (otherwise it is clamped).
        #[arg(long)]
        strict: bool,
    },
    /// CSV grid of I_ave over (α₀₁², α₀₂²) for two 3 ⊗ 2 pairs.
    Surface(CommonArgs),
    /// Brute-force cross-checks of the protocol.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Phase divisor used for the orthogonality check.
        #[arg(long, value_enum, default_value_t = DivisorArg::QMinusR)]
        phase_divisor: DivisorArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DivisorArg {
    #[value(name = "q-r")]
    QMinusR,
    #[value(name = "q")]
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file with RunConfig fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sender dimension.
    #[arg(long)]
    pub p: Option<usize>,
    /// Receiver dimension.
    #[arg(long)]
    pub q: Option<usize>,
    /// Number of entangled pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Squared coefficients, one comma-separated list per pair.
    #[arg(long, num_args = 1.., value_delimiter = ' ', conflicts_with = "alphas")]
    pub alphas_sq: Option<Vec<String>>,
    /// Raw coefficients, one comma-separated list per pair.
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    pub alphas: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Fully merged run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub pairs: Option<usize>,
    pub alphas_sq: Option<Vec<Vec<f64>>>,
    pub alphas: Option<Vec<Vec<f64>>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::invalid(e.to_string())
    }
}

fn parse_lists(lists: &[String]) -> Result<Vec<Vec<f64>>, CliError> {
    lists
        .iter()
        .filter(|s| !s.is_empty())
        .map(|list| {
            list.split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| {
                        CliError::invalid(format!("bad coefficient {x:?} in {list:?}"))
                    })
                })
                .collect()
        })
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("bad config {}: {e}", path.display())))
    }

    /// Config file values (if any) overridden by explicit flags.
    pub fn from_args(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if args.$field.is_some() {
                    cfg.$field = args.$field.clone();
                }
            )*};
        }
        take!(p, q, pairs, seed, trials, steps, out, format);
        if let Some(lists) = &args.alphas_sq {
            cfg.alphas_sq = Some(parse_lists(lists)?);
            cfg.alphas = None;
        }
        if let Some(lists) = &args.alphas {
            cfg.alphas = Some(parse_lists(lists)?);
            cfg.alphas_sq = None;
        }
        Ok(cfg)
    }

    /// Defaults: p = 3, q = 2, maximal coefficients. A single coefficient
    /// list is reused for every pair when `pairs` asks for more.
    pub fn channel(&self) -> Result<ChannelSpec, CliError> {
        let p = self.p.unwrap_or(3);
        let q = self.q.unwrap_or(2);
        if self.alphas.is_some() && self.alphas_sq.is_some() {
            return Err(CliError::invalid(
                "give either alphas or alphas_sq, not both",
            ));
        }
        let (lists, squared) = match (&self.alphas_sq, &self.alphas) {
            (Some(l), _) => (Some(l.clone()), true),
            (None, Some(l)) => (Some(l.clone()), false),
            (None, None) => (None, true),
        };
        let Some(mut lists) = lists else {
            return Ok(ChannelSpec::maximal(p, q, self.pairs.unwrap_or(2))?);
        };
        if let Some(n) = self.pairs {
            if lists.len() == 1 && n > 1 {
                lists = vec![lists[0].clone(); n];
            } else if lists.len() != n {
                return Err(CliError::invalid(format!(
                    "pairs = {n} but {} coefficient lists were given",
                    lists.len()
                )));
            }
        }
        let spec = if squared {
            ChannelSpec::from_squared(p, q, lists)?
        } else {
            ChannelSpec::new(p, q, lists)?
        };
        Ok(spec)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn digits(d: &[usize]) -> String {
    let parts: Vec<String> = d.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

pub fn render_report(rep: &CapacityReport, format: Format) -> String {
    match format {
        Format::Json => to_json(rep),
        Format::Text => {
            let mut s = String::new();
            let spec = &rep.spec;
            let _ = writeln!(
                s,
                "channel: N = {}, p = {}, q = {}",
                spec.pairs(),
                spec.sender_dim(),
                spec.receiver_dim()
            );
            let _ = writeln!(
                s,
                "{:<14} {:>20} {:>8} {:>20}",
                "branch", "probability", "count", "log2_count"
            );
            for row in &rep.branch_rows {
                let _ = writeln!(
                    s,
                    "{:<14} {:>20.15} {:>8} {:>20.15}",
                    digits(&row.branch),
                    row.probability,
                    row.message_count,
                    row.log2_count
                );
            }
            let _ = writeln!(s, "average_information: {}", rep.average_information);
            let _ = writeln!(s, "classical_cost: {}", rep.classical_cost);
            let _ = writeln!(s, "maximal_information: {}", rep.maximal_information);
            s
        }
    }
}

pub fn cmd_info(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = cfg.channel()?;
    Ok(render_report(&report(&spec), cfg.format()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTally {
    pub branch: Vec<usize>,
    pub count: u64,
    pub frequency: f64,
    pub probability: f64,
    /// Binomial standard deviation of the frequency.
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub spec: ChannelSpec,
    pub trials: u64,
    pub seed: u64,
    pub branches: Vec<BranchTally>,
    pub successes: u64,
    pub success_rate: f64,
    /// Mean of log2(message count) over the sampled branches.
    pub mean_bits: f64,
    pub average_information: f64,
}

pub fn simulate(
    spec: &ChannelSpec,
    trials: u64,
    seed: u64,
    choice: MessageChoice,
) -> crate::Result<SimulationSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let closed = branch_probabilities(spec);
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut successes = 0;
    let mut bits = 0.0;
    for _ in 0..trials {
        let t = run_protocol(spec, choice, &mut rng)?;
        bits += (t.branch.message_count(spec) as f64).log2();
        *counts.entry(t.branch.digits).or_default() += 1;
        successes += u64::from(t.success);
    }
    let n = trials as f64;
    let branches = closed
        .into_iter()
        .map(|b| {
            let count = counts.get(&b.digits).copied().unwrap_or(0);
            BranchTally {
                count,
                frequency: count as f64 / n,
                probability: b.probability,
                std_dev: (b.probability * (1.0 - b.probability) / n).max(0.0).sqrt(),
                branch: b.digits,
            }
        })
        .collect();
    Ok(SimulationSummary {
        spec: spec.clone(),
        trials,
        seed,
        branches,
        successes,
        success_rate: successes as f64 / n,
        mean_bits: bits / n,
        average_information: analysis::average_information(spec),
    })
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    message: Option<u64>,
    strict: bool,
) -> Result<String, CliError> {
    let spec = cfg.channel()?;
    let trials = cfg.trials.unwrap_or(1000);
    if trials == 0 {
        return Err(CliError::invalid("trials must be at least 1"));
    }
    let choice = match (message, strict) {
        (None, _) => MessageChoice::Random,
        (Some(v), false) => MessageChoice::Clamped(v),
        (Some(v), true) => MessageChoice::Strict(v),
    };
    let summary = simulate(&spec, trials, cfg.seed.unwrap_or(0), choice)?;
    Ok(match cfg.format() {
        Format::Json => to_json(&summary),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "trials: {} (seed {})", summary.trials, summary.seed);
            let _ = writeln!(
                s,
                "{:<14} {:>8} {:>20} {:>20}",
                "branch", "count", "frequency", "probability"
            );
            for b in &summary.branches {
                let _ = writeln!(
                    s,
                    "{:<14} {:>8} {:>20.15} {:>20.15}",
                    digits(&b.branch),
                    b.count,
                    b.frequency,
                    b.probability
                );
            }
            let _ = writeln!(s, "success_rate: {}", summary.success_rate);
            let _ = writeln!(s, "mean_bits: {}", summary.mean_bits);
            let _ = writeln!(s, "average_information: {}", summary.average_information);
            s
        }
    })
}

/// Header `alpha01_sq,alpha02_sq,i_ave`, LF line endings, shortest
/// round-trip decimal formatting.
pub fn surface_csv(steps: usize) -> crate::Result<String> {
    let mut s = String::from("alpha01_sq,alpha02_sq,i_ave\n");
    for pt in capacity_surface(steps)? {
        let _ = writeln!(s, "{},{},{}", pt.alpha01_sq, pt.alpha02_sq, pt.i_ave);
    }
    Ok(s)
}

pub fn cmd_surface(cfg: &RunConfig) -> Result<String, CliError> {
    Ok(surface_csv(cfg.steps.unwrap_or(50))?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Number of random channels used by the equivalence checks.
pub const VERIFY_CORPUS: usize = 100;

/// Runs every cross-check. `p`/`q` select the orthogonality sweep and the
/// configured channel, if any, is added to the random corpus.
pub fn verify_all(
    p: usize,
    q: usize,
    divisor: PhaseDivisor,
    extra: Option<&ChannelSpec>,
    seed: u64,
) -> crate::Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // unitarity sweep over every label for p <= 7
    let mut worst_enc: f64 = 0.0;
    for pp in 3..=7 {
        for qq in 2..pp {
            for r in 0..qq {
                for m in 0..pp {
                    for n in 0..qq - r {
                        let u = encoding_operator(pp, qq, r, m, n)?;
                        worst_enc = worst_enc.max(u.unitarity_defect());
                    }
                }
            }
        }
    }
    out.push(check(
        "encoding unitarity (p <= 7)",
        worst_enc < UNITARY_TOL,
        format!("max ‖U†U − I‖ = {worst_enc:e}"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus: Vec<ChannelSpec> = (0..VERIFY_CORPUS)
        .map(|_| oracle::random_spec(&mut rng, 2, 5, 4))
        .collect();
    if let Some(s) = extra {
        corpus.push(s.clone());
    }

    let mut worst_pur: f64 = 0.0;
    for spec in &corpus {
        for k in 0..spec.pairs() {
            worst_pur = worst_pur.max(purification_unitary(spec, k)?.unitarity_defect());
        }
    }
    out.push(check(
        "purification unitarity",
        worst_pur < UNITARY_TOL,
        format!("{} channels, max ‖U†U − I‖ = {worst_pur:e}", corpus.len()),
    ));

    // orthonormality of the protocol's encoded bases
    let mut worst_gram: f64 = 0.0;
    for pp in 3..=7 {
        for qq in 2..pp {
            for r in 0..qq {
                let basis = encoded_basis(pp, qq, r)?;
                let refs: Vec<_> = basis.iter().map(|b| b.amplitudes()).collect();
                worst_gram = worst_gram.max(qstate::gram_deviation(&refs));
            }
        }
    }
    out.push(check(
        "encoded basis orthonormality (p <= 7)",
        worst_gram < NORM_TOL,
        format!("max Gram deviation = {worst_gram:e}"),
    ));

    let label = match divisor {
        PhaseDivisor::ReducedLevels => "q-r",
        PhaseDivisor::ReceiverDim => "q",
    };
    let mut worst_r = (0, 0.0f64);
    for r in 0..q {
        let v = oracle::brute_orthogonality(p, q, r, divisor)?;
        if v > worst_r.1 {
            worst_r = (r, v);
        }
    }
    out.push(check(
        &format!("orthogonality with phase divisor {label} (p = {p}, q = {q})"),
        worst_r.1 < NORM_TOL,
        if worst_r.1 < NORM_TOL {
            format!("max off-diagonal Gram magnitude {:e}", worst_r.1)
        } else {
            format!(
                "max off-diagonal Gram magnitude {} at r = {}; this phase convention is NOT orthogonal",
                worst_r.1, worst_r.0
            )
        },
    ));

    let uniform = oracle::brute_orthogonality(5, 3, 1, PhaseDivisor::ReceiverDim)?;
    out.push(check(
        "divisor-q counterexample (p = 5, q = 3, r = 1)",
        (uniform - 0.5).abs() < NORM_TOL,
        format!("max off-diagonal Gram magnitude {uniform}"),
    ));

    let mut mismatched = Vec::new();
    for m in REFERENCE_MATRICES {
        let u = encoding_operator(3, 2, m.r, m.m, m.n)?;
        let exact = u
            .entries()
            .iter()
            .zip(m.entries)
            .all(|(got, want)| got.re == want && got.im == 0.0);
        if !exact {
            mismatched.push(m.name);
        }
    }
    out.push(check(
        "reference 3x3 encoding matrices (p = 3, q = 2)",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{} matrices reproduced entrywise", REFERENCE_MATRICES.len())
        } else {
            format!("mismatched: {}", mismatched.join(", "))
        },
    ));

    let mut worst_prob: f64 = 0.0;
    let mut worst_info: f64 = 0.0;
    let mut worst_branch: f64 = 0.0;
    for spec in &corpus {
        let closed = branch_probabilities(spec);
        let brute = oracle::brute_branch_probabilities(spec)?;
        for (c, (d, pr)) in closed.iter().zip(&brute) {
            if &c.digits != d {
                return Err(crate::Error::OracleMismatch("branch order differs".into()));
            }
            worst_prob = worst_prob.max((c.probability - pr).abs());
        }
        let info = analysis::average_information(spec);
        worst_info = worst_info.max((info - oracle::brute_average_information(spec)?).abs());

        let purified = conversion_step(&with_auxiliaries(&initial_state(spec)?, spec)?, spec)?;
        let sim = outcome_probabilities(&purified, &spec.auxiliary_indices())?;
        for (c, s) in closed.iter().zip(&sim) {
            worst_branch = worst_branch.max((c.probability - s).abs());
        }
    }
    out.push(check(
        "branch probabilities: closed form vs oracle",
        worst_prob < NORM_TOL,
        format!("{} channels, max |Δ| = {worst_prob:e}", corpus.len()),
    ));
    out.push(check(
        "purified branch weights: closed form vs protocol state",
        worst_branch < NORM_TOL,
        format!("{} channels, max |Δ| = {worst_branch:e}", corpus.len()),
    ));
    out.push(check(
        "average information: closed form vs oracle",
        worst_info < NORM_TOL,
        format!("{} channels, max |Δ| = {worst_info:e}", corpus.len()),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut failures = 0;
    let rounds = 200;
    for spec in corpus.iter().take(20) {
        for _ in 0..rounds / 20 {
            let t = protocol::run_protocol(spec, MessageChoice::Random, &mut rng)?;
            failures += usize::from(!t.success);
        }
    }
    out.push(check(
        "protocol round trips decode",
        failures == 0,
        format!("{failures} failures in {rounds} round trips"),
    ));
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig, divisor: DivisorArg) -> Result<(String, bool), CliError> {
    let p = cfg.p.unwrap_or(5);
    let q = cfg.q.unwrap_or(3);
    if q < 2 || p <= q {
        return Err(CliError::invalid(format!(
            "requires p > q >= 2 (got p = {p}, q = {q})"
        )));
    }
    let extra = if cfg.alphas.is_some() || cfg.alphas_sq.is_some() {
        Some(cfg.channel()?)
    } else {
        None
    };
    let divisor = match divisor {
        DivisorArg::QMinusR => PhaseDivisor::ReducedLevels,
        DivisorArg::Q => PhaseDivisor::ReceiverDim,
    };
    let results = verify_all(p, q, divisor, extra.as_ref(), cfg.seed.unwrap_or(0))?;
    let passed = results.iter().all(|r| r.passed);
    let text = match cfg.format() {
        Format::Json => to_json(&results),
        Format::Text => {
            let mut s = String::new();
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "[{tag}] {}: {}", r.name, r.detail);
            }
            s
        }
    };
    Ok((text, passed))
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Info(args) => RunConfig::from_args(args).and_then(|cfg| {
            let text = cmd_info(&cfg)?;
            emit(cfg.out.as_deref(), &text).map(|_| EXIT_OK)
        }),
        Command::Simulate {
            common,
            message,
            strict,
        } => RunConfig::from_args(common).and_then(|cfg| {
            let text = cmd_simulate(&cfg, *message, *strict)?;
            emit(cfg.out.as_deref(), &text).map(|_| EXIT_OK)
        }),
        Command::Surface(args) => RunConfig::from_args(args).and_then(|cfg| {
            let text = cmd_surface(&cfg)?;
            emit(cfg.out.as_deref(), &text).map(|_| EXIT_OK)
        }),
        Command::Verify {
            common,
            phase_divisor,
        } => RunConfig::from_args(common).and_then(|mut cfg| {
            // human-readable by default
            cfg.format.get_or_insert(Format::Text);
            let (text, passed) = cmd_verify(&cfg, *phase_divisor)?;
            emit(cfg.out.as_deref(), &text)?;
            Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

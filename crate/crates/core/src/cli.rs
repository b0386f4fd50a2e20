//! The `quenched` command-line front end.
//!
//! Every subcommand builds a [`Table`] and writes it as CSV or JSON. Flags may
//! be supplied on the command line or in a JSON file passed with `--config`;
//! values in the file take precedence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::counterexample::{
    self, bonferroni_bound, drift_on_forced_event, enumerate_block_moments, heyde_report,
    partial_sums_direct, SumMode, MAX_ENUMERATED_ELL,
};
use crate::error::{Error, Result};
use crate::families::{hannan_partial_sums, InnovationLaw, ProcessKind, ProcessSpec};
use crate::harness::{
    ergodic_average, ks_two_sample, maximal_tail_check, quenched_compare_lattices, simulate_sums,
    Centering, EmpiricalCdf, ScenarioMode,
};
use crate::innovations::{make_scenario, Background, Fill};
use crate::report::{Cell, Format, Table};
use crate::schedule::{MRule, ParameterSchedule, TailBound};

#[derive(Debug, Parser)]
#[command(
    name = "quenched",
    version,
    about = "Quenched versus annealed CLT laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandName,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    /// Build a schedule and evaluate the summability series.
    Schedule,
    /// Closed-form block moments against exhaustive enumeration.
    Moments,
    /// Direct partial sums against the telescoped coboundary form.
    Telescope,
    /// Conditional-mean drift on a forced event, with the Bonferroni floor.
    Drift,
    /// Var S_n / n and P0 projection norms along a grid.
    Heyde,
    /// Partial sums of projection norms for a linear process.
    Hannan,
    /// Martingale CLT condition estimates.
    Mcleish,
    /// Quenched laws under several frozen pasts.
    Quenched,
    /// Pathwise average of f² and the maximal-inequality check.
    Ergodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PastArg {
    Random,
    Zero,
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Subcommand named in a config file; must match the command line.
    #[arg(skip)]
    #[serde(default)]
    pub command: Option<CommandName>,
    /// `pow2` for ell_k = 2^k, or a comma-separated list.
    #[arg(long, global = true)]
    pub ell: Option<String>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Frozen-past seeds for `quenched`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub grid: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// rademacher | gaussian | three-point | counterexample | perturbed |
    /// geometric | harmonic
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Block index for `drift` and the three-point family.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Evaluation point of the quenched CDFs.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Scale of the martingale part of the perturbed family.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub past: Option<PastArg>,
    /// Force A_n in the past: `K:N` or `K:N:SIGN`.
    #[arg(long, global = true)]
    pub force: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Directory for two-column CDF files (`quenched` only).
    #[arg(long, global = true)]
    pub cdf_dir: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "QUENCHED_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

/// Flags after merging the config file, with defaults and validation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandName,
    pub flags: Flags,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let mut flags = cli.flags;
        if let Some(path) = flags.config.clone() {
            let text = std::fs::read_to_string(&path)?;
            let file: Flags = serde_json::from_str(&text)?;
            if let Some(cmd) = file.command {
                if cmd != cli.command {
                    return Err(Error::InvalidArgument(format!(
                        "config file is for `{cmd:?}` but `{:?}` was requested",
                        cli.command
                    )));
                }
            }
            overlay!(
                flags, file, ell, kmax, seed, seeds, n, grid, reps, family, k, eps, lambda, z,
                scale, past, force, out, format, cdf_dir, threads
            );
        }
        let cfg = Self {
            command: cli.command,
            flags,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let f = &self.flags;
        let positive = [
            ("kmax", f.kmax.map(|v| v as f64)),
            ("n", f.n.map(|v| v as f64)),
            ("reps", f.reps.map(|v| v as f64)),
            ("k", f.k.map(|v| v as f64)),
            ("eps", f.eps),
            ("lambda", f.lambda),
            ("threads", f.threads.map(|v| v as f64)),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if v.is_nan() || v <= 0.0 || v.is_infinite() {
                    return Err(Error::InvalidArgument(format!(
                        "--{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if let Some(grid) = &f.grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(Error::InvalidArgument(
                    "--grid entries must be positive".into(),
                ));
            }
        }
        if f.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(Error::InvalidArgument("--seeds must not be empty".into()));
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.flags.seed.unwrap_or(1)
    }

    fn kmax(&self) -> usize {
        self.flags.kmax.unwrap_or(2)
    }

    fn reps(&self, default: usize) -> usize {
        self.flags.reps.unwrap_or(default)
    }

    fn format(&self) -> Format {
        match self.flags.format.unwrap_or(FormatArg::Csv) {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }

    pub fn schedule(&self) -> Result<ParameterSchedule> {
        let k_max = self.kmax();
        match self.flags.ell.as_deref().unwrap_or("pow2").trim() {
            "pow2" => ParameterSchedule::pow2(k_max),
            list => {
                let ell = list
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<u64>().map_err(|e| {
                            Error::InvalidArgument(format!("bad --ell entry {t:?}: {e}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ParameterSchedule::build(&ell, k_max, MRule::Default)
            }
        }
    }

    pub fn family(&self, schedule: &Arc<ParameterSchedule>) -> Result<ProcessSpec> {
        let k_max = self.kmax();
        match self.flags.family.as_deref().unwrap_or("rademacher") {
            "rademacher" | "iid" => ProcessSpec::iid(InnovationLaw::Rademacher),
            "gaussian" => ProcessSpec::iid(InnovationLaw::Gaussian),
            "three-point" => {
                ProcessSpec::iid_three_point(Arc::clone(schedule), self.flags.k.unwrap_or(1))
            }
            "counterexample" => ProcessSpec::counterexample(Arc::clone(schedule), k_max),
            "perturbed" => ProcessSpec::perturbed(
                Arc::clone(schedule),
                k_max,
                InnovationLaw::Rademacher,
                self.flags.scale.unwrap_or(1.0),
            ),
            "geometric" => ProcessSpec::linear(
                InnovationLaw::Rademacher,
                (0..=20).map(|i| 0.5f64.powi(i)).collect(),
            ),
            "harmonic" => ProcessSpec::linear(
                InnovationLaw::Gaussian,
                (0..=10_000).map(|i| 1.0 / (i as f64 + 1.0)).collect(),
            ),
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }

    fn background(&self) -> Background {
        match self.flags.past.unwrap_or(PastArg::Random) {
            PastArg::Random => Background::RANDOM,
            PastArg::Zero => Background {
                past: Fill::Zero,
                future: Fill::Random,
            },
        }
    }

    fn force(&self) -> Result<Option<(usize, i128, i8)>> {
        let Some(text) = self.flags.force.as_deref() else {
            return Ok(None);
        };
        let bad = || Error::InvalidArgument(format!("--force expects K:N[:SIGN], got {text:?}"));
        let parts: Vec<&str> = text.split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let k = parts[0].parse().map_err(|_| bad())?;
        let n = parts[1].parse().map_err(|_| bad())?;
        let sign = match parts.get(2) {
            None | Some(&"+") | Some(&"1") | Some(&"+1") => 1,
            Some(&"-") | Some(&"-1") => -1,
            Some(_) => return Err(bad()),
        };
        Ok(Some((k, n, sign)))
    }
}

/// Parses `args`, runs the command and writes the report.
pub fn run_from_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    run(RunConfig::from_cli(cli)?)
}

/// Runs a validated configuration, writing to `--out` or standard output.
pub fn run(config: RunConfig) -> Result<()> {
    let table = with_pool(config.flags.threads, || build_report(&config))??;
    let format = config.format();
    match &config.flags.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(format, &mut lock)?;
        }
    }
    Ok(())
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {t} threads: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Computes the report for `config` without writing it.
pub fn build_report(config: &RunConfig) -> Result<Table> {
    let schedule = Arc::new(config.schedule()?);
    match config.command {
        CommandName::Schedule => schedule_table(&schedule),
        CommandName::Moments => moments_table(&schedule),
        CommandName::Telescope => telescope_table(config, &schedule),
        CommandName::Drift => drift_table(config, &schedule),
        CommandName::Heyde => heyde_table(config, &schedule),
        CommandName::Hannan => hannan_table(config, &schedule),
        CommandName::Mcleish => mcleish_table(config, &schedule),
        CommandName::Quenched => quenched_table(config, &schedule),
        CommandName::Ergodic => ergodic_table(config, &schedule),
    }
}

fn schedule_table(s: &ParameterSchedule) -> Result<Table> {
    let rep = s.check_condition2();
    let mut t = Table::new([
        "k",
        "ell",
        "M",
        "N",
        "ln_first",
        "ln_second",
        "term",
        "partial_sum",
        "tail_bound",
    ]);
    for k in 1..=s.k_max() {
        let last = k == s.k_max();
        let tail = match (last, rep.tail_bound) {
            (true, TailBound::Bounded(b)) => Cell::Float(b),
            (true, TailBound::Unbounded) => Cell::Text("unbounded".into()),
            (false, _) => Cell::Missing,
        };
        let (first, second) = rep.log_summands[k - 1];
        t.push(vec![
            k.into(),
            s.ell(k).into(),
            Cell::Text(s.m(k).to_string()),
            Cell::Text(s.n(k).to_string()),
            first.into(),
            second.into(),
            rep.terms[k - 1].into(),
            rep.partial_sums[k - 1].into(),
            tail,
        ]);
    }
    Ok(t)
}

fn moments_table(s: &ParameterSchedule) -> Result<Table> {
    let mut t = Table::new([
        "k",
        "ell",
        "M",
        "e_l1",
        "e_l2_sq",
        "f_l2_sq",
        "h_l1_bound",
        "g_l1_bound",
        "e_l2_sq_enum",
        "f_l2_sq_enum",
        "g_l1_enum",
    ]);
    for k in 1..=s.k_max() {
        let exact = s.exact_block_moments(k);
        let enumerated = (s.ell(k) <= MAX_ENUMERATED_ELL)
            .then(|| enumerate_block_moments(s, k))
            .transpose()?;
        t.push(vec![
            k.into(),
            s.ell(k).into(),
            Cell::Text(s.m(k).to_string()),
            exact.e_l1.into(),
            exact.e_l2_sq.into(),
            exact.f_l2_sq.into(),
            exact.h_l1_bound.into(),
            exact.g_l1_bound.into(),
            enumerated.map(|e| e.e_l2_sq).into(),
            enumerated.map(|e| e.f_l2_sq).into(),
            enumerated.map(|e| e.g_l1).into(),
        ]);
    }
    Ok(t)
}

fn telescope_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let k_max = s.k_max();
    let n_max = config.flags.n.unwrap_or(200) as i128;
    let spec = ProcessSpec::counterexample(Arc::clone(s), k_max)?;
    let base = config.seed();
    let mut t = Table::new(["seed", "n_max", "max_abs_diff"]);
    let rows: Vec<(u64, f64)> = {
        use rayon::prelude::*;
        (0..config.reps(1000) as u64)
            .into_par_iter()
            .map(|i| {
                let seed = base.wrapping_add(i);
                let lattice = spec.lattice(seed)?;
                let direct = partial_sums_direct(&lattice, n_max, k_max);
                let worst = direct
                    .iter()
                    .enumerate()
                    .map(|(j, d)| {
                        let tele = counterexample::partial_sum(
                            &lattice,
                            j as i128 + 1,
                            SumMode::Telescoped,
                            k_max,
                        );
                        (d - tele).abs()
                    })
                    .fold(0.0, f64::max);
                Ok((seed, worst))
            })
            .collect::<Result<_>>()?
    };
    for (seed, worst) in rows {
        t.push(vec![seed.into(), n_max.into(), worst.into()]);
    }
    Ok(t)
}

fn drift_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let k = config.flags.k.unwrap_or(s.k_max());
    if k > s.k_max() {
        return Err(Error::BlockOutOfRange {
            k,
            k_max: s.k_max(),
        });
    }
    let n = match config.flags.n {
        Some(n) => n as i128,
        None => s
            .n_i128(k - 1)
            .map(|lo| lo + 1)
            .ok_or_else(|| Error::LatticeRange(format!("N_{} exceeds the index range", k - 1)))?,
    };
    let rep = drift_on_forced_event(Arc::clone(s), k, n)?;
    let bound = bonferroni_bound(s, k);
    let mut t = Table::new([
        "k",
        "n",
        "I_value",
        "II_value",
        "nu",
        "ratio",
        "truncated",
        "bonferroni_bound",
        "bound_times_2k",
    ]);
    t.push(vec![
        k.into(),
        n.into(),
        rep.i_value.into(),
        rep.ii_value.into(),
        rep.nu.into(),
        rep.ratio.into(),
        rep.truncated.into(),
        bound.into(),
        (bound * 2.0 * k as f64).into(),
    ]);
    Ok(t)
}

fn heyde_table(config: &RunConfig, s: &ParameterSchedule) -> Result<Table> {
    let grid: Vec<u128> = match &config.flags.grid {
        Some(g) => g.iter().map(|&n| n as u128).collect(),
        None => (6..=14).map(|e| 1u128 << e).collect(),
    };
    let rows = heyde_report(s, &grid, s.k_max());
    let mut t = Table::new(["n", "variance_over_n", "p0_block", "p0_norm_sq", "p0_bound"]);
    for row in rows {
        t.push(vec![
            row.n.into(),
            row.variance_over_n.into(),
            row.p0_block.into(),
            row.p0_norm.map(|v| v * v).into(),
            row.p0_block.map(|k| 2.0 / k as f64).into(),
        ]);
    }
    Ok(t)
}

fn hannan_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let spec = config.family(s)?;
    let ProcessKind::Linear { coeffs, .. } = spec.kind() else {
        return Err(Error::Unsupported(
            "hannan needs a linear family (geometric or harmonic)".into(),
        ));
    };
    let i_max = config.flags.n.map_or(coeffs.len() - 1, |n| n as usize);
    let rep = hannan_partial_sums(&spec, i_max)?;
    let verdict = match rep.verdict {
        crate::families::HannanVerdict::Holds => "holds",
        crate::families::HannanVerdict::DivergingTrend => "diverging_trend",
    };
    let mut t = Table::new(["i", "partial_sum", "tail_exponent", "verdict"]);
    for (i, sum) in rep.partial_sums.iter().enumerate() {
        t.push(vec![
            i.into(),
            (*sum).into(),
            rep.tail_exponent.into(),
            verdict.into(),
        ]);
    }
    Ok(t)
}

fn estimate_columns() -> Table {
    Table::new(["n", "mode", "quantity", "estimate", "se", "bound"])
}

fn mcleish_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let spec = config.family(s)?;
    let grid: Vec<i128> = match &config.flags.grid {
        Some(g) => g.iter().map(|&n| n as i128).collect(),
        None => vec![config.flags.n.unwrap_or(100) as i128],
    };
    let eps = config.flags.eps.unwrap_or(0.5);
    let lattice = Arc::new(
        spec.lattice(config.seed())?
            .with_background(config.background()),
    );
    let mode = ScenarioMode::Quenched(lattice);
    let rep = crate::harness::mcleish_report(&spec, &mode, &grid, config.reps(1000), eps)?;
    let sigma2 = spec.martingale_l2_sq();
    let mut t = estimate_columns();
    for row in &rep.rows {
        let n_cell = Cell::Int(row.n);
        for (name, est, bound) in [
            ("sum_sq", row.sum_sq, Some(sigma2)),
            ("max_tail", row.max_tail, None),
            ("max_sq", row.max_sq, None),
            ("max_abs", row.max_abs, None),
        ] {
            t.push(vec![
                n_cell.clone(),
                mode.label().into(),
                name.into(),
                est.mean.into(),
                est.se.into(),
                bound.into(),
            ]);
        }
    }
    t.push(vec![
        Cell::Missing,
        mode.label().into(),
        "sup_max_sq".into(),
        rep.sup_max_sq.mean.into(),
        rep.sup_max_sq.se.into(),
        Cell::Missing,
    ]);
    Ok(t)
}

/// KS threshold reported alongside quenched KS distances.
const KS_REPORT_BOUND: f64 = 0.05;

fn quenched_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let spec = config.family(s)?;
    let n = config.flags.n.unwrap_or(1000) as i128;
    spec.check_window(n)?;
    let reps = config.reps(1000);
    let z = config.flags.z.unwrap_or(0.4);
    let seeds = config
        .flags
        .seeds
        .clone()
        .unwrap_or_else(|| vec![config.seed()]);
    let background = config.background();

    let mut lattices = Vec::with_capacity(seeds.len() + 1);
    let mut labels = Vec::with_capacity(seeds.len() + 1);
    for &seed in &seeds {
        lattices.push(Arc::new(spec.lattice(seed)?.with_background(background)));
        labels.push(format!("quenched:{seed}"));
    }
    if let Some((k, at, sign)) = config.force()? {
        let forced = lattices[0].force_event_signed(k, at, sign)?;
        lattices.push(Arc::new(forced));
        labels.push(format!("forced:{}:{k}:{at}:{sign}", seeds[0]));
    }

    let cmp = quenched_compare_lattices(&spec, &lattices, n, reps)?;
    let mut t = estimate_columns();
    let row = |label: &str, q: &str, est: Cell, se: Cell, bound: Cell| {
        vec![Cell::Int(n), label.into(), q.into(), est, se, bound]
    };
    for (label, sc) in labels.iter().zip(&cmp.scenarios) {
        let p = sc.raw.eval(z);
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        t.push(row(
            label,
            "ks_to_normal",
            sc.ks_raw.into(),
            Cell::Missing,
            KS_REPORT_BOUND.into(),
        ));
        t.push(row(
            label,
            "ks_centered",
            sc.ks_centered.into(),
            Cell::Missing,
            KS_REPORT_BOUND.into(),
        ));
        t.push(row(label, "nu", sc.nu.into(), Cell::Missing, Cell::Missing));
        t.push(row(
            label,
            &format!("cdf_at_{}", crate::report::fmt_float(z)),
            p.into(),
            se.into(),
            Cell::Missing,
        ));
        if let Some(dir) = &config.flags.cdf_dir {
            write_cdf(dir, &format!("{}_raw", label.replace(':', "_")), &sc.raw)?;
            write_cdf(
                dir,
                &format!("{}_centered", label.replace(':', "_")),
                &sc.centered,
            )?;
        }
    }
    t.push(row(
        "all",
        "nu_sd",
        cmp.nu_sd.into(),
        Cell::Missing,
        Cell::Missing,
    ));
    t.push(row(
        "all",
        "max_centered_ks",
        cmp.max_centered_ks().into(),
        Cell::Missing,
        Cell::Missing,
    ));

    if background == Background::RANDOM {
        let annealed = simulate_sums(
            &spec,
            &ScenarioMode::Annealed {
                seed: config.seed(),
            },
            n,
            reps,
            Centering::Raw,
        )?;
        let ks = crate::harness::ks_to_normal(&annealed, cmp.sigma2)?;
        t.push(row(
            "annealed",
            "ks_to_normal",
            ks.into(),
            Cell::Missing,
            KS_REPORT_BOUND.into(),
        ));
        let diff = ks_two_sample(&cmp.scenarios[0].raw, &annealed);
        t.push(row(
            "annealed",
            "ks_vs_first_quenched",
            diff.into(),
            Cell::Missing,
            Cell::Missing,
        ));
        if let Some(dir) = &config.flags.cdf_dir {
            write_cdf(dir, "annealed_raw", &annealed)?;
        }
    }
    Ok(t)
}

fn write_cdf(dir: &Path, name: &str, cdf: &EmpiricalCdf) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut t = Table::new(["x", "F"]);
    for (x, p) in cdf.steps() {
        t.push(vec![x.into(), p.into()]);
    }
    let mut w = BufWriter::new(File::create(dir.join(format!("{name}.csv")))?);
    t.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn ergodic_table(config: &RunConfig, s: &Arc<ParameterSchedule>) -> Result<Table> {
    let spec = config.family(s)?;
    let n = config.flags.n.unwrap_or(1000) as i128;
    let lambda = config.flags.lambda.unwrap_or(2.0);
    let lattice = Arc::new(
        spec.lattice(config.seed())?
            .with_background(config.background()),
    );
    let avg = ergodic_average(&spec, &make_scenario(&lattice, 0), n)?;
    let tail = maximal_tail_check(
        &spec,
        &ScenarioMode::Annealed {
            seed: config.seed(),
        },
        lambda,
        n,
        config.reps(1000),
    )?;
    let mut t = estimate_columns();
    t.push(vec![
        Cell::Int(n),
        "pathwise".into(),
        "ergodic_average".into(),
        avg.into(),
        Cell::Missing,
        spec.f_l2_sq().into(),
    ]);
    t.push(vec![
        Cell::Int(n),
        "annealed".into(),
        format!("maximal_tail_lambda_{}", crate::report::fmt_float(lambda)).into(),
        tail.empirical_tail.into(),
        tail.se.into(),
        tail.bound.into(),
    ]);
    Ok(t)
}

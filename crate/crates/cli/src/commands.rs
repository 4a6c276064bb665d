//! The four subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use covert_qmac::channel::validate_channel;
use covert_qmac::codingsim::{lemma_checks, simulate, LemmaReport, SimMode, SimParams, SimReport, DEFAULT_DIM_CAP};
use covert_qmac::infomeasures::InputDistribution;
use covert_qmac::region::{achievable_region, find_feasible, RegionConfig, RegionPentagon};

use crate::output::{fmt_f64, write_atomic, write_json, RunManifest};
use crate::spec::{kraus_channel, load_spec, parse_distribution, parse_spec};
use crate::CliError;

pub const NO_FEASIBLE: &str = "no feasible distribution found";

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn utf8(bytes: &[u8], path: &Path) -> Result<String, CliError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| CliError::Parse(format!("{} is not UTF-8", path.display())))
}

fn fmt_matrix(m: &covert_qmac::qlinalg::CMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        s.push_str("  [");
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = write!(s, " {:+.6}{:+.6}i", z.re, z.im);
        }
        s.push_str(" ]\n");
    }
    s
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Channel spec JSON.
    pub spec: PathBuf,
}

/// Exit 0 when the spec compiles to a valid table, 1 otherwise.
pub fn cmd_check(args: &CheckArgs) -> Result<u8, CliError> {
    let bytes = read_input(&args.spec)?;
    let spec = parse_spec(&utf8(&bytes, &args.spec)?)?;
    if let Some(ch) = kraus_channel(&spec)? {
        let rep = validate_channel(&ch);
        println!("kraus operators: {}", ch.kraus.len());
        println!("completeness residual (trace norm): {:e}", rep.completeness_residual);
        println!("completeness max entry deviation: {:e}", rep.completeness_max_entry);
        for issue in &rep.dim_issues {
            println!("dimension issue: {issue}");
        }
        if !rep.passed {
            println!("channel: INVALID");
            return Ok(1);
        }
    }
    let loaded = match load_spec(&spec) {
        Ok(l) => l,
        Err(CliError::Domain(msg)) => {
            println!("channel: INVALID");
            println!("{msg}");
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    let t = &loaded.table;
    println!("channel: valid");
    println!("alphabet sizes: {:?}", t.alphabet_sizes());
    println!("d_B = {}, d_E = {}", t.d_b(), t.d_e());
    println!("classical: {}", t.is_classical(1e-12));
    println!("rho0 =\n{}", fmt_matrix(t.rho0().matrix()));
    Ok(0)
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    pub spec: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Trace-distance tolerance for `ρ_E = ρ_0`.
    #[arg(long, default_value_t = 1e-6)]
    pub covert_tol: f64,
    /// Slack demanded of each strict inequality `b > e`.
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 10.0)]
    pub penalty: f64,
    #[arg(long, default_value_t = 101)]
    pub mu_grid: usize,
    #[arg(long, default_value_t = 4)]
    pub perturbations: usize,
    /// Drop the covertness constraint.
    #[arg(long)]
    pub no_covertness: bool,
}

impl RegionArgs {
    pub fn config(&self) -> RegionConfig {
        RegionConfig {
            covert_tol: self.covert_tol,
            margin: self.margin,
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            covertness: !self.no_covertness,
            penalty: self.penalty,
            mu_grid: self.mu_grid,
            perturbations: self.perturbations,
            ..RegionConfig::default()
        }
    }
}

#[derive(Serialize)]
struct RegionFile<'a> {
    manifest: RunManifest,
    feasible_found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    marker: Option<&'static str>,
    frontier: Vec<[f64; 2]>,
    pentagons: &'a [RegionPentagon],
}

pub fn cmd_region(args: &RegionArgs) -> Result<u8, CliError> {
    let bytes = read_input(&args.spec)?;
    let spec = parse_spec(&utf8(&bytes, &args.spec)?)?;
    let table = load_spec(&spec)?.table;
    let cfg = args.config();
    cfg.validate()?;
    let result = achievable_region(&table, &cfg)?;
    let found = result.pentagons.iter().any(|p| p.feasible);
    let manifest = RunManifest::new("region", &cfg, cfg.seed, &[&bytes])?;
    let file = RegionFile {
        manifest,
        feasible_found: found,
        marker: (!found).then_some(NO_FEASIBLE),
        frontier: result.frontier.iter().map(|&(a, b)| [a, b]).collect(),
        pentagons: &result.pentagons,
    };
    write_json(&args.out.join("region.json"), &file)?;
    let mut csv = String::from("R1,R2\n");
    for &(a, b) in &result.frontier {
        let _ = writeln!(csv, "{},{}", fmt_f64(a), fmt_f64(b));
    }
    write_atomic(&args.out.join("frontier.csv"), csv.as_bytes())?;

    if !found {
        println!("{NO_FEASIBLE}");
    } else {
        let n_feasible = result.pentagons.iter().filter(|p| p.feasible).count();
        println!("feasible pentagons: {n_feasible} of {}", result.pentagons.len());
        println!("frontier vertices (R1, R2) in bits/use:");
        for (a, b) in &result.frontier {
            println!("  {a:.6}, {b:.6}");
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Packing,
    Resolvability,
    Both,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Packing => SimMode::Packing,
            ModeArg::Resolvability => SimMode::Resolvability,
            ModeArg::Both => SimMode::Both,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    pub spec: PathBuf,
    /// Input distribution JSON with keys p1, p2, p3.
    #[arg(long, conflicts_with = "auto", required_unless_present = "auto")]
    pub dist: Option<PathBuf>,
    /// Use the first distribution found by the covertness search.
    #[arg(long)]
    pub auto: bool,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 50)]
    pub codebooks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_DIM_CAP)]
    pub dim_cap: usize,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    manifest: RunManifest,
    dist: &'a InputDistribution,
    reports: &'a [SimReport],
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let bytes = read_input(&args.spec)?;
    let spec = parse_spec(&utf8(&bytes, &args.spec)?)?;
    let table = load_spec(&spec)?.table;
    let mut inputs = vec![bytes];
    let dist = match &args.dist {
        Some(p) => {
            let b = read_input(p)?;
            let d = parse_distribution(&utf8(&b, p)?, table.alphabet_sizes())?;
            inputs.push(b);
            d
        }
        None => {
            let cfg = RegionConfig { seed: args.seed, ..RegionConfig::default() };
            find_feasible(&table, &cfg)?
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Domain(NO_FEASIBLE.to_string()))?
        }
    };
    if args.n_list.is_empty() {
        return Err(CliError::Parse("--n-list is empty".into()));
    }
    let params: Vec<SimParams> = args
        .n_list
        .iter()
        .map(|&n| SimParams {
            n,
            r1: args.r1,
            r2: args.r2,
            delta: args.delta,
            alpha: args.alpha,
            num_codebooks: args.codebooks,
            seed: args.seed,
            dim_cap: args.dim_cap,
        })
        .collect();
    // Every blocklength is checked before any state is allocated.
    for p in &params {
        p.validate()?;
        p.check_dims(&table)?;
        p.message_counts()?;
    }
    let mode: SimMode = args.mode.into();
    let mut reports = Vec::with_capacity(params.len());
    for p in &params {
        let rep = simulate(&table, &dist, p, mode)?;
        println!(
            "n={} M=({},{}) mean_error={} mean_trace_distance={} mean_rel_entropy={}",
            rep.n,
            rep.m1,
            rep.m2,
            opt(rep.mean_error),
            opt(rep.mean_trace_distance),
            if rep.infinite_rel_entropy > 0 { "inf".into() } else { opt(rep.mean_rel_entropy) }
        );
        reports.push(rep);
    }

    let mut csv = String::from("n,codebook,error,trace_distance,rel_entropy,bound_packing,bound_resolvability\n");
    for rep in &reports {
        let bp = opt(rep.bound_packing.map(|b| b.value));
        let br = opt(rep.bound_resolvability.map(|b| b.value));
        for o in &rep.outcomes {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                rep.n,
                o.index,
                opt(o.error),
                opt(o.trace_distance),
                o.rel_entropy.map(|d| fmt_f64(d.value())).unwrap_or_default(),
                bp,
                br
            );
        }
    }
    let refs: Vec<&[u8]> = inputs.iter().map(|b| b.as_slice()).collect();
    let manifest = RunManifest::new("simulate", args, args.seed, &refs)?;
    write_atomic(&args.out.join("simulate.csv"), csv.as_bytes())?;
    write_json(&args.out.join("summary.json"), &SummaryFile { manifest, dist: &dist, reports: &reports })?;
    Ok(0)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LemmasArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
    pub dims: Vec<usize>,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct LemmasFile<'a> {
    manifest: RunManifest,
    report: &'a LemmaReport,
}

/// Exit 0 iff no inequality was violated beyond the slack tolerance.
pub fn cmd_lemmas(args: &LemmasArgs) -> Result<u8, CliError> {
    let report = lemma_checks(args.seed, args.trials, &args.dims).map_err(|e| CliError::Parse(e.to_string()))?;
    let manifest = RunManifest::new("lemmas", args, args.seed, &[])?;
    write_json(&args.out.join("lemmas.json"), &LemmasFile { manifest, report: &report })?;
    for c in &report.checks {
        println!(
            "{:<32} trials={:<6} violations={:<4} worst_slack={}",
            c.name,
            c.trials,
            c.violations,
            c.worst_slack.map(|s| format!("{s:.3e}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(if report.total_violations() == 0 { 0 } else { 1 })
}

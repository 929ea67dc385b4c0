//! Batch front end for the `caepp` simulator.
//!
//! Every command renders to a string so the same code path serves the binary
//! and the tests. CSV output starts with a `#` line echoing the tool version
//! and the full configuration; numbers carry 12 significant digits.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use caepp::adaptive::{run_adaptive, AdaptiveOptions, CheckModel, Schedule};
use caepp::mcaepp::{
    fixed_point, preprocess_permutation, round_update_depolarizing, star_round, DEFAULT_MAX_ROUNDS,
    DEFAULT_TOL,
};
use caepp::oracle::{
    enumerate_multi_round, enumerate_single_round, enumerate_sum_circuit, statevector_round,
    CarrierCode, CircuitKind, EnumerationResult, DENSE_LIMIT,
};
use caepp::single_carrier::{closed_form_fidelity, converges, round_update, sum_circuit_round, trajectory, RoundOutcome};
use caepp::state_model::PhaseSplit;
use caepp::BellTable;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest closed-form vs enumeration deviation `oracle-check` accepts.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] caepp::Error),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("oracle mismatch: max deviation {0:e}")]
    Mismatch(f64),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(caepp::Error::SizeGuard { .. }) => 3,
            CliError::Core(caepp::Error::NonConvergence { .. }) => 4,
            CliError::Mismatch(_) => 5,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "caepp", version, about = "Carrier-assisted qudit entanglement purification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-carrier trajectory with the closed form alongside.
    Single(SingleArgs),
    /// Convergence over a (p0, asym) grid.
    Scan(ScanArgs),
    /// Multi-carrier fixed points for depolarizing noise.
    Mcaepp(McaeppArgs),
    /// Preprocessing plus an alternating check schedule.
    Adaptive(AdaptiveArgs),
    /// Closed forms against exhaustive enumeration and state vectors.
    OracleCheck(OracleArgs),
    /// Line weights and the chosen rotation for a channel.
    Mub(MubArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Channel file (JSON with `d` and `p`).
    #[arg(long, conflicts_with_all = ["p0", "asym"])]
    pub channel: Option<PathBuf>,
    /// Fidelity of the qutrit marginal-parameter channel.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Share of the error weight on shift row 1.
    #[arg(long)]
    pub asym: Option<f64>,
}

impl ChannelArgs {
    pub fn load(&self) -> CliResult<BellTable> {
        match (&self.channel, self.p0, self.asym) {
            (Some(path), _, _) => Ok(BellTable::read(path)?),
            (None, Some(p0), Some(a)) => Ok(BellTable::from_marginal_params(p0, a, PhaseSplit::Uniform)?),
            _ => Err(CliError::Input("give --channel or both --p0 and --asym".into())),
        }
    }

    fn echo(&self) -> String {
        match &self.channel {
            Some(p) => format!("channel={}", p.display()),
            None => format!("p0={} asym={}", opt(self.p0), opt(self.asym)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SingleArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 200)]
    pub rounds: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 0.3)]
    pub p0_min: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p0_max: f64,
    #[arg(long, default_value_t = 31)]
    pub p0_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub asym_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub asym_max: f64,
    #[arg(long, default_value_t = 51)]
    pub asym_steps: usize,
    #[arg(long, default_value_t = 200)]
    pub rounds: u64,
}

#[derive(Debug, Clone, Args)]
pub struct McaeppArgs {
    /// Depolarizing fidelities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    /// Carrier counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Carriers per check when no schedule is given.
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    /// Comma-separated phases: `check:M`, `rotate`, `correct`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// `shift-filter`, `star` or `sum-circuit`.
    #[arg(long, default_value = "shift-filter")]
    pub model: String,
    #[arg(long)]
    pub no_preprocess: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MubArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), num)
}

/// `%.12g`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        trim(&format!("{v:.*}", (11 - exp) as usize))
    }
}

fn header(cmd: &str, config: &str) -> String {
    format!("# caepp {VERSION} {cmd} {config}\n")
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn check_unit(name: &'static str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(caepp::Error::OutOfRange { name, value: v, range: "[0, 1]" }.into())
    }
}

#[derive(Debug, Serialize)]
struct SingleRow {
    round: u64,
    p_succ: f64,
    fidelity: f64,
    closed_form: f64,
}

pub fn cmd_single(args: &SingleArgs, format: Format) -> CliResult<String> {
    if args.rounds == 0 {
        return Err(CliError::Input("--rounds must be at least 1".into()));
    }
    let ch = args.channel.load()?;
    let tr = trajectory(&ch, args.rounds)?;
    let conv = converges(&ch);
    let u = ch.marginals().u;
    let rows = tr
        .points
        .iter()
        .map(|pt| {
            Ok(SingleRow {
                round: pt.round,
                p_succ: pt.success_probability,
                fidelity: pt.fidelity,
                closed_form: closed_form_fidelity(ch.fidelity(), &u, pt.round)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    if format == Format::Json {
        return Ok(json(&serde_json::json!({
            "config": { "channel": ch, "rounds": args.rounds },
            "converges": conv.converges,
            "closed_form_exact": conv.hypothesis_holds,
            "rows": rows,
        })));
    }
    let mut out = header(
        "single",
        &format!(
            "{} rounds={} converges={} closed_form_exact={}",
            args.channel.echo(),
            args.rounds,
            conv.converges,
            conv.hypothesis_holds
        ),
    );
    out.push_str("round,p_succ,fidelity,closed_form\n");
    for r in &rows {
        writeln!(out, "{},{},{},{}", r.round, num(r.p_succ), num(r.fidelity), num(r.closed_form)).unwrap();
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct ScanRow {
    pub p0: f64,
    pub asym: f64,
    pub converges: bool,
    pub fidelity: f64,
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}

pub fn scan_rows(args: &ScanArgs) -> CliResult<Vec<ScanRow>> {
    for (name, v) in [
        ("p0-min", args.p0_min),
        ("p0-max", args.p0_max),
        ("asym-min", args.asym_min),
        ("asym-max", args.asym_max),
    ] {
        check_unit(name, v)?;
    }
    if args.p0_steps == 0 || args.asym_steps == 0 || args.p0_min > args.p0_max || args.asym_min > args.asym_max {
        return Err(CliError::Input("empty scan grid".into()));
    }
    let points: Vec<(f64, f64)> = grid(args.p0_min, args.p0_max, args.p0_steps)
        .into_iter()
        .flat_map(|p0| grid(args.asym_min, args.asym_max, args.asym_steps).into_iter().map(move |a| (p0, a)))
        .collect();
    points
        .par_iter()
        .map(|&(p0, asym)| {
            let ch = BellTable::from_marginal_params(p0, asym, PhaseSplit::Uniform)?;
            Ok(ScanRow {
                p0,
                asym,
                converges: converges(&ch).converges,
                fidelity: closed_form_fidelity(p0, &ch.marginals().u, args.rounds)?,
            })
        })
        .collect()
}

pub fn cmd_scan(args: &ScanArgs, format: Format) -> CliResult<String> {
    let rows = scan_rows(args)?;
    if format == Format::Json {
        return Ok(json(&rows));
    }
    let mut out = header(
        "scan",
        &format!(
            "p0={}:{}:{} asym={}:{}:{} rounds={}",
            num(args.p0_min),
            num(args.p0_max),
            args.p0_steps,
            num(args.asym_min),
            num(args.asym_max),
            args.asym_steps,
            args.rounds
        ),
    );
    out.push_str("p0,asym,converges,fidelity\n");
    for r in &rows {
        writeln!(out, "{},{},{},{}", num(r.p0), num(r.asym), r.converges, num(r.fidelity)).unwrap();
    }
    Ok(out)
}

pub fn cmd_mcaepp(args: &McaeppArgs, format: Format) -> CliResult<String> {
    let cases: Vec<(f64, usize)> = args.p.iter().flat_map(|&p| args.m.iter().map(move |&m| (p, m))).collect();
    let fps = cases
        .par_iter()
        .map(|&(p, m)| fixed_point(p, m, args.tol, args.max_rounds))
        .collect::<caepp::Result<Vec<_>>>()?;
    if format == Format::Json {
        return Ok(json(&fps));
    }
    let list = |v: Vec<String>| v.join(",");
    let mut out = header(
        "mcaepp",
        &format!(
            "p={} m={} tol={} max_rounds={}",
            list(args.p.iter().map(|&v| num(v)).collect()),
            list(args.m.iter().map(|v| v.to_string()).collect()),
            num(args.tol),
            args.max_rounds
        ),
    );
    out.push_str("p,m,rounds,fidelity,infidelity,distance\n");
    for fp in &fps {
        for c in &fp.checkpoints {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                num(fp.p),
                fp.m,
                c.rounds,
                num(c.fidelity),
                num(1.0 - c.fidelity),
                num(c.distance)
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn adaptive_schedule(args: &AdaptiveArgs) -> CliResult<Schedule> {
    Ok(match &args.schedule {
        Some(s) => s.parse()?,
        None => Schedule::interleaved(3, args.m)?,
    })
}

pub fn cmd_adaptive(args: &AdaptiveArgs, format: Format) -> CliResult<String> {
    let ch = args.channel.load()?;
    let schedule = adaptive_schedule(args)?;
    let model: CheckModel = args.model.parse()?;
    let run = run_adaptive(&ch, &schedule, &AdaptiveOptions { preprocess: !args.no_preprocess, model })?;
    if format == Format::Json {
        return Ok(json(&run));
    }
    let mut out = header(
        "adaptive",
        &format!(
            "{} schedule={} model={} preprocess={}",
            args.channel.echo(),
            schedule,
            args.model,
            !args.no_preprocess
        ),
    );
    out.push_str("step,phase,fidelity,p_succ,cumulative_success,excess_contractions\n");
    writeln!(out, "0,start,{},1,1,0", num(run.initial_fidelity)).unwrap();
    for (i, r) in run.phases.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            r.phase,
            num(r.fidelity),
            num(r.success_probability),
            num(r.cumulative_success),
            r.excess_contractions
        )
        .unwrap();
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub sample: usize,
    pub check: &'static str,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub max_deviation: f64,
}

/// Random table with i.i.d. uniform weights.
pub fn random_table<R: Rng>(d: usize, rng: &mut R) -> caepp::Result<BellTable> {
    BellTable::from_weights(d, (0..d * d).map(|_| rng.gen::<f64>()).collect())
}

pub fn deviation(a: &RoundOutcome, b: &EnumerationResult) -> f64 {
    a.table.max_abs_diff(&b.table).max((a.success_probability - b.success_probability).abs())
}

fn enum_deviation(a: &EnumerationResult, b: &EnumerationResult) -> f64 {
    a.table.max_abs_diff(&b.table).max((a.success_probability - b.success_probability).abs())
}

pub fn oracle_report(args: &OracleArgs) -> CliResult<OracleReport> {
    caepp::phase_space::check_dim(args.d)?;
    if args.m == 0 {
        return Err(CliError::Input("--m must be at least 1".into()));
    }
    let d = args.d;
    let m = args.m;
    let dense = (d as u128).checked_pow(m as u32 + 2).is_some_and(|n| n <= DENSE_LIMIT);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let inputs: Vec<(BellTable, BellTable, f64)> = (0..args.samples)
        .map(|_| Ok((random_table(d, &mut rng)?, random_table(d, &mut rng)?, rng.gen_range(0.35..1.0))))
        .collect::<caepp::Result<_>>()?;
    let per_sample = inputs
        .par_iter()
        .enumerate()
        .map(|(i, (shared, ch, p))| {
            let mut rows = Vec::new();
            let mut push = |check, deviation| rows.push(OracleRow { sample: i, check, deviation });
            push("single", deviation(&round_update(shared, ch)?, &enumerate_single_round(shared, ch)?));
            let sum = enumerate_sum_circuit(shared, ch, m)?;
            push("sum-circuit", deviation(&sum_circuit_round(shared, ch, m)?, &sum));
            if dense {
                push("statevector-sum", enum_deviation(&statevector_round(shared, ch, m, CircuitKind::SumCircuit)?, &sum));
            }
            let star = CarrierCode::star(d, m)?;
            let star_enum = enumerate_multi_round(shared, ch, m, &star)?;
            if dense {
                push("statevector-star", enum_deviation(&statevector_round(shared, ch, m, CircuitKind::Star)?, &star_enum));
            }
            if d == 3 {
                push("star", deviation(&star_round(shared, ch, m)?, &star_enum));
                let dep = BellTable::depolarizing(3, *p)?;
                let permuted = preprocess_permutation(shared)?;
                let exact = enumerate_multi_round(&permuted, &dep, m, &star)?;
                push("depolarizing", deviation(&round_update_depolarizing(shared, *p, m)?, &exact));
            }
            Ok(rows)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let rows: Vec<OracleRow> = per_sample.into_iter().flatten().collect();
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(OracleReport { rows, max_deviation })
}

/// Renders the report; the caller turns a deviation above [`ORACLE_TOL`]
/// into exit status 5 after writing it.
pub fn cmd_oracle_check(args: &OracleArgs, format: Format) -> CliResult<(String, f64)> {
    let rep = oracle_report(args)?;
    if format == Format::Json {
        return Ok((json(&rep), rep.max_deviation));
    }
    let mut out = header(
        "oracle-check",
        &format!("d={} m={} samples={} seed={}", args.d, args.m, args.samples, args.seed),
    );
    out.push_str("sample,check,deviation\n");
    for r in &rep.rows {
        writeln!(out, "{},{},{}", r.sample, r.check, num(r.deviation)).unwrap();
    }
    writeln!(out, "# max_deviation {}", num(rep.max_deviation)).unwrap();
    Ok((out, rep.max_deviation))
}

pub fn cmd_mub(args: &MubArgs, format: Format) -> CliResult<String> {
    let ch = args.channel.load()?;
    let (pre, rotated) = caepp::adaptive::mub_preprocess(&ch)?;
    if format == Format::Json {
        return Ok(json(&serde_json::json!({
            "preprocessing": pre,
            "rotated": rotated,
        })));
    }
    let mut out = header("mub", &args.channel.echo());
    out.push_str("index,line,weight,chosen,map\n");
    for (i, (line, w)) in pre.weights.lines.iter().zip(&pre.weights.weights).enumerate() {
        let chosen = i == pre.weights.argmax;
        let map = if chosen { format!("\"{}\"", pre.map) } else { String::new() };
        writeln!(out, "{i},{:?},{},{chosen},{map}", line.kind, num(*w)).unwrap();
    }
    Ok(out)
}

/// Runs a parsed command line. The second value is the exit status the
/// binary should report after writing the output.
pub fn run(cli: &Cli) -> CliResult<(String, u8)> {
    let f = cli.format;
    Ok(match &cli.command {
        Command::Single(a) => (cmd_single(a, f)?, 0),
        Command::Scan(a) => (cmd_scan(a, f)?, 0),
        Command::Mcaepp(a) => (cmd_mcaepp(a, f)?, 0),
        Command::Adaptive(a) => (cmd_adaptive(a, f)?, 0),
        Command::OracleCheck(a) => {
            let (text, dev) = cmd_oracle_check(a, f)?;
            let code = if dev > ORACLE_TOL { CliError::Mismatch(dev).exit_code() } else { 0 };
            (text, code)
        }
        Command::Mub(a) => (cmd_mub(a, f)?, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.6223776223776224), "0.622377622378");
        assert_eq!(num(0.20947265625), "0.20947265625");
        assert_eq!(num(5.4563841e-7), "5.4563841e-07");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(1e15), "1e+15");
        assert_eq!(num(0.0001), "0.0001");
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(0.1, 0.2, 1), vec![0.1]);
        let g = grid(0.0, 1.0, 5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}

//! Command-line front end: runs the exact solvers and the Monte-Carlo
//! estimators, writing CSV (or JSON) for external plotting.
//!
//! Every output file starts with a manifest comment line carrying the full
//! parameter set, so any table can be regenerated from its own header.
//!
//! Exit codes: 0 ok, 1 usage error, 2 conjecture counterexample (a
//! certificate file is written next to the output), 3 verification or I/O
//! failure.

use alphacf::cfrac::Interval;
use alphacf::entropy::{
    birkhoff_entropy, density_histogram, entropy_extrapolate, fit_hyperbola, fit_windows,
    sigma_profile, EstimatorConfig, ExtrapolationModel,
};
use alphacf::matching::{scan_candidate, solve_matching, MatchingInterval};
use alphacf::tree::{cluster_point, coverage, doubling_chain, generate_tree, TreeError};
use alphacf::CFString;
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "alphacf", version, about = "alpha-continued-fraction experiments")]
struct Cli {
    /// Worker threads for the parallel stages (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bisection tree of matching intervals and gaps.
    Tree(TreeArgs),
    /// Birkhoff-entropy scan over a parameter window.
    Entropy(EntropyArgs),
    /// Random-seed candidate scan with exact solving.
    Scan(ScanArgs),
    /// Period-doubling chain of adjacent intervals.
    Chain(ChainArgs),
    /// Invariant-density histogram with hyperbola fits.
    Density(DensityArgs),
    /// Logarithmic vs linear entropy extrapolation across an interval.
    Extrapolate(ExtrapolateArgs),
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, default_value_t = 8)]
    depth: u32,
    /// Coverage window, e.g. `0.2,1`.
    #[arg(long, default_value = "0.2,1")]
    window: String,
    /// Output path prefix; writes `<out>_intervals.csv` and `<out>_gaps.csv`
    /// (or `.json` with `--format json`).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    window: String,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Iterations per orbit (N).
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Sample orbits per parameter (M).
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-16)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    window: String,
    /// Number of rational seeds, evenly spaced over the window.
    #[arg(long, default_value_t = 1000)]
    seeds: usize,
    #[arg(long, default_value_t = 40)]
    kmax: u64,
    /// Float pre-screening tolerance; exact verification decides.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 6)]
    levels: u32,
    /// Starting label (odd length), e.g. `1` or `3`.
    #[arg(long, default_value = "1")]
    start: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    alpha: f64,
    /// Orbit points accumulated in the histogram.
    #[arg(long, default_value_t = 100_000_000)]
    iters: usize,
    #[arg(long, default_value_t = 2000)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    kmax: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtrapolateArgs {
    #[arg(long)]
    alpha0: f64,
    /// Prediction window for the comparison grid.
    #[arg(long)]
    window: String,
    /// Window of known entropy data used to fit `h0`.
    #[arg(long, default_value = "0.3028,0.3042")]
    fit_window: String,
    #[arg(long, default_value_t = 10)]
    grid: usize,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 3000)]
    samples: usize,
    #[arg(long, default_value_t = 100_000_000)]
    density_iters: usize,
    #[arg(long, default_value_t = 2000)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's help/version on stdout with success status
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    let outcome = match cli.command {
        Command::Tree(args) => cmd_tree(args),
        Command::Entropy(args) => cmd_entropy(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Chain(args) => cmd_chain(args),
        Command::Density(args) => cmd_density(args),
        Command::Extrapolate(args) => cmd_extrapolate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

/// Parses `a,b` with plain decimal entries into exact rationals.
fn parse_window(s: &str) -> Result<(BigRational, BigRational), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("window must be `lo,hi`, got {s:?}"));
    }
    let lo = parse_decimal(parts[0].trim())?;
    let hi = parse_decimal(parts[1].trim())?;
    if lo >= hi {
        return Err(format!("window is empty: {s:?}"));
    }
    Ok((lo, hi))
}

fn parse_decimal(s: &str) -> Result<BigRational, String> {
    let bad = || format!("cannot parse decimal {s:?}");
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let digits = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u8).pow(frac_part.len() as u32);
    Ok(BigRational::new(num, den))
}

fn ratio_f64(r: &BigRational) -> f64 {
    alphacf::exactnum::ratio_to_f64(r.numer(), r.denom())
}

fn label_str(label: &Option<CFString>) -> String {
    label.as_ref().map(|l| l.to_string()).unwrap_or_else(|| "-".into())
}

fn interval_row(mi: &MatchingInterval) -> String {
    format!(
        "{},{},{:.6e},{},{},\"{}\",\"{}\",{}",
        mi.k1,
        mi.k2,
        mi.size_f64(),
        mi.interval.lo,
        mi.interval.hi,
        label_str(&mi.label_lo),
        label_str(&mi.label_hi),
        mi.monotonicity.as_str()
    )
}

const INTERVAL_HEADER: &str = "k1,k2,size,lo,hi,label_lo,label_hi,monotonicity";

fn write_file(path: &PathBuf, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)
}

fn with_suffix(prefix: &PathBuf, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

#[derive(Serialize)]
struct IntervalExport {
    level: u32,
    k1: u64,
    k2: u64,
    size: f64,
    lo: String,
    hi: String,
    label_lo: Option<String>,
    label_hi: Option<String>,
    monotonicity: String,
}

#[derive(Serialize)]
struct GapExport {
    level: u32,
    is_point: bool,
    lo: String,
    hi: String,
    label_lo: Option<String>,
    label_hi: Option<String>,
}

fn cmd_tree(args: TreeArgs) -> CmdResult {
    let (wlo, whi) = parse_window(&args.window).map_err(usage)?;
    let manifest = format!(
        "# alphacf tree depth={} window={} format={}",
        args.depth, args.window, args.format
    );
    let tree = match generate_tree(args.depth) {
        Ok(t) => t,
        Err(TreeError::Verification { seed, detail }) => {
            let cert = with_suffix(&args.out, "_certificate.txt");
            write_file(
                &cert,
                &format!("conjecture counterexample\npseudocenter: {seed}\ndetail: {detail}\n"),
            )?;
            eprintln!("conjecture counterexample at {seed}: {detail}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let ivs: Vec<&Interval> = tree.intervals.iter().map(|(_, mi)| &mi.interval).collect();
    let (cov_lo, cov_hi) = coverage(&ivs, (&wlo, &whi));
    let cov = format!(
        "# coverage window=[{},{}] lower={:.6} upper={:.6}",
        ratio_f64(&wlo),
        ratio_f64(&whi),
        ratio_f64(&cov_lo),
        ratio_f64(&cov_hi)
    );
    println!("{cov}");

    if args.format == "json" {
        let intervals: Vec<IntervalExport> = tree
            .intervals
            .iter()
            .map(|(lvl, mi)| IntervalExport {
                level: *lvl,
                k1: mi.k1,
                k2: mi.k2,
                size: mi.size_f64(),
                lo: mi.interval.lo.to_string(),
                hi: mi.interval.hi.to_string(),
                label_lo: mi.label_lo.as_ref().map(|l| l.to_string()),
                label_hi: mi.label_hi.as_ref().map(|l| l.to_string()),
                monotonicity: mi.monotonicity.as_str().into(),
            })
            .collect();
        let gaps: Vec<GapExport> = tree
            .final_gaps()
            .iter()
            .map(|g| GapExport {
                level: g.level,
                is_point: g.is_point,
                lo: g.interval.lo.to_string(),
                hi: g.interval.hi.to_string(),
                label_lo: g.label_lo.as_ref().map(|l| l.to_string()),
                label_hi: g.label_hi.as_ref().map(|l| l.to_string()),
            })
            .collect();
        let doc = serde_json::json!({
            "manifest": manifest,
            "coverage": { "lower": ratio_f64(&cov_lo), "upper": ratio_f64(&cov_hi) },
            "intervals": intervals,
            "gaps": gaps,
        });
        write_file(&with_suffix(&args.out, "_tree.json"), &serde_json::to_string_pretty(&doc)?)?;
        return Ok(ExitCode::SUCCESS);
    }

    let mut icsv = format!("{manifest}\n{cov}\nlevel,{INTERVAL_HEADER}\n");
    for (lvl, mi) in &tree.intervals {
        writeln!(icsv, "{lvl},{}", interval_row(mi))?;
    }
    write_file(&with_suffix(&args.out, "_intervals.csv"), &icsv)?;

    let mut gcsv = format!("{manifest}\nlevel,is_point,lo,hi,label_lo,label_hi\n");
    for gaps in &tree.gap_levels {
        for g in gaps {
            writeln!(
                gcsv,
                "{},{},{},{},\"{}\",\"{}\"",
                g.level,
                g.is_point,
                g.interval.lo,
                g.interval.hi,
                label_str(&g.label_lo),
                label_str(&g.label_hi)
            )?;
        }
    }
    write_file(&with_suffix(&args.out, "_gaps.csv"), &gcsv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_entropy(args: EntropyArgs) -> CmdResult {
    let (wlo, whi) = parse_window(&args.window).map_err(usage)?;
    let mut cfg = EstimatorConfig::new(args.iters, args.samples, args.seed);
    cfg.epsilon = args.epsilon;
    let estimates = sigma_profile((ratio_f64(&wlo), ratio_f64(&whi)), args.grid, &cfg);
    let mut csv = format!(
        "# alphacf entropy window={} grid={} iters={} samples={} epsilon={:e} seed={}\n",
        args.window, args.grid, args.iters, args.samples, args.epsilon, args.seed
    );
    csv.push_str("alpha,mean,std,iterations,samples,epsilon,seed\n");
    for est in estimates {
        writeln!(
            csv,
            "{:.12},{:.9},{:.9},{},{},{:e},{}",
            est.alpha, est.mean, est.std, est.iterations, est.samples, args.epsilon, args.seed
        )?;
    }
    write_file(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(args: ScanArgs) -> CmdResult {
    let (wlo, whi) = parse_window(&args.window).map_err(usage)?;
    let step = (&whi - &wlo) / BigRational::from_integer(BigInt::from(args.seeds as i64 + 1));
    let mut found: BTreeMap<String, MatchingInterval> = BTreeMap::new();
    let mut rejected = 0u64;
    for i in 1..=args.seeds {
        let seed = &wlo + &step * BigRational::from_integer(BigInt::from(i as i64));
        let Some(cand) = scan_candidate(&seed, args.kmax, args.tol) else {
            continue;
        };
        match solve_matching(&cand) {
            Ok(mi) => {
                found.entry(mi.interval.lo.to_string()).or_insert(mi);
            }
            Err(_) => rejected += 1,
        }
    }
    let mut rows: Vec<&MatchingInterval> = found.values().collect();
    rows.sort_by(|a, b| a.interval.lo.cmp_value(&b.interval.lo));
    let mut csv = format!(
        "# alphacf scan window={} seeds={} kmax={} tol={:e} rejected={}\n{INTERVAL_HEADER}\n",
        args.window, args.seeds, args.kmax, args.tol, rejected
    );
    for mi in rows {
        writeln!(csv, "{}", interval_row(mi))?;
    }
    write_file(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_chain(args: ChainArgs) -> CmdResult {
    let start = CFString::from_str(&args.start).map_err(|e| usage(e.to_string()))?;
    let chain = match doubling_chain(&start, args.levels) {
        Ok(c) => c,
        Err(TreeError::Verification { seed, detail }) => {
            let cert = with_suffix(&args.out, "_certificate.txt");
            write_file(
                &cert,
                &format!("conjecture counterexample\npseudocenter: {seed}\ndetail: {detail}\n"),
            )?;
            eprintln!("conjecture counterexample at {seed}: {detail}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let cp = cluster_point(&start, args.levels.max(8))?;
    let mut csv = format!(
        "# alphacf chain start={} levels={}\n# cluster_point={} prefix=[0;{},...]\nlabel,{INTERVAL_HEADER}\n",
        args.start,
        args.levels,
        &cp.decimal[..cp.decimal.len().min(42)],
        cp.prefix
            .quotients()
            .iter()
            .take(16)
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    for link in chain.iter().rev() {
        writeln!(csv, "\"{}\",{}", link.label, interval_row(&link.matching))?;
    }
    write_file(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_density(args: DensityArgs) -> CmdResult {
    let hist = density_histogram(args.alpha, args.iters, args.bins, args.seed);
    let mut csv = format!(
        "# alphacf density alpha={} iters={} bins={} seed={}\nbin_lo,bin_hi,density\n",
        args.alpha, args.iters, args.bins, args.seed
    );
    let w = hist.bin_width();
    for i in 0..hist.bins() {
        let lo = args.alpha - 1.0 + i as f64 * w;
        writeln!(csv, "{:.9},{:.9},{:.9}", lo, lo + w, hist.density(i))?;
    }
    write_file(&with_suffix(&args.out, "_hist.csv"), &csv)?;

    // hyperbola fits on the two windows bounded by the interior orbit set,
    // available when alpha sits inside a detected matching interval
    let alpha_r = parse_decimal(&format!("{:.12}", args.alpha)).map_err(usage)?;
    let mut fit_csv = format!(
        "# alphacf density-fit alpha={} iters={} bins={} seed={}\nbranch,A,B,window_lo,window_hi,residual\n",
        args.alpha, args.iters, args.bins, args.seed
    );
    if let Some(cand) = scan_candidate(&alpha_r, args.kmax, 1e-10) {
        if let Ok(mi) = solve_matching(&cand) {
            let (right_w, left_w) = fit_windows(&alpha_r, &mi)?;
            for (name, w) in [("plus", right_w), ("minus", left_w)] {
                match fit_hyperbola(&hist, w) {
                    Ok(fit) => writeln!(
                        fit_csv,
                        "{},{:.6},{:.6},{:.9},{:.9},{:.3e}",
                        name, fit.a, fit.b, fit.window.0, fit.window.1, fit.residual
                    )?,
                    Err(e) => writeln!(fit_csv, "{name},,,,,\"{e}\"")?,
                }
            }
        }
    }
    write_file(&with_suffix(&args.out, "_fit.csv"), &fit_csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_extrapolate(args: ExtrapolateArgs) -> CmdResult {
    let (plo, phi) = parse_window(&args.window).map_err(usage)?;
    let (flo, fhi) = parse_window(&args.fit_window).map_err(usage)?;
    let alpha_r = parse_decimal(&format!("{:.12}", args.alpha0)).map_err(usage)?;
    let cand = scan_candidate(&alpha_r, 40, 1e-10)
        .ok_or("no matching detected at alpha0")?;
    let mi = solve_matching(&cand)?;

    let hist = density_histogram(args.alpha0, args.density_iters, args.bins, args.seed);
    let (right_w, _) = fit_windows(&alpha_r, &mi)?;
    let fit = fit_hyperbola(&hist, right_w)?;

    let cfg = EstimatorConfig::new(args.iters, args.samples, args.seed);
    // entropy data on the fit window, used for h0 and for the linear rival
    let fit_pts = sigma_profile((ratio_f64(&flo), ratio_f64(&fhi)), 12, &cfg);
    let mut model = ExtrapolationModel {
        alpha0: args.alpha0,
        h0: 1.0,
        k1: mi.k1,
        k2: mi.k2,
        a: fit.a,
        b: fit.b,
    };
    // one-parameter least squares for h0: h_i ~ h0 / D_i
    let (mut num, mut den) = (0.0, 0.0);
    for est in &fit_pts {
        let d = model.eval_unchecked(est.alpha); // equals h0/D with h0 = 1
        num += est.mean * d;
        den += d * d;
    }
    model.h0 = num / den;
    // least-squares line on the same data
    let n = fit_pts.len() as f64;
    let sx: f64 = fit_pts.iter().map(|e| e.alpha).sum();
    let sy: f64 = fit_pts.iter().map(|e| e.mean).sum();
    let sxx: f64 = fit_pts.iter().map(|e| e.alpha * e.alpha).sum();
    let sxy: f64 = fit_pts.iter().map(|e| e.alpha * e.mean).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let icept = (sy - slope * sx) / n;

    let mut csv = format!(
        "# alphacf extrapolate alpha0={} window={} fit_window={} grid={} iters={} samples={} seed={}\n",
        args.alpha0, args.window, args.fit_window, args.grid, args.iters, args.samples, args.seed
    );
    writeln!(
        csv,
        "# h0={:.6} A={:.6} B={:.6} k1={} k2={}",
        model.h0, model.a, model.b, mi.k1, mi.k2
    )?;
    csv.push_str("alpha,h_birkhoff,h_log,h_linear\n");
    let (glo, ghi) = (ratio_f64(&plo), ratio_f64(&phi));
    let (mut rms_log, mut rms_lin) = (0.0, 0.0);
    for i in 0..args.grid {
        let a = if args.grid == 1 {
            (glo + ghi) / 2.0
        } else {
            glo + (ghi - glo) * i as f64 / (args.grid - 1) as f64
        };
        let est = birkhoff_entropy(a, &cfg);
        let h_log = entropy_extrapolate(&model, a, &mi)?;
        let h_lin = icept + slope * a;
        rms_log += (est.mean - h_log).powi(2);
        rms_lin += (est.mean - h_lin).powi(2);
        writeln!(csv, "{:.9},{:.9},{:.9},{:.9}", a, est.mean, h_log, h_lin)?;
    }
    rms_log = (rms_log / args.grid as f64).sqrt();
    rms_lin = (rms_lin / args.grid as f64).sqrt();
    writeln!(csv, "# rms_log={rms_log:.3e} rms_linear={rms_lin:.3e}")?;
    write_file(&args.out, &csv)?;
    println!("# rms_log={rms_log:.3e} rms_linear={rms_lin:.3e}");
    Ok(ExitCode::SUCCESS)
}

fn usage(msg: impl std::fmt::Display) -> Box<dyn std::error::Error> {
    // report and force the usage exit code
    eprintln!("usage error: {msg}");
    std::process::exit(1);
}

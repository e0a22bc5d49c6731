//! Command-line front end.
//!
//! Exit codes: 0 certified (or nothing to certify), 1 input error, 2 solved
//! but uncertified or not converged.

pub mod files;
pub mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{self, Certificate};
use crate::model::{enumerate_full_topologies, Instance};
use crate::optimize::{solve_mga, OptimizeOptions};
use crate::special;
use crate::weights::WeightFunction;
use files::{parse_instance, parse_solution, solution_to_json, SolutionFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gilbert", version, about = "Minimum Gilbert arborescences: solve, certify, draw")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance file and write the solution as JSON.
    Solve {
        instance: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certificate tolerance, relative to w(total tonnage).
        #[arg(long, default_value_t = certify::DEFAULT_TOLERANCE)]
        tol: f64,
        /// Newton iteration budget per topology.
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
    },
    /// Check the optimality conditions of a solution against its instance.
    Certify {
        solution: PathBuf,
        instance: PathBuf,
        #[arg(long, default_value_t = certify::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Recompute one of the classical examples.
    Repro { which: Repro },
    /// Draw a planar solution.
    Svg {
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count (and optionally list) the full topologies on n sources.
    Enumerate {
        n: usize,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = crate::model::DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Repro {
    Counterexample,
    Melzak,
    Degree4,
    Falpha,
    #[value(name = "lemma5")]
    PairwiseSlack,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Solve { instance, out: path, tol, max_iters } => {
            cmd_solve(&instance, path.as_deref(), tol, max_iters, out, err)
        }
        Command::Certify { solution, instance, tol } => cmd_certify(&solution, &instance, tol, out),
        Command::Repro { which } => cmd_repro(which, out).map(|_| EXIT_OK),
        Command::Svg { solution, out: path } => cmd_svg(&solution, path.as_deref(), out),
        Command::Enumerate { n, list, cap } => cmd_enumerate(n, list, cap, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

type CmdResult = Result<i32, Box<dyn std::error::Error>>;

fn read(path: &Path) -> Result<String, Box<dyn std::error::Error>> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_instance(path: &Path) -> Result<Instance, Box<dyn std::error::Error>> {
    parse_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn cmd_solve(
    instance: &Path,
    out_path: Option<&Path>,
    tol: f64,
    max_iters: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let inst = load_instance(instance)?;
    let opts = OptimizeOptions { certificate_tol: tol, max_iters, ..Default::default() };
    let sol = solve_mga(&inst, &opts)?;
    for w in &sol.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let file = SolutionFile::new(&inst, &sol.embedding, &sol.certificate, sol.converged);
    emit(out_path, &(solution_to_json(&file) + "\n"), out)?;
    Ok(if sol.converged && sol.certificate.is_certified() { EXIT_OK } else { EXIT_UNCERTIFIED })
}

fn write_certificate(inst: &Instance, cert: &Certificate, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "verdict: {}", files::verdict_text(inst, &cert.verdict))?;
    writeln!(out, "tolerance: {:e}", cert.tolerance)?;
    for s in &cert.stars {
        writeln!(
            out,
            "{}: balancing residual {:e}, min collapsing slack {:e}",
            inst.vertex_label(s.vertex),
            s.balancing_residual,
            s.min_collapsing_margin
        )?;
        for (subset, m) in s.collapsing_margins.iter().filter(|(_, m)| *m < -cert.tolerance) {
            let ids: Vec<String> = subset.iter().map(|&v| inst.vertex_label(v)).collect();
            writeln!(out, "  slack {:e} for {{{}}}", m, ids.join(", "))?;
        }
    }
    for t in &cert.terminals {
        writeln!(out, "{} (terminal): stationarity residual {:e}", inst.vertex_label(t.vertex), t.residual)?;
    }
    for n in &cert.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

pub fn cmd_certify(solution: &Path, instance: &Path, tol: f64, out: &mut dyn Write) -> CmdResult {
    let inst = load_instance(instance)?;
    let sol = parse_solution(&read(solution)?).map_err(|e| format!("{}: {e}", solution.display()))?;
    let emb = sol.to_embedding(&inst)?;
    let cert = certify::certify_embedding(&inst, &emb, tol)?;
    write_certificate(&inst, &cert, out)?;
    Ok(if cert.is_certified() { EXIT_OK } else { EXIT_UNCERTIFIED })
}

pub fn cmd_svg(solution: &Path, out_path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let sol = parse_solution(&read(solution)?).map_err(|e| format!("{}: {e}", solution.display()))?;
    emit(out_path, &svg::render(&sol)?, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_enumerate(n: usize, list: bool, cap: usize, out: &mut dyn Write) -> CmdResult {
    let tops = enumerate_full_topologies(n, cap)?;
    writeln!(out, "{}", tops.len())?;
    if list {
        for t in &tops {
            let parts: Vec<String> = t
                .canonical_key()
                .iter()
                .map(|(cluster, parent)| format!("{cluster:?}->{parent}"))
                .collect();
            writeln!(out, "{}", parts.join(" "))?;
        }
    }
    Ok(EXIT_OK)
}

/// Minimum and a witness tuple of the pairwise-sum slack for `f = w²`, over
/// random weights `d + h t^α` and random tonnage tuples.
pub fn pairwise_slack_search(alpha: f64, trials: usize, seed: u64) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (f64::INFINITY, Vec::new());
    for _ in 0..trials {
        let d = rng.gen_range(0.0..2.0_f64).max(1e-3);
        let h = rng.gen_range(0.0..2.0_f64).max(1e-3);
        let w = WeightFunction::power(d, h, alpha).expect("valid parameters");
        let m = rng.gen_range(2..=6);
        let ts: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..10.0)).collect();
        let slack = special::pairwise_convexity_slack(|t| w.eval_unchecked(t).powi(2), &ts)
            .expect("valid tonnages");
        if slack < worst.0 {
            worst = (slack, ts);
        }
    }
    worst
}

pub fn cmd_repro(which: Repro, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    match which {
        Repro::Counterexample => {
            let c = special::split_counterexample()?;
            let solved = solve_mga(&c.instance, &OptimizeOptions::default())?;
            let closed = (9982.5 + 7.0 * 3890.25f64.sqrt()).sqrt();
            writeln!(out, "split={:.6}, arborescence={:.6}", c.split_cost, c.arborescence_cost)?;
            writeln!(out, "expected: split=102, arborescence=sqrt(9982.5 + 7 sqrt(3890.25)) = {closed:.9}")?;
            writeln!(out, "solver arborescence={:.9}", solved.embedding.cost())?;
        }
        Repro::Melzak => {
            let inst = special::rounded_affine_triangle();
            let m = special::melzak_two_source(
                inst.terminal(0),
                inst.terminal(1),
                inst.sink(),
                2.0,
                4.0,
                inst.weight(),
            )?;
            let d = |a: &[f64], b: &[f64]| (a[0] - b[0]).hypot(a[1] - b[1]);
            writeln!(
                out,
                "|p-p1|={:.6} (expected 0.7), |p-p2|={:.6} (expected 0.4)",
                d(&m.auxiliary_point, inst.terminal(0)),
                d(&m.auxiliary_point, inst.terminal(1))
            )?;
            writeln!(out, "p=({:.6}, {:.6})", m.auxiliary_point[0], m.auxiliary_point[1])?;
            writeln!(out, "s=({:.6}, {:.6})", m.steiner_point[0], m.steiner_point[1])?;
            writeln!(out, "cost={:.9}, degenerate={}", m.total_cost, m.degenerate)?;
        }
        Repro::Degree4 => {
            let w = WeightFunction::power(0.2, 1.0, 0.75)?;
            let (_, slack) = special::degree4_feasible(&w, 1.0)?;
            let star = special::degree4_construct(&w, 1.0)?;
            let cert = certify::certify_embedding(&star.instance, &star.embedding, certify::DEFAULT_TOLERANCE)?;
            writeln!(out, "w(t) = 0.2 + t^0.75, t = 1")?;
            writeln!(out, "condition slack 3w(2t)^2 - 3w(t)^2 - w(3t)^2 = {slack:.9}")?;
            writeln!(out, "lambda = {:.9}", star.lambda)?;
            for (i, v) in star.vectors.iter().enumerate() {
                writeln!(out, "v{} = ({:.9}, {:.9}, {:.9})", i + 1, v[0], v[1], v[2])?;
            }
            writeln!(out, "certificate: {}", files::verdict_text(&star.instance, &cert.verdict))?;
        }
        Repro::Falpha => {
            writeln!(out, "f(0.5) = {:e}", special::f_alpha(0.5))?;
            writeln!(out, "f(1)   = {:e}", special::f_alpha(1.0))?;
            for k in (55..=95).step_by(5) {
                let a = k as f64 / 100.0;
                writeln!(out, "f({a:.2}) = {:.9}", special::f_alpha(a))?;
            }
        }
        Repro::PairwiseSlack => {
            writeln!(out, "slack of the pairwise-sum inequality for f = w^2, w = d + h t^alpha (10^4 trials each)")?;
            for alpha in [0.1, 0.3, 0.5, 1.0, 0.75] {
                let (min, witness) = pairwise_slack_search(alpha, 10_000, 7);
                writeln!(out, "alpha={alpha:.2}: min slack {min:e} at {witness:.4?}")?;
            }
        }
    }
    Ok(())
}

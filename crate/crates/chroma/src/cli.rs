//! Command-line surface: colorability decisions, witness-polynomial scans
//! and the decision-tree compiler, with deterministic byte-for-byte reports.
//!
//! Exit codes: 0 for a positive answer (colorable / member / in), 1 for a
//! negative one, 2 for any error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::coloring::{brute_force_colorable, decide_colorable};
use crate::field::FieldCtx;
use crate::graph::OrientedGraph;
use crate::slp::full_pipeline;
use crate::tree::{DecisionTree, Label};
use crate::witness::{conjecture_scan, MinorMode};

const SCHEMA: &str = "chroma-report v1";

const EXIT_HELP: &str = "Exit codes:\n  0  positive answer (colorable, member, in)\n  1  negative answer\n  2  error";

#[derive(Parser)]
#[command(
    name = "chroma",
    version,
    about = "Finite-field graph coloring and decision-tree compilation",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Tabular,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Delta,
    AllMinors,
}

impl From<ModeArg> for MinorMode {
    fn from(m: ModeArg) -> MinorMode {
        match m {
            ModeArg::Delta => MinorMode::Delta,
            ModeArg::AllMinors => MinorMode::AllMinors,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a graph admits a coloring by nonzero field elements
    Color {
        /// Field spec p^n, e.g. 2^2 or 5^1
        #[arg(long)]
        field: String,
        /// Graph file
        graph: PathBuf,
    },
    /// Witness polynomials along the line from one graph array toward another
    Witness {
        #[arg(long)]
        field: String,
        /// Parameter value to test for membership (canonical encoding)
        #[arg(long)]
        t0: u64,
        /// Which maximal minors feed the gcd
        #[arg(long, value_enum, default_value = "all-minors")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
        graph1: PathBuf,
        graph2: PathBuf,
    },
    /// Decision-tree commands
    Tree {
        #[command(subcommand)]
        cmd: TreeCmd,
    },
}

#[derive(Subcommand)]
enum TreeCmd {
    /// Evaluate a tree on one input and print the leaf label
    Run {
        #[arg(long)]
        field: String,
        tree: PathBuf,
        /// Input element (canonical encoding)
        x: u64,
    },
    /// Rewrite a tree and compile its characteristic polynomial
    Compile {
        #[arg(long)]
        field: String,
        /// Write the compiled sequence to a file
        #[arg(long)]
        emit_slp: Option<PathBuf>,
        tree: PathBuf,
    },
}

/// Worker cap for the alpha scan, from CHROMA_THREADS (default 1).
fn thread_cap() -> Result<usize, String> {
    match std::env::var("CHROMA_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => s
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| format!("CHROMA_THREADS must be a positive integer, got {s:?}")),
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn encodings_csv(encs: &[u64]) -> String {
    encs.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn main() -> ExitCode {
    match run() {
        Ok((report, code)) => {
            // A consumer closing the pipe early is not an error.
            let _ = std::io::stdout().write_all(report.as_bytes());
            code
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<(String, ExitCode), String> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Color { field, graph } => cmd_color(&field, &graph),
        Cmd::Witness { field, t0, mode, format, graph1, graph2 } => {
            cmd_witness(&field, t0, mode.into(), format, &graph1, &graph2)
        }
        Cmd::Tree { cmd } => match cmd {
            TreeCmd::Run { field, tree, x } => cmd_tree_run(&field, &tree, x),
            TreeCmd::Compile { field, emit_slp, tree } => {
                cmd_tree_compile(&field, emit_slp.as_ref(), &tree)
            }
        },
    }
}

fn cmd_color(field: &str, graph: &PathBuf) -> Result<(String, ExitCode), String> {
    let ctx = FieldCtx::from_spec(field).map_err(|e| e.to_string())?;
    let g = OrientedGraph::parse(&read(graph)?).map_err(|e| e.to_string())?;
    let threads = thread_cap()?;
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEMA}");
    let _ = writeln!(out, "field {field}");
    match decide_colorable(&g, &ctx, threads) {
        Some((alpha, coloring)) => {
            let _ = writeln!(
                out,
                "COLORABLE alpha={} colors={}",
                encodings_csv(&alpha.encodings()),
                encodings_csv(&coloring.encodings())
            );
            Ok((out, ExitCode::SUCCESS))
        }
        None => {
            debug_assert!(brute_force_colorable(&g, &ctx).is_none());
            let _ = writeln!(out, "UNCOLORABLE");
            Ok((out, ExitCode::from(1)))
        }
    }
}

fn cmd_witness(
    field: &str,
    t0: u64,
    mode: MinorMode,
    format: Format,
    graph1: &PathBuf,
    graph2: &PathBuf,
) -> Result<(String, ExitCode), String> {
    let ctx = FieldCtx::from_spec(field).map_err(|e| e.to_string())?;
    let t0 = ctx.element(t0).map_err(|e| e.to_string())?;
    let g1 = OrientedGraph::parse(&read(graph1)?).map_err(|e| e.to_string())?;
    let g2 = OrientedGraph::parse(&read(graph2)?).map_err(|e| e.to_string())?;
    let report = conjecture_scan(&ctx, &g1, &g2, mode).map_err(|e| e.to_string())?;
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEMA}");
    let _ = writeln!(out, "field {field}");
    let _ = writeln!(out, "mode {}", mode.name());
    let _ = writeln!(out, "t0 {t0}");
    let rows: Vec<(String, String, String)> = report
        .factors
        .iter()
        .map(|(alpha, f)| {
            (
                encodings_csv(&alpha.encodings()),
                f.render(),
                f.eval(&ctx, t0).to_string(),
            )
        })
        .collect();
    match format {
        Format::Plain => {
            for (alpha, f, at) in &rows {
                let _ = writeln!(out, "alpha {alpha} f= {f} f(t0)= {at}");
            }
        }
        Format::Tabular => {
            let w1 = rows.iter().map(|r| r.0.len()).max().unwrap_or(5).max(5);
            let w2 = rows.iter().map(|r| r.1.len()).max().unwrap_or(1).max(1);
            let _ = writeln!(out, "{:<w1$} | {:<w2$} | f(t0)", "alpha", "f");
            for (alpha, f, at) in &rows {
                let _ = writeln!(out, "{alpha:<w1$} | {f:<w2$} | {at}");
            }
        }
    }
    match report.phi_degree {
        Some(d) => {
            let _ = writeln!(out, "phi degree {d}");
        }
        None => {
            let _ = writeln!(out, "phi degree none (zero polynomial)");
        }
    }
    match report.chi_degree {
        Some(d) => {
            let _ = writeln!(out, "chi degree {d}");
        }
        None => {
            let _ = writeln!(out, "chi degree none (zero polynomial)");
        }
    }
    match report.ps_reference {
        Some(r) => {
            let _ = writeln!(out, "ps-reference {r:.4}");
        }
        None => {
            let _ = writeln!(out, "ps-reference none");
        }
    }
    let member = report
        .factors
        .iter()
        .any(|(_, f)| f.eval(&ctx, t0).is_zero());
    let _ = writeln!(out, "membership at t0: {}", if member { "YES" } else { "NO" });
    let code = if member { ExitCode::SUCCESS } else { ExitCode::from(1) };
    Ok((out, code))
}

fn cmd_tree_run(field: &str, tree: &PathBuf, x: u64) -> Result<(String, ExitCode), String> {
    let ctx = FieldCtx::from_spec(field).map_err(|e| e.to_string())?;
    let x = ctx.element(x).map_err(|e| e.to_string())?;
    let t = DecisionTree::parse(&ctx, &read(tree)?).map_err(|e| e.to_string())?;
    let (label, _) = t.evaluate(&ctx, x).map_err(|e| e.to_string())?;
    let code = match label {
        Label::In => ExitCode::SUCCESS,
        Label::Out => ExitCode::from(1),
    };
    Ok((format!("{label}\n"), code))
}

fn cmd_tree_compile(
    field: &str,
    emit_slp: Option<&PathBuf>,
    tree: &PathBuf,
) -> Result<(String, ExitCode), String> {
    let ctx = FieldCtx::from_spec(field).map_err(|e| e.to_string())?;
    let t = DecisionTree::parse(&ctx, &read(tree)?).map_err(|e| e.to_string())?;
    let r = full_pipeline(&t, &ctx).map_err(|e| e.to_string())?;
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEMA}");
    let _ = writeln!(out, "field {field}");
    for s in &r.stages {
        let _ = writeln!(
            out,
            "stage {} size={} width={} nodes={}",
            s.name, s.size, s.width, s.nodes
        );
    }
    for (i, round) in r.rounds.iter().enumerate() {
        let _ = writeln!(
            out,
            "round {}: width {} -> {}, size {} -> {} (limit +{}), retracts {}, fallbacks {}",
            i + 1,
            round.width_before,
            round.width_after,
            round.size_before,
            round.size_after,
            round.growth_limit,
            round.retracts,
            round.fallbacks
        );
    }
    if r.domain_extended.is_empty() {
        let _ = writeln!(out, "domain-extended inputs: none");
    } else {
        let _ = writeln!(
            out,
            "domain-extended inputs: {}",
            encodings_csv(&r.domain_extended)
        );
    }
    let _ = writeln!(out, "chi oracle: {}", r.oracle.render());
    let _ = writeln!(out, "chi tabulated: {}", r.verbatim.render());
    let _ = writeln!(out, "chi normalized: {}", r.normalized.render());
    for x in ctx.elements() {
        let o = r.oracle.eval(&ctx, x);
        let v = r.verbatim.eval(&ctx, x);
        let _ = writeln!(
            out,
            "agreement x={x} oracle={o} tabulated={v} {}",
            if o == v { "match" } else { "differ" }
        );
    }
    let _ = writeln!(
        out,
        "chi agreement: {}/{}",
        r.verbatim_agreement.0, r.verbatim_agreement.1
    );
    let _ = writeln!(out, "slp tree L={}", r.l_tree);
    out.push_str(&r.tree_seq.render());
    let _ = writeln!(out, "slp ps L={}", r.l_ps);
    let _ = writeln!(
        out,
        "bound: L={} <= 24*{}*{} = {}: {}",
        r.report.l,
        ctx.log2_order(),
        r.stages[0].size,
        r.report.bound,
        if r.report.pass { "PASS" } else { "FAIL" }
    );
    if let Some(path) = emit_slp {
        fs::write(path, r.tree_seq.render()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok((out, ExitCode::SUCCESS))
}

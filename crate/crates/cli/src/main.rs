use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sentree_core::encoder::{self, LossConfig};
use sentree_core::entropy::exact::oracle_cap;
use sentree_core::metrics::{self, PredictionSet};
use sentree_core::{
    brute_force_k_entropy, circa, from_taxonomy, one_dim_entropy, random_tree, structural_entropy,
    CodingTree, DenseMatrix, Graph, TinWeights,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "sentree",
    version,
    about = "Structural-entropy coding trees for graphs and label hierarchies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a graph or taxonomy and print its statistics.
    Ingest(GraphArgs),
    /// Structural entropy of a graph on a coding tree.
    Entropy {
        #[command(flatten)]
        graph: GraphArgs,
        /// `star` for the one-level tree, otherwise a tree JSON file.
        #[arg(long, default_value = "star")]
        tree: String,
    },
    /// Build a height-K coding tree with the greedy three-stage algorithm.
    Circa {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        /// Include the per-stage trace.
        #[arg(long)]
        trace: bool,
        /// Write the tree JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build a height-K coding tree by random pairing.
    RandomTree {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the greedy tree with random trees (and the exact optimum on tiny graphs).
    Compare {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// First random seed; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the tree encoder forward pass.
    Encode {
        /// Graph the tree was built on.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Edgelist)]
        format: Format,
        #[arg(long)]
        drop_root: bool,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Whitespace-separated text vector.
        #[arg(long)]
        input: PathBuf,
        /// Optional 0/1 gold labels; adds the losses to the output.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = encoder::DEFAULT_LAMBDA)]
        lambda: f64,
    },
    /// Micro/macro F1 of row-per-document predictions.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Run the greedy construction over a range of heights.
    SweepK {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        k_min: u32,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        k_max: u32,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list or taxonomy file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    format: Format,
    /// Drop the taxonomy root vertex from the graph.
    #[arg(long)]
    drop_root: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Edgelist,
    Taxonomy,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Loaded graph plus taxonomy facts when the input was a taxonomy.
fn load(args: &GraphArgs) -> Result<(Graph, Option<Value>)> {
    let text = read(&args.input)?;
    match args.format {
        Format::Edgelist => {
            if args.drop_root {
                bail!("--drop-root requires --format taxonomy");
            }
            Ok((Graph::from_edge_list(&text)?, None))
        }
        Format::Taxonomy => {
            let tax = from_taxonomy(&text)?;
            for w in &tax.warnings {
                eprintln!("warning: {w}");
            }
            let info = json!({
                "root": tax.graph.label(tax.root),
                "labels": tax.label_count(),
                "depth": tax.depth(),
                "warnings": tax.warnings,
            });
            let g = if args.drop_root {
                tax.without_root()
            } else {
                tax.graph
            };
            Ok((g, Some(info)))
        }
    }
}

/// Rounds every non-integer number to 7 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = format!("{x:.6e}").parse().unwrap();
            *v = json!(r);
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn tree_value(t: &CodingTree) -> Value {
    serde_json::to_value(t.to_doc()).expect("tree serializes")
}

/// Puts the tree under `out["tree"]`, or writes it to `path` if given.
fn emit_tree(out: &mut Value, t: &CodingTree, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, t.to_json() + "\n").with_context(|| format!("writing {}", p.display()))?;
            out["tree_file"] = json!(p.display().to_string());
        }
        None => out["tree"] = tree_value(t),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Value> {
    Ok(match cli.command {
        Command::Ingest(args) => {
            let (g, tax) = load(&args)?;
            let mut out = json!({
                "vertices": g.n(),
                "edges": g.edge_count(),
                "volume": g.volume(),
                "components": g.components().len(),
                "fingerprint": g.fingerprint(),
            });
            if let Some(tax) = tax {
                out["taxonomy"] = tax;
            }
            out
        }
        Command::Entropy { graph, tree } => {
            let (g, _) = load(&graph)?;
            let t = if tree == "star" {
                CodingTree::star(&g)?
            } else {
                CodingTree::from_json(&read(Path::new(&tree))?, &g)?
            };
            let report = structural_entropy(&g, &t)?;
            json!({
                "entropy": report.total,
                "height": t.height(),
                "log_base": report.log_base,
                "terms": report.terms,
            })
        }
        Command::Circa {
            graph,
            k,
            trace,
            output,
        } => {
            let (g, _) = load(&graph)?;
            let (t, tr) = circa(&g, k as usize)?;
            let mut out = json!({ "entropy": tr.final_entropy, "height": t.height() });
            if trace {
                out["trace"] = serde_json::to_value(&tr)?;
            }
            emit_tree(&mut out, &t, output.as_deref())?;
            out
        }
        Command::RandomTree {
            graph,
            k,
            seed,
            output,
        } => {
            let (g, _) = load(&graph)?;
            let t = random_tree(&g, k as usize, seed)?;
            let h = structural_entropy(&g, &t)?.total;
            let mut out = json!({ "entropy": h, "height": t.height(), "seed": seed });
            emit_tree(&mut out, &t, output.as_deref())?;
            out
        }
        Command::Compare {
            graph,
            k,
            trials,
            seed,
        } => {
            let (g, _) = load(&graph)?;
            let k = k as usize;
            let (_, tr) = circa(&g, k)?;
            let random = (0..trials)
                .into_par_iter()
                .map(|i| {
                    Ok(structural_entropy(&g, &random_tree(&g, k, seed.wrapping_add(i))?)?.total)
                })
                .collect::<sentree_core::Result<Vec<f64>>>()?;
            let mean = random.iter().sum::<f64>() / random.len() as f64;
            let min = random.iter().copied().fold(f64::INFINITY, f64::min);
            let mut out = json!({
                "k": k,
                "trials": trials,
                "one_dim": one_dim_entropy(&g)?,
                "circa": tr.final_entropy,
                "random_mean": mean,
                "random_min": min,
            });
            if g.n() <= 6 && g.n() <= oracle_cap(k) {
                out["optimum"] = json!(brute_force_k_entropy(&g, k)?.0);
            }
            out
        }
        Command::Encode {
            graph,
            format,
            drop_root,
            tree,
            weights,
            input,
            labels,
            lambda,
        } => {
            let (g, _) = load(&GraphArgs {
                input: graph,
                format,
                drop_root,
            })?;
            let t = CodingTree::from_json(&read(&tree)?, &g)?;
            let w = TinWeights::from_json(&read(&weights)?)?;
            let h = DenseMatrix::row_vector(flat_numbers(&read(&input)?)?)?;
            let enc = encoder::encode(&t, &h, &w)?;
            let mut out = json!({
                "tree_vector": enc.tree_vector.data(),
                "probabilities": enc.probabilities,
            });
            if let Some(path) = labels {
                let gold: Vec<bool> = flat_numbers(&read(&path)?)?
                    .into_iter()
                    .map(|x| x >= 0.5)
                    .collect();
                let mut cfg = LossConfig {
                    lambda,
                    ..LossConfig::default()
                };
                cfg.label_parents = w
                    .label_parents
                    .clone()
                    .unwrap_or_else(|| vec![None; w.num_labels]);
                let c = encoder::bce_loss(&enc.probabilities, &gold, &cfg)?;
                let r = encoder::recursive_reg(&w.w_c, &cfg)?;
                out["loss"] = json!({
                    "classification": c,
                    "recursive_reg": r,
                    "total": encoder::total_loss(c, r, &cfg),
                });
            }
            out
        }
        Command::Evaluate {
            pred,
            gold,
            threshold,
        } => {
            let ps = PredictionSet::from_text(&read(&pred)?, &read(&gold)?, threshold)?;
            json!({
                "documents": ps.len(),
                "labels": ps.num_labels(),
                "micro_f1": metrics::micro_f1(&ps)?,
                "macro_f1": metrics::macro_f1(&ps)?,
            })
        }
        Command::SweepK {
            graph,
            k_min,
            k_max,
        } => {
            if k_min > k_max {
                bail!("--k-min {k_min} exceeds --k-max {k_max}");
            }
            let (g, _) = load(&graph)?;
            let rows = (k_min..=k_max)
                .map(|k| {
                    let (t, tr) = circa(&g, k as usize)?;
                    Ok(json!({ "k": k, "entropy": tr.final_entropy, "height": t.height() }))
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "one_dim": one_dim_entropy(&g)?, "rows": rows })
        }
    })
}

fn flat_numbers(text: &str) -> Result<Vec<f64>> {
    Ok(metrics::parse_rows(text)?.into_iter().flatten().collect())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(mut out) => {
            round_numbers(&mut out);
            let text = serde_json::to_string_pretty(&out).expect("json output");
            // A closed pipe downstream is not an error for us.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `protoabs`: build message corpora, cluster them and run parameter sweeps.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for bad input data and
//! 3 when an internal invariant breaks.

mod io;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use protoabs::corpus::{apply_rules, default_rules, generate_synthetic, parse_trace_file, preprocess, read_rules};
use protoabs::corpus::{PreprocessOptions, SynthSpec};
use protoabs::message::DEFAULT_ARITY;
use protoabs::plot::{confusion_heatmap_svg, line_plot_svg, Series};
use protoabs::{
    run_experiment, sweep_k, sweep_labels, Algorithm, ClusterModel, ClusterRequest, Corpus, EvalReport, LabelMode,
    LabelVector, Sweep,
};

use crate::io::{check_lengths, read_corpus_and_labels, read_json, OutDir};

#[derive(Parser, Debug)]
#[command(name = "protoabs", version, about = "Weakly supervised abstraction of protocol messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic TLS-like corpus.
    Synth(SynthArgs),
    /// Turn a decoded trace file into a corpus.
    Ingest(IngestArgs),
    /// Label a corpus with abstraction rules.
    Label(LabelArgs),
    /// Run one clustering and score it.
    Cluster(ClusterArgs),
    /// Sweep the number of clusters.
    SweepK(SweepKArgs),
    /// Sweep the number of labeled samples per class.
    SweepLabels(SweepLabelsArgs),
    /// Score a saved model against reference labels.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    n_messages: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ARITY)]
    arity: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Decoded trace file.
    traces: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ARITY)]
    arity: usize,
    /// Row keys to discard.
    #[arg(long, value_delimiter = ',', default_value = "RANDOM,SESSIONID")]
    drop_keys: Vec<String>,
    /// Keep a seeded sample of this many messages.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Rule file; the bundled 21-class TLS rules when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct RunOptions {
    #[arg(long, default_value_t = Algorithm::Mpck)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = LabelMode::Balanced)]
    mode: LabelMode,
    /// Must-link violation weight.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Cannot-link violation weight.
    #[arg(long, default_value_t = 1.0)]
    w_bar: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Objective change below which the EM loop stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl RunOptions {
    fn request(&self, k: usize, labels_per_class: usize, seed: u64) -> ClusterRequest {
        ClusterRequest {
            labels_per_class,
            mode: self.mode,
            seed,
            w: self.w,
            w_bar: self.w_bar,
            max_iterations: self.max_iters,
            objective_tolerance: self.tol,
            ..ClusterRequest::new(self.algorithm, k)
        }
    }
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    run: RunOptions,
    /// Number of clusters; the number of reference classes when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 5)]
    labels_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SweepKArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    run: RunOptions,
    #[arg(long, default_value_t = 20)]
    k_min: usize,
    #[arg(long, default_value_t = 40)]
    k_max: usize,
    #[arg(long, default_value_t = 1)]
    labels_per_class: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
}

#[derive(Args, Debug)]
struct SweepLabelsArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    run: RunOptions,
    /// Number of clusters; the number of reference classes when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Sweep 1..=N labels per class.
    #[arg(long, default_value_t = 5)]
    max_labels: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Model JSON written by `cluster`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn print_histogram(labels: &LabelVector) {
    let hist = labels.histogram();
    println!("J={}", hist.len());
    for (class, count) in hist.iter().enumerate() {
        println!("  class {class:>2}: {count}");
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write_confusion(out: &OutDir, report: &EvalReport, title: &str) -> Result<Vec<PathBuf>> {
    Ok(vec![
        out.write("confusion.csv", report.confusion.to_csv().as_bytes())?,
        out.write("confusion.svg", confusion_heatmap_svg(&report.confusion, title).as_bytes())?,
    ])
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_messages: args.n_messages,
        noise_rate: args.noise,
        seed: args.seed,
        arity: args.arity,
        ..SynthSpec::default()
    };
    let (corpus, labels) = generate_synthetic(&spec)?;
    let out = OutDir::create(&args.out_dir)?;
    let written = [out.write_json("corpus.json", &corpus)?, out.write_json("labels.json", &labels)?];
    println!("N={} F={}", corpus.len(), corpus.arity());
    print_histogram(&labels);
    print_written(&written);
    Ok(())
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let traces = parse_trace_file(&args.traces)?;
    let options = PreprocessOptions {
        arity: args.arity,
        drop_keys: args.drop_keys.iter().filter(|k| !k.is_empty()).cloned().collect::<BTreeSet<_>>(),
        sample_n: args.sample,
        seed: args.seed,
    };
    let corpus = preprocess(&traces, &options)?;
    let out = OutDir::create(&args.out_dir)?;
    let written = out.write_json("corpus.json", &corpus)?;
    println!("N={} F={} traces={} distinct={}", corpus.len(), corpus.arity(), traces.len(), corpus.distinct_messages());
    print_written(&[written]);
    Ok(())
}

fn label(args: &LabelArgs) -> Result<()> {
    let corpus: Corpus = read_json(&args.corpus)?;
    let rules = match &args.rules {
        Some(path) => read_rules(path)?,
        None => default_rules(),
    };
    let labels = apply_rules(&corpus, &rules)?;
    let out = OutDir::create(&args.out_dir)?;
    let written = out.write_json("labels.json", &labels)?;
    println!("N={} F={}", corpus.len(), corpus.arity());
    print_histogram(&labels);
    print_written(&[written]);
    Ok(())
}

fn cluster(args: &ClusterArgs) -> Result<()> {
    let (corpus, labels) = read_corpus_and_labels(&args.inputs.corpus, &args.inputs.labels)?;
    let k = args.k.unwrap_or(labels.num_classes());
    let request = args.run.request(k, args.labels_per_class, args.seed);
    let (result, model) = run_experiment(&corpus, &labels, &request)?;

    let out = OutDir::create(&args.inputs.out_dir)?;
    let mut written = vec![out.write_json("result.json", &result)?, out.write_json("model.json", &model)?];
    let title = format!("{} K={} seed={}", request.algorithm, k, request.seed);
    written.extend(write_confusion(&out, &result.report, &title)?);

    println!("algorithm={} K={} seed={}", request.algorithm, k, request.seed);
    println!("purity={:.4} ARI={:.4}", result.report.purity, result.report.ari);
    println!("objective={} iterations={} converged={}", result.objective, result.iterations, result.converged);
    println!("labeled={} |ML|={} |CL|={}", result.labeled, result.must_links, result.cannot_links);
    println!("duration={:.3}s", result.duration_secs);
    print_written(&written);
    Ok(())
}

fn write_sweep(out: &OutDir, stem: &str, sweep: &Sweep, title: &str, x_label: &str) -> Result<Vec<PathBuf>> {
    let points = |f: fn(&protoabs::experiment::SweepMean) -> f64| -> Vec<(f64, f64)> {
        sweep.means.iter().map(|m| (m.param as f64, f(m))).collect()
    };
    let series =
        [Series { name: "purity", points: points(|m| m.purity) }, Series { name: "ARI", points: points(|m| m.ari) }];
    Ok(vec![
        out.write(&format!("{stem}.csv"), sweep.to_csv().as_bytes())?,
        out.write(&format!("{stem}.svg"), line_plot_svg(title, x_label, &series).as_bytes())?,
    ])
}

fn report_sweep(sweep: &Sweep) {
    for m in &sweep.means {
        println!("{}={:<3} purity={:.4} ARI={:.4}", sweep.param_name, m.param, m.purity, m.ari);
    }
    if let Some(best) = sweep.best() {
        println!("best {}={} (mean ARI {:.4})", sweep.param_name, best.param, best.ari);
    }
    let violations = sweep.monotonicity_violations();
    if violations.is_empty() {
        println!("mean ARI non-decreasing");
    } else {
        let pairs: Vec<String> = violations.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        println!("mean ARI decreases at {}", pairs.join(", "));
    }
}

fn sweep_k_cmd(args: &SweepKArgs) -> Result<()> {
    let (corpus, labels) = read_corpus_and_labels(&args.inputs.corpus, &args.inputs.labels)?;
    let ks: Vec<usize> = (args.k_min..=args.k_max).collect();
    let base = args.run.request(args.k_min, args.labels_per_class, 0);
    let sweep = sweep_k(&corpus, &labels, &ks, &args.seeds, &base)?;
    let out = OutDir::create(&args.inputs.out_dir)?;
    let title = format!("{} labels/class={}", base.algorithm, args.labels_per_class);
    let written = write_sweep(&out, "sweep_k", &sweep, &title, "K")?;
    report_sweep(&sweep);
    print_written(&written);
    Ok(())
}

fn sweep_labels_cmd(args: &SweepLabelsArgs) -> Result<()> {
    let (corpus, labels) = read_corpus_and_labels(&args.inputs.corpus, &args.inputs.labels)?;
    let k = args.k.unwrap_or(labels.num_classes());
    let counts: Vec<usize> = (1..=args.max_labels).collect();
    let base = args.run.request(k, 1, 0);
    let sweep = sweep_labels(&corpus, &labels, &counts, &args.seeds, &base)?;
    let out = OutDir::create(&args.inputs.out_dir)?;
    let title = format!("{} K={k} {}", base.algorithm, base.mode);
    let written = write_sweep(&out, "sweep_labels", &sweep, &title, "labels per class")?;
    report_sweep(&sweep);
    print_written(&written);
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let model: ClusterModel = read_json(&args.model)?;
    let labels: LabelVector = read_json(&args.labels)?;
    check_lengths(model.assignments.len(), &labels)?;
    let report = EvalReport::new(&model.assignments, &labels)?;
    let out = OutDir::create(&args.out_dir)?;
    let mut written = vec![out.write_json("eval.json", &report)?];
    let title = file_stem(&args.model);
    written.extend(write_confusion(&out, &report, &title)?);
    println!("n={} purity={:.4} ARI={:.4}", report.n, report.purity, report.ari);
    print_written(&written);
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Label(a) => label(a),
        Command::Cluster(a) => cluster(a),
        Command::SweepK(a) => sweep_k_cmd(a),
        Command::SweepLabels(a) => sweep_labels_cmd(a),
        Command::Eval(a) => eval(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<protoabs::Error>() {
        Some(e) if !e.is_data_error() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

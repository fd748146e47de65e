use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tmcflow::extract::{evaluate_extraction, read_method_sets};
use tmcflow::ingest::InputFormat;
use tmcflow::io::{to_jsonl, write_file};
use tmcflow::network::{
    bipartite_graph, communities_csv, greedy_communities, history_csv, popularity_csv, relabel,
    EdgeWeighting,
};
use tmcflow::pipeline::stages::{self, TopicSettings};
use tmcflow::pipeline::{plan, run_pipeline, PlannedAction, RunConfig, TopicSource};
use tmcflow::tmc::{export_bipartite, read_tmc_csv, tmc_csv};
use tmcflow::topics::{assignments_csv, quality_csv, ImportMode, TopicModelConfig};
use tmcflow::Result;

#[derive(Parser)]
#[command(
    name = "tmcflow",
    version,
    about = "Topic-method composition analysis for bibliographic corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse exports, filter by year and deduplicate into a canonical corpus.
    Ingest(IngestArgs),
    /// Recognize canonical methods per document.
    Extract(ExtractArgs),
    /// Score predicted methods against gold annotations.
    EvalExtract(EvalArgs),
    /// Fit, sweep or import topic assignments.
    #[command(subcommand)]
    Topics(TopicsCommand),
    /// Build the method-topic intensity table.
    #[command(subcommand)]
    Tmc(TmcCommand),
    /// TMC network, communities and popularity.
    #[command(subcommand)]
    Network(NetworkCommand),
    /// Run every stage from a config file and/or flags.
    Run(RunArgs),
    /// Write the bundled synthetic fixture files.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "jsonl")]
    format: InputFormat,
    #[arg(long, default_value_t = tmcflow::ingest::DEFAULT_YEAR_MIN)]
    year_min: i32,
    #[arg(long, default_value_t = tmcflow::ingest::DEFAULT_YEAR_MAX)]
    year_max: i32,
    #[arg(long, default_value_t = tmcflow::ingest::DEFAULT_TITLE_SIM)]
    title_sim: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Add rule-stage matches to the standardized candidates.
    #[arg(long)]
    fallback_rule: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = tmcflow::topics::DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = tmcflow::topics::DEFAULT_ITERATIONS)]
    iterations: usize,
    #[arg(long, default_value_t = tmcflow::topics::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = tmcflow::topics::DEFAULT_MIN_TOKEN_LEN)]
    min_token_len: usize,
}

impl ModelArgs {
    fn config(&self, k: usize) -> TopicModelConfig {
        TopicModelConfig {
            k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum TopicsCommand {
    Fit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        k_list: Vec<usize>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 5)]
        heldout_every: usize,
        #[arg(long, default_value_t = tmcflow::topics::DEFAULT_TOP_N)]
        coherence_top_n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "quality.csv")]
        quality: PathBuf,
    },
    Import {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "argmax_rows")]
        mode: ImportMode,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TmcCommand {
    Build {
        #[arg(long)]
        methods: PathBuf,
        #[arg(long)]
        topics: PathBuf,
        #[arg(long, default_value_t = tmcflow::tmc::DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
        /// Topic-method graph as GraphML.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        gexf: Option<PathBuf>,
        /// Retained-pair counts over a range of sigma values.
        #[arg(long)]
        sensitivity: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum NetworkCommand {
    Build {
        #[arg(long)]
        tmc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gexf: Option<PathBuf>,
        #[arg(long, default_value = "none")]
        weighted: EdgeWeighting,
    },
    Communities {
        #[arg(long)]
        tmc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        history: Option<PathBuf>,
        /// Per-community summary as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "none")]
        weighted: EdgeWeighting,
        /// Cluster the topic-method graph instead of the TMC network.
        #[arg(long)]
        bipartite: bool,
    },
    Top {
        #[arg(long)]
        tmc: PathBuf,
        #[arg(long, default_value_t = tmcflow::network::DEFAULT_TOP_N)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the stages that would run, then exit.
    #[arg(long)]
    manifest_only: bool,
    #[arg(long = "in", num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    format: Option<InputFormat>,
    #[arg(long)]
    year_min: Option<i32>,
    #[arg(long)]
    year_max: Option<i32>,
    #[arg(long)]
    title_sim: Option<f64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    fallback_rule: bool,
    #[arg(long, conflicts_with_all = ["k_list", "topic_import"])]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',', conflicts_with = "topic_import")]
    k_list: Vec<usize>,
    #[arg(long)]
    topic_import: Option<PathBuf>,
    #[arg(long)]
    topic_import_mode: Option<ImportMode>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    coherence_top_n: Option<usize>,
    #[arg(long)]
    heldout_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    weighted: Option<EdgeWeighting>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn effective_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.inputs.is_empty() {
            c.inputs = self.inputs.clone();
        }
        if self.k.is_some() || !self.k_list.is_empty() || self.topic_import.is_some() {
            c.k = self.k;
            c.k_list = self.k_list.clone();
            c.topic_import = self.topic_import.clone();
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { c.$field = v; } )* };
        }
        set!(
            format,
            year_min,
            year_max,
            title_sim,
            beta,
            iterations,
            burn_in,
            min_token_len,
            coherence_top_n,
            heldout_every,
            seed,
            sigma,
            top_n,
            out_dir
        );
        if let Some(m) = self.topic_import_mode {
            c.topic_import_mode = m;
        }
        if let Some(w) = self.weighted {
            c.weighting = w;
        }
        if self.lexicon.is_some() {
            c.lexicon = self.lexicon.clone();
        }
        if self.candidates.is_some() {
            c.candidates = self.candidates.clone();
        }
        if self.alpha.is_some() {
            c.alpha = self.alpha;
        }
        c.fallback_rule |= self.fallback_rule;
        Ok(c)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = tmcflow::synthetic::BUNDLE_SEED)]
    seed: u64,
}

fn write_optional(path: &Option<PathBuf>, contents: impl FnOnce() -> Result<String>) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents()?),
        None => Ok(()),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let ing = stages::ingest(&a.inputs, a.format, a.year_min, a.year_max, a.title_sim)?;
    write_file(&a.out, to_jsonl(&ing.records)?)?;
    write_optional(&a.report, || {
        Ok(serde_json::to_string_pretty(&ing.report)? + "\n")
    })?;
    write_optional(&a.rejects, || to_jsonl(&ing.rejects))?;
    let r = &ing.report;
    eprintln!(
        "{} rows read, {} rejected, {} outside {}..={}, {} duplicates merged, {} records written",
        r.rows_read,
        r.rejected,
        r.year_excluded,
        a.year_min,
        a.year_max,
        r.dedup.merges.len(),
        ing.records.len()
    );
    for m in &r.dedup.merges {
        eprintln!(
            "  merged {} into {} ({:?})",
            m.removed_id, m.kept_id, m.reason
        );
    }
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let ex = stages::extract(
        &a.corpus,
        &a.lexicon,
        a.candidates.as_deref(),
        a.fallback_rule,
    )?;
    write_file(&a.out, to_jsonl(&ex.rows)?)?;
    let with = ex.rows.iter().filter(|r| !r.methods.is_empty()).count();
    eprintln!(
        "{} documents, {} with at least one method",
        ex.rows.len(),
        with
    );
    for n in ex.notes {
        eprintln!("note: {n}");
    }
    Ok(())
}

fn eval_extract(a: EvalArgs) -> Result<()> {
    let report = evaluate_extraction(&read_method_sets(&a.pred)?, &read_method_sets(&a.gold)?)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let e = &report.eval;
        println!("precision {:.2}%", e.precision);
        println!("recall    {:.2}%", e.recall);
        println!("f1        {:.2}%", e.f1);
        println!("tp {} fp {} fn {}", e.tp, e.fp, e.fn_);
        if !report.docs_without_gold.is_empty() {
            eprintln!(
                "{} predicted documents have no gold entry",
                report.docs_without_gold.len()
            );
        }
    }
    Ok(())
}

fn topics(cmd: TopicsCommand) -> Result<()> {
    match cmd {
        TopicsCommand::Fit {
            corpus,
            k,
            model,
            out,
        } => {
            let cfg = model.config(k);
            cfg.validate()?;
            let source = TopicSource::Fit(k);
            let t = stages::topics(
                &corpus,
                &settings(&source, &cfg, &model, 5, tmcflow::topics::DEFAULT_TOP_N),
            )?;
            write_file(&out, assignments_csv(&t.assignments, &t.probabilities)?)?;
            report_topics(&t.notes, t.k, t.assignments.len());
        }
        TopicsCommand::Sweep {
            corpus,
            k_list,
            model,
            heldout_every,
            coherence_top_n,
            out,
            quality,
        } => {
            for &k in &k_list {
                model.config(k).validate()?;
            }
            let cfg = model.config(k_list[0]);
            let source = TopicSource::Sweep(k_list);
            let t = stages::topics(
                &corpus,
                &settings(&source, &cfg, &model, heldout_every, coherence_top_n),
            )?;
            let sweep = t.sweep.as_ref().expect("sweep result");
            write_file(&quality, quality_csv(&sweep.points, sweep.selected_k)?)?;
            write_file(&out, assignments_csv(&t.assignments, &t.probabilities)?)?;
            for p in &sweep.points {
                let mark = if p.k == sweep.selected_k {
                    "  <- selected"
                } else {
                    ""
                };
                eprintln!(
                    "K={:<4} perplexity {:.3}  coherence {:.4}{mark}",
                    p.k, p.perplexity, p.coherence
                );
            }
            report_topics(&t.notes, t.k, t.assignments.len());
        }
        TopicsCommand::Import { input, mode, out } => {
            let imp = tmcflow::topics::import_assignments(&input, mode)?;
            write_file(&out, assignments_csv(&imp.assignments, &imp.probabilities)?)?;
            for r in &imp.rejects {
                eprintln!("rejected line {}: {}", r.line, r.reason);
            }
            if !imp.unassigned.is_empty() {
                eprintln!("{} outlier documents left unassigned", imp.unassigned.len());
            }
            report_topics(&[], imp.k, imp.assignments.len());
        }
    }
    Ok(())
}

fn settings<'a>(
    source: &'a TopicSource,
    cfg: &'a TopicModelConfig,
    model: &ModelArgs,
    heldout_every: usize,
    coherence_top_n: usize,
) -> TopicSettings<'a> {
    TopicSettings {
        source,
        model: cfg,
        min_token_len: model.min_token_len,
        coherence_top_n,
        heldout_every,
    }
}

fn report_topics(notes: &[String], k: usize, docs: usize) {
    for n in notes {
        eprintln!("note: {n}");
    }
    eprintln!("K = {k}, {docs} documents assigned");
}

fn tmc(cmd: TmcCommand) -> Result<()> {
    let TmcCommand::Build {
        methods,
        topics,
        sigma,
        out,
        graph,
        gexf,
        sensitivity,
    } = cmd;
    let table = stages::tmc(&methods, &topics, sigma)?;
    write_file(&out, tmc_csv(&table.pairs)?)?;
    let export = export_bipartite(&table.pairs).to_export();
    write_optional(&graph, || Ok(export.to_graphml()))?;
    write_optional(&gexf, || Ok(export.to_gexf()))?;
    write_optional(&sensitivity, || stages::sensitivity_csv(&table))?;
    eprintln!(
        "{} pairs over {} documents, {} retained at sigma {}",
        table.pairs.len(),
        table.corpus_size,
        table.retained_count(),
        sigma
    );
    Ok(())
}

fn network(cmd: NetworkCommand) -> Result<()> {
    match cmd {
        NetworkCommand::Build {
            tmc,
            out,
            gexf,
            weighted,
        } => {
            let net = stages::network_from_file(&tmc, weighted, 1)?;
            let export = net.network.to_export(Some(&net.partition));
            write_file(&out, export.to_graphml())?;
            write_optional(&gexf, || Ok(export.to_gexf()))?;
            eprintln!(
                "{} nodes, {} edges",
                net.network.node_count(),
                net.network.edges.len()
            );
        }
        NetworkCommand::Communities {
            tmc,
            out,
            history,
            report,
            weighted,
            bipartite,
        } => {
            if bipartite {
                let pairs = read_tmc_csv(&tmc)?;
                let graph = export_bipartite(&pairs);
                let partition = greedy_communities(&bipartite_graph(&graph)?)?;
                let csv = tmcflow::io::csv_string(&["node", "community"], |w| {
                    for (i, c) in partition.assignment.iter().enumerate() {
                        w.write_record([graph.node_id(i), c.to_string()])?;
                    }
                    Ok(())
                })?;
                write_file(&out, csv)?;
                write_optional(&history, || history_csv(&partition.merge_history))?;
                eprintln!(
                    "{} communities, Q = {}",
                    relabel(&partition.assignment)
                        .iter()
                        .max()
                        .map_or(0, |m| m + 1),
                    partition.q
                );
            } else {
                let net = stages::network_from_file(&tmc, weighted, 1)?;
                write_file(&out, communities_csv(&net.network, &net.partition)?)?;
                write_optional(&history, || history_csv(&net.partition.merge_history))?;
                write_optional(&report, || {
                    Ok(serde_json::to_string_pretty(&net.report)? + "\n")
                })?;
                eprintln!(
                    "{} communities, Q = {}",
                    net.report.community_count, net.report.q
                );
                for c in &net.report.communities {
                    eprintln!(
                        "  community {}: {} pairs, {} topics, {} methods",
                        c.community,
                        c.members.len(),
                        c.topics.len(),
                        c.methods.len()
                    );
                }
            }
        }
        NetworkCommand::Top { tmc, n, out } => {
            let top = tmcflow::network::rank_popularity(&read_tmc_csv(&tmc)?, n)?;
            let csv = popularity_csv(&top)?;
            match out {
                Some(p) => write_file(&p, csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let config = a.effective_config()?;
    if a.manifest_only {
        for p in plan(&config)? {
            let action = match p.action {
                PlannedAction::Run => "run ",
                PlannedAction::Skip => "skip",
            };
            println!("{action} {:<8} {}", p.stage.name(), p.outputs.join(", "));
        }
        print!("\n{}", config.to_toml()?);
        return Ok(());
    }
    let manifest = run_pipeline(&config)?;
    for s in &manifest.stages {
        let what = if s.executed {
            format!("ran in {} ms", s.wall_ms)
        } else {
            "unchanged, skipped".into()
        };
        eprintln!("{:<8} {what}", s.stage.name());
        for n in &s.notes {
            eprintln!("         {n}");
        }
    }
    eprintln!("outputs in {}", config.out_dir.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    for p in tmcflow::synthetic::write_bundle(&a.out, a.seed)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Extract(a) => extract(a),
        Command::EvalExtract(a) => eval_extract(a),
        Command::Topics(c) => topics(c),
        Command::Tmc(c) => tmc(c),
        Command::Network(c) => network(c),
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

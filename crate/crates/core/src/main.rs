use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gemscope::config::{parse_stages, RunConfig};
use gemscope::document::{decode, parse_document};
use gemscope::eval::{parse_couples, Matcher, ScoreReport};
use gemscope::facts::Note;
use gemscope::gem::GemNames;
use gemscope::par::ExecMode;
use gemscope::pipeline::{run_pipeline, Analysis};
use gemscope::rules::DEFAULT_THRESHOLD;
use gemscope::scope::{dump_couples, dump_tree};
use gemscope::segment::dump_segments;
use gemscope::sidecar::Sidecar;
use gemscope::train::{load_corpus, train_bundles};
use gemscope::error::TrainError;

/// Only consulted when neither `--lexicons` nor the config file names a pack.
const LEXICON_ENV: &str = "GEMSCOPE_LEXICONS";

#[derive(Parser)]
#[command(name = "gemscope", version, about = "Restructure French clinical guidelines into GEM XML")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze guideline texts and write `<stem>.gem.xml` for each.
    Analyze(AnalyzeArgs),
    /// Score predicted couples against gold couples.
    Eval(EvalArgs),
    /// Derive a cue-bundle rule table from an annotated corpus directory.
    Train(TrainArgs),
}

#[derive(Args)]
struct Common {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lexicon pack directory (defaults to the built-in French pack).
    #[arg(long)]
    lexicons: Option<PathBuf>,
    /// Drop domain terms, so headings no longer open condition frames.
    #[arg(long)]
    no_domain_lexicon: bool,
    /// Rule table file (defaults to the built-in table).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Run documents one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpKind {
    Cues,
    Segments,
    Tree,
    Couples,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input text files (UTF-8).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Debug dumps to write next to the XML; repeatable.
    #[arg(long, value_enum)]
    dump: Vec<DumpKind>,
    #[arg(long, value_parser = ["fr", "en"])]
    gem_names: Option<String>,
    /// Output directory, or the XML file path when analyzing a single input.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tagger output to use for morphology (single input only).
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Stage list override, comma separated, in pipeline order.
    #[arg(long)]
    stages: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted couple file.
    pred: PathBuf,
    /// Gold couple file.
    gold: PathBuf,
    /// Also accept segment texts with at least this normalized edit similarity.
    #[arg(long)]
    fuzzy: Option<f64>,
    /// Print `key=value` lines instead of the table.
    #[arg(long)]
    key_values: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory holding `<id>.txt` files and `segments.tsv`.
    corpus: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Where to write the rule table; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Pipeline(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Pipeline(_) => 1,
        }
    }
}

fn input(msg: impl std::fmt::Display) -> Failure {
    Failure::Input(msg.to_string())
}

fn run_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(input)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &common.lexicons {
        cfg.lexicon_dir = Some(dir.clone());
    } else if cfg.lexicon_dir.is_none() {
        cfg.lexicon_dir = std::env::var_os(LEXICON_ENV).map(PathBuf::from);
    }
    if common.no_domain_lexicon {
        cfg.domain_lexicon = false;
    }
    if let Some(r) = &common.rules {
        cfg.rules = Some(r.clone());
    }
    Ok(cfg)
}

fn exec_mode(common: &Common) -> ExecMode {
    if common.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned())
}

fn stats_line(name: &str, a: &Analysis) -> String {
    let share = a
        .tree
        .default_rule_share()
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
    let warnings = a.store.notes().iter().filter(|n| matches!(n, Note::Warning { .. })).count();
    format!(
        "{name}: {} clauses, {} segments, {} frames, {} couples, default_rule_share={share}, {warnings} warnings",
        a.document.clauses.len(),
        a.segments.len(),
        a.tree.frames.len(),
        a.couples.len(),
    )
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let mut cfg = run_config(&args.common)?;
    if let Some(g) = &args.gem_names {
        cfg.gem_names = g.parse::<GemNames>().map_err(input)?;
    }
    if let Some(s) = &args.stages {
        cfg.stages = parse_stages(s).map_err(input)?;
    }
    if args.sidecar.is_some() && args.inputs.len() > 1 {
        return Err(input("--sidecar applies to a single input"));
    }
    let (pack, config) = cfg.resolve().map_err(input)?;

    let mut texts = Vec::new();
    for p in &args.inputs {
        let bytes = fs::read(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
        let text = decode(&bytes).map_err(|e| input(format!("{}: {e}", p.display())))?;
        texts.push(text.to_string());
    }
    let sidecar = match &args.sidecar {
        Some(p) => {
            let raw = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            let sc = Sidecar::parse(&raw)
                .and_then(|s| s.align(&texts[0]))
                .map_err(|e| input(format!("{}: {e}", p.display())))?;
            Some(sc)
        }
        None => None,
    };

    let jobs: Vec<usize> = (0..texts.len()).collect();
    let results = gemscope::par::map(exec_mode(&args.common), &jobs, |&i| {
        let doc = parse_document(&stem(&args.inputs[i]), &texts[i], &pack, &config.document);
        run_pipeline(doc, &pack, sidecar.as_ref(), &config)
    });

    for (path, result) in args.inputs.iter().zip(results) {
        let name = stem(path);
        let a = result.map_err(|e| Failure::Pipeline(format!("{}: {e}", path.display())))?;
        let (dir, xml_path) = match &args.out {
            Some(o) if args.inputs.len() == 1 && o.extension().is_some_and(|e| e == "xml") => {
                (o.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf), o.clone())
            }
            Some(o) => (o.clone(), o.join(format!("{name}.gem.xml"))),
            None => {
                let d = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
                let x = d.join(format!("{name}.gem.xml"));
                (d, x)
            }
        };
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(&dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        }
        if let Some(xml) = &a.xml {
            write(&xml_path, xml)?;
        }
        for kind in &args.dump {
            let (suffix, body) = match kind {
                DumpKind::Cues => ("cues.tsv", a.store.dump()),
                DumpKind::Segments => ("segments.tsv", dump_segments(&a.document, &a.segments)),
                DumpKind::Tree => ("tree.txt", dump_tree(&a.tree)),
                DumpKind::Couples => ("couples.tsv", dump_couples(&a.couples)),
            };
            write(&dir.join(format!("{name}.{suffix}")), &body)?;
        }
        eprintln!("{}", stats_line(&name, &a));
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let read = |p: &Path| -> Result<_, Failure> {
        let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
        parse_couples(&text).map_err(|e| input(format!("{}: {e}", p.display())))
    };
    let (pred, gold) = (read(&args.pred)?, read(&args.gold)?);
    let report = ScoreReport::from_couples(&pred, &gold, Matcher { fuzzy: args.fuzzy }).map_err(input)?;
    if args.key_values {
        print!("{}", report.key_values());
    } else {
        print!("{}", report.table());
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let (pack, config) = run_config(&args.common)?.resolve().map_err(input)?;
    let classify = |e: TrainError| match e {
        TrainError::Pipeline(p) => Failure::Pipeline(p.to_string()),
        other => input(other),
    };
    let corpus = load_corpus(&args.corpus).map_err(classify)?;
    let table = train_bundles(&corpus, &pack, &config, args.threshold, exec_mode(&args.common)).map_err(classify)?;
    match &args.out {
        Some(p) => write(p, &table.serialize())?,
        None => print!("{}", table.serialize()),
    }
    eprintln!("{} rules from {} documents", table.rules.len(), corpus.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Train(a) => cmd_train(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(m) | Failure::Pipeline(m)) = &f;
            eprintln!("gemscope: {m}");
            ExitCode::from(f.code())
        }
    }
}

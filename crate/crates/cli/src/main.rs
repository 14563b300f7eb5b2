//! Batch front end: ingest N-Triples, compute schema-level statistics,
//! persist them, and answer lookups and size estimates from the stored index.
//!
//! Every subcommand is non-interactive and exit-code driven; errors land on
//! stderr with a nonzero exit.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kgstats_core::engine::{compute, Algorithm, Config, CountModes};
use kgstats_core::estimate::{estimate, estimate_join, TriplePattern};
use kgstats_core::hierarchy::{CycleMode, Hierarchy};
use kgstats_core::keys::PositionSet;
use kgstats_core::ntriples::{
    lookup_term, parse_pattern, read_into, serialize, ParseMode, PatternTerm, ReadStats, Term,
};
use kgstats_core::schema::{SchemaTriple, StoredSchemaGraph};
use kgstats_core::store::{BindMode, CounterKind, LoadedIndex, StatIndex};
use kgstats_core::{Graph, GraphBuilder, TermId};

#[derive(Parser)]
#[command(
    name = "kgstats",
    version,
    about = "Schema-level statistics over RDF knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse N-Triples files into one canonical graph file.
    Ingest(IngestArgs),
    /// Count statistics over an ingested graph and write an index.
    Stats(StatsArgs),
    /// Print the schema triples a graph declares.
    DumpSchema(DumpSchemaArgs),
    /// Look up one counter of a stored index.
    Query(QueryArgs),
    /// Estimate result sizes for one triple pattern, or a join of two.
    Estimate(EstimateArgs),
    /// Write an index as tab-separated values.
    Export(ExportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// N-Triples input files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Canonical graph file to write.
    #[arg(long)]
    out: PathBuf,
    /// Skip unparsable lines instead of aborting on the first one.
    #[arg(long)]
    lenient: bool,
    /// Merge subclass/subproperty cycles instead of failing on them.
    #[arg(long)]
    collapse_cycles: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Ingested graph file.
    graph: PathBuf,
    /// Which key sets to count into.
    #[arg(long, value_enum)]
    alg: AlgChoice,
    /// levels only: hierarchy steps above a declared class to keep.
    #[arg(short)]
    u: Option<u32>,
    /// levels only: hierarchy steps below a declared class to keep.
    #[arg(short)]
    l: Option<u32>,
    /// Counter families to maintain.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "all,distinct,bound,unbound"
    )]
    modes: Vec<ModeFlag>,
    /// Worker threads for the counting phase.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also count rdf:type/rdfs:* triples as data.
    #[arg(long)]
    include_meta: bool,
    /// Fixed-memory distinct counting (~1.6% relative error).
    #[arg(long)]
    sketch: bool,
    /// Index file to write; the run manifest goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Merge subclass/subproperty cycles instead of failing on them.
    #[arg(long)]
    collapse_cycles: bool,
}

#[derive(Args)]
struct DumpSchemaArgs {
    /// Ingested graph file.
    graph: PathBuf,
    /// Also list keys for rdf:type/rdfs:* predicates.
    #[arg(long)]
    include_meta: bool,
    /// Merge subclass/subproperty cycles instead of failing on them.
    #[arg(long)]
    collapse_cycles: bool,
}

#[derive(Args)]
struct QueryArgs {
    /// Index file written by `stats`.
    index: PathBuf,
    /// Schema triple to look up, e.g. "<person> <wasBornIn> <location>".
    #[arg(long = "type")]
    key: String,
    /// Position subset of the counter: s, p, o, sp, so, po, or spo.
    #[arg(long, default_value = "spo")]
    positions: String,
    #[arg(long, value_enum, default_value_t = CounterChoice::All)]
    counter: CounterChoice,
    #[arg(long, value_enum, default_value_t = BindChoice::Bound)]
    mode: BindChoice,
}

#[derive(Args)]
struct EstimateArgs {
    /// Index file written by `stats`.
    index: PathBuf,
    /// Triple pattern such as "?x <wasBornIn> <athens>"; twice for a join.
    #[arg(long = "pattern", required = true)]
    patterns: Vec<String>,
}

#[derive(Args)]
struct ExportArgs {
    /// Index file written by `stats`.
    index: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgChoice {
    Stored,
    All,
    Levels,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeFlag {
    All,
    Distinct,
    Bound,
    Unbound,
}

#[derive(Clone, Copy, ValueEnum)]
enum CounterChoice {
    All,
    Distinct,
}

#[derive(Clone, Copy, ValueEnum)]
enum BindChoice {
    Bound,
    Unbound,
}

fn main() -> Result<()> {
    // Die quietly when stdout closes mid-pipeline (`kgstats export ... | head`),
    // like other line-oriented batch tools, instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().command {
        Command::Ingest(args) => ingest(args),
        Command::Stats(args) => stats(args),
        Command::DumpSchema(args) => dump_schema(args),
        Command::Query(args) => query(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Export(args) => export(args),
    }
}

/// Read adapter that logs a line per million input lines consumed.
struct Progress<R> {
    inner: R,
    label: String,
    newlines: u64,
    next: u64,
}

impl<R> Progress<R> {
    fn new(inner: R, path: &Path) -> Progress<R> {
        Progress {
            inner,
            label: path.display().to_string(),
            newlines: 0,
            next: 1_000_000,
        }
    }
}

impl<R: Read> Read for Progress<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.newlines += buf[..n].iter().filter(|&&b| b == b'\n').count() as u64;
        while self.newlines >= self.next {
            eprintln!("{}: {} million lines read", self.label, self.next / 1_000_000);
            self.next += 1_000_000;
        }
        Ok(n)
    }
}

fn cycle_mode(collapse: bool) -> CycleMode {
    if collapse {
        CycleMode::Collapse
    } else {
        CycleMode::Error
    }
}

fn load_graph(path: &Path, collapse: bool) -> Result<(Graph, Hierarchy)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut builder = GraphBuilder::new();
    read_into(
        &mut builder,
        BufReader::new(Progress::new(file, path)),
        ParseMode::Strict,
    )
    .with_context(|| format!("parsing {}", path.display()))?;
    let g = builder.classify()?;
    let h = Hierarchy::build(&g, cycle_mode(collapse))?;
    Ok((g, h))
}

fn load_index(path: &Path) -> Result<LoadedIndex> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    StatIndex::load(&mut BufReader::new(file))
        .with_context(|| format!("reading index {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let mode = if args.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let mut builder = GraphBuilder::new();
    let mut total = ReadStats::default();
    for path in &args.files {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let stats = read_into(&mut builder, BufReader::new(Progress::new(file, path)), mode)
            .with_context(|| format!("parsing {}", path.display()))?;
        total.triples += stats.triples;
        total.skipped_lines += stats.skipped_lines;
    }
    let g = builder.classify()?;
    let h = Hierarchy::build(&g, cycle_mode(args.collapse_cycles))?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    serialize(&g, &mut w)?;
    w.flush()?;
    println!(
        "ingested {} triples ({} terms, {} classes, {} skipped lines) -> {}",
        g.len(),
        g.term_count(),
        h.classes().count(),
        total.skipped_lines,
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunManifest {
    inputs: Vec<String>,
    algorithm: String,
    up: u32,
    down: u32,
    modes: ModesOut,
    workers: usize,
    sketch: bool,
    include_meta: bool,
    output: String,
    counted_triples: usize,
    bound_keys: usize,
    bound_key_types: u64,
    unbound_keys: usize,
    unbound_key_types: u64,
    timings_s: Timings,
}

#[derive(Serialize)]
struct ModesOut {
    all: bool,
    distinct: bool,
    bound: bool,
    unbound: bool,
}

#[derive(Serialize)]
struct Timings {
    load: f64,
    count: f64,
    save: f64,
}

fn stats(args: StatsArgs) -> Result<()> {
    let (up, down) = (args.u.unwrap_or(0), args.l.unwrap_or(0));
    let algorithm = match args.alg {
        AlgChoice::Stored => Algorithm::Stored,
        AlgChoice::All => Algorithm::All,
        AlgChoice::Levels => Algorithm::Levels { up, down },
    };
    if !matches!(args.alg, AlgChoice::Levels) && (args.u.is_some() || args.l.is_some()) {
        bail!("-u and -l apply to --alg levels only");
    }
    let modes = CountModes {
        all: args.modes.contains(&ModeFlag::All),
        distinct: args.modes.contains(&ModeFlag::Distinct),
        bound: args.modes.contains(&ModeFlag::Bound),
        unbound: args.modes.contains(&ModeFlag::Unbound),
    };
    let cfg = Config {
        algorithm,
        modes,
        include_meta: args.include_meta,
        workers: args.workers,
        sketch: args.sketch,
        ..Config::default()
    }
    .budget_from_env();

    let start = Instant::now();
    let (g, h) = load_graph(&args.graph, args.collapse_cycles)?;
    let load = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let outcome = compute(&g, &h, &cfg)?;
    let count = start.elapsed().as_secs_f64();
    let index = outcome.index;

    let start = Instant::now();
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    index.save(&g, &mut w)?;
    w.flush()?;
    let save = start.elapsed().as_secs_f64();

    let manifest = RunManifest {
        inputs: vec![args.graph.display().to_string()],
        algorithm: algorithm.describe(),
        up,
        down,
        modes: ModesOut {
            all: modes.all,
            distinct: modes.distinct,
            bound: modes.bound,
            unbound: modes.unbound,
        },
        workers: cfg.workers,
        sketch: cfg.sketch,
        include_meta: cfg.include_meta,
        output: args.out.display().to_string(),
        counted_triples: outcome.counted_triples,
        bound_keys: index.key_count(BindMode::Bound),
        bound_key_types: index.slot_count(BindMode::Bound),
        unbound_keys: index.key_count(BindMode::Unbound),
        unbound_key_types: index.slot_count(BindMode::Unbound),
        timings_s: Timings { load, count, save },
    };
    let manifest_path = sibling_path(&args.out, ".manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(&manifest_path, json)
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    println!("algorithm        {}", manifest.algorithm);
    println!("workers          {}", manifest.workers);
    println!("counted triples  {}", manifest.counted_triples);
    println!(
        "bound            {} keys, {} key types",
        manifest.bound_keys, manifest.bound_key_types
    );
    println!(
        "unbound          {} keys, {} key types",
        manifest.unbound_keys, manifest.unbound_key_types
    );
    println!("timings          load {load:.2}s, count {count:.2}s, save {save:.2}s");
    println!("index            {}", args.out.display());
    println!("manifest         {}", manifest_path.display());
    Ok(())
}

/// `out` plus a suffix, keeping the original extension visible.
fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

fn dump_schema(args: DumpSchemaArgs) -> Result<()> {
    let (g, h) = load_graph(&args.graph, args.collapse_cycles)?;
    let ssg = StoredSchemaGraph::extract(&g, &h, args.include_meta);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for key in ssg.triples() {
        writeln!(out, "{}", key.render(&g))?;
    }
    Ok(())
}

fn term_label(term: &Term) -> String {
    match term {
        Term::Iri(iri) => format!("<{iri}>"),
        Term::Blank(label) => format!("_:{label}"),
        Term::Literal { value, .. } => format!("\"{value}\""),
    }
}

fn query(args: QueryArgs) -> Result<()> {
    let loaded = load_index(&args.index)?;
    let (g, h, index) = (&loaded.graph, &loaded.hierarchy, &loaded.index);

    let parts = parse_pattern(&args.key).map_err(|e| anyhow!("--type: {e}"))?;
    let mut ids: Vec<TermId> = Vec::with_capacity(3);
    for part in &parts {
        match part {
            PatternTerm::Variable(name) => {
                bail!("--type takes three concrete terms, found ?{name}; use `estimate` for patterns")
            }
            PatternTerm::Term(term) => ids.push(
                lookup_term(g, term)
                    .ok_or_else(|| anyhow!("term {} does not appear in the index", term_label(term)))?,
            ),
        }
    }
    let key = SchemaTriple::new(ids[0], ids[1], ids[2]);

    let set = PositionSet::parse(&args.positions)
        .ok_or_else(|| anyhow!("--positions must be one of s, p, o, sp, so, po, spo"))?;
    let kind = match args.counter {
        CounterChoice::All => CounterKind::All,
        CounterChoice::Distinct => CounterKind::Distinct,
    };
    let bind = match args.mode {
        BindChoice::Bound => BindMode::Bound,
        BindChoice::Unbound => BindMode::Unbound,
    };
    let modes = index.modes();
    match kind {
        CounterKind::All if !modes.all => bail!("the index was built without all-counters"),
        CounterKind::Distinct if !modes.distinct => {
            bail!("the index was built without distinct counters")
        }
        _ => {}
    }
    match bind {
        BindMode::Bound if !modes.bound => bail!("the index was built without bound counters"),
        BindMode::Unbound if !modes.unbound => {
            bail!("the index was built without unbound counters")
        }
        _ => {}
    }

    let got = index.retrieve(h, key, set, kind, bind);
    println!("key        {}", key.render(g));
    println!("positions  {}", set.label());
    println!("count      {} ({})", got.value, got.provenance);
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    if args.patterns.len() > 2 {
        bail!("give one --pattern, or two for a join estimate");
    }
    let loaded = load_index(&args.index)?;
    let (g, h, index) = (&loaded.graph, &loaded.hierarchy, &loaded.index);
    let patterns: Vec<TriplePattern> = args
        .patterns
        .iter()
        .map(|s| TriplePattern::parse(s).map_err(|e| anyhow!("--pattern {s:?}: {e}")))
        .collect::<Result<_>>()?;

    match patterns.as_slice() {
        [single] => {
            let est = estimate(g, h, index, single);
            println!("pattern    {}", est.pattern);
            println!("type       {}", est.key.render(g));
            match est.denominator {
                Some(d) => println!(
                    "estimate   {:.3} ({} total ({}) / {} distinct ({}))",
                    est.value, est.numerator.value, est.numerator.provenance, d.value, d.provenance
                ),
                None => println!(
                    "estimate   {:.3} ({} total ({}))",
                    est.value, est.numerator.value, est.numerator.provenance
                ),
            }
            for w in &est.warnings {
                println!("note: {w}");
            }
        }
        [left, right] => {
            let join = estimate_join(g, h, index, left, right);
            println!("join of    {}  and  {}", left.render(), right.render());
            println!("method     heuristic (independence over shared variables)");
            for sv in &join.shared {
                println!(
                    "shared ?{}  left {} / right {}",
                    sv.name,
                    g.lexical(sv.left_type),
                    g.lexical(sv.right_type)
                );
            }
            for (i, c) in join.candidates.iter().enumerate() {
                let assignment: Vec<String> = c
                    .assignment
                    .iter()
                    .map(|(name, ty)| format!("?{name}={}", g.lexical(*ty)))
                    .collect();
                let suffix = if assignment.is_empty() {
                    String::new()
                } else {
                    format!("  [{}]", assignment.join(", "))
                };
                println!(
                    "candidate {}  {:.3} (left {:.3} x right {:.3}){suffix}",
                    i + 1,
                    c.value,
                    c.left.value,
                    c.right.value
                );
            }
            for w in join.candidates.iter().flat_map(|c| &c.left.warnings) {
                println!("note: {w}");
            }
        }
        _ => unreachable!("clap enforces at least one --pattern"),
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let loaded = load_index(&args.index)?;
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            loaded.index.export_tsv(&loaded.graph, &loaded.hierarchy, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            loaded.index.export_tsv(&loaded.graph, &loaded.hierarchy, &mut stdout.lock())?;
        }
    }
    Ok(())
}

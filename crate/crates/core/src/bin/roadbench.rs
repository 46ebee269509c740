use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use roadbench::ch::ChParams;
use roadbench::container::{Index, Method};
use roadbench::graph::validate;
use roadbench::harness::{self, Baseline, BuildOptions, BuildRow, EngineSource, HarnessError, Mode};
use roadbench::synth;
use roadbench::tnr::FallbackKind;
use roadbench::workload;

#[derive(Parser)]
#[command(name = "roadbench", version, about = "Road-network shortest-path index builder and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// DIMACS arc file (.gr)
    #[arg(long)]
    graph: PathBuf,
    /// DIMACS coordinate file (.co)
    #[arg(long)]
    coords: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an index and write it to a container file
    Build {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        out: PathBuf,
        /// TNR grid cells per side
        #[arg(long, default_value_t = 128)]
        grid: u32,
        /// TNR fallback for local queries
        #[arg(long, default_value = "ch")]
        fallback: FallbackKind,
        /// Cap on vertices settled per CH witness search
        #[arg(long)]
        witness_limit: Option<usize>,
        /// Worker threads for preprocessing (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Append a build row to this CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time queries from query files against an index (or the baseline)
    Query {
        #[command(flatten)]
        g: GraphArgs,
        /// Index container; omit to benchmark bidirectional Dijkstra
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        queries: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Distance)]
        mode: ModeArg,
        /// Append query rows to this CSV (stdout otherwise)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Check every returned path for validity
        #[arg(long)]
        verify_paths: bool,
        /// Worker threads; more than one switches to throughput mode
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Refuse indexes larger than this many MiB
        #[arg(long, default_value_t = harness::DEFAULT_RAM_BUDGET >> 20)]
        ram_budget_mb: u64,
        /// Benchmark even if the index exceeds the RAM budget
        #[arg(long)]
        allow_over_budget: bool,
    },
    /// Compare indexes against the Dijkstra oracle on random pairs
    Verify {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long = "index", num_args = 1..)]
        indexes: Vec<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate Q (L-infinity) or R (network distance) query sets
    GenQueries {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, value_enum, default_value_t = Kind::Linf)]
        kind: Kind,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure path redundancy on query pairs
    Redundancy {
        #[command(flatten)]
        g: GraphArgs,
        /// Query file; random pairs are drawn when omitted
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge build and query CSVs into one summary table
    Report {
        #[arg(long = "csv", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic road-like network in DIMACS format
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coords: PathBuf,
    },
    /// Check a network's structural invariants
    Validate {
        #[command(flatten)]
        g: GraphArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Distance,
    Path,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linf,
    Network,
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

fn read_file(path: &PathBuf) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

fn load(g: &GraphArgs) -> Result<roadbench::RoadNetwork, HarnessError> {
    harness::load_network(&g.graph, &g.coords)
}

fn run(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Build { g, method, out, grid, fallback, witness_limit, threads, csv } => {
            let net = load(&g)?;
            let opts = BuildOptions {
                method,
                grid,
                fallback,
                ch: ChParams { witness_settle_limit: witness_limit, ..Default::default() },
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| HarnessError::Usage(e.to_string()))?;
            let (idx, elapsed) = pool.install(|| harness::build_index(&net, &opts))?;
            let bytes = idx.store(&net, &out)? as u64;
            let row = BuildRow {
                dataset: harness::dataset_name(&g.graph),
                method: method.to_string(),
                params: opts.params(),
                vertices: net.n(),
                edges: net.edge_count(),
                build_s: elapsed.as_secs_f64(),
                index_bytes: bytes,
            };
            eprintln!("built {} index: {bytes} bytes in {:.3} s", method, row.build_s);
            if let Some(path) = csv {
                harness::append_build_rows(&path, &[row])?;
            }
            Ok(())
        }
        Cmd::Query { g, index, queries, mode, csv, verify_paths, threads, ram_budget_mb, allow_over_budget } => {
            let net = load(&g)?;
            let source: Box<dyn EngineSource> = match &index {
                Some(path) => {
                    let size = fs::metadata(path).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?.len();
                    harness::check_budget(size, ram_budget_mb << 20, allow_over_budget)?;
                    Box::new(Index::load(path, &net)?)
                }
                None => Box::new(Baseline),
            };
            let mut sets = Vec::new();
            for q in &queries {
                sets.extend(workload::read_query_sets(&read_file(q)?, &net)?);
            }
            let mode = match mode {
                ModeArg::Distance => Mode::Distance,
                ModeArg::Path => Mode::Path,
            };
            let dataset = harness::dataset_name(&g.graph);
            let (rows, _) = harness::bench_sets(source.as_ref(), &net, &dataset, &sets, mode, threads, verify_paths)?;
            match csv {
                Some(path) => harness::append_query_rows(&path, &rows),
                None => harness::write_query_rows(std::io::stdout().lock(), &rows, true),
            }
        }
        Cmd::Verify { g, indexes, pairs, seed } => {
            let net = load(&g)?;
            let loaded = indexes.iter().map(|p| Index::load(p, &net)).collect::<Result<Vec<_>, _>>()?;
            if loaded.is_empty() {
                return Err(HarnessError::Usage("verify needs at least one --index".into()));
            }
            let sources: Vec<&dyn EngineSource> = loaded.iter().map(|i| i as &dyn EngineSource).collect();
            let sample = workload::random_pairs(&net, pairs, seed);
            let bad = harness::verify(&net, &sources, &sample);
            if bad.is_empty() {
                println!("PASS: {} index(es), {} pairs", loaded.len(), sample.len());
                Ok(())
            } else {
                for m in bad.iter().take(50) {
                    println!("FAIL {m}");
                }
                Err(HarnessError::Verification(format!("{} mismatches", bad.len())))
            }
        }
        Cmd::GenQueries { g, kind, count, seed, out } => {
            let net = load(&g)?;
            let (sets, short) = match kind {
                Kind::Linf => workload::gen_linf_sets(&net, count, seed),
                Kind::Network => {
                    let (sets, short, ld) = workload::gen_network_sets(&net, count, seed);
                    eprintln!("estimated diameter l_d = {ld}");
                    (sets, short)
                }
            };
            for s in &short {
                eprintln!("warning: {} filled {} of {} pairs", s.label, s.found, s.wanted);
            }
            let mut buf = Vec::new();
            workload::write_query_sets(&mut buf, &net, &sets)?;
            write_file(&out, &buf)
        }
        Cmd::Redundancy { g, queries, pairs, seed, out } => {
            let net = load(&g)?;
            let sample: Vec<_> = match queries {
                Some(q) => workload::read_query_sets(&read_file(&q)?, &net)?
                    .into_iter()
                    .flat_map(|s| s.pairs)
                    .collect(),
                None => workload::random_pairs(&net, pairs, seed),
            };
            let rep = workload::measure_delta(&net, &sample);
            let mut buf = Vec::new();
            rep.write_csv(&mut buf, &net)?;
            write_file(&out, &buf)?;
            match rep.min_ratio() {
                Some(r) => eprintln!("min ratio {r:.6}; {} pairs without an alternative", rep.no_alternative()),
                None => eprintln!("no pair has an alternative path"),
            }
            Ok(())
        }
        Cmd::Report { inputs, out } => {
            let texts = inputs
                .iter()
                .map(|p| Ok((p.display().to_string(), read_file(p)?)))
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let summary = harness::merge_reports(&texts)?;
            match out {
                Some(p) => {
                    let mut buf = Vec::new();
                    summary.write_csv(&mut buf)?;
                    write_file(&p, &buf)
                }
                None => summary.write_csv(std::io::stdout().lock()),
            }
        }
        Cmd::Synth { n, seed, graph, coords } => {
            let net = synth::road_like(n, seed);
            let (mut gr, mut co) = (Vec::new(), Vec::new());
            net.write_dimacs(&mut gr, &mut co)?;
            write_file(&graph, &gr)?;
            write_file(&coords, &co)?;
            eprintln!("wrote {} vertices, {} edges", net.n(), net.edge_count());
            Ok(())
        }
        Cmd::Validate { g } => {
            let net = load(&g)?;
            let rep = validate(&net);
            println!("{rep}");
            if rep.is_ok() {
                Ok(())
            } else {
                Err(HarnessError::Data("network violates structural invariants".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

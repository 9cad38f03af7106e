use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use embedgeom::clustering::{self, fit_minibatch_kmeans, load_model, save_model, ClusterModel};
use embedgeom::cohesion::{compute_beta_centroid, compute_beta_pairwise};
use embedgeom::detector::{self, classify_token, DensityIndex, DetectionThresholds, TokenVerdict};
use embedgeom::diagnostics::{diagnose_space_with, emit_pca_plotdata};
use embedgeom::polarity::{compute_alpha_with, load_antonyms, SpanScope};
use embedgeom::radial::{compute_lambda_r_with, emit_radial_plotdata};
use embedgeom::report::{emit_zone_plotdata, run_analyze, run_survey, store_name, RunConfig};
use embedgeom::util::write_json;
use embedgeom::{load_store, EmbeddingStore, GeomError, Result};

#[derive(Parser)]
#[command(name = "embedgeom", version, about = "Geometry diagnostics for token embedding matrices")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "EMBEDGEOM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis on one store.
    Analyze {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Analyze several stores and write a combined table.
    Survey {
        #[arg(required = true)]
        stores: Vec<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Fit and save the k-means partition.
    Cluster {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Radial information gradient.
    Radial {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Cluster cohesion β (centroid and pairwise).
    Cohesion {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Polarity coupling α from an antonym list.
    Polarity {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// PCA spectrum, effective dimension and isotropy.
    Diagnose {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Calibrate detector thresholds and write per-token zones.
    Calibrate {
        store: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Classify a query sequence; prints one JSON verdict per line.
    Detect {
        store: PathBuf,
        /// EGEM store (rows in sequence order) or CSV of vectors, one per line.
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = clustering::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = clustering::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = clustering::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = clustering::DEFAULT_N_INIT)]
    n_init: usize,
    #[arg(long, default_value_t = 40)]
    n_bins: usize,
    #[arg(long, default_value_t = 10)]
    min_bin_count: usize,
    #[arg(long, default_value_t = 300)]
    sample_cap: usize,
    #[arg(long, default_value_t = 5)]
    top_m: usize,
    /// Antonym TSV (word_a<TAB>word_b).
    #[arg(long)]
    antonyms: Option<PathBuf>,
    /// `members` or `pair`.
    #[arg(long, default_value = "members")]
    span_scope: String,
    #[arg(long, default_value_t = 100_000)]
    pair_sample: usize,
    #[arg(long, default_value_t = 10_000)]
    density_sample: usize,
    #[arg(long, default_value_t = 10)]
    k_neighbors: usize,
    /// PCA on raw rather than mean-centred vectors.
    #[arg(long)]
    no_center: bool,
    #[arg(long, default_value_t = 15.0)]
    pct_h: f64,
    #[arg(long, default_value_t = 40.0)]
    pct_norm: f64,
    #[arg(long, default_value_t = 10.0)]
    pct_max_sim: f64,
    #[arg(long, default_value_t = 25.0)]
    pct_jump: f64,
    #[arg(long, default_value_t = 90.0)]
    pct_density: f64,
}

impl Opts {
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig {
            k: self.k,
            batch_size: self.batch_size,
            n_init: self.n_init,
            seed: self.seed,
            n_bins: self.n_bins,
            min_bin_count: self.min_bin_count,
            sample_cap: self.sample_cap,
            top_m: self.top_m,
            antonym_list_path: self.antonyms.clone(),
            span_scope: self.span_scope.parse::<SpanScope>()?,
            pair_sample: self.pair_sample,
            density_sample: self.density_sample,
            k_neighbors: self.k_neighbors,
            center_pca: !self.no_center,
            ..RunConfig::default()
        };
        c.percentiles.h = self.pct_h;
        c.percentiles.norm = self.pct_norm;
        c.percentiles.max_sim = self.pct_max_sim;
        c.percentiles.jump = self.pct_jump;
        c.percentiles.density = self.pct_density;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}

/// Loads the store and its clustering, reusing `<out>/<name>.clusters.*` when
/// it was produced with the same k and seed for the same vocabulary.
fn store_and_model(path: &Path, config: &RunConfig, out_dir: &Path) -> Result<(EmbeddingStore, ClusterModel, String)> {
    let store = load_store(path)?;
    let name = store_name(path);
    let prefix = out_dir.join(&name);
    if let Ok(m) = load_model(&prefix) {
        if m.k == config.k && m.seed == config.seed && m.assignments.len() == store.vocab_size() && m.dim() == store.dim() {
            return Ok((store, m, name));
        }
    }
    let m = fit_minibatch_kmeans(&store, &config.kmeans())?;
    save_model(&m, &prefix)?;
    Ok((store, m, name))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| GeomError::Format(e.to_string()))?;
    println!("{s}");
    Ok(())
}

/// Exit status for runs that produced output: a partial run (some stage or
/// store failed, the rest written) exits with 2.
enum Status {
    Complete,
    Partial,
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Analyze { store, opts } => {
            let outcome = run_analyze(&store, &opts.config()?, &opts.out_dir)?;
            print_json(&outcome.report)?;
            for e in &outcome.report.errors {
                eprintln!("error: {}: stage {}: {}", e.kind, e.stage, e.message);
            }
            Ok(if outcome.is_complete() { Status::Complete } else { Status::Partial })
        }
        Command::Survey { stores, opts } => {
            let outcome = run_survey(&stores, &opts.config()?, &opts.out_dir)?;
            let table = fs::read_to_string(opts.out_dir.join("survey.csv")).map_err(|e| GeomError::io(&opts.out_dir, e))?;
            print!("{table}");
            for row in &outcome.rows {
                let errors = row.error.iter().chain(row.report.iter().flat_map(|r| &r.errors));
                for e in errors {
                    eprintln!("error: {}: {}: stage {}: {}", e.kind, row.store, e.stage, e.message);
                }
            }
            Ok(if outcome.all_ok() { Status::Complete } else { Status::Partial })
        }
        Command::Cluster { store, opts } => {
            let config = opts.config()?;
            let s = load_store(&store)?;
            let m = fit_minibatch_kmeans(&s, &config.kmeans())?;
            save_model(&m, &opts.out_dir.join(store_name(&store)))?;
            println!("k={} inertia={} epochs={}", m.k, m.inertia, m.inertia_history.len());
            Ok(Status::Complete)
        }
        Command::Radial { store, opts } => {
            let config = opts.config()?;
            let s = load_store(&store)?;
            let name = store_name(&store);
            let r = compute_lambda_r_with(&s, config.n_bins, config.min_bin_count)?;
            let file = |suffix: &str| opts.out_dir.join(format!("{name}{suffix}"));
            write_json(&file(".radial.json"), &r)?;
            emit_radial_plotdata(&r, &file(".radial_bins.csv"), &file(".radial_curve.csv"))?;
            print_json(&r)?;
            Ok(Status::Complete)
        }
        Command::Cohesion { store, opts } => {
            let config = opts.config()?;
            let (s, m, name) = store_and_model(&store, &config, &opts.out_dir)?;
            let centroid = compute_beta_centroid(&s, &m, config.sample_cap, config.seed)?;
            let pairwise = compute_beta_pairwise(&s, &m, config.sample_cap, config.seed).ok();
            let out = serde_json::json!({ "centroid_diff": centroid, "pairwise": pairwise });
            write_json(&opts.out_dir.join(format!("{name}.beta.json")), &out)?;
            print_json(&out)?;
            Ok(Status::Complete)
        }
        Command::Polarity { store, opts } => {
            let config = opts.config()?;
            let Some(list) = &config.antonym_list_path else {
                return Err(GeomError::InsufficientData("polarity needs --antonyms".into()));
            };
            let pairs = load_antonyms(list)?;
            let (s, m, name) = store_and_model(&store, &config, &opts.out_dir)?;
            let p = compute_alpha_with(&s, &m, &pairs, config.span_scope)?;
            write_json(&opts.out_dir.join(format!("{name}.polarity.json")), &p)?;
            print_json(&p)?;
            Ok(Status::Complete)
        }
        Command::Diagnose { store, opts } => {
            let config = opts.config()?;
            let s = load_store(&store)?;
            let name = store_name(&store);
            let d = diagnose_space_with(&s, &config.diagnose())?;
            write_json(&opts.out_dir.join(format!("{name}.diagnostics.json")), &d)?;
            emit_pca_plotdata(&d, &opts.out_dir.join(format!("{name}.pca_cumulative.csv")))?;
            print_json(&d)?;
            Ok(Status::Complete)
        }
        Command::Calibrate { store, opts } => {
            let config = opts.config()?;
            let (s, m, name) = store_and_model(&store, &config, &opts.out_dir)?;
            let (t, index) = detector::calibrate_with(&s, &m, &config.detector())?;
            write_json(&opts.out_dir.join(format!("{name}.thresholds.json")), &t)?;
            let verdicts = detector::classify_store(&s, &m, &t, &index)?;
            emit_zone_plotdata(&s, &verdicts, &opts.out_dir.join(format!("{name}.zones.csv")))?;
            print_json(&t)?;
            Ok(Status::Complete)
        }
        Command::Detect { store, query, opts } => {
            let config = opts.config()?;
            let (s, m, _) = store_and_model(&store, &config, &opts.out_dir)?;
            let (t, index) = detector::calibrate_with(&s, &m, &config.detector())?;
            let sequence = read_query(&query)?;
            if let Some(v) = sequence.iter().find(|v| v.len() != s.dim()) {
                return Err(GeomError::Consistency(format!(
                    "query vector has dimension {}, store has {}",
                    v.len(),
                    s.dim()
                )));
            }
            let verdicts = detect(&sequence, &m, &t, &index)?;
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            for v in &verdicts {
                let line = serde_json::to_string(v).map_err(|e| GeomError::Format(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| GeomError::Data(e.to_string()))?;
            }
            out.flush().map_err(|e| GeomError::Data(e.to_string()))?;
            Ok(Status::Complete)
        }
    }
}

/// Trajectory verdicts (Types 1 and 2) merged with per-token density checks (Type 3).
fn detect(
    sequence: &[Vec<f64>],
    model: &ClusterModel,
    t: &DetectionThresholds,
    index: &DensityIndex,
) -> Result<Vec<TokenVerdict>> {
    let mut verdicts = detector::analyze_trajectory(sequence, model, t)?;
    for (v, x) in verdicts.iter_mut().zip(sequence) {
        let single = classify_token(x, model, t, index)?;
        for f in single.flags {
            if !v.flags.contains(&f) {
                v.flags.push(f);
            }
        }
        v.flags.sort();
        v.density = single.density;
    }
    Ok(verdicts)
}

fn read_query(path: &Path) -> Result<Vec<Vec<f64>>> {
    let name = path.to_string_lossy();
    if name.ends_with(".egem.json") || name.ends_with(".egem.bin") || name.ends_with(".tokens.tsv") {
        return Ok(load_store(path)?.rows_f64());
    }
    let text = fs::read_to_string(path).map_err(|e| GeomError::Format(format!("{}: {e}", path.display())))?;
    parse_sequence_csv(&text)
}

/// One vector per line; a leading non-numeric field is taken as a label and
/// `#` lines are comments.
fn parse_sequence_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            fields.remove(0);
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| GeomError::Format(format!("line {}: bad value {f:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GeomError::InsufficientData("query sequence is empty".into()));
    }
    Ok(rows)
}

//! End-to-end pipeline and report generation.
//!
//! `run_analyze` runs clustering, λ_r, β (both variants), α, the space
//! diagnostics and detector calibration on one store, writing a JSON report,
//! a one-row CSV and the plot-data files listed in [`PLOT_REGISTRY`].
//! `run_survey` does the same for several stores and adds a combined
//! survey CSV plus the per-model λ_r plot data.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, fit_minibatch_kmeans, ClusterModel, KMeansParams};
use crate::cohesion::{self, compute_beta_centroid, compute_beta_pairwise, BetaResult};
use crate::detector::{self, CalibrationPercentiles, DetectorConfig, HallucinationType, TokenVerdict, ZoneSummary};
use crate::diagnostics::{self, DiagnoseOptions, SpaceDiagnostics};
use crate::error::{GeomError, Result};
use crate::polarity::{self, AntonymPair, PolarityResult, SpanScope};
use crate::radial::{self, RadialResult};
use crate::store::{load_store, store_prefix, EmbeddingStore};
use crate::util::{fmt_f64, write_atomic, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub batch_size: usize,
    pub n_init: usize,
    pub seed: u64,
    pub n_bins: usize,
    pub min_bin_count: usize,
    pub sample_cap: usize,
    pub top_m: usize,
    pub percentiles: CalibrationPercentiles,
    pub antonym_list_path: Option<PathBuf>,
    pub span_scope: SpanScope,
    pub pair_sample: usize,
    pub density_sample: usize,
    pub k_neighbors: usize,
    pub center_pca: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: clustering::DEFAULT_K,
            batch_size: clustering::DEFAULT_BATCH_SIZE,
            n_init: clustering::DEFAULT_N_INIT,
            seed: clustering::DEFAULT_SEED,
            n_bins: radial::DEFAULT_BINS,
            min_bin_count: radial::DEFAULT_MIN_BIN_COUNT,
            sample_cap: cohesion::DEFAULT_SAMPLE_CAP,
            top_m: 5,
            percentiles: CalibrationPercentiles::default(),
            antonym_list_path: None,
            span_scope: SpanScope::Members,
            pair_sample: diagnostics::DEFAULT_PAIR_SAMPLE,
            density_sample: 10_000,
            k_neighbors: 10,
            center_pca: true,
        }
    }
}

impl RunConfig {
    pub fn kmeans(&self) -> KMeansParams {
        KMeansParams {
            k: self.k,
            batch_size: self.batch_size,
            n_init: self.n_init,
            seed: self.seed,
            ..KMeansParams::default()
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            top_m: self.top_m,
            k_neighbors: self.k_neighbors,
            density_sample: self.density_sample,
            seed: self.seed,
            percentiles: self.percentiles.clone(),
        }
    }

    pub fn diagnose(&self) -> DiagnoseOptions {
        DiagnoseOptions {
            pair_sample: self.pair_sample,
            seed: self.seed,
            center: self.center_pca,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

impl StageError {
    fn new(stage: &str, e: &GeomError) -> Self {
        StageError {
            stage: stage.to_string(),
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// One row of the cross-model table, plus the deep diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_name: String,
    pub dim: usize,
    pub token_count: usize,
    pub lambda_r: Option<f64>,
    pub p_lambda: Option<f64>,
    pub r2_lin: Option<f64>,
    pub r2_quad: Option<f64>,
    #[serde(default, with = "opt_f64")]
    pub f_stat: Option<f64>,
    #[serde(default, with = "opt_f64")]
    pub aic_lin: Option<f64>,
    #[serde(default, with = "opt_f64")]
    pub aic_quad: Option<f64>,
    pub n_bins_used: Option<usize>,
    pub beta_diff: Option<f64>,
    pub beta_p: Option<f64>,
    pub beta_pairwise: Option<f64>,
    pub beta_pairwise_p: Option<f64>,
    pub mean_own_sim: Option<f64>,
    pub mean_other_sim: Option<f64>,
    pub alpha_mean: Option<f64>,
    pub n_alpha: Option<usize>,
    pub same_cluster_pair_cos: Option<f64>,
    pub cross_cluster_pair_cos: Option<f64>,
    pub significant: bool,
    pub inertia: Option<f64>,
    pub diagnostics: Option<SpaceDiagnostics>,
    pub zones: Option<ZoneSummary>,
    pub errors: Vec<StageError>,
}

mod opt_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "crate::util::serde_f64")] f64);

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(W).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

/// Column order of the per-model CSV; mirrors [`ModelReport`] field for field
/// (diagnostics flattened, the cumulative curve and zone counts excepted).
pub const REPORT_CSV_COLUMNS: &[&str] = &[
    "model_name",
    "dim",
    "token_count",
    "lambda_r",
    "p_lambda",
    "r2_lin",
    "r2_quad",
    "f_stat",
    "aic_lin",
    "aic_quad",
    "n_bins_used",
    "beta_diff",
    "beta_p",
    "beta_pairwise",
    "beta_pairwise_p",
    "mean_own_sim",
    "mean_other_sim",
    "alpha_mean",
    "n_alpha",
    "same_cluster_pair_cos",
    "cross_cluster_pair_cos",
    "significant",
    "inertia",
    "effective_dim_95",
    "utilization",
    "norm_cov",
    "mean_pairwise_cos",
];

/// Combined survey CSV header, in the cross-model table's column order.
pub const SURVEY_COLUMNS: &[&str] = &[
    "Model", "Dim", "Tokens", "λ_r", "p-value", "R²_lin", "R²_quad", "β_diff", "α", "n_α", "Sig.",
];

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ModelReport {
    pub fn csv_row(&self) -> Vec<String> {
        let d = self.diagnostics.as_ref();
        vec![
            csv_field(&self.model_name),
            self.dim.to_string(),
            self.token_count.to_string(),
            opt(self.lambda_r),
            opt(self.p_lambda),
            opt(self.r2_lin),
            opt(self.r2_quad),
            opt(self.f_stat),
            opt(self.aic_lin),
            opt(self.aic_quad),
            opt_usize(self.n_bins_used),
            opt(self.beta_diff),
            opt(self.beta_p),
            opt(self.beta_pairwise),
            opt(self.beta_pairwise_p),
            opt(self.mean_own_sim),
            opt(self.mean_other_sim),
            opt(self.alpha_mean),
            opt_usize(self.n_alpha),
            opt(self.same_cluster_pair_cos),
            opt(self.cross_cluster_pair_cos),
            self.significant.to_string(),
            opt(self.inertia),
            opt_usize(d.map(|d| d.effective_dim_95)),
            opt(d.map(|d| d.utilization)),
            opt(d.map(|d| d.norm_cov)),
            opt(d.map(|d| d.mean_pairwise_cos)),
        ]
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", REPORT_CSV_COLUMNS.join(","), self.csv_row().join(","))
    }

    /// Row of the cross-model table, formatted for reading.
    pub fn survey_row(&self) -> Vec<String> {
        let fixed = |x: Option<f64>, places: usize| x.map(|v| format!("{v:.places$}")).unwrap_or_default();
        vec![
            csv_field(&self.model_name),
            self.dim.to_string(),
            self.token_count.to_string(),
            self.lambda_r.map(|v| format!("{v:+.2}")).unwrap_or_default(),
            self.p_lambda.map(format_p).unwrap_or_default(),
            fixed(self.r2_lin, 3),
            fixed(self.r2_quad, 3),
            fixed(self.beta_diff, 3),
            fixed(self.alpha_mean, 2),
            opt_usize(self.n_alpha),
            if self.lambda_r.is_none() {
                String::new()
            } else if self.significant {
                "✓".into()
            } else {
                "✗".into()
            },
        ]
    }
}

/// Formats a p-value for tables; values below 0.001 print as `<0.001`.
pub fn format_p(p: f64) -> String {
    if p < 1e-3 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

/// Plot-data file and the plot it feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotEmitter {
    pub plot: &'static str,
    /// File name pattern; `{name}` is the model name (survey files have none).
    pub file: &'static str,
    pub producer: &'static str,
    pub content: &'static str,
}

pub const PLOT_REGISTRY: &[PlotEmitter] = &[
    PlotEmitter {
        plot: "zones",
        file: "{name}.zones.csv",
        producer: "analyze, detect",
        content: "per-token h, norm, max_sim, self-information, density and flags",
    },
    PlotEmitter {
        plot: "radial",
        file: "{name}.radial_bins.csv",
        producer: "analyze, radial",
        content: "bin scatter with linear/quadratic/cubic fits and residuals",
    },
    PlotEmitter {
        plot: "radial",
        file: "{name}.radial_curve.csv",
        producer: "analyze, radial",
        content: "fitted curves sampled at 200 norms",
    },
    PlotEmitter {
        plot: "alpha_beta",
        file: "{name}.alpha_beta.csv",
        producer: "analyze",
        content: "per-cluster α and β (both variants)",
    },
    PlotEmitter {
        plot: "spectrum",
        file: "{name}.radial_bins.csv",
        producer: "analyze, radial",
        content: "radial profile with degree 1–3 fits",
    },
    PlotEmitter {
        plot: "spectrum",
        file: "{name}.pca_cumulative.csv",
        producer: "analyze, diagnose",
        content: "cumulative explained variance by component",
    },
    PlotEmitter {
        plot: "survey_lambda",
        file: "survey_lambda.csv",
        producer: "survey",
        content: "λ_r, p-value, significance and R² per model",
    },
];

pub fn plot_file(pattern: &str, name: &str) -> String {
    pattern.replace("{name}", name)
}

/// Base name used for output files: the store's file prefix.
pub fn store_name(store_path: &Path) -> String {
    store_prefix(store_path)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "store".into())
}

/// Writes per-token zone data for a classified population.
pub fn emit_zone_plotdata(store: &EmbeddingStore, verdicts: &[TokenVerdict], path: &Path) -> Result<()> {
    let mut csv = String::from("token,position,h,norm,max_sim,self_information,density,flags\n");
    let tokens = store.tokens();
    for v in verdicts {
        let t = tokens.get(v.position);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(t.map_or("", |t| t.token.as_str())),
            v.position,
            fmt_f64(v.h),
            fmt_f64(v.norm),
            fmt_f64(v.max_sim),
            t.map(|t| fmt_f64(t.self_information)).unwrap_or_default(),
            opt(v.density),
            flag_string(&v.flags),
        ));
    }
    write_atomic(path, csv.as_bytes())
}

pub fn flag_string(flags: &[HallucinationType]) -> String {
    flags
        .iter()
        .map(|f| match f {
            HallucinationType::Type1 => "type1",
            HallucinationType::Type2 => "type2",
            HallucinationType::Type3 => "type3",
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Per-cluster α and β for the cohesion/coupling scatter.
pub fn emit_alpha_beta_plotdata(
    k: usize,
    beta_centroid: Option<&BetaResult>,
    beta_pairwise: Option<&BetaResult>,
    polarity: Option<&PolarityResult>,
    path: &Path,
) -> Result<()> {
    let mut csv = String::from("cluster,beta_centroid,beta_pairwise,alpha,n_pairs\n");
    for c in 0..k {
        let b = |r: Option<&BetaResult>| r.and_then(|r| r.per_cluster.get(c).copied().flatten());
        let a = polarity.and_then(|p| p.per_cluster.iter().find(|e| e.cluster_id == c));
        csv.push_str(&format!(
            "{c},{},{},{},{}\n",
            opt(b(beta_centroid)),
            opt(b(beta_pairwise)),
            opt(a.map(|a| a.alpha)),
            opt_usize(a.map(|a| a.n_pairs)),
        ));
    }
    write_atomic(path, csv.as_bytes())
}

/// Everything `run_analyze` produced for one store.
#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub report: ModelReport,
    pub model: Option<ClusterModel>,
    pub radial: Option<RadialResult>,
    pub beta: Option<BetaResult>,
    pub beta_pairwise: Option<BetaResult>,
    pub polarity: Option<PolarityResult>,
}

impl AnalyzeOutcome {
    pub fn is_complete(&self) -> bool {
        self.report.errors.is_empty()
    }
}

#[derive(Serialize)]
struct BetaFile<'a> {
    centroid_diff: Option<&'a BetaResult>,
    pairwise: Option<&'a BetaResult>,
}

/// Loads antonym pairs for the configuration; an absent or unreadable list
/// yields no pairs (and α then reports insufficient data).
fn configured_pairs(config: &RunConfig, errors: &mut Vec<StageError>) -> Vec<AntonymPair> {
    match &config.antonym_list_path {
        None => Vec::new(),
        Some(p) => match polarity::load_antonyms(p) {
            Ok(pairs) => pairs,
            Err(e) => {
                errors.push(StageError::new("antonyms", &e));
                Vec::new()
            }
        },
    }
}

/// Runs every stage on the store at `store_path`, writing results under `out_dir`.
///
/// Only a store that cannot be loaded is an `Err`; stage failures are recorded
/// in `report.errors` and the remaining stages still run.
pub fn run_analyze(store_path: &Path, config: &RunConfig, out_dir: &Path) -> Result<AnalyzeOutcome> {
    let store = load_store(store_path)?;
    analyze_store(&store, &store_name(store_path), config, out_dir)
}

/// [`run_analyze`] on an in-memory store; `name` prefixes the output files.
pub fn analyze_store(store: &EmbeddingStore, name: &str, config: &RunConfig, out_dir: &Path) -> Result<AnalyzeOutcome> {
    let file = |suffix: &str| out_dir.join(format!("{name}{suffix}"));
    let mut errors = Vec::new();

    let model = match fit_minibatch_kmeans(store, &config.kmeans()) {
        Ok(m) => {
            clustering::save_model(&m, &out_dir.join(name))?;
            Some(m)
        }
        Err(e) => {
            errors.push(StageError::new("cluster", &e));
            None
        }
    };

    let radial = match radial::compute_lambda_r_with(store, config.n_bins, config.min_bin_count) {
        Ok(r) => {
            write_json(&file(".radial.json"), &r)?;
            radial::emit_radial_plotdata(&r, &file(".radial_bins.csv"), &file(".radial_curve.csv"))?;
            Some(r)
        }
        Err(e) => {
            errors.push(StageError::new("radial", &e));
            None
        }
    };

    let mut beta = None;
    let mut beta_pw = None;
    let mut polarity_res = None;
    let mut zones = None;
    if let Some(model) = &model {
        match compute_beta_centroid(store, model, config.sample_cap, config.seed) {
            Ok(b) => beta = Some(b),
            Err(e) => errors.push(StageError::new("cohesion", &e)),
        }
        match compute_beta_pairwise(store, model, config.sample_cap, config.seed) {
            Ok(b) => beta_pw = Some(b),
            Err(e) => errors.push(StageError::new("cohesion_pairwise", &e)),
        }
        write_json(
            &file(".beta.json"),
            &BetaFile {
                centroid_diff: beta.as_ref(),
                pairwise: beta_pw.as_ref(),
            },
        )?;

        let pairs = configured_pairs(config, &mut errors);
        match polarity::compute_alpha_with(store, model, &pairs, config.span_scope) {
            Ok(p) => {
                write_json(&file(".polarity.json"), &p)?;
                polarity_res = Some(p);
            }
            Err(e) => errors.push(StageError::new("polarity", &e)),
        }
        emit_alpha_beta_plotdata(
            model.k,
            beta.as_ref(),
            beta_pw.as_ref(),
            polarity_res.as_ref(),
            &file(".alpha_beta.csv"),
        )?;

        match detector::calibrate_with(store, model, &config.detector()) {
            Ok((thresholds, index)) => {
                write_json(&file(".thresholds.json"), &thresholds)?;
                match detector::classify_store(store, model, &thresholds, &index) {
                    Ok(verdicts) => {
                        emit_zone_plotdata(store, &verdicts, &file(".zones.csv"))?;
                        zones = Some(detector::summarize(store, &verdicts, &index));
                    }
                    Err(e) => errors.push(StageError::new("detect", &e)),
                }
            }
            Err(e) => errors.push(StageError::new("calibrate", &e)),
        }
    }

    let diag = match diagnostics::diagnose_space_with(store, &config.diagnose()) {
        Ok(d) => {
            write_json(&file(".diagnostics.json"), &d)?;
            diagnostics::emit_pca_plotdata(&d, &file(".pca_cumulative.csv"))?;
            Some(d)
        }
        Err(e) => {
            errors.push(StageError::new("diagnose", &e));
            None
        }
    };

    let report = ModelReport {
        model_name: store.model_name().to_string(),
        dim: store.dim(),
        token_count: store.vocab_size(),
        lambda_r: radial.as_ref().map(|r| r.lambda_r),
        p_lambda: radial.as_ref().map(|r| r.f_test.p_value),
        r2_lin: radial.as_ref().map(|r| r.fit_lin.r_squared),
        r2_quad: radial.as_ref().map(|r| r.fit_quad.r_squared),
        f_stat: radial.as_ref().map(|r| r.f_test.f_stat),
        aic_lin: radial.as_ref().map(|r| r.aic_lin),
        aic_quad: radial.as_ref().map(|r| r.aic_quad),
        n_bins_used: radial.as_ref().map(|r| r.bins.len()),
        beta_diff: beta.as_ref().map(|b| b.mean_beta),
        beta_p: beta.as_ref().map(|b| b.p_value),
        beta_pairwise: beta_pw.as_ref().map(|b| b.mean_beta),
        beta_pairwise_p: beta_pw.as_ref().map(|b| b.p_value),
        mean_own_sim: beta.as_ref().map(|b| b.mean_own_sim),
        mean_other_sim: beta.as_ref().map(|b| b.mean_other_sim),
        alpha_mean: polarity_res.as_ref().map(|p| p.mean_alpha),
        n_alpha: polarity_res.as_ref().map(|p| p.n_alpha),
        same_cluster_pair_cos: polarity_res.as_ref().and_then(|p| p.same_cluster_pair_cos),
        cross_cluster_pair_cos: polarity_res.as_ref().and_then(|p| p.cross_cluster_pair_cos),
        significant: radial.as_ref().is_some_and(|r| r.significant),
        inertia: model.as_ref().map(|m| m.inertia),
        diagnostics: diag,
        zones,
        errors,
    };
    write_json(&file(".report.json"), &report)?;
    write_atomic(&file(".report.csv"), report.to_csv().as_bytes())?;

    Ok(AnalyzeOutcome {
        report,
        model,
        radial,
        beta,
        beta_pairwise: beta_pw,
        polarity: polarity_res,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Report produced but at least one stage failed.
    Partial,
    /// The store could not be analyzed at all.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub store: String,
    pub status: RowStatus,
    pub report: Option<ModelReport>,
    pub error: Option<StageError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOutcome {
    pub rows: Vec<SurveyRow>,
}

impl SurveyOutcome {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == RowStatus::Ok)
    }
}

/// Analyzes every store (in parallel, results kept in input order) and writes
/// `survey.csv`, `survey.json` and `survey_lambda.csv` to `out_dir`.
pub fn run_survey(store_paths: &[PathBuf], config: &RunConfig, out_dir: &Path) -> Result<SurveyOutcome> {
    if store_paths.is_empty() {
        return Err(GeomError::InsufficientData("survey needs at least one store".into()));
    }
    let rows: Vec<SurveyRow> = store_paths
        .par_iter()
        .map(|p| {
            let label = p.display().to_string();
            match run_analyze(p, config, out_dir) {
                Ok(outcome) => SurveyRow {
                    store: label,
                    status: if outcome.is_complete() { RowStatus::Ok } else { RowStatus::Partial },
                    report: Some(outcome.report),
                    error: None,
                },
                Err(e) => SurveyRow {
                    store: label,
                    status: RowStatus::Failed,
                    report: None,
                    error: Some(StageError::new("load", &e)),
                },
            }
        })
        .collect();

    let mut table = format!("{}\n", SURVEY_COLUMNS.join(","));
    let mut lambda = String::from("model,lambda_r,p_value,significant,color,r2_lin,r2_quad,f_stat\n");
    for row in &rows {
        match &row.report {
            Some(r) => {
                table.push_str(&r.survey_row().join(","));
                table.push('\n');
                if let Some(l) = r.lambda_r {
                    lambda.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        csv_field(&r.model_name),
                        fmt_f64(l),
                        opt(r.p_lambda),
                        r.significant,
                        if r.significant { "green" } else { "red" },
                        opt(r.r2_lin),
                        opt(r.r2_quad),
                        opt(r.f_stat),
                    ));
                }
            }
            None => {
                let mut cells = vec![String::new(); SURVEY_COLUMNS.len()];
                cells[0] = csv_field(&store_name(Path::new(&row.store)));
                cells[SURVEY_COLUMNS.len() - 1] = "FAILED".into();
                table.push_str(&cells.join(","));
                table.push('\n');
            }
        }
    }
    let outcome = SurveyOutcome { rows };
    write_atomic(&out_dir.join("survey.csv"), table.as_bytes())?;
    write_atomic(&out_dir.join("survey_lambda.csv"), lambda.as_bytes())?;
    write_json(&out_dir.join("survey.json"), &outcome)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = RunConfig::default();
        assert_eq!(
            (c.k, c.batch_size, c.n_init, c.seed, c.n_bins, c.min_bin_count, c.sample_cap, c.top_m),
            (40, 1024, 5, 42, 40, 10, 300, 5)
        );
    }

    #[test]
    fn p_value_formatting() {
        assert_eq!(format_p(0.0004), "<0.001");
        assert_eq!(format_p(0.126), "0.126");
    }

    #[test]
    fn every_plot_has_an_emitter() {
        for plot in ["zones", "radial", "alpha_beta", "spectrum", "survey_lambda"] {
            assert!(PLOT_REGISTRY.iter().any(|e| e.plot == plot), "{plot}");
        }
    }

    #[test]
    fn csv_row_width_matches_header() {
        let r = ModelReport {
            model_name: "m".into(),
            dim: 2,
            token_count: 3,
            lambda_r: None,
            p_lambda: None,
            r2_lin: None,
            r2_quad: None,
            f_stat: Some(f64::INFINITY),
            aic_lin: None,
            aic_quad: None,
            n_bins_used: None,
            beta_diff: None,
            beta_p: None,
            beta_pairwise: None,
            beta_pairwise_p: None,
            mean_own_sim: None,
            mean_other_sim: None,
            alpha_mean: None,
            n_alpha: None,
            same_cluster_pair_cos: None,
            cross_cluster_pair_cos: None,
            significant: false,
            inertia: None,
            diagnostics: None,
            zones: None,
            errors: vec![],
        };
        assert_eq!(r.csv_row().len(), REPORT_CSV_COLUMNS.len());
        assert_eq!(r.survey_row().len(), SURVEY_COLUMNS.len());
        let json = serde_json::to_string(&r).unwrap();
        let back: ModelReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.f_stat, Some(f64::INFINITY));
    }
}

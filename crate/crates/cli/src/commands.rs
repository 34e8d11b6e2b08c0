use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use geoprobe::corpuscount::{build_patterns, count_corpus, list_shards, CorpusFormat, CountTable, ScanOptions};
use geoprobe::geodata::{make_split, read_embeddings, write_embeddings, Dataset, EmbeddingMatrix, SplitIndices};
use geoprobe::metrics::{
    correlate_covariates, country_level_correlations, evaluate, gini, grid_log_mse, group_error_stats,
    write_csv, CorrelationRow, EvalReport, GroupBy, GroupStats,
};
use geoprobe::probe::{
    fit_with_policy, layer_sweep, targets_matrix, FitReport, LambdaPolicy, RidgeProbe, DEFAULT_CV_SEED,
    DEFAULT_FOLDS,
};
use geoprobe::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::args::{Command, LambdaArgs};
use crate::manifest::{manifest_path, sibling, RunManifest};
use crate::svg::{emit_heatmap_svg, emit_scatter_map};
use crate::synth::gen_synthetic;

pub const EMBEDDING_EXTENSION: &str = "geoemb";

fn json_err(context: &str) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        context: context.to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Prefixes data errors with the file they came from.
fn in_file<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| {
        if e.is_io() || matches!(e, Error::Json { .. }) {
            e
        } else {
            Error::invalid(format!("{}: {e}", path.display()))
        }
    })
}

fn load_embeddings_for(path: &Path, dataset: &Dataset) -> Result<EmbeddingMatrix> {
    in_file(path, read_embeddings(path).and_then(|m| {
        m.check_alignment(dataset.len(), dataset.source_digest)?;
        Ok(m)
    }))
}

fn load_split_for(path: &Path, dataset: &Dataset) -> Result<SplitIndices> {
    in_file(path, SplitIndices::load(path).and_then(|s| {
        s.validate(dataset.len())?;
        Ok(s)
    }))
}

fn load_report_for(path: &Path, dataset: &Dataset) -> Result<EvalReport> {
    in_file(path, EvalReport::load(path).and_then(|r| {
        r.check_dataset(dataset)?;
        Ok(r)
    }))
}

/// Resolves the λ flags: a fixed value, an explicit grid, or the default grid
/// scaled by the feature count.
pub fn lambda_policy(args: &LambdaArgs, dim: usize) -> Result<LambdaPolicy> {
    if let Some(lambda) = args.lambda {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!("--lambda must be finite and ≥ 0, got {lambda}")));
        }
        return Ok(LambdaPolicy::Fixed { lambda });
    }
    let folds = args.folds.unwrap_or(DEFAULT_FOLDS);
    let grid = match &args.cv_grid {
        Some(g) => g.0.clone(),
        None => match LambdaPolicy::default_for_dim(dim) {
            LambdaPolicy::CrossValidated { grid, .. } => grid,
            LambdaPolicy::Fixed { .. } => unreachable!(),
        },
    };
    Ok(LambdaPolicy::CrossValidated {
        grid,
        folds,
        seed: DEFAULT_CV_SEED,
    })
}

/// Fits a probe on the training rows of `split`.
pub fn fit_probe(
    embeddings: &EmbeddingMatrix,
    dataset: &Dataset,
    split: &SplitIndices,
    policy: &LambdaPolicy,
) -> Result<(RidgeProbe, Option<FitReport>)> {
    let x = embeddings.rows_f64(&split.train_rows);
    let y = targets_matrix(&dataset.targets(&split.train_rows));
    let (probe, report) = fit_with_policy(x.view(), y.view(), policy)?;
    Ok((probe.with_provenance(&embeddings.model_id, embeddings.layer), report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOutput {
    pub by: GroupBy,
    /// Gini coefficient of the per-group mean squared errors; absent when
    /// every group has zero error.
    pub gini: Option<f64>,
    pub groups: Vec<GroupStats>,
}

pub fn bias_output(report: &EvalReport, dataset: &Dataset, by: GroupBy) -> Result<BiasOutput> {
    let groups = group_error_stats(report, dataset, by)?;
    let values: Vec<f64> = groups.iter().map(|g| g.mean_mse).collect();
    let gini = match gini(&values) {
        Ok(g) => Some(g),
        Err(Error::UndefinedGini) => None,
        Err(e) => return Err(e),
    };
    Ok(BiasOutput { by, gini, groups })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateOutput {
    pub location_level: Vec<CorrelationRow>,
    pub country_level: Vec<CorrelationRow>,
}

impl CorrelateOutput {
    pub fn rows(&self) -> Vec<CorrelationRow> {
        self.location_level
            .iter()
            .chain(&self.country_level)
            .cloned()
            .collect()
    }
}

pub fn correlate_output(report: &EvalReport, dataset: &Dataset, counts: Option<&CountTable>) -> Result<CorrelateOutput> {
    let location_level = correlate_covariates(report, dataset, counts)?
        .iter()
        .map(|o| o.to_row("location"))
        .collect();
    let country_level = counts
        .map(|c| {
            country_level_correlations(c, dataset)
                .iter()
                .map(|o| o.to_row("country"))
                .collect()
        })
        .unwrap_or_default();
    Ok(CorrelateOutput {
        location_level,
        country_level,
    })
}

/// One country name per line; blank lines are ignored.
pub fn read_patterns(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

/// Embedding files of a sweep directory, sorted by name.
pub fn embedding_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == EMBEDDING_EXTENSION) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no .{EMBEDDING_EXTENSION} files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn finish(mut manifest: RunManifest, outputs: &[&Path], started: Instant) -> Result<()> {
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let text = manifest.to_json()?;
    let mut written: Vec<PathBuf> = Vec::new();
    for out in outputs {
        let path = manifest_path(out);
        if !written.contains(&path) {
            write_file(&path, &text)?;
            written.push(path);
        }
    }
    Ok(())
}

/// Runs one subcommand, writing its outputs and a manifest beside each.
pub fn execute(command: Command) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Split {
            locations,
            test_frac,
            seed,
            out,
        } => {
            let mut m = RunManifest::new("split");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            m.input("locations", &locations)?;
            let split = make_split(ds.len(), test_frac, seed)?;
            write_file(&out, split.to_json()?)?;
            m.seed = Some(seed);
            m.param("test_frac", test_frac);
            m.param("test_rows", split.test_rows.len());
            finish(m, &[&out], started)
        }
        Command::Fit {
            embeddings,
            locations,
            split,
            lambda,
            out,
        } => {
            let mut m = RunManifest::new("fit");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let emb = load_embeddings_for(&embeddings, &ds)?;
            let sp = load_split_for(&split, &ds)?;
            for (role, p) in [("embeddings", &embeddings), ("locations", &locations), ("split", &split)] {
                m.input(role, p)?;
            }
            let policy = lambda_policy(&lambda, emb.cols)?;
            let (probe, report) = fit_probe(&emb, &ds, &sp, &policy)?;
            write_file(&out, probe.to_json()?)?;
            let mut outputs = vec![out.clone()];
            if let Some(r) = &report {
                let path = sibling(&out, "fit_report.json");
                write_file(&path, serde_json::to_string_pretty(r).map_err(json_err("fit report"))?)?;
                outputs.push(path);
                if r.condition_warning {
                    eprintln!("warning: the chosen λ needed extra jitter to factor; the fit may be ill-conditioned");
                }
            }
            m.seed = Some(sp.seed);
            m.param("chosen_lambda", probe.lambda);
            m.lambda_policy = Some(policy);
            let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
            finish(m, &refs, started)
        }
        Command::Eval {
            probe,
            embeddings,
            locations,
            split,
            out,
        } => {
            let mut m = RunManifest::new("eval");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let pr = in_file(&probe, RidgeProbe::load(&probe))?;
            let emb = load_embeddings_for(&embeddings, &ds)?;
            let sp = load_split_for(&split, &ds)?;
            for (role, p) in [
                ("probe", &probe),
                ("embeddings", &embeddings),
                ("locations", &locations),
                ("split", &split),
            ] {
                m.input(role, p)?;
            }
            let report = evaluate(&pr, &emb, &ds, &sp)?;
            write_file(&out, report.to_json()?)?;
            let csv = sibling(&out, "csv");
            write_file(&csv, report.to_csv()?)?;
            m.seed = Some(sp.seed);
            m.param("r2_mean", report.r2_mean);
            finish(m, &[&out, &csv], started)
        }
        Command::Bias {
            report,
            locations,
            by,
            out,
        } => {
            let mut m = RunManifest::new("bias");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let rep = load_report_for(&report, &ds)?;
            m.input("report", &report)?;
            m.input("locations", &locations)?;
            let result = bias_output(&rep, &ds, by)?;
            write_file(&out, serde_json::to_string_pretty(&result).map_err(json_err("bias"))?)?;
            let csv = sibling(&out, "csv");
            write_file(&csv, write_csv(&result.groups, "group stats")?)?;
            if result.gini.is_none() {
                eprintln!("warning: every group has zero error; the Gini coefficient is undefined");
            }
            m.param("by", by);
            finish(m, &[&out, &csv], started)
        }
        Command::Correlate {
            report,
            locations,
            counts,
            out,
        } => {
            let mut m = RunManifest::new("correlate");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let rep = load_report_for(&report, &ds)?;
            m.input("report", &report)?;
            m.input("locations", &locations)?;
            let table = match &counts {
                Some(p) => {
                    m.input("counts", p)?;
                    Some(in_file(p, CountTable::load_csv(p))?)
                }
                None => None,
            };
            let result = correlate_output(&rep, &ds, table.as_ref())?;
            write_file(&out, serde_json::to_string_pretty(&result).map_err(json_err("correlations"))?)?;
            let csv = sibling(&out, "csv");
            write_file(&csv, write_csv(&result.rows(), "correlations")?)?;
            finish(m, &[&out, &csv], started)
        }
        Command::Heatmap {
            report,
            locations,
            cell_deg,
            out_csv,
            out_svg,
        } => {
            let mut m = RunManifest::new("heatmap");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let rep = load_report_for(&report, &ds)?;
            m.input("report", &report)?;
            m.input("locations", &locations)?;
            let grid = grid_log_mse(&rep, &ds, cell_deg)?;
            let svg = emit_heatmap_svg(&grid)?;
            write_file(&out_csv, grid.to_csv()?)?;
            write_file(&out_svg, svg)?;
            m.param("cell_deg", cell_deg);
            finish(m, &[&out_csv, &out_svg], started)
        }
        Command::Count {
            patterns,
            corpus,
            plain,
            field,
            no_boundary,
            workers,
            out,
        } => {
            let mut m = RunManifest::new("count");
            let names = read_patterns(&patterns)?;
            let set = build_patterns(&names)?.with_boundary(!no_boundary);
            let format = if plain {
                CorpusFormat::Plain
            } else {
                CorpusFormat::Jsonl { field: field.clone() }
            };
            let workers = match workers {
                Some(0) => return Err(Error::invalid("--workers must be at least 1")),
                Some(w) => w,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            m.input("patterns", &patterns)?;
            for shard in list_shards(&corpus, &format)? {
                m.input("corpus", &shard)?;
            }
            let opts = ScanOptions { format, workers };
            let table = count_corpus(&set, &corpus, &opts)?;
            write_file(&out, table.to_csv()?)?;
            let summary = sibling(&out, "summary.json");
            write_file(
                &summary,
                serde_json::to_string_pretty(&table.summary()).map_err(json_err("count summary"))?,
            )?;
            if table.docs_skipped > 0 {
                eprintln!(
                    "warning: skipped {} records without a usable {field:?} field",
                    table.docs_skipped
                );
            }
            m.param("plain", plain);
            m.param("field", field);
            m.param("boundary", !no_boundary);
            m.param("workers", workers);
            finish(m, &[&out, &summary], started)
        }
        Command::Sweep {
            embeddings_dir,
            locations,
            split,
            lambda,
            out,
        } => {
            let mut m = RunManifest::new("sweep");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let sp = load_split_for(&split, &ds)?;
            let files = embedding_files(&embeddings_dir)?;
            m.input("locations", &locations)?;
            m.input("split", &split)?;
            for f in &files {
                m.input("embeddings", f)?;
            }
            let dim = in_file(&files[0], read_embeddings(&files[0]))?.cols;
            let policy = lambda_policy(&lambda, dim)?;
            let summary = layer_sweep(&files, &ds, &sp, &policy)?;
            write_file(&out, serde_json::to_string_pretty(&summary).map_err(json_err("sweep"))?)?;
            let csv = sibling(&out, "csv");
            write_file(&csv, write_csv(&summary.layers, "sweep")?)?;
            m.seed = Some(sp.seed);
            m.lambda_policy = Some(policy);
            finish(m, &[&out, &csv], started)
        }
        Command::Map {
            report,
            locations,
            out,
        } => {
            let mut m = RunManifest::new("map");
            let ds = in_file(&locations, Dataset::load(&locations))?;
            let rep = load_report_for(&report, &ds)?;
            m.input("report", &report)?;
            m.input("locations", &locations)?;
            write_file(&out, emit_scatter_map(&rep, &ds)?)?;
            finish(m, &[&out], started)
        }
        Command::Synth {
            n,
            d,
            sigma,
            seed,
            skew,
            out_dir,
        } => {
            let mut m = RunManifest::new("synth");
            let s = gen_synthetic(n, d, sigma, seed, skew)?;
            let locations = out_dir.join("locations.csv");
            let embeddings = out_dir.join(format!("embeddings.{EMBEDDING_EXTENSION}"));
            write_file(&locations, &s.csv)?;
            write_embeddings(&s.embeddings, &embeddings)?;
            m.seed = Some(seed);
            m.param("n", n);
            m.param("d", d);
            m.param("sigma", sigma);
            m.param("skew", skew);
            finish(m, &[&locations, &embeddings], started)
        }
    }
}

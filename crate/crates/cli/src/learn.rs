use std::path::{Path, PathBuf};

use anthropometer_experiment::run::{baseline_fold, build_report, evaluate_fold, run_experiment};
use anthropometer_experiment::{sha256_hex, Dataset, FoldSplit, MetricsReport, ResultsTensor};
use anthropometer_neural::{checkpoint, NetworkParams, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{check_out_dir, io_err, pretty, provenance, read, require_file, write, CliError, RunConfig};

#[derive(Serialize, Deserialize)]
struct SplitDoc {
    provenance: Value,
    split: FoldSplit,
}

/// Epoch timings stay on stderr so that reruns write identical bytes.
#[derive(Serialize, Deserialize)]
struct HistoryDoc {
    provenance: Value,
    losses: Vec<Vec<f64>>,
}

fn checkpoint_path(run: &Path, fold: usize) -> PathBuf {
    run.join(format!("fold_{fold}.ckpt"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| io_err(path, e))
}

fn write_report(out: &Path, report: &MetricsReport) -> Result<(), CliError> {
    write(&out.join("report.json"), report.to_json() + "\n")?;
    let table = report.to_table();
    write(&out.join("report.txt"), format!("# provenance: {}\n{table}", report.provenance))?;
    print!("{table}");
    Ok(())
}

pub fn train(cfg: &RunConfig, manifest: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    require_file(manifest)?;
    check_out_dir(out, force)?;
    let data = Dataset::load(manifest)?;
    let ecfg = cfg.experiment();
    let prov = provenance("train", serde_json::to_value(&ecfg).unwrap(), cfg.seed, &data.hash());
    let output = run_experiment(&data, &ecfg, |fold, s| {
        eprintln!("fold {fold} epoch {:>3} loss {:.6} ({:.1} s)", s.epoch, s.mean_loss, s.seconds)
    })?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    for (j, params) in output.models.iter().enumerate() {
        let meta = json!({ "provenance": prov, "fold": j, "train_config": ecfg.fold_train_config(j) });
        checkpoint::save(params, meta, &checkpoint_path(out, j))?;
    }
    let split = SplitDoc {
        provenance: prov.clone(),
        split: output.split,
    };
    write(&out.join("split.json"), pretty(&split))?;
    let history = HistoryDoc {
        provenance: prov.clone(),
        losses: output.histories.iter().map(|h| h.iter().map(|e| e.mean_loss).collect()).collect(),
    };
    write(&out.join("history.json"), pretty(&history))?;
    output.results.save(&out.join("results.bin"), prov.clone())?;
    output.baseline.save(&out.join("baseline.bin"), prov.clone())?;
    let mut report = output.report;
    report.provenance = prov;
    write_report(out, &report)
}

pub fn eval(manifest: &Path, run: &Path, out: &Path) -> Result<(), CliError> {
    require_file(manifest)?;
    let doc: SplitDoc = read_json(&run.join("split.json"))?;
    let data = Dataset::load(manifest)?;
    doc.split.validate(data.len())?;
    if doc.provenance["input_sha256"].as_str() != Some(data.hash().as_str()) {
        eprintln!("note: the dataset differs from the one the run was trained on");
    }
    let (mut results, mut baseline, mut hashes) = (vec![], vec![], vec![]);
    for (j, fold) in doc.split.folds.iter().enumerate() {
        let path = checkpoint_path(run, j);
        if !path.is_file() {
            return Err(CliError::Data(format!("missing checkpoint for fold {j}: {}", path.display())));
        }
        hashes.push(sha256_hex(&read(&path)?));
        let (params, meta): (NetworkParams<f32>, Value) = checkpoint::load(&path)?;
        let tc: TrainConfig = serde_json::from_value(meta["train_config"].clone())
            .map_err(|e| io_err(&path, format!("train_config metadata: {e}")))?;
        results.push(evaluate_fold(&params, &data, fold, &tc)?);
        baseline.push(baseline_fold(&data, fold));
    }
    let seed = doc.provenance["seed"].as_u64().unwrap_or(0);
    let mut prov = provenance("eval", doc.provenance["config"].clone(), seed, &data.hash());
    prov["checkpoints_sha256"] = json!(hashes);
    let results = ResultsTensor::new(results)?;
    let baseline = ResultsTensor::new(baseline)?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    results.save(&out.join("results.bin"), prov.clone())?;
    baseline.save(&out.join("baseline.bin"), prov)?;
    let amad = anthropometer_experiment::report::Metrics::from_results(&results)?.amad_mm;
    println!("evaluated {} folds, AMAD {amad:.2} mm", doc.split.folds.len());
    Ok(())
}

pub fn report(run: &Path, out: &Path) -> Result<(), CliError> {
    let (results, prov) = ResultsTensor::load(&run.join("results.bin"))?;
    let (baseline, _) = ResultsTensor::load(&run.join("baseline.bin"))?;
    let doc: SplitDoc = read_json(&run.join("split.json"))?;
    let history = run.join("history.json");
    let losses = if history.is_file() {
        read_json::<HistoryDoc>(&history)?.losses
    } else {
        vec![vec![]; doc.split.folds.len()]
    };
    let report = build_report(&results, &baseline, &doc.split, &losses, prov)?;
    write_report(out, &report)
}

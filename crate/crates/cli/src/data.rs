use std::path::Path;

use anthropometer_core::anthropometry::{measure_all, measurements_csv, MeasurementRecord};
use anthropometer_core::dataset::{Manifest, SubjectRecord};
use anthropometer_core::mesh::{parse_obj, JointSet};
use anthropometer_core::raster::render_orthographic;
use anthropometer_core::synth::generate_population;
use anthropometer_experiment::sha256_hex;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{check_out_dir, pretty, provenance, read, require_file, write, CliError, RunConfig};

pub fn synth(cfg: &RunConfig, n: usize, out: &Path, force: bool) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    check_out_dir(out, force)?;
    let config = json!({ "n": n, "population": cfg.population });
    let input = sha256_hex(serde_json::to_string(&json!({ "config": config, "seed": cfg.seed })).unwrap().as_bytes());
    let prov = provenance("synth", config, cfg.seed, &input);
    let pop = generate_population(n, cfg.seed, &cfg.population).map_err(|e| CliError::Data(e.to_string()))?;
    let header = format!("# provenance: {prov}\n");
    pop.members.par_iter().try_for_each(|m| {
        write(&out.join(&m.record.mesh), header.clone() + &m.body.mesh.to_obj_string())?;
        write(&out.join(&m.record.joints), m.body.joints.to_json() + "\n")?;
        if let Some(gt) = &m.record.ground_truth {
            let doc = json!({
                "id": m.record.id,
                "ground_truth": m.body.ground_truth,
                "params": m.params,
                "provenance": prov,
            });
            write(&out.join(gt), pretty(&doc))?;
        }
        Ok::<_, CliError>(())
    })?;
    let mut manifest = pop.manifest();
    manifest.provenance = Some(prov);
    write(&out.join("manifest.json"), manifest.to_json() + "\n")?;
    println!("{} meshes of {n} subjects in {}", pop.members.len(), out.display());
    Ok(())
}

struct Loaded {
    root: std::path::PathBuf,
    manifest: Manifest,
    sha256: String,
}

fn load_manifest(path: &Path) -> Result<Loaded, CliError> {
    require_file(path)?;
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| crate::io_err(path, e))?;
    let manifest = Manifest::from_json(&text).map_err(|e| crate::io_err(path, e))?;
    Ok(Loaded {
        root: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        manifest,
        sha256: sha256_hex(&bytes),
    })
}

/// Applies `f` to every record in parallel. Failures are reported on stderr,
/// listed in the returned index and turn into a partial-failure error once
/// the index is written.
fn per_record<T: Send>(
    records: &[SubjectRecord],
    f: impl Fn(&SubjectRecord) -> Result<T, String> + Sync,
) -> (Vec<(usize, T)>, Vec<Value>) {
    let outcomes: Vec<_> = records.par_iter().map(&f).collect();
    let (mut done, mut failed) = (vec![], vec![]);
    for (i, (r, o)) in records.iter().zip(outcomes).enumerate() {
        match o {
            Ok(v) => done.push((i, v)),
            Err(e) => {
                eprintln!("{}: {e}", r.id);
                failed.push(json!({ "id": r.id, "error": e }));
            }
        }
    }
    (done, failed)
}

fn finish(total: usize, failed: usize) -> Result<(), CliError> {
    match failed {
        0 => Ok(()),
        f if f == total => Err(CliError::Data(format!("all {total} records failed"))),
        f => Err(CliError::Partial { failed: f, total }),
    }
}

fn remove_stale(path: &Path) {
    let _ = std::fs::remove_file(path);
}

pub fn measure(cfg: &RunConfig, manifest_path: &Path) -> Result<(), CliError> {
    let m = load_manifest(manifest_path)?;
    let seed = m.manifest.seed.unwrap_or(cfg.seed);
    let config = serde_json::to_value(&cfg.measure).unwrap();
    let records = &m.manifest.records;
    let (done, failed) = per_record(records, |r| {
        let out = m.root.join(r.measurement_path());
        let result = (|| {
            let mesh_bytes = std::fs::read(m.root.join(&r.mesh)).map_err(|e| format!("{}: {e}", r.mesh.display()))?;
            let joint_bytes = std::fs::read(m.root.join(&r.joints)).map_err(|e| format!("{}: {e}", r.joints.display()))?;
            let mesh = parse_obj(&String::from_utf8_lossy(&mesh_bytes)).map_err(|e| format!("{}: {e}", r.mesh.display()))?;
            let joints =
                JointSet::from_json(&String::from_utf8_lossy(&joint_bytes)).map_err(|e| format!("{}: {e}", r.joints.display()))?;
            let hbd = measure_all(&mesh, &joints, &cfg.measure).map_err(|e| e.to_string())?;
            let input = sha256_hex(&[mesh_bytes, joint_bytes].concat());
            let rec = MeasurementRecord {
                id: r.id.clone(),
                pose: r.pose,
                gender: r.gender,
                hbd,
                provenance: Some(provenance("measure", config.clone(), seed, &input)),
            };
            write(&out, pretty(&rec)).map_err(|e| e.to_string())?;
            Ok(rec)
        })();
        if result.is_err() {
            remove_stale(&out);
        }
        result
    });
    let csv = measurements_csv(done.iter().map(|(i, rec)| (records[*i].subject.as_str(), rec)));
    let csv_path = m.root.join("measurements.csv");
    write(&csv_path, &csv)?;
    let index = json!({
        "provenance": provenance("measure", config, seed, &m.sha256),
        "measured": done.len(),
        "csv_sha256": sha256_hex(csv.as_bytes()),
        "failures": failed,
    });
    write(&m.root.join("measurements").join("index.json"), pretty(&index))?;
    println!("measured {} of {} records", done.len(), records.len());
    finish(records.len(), failed.len())
}

pub fn render(cfg: &RunConfig, manifest_path: &Path) -> Result<(), CliError> {
    let m = load_manifest(manifest_path)?;
    let seed = m.manifest.seed.unwrap_or(cfg.seed);
    let config = serde_json::to_value(&cfg.camera).unwrap();
    let records = &m.manifest.records;
    let (done, failed) = per_record(records, |r| {
        let out = m.root.join(r.image_path());
        let result = (|| {
            let mesh_bytes = std::fs::read(m.root.join(&r.mesh)).map_err(|e| format!("{}: {e}", r.mesh.display()))?;
            let mesh = parse_obj(&String::from_utf8_lossy(&mesh_bytes)).map_err(|e| format!("{}: {e}", r.mesh.display()))?;
            let img = render_orthographic(&mesh, &cfg.camera).map_err(|e| e.to_string())?;
            let prov = provenance("render", config.clone(), seed, &sha256_hex(&mesh_bytes));
            let mut bytes = format!("P5\n# provenance: {prov}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
            bytes.extend_from_slice(img.pixels());
            write(&out, &bytes).map_err(|e| e.to_string())?;
            Ok(sha256_hex(&bytes))
        })();
        if result.is_err() {
            remove_stale(&out);
        }
        result
    });
    let images: serde_json::Map<String, Value> =
        done.into_iter().map(|(i, sha)| (records[i].id.clone(), Value::String(sha))).collect();
    let index = json!({
        "provenance": provenance("render", config, seed, &m.sha256),
        "rendered": images.len(),
        "images_sha256": images,
        "failures": failed,
    });
    write(&m.root.join("images").join("index.json"), pretty(&index))?;
    println!("rendered {} of {} records", images.len(), records.len());
    finish(records.len(), failed.len())
}

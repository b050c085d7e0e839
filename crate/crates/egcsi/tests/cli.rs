//! End-to-end CLI runs against the built `egcsi` binary.

use std::path::Path;
use std::process::Command;

fn egcsi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_egcsi"))
}

fn write_gen_config(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join("gen.toml");
    std::fs::write(
        &path,
        format!(
            r#"
samples = 30

[geometry]
n_h = 8
n_v = 4
n_c = 32
bandwidth_hz = 10e6

[environment]
id = "cli-env"
cluster_count_range = [1, 3]
aaod_sector_rad = [-1.0, -0.2]
eaod_sector_rad = [1.047, 2.094]
delay_range_s = [0.0, 6e-7]
aod_spread_rad = 0.0873
delay_spread_s = 4.7e-9
paths_per_cluster = 8
power_decay_db_per_cluster = 3.0
seed = {seed}
"#
        ),
    )
    .unwrap();
    path
}

#[test]
fn gen_decouple_align_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_gen_config(dir.path(), 77);
    let data = dir.path().join("data.csit");

    let out = egcsi()
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "gen failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, samples) = egcsi::harness::read_csit(&data).unwrap();
    assert_eq!(samples.len(), 30);
    assert!(header.has_paths);

    let out = egcsi()
        .args(["decouple", "--in"])
        .arg(&data)
        .args(["--eta", "0.99", "--rmax", "8"])
        .arg("--out")
        .arg(dir.path().join("ranks.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean NMDE"), "missing NMDE line: {stdout}");
    let ranks = std::fs::read_to_string(dir.path().join("ranks.csv")).unwrap();
    assert_eq!(ranks.lines().count(), 31);

    let aligned = dir.path().join("aligned.csit");
    let meta = dir.path().join("meta.csv");
    let out = egcsi()
        .args(["align", "--in"])
        .arg(&data)
        .arg("--out")
        .arg(&aligned)
        .arg("--meta-out")
        .arg(&meta)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "align failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (aheader, aclusters) = egcsi::harness::read_csit(&aligned).unwrap();
    assert!(!aheader.has_paths);
    assert!(aclusters.len() >= samples.len());
    let meta_csv = std::fs::read_to_string(&meta).unwrap();
    assert_eq!(meta_csv.lines().count(), aclusters.len() + 1);
}

#[test]
fn gen_respects_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_a = write_gen_config(dir.path(), 1);
    let cfg_b = write_gen_config(dir.path(), 2);
    // Different config seeds, same override: identical datasets.
    for (cfg, out) in [(&cfg_a, "a.csit"), (&cfg_b, "b.csit")] {
        let status = egcsi()
            .env("EGCSI_SEED", "424242")
            .args(["gen", "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("a.csit")).unwrap();
    let b = std::fs::read(dir.path().join("b.csit")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn train_eval_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.egnn");
    let loss = dir.path().join("loss.csv");
    let train_cfg = dir.path().join("train.toml");
    std::fs::write(
        &train_cfg,
        format!(
            r#"
samples_per_env = 40
out_model = "{}"
out_loss_csv = "{}"

[geometry]
n_h = 4
n_v = 2
n_c = 16
bandwidth_hz = 10e6

[[envs]]
id = "t1"
cluster_count_range = [1, 2]
aaod_sector_rad = [-1.0, 0.0]
eaod_sector_rad = [1.047, 2.094]
delay_range_s = [0.0, 6e-7]
aod_spread_rad = 0.0873
delay_spread_s = 4.7e-9
paths_per_cluster = 6
power_decay_db_per_cluster = 3.0
seed = 9

[compressor]
codeword_dim = 8
hidden_dim = 32

[training]
learning_rate = 1e-3
batch_size = 8
epochs = 4
seed = 2

[pipeline]
eta = 0.99
r_max = 4
"#,
            model.display(),
            loss.display()
        ),
    )
    .unwrap();

    let out = egcsi()
        .args(["train", "--variant", "eg-csinet", "--config"])
        .arg(&train_cfg)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(model.exists());
    let loss_csv = std::fs::read_to_string(&loss).unwrap();
    assert_eq!(loss_csv.lines().count(), 5, "epoch rows: {loss_csv}");

    // Dataset matching the train geometry for eval.
    let gen_cfg = dir.path().join("gen-small.toml");
    std::fs::write(
        &gen_cfg,
        r#"
samples = 20

[geometry]
n_h = 4
n_v = 2
n_c = 16
bandwidth_hz = 10e6

[environment]
id = "t2"
cluster_count_range = [1, 2]
aaod_sector_rad = [-1.0, 0.0]
eaod_sector_rad = [1.047, 2.094]
delay_range_s = [0.0, 6e-7]
aod_spread_rad = 0.0873
delay_spread_s = 4.7e-9
paths_per_cluster = 6
power_decay_db_per_cluster = 3.0
seed = 10
"#,
    )
    .unwrap();
    let data = dir.path().join("small.csit");
    assert!(egcsi()
        .args(["gen", "--config"])
        .arg(&gen_cfg)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap()
        .success());

    let report_dir = dir.path().join("report");
    let out = egcsi()
        .args(["eval", "--variant", "eg-csinet", "--model"])
        .arg(&model)
        .arg("--in")
        .arg(&data)
        .arg("--config")
        .arg(&train_cfg)
        .arg("--out")
        .arg(&report_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "eval failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(report_dir.join("report.csv").exists());
    assert!(report_dir.join("report.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean NMSE"));

    // Noise sweep through the CLI.
    let sweep_cfg = dir.path().join("sweep.toml");
    let sweep_dir = dir.path().join("sweep-out");
    std::fs::write(
        &sweep_cfg,
        format!(
            r#"
samples = 10
snr_db = [0.0, 10.0]
seed = 5
output_dir = "{}"

[geometry]
n_h = 4
n_v = 2
n_c = 16
bandwidth_hz = 10e6

[environment]
id = "s"
cluster_count_range = [1, 2]
aaod_sector_rad = [-1.0, 0.0]
eaod_sector_rad = [1.047, 2.094]
delay_range_s = [0.0, 6e-7]
aod_spread_rad = 0.0873
delay_spread_s = 4.7e-9
paths_per_cluster = 6
power_decay_db_per_cluster = 3.0
seed = 11

[pipeline]
r_max = 4
"#,
            sweep_dir.display()
        ),
    )
    .unwrap();
    assert!(egcsi()
        .args(["sweep", "--kind", "noise", "--config"])
        .arg(&sweep_cfg)
        .status()
        .unwrap()
        .success());
    assert!(sweep_dir.join("noise_sweep.csv").exists());

    // report aggregates whatever CSVs are present.
    let out = egcsi()
        .args(["report", "--dir"])
        .arg(&sweep_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("noise_sweep.csv"));
}

#[test]
fn failure_paths_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.csit");
    std::fs::write(&bogus, b"not a csit file").unwrap();
    let out = egcsi()
        .args(["decouple", "--in"])
        .arg(&bogus)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("csit"));

    // eval without --model for an MLP variant.
    let out = egcsi()
        .args(["eval", "--variant", "vanilla-ae", "--in"])
        .arg(&bogus)
        .arg("--config")
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}

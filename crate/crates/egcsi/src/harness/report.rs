//! Deterministic report writers: one CSV per figure analog plus a JSON
//! manifest. Everything except the manifest's `generated_at` field is
//! byte-for-byte reproducible for fixed seeds.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::harness::bench::{GeneralizationReport, W1Matrix};
use crate::harness::config::ExperimentConfig;
use crate::harness::sweep::{NoiseSweepReport, OverheadSweepReport};
use crate::metrics::DbValue;

fn db_cell(v: &DbValue) -> String {
    v.db.map(|d| format!("{d}")).unwrap_or_default()
}

pub fn generalization_csv(rep: &GeneralizationReport) -> String {
    let mut out = String::from(
        "variant,env_id,train_env,mean_nmse_linear,mean_nmse_db,mean_bits,mean_r_hat,samples\n",
    );
    for r in &rep.results {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.variant,
            r.env_id,
            r.train_env,
            r.mean_nmse.linear,
            db_cell(&r.mean_nmse),
            r.mean_bits,
            r.mean_r_hat,
            r.samples
        )
        .unwrap();
    }
    out
}

pub fn w1_csv(m: &W1Matrix) -> String {
    let mut out = String::from("env_id");
    for id in &m.env_ids {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for (i, row) in m.values.iter().enumerate() {
        write!(out, "{}", m.env_ids[i]).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn loss_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in trace.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l).unwrap();
    }
    out
}

pub fn noise_sweep_csv(rep: &NoiseSweepReport) -> String {
    let mut out = String::from(
        "snr_db,mean_r_mdl,mean_r_threshold,mean_r_hybrid,nmde_mdl_db,nmde_threshold_db,nmde_hybrid_db,nmse_db\n",
    );
    for p in &rep.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.snr_db,
            p.mean_r_mdl,
            p.mean_r_threshold,
            p.mean_r_hybrid,
            db_cell(&p.mean_nmde_mdl),
            db_cell(&p.mean_nmde_threshold),
            db_cell(&p.mean_nmde_hybrid),
            db_cell(&p.mean_nmse)
        )
        .unwrap();
    }
    out
}

pub fn overhead_sweep_csv(rep: &OverheadSweepReport) -> String {
    let mut out =
        String::from("m,mean_bits,mean_r_hat,mean_nmse_db,dim_ratio,ratio_exceeds_mean_r\n");
    for p in &rep.points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.m,
            p.mean_bits,
            p.mean_r_hat,
            db_cell(&p.mean_nmse),
            p.dim_ratio,
            p.ratio_exceeds_mean_r
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    generated_at: Option<String>,
    config: &'a ExperimentConfig,
    matched_codeword_dims: &'a std::collections::BTreeMap<String, usize>,
    mean_r_hat_train: f64,
}

/// Write the full benchmark report bundle into `dir`.
pub fn write_generalization_report(
    dir: &Path,
    cfg: &ExperimentConfig,
    rep: &GeneralizationReport,
    generated_at: Option<String>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("generalization.csv"), generalization_csv(rep))?;
    std::fs::write(dir.join("w1_raw.csv"), w1_csv(&rep.w1_raw))?;
    std::fs::write(dir.join("w1_aligned.csv"), w1_csv(&rep.w1_aligned))?;
    for (variant, trace) in &rep.train_loss {
        std::fs::write(dir.join(format!("loss_{variant}.csv")), loss_csv(trace))?;
    }
    let manifest = Manifest {
        generated_at,
        config: cfg,
        matched_codeword_dims: &rep.matched_codeword_dims,
        mean_r_hat_train: rep.mean_r_hat_train,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}

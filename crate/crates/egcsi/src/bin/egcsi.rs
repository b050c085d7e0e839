//! Command-line front end for dataset generation, decoupling diagnostics,
//! alignment, training, evaluation, sweeps, and report aggregation.
//!
//! Exit code 0 on success; on failure the error is printed with its pipeline
//! stage tag and the exit code is nonzero. Setting `EGCSI_SEED` overrides
//! every seed read from config files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use egcsi::align::Aligner;
use egcsi::channel::{sample_environment, ChannelSample};
use egcsi::codec::{
    train_autoencoder, Codec, CompressorSpec, CompressorVariant, MlpAutoencoder, TruncationCodec,
};
use egcsi::decouple::estimate_rank_hybrid;
use egcsi::error::{Error, Result};
use egcsi::harness::report;
use egcsi::harness::{
    self, load_toml, read_csit, run_generalization_benchmark, run_noise_sweep, run_overhead_sweep,
    seed_override, write_csit, GenConfig, Pipeline, PipelineVariant, SweepFileConfig,
    TrainFileConfig, VariantKind,
};
use egcsi::metrics::{MetricReport, SampleMetrics};

#[derive(Parser)]
#[command(
    name = "egcsi",
    version,
    about = "Cluster-decoupled, alignment-based CSI feedback pipeline",
    after_help = "Environment: EGCSI_SEED=<u64> overrides all seeds in config files."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Noise,
    Overhead,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset into a .csit file.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decoupling diagnostics (rank histogram, NMDE stats) for a dataset.
    Decouple {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        eta: f64,
        #[arg(long, default_value_t = 8)]
        rmax: usize,
        /// Bandwidth in Hz (the .csit header has no bandwidth field).
        #[arg(long, default_value_t = 10e6)]
        bandwidth_hz: f64,
        /// Optional per-sample CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decouple + align a dataset; writes aligned clusters and metadata.
    Align {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Metadata CSV (sample, cluster, n1, n2, m, t).
        #[arg(long)]
        meta_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.99)]
        eta: f64,
        #[arg(long, default_value_t = 8)]
        rmax: usize,
        #[arg(long, default_value_t = 10e6)]
        bandwidth_hz: f64,
    },
    /// Train a variant's compressor per a TOML config.
    Train {
        #[arg(long)]
        variant: VariantKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a variant on a dataset; writes a metric report.
    Eval {
        #[arg(long)]
        variant: VariantKind,
        /// Trained model file (required for MLP-backed variants).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Train-style config supplying geometry and pipeline parameters.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.csv / report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noise or overhead sweep per a TOML config.
    Sweep {
        #[arg(long)]
        kind: SweepKind,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the full generalization benchmark per a TOML config.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize report CSVs found in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("egcsi: error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { config, out } => cmd_gen(&config, &out),
        Cmd::Decouple {
            input,
            eta,
            rmax,
            bandwidth_hz,
            out,
        } => cmd_decouple(&input, eta, rmax, bandwidth_hz, out.as_deref()),
        Cmd::Align {
            input,
            out,
            meta_out,
            eta,
            rmax,
            bandwidth_hz,
        } => cmd_align(&input, &out, meta_out.as_deref(), eta, rmax, bandwidth_hz),
        Cmd::Train { variant, config } => cmd_train(variant, &config),
        Cmd::Eval {
            variant,
            model,
            input,
            config,
            out,
        } => cmd_eval(variant, model.as_deref(), &input, &config, out.as_deref()),
        Cmd::Sweep { kind, config } => cmd_sweep(kind, &config),
        Cmd::Benchmark { config } => cmd_benchmark(&config),
        Cmd::Report { dir } => cmd_report(&dir),
    }
}

fn cmd_gen(config: &Path, out: &Path) -> Result<()> {
    let mut cfg: GenConfig = load_toml(config)?;
    if let Some(seed) = seed_override() {
        cfg.environment.seed = seed;
    }
    let geom = cfg.geometry.build()?;
    let mut samples = sample_environment(&cfg.environment, cfg.samples, &geom)?;
    if !cfg.write_paths {
        for s in &mut samples {
            s.paths = None;
        }
    }
    write_csit(out, geom.n_h(), geom.n_v(), geom.n_c(), &samples)?;
    println!(
        "wrote {} samples ({}x{} antennas, {} subcarriers, env '{}') to {}",
        samples.len(),
        geom.n_h(),
        geom.n_v(),
        geom.n_c(),
        cfg.environment.id,
        out.display()
    );
    Ok(())
}

fn load_dataset(
    input: &Path,
    bandwidth_hz: f64,
) -> Result<(egcsi::channel::ArrayGeometry, Vec<ChannelSample>)> {
    let (header, samples) = read_csit(input)?;
    let geom = egcsi::channel::ArrayGeometry::new(
        header.n_h as usize,
        header.n_v as usize,
        header.n_c as usize,
        bandwidth_hz,
    )?;
    Ok((geom, samples))
}

fn cmd_decouple(
    input: &Path,
    eta: f64,
    rmax: usize,
    bandwidth_hz: f64,
    out: Option<&Path>,
) -> Result<()> {
    let (geom, samples) = load_dataset(input, bandwidth_hz)?;
    let mut hist = vec![0usize; rmax + 1];
    let mut nmde_acc = 0.0;
    let mut csv = String::from("index,r_mdl,r_threshold,r_final,nmde_linear,nmde_db\n");
    for (i, s) in samples.iter().enumerate() {
        let est = estimate_rank_hybrid(&s.h, eta, rmax).map_err(|e| e.in_stage("decouple"))?;
        let clusters =
            egcsi::decouple::svd_decouple(&s.h, est.r_final).map_err(|e| e.in_stage("decouple"))?;
        let nmde = egcsi::metrics::nmde(&s.h, &clusters).map_err(|e| e.in_stage("metrics"))?;
        hist[est.r_final] += 1;
        nmde_acc += nmde.linear;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i,
            est.r_mdl,
            est.r_threshold,
            est.r_final,
            nmde.linear,
            nmde.db.map(|d| d.to_string()).unwrap_or_default()
        ));
    }
    let n = samples.len().max(1) as f64;
    println!("samples: {}", samples.len());
    println!(
        "geometry: {}x{} antennas, {} subcarriers",
        geom.n_h(),
        geom.n_v(),
        geom.n_c()
    );
    for (r, count) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
        println!("  r_hat = {r}: {count}");
    }
    let mean_nmde = egcsi::metrics::DbValue::from_linear(nmde_acc / n);
    match mean_nmde.db {
        Some(db) => println!("mean NMDE: {db:.2} dB"),
        None => println!("mean NMDE: -inf (exact truncations)"),
    }
    if let Some(path) = out {
        std::fs::write(path, csv)?;
        println!("per-sample CSV: {}", path.display());
    }
    Ok(())
}

fn cmd_align(
    input: &Path,
    out: &Path,
    meta_out: Option<&Path>,
    eta: f64,
    rmax: usize,
    bandwidth_hz: f64,
) -> Result<()> {
    let (geom, samples) = load_dataset(input, bandwidth_hz)?;
    let aligner = Aligner::new(&geom, &Default::default())?;
    let mut aligned_samples = Vec::new();
    let mut meta_csv = String::from("sample,cluster,n1,n2,m,t\n");
    for (i, s) in samples.iter().enumerate() {
        let est = estimate_rank_hybrid(&s.h, eta, rmax).map_err(|e| e.in_stage("decouple"))?;
        let clusters =
            egcsi::decouple::svd_decouple(&s.h, est.r_final).map_err(|e| e.in_stage("decouple"))?;
        for (l, c) in clusters.iter().enumerate() {
            let a = aligner
                .align(&c.matrix())
                .map_err(|e| e.in_stage("align"))?;
            meta_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i, l, a.meta.n1, a.meta.n2, a.meta.m, a.meta.t
            ));
            aligned_samples.push(ChannelSample {
                h: a.c_aln,
                env_id: s.env_id.clone(),
                paths: None,
            });
        }
    }
    write_csit(out, geom.n_h(), geom.n_v(), geom.n_c(), &aligned_samples)?;
    println!(
        "aligned {} clusters from {} samples -> {}",
        aligned_samples.len(),
        samples.len(),
        out.display()
    );
    if let Some(path) = meta_out {
        std::fs::write(path, meta_csv)?;
        println!("metadata CSV: {}", path.display());
    }
    Ok(())
}

fn cmd_train(variant: VariantKind, config: &Path) -> Result<()> {
    let mut cfg: TrainFileConfig = load_toml(config)?;
    if let Some(seed) = seed_override() {
        cfg.training.seed = seed;
        for (i, e) in cfg.envs.iter_mut().enumerate() {
            e.seed = seed.wrapping_add(1 + i as u64);
        }
    }
    if variant == VariantKind::TruncationBaseline {
        return Err(Error::InvalidConfig(
            "truncation-baseline is learning-free; nothing to train".into(),
        ));
    }
    let geom = cfg.geometry.build()?;
    let mut samples = Vec::new();
    for env in &cfg.envs {
        samples.extend(sample_environment(env, cfg.samples_per_env, &geom)?);
    }
    let training_set = harness::build_training_set(
        variant,
        &samples,
        &geom,
        &cfg.pipeline.codebook,
        cfg.pipeline.eta,
        cfg.pipeline.r_max,
    )?;
    let spec = CompressorSpec {
        n_t: geom.n_t(),
        n_c: geom.n_c(),
        codeword_dim: cfg.compressor.codeword_dim,
        hidden_dim: cfg.compressor.hidden_dim,
        variant: CompressorVariant::ReferenceMlp,
        seed: cfg.training.seed,
    };
    let coding = cfg.pipeline.coding()?;
    let quant = match &coding {
        egcsi::codec::CodewordCoding::Quantized(q) => Some(q),
        egcsi::codec::CodewordCoding::Raw => None,
    };
    let (model, trace) = train_autoencoder(&training_set, &spec, quant, &cfg.training.build())
        .map_err(|e| e.in_stage("train"))?;
    model.save(&cfg.out_model)?;
    println!(
        "trained {} on {} inputs for {} epochs; final loss {:.6e}; model -> {}",
        variant.as_str(),
        training_set.len(),
        cfg.training.epochs,
        trace.last().copied().unwrap_or(f64::NAN),
        cfg.out_model.display()
    );
    if let Some(path) = &cfg.out_loss_csv {
        std::fs::write(path, report::loss_csv(&trace))?;
        println!("loss trace -> {}", path.display());
    }
    Ok(())
}

fn cmd_eval(
    variant: VariantKind,
    model: Option<&Path>,
    input: &Path,
    config: &Path,
    out: Option<&Path>,
) -> Result<()> {
    let cfg: TrainFileConfig = load_toml(config)?;
    let geom = cfg.geometry.build()?;
    let (header, samples) = read_csit(input)?;
    if (
        header.n_h as usize,
        header.n_v as usize,
        header.n_c as usize,
    ) != (geom.n_h(), geom.n_v(), geom.n_c())
    {
        return Err(Error::InvalidConfig(format!(
            "dataset geometry {}x{}x{} does not match config {}x{}x{}",
            header.n_h,
            header.n_v,
            header.n_c,
            geom.n_h(),
            geom.n_v(),
            geom.n_c()
        )));
    }
    let codec = match (variant, model) {
        (VariantKind::TruncationBaseline, _) => Codec::Truncation(TruncationCodec::new(
            geom.n_t(),
            geom.n_c(),
            cfg.compressor.codeword_dim.next_multiple_of(2),
        )?),
        (_, Some(path)) => Codec::Mlp(MlpAutoencoder::load(path)?),
        (_, None) => {
            return Err(Error::InvalidConfig(format!(
                "variant {} needs --model",
                variant.as_str()
            )))
        }
    };
    let pipeline = Pipeline::new(
        PipelineVariant {
            kind: variant,
            codebook: cfg.pipeline.codebook,
            coding: cfg.pipeline.coding()?,
            eta: cfg.pipeline.eta,
            r_max: cfg.pipeline.r_max,
        },
        &geom,
        codec,
    )?;
    let mut rows = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let run = pipeline.run(s)?;
        rows.push(SampleMetrics {
            index: i,
            r_hat: run.record.r_hat,
            bits: run.record.total_bits,
            nmse: run.record.nmse,
            nmde: run.record.nmde,
            ub_npae: None,
        });
    }
    let rep = MetricReport::from_samples(rows);
    match rep.aggregate.mean_nmse.db {
        Some(db) => println!(
            "mean NMSE: {db:.2} dB over {} samples",
            rep.aggregate.samples
        ),
        None => println!("mean NMSE: -inf over {} samples", rep.aggregate.samples),
    }
    println!(
        "mean bits: {:.1}, mean r_hat: {:.2}",
        rep.aggregate.mean_bits, rep.aggregate.mean_r_hat
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), rep.to_csv())?;
        std::fs::write(dir.join("report.json"), rep.to_json())?;
        println!("report -> {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(kind: SweepKind, config: &Path) -> Result<()> {
    let mut cfg: SweepFileConfig = load_toml(config)?;
    if let Some(seed) = seed_override() {
        cfg.seed = seed;
        cfg.environment.seed = seed.wrapping_add(1);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    match kind {
        SweepKind::Noise => {
            if cfg.snr_db.is_empty() {
                return Err(Error::InvalidConfig("snr_db list is empty".into()));
            }
            let rep = run_noise_sweep(&cfg)?;
            let path = cfg.output_dir.join("noise_sweep.csv");
            std::fs::write(&path, report::noise_sweep_csv(&rep))?;
            println!(
                "noise sweep over {} SNR points -> {}",
                rep.points.len(),
                path.display()
            );
        }
        SweepKind::Overhead => {
            if cfg.m_values.is_empty() {
                return Err(Error::InvalidConfig("m_values list is empty".into()));
            }
            let rep = run_overhead_sweep(&cfg)?;
            let path = cfg.output_dir.join("overhead_sweep.csv");
            std::fs::write(&path, report::overhead_sweep_csv(&rep))?;
            println!(
                "overhead sweep over {} budgets -> {}",
                rep.points.len(),
                path.display()
            );
        }
    }
    Ok(())
}

fn cmd_benchmark(config: &Path) -> Result<()> {
    let mut cfg: harness::ExperimentConfig = load_toml(config)?;
    cfg.apply_seed_override();
    let rep = run_generalization_benchmark(&cfg)?;
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| format!("unix:{}", d.as_secs()))
        .ok();
    report::write_generalization_report(&cfg.output_dir, &cfg, &rep, now)?;
    for r in &rep.results {
        let db = r
            .mean_nmse
            .db
            .map(|d| format!("{d:.2}"))
            .unwrap_or_else(|| "-inf".into());
        println!(
            "{:<22} {:<10} {} NMSE {db} dB, {:.0} bits",
            r.variant,
            r.env_id,
            if r.train_env { "train" } else { "test " },
            r.mean_bits
        );
    }
    println!("reports -> {}", cfg.output_dir.display());
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let mut found = false;
    for name in [
        "generalization.csv",
        "noise_sweep.csv",
        "overhead_sweep.csv",
        "w1_raw.csv",
        "w1_aligned.csv",
    ] {
        let path = dir.join(name);
        if path.exists() {
            found = true;
            println!("== {name}");
            print!("{}", std::fs::read_to_string(&path)?);
        }
    }
    if !found {
        return Err(Error::InvalidConfig(format!(
            "no report CSVs found in {}",
            dir.display()
        )));
    }
    Ok(())
}

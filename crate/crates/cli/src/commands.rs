use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use skelaug::autoencoder::ae_train;
use skelaug::diversity::diversity_curve;
use skelaug::ingest::{
    parse_ntu_skeleton, read_corpus, select_primary_body, CoordinateSpace, MotionProfile,
};
use skelaug::pipeline::{augment_batch, learn_priors};
use skelaug::skeleton::{preprocess, resize_linear};
use skelaug::{
    AugmentConfig, Corpus, CorpusFormat, Error, MotionSequence, PreprocessSpec, PriorSet,
    SequenceMeta, SyntheticSpec, TrainConfig,
};

use crate::output::{write_corpus, write_files, write_text};
use crate::{Cli, Command, ConfigFlags, FormatArg, ProfileArg, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    let ctx = Context_ {
        seed: cli.seed,
        config: cli.config,
        threads: cli.threads,
    };
    match cli.command {
        Command::Ingest {
            input,
            out,
            t,
            no_align,
            raw,
            skip_invalid,
            format,
        } => ingest(&input, &out, t, no_align, raw, skip_invalid, format),
        Command::Synth {
            out,
            n,
            classes,
            t,
            joints,
            rest_poses,
            amplitude,
            noise,
            profile,
            format,
        } => {
            let spec = SyntheticSpec {
                n_sequences: n,
                n_classes: classes,
                t_full: t,
                joints,
                n_rest_poses: rest_poses,
                amplitude,
                profile: match profile {
                    ProfileArg::RisePeakReturn => MotionProfile::default(),
                    ProfileArg::Ramp => MotionProfile::Ramp,
                },
                noise_std: noise,
                seed: ctx.seed.unwrap_or(0),
            };
            synth(&spec, &out, format)
        }
        Command::Learn { corpus, out, flags } => {
            let cfg = ctx.augment_config(&flags)?;
            learn(&corpus, &out, &cfg)
        }
        Command::Augment {
            corpus,
            priors,
            out,
            m_aug,
            format,
        } => augment(&ctx, &corpus, &priors, &out, m_aug, format),
        Command::Analyze {
            corpus,
            out,
            autoencoder,
            epochs,
        } => analyze(&ctx, &corpus, &out, autoencoder, epochs),
        Command::Inspect { priors, out } => inspect(&priors, &out),
        Command::Bench {
            corpus,
            priors,
            iters,
        } => bench(&ctx, &corpus, &priors, iters),
    }
}

// Trailing underscore: `Context` is taken by anyhow's extension trait.
struct Context_ {
    seed: Option<u64>,
    config: Option<PathBuf>,
    threads: Option<usize>,
}

impl Context_ {
    /// Defaults, then the config file, then individual flags.
    fn augment_config(&self, flags: &ConfigFlags) -> Result<AugmentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => AugmentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.t {
            cfg.t = v;
        }
        if let Some(v) = flags.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = flags.lambda_t {
            cfg.lambda_t = v;
        }
        if let Some(v) = flags.n_bkg {
            cfg.n_bkg = v;
        }
        if let Some(v) = flags.n_tr {
            cfg.n_tr = v;
        }
        if let Some(v) = flags.m_aug {
            cfg.m_aug = v;
        }
        if let Some(v) = flags.resize_mode {
            cfg.resize_mode = v.into();
        }
        if flags.weight_by_cluster_size {
            cfg.weight_by_cluster_size = true;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    read_corpus(path, CorpusFormat::from_path(path))
        .with_context(|| format!("cannot read corpus {}", path.display()))
}

fn load_priors(path: &Path) -> Result<PriorSet> {
    PriorSet::load(path).with_context(|| format!("cannot load priors {}", path.display()))
}

fn output_format(out: &Path, format: Option<FormatArg>) -> CorpusFormat {
    format.map_or_else(|| CorpusFormat::from_path(out), Into::into)
}

/// First run of digits following `tag` in an NTU file stem such as
/// `S001C002P003R002A013`.
fn tagged_number(stem: &str, tag: char) -> Option<u32> {
    let bytes = stem.as_bytes();
    for (i, c) in stem.char_indices() {
        if c != tag {
            continue;
        }
        let digits: String = bytes[i + 1..]
            .iter()
            .take_while(|b| b.is_ascii_digit())
            .map(|&b| b as char)
            .collect();
        if let Ok(n) = digits.parse() {
            return Some(n);
        }
    }
    None
}

fn meta_from_stem(stem: &str) -> SequenceMeta {
    let mut meta = SequenceMeta::new(stem);
    // action numbers are 1-based in file names
    meta.label = tagged_number(stem, 'A')
        .and_then(|a| a.checked_sub(1))
        .map(|a| a as i32);
    meta.subject = tagged_number(stem, 'P').map(|p| format!("P{p:03}"));
    meta
}

fn skeleton_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("cannot list {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "skeleton"))
        .collect();
    files.sort();
    Ok(files)
}

fn load_skeleton_file(
    path: &Path,
    t: usize,
    spec: Option<&PreprocessSpec>,
) -> Result<MotionSequence> {
    let bytes = fs::read(path)?;
    let rec = parse_ntu_skeleton(&bytes)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("unnamed");
    let seq = select_primary_body(&rec, meta_from_stem(stem))?;
    let seq = match spec {
        None => seq,
        Some(spec) => match preprocess(&seq, spec) {
            Err(Error::AlignmentDegenerate(why)) => {
                warn!("{}: {why}; keeping camera orientation", path.display());
                let fallback = PreprocessSpec {
                    align_axes: false,
                    ..*spec
                };
                preprocess(&seq, &fallback)?
            }
            other => other?,
        },
    };
    Ok(resize_linear(&seq, t)?)
}

fn ingest(
    input: &Path,
    out: &Path,
    t: usize,
    no_align: bool,
    raw: bool,
    skip_invalid: bool,
    format: Option<FormatArg>,
) -> Result<()> {
    if t < 2 {
        return Err(usage("--t must be at least 2"));
    }
    let files = skeleton_files(input)?;
    if files.is_empty() {
        bail!("no .skeleton files under {}", input.display());
    }
    let spec = PreprocessSpec {
        align_axes: !no_align,
        ..PreprocessSpec::default()
    };
    let spec = (!raw).then_some(&spec);
    let loaded: Vec<Result<MotionSequence>> = files
        .par_iter()
        .map(|p| load_skeleton_file(p, t, spec).with_context(|| format!("{}", p.display())))
        .collect();
    let mut sequences = Vec::with_capacity(loaded.len());
    for r in loaded {
        match r {
            Ok(s) => sequences.push(s),
            Err(e) if skip_invalid => warn!("skipping {e:#}"),
            Err(e) => return Err(e),
        }
    }
    if sequences.is_empty() {
        bail!("no usable sequences");
    }
    let space = if raw {
        CoordinateSpace::Camera
    } else {
        CoordinateSpace::Normalized
    };
    let corpus = Corpus::new(sequences, space)?;
    write_corpus(out, &corpus, output_format(out, format))?;
    println!(
        "ingested {} of {} files into {}",
        corpus.len(),
        files.len(),
        out.display()
    );
    Ok(())
}

fn synth(spec: &SyntheticSpec, out: &Path, format: Option<FormatArg>) -> Result<()> {
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let corpus = skelaug::ingest::generate_synthetic(spec)?;
    write_corpus(out, &corpus, output_format(out, format))?;
    println!(
        "wrote {} synthetic sequences to {}",
        corpus.len(),
        out.display()
    );
    Ok(())
}

fn learn(corpus: &Path, out: &Path, cfg: &AugmentConfig) -> Result<()> {
    let corpus = load_corpus(corpus)?;
    let (priors, report) = learn_priors(&corpus, cfg)?;
    write_text(out, &priors.to_json())?;
    println!(
        "{} boundary poses (inertia {:.6}), {} transforms from {} pairs (inertia {:.6})",
        priors.poses.len(),
        report.pose_inertia,
        priors.transforms.len(),
        report.n_pairs,
        report.transform_inertia
    );
    Ok(())
}

fn augment(
    ctx: &Context_,
    corpus_path: &Path,
    priors_path: &Path,
    out: &Path,
    m_aug: Option<f64>,
    format: Option<FormatArg>,
) -> Result<()> {
    if let Some(m) = m_aug {
        if !(0.0..=1.0).contains(&m) {
            return Err(usage(format!("--m-aug {m} must lie in [0, 1]")));
        }
    }
    let corpus = load_corpus(corpus_path)?;
    let priors = load_priors(priors_path)?;
    let m_aug = m_aug.unwrap_or(priors.config.m_aug);
    let seed = ctx.seed.unwrap_or(priors.config.seed);
    let samples = augment_batch(&corpus.sequences, &priors, m_aug, seed)?;
    let mut sequences = Vec::with_capacity(corpus.len() * 2);
    let mut n_aug = 0;
    for s in samples {
        sequences.push(s.original.clone());
        if let Some(a) = s.augmented {
            sequences.push(a);
            n_aug += 1;
        }
    }
    let result = Corpus::new(sequences, corpus.space)?;
    let format = format.map_or_else(|| CorpusFormat::from_path(corpus_path), Into::into);
    write_corpus(out, &result, format)?;
    println!(
        "{} originals, {} augmented -> {}",
        corpus.len(),
        n_aug,
        out.display()
    );
    Ok(())
}

fn analyze(
    ctx: &Context_,
    corpus: &Path,
    out: &Path,
    autoencoder: bool,
    epochs: usize,
) -> Result<()> {
    let corpus = load_corpus(corpus)?;
    let curve = if autoencoder {
        let cfg = TrainConfig {
            epochs,
            seed: ctx.seed.unwrap_or(0),
            ..TrainConfig::default()
        };
        let (model, history) = ae_train(&corpus, &cfg)?;
        if let Some(loss) = history.last() {
            info!("autoencoder final loss {loss:.6}");
        }
        diversity_curve(&corpus, Some(&model))?
    } else {
        diversity_curve(&corpus, None)?
    };
    write_text(out, &curve.to_csv())?;
    println!(
        "wrote {}-frame diversity curve to {}",
        curve.len(),
        out.display()
    );
    Ok(())
}

fn transform_csv(indices: &[usize]) -> String {
    let t = indices.len();
    let mut s = String::with_capacity(t * t * 2);
    for &k in indices {
        let row: Vec<&str> = (0..t).map(|j| if j == k { "1" } else { "0" }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn inspect(priors: &Path, out: &Path) -> Result<()> {
    let priors = load_priors(priors)?;
    let mut files = Vec::new();
    for (i, w) in priors.transforms.iter().enumerate() {
        files.push((format!("transform_{i:02}.csv"), transform_csv(&w.indices)));
    }
    for (i, p) in priors.poses.poses.iter().enumerate() {
        let text: String = p
            .joints()
            .iter()
            .map(|[x, y, z]| format!("{x},{y},{z}\n"))
            .collect();
        files.push((format!("pose_{i:02}.csv"), text));
    }
    write_files(out, &files)?;
    println!(
        "wrote {} transforms and {} poses to {}",
        priors.transforms.len(),
        priors.poses.len(),
        out.display()
    );
    Ok(())
}

fn bench(ctx: &Context_, corpus: &Path, priors: &Path, iters: usize) -> Result<()> {
    if iters == 0 {
        return Err(usage("--iters must be positive"));
    }
    let corpus = load_corpus(corpus)?;
    let priors = load_priors(priors)?;
    let seed = ctx.seed.unwrap_or(priors.config.seed);
    let multi = ctx
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let timed = |threads: usize| -> Result<(f64, Vec<MotionSequence>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        pool.install(|| {
            let start = Instant::now();
            let mut last = Vec::new();
            for _ in 0..iters {
                last = augment_batch(&corpus.sequences, &priors, 1.0, seed)?
                    .into_iter()
                    .filter_map(|s| s.augmented)
                    .collect();
            }
            let secs = start.elapsed().as_secs_f64().max(1e-9);
            Ok(((iters * corpus.len()) as f64 / secs, last))
        })
    };
    let (single_rate, single_out) = timed(1)?;
    let (multi_rate, multi_out) = timed(multi)?;
    println!("1 thread: {single_rate:.0} sequences/s");
    println!(
        "{multi} thread{}: {multi_rate:.0} sequences/s ({:.2}x)",
        if multi == 1 { "" } else { "s" },
        multi_rate / single_rate
    );
    if single_out != multi_out {
        bail!("multi-threaded output differs from single-threaded output");
    }
    println!("outputs identical across thread counts");
    Ok(())
}

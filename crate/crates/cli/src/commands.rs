use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use phylocoal::diagnostics::{efficiency_report, format_efficiency_table, trajectory_summary, write_efficiency_csv};
use phylocoal::genealogy::{parse_newick, read_genealogy, write_genealogy, ValidatedGenealogy};
use phylocoal::gmrf::{PriorConfig, DEFAULT_JITTER};
use phylocoal::gridlik::Grid;
use phylocoal::io::{meta_path, read_trace_csv, write_trace_csv, Meta};
use phylocoal::model::{CoalescentModel, LatentGaussianModel};
use phylocoal::par::{map_indexed, stream_rng, Execution};
use phylocoal::samplers::{build_kernel, run_chain, ChainOptions, SamplerConfig, SamplerKind, ThreadCpuClock, TickClock};
use phylocoal::simulate::{simulate_genealogy, write_truth_csv, Resolution, SamplingDesign, Trajectory};
use phylocoal::Error;
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::{with_path, CliError};
use crate::svg;
use crate::{DiagnoseArgs, InferArgs, SimulateArgs, SummarizeArgs};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        with_path(fs::create_dir_all(dir), dir)?;
    }
    Ok(BufWriter::new(with_path(File::create(path), path)?))
}

fn parse_usage<T: std::str::FromStr<Err = Error>>(what: &str, s: &str) -> Result<T, CliError> {
    s.parse::<T>().map_err(|e| {
        let why = match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        CliError::Usage(format!("bad {what} '{s}': {why}"))
    })
}

fn parse_resolution(s: &str) -> Result<Resolution, CliError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Resolution::Auto);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Resolution::Fixed(h)),
        _ => Err(CliError::Usage(format!("resolution must be 'auto' or a positive step, got '{s}'"))),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let keys = ["trajectory", "n", "design", "seed", "resolution", "output", "truth", "truth_points"];
    let cfg = Settings::load(a.config.as_deref(), &keys)?;
    let traj_spec: String = cfg
        .get_opt("trajectory", a.trajectory)?
        .ok_or_else(|| CliError::Usage("--trajectory is required".into()))?;
    let traj: Trajectory = parse_usage("trajectory", &traj_spec)?;
    let design = match cfg.get_opt::<String>("design", a.design)? {
        Some(d) => parse_usage::<SamplingDesign>("design", &d)?,
        None => SamplingDesign::isochronous(cfg.get("n", a.n, 50)?)?,
    };
    let seed = cfg.seed(a.seed)?;
    let resolution = parse_resolution(&cfg.get("resolution", a.resolution, "auto".to_string())?)?;
    let output: PathBuf = cfg.get("output", a.output, PathBuf::from("genealogy.txt"))?;

    let g = simulate_genealogy(&traj, &design, &mut stream_rng(seed, 0), resolution)?;
    let mut w = create(&output)?;
    write_genealogy(&mut w, g.genealogy())?;
    w.flush()?;
    println!(
        "wrote {} ({} samples, {} coalescent times, root at {:.6})",
        output.display(),
        g.n(),
        g.coalescent_times().len(),
        g.root_time()
    );
    if let Some(truth) = cfg.get_opt::<PathBuf>("truth", a.truth)? {
        let points = cfg.get("truth_points", a.truth_points, 1000)?;
        let mut w = create(&truth)?;
        write_truth_csv(&traj, g.root_time(), points, &mut w)?;
        w.flush()?;
        println!("wrote {}", truth.display());
    }
    Ok(())
}

fn load_genealogy(path: &Path, newick: bool) -> Result<(ValidatedGenealogy, String), CliError> {
    let bytes = with_path(fs::read(path), path)?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let g = if newick {
        let text = String::from_utf8(bytes).map_err(|_| Error::Format("Newick file is not UTF-8".into()))?;
        parse_newick(&text)?
    } else {
        read_genealogy(&bytes[..])?
    };
    Ok((g.validate()?, hash))
}

pub fn infer(a: InferArgs) -> Result<(), CliError> {
    let keys = [
        "sampler", "D", "iters", "burnin", "thin", "epsilon", "L", "c", "alpha", "beta", "jitter", "seed", "tune",
        "clock", "output", "stats_csv",
    ];
    let cfg = Settings::load(a.config.as_deref(), &keys)?;
    let kind: SamplerKind = parse_usage("sampler", &cfg.get("sampler", a.sampler, "splithmc".to_string())?)?;
    let points = cfg.get("D", a.grid_points, 100)?;
    let defaults = kind.default_config();
    let sampler_cfg = SamplerConfig {
        epsilon: cfg.get("epsilon", a.epsilon, defaults.epsilon)?,
        steps: cfg.get("L", a.steps, defaults.steps)?,
        c: cfg.get("c", a.c, defaults.c)?,
    };
    let prior = PriorConfig::new(cfg.get("alpha", a.alpha, 0.01)?, cfg.get("beta", a.beta, 0.01)?)?;
    let jitter = cfg.get("jitter", a.jitter, DEFAULT_JITTER)?;
    let opts = ChainOptions {
        thin: cfg.get("thin", a.thin, 1)?,
        tune: cfg.get("tune", a.no_tune.then_some(false), true)?,
        ..ChainOptions::new(cfg.get("iters", a.iters, 15_000)?, cfg.get("burnin", a.burnin, 5_000)?)
    };
    opts.validate()?;
    let seed = cfg.seed(a.seed)?;
    let clock = cfg.get("clock", a.clock, "cpu".to_string())?;
    if clock != "cpu" && clock != "iter" {
        return Err(CliError::Usage(format!("clock must be 'cpu' or 'iter', got '{clock}'")));
    }
    let output: PathBuf = cfg.get("output", a.output, PathBuf::from("trace.csv"))?;

    let (g, hash) = load_genealogy(&a.genealogy, a.newick)?;
    let model = CoalescentModel::new(&g, points, prior, jitter)?;
    if let Some(path) = cfg.get_opt::<PathBuf>("stats_csv", a.stats_csv)? {
        let mut w = create(&path)?;
        model.stats().write_csv(&mut w)?;
        w.flush()?;
    }
    let mut kernel = build_kernel(kind, &model, &sampler_cfg)?;
    let mut init = vec![model.constant_mle(); model.dim()];
    init.push(0.0);
    let mut rng = stream_rng(seed, 0);
    let trace = if clock == "cpu" {
        run_chain(&mut *kernel, init, &opts, &mut rng, &mut ThreadCpuClock)?
    } else {
        run_chain(&mut *kernel, init, &opts, &mut rng, &mut TickClock::new(1.0))?
    };

    let mut w = create(&output)?;
    write_trace_csv(&trace, &mut w)?;
    w.flush()?;

    let mut meta = Meta::new();
    meta.set("sampler", kind)
        .set("D", points)
        .set("span", g.root_time())
        .set("iters", opts.iterations)
        .set("burnin", opts.burnin)
        .set("thin", opts.thin)
        .set("epsilon", sampler_cfg.epsilon)
        .set("L", sampler_cfg.steps)
        .set("c", sampler_cfg.c)
        .set("alpha", prior.alpha)
        .set("beta", prior.beta)
        .set("jitter", jitter)
        .set("seed", seed)
        .set("tune", opts.tune)
        .set("clock", &clock);
    if let Some(eps) = trace.step_size {
        meta.set("epsilon_tuned", eps);
    }
    if let Some(c) = kernel.kappa_step() {
        meta.set("c_tuned", c);
    }
    meta.set("divergences", trace.divergences)
        .set("stalls", trace.stalls)
        .set("genealogy", a.genealogy.display())
        .set("genealogy_sha256", hash);
    let mpath = meta_path(&output);
    let mut w = create(&mpath)?;
    meta.write(&mut w)?;
    w.flush()?;

    println!(
        "wrote {} and {} ({} rows, acceptance {:.2})",
        output.display(),
        mpath.display(),
        trace.rows.len(),
        trace.acceptance_rate()
    );
    Ok(())
}

fn read_meta(trace: &Path) -> Result<Option<Meta>, CliError> {
    let path = meta_path(trace);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(Meta::read(BufReader::new(with_path(File::open(&path), &path)?))?))
}

fn load_trace(path: &Path) -> Result<(phylocoal::samplers::Trace, Option<Meta>), CliError> {
    let meta = read_meta(path)?;
    let name = match meta.as_ref().and_then(|m| m.get("sampler")) {
        Some(s) => s.to_string(),
        None => path.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned()),
    };
    let file = with_path(File::open(path), path)?;
    let trace = read_trace_csv(BufReader::new(file), &name, None)
        .map_err(|e| match e {
            Error::Trace(m) => Error::Trace(format!("{}: {m}", path.display())),
            other => other,
        })?;
    Ok((trace, meta))
}

pub fn diagnose(a: DiagnoseArgs) -> Result<(), CliError> {
    let reports = map_indexed(a.traces.len(), Execution::available(), |i| {
        let (trace, _) = load_trace(&a.traces[i])?;
        efficiency_report(&trace, Execution::Sequential).map_err(CliError::from)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    print!("{}", format_efficiency_table(&reports));
    if let Some(path) = a.csv {
        let mut w = create(&path)?;
        write_efficiency_csv(&reports, &mut w)?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let (trace, meta) = load_trace(&a.trace)?;
    let meta = meta.ok_or_else(|| {
        Error::Trace(format!(
            "{} has no metadata sidecar {}",
            a.trace.display(),
            meta_path(&a.trace).display()
        ))
    })?;
    let points: usize = meta.parse("D")?;
    let span: f64 = meta.parse("span")?;
    if trace.dim() != points {
        return Err(Error::Trace(format!(
            "metadata says D = {points} but the trace has {} log population sizes",
            trace.dim().saturating_sub(1)
        ))
        .into());
    }
    let grid = Grid::uniform(span, points)?;
    let truth = a.truth.as_deref().map(|s| parse_usage::<Trajectory>("trajectory", s)).transpose()?;
    let truth_fn = truth.as_ref().map(|t| move |x: f64| t.evaluate(x));
    let summary = trajectory_summary(&trace, grid.midpoints(), truth_fn.as_ref().map(|f| f as &dyn Fn(f64) -> f64))?;

    let output = a.output.unwrap_or_else(|| a.trace.with_extension("summary.csv"));
    let mut w = create(&output)?;
    summary.write_csv(&mut w)?;
    w.flush()?;
    println!("wrote {}", output.display());
    if let Some(c) = summary.coverage() {
        println!("coverage of truth by 95% band: {:.3}", c);
    }
    if let Some(path) = a.svg {
        let mut w = create(&path)?;
        w.write_all(svg::render(&summary).as_bytes())?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use geordd::bandwidth::{compute_bounds, select_bandwidth_with, BandwidthConfig, BandwidthSearch};
use geordd::fuzzy::{
    estimate_fuzzy, FuzzyConfig, FuzzyVariant, Noncompliance, DEFAULT_DELTA_COMPLY,
};
use geordd::sharp::estimate_sharp_with;
use geordd::simlab::{
    run_campaign, BandwidthMode, CampaignConfig, NetworkDgp, ScalarDgp, ScalarSetting,
};
use geordd::{Error, FrechetSolveConfig, KernelKind, LfrEngine, MetricObject, RddSample, Result};
use serde_json::{json, Value};

use crate::config::{
    parse_opt, parse_sizes, BwArg, Cli, Command, DataArgs, FileConfig, FuzzyArgs, SimulateArgs,
};
use crate::ingest::ingest;
use crate::report::{binned_means, fitted_curves, write_bins, write_curves};
use crate::space_arg::SpaceArg;

const CURVE_POINTS: usize = 50;
const BINS_PER_SIDE: usize = 20;

/// What a command printed and which files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Output> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Sharp(a) => sharp(a, &file),
        Command::Fuzzy(a) => fuzzy(a, &file),
        Command::Bandwidth(a) => bandwidth(a, &file),
        Command::Simulate(a) => simulate(a, &file),
        Command::Validate(a) => validate(a, &file),
    }
}

struct Data {
    input: PathBuf,
    sample: RddSample,
    bw: BwArg,
    search: BandwidthConfig,
    out: Option<PathBuf>,
}

fn search_config(kernel: Option<&str>, f: &FileConfig) -> Result<BandwidthConfig> {
    let kernel: KernelKind = parse_opt(kernel.or(f.kernel.as_deref()))?.unwrap_or_default();
    let defaults = BandwidthConfig::default();
    let cfg = BandwidthConfig {
        grid_size: f.grid_size.unwrap_or(defaults.grid_size),
        eval_points: f.eval_points.unwrap_or(defaults.eval_points),
        kernel,
        solver: FrechetSolveConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load(a: &DataArgs, f: &FileConfig) -> Result<Data> {
    let input = a
        .input
        .clone()
        .or_else(|| f.input.clone())
        .ok_or_else(|| Error::InvalidConfig("--input is required".into()))?;
    let space: Option<SpaceArg> = parse_opt(a.space.as_deref().or(f.space.as_deref()))?;
    let cutoff = a.cutoff.or(f.cutoff).unwrap_or(0.0);
    let bw = parse_opt(a.bw.as_deref().or(f.bw.as_deref()))?.unwrap_or(BwArg::Auto);
    let search = search_config(a.kernel.as_deref(), f)?;
    let sample = ingest(&input, space, cutoff)?;
    Ok(Data {
        input,
        sample,
        bw,
        search,
        out: a.out.clone().or_else(|| f.out.clone()),
    })
}

fn mode_label(bw: BwArg) -> &'static str {
    match bw {
        BwArg::Auto => "auto",
        BwArg::Max => "max",
        BwArg::Fixed(..) => "fixed",
        BwArg::Rate(_) => "rate",
    }
}

fn choose_bandwidths(
    engine: &LfrEngine,
    c: f64,
    bw: BwArg,
    cfg: &BandwidthConfig,
) -> Result<(f64, f64, Option<BandwidthSearch>)> {
    Ok(match bw {
        BwArg::Auto => {
            let s = select_bandwidth_with(engine, c, cfg)?;
            (s.b_star, s.b_star, Some(s))
        }
        BwArg::Max => {
            let b = compute_bounds(engine.sorted_r(), c)?.1;
            (b, b, None)
        }
        BwArg::Fixed(h0, h1) => (h0, h1, None),
        BwArg::Rate(scale) => {
            let h = scale * (engine.len() as f64).powf(-0.2);
            (h, h, None)
        }
    })
}

fn search_summary(s: &BandwidthSearch) -> Value {
    json!({
        "b_min": s.b_min,
        "b_max": s.b_max,
        "b_star": s.b_star,
        "best_index": s.best_index,
        "grid": s.grid,
        "losses": s.losses,
        "skipped": s.skipped,
        "eval_points": s.region.points().count(),
        "tie_tolerance": s.tie_tolerance,
    })
}

fn pretty(v: &Value) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<fs::File> {
    let path = dir.join(name);
    let f = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(f)
}

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    use std::io::Write;
    let mut f = create(dir, name, files)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Report, plot tables and, in auto mode, the search table.
fn write_estimate_outputs(
    dir: &Path,
    report: &str,
    engine: &LfrEngine,
    c: f64,
    (h0, h1): (f64, f64),
    search: Option<&BandwidthSearch>,
) -> Result<Vec<PathBuf>> {
    make_dir(dir)?;
    let mut files = Vec::new();
    write_text(dir, "report.json", report, &mut files)?;
    let curves = fitted_curves(engine, c, h0, h1, CURVE_POINTS)?;
    write_curves(&curves, create(dir, "fitted.csv", &mut files)?)?;
    let bins = binned_means(engine, c, BINS_PER_SIDE)?;
    write_bins(&bins, create(dir, "bins.csv", &mut files)?)?;
    if let Some(s) = search {
        s.write_csv(create(dir, "bandwidth_search.csv", &mut files)?)?;
    }
    Ok(files)
}

fn base_report(command: &str, d: &Data, h: (f64, f64), search: Option<&BandwidthSearch>) -> Value {
    let (below, above) = d.sample.side_counts();
    json!({
        "command": command,
        "input": d.input.display().to_string(),
        "space": d.sample.space().to_string(),
        "cutoff": d.sample.cutoff(),
        "n": d.sample.len(),
        "counts": [below, above],
        "bandwidth": {
            "mode": mode_label(d.bw),
            "h0": h.0,
            "h1": h.1,
            "search": search.map(search_summary),
        },
    })
}

fn sharp(a: &DataArgs, f: &FileConfig) -> Result<Output> {
    let d = load(a, f)?;
    d.sample.check_sharp()?;
    let c = d.sample.cutoff();
    let engine = LfrEngine::from_sample(&d.sample, d.search.kernel, d.search.solver)?;
    let (h0, h1, search) = choose_bandwidths(&engine, c, d.bw, &d.search)?;
    let est = estimate_sharp_with(&engine, c, h0, h1, None)?;
    let mut report = base_report("sharp", &d, (h0, h1), search.as_ref());
    report["estimate"] = serde_json::to_value(&est).map_err(|e| Error::Io(e.to_string()))?;
    let text = pretty(&report)?;
    let files = match &d.out {
        Some(dir) => write_estimate_outputs(dir, &text, &engine, c, (h0, h1), search.as_ref())?,
        None => Vec::new(),
    };
    Ok(Output {
        stdout: text,
        files,
    })
}

fn read_reference(path: &Path) -> Result<MetricObject> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        row: 0,
        column: "reference".into(),
        message: e.to_string(),
    })
}

fn fuzzy(a: &FuzzyArgs, f: &FileConfig) -> Result<Output> {
    let variant: FuzzyVariant =
        parse_opt(a.fuzzy_variant.as_deref().or(f.fuzzy_variant.as_deref()))?
            .unwrap_or(FuzzyVariant::Embedding);
    let side: Option<Noncompliance> = parse_opt(a.side.as_deref().or(f.side.as_deref()))?;
    let needs_side = matches!(
        variant,
        FuzzyVariant::GeodesicOneSided | FuzzyVariant::GeodesicRiemannian
    );
    if needs_side && side.is_none() {
        return Err(Error::InvalidConfig(format!(
            "variant `{variant}` needs --side always|never"
        )));
    }
    let reference = match a.reference.as_ref().or(f.reference.as_ref()) {
        Some(p) => Some(read_reference(p)?),
        None => None,
    };
    let d = load(&a.data, f)?;
    if !d.sample.has_treatment() {
        return Err(Error::MissingTreatment);
    }
    if needs_side && !d.sample.has_assignment() {
        return Err(Error::MissingAssignment);
    }
    let cfg = FuzzyConfig {
        kernel: d.search.kernel,
        solver: d.search.solver,
        delta_comply: a
            .delta_comply
            .or(f.delta_comply)
            .unwrap_or(DEFAULT_DELTA_COMPLY),
        reference,
        strict_stratum: a.strict_stratum || f.strict_stratum.unwrap_or(false),
    };
    let c = d.sample.cutoff();
    let engine = LfrEngine::from_sample(&d.sample, d.search.kernel, d.search.solver)?;
    let (h0, h1, search) = choose_bandwidths(&engine, c, d.bw, &d.search)?;
    let est = estimate_fuzzy(&d.sample, h0, h1, variant, side, &cfg)?;
    let mut report = base_report("fuzzy", &d, (h0, h1), search.as_ref());
    report["variant"] = json!(variant.to_string());
    report["estimate"] = serde_json::to_value(&est).map_err(|e| Error::Io(e.to_string()))?;
    let text = pretty(&report)?;
    let files = match &d.out {
        Some(dir) => write_estimate_outputs(dir, &text, &engine, c, (h0, h1), search.as_ref())?,
        None => Vec::new(),
    };
    Ok(Output {
        stdout: text,
        files,
    })
}

fn bandwidth(a: &DataArgs, f: &FileConfig) -> Result<Output> {
    let d = load(a, f)?;
    let c = d.sample.cutoff();
    let engine = LfrEngine::from_sample(&d.sample, d.search.kernel, d.search.solver)?;
    let s = select_bandwidth_with(&engine, c, &d.search)?;
    let text = pretty(&search_summary(&s))?;
    let mut files = Vec::new();
    if let Some(dir) = &d.out {
        make_dir(dir)?;
        write_text(dir, "bandwidth.json", &text, &mut files)?;
        s.write_csv(create(dir, "bandwidth_search.csv", &mut files)?)?;
    }
    Ok(Output {
        stdout: text,
        files,
    })
}

fn simulate(a: &SimulateArgs, f: &FileConfig) -> Result<Output> {
    let setting = a
        .setting
        .as_deref()
        .or(f.setting.as_deref())
        .unwrap_or("network");
    let network = setting.eq_ignore_ascii_case("network");
    let scalar: Option<ScalarSetting> = if network {
        None
    } else {
        Some(setting.parse()?)
    };
    let sizes = match (&a.sizes, &f.sizes) {
        (Some(s), _) => parse_sizes(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) if network => vec![100, 200, 500, 1000],
        (None, None) => vec![1000],
    };
    let bw: BwArg = parse_opt(a.bw.as_deref().or(f.bw.as_deref()))?.unwrap_or(BwArg::Auto);
    let mut cfg = CampaignConfig::new(
        a.seed.or(f.seed).unwrap_or(1),
        a.reps.or(f.reps).unwrap_or(100),
        sizes,
    );
    cfg.bandwidth = match bw {
        BwArg::Auto => BandwidthMode::Auto,
        BwArg::Max => BandwidthMode::Max,
        BwArg::Fixed(h0, h1) => BandwidthMode::Fixed { h0, h1 },
        BwArg::Rate(scale) => BandwidthMode::Rate { scale },
    };
    cfg.search = search_config(a.kernel.as_deref(), f)?;
    let campaign = match scalar {
        None => run_campaign(&NetworkDgp::with_n(cfg.sizes[0]), &cfg)?,
        Some(s) => run_campaign(&ScalarDgp::new(s, cfg.sizes[0]), &cfg)?,
    };
    let summary = json!({ "metadata": campaign.metadata, "rate": campaign.rate });
    let text = pretty(&summary)?;
    let mut files = Vec::new();
    if let Some(dir) = a.out.as_ref().or(f.out.as_ref()) {
        make_dir(dir)?;
        campaign.write_csv(create(dir, "campaign.csv", &mut files)?)?;
        write_text(dir, "metadata.json", &campaign.metadata_json()?, &mut files)?;
        write_text(dir, "rate.json", &campaign.rate_json()?, &mut files)?;
    }
    Ok(Output {
        stdout: text,
        files,
    })
}

fn validate(a: &DataArgs, f: &FileConfig) -> Result<Output> {
    let d = load(a, f)?;
    let s = &d.sample;
    let (below, above) = s.side_counts();
    let sharp = if s.has_treatment() {
        Some(s.check_sharp().is_ok())
    } else {
        None
    };
    let v = json!({
        "input": d.input.display().to_string(),
        "space": s.space().to_string(),
        "n": s.len(),
        "counts": [below, above],
        "treatment": s.has_treatment(),
        "assignment": s.has_assignment(),
        "sharp_consistent": sharp,
        "auto_bandwidth_ready": compute_bounds(&s.running(), s.cutoff()).is_ok(),
    });
    Ok(Output {
        stdout: pretty(&v)?,
        files: Vec::new(),
    })
}

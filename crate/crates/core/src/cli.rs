//! Command-line front end. Every command writes its primary output to
//! `--out` (or standard output) and, when `--out` is given, a
//! `<out>.manifest.json` run manifest with SHA-256 digests of all outputs.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constellation::{
    constellation_to_json, load_constellation, normalize_power, ChannelSpec, Constellation, Dimension,
    InputDistribution,
};
use crate::error::{Error, Result};
use crate::geoshape::{design_for_rate, de_optimize_with_progress, DeConfig, GeometryKind, GeometrySpec, LabelingPolicy};
use crate::pasfec::pas::mb_composition_for_bits;
use crate::pasfec::{monte_carlo, sim_csv, CodedModulation, ParityCheck, SimConfig, StopRule, SystematicEncoder};
use crate::probshape::{optimize_ps, pas_plan, plan_csv};
use crate::rates::{self, fmt_sig, rate_sweep, sweep_csv, FixedInput, Metric, QuadratureConfig, ShapingPolicy};

/// Environment variable naming a directory searched for input files.
pub const DATA_DIR_ENV: &str = "SHAPINGLAB_DATA_DIR";

#[derive(Parser, Debug, Clone, Serialize, Deserialize)]
#[command(name = "shapinglab", version, about = "Geometric vs probabilistic constellation shaping on the AWGN channel")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Gauss–Hermite nodes per dimension.
    #[arg(long = "quad-nodes", global = true, default_value_t = 128)]
    pub quad_nodes: usize,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
pub enum Command {
    /// Achievable rate and gap to capacity of a fixed input over an SNR grid.
    Rates(RatesArgs),
    /// Rate and gap of SNR-wise optimized probabilistic shaping.
    GapSweep(GapSweepArgs),
    /// Geometric shaping by differential evolution.
    OptimizeGs(OptimizeGsArgs),
    /// Probabilistic shaping of equidistant ASK at one SNR.
    OptimizePs(OptimizePsArgs),
    /// PAS rate-adaptation plan over a spectral-efficiency grid.
    PasPlan(PasPlanArgs),
    /// The PAS rows of the modcod summary table (256-QAM, c = 5/6).
    Table1,
    /// Coded Monte-Carlo FER/BER simulation.
    Simulate(SimulateArgs),
    /// Export a constellation (CSV or JSON) or a generated code (alist).
    Export(ExportArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Uniform equidistant M-ASK.
    #[arg(long = "uniform-ask", value_name = "M")]
    pub uniform_ask: Option<usize>,
    /// Uniform square M-QAM.
    #[arg(long = "uniform-qam", value_name = "M")]
    pub uniform_qam: Option<usize>,
    /// Constellation JSON file.
    #[arg(long, value_name = "FILE")]
    pub constellation: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RatesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// smd or bmd.
    #[arg(long, default_value = "smd")]
    pub metric: String,
    /// SNR grid a:b:step in dB.
    #[arg(long)]
    pub snr: String,
    /// Identifier written to the constellation_id column.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GapSweepArgs {
    /// Bits per real dimension of the ASK.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    #[arg(long, default_value = "bmd")]
    pub metric: String,
    #[arg(long)]
    pub snr: String,
    /// ps (optimized at each SNR) or uniform.
    #[arg(long, default_value = "ps")]
    pub policy: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeGsArgs {
    /// Constellation size.
    #[arg(long = "M", visible_alias = "size")]
    pub size: usize,
    /// 1d, 1d-product or 2d.
    #[arg(long, default_value = "1d")]
    pub geometry: String,
    #[arg(long, default_value = "bmd")]
    pub metric: String,
    /// Design SNR in dB.
    #[arg(long, conflicts_with = "target_rate", required_unless_present = "target_rate")]
    pub snr: Option<f64>,
    /// Design for this rate instead: alternate DE and the inverse rate.
    #[arg(long = "target-rate")]
    pub target_rate: Option<f64>,
    /// Fixed-point rounds for --target-rate.
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    /// sorted-brgc or random.
    #[arg(long, default_value = "sorted-brgc")]
    pub labeling: String,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OptimizePsArgs {
    /// Bits per real dimension of the ASK.
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value = "smd")]
    pub metric: String,
    /// SNR per real dimension in dB.
    #[arg(long)]
    pub snr: f64,
    /// Write the square QAM (self-product) instead of the ASK.
    #[arg(long)]
    pub qam: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PasPlanArgs {
    /// Bits per QAM symbol (even).
    #[arg(long, default_value_t = 8)]
    pub m: u32,
    /// Code rate, as a fraction (5/6) or decimal.
    #[arg(long = "code-rate", default_value = "5/6")]
    pub code_rate: String,
    /// Spectral-efficiency grid a:b:step in bits per channel use.
    #[arg(long = "se-grid")]
    pub se_grid: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[group(id = "code", required = true, multiple = false)]
pub struct CodeArgs {
    /// Parity-check matrix in alist format.
    #[arg(long, value_name = "FILE")]
    pub alist: Option<PathBuf>,
    /// Generate a column-regular code: n:rows:column_weight.
    #[arg(long, value_name = "N:M:DV")]
    pub peg: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[group(id = "signal", required = true, multiple = false)]
pub struct SignalArgs {
    #[arg(long, value_name = "FILE")]
    pub constellation: Option<PathBuf>,
    #[arg(long = "uniform-ask", value_name = "M")]
    pub uniform_ask: Option<usize>,
    /// PAS on 2^m-ASK with an MB composition meeting --se.
    #[arg(long = "pas-plan")]
    pub pas_plan: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub code: CodeArgs,
    /// Bits per real dimension for --pas-plan.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    /// Target spectral efficiency per real dimension for --pas-plan.
    #[arg(long)]
    pub se: Option<f64>,
    /// Complex-channel SNR grid a:b:step in dB.
    #[arg(long)]
    pub snr: String,
    #[arg(long = "min-errors", default_value_t = 100)]
    pub min_errors: usize,
    #[arg(long = "max-frames", default_value_t = 100_000)]
    pub max_frames: usize,
    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,
    /// Bit-mapper permutation file (whitespace-separated code bit indices).
    #[arg(long, value_name = "FILE")]
    pub permutation: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ExportArgs {
    #[arg(long = "uniform-ask", value_name = "M")]
    pub uniform_ask: Option<usize>,
    #[arg(long = "uniform-qam", value_name = "M")]
    pub uniform_qam: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub constellation: Option<PathBuf>,
    /// Probabilistically shaped 2^m-ASK optimized at --snr.
    #[arg(long, value_name = "m")]
    pub ps: Option<u32>,
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value = "smd")]
    pub metric: String,
    /// Column-regular code n:rows:column_weight (written as alist).
    #[arg(long, value_name = "N:M:DV")]
    pub peg: Option<String>,
    /// csv or json for constellations.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one command run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// One output of a command; `suffix` is `None` for the primary output.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub role: &'static str,
    pub suffix: Option<&'static str>,
    pub content: String,
}

impl Artifact {
    fn primary(role: &'static str, content: String) -> Self {
        Artifact { role, suffix: None, content }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Path as given if it exists, else relative to `SHAPINGLAB_DATA_DIR`.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => {
            let p = Path::new(&dir).join(path);
            if p.exists() {
                p
            } else {
                path.to_path_buf()
            }
        }
        None => path.to_path_buf(),
    }
}

/// Inclusive grid `a:b:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("invalid number {s:?} in grid {spec:?}")));
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("grid {spec:?} needs a <= b and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(Error::InvalidParameter(format!("grid {spec:?} must be a:b:step or a single value"))),
    }
}

/// `p/q` or a decimal.
pub fn parse_rate(s: &str) -> Result<f64> {
    let bad = || Error::InvalidParameter(format!("invalid code rate {s:?}"));
    let v = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().map_err(|_| bad())? / q.trim().parse::<f64>().map_err(|_| bad())?,
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!("code rate must lie in (0, 1), got {s}")));
    }
    Ok(v)
}

fn parse_metric(s: &str) -> Result<Metric> {
    s.parse()
}

fn log2_size(size: usize, what: &str) -> Result<u32> {
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("{what} size must be a power of two >= 2, got {size}")));
    }
    Ok(size.trailing_zeros())
}

fn uniform_ask(size: usize) -> Result<Constellation> {
    let m = log2_size(size, "ASK")?;
    normalize_power(&Constellation::ask(m)?, &InputDistribution::uniform(size))
}

fn uniform_qam(size: usize) -> Result<Constellation> {
    let m = log2_size(size, "QAM")?;
    if m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("square QAM size must be a power of four, got {size}")));
    }
    Constellation::square_qam(m / 2)
}

fn select_input(
    ask: Option<usize>,
    qam: Option<usize>,
    file: Option<&PathBuf>,
) -> Result<(Constellation, InputDistribution, String)> {
    if let Some(size) = ask {
        return Ok((uniform_ask(size)?, InputDistribution::uniform(size), format!("ask{size}")));
    }
    if let Some(size) = qam {
        return Ok((uniform_qam(size)?, InputDistribution::uniform(size), format!("qam{size}")));
    }
    if let Some(path) = file {
        let (c, p) = load_constellation(resolve_input(path))?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into());
        return Ok((c, p, id));
    }
    Err(Error::InvalidParameter("select an input constellation".into()))
}

fn parse_peg(spec: &str) -> Result<(usize, usize, usize)> {
    let v: Vec<usize> = spec
        .split(':')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidParameter(format!("invalid code spec {spec:?}; expected n:rows:column_weight")))?;
    match v.as_slice() {
        [n, m, dv] => Ok((*n, *m, *dv)),
        _ => Err(Error::InvalidParameter(format!("invalid code spec {spec:?}; expected n:rows:column_weight"))),
    }
}

fn load_code(code: &CodeArgs, seed: u64) -> Result<ParityCheck> {
    if let Some(path) = &code.alist {
        return ParityCheck::load_alist(resolve_input(path));
    }
    let (n, m, dv) = parse_peg(code.peg.as_deref().unwrap_or_default())?;
    ParityCheck::peg(n, m, dv, seed)
}

struct PsPolicy {
    m: u32,
    metric: Metric,
    q: QuadratureConfig,
}

impl ShapingPolicy for PsPolicy {
    fn at(&self, snr_db: f64) -> Result<(Constellation, InputDistribution)> {
        let s = optimize_ps(self.m, &ChannelSpec::real(snr_db)?, self.metric, &self.q)?;
        Ok((s.constellation, s.distribution))
    }
}

fn constellation_csv(c: &Constellation, p: &InputDistribution) -> String {
    let labels = c.label_strings();
    let mut out = String::from("index,re,im,label,prob\n");
    for (k, (x, w)) in c.points().iter().zip(p.probs()).enumerate() {
        let label = labels.as_ref().map(|l| l[k].clone()).unwrap_or_default();
        out.push_str(&format!("{k},{},{},{label},{}\n", fmt_sig(x.re, 12), fmt_sig(x.im, 12), fmt_sig(*w, 12)));
    }
    out
}

/// Runs a parsed command; progress goes to `progress`, outputs are returned.
pub fn execute(cli: &Cli, progress: &mut dyn FnMut(&str)) -> Result<Vec<Artifact>> {
    let q = QuadratureConfig::with_nodes(cli.quad_nodes);
    q.validate()?;
    match &cli.command {
        Command::Rates(a) => {
            let metric = parse_metric(&a.metric)?;
            let grid = parse_grid(&a.snr)?;
            let (c, p, id) = select_input(a.input.uniform_ask, a.input.uniform_qam, a.input.constellation.as_ref())?;
            let rows = rate_sweep(metric, &FixedInput { constellation: c, distribution: p }, &grid, &q)?;
            Ok(vec![Artifact::primary("sweep", sweep_csv(&rows, metric, a.id.as_deref().unwrap_or(&id)))])
        }
        Command::GapSweep(a) => {
            let metric = parse_metric(&a.metric)?;
            let grid = parse_grid(&a.snr)?;
            let size = 1usize << a.m;
            let rows = match a.policy.as_str() {
                "ps" => rate_sweep(metric, &PsPolicy { m: a.m, metric, q }, &grid, &q)?,
                "uniform" => {
                    let policy = FixedInput { constellation: uniform_ask(size)?, distribution: InputDistribution::uniform(size) };
                    rate_sweep(metric, &policy, &grid, &q)?
                }
                other => return Err(Error::InvalidParameter(format!("unknown policy {other:?} (expected ps or uniform)"))),
            };
            let id = format!("{}-ask{size}", a.policy);
            Ok(vec![Artifact::primary("sweep", sweep_csv(&rows, metric, &id))])
        }
        Command::OptimizeGs(a) => {
            let metric = parse_metric(&a.metric)?;
            let kind: GeometryKind = a.geometry.parse()?;
            let labeling = match a.labeling.as_str() {
                "sorted-brgc" => LabelingPolicy::SortedBrgc,
                "random" => LabelingPolicy::RandomFixed(cli.seed),
                other => return Err(Error::InvalidParameter(format!("unknown labeling {other:?} (expected sorted-brgc or random)"))),
            };
            let geom = GeometrySpec::new(kind, a.size, labeling)?;
            let mut cfg = DeConfig::for_geometry(&geom, cli.seed);
            if let Some(g) = a.generations {
                cfg.generations = g;
            }
            if let Some(p) = a.population {
                cfg.population = p;
            }
            let (result, summary) = match (a.snr, a.target_rate) {
                (Some(snr), _) => {
                    let dim = if kind == GeometryKind::OneD { Dimension::Real } else { Dimension::Complex };
                    let ch = ChannelSpec::new(snr, dim)?;
                    let mut report = |g: usize, best: f64| {
                        if g % 50 == 0 {
                            progress(&format!("generation {g}: best {best:.9}"));
                        }
                    };
                    let r = de_optimize_with_progress(&geom, &ch, metric, &cfg, &q, &mut report)?;
                    let summary = format!("{metric} rate {:.6} bpcu at {snr} dB after {} generations", r.objective, r.trace.len() - 1);
                    (r, summary)
                }
                (None, Some(target)) => {
                    let d = design_for_rate(&geom, target, metric, &cfg, &q, a.rounds)?;
                    let summary = format!(
                        "{metric} rate {target} bpcu needs {:.4} dB, gap {:.4} dB (designed at {:.4} dB)",
                        d.snr_req_db, d.gap_db, d.design_snr_db
                    );
                    (d.result, summary)
                }
                (None, None) => return Err(Error::InvalidParameter("give --snr or --target-rate".into())),
            };
            progress(&summary);
            let json = constellation_to_json(&result.constellation, &InputDistribution::uniform(a.size))?;
            Ok(vec![
                Artifact::primary("constellation", json),
                Artifact { role: "trace", suffix: Some("trace.csv"), content: result.trace_csv() },
            ])
        }
        Command::OptimizePs(a) => {
            let metric = parse_metric(&a.metric)?;
            let s = optimize_ps(a.m, &ChannelSpec::real(a.snr)?, metric, &q)?;
            progress(&format!(
                "{metric} rate {:.6} bpcu/dim (capacity gap {:.6}), spacing {:.6}{}",
                s.rate,
                rates::capacity(&ChannelSpec::real(a.snr)?) - s.rate,
                s.delta,
                s.nu.map(|nu| format!(", nu {nu:.6e}")).unwrap_or_default()
            ));
            let json = if a.qam {
                let (c, p) = s.to_qam()?;
                constellation_to_json(&c, &p)?
            } else {
                constellation_to_json(&s.constellation, &s.distribution)?
            };
            Ok(vec![Artifact::primary("constellation", json)])
        }
        Command::PasPlan(a) => {
            let c = parse_rate(&a.code_rate)?;
            let grid = parse_grid(&a.se_grid)?;
            let rows = pas_plan(a.m, c, &grid, &q)?;
            Ok(vec![Artifact::primary("plan", plan_csv(&rows))])
        }
        Command::Table1 => {
            let rows = pas_plan(8, 5.0 / 6.0, &TABLE1_SE, &q)?;
            Ok(vec![Artifact::primary("plan", plan_csv(&rows))])
        }
        Command::Simulate(a) => {
            let h = load_code(&a.code, cli.seed)?;
            let permutation = match &a.permutation {
                Some(path) => Some(
                    std::fs::read_to_string(resolve_input(path))?
                        .split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("invalid permutation entry {t:?}"))))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            let sys = if a.signal.pas_plan {
                let se = a.se.ok_or_else(|| Error::InvalidParameter("--pas-plan needs --se".into()))?;
                if permutation.is_some() {
                    return Err(Error::InvalidParameter("--permutation applies to uniform signaling only".into()));
                }
                let n_s = h.cols() / a.m.max(1) as usize;
                let k = SystematicEncoder::new(&h, &[])?.k();
                let spare = k.checked_sub(n_s * (a.m as usize).saturating_sub(1)).ok_or_else(|| {
                    Error::InfeasibleSe(format!("code dimension {k} too small for PAS on {n_s} amplitudes"))
                })?;
                let bits = ((se * n_s as f64).ceil() as usize).saturating_sub(spare);
                let comp = mb_composition_for_bits(a.m, n_s, bits)?;
                CodedModulation::pas(h, a.m, comp)?
            } else if let Some(size) = a.signal.uniform_ask {
                CodedModulation::uniform(h, log2_size(size, "ASK")?, permutation)?
            } else {
                let path = a.signal.constellation.as_ref().expect("clap enforces one signal source");
                let (c, p) = load_constellation(resolve_input(path))?;
                if !p.is_uniform() {
                    return Err(Error::InvalidParameter(
                        "shaped constellations are simulated through --pas-plan; the file must be uniform".into(),
                    ));
                }
                CodedModulation::from_constellation(h, &c, permutation)?
            };
            progress(&format!(
                "n = {}, k = {}, {} data bits per frame, {:.4} bits per channel use",
                sys.parity_check().cols(),
                sys.encoder().k(),
                sys.data_bits(),
                sys.spectral_efficiency()
            ));
            let cfg = SimConfig {
                stop: StopRule { min_frame_errors: a.min_errors, max_frames: a.max_frames },
                max_iter: a.max_iter,
                seed: cli.seed,
                noiseless: false,
            };
            let rows = monte_carlo(&sys, &parse_grid(&a.snr)?, &cfg, &mut |r| {
                progress(&format!("snr {} dB: {} frames, fer {}, ber {}", r.snr_db, r.frames, fmt_sig(r.fer, 4), fmt_sig(r.ber, 4)))
            })?;
            Ok(vec![Artifact::primary("fer", sim_csv(&rows))])
        }
        Command::Export(a) => {
            if let Some(spec) = &a.peg {
                let (n, m, dv) = parse_peg(spec)?;
                return Ok(vec![Artifact::primary("alist", ParityCheck::peg(n, m, dv, cli.seed)?.to_alist())]);
            }
            let (c, p) = if let Some(m) = a.ps {
                let snr = a.snr.ok_or_else(|| Error::InvalidParameter("--ps needs --snr".into()))?;
                let s = optimize_ps(m, &ChannelSpec::real(snr)?, parse_metric(&a.metric)?, &q)?;
                (s.constellation, s.distribution)
            } else {
                let (c, p, _) = select_input(a.uniform_ask, a.uniform_qam, a.constellation.as_ref())?;
                (c, p)
            };
            match a.format.as_str() {
                "csv" => Ok(vec![Artifact::primary("constellation", constellation_csv(&c, &p))]),
                "json" => Ok(vec![Artifact::primary("constellation", constellation_to_json(&c, &p)?)]),
                other => Err(Error::InvalidParameter(format!("unknown format {other:?} (expected csv or json)"))),
            }
        }
        Command::Replay(_) => Err(Error::InvalidParameter("replay is handled by run()".into())),
    }
}

/// Spectral efficiencies of the PAS modcods in the summary table.
pub const TABLE1_SE: [f64; 3] = [32.0 / 15.0, 16.0 / 5.0, 16.0 / 3.0];

fn derived_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Manifest path accompanying `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_else(|| "out".into());
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_outputs(cli: &Cli, argv: &[String], artifacts: &[Artifact]) -> Result<()> {
    let Some(out) = &cli.out else {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for a in artifacts.iter().filter(|a| a.suffix.is_none()) {
            lock.write_all(a.content.as_bytes())?;
        }
        return Ok(());
    };
    let mut outputs = Vec::new();
    for a in artifacts {
        let path = match a.suffix {
            None => out.clone(),
            Some(s) => derived_path(out, s),
        };
        std::fs::write(&path, &a.content)?;
        outputs.push(OutputDigest { role: a.role.into(), path, sha256: sha256_hex(a.content.as_bytes()) });
    }
    let parameters = serde_json::to_value(&cli.command)?;
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        argv: argv.to_vec(),
        parameters,
        seed: cli.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        outputs,
    };
    manifest.save(manifest_path(out))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Rates(_) => "rates",
        Command::GapSweep(_) => "gap-sweep",
        Command::OptimizeGs(_) => "optimize-gs",
        Command::OptimizePs(_) => "optimize-ps",
        Command::PasPlan(_) => "pas-plan",
        Command::Table1 => "table1",
        Command::Simulate(_) => "simulate",
        Command::Export(_) => "export",
        Command::Replay(_) => "replay",
    }
}

/// Re-executes the manifest's command line in memory and compares the
/// digests of every output. Returns the mismatching roles.
pub fn replay(manifest: &RunManifest) -> Result<Vec<String>> {
    let cli = Cli::try_parse_from(&manifest.argv).map_err(|e| Error::Parse(format!("manifest argv: {e}")))?;
    let artifacts = execute(&cli, &mut |_| {})?;
    let mut mismatched = Vec::new();
    for expected in &manifest.outputs {
        let found = artifacts.iter().find(|a| a.role == expected.role);
        if found.map(|a| sha256_hex(a.content.as_bytes())) != Some(expected.sha256.clone()) {
            mismatched.push(expected.role.clone());
        }
    }
    Ok(mismatched)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::Range(_)
        | Error::InfeasibleSe(_)
        | Error::Parse(_)
        | Error::Shape(_)
        | Error::Labeling(_)
        | Error::Feasibility(_)
        | Error::UnreachableRate { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::Replay(r) => RunManifest::load(resolve_input(&r.manifest)).and_then(|m| replay(&m)).map(|bad| {
            if bad.is_empty() {
                eprintln!("replay: all output digests match");
                0
            } else {
                eprintln!("replay: digest mismatch for {}", bad.join(", "));
                1
            }
        }),
        _ => execute(&cli, &mut |line| eprintln!("{line}")).and_then(|a| write_outputs(&cli, &argv, &a)).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

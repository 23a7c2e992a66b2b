//! `imphy` command-line front end.

mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imphy::analysis::{self, OfdmRate};
use imphy::bits;
use imphy::fmt::sig12;
use imphy::harness::{self, Experiment, ManifestEntry, RunManifest};
use imphy::ofdm::{OfdmImConfig, OfdmVariant};
use imphy::spatial::{SchemeKind, SchemeSpec};
use imphy::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "imphy", version, about = "Index-modulation link-level simulator")]
struct Cli {
    /// JSON parameter document for the command
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for Monte Carlo commands
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Write output here instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Built-in parameter set: fig2 (dmin) or fig6 (ber)
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every transmission vector of a spatial scheme
    Codebook(SchemeArgs),
    /// Bits per channel use of a spatial scheme, or bits per frame of an OFDM-IM configuration
    Rate(RateArgs),
    /// Minimum squared Euclidean distance of spatial codebooks
    Dmin(SchemeArgs),
    /// Monte Carlo bit error rate sweep
    Ber(BerArgs),
}

#[derive(Debug, Args, Default)]
struct SchemeArgs {
    /// sm, gsm, ma-sm, esm, qsm, simo or vblast
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    na: Option<usize>,
    /// Constellation order
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// OFDM variant: im, gim-i or gim-ii
    #[arg(long)]
    ofdm: Option<String>,
    /// Subcarriers per OFDM symbol (defaults to N)
    #[arg(long)]
    nf: Option<usize>,
    /// Subblock size
    #[arg(long)]
    n: Option<usize>,
    /// Active subcarriers per subblock
    #[arg(long)]
    k: Option<usize>,
    /// Cyclic prefix length
    #[arg(long)]
    cp: Option<usize>,
}

#[derive(Debug, Args)]
struct BerArgs {
    /// Antenna configuration for the fig6 preset: 2x2, 4x4 or 8x8
    #[arg(long)]
    mimo: Option<String>,
    /// Comma-separated SNR grid in dB
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    max_trials: Option<u64>,
    #[arg(long)]
    min_errors: Option<u64>,
    /// Also run the fig6 preset without the subblock interleaver
    #[arg(long)]
    both_interleave_modes: Option<bool>,
    /// Record wall time in the CSV (output is then not byte-stable)
    #[arg(long)]
    timing: bool,
    /// Run manifest path (defaults to <out>.manifest.json when --out is given)
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scheme: Option<SchemeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ofdm: Option<OfdmImConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DminDocument {
    schemes: Vec<SchemeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BerDocument {
    experiments: Vec<Experiment>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_opt<T: DeserializeOwned>(path: Option<&PathBuf>) -> Result<Option<T>> {
    path.map(|p| load(p)).transpose()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn no_preset(cli: &Cli, command: &str) -> Result<()> {
    match &cli.preset {
        Some(p) => Err(usage(format!("preset {p:?} does not apply to `{command}`"))),
        None => Ok(()),
    }
}

/// Config document (if any) with command-line flags layered on top.
fn resolve_scheme(doc: Option<SchemeSpec>, a: &SchemeArgs) -> Result<SchemeSpec> {
    let mut spec = match (doc, a.scheme) {
        (Some(d), _) => d,
        (None, Some(kind)) => SchemeSpec { kind, n_t: 1, n_a: None, m: None, constellation: None, esm_table: None },
        (None, None) => return Err(usage("give --scheme or a --config document")),
    };
    if let Some(kind) = a.scheme {
        spec.kind = kind;
    }
    if let Some(nt) = a.nt {
        spec.n_t = nt;
    }
    if let Some(na) = a.na {
        spec.n_a = Some(na);
    }
    if let Some(m) = a.m {
        spec.m = Some(m);
        spec.constellation = None;
    }
    Ok(spec)
}

fn has_scheme_flags(a: &SchemeArgs) -> bool {
    a.scheme.is_some() || a.nt.is_some() || a.na.is_some() || a.m.is_some()
}

fn cmd_codebook(cli: &Cli, a: &SchemeArgs) -> Result<String> {
    no_preset(cli, "codebook")?;
    let spec = resolve_scheme(load_opt(cli.config.as_ref())?, a)?;
    let scheme = spec.build::<f64>()?;
    let book = scheme.enumerate_codebook().map_err(|e| match e {
        Error::Capacity(m) => Error::Capacity(format!("{m}; use `rate` or `dmin` on smaller configurations instead")),
        e => e,
    })?;
    let n_t = scheme.n_t();
    let mut s = String::from("bits");
    for t in 1..=n_t {
        s.push_str(&format!(",x{t}"));
    }
    for t in 1..=n_t {
        s.push_str(&format!(",x{t}_re,x{t}_im"));
    }
    s.push('\n');
    for cw in &book {
        s.push_str(&bits::format(&cw.bits));
        for v in &cw.vector {
            s.push(',');
            s.push_str(&render::rationalized(*v));
        }
        for v in &cw.vector {
            s.push_str(&format!(",{},{}", sig12(v.re), sig12(v.im)));
        }
        s.push('\n');
    }
    Ok(s)
}

fn parse_variant(s: &str) -> Result<OfdmVariant> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| usage(format!("unknown OFDM variant {s:?}; expected im, gim-i or gim-ii")))
}

fn cmd_rate(cli: &Cli, a: &RateArgs) -> Result<String> {
    no_preset(cli, "rate")?;
    let doc: Option<RateDocument> = load_opt(cli.config.as_ref())?;
    let ofdm_flags = a.ofdm.is_some() || a.nf.is_some() || a.n.is_some() || a.k.is_some() || a.cp.is_some();
    let mut doc = doc.unwrap_or(RateDocument { scheme: None, ofdm: None });
    if ofdm_flags {
        let mut c = match doc.ofdm.take() {
            Some(c) => c,
            None => {
                let n = a.n.ok_or_else(|| usage("OFDM rate needs --n"))?;
                let m = a.scheme.m.ok_or_else(|| usage("OFDM rate needs --m"))?;
                OfdmImConfig::im(a.nf.unwrap_or(n), n, 0, m)
            }
        };
        if let Some(v) = &a.ofdm {
            c.variant = parse_variant(v)?;
        }
        if let Some(n) = a.n {
            c.n = n;
        }
        if let Some(nf) = a.nf {
            c.n_f = nf;
        }
        if let Some(k) = a.k {
            c.k = k;
        }
        if let Some(m) = a.scheme.m {
            c.m = m;
            c.constellation = None;
        }
        if let Some(cp) = a.cp {
            c.cp_len = cp;
        }
        doc.ofdm = Some(c);
    } else if has_scheme_flags(&a.scheme) || doc.scheme.is_some() {
        doc.scheme = Some(resolve_scheme(doc.scheme.take(), &a.scheme)?);
    }
    let mut s = String::from("quantity,value\n");
    match (&doc.scheme, &doc.ofdm) {
        (Some(spec), None) => {
            let scheme = spec.build::<f64>()?;
            s.push_str(&format!("scheme,{}\n", scheme.id()));
            s.push_str(&format!("spatial_bits,{}\n", scheme.spatial_bits()));
            s.push_str(&format!("symbol_bits,{}\n", scheme.symbol_bits()));
            s.push_str(&format!("bpcu,{}\n", scheme.bits_per_use()));
        }
        (None, Some(c)) => {
            let r = OfdmRate::new(c)?;
            s.push_str(&format!("scheme,{}\n", c.variant.name()));
            s.push_str(&format!("realizations,{}\n", r.realizations));
            if c.variant != OfdmVariant::GimI {
                s.push_str(&format!("index_bits,{}\n", r.index_bits));
            }
            s.push_str(&format!("subblock_bits,{}\n", r.subblock_bits));
            s.push_str(&format!("subblocks,{}\n", r.subblocks));
            s.push_str(&format!("frame_bits,{}\n", r.frame_bits));
            s.push_str(&format!("cp_factor,{}/{}\n", r.n_f, r.n_f + r.cp_len));
            s.push_str(&format!("spectral_efficiency,{}\n", sig12(r.spectral_efficiency())));
            if let (Some(b), Some(g)) = (r.im_equivalent_bits, r.gain_over_im()) {
                s.push_str(&format!("im_equivalent_bits,{b}\n"));
                s.push_str(&format!("gain_over_im_percent,{}\n", sig12(g)));
            }
        }
        (Some(_), Some(_)) => return Err(usage("rate document has both `scheme` and `ofdm`; give one")),
        (None, None) => return Err(usage("give --scheme, --ofdm or a --config document")),
    }
    Ok(s)
}

fn cmd_dmin(cli: &Cli, a: &SchemeArgs) -> Result<String> {
    let reports = match cli.preset.as_deref() {
        Some("fig2") => {
            if cli.config.is_some() || has_scheme_flags(a) {
                return Err(usage("--preset fig2 takes no scheme flags or config"));
            }
            analysis::fig2_reports()?
        }
        Some(p) => return Err(usage(format!("unknown dmin preset {p:?}; available: fig2"))),
        None => {
            let specs = match load_opt::<DminDocument>(cli.config.as_ref())? {
                Some(doc) if !has_scheme_flags(a) => doc.schemes,
                Some(_) => return Err(usage("scheme flags cannot be combined with a dmin config document")),
                None => vec![resolve_scheme(None, a)?],
            };
            specs.iter().map(|s| analysis::d_min(&s.build::<f64>()?)).collect::<Result<Vec<_>>>()?
        }
    };
    let mut buf = Vec::new();
    analysis::write_dmin_csv(&mut buf, &reports)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn fig6_document(a: &BerArgs, seed: u64) -> Result<BerDocument> {
    let n = match a.mimo.as_deref().unwrap_or("2x2") {
        "2x2" => 2,
        "4x4" => 4,
        "8x8" => 8,
        other => return Err(usage(format!("--mimo {other:?} is not one of 2x2, 4x4, 8x8"))),
    };
    let mut experiments = harness::fig6_experiments(n, harness::fig6_grid(), 10_000, seed, true);
    if a.both_interleave_modes.unwrap_or(true) {
        let mut plain = harness::fig6_experiments(n, harness::fig6_grid(), 10_000, seed, false).remove(0);
        plain.name.push_str("-no-interleave");
        experiments.push(plain);
    }
    Ok(BerDocument { experiments })
}

fn cmd_ber(cli: &Cli, a: &BerArgs) -> Result<String> {
    let seed = cli.seed;
    let mut doc = match cli.preset.as_deref() {
        Some("fig6") => {
            if cli.config.is_some() {
                return Err(usage("--preset fig6 cannot be combined with --config"));
            }
            fig6_document(a, seed.unwrap_or(0))?
        }
        Some(p) => return Err(usage(format!("unknown ber preset {p:?}; available: fig6"))),
        None => {
            if a.mimo.is_some() || a.both_interleave_modes.is_some() {
                return Err(usage("--mimo and --both-interleave-modes apply to --preset fig6"));
            }
            load_opt::<BerDocument>(cli.config.as_ref())?.ok_or_else(|| usage("ber needs --config or --preset fig6"))?
        }
    };
    for e in &mut doc.experiments {
        if let Some(s) = seed {
            e.seed = s;
        }
        if let Some(snr) = &a.snr {
            e.snr_db = snr.clone();
        }
        if let Some(t) = a.max_trials {
            e.max_trials = t;
        }
        if let Some(m) = a.min_errors {
            e.min_errors = m;
        }
        e.timing |= a.timing;
        e.validate()?;
    }
    let results = doc.experiments.iter().map(harness::run_sweep).collect::<Result<Vec<_>>>()?;
    let all: Vec<_> = results.iter().flatten().cloned().collect();
    let mut buf = Vec::new();
    harness::write_csv(&mut buf, &all, doc.experiments.iter().any(|e| e.timing))?;
    let manifest_path = a.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest_path {
        let manifest = RunManifest {
            config: &doc,
            experiments: doc
                .experiments
                .iter()
                .zip(&results)
                .map(|(e, r)| ManifestEntry { experiment: e, metadata: e.metadata(), records: r })
                .collect(),
        };
        fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    }
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Codebook(a) => cmd_codebook(cli, a)?,
        Command::Rate(a) => cmd_rate(cli, a)?,
        Command::Dmin(a) => cmd_dmin(cli, a)?,
        Command::Ber(a) => cmd_ber(cli, a)?,
    };
    emit(cli.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

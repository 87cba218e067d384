//! Experiment configuration: defaults, presets, a plain-text key=value file
//! format, and the merge order `defaults < preset < config file < flags`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use tcnoma::Scheme;

use crate::CliError;

/// Fully resolved parameters for `simulate` and `power-sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    /// Weak user's power (watts, linear). Used by `simulate`.
    pub p1: f64,
    /// Strong user's power. Used by `simulate`.
    pub p2: f64,
    pub snrs_db: Vec<f64>,
    /// `p1/p2` grid with `p1 + p2 = 1`. Used by `power-sweep`.
    pub ratios: Vec<f64>,
    /// Frames per (scheme, SNR, ratio) point.
    pub frames: usize,
    /// Information steps per frame.
    pub frame_len: usize,
    pub seed: u64,
    /// CSV destination; stdout when absent.
    pub out: Option<PathBuf>,
    /// Component-code description applied to both streams; built-in
    /// 4-state code when absent.
    pub trellis_file: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Serializes as the key=value file format accepted by
    /// [`PartialConfig::parse_key_values`]. Only the fields `kind` consumes
    /// are written (config files are per-command: `ratio` belongs to
    /// power-sweep, the `p1`/`p2` pair to simulate), so parsing the result
    /// back and resolving it for the same `kind` reproduces `self` exactly.
    pub fn to_key_values(&self, kind: ExperimentKind) -> String {
        let mut out = String::new();
        let schemes =
            self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "scheme = {schemes}");
        match kind {
            ExperimentKind::Simulate => {
                let _ = writeln!(out, "p1 = {}", self.p1);
                let _ = writeln!(out, "p2 = {}", self.p2);
            }
            ExperimentKind::PowerSweep => {
                let _ = writeln!(out, "ratio = {}", join_f64(&self.ratios));
            }
        }
        let _ = writeln!(out, "snr_db = {}", join_f64(&self.snrs_db));
        let _ = writeln!(out, "frames = {}", self.frames);
        let _ = writeln!(out, "frame_len = {}", self.frame_len);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(p) = &self.out {
            let _ = writeln!(out, "out = {}", p.display());
        }
        if let Some(p) = &self.trellis_file {
            let _ = writeln!(out, "trellis_file = {}", p.display());
        }
        out
    }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// A partially specified experiment: unset fields fall through to the next
/// layer down in the merge order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub schemes: Option<Vec<Scheme>>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub snrs_db: Option<Vec<f64>>,
    pub ratios: Option<Vec<f64>>,
    pub frames: Option<usize>,
    pub frame_len: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trellis_file: Option<PathBuf>,
    /// Only meaningful in a config file; extracted before overlaying.
    pub preset: Option<Preset>,
}

impl PartialConfig {
    /// Returns `self` with every field that `over` sets replaced by it.
    pub fn overlay(mut self, over: PartialConfig) -> PartialConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(schemes, p1, p2, snrs_db, ratios, frames, frame_len, seed, out,
            trellis_file, preset);
        self
    }

    /// Parses the plain-text config format: one `key = value` per line,
    /// `#` starts a comment, blank lines ignored. Keys mirror the flag
    /// names: scheme, p1, p2, snr_db, ratio, frames, frame_len, seed, out,
    /// trellis_file, preset.
    pub fn parse_key_values(text: &str) -> Result<PartialConfig, CliError> {
        let mut cfg = PartialConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "config line {line_no}: expected `key = value`, got `{line}`"
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str, detail: String| {
                CliError::usage(format!("config line {line_no}: bad {what}: {detail}"))
            };
            match key {
                "scheme" => {
                    cfg.schemes =
                        Some(parse_schemes(value).map_err(|e| bad("scheme list", e))?)
                }
                "p1" => cfg.p1 = Some(parse_num(value).map_err(|e| bad("p1", e))?),
                "p2" => cfg.p2 = Some(parse_num(value).map_err(|e| bad("p2", e))?),
                "snr_db" => {
                    cfg.snrs_db =
                        Some(parse_f64_list(value).map_err(|e| bad("snr_db", e))?)
                }
                "ratio" => {
                    cfg.ratios =
                        Some(parse_f64_list(value).map_err(|e| bad("ratio", e))?)
                }
                "frames" => {
                    cfg.frames = Some(parse_num(value).map_err(|e| bad("frames", e))?)
                }
                "frame_len" => {
                    cfg.frame_len =
                        Some(parse_num(value).map_err(|e| bad("frame_len", e))?)
                }
                "seed" => cfg.seed = Some(parse_num(value).map_err(|e| bad("seed", e))?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "trellis_file" => cfg.trellis_file = Some(PathBuf::from(value)),
                "preset" => {
                    cfg.preset =
                        Some(value.parse().map_err(|e: String| bad("preset", e))?)
                }
                other => {
                    return Err(CliError::usage(format!(
                        "config line {line_no}: unknown key `{other}` (expected one of \
                         scheme, p1, p2, snr_db, ratio, frames, frame_len, seed, out, \
                         trellis_file, preset)"
                    )))
                }
            }
        }
        Ok(cfg)
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| format!("`{s}`: {e}"))
}

/// Comma-separated scheme names.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Scheme>().map_err(|e| e.to_string()))
        .collect()
}

/// Numeric list syntax: either comma-separated values `12,14,16` or an
/// inclusive range `start:stop:step` (step > 0). An empty string is an
/// empty list.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range syntax is start:stop:step, got `{s}`"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| parse_num(p.trim()))
            .collect::<Result<_, String>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) {
            return Err(format!("range step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("range stop {stop} is below start {start}"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| start + k as f64 * step).collect());
    }
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_num)
        .collect()
}

/// Canned experiment parameter sets behind `--preset`: the three standard
/// characterization runs of this system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig7,
    Fig8,
    Fig9,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
        }
    }

    /// The parameters the preset pins. Anything it leaves unset falls back
    /// to the command defaults.
    pub fn partial(&self) -> PartialConfig {
        let mut p = PartialConfig::default();
        match self {
            // BER vs SNR at a light weak-user power: every scheme tracks
            // joint detection closely.
            Preset::Fig7 => {
                p.schemes = Some(vec![
                    Scheme::TcNomaJoint,
                    Scheme::TcNomaSeparate,
                    Scheme::Tcma,
                    Scheme::UcNoma,
                ]);
                p.p1 = Some(0.1);
                p.p2 = Some(1.0);
                p.snrs_db = Some(parse_f64_list("6:18:2").unwrap());
            }
            // Same sweep at a heavier weak-user power, adding the rotated
            // joint scheme; separate detection hits its interference floor.
            Preset::Fig8 => {
                p.schemes = Some(vec![
                    Scheme::TcNomaJoint,
                    Scheme::TcNomaSeparate,
                    Scheme::Tcma,
                    Scheme::UcNoma,
                    Scheme::TcNomaJointRotate,
                ]);
                p.p1 = Some(0.3);
                p.p2 = Some(1.0);
                p.snrs_db = Some(parse_f64_list("6:18:2").unwrap());
            }
            // BER vs power split under a unit sum budget for the
            // jointly-detected schemes.
            Preset::Fig9 => {
                p.schemes =
                    Some(vec![Scheme::TcNomaJoint, Scheme::UcNoma, Scheme::Tcma]);
                p.ratios = Some(parse_f64_list("0.05:0.95:0.05").unwrap());
                p.snrs_db = Some(vec![16.0, 18.0]);
            }
        }
        p
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig7" => Ok(Preset::Fig7),
            "fig8" => Ok(Preset::Fig8),
            "fig9" => Ok(Preset::Fig9),
            other => Err(format!("unknown preset `{other}` (expected fig7, fig8 or fig9)")),
        }
    }
}

/// Which experiment command a resolved config will drive; gates presets and
/// command-specific fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    PowerSweep,
}

impl ExperimentKind {
    fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::PowerSweep => "power-sweep",
        }
    }

    fn defaults(&self) -> ExperimentConfig {
        let common = ExperimentConfig {
            schemes: vec![Scheme::TcNomaJoint],
            p1: 0.1,
            p2: 1.0,
            snrs_db: parse_f64_list("6:18:2").unwrap(),
            ratios: parse_f64_list("0.05:0.95:0.05").unwrap(),
            frames: 2000,
            frame_len: 500,
            seed: 1,
            out: None,
            trellis_file: None,
        };
        match self {
            ExperimentKind::Simulate => common,
            ExperimentKind::PowerSweep => {
                ExperimentConfig { snrs_db: vec![16.0, 18.0], ..common }
            }
        }
    }

    fn allows(&self, preset: Preset) -> bool {
        matches!(
            (self, preset),
            (ExperimentKind::Simulate, Preset::Fig7 | Preset::Fig8)
                | (ExperimentKind::PowerSweep, Preset::Fig9)
        )
    }
}

/// Merges `defaults < preset < file < flags` and validates the result for
/// `kind`. The preset may come from the file or the flags; the flag wins.
pub fn resolve(
    kind: ExperimentKind,
    file: PartialConfig,
    flags: PartialConfig,
) -> Result<ExperimentConfig, CliError> {
    let preset = flags.preset.or(file.preset);
    if let Some(p) = preset {
        if !kind.allows(p) {
            let hint = match kind {
                ExperimentKind::Simulate => "fig7 or fig8",
                ExperimentKind::PowerSweep => "fig9",
            };
            return Err(CliError::usage(format!(
                "preset `{}` does not apply to `{}` (expected {hint})",
                p.name(),
                kind.name()
            )));
        }
    }

    // Command-specific fields must not be smuggled in through the other
    // command's config: a ratio grid drives power-sweep, a fixed power
    // pair drives simulate.
    let explicit = file.clone().overlay(flags.clone());
    match kind {
        ExperimentKind::Simulate if explicit.ratios.is_some() => {
            return Err(CliError::usage(
                "`ratio` configures power-sweep; simulate takes a fixed --p1/--p2 pair"
                    .into(),
            ))
        }
        ExperimentKind::PowerSweep if explicit.p1.is_some() || explicit.p2.is_some() => {
            return Err(CliError::usage(
                "power-sweep derives powers from the ratio grid with p1 + p2 = 1; \
                 --p1/--p2 configure simulate"
                    .into(),
            ))
        }
        _ => {}
    }

    let base = preset.map(|p| p.partial()).unwrap_or_default();
    let merged = base.overlay(file).overlay(flags);
    let d = kind.defaults();
    let cfg = ExperimentConfig {
        schemes: merged.schemes.unwrap_or(d.schemes),
        p1: merged.p1.unwrap_or(d.p1),
        p2: merged.p2.unwrap_or(d.p2),
        snrs_db: merged.snrs_db.unwrap_or(d.snrs_db),
        ratios: merged.ratios.unwrap_or(d.ratios),
        frames: merged.frames.unwrap_or(d.frames),
        frame_len: merged.frame_len.unwrap_or(d.frame_len),
        seed: merged.seed.unwrap_or(d.seed),
        out: merged.out.or(d.out),
        trellis_file: merged.trellis_file.or(d.trellis_file),
    };
    validate(kind, &cfg)?;
    Ok(cfg)
}

fn validate(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.schemes.is_empty() {
        return Err(CliError::usage("scheme list is empty".into()));
    }
    if cfg.snrs_db.is_empty() {
        return Err(CliError::usage(
            "SNR list is empty; pass --snr-db as a comma list (e.g. 12,16) or a \
             start:stop:step range (e.g. 6:18:2)"
                .into(),
        ));
    }
    if cfg.frames == 0 {
        return Err(CliError::usage("frames must be positive".into()));
    }
    if cfg.frame_len == 0 {
        return Err(CliError::usage("frame-len must be positive".into()));
    }
    match kind {
        ExperimentKind::Simulate => {
            if !(cfg.p1.is_finite() && cfg.p2.is_finite() && 0.0 < cfg.p1 && cfg.p1 < cfg.p2)
            {
                return Err(CliError::usage(format!(
                    "powers must satisfy 0 < p1 < p2 (weak user below strong user), \
                     got p1 = {}, p2 = {}",
                    cfg.p1, cfg.p2
                )));
            }
        }
        ExperimentKind::PowerSweep => {
            if cfg.ratios.is_empty() {
                return Err(CliError::usage("ratio grid is empty".into()));
            }
            if let Some(r) = cfg.ratios.iter().find(|r| !(0.0 < **r && **r < 1.0)) {
                return Err(CliError::usage(format!(
                    "ratios are p1/p2 with p1 < p2 and must lie in (0, 1), got {r}"
                )));
            }
        }
    }
    Ok(())
}

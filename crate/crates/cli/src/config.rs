//! TOML run configuration. Every key is optional; an empty file yields the
//! full-scale presets for all three delay classes.
//!
//! ```toml
//! scale = "desk"            # or "full"
//! seeds = [1, 2, 3]
//! workers = 4
//! connections = 10
//! duration_s = 20.0
//!
//! [wan]
//! buffers = [531, 1062, 2300]
//!
//! [traffic]
//! range_rule = "resample"
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;
use ubrsim::kernel::SimTime;
use ubrsim::network::{DelayClass, Scenario};
use ubrsim::tcp::max_advertised_window;
use ubrsim::traffic::RangeRule;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Full,
    Desk,
}

impl Scale {
    pub fn scenario(self, dc: DelayClass) -> Scenario {
        match self {
            Scale::Full => Scenario::full(dc),
            Scale::Desk => Scenario::desk(dc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scale: Option<Spanned<Scale>>,
    seeds: Option<Spanned<Vec<u64>>>,
    workers: Option<Spanned<usize>>,
    connections: Option<Spanned<u32>>,
    duration_s: Option<Spanned<f64>>,
    bottleneck_mbps: Option<Spanned<f64>>,
    access_mbps: Option<Spanned<f64>>,
    threshold_r: Option<Spanned<f64>>,
    threshold_z: Option<Spanned<f64>>,
    wan: Option<RawClass>,
    meo: Option<RawClass>,
    geo: Option<RawClass>,
    traffic: Option<RawTraffic>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    buffers: Option<Spanned<Vec<u32>>>,
    mss: Option<Spanned<u32>>,
    delay_ms: Option<Spanned<f64>>,
    window_scale: Option<Spanned<u8>>,
    rcv_buffer: Option<Spanned<u64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawRangeRule {
    Clamp,
    Resample,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraffic {
    batch_period_s: Option<Spanned<f64>>,
    gap_min_s: Option<Spanned<f64>>,
    gap_max_s: Option<Spanned<f64>>,
    request_bytes: Option<Spanned<u32>>,
    batch_mean: Option<Spanned<f64>>,
    batch_min: Option<Spanned<u32>>,
    batch_max: Option<Spanned<u32>>,
    size_index_mean: Option<Spanned<f64>>,
    phase_jitter: Option<bool>,
    range_rule: Option<RawRangeRule>,
}

/// Resolved configuration: one scenario per delay class plus run options.
#[derive(Debug, Clone)]
pub struct Config {
    pub scale: Scale,
    pub seeds: Vec<u64>,
    pub workers: Option<usize>,
    scenarios: [Scenario; 3],
}

impl Default for Config {
    fn default() -> Self {
        Self::preset(Scale::Full)
    }
}

struct Checker<'a> {
    src: &'a str,
}

impl Checker<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn get<T: Copy>(
        &self,
        v: &Option<Spanned<T>>,
        ok: impl Fn(T) -> bool,
        what: &str,
    ) -> std::result::Result<Option<T>, ConfigError> {
        match v {
            None => Ok(None),
            Some(s) if ok(*s.get_ref()) => Ok(Some(*s.get_ref())),
            Some(s) => Err(ConfigError {
                line: Some(self.line(s.span().start)),
                message: what.to_string(),
            }),
        }
    }

    fn fail<T>(&self, s: &Spanned<T>, what: impl Into<String>) -> ConfigError {
        ConfigError {
            line: Some(self.line(s.span().start)),
            message: what.into(),
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn fraction(x: f64) -> bool {
    x.is_finite() && x > 0.0 && x <= 1.0
}

impl Config {
    pub fn preset(scale: Scale) -> Self {
        Self {
            scale,
            seeds: vec![1],
            workers: None,
            scenarios: DelayClass::ALL.map(|dc| scale.scenario(dc)),
        }
    }

    pub fn scenario(&self, dc: DelayClass) -> &Scenario {
        &self.scenarios[dc as usize]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&src).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Parses `src`, with `scale` (when given) replacing the file's preset.
    pub fn parse_with_scale(
        src: &str,
        scale: Option<Scale>,
    ) -> std::result::Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| {
            let c = Checker { src };
            ConfigError {
                line: e.span().map(|s| c.line(s.start)),
                message: e.message().to_string(),
            }
        })?;
        let c = Checker { src };

        let scale =
            scale.unwrap_or_else(|| raw.scale.as_ref().map(|s| *s.get_ref()).unwrap_or_default());
        let mut cfg = Self::preset(scale);
        if let Some(s) = &raw.seeds {
            if s.get_ref().is_empty() {
                return Err(c.fail(s, "seeds must list at least one seed"));
            }
            cfg.seeds = s.get_ref().clone();
        }
        cfg.workers = c.get(&raw.workers, |w| w >= 1, "workers must be at least 1")?;

        let connections = c.get(
            &raw.connections,
            |n| n >= 1,
            "connections must be at least 1",
        )?;
        let duration = c.get(&raw.duration_s, positive, "duration_s must be positive")?;
        let bottleneck = c.get(
            &raw.bottleneck_mbps,
            positive,
            "bottleneck_mbps must be positive",
        )?;
        let access = c.get(&raw.access_mbps, positive, "access_mbps must be positive")?;
        let r = c.get(&raw.threshold_r, fraction, "threshold_r must lie in (0, 1]")?;
        let z = c.get(&raw.threshold_z, fraction, "threshold_z must lie in (0, 1]")?;
        let traffic = raw.traffic.unwrap_or_default();

        for (dc, class) in DelayClass::ALL
            .into_iter()
            .zip([&raw.wan, &raw.meo, &raw.geo])
        {
            let sc = &mut cfg.scenarios[dc as usize];
            if let Some(n) = connections {
                sc.connections = n;
            }
            if let Some(d) = duration {
                sc.duration = SimTime::from_secs_f64(d);
            }
            if let Some(b) = bottleneck {
                sc.bottleneck_bps = b * 1e6;
            }
            if let Some(a) = access {
                sc.access_bps = a * 1e6;
            }
            if let Some(r) = r {
                sc.threshold_r = r;
            }
            if let Some(z) = z {
                sc.threshold_z = z;
            }
            if let Some(class) = class {
                apply_class(&c, sc, class)?;
            }
            apply_traffic(&c, sc, &traffic)?;
            sc.validate().map_err(|e| ConfigError {
                line: None,
                message: format!("{}: {e}", dc.label()),
            })?;
        }
        Ok(cfg)
    }

    pub fn parse(src: &str) -> std::result::Result<Self, ConfigError> {
        Self::parse_with_scale(src, None)
    }
}

fn apply_class(
    c: &Checker,
    sc: &mut Scenario,
    class: &RawClass,
) -> std::result::Result<(), ConfigError> {
    if let Some(b) = &class.buffers {
        let v = b.get_ref();
        if v.len() != 3 {
            return Err(c.fail(
                b,
                format!("buffers needs 3 sizes (0.5, 1 and 2 RTT), got {}", v.len()),
            ));
        }
        if v.contains(&0) {
            return Err(c.fail(b, "buffer sizes must be positive"));
        }
        sc.buffer_cells = [v[0], v[1], v[2]];
    }
    if let Some(m) = c.get(
        &class.mss,
        |m| (1..=65_495).contains(&m),
        "mss must lie in 1..=65495",
    )? {
        sc.mss = m;
    }
    if let Some(d) = c.get(
        &class.delay_ms,
        |d| d.is_finite() && d >= 0.0,
        "delay_ms must be non-negative",
    )? {
        sc.bottleneck_delay = SimTime::from_secs_f64(d / 1e3);
    }
    if let Some(w) = c.get(
        &class.window_scale,
        |w| w <= 14,
        "window_scale must be at most 14",
    )? {
        sc.window_scale = w;
        sc.rcv_buffer = max_advertised_window(w);
    }
    if let Some(b) = c.get(&class.rcv_buffer, |b| b > 0, "rcv_buffer must be positive")? {
        sc.rcv_buffer = b;
    }
    Ok(())
}

fn apply_traffic(
    c: &Checker,
    sc: &mut Scenario,
    t: &RawTraffic,
) -> std::result::Result<(), ConfigError> {
    let p = &mut sc.traffic;
    if let Some(v) = c.get(
        &t.batch_period_s,
        positive,
        "batch_period_s must be positive",
    )? {
        p.batch_period = SimTime::from_secs_f64(v);
    }
    let non_neg = |x: f64| x.is_finite() && x >= 0.0;
    if let Some(v) = c.get(&t.gap_min_s, non_neg, "gap_min_s must be non-negative")? {
        p.gap_min_s = v;
    }
    if let Some(v) = c.get(&t.gap_max_s, non_neg, "gap_max_s must be non-negative")? {
        p.gap_max_s = v;
    }
    if let Some(v) = c.get(
        &t.request_bytes,
        |b| b > 0,
        "request_bytes must be positive",
    )? {
        p.request_bytes = v;
    }
    if let Some(v) = c.get(&t.batch_mean, positive, "batch_mean must be positive")? {
        p.batch_mean = v;
    }
    if let Some(v) = c.get(&t.batch_min, |b| b >= 1, "batch_min must be at least 1")? {
        p.batch_min = v;
    }
    if let Some(v) = c.get(&t.batch_max, |b| b >= 1, "batch_max must be at least 1")? {
        p.batch_max = v;
    }
    if let Some(v) = c.get(
        &t.size_index_mean,
        positive,
        "size_index_mean must be positive",
    )? {
        p.size_index_mean = v;
    }
    if let Some(j) = t.phase_jitter {
        p.phase_jitter = j;
    }
    if let Some(r) = t.range_rule {
        p.range_rule = match r {
            RawRangeRule::Clamp => RangeRule::Clamp,
            RawRangeRule::Resample => RangeRule::Resample,
        };
    }
    if p.batch_min > p.batch_max {
        let at = t.batch_min.as_ref().or(t.batch_max.as_ref());
        return Err(match at {
            Some(s) => c.fail(s, "batch_min exceeds batch_max"),
            None => ConfigError {
                line: None,
                message: "batch_min exceeds batch_max".into(),
            },
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ubrsim::network::BufferLevel;

    #[test]
    fn empty_file_gives_full_presets() {
        let cfg = Config::parse("").unwrap();
        for dc in DelayClass::ALL {
            assert_eq!(cfg.scenario(dc), &Scenario::full(dc));
        }
        assert_eq!(cfg.seeds, vec![1]);
    }

    #[test]
    fn connections_override() {
        let cfg = Config::parse("connections = 10\n").unwrap();
        assert_eq!(cfg.scenario(DelayClass::Geo).connections, 10);
        assert_eq!(
            cfg.scenario(DelayClass::Geo).buffer(BufferLevel::TwoRtt),
            116_760
        );
    }

    #[test]
    fn desk_scale() {
        let cfg = Config::parse("scale = \"desk\"\n").unwrap();
        assert_eq!(
            cfg.scenario(DelayClass::Wan),
            &Scenario::desk(DelayClass::Wan)
        );
    }

    #[test]
    fn zero_buffer_rejected_with_line() {
        let e = Config::parse("seeds = [4]\n\n[meo]\nbuffers = [0, 21230, 42460]\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("positive"), "{e}");
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let e = Config::parse("connections = 10\nconection = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2), "{e}");
    }

    #[test]
    fn malformed_value_has_line() {
        let e = Config::parse("\n\nduration_s = \"long\"\n").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
        let e = Config::parse("duration_s = -1.0\n").unwrap_err();
        assert_eq!(e.line, Some(1), "{e}");
    }

    #[test]
    fn traffic_overrides() {
        let cfg = Config::parse("[traffic]\nrange_rule = \"resample\"\nbatch_max = 7\n").unwrap();
        let t = &cfg.scenario(DelayClass::Wan).traffic;
        assert_eq!(t.range_rule, RangeRule::Resample);
        assert_eq!(t.batch_max, 7);
        assert!(Config::parse("[traffic]\nbatch_min = 8\nbatch_max = 7\n").is_err());
    }

    #[test]
    fn cross_field_errors_surface() {
        let e = Config::parse("bottleneck_mbps = 500.0\n").unwrap_err();
        assert!(e.message.contains("access"), "{e}");
    }
}

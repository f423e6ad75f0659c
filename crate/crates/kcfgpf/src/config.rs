//! Flat `key=value` tracker configuration files.
//!
//! Keys are the [`TrackerConfig`] field names. Blank lines and lines
//! starting with `#` are ignored. Unknown keys are rejected so that typos
//! do not silently fall back to defaults. The seed is deliberately not a
//! key: it comes from the command line only.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use kcfgpf_core::corrfilter::FilterKind;
use kcfgpf_core::ensemble::WeightRule;
use kcfgpf_core::tracker::GateOverride;
use kcfgpf_core::TrackerConfig;

use crate::{Error, Result};

pub fn parse_kernel(v: &str) -> Option<FilterKind> {
    match v {
        "linear" => Some(FilterKind::Linear),
        "gaussian" => Some(FilterKind::GaussianKernel),
        _ => None,
    }
}

fn number<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("invalid value {v:?}"))
}

fn set(cfg: &mut TrackerConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    match key {
        "padding" => cfg.padding = number(v)?,
        "kernel_sigma" => cfg.kernel_sigma = number(v)?,
        "adaptation_rate" => cfg.adaptation_rate = number(v)?,
        "sample_count" => cfg.sample_count = number(v)?,
        "theta" => cfg.theta = number(v)?,
        "rho" => cfg.rho = number(v)?,
        "lambda" => cfg.lambda = number(v)?,
        "cell_size" => cfg.cell_size = number(v)?,
        "max_experts" => cfg.max_experts = number(v)?,
        "beta_f" => cfg.beta_f = number(v)?,
        "beta_a" => cfg.beta_a = number(v)?,
        "sigma_l" => cfg.sigma_l = number(v)?,
        "sigma_l_hog" => cfg.sigma_l_hog = number(v)?,
        "template_w" => cfg.template_w = number(v)?,
        "template_h" => cfg.template_h = number(v)?,
        "scale_min" => cfg.scale_min = number(v)?,
        "scale_max" => cfg.scale_max = number(v)?,
        "label_sigma_factor" => cfg.label_sigma_factor = number(v)?,
        "init_position_frac" => cfg.init_position_frac = number(v)?,
        "init_scale_std" => cfg.init_scale_std = number(v)?,
        "fallback_position_std" => cfg.fallback_position_std = number(v)?,
        "fallback_scale_std" => cfg.fallback_scale_std = number(v)?,
        "process_position_std" => cfg.process_position_std = number(v)?,
        "process_scale_std" => cfg.process_scale_std = number(v)?,
        "kernel" => cfg.kernel = parse_kernel(v).ok_or("kernel must be linear or gaussian")?,
        "weight_rule" => {
            cfg.weight_rule = match v {
                "peak_times_apce" => WeightRule::PeakTimesApce,
                "peak" => WeightRule::Peak,
                _ => return Err("weight_rule must be peak_times_apce or peak".into()),
            }
        }
        "gate" => {
            cfg.gate_override = match v {
                "auto" => GateOverride::None,
                "pass" => GateOverride::AlwaysPass,
                "fail" => GateOverride::AlwaysFail,
                _ => return Err("gate must be auto, pass or fail".into()),
            }
        }
        "seed" => return Err("the seed is set with --seed, not in the config file".into()),
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Applies the settings in `text` on top of `base`. Line numbers in errors
/// are 1-based; `path` only labels them.
pub fn parse_config(text: &str, base: TrackerConfig, path: &Path) -> Result<TrackerConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
        set(&mut cfg, key.trim(), value.trim()).map_err(|m| Error::parse(path, i + 1, m))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrackerConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, TrackerConfig::default(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<TrackerConfig> {
        parse_config(text, TrackerConfig::default(), Path::new("test.cfg"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse("# nothing\n\n").unwrap(), TrackerConfig::default());
    }

    #[test]
    fn values_are_applied() {
        let cfg = parse("sample_count = 50\ntheta=0.5\nkernel=linear\ngate=fail\n").unwrap();
        assert_eq!(cfg.sample_count, 50);
        assert_eq!(cfg.theta, 0.5);
        assert_eq!(cfg.kernel, FilterKind::Linear);
        assert_eq!(cfg.gate_override, GateOverride::AlwaysFail);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        match parse("theta=0.5\nthetta=0.4\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("thetta"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_is_not_a_config_key() {
        assert!(parse("seed=3\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse("theta=abc\n").is_err());
        assert!(parse("theta=1.5\n").is_err());
        assert!(parse("no equals sign\n").is_err());
    }
}

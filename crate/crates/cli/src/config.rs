//! Flow configuration from flags, an optional TOML file and defaults, in
//! that order of precedence.

use std::path::Path;

use elastica::{Backend, FlowConfig, Integrator};
use serde::Deserialize;

use crate::CliError;

/// Keys accepted in a `--config` file; all optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda: Option<f64>,
    pub backend: Option<Backend>,
    pub integrator: Option<IntegratorKind>,
    pub dt: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub grad_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub snapshot_stride: Option<usize>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    Rk4,
    Rk45,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    /// Overlays `top` on `self`: every key set in `top` wins.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        ConfigFile {
            lambda: top.lambda.or(self.lambda),
            backend: top.backend.or(self.backend),
            integrator: top.integrator.or(self.integrator),
            dt: top.dt.or(self.dt),
            rel_tol: top.rel_tol.or(self.rel_tol),
            abs_tol: top.abs_tol.or(self.abs_tol),
            dt_min: top.dt_min.or(self.dt_min),
            dt_max: top.dt_max.or(self.dt_max),
            grad_tol: top.grad_tol.or(self.grad_tol),
            t_max: top.t_max.or(self.t_max),
            snapshot_stride: top.snapshot_stride.or(self.snapshot_stride),
            max_steps: top.max_steps.or(self.max_steps),
        }
    }

    /// Fills unset keys from the built-in defaults and validates.
    pub fn resolve(&self) -> Result<FlowConfig, CliError> {
        let base = FlowConfig::default();
        let (rel0, abs0, min0, max0) = match base.integrator {
            Integrator::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                dt_min,
                dt_max,
            } => (rel_tol, abs_tol, dt_min, dt_max),
            Integrator::FixedRk4 { .. } => unreachable!("default integrator is adaptive"),
        };
        let kind = self.integrator.unwrap_or(match self.dt {
            Some(_) => IntegratorKind::Rk4,
            None => IntegratorKind::Rk45,
        });
        let integrator = match kind {
            IntegratorKind::Rk4 => Integrator::FixedRk4 {
                dt: self
                    .dt
                    .ok_or_else(|| CliError::Usage("the rk4 integrator needs --dt".into()))?,
            },
            IntegratorKind::Rk45 => Integrator::AdaptiveRk45 {
                rel_tol: self.rel_tol.unwrap_or(rel0),
                abs_tol: self.abs_tol.unwrap_or(abs0),
                dt_min: self.dt_min.unwrap_or(min0),
                dt_max: self.dt_max.unwrap_or(max0),
            },
        };
        let config = FlowConfig {
            lambda: self.lambda.unwrap_or(base.lambda),
            backend: self.backend.unwrap_or(base.backend),
            integrator,
            stop_grad_tol: self.grad_tol.unwrap_or(base.stop_grad_tol),
            t_max: self.t_max.unwrap_or(base.t_max),
            snapshot_stride: self.snapshot_stride.unwrap_or(base.snapshot_stride),
            max_steps: self.max_steps.unwrap_or(base.max_steps),
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file: ConfigFile =
            toml::from_str("lambda = 2.0\nt_max = 5.0\nbackend = \"kernel\"").unwrap();
        let flags = ConfigFile {
            t_max: Some(7.0),
            ..ConfigFile::default()
        };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!(c.lambda, 2.0);
        assert_eq!(c.t_max, 7.0);
        assert_eq!(c.backend, Backend::Kernel);
        assert_eq!(c.stop_grad_tol, FlowConfig::default().stop_grad_tol);
    }

    #[test]
    fn dt_alone_selects_rk4() {
        let c = ConfigFile {
            dt: Some(0.1),
            ..ConfigFile::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(c.integrator, Integrator::FixedRk4 { dt: 0.1 });
    }

    #[test]
    fn unknown_keys_and_missing_dt_rejected() {
        assert!(toml::from_str::<ConfigFile>("lamda = 1.0").is_err());
        let bad = ConfigFile {
            integrator: Some(IntegratorKind::Rk4),
            ..ConfigFile::default()
        };
        assert!(matches!(bad.resolve(), Err(CliError::Usage(_))));
    }
}

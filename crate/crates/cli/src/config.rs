//! JSON configuration shared by all subcommands.

use pwlcycle_core::canonical::{check_sewing, lienard_parameters, CanonicalParams, RawSystem};
use pwlcycle_core::sweep::SweepConfig;
use pwlcycle_core::{SewingStatus, SewingVerdict, Tolerances};
use serde::Deserialize;

/// Top-level config document. Exactly one of `raw` / `canonical` must be
/// present; `tolerances` and `sweep` are optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub raw: Option<RawSystem>,
    pub canonical: Option<CanonicalParams>,
    pub tolerances: Option<Tolerances>,
    pub sweep: Option<SweepConfig>,
}

pub struct ResolvedSystem {
    pub params: CanonicalParams,
    pub verdict: SewingVerdict,
}

impl Config {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: Config = serde_json::from_str(&text)
            .map_err(|e| format!("malformed config {}: {e}", path.display()))?;
        match (&config.raw, &config.canonical) {
            (Some(_), Some(_)) => {
                Err("config must contain exactly one of `raw` or `canonical`, not both".into())
            }
            (None, None) => Err("config must contain one of `raw` or `canonical`".into()),
            _ => Ok(config),
        }
    }

    /// Final tolerance record: `PWLCYCLE_TOL` (a multiplicative factor on the
    /// defaults) takes precedence over the config block.
    pub fn tolerances(&self) -> Result<Tolerances, String> {
        if let Ok(raw) = std::env::var("PWLCYCLE_TOL") {
            let factor: f64 = raw
                .parse()
                .map_err(|_| format!("PWLCYCLE_TOL must be a number, got {raw:?}"))?;
            if !(factor.is_finite() && factor > 0.0) {
                return Err(format!("PWLCYCLE_TOL must be positive and finite, got {raw}"));
            }
            return Ok(Tolerances::scaled(factor));
        }
        Ok(self.tolerances.unwrap_or_default())
    }

    /// Canonical parameters plus the sewing verdict. Raw systems are gated
    /// and reduced; canonical input is sewing by construction.
    pub fn resolve(&self, tol: &Tolerances) -> Result<ResolvedSystem, SewingVerdict> {
        if let Some(raw) = &self.raw {
            let verdict = check_sewing(raw, tol);
            if verdict.status != SewingStatus::Sewing {
                return Err(verdict);
            }
            Ok(ResolvedSystem {
                params: lienard_parameters(raw),
                verdict,
            })
        } else {
            let params = self.canonical.expect("validated at load");
            Ok(ResolvedSystem {
                params,
                verdict: SewingVerdict {
                    status: SewingStatus::Sewing,
                    detail: "canonical parameters given directly".into(),
                },
            })
        }
    }
}

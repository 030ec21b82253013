use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BtpScheme, ConstantScheme, FuzzyCommitment, LinearCode, PlaintextScheme, RotationScheme};
use crate::error::{BtpError, Result};
use crate::population::FeatureElement;

/// Names accepted by [`build_scheme`].
pub const SCHEME_NAMES: [&str; 5] = ["fc", "rot", "plain", "accept-all", "reject-all"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    /// Generator rows as bitstrings. Without it, `[7, 4]` selects the
    /// Hamming code and `[n, 1]` the repetition code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<FeatureElement>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeConfig>,
    /// Comparison threshold of the `rot` and `plain` schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<u32>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig { scheme: "fc".into(), code: Some(CodeConfig { n: 7, k: 4, t: None, generator: None }), tau: None }
    }
}

const DEFAULT_SCHEME_TAU: u32 = 1;

impl CodeConfig {
    pub fn build(&self) -> Result<LinearCode> {
        let code = match &self.generator {
            Some(rows) => LinearCode::new(rows.clone(), self.t)?,
            None => match (self.n, self.k) {
                (7, 4) => LinearCode::hamming_7_4(),
                (n, 1) => LinearCode::repetition(n)?,
                (n, k) => return Err(BtpError::config(format!("no built-in [{n}, {k}] code; supply generator rows"))),
            },
        };
        if (code.n(), code.k()) != (self.n, self.k) {
            return Err(BtpError::config(format!(
                "generator spans a [{}, {}] code but [{}, {}] was declared",
                code.n(),
                code.k(),
                self.n,
                self.k
            )));
        }
        if let Some(t) = self.t {
            if t != code.t() {
                return LinearCode::new(code.generator().to_vec(), Some(t));
            }
        }
        Ok(code)
    }
}

/// Builds a scheme for feature dimension `n` from its registry name.
pub fn build_scheme(cfg: &SchemeConfig, n: usize) -> Result<Arc<dyn BtpScheme>> {
    let tau = cfg.tau.unwrap_or(DEFAULT_SCHEME_TAU);
    let scheme: Arc<dyn BtpScheme> = match cfg.scheme.as_str() {
        "fc" => {
            let code = match &cfg.code {
                Some(c) => c.build()?,
                None => LinearCode::hamming_7_4(),
            };
            if code.n() != n {
                return Err(BtpError::config(format!("fuzzy commitment code length {} differs from feature dimension {n}", code.n())));
            }
            Arc::new(FuzzyCommitment::new(code))
        }
        "rot" => Arc::new(RotationScheme::new(n, tau)?),
        "plain" => Arc::new(PlaintextScheme::new(n, tau)?),
        "accept-all" => Arc::new(ConstantScheme::new(n, true)?),
        "reject-all" => Arc::new(ConstantScheme::new(n, false)?),
        other => return Err(BtpError::config(format!("unknown scheme {other:?}; expected one of {}", SCHEME_NAMES.join(", ")))),
    };
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_every_registered_scheme() {
        for name in SCHEME_NAMES {
            let cfg = SchemeConfig { scheme: name.into(), ..Default::default() };
            let scheme = build_scheme(&cfg, 7).unwrap();
            assert_eq!(scheme.name(), name);
            assert_eq!(scheme.dimension(), 7);
        }
    }

    #[test]
    fn rejects_unknown_names_and_mismatched_codes() {
        let unknown = SchemeConfig { scheme: "bch".into(), ..Default::default() };
        assert!(matches!(build_scheme(&unknown, 7), Err(BtpError::Config(_))));
        assert!(matches!(build_scheme(&SchemeConfig::default(), 8), Err(BtpError::Config(_))));
        let odd = SchemeConfig { code: Some(CodeConfig { n: 15, k: 11, t: None, generator: None }), ..Default::default() };
        assert!(build_scheme(&odd, 15).is_err());
    }

    #[test]
    fn parses_json_with_generator() {
        let json = r#"{"scheme": "fc", "code": {"n": 7, "k": 4, "generator": ["1000110", "0100101", "0010011", "0001111"]}}"#;
        let cfg: SchemeConfig = serde_json::from_str(json).unwrap();
        let scheme = build_scheme(&cfg, 7).unwrap();
        assert_eq!(scheme.linear_code().unwrap(), &LinearCode::hamming_7_4());
        let repetition: SchemeConfig = serde_json::from_str(r#"{"scheme": "fc", "code": {"n": 5, "k": 1}}"#).unwrap();
        assert_eq!(build_scheme(&repetition, 5).unwrap().linear_code().unwrap().t(), 2);
    }
}

//! The BTP algorithm contract `(Gen, PIE, PIR, PIC)`, Λ-subsets of
//! protected templates, and the reference schemes.

mod code;
mod constant;
mod fuzzy;
mod plaintext;
mod registry;
mod rotation;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{BtpError, Result};
use crate::population::{hamming_distance, FeatureElement};

pub use code::LinearCode;
pub use constant::ConstantScheme;
pub use fuzzy::{sha256_128, DigestFn, FuzzyCommitment};
pub use plaintext::PlaintextScheme;
pub use registry::{build_scheme, CodeConfig, SchemeConfig, SCHEME_NAMES};
pub use rotation::RotationScheme;

/// Pseudonymous identifier, either stored at enrollment (`pi`) or rebuilt
/// at verification (`pi'`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Identifier {
    Bits(FeatureElement),
    Digest([u8; 16]),
    /// Returned by PIR when no identifier can be rebuilt. Never produced by
    /// PIE and never matches anything.
    Reject,
}

/// Auxiliary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuxData {
    Bits(FeatureElement),
    Offset(u32),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProtectedTemplate {
    pub pi: Identifier,
    pub alpha: AuxData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Match,
    NonMatch,
}

impl Decision {
    pub fn is_match(self) -> bool {
        self == Decision::Match
    }

    pub fn from_bool(matched: bool) -> Self {
        if matched {
            Decision::Match
        } else {
            Decision::NonMatch
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Pi,
    Ad,
}

/// A nonempty subset Λ of `{PI, AD}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LambdaSet {
    Pi,
    Ad,
    PiAd,
}

impl LambdaSet {
    pub const ALL: [LambdaSet; 3] = [LambdaSet::Pi, LambdaSet::Ad, LambdaSet::PiAd];

    pub fn from_members(members: &[Factor]) -> Result<Self> {
        let pi = members.contains(&Factor::Pi);
        let ad = members.contains(&Factor::Ad);
        match (pi, ad) {
            (true, true) => Ok(LambdaSet::PiAd),
            (true, false) => Ok(LambdaSet::Pi),
            (false, true) => Ok(LambdaSet::Ad),
            (false, false) => Err(BtpError::contract("the leaked subset Λ must be nonempty")),
        }
    }

    pub fn contains(self, factor: Factor) -> bool {
        matches!((self, factor), (LambdaSet::PiAd, _) | (LambdaSet::Pi, Factor::Pi) | (LambdaSet::Ad, Factor::Ad))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LambdaSet::Pi => "pi",
            LambdaSet::Ad => "ad",
            LambdaSet::PiAd => "pi+ad",
        }
    }
}

impl fmt::Display for LambdaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LambdaSet {
    type Err = BtpError;

    fn from_str(s: &str) -> Result<Self> {
        let mut members = Vec::new();
        for part in s.split('+').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "pi" => members.push(Factor::Pi),
                "ad" => members.push(Factor::Ad),
                other => return Err(BtpError::config(format!("unknown factor {other:?} in Λ = {s:?}"))),
            }
        }
        LambdaSet::from_members(&members)
    }
}

impl Serialize for LambdaSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LambdaSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The part of a protected template handed to an adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LambdaView {
    pub pi: Option<Identifier>,
    pub alpha: Option<AuxData>,
}

impl LambdaView {
    pub fn lambda(&self) -> LambdaSet {
        match (self.pi.is_some(), self.alpha.is_some()) {
            (true, true) => LambdaSet::PiAd,
            (true, false) => LambdaSet::Pi,
            (false, true) => LambdaSet::Ad,
            (false, false) => unreachable!("views are built from nonempty Λ"),
        }
    }

    /// Projects an existing view further. Fails if `lambda` asks for a
    /// factor the view does not carry.
    pub fn project(&self, lambda: LambdaSet) -> Result<LambdaView> {
        let pi = if lambda.contains(Factor::Pi) { Some(self.pi.ok_or_else(|| BtpError::contract("view carries no PI"))?) } else { None };
        let alpha =
            if lambda.contains(Factor::Ad) { Some(self.alpha.ok_or_else(|| BtpError::contract("view carries no AD"))?) } else { None };
        Ok(LambdaView { pi, alpha })
    }

    /// The full template, when both factors are present.
    pub fn template(&self) -> Option<ProtectedTemplate> {
        Some(ProtectedTemplate { pi: self.pi?, alpha: self.alpha? })
    }
}

/// `(pi, alpha)_Λ`.
pub fn lambda_project(pt: &ProtectedTemplate, lambda: LambdaSet) -> LambdaView {
    LambdaView { pi: lambda.contains(Factor::Pi).then_some(pt.pi), alpha: lambda.contains(Factor::Ad).then_some(pt.alpha) }
}

/// A biometric template protection algorithm.
///
/// `pie` is randomized and must take all of its randomness from `rng`;
/// `pir` and `pic` are deterministic. `pie_outcomes` enumerates the PIE
/// distribution exactly and backs every exact oracle in
/// [`crate::metrics`].
pub trait BtpScheme: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Feature dimension `n` the scheme accepts.
    fn dimension(&self) -> usize;

    fn pie(&self, x: &FeatureElement, rng: &mut dyn RngCore) -> Result<ProtectedTemplate>;

    fn pir(&self, alpha: &AuxData, probe: &FeatureElement) -> Result<Identifier>;

    fn pic(&self, reference: &Identifier, probe: &Identifier) -> Decision;

    /// All `(probability, template)` outcomes of `pie(x)`.
    fn pie_outcomes(&self, x: &FeatureElement) -> Result<Vec<(f64, ProtectedTemplate)>>;

    /// Declared: `d(x, x') <= tau` guarantees a match for templates of `x`.
    /// [`check_threshold_compatibility`] verifies the claim exhaustively.
    fn threshold_compatible(&self, tau: u32) -> bool;

    /// Recovers a feature element from a view, when the scheme is publicly
    /// invertible on that view.
    fn invert(&self, _view: &LambdaView) -> Option<FeatureElement> {
        None
    }

    /// The error-correcting code behind the scheme, if any.
    fn linear_code(&self) -> Option<&LinearCode> {
        None
    }

    /// `PIC(pi, PIR(alpha, probe))`.
    fn verify(&self, pt: &ProtectedTemplate, probe: &FeatureElement) -> Result<Decision> {
        Ok(self.pic(&pt.pi, &self.pir(&pt.alpha, probe)?))
    }
}

pub(crate) fn check_dimension(expected: usize, x: &FeatureElement) -> Result<()> {
    if x.len() != expected {
        return Err(BtpError::Dimension { expected, actual: x.len() });
    }
    Ok(())
}

/// Largest dimension for which the exhaustive scheme checks run.
pub const EXHAUSTIVE_CHECK_MAX_N: usize = 12;

/// Exhaustively checks that every template of every `x` accepts every
/// probe within distance `tau` of `x`. Returns the first counterexample.
pub fn check_threshold_compatibility(scheme: &dyn BtpScheme, tau: u32) -> Result<Option<(FeatureElement, FeatureElement)>> {
    let n = scheme.dimension();
    if n > EXHAUSTIVE_CHECK_MAX_N {
        return Err(BtpError::Mode(format!("exhaustive check needs n <= {EXHAUSTIVE_CHECK_MAX_N}, got {n}")));
    }
    let ball: Vec<FeatureElement> = FeatureElement::all(n)?.filter(|e| e.weight() <= tau).collect();
    for x in FeatureElement::all(n)? {
        for (_, pt) in scheme.pie_outcomes(&x)? {
            for e in &ball {
                let probe = x.xor(e)?;
                if !scheme.verify(&pt, &probe)?.is_match() {
                    return Ok(Some((x, probe)));
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustively checks that every template of `x` accepts `x` itself.
/// Returns the first `x` for which it does not.
pub fn check_self_match(scheme: &dyn BtpScheme) -> Result<Option<FeatureElement>> {
    Ok(check_threshold_compatibility(scheme, 0)?.map(|(x, _)| x))
}

/// Threshold test shared by the bit-vector schemes.
pub(crate) fn threshold_pic(reference: &Identifier, probe: &Identifier, tau: u32) -> Decision {
    match (reference, probe) {
        (Identifier::Bits(a), Identifier::Bits(b)) => Decision::from_bool(hamming_distance(a, b).map(|d| d <= tau).unwrap_or(false)),
        _ => Decision::NonMatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt() -> ProtectedTemplate {
        ProtectedTemplate { pi: Identifier::Digest([7; 16]), alpha: AuxData::Bits("0110".parse().unwrap()) }
    }

    #[test]
    fn projection_equations() {
        let pt = pt();
        assert_eq!(lambda_project(&pt, LambdaSet::PiAd).template(), Some(pt));
        let pi_only = lambda_project(&pt, LambdaSet::Pi);
        assert_eq!(pi_only.pi, Some(pt.pi));
        assert_eq!(pi_only.alpha, None);
        let ad_only = lambda_project(&pt, LambdaSet::Ad);
        assert_eq!(ad_only.pi, None);
        assert_eq!(ad_only.alpha, Some(pt.alpha));
    }

    #[test]
    fn empty_lambda_is_rejected() {
        assert!(matches!(LambdaSet::from_members(&[]), Err(BtpError::Contract(_))));
        assert!("".parse::<LambdaSet>().is_err());
        assert!("pi+xx".parse::<LambdaSet>().is_err());
        assert_eq!("AD+pi".parse::<LambdaSet>().unwrap(), LambdaSet::PiAd);
    }

    #[test]
    fn projection_is_idempotent() {
        let pt = pt();
        for lambda in LambdaSet::ALL {
            let once = lambda_project(&pt, lambda);
            assert_eq!(once.project(lambda).unwrap(), once);
            assert_eq!(once.lambda(), lambda);
        }
        assert!(lambda_project(&pt, LambdaSet::Pi).project(LambdaSet::Ad).is_err());
    }
}

use rand::{Rng, RngCore};

use super::{check_dimension, threshold_pic, AuxData, BtpScheme, Decision, Identifier, LambdaView, ProtectedTemplate};
use crate::error::{BtpError, Result};
use crate::population::FeatureElement;

/// Cancelable transform by a secret cyclic rotation.
///
/// `pi = rotate(x, r)` and `alpha = r`. Rotations are Hamming isometries, so
/// comparison happens in the transformed domain with threshold `tau`. The
/// full template is trivially invertible.
#[derive(Debug, Clone)]
pub struct RotationScheme {
    n: usize,
    tau: u32,
}

impl RotationScheme {
    pub fn new(n: usize, tau: u32) -> Result<Self> {
        if n == 0 || n > FeatureElement::MAX_BITS {
            return Err(BtpError::config(format!("rotation scheme needs 1 <= n <= 64, got {n}")));
        }
        Ok(RotationScheme { n, tau })
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    fn template(&self, x: &FeatureElement, r: u32) -> ProtectedTemplate {
        ProtectedTemplate { pi: Identifier::Bits(x.rotate(r as usize)), alpha: AuxData::Offset(r) }
    }
}

impl BtpScheme for RotationScheme {
    fn name(&self) -> &'static str {
        "rot"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn pie(&self, x: &FeatureElement, rng: &mut dyn RngCore) -> Result<ProtectedTemplate> {
        check_dimension(self.n, x)?;
        Ok(self.template(x, rng.gen_range(0..self.n as u32)))
    }

    fn pir(&self, alpha: &AuxData, probe: &FeatureElement) -> Result<Identifier> {
        check_dimension(self.n, probe)?;
        match alpha {
            AuxData::Offset(r) => Ok(Identifier::Bits(probe.rotate(*r as usize))),
            _ => Err(BtpError::contract("rotation auxiliary data must be an offset")),
        }
    }

    fn pic(&self, reference: &Identifier, probe: &Identifier) -> Decision {
        threshold_pic(reference, probe, self.tau)
    }

    fn pie_outcomes(&self, x: &FeatureElement) -> Result<Vec<(f64, ProtectedTemplate)>> {
        check_dimension(self.n, x)?;
        let weight = 1.0 / self.n as f64;
        Ok((0..self.n as u32).map(|r| (weight, self.template(x, r))).collect())
    }

    fn threshold_compatible(&self, tau: u32) -> bool {
        tau <= self.tau
    }

    fn invert(&self, view: &LambdaView) -> Option<FeatureElement> {
        match (view.pi?, view.alpha?) {
            (Identifier::Bits(pi), AuxData::Offset(r)) => Some(pi.unrotate(r as usize)),
            _ => None,
        }
    }
}

use rand::RngCore;

use super::{check_dimension, threshold_pic, AuxData, BtpScheme, Decision, Identifier, LambdaView, ProtectedTemplate};
use crate::error::{BtpError, Result};
use crate::population::FeatureElement;

/// No protection at all: the identifier is the feature element itself and
/// comparison is the plain `d <= tau` test.
#[derive(Debug, Clone)]
pub struct PlaintextScheme {
    n: usize,
    tau: u32,
}

impl PlaintextScheme {
    pub fn new(n: usize, tau: u32) -> Result<Self> {
        if n == 0 || n > FeatureElement::MAX_BITS {
            return Err(BtpError::config(format!("plaintext scheme needs 1 <= n <= 64, got {n}")));
        }
        Ok(PlaintextScheme { n, tau })
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }
}

impl BtpScheme for PlaintextScheme {
    fn name(&self) -> &'static str {
        "plain"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn pie(&self, x: &FeatureElement, _rng: &mut dyn RngCore) -> Result<ProtectedTemplate> {
        check_dimension(self.n, x)?;
        Ok(ProtectedTemplate { pi: Identifier::Bits(*x), alpha: AuxData::Empty })
    }

    fn pir(&self, _alpha: &AuxData, probe: &FeatureElement) -> Result<Identifier> {
        check_dimension(self.n, probe)?;
        Ok(Identifier::Bits(*probe))
    }

    fn pic(&self, reference: &Identifier, probe: &Identifier) -> Decision {
        threshold_pic(reference, probe, self.tau)
    }

    fn pie_outcomes(&self, x: &FeatureElement) -> Result<Vec<(f64, ProtectedTemplate)>> {
        check_dimension(self.n, x)?;
        Ok(vec![(1.0, ProtectedTemplate { pi: Identifier::Bits(*x), alpha: AuxData::Empty })])
    }

    fn threshold_compatible(&self, tau: u32) -> bool {
        tau <= self.tau
    }

    fn invert(&self, view: &LambdaView) -> Option<FeatureElement> {
        match view.pi? {
            Identifier::Bits(x) => Some(x),
            _ => None,
        }
    }
}

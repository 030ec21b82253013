use rand::RngCore;

use super::{check_dimension, AuxData, BtpScheme, Decision, Identifier, ProtectedTemplate};
use crate::error::{BtpError, Result};
use crate::population::FeatureElement;

/// Degenerate scheme whose comparator ignores its inputs. `accept-all`
/// matches everything; `reject-all` does not even accept the enrolled
/// sample. Both exist to exercise hypothesis gates and boundary cases.
#[derive(Debug, Clone)]
pub struct ConstantScheme {
    n: usize,
    accept: bool,
}

impl ConstantScheme {
    pub fn new(n: usize, accept: bool) -> Result<Self> {
        if n == 0 || n > FeatureElement::MAX_BITS {
            return Err(BtpError::config(format!("constant scheme needs 1 <= n <= 64, got {n}")));
        }
        Ok(ConstantScheme { n, accept })
    }

    fn template(&self) -> ProtectedTemplate {
        ProtectedTemplate { pi: Identifier::Digest([0; 16]), alpha: AuxData::Empty }
    }
}

impl BtpScheme for ConstantScheme {
    fn name(&self) -> &'static str {
        if self.accept {
            "accept-all"
        } else {
            "reject-all"
        }
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn pie(&self, x: &FeatureElement, _rng: &mut dyn RngCore) -> Result<ProtectedTemplate> {
        check_dimension(self.n, x)?;
        Ok(self.template())
    }

    fn pir(&self, _alpha: &AuxData, probe: &FeatureElement) -> Result<Identifier> {
        check_dimension(self.n, probe)?;
        Ok(Identifier::Digest([0; 16]))
    }

    fn pic(&self, _reference: &Identifier, _probe: &Identifier) -> Decision {
        Decision::from_bool(self.accept)
    }

    fn pie_outcomes(&self, x: &FeatureElement) -> Result<Vec<(f64, ProtectedTemplate)>> {
        check_dimension(self.n, x)?;
        Ok(vec![(1.0, self.template())])
    }

    fn threshold_compatible(&self, _tau: u32) -> bool {
        self.accept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::check_self_match;

    #[test]
    fn self_match_hypothesis() {
        assert_eq!(check_self_match(&ConstantScheme::new(5, true).unwrap()).unwrap(), None);
        assert!(check_self_match(&ConstantScheme::new(5, false).unwrap()).unwrap().is_some());
    }
}

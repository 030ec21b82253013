use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use super::{check_dimension, AuxData, BtpScheme, Decision, Identifier, LinearCode, ProtectedTemplate};
use crate::error::{BtpError, Result};
use crate::population::FeatureElement;

/// Hash used to turn a codeword into a pseudonymous identifier.
pub type DigestFn = fn(&FeatureElement) -> [u8; 16];

/// SHA-256 of the codeword, truncated to 128 bits.
pub fn sha256_128(w: &FeatureElement) -> [u8; 16] {
    let mut hasher = Sha256::new();
    hasher.update(b"btpgame/fuzzy-commitment/v1");
    hasher.update([w.len() as u8]);
    hasher.update(w.bits().to_le_bytes());
    let full = hasher.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&full[..16]);
    out
}

/// Fuzzy commitment over a binary linear code.
///
/// Enrollment commits to a random codeword `w`: `pi = H(w)`,
/// `alpha = x XOR w`. Verification decodes `x' XOR alpha` and hashes the
/// result; decoding failure yields [`Identifier::Reject`].
#[derive(Clone)]
pub struct FuzzyCommitment {
    code: Arc<LinearCode>,
    digest: DigestFn,
    /// `H(codeword)` indexed by message.
    digests: Vec<[u8; 16]>,
}

impl FuzzyCommitment {
    pub fn new(code: LinearCode) -> Self {
        Self::with_digest(code, sha256_128)
    }

    pub fn with_digest(code: LinearCode, digest: DigestFn) -> Self {
        let digests = code.codewords().iter().map(digest).collect();
        FuzzyCommitment { code: Arc::new(code), digest, digests }
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn digest_of(&self, w: &FeatureElement) -> [u8; 16] {
        (self.digest)(w)
    }

    fn template(&self, x: &FeatureElement, message: u32) -> Result<ProtectedTemplate> {
        let w = self.code.encode(message)?;
        Ok(ProtectedTemplate { pi: Identifier::Digest(self.digests[message as usize]), alpha: AuxData::Bits(x.xor(&w)?) })
    }
}

impl fmt::Debug for FuzzyCommitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzyCommitment").field("n", &self.code.n()).field("k", &self.code.k()).field("t", &self.code.t()).finish()
    }
}

impl BtpScheme for FuzzyCommitment {
    fn name(&self) -> &'static str {
        "fc"
    }

    fn dimension(&self) -> usize {
        self.code.n()
    }

    fn pie(&self, x: &FeatureElement, rng: &mut dyn RngCore) -> Result<ProtectedTemplate> {
        check_dimension(self.code.n(), x)?;
        let message = rng.gen_range(0..self.digests.len() as u32);
        self.template(x, message)
    }

    fn pir(&self, alpha: &AuxData, probe: &FeatureElement) -> Result<Identifier> {
        check_dimension(self.code.n(), probe)?;
        let AuxData::Bits(alpha) = alpha else {
            return Err(BtpError::contract("fuzzy commitment auxiliary data must be a bit vector"));
        };
        let y = probe.xor(alpha)?;
        Ok(match self.code.decode(&y)? {
            Some(m) => Identifier::Digest(self.digests[m as usize]),
            None => Identifier::Reject,
        })
    }

    fn pic(&self, reference: &Identifier, probe: &Identifier) -> Decision {
        Decision::from_bool(matches!(reference, Identifier::Digest(_)) && reference == probe)
    }

    fn pie_outcomes(&self, x: &FeatureElement) -> Result<Vec<(f64, ProtectedTemplate)>> {
        check_dimension(self.code.n(), x)?;
        let weight = 1.0 / self.digests.len() as f64;
        (0..self.digests.len() as u32).map(|m| Ok((weight, self.template(x, m)?))).collect()
    }

    fn threshold_compatible(&self, tau: u32) -> bool {
        tau <= self.code.t()
    }

    fn linear_code(&self) -> Option<&LinearCode> {
        Some(&self.code)
    }
}

use sha2::{Digest, Sha256};

use crate::error::{BtpError, Result};
use crate::population::{hamming_distance, FeatureElement};
use crate::schemes::{LambdaSet, LambdaView};

/// One message of a game run, in the order the protocol sends them.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Step 1: the challenger publishes the parameters.
    Parameters {
        lambda: LambdaSet,
        tau: Option<u32>,
        pal: bool,
    },
    /// Step 2 of an IRR game: the first adversary stage hands over its state.
    State {
        queries: u64,
    },
    /// Step 2 of an UNLINK game: the submitted triple.
    Submission {
        x: FeatureElement,
        x0: FeatureElement,
        x1: FeatureElement,
        queries: u64,
    },
    /// Step 3 of an IRR game.
    Challenge {
        user: usize,
        sample: FeatureElement,
        view: LambdaView,
    },
    /// Step 3 of an UNLINK game.
    Pair {
        b: u8,
        view: LambdaView,
        view_prime: LambdaView,
    },
    /// Step 4 of an IRR game.
    Guess {
        guess: FeatureElement,
        queries: u64,
    },
    /// Step 4 of an UNLINK game.
    Bit {
        guess: u8,
        queries: u64,
    },
    /// The trial ran out of oracle queries before finishing.
    Aborted,
    Verdict {
        win: bool,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub steps: Vec<Step>,
}

impl Transcript {
    pub(crate) fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    /// Short stable fingerprint of the whole run.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(format!("{:?}", self.steps).as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn schema_error(msg: impl Into<String>) -> BtpError {
    BtpError::Protocol(msg.into())
}

/// Checks an IRR transcript against the step order and the win rule. The
/// PAL win predicate needs the hidden template, so for PAL runs only the
/// order and view shape are checked.
pub fn validate_irr_transcript(t: &Transcript) -> Result<()> {
    let (lambda, tau, pal) = match t.steps.first() {
        Some(Step::Parameters { lambda, tau, pal }) => (*lambda, *tau, *pal),
        _ => return Err(schema_error("transcript must open with the parameters")),
    };
    if !pal && tau.is_none() {
        return Err(schema_error("AL game without a threshold"));
    }
    match &t.steps[1..] {
        [Step::Aborted, Step::Verdict { win: false }]
        | [Step::State { .. }, Step::Aborted, Step::Verdict { win: false }]
        | [Step::State { .. }, Step::Challenge { .. }, Step::Aborted, Step::Verdict { win: false }] => Ok(()),
        [Step::State { queries: q1 }, Step::Challenge { sample, view, .. }, Step::Guess { guess, queries: q2 }, Step::Verdict { win }] => {
            if view.lambda() != lambda {
                return Err(schema_error(format!("challenge view carries {} instead of {lambda}", view.lambda())));
            }
            if q2 < q1 {
                return Err(schema_error("query count went backwards"));
            }
            if let (false, Some(tau)) = (pal, tau) {
                if (hamming_distance(sample, guess)? <= tau) != *win {
                    return Err(schema_error("verdict disagrees with the distance rule"));
                }
            }
            Ok(())
        }
        other => Err(schema_error(format!("unexpected IRR step sequence {other:?}"))),
    }
}

/// Checks an UNLINK transcript against the step order and the win rule.
pub fn validate_unlink_transcript(t: &Transcript) -> Result<()> {
    let lambda = match t.steps.first() {
        Some(Step::Parameters { lambda, tau: None, pal: false }) => *lambda,
        _ => return Err(schema_error("transcript must open with the UNLINK parameters")),
    };
    match &t.steps[1..] {
        [Step::Aborted, Step::Verdict { win: false }]
        | [Step::Submission { .. }, Step::Pair { .. }, Step::Aborted, Step::Verdict { win: false }] => Ok(()),
        [Step::Submission { queries: q1, .. }, Step::Pair { b, view, view_prime }, Step::Bit { guess, queries: q2 }, Step::Verdict { win }] =>
        {
            if view.lambda() != lambda || view_prime.lambda() != lambda {
                return Err(schema_error("challenge views do not match the leaked subset"));
            }
            if *b > 1 || *guess > 1 {
                return Err(schema_error("bits must be 0 or 1"));
            }
            if q2 < q1 {
                return Err(schema_error("query count went backwards"));
            }
            if (b == guess) != *win {
                return Err(schema_error("verdict disagrees with b' = b"));
            }
            Ok(())
        }
        other => Err(schema_error(format!("unexpected UNLINK step sequence {other:?}"))),
    }
}

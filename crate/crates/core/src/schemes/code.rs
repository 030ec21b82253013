use crate::error::{BtpError, Result};
use crate::population::{hamming_distance, FeatureElement};

/// Largest message length for which codewords are tabulated.
pub const MAX_MESSAGE_BITS: usize = 16;

/// Largest codeword length for which a full decoding table is built.
const DECODE_TABLE_MAX_BITS: usize = 20;

/// A binary linear `[n, k]` code with a bounded-distance decoder of radius
/// `t`. All `2^k` codewords are tabulated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    t: u32,
    min_distance: u32,
    generator: Vec<FeatureElement>,
    codewords: Vec<FeatureElement>,
    /// Message index of the unique codeword within `t` of each word, or
    /// `u32::MAX` when there is none.
    decode_table: Option<Vec<u32>>,
}

impl LinearCode {
    /// Builds the code spanned by the rows of `generator`. The decoding
    /// radius defaults to `floor((d_min - 1) / 2)`; an explicit `t` must
    /// satisfy `2t + 1 <= d_min`, verified exhaustively.
    pub fn new(generator: Vec<FeatureElement>, t: Option<u32>) -> Result<Self> {
        let k = generator.len();
        if k == 0 || k > MAX_MESSAGE_BITS {
            return Err(BtpError::config(format!("message length must be in 1..={MAX_MESSAGE_BITS}, got {k}")));
        }
        let n = generator[0].len();
        if let Some(row) = generator.iter().find(|r| r.len() != n) {
            return Err(BtpError::Dimension { expected: n, actual: row.len() });
        }
        if k > n {
            return Err(BtpError::config(format!("message length {k} exceeds codeword length {n}")));
        }

        let codewords: Vec<FeatureElement> = (0..1u64 << k)
            .map(|m| {
                let bits = generator.iter().enumerate().filter(|(i, _)| (m >> i) & 1 == 1).fold(0u64, |acc, (_, row)| acc ^ row.bits());
                FeatureElement::from_index(bits, n)
            })
            .collect();

        // linear code: minimum distance is the minimum nonzero weight
        let min_distance = codewords[1..].iter().map(FeatureElement::weight).min().unwrap_or(0);
        if min_distance == 0 {
            return Err(BtpError::config("generator rows are linearly dependent"));
        }
        let t = t.unwrap_or((min_distance - 1) / 2);
        if 2 * t + 1 > min_distance {
            return Err(BtpError::config(format!(
                "decoding radius t = {t} needs minimum distance >= {}, code has {min_distance}",
                2 * t + 1
            )));
        }

        let mut code = LinearCode { n, k, t, min_distance, generator, codewords, decode_table: None };
        if n <= DECODE_TABLE_MAX_BITS {
            code.decode_table = Some(code.build_decode_table());
        }
        Ok(code)
    }

    /// The `[7, 4, 3]` Hamming code in systematic form, `t = 1`.
    pub fn hamming_7_4() -> Self {
        let rows = ["1000110", "0100101", "0010011", "0001111"];
        let generator = rows.iter().map(|r| r.parse().expect("static generator row")).collect();
        LinearCode::new(generator, None).expect("the Hamming code is valid")
    }

    /// The `[n, 1, n]` repetition code.
    pub fn repetition(n: usize) -> Result<Self> {
        let all_ones = FeatureElement::new(crate::population::mask(n), n)?;
        LinearCode::new(vec![all_ones], None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn min_distance(&self) -> u32 {
        self.min_distance
    }

    pub fn generator(&self) -> &[FeatureElement] {
        &self.generator
    }

    pub fn codewords(&self) -> &[FeatureElement] {
        &self.codewords
    }

    pub fn encode(&self, message: u32) -> Result<FeatureElement> {
        self.codewords
            .get(message as usize)
            .copied()
            .ok_or_else(|| BtpError::config(format!("message {message} does not fit in {} bits", self.k)))
    }

    /// Exhaustive nearest-codeword search: the unique codeword within
    /// distance `t` of `y` as `(message, codeword)`, or `None`.
    pub fn bounded_distance_decode(&self, y: &FeatureElement) -> Result<Option<(u32, FeatureElement)>> {
        if y.len() != self.n {
            return Err(BtpError::Dimension { expected: self.n, actual: y.len() });
        }
        for (m, w) in self.codewords.iter().enumerate() {
            if hamming_distance(y, w)? <= self.t {
                return Ok(Some((m as u32, *w)));
            }
        }
        Ok(None)
    }

    /// Same result as [`LinearCode::bounded_distance_decode`], served from
    /// the decoding table when one was built.
    pub fn decode(&self, y: &FeatureElement) -> Result<Option<u32>> {
        match &self.decode_table {
            Some(table) => {
                if y.len() != self.n {
                    return Err(BtpError::Dimension { expected: self.n, actual: y.len() });
                }
                let m = table[y.index()];
                Ok((m != u32::MAX).then_some(m))
            }
            None => Ok(self.bounded_distance_decode(y)?.map(|(m, _)| m)),
        }
    }

    fn build_decode_table(&self) -> Vec<u32> {
        let mut table = vec![u32::MAX; 1 << self.n];
        let errors: Vec<u64> = (0..1u64 << self.n).filter(|e| e.count_ones() <= self.t).collect();
        for (m, w) in self.codewords.iter().enumerate() {
            for e in &errors {
                table[(w.bits() ^ e) as usize] = m as u32;
            }
        }
        table
    }
}

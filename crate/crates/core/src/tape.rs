//! Finite advice tapes read sequentially, most significant bit first.

use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdviceTape {
    bits: Vec<bool>,
    cursor: usize,
}

/// Serialized tape: bit length plus lowercase hex, padded with zero bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeFile {
    pub bits: usize,
    pub hex: String,
}

impl AdviceTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            bits: bits.into_iter().collect(),
            cursor: 0,
        }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(DpaError::MalformedAdvice(format!(
                    "unexpected character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(bits))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of bits read so far.
    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// Appends `value` as a `width`-bit field.
    pub fn push_bits(&mut self, value: u64, width: usize) {
        assert!(width <= 64, "field wider than 64 bits");
        assert!(
            width == 64 || value >> width == 0,
            "value {value} does not fit in {width} bits"
        );
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    /// Reads the next `width`-bit field.
    pub fn read_bits(&mut self, width: usize) -> Result<u64> {
        if self.cursor + width > self.bits.len() {
            return Err(DpaError::AdviceExhausted {
                wanted: width,
                position: self.cursor,
                length: self.bits.len(),
            });
        }
        let mut value = 0u64;
        for &b in &self.bits[self.cursor..self.cursor + width] {
            value = (value << 1) | u64::from(b);
        }
        self.cursor += width;
        Ok(value)
    }

    pub fn to_bit_string(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn to_file(&self) -> TapeFile {
        let bytes: Vec<u8> = self
            .bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
            })
            .collect();
        TapeFile {
            bits: self.bits.len(),
            hex: hex::encode(bytes),
        }
    }

    pub fn from_file(file: &TapeFile) -> Result<Self> {
        let bytes = hex::decode(&file.hex).map_err(|e| DpaError::MalformedAdvice(e.to_string()))?;
        if bytes.len() != file.bits.div_ceil(8) {
            return Err(DpaError::MalformedAdvice(format!(
                "{} hex bytes cannot hold exactly {} bits",
                bytes.len(),
                file.bits
            )));
        }
        let bits = (0..file.bits).map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1);
        Ok(Self::from_bits(bits))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("tape serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TapeFile =
            serde_json::from_str(text).map_err(|e| DpaError::Parse(e.to_string()))?;
        Self::from_file(&file)
    }
}

/// Number of bits needed to write values `0..count`.
pub fn field_width(count: u64) -> usize {
    if count <= 1 {
        0
    } else {
        (64 - (count - 1).leading_zeros()) as usize
    }
}

//! Exact gain ratios and per-run report rows.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{DpaError, Result};
use crate::model::{Instance, Solution};

/// `optimum / algorithm` kept as a pair of integers.
///
/// A zero denominator with a positive numerator is unbounded; `0/0` counts as 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GainRatio {
    pub opt: u64,
    pub alg: u64,
}

impl GainRatio {
    pub fn new(opt: u64, alg: u64) -> Self {
        Self { opt, alg }
    }

    pub fn is_unbounded(&self) -> bool {
        self.alg == 0 && self.opt > 0
    }

    fn parts(&self) -> (u128, u128) {
        if self.alg == 0 && self.opt == 0 {
            (1, 1)
        } else {
            (u128::from(self.opt), u128::from(self.alg))
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        if self.is_unbounded() {
            None
        } else {
            let (n, d) = self.parts();
            Some(n as f64 / d as f64)
        }
    }
}

impl PartialOrd for GainRatio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares values; equal fractions such as 2/1 and 4/2 compare `Equal`.
impl Ord for GainRatio {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_unbounded(), other.is_unbounded()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                let (a, b) = self.parts();
                let (c, d) = other.parts();
                (a * d).cmp(&(c * b))
            }
        }
    }
}

impl fmt::Display for GainRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_f64() {
            None => f.write_str("inf"),
            Some(v) => write!(f, "{v:.6}"),
        }
    }
}

/// What an adversary served and what it achieved.
#[derive(Clone, Debug)]
pub struct AdversaryOutcome<C> {
    pub case: C,
    pub instance: Instance,
    pub solution: Solution,
    pub gain_alg: u64,
    pub gain_opt: u64,
}

impl<C> AdversaryOutcome<C> {
    pub fn ratio(&self) -> GainRatio {
        GainRatio::new(self.gain_opt, self.gain_alg)
    }
}

/// One measured run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub graph: String,
    pub algorithm: String,
    pub instance_hash: String,
    pub gain_alg: u64,
    pub gain_opt: u64,
    /// `null` when unbounded.
    pub ratio: Option<f64>,
    pub unbounded: bool,
    pub advice_bits: usize,
    pub ms: u64,
}

impl RatioReport {
    pub fn new(
        graph: impl Into<String>,
        algorithm: impl Into<String>,
        instance_hash: impl Into<String>,
        gain_alg: u64,
        gain_opt: u64,
        advice_bits: usize,
    ) -> Self {
        let ratio = GainRatio::new(gain_opt, gain_alg);
        Self {
            graph: graph.into(),
            algorithm: algorithm.into(),
            instance_hash: instance_hash.into(),
            gain_alg,
            gain_opt,
            ratio: ratio.to_f64(),
            unbounded: ratio.is_unbounded(),
            advice_bits,
            ms: 0,
        }
    }

    pub fn gain_ratio(&self) -> GainRatio {
        GainRatio::new(self.gain_opt, self.gain_alg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DpaError::Parse(e.to_string()))
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "graph",
    "algorithm",
    "instance_hash",
    "gain_alg",
    "gain_opt",
    "ratio",
    "advice_bits",
    "ms",
];

/// Writes reports as CSV with the fixed column order.
pub fn write_csv<W: Write>(out: W, reports: &[RatioReport]) -> Result<()> {
    let io = |e: csv::Error| DpaError::InvalidArgument(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.graph.clone(),
            r.algorithm.clone(),
            r.instance_hash.clone(),
            r.gain_alg.to_string(),
            r.gain_opt.to_string(),
            r.gain_ratio().to_string(),
            r.advice_bits.to_string(),
            r.ms.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| DpaError::InvalidArgument(e.to_string()))?;
    Ok(())
}

pub fn to_csv_string(reports: &[RatioReport]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, reports).expect("writing to memory succeeds");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[RatioReport]) -> String {
    reports.iter().map(|r| r.to_json() + "\n").collect()
}

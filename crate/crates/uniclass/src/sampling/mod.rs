//! Pull-based sample oracles and synthetic distribution families.
//!
//! The procedures in this crate are adaptive: how many samples they take is a
//! stopping time of the sample stream, so samples must be pulled one at a
//! time rather than handed over in a batch. A [`SampleOracle`] is a
//! single-consumer stateful source of labels; it is not safe to pull from
//! concurrently, but it moves freely between threads. Parallel experiments
//! use one oracle per trial, never a shared one.

pub mod alias;
pub mod family;
pub mod rng;

use std::hash::Hash;
use std::io::BufRead;

use thiserror::Error;

use crate::dist::Distribution;
use alias::AliasTable;
use rng::Xoshiro256StarStar;

pub use family::FamilySpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("sample stream exhausted after {drawn} samples")]
    StreamExhausted { drawn: u64 },
    #[error("i/o error reading sample stream after {drawn} samples: {message}")]
    StreamIo { drawn: u64, message: String },
    #[error("bad family parameters: {0}")]
    BadFamilyParams(String),
}

/// A pull-based source of sample labels.
///
/// `drawn` increments by exactly one per successful pull.
pub trait SampleOracle {
    type Label: Eq + Hash + Clone + std::fmt::Debug;

    fn pull(&mut self) -> Result<Self::Label, SampleError>;

    fn drawn(&self) -> u64;
}

impl<O: SampleOracle + ?Sized> SampleOracle for &mut O {
    type Label = O::Label;

    fn pull(&mut self) -> Result<Self::Label, SampleError> {
        (**self).pull()
    }

    fn drawn(&self) -> u64 {
        (**self).drawn()
    }
}

/// Seeded i.i.d. sampling from an explicit distribution.
///
/// Labels are emitted as dense entry indices into the source distribution;
/// map back with [`Distribution::label`] when a report needs the token. With
/// a fixed seed the emitted sequence is identical across runs and platforms.
#[derive(Clone, Debug)]
pub struct SyntheticOracle {
    table: AliasTable,
    rng: Xoshiro256StarStar,
    drawn: u64,
}

impl SyntheticOracle {
    /// O(n) table build, O(1) per sample afterwards.
    pub fn new(p: &Distribution, seed: u64) -> Self {
        Self {
            table: AliasTable::new(p.probs()),
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            drawn: 0,
        }
    }
}

impl SampleOracle for SyntheticOracle {
    type Label = u32;

    #[inline]
    fn pull(&mut self) -> Result<u32, SampleError> {
        self.drawn += 1;
        Ok(self.table.sample(&mut self.rng))
    }

    fn drawn(&self) -> u64 {
        self.drawn
    }
}

/// Ingests an externally produced sample stream, one token per line.
pub struct StreamOracle<R: BufRead> {
    reader: R,
    drawn: u64,
}

impl<R: BufRead> StreamOracle<R> {
    pub fn new(reader: R) -> Self {
        Self { reader, drawn: 0 }
    }
}

impl<R: BufRead> SampleOracle for StreamOracle<R> {
    type Label = String;

    fn pull(&mut self) -> Result<String, SampleError> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = self
                .reader
                .read_line(&mut line)
                .map_err(|e| SampleError::StreamIo {
                    drawn: self.drawn,
                    message: e.to_string(),
                })?;
            if n == 0 {
                return Err(SampleError::StreamExhausted { drawn: self.drawn });
            }
            let token = line.trim();
            if token.is_empty() {
                continue;
            }
            self.drawn += 1;
            return Ok(token.to_string());
        }
    }

    fn drawn(&self) -> u64 {
        self.drawn
    }
}

/// Wraps an oracle and records every label it emits, so a prefix can be
/// replayed later (stage-two sample reuse, stopping-rule audits in tests).
pub struct RecordingOracle<O: SampleOracle> {
    inner: O,
    log: Vec<O::Label>,
}

impl<O: SampleOracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            log: Vec::new(),
        }
    }

    pub fn log(&self) -> &[O::Label] {
        &self.log
    }

    pub fn into_parts(self) -> (O, Vec<O::Label>) {
        (self.inner, self.log)
    }
}

impl<O: SampleOracle> SampleOracle for RecordingOracle<O> {
    type Label = O::Label;

    fn pull(&mut self) -> Result<O::Label, SampleError> {
        let label = self.inner.pull()?;
        self.log.push(label.clone());
        Ok(label)
    }

    fn drawn(&self) -> u64 {
        self.inner.drawn()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_always_returns_its_label() {
        let p = Distribution::new([("only", 1.0)]).unwrap();
        let mut oracle = SyntheticOracle::new(&p, 99);
        for _ in 0..100 {
            assert_eq!(oracle.pull().unwrap(), 0);
        }
        assert_eq!(oracle.drawn(), 100);
    }

    #[test]
    fn same_seed_same_sequence() {
        let p = Distribution::uniform(37);
        let mut a = SyntheticOracle::new(&p, 1234);
        let mut b = SyntheticOracle::new(&p, 1234);
        for _ in 0..10_000 {
            assert_eq!(a.pull().unwrap(), b.pull().unwrap());
        }
    }

    #[test]
    fn uniform_frequencies_within_five_sigma() {
        let n = 20usize;
        let draws = 1_000_000u64;
        let p = Distribution::uniform(n);
        let mut oracle = SyntheticOracle::new(&p, 2024);
        let mut counts = vec![0u64; n];
        for _ in 0..draws {
            counts[oracle.pull().unwrap() as usize] += 1;
        }
        let expect = 1.0 / n as f64;
        let sigma = (expect * (1.0 - expect) / draws as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - expect).abs() < 5.0 * sigma, "{freq} vs {expect}");
        }
    }

    #[test]
    fn stream_oracle_yields_lines_then_exhausts() {
        let mut oracle = StreamOracle::new("a\nb\na\n".as_bytes());
        assert_eq!(oracle.pull().unwrap(), "a");
        assert_eq!(oracle.pull().unwrap(), "b");
        assert_eq!(oracle.pull().unwrap(), "a");
        assert_eq!(
            oracle.pull().unwrap_err(),
            SampleError::StreamExhausted { drawn: 3 }
        );
    }

    #[test]
    fn empty_stream_exhausts_immediately() {
        let mut oracle = StreamOracle::new("".as_bytes());
        assert_eq!(
            oracle.pull().unwrap_err(),
            SampleError::StreamExhausted { drawn: 0 }
        );
    }

    #[test]
    fn stream_oracle_counts_full_consumption() {
        let text: String = (0..100_000).map(|i| format!("t{}\n", i % 7)).collect();
        let mut oracle = StreamOracle::new(text.as_bytes());
        while oracle.pull().is_ok() {}
        assert_eq!(oracle.drawn(), 100_000);
    }

    #[test]
    fn recording_oracle_replays_exactly() {
        let p = Distribution::uniform(5);
        let mut rec = RecordingOracle::new(SyntheticOracle::new(&p, 7));
        let drawn: Vec<u32> = (0..50).map(|_| rec.pull().unwrap()).collect();
        assert_eq!(rec.log(), drawn.as_slice());
    }
}

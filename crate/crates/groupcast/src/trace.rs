//! Bandwidth trace I/O and throughput-profile management.
//!
//! A trace file is plain text with one non-negative number per line — the
//! bandwidth available in that (1-indexed) second — either in Mbps or in
//! bytes per second (125 000 B/s = 1 Mbps). Real measurement campaigns
//! produce one long trace per vantage point; [`partition_profiles`] slices
//! such a trace into fixed-length profiles and [`assign_profiles`] deals the
//! profiles to users reproducibly for experiment suites.

use crate::model::BandwidthTrace;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Bytes per second corresponding to one megabit per second.
const BYTES_PER_SEC_PER_MBPS: f64 = 125_000.0;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace has no samples")]
    NoSamples,
    #[error("line {line}: cannot parse {content:?} as a number")]
    Malformed { line: usize, content: String },
    #[error("line {line}: negative bandwidth {value}")]
    Negative { line: usize, value: f64 },
    #[error("{profiles} profiles cannot cover {users} users")]
    NotEnoughProfiles { profiles: usize, users: usize },
}

/// Unit of the numbers in a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceUnit {
    Mbps,
    BytesPerSec,
}

impl TraceUnit {
    fn to_mbps(self, value: f64) -> f64 {
        match self {
            TraceUnit::Mbps => value,
            TraceUnit::BytesPerSec => value / BYTES_PER_SEC_PER_MBPS,
        }
    }

    #[allow(clippy::wrong_self_convention)] // inverse of `to_mbps`, not a constructor
    fn from_mbps(self, mbps: f64) -> f64 {
        match self {
            TraceUnit::Mbps => mbps,
            TraceUnit::BytesPerSec => mbps * BYTES_PER_SEC_PER_MBPS,
        }
    }
}

impl FromStr for TraceUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mbps" => Ok(TraceUnit::Mbps),
            "bps" | "bytes_per_sec" => Ok(TraceUnit::BytesPerSec),
            other => Err(format!("unknown trace unit {other:?} (expected mbps or bps)")),
        }
    }
}

impl fmt::Display for TraceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceUnit::Mbps => "mbps",
            TraceUnit::BytesPerSec => "bps",
        })
    }
}

/// Parses trace text in the given unit. Blank lines are ignored; errors
/// carry 1-based line numbers of the original text.
pub fn parse_trace(text: &str, unit: TraceUnit) -> Result<BandwidthTrace, TraceError> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        let value: f64 = token.parse().map_err(|_| TraceError::Malformed {
            line,
            content: token.to_string(),
        })?;
        if !value.is_finite() {
            return Err(TraceError::Malformed { line, content: token.to_string() });
        }
        if value < 0.0 {
            return Err(TraceError::Negative { line, value });
        }
        samples.push(unit.to_mbps(value));
    }
    if samples.is_empty() {
        return Err(TraceError::NoSamples);
    }
    Ok(BandwidthTrace::new(samples))
}

pub fn read_trace_file(path: impl AsRef<Path>, unit: TraceUnit) -> Result<BandwidthTrace, TraceError> {
    let text = std::fs::read_to_string(path)?;
    parse_trace(&text, unit)
}

/// Writes a trace with six fixed decimals per line in the given unit.
/// Round-trips through [`parse_trace`] up to that precision.
pub fn write_trace_file(
    path: impl AsRef<Path>,
    trace: &BandwidthTrace,
    unit: TraceUnit,
) -> Result<(), TraceError> {
    let mut out = String::with_capacity(trace.samples.len() * 10);
    for &mbps in &trace.samples {
        out.push_str(&format!("{:.6}\n", unit.from_mbps(mbps)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Slices a long trace into consecutive profiles of `seconds` samples each,
/// dropping any shorter remainder.
pub fn partition_profiles(trace: &BandwidthTrace, seconds: u32) -> Vec<BandwidthTrace> {
    assert!(seconds > 0, "profile length must be positive");
    trace
        .samples
        .chunks_exact(seconds as usize)
        .map(|w| BandwidthTrace::new(w.to_vec()))
        .collect()
}

/// SplitMix64 step: advances `state` and returns the next 64-bit output.
/// Small, stateless-to-test, and identical across platforms — experiment
/// suites use it so a seed printed in a report reproduces the exact shuffle.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deals every profile to one of `users` buckets, reproducibly for a seed.
///
/// The profile order is shuffled (Fisher–Yates driven by [`splitmix64`]) and
/// then dealt round-robin, so bucket sizes differ by at most one and the
/// union of buckets is exactly the input. Profiles within a bucket keep
/// their dealt order; experiment run `r` uses each user's `r`-th profile.
pub fn assign_profiles(
    profiles: &[BandwidthTrace],
    users: usize,
    seed: u64,
) -> Result<Vec<Vec<BandwidthTrace>>, TraceError> {
    assert!(users > 0, "need at least one user bucket");
    if profiles.len() < users {
        return Err(TraceError::NotEnoughProfiles { profiles: profiles.len(), users });
    }
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    let mut state = seed;
    for i in (1..order.len()).rev() {
        let j = (splitmix64(&mut state) % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let mut buckets = vec![Vec::new(); users];
    for (pos, &idx) in order.iter().enumerate() {
        buckets[pos % users].push(profiles[idx].clone());
    }
    Ok(buckets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_both_units() {
        let t = parse_trace("1.5\n2\n0.25\n", TraceUnit::Mbps).unwrap();
        assert_eq!(t.samples, vec![1.5, 2.0, 0.25]);
        let t = parse_trace("125000\n250000\n", TraceUnit::BytesPerSec).unwrap();
        assert_eq!(t.samples, vec![1.0, 2.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_trace("1.0\n\nbogus\n", TraceUnit::Mbps) {
            Err(TraceError::Malformed { line: 3, content }) => assert_eq!(content, "bogus"),
            other => panic!("expected malformed line 3, got {other:?}"),
        }
        assert!(matches!(
            parse_trace("1.0\n-2.5\n", TraceUnit::Mbps),
            Err(TraceError::Negative { line: 2, .. })
        ));
        assert!(matches!(parse_trace("\n  \n", TraceUnit::Mbps), Err(TraceError::NoSamples)));
        assert!(matches!(parse_trace("", TraceUnit::Mbps), Err(TraceError::NoSamples)));
    }

    #[test]
    fn file_round_trip_keeps_six_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.txt");
        let t = BandwidthTrace::new(vec![1.23456789, 0.000001, 7.0]);
        write_trace_file(&path, &t, TraceUnit::Mbps).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "1.234568\n0.000001\n7.000000\n");
        let back = read_trace_file(&path, TraceUnit::Mbps).unwrap();
        assert_eq!(back.samples, vec![1.234568, 0.000001, 7.0]);
    }

    #[test]
    fn partition_drops_remainder() {
        let t = BandwidthTrace::new((1..=10).map(|x| x as f64).collect());
        let parts = partition_profiles(&t, 3);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].samples, vec![1.0, 2.0, 3.0]);
        assert_eq!(parts[2].samples, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn assignment_is_balanced_and_complete() {
        let profiles: Vec<BandwidthTrace> =
            (0..11).map(|x| BandwidthTrace::flat(x as f64, 2)).collect();
        assert!(matches!(
            assign_profiles(&profiles[..2], 3, 42),
            Err(TraceError::NotEnoughProfiles { profiles: 2, users: 3 })
        ));
        let buckets = assign_profiles(&profiles, 3, 42).unwrap();
        let sizes: Vec<usize> = buckets.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 11);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut seen: Vec<f64> = buckets
            .iter()
            .flatten()
            .map(|t| t.samples[0])
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..11).map(|x| x as f64).collect::<Vec<_>>());
    }

    #[test]
    fn assignment_is_seed_deterministic() {
        let profiles: Vec<BandwidthTrace> =
            (0..8).map(|x| BandwidthTrace::flat(x as f64, 1)).collect();
        let a = assign_profiles(&profiles, 2, 7).unwrap();
        let b = assign_profiles(&profiles, 2, 7).unwrap();
        assert_eq!(a, b);
        let c = assign_profiles(&profiles, 2, 8).unwrap();
        assert_ne!(a, c);
    }
}

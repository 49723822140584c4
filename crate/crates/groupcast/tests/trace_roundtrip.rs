//! Property tests for trace file I/O and profile management.

use groupcast::{
    assign_profiles, parse_trace, partition_profiles, read_trace_file, write_trace_file,
    BandwidthTrace, TraceUnit,
};
use proptest::prelude::*;

proptest! {
    /// Writing then reading a trace preserves every sample to within the
    /// file format's six decimal places, in either unit.
    #[test]
    fn file_round_trip_is_lossless_to_six_decimals(
        samples in prop::collection::vec(0.0f64..500.0, 1..400),
        as_bytes in any::<bool>(),
    ) {
        let unit = if as_bytes { TraceUnit::BytesPerSec } else { TraceUnit::Mbps };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.txt");
        let trace = BandwidthTrace::new(samples.clone());
        write_trace_file(&path, &trace, unit).unwrap();
        let back = read_trace_file(&path, unit).unwrap();
        prop_assert_eq!(back.len_seconds() as usize, samples.len());
        // Mbps stores the value itself at 1e-6 precision; the byte unit
        // divides by 125000 on read, shrinking the absolute error.
        for j in 1..=samples.len() as u32 {
            let want = samples[j as usize - 1];
            prop_assert!((back.mb_in_second(j) - want).abs() < 1e-6,
                "second {}: {} vs {}", j, back.mb_in_second(j), want);
        }
    }

    #[test]
    fn partition_yields_only_full_profiles(
        samples in prop::collection::vec(0.0f64..10.0, 1..200),
        width in 1u32..40,
    ) {
        let trace = BandwidthTrace::new(samples.clone());
        let profiles = partition_profiles(&trace, width);
        prop_assert_eq!(profiles.len(), samples.len() / width as usize);
        for p in &profiles {
            prop_assert_eq!(p.len_seconds(), width);
        }
    }

    #[test]
    fn profile_deal_is_balanced_and_seed_stable(
        profile_count in 1usize..30,
        users in 1usize..6,
        seed in any::<u64>(),
    ) {
        prop_assume!(profile_count >= users);
        let profiles: Vec<BandwidthTrace> = (0..profile_count)
            .map(|i| BandwidthTrace::flat(i as f64, 4))
            .collect();
        let a = assign_profiles(&profiles, users, seed).unwrap();
        let b = assign_profiles(&profiles, users, seed).unwrap();
        prop_assert_eq!(&a, &b, "same seed must deal identically");
        let (lo, hi) = (
            a.iter().map(Vec::len).min().unwrap(),
            a.iter().map(Vec::len).max().unwrap(),
        );
        prop_assert!(hi - lo <= 1);
        let dealt: usize = a.iter().map(Vec::len).sum();
        prop_assert_eq!(dealt, profile_count);
    }
}

#[test]
fn malformed_lines_are_reported_with_their_number() {
    let text = "1.5\n\n2.0\nnot-a-number\n";
    match parse_trace(text, TraceUnit::Mbps) {
        Err(groupcast::TraceError::Malformed { line, content }) => {
            assert_eq!(line, 4);
            assert_eq!(content, "not-a-number");
        }
        other => panic!("expected a malformed-line error, got {other:?}"),
    }
}

#[test]
fn byte_unit_converts_on_the_standard_factor() {
    let trace = parse_trace("125000\n250000\n", TraceUnit::BytesPerSec).unwrap();
    assert_eq!(trace.mb_in_second(1), 1.0);
    assert_eq!(trace.mb_in_second(2), 2.0);
}

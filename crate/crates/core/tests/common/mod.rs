//! Shared fixtures and brute-force reference implementations for the
//! integration suites. The reference code here is deliberately naive —
//! exhaustive enumeration and set arithmetic — so it can serve as ground
//! truth for the optimized library paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use cscmine_core::codec::{CodeTable, TableRow};
use cscmine_core::events::verify_occurrence;
use cscmine_core::{CandidateSet, Episode, Event, EventSequence, OccurrenceWindow, Time, TypeId};
use itertools::Itertools;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The small five-type demo sequence used across the worked examples.
pub fn d2() -> EventSequence {
    EventSequence::from_named(vec![
        ("D", 1),
        ("A", 2),
        ("C", 3),
        ("E", 3),
        ("A", 4),
        ("B", 4),
        ("C", 5),
        ("D", 5),
        ("B", 6),
        ("C", 7),
        ("E", 7),
        ("C", 8),
        ("C", 9),
    ])
    .unwrap()
}

/// Builds an episode over `seq`'s alphabet from type names and exact gaps.
pub fn ep(seq: &EventSequence, names: &[&str], gaps: &[Time]) -> Episode {
    let types = names.iter().map(|n| seq.name_id(n).unwrap()).collect();
    Episode::new(types, gaps.to_vec()).unwrap()
}

/// The demo dictionary for [`d2`]: two three-node episodes plus the
/// leftover C events as a singleton row.
pub fn demo_table() -> CodeTable {
    let seq = d2();
    CodeTable {
        rows: vec![
            TableRow::new(ep(&seq, &["A", "B", "C"], &[2, 1]), vec![2, 4]).unwrap(),
            TableRow::new(ep(&seq, &["D", "E", "C"], &[2, 2]), vec![1, 5]).unwrap(),
            TableRow::new(ep(&seq, &["C"], &[]), vec![3, 8]).unwrap(),
        ],
        alphabet: seq.alphabet().to_vec(),
    }
}

/// Random sequence of exactly `n` events over an `m`-type alphabet.
///
/// With `simultaneous` the times are drawn from a compressed range so many
/// events share a stamp; without it every event gets a distinct time.
/// Either way `(type, time)` pairs are unique, as the sequence type demands.
pub fn gen_sequence(rng: &mut ChaCha8Rng, n: usize, m: usize, simultaneous: bool) -> EventSequence {
    assert!(n >= 1 && m >= 1);
    let alphabet: Vec<String> = (0..m).map(|i| format!("T{i}")).collect();
    let mut pairs: BTreeSet<(Time, TypeId)> = BTreeSet::new();
    if simultaneous {
        let mut horizon = ((n / 2).max(2)) as Time;
        while (horizon as u128) * (m as u128) < 2 * n as u128 {
            horizon *= 2;
        }
        while pairs.len() < n {
            let t = rng.gen_range(1..=horizon);
            let ty = rng.gen_range(0..m as TypeId);
            pairs.insert((t, ty));
        }
    } else {
        let mut t: Time = 0;
        for _ in 0..n {
            t += rng.gen_range(1..=3);
            pairs.insert((t, rng.gen_range(0..m as TypeId)));
        }
    }
    let events = pairs.into_iter().map(|(t, ty)| Event::new(ty, t)).collect();
    EventSequence::new(events, alphabet).expect("generated (type, time) pairs are unique")
}

/// Noise plus repeated fixed-gap motifs, so that selection runs admit
/// several patterns whose occurrences genuinely overlap.
pub fn gen_planted(
    rng: &mut ChaCha8Rng,
    m: usize,
    n_noise: usize,
    motifs: &[Episode],
    reps_each: usize,
) -> EventSequence {
    let alphabet: Vec<String> = (0..m).map(|i| format!("T{i}")).collect();
    let span = motifs.iter().map(Episode::span).max().unwrap_or(0);
    let horizon = (3 * (n_noise + motifs.len() * reps_each * 4)) as Time + span + 16;
    let mut pairs: BTreeSet<(Time, TypeId)> = BTreeSet::new();
    for motif in motifs {
        for _ in 0..reps_each {
            let start = rng.gen_range(1..=horizon - motif.span());
            for e in motif.roll_out(start) {
                pairs.insert((e.time, e.event_type));
            }
        }
    }
    for _ in 0..n_noise {
        pairs.insert((rng.gen_range(1..=horizon), rng.gen_range(0..m as TypeId)));
    }
    let events = pairs.into_iter().map(|(t, ty)| Event::new(ty, t)).collect();
    EventSequence::new(events, alphabet).expect("pairs are unique by construction")
}

/// A frequency fraction that makes the mining bar land exactly on
/// `count` occurrences for a sequence of `n` events, comfortably away
/// from any rounding edge.
pub fn fraction_for_count(count: u64, n: usize) -> f64 {
    assert!(count >= 1 && n >= 1);
    (count as f64 - 0.5) / n as f64
}

/// Exhaustive reference miner.
///
/// Enumerates every injective episode of up to `cap` nodes over the types
/// present in `seq` — all permutations crossed with all exact-gap vectors
/// in `1..=max_gap` — counts its occurrences start by start with
/// [`verify_occurrence`], and keeps those reaching `min_count`. Distinct
/// starts of an injective fixed-gap episode can never share an event, so
/// the start count is the distinct-occurrence frequency.
pub fn oracle_mine(
    seq: &EventSequence,
    max_gap: Time,
    min_count: u64,
    cap: usize,
) -> BTreeMap<Episode, Vec<OccurrenceWindow>> {
    let times = seq.times_by_type();
    let present: Vec<TypeId> = times
        .iter()
        .enumerate()
        .filter(|(_, ts)| !ts.is_empty())
        .map(|(ty, _)| ty as TypeId)
        .collect();
    let mut out = BTreeMap::new();
    for k in 1..=cap.min(present.len()) {
        for perm in present.iter().copied().permutations(k) {
            let gap_vectors: Vec<Vec<Time>> = if k == 1 {
                vec![Vec::new()]
            } else {
                (0..k - 1)
                    .map(|_| (1..=max_gap).collect::<Vec<Time>>())
                    .multi_cartesian_product()
                    .collect()
            };
            for gaps in gap_vectors {
                let episode = Episode::new(perm.clone(), gaps).unwrap();
                let starts: Vec<Time> = times[perm[0] as usize]
                    .iter()
                    .copied()
                    .filter(|&t| verify_occurrence(seq, &episode, t))
                    .collect();
                if starts.len() as u64 >= min_count {
                    let span = episode.span();
                    let windows = starts
                        .iter()
                        .map(|&s| OccurrenceWindow::new(s, s + span))
                        .collect();
                    out.insert(episode, windows);
                }
            }
        }
    }
    out
}

/// Reference pairwise shared-event counter: entry `(a, b)` is
/// `|events(a) ∩ events(b)|`, where `events(x)` is the set of
/// `(type, time)` pairs covered by any occurrence of candidate `x`.
pub fn oracle_overlap(candidates: &CandidateSet) -> Vec<Vec<u64>> {
    let sets: Vec<HashSet<(TypeId, Time)>> = candidates
        .iter()
        .map(|list| {
            let mut set = HashSet::new();
            for start in list.starts() {
                for e in list.episode().roll_out(start) {
                    set.insert((e.event_type, e.time));
                }
            }
            set
        })
        .collect();
    let n = sets.len();
    let mut om = vec![vec![0u64; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let shared = sets[a].intersection(&sets[b]).count() as u64;
            om[a][b] = shared;
            om[b][a] = shared;
        }
    }
    om
}

//! Candidate episode mining.
//!
//! Two strategies produce candidate episodes with exact occurrence lists:
//!
//! * [`mine_episodes`] — classic pattern-growth DFS over all episodes whose
//!   distinct-occurrence frequency clears a fraction-of-`|D|` threshold;
//! * [`best_extensions`] — threshold-free: each event type is grown by
//!   repeatedly taking its single best admissible extension, keeping the
//!   terminal pattern when it has a positive encoding score.
//!
//! Both share [`find_lists`]: given a prefix episode's occurrence windows
//! and the time list of a candidate next type, it buckets the extended
//! windows by the exact gap between the prefix end and the next event.
//! Because episodes are injective and gaps exact, every occurrence is
//! identified by its start time alone, so occurrence lists are plain sorted
//! start lists and counting distinct occurrences is free.

use rayon::prelude::*;
use thiserror::Error;

use crate::events::{Episode, EventSequence, OccurrenceList, OccurrenceWindow, Time, TypeId};
use crate::selector::score;

#[derive(Debug, Clone)]
pub struct MinerConfig {
    /// Largest admissible inter-event gap (`>= 1`).
    pub max_gap: Time,
    /// Frequency threshold as a fraction of the event count, in `[0, 1]`.
    /// An episode is frequent when its occurrence count is at least
    /// `freq_threshold * |D|` (and always at least 1).
    pub freq_threshold: f64,
    /// Optional cap on episode size (number of event types, `>= 1`).
    pub max_episode_len: Option<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MinerConfigError {
    #[error("max_gap must be at least 1, got {0}")]
    BadMaxGap(Time),
    #[error("freq_threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("max_episode_len must be at least 1")]
    BadLengthCap,
}

impl MinerConfig {
    pub fn new(max_gap: Time, freq_threshold: f64) -> Self {
        MinerConfig {
            max_gap,
            freq_threshold,
            max_episode_len: None,
        }
    }

    pub fn validate(&self) -> Result<(), MinerConfigError> {
        if self.max_gap < 1 {
            return Err(MinerConfigError::BadMaxGap(self.max_gap));
        }
        if !self.freq_threshold.is_finite() || !(0.0..=1.0).contains(&self.freq_threshold) {
            return Err(MinerConfigError::BadThreshold(self.freq_threshold));
        }
        if self.max_episode_len == Some(0) {
            return Err(MinerConfigError::BadLengthCap);
        }
        Ok(())
    }
}

/// Mined candidates, canonically ordered (by type list, then gaps) and free
/// of duplicates. Indices into `episodes` double as candidate ids in the
/// overlap matrix and the selector.
#[derive(Debug, Clone, Default)]
pub struct CandidateSet {
    pub episodes: Vec<OccurrenceList>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OccurrenceList> {
        self.episodes.iter()
    }

    fn from_unsorted(mut episodes: Vec<OccurrenceList>) -> Self {
        episodes.sort_by(|a, b| a.episode().cmp(b.episode()));
        episodes.dedup_by(|a, b| a.episode() == b.episode());
        CandidateSet { episodes }
    }
}

/// One occurrence list per event type present in `seq`, ascending type id.
pub fn one_node_lists(seq: &EventSequence) -> Vec<OccurrenceList> {
    seq.times_by_type()
        .into_iter()
        .enumerate()
        .filter(|(_, times)| !times.is_empty())
        .map(|(ty, times)| {
            OccurrenceList::from_starts(Episode::single(ty as TypeId), times)
                .expect("per-type times are strictly increasing")
        })
        .collect()
}

/// Minimum occurrence count implied by a fractional threshold over `n`
/// events. Counts are integers, so the real bound `f_th * n` rounds up;
/// a tiny epsilon keeps thresholds like `2/13 * 13` from creeping past
/// their intended integer. Never below 1: an absent episode is not frequent.
fn threshold_count(freq_threshold: f64, n: usize) -> u64 {
    let bar = freq_threshold * n as f64;
    let nearest = bar.round();
    let count = if (bar - nearest).abs() < 1e-9 {
        nearest
    } else {
        bar.ceil()
    };
    (count as u64).max(1)
}

/// Buckets extensions of `prefix` by one more event of `single`'s type,
/// keyed by the exact gap `j` between the prefix window end and the new
/// event: slot `j - 1` of the result holds the windows of the extended
/// episode with gap `j`, for `j` in `1..=max_gap`.
///
/// Every slot inherits strictly-increasing starts from the prefix windows,
/// and every start whose rolled-out events exist is present — no occurrence
/// is skipped, so slot lengths are exact distinct-occurrence frequencies.
pub fn find_lists(
    prefix: &OccurrenceList,
    single: &OccurrenceList,
    max_gap: Time,
) -> Vec<Vec<OccurrenceWindow>> {
    let slots_len = max_gap.max(0) as usize;
    let mut slots = vec![Vec::new(); slots_len];
    let times: Vec<Time> = single.starts().collect();
    let mut lo = 0usize; // prefix window ends ascend, so this never moves back
    for w in prefix.windows() {
        while lo < times.len() && times[lo] <= w.end {
            lo += 1;
        }
        for &t in &times[lo..] {
            let j = t - w.end;
            if j > max_gap {
                break;
            }
            slots[(j - 1) as usize].push(OccurrenceWindow::new(w.start, t));
        }
    }
    slots
}

/// Depth-first pattern growth under a fixed occurrence-count threshold.
///
/// Extends `prefix` with every type from `ones` not already in it, keeps
/// each gap-slot whose count clears `threshold`, pushes the extended
/// episode to `out` and recurses. `ones` must be the frequent one-node
/// lists of the sequence being mined.
pub fn explore_dfs(
    prefix: &OccurrenceList,
    ones: &[OccurrenceList],
    max_gap: Time,
    threshold: u64,
    max_len: Option<usize>,
    out: &mut Vec<OccurrenceList>,
) {
    if max_len.is_some_and(|cap| prefix.episode().len() >= cap) {
        return;
    }
    for one in ones {
        let ty = one.episode().types()[0];
        if prefix.episode().types().contains(&ty) {
            continue;
        }
        for (idx, windows) in find_lists(prefix, one, max_gap).into_iter().enumerate() {
            if (windows.len() as u64) < threshold {
                continue;
            }
            let episode = prefix
                .episode()
                .extended(ty, idx as Time + 1)
                .expect("extension type is fresh and gap positive");
            let starts = windows.into_iter().map(|w| w.start).collect();
            let list = OccurrenceList::from_starts(episode, starts)
                .expect("find_lists keeps starts strictly increasing");
            out.push(list.clone());
            explore_dfs(&list, ones, max_gap, threshold, max_len, out);
        }
    }
}

/// Mines every episode whose distinct-occurrence frequency reaches
/// `cfg.freq_threshold * |D|`, including the frequent one-node episodes.
/// Each frequent type's subtree is explored independently (in parallel),
/// then results are merged into canonical order.
pub fn mine_episodes(seq: &EventSequence, cfg: &MinerConfig) -> CandidateSet {
    let threshold = threshold_count(cfg.freq_threshold, seq.len());
    let frequent: Vec<OccurrenceList> = one_node_lists(seq)
        .into_iter()
        .filter(|l| l.frequency() >= threshold)
        .collect();
    let mut episodes: Vec<OccurrenceList> = frequent
        .par_iter()
        .map(|prefix| {
            let mut out = Vec::new();
            explore_dfs(
                prefix,
                &frequent,
                cfg.max_gap,
                threshold,
                cfg.max_episode_len,
                &mut out,
            );
            out
        })
        .reduce(Vec::new, |mut acc, mut chunk| {
            acc.append(&mut chunk);
            acc
        });
    episodes.extend(frequent);
    CandidateSet::from_unsorted(episodes)
}

/// Picks the single best admissible one-type extension of `prefix`, or
/// `None` when nothing clears the admission bar.
///
/// With `k = |prefix|`, a candidate extension is admissible when its
/// frequency `f` satisfies `f >= (2(k+1)+1)/k` — evaluated exactly as
/// `f * k >= 2k + 3`, so e.g. `k = 1` demands `f >= 5`. Among admissible
/// extensions the highest frequency wins; on frequency ties the smaller
/// gap wins; on full ties the smaller event-type id (scan order) sticks.
/// Per candidate type, the gap with the highest count is taken, smallest
/// gap first on ties.
pub fn extend_best(
    prefix: &OccurrenceList,
    ones: &[OccurrenceList],
    max_gap: Time,
) -> Option<OccurrenceList> {
    let k = prefix.episode().len() as u64;
    // Running admission bar as an exact fraction `num/den`; starts at the
    // length-dependent bound and collapses to the best frequency seen.
    let mut bar_num = 2 * k + 3;
    let mut bar_den = k;
    let mut min_gap = max_gap;
    let mut best: Option<(TypeId, Time, Vec<OccurrenceWindow>)> = None;
    for one in ones {
        let ty = one.episode().types()[0];
        if prefix.episode().types().contains(&ty) {
            continue;
        }
        let mut slots = find_lists(prefix, one, max_gap);
        let (mut best_gap, mut best_count) = (0, 0usize);
        for (idx, slot) in slots.iter().enumerate() {
            if slot.len() > best_count {
                best_count = slot.len();
                best_gap = idx as Time + 1;
            }
        }
        if best_count == 0 {
            continue;
        }
        let f = best_count as u64;
        if f * bar_den >= bar_num && (f * bar_den > bar_num || best_gap < min_gap) {
            let windows = std::mem::take(&mut slots[(best_gap - 1) as usize]);
            best = Some((ty, best_gap, windows));
            bar_num = f;
            bar_den = 1;
            min_gap = best_gap;
        }
    }
    best.map(|(ty, gap, windows)| {
        let episode = prefix
            .episode()
            .extended(ty, gap)
            .expect("extension type is fresh and gap positive");
        let starts = windows.into_iter().map(|w| w.start).collect();
        OccurrenceList::from_starts(episode, starts)
            .expect("find_lists keeps starts strictly increasing")
    })
}

/// Threshold-free candidate generation: grows every event type present in
/// `seq` by repeated best extensions, stopping as soon as the best
/// extension no longer improves the chain's encoding score, and keeps each
/// terminal pattern whose score is positive. The stop rule matters on busy
/// data: a long chain's frequency is so high that a merely-frequent
/// coincidental extension would still clear the admission bar, yet it
/// dilutes the pattern — growth should end at the structural boundary.
/// Yields at most one candidate per type, and never a bare one-node
/// episode (their score is always negative).
pub fn best_extensions(seq: &EventSequence, max_gap: Time) -> CandidateSet {
    let ones = one_node_lists(seq);
    let episodes: Vec<OccurrenceList> = ones
        .par_iter()
        .filter_map(|one| {
            let mut patt = one.clone();
            let mut best = score(patt.episode().len(), patt.frequency());
            while let Some(next) = extend_best(&patt, &ones, max_gap) {
                let next_score = score(next.episode().len(), next.frequency());
                if next_score <= best {
                    break;
                }
                patt = next;
                best = next_score;
            }
            (best > 0 && patt.episode().len() > 1).then_some(patt)
        })
        .collect();
    CandidateSet::from_unsorted(episodes)
}

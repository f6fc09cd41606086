//! Greedy selection of the episode subset that minimizes encoded length.
//!
//! Encoding a sequence as a dictionary of episode rows costs, in integer
//! units, `2k + f + 1` per row (size, `k` types, `k-1` gaps, occurrence
//! count, `f` starts) while covering `f * k` events that would otherwise
//! cost one unit each as singleton-row entries. An episode is therefore
//! worth selecting when `score = f*k - (2k + f + 1)` is positive — and,
//! once some episodes are already selected, only the events not shared
//! with them count, which is what [`overlap_score`] discounts.
//!
//! [`select`] runs the outer loop shared by both algorithms: generate
//! candidates (`csc1`: threshold DFS mining, `csc2`: best extensions),
//! compute the overlap matrix, greedily admit positive-overlap-score
//! candidates, delete the events their occurrences cover, and repeat on
//! the residue until no candidate helps or the pattern budget `K` is
//! exhausted. Whatever remains is encoded as singleton rows.

use std::collections::HashSet;

use thiserror::Error;

use crate::events::{EventSequence, OccurrenceList, Time, TypeId};
use crate::miner::{best_extensions, mine_episodes, CandidateSet, MinerConfig, MinerConfigError};
use crate::overlap::{find_overlap_matrix, OverlapMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Threshold-based mining of all frequent episodes per iteration.
    Csc1,
    /// Threshold-free best-extension candidates (at most one per type).
    Csc2,
}

#[derive(Debug, Clone)]
pub struct SelectionConfig {
    pub algorithm: Algorithm,
    /// Cap `K` on selected multi-node episodes; `None` = unbounded. Zero is
    /// rejected — "select nothing" is not a meaningful request.
    pub max_patterns: Option<usize>,
    pub miner: MinerConfig,
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("max_patterns must be at least 1 when given")]
    ZeroPatternCap,
    #[error(transparent)]
    Miner(#[from] MinerConfigError),
}

impl SelectionConfig {
    pub fn new(algorithm: Algorithm, miner: MinerConfig) -> Self {
        SelectionConfig {
            algorithm,
            max_patterns: None,
            miner,
        }
    }

    pub fn validate(&self) -> Result<(), SelectError> {
        if self.max_patterns == Some(0) {
            return Err(SelectError::ZeroPatternCap);
        }
        self.miner.validate()?;
        Ok(())
    }
}

/// Outcome of a selection: multi-node episodes in admission order plus the
/// singleton rows covering every event no occurrence claimed. Together they
/// cover the input sequence exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedModel {
    episodes: Vec<OccurrenceList>,
    singletons: Vec<(TypeId, Vec<Time>)>,
    alphabet: Vec<String>,
}

impl SelectedModel {
    /// Assembles a model from parts; callers are responsible for the cover
    /// invariant (mainly useful for tests and for rebuilding a model from a
    /// decoded table).
    pub fn from_parts(
        episodes: Vec<OccurrenceList>,
        singletons: Vec<(TypeId, Vec<Time>)>,
        alphabet: Vec<String>,
    ) -> Self {
        SelectedModel {
            episodes,
            singletons,
            alphabet,
        }
    }

    /// Multi-node episodes in the order they were admitted.
    pub fn episodes(&self) -> &[OccurrenceList] {
        &self.episodes
    }

    /// Residual per-type occurrence lists, ascending type id.
    pub fn singletons(&self) -> &[(TypeId, Vec<Time>)] {
        &self.singletons
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// Number of selected multi-node episodes.
    pub fn n_patterns(&self) -> usize {
        self.episodes.len()
    }
}

/// Encoding gain of an episode with `episode_len` types occurring
/// `frequency` times: events covered minus the dictionary row it costs.
pub fn score(episode_len: usize, frequency: u64) -> i64 {
    let n = episode_len as i64;
    let f = frequency as i64;
    f * n - (2 * n + f + 1)
}

/// [`score`] of `candidate` minus the events it shares with each already
/// selected candidate (`selected` holds indices into `candidates`).
pub fn overlap_score(
    candidates: &CandidateSet,
    candidate: usize,
    selected: &[usize],
    om: &OverlapMatrix,
) -> i64 {
    let c = &candidates.episodes[candidate];
    let base = score(c.episode().len(), c.frequency());
    selected
        .iter()
        .fold(base, |acc, &b| acc - om.get(candidate, b) as i64)
}

/// Removes from `seq` every event lying in any occurrence of any admitted
/// episode (shared events are removed once). The alphabet is preserved.
pub fn delete_occurrences(seq: &EventSequence, admitted: &[OccurrenceList]) -> EventSequence {
    let mut covered: HashSet<(TypeId, Time)> = HashSet::new();
    for list in admitted {
        for w in list.windows() {
            for e in list.episode().roll_out(w.start) {
                covered.insert((e.event_type, e.time));
            }
        }
    }
    let events = seq
        .events()
        .iter()
        .filter(|e| !covered.contains(&(e.event_type, e.time)))
        .copied()
        .collect();
    EventSequence::new(events, seq.alphabet().to_vec())
        .expect("a filtered subset of a valid sequence stays valid")
}

/// Greedy encoded-length-minimizing selection over `seq`.
pub fn select(seq: &EventSequence, cfg: &SelectionConfig) -> Result<SelectedModel, SelectError> {
    cfg.validate()?;
    let cap = cfg.max_patterns.unwrap_or(usize::MAX);
    let mut current = seq.clone();
    let mut chosen: Vec<OccurrenceList> = Vec::new();
    while chosen.len() < cap {
        let candidates = match cfg.algorithm {
            Algorithm::Csc1 => mine_episodes(&current, &cfg.miner),
            Algorithm::Csc2 => best_extensions(&current, cfg.miner.max_gap),
        };
        let om = find_overlap_matrix(&current, &candidates);
        let mut available = vec![true; candidates.len()];
        let mut pass: Vec<usize> = Vec::new();
        loop {
            let Some(idx) = argmax_overlap_score(&candidates, &available, &pass, &om) else {
                break; // candidate pool exhausted
            };
            if overlap_score(&candidates, idx, &pass, &om) <= 0 {
                break;
            }
            pass.push(idx);
            available[idx] = false;
            if chosen.len() + pass.len() >= cap {
                break;
            }
        }
        if pass.is_empty() {
            break; // no admissible candidate: model stops covering here
        }
        let admitted: Vec<OccurrenceList> = pass
            .iter()
            .map(|&i| candidates.episodes[i].clone())
            .collect();
        current = delete_occurrences(&current, &admitted);
        chosen.extend(admitted);
    }
    let singletons = current
        .times_by_type()
        .into_iter()
        .enumerate()
        .filter(|(_, times)| !times.is_empty())
        .map(|(ty, times)| (ty as TypeId, times))
        .collect();
    Ok(SelectedModel {
        episodes: chosen,
        singletons,
        alphabet: seq.alphabet().to_vec(),
    })
}

/// Index of the available candidate with the highest overlap score.
/// Ties prefer the longer episode, then the lexicographically smaller
/// (type-ids, gaps) tuple; the scan keeps the first (lowest-index) winner.
fn argmax_overlap_score(
    candidates: &CandidateSet,
    available: &[bool],
    selected: &[usize],
    om: &OverlapMatrix,
) -> Option<usize> {
    let mut best: Option<(usize, i64)> = None;
    for i in 0..candidates.len() {
        if !available[i] {
            continue;
        }
        let s = overlap_score(candidates, i, selected, om);
        let wins = match best {
            None => true,
            Some((bi, bs)) => {
                if s != bs {
                    s > bs
                } else {
                    let (a, b) = (
                        candidates.episodes[i].episode(),
                        candidates.episodes[bi].episode(),
                    );
                    a.len() > b.len() || (a.len() == b.len() && a < b)
                }
            }
        };
        if wins {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{verify_occurrence, Episode};

    #[test]
    fn score_boundaries() {
        assert_eq!(score(3, 2), -3);
        assert_eq!(score(2, 5), 0);
        assert_eq!(score(2, 6), 1);
        assert_eq!(score(3, 3), -1);
        assert_eq!(score(3, 4), 1);
        // One-node episodes can never pay for themselves.
        for f in 0..100 {
            assert_eq!(score(1, f), -3);
        }
    }

    fn d2() -> EventSequence {
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

    fn occ(seq: &EventSequence, names: &[&str], gaps: &[Time], starts: &[Time]) -> OccurrenceList {
        let types = names.iter().map(|n| seq.name_id(n).unwrap()).collect();
        let ep = Episode::new(types, gaps.to_vec()).unwrap();
        for &s in starts {
            assert!(verify_occurrence(seq, &ep, s));
        }
        OccurrenceList::from_starts(ep, starts.to_vec()).unwrap()
    }

    #[test]
    fn overlap_score_discounts_shared_events() {
        let seq = d2();
        let cands = CandidateSet {
            episodes: vec![
                occ(&seq, &["A", "B", "C"], &[2, 1], &[2, 4]),
                occ(&seq, &["D", "E", "C"], &[2, 2], &[1, 5]),
            ],
        };
        let om = find_overlap_matrix(&seq, &cands);
        // With nothing selected the overlap score is the plain score.
        assert_eq!(overlap_score(&cands, 1, &[], &om), score(3, 2));
        // One shared event (C,5) with the selected first candidate.
        assert_eq!(overlap_score(&cands, 1, &[0], &om), -3 - 1);
    }

    #[test]
    fn delete_occurrences_on_worked_example() {
        let seq = d2();
        let admitted = vec![
            occ(&seq, &["A", "B", "C"], &[2, 1], &[2, 4]),
            occ(&seq, &["D", "E", "C"], &[2, 2], &[1, 5]),
        ];
        let rest = delete_occurrences(&seq, &admitted);
        let left: Vec<(&str, Time)> = rest
            .events()
            .iter()
            .map(|e| (rest.type_name(e.event_type), e.time))
            .collect();
        assert_eq!(left, vec![("C", 3), ("C", 8)]);
        // Alphabet untouched even though most types vanished.
        assert_eq!(rest.alphabet(), seq.alphabet());
        // Deleting nothing changes nothing.
        assert_eq!(delete_occurrences(&seq, &[]), seq);
    }

    /// 30 disjoint A -1-> B -1-> C occurrences plus 10 scattered noise
    /// events, well separated so no accidental pattern forms.
    fn planted() -> EventSequence {
        let mut ev = Vec::new();
        for i in 0..30 {
            let t = 1 + i * 50;
            ev.push(("A", t));
            ev.push(("B", t + 1));
            ev.push(("C", t + 2));
        }
        for i in 0..10 {
            ev.push(("N", 20 + i * 137));
        }
        EventSequence::from_named(ev).unwrap()
    }

    fn planted_cfg(algorithm: Algorithm) -> SelectionConfig {
        // Threshold count 30 * 0.2 = 6 occurrences on the planted data.
        SelectionConfig::new(algorithm, MinerConfig::new(5, 0.06))
    }

    #[test]
    fn planted_pattern_is_selected_by_both_algorithms() {
        let seq = planted();
        for algo in [Algorithm::Csc1, Algorithm::Csc2] {
            let model = select(&seq, &planted_cfg(algo)).unwrap();
            assert_eq!(model.n_patterns(), 1, "{algo:?}");
            let ep = model.episodes()[0].episode();
            let names: Vec<&str> = ep.types().iter().map(|&t| seq.type_name(t)).collect();
            assert_eq!(names, ["A", "B", "C"]);
            assert_eq!(ep.gaps(), [1, 1]);
            assert_eq!(model.episodes()[0].frequency(), 30);
            // Residue: exactly the 10 noise events.
            let residual: usize = model.singletons().iter().map(|(_, ts)| ts.len()).sum();
            assert_eq!(residual, 10);
            assert!(model
                .singletons()
                .iter()
                .all(|&(ty, _)| seq.type_name(ty) == "N"));
        }
    }

    #[test]
    fn pattern_cap_is_respected() {
        let seq = planted();
        let mut cfg = planted_cfg(Algorithm::Csc1);
        cfg.max_patterns = Some(1);
        let model = select(&seq, &cfg).unwrap();
        assert_eq!(model.n_patterns(), 1);
        cfg.max_patterns = Some(0);
        assert_eq!(select(&seq, &cfg).unwrap_err(), SelectError::ZeroPatternCap);
    }

    #[test]
    fn model_covers_input_exactly() {
        let seq = planted();
        let model = select(&seq, &planted_cfg(Algorithm::Csc1)).unwrap();
        let mut covered: HashSet<(TypeId, Time)> = HashSet::new();
        for list in model.episodes() {
            for w in list.windows() {
                for e in list.episode().roll_out(w.start) {
                    covered.insert((e.event_type, e.time));
                }
            }
        }
        for &(ty, ref times) in model.singletons() {
            for &t in times {
                assert!(covered.insert((ty, t)), "singleton duplicates coverage");
            }
        }
        assert_eq!(covered.len(), seq.len());
        for e in seq.events() {
            assert!(covered.contains(&(e.event_type, e.time)));
        }
    }

    #[test]
    fn empty_sequence_selects_nothing() {
        let seq = EventSequence::from_named(Vec::<(&str, Time)>::new()).unwrap();
        let model = select(&seq, &planted_cfg(Algorithm::Csc2)).unwrap();
        assert!(model.episodes().is_empty());
        assert!(model.singletons().is_empty());
    }

    #[test]
    fn admitted_episodes_had_positive_scores() {
        let seq = planted();
        let model = select(&seq, &planted_cfg(Algorithm::Csc1)).unwrap();
        for list in model.episodes() {
            assert!(score(list.episode().len(), list.frequency()) > 0);
        }
    }

    #[test]
    fn determinism() {
        let seq = planted();
        let a = select(&seq, &planted_cfg(Algorithm::Csc1)).unwrap();
        let b = select(&seq, &planted_cfg(Algorithm::Csc1)).unwrap();
        assert_eq!(a, b);
    }
}

//! Pairwise shared-event counts between candidate episodes.
//!
//! Two candidates overlap on an event when that `(type, time)` pair lies in
//! an occurrence of both. The counts feed the selector: an episode's score
//! is discounted by the events it shares with already-selected episodes, so
//! double-covered events are not double-counted as savings.
//!
//! [`find_overlap_matrix`] computes all pairwise counts in one pass over the
//! sequence with tiny per-candidate automata. Each candidate keeps one
//! permanent "template" state watching for its first event type; whenever an
//! occurrence starts, a tracking state is spawned that walks the remaining
//! events of that occurrence by their exact offsets from the start. Every
//! state that fires on the current event marks its candidate, and each
//! unordered pair of marked candidates gets one shared event tallied.
//! Because an event belongs to at most one occurrence of an injective
//! fixed-interval episode, at most one state per candidate fires per event
//! and the tally is exact.

use std::collections::HashMap;

use crate::events::{EventSequence, Time};
use crate::miner::CandidateSet;

/// Above this many candidates the matrix switches from a dense `n x n`
/// array to a sparse pair map.
const DENSE_LIMIT: usize = 4096;

/// Symmetric matrix of shared-event counts with a zero diagonal, indexed by
/// candidate position in the originating [`CandidateSet`].
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    n: usize,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<u32>),
    Sparse(HashMap<(u32, u32), u64>),
}

impl OverlapMatrix {
    pub(crate) fn new(n: usize) -> Self {
        let storage = if n <= DENSE_LIMIT {
            Storage::Dense(vec![0; n * n])
        } else {
            Storage::Sparse(HashMap::new())
        };
        OverlapMatrix { n, storage }
    }

    /// Number of candidates the matrix is indexed by.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Shared-event count between candidates `a` and `b` (`get(a, a) == 0`).
    pub fn get(&self, a: usize, b: usize) -> u64 {
        assert!(a < self.n && b < self.n, "candidate index out of range");
        if a == b {
            return 0;
        }
        match &self.storage {
            Storage::Dense(cells) => cells[a * self.n + b] as u64,
            Storage::Sparse(map) => {
                let key = (a.min(b) as u32, a.max(b) as u32);
                map.get(&key).copied().unwrap_or(0)
            }
        }
    }

    fn bump(&mut self, a: u32, b: u32) {
        debug_assert_ne!(a, b);
        match &mut self.storage {
            Storage::Dense(cells) => {
                cells[a as usize * self.n + b as usize] += 1;
                cells[b as usize * self.n + a as usize] += 1;
            }
            Storage::Sparse(map) => {
                *map.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
    }
}

/// An automaton state: candidate `cand` has matched the first `pos - 1`
/// events of the occurrence starting at `start` and now waits for event
/// number `pos` (1-based). `pos == 1` marks the permanent template, whose
/// `start` is meaningless.
#[derive(Debug, Clone, Copy)]
struct WaitState {
    cand: u32,
    pos: u32,
    start: Time,
}

/// Computes the full overlap matrix for `candidates` over `seq`.
///
/// Candidates must carry exact occurrence lists for `seq` (as produced by
/// the miner); the first-event template only spawns a tracker when an
/// occurrence actually starts at the current time, so stray partial matches
/// are never tallied.
pub fn find_overlap_matrix(seq: &EventSequence, candidates: &CandidateSet) -> OverlapMatrix {
    let n = candidates.len();
    let mut om = OverlapMatrix::new(n);
    if n == 0 {
        return om;
    }
    let offsets: Vec<Vec<Time>> = candidates.iter().map(|c| c.episode().offsets()).collect();
    // Wait lists keyed by the event type each state is watching for.
    let mut waits: Vec<Vec<WaitState>> = vec![Vec::new(); seq.alphabet_size()];
    for (ci, cand) in candidates.iter().enumerate() {
        waits[cand.episode().types()[0] as usize].push(WaitState {
            cand: ci as u32,
            pos: 1,
            start: 0,
        });
    }
    let mut fired: Vec<u32> = Vec::new();
    for e in seq.events() {
        let ty = e.event_type as usize;
        let t = e.time;
        if waits[ty].is_empty() {
            continue;
        }
        fired.clear();
        // Spawned states always watch a different type (episode types are
        // pairwise distinct), so the current list can be detached while new
        // states land in other lists.
        let mut list = std::mem::take(&mut waits[ty]);
        list.retain(|st| {
            let cand = &candidates.episodes[st.cand as usize];
            let k = cand.episode().len();
            if st.pos == 1 {
                if cand.has_start(t) {
                    fired.push(st.cand);
                    if k > 1 {
                        waits[cand.episode().types()[1] as usize].push(WaitState {
                            cand: st.cand,
                            pos: 2,
                            start: t,
                        });
                    }
                }
                true // templates never retire
            } else {
                let j = st.pos as usize;
                if t - st.start != offsets[st.cand as usize][j - 1] {
                    return true; // keep waiting
                }
                fired.push(st.cand);
                if j < k {
                    waits[cand.episode().types()[j] as usize].push(WaitState {
                        cand: st.cand,
                        pos: st.pos + 1,
                        start: st.start,
                    });
                }
                false // matched: advance or retire
            }
        });
        debug_assert!(waits[ty].is_empty());
        waits[ty] = list;
        for i in 0..fired.len() {
            for j in i + 1..fired.len() {
                om.bump(fired[i], fired[j]);
            }
        }
    }
    om
}

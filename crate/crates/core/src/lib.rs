//! Mining and MDL-driven selection of fixed-interval serial episodes.
//!
//! A fixed-interval serial episode is an ordered list of pairwise-distinct
//! event types with an exact integer gap pinned between every consecutive
//! pair, e.g. `A -2-> B -1-> C` ("B exactly 2 ticks after A, C exactly 1 tick
//! after B"). Because the gaps are exact, a single start time determines the
//! whole occurrence, which makes counting, overlap analysis and decoding
//! cheap.
//!
//! The crate is organized as a pipeline:
//!
//! * [`events`] — event sequences, episodes, occurrence bookkeeping
//! * [`miner`] — frequency-threshold DFS mining and threshold-free
//!   best-extension growth of candidate episodes
//! * [`overlap`] — shared-event counts between candidates, computed in one
//!   automaton pass over the sequence
//! * [`selector`] — greedy encoded-length-minimizing subset selection
//!   (the `csc1` / `csc2` algorithms)
//! * [`codec`] — dictionary-table encoder/decoder with unit-count and
//!   bit-level (Elias gamma) accounting
//! * [`sim`] — conveyor-system trace generator used for end-to-end checks
//! * [`io`] — plain-text sequence/corpus reading and feature export

pub mod codec;
pub mod events;
pub mod io;
pub mod miner;
pub mod overlap;
pub mod selector;
pub mod sim;

pub use events::{Episode, Event, EventSequence, OccurrenceList, OccurrenceWindow, Time, TypeId};
pub use miner::{best_extensions, mine_episodes, CandidateSet, MinerConfig};
pub use overlap::{find_overlap_matrix, OverlapMatrix};
pub use selector::{select, Algorithm, SelectedModel, SelectionConfig};

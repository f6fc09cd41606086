//! Event sequences and fixed-interval serial episodes.
//!
//! Times are non-negative 64-bit integers; several events may share a time
//! stamp, but a `(type, time)` pair appears at most once. Event types are
//! interned into dense ids (`TypeId`) against a per-sequence alphabet so the
//! hot loops work on integers only.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Dense id of an event type; indexes the owning sequence's alphabet.
pub type TypeId = u32;
/// Event time stamp. Non-negative; kept signed so gap arithmetic stays simple.
pub type Time = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub event_type: TypeId,
    pub time: Time,
}

impl Event {
    pub fn new(event_type: TypeId, time: Time) -> Self {
        Event { event_type, time }
    }

    /// Canonical sort key: by time, ties by type id.
    fn key(&self) -> (Time, TypeId) {
        (self.time, self.event_type)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("event time {0} is negative")]
    NegativeTime(Time),
    #[error("event type id {id} out of range (alphabet has {alphabet} entries)")]
    UnknownType { id: TypeId, alphabet: usize },
    #[error("duplicate event (type {type_id}, time {time})")]
    DuplicateEvent { type_id: TypeId, time: Time },
}

/// A time-stamped event sequence over an interned alphabet.
///
/// Events are held sorted by `(time, type id)` and contain no duplicate
/// `(type, time)` pair. The alphabet maps dense ids back to the original
/// type names; ids are assigned in order of first appearance when a
/// sequence is built from named events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    events: Vec<Event>,
    alphabet: Vec<String>,
}

impl EventSequence {
    /// Builds a sequence from raw events, canonicalizing the order.
    ///
    /// Same-time events are stored sorted by type id; a duplicate
    /// `(type, time)` pair, a negative time or a type id outside the
    /// alphabet is rejected.
    pub fn new(mut events: Vec<Event>, alphabet: Vec<String>) -> Result<Self, SequenceError> {
        for e in &events {
            if e.time < 0 {
                return Err(SequenceError::NegativeTime(e.time));
            }
            if e.event_type as usize >= alphabet.len() {
                return Err(SequenceError::UnknownType {
                    id: e.event_type,
                    alphabet: alphabet.len(),
                });
            }
        }
        events.sort_unstable_by_key(Event::key);
        for pair in events.windows(2) {
            if pair[0] == pair[1] {
                return Err(SequenceError::DuplicateEvent {
                    type_id: pair[0].event_type,
                    time: pair[0].time,
                });
            }
        }
        Ok(EventSequence { events, alphabet })
    }

    /// Builds a sequence from `(name, time)` pairs, interning names into
    /// dense ids in order of first appearance.
    pub fn from_named<S: AsRef<str>>(
        named: impl IntoIterator<Item = (S, Time)>,
    ) -> Result<Self, SequenceError> {
        let mut ids: HashMap<String, TypeId> = HashMap::new();
        let mut alphabet = Vec::new();
        let mut events = Vec::new();
        for (name, time) in named {
            let name = name.as_ref();
            let id = *ids.entry(name.to_owned()).or_insert_with(|| {
                alphabet.push(name.to_owned());
                (alphabet.len() - 1) as TypeId
            });
            events.push(Event::new(id, time));
        }
        EventSequence::new(events, alphabet)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Size of the alphabet (registered type names, present or not).
    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    /// Number of distinct event types that actually occur in the sequence.
    pub fn present_type_count(&self) -> usize {
        let mut seen = vec![false; self.alphabet.len()];
        for e in &self.events {
            seen[e.event_type as usize] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    pub fn type_name(&self, id: TypeId) -> &str {
        &self.alphabet[id as usize]
    }

    pub fn name_id(&self, name: &str) -> Option<TypeId> {
        self.alphabet
            .iter()
            .position(|n| n == name)
            .map(|i| i as TypeId)
    }

    /// Membership test for a `(type, time)` pair; binary search on the
    /// canonical order.
    pub fn contains(&self, event_type: TypeId, time: Time) -> bool {
        self.events
            .binary_search_by_key(&(time, event_type), Event::key)
            .is_ok()
    }

    /// Occurrence times of every type, indexed by type id. Each inner list
    /// is strictly increasing; absent types get an empty list.
    pub fn times_by_type(&self) -> Vec<Vec<Time>> {
        let mut by_type = vec![Vec::new(); self.alphabet.len()];
        for e in &self.events {
            by_type[e.event_type as usize].push(e.time);
        }
        by_type
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EpisodeError {
    #[error("an episode needs at least one event type")]
    Empty,
    #[error("expected {expected} gaps for {types} types, got {got}")]
    GapArity {
        types: usize,
        expected: usize,
        got: usize,
    },
    #[error("inter-event gap {0} is not positive")]
    NonPositiveGap(Time),
    #[error("event type {0} repeats; episode types must be pairwise distinct")]
    RepeatedType(TypeId),
}

/// A fixed-interval serial episode: pairwise-distinct event types joined by
/// exact positive gaps. `types` and `gaps` are ordered field-first so the
/// derived `Ord` sorts episodes by type list, then by gap vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Episode {
    types: Vec<TypeId>,
    gaps: Vec<Time>,
}

impl Episode {
    pub fn new(types: Vec<TypeId>, gaps: Vec<Time>) -> Result<Self, EpisodeError> {
        if types.is_empty() {
            return Err(EpisodeError::Empty);
        }
        if gaps.len() != types.len() - 1 {
            return Err(EpisodeError::GapArity {
                types: types.len(),
                expected: types.len() - 1,
                got: gaps.len(),
            });
        }
        if let Some(&g) = gaps.iter().find(|&&g| g <= 0) {
            return Err(EpisodeError::NonPositiveGap(g));
        }
        // Injectivity. Episode lengths are tiny, so the quadratic scan wins
        // over hashing.
        for (i, &t) in types.iter().enumerate() {
            if types[i + 1..].contains(&t) {
                return Err(EpisodeError::RepeatedType(t));
            }
        }
        Ok(Episode { types, gaps })
    }

    /// One-node episode.
    pub fn single(event_type: TypeId) -> Self {
        Episode {
            types: vec![event_type],
            gaps: Vec::new(),
        }
    }

    /// Number of event types (the episode size `k`).
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one type
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    pub fn gaps(&self) -> &[Time] {
        &self.gaps
    }

    /// Total time spanned by one occurrence (sum of gaps).
    pub fn span(&self) -> Time {
        self.gaps.iter().sum()
    }

    /// Cumulative time offsets of each event from the occurrence start:
    /// `offsets()[0] == 0`, `offsets()[j] == gaps[0] + .. + gaps[j-1]`.
    pub fn offsets(&self) -> Vec<Time> {
        let mut offs = Vec::with_capacity(self.types.len());
        let mut acc = 0;
        offs.push(0);
        for &g in &self.gaps {
            acc += g;
            offs.push(acc);
        }
        offs
    }

    /// Appends one more event type at `gap` ticks after the current last.
    pub fn extended(&self, event_type: TypeId, gap: Time) -> Result<Self, EpisodeError> {
        let mut types = self.types.clone();
        let mut gaps = self.gaps.clone();
        types.push(event_type);
        gaps.push(gap);
        Episode::new(types, gaps)
    }

    /// Materializes the occurrence that starts at `start`.
    pub fn roll_out(&self, start: Time) -> Vec<Event> {
        let mut out = Vec::with_capacity(self.types.len());
        let mut t = start;
        out.push(Event::new(self.types[0], t));
        for (i, &g) in self.gaps.iter().enumerate() {
            t += g;
            out.push(Event::new(self.types[i + 1], t));
        }
        out
    }

    /// Human-readable label, e.g. `A -2-> B -1-> C`.
    pub fn label(&self, alphabet: &[String]) -> String {
        let mut s = String::new();
        s.push_str(&alphabet[self.types[0] as usize]);
        for (i, &g) in self.gaps.iter().enumerate() {
            let _ = write!(s, " -{}-> {}", g, alphabet[self.types[i + 1] as usize]);
        }
        s
    }
}

/// True iff every event of `episode.roll_out(start)` is present in `seq`.
pub fn verify_occurrence(seq: &EventSequence, episode: &Episode, start: Time) -> bool {
    let mut t = start;
    if !seq.contains(episode.types()[0], t) {
        return false;
    }
    for (i, &g) in episode.gaps().iter().enumerate() {
        t += g;
        if !seq.contains(episode.types()[i + 1], t) {
            return false;
        }
    }
    true
}

/// Closed time window `[start, end]` of one occurrence;
/// `end - start` equals the episode span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccurrenceWindow {
    pub start: Time,
    pub end: Time,
}

impl OccurrenceWindow {
    pub fn new(start: Time, end: Time) -> Self {
        OccurrenceWindow { start, end }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OccurrenceError {
    #[error("occurrence starts must be strictly increasing (saw {prev} then {next})")]
    UnsortedStarts { prev: Time, next: Time },
}

/// An episode together with every window in which it occurs.
///
/// Windows are sorted by strictly increasing start, and since injective
/// fixed-interval episodes admit exactly one occurrence per start, the
/// window count is the distinct-occurrence frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceList {
    episode: Episode,
    windows: Vec<OccurrenceWindow>,
}

impl OccurrenceList {
    /// Builds the list from occurrence start times (must be strictly
    /// increasing); window ends follow from the episode span.
    pub fn from_starts(episode: Episode, starts: Vec<Time>) -> Result<Self, OccurrenceError> {
        for pair in starts.windows(2) {
            if pair[0] >= pair[1] {
                return Err(OccurrenceError::UnsortedStarts {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        let span = episode.span();
        let windows = starts
            .into_iter()
            .map(|s| OccurrenceWindow::new(s, s + span))
            .collect();
        Ok(OccurrenceList { episode, windows })
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn windows(&self) -> &[OccurrenceWindow] {
        &self.windows
    }

    /// Distinct-occurrence frequency.
    pub fn frequency(&self) -> u64 {
        self.windows.len() as u64
    }

    pub fn starts(&self) -> impl Iterator<Item = Time> + '_ {
        self.windows.iter().map(|w| w.start)
    }

    /// Binary search for an occurrence starting exactly at `t`.
    pub fn has_start(&self, t: Time) -> bool {
        self.windows.binary_search_by_key(&t, |w| w.start).is_ok()
    }
}

//! Text ingestion and emission for sequences and corpora.
//!
//! Sequence files are line-oriented UTF-8: one `<type-token> <integer-time>`
//! pair per line, times non-decreasing, `#` starting a comment. A corpus
//! file holds several sequences as blank-line-separated blocks; a block may
//! open with `#label: <name>`, and a block of bare tokens (no times) is
//! stamped positionally 1..n. An optional `# alphabet: ...` header pins the
//! alphabet — including types that never occur — so write-then-read is the
//! identity even for sequences whose alphabet outruns their events.
//!
//! Multi-sequence corpora feed the miner through [`concat_corpus`], which
//! lays the blocks on one time axis far enough apart that no mining window
//! can span two of them. [`export_features`] turns a selection into a
//! per-sequence count matrix for downstream classifiers.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::events::{verify_occurrence, Event, EventSequence, Time, TypeId};
use crate::selector::SelectedModel;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{labelled} of {blocks} blocks are labelled; label all or none")]
    PartialLabels { labelled: usize, blocks: usize },
}

fn line_err(line: usize, reason: impl Into<String>) -> IoError {
    IoError::Line {
        line,
        reason: reason.into(),
    }
}

const ALPHABET_PREFIX: &str = "# alphabet:";
const LABEL_PREFIX: &str = "#label:";

/// Interns tokens to dense ids in first-appearance order, optionally
/// preseeded from an `# alphabet:` header.
#[derive(Default)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, TypeId>,
}

impl Interner {
    fn preseed(&mut self, header: &str, line: usize) -> Result<(), IoError> {
        for token in header.split_whitespace() {
            if self.ids.contains_key(token) {
                return Err(line_err(line, format!("type `{token}` listed twice")));
            }
            self.intern(token);
        }
        Ok(())
    }

    fn intern(&mut self, token: &str) -> TypeId {
        match self.ids.get(token) {
            Some(&id) => id,
            None => {
                let id = self.names.len() as TypeId;
                self.names.push(token.to_string());
                self.ids.insert(token.to_string(), id);
                id
            }
        }
    }
}

/// One parsed line of event data.
enum Row<'a> {
    Timed(&'a str, Time),
    Untimed(&'a str),
}

fn parse_row(body: &str, line: usize) -> Result<Row<'_>, IoError> {
    let mut fields = body.split_whitespace();
    let token = fields.next().expect("caller skips blank lines");
    match (fields.next(), fields.next()) {
        (None, _) => Ok(Row::Untimed(token)),
        (Some(t), None) => {
            let time: Time = t
                .parse()
                .map_err(|_| line_err(line, format!("bad time stamp `{t}`")))?;
            if time < 0 {
                return Err(line_err(line, format!("negative time stamp {time}")));
            }
            Ok(Row::Timed(token, time))
        }
        (Some(_), Some(_)) => Err(line_err(
            line,
            "expected `<type>` or `<type> <time>`, got more fields",
        )),
    }
}

/// Parses a single-sequence file: every data line is `<type> <time>`,
/// times non-decreasing, no repeated (type, time) pair.
pub fn parse_sequence(text: &str) -> Result<EventSequence, IoError> {
    let mut interner = Interner::default();
    let mut events: Vec<Event> = Vec::new();
    let mut seen: HashMap<(TypeId, Time), usize> = HashMap::new();
    let mut prev_time: Option<Time> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(header) = raw.strip_prefix(ALPHABET_PREFIX) {
            interner.preseed(header, line)?;
            continue;
        }
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (token, time) = match parse_row(body, line)? {
            Row::Timed(token, time) => (token, time),
            Row::Untimed(token) => {
                return Err(line_err(line, format!("`{token}` is missing a time stamp")))
            }
        };
        if prev_time.is_some_and(|p| time < p) {
            return Err(line_err(
                line,
                format!(
                    "time {time} decreases (previous was {})",
                    prev_time.unwrap()
                ),
            ));
        }
        prev_time = Some(time);
        let ty = interner.intern(token);
        if let Some(first) = seen.insert((ty, time), line) {
            return Err(line_err(
                line,
                format!("duplicate event `{token} {time}` (first on line {first})"),
            ));
        }
        events.push(Event {
            event_type: ty,
            time,
        });
    }
    Ok(EventSequence::new(events, interner.names).expect("parser enforces the invariants"))
}

/// Reads and parses a sequence file from disk.
pub fn read_sequence(path: impl AsRef<Path>) -> Result<EventSequence, IoError> {
    Ok(parse_sequence(&fs::read_to_string(path)?)?)
}

/// Writes a sequence in the text format, alphabet header included.
pub fn write_sequence(w: &mut impl Write, seq: &EventSequence) -> std::io::Result<()> {
    if !seq.alphabet().is_empty() {
        writeln!(w, "{ALPHABET_PREFIX} {}", seq.alphabet().join(" "))?;
    }
    for e in seq.events() {
        writeln!(w, "{} {}", seq.type_name(e.event_type), e.time)?;
    }
    Ok(())
}

/// A set of sequences over one shared alphabet, optionally labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    sequences: Vec<EventSequence>,
    labels: Option<Vec<String>>,
    alphabet: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, re-interning every sequence onto one shared
    /// alphabet (union, in first-appearance order across sequences).
    pub fn new(
        sequences: Vec<EventSequence>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, IoError> {
        if let Some(l) = &labels {
            if l.len() != sequences.len() {
                return Err(IoError::PartialLabels {
                    labelled: l.len(),
                    blocks: sequences.len(),
                });
            }
        }
        let mut interner = Interner::default();
        for seq in &sequences {
            for name in seq.alphabet() {
                interner.intern(name);
            }
        }
        let alphabet = interner.names.clone();
        let sequences = sequences
            .into_iter()
            .map(|seq| {
                let events = seq
                    .events()
                    .iter()
                    .map(|e| Event {
                        event_type: interner.ids[seq.type_name(e.event_type)],
                        time: e.time,
                    })
                    .collect();
                EventSequence::new(events, alphabet.clone())
                    .expect("remapping preserves the invariants")
            })
            .collect();
        Ok(Corpus {
            sequences,
            labels,
            alphabet,
        })
    }

    pub fn sequences(&self) -> &[EventSequence] {
        &self.sequences
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The shared alphabet every member sequence indexes into.
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Parses a corpus file: blank-line-separated blocks, optional `#label:`
/// opener per block, each block either all timed or all untimed (untimed
/// tokens are stamped 1..n).
pub fn parse_corpus(text: &str) -> Result<Corpus, IoError> {
    struct Block {
        label: Option<String>,
        /// (token, explicit time, line) triples.
        rows: Vec<(String, Option<Time>, usize)>,
    }
    let mut interner = Interner::default();
    let mut blocks: Vec<Block> = Vec::new();
    let mut open: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(header) = raw.strip_prefix(ALPHABET_PREFIX) {
            interner.preseed(header, line)?;
            continue;
        }
        if let Some(label) = raw.strip_prefix(LABEL_PREFIX) {
            if open.is_some() {
                return Err(line_err(line, "`#label:` must open a block"));
            }
            open = Some(Block {
                label: Some(label.trim().to_string()),
                rows: Vec::new(),
            });
            continue;
        }
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            // A blank data line closes the open block (comments do not).
            if raw.trim().is_empty() {
                if let Some(b) = open.take() {
                    blocks.push(b);
                }
            }
            continue;
        }
        let row = parse_row(body, line)?;
        let block = open.get_or_insert_with(|| Block {
            label: None,
            rows: Vec::new(),
        });
        match row {
            Row::Timed(token, time) => block.rows.push((token.to_string(), Some(time), line)),
            Row::Untimed(token) => block.rows.push((token.to_string(), None, line)),
        }
    }
    if let Some(b) = open.take() {
        blocks.push(b);
    }

    let mut sequences = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    for block in blocks {
        let timed = block.rows.iter().filter(|(_, t, _)| t.is_some()).count();
        if timed != 0 && timed != block.rows.len() {
            let (_, _, line) = block.rows[0];
            return Err(line_err(
                line,
                "block mixes timed and untimed rows; pick one style per block",
            ));
        }
        let mut events = Vec::new();
        let mut seen: HashMap<(TypeId, Time), usize> = HashMap::new();
        let mut prev_time: Option<Time> = None;
        for (pos, (token, time, line)) in block.rows.iter().enumerate() {
            let time = time.unwrap_or(pos as Time + 1);
            if prev_time.is_some_and(|p| time < p) {
                return Err(line_err(*line, format!("time {time} decreases")));
            }
            prev_time = Some(time);
            let ty = interner.intern(token);
            if let Some(first) = seen.insert((ty, time), *line) {
                return Err(line_err(
                    *line,
                    format!("duplicate event `{token} {time}` (first on line {first})"),
                ));
            }
            events.push(Event {
                event_type: ty,
                time,
            });
        }
        // Alphabet is patched to the shared one after interning finishes.
        sequences.push(events);
        labels.push(block.label);
    }

    let alphabet = interner.names;
    let sequences: Vec<EventSequence> = sequences
        .into_iter()
        .map(|events| {
            EventSequence::new(events, alphabet.clone()).expect("parser enforces the invariants")
        })
        .collect();
    let labelled = labels.iter().filter(|l| l.is_some()).count();
    let labels = if labelled == 0 {
        None
    } else if labelled == sequences.len() {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else {
        return Err(IoError::PartialLabels {
            labelled,
            blocks: sequences.len(),
        });
    };
    Corpus::new(sequences, labels)
}

/// Reads and parses a corpus file from disk.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus, IoError> {
    Ok(parse_corpus(&fs::read_to_string(path)?)?)
}

/// Writes a corpus in the text format: shared alphabet header, then one
/// timed block per sequence separated by blank lines.
pub fn write_corpus(w: &mut impl Write, corpus: &Corpus) -> std::io::Result<()> {
    if !corpus.alphabet().is_empty() {
        writeln!(w, "{ALPHABET_PREFIX} {}", corpus.alphabet().join(" "))?;
    }
    for (i, seq) in corpus.sequences().iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        if let Some(labels) = corpus.labels() {
            writeln!(w, "{LABEL_PREFIX} {}", labels[i])?;
        }
        for e in seq.events() {
            writeln!(w, "{} {}", seq.type_name(e.event_type), e.time)?;
        }
    }
    Ok(())
}

/// Lays a corpus's sequences on one time axis, spacing consecutive blocks
/// `max_gap + 1` ticks apart so no occurrence window can bridge them.
pub fn concat_corpus(corpus: &Corpus, max_gap: Time) -> EventSequence {
    assert!(max_gap >= 1, "max_gap must be positive");
    let mut events: Vec<Event> = Vec::new();
    let mut base: Time = 0;
    for seq in corpus.sequences() {
        if seq.is_empty() {
            continue;
        }
        events.extend(seq.events().iter().map(|e| Event {
            event_type: e.event_type,
            time: e.time + base,
        }));
        base = events.last().unwrap().time + max_gap + 1;
    }
    EventSequence::new(events, corpus.alphabet().to_vec())
        .expect("blocks are valid and never overlap in time")
}

fn csv_field(s: &str) -> Cow<'_, str> {
    if s.contains([',', '"', '\n']) {
        Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(s)
    }
}

/// Counts non-overlapped serial occurrences of `types` (in order, strictly
/// increasing times, any gaps) by a greedy left-to-right scan.
fn serial_count(seq: &EventSequence, types: &[TypeId]) -> u64 {
    let mut count = 0;
    let mut next = 0usize;
    let mut last_time = Time::MIN;
    for e in seq.events() {
        if e.event_type == types[next] && (next == 0 || e.time > last_time) {
            last_time = e.time;
            next += 1;
            if next == types.len() {
                count += 1;
                next = 0;
            }
        }
    }
    count
}

/// Counts occurrences of an exact-gap episode in one sequence.
fn fixed_count(seq: &EventSequence, episode: &crate::events::Episode) -> u64 {
    let first = episode.types()[0];
    let Some(times) = seq.times_by_type().into_iter().nth(first as usize) else {
        return 0;
    };
    times
        .iter()
        .filter(|&&t| verify_occurrence(seq, episode, t))
        .count() as u64
}

/// Emits a per-sequence feature matrix as comma-separated text: one column
/// per selected multi-node pattern (exact-gap occurrence counts, or — with
/// `drop_gaps` — gap-free patterns deduplicated by type list and counted as
/// non-overlapped serial occurrences), then one count column per alphabet
/// type, then the class label when the corpus has labels.
pub fn export_features(corpus: &Corpus, model: &SelectedModel, drop_gaps: bool) -> String {
    // Resolve model types into the corpus alphabet by name; a pattern over
    // a type the corpus lacks simply scores zero everywhere.
    let resolve = |ty: TypeId| -> Option<TypeId> {
        let name = model.alphabet().get(ty as usize)?;
        corpus
            .alphabet()
            .iter()
            .position(|n| n == name)
            .map(|i| i as TypeId)
    };

    enum Column {
        Fixed(crate::events::Episode),
        Serial(Vec<Option<TypeId>>),
        Singleton(TypeId),
    }
    let mut header: Vec<String> = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    if drop_gaps {
        let mut seen: Vec<Vec<TypeId>> = Vec::new();
        for list in model.episodes() {
            let types = list.episode().types().to_vec();
            if seen.contains(&types) {
                continue; // same type list, different gaps: one column
            }
            seen.push(types.clone());
            let names: Vec<&str> = types
                .iter()
                .map(|&t| model.alphabet()[t as usize].as_str())
                .collect();
            header.push(names.join(" -> "));
            columns.push(Column::Serial(types.iter().map(|&t| resolve(t)).collect()));
        }
    } else {
        for list in model.episodes() {
            header.push(list.episode().label(model.alphabet()));
            let remapped = list.episode().types().iter().map(|&t| resolve(t));
            let column = remapped.collect::<Option<Vec<_>>>().and_then(|types| {
                crate::events::Episode::new(types, list.episode().gaps().to_vec()).ok()
            });
            match column {
                Some(ep) => columns.push(Column::Fixed(ep)),
                // Unresolvable type: keep the column, count zero.
                None => columns.push(Column::Serial(vec![None])),
            }
        }
    }
    for (i, name) in corpus.alphabet().iter().enumerate() {
        header.push(name.clone());
        columns.push(Column::Singleton(i as TypeId));
    }
    if corpus.labels().is_some() {
        header.push("label".to_string());
    }

    let mut out = String::new();
    out.push_str(
        &header
            .iter()
            .map(|h| csv_field(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for (i, seq) in corpus.sequences().iter().enumerate() {
        let counts_by_type: Vec<u64> = seq
            .times_by_type()
            .iter()
            .map(|ts| ts.len() as u64)
            .collect();
        let mut row: Vec<String> = Vec::new();
        for col in &columns {
            let count = match col {
                Column::Fixed(ep) => fixed_count(seq, ep),
                Column::Serial(types) => {
                    match types.iter().copied().collect::<Option<Vec<TypeId>>>() {
                        Some(types) => serial_count(seq, &types),
                        None => 0,
                    }
                }
                Column::Singleton(ty) => counts_by_type[*ty as usize],
            };
            row.push(count.to_string());
        }
        if let Some(labels) = corpus.labels() {
            row.push(csv_field(&labels[i]).into_owned());
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

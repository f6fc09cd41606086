//! Dictionary-table encoding and decoding.
//!
//! A sequence is encoded as a table with one row per episode: the episode
//! size, its types and gaps, the occurrence count, and the occurrence start
//! times. Multi-node rows come from the selector; whatever they do not
//! cover is appended as one-node rows. Decoding rolls every row out to
//! events, merges, and drops duplicates — lossless by construction.
//!
//! Costs are accounted two ways:
//!
//! * **integer units** — every stored integer costs one unit, so a row
//!   costs `2k + f + 1`; the baseline ("trivial") encoding of a sequence
//!   with `M` present types and `n` events costs `3M + n`;
//! * **bits** — the same integer stream under Elias gamma codes, with
//!   event types at a fixed `floor(log2 M) + 1` bits and the alphabet size
//!   at the stream head. Every gamma-coded integer is shifted by `+1` on
//!   emit (gamma has no code for zero) and shifted back on decode.
//!   Occurrence starts are delta-coded by default,
//!   [`StartCoding::Raw`] stores them verbatim instead.
//!
//! Two on-disk framings are provided: `.cse` (unit-level: fixed 64-bit
//! little-endian integers) and `.cseb` (the gamma bit stream), both carrying
//! an 8-byte magic and an appended alphabet string table.

pub mod bits;

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use thiserror::Error;

pub use bits::elias_len;
use bits::{BitError, BitReader, BitWriter};

use crate::events::{Episode, Event, EventSequence, SequenceError, Time, TypeId};
use crate::selector::SelectedModel;

const UNIT_MAGIC: &[u8; 8] = b"CSEUNIT1";
const BIT_MAGIC: &[u8; 8] = b"CSEBITS1";
/// Sanity cap on string-table name lengths when reading untrusted files.
const MAX_NAME_LEN: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("bad magic: not a {expected} file")]
    BadMagic { expected: &'static str },
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error(transparent)]
    Bits(#[from] BitError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One table row: an episode, plus the starts of all its occurrences.
/// The occurrence count is `starts.len()`; starts are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub episode: Episode,
    pub starts: Vec<Time>,
}

impl TableRow {
    /// Validating constructor for rows parsed from untrusted bytes.
    pub fn new(episode: Episode, starts: Vec<Time>) -> Result<Self, String> {
        for pair in starts.windows(2) {
            if pair[0] >= pair[1] {
                return Err(format!(
                    "occurrence starts must strictly increase ({} then {})",
                    pair[0], pair[1]
                ));
            }
        }
        if starts.first().is_some_and(|&s| s < 0) {
            return Err("negative occurrence start".into());
        }
        Ok(TableRow { episode, starts })
    }

    pub fn occ_count(&self) -> u64 {
        self.starts.len() as u64
    }

    /// Integer units this row occupies: 1 size + k types + (k-1) gaps +
    /// 1 count + f starts = 2k + f + 1.
    pub fn unit_len(&self) -> u64 {
        2 * self.episode.len() as u64 + self.occ_count() + 1
    }
}

/// The full encoding of one sequence: rows plus the alphabet they index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    pub rows: Vec<TableRow>,
    pub alphabet: Vec<String>,
}

impl CodeTable {
    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }
}

/// Builds the code table for a selection: multi-node episodes first, in
/// selection order, then one row per residual singleton type.
pub fn build_table(model: &SelectedModel) -> CodeTable {
    let mut rows: Vec<TableRow> = model
        .episodes()
        .iter()
        .map(|l| TableRow {
            episode: l.episode().clone(),
            starts: l.starts().collect(),
        })
        .collect();
    rows.extend(model.singletons().iter().map(|(ty, times)| TableRow {
        episode: Episode::single(*ty),
        starts: times.clone(),
    }));
    CodeTable {
        rows,
        alphabet: model.alphabet().to_vec(),
    }
}

/// Splits a table back into a model: multi-node rows become episodes (in
/// row order), one-node rows merge into per-type singleton lists.
pub fn table_to_model(table: &CodeTable) -> Result<SelectedModel, CodecError> {
    let mut episodes = Vec::new();
    let mut singles: BTreeMap<TypeId, Vec<Time>> = BTreeMap::new();
    for (row, r) in table.rows.iter().enumerate() {
        if r.episode.len() > 1 {
            let list =
                crate::events::OccurrenceList::from_starts(r.episode.clone(), r.starts.clone())
                    .map_err(|e| CodecError::MalformedRow {
                        row,
                        reason: e.to_string(),
                    })?;
            episodes.push(list);
        } else {
            singles
                .entry(r.episode.types()[0])
                .or_default()
                .extend(&r.starts);
        }
    }
    let singletons = singles
        .into_iter()
        .map(|(ty, mut times)| {
            times.sort_unstable();
            times.dedup();
            (ty, times)
        })
        .collect();
    Ok(SelectedModel::from_parts(
        episodes,
        singletons,
        table.alphabet.clone(),
    ))
}

/// Integer-unit cost breakdown of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitLength {
    /// Dictionary side: size + types + gaps per row, i.e. `sum of 2k`.
    pub model_len: u64,
    /// Data side: occurrence count + starts per row, i.e. `sum of f + 1`.
    pub data_len: u64,
    pub total: u64,
}

/// Unit-level length of a table per the `2k + f + 1` row accounting.
pub fn unit_length(table: &CodeTable) -> UnitLength {
    let model_len = table.rows.iter().map(|r| 2 * r.episode.len() as u64).sum();
    let data_len = table.rows.iter().map(|r| r.occ_count() + 1).sum();
    UnitLength {
        model_len,
        data_len,
        total: model_len + data_len,
    }
}

/// Unit cost of encoding `seq` with one-node rows only: `3M + n`, where `M`
/// counts the event types actually present.
pub fn trivial_length(seq: &EventSequence) -> u64 {
    3 * seq.present_type_count() as u64 + seq.len() as u64
}

/// The singleton-only table of a sequence (rows ascending by type id).
pub fn trivial_table(seq: &EventSequence) -> CodeTable {
    let rows = seq
        .times_by_type()
        .into_iter()
        .enumerate()
        .filter(|(_, times)| !times.is_empty())
        .map(|(ty, times)| TableRow {
            episode: Episode::single(ty as TypeId),
            starts: times,
        })
        .collect();
    CodeTable {
        rows,
        alphabet: seq.alphabet().to_vec(),
    }
}

/// Reconstructs the event sequence a table encodes: every row's occurrences
/// rolled out, merged, sorted, duplicates dropped.
pub fn decode(table: &CodeTable) -> Result<EventSequence, CodecError> {
    let mut events: Vec<Event> = Vec::new();
    for row in &table.rows {
        for &s in &row.starts {
            events.extend(row.episode.roll_out(s));
        }
    }
    events.sort_unstable_by_key(|e| (e.time, e.event_type));
    events.dedup();
    Ok(EventSequence::new(events, table.alphabet.clone())?)
}

/// How occurrence-start lists are laid down in the bit stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartCoding {
    /// First start absolute, then successive differences (default).
    Delta,
    /// Every start absolute.
    Raw,
}

/// A gamma-coded table: exact bit count plus the zero-padded bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

/// Fixed width of an event-type code for an alphabet of `m` types.
fn type_width(m: usize) -> u32 {
    debug_assert!(m >= 1);
    64 - (m as u64).leading_zeros() // floor(log2 m) + 1
}

/// Encodes a table as a self-delimiting bit stream: alphabet size, then
/// each row as size, fixed-width types, gaps, occurrence count, starts.
/// All gamma-coded integers are emitted as `value + 1`.
pub fn bit_encode(table: &CodeTable, coding: StartCoding) -> BitStream {
    let m = table.alphabet.len();
    let mut w = BitWriter::new();
    w.write_gamma(m as u64 + 1);
    for row in &table.rows {
        let k = row.episode.len() as u64;
        w.write_gamma(k + 1);
        let width = type_width(m); // rows exist, so m >= 1
        for &ty in row.episode.types() {
            w.write_bits(ty as u64, width);
        }
        for &g in row.episode.gaps() {
            w.write_gamma(g as u64 + 1);
        }
        w.write_gamma(row.occ_count() + 1);
        match coding {
            StartCoding::Delta => {
                let mut prev = None;
                for &s in &row.starts {
                    match prev {
                        None => w.write_gamma(s as u64 + 1),
                        Some(p) => w.write_gamma((s - p) as u64 + 1),
                    }
                    prev = Some(s);
                }
            }
            StartCoding::Raw => {
                for &s in &row.starts {
                    w.write_gamma(s as u64 + 1);
                }
            }
        }
    }
    let (bytes, bit_len) = w.into_parts();
    BitStream { bytes, bit_len }
}

/// Decodes a bit stream produced by [`bit_encode`]. The alphabet travels in
/// the file framing, not the stream; the stream's leading alphabet size
/// must agree with it.
pub fn bit_decode(
    bytes: &[u8],
    bit_len: u64,
    coding: StartCoding,
    alphabet: Vec<String>,
) -> Result<CodeTable, CodecError> {
    let mut r = BitReader::new(bytes, bit_len);
    let m = r.read_gamma("alphabet size")? - 1;
    if m != alphabet.len() as u64 {
        return Err(CodecError::Corrupt(format!(
            "stream says {m} types, string table has {}",
            alphabet.len()
        )));
    }
    let mut rows = Vec::new();
    while !r.exhausted() {
        let row = rows.len();
        let bad = |reason: String| CodecError::MalformedRow { row, reason };
        let k = r.read_gamma("episode size")? - 1;
        if k == 0 || k > m {
            return Err(bad(format!("episode size {k} invalid for {m} types")));
        }
        let width = type_width(m as usize);
        let mut types = Vec::new();
        for _ in 0..k {
            let ty = r.read_bits(width, "event type")?;
            if ty >= m {
                return Err(bad(format!("event type {ty} out of range")));
            }
            types.push(ty as TypeId);
        }
        let mut gaps = Vec::new();
        for _ in 0..k - 1 {
            gaps.push(to_time(r.read_gamma("gap")? - 1, row)?);
        }
        let episode = Episode::new(types, gaps).map_err(|e| bad(e.to_string()))?;
        let f = r.read_gamma("occurrence count")? - 1;
        let mut starts = Vec::new();
        let mut prev: Option<Time> = None;
        for _ in 0..f {
            let v = r.read_gamma("occurrence start")? - 1;
            let s = match (coding, prev) {
                (StartCoding::Delta, Some(p)) => p
                    .checked_add(to_time(v, row)?)
                    .ok_or_else(|| bad("occurrence start overflows".into()))?,
                _ => to_time(v, row)?,
            };
            prev = Some(s);
            starts.push(s);
        }
        rows.push(TableRow::new(episode, starts).map_err(|reason| bad(reason))?);
    }
    Ok(CodeTable { rows, alphabet })
}

fn to_time(v: u64, row: usize) -> Result<Time, CodecError> {
    Time::try_from(v).map_err(|_| CodecError::MalformedRow {
        row,
        reason: format!("integer {v} exceeds the time range"),
    })
}

/// Full cost report for one table against the sequence it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingStats {
    pub model_len: u64,
    pub data_len: u64,
    pub total: u64,
    pub trivial_len: u64,
    /// `trivial_len / total`; > 1 means the model beats the baseline.
    pub ratio: f64,
    pub bit_total: u64,
    pub bit_trivial: u64,
    pub bit_ratio: f64,
}

/// Computes unit and bit costs of `table` next to the trivial encoding of
/// `seq` (which must be the sequence the table encodes).
pub fn encoding_stats(
    table: &CodeTable,
    seq: &EventSequence,
    coding: StartCoding,
) -> EncodingStats {
    let unit = unit_length(table);
    let trivial_len = trivial_length(seq);
    let bit_total = bit_encode(table, coding).bit_len;
    let bit_trivial = bit_encode(&trivial_table(seq), coding).bit_len;
    let ratio = if unit.total == 0 {
        1.0 // empty table encodes an empty sequence; call it even
    } else {
        trivial_len as f64 / unit.total as f64
    };
    EncodingStats {
        model_len: unit.model_len,
        data_len: unit.data_len,
        total: unit.total,
        trivial_len,
        ratio,
        bit_total,
        bit_trivial,
        bit_ratio: bit_trivial as f64 / bit_total as f64,
    }
}

// ---------------------------------------------------------------------------
// On-disk framing
// ---------------------------------------------------------------------------

fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read, what: &'static str) -> Result<u64, CodecError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| truncated(e, what))?;
    Ok(u64::from_le_bytes(buf))
}

fn truncated(e: io::Error, what: &'static str) -> CodecError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        CodecError::Corrupt(format!("file truncated while reading {what}"))
    } else {
        CodecError::Io(e)
    }
}

fn write_alphabet(w: &mut impl Write, alphabet: &[String]) -> io::Result<()> {
    put_u64(w, alphabet.len() as u64)?;
    for name in alphabet {
        put_u64(w, name.len() as u64)?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

fn read_alphabet(r: &mut impl Read) -> Result<Vec<String>, CodecError> {
    let count = get_u64(r, "alphabet size")?;
    let mut alphabet = Vec::new();
    for _ in 0..count {
        let len = get_u64(r, "name length")?;
        if len > MAX_NAME_LEN {
            return Err(CodecError::Corrupt(format!(
                "alphabet name of {len} bytes is implausible"
            )));
        }
        let mut buf = vec![0u8; len as usize];
        r.read_exact(&mut buf).map_err(|e| truncated(e, "name"))?;
        let name = String::from_utf8(buf)
            .map_err(|_| CodecError::Corrupt("alphabet name is not UTF-8".into()))?;
        alphabet.push(name);
    }
    Ok(alphabet)
}

fn expect_eof(r: &mut impl Read, expected: &'static str) -> Result<(), CodecError> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(CodecError::Corrupt(format!(
            "trailing bytes after {expected} payload"
        ))),
        Err(e) => Err(CodecError::Io(e)),
    }
}

fn check_magic(
    r: &mut impl Read,
    magic: &[u8; 8],
    expected: &'static str,
) -> Result<(), CodecError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| truncated(e, "magic"))?;
    if &buf != magic {
        return Err(CodecError::BadMagic { expected });
    }
    Ok(())
}

/// Writes the unit-level `.cse` format: magic, row count, each row's plain
/// integer stream (size, types, gaps, count, raw starts), alphabet table.
pub fn write_unit_file(w: &mut impl Write, table: &CodeTable) -> io::Result<()> {
    w.write_all(UNIT_MAGIC)?;
    put_u64(w, table.rows.len() as u64)?;
    for row in &table.rows {
        put_u64(w, row.episode.len() as u64)?;
        for &ty in row.episode.types() {
            put_u64(w, ty as u64)?;
        }
        for &g in row.episode.gaps() {
            put_u64(w, g as u64)?;
        }
        put_u64(w, row.occ_count())?;
        for &s in &row.starts {
            put_u64(w, s as u64)?;
        }
    }
    write_alphabet(w, &table.alphabet)
}

/// Reads a `.cse` file back into a table, validating structure and ranges.
pub fn read_unit_file(r: &mut impl Read) -> Result<CodeTable, CodecError> {
    check_magic(r, UNIT_MAGIC, ".cse")?;
    let n_rows = get_u64(r, "row count")?;
    let mut raw_rows = Vec::new();
    for row in 0..n_rows as usize {
        let bad = |reason: String| CodecError::MalformedRow { row, reason };
        let k = get_u64(r, "episode size")?;
        if k == 0 {
            return Err(bad("episode size 0".into()));
        }
        let mut types = Vec::new();
        for _ in 0..k {
            let ty = get_u64(r, "event type")?;
            types.push(
                TypeId::try_from(ty).map_err(|_| bad(format!("event type {ty} out of range")))?,
            );
        }
        let mut gaps = Vec::new();
        for _ in 0..k - 1 {
            gaps.push(to_time(get_u64(r, "gap")?, row)?);
        }
        let f = get_u64(r, "occurrence count")?;
        let mut starts = Vec::new();
        for _ in 0..f {
            starts.push(to_time(get_u64(r, "occurrence start")?, row)?);
        }
        let episode = Episode::new(types, gaps).map_err(|e| bad(e.to_string()))?;
        raw_rows.push(TableRow::new(episode, starts).map_err(bad)?);
    }
    let alphabet = read_alphabet(r)?;
    expect_eof(r, ".cse")?;
    for (row, tr) in raw_rows.iter().enumerate() {
        if let Some(&ty) = tr
            .episode
            .types()
            .iter()
            .find(|&&t| t as usize >= alphabet.len())
        {
            return Err(CodecError::MalformedRow {
                row,
                reason: format!(
                    "event type {ty} not in the {}-entry alphabet",
                    alphabet.len()
                ),
            });
        }
    }
    Ok(CodeTable {
        rows: raw_rows,
        alphabet,
    })
}

/// Writes the bit-level `.cseb` format: magic, a flags byte (bit 0 set for
/// raw start coding), the exact bit count, the padded stream, alphabet table.
pub fn write_bit_file(
    w: &mut impl Write,
    table: &CodeTable,
    coding: StartCoding,
) -> io::Result<()> {
    let stream = bit_encode(table, coding);
    w.write_all(BIT_MAGIC)?;
    w.write_all(&[(coding == StartCoding::Raw) as u8])?;
    put_u64(w, stream.bit_len)?;
    w.write_all(&stream.bytes)?;
    write_alphabet(w, &table.alphabet)
}

/// Reads a `.cseb` file back into a table plus the start coding it used.
pub fn read_bit_file(r: &mut impl Read) -> Result<(CodeTable, StartCoding), CodecError> {
    check_magic(r, BIT_MAGIC, ".cseb")?;
    let mut flags = [0u8; 1];
    r.read_exact(&mut flags)
        .map_err(|e| truncated(e, "flags"))?;
    if flags[0] & !1 != 0 {
        return Err(CodecError::Corrupt(format!(
            "unknown flags {:#04x}",
            flags[0]
        )));
    }
    let coding = if flags[0] & 1 == 1 {
        StartCoding::Raw
    } else {
        StartCoding::Delta
    };
    let bit_len = get_u64(r, "bit count")?;
    let n_bytes = bit_len.div_ceil(8);
    let mut bytes = vec![0u8; n_bytes as usize];
    r.read_exact(&mut bytes)
        .map_err(|e| truncated(e, "bit stream"))?;
    let alphabet = read_alphabet(r)?;
    expect_eof(r, ".cseb")?;
    let table = bit_decode(&bytes, bit_len, coding, alphabet)?;
    Ok((table, coding))
}

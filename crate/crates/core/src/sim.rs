//! Conveyor-line trace generator.
//!
//! A [`Topology`] is a set of transport units (inputs `I*`, straight
//! segments `S*`, turns `T*`, outputs `O*`) wired into fixed paths from an
//! input to an output. Packages arrive on each path as a Poisson process,
//! and every hand-off onto a unit emits one `(unit, time)` event; a package
//! born at `b` on path `u0 u1 ...` is seen at `u0` at time `b`, at `u1`
//! after dwelling `transit(u0)` ticks, and so on. Merging all packages
//! gives a long interleaved sequence in which each path's regular cadence
//! hides — exactly the kind of structure the miner is meant to recover.
//!
//! The generator is deliberately simple: no blocking, no routing choices,
//! no sensor model. When two packages would stamp the same `(unit, time)`
//! pair, the later-born package's remaining schedule slips by one tick
//! (repeatedly if needed), which keeps every event unique without
//! modelling congestion.
//!
//! Three built-in layouts of increasing size are provided, and arbitrary
//! ones can be described in a small text format (see [`parse_topology`]).

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use thiserror::Error;

use crate::events::{Episode, Event, EventSequence, Time, TypeId};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("unknown builtin topology `{0}` (expected 2I-2O, 3I-3O or PackageSorter)")]
    UnknownBuiltin(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("topology declares no paths")]
    NoPaths,
}

/// How the configured arrival rate is spread over a topology's paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMode {
    /// Every path gets an independent Poisson stream at the full rate.
    #[default]
    PerPath,
    /// The rate is the whole system's; each path gets `rate / n_paths`.
    TotalSplit,
}

/// What a unit's name says about its role, from the leading letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum UnitKind {
    Input,
    Segment,
    Turn,
    Output,
}

fn unit_kind(name: &str) -> Option<UnitKind> {
    match name.chars().next()? {
        'I' => Some(UnitKind::Input),
        'S' => Some(UnitKind::Segment),
        'T' => Some(UnitKind::Turn),
        'O' => Some(UnitKind::Output),
        _ => None,
    }
}

/// Default dwell (ticks a package spends on a unit before the next
/// hand-off): inputs release quickly, turns are the slow spots.
fn default_dwell(kind: UnitKind) -> Time {
    match kind {
        UnitKind::Input => 1,
        UnitKind::Segment => 2,
        UnitKind::Turn => 3,
        UnitKind::Output => 1,
    }
}

/// Sort key giving the conventional roster order: inputs, segments, turns,
/// outputs, each group by numeric suffix.
fn roster_key(name: &str) -> (UnitKind, u64, String) {
    let kind = unit_kind(name).expect("validated unit name");
    let number = name[1..].parse::<u64>().unwrap_or(u64::MAX);
    (kind, number, name.to_string())
}

/// A conveyor layout: units with dwell times, fixed input-to-output paths,
/// and the package arrival rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    units: Vec<String>,
    transit: Vec<Time>,
    /// Paths as indices into `units`.
    paths: Vec<Vec<usize>>,
    rate: f64,
    rate_mode: RateMode,
}

impl Topology {
    /// Assembles and validates a topology. `units` pairs names with dwell
    /// times; `paths` lists unit names in travel order.
    pub fn new(
        name: impl Into<String>,
        units: Vec<(String, Time)>,
        paths: Vec<Vec<String>>,
        rate: f64,
    ) -> Result<Self, TopologyError> {
        let bad = |reason: String| TopologyError::Parse { line: 0, reason };
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(bad(format!("arrival rate {rate} must be finite and >= 0")));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, (unit, dwell)) in units.iter().enumerate() {
            if unit_kind(unit).is_none() {
                return Err(bad(format!("unit `{unit}` must start with I, S, T or O")));
            }
            if *dwell < 1 {
                return Err(bad(format!("unit `{unit}` has dwell {dwell} < 1")));
            }
            if index.insert(unit.as_str(), i).is_some() {
                return Err(bad(format!("unit `{unit}` declared twice")));
            }
        }
        if paths.is_empty() {
            return Err(TopologyError::NoPaths);
        }
        let mut path_ids = Vec::new();
        for path in &paths {
            let ids: Vec<usize> = path
                .iter()
                .map(|u| {
                    index
                        .get(u.as_str())
                        .copied()
                        .ok_or_else(|| bad(format!("path uses undeclared unit `{u}`")))
                })
                .collect::<Result<_, _>>()?;
            if ids.is_empty() {
                return Err(bad("empty path".into()));
            }
            let first = unit_kind(&path[0]).unwrap();
            let last = unit_kind(path.last().unwrap()).unwrap();
            if first != UnitKind::Input || last != UnitKind::Output {
                return Err(bad(format!(
                    "path `{}` must run from an input to an output",
                    path.join(" ")
                )));
            }
            path_ids.push(ids);
        }
        let (units, transit) = units.into_iter().unzip();
        Ok(Topology {
            name: name.into(),
            units,
            transit,
            paths: path_ids,
            rate,
            rate_mode: RateMode::PerPath,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Unit names; their order defines the trace's alphabet.
    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn transit_time(&self, unit: usize) -> Time {
        self.transit[unit]
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// One path as unit indices in travel order.
    pub fn path(&self, idx: usize) -> &[usize] {
        &self.paths[idx]
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rate_mode(&self) -> RateMode {
        self.rate_mode
    }

    pub fn with_rate_mode(mut self, mode: RateMode) -> Self {
        self.rate_mode = mode;
        self
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }
}

/// Builds one of the three shipped layouts by name: `2I-2O` (16 units,
/// rate 0.6), `3I-3O` (33 units, rate 0.4) or `PackageSorter` (64 units,
/// rate 0.2). Unit counts include a few spare segments that sit off every
/// path, so the alphabet is a superset of what a trace can emit.
pub fn builtin_topology(name: &str) -> Result<Topology, TopologyError> {
    let (rate, paths, spares): (f64, &[&str], &[&str]) = match name {
        "2I-2O" => (
            0.6,
            &["I1 S1 T1 S4 T3 S7 T4 S8 O2", "I2 S6 T3 S7 T4 S5 T2 S3 O1"],
            &["S2"],
        ),
        "3I-3O" => (
            0.4,
            &[
                "I1 S1 T1 S4 T3 S12 T7 S16 T8 S17 T9 S18 O3",
                "I2 S6 T3 S7 T4 S5 T2 S3 T5 S9 O1",
                "I3 S15 T7 S16 T8 S17 T9 S14 T6 S11 O2",
            ],
            &["S2", "S8", "S10", "S13"],
        ),
        "PackageSorter" => (
            0.2,
            &[
                "I1 S39 T13 S32 S33 S34 T14 S28 S25 S22 T8 S19 T9 S20 T10 S21 T11 S24 T12 S27 O2",
                "I2 S31 T13 S32 S33 S34 T14 S35 T15 S36 S37 S38 T16 S40 O3",
                "I3 S16 T6 S17 T7 S13 T3 S5 S6 S7 S8 S9 T4 S10 T5 S11 O1",
                "I4 S2 T1 S3 T2 S4 T3 S5 S6 S7 S8 S9 T4 S10 T5 S15 T11 S24 T12 S27 O2",
                "I5 S1 T1 S3 T2 S12 T6 S17 T7 S18 T8 S19 T9 S23 S26 S29 T15 S36 S37 S38 T16 S40 O3",
            ],
            &["S14", "S30"],
        ),
        other => return Err(TopologyError::UnknownBuiltin(other.to_string())),
    };
    let paths: Vec<Vec<String>> = paths
        .iter()
        .map(|p| p.split_whitespace().map(str::to_string).collect())
        .collect();
    let mut names: HashSet<String> = paths.iter().flatten().cloned().collect();
    names.extend(spares.iter().map(|s| s.to_string()));
    let mut roster: Vec<String> = names.into_iter().collect();
    roster.sort_by_key(|n| roster_key(n));
    let units = roster
        .into_iter()
        .map(|n| {
            let dwell = default_dwell(unit_kind(&n).unwrap());
            (n, dwell)
        })
        .collect();
    Topology::new(name, units, paths, rate)
}

/// Parses the plain-text topology format. Lines (after `#` comments):
///
/// ```text
/// rate 0.6            # required: Poisson arrival rate
/// unit S1 4           # optional: declare a unit, dwell defaults by kind
/// path I1 S1 T1 O1    # at least one; undeclared units are auto-added
/// ```
pub fn parse_topology(name: &str, text: &str) -> Result<Topology, TopologyError> {
    let mut rate: Option<f64> = None;
    let mut units: Vec<(String, Time)> = Vec::new();
    let mut declared: HashSet<String> = HashSet::new();
    let mut paths: Vec<Vec<String>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |reason: String| TopologyError::Parse { line, reason };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        match tokens.next().unwrap() {
            "rate" => {
                let value = tokens
                    .next()
                    .ok_or_else(|| err("`rate` needs a number".into()))?;
                if tokens.next().is_some() {
                    return Err(err("`rate` takes exactly one value".into()));
                }
                let value: f64 = value
                    .parse()
                    .map_err(|_| err(format!("bad rate `{value}`")))?;
                if rate.replace(value).is_some() {
                    return Err(err("`rate` given twice".into()));
                }
            }
            "unit" => {
                let unit = tokens
                    .next()
                    .ok_or_else(|| err("`unit` needs a name".into()))?
                    .to_string();
                let kind = unit_kind(&unit)
                    .ok_or_else(|| err(format!("unit `{unit}` must start with I, S, T or O")))?;
                let dwell = match tokens.next() {
                    Some(d) => d
                        .parse::<Time>()
                        .map_err(|_| err(format!("bad dwell `{d}`")))?,
                    None => default_dwell(kind),
                };
                if tokens.next().is_some() {
                    return Err(err("`unit` takes a name and an optional dwell".into()));
                }
                if !declared.insert(unit.clone()) {
                    return Err(err(format!("unit `{unit}` declared twice")));
                }
                units.push((unit, dwell));
            }
            "path" => {
                let path: Vec<String> = tokens.map(str::to_string).collect();
                if path.is_empty() {
                    return Err(err("`path` needs at least one unit".into()));
                }
                for unit in &path {
                    let kind = unit_kind(unit).ok_or_else(|| {
                        err(format!("unit `{unit}` must start with I, S, T or O"))
                    })?;
                    if declared.insert(unit.clone()) {
                        units.push((unit.clone(), default_dwell(kind)));
                    }
                }
                paths.push(path);
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    let rate = rate.ok_or_else(|| TopologyError::Parse {
        line: 0,
        reason: "missing `rate` line".into(),
    })?;
    Topology::new(name, units, paths, rate)
}

/// Ground truth for one simulated package.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackageRecord {
    /// Index of the path the package travelled.
    pub path: usize,
    /// Tick the package entered its input unit.
    pub birth: Time,
}

/// A generated trace: the merged event sequence plus per-package ground
/// truth (for evaluation only; the miner never sees it).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    seq: EventSequence,
    packages: Vec<PackageRecord>,
}

impl Trace {
    pub fn sequence(&self) -> &EventSequence {
        &self.seq
    }

    pub fn packages(&self) -> &[PackageRecord] {
        &self.packages
    }

    pub fn into_sequence(self) -> EventSequence {
        self.seq
    }
}

/// Runs the topology for `horizon` ticks. Packages are born on each path
/// by a Poisson process over `[0, horizon)` (birth times floored to whole
/// ticks) and always finish their path. Deterministic in `seed`.
pub fn simulate(topo: &Topology, horizon: Time, seed: u64) -> Trace {
    assert!(horizon >= 1, "horizon must be at least 1 tick");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path_rate = match topo.rate_mode {
        RateMode::PerPath => topo.rate,
        RateMode::TotalSplit => topo.rate / topo.paths.len() as f64,
    };

    // Birth times per path, drawn path by path so the stream layout is
    // stable, then replayed globally in birth order.
    let mut packages: Vec<PackageRecord> = Vec::new();
    if path_rate > 0.0 {
        let exp = Exp::new(path_rate).expect("positive rate");
        for path in 0..topo.paths.len() {
            let mut clock = 0.0f64;
            loop {
                clock += rng.sample::<f64, _>(exp);
                if clock >= horizon as f64 {
                    break;
                }
                packages.push(PackageRecord {
                    path,
                    birth: clock.floor() as Time,
                });
            }
        }
    }
    packages.sort_by_key(|p| (p.birth, p.path));

    // Earlier-born packages own their slots; a later package that would
    // collide slips its remaining schedule until every stamp is free.
    let mut taken: HashSet<(TypeId, Time)> = HashSet::new();
    let mut events: Vec<Event> = Vec::new();
    for pkg in &packages {
        let mut shift: Time = 0;
        let mut t = pkg.birth;
        for &unit in &topo.paths[pkg.path] {
            let ty = unit as TypeId;
            let mut stamped = t + shift;
            while !taken.insert((ty, stamped)) {
                stamped += 1;
            }
            shift = stamped - t;
            events.push(Event {
                event_type: ty,
                time: stamped,
            });
            t += topo.transit[unit];
        }
    }

    let seq = EventSequence::new(events, topo.units.clone())
        .expect("collision handling keeps (type, time) pairs unique");
    Trace { seq, packages }
}

/// True iff the episode's unit names form a contiguous run of some path
/// (gaps are ignored; a one-node episode matches iff its unit lies on a
/// path). Types are resolved through `alphabet`, the episode's name table.
pub fn subpath_match(episode: &Episode, alphabet: &[String], topo: &Topology) -> bool {
    let mut ids = Vec::with_capacity(episode.len());
    for &ty in episode.types() {
        let Some(name) = alphabet.get(ty as usize) else {
            return false;
        };
        let Some(unit) = topo.units.iter().position(|u| u == name) else {
            return false;
        };
        ids.push(unit);
    }
    topo.paths
        .iter()
        .any(|p| p.windows(ids.len()).any(|w| w == ids))
}

//! UDD, QDD(XY) and QDD(ZY) pulse schedules.
//!
//! Sequences are explicit event lists in time order. A `Delay(0.0)` is kept
//! rather than elided; the composite pi_Z stays a single logical pulse here and
//! is expanded into its two physical pulses only by the simulator.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};

/// Nominal pulse axis at the sequence level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseAxis {
    X,
    Y,
    /// Composite pi_Z (back-to-back pi_X and pi_Y).
    Z,
}

impl fmt::Display for PulseAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseAxis::X => "X",
            PulseAxis::Y => "Y",
            PulseAxis::Z => "Z",
        })
    }
}

impl FromStr for PulseAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "X" => Ok(PulseAxis::X),
            "Y" => Ok(PulseAxis::Y),
            "Z" => Ok(PulseAxis::Z),
            other => Err(format!("unknown pulse axis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Delay(f64),
    Pulse(PulseAxis),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "udd")]
    Udd,
    #[serde(rename = "qdd")]
    Qdd,
    #[serde(rename = "qdd-zy")]
    QddZy,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Udd, Protocol::Qdd, Protocol::QddZy];

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Udd => "udd",
            Protocol::Qdd => "qdd",
            Protocol::QddZy => "qdd-zy",
        }
    }

    /// Closed-form logical pulse count.
    pub fn pulse_count(self, level: u32) -> usize {
        let l = level as usize;
        let odd = l % 2 == 1;
        match self {
            Protocol::Udd if odd => l + 1,
            Protocol::Udd => l,
            Protocol::Qdd | Protocol::QddZy if odd => (l + 1) * (l + 2),
            Protocol::Qdd | Protocol::QddZy => l * (l + 2),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "udd" => Ok(Protocol::Udd),
            "qdd" | "qdd-xy" => Ok(Protocol::Qdd),
            "qdd-zy" | "qddzy" => Ok(Protocol::QddZy),
            other => Err(format!("unknown protocol `{other}` (expected udd, qdd, qdd-zy)")),
        }
    }
}

/// An immutable, time-ordered pulse schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    protocol: Protocol,
    level: u32,
    total_time: f64,
    events: Vec<Event>,
}

impl PulseSequence {
    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter_map(|e| match e {
            Event::Delay(d) => Some(*d),
            Event::Pulse(_) => None,
        })
    }

    pub fn pulses(&self) -> impl Iterator<Item = PulseAxis> + '_ {
        self.events.iter().filter_map(|e| match e {
            Event::Pulse(a) => Some(*a),
            Event::Delay(_) => None,
        })
    }

    pub fn delay_sum(&self) -> f64 {
        self.delays().sum()
    }

    /// Logical pulses; a composite pi_Z counts once.
    pub fn pulse_count(&self) -> usize {
        self.pulses().count()
    }

    /// Physical pulses; a composite pi_Z counts twice.
    pub fn physical_pulse_count(&self) -> usize {
        self.pulses().map(|a| if a == PulseAxis::Z { 2 } else { 1 }).sum()
    }

    pub fn count_axis(&self, axis: PulseAxis) -> usize {
        self.pulses().filter(|&a| a == axis).count()
    }

    /// One event per line (`D <duration>` or `P <axis>`), preceded by a
    /// `#` header carrying protocol, level and total time.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# protocol={} level={} total_time={}\n",
            self.protocol, self.level, self.total_time
        );
        for e in &self.events {
            match e {
                Event::Delay(d) => writeln!(out, "D {d}").unwrap(),
                Event::Pulse(a) => writeln!(out, "P {a}").unwrap(),
            }
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut header: Option<(Protocol, u32, f64)> = None;
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| DdError::SequenceParse { line: line_no, reason };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (mut protocol, mut level, mut total) = (None, None, None);
                for field in rest.split_whitespace() {
                    let (k, v) = field
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected key=value, got `{field}`")))?;
                    match k {
                        "protocol" => protocol = Some(v.parse::<Protocol>().map_err(err)?),
                        "level" => level = Some(v.parse::<u32>().map_err(|e| err(e.to_string()))?),
                        "total_time" => total = Some(v.parse::<f64>().map_err(|e| err(e.to_string()))?),
                        _ => return Err(err(format!("unknown header key `{k}`"))),
                    }
                }
                match (protocol, level, total) {
                    (Some(p), Some(l), Some(t)) => header = Some((p, l, t)),
                    _ => return Err(err("header needs protocol, level and total_time".into())),
                }
                continue;
            }
            let (kind, arg) = line
                .split_once(' ')
                .ok_or_else(|| err(format!("expected `D <duration>` or `P <axis>`, got `{line}`")))?;
            let event = match kind {
                "D" => {
                    let d: f64 = arg.trim().parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
                    if d < 0.0 {
                        return Err(err(format!("negative delay {d}")));
                    }
                    Event::Delay(d)
                }
                "P" => Event::Pulse(arg.trim().parse().map_err(err)?),
                other => return Err(err(format!("unknown event kind `{other}`"))),
            };
            events.push(event);
        }
        let (protocol, level, total_time) = header.ok_or(DdError::SequenceParse {
            line: 0,
            reason: "missing `#` header line".into(),
        })?;
        Ok(PulseSequence {
            protocol,
            level,
            total_time,
            events,
        })
    }
}

/// Pulse times `t sin^2(j pi / (2 level + 2))`, `j = 1..=level` for even
/// levels and `j = 1..=level + 1` for odd levels.
pub fn udd_times(level: u32, t: f64) -> Result<Vec<f64>> {
    if level == 0 {
        return Err(DdError::ZeroLevel);
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(DdError::NegativeDuration(t));
    }
    let count = if level.is_multiple_of(2) { level } else { level + 1 };
    let denom = 2.0 * level as f64 + 2.0;
    let mut times: Vec<f64> = (1..=count)
        .map(|j| {
            let s = (j as f64 * PI / denom).sin();
            t * s * s
        })
        .collect();
    if level % 2 == 1 {
        // sin^2(pi/2) = 1 exactly
        *times.last_mut().unwrap() = t;
    }
    Ok(times)
}

fn push_udd_block(events: &mut Vec<Event>, times: &[f64], level: u32, axis: PulseAxis, duration: f64) {
    let mut prev = 0.0;
    for &tj in times {
        let at = duration * tj;
        events.push(Event::Delay((at - prev).max(0.0)));
        events.push(Event::Pulse(axis));
        prev = at;
    }
    if level.is_multiple_of(2) {
        events.push(Event::Delay((duration - prev).max(0.0)));
    }
}

/// Single-axis UDD of the given level over total time `t`.
pub fn build_udd(level: u32, t: f64, axis: PulseAxis) -> Result<PulseSequence> {
    let unit = udd_times(level, 1.0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(DdError::NegativeDuration(t));
    }
    let mut events = Vec::with_capacity(2 * unit.len() + 1);
    push_udd_block(&mut events, &unit, level, axis, t);
    Ok(PulseSequence {
        protocol: Protocol::Udd,
        level,
        total_time: t,
        events,
    })
}

/// Nested QDD: an outer UDD skeleton (pi_X or composite pi_Z) whose every
/// interval is filled with an inner UDD block of pi_Y pulses. Odd levels end
/// with an outer pulse; even levels end with an inner block.
pub fn build_qdd(level: u32, t: f64, outer: PulseAxis) -> Result<PulseSequence> {
    let protocol = match outer {
        PulseAxis::X => Protocol::Qdd,
        PulseAxis::Z => Protocol::QddZy,
        PulseAxis::Y => {
            return Err(DdError::config("outer", "outer pulses must be X or Z; the inner axis is Y"));
        }
    };
    let outer_times = udd_times(level, t)?;
    let inner = udd_times(level, 1.0)?;
    let mut events = Vec::new();
    let mut prev = 0.0;
    for &tj in &outer_times {
        push_udd_block(&mut events, &inner, level, PulseAxis::Y, (tj - prev).max(0.0));
        events.push(Event::Pulse(outer));
        prev = tj;
    }
    if level.is_multiple_of(2) {
        push_udd_block(&mut events, &inner, level, PulseAxis::Y, (t - prev).max(0.0));
    }
    Ok(PulseSequence {
        protocol,
        level,
        total_time: t,
        events,
    })
}

pub fn build(protocol: Protocol, level: u32, t: f64) -> Result<PulseSequence> {
    match protocol {
        Protocol::Udd => build_udd(level, t, PulseAxis::X),
        Protocol::Qdd => build_qdd(level, t, PulseAxis::X),
        Protocol::QddZy => build_qdd(level, t, PulseAxis::Z),
    }
}

/// Structure of a QDD(ZY) sequence once each pi_Y immediately followed by a
/// pi_Z (no delay event between them) is read as one effective pi_X.
#[derive(Debug, Clone, PartialEq)]
pub struct ZyStructure {
    /// Event indices of the pi_Y that starts each merged pair.
    pub merged_at: Vec<usize>,
    /// The sequence with each merged pair replaced by `Pulse(X)`.
    pub effective: Vec<Event>,
}

impl ZyStructure {
    pub fn merged_pairs(&self) -> usize {
        self.merged_at.len()
    }

    /// Number of pi_Y pulses between consecutive effective pi_X pulses.
    pub fn y_runs(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = 0;
        for e in &self.effective {
            match e {
                Event::Pulse(PulseAxis::Y) => current += 1,
                Event::Pulse(PulseAxis::X) => {
                    runs.push(current);
                    current = 0;
                }
                _ => {}
            }
        }
        runs
    }
}

pub fn zy_structure_report(seq: &PulseSequence) -> ZyStructure {
    let events = seq.events();
    let mut merged_at = Vec::new();
    let mut effective = Vec::with_capacity(events.len());
    let mut i = 0;
    while i < events.len() {
        if let (Event::Pulse(PulseAxis::Y), Some(Event::Pulse(PulseAxis::Z))) = (events[i], events.get(i + 1)) {
            merged_at.push(i);
            effective.push(Event::Pulse(PulseAxis::X));
            i += 2;
            continue;
        }
        effective.push(events[i]);
        i += 1;
    }
    ZyStructure { merged_at, effective }
}

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::name::Name;
use crate::node::NodeId;
use crate::packet::PacketKind;
use crate::time::SimTime;

pub const CSV_COLUMNS: [&str; 9] = [
    "time_ms",
    "event",
    "node",
    "packet_kind",
    "name",
    "nonce",
    "hop_from",
    "hop_to",
    "cause",
];

macro_rules! trace_events {
    ($($variant:ident => $label:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum TraceEvent {
            $($variant),*
        }

        impl TraceEvent {
            pub const ALL: &'static [TraceEvent] = &[$(TraceEvent::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(TraceEvent::$variant => $label),*
                }
            }
        }
    };
}

trace_events! {
    Originate => "originate",
    Retransmit => "retransmit",
    GiveUp => "giveup",
    Satisfy => "satisfy",
    Send => "send",
    Recv => "recv",
    Drop => "drop",
    Trigger => "trigger",
    Predict => "predict",
    Detach => "detach",
    Attach => "attach",
    Disconnect => "disconnect",
    Store => "store",
    Discard => "discard",
    Recover => "recover",
    Buffer => "buffer",
    Flush => "flush",
    Announce => "announce",
    Park => "park",
    Update => "update",
    Notify => "notify",
    Converge => "converge",
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceEvent::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown trace event `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: TraceEvent,
    pub node: NodeId,
    pub kind: Option<PacketKind>,
    pub name: Option<Name>,
    pub nonce: Option<u64>,
    pub hop_from: Option<NodeId>,
    pub hop_to: Option<NodeId>,
    pub cause: String,
}

impl TraceRecord {
    pub fn new(time: SimTime, event: TraceEvent, node: NodeId) -> Self {
        TraceRecord {
            time,
            event,
            node,
            kind: None,
            name: None,
            nonce: None,
            hop_from: None,
            hop_to: None,
            cause: String::new(),
        }
    }

    pub fn is_interest_like(&self) -> bool {
        self.kind.is_some_and(PacketKind::is_interest_like)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace header mismatch: expected {expected:?}, got {got:?}")]
    Header { expected: Vec<String>, got: Vec<String> },
    #[error("line {line}: bad `{column}` value `{value}`")]
    Field { line: u64, column: &'static str, value: String },
}

/// Every send/receive/drop and control event of one run, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    pub fn of(&self, event: TraceEvent) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.event == event)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TraceError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_COLUMNS)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.records {
            out.write_record([
                r.time.to_string(),
                r.event.as_str().to_string(),
                r.node.to_string(),
                opt(r.kind.map(|k| k.as_str().to_string())),
                opt(r.name.as_ref().map(Name::to_string)),
                opt(r.nonce.map(|n| n.to_string())),
                opt(r.hop_from.map(|n| n.to_string())),
                opt(r.hop_to.map(|n| n.to_string())),
                r.cause.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Trace, TraceError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != CSV_COLUMNS {
            return Err(TraceError::Header { expected: CSV_COLUMNS.iter().map(|s| s.to_string()).collect(), got: header });
        }
        let mut trace = Trace::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or_default();
            let field = |i: usize| row.get(i).unwrap_or_default();
            fn parse<T: FromStr>(line: u64, column: &'static str, v: &str) -> Result<T, TraceError> {
                v.parse().map_err(|_| TraceError::Field { line, column, value: v.to_string() })
            }
            fn parse_opt<T: FromStr>(line: u64, column: &'static str, v: &str) -> Result<Option<T>, TraceError> {
                if v.is_empty() {
                    Ok(None)
                } else {
                    parse(line, column, v).map(Some)
                }
            }
            trace.push(TraceRecord {
                time: parse(line, "time_ms", field(0))?,
                event: parse(line, "event", field(1))?,
                node: parse(line, "node", field(2))?,
                kind: parse_opt(line, "packet_kind", field(3))?,
                name: parse_opt(line, "name", field(4))?,
                nonce: parse_opt(line, "nonce", field(5))?,
                hop_from: parse_opt(line, "hop_from", field(6))?,
                hop_to: parse_opt(line, "hop_to", field(7))?,
                cause: field(8).to_string(),
            });
        }
        Ok(trace)
    }
}

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::node::NodeId;
use crate::packet::{Data, Packet};
use crate::strategy::TimerId;
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub enum EventKind {
    Arrival {
        to: NodeId,
        from: NodeId,
        packet: Packet,
        /// Attachment epoch of the wireless link this rode on, if any.
        link_epoch: Option<u64>,
    },
    MobilityTick,
    Attach { producer: u16 },
    ConsumerSend { consumer: u16, pair: usize },
    Probe { consumer: u16, pair: usize },
    ConsumerTimeout { consumer: u16, pair: usize, seq: u64, attempt: u8 },
    ProducerReply { producer: u16, data: Data, epoch: u64 },
    Timer { node: NodeId, timer: TimerId },
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueueError {
    #[error("event at {at} scheduled in the past (now {now})")]
    InThePast { at: SimTime, now: SimTime },
    #[error("event queue exceeded {0} pending events")]
    Overflow(usize),
}

/// Min-heap of events ordered by `(time, seq)`; `seq` is assigned at push
/// time, so simultaneous events run in scheduling order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    now: SimTime,
    limit: usize,
}

impl EventQueue {
    pub fn new(limit: usize) -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, now: SimTime::ZERO, limit }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn push(&mut self, time: SimTime, kind: EventKind) -> Result<(), QueueError> {
        if time < self.now {
            return Err(QueueError::InThePast { at: time, now: self.now });
        }
        if self.heap.len() >= self.limit {
            return Err(QueueError::Overflow(self.limit));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, seq, kind }));
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Event> {
        let Reverse(ev) = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }
}

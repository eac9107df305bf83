//! Single-producer sample queue for live streaming.
//!
//! The queue is bounded; a full queue blocks the producer instead of
//! dropping samples, and the consumer sees samples in send order.

use std::sync::mpsc::{self, Receiver, RecvError, RecvTimeoutError, SendError, SyncSender, TryRecvError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HemoTimeSeries;
use crate::scalar::Real;

/// One multichannel sample, µM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sample<T> {
    pub time: T,
    pub hbo: Vec<T>,
    pub hbr: Vec<T>,
}

/// Iterates a recorded series sample by sample.
pub fn samples<T: Real>(series: &HemoTimeSeries<T>) -> impl Iterator<Item = Sample<T>> + '_ {
    (0..series.len()).map(move |i| Sample {
        time: series.time(i),
        hbo: series.hbo.iter().map(|c| c[i]).collect(),
        hbr: series.hbr.iter().map(|c| c[i]).collect(),
    })
}

/// Sending half; there is one per stream.
#[derive(Debug)]
pub struct SampleProducer<T> {
    tx: SyncSender<Sample<T>>,
}

#[derive(Debug)]
pub struct SampleConsumer<T> {
    rx: Receiver<Sample<T>>,
}

pub fn sample_queue<T: Real>(capacity: usize) -> (SampleProducer<T>, SampleConsumer<T>) {
    let (tx, rx) = mpsc::sync_channel(capacity.max(1));
    (SampleProducer { tx }, SampleConsumer { rx })
}

impl<T: Real> SampleProducer<T> {
    /// Blocks while the queue is full. Fails only when the consumer is gone.
    pub fn send(&self, sample: Sample<T>) -> Result<(), SendError<Sample<T>>> {
        self.tx.send(sample)
    }
}

impl<T: Real> SampleConsumer<T> {
    pub fn recv(&self) -> Result<Sample<T>, RecvError> {
        self.rx.recv()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Result<Sample<T>, RecvTimeoutError> {
        self.rx.recv_timeout(timeout)
    }

    pub fn try_recv(&self) -> Result<Sample<T>, TryRecvError> {
        self.rx.try_recv()
    }
}

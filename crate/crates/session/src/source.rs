//! Signal feeds: a pre-computed series or a live TCP stream.

use std::io::{BufRead, BufReader};
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use neuroswarm_core::fnirs::mbll::{intensity_to_od, od_to_hemoglobin, DEFAULT_DISTANCE_CM, DEFAULT_DPF};
use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::recording::{load_recording, Recording};
use neuroswarm_core::fnirs::stream::{sample_queue, Sample, SampleConsumer};
use neuroswarm_core::fnirs::HemoTimeSeries;

use crate::SessionError;

/// Queue depth between the socket reader and the session loop.
const LIVE_QUEUE: usize = 4096;
const RECONNECT_DELAY: Duration = Duration::from_millis(200);

pub enum Feed {
    Series { series: HemoTimeSeries<f64>, next: usize },
    Live(LiveFeed),
}

impl Feed {
    pub fn from_series(series: HemoTimeSeries<f64>) -> Self {
        Self::Series { series, next: 0 }
    }

    /// Loads a channel CSV; raw intensities go through the mBLL.
    pub fn from_file(path: &std::path::Path, layout: &ProbeLayout<f64>) -> Result<Self, SessionError> {
        let series = match load_recording::<f64>(path).map_err(SessionError::Signal)? {
            Recording::Hemo(s) => s,
            Recording::Raw(raw) => {
                let od = intensity_to_od(&raw).map_err(SessionError::Signal)?;
                od_to_hemoglobin(&od, layout, DEFAULT_DPF, DEFAULT_DISTANCE_CM).map_err(SessionError::Signal)?
            }
        };
        Ok(Self::from_series(series))
    }

    /// Samples stamped before `t`, in order.
    pub fn samples_before(&mut self, t: f64) -> Vec<Sample<f64>> {
        match self {
            Self::Series { series, next } => {
                let mut out = Vec::new();
                while *next < series.len() && series.time(*next) < t {
                    let i = *next;
                    out.push(Sample {
                        time: series.time(i),
                        hbo: series.hbo.iter().map(|c| c[i]).collect(),
                        hbr: series.hbr.iter().map(|c| c[i]).collect(),
                    });
                    *next += 1;
                }
                out
            }
            Self::Live(live) => std::iter::from_fn(|| live.consumer.try_recv().ok()).collect(),
        }
    }

    /// `false` while a live source is disconnected.
    pub fn connected(&self) -> bool {
        match self {
            Self::Series { .. } => true,
            Self::Live(live) => live.connected.load(Ordering::SeqCst),
        }
    }

    /// Connections lost so far, so a drop is seen even after a fast reconnect.
    pub fn drops(&self) -> u64 {
        match self {
            Self::Series { .. } => 0,
            Self::Live(live) => live.drops.load(Ordering::SeqCst),
        }
    }
}

/// Reads newline-delimited JSON samples (`{"time":..,"hbo":[..],"hbr":[..]}`)
/// from `address`, reconnecting after a drop. Malformed lines are skipped.
pub struct LiveFeed {
    consumer: SampleConsumer<f64>,
    connected: Arc<AtomicBool>,
    drops: Arc<AtomicU64>,
    stop: Arc<AtomicBool>,
    reader: Option<JoinHandle<()>>,
}

impl LiveFeed {
    pub fn connect(address: String, channels: usize) -> Self {
        let (producer, consumer) = sample_queue(LIVE_QUEUE);
        let connected = Arc::new(AtomicBool::new(false));
        let drops = Arc::new(AtomicU64::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (c, d, s) = (connected.clone(), drops.clone(), stop.clone());
        let reader = thread::spawn(move || {
            while !s.load(Ordering::SeqCst) {
                let Ok(stream) = TcpStream::connect(&address) else {
                    thread::sleep(RECONNECT_DELAY);
                    continue;
                };
                let _ = stream.set_read_timeout(Some(Duration::from_millis(500)));
                c.store(true, Ordering::SeqCst);
                let mut lines = BufReader::new(stream);
                let mut line = String::new();
                loop {
                    if s.load(Ordering::SeqCst) {
                        return;
                    }
                    line.clear();
                    match lines.read_line(&mut line) {
                        Ok(0) => break,
                        Ok(_) => {
                            let Ok(sample) = serde_json::from_str::<Sample<f64>>(line.trim()) else { continue };
                            if sample.hbo.len() != channels || sample.hbr.len() != channels {
                                continue;
                            }
                            if producer.send(sample).is_err() {
                                return;
                            }
                        }
                        Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                        Err(_) => break,
                    }
                }
                c.store(false, Ordering::SeqCst);
                d.fetch_add(1, Ordering::SeqCst);
            }
        });
        Self { consumer, connected, drops, stop, reader: Some(reader) }
    }
}

impl Drop for LiveFeed {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // drain so a producer blocked on a full queue can observe the stop flag
        while self.consumer.try_recv().is_ok() {}
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_feed_releases_samples_by_time() {
        let mut feed = Feed::from_series(HemoTimeSeries::zeros(23, 20, 10.0));
        assert_eq!(feed.samples_before(0.05).len(), 1);
        assert_eq!(feed.samples_before(0.55).len(), 5);
        assert_eq!(feed.samples_before(100.0).len(), 14);
        assert!(feed.samples_before(200.0).is_empty());
        assert!(feed.connected());
    }
}

//! Background materialization of minibatches.
//!
//! Indices are drawn when a prefetch is issued; only the frame copies run
//! on the worker. Referenced slots are pinned until the copy finishes, so
//! pushes and evictions in the meantime cannot alter the result.

use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::{Condvar, Mutex, RwLock};

use super::frame_store::FrameStore;
use super::{Minibatch, ReplayError};

/// Everything needed to build a minibatch from the frame store.
#[derive(Debug, Clone, Default)]
pub(crate) struct SamplePlan {
    pub ids: Vec<u64>,
    pub actions: Vec<u32>,
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
    /// Per sample: `n_frames` state slots then `n_frames` next-state slots.
    pub slots: Vec<u32>,
    n_frames: usize,
    frame_bytes: usize,
}

impl SamplePlan {
    pub fn with_capacity(len: usize, n_frames: usize, frame_bytes: usize) -> Self {
        Self {
            ids: Vec::with_capacity(len),
            actions: Vec::with_capacity(len),
            rewards: Vec::with_capacity(len),
            dones: Vec::with_capacity(len),
            slots: Vec::with_capacity(2 * n_frames * len),
            n_frames,
            frame_bytes,
        }
    }

    pub fn materialize(&self, store: &FrameStore) -> Minibatch {
        let len = self.ids.len();
        let stack = self.n_frames * self.frame_bytes;
        let mut states = Vec::with_capacity(len * stack);
        let mut next_states = Vec::with_capacity(len * stack);
        for chunk in self.slots.chunks(2 * self.n_frames) {
            let (s, n) = chunk.split_at(self.n_frames);
            s.iter().for_each(|&k| states.extend_from_slice(store.frame(k)));
            n.iter().for_each(|&k| next_states.extend_from_slice(store.frame(k)));
        }
        Minibatch {
            len,
            ids: self.ids.clone(),
            states,
            next_states,
            actions: self.actions.clone(),
            rewards: self.rewards.clone(),
            dones: self.dones.clone(),
        }
    }
}

type Job = (SamplePlan, Sender<Minibatch>);

#[derive(Default)]
struct InFlight {
    count: Mutex<usize>,
    idle: Condvar,
}

pub(crate) struct Prefetcher {
    store: Arc<RwLock<FrameStore>>,
    in_flight: Arc<InFlight>,
    jobs: Option<Sender<Job>>,
    worker: Option<JoinHandle<()>>,
}

impl Prefetcher {
    pub fn new(store: Arc<RwLock<FrameStore>>) -> Self {
        Self { store, in_flight: Arc::default(), jobs: None, worker: None }
    }

    fn spawn(&mut self) -> &Sender<Job> {
        if self.jobs.is_none() {
            let (tx, rx) = mpsc::channel::<Job>();
            let store = Arc::clone(&self.store);
            let in_flight = Arc::clone(&self.in_flight);
            let handle = std::thread::Builder::new()
                .name("replay-prefetch".into())
                .spawn(move || {
                    for (plan, reply) in rx {
                        {
                            let mut store = store.write();
                            let mb = plan.materialize(&store);
                            for &s in &plan.slots {
                                store.release(s);
                            }
                            // A dropped handle just discards the result.
                            let _ = reply.send(mb);
                        }
                        let mut n = in_flight.count.lock();
                        *n -= 1;
                        if *n == 0 {
                            in_flight.idle.notify_all();
                        }
                    }
                })
                .expect("failed to spawn prefetch worker");
            self.jobs = Some(tx);
            self.worker = Some(handle);
        }
        self.jobs.as_ref().expect("worker just spawned")
    }

    /// Queues a plan whose slots the caller has already pinned.
    pub fn submit(&mut self, plan: SamplePlan) -> PrefetchHandle {
        let (tx, rx) = mpsc::channel();
        *self.in_flight.count.lock() += 1;
        let jobs = self.spawn().clone();
        if jobs.send((plan, tx)).is_err() {
            // Worker is gone; the handle will report the loss.
            *self.in_flight.count.lock() -= 1;
        }
        PrefetchHandle { rx, ready: None }
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.count.lock()
    }

    pub fn wait_idle(&self) {
        let mut n = self.in_flight.count.lock();
        while *n > 0 {
            self.in_flight.idle.wait(&mut n);
        }
    }
}

impl Drop for Prefetcher {
    fn drop(&mut self) {
        self.jobs.take();
        if let Some(h) = self.worker.take() {
            let _ = h.join();
        }
    }
}

/// A minibatch being materialized in the background.
pub struct PrefetchHandle {
    rx: Receiver<Minibatch>,
    ready: Option<Minibatch>,
}

impl PrefetchHandle {
    /// Whether [`PrefetchHandle::redeem`] would return without blocking.
    pub fn is_ready(&mut self) -> bool {
        if self.ready.is_none() {
            self.ready = self.rx.try_recv().ok();
        }
        self.ready.is_some()
    }

    /// Blocks until the minibatch is available.
    pub fn redeem(self) -> Result<Minibatch, ReplayError> {
        match self.ready {
            Some(mb) => Ok(mb),
            None => self.rx.recv().map_err(|_| ReplayError::PrefetchLost),
        }
    }
}

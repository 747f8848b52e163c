use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Instant;

use chrono::Utc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordinator::{
    CoordinationRecord, Coordinator, CoordinatorConfig, CoordinatorError, MemoryReservation, OomEvent, Recovery,
};
use crate::envs::{make_env, Environment, ObservationSpec};
use crate::feedback::{BatchController, BatchPolicy, DecisionRecord, ProgressTrackers};
use crate::replay::{capacity_for, dedup_bytes, DedupReplayBuffer, Minibatch, PrefetchHandle, ReplayBuffer, ReplayLayout};
use crate::tinynet::{checkpoint, sync_target, train_step, Adam, Mlp, QLearnerConfig, TrainingBatch};

use super::clock::{Clock, MonotonicClock, Work};
use super::config::{Policy, RunConfig};
use super::metrics::{assign_intermediate_deadline, compute_miss_rate, mean, EarlyExit, EpisodeLog};
use super::RunError;

/// Episodes averaged for the reported final reward.
pub const FINAL_REWARD_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    DataBudget,
    CostBudget,
    EarlyExit,
    MaxEpisodes,
}

/// Timestamped line for the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: String,
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Event {
    fn now(kind: &str, fields: Vec<(String, String)>) -> Self {
        Self { time: Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true), kind: kind.into(), fields }
    }

    fn oom(ev: &OomEvent) -> Self {
        let mut fields = vec![
            ("episode".to_string(), ev.episode.to_string()),
            ("attempted".to_string(), ev.attempted.to_string()),
            ("budget".to_string(), ev.budget.to_string()),
        ];
        match ev.recovery {
            Recovery::ScaleDown { rounds, m_batch, m_replay, capacity_before, capacity_after, evicted, reclaimed } => {
                fields.extend([
                    ("action".to_string(), "scale-down".to_string()),
                    ("rounds".to_string(), rounds.to_string()),
                    ("m_batch".to_string(), m_batch.to_string()),
                    ("m_replay".to_string(), m_replay.to_string()),
                    ("capacity_before".to_string(), capacity_before.to_string()),
                    ("capacity_after".to_string(), capacity_after.to_string()),
                    ("evicted".to_string(), evicted.to_string()),
                    ("reclaimed".to_string(), reclaimed.to_string()),
                ]);
            }
            Recovery::ClampCapacity { requested, granted } => {
                fields.extend([
                    ("action".to_string(), "clamp-capacity".to_string()),
                    ("requested".to_string(), requested.to_string()),
                    ("granted".to_string(), granted.to_string()),
                ]);
            }
        }
        Self::now("oom", fields)
    }

    /// `time kind key=value ...`
    pub fn line(&self) -> String {
        let mut s = format!("{} {}", self.time, self.kind);
        for (k, v) in &self.fields {
            s.push_str(&format!(" {k}={v}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policy: Policy,
    pub seed: u64,
    pub episodes: usize,
    pub total_latency_s: f64,
    pub miss_rate: f64,
    pub max_reward: f64,
    pub avg_reward: f64,
    /// Mean reward of the last episodes (up to [`FINAL_REWARD_WINDOW`]).
    pub final_reward: f64,
    pub steps_consumed: u64,
    /// Consumed share of the data budget, in percent.
    pub budget_consumed_pct: f64,
    pub cost_consumed: f64,
    pub train_steps: u64,
    pub mean_train_step_ms: f64,
    pub peak_accounted_bytes: u64,
    pub oom_events: usize,
    pub early_exit: bool,
    pub stop_reason: StopReason,
    /// Time spent in batch decisions, coordination and byte accounting.
    pub overhead_s: f64,
    pub overhead_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub episodes: Vec<EpisodeLog>,
    pub decisions: Vec<DecisionRecord>,
    pub coordination: Vec<CoordinationRecord>,
    pub oom_events: Vec<OomEvent>,
    pub events: Vec<Event>,
    pub summary: Summary,
}

/// Online and target networks with their optimizer.
struct Learner {
    online: Mlp,
    target: Mlp,
    opt: Adam,
    cfg: QLearnerConfig,
    spec: ObservationSpec,
    batch: TrainingBatch,
    scratch: Vec<f64>,
}

impl Learner {
    fn new(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Self {
        let spec = cfg.observation_spec();
        let online = Mlp::new(spec.input_dim(), &cfg.hidden, cfg.n_actions(), rng);
        let target = online.clone();
        let opt = Adam::new(cfg.learning_rate, online.param_count());
        Self { online, target, opt, cfg: cfg.learner(), spec, batch: TrainingBatch::default(), scratch: Vec::new() }
    }

    fn greedy(&mut self, stack: &[u8]) -> Result<usize, RunError> {
        self.scratch.clear();
        self.spec.decode_into(stack, &mut self.scratch);
        let q = self.online.forward(&self.scratch, 1)?;
        let mut best = 0;
        for (i, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = i;
            }
        }
        Ok(best)
    }

    fn train(&mut self, mb: &Minibatch) -> Result<f64, RunError> {
        let b = &mut self.batch;
        b.len = mb.len;
        b.states.clear();
        b.next_states.clear();
        self.spec.decode_into(&mb.states, &mut b.states);
        self.spec.decode_into(&mb.next_states, &mut b.next_states);
        b.actions.clear();
        b.actions.extend(mb.actions.iter().map(|&a| a as usize));
        b.rewards.clear();
        b.rewards.extend(mb.rewards.iter().map(|&r| r as f64));
        b.dones.clone_from(&mb.dones);
        Ok(train_step(&mut self.online, &self.target, &mut self.opt, b, &self.cfg)?)
    }
}

/// Busy-loop threads that compete for CPU until dropped.
struct Interference {
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl Interference {
    fn start(n: usize) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let threads = (0..n)
            .map(|_| {
                let stop = Arc::clone(&stop);
                std::thread::spawn(move || {
                    let mut x = 1u64;
                    while !stop.load(Ordering::Relaxed) {
                        for _ in 0..10_000 {
                            x = std::hint::black_box(x.wrapping_mul(6364136223846793005).wrapping_add(1));
                        }
                    }
                })
            })
            .collect();
        Self { stop, threads }
    }
}

impl Drop for Interference {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Largest batch `b` with `b` samples of workspace plus a `b`-entry buffer within `total`.
pub fn max_p_batch(total: u64, policy: &BatchPolicy, layout: &ReplayLayout) -> usize {
    let fits = |b: u64| policy.bytes_for_batch(b as usize) + dedup_bytes(b, layout) <= total;
    let (mut lo, mut hi) = (0u64, 1u64);
    while fits(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as usize
}

/// Initial batch size, replay reservation and buffer capacity per policy.
struct Plan {
    batch: usize,
    reservation: MemoryReservation,
    capacity: usize,
    feedback: bool,
    coordinate: bool,
    clamp: Option<(u64, u64)>,
}

fn plan(cfg: &RunConfig, policy: &BatchPolicy, layout: &ReplayLayout) -> Result<Plan, RunError> {
    let total = cfg.memory_budget;
    let fixed_res = |m_replay: u64| MemoryReservation {
        total,
        m_batch: total - m_replay,
        m_replay,
        initial_share: cfg.initial_batch_share,
    };
    let check_batch = |b: usize, m_batch: u64| {
        if policy.bytes_for_batch(b) > m_batch {
            Err(RunError::Config(format!("batch {b} does not fit the {m_batch} bytes left for batch execution")))
        } else {
            Ok(())
        }
    };
    match cfg.policy {
        Policy::MaxA => {
            let b = cfg.fixed_batch.unwrap_or(cfg.b_min);
            let m_batch = policy.bytes_for_batch(b);
            if m_batch > total {
                return Err(RunError::Config(format!("batch {b} needs {m_batch} bytes, budget is {total}")));
            }
            let m_replay = total - m_batch;
            let wanted = cfg.fixed_capacity.map_or(cfg.max_a_buffer, |c| c as u64);
            let requested = dedup_bytes(wanted, layout);
            let (capacity, clamp) = if requested > m_replay {
                let granted = capacity_for(m_replay, layout);
                (granted as usize, Some((requested, dedup_bytes(granted, layout))))
            } else {
                (wanted as usize, None)
            };
            Ok(Plan { batch: b, reservation: fixed_res(m_replay), capacity, feedback: false, coordinate: false, clamp })
        }
        Policy::MaxP => {
            let b = cfg.fixed_batch.unwrap_or_else(|| max_p_batch(total, policy, layout)).max(1);
            let cap = cfg.fixed_capacity.unwrap_or(b);
            let m_replay = dedup_bytes(cap as u64, layout);
            if m_replay > total {
                return Err(RunError::Config(format!("capacity {cap} needs {m_replay} bytes, budget is {total}")));
            }
            check_batch(b, total - m_replay)?;
            Ok(Plan { batch: b, reservation: fixed_res(m_replay), capacity: cap, feedback: false, coordinate: false, clamp: None })
        }
        Policy::R3Episode | Policy::R3Step => {
            if let Some(cap) = cfg.fixed_capacity {
                let m_replay = dedup_bytes(cap as u64, layout);
                if m_replay > total {
                    return Err(RunError::Config(format!("capacity {cap} needs {m_replay} bytes, budget is {total}")));
                }
                let b = cfg.fixed_batch.unwrap_or(cfg.b_min);
                check_batch(b, total - m_replay)?;
                return Ok(Plan {
                    batch: b,
                    reservation: fixed_res(m_replay),
                    capacity: cap,
                    feedback: cfg.fixed_batch.is_none(),
                    coordinate: false,
                    clamp: None,
                });
            }
            let reservation = MemoryReservation::new(total, cfg.initial_batch_share);
            let b = cfg.fixed_batch.unwrap_or(cfg.b_min);
            Ok(Plan {
                batch: b,
                capacity: capacity_for(reservation.m_replay, layout) as usize,
                reservation,
                feedback: cfg.fixed_batch.is_none(),
                coordinate: true,
                clamp: None,
            })
        }
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    clock: &'a dyn Clock,
    env: Box<dyn Environment>,
    learner: Learner,
    buffer: DedupReplayBuffer,
    rng: ChaCha8Rng,
    controller: Option<BatchController>,
    coordinator: Coordinator,
    policy: BatchPolicy,
    per_sample: u64,
    batch: usize,
    consumed: u64,
    cost: f64,
    train_steps: u64,
    train_time_s: f64,
    overhead_s: f64,
    events: Vec<Event>,
    pending: Option<(usize, PrefetchHandle)>,
    /// Clock reading at the start of the first episode.
    origin: f64,
}

struct EpisodeOutcome {
    steps: u64,
    reward: f64,
    train_steps: u64,
    accounted_peak: u64,
    mean_loss: f64,
    exhausted: Option<StopReason>,
}

impl Run<'_> {
    fn epsilon(&self) -> f64 {
        let horizon = self.cfg.epsilon_fraction * self.cfg.data_budget as f64;
        let frac = (self.consumed as f64 / horizon).min(1.0);
        self.cfg.epsilon_start + frac * (self.cfg.epsilon_end - self.cfg.epsilon_start)
    }

    fn now(&self) -> f64 {
        self.clock.now() - self.origin
    }

    fn accounted(&self) -> u64 {
        self.buffer.bytes_used() + self.batch as u64 * self.per_sample
    }

    fn next_minibatch(&mut self, b: usize) -> Result<Minibatch, RunError> {
        let mb = match self.pending.take() {
            Some((size, handle)) if size == b => handle.redeem()?,
            _ => self.buffer.sample(b, &mut self.rng)?,
        };
        if self.cfg.prefetch && self.buffer.sampleable() >= b {
            self.pending = Some((b, self.buffer.prefetch_next(b, &mut self.rng)?));
        }
        Ok(mb)
    }

    fn run_episode(&mut self, index: usize) -> Result<EpisodeOutcome, RunError> {
        let env_seed = self.cfg.seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
        self.env.reset(env_seed);
        let b_min = self.cfg.b_min;
        let state_bytes = self.env.spec().state_bytes();
        let n_actions = self.env.n_actions();
        let c_budget = self.cfg.cost_budget() as f64;
        let mut out = EpisodeOutcome { steps: 0, reward: 0.0, train_steps: 0, accounted_peak: 0, mean_loss: 0.0, exhausted: None };
        let mut loss_sum = 0.0;
        loop {
            if self.consumed >= self.cfg.data_budget {
                out.exhausted = Some(StopReason::DataBudget);
                break;
            }
            let stack = self.env.observe();
            let action = if self.rng.gen::<f64>() < self.epsilon() {
                self.rng.gen_range(0..n_actions)
            } else {
                self.learner.greedy(&stack)?
            };
            let step = self.env.step(action)?;
            self.clock.charge(Work::EnvStep);
            let frame = &stack[stack.len() - state_bytes..];
            self.buffer.push(frame, action as u32, step.reward as f32, step.done)?;
            self.consumed += 1;
            out.steps += 1;
            out.reward += step.reward;

            let t0 = Instant::now();
            out.accounted_peak = out.accounted_peak.max(self.accounted());
            self.overhead_s += t0.elapsed().as_secs_f64();

            let available = self.buffer.sampleable();
            if available >= b_min {
                let b = self.batch.min(available);
                let step_cost = b as f64 / b_min as f64;
                if self.cost + step_cost > c_budget {
                    out.exhausted = Some(StopReason::CostBudget);
                    break;
                }
                let t_train = Instant::now();
                let mb = self.next_minibatch(b)?;
                loss_sum += self.learner.train(&mb)?;
                self.train_time_s += t_train.elapsed().as_secs_f64();
                self.clock.charge(Work::TrainStep { batch: b });
                self.cost += step_cost;
                self.train_steps += 1;
                out.train_steps += 1;
                let now = self.now();
                if let Some(ctl) = self.controller.as_mut() {
                    let t0 = Instant::now();
                    self.batch = ctl.on_train_step(index, now, self.consumed, self.coordinator.reservation().m_batch)?;
                    self.overhead_s += t0.elapsed().as_secs_f64();
                }
            }
            if step.done {
                break;
            }
        }
        if let Some((_, h)) = self.pending.take() {
            // The next episode starts from a fresh draw.
            drop(h);
        }
        out.mean_loss = if out.train_steps > 0 { loss_sum / out.train_steps as f64 } else { 0.0 };
        Ok(out)
    }

    /// Brings reservations back within the budget after it was cut.
    fn enforce_budget(&mut self, index: usize) -> Result<(), RunError> {
        let res = *self.coordinator.reservation();
        if res.reserved() <= res.total {
            return Ok(());
        }
        let ev = self.coordinator.handle_oom(index, res.reserved(), &mut self.buffer)?;
        self.events.push(Event::oom(&ev));
        let m_batch = self.coordinator.reservation().m_batch;
        let cap = crate::feedback::memory_cap(m_batch, &self.policy) as usize;
        self.batch = self.batch.min(cap.max(1));
        Ok(())
    }

    /// Resizes the buffer to the capacity the replay reservation admits.
    fn resize_buffer(&mut self) -> Result<(), RunError> {
        let r_i = capacity_for(self.coordinator.reservation().m_replay, self.buffer.layout()) as usize;
        self.buffer.synchronize();
        if r_i < self.buffer.capacity() {
            self.buffer.shrink(r_i);
            self.buffer.garbage_collect();
        } else {
            self.buffer.expand(r_i)?;
        }
        Ok(())
    }
}

/// Runs one experiment against the monotonic clock.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport, RunError> {
    run_experiment_with(cfg, &MonotonicClock::new())
}

pub fn run_experiment_with(cfg: &RunConfig, clock: &dyn Clock) -> Result<ExperimentReport, RunError> {
    cfg.validate()?;
    let wall = Instant::now();
    let layout = cfg.layout();
    let policy = cfg.batch_policy();
    let plan = plan(cfg, &policy, &layout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let learner = Learner::new(cfg, &mut rng);
    let (mut batch_floor, mut replay_floor) = (policy.bytes_for_batch(cfg.b_min), dedup_bytes(1, &layout));
    if !plan.coordinate {
        // Fixed plans may sit below the adaptive floors by construction.
        batch_floor = batch_floor.min(plan.reservation.m_batch);
        replay_floor = replay_floor.min(plan.reservation.m_replay);
    }
    let coord_cfg = CoordinatorConfig {
        gamma: cfg.gamma_window,
        oom_scale: cfg.oom_scale,
        persist_after: cfg.oom_persist_after,
        batch_floor,
        replay_floor,
    };
    let mut coordinator = Coordinator::new(coord_cfg, plan.reservation).map_err(|e| RunError::Config(e.to_string()))?;
    let mut events = Vec::new();
    if let Some((requested, granted)) = plan.clamp {
        let ev = coordinator.record_clamp(0, requested, granted);
        events.push(Event::oom(&ev));
    }
    let controller = if plan.feedback {
        Some(BatchController::new(policy, ProgressTrackers::new(cfg.deadline_s, cfg.data_budget))?)
    } else {
        None
    };
    let mut run = Run {
        cfg,
        clock,
        env: make_env(cfg.env, (cfg.pixel_height, cfg.pixel_width), cfg.n_frames),
        learner,
        buffer: DedupReplayBuffer::new(layout, plan.capacity),
        rng,
        controller,
        coordinator,
        policy,
        per_sample: cfg.per_sample_bytes(),
        batch: plan.batch,
        consumed: 0,
        cost: 0.0,
        train_steps: 0,
        train_time_s: 0.0,
        overhead_s: 0.0,
        events,
        pending: None,
        origin: 0.0,
    };
    let _interference = Interference::start(cfg.interference_threads);

    let mut logs: Vec<EpisodeLog> = Vec::new();
    let mut coordination = Vec::new();
    let mut early = EarlyExit::new(cfg.early_exit_window, cfg.target_reward);
    let mut stop = StopReason::MaxEpisodes;
    for i in 0..cfg.max_episodes {
        if cfg.budget_cut_episode == Some(i) {
            let cut = (cfg.memory_budget as f64 * cfg.budget_cut_fraction).floor() as u64;
            run.coordinator.set_total(cut);
            run.events.push(Event::now(
                "budget-cut",
                vec![("episode".into(), i.to_string()), ("budget".into(), cut.to_string())],
            ));
            run.enforce_budget(i)?;
        }
        let t0 = Instant::now();
        // Elapsed time is measured from the first decision.
        let start = if i == 0 {
            run.origin = clock.now();
            0.0
        } else {
            run.now()
        };
        if let Some(ctl) = run.controller.as_mut() {
            run.batch = ctl.on_episode_start(i, start, run.consumed, run.coordinator.reservation().m_batch)?;
        }
        if plan.coordinate {
            run.resize_buffer()?;
        }
        run.overhead_s += t0.elapsed().as_secs_f64();

        let ep = run.run_episode(i)?;
        let end = run.now();
        let runtime = end - start;
        let deadline = assign_intermediate_deadline(cfg.deadline_s, cfg.data_budget, run.consumed);
        let res = *run.coordinator.reservation();
        let stats = run.buffer.stats();
        logs.push(EpisodeLog {
            index: i,
            runtime_s: runtime,
            reward: ep.reward,
            steps: ep.steps,
            cumulative_steps: run.consumed,
            train_steps: ep.train_steps,
            batch_size: run.batch,
            n_entries: stats.n_entries,
            capacity: stats.capacity,
            bytes_used: stats.bytes_used,
            m_batch: res.m_batch,
            m_replay: res.m_replay,
            budget: res.total,
            accounted_peak: ep.accounted_peak,
            cost: run.cost,
            mean_loss: ep.mean_loss,
            deadline_s: deadline,
            elapsed_s: end,
            missed: end > deadline,
        });

        if let Some(reason) = ep.exhausted {
            stop = reason;
            break;
        }
        if early.observe(ep.reward) {
            stop = StopReason::EarlyExit;
            run.events.push(Event::now(
                "early-exit",
                vec![
                    ("episode".into(), i.to_string()),
                    ("window".into(), cfg.early_exit_window.to_string()),
                    ("target".into(), cfg.target_reward.to_string()),
                ],
            ));
            break;
        }
        if run.cost >= cfg.cost_budget() as f64 {
            stop = StopReason::CostBudget;
            break;
        }
        if run.consumed >= cfg.data_budget {
            stop = StopReason::DataBudget;
            break;
        }
        if plan.coordinate {
            let t0 = Instant::now();
            coordination.push(run.coordinator.coordinate(i, runtime, ep.reward));
            run.overhead_s += t0.elapsed().as_secs_f64();
        }
        if (i + 1) % cfg.target_sync_episodes == 0 {
            sync_target(&run.learner.online, &mut run.learner.target)?;
        }
    }
    run.buffer.synchronize();
    drop(_interference);

    if let Some(path) = &cfg.checkpoint_path {
        let file = std::fs::File::create(path)?;
        checkpoint::save(&run.learner.online, std::io::BufWriter::new(file))?;
    }

    let total_wall = wall.elapsed().as_secs_f64();
    let rewards: Vec<f64> = logs.iter().map(|l| l.reward).collect();
    let tail = &rewards[rewards.len().saturating_sub(FINAL_REWARD_WINDOW)..];
    let summary = Summary {
        policy: cfg.policy,
        seed: cfg.seed,
        episodes: logs.len(),
        total_latency_s: logs.last().map_or(0.0, |l| l.elapsed_s),
        miss_rate: compute_miss_rate(&logs),
        max_reward: if rewards.is_empty() { 0.0 } else { rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max) },
        avg_reward: mean(&rewards),
        final_reward: mean(tail),
        steps_consumed: run.consumed,
        budget_consumed_pct: 100.0 * run.consumed as f64 / cfg.data_budget as f64,
        cost_consumed: run.cost,
        train_steps: run.train_steps,
        mean_train_step_ms: if run.train_steps > 0 { 1e3 * run.train_time_s / run.train_steps as f64 } else { 0.0 },
        peak_accounted_bytes: logs.iter().map(|l| l.accounted_peak).max().unwrap_or(0),
        oom_events: run.coordinator.oom_events().len(),
        early_exit: stop == StopReason::EarlyExit,
        stop_reason: stop,
        overhead_s: run.overhead_s,
        overhead_fraction: if total_wall > 0.0 { run.overhead_s / total_wall } else { 0.0 },
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        episodes: logs,
        decisions: run.controller.as_mut().map(|c| c.take_trace()).unwrap_or_default(),
        coordination,
        oom_events: run.coordinator.oom_events().to_vec(),
        events: run.events,
        summary,
    })
}

/// Duration of a run with the deadline lifted, for sizing `D`.
pub fn calibrate(cfg: &RunConfig) -> Result<f64, RunError> {
    let lifted = RunConfig { deadline_s: 1e12, ..cfg.clone() };
    Ok(run_experiment(&lifted)?.summary.total_latency_s)
}

impl From<CoordinatorError> for RunError {
    fn from(e: CoordinatorError) -> Self {
        match e {
            CoordinatorError::UnrecoverableOom { floor, budget } => RunError::UnrecoverableOom { floor, budget },
            CoordinatorError::Invalid(m) => RunError::Config(m),
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run all criteria with `cargo test -p rtdrl-core --test acceptance`, or a
//! subset by number: `cargo test -p rtdrl-core --test acceptance -- 1 4 6`.
//! Criteria listed in `KNOWN_UNATTAINABLE` still run and still print FAIL,
//! but do not change the exit status; every other failure exits with 1.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtdrl::coordinator::{renormalize, update_reservations, MemoryReservation};
use rtdrl::envs::{ElementKind, ObservationSpec};
use rtdrl::feedback::{decide_batch, BatchPolicy, Granularity, ProgressTrackers};
use rtdrl::harness::{
    calibrate, check_early_exit, run_experiment, sweep, write_sweep, Axis, EarlyExit, Policy, RunConfig,
};
use rtdrl::replay::{dedup_bytes, dummy_bytes, DedupReplayBuffer, DummyReplayBuffer, ReplayBuffer, ReplayLayout};
use rtdrl::tinynet::{td_loss, Mlp};

/// Criteria whose bound cannot hold for the stated parameters; the ledger
/// records the arithmetic.
const KNOWN_UNATTAINABLE: &[usize] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "dedup accounting identity", secs(30), c1_accounting_identity),
        (2, "75% memory reduction", secs(1), c2_memory_reduction),
        (3, "dedup/dummy observational equivalence", secs(60), c3_equivalence),
        (4, "batch range and memory cap", secs(10), c4_batch_safety),
        (5, "deadline satisfaction", secs(600), c5_deadlines),
        (6, "coordinator conservation and sign structure", secs(5), c6_coordinator),
        (7, "OOM recovery", secs(120), c7_oom_recovery),
        (8, "learning sanity", secs(600), c8_learning),
        (9, "gradient correctness", secs(30), c9_gradients),
        (10, "early exit", secs(5), c10_early_exit),
        (11, "overhead bound", secs(300), c11_overhead),
        (12, "sweep shape", secs(1800), c12_sweeps),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    let mut unexpected = 0;
    let mut total = 0;
    for (id, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        total += 1;
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = out.pass && in_time;
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        let timing = if in_time {
            format!("{:.2}s", took.as_secs_f64())
        } else {
            format!("{:.2}s, over the {}s limit", took.as_secs_f64(), limit.as_secs())
        };
        println!("[{tag}] {id:>2} {name}: {} ({timing})", out.detail);
        if !pass && !known {
            unexpected += 1;
        }
    }
    println!("acceptance: {total} criteria run, {unexpected} unexpected failures");
    if unexpected > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn layout(frame: usize, n_frames: usize) -> ReplayLayout {
    ReplayLayout::new(&ObservationSpec::new(vec![frame], ElementKind::U8, n_frames))
}

/// Footprint written out independently of the library formula.
fn oracle_dedup(n: u64, s: u64, n_frames: u64, link: u64, meta: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let frames = n + n_frames - 1;
    frames * s + n * (n_frames - 1) * link + n * meta
}

fn random_frame(rng: &mut ChaCha8Rng, bytes: usize) -> Vec<u8> {
    (0..bytes).map(|_| rng.gen()).collect()
}

fn c1_accounting_identity() -> Outcome {
    let mut checks = 0u64;
    let mut violations = 0u64;
    let mut sequences = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            sequences += 1;
            let frame = rng.gen_range(1..48);
            let n_frames = rng.gen_range(1..6);
            let l = layout(frame, n_frames);
            let mut buf = DedupReplayBuffer::new(l, rng.gen_range(1..150));
            for _ in 0..200 {
                let op = rng.gen_range(0..100);
                if op < 70 {
                    let f = random_frame(&mut rng, frame);
                    buf.push(&f, rng.gen_range(0..4), rng.gen(), rng.gen_bool(0.08)).unwrap();
                } else if op < 80 {
                    buf.shrink(rng.gen_range(1..=buf.capacity()));
                } else if op < 90 {
                    let cap = rng.gen_range(buf.len().max(1)..buf.len() + 200);
                    buf.expand(cap).unwrap();
                } else {
                    buf.garbage_collect();
                }
                checks += 1;
                let want = oracle_dedup(buf.len() as u64, frame as u64, n_frames as u64, 4, 9);
                if buf.bytes_used() != want || !buf.links_are_live() {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(violations == 0, format!("{sequences} interleavings, {checks} checks, {violations} mismatches"))
}

fn c2_memory_reduction() -> Outcome {
    let l = ReplayLayout::new(&ObservationSpec::atari_shaped());
    assert_eq!((l.state_bytes, l.n_frames, l.link_bytes, l.metadata_bytes), (100_800, 4, 4, 9));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut outside = 0;
    let mut first_inside = None;
    for n in 100..=10_000u64 {
        let dedup = oracle_dedup(n, 100_800, 4, 4, 9);
        let dummy = n * (4 * 100_800 + 9);
        assert_eq!((dedup, dummy), (dedup_bytes(n, &l), dummy_bytes(n, &l)));
        let saving = 1.0 - dedup as f64 / dummy as f64;
        lo = lo.min(saving);
        hi = hi.max(saving);
        if (0.749..=0.751).contains(&saving) {
            first_inside.get_or_insert(n);
        } else {
            outside += 1;
        }
    }
    // The N_frames - 1 leading frames cost 3/(4n) of the saving, so the
    // band is only reached once n is large enough.
    let detail = format!(
        "saving in [{lo:.4}, {hi:.4}], {outside} of 9901 sizes outside [0.749, 0.751], band first reached at n={}",
        first_inside.map_or("never".to_string(), |n| n.to_string())
    );
    Outcome::new(outside == 0, detail)
}

fn c3_equivalence() -> Outcome {
    let frame = 36;
    let l = layout(frame, 4);
    let mut batches = 0;
    let mut after_gc = 0;
    let mut mismatches = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let cap = rng.gen_range(200..600);
        let mut dedup = DedupReplayBuffer::new(l, cap);
        let mut dummy = DummyReplayBuffer::new(l, cap);
        let mut collected = false;
        let mut k = 0;
        let mut seed_batches = 0;
        while seed_batches < 1000 {
            k += 1;
            for _ in 0..rng.gen_range(1..6) {
                let f = random_frame(&mut rng, frame);
                let (a, r, d) = (rng.gen_range(0..6), rng.gen_range(-1.0..1.0), rng.gen_bool(0.05));
                dedup.push(&f, a, r, d).unwrap();
                dummy.push(&f, a, r, d).unwrap();
            }
            if k % 97 == 96 {
                let c = rng.gen_range(50..=dedup.capacity());
                dedup.shrink(c);
                dummy.shrink(c);
                dedup.garbage_collect();
                collected = true;
            } else if k % 131 == 130 {
                let c = dedup.capacity() + rng.gen_range(0..300);
                dedup.expand(c).unwrap();
                dummy.expand(c).unwrap();
            }
            let avail = dedup.sampleable();
            if avail == 0 || avail != dummy.sampleable() {
                mismatches += (avail != dummy.sampleable()) as usize;
                continue;
            }
            let m = rng.gen_range(1..=avail.min(32));
            let draw_seed: u64 = rng.gen();
            let want = dummy.sample(m, &mut ChaCha8Rng::seed_from_u64(draw_seed)).unwrap();
            let got = if k % 2 == 0 {
                dedup.sample(m, &mut ChaCha8Rng::seed_from_u64(draw_seed)).unwrap()
            } else {
                dedup.prefetch_next(m, &mut ChaCha8Rng::seed_from_u64(draw_seed)).unwrap().redeem().unwrap()
            };
            batches += 1;
            seed_batches += 1;
            after_gc += collected as usize;
            if got != want {
                mismatches += 1;
            }
        }
    }
    let pass = mismatches == 0 && batches >= 10_000 && after_gc > 0;
    Outcome::new(pass, format!("{batches} batches ({after_gc} after a collection), {mismatches} mismatches"))
}

fn c4_batch_safety() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0u64;
    let n = 1_000_000u64;
    for _ in 0..n {
        let b_min = rng.gen_range(1..=256usize);
        let c = if rng.gen_bool(0.5) { 2.0 } else { rng.gen_range(1.01..4.0) };
        let per_sample = rng.gen_range(1..200_000u64);
        let policy = BatchPolicy::new(b_min, c, per_sample, Granularity::Episode);
        let deadline = rng.gen_range(0.1..1e4);
        let budget = rng.gen_range(1..1_000_000u64);
        let now = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..2.0 * deadline) };
        let consumed = rng.gen_range(0..=budget);
        let b_i = rng.gen_range(1..=8 * b_min);
        // Reservations the coordinator can hand out always admit b_min.
        let lo = b_min as u64 * per_sample;
        let m_batch = rng.gen_range(lo..=lo * 8);

        let mut trackers = ProgressTrackers::new(deadline, budget);
        let d = decide_batch(&mut trackers, now, consumed, b_i, m_batch, &policy).unwrap();

        let (a, b) = (now / deadline, consumed as f64 / budget as f64);
        let scaled = if a > b {
            (b_i as f64 * c).floor() as usize
        } else if a < b {
            ((b_i as f64 / c).floor() as usize).max(1)
        } else {
            b_i
        };
        let cap = (m_batch as u128 * policy.b_base as u128 / policy.m_base as u128) as u64;
        let expect = (scaled.clamp(b_min, 4 * b_min) as u64).min(cap) as usize;
        let out_of_range = d.b_next < b_min || d.b_next > 4 * b_min;
        if out_of_range || d.b_next as u64 > cap || d.b_next != expect {
            violations += 1;
        }
    }
    Outcome::new(violations == 0, format!("{n} tracker states, {violations} violations"))
}

fn deadline_base(policy: Policy, seed: u64) -> RunConfig {
    RunConfig { policy, seed, data_budget: 8_000, max_episodes: 10_000, target_reward: 1e9, ..RunConfig::default() }
}

fn c5_deadlines() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for policy in [Policy::R3Episode, Policy::R3Step] {
        let mut rates = Vec::new();
        for seed in 0..5 {
            let mut cfg = deadline_base(policy, seed);
            let t = match calibrate(&cfg) {
                Ok(t) => t,
                Err(e) => return Outcome::new(false, format!("{} seed {seed}: {e}", policy.name())),
            };
            cfg.deadline_s = 1.5 * t;
            match run_experiment(&cfg) {
                Ok(r) => rates.push(r.summary.miss_rate),
                Err(e) => return Outcome::new(false, format!("{} seed {seed}: {e}", policy.name())),
            }
        }
        pass &= rates.iter().all(|&r| r == 0.0);
        lines.push(format!("{} miss rates {:?}", policy.name(), pct(&rates)));
    }
    let mut rates = Vec::new();
    for seed in 0..5 {
        let mut cfg = deadline_base(Policy::MaxA, seed);
        let t = match calibrate(&cfg) {
            Ok(t) => t,
            Err(e) => return Outcome::new(false, format!("max-a seed {seed}: {e}")),
        };
        cfg.deadline_s = 0.7 * t;
        match run_experiment(&cfg) {
            Ok(r) => rates.push(r.summary.miss_rate),
            Err(e) => return Outcome::new(false, format!("max-a seed {seed}: {e}")),
        }
    }
    pass &= rates.iter().all(|&r| r > 0.3);
    lines.push(format!("max-a at 0.7x misses {:?}", pct(&rates)));
    Outcome::new(pass, lines.join("; "))
}

fn pct(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| format!("{:.1}%", 100.0 * x)).collect()
}

fn c6_coordinator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 100_000;
    let (mut conservation, mut signs, mut at_boundary) = (0, 0, 0);
    let pick = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.1) { 1.0 } else { rng.gen_range(0.0..3.0) };
    for _ in 0..n {
        let alpha: f64 = pick(&mut rng);
        let beta: f64 = pick(&mut rng);
        let total = rng.gen_range(2..1_000_000_000u64);
        let m_batch = rng.gen_range(1..total);
        let m_replay = if rng.gen_bool(0.05) { total - m_batch } else { rng.gen_range(1..=total - m_batch) };
        let res = MemoryReservation { total, m_batch, m_replay, initial_share: 0.25 };

        let (db, dr) = update_reservations(&res, alpha, beta);
        let (mb, mr) = (m_batch as f64, m_replay as f64);
        let batch_grows = alpha > 1.0 && beta < 1.0;
        let replay_grows = beta < 1.0 && alpha > 0.0;
        if (db > mb) != batch_grows || (dr > mr) != replay_grows || db < mb || dr < mr {
            signs += 1;
        }

        let (fb, fr) = renormalize(total, db, dr);
        let sum = fb + fr;
        let desired = db + dr;
        if desired == total as f64 {
            at_boundary += 1;
            if sum != total {
                conservation += 1;
            }
        } else if sum > total || ((sum == total) != (desired > total as f64)) {
            conservation += 1;
        }
    }
    Outcome::new(
        conservation == 0 && signs == 0,
        format!(
            "{n} tuples, {conservation} conservation and {signs} sign violations ({at_boundary} with desired sum exactly M)"
        ),
    )
}

fn c7_oom_recovery() -> Outcome {
    let base = RunConfig { data_budget: 10_000, max_episodes: 10_000, target_reward: 1e9, ..RunConfig::default() };
    let episodes = match run_experiment(&base) {
        Ok(r) => r.episodes.len(),
        Err(e) => return Outcome::new(false, format!("uncut run failed: {e}")),
    };
    let cut_at = episodes / 2;
    let cfg = RunConfig { budget_cut_episode: Some(cut_at), budget_cut_fraction: 0.6, ..base.clone() };
    let reduced = (base.memory_budget as f64 * 0.6) as u64;
    let r = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("cut run failed: {e}")),
    };
    let after: Vec<_> = r.episodes.iter().filter(|e| e.index >= cut_at).collect();
    let over = after.iter().filter(|e| e.accounted_peak > reduced || e.m_batch + e.m_replay > reduced).count();
    let peak = after.iter().map(|e| e.accounted_peak).max().unwrap_or(0);
    let pass = !r.oom_events.is_empty() && over == 0 && !after.is_empty();
    Outcome::new(
        pass,
        format!(
            "cut to {reduced} bytes at episode {cut_at} of {episodes}; {} OOM events; peak after cut {peak}; {over} episodes over budget",
            r.oom_events.len()
        ),
    )
}

fn c8_learning() -> Outcome {
    let mut finals = Vec::new();
    for seed in 0..5 {
        let cfg = RunConfig { seed, ..RunConfig::default() };
        match run_experiment(&cfg) {
            Ok(r) => finals.push(r.summary.final_reward),
            Err(e) => return Outcome::new(false, format!("seed {seed}: {e}")),
        }
    }
    let hits = finals.iter().filter(|&&f| f >= 150.0).count();
    let shown: Vec<String> = finals.iter().map(|f| format!("{f:.1}")).collect();
    Outcome::new(hits >= 3, format!("final-20 means [{}], {hits}/5 seeds >= 150", shown.join(", ")))
}

/// Forward pass and squared TD error written without the library.
fn oracle_loss(net: &Mlp, states: &[f64], actions: &[usize], targets: &[f64]) -> f64 {
    let layers = net.layers();
    let mut total = 0.0;
    for (i, x) in states.chunks_exact(net.input_dim()).enumerate() {
        let mut h = x.to_vec();
        for (li, layer) in layers.iter().enumerate() {
            let mut out = vec![0.0; layer.n_out];
            for (j, o) in out.iter_mut().enumerate() {
                let mut s = layer.bias[j];
                for k in 0..layer.n_in {
                    s += layer.weights[j * layer.n_in + k] * h[k];
                }
                *o = if li + 1 < layers.len() { s.max(0.0) } else { s };
            }
            h = out;
        }
        let e = h[actions[i]] - targets[i];
        total += e * e;
    }
    total / targets.len() as f64
}

fn c9_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for _ in 0..20 {
        let input = rng.gen_range(2..8);
        let hidden: Vec<usize> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(3..12)).collect();
        let n_act = rng.gen_range(2..5);
        let mut net = Mlp::new(input, &hidden, n_act, &mut rng);
        // Zero biases put units exactly on the rectifier kink when every
        // unit feeding them is inactive.
        for layer in net.layers_mut() {
            layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
        let len = rng.gen_range(1..9);
        let states: Vec<f64> = (0..len * input).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let actions: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n_act)).collect();
        let targets: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();

        let cache = net.forward_cached(&states, len).unwrap();
        let (_, grad_out) = td_loss(&cache, &actions, &targets, n_act);
        let analytic = net.backward(&cache, &grad_out).flat();

        let mut probe = net.clone();
        for (k, &a) in analytic.iter().enumerate() {
            let orig = *probe.param_mut(k);
            *probe.param_mut(k) = orig + h;
            let plus = oracle_loss(&probe, &states, &actions, &targets);
            *probe.param_mut(k) = orig - h;
            let minus = oracle_loss(&probe, &states, &actions, &targets);
            *probe.param_mut(k) = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(err);
            params += 1;
        }
    }
    Outcome::new(worst <= 1e-4, format!("20 networks, {params} parameters, max relative error {worst:.2e}"))
}

fn c10_early_exit() -> Outcome {
    let (k, target) = (10, 200.0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut wrong = 0;
    let mut exits = 0;
    for _ in 0..1000 {
        let mut rewards = Vec::new();
        let len = rng.gen_range(5..300);
        while rewards.len() < len {
            let run = rng.gen_range(1..14);
            let high = rng.gen_bool(0.5);
            for _ in 0..run {
                let r = if high {
                    if rng.gen_bool(0.2) { 200.0 } else { rng.gen_range(200.0..500.0) }
                } else if rng.gen_bool(0.2) {
                    199.999
                } else {
                    rng.gen_range(0.0..200.0)
                };
                rewards.push(r);
            }
        }
        let expect = (k - 1..rewards.len()).find(|&i| rewards[i + 1 - k..=i].iter().all(|&r| r >= target));
        let mut stream = EarlyExit::new(k, target);
        let streamed = rewards.iter().position(|&r| stream.observe(r));
        let windowed = (0..rewards.len()).find(|&i| check_early_exit(&rewards[..=i], k, target));
        exits += expect.is_some() as usize;
        if streamed != expect || windowed != expect {
            wrong += 1;
        }
    }
    Outcome::new(wrong == 0, format!("1000 sequences ({exits} with an exit), {wrong} wrong exit indices"))
}

fn c11_overhead() -> Outcome {
    let cfg = RunConfig {
        policy: Policy::R3Step,
        max_episodes: 200,
        data_budget: 1_000_000,
        target_reward: 1e9,
        ..RunConfig::default()
    };
    match run_experiment(&cfg) {
        Ok(r) => {
            let s = &r.summary;
            Outcome::new(
                s.episodes == 200 && s.overhead_fraction < 0.01,
                format!(
                    "{} episodes, overhead {:.4}s of {:.2}s = {:.3}%",
                    s.episodes,
                    s.overhead_s,
                    s.total_latency_s,
                    100.0 * s.overhead_fraction
                ),
            )
        }
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

fn c12_sweeps() -> Outcome {
    let template = RunConfig::default();
    let rows = match sweep(&template, Axis::Buffer, &[500, 2_000, 8_000], 3) {
        Ok(rows) => rows,
        Err(e) => return Outcome::new(false, format!("buffer sweep: {e}")),
    };
    let peaks_up = rows.windows(2).all(|w| w[1].peak_bytes > w[0].peak_bytes);
    let reward_up = rows.windows(2).all(|w| w[1].final_reward >= w[0].final_reward);
    let shown: Vec<String> =
        rows.iter().map(|r| format!("{}: peak {} final {:.1}", r.value, r.peak_bytes, r.final_reward)).collect();

    let small = RunConfig { data_budget: 2_000, ..RunConfig::default() };
    let dir = tempfile::tempdir().expect("temp dir");
    let batch_table = sweep(&small, Axis::Batch, &[32, 64, 128], 1)
        .and_then(|rows| write_sweep(&rows, dir.path()).map(|_| rows.len()))
        .map(|n| n == 3 && std::fs::read_to_string(dir.path().join("sweep.csv")).map_or(0, |t| t.lines().count()) == 4);
    let batch_ok = matches!(batch_table, Ok(true));
    Outcome::new(
        peaks_up && reward_up && batch_ok,
        format!(
            "buffer [{}]; peaks increasing {peaks_up}, rewards non-decreasing {reward_up}; batch table emitted {batch_ok}",
            shown.join("; ")
        ),
    )
}

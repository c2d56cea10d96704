//! The discrete-event engine: N sources with private ingress links feeding a
//! shared tail-drop buffer in front of the multiplexing link, a fan-out
//! switch with per-receiver queues, per-receiver egress links, and a
//! constant-delay lossless return path for acks.
//!
//! All state advances on integer-nanosecond events; two runs with the same
//! scenario and seed produce identical metrics.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dist::SizeDistribution;
use crate::model::PathParams;
use crate::netsim::event::{Event, EventKind, EventQueue, Packet, Stage};
use crate::netsim::metrics::{timeout_record, ConnRecord, SimMetrics};
use crate::netsim::scenario::{FileSizes, Scenario, ScenarioError};
use crate::tcp::{Actions, Receiver, SendItem, TcpSender};
use crate::units::Nanos;

#[derive(Debug)]
struct Link {
    tx_ns: Nanos,
    cap: Option<usize>,
    queue: VecDeque<Packet>,
    busy: bool,
    enqueued: u64,
    dequeued: u64,
    dropped: u64,
}

impl Link {
    fn new(tx_ns: Nanos, cap: Option<usize>) -> Self {
        Link { tx_ns, cap, queue: VecDeque::new(), busy: false, enqueued: 0, dequeued: 0, dropped: 0 }
    }

    fn full(&self) -> bool {
        self.cap.map_or(false, |c| self.queue.len() >= c)
    }
}

#[derive(Debug)]
struct Source {
    off_rng: ChaCha12Rng,
    size_rng: ChaCha12Rng,
    sender: Option<TcpSender>,
    receiver: Option<Receiver>,
    conn: u64,
    arm: u64,
    timer_armed: bool,
    started_ns: Nanos,
    size: u64,
    bd_active: bool,
    activated_ns: Nanos,
    state_at_activation: u32,
    drops: u64,
    qseen_sum: u64,
    qseen_cnt: u64,
    pkts_total: u64,
    dur_total_ns: u128,
}

/// Run a scenario to completion and return everything measured.
pub fn run_scenario(sc: &Scenario) -> Result<SimMetrics, ScenarioError> {
    Engine::new(sc)?.run()
}

struct Engine {
    sc: Scenario,
    links: Vec<Link>,
    mux: usize,
    q: EventQueue,
    sources: Vec<Source>,
    dist: Option<SizeDistribution>,
    // Constant pieces of the path.
    d_fwd_ns: Nanos,
    ack_path_ns: Nanos,
    // Birth-death monitor.
    bd_count: usize,
    bd_last_ns: Nanos,
    bd_time_ns: Vec<u128>,
    state_counts: Vec<u64>,
    state_size_sum: Vec<u64>,
    state_dur_sum_ns: Vec<u128>,
    // Queue monitor on the shared buffer.
    q_len: usize,
    q_last_ns: Nanos,
    queue_time_ns: Vec<u128>,
    queue_seen: Vec<u64>,
    appearing: u64,
    dropped: u64,
    drops_by_seq: Vec<u64>,
    drops_slow_start: u64,
    // Busy meter on the multiplexing link.
    busy_since_ns: Nanos,
    mux_busy_ns: u128,
    // Aggregates.
    records: Vec<ConnRecord>,
    timeout_events: Vec<crate::netsim::metrics::TimeoutRecord>,
    fr_retransmissions: Vec<u64>,
    fr_packets_sent: Vec<u64>,
    fr_exit_burst: Vec<u64>,
    fr_duration_ns: Vec<Nanos>,
    fr_recovered: u64,
    td_total: u64,
    sent_total: u64,
    rtx_total: u64,
    completions: u64,
}

const DROP_SEQ_BUCKETS: usize = 4096;

/// Independent, reproducible stream per (seed, source, purpose).
fn stream_rng(seed: u64, src: u32, purpose: u64) -> ChaCha12Rng {
    let mut x = seed ^ (src as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ purpose.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        // splitmix64 step
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha12Rng::from_seed(bytes)
}

impl Engine {
    fn new(sc: &Scenario) -> Result<Self, ScenarioError> {
        let path = PathParams::new(sc.path_inputs()?);
        let n = sc.n_sources as usize;
        let mut links = Vec::with_capacity(2 * n + 1);
        for _ in 0..n {
            links.push(Link::new(path.delta_ns[0], None));
        }
        links.push(Link::new(path.delta_ns[1], sc.buffer.map(|b| b as usize)));
        for _ in 0..n {
            // The fan-out switch reserves a receiver window per output, so
            // these queues never overflow.
            links.push(Link::new(path.delta_ns[2], Some(sc.w_r as usize)));
        }
        let dist = match sc.sizes {
            FileSizes::Fixed(_) => None,
            FileSizes::Sampled(spec) => {
                Some(spec.build().map_err(|_| ScenarioError::Invalid("bad size distribution"))?)
            }
        };
        let d_fwd_ns = sc.path_inputs()?.d_ns / 2;
        let d_back_ns = sc.path_inputs()?.d_ns - d_fwd_ns;
        let ack_path_ns = path.ack_tx_ns.iter().sum::<u64>() + d_back_ns;
        let sources = (0..sc.n_sources)
            .map(|i| Source {
                off_rng: stream_rng(sc.seed, i, 1),
                size_rng: stream_rng(sc.seed, i, 2),
                sender: None,
                receiver: None,
                conn: 0,
                arm: 0,
                timer_armed: false,
                started_ns: 0,
                size: 0,
                bd_active: false,
                activated_ns: 0,
                state_at_activation: 0,
                drops: 0,
                qseen_sum: 0,
                qseen_cnt: 0,
                pkts_total: 0,
                dur_total_ns: 0,
            })
            .collect();
        Ok(Engine {
            sc: *sc,
            links,
            mux: n,
            q: EventQueue::new(),
            sources,
            dist,
            d_fwd_ns,
            ack_path_ns,
            bd_count: 0,
            bd_last_ns: 0,
            bd_time_ns: vec![0; n + 1],
            state_counts: vec![0; n + 1],
            state_size_sum: vec![0; n + 1],
            state_dur_sum_ns: vec![0; n + 1],
            q_len: 0,
            q_last_ns: 0,
            queue_time_ns: vec![0; 64],
            queue_seen: vec![0; 64],
            appearing: 0,
            dropped: 0,
            drops_by_seq: vec![0; DROP_SEQ_BUCKETS + 1],
            drops_slow_start: 0,
            busy_since_ns: 0,
            mux_busy_ns: 0,
            records: Vec::new(),
            timeout_events: Vec::new(),
            fr_retransmissions: Vec::new(),
            fr_packets_sent: Vec::new(),
            fr_exit_burst: Vec::new(),
            fr_duration_ns: Vec::new(),
            fr_recovered: 0,
            td_total: 0,
            sent_total: 0,
            rtx_total: 0,
            completions: 0,
        })
    }

    fn run(mut self) -> Result<SimMetrics, ScenarioError> {
        for i in 0..self.sc.n_sources {
            let wake = self.draw_off(i as usize, 0);
            self.q.push(wake, EventKind::Wake { src: i });
        }
        let mut end_ns = 0;
        while let Some(Event { time, kind, .. }) = self.q.pop() {
            match kind {
                EventKind::Departure { link } => self.on_departure(link, time),
                EventKind::Arrival { stage, pkt } => match stage {
                    Stage::Mux => self.on_mux_arrival(pkt, time),
                    Stage::EgressQueue => self.on_egress_arrival(pkt, time),
                    Stage::Receiver => self.on_receiver_arrival(pkt, time),
                },
                EventKind::AckArrival { src, conn, ack } => self.on_ack_arrival(src, conn, ack, time),
                EventKind::Timer { src, conn, arm } => self.on_timer(src, conn, arm, time),
                EventKind::Wake { src } => self.on_wake(src, time),
            }
            if self.completions >= self.sc.nc {
                end_ns = time;
                break;
            }
        }
        self.close_monitors(end_ns);
        self.check_conservation();
        Ok(self.into_metrics(end_ns))
    }

    // ---- event handlers -------------------------------------------------

    fn on_wake(&mut self, src: u32, now: Nanos) {
        let size = self.draw_size(src as usize);
        let s = &mut self.sources[src as usize];
        s.conn += 1;
        s.size = size;
        s.started_ns = now;
        s.bd_active = false;
        s.drops = 0;
        s.qseen_sum = 0;
        s.qseen_cnt = 0;
        s.sender = Some(TcpSender::new(size, self.sc.w_r, self.sc.min_rto_ns));
        s.receiver = Some(Receiver::new(size));
        let actions = s.sender.as_mut().unwrap().start(now);
        self.apply(src, actions, now);
    }

    fn on_ack_arrival(&mut self, src: u32, conn: u64, ack: u64, now: Nanos) {
        let s = &mut self.sources[src as usize];
        if s.conn != conn || s.sender.is_none() {
            return;
        }
        let actions = s.sender.as_mut().unwrap().on_ack(ack, now);
        self.apply(src, actions, now);
    }

    fn on_timer(&mut self, src: u32, conn: u64, arm: u64, now: Nanos) {
        let s = &mut self.sources[src as usize];
        if s.conn != conn || !s.timer_armed || s.arm != arm || s.sender.is_none() {
            return;
        }
        s.timer_armed = false;
        let actions = s.sender.as_mut().unwrap().on_timeout(now);
        self.apply(src, actions, now);
    }

    fn on_departure(&mut self, link_idx: usize, now: Nanos) {
        let link = &mut self.links[link_idx];
        let pkt = link.queue.pop_front().expect("departure from empty link");
        link.dequeued += 1;
        let more = !link.queue.is_empty();
        if more {
            let tx = link.tx_ns;
            self.q.push(now + tx, EventKind::Departure { link: link_idx });
        } else {
            link.busy = false;
        }
        if link_idx == self.mux {
            self.queue_change(self.q_len - 1, now);
            if !more {
                self.mux_busy_ns += (now - self.busy_since_ns) as u128;
            }
        }
        // Route to the next stage.
        if link_idx < self.mux {
            self.q.push(now, EventKind::Arrival { stage: Stage::Mux, pkt });
        } else if link_idx == self.mux {
            self.q.push(now, EventKind::Arrival { stage: Stage::EgressQueue, pkt });
        } else {
            self.q.push(now + self.d_fwd_ns, EventKind::Arrival { stage: Stage::Receiver, pkt });
        }
    }

    fn on_mux_arrival(&mut self, pkt: Packet, now: Nanos) {
        self.appearing += 1;
        let seen = self.q_len;
        bump(&mut self.queue_seen, seen as usize);
        let current = pkt.conn == self.sources[pkt.src as usize].conn;
        if pkt.has(Packet::FIRST_OF_CONN) && current && !self.sources[pkt.src as usize].bd_active {
            let state = self.bd_count + 1;
            self.bd_change(state, now);
            let src = &mut self.sources[pkt.src as usize];
            src.bd_active = true;
            src.activated_ns = now;
            src.state_at_activation = state as u32;
        }
        if current {
            let src = &mut self.sources[pkt.src as usize];
            src.qseen_sum += seen as u64;
            src.qseen_cnt += 1;
        }
        if self.links[self.mux].full() {
            self.dropped += 1;
            self.links[self.mux].dropped += 1;
            self.drops_by_seq[(pkt.seq as usize).min(DROP_SEQ_BUCKETS)] += 1;
            if pkt.has(Packet::SLOW_START) {
                self.drops_slow_start += 1;
            }
            if current {
                self.sources[pkt.src as usize].drops += 1;
            }
            return;
        }
        self.enqueue(self.mux, pkt, now);
    }

    fn on_egress_arrival(&mut self, pkt: Packet, now: Nanos) {
        let idx = self.mux + 1 + pkt.src as usize;
        debug_assert!(!self.links[idx].full(), "switch output queue overflow");
        self.enqueue(idx, pkt, now);
    }

    fn on_receiver_arrival(&mut self, pkt: Packet, now: Nanos) {
        let s = &mut self.sources[pkt.src as usize];
        if pkt.conn != s.conn {
            return;
        }
        let Some(recv) = s.receiver.as_mut() else { return };
        let ack = recv.on_data(pkt.seq);
        let conn = pkt.conn;
        self.q.push(
            now + self.ack_path_ns,
            EventKind::AckArrival { src: pkt.src, conn, ack },
        );
    }

    // ---- plumbing --------------------------------------------------------

    fn apply(&mut self, src: u32, actions: Actions, now: Nanos) {
        for item in &actions.sends {
            let pkt = self.make_packet(src, item);
            self.enqueue(src as usize, pkt, now);
        }
        let s = &mut self.sources[src as usize];
        if let Some(at) = actions.arm_timer_at {
            s.arm += 1;
            s.timer_armed = true;
            self.q.push(at, EventKind::Timer { src, conn: s.conn, arm: s.arm });
        } else if actions.cancel_timer {
            s.arm += 1;
            s.timer_armed = false;
        }
        if actions.completed {
            self.finalize_connection(src, now);
        }
    }

    fn make_packet(&mut self, src: u32, item: &SendItem) -> Packet {
        let mut flags = 0u8;
        if item.retransmission {
            flags |= Packet::RETRANSMISSION;
        }
        if item.in_slow_start {
            flags |= Packet::SLOW_START;
        }
        if item.fr_retransmission {
            flags |= Packet::FR_RTX;
        }
        if item.to_retransmission {
            flags |= Packet::TO_RTX;
        }
        if item.seq == 1 && !item.retransmission {
            flags |= Packet::FIRST_OF_CONN;
        }
        Packet { src, conn: self.sources[src as usize].conn, seq: item.seq, flags }
    }

    fn enqueue(&mut self, link_idx: usize, pkt: Packet, now: Nanos) {
        let link = &mut self.links[link_idx];
        link.queue.push_back(pkt);
        link.enqueued += 1;
        let start = !link.busy;
        if start {
            link.busy = true;
            let tx = link.tx_ns;
            self.q.push(now + tx, EventKind::Departure { link: link_idx });
        }
        if link_idx == self.mux {
            if start {
                self.busy_since_ns = now;
            }
            self.queue_change(self.q_len + 1, now);
        }
    }

    fn finalize_connection(&mut self, src: u32, now: Nanos) {
        let s = &mut self.sources[src as usize];
        let sender = s.sender.take().expect("completing a missing sender");
        s.receiver = None;
        let stats = sender.stats;
        let duration = now - s.started_ns;
        debug_assert!(s.bd_active, "connection completed without activation");
        let bd_duration = now - s.activated_ns;
        let record = ConnRecord {
            src,
            size: s.size,
            duration_ns: duration,
            bd_duration_ns: bd_duration,
            sent_total: stats.sent_total,
            rtx_total: stats.rtx_total,
            rtx_fast_recovery: stats.rtx_fast_recovery,
            rtx_timeout: stats.rtx_timeout,
            drops: s.drops,
            timeouts: stats.timeouts.len() as u64,
            td_count: stats.td_count,
            fr_count: stats.fr_count,
            stall_ns: stats.stall_ns,
            qseen_sum: s.qseen_sum,
            qseen_cnt: s.qseen_cnt,
            state_at_activation: s.state_at_activation,
            rtt_sample_sum_ns: stats.rtt_sample_sum_ns,
            rtt_samples: stats.rtt_samples,
        };
        let conn = s.conn;
        s.pkts_total += s.size;
        s.dur_total_ns += duration as u128;
        let state = s.state_at_activation as usize;
        self.state_counts[state] += 1;
        self.state_size_sum[state] += record.size;
        self.state_dur_sum_ns[state] += duration as u128;
        self.bd_change(self.bd_count - 1, now);
        self.sources[src as usize].bd_active = false;
        for ev in &stats.timeouts {
            self.timeout_events.push(timeout_record(src, conn, ev));
        }
        for ep in &stats.episodes {
            self.fr_retransmissions.push(ep.retransmissions);
            self.fr_packets_sent.push(ep.packets_sent);
            self.fr_duration_ns.push(ep.duration_ns);
            if ep.recovered {
                self.fr_exit_burst.push(ep.exit_burst);
                self.fr_recovered += 1;
            }
        }
        self.td_total += stats.td_count;
        self.sent_total += stats.sent_total;
        self.rtx_total += stats.rtx_total;
        self.records.push(record);
        self.completions += 1;
        if self.completions < self.sc.nc {
            let wake = self.draw_off(src as usize, now);
            self.q.push(wake, EventKind::Wake { src });
        }
    }

    fn draw_off(&mut self, src: usize, now: Nanos) -> Nanos {
        let u: f64 = self.sources[src].off_rng.gen();
        let off = -self.sc.off_mean * (1.0 - u).ln();
        now + (off * 1e9).round() as Nanos
    }

    fn draw_size(&mut self, src: usize) -> u64 {
        match self.sc.sizes {
            FileSizes::Fixed(n) => n,
            FileSizes::Sampled(_) => {
                let dist = self.dist.as_ref().unwrap();
                let mut u: f64 = self.sources[src].size_rng.gen();
                if u <= 0.0 {
                    u = f64::MIN_POSITIVE;
                }
                dist.sample(u)
            }
        }
    }

    fn bd_change(&mut self, new_count: usize, now: Nanos) {
        self.bd_time_ns[self.bd_count] += (now - self.bd_last_ns) as u128;
        self.bd_last_ns = now;
        self.bd_count = new_count;
    }

    fn queue_change(&mut self, new_len: usize, now: Nanos) {
        if self.q_len >= self.queue_time_ns.len() {
            self.queue_time_ns.resize(self.q_len + 1, 0);
        }
        self.queue_time_ns[self.q_len] += (now - self.q_last_ns) as u128;
        self.q_last_ns = now;
        self.q_len = new_len;
    }

    fn close_monitors(&mut self, end_ns: Nanos) {
        self.bd_change(self.bd_count, end_ns);
        self.queue_change(self.q_len, end_ns);
        if self.links[self.mux].busy {
            self.mux_busy_ns += (end_ns - self.busy_since_ns) as u128;
        }
    }

    fn check_conservation(&self) {
        for (i, link) in self.links.iter().enumerate() {
            debug_assert_eq!(
                link.enqueued,
                link.dequeued + link.queue.len() as u64,
                "link {i} leaked packets"
            );
        }
        debug_assert_eq!(
            self.appearing,
            self.links[self.mux].enqueued + self.links[self.mux].dropped
        );
    }

    fn into_metrics(self, end_ns: Nanos) -> SimMetrics {
        SimMetrics {
            scenario_name: self.sc.name(),
            pkt_bytes: self.sc.pkt_bytes,
            n_sources: self.sc.n_sources,
            completed: self.completions,
            end_ns,
            records: self.records,
            source_pkts: self.sources.iter().map(|s| s.pkts_total).collect(),
            source_dur_ns: self.sources.iter().map(|s| s.dur_total_ns).collect(),
            bd_time_ns: self.bd_time_ns,
            state_counts: self.state_counts,
            state_size_sum: self.state_size_sum,
            state_dur_sum_ns: self.state_dur_sum_ns,
            queue_time_ns: self.queue_time_ns,
            queue_seen: self.queue_seen,
            appearing: self.appearing,
            dropped: self.dropped,
            forwarded: self.links[self.mux].dequeued,
            drops_by_seq: self.drops_by_seq,
            drops_slow_start: self.drops_slow_start,
            mux_busy_ns: self.mux_busy_ns,
            timeout_events: self.timeout_events,
            fr_retransmissions: self.fr_retransmissions,
            fr_packets_sent: self.fr_packets_sent,
            fr_exit_burst: self.fr_exit_burst,
            fr_duration_ns: self.fr_duration_ns,
            fr_recovered: self.fr_recovered,
            td_total: self.td_total,
            sent_total: self.sent_total,
            rtx_total: self.rtx_total,
        }
    }
}

fn bump(v: &mut Vec<u64>, idx: usize) {
    if idx >= v.len() {
        v.resize(idx + 1, 0);
    }
    v[idx] += 1;
}

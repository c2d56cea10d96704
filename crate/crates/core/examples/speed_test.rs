use tcpengset::netsim::{run_scenario, Scenario};

fn main() {
    for (name, nc) in [("100M10M2M-R50-W44-B200-F12-E-N134", 83_333u64),
                       ("100M10M2M-R50-W44-B150-F12-EE7-N134", 83_333)] {
        let t0 = std::time::Instant::now();
        let mut sc = Scenario::parse_name(name).unwrap();
        sc.nc = nc;
        sc.seed = 12345;
        let m = run_scenario(&sc).unwrap();
        println!("== {name} ({:?})", t0.elapsed());
        println!("h: {:.1} kbps  ON: {:.1} ms  L: {:.3}%  util: {:.2}%  h2: {:.1}",
            m.h_meas_per_source()/1e3, m.on_mean_s()*1e3, m.loss_rate()*100.0,
            m.utilization()*100.0, m.h2_mean()/1e3);
        let d = m.drop_analysis();
        println!("TO/drop: {:.1}%  TD/drop: {:.1}%  FR/TD: {:.1}%  TObeg: {:.1}%  TOend: {:.1}%  TOTO: {:.1}%  TDTO: {:.1}%",
            d.to_per_drop_pct, d.td_per_drop_pct, d.fr_per_td_pct, d.tobeg_pct, d.toend_pct, d.toto_pct, d.tdto_pct);
        println!("drops seq1: {}  seq2: {}  avgTO/TO: {:.0} ms  pkts TDFR/FR: {:.1}  on FR: {:.1}  rate TDFR {:.1} kbps  send rate {:.1}",
            d.drops_by_seq[1], d.drops_by_seq[2], d.avg_to_time_ms, d.avg_pkts_tdfr_per_fr, d.avg_pkts_on_fr, d.avg_tdfr_rate_kbps, d.avg_send_rate_kbps);
        println!("mean RTT: {:.1} ms  meanQ(seen): {:.1}", m.mean_rtt_ms(), m.queue_distributions().mean_q_seen);
    }
}

mod common;

use common::station;
use relaysim_core::channel::{ChannelConfig, McsTable};
use relaysim_core::energy::{link_energy_mj, slots_needed, FrameConfig};
use relaysim_core::radio::{InterferenceField, RadioMap};
use relaysim_core::simulator::{
    compare, frame_step, run, savings_percent, Algorithm, FrameState, Prepared, RunReport, SimConfig, SimError,
};
use relaysim_core::topology::{Link, StationId, StationKind, Topology};

fn small(seed: u64, n_ms: usize, n_rs: usize, frames: usize) -> SimConfig {
    SimConfig { n_ms, n_rs, n_frames: frames, seed, ..Default::default() }
}

/// BS plus MSs on a ray at the given distances, each with a direct link only.
fn star(distances: &[f64]) -> Topology {
    let mut stations = vec![station(0, StationKind::BaseStation, 0.0, 0.0)];
    let mut links = Vec::new();
    for (i, &d) in distances.iter().enumerate() {
        let id = i as u32 + 1;
        stations.push(station(id, StationKind::MobileStation, d, 40.0 * i as f64));
        links.push(Link { from: StationId(id), to: StationId::BASE, distance_m: d, bandwidth_hz: 5e6 });
    }
    Topology::from_parts(stations, links, 1, 2000.0, 256).unwrap()
}

fn radio(t: &Topology) -> RadioMap {
    RadioMap::new(t, &ChannelConfig::default(), &McsTable::default(), 0).unwrap()
}

fn check_invariants(r: &RunReport, slots: u64) {
    assert_eq!(r.bits_sampled, r.bits_served + r.bits_queued);
    let total: f64 = r.frames.iter().map(|f| f.total_energy_mj).sum();
    let tol = 1e-9 * total.abs().max(1e-300);
    for f in &r.frames {
        let e = &f.per_class_energy;
        assert!(f.slots_used <= slots);
        assert!(f.slots_used <= f.slots_demanded);
        assert!((e.e_mr_mj + e.e_rr_mj + e.e_rb_mj - f.total_energy_mj).abs() <= 1e-9 * f.total_energy_mj.max(1e-300));
    }
    assert!((r.energy.e_mr_mj + r.energy.e_rr_mj + r.energy.e_rb_mj - total).abs() <= tol);
    assert!((r.energy.total_mj - total).abs() <= tol);
    let mean = total / r.frames.len() as f64;
    assert!((r.mean_energy_per_frame_mj - mean).abs() <= 1e-9 * mean.abs().max(1e-300));
    assert_eq!(r.bits_served, r.frames.iter().map(|f| f.bits_served).sum::<u64>());
    assert_eq!(r.frames.last().unwrap().carried_over_bits, r.bits_queued);
}

#[test]
fn no_mobile_stations_means_zero_energy() {
    let r = run(&small(1, 0, 5, 20), Algorithm::Ebcd).unwrap();
    assert!(r.frames.iter().all(|f| f.total_energy_mj == 0.0 && f.slots_used == 0));
    assert_eq!(r.mean_energy_per_frame_mj, 0.0);
    assert_eq!(r.bits_sampled, 0);
}

#[test]
fn zero_demand_frame_is_idle() {
    let t = star(&[300.0, 500.0]);
    let radio = radio(&t);
    let mut s = FrameState::new(&radio, FrameConfig::default(), vec![vec![0], vec![1]]);
    let f = frame_step(&mut s, &[0, 0], 0);
    assert_eq!((f.slots_used, f.slots_demanded, f.bits_served, f.carried_over_bits), (0, 0, 0, 0));
    assert_eq!(f.total_energy_mj, 0.0);
}

#[test]
fn single_direct_link_matches_closed_form() {
    let t = star(&[400.0]);
    let radio = radio(&t);
    let hop = radio.link(0).isolated;
    let fc = FrameConfig::default();
    let mut s = FrameState::new(&radio, fc, vec![vec![0]]);
    for d in [1, 47, 48, 49, 1450, 2000] {
        let f = frame_step(&mut s, &[d], 0);
        assert_eq!(f.total_energy_mj, link_energy_mj(d, &hop.level, &fc, hop.tx_power_mw));
        assert_eq!(f.slots_used, slots_needed(d, hop.level.bits_per_slot));
        assert_eq!(f.per_class_energy.e_mr_mj, f.total_energy_mj);
    }
}

#[test]
fn budget_boundary_carries_over() {
    let t = star(&[400.0]);
    let radio = radio(&t);
    let per_slot = radio.link(0).isolated.level.bits_per_slot as u64;
    let mut s = FrameState::new(&radio, FrameConfig::default(), vec![vec![0]]);
    let f = frame_step(&mut s, &[48 * per_slot + 1], 0);
    assert_eq!(f.slots_used, 48);
    assert_eq!(f.slots_demanded, 49);
    assert_eq!(f.carried_over_bits, 1);
    assert_eq!(s.queues(), &[1]);
    // The single leftover bit goes out next frame.
    let g = frame_step(&mut s, &[0], 1);
    assert_eq!((g.slots_used, g.bits_served, g.carried_over_bits), (1, 1, 0));
}

#[test]
fn slots_demanded_is_sum_of_ceilings() {
    let t = star(&[250.0, 600.0, 900.0, 1300.0]);
    let radio = radio(&t);
    let routes: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    let demands = [130, 77, 401, 95];
    let mut s = FrameState::new(&radio, FrameConfig::default(), routes.clone());
    let f = frame_step(&mut s, &demands, 0);
    // Everything fits, so all four transmit together.
    let mut field = InterferenceField::new(&radio);
    field.build(&radio, routes.iter().map(|r| r.as_slice()));
    let want: u64 = (0..4)
        .map(|i| slots_needed(demands[i], field.resolve(&radio, i).level.bits_per_slot))
        .sum();
    assert_eq!(f.slots_demanded, want);
    assert_eq!(f.slots_used, want);
    assert_eq!(f.bits_served, demands.iter().sum::<u64>());
}

#[test]
fn identical_configs_identical_outcomes() {
    let cfg = small(11, 20, 6, 50);
    for algo in [Algorithm::Ebcd, Algorithm::Dijkstra] {
        let a = run(&cfg, algo).unwrap();
        let b = run(&cfg, algo).unwrap();
        assert!(a.same_outcome(&b));
    }
}

#[test]
fn comparison_shares_demands_and_conserves() {
    for seed in 0..4 {
        let cfg = small(seed, 25, 8, 60);
        let c = compare(&cfg).unwrap();
        assert_eq!(c.ebcd.demand_hash, c.baseline.demand_hash);
        assert_eq!(c.ebcd.bits_sampled, c.baseline.bits_sampled);
        check_invariants(&c.ebcd, 48);
        check_invariants(&c.baseline, 48);
        let s = savings_percent(c.baseline.mean_energy_per_frame_mj, c.ebcd.mean_energy_per_frame_mj);
        assert_eq!(c.savings_percent, s);
    }
}

#[test]
fn saturated_runs_conserve() {
    // 100 MSs overflow the frame, so queues build up.
    let r = run(&small(5, 100, 10, 30), Algorithm::Dijkstra).unwrap();
    assert!(r.bits_queued > 0);
    check_invariants(&r, 48);
}

#[test]
fn direct_only_network_has_no_savings() {
    let c = compare(&small(2, 15, 0, 40)).unwrap();
    assert_eq!(c.ebcd.routes, c.baseline.routes);
    assert_eq!(c.savings_percent, 0.0);
}

#[test]
fn savings_sign_flips_with_roles() {
    for (a, b) in [(10.0, 8.0), (3.0, 4.5), (7.0, 7.0)] {
        let s = savings_percent(a, b);
        let t = savings_percent(b, a);
        assert!(s * t <= 0.0);
        assert_eq!(s > 0.0, b < a);
    }
    assert_eq!(savings_percent(0.0, 5.0), 0.0);
}

#[test]
fn re_routing_conserves() {
    let cfg = SimConfig { re_route_interval: 10, ..small(8, 20, 6, 40) };
    let fixed = run(&SimConfig { re_route_interval: 0, ..cfg.clone() }, Algorithm::Ebcd).unwrap();
    let r = run(&cfg, Algorithm::Ebcd).unwrap();
    check_invariants(&r, 48);
    assert_eq!(r.demand_hash, fixed.demand_hash);
}

#[test]
fn power_cap_can_be_fatal() {
    let mut cfg = small(4, 30, 5, 20);
    cfg.fitness.power_cap_fallback = false;
    cfg.channel.noise_density_dbm_per_hz = -100.0;
    let e = run(&cfg, Algorithm::Dijkstra).unwrap_err();
    assert!(matches!(e, SimError::PowerCapExceeded { frame: 0 }));
}

#[test]
fn prepared_is_shared() {
    let cfg = small(6, 12, 4, 10);
    let p = Prepared::new(&cfg).unwrap();
    let a = p.run(&cfg, Algorithm::Dijkstra).unwrap();
    let b = run(&cfg, Algorithm::Dijkstra).unwrap();
    assert!(a.same_outcome(&b));
}

//! Precomputed radio state for a topology and the two-pass interference
//! resolution shared by the optimizer and the frame simulator.
//!
//! Pass 1 resolves every link in isolation (I = 0). Pass 2 takes a set of
//! concurrently active transmissions, sums their pass-1 received powers at
//! each receiver and re-resolves each hop against that interference. There
//! is no further iteration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{db_to_linear, sui_path_loss_db, ChannelConfig, ChannelError, McsTable};
use crate::energy::{HopClass, ResolvedHop};
use crate::rng::keyed_seed;
use crate::topology::{StationId, Topology};

#[derive(Debug, Clone)]
pub struct LinkRadio {
    pub from: StationId,
    pub to: StationId,
    pub class: HopClass,
    pub bandwidth_hz: f64,
    pub noise_mw: f64,
    pub path_loss_db: f64,
    /// `G_tx·G_rx / L`.
    pub gain_over_loss: f64,
    pub tx_power_max_mw: f64,
    /// Interference-free resolution.
    pub isolated: ResolvedHop,
}

#[derive(Debug, Clone)]
pub struct RadioMap {
    table: McsTable,
    n_stations: usize,
    rx_slot: Vec<Option<usize>>,
    n_receivers: usize,
    /// `[tx * n_receivers + rx_slot]` → `G_tx·G_rx / L(tx, rx)`; zero on the
    /// diagonal.
    gain_over_loss: Vec<f64>,
    links: Vec<LinkRadio>,
}

impl RadioMap {
    /// Path loss between arbitrary station pairs uses SUI with the taller
    /// antenna as the base and distance clamped to the reference distance.
    /// With shadowing enabled, each unordered pair gets one lognormal draw
    /// keyed by `shadow_seed`.
    pub fn new(
        topo: &Topology,
        cc: &ChannelConfig,
        table: &McsTable,
        shadow_seed: u64,
    ) -> Result<Self, ChannelError> {
        let stations = topo.stations();
        let n = stations.len();
        let mut rx_slot = vec![None; n];
        let mut n_receivers = 0;
        for s in stations {
            if s.kind.is_receiver() {
                rx_slot[s.id.index()] = Some(n_receivers);
                n_receivers += 1;
            }
        }
        let shadow = if cc.shadowing_enabled && cc.shadowing_sigma_db > 0.0 {
            Some(Normal::new(0.0, cc.shadowing_sigma_db).expect("sigma > 0"))
        } else {
            None
        };
        let pair_loss_db = |a: usize, b: usize, d: f64| -> Result<f64, ChannelError> {
            let (ha, hb) = (stations[a].antenna_height_m, stations[b].antenna_height_m);
            let mut pl = sui_path_loss_db(cc, d.max(cc.reference_dist_m), ha.max(hb), ha.min(hb))?;
            if let Some(normal) = &shadow {
                let key = (a.min(b) as u64) * n as u64 + a.max(b) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(keyed_seed(shadow_seed, key));
                pl += normal.sample(&mut rng);
            }
            Ok(pl)
        };

        let gains: Vec<f64> = stations.iter().map(|s| db_to_linear(s.antenna_gain_db)).collect();
        let mut gain_over_loss = vec![0.0; n * n_receivers];
        for (tx, s_tx) in stations.iter().enumerate() {
            for (rx, s_rx) in stations.iter().enumerate() {
                let Some(slot) = rx_slot[rx] else { continue };
                if tx == rx {
                    continue;
                }
                let d = s_tx.position.distance(&s_rx.position);
                let pl = pair_loss_db(tx, rx, d)?;
                gain_over_loss[tx * n_receivers + slot] = gains[tx] * gains[rx] / db_to_linear(pl);
            }
        }

        let noise_density = cc.noise_density_mw_per_hz();
        let mut links = Vec::with_capacity(topo.links().len());
        for l in topo.links() {
            let (a, b) = (l.from.index(), l.to.index());
            let pl = pair_loss_db(a, b, l.distance_m)?;
            let gol = gains[a] * gains[b] / db_to_linear(pl);
            let mut radio = LinkRadio {
                from: l.from,
                to: l.to,
                class: HopClass::of(stations[a].kind, stations[b].kind),
                bandwidth_hz: l.bandwidth_hz,
                noise_mw: l.bandwidth_hz * noise_density,
                path_loss_db: pl,
                gain_over_loss: gol,
                tx_power_max_mw: stations[a].tx_power_max_mw,
                isolated: ResolvedHop {
                    from: l.from,
                    to: l.to,
                    class: HopClass::Mr,
                    bandwidth_hz: l.bandwidth_hz,
                    level: *table.lowest(),
                    tx_power_mw: 0.0,
                    rx_power_mw: 0.0,
                    capped: false,
                },
            };
            radio.isolated = resolve_link(table, &radio, 0.0);
            links.push(radio);
        }
        Ok(RadioMap {
            table: table.clone(),
            n_stations: n,
            rx_slot,
            n_receivers,
            gain_over_loss,
            links,
        })
    }

    pub fn table(&self) -> &McsTable {
        &self.table
    }

    pub fn links(&self) -> &[LinkRadio] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> &LinkRadio {
        &self.links[idx]
    }

    /// `G_tx·G_rx / L` between arbitrary stations (rx must be a BS or RS).
    pub fn pair_gain_over_loss(&self, tx: StationId, rx: StationId) -> f64 {
        match self.rx_slot[rx.index()] {
            Some(slot) => self.gain_over_loss[tx.index() * self.n_receivers + slot],
            None => 0.0,
        }
    }

    /// Re-resolve a link against a given interference level.
    pub fn resolve(&self, link_idx: usize, interference_mw: f64) -> ResolvedHop {
        resolve_link(&self.table, &self.links[link_idx], interference_mw)
    }
}

fn resolve_link(table: &McsTable, link: &LinkRadio, interference_mw: f64) -> ResolvedHop {
    let n_plus_i = link.noise_mw + interference_mw;
    let max_snr = link.tx_power_max_mw * link.gain_over_loss / n_plus_i;
    let (pos, tx_power_mw, capped) = match table.highest_within(max_snr) {
        Some(pos) => (pos, table.threshold_linear(pos) * n_plus_i / link.gain_over_loss, false),
        None => (0, link.tx_power_max_mw, true),
    };
    ResolvedHop {
        from: link.from,
        to: link.to,
        class: link.class,
        bandwidth_hz: link.bandwidth_hz,
        level: table.levels()[pos],
        tx_power_mw,
        rx_power_mw: tx_power_mw * link.gain_over_loss,
        capped,
    }
}

/// Scratch space for interference sums over one set of active
/// transmissions. Reusable across evaluations.
#[derive(Debug, Clone)]
pub struct InterferenceField {
    n_receivers: usize,
    /// `[tx * n_receivers + slot]`: pass-1 power received at `slot` from all
    /// transmissions of station `tx`.
    per_tx: Vec<f64>,
    total: Vec<f64>,
    touched: Vec<usize>,
    is_touched: Vec<bool>,
}

impl InterferenceField {
    pub fn new(radio: &RadioMap) -> Self {
        InterferenceField {
            n_receivers: radio.n_receivers,
            per_tx: vec![0.0; radio.n_stations * radio.n_receivers],
            total: vec![0.0; radio.n_receivers],
            touched: Vec::new(),
            is_touched: vec![false; radio.n_stations],
        }
    }

    fn clear(&mut self) {
        for &tx in &self.touched {
            self.per_tx[tx * self.n_receivers..(tx + 1) * self.n_receivers].fill(0.0);
            self.is_touched[tx] = false;
        }
        self.touched.clear();
        self.total.fill(0.0);
    }

    /// Rebuild the field from active routes given as link-index lists.
    /// Accumulation follows the iteration order, so callers pass routes in a
    /// canonical order to get reproducible sums.
    pub fn build<'r>(&mut self, radio: &RadioMap, routes: impl IntoIterator<Item = &'r [usize]>) {
        self.clear();
        let r = self.n_receivers;
        for links in routes {
            for &li in links {
                let link = &radio.links[li];
                let tx = link.from.index();
                if !self.is_touched[tx] {
                    self.is_touched[tx] = true;
                    self.touched.push(tx);
                }
                let p = link.isolated.tx_power_mw;
                let gol = &radio.gain_over_loss[tx * r..(tx + 1) * r];
                let row = &mut self.per_tx[tx * r..(tx + 1) * r];
                for slot in 0..r {
                    let c = p * gol[slot];
                    row[slot] += c;
                    self.total[slot] += c;
                }
            }
        }
    }

    /// Interference at the receiver of `link_idx` from every active
    /// transmitter other than the link's own transmitter.
    pub fn interference_for(&self, radio: &RadioMap, link_idx: usize) -> f64 {
        let link = &radio.links[link_idx];
        let slot = radio.rx_slot[link.to.index()].expect("links end at receivers");
        let own = self.per_tx[link.from.index() * self.n_receivers + slot];
        (self.total[slot] - own).max(0.0)
    }

    /// Pass-2 resolution of one hop.
    pub fn resolve(&self, radio: &RadioMap, link_idx: usize) -> ResolvedHop {
        radio.resolve(link_idx, self.interference_for(radio, link_idx))
    }
}

/// One extra route layered over a built [`InterferenceField`], for scoring
/// many alternatives against the same background without rebuilding it.
/// Sums differ from a full rebuild only by rounding order.
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    total: Vec<f64>,
    /// `(tx, row)` for each transmitter of the extra route.
    rows: Vec<(usize, Vec<f64>)>,
    n_rows: usize,
}

impl Overlay {
    pub fn set(&mut self, radio: &RadioMap, links: &[usize]) {
        let r = radio.n_receivers;
        self.total.clear();
        self.total.resize(r, 0.0);
        self.n_rows = 0;
        for &li in links {
            let link = &radio.links[li];
            let tx = link.from.index();
            let k = match self.rows[..self.n_rows].iter().position(|(t, _)| *t == tx) {
                Some(k) => k,
                None => {
                    if self.n_rows == self.rows.len() {
                        self.rows.push((tx, Vec::new()));
                    }
                    let row = &mut self.rows[self.n_rows];
                    row.0 = tx;
                    row.1.clear();
                    row.1.resize(r, 0.0);
                    self.n_rows += 1;
                    self.n_rows - 1
                }
            };
            let p = link.isolated.tx_power_mw;
            let gol = &radio.gain_over_loss[tx * r..(tx + 1) * r];
            let row = &mut self.rows[k].1;
            for slot in 0..r {
                let c = p * gol[slot];
                row[slot] += c;
                self.total[slot] += c;
            }
        }
    }

    pub fn resolve(&self, field: &InterferenceField, radio: &RadioMap, link_idx: usize) -> ResolvedHop {
        let link = &radio.links[link_idx];
        let slot = radio.rx_slot[link.to.index()].expect("links end at receivers");
        let tx = link.from.index();
        let mut own = field.per_tx[tx * field.n_receivers + slot];
        if let Some((_, row)) = self.rows[..self.n_rows].iter().find(|(t, _)| *t == tx) {
            own += row[slot];
        }
        let total = field.total[slot] + self.total[slot];
        radio.resolve(link_idx, (total - own).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{received_power_mw, sui_path_loss_db};
    use crate::topology::fixtures::*;
    use crate::topology::StationKind::*;

    fn small() -> Topology {
        let st = vec![
            station(0, BaseStation, 0.0, 0.0),
            station(1, NonTransparentRs, 600.0, 0.0),
            station(2, MobileStation, 900.0, 300.0),
            station(3, MobileStation, 1000.0, -200.0),
            station(4, MobileStation, 700.0, 500.0),
        ];
        let links = all_links(&st).into_iter().filter(|l| l.distance_m >= 200.0).collect();
        Topology::from_parts(st, links, 3, 2000.0, 256).unwrap()
    }

    #[test]
    fn isolated_resolution_meets_threshold_or_caps() {
        let t = small();
        let cc = ChannelConfig::default();
        let radio = RadioMap::new(&t, &cc, &McsTable::default(), 0).unwrap();
        for l in radio.links() {
            let h = l.isolated;
            if h.capped {
                assert_eq!(h.tx_power_mw, l.tx_power_max_mw);
                assert_eq!(h.level.index, 1);
            } else {
                assert!(h.tx_power_mw <= l.tx_power_max_mw * (1.0 + 1e-12));
                let snr = h.rx_power_mw / l.noise_mw;
                let want = h.level.snr_threshold_linear();
                assert!((snr - want).abs() / want < 1e-9);
            }
        }
    }

    #[test]
    fn interference_sums_other_transmitters() {
        // Three MSs all sending to RS 1: each sees the other two.
        let t = small();
        let cc = ChannelConfig::default();
        let radio = RadioMap::new(&t, &cc, &McsTable::default(), 0).unwrap();
        let l = |a: u32, b: u32| t.link_index(StationId(a), StationId(b)).unwrap();
        let routes = [vec![l(2, 1)], vec![l(3, 1)], vec![l(4, 1)]];
        let mut field = InterferenceField::new(&radio);
        field.build(&radio, routes.iter().map(Vec::as_slice));

        // Oracle straight from the formulas.
        let rx_power_at_1 = |ms: u32| {
            let s = t.station(StationId(ms));
            let r = t.station(StationId(1));
            let pl = sui_path_loss_db(&cc, s.position.distance(&r.position), 10.0, 2.0).unwrap();
            let p = radio.link(l(ms, 1)).isolated.tx_power_mw;
            received_power_mw(p, db_to_linear(s.antenna_gain_db), db_to_linear(r.antenna_gain_db), db_to_linear(pl))
        };
        let want = rx_power_at_1(3) + rx_power_at_1(4);
        let got = field.interference_for(&radio, l(2, 1));
        assert!((got - want).abs() / want < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn lone_transmitter_sees_no_interference() {
        let t = small();
        let radio = RadioMap::new(&t, &ChannelConfig::default(), &McsTable::default(), 0).unwrap();
        let li = t.link_index(StationId(2), StationId(1)).unwrap();
        let mut field = InterferenceField::new(&radio);
        field.build(&radio, [vec![li].as_slice()]);
        assert_eq!(field.interference_for(&radio, li), 0.0);
        assert_eq!(field.resolve(&radio, li), radio.link(li).isolated);
    }

    #[test]
    fn shadowing_is_seeded_and_symmetric() {
        let t = small();
        let cc = ChannelConfig { shadowing_enabled: true, ..Default::default() };
        let a = RadioMap::new(&t, &cc, &McsTable::default(), 9).unwrap();
        let b = RadioMap::new(&t, &cc, &McsTable::default(), 9).unwrap();
        let c = RadioMap::new(&t, &cc, &McsTable::default(), 10).unwrap();
        let pl = |m: &RadioMap| m.links().iter().map(|l| l.path_loss_db).collect::<Vec<_>>();
        assert_eq!(pl(&a), pl(&b));
        assert_ne!(pl(&a), pl(&c));
        // Same pair in both directions shares its draw.
        let ab = t.link_index(StationId(1), StationId(0)).unwrap();
        let base = RadioMap::new(&t, &ChannelConfig::default(), &McsTable::default(), 9).unwrap();
        let shadow = a.link(ab).path_loss_db - base.link(ab).path_loss_db;
        let g = a.pair_gain_over_loss(StationId(1), StationId(0));
        let g0 = base.pair_gain_over_loss(StationId(1), StationId(0));
        assert!(((g0 / g).log10() * 10.0 - shadow).abs() < 1e-9);
    }
}

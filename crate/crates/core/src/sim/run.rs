use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::world::SLOTS_PER_COMMUNITY;
use super::{AccessPoint, ApKind, Owner, SimConfig, SimError, World};
use crate::geo::{PlaceId, Point, WeekIndex, SECONDS_PER_DAY};
use crate::records::{
    ApId, BuildingId, EventKind, GroundTruthEvent, HouseholdId, ScanObservation, ScannerId, SessionRecord,
    TerminalId, TradeRecord,
};
use crate::seeds;

const HOUR: i64 = 3600;
const N_SCANNERS: u32 = 5000;
/// Scanner position jitter around the scanned building.
const SCAN_JITTER_M: f64 = 15.0;
const SAME_BUILDING_DETECT: f64 = 0.95;
/// APs in other buildings up to this range are picked up occasionally.
const RADIO_RANGE_M: f64 = 120.0;
const NEIGHBOR_DETECT: f64 = 0.08;
const RSSI_BASE: f64 = 100.0;
const PATH_LOSS: f64 = 20.0;
const POCKET_WAYPOINTS: usize = 3;
const POCKET_SIGHTINGS_PER_WAYPOINT: usize = 2;

const NIGHT_SESSION_PROB: f64 = 0.45;
const CAR_CALL_PROB: f64 = 0.3;
const OFFICE_ATTENDANCE: f64 = 0.8;
const SHOP_ATTENDANCE: f64 = 0.9;
const POCKET_SESSION_PROB: f64 = 0.3;

const NO_PLACE: u32 = u32::MAX;

/// Logs produced by [`simulate`], plus the world as it stands after the last week.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub scans: Vec<ScanObservation>,
    pub sessions: Vec<SessionRecord>,
    pub trades: Vec<TradeRecord>,
    pub truth: Vec<GroundTruthEvent>,
    pub final_world: World,
    /// Community index of every fixed AP per week, `NO_PLACE` when absent.
    placements: Vec<Vec<u32>>,
}

impl SimOutput {
    pub fn weeks(&self) -> u32 {
        self.placements.len() as u32
    }

    pub fn events(&self, kind: EventKind) -> impl Iterator<Item = &GroundTruthEvent> {
        self.truth.iter().filter(move |e| e.kind == kind)
    }

    /// Community an AP actually sat in during `week`; `None` for pocket APs
    /// and for APs that did not exist yet.
    pub fn true_community(&self, ap: ApId, week: WeekIndex) -> Option<&PlaceId> {
        let idx = *self.placements.get(week.0 as usize)?.get(ap.0 as usize)?;
        (idx != NO_PLACE).then(|| &self.final_world.geography.communities()[idx as usize])
    }
}

struct Simulation<'a> {
    config: &'a SimConfig,
    world: World,
    /// APs installed in each building, kept sorted.
    occupants: Vec<Vec<ApId>>,
    /// Other buildings within radio range, with distances.
    neighbors: Vec<Vec<(BuildingId, f64)>>,
    rssi_noise: Normal<f64>,
    used_batches: HashSet<(u32, i64)>,
    out_scans: Vec<ScanObservation>,
    out_sessions: Vec<SessionRecord>,
    out_trades: Vec<TradeRecord>,
    out_truth: Vec<GroundTruthEvent>,
    /// Community of each pocket AP's first waypoint last week.
    pocket_last: Vec<Option<usize>>,
    placements: Vec<Vec<u32>>,
    moves_rng: ChaCha8Rng,
    company_rng: ChaCha8Rng,
    trade_rng: ChaCha8Rng,
    scan_rng: ChaCha8Rng,
    pocket_rng: ChaCha8Rng,
    session_rng: ChaCha8Rng,
}

/// Runs the world forward `config.weeks` weeks.
///
/// Relocations happen at the start of weeks `1..weeks`; week 0 is the
/// baseline. Within a week, households move first, then companies, then
/// trades, and finally scans and sessions are generated from the resulting
/// placement.
pub fn simulate(world: &World, config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    if config.weeks < 2 {
        return Err(SimError::TooFewWeeks(config.weeks));
    }
    let mut sim = Simulation::new(world.clone(), config);
    for w in 0..config.weeks {
        let week = WeekIndex(w);
        if w > 0 {
            sim.household_moves(week);
            sim.company_moves(week);
            sim.trades(week);
        }
        sim.record_placements();
        sim.scan_buildings(week);
        sim.scan_pockets(week);
        sim.sessions(week);
    }
    Ok(SimOutput {
        scans: sim.out_scans,
        sessions: sim.out_sessions,
        trades: sim.out_trades,
        truth: sim.out_truth,
        final_world: sim.world,
        placements: sim.placements,
    })
}

fn uniform_ts(rng: &mut ChaCha8Rng, day_start: i64, from_h: f64, to_h: f64) -> i64 {
    day_start + (rng.random_range(from_h..to_h) * HOUR as f64) as i64
}

impl<'a> Simulation<'a> {
    fn new(world: World, config: &'a SimConfig) -> Self {
        let mut occupants = vec![Vec::new(); world.buildings.len()];
        for ap in &world.access_points {
            if let Some(b) = ap.building {
                occupants[b.0 as usize].push(ap.id);
            }
        }
        let neighbors = building_neighbors(&world);
        let pocket_last = vec![None; world.access_points.len()];
        let seed = config.seed;
        Self {
            config,
            world,
            occupants,
            neighbors,
            rssi_noise: Normal::new(0.0, config.rssi_noise_sigma).expect("validated sigma"),
            used_batches: HashSet::new(),
            out_scans: Vec::new(),
            out_sessions: Vec::new(),
            out_trades: Vec::new(),
            out_truth: Vec::new(),
            pocket_last,
            placements: Vec::new(),
            moves_rng: seeds::stream(seed, "sim/moves"),
            company_rng: seeds::stream(seed, "sim/companies"),
            trade_rng: seeds::stream(seed, "sim/trades"),
            scan_rng: seeds::stream(seed, "sim/scans"),
            pocket_rng: seeds::stream(seed, "sim/pocket"),
            session_rng: seeds::stream(seed, "sim/sessions"),
        }
    }

    fn community_of_building(&self, b: BuildingId) -> usize {
        self.world.building(b).community
    }

    fn place(&self, community: usize) -> PlaceId {
        self.world.geography.communities()[community].clone()
    }

    fn relocate_ap(&mut self, ap: ApId, to: BuildingId) {
        let from = self.world.access_points[ap.0 as usize].building.replace(to);
        if let Some(from) = from {
            self.occupants[from.0 as usize].retain(|a| *a != ap);
        }
        let occ = &mut self.occupants[to.0 as usize];
        let pos = occ.binary_search(&ap).unwrap_or_else(|p| p);
        occ.insert(pos, ap);
    }

    fn record_placements(&mut self) {
        let row = self
            .world
            .access_points
            .iter()
            .map(|ap| {
                ap.building
                    .map(|b| self.community_of_building(b) as u32)
                    .unwrap_or(NO_PLACE)
            })
            .collect();
        self.placements.push(row);
    }

    /// Gravity choice of a destination community other than `origin`.
    fn destination_community(&mut self, origin: usize) -> usize {
        let geo = &self.world.geography;
        let here = geo.community_center(origin);
        let weights: Vec<f64> = (0..geo.communities().len())
            .map(|c| {
                if c == origin {
                    0.0
                } else {
                    let d = here.distance(&geo.community_center(c));
                    self.world.attractiveness[c] * (-d / self.config.gravity_length_m).exp()
                }
            })
            .collect();
        WeightedIndex::new(&weights)
            .expect("at least two communities with weight")
            .sample(&mut self.moves_rng)
    }

    fn household_moves(&mut self, week: WeekIndex) {
        let rate = self.config.move_rate_in_month(week.month().0);
        if self.world.geography.communities().len() < 2 {
            return;
        }
        for h in 0..self.world.households.len() {
            if !self.moves_rng.random_bool(rate) {
                continue;
            }
            let origin = self.community_of_building(self.world.households[h].home_building);
            let dest = self.destination_community(origin);
            let homes = &self.world.homes_by_community[dest];
            let building = homes[self.moves_rng.random_range(0..homes.len())];
            let household = &mut self.world.households[h];
            household.home_building = building;
            household.home_place = self.world.geography.communities()[dest].clone();
            let aps: Vec<ApId> = std::iter::once(household.home_ap)
                .chain(household.extra_aps.iter().copied())
                .collect();
            for ap in aps {
                self.relocate_ap(ap, building);
                self.out_truth.push(GroundTruthEvent {
                    kind: EventKind::HouseholdMove,
                    ap_id: ap,
                    week,
                    origin: self.place(origin),
                    destination: self.place(dest),
                });
            }
        }
    }

    fn company_moves(&mut self, week: WeekIndex) {
        for k in 0..self.world.companies.len() {
            if !self.company_rng.random_bool(self.config.company_move_rate) {
                continue;
            }
            let company = &self.world.companies[k];
            let origin = self.community_of_building(company.building);
            let pool = if company.shop { &self.world.mixtures } else { &self.world.offices };
            let candidates: Vec<BuildingId> = pool
                .iter()
                .copied()
                .filter(|b| self.community_of_building(*b) != origin)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let to = candidates[self.company_rng.random_range(0..candidates.len())];
            let dest = self.community_of_building(to);
            self.world.companies[k].building = to;
            for ap in self.world.companies[k].aps.clone() {
                self.relocate_ap(ap, to);
                self.out_truth.push(GroundTruthEvent {
                    kind: EventKind::CompanyMove,
                    ap_id: ap,
                    week,
                    origin: self.place(origin),
                    destination: self.place(dest),
                });
            }
        }
    }

    fn trades(&mut self, week: WeekIndex) {
        let p = self.config.trade_rate * self.config.household_move_rate;
        let n = self.world.households.len();
        if p == 0.0 || n < 2 {
            return;
        }
        for h in 0..n {
            if !self.trade_rng.random_bool(p) {
                continue;
            }
            let seller = HouseholdId(h as u32);
            let origin = self.community_of_building(self.world.households[h].home_building);
            // Buyers live elsewhere, otherwise the trade is invisible.
            let mut buyer = None;
            for _ in 0..32 {
                let b = self.trade_rng.random_range(0..n);
                let bc = self.community_of_building(self.world.households[b].home_building);
                if b != h && bc != origin {
                    buyer = Some(b);
                    break;
                }
            }
            let Some(b) = buyer else { continue };
            let ap = self.world.households[h].home_ap;
            let to = self.world.households[b].home_building;
            let dest = self.community_of_building(to);
            self.relocate_ap(ap, to);
            self.world.access_points[ap.0 as usize].owner = Owner::Household(HouseholdId(b as u32));
            self.world.households[b].extra_aps.push(ap);

            // the seller installs a new router at home
            let replacement = ApId(self.world.access_points.len() as u32);
            let violator = self.world.access_points[ap.0 as usize].violator;
            self.world.access_points.push(AccessPoint {
                id: replacement,
                kind: ApKind::Home,
                owner: Owner::Household(seller),
                building: None,
                violator,
            });
            self.pocket_last.push(None);
            let home = self.world.households[h].home_building;
            self.relocate_ap(replacement, home);
            self.world.households[h].home_ap = replacement;

            self.out_trades.push(TradeRecord {
                ap_id: ap,
                week,
                seller,
                buyer: HouseholdId(b as u32),
            });
            self.out_truth.push(GroundTruthEvent {
                kind: EventKind::Trade,
                ap_id: ap,
                week,
                origin: self.place(origin),
                destination: self.place(dest),
            });
        }
    }

    fn rssi(&mut self, distance: f64, noise_rng: bool) -> f64 {
        let base = (RSSI_BASE - PATH_LOSS * distance.max(1.0).log10()).max(0.0);
        let noise = if noise_rng {
            self.rssi_noise.sample(&mut self.scan_rng)
        } else {
            self.rssi_noise.sample(&mut self.pocket_rng)
        };
        (base + noise).clamp(self.config.rssi_min, self.config.rssi_max)
    }

    fn new_batch(&mut self, week: WeekIndex, pocket: bool) -> (ScannerId, i64) {
        let rng = if pocket { &mut self.pocket_rng } else { &mut self.scan_rng };
        loop {
            let scanner = rng.random_range(0..N_SCANNERS);
            let ts = week.start_ts() + rng.random_range(0..crate::geo::SECONDS_PER_WEEK);
            if self.used_batches.insert((scanner, ts)) {
                return (ScannerId(scanner), ts);
            }
        }
    }

    fn scan_buildings(&mut self, week: WeekIndex) {
        let bounds = self.world.geography.bounds();
        for b in 0..self.world.buildings.len() {
            if self.occupants[b].is_empty() {
                continue;
            }
            let site = self.world.buildings[b].location;
            for _ in 0..self.config.scan_density {
                let (scanner_id, timestamp) = self.new_batch(week, false);
                let at = Point::new(
                    site.x + self.scan_rng.random_range(-SCAN_JITTER_M..SCAN_JITTER_M),
                    site.y + self.scan_rng.random_range(-SCAN_JITTER_M..SCAN_JITTER_M),
                );
                if !bounds.contains(&at) {
                    continue;
                }
                let mut seen: Vec<(ApId, f64)> = Vec::new();
                for i in 0..self.occupants[b].len() {
                    if self.scan_rng.random_bool(SAME_BUILDING_DETECT) {
                        let ap = self.occupants[b][i];
                        let rssi = self.rssi(at.distance(&site), true);
                        seen.push((ap, rssi));
                    }
                }
                for n in 0..self.neighbors[b].len() {
                    let (nb, _) = self.neighbors[b][n];
                    let nsite = self.world.buildings[nb.0 as usize].location;
                    for i in 0..self.occupants[nb.0 as usize].len() {
                        if self.scan_rng.random_bool(NEIGHBOR_DETECT) {
                            let ap = self.occupants[nb.0 as usize][i];
                            let rssi = self.rssi(at.distance(&nsite), true);
                            seen.push((ap, rssi));
                        }
                    }
                }
                for (ap_id, rssi) in seen {
                    self.out_scans.push(ScanObservation {
                        scanner_id,
                        timestamp,
                        x: at.x,
                        y: at.y,
                        ap_id,
                        rssi,
                    });
                }
            }
        }
    }

    fn random_point(&mut self) -> Point {
        let b = self.world.geography.bounds();
        Point::new(
            self.pocket_rng.random_range(0.0..b.width_m),
            self.pocket_rng.random_range(0.0..b.height_m),
        )
    }

    /// Waypoints pairwise at least `pocket_spread_m` apart, best effort.
    fn pocket_waypoints(&mut self) -> Vec<Point> {
        let spread = self.config.pocket_spread_m;
        let mut best: Vec<Point> = Vec::new();
        for _ in 0..200 {
            let mut pts = vec![self.random_point()];
            while pts.len() < POCKET_WAYPOINTS {
                let mut placed = false;
                for _ in 0..50 {
                    let p = self.random_point();
                    if pts.iter().all(|q| q.distance(&p) >= spread) {
                        pts.push(p);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    break;
                }
            }
            if pts.len() == POCKET_WAYPOINTS {
                return pts;
            }
            if pts.len() > best.len() {
                best = pts;
            }
        }
        while best.len() < POCKET_WAYPOINTS {
            let p = self.random_point();
            best.push(p);
        }
        best
    }

    fn scan_pockets(&mut self, week: WeekIndex) {
        let pockets: Vec<ApId> = self
            .world
            .households
            .iter()
            .filter_map(|h| h.pocket_ap)
            .collect();
        for ap in pockets {
            let waypoints = self.pocket_waypoints();
            for wp in &waypoints {
                for _ in 0..POCKET_SIGHTINGS_PER_WAYPOINT {
                    let (scanner_id, timestamp) = self.new_batch(week, true);
                    let rssi = self.rssi(5.0, false);
                    self.out_scans.push(ScanObservation {
                        scanner_id,
                        timestamp,
                        x: wp.x,
                        y: wp.y,
                        ap_id: ap,
                        rssi,
                    });
                }
            }
            let here = self
                .world
                .geography
                .community_index_at(&waypoints[0])
                .expect("waypoints lie inside the world");
            if let Some(prev) = self.pocket_last[ap.0 as usize] {
                self.out_truth.push(GroundTruthEvent {
                    kind: EventKind::PocketNoise,
                    ap_id: ap,
                    week,
                    origin: self.place(prev),
                    destination: self.place(here),
                });
            }
            self.pocket_last[ap.0 as usize] = Some(here);
        }
    }

    fn night_session(&mut self, terminal: TerminalId, ap: ApId, day_start: i64) {
        let rng = &mut self.session_rng;
        let connect = uniform_ts(rng, day_start, 18.0, 23.5);
        let disconnect = uniform_ts(rng, day_start + SECONDS_PER_DAY, 6.5, 9.0);
        let car_call_ts = (connect - day_start >= 21 * HOUR && rng.random_bool(CAR_CALL_PROB))
            .then(|| connect + rng.random_range(0..600));
        self.out_sessions.push(SessionRecord {
            terminal_id: terminal,
            ap_id: ap,
            connect_ts: connect,
            disconnect_ts: disconnect,
            car_call_ts,
        });
    }

    fn day_session(&mut self, terminal: TerminalId, ap: ApId, day_start: i64) {
        let rng = &mut self.session_rng;
        let connect = uniform_ts(rng, day_start, 8.5, 10.5);
        let disconnect = uniform_ts(rng, day_start, 17.0, 20.0);
        self.out_sessions.push(SessionRecord {
            terminal_id: terminal,
            ap_id: ap,
            connect_ts: connect,
            disconnect_ts: disconnect,
            car_call_ts: None,
        });
    }

    fn sessions(&mut self, week: WeekIndex) {
        for day in 0..7i64 {
            let day_start = week.start_ts() + day * SECONDS_PER_DAY;
            let weekday = day < 5;
            for h in 0..self.world.households.len() {
                let ap = self.world.households[h].home_ap;
                let violator = self.world.access_points[ap.0 as usize].violator;
                for t in 0..self.world.households[h].terminals.len() {
                    let terminal = self.world.households[h].terminals[t];
                    if violator {
                        if weekday && self.session_rng.random_bool(OFFICE_ATTENDANCE) {
                            self.day_session(terminal, ap, day_start);
                        }
                    } else if self.session_rng.random_bool(NIGHT_SESSION_PROB) {
                        self.night_session(terminal, ap, day_start);
                    }
                }
                if let Some(pocket) = self.world.households[h].pocket_ap {
                    if self.session_rng.random_bool(POCKET_SESSION_PROB) {
                        let terminal = self.world.households[h].terminals[0];
                        let connect = uniform_ts(&mut self.session_rng, day_start, 12.0, 16.0);
                        let minutes = self.session_rng.random_range(20..90);
                        self.out_sessions.push(SessionRecord {
                            terminal_id: terminal,
                            ap_id: pocket,
                            connect_ts: connect,
                            disconnect_ts: connect + minutes * 60,
                            car_call_ts: None,
                        });
                    }
                }
            }
            for k in 0..self.world.companies.len() {
                let shop = self.world.companies[k].shop;
                for i in 0..self.world.companies[k].aps.len() {
                    let ap = self.world.companies[k].aps[i];
                    let violator = self.world.access_points[ap.0 as usize].violator;
                    for s in 0..self.world.companies[k].staff[i].len() {
                        let terminal = self.world.companies[k].staff[i][s];
                        if violator {
                            if self.session_rng.random_bool(NIGHT_SESSION_PROB) {
                                self.night_session(terminal, ap, day_start);
                            }
                        } else if shop {
                            if self.session_rng.random_bool(SHOP_ATTENDANCE) {
                                let rng = &mut self.session_rng;
                                let connect = uniform_ts(rng, day_start, 9.0, 11.0);
                                let disconnect = uniform_ts(rng, day_start, 20.0, 22.0);
                                self.out_sessions.push(SessionRecord {
                                    terminal_id: terminal,
                                    ap_id: ap,
                                    connect_ts: connect,
                                    disconnect_ts: disconnect,
                                    car_call_ts: None,
                                });
                            }
                        } else if weekday && self.session_rng.random_bool(OFFICE_ATTENDANCE) {
                            self.day_session(terminal, ap, day_start);
                        }
                    }
                }
            }
        }
    }
}

/// Buildings within radio range of each other, found through the slot lattice.
fn building_neighbors(world: &World) -> Vec<Vec<(BuildingId, f64)>> {
    let slot = world.geography.layout.community_size_m / SLOTS_PER_COMMUNITY as f64;
    let bounds = world.geography.bounds();
    let cols = (bounds.width_m / slot).round() as i64;
    let rows = (bounds.height_m / slot).round() as i64;
    let mut grid: Vec<Option<BuildingId>> = vec![None; (cols * rows) as usize];
    let slot_of = |p: &Point| ((p.x / slot).floor() as i64, (p.y / slot).floor() as i64);
    for b in &world.buildings {
        let (sx, sy) = slot_of(&b.location);
        grid[(sy * cols + sx) as usize] = Some(b.id);
    }
    let reach = (RADIO_RANGE_M / slot).ceil() as i64;
    world
        .buildings
        .iter()
        .map(|b| {
            let (sx, sy) = slot_of(&b.location);
            let mut out = Vec::new();
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (x, y) = (sx + dx, sy + dy);
                    if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= cols || y >= rows {
                        continue;
                    }
                    if let Some(other) = grid[(y * cols + x) as usize] {
                        let d = b.location.distance(&world.building(other).location);
                        if d <= RADIO_RANGE_M {
                            out.push((other, d));
                        }
                    }
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{time_of_day, week_of};
    use crate::sim::generate_world;

    fn config(n: usize, weeks: u32) -> SimConfig {
        SimConfig {
            n_households: n,
            n_companies: n / 20,
            weeks,
            ..SimConfig::default()
        }
    }

    fn run(cfg: &SimConfig) -> SimOutput {
        let world = generate_world(cfg).unwrap();
        simulate(&world, cfg).unwrap()
    }

    #[test]
    fn move_count_matches_binomial() {
        // moves start in week 1, so 10 weeks give 9 opportunities per household
        let seeds = 0..5u64;
        let mut moves = 0.0;
        for seed in seeds.clone() {
            let cfg = SimConfig { seed, trade_rate: 0.0, ..config(1000, 10) };
            moves += run(&cfg).events(EventKind::HouseholdMove).count() as f64;
        }
        let (n, p): (f64, f64) = (seeds.count() as f64 * 9_000.0, 0.01);
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((moves - n * p).abs() <= 3.0 * sigma, "moves = {moves}");
    }

    #[test]
    fn zero_rates_produce_no_events() {
        let cfg = SimConfig {
            household_move_rate: 0.0,
            pocket_ap_fraction: 0.0,
            ..config(500, 3)
        };
        let out = run(&cfg);
        assert_eq!(out.events(EventKind::HouseholdMove).count(), 0);
        assert_eq!(out.events(EventKind::PocketNoise).count(), 0);
        assert_eq!(out.events(EventKind::Trade).count(), 0);
    }

    #[test]
    fn identical_config_identical_logs() {
        let cfg = config(300, 3);
        let a = run(&cfg);
        let b = run(&cfg);
        assert_eq!(a.scans, b.scans);
        assert_eq!(a.sessions, b.sessions);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.trades, b.trades);
    }

    #[test]
    fn relocation_events_change_community() {
        let cfg = SimConfig { company_move_rate: 0.1, trade_rate: 0.5, ..config(800, 6) };
        let out = run(&cfg);
        assert!(out.events(EventKind::Trade).count() > 0);
        for e in out.truth.iter().filter(|e| e.kind != EventKind::PocketNoise) {
            assert_ne!(e.origin, e.destination, "{e:?}");
        }
    }

    #[test]
    fn moved_aps_are_observed_at_destination() {
        let out = run(&config(1000, 6));
        let geo = &out.final_world.geography;
        for e in out.events(EventKind::HouseholdMove) {
            let seen = out.scans.iter().any(|s| {
                s.ap_id == e.ap_id
                    && week_of(s.timestamp) >= e.week
                    && geo.community_at(&s.location()).unwrap() == &e.destination
            });
            assert!(seen, "{e:?} never observed at destination");
        }
    }

    #[test]
    fn home_sessions_follow_evening_schedule() {
        let cfg = config(1000, 2);
        let out = run(&cfg);
        let world = &out.final_world;
        let home: Vec<_> = out
            .sessions
            .iter()
            .filter(|s| world.ap(s.ap_id).kind == ApKind::Home)
            .collect();
        let evening = home.iter().filter(|s| time_of_day(s.connect_ts) >= 18 * HOUR).count();
        assert!(evening as f64 / home.len() as f64 >= 0.9);
        for s in &out.sessions {
            assert!(s.connect_ts < s.disconnect_ts);
            if let Some(c) = s.car_call_ts {
                assert!(s.connect_ts <= c && c <= s.disconnect_ts);
            }
        }
    }

    #[test]
    fn scans_stay_in_bounds_and_range() {
        let cfg = config(300, 2);
        let out = run(&cfg);
        let bounds = out.final_world.geography.bounds();
        for s in &out.scans {
            assert!(bounds.contains(&s.location()));
            assert!((cfg.rssi_min..=cfg.rssi_max).contains(&s.rssi));
        }
    }

    #[test]
    fn pocket_aps_spread_each_week() {
        let cfg = SimConfig { pocket_ap_fraction: 0.1, ..config(300, 2) };
        let out = run(&cfg);
        let pockets: Vec<ApId> = out.final_world.households.iter().filter_map(|h| h.pocket_ap).collect();
        assert!(!pockets.is_empty());
        for ap in pockets {
            let pts: Vec<Point> = out
                .scans
                .iter()
                .filter(|s| s.ap_id == ap && week_of(s.timestamp) == WeekIndex(1))
                .map(|s| s.location())
                .collect();
            let far = pts.iter().enumerate().any(|(i, a)| {
                pts[i + 1..].iter().any(|b| a.distance(b) >= cfg.pocket_spread_m)
            });
            assert!(far);
        }
        assert!(out.events(EventKind::PocketNoise).count() > 0);
    }

    #[test]
    fn too_few_weeks_rejected() {
        let cfg = config(100, 1);
        let world = generate_world(&cfg).unwrap();
        assert_eq!(simulate(&world, &cfg).unwrap_err(), SimError::TooFewWeeks(1));
    }

    #[test]
    fn true_community_tracks_moves() {
        let out = run(&config(500, 5));
        for e in out.events(EventKind::HouseholdMove) {
            assert_eq!(out.true_community(e.ap_id, e.week), Some(&e.destination));
            assert_eq!(out.true_community(e.ap_id, WeekIndex(e.week.0 - 1)), Some(&e.origin));
        }
    }
}

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{SimConfig, SimError};
use crate::geo::{Geography, PlaceId, Point, Scale};
use crate::records::{ApId, BuildingId, BuildingRecord, CompanyId, HouseholdId, PropertyDist, TerminalId};
use crate::seeds;

/// Building sites per community along each axis.
pub(crate) const SLOTS_PER_COMMUNITY: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildingKind {
    Office,
    Residential,
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub id: BuildingId,
    pub location: Point,
    pub kind: BuildingKind,
    /// What reverse geocoding reports: office, residential, mixture, uncertain.
    pub property_dist: PropertyDist,
    /// Index into [`Geography::communities`].
    pub community: usize,
}

impl Building {
    pub fn record(&self) -> BuildingRecord {
        let [p_office, p_residential, p_mixture, p_uncertain] = self.property_dist;
        BuildingRecord {
            building_id: self.id,
            x: self.location.x,
            y: self.location.y,
            p_office,
            p_residential,
            p_mixture,
            p_uncertain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApKind {
    Home,
    Office,
    Pocket,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Household(HouseholdId),
    Company(CompanyId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessPoint {
    pub id: ApId,
    pub kind: ApKind,
    pub owner: Owner,
    /// `None` for pocket APs.
    pub building: Option<BuildingId>,
    /// Sessions on this AP follow the opposite diurnal schedule.
    pub violator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Household {
    pub id: HouseholdId,
    pub terminals: Vec<TerminalId>,
    pub home_building: BuildingId,
    pub home_place: PlaceId,
    pub home_ap: ApId,
    /// Home APs bought second-hand; they sit in the home building too.
    pub extra_aps: Vec<ApId>,
    pub pocket_ap: Option<ApId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Company {
    pub id: CompanyId,
    pub building: BuildingId,
    pub shop: bool,
    pub aps: Vec<ApId>,
    /// Terminals of the staff, grouped by the AP they use.
    pub staff: Vec<Vec<TerminalId>>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub geography: Geography,
    pub buildings: Vec<Building>,
    pub households: Vec<Household>,
    pub companies: Vec<Company>,
    /// Indexed by `ApId`.
    pub access_points: Vec<AccessPoint>,
    /// Relative residential population weight of each community.
    pub population: Vec<f64>,
    /// Relative pull of each community as a move destination.
    pub attractiveness: Vec<f64>,
    /// Residential and mixture buildings per community.
    pub(crate) homes_by_community: Vec<Vec<BuildingId>>,
    pub(crate) offices: Vec<BuildingId>,
    pub(crate) mixtures: Vec<BuildingId>,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.buildings == other.buildings
            && self.households == other.households
            && self.companies == other.companies
            && self.access_points == other.access_points
            && self.population == other.population
            && self.attractiveness == other.attractiveness
    }
}

impl World {
    pub fn ap(&self, id: ApId) -> &AccessPoint {
        &self.access_points[id.0 as usize]
    }

    pub fn building(&self, id: BuildingId) -> &Building {
        &self.buildings[id.0 as usize]
    }

    pub fn building_records(&self) -> Vec<BuildingRecord> {
        self.buildings.iter().map(Building::record).collect()
    }

    /// Community currently holding a fixed AP.
    pub fn ap_community(&self, id: ApId) -> Option<&PlaceId> {
        self.ap(id)
            .building
            .map(|b| &self.geography.communities()[self.building(b).community])
    }

    /// Whether the AP is installed in a home. This is the classifier's target.
    pub fn is_residential(&self, id: ApId) -> bool {
        self.ap(id).kind == ApKind::Home
    }
}

fn zipf_weights(rng: &mut ChaCha8Rng, n: usize, exponent: f64) -> Vec<f64> {
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    ranks
        .into_iter()
        .map(|r| 1.0 / ((r + 1) as f64).powf(exponent))
        .collect()
}

fn property_dist(rng: &mut ChaCha8Rng, kind: BuildingKind) -> PropertyDist {
    let base = match kind {
        BuildingKind::Office => [0.70, 0.05, 0.12, 0.08],
        BuildingKind::Residential => [0.05, 0.70, 0.12, 0.08],
        BuildingKind::Mixture => [0.22, 0.22, 0.40, 0.10],
    };
    let mut dist = base.map(|b| b + rng.random_range(0.0..0.35));
    let sum: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|p| *p /= sum);
    dist
}

/// Builds the initial world. Deterministic in `config.seed`.
pub fn generate_world(config: &SimConfig) -> Result<World, SimError> {
    config.validate()?;
    let mut rng = seeds::stream(config.seed, "world");
    let geography = Geography::new(config.layout.clone())?;
    let n_comm = geography.communities().len();

    // Population and attractiveness vary by city (heavy-tailed) and by community.
    let cities: Vec<PlaceId> = geography.hierarchy.places(Scale::City).cloned().collect();
    let city_pop = zipf_weights(&mut rng, cities.len(), 0.7);
    let city_attr = zipf_weights(&mut rng, cities.len(), 1.1);
    let mut population = Vec::with_capacity(n_comm);
    let mut attractiveness = Vec::with_capacity(n_comm);
    for community in geography.communities() {
        let city = geography.resolve_scale(community, Scale::City)?;
        let ci = cities.binary_search(&city).expect("city listed");
        population.push(city_pop[ci] * rng.random_range(0.5..1.5));
        attractiveness.push(city_attr[ci] * rng.random_range(0.5..1.5));
    }

    // Free building slots per community, in random order.
    let slots_per_comm = (SLOTS_PER_COMMUNITY * SLOTS_PER_COMMUNITY) as usize;
    let slot_size = config.layout.community_size_m / SLOTS_PER_COMMUNITY as f64;
    let mut free_slots: Vec<Vec<u32>> = (0..n_comm)
        .map(|_| {
            let mut s: Vec<u32> = (0..slots_per_comm as u32).collect();
            s.shuffle(&mut rng);
            s
        })
        .collect();

    let mut buildings: Vec<Building> = Vec::new();
    let mut place_building = |rng: &mut ChaCha8Rng, community: usize, kind: BuildingKind| {
        let slot = free_slots[community].pop()?;
        let origin = geography.community_origin(community);
        let sx = slot % SLOTS_PER_COMMUNITY;
        let sy = slot / SLOTS_PER_COMMUNITY;
        let id = BuildingId(buildings.len() as u32);
        buildings.push(Building {
            id,
            location: Point::new(
                origin.x + (sx as f64 + 0.5) * slot_size,
                origin.y + (sy as f64 + 0.5) * slot_size,
            ),
            kind,
            property_dist: property_dist(rng, kind),
            community,
        });
        Some(id)
    };

    let pop_index = WeightedIndex::new(&population).expect("positive weights");
    let attr_index = WeightedIndex::new(&attractiveness).expect("positive weights");

    let mut homes_by_community: Vec<Vec<BuildingId>> = vec![Vec::new(); n_comm];
    let n_res = config
        .n_households
        .div_ceil(config.households_per_building)
        .max(n_comm);
    for (c, homes) in homes_by_community.iter_mut().enumerate() {
        homes.push(place_building(&mut rng, c, BuildingKind::Residential).expect("empty community"));
    }
    for _ in n_comm..n_res {
        let c = pop_index.sample(&mut rng);
        if let Some(b) = place_building(&mut rng, c, BuildingKind::Residential) {
            homes_by_community[c].push(b);
        }
    }
    let mut mixtures = Vec::new();
    for _ in 0..(n_res / 10).max(1) {
        let c = pop_index.sample(&mut rng);
        if let Some(b) = place_building(&mut rng, c, BuildingKind::Mixture) {
            homes_by_community[c].push(b);
            mixtures.push(b);
        }
    }
    let n_shops = (config.n_companies as f64 * config.shop_fraction).round() as usize;
    let n_office_companies = config.n_companies - n_shops;
    let mut offices = Vec::new();
    let n_office_buildings = n_office_companies
        .div_ceil(config.companies_per_office_building)
        .max(2);
    while offices.len() < n_office_buildings {
        let c = attr_index.sample(&mut rng);
        if let Some(b) = place_building(&mut rng, c, BuildingKind::Office) {
            offices.push(b);
        }
    }

    let mut access_points: Vec<AccessPoint> = Vec::new();
    let mut next_terminal = 0u32;
    let mut new_terminal = || {
        next_terminal += 1;
        TerminalId(next_terminal - 1)
    };

    let mut households = Vec::with_capacity(config.n_households);
    for h in 0..config.n_households {
        let id = HouseholdId(h as u32);
        let c = pop_index.sample(&mut rng);
        let home_building = homes_by_community[c][rng.random_range(0..homes_by_community[c].len())];
        let n_terminals = if rng.random_bool(0.5) { 2 } else { 1 };
        let terminals = (0..n_terminals).map(|_| new_terminal()).collect();
        let home_ap = ApId(access_points.len() as u32);
        access_points.push(AccessPoint {
            id: home_ap,
            kind: ApKind::Home,
            owner: Owner::Household(id),
            building: Some(home_building),
            violator: rng.random_bool(config.violator_fraction),
        });
        let pocket_ap = rng.random_bool(config.pocket_ap_fraction).then(|| {
            let pid = ApId(access_points.len() as u32);
            access_points.push(AccessPoint {
                id: pid,
                kind: ApKind::Pocket,
                owner: Owner::Household(id),
                building: None,
                violator: false,
            });
            pid
        });
        households.push(Household {
            id,
            terminals,
            home_building,
            home_place: geography.communities()[c].clone(),
            home_ap,
            extra_aps: Vec::new(),
            pocket_ap,
        });
    }

    let mut companies = Vec::with_capacity(config.n_companies);
    for k in 0..config.n_companies {
        let id = CompanyId(k as u32);
        let shop = k < n_shops;
        let (building, n_aps, kind) = if shop && !mixtures.is_empty() {
            (mixtures[rng.random_range(0..mixtures.len())], 1, ApKind::Mixed)
        } else {
            let b = offices[rng.random_range(0..offices.len())];
            (b, rng.random_range(1..=3), ApKind::Office)
        };
        let mut aps = Vec::with_capacity(n_aps);
        let mut staff = Vec::with_capacity(n_aps);
        for _ in 0..n_aps {
            let ap = ApId(access_points.len() as u32);
            access_points.push(AccessPoint {
                id: ap,
                kind,
                owner: Owner::Company(id),
                building: Some(building),
                violator: rng.random_bool(config.violator_fraction),
            });
            aps.push(ap);
            let n_staff = if kind == ApKind::Mixed {
                rng.random_range(1..=2)
            } else {
                rng.random_range(2..=6)
            };
            staff.push((0..n_staff).map(|_| new_terminal()).collect());
        }
        companies.push(Company {
            id,
            building,
            shop: kind == ApKind::Mixed,
            aps,
            staff,
        });
    }

    Ok(World {
        geography,
        buildings,
        households,
        companies,
        access_points,
        population,
        attractiveness,
        homes_by_community,
        offices,
        mixtures,
    })
}

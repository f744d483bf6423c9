//! Spatial hierarchy, planar grid cells and the weekly/monthly calendar.
//!
//! Places nest community ⊂ district ⊂ city ⊂ province. The synthetic world is
//! a rectangle in planar meters, partitioned by a nested grid so that every
//! point maps to exactly one community.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SECONDS_PER_WEEK: i64 = 604_800;
pub const WEEKS_PER_MONTH: u32 = 4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeoError {
    #[error("unknown place {0}")]
    UnknownPlace(PlaceId),
    #[error("cannot resolve {place} to finer scale {target}")]
    FinerTarget { place: PlaceId, target: Scale },
    #[error("coordinate ({x}, {y}) lies outside the world bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid scale name {0:?}")]
    BadScale(String),
    #[error("hierarchy line {line}: {reason}")]
    Hierarchy { line: usize, reason: String },
    #[error("invalid world layout: {0}")]
    Layout(String),
}

/// Spatial scale, ordered from finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Community,
    District,
    City,
    Province,
}

impl Scale {
    pub const ALL: [Scale; 4] = [Scale::Community, Scale::District, Scale::City, Scale::Province];

    /// The next coarser scale, `None` for provinces.
    pub fn parent(self) -> Option<Scale> {
        match self {
            Scale::Community => Some(Scale::District),
            Scale::District => Some(Scale::City),
            Scale::City => Some(Scale::Province),
            Scale::Province => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Community => "community",
            Scale::District => "district",
            Scale::City => "city",
            Scale::Province => "province",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scale {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "community" => Ok(Scale::Community),
            "district" => Ok(Scale::District),
            "city" => Ok(Scale::City),
            "province" => Ok(Scale::Province),
            _ => Err(GeoError::BadScale(s.to_string())),
        }
    }
}

/// A place at one scale. Codes are unique within a scale; cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId {
    pub scale: Scale,
    pub code: Arc<str>,
}

impl PlaceId {
    pub fn new(scale: Scale, code: impl AsRef<str>) -> Self {
        Self {
            scale,
            code: Arc::from(code.as_ref()),
        }
    }

    pub fn code(&self) -> &str {
        &self.code
    }
}

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scale, self.code)
    }
}

/// Parent links and display names for every known place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaceHierarchy {
    parents: BTreeMap<PlaceId, PlaceId>,
    names: BTreeMap<PlaceId, String>,
    by_code: BTreeMap<(Scale, Arc<str>), PlaceId>,
}

impl PlaceHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a place. Provinces take no parent; every other scale needs an
    /// existing parent exactly one scale up.
    pub fn insert(
        &mut self,
        place: PlaceId,
        parent: Option<PlaceId>,
        name: impl Into<String>,
    ) -> Result<(), String> {
        if self.contains(&place) {
            return Err(format!("duplicate code {} at scale {}", place.code, place.scale));
        }
        match (place.scale.parent(), parent) {
            (None, None) => {}
            (None, Some(_)) => return Err("provinces cannot have a parent".into()),
            (Some(_), None) => return Err(format!("{place} needs a parent")),
            (Some(expected), Some(parent)) => {
                if parent.scale != expected {
                    return Err(format!("parent of {place} must be a {expected}, got {parent}"));
                }
                if !self.contains(&parent) {
                    return Err(format!("parent {parent} of {place} is not defined"));
                }
                self.parents.insert(place.clone(), parent);
            }
        }
        self.by_code
            .insert((place.scale, place.code.clone()), place.clone());
        self.names.insert(place, name.into());
        Ok(())
    }

    pub fn contains(&self, place: &PlaceId) -> bool {
        self.names.contains_key(place)
    }

    pub fn lookup(&self, scale: Scale, code: &str) -> Option<&PlaceId> {
        self.by_code.get(&(scale, Arc::from(code)))
    }

    /// Finds a place by code at any scale, finest first.
    pub fn find_code(&self, code: &str) -> Option<&PlaceId> {
        Scale::ALL.iter().find_map(|s| self.lookup(*s, code))
    }

    pub fn parent(&self, place: &PlaceId) -> Option<&PlaceId> {
        self.parents.get(place)
    }

    pub fn name(&self, place: &PlaceId) -> Option<&str> {
        self.names.get(place).map(String::as_str)
    }

    pub fn places(&self, scale: Scale) -> impl Iterator<Item = &PlaceId> {
        self.names.keys().filter(move |p| p.scale == scale)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Returns the unique ancestor of `place` at `target` scale.
    pub fn resolve_scale(&self, place: &PlaceId, target: Scale) -> Result<PlaceId, GeoError> {
        if !self.contains(place) {
            return Err(GeoError::UnknownPlace(place.clone()));
        }
        if target < place.scale {
            return Err(GeoError::FinerTarget {
                place: place.clone(),
                target,
            });
        }
        let mut current = place;
        while current.scale < target {
            current = self
                .parents
                .get(current)
                .ok_or_else(|| GeoError::UnknownPlace(current.clone()))?;
        }
        Ok(current.clone())
    }

    /// Reads `scale,code,parent_code,name` lines. The header row is required
    /// and parents must precede their children.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, GeoError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| GeoError::Hierarchy {
            line: 1,
            reason: e.to_string(),
        })?;
        let expected = ["scale", "code", "parent_code", "name"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(GeoError::Hierarchy {
                line: 1,
                reason: format!("expected header {}", expected.join(",")),
            });
        }
        let mut hierarchy = PlaceHierarchy::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| GeoError::Hierarchy {
                line,
                reason: e.to_string(),
            })?;
            if record.len() != 4 {
                return Err(GeoError::Hierarchy {
                    line,
                    reason: format!("expected 4 fields, found {}", record.len()),
                });
            }
            let scale: Scale = record[0].parse().map_err(|e: GeoError| GeoError::Hierarchy {
                line,
                reason: e.to_string(),
            })?;
            let place = PlaceId::new(scale, &record[1]);
            let parent = match (scale.parent(), record[2].is_empty()) {
                (Some(parent_scale), false) => Some(PlaceId::new(parent_scale, &record[2])),
                (None, false) => {
                    return Err(GeoError::Hierarchy {
                        line,
                        reason: "provinces cannot have a parent".into(),
                    })
                }
                (_, true) => None,
            };
            hierarchy
                .insert(place, parent, &record[3])
                .map_err(|reason| GeoError::Hierarchy { line, reason })?;
        }
        Ok(hierarchy)
    }

    /// Writes the hierarchy coarse-to-fine so it can be read back.
    pub fn write_to<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["scale", "code", "parent_code", "name"])?;
        for scale in Scale::ALL.iter().rev() {
            for place in self.places(*scale) {
                let parent = self.parent(place).map(PlaceId::code).unwrap_or("");
                wtr.write_record([scale.as_str(), place.code(), parent, self.name(place).unwrap_or("")])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub row: u32,
    pub col: u32,
}

impl GridCell {
    pub fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    pub fn center(&self, cell_size_m: f64) -> Point {
        Point::new(
            (self.col as f64 + 0.5) * cell_size_m,
            (self.row as f64 + 0.5) * cell_size_m,
        )
    }
}

/// The rectangle `[0, width) × [0, height)` with the origin at the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldBounds {
    pub width_m: f64,
    pub height_m: f64,
}

impl WorldBounds {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width_m && p.y < self.height_m
    }

    /// Equal-area square binning; rows grow northwards, columns eastwards.
    pub fn cell_of(&self, p: &Point, cell_size_m: f64) -> Result<GridCell, GeoError> {
        if !self.contains(p) || !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GeoError::OutOfBounds { x: p.x, y: p.y });
        }
        Ok(GridCell::new(
            (p.y / cell_size_m).floor() as u32,
            (p.x / cell_size_m).floor() as u32,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeekIndex(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonthIndex(pub u32);

impl WeekIndex {
    /// Months are fixed blocks of four weeks.
    pub fn month(self) -> MonthIndex {
        MonthIndex(self.0 / WEEKS_PER_MONTH)
    }

    pub fn start_ts(self) -> i64 {
        self.0 as i64 * SECONDS_PER_WEEK
    }
}

impl MonthIndex {
    pub fn weeks(self) -> std::ops::Range<u32> {
        self.0 * WEEKS_PER_MONTH..(self.0 + 1) * WEEKS_PER_MONTH
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Week containing `timestamp` (seconds since the simulation epoch; negative
/// timestamps clamp to week 0).
pub fn week_of(timestamp: i64) -> WeekIndex {
    WeekIndex((timestamp.max(0) / SECONDS_PER_WEEK) as u32)
}

/// Seconds since local midnight.
pub fn time_of_day(timestamp: i64) -> i64 {
    timestamp.rem_euclid(SECONDS_PER_DAY)
}

pub fn day_of(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

/// Nested-grid partition of the world: each level splits its parent into
/// `cols × rows` equal rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldLayout {
    pub provinces: [u32; 2],
    pub cities_per_province: [u32; 2],
    pub districts_per_city: [u32; 2],
    pub communities_per_district: [u32; 2],
    pub community_size_m: f64,
    pub cell_size_m: f64,
}

impl Default for WorldLayout {
    fn default() -> Self {
        Self {
            provinces: [3, 2],
            cities_per_province: [2, 2],
            districts_per_city: [2, 2],
            communities_per_district: [3, 3],
            community_size_m: 1000.0,
            cell_size_m: 200.0,
        }
    }
}

impl WorldLayout {
    pub fn validate(&self) -> Result<(), GeoError> {
        let dims = [
            self.provinces,
            self.cities_per_province,
            self.districts_per_city,
            self.communities_per_district,
        ];
        if dims.iter().flatten().any(|&d| d == 0) {
            return Err(GeoError::Layout("every grid level needs at least one cell per axis".into()));
        }
        if !(self.community_size_m > 0.0 && self.cell_size_m > 0.0) {
            return Err(GeoError::Layout("sizes must be positive".into()));
        }
        let ratio = self.community_size_m / self.cell_size_m;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(GeoError::Layout(
                "community size must be a whole multiple of the cell size".into(),
            ));
        }
        Ok(())
    }

    /// Communities along each axis of the whole world.
    pub fn community_grid(&self) -> [u32; 2] {
        let mut grid = [1u32; 2];
        for level in [
            self.provinces,
            self.cities_per_province,
            self.districts_per_city,
            self.communities_per_district,
        ] {
            grid[0] *= level[0];
            grid[1] *= level[1];
        }
        grid
    }

    pub fn bounds(&self) -> WorldBounds {
        let [cols, rows] = self.community_grid();
        WorldBounds {
            width_m: cols as f64 * self.community_size_m,
            height_m: rows as f64 * self.community_size_m,
        }
    }
}

/// A world layout together with the place hierarchy it induces.
#[derive(Debug, Clone)]
pub struct Geography {
    pub layout: WorldLayout,
    pub hierarchy: PlaceHierarchy,
    /// Community ids indexed by `row * cols + col` of the community grid.
    communities: Vec<PlaceId>,
}

impl Geography {
    pub fn new(layout: WorldLayout) -> Result<Self, GeoError> {
        layout.validate()?;
        let [ccols, crows] = layout.community_grid();
        let mut hierarchy = PlaceHierarchy::new();
        let mut communities = vec![None; (ccols * crows) as usize];

        let [pc, pr] = layout.provinces;
        let [cc, cr] = layout.cities_per_province;
        let [dc, dr] = layout.districts_per_city;
        let [mc, mr] = layout.communities_per_district;
        let insert = |h: &mut PlaceHierarchy, p: &PlaceId, parent: Option<PlaceId>| {
            h.insert(p.clone(), parent, p.code())
                .map_err(GeoError::Layout)
        };
        for py in 0..pr {
            for px in 0..pc {
                let prov = PlaceId::new(Scale::Province, format!("P{}", py * pc + px));
                insert(&mut hierarchy, &prov, None)?;
                for cy in 0..cr {
                    for cx in 0..cc {
                        let city =
                            PlaceId::new(Scale::City, format!("{}-C{}", prov.code(), cy * cc + cx));
                        insert(&mut hierarchy, &city, Some(prov.clone()))?;
                        for dy in 0..dr {
                            for dx in 0..dc {
                                let district = PlaceId::new(
                                    Scale::District,
                                    format!("{}-D{}", city.code(), dy * dc + dx),
                                );
                                insert(&mut hierarchy, &district, Some(city.clone()))?;
                                for my in 0..mr {
                                    for mx in 0..mc {
                                        let community = PlaceId::new(
                                            Scale::Community,
                                            format!("{}-M{}", district.code(), my * mc + mx),
                                        );
                                        insert(&mut hierarchy, &community, Some(district.clone()))?;
                                        let col = ((px * cc + cx) * dc + dx) * mc + mx;
                                        let row = ((py * cr + cy) * dr + dy) * mr + my;
                                        communities[(row * ccols + col) as usize] = Some(community);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            layout,
            hierarchy,
            communities: communities.into_iter().map(|c| c.expect("grid fully covered")).collect(),
        })
    }

    pub fn bounds(&self) -> WorldBounds {
        self.layout.bounds()
    }

    /// Communities in grid order (row-major, south to north).
    pub fn communities(&self) -> &[PlaceId] {
        &self.communities
    }

    /// Grid position `(col, row)` of a community index.
    pub fn community_position(&self, index: usize) -> (u32, u32) {
        let cols = self.layout.community_grid()[0];
        (index as u32 % cols, index as u32 / cols)
    }

    /// South-west corner of community `index`.
    pub fn community_origin(&self, index: usize) -> Point {
        let (col, row) = self.community_position(index);
        Point::new(
            col as f64 * self.layout.community_size_m,
            row as f64 * self.layout.community_size_m,
        )
    }

    pub fn community_center(&self, index: usize) -> Point {
        let o = self.community_origin(index);
        let half = self.layout.community_size_m / 2.0;
        Point::new(o.x + half, o.y + half)
    }

    pub fn community_index_at(&self, p: &Point) -> Result<usize, GeoError> {
        let bounds = self.bounds();
        if !bounds.contains(p) {
            return Err(GeoError::OutOfBounds { x: p.x, y: p.y });
        }
        let cols = self.layout.community_grid()[0] as usize;
        let col = (p.x / self.layout.community_size_m).floor() as usize;
        let row = (p.y / self.layout.community_size_m).floor() as usize;
        Ok(row * cols + col)
    }

    pub fn community_at(&self, p: &Point) -> Result<&PlaceId, GeoError> {
        Ok(&self.communities[self.community_index_at(p)?])
    }

    pub fn cell_of(&self, p: &Point) -> Result<GridCell, GeoError> {
        self.bounds().cell_of(p, self.layout.cell_size_m)
    }

    /// Community containing a grid cell. Cells nest exactly inside communities.
    pub fn community_of_cell(&self, cell: GridCell) -> Result<&PlaceId, GeoError> {
        self.community_at(&cell.center(self.layout.cell_size_m))
    }

    pub fn resolve_scale(&self, place: &PlaceId, target: Scale) -> Result<PlaceId, GeoError> {
        self.hierarchy.resolve_scale(place, target)
    }

    /// Codes of every place at `scale`, sorted.
    pub fn codes(&self, scale: Scale) -> BTreeSet<&str> {
        self.hierarchy.places(scale).map(PlaceId::code).collect()
    }
}

// PlaceIds cross file boundaries as bare codes; the scale comes from context.
impl Serialize for PlaceId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code)
    }
}

/// Deserializes a bare code as a community-scale place.
impl<'de> Deserialize<'de> for PlaceId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        Ok(PlaceId::new(Scale::Community, code))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BEIJING: &str = "scale,code,parent_code,name\n\
        province,BJ,,Beijing\n\
        city,BJC,BJ,Beijing\n\
        district,HD,BJC,Haidian\n\
        district,CY,BJC,Chaoyang\n\
        community,SDDL,HD,Shangdi Dongli\n\
        community,SDXL,HD,Shangdi Xili\n\
        community,SDJY,HD,Shangdi Jiayuan\n\
        community,GJK,CY,Ganjiakou\n";

    fn beijing() -> PlaceHierarchy {
        PlaceHierarchy::read_from(BEIJING.as_bytes()).unwrap()
    }

    #[test]
    fn shangdi_resolves_to_haidian() {
        let h = beijing();
        let sddl = PlaceId::new(Scale::Community, "SDDL");
        let district = h.resolve_scale(&sddl, Scale::District).unwrap();
        assert_eq!(district.code(), "HD");
        assert_eq!(h.name(&district), Some("Haidian"));
        assert_eq!(h.resolve_scale(&sddl, Scale::Province).unwrap().code(), "BJ");
    }

    #[test]
    fn resolve_identity_and_idempotence() {
        let h = beijing();
        let bj = PlaceId::new(Scale::Province, "BJ");
        assert_eq!(h.resolve_scale(&bj, Scale::Province).unwrap(), bj);
        let p = h
            .resolve_scale(&PlaceId::new(Scale::Community, "GJK"), Scale::Province)
            .unwrap();
        assert_eq!(h.resolve_scale(&p, Scale::Province).unwrap(), p);
    }

    #[test]
    fn resolve_errors() {
        let h = beijing();
        let unknown = PlaceId::new(Scale::Community, "NOPE");
        assert!(matches!(
            h.resolve_scale(&unknown, Scale::City),
            Err(GeoError::UnknownPlace(_))
        ));
        let city = PlaceId::new(Scale::City, "BJC");
        assert!(matches!(
            h.resolve_scale(&city, Scale::Community),
            Err(GeoError::FinerTarget { .. })
        ));
    }

    #[test]
    fn hierarchy_rejects_bad_files() {
        let no_header = "province,BJ,,Beijing\n";
        assert!(PlaceHierarchy::read_from(no_header.as_bytes()).is_err());
        let orphan = "scale,code,parent_code,name\ncity,X,BJ,X\n";
        assert!(PlaceHierarchy::read_from(orphan.as_bytes()).is_err());
        let skip = "scale,code,parent_code,name\nprovince,BJ,,B\ndistrict,D,BJ,D\n";
        assert!(PlaceHierarchy::read_from(skip.as_bytes()).is_err());
        let dup = "scale,code,parent_code,name\nprovince,BJ,,B\nprovince,BJ,,B\n";
        assert!(PlaceHierarchy::read_from(dup.as_bytes()).is_err());
    }

    #[test]
    fn hierarchy_round_trips_through_text() {
        let h = beijing();
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        assert_eq!(PlaceHierarchy::read_from(buf.as_slice()).unwrap(), h);
    }

    #[test]
    fn week_boundaries() {
        assert_eq!(week_of(0), WeekIndex(0));
        assert_eq!(week_of(604_800), WeekIndex(1));
        assert_eq!(week_of(604_799), WeekIndex(0));
        assert_eq!(WeekIndex(7).month(), MonthIndex(1));
        assert_eq!(MonthIndex(2).weeks(), 8..12);
    }

    #[test]
    fn cells() {
        let b = WorldBounds { width_m: 1000.0, height_m: 1000.0 };
        assert_eq!(b.cell_of(&Point::new(0.0, 0.0), 100.0).unwrap(), GridCell::new(0, 0));
        assert_eq!(b.cell_of(&Point::new(150.0, 0.0), 100.0).unwrap(), GridCell::new(0, 1));
        // two points within half a cell of the center of cell (3, 4)
        let c = GridCell::new(3, 4).center(100.0);
        let a = b.cell_of(&Point::new(c.x - 20.0, c.y + 10.0), 100.0).unwrap();
        let d = b.cell_of(&Point::new(c.x + 25.0, c.y - 15.0), 100.0).unwrap();
        assert_eq!(a, d);
        assert!(b.cell_of(&Point::new(-1.0, 5.0), 100.0).is_err());
        assert!(b.cell_of(&Point::new(5.0, 1000.0), 100.0).is_err());
    }

    #[test]
    fn nested_grid_geography() {
        let geo = Geography::new(WorldLayout::default()).unwrap();
        let [cols, rows] = geo.layout.community_grid();
        assert_eq!(geo.communities().len(), (cols * rows) as usize);
        assert_eq!(geo.hierarchy.places(Scale::Province).count(), 6);
        assert_eq!(geo.hierarchy.places(Scale::City).count(), 24);
        for (i, c) in geo.communities().iter().enumerate() {
            let center = geo.community_center(i);
            assert_eq!(geo.community_at(&center).unwrap(), c);
        }
        // every cell maps to the community containing its center
        let cell = geo.cell_of(&Point::new(4321.0, 1234.0)).unwrap();
        assert_eq!(
            geo.community_of_cell(cell).unwrap(),
            geo.community_at(&Point::new(4321.0, 1234.0)).unwrap()
        );
    }

    #[test]
    fn layout_validation() {
        let bad = WorldLayout { cell_size_m: 300.0, ..WorldLayout::default() };
        assert!(Geography::new(bad).is_err());
        let zero = WorldLayout { provinces: [0, 2], ..WorldLayout::default() };
        assert!(Geography::new(zero).is_err());
    }
}

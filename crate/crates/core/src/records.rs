//! Identifiers and the line-delimited record types exchanged between stages.
//!
//! Every file is UTF-8 CSV with a header row; timestamps are integer seconds
//! since the simulation epoch (local midnight of week 0, day 0).
//!
//! | file          | columns                                                          |
//! |---------------|------------------------------------------------------------------|
//! | scans.csv     | scanner_id,timestamp,x,y,ap_id,rssi                              |
//! | sessions.csv  | terminal_id,ap_id,connect_ts,disconnect_ts,car_call_ts           |
//! | trades.csv    | ap_id,week,seller,buyer                                          |
//! | truth.csv     | kind,ap_id,week,origin,destination                               |
//! | buildings.csv | building_id,x,y,p_office,p_residential,p_mixture,p_uncertain     |

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::geo::{PlaceId, Point, WeekIndex};
use crate::Error;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_type!(
    /// Stable broadcast identity of an access point.
    ApId
);
id_type!(TerminalId);
id_type!(BuildingId);
id_type!(HouseholdId);
id_type!(CompanyId);
id_type!(ScannerId);

/// One sighting of an AP by a scanner. Observations sharing
/// `(scanner_id, timestamp)` belong to the same scan batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanObservation {
    pub scanner_id: ScannerId,
    pub timestamp: i64,
    pub x: f64,
    pub y: f64,
    pub ap_id: ApId,
    pub rssi: f64,
}

impl ScanObservation {
    pub fn location(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn batch(&self) -> (ScannerId, i64) {
        (self.scanner_id, self.timestamp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub terminal_id: TerminalId,
    pub ap_id: ApId,
    pub connect_ts: i64,
    pub disconnect_ts: i64,
    pub car_call_ts: Option<i64>,
}

impl SessionRecord {
    pub fn is_well_formed(&self) -> bool {
        self.connect_ts < self.disconnect_ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub ap_id: ApId,
    pub week: WeekIndex,
    pub seller: HouseholdId,
    pub buyer: HouseholdId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    HouseholdMove,
    CompanyMove,
    Trade,
    PocketNoise,
}

/// A relocation the simulator actually performed. Origins and destinations
/// are communities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub kind: EventKind,
    pub ap_id: ApId,
    pub week: WeekIndex,
    pub origin: PlaceId,
    pub destination: PlaceId,
}

/// Probability that a building is office, residential, mixture or uncertain,
/// in that order.
pub type PropertyDist = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingRecord {
    pub building_id: BuildingId,
    pub x: f64,
    pub y: f64,
    pub p_office: f64,
    pub p_residential: f64,
    pub p_mixture: f64,
    pub p_uncertain: f64,
}

impl BuildingRecord {
    pub fn location(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn property_dist(&self) -> PropertyDist {
        [self.p_office, self.p_residential, self.p_mixture, self.p_uncertain]
    }
}

/// Reads every record of a headed CSV file, naming the file on failure.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    rdr.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    for r in records {
        wtr.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes a header-only file when `records` is empty, so downstream readers
/// always find the schema.
pub fn write_csv_with_header<T: Serialize>(
    path: &Path,
    header: &[&str],
    records: &[T],
) -> Result<(), Error> {
    if !records.is_empty() {
        return write_csv(path, records);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    wtr.write_record(header).map_err(|e| Error::csv(path, e))?;
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

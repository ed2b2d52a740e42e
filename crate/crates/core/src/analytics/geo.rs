use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::StancedTweet;
use crate::corpus::Location;
use crate::inference::Stance;

const BUNDLED: &str = include_str!("../../assets/gazetteer.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StanceColor {
    Red,
    Yellow,
    Blue,
}

/// Refute is red, neutral yellow, support blue.
pub fn stance_color(stance: Stance) -> StanceColor {
    match stance {
        Stance::Refute => StanceColor::Red,
        Stance::Neutral => StanceColor::Yellow,
        Stance::Support => StanceColor::Blue,
    }
}

/// Place name to centroid, matched case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    places: HashMap<String, (f64, f64)>,
}

impl Gazetteer {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut places = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [name, lat, lon] = parts[..] else {
                return Err(format!("line {}: expected name, lat, lon", i + 1));
            };
            let lat: f64 = lat.trim().parse().map_err(|_| format!("line {}: bad latitude", i + 1))?;
            let lon: f64 = lon.trim().parse().map_err(|_| format!("line {}: bad longitude", i + 1))?;
            places.insert(name.trim().to_lowercase(), (lat, lon));
        }
        Ok(Gazetteer { places })
    }

    pub fn bundled() -> &'static Gazetteer {
        static GAZ: OnceLock<Gazetteer> = OnceLock::new();
        GAZ.get_or_init(|| Gazetteer::parse(BUNDLED).expect("bundled gazetteer parses"))
    }

    pub fn lookup(&self, name: &str) -> Option<(f64, f64)> {
        self.places.get(&name.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub tweet_id: String,
    pub lat: f64,
    pub lon: f64,
    pub stance: Stance,
    pub color: StanceColor,
}

/// Map points for tweets with a usable location; the rest are dropped.
pub fn geo_points(tweets: &[StancedTweet], gazetteer: &Gazetteer) -> Vec<GeoPoint> {
    tweets
        .iter()
        .filter_map(|t| {
            let (lat, lon) = match t.node.location.as_ref()? {
                Location::Coordinates { lat, lon } => (*lat, *lon),
                Location::Name(name) => gazetteer.lookup(name)?,
            };
            Some(GeoPoint { tweet_id: t.node.tweet_id.clone(), lat, lon, stance: t.stance, color: stance_color(t.stance) })
        })
        .collect()
}

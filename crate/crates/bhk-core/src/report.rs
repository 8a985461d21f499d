//! Serializable norm reports: JSON records and CSV profile tables.

use crate::besov::BlockProfile;
use crate::herz::AnnulusProfile;
use serde::{Deserialize, Serialize};

/// A norm evaluation with its per-index profile, in the shape shared by
/// annulus (k) and block (j) decompositions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormReport {
    pub space: String,
    pub params: serde_json::Value,
    pub profile: Vec<(i32, f64)>,
    pub aggregate: f64,
    pub truncation_tail: (f64, f64),
    pub converged: bool,
    /// Name of the profile index column: "k" for annuli, "j" for blocks.
    pub index_name: String,
}

impl NormReport {
    pub fn from_annuli(space: &str, params: serde_json::Value, p: &AnnulusProfile) -> NormReport {
        NormReport {
            space: space.into(),
            params,
            profile: p.entries.clone(),
            aggregate: p.aggregate,
            truncation_tail: p.truncation_tail,
            converged: p.converged,
            index_name: "k".into(),
        }
    }

    pub fn from_blocks(space: &str, params: serde_json::Value, p: &BlockProfile) -> NormReport {
        NormReport {
            space: space.into(),
            params,
            profile: p.entries.clone(),
            aggregate: p.aggregate,
            truncation_tail: p.truncation_tail,
            converged: p.converged,
            index_name: "j".into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("norm report serializes")
    }

    /// CSV rows `index,value`, one per profile entry.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},value\n", self.index_name);
        for (idx, v) in &self.profile {
            out.push_str(&format!("{idx},{v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::herz::{weak_herz_norm, HerzParams};
    use crate::presets::{preset_field, Preset};

    #[test]
    fn json_round_trips_and_csv_has_header() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let profile = weak_herz_norm(&f, &HerzParams::new(0.0, 2.0, f64::INFINITY).unwrap())
            .unwrap();
        let report = NormReport::from_annuli(
            "wk",
            serde_json::json!({"alpha": 0.0, "p": 2.0, "q": "inf"}),
            &profile,
        );
        let text = report.to_json();
        let back: NormReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.aggregate, report.aggregate);
        assert_eq!(back.profile, report.profile);
        let csv = report.to_csv();
        assert!(csv.starts_with("k,value\n"));
        assert_eq!(csv.lines().count(), 1 + report.profile.len());
    }
}

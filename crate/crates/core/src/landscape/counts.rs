//! Sequencing-count tables and the log-rate labels derived from them.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::LandscapeError;
use crate::csvfmt::write_rows;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub variant: String,
    pub n_plasmid: u64,
    pub n_virus: u64,
    pub n_tsd: u64,
}

/// `(ln(n_virus / n_plasmid), ln(n_tsd / n_virus))`.
pub fn labels_from_counts(t: &CountTable) -> Result<(f64, f64), LandscapeError> {
    if t.n_plasmid == 0 {
        return Err(LandscapeError::ZeroCount("n_plasmid"));
    }
    if t.n_virus == 0 {
        return Err(LandscapeError::ZeroCount("n_virus"));
    }
    if t.n_tsd == 0 {
        return Err(LandscapeError::BelowDetection(t.variant.clone()));
    }
    let pkg = (t.n_virus as f64 / t.n_plasmid as f64).ln();
    let tsd = (t.n_tsd as f64 / t.n_virus as f64).ln();
    Ok((pkg, tsd))
}

/// Simulates a three-stage count table for a variant whose latent packaging
/// and transduction log-rates are `pkg` and `tsd`: plasmid counts are
/// Poisson(`depth`) and each later stage is Poisson(previous * e^rate).
pub fn simulate_counts<R: Rng>(variant: String, pkg: f64, tsd: f64, depth: f64, rng: &mut R) -> CountTable {
    let draw = |mean: f64, rng: &mut R| -> u64 {
        if mean <= 0.0 || !mean.is_finite() {
            0
        } else {
            Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
        }
    };
    let n_plasmid = draw(depth, rng);
    let n_virus = draw(n_plasmid as f64 * pkg.exp(), rng);
    let n_tsd = draw(n_virus as f64 * tsd.exp(), rng);
    CountTable {
        variant,
        n_plasmid,
        n_virus,
        n_tsd,
    }
}

pub fn write_counts_csv(path: &Path, rows: &[CountTable]) -> Result<(), LandscapeError> {
    write_rows(
        path,
        &["variant", "n_plasmid", "n_virus", "n_tsd"],
        rows.iter().map(|r| {
            vec![
                r.variant.clone(),
                r.n_plasmid.to_string(),
                r.n_virus.to_string(),
                r.n_tsd.to_string(),
            ]
        }),
    )?;
    Ok(())
}

pub fn read_counts_csv(path: &Path) -> Result<Vec<CountTable>, LandscapeError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["variant", "n_plasmid", "n_virus", "n_tsd"] {
        return Err(LandscapeError::Parse(format!("unexpected count table header {headers:?}")));
    }
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(p: u64, v: u64, s: u64) -> CountTable {
        CountTable {
            variant: "v".into(),
            n_plasmid: p,
            n_virus: v,
            n_tsd: s,
        }
    }

    #[test]
    fn log_rates() {
        assert_eq!(labels_from_counts(&t(100, 100, 100)).unwrap(), (0.0, 0.0));
        let (pkg, tsd) = labels_from_counts(&t(100, 1000, 1000)).unwrap();
        assert_abs_diff_eq!(pkg, 10f64.ln(), epsilon = 1e-12);
        assert_eq!(tsd, 0.0);
    }

    #[test]
    fn zero_counts_are_errors() {
        assert!(matches!(labels_from_counts(&t(0, 10, 10)), Err(LandscapeError::ZeroCount("n_plasmid"))));
        assert!(matches!(labels_from_counts(&t(10, 0, 10)), Err(LandscapeError::ZeroCount("n_virus"))));
        assert!(matches!(labels_from_counts(&t(10, 10, 0)), Err(LandscapeError::BelowDetection(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let rows = vec![t(1, 2, 3), t(40, 50, 0)];
        write_counts_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("variant,n_plasmid,n_virus,n_tsd\n"));
        assert_eq!(read_counts_csv(&path).unwrap(), rows);
    }

    #[test]
    fn simulated_rates_track_latent_values() {
        let mut rng = crate::seed::rng_for(1, "test", 0);
        let c = simulate_counts("x".into(), 0.5, -0.5, 1e6, &mut rng);
        let (pkg, tsd) = labels_from_counts(&c).unwrap();
        assert!((pkg - 0.5).abs() < 0.01 && (tsd + 0.5).abs() < 0.01);
    }
}

use std::path::Path;

use super::RunRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "method,run_id,t,n_seen,sq_error,wall_ns,rank_one_updates";

/// Writes records in the given order; floats use 17 significant digits so
/// they parse back bit-exactly.
pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path).map_err(csv_err)?;
    out.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.method.clone(),
            r.run_id.to_string(),
            r.t.to_string(),
            r.n_seen.to_string(),
            format!("{:.16e}", r.sq_error),
            r.wall_ns.to_string(),
            r.rank_one_updates.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Csv(format!("expected header {CSV_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let bad = || Error::Csv(format!("line {}: {:?}", i + 2, row.iter().collect::<Vec<_>>()));
        if row.len() != 7 {
            return Err(bad());
        }
        out.push(RunRecord {
            method: row[0].to_string(),
            run_id: row[1].parse().map_err(|_| bad())?,
            t: row[2].parse().map_err(|_| bad())?,
            n_seen: row[3].parse().map_err(|_| bad())?,
            sq_error: row[4].parse().map_err(|_| bad())?,
            wall_ns: row[5].parse().map_err(|_| bad())?,
            rank_one_updates: row[6].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(sq_error: f64) -> RunRecord {
        RunRecord {
            method: "wassn".into(),
            run_id: 3,
            t: 10,
            n_seen: 100,
            sq_error,
            wall_ns: 0,
            rank_one_updates: 200,
        }
    }

    #[test]
    fn single_record_is_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(&[record(0.5)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Csv(_))));
        std::fs::write(&path, format!("{CSV_HEADER}\nsgd,0,1,2,x,0,0\n")).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Csv(_))));
    }

    #[test]
    fn ten_thousand_records_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let records: Vec<RunRecord> = (0..10_000)
            .map(|i| RunRecord {
                method: if i % 2 == 0 { "sgd".into() } else { "ssn_avg".into() },
                run_id: i as i64 % 7 - 2,
                t: i,
                n_seen: 10 * i,
                sq_error: rng.random::<f64>() * 10f64.powi(rng.random_range(-300..300)),
                wall_ns: rng.random(),
                rank_one_updates: rng.random(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.csv");
        write_csv(&records, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), records);
    }

    proptest! {
        #[test]
        fn floats_round_trip_bit_exact(x in prop::num::f64::POSITIVE | prop::num::f64::NEGATIVE | prop::num::f64::ZERO) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            write_csv(&[record(x)], &path).unwrap();
            prop_assert_eq!(read_csv(&path).unwrap()[0].sq_error.to_bits(), x.to_bits());
        }
    }
}

//! Report rows and sparsification curves as CSV with a header row.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{Report, SparsificationCurve, REPORT_COLUMNS};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_reports(rows: &[Report], path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.split.clone(),
            r.epe.to_string(),
            r.ause.to_string(),
            r.ci95.to_string(),
            r.mean_ud.to_string(),
            r.mean_um.to_string(),
            r.n_pixels.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<Report>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(REPORT_COLUMNS) {
        return Err(Error::BadHeader(format!(
            "unexpected report columns in {}",
            path.display()
        )));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::BadHeader(format!("bad number {s:?}")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(Report {
                dataset: rec[0].to_string(),
                split: rec[1].to_string(),
                epe: num(&rec[2])?,
                ause: num(&rec[3])?,
                ci95: num(&rec[4])?,
                mean_ud: num(&rec[5])?,
                mean_um: num(&rec[6])?,
                n_pixels: rec[7]
                    .parse()
                    .map_err(|_| Error::BadHeader(format!("bad count {:?}", &rec[7])))?,
            })
        })
        .collect()
}

/// Two columns: `fraction_removed,mean_epe`.
pub fn write_curve(curve: &SparsificationCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["fraction_removed", "mean_epe"])?;
    for (f, e) in curve.fractions_removed.iter().zip(&curve.mean_epe) {
        w.write_record([f.to_string(), e.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let row = Report {
            dataset: "synthetic".into(),
            split: "test".into(),
            epe: 0.75,
            ause: 0.1234567890123,
            ci95: 0.93,
            mean_ud: 4.5,
            mean_um: 1.25,
            n_pixels: 4242,
        };
        write_reports(std::slice::from_ref(&row), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("dataset,split,epe,ause,ci95,mean_ud,mean_um,n_pixels\n"));
        assert_eq!(read_reports(&path).unwrap(), vec![row]);
    }
}

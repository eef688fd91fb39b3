use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::TrainError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub epoch: usize,
    pub model: String,
    pub metric: String,
    pub value: f64,
}

/// Per-epoch measurements, persisted as `epoch,model,metric,value` CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    rows: Vec<RunRow>,
    last_epoch: BTreeMap<(String, String), usize>,
}

impl RunRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a measurement; epochs must strictly increase per (model, metric).
    pub fn push(
        &mut self,
        epoch: usize,
        model: &str,
        metric: &str,
        value: f64,
    ) -> Result<(), TrainError> {
        let key = (model.to_string(), metric.to_string());
        if let Some(&last) = self.last_epoch.get(&key) {
            if epoch <= last {
                return Err(TrainError::EpochOrder {
                    model: key.0,
                    metric: key.1,
                    epoch,
                    last,
                });
            }
        }
        self.last_epoch.insert(key, epoch);
        self.rows.push(RunRow {
            epoch,
            model: model.to_string(),
            metric: metric.to_string(),
            value,
        });
        Ok(())
    }

    /// Append all rows of `other`, keeping the ordering contract.
    pub fn extend(&mut self, other: &RunRecord) -> Result<(), TrainError> {
        for r in &other.rows {
            self.push(r.epoch, &r.model, &r.metric, r.value)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(epoch, value)` series for one model and metric.
    pub fn series(&self, model: &str, metric: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.metric == metric)
            .map(|r| (r.epoch, r.value))
            .collect()
    }

    pub fn last(&self, model: &str, metric: &str) -> Option<f64> {
        self.series(model, metric).last().map(|&(_, v)| v)
    }

    pub fn first(&self, model: &str, metric: &str) -> Option<f64> {
        self.series(model, metric).first().map(|&(_, v)| v)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wtr.write_record(["epoch", "model", "metric", "value"])?;
        for r in &self.rows {
            wtr.write_record([
                r.epoch.to_string(),
                r.model.clone(),
                r.metric.clone(),
                r.value.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, TrainError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| TrainError::Csv(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["epoch", "model", "metric", "value"] {
            return Err(TrainError::Csv(format!("unexpected header {headers:?}")));
        }
        let mut rec = RunRecord::new();
        for row in rdr.records() {
            let row = row.map_err(|e| TrainError::Csv(e.to_string()))?;
            let parse_err = |what: &str| TrainError::Csv(format!("bad {what} in row {row:?}"));
            let epoch = row[0].parse().map_err(|_| parse_err("epoch"))?;
            let value = row[3].parse().map_err(|_| parse_err("value"))?;
            rec.push(epoch, &row[1], &row[2], value)?;
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epochs_must_increase_per_series() {
        let mut r = RunRecord::new();
        r.push(0, "g", "ndcg@5", 0.5).unwrap();
        r.push(0, "d", "ndcg@5", 0.4).unwrap();
        r.push(1, "g", "ndcg@5", 0.6).unwrap();
        assert!(matches!(
            r.push(1, "g", "ndcg@5", 0.7),
            Err(TrainError::EpochOrder { .. })
        ));
    }

    #[test]
    fn csv_roundtrip() {
        let mut r = RunRecord::new();
        r.push(0, "single-d", "p@5", 0.1).unwrap();
        r.push(1, "single-d", "p@5", 1.0 / 3.0).unwrap();
        r.push(1, "dual-d,a", "loss", -1e-300).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("epoch,model,metric,value\n"));
        assert!(!text.contains('\r'));
        assert_eq!(RunRecord::read_csv(&buf[..]).unwrap(), r);
    }
}

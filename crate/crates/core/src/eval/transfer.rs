use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::IoContext;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Rmse,
}

/// `a[i][j]`: head trained on sensor `i`, evaluated on sensor `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub sensor_ids: Vec<String>,
    pub a: Vec<Vec<f64>>,
    pub metric_kind: MetricKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub transfer: f64,
    pub no_transfer: f64,
    pub transfer_std: f64,
    pub no_transfer_std: f64,
    pub metric_kind: MetricKind,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Off-diagonal (transfer) and diagonal (no-transfer) means with spreads.
pub fn transfer_performance(m: &TransferMatrix) -> Result<TransferSummary> {
    let n = m.sensor_ids.len();
    if n < 2 {
        return Err(Error::config(format!("transfer needs at least 2 sensors, got {n}")));
    }
    if m.a.len() != n || m.a.iter().any(|r| r.len() != n) {
        return Err(Error::Contract(format!("transfer matrix is not {n}×{n}")));
    }
    if m.a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Contract("transfer matrix has unpopulated cells".into()));
    }
    let off: Vec<f64> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m.a[i][j]).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.a[i][i]).collect();
    let (transfer, transfer_std) = mean_std(&off);
    let (no_transfer, no_transfer_std) = mean_std(&diag);
    Ok(TransferSummary { transfer, no_transfer, transfer_std, no_transfer_std, metric_kind: m.metric_kind })
}

impl TransferMatrix {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("train\\eval");
        for id in &self.sensor_ids {
            s.push(',');
            s.push_str(id);
        }
        s.push('\n');
        for (id, row) in self.sensor_ids.iter().zip(&self.a) {
            s.push_str(id);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).at(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(a: Vec<Vec<f64>>) -> TransferMatrix {
        let ids = (0..a.len()).map(|i| format!("s{i}")).collect();
        TransferMatrix { sensor_ids: ids, a, metric_kind: MetricKind::Accuracy }
    }

    #[test]
    fn two_by_two_example() {
        let s = transfer_performance(&mat(vec![vec![0.9, 0.8], vec![0.6, 0.7]])).unwrap();
        assert!((s.transfer - 0.7).abs() < 1e-12);
        assert!((s.no_transfer - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(transfer_performance(&mat(vec![vec![1.0]])).is_err());
        assert!(transfer_performance(&mat(vec![vec![1.0, f64::NAN], vec![0.0, 1.0]])).is_err());
        let c = transfer_performance(&mat(vec![vec![0.3; 3]; 3])).unwrap();
        assert_eq!((c.transfer, c.no_transfer, c.transfer_std), (0.3, 0.3, 0.0));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = mat(vec![vec![1.0, 0.5], vec![0.25, 1.0]]).to_csv();
        assert_eq!(csv, "train\\eval,s0,s1\ns0,1,0.5\ns1,0.25,1\n");
    }
}

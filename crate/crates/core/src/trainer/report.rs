use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Mean losses over the steps of one epoch. Columns that do not apply to the
/// network being trained are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_s: Option<f64>,
    pub loss_t: Option<f64>,
    pub loss_g: Option<f64>,
    pub loss_p: Option<f64>,
    pub seconds: f64,
}

/// One record per completed epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Loss of every individual step, in order: `loss_g` for the sketch
    /// network, `loss_p` for the parsing network.
    pub step_losses: Vec<f64>,
}

impl TrainReport {
    /// CSV with header `epoch,loss_s,loss_t,loss_g,loss_p,seconds`. With
    /// `timing` off the seconds column is written as 0 so that reruns are
    /// byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("epoch,loss_s,loss_t,loss_g,loss_p,seconds\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        for r in &self.epochs {
            let secs = if timing { r.seconds } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{secs:.6}",
                r.epoch,
                cell(r.loss_s),
                cell(r.loss_t),
                cell(r.loss_g),
                cell(r.loss_p)
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, timing: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(timing))?;
        Ok(())
    }

    /// Loss curves without timing, for determinism comparisons.
    pub fn losses(&self) -> Vec<[Option<f64>; 4]> {
        self.epochs.iter().map(|r| [r.loss_s, r.loss_t, r.loss_g, r.loss_p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_inapplicable_columns_blank() {
        let report = TrainReport {
            epochs: vec![EpochRecord {
                epoch: 1,
                loss_s: None,
                loss_t: None,
                loss_g: None,
                loss_p: Some(0.5),
                seconds: 1.25,
            }],
            step_losses: vec![0.5],
        };
        assert_eq!(
            report.to_csv(true),
            "epoch,loss_s,loss_t,loss_g,loss_p,seconds\n1,,,,5.0000000000e-1,1.250000\n"
        );
        assert!(report.to_csv(false).ends_with(",0.000000\n"));
    }
}

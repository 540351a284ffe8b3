use std::fmt::Write as _;

use crate::autorec::EpochStats;
use crate::model::DARecEpoch;

use super::experiment::TrainConfig;

pub const CSV_HEADER: &str =
    "variant,k,alpha,beta,mu,lambda,seed,rmse_target,rmse_source,classifier_accuracy,epochs,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// `U-DARec`, `I-DARec`, `U-AutoRec` or `I-AutoRec`.
    pub model: String,
    pub config: TrainConfig,
    pub rmse_target: f64,
    pub rmse_source: f64,
    /// Domain-classifier accuracy over all training samples; absent for
    /// AutoRec-only runs.
    pub classifier_accuracy: Option<f64>,
    pub autorec_history: Vec<(String, Vec<EpochStats>)>,
    pub darec_history: Vec<DARecEpoch>,
    /// Distinct users (M) and items (N) among the target test ratings.
    pub test_users: usize,
    pub test_items: usize,
    pub epochs: usize,
    pub wall_seconds: f64,
}

impl Report {
    pub fn csv_row(&self) -> String {
        let c = &self.config;
        let w = &c.darec.weights;
        format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{},{},{:.3}",
            self.model,
            c.autorec.k,
            c.autorec.alpha,
            w.beta,
            w.mu,
            w.lambda,
            c.seed,
            self.rmse_target,
            self.rmse_source,
            self.classifier_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default(),
            self.epochs,
            self.wall_seconds
        )
    }

    /// Equality of everything except timing.
    pub fn same_results(&self, other: &Report) -> bool {
        let mut a = self.clone();
        a.wall_seconds = other.wall_seconds;
        &a == other
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let w = &c.darec.weights;
        let mut s = String::new();
        let _ = writeln!(s, "model            {}", self.model);
        let _ = writeln!(s, "seed             {}", c.seed);
        let _ = writeln!(
            s,
            "k={} alpha={} beta={} mu={} lambda={} width={}",
            c.autorec.k, c.autorec.alpha, w.beta, w.mu, w.lambda, c.darec.extractor_width
        );
        let _ = writeln!(s, "rmse target      {:.4}", self.rmse_target);
        let _ = writeln!(s, "rmse source      {:.4}", self.rmse_source);
        if let Some(a) = self.classifier_accuracy {
            let _ = writeln!(s, "classifier acc   {a:.4}");
        }
        let _ = writeln!(s, "test users (M)   {}", self.test_users);
        let _ = writeln!(s, "test items (N)   {}", self.test_items);
        let _ = writeln!(s, "epochs           {}", self.epochs);
        let _ = writeln!(s, "wall seconds     {:.2}", self.wall_seconds);
        for (name, hist) in &self.autorec_history {
            let _ = writeln!(s, "\nautorec[{name}] epoch loss val_rmse");
            for e in hist {
                let v = e.validation_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "  {} {:.4} {v}", e.epoch, e.loss);
            }
        }
        if !self.darec_history.is_empty() {
            let _ = writeln!(s, "\ndarec epoch predictor classifier regularizer acc val_rmse");
            for e in &self.darec_history {
                let v = e.validation_rmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "  {} {:.4} {:.4} {:.4} {:.3} {v}",
                    e.epoch, e.loss.predictor, e.loss.classifier, e.loss.regularizer, e.classifier_accuracy
                );
            }
        }
        s
    }
}

/// Header plus one row per report.
pub fn reports_csv(reports: &[Report]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Tolerance policy threaded through every verdict.
///
/// Rank decisions use `max(rows, cols) * eps * sigma_max` unless overridden;
/// the remaining knobs control stationarity residuals, constraint activity
/// and multiplier positivity. One policy object is passed everywhere so that
/// all verdicts are reproducible under a single documented configuration.
#[derive(Debug, Clone, Copy)]
pub struct TolerancePolicy {
    /// Absolute singular-value threshold overriding the rank rule.
    pub rank_override: Option<f64>,
    /// Residual tolerance for stationarity, inclusion and consistency checks.
    pub check: f64,
    /// Activity tolerance scale: |F| <= activity * (1 + |alpha|) is "active".
    pub activity: f64,
    /// Multiplier positivity threshold.
    pub lambda: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rank_override: None,
            check: 1e-9,
            activity: 1e-9,
            lambda: 1e-9,
        }
    }
}

impl TolerancePolicy {
    /// Policy with all residual knobs set to `tol` (CLI `--tol` / env override).
    pub fn with_check(tol: f64) -> Self {
        TolerancePolicy {
            rank_override: None,
            check: tol,
            activity: tol,
            lambda: tol,
        }
    }

    /// Singular-value threshold for an `rows x cols` matrix with largest
    /// singular value `sigma_max`.
    pub fn rank_threshold(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match self.rank_override {
            Some(t) => t,
            None => rows.max(cols).max(1) as f64 * f64::EPSILON * sigma_max,
        }
    }
}

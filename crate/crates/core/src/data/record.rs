use serde::{Deserialize, Serialize};

/// One worker row. `log_salary` is always `salary.ln()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub worker_id: String,
    pub geo: String,
    pub gjs: String,
    pub job: String,
    pub female: bool,
    pub recent_perf: f64,
    pub past_perf: f64,
    /// Years in the current job.
    pub time_in_job: f64,
    /// Annualized USD.
    pub salary: f64,
    pub log_salary: f64,
}

impl WorkerRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        worker_id: impl Into<String>,
        geo: impl Into<String>,
        gjs: impl Into<String>,
        job: impl Into<String>,
        female: bool,
        recent_perf: f64,
        past_perf: f64,
        time_in_job: f64,
        salary: f64,
    ) -> Self {
        WorkerRecord {
            worker_id: worker_id.into(),
            geo: geo.into(),
            gjs: gjs.into(),
            job: job.into(),
            female,
            recent_perf,
            past_perf,
            time_in_job,
            salary,
            log_salary: salary.ln(),
        }
    }

    pub fn covariates(&self) -> [f64; 3] {
        [self.recent_perf, self.past_perf, self.time_in_job]
    }

    pub fn is_valid(&self) -> bool {
        self.salary > 0.0
            && self.salary.is_finite()
            && self.time_in_job >= 0.0
            && self.recent_perf.is_finite()
            && self.past_perf.is_finite()
            && self.time_in_job.is_finite()
            && !self.geo.is_empty()
            && !self.gjs.is_empty()
            && !self.job.is_empty()
            && ((self.log_salary - self.salary.ln()).abs() <= 1e-12 * self.log_salary.abs().max(1.0))
    }
}

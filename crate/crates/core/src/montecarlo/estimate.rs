use std::str::FromStr;

use super::SampleBlock;
use crate::error::{Error, Result};
use crate::gaussian::ConditioningStrategy;
use crate::security::{secret_key_fraction, ChannelModel, KeyRateReport, ProtocolParams};

/// How the transmittance is read off the correlation data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransmittanceEstimator {
    /// `(Cov(a, b) / V_A)²` with the nominal modulation variance
    #[default]
    SquaredCovariance,
    /// `(Cov(a, b) / Var(a))²` with the sample modulation variance
    RegressionSlope,
}

impl FromStr for TransmittanceEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared-covariance" | "squared_covariance" | "covariance" => Ok(Self::SquaredCovariance),
            "regression" | "regression-slope" | "regression_slope" => Ok(Self::RegressionSlope),
            other => Err(Error::Argument(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Pooled sums of one block's reconciled pairs; combined in block order so
/// the result does not depend on scheduling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: usize,
    pub sa: f64,
    pub sb: f64,
    pub saa: f64,
    pub sbb: f64,
    pub sab: f64,
}

impl Moments {
    pub fn of_block(block: &SampleBlock) -> Self {
        let (s, c) = block.theta_block.sin_cos();
        let mut m = Moments { n: block.count(), ..Default::default() };
        for ((&q, &p), &x) in block.alice_q.iter().zip(&block.alice_p).zip(&block.bob_x) {
            let a = c * q + s * p;
            m.sa += a;
            m.sb += x;
            m.saa += a * a;
            m.sbb += x * x;
            m.sab += a * x;
        }
        m
    }

    pub fn merge(self, o: Self) -> Self {
        Moments {
            n: self.n + o.n,
            sa: self.sa + o.sa,
            sb: self.sb + o.sb,
            saa: self.saa + o.saa,
            sbb: self.sbb + o.sbb,
            sab: self.sab + o.sab,
        }
    }

    /// Unbiased `(Var a, Var b, Cov ab)`.
    pub fn second_moments(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        let (ma, mb) = (self.sa / n, self.sb / n);
        let k = n / (n - 1.0);
        ((self.saa / n - ma * ma) * k, (self.sbb / n - mb * mb) * k, (self.sab / n - ma * mb) * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub t_hat: f64,
    pub xi_hat: f64,
    pub var_alice: f64,
    pub var_bob: f64,
    pub cov_alice_bob: f64,
    pub n_used: usize,
    /// `t_hat > 1`: unphysical, the key rate cannot be evaluated
    pub t_hat_exceeds_one: bool,
}

pub(crate) fn estimate_from_moments(
    m: &Moments,
    v_a: f64,
    estimator: TransmittanceEstimator,
) -> Result<EstimationResult> {
    if m.n < 2 {
        return Err(Error::Argument(format!("parameter estimation needs >= 2 pulses, got {}", m.n)));
    }
    let (var_a, var_b, cov) = m.second_moments();
    let denom = match estimator {
        TransmittanceEstimator::SquaredCovariance => v_a,
        TransmittanceEstimator::RegressionSlope => var_a,
    };
    if !(denom > 0.0) {
        return Err(Error::Singular("modulation variance is zero".into()));
    }
    let t_hat = (cov / denom).powi(2);
    let xi_hat = var_b - t_hat * v_a - 1.0;
    Ok(EstimationResult {
        t_hat,
        xi_hat,
        var_alice: var_a,
        var_bob: var_b,
        cov_alice_bob: cov,
        n_used: m.n,
        t_hat_exceeds_one: t_hat > 1.0,
    })
}

/// Pooled transmittance and excess-noise estimates over `blocks`, with Alice's
/// values projected on each block's angle.
pub fn estimate_parameters<'a, I>(blocks: I, v_a: f64, estimator: TransmittanceEstimator) -> Result<EstimationResult>
where
    I: IntoIterator<Item = &'a SampleBlock>,
{
    let m = blocks.into_iter().map(Moments::of_block).fold(Moments::default(), Moments::merge);
    estimate_from_moments(&m, v_a, estimator)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalKeyRate {
    pub report: KeyRateReport,
    /// a negative `xi_hat` was replaced by zero
    pub xi_clamped: bool,
}

/// Asymptotic key fraction with the estimates plugged in: `V = v_a + 1`,
/// `T = t_hat`, `ξ = max(xi_hat, 0)`.
pub fn empirical_key_rate(est: &EstimationResult, v_a: f64, beta: f64) -> Result<EmpiricalKeyRate> {
    let xi_clamped = est.xi_hat < 0.0;
    let channel = ChannelModel::new(est.t_hat, est.xi_hat.max(0.0))?;
    let params = ProtocolParams::new(v_a + 1.0, beta, 0.0)?;
    let report = secret_key_fraction(&params, &channel, ConditioningStrategy::Standard)?;
    Ok(EmpiricalKeyRate { report, xi_clamped })
}

//! Analytic secret-key-rate pipeline under reverse reconciliation.
//!
//! The channel is modelled as Eve's entangling cloner: a beam splitter of
//! transmittance `T` mixing Bob's mode with one arm of a two-mode squeezed
//! vacuum of variance `W = 1 + ξ / (1 - T)`. Bob's homodyne frame angle enters
//! only through the conditioning step, which is why the key fraction is
//! independent of it for the standard strategy.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gaussian::{
    apply, beam_splitter, g_entropy, heterodyne_condition, homodyne_condition, mode_rotation, symplectic_eigenvalues,
    ConditioningStrategy, CovarianceMatrix,
};

pub const DEFAULT_BETA: f64 = 0.95;

/// Fibre attenuation used to map distance to transmittance, dB/km.
pub const DEFAULT_FIBER_LOSS_DB_PER_KM: f64 = 0.2;

/// Transmittance `T ∈ (0, 1]` and excess noise `ξ >= 0` (shot-noise units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    transmittance: f64,
    excess_noise: f64,
}

impl ChannelModel {
    pub fn new(transmittance: f64, excess_noise: f64) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return domain(format!("transmittance must lie in (0, 1], got {transmittance}"));
        }
        if !(excess_noise >= 0.0) || !excess_noise.is_finite() {
            return domain(format!("excess noise must be finite and >= 0, got {excess_noise}"));
        }
        Ok(Self { transmittance, excess_noise })
    }

    /// Fibre link of `km` kilometres with `db_per_km` attenuation.
    pub fn from_distance(km: f64, db_per_km: f64, excess_noise: f64) -> Result<Self> {
        if !(km >= 0.0) || !(db_per_km >= 0.0) {
            return domain(format!("distance and attenuation must be >= 0, got {km} km at {db_per_km} dB/km"));
        }
        Self::new(transmittance_at(km, db_per_km), excess_noise)
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn excess_noise(&self) -> f64 {
        self.excess_noise
    }
}

/// `T = 10^(-α L / 10)`.
pub fn transmittance_at(km: f64, db_per_km: f64) -> f64 {
    10f64.powf(-db_per_km * km / 10.0)
}

/// Entanglement-based variance `V >= 1` (modulation `V_A = V - 1`),
/// reconciliation efficiency `β ∈ (0, 1]` and Bob's frame angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    v: f64,
    beta: f64,
    theta: f64,
}

impl ProtocolParams {
    pub fn new(v: f64, beta: f64, theta: f64) -> Result<Self> {
        if !(v >= 1.0) || !v.is_finite() {
            return domain(format!("V must be a finite variance >= 1, got {v}"));
        }
        if !(0.0..=1.0).contains(&beta) {
            return domain(format!("reconciliation efficiency must lie in [0, 1], got {beta}"));
        }
        if !theta.is_finite() {
            return domain("measurement angle must be finite");
        }
        Ok(Self { v, beta, theta })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_v(self, v: f64) -> Result<Self> {
        Self::new(v, self.beta, self.theta)
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.v, self.beta, theta)
    }
}

/// One evaluated parameter point. All rates are in bits per pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub i_ab: f64,
    pub chi: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_cond: f64,
    /// `β I(A:B) - χ`, not clamped.
    pub r: f64,
    pub theta: f64,
    /// `r > 0`.
    pub key_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoBound {
    pub chi: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_cond: f64,
}

/// `W = 1 + ξ / (1 - T)`; `W = 1` when `ξ = 0`.
pub fn eve_variance(channel: &ChannelModel) -> Result<f64> {
    let (t, xi) = (channel.transmittance, channel.excess_noise);
    if xi == 0.0 {
        return Ok(1.0);
    }
    if t >= 1.0 {
        return domain(format!("excess noise {xi} cannot be hidden in a lossless channel (T = 1)"));
    }
    Ok(1.0 + xi / (1.0 - t))
}

/// `I(A:B) = ½ log2(1 + T(V-1) / (1+ξ))`.
pub fn mutual_information(params: &ProtocolParams, channel: &ChannelModel) -> f64 {
    shannon_rate(params.v, channel)
}

fn shannon_rate(v: f64, channel: &ChannelModel) -> f64 {
    let signal = channel.transmittance * (v - 1.0);
    let noise = 1.0 + channel.excess_noise;
    0.5 * (signal / noise).ln_1p() / std::f64::consts::LN_2
}

/// Mutual information when Alice also reads her data in a rotated frame:
/// the effective variance is `V' = V_a cosθ_B / cosθ_A`.
pub fn mutual_information_two_angle(v_a: f64, theta_a: f64, theta_b: f64, channel: &ChannelModel) -> Result<f64> {
    let cos_a = theta_a.cos();
    if cos_a.abs() < 1e-12 {
        return Err(Error::Singular(format!("Alice's frame angle {theta_a} rad makes cos(theta_A) vanish")));
    }
    let v_eff = v_a * (theta_b.cos() / cos_a);
    if !(v_eff >= 1.0) {
        return domain(format!(
            "effective variance V' = V_a cos(theta_B) / cos(theta_A) = {v_eff} is below the vacuum level; \
             the two frames are too far apart for this expression"
        ));
    }
    Ok(shannon_rate(v_eff, channel))
}

/// Four-mode (A, B, E1, E2) covariance after Eve's beam splitter acts on B and E1.
pub fn joint_post_channel_covariance(v: f64, channel: &ChannelModel) -> Result<CovarianceMatrix> {
    let w = eve_variance(channel)?;
    let abe = CovarianceMatrix::tmsvs(v)?.direct_sum(&CovarianceMatrix::tmsvs(w)?);
    apply(&beam_splitter(channel.transmittance, 1, 2, 4)?, &abe)
}

/// Alice-Bob covariance after the channel.
pub fn post_channel_covariance(v: f64, channel: &ChannelModel) -> Result<CovarianceMatrix> {
    joint_post_channel_covariance(v, channel)?.reduce(&[0, 1])
}

/// `χ = S(AB) - S(A|B)` with Bob's homodyne at `theta`.
pub fn holevo_bound(v: f64, channel: &ChannelModel, theta: f64, strategy: ConditioningStrategy) -> Result<HolevoBound> {
    let ab = post_channel_covariance(v, channel)?;
    // the matrix route stays accurate when ν₊ ≈ ν₋, where the closed form
    // loses half its digits
    let nu = symplectic_eigenvalues(&ab)?;
    let (nu_plus, nu_minus) = (nu[0], nu[1]);
    let cond = homodyne_condition(&ab, 1, theta, strategy)?;
    let nu_cond = symplectic_eigenvalues(&cond)?[0];
    let chi = g_entropy(nu_plus)? + g_entropy(nu_minus)? - g_entropy(nu_cond)?;
    Ok(HolevoBound { chi, nu_plus, nu_minus, nu_cond })
}

pub fn secret_key_fraction(
    params: &ProtocolParams,
    channel: &ChannelModel,
    strategy: ConditioningStrategy,
) -> Result<KeyRateReport> {
    let i_ab = mutual_information(params, channel);
    let h = holevo_bound(params.v, channel, params.theta, strategy)?;
    let r = params.beta * i_ab - h.chi;
    Ok(KeyRateReport {
        i_ab,
        chi: h.chi,
        nu_plus: h.nu_plus,
        nu_minus: h.nu_minus,
        nu_cond: h.nu_cond,
        r,
        theta: params.theta,
        key_positive: r > 0.0,
    })
}

/// Mutual information read off the covariance pipeline: Bob's variance
/// along `theta` over its variance conditioned on Alice's heterodyne.
pub fn mutual_information_from_covariance(v: f64, channel: &ChannelModel, theta: f64) -> Result<f64> {
    let ab = post_channel_covariance(v, channel)?;
    let rotated = apply(&mode_rotation(theta, 1, 2)?, &ab)?;
    let marginal = rotated.entries()[(2, 2)];
    let conditional = heterodyne_condition(&rotated, 0)?.entries()[(0, 0)];
    Ok(0.5 * (marginal / conditional).log2())
}

/// Bob's quadrature variance from the covariance pipeline, `T(V-1) + 1 + ξ`.
pub fn bob_variance(v: f64, channel: &ChannelModel) -> Result<f64> {
    Ok(post_channel_covariance(v, channel)?.entries()[(2, 2)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Bob's frame angle, radians.
    Theta,
    /// Fibre length, km.
    Distance,
    V,
    Xi,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Self::Theta),
            "distance" => Ok(Self::Distance),
            "v" | "V" => Ok(Self::V),
            "xi" => Ok(Self::Xi),
            other => Err(Error::Argument(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub params: ProtocolParams,
    pub channel: ChannelModel,
    pub strategy: ConditioningStrategy,
    pub db_per_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub result: Result<KeyRateReport>,
}

fn sweep_point(axis: SweepAxis, value: f64, base: &SweepBase) -> Result<KeyRateReport> {
    let mut params = base.params;
    let mut channel = base.channel;
    match axis {
        SweepAxis::Theta => params = params.with_theta(value)?,
        SweepAxis::V => params = params.with_v(value)?,
        SweepAxis::Xi => channel = ChannelModel::new(channel.transmittance, value)?,
        SweepAxis::Distance => channel = ChannelModel::from_distance(value, base.db_per_km, channel.excess_noise)?,
    }
    secret_key_fraction(&params, &channel, base.strategy)
}

/// Evaluates every grid point independently, in parallel, returning results
/// in grid order. Out-of-domain points become per-point errors.
pub fn sweep(axis: SweepAxis, grid: &[f64], base: &SweepBase) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Argument("sweep grid is empty".into()));
    }
    Ok(grid.par_iter().map(|&value| SweepPoint { value, result: sweep_point(axis, value, base) }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ch(t: f64, xi: f64) -> ChannelModel {
        ChannelModel::new(t, xi).unwrap()
    }

    #[test]
    fn eve_variance_values() {
        assert_eq!(eve_variance(&ch(0.3, 0.0)).unwrap(), 1.0);
        assert_abs_diff_eq!(eve_variance(&ch(0.5, 0.05)).unwrap(), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(eve_variance(&ch(0.9, 0.02)).unwrap(), 1.2, epsilon = 1e-14);
        assert!(matches!(eve_variance(&ch(1.0, 0.01)), Err(Error::Domain(_))));
        assert_eq!(eve_variance(&ch(1.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelModel::new(0.0, 0.0).is_err());
        assert!(ChannelModel::new(1.01, 0.0).is_err());
        assert!(ChannelModel::new(0.5, -0.01).is_err());
        assert_abs_diff_eq!(
            ChannelModel::from_distance(25.0, 0.2, 0.0).unwrap().transmittance(),
            10f64.powf(-0.5),
            epsilon = 1e-15
        );
    }

    #[test]
    fn mutual_information_values() {
        let p = |v| ProtocolParams::new(v, 0.95, 0.0).unwrap();
        assert_eq!(mutual_information(&p(1.0), &ch(0.5, 0.05)), 0.0);
        assert_abs_diff_eq!(mutual_information(&p(3.0), &ch(1.0, 0.0)), 0.5 * 3f64.log2(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            mutual_information(&p(6.0), &ch(0.5, 0.05)),
            0.5 * (1.0 + 2.5 / 1.05f64).log2(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_angle_reduces_exactly() {
        let c = ch(0.5, 0.05);
        for th in [0.0, 0.3, -1.2, 1.5] {
            let a = mutual_information_two_angle(6.0, th, th, &c).unwrap();
            let b = mutual_information(&ProtocolParams::new(6.0, 1.0, 0.0).unwrap(), &c);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn two_angle_value_and_errors() {
        let c = ch(0.5, 0.05);
        // V' = 6 cos(π/3) = 3 → ½ log2(1 + 0.5 * 2 / 1.05)
        let got = mutual_information_two_angle(6.0, 0.0, std::f64::consts::FRAC_PI_3, &c).unwrap();
        assert_abs_diff_eq!(got, 0.5 * (1.0 + 1.0 / 1.05f64).log2(), epsilon = 1e-14);
        assert!(matches!(
            mutual_information_two_angle(6.0, std::f64::consts::FRAC_PI_2, 0.0, &c),
            Err(Error::Singular(_))
        ));
        assert!(matches!(mutual_information_two_angle(6.0, 0.0, 1.5, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn lossless_noiseless_has_no_leak() {
        let h = holevo_bound(5.0, &ch(1.0, 0.0), 0.8, ConditioningStrategy::Standard).unwrap();
        assert!(h.chi.abs() < 1e-10);
        assert_abs_diff_eq!(h.nu_plus, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(h.nu_cond, 1.0, epsilon = 1e-10);
        let rep = secret_key_fraction(
            &ProtocolParams::new(3.0, 1.0, 0.0).unwrap(),
            &ch(1.0, 0.0),
            ConditioningStrategy::Standard,
        )
        .unwrap();
        assert_abs_diff_eq!(rep.r, 0.5 * 3f64.log2(), epsilon = 1e-10);
    }

    #[test]
    fn zero_efficiency_gives_minus_chi() {
        let rep = secret_key_fraction(
            &ProtocolParams::new(6.0, 0.0, 0.2).unwrap(),
            &ch(0.5, 0.05),
            ConditioningStrategy::Standard,
        )
        .unwrap();
        assert_eq!(rep.r, -rep.chi);
        assert!(rep.r <= 0.0 && !rep.key_positive);
    }

    #[test]
    fn bob_variance_matches_channel_formula() {
        for (v, t, xi) in [(6.0, 0.5, 0.05), (3.0, 0.9, 0.02), (40.0, 0.05, 0.1), (2.0, 0.3, 0.0)] {
            let got = bob_variance(v, &ch(t, xi)).unwrap();
            assert_abs_diff_eq!(got, t * (v - 1.0) + 1.0 + xi, epsilon = 1e-10);
        }
    }

    #[test]
    fn closed_form_mutual_information_matches_covariance_route() {
        for (v, t, xi, th) in [(6.0, 0.5, 0.05, 0.0), (3.0, 0.9, 0.02, 1.0), (25.0, 0.1, 0.08, -2.3)] {
            let c = ch(t, xi);
            let closed = mutual_information(&ProtocolParams::new(v, 1.0, th).unwrap(), &c);
            let pipeline = mutual_information_from_covariance(v, &c, th).unwrap();
            assert_abs_diff_eq!(closed, pipeline, epsilon = 1e-9);
        }
    }

    #[test]
    fn key_fraction_decreases_with_noise() {
        let p = ProtocolParams::new(8.0, 0.95, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let r = secret_key_fraction(&p, &ch(0.6, 0.005 * k as f64), ConditioningStrategy::Standard).unwrap().r;
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn sweep_keeps_order_and_records_errors() {
        let base = SweepBase {
            params: ProtocolParams::new(6.0, 0.95, 0.0).unwrap(),
            channel: ch(0.5, 0.05),
            strategy: ConditioningStrategy::Standard,
            db_per_km: DEFAULT_FIBER_LOSS_DB_PER_KM,
        };
        let pts = sweep(SweepAxis::V, &[2.0, 0.5, 6.0], &base).unwrap();
        assert_eq!(pts.iter().map(|p| p.value).collect::<Vec<_>>(), vec![2.0, 0.5, 6.0]);
        assert!(pts[0].result.is_ok() && pts[1].result.is_err() && pts[2].result.is_ok());
        let single = sweep(SweepAxis::Theta, &[0.4], &base).unwrap();
        let direct = secret_key_fraction(&base.params.with_theta(0.4).unwrap(), &base.channel, base.strategy).unwrap();
        assert_eq!(single[0].result.as_ref().unwrap(), &direct);
        assert!(sweep(SweepAxis::Xi, &[], &base).is_err());
    }
}

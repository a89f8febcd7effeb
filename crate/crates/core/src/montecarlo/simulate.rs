use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attacks::{squeezed_covariance, IRAttackParams};
use crate::security::ChannelModel;

/// Samples of one constant-angle block. Alice's values are her Gaussian
/// modulation, Bob's are his homodyne outcomes along `theta_block`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub index: usize,
    pub theta_block: f64,
    pub alice_q: Vec<f64>,
    pub alice_p: Vec<f64>,
    pub bob_x: Vec<f64>,
}

impl SampleBlock {
    pub fn count(&self) -> usize {
        self.bob_x.len()
    }
}

/// States Eve injects into the channel: per-pulse displacement plus a
/// covariance shared by every pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ResentPulses {
    pub means: Vec<Vector2<f64>>,
    pub covariance: Matrix2<f64>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Intercept-resend on Alice's coherent states `(q, p)`: heterodyne them at
/// the channel input and replace each by a squeezed state from
/// [`crate::attacks::ir_resend_state`].
pub fn apply_ir_attack<R: Rng + ?Sized>(
    alice_q: &[f64],
    alice_p: &[f64],
    attack: &IRAttackParams,
    rng: &mut R,
) -> ResentPulses {
    let u = attack.frame();
    let g = attack.resend_gain();
    let sd = std::f64::consts::SQRT_2;
    let means = alice_q
        .iter()
        .zip(alice_p)
        .map(|(&q, &p)| {
            let raw_q = (q + sd * normal(rng)) / sd;
            let raw_p = (p + sd * normal(rng)) / sd;
            u * (g * (u.x * raw_q + u.y * raw_p))
        })
        .collect();
    ResentPulses { means, covariance: squeezed_covariance(attack.theta_e(), attack.squeezing_r()) }
}

/// Draw one block: Alice's modulation with variance `v_a` per quadrature,
/// the optional attack, the lossy noisy channel and Bob's homodyne along
/// `theta`. Draw order is fixed so a block depends only on its generator.
pub fn simulate_block<R: Rng + ?Sized>(
    index: usize,
    theta: f64,
    count: usize,
    v_a: f64,
    channel: &ChannelModel,
    attack: Option<&IRAttackParams>,
    rng: &mut R,
) -> SampleBlock {
    let sa = v_a.sqrt();
    let mut alice_q = Vec::with_capacity(count);
    let mut alice_p = Vec::with_capacity(count);
    for _ in 0..count {
        alice_q.push(sa * normal(rng));
        alice_p.push(sa * normal(rng));
    }
    let t = channel.transmittance();
    let st = t.sqrt();
    let sxi = channel.excess_noise().sqrt();
    let b = Vector2::new(theta.cos(), theta.sin());

    let bob_x = match attack {
        None => alice_q
            .iter()
            .zip(&alice_p)
            .map(|(&q, &p)| st * (b.x * q + b.y * p) + sxi * normal(rng) + normal(rng))
            .collect(),
        Some(a) => {
            let resent = apply_ir_attack(&alice_q, &alice_p, a, rng);
            let cov = resent.covariance * t + Matrix2::identity() * (1.0 - t);
            let sq = b.dot(&(cov * b)).sqrt();
            resent.means.iter().map(|m| st * b.dot(m) + sxi * normal(rng) + sq * normal(rng)).collect()
        }
    };
    SampleBlock { index, theta_block: theta, alice_q, alice_p, bob_x }
}

/// Alice's reference values projected on Bob's block angle, paired with
/// Bob's outcomes: `(cosθ q_A + sinθ p_A, x_B)`.
pub fn reconcile(block: &SampleBlock) -> Vec<(f64, f64)> {
    let (s, c) = block.theta_block.sin_cos();
    block.alice_q.iter().zip(&block.alice_p).zip(&block.bob_x).map(|((&q, &p), &x)| (c * q + s * p, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::ir_resend_moments;
    use crate::montecarlo::block_stream;

    fn moments(pairs: &[(f64, f64)]) -> (f64, f64, f64) {
        let n = pairs.len() as f64;
        let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let va = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>() / (n - 1.0);
        let vb = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>() / (n - 1.0);
        let cab = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / (n - 1.0);
        (va, vb, cab)
    }

    #[test]
    fn clean_block_moments() {
        let ch = ChannelModel::new(0.5, 0.05).unwrap();
        let n = 200_000;
        let blk = simulate_block(0, 0.9, n, 5.0, &ch, None, &mut block_stream(1, 0));
        assert_eq!(blk.count(), n);
        let (va, vb, cab) = moments(&reconcile(&blk));
        let nf = n as f64;
        // 3σ: variance sd ≈ V√(2/n), covariance sd ≈ √((Va Vb + C²)/n)
        assert!((va - 5.0).abs() < 3.0 * 5.0 * (2.0 / nf).sqrt());
        let vb_expect = 0.5 * 5.0 + 1.0 + 0.05;
        assert!((vb - vb_expect).abs() < 3.0 * vb_expect * (2.0 / nf).sqrt());
        let c_expect = 0.5f64.sqrt() * 5.0;
        assert!((cab - c_expect).abs() < 3.0 * ((5.0 * vb_expect + c_expect * c_expect) / nf).sqrt());
    }

    #[test]
    fn attacked_block_matches_analytic_moments() {
        let ch = ChannelModel::new(0.5, 0.05).unwrap();
        let attack = IRAttackParams::new(0.4, 10.0, std::f64::consts::SQRT_2).unwrap();
        let n = 200_000;
        let nf = n as f64;
        for theta_b in [0.4, 1.0] {
            let blk = simulate_block(3, theta_b, n, 5.0, &ch, Some(&attack), &mut block_stream(7, 3));
            let (_, vb, cab) = moments(&reconcile(&blk));
            let m = ir_resend_moments(5.0, &ch, &attack, theta_b);
            assert!((vb - m.var_bob).abs() < 3.0 * m.var_bob * (2.0 / nf).sqrt(), "{vb} vs {}", m.var_bob);
            let sd = ((5.0 * m.var_bob + m.cov_alice_bob.powi(2)) / nf).sqrt();
            assert!((cab - m.cov_alice_bob).abs() < 3.0 * sd, "{cab} vs {}", m.cov_alice_bob);
        }
    }

    #[test]
    fn resent_means_lie_on_eve_frame() {
        let attack = IRAttackParams::new(1.1, 3.0, 1.0).unwrap();
        let q = [1.0, -2.0, 0.5];
        let p = [0.3, 0.7, -1.5];
        let out = apply_ir_attack(&q, &p, &attack, &mut block_stream(0, 0));
        let u = attack.frame();
        for m in &out.means {
            assert!((m.x * u.y - m.y * u.x).abs() < 1e-12);
        }
        assert!((out.covariance.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconcile_projects_on_block_angle() {
        let blk = SampleBlock {
            index: 0,
            theta_block: std::f64::consts::FRAC_PI_2,
            alice_q: vec![1.0],
            alice_p: vec![2.0],
            bob_x: vec![3.0],
        };
        let r = reconcile(&blk);
        assert!((r[0].0 - 2.0).abs() < 1e-15);
        assert_eq!(r[0].1, 3.0);
    }
}

//! Subcommand implementations. Each returns its outputs fully rendered;
//! nothing touches the filesystem here.

use std::f64::consts::FRAC_PI_2;

use cvqkd::attacks::{
    detection_report, ir_resend_moments, p_bob_aggregate, AngleCombination, IRAttackParams, InfoForm,
};
use cvqkd::gaussian::ConditioningStrategy;
use cvqkd::montecarlo::{
    run, run_with_samples, wrap_angle, write_samples_csv, DriftModel, RunConfig, RunReport, TransmittanceEstimator,
    Verdict,
};
use cvqkd::security::{
    mutual_information_two_angle, secret_key_fraction, sweep, transmittance_at, ChannelModel, KeyRateReport,
    ProtocolParams, SweepAxis, SweepBase,
};
use cvqkd::Error;

use crate::svg::line_plot;
use crate::table::{flag, num, text, Table};
use crate::{
    AttackArgs, AxisArg, ChannelArgs, CliError, CombinationArg, Command, CommonArgs, EstimatorArg, FigureArgs,
    FigureId, InfoFormArg, KeyrateArgs, MontecarloArgs, Output, StrategyArg, SweepArgs,
};

type CliResult<T> = Result<T, CliError>;

fn usage(field: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::Usage(format!("{field}: {e}"))
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn finite(field: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("{field}: must be finite, got {x}")))
    }
}

fn channel(t: f64, xi: f64) -> CliResult<ChannelModel> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(CliError::Usage(format!("t: transmittance must lie in (0, 1], got {t}")));
    }
    ChannelModel::new(t, xi).map_err(usage("xi"))
}

fn resolve_channel(c: &ChannelArgs, t_needed: bool, xi_needed: bool) -> CliResult<ChannelModel> {
    let xi = match c.xi {
        Some(x) => x,
        None if xi_needed => return Err(CliError::Usage("xi: required flag --xi is missing".into())),
        None => 0.0,
    };
    let t = match (c.t, c.distance) {
        (Some(t), _) => t,
        (None, Some(d)) => {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(CliError::Usage(format!("distance: must be finite and >= 0, got {d}")));
            }
            if !(c.db_per_km >= 0.0) {
                return Err(CliError::Usage(format!("db-per-km: must be >= 0, got {}", c.db_per_km)));
            }
            transmittance_at(d, c.db_per_km)
        }
        (None, None) if t_needed => {
            return Err(CliError::Usage("t: one of --t or --distance is required".into()));
        }
        (None, None) => 1.0,
    };
    channel(t, xi)
}

fn protocol(v: f64, beta: f64, theta_deg: f64) -> CliResult<ProtocolParams> {
    ProtocolParams::new(v, 1.0, 0.0).map_err(usage("v"))?;
    ProtocolParams::new(1.0, beta, 0.0).map_err(usage("beta"))?;
    ProtocolParams::new(v, beta, finite("theta", theta_deg)?.to_radians()).map_err(usage("theta"))
}

fn strategy(s: StrategyArg) -> ConditioningStrategy {
    match s {
        StrategyArg::Standard => ConditioningStrategy::Standard,
        StrategyArg::Diagonal => ConditioningStrategy::Diagonal,
    }
}

/// `n` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n).map(|i| if i == n - 1 { to } else { from + (to - from) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

fn grid(from: f64, to: f64, points: usize) -> CliResult<Vec<f64>> {
    finite("from", from)?;
    finite("to", to)?;
    if points == 0 {
        return Err(CliError::Usage("points: must be >= 1".into()));
    }
    Ok(linspace(from, to, points))
}

/// Inclusive grid `0, step, 2·step, …, end` in degrees.
fn degree_grid(end: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() || step > end {
        return Err(CliError::Usage(format!("step: must lie in (0, {end}], got {step}")));
    }
    let n = (end / step).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if end - g[n] > 1e-9 * end {
        g.push(end);
    }
    Ok(g)
}

const RATE_COLUMNS: [&str; 6] = ["i_ab", "chi", "r", "nu_plus", "nu_minus", "nu_cond"];

fn rate_cells(r: &KeyRateReport) -> Vec<String> {
    [r.i_ab, r.chi, r.r, r.nu_plus, r.nu_minus, r.nu_cond].into_iter().map(num).collect()
}

fn csv_output(common: &CommonArgs, table: &Table) -> Output {
    Output { path: common.output.clone(), contents: table.to_csv() }
}

pub fn keyrate(a: &KeyrateArgs) -> CliResult<Vec<Output>> {
    let ch = resolve_channel(&a.channel, true, true)?;
    let params = protocol(a.v, a.beta, a.theta)?;
    let rep = secret_key_fraction(&params, &ch, strategy(a.strategy)).map_err(runtime)?;
    let mut t =
        Table::new(["v", "t", "xi", "beta", "theta_deg"].into_iter().chain(RATE_COLUMNS).chain(["key_positive"]));
    let mut row = vec![num(a.v), num(ch.transmittance()), num(ch.excess_noise()), num(a.beta), num(a.theta)];
    row.extend(rate_cells(&rep));
    row.push(flag(rep.key_positive));
    t.push(row);
    Ok(vec![csv_output(&a.common, &t)])
}

pub fn sweep_cmd(a: &SweepArgs) -> CliResult<Vec<Output>> {
    let values = grid(a.from, a.to, a.points)?;
    let (axis, column) = match a.axis {
        AxisArg::Theta => (SweepAxis::Theta, "theta_deg"),
        AxisArg::Distance => (SweepAxis::Distance, "distance_km"),
        AxisArg::V => (SweepAxis::V, "v"),
        AxisArg::Xi => (SweepAxis::Xi, "xi"),
    };
    let v = match (a.v, a.axis) {
        (Some(v), _) => v,
        (None, AxisArg::V) => 1.0,
        (None, _) => return Err(CliError::Usage("v: required flag --v is missing".into())),
    };
    if !(a.channel.db_per_km >= 0.0) {
        return Err(CliError::Usage(format!("db-per-km: must be >= 0, got {}", a.channel.db_per_km)));
    }
    let ch = resolve_channel(&a.channel, a.axis != AxisArg::Distance, a.axis != AxisArg::Xi)?;
    let base = SweepBase {
        params: protocol(v, a.beta, a.theta)?,
        channel: ch,
        strategy: strategy(a.strategy),
        db_per_km: a.channel.db_per_km,
    };
    let internal: Vec<f64> =
        if a.axis == AxisArg::Theta { values.iter().map(|d| d.to_radians()).collect() } else { values.clone() };
    let points = sweep(axis, &internal, &base).map_err(runtime)?;

    let mut t = Table::new([column].into_iter().chain(RATE_COLUMNS).chain(["status"]));
    let mut r_col = Vec::with_capacity(points.len());
    for (x, p) in values.iter().zip(&points) {
        let mut row = vec![num(*x)];
        match &p.result {
            Ok(rep) => {
                row.extend(rate_cells(rep));
                row.push("ok".into());
                r_col.push(rep.r);
            }
            Err(e) => {
                row.extend(RATE_COLUMNS.iter().map(|_| num(f64::NAN)));
                row.push(text(&e.to_string()));
                r_col.push(f64::NAN);
            }
        }
        t.push(row);
    }
    let mut out = vec![csv_output(&a.common, &t)];
    if let Some(p) = &a.svg {
        out.push(Output {
            path: Some(p.clone()),
            contents: line_plot("key fraction", column, &values, &[("r", &r_col)]),
        });
    }
    Ok(out)
}

/// Run configuration from command-line arguments, validated.
pub fn run_config(a: &MontecarloArgs) -> CliResult<RunConfig> {
    let ch = channel(a.t, a.xi)?;
    let attack = if a.attack {
        finite("theta-e", a.theta_e)?;
        cvqkd::attacks::squeezing_r_from_db(a.squeezing_db).map_err(usage("squeezing-db"))?;
        Some(IRAttackParams::new(a.theta_e.to_radians(), a.squeezing_db, a.resend_gain).map_err(usage("resend-gain"))?)
    } else {
        None
    };
    let drift = DriftModel {
        theta0: finite("theta0", a.theta0)?.to_radians(),
        rate: finite("drift-rate", a.drift_rate)?.to_radians(),
        walk_sigma: finite("walk-sigma", a.walk_sigma)?.to_radians(),
        block_size: a.block_size,
    };
    let cfg = RunConfig {
        v_a: a.v_a,
        channel: ch,
        drift,
        n_pulses: a.n_pulses,
        estimation_fraction: a.estimation_fraction,
        beta: a.beta,
        seed: a.common.seed,
        attack,
        detection_threshold: a.threshold,
        estimator: match a.estimator {
            EstimatorArg::SquaredCovariance => TransmittanceEstimator::SquaredCovariance,
            EstimatorArg::Regression => TransmittanceEstimator::RegressionSlope,
        },
    };
    cfg.validate().map_err(|e| CliError::Usage(format!("montecarlo: {e}")))?;
    Ok(cfg)
}

fn summary_table(rep: &RunReport) -> Table {
    let cfg = &rep.config;
    let mut t = Table::new([
        "seed",
        "n_pulses",
        "n_blocks",
        "estimation_pulses",
        "t_hat",
        "xi_hat",
        "var_bob",
        "cov_alice_bob",
        "t_hat_exceeds_one",
        "xi_clamped",
        "i_ab",
        "chi",
        "r",
        "r_configured",
        "verdict",
        "status",
    ]);
    let e = &rep.estimation;
    let configured = ProtocolParams::new(cfg.v_a + 1.0, cfg.beta, 0.0)
        .and_then(|p| secret_key_fraction(&p, &cfg.channel, ConditioningStrategy::Standard))
        .map(|r| r.r)
        .unwrap_or(f64::NAN);
    let (rate, clamped, status) = match &rep.key_rate {
        Ok(k) => ([k.report.i_ab, k.report.chi, k.report.r], k.xi_clamped, "ok".to_string()),
        Err(msg) => ([f64::NAN; 3], e.xi_hat < 0.0, text(msg)),
    };
    let verdict = match rep.verdict {
        Verdict::Attack => "attack",
        Verdict::NoAttack => "no_attack",
    };
    let mut row = vec![
        cfg.seed.to_string(),
        cfg.n_pulses.to_string(),
        rep.blocks.len().to_string(),
        e.n_used.to_string(),
        num(e.t_hat),
        num(e.xi_hat),
        num(e.var_bob),
        num(e.cov_alice_bob),
        flag(e.t_hat_exceeds_one),
        flag(clamped),
    ];
    row.extend(rate.into_iter().map(num));
    row.extend([num(configured), verdict.into(), status]);
    t.push(row);
    t
}

fn blocks_table(rep: &RunReport) -> Table {
    let mut t = Table::new(["block", "theta", "count", "used_for_estimation", "var_bob", "cov_alice_bob"]);
    for b in &rep.blocks {
        t.push(vec![
            b.index.to_string(),
            num(wrap_angle(b.theta)),
            b.count.to_string(),
            flag(b.used_for_estimation),
            num(b.var_bob),
            num(b.cov_alice_bob),
        ]);
    }
    t
}

pub fn montecarlo(a: &MontecarloArgs) -> CliResult<Vec<Output>> {
    let cfg = run_config(a)?;
    let mut extra = Vec::new();
    let rep = if let Some(path) = &a.samples_output {
        let (rep, blocks) = run_with_samples(&cfg).map_err(runtime)?;
        let mut buf = Vec::new();
        write_samples_csv(&blocks, &mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
        let contents = String::from_utf8(buf).map_err(|e| CliError::Runtime(e.to_string()))?;
        extra.push(Output { path: Some(path.clone()), contents });
        rep
    } else {
        run(&cfg).map_err(runtime)?
    };
    if let Some(path) = &a.blocks_output {
        extra.push(Output { path: Some(path.clone()), contents: blocks_table(&rep).to_csv() });
    }
    let mut out = vec![csv_output(&a.common, &summary_table(&rep))];
    out.extend(extra);
    Ok(out)
}

pub fn attack(a: &AttackArgs) -> CliResult<Vec<Output>> {
    let theta_b = grid(a.from, a.to, a.points)?;
    let ch = channel(a.t, a.xi)?;
    if !(a.v_a >= 0.0) {
        return Err(CliError::Usage(format!("v-a: must be >= 0, got {}", a.v_a)));
    }
    if !(a.v_b >= 0.0) || !a.v_b.is_finite() {
        return Err(CliError::Usage(format!("v-b: must be finite and >= 0, got {}", a.v_b)));
    }
    cvqkd::attacks::squeezing_r_from_db(a.squeezing_db).map_err(usage("squeezing-db"))?;
    let params = IRAttackParams::new(finite("theta-e", a.theta_e)?.to_radians(), a.squeezing_db, a.resend_gain)
        .map_err(usage("resend-gain"))?;
    let form = match a.info_form {
        InfoFormArg::CosSquared => InfoForm::CosSquared,
        InfoFormArg::AbsCos => InfoForm::AbsCos,
    };
    let comb = match a.angle_combination {
        CombinationArg::Difference => AngleCombination::Difference,
        CombinationArg::Sum => AngleCombination::Sum,
    };
    let mut t =
        Table::new(["theta_b_deg", "eve_info_normalized", "p_detect", "p_clamped", "var_bob", "t_hat", "xi_hat"]);
    let mut probs = Vec::with_capacity(theta_b.len());
    for &deg in &theta_b {
        let tb = deg.to_radians();
        let d = detection_report(params.theta_e(), tb, a.v_b, comb, form);
        let m = ir_resend_moments(a.v_a, &ch, &params, tb);
        probs.push(d.p_detect);
        t.push(vec![
            num(deg),
            num(d.eve_info_normalized),
            num(d.p_detect),
            flag(d.clamped),
            num(m.var_bob),
            num(m.t_hat),
            num(m.xi_hat),
        ]);
    }
    let p_bob = p_bob_aggregate(&probs).map_err(runtime)?;
    eprintln!("p_bob_aggregate = {}", num(p_bob));
    Ok(vec![csv_output(&a.common, &t)])
}

pub fn figure(a: &FigureArgs) -> CliResult<Vec<Output>> {
    type Series = Vec<(&'static str, Vec<f64>)>;
    let (table, x, series, title, x_label): (Table, Vec<f64>, Series, &str, &str) = match a.id {
        FigureId::Fig3 => {
            let ch = channel(a.t, a.xi)?;
            ProtocolParams::new(a.v, 1.0, 0.0).map_err(usage("v"))?;
            let g = degree_grid(90.0, a.step)?;
            let mut t = Table::new(["delta_theta_deg", "i_ab"]);
            let mut ys = Vec::with_capacity(g.len());
            for &deg in &g {
                // π/2 exactly: the effective variance has left the physical range
                let rad = if deg == 90.0 { FRAC_PI_2 } else { deg.to_radians() };
                let i_ab = match mutual_information_two_angle(a.v, 0.0, rad, &ch) {
                    Ok(x) => x,
                    Err(Error::Domain(_)) => 0.0,
                    Err(e) => return Err(runtime(e)),
                };
                ys.push(i_ab);
                t.push(vec![num(deg), num(i_ab)]);
            }
            (t, g, vec![("i_ab", ys)], "mutual information vs frame mismatch", "delta_theta_deg")
        }
        FigureId::Fig4 => {
            let te = finite("theta-e", a.theta_e)?.to_radians();
            if !(a.v_b >= 0.0) || !a.v_b.is_finite() {
                return Err(CliError::Usage(format!("v-b: must be finite and >= 0, got {}", a.v_b)));
            }
            let g = degree_grid(180.0, a.step)?;
            let mut t = Table::new(["theta_b_deg", "eve_info_normalized", "p_detect"]);
            let (mut info, mut prob) = (Vec::new(), Vec::new());
            for &deg in &g {
                let d =
                    detection_report(te, deg.to_radians(), a.v_b, AngleCombination::Difference, InfoForm::CosSquared);
                info.push(d.eve_info_normalized);
                prob.push(d.p_detect);
                t.push(vec![num(deg), num(d.eve_info_normalized), num(d.p_detect)]);
            }
            (
                t,
                g,
                vec![("eve_info_normalized", info), ("p_detect", prob)],
                "intercept-resend vs Bob's angle",
                "theta_b_deg",
            )
        }
    };
    let mut out = vec![csv_output(&a.common, &table)];
    if let Some(p) = &a.svg {
        let refs: Vec<(&str, &[f64])> = series.iter().map(|(n, v)| (*n, v.as_slice())).collect();
        out.push(Output { path: Some(p.clone()), contents: line_plot(title, x_label, &x, &refs) });
    }
    Ok(out)
}

/// Runs `cmd`, returning its outputs and common settings.
pub fn execute(cmd: &Command) -> CliResult<(Vec<Output>, &CommonArgs)> {
    match cmd {
        Command::Keyrate(a) => Ok((keyrate(a)?, &a.common)),
        Command::Sweep(a) => Ok((sweep_cmd(a)?, &a.common)),
        Command::Montecarlo(a) => Ok((montecarlo(a)?, &a.common)),
        Command::Attack(a) => Ok((attack(a)?, &a.common)),
        Command::Figure(a) => Ok((figure(a)?, &a.common)),
    }
}

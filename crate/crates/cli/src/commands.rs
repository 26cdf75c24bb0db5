use crate::config::{Format, RunConfig, SweepAxis};
use crate::error::CliError;
use crate::output::{csv, json, listing, sig12, sig4, table};
use catlink::experiment::{
    accidental_rate, counting_rates, max_range, monte_carlo_run, optimize_phi, ExperimentError,
    RunSpec,
};
use catlink::fock::{oracle_protocol_prob, FockError, MAX_ORACLE_ALPHA_PRIME};
use catlink::protocols::{closed_form_probability, evaluate_with, VisibilityForm};
use catlink::{attenuate, Channel, DetectionModel, Params, Protocol};
use rayon::prelude::*;
use serde::Serialize;

/// Text for stdout plus the failure, if any, that sets the exit code.
pub struct Output {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

fn assumptions(cfg: &RunConfig) -> String {
    format!(
        "assumed: coincidence window {} s, unit detector efficiency, {} detection",
        sig4(cfg.detector.coincidence_window_s),
        match cfg.pipeline.detection {
            DetectionModel::SinglePhoton => "single-photon",
            DetectionModel::Click => "click (any photon number)",
        }
    )
}

fn protocol_label(p: Protocol) -> &'static str {
    match p {
        Protocol::Usd4 => "usd4 (four-fold)",
        Protocol::Usd2 => "usd2 (two-fold)",
    }
}

#[derive(Serialize)]
struct RatesRow {
    protocol: Protocol,
    alpha: f64,
    phi_rad: f64,
    sigma1_rad: f64,
    sigma2_rad: f64,
    distance_km_total: f64,
    alpha_prime_sq: f64,
    n_lost: f64,
    p_success: f64,
    p_max: f64,
    p_min: f64,
    visibility: f64,
    chsh_s: f64,
    r_max_hz: f64,
    r_min_hz: f64,
    accidental_hz: f64,
}

fn rates_row(cfg: &RunConfig) -> Result<RatesRow, CliError> {
    let p = &cfg.params;
    let r = evaluate_with(cfg.protocol, p, &cfg.channel, &cfg.pipeline);
    let att = attenuate(p.alpha, &cfg.channel);
    let rates = counting_rates(r.p_max, r.p_min, cfg.source_rate_hz)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let acc = accidental_rate(&cfg.detector, cfg.protocol.fold(), cfg.source_rate_hz)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(RatesRow {
        protocol: cfg.protocol,
        alpha: p.alpha,
        phi_rad: p.phi,
        sigma1_rad: p.sigma1,
        sigma2_rad: p.sigma2,
        distance_km_total: cfg.distance_km_total,
        alpha_prime_sq: att.alpha_prime_sq(),
        n_lost: att.n_lost,
        p_success: r.p_success,
        p_max: r.p_max,
        p_min: r.p_min,
        visibility: r.visibility,
        chsh_s: r.chsh_s,
        r_max_hz: rates.r_max,
        r_min_hz: rates.r_min,
        accidental_hz: acc,
    })
}

pub fn rates(cfg: &RunConfig) -> Result<Output, CliError> {
    if !cfg.params.in_protocol_regime() {
        eprintln!("warning: |phi| >= pi/4 is outside the protocol regime");
    }
    let row = rates_row(cfg)?;
    let zero_note = "phi = 0: every beam is in the zero-net-phase state, which the displacement sends to vacuum, so nothing is detected";
    if row.phi_rad == 0.0 && cfg.format != Format::Table {
        eprintln!("note: {zero_note}");
    }
    let text = match cfg.format {
        Format::Json => json(&row)?,
        Format::Csv => {
            let headers = [
                "protocol", "alpha", "phi_rad", "sigma1_rad", "sigma2_rad", "distance_km_total",
                "alpha_prime_sq", "n_lost", "p_success", "p_max", "p_min", "visibility", "S",
                "R_max", "R_min", "accidental_hz",
            ];
            let nums = [
                row.alpha, row.phi_rad, row.sigma1_rad, row.sigma2_rad, row.distance_km_total,
                row.alpha_prime_sq, row.n_lost, row.p_success, row.p_max, row.p_min,
                row.visibility, row.chsh_s, row.r_max_hz, row.r_min_hz, row.accidental_hz,
            ];
            let mut cells = vec![row.protocol.to_string()];
            cells.extend(nums.iter().map(|&x| sig12(x)));
            csv(&headers, &[cells])?
        }
        Format::Table => {
            let mut out = listing(&[
                ("protocol", protocol_label(row.protocol).to_owned()),
                ("alpha", sig4(row.alpha)),
                ("phi_rad", sig4(row.phi_rad)),
                ("sigma1 - sigma2 (rad)", sig4(row.sigma1_rad - row.sigma2_rad)),
                (
                    "distance",
                    format!("{} km total ({} km per arm)", sig4(row.distance_km_total), sig4(row.distance_km_total / 2.0)),
                ),
                ("|alpha'|^2", sig4(row.alpha_prime_sq)),
                ("N_L (photons lost per arm)", sig4(row.n_lost)),
                ("p_success", sig4(row.p_success)),
                ("p_max", sig4(row.p_max)),
                ("p_min", sig4(row.p_min)),
                ("R_max (counts/s)", sig4(row.r_max_hz)),
                ("R_min (counts/s)", sig4(row.r_min_hz)),
                ("visibility", sig4(row.visibility)),
                ("S (CHSH)", sig4(row.chsh_s)),
                ("accidentals (counts/s)", sig4(row.accidental_hz)),
            ]);
            if row.phi_rad == 0.0 {
                out += &format!("note: {zero_note}\n");
            }
            out + &assumptions(cfg) + "\n"
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    p_success: f64,
    p_max: f64,
    p_min: f64,
    visibility: f64,
    chsh_s: f64,
    r_max_hz: f64,
    r_min_hz: f64,
}

pub fn sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let axis: SweepAxis = match cfg.sweep_axes[..] {
        [one] => one,
        [] => return Err(CliError::Usage("sweep needs one axis ([sweep] section or --axis)".into())),
        _ => {
            return Err(CliError::Usage(format!(
                "sweep takes exactly one axis, got {}",
                cfg.sweep_axes.len()
            )))
        }
    };
    let rows: Vec<SweepRow> = axis
        .values()
        .par_iter()
        .map(|&value| {
            let c = cfg.with_variable(axis.variable, value)?;
            let r = evaluate_with(c.protocol, &c.params, &c.channel, &c.pipeline);
            Ok(SweepRow {
                value,
                p_success: r.p_success,
                p_max: r.p_max,
                p_min: r.p_min,
                visibility: r.visibility,
                chsh_s: r.chsh_s,
                r_max_hz: r.p_max * c.source_rate_hz,
                r_min_hz: r.p_min * c.source_rate_hz,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let name = axis.variable.name();
    let headers = [name, "p_success", "p_max", "p_min", "visibility", "S", "R_max", "R_min"];
    let cells = |fmt: fn(f64) -> String| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                [r.value, r.p_success, r.p_max, r.p_min, r.visibility, r.chsh_s, r.r_max_hz, r.r_min_hz]
                    .iter()
                    .map(|&x| fmt(x))
                    .collect()
            })
            .collect()
    };
    let text = match cfg.format {
        Format::Csv => csv(&headers, &cells(sig12))?,
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                variable: &'a str,
                protocol: Protocol,
                rows: &'a [SweepRow],
            }
            json(&Doc {
                variable: name,
                protocol: cfg.protocol,
                rows: &rows,
            })?
        }
        Format::Table => table(&headers, &cells(sig4)),
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct OracleCheck {
    index: usize,
    protocol: Protocol,
    alpha_prime: f64,
    n_lost: f64,
    phi_rad: f64,
    delta_sigma_rad: f64,
    oracle: Option<f64>,
    analytic: f64,
    abs_error: Option<f64>,
    pass: bool,
    error: Option<String>,
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Deterministic small-amplitude points from an additive low-discrepancy
/// sequence: `|α′| ∈ [0.5, 3]`, `N_L ∈ [0, 3]`, `ϕ ∈ [0.05, 0.6]`.
fn suite_points(n: usize) -> Vec<(Params, Channel)> {
    let g = [0.754_877_666_246_693, 0.569_840_290_998_053, 0.438_283_725_576_338, 0.318_309_886_183_791];
    (1..=n)
        .map(|i| {
            let t = i as f64;
            let ap = 0.5 + 2.5 * frac(t * g[0]);
            let n_lost = 3.0 * frac(t * g[1]);
            let phi = 0.05 + 0.55 * frac(t * g[2]);
            let ds = 2.0 * std::f64::consts::PI * frac(t * g[3]);
            let alpha = (ap * ap + n_lost).sqrt();
            let ch = Channel::from_transmittance(ap * ap / (alpha * alpha)).expect("eta in (0, 1]");
            (Params::new(alpha, phi, ds, 0.0).expect("alpha > 0"), ch)
        })
        .collect()
}

pub fn oracle(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut points = Vec::new();
    if cfg.alpha_given {
        let ap = attenuate(cfg.params.alpha, &cfg.channel).alpha_prime;
        if ap > MAX_ORACLE_ALPHA_PRIME {
            return Err(CliError::OracleRefused(format!(
                "|alpha'| = {} at {} km total exceeds the truncation budget; recommended max |alpha'| = {}",
                sig4(ap),
                sig4(cfg.distance_km_total),
                MAX_ORACLE_ALPHA_PRIME
            )));
        }
        points.push((cfg.params, cfg.channel));
    }
    points.extend(suite_points(cfg.oracle_points));
    let jobs: Vec<(usize, Protocol, Params, Channel)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, &(p, ch))| [Protocol::Usd2, Protocol::Usd4].map(|w| (i, w, p, ch)))
        .collect();
    let checks: Vec<OracleCheck> = jobs
        .par_iter()
        .map(|&(index, protocol, p, ch)| {
            let att = attenuate(p.alpha, &ch);
            let analytic = closed_form_probability(protocol, &p, &ch, VisibilityForm::Exact);
            let got: Result<f64, FockError> = oracle_protocol_prob(&p, &ch, protocol);
            let abs_error = got.as_ref().ok().map(|o| (o - analytic).abs());
            OracleCheck {
                index,
                protocol,
                alpha_prime: att.alpha_prime,
                n_lost: att.n_lost,
                phi_rad: p.phi,
                delta_sigma_rad: p.delta_sigma(),
                oracle: got.as_ref().ok().copied(),
                analytic,
                abs_error,
                pass: abs_error.is_some_and(|e| e <= cfg.oracle_tolerance),
                error: got.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let failed = checks.iter().filter(|c| !c.pass).count();

    let headers = [
        "index", "protocol", "alpha_prime", "n_lost", "phi_rad", "delta_sigma_rad", "oracle",
        "analytic", "abs_error", "verdict",
    ];
    let cells = |fmt: fn(f64) -> String| -> Vec<Vec<String>> {
        checks
            .iter()
            .map(|c| {
                vec![
                    c.index.to_string(),
                    c.protocol.to_string(),
                    fmt(c.alpha_prime),
                    fmt(c.n_lost),
                    fmt(c.phi_rad),
                    fmt(c.delta_sigma_rad),
                    c.oracle.map_or_else(|| "-".to_owned(), fmt),
                    fmt(c.analytic),
                    c.abs_error.map_or_else(|| "-".to_owned(), |e| format!("{e:.3e}")),
                    if c.pass { "pass".to_owned() } else { "FAIL".to_owned() },
                ]
            })
            .collect()
    };
    let text = match cfg.format {
        Format::Csv => csv(&headers, &cells(sig12))?,
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                tolerance: f64,
                failed: usize,
                checks: &'a [OracleCheck],
            }
            json(&Doc {
                tolerance: cfg.oracle_tolerance,
                failed,
                checks: &checks,
            })?
        }
        Format::Table => {
            let mut out = table(&headers, &cells(sig4));
            for c in checks.iter().filter(|c| c.error.is_some()) {
                out += &format!("check {} {}: {}\n", c.index, c.protocol, c.error.as_deref().unwrap_or(""));
            }
            out + &format!(
                "{} of {} checks within {:e} absolute\n",
                checks.len() - failed,
                checks.len(),
                cfg.oracle_tolerance
            )
        }
    };
    Ok(Output {
        text,
        failure: (failed > 0).then_some(CliError::OracleFailed(failed)),
    })
}

#[derive(Serialize)]
struct PlanReport {
    status: &'static str,
    protocol: Protocol,
    rate_floor_hz: f64,
    max_distance_km_total: f64,
    limiting_factor: String,
    rate_max_hz: f64,
    visibility: f64,
    chsh_s: f64,
    margin_over_2: f64,
    optimal_phi_rad: f64,
    optimal_p_max: f64,
    optimum_constrained: bool,
}

#[derive(Serialize)]
struct Infeasible {
    status: &'static str,
    protocol: Protocol,
    rate_floor_hz: f64,
    best_rate_hz: f64,
}

pub fn plan(cfg: &RunConfig) -> Result<Output, CliError> {
    let floor = cfg
        .rate_floor_hz
        .ok_or_else(|| CliError::Usage("plan needs a rate floor (run.rate_floor_hz or --rate-floor-hz)".into()))?;
    let result = max_range(&cfg.params, cfg.loss_db_per_km, floor, cfg.source_rate_hz, cfg.protocol);
    let plan = match result {
        Ok(plan) => plan,
        Err(ExperimentError::Infeasible { floor, best_rate }) => {
            let rep = Infeasible {
                status: "infeasible",
                protocol: cfg.protocol,
                rate_floor_hz: floor,
                best_rate_hz: best_rate,
            };
            let text = match cfg.format {
                Format::Json => json(&rep)?,
                Format::Csv => csv(
                    &["status", "protocol", "rate_floor_hz", "best_rate_hz"],
                    &[vec![rep.status.into(), rep.protocol.to_string(), sig12(floor), sig12(best_rate)]],
                )?,
                Format::Table => listing(&[
                    ("status", "infeasible".into()),
                    ("protocol", protocol_label(cfg.protocol).into()),
                    ("rate floor (counts/s)", sig4(floor)),
                    ("best reachable rate (counts/s)", sig4(best_rate)),
                ]),
            };
            return Ok(Output {
                text,
                failure: Some(CliError::Infeasible(format!(
                    "no distance reaches {floor} counts/s"
                ))),
            });
        }
        Err(e) => return Err(CliError::Validation(e.to_string())),
    };
    let at = Channel::from_total_distance(cfg.loss_db_per_km, plan.total_distance_km)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let opt = optimize_phi(cfg.params.alpha, &at, cfg.protocol)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let rep = PlanReport {
        status: "feasible",
        protocol: cfg.protocol,
        rate_floor_hz: floor,
        max_distance_km_total: plan.total_distance_km,
        limiting_factor: plan.limiting_factor.to_string(),
        rate_max_hz: plan.rate_max_hz,
        visibility: plan.visibility,
        chsh_s: plan.chsh_s,
        margin_over_2: plan.chsh_s - 2.0,
        optimal_phi_rad: opt.phi,
        optimal_p_max: opt.p_max,
        optimum_constrained: opt.constrained,
    };
    let text = match cfg.format {
        Format::Json => json(&rep)?,
        Format::Csv => {
            let headers = [
                "status", "protocol", "rate_floor_hz", "max_distance_km_total", "limiting_factor",
                "rate_max_hz", "visibility", "S", "margin_over_2", "optimal_phi_rad",
                "optimal_p_max", "optimum_constrained",
            ];
            let row = vec![
                rep.status.into(),
                rep.protocol.to_string(),
                sig12(rep.rate_floor_hz),
                sig12(rep.max_distance_km_total),
                rep.limiting_factor.clone(),
                sig12(rep.rate_max_hz),
                sig12(rep.visibility),
                sig12(rep.chsh_s),
                sig12(rep.margin_over_2),
                sig12(rep.optimal_phi_rad),
                sig12(rep.optimal_p_max),
                rep.optimum_constrained.to_string(),
            ];
            csv(&headers, &[row])?
        }
        Format::Table => listing(&[
            ("protocol", protocol_label(rep.protocol).into()),
            ("rate floor (counts/s)", sig4(floor)),
            ("max range (km total)", sig4(rep.max_distance_km_total)),
            ("limiting factor", rep.limiting_factor.clone()),
            ("R_max at range (counts/s)", sig4(rep.rate_max_hz)),
            ("visibility at range", sig4(rep.visibility)),
            ("S at range", sig4(rep.chsh_s)),
            ("margin over S = 2", sig4(rep.margin_over_2)),
            (
                "optimal phi at range (rad)",
                format!(
                    "{}{}",
                    sig4(rep.optimal_phi_rad),
                    if rep.optimum_constrained { " (on visibility boundary)" } else { "" }
                ),
            ),
            ("p_max at optimal phi", sig4(rep.optimal_p_max)),
        ]),
    };
    Ok(Output::ok(text))
}

pub fn montecarlo(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = RunSpec {
        duration_s: cfg.duration_s,
        source_rate_hz: cfg.source_rate_hz,
        seed: cfg.seed,
        bin_s: cfg.bin_s,
    };
    let r = monte_carlo_run(&cfg.params, &cfg.channel, &cfg.detector, &spec, cfg.protocol)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if r.estimated_visibility.is_none() {
        eprintln!("warning: no counts in {} s; no visibility estimate", cfg.duration_s);
    }
    let estimate = match (r.estimated_visibility, r.stderr_visibility) {
        (Some(v), Some(se)) => format!("{} ± {}", sig4(v), sig4(se)),
        _ => "none".into(),
    };
    let chsh = r
        .chsh_estimate()
        .map_or_else(|| "none".into(), |(s, se)| format!("{} ± {}", sig4(s), sig4(se)));
    let summary = listing(&[
        ("protocol", protocol_label(cfg.protocol).into()),
        ("seed", r.seed.to_string()),
        ("duration (s)", sig4(cfg.duration_s)),
        ("counts at sigma1 - sigma2 = pi", r.counts_max.to_string()),
        ("counts at sigma1 - sigma2 = 0", r.counts_min.to_string()),
        ("visibility estimate", estimate),
        ("expected visibility", sig4(r.expected_visibility)),
        ("S estimate", chsh),
        ("S > 2 at 3 sigma", if r.violates_chsh_at(3.0) { "yes" } else { "no" }.into()),
    ]) + &assumptions(cfg)
        + "\n";
    let text = match cfg.format {
        Format::Json => json(&r)?,
        Format::Csv => {
            eprint!("{summary}");
            let rows: Vec<Vec<String>> = r
                .bins
                .iter()
                .map(|b| {
                    let start = b.index as f64 * r.bin_s;
                    vec![
                        b.index.to_string(),
                        sig12(start),
                        sig12((start + r.bin_s).min(cfg.duration_s)),
                        b.counts_max.to_string(),
                        b.counts_min.to_string(),
                    ]
                })
                .collect();
            csv(&["bin", "start_s", "end_s", "counts_max", "counts_min"], &rows)?
        }
        Format::Table => summary,
    };
    Ok(Output::ok(text))
}

use std::fmt::Write as _;

use mixgeo::convex::{decompose_log, slides_freely, summand_residual};
use mixgeo::geom2::{
    self, canonical_link, composite, curvature_plus, curvature_quotient, exp_curve_verdict, fundamentality,
    mixability_constant_binary, validate_link, weight, weight_std, MixabilityReport,
};
use mixgeo::geomn::{exp_projection_convexity, mixability_constant_multi, pencil_eta};
use mixgeo::losses::{check_proper, fairness_check, PropernessVerdict, Witness};
use mixgeo::numerics::Limit;
use mixgeo::{Error, Loss};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Quantity, RunConfig};
use crate::format::{fmt17, fmt_g, num, nums};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Result of a command: a JSON report plus its renderings.
pub struct Outcome {
    pub report: Value,
    pub text: String,
    /// Native CSV body; commands without one are flattened from `report`.
    pub csv: Option<String>,
    pub code: i32,
    /// Diagnostic for stderr on a nonzero exit.
    pub diagnostic: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotProper(_)
            | Error::NotProperHere { .. }
            | Error::NotFair(_)
            | Error::NotMixable
            | Error::ResidualImproper(_)
            | Error::NotASummand(_) => EXIT_PRECONDITION,
            _ => EXIT_EVAL,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<Outcome, CmdError>;

fn header(command: &str, cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(1));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), cfg.echo());
    m
}

fn check(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "no"
    }
}

fn g(v: f64) -> String {
    fmt_g(v, 10)
}

fn limit_json(l: Limit) -> Value {
    num(l.value())
}

fn witness_json(w: &Witness) -> Value {
    json!({
        "point": nums(&w.point),
        "reason": format!("{:?}", w.reason).to_lowercase(),
        "alignment": num(w.alignment),
        "min_eig": num(w.min_eig),
    })
}

fn properness_json(v: &PropernessVerdict) -> Value {
    json!({
        "proper": v.proper,
        "worst_alignment": num(v.worst_alignment),
        "min_second_order": num(v.min_second_order),
        "witness": v.witness.as_ref().map(witness_json),
    })
}

fn mixability_json(r: &MixabilityReport) -> Value {
    let routes: serde_json::Map<String, Value> =
        r.routes.iter().map(|(route, v)| (route.as_str().to_string(), num(*v))).collect();
    json!({
        "eta_star": num(r.eta_star),
        "argmin": nums(&r.argmin),
        "route": r.route.as_str(),
        "refined": r.refined,
        "boundary": r.boundary,
        "routes": routes,
    })
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// The binary routes plus the pencil (any n), reconciled into one report
/// whose `routes` lists every value obtained.
fn eta_star(h: &Loss, cfg: &RunConfig) -> Result<MixabilityReport, Error> {
    let pencil = mixability_constant_multi(h, &cfg.grid)?;
    if h.n() != 2 {
        return Ok(pencil);
    }
    let mut r = mixability_constant_binary(h, &cfg.grid)?;
    r.routes.push((geom2::Route::Pencil, pencil.eta_star));
    Ok(r)
}

fn max_route_delta(r: &MixabilityReport) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in r.routes.iter().enumerate() {
        for b in &r.routes[i + 1..] {
            d = d.max(rel_dev(a.1, b.1));
        }
    }
    d
}

fn witness_text(v: &PropernessVerdict) -> String {
    match &v.witness {
        Some(w) => format!(
            "witness t = ({}) [{:?}, alignment {}, min eigenvalue {}]",
            w.point.iter().map(|x| g(*x)).collect::<Vec<_>>().join(", "),
            w.reason,
            g(w.alignment),
            g(w.min_eig)
        ),
        None => "no witness".into(),
    }
}

pub fn analyze(cfg: &RunConfig) -> CmdResult {
    let h = &cfg.loss;
    let mut report = header("analyze", cfg);
    let mut text = format!("loss {} (n = {}) against base {}\n", h.name(), h.n(), cfg.base.name());
    let proper = check_proper(h, &cfg.grid)?;
    report.insert("properness".into(), properness_json(&proper));
    writeln!(text, "proper: {}", check(proper.proper)).unwrap();
    if !proper.proper {
        let diag = format!("{} is not proper: {}", h.name(), witness_text(&proper));
        writeln!(text, "  {}", witness_text(&proper)).unwrap();
        return Ok(Outcome {
            report: Value::Object(report),
            text,
            csv: None,
            code: EXIT_PRECONDITION,
            diagnostic: Some(diag),
        });
    }

    let fair = if h.n() == 2 {
        let f = fairness_check(h)?;
        report.insert(
            "fairness".into(),
            json!({"fair": f.fair, "limit_outcome1": limit_json(f.limit_outcome1), "limit_outcome2": limit_json(f.limit_outcome2)}),
        );
        writeln!(text, "fair: {}", check(f.fair)).unwrap();
        Some(f.fair)
    } else {
        report.insert("fairness".into(), Value::Null);
        None
    };

    let mix = eta_star(h, cfg)?;
    let delta = max_route_delta(&mix);
    let mut mj = mixability_json(&mix);
    mj["max_route_delta"] = num(delta);
    report.insert("mixability".into(), mj);
    writeln!(
        text,
        "eta* = {} ({} routes agree to {})",
        g(mix.eta_star),
        mix.routes.len(),
        fmt_g(delta, 3)
    )
    .unwrap();

    if fair == Some(true) {
        let f = fundamentality(h, &cfg.base, &cfg.grid)?;
        report.insert(
            "fundamentality".into(),
            json!({
                "b1": num(f.b1),
                "b2": num(f.b2),
                "b1_inv": limit_json(f.b1_inv),
                "b2_inv": limit_json(f.b2_inv),
                "sup_quotient": num(f.sup_quotient),
                "inf_quotient": num(f.inf_quotient),
                "fundamental": f.fundamental,
            }),
        );
        writeln!(
            text,
            "fundamental: {} (B1 = {}, B2 = {}; boundary quotient limits {}, {})",
            check(f.fundamental),
            g(f.b1),
            g(f.b2),
            g(f.b1_inv.value()),
            g(f.b2_inv.value())
        )
        .unwrap();
    } else {
        report.insert("fundamentality".into(), Value::Null);
        writeln!(text, "fundamental: not evaluated (needs a fair binary loss)").unwrap();
    }

    if mix.eta_star > 0.0 {
        let s = slides_freely(h, &cfg.base, mix.eta_star, &cfg.grid)?;
        report.insert(
            "slide".into(),
            json!({"eta": num(s.eta), "slides_freely": s.slides_freely, "convexity_margin": num(s.convexity_margin), "worst_point": nums(&s.worst_point)}),
        );
        writeln!(
            text,
            "slides freely at eta*: {} (margin {})",
            check(s.slides_freely),
            fmt_g(s.convexity_margin, 3)
        )
        .unwrap();
    } else {
        report.insert("slide".into(), Value::Null);
    }
    Ok(Outcome { report: Value::Object(report), text, csv: None, code: EXIT_OK, diagnostic: None })
}

pub fn profile(cfg: &RunConfig, quantity: Quantity) -> CmdResult {
    let h = cfg.loss.in_standard_chart();
    if quantity != Quantity::PencilMinEig && h.n() != 2 {
        return Err(CmdError::usage(format!("quantity {} needs n = 2, loss has n = {}", quantity.as_str(), h.n())));
    }
    let base = &cfg.base;
    let eval = |x: &[f64]| -> Result<f64, Error> {
        match quantity {
            Quantity::Curvature => Ok(curvature_plus(&h, x[0])?.kappa_plus),
            Quantity::Weight => weight_std(&h, x[0]),
            Quantity::Quotient => Ok(curvature_quotient(&h, base, x[0])?.quotient),
            Quantity::PencilMinEig => pencil_eta(&h, x),
        }
    };
    let values: Vec<Result<f64, Error>> = cfg.grid.points.par_iter().map(|p| eval(p.coords())).collect();
    let mut rows = Vec::with_capacity(values.len());
    for (p, v) in cfg.grid.points.iter().zip(values) {
        match v {
            Ok(v) => rows.push((p.coords().to_vec(), v)),
            Err(e) => {
                let at = p.coords().iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
                return Err(CmdError { code: EXIT_EVAL, message: format!("evaluation failed at ({at}): {e}") });
            }
        }
    }
    let mut columns: Vec<String> = if h.n() == 2 {
        vec!["t".into()]
    } else {
        (1..h.n()).map(|i| format!("s{i}")).collect()
    };
    columns.push("value".into());

    let mut csv = columns.join(",");
    csv.push('\n');
    let mut text = format!("{} of {} on {} grid points\n", quantity.as_str(), h.name(), rows.len());
    text.push_str(&columns.iter().map(|c| format!("{c:>22}")).collect::<String>());
    text.push('\n');
    for (x, v) in &rows {
        for c in x {
            csv.push_str(&fmt17(*c));
            csv.push(',');
            write!(text, "{:>22}", fmt17(*c)).unwrap();
        }
        csv.push_str(&fmt17(*v));
        csv.push('\n');
        writeln!(text, "{:>22}", fmt17(*v)).unwrap();
    }
    let mut report = header("profile", cfg);
    report.insert("quantity".into(), json!(quantity.as_str()));
    report.insert("columns".into(), json!(columns));
    report.insert(
        "rows".into(),
        Value::Array(
            rows.iter()
                .map(|(x, v)| {
                    let mut r: Vec<f64> = x.clone();
                    r.push(*v);
                    nums(&r)
                })
                .collect(),
        ),
    );
    Ok(Outcome { report: Value::Object(report), text, csv: Some(csv), code: EXIT_OK, diagnostic: None })
}

struct Check {
    name: &'static str,
    passed: bool,
    delta: f64,
    tolerance: f64,
    detail: String,
}

impl Check {
    fn json(&self) -> Value {
        json!({"name": self.name, "passed": self.passed, "delta": num(self.delta), "tolerance": num(self.tolerance), "detail": self.detail})
    }
}

const LADDER: [f64; 6] = [0.5, 0.9, 0.99, 1.01, 1.1, 1.5];
/// Composite weights of canonical links must equal one to this accuracy.
const CANONICAL_WEIGHT_TOL: f64 = 1e-4;
/// Relative band around eta* treated as the boundary, where convexity holds.
const BOUNDARY_BAND: f64 = 1e-6;

pub fn verify(cfg: &RunConfig) -> CmdResult {
    let h = &cfg.loss;
    let proper = check_proper(h, &cfg.grid)?;
    let mut report = header("verify", cfg);
    report.insert("properness".into(), properness_json(&proper));
    if !proper.proper {
        let w = witness_text(&proper);
        return Ok(Outcome {
            report: Value::Object(report),
            text: format!("precondition failed: {} is not proper; {w}\n", h.name()),
            csv: None,
            code: EXIT_PRECONDITION,
            diagnostic: Some(format!("{} is not proper: {w}", h.name())),
        });
    }
    let mut checks = Vec::new();
    let mix = eta_star(h, cfg)?;
    let es = mix.eta_star;
    let log = mixgeo::losses::builtin_n("log", h.n())?;

    if h.n() == 2 {
        let delta = max_route_delta(&mix);
        checks.push(Check {
            name: "route_agreement",
            passed: delta <= geom2::ROUTE_TOL,
            delta,
            tolerance: geom2::ROUTE_TOL,
            detail: format!("{} routes, eta* = {}", mix.routes.len(), g(es)),
        });

        let ts = cfg.grid.scalars();
        let devs: Vec<Result<f64, Error>> = ts
            .par_iter()
            .map(|&t| curvature_quotient(h, &cfg.base, t).map(|q| rel_dev(q.quotient, q.weight_ratio)))
            .collect();
        let mut delta: f64 = 0.0;
        for d in devs {
            delta = delta.max(d?);
        }
        checks.push(Check {
            name: "quotient_weight_duality",
            passed: delta <= geom2::WEIGHT_TOL,
            delta,
            tolerance: geom2::WEIGHT_TOL,
            detail: format!("kappa ratio against weight ratio versus {}", cfg.base.name()),
        });
    }

    if es > 0.0 {
        let mut mismatches = Vec::new();
        for f in LADDER {
            let eta = f * es;
            let expected = f <= 1.0;
            let bridge = slides_freely(h, &log, eta, &cfg.grid)?;
            let a_km = exp_projection_convexity(h, eta, &cfg.grid)?;
            if bridge.slides_freely != expected || a_km.convex != expected {
                mismatches.push(format!(
                    "{f}: bridge {}, A_km {}, pencil {expected}",
                    bridge.slides_freely, a_km.convex
                ));
            }
        }
        checks.push(Check {
            name: "bridge_pencil_equivalence",
            passed: mismatches.is_empty(),
            delta: mismatches.len() as f64,
            tolerance: 0.0,
            detail: if mismatches.is_empty() {
                format!("verdicts agree on {} multiples of eta*", LADDER.len())
            } else {
                mismatches.join("; ")
            },
        });

        let etas = match cfg.eta {
            Some(e) => vec![e],
            None => vec![0.9 * es, es, 1.1 * es],
        };
        let mut bad = Vec::new();
        for eta in &etas {
            let expected = *eta <= es * (1.0 + BOUNDARY_BAND);
            let convex = if h.n() == 2 {
                exp_curve_verdict(h, *eta, &cfg.grid)?.convex
            } else {
                exp_projection_convexity(h, *eta, &cfg.grid)?.convex
            };
            if convex != expected {
                bad.push(format!("eta {}: convex {convex}, expected {expected}", g(*eta)));
            }
        }
        checks.push(Check {
            name: "exp_convexity",
            passed: bad.is_empty(),
            delta: bad.len() as f64,
            tolerance: 0.0,
            detail: if bad.is_empty() {
                format!(
                    "E_eta verdicts match eta <= eta* at eta = {}",
                    etas.iter().map(|e| g(*e)).collect::<Vec<_>>().join(", ")
                )
            } else {
                bad.join("; ")
            },
        });
    }

    if h.n() == 2 {
        let link = canonical_link(h)?;
        let c = composite(h, &link)?;
        let lo = link.eval(cfg.grid.margin)?;
        let hi = link.eval(1.0 - cfg.grid.margin)?;
        let samples = 1001;
        let ws: Vec<Result<f64, Error>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                weight(&c, v, None).map(|w| (w.w - 1.0).abs())
            })
            .collect();
        let mut delta: f64 = 0.0;
        for w in ws {
            delta = delta.max(w?);
        }
        checks.push(Check {
            name: "canonical_link_weight",
            passed: delta <= CANONICAL_WEIGHT_TOL,
            delta,
            tolerance: CANONICAL_WEIGHT_TOL,
            detail: format!("composite weight on {samples} points of psi([margin, 1 - margin])"),
        });
    }

    let all = checks.iter().all(|c| c.passed);
    let mut text = format!("verify {} (n = {}), eta* = {}\n", h.name(), h.n(), g(es));
    for c in &checks {
        writeln!(
            text,
            "[{}] {}: delta {} (tol {}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_g(c.delta, 3),
            fmt_g(c.tolerance, 3),
            c.detail
        )
        .unwrap();
    }
    report.insert("eta_star".into(), num(es));
    report.insert("checks".into(), Value::Array(checks.iter().map(Check::json).collect()));
    report.insert("all_passed".into(), json!(all));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    Ok(Outcome {
        report: Value::Object(report),
        text,
        csv: None,
        code: if all { EXIT_OK } else { EXIT_INVARIANT },
        diagnostic: (!all).then(|| format!("failed checks: {}", failed.join(", "))),
    })
}

pub fn canonical(cfg: &RunConfig) -> CmdResult {
    let h = &cfg.loss;
    if h.n() != 2 {
        return Err(CmdError::usage(format!("canonical-link needs n = 2, loss has n = {}", h.n())));
    }
    let link = canonical_link(h)?;
    let verdict = validate_link(h, &link, 1001)?;
    let mut rows = Vec::new();
    for t in cfg.grid.scalars() {
        let j = link.jet(t)?;
        rows.push([t, j.v, j.d1]);
    }
    let mut csv = String::from("t,psi,dpsi\n");
    for r in &rows {
        writeln!(csv, "{},{},{}", fmt17(r[0]), fmt17(r[1]), fmt17(r[2])).unwrap();
    }
    let (tl, th) = link.t_range();
    let (vl, vh) = link.v_range();
    let mut report = header("canonical-link", cfg);
    report.insert(
        "link".into(),
        json!({
            "label": link.label(),
            "knots": link.knots().0.len(),
            "t_range": nums(&[tl, th]),
            "v_range": nums(&[vl, vh]),
        }),
    );
    report.insert(
        "validation".into(),
        json!({
            "valid": verdict.valid,
            "max_identity_error": num(verdict.max_identity_error),
            "max_roundtrip_error": num(verdict.max_roundtrip_error),
            "worst_v": num(verdict.worst_v),
        }),
    );
    report.insert("columns".into(), json!(["t", "psi", "dpsi"]));
    report.insert("rows".into(), Value::Array(rows.iter().map(|r| nums(r)).collect()));
    let psi_half = link.eval(0.5)?;
    let text = format!(
        "canonical link of {}: {} knots, psi range [{}, {}], psi(1/2) = {}\nvalid: {} (identity error {}, round trip {})\n",
        h.name(),
        link.knots().0.len(),
        g(vl),
        g(vh),
        g(psi_half),
        check(verdict.valid),
        fmt_g(verdict.max_identity_error, 3),
        fmt_g(verdict.max_roundtrip_error, 3)
    );
    Ok(Outcome {
        report: Value::Object(report),
        text,
        csv: Some(csv),
        code: if verdict.valid { EXIT_OK } else { EXIT_INVARIANT },
        diagnostic: (!verdict.valid).then(|| "canonical link failed validation".to_string()),
    })
}

pub fn decompose(cfg: &RunConfig) -> CmdResult {
    let d = decompose_log(&cfg.loss, &cfg.grid)?;
    let mut report = header("decompose", cfg);
    let exprs: Vec<String> = d.residual.partials().iter().map(|e| e.to_string()).collect();
    report.insert("eta_star".into(), num(d.eta_star));
    report.insert("mixability".into(), mixability_json(&d.mixability));
    report.insert(
        "residual".into(),
        json!({
            "name": d.residual.name(),
            "exprs": exprs,
            "degenerate": d.degenerate,
            "min_value": num(d.min_value),
            "worst_alignment": num(d.worst_alignment),
            "min_curvature": num(d.min_curvature),
            "equality_points": Value::Array(d.equality_points.iter().map(|p| nums(p)).collect()),
        }),
    );
    let mut text = format!(
        "log = {} * {} + residual\nresidual: {}\n",
        g(d.eta_star),
        cfg.loss.name(),
        if d.degenerate { "degenerate (identically zero)".to_string() } else { exprs.join(" | ") }
    );
    writeln!(
        text,
        "min value {}, worst alignment {}, min curvature {}, {} equality point(s)",
        g(d.min_value),
        fmt_g(d.worst_alignment, 3),
        g(d.min_curvature),
        d.equality_points.len()
    )
    .unwrap();
    Ok(Outcome { report: Value::Object(report), text, csv: None, code: EXIT_OK, diagnostic: None })
}

pub fn slide_check(cfg: &RunConfig) -> CmdResult {
    let h = &cfg.loss;
    let eta = match cfg.eta {
        Some(e) => e,
        None => eta_star(h, cfg)?.eta_star,
    };
    if !(eta > 0.0) {
        return Err(Error::NotMixable.into());
    }
    let s = slides_freely(h, &cfg.base, eta, &cfg.grid)?;
    let mut report = header("slide-check", cfg);
    report.insert(
        "slide".into(),
        json!({"eta": num(s.eta), "slides_freely": s.slides_freely, "convexity_margin": num(s.convexity_margin), "worst_point": nums(&s.worst_point)}),
    );
    let mut text = format!(
        "spr({} * {}) slides freely inside spr({}): {} (margin {} at p = ({}))\n",
        g(eta),
        h.name(),
        cfg.base.name(),
        check(s.slides_freely),
        fmt_g(s.convexity_margin, 3),
        s.worst_point.iter().map(|x| g(*x)).collect::<Vec<_>>().join(", ")
    );
    if s.slides_freely {
        let r = summand_residual(&cfg.base, h, eta, &cfg.grid)?;
        report.insert(
            "summand".into(),
            json!({
                "segments_checked": r.segments_checked,
                "max_convexity_violation": num(r.max_convexity_violation),
                "boundary_points": Value::Array(r.boundary_points.iter().map(|p| nums(p)).collect()),
            }),
        );
        writeln!(
            text,
            "residual summand: {} segments checked, max convexity violation {}",
            r.segments_checked,
            fmt_g(r.max_convexity_violation, 3)
        )
        .unwrap();
    } else {
        report.insert("summand".into(), Value::Null);
    }
    Ok(Outcome { report: Value::Object(report), text, csv: None, code: EXIT_OK, diagnostic: None })
}

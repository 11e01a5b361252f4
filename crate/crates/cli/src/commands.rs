use serde_json::{json, Value};
use weylmean::catalog::{self, in_dyadic_block, is_square, CatalogEntry};
use weylmean::classify::{dichotomy_report, Verdict};
use weylmean::density::{
    banach_lower_density, banach_upper_density, lower_density, separation_set, upper_density, DensityEstimate,
    Indicator, SubsetIndicator,
};
use weylmean::group::{AmenableGroup, FolnerFamily, GroupElement};
use weylmean::oracle::SeparationOracle;
use weylmean::pseudometric::{
    banach, besicovitch, integral_besicovitch, sup_fiber_weyl, weyl, EstimatorConfig, PseudometricEstimate,
};
use weylmean::rds::RandomDynamicalSystem;
use weylmean::torus::PhasePoint;

use crate::config::{Kind, RunConfig, Target};
use crate::output::{csv_field, num, table, Report};
use crate::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

fn system_only(cfg: &RunConfig, command: &str) -> Result<(Option<CatalogEntry>, RandomDynamicalSystem), CliError> {
    match cfg.resolve()? {
        Target::System { entry, rds } => Ok((entry, rds)),
        Target::Synthetic(_) => Err(CliError::Usage(format!("`{command}` needs a system, not a synthetic oracle"))),
    }
}

fn require_valid(rds: &RandomDynamicalSystem) -> Result<(), CliError> {
    let report = rds.validate();
    if report.passed() {
        return Ok(());
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.detail.clone()).collect();
    Err(weylmean::Error::Invalid(failed.join("; ")).into())
}

pub fn validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let (_, rds) = system_only(cfg, "validate")?;
    let report = rds.validate();
    let words = report.relation_words_checked;
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
                num(c.worst_residual),
                c.detail.clone(),
            ]
        })
        .collect();
    let mut text = table(&["axiom", "status", "worst_residual", "detail"], rows);
    text.push_str(&format!(
        "\nrelation words checked: {words} (length <= {})\nresult: {}\n",
        weylmean::rds::RELATION_WORD_LENGTH,
        if report.passed() { "all axioms pass" } else { "validation FAILED" }
    ));
    let mut csv = String::from("axiom,passed,worst_residual,max_word_length,relation_words\n");
    for c in &report.checks {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name,
            c.passed,
            c.worst_residual,
            weylmean::rds::RELATION_WORD_LENGTH,
            words
        ));
    }
    Ok(Report {
        text,
        result: json!({ "passed": report.passed(), "worst_residual": report.worst_residual(), "report": report }),
        csv: vec![("validate.csv".into(), csv)],
        exit: if report.passed() { EXIT_OK } else { EXIT_INVALID },
    })
}

struct EstimateRow {
    pair: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    kind: Kind,
    estimate: PseudometricEstimate,
}

/// Splits runs of `x` then `y` coordinates into pairs; one entry may hold several pairs.
fn split_pairs(entries: &[Vec<f64>], dim: usize) -> Result<Vec<(PhasePoint, PhasePoint)>, CliError> {
    let mut out = Vec::new();
    for raw in entries {
        if raw.is_empty() || raw.len() % (2 * dim) != 0 {
            return Err(CliError::Usage(format!(
                "pairs on T^{dim} take {} coordinates each (x then y), got {}",
                2 * dim,
                raw.len()
            )));
        }
        for c in raw.chunks(2 * dim) {
            out.push((PhasePoint::new(c[..dim].to_vec())?, PhasePoint::new(c[dim..].to_vec())?));
        }
    }
    Ok(out)
}

pub fn estimate(cfg: &RunConfig) -> Result<Report, CliError> {
    let est = &cfg.estimator;
    let mut rows = Vec::new();
    match cfg.resolve()? {
        Target::System { rds, .. } => {
            require_valid(&rds)?;
            if cfg.estimate.pairs.is_empty() {
                return Err(CliError::Usage("no pairs given (use --pair or [estimate] pairs)".into()));
            }
            let kinds = if cfg.estimate.kinds.is_empty() { Kind::FOR_SYSTEMS.to_vec() } else { cfg.estimate.kinds.clone() };
            let family = FolnerFamily::boxes(rds.group().clone());
            for (i, (x, y)) in split_pairs(&cfg.estimate.pairs, rds.dim())?.into_iter().enumerate() {
                let oracle = rds.separation_oracle(&x, &y)?;
                for &kind in &kinds {
                    let estimate = match kind {
                        Kind::Besicovitch => besicovitch(&oracle, &family, est)?,
                        Kind::Banach => banach(&oracle, &family, est)?,
                        Kind::Weyl => weyl(&oracle, &family, est)?,
                        Kind::FiberWeyl => sup_fiber_weyl(&rds, &x, &y, &family, est)?,
                        Kind::Integral => integral_besicovitch(&rds, &x, &y, &family, est)?,
                    };
                    rows.push(EstimateRow { pair: i, x: x.coords().to_vec(), y: y.coords().to_vec(), kind, estimate });
                }
            }
        }
        Target::Synthetic(oracle) => {
            if !cfg.estimate.pairs.is_empty() {
                return Err(CliError::Usage("synthetic oracles take no pairs".into()));
            }
            let kinds = if cfg.estimate.kinds.is_empty() { Kind::FOR_ORACLES.to_vec() } else { cfg.estimate.kinds.clone() };
            let family = FolnerFamily::boxes(oracle.group().clone());
            for kind in kinds {
                let estimate = match kind {
                    Kind::Besicovitch => besicovitch(&oracle, &family, est)?,
                    Kind::Banach => banach(&oracle, &family, est)?,
                    Kind::Weyl => weyl(&oracle, &family, est)?,
                    Kind::FiberWeyl | Kind::Integral => {
                        return Err(CliError::Usage("fiber-weyl and integral need a system".into()))
                    }
                };
                rows.push(EstimateRow { pair: 0, x: Vec::new(), y: Vec::new(), kind, estimate });
            }
        }
    }

    let text_rows = rows
        .iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                r.pair.to_string(),
                kind_name(r.kind).into(),
                num(e.value),
                e.n_max.to_string(),
                e.m_max.to_string(),
                e.search_radius.to_string(),
                e.attained_window.to_string(),
                e.attained_translate.to_string(),
            ]
        })
        .collect();
    let text = table(&["pair", "kind", "value", "n_max", "m_max", "radius", "window", "translate"], text_rows);

    let mut csv = String::from("pair,x,y,kind,value,n_max,m_max,radius,attained_window,attained_translate\n");
    let mut trace = String::from("pair,kind,window,value,n_max,m_max,radius\n");
    for r in &rows {
        let e = &r.estimate;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.pair,
            csv_field(&coords(&r.x)),
            csv_field(&coords(&r.y)),
            kind_name(r.kind),
            num(e.value),
            e.n_max,
            e.m_max,
            e.search_radius,
            e.attained_window,
            csv_field(&e.attained_translate.to_string())
        ));
        for &(n, v) in &e.trace {
            trace.push_str(&format!(
                "{},{},{n},{},{},{},{}\n",
                r.pair,
                kind_name(r.kind),
                num(v),
                e.n_max,
                e.m_max,
                e.search_radius
            ));
        }
    }
    let result: Vec<Value> = rows
        .iter()
        .map(|r| {
            let e = &r.estimate;
            json!({
                "pair": r.pair, "x": r.x, "y": r.y, "kind": r.kind, "value": e.value,
                "n_max": e.n_max, "m_max": e.m_max, "radius": e.search_radius,
                "attained_window": e.attained_window, "attained_translate": e.attained_translate.to_string(),
            })
        })
        .collect();
    Ok(Report {
        text,
        result: json!({ "estimates": result }),
        csv: vec![("estimate.csv".into(), csv), ("estimate_trace.csv".into(), trace)],
        exit: EXIT_OK,
    })
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Besicovitch => "besicovitch",
        Kind::Banach => "banach",
        Kind::Weyl => "weyl",
        Kind::FiberWeyl => "fiber-weyl",
        Kind::Integral => "integral",
    }
}

fn coords(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

type Predicate = Box<dyn Fn(&GroupElement) -> bool + Send + Sync>;

fn free_sum(rank: usize) -> impl Fn(&GroupElement) -> i64 {
    move |g| g.coords()[..rank].iter().sum()
}

fn first_coord(group: &AmenableGroup, name: &str) -> Result<(), CliError> {
    if group.rank() != 1 {
        return Err(CliError::Usage(format!("indicator {name:?} needs a group of rank 1, got {group}")));
    }
    Ok(())
}

/// Named subsets. Parity and residues use the sum of the free coordinates.
fn named_indicator(spec: &str, group: &AmenableGroup) -> Result<Predicate, CliError> {
    let rank = group.rank();
    let bad = |msg: &str| CliError::Usage(format!("indicator {spec:?}: {msg}"));
    let p: Predicate = match spec {
        "all" => Box::new(|_| true),
        "empty" => Box::new(|_| false),
        "evens" => {
            let s = free_sum(rank);
            Box::new(move |g| s(g).rem_euclid(2) == 0)
        }
        "squares" => {
            first_coord(group, spec)?;
            Box::new(|g| is_square(g.coords()[0]))
        }
        "dyadic" => {
            first_coord(group, spec)?;
            Box::new(|g| in_dyadic_block(g.coords()[0]))
        }
        "nonnegative" => {
            first_coord(group, spec)?;
            Box::new(|g| g.coords()[0] >= 0)
        }
        _ => {
            if let Some(rest) = spec.strip_prefix("residues:") {
                let (m, rs) = rest.split_once(':').ok_or_else(|| bad("expected residues:M:r1,r2,..."))?;
                let m: i64 = m.parse().map_err(|_| bad("bad modulus"))?;
                if m < 1 {
                    return Err(bad("modulus must be positive"));
                }
                let rs: Vec<i64> = rs
                    .split(',')
                    .map(|r| r.trim().parse::<i64>().map(|r| r.rem_euclid(m)))
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("bad residue"))?;
                let s = free_sum(rank);
                Box::new(move |g| rs.contains(&s(g).rem_euclid(m)))
            } else if let Some(alpha) = spec.strip_prefix("sturmian:") {
                first_coord(group, spec)?;
                let alpha: f64 = alpha.parse().map_err(|_| bad("bad rotation number"))?;
                if !(0.0..1.0).contains(&alpha) {
                    return Err(bad("rotation number must lie in [0, 1)"));
                }
                Box::new(move |g| (g.coords()[0] as f64 * alpha).rem_euclid(1.0) < alpha)
            } else {
                return Err(bad("unknown indicator"));
            }
        }
    };
    Ok(p)
}

fn densities<E: SubsetIndicator + ?Sized>(set: &E, est: &EstimatorConfig) -> Result<Vec<DensityEstimate>, CliError> {
    let family = FolnerFamily::boxes(set.group().clone());
    Ok(vec![
        banach_lower_density(set, &family, est.m_max, est.search_radius)?,
        lower_density(set, &family, est.n_max)?,
        upper_density(set, &family, est.n_max)?,
        banach_upper_density(set, &family, est.m_max, est.search_radius)?,
    ])
}

pub fn density(cfg: &RunConfig) -> Result<Report, CliError> {
    let est = &cfg.estimator;
    est.validate()?;
    if cfg.density.indicators.is_empty() {
        return Err(CliError::Usage("no indicators given (use --indicator or [density] indicators)".into()));
    }
    let group: AmenableGroup = cfg.density.group.parse()?;
    let mut rows: Vec<(String, DensityEstimate)> = Vec::new();
    for spec in &cfg.density.indicators {
        let out = if let Some(eps) = spec.strip_prefix("separation:") {
            let eps: f64 = eps.parse().map_err(|_| CliError::Usage(format!("bad threshold in {spec:?}")))?;
            let (_, rds) = system_only(cfg, "density separation:")?;
            require_valid(&rds)?;
            let [(x, y)] = split_pairs(&cfg.estimate.pairs, rds.dim())?.try_into().map_err(|_| {
                CliError::Usage("separation indicators need exactly one pair".into())
            })?;
            densities(&separation_set(rds.separation_oracle(&x, &y)?, eps)?, est)?
        } else {
            densities(&Indicator::new(group.clone(), named_indicator(spec, &group)?), est)?
        };
        rows.extend(out.into_iter().map(|d| (spec.clone(), d)));
    }

    let truncation = |d: &DensityEstimate| match d.kind.as_str() {
        "upper" | "lower" => (est.n_max, "-".to_string()),
        _ => (est.m_max, est.search_radius.to_string()),
    };
    let text_rows = rows
        .iter()
        .map(|(spec, d)| {
            let (w, r) = truncation(d);
            vec![
                spec.clone(),
                d.kind.as_str().into(),
                num(d.value),
                w.to_string(),
                r,
                d.attained_window.to_string(),
                d.attained_translate.to_string(),
            ]
        })
        .collect();
    let text = table(&["indicator", "kind", "value", "window_max", "radius", "window", "translate"], text_rows);
    let mut csv = String::from("indicator,kind,value,n_max,m_max,radius,attained_window,attained_translate\n");
    for (spec, d) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(spec),
            d.kind.as_str(),
            num(d.value),
            est.n_max,
            est.m_max,
            est.search_radius,
            d.attained_window,
            csv_field(&d.attained_translate.to_string())
        ));
    }
    let result: Vec<Value> = rows
        .iter()
        .map(|(spec, d)| {
            json!({
                "indicator": spec, "kind": d.kind.as_str(), "value": d.value,
                "n_max": est.n_max, "m_max": est.m_max, "radius": est.search_radius,
                "attained_window": d.attained_window, "attained_translate": d.attained_translate.to_string(),
            })
        })
        .collect();
    Ok(Report { text, result: json!({ "densities": result }), csv: vec![("density.csv".into(), csv)], exit: EXIT_OK })
}

pub fn classify(cfg: &RunConfig) -> Result<Report, CliError> {
    let (entry, rds) = system_only(cfg, "classify")?;
    require_valid(&rds)?;
    let ccfg = cfg.classifier.to_config(&cfg.estimator, cfg.seed);
    let report = dichotomy_report(&rds, &ccfg)?;
    let est = &ccfg.estimator;

    let mut text = format!("verdict: {} ({})\n", report.verdict.as_str(), report.label);
    if let Some(e) = &entry {
        text.push_str(&format!("declared: {}\n", e.expected_verdict.as_str()));
    }
    text.push('\n');
    let mut modulus_rows = Vec::new();
    for t in [&report.banach_modulus, &report.weyl_modulus] {
        for r in &t.rows {
            modulus_rows.push(vec![
                t.estimator.as_str().into(),
                num(r.eps),
                r.delta.map_or("-".into(), num),
                num(r.worst_estimate),
                r.samples.to_string(),
                if r.pass { "pass" } else { "fail" }.into(),
            ]);
        }
    }
    text.push_str(&table(&["modulus", "eps", "delta", "worst", "pairs", "status"], modulus_rows));
    text.push('\n');
    let stability_rows = report
        .stability
        .iter()
        .map(|s| {
            vec![
                num(s.eps),
                num(s.delta),
                num(s.worst_density),
                s.samples.to_string(),
                if s.passed { "pass" } else { "fail" }.into(),
            ]
        })
        .collect();
    text.push_str(&table(&["stability eps", "delta", "worst BD*", "pairs", "status"], stability_rows));
    text.push('\n');
    let point_rows = report
        .points
        .iter()
        .map(|p| {
            let witnesses = p.sensitivity.rows.iter().filter(|r| r.witness.is_some()).count();
            vec![
                coords(&p.x),
                p.fiber.to_string(),
                format!("{:?}", p.class).to_lowercase(),
                format!("{witnesses}/{}", p.sensitivity.rows.len()),
            ]
        })
        .collect();
    text.push_str(&table(&["point", "fiber", "class", "witnessed radii"], point_rows));
    let c = &report.crosschecks;
    text.push_str(&format!(
        "\ncrosschecks: lemma_agreement={} three_way_agreement={} quantitative_chain={} \
         (worst slack {}) point_dichotomy={}\n",
        c.lemma_agreement,
        c.three_way_agreement,
        c.quantitative_chain,
        num(c.chain_worst_slack),
        c.point_dichotomy
    ));
    if let Some(next) = &report.suggested_escalation {
        text.push_str(&format!(
            "suggested escalation: n_max={} m_max={} radius={}\n",
            next.n_max, next.m_max, next.search_radius
        ));
    }

    let mut pairs = String::from(
        "delta,fiber,x,y,distance,banach,weyl,eps,separation_density,n_max,m_max,radius\n",
    );
    for p in &report.pairs {
        for (eps, bd) in ccfg.eps_list.iter().zip(&p.separation_density) {
            pairs.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                num(p.delta),
                p.fiber,
                csv_field(&coords(&p.x)),
                csv_field(&coords(&p.y)),
                num(p.distance),
                num(p.banach),
                num(p.weyl),
                num(*eps),
                num(*bd),
                est.n_max,
                est.m_max,
                est.search_radius
            ));
        }
    }
    let mut modulus = String::from("estimator,eps,delta,worst_estimate,samples,pass,n_max,m_max,radius\n");
    for t in [&report.banach_modulus, &report.weyl_modulus] {
        for r in &t.rows {
            modulus.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                t.estimator.as_str(),
                num(r.eps),
                r.delta.map_or(String::new(), num),
                num(r.worst_estimate),
                r.samples,
                r.pass,
                est.n_max,
                est.m_max,
                est.search_radius
            ));
        }
    }
    let exit = if report.verdict == Verdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK };
    Ok(Report {
        text,
        result: serde_json::to_value(&report).expect("report serializes"),
        csv: vec![("classify_pairs.csv".into(), pairs), ("classify_modulus.csv".into(), modulus)],
        exit,
    })
}

pub fn catalog_list() -> Result<Report, CliError> {
    let entries = catalog::entries();
    let rows = entries
        .iter()
        .map(|e| {
            vec![
                e.name.clone(),
                e.expected_verdict.as_str().into(),
                e.isometric.to_string(),
                e.minimal_skew_product.to_string(),
                e.trivial_base.to_string(),
                e.parameters.clone(),
            ]
        })
        .collect();
    let mut text = table(&["name", "declared verdict", "isometric", "minimal", "trivial base", "parameters"], rows);
    text.push_str("\nsynthetic oracles: synthetic:const:<c>, synthetic:periodic:<v1,v2,...>, \
                   synthetic:evens, synthetic:squares, synthetic:dyadic\n");
    let mut csv = String::from("name,expected_verdict,isometric,minimal_skew_product,trivial_base,parameters\n");
    for e in &entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.name,
            e.expected_verdict.as_str(),
            e.isometric,
            e.minimal_skew_product,
            e.trivial_base,
            csv_field(&e.parameters)
        ));
    }
    Ok(Report {
        text,
        result: json!({ "entries": entries }),
        csv: vec![("catalog.csv".into(), csv)],
        exit: EXIT_OK,
    })
}

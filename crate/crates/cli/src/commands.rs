use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use num_bigint::BigInt;
use serde_json::{json, Value};

use paucity::cascade::{
    a_products, build_u, count_psi, gcd_cascade, reconstruct_solution,
    verify_product_relations, PSI_POINT_LIMIT,
};
use paucity::decimal::rational;
use paucity::enumeration::{
    count, list_nontrivial, survey, CountResult, EnumConfig, EnumError, Journal,
};
use paucity::exponents::{
    alpha_k, alpha_kd, beta_k, discrete_min, discrete_min_restricted, DiscreteMin,
    ExponentReport, CSV_HEADER,
};
use paucity::upsilon::{construct_upsilon, factor_identity_constant};
use paucity::{SystemSpec, TOOL_VERSION};

use crate::args::{
    CascadeArgs, Cli, Command, CountArgs, DiscreteMinArgs, ExponentsArgs, Global, PsiArgs,
    SurveyArgs, SystemArgs, UpsilonArgs,
};
use crate::output::{csv, fields, table, Report};

#[derive(Debug)]
pub struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err(e: impl std::fmt::Display) -> CliError {
    CliError(format!("error: {e}"))
}

fn enum_err(e: EnumError) -> CliError {
    match e {
        EnumError::BudgetExceeded { estimate, budget } => CliError(
            json!({"error": "budget_exceeded", "estimate": estimate.to_string(), "budget": budget.to_string()})
                .to_string(),
        ),
        other => err(other),
    }
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Exponents(a) => exponents(a),
        Command::Count(a) => count_cmd(g, a),
        Command::Survey(a) => survey_cmd(g, a),
        Command::Upsilon(a) => upsilon(g, a),
        Command::Cascade(a) => cascade(a),
        Command::DiscreteMin(a) => discrete_min_cmd(a),
        Command::Psi(a) => psi(a),
    }
}

fn config(g: &Global) -> EnumConfig {
    EnumConfig {
        threads: g.threads as usize,
        memory_budget: g.memory_budget,
    }
}

fn spec(s: &SystemArgs) -> Result<SystemSpec, CliError> {
    SystemSpec::new(s.variant, s.k, s.d).map_err(err)
}

fn exponents(a: &ExponentsArgs) -> Result<Report, CliError> {
    if *a.k.start() < 2 {
        return Err(err("k range must start at 2 or above"));
    }
    if a.d < 1 {
        return Err(err("d must be at least 1"));
    }
    let mut reports: Vec<ExponentReport> = Vec::new();
    for k in a.k.clone() {
        reports.push(alpha_k(k));
        reports.push(beta_k(k));
        if a.d > 1 {
            reports.push(alpha_kd(k, a.d));
        }
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.exponent.name().to_string(),
                r.k.to_string(),
                r.d.to_string(),
                rational::to_string(&r.value),
                r.argmin.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
                rational::to_string(&r.bound_sq_lhs),
                r.bound_sq_rhs.to_string(),
                r.bound_holds.to_string(),
                r.equality.to_string(),
            ]
        })
        .collect();
    let mut csv_out = String::from(CSV_HEADER);
    csv_out.push('\n');
    for r in &reports {
        csv_out.push_str(&r.csv_row());
        csv_out.push('\n');
    }
    Ok(Report {
        table: table(
            &["exponent", "k", "d", "value", "argmin_r", "bound_lhs", "bound_rhs", "holds", "equality"],
            &rows,
        ),
        json: serde_json::to_value(&reports).map_err(err)?,
        ok: reports.iter().all(|r| r.bound_holds),
        csv: csv_out,
    })
}

fn count_json(c: &CountResult) -> Value {
    json!({
        "variant": c.spec.variant.to_string(),
        "k": c.spec.k,
        "d": c.spec.d,
        "P": c.p,
        "V": c.v.to_string(),
        "L": c.l.to_string(),
        "delta": c.delta.to_string(),
        "tool_version": c.tool_version,
    })
}

fn count_cmd(g: &Global, a: &CountArgs) -> Result<Report, CliError> {
    let spec = spec(&a.system)?;
    let cfg = config(g);
    let journal = g.cache.as_deref().map(Journal::open).transpose().map_err(err)?;
    let cached = match &journal {
        Some(j) => j.get(&spec, a.pmax, TOOL_VERSION).map_err(err)?,
        None => None,
    };
    let result = match cached {
        Some(c) => {
            eprintln!("cache hit ({})", journal.as_ref().expect("journal").path().display());
            c
        }
        None => {
            let c = count(&spec, a.pmax, &cfg).map_err(enum_err)?;
            eprintln!("wall_time {:.3} s", c.wall_time);
            if let Some(j) = &journal {
                j.put(&c).map_err(err)?;
            }
            c
        }
    };
    let mut json_out = count_json(&result);
    let mut pairs = vec![
        ("system", spec.to_string()),
        ("P", result.p.to_string()),
        ("V", result.v.to_string()),
        ("L", result.l.to_string()),
        ("delta", result.delta.to_string()),
    ];
    if let Some(path) = &a.list {
        let listing = list_nontrivial(&spec, a.pmax, a.limit, &cfg).map_err(enum_err)?;
        let mut w = BufWriter::new(File::create(path).map_err(err)?);
        for class in &listing.classes {
            writeln!(w, "{}", class.solution.to_csv_row(&spec, a.pmax)).map_err(err)?;
        }
        w.flush().map_err(err)?;
        pairs.push(("listed", format!("{} of {}", listing.classes.len(), listing.total)));
        json_out["listed"] = json!(listing.classes.len());
        json_out["classes"] = json!(listing.total);
    }
    Ok(Report {
        table: fields(&pairs),
        csv: csv(
            &["variant", "k", "d", "P", "V", "L", "delta"],
            &[vec![
                spec.variant.to_string(),
                spec.k.to_string(),
                spec.d.to_string(),
                result.p.to_string(),
                result.v.to_string(),
                result.l.to_string(),
                result.delta.to_string(),
            ]],
        ),
        json: json_out,
        ok: true,
    })
}

fn survey_cmd(g: &Global, a: &SurveyArgs) -> Result<Report, CliError> {
    let spec = spec(&a.system)?;
    let start = Instant::now();
    let r = survey(&spec, &a.ladder, &config(g)).map_err(enum_err)?;
    eprintln!("wall_time {:.3} s", start.elapsed().as_secs_f64());
    if let Some((p, why)) = &r.stopped_at {
        eprintln!("stopped at P = {p}: {why}");
    }
    let rows: Vec<Vec<String>> = r
        .ladder
        .iter()
        .zip(&r.deltas)
        .map(|(p, d)| vec![p.to_string(), d.to_string()])
        .collect();
    let mut text = table(&["P", "delta"], &rows);
    match &r.fit {
        Some(f) => text.push_str(&format!(
            "slope {:.6} (~ {}) over {} points\n",
            f.slope,
            rational::to_string(&f.slope_rational),
            f.points
        )),
        None => text.push_str("slope not fitted (fewer than 3 positive deltas)\n"),
    }
    Ok(Report {
        table: text,
        csv: r.csv(),
        json: serde_json::to_value(&r).map_err(err)?,
        ok: r.stopped_at.is_none(),
    })
}

fn upsilon(g: &Global, a: &UpsilonArgs) -> Result<Report, CliError> {
    let u = construct_upsilon(a.k, g.seed).map_err(err)?;
    let text = u.poly.display_with("w");
    let mut pairs = vec![
        ("k", a.k.to_string()),
        ("upsilon", text.clone()),
        ("basis_size", u.basis_size.to_string()),
        ("sample_points", u.sample_points.to_string()),
        ("draws", u.draws.to_string()),
        ("symbolically_verified", u.symbolically_verified.to_string()),
    ];
    let mut json_out = json!({
        "k": a.k,
        "upsilon": u.poly,
        "text": text,
        "basis_size": u.basis_size,
        "sample_points": u.sample_points,
        "draws": u.draws,
        "symbolically_verified": u.symbolically_verified,
    });
    let mut csv_rows = Vec::new();
    for (m, c) in u.poly.terms() {
        let e: Vec<String> = m.exponents().iter().map(u32::to_string).collect();
        csv_rows.push(vec![a.k.to_string(), e.join(" "), c.to_string()]);
    }
    if a.verify_identity {
        let f = factor_identity_constant(&u).map_err(err)?;
        pairs.push(("C", f.constant.to_string()));
        pairs.push(("normalization", f.normalization.to_string()));
        pairs.push(("expanded_terms", f.expanded_terms.to_string()));
        json_out["C"] = json!(f.constant.to_string());
        json_out["normalization"] = json!(f.normalization);
        json_out["expanded_terms"] = json!(f.expanded_terms);
    }
    Ok(Report {
        table: fields(&pairs),
        csv: csv(&["k", "exponents", "coefficient"], &csv_rows),
        json: json_out,
        ok: true,
    })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn cascade(a: &CascadeArgs) -> Result<Report, CliError> {
    let z = &a.solution;
    let rel = verify_product_relations(z, a.k).map_err(err)?;
    let u = build_u(z, a.k, a.r, a.pmax).map_err(err)?;
    let products = u.column_products();
    let dec = gcd_cascade(&u.grid()).map_err(err)?;
    let reconstructed = dec.reconstruct() == u.grid().rows;
    let ap = a_products(&dec, u.p).map_err(err)?;
    let back = reconstruct_solution(&u.z_prefix, &u).map_err(err)?;
    let round_trip = back == *z;

    let nontrivial = dec.alphas.iter().filter(|a| **a != BigInt::from(1)).count();
    let row_names: Vec<String> = (1..=u.kappa).map(|l| format!("u{l}")).collect();
    let mut pairs: Vec<(&str, String)> = vec![
        ("relations", format!(
            "halves {}, swapped halves {}, first two {}",
            rel.halves, rel.swapped_halves, rel.first_two
        )),
        ("r, kappa, P", format!("{}, {}, {}", u.r, u.kappa, u.p)),
        ("u0", join(&u.u0)),
    ];
    for (name, row) in row_names.iter().zip(&u.rows) {
        pairs.push((name, join(row)));
    }
    pairs.extend([
        ("column product", products[0].to_string()),
        ("cascade", format!(
            "{} lattice values, {} greater than 1, reconstruction {}",
            dec.alphas.len(),
            nontrivial,
            if reconstructed { "OK" } else { "FAILED" }
        )),
        ("A_p", format!("{} (witness p = {}, bound {})", join(&ap.a), ap.witness, ap.bound)),
        ("solution", format!("{} ({})", join(&back), if round_trip { "round trip OK" } else { "round trip FAILED" })),
    ]);
    let text = fields(&pairs);
    let grid_rows: Vec<Vec<String>> = u
        .grid()
        .rows
        .iter()
        .enumerate()
        .map(|(l, row)| {
            let mut v = vec![l.to_string()];
            v.extend(row.iter().map(|x| x.to_string()));
            v
        })
        .collect();
    let mut headers = vec!["row".to_string()];
    headers.extend((1..=u.r).map(|m| format!("m{m}")));
    let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
    Ok(Report {
        table: text,
        csv: csv(&headers, &grid_rows),
        json: json!({
            "relations": {
                "halves": rel.halves,
                "swapped_halves": rel.swapped_halves,
                "first_two": rel.first_two,
            },
            "u": u,
            "column_product": products[0].to_string(),
            "decomposition": dec.to_json(),
            "reconstruction_ok": reconstructed,
            "a_products": ap,
            "solution": back,
            "round_trip": round_trip,
        }),
        ok: rel.all() && reconstructed && round_trip,
    })
}

fn discrete_min_cmd(a: &DiscreteMinArgs) -> Result<Report, CliError> {
    let lambda = rational::parse(&a.lambda).map_err(err)?;
    if *lambda.numer() <= BigInt::from(0) {
        return Err(err("lambda must be positive"));
    }
    let free = discrete_min(&lambda);
    let (m, differs): (DiscreteMin, Option<bool>) = match &a.range {
        Some(range) => {
            if *range.start() < 1 {
                return Err(err("range must start at 1 or above"));
            }
            let m = discrete_min_restricted(&lambda, *range.start(), *range.end());
            let differs = m.value != free.value;
            (m, Some(differs))
        }
        None => (free.clone(), None),
    };
    // the bound and its equality case concern the unrestricted minimum
    let consistent = free.bound_holds && free.equality == free.pronic.is_some();
    let mut pairs = vec![
        ("lambda", rational::to_string(&m.lambda)),
        ("r*", join(&m.r_star)),
        ("value", rational::to_string(&m.value)),
        ("value^2", rational::to_string(&m.value_sq)),
        ("4 lambda + 1", rational::to_string(&m.bound_sq)),
        ("bound holds", m.bound_holds.to_string()),
        ("equality", m.equality.to_string()),
        ("pronic", m.pronic.map_or("no".to_string(), |p| format!("{p}*{}", p - 1))),
    ];
    let mut json_out = serde_json::to_value(&m).map_err(err)?;
    if let Some(d) = differs {
        pairs.push(("differs from unrestricted", d.to_string()));
        json_out["differs_from_unrestricted"] = json!(d);
    }
    let row = vec![
        rational::to_string(&m.lambda),
        join(&m.r_star).replace(',', ";"),
        rational::to_string(&m.value),
        rational::to_string(&m.value_sq),
        rational::to_string(&m.bound_sq),
        m.equality.to_string(),
    ];
    Ok(Report {
        table: fields(&pairs),
        csv: csv(&["lambda", "r_star", "value", "value_sq", "bound_sq", "equality"], &[row]),
        json: json_out,
        ok: consistent,
    })
}

fn psi(a: &PsiArgs) -> Result<Report, CliError> {
    let n = count_psi(&a.prefix, a.k, a.r, a.pmax, PSI_POINT_LIMIT).map_err(err)?;
    let prefix = join(&a.prefix);
    Ok(Report {
        table: fields(&[
            ("prefix", prefix.clone()),
            ("k, r, P", format!("{}, {}, {}", a.k, a.r, a.pmax)),
            ("psi", n.to_string()),
        ]),
        csv: csv(&["k", "r", "P", "prefix", "psi"], &[vec![
            a.k.to_string(),
            a.r.to_string(),
            a.pmax.to_string(),
            prefix.replace(',', ";"),
            n.to_string(),
        ]]),
        json: json!({"k": a.k, "r": a.r, "P": a.pmax, "prefix": a.prefix, "psi": n.to_string()}),
        ok: true,
    })
}

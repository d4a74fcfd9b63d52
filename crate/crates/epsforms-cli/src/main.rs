//! Command-line front end over the library: finite quadratic modules,
//! reduced bases, principal-part lifts, duality grids, integrality reports,
//! vector-valued expansions, and the numeric transformation check.
//!
//! Exit codes: 0 success (and every checked identity holds), 1 a check ran
//! and failed, 2 obstructed principal part, 3 generator spanning diagnostic,
//! 4 invalid input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epsforms::arith::{rat, rat_f64, rat_fmt};
use epsforms::discform::DiscForm;
use epsforms::docio::{BasisCache, QExpansionDocument, VVDocument};
use epsforms::duality::{self, Obstruction, PrincipalPart};
use epsforms::integrality::{integrality_report, Verdict};
use epsforms::vvmf::{check_weil_transform, psi};
use epsforms::{
    EpsError, EpsSpace, QSeries, QuadChar, Rat, ReducedBasis, SignVector, SpaceSpec,
};

#[derive(Parser)]
#[command(
    name = "epsforms",
    version,
    about = "Exact q-expansions of sign-restricted weakly holomorphic modular forms"
)]
struct Cli {
    /// Render coefficients as decimals (human scanning only; default is exact)
    #[arg(long, global = true)]
    decimal: bool,

    /// Emit JSON documents instead of plain text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

/// The space selector shared by most subcommands.
#[derive(Args)]
struct SpaceArgs {
    /// Level (odd squarefree times 1, 4 or 8)
    #[arg(long)]
    level: u64,

    /// Weight (parity must match the level character; weight 1 unsupported)
    #[arg(long, allow_hyphen_values = true)]
    weight: i64,

    /// One sign per prime of the level, ascending: "-1,-1" or "3=-1,5=+1"
    #[arg(long, allow_hyphen_values = true)]
    epsilon: String,
}

impl SpaceArgs {
    fn space(&self, trunc: i64) -> Result<EpsSpace, EpsError> {
        let eps = parse_epsilon(self.level, &self.epsilon)?;
        EpsSpace::new(SpaceSpec::new(self.level, self.weight, eps, trunc.max(2))?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe the finite quadratic module attached to a level and signs
    Dform {
        /// Level (odd squarefree times 1, 4 or 8)
        #[arg(long)]
        level: u64,

        /// One sign per prime of the level, ascending: "-1,-1" or "3=-1,5=+1"
        #[arg(long, allow_hyphen_values = true)]
        epsilon: String,
    },

    /// Print the reduced basis forms with leading orders in a range
    Basis {
        #[command(flatten)]
        space: SpaceArgs,

        /// Lowest leading order (default: -level)
        #[arg(long, allow_hyphen_values = true)]
        from: Option<i64>,

        /// Highest leading order (default: largest existing order)
        #[arg(long, allow_hyphen_values = true)]
        to: Option<i64>,

        /// Highest exponent printed
        #[arg(long, default_value_t = 15)]
        prec: i64,
    },

    /// Print the reduced basis of the pairing partner (weight 2-k, dual signs)
    DualBasis {
        #[command(flatten)]
        space: SpaceArgs,

        /// Lowest leading order (default: -level)
        #[arg(long, allow_hyphen_values = true)]
        from: Option<i64>,

        /// Highest leading order (default: largest existing order)
        #[arg(long, allow_hyphen_values = true)]
        to: Option<i64>,

        /// Highest exponent printed
        #[arg(long, default_value_t = 15)]
        prec: i64,
    },

    /// Lift a principal part to a form, or report the obstructing cusp forms
    Lift {
        /// q-expansion document holding the principal part and its space data
        #[arg(long)]
        principal_part: PathBuf,

        /// Highest exponent of the lifted expansion
        #[arg(long, default_value_t = 15)]
        prec: i64,
    },

    /// Verify the coefficient duality on a grid of leading orders
    Duality {
        #[command(flatten)]
        space: SpaceArgs,

        /// Orders on the weight-k side, "lo..hi"
        #[arg(long, allow_hyphen_values = true)]
        m_range: String,

        /// Orders on the weight-(2-k) side, "lo..hi"
        #[arg(long, allow_hyphen_values = true)]
        d_range: String,
    },

    /// Integrality verdicts for the scaled coefficients of every basis form
    Integrality {
        #[command(flatten)]
        space: SpaceArgs,
    },

    /// Expand a scalar q-expansion document into vector-valued components
    Vvmf {
        /// q-expansion document on the integer lattice
        #[arg(long)]
        input: PathBuf,
    },

    /// Check the transformation behavior numerically at a sample point
    CheckWeil {
        #[command(flatten)]
        space: SpaceArgs,

        /// Leading order of the basis form to check
        #[arg(long, allow_hyphen_values = true, default_value_t = -1)]
        order: i64,

        /// Real part of the sample point (decimal or rational)
        #[arg(long, allow_hyphen_values = true, default_value = "0.3")]
        tau_re: String,

        /// Imaginary part of the sample point (decimal or rational)
        #[arg(long, default_value = "1.1")]
        tau_im: String,

        /// Largest accepted deviation
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,

        /// Highest exponent entering the evaluation
        #[arg(long, default_value_t = 60)]
        prec: i64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &EpsError) -> u8 {
    match e {
        EpsError::Obstructed { .. } => 2,
        EpsError::SpanningIncomplete { .. } => 3,
        EpsError::Internal(_) => 1,
        _ => 4,
    }
}

fn run(cli: &Cli) -> Result<u8, EpsError> {
    match &cli.cmd {
        Cmd::Dform { level, epsilon } => cmd_dform(cli, *level, epsilon),
        Cmd::Basis { space, from, to, prec } => {
            let eps = parse_epsilon(space.level, &space.epsilon)?;
            let spec = SpaceSpec::new(space.level, space.weight, eps, (prec + 1).max(2))?;
            cmd_basis(cli, spec, *from, *to)
        }
        Cmd::DualBasis { space, from, to, prec } => {
            let eps = parse_epsilon(space.level, &space.epsilon)?;
            let spec = SpaceSpec::new(space.level, space.weight, eps, (prec + 1).max(2))?;
            cmd_basis(cli, spec.dual()?, *from, *to)
        }
        Cmd::Lift { principal_part, prec } => cmd_lift(cli, principal_part, *prec),
        Cmd::Duality { space, m_range, d_range } => cmd_duality(cli, space, m_range, d_range),
        Cmd::Integrality { space } => cmd_integrality(cli, space),
        Cmd::Vvmf { input } => cmd_vvmf(cli, input),
        Cmd::CheckWeil { space, order, tau_re, tau_im, tol, prec } => {
            cmd_check_weil(cli, space, *order, tau_re, tau_im, *tol, *prec)
        }
    }
}

/// Accepts "-1,-1" (signs in ascending prime order) or the explicit
/// "3=-1,5=+1" form, validated against the level.
fn parse_epsilon(level: u64, s: &str) -> Result<SignVector, EpsError> {
    let eps = if s.contains('=') || s.contains(':') {
        SignVector::parse(s)?
    } else {
        let primes = QuadChar::from_level(level)?.primes();
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != primes.len() {
            return Err(EpsError::Input(format!(
                "level {level} needs {} sign(s), got {}",
                primes.len(),
                parts.len()
            )));
        }
        let mut pairs = Vec::new();
        for (&p, v) in primes.iter().zip(&parts) {
            let sign = match *v {
                "+1" | "1" | "+" => 1,
                "-1" | "-" => -1,
                other => {
                    return Err(EpsError::Input(format!("sign '{other}' must be +1 or -1")))
                }
            };
            pairs.push((p, sign));
        }
        SignVector::from_pairs(&pairs)?
    };
    eps.check_level(level)?;
    Ok(eps)
}

fn parse_range(s: &str) -> Result<(i64, i64), EpsError> {
    let bad = || EpsError::Input(format!("range '{s}' must look like lo..hi"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let lo = a.trim().parse().map_err(|_| bad())?;
    let hi = b.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

/// Accepts "0.3", "-1.25", or a plain rational like "3/10".
fn parse_decimal(s: &str) -> Result<Rat, EpsError> {
    let t = s.trim();
    let Some((int, frac)) = t.split_once('.') else {
        return epsforms::arith::rat_parse(t);
    };
    let bad = || EpsError::Input(format!("malformed decimal '{s}'"));
    if frac.len() > 18 || frac.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let neg = int.starts_with('-');
    let digits = int.trim_start_matches(['-', '+']);
    let whole: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let num: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let mag = rat(whole) + Rat::new(num.into(), 10i64.pow(frac.len() as u32).into());
    Ok(if neg { -mag } else { mag })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// "q", "q^5", or "q^(2/3)" for the exponent n on the 1/u lattice.
fn expo_string(n: i64, u: i64) -> String {
    let g = gcd(n, u).max(1);
    let (a, b) = (n / g, u / g);
    match (a, b) {
        (1, 1) => "q".into(),
        (_, 1) => format!("q^{a}"),
        _ => format!("q^({a}/{b})"),
    }
}

fn coeff_string(mag: &Rat, decimal: bool) -> String {
    if decimal {
        format!("{}", rat_f64(mag))
    } else {
        rat_fmt(mag)
    }
}

/// Renders an expansion in the usual mathematical style, for example
/// "1/2 q^-3 - 1/2 + 3q^2 - 3q^5 + O(q^15)".
fn fmt_series(f: &QSeries, decimal: bool) -> String {
    let u = f.denom() as i64;
    let mut out = String::new();
    for (pos, &n) in f.support().iter().enumerate() {
        let c = f.coeff(n).expect("support is inside the window");
        let neg = c < rat(0);
        let mag = if neg { -c } else { c };
        if pos == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if n == 0 {
            out.push_str(&coeff_string(&mag, decimal));
        } else if mag == rat(1) && !decimal {
            out.push_str(&expo_string(n, u));
        } else {
            let cs = coeff_string(&mag, decimal);
            let sep = if cs.contains('/') || cs.contains('.') { " " } else { "" };
            out.push_str(&format!("{cs}{sep}{}", expo_string(n, u)));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out.push_str(&format!(" + O({})", expo_string(f.trunc(), u)));
    out
}

/// Reduced basis through the on-disk cache (EPSFORMS_CACHE, default
/// ./.epsforms-cache). A failed write never fails the command.
fn cached_basis(space: &EpsSpace, depth: i64) -> Result<ReducedBasis, EpsError> {
    let cache = BasisCache::from_env();
    if let Some(b) = cache.load(space.spec(), depth) {
        return Ok(b);
    }
    let b = space.reduced_basis(depth)?;
    let _ = cache.store(&b, depth);
    Ok(b)
}

fn cmd_dform(cli: &Cli, level: u64, epsilon: &str) -> Result<u8, EpsError> {
    let eps = parse_epsilon(level, epsilon)?;
    let d = DiscForm::build(level, &eps)?;
    let symbols: Vec<String> = d.blocks().map(|(_, b)| b.symbol()).collect();
    let residues: Vec<u64> = d.norm_residues().into_iter().collect();
    let dual = eps.dual(level)?;
    if cli.json {
        let eps_map: std::collections::BTreeMap<u64, i8> = eps.primes().collect();
        let dual_map: std::collections::BTreeMap<u64, i8> = dual.primes().collect();
        let obj = serde_json::json!({
            "level": level,
            "order": d.order(),
            "components": symbols,
            "signature_mod_8": d.signature(),
            "character_discriminant": d.chi().discriminant(),
            "epsilon": eps_map,
            "dual_epsilon": dual_map,
            "norm_residues": residues,
        });
        println!("{obj}");
    } else {
        println!("level: {level}");
        println!("order: {}", d.order());
        println!("components: {}", symbols.join(" + "));
        println!("signature mod 8: {}", d.signature());
        println!("character discriminant: {}", d.chi().discriminant());
        println!("epsilon: {eps}");
        println!("dual epsilon: {dual}");
        println!(
            "norm residues mod {level}: {}",
            residues.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
        );
    }
    Ok(0)
}

fn cmd_basis(cli: &Cli, spec: SpaceSpec, from: Option<i64>, to: Option<i64>) -> Result<u8, EpsError> {
    let space = EpsSpace::new(spec.clone())?;
    let from = from.unwrap_or(-(spec.level as i64));
    let basis = cached_basis(&space, (-from).max(0))?;
    let to = to.unwrap_or_else(|| basis.max_order());
    if from > to {
        return Err(EpsError::Input(format!("empty order range {from}..{to}")));
    }
    if !cli.json {
        println!(
            "level {} weight {} epsilon {}",
            spec.level, spec.weight, spec.eps
        );
    }
    for (&m, f) in basis.forms.range(from..=to) {
        let shown = f.truncated(spec.trunc);
        if cli.json {
            let doc = QExpansionDocument::from_series(spec.level, spec.weight, &spec.eps, &shown);
            println!("{}", doc.to_json());
        } else {
            println!("f_{m} = {}", fmt_series(&shown, cli.decimal));
        }
    }
    Ok(0)
}

fn cmd_lift(cli: &Cli, path: &PathBuf, prec: i64) -> Result<u8, EpsError> {
    let doc = QExpansionDocument::from_json(&fs::read_to_string(path)?)?;
    if doc.lattice_denom != 1 {
        return Err(EpsError::Input(
            "principal parts live on the integer exponent lattice".into(),
        ));
    }
    let eps = doc.epsilon()?;
    let series = doc.series()?;
    let mut pairs = Vec::new();
    for n in series.support() {
        if n >= 0 {
            return Err(EpsError::Input(format!(
                "principal parts are supported on negative exponents, found q^{n}"
            )));
        }
        pairs.push((n, series.coeff(n).expect("support is inside the window")));
    }
    let p = PrincipalPart::from_pairs(&pairs)?;
    let space = EpsSpace::new(SpaceSpec::new(doc.level, doc.weight, eps.clone(), (prec + 1).max(2))?)?;

    if let Obstruction::Fail(witnesses) = duality::obstruction_test(&space, &p)? {
        println!(
            "obstructed: {} dual cusp form(s) pair nonzero against the principal part",
            witnesses.len()
        );
        for w in &witnesses {
            println!(
                "  witness at order {}: pairing value {}, form {}",
                w.order,
                rat_fmt(&w.value),
                fmt_series(&w.form, cli.decimal)
            );
        }
        return Ok(2);
    }
    let f = duality::lift(&space, &p)?;
    if cli.json {
        let out = QExpansionDocument::from_series(doc.level, doc.weight, &eps, &f);
        println!("{}", out.to_json());
    } else {
        println!("f = {}", fmt_series(&f, cli.decimal));
    }
    Ok(0)
}

fn cmd_duality(cli: &Cli, args: &SpaceArgs, m_range: &str, d_range: &str) -> Result<u8, EpsError> {
    let (m_lo, m_hi) = parse_range(m_range)?;
    let (d_lo, d_hi) = parse_range(d_range)?;
    let space = args.space(2)?;
    let rep = duality::duality_check(&space, m_lo, m_hi, d_lo, d_hi)?;
    if cli.json {
        let identities: Vec<serde_json::Value> = rep
            .identities
            .iter()
            .map(|i| {
                serde_json::json!({
                    "m": i.m, "d": i.d,
                    "a": rat_fmt(&i.a), "b": rat_fmt(&i.b),
                })
            })
            .collect();
        let obj = serde_json::json!({
            "level": rep.level,
            "weight": rep.weight,
            "m_orders": rep.m_orders,
            "d_orders": rep.d_orders,
            "identities": identities,
            "vanishing_checks": rep.vanishing_checks,
            "cross_existence_checks": rep.cross_existence_checks,
            "violations": rep.violations,
        });
        println!("{obj}");
    } else {
        println!(
            "level {} weight {} epsilon {}",
            rep.level, rep.weight, rep.eps
        );
        println!(
            "orders: {} on the weight {} side, {} on the weight {} side",
            rep.m_orders.len(),
            rep.weight,
            rep.d_orders.len(),
            2 - rep.weight
        );
        println!("identities checked: {}", rep.identities.len());
        println!("vanishing checks: {}", rep.vanishing_checks);
        println!("cross-existence checks: {}", rep.cross_existence_checks);
        for v in &rep.violations {
            println!("violation: {v}");
        }
        if rep.all_hold() {
            println!("all identities hold");
        }
    }
    Ok(if rep.all_hold() { 0 } else { 1 })
}

fn cmd_integrality(cli: &Cli, args: &SpaceArgs) -> Result<u8, EpsError> {
    let space = args.space(2)?;
    let rep = integrality_report(&space)?;
    let mut failed = false;
    if cli.json {
        let verdicts: Vec<serde_json::Value> = rep
            .verdicts
            .iter()
            .map(|(m, v)| match v {
                Verdict::Certified(c) => serde_json::json!({
                    "order": m,
                    "verdict": "certified",
                    "clearing": c.clearing.symbol(),
                    "product_weight": c.product_weight,
                    "sturm_bound": c.sturm,
                    "partners": c.partners.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                }),
                Verdict::VerifiedToPrecision { up_to } => serde_json::json!({
                    "order": m,
                    "verdict": "verified_to_precision",
                    "up_to": up_to,
                }),
                Verdict::Violation { n, value } => {
                    failed = true;
                    serde_json::json!({
                        "order": m,
                        "verdict": "violation",
                        "n": n,
                        "value": rat_fmt(value),
                    })
                }
            })
            .collect();
        let obj = serde_json::json!({
            "level": rep.spec.level,
            "weight": rep.spec.weight,
            "lowest_order": rep.lowest_order,
            "checked_to": rep.check_to,
            "verdicts": verdicts,
        });
        println!("{obj}");
    } else {
        println!(
            "level {} weight {} epsilon {}",
            rep.spec.level, rep.spec.weight, rep.spec.eps
        );
        println!(
            "orders down to {}: deeper forms reduce to these by integral ladder steps",
            rep.lowest_order
        );
        for (m, v) in &rep.verdicts {
            match v {
                Verdict::Certified(c) => {
                    let partners = if c.partners.is_empty() {
                        String::new()
                    } else {
                        format!(
                            ", partner signs [{}]",
                            c.partners
                                .iter()
                                .map(|s| s.to_string())
                                .collect::<Vec<_>>()
                                .join("; ")
                        )
                    };
                    println!(
                        "f_{m}: certified integral (clearing {}, product weight {}, Sturm bound {}{partners})",
                        c.clearing.symbol(),
                        c.product_weight,
                        c.sturm
                    );
                }
                Verdict::VerifiedToPrecision { up_to } => {
                    println!(
                        "f_{m}: integral as far as inspected (through q^{up_to}); no certificate closed"
                    );
                }
                Verdict::Violation { n, value } => {
                    failed = true;
                    println!(
                        "f_{m}: VIOLATION, s({n}) a({n}) = {} is not an integer",
                        rat_fmt(value)
                    );
                }
            }
        }
    }
    Ok(if failed { 1 } else { 0 })
}

fn cmd_vvmf(cli: &Cli, input: &PathBuf) -> Result<u8, EpsError> {
    let doc = QExpansionDocument::from_json(&fs::read_to_string(input)?)?;
    if doc.lattice_denom != 1 {
        return Err(EpsError::Input(
            "the scalar side lives on the integer exponent lattice".into(),
        ));
    }
    let eps = doc.epsilon()?;
    let series = doc.series()?;
    let d = DiscForm::build(doc.level, &eps)?;
    let vv = psi(&series, &d)?;
    if cli.json {
        println!("{}", VVDocument::from_vvform(doc.weight, &vv).to_json());
    } else {
        println!("level {} epsilon {} weight {}", doc.level, eps, doc.weight);
        for (g, c) in vv.element_components() {
            let coords: Vec<String> = g.iter().map(u64::to_string).collect();
            println!(
                "component ({}) norm {}: {}",
                coords.join(","),
                rat_fmt(&d.norm(&g)),
                fmt_series(&c, cli.decimal)
            );
        }
    }
    Ok(0)
}

fn cmd_check_weil(
    cli: &Cli,
    args: &SpaceArgs,
    order: i64,
    tau_re: &str,
    tau_im: &str,
    tol: f64,
    prec: i64,
) -> Result<u8, EpsError> {
    let re = parse_decimal(tau_re)?;
    let im = parse_decimal(tau_im)?;
    if im <= rat(0) {
        return Err(EpsError::Input("the sample point needs positive imaginary part".into()));
    }
    let space = args.space(prec.max(2))?;
    let basis = cached_basis(&space, (-order).max(0))?;
    let f = basis.form(order).ok_or_else(|| {
        EpsError::Input(format!("no reduced form with leading order {order} in this space"))
    })?;
    let eps = parse_epsilon(args.level, &args.epsilon)?;
    let d = DiscForm::build(args.level, &eps)?;
    let vv = psi(f, &d)?;
    let dev = check_weil_transform(&vv, args.weight, &re, &im, tol)?;
    let holds = dev < tol;
    if cli.json {
        let obj = serde_json::json!({
            "level": args.level,
            "weight": args.weight,
            "order": order,
            "tau_re": rat_fmt(&re),
            "tau_im": rat_fmt(&im),
            "deviation": dev,
            "tolerance": tol,
            "holds": holds,
        });
        println!("{obj}");
    } else {
        println!(
            "max deviation {dev:.3e} at tau = {} + {} i (tolerance {tol:.1e})",
            rat_fmt(&re),
            rat_fmt(&im)
        );
        println!(
            "transformation law {}",
            if holds { "holds" } else { "FAILS" }
        );
    }
    Ok(if holds { 0 } else { 1 })
}

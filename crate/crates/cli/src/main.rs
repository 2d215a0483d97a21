use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Deserialize;
use serde_json::{json, Value};

use qp_core::decompose::{check_norm_bounds, decompose_monomial, reassembly_matches};
use qp_core::dynamics::{entropy_run, odometer_entropy_estimate, odometer_orbit, CircleMapSpec, OdometerSpec};
use qp_core::index::{chi_preimage_element, expectation, index_report, quasi_basis, ExpectationSpec};
use qp_core::numeric::PowerIteration;
use qp_core::rep::{act_element, op_norm_estimate, verify_relations, RepVector, Window};
use qp_core::{parse, psi, render, AlgebraContext, Coefficient, Element, Monomial, QpError, Word};

#[derive(Parser, Debug)]
#[command(name = "qp", version, about = "Exact computation in the p-adic ring C*-algebra Q_p")]
struct Cli {
    /// The algebra parameter p >= 2 (required).
    #[arg(long = "p", global = true)]
    p: Option<u32>,

    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for randomized start vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Tolerance for numerical checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// TOML file with defaults for window, tolerance, seed and max_iterations.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    E,
    F,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical form of an expression.
    Normalize {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Action of an expression on the basis vector e_K.
    Eval {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_negative_numbers = true)]
        on: BigInt,
    },
    /// Product of two expressions.
    Mul {
        #[arg(allow_hyphen_values = true)]
        left: String,
        #[arg(allow_hyphen_values = true)]
        right: String,
    },
    /// Decide equality in Q_p (exit 0 if equal, 1 if not).
    Equals {
        #[arg(allow_hyphen_values = true)]
        left: String,
        #[arg(allow_hyphen_values = true)]
        right: String,
    },
    /// Winding endomorphism U -> U^k.
    Chi {
        #[arg(short, allow_negative_numbers = true)]
        k: BigInt,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Matrix of Psi_h(x).
    #[command(disable_help_flag = true)]
    Psi {
        #[arg(short = 'h')]
        h: u32,
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, action = ArgAction::Help)]
        help: Option<bool>,
    },
    /// Block decomposition of Psi_h(x) for a monomial x, with norm checks.
    #[command(disable_help_flag = true)]
    Decompose {
        #[arg(short = 'h')]
        h: u32,
        #[arg(allow_hyphen_values = true)]
        expr: String,
        #[arg(long, action = ArgAction::Help)]
        help: Option<bool>,
    },
    /// Conditional expectation E (gauge-invariant domain) or F (full algebra).
    Expect {
        #[arg(long, value_enum, ignore_case = true)]
        kind: Kind,
        #[arg(short, allow_negative_numbers = true)]
        k: BigInt,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Quasi-basis of the expectation.
    Quasibasis {
        #[arg(short, allow_negative_numbers = true)]
        k: BigInt,
        #[arg(long, value_enum, ignore_case = true, default_value = "e")]
        kind: Kind,
    },
    /// Watatani index, with the quasi-basis identities checked on a sweep.
    Index {
        #[arg(short, allow_negative_numbers = true)]
        k: BigInt,
        #[arg(long, value_enum, ignore_case = true, default_value = "e")]
        kind: Kind,
        /// Exponent bound |i|, |j| for the verification sweep.
        #[arg(long, default_value_t = 16)]
        bound: i64,
        /// Largest level h (or m, n) in the verification sweep.
        #[arg(long, default_value_t = 2)]
        levels: u32,
    },
    /// Gauge-invariant y with chi_k(y) = x.
    Preimage {
        #[arg(short, allow_negative_numbers = true)]
        k: BigInt,
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Check the defining relations on e_k, |k| <= RANGE.
    VerifyRelations {
        #[arg(long, default_value_t = 10_000)]
        range: u64,
    },
    /// Separated-set entropy estimate for z -> z^k.
    Entropy {
        #[arg(short, allow_negative_numbers = true)]
        k: i64,
        #[arg(long, default_value_t = CircleMapSpec::DEFAULT_GRID)]
        grid: u64,
        #[arg(long, default_value_t = CircleMapSpec::DEFAULT_N_MAX)]
        n_max: u32,
        /// Separation threshold in radians.
        #[arg(long, default_value_t = CircleMapSpec::DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Orbit of x -> x + k on Z/p^L.
    Odometer {
        #[arg(short, allow_negative_numbers = true)]
        k: i64,
        #[arg(short = 'L')]
        level: u32,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        start: i64,
        /// Also estimate the separated-set entropy of x -> x + 1.
        #[arg(long)]
        entropy: bool,
    },
    /// Lower bound for the operator norm on the window [-N, N].
    Norm {
        #[arg(allow_hyphen_values = true)]
        expr: String,
        /// Window half-width; defaults to QP_DEFAULT_WINDOW, the config, then 4096.
        #[arg(short = 'N')]
        window: Option<u64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    window: Option<u64>,
    tolerance: Option<f64>,
    seed: Option<u64>,
    max_iterations: Option<usize>,
}

struct Settings {
    json: bool,
    tolerance: f64,
    power: PowerIteration,
    window: u64,
}

enum Failure {
    Usage(String),
    Domain(QpError),
}

impl From<QpError> for Failure {
    fn from(e: QpError) -> Self {
        Failure::Domain(e)
    }
}

/// Result of a command: text/JSON payload plus whether the check held.
struct Outcome {
    text: String,
    json: Value,
    ok: bool,
}

impl Outcome {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Outcome {
            text: text.into(),
            json,
            ok: true,
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))
}

fn monomial_of(x: &Element) -> Result<Monomial, Failure> {
    match x.terms().collect::<Vec<_>>().as_slice() {
        [(m, c)] if **c == Coefficient::from_integer(1.into()) => Ok((*m).clone()),
        _ => Err(Failure::Domain(QpError::NotInDomain(format!(
            "{} is not a single monomial",
            render(x)
        )))),
    }
}

fn spec_for(ctx: AlgebraContext, kind: Kind, k: &BigInt) -> Result<ExpectationSpec, QpError> {
    match kind {
        Kind::E => ExpectationSpec::gauge(ctx, k.clone()),
        Kind::F => ExpectationSpec::full(ctx, k.clone()),
    }
}

fn element_outcome(x: &Element) -> Outcome {
    Outcome::ok(render(x), x.to_json())
}

fn run(cli: &Cli, ctx: AlgebraContext, s: &Settings) -> Result<Outcome, Failure> {
    let parse = |text: &str| parse(text, ctx);
    Ok(match &cli.command {
        Command::Normalize { expr } => element_outcome(&parse(expr)?),
        Command::Eval { expr, on } => {
            let v = act_element(&parse(expr)?, &RepVector::basis(on.clone()));
            let text = if v.is_zero() {
                "0".to_string()
            } else {
                v.coords()
                    .map(|(k, c)| {
                        if *c == Coefficient::from_integer(1.into()) {
                            format!("e_{k}")
                        } else {
                            format!("{c}*e_{k}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" + ")
            };
            Outcome::ok(text, v.to_json())
        }
        Command::Mul { left, right } => element_outcome(&parse(left)?.checked_mul(&parse(right)?)?.canonicalize()),
        Command::Equals { left, right } => {
            let eq = parse(left)?.equals(&parse(right)?)?;
            Outcome {
                text: eq.to_string(),
                json: json!({ "equal": eq }),
                ok: eq,
            }
        }
        Command::Chi { k, expr } => element_outcome(&parse(expr)?.chi(k)?.canonicalize()),
        Command::Psi { h, expr, .. } => {
            let m = psi(*h, &parse(expr)?)?;
            let mut text = String::new();
            for i in 0..m.dim() {
                let row: Vec<String> = (0..m.dim()).map(|j| render(m.get(i, j))).collect();
                text.push_str(&format!("[{}]\n", row.join(", ")));
            }
            Outcome::ok(text.trim_end(), m.to_json())
        }
        Command::Decompose { h, expr, .. } => {
            let x = monomial_of(&parse(expr)?)?;
            let dec = decompose_monomial(*h, &x)?;
            let reassembles = reassembly_matches(&dec, &Word::from(&x))?;
            let norms = check_norm_bounds(&dec, s.window, &s.power, s.tolerance);
            let mut json = dec.to_json();
            json["reassembles"] = json!(reassembles);
            json["norm_bounds"] = norms.to_json();
            let text = format!(
                "{dec}reassembly: {}\nnorm bounds: {}",
                if reassembles { "ok" } else { "MISMATCH" },
                if norms.passed() { "ok" } else { "FAILED" }
            );
            Outcome {
                text,
                json,
                ok: reassembles && norms.passed(),
            }
        }
        Command::Expect { kind, k, expr } => {
            let spec = spec_for(ctx, *kind, k)?;
            element_outcome(&expectation(&spec, &parse(expr)?)?)
        }
        Command::Quasibasis { k, kind } => {
            let spec = spec_for(ctx, *kind, k)?;
            let basis = quasi_basis(&spec, ctx)?;
            let text = basis.iter().map(render).collect::<Vec<_>>().join("\n");
            let json = json!({
                "k": k.to_string(),
                "p": ctx.p(),
                "kind": spec.kind(),
                "basis": basis.iter().map(Element::to_json).collect::<Vec<_>>(),
            });
            Outcome::ok(text, json)
        }
        Command::Index { k, kind, bound, levels } => {
            let spec = spec_for(ctx, *kind, k)?;
            let report = index_report(&spec, k, ctx, *bound, *levels)?;
            let text = format!(
                "index {} (quasi-basis of size {}, verified on {} monomials{})",
                report.index,
                report.quasi_basis_size,
                report.verified_on,
                if report.passed() {
                    String::new()
                } else {
                    format!(", {} FAILED", report.failures.len())
                }
            );
            Outcome {
                text,
                json: report.to_json(),
                ok: report.passed(),
            }
        }
        Command::Preimage { k, expr } => element_outcome(&chi_preimage_element(k, &parse(expr)?)?),
        Command::VerifyRelations { range } => {
            let reports = verify_relations(ctx, *range);
            let ok = reports.iter().all(|r| r.passed());
            let text = reports
                .iter()
                .map(|r| {
                    format!(
                        "{}: {} ({} violations, |k| <= {})",
                        r.relation,
                        if r.passed() { "pass" } else { "FAIL" },
                        r.violations.len(),
                        r.checked_range
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Outcome {
                text,
                json: serde_json::to_value(&reports).expect("reports serialize"),
                ok,
            }
        }
        Command::Entropy { k, grid, n_max, epsilon } => {
            let spec = CircleMapSpec {
                k: *k,
                grid_size: *grid,
                n_max: *n_max,
                epsilon: *epsilon,
            };
            let run = entropy_run(&spec)?;
            let text = format!(
                "{}# estimate {:.6}, log|k| = {:.6}, within tolerance: {}",
                run.to_csv(),
                run.estimate,
                run.target(),
                run.within_tolerance()
            );
            Outcome {
                text,
                json: run.to_json(),
                ok: run.within_tolerance(),
            }
        }
        Command::Odometer { k, level, start, entropy } => {
            let spec = OdometerSpec::new(ctx.p(), *level, *k)?;
            let orbit = odometer_orbit(&spec, *start);
            let transitive = orbit == spec.modulus();
            let mut json = json!({
                "p": ctx.p(),
                "level": level,
                "k": k,
                "orbit": orbit,
                "modulus": spec.modulus(),
                "transitive": transitive,
            });
            let mut text = format!("orbit size {orbit} of {} (transitive: {transitive})", spec.modulus());
            if *entropy {
                let e = odometer_entropy_estimate(ctx.p(), *level)?;
                json["entropy"] = json!(e);
                text.push_str(&format!("\nentropy estimate {e:.6}"));
            }
            Outcome::ok(text, json)
        }
        Command::Norm { expr, window } => {
            let n = window.unwrap_or(s.window);
            let w = Window {
                n: n.max(1),
                power: s.power,
            };
            let v = op_norm_estimate(&parse(expr)?, &w);
            Outcome::ok(format!("{v:.12}"), json!({ "norm": v, "window": w.n }))
        }
    })
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let cfg = load_config(&cli.config)?;
    let env_window = match std::env::var("QP_DEFAULT_WINDOW") {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| Failure::Usage(format!("QP_DEFAULT_WINDOW={v} is not a natural number")))?,
        ),
        Err(_) => None,
    };
    let defaults = PowerIteration::default();
    let tolerance = cli.tolerance.or(cfg.tolerance).unwrap_or(1e-6);
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Failure::Usage(format!("tolerance {tolerance} must be positive")));
    }
    Ok(Settings {
        json: cli.json,
        tolerance,
        power: PowerIteration {
            tolerance: defaults.tolerance.min(tolerance),
            max_iterations: cfg.max_iterations.unwrap_or(defaults.max_iterations),
            seed: cli.seed.or(cfg.seed).unwrap_or(defaults.seed),
        },
        window: env_window.or(cfg.window).unwrap_or(Window::DEFAULT_N),
    })
}

/// Print a line, ignoring a closed stdout (e.g. piped into `head`).
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}").and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let as_json = cli.json;
    let result = (|| {
        let p = cli
            .p
            .ok_or_else(|| Failure::Usage("the global flag --p <P> is required".into()))?;
        let ctx = AlgebraContext::new(p)?;
        let s = settings(&cli)?;
        run(&cli, ctx, &s).map(|o| (o, s.json))
    })();
    match result {
        Ok((outcome, as_json)) => {
            if as_json {
                emit(&outcome.json.to_string());
            } else {
                emit(&outcome.text);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            if as_json {
                emit(&json!({ "error": e.kind(), "message": e.to_string() }).to_string());
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

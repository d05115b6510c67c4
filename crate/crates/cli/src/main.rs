//! Command-line front end. Every run prints one JSON object on stdout
//! (schema 1, rationals as "num/den" strings) and exits 0 when decided,
//! 2 when the engine could not certify an answer at the requested
//! precision, and 1 on input errors.

use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::{json, Map, Value};

use obstrukt_core::arith::{hilbert_symbol, square_class};
use obstrukt_core::engine::{
    brauer_basis, brauer_manin_obstructed, local_points_exist, EngineOptions,
};
use obstrukt_core::experiments::{
    exceptional_classes, finiteness_scan, nonsquare_family, sv_membership, ScanOptions,
};
use obstrukt_core::{Error, Place, Poly, Rat};

#[derive(Parser)]
#[command(
    name = "obstrukt",
    about = "Brauer-Manin obstruction calculator for conic bundles y^2 - a z^2 = P(x) over Q",
    disable_help_subcommand = true
)]
struct Cli {
    /// Extra certification precision (default 0; env OBSTRUKT_PRECISION).
    #[arg(long, global = true)]
    precision: Option<u32>,

    /// Re-verify the good-place certificate by enumeration.
    #[arg(long, global = true)]
    paranoid: bool,

    /// Record undecided classes instead of aborting a scan.
    #[arg(long, global = true)]
    allow_undecided: bool,

    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hilbert symbol (a, b)_v.
    Hilbert {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        place: String,
    },
    /// Squarefree representative of a square class.
    Sqclass {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
    },
    /// Local points on the bundle at one place.
    LocalSolve {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        place: String,
    },
    /// F2-basis of Br X / Br Q.
    Basis {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
    },
    /// Full obstruction verdict.
    Obstruction {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
    },
    /// Finiteness scan over square classes |a| <= bound.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long)]
        bound: u64,
    },
    /// Twist family verdict for a = t * b over an obstructed base pair.
    Family {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-1")]
        b: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-6,0,5,0,-1")]
        poly: String,
    },
    /// Exceptional square classes of the twist family.
    Exceptional {
        #[arg(long, allow_hyphen_values = true, default_value = "-1")]
        b: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-6,0,5,0,-1")]
        poly: String,
        #[arg(long)]
        bound: u64,
    },
    /// S_v / N_v membership: is t a square in Q_v?
    Sv {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        #[arg(long)]
        place: String,
    },
}

fn parse_rat(s: &str) -> Result<Rat, Error> {
    obstrukt_core::rat_string::parse_rat(s).map_err(Error::Invalid)
}

fn parse_poly(s: &str) -> Result<Poly, Error> {
    s.parse::<Poly>()
}

fn parse_place(s: &str) -> Result<Place, Error> {
    s.parse::<Place>()
}

fn rat_str(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Flattens a serializable report into the envelope.
fn merge(into: &mut Map<String, Value>, payload: Value) {
    if let Value::Object(obj) = payload {
        into.extend(obj);
    }
}

struct Outcome {
    inputs: Value,
    payload: Value,
    undecided: bool,
}

fn run(cmd: &Cmd, engine: EngineOptions, allow_undecided: bool) -> Result<Outcome, Error> {
    let scan_opts = ScanOptions {
        engine,
        allow_undecided,
    };
    match cmd {
        Cmd::Hilbert { a, b, place } => {
            let (a, b, v) = (parse_rat(a)?, parse_rat(b)?, parse_place(place)?);
            let value = hilbert_symbol(&a, &b, v)?;
            Ok(Outcome {
                inputs: json!({"a": rat_str(&a), "b": rat_str(&b), "place": v.to_string()}),
                payload: json!({ "value": value }),
                undecided: false,
            })
        }
        Cmd::Sqclass { t } => {
            let t = parse_rat(t)?;
            let class = square_class(&t)?;
            Ok(Outcome {
                inputs: json!({"t": rat_str(&t)}),
                payload: json!({"class": class.representative().to_string()}),
                undecided: false,
            })
        }
        Cmd::LocalSolve { a, poly, place } => {
            let (a, p, v) = (parse_rat(a)?, parse_poly(poly)?, parse_place(place)?);
            let x = obstrukt_core::ConicBundle::new(&a, &p)?;
            let solvable = local_points_exist(&x, v, engine)?;
            Ok(Outcome {
                inputs: json!({"a": rat_str(&a), "poly": p.to_string(), "place": v.to_string()}),
                payload: json!({ "solvable": solvable }),
                undecided: false,
            })
        }
        Cmd::Basis { a, poly } => {
            let (a, p) = (parse_rat(a)?, parse_poly(poly)?);
            let x = obstrukt_core::ConicBundle::new(&a, &p)?;
            let basis = brauer_basis(&x)?;
            Ok(Outcome {
                inputs: json!({"a": rat_str(&a), "poly": p.to_string()}),
                payload: serde_json::to_value(&basis).expect("basis serializes"),
                undecided: false,
            })
        }
        Cmd::Obstruction { a, poly } => {
            let (a, p) = (parse_rat(a)?, parse_poly(poly)?);
            let x = obstrukt_core::ConicBundle::new(&a, &p)?;
            let report = brauer_manin_obstructed(&x, engine)?;
            Ok(Outcome {
                inputs: json!({"a": rat_str(&a), "poly": p.to_string()}),
                payload: serde_json::to_value(&report).expect("report serializes"),
                undecided: false,
            })
        }
        Cmd::Scan { poly, bound } => {
            let p = parse_poly(poly)?;
            let result = finiteness_scan(&p, *bound, scan_opts)?;
            let undecided = !result.undecided.is_empty();
            Ok(Outcome {
                inputs: json!({"poly": p.to_string(), "bound": bound}),
                payload: serde_json::to_value(&result).expect("scan serializes"),
                undecided,
            })
        }
        Cmd::Family { t, b, poly } => {
            let (t, b, p) = (parse_rat(t)?, parse_rat(b)?, parse_poly(poly)?);
            let verdict = nonsquare_family(&t, &b, &p, engine)?;
            Ok(Outcome {
                inputs: json!({"t": rat_str(&t), "b": rat_str(&b), "poly": p.to_string()}),
                payload: serde_json::to_value(&verdict).expect("verdict serializes"),
                undecided: false,
            })
        }
        Cmd::Exceptional { b, poly, bound } => {
            let (b, p) = (parse_rat(b)?, parse_poly(poly)?);
            let result = exceptional_classes(&b, &p, *bound, scan_opts)?;
            let undecided = !result.undecided.is_empty();
            Ok(Outcome {
                inputs: json!({"b": rat_str(&b), "poly": p.to_string(), "bound": bound}),
                payload: serde_json::to_value(&result).expect("report serializes"),
                undecided,
            })
        }
        Cmd::Sv { t, place } => {
            let (t, v) = (parse_rat(t)?, parse_place(place)?);
            let is_square = sv_membership(&t, v)?;
            Ok(Outcome {
                inputs: json!({"t": rat_str(&t), "place": v.to_string()}),
                payload: json!({"membership": if is_square { "S_v" } else { "N_v" }}),
                undecided: false,
            })
        }
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Hilbert { .. } => "hilbert",
        Cmd::Sqclass { .. } => "sqclass",
        Cmd::LocalSolve { .. } => "local-solve",
        Cmd::Basis { .. } => "basis",
        Cmd::Obstruction { .. } => "obstruction",
        Cmd::Scan { .. } => "scan",
        Cmd::Family { .. } => "family",
        Cmd::Exceptional { .. } => "exceptional",
        Cmd::Sv { .. } => "sv",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let out = json!({
                "schema": 1,
                "error": {"kind": "usage", "message": err.to_string()},
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            let _ = Cli::command(); // keep clap's usage metadata reachable
            return ExitCode::from(1);
        }
    };
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let precision = cli
        .precision
        .or_else(|| {
            std::env::var("OBSTRUKT_PRECISION")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let engine = EngineOptions {
        precision,
        paranoid: cli.paranoid,
    };
    let name = command_name(&cli.cmd);
    let start = Instant::now();
    match run(&cli.cmd, engine, cli.allow_undecided) {
        Ok(outcome) => {
            let mut envelope = Map::new();
            envelope.insert("schema".into(), json!(1));
            envelope.insert("command".into(), json!(name));
            envelope.insert("inputs".into(), outcome.inputs);
            merge(&mut envelope, outcome.payload);
            envelope.insert("timingMs".into(), json!(start.elapsed().as_millis() as u64));
            println!(
                "{}",
                serde_json::to_string_pretty(&Value::Object(envelope)).unwrap()
            );
            if outcome.undecided {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            let undecided = matches!(err, Error::Undecided { .. });
            let out = json!({
                "schema": 1,
                "command": name,
                "error": {
                    "kind": if undecided { "undecided" } else { "input" },
                    "message": err.to_string(),
                },
                "timingMs": start.elapsed().as_millis() as u64,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            ExitCode::from(if undecided { 2 } else { 1 })
        }
    }
}

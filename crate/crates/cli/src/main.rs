//! `qmc` — command-line front end for the q-middle convolution toolkit.
//!
//! Subcommands expose the parameter builders, the middle convolution and its
//! parameter map, the Jackson-integral transforms, the Weyl-group
//! verifications, the q-Heun transformation, and the randomized verification
//! campaigns. Everything the CLI does is reachable through the library with
//! identical results.
//!
//! Output is JSON on stdout (complex numbers as `[re, im]` pairs); human
//! diagnostics go to stderr. Exit codes: 0 pass, 1 check failure, 2 invalid
//! input, 3 runtime singularity, 64 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qmc_core::{
    jackson, qheun, qmc,
    qpvi::{self, QPVIParams},
    sampling,
    scalar::CJson,
    verify::{self, CampaignConfig, CampaignReport},
    weyl, Branch, Truncation,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::io::Read;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_SINGULARITY: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "qmc",
    about = "q-middle convolution for the Jimbo-Sakai linear problem: builders, Jackson-integral transforms, W(D5) symmetry checks, and verification campaigns",
    long_about = None,
    after_help = "JSON conventions: complex numbers are two-element arrays [re, im]; \
reports carry a schemaVersion field. Default truncation (product terms 120, \
lattice half-width 60) can be overridden with QMC_PRODUCT_TERMS and QMC_LATTICE_N."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or validate constrained Jimbo-Sakai parameter tuples
    Params(ParamsArgs),
    /// Apply the q-middle convolution: reduced system and mapped parameters
    Mc(McArgs),
    /// Run a Jackson-integral transform and report residuals
    Transform(TransformArgs),
    /// Weyl group W(D5) relation and proposition checks
    Weyl(WeylArgs),
    /// q-Heun transformation demo: parameter map, constraints, residuals
    Heun(HeunArgs),
    /// Randomized verification campaigns with JSON reports
    Campaign(CampaignArgs),
}

#[derive(Args)]
struct ParamsArgs {
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of tuples to emit
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Restrict draws to the convergent transform regime
    #[arg(long)]
    convergent: bool,
    /// Validate a JSON file (or `-` for stdin) instead of generating
    #[arg(long)]
    validate: Option<String>,
}

#[derive(Args)]
struct McArgs {
    /// Input QPVI parameters: path to JSON or `-` for stdin
    #[arg(long)]
    input: String,
    /// Eigenvalue branch of the kernel exponent
    #[arg(long, value_enum, default_value_t = BranchArg::Chi2)]
    branch: BranchArg,
    /// Scaling constant c~; defaults to chi2 of the input (the Weyl-word
    /// normalization)
    #[arg(long, value_parser = parse_complex)]
    c_tilde: Option<Complex64>,
    /// Scaling constant d~ (required on the chi1 branch)
    #[arg(long, value_parser = parse_complex)]
    d_tilde: Option<Complex64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Chi2,
    Chi1,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Branch {
        match b {
            BranchArg::Chi2 => Branch::Chi2,
            BranchArg::Chi1 => Branch::Chi1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    /// Generic q-convolution transform of a random convergent system
    Vector,
    /// Scalar middle-convolution transform of the Jimbo-Sakai instance
    Scalar,
    /// Transform in Kajiwara-Noumi-Yamada coordinates
    Kny,
    /// q-Heun integral transformation
    Heun,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, value_enum)]
    kind: TransformKind,
    /// RNG seed for the parameter draw and lattice seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lattice base point xi
    #[arg(long, value_parser = parse_complex)]
    xi: Option<Complex64>,
    /// Lattice half-width N (default from QMC_LATTICE_N or 60)
    #[arg(long)]
    n: Option<u32>,
    /// Number of probe points
    #[arg(long, default_value_t = 5)]
    probes: usize,
    /// Truncation of infinite products (default QMC_PRODUCT_TERMS or 120)
    #[arg(long)]
    product_terms: Option<u32>,
    /// Include the lattice values in the output for external plotting
    #[arg(long)]
    dump_lattice: bool,
}

#[derive(Args)]
struct WeylArgs {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct HeunArgs {
    /// RNG seed for the demo draw
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional input q-Heun parameters (JSON path or `-`)
    #[arg(long)]
    input: Option<String>,
    /// Lattice half-width for the residual demo
    #[arg(long)]
    n: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Identity,
    Transform,
    Weyl,
    All,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long, value_enum, default_value_t = Which::All)]
    which: Which,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Output path, or `-` for stdout
    #[arg(long, default_value = "-")]
    out: String,
    /// Include wall-clock runtime in the report (breaks bit-identical
    /// reproducibility of the JSON, so it is opt-in)
    #[arg(long)]
    timing: bool,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => re
            .trim()
            .parse::<f64>()
            .map(|r| Complex64::new(r, 0.0))
            .map_err(|e| e.to_string()),
        [re, im] => {
            let r = re.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let i = im.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok(Complex64::new(r, i))
        }
        _ => Err("expected `re` or `re,im`".into()),
    }
}

fn truncation_defaults(product_terms: Option<u32>, n: Option<u32>) -> Truncation {
    let from_env = |name: &str| {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse::<u32>().ok())
    };
    Truncation::new(
        product_terms
            .or_else(|| from_env("QMC_PRODUCT_TERMS"))
            .unwrap_or(120),
        n.or_else(|| from_env("QMC_LATTICE_N")).unwrap_or(60),
    )
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| e.to_string())?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
    }
}

fn emit(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Params(args) => cmd_params(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Weyl(args) => cmd_weyl(args),
        Command::Heun(args) => cmd_heun(args),
        Command::Campaign(args) => cmd_campaign(args),
    };
    ExitCode::from(code)
}

fn cmd_params(args: ParamsArgs) -> u8 {
    if let Some(path) = args.validate {
        let text = match read_input(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_BAD_INPUT;
            }
        };
        let parsed: Result<QPVIParams, _> = serde_json::from_str(&text);
        return match parsed {
            Ok(p) => match p.validate() {
                Ok(()) => {
                    emit(&json!({
                        "schemaVersion": verify::SCHEMA_VERSION,
                        "valid": true,
                        "constraintResidual": p.constraint_residual(),
                    }));
                    EXIT_OK
                }
                Err(e) => {
                    emit(&json!({
                        "schemaVersion": verify::SCHEMA_VERSION,
                        "valid": false,
                        "constraintResidual": p.constraint_residual(),
                        "error": e.to_string(),
                    }));
                    EXIT_BAD_INPUT
                }
            },
            Err(e) => {
                eprintln!("error: malformed JSON: {e}");
                EXIT_BAD_INPUT
            }
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let tuples: Vec<QPVIParams> = (0..args.count.max(1))
        .map(|_| {
            if args.convergent {
                sampling::draw_qpvi_convergent(&mut rng)
            } else {
                sampling::draw_qpvi(&mut rng)
            }
        })
        .collect();
    emit(&json!({
        "schemaVersion": verify::SCHEMA_VERSION,
        "seed": args.seed,
        "params": tuples,
    }));
    EXIT_OK
}

fn mat_json(m: &qmc_core::linalg::CMat) -> serde_json::Value {
    let rows: Vec<Vec<CJson>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| CJson(m[(i, j)])).collect())
        .collect();
    serde_json::to_value(rows).expect("serializable")
}

fn cmd_mc(args: McArgs) -> u8 {
    let text = match read_input(&args.input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let params: QPVIParams = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: malformed JSON: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    if let Err(e) = params.validate() {
        eprintln!("error: {e}");
        return EXIT_BAD_INPUT;
    }
    let branch: Branch = args.branch.into();
    if matches!(branch, Branch::Chi1) && args.d_tilde.is_none() {
        eprintln!("usage error: --branch chi1 requires --d-tilde");
        return EXIT_USAGE;
    }
    let c_tilde = args.c_tilde.unwrap_or(params.chi2);
    let reduced = match qmc::closed_form_mc(&params, branch) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SINGULARITY;
        }
    };
    let mapped = match qmc::parameter_map_mc(&params, c_tilde, branch, args.d_tilde) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SINGULARITY;
        }
    };
    let gauge_w = qmc::mc_gauge_w(&params, branch, c_tilde, args.d_tilde).ok();
    emit(&json!({
        "schemaVersion": verify::SCHEMA_VERSION,
        "branch": branch,
        "cTilde": CJson(c_tilde),
        "dTilde": args.d_tilde.map(CJson),
        "reducedSystem": {
            "bInfinity": mat_json(&reduced.system.b_infinity),
            "residues": reduced.system.residues.iter().map(|(pole, m)| json!({
                "pole": CJson(*pole),
                "matrix": mat_json(m),
            })).collect::<Vec<_>>(),
        },
        "newParams": mapped,
        "inducedGaugeW": gauge_w.map(CJson),
    }));
    EXIT_OK
}

fn cmd_transform(args: TransformArgs) -> u8 {
    let trunc = truncation_defaults(args.product_terms, args.n);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let result = run_transform(&args, trunc, &mut rng);
    match result {
        Ok(value) => {
            emit(&value);
            EXIT_OK
        }
        Err(TransformFailure::Singularity(msg)) => {
            eprintln!("error: {msg}");
            EXIT_SINGULARITY
        }
        Err(TransformFailure::Other(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CHECK_FAILED
        }
    }
}

enum TransformFailure {
    Singularity(String),
    Other(String),
}

impl From<jackson::JacksonError> for TransformFailure {
    fn from(e: jackson::JacksonError) -> Self {
        match e {
            jackson::JacksonError::LatticePole { .. }
            | jackson::JacksonError::ProbeCollision { .. }
            | jackson::JacksonError::SingularStep { .. } => {
                TransformFailure::Singularity(e.to_string())
            }
            other => TransformFailure::Other(other.to_string()),
        }
    }
}

fn run_transform(
    args: &TransformArgs,
    trunc: Truncation,
    rng: &mut ChaCha8Rng,
) -> Result<serde_json::Value, TransformFailure> {
    let n = trunc.lattice_half_width;
    let fail = TransformFailure::Other;
    match args.kind {
        TransformKind::Vector => {
            let (sys, q_lambda, q) = sampling::draw_generic_system(rng, 2);
            let xi = args.xi.unwrap_or_else(|| sampling::draw_modulus(rng, 0.9, 1.3));
            let seed = qmc_core::linalg::CVec::from_vec(vec![
                sampling::draw_unit_scale(rng),
                sampling::draw_unit_scale(rng),
            ]);
            let lat = jackson::lattice_solve(&sys, q, xi, &seed, n)?;
            let tuple = qmc::q_convolution(&sys, q_lambda);
            let probes = jackson::probe_points(xi, q, args.probes);
            let mut residual: f64 = 0.0;
            let mut tail: f64 = 0.0;
            let mut values = Vec::new();
            for probe in &probes {
                let x = probe.value();
                let (v, t) = jackson::convolution_transform(&sys, &lat, q_lambda, x, trunc)?;
                tail = tail.max(t);
                let r = jackson::system_residual(
                    |xx| {
                        jackson::convolution_transform(&sys, &lat, q_lambda, xx, trunc)
                            .map(|(v, _)| v)
                    },
                    |xx| tuple.eval(xx),
                    q,
                    x,
                )?;
                residual = residual.max(r);
                values.push(json!({
                    "x": CJson(x),
                    "value": v.iter().map(|c| CJson(*c)).collect::<Vec<_>>(),
                }));
            }
            let report = jackson::TransformReport {
                residual,
                truncation_n: n,
                tail_mass: tail,
            };
            Ok(with_lattice(
                json!({
                    "schemaVersion": verify::SCHEMA_VERSION,
                    "kind": "vector",
                    "qLambda": CJson(q_lambda),
                    "values": values,
                    "report": report,
                }),
                args.dump_lattice,
                &lat,
            ))
        }
        TransformKind::Scalar => {
            let p = sampling::draw_qpvi_convergent(rng);
            let sys = qpvi::build_b(&p, p.c0()).map_err(|e| fail(e.to_string()))?;
            let xi = args.xi.unwrap_or_else(|| sampling::draw_modulus(rng, 0.9, 1.3));
            let seed = qmc_core::linalg::CVec::from_vec(vec![
                sampling::draw_unit_scale(rng),
                sampling::draw_unit_scale(rng),
            ]);
            let lat = jackson::decaying_solution(&sys, p.q, xi, &seed, n, 40)?;
            let y1 = lat.component(0);
            let mapped = qmc::parameter_map_mc(&p, p.chi2, Branch::Chi2, None)
                .map_err(|e| fail(e.to_string()))?;
            let eq_out = qpvi::scalar_reduce(&mapped, p.chi2).map_err(|e| fail(e.to_string()))?;
            let probes = jackson::probe_points(xi, p.q, args.probes);
            let mut residual: f64 = 0.0;
            let mut tail: f64 = 0.0;
            let mut values = Vec::new();
            for probe in &probes {
                let x = probe.value();
                let (v, t) = jackson::scalar_transform(&y1, &p, x, trunc)?;
                tail = tail.max(t);
                let r = jackson::three_term_residual(
                    &eq_out,
                    |xx| jackson::scalar_transform(&y1, &p, xx, trunc).map(|(v, _)| v),
                    p.q,
                    x,
                )?;
                residual = residual.max(r);
                values.push(json!({"x": CJson(x), "value": CJson(v)}));
            }
            let report = jackson::TransformReport {
                residual,
                truncation_n: n,
                tail_mass: tail,
            };
            Ok(with_lattice(
                json!({
                    "schemaVersion": verify::SCHEMA_VERSION,
                    "kind": "scalar",
                    "params": p,
                    "values": values,
                    "report": report,
                }),
                args.dump_lattice,
                &lat,
            ))
        }
        TransformKind::Kny => {
            let p = sampling::draw_qpvi_convergent(rng);
            let kny = weyl::js_to_kny(&p);
            let l1 = weyl::kny_l1_three_term(&kny);
            let mapped = weyl::apply_word(&weyl::WeylWord(weyl::MC_WORD.to_vec()), &kny)
                .map_err(|e| fail(e.to_string()))?;
            let l1_mapped = weyl::kny_l1_three_term(&mapped);
            let xi = args.xi.unwrap_or_else(|| sampling::draw_modulus(rng, 0.9, 1.3));
            let seeds = (sampling::draw_unit_scale(rng), sampling::draw_unit_scale(rng));
            let lat = jackson::decaying_scalar_solution(&l1, p.q, xi, seeds, n, 40)?;
            let probes = jackson::probe_points(xi, p.q, args.probes);
            let mut residual: f64 = 0.0;
            let mut tail: f64 = 0.0;
            let mut values = Vec::new();
            for probe in &probes {
                let (v, t) = jackson::kny_transform(&lat, &kny, *probe, trunc)?;
                tail = tail.max(t);
                let up = jackson::kny_transform(&lat, &kny, probe.shifted(1), trunc)?.0;
                let um = jackson::kny_transform(&lat, &kny, probe.shifted(-1), trunc)?.0;
                residual = residual.max(l1_mapped.relative_residual(probe.value(), up, v, um));
                values.push(json!({"x": CJson(probe.value()), "value": CJson(v)}));
            }
            let report = jackson::TransformReport {
                residual,
                truncation_n: n,
                tail_mass: tail,
            };
            Ok(with_lattice(
                json!({
                    "schemaVersion": verify::SCHEMA_VERSION,
                    "kind": "kny",
                    "knyParams": kny,
                    "values": values,
                    "report": report,
                }),
                args.dump_lattice,
                &lat,
            ))
        }
        TransformKind::Heun => {
            let hp = sampling::draw_qheun_convergent(rng);
            let eq = qheun::build_qheun(&hp);
            let xi = args.xi.unwrap_or_else(|| sampling::draw_modulus(rng, 0.9, 1.3));
            let seeds = (sampling::draw_unit_scale(rng), sampling::draw_unit_scale(rng));
            let lat = jackson::decaying_scalar_solution(&eq.relation, hp.q, xi, seeds, n, 40)?;
            let probes = jackson::probe_points(xi, hp.q, args.probes);
            let report = qheun::heun_transform_report(&lat, &hp, &probes, trunc)
                .map_err(|e| fail(e.to_string()))?;
            let mut values = Vec::new();
            for probe in &probes {
                let (v, _) = qheun::heun_transform(&lat, &hp, probe.value(), trunc)
                    .map_err(|e| fail(e.to_string()))?;
                values.push(json!({"x": CJson(probe.value()), "value": CJson(v)}));
            }
            Ok(with_lattice(
                json!({
                    "schemaVersion": verify::SCHEMA_VERSION,
                    "kind": "heun",
                    "params": hp,
                    "transformedParams": qheun::heun_transform_params(&hp),
                    "values": values,
                    "report": report,
                }),
                args.dump_lattice,
                &lat,
            ))
        }
    }
}

fn with_lattice(
    mut value: serde_json::Value,
    dump: bool,
    lat: &jackson::LatticeFunction,
) -> serde_json::Value {
    if dump {
        let n = lat.half_width();
        let points: Vec<serde_json::Value> = (-n..=n)
            .map(|m| {
                json!({
                    "n": m,
                    "s": CJson(lat.point(m)),
                    "value": (0..lat.dim()).map(|j| CJson(lat.value(m)[j])).collect::<Vec<_>>(),
                })
            })
            .collect();
        value["lattice"] = serde_json::Value::Array(points);
    }
    value
}

fn cmd_weyl(args: WeylArgs) -> u8 {
    let cfg = CampaignConfig {
        trials: args.trials,
        seed: args.seed,
        tolerances: [
            ("involutions".to_string(), args.tol),
            ("pair_relations".to_string(), args.tol),
            ("mc_equals_word".to_string(), args.tol),
            ("chi1_equals_s3".to_string(), args.tol),
        ]
        .into_iter()
        .collect(),
        ..CampaignConfig::default()
    };
    match verify::run_weyl_campaign(&cfg) {
        Ok(report) => {
            emit(&serde_json::to_value(&report).expect("serializable"));
            if report.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn cmd_heun(args: HeunArgs) -> u8 {
    let hp = if let Some(path) = &args.input {
        let text = match read_input(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_BAD_INPUT;
            }
        };
        match serde_json::from_str::<qheun::QHeunParams>(&text) {
            Ok(p) => {
                if p.constraint_residual() > 1e-9 {
                    eprintln!(
                        "error: constraint l1 l2 l3 l4 = h1 h2 h3 q^2 violated (residual {:e})",
                        p.constraint_residual()
                    );
                    return EXIT_BAD_INPUT;
                }
                p
            }
            Err(e) => {
                eprintln!("error: malformed JSON: {e}");
                return EXIT_BAD_INPUT;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        sampling::draw_qheun_convergent(&mut rng)
    };
    let display = qheun::heun_transform_params(&hp);
    let normalized = match qheun::heun_transform_params_normalized(&hp) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SINGULARITY;
        }
    };
    // round trip through the specialized Jimbo-Sakai tuple
    let round_trip = qheun::to_qpvi(&hp)
        .and_then(|js| qheun::from_qpvi(&js, hp.sqrt_q))
        .map(|back| {
            [
                (back.h1, hp.h1),
                (back.h2, hp.h2),
                (back.h3, hp.h3),
                (back.l1, hp.l1),
                (back.l2, hp.l2),
                (back.l3, hp.l3),
                (back.l4, hp.l4),
                (back.e, hp.e),
            ]
            .iter()
            .map(|(a, b)| qmc_core::scalar::rel_err(*a, *b))
            .fold(0.0f64, f64::max)
        });
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x9e37_79b9);
    let trunc = truncation_defaults(None, args.n);
    let eq = qheun::build_qheun(&hp);
    let xi = sampling::draw_modulus(&mut rng, 0.9, 1.3);
    let seeds = (
        sampling::draw_unit_scale(&mut rng),
        sampling::draw_unit_scale(&mut rng),
    );
    let report = jackson::decaying_scalar_solution(
        &eq.relation,
        hp.q,
        xi,
        seeds,
        trunc.lattice_half_width,
        40,
    )
    .map_err(|e| e.to_string())
    .and_then(|lat| {
        let probes = jackson::probe_points(xi, hp.q, 5);
        qheun::heun_transform_report(&lat, &hp, &probes, trunc).map_err(|e| e.to_string())
    });
    emit(&json!({
        "schemaVersion": verify::SCHEMA_VERSION,
        "params": hp,
        "transformedParams": display,
        "transformedParamsConstraintResidual": display.constraint_residual(),
        "transformedParamsNormalized": normalized,
        "normalizedConstraintResidual": normalized.constraint_residual(),
        "dictionaryRoundTripDeviation": round_trip.as_ref().ok(),
        "transformReport": report.as_ref().ok(),
    }));
    match (round_trip, report) {
        (Ok(dev), Ok(_)) if dev < 1e-10 => EXIT_OK,
        (Err(e), _) => {
            eprintln!("error: {e}");
            EXIT_SINGULARITY
        }
        (_, Err(e)) => {
            eprintln!("error: {e}");
            EXIT_SINGULARITY
        }
        _ => EXIT_CHECK_FAILED,
    }
}

fn cmd_campaign(args: CampaignArgs) -> u8 {
    let cfg = CampaignConfig {
        trials: args.trials,
        seed: args.seed,
        ..CampaignConfig::default()
    };
    let started = std::time::Instant::now();
    let reports: Result<Vec<CampaignReport>, _> = match args.which {
        Which::Identity => verify::run_identity_campaign(&cfg).map(|r| vec![r]),
        Which::Transform => verify::run_transform_campaign(&cfg).map(|r| vec![r]),
        Which::Weyl => verify::run_weyl_campaign(&cfg).map(|r| vec![r]),
        Which::All => verify::run_all(&cfg),
    };
    let mut reports = match reports {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if args.timing {
        let elapsed = started.elapsed().as_millis() as u64;
        for r in reports.iter_mut() {
            r.runtime_millis = Some(elapsed);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    for r in &reports {
        for check in &r.checks {
            eprintln!(
                "[{}] {} {}: max deviation {:.3e} (tolerance {:.1e}){}",
                r.campaign,
                if check.pass { "PASS" } else { "FAIL" },
                check.name,
                check.max_deviation,
                check.tolerance,
                check
                    .note
                    .as_ref()
                    .map(|n| format!(" — {n}"))
                    .unwrap_or_default()
            );
        }
    }
    let value = serde_json::to_value(&reports).expect("serializable");
    let text = serde_json::to_string_pretty(&value).expect("serializable");
    if args.out == "-" {
        println!("{text}");
    } else if let Err(e) = std::fs::write(&args.out, text) {
        eprintln!("error: cannot write {}: {e}", args.out);
        return EXIT_BAD_INPUT;
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

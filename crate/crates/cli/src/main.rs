use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use halfplane::constants::{bekolle_bonami, bekolle_infinity, class_constant, sawyer_testing, ClassCondition};
use halfplane::lab::expr::{parse_field, parse_measure, parse_young};
use halfplane::lab::{sharpness_sweep, verify, Scenario, SweepOptions, TheoremTag};
use halfplane::operators::{
    bergman_positive, dyadic_maximal, dyadic_positive_operator, exp_maximal, fractional_maximal_bracket, orlicz_maximal,
    FractionalAverage, Moments, Params,
};
use halfplane::orlicz::{complementary, ProbeGrid};
use halfplane::{Error, Interval, Point, QuadratureSpec, ScaleWindow, Shift};

const EXIT_FAIL: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "halfplane", version, about = "Weighted fractional maximal operators on the upper half-plane")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// |Q_I|_α, |T_I|_α or a weighted/general measure of a box
    Measure(MeasureArgs),
    /// Evaluate a maximal or positive operator at points (CSV)
    MaximalEval(EvalArgs),
    /// Compute a weight constant (JSON report)
    Constant(ConstantArgs),
    /// Run a theorem check from a scenario config
    Verify(VerifyArgs),
    /// ε-sweep of the extremal pair with rate regression
    Sharpness(SharpnessArgs),
}

#[derive(Args)]
struct Outputs {
    /// CSV destination (default: stdout)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary destination (default: stderr)
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Exponents {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// defaults to the critical exponent 1/q = 1/p - γ/(2+α)
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// j_min,j_max,x_lo,x_hi
    #[arg(long, default_value = "-6,3,-4,4", allow_hyphen_values = true)]
    window: String,
}

impl Exponents {
    fn params(&self) -> halfplane::Result<Params> {
        match self.q {
            Some(q) => Params::new(self.p, q, self.alpha, self.gamma),
            None => Params::critical(self.p, self.alpha, self.gamma),
        }
        .map_err(|e| config("params", e))
    }

    fn window(&self) -> halfplane::Result<ScaleWindow> {
        parse_window(&self.window)
    }
}

#[derive(Args)]
struct MeasureArgs {
    /// a,b
    #[arg(long, allow_hyphen_values = true)]
    interval: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    /// density field; the measure is `weight · dV_α`
    #[arg(long)]
    weight: Option<String>,
    /// any measure expression (overrides --weight)
    #[arg(long)]
    mu: Option<String>,
    /// measure only the top half T_I
    #[arg(long)]
    top_half: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum Operator {
    /// M^{d,β} with the chosen normalisation
    Dyadic,
    /// certified bracket of the non-dyadic fractional maximal function
    Bracket,
    /// exp-log maximal function
    Exp,
    /// Luxembourg-norm maximal function
    Orlicz,
    /// T_{α,γ} f
    Bergman,
    /// Σ over the dyadic chain of Q^β f
    Positive,
}

#[derive(Copy, Clone, ValueEnum)]
enum Norm {
    Side,
    Alpha,
    Weighted,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    op: Operator,
    /// field expression for f
    #[arg(long)]
    f: String,
    /// x,y;x,y;...
    #[arg(long, allow_hyphen_values = true)]
    points: String,
    #[command(flatten)]
    exps: Exponents,
    #[arg(long, value_enum, default_value = "side")]
    norm: Norm,
    /// weight σ for the weighted normalisation
    #[arg(long)]
    sigma: Option<String>,
    /// Young function for the Orlicz maximal function
    #[arg(long)]
    phi: Option<String>,
    /// grid: 0 or 1/3
    #[arg(long, default_value = "0")]
    shift: String,
    #[arg(long, default_value_t = 3)]
    density: u32,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Copy, Clone, ValueEnum)]
enum ConstantKind {
    #[value(name = "Bp")]
    Bp,
    #[value(name = "Binf")]
    Binf,
    #[value(name = "Apq")]
    Apq,
    #[value(name = "Cpq")]
    Cpq,
    #[value(name = "Spq")]
    Spq,
    #[value(name = "Bpq")]
    Bpq,
    #[value(name = "strong")]
    Strong,
    #[value(name = "weak")]
    Weak,
    #[value(name = "bump")]
    Bump,
    #[value(name = "double-bump")]
    DoubleBump,
    #[value(name = "sawyer")]
    Sawyer,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(value_enum)]
    name: ConstantKind,
    /// ω
    #[arg(long, default_value = "const 1")]
    weight: String,
    #[arg(long, default_value = "const 1")]
    sigma: String,
    #[arg(long, default_value = "lebesgue")]
    mu: String,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, default_value = "0")]
    shift: String,
    #[command(flatten)]
    exps: Exponents,
}

#[derive(Args)]
struct VerifyArgs {
    /// theorem tag, e.g. T2.1a or S5
    tag: String,
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: Outputs,
}

#[derive(Args)]
struct SharpnessArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// comma-separated ε values in (0, 1)
    #[arg(long, default_value = "0.2,0.1,0.05,0.025")]
    eps: String,
    #[arg(long, default_value_t = 10)]
    depth: i32,
    #[command(flatten)]
    out: Outputs,
}

fn config(path: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::Config { path: path.into(), msg: other.to_string() },
    }
}

fn numbers(path: &str, text: &str, sep: char) -> halfplane::Result<Vec<f64>> {
    text.split(sep)
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config { path: path.into(), msg: format!("`{}`: {e}", t.trim()) })
        })
        .collect()
}

fn parse_window(text: &str) -> halfplane::Result<ScaleWindow> {
    let v = numbers("window", text, ',')?;
    if v.len() != 4 || v[0].fract() != 0.0 || v[1].fract() != 0.0 {
        return Err(Error::Config { path: "window".into(), msg: "expected j_min,j_max,x_lo,x_hi with integer scales".into() });
    }
    ScaleWindow::new(v[0] as i32, v[1] as i32, v[2], v[3]).map_err(|e| config("window", e))
}

fn parse_shift(text: &str) -> halfplane::Result<Shift> {
    match text.trim() {
        "0" => Ok(Shift::Zero),
        "1/3" => Ok(Shift::Third),
        other => Err(Error::Config { path: "shift".into(), msg: format!("`{other}` is not 0 or 1/3") }),
    }
}

fn parse_points(text: &str) -> halfplane::Result<Vec<Point>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let v = numbers("points", s, ',')?;
            if v.len() != 2 || !(v[1] > 0.0) {
                return Err(Error::Config { path: "points".into(), msg: format!("`{s}` is not x,y with y > 0") });
            }
            Ok(Point::new(v[0], v[1]))
        })
        .collect()
}

fn csv_writer(path: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn emit_json(path: &Option<PathBuf>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn measure(a: &MeasureArgs) -> Result<u8> {
    let v = numbers("interval", &a.interval, ',')?;
    if v.len() != 2 || !(v[1] > v[0]) {
        return Err(Error::Config { path: "interval".into(), msg: "expected a,b with a < b".into() }.into());
    }
    let iv = Interval::new(v[0], v[1]);
    let rect = if a.top_half { iv.top_half() } else { iv.carleson_box() };
    let mu = match (&a.mu, &a.weight) {
        (Some(m), _) => parse_measure("mu", m, a.alpha)?,
        (None, Some(w)) => halfplane::BorelMeasure::Density { density: parse_field("weight", w)?, alpha: a.alpha },
        (None, None) => halfplane::BorelMeasure::lebesgue(a.alpha),
    };
    let value = mu.of_rect(&rect, &QuadratureSpec::default())?;
    let out = json!({
        "interval": [iv.lo, iv.hi],
        "alpha": a.alpha,
        "part": if a.top_half { "top_half" } else { "box" },
        "value": value,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn maximal_eval(a: &EvalArgs) -> Result<u8> {
    let params = a.exps.params()?;
    let w = a.exps.window()?;
    let spec = QuadratureSpec::default();
    let f = parse_field("f", &a.f)?;
    let shift = parse_shift(&a.shift)?;
    let points = parse_points(&a.points)?;
    let mut wr = csv_writer(&a.out.csv)?;
    let avg = match a.norm {
        Norm::Side => FractionalAverage::side_length(&f, &params, &spec),
        Norm::Alpha => FractionalAverage::alpha_measure(&f, &params, &spec),
        Norm::Weighted => {
            let s = a.sigma.as_deref().ok_or_else(|| Error::Config { path: "sigma".into(), msg: "weighted needs --sigma".into() })?;
            FractionalAverage::weighted(&f, &parse_field("sigma", s)?, &params, &spec)
        }
    };
    let moments = Moments::new(f.clone(), params.alpha, spec);
    let phi = a.phi.as_deref().map(|t| parse_young("phi", t)).transpose()?;
    wr.write_record(["x", "y", "value", "lower", "upper", "tail_flag"])?;
    let mut rows = 0;
    for z in points {
        let (value, lower, upper, tail) = match a.op {
            Operator::Dyadic => (dyadic_maximal(&avg, shift, z, &w)?, None, None, None),
            Operator::Bracket => {
                let b = fractional_maximal_bracket(&moments, &params, z, &w, a.density)?;
                (b.lower, Some(b.lower), Some(b.upper), None)
            }
            Operator::Exp => (exp_maximal(&f, params.alpha, shift, z, &w, &spec)?, None, None, None),
            Operator::Orlicz => {
                let phi = phi.as_ref().ok_or_else(|| Error::Config { path: "phi".into(), msg: "orlicz needs --phi".into() })?;
                (orlicz_maximal(&f, phi, params.alpha, shift, z, &w, &spec)?, None, None, None)
            }
            Operator::Bergman => (bergman_positive(&f, &params, z, &w, &spec)?, None, None, None),
            Operator::Positive => {
                let s = dyadic_positive_operator(&moments, &params, shift, z, &w)?;
                (s.value, None, None, Some(s.tail_flag))
            }
        };
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        wr.write_record([fmt(z.x), fmt(z.y), fmt(value), opt(lower), opt(upper), tail.map(|t| t.to_string()).unwrap_or_default()])?;
        rows += 1;
    }
    wr.flush()?;
    emit_json(&a.out.json, &json!({ "subcommand": "maximal-eval", "csv_schema": "maximal-eval/v1", "rows": rows, "params": params }))?;
    Ok(0)
}

fn constant(a: &ConstantArgs) -> Result<u8> {
    let params = a.exps.params()?;
    let w = a.exps.window()?;
    let spec = QuadratureSpec::default();
    let alpha = params.alpha;
    let omega = parse_field("weight", &a.weight)?;
    let sigma = parse_field("sigma", &a.sigma)?;
    let mu = parse_measure("mu", &a.mu, alpha)?;
    let young = |path: &str, v: &Option<String>| -> Result<halfplane::orlicz::YoungFunction> {
        let t = v.as_deref().ok_or_else(|| Error::Config { path: path.into(), msg: format!("this constant needs --{path}") })?;
        Ok(parse_young(path, t)?)
    };
    let report = match a.name {
        ConstantKind::Bp => bekolle_bonami(&omega, params.p, alpha, &w, &spec)?,
        ConstantKind::Binf => bekolle_infinity(&omega, alpha, &w, &spec)?,
        ConstantKind::Apq => class_constant(&ClassCondition::Apq { sigma, omega }, &params, &w, &spec)?,
        ConstantKind::Cpq => class_constant(&ClassCondition::Cpq { sigma, omega }, &params, &w, &spec)?,
        ConstantKind::Spq => class_constant(&ClassCondition::Spq { sigma, omega }, &params, &w, &spec)?,
        ConstantKind::Bpq => class_constant(&ClassCondition::BpqJoint { omega }, &params, &w, &spec)?,
        ConstantKind::Strong => class_constant(&ClassCondition::StrongClass { sigma, mu }, &params, &w, &spec)?,
        ConstantKind::Weak => class_constant(&ClassCondition::WeakClass { omega, mu }, &params, &w, &spec)?,
        ConstantKind::Bump => {
            // Ψ given directly, or the complement of Φ
            let psi = match (&a.psi, &a.phi) {
                (Some(_), _) => young("psi", &a.psi)?,
                (None, Some(_)) => complementary(&young("phi", &a.phi)?, &ProbeGrid::default())?,
                (None, None) => young("psi", &a.psi)?,
            };
            class_constant(&ClassCondition::BumpSingle { omega, mu, psi }, &params, &w, &spec)?
        }
        ConstantKind::DoubleBump => {
            let (phi, psi) = (young("phi", &a.phi)?, young("psi", &a.psi)?);
            class_constant(&ClassCondition::BumpDouble { omega, sigma, phi, psi }, &params, &w, &spec)?
        }
        ConstantKind::Sawyer => sawyer_testing(&sigma, &mu, &params, parse_shift(&a.shift)?, &w, &spec)?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn run_verify(a: &VerifyArgs) -> Result<u8> {
    let tag: TheoremTag = a.tag.parse()?;
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Error::Config { path: a.config.display().to_string(), msg: e.to_string() })?;
    let sc = Scenario::from_json(&text)?;
    if sc.tag != tag {
        return Err(Error::Config { path: "tag".into(), msg: format!("config is for {}, not {tag}", sc.tag) }.into());
    }
    let r = verify(&sc)?;
    let mut wr = csv_writer(&a.out.csv)?;
    wr.write_record(["trial", "label", "lhs", "rhs", "ratio"])?;
    for row in &r.rows {
        wr.write_record([row.trial.to_string(), row.label.clone(), fmt(row.lhs), fmt(row.rhs), fmt(row.ratio)])?;
    }
    wr.flush()?;
    let mut summary = serde_json::to_value(&r)?;
    if let Value::Object(m) = &mut summary {
        m.remove("rows");
        m.insert("scenario".into(), json!(sc.name));
        m.insert("csv_schema".into(), json!("verify/v1"));
        m.insert("exit_code".into(), json!(r.exit_code()));
    }
    emit_json(&a.out.json, &summary)?;
    Ok(r.exit_code() as u8)
}

fn sharpness(a: &SharpnessArgs) -> Result<u8> {
    let params = Params::critical(a.p, a.alpha, a.gamma).map_err(|e| config("params", e))?;
    let eps = numbers("eps", &a.eps, ',')?;
    let opts = SweepOptions { depth: a.depth, ..SweepOptions::default() };
    let rep = match sharpness_sweep(&params, &eps, &opts) {
        Ok(r) => r,
        Err(Error::TailDominated(msg)) => {
            emit_json(&a.out.json, &json!({ "subcommand": "sharpness", "pass": false, "inconclusive": true, "reason": msg }))?;
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(e.into()),
    };
    let mut wr = csv_writer(&a.out.csv)?;
    wr.write_record(["eps", "bpq", "norm_wf", "norm_wmf", "ratio", "ratio_deviation", "tail_flag"])?;
    for r in &rep.rows {
        wr.write_record([
            fmt(r.eps),
            fmt(r.bpq),
            fmt(r.norm_wf),
            fmt(r.norm_wmf),
            fmt(r.ratio),
            fmt(r.ratio_deviation),
            r.tail_flag.to_string(),
        ])?;
    }
    wr.flush()?;
    emit_json(
        &a.out.json,
        &json!({
            "subcommand": "sharpness",
            "csv_schema": "sharpness/v1",
            "params": params,
            "fits": rep.fits,
            "pass": rep.pass,
        }),
    )?;
    Ok(if rep.pass { 0 } else { EXIT_FAIL })
}

fn exit_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config { .. }) => EXIT_CONFIG,
        Some(Error::Inconclusive(_)) | Some(Error::TailDominated(_)) => EXIT_INCONCLUSIVE,
        _ => EXIT_FAIL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let out = match &cli.cmd {
        Command::Measure(a) => measure(a),
        Command::MaximalEval(a) => maximal_eval(a),
        Command::Constant(a) => constant(a),
        Command::Verify(a) => run_verify(a),
        Command::Sharpness(a) => sharpness(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}

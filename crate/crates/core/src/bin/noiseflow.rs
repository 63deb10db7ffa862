use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use noiseflow::cascaded::{delta_n, CascadedParams, Channel, LinearSystem};
use noiseflow::fcs::{flow_stats, FcsError, MAX_CUMULANT_ORDER};
use noiseflow::optomech::{design_nonreciprocal, map_to_cascaded, preset_microwave, OmParams};
use noiseflow::sweep::{emit, parse_config, run_sweep_with, Format, ModelKind, ModelParams, ParamSet, Preset};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "noiseflow", version, about = "Thermal noise transport between two oscillators with a shared bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state occupations at one parameter point.
    SteadyState(PointArgs),
    /// Evaluate a sweep config and write CSV or JSON.
    Sweep(SweepArgs),
    /// Large-deviation function and flow cumulants of one bath.
    Fcs(FcsArgs),
    /// Map optomechanical parameters onto the cascaded model.
    MapOm(PointArgs),
    /// Hopping and phase that make the optomechanical link non-reciprocal.
    Design(PointArgs),
    /// Print a built-in parameter set.
    Preset { name: PresetName },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Microwave,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Cascaded,
    Optomech,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct PointArgs {
    /// Model the parameters belong to; a preset implies optomech.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Start from a built-in optomechanical parameter set.
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Replace J and phi by the non-reciprocal design point (optomech only).
    #[arg(long)]
    design: bool,
    /// Parameter assignment `name=value`; repeatable.
    #[arg(short = 'p', long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep config.
    config: PathBuf,
    /// Override the config's output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate grid points in parallel.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct FcsArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Counted bath: 1 and 2 are local, 3 is the shared bath.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    channel: u8,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    s_min: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    s_max: f64,
    #[arg(long, default_value_t = 21)]
    s_points: usize,
    /// Highest cumulant order reported (at most 4).
    #[arg(long, default_value_t = 2)]
    orders: usize,
    /// Finite-difference step for the cumulants.
    #[arg(long, default_value_t = noiseflow::fcs::DEFAULT_CUMULANT_STEP)]
    h: f64,
}

enum Failure {
    Config(String),
    Numeric(String),
}

type CmdResult = Result<(), Failure>;

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Numeric(e.to_string())
}

impl PointArgs {
    fn param_set(&self) -> Result<ParamSet, Failure> {
        let model = match (self.model, self.preset) {
            (Some(ModelArg::Cascaded), Some(_)) => {
                return Err(Failure::Config("presets apply to the optomech model".into()))
            }
            (Some(ModelArg::Cascaded), None) | (None, None) if !self.design => ModelKind::Cascaded,
            _ => ModelKind::Optomech,
        };
        let mut set = ParamSet::new(model);
        set.preset = self.preset.map(|PresetName::Microwave| Preset::Microwave);
        set.design = self.design;
        for a in &self.params {
            set.set_assignment(a).map_err(config)?;
        }
        Ok(set)
    }

    fn build(&self) -> Result<ModelParams, Failure> {
        self.param_set()?.build().map_err(config)
    }

    fn optomech(&self) -> Result<OmParams, Failure> {
        match self.build()? {
            ModelParams::Optomech(p) => Ok(p),
            ModelParams::Cascaded(_) => Err(Failure::Config("this command needs optomech parameters".into())),
        }
    }
}

fn cascaded_of(p: &ModelParams) -> CascadedParams {
    match p {
        ModelParams::Cascaded(c) => *c,
        ModelParams::Optomech(o) => map_to_cascaded(o),
    }
}

fn cascaded_json(p: &CascadedParams) -> Value {
    json!({
        "omega1": p.omega1,
        "omega2": p.omega2,
        "kappa1": p.kappa1,
        "kappa2": p.kappa2,
        "gamma1": p.gamma1,
        "gamma2": p.gamma2,
        "phi": p.phi,
        "F_re": p.f.re,
        "F_im": p.f.im,
        "Nbar1": p.nbar1,
        "Nbar2": p.nbar2,
        "Nbar3": p.nbar3,
    })
}

fn om_json(p: &OmParams) -> Value {
    json!({
        "omega_m": p.omega_m,
        "gamma_m": p.gamma_m,
        "Delta1": p.delta1,
        "Delta2": p.delta2,
        "kappa1": p.kappa1,
        "kappa2": p.kappa2,
        "kappa_ext1": p.kappa_ext1,
        "kappa_ext2": p.kappa_ext2,
        "J": p.j,
        "phi": p.phi,
        "G1": p.g1,
        "G2": p.g2,
        "Omega": p.eval_frequency(),
        "Nbar1": p.nbar1,
        "Nbar2": p.nbar2,
        "Nbar_m": p.nbar_m,
        "cavity_frequency": p.cavity_frequency,
    })
}

fn write_stdout(bytes: &[u8]) {
    let mut out = std::io::stdout().lock();
    // a closed pipe (e.g. `| head`) is not an error
    let _ = out.write_all(bytes).and_then(|()| out.flush());
}

fn print_json(v: &Value) {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    write_stdout(text.as_bytes());
}

fn system_of(p: &CascadedParams) -> Result<LinearSystem, Failure> {
    noiseflow::cascaded::build_system(p).map_err(config)
}

fn steady_state(args: &PointArgs) -> CmdResult {
    let p = cascaded_of(&args.build()?);
    let sys = system_of(&p)?;
    let occ = sys.steady_state().map_err(numeric)?.occupations();
    let eta = noiseflow::fcs::flows(&sys).map_err(numeric)?;
    let mut out = json!({
        "n1": occ.n1,
        "n2": occ.n2,
        "clamped": occ.clamped,
        "stability_margin": sys.stability_margin(),
        "eta1": eta[0],
        "eta2": eta[1],
        "eta3": eta[2],
        "F_residual": p.f.norm(),
    });
    if let Ok(r) = delta_n(&p) {
        let obj = out.as_object_mut().expect("object");
        obj.insert("m1".into(), r.m1.into());
        obj.insert("m2".into(), r.m2.into());
        obj.insert("dn1".into(), (occ.n1 - r.m1).into());
        obj.insert("dn2".into(), (occ.n2 - r.m2).into());
        obj.insert("n1_closed".into(), r.n1.into());
        obj.insert("n2_closed".into(), r.n2.into());
        obj.insert("dn1_closed".into(), r.dn1.into());
        obj.insert("dn2_closed".into(), r.dn2.into());
    }
    print_json(&out);
    Ok(())
}

fn sweep(args: &SweepArgs) -> CmdResult {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let cfg = parse_config(&text).map_err(config)?;
    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.format,
    };
    let rows = run_sweep_with(&cfg, cfg.parallel || args.parallel);
    let bytes = emit(&cfg.columns(), &rows, format);
    match &args.out {
        Some(path) => fs::write(path, &bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        None => {
            write_stdout(&bytes);
            Ok(())
        }
    }
}

fn fcs(args: &FcsArgs) -> CmdResult {
    if args.s_points == 0 || (args.s_points == 1 && args.s_min != args.s_max) || !(args.s_min <= args.s_max) {
        return Err(Failure::Config("need s-min <= s-max and s-points >= 2".into()));
    }
    if args.orders > MAX_CUMULANT_ORDER {
        return Err(Failure::Config(format!("--orders must be at most {MAX_CUMULANT_ORDER}")));
    }
    let p = cascaded_of(&args.point.build()?);
    let sys = system_of(&p)?;
    let channel = Channel::from_index(args.channel as usize).expect("range checked by clap");
    let grid: Vec<f64> = if args.s_points == 1 {
        vec![args.s_min]
    } else {
        (0..args.s_points)
            .map(|k| args.s_min + (args.s_max - args.s_min) * k as f64 / (args.s_points - 1) as f64)
            .collect()
    };
    let stats = flow_stats(channel, &sys, &grid, args.orders, args.h).map_err(|e| match e {
        FcsError::InvalidInput(_) | FcsError::ZeroRateChannel(_) | FcsError::InvalidOrder(_) => config(e),
        other => numeric(other),
    })?;
    let theta: Vec<Value> = stats
        .theta_samples
        .iter()
        .map(|t| json!({"s": t.s, "theta": t.theta}))
        .collect();
    let cumulants: serde_json::Map<String, Value> = stats
        .cumulants
        .iter()
        .map(|(n, c)| (n.to_string(), json!(c)))
        .collect();
    print_json(&json!({
        "channel": args.channel,
        "theta": theta,
        "eta": stats.eta,
        "cumulants": cumulants,
    }));
    Ok(())
}

fn map_om(args: &PointArgs) -> CmdResult {
    let om = args.optomech()?;
    let p = map_to_cascaded(&om);
    let margin = noiseflow::linalg::stability_margin(&system_of(&p)?.drift);
    print_json(&json!({
        "cascaded": cascaded_json(&p),
        "F_residual": p.f.norm(),
        "stability_margin": margin,
    }));
    Ok(())
}

fn design(args: &PointArgs) -> CmdResult {
    let om = args.optomech()?;
    let d = design_nonreciprocal(&om).map_err(numeric)?;
    print_json(&json!({
        "J_star": d.j_star,
        "phi_star": d.phi_star,
        "F_residual": d.residual,
    }));
    Ok(())
}

fn preset(name: PresetName) -> CmdResult {
    let p = match name {
        PresetName::Microwave => preset_microwave(),
    };
    print_json(&json!({"optomech": om_json(&p), "cascaded": cascaded_json(&map_to_cascaded(&p))}));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SteadyState(a) => steady_state(a),
        Command::Sweep(a) => sweep(a),
        Command::Fcs(a) => fcs(a),
        Command::MapOm(a) => map_om(a),
        Command::Design(a) => design(a),
        Command::Preset { name } => preset(*name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`.

use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noiseflow::cascaded::{
    build_system, closed_form_occupations, delta_n, steady_state, CascadedParams, Channel,
};
use noiseflow::fcs::{
    flow_cumulant, flows, large_deviation, resolve_simplified_reading, simplified_flows, BiasSpec,
    SimplifiedReading, DEFAULT_CUMULANT_STEP,
};
use noiseflow::optomech::{
    apply_design, build_om_drift, design_nonreciprocal, map_to_cascaded, mech_susceptibility, om_system,
    preset_microwave, OmParams,
};
use noiseflow::sweep::{emit, parse_config, run_sweep_with, Format, RowStatus};

type Outcome = Result<String, String>;

fn check(ok: bool, pass: String, fail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn polar(rng: &mut ChaCha8Rng, max: f64) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.0..max), rng.gen_range(0.0..TAU))
}

fn equal_rate_draw(rng: &mut ChaCha8Rng) -> CascadedParams {
    let k = rng.gen_range(0.1..10.0);
    let mut p = CascadedParams::equal_rate(
        k,
        rng.gen_range(-20.0..20.0) * k,
        rng.gen_range(0.0..TAU),
        polar(rng, 5.0 * k),
        [rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)],
    );
    let w = rng.gen_range(-50.0..50.0);
    p.omega1 += w;
    p.omega2 += w;
    p
}

fn general_draw(rng: &mut ChaCha8Rng) -> CascadedParams {
    CascadedParams {
        omega1: rng.gen_range(-3.0..3.0),
        omega2: rng.gen_range(-3.0..3.0),
        kappa1: rng.gen_range(0.05..3.0),
        kappa2: rng.gen_range(0.05..3.0),
        gamma1: rng.gen_range(0.05..3.0),
        gamma2: rng.gen_range(0.05..3.0),
        phi: rng.gen_range(0.0..TAU),
        f: polar(rng, 3.0),
        nbar1: rng.gen_range(0.0..20.0),
        nbar2: rng.gen_range(0.0..20.0),
        nbar3: rng.gen_range(0.0..20.0),
    }
}

fn om_draw(rng: &mut ChaCha8Rng) -> OmParams {
    let omega_m = rng.gen_range(1.0..100.0);
    let gamma_m = rng.gen_range(0.01..2.0);
    let (k1, k2) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
    OmParams {
        omega_m,
        gamma_m,
        delta1: rng.gen_range(-120.0..120.0),
        delta2: rng.gen_range(-120.0..120.0),
        kappa1: k1,
        kappa2: k2,
        kappa_ext1: k1 * rng.gen_range(0.0..1.0),
        kappa_ext2: k2 * rng.gen_range(0.0..1.0),
        j: rng.gen_range(-5.0..5.0),
        phi: rng.gen_range(-PI..PI),
        g1: rng.gen_range(0.01..2.0),
        g2: rng.gen_range(0.01..2.0),
        omega_eval: Some(omega_m + rng.gen_range(-3.0..3.0) * gamma_m),
        nbar1: rng.gen_range(0.0..10.0),
        nbar2: rng.gen_range(0.0..10.0),
        nbar_m: rng.gen_range(0.0..10.0),
        cavity_frequency: None,
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut n = 0;
    while n < 1000 {
        let p = equal_rate_draw(&mut rng);
        if build_system(&p).map_err(|e| e.to_string())?.stability_margin() >= 0.0 {
            continue;
        }
        let occ = steady_state(&p).map_err(|e| e.to_string())?.occupations();
        let (c1, c2) = closed_form_occupations(&p).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(occ.n1, c1)).max(rel_err(occ.n2, c2));
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8,
        format!("{n} draws, max relative error {worst:.2e}, {secs:.2} s"),
        || format!("max relative error {worst:.2e} > 1e-8"),
    )
}

const DETUNING_GRID: &str = r#"{
  "model": "cascaded",
  "params": {"kappa": 1, "phi": 0, "F": 0, "m1": 50, "m2": 100},
  "axes": [
    {"name": "Delta", "min": -10, "max": 10, "points": 101},
    {"name": "m3", "min": 0, "max": 100, "points": 101}
  ],
  "outputs": ["dn1", "dn2", "m1"],
  "format": "csv"
}"#;

fn criterion_2_and_3() -> (Outcome, Outcome) {
    let cfg = parse_config(DETUNING_GRID).expect("detuning grid config parses");
    let rows = run_sweep_with(&cfg, true);
    let k = 1.0;
    let (mut dn1_max, mut lorentz_max, mut bad_status) = (0.0_f64, 0.0_f64, 0);
    let (mut zero_max, mut sign_errors) = (0.0_f64, 0);
    let mut spot = f64::NAN;
    for row in &rows {
        if row.status != RowStatus::Ok {
            bad_status += 1;
            continue;
        }
        let (delta, m3) = (row.axes[0], row.axes[1]);
        let (dn1, dn2, m1) = (row.values[0].unwrap(), row.values[1].unwrap(), row.values[2].unwrap());
        dn1_max = dn1_max.max(dn1.abs());
        let scaled = dn2 * (4.0 * k * k + delta * delta) / (2.0 * k * k);
        lorentz_max = lorentz_max.max((scaled - (m1 - m3)).abs());
        if m3 == 50.0 {
            zero_max = zero_max.max(dn2.abs());
        } else if (m3 < 50.0 && dn2 <= 0.0) || (m3 > 50.0 && dn2 >= 0.0) {
            sign_errors += 1;
        }
        if delta == 0.0 && m3 == 0.0 {
            spot = dn2;
        }
    }
    let c2 = check(
        dn1_max <= 1e-10 && lorentz_max <= 1e-9 && bad_status == 0,
        format!("{} points, max |dn1| {dn1_max:.2e}, max Lorentzian error {lorentz_max:.2e}", rows.len()),
        || format!("max |dn1| {dn1_max:.2e}, Lorentzian error {lorentz_max:.2e}, {bad_status} non-ok rows"),
    );
    let c3 = check(
        zero_max <= 1e-9 && sign_errors == 0 && (spot - 25.0).abs() <= 1e-9,
        format!("zero line max |dn2| {zero_max:.2e}, no sign errors, dn2(0, 0) = {spot:.12}"),
        || format!("zero line {zero_max:.2e}, {sign_errors} sign errors, spot {spot}"),
    );
    (c2, c3)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.gen_range(0.0..200.0);
        let p = CascadedParams { nbar1: n, nbar2: n, nbar3: n, ..equal_rate_draw(&mut rng) };
        let occ = steady_state(&p).map_err(|e| e.to_string())?.occupations();
        let (c1, c2) = closed_form_occupations(&p).map_err(|e| e.to_string())?;
        let d = delta_n(&p).map_err(|e| e.to_string())?;
        for x in [occ.n1, occ.n2, c1, c2, d.n1, d.n2] {
            worst = worst.max((x - n).abs() / n.max(1.0));
        }
    }
    check(worst <= 1e-10, format!("1000 draws, max deviation {worst:.2e}"), || {
        format!("max deviation {worst:.2e} > 1e-10")
    })
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut drift_err, mut rate_err) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let p = om_draw(&mut rng);
        let omega = p.eval_frequency();
        let (m, _) = build_om_drift(&p, omega);
        let c = map_to_cascaded(&p);
        let mapped = build_system(&c).map_err(|e| e.to_string())?.drift;
        let scale = m.max_abs();
        for i in 0..2 {
            for j in 0..2 {
                drift_err = drift_err.max((m[(i, j)] - mapped[(i, j)]).norm() / scale);
            }
        }
        let chi = mech_susceptibility(omega, &p).chi.norm();
        rate_err = rate_err
            .max(rel_err(c.gamma1.sqrt(), p.g1 * p.gamma_m.sqrt() * chi))
            .max(rel_err(c.gamma2.sqrt(), p.g2 * p.gamma_m.sqrt() * chi));
    }
    check(
        drift_err <= 1e-12 && rate_err <= 1e-12,
        format!("1000 draws, drift error {drift_err:.2e}, rate error {rate_err:.2e}"),
        || format!("drift error {drift_err:.2e}, rate error {rate_err:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let d = design_nonreciprocal(&om_draw(&mut rng)).map_err(|e| e.to_string())?;
        worst = worst.max(d.residual / d.j_star);
    }
    let p = preset_microwave();
    let d = design_nonreciprocal(&p).map_err(|e| e.to_string())?;
    let expected = 2.0 * p.g1 * p.g2 / p.gamma_m;
    let mhz = d.j_star / (TAU * 1e6);
    let offset = (d.j_star - p.j).abs() / p.j;
    check(
        worst <= 1e-12 && rel_err(d.j_star, expected) <= 1e-12 && (mhz - 0.98).abs() < 1e-9 && offset <= 0.02 + 1e-12,
        format!("max |F|/J* {worst:.2e}; preset J* = 2pi x {mhz:.6} MHz, {:.2}% from quoted J", offset * 100.0),
        || format!("max |F|/J* {worst:.2e}, preset J* = 2pi x {mhz} MHz, offset {offset}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let (mut theta0, mut slope_err, mut sum_err, mut n) = (0.0_f64, 0.0_f64, 0.0_f64, 0);
    while n < 100 {
        let sys = build_system(&general_draw(&mut rng)).map_err(|e| e.to_string())?;
        if sys.stability_margin() > -1e-2 {
            continue;
        }
        let eta = flows(&sys).map_err(|e| e.to_string())?;
        let scale = eta.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        sum_err = sum_err.max(eta.iter().sum::<f64>().abs() / scale);
        for channel in Channel::ALL {
            let t = large_deviation(BiasSpec { channel, s: 0.0 }, &sys).map_err(|e| e.to_string())?;
            theta0 = theta0.max(t.abs());
            let fd = flow_cumulant(channel, 1, &sys, DEFAULT_CUMULANT_STEP).map_err(|e| e.to_string())?;
            let exact = eta[channel.index() - 1];
            if exact.abs() > 1e-6 * scale {
                slope_err = slope_err.max(rel_err(fd, exact));
            }
        }
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        theta0 == 0.0 && slope_err <= 1e-6 && sum_err <= 1e-9,
        format!("{n} systems x 3 channels, slope error {slope_err:.2e}, sum error {sum_err:.2e}, {secs:.2} s"),
        || format!("theta(0) {theta0:e}, slope error {slope_err:.2e}, sum error {sum_err:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let k = 1.3;
    let delta = 2.1;
    let base = CascadedParams::equal_rate(k, delta, 0.4, Complex64::new(0.0, 0.0), [30.0, 5.0, 12.0]);
    let eta = |p: &CascadedParams| flows(&build_system(p).unwrap()).unwrap();

    let reference = eta(&base)[0];
    let mut eta1_dev = 0.0_f64;
    for i in 0..50 {
        let p = CascadedParams { nbar2: 100.0 * i as f64 / 49.0, ..base };
        eta1_dev = eta1_dev.max((eta(&p)[0] - reference).abs());
    }

    let weight = k.powi(3) / (4.0 * k * k + delta * delta);
    let mut eta2_dev = 0.0_f64;
    let rest = eta(&base)[1] - weight * base.nbar1;
    for i in 0..50 {
        let p = CascadedParams { nbar1: 100.0 * i as f64 / 49.0, ..base };
        eta2_dev = eta2_dev.max((eta(&p)[1] - weight * p.nbar1 - rest).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<_> = (0..100)
        .map(|_| CascadedParams { f: Complex64::new(0.0, 0.0), ..equal_rate_draw(&mut rng) })
        .collect();
    let reading = resolve_simplified_reading(&samples, 1e-9).map_err(|e| e.to_string())?;
    let mut simple_err = 0.0_f64;
    for p in &samples {
        let (a, b) = (eta(p), simplified_flows(p).map_err(|e| e.to_string())?);
        let scale = a.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for j in 0..3 {
            simple_err = simple_err.max((a[j] - b[j]).abs() / scale);
        }
    }
    check(
        eta1_dev <= 1e-9 && eta2_dev <= 1e-9 && reading == SimplifiedReading::DisconnectedBaselines && simple_err <= 1e-9,
        format!(
            "eta1 deviation {eta1_dev:.2e} over Nbar2, eta2 off-Lorentzian deviation {eta2_dev:.2e} over Nbar1, \
             simplified flows ({reading:?}) error {simple_err:.2e}"
        ),
        || format!("eta1 {eta1_dev:.2e}, eta2 {eta2_dev:.2e}, reading {reading:?}, simplified {simple_err:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let designed = apply_design(&preset_microwave()).map_err(|e| e.to_string())?;
    let occ = |p: &OmParams| om_system(p).unwrap().steady_state().unwrap().occupations();

    let xs: Vec<f64> = (0..20).map(|i| 5.0 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| occ(&OmParams { nbar1: x, ..designed }).n2).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let scale = ys.iter().fold(1.0_f64, |m, y| m.max(y.abs()));
    let fit = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).abs()).fold(0.0, f64::max) / scale;

    let n1_ref = occ(&designed).n1;
    let n1_dev = (0..20)
        .map(|i| (occ(&OmParams { nbar2: 5.0 * i as f64, ..designed }).n1 - n1_ref).abs())
        .fold(0.0, f64::max)
        / n1_ref.max(1.0);
    check(
        fit <= 1e-9 && n1_dev <= 1e-9 && slope > 0.0,
        format!("n2 fit residual {fit:.2e} (slope {slope:.6}), n1 deviation over Nbar2 {n1_dev:.2e}"),
        || format!("fit residual {fit:.2e}, n1 deviation {n1_dev:.2e}, slope {slope}"),
    )
}

fn criterion_10() -> Outcome {
    let text = DETUNING_GRID.replace(r#""outputs": ["dn1", "dn2", "m1"]"#, r#""outputs": ["n1", "dn2", "eta3", "theta1@0.1"]"#);
    let cfg = parse_config(&text).map_err(|e| e.to_string())?;
    let columns = cfg.columns();
    let render = |parallel| emit(&columns, &run_sweep_with(&cfg, parallel), Format::Csv);
    let (a, b, c) = (render(false), render(false), render(true));
    let json_same = emit(&columns, &run_sweep_with(&cfg, false), Format::Json)
        == emit(&columns, &run_sweep_with(&cfg, true), Format::Json);

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("fig2.json");
    std::fs::write(&path, &text).map_err(|e| e.to_string())?;
    let cli = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_noiseflow"))
            .arg("sweep")
            .arg(&path)
            .args(extra)
            .output()
            .map(|o| o.stdout)
            .unwrap_or_default()
    };
    let (x, y) = (cli(&[]), cli(&["--parallel"]));
    check(
        a == b && a == c && json_same && x == a && y == x,
        format!("{} bytes identical across runs, serial/parallel and CLI", a.len()),
        || "sweep output differs between runs".into(),
    )
}

fn main() -> ExitCode {
    let (c2, c3) = criterion_2_and_3();
    let results = [
        ("oracle equivalence", criterion_1()),
        ("difference law on the detuning grid", c2),
        ("sign structure and spot value", c3),
        ("equilibrium", criterion_4()),
        ("optomechanical mapping", criterion_5()),
        ("non-reciprocal design", criterion_6()),
        ("counting statistics consistency", criterion_7()),
        ("flow isolation", criterion_8()),
        ("microwave preset", criterion_9()),
        ("sweep determinism", criterion_10()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

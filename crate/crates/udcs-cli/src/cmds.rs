//! Subcommand bodies: thin marshalling from parsed arguments onto library
//! operations, with the stable exit-code contract
//! (2 bad spec, 3 encode failure, 4 I/O, 5 malformed stream).

use crate::spec::{self, DistributionSpec, Family};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::{json, Value};
use std::f64::consts::{E, PI};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use udcs::analysis::{
    expected_length, implied_distribution, orthoconcave_density_bound, orthoconvex_region_bound,
    relative_entropy_lower_bound, shifted_exponential_bound, uniform_region_bound,
    unit_support_bound, LengthReport,
};
use udcs::bell::{correlation_experiment, length_sweep};
use udcs::codec::{
    encode_density, sample_in_cube, SchemeConfig, StreamReader, StreamWriter, Variant,
};
use udcs::densities::{builtin_uniform_on, Density};
use udcs::regions::{
    erosion_entropy_default, erosion_norm_inequality, mean_inf_norm, AxisBox, CubeClass,
    CubeClassifier, Ellipsoid, GenericRegion, Membership, Region,
};

pub const EXIT_SPEC: i32 = 2;
pub const EXIT_ENCODE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_STREAM: i32 = 5;

pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub type CmdResult = Result<(), Failure>;

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_density(path: &Path) -> Result<(DistributionSpec, Box<dyn Density<f64>>), Failure> {
    let text = read_file(path)?;
    let parsed = spec::parse_spec(&text).map_err(|e| fail(EXIT_SPEC, e))?;
    let density = spec::build_density(&parsed).map_err(|e| fail(EXIT_SPEC, e))?;
    Ok((parsed, density))
}

fn seeded_rng(seed: Option<u64>) -> (ChaCha12Rng, u64) {
    let s = seed.unwrap_or_else(rand::random::<u64>);
    eprintln!("seed: {s}");
    (ChaCha12Rng::seed_from_u64(s), s)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON output is finite"));
}

fn write_json_file(path: &Path, v: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("JSON output is finite");
    text.push('\n');
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn csv_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn encode(
    spec_path: &Path,
    variant: Variant,
    count: u64,
    k_max: i32,
    seed: Option<u64>,
    out: &Path,
) -> CmdResult {
    let (_, f) = load_density(spec_path)?;
    if !(1..=60).contains(&k_max) {
        return Err(fail(EXIT_SPEC, format!("k-max {k_max} outside 1..=60")));
    }
    let mut cfg =
        SchemeConfig::new(variant, f.dim()).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    cfg.k_max = k_max;
    let (mut rng, seed) = seeded_rng(seed);
    let file =
        fs::File::create(out).map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?;
    let mut writer = StreamWriter::new(BufWriter::new(file), &cfg)
        .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    let mut total_bits = 0u64;
    let mut retries = 0u64;
    for _ in 0..count {
        let enc = 'attempt: {
            for _ in 0..=64 {
                match encode_density(f.as_ref(), &cfg, &mut rng) {
                    Ok(e) => break 'attempt e,
                    Err(e) if e.retriable() => retries += 1,
                    Err(e) => return Err(fail(EXIT_ENCODE, format!("encoding failed: {e}"))),
                }
            }
            return Err(fail(
                EXIT_ENCODE,
                "encoding failed: retry budget (64) exhausted; the sampled points do not \
                 resolve within the depth cap",
            ));
        };
        total_bits += enc.bits.len() as u64;
        writer
            .write_codeword(&enc.bits)
            .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    }
    let mut inner = writer.finish().map_err(|e| fail(EXIT_IO, e.to_string()))?;
    inner.flush().map_err(|e| fail(EXIT_IO, e.to_string()))?;
    let mean = if count > 0 { total_bits as f64 / count as f64 } else { 0.0 };
    print_json(&json!({
        "count": count,
        "mean_length": mean,
        "retries": retries,
        "seed": seed,
    }));
    Ok(())
}

pub fn decode(input: &Path, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let bytes =
        fs::read(input).map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.display())))?;
    let mut reader = StreamReader::new(&bytes).map_err(|e| fail(EXIT_STREAM, e.to_string()))?;
    let (mut rng, _) = seeded_rng(seed);
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| fail(EXIT_IO, format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    loop {
        match reader.next_cube() {
            Ok(Some(cube)) => {
                let x = sample_in_cube::<f64>(&cube, &mut rng);
                let row = x.iter().map(|v| csv_num(*v)).collect::<Vec<_>>().join(",");
                writeln!(sink, "{row}").map_err(|e| fail(EXIT_IO, e.to_string()))?;
            }
            Ok(None) => break,
            Err(e) => {
                return Err(fail(
                    EXIT_STREAM,
                    format!("malformed stream at bit offset {}: {e}", reader.offset()),
                ))
            }
        }
    }
    sink.flush().map_err(|e| fail(EXIT_IO, e.to_string()))?;
    Ok(())
}

fn report_json(rep: &LengthReport<f64>) -> Value {
    json!({
        "mean_length_lower": rep.mean_length_lower,
        "mean_length_upper": rep.mean_length_upper,
        "codeword_entropy": rep.codeword_entropy,
        "atom_count": rep.atom_count,
        "residual_mass": rep.residual_mass,
    })
}

pub fn explen(spec_path: &Path, variant: Variant, k_max: i32) -> CmdResult {
    let (_, f) = load_density(spec_path)?;
    let rep =
        expected_length(f.as_ref(), variant, k_max).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    print_json(&report_json(&rep));
    Ok(())
}

pub fn bounds(spec_path: &Path, seed: Option<u64>) -> CmdResult {
    let (parsed, _density) = load_density(spec_path)?;
    let (mut rng, seed) = seeded_rng(seed);
    let mut table = serde_json::Map::new();
    let mut add = |name: &str, inputs: Value, result: udcs::Result<f64>| {
        let entry = match result {
            Ok(v) => json!({"value": v, "inputs": inputs}),
            Err(e) => json!({"error": e.to_string(), "inputs": inputs}),
        };
        table.insert(name.to_string(), entry);
    };
    match parsed.family {
        Family::Gaussian1d => {
            let r = (2.0 / PI).sqrt();
            let t = -(2.0 * PI).sqrt().log2();
            add(
                "orthoconcave_density",
                json!({"mean_abs_deviation": r, "reference_norm": 0.0, "log2_sup": t}),
                orthoconcave_density_bound(1, r, 0.0, t),
            );
        }
        Family::ShiftedExponential => {
            let a = parsed.params[0];
            add("shifted_exponential", json!({"shift": a}), shifted_exponential_bound(a));
            let r = 2.0 / E;
            let xh = a + 1.0;
            add(
                "orthoconcave_density",
                json!({"mean_abs_deviation": r, "reference_norm": xh, "log2_sup": 0.0}),
                orthoconcave_density_bound(1, r, xh, 0.0),
            );
        }
        Family::BellUnit => {
            let theta = parsed.params[0];
            let t = PI.log2();
            let r = (PI / 2.0 - 1.0) / (2.0 * PI);
            add("unit_support", json!({"log2_sup": t}), unit_support_bound(1, t));
            add(
                "orthoconcave_density",
                json!({"mean_abs_deviation": r, "reference_norm": theta, "log2_sup": t}),
                orthoconcave_density_bound(1, r, theta, t),
            );
        }
        Family::BellCosine => {
            let theta = parsed.params[0];
            let flip = if parsed.params[1] < 0.0 { PI } else { 0.0 };
            let peak = (theta + flip).rem_euclid(2.0 * PI);
            let r = PI / 2.0 - 1.0;
            add(
                "orthoconcave_density",
                json!({"mean_abs_deviation": r, "reference_norm": peak, "log2_sup": -1.0}),
                orthoconcave_density_bound(1, r, peak, -1.0),
            );
        }
        Family::UniformRegion => {
            let region = spec::build_region(parsed.region.as_ref().expect("validated"))
                .map_err(|e| fail(EXIT_SPEC, e))?;
            let n = region.dim();
            let h = erosion_entropy_default(region.as_ref())
                .map_err(|e| fail(EXIT_SPEC, e.to_string()))?
                .value;
            let origin = vec![0.0; n];
            let mn = mean_inf_norm(region.as_ref(), &origin, 100_000, &mut rng)
                .map_err(|e| fail(EXIT_SPEC, e.to_string()))?
                .value;
            add(
                "uniform_region",
                json!({"erosion_entropy": h, "mean_sup_norm": mn}),
                uniform_region_bound(n, h, mn),
            );
            let volume = builtin_uniform_on(Arc::clone(&region))
                .map_err(|e| fail(EXIT_SPEC, e.to_string()))?
                .region_volume();
            add(
                "orthoconvex_region",
                json!({"mean_sup_norm": mn, "reference_norm": 0.0, "volume": volume}),
                orthoconvex_region_bound(n, mn, 0.0, volume),
            );
        }
    }
    drop(add);
    print_json(&json!({
        "family": parsed.family,
        "bounds": Value::Object(table),
        "seed": seed,
    }));
    Ok(())
}

pub fn erosion(region_path: &Path, seed: Option<u64>) -> CmdResult {
    let text = read_file(region_path)?;
    let rs = spec::parse_region(&text).map_err(|e| fail(EXIT_SPEC, e))?;
    let region = spec::build_region(&rs).map_err(|e| fail(EXIT_SPEC, e))?;
    let (mut rng, seed) = seeded_rng(seed);
    let h = erosion_entropy_default(region.as_ref()).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let ineq = erosion_norm_inequality(region.as_ref(), 100_000, &mut rng)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    print_json(&json!({
        "h": h.value,
        "error_estimate": h.error_estimate,
        "norm_inequality": {"lhs": ineq.lhs, "rhs": ineq.rhs, "holds": ineq.holds},
        "seed": seed,
    }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound(
    spec_path: &Path,
    variant: Variant,
    k_lo: i32,
    k_hi: i32,
    v_max_log2: u32,
    steps: Option<usize>,
) -> CmdResult {
    let (_, f) = load_density(spec_path)?;
    let v_max = if v_max_log2 >= 63 { i64::MAX } else { 1i64 << v_max_log2 };
    let imp = implied_distribution::<f64>(variant, f.dim(), k_lo, k_hi, v_max)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let steps = steps.unwrap_or(if f.dim() == 1 { 1 << 16 } else { 1 << 20 });
    let d = relative_entropy_lower_bound(f.as_ref(), &imp, steps)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    print_json(&json!({
        "divergence": d.value,
        "error_estimate": d.error_estimate,
        "leakage": d.leakage,
        "normalizer": imp.normalizer,
        "k_lo": k_lo,
        "k_hi": k_hi,
        "v_max_log2": v_max_log2,
        "steps": steps,
    }));
    Ok(())
}

pub fn bell_experiment(theta_a: f64, theta_b: f64, rounds: u64, seed: Option<u64>) -> CmdResult {
    let (mut rng, seed) = seeded_rng(seed);
    let res = correlation_experiment(theta_a, theta_b, rounds, &mut rng)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    print_json(&json!({
        "theta_a": theta_a,
        "theta_b": theta_b,
        "rounds": rounds,
        "estimate": res.estimate,
        "stderr": res.stderr,
        "mean_bits": res.mean_bits,
        "mean_y_a": res.mean_y_a,
        "mean_y_b": res.mean_y_b,
        "seed": seed,
    }));
    Ok(())
}

fn write_sweep_csv(sink: &mut dyn Write, grid: usize, k_max: i32) -> Result<Value, Failure> {
    let phases: Vec<f64> = (0..grid).map(|j| j as f64 / grid as f64).collect();
    let sweep = length_sweep(&phases, k_max).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    writeln!(sink, "theta,mean_length_lower,mean_length_upper")
        .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    for p in &sweep.points {
        writeln!(
            sink,
            "{},{},{}",
            csv_num(p.theta),
            csv_num(p.mean_length_lower),
            csv_num(p.mean_length_upper)
        )
        .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    }
    Ok(json!({
        "sweep_max_lower": sweep.max_lower,
        "sweep_max_upper": sweep.max_upper,
        "argmax_theta": sweep.argmax_theta,
    }))
}

pub fn bell_sweep(grid: usize, k_max: i32, out: Option<&Path>) -> CmdResult {
    if grid == 0 {
        return Err(fail(EXIT_SPEC, "grid must be positive"));
    }
    let summary = match out {
        Some(p) => {
            let mut w = BufWriter::new(
                fs::File::create(p).map_err(|e| fail(EXIT_IO, format!("{}: {e}", p.display())))?,
            );
            let s = write_sweep_csv(&mut w, grid, k_max)?;
            w.flush().map_err(|e| fail(EXIT_IO, e.to_string()))?;
            s
        }
        None => {
            let mut w = std::io::stdout().lock();
            write_sweep_csv(&mut w, grid, k_max)?
        }
    };
    eprintln!(
        "max mean length {} at theta {}",
        summary["sweep_max_lower"], summary["argmax_theta"]
    );
    Ok(())
}

fn example_ellipse_spec() -> DistributionSpec {
    spec::parse_spec(
        r#"{"family":"uniform_region","region":{"shape":"ellipsoid",
            "params":[1.3333333333333333,-0.6666666666666666,-0.6666666666666666,1.3333333333333333]}}"#,
    )
    .expect("static spec")
}

/// The worked ellipse translated by `s` along both axes: same classifier as
/// the centered one, evaluated on the pulled-back cube.
fn shifted_ellipse(s: f64) -> Result<Arc<dyn Region<f64>>, Failure> {
    let entries = [4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0];
    let base = Ellipsoid::new(2, &entries).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let member_base = Ellipsoid::new(2, &entries).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let volume = base.volume_hint();
    let bb0 = base.bounding_box();
    let bb = AxisBox::new(
        &[bb0.lower()[0] + s, bb0.lower()[1] + s],
        &[bb0.upper()[0] + s, bb0.upper()[1] + s],
    )
    .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let classifier: CubeClassifier<f64> = Box::new(move |b: &AxisBox<f64>| {
        let lo: Vec<f64> = b.lower().iter().map(|x| x - s).collect();
        let hi: Vec<f64> = b.upper().iter().map(|x| x - s).collect();
        match AxisBox::new(&lo, &hi) {
            Ok(back) => base.classify_cube(&back).unwrap_or(CubeClass::Straddles),
            Err(_) => CubeClass::Straddles,
        }
    });
    let member: Membership<f64> =
        Box::new(move |x: &[f64]| member_base.contains(&[x[0] - s, x[1] - s]));
    let mut region = GenericRegion::new(bb, member)
        .with_classifier(classifier)
        .declare_orthogonally_convex();
    if let Some(v) = volume {
        region = region.with_volume_hint(v);
    }
    Ok(Arc::new(region))
}

pub fn figures(outdir: &Path, seed: Option<u64>) -> CmdResult {
    fs::create_dir_all(outdir)
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", outdir.display())))?;
    let (_, seed) = seeded_rng(seed);
    let mut files: Vec<String> = Vec::new();

    let gaussian = spec::build_density(
        &spec::parse_spec(r#"{"family":"gaussian1d"}"#).expect("static spec"),
    )
    .map_err(|e| fail(EXIT_SPEC, e))?;
    let rep = expected_length(gaussian.as_ref(), Variant::Unbounded, 20)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    write_json_file(&outdir.join("gaussian_example.json"), &report_json(&rep))?;
    files.push("gaussian_example.json".into());

    let ellipse = spec::build_density(&example_ellipse_spec()).map_err(|e| fail(EXIT_SPEC, e))?;
    let rep = expected_length(ellipse.as_ref(), Variant::Unbounded, 16)
        .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    write_json_file(&outdir.join("ellipse_example.json"), &report_json(&rep))?;
    files.push("ellipse_example.json".into());

    let sweep_path = outdir.join("phase_sweep.csv");
    let mut w = BufWriter::new(
        fs::File::create(&sweep_path)
            .map_err(|e| fail(EXIT_IO, format!("{}: {e}", sweep_path.display())))?,
    );
    let sweep_summary = write_sweep_csv(&mut w, 512, 17)?;
    w.flush().map_err(|e| fail(EXIT_IO, e.to_string()))?;
    files.push("phase_sweep.csv".into());

    let usb = unit_support_bound(1, PI.log2()).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
    let mut bell_bounds = sweep_summary;
    bell_bounds["unit_support_bound"] = json!(usb);
    bell_bounds["protocol_bound"] = json!(usb + 1.0);
    write_json_file(&outdir.join("bell_bounds.json"), &bell_bounds)?;
    files.push("bell_bounds.json".into());

    let shift_path = outdir.join("shift_sensitivity.csv");
    let mut w = BufWriter::new(
        fs::File::create(&shift_path)
            .map_err(|e| fail(EXIT_IO, format!("{}: {e}", shift_path.display())))?,
    );
    writeln!(w, "shift,mean_length_lower,mean_length_upper")
        .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    for s in [0.0, 0.25, 0.5] {
        let region = shifted_ellipse(s)?;
        let f = builtin_uniform_on(region).map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        let rep = expected_length(&f, Variant::Unbounded, 16)
            .map_err(|e| fail(EXIT_SPEC, e.to_string()))?;
        writeln!(
            w,
            "{},{},{}",
            csv_num(s),
            csv_num(rep.mean_length_lower),
            csv_num(rep.mean_length_upper)
        )
        .map_err(|e| fail(EXIT_IO, e.to_string()))?;
    }
    w.flush().map_err(|e| fail(EXIT_IO, e.to_string()))?;
    files.push("shift_sensitivity.csv".into());

    files.push("manifest.json".into());
    files.sort();
    write_json_file(
        &outdir.join("manifest.json"),
        &json!({"files": files, "seed": seed}),
    )?;
    println!("wrote {} files to {}", files.len(), outdir.display());
    Ok(())
}

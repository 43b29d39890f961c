//! Command-line interface: orbit classification, verification-suite runner,
//! and conjugacy-class plot data.

use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hillops::circle::density_from_json;
use hillops::devmap::{devmap_from_potential, from_group_path, GroupPathSpec};
use hillops::hill::HillPotential;
use hillops::sl2::{
    classify, sl2_cover_matrix, translation_number, ConjClass, Sl2TildeElement, PI,
};
use hillops::suites::{find, registry, SuiteConfig, SuiteReport};

#[derive(Parser)]
#[command(name = "hillops", version, about = "Hill operators, developing maps, and their verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the conjugacy class of a Hill potential or group-path spec
    /// (JSON from FILE or stdin); emits class, translation number, and trace.
    Classify {
        /// Input file; "-" or absent reads stdin
        input: Option<String>,
        #[arg(long, default_value_t = 256)]
        grid_size: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a named verification suite with seeded randomized cases.
    Verify {
        /// Suite name; use --list to see all
        suite: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        cases: usize,
        #[arg(long, default_value_t = 256)]
        grid_size: usize,
        /// ODE steps (default 16 x grid size)
        #[arg(long)]
        ode_steps: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Override every per-case tolerance
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Emit CSV plot data for the conjugacy-class half-plane picture.
    OrbitTable {
        /// Rotation angles alpha as start:stop:count
        #[arg(long, default_value = "0.1:6.4:64")]
        alpha_grid: String,
        /// Boost rates beta as start:stop:count
        #[arg(long, default_value = "0.1:3.0:30")]
        beta_grid: String,
        #[arg(long)]
        out: Option<String>,
    },
}

/// 17 significant digits, locale-independent; deterministic across runs.
fn num(x: f64) -> String {
    format!("{:.16e}", x)
}

fn class_json(c: &ConjClass) -> String {
    match c {
        ConjClass::Elliptic { alpha } => {
            format!("{{\"type\":\"elliptic\",\"alpha\":{}}}", num(*alpha))
        }
        ConjClass::Hyperbolic { beta, n } => {
            format!("{{\"type\":\"hyperbolic\",\"beta\":{},\"n\":{}}}", num(*beta), n)
        }
        ConjClass::Parabolic { sign, n } => {
            format!("{{\"type\":\"parabolic\",\"sign\":{},\"n\":{}}}", sign, n)
        }
        ConjClass::Central { n } => format!("{{\"type\":\"central\",\"n\":{}}}", n),
    }
}

fn class_label(c: &ConjClass) -> String {
    match c {
        ConjClass::Elliptic { .. } => "elliptic".into(),
        ConjClass::Hyperbolic { n, .. } => format!("hyperbolic(n={})", n),
        ConjClass::Parabolic { sign, n } => {
            format!("parabolic({}{})", if *sign >= 0 { "+" } else { "-" }, n)
        }
        ConjClass::Central { n } => format!("central(n={})", n),
    }
}

fn emit(out: &Option<String>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn read_input(input: &Option<String>) -> std::io::Result<String> {
    match input.as_deref() {
        Some("-") | None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            Ok(buf)
        }
        Some(path) => std::fs::read_to_string(path),
    }
}

fn cmd_classify(input: &Option<String>, grid_size: usize, out: &Option<String>) -> ExitCode {
    let raw = match read_input(input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read input: {e}");
            return ExitCode::from(2);
        }
    };
    let value: serde_json::Value = match serde_json::from_str(&raw) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: malformed JSON: {e}");
            return ExitCode::from(2);
        }
    };
    let monodromy: Result<Sl2TildeElement, hillops::Error> = if value.get("factors").is_some() {
        match serde_json::from_value::<GroupPathSpec>(value) {
            Ok(spec) => from_group_path(&spec, grid_size)
                .and_then(|gamma| hillops::devmap::q_of(&gamma)),
            Err(e) => {
                eprintln!("error: malformed group-path spec: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        match density_from_json(&value, grid_size) {
            Ok(density) => HillPotential::new(density)
                .and_then(|t| devmap_from_potential(&t))
                .and_then(|gamma| hillops::devmap::q_of(&gamma)),
            Err(e) => {
                eprintln!("error: malformed potential: {e}");
                return ExitCode::from(2);
            }
        }
    };
    let h = match monodromy {
        Ok(h) => h,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let class = match classify(&h) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let tau = translation_number(&h);
    let trace_abs = sl2_cover_matrix(&h).trace().abs();
    let text = format!(
        "{{\"class\":{},\"tau\":{},\"trace_abs\":{}}}\n",
        class_json(&class),
        num(tau),
        num(trace_abs)
    );
    if let Err(e) = emit(out, &text) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn report_json(r: &SuiteReport) -> String {
    let cases: Vec<String> = r
        .cases
        .iter()
        .map(|c| {
            format!(
                "{{\"case_id\":{},\"seed\":{},\"residual\":{},\"tolerance\":{},\"pass\":{}}}",
                c.case_id,
                c.seed,
                num(c.residual),
                num(c.tolerance),
                c.pass
            )
        })
        .collect();
    format!(
        "{{\"suite\":\"{}\",\"cases\":[{}],\"summary\":{{\"total\":{},\"passed\":{},\"failed\":{}}}}}\n",
        r.suite,
        cases.join(","),
        r.summary.total,
        r.summary.passed,
        r.summary.failed
    )
}

fn report_csv(r: &SuiteReport) -> String {
    let mut s = String::from("suite,case_id,seed,residual,tolerance,pass\n");
    for c in &r.cases {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.suite,
            c.case_id,
            c.seed,
            num(c.residual),
            num(c.tolerance),
            c.pass
        ));
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suite: &Option<String>,
    list: bool,
    seed: u64,
    cases: usize,
    grid_size: usize,
    ode_steps: Option<usize>,
    eps: f64,
    tol: Option<f64>,
    out: &Option<String>,
    format: OutputFormat,
) -> ExitCode {
    if list {
        let names: Vec<&str> = registry().iter().map(|s| s.name()).collect();
        println!("{}", names.join("\n"));
        return ExitCode::SUCCESS;
    }
    let name = match suite {
        Some(n) => n.clone(),
        None => {
            eprintln!("error: missing suite name (use --list)");
            return ExitCode::from(2);
        }
    };
    let runner = match find(&name) {
        Some(s) => s,
        None => {
            eprintln!("error: unknown suite '{name}' (use --list)");
            return ExitCode::from(2);
        }
    };
    let cfg = SuiteConfig {
        grid_size,
        ode_steps: ode_steps.unwrap_or(16 * grid_size),
        eps,
        tol,
        seed,
        cases,
    };
    let report = match runner.run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: suite failed to run: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match format {
        OutputFormat::Json => report_json(&report),
        OutputFormat::Csv => report_csv(&report),
    };
    if let Err(e) = emit(out, &text) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    eprintln!(
        "{}: {}/{} cases passed",
        report.suite, report.summary.passed, report.summary.total
    );
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn parse_grid(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let start: f64 = parts[0].parse().ok()?;
    let stop: f64 = parts[1].parse().ok()?;
    let count: usize = parts[2].parse().ok()?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return None;
    }
    if count == 1 {
        return Some(vec![start]);
    }
    let h = (stop - start) / (count - 1) as f64;
    Some((0..count).map(|k| start + h * k as f64).collect())
}

fn cmd_orbit_table(alpha_grid: &str, beta_grid: &str, out: &Option<String>) -> ExitCode {
    let alphas = match parse_grid(alpha_grid) {
        Some(g) => g,
        None => {
            eprintln!("error: bad --alpha-grid (expected start:stop:count)");
            return ExitCode::from(2);
        }
    };
    let betas = match parse_grid(beta_grid) {
        Some(g) => g,
        None => {
            eprintln!("error: bad --beta-grid (expected start:stop:count)");
            return ExitCode::from(2);
        }
    };
    let mut s = String::from("family,parameter,class,tau,trace_abs\n");
    let mut row = |family: &str, parameter: f64, h: &Sl2TildeElement| -> Result<(), String> {
        let class = classify(h).map_err(|e| e.to_string())?;
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            family,
            num(parameter),
            class_label(&class),
            num(translation_number(h)),
            num(sl2_cover_matrix(h).trace().abs())
        ));
        Ok(())
    };
    for &alpha in &alphas {
        // land exactly on multiples of pi when the grid value is within one
        // part in 1e-12, so boundary classes are visible from coarse grids
        let snapped = {
            let k = (alpha / PI).round();
            if (alpha - k * PI).abs() < 1e-12 * alpha.abs().max(1.0) {
                k * PI
            } else {
                alpha
            }
        };
        if let Err(e) = row("r_alpha", snapped, &Sl2TildeElement::r_alpha(snapped)) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    for &beta in &betas {
        if let Err(e) = row("h_beta", beta, &Sl2TildeElement::h_beta_n(beta, 0)) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Err(e) = emit(out, &s) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify {
            input,
            grid_size,
            out,
        } => cmd_classify(&input, grid_size, &out),
        Command::Verify {
            suite,
            list,
            seed,
            cases,
            grid_size,
            ode_steps,
            eps,
            tol,
            out,
            format,
        } => cmd_verify(
            &suite, list, seed, cases, grid_size, ode_steps, eps, tol, &out, format,
        ),
        Command::OrbitTable {
            alpha_grid,
            beta_grid,
            out,
        } => cmd_orbit_table(&alpha_grid, &beta_grid, &out),
    }
}

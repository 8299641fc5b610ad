//! Command-line front end for batch experiments on substitution systems.
//!
//! Exit codes: 0 success/verified, 1 check failure (with a JSON failure
//! report on stdout), 2 usage or parse errors. All file outputs are
//! written atomically and are byte-identical for identical
//! (spec, flags, seed) triples.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nilsub_core::dynamics::{
    aperiodicity_certificate, export_weighted_delone, letter_frequencies, repetitivity_profile,
    ProfileBudget, RowStatus,
};
use nilsub_core::error::CoreError;
use nilsub_core::fixpoint::FixpointHandle;
use nilsub_core::grading::{solve_grading, verify_grading, Feasibility, GradingProblem};
use nilsub_core::lattice::{DilationDatum, LatticePoint};
use nilsub_core::patch::Alphabet;
use nilsub_core::scalar::{format_scalar, parse_scalar, s_int, Scalar};
use nilsub_core::specfile::{export_patch, export_weighted, ExportFormat, SpecFile};
use nilsub_core::substitution::{
    build_good, is_nonperiodic, is_primitive, iterate_jobs, FillPolicy, GoodChoices,
    SubstitutionDatum, DEFAULT_BUDGET,
};

#[derive(Parser)]
#[command(name = "nilsub", version, about = "Symbolic substitutions on graded nilpotent groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn to_core(self) -> ExportFormat {
        match self {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Spec file describing the experiment.
    spec: PathBuf,
    /// Seed for randomized validation and fill policies.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Point budget bounding materialized patch sizes.
    #[arg(long)]
    budget: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for point exports.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker pool size for iterate/frequencies.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the rational-grading feasibility problem of the spec's Lie algebra.
    Grade(Common),
    /// Validate the dilation datum (group law, lattice, box, stretch).
    CheckDatum {
        #[command(flatten)]
        common: Common,
        /// Number of randomized exact validation samples.
        #[arg(long, default_value_t = 25)]
        samples: u32,
    },
    /// Construct a good (primitive, non-periodic) substitution rule and
    /// write the extended spec file.
    BuildSubstitution {
        #[command(flatten)]
        common: Common,
        /// Alphabet letters for the new rule.
        #[arg(long, default_value = "a,b")]
        letters: String,
        /// Fill policy for unconstrained cells: the base letter, or seeded
        /// random letters.
        #[arg(long, default_value = "constant")]
        fill: String,
    },
    /// Check primitivity and non-periodicity of the spec's substitution.
    CheckSubstitution(Common),
    /// Compute S^n of a one-letter patch and export the points.
    Iterate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Seed letter (defaults to the first alphabet letter).
        #[arg(long)]
        letter: Option<String>,
    },
    /// Evaluate the lazy fixpoint at given points or on a ball.
    FixpointEval {
        #[command(flatten)]
        common: Common,
        /// Points like "(2, 0, -4)" (repeatable).
        #[arg(long = "point")]
        points: Vec<String>,
        /// Evaluate on all lattice points of |x| < radius instead.
        #[arg(long)]
        radius: Option<String>,
    },
    /// Repetitivity profile R(r) over a fixpoint window.
    Repetitivity {
        #[command(flatten)]
        common: Common,
        /// Patch radii, comma separated exact fractions.
        #[arg(long)]
        radii: Option<String>,
        /// Window radius.
        #[arg(long)]
        window: Option<String>,
    },
    /// Weak-aperiodicity certificate for all nontrivial lattice points in a ball.
    Aperiodicity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "10")]
        radius: String,
    },
    /// Exact letter frequencies over quasinorm balls.
    Frequencies {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radii: Option<String>,
    },
    /// Export analysis data: weighted Delone points or fiber extrema.
    Export {
        #[command(flatten)]
        common: Common,
        /// What to export: delone | fibers.
        #[arg(long)]
        kind: String,
        /// Window radius for delone export.
        #[arg(long)]
        window: Option<String>,
        /// Iteration count for fiber export.
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Vertical coordinate index (1-based) for fiber export.
        #[arg(long)]
        axis: Option<usize>,
    },
}

fn write_atomic(path: &Path, data: &str) -> Result<(), CoreError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, data)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(common: &Common, data: &str) -> Result<(), CoreError> {
    match &common.out {
        Some(path) => write_atomic(path, data),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn json_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn failure_report(command: &str, failures: &[String]) -> String {
    let items: Vec<String> = failures
        .iter()
        .map(|f| format!("\"{}\"", json_escape(f)))
        .collect();
    format!(
        "{{\"command\":\"{command}\",\"status\":\"fail\",\"failures\":[{}]}}\n",
        items.join(",")
    )
}

struct Loaded {
    spec: SpecFile,
    budget: u64,
    seed: u64,
}

fn load(common: &Common) -> Result<Loaded, CoreError> {
    let text = std::fs::read_to_string(&common.spec)?;
    let spec = SpecFile::parse(&text)?;
    let analysis = spec.analysis.clone().unwrap_or_default();
    // precedence: flag, NILSUB_BUDGET, spec, built-in default
    let env_budget = std::env::var("NILSUB_BUDGET")
        .ok()
        .and_then(|v| v.parse::<u64>().ok());
    let budget = common
        .budget
        .or(env_budget)
        .or(analysis.budget)
        .unwrap_or(DEFAULT_BUDGET);
    let seed = if common.seed != 0 {
        common.seed
    } else {
        analysis.seed.unwrap_or(0)
    };
    Ok(Loaded { spec, budget, seed })
}

fn parse_scalar_arg(s: &str) -> Result<Scalar, CoreError> {
    parse_scalar(s).map_err(CoreError::Invalid)
}

fn parse_radii(arg: &Option<String>, spec: &SpecFile) -> Result<Vec<Scalar>, CoreError> {
    match arg {
        Some(text) => text.split(',').map(|r| parse_scalar_arg(r.trim())).collect(),
        None => {
            let radii = spec
                .analysis
                .as_ref()
                .map(|a| a.radii.clone())
                .unwrap_or_default();
            if radii.is_empty() {
                Err(CoreError::Invalid(
                    "no radii given (flag --radii or [analysis] radii)".into(),
                ))
            } else {
                Ok(radii)
            }
        }
    }
}

fn substitution_of(loaded: &Loaded, datum: &DilationDatum) -> Result<SubstitutionDatum, CoreError> {
    loaded.spec.build_substitution(datum, loaded.budget)
}

fn fixpoint_of(datum: &DilationDatum, subst: &SubstitutionDatum) -> FixpointHandle {
    FixpointHandle::new(datum, subst, 0)
}

/// Run a command; Ok(true) = verified, Ok(false) = check failure already
/// reported on stdout.
fn run(cli: Cli) -> Result<bool, CoreError> {
    match cli.command {
        Command::Grade(common) => {
            let loaded = load(&common)?;
            let algebra = loaded.spec.build_lie_algebra()?;
            let problem = GradingProblem::new(algebra.clone());
            let solution = solve_grading(&problem)?;
            match solution.kind {
                Feasibility::Feasible => {
                    let degrees = solution.degrees.unwrap();
                    assert!(verify_grading(&algebra, &degrees));
                    let rendered: Vec<String> = degrees.iter().map(|d| d.to_string()).collect();
                    let out = format!(
                        "feasible\ndegrees = {}\nkernel_dimension = {}\n",
                        rendered.join(" "),
                        solution.kernel_basis.len()
                    );
                    emit(&common, &out)?;
                    Ok(true)
                }
                Feasibility::Infeasible => {
                    print!(
                        "{}",
                        failure_report(
                            "grade",
                            &[format!(
                                "no positive rational grading is compatible with the given basis (kernel dimension {})",
                                solution.kernel_basis.len()
                            )]
                        )
                    );
                    Ok(false)
                }
            }
        }
        Command::CheckDatum { common, samples } => {
            let loaded = load(&common)?;
            let datum = match loaded.spec.build_datum() {
                Ok(d) => d,
                Err(e) => {
                    print!("{}", failure_report("check-datum", &[e.to_string()]));
                    return Ok(false);
                }
            };
            let report = datum.validate(samples, loaded.seed);
            if report.passed() {
                let radii = datum.radii()?;
                emit(
                    &common,
                    &format!(
                        "datum ok: {} checks, r- ~ {:.4}, r+ ~ {:.4}, stretch {}\n",
                        report.checks_run,
                        radii.inner.approx(),
                        radii.outer.approx(),
                        format_scalar(&datum.stretch)
                    ),
                )?;
                Ok(true)
            } else {
                let failures: Vec<String> = report
                    .failures
                    .iter()
                    .map(|f| format!("{}: {}", f.axiom, f.witness))
                    .collect();
                print!("{}", failure_report("check-datum", &failures));
                Ok(false)
            }
        }
        Command::BuildSubstitution {
            common,
            letters,
            fill,
        } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let names: Vec<String> = letters.split(',').map(|s| s.trim().to_string()).collect();
            let alphabet = Alphabet::new(names)?;
            let policy = match fill.as_str() {
                "constant" => FillPolicy::Constant(0),
                "seeded" => FillPolicy::Seeded(loaded.seed),
                other => {
                    return Err(CoreError::Invalid(format!(
                        "fill must be `constant` or `seeded`, got `{other}`"
                    )))
                }
            };
            let subst = build_good(
                &datum,
                &alphabet,
                &policy,
                &GoodChoices::default(),
                loaded.budget,
            )?;
            let mut spec = loaded.spec.clone();
            spec.substitution = Some(SpecFile::substitution_section(&datum, &subst));
            let rendered = spec.render();
            match &common.out {
                Some(path) => write_atomic(path, &rendered)?,
                None => print!("{rendered}"),
            }
            eprintln!(
                "built good substitution: {} letters, {} cells per rule",
                subst.alphabet.len(),
                subst.table[0].len()
            );
            Ok(true)
        }
        Command::CheckSubstitution(common) => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let primitive = is_primitive(&subst);
            let report = is_nonperiodic(&datum, &subst, loaded.budget)?;
            let mut failures = Vec::new();
            if primitive.is_none() {
                failures.push("not primitive: no power of the incidence matrix is positive".into());
            }
            if !report.injective {
                failures.push(format!(
                    "substitution rule not injective: {} colliding letter pairs",
                    report.injectivity_collisions.len()
                ));
            }
            for f in report.failures.iter().take(20) {
                failures.push(format!(
                    "no difference witness for gamma={:?} letters ({}, {}){}",
                    f.gamma.0,
                    subst.alphabet.name(f.letter_a),
                    subst.alphabet.name(f.letter_b),
                    if f.empty_window { " [empty window]" } else { "" }
                ));
            }
            if failures.is_empty() {
                emit(
                    &common,
                    &format!("primitive L={}, non-periodic\n", primitive.unwrap()),
                )?;
                Ok(true)
            } else {
                print!("{}", failure_report("check-substitution", &failures));
                Ok(false)
            }
        }
        Command::Iterate { common, n, letter } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let letter_idx = match &letter {
                Some(name) => subst
                    .alphabet
                    .index(name)
                    .ok_or_else(|| CoreError::Invalid(format!("letter `{name}` not in alphabet")))?,
                None => 0,
            };
            let patch = iterate_jobs(&datum, &subst, letter_idx, n, loaded.budget, common.jobs)?;
            let data = export_patch(&datum, &subst.alphabet, &patch, common.format.to_core());
            emit(&common, &data)?;
            eprintln!("{} points", patch.len());
            Ok(true)
        }
        Command::FixpointEval {
            common,
            points,
            radius,
        } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let mut handle = fixpoint_of(&datum, &subst);
            let targets: Vec<LatticePoint> = if let Some(r) = radius {
                let r = parse_scalar_arg(&r)?;
                datum.ball_lattice_points(&LatticePoint::origin(datum.dim()), &r, loaded.budget)?
            } else if points.is_empty() {
                return Err(CoreError::Invalid(
                    "give at least one --point or a --radius".into(),
                ));
            } else {
                points
                    .iter()
                    .map(|text| {
                        let coords = text
                            .trim()
                            .trim_start_matches('(')
                            .trim_end_matches(')')
                            .split(',')
                            .map(|c| parse_scalar_arg(c.trim()))
                            .collect::<Result<Vec<_>, _>>()?;
                        datum.element_to_point(&coords)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            let patch = handle.eval_patch(&datum, &subst, &targets)?;
            let data = export_patch(&datum, &subst.alphabet, &patch, common.format.to_core());
            emit(&common, &data)?;
            Ok(true)
        }
        Command::Repetitivity {
            common,
            radii,
            window,
        } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let radii = parse_radii(&radii, &loaded.spec)?;
            let window = match window {
                Some(w) => parse_scalar_arg(&w)?,
                None => loaded
                    .spec
                    .analysis
                    .as_ref()
                    .and_then(|a| a.window.clone())
                    .ok_or_else(|| {
                        CoreError::Invalid(
                            "no window given (flag --window or [analysis] window)".into(),
                        )
                    })?,
            };
            let mut handle = fixpoint_of(&datum, &subst);
            let profile = repetitivity_profile(
                &mut handle,
                &datum,
                &subst,
                &radii,
                &window,
                &s_int(1),
                &ProfileBudget {
                    points: loaded.budget,
                    ..ProfileBudget::default()
                },
            )?;
            let mut out = String::from(
                "r,R,ratio,classes,positions,centers,position_stride,center_stride,status\n",
            );
            let mut all_bounded = true;
            for row in &profile.rows {
                let (big_r, ratio, status) = match &row.status {
                    RowStatus::Bounded { big_r } => (
                        format_scalar(big_r),
                        format_scalar(&(big_r / &row.r)),
                        "bounded",
                    ),
                    RowStatus::UnboundedWithinWindow => {
                        all_bounded = false;
                        ("".into(), "".into(), "unbounded-within-window")
                    }
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    format_scalar(&row.r),
                    big_r,
                    ratio,
                    row.classes,
                    row.positions_tested,
                    row.centers_tested,
                    row.position_stride,
                    row.center_stride,
                    status
                ));
            }
            emit(&common, &out)?;
            Ok(all_bounded)
        }
        Command::Aperiodicity { common, radius } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let mut handle = fixpoint_of(&datum, &subst);
            let r = parse_scalar_arg(&radius)?;
            let cert = aperiodicity_certificate(&mut handle, &datum, &subst, &r, loaded.budget)?;
            let mut out = String::from("gamma,exponent,witness,omega_shifted,omega_base,status\n");
            for e in &cert.entries {
                let gamma = datum.point_to_element(&e.gamma);
                let g = gamma.iter().map(format_scalar).collect::<Vec<_>>().join(" ");
                match &e.witness {
                    Some((zeta, a, b)) => {
                        let z = datum
                            .point_to_element(zeta)
                            .iter()
                            .map(format_scalar)
                            .collect::<Vec<_>>()
                            .join(" ");
                        out.push_str(&format!(
                            "({g}),{},({z}),{},{},certified\n",
                            e.exponent,
                            subst.alphabet.name(*a),
                            subst.alphabet.name(*b)
                        ));
                    }
                    None => out.push_str(&format!("({g}),{},,,,missing\n", e.exponent)),
                }
            }
            emit(&common, &out)?;
            if cert.complete() {
                eprintln!("certified {} translations", cert.entries.len());
                Ok(true)
            } else {
                let missing: Vec<String> = cert
                    .entries
                    .iter()
                    .filter(|e| e.witness.is_none())
                    .take(20)
                    .map(|e| format!("no witness for gamma={:?}", e.gamma.0))
                    .collect();
                print!("{}", failure_report("aperiodicity", &missing));
                Ok(false)
            }
        }
        Command::Frequencies { common, radii } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            let radii = parse_radii(&radii, &loaded.spec)?;
            let mut handle = fixpoint_of(&datum, &subst);
            let table = letter_frequencies(&mut handle, &datum, &subst, &radii, loaded.budget)?;
            let mut out = String::from("r,letter,count,total,frequency\n");
            for row in &table.rows {
                for (l, count) in row.counts.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        format_scalar(&row.r),
                        subst.alphabet.name(l as u8),
                        count,
                        row.total,
                        format_scalar(&row.frequency(l))
                    ));
                }
            }
            emit(&common, &out)?;
            Ok(true)
        }
        Command::Export {
            common,
            kind,
            window,
            n,
            axis,
        } => {
            let loaded = load(&common)?;
            let datum = loaded.spec.build_datum()?;
            let subst = substitution_of(&loaded, &datum)?;
            match kind.as_str() {
                "delone" => {
                    let w = match window {
                        Some(w) => parse_scalar_arg(&w)?,
                        None => loaded
                            .spec
                            .analysis
                            .as_ref()
                            .and_then(|a| a.window.clone())
                            .ok_or_else(|| {
                                CoreError::Invalid("delone export needs --window".into())
                            })?,
                    };
                    let weights_spec = loaded
                        .spec
                        .analysis
                        .as_ref()
                        .map(|a| a.weights.clone())
                        .unwrap_or_default();
                    let mut weights = vec![Scalar::from_integer(0.into()); subst.alphabet.len()];
                    if weights_spec.is_empty() {
                        for (i, w) in weights.iter_mut().enumerate() {
                            *w = s_int(i as i64 + 1);
                        }
                    } else {
                        for (name, value) in &weights_spec {
                            let idx = subst.alphabet.index(name).ok_or_else(|| {
                                CoreError::Invalid(format!(
                                    "weight letter `{name}` not in alphabet"
                                ))
                            })?;
                            weights[idx as usize] = value.clone();
                        }
                    }
                    let mut handle = fixpoint_of(&datum, &subst);
                    let points = datum.ball_lattice_points(
                        &LatticePoint::origin(datum.dim()),
                        &w,
                        loaded.budget,
                    )?;
                    let patch = handle.eval_patch(&datum, &subst, &points)?;
                    let exported = export_weighted_delone(&datum, &patch, &weights)?;
                    let data = export_weighted(&exported, datum.dim(), common.format.to_core());
                    emit(&common, &data)?;
                    Ok(true)
                }
                "fibers" => {
                    let axis = axis.unwrap_or(datum.dim());
                    if axis == 0 || axis > datum.dim() {
                        return Err(CoreError::Invalid(format!(
                            "axis must be in 1..={}",
                            datum.dim()
                        )));
                    }
                    let patch = iterate_jobs(&datum, &subst, 0, n, loaded.budget, common.jobs)?;
                    let fibers = patch.fiber_extrema(axis - 1);
                    let mut out = String::new();
                    let headers: Vec<String> = (1..=datum.dim())
                        .filter(|&i| i != axis)
                        .map(|i| format!("x{i}"))
                        .collect();
                    out.push_str(&format!("{},min,max\n", headers.join(",")));
                    let scale = &datum.scales[axis - 1];
                    let horiz: Vec<&Scalar> = datum
                        .scales
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i + 1 != axis)
                        .map(|(_, s)| s)
                        .collect();
                    for (key, lo, hi) in fibers {
                        let coords: Vec<String> = key
                            .iter()
                            .zip(&horiz)
                            .map(|(m, s)| format_scalar(&(s_int(*m) * *s)))
                            .collect();
                        out.push_str(&format!(
                            "{},{},{}\n",
                            coords.join(","),
                            format_scalar(&(s_int(lo) * scale)),
                            format_scalar(&(s_int(hi) * scale))
                        ));
                    }
                    emit(&common, &out)?;
                    Ok(true)
                }
                other => Err(CoreError::Invalid(format!(
                    "export kind must be delone or fibers, got `{other}`"
                ))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (CoreError::Parse { .. } | CoreError::Io(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

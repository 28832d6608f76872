use std::path::Path;

use ou_semigroup::geometry::{verify_inequality, Cell, LEMMA_IDS};
use ou_semigroup::mehler::{
    log_bound_block2d, log_kernel_block2d, log_kernel_diag, log_kernel_general, log_kernel_kappa, transition_log_kernel,
    KernelSpec, RotationCoupling,
};
use ou_semigroup::model::{OUModel, SpectralParams, Time};
use ou_semigroup::model_file::{emit_model, parse_model, ModelSpec};
use ou_semigroup::normal_form::{check_normal, decompose};
use ou_semigroup::semigroup::{
    apply_kolmogorov, apply_mehler_with, maximal, sde_paths, sde_sample, Field, QuadratureOptions, SupportBox, TGrid,
};
use ou_semigroup::verify::{run_criterion, Check, VerifyOptions, CRITERIA};
use ou_semigroup::weaktype::{
    alpha_grid, calibrate_alpha, forbidden_zone_recursion, kappa_weak_type_scan, weak_type_scan, ForbiddenZoneConfig,
    Reference, TestFunction,
};
use ou_semigroup::{catalog, Error};

use crate::args::*;
use crate::output::{indexed, num, nums, Report};

/// Exit codes: 2 for arguments and configuration, 3 for an invalid model,
/// 4 for a failed computation. Failed verdicts exit with 1 and are not errors.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("invalid model: {0}")]
    Model(Error),
    #[error("{0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Model(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::NonPositiveTime(_)
            | Error::InvalidParameter(_)
            | Error::InvalidRate(_)
            | Error::UnknownLemma(_)
            | Error::Parse { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

type Outcome = Result<Report, CliError>;

type LogKernel<'a> = Box<dyn Fn(f64, &[f64], &[f64]) -> ou_semigroup::Result<f64> + 'a>;

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

/// Loads `--model` (a file, else a shipped name) or builds the `--lambdas` model.
pub fn load_model(global: &GlobalArgs) -> Result<ModelSpec, CliError> {
    if let Some(rates) = &global.lambdas {
        let model = OUModel::diagonal(rates).map_err(CliError::Model)?;
        return Ok(ModelSpec { name: None, model });
    }
    let Some(source) = &global.model else {
        return Err(config_error("no model given: pass --model <file or name> or --lambdas"));
    };
    let text = if Path::new(source).is_file() {
        std::fs::read_to_string(source)?
    } else if let Some(text) = catalog::source(source) {
        text.to_string()
    } else {
        return Err(config_error(format!("`{source}` is neither a model file nor a shipped model (see `ousg models`)")));
    };
    parse_model(&text).map_err(|e| match e {
        Error::Parse { .. } => config_error(format!("{source}: {e}")),
        other => CliError::Model(other),
    })
}

fn require_seed(global: &GlobalArgs, command: &str) -> Result<u64, CliError> {
    global.seed.ok_or_else(|| config_error(format!("`{command}` draws random numbers and needs --seed")))
}

/// `1,2;3,4` into two points of dimension `dim`.
pub fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let points: Vec<Vec<f64>> = text
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| config_error(format!("`{v}` is not a number"))))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;
    if points.is_empty() {
        return Err(config_error("no points given"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(config_error(format!("point {p:?} has {} coordinates, the model has {dim}", p.len())));
    }
    Ok(points)
}

/// Rates of a model with `Q = I` and diagonal drift.
fn diagonal_params(model: &OUModel) -> Result<SpectralParams, CliError> {
    match (model.canonical_rates(), model.diagonal_rates()) {
        (Some(_), Some(params)) => Ok(params),
        _ => Err(CliError::Numerical(Error::NotCanonical)),
    }
}

fn block_rate_and_frequency(model: &OUModel) -> Result<(f64, f64), CliError> {
    if model.dim() != 2 || model.canonical_rates().is_none() {
        return Err(CliError::Numerical(Error::NotCanonical));
    }
    Ok((-model.drift()[(0, 0)], model.drift()[(0, 1)]))
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

fn complex(z: &nalgebra::Complex<f64>) -> String {
    if z.im == 0.0 {
        num(z.re)
    } else {
        format!("{}{:+}i", num(z.re), z.im)
    }
}

pub fn validate(model: &ModelSpec) -> Outcome {
    let m = &model.model;
    let n = m.dim();
    let mut report = Report::new(["quantity", "value"]);
    report.row(["dimension".into(), n.to_string()]);
    for (i, z) in m.eigenvalues().iter().enumerate() {
        report.row([format!("eigenvalue[{}]", i + 1), complex(z)]);
    }
    let q_inf = m.invariant_covariance();
    for i in 0..n {
        for j in 0..n {
            report.row([format!("q_inf[{},{}]", i + 1, j + 1), num(q_inf[(i, j)])]);
        }
    }
    let residual = ou_semigroup::model::lyapunov_residual(m);
    let normality = check_normal(m, None);
    report.row(["lyapunov_residual".into(), num(residual)]);
    report.row(["commutator_norm".into(), num(normality.commutator_norm)]);
    report.row(["normal".into(), normality.is_normal.to_string()]);
    report.note(format!("model is valid: dimension {n}, Hurwitz drift, positive definite diffusion"));
    report.note(format!("normal: {}", if normality.is_normal { "yes" } else { "no" }));
    Ok(report)
}

pub fn decompose_cmd(model: &ModelSpec, args: &DecomposeArgs, out_model: &mut Option<String>) -> Outcome {
    let form = decompose(&model.model)?;
    if args.emit_model {
        let name = model.name.as_ref().map(|n| format!("{n}-canonical"));
        *out_model = Some(emit_model(&ModelSpec { name, model: form.canonical_model() }));
        return Ok(Report::default());
    }
    let mut report = Report::new(["kind", "index", "rate", "frequency"]);
    for (i, b) in form.blocks.iter().enumerate() {
        report.row(["block".into(), (i + 1).to_string(), num(b.rate), num(b.frequency)]);
    }
    for (i, s) in form.scalars.iter().enumerate() {
        report.row(["scalar".into(), (i + 1).to_string(), num(*s), num(0.0)]);
    }
    report.note(format!("{} rotation blocks, {} scalar rates", form.blocks.len(), form.scalars.len()));
    for (label, matrix) in [("basis", &form.basis), ("whitening", &form.whitening)] {
        report.detail(format!("{label}:"));
        for row in matrix.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
            report.detail(format!("  {}", cells.join(" ")));
        }
    }
    Ok(report)
}

pub fn kernel(model: &ModelSpec, args: &KernelArgs) -> Outcome {
    let m = &model.model;
    let n = m.dim();
    let xs = parse_points(&args.x, n)?;
    let us = parse_points(&args.u, n)?;
    let coupling = match args.coupling {
        Coupling::Exact => RotationCoupling::Exact,
        Coupling::HalfCross => RotationCoupling::HalfCross,
    };
    let evaluate: LogKernel = match args.variant {
        KernelVariant::Transition => Box::new(|t, x, u| transition_log_kernel(m, t, x, u)),
        KernelVariant::Diag => {
            let params = diagonal_params(m)?;
            Box::new(move |t, x, u| log_kernel_diag(&params, t, x, u))
        }
        KernelVariant::Kappa => {
            let spec = KernelSpec::new(diagonal_params(m)?, args.kappa)?;
            Box::new(move |t, x, u| log_kernel_kappa(&spec, t, x, u))
        }
        KernelVariant::General => {
            let form = decompose(m)?;
            Box::new(move |t, x, u| log_kernel_general(&form, t, &form.to_canonical(x), &form.to_canonical(u), coupling))
        }
        KernelVariant::Block => {
            let (rate, frequency) = block_rate_and_frequency(m)?;
            Box::new(move |t, x, u| log_kernel_block2d(rate, frequency, t, pair(x), pair(u), coupling))
        }
        KernelVariant::BlockBound => {
            let (rate, _) = block_rate_and_frequency(m)?;
            Box::new(move |t, x, u| log_bound_block2d(rate, t, pair(x), pair(u)))
        }
    };
    let header: Vec<String> =
        std::iter::once("t".to_string()).chain(indexed("x", n)).chain(indexed("u", n)).chain(["value".into(), "log_value".into()]).collect();
    let mut report = Report::new(header);
    for &t in &args.t {
        for x in &xs {
            for u in &us {
                let log_value = evaluate(t, x, u)?;
                report.row(std::iter::once(num(t)).chain(nums(x)).chain(nums(u)).chain([num(log_value.exp()), num(log_value)]));
            }
        }
    }
    Ok(report)
}

fn bump(args: &BumpArgs, n: usize) -> Result<(Vec<f64>, f64, SupportBox), CliError> {
    let center = args.center.clone().unwrap_or_else(|| vec![0.0; n]);
    if center.len() != n {
        return Err(config_error(format!("bump center has {} coordinates, the model has {n}", center.len())));
    }
    if !(args.width > 0.0) {
        return Err(config_error("bump width must be positive"));
    }
    let support = SupportBox::new(
        center.iter().map(|c| c - 10.0 * args.width).collect(),
        center.iter().map(|c| c + 10.0 * args.width).collect(),
    )?;
    Ok((center, args.width, support))
}

fn gaussian_bump(center: &[f64], width: f64) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |u: &[f64]| {
        let d2: f64 = u.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / (2.0 * width * width)).exp()
    }
}

fn quadrature_options(global: &GlobalArgs, n: usize) -> Result<QuadratureOptions, CliError> {
    let mut opts = QuadratureOptions::default();
    if n > opts.max_tensor_dim {
        opts.seed = require_seed(global, "monte carlo integration above dimension 3")?;
    }
    Ok(opts)
}

pub fn apply(model: &ModelSpec, args: &ApplyArgs, global: &GlobalArgs) -> Outcome {
    let m = &model.model;
    let n = m.dim();
    let (center, width, support) = bump(&args.bump, n)?;
    let eval = gaussian_bump(&center, width);
    let field = Field::new(&eval).with_support(support);
    let opts = quadrature_options(global, n)?;
    let xs = parse_points(&args.x, n)?;
    let form = match args.route {
        Route::Kolmogorov => None,
        _ => Some(decompose(m)?),
    };
    let mut columns: Vec<String> = std::iter::once("t".to_string()).chain(indexed("x", n)).collect();
    match args.route {
        Route::Kolmogorov => columns.extend(["kolmogorov".into(), "std_error".into()]),
        Route::Mehler => columns.extend(["mehler".into(), "std_error".into()]),
        Route::Both => columns.extend(["kolmogorov".into(), "mehler".into(), "difference".into()]),
    }
    let mut report = Report::new(columns);
    let mut worst: f64 = 0.0;
    for &t in &args.t {
        for x in &xs {
            let mut row: Vec<String> = std::iter::once(num(t)).chain(nums(x)).collect();
            let kolmogorov = match args.route {
                Route::Mehler => None,
                _ => Some(apply_kolmogorov(m, &field, x, t, &opts)?),
            };
            let mehler = match &form {
                Some(form) => Some(apply_mehler_with(m, form, &field, x, t, &opts)?),
                None => None,
            };
            match (kolmogorov, mehler) {
                (Some(a), Some(b)) => {
                    worst = worst.max((a.value - b.value).abs());
                    row.extend([num(a.value), num(b.value), num(a.value - b.value)]);
                }
                (Some(e), None) | (None, Some(e)) => row.extend([num(e.value), num(e.std_error)]),
                (None, None) => unreachable!("a route is always selected"),
            }
            report.row(row);
        }
    }
    if args.route == Route::Both {
        report.note(format!("max |kolmogorov - mehler| = {worst:.3e}"));
    }
    Ok(report)
}

pub fn maximal_cmd(model: &ModelSpec, args: &MaximalArgs, global: &GlobalArgs) -> Outcome {
    let m = &model.model;
    let n = m.dim();
    let (center, width, support) = bump(&args.bump, n)?;
    let eval = gaussian_bump(&center, width);
    let field = Field::new(&eval).with_support(support);
    let opts = quadrature_options(global, n)?;
    let grid = match &args.t_grid {
        None => TGrid::standard(),
        Some(spec) => match spec.as_slice() {
            &[lo, hi, count] if count >= 2.0 && count.fract() == 0.0 => TGrid::log_spaced(lo, hi, count as usize)?,
            _ => return Err(config_error("--t-grid takes lo,hi,count")),
        },
    };
    let header: Vec<String> =
        indexed("x", n).chain(["value".into(), "argmax_t".into(), "small_t".into(), "large_t".into()]).collect();
    let mut report = Report::new(header);
    for x in parse_points(&args.x, n)? {
        let v = maximal(m, &field, &x, &grid, &opts)?;
        report.row(nums(&x).chain([num(v.value), num(v.argmax_t), num(v.small_t), num(v.large_t)]));
    }
    report.note(format!("time grid: {} points on [{:e}, {:e}]", grid.points().len(), grid.points()[0], grid.points()[grid.points().len() - 1]));
    Ok(report)
}

pub fn sample(model: &ModelSpec, args: &SampleArgs, global: &GlobalArgs) -> Outcome {
    let seed = require_seed(global, "sample")?;
    let m = &model.model;
    let n = m.dim();
    let x = parse_points(&args.x, n)?.remove(0);
    if args.t.len() == 1 {
        let t = args.t[0];
        let batch = sde_sample(m, &x, t, args.count, seed)?;
        let mut report = Report::new(std::iter::once("sample".to_string()).chain(indexed("y", n)));
        for (i, s) in batch.samples.iter().enumerate() {
            report.row(std::iter::once(i.to_string()).chain(nums(s)));
        }
        let exact = m.drift_exp(t) * nalgebra::DVector::from_column_slice(&x);
        let cov = m.covariance_matrix(Time::Finite(t))?;
        let z = batch
            .mean()
            .iter()
            .enumerate()
            .map(|(j, v)| (v - exact[j]).abs() / (cov[(j, j)] / args.count as f64).sqrt())
            .fold(0.0, f64::max);
        report.note(format!("{} draws at t = {t}; max mean deviation {z:.2} standard errors", args.count));
        return Ok(report);
    }
    let paths = sde_paths(m, &x, &args.t, args.count, seed)?;
    let mut report = Report::new(["sample".to_string(), "t".to_string()].into_iter().chain(indexed("y", n)));
    for (i, path) in paths.iter().enumerate() {
        for (t, y) in args.t.iter().zip(path) {
            report.row([i.to_string(), num(*t)].into_iter().chain(nums(y)));
        }
    }
    report.note(format!("{} paths observed at {} times", args.count, args.t.len()));
    Ok(report)
}

/// Rates for the geometry and weak-type commands: `--lambdas`, or the
/// diagonal rates of the model.
fn rates_for(global: &GlobalArgs) -> Result<SpectralParams, CliError> {
    if let Some(r) = &global.lambdas {
        return SpectralParams::new(r.clone()).map_err(CliError::Model);
    }
    diagonal_params(&load_model(global)?.model)
}

pub fn geometry(args: &GeometryArgs, global: &GlobalArgs) -> Outcome {
    let seed = require_seed(global, "geometry")?;
    if !LEMMA_IDS.contains(&args.lemma.as_str()) {
        return Err(config_error(format!("unknown lemma `{}`; known: {}", args.lemma, LEMMA_IDS.join(", "))));
    }
    let params = rates_for(global)?;
    let margins = verify_inequality(&args.lemma, args.budget, seed, &params)?;
    let mut report =
        Report::new(["lemma", "samples", "min_margin", "violations", "degenerate", "explicit_constant", "witness"]);
    report.row([
        margins.lemma.clone(),
        margins.samples.to_string(),
        num(margins.min_margin),
        margins.violations.to_string(),
        margins.degenerate.to_string(),
        margins.explicit.to_string(),
        margins.witness.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "),
    ]);
    report.note(format!("{}: minimum margin {:.6e} over {} samples", margins.lemma, margins.min_margin, margins.samples));
    let name = if margins.explicit { "every margin nonnegative" } else { "infimum positive" };
    report.verdict(name, margins.holds());
    Ok(report)
}

fn weak_type_function(args: &WeaktypeArgs, reference: Reference, default_center: Vec<f64>, default_width: f64) -> Result<TestFunction, CliError> {
    let n = reference.dim();
    let width = args.width.unwrap_or(default_width);
    match args.family {
        Family::Bump => {
            let center = match &args.at {
                Some(text) => parse_points(text, n)?.remove(0),
                None => default_center,
            };
            Ok(TestFunction::bump(reference, center, width)?)
        }
        Family::Atoms => {
            let points = match &args.at {
                Some(text) => parse_points(text, n)?,
                None => vec![default_center],
            };
            let weights = vec![1.0; points.len()];
            Ok(TestFunction::atoms(reference, points, weights)?)
        }
    }
}

pub fn weaktype(args: &WeaktypeArgs, global: &GlobalArgs) -> Outcome {
    let seed = require_seed(global, "weaktype")?;
    let params = rates_for(global)?;
    if args.recursion {
        return recursion(args, params);
    }
    let alphas = match args.alpha_grid.as_slice() {
        &[lo, hi, count] if lo > 0.0 && hi > lo && count >= 2.0 && count.fract() == 0.0 => alpha_grid(lo, hi, count as usize),
        _ => return Err(config_error("--alpha-grid takes lo,hi,count with 0 < lo < hi and count >= 2")),
    };
    let n = params.dim();
    let f = weak_type_function(args, Reference::invariant(params.clone()), vec![1.0; n], 0.01)?;
    let scan = if args.kappa == 1.0 {
        weak_type_scan(&OUModel::diagonal(params.rates()).map_err(CliError::Model)?, &f, &alphas, args.budget, seed)?
    } else {
        kappa_weak_type_scan(&KernelSpec::new(params, args.kappa)?, &f, &alphas, args.budget, seed)?
    };
    let mut report = Report::new(["alpha", "measure", "std_error", "quotient"]);
    for i in 0..scan.alphas.len() {
        report.row([num(scan.alphas[i]), num(scan.measures[i]), num(scan.std_errors[i]), num(scan.quotients[i])]);
    }
    report.note(format!(
        "slope {:.4} (limit 0.05), max quotient {:.4}, analytic tail mass {:.3e}, {} samples",
        scan.slope,
        scan.max_quotient(),
        scan.tail_mass,
        scan.samples
    ));
    report.verdict("level-set measures nonincreasing in alpha", scan.is_monotone());
    report.verdict("quotient trend slope <= 0.05", scan.slope <= 0.05);
    Ok(report)
}

fn recursion(args: &WeaktypeArgs, params: SpectralParams) -> Outcome {
    let n = params.dim();
    if args.k == 0 || args.k > n {
        return Err(config_error(format!("--k must be between 1 and {n}")));
    }
    let nu = args.nu.clone().unwrap_or_else(|| vec![0; n - args.k]);
    let mut config = ForbiddenZoneConfig::new(params.clone(), args.k, nu.clone(), args.m1, args.m2)?;
    config.m_const = args.m;
    config.a_override = args.a;
    config.b_override = args.b;
    let cell = Cell::new(&nu)?;
    let mut center: Vec<f64> = params.rates()[..args.k].iter().map(|l| (6.0 / (args.k as f64 * l)).sqrt()).collect();
    center.extend(&cell.centers);
    let f = weak_type_function(args, Reference::new(params, args.k)?, center, 0.1)?;
    let measure = f.discretize(24);
    let alpha = match args.alpha {
        Some(a) => a,
        None => match calibrate_alpha(&config, &measure)? {
            Some((a, _)) => a,
            None => return Err(config_error("no level above the large-alpha threshold has a nonempty level set; pass --alpha")),
        },
    };
    let run = forbidden_zone_recursion(&config, &measure, alpha)?;
    let header: Vec<String> = std::iter::once("zone".to_string())
        .chain(indexed("x", n))
        .chain(["t", "value", "level", "cap_radius", "local_radius", "bound_ratio"].map(String::from))
        .collect();
    let mut report = Report::new(header);
    for (i, s) in run.selections.iter().enumerate() {
        let ratio = run.zone_ratios.get(i).copied().unwrap_or(f64::NAN);
        report.row(
            std::iter::once((i + 1).to_string())
                .chain(nums(&s.x))
                .chain([num(s.t), num(s.value), num(s.zone.level), num(s.zone.cap_radius), num(s.zone.local_radius), num(ratio)]),
        );
    }
    report.note(format!(
        "alpha {:.6e}: {} zones, {} of {} grid points in the level set, M = {}, A = {:.4}, B = {:.4}, c = {:.4}",
        run.alpha,
        run.selections.len(),
        run.level_set_points,
        run.grid_points,
        run.m_const,
        run.a_const,
        run.b_const,
        run.c
    ));
    if let Some(spread) = run.ratio_spread() {
        report.note(format!("zone bound ratio max/min {spread:.4}"));
    }
    report.verdict("forbidden balls pairwise disjoint", run.disjoint());
    report.verdict("level set covered by the zones", run.covered());
    report.verdict("selected levels nondecreasing", run.levels_nondecreasing());
    Ok(report)
}

pub fn verify_all(args: &VerifyArgs, global: &GlobalArgs) -> Outcome {
    let seed = require_seed(global, "verify-all")?;
    let options = VerifyOptions { seed, quick: args.quick };
    let ids: Vec<u8> = match &args.only {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
                return Err(config_error(format!("no criterion {bad}")));
            }
            ids.clone()
        }
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let mut report = Report::new(["criterion", "title", "metric", "value", "limit", "check", "holds"]);
    let mut passed = 0;
    for &id in &ids {
        let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or_default();
        match run_criterion(id, &options) {
            Ok(r) => {
                log::info!("criterion {id} finished in {:.1}s", r.elapsed.as_secs_f64());
                for m in &r.metrics {
                    let check = match m.check {
                        Check::AtMost => "at_most",
                        Check::AtLeast => "at_least",
                        Check::Above => "above",
                        Check::Info => "info",
                    };
                    let limit = if m.is_gated() { num(m.limit) } else { String::new() };
                    report.row([id.to_string(), title.into(), m.name.clone(), num(m.value), limit, check.into(), m.holds().to_string()]);
                }
                passed += usize::from(r.passed());
                report.verdict_failed |= !r.passed();
                report.note(r.summary_line());
            }
            Err(e) => {
                report.row([id.to_string(), title.into(), "error".into(), String::new(), String::new(), "error".into(), "false".into()]);
                report.verdict_failed = true;
                report.note(format!("criterion {id:>2} FAIL {title}: {e}"));
            }
        }
    }
    report.note(format!("{passed} of {} criteria passed", ids.len()));
    Ok(report)
}

pub fn models() -> Outcome {
    let mut report = Report::new(["name", "dimension", "normal"]);
    for spec in catalog::shipped_models() {
        let normal = check_normal(&spec.model, None).is_normal;
        report.row([spec.name.unwrap_or_default(), spec.model.dim().to_string(), normal.to_string()]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_split_on_semicolons() {
        assert_eq!(parse_points("1,2; 3,4", 2).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(matches!(parse_points("1,2,3", 2), Err(CliError::Config(_))));
        assert!(matches!(parse_points("1,x", 2), Err(CliError::Config(_))));
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::NotNormal { commutator: 1.0, tolerance: 0.0 }).exit_code(), 4);
        assert_eq!(CliError::from(Error::UnknownLemma("x".into())).exit_code(), 2);
        assert_eq!(CliError::Model(Error::NotHurwitz { real_part: 1.0 }).exit_code(), 3);
    }
}

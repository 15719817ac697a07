//! Declarative experiment configs and the runners behind the command line.
//!
//! A config is a JSON object
//! `{"kind": ..., "parameters": {...}, "output_path": ..., "seed": ..., "bits": ...}`.
//! Parameters are parsed into the kind's schema before any computation.
//! Every runner returns CSV text whose first line is
//! `# config-sha256=<hex>` followed by the header row.

use std::f64::consts::LN_2;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::{Channel, Distribution, RngStream};
use crate::error::{Error, Result};
use crate::info::{capacity, entropy, rate_distortion, DistortionMatrix, DEFAULT_CAPACITY_TOL, DEFAULT_RD_TOL};
use crate::oracle::{adaptive_simpson, simplex_monte_carlo};
use crate::polytope::{
    det_first_order, dirichlet_integral, sherman_morrison, simplex_gaussian_integral,
    smoothed_delta_normalization, SimplexGaussian, SmoothedDelta,
};
use crate::sim::{
    simulate_channel_coding, simulate_rate_distortion, simulate_source_coding, ChannelCodingSetup,
    ChannelDecoder, Mode, RateDistortionSetup, RdEncoder, SimOptions, DEFAULT_OP_LIMIT,
};
use crate::theorems::{
    channel_coding_prediction, source_coding_asymptote, source_coding_exact_psuc, SourceCodingMode,
    SourceCodingSetup,
};
use crate::types::{
    approx_count_types, class_size, count_types, enumerate_types, iid_type_probability, type_count_identity_check,
    SequenceType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Claims,
    SourceCoding,
    ChannelCoding,
    RateDistortion,
    Integrals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Claims,
    Sweep,
    Capacity,
    RdCurve,
    Integrals,
}

impl Command {
    fn accepts(self, kind: Kind) -> bool {
        match self {
            Command::Claims => kind == Kind::Claims,
            Command::Sweep => matches!(kind, Kind::SourceCoding | Kind::ChannelCoding | Kind::RateDistortion),
            Command::Capacity => kind == Kind::ChannelCoding,
            Command::RdCurve => kind == Kind::RateDistortion,
            Command::Integrals => kind == Kind::Integrals,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default = "empty_object")]
    pub parameters: serde_json::Value,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Emit rates and information quantities in bits instead of nats.
    #[serde(default)]
    pub bits: bool,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// A config of `kind` with all parameters at their defaults.
    pub fn defaults(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            parameters: empty_object(),
            output_path: None,
            seed: None,
            bits: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// SHA-256 of the canonical JSON form (keys sorted), seed included.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.parameters.clone())
            .map_err(|e| Error::ConfigInvalid(format!("{:?} parameters: {e}", self.kind)))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: String,
    /// False iff some check row failed (claims only).
    pub all_passed: bool,
}

struct Table {
    out: csv::Writer<Vec<u8>>,
    hash: String,
}

impl Table {
    fn new(hash: String, header: &[&str]) -> Self {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header).expect("write to memory");
        Table { out, hash }
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        self.out.write_record(cells.into_iter().collect::<Vec<_>>()).expect("write to memory");
    }

    fn finish(self) -> String {
        let body = String::from_utf8(self.out.into_inner().expect("flush to memory")).expect("utf-8");
        format!("# config-sha256={}\n{body}", self.hash)
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn unit(bits: bool) -> f64 {
    if bits {
        1.0 / LN_2
    } else {
        1.0
    }
}

/// Validates `config` for `command` and runs it; writing the CSV is left to
/// the caller.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunOutput> {
    if !command.accepts(config.kind) {
        return Err(Error::ConfigInvalid(format!(
            "config kind {:?} does not fit this subcommand",
            config.kind
        )));
    }
    match (command, config.kind) {
        (Command::Claims, _) => run_claims(config, config.params()?),
        (Command::Integrals, _) => run_integrals(config, config.params()?),
        (Command::Capacity, _) => run_capacity(config, config.params()?),
        (Command::RdCurve, _) => run_rd_curve(config, config.params()?),
        (Command::Sweep, Kind::SourceCoding) => run_source_sweep(config, config.params()?),
        (Command::Sweep, Kind::ChannelCoding) => run_channel_sweep(config, config.params()?),
        (Command::Sweep, _) => run_rd_sweep(config, config.params()?),
    }
}

// ---------------------------------------------------------------- claims

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClaimsParams {
    pub partition_alphabets: Vec<usize>,
    pub partition_max_n: u64,
    pub stirling_ns: Vec<u64>,
    pub stirling_tolerance_n: u64,
    pub type_count_ns: Vec<u64>,
    pub identity_max_n: u64,
    pub dirichlet_max_alphabet: usize,
    pub gaussian_lambda: f64,
    pub delta_n: u64,
    pub delta_epsilon: f64,
}

impl Default for ClaimsParams {
    fn default() -> Self {
        ClaimsParams {
            partition_alphabets: vec![2, 3],
            partition_max_n: 14,
            stirling_ns: (1..=10).map(|k| 20 * k).collect(),
            stirling_tolerance_n: 100,
            type_count_ns: vec![50, 100, 200, 400, 800],
            identity_max_n: 8,
            dirichlet_max_alphabet: 6,
            gaussian_lambda: 1e3,
            delta_n: 200,
            delta_epsilon: 0.05,
        }
    }
}

struct Check {
    name: &'static str,
    parameter: String,
    value: f64,
    reference: f64,
    error: f64,
    pass: bool,
}

fn named<T>(check: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InstanceTooLarge { what, size, limit } => Error::InstanceTooLarge {
            what: format!("check {check}: {what}"),
            size,
            limit,
        },
        other => Error::InvalidParameter(format!("check {check}: {other}")),
    })
}

fn claims_checks(p: &ClaimsParams) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    for &size in &p.partition_alphabets {
        for n in 1..=p.partition_max_n {
            let (prob, total) = named("type-partition", partition_sums(size, n))?;
            let exact = total == BigUint::from(size).pow(n as u32);
            let err = (prob - 1.0).abs();
            checks.push(Check {
                name: "type-partition",
                parameter: format!("N={size} n={n}"),
                value: prob,
                reference: 1.0,
                error: err,
                pass: exact && err <= 1e-12,
            });
        }
    }

    let mut previous = f64::INFINITY;
    for &n in &p.stirling_ns {
        if n % 2 != 0 {
            return Err(Error::ConfigInvalid(format!("stirling n {n} must be even")));
        }
        let t = SequenceType::new(vec![n / 2, n / 2])?;
        let err = class_size(&t).relative_error();
        let within = n < p.stirling_tolerance_n || err < 0.01;
        checks.push(Check {
            name: "stirling-class-size",
            parameter: format!("n={n}"),
            value: err,
            reference: 0.0,
            error: err,
            pass: err < previous && within,
        });
        previous = err;
    }

    for size in [2usize, 3] {
        for &n in &p.type_count_ns {
            let exact = count_types(size, n).to_f64().unwrap_or(f64::INFINITY);
            let ratio = exact / approx_count_types(size, n);
            let upper = 1.0 + 3.0 * size as f64 / n as f64;
            checks.push(Check {
                name: "type-count",
                parameter: format!("N={size} n={n}"),
                value: ratio,
                reference: 1.0,
                error: ratio - 1.0,
                pass: n >= 50 && (1.0..=upper).contains(&ratio),
            });
        }
    }

    for n in 1..=p.identity_max_n {
        let r = named("conditional-identity", type_count_identity_check(2, 2, n))?;
        checks.push(Check {
            name: "conditional-identity",
            parameter: format!("Nx=2 Ny=2 n={n}"),
            value: r.enumerated_pairs as f64,
            reference: r.total_pairs.to_f64().unwrap_or(f64::INFINITY),
            error: 0.0,
            pass: r.holds(),
        });
    }

    let mut factorial = 1.0;
    for size in 1..=p.dirichlet_max_alphabet {
        if size > 1 {
            factorial *= (size - 1) as f64;
        }
        let v = named("dirichlet", dirichlet_integral(&vec![1.0; size]))?;
        let reference = 1.0 / factorial;
        checks.push(Check {
            name: "dirichlet-volume",
            parameter: format!("N={size}"),
            value: v,
            reference,
            error: (v - reference).abs(),
            pass: v == reference,
        });
    }

    let lambda = p.gaussian_lambda;
    let g = SimplexGaussian::diagonal(Distribution::uniform(2)?, vec![lambda, lambda])?;
    let closed = named("gaussian-quadrature", simplex_gaussian_integral(&g))?;
    let quad = adaptive_simpson(|t| g.density(&[t, 1.0 - t]), 0.0, 1.0, 1e-14);
    let rel = (closed - quad).abs() / quad;
    checks.push(Check {
        name: "gaussian-quadrature",
        parameter: format!("N=2 lambda={lambda}"),
        value: closed,
        reference: quad,
        error: rel,
        pass: rel < 1e-3,
    });

    let reference = SequenceType::new(vec![p.delta_n / 2, p.delta_n - p.delta_n / 2])?;
    let delta = SmoothedDelta::new(p.delta_epsilon, reference)?;
    let norm = named("smoothed-delta", smoothed_delta_normalization(&delta))?;
    let eps = format!("n={} eps={}", p.delta_n, p.delta_epsilon);
    checks.push(Check {
        name: "smoothed-delta-continuous",
        parameter: eps.clone(),
        value: norm.continuous,
        reference: 1.0,
        error: (norm.continuous - 1.0).abs(),
        pass: (norm.continuous - 1.0).abs() < 1e-6,
    });
    checks.push(Check {
        name: "smoothed-delta-type-sum",
        parameter: eps,
        value: norm.type_sum,
        reference: 1.0,
        error: (norm.type_sum - 1.0).abs(),
        pass: (norm.type_sum - 1.0).abs() < 0.05,
    });

    Ok(checks)
}

/// (Σ_T d_T Q(T), Σ_T d_T) for the uniform source.
fn partition_sums(size: usize, n: u64) -> Result<(f64, BigUint)> {
    let q = Distribution::uniform(size)?;
    let mut prob = 0.0;
    let mut total = BigUint::from(0u32);
    for t in enumerate_types(size, n)? {
        prob += (crate::types::ln_multinomial(t.counts()) + iid_type_probability(&t, &q)?).exp();
        total += crate::types::multinomial(t.counts());
    }
    Ok((prob, total))
}

fn run_claims(config: &ExperimentConfig, p: ClaimsParams) -> Result<RunOutput> {
    let checks = claims_checks(&p)?;
    let mut table = Table::new(config.hash(), &["check", "parameter", "value", "reference", "error", "pass"]);
    let mut all = true;
    for c in &checks {
        all &= c.pass;
        table.row([
            c.name.to_string(),
            c.parameter.clone(),
            fmt(c.value),
            fmt(c.reference),
            fmt(c.error),
            c.pass.to_string(),
        ]);
    }
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: all,
    })
}

// ------------------------------------------------------------- integrals

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: Vec<f64>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegralsParams {
    pub dirichlet: Vec<Vec<f64>>,
    pub gaussians: Vec<GaussianSpec>,
    pub monte_carlo_samples: usize,
    pub update_instances: usize,
    pub update_dimension: usize,
    pub determinant_eps: Vec<f64>,
}

impl Default for IntegralsParams {
    fn default() -> Self {
        IntegralsParams {
            dirichlet: vec![vec![1.0, 1.0], vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0], vec![0.5, 0.5]],
            gaussians: vec![
                GaussianSpec {
                    center: vec![0.5, 0.5],
                    lambdas: vec![1e3, 1e3],
                },
                GaussianSpec {
                    center: vec![0.3, 0.3, 0.4],
                    lambdas: vec![400.0, 600.0, 800.0],
                },
                GaussianSpec {
                    center: vec![0.25, 0.25, 0.25, 0.25],
                    lambdas: vec![800.0, 800.0, 800.0, 800.0],
                },
            ],
            monte_carlo_samples: 1 << 20,
            update_instances: 100,
            update_dimension: 4,
            determinant_eps: vec![1e-2, 5e-3, 2.5e-3],
        }
    }
}

fn run_integrals(config: &ExperimentConfig, p: IntegralsParams) -> Result<RunOutput> {
    let mut table = Table::new(
        config.hash(),
        &["integral", "input", "closed_form", "oracle", "oracle_error", "rel_diff"],
    );
    let stream = RngStream::new(config.seed(), 0);
    let describe = |v: &[f64]| v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(" ");

    for e in &p.dirichlet {
        let closed = dirichlet_integral(e)?;
        let oracle = if e.len() == 2 {
            (beta_quadrature(e[0], e[1]), 0.0)
        } else {
            let mc = simplex_monte_carlo(
                |q| q.iter().zip(e).map(|(q, a)| q.powf(a - 1.0)).product(),
                e.len(),
                p.monte_carlo_samples,
                stream.substream(1),
            );
            (mc.value, mc.std_error)
        };
        table.row([
            "dirichlet".into(),
            describe(e),
            fmt(closed),
            fmt(oracle.0),
            fmt(oracle.1),
            fmt((closed - oracle.0) / oracle.0),
        ]);
    }

    for (i, case) in p.gaussians.iter().enumerate() {
        let g = SimplexGaussian::diagonal(Distribution::new(case.center.clone())?, case.lambdas.clone())?;
        let closed = simplex_gaussian_integral(&g)?;
        let oracle = if case.center.len() == 2 {
            (adaptive_simpson(|t| g.density(&[t, 1.0 - t]), 0.0, 1.0, 1e-14), 0.0)
        } else {
            let mc = simplex_monte_carlo(|q| g.density(q), g.dim(), p.monte_carlo_samples, stream.substream(100 + i as u64));
            (mc.value, mc.std_error)
        };
        table.row([
            "simplex-gaussian".into(),
            format!("center={} lambda={}", describe(&case.center), describe(&case.lambdas)),
            fmt(closed),
            fmt(oracle.0),
            fmt(oracle.1),
            fmt((closed - oracle.0) / oracle.0),
        ]);
    }

    let (inv_err, det_err) = update_lemma_errors(p.update_instances, p.update_dimension, stream.substream(2))?;
    table.row([
        "sherman-morrison".into(),
        format!("instances={} dim={}", p.update_instances, p.update_dimension),
        fmt(0.0),
        fmt(inv_err),
        fmt(0.0),
        fmt(inv_err),
    ]);
    table.row([
        "determinant-lemma".into(),
        format!("instances={} dim={}", p.update_instances, p.update_dimension),
        fmt(0.0),
        fmt(det_err),
        fmt(0.0),
        fmt(det_err),
    ]);

    let a = fixed_test_matrix(p.update_dimension);
    for &eps in &p.determinant_eps {
        let exact = (DMatrix::identity(a.nrows(), a.ncols()) + &a * eps).determinant();
        let approx = det_first_order(&a, eps);
        table.row([
            "det-first-order".into(),
            format!("eps={eps}"),
            fmt(approx),
            fmt(exact),
            fmt(0.0),
            fmt((approx - exact).abs()),
        ]);
    }

    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

/// ∫₀¹ t^{a−1}(1−t)^{b−1} dt with t = u^{1/a} near 0 (and the mirror near 1),
/// which removes the endpoint singularities.
fn beta_quadrature(a: f64, b: f64) -> f64 {
    let half = |a: f64, b: f64| {
        adaptive_simpson(|u| (1.0 - u.powf(1.0 / a)).powf(b - 1.0) / a, 0.0, 0.5f64.powf(a), 1e-13)
    };
    half(a, b) + half(b, a)
}

/// A fixed well-conditioned symmetric test matrix.
pub fn fixed_test_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            1.0 + i as f64
        } else {
            0.5 / (1.0 + (i as f64 - j as f64).abs())
        }
    })
}

/// Max relative errors of the Sherman–Morrison inverse and the determinant
/// lemma against direct LU over random E + p qᵀ.
pub fn update_lemma_errors(instances: usize, dim: usize, stream: RngStream) -> Result<(f64, f64)> {
    let mut rng = stream.rng();
    let (mut inv_err, mut det_err) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let e = DMatrix::from_fn(dim, dim, |i, j| {
            let v: f64 = rng.gen_range(-0.5..0.5);
            if i == j {
                v + dim as f64
            } else {
                v
            }
        });
        let p = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let q = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let e_inv = e.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let (inv, det) = sherman_morrison(&e_inv, e.determinant(), &p, &q)?;
        let a = &e + &p * q.transpose();
        let direct = a.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        inv_err = inv_err.max((&inv - &direct).amax() / direct.amax());
        let d = a.determinant();
        det_err = det_err.max((det - d).abs() / d.abs());
    }
    Ok((inv_err, det_err))
}

// -------------------------------------------------------------- capacity

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub channel: Channel,
    /// Input distribution; the capacity-achieving one when absent.
    #[serde(default)]
    pub input: Option<Distribution>,
    #[serde(default)]
    pub rates: Vec<f64>,
    /// Rates given relative to capacity, added to `rates`.
    #[serde(default)]
    pub rate_offsets: Vec<f64>,
    #[serde(default)]
    pub ns: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_decoder")]
    pub decoder: ChannelDecoder,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub fixed_codebook: bool,
    #[serde(default = "default_op_limit")]
    pub op_limit: f64,
}

fn default_trials() -> u64 {
    1000
}

fn default_decoder() -> ChannelDecoder {
    ChannelDecoder::Threshold
}

fn default_op_limit() -> f64 {
    DEFAULT_OP_LIMIT
}

fn run_capacity(config: &ExperimentConfig, p: ChannelParams) -> Result<RunOutput> {
    let r = capacity(&p.channel, DEFAULT_CAPACITY_TOL)?;
    let u = unit(config.bits);
    let mut table = Table::new(
        config.hash(),
        &["capacity", "gap_bound", "iterations", "optimal_input", "unit"],
    );
    table.row([
        fmt(r.capacity_nats * u),
        fmt(r.gap_bound * u),
        r.iterations.to_string(),
        r.optimal_input.probs().iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" "),
        unit_name(config.bits).into(),
    ]);
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

fn unit_name(bits: bool) -> &'static str {
    if bits {
        "bits"
    } else {
        "nats"
    }
}

fn need_grid(rates: &[f64], ns: &[u64]) -> Result<()> {
    if rates.is_empty() || ns.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one rate and one n".into()));
    }
    Ok(())
}

fn run_channel_sweep(config: &ExperimentConfig, p: ChannelParams) -> Result<RunOutput> {
    let cap = capacity(&p.channel, DEFAULT_CAPACITY_TOL)?;
    let input = p.input.clone().unwrap_or(cap.optimal_input.clone());
    let mut rates = p.rates.clone();
    rates.extend(p.rate_offsets.iter().map(|o| cap.capacity_nats + o));
    need_grid(&rates, &p.ns)?;
    if input.len() != p.channel.input_size() {
        return Err(Error::ConfigInvalid("input distribution does not match the channel".into()));
    }
    let options = SimOptions {
        mode: p.mode,
        fixed_codebook: p.fixed_codebook,
        op_limit: p.op_limit,
    };
    // validate every grid point before simulating
    let mut setups = Vec::new();
    for &n in &p.ns {
        for &rate in &rates {
            let setup = ChannelCodingSetup::new(p.channel.clone(), input.clone(), rate, n)?;
            options_fit(&options, setup.ln_codebook_size(), n, p.trials)?;
            setups.push(setup);
        }
    }
    let u = unit(config.bits);
    let mut table = Table::new(
        config.hash(),
        &["n", "rate", "trials", "p_hat", "ci95", "predictor_value", "step_value", "engine"],
    );
    for (i, setup) in setups.iter().enumerate() {
        let stream = RngStream::new(config.seed(), i as u64);
        let report = simulate_channel_coding(setup, p.decoder, p.trials, stream, &options)?;
        let pred = channel_coding_prediction(&p.channel, &input, setup.rate, setup.n)?;
        table.row([
            setup.n.to_string(),
            fmt(setup.rate * u),
            p.trials.to_string(),
            fmt(report.p_hat),
            fmt(report.ci95_halfwidth),
            fmt(pred.p_suc_erfc),
            pred.p_suc_step.to_string(),
            engine_name(report.engine).into(),
        ]);
    }
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

fn options_fit(options: &SimOptions, ln_codebook: f64, n: u64, trials: u64) -> Result<()> {
    let cost = (ln_codebook + (n as f64).ln() + (trials as f64).ln()).exp();
    if options.mode == Mode::Materialized && cost > options.op_limit {
        return Err(Error::CodebookTooLarge {
            cost,
            limit: options.op_limit,
        });
    }
    Ok(())
}

fn engine_name(m: Mode) -> &'static str {
    match m {
        Mode::Auto => "auto",
        Mode::Materialized => "materialized",
        Mode::Sampled => "sampled",
    }
}

// ---------------------------------------------------------- source sweep

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub source: Distribution,
    #[serde(default = "default_source_mode")]
    pub mode: SourceCodingMode,
    #[serde(default)]
    pub rates: Vec<f64>,
    /// Rates given relative to the source entropy, added to `rates`.
    #[serde(default)]
    pub rate_offsets: Vec<f64>,
    pub ns: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
}

fn default_source_mode() -> SourceCodingMode {
    SourceCodingMode::SourceDependent
}

fn run_source_sweep(config: &ExperimentConfig, p: SourceParams) -> Result<RunOutput> {
    let h = entropy(&p.source);
    let mut rates = p.rates.clone();
    rates.extend(p.rate_offsets.iter().map(|o| h + o));
    need_grid(&rates, &p.ns)?;
    let mut setups = Vec::new();
    for &n in &p.ns {
        for &rate in &rates {
            setups.push(SourceCodingSetup::new(p.source.clone(), rate, n, p.mode)?);
        }
    }
    if p.trials == 0 {
        return Err(Error::ConfigInvalid("trials must be at least 1".into()));
    }
    let u = unit(config.bits);
    let mut table = Table::new(
        config.hash(),
        &["n", "rate", "trials", "p_hat", "ci95", "predictor_value", "exact_value"],
    );
    for (i, setup) in setups.iter().enumerate() {
        let report = simulate_source_coding(setup, p.trials, RngStream::new(config.seed(), i as u64))?;
        let exact = match source_coding_exact_psuc(setup) {
            Ok(v) => fmt(v),
            Err(Error::InstanceTooLarge { .. }) => String::new(),
            Err(e) => return Err(e),
        };
        table.row([
            setup.n.to_string(),
            fmt(setup.rate * u),
            p.trials.to_string(),
            fmt(report.p_hat),
            fmt(report.ci95_halfwidth),
            source_coding_asymptote(setup).to_string(),
            exact,
        ]);
    }
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

// ------------------------------------------------------ rate-distortion

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdParams {
    pub source: Distribution,
    pub distortion: DistortionMatrix,
    /// Distortion bound D for sweeps.
    #[serde(default)]
    pub max_distortion: Option<f64>,
    /// Grid of D for `rd-curve`.
    #[serde(default)]
    pub distortions: Vec<f64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    /// Rates relative to H_x(D), added to `rates`.
    #[serde(default)]
    pub rate_offsets: Vec<f64>,
    #[serde(default)]
    pub ns: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_encoder")]
    pub encoder: RdEncoder,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_op_limit")]
    pub op_limit: f64,
}

fn default_encoder() -> RdEncoder {
    RdEncoder::Threshold
}

fn run_rd_curve(config: &ExperimentConfig, p: RdParams) -> Result<RunOutput> {
    if p.distortions.is_empty() {
        return Err(Error::ConfigInvalid("rd-curve needs a non-empty `distortions` grid".into()));
    }
    if p.distortion.size() != p.source.len() {
        return Err(Error::ConfigInvalid("distortion matrix does not match the source".into()));
    }
    let u = unit(config.bits);
    let mut table = Table::new(config.hash(), &["D", "rate", "achieved_distortion", "unit"]);
    for &d in &p.distortions {
        let pt = rate_distortion(&p.source, &p.distortion, d, DEFAULT_RD_TOL)?;
        table.row([
            fmt(d),
            fmt(pt.rate_nats * u),
            fmt(pt.achieved_distortion),
            unit_name(config.bits).into(),
        ]);
    }
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

fn run_rd_sweep(config: &ExperimentConfig, p: RdParams) -> Result<RunOutput> {
    let d = p
        .max_distortion
        .ok_or_else(|| Error::ConfigInvalid("rate-distortion sweep needs `max_distortion`".into()))?;
    let pt = rate_distortion(&p.source, &p.distortion, d, DEFAULT_RD_TOL)?;
    let mut rates = p.rates.clone();
    rates.extend(p.rate_offsets.iter().map(|o| pt.rate_nats + o));
    need_grid(&rates, &p.ns)?;
    let options = SimOptions {
        mode: p.mode,
        fixed_codebook: false,
        op_limit: p.op_limit,
    };
    let mut setups = Vec::new();
    for &n in &p.ns {
        for &rate in &rates {
            let s = RateDistortionSetup::new(
                p.source.clone(),
                pt.optimal_test_channel.clone(),
                p.distortion.clone(),
                d,
                rate,
                n,
            )?;
            options_fit(&options, s.ln_codebook_size(), n, p.trials)?;
            setups.push(s);
        }
    }
    let u = unit(config.bits);
    let mut table = Table::new(
        config.hash(),
        &["n", "rate", "trials", "p_hat", "ci95", "predictor_value", "rate_distortion_bound", "engine"],
    );
    for (i, setup) in setups.iter().enumerate() {
        let report = simulate_rate_distortion(setup, p.encoder, p.trials, RngStream::new(config.seed(), i as u64), &options)?;
        table.row([
            setup.n.to_string(),
            fmt(setup.rate * u),
            p.trials.to_string(),
            fmt(report.p_hat),
            fmt(report.ci95_halfwidth),
            u8::from(setup.rate > pt.rate_nats).to_string(),
            fmt(pt.rate_nats * u),
            engine_name(report.engine).into(),
        ]);
    }
    Ok(RunOutput {
        csv: table.finish(),
        all_passed: true,
    })
}

/// Resolves where output goes: the explicit override, else the config's path.
pub fn output_path(config: &ExperimentConfig, overridden: Option<PathBuf>) -> Result<PathBuf> {
    overridden
        .or_else(|| config.output_path.clone())
        .ok_or_else(|| Error::ConfigInvalid("no output path (set `output_path` or pass --out)".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"kind":"claims","extra":1}"#),
            Err(Error::ConfigInvalid(_))
        ));
        let c = ExperimentConfig::from_json(r#"{"kind":"claims","parameters":{"bogus":3}}"#).unwrap();
        assert!(matches!(run(Command::Claims, &c), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn kind_must_fit_command() {
        let c = ExperimentConfig::defaults(Kind::Claims);
        assert!(matches!(run(Command::Sweep, &c), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn missing_output_is_config_error() {
        let c = ExperimentConfig::defaults(Kind::Claims);
        assert!(matches!(output_path(&c, None), Err(Error::ConfigInvalid(_))));
        assert_eq!(output_path(&c, Some("a.csv".into())).unwrap(), PathBuf::from("a.csv"));
    }

    #[test]
    fn oversized_check_is_named() {
        let c = ExperimentConfig::from_json(r#"{"kind":"claims","parameters":{"identity_max_n":13}}"#).unwrap();
        match run(Command::Claims, &c) {
            Err(Error::InstanceTooLarge { what, .. }) => assert!(what.contains("conditional-identity")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_depends_on_seed() {
        let mut c = ExperimentConfig::defaults(Kind::Integrals);
        let h0 = c.hash();
        c.seed = Some(5);
        assert_ne!(h0, c.hash());
        assert_eq!(h0.len(), 64);
    }

    #[test]
    fn beta_quadrature_handles_singular_ends() {
        assert!((beta_quadrature(0.5, 0.5) - std::f64::consts::PI).abs() < 1e-9);
        assert!((beta_quadrature(2.0, 3.0) - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_in_bits() {
        let c = ExperimentConfig::from_json(
            r#"{"kind":"channel-coding","bits":true,"parameters":{"channel":{"rows":[[1,0],[0,1]]}}}"#,
        )
        .unwrap();
        let out = run(Command::Capacity, &c).unwrap();
        let row = out.csv.lines().nth(2).unwrap();
        let cap: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert!((cap - 1.0).abs() < 1e-9);
    }
}

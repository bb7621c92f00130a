//! Batch runner behind the `ergolab` binary.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ergodicity::{
    dimension_ceiling_violations, ergodicity_report_with, primes_in, scar_outliers, ErgodicityRecord,
    ExperimentConfig,
};
use crate::error::{Error, Result};
use crate::geometry::default_test_family;
use crate::geometry::trials::{concentration_schedule, lemma_trials, LemmaTrialConfig};
use crate::observables::FourierObservable;
use crate::quantization::{quantize, trace_average, QuantizationContext};
use crate::report::{csv_text, json_lines, write_atomic, Cell, CsvRecord, Format};
use crate::sl2::{Letter, SL2Matrix, SL2Word};
use crate::spectral::DEFAULT_CLUSTER_TOL;
use crate::verlinde::{
    asymptotic_volume_estimate, spin_dimension_table, spin_dimension_table_for_level, verlinde_dim, AsymptoticRow,
    SpinDimensionTable,
};
use crate::weil::{egorov_defect_with, generators, homomorphism_defect, rho, scalar_defect};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const MAX_LEVEL: u64 = 2048;
pub const THREADS_ENV: &str = "ERGOLAB_THREADS";

/// Pinned tolerances of the sweeps.
pub mod tol {
    pub const MORPHISM: f64 = 1e-9;
    pub const COMMUTATION: f64 = 1e-12;
    pub const HERMITICITY: f64 = 1e-12;
    pub const TRACE_IDENTITY: f64 = 1e-12;
    pub const UNITARITY: f64 = 1e-9;
    pub const PROJECTIVE: f64 = 1e-8;
    pub const RELATIONS: f64 = 1e-8;
    pub const EGOROV: f64 = 1e-8;
    pub const BARYCENTER: f64 = 1e-10;
    pub const SCHEDULE_TERMINAL: f64 = 0.99;
}

#[derive(Parser, Debug)]
#[command(name = "ergolab", version, about = "Quantum ergodicity lab on the quantized torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report file; nothing is written without it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn level() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(1..=MAX_LEVEL)
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Star-product morphism, commutation, Hermiticity and trace identities.
    TorusCheck {
        #[arg(long, default_value_t = 3, value_parser = level())]
        n_min: u64,
        #[arg(long, default_value_t = 40, value_parser = level())]
        n_max: u64,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Unitarity, projectivity, generator relations and Egorov defects.
    WeilCheck {
        #[arg(long, default_value_t = 4, value_parser = level())]
        n_min: u64,
        #[arg(long, default_value_t = 32, value_parser = level())]
        n_max: u64,
        /// Egorov defects are measured up to this level.
        #[arg(long, default_value_t = 64, value_parser = level())]
        egorov_n_max: u64,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = 50)]
        max_entry: i64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Eigenspace states of a quantum cat map against the classical state.
    Catmap {
        #[arg(long, default_value = "2,1,1,1")]
        matrix: SL2Matrix,
        #[arg(long, default_value_t = 11, value_parser = level())]
        n_min: u64,
        #[arg(long, default_value_t = 41, value_parser = level())]
        n_max: u64,
        /// Use every level in range, not only primes.
        #[arg(long)]
        all_levels: bool,
        /// Explicit levels; overrides the range.
        #[arg(long, value_delimiter = ',', value_parser = level())]
        levels: Vec<u64>,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Test-family size `n_max`.
        #[arg(long, default_value_t = 25)]
        family_size: usize,
        #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
        cluster_tol: f64,
        /// List blocks farther than this from the classical state.
        #[arg(long)]
        scar_threshold: Option<f64>,
        /// Report outlier blocks whose dimension share exceeds this.
        #[arg(long, default_value_t = 0.1)]
        dim_ceiling: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Randomized separating-functional trials and the concentration schedule.
    Convex {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        r_max: usize,
        #[arg(long, default_value_t = 3)]
        simplex_dim: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Verlinde dimensions on a genus × level grid.
    Verlinde {
        #[arg(long, value_delimiter = ',', required = true)]
        genus: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true, value_parser = level())]
        p: Vec<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Spin-character decomposition at level 4r.
    Spin {
        #[arg(long, value_delimiter = ',', required = true)]
        genus: Vec<u32>,
        #[arg(long, value_delimiter = ',', required_unless_present = "p", conflicts_with = "p")]
        r: Vec<u64>,
        /// Levels; each must be divisible by 4.
        #[arg(long, value_delimiter = ',', value_parser = level())]
        p: Vec<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Normalized dimensions and nonzero-character shares as r grows.
    Asymptotics {
        #[arg(long, default_value_t = 2)]
        genus: u32,
        #[arg(long, value_delimiter = ',', default_value = "100,200,500")]
        r: Vec<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Every sweep with its defaults.
    All {
        /// Directory receiving one report per sweep.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

/// Result of one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub summary: Vec<String>,
    /// Rendered report in the requested format.
    pub report: String,
}

fn render<J: Serialize, C: CsvRecord>(json: &[J], csv: &[C], format: Format) -> Result<String> {
    if json.is_empty() || csv.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        Format::Json => json_lines(json),
        Format::Csv => csv_text(csv),
    }
}

// ---------------------------------------------------------------- torus

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusRecord {
    pub n: usize,
    pub morphism_defect: f64,
    pub commutation_defect: f64,
    pub hermiticity_defect: f64,
    pub trace_identity_defect: f64,
    /// `(1/N) Tr Op_N(X^N)`; its classical average is 0.
    pub x_pow_n_trace: [f64; 2],
    pub pass: bool,
}

impl CsvRecord for TorusRecord {
    fn header() -> &'static [&'static str] {
        &["N", "morphism_defect", "commutation_defect", "hermiticity_defect", "trace_identity_defect", "x_pow_n_trace_re", "pass"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.morphism_defect.into(),
            self.commutation_defect.into(),
            self.hermiticity_defect.into(),
            self.trace_identity_defect.into(),
            self.x_pow_n_trace[0].into(),
            self.pass.into(),
        ]
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Up to four terms with exponents in `[-k, k]²`.
pub fn random_observable(rng: &mut ChaCha8Rng, k: i64) -> FourierObservable<f64> {
    let terms = rng.gen_range(1..=4);
    FourierObservable::from_terms((0..terms).map(|_| {
        let e = (rng.gen_range(-k..=k), rng.gen_range(-k..=k));
        (e, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }))
}

/// `h + h̄` for a random `h`.
pub fn random_real_observable(rng: &mut ChaCha8Rng, k: i64) -> FourierObservable<f64> {
    let h = random_observable(rng, k);
    let bar = FourierObservable::from_terms(h.terms().map(|((a, b), c)| ((-a, -b), c.conj())));
    &h + &bar
}

pub fn torus_record(n: usize, pairs: usize, seed: u64) -> Result<TorusRecord> {
    let ctx = QuantizationContext::<f64>::new(n)?;
    let mut rng = stream_rng(seed, n as u64);
    let (mut morphism, mut herm, mut trace) = (0.0f64, 0.0f64, 0.0f64);
    let inner = (n as i64 - 1).max(0);
    for _ in 0..pairs {
        let f = random_observable(&mut rng, 5);
        let g = random_observable(&mut rng, 5);
        let lhs = quantize(&ctx, &f.star(&g, ctx.hbar()));
        let rhs = quantize(&ctx, &f).compose(&quantize(&ctx, &g));
        morphism = morphism.max(lhs.distance(&rhs));
        herm = herm.max(quantize(&ctx, &random_real_observable(&mut rng, 5)).hermiticity_defect());
        let h = random_observable(&mut rng, inner);
        trace = trace.max((trace_average(&ctx, &h) - h.classical_average()).norm());
    }
    let x = quantize(&ctx, &FourierObservable::x());
    let y = quantize(&ctx, &FourierObservable::y());
    let commutation = (x.matrix() * y.matrix() - y.matrix() * x.matrix() * (ctx.a() * ctx.a())).norm();
    let xn = trace_average(&ctx, &FourierObservable::monomial(n as i64, 0));
    let pass = morphism <= tol::MORPHISM
        && commutation <= tol::COMMUTATION
        && herm <= tol::HERMITICITY
        && trace <= tol::TRACE_IDENTITY
        && (xn - 1.0).norm() <= tol::TRACE_IDENTITY;
    Ok(TorusRecord {
        n,
        morphism_defect: morphism,
        commutation_defect: commutation,
        hermiticity_defect: herm,
        trace_identity_defect: trace,
        x_pow_n_trace: [xn.re, xn.im],
        pass,
    })
}

fn level_range(n_min: u64, n_max: u64) -> Result<Vec<usize>> {
    if n_min > n_max {
        return Err(Error::Usage(format!("--n-min {n_min} exceeds --n-max {n_max}")));
    }
    Ok((n_min as usize..=n_max as usize).collect())
}

pub fn torus_check(n_min: u64, n_max: u64, pairs: usize, seed: u64, format: Format) -> Result<Outcome> {
    let records = level_range(n_min, n_max)?
        .into_par_iter()
        .map(|n| torus_record(n, pairs, seed))
        .collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&TorusRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let pass = records.iter().all(|r| r.pass);
    let summary = vec![
        format!("levels {n_min}..={n_max}, {pairs} random pairs per level"),
        format!("max morphism defect      {:.3e}", worst(|r| r.morphism_defect)),
        format!("max commutation defect   {:.3e}", worst(|r| r.commutation_defect)),
        format!("max Hermiticity defect   {:.3e}", worst(|r| r.hermiticity_defect)),
        format!("max trace identity gap   {:.3e}", worst(|r| r.trace_identity_defect)),
        format!("torus-check {}", if pass { "PASS" } else { "FAIL" }),
    ];
    Ok(Outcome { name: "torus-check", pass, summary, report: render(&records, &records, format)? })
}

// ---------------------------------------------------------------- weil

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeilRecord {
    pub n: usize,
    pub unitarity_defect: Option<f64>,
    pub projective_defect: Option<f64>,
    pub s4_defect: Option<f64>,
    pub st3_defect: Option<f64>,
    pub egorov_defect: Option<f64>,
    /// Egorov enters the verdict for even `N`; odd `N` is measured only.
    pub egorov_counted: bool,
    pub pass: bool,
}

impl CsvRecord for WeilRecord {
    fn header() -> &'static [&'static str] {
        &["N", "unitarity_defect", "projective_defect", "s4_defect", "st3_defect", "egorov_defect", "egorov_counted", "pass"]
    }
    fn row(&self) -> Vec<Cell> {
        let opt = |x: Option<f64>| x.map_or(Cell::Text(String::new()), Cell::Float);
        vec![
            self.n.into(),
            opt(self.unitarity_defect),
            opt(self.projective_defect),
            opt(self.s4_defect),
            opt(self.st3_defect),
            opt(self.egorov_defect),
            self.egorov_counted.into(),
            self.pass.into(),
        ]
    }
}

/// Random product of generators and `T`-powers with entries bounded by `max_entry`.
pub fn random_sl2(rng: &mut ChaCha8Rng, max_entry: i64) -> SL2Matrix {
    loop {
        let len = rng.gen_range(1..=8);
        let mut letters = Vec::new();
        for _ in 0..len {
            letters.push(if rng.gen::<bool>() { Letter::S } else { Letter::SInv });
            let k: i64 = rng.gen_range(-6..=6);
            let t = if k >= 0 { Letter::T } else { Letter::TInv };
            letters.extend(std::iter::repeat_n(t, k.unsigned_abs() as usize));
        }
        if let Ok(m) = SL2Word::from_letters(letters).evaluate() {
            if m.max_abs_entry() <= max_entry {
                return m;
            }
        }
    }
}

/// `S`, `T`, `ST` and `[[2,1],[1,1]]`.
pub fn egorov_matrices() -> Vec<SL2Matrix> {
    let st = SL2Matrix::s().checked_mul(&SL2Matrix::t()).expect("small");
    vec![SL2Matrix::s(), SL2Matrix::t(), st, SL2Matrix::new(2, 1, 1, 1).expect("det 1")]
}

/// Largest Egorov defect over [`egorov_matrices`] and monomials in `[-3, 3]²`.
pub fn egorov_sweep(n: usize) -> Result<f64> {
    let ctx = QuantizationContext::<f64>::new(n)?;
    let mut worst = 0.0f64;
    for phi in egorov_matrices() {
        let u = rho(&ctx, &phi)?;
        for a in -3..=3 {
            for b in -3..=3 {
                worst = worst.max(egorov_defect_with(&u, &FourierObservable::monomial(a, b)));
            }
        }
    }
    Ok(worst)
}

pub fn weil_record(n: usize, algebra: bool, egorov: bool, pairs: usize, max_entry: i64, seed: u64) -> Result<WeilRecord> {
    let ctx = QuantizationContext::<f64>::new(n)?;
    let mut rec = WeilRecord {
        n,
        unitarity_defect: None,
        projective_defect: None,
        s4_defect: None,
        st3_defect: None,
        egorov_defect: None,
        egorov_counted: egorov && n.is_multiple_of(2),
        pass: true,
    };
    if algebra {
        let mut rng = stream_rng(seed, n as u64);
        let (mut unit, mut proj) = (0.0f64, 0.0f64);
        for _ in 0..pairs {
            let (phi, psi) = (random_sl2(&mut rng, max_entry), random_sl2(&mut rng, max_entry));
            unit = unit.max(rho(&ctx, &phi)?.operator().unitarity_defect());
            proj = proj.max(homomorphism_defect(&ctx, &phi, &psi)?);
        }
        let (s, t) = generators(&ctx)?;
        let s_inv = s.inverse();
        let st3 = (s.matrix() * t.matrix()).pow(3) * s_inv.matrix() * s_inv.matrix();
        rec.unitarity_defect = Some(unit);
        rec.projective_defect = Some(proj);
        rec.s4_defect = Some(scalar_defect(&s.matrix().pow(4)));
        rec.st3_defect = Some(scalar_defect(&st3));
        rec.pass = unit <= tol::UNITARITY
            && proj <= tol::PROJECTIVE
            && rec.s4_defect <= Some(tol::RELATIONS)
            && rec.st3_defect <= Some(tol::RELATIONS);
    }
    if egorov {
        let d = egorov_sweep(n)?;
        rec.egorov_defect = Some(d);
        if rec.egorov_counted {
            rec.pass &= d <= tol::EGOROV;
        }
    }
    Ok(rec)
}

pub fn weil_check(
    n_min: u64,
    n_max: u64,
    egorov_n_max: u64,
    pairs: usize,
    max_entry: i64,
    seed: u64,
    format: Format,
) -> Result<Outcome> {
    if n_min < 2 {
        return Err(Error::Usage("the Weil representation needs N >= 2".into()));
    }
    let top = n_max.max(egorov_n_max);
    let records = level_range(n_min, top)?
        .into_par_iter()
        .map(|n| weil_record(n, n as u64 <= n_max, n as u64 <= egorov_n_max, pairs, max_entry, seed))
        .collect::<Result<Vec<_>>>()?;
    let worst = |f: fn(&WeilRecord) -> Option<f64>| records.iter().filter_map(f).fold(0.0, f64::max);
    let odd_egorov = records.iter().filter(|r| !r.egorov_counted).filter_map(|r| r.egorov_defect).fold(0.0, f64::max);
    let even_egorov = records.iter().filter(|r| r.egorov_counted).filter_map(|r| r.egorov_defect).fold(0.0, f64::max);
    let pass = records.iter().all(|r| r.pass);
    let summary = vec![
        format!("algebra levels {n_min}..={n_max}, Egorov levels {n_min}..={egorov_n_max}, {pairs} pairs, entries <= {max_entry}"),
        format!("max unitarity defect     {:.3e}", worst(|r| r.unitarity_defect)),
        format!("max projective defect    {:.3e}", worst(|r| r.projective_defect)),
        format!("max S^4 scalar defect    {:.3e}", worst(|r| r.s4_defect)),
        format!("max (ST)^3 S^-2 defect   {:.3e}", worst(|r| r.st3_defect)),
        format!("max Egorov defect, even  {even_egorov:.3e}"),
        format!("max Egorov defect, odd   {odd_egorov:.3e} (measured)"),
        format!("weil-check {}", if pass { "PASS" } else { "FAIL" }),
    ];
    Ok(Outcome { name: "weil-check", pass, summary, report: render(&records, &records, format)? })
}

// ---------------------------------------------------------------- catmap

impl CsvRecord for ErgodicityRecord {
    fn header() -> &'static [&'static str] {
        &["N", "fraction", "barycenter_distance", "n_outliers"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.weighted_fraction_within_eps.into(),
            self.barycenter_distance.into(),
            self.outliers.len().into(),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct CatmapArgs {
    pub matrix: SL2Matrix,
    pub levels: Vec<usize>,
    pub eps: f64,
    pub family_size: usize,
    pub cluster_tol: f64,
    pub scar_threshold: Option<f64>,
    pub dim_ceiling: f64,
}

pub fn catmap(args: &CatmapArgs, format: Format) -> Result<Outcome> {
    if !args.matrix.is_anosov() {
        return Err(Error::Usage(format!("{} is not Anosov (|trace| must exceed 2)", args.matrix)));
    }
    if args.levels.is_empty() {
        return Err(Error::Usage("no levels selected".into()));
    }
    if args.levels.iter().any(|&n| n < 2) {
        return Err(Error::Usage("cat maps need N >= 2".into()));
    }
    let family = Arc::new(default_test_family(args.family_size).map_err(|e| Error::Usage(e.to_string()))?);
    let cfg = ExperimentConfig { eps: args.eps, cluster_tol: args.cluster_tol };
    let records = ergodicity_report_with(&args.matrix, &args.levels, &family, &cfg)?;
    // The identity is exact below the family degree only through the trace; the
    // barycenter identity itself holds at every level.
    let pass = records.iter().all(|r| r.barycenter_identity_defect <= tol::BARYCENTER);
    let mut summary = vec![format!(
        "phi = {}, eps = {}, n_max = {}, {} levels",
        args.matrix,
        args.eps,
        args.family_size,
        records.len()
    )];
    for r in &records {
        summary.push(format!(
            "N = {:4}  fraction {:.6}  barycenter distance {:.3e}  outliers {}",
            r.n,
            r.weighted_fraction_within_eps,
            r.barycenter_distance,
            r.outliers.len()
        ));
    }
    let violations = dimension_ceiling_violations(&records, args.dim_ceiling, 0);
    summary.push(format!("outlier blocks above dimension share {}: {}", args.dim_ceiling, violations.len()));
    if let Some(th) = args.scar_threshold {
        let scars = scar_outliers(&records, th);
        summary.push(format!("blocks farther than {th}: {}", scars.len()));
        for s in scars.iter().take(5) {
            summary.push(format!("  N = {} block {} dim {} distance {:.6}", s.n, s.block, s.dimension, s.distance));
        }
    }
    summary.push(format!("catmap {}", if pass { "PASS" } else { "FAIL" }));
    Ok(Outcome { name: "catmap", pass, summary, report: render(&records, &records, format)? })
}

// ---------------------------------------------------------------- convex

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexRow {
    pub kind: &'static str,
    pub index: usize,
    pub eps: f64,
    pub delta: f64,
    pub bound: Option<f64>,
    pub distance: f64,
    pub weight: f64,
    pub ok: bool,
}

impl CsvRecord for ConvexRow {
    fn header() -> &'static [&'static str] {
        &["kind", "index", "eps", "delta", "bound", "distance", "weight", "ok"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![
            self.kind.into(),
            self.index.into(),
            self.eps.into(),
            self.delta.into(),
            self.bound.map_or(Cell::Text(String::new()), Cell::Float),
            self.distance.into(),
            self.weight.into(),
            self.ok.into(),
        ]
    }
}

pub fn convex(trials: usize, seed: u64, r_max: usize, simplex_dim: usize, format: Format) -> Result<Outcome> {
    if r_max < 2 || simplex_dim == 0 {
        return Err(Error::Usage("need --r-max >= 2 and --simplex-dim >= 1".into()));
    }
    let cfg = LemmaTrialConfig { trials, seed, ..LemmaTrialConfig::default() };
    let lemma = lemma_trials(&cfg)?;
    let schedule = concentration_schedule(simplex_dim, r_max)?;
    let mut rows: Vec<ConvexRow> = lemma
        .outcomes
        .iter()
        .map(|o| ConvexRow {
            kind: "lemma",
            index: o.trial,
            eps: o.eps,
            delta: o.delta,
            bound: o.bound,
            distance: o.barycenter_distance,
            weight: o.concentrated_weight,
            ok: o.holds,
        })
        .collect();
    rows.extend(schedule.iter().map(|s| ConvexRow {
        kind: "schedule",
        index: s.r,
        eps: s.eps,
        delta: s.delta,
        bound: Some(s.bound),
        distance: s.barycenter_distance,
        weight: s.weight,
        ok: s.barycenter_distance <= s.bound,
    }));
    let last = schedule.last().expect("r_max >= 2");
    let pass = lemma.counterexamples == 0 && last.weight >= tol::SCHEDULE_TERMINAL;
    let summary = vec![
        format!(
            "lemma trials: {} run, {} exposed, {} met the hypothesis, {} counterexamples",
            lemma.trials, lemma.exposed, lemma.hypothesis_met, lemma.counterexamples
        ),
        format!("schedule: r = 2..={r_max}, terminal N = {}, ||J_N|| = {:.6}", last.n, last.weight),
        format!("convex {}", if pass { "PASS" } else { "FAIL" }),
    ];
    Ok(Outcome { name: "convex", pass, summary, report: render(&rows, &rows, format)? })
}

// ---------------------------------------------------------------- dimensions

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerlindeRow {
    pub genus: u32,
    pub p: u64,
    pub dimension: u128,
}

impl CsvRecord for VerlindeRow {
    fn header() -> &'static [&'static str] {
        &["genus", "p", "dimension"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![self.genus.into(), self.p.into(), self.dimension.into()]
    }
}

fn dimension_error(e: Error) -> Error {
    match e {
        Error::OutOfRange(msg) => Error::Usage(msg),
        other => other,
    }
}

pub fn verlinde(genus: &[u32], p: &[u64], format: Format) -> Result<Outcome> {
    let mut rows = Vec::new();
    for &g in genus {
        for &p in p {
            rows.push(VerlindeRow { genus: g, p, dimension: verlinde_dim(g, p).map_err(dimension_error)? });
        }
    }
    let summary = if rows.len() == 1 {
        vec![rows[0].dimension.to_string()]
    } else {
        rows.iter().map(|r| format!("genus {} p {}: {}", r.genus, r.p, r.dimension)).collect()
    };
    Ok(Outcome { name: "verlinde", pass: true, summary, report: render(&rows, &rows, format)? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpinRow {
    pub genus: u32,
    pub r: u64,
    pub n: u64,
    pub character_class: &'static str,
    pub multiplicity: u128,
    pub dimension: u128,
}

impl CsvRecord for SpinRow {
    fn header() -> &'static [&'static str] {
        &["genus", "r", "N", "character_class", "multiplicity", "dimension"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![
            self.genus.into(),
            self.r.into(),
            self.n.into(),
            self.character_class.into(),
            self.multiplicity.into(),
            self.dimension.into(),
        ]
    }
}

pub fn spin(genus: &[u32], r: &[u64], p: &[u64], format: Format) -> Result<Outcome> {
    let mut tables: Vec<SpinDimensionTable> = Vec::new();
    for &g in genus {
        if p.is_empty() {
            for &r in r {
                tables.push(spin_dimension_table(g, r).map_err(dimension_error)?);
            }
        } else {
            for &p in p {
                tables.push(spin_dimension_table_for_level(g, p).map_err(|e| match e {
                    Error::LevelNotDivisibleByFour(p) => {
                        Error::Usage(format!("the spin decomposition needs 4 | N, got --p {p}"))
                    }
                    other => dimension_error(other),
                })?);
            }
        }
    }
    let rows: Vec<SpinRow> = tables
        .iter()
        .flat_map(|t| {
            t.entries.iter().map(move |e| SpinRow {
                genus: t.genus,
                r: t.r,
                n: t.n,
                character_class: e.label,
                multiplicity: e.multiplicity,
                dimension: e.dimension,
            })
        })
        .collect();
    let pass = tables.iter().all(|t| t.partition_ok);
    let mut summary = Vec::new();
    for t in &tables {
        summary.push(format!("genus {} r {} (N = {}): total {}, partition_ok={}", t.genus, t.r, t.n, t.total, t.partition_ok));
        for e in &t.entries {
            summary.push(format!("  {} x{} -> {}", e.label, e.multiplicity, e.dimension));
        }
    }
    Ok(Outcome { name: "spin", pass, summary, report: render(&tables, &rows, format)? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticsRow {
    pub genus: u32,
    #[serde(flatten)]
    pub row: AsymptoticRow,
}

impl CsvRecord for AsymptoticsRow {
    fn header() -> &'static [&'static str] {
        &["genus", "r", "total", "estimate", "ratio"]
    }
    fn row(&self) -> Vec<Cell> {
        vec![self.genus.into(), self.row.r.into(), self.row.total.into(), self.row.estimate.into(), self.row.ratio.into()]
    }
}

pub fn asymptotics(genus: u32, r: &[u64], format: Format) -> Result<Outcome> {
    let rows: Vec<AsymptoticsRow> = asymptotic_volume_estimate(genus, r)
        .map_err(dimension_error)?
        .into_iter()
        .map(|row| AsymptoticsRow { genus, row })
        .collect();
    let target = 0.25f64.powi(genus as i32);
    let mut summary: Vec<String> = rows
        .iter()
        .map(|a| format!("r = {:5}  estimate {:.9}  ratio {:.9}", a.row.r, a.row.estimate, a.row.ratio))
        .collect();
    summary.push(format!("limit of the ratio: 4^-{genus} = {target}"));
    Ok(Outcome { name: "asymptotics", pass: true, summary, report: render(&rows, &rows, format)? })
}

// ---------------------------------------------------------------- dispatch

fn catmap_levels(n_min: u64, n_max: u64, all_levels: bool, levels: &[u64]) -> Result<Vec<usize>> {
    if !levels.is_empty() {
        return Ok(levels.iter().map(|&n| n as usize).collect());
    }
    let range = level_range(n_min, n_max)?;
    Ok(if all_levels { range } else { primes_in(n_min as usize, n_max as usize) })
}

/// Runs a non-`all` command.
pub fn run_command(command: &Command) -> Result<(Outcome, Option<PathBuf>)> {
    Ok(match command {
        Command::TorusCheck { n_min, n_max, pairs, seed, out } => {
            (torus_check(*n_min, *n_max, *pairs, *seed, out.format)?, out.output.clone())
        }
        Command::WeilCheck { n_min, n_max, egorov_n_max, pairs, max_entry, seed, out } => {
            (weil_check(*n_min, *n_max, *egorov_n_max, *pairs, *max_entry, *seed, out.format)?, out.output.clone())
        }
        Command::Catmap {
            matrix,
            n_min,
            n_max,
            all_levels,
            levels,
            eps,
            family_size,
            cluster_tol,
            scar_threshold,
            dim_ceiling,
            out,
        } => {
            let args = CatmapArgs {
                matrix: *matrix,
                levels: catmap_levels(*n_min, *n_max, *all_levels, levels)?,
                eps: *eps,
                family_size: *family_size,
                cluster_tol: *cluster_tol,
                scar_threshold: *scar_threshold,
                dim_ceiling: *dim_ceiling,
            };
            (catmap(&args, out.format)?, out.output.clone())
        }
        Command::Convex { trials, seed, r_max, simplex_dim, out } => {
            (convex(*trials, *seed, *r_max, *simplex_dim, out.format)?, out.output.clone())
        }
        Command::Verlinde { genus, p, out } => (verlinde(genus, p, out.format)?, out.output.clone()),
        Command::Spin { genus, r, p, out } => (spin(genus, r, p, out.format)?, out.output.clone()),
        Command::Asymptotics { genus, r, out } => (asymptotics(*genus, r, out.format)?, out.output.clone()),
        Command::All { .. } => return Err(Error::Usage("`all` is dispatched by run_all".into())),
    })
}

/// The default suite: every sweep at its default parameters, cat maps over
/// the primes in `[11, 41]` and `[150, 250]`.
pub fn run_all(seed: u64, format: Format) -> Result<Vec<Outcome>> {
    let mut levels = primes_in(11, 41);
    levels.extend(primes_in(150, 250));
    let cat = CatmapArgs {
        matrix: SL2Matrix::new(2, 1, 1, 1).expect("det 1"),
        levels,
        eps: 0.3,
        family_size: 25,
        cluster_tol: DEFAULT_CLUSTER_TOL,
        scar_threshold: None,
        dim_ceiling: 0.1,
    };
    let genus: Vec<u32> = (0..=6).collect();
    let p: Vec<u64> = (3..=60).collect();
    let spin_r: Vec<u64> = (2..=25).collect();
    Ok(vec![
        torus_check(3, 40, 100, seed, format)?,
        weil_check(4, 32, 64, 50, 50, seed, format)?,
        catmap(&cat, format)?,
        convex(1000, seed, 100, 3, format)?,
        verlinde(&genus, &p, format)?,
        spin(&[1, 2, 3, 4, 5], &spin_r, &[], format)?,
        asymptotics(2, &[100, 200, 500], format)?,
    ])
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Json => "jsonl",
        Format::Csv => "csv",
    }
}

/// Caps the global thread pool from `ERGOLAB_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // A second initialization (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Process exit code for an error: 2 for usage problems, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::LevelNotDivisibleByFour(_) => 2,
        _ => 1,
    }
}

/// Executes the parsed command line; returns the exit code.
pub fn run(cli: &Cli) -> u8 {
    let result = (|| -> Result<bool> {
        init_threads()?;
        match &cli.command {
            Command::All { output_dir, format, seed } => {
                let outcomes = run_all(*seed, *format)?;
                for o in &outcomes {
                    for line in &o.summary {
                        println!("{line}");
                    }
                    if let Some(dir) = output_dir {
                        write_atomic(&dir.join(format!("{}.{}", o.name, extension(*format))), &o.report)?;
                    }
                }
                Ok(outcomes.iter().all(|o| o.pass))
            }
            other => {
                let (outcome, path) = run_command(other)?;
                for line in &outcome.summary {
                    println!("{line}");
                }
                if let Some(path) = path {
                    write_atomic(&path, &outcome.report)?;
                }
                Ok(outcome.pass)
            }
        }
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("ergolab: {e}");
            exit_code(&e)
        }
    }
}

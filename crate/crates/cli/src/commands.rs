use std::fmt::{self, Display, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermoflat::linearizer::{nonlinear_pressure_of, solve_flat, solve_game};
use thermoflat::measures::{entropy_rate, MixtureMeasure};
use thermoflat::model_file::{to_json, ModelFile};
use thermoflat::oracle::{bkl_pressure, direct_pressure};
use thermoflat::ruelle::{entropy_of_gibbs, rpf};
use thermoflat::tolerances::Tolerances;
use thermoflat::transport::{
    affine_pressure_flat, affine_pressure_sharp, birkhoff_sampling, canonical_pair, delta_functional,
    delta_via_birkhoff, histogram, kantorovich_dual_check, kantorovich_primal, order_parameter_distribution,
    BirkhoffSamples, DualReport, TransportPlan,
};
use thermoflat::{DiscreteDualMeasure, Error, GameSolution, ModelSpec, RpfData, SolverConfig};

pub const REPORT_SCHEMA: &str = "thermoflat-report/1";

/// A failed command with its exit code: 2 for bad input, 3 for solver
/// failures.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Solver(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Solver(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidConvex(_)
            | Error::EmptyGrid
            | Error::InvalidAlphabet(_)
            | Error::InvalidPotential(_)
            | Error::InvalidMeasure(_)
            | Error::AlphabetMismatch(..)
            | Error::InvalidModel(_)
            | Error::ResolutionTooCoarse(_)
            | Error::NonErgodicComponent => Failure::Validation(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub sc_tol: Option<f64>,
    pub grid: Option<usize>,
    pub multistart: Option<usize>,
    pub seed: Option<u64>,
    pub radius_plus: Option<f64>,
    pub radius_minus: Option<f64>,
}

/// Reads a model file; command-line flags override its `config`.
pub fn load(path: &Path, o: &Overrides) -> Result<(ModelFile, SolverConfig), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let file = ModelFile::parse(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let mut config = file.config();
    config.tol = o.tol.unwrap_or(config.tol);
    config.sc_tol = o.sc_tol.unwrap_or(config.sc_tol);
    config.grid = o.grid.unwrap_or(config.grid);
    config.multistart = o.multistart.unwrap_or(config.multistart);
    config.seed = o.seed.unwrap_or(config.seed);
    config.radius_plus = o.radius_plus.or(config.radius_plus);
    config.radius_minus = o.radius_minus.or(config.radius_minus);
    config.validate()?;
    Ok((file, config))
}

/// Writes the report to `out` (plus `<out>.<suffix>` side files) or to
/// stdout.
pub fn emit<T: Serialize>(report: &T, out: Option<&Path>, side: &[(&str, String)]) -> Result<(), Failure> {
    let text = to_json(report)?;
    match out {
        None => print!("{text}"),
        Some(path) => {
            let write =
                |p: &Path, s: &str| fs::write(p, s).map_err(|e| Failure::Solver(format!("{}: {e}", p.display())));
            write(path, &text)?;
            for (suffix, body) in side {
                let mut name = path.as_os_str().to_owned();
                name.push(format!(".{suffix}"));
                write(&PathBuf::from(name), body)?;
            }
        }
    }
    Ok(())
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub command: String,
    pub label: String,
    pub config: SolverConfig,
    pub tolerances: Tolerances,
}

fn header(command: &str, file: &ModelFile, config: &SolverConfig) -> Header {
    Header {
        schema: REPORT_SCHEMA.into(),
        command: command.into(),
        label: file.label.clone(),
        config: config.clone(),
        tolerances: Tolerances::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialPressure {
    pub name: String,
    pub memory: usize,
    pub p_l: f64,
    /// `log λ − μ(f)` and the entropy rate of the Gibbs chain.
    pub entropy_of_gibbs: f64,
    pub entropy_rate: f64,
    pub rpf: RpfData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureReport {
    pub header: Header,
    pub potentials: Vec<PotentialPressure>,
}

pub fn pressure(file: &ModelFile, config: &SolverConfig) -> Result<PressureReport, Failure> {
    let potentials = file
        .all_potentials()?
        .into_iter()
        .map(|phi| {
            let data = rpf(&phi, &file.alphabet)?;
            Ok(PotentialPressure {
                name: phi.name.clone().unwrap_or_default(),
                memory: phi.memory(),
                p_l: data.log_lambda,
                entropy_of_gibbs: entropy_of_gibbs(&data, &phi)?,
                entropy_rate: entropy_rate(&data.gibbs, &file.alphabet)?,
                rpf: data,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(PressureReport { header: header("pressure", file, config), potentials })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub header: Header,
    pub solution: GameSolution,
}

pub fn solve(file: &ModelFile, config: &SolverConfig, both_sides: bool) -> Result<SolveReport, Failure> {
    let model = file.model()?;
    let solution = if both_sides { solve_game(&model, config)? } else { solve_flat(&model, config)? };
    let command = if both_sides { "game" } else { "solve" };
    Ok(SolveReport { header: header(command, file, config), solution })
}

/// `(y₊, P♭(y₊))` rows of the outer scan.
pub fn scan_csv(solution: &GameSolution) -> String {
    let dim = solution.scan.first().map_or(0, |(y, _)| y.len());
    let mut out = String::new();
    let cols: Vec<String> = (1..=dim).map(|i| format!("y_plus_{i}")).collect();
    let _ = writeln!(out, "{},p_flat", cols.join(","));
    for (y, v) in &solution.scan {
        let row: Vec<String> = y.iter().chain(std::iter::once(v)).map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub header: Header,
    /// `"equilibria"` (uniform weights over the admitted equilibria) or
    /// `"explicit"`.
    pub source: String,
    pub p_flat: Option<f64>,
    pub y_plus: DiscreteDualMeasure,
    pub y_minus: DiscreteDualMeasure,
    pub plan: TransportPlan,
    pub canonical_dual: Option<DualReport>,
}

fn uniform(points: Vec<Vec<f64>>) -> Result<DiscreteDualMeasure, Error> {
    let w = 1.0 / points.len() as f64;
    DiscreteDualMeasure::from_atoms(points.into_iter().map(|p| (p, w)).collect(), 0.0)
}

pub fn transport(
    file: &ModelFile,
    config: &SolverConfig,
    explicit: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
) -> Result<TransportReport, Failure> {
    let model = file.model()?;
    if let Some((yp, ym)) = explicit {
        let (yp, ym) = (uniform(yp)?, uniform(ym)?);
        let plan = kantorovich_primal(&model, &yp, &ym)?;
        return Ok(TransportReport {
            header: header("transport", file, config),
            source: "explicit".into(),
            p_flat: None,
            y_plus: yp,
            y_minus: ym,
            plan,
            canonical_dual: None,
        });
    }
    let solution = solve_flat(&model, config)?;
    let weights = vec![1.0 / solution.equilibria.len() as f64; solution.equilibria.len()];
    let (yp, ym) = order_parameter_distribution(&model, &solution.equilibria, &weights)?;
    let plan = kantorovich_primal(&model, &yp, &ym)?;
    let (pp, pm) = canonical_pair(&model, config, &yp, &ym)?;
    let dual = kantorovich_dual_check(&model, &yp, &ym, &pp, &pm)?;
    Ok(TransportReport {
        header: header("transport", file, config),
        source: "equilibria".into(),
        p_flat: Some(solution.p_flat),
        y_plus: yp,
        y_minus: ym,
        plan,
        canonical_dual: Some(dual),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffRow {
    pub n: usize,
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSummary {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean_plus: Vec<f64>,
    pub variance_plus: Vec<f64>,
    pub mean_minus: Vec<f64>,
    pub variance_minus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub header: Header,
    /// `"file"` or `"equilibria"` (uniform mixture of the equilibria).
    pub source: String,
    pub mixture: MixtureMeasure,
    pub delta_plus: Option<f64>,
    pub delta_minus: Option<f64>,
    pub affine_flat: f64,
    pub affine_sharp: f64,
    /// Nonlinear pressure functional of each component.
    pub component_values: Vec<f64>,
    pub birkhoff: Vec<BirkhoffRow>,
    pub sampling: Option<SamplingSummary>,
}

fn moments(values: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = values.first().map_or(0, Vec::len);
    (0..dim).map(|c| BirkhoffSamples::moments(values, c)).unzip()
}

fn histogram_csv(samples: &BirkhoffSamples, bins: usize) -> String {
    let mut out = String::from("side,coordinate,center,count\n");
    for (side, values) in [("plus", &samples.plus), ("minus", &samples.minus)] {
        let dim = values.first().map_or(0, Vec::len);
        for c in 0..dim {
            let column: Vec<f64> = values.iter().map(|v| v[c]).collect();
            for (center, count) in histogram(&column, bins) {
                let _ = writeln!(out, "{side},{},{center:.16e},{count}", c + 1);
            }
        }
    }
    out
}

pub fn delta(
    file: &ModelFile,
    config: &SolverConfig,
    max_n: usize,
    samples: usize,
    length: usize,
    bins: usize,
) -> Result<(DeltaReport, Option<String>), Failure> {
    let model = file.model()?;
    let (source, mixture) = match &file.mixture {
        Some(m) => ("file", m.clone()),
        None => {
            let s = solve_flat(&model, config)?;
            let w = 1.0 / s.equilibria.len() as f64;
            let parts = s.equilibria.into_iter().map(|e| (w, e.measure)).collect();
            ("equilibria", MixtureMeasure::ergodic(parts)?)
        }
    };
    if mixture.k() != model.k() {
        return Err(Failure::Validation(format!("mixture has {} symbols, model {}", mixture.k(), model.k())));
    }
    let side = |g: &Option<thermoflat::ConvexSpec>, pots| g.as_ref().map(|g| delta_functional(g, pots, &mixture));
    let delta_plus = side(&model.g_plus, &model.plus).transpose()?;
    let delta_minus = side(&model.g_minus, &model.minus).transpose()?;
    let component_values = mixture
        .components()
        .iter()
        .map(|c| nonlinear_pressure_of(&model, &c.measure).map(|v| v.to_f64()))
        .collect::<Result<Vec<_>, Error>>()?;

    let mut birkhoff = Vec::new();
    for n in 1..=max_n {
        let row = |g: &Option<thermoflat::ConvexSpec>, pots| {
            g.as_ref().map(|g| delta_via_birkhoff(g, pots, &mixture, n)).transpose()
        };
        match (row(&model.g_plus, &model.plus), row(&model.g_minus, &model.minus)) {
            (Ok(plus), Ok(minus)) => birkhoff.push(BirkhoffRow { n, plus, minus }),
            (Err(Error::EnumerationCap(_)), _) | (_, Err(Error::EnumerationCap(_))) => break,
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        }
    }

    let (sampling, hist) = if samples > 0 {
        let mu = &mixture.components()[0].measure;
        let s = birkhoff_sampling(&model, mu, length, samples, config.seed)?;
        let (mean_plus, variance_plus) = moments(&s.plus);
        let (mean_minus, variance_minus) = moments(&s.minus);
        let hist = histogram_csv(&s, bins);
        let summary = SamplingSummary {
            n: length,
            samples,
            seed: config.seed,
            mean_plus,
            variance_plus,
            mean_minus,
            variance_minus,
        };
        (Some(summary), Some(hist))
    } else {
        (None, None)
    };

    let report = DeltaReport {
        header: header("delta", file, config),
        source: source.into(),
        affine_flat: affine_pressure_flat(&model, &mixture)?,
        affine_sharp: affine_pressure_sharp(&model, &mixture)?,
        mixture,
        delta_plus,
        delta_minus,
        component_values,
        birkhoff,
        sampling,
    };
    Ok((report, hist))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub header: Header,
    pub p_flat: f64,
    pub direct: f64,
    pub direct_argmax: Vec<f64>,
    pub bkl: Option<f64>,
    /// Why the entropy-function route was skipped, if it was.
    pub bkl_skipped: Option<String>,
    pub max_abs_diff: f64,
}

fn oracle_record(
    file: &ModelFile,
    config: &SolverConfig,
    model: &ModelSpec,
    p_flat: f64,
    resolution: usize,
    z_grid: usize,
) -> Result<OracleReport, Failure> {
    let direct = direct_pressure(model, resolution)?;
    let (bkl, bkl_skipped) = match bkl_pressure(model, z_grid) {
        Ok(b) => (Some(b.value), None),
        Err(e @ Error::InvalidModel(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let max_abs_diff = bkl.iter().map(|b| (b - p_flat).abs()).fold((direct.value - p_flat).abs(), f64::max);
    Ok(OracleReport {
        header: header("oracle", file, config),
        p_flat,
        direct: direct.value,
        direct_argmax: direct.argmax.stationary().to_vec(),
        bkl,
        bkl_skipped,
        max_abs_diff,
    })
}

pub fn oracle(
    file: &ModelFile,
    config: &SolverConfig,
    resolution: usize,
    z_grid: usize,
) -> Result<OracleReport, Failure> {
    let model = file.model()?;
    let p_flat = solve_flat(&model, config)?.p_flat;
    oracle_record(file, config, &model, p_flat, resolution, z_grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullReport {
    pub header: Header,
    pub pressure: PressureReport,
    pub game: SolveReport,
    pub transport: Option<TransportReport>,
    pub oracle: OracleReport,
}

pub fn full_report(
    file: &ModelFile,
    config: &SolverConfig,
    resolution: usize,
    z_grid: usize,
) -> Result<FullReport, Failure> {
    let model = file.model()?;
    let game = solve(file, config, true)?;
    let differentiable = [&model.g_plus, &model.g_minus].into_iter().flatten().all(|g| g.is_differentiable());
    let transport = if differentiable { Some(transport(file, config, None)?) } else { None };
    let oracle = oracle_record(file, config, &model, game.solution.p_flat, resolution, z_grid)?;
    Ok(FullReport {
        header: header("report", file, config),
        pressure: pressure(file, config)?,
        game,
        transport,
        oracle,
    })
}

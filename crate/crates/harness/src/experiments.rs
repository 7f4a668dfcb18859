//! The seven experiment pipelines. Each produces long-format rows, optional
//! charts and the pass/fail checks its tolerances configure.

use rayon::prelude::*;
use scramblenet_core::circuit::{
    build_brickwall, build_brickwall_haar, layer_pairs, BrickWallCircuit, InitMode, SubsystemPartition,
};
use scramblenet_core::gradient::{
    for_all_params, grad_cost, grad_cost_av, grad_l_scram, grad_op, grad_otoc, grad_true_error, landscape_scan,
    GradientReport, StateProbe,
};
use scramblenet_core::linalg::{kron, DenseOperator};
use scramblenet_core::loss::{
    cost_av, grad_width_scrambled, l_floor, l_scram, loss_width_scrambled, product_input,
    true_error_analytic, ErrorBundle, LevyBundle,
};
use scramblenet_core::randmat::{
    ginibre, haar_state, haar_unitary, twirl_mc, twirl_one_closed, twirl_state_power, twirl_two_closed, SeededRng,
    TwirlEstimate,
};
use scramblenet_core::scrambling::{otoc, otoc_scram};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::svg::{LineChart, Series};
use crate::table::{mean_stderr, ResultTable, Row, SeedTag};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    pub charts: Vec<(String, LineChart)>,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Row template for one partition.
#[derive(Clone, Copy)]
struct Rows {
    n: usize,
    n_a: usize,
    n_d: usize,
}

impl Rows {
    fn of(part: &SubsystemPartition) -> Self {
        Rows {
            n: part.n_total,
            n_a: part.n_a,
            n_d: part.n_d,
        }
    }

    fn row(&self, seed: SeedTag, depth: Option<usize>, x: Option<f64>, quantity: &str, value: f64, stderr: Option<f64>) -> Row {
        Row {
            seed,
            n_qubits: self.n,
            n_a: self.n_a,
            n_d: self.n_d,
            depth,
            x,
            quantity: quantity.to_string(),
            value,
            stderr,
        }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::OtocDepth => otoc_depth(cfg),
        ExperimentKind::ErrorBounds => error_bounds(cfg),
        ExperimentKind::Landscape => landscape(cfg),
        ExperimentKind::LscramSweep => lscram_sweep(cfg),
        ExperimentKind::Levy => levy(cfg),
        ExperimentKind::TwirlOracle => twirl_oracle(cfg),
        ExperimentKind::GradientAudit => gradient_audit(cfg),
    }
}

pub fn build_circuit(n: usize, depth: usize, seed: u64, init: InitMode) -> Result<BrickWallCircuit> {
    let mut rng = SeededRng::new(seed);
    Ok(match init {
        InitMode::Generator => build_brickwall(n, depth, &mut rng)?,
        InitMode::HaarGate => build_brickwall_haar(n, depth, &mut rng)?,
    })
}

/// `out[s][k] = f(U_{depths[k]})` for the circuit grown from `seeds[s]`.
/// Circuits are grown once to the largest depth and read off by prefix.
pub fn depth_profile<T, F>(n: usize, depths: &[usize], seeds: &[u64], init: InitMode, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&DenseOperator) -> scramblenet_core::Result<T> + Sync,
{
    let max = depths.iter().copied().max().unwrap_or(0);
    seeds
        .par_iter()
        .map(|&s| {
            let c = build_circuit(n, max, s, init)?;
            let prefixes = c.prefix_unitaries();
            depths
                .iter()
                .map(|&d| f(&prefixes[d]).map_err(HarnessError::from))
                .collect::<Result<Vec<T>>>()
        })
        .collect()
}

/// Column `k` of a per-seed profile.
pub fn column(values: &[Vec<f64>], k: usize) -> Vec<f64> {
    values.iter().map(|v| v[k]).collect()
}

/// True when no gate path connects A to D within `depth` layers, so the
/// OTOC is exactly 1.
pub fn light_cone_misses_d(part: &SubsystemPartition, depth: usize) -> bool {
    let mut reached = vec![false; part.n_total];
    for q in part.a_qubits() {
        reached[q] = true;
    }
    for layer in 1..=depth {
        for (a, b) in layer_pairs(part.n_total, layer) {
            if reached[a] || reached[b] {
                reached[a] = true;
                reached[b] = true;
            }
        }
    }
    part.d_qubits().into_iter().all(|q| !reached[q])
}

fn mean_series(label: &str, depths: &[usize], values: &[Vec<f64>], band: bool) -> Series {
    let stats: Vec<(f64, f64)> = (0..depths.len()).map(|k| mean_stderr(&column(values, k))).collect();
    Series {
        label: label.into(),
        points: depths.iter().zip(&stats).map(|(&d, &(m, _))| (d as f64, m)).collect(),
        band: if band {
            depths.iter().zip(&stats).map(|(&d, &(m, s))| (d as f64, m - s, m + s)).collect()
        } else {
            Vec::new()
        },
        dashed: false,
    }
}

fn flat_series(label: &str, xs: &[f64], y: f64) -> Series {
    Series {
        label: label.into(),
        points: xs.iter().map(|&x| (x, y)).collect(),
        dashed: true,
        ..Default::default()
    }
}

fn push_profile(out: &mut ResultTable, rows: Rows, seeds: &[u64], depths: &[usize], quantity: &str, values: &[Vec<f64>]) {
    for (s, seed) in seeds.iter().enumerate() {
        for (k, &d) in depths.iter().enumerate() {
            out.push(rows.row(SeedTag::One(*seed), Some(d), None, quantity, values[s][k], None));
        }
    }
    for (k, &d) in depths.iter().enumerate() {
        let (m, se) = mean_stderr(&column(values, k));
        out.push(rows.row(SeedTag::All, Some(d), None, quantity, m, Some(se)));
    }
}

fn otoc_depth(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let part = SubsystemPartition::new(cfg.n_qubits, cfg.n_a, cfg.n_d)?;
    let rows = Rows::of(&part);
    let scram = otoc_scram(&part);
    let values = depth_profile(cfg.n_qubits, &cfg.depths, &cfg.seeds, cfg.init_mode, |u| Ok(otoc(u, &part)?.value))?;
    let mut out = ExperimentOutput::default();
    push_profile(&mut out.table, rows, &cfg.seeds, &cfg.depths, "otoc", &values);
    out.table.push(rows.row(SeedTag::All, None, None, "otoc_scram", scram, None));

    let early_abs = cfg.tolerance("early_abs");
    let early: Vec<usize> = (0..cfg.depths.len()).filter(|&k| light_cone_misses_d(&part, cfg.depths[k])).collect();
    if !early.is_empty() {
        let worst = early
            .iter()
            .flat_map(|&k| column(&values, k))
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        let listed: Vec<usize> = early.iter().map(|&k| cfg.depths[k]).collect();
        out.checks.push(Check::new(
            "otoc_unity_before_light_cone",
            worst <= early_abs,
            format!("max |OTOC-1| = {worst:.3e} at depths {listed:?} (tol {early_abs:.1e})"),
        ));
    }
    let floor_rel = cfg.tolerance("floor_rel");
    let min_depth = cfg.tolerance("floor_min_depth");
    let late: Vec<usize> = (0..cfg.depths.len()).filter(|&k| cfg.depths[k] as f64 >= min_depth).collect();
    if !late.is_empty() {
        let worst = late
            .iter()
            .map(|&k| (mean_stderr(&column(&values, k)).0 - scram).abs() / scram)
            .fold(0.0, f64::max);
        out.checks.push(Check::new(
            "otoc_reaches_floor",
            worst <= floor_rel,
            format!("max relative deviation of seed-mean from {scram:.6} at depth >= {min_depth} is {worst:.4} (tol {floor_rel})"),
        ));
    }
    let xs: Vec<f64> = cfg.depths.iter().map(|&d| d as f64).collect();
    let chart = LineChart::new(
        &format!("Averaged OTOC vs depth, N={}, N_A={}, N_D={}", cfg.n_qubits, cfg.n_a, cfg.n_d),
        "circuit depth",
        "OTOC",
    )
    .with_series(mean_series("mean ± stderr", &cfg.depths, &values, true))
    .with_series(flat_series("Haar floor", &xs, scram));
    out.charts.push(("otoc_depth".into(), chart));
    Ok(out)
}

fn error_bounds(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let part = SubsystemPartition::new(cfg.n_qubits, cfg.n_a, cfg.n_d)?;
    let rows = Rows::of(&part);
    let scram = otoc_scram(&part);
    let op = 1.0 / (part.d_a() * part.d_a());
    let bundles = depth_profile(cfg.n_qubits, &cfg.depths, &cfg.seeds, cfg.init_mode, |u| {
        Ok(ErrorBundle::from_parts(otoc(u, &part)?.value, scram, op, &part))
    })?;
    let pick = |f: fn(&ErrorBundle) -> f64| -> Vec<Vec<f64>> { bundles.iter().map(|row| row.iter().map(f).collect()).collect() };
    let l = pick(|b| b.l);
    let lp = pick(|b| b.l_plus);
    let lm = pick(|b| b.l_minus);
    let floor = l_floor(&part);
    let mut out = ExperimentOutput::default();
    push_profile(&mut out.table, rows, &cfg.seeds, &cfg.depths, "l_scram", &l);
    push_profile(&mut out.table, rows, &cfg.seeds, &cfg.depths, "l_plus", &lp);
    push_profile(&mut out.table, rows, &cfg.seeds, &cfg.depths, "l_minus", &lm);
    out.table.push(rows.row(SeedTag::All, None, None, "l_floor", floor, None));

    let slack = cfg.tolerance("order_slack");
    let all: Vec<&ErrorBundle> = bundles.iter().flatten().collect();
    let unordered = all.iter().filter(|b| !b.is_ordered(slack)).count();
    out.checks.push(Check::new(
        "bounds_ordered",
        unordered == 0,
        format!("{unordered} of {} points violate L- <= L_scram <= L+", all.len()),
    ));
    let gaps = all.iter().filter(|b| !b.gap_holds(slack)).count();
    out.checks.push(Check::new(
        "bound_gap",
        gaps == 0,
        format!("{gaps} of {} points exceed the 4G sqrt(OTOC OTOC) gap", all.len()),
    ));
    if cfg.depths.len() >= 2 {
        let (k0, k1) = (argmin(&cfg.depths), argmax(&cfg.depths));
        let width = |k: usize| mean_stderr(&column(&lp, k)).0 - mean_stderr(&column(&lm, k)).0;
        out.checks.push(Check::new(
            "bounds_tighten",
            width(k1) <= width(k0),
            format!("L+ - L- is {:.4e} at depth {} and {:.4e} at depth {}", width(k0), cfg.depths[k0], width(k1), cfg.depths[k1]),
        ));
    }
    let xs: Vec<f64> = cfg.depths.iter().map(|&d| d as f64).collect();
    let mut chart = LineChart::new(
        &format!("True error and bounds, N={}, N_A={}, N_D={}", cfg.n_qubits, cfg.n_a, cfg.n_d),
        "circuit depth",
        "error",
    )
    .with_series(mean_series("L_scram", &cfg.depths, &l, true))
    .with_series(mean_series("L+", &cfg.depths, &lp, false))
    .with_series(mean_series("L-", &cfg.depths, &lm, false))
    .with_series(flat_series("L_floor", &xs, floor));
    chart.log_y = true;
    out.charts.push(("error_bounds".into(), chart));
    Ok(out)
}

fn argmin(v: &[usize]) -> usize {
    (0..v.len()).min_by_key(|&k| v[k]).unwrap_or(0)
}

fn argmax(v: &[usize]) -> usize {
    (0..v.len()).max_by_key(|&k| v[k]).unwrap_or(0)
}

/// OTOC landscape under a uniform shift of every angle.
pub struct LandscapeResult {
    pub depth: usize,
    pub seed: u64,
    pub points: Vec<(f64, f64)>,
    pub spread: f64,
}

pub fn landscape_runs(cfg: &ExperimentConfig, part: &SubsystemPartition) -> Result<Vec<LandscapeResult>> {
    let jobs: Vec<(u64, usize)> = cfg.seeds.iter().flat_map(|&s| cfg.depths.iter().map(move |&d| (s, d))).collect();
    jobs.par_iter()
        .map(|&(seed, depth)| {
            let c = build_circuit(part.n_total, depth, seed, cfg.init_mode)?;
            let scan = landscape_scan(&c, part, &cfg.epsilon_grid)?;
            Ok(LandscapeResult {
                depth,
                seed,
                spread: scan.spread(),
                points: scan.points,
            })
        })
        .collect()
}

fn landscape(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let part = SubsystemPartition::new(cfg.n_qubits, cfg.n_a, cfg.n_d)?;
    let rows = Rows::of(&part);
    let scram = otoc_scram(&part);
    let runs = landscape_runs(cfg, &part)?;
    let mut out = ExperimentOutput::default();
    for r in &runs {
        for &(eps, v) in &r.points {
            out.table.push(rows.row(SeedTag::One(r.seed), Some(r.depth), Some(eps), "landscape_otoc", v, None));
        }
        out.table.push(rows.row(SeedTag::One(r.seed), Some(r.depth), None, "landscape_spread", r.spread, None));
    }
    out.table.push(rows.row(SeedTag::All, None, None, "otoc_scram", scram, None));

    let frac = cfg.tolerance("flat_fraction");
    let deep = *cfg.depths.iter().max().expect("validated");
    let shallow = *cfg.depths.iter().min().expect("validated");
    let spreads = |d: usize| -> Vec<f64> { runs.iter().filter(|r| r.depth == d).map(|r| r.spread).collect() };
    let deep_spread = spreads(deep).into_iter().fold(0.0, f64::max);
    out.checks.push(Check::new(
        "landscape_flat",
        deep_spread <= frac * scram,
        format!("depth {deep}: max-min = {deep_spread:.4e}, limit {frac} x {scram:.4} = {:.4e}", frac * scram),
    ));
    if shallow != deep {
        let shallow_spread = spreads(shallow).into_iter().fold(f64::INFINITY, f64::min);
        out.checks.push(Check::new(
            "landscape_control",
            shallow_spread > deep_spread,
            format!("depth {shallow}: max-min = {shallow_spread:.4e} vs depth {deep}: {deep_spread:.4e}"),
        ));
    }
    let mut chart = LineChart::new(
        &format!("OTOC landscape, N={}, N_A={}, N_D={}", cfg.n_qubits, cfg.n_a, cfg.n_d),
        "perturbation",
        "OTOC",
    );
    for r in &runs {
        chart.series.push(Series {
            label: format!("depth {} seed {}", r.depth, r.seed),
            points: r.points.clone(),
            ..Default::default()
        });
    }
    chart.series.push(flat_series("Haar floor", &cfg.epsilon_grid, scram));
    out.charts.push(("landscape".into(), chart));
    Ok(out)
}

/// Per-width L_scram profiles for the two partition modes of the sweep:
/// `(N_A = N-1, N_C = 1)` and `(N_A = 1, N_C = N-1)`.
pub struct SweepResult {
    pub n: usize,
    pub left: SubsystemPartition,
    pub right: SubsystemPartition,
    pub l_left: Vec<Vec<f64>>,
    pub l_right: Vec<Vec<f64>>,
}

pub fn sweep_runs(cfg: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    (3..=cfg.n_qubits)
        .map(|n| {
            let left = SubsystemPartition::from_a_c(n, n - 1, 1)?;
            let right = SubsystemPartition::from_a_c(n, 1, n - 1)?;
            let both = depth_profile(n, &cfg.depths, &cfg.seeds, cfg.init_mode, |u| {
                Ok((l_scram(u, &left)?, l_scram(u, &right)?))
            })?;
            Ok(SweepResult {
                n,
                left,
                right,
                l_left: both.iter().map(|r| r.iter().map(|p| p.0).collect()).collect(),
                l_right: both.iter().map(|r| r.iter().map(|p| p.1).collect()).collect(),
            })
        })
        .collect()
}

/// Whether the seed-mean at the deepest point is below the shallowest.
pub fn decays(depths: &[usize], values: &[Vec<f64>]) -> bool {
    let (k0, k1) = (argmin(depths), argmax(depths));
    mean_stderr(&column(values, k1)).0 < mean_stderr(&column(values, k0)).0
}

/// Depths at or beyond `min_depth` where the right-mode mean is not below
/// the left-mode mean.
pub fn order_violations(depths: &[usize], r: &SweepResult, min_depth: usize) -> Vec<usize> {
    (0..depths.len())
        .filter(|&k| depths[k] >= min_depth)
        .filter(|&k| mean_stderr(&column(&r.l_right, k)).0 >= mean_stderr(&column(&r.l_left, k)).0)
        .map(|k| depths[k])
        .collect()
}

fn lscram_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let runs = sweep_runs(cfg)?;
    let mut out = ExperimentOutput::default();
    let min_depth = cfg.tolerance("order_min_depth") as usize;
    let mut chart = LineChart::new("L_scram vs depth, both partition modes", "circuit depth", "L_scram");
    chart.log_y = true;
    for r in &runs {
        for (part, values) in [(&r.left, &r.l_left), (&r.right, &r.l_right)] {
            let rows = Rows::of(part);
            push_profile(&mut out.table, rows, &cfg.seeds, &cfg.depths, "l_scram", values);
            out.table.push(rows.row(SeedTag::All, None, None, "l_floor", l_floor(part), None));
        }
        let decay = decays(&cfg.depths, &r.l_left) && decays(&cfg.depths, &r.l_right);
        out.checks.push(Check::new(
            format!("l_scram_decays_n{}", r.n),
            decay,
            format!("N={}: deepest seed-mean below shallowest in both modes: {decay}", r.n),
        ));
        let bad = order_violations(&cfg.depths, r, min_depth);
        out.checks.push(Check::new(
            format!("right_below_left_n{}", r.n),
            bad.is_empty(),
            format!("N={}: right mode not below left at depths {bad:?}", r.n),
        ));
        let mut left = mean_series(&format!("N={} N_A={}", r.n, r.n - 1), &cfg.depths, &r.l_left, false);
        left.dashed = true;
        chart.series.push(left);
        chart.series.push(mean_series(&format!("N={} N_A=1", r.n), &cfg.depths, &r.l_right, false));
    }
    out.charts.push(("lscram_sweep".into(), chart));
    Ok(out)
}

/// Per-state samples of the loss, cost and their derivatives for one
/// circuit parameter, with the Haar-averaged references.
pub struct LevySamples {
    pub part: SubsystemPartition,
    pub param: usize,
    pub loss: Vec<f64>,
    pub loss_grad: Vec<f64>,
    pub cost: Vec<f64>,
    pub cost_grad: Vec<f64>,
    pub bundle: ErrorBundle,
    pub loss_grad_true: f64,
    pub cost_av: f64,
    pub cost_grad_av: f64,
}

impl LevySamples {
    pub fn draw(part: &SubsystemPartition, depth: usize, seed: u64, n_samples: usize) -> Result<Self> {
        let base = SeededRng::new(seed);
        let c = build_brickwall(part.n_total, depth, &mut base.derive(1))?;
        if c.n_params() == 0 {
            return Err(HarnessError::Config("circuit has no parameters".into()));
        }
        let u_s = haar_unitary(1 << part.n_total, &mut base.derive(2))?;
        let param = c.n_params() / 2;
        let probe = StateProbe::new(&c, Some(&u_s), part, param)?;
        let samples: Vec<(f64, f64, f64, f64)> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let psi = haar_state(1 << part.n_a, &mut base.derive(1000 + i as u64))?;
                let l = probe.loss(&psi)?;
                let cst = probe.cost(&psi)?;
                Ok((l.value, l.grad, cst.value, cst.grad))
            })
            .collect::<scramblenet_core::Result<_>>()?;
        let u = c.unitary();
        Ok(LevySamples {
            part: *part,
            param,
            loss: samples.iter().map(|s| s.0).collect(),
            loss_grad: samples.iter().map(|s| s.1).collect(),
            cost: samples.iter().map(|s| s.2).collect(),
            cost_grad: samples.iter().map(|s| s.3).collect(),
            bundle: true_error_analytic(&u, &u_s, part)?,
            loss_grad_true: grad_true_error(&c, &u_s, part, param)?.grad_analytic,
            cost_av: cost_av(&u, part)?,
            cost_grad_av: grad_cost_av(&c, part, param)?.grad_analytic,
        })
    }

    pub fn levy(&self, epsilon: f64) -> Result<LevyBundle> {
        Ok(LevyBundle::from_parts(self.bundle.l_plus, self.bundle.otoc_u, &self.part, epsilon)?)
    }

    /// `(name, samples, reference, width)` for the four concentration tests.
    pub fn tests(&self, lb: &LevyBundle) -> [(&'static str, &[f64], f64, f64); 4] {
        [
            ("loss", &self.loss, self.bundle.l, lb.loss_width()),
            ("loss_grad", &self.loss_grad, self.loss_grad_true, lb.grad_width()),
            ("cost", &self.cost, self.cost_av, lb.cost_width()),
            ("cost_grad", &self.cost_grad, self.cost_grad_av, lb.cost_grad_width()),
        ]
    }
}

/// Fraction of samples further than `width` from `reference`.
pub fn violation_fraction(samples: &[f64], reference: f64, width: f64) -> f64 {
    samples.iter().filter(|&&v| (v - reference).abs() > width).count() as f64 / samples.len() as f64
}

/// Largest tolerated violation fraction at `n_sigma` binomial slack.
pub fn violation_limit(epsilon: f64, n: usize, n_sigma: f64) -> f64 {
    epsilon + n_sigma * (epsilon * (1.0 - epsilon) / n as f64).sqrt()
}

fn levy(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let part = SubsystemPartition::new(cfg.n_qubits, cfg.n_a, cfg.n_d)?;
    if cfg.init_mode != InitMode::Generator {
        return Err(HarnessError::Config("levy needs generator-mode circuits".into()));
    }
    let rows = Rows::of(&part);
    let depth = cfg.depths[0];
    let seed = cfg.first_seed();
    let n_sigma = cfg.tolerance("n_sigma");
    let s = LevySamples::draw(&part, depth, seed, cfg.samples)?;
    let mut out = ExperimentOutput::default();
    let tag = SeedTag::One(seed);
    let p = s.param as f64;
    for (name, values, reference, _) in s.tests(&s.levy(cfg.epsilon_grid[0])?) {
        let (m, se) = mean_stderr(values);
        out.table.push(rows.row(tag, Some(depth), Some(p), &format!("{name}_sample_mean"), m, Some(se)));
        out.table.push(rows.row(tag, Some(depth), Some(p), &format!("{name}_reference"), reference, None));
        out.checks.push(Check::new(
            format!("{name}_mean_matches_average"),
            (m - reference).abs() <= n_sigma * se,
            format!("sample mean {m:.6e} vs {reference:.6e}, {n_sigma} stderr = {:.3e}", n_sigma * se),
        ));
    }
    for &eps in &cfg.epsilon_grid {
        let lb = s.levy(eps)?;
        let limit = violation_limit(eps, cfg.samples, n_sigma);
        for (name, values, reference, width) in s.tests(&lb) {
            let frac = violation_fraction(values, reference, width);
            out.table.push(rows.row(tag, Some(depth), Some(eps), &format!("width_{name}"), width, None));
            out.table.push(rows.row(tag, Some(depth), Some(eps), &format!("violation_{name}"), frac, None));
            out.checks.push(Check::new(
                format!("levy_{name}_eps{eps}"),
                frac <= limit,
                format!("violation fraction {frac:.4} vs limit {limit:.4} (width {width:.4e})"),
            ));
        }
        out.table.push(rows.row(tag, Some(depth), Some(eps), "f_eps", lb.f_eps, None));
        out.table.push(rows.row(tag, Some(depth), Some(eps), "width_loss_scrambled", loss_width_scrambled(&part, eps)?, None));
        out.table.push(rows.row(tag, Some(depth), Some(eps), "width_grad_scrambled", grad_width_scrambled(&part, eps, 1.0)?, None));
    }
    Ok(out)
}

fn twirl_rows(
    out: &mut ExperimentOutput,
    rows: Rows,
    seed: u64,
    name: &str,
    est: &TwirlEstimate,
    expected: &DenseOperator,
    n_sigma: f64,
    floor: f64,
) {
    let n = rows.n as f64;
    let excess = est.worst_excess(expected, n_sigma);
    let dev = est.mean.max_abs_diff(expected);
    out.table.push(rows.row(SeedTag::One(seed), None, Some(n), &format!("{name}_max_dev"), dev, None));
    out.table.push(rows.row(SeedTag::One(seed), None, Some(n), &format!("{name}_worst_excess"), excess, None));
    out.checks.push(Check::new(
        format!("{name}_dim{}", 1usize << rows.n),
        est.within(expected, n_sigma, floor),
        format!("max |mean-closed| = {dev:.3e}, worst excess over {n_sigma} stderr = {excess:.3e}"),
    ));
}

fn twirl_oracle(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let seed = cfg.first_seed();
    let n_sigma = cfg.tolerance("n_sigma");
    let floor = cfg.tolerance("abs_floor");
    let mut out = ExperimentOutput::default();
    for n in 1..=cfg.n_qubits {
        let dim = 1usize << n;
        let rows = Rows { n, n_a: 0, n_d: 0 };
        let base = SeededRng::new(seed).derive(n as u64);
        let q1 = DenseOperator::new(ginibre(dim, &mut base.derive(1)))?;
        let est = twirl_mc(&q1, 1, dim, cfg.samples, &mut base.derive(2))?;
        twirl_rows(&mut out, rows, seed, "twirl1", &est, &twirl_one_closed(&q1)?, n_sigma, floor);

        let q2 = DenseOperator::new(ginibre(dim * dim, &mut base.derive(3)))?;
        let est = twirl_mc(&q2, 2, dim, cfg.samples, &mut base.derive(4))?;
        twirl_rows(&mut out, rows, seed, "twirl2", &est, &twirl_two_closed(&q2, dim)?, n_sigma, floor);

        let psi = haar_state(dim, &mut base.derive(5))?.projector()?;
        let q = kron(&psi, &psi)?;
        let est = twirl_mc(&q, 2, dim, cfg.samples, &mut base.derive(6))?;
        twirl_rows(&mut out, rows, seed, "twirl_state", &est, &twirl_state_power(dim)?, n_sigma, floor);
    }
    Ok(out)
}

/// All gradient reports for one random circuit, keyed by quantity.
pub struct GradientAudit {
    pub seed: u64,
    pub reports: Vec<(&'static str, Vec<GradientReport>)>,
}

pub fn audit_circuit(part: &SubsystemPartition, depth: usize, seed: u64) -> Result<GradientAudit> {
    let base = SeededRng::new(seed);
    let c = build_brickwall(part.n_total, depth, &mut base.derive(1))?;
    let u_s = haar_unitary(1 << part.n_total, &mut base.derive(2))?;
    let psi = haar_state(1 << part.n_a, &mut base.derive(3))?;
    let rho = product_input(&psi, part)?;
    let reports = vec![
        ("grad_otoc", for_all_params(&c, |l| grad_otoc(&c, part, l))?),
        ("grad_op", for_all_params(&c, |l| grad_op(&c, &u_s, part, l))?),
        ("grad_true_error", for_all_params(&c, |l| grad_true_error(&c, &u_s, part, l))?),
        ("grad_l_scram", for_all_params(&c, |l| grad_l_scram(&c, part, l))?),
        ("grad_cost", for_all_params(&c, |l| grad_cost(&c, &rho, part, l))?),
        ("grad_cost_av", for_all_params(&c, |l| grad_cost_av(&c, part, l))?),
    ];
    Ok(GradientAudit { seed, reports })
}

fn gradient_audit(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let part = SubsystemPartition::new(cfg.n_qubits, cfg.n_a, cfg.n_d)?;
    if cfg.init_mode != InitMode::Generator {
        return Err(HarnessError::Config("gradient audit needs generator-mode circuits".into()));
    }
    let rows = Rows::of(&part);
    let depth = cfg.depths[0];
    let audits: Vec<GradientAudit> = cfg
        .seeds
        .par_iter()
        .map(|&s| audit_circuit(&part, depth, s))
        .collect::<Result<_>>()?;
    let (rel, abs, slack) = (cfg.tolerance("fd_rel"), cfg.tolerance("fd_abs"), cfg.tolerance("cap_slack"));
    let mut out = ExperimentOutput::default();
    for a in &audits {
        for (name, reps) in &a.reports {
            for r in reps {
                let x = Some(r.param_index as f64);
                out.table.push(rows.row(SeedTag::One(a.seed), Some(depth), x, name, r.grad_analytic, None));
                out.table.push(rows.row(SeedTag::One(a.seed), Some(depth), x, &format!("{name}_fd"), r.grad_fd, None));
            }
        }
    }
    for (k, (name, _)) in audits[0].reports.iter().enumerate() {
        let all: Vec<&GradientReport> = audits.iter().flat_map(|a| a.reports[k].1.iter()).collect();
        let worst = all.iter().map(|r| r.fd_error() / r.grad_fd.abs().max(abs / rel)).fold(0.0, f64::max);
        out.checks.push(Check::new(
            format!("{name}_matches_fd"),
            all.iter().all(|r| r.fd_agrees(rel, abs)),
            format!("{} parameters, worst scaled FD error {worst:.3e} (tol {rel:.0e})", all.len()),
        ));
        if all.iter().any(|r| r.bound.is_some()) {
            let peak = all.iter().map(|r| r.grad_analytic.abs() / r.bound.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            out.checks.push(Check::new(
                format!("{name}_within_cap"),
                all.iter().all(|r| r.within_bound(slack)),
                format!("largest |grad|/cap = {peak:.4}"),
            ));
        }
    }
    Ok(out)
}

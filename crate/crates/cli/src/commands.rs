use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use maoa::algorithms::{Algorithm, GasConfig, MaoaConfig, Target};
use maoa::grover::{
    complete_convergence_rotations_rounded, count_extrema, expectation_envelope, expectation_response,
    grover_probability, response_grid, threshold_response_curve, write_curve_csv, Regime,
};
use maoa::harness::{analytic_classical, analytic_maoa, log_grid, run_experiment, ExperimentResult, ExperimentSpec};
use maoa::kv::KvDoc;
use maoa::problems::cvrp::{cvrp_enumerate, CvrpInstance};
use maoa::problems::portfolio::{ingest_prices, portfolio_enumerate, synthetic_prices, PortfolioInstance};
use maoa::QualityDistribution;
use maoa_walks::appendix::{run_appendix_suite, Study, SuiteConfig};
use maoa_walks::circulant::{CirculantGraph, CirculantWalk};
use maoa_walks::partition::{maximise_single_iteration, partition_experiment, write_partition_csv, PartitionConfig};
use maoa_walks::reduced::{full_complete_group_probabilities, QwoaParams, ReducedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::plot::{read_series, render, PlotSpec};
use crate::{Algo, Cli, Command, DistArgs, RunArgs};

type Result<T> = std::result::Result<T, CliError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Validation(msg.into()))
}

/// Output files, all inside one directory.
struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name)).map_err(|e| CliError::from_io(e, name))?))
    }

    fn kv(&self, name: &str, doc: &KvDoc) -> Result<()> {
        doc.write(self.dir.join(name)).map_err(|e| CliError::from_core(e, name))
    }
}

pub fn dispatch(cli: &Cli, manifest: KvDoc) -> Result<()> {
    let seed = cli.seed.expect("seed resolved");
    if cli.workers == 0 {
        return invalid("--workers must be at least 1");
    }
    // parallel sections outside the harness share one global pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    fs::create_dir_all(&cli.out).map_err(|e| CliError::from_io(e, "output directory"))?;
    let out = Out { dir: &cli.out };
    match &cli.command {
        Command::GenCvrp { l, capacity, budget } => gen_cvrp(&out, *l, *capacity, *budget, seed)?,
        Command::GenPortfolio {
            prices,
            assets,
            days,
            net,
            low_risk,
        } => gen_portfolio(&out, prices.as_deref(), *assets, *days, *net, *low_risk, seed)?,
        Command::IngestPrices { prices, net } => {
            let text = fs::read_to_string(prices).map_err(|e| CliError::from_io(e, "prices"))?;
            let (names, inst) = ingest_prices(text.as_bytes()).map_err(|e| CliError::from_core(e, "prices"))?;
            let inst = PortfolioInstance::new(inst.returns.clone(), inst.covariance.clone(), *net)?;
            let mut doc = inst.to_kv();
            doc.set("names", names.join(" "));
            out.kv("instance.txt", &doc)?;
        }
        Command::DistStats { dist } => dist_stats(&out, dist)?,
        Command::ResponseCurve { dist, r, lo, hi } => response_curve(&out, dist, *r, *lo, *hi)?,
        Command::ExpectationCurve {
            dist,
            r,
            lo,
            hi,
            points,
        } => expectation_curve(&out, dist, *r, *lo, *hi, *points)?,
        Command::Run { algo, r, run } => {
            let d = load(&run.dist)?;
            let target = target(&d, run)?;
            let res = experiment(&d, *algo, *r, run, target.clone(), seed, cli.workers)?;
            write_run(&out, "", &d, *algo, *r, run, &target, &res)?;
        }
        Command::Sweep { algos, r_values, run } => sweep(&out, algos, r_values, run, seed, cli.workers)?,
        Command::VerifyReduced {
            parts,
            max_rounds,
            full_budget,
        } => verify_reduced(&out, parts, *max_rounds, *full_budget, seed)?,
        Command::AppendixSuite {
            studies,
            rounds,
            distributions,
            landscape_resolution,
            full_budget,
        } => {
            let cfg = SuiteConfig {
                rounds: *rounds,
                distributions: *distributions,
                landscape_resolution: *landscape_resolution,
                full_budget: *full_budget,
                studies: studies.iter().map(|s| Study::parse(s)).collect::<std::result::Result<_, _>>()?,
                seed,
                ..SuiteConfig::default()
            };
            let tables = run_appendix_suite(&cfg)?;
            tables.write_csv(out.create("suite.csv")?)?;
            for l in &tables.landscapes {
                l.write_csv(out.create(&format!("landscape-{}-{}.csv", l.label, l.qualities))?)?;
            }
        }
        Command::Plot {
            csv,
            x,
            y,
            log_x,
            log_y,
            title,
            name,
        } => {
            if name.contains('/') || name.contains('\\') || name == ".." {
                return invalid("--name must be a plain file name");
            }
            let spec = PlotSpec {
                x: x.clone(),
                y: y.clone(),
                log_x: *log_x,
                log_y: *log_y,
                title: title.clone(),
            };
            let (x_name, series) = read_series(csv, &spec)?;
            let mut f = out.create(name)?;
            f.write_all(render(&x_name, &series, &spec).as_bytes())?;
        }
    }
    out.kv("manifest.txt", &manifest)
}

fn load(d: &DistArgs) -> Result<QualityDistribution> {
    match (&d.dist, d.normal) {
        (Some(p), false) => QualityDistribution::load(p).map_err(|e| CliError::from_core(e, &p.display().to_string())),
        (None, true) => Ok(QualityDistribution::Normal),
        _ => invalid("give exactly one of --dist and --normal"),
    }
}

fn gen_cvrp(out: &Out, l: usize, capacity: u32, budget: u64, seed: u64) -> Result<()> {
    let inst = CvrpInstance::random(l, capacity, seed)?;
    let dist = cvrp_enumerate(&inst, budget as u128)?;
    out.kv("instance.txt", &inst.to_kv())?;
    dist.save(out.dir.join("cvrp.dist"))?;
    println!("{} solutions, {} distinct costs, best {}", dist.len(), dist.run_count(), dist.min());
    Ok(())
}

fn gen_portfolio(
    out: &Out,
    prices: Option<&Path>,
    assets: usize,
    days: usize,
    net: i64,
    low_risk: f64,
    seed: u64,
) -> Result<()> {
    let text = match prices {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::from_io(e, "prices"))?,
        None => {
            let t = synthetic_prices(assets, days, seed);
            out.create("prices.csv")?.write_all(t.as_bytes())?;
            t
        }
    };
    let (names, est) = ingest_prices(text.as_bytes()).map_err(|e| CliError::from_core(e, "prices"))?;
    let inst = PortfolioInstance::new(est.returns.clone(), est.covariance.clone(), net)?;
    let table = portfolio_enumerate(&inst);
    let (dist, cutoff) = table.low_risk_objective(low_risk)?;
    let mut doc = inst.to_kv();
    doc.set("names", names.join(" "));
    doc.set("portfolios", table.len());
    doc.set("low_risk_fraction", low_risk);
    doc.set("risk_cutoff", format!("{cutoff:?}"));
    out.kv("instance.txt", &doc)?;
    dist.save(out.dir.join("portfolio.dist"))?;
    println!("{} portfolios, {} below the risk cutoff", table.len(), dist.len());
    Ok(())
}

fn dist_stats(out: &Out, d: &DistArgs) -> Result<()> {
    let dist = load(d)?;
    let mut doc = KvDoc::new();
    match &dist {
        QualityDistribution::Normal => {
            doc.set("kind", "normal");
            doc.set("mean", 0.0);
        }
        QualityDistribution::Finite(f) => {
            doc.set("kind", "finite");
            finite_stats(&mut doc, f)?;
            f.write_csv(&mut out.create("values.csv")?)?;
        }
        QualityDistribution::Filtered(f) => {
            doc.set("kind", "filtered");
            doc.set("size", f.len());
            doc.set("eligible", f.eligible().len());
            finite_stats(&mut doc, f.eligible())?;
            f.eligible().write_csv(&mut out.create("values.csv")?)?;
        }
    }
    print!("{doc}");
    out.kv("stats.txt", &doc)
}

fn finite_stats(doc: &mut KvDoc, f: &maoa::FiniteDistribution) -> Result<()> {
    doc.set("size", f.len());
    doc.set("distinct", f.run_count());
    doc.set("min", f.min());
    doc.set("max", f.max());
    doc.set("mean", f.mean());
    doc.set("optimal_count", f.optimal_count());
    doc.set("optimal_ratio", f.optimal_count() as f64 / f.len() as f64);
    doc.set("rc_single", complete_convergence_rotations_rounded(1.0 / f.len() as f64)?);
    doc.set(
        "rc_optimal",
        complete_convergence_rotations_rounded(f.optimal_count() as f64 / f.len() as f64)?,
    );
    Ok(())
}

fn threshold_range(dist: &QualityDistribution, lo: Option<f64>, hi: Option<f64>) -> Result<(f64, f64)> {
    let lo = lo.unwrap_or_else(|| dist.min().unwrap_or(-8.0));
    let hi = match hi {
        Some(h) => h,
        None => dist.quantile(0.5)?,
    };
    if !(lo < hi) {
        return invalid(format!("empty threshold range [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

fn response_curve(out: &Out, d: &DistArgs, r: u64, lo: Option<f64>, hi: Option<f64>) -> Result<()> {
    let dist = load(d)?;
    let (lo, hi) = threshold_range(&dist, lo, hi)?;
    let grid = response_grid(&dist, r, lo, hi)?;
    let curve = threshold_response_curve(&dist, r, &grid)?;
    write_curve_csv(&curve, &mut out.create("response.csv")?)?;
    let ps: Vec<f64> = curve.iter().map(|p| p.probability).collect();
    let (maxima, minima) = count_extrema(&ps);
    let mut doc = KvDoc::new();
    doc.set("points", curve.len());
    doc.set("maxima", maxima);
    doc.set("minima", minima);
    for regime in [Regime::LowConvergence, Regime::HighConvergence, Regime::Chaotic] {
        let n = curve.iter().filter(|p| p.regime == regime).count();
        doc.set(format!("points_{}", regime.label()), n);
    }
    print!("{doc}");
    out.kv("response-summary.txt", &doc)
}

fn expectation_curve(
    out: &Out,
    d: &DistArgs,
    r: u64,
    lo: Option<f64>,
    hi: Option<f64>,
    points: usize,
) -> Result<()> {
    if points < 2 {
        return invalid("need at least two points");
    }
    let dist = load(d)?;
    let (lo, hi) = threshold_range(&dist, lo, hi)?;
    let mut f = out.create("expectation.csv")?;
    writeln!(f, "T,rho,P,expectation,envelope")?;
    for i in 0..points {
        let t = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let rho = dist.ratio_below(t);
        writeln!(
            f,
            "{t:.16e},{rho:.16e},{:.16e},{:.16e},{:.16e}",
            grover_probability(r, rho),
            expectation_response(&dist, r, t),
            expectation_envelope(&dist, r, t)
        )?;
    }
    Ok(())
}

fn target(dist: &QualityDistribution, run: &RunArgs) -> Result<Target> {
    match (run.mu, run.optimal) {
        (Some(mu), false) => Ok(Target::ratio(dist, mu)?),
        (None, true) => Ok(Target::optimal(dist)?),
        _ => invalid("give exactly one of --mu and --optimal"),
    }
}

fn algorithm(dist: &QualityDistribution, algo: Algo, r: u64, run: &RunArgs) -> Result<Algorithm> {
    Ok(match algo {
        Algo::Maoa => Algorithm::Maoa(MaoaConfig::new(r)?),
        Algo::Rgas => Algorithm::Gas(GasConfig::restricted(r, run.lambda)?),
        Algo::Gas => match (run.r_max, dist.size()) {
            (Some(m), _) => Algorithm::Gas(GasConfig::new(run.lambda, m)?),
            (None, Some(n)) => Algorithm::Gas(GasConfig::unrestricted(n, run.lambda)?),
            (None, None) => return invalid("GAS on the continuum needs --r-max"),
        },
        Algo::Classical => Algorithm::Classical,
    })
}

fn experiment(
    dist: &QualityDistribution,
    algo: Algo,
    r: u64,
    run: &RunArgs,
    target: Target,
    seed: u64,
    workers: usize,
) -> Result<ExperimentResult> {
    let spec = ExperimentSpec {
        dist,
        algorithm: algorithm(dist, algo, r, run)?,
        target,
        runs: run.runs,
        effort_cap: run.effort_cap,
        master_seed: seed,
    };
    Ok(run_experiment(&spec, workers)?)
}

fn algo_name(algo: Algo) -> &'static str {
    match algo {
        Algo::Maoa => "maoa",
        Algo::Gas => "gas",
        Algo::Rgas => "rgas",
        Algo::Classical => "classical",
    }
}

/// Runs, curve and summary files, named with `suffix`.
#[allow(clippy::too_many_arguments)]
fn write_run(
    out: &Out,
    suffix: &str,
    dist: &QualityDistribution,
    algo: Algo,
    r: u64,
    run: &RunArgs,
    target: &Target,
    res: &ExperimentResult,
) -> Result<KvDoc> {
    let mu = target.ratio_in(dist);
    let top = res.outcomes.iter().map(|o| o.calls).max().unwrap_or(1).max(10);
    let curve = res.curve(log_grid(1.0, top as f64, run.per_decade.max(1)));
    res.write_runs_csv(&mut out.create(&format!("runs{suffix}.csv"))?)?;
    let classical = |e: f64| analytic_classical(e, mu);
    let sampling = |e: f64| analytic_maoa(e, mu, r).0;
    let overlay: Option<&dyn Fn(f64) -> f64> = match algo {
        Algo::Classical => Some(&classical),
        Algo::Maoa => Some(&sampling),
        _ => None,
    };
    curve.write_csv(&mut out.create(&format!("curve{suffix}.csv"))?, overlay)?;
    let mut doc = KvDoc::new();
    doc.set("algo", algo_name(algo));
    doc.set("target_ratio", mu);
    doc.set("runs", res.outcomes.len());
    doc.set("successes", curve.times.len());
    for p in [0.5, 0.9] {
        let e = curve.effort_at(p).map(|v| v.to_string()).unwrap_or_else(|| "unreached".into());
        doc.set(format!("effort_p{}", (p * 100.0) as u32), e);
    }
    out.kv(&format!("summary{suffix}.txt"), &doc)?;
    Ok(doc)
}

fn sweep(out: &Out, algos: &[Algo], r_values: &[u64], run: &RunArgs, seed: u64, workers: usize) -> Result<()> {
    let dist = load(&run.dist)?;
    let target = target(&dist, run)?;
    let mut cells = Vec::new();
    for &a in algos {
        match a {
            Algo::Maoa | Algo::Rgas => cells.extend(r_values.iter().map(|&r| (a, r))),
            Algo::Gas | Algo::Classical => cells.push((a, 0)),
        }
    }
    let mut table = out.create("sweep.csv")?;
    writeln!(table, "algo,r,runs,successes,effort_p50,effort_p90")?;
    for (a, r) in cells {
        let res = experiment(&dist, a, r, run, target.clone(), seed, workers)?;
        let suffix = match a {
            Algo::Maoa | Algo::Rgas => format!("-{}-{r}", algo_name(a)),
            _ => format!("-{}", algo_name(a)),
        };
        let doc = write_run(out, &suffix, &dist, a, r, run, &target, &res)?;
        writeln!(
            table,
            "{},{r},{},{},{},{}",
            algo_name(a),
            doc.get("runs").unwrap_or(""),
            doc.get("successes").unwrap_or(""),
            doc.get("effort_p50").unwrap_or(""),
            doc.get("effort_p90").unwrap_or("")
        )?;
    }
    Ok(())
}

fn verify_reduced(out: &Out, parts: &[usize], max_rounds: usize, full_budget: bool, seed: u64) -> Result<()> {
    let mut doc = KvDoc::new();
    let (g, t, v) = maximise_single_iteration(1e6, 201)?;
    doc.set("single_round_max", format!("{v:.12}"));
    doc.set("single_round_argmax", format!("{g:.9} {:.9}", t * 1e6));

    let mut worst: f64 = 0.0;
    for n in [1_000u64, 1_000_000] {
        let graph = ReducedGraph::binary(1, n)?;
        for r in 0..=200 {
            let p = graph.group_probability(0, &QwoaParams::repeated(PI, PI / n as f64, r));
            worst = worst.max((p - grover_probability(r as u64, 1.0 / n as f64)).abs());
        }
    }
    let k24 = CirculantWalk::new(CirculantGraph::complete(24)?);
    let mut q = vec![0.0; 24];
    q[0] = 1.0;
    for r in 0..=6 {
        let p = k24.probability_at(&q, &QwoaParams::repeated(PI, PI / 24.0, r), 0)?;
        worst = worst.max((p - grover_probability(r as u64, 1.0 / 24.0)).abs());
    }
    doc.set("grover_max_deviation", format!("{worst:.3e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=12usize);
        let k = rng.random_range(1..=n);
        let mut group: Vec<usize> = (0..k).collect();
        group.extend((k..n).map(|_| rng.random_range(0..k)));
        let levels: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let quals: Vec<f64> = group.iter().map(|&g| levels[g]).collect();
        let counts: Vec<u64> = (0..k).map(|g| group.iter().filter(|&&x| x == g).count() as u64).collect();
        let r = rng.random_range(1..=5);
        let params = QwoaParams::new(
            (0..r).map(|_| rng.random::<f64>() * 2.0 * PI).collect(),
            (0..r).map(|_| rng.random::<f64>() * 2.0 * PI / n as f64).collect(),
        )?;
        let full = full_complete_group_probabilities(&quals, &group, &params)?;
        let reduced = ReducedGraph::new(counts, levels)?.group_probabilities(&params);
        for (a, b) in full.iter().zip(&reduced) {
            worst = worst.max((a - b).abs());
        }
    }
    doc.set("contraction_max_deviation", format!("{worst:.3e}"));

    let mut cfg = PartitionConfig {
        parts: parts.to_vec(),
        max_rounds,
        seed,
        ..PartitionConfig::default()
    };
    if full_budget {
        cfg = cfg.full_budget();
    }
    let rows = partition_experiment(&cfg)?;
    write_partition_csv(&rows, out.create("partition.csv")?)?;
    print!("{doc}");
    out.kv("verify.txt", &doc)
}

//! Command-line front end: builds models from `.ham` files, runs the
//! measurement pipeline, and writes CSV / JSON artifacts.

mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use davies_lab::config::{parse_config, RunConfig};
use davies_lab::davies::{Bath, BathKind, DaviesGenerator, SectorEngine};
use davies_lab::entropy::{decay_trace, mixing_time, MlsiBudget};
use davies_lab::model::{parse_ham, GibbsState, HamiltonianSpec};
use davies_lab::pipeline::{
    at_check, certify, interaction_degree, k_a, lambda_dl, mixing_scan, quasilocal_at_check,
    CertifyOptions, CertifySeeds,
};
use davies_lab::rng::random_density_like;
use davies_lab::sites::Interval;
use davies_lab::Op;

#[derive(Parser)]
#[command(
    name = "davies-lab",
    about = "Davies semigroup laboratory for 1D commuting spin chains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct ModelArgs {
    /// Path to a .ham model file.
    #[arg(long)]
    model: PathBuf,
    /// Chain length.
    #[arg(long)]
    n: usize,
    /// Inverse temperature.
    #[arg(long)]
    beta: f64,
    /// Bath spectral function: exp-half | glauber.
    #[arg(long, default_value = "exp-half")]
    bath: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize the Gibbs state and report its spectrum.
    Gibbs(ModelArgs),
    /// Evolve a seeded random state and write the decay trace CSV.
    Evolve {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Mixing-time threshold on the trace distance.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Scan the mixing condition over separator widths.
    MixingScan {
        #[command(flatten)]
        common: ModelArgs,
        /// Separator widths 1..=y_max.
        #[arg(long, default_value_t = 5)]
        y_max: usize,
    },
    /// Check approximate tensorization on sampled states.
    AtCheck {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Subalgebra indices of a regional Davies fixed-point algebra.
    Index {
        #[command(flatten)]
        common: ModelArgs,
        /// Region as lo..hi (1-based, inclusive).
        #[arg(long)]
        region: String,
    },
    /// Quasi-local sandwich and entropy inequality for a region.
    Sandwich {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long)]
        region: String,
        /// Override the iteration count (defaults to the k_A formula).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Assemble the full decay certificate.
    Certify {
        #[command(flatten)]
        common: ModelArgs,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 17)]
        mlsi_seed: u64,
    },
    /// Run certify over the grid in a config file, writing a manifest.
    Sweep {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn load_model(path: &Path) -> anyhow::Result<HamiltonianSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model file {}", path.display()))?;
    let spec = parse_ham(&text).with_context(|| format!("parsing {}", path.display()))?;
    let probe = (2 * spec.range).clamp(2, 8);
    let report = spec.validate_commuting(probe)?;
    if !report.ok {
        bail!(
            "model terms do not commute (max commutator norm {:.3e})",
            report.max_commutator_norm
        );
    }
    Ok(spec)
}

fn parse_region(raw: &str) -> anyhow::Result<Vec<usize>> {
    let (lo, hi) = raw
        .split_once("..")
        .with_context(|| format!("region '{raw}' should be lo..hi"))?;
    let lo: usize = lo.trim().parse().context("region start")?;
    let hi: usize = hi.trim().parse().context("region end")?;
    if lo == 0 || hi < lo {
        bail!("region '{raw}' is empty or zero-based");
    }
    Ok((lo..=hi).collect())
}

fn bath_of(name: &str, beta: f64) -> anyhow::Result<Bath> {
    let kind: BathKind = name.parse()?;
    Ok(Bath::new(kind, beta)?)
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gibbs(args) => {
            let spec = load_model(&args.model)?;
            let h = spec.hamiltonian(args.n)?;
            let g = GibbsState::new(&h, args.beta)?;
            #[derive(serde::Serialize)]
            struct GibbsSummary {
                n: usize,
                beta: f64,
                dim: usize,
                energies: Vec<f64>,
                weights: Vec<f64>,
                purity: f64,
                min_weight: f64,
            }
            let summary = GibbsSummary {
                n: args.n,
                beta: args.beta,
                dim: g.dim(),
                energies: g.eig.vals.clone(),
                weights: g.weights.clone(),
                purity: g.purity(),
                min_weight: g.min_weight(),
            };
            write_json(&args.out, &format!("gibbs_n{}_beta{}.json", args.n, args.beta), &summary)?;
            Ok(0)
        }
        Command::Evolve { common, t_max, points, seed, eps } => {
            let spec = load_model(&common.model)?;
            let bath = bath_of(&common.bath, common.beta)?;
            let gen = DaviesGenerator::full_chain(&spec, common.n, false, bath)?;
            let chain = Interval::new(1, common.n);
            let sigma = gen.gibbs_on(&chain)?.sigma;
            let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(seed);
            let rho0: Op = random_density_like(&mut rng, &sigma);
            let grid: Vec<f64> =
                (1..=points).map(|k| t_max * k as f64 / points as f64).collect();
            let trace = decay_trace(&gen, &rho0, &grid, &chain)?;
            let (t_mix, extrapolated) = mixing_time(&trace, eps);
            let stem = format!("trajectory_n{}_beta{}", common.n, common.beta);
            write_text(&common.out, &format!("{stem}.csv"), &trace.to_csv())?;
            #[derive(serde::Serialize)]
            struct EvolveSummary {
                kappa: f64,
                alpha_from_kappa: f64,
                fit_r2: f64,
                monotone_ok: bool,
                pinsker_ok: bool,
                t_mix: Option<f64>,
                t_mix_extrapolated: bool,
                seed: u64,
            }
            write_json(
                &common.out,
                &format!("{stem}.json"),
                &EvolveSummary {
                    kappa: trace.kappa,
                    alpha_from_kappa: trace.alpha_from_kappa,
                    fit_r2: trace.fit_r2,
                    monotone_ok: trace.monotone_ok,
                    pinsker_ok: trace.pinsker_ok,
                    t_mix,
                    t_mix_extrapolated: extrapolated,
                    seed,
                },
            )?;
            Ok(0)
        }
        Command::MixingScan { common, y_max } => {
            let spec = load_model(&common.model)?;
            let sizes: Vec<usize> = (1..=y_max).collect();
            let scan = mixing_scan(&spec, common.n, common.beta, &sizes)?;
            let stem = format!("mixing_n{}_beta{}", common.n, common.beta);
            write_text(&common.out, &format!("{stem}.csv"), &scan.to_csv())?;
            write_json(&common.out, &format!("{stem}.json"), &scan)?;
            Ok(0)
        }
        Command::AtCheck { common, ell, samples, seed } => {
            let spec = load_model(&common.model)?;
            let bath = bath_of(&common.bath, common.beta)?;
            let geom = davies_lab::model::CoveringGeometry::build(common.n, spec.range, ell)?;
            let report = at_check(&spec, common.n, bath, &geom, samples, seed)?;
            write_json(
                &common.out,
                &format!("at_check_n{}_beta{}_ell{ell}.json", common.n, common.beta),
                &report,
            )?;
            Ok(if report.passed { 0 } else { 2 })
        }
        Command::Index { common, region } => {
            let spec = load_model(&common.model)?;
            let bath = bath_of(&common.bath, common.beta)?;
            let sites = parse_region(&region)?;
            let gen = DaviesGenerator::build(&spec, common.n, &sites, false, bath)?;
            let engine = SectorEngine::build(&gen, &gen.support)?;
            let fp = engine.fixed_point()?;
            let sup = fp.dense_superop(davies_lab::Picture::Heisenberg)?;
            let ce = davies_lab::algebra::ConditionalExpectation::from_superop(&sup)?;
            let (c, c_cb) = davies_lab::algebra::indices_formula(&ce.algebra);
            let brute = davies_lab::algebra::index_bruteforce(&ce, 16, 80, 7)?;
            let bounds = davies_lab::algebra::ctau_bounds(&ce, Some(&fp.gibbs.sigma))?;
            #[derive(serde::Serialize)]
            struct IndexReport {
                region: Vec<usize>,
                scope: Interval,
                fixed_point_dim: usize,
                blocks: Vec<davies_lab::algebra::Block>,
                c_formula: f64,
                c_cb_formula: f64,
                c_bruteforce: f64,
                ctau_bound: f64,
                ctau_provenance: String,
            }
            write_json(
                &common.out,
                &format!("index_n{}_beta{}.json", common.n, common.beta),
                &IndexReport {
                    region: sites,
                    scope: fp.scope,
                    fixed_point_dim: fp.fixed_point_dim(),
                    blocks: ce.algebra.blocks.clone(),
                    c_formula: c,
                    c_cb_formula: c_cb,
                    c_bruteforce: brute.value,
                    ctau_bound: bounds.bound,
                    ctau_provenance: bounds.provenance,
                },
            )?;
            Ok(0)
        }
        Command::Sandwich { common, region, k, samples, seed } => {
            let spec = load_model(&common.model)?;
            let bath = bath_of(&common.bath, common.beta)?;
            let sites = parse_region(&region)?;
            let lam = lambda_dl(&spec, common.n, bath, &sites, None)?;
            let k_value = match k {
                Some(k) => k,
                None => {
                    k_a(spec.local_dim, lam.scope.len(), common.beta, spec.strength(), lam.lambda)?
                        .0
                }
            };
            let g = interaction_degree(&sites, spec.range, common.n);
            let report =
                quasilocal_at_check(&spec, common.n, bath, &sites, k_value, samples, seed)?;
            #[derive(serde::Serialize)]
            struct SandwichOut {
                lambda: davies_lab::pipeline::LambdaReport,
                g: usize,
                dl_bound: f64,
                quasilocal: davies_lab::pipeline::QuasiLocalReport,
            }
            let dl_bound = davies_lab::pipeline::detectability_bound(lam.gap_dl, g);
            write_json(
                &common.out,
                &format!("sandwich_n{}_beta{}.json", common.n, common.beta),
                &SandwichOut { lambda: lam, g, dl_bound, quasilocal: report },
            )?;
            Ok(0)
        }
        Command::Certify { common, ell, seed, mlsi_seed } => {
            let spec = load_model(&common.model)?;
            let opts = CertifyOptions {
                ell,
                bath: common.bath.parse::<BathKind>()?,
                seeds: CertifySeeds { state: seed, mlsi: mlsi_seed },
                mlsi_budget: MlsiBudget::light(mlsi_seed),
                ..Default::default()
            };
            let cert = certify(&spec, &model_name(&common.model), common.n, common.beta, &opts)?;
            let name = format!("n{}_beta{}_ell{ell}.cert.json", common.n, common.beta);
            write_json(&common.out, &name, &cert)?;
            if cert.valid {
                println!(
                    "certificate VALID: alpha_n = {:.6e}, kappa = {:.6e}",
                    cert.alpha_n, cert.kappa
                );
                Ok(0)
            } else {
                println!("certificate INVALID at stage {:?}", cert.invalid_stage);
                Ok(2)
            }
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let cfg: RunConfig = parse_config(&text)?;
            run_sweep(&cfg, &config)
        }
    }
}

fn model_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

fn run_sweep(cfg: &RunConfig, config_path: &Path) -> anyhow::Result<i32> {
    use rayon::prelude::*;
    let model_path = config_path
        .parent()
        .map(|p| p.join(&cfg.model))
        .unwrap_or_else(|| PathBuf::from(&cfg.model));
    let spec = load_model(&model_path)?;
    let out_dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let mut jobs = Vec::new();
    for &n in &cfg.n {
        for &beta in &cfg.beta {
            for &ell in &cfg.ell {
                jobs.push((n, beta, ell));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .context("thread pool")?;
    let name = model_name(&model_path);
    let started = Instant::now();
    let results: Vec<anyhow::Result<(String, PathBuf, bool, f64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, beta, ell)| {
                let t0 = Instant::now();
                let opts = CertifyOptions {
                    ell,
                    bath: cfg.bath,
                    seeds: CertifySeeds { state: cfg.seed_state, mlsi: cfg.seed_mlsi },
                    mlsi_budget: MlsiBudget::light(cfg.seed_mlsi),
                    ..Default::default()
                };
                let cert = certify(&spec, &name, n, beta, &opts)?;
                let file = format!("n{n}_beta{beta}_ell{ell}.cert.json");
                let path = out_dir.join(&file);
                std::fs::write(&path, serde_json::to_string_pretty(&cert)?)?;
                Ok((
                    format!("certify n={n} beta={beta} ell={ell}"),
                    path,
                    cert.valid,
                    t0.elapsed().as_secs_f64(),
                ))
            })
            .collect()
    });
    let mut artifacts = Vec::new();
    let mut stages = Vec::new();
    let mut all_valid = true;
    for r in results {
        let (stage, path, valid, secs) = r?;
        println!("{stage}: {}", if valid { "VALID" } else { "INVALID" });
        all_valid &= valid;
        stages.push((stage, secs));
        artifacts.push(path);
    }
    let manifest = manifest::RunManifest::collect(cfg, &stages, &artifacts, started.elapsed())?;
    let mpath = out_dir.join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
    println!("wrote {}", mpath.display());
    Ok(if all_valid { 0 } else { 2 })
}

//! Subcommand implementations.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use modalreg::bootstrap::{bootstrap_pointwise_over, bootstrap_uniform_over, BootstrapConfig};
use modalreg::cluster::assign_clusters;
use modalreg::kde::{KdeModel, Kernel};
use modalreg::mode::{build_modal_set, interior_mesh, ModalSet};
use modalreg::predict::{pointwise_band, residual_distances, residual_quantile, uniform_volume};
use modalreg::ridge::lemma11_scan;
use modalreg::synth::{generate, GaussianJointSpec, GmSpec};
use modalreg::{coverage_study, rate_study, select_bandwidth, DataSet, SplitConfig};

use crate::io::{fmt, print_json, read_dataset, read_json, read_mesh, write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Pointwise,
    Uniform,
}

impl KindArg {
    fn name(self) -> &'static str {
        match self {
            KindArg::Pointwise => "pointwise",
            KindArg::Uniform => "uniform",
        }
    }
}

/// Mesh options shared by the fitting commands: either an equispaced
/// interior mesh over the first predictor (`d = 1`) or an explicit file.
#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Number of equispaced mesh points over the predictor range (d = 1).
    #[arg(long, default_value_t = 100)]
    pub mesh: usize,
    /// Fraction of the predictor range trimmed from each boundary.
    #[arg(long, default_value_t = 0.0)]
    pub trim: f64,
    /// Explicit mesh CSV (header x1,..,xd) overriding --mesh/--trim.
    #[arg(long)]
    pub mesh_file: Option<PathBuf>,
}

impl MeshArgs {
    fn build(&self, model: &KdeModel) -> Result<Vec<Vec<f64>>> {
        let mut mesh = match &self.mesh_file {
            Some(path) => read_mesh(path)?,
            None => {
                if model.data().d() != 1 {
                    bail!("--mesh-file is required when d > 1");
                }
                if self.mesh == 0 {
                    bail!("--mesh must be at least 1");
                }
                interior_mesh(model, self.mesh, self.trim)
            }
        };
        mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(mesh)
    }
}

fn x_header(d: usize) -> String {
    (1..=d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",")
}

fn load_model(data: &PathBuf, h: f64) -> Result<KdeModel> {
    let data = read_dataset(data)?;
    Ok(KdeModel::new(data, h, Kernel::Gaussian)?)
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Mixture spec JSON (components + x_range).
    #[arg(long)]
    pub spec: PathBuf,
    /// Sample size.
    #[arg(long)]
    pub n: usize,
    /// RNG seed.
    #[arg(long)]
    pub seed: u64,
    /// Output data CSV (header x1,y).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional component-label CSV (header i,label).
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let spec: GmSpec = read_json(&args.spec)?;
    let (data, labels) = generate(&spec, args.n, args.seed)?;
    let rows: Vec<Vec<String>> = (0..data.n())
        .map(|i| vec![fmt(data.x_row(i)[0]), fmt(data.y(i))])
        .collect();
    write_csv(&args.out, "x1,y", &rows)?;
    if let Some(path) = &args.labels {
        let rows: Vec<Vec<String>> =
            labels.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]).collect();
        write_csv(path, "i,label", &rows)?;
    }
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        components: usize,
        seed: u64,
    }
    print_json(&Summary { n: data.n(), components: spec.k(), seed: args.seed })
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input data CSV (header x1,..,xd,y).
    #[arg(long)]
    pub data: PathBuf,
    /// Kernel bandwidth.
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Output modes CSV (mesh_index,x1..,y,p_yy,label).
    #[arg(long)]
    pub out: PathBuf,
}

fn write_modes(path: &PathBuf, modal: &ModalSet, d: usize) -> Result<()> {
    let header = format!("mesh_index,{},y,p_yy,label", x_header(d));
    let mut rows = Vec::new();
    for (qi, modes) in modal.modes.iter().enumerate() {
        for (mi, mp) in modes.iter().enumerate() {
            let mut row = vec![qi.to_string()];
            row.extend(modal.queries[qi].iter().map(|&v| fmt(v)));
            row.push(fmt(mp.y));
            row.push(fmt(mp.p_yy));
            row.push(modal.labels[qi][mi].to_string());
            rows.push(row);
        }
    }
    write_csv(path, &header, &rows)
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let model = load_model(&args.data, args.h)?;
    let mesh = args.mesh.build(&model)?;
    let modal = build_modal_set(&model, &mesh)?;
    write_modes(&args.out, &modal, model.data().d())?;
    #[derive(Serialize)]
    struct Summary {
        k_hat: usize,
        n_mesh: usize,
        n_mode_points: usize,
    }
    print_json(&Summary {
        k_hat: modal.k_hat(),
        n_mesh: mesh.len(),
        n_mode_points: modal.modes.iter().map(Vec::len).sum(),
    })
}

// ---------------------------------------------------------------- confidence

#[derive(Debug, Args)]
pub struct ConfidenceArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: f64,
    /// Band flavor.
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Miscoverage level in (0, 1).
    #[arg(long)]
    pub alpha: f64,
    /// Bootstrap replicate count.
    #[arg(long, default_value_t = 200)]
    pub b: usize,
    /// RNG seed for the bootstrap resamples.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Output band CSV (mesh_index,x1..,delta).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON header file (kind, alpha, b, seed).
    #[arg(long)]
    pub header: Option<PathBuf>,
}

pub fn confidence(args: &ConfidenceArgs) -> Result<()> {
    let model = load_model(&args.data, args.h)?;
    let mesh = args.mesh.build(&model)?;
    let modal = build_modal_set(&model, &mesh)?;
    let cfg = BootstrapConfig { b: args.b, alpha: args.alpha, seed: args.seed };
    let band = match args.kind {
        KindArg::Pointwise => bootstrap_pointwise_over(&model, &modal, &cfg)?,
        KindArg::Uniform => bootstrap_uniform_over(&model, &modal, &cfg)?,
    };
    let header = format!("mesh_index,{},delta", x_header(model.data().d()));
    let rows: Vec<Vec<String>> = mesh
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            // uniform bands carry one shared width
            let delta = if band.delta.len() == 1 { band.delta[0] } else { band.delta[qi] };
            let mut row = vec![qi.to_string()];
            row.extend(q.iter().map(|&v| fmt(v)));
            row.push(fmt(delta));
            row
        })
        .collect();
    write_csv(&args.out, &header, &rows)?;
    #[derive(Serialize)]
    struct Header<'a> {
        kind: &'a str,
        alpha: f64,
        b: usize,
        seed: u64,
        n_unstable: usize,
    }
    let header = Header {
        kind: args.kind.name(),
        alpha: args.alpha,
        b: args.b,
        seed: args.seed,
        n_unstable: band.unstable.iter().filter(|&&u| u).count(),
    };
    if let Some(path) = &args.header {
        write_json(path, &header)?;
    }
    print_json(&header)
}

// ---------------------------------------------------------------- predict

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Uniform)]
    pub kind: KindArg,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Fit manifolds on a training split and the width on the rest.
    #[arg(long)]
    pub split: bool,
    /// Training fraction for --split.
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
    /// Split seed; required with --split.
    #[arg(long, required_if_eq("split", "true"))]
    pub seed: Option<u64>,
    /// Optional per-mesh-point band CSV (mesh_index,x1..,epsilon).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional residual-distance CSV (i,residual).
    #[arg(long)]
    pub residuals: Option<PathBuf>,
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let (fit_data, eval_data) = if args.split {
        let seed = args.seed.expect("clap enforces --seed with --split");
        data.split(args.train_frac, seed)?
    } else {
        (data.clone(), data.clone())
    };
    let model = KdeModel::new(fit_data, args.h, Kernel::Gaussian)?;
    let mesh = args.mesh.build(&model)?;
    let modal = build_modal_set(&model, &mesh)?;

    let (epsilon, volume, per_point) = match args.kind {
        KindArg::Uniform => {
            let res = residual_distances(&model, &eval_data)?;
            if let Some(path) = &args.residuals {
                let rows: Vec<Vec<String>> =
                    res.iter().enumerate().map(|(i, &r)| vec![i.to_string(), fmt(r)]).collect();
                write_csv(path, "i,residual", &rows)?;
            }
            let eps = residual_quantile(&res, args.alpha)?;
            let volume = if eps.is_finite() && model.data().d() == 1 {
                uniform_volume(&model, &modal, eps)?
            } else {
                f64::INFINITY
            };
            (eps, volume, vec![eps; mesh.len()])
        }
        KindArg::Pointwise => {
            if args.residuals.is_some() {
                bail!("--residuals applies to uniform bands only");
            }
            let band = pointwise_band(&model, &modal, args.alpha)?;
            let eps_max = band.epsilon.iter().cloned().fold(0.0f64, f64::max);
            (eps_max, band.volume, band.epsilon)
        }
    };
    if let Some(path) = &args.out {
        let header = format!("mesh_index,{},epsilon", x_header(model.data().d()));
        let rows: Vec<Vec<String>> = mesh
            .iter()
            .enumerate()
            .map(|(qi, q)| {
                let mut row = vec![qi.to_string()];
                row.extend(q.iter().map(|&v| fmt(v)));
                row.push(fmt(per_point[qi]));
                row
            })
            .collect();
        write_csv(path, &header, &rows)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        kind: &'a str,
        alpha: f64,
        /// Uniform width, or the largest pointwise width.
        epsilon: f64,
        volume: f64,
        n_eval: usize,
    }
    print_json(&Summary {
        kind: args.kind.name(),
        alpha: args.alpha,
        epsilon,
        volume,
        n_eval: eval_data.n(),
    })
}

// ---------------------------------------------------------------- select-h

#[derive(Debug, Args)]
pub struct SelectHArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Split seed for the train/validation halves.
    #[arg(long)]
    pub seed: u64,
    /// Training fraction.
    #[arg(long, default_value_t = 0.5)]
    pub train_frac: f64,
    /// Smallest grid bandwidth; defaults to 0.2 x rule of thumb.
    #[arg(long, requires = "grid_max")]
    pub grid_min: Option<f64>,
    /// Largest grid bandwidth; defaults to 2 x rule of thumb.
    #[arg(long, requires = "grid_min")]
    pub grid_max: Option<f64>,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 20)]
    pub grid_size: usize,
    /// Output curve CSV (h,volume,k_hat,epsilon).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn select_h(args: &SelectHArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let grid = match (args.grid_min, args.grid_max) {
        (Some(lo), Some(hi)) => {
            if !(lo > 0.0 && hi > lo) {
                bail!("need 0 < --grid-min < --grid-max");
            }
            if args.grid_size < 2 {
                bail!("--grid-size must be at least 2 with an explicit range");
            }
            let m = args.grid_size;
            (0..m).map(|k| lo * (hi / lo).powf(k as f64 / (m - 1) as f64)).collect()
        }
        _ => modalreg::default_h_grid(&data),
    };
    let split = SplitConfig { train_frac: args.train_frac, seed: args.seed };
    let sel = select_bandwidth(&data, &grid, args.alpha, &split)?;
    let rows: Vec<Vec<String>> = sel
        .curve
        .iter()
        .map(|p| vec![fmt(p.h), fmt(p.volume), fmt(p.k_hat), fmt(p.epsilon)])
        .collect();
    write_csv(&args.out, "h,volume,k_hat,epsilon", &rows)?;
    #[derive(Serialize)]
    struct Summary {
        h_star: f64,
        grid_size: usize,
        seed: u64,
    }
    print_json(&Summary { h_star: sel.h_star, grid_size: grid.len(), seed: args.seed })
}

// ---------------------------------------------------------------- cluster

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: f64,
    /// Output assignment CSV (i,x1..,y,destination,label).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-cluster summary JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    // manifold linking needs a lexicographically sorted mesh; sort the
    // observations and report back in the original order
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| {
        data.x_row(a)
            .partial_cmp(data.x_row(b))
            .unwrap()
            .then(data.y(a).partial_cmp(&data.y(b)).unwrap())
    });
    let xs: Vec<Vec<f64>> = order.iter().map(|&i| data.x_row(i).to_vec()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| data.y(i)).collect();
    let sorted = DataSet::new(xs.clone(), ys)?;
    let model = KdeModel::new(sorted, args.h, Kernel::Gaussian)?;
    let modal = build_modal_set(&model, &xs)?;
    let clusters = assign_clusters(&model, &modal)?;

    // sorted position of each original row
    let mut pos = vec![0usize; data.n()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let header = format!("i,{},y,destination,label", x_header(data.d()));
    let rows: Vec<Vec<String>> = (0..data.n())
        .map(|i| {
            let p = pos[i];
            let mut row = vec![i.to_string()];
            row.extend(data.x_row(i).iter().map(|&v| fmt(v)));
            row.push(fmt(data.y(i)));
            row.push(fmt(clusters.destinations[p]));
            row.push(clusters.labels[p].map(|l| l.to_string()).unwrap_or_default());
            row
        })
        .collect();
    write_csv(&args.out, &header, &rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        clusters: &'a [modalreg::ClusterSummary],
        n_unassigned: usize,
        k_hat: usize,
    }
    let summary = Summary {
        clusters: &clusters.clusters,
        n_unassigned: clusters.n_unassigned,
        k_hat: modal.k_hat(),
    };
    if let Some(path) = &args.summary {
        write_json(path, &summary)?;
    }
    print_json(&summary)
}

// ---------------------------------------------------------------- ridge-check

#[derive(Debug, Args)]
pub struct RidgeCheckArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Relative alignment tolerance (scaled by the local density).
    #[arg(long, default_value_t = 1e-4)]
    pub tol_rel: f64,
    /// Output report CSV (x1,y,alignment,curvature,zero_px,zero_pxy,member,isotropic).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn ridge_check(args: &RidgeCheckArgs) -> Result<()> {
    let model = load_model(&args.data, args.h)?;
    let mesh = args.mesh.build(&model)?;
    let modal = build_modal_set(&model, &mesh)?;
    let report = lemma11_scan(&model, &modal, args.tol_rel)?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|r| {
            // recompute the premise flags with the scan's thresholds
            let e = model.eval_joint(&[r.x], r.y).unwrap();
            let p = e.p;
            let curv_scale = args.tol_rel * p / (model.h() * model.h());
            let zero_px = e.p_x[0].abs() <= r.tol;
            let zero_pxy =
                e.p_yx[0].abs() <= curv_scale && r.eval.h[1][1] <= r.eval.h[0][0] + curv_scale;
            vec![
                fmt(r.x),
                fmt(r.y),
                fmt(r.alignment),
                fmt(r.curvature),
                (zero_px as u8).to_string(),
                (zero_pxy as u8).to_string(),
                (r.member as u8).to_string(),
                (r.isotropic as u8).to_string(),
            ]
        })
        .collect();
    write_csv(&args.out, "x1,y,alignment,curvature,zero_px,zero_pxy,member,isotropic", &rows)?;
    #[derive(Serialize)]
    struct Summary {
        n_points: usize,
        n_members: usize,
        n_zero_px: usize,
        n_zero_pxy: usize,
        n_violations: usize,
        worst_alignment: f64,
        all_lambda2_negative: bool,
    }
    print_json(&Summary {
        n_points: report.n_points,
        n_members: report.n_members,
        n_zero_px: report.n_zero_px,
        n_zero_pxy: report.n_zero_pxy,
        n_violations: report.n_violations,
        worst_alignment: report.worst_alignment,
        all_lambda2_negative: report.all_lambda2_negative,
    })
}

// ---------------------------------------------------------------- experiment

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Error-decay study against the population mode oracle.
    Rate(RateArgs),
    /// Bootstrap coverage study on the jointly Gaussian design.
    Coverage(CoverageArgs),
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Mixture spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Comma-separated sample sizes (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_grid: Vec<usize>,
    /// Replicates per sample size.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Bandwidth rule h = coef * n^exp.
    #[arg(long, default_value_t = 0.5)]
    pub h_coef: f64,
    #[arg(long, default_value_t = -0.125)]
    pub h_exp: f64,
    /// Output CSV (n,h,mean_sup_error,mean_point_error,mean_ise,n_mismatch).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn experiment_rate(args: &RateArgs) -> Result<()> {
    let spec: GmSpec = read_json(&args.spec)?;
    let (coef, exp) = (args.h_coef, args.h_exp);
    let rule = move |n: usize| coef * (n as f64).powf(exp);
    let report = rate_study(&spec, &args.n_grid, &rule, args.reps, args.seed)?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                fmt(p.h),
                fmt(p.mean_sup_error),
                fmt(p.mean_point_error),
                fmt(p.mean_ise),
                p.n_mismatch.to_string(),
            ]
        })
        .collect();
    write_csv(&args.out, "n,h,mean_sup_error,mean_point_error,mean_ise,n_mismatch", &rows)?;
    #[derive(Serialize)]
    struct Summary {
        slope: f64,
        slope_margin: f64,
        reps: usize,
        seed: u64,
    }
    print_json(&Summary {
        slope: report.slope,
        slope_margin: report.slope_margin,
        reps: args.reps,
        seed: args.seed,
    })
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Jointly Gaussian spec JSON (mean, sxx, sxy, syy).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Comma-separated miscoverage levels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    /// Bootstrap replicates per dataset.
    #[arg(long, default_value_t = 200)]
    pub b: usize,
    /// Monte Carlo datasets.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV (alpha,uniform_coverage,pointwise_coverage,mean_uniform_delta,n_unstable).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn experiment_coverage(args: &CoverageArgs) -> Result<()> {
    let design: GaussianJointSpec = read_json(&args.spec)?;
    let reports = coverage_study(&design, args.n, &args.alphas, args.b, args.reps, args.seed)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                fmt(r.alpha),
                fmt(r.uniform_coverage),
                fmt(r.pointwise_coverage),
                fmt(r.mean_uniform_delta),
                r.n_unstable.to_string(),
            ]
        })
        .collect();
    write_csv(
        &args.out,
        "alpha,uniform_coverage,pointwise_coverage,mean_uniform_delta,n_unstable",
        &rows,
    )?;
    print_json(&reports)
}

//! `limit-laws`: escape rate, CLT, LIL windows, marginal gaps and the joint
//! covariance ellipse.

use anyhow::Result;
use noisewalk::stats::{
    clt_check, clt_samples, lil_extremes, marginal_gaps, mean_sd, median, ray_horizon, sample_joint_ellipse,
    CenteredHom,
};
use noisewalk::Cov2;
use serde::Serialize;

use super::{family_seed, CapError, Experiment, CLT_FAMILY, ELLIPSE_FAMILY, LIL_FAMILY, MARGINAL_FAMILY};
use crate::output::{num, Csv, OutputDir};
use crate::svg::ellipse_scatter;

#[derive(Serialize)]
pub struct LimitLawsResults {
    pub lambda_hat: f64,
    pub lambda_half_width: f64,
    /// LIL scale of `|w_n| − λ̂n`.
    pub sigma_hat: f64,
    /// `|w_n|/n` has zero sample variance.
    pub speed_degenerate: bool,
    /// `Var(φ_*μ) = 0`.
    pub variance_zero: bool,
    /// `κ² = Var(φ_*μ)/λ̂`.
    pub kappa2: Option<f64>,
    /// Why the φ-dependent sections did not run.
    pub skipped: Option<String>,
    pub clt: Vec<CltRow>,
    pub lil: Option<LilSummary>,
    pub marginal: Vec<MarginalRow>,
    /// Medians strictly decreasing along the grid (reported, not asserted).
    pub marginal_decreasing: Option<bool>,
    pub ellipse: Vec<EllipseRow>,
}

#[derive(Serialize)]
pub struct CltRow {
    pub n: usize,
    pub horizon: usize,
    pub trajectories: usize,
    pub ks: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Serialize)]
pub struct LilSummary {
    pub n0: usize,
    pub n1: usize,
    pub horizon: usize,
    pub trajectories: usize,
    pub median_running_max: f64,
    pub median_running_min: f64,
    /// `κ = √κ²`, the predicted limit of the running maximum.
    pub kappa: f64,
}

#[derive(Serialize)]
pub struct MarginalRow {
    pub n: usize,
    pub trajectories: usize,
    pub median_gap: f64,
    pub mean_gap: f64,
}

#[derive(Serialize)]
pub struct EllipseRow {
    pub rho: f64,
    pub t: usize,
    pub samples: usize,
    pub empirical: Cov2,
    pub predicted: Cov2,
    pub discrepancy: f64,
}

fn checked_horizon(exp: &Experiment, t: usize) -> Result<usize> {
    let cfg = &exp.config.limit_laws;
    let n = ray_horizon(t, exp.lambda_hat(), cfg.guard)?;
    if n > cfg.max_horizon {
        return Err(CapError(format!(
            "ray time {t} needs walks of {n} steps, above limit_laws.max_horizon = {}",
            cfg.max_horizon
        ))
        .into());
    }
    Ok(n)
}

pub fn run(exp: &Experiment, out: &mut OutputDir) -> Result<LimitLawsResults> {
    let speed = &exp.speed;
    let mut csv = Csv::new(&[
        "n",
        "trajectories",
        "lambda_hat",
        "half_width",
        "sd",
        "sigma_hat",
        "degenerate",
    ])?;
    csv.row([
        speed.steps.to_string(),
        speed.trajectories.to_string(),
        num(speed.lambda),
        num(speed.half_width),
        num(speed.sd),
        num(speed.sigma),
        speed.degenerate.to_string(),
    ])?;
    out.write_csv("speed.csv", csv)?;

    let mut results = LimitLawsResults {
        lambda_hat: speed.lambda,
        lambda_half_width: speed.half_width,
        sigma_hat: speed.sigma,
        speed_degenerate: speed.degenerate,
        variance_zero: exp.snapshot.var_phi == 0.0,
        kappa2: None,
        skipped: None,
        clt: Vec::new(),
        lil: None,
        marginal: Vec::new(),
        marginal_decreasing: None,
        ellipse: Vec::new(),
    };

    let mut clt_csv = Csv::new(&["n", "horizon", "trajectories", "kappa2", "ks", "mean", "sd"])?;
    let mut lil_csv = Csv::new(&["trajectory", "n0", "n1", "running_max", "running_min"])?;
    let mut marginal_csv = Csv::new(&["n", "trajectories", "median_gap", "mean_gap"])?;
    let mut ellipse_csv = Csv::new(&[
        "rho",
        "t",
        "samples",
        "emp_xx",
        "emp_xy",
        "emp_yy",
        "pred_xx",
        "pred_xy",
        "pred_yy",
        "discrepancy",
    ])?;

    match (&exp.centered, exp.lambda_hat() > 0.0) {
        (Err(reason), _) => {
            if exp.strict {
                return Err(noisewalk::Error::HypothesisViolation(reason.clone()).into());
            }
            results.skipped = Some(reason.clone());
        }
        (Ok(_), false) => results.skipped = Some("λ̂ = 0: rays cannot be approximated".into()),
        (Ok(phi), true) => {
            let kappa2 = exp.snapshot.var_phi / exp.lambda_hat();
            results.kappa2 = Some(kappa2);
            clt_section(exp, phi, kappa2, &mut clt_csv, &mut results)?;
            lil_section(exp, phi, kappa2, &mut lil_csv, &mut results)?;
            marginal_section(exp, phi, &mut marginal_csv, &mut results)?;
            ellipse_section(exp, phi, &mut ellipse_csv, out, &mut results)?;
        }
    }
    out.write_csv("clt.csv", clt_csv)?;
    out.write_csv("lil.csv", lil_csv)?;
    out.write_csv("marginal.csv", marginal_csv)?;
    out.write_csv("ellipse.csv", ellipse_csv)?;
    Ok(results)
}

fn clt_section(
    exp: &Experiment,
    phi: &CenteredHom,
    kappa2: f64,
    csv: &mut Csv,
    res: &mut LimitLawsResults,
) -> Result<()> {
    let cfg = &exp.config.limit_laws;
    for &n in &cfg.clt_n {
        let horizon = checked_horizon(exp, n)?;
        let m = cfg.clt_trajectories;
        let seed = family_seed(exp.seed(), CLT_FAMILY, n as u64);
        let samples = clt_samples(&exp.group, phi, exp.lambda_hat(), n, m, cfg.guard, seed)?;
        let ks = clt_check(&samples, kappa2)?;
        let (mean, sd) = mean_sd(&samples);
        csv.row([
            n.to_string(),
            horizon.to_string(),
            m.to_string(),
            num(kappa2),
            num(ks),
            num(mean),
            num(sd),
        ])?;
        res.clt.push(CltRow {
            n,
            horizon,
            trajectories: m,
            ks,
            mean,
            sd,
        });
    }
    Ok(())
}

fn lil_section(
    exp: &Experiment,
    phi: &CenteredHom,
    kappa2: f64,
    csv: &mut Csv,
    res: &mut LimitLawsResults,
) -> Result<()> {
    let cfg = &exp.config.limit_laws;
    let [n0, n1] = cfg.lil_window;
    let horizon = checked_horizon(exp, n1)?;
    let m = cfg.lil_trajectories;
    let seed = family_seed(exp.seed(), LIL_FAMILY, 0);
    let extremes = lil_extremes(&exp.group, phi, exp.lambda_hat(), (n0, n1), m, cfg.guard, seed)?;
    for (i, (hi, lo)) in extremes.iter().enumerate() {
        csv.row([i.to_string(), n0.to_string(), n1.to_string(), num(*hi), num(*lo)])?;
    }
    let maxima: Vec<f64> = extremes.iter().map(|e| e.0).collect();
    let minima: Vec<f64> = extremes.iter().map(|e| e.1).collect();
    res.lil = Some(LilSummary {
        n0,
        n1,
        horizon,
        trajectories: m,
        median_running_max: median(&maxima),
        median_running_min: median(&minima),
        kappa: kappa2.sqrt(),
    });
    Ok(())
}

fn marginal_section(exp: &Experiment, phi: &CenteredHom, csv: &mut Csv, res: &mut LimitLawsResults) -> Result<()> {
    let cfg = &exp.config.limit_laws;
    let grid = &cfg.marginal_n;
    let n_max = *grid.last().expect("validated non-empty");
    checked_horizon(exp, (exp.lambda_hat() * n_max as f64).floor() as usize)?;
    let m = cfg.marginal_trajectories;
    let seed = family_seed(exp.seed(), MARGINAL_FAMILY, 0);
    let gaps = marginal_gaps(&exp.group, phi, exp.lambda_hat(), grid, m, cfg.guard, seed)?;
    for (&n, g) in grid.iter().zip(&gaps) {
        let row = MarginalRow {
            n,
            trajectories: m,
            median_gap: median(g),
            mean_gap: mean_sd(g).0,
        };
        csv.row([n.to_string(), m.to_string(), num(row.median_gap), num(row.mean_gap)])?;
        res.marginal.push(row);
    }
    res.marginal_decreasing = Some(res.marginal.windows(2).all(|w| w[1].median_gap < w[0].median_gap));
    Ok(())
}

fn ellipse_section(
    exp: &Experiment,
    phi: &CenteredHom,
    csv: &mut Csv,
    out: &mut OutputDir,
    res: &mut LimitLawsResults,
) -> Result<()> {
    let cfg = &exp.config.limit_laws;
    let t = cfg.ellipse_t;
    checked_horizon(exp, t)?;
    for (k, &rho) in cfg.ellipse_rho.iter().enumerate() {
        let seed = family_seed(exp.seed(), ELLIPSE_FAMILY, k as u64);
        let check = sample_joint_ellipse(
            &exp.group,
            phi,
            exp.lambda_hat(),
            rho,
            t,
            cfg.ellipse_pairs,
            cfg.guard,
            seed,
        )?;
        let (e, p) = (check.empirical, check.predicted);
        csv.row([
            num(rho),
            t.to_string(),
            check.samples.to_string(),
            num(e.xx),
            num(e.xy),
            num(e.yy),
            num(p.xx),
            num(p.xy),
            num(p.yy),
            num(check.discrepancy),
        ])?;
        if cfg.svg {
            let title = format!("joint winding at t = {t}, rho = {rho}");
            out.write(
                &format!("ellipse_rho{rho}.svg"),
                ellipse_scatter(&check.points, &p, &title).as_bytes(),
            )?;
        }
        res.ellipse.push(EllipseRow {
            rho,
            t,
            samples: check.samples,
            empirical: e,
            predicted: p,
            discrepancy: check.discrepancy,
        });
    }
    Ok(())
}

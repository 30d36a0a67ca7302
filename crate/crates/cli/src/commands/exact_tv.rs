//! `exact-tv`: exact `‖π^ρ_n − μ_n⊗μ_n‖_TV` and `𝒰^s` on the n grid.

use anyhow::Result;
use noisewalk::exact::{convolve_grid, separation_u_capped, tv_distance};
use noisewalk::measures::noisy_coupling;
use noisewalk::{Error, PairTable};
use serde::Serialize;

use super::Experiment;
use crate::output::{num, Csv, OutputDir};

#[derive(Serialize)]
pub struct ExactTvResults {
    pub rho: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub s_grid: Vec<f64>,
    pub u_max_n: usize,
    pub rows: Vec<ExactTvRow>,
    /// `𝒰^s` cells left empty because the flow network hit the edge cap.
    pub skipped_cells: Vec<SkippedCell>,
}

#[derive(Serialize)]
pub struct ExactTvRow {
    pub rho: f64,
    pub n: usize,
    pub support: usize,
    pub tv: f64,
    /// `𝒰^s` per entry of `s_grid`; `None` when not computed.
    pub u: Vec<Option<f64>>,
}

#[derive(Serialize)]
pub struct SkippedCell {
    pub rho: f64,
    pub n: usize,
    pub s: f64,
    pub reason: String,
}

pub fn run(exp: &Experiment, out: &mut OutputDir) -> Result<ExactTvResults> {
    let cfg = &exp.config.exact_tv;
    let grid = cfg.n_grid.clone().unwrap_or_else(|| exp.config.n_grid.clone());
    let rhos = cfg.rho.clone().unwrap_or_else(|| exp.config.rho.clone());
    let cap = u128::from(cfg.table_cap);

    let singles = convolve_grid(&exp.group, exp.mu.atoms(), &grid, cap)?;
    let products = singles
        .iter()
        .map(|t| {
            let projected = (t.len() as u128).pow(2);
            if projected > cap {
                return Err(Error::TableCapExceeded { projected, cap });
            }
            Ok(PairTable::product(t, t))
        })
        .collect::<noisewalk::Result<Vec<_>>>()?;

    let mut header = vec!["rho".to_string(), "n".into(), "support".into(), "tv".into()];
    header.extend(cfg.s_grid.iter().map(|s| format!("u_s{s}")));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut rows = Vec::new();
    let mut skipped_cells = Vec::new();

    for &rho in &rhos {
        let pi = noisy_coupling(&exp.mu, rho)?;
        let tables = convolve_grid(&exp.group, pi.atoms(), &grid, cap)?;
        for (table, product) in tables.iter().zip(&products) {
            let n = table.steps();
            let tv = tv_distance(table, product);
            let mut u = Vec::with_capacity(cfg.s_grid.len());
            for &s in &cfg.s_grid {
                if n > cfg.u_max_n {
                    u.push(None);
                    continue;
                }
                match separation_u_capped(&exp.group, table, product, s, u128::from(cfg.edge_cap)) {
                    Ok(v) => u.push(Some(v)),
                    Err(e @ Error::EdgeCapExceeded { .. }) => {
                        skipped_cells.push(SkippedCell {
                            rho,
                            n,
                            s,
                            reason: e.to_string(),
                        });
                        u.push(None);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let mut fields = vec![num(rho), n.to_string(), table.len().to_string(), num(tv)];
            fields.extend(u.iter().map(|v| v.map(num).unwrap_or_default()));
            csv.row(fields)?;
            rows.push(ExactTvRow {
                rho,
                n,
                support: table.len(),
                tv,
                u,
            });
        }
    }
    out.write_csv("exact_tv.csv", csv)?;
    Ok(ExactTvResults {
        rho: rhos,
        n_grid: grid,
        s_grid: cfg.s_grid.clone(),
        u_max_n: cfg.u_max_n,
        rows,
        skipped_cells,
    })
}

use std::io::Write;

use rayon::prelude::*;

use super::solve_nonlocal_fixed_points;
use crate::model::{ProblemSpec, Side};
use crate::timemap::{inverse, solve_energy_level};
use crate::{Error, Result};

pub const BIFURCATION_CSV_HEADER: &str = "lambda,k,branch_index,d_star,E,v0,sup_u";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationRow {
    pub lambda: f64,
    pub k: usize,
    pub branch_index: usize,
    pub d_star: f64,
    pub energy: f64,
    pub v0: f64,
    pub sup_u: f64,
}

/// Fixed points `d*` per `k` over a uniform `lambda` grid.
#[derive(Debug, Clone)]
pub struct BifurcationDiagram {
    pub lambda_grid: Vec<f64>,
    /// Ordered by `lambda`, then `k`, then branch.
    pub rows: Vec<BifurcationRow>,
    pub warnings: Vec<String>,
}

impl BifurcationDiagram {
    pub fn rows_at(&self, lambda: f64) -> impl Iterator<Item = &BifurcationRow> {
        self.rows.iter().filter(move |r| r.lambda == lambda)
    }

    /// Number of branches (counted once per `+-` pair) at `lambda`.
    pub fn branch_count(&self, lambda: f64) -> usize {
        self.rows_at(lambda).count()
    }

    pub fn d_stars(&self, lambda: f64, k: usize) -> Vec<f64> {
        self.rows_at(lambda).filter(|r| r.k == k).map(|r| r.d_star).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{BIFURCATION_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.lambda, r.k, r.branch_index, r.d_star, r.energy, r.v0, r.sup_u
            )?;
        }
        Ok(())
    }
}

/// Sweeps `steps` equally spaced values of `lambda` in
/// `[lambda_min, lambda_max]` (both ends included). One row per branch with
/// positive first arch; for a reaction term that is not odd the branches
/// starting negative follow with continued branch indices.
pub fn bifurcation_diagram(
    template: &ProblemSpec,
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
) -> Result<BifurcationDiagram> {
    template.require_unforced()?;
    if steps == 0 {
        return Err(Error::InvalidInput("bifurcation sweep needs at least one step".into()));
    }
    if !(lambda_min > 0.0 && lambda_min.is_finite() && lambda_max.is_finite() && lambda_min <= lambda_max) {
        return Err(Error::InvalidInput(format!("invalid lambda range [{lambda_min}, {lambda_max}]")));
    }
    if steps > 1 && lambda_min == lambda_max {
        return Err(Error::InvalidInput("empty lambda range".into()));
    }
    let lambda_grid: Vec<f64> = if steps == 1 {
        vec![lambda_min]
    } else {
        (0..steps)
            .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let per_lambda = lambda_grid
        .par_iter()
        .map(|&lambda| rows_for(template, lambda))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (r, w) in per_lambda {
        rows.extend(r);
        warnings.extend(w);
    }
    Ok(BifurcationDiagram { lambda_grid, rows, warnings })
}

fn rows_for(template: &ProblemSpec, lambda: f64) -> Result<(Vec<BifurcationRow>, Vec<String>)> {
    let spec = template.with_lambda(lambda)?;
    let nl = spec.nonlinearity();
    let diffusion = spec.diffusion();
    let m = diffusion.lower_bound_m().min(diffusion.a(0.0));
    let sides: &[Side] = if nl.is_odd() { &[Side::Plus] } else { &[Side::Plus, Side::Minus] };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut k = 1usize;
    while m * std::f64::consts::PI.powi(2) * ((k * k) as f64) < lambda {
        let mut branch_index = 0;
        for &sign in sides {
            let scan = solve_nonlocal_fixed_points(k, sign, &spec)?;
            warnings.extend(scan.warnings.into_iter().map(|w| format!("lambda = {lambda}: {w}")));
            for root in scan.roots {
                let lambda_tilde = lambda / diffusion.a(root.d);
                let level = solve_energy_level(nl, k, lambda_tilde, sign)?;
                let mut sup_u = inverse(nl, sign, level.energy)?.abs();
                if k > 1 {
                    sup_u = sup_u.max(inverse(nl, sign.flip(), level.energy)?.abs());
                }
                rows.push(BifurcationRow {
                    lambda,
                    k,
                    branch_index,
                    d_star: root.d,
                    energy: level.energy,
                    v0: sign.sign() * (2.0 * lambda_tilde * level.energy).sqrt(),
                    sup_u,
                });
                branch_index += 1;
            }
        }
        k += 1;
    }
    Ok((rows, warnings))
}

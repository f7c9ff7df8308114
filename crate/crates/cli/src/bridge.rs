//! `bridgekit bridge`: moment curves and densities of the displacement,
//! heat and OU interpolations between `N(x0, 1)` and `N(x1, 1)`.

use std::path::{Path, PathBuf};

use bridgekit_core::dynamics::uniform_times;
use bridgekit_core::gaussian_bridge::printed::PrintedOuParams;
use bridgekit_core::gaussian_bridge::{bridge_moments, BridgeMoment};
use bridgekit_core::measures::{mccann_interpolation, GaussianMeasure};

use crate::config::{KernelChoice, ProblemConfig};
use crate::error::CliResult;
use crate::output::{ensure_dir, write_numeric_csv, write_svg, Panel, Series, Stroke};

pub const MOMENTS_HEADER: [&str; 7] = ["t", "mean_mccann", "mean_heat", "mean_ou", "var_mccann", "var_heat", "var_ou"];
pub const DENSITY_HEADER: [&str; 4] = ["x", "mccann", "heat", "ou"];
pub const PRINTED_OU_HEADER: [&str; 3] = ["t", "mean", "var"];
pub const DENSITY_TIMES: [(f64, &str); 3] =
    [(0.0, "density_t0.csv"), (0.5, "density_t0.5.csv"), (1.0, "density_t1.csv")];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub mccann: GaussianMeasure,
    pub heat: BridgeMoment,
    pub ou: BridgeMoment,
}

impl MomentRow {
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.t,
            self.mccann.mean(),
            self.heat.mean,
            self.ou.mean,
            self.mccann.variance(),
            self.heat.variance,
            self.ou.variance,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct BridgeFiles {
    pub moments: PathBuf,
    pub densities: Vec<PathBuf>,
    pub printed_ou: PathBuf,
    pub svg: PathBuf,
}

fn moment_row(cfg: &ProblemConfig, t: f64) -> CliResult<MomentRow> {
    let g0 = GaussianMeasure::new(cfg.x0, 1.0)?;
    let g1 = GaussianMeasure::new(cfg.x1, 1.0)?;
    let heat = cfg.model_for(KernelChoice::Heat, cfg.epsilon)?;
    let ou = cfg.model_for(KernelChoice::Ou, cfg.epsilon)?;
    Ok(MomentRow {
        t,
        mccann: mccann_interpolation(&g0, &g1, t)?,
        heat: bridge_moments(&heat, cfg.x0, cfg.x1, t)?,
        ou: bridge_moments(&ou, cfg.x0, cfg.x1, t)?,
    })
}

pub fn moments_table(cfg: &ProblemConfig) -> CliResult<Vec<MomentRow>> {
    uniform_times(cfg.time_samples).into_iter().map(|t| moment_row(cfg, t)).collect()
}

/// Writes all CSV files, then the SVG.
pub fn cmd_bridge(cfg: &ProblemConfig, out: &Path) -> CliResult<BridgeFiles> {
    ensure_dir(out)?;
    let table = moments_table(cfg)?;
    let rows: Vec<Vec<f64>> = table.iter().map(MomentRow::values).collect();
    let moments = write_numeric_csv(&out.join("moments.csv"), &MOMENTS_HEADER, &rows)?;

    let grid = cfg.grid()?;
    let mut densities = Vec::new();
    for (t, name) in DENSITY_TIMES {
        let row = moment_row(cfg, t)?;
        let (heat, ou) = (row.heat.gaussian()?, row.ou.gaussian()?);
        let rows: Vec<Vec<f64>> =
            grid.points().map(|x| vec![x, row.mccann.density(x), heat.density(x), ou.density(x)]).collect();
        densities.push(write_numeric_csv(&out.join(name), &DENSITY_HEADER, &rows)?);
    }

    let printed = PrintedOuParams::new(cfg.epsilon, cfg.x0, cfg.x1);
    let rows = uniform_times(cfg.time_samples)
        .into_iter()
        .map(|t| printed.moments(t).map(|m| vec![t, m.mean, m.variance]))
        .collect::<Result<Vec<_>, _>>()?;
    let printed_ou = write_numeric_csv(&out.join("ou_printed.csv"), &PRINTED_OU_HEADER, &rows)?;

    let curve = |label: &str, stroke, f: &dyn Fn(&MomentRow) -> f64| Series {
        label: label.into(),
        stroke,
        points: table.iter().map(|r| (r.t, f(r))).collect(),
    };
    let panels = [
        Panel {
            title: format!("Mean, x0 = {}, x1 = {}, ε = {}", cfg.x0, cfg.x1, cfg.epsilon),
            series: vec![
                curve("McCann", Stroke::Dotted, &|r| r.mccann.mean()),
                curve("heat", Stroke::Dashed, &|r| r.heat.mean),
                curve("OU", Stroke::Solid, &|r| r.ou.mean),
            ],
        },
        Panel {
            title: format!("Variance, ε = {}", cfg.epsilon),
            series: vec![
                curve("McCann", Stroke::Dotted, &|r| r.mccann.variance()),
                curve("heat", Stroke::Dashed, &|r| r.heat.variance),
                curve("OU", Stroke::Solid, &|r| r.ou.variance),
            ],
        },
    ];
    let svg = write_svg(&out.join("bridge.svg"), &panels)?;
    Ok(BridgeFiles { moments, densities, printed_ou, svg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_invariants() {
        let table = moments_table(&ProblemConfig::default()).unwrap();
        assert_eq!(table.len(), 41);
        let (first, last) = (table[0], table[40]);
        assert_eq!((first.heat.variance, last.heat.variance), (1.0, 1.0));
        assert_eq!((first.ou.variance, last.ou.variance), (1.0, 1.0));
        for r in &table {
            assert!((r.mccann.mean() - r.heat.mean).abs() <= 1e-10);
        }
    }

    #[test]
    fn asymmetric_means_are_monotone() {
        let cfg = ProblemConfig { x0: 1.0, x1: 7.0, ..ProblemConfig::default() };
        let table = moments_table(&cfg).unwrap();
        for w in table.windows(2) {
            assert!(w[1].heat.mean > w[0].heat.mean);
            assert!(w[1].ou.mean > w[0].ou.mean);
        }
        assert_eq!(table[0].ou.mean, 1.0);
        assert_eq!(table[40].ou.mean, 7.0);
    }
}

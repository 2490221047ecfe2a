use std::fmt::Write;
use std::io;
use std::path::PathBuf;

use multibeta::beta::{
    beta_integralgeometric, beta_p_cube, carleson_sum, exponent_label, index_label, records_csv, CarlesonReport,
};
use multibeta::geometry::ParabolicDyadic;
use multibeta::parabolic::{parabolic_carleson_sum, rademacher_probe, ParabolicCoefficients};
use multibeta::reconstruct::{verify_form1, ReconstructionReport};
use multibeta::verify::run_suite;
use multibeta::Error;

use crate::config::{ConfigError, Loaded};
use crate::output::{config_hash, Artifacts};
use crate::svg;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(Error),
    Io(io::Error),
    /// The property suite ran but some property failed.
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(
                Error::InvalidInput(_) | Error::Unsupported(_) | Error::Parse { .. } | Error::OutOfDomain { .. },
            ) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::VerifyFailed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(e) => write!(f, "error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::VerifyFailed(k) => write!(f, "{k} propert{} failed", if *k == 1 { "y" } else { "ies" }),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Carleson,
    Igbeta,
    Reconstruct,
    Parabolic,
    Rademacher,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Carleson => "carleson",
            Command::Igbeta => "igbeta",
            Command::Reconstruct => "reconstruct",
            Command::Parabolic => "parabolic",
            Command::Rademacher => "rademacher",
            Command::Verify => "verify",
        }
    }
}

pub struct Run<'a> {
    pub loaded: &'a Loaded,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Run<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn require_space_time(&self, what: &str) -> Result<(), CliError> {
        if self.loaded.dim < 2 {
            return Err(
                Error::InvalidInput(format!("{what} needs n >= 2, the field has n = {}", self.loaded.dim)).into()
            );
        }
        Ok(())
    }

    pub fn execute(&self, cmd: Command) -> Result<PathBuf, CliError> {
        let mut art = Artifacts::new(self.out.clone())?;
        let result = match cmd {
            Command::Analyze => self.analyze(&mut art),
            Command::Carleson => self.carleson(&mut art),
            Command::Igbeta => self.igbeta(&mut art),
            Command::Reconstruct => self.reconstruct(&mut art),
            Command::Parabolic => self.parabolic(&mut art),
            Command::Rademacher => self.rademacher(&mut art),
            Command::Verify => self.verify(&mut art),
        };
        let failed = match result {
            Ok(()) => None,
            Err(CliError::VerifyFailed(k)) => Some(k),
            Err(e) => return Err(e),
        };
        let grid = match &self.loaded.grid_path {
            Some(p) => Some(std::fs::read(p)?),
            None => None,
        };
        let hash = config_hash(&self.loaded.canonical(), grid.as_deref());
        let manifest = art.finish(cmd.name(), hash, self.loaded.config.seed)?;
        match failed {
            Some(k) => Err(CliError::VerifyFailed(k)),
            None => Ok(manifest),
        }
    }

    fn analyze(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        let mut records = Vec::new();
        for level in self.loaded.root().descendants(cfg.depth) {
            for cube in level {
                let region = cube.to_box().dilate(cfg.dilation);
                for p in &cfg.exponents {
                    let mut r = beta_p_cube(f, &region, p.0, &cfg.quadrature, cfg.bound)?;
                    r.dilation = cfg.dilation;
                    records.push((cube.level, cube.index.clone(), r));
                }
            }
        }
        let csv = records_csv(records.iter().map(|(l, i, r)| (*l, i.as_slice(), r)));
        art.write("analyze.csv", &csv)?;
        self.say(format!("analyze: {} coefficients written", records.len()));
        Ok(())
    }

    fn packing_outputs(&self, art: &mut Artifacts, prefix: &str, report: &CarlesonReport) -> Result<(), CliError> {
        art.write(&format!("{prefix}_levels.csv"), &report.levels_csv())?;
        art.write(&format!("{prefix}_cubes.csv"), &report.cubes_csv())?;
        art.write(
            &format!("{prefix}_levels.svg"),
            &svg::level_bars(report, &format!("{prefix}: contribution per depth")),
        )?;
        self.say(format!(
            "{prefix}: S(J) = {:.6e}, ratio = {:.6e}",
            report.total(),
            report.ratios.last().copied().unwrap_or(0.0)
        ));
        Ok(())
    }

    fn carleson(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        let root = self.loaded.root();
        for sel in &cfg.selectors {
            let report = carleson_sum(f, &root, cfg.dilation, cfg.depth, *sel, &cfg.quadrature)?;
            let prefix = format!("carleson_{}", sel.label());
            self.packing_outputs(art, &prefix, &report)?;
            if self.loaded.dim == 2 {
                let cells: Vec<_> = report
                    .cubes
                    .iter()
                    .filter(|c| c.depth == cfg.depth)
                    .map(|c| {
                        let side = 2f64.powi(-c.level);
                        (c.index[0] as f64 * side, c.index[1] as f64 * side, side, side, c.value)
                    })
                    .collect();
                let title = format!("{} over leaf cubes at depth {}", sel.label(), cfg.depth);
                art.write(&format!("{prefix}_heatmap.svg"), &svg::heatmap(&cells, &title, "x1", "x2"))?;
            }
        }
        Ok(())
    }

    fn igbeta(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        let region = self.loaded.region();
        let n = self.loaded.dim;
        let m = cfg.igbeta.m.unwrap_or(if n >= 2 { n - 1 } else { 1 });
        let r = beta_integralgeometric(f, &region, m, cfg.igbeta.p.0, cfg.igbeta.q, &cfg.quadrature)?;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        let csv = format!(
            "min,sides,m,p,q,value,stderr,samples\n{},{},{},{},{},{:.12e},{:.6e},{}\n",
            join(&region.min),
            join(&region.sides),
            r.m,
            exponent_label(r.p),
            exponent_label(cfg.igbeta.q),
            r.value,
            r.stderr,
            r.samples
        );
        art.write("igbeta.csv", &csv)?;
        self.say(format!("igbeta: {:.6e} +- {:.2e} over {} slices", r.value, r.stderr, r.samples));
        Ok(())
    }

    fn reconstruct(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        self.require_space_time("reconstruct")?;
        let report = verify_form1(f, &self.loaded.region(), &cfg.reconstruct, &cfg.quadrature)?;
        art.write(
            "reconstruct.csv",
            &format!("{}\n{}\n", ReconstructionReport::CSV_HEADER, report.csv_row().trim_end()),
        )?;
        art.write("reconstruct_planes.csv", &planes_csv(&report))?;
        if self.loaded.dim == 2 {
            art.write("reconstruct.svg", &svg::reconstruction(&report))?;
        }
        self.say(format!(
            "reconstruct: accepted = {}, beta2(cQ) = {:.6e}, beta(CQ) = {:.6e}, ratio = {:.4}",
            report.selection.accepted, report.beta2_small, report.combined.value, report.ratio
        ));
        Ok(())
    }

    fn parabolic(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        self.require_space_time("parabolic")?;
        let root = self.loaded.parabolic_root();
        let mut table = format!("depth,level,index,{}", ParabolicCoefficients::CSV_HEADER);
        if let Some(b) = self.loaded.parabolic_box() {
            let c = ParabolicCoefficients::compute(f, &b, &cfg.quadrature, cfg.bound)?;
            table.push_str(&format!(",,,{}", c.csv_row()));
        }
        for (depth, level) in root.descendants(cfg.table_depth).into_iter().enumerate() {
            for q in level {
                let c = ParabolicCoefficients::compute(f, &q.to_box(), &cfg.quadrature, cfg.bound)?;
                table.push_str(&format!("{depth},{},{},{}", q.level, index_label(&full_index(&q)), c.csv_row()));
            }
        }
        art.write("parabolic.csv", &table)?;
        for sel in &cfg.parabolic_selectors {
            let report = parabolic_carleson_sum(f, &root, cfg.dilation, cfg.depth, *sel, &cfg.quadrature)?;
            let prefix = format!("parabolic_{}", sel.label());
            self.packing_outputs(art, &prefix, &report)?;
            if self.loaded.dim == 2 {
                let cells: Vec<_> = report
                    .cubes
                    .iter()
                    .filter(|c| c.depth == cfg.depth)
                    .map(|c| {
                        let side = 2f64.powi(-c.level);
                        let dt = side * side;
                        (c.index[0] as f64 * side, c.index[1] as f64 * dt, side, dt, c.value)
                    })
                    .collect();
                let title = format!("{} over leaf boxes at depth {}", sel.label(), cfg.depth);
                art.write(&format!("{prefix}_heatmap.svg"), &svg::heatmap(&cells, &title, "x", "t"))?;
            }
        }
        Ok(())
    }

    fn rademacher(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let f = self.loaded.field()?;
        self.require_space_time("rademacher")?;
        let base = cfg.probe.base.clone().unwrap_or_else(|| self.loaded.region().center());
        let probe = rademacher_probe(f, &base, &cfg.probe.radii, &cfg.quadrature)?;
        art.write("probe.csv", &probe.to_csv())?;
        let slope = probe.slope.map_or(String::new(), |s| format!("{s:.12e}"));
        let grad = probe.linear.gradient.iter().map(|g| format!("{g:.12e}")).collect::<Vec<_>>().join(" ");
        let base_label = base.iter().map(|b| format!("{b}")).collect::<Vec<_>>().join(" ");
        art.write("probe_summary.csv", &format!("base,gradient,slope\n{base_label},{grad},{slope}\n"))?;
        self.say(format!("rademacher: slope = {}", if slope.is_empty() { "undefined" } else { &slope }));
        Ok(())
    }

    fn verify(&self, art: &mut Artifacts) -> Result<(), CliError> {
        let cfg = &self.loaded.config;
        let report = run_suite(&cfg.verify, &cfg.quadrature)?;
        art.write("verify.csv", &report.to_csv())?;
        for r in &report.rows {
            self.say(format!(
                "{} {}: {} of {} cases failed, worst {:.3e} (threshold {:.3e})",
                if r.passed() { "PASS" } else { "FAIL" },
                r.property,
                r.failures,
                r.cases,
                r.worst,
                r.threshold
            ));
        }
        let failed = report.rows.iter().filter(|r| !r.passed()).count();
        if failed > 0 {
            return Err(CliError::VerifyFailed(failed));
        }
        Ok(())
    }
}

fn full_index(q: &ParabolicDyadic) -> Vec<i64> {
    let mut idx = q.space_index.clone();
    idx.push(q.time_index);
    idx
}

/// Base and perturbed planes of a reconstruction in unit-cube coordinates.
fn planes_csv(report: &ReconstructionReport) -> String {
    let s = &report.selection;
    let mut out = String::from("j,kind,normal,offset,metric,plane_beta\n");
    let fmt_normal = |v: &[f64]| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(" ");
    for (j, h) in s.base.iter().enumerate() {
        let _ = writeln!(out, "{j},base,{},{:.12e},,", fmt_normal(&h.normal), h.offset);
    }
    for (j, h) in s.perturbed.iter().enumerate() {
        let _ = writeln!(
            out,
            "{j},perturbed,{},{:.12e},{:.12e},{:.12e}",
            fmt_normal(&h.normal),
            h.offset,
            s.metrics[j],
            s.plane_betas[j]
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(ConfigError { line: None, msg: String::new() }).exit_code(), 2);
        assert_eq!(CliError::Numerical(Error::InvalidInput(String::new())).exit_code(), 2);
        assert_eq!(CliError::Numerical(Error::DegenerateBox(String::new())).exit_code(), 3);
        assert_eq!(CliError::Numerical(Error::RankDeficient { pivot: 0.0 }).exit_code(), 3);
        assert_eq!(CliError::VerifyFailed(1).exit_code(), 1);
    }
}

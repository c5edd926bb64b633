use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plurigeo::convex::ToricFunction;
use plurigeo::geodesics::{
    energy_profile, fmt17, geodesic_family, singular_collapse_check, uniform_samples, FamilyOptions, GeodesicFamily,
    Method,
};
use plurigeo::monge_ampere::{
    balance_vector, energy, energy_identity_check, ibp_check, ma_measure, AtomicMeasure, EnergyReport, Normalization,
    PairingCheck,
};
use plurigeo::toric_sets::{capacity, reverse_bm_check, Resolution, ToricCompact};
use plurigeo::verify::{run_all, run_selected, VerifyOptions, CRITERIA};
use plurigeo::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Cli, Command, Failure, Format};

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::SingularEndpoint { .. } | Error::InfiniteEnergy { .. } => {
                Failure::Obstruction(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    validate(cli)?;
    fs::create_dir_all(&cli.out).map_err(|e| io_failure(&cli.out, e))?;
    match &cli.command {
        Command::Geodesic => geodesic(cli),
        Command::Capacity => capacity_cmd(cli),
        Command::Energy => energy_cmd(cli),
        Command::Verify { drop_factorial, only } => verify(cli, *drop_factorial, only),
    }
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    let positive = |name: &str, v: Option<f64>| match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(Failure::Validation(format!("--{name} must be positive, got {x}")))
        }
        _ => Ok(()),
    };
    positive("h", cli.h)?;
    positive("S", cli.side)?;
    positive("tol", cli.tol)?;
    if let (Some(h), Some(s)) = (cli.h, cli.side) {
        let r = s / h;
        if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
            return Err(Failure::Validation(format!("--h {h} does not divide --S {s}")));
        }
    }
    if cli.t_steps.is_some_and(|n| n < 3) {
        return Err(Failure::Validation("--t-steps must be at least 3".into()));
    }
    Ok(())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Validation(format!("{}: {e}", path.display()))
}

fn read_input<T: DeserializeOwned>(cli: &Cli) -> Result<T, Failure> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| Failure::Validation("--input is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write(cli: &Cli, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = cli.out.join(name);
    fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeodesicInput {
    u0: ToricFunction,
    u1: ToricFunction,
    #[serde(default)]
    method: Option<Method>,
    /// Interior samples; defaults to the rows of the `t` grid.
    #[serde(default)]
    t: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EnergyRow {
    t: f64,
    /// `None` for slices carrying pole mass.
    energy: Option<f64>,
}

#[derive(Serialize)]
struct EnergyTable {
    rows: Vec<EnergyRow>,
    linearity_residual: Option<f64>,
    convexity_violation: Option<f64>,
    concavity_violation: Option<f64>,
}

fn energy_table(fam: &GeodesicFamily) -> Result<EnergyTable, Failure> {
    let mut rows = Vec::new();
    for (t, u) in fam.rows() {
        let e = match energy(u) {
            Ok(e) => Some(e),
            Err(Error::InfiniteEnergy { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        rows.push(EnergyRow { t, energy: e });
    }
    let finite: Option<Vec<(f64, f64)>> = rows.iter().map(|r| r.energy.map(|e| (r.t, e))).collect();
    let profile = finite.map(energy_profile);
    Ok(EnergyTable {
        linearity_residual: profile.as_ref().map(|p| p.linearity_residual),
        convexity_violation: profile.as_ref().map(|p| p.convexity_violation),
        concavity_violation: profile.as_ref().map(|p| p.concavity_violation),
        rows,
    })
}

fn geodesic(cli: &Cli) -> Result<(), Failure> {
    let input: GeodesicInput = read_input(cli)?;
    let opts = FamilyOptions {
        side: cli.side.unwrap_or(4.0),
        h: cli.h.unwrap_or(0.02),
        t_steps: cli.t_steps.unwrap_or(11),
        tol: cli.tol.unwrap_or(1e-9),
        ..FamilyOptions::default()
    };
    let method = input.method.unwrap_or(Method::Legendre);
    if method == Method::Custom {
        return Err(Failure::Validation("method \"custom\" needs explicit slices".into()));
    }
    let ts = input.t.unwrap_or_else(|| uniform_samples(opts.t_steps));
    let fam = match geodesic_family(&input.u0, &input.u1, &ts, method, &opts) {
        Ok(fam) => fam,
        Err(e @ (Error::NoConvergence { .. } | Error::SingularEndpoint { .. })) => {
            let detail = match singular_collapse_check(&input.u0, &input.u1, &opts) {
                Ok(report) => {
                    let path = write(cli, "collapse.json", &to_json(&report))?;
                    format!("collapse report written to {}", path.display())
                }
                Err(c) => format!("collapse check unavailable: {c}"),
            };
            return Err(Failure::Obstruction(format!("{e}; {detail}")));
        }
        Err(e) => return Err(e.into()),
    };
    write(cli, "family.json", &to_json(&fam))?;
    let table = energy_table(&fam)?;
    match cli.format {
        Format::Csv => {
            let mut csv = String::from("t,energy\n");
            for r in &table.rows {
                let e = r.energy.map_or_else(|| "-inf".to_string(), fmt17);
                let _ = writeln!(csv, "{},{e}", fmt17(r.t));
            }
            write(cli, "energy.csv", &csv)?;
            write(cli, "diagnostics.csv", &fam.to_csv())?;
        }
        Format::Json => {
            write(cli, "energy.json", &to_json(&table))?;
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityInput {
    sets: Vec<ToricCompact>,
    #[serde(default)]
    t: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct SingleCapacity {
    capacity: f64,
}

fn capacity_cmd(cli: &Cli) -> Result<(), Failure> {
    let input: CapacityInput = read_input(cli)?;
    let res = Resolution::new(cli.side.unwrap_or(4.0), cli.h.unwrap_or(0.05));
    let name = format!("capacity.{}", cli.format.ext());
    match input.sets.as_slice() {
        [k] => {
            let cap = capacity(k, &res)?;
            let body = match cli.format {
                Format::Csv => format!("capacity\n{}\n", fmt17(cap)),
                Format::Json => to_json(&SingleCapacity { capacity: cap }),
            };
            write(cli, &name, &body)?;
        }
        [k0, k1] => {
            let ts = input.t.unwrap_or_else(|| {
                let n = cli.t_steps.unwrap_or(11);
                (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
            });
            let report = reverse_bm_check(k0, k1, &ts, &res)?;
            let body = match cli.format {
                Format::Csv => {
                    let mut csv = String::from("t,capacity,bound,margin\n");
                    for r in &report.rows {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{}",
                            fmt17(r.t),
                            fmt17(r.capacity),
                            fmt17(r.bound),
                            fmt17(r.margin)
                        );
                    }
                    csv
                }
                Format::Json => to_json(&report),
            };
            write(cli, &name, &body)?;
            if !report.ok {
                eprintln!("warning: Brunn-Minkowski margin below -{:e}", report.tol);
            }
        }
        _ => {
            return Err(Failure::Validation(format!(
                "expected one or two sets, got {}",
                input.sets.len()
            )))
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyInput {
    u: ToricFunction,
    #[serde(default)]
    v: Option<ToricFunction>,
}

#[derive(Serialize)]
struct PairReport {
    energy: f64,
    identity: PairingCheck,
    symmetry: PairingCheck,
    balance: EnergyReport,
}

#[derive(Serialize)]
struct EnergyOutput {
    energy: f64,
    measure: AtomicMeasure,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<PairReport>,
}

fn energy_cmd(cli: &Cli) -> Result<(), Failure> {
    let input: EnergyInput = read_input(cli)?;
    let u = &input.u;
    let out = EnergyOutput {
        energy: energy(u)?,
        measure: ma_measure(u),
        pair: match &input.v {
            None => None,
            Some(v) => Some(PairReport {
                energy: energy(v)?,
                identity: energy_identity_check(u, v)?,
                symmetry: ibp_check(u, v, &[])?,
                balance: balance_vector(u, v)?,
            }),
        },
    };
    let body = match cli.format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut csv = String::from("quantity,value\n");
            let mut row = |k: &str, v: f64| {
                let _ = writeln!(csv, "{k},{}", fmt17(v));
            };
            row("energy_u", out.energy);
            row("mass_u", out.measure.total_mass);
            if let Some(p) = &out.pair {
                row("energy_v", p.energy);
                row("identity_residual", p.identity.residual);
                row("symmetry_residual", p.symmetry.residual);
                for (k, e) in p.balance.mixed_vector.iter().enumerate() {
                    row(&format!("mixed_energy_{k}"), *e);
                }
                row("balanced", if p.balance.balance_ok { 1.0 } else { 0.0 });
            }
            csv
        }
    };
    write(cli, &format!("energy.{}", cli.format.ext()), &body)?;
    Ok(())
}

fn verify(cli: &Cli, drop_factorial: bool, only: &[usize]) -> Result<(), Failure> {
    if let Some(id) = only.iter().find(|&&id| id == 0 || id > CRITERIA.len()) {
        return Err(Failure::Validation(format!(
            "no criterion {id}; ids run from 1 to {}",
            CRITERIA.len()
        )));
    }
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        seed: cli.seed,
        grid_h: cli.h.unwrap_or(defaults.grid_h),
        side: cli.side.unwrap_or(defaults.side),
        normalization: if drop_factorial {
            Normalization::Real
        } else {
            Normalization::Complex
        },
        ..defaults
    };
    let report = if only.is_empty() {
        run_all(&opts)
    } else {
        run_selected(only, &opts)
    };
    for c in &report.criteria {
        println!(
            "criterion {:>2} [{}] {}: {}",
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    write(cli, "verify.json", &to_json(&report))?;
    if cli.format == Format::Csv {
        let mut csv = String::from("id,name,pass,seconds\n");
        for c in &report.criteria {
            let _ = writeln!(csv, "{},{},{},{}", c.id, c.name, c.pass, fmt17(c.seconds));
        }
        write(cli, "verify.csv", &csv)?;
    }
    let failed = report.criteria.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::Verification(format!(
            "{failed} of {} criteria failed",
            report.criteria.len()
        )));
    }
    Ok(())
}

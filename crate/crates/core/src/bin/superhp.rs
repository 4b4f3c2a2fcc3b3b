use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use superhp::adapt::{lift, parammain_check, LiftConfig, LiftProblem, LiftedForm};
use superhp::checks::{run_all, Tolerances};
use superhp::deformation::{
    chi_tilde_properties, dirichlet_series, h1_dims_example_i, h1_dims_example_ii, h1_fox, infinitesimal_classes,
    OmegaN, PLattice, PLatticeFile, ParabolicNormalForm,
};
use superhp::grassmann::{Algebra, ParamSpec};
use superhp::lattices::{
    build_embedded_sl2z, build_eta_lattice, build_genus2, build_punctured_torus, EtaCase, Family, Lattice, LatticeFile,
};
use superhp::moebius::SuperPoint;
use superhp::riemann_roch::DimensionCalculator;
use superhp::superfunctions::{eta_squared, theta_squared, QExpansion, QExpansionFile, QSuperFunction};
use superhp::supermatrix::{MatrixFile, SuperMatrix};
use superhp::Error;

#[derive(Parser)]
#[command(name = "superhp", version, about = "Super automorphic forms: checks, dimension tables, deformations and lifts")]
struct Cli {
    #[command(flatten)]
    cfg: Config,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Config {
    /// Residual tolerance for checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// q-expansion truncation.
    #[arg(long, global = true, default_value_t = 60)]
    trunc: usize,
    /// Weight from which H¹ vanishing is assumed; computed when omitted.
    #[arg(long, global = true)]
    k1: Option<i64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Sl2z,
    EtaEven,
    EtaOdd,
    Genus2,
    PuncturedTorus,
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "lattice")]
    preset: Option<Preset>,
    /// Lattice file (JSON).
    #[arg(long)]
    lattice: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Group-element checks.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Print a classical q-expansion.
    Qexp { name: QName },
    /// Lattice presentations.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Dimension table of sM_k^ρ and sS_k^ρ.
    Dims {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 0)]
        rho: usize,
        #[arg(long, default_value_t = 0)]
        k_from: i64,
        #[arg(long, default_value_t = 24)]
        k_to: i64,
        /// Accepted for compatibility; TSV is selected with --format tsv.
        #[arg(long)]
        table: bool,
    },
    /// Deformations of lattices.
    Deform {
        #[command(subcommand)]
        cmd: DeformCmd,
    },
    /// Lift classical forms to a deformed lattice.
    Adapt {
        #[arg(long)]
        plattice: PathBuf,
        #[arg(long)]
        weight: i64,
        /// q-expansion files, one per basis element.
        #[arg(long, num_args = 1.., required = true)]
        basis: Vec<PathBuf>,
        /// ζ-mask of each basis element (default 0).
        #[arg(long, num_args = 1..)]
        mask: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Membership residuals and Berezinian of a matrix file.
    Check { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum QName {
    Eta2,
    Theta2,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Relation and membership residuals.
    Validate {
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        preset: Option<Preset>,
    },
    /// Write a preset as a lattice file.
    Export {
        preset: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DeformCmd {
    /// H¹ dimensions by Fox calculus and by closed form.
    Classify {
        #[command(flatten)]
        src: Source,
    },
    /// Write the deformation along one infinitesimal class as a plattice file.
    Export {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 0)]
        class: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relation, membership and relative-body residuals of a plattice file.
    Check { plattice: PathBuf },
    /// Parabolic normal form, admissible exponents and intertwiner residuals.
    Omega {
        plattice: PathBuf,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        #[arg(long, default_value_t = 1_000_000)]
        bound: u64,
    },
}

/// A failed check (exit 1) or a usage/input problem (exit 2).
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Format(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn preset(p: Preset) -> superhp::Result<Lattice> {
    match p {
        Preset::Sl2z => build_embedded_sl2z(1),
        Preset::EtaEven => build_eta_lattice(EtaCase::Even),
        Preset::EtaOdd => build_eta_lattice(EtaCase::Odd),
        Preset::Genus2 => build_genus2([0.3, 1.1, -0.4, 2.0]),
        Preset::PuncturedTorus => build_punctured_torus(
            Complex64::from_polar(1.0, std::f64::consts::TAU / 6.0),
            Complex64::from_polar(1.0, std::f64::consts::TAU / 3.0),
            0.7,
            1.9,
        ),
    }
}

fn load(src: &Source) -> Result<Lattice, Failure> {
    match (&src.preset, &src.lattice) {
        (Some(p), _) => Ok(preset(*p)?),
        (None, Some(path)) => Ok(Lattice::from_file(&read_json::<LatticeFile>(path)?)?),
        (None, None) => Err(Failure::Usage("pass --preset or --lattice".into())),
    }
}

fn group_check(cfg: &Config, file: &Path) -> Outcome {
    let m = SuperMatrix::from_file(&read_json::<MatrixFile>(file)?)?;
    let rep = m.membership(cfg.tol);
    match cfg.format {
        Format::Json => print_json(&rep)?,
        Format::Tsv => {
            println!("unitary_residual\tber_residual\teven\tmember");
            println!("{:e}\t{:e}\t{}\t{}", rep.unitary_residual, rep.ber_residual, rep.even, rep.member);
        }
        Format::Text => {
            println!("g I g* = I residual  {:.3e}", rep.unitary_residual);
            println!("Ber g = 1 residual   {:.3e}", rep.ber_residual);
            println!("even                 {}", rep.even);
            if let Some(e) = &rep.ber_error {
                println!("Berezinian error     {e}");
            }
            println!("member               {}", rep.member);
        }
    }
    Ok(rep.member)
}

fn qexp(cfg: &Config, name: QName) -> Outcome {
    let q = match name {
        QName::Eta2 => eta_squared(cfg.trunc),
        QName::Theta2 => theta_squared(cfg.trunc),
    };
    match cfg.format {
        Format::Json => print_json(&q.to_file())?,
        _ => {
            println!("# nu0 = {}, q_den = {}", q.nu0, q.q_den);
            println!("n\texponent\tre\tim");
            for (n, c) in q.coeffs.iter().enumerate() {
                println!("{n}\t{}\t{}\t{}", q.exponent_exact(n), c.re, c.im);
            }
        }
    }
    Ok(true)
}

fn lattice_validate(cfg: &Config, lat: &Lattice) -> Outcome {
    let rep = lat.validate(cfg.tol);
    // recompute the relations in reverse order as an independent pass
    let mut again = Vec::new();
    for w in lat.relations.iter().rev() {
        let m = lat.eval_word(w)?;
        again.push(m.dist(&SuperMatrix::identity(lat.alg)));
    }
    again.reverse();
    let agree = rep
        .relation_residuals
        .iter()
        .zip(&again)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    match cfg.format {
        Format::Json => print_json(&json!({ "report": rep, "second_pass": again, "passes_agree": agree }))?,
        _ => {
            println!("relation\tresidual\tsecond_pass");
            for ((w, a), b) in lat.relations.iter().zip(&rep.relation_residuals).zip(&again) {
                let text: Vec<String> = w.iter().map(|(g, e)| format!("{g}^{e}")).collect();
                println!("{}\t{a:.3e}\t{b:.3e}", text.join(" "));
            }
            for (name, r) in &rep.membership_residuals {
                println!("member {name}\t{r:.3e}\t");
            }
            println!("gamma0 order\t{:.3e}\t", rep.gamma0_order_residual);
            println!("gamma0 central\t{:.3e}\t", rep.gamma0_central_residual);
            for (name, r) in &rep.constraint_residuals {
                println!("constraint {name}\t{r:.3e}\t");
            }
            if cfg.format == Format::Text {
                println!("valid: {}, passes agree: {agree}", rep.ok);
            }
        }
    }
    Ok(rep.ok && agree)
}

#[derive(Serialize)]
struct DimsRow {
    k: i64,
    dim_v: usize,
    c1: i64,
    dim_sm: Option<i64>,
    dim_ss: Option<i64>,
}

fn dims(cfg: &Config, lat: &Lattice, rho: usize, k_from: i64, k_to: i64) -> Outcome {
    if k_from > k_to {
        return Err(Failure::Usage(format!("empty range {k_from}..{k_to}")));
    }
    let calc = DimensionCalculator::new(lat, rho)?;
    let k1 = match cfg.k1 {
        Some(k) => k,
        None => calc.default_k1(300.max(k_to))?,
    };
    let calc = calc.with_k1(k1);
    let rows: Vec<DimsRow> = (k_from..=k_to)
        .into_par_iter()
        .map(|k| {
            let rep = calc.report(k)?;
            let certified = k >= k1;
            Ok(DimsRow {
                k,
                dim_v: rep.rank,
                c1: rep.c1,
                dim_sm: certified.then_some(rep.dim_sm),
                dim_ss: certified.then_some(rep.dim_ss),
            })
        })
        .collect::<superhp::Result<_>>()?;
    let cell = |x: Option<i64>| x.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
    match cfg.format {
        Format::Json => print_json(&json!({ "k1": k1, "rho": rho, "rows": rows }))?,
        _ => {
            if cfg.format == Format::Text {
                println!("# k1 = {k1}; dimensions below k1 are not certified");
            }
            println!("k\tdimV\tc1\tdim_sM\tdim_sS");
            for r in &rows {
                println!("{}\t{}\t{}\t{}\t{}", r.k, r.dim_v, r.c1, cell(r.dim_sm), cell(r.dim_ss));
            }
        }
    }
    Ok(true)
}

fn classify(cfg: &Config, lat: &Lattice) -> Outcome {
    let rep = h1_fox(lat, cfg.seed)?;
    let closed = match lat.family {
        Family::ExampleI { .. } | Family::EmbeddedSl2 => Some(h1_dims_example_i(lat)?),
        Family::ExampleIi { .. } => Some(h1_dims_example_ii(lat)?),
        _ => None,
    };
    let ok = closed.map(|c| c == rep.dims()).unwrap_or(true);
    match cfg.format {
        Format::Json => print_json(&json!({ "fox": rep, "closed_form": closed, "agree": ok }))?,
        _ => {
            println!("part\tfox\tclosed_form");
            let (e, o) = rep.dims();
            let c = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            println!("H1(g0)\t{e}\t{}", c(closed.map(|x| x.0)));
            println!("H1(g1)\t{o}\t{}", c(closed.map(|x| x.1)));
        }
    }
    Ok(ok)
}

fn deform_export(lat: &Lattice, class: usize, out: Option<&Path>) -> Outcome {
    let mut classes = infinitesimal_classes(lat)?;
    if class >= classes.len() {
        return Err(Failure::Usage(format!(
            "class {class} requested, the lattice has {} infinitesimal classes",
            classes.len()
        )));
    }
    let pl = classes.swap_remove(class);
    write_out(out, &serde_json::to_string_pretty(&pl.to_file())?)?;
    Ok(true)
}

fn load_plattice(path: &Path) -> Result<PLattice, Failure> {
    Ok(PLattice::from_file(&read_json::<PLatticeFile>(path)?)?)
}

fn deform_check(cfg: &Config, pl: &PLattice) -> Outcome {
    let rel = pl.relation_residual();
    let body = pl.rel_body_residual();
    let rep = pl.lattice.validate(cfg.tol);
    let ok = rep.ok && rel <= cfg.tol && body <= cfg.tol;
    match cfg.format {
        Format::Json => print_json(&json!({
            "relation_residual": rel,
            "rel_body_residual": body,
            "validation": rep,
            "ok": ok,
        }))?,
        _ => {
            println!("check\tresidual");
            println!("relations\t{rel:.3e}");
            println!("relative body\t{body:.3e}");
            for (name, r) in &rep.membership_residuals {
                println!("member {name}\t{r:.3e}");
            }
        }
    }
    Ok(ok)
}

fn deform_omega(cfg: &Config, pl: &PLattice, count: usize, bound: u64) -> Outcome {
    let pnf = ParabolicNormalForm::from_plattice(pl)?;
    let terms = dirichlet_series(pnf.eps0, &pnf.e0, count, bound)?;
    let (ad, comm) = chi_tilde_properties(&pnf, &terms)?;
    let term = terms
        .last()
        .ok_or_else(|| Failure::Check("no admissible exponent below the bound".into()))?;
    let om = OmegaN::new(&pnf, term)?;
    let alg = pnf.g0.algebra();
    let mut squares = 0.0f64;
    for z in [Complex64::new(0.1, 1.0), Complex64::new(-0.3, 0.7), Complex64::new(0.45, 1.6)] {
        let p = SuperPoint::standard(alg, z);
        for t in [0.3, -0.8, 1.7] {
            let (a, b) = om.intertwining_residuals(&pnf, &p, t)?;
            squares = squares.max(a).max(b);
        }
    }
    let ok = ad <= cfg.tol && comm <= cfg.tol && squares <= cfg.tol.max(1e-8);
    match cfg.format {
        Format::Json => print_json(&json!({
            "terms": terms,
            "ad_invariance": ad,
            "commutation": comm,
            "intertwining": squares,
            "ok": ok,
        }))?,
        _ => {
            println!("S\tD");
            for t in &terms {
                let d: Vec<String> = t.d.iter().map(|x| format!("{x:.6}")).collect();
                println!("{}\t{}", t.s, d.join(","));
            }
            println!("# Ad-invariance {ad:.3e}, commutation {comm:.3e}, intertwining {squares:.3e}");
        }
    }
    Ok(ok)
}

#[derive(Serialize)]
struct BundleTerm {
    level: usize,
    monomial: String,
    mask: u32,
    zpow: u32,
    q: QExpansionFile,
}

fn bundle(l: &LiftedForm) -> Vec<BundleTerm> {
    let spec = l.lifted.alg.param;
    l.lifted
        .terms
        .iter()
        .map(|t| BundleTerm {
            level: spec.degree(t.pkey),
            monomial: spec.monomial_name(t.pkey),
            mask: t.mask,
            zpow: t.zpow,
            q: t.q.to_file(),
        })
        .collect()
}

fn adapt(cfg: &Config, plattice: &Path, k: i64, basis: &[PathBuf], masks: &[u32], out: Option<&Path>) -> Outcome {
    if !masks.is_empty() && masks.len() != basis.len() {
        return Err(Failure::Usage("--mask needs one value per --basis file".into()));
    }
    let pl = load_plattice(plattice)?;
    let alg = Algebra::new(ParamSpec::Trivial, pl.base.r())?;
    let config = LiftConfig {
        tol: cfg.tol.max(1e-7),
        ..LiftConfig::default()
    };
    let prob = LiftProblem { plat: &pl, k, config };
    let mut lifted = Vec::new();
    for (i, path) in basis.iter().enumerate() {
        let q = QExpansion::from_file(&read_json::<QExpansionFile>(path)?)?;
        let mask = masks.get(i).copied().unwrap_or(0);
        if mask >= 1 << alg.r() {
            return Err(Failure::Usage(format!("mask {mask} out of range for r = {}", alg.r())));
        }
        lifted.push(lift(&prob, &QSuperFunction::monomial(alg, mask, q))?);
    }
    let rep = parammain_check(&lifted)?;
    let ok = rep.rel_body_exact && rep.parity_preserved && rep.certificate.certified;
    let bundles: Vec<_> = lifted.iter().map(bundle).collect();
    write_out(out, &serde_json::to_string_pretty(&bundles)?)?;
    let summary = json!({ "report": rep, "levels": lifted.iter().map(|l| &l.levels).collect::<Vec<_>>() });
    match cfg.format {
        Format::Json => eprintln!("{}", serde_json::to_string_pretty(&summary)?),
        _ => {
            for (i, l) in lifted.iter().enumerate() {
                eprintln!("basis {i}: invariance residual {:.3e}", l.residual);
            }
            let c = &rep.certificate;
            eprintln!(
                "free-module certificate: rank {} of {}, span {} = {} x {}: {}",
                c.body_rank, c.d, c.dim_span, c.d, c.dim_p, c.certified
            );
        }
    }
    Ok(ok)
}

fn selftest(cfg: &Config) -> Outcome {
    let outcomes = run_all(&Tolerances::default(), cfg.seed);
    let ok = outcomes.iter().all(|o| o.passed);
    match cfg.format {
        Format::Json => print_json(&outcomes)?,
        _ => {
            for o in &outcomes {
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                println!("{:>2}\t{}\t{verdict}\t{}\t{:.2}s", o.id, o.title, o.detail, o.seconds);
            }
        }
    }
    Ok(ok)
}

fn run(cli: &Cli) -> Outcome {
    let cfg = &cli.cfg;
    match &cli.cmd {
        Command::Group { cmd: GroupCmd::Check { file } } => group_check(cfg, file),
        Command::Qexp { name } => qexp(cfg, *name),
        Command::Lattice { cmd } => match cmd {
            LatticeCmd::Validate { file, preset: p } => {
                let lat = match (file, p) {
                    (Some(f), _) => Lattice::from_file(&read_json::<LatticeFile>(f)?)?,
                    (None, Some(p)) => preset(*p)?,
                    (None, None) => return Err(Failure::Usage("pass a lattice file or --preset".into())),
                };
                lattice_validate(cfg, &lat)
            }
            LatticeCmd::Export { preset: p, out } => {
                write_out(out.as_deref(), &serde_json::to_string_pretty(&preset(*p)?.to_file())?)?;
                Ok(true)
            }
        },
        Command::Dims { src, rho, k_from, k_to, .. } => dims(cfg, &load(src)?, *rho, *k_from, *k_to),
        Command::Deform { cmd } => match cmd {
            DeformCmd::Classify { src } => classify(cfg, &load(src)?),
            DeformCmd::Export { src, class, out } => deform_export(&load(src)?, *class, out.as_deref()),
            DeformCmd::Check { plattice } => deform_check(cfg, &load_plattice(plattice)?),
            DeformCmd::Omega { plattice, terms, bound } => deform_omega(cfg, &load_plattice(plattice)?, *terms, *bound),
        },
        Command::Adapt { plattice, weight, basis, mask, out } => adapt(cfg, plattice, *weight, basis, mask, out.as_deref()),
        Command::Selftest => selftest(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.cfg.threads).build_global() {
            eprintln!("superhp: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("superhp: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("superhp: {msg}");
            ExitCode::from(2)
        }
    }
}

//! One binary, verb-style subcommands over the toolkit.
//!
//! Exit codes: 0 on success, 1 on a domain error (the library's error
//! message goes to stderr), 2 on a usage error. All randomness comes from
//! a seeded ChaCha8 generator, so structured output is reproducible
//! bit-for-bit for a fixed command line. Every flag can also be set
//! through an environment variable with the `CHARP_` prefix.

use charp::automata::{kernel_from_automaton, Dfao};
use charp::christol::{
    automaton_to_polynomial, polynomial_to_automaton, AlgebraicSeries, KernelOptions,
};
use charp::eqsys::GoodSystem;
use charp::field::is_prime;
use charp::parse::parse_mpoly;
use charp::series::{hensel_expand, Series};
use charp::tyszka::{
    build_network, characterizable_subfield, counterexample_311, enumerate_pseudo_morphisms,
    fq_element, propagate_closure, witness_from_polynomial, witness_tc_series, Ambient,
};
use charp::{Error, SmallField};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "charp", version, about = "Exact computer algebra over F_p((X))")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Human, env = "CHARP_FORMAT")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Args)]
struct Common {
    /// Prime modulus
    #[arg(long, default_value_t = 2, value_parser = parse_prime, env = "CHARP_P")]
    p: u64,

    /// Truncation order for series expansions (at least 8)
    #[arg(long, default_value_t = 128, value_parser = parse_trunc, env = "CHARP_TRUNC")]
    trunc: i64,

    /// Seed for the ChaCha8 generator behind every random value
    #[arg(long, default_value_t = 0, env = "CHARP_SEED")]
    seed: u64,

    /// Kernel-size budget
    #[arg(long, default_value_t = 64, value_parser = parse_positive, env = "CHARP_MAX_KERNEL")]
    max_kernel: u64,

    /// Iteration budget for fixpoint loops
    #[arg(long, default_value_t = 10_000, value_parser = parse_positive, env = "CHARP_MAX_ITERS")]
    max_iters: u64,
}

fn parse_prime(s: &str) -> Result<u64, String> {
    let p: u64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > charp::field::MAX_PRIME {
        return Err(format!("modulus {p} exceeds the supported bound"));
    }
    if is_prime(p) { Ok(p) } else { Err(format!("{p} is not prime")) }
}

fn parse_trunc(s: &str) -> Result<i64, String> {
    let n: i64 = s.parse().map_err(|e| format!("{e}"))?;
    if n >= 8 { Ok(n) } else { Err("truncation order must be at least 8".to_string()) }
}

fn parse_positive(s: &str) -> Result<u64, String> {
    let n: u64 = s.parse().map_err(|e| format!("{e}"))?;
    if n > 0 { Ok(n) } else { Err("bound must be positive".to_string()) }
}

#[derive(Subcommand)]
enum Command {
    /// Truncated Laurent series operations
    Series {
        #[command(subcommand)]
        cmd: SeriesCmd,
    },
    /// Automata with output
    Automaton {
        #[command(subcommand)]
        cmd: AutomatonCmd,
    },
    /// Kernel of the sequence generated by an automaton
    Kernel {
        /// Automaton file
        #[arg(long)]
        automaton: String,
    },
    /// Conversions between automata and annihilating polynomials
    Christol {
        #[command(subcommand)]
        cmd: ChristolCmd,
    },
    /// Pseudo-morphism witness machinery
    Tyszka {
        #[command(subcommand)]
        cmd: TyszkaCmd,
    },
    /// Good equational systems
    Eqsys {
        #[command(subcommand)]
        cmd: EqsysCmd,
    },
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Apply the section operator for one digit
    Cartier {
        #[arg(long)]
        digit: u64,
        /// Series in the text format, or @path to read a file
        #[arg(long)]
        series: String,
    },
    /// Rebuild a series from its p section parts
    Reassemble {
        /// The p parts, in digit order
        #[arg(long, required = true, num_args = 1..)]
        part: Vec<String>,
    },
    /// Valuation norm of a series
    Norm {
        #[arg(long)]
        series: String,
    },
    /// Multiplicative inverse
    Invert {
        #[arg(long)]
        series: String,
    },
    /// Tail section at an exponent
    Tail {
        #[arg(long)]
        series: String,
        #[arg(long)]
        j: i64,
    },
    /// Expand the series root of a polynomial from a residue seed
    Hensel {
        /// Univariate polynomial in Y1 over `F_p[X]`
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 0)]
        root_seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// A reproducible pseudo-random series
    Random {
        #[arg(long, default_value_t = 0)]
        val: i64,
        #[arg(long, default_value_t = 32)]
        len: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum AutomatonCmd {
    /// Run the automaton on a digit word (most significant digit first)
    Eval {
        #[arg(long)]
        file: String,
        /// Digits, e.g. 101
        #[arg(long, default_value = "")]
        word: String,
    },
    /// The n-th term of the generated sequence
    Nth {
        #[arg(long)]
        file: String,
        #[arg(long)]
        n: u64,
    },
    /// Observational minimization
    Minimize {
        #[arg(long)]
        file: String,
    },
    /// Swap the digit-reading convention
    Reverse {
        #[arg(long)]
        file: String,
    },
}

#[derive(Subcommand)]
enum ChristolCmd {
    /// Derive a verified annihilating polynomial from an automaton
    ToPoly {
        /// Automaton file
        automaton: String,
        #[arg(long, default_value_t = 256, value_parser = parse_trunc, env = "CHARP_VERIFY_PREC")]
        verify_prec: i64,
    },
    /// Build the automaton of an algebraic series
    ToAutomaton {
        /// Univariate polynomial in Y1 over `F_p[X]`
        poly: String,
        #[arg(long, default_value_t = 0)]
        root_seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum TyszkaCmd {
    /// Witness network of an algebraic series, with propagation
    Witness {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 0)]
        root_seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Strengthened witness forcing the series itself
    TcWitness {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 0)]
        root_seed: u64,
        /// Root-separation order
        #[arg(long, default_value_t = 0)]
        sep: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate all pseudo-morphisms on a subset of F_q
    Enumerate {
        /// Field size (prime power up to 512)
        #[arg(long)]
        field: u64,
        /// Comma-separated element indices
        #[arg(long)]
        set: String,
    },
    /// Section-uniqueness demonstration on two random series
    Counterexample {
        #[command(flatten)]
        common: Common,
    },
    /// Characterizable subset of F_q
    Subfield {
        #[arg(long)]
        field: u64,
    },
}

#[derive(Subcommand)]
enum EqsysCmd {
    /// Confine a variable to one polynomial
    Simplify {
        #[arg(long)]
        file: String,
        /// 1-based variable index
        #[arg(long)]
        var: usize,
    },
    /// Split one polynomial through the section decomposition
    Split {
        #[arg(long)]
        file: String,
        /// Index of the polynomial in the system
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Eliminate a variable confined to one polynomial
    Eliminate {
        #[arg(long)]
        file: String,
        #[arg(long)]
        var: usize,
    },
    /// Full two-phase reduction to per-target annihilators
    Reduce {
        #[arg(long)]
        file: String,
        /// Print the step log
        #[arg(long)]
        trace: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_series(arg: &str) -> Result<Series, Error> {
    let text = match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::Parse {
            what: "series",
            detail: format!("{path}: {e}"),
        })?,
        None => arg.to_string(),
    };
    Series::parse(text.trim())
}

fn read_file(path: &str, what: &'static str) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse { what, detail: format!("{path}: {e}") })
}

fn run(cli: Cli) -> Result<(), Error> {
    let structured = cli.format == Format::Structured;
    match cli.command {
        Command::Series { cmd } => run_series(cmd, structured),
        Command::Automaton { cmd } => run_automaton(cmd, structured),
        Command::Kernel { automaton } => {
            let m = Dfao::parse(&read_file(&automaton, "automaton")?)?;
            let table = kernel_from_automaton(&m)?;
            if !table.lz_invariant() {
                eprintln!(
                    "warning: reading a leading zero moves the initial state; \
                     term indexing is convention-dependent"
                );
            }
            if structured {
                println!("kernel p={} size={}", table.p(), table.size());
                for e in 0..table.size() {
                    let images: Vec<String> =
                        (0..table.p()).map(|d| table.image(e, d).to_string()).collect();
                    println!(
                        "element id={e} label={} output={} images={}",
                        table.labels()[e],
                        table.output(e),
                        images.join(",")
                    );
                }
            } else {
                println!("kernel of size {}", table.size());
                for e in 0..table.size() {
                    let images: Vec<String> = (0..table.p())
                        .map(|d| format!("{d}->{}", table.labels()[table.image(e, d)]))
                        .collect();
                    println!(
                        "  {:<12} value(0)={}  {}",
                        table.labels()[e],
                        table.output(e),
                        images.join("  ")
                    );
                }
            }
            Ok(())
        }
        Command::Christol { cmd } => run_christol(cmd, structured),
        Command::Tyszka { cmd } => run_tyszka(cmd, structured),
        Command::Eqsys { cmd } => run_eqsys(cmd, structured),
    }
}

fn run_series(cmd: SeriesCmd, structured: bool) -> Result<(), Error> {
    match cmd {
        SeriesCmd::Cartier { digit, series } => {
            let s = read_series(&series)?;
            println!("{}", s.cartier(digit)?);
        }
        SeriesCmd::Reassemble { part } => {
            let parts: Vec<Series> =
                part.iter().map(|s| read_series(s)).collect::<Result<_, _>>()?;
            println!("{}", Series::reassemble(&parts)?);
        }
        SeriesCmd::Norm { series } => {
            let s = read_series(&series)?;
            println!("{}", s.norm());
        }
        SeriesCmd::Invert { series } => {
            let s = read_series(&series)?;
            println!("{}", s.invert()?);
        }
        SeriesCmd::Tail { series, j } => {
            let s = read_series(&series)?;
            println!("{}", s.tail_section(j)?);
        }
        SeriesCmd::Hensel { poly, root_seed, common } => {
            let annihilator = parse_mpoly(common.p, &poly, 1)?;
            let f = hensel_expand(&annihilator, root_seed, common.trunc)?;
            if !structured {
                println!("root of {annihilator} with residue {root_seed}:");
            }
            println!("{f}");
        }
        SeriesCmd::Random { val, len, common } => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            println!("{}", Series::random(&mut rng, common.p, val, len));
        }
    }
    Ok(())
}

fn run_automaton(cmd: AutomatonCmd, _structured: bool) -> Result<(), Error> {
    match cmd {
        AutomatonCmd::Eval { file, word } => {
            let m = Dfao::parse(&read_file(&file, "automaton")?)?;
            let digits: Vec<u64> = word
                .chars()
                .map(|c| {
                    c.to_digit(10).map(u64::from).ok_or(Error::Parse {
                        what: "word",
                        detail: format!("bad digit {c}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            println!("{}", m.eval_word(&digits)?);
        }
        AutomatonCmd::Nth { file, n } => {
            let m = Dfao::parse(&read_file(&file, "automaton")?)?;
            println!("{}", m.nth_term(n));
        }
        AutomatonCmd::Minimize { file } => {
            let m = Dfao::parse(&read_file(&file, "automaton")?)?;
            print!("{}", m.minimize());
        }
        AutomatonCmd::Reverse { file } => {
            let m = Dfao::parse(&read_file(&file, "automaton")?)?;
            print!("{}", m.reverse()?);
        }
    }
    Ok(())
}

fn run_christol(cmd: ChristolCmd, structured: bool) -> Result<(), Error> {
    match cmd {
        ChristolCmd::ToPoly { automaton, verify_prec } => {
            let m = Dfao::parse(&read_file(&automaton, "automaton")?)?;
            let poly = automaton_to_polynomial(&m, verify_prec)?;
            if structured {
                println!("{poly}");
            } else {
                println!("annihilator (verified below X^{verify_prec}): {poly}");
            }
        }
        ChristolCmd::ToAutomaton { poly, root_seed, common } => {
            let annihilator = parse_mpoly(common.p, &poly, 1)?;
            let f = AlgebraicSeries::new(annihilator, root_seed, common.trunc)?;
            let opts =
                KernelOptions { max_size: common.max_kernel as usize, ..Default::default() };
            let (m, kernel) = polynomial_to_automaton(&f, &opts)?;
            if !structured {
                println!(
                    "kernel of size {} certified at truncation (precision {})",
                    kernel.size(),
                    kernel.precision
                );
            }
            print!("{m}");
        }
    }
    Ok(())
}

fn run_tyszka(cmd: TyszkaCmd, structured: bool) -> Result<(), Error> {
    match cmd {
        TyszkaCmd::Witness { poly, root_seed, common } => {
            let annihilator = parse_mpoly(common.p, &poly, 1)?;
            let f = AlgebraicSeries::new(annihilator, root_seed, common.trunc)?;
            let (net, target) = witness_from_polynomial(&f)?;
            let outcome = propagate_closure(&net, &[])?;
            if structured {
                print!("{}", net.report_structured(Some(&outcome)));
            } else {
                println!("witness set for a root of {}", f.annihilator());
                println!("target: {}", target.description);
                print!("{}", net.report_human(Some(&outcome)));
            }
        }
        TyszkaCmd::TcWitness { poly, root_seed, sep, common } => {
            let annihilator = parse_mpoly(common.p, &poly, 1)?;
            let f = AlgebraicSeries::new(annihilator, root_seed, common.trunc)?;
            let (net, _) = witness_tc_series(&f, sep)?;
            let outcome = propagate_closure(&net, &[])?;
            let xi = net.find_series(f.expansion()).expect("the series is an element");
            let forced = outcome
                .forced_value(xi)
                .map(|v| v.eq_mod(f.expansion()).0)
                .unwrap_or(false);
            if structured {
                println!("forced={forced}");
                print!("{}", net.report_structured(Some(&outcome)));
            } else {
                println!(
                    "phi(x) {} to the expansion itself",
                    if forced { "is forced equal" } else { "was NOT forced" }
                );
                print!("{}", net.report_human(Some(&outcome)));
            }
        }
        TyszkaCmd::Enumerate { field, set } => {
            let small = SmallField::new(field)?;
            let values: Vec<u16> = set
                .split(',')
                .map(|v| {
                    v.trim().parse::<u16>().map_err(|e| Error::Parse {
                        what: "set",
                        detail: e.to_string(),
                    })
                })
                .collect::<Result<_, _>>()?;
            let elements = values.iter().map(|&v| fq_element(&small, v)).collect();
            let names: Vec<String> = values.iter().map(|&v| small.name(v)).collect();
            let net = build_network(Ambient::Finite(small), elements)?;
            let morphisms = enumerate_pseudo_morphisms(&net)?;
            if structured {
                println!("count={}", morphisms.len());
                for phi in &morphisms {
                    let entries: Vec<String> = phi.iter().map(u16::to_string).collect();
                    println!("phi={}", entries.join(","));
                }
            } else {
                println!("{} pseudo-morphisms on {{{}}}", morphisms.len(), names.join(", "));
            }
        }
        TyszkaCmd::Counterexample { common } => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let len = common.trunc.max(8) as usize;
            let f = Series::random(&mut rng, common.p, 0, len);
            let g = Series::random(&mut rng, common.p, 0, len);
            let report = counterexample_311(&f, &g)?;
            if structured {
                println!(
                    "forced={} degenerate={} match_precision={}",
                    report.forced,
                    report.degenerate,
                    report.match_precision.map_or("none".into(), |m| m.to_string())
                );
                print!("{}", report.network.report_structured(Some(&report.outcome)));
            } else {
                print!("{}", report.human());
            }
        }
        TyszkaCmd::Subfield { field } => {
            let fixed = characterizable_subfield(field)?;
            let small = SmallField::new(field)?;
            if structured {
                let entries: Vec<String> = fixed.iter().map(u16::to_string).collect();
                println!("fixed={}", entries.join(","));
            } else {
                let names: Vec<String> = fixed.iter().map(|&v| small.name(v)).collect();
                println!("{{{}}}", names.join(", "));
            }
        }
    }
    Ok(())
}

fn run_eqsys(cmd: EqsysCmd, structured: bool) -> Result<(), Error> {
    match cmd {
        EqsysCmd::Simplify { file, var } => {
            let sys = GoodSystem::parse(&read_file(&file, "system")?)?;
            if var == 0 || var > sys.nvars() {
                return Err(Error::Precondition("variable index out of range".to_string()));
            }
            let mut trace = Vec::new();
            let out = sys.simplify_over_variable(var - 1, &mut trace)?;
            print!("{out}");
        }
        EqsysCmd::Split { file, index } => {
            let sys = GoodSystem::parse(&read_file(&file, "system")?)?;
            let Some(poly) = sys.sigma().get(index) else {
                return Err(Error::Precondition("polynomial index out of range".to_string()));
            };
            let gco = charp::tyszka::GeneralizedCartier::instance(sys.p())?;
            let parts = charp::eqsys::split_polynomial(poly, &gco, sys.base())?;
            for part in parts {
                println!("poly={part}");
            }
        }
        EqsysCmd::Eliminate { file, var } => {
            let sys = GoodSystem::parse(&read_file(&file, "system")?)?;
            if var == 0 || var > sys.nvars() {
                return Err(Error::Precondition("variable index out of range".to_string()));
            }
            let mut trace = Vec::new();
            let out = sys.eliminate_variable(var - 1, &mut trace)?;
            print!("{out}");
        }
        EqsysCmd::Reduce { file, trace } => {
            let sys = GoodSystem::parse(&read_file(&file, "system")?)?;
            let outcome = sys.reduce()?;
            if trace {
                for line in &outcome.trace {
                    println!("# {line}");
                }
            }
            if structured {
                for r in &outcome.annihilators {
                    println!("annihilator var={} poly={}", r.var_name, r.annihilator);
                }
            } else {
                print!("{outcome}");
            }
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use simshot::commands::{self, exit_code};
use simshot::config::{RunConfig, KEYS};
use simshot::Error;

fn command(name: &'static str, about: &'static str, input: Option<&'static str>) -> Command {
    let mut c = Command::new(name)
        .about(about)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("key = value config file; missing keys take their defaults"),
        );
    if let Some(help) = input {
        c = c.arg(Arg::new("input").long("input").value_name("PATH").required(true).help(help));
    }
    for (key, doc) in KEYS {
        c = c.arg(Arg::new(*key).long(*key).value_name("VALUE").help(*doc));
    }
    c
}

fn cli() -> Command {
    Command::new("simshot")
        .about("Structured illumination simulation, reconstruction and resolution analysis")
        .after_help(format!("config keys (each also accepted as --key value):\n{}", RunConfig::help()))
        .subcommand_required(true)
        .subcommand(command("simulate", "simulate a six-frame stack with truth and widefield", None))
        .subcommand(command("reconstruct", "reconstruct a super-resolved image", Some("stack directory")))
        .subcommand(command("analyze", "decorrelation resolution of an IMG1 image", Some("IMG1 image")))
        .subcommand(command("dataset", "simulated groups with reconstruction labels and a split", None))
}

fn load(m: &ArgMatches) -> Result<RunConfig, Error> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{p}: {e}")))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(name: &str, m: &ArgMatches) -> Result<(), Error> {
    let cfg = load(m)?;
    let input = m.try_get_one::<String>("input").ok().flatten().map(PathBuf::from);
    match name {
        "simulate" => {
            commands::cmd_simulate(&cfg)?;
            println!("wrote stack to {}", cfg.out.display());
        }
        "reconstruct" => {
            let rec = commands::cmd_reconstruct(&cfg, input.as_deref().unwrap())?;
            print!("{}", rec.report.render());
        }
        "analyze" => {
            let path = input.unwrap();
            let r = commands::cmd_analyze(&cfg, &path)?;
            print!("{}", commands::analysis_summary(&path, &r));
        }
        "dataset" => {
            let s = commands::cmd_dataset(&cfg)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!("train={} test={}", s.train.len(), s.test.len());
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

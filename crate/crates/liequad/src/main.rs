use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use liequad::cli::{cmd_bracket, cmd_check, cmd_integrate, cmd_report, IntegrateMethod};

/// Integrability checks and quadrature integration for Hamiltonian systems
/// on symplectic, cosymplectic, contact, and cocontact phase spaces.
#[derive(Parser)]
#[command(name = "liequad", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the integrability hypotheses and print a JSON report
    Check { file: PathBuf },
    /// Print the bracket of two expressions and cross-check both routes
    Bracket { file: PathBuf, f: String, g: String },
    /// Integrate the dynamics and print a CSV trajectory
    Integrate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Rk4)]
        method: Method,
        /// Override the file's integration horizon
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        /// Override the file's step size
        #[arg(long)]
        h: Option<f64>,
    },
    /// Print the full diagnostic bundle as JSON
    Report { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rk4,
    Quadrature,
    Both,
}

impl From<Method> for IntegrateMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Rk4 => IntegrateMethod::Rk4,
            Method::Quadrature => IntegrateMethod::Quadrature,
            Method::Both => IntegrateMethod::Both,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Bracket { file, f, g } => cmd_bracket(&file, &f, &g),
        Command::Integrate { file, method, t_max, h } => {
            cmd_integrate(&file, method.into(), t_max, h)
        }
        Command::Report { file } => cmd_report(&file),
    };
    match result {
        Ok((out, code)) => {
            print!("{out}");
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

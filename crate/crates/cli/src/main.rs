mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use adaptstab::densesim::DenseError;
use adaptstab::metrics::MetricsError;
use adaptstab::prep::PrepError;
use adaptstab::tableau::TableauError;

#[derive(Parser, Debug)]
#[command(name = "adaptstab", version, about = "Stabilizer complexity indicators and shallow adaptive state preparation")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile and verify a code-state preparation circuit.
    Prep {
        /// Code file or `builtin:NAME` (repetitionN, steane, toricL, bell).
        code: String,
        /// `auto` or a JSON file `{s1, s2, phi}`.
        #[arg(long, default_value = "auto")]
        partition: String,
        /// Number of random trials, or `exhaustive`.
        #[arg(long, default_value = "exhaustive")]
        verify: String,
        /// Random trials added to an exhaustive run.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Write the circuit JSON here.
        #[arg(long)]
        out: Option<String>,
    },
    /// Stabilizer weight of a tableau JSON file or `builtin:ghzN|zeroN|plusN|CODE`.
    Weight {
        state: String,
        /// Cross-check against the rank-threshold oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Correlation strength of a state family such as `ghz:8` or `dicke:8,2`.
    Cor {
        family: String,
        #[arg(long, default_value_t = 1)]
        w: usize,
        /// Comma-separated qubits (default: all).
        #[arg(long)]
        region: Option<String>,
        /// `pauli` or `alt`.
        #[arg(long, default_value = "pauli")]
        method: String,
        /// Fixed single-site letters, e.g. `X,X`: min over pairs of |Cor|.
        #[arg(long)]
        pair: Option<String>,
    },
    /// Correlation range of a state family.
    Crange {
        family: String,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        w: usize,
        #[arg(long, default_value = "pauli")]
        method: String,
    },
    /// Trade-off bound checks for a circuit and its target state.
    Bounds {
        #[arg(long)]
        circuit: String,
        /// Tableau JSON or `builtin:...` as for `weight`.
        #[arg(long)]
        target: String,
        /// `all` or `grid:r`.
        #[arg(long, default_value = "all")]
        geometry: String,
        /// Fan-in bound (default: the circuit's largest fan-in, at least 2).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Build and verify the adaptive GHZ circuit.
    GhzDemo {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Anti-shallowness interval of a state family.
    Antishallow { family: String },
    /// Lightcone of qubits in a circuit.
    Lightcone {
        #[arg(long)]
        circuit: String,
        /// Comma-separated qubits.
        #[arg(long)]
        from: String,
        #[arg(long)]
        backward: bool,
        /// Follow measurement feed-forward.
        #[arg(long)]
        classical: bool,
        #[arg(long)]
        k: Option<usize>,
    },
}

/// Exit status of a finished command.
pub enum Status {
    Ok,
    VerificationFailed,
}

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_GUARD: u8 = 3;

/// Resource guards map to exit 3, everything else to 1.
fn exit_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<commands::GuardError>() {
            return EXIT_GUARD;
        }
        if let Some(e) = cause.downcast_ref::<DenseError>() {
            if matches!(e, DenseError::TooManyQubits { .. }) {
                return EXIT_GUARD;
            }
        }
        if let Some(e) = cause.downcast_ref::<MetricsError>() {
            if matches!(
                e,
                MetricsError::TooLarge { .. }
                    | MetricsError::Infeasible(_)
                    | MetricsError::Dense(DenseError::TooManyQubits { .. })
                    | MetricsError::Tableau(TableauError::TooLarge { .. })
            ) {
                return EXIT_GUARD;
            }
        }
        if let Some(TableauError::TooLarge { .. }) = cause.downcast_ref::<TableauError>() {
            return EXIT_GUARD;
        }
        if let Some(PrepError::Tableau(TableauError::TooLarge { .. })) = cause.downcast_ref::<PrepError>() {
            return EXIT_GUARD;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let start = Instant::now();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(&cli.command, cli.seed) {
        Ok(out) => {
            let report = serde_json::json!({
                "command": args,
                "inputs": out.inputs,
                "seed": cli.seed,
                "result": out.result,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("{} [{:.2?}]", out.summary, start.elapsed());
            match out.status {
                Status::Ok => ExitCode::SUCCESS,
                Status::VerificationFailed => ExitCode::from(EXIT_VERIFY),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_for(&e))
        }
    }
}

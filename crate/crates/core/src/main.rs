use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use femasm::bench::{self, BenchConfig};
use femasm::mesh::{unit_disk, unit_square};
use femasm::{assemble, Coefficients, ElasticParams, MatrixKind, Mesh, Strategy, WeightField};

#[derive(Parser)]
#[command(name = "femasm", version, about = "P1 finite element matrix assembly and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time every (kind, strategy) pair on unit-square meshes and write a CSV table.
    Bench(BenchArgs),
    /// Assemble one matrix from a mesh file and write it in MatrixMarket format.
    Assemble(AssembleArgs),
    /// Fit log-log complexity slopes to a benchmark CSV.
    Slopes {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a generated mesh file.
    Mesh(MeshArgs),
}

#[derive(Args)]
struct Physics {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Weight field for massw: quadratic (1 + x² + y²), one or linear (x + y).
    #[arg(long, default_value = "quadratic")]
    weight: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "mass,massw,stiff,elastic")]
    kinds: Vec<MatrixKind>,
    #[arg(long, value_delimiter = ',', default_value = "classical,optv0,optv1,optv2")]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512")]
    square_sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Per-cell limit in seconds for a single assembly.
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
    /// Number the triangles in a random order drawn from this seed instead of row by row.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    physics: Physics,
}

#[derive(Args)]
struct AssembleArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value = "stiff")]
    kind: MatrixKind,
    #[arg(long, default_value = "optv2")]
    strategy: Strategy,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    physics: Physics,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MeshShape {
    /// n × n unit square split into 2n² triangles.
    #[arg(long)]
    square: Option<usize>,
    /// Unit disk with n rings.
    #[arg(long)]
    disk: Option<usize>,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    shape: MeshShape,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> femasm::Result<()> {
    match cli.command {
        Command::Bench(a) => {
            if !(a.budget >= 0.0 && a.budget.is_finite()) {
                return Err(femasm::Error::InvalidArgument(format!("budget must be a nonnegative number, got {}", a.budget)));
            }
            let config = BenchConfig {
                kinds: a.kinds,
                strategies: a.strategies,
                square_sizes: a.square_sizes,
                repetitions: a.reps,
                budget: Duration::from_secs_f64(a.budget),
                lambda: a.physics.lambda,
                mu: a.physics.mu,
                weight: a.physics.weight,
                shuffle_seed: a.shuffle_seed,
            };
            // fail on an unwritable path before spending time on measurements
            std::fs::File::create(&a.out)?;
            let records = bench::run_bench(&config, |r| {
                let t = r.seconds.map(|t| format!("{t:.6}")).unwrap_or_else(|| "skipped".into());
                eprintln!("{:>8} {:>9} nq={:<9} {t}", r.kind.name(), r.strategy.name(), r.nq);
            })?;
            bench::write_csv_file(&records, &bench::default_metadata(), &a.out)?;
            eprintln!("wrote {}", a.out.display());
        }
        Command::Assemble(a) => {
            let mesh = Mesh::read(&a.mesh)?;
            let weight = WeightField::from_name(&a.physics.weight)?;
            let coef = Coefficients {
                weight: Some(&weight),
                elastic: Some(ElasticParams::new(a.physics.lambda, a.physics.mu)?),
            };
            let m = assemble(&mesh, a.kind, a.strategy, &coef)?;
            m.write_matrix_market(&a.out)?;
            eprintln!("{} {}x{} with {} nonzeros written to {}", a.kind, m.n_rows(), m.n_cols(), m.nnz(), a.out.display());
        }
        Command::Slopes { input } => {
            let records = bench::read_csv_file(&input)?;
            println!("kind,strategy,slope");
            for (kind, strategy, slope) in bench::slopes(&records) {
                match slope {
                    Ok(s) => println!("{kind},{strategy},{s:.3}"),
                    Err(e) => println!("{kind},{strategy},n/a ({e})"),
                }
            }
        }
        Command::Mesh(a) => {
            let mesh = match (a.shape.square, a.shape.disk) {
                (Some(n), _) => unit_square(n)?,
                (_, Some(n)) => unit_disk(n)?,
                _ => unreachable!("clap requires one shape"),
            };
            mesh.write(&a.out)?;
            eprintln!("nq={} nme={} written to {}", mesh.nq(), mesh.nme(), a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

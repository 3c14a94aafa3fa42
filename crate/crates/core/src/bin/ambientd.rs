use clap::Parser;

fn main() -> std::process::ExitCode {
    ambientd::cli::run(ambientd::cli::Cli::parse())
}

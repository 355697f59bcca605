use clap::Parser;

fn main() {
    let args = semidirac::cli::Args::parse();
    std::process::exit(semidirac::cli::main_with(args));
}

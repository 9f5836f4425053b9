use clap::Parser;

fn main() {
    let cli = dvflow_cli::Cli::parse();
    std::process::exit(dvflow_cli::execute(cli));
}

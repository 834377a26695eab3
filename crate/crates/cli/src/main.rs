use clap::Parser;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() {
    let cli = qhm_cli::Cli::parse();
    std::process::exit(qhm_cli::run(cli));
}

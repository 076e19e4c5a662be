use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = vesicle_cli::main_with(vesicle_cli::Cli::parse());
    std::process::exit(code);
}

fn main() {
    let verbose = std::env::args().any(|a| a == "--verbose" || a == "-v");
    env_logger::Builder::new()
        .filter_level(if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    std::process::exit(msbie::cli::main_with_args(std::env::args_os()));
}

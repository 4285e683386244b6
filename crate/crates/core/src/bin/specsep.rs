use specsep::cli;

fn main() {
    if let Err(e) = cli::configure_threads() {
        eprintln!("specsep: {e}");
        std::process::exit(e.exit_code());
    }
    std::process::exit(cli::main_with_args(std::env::args_os()));
}

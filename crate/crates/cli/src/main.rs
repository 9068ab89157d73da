fn main() {
    std::process::exit(recurlab_cli::dispatch(std::env::args_os()));
}

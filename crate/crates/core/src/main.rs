fn main() {
    std::process::exit(sinkless::cli::dispatch(std::env::args_os()));
}

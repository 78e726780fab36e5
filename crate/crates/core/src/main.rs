fn main() {
    std::process::exit(reid_mstc::cli::dispatch(std::env::args_os()));
}

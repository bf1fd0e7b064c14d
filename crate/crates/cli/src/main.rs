fn main() {
    std::process::exit(adl_engine::run_command(std::env::args_os()));
}

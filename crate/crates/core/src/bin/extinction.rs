fn main() {
    std::process::exit(extinction_core::cli::run(std::env::args_os()));
}

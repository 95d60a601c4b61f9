fn main() {
    std::process::exit(smooth_renorm::cli::main());
}

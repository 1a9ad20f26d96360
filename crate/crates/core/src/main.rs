fn main() {
    std::process::exit(semigroup_lab::cli::run(std::env::args_os()));
}

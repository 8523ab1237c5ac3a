use stabtune::cli;

fn main() {
    std::process::exit(cli::run());
}

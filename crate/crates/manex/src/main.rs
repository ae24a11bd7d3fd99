fn main() { std::process::exit(manex::cli::run()); }
